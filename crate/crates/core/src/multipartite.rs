//! Partitions of modes and the hierarchy conditions for `I^{G_n}` as a
//! multipartite quantity.
//!
//! The measure is defined mode-wise, so grouping modes into parties never
//! changes its value; the checks here make that and the monotonicity under
//! discarding parties executable on concrete states.

use serde::Serialize;
use thiserror::Error;

use crate::measures::i_gn;
use crate::state::{check_modes, GaussianState, StateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MultipartiteError {
    #[error("partition block {0} is empty")]
    EmptyBlock(usize),
    #[error("mode {0} appears in more than one block")]
    Overlap(usize),
    #[error("partition does not cover mode {0}")]
    NotCovering(usize),
    #[error("subset must be a nonempty proper subset of the modes")]
    NotProperSubset,
    #[error("refinement has {got} blocks, partition has {expected}")]
    BlockCountMismatch { expected: usize, got: usize },
    #[error("refinement block {0} is not a nonempty subset of the matching partition block")]
    NotRefinement(usize),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Ordered, pairwise disjoint, nonempty blocks of 0-based mode indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self, MultipartiteError> {
        let mut seen = std::collections::BTreeSet::new();
        for (i, b) in blocks.iter().enumerate() {
            if b.is_empty() {
                return Err(MultipartiteError::EmptyBlock(i));
            }
            for &m in b {
                if !seen.insert(m) {
                    return Err(MultipartiteError::Overlap(m));
                }
            }
        }
        Ok(Self { blocks })
    }

    /// One block per mode.
    pub fn finest(n: usize) -> Self {
        Self {
            blocks: (0..n).map(|k| vec![k]).collect(),
        }
    }

    /// A single block holding every mode.
    pub fn trivial(n: usize) -> Self {
        Self {
            blocks: vec![(0..n).collect()],
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// All modes in block order.
    pub fn modes(&self) -> Vec<usize> {
        self.blocks.iter().flatten().copied().collect()
    }

    fn check_covers(&self, n: usize) -> Result<(), MultipartiteError> {
        let modes = self.modes();
        check_modes(&modes, n)?;
        if let Some(missing) = (0..n).find(|k| !modes.contains(k)) {
            return Err(MultipartiteError::NotCovering(missing));
        }
        Ok(())
    }
}

/// Both sides of a hierarchy inequality `lhs ≤ rhs + tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HierarchyCheck {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// `I^{G_n}` of the state with its modes grouped by `partition`.
///
/// Modes are laid out in block order before evaluation; the value does not
/// depend on the grouping.
pub fn i_partitioned(state: &GaussianState, partition: &Partition, zero_tol: f64) -> Result<f64, MultipartiteError> {
    partition.check_covers(state.n())?;
    Ok(i_gn(&state.permute_modes(&partition.modes())?, zero_tol))
}

/// Reduced-state value against the full value for a nonempty proper subset.
pub fn check_hierarchy_reduction(
    state: &GaussianState,
    subset: &[usize],
    tol: f64,
    zero_tol: f64,
) -> Result<HierarchyCheck, MultipartiteError> {
    check_modes(subset, state.n())?;
    if subset.len() >= state.n() {
        return Err(MultipartiteError::NotProperSubset);
    }
    let lhs = i_gn(&state.reduce(subset)?, zero_tol);
    let rhs = i_gn(state, zero_tol);
    Ok(HierarchyCheck {
        holds: lhs <= rhs + tol,
        lhs,
        rhs,
    })
}

/// Coarse-graining check: `q` keeps a nonempty part `Q_j ⊆ P_j` of every
/// block of `p`, and the state reduced to `∪ Q_j` is compared with the whole.
pub fn check_hierarchy_refinement(
    state: &GaussianState,
    p: &Partition,
    q: &Partition,
    tol: f64,
    zero_tol: f64,
) -> Result<HierarchyCheck, MultipartiteError> {
    p.check_covers(state.n())?;
    if p.blocks.len() != q.blocks.len() {
        return Err(MultipartiteError::BlockCountMismatch {
            expected: p.blocks.len(),
            got: q.blocks.len(),
        });
    }
    for (j, (pb, qb)) in p.blocks.iter().zip(&q.blocks).enumerate() {
        if qb.is_empty() || qb.iter().any(|m| !pb.contains(m)) {
            return Err(MultipartiteError::NotRefinement(j));
        }
    }
    let lhs = i_gn(&state.reduce(&q.modes())?, zero_tol);
    let rhs = i_gn(state, zero_tol);
    Ok(HierarchyCheck {
        holds: lhs <= rhs + tol,
        lhs,
        rhs,
    })
}

/// Every nonempty proper subset of `0..n`, as sorted index lists.
pub fn proper_subsets(n: usize) -> Vec<Vec<usize>> {
    (1..(1usize << n) - 1)
        .map(|mask| (0..n).filter(|k| mask >> k & 1 == 1).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve, BathParams};
    use crate::linalg::Mat;
    use crate::sampling;
    use crate::state::{coherent_state, displaced_squeezed_thermal, two_mode_squeezed_vacuum, DEFAULT_ZERO_TOL};
    use nalgebra::{Complex, DVector};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ZT: f64 = DEFAULT_ZERO_TOL;

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![vec![0], vec![2, 1]]).is_ok());
        assert_eq!(
            Partition::new(vec![vec![0], vec![]]),
            Err(MultipartiteError::EmptyBlock(1))
        );
        assert_eq!(
            Partition::new(vec![vec![0, 1], vec![1]]),
            Err(MultipartiteError::Overlap(1))
        );
        let s = GaussianState::vacuum(3).unwrap();
        let p = Partition::new(vec![vec![0], vec![2]]).unwrap();
        assert_eq!(i_partitioned(&s, &p, ZT), Err(MultipartiteError::NotCovering(1)));
        let p = Partition::new(vec![vec![0, 1, 2, 3]]).unwrap();
        assert!(matches!(
            i_partitioned(&s, &p, ZT),
            Err(MultipartiteError::State(StateError::ModeOutOfRange { .. }))
        ));
    }

    #[test]
    fn partition_independence_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let s = sampling::random_state(&mut rng, 3);
        let v = i_gn(&s, ZT);
        assert_eq!(i_partitioned(&s, &Partition::trivial(3), ZT).unwrap(), v);
        let a = i_partitioned(&s, &Partition::finest(3), ZT).unwrap();
        let b = i_partitioned(&s, &Partition::new(vec![vec![0, 1], vec![2]]).unwrap(), ZT).unwrap();
        assert_eq!(a, b);
        let swapped = i_partitioned(&s, &Partition::new(vec![vec![2], vec![0, 1]]).unwrap(), ZT).unwrap();
        assert!((swapped - v).abs() <= 1e-12);
    }

    #[test]
    fn reduction_examples() {
        let a = displaced_squeezed_thermal(0.3, Complex::new(0.2, 0.6), Complex::new(0.0, 1.0)).unwrap();
        let b = displaced_squeezed_thermal(1.0, Complex::new(0.5, 0.0), Complex::new(2.0, 0.0)).unwrap();
        let mut cm = Mat::zeros(4, 4);
        cm.view_mut((0, 0), (2, 2)).copy_from(a.cm());
        cm.view_mut((2, 2), (2, 2)).copy_from(b.cm());
        let d = DVector::from_iterator(4, a.d().iter().chain(b.d().iter()).copied());
        let prod = GaussianState::new(d, cm).unwrap();
        let c = check_hierarchy_reduction(&prod, &[0], 1e-9, ZT).unwrap();
        assert!(c.holds);
        assert!((c.lhs - c.rhs).abs() < 1e-12);

        let p = BathParams::new(0.1, 1.5, 1.0, 15.0).unwrap();
        let s0 = two_mode_squeezed_vacuum(1.0).unwrap();
        for t in [0.0, 1.0, 5.0, 30.0] {
            assert!(
                check_hierarchy_reduction(&evolve(&s0, &p, t).unwrap(), &[0], 1e-9, ZT)
                    .unwrap()
                    .holds
            );
        }
        assert_eq!(
            check_hierarchy_reduction(&prod, &[0, 1], 1e-9, ZT),
            Err(MultipartiteError::NotProperSubset)
        );
        assert!(matches!(
            check_hierarchy_reduction(&prod, &[], 1e-9, ZT),
            Err(MultipartiteError::State(StateError::EmptySubset))
        ));
    }

    #[test]
    fn refinement_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let s = sampling::random_state(&mut rng, 4);
        let p = Partition::new(vec![vec![0, 1], vec![2, 3]]).unwrap();
        let c = check_hierarchy_refinement(&s, &p, &p, 1e-9, ZT).unwrap();
        assert!(c.holds && c.lhs == c.rhs);
        let q = Partition::new(vec![vec![1], vec![2]]).unwrap();
        assert!(check_hierarchy_refinement(&s, &p, &q, 1e-9, ZT).unwrap().holds);
        let bad = Partition::new(vec![vec![2], vec![3]]).unwrap();
        assert_eq!(
            check_hierarchy_refinement(&s, &p, &bad, 1e-9, ZT),
            Err(MultipartiteError::NotRefinement(0))
        );
        let short = Partition::new(vec![vec![0]]).unwrap();
        assert!(matches!(
            check_hierarchy_refinement(&s, &p, &short, 1e-9, ZT),
            Err(MultipartiteError::BlockCountMismatch { .. })
        ));

        let coh = coherent_state(&[Complex::new(0.0, 1.0), Complex::new(1.0, 0.0)]).unwrap();
        let st = evolve(&coh, &BathParams::new(0.1, 1.5, 1.0, 1.0).unwrap(), 2.0).unwrap();
        let c = check_hierarchy_refinement(
            &st,
            &Partition::trivial(2),
            &Partition::new(vec![vec![1]]).unwrap(),
            1e-9,
            ZT,
        )
        .unwrap();
        assert!(c.holds);
    }

    #[test]
    fn proper_subset_enumeration() {
        assert_eq!(proper_subsets(2), vec![vec![0], vec![1]]);
        assert_eq!(proper_subsets(3).len(), 6);
        assert_eq!(proper_subsets(4).len(), 14);
    }

    #[test]
    fn random_hierarchy_and_permutation_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for i in 0..300 {
            let n = 2 + i % 3;
            let s = sampling::random_state(&mut rng, n);
            for sub in proper_subsets(n) {
                assert!(check_hierarchy_reduction(&s, &sub, 1e-9, ZT).unwrap().holds);
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let permuted = s.permute_modes(&order).unwrap();
            assert!((i_gn(&permuted, ZT) - i_gn(&s, ZT)).abs() <= 1e-12);
        }
    }
}
