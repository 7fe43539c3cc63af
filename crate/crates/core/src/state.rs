//! Gaussian states as displacement/covariance pairs.

use nalgebra::{Complex, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, delta, Mat};

/// Absolute threshold below which displacement and covariance entries count
/// as zero for realness tests and the `h` indicator.
pub const DEFAULT_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("state must have at least one mode")]
    NoModes,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("AsymmetricCm: covariance matrix is not symmetric (max deviation {0:e})")]
    AsymmetricCm(f64),
    #[error("UncertaintyViolation: min eigenvalue of cm + iΔ is {min_eigenvalue:e}")]
    UncertaintyViolation { min_eigenvalue: f64 },
    #[error("non-finite entry in state data")]
    NonFinite,
    #[error("mode subset is empty")]
    EmptySubset,
    #[error("mode {mode} out of range for {n} modes")]
    ModeOutOfRange { mode: usize, n: usize },
    #[error("mode {0} listed twice")]
    DuplicateMode(usize),
}

/// An `n`-mode Gaussian state. Fields are private so every value in
/// circulation has passed validation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    n: usize,
    d: DVector<f64>,
    cm: Mat,
}

impl GaussianState {
    /// Validates with the default PSD tolerance `1e-9 · (1 + ‖cm + iΔ‖_∞)`.
    pub fn new(d: DVector<f64>, cm: Mat) -> Result<Self, StateError> {
        Self::with_tolerance(d, cm, None)
    }

    pub fn with_tolerance(d: DVector<f64>, cm: Mat, tol: Option<f64>) -> Result<Self, StateError> {
        if cm.nrows() != cm.ncols() {
            return Err(StateError::DimensionMismatch {
                expected: cm.nrows(),
                got: cm.ncols(),
            });
        }
        let dim = cm.nrows();
        if dim == 0 {
            return Err(StateError::NoModes);
        }
        if !dim.is_multiple_of(2) {
            return Err(StateError::DimensionMismatch {
                expected: dim + 1,
                got: dim,
            });
        }
        if d.len() != dim {
            return Err(StateError::DimensionMismatch {
                expected: dim,
                got: d.len(),
            });
        }
        if d.iter().chain(cm.iter()).any(|x| !x.is_finite()) {
            return Err(StateError::NonFinite);
        }
        let n = dim / 2;
        let h = linalg::to_complex(&cm) + linalg::times_i(&delta(n));
        let tol = tol.unwrap_or_else(|| linalg::default_psd_tol(&h));
        let asym = (&cm - cm.transpose()).amax();
        if asym > tol {
            return Err(StateError::AsymmetricCm(asym));
        }
        let cm = (&cm + cm.transpose()).scale(0.5);
        let h = linalg::to_complex(&cm) + linalg::times_i(&delta(n));
        let min_eigenvalue = linalg::min_eigenvalue_hermitian(&h).expect("square by construction");
        if min_eigenvalue < -tol {
            return Err(StateError::UncertaintyViolation { min_eigenvalue });
        }
        // cm + iΔ ⪰ 0 only implies cm ⪰ 0; the measures need strict positivity
        if linalg::spd_log_det(&cm).is_err() {
            return Err(StateError::UncertaintyViolation { min_eigenvalue });
        }
        Ok(Self { n, d, cm })
    }

    pub fn vacuum(n: usize) -> Result<Self, StateError> {
        if n == 0 {
            return Err(StateError::NoModes);
        }
        Ok(Self {
            n,
            d: DVector::zeros(2 * n),
            cm: Mat::identity(2 * n, 2 * n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn cm(&self) -> &Mat {
        &self.cm
    }

    /// `true` iff every momentum displacement and every position-momentum
    /// covariance is within `zero_tol` of zero.
    pub fn is_real(&self, zero_tol: f64) -> bool {
        let momenta_zero = (0..self.n).all(|k| self.d[2 * k + 1].abs() <= zero_tol);
        momenta_zero && (0..self.n).all(|k| (0..self.n).all(|l| self.cm[(2 * k, 2 * l + 1)].abs() <= zero_tol))
    }

    /// The complex-conjugate state `(O d, O ν O)`.
    pub fn conjugate(&self) -> Self {
        let signs = linalg::conjugation_signs(self.n);
        let d = self.d.component_mul(&signs);
        let cm = Mat::from_fn(2 * self.n, 2 * self.n, |i, j| self.cm[(i, j)] * signs[i] * signs[j]);
        Self { n: self.n, d, cm }
    }

    /// Reduced state on `modes`, kept in the given order.
    pub fn reduce(&self, modes: &[usize]) -> Result<Self, StateError> {
        check_modes(modes, self.n)?;
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let d = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.d[i]));
        let cm = Mat::from_fn(idx.len(), idx.len(), |i, j| self.cm[(idx[i], idx[j])]);
        Ok(Self { n: modes.len(), d, cm })
    }

    /// Simultaneous mode permutation: mode `k` of the result is mode
    /// `order[k]` of `self`.
    pub fn permute_modes(&self, order: &[usize]) -> Result<Self, StateError> {
        if order.len() != self.n {
            return Err(StateError::DimensionMismatch {
                expected: self.n,
                got: order.len(),
            });
        }
        self.reduce(order)
    }
}

pub(crate) fn check_modes(modes: &[usize], n: usize) -> Result<(), StateError> {
    if modes.is_empty() {
        return Err(StateError::EmptySubset);
    }
    let mut seen = vec![false; n];
    for &m in modes {
        if m >= n {
            return Err(StateError::ModeOutOfRange { mode: m, n });
        }
        if seen[m] {
            return Err(StateError::DuplicateMode(m));
        }
        seen[m] = true;
    }
    Ok(())
}

/// Product of coherent states with `d = (2 Re α_1, 2 Im α_1, ...)` and
/// `ν = I`.
pub fn coherent_state(alphas: &[Complex<f64>]) -> Result<GaussianState, StateError> {
    let mut s = GaussianState::vacuum(alphas.len())?;
    for (k, a) in alphas.iter().enumerate() {
        s.d[2 * k] = 2.0 * a.re;
        s.d[2 * k + 1] = 2.0 * a.im;
    }
    if s.d.iter().any(|x| !x.is_finite()) {
        return Err(StateError::NonFinite);
    }
    Ok(s)
}

/// Single-mode covariance matrix `(1 + 2 n_th) R(θ) diag(e^{2|ζ|}, e^{-2|ζ|}) R(θ)ᵀ`
/// written out entry-wise, `θ = arg ζ`.
pub fn squeezed_thermal_cm(n_th: f64, zeta: Complex<f64>) -> Mat {
    let r = zeta.norm();
    let theta = zeta.arg();
    let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    let f = 1.0 + 2.0 * n_th;
    Mat::from_row_slice(
        2,
        2,
        &[
            f * (c + theta.cos() * s),
            f * theta.sin() * s,
            f * theta.sin() * s,
            f * (c - theta.cos() * s),
        ],
    )
}

/// Displaced squeezed thermal state of one mode.
pub fn displaced_squeezed_thermal(
    n_th: f64,
    zeta: Complex<f64>,
    alpha: Complex<f64>,
) -> Result<GaussianState, StateError> {
    if !(n_th >= 0.0) {
        return Err(StateError::UncertaintyViolation {
            min_eigenvalue: 2.0 * n_th,
        });
    }
    let d = DVector::from_vec(vec![2.0 * alpha.re, 2.0 * alpha.im]);
    GaussianState::new(d, squeezed_thermal_cm(n_th, zeta))
}

/// Two-mode squeezed vacuum with the overall factor 2 of the bath-dynamics
/// convention, so `r = 0` gives `2 I₄` rather than the vacuum.
pub fn two_mode_squeezed_vacuum(r: f64) -> Result<GaussianState, StateError> {
    let (c, s) = (2.0 * (2.0 * r).cosh(), 2.0 * (2.0 * r).sinh());
    #[rustfmt::skip]
    let cm = Mat::from_row_slice(4, 4, &[
        c, 0.0, s, 0.0,
        0.0, c, 0.0, -s,
        s, 0.0, c, 0.0,
        0.0, -s, 0.0, c,
    ]);
    GaussianState::new(DVector::zeros(4), cm)
}

/// Serialized form `{"n", "d", "cm"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub n: usize,
    pub d: Vec<f64>,
    pub cm: Vec<Vec<f64>>,
}

impl StateRecord {
    pub fn into_state(self, tol: Option<f64>) -> Result<GaussianState, StateError> {
        let dim = 2 * self.n;
        if self.n == 0 {
            return Err(StateError::NoModes);
        }
        if self.d.len() != dim {
            return Err(StateError::DimensionMismatch {
                expected: dim,
                got: self.d.len(),
            });
        }
        let cm = rows_to_matrix(&self.cm, dim).map_err(|got| StateError::DimensionMismatch { expected: dim, got })?;
        GaussianState::with_tolerance(DVector::from_vec(self.d), cm, tol)
    }
}

impl From<&GaussianState> for StateRecord {
    fn from(s: &GaussianState) -> Self {
        Self {
            n: s.n,
            d: s.d.iter().copied().collect(),
            cm: matrix_to_rows(&s.cm),
        }
    }
}

/// Row-list to square matrix; `Err(bad_len)` on a shape mismatch.
pub(crate) fn rows_to_matrix(rows: &[Vec<f64>], dim: usize) -> Result<Mat, usize> {
    if rows.len() != dim {
        return Err(rows.len());
    }
    if let Some(r) = rows.iter().find(|r| r.len() != dim) {
        return Err(r.len());
    }
    Ok(Mat::from_fn(dim, dim, |i, j| rows[i][j]))
}

pub(crate) fn matrix_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn vacuum_is_valid_and_half_identity_is_not() {
        assert!(GaussianState::new(DVector::zeros(2), Mat::identity(2, 2)).is_ok());
        match GaussianState::new(DVector::zeros(2), Mat::identity(2, 2) * 0.5) {
            Err(StateError::UncertaintyViolation { min_eigenvalue }) => {
                assert_relative_eq!(min_eigenvalue, -0.5, epsilon = 1e-14)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constructor_errors() {
        let asym = Mat::from_row_slice(2, 2, &[2.0, 0.5, 0.0, 2.0]);
        assert!(matches!(
            GaussianState::new(DVector::zeros(2), asym),
            Err(StateError::AsymmetricCm(_))
        ));
        assert!(matches!(
            GaussianState::new(DVector::zeros(3), Mat::identity(2, 2)),
            Err(StateError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            GaussianState::new(DVector::zeros(3), Mat::identity(3, 3)),
            Err(StateError::DimensionMismatch { .. })
        ));
        assert_eq!(GaussianState::vacuum(0), Err(StateError::NoModes));
        let mut bad = Mat::identity(2, 2);
        bad[(0, 0)] = f64::NAN;
        assert_eq!(GaussianState::new(DVector::zeros(2), bad), Err(StateError::NonFinite));
    }

    #[test]
    fn bath_squeezed_vacuum_valid_and_real() {
        let s = two_mode_squeezed_vacuum(1.0).unwrap();
        assert_relative_eq!(s.cm()[(0, 0)], 2.0 * 2f64.cosh(), epsilon = 1e-14);
        assert_relative_eq!(s.cm()[(0, 0)], 7.524391382167262, epsilon = 1e-12);
        assert_relative_eq!(s.cm()[(0, 2)], 7.253720815694038, epsilon = 1e-12);
        assert!(s.is_real(DEFAULT_ZERO_TOL));
        assert_eq!(
            two_mode_squeezed_vacuum(0.0).unwrap().cm(),
            &(Mat::identity(4, 4) * 2.0)
        );
        for r in [0.1, 0.5, 2.0] {
            assert!(two_mode_squeezed_vacuum(r).unwrap().is_real(DEFAULT_ZERO_TOL));
        }
    }

    #[test]
    fn realness_examples() {
        assert!(GaussianState::vacuum(3).unwrap().is_real(DEFAULT_ZERO_TOL));
        assert!(!coherent_state(&[c(0.0, 1.0)]).unwrap().is_real(DEFAULT_ZERO_TOL));
        assert!(coherent_state(&[c(1.0, 0.0)]).unwrap().is_real(DEFAULT_ZERO_TOL));
        assert!(displaced_squeezed_thermal(0.0, c(0.7, 0.0), c(0.0, 0.0))
            .unwrap()
            .is_real(DEFAULT_ZERO_TOL));
        assert!(!displaced_squeezed_thermal(0.0, c(0.0, 0.7), c(0.0, 0.0))
            .unwrap()
            .is_real(DEFAULT_ZERO_TOL));
    }

    #[test]
    fn conjugate_examples() {
        let s = coherent_state(&[c(0.0, 1.0)]).unwrap();
        let cs = s.conjugate();
        assert_eq!(cs.d().as_slice(), &[0.0, -2.0]);
        assert_eq!(cs.cm(), &Mat::identity(2, 2));
        let real = displaced_squeezed_thermal(1.0, c(0.3, 0.0), c(1.5, 0.0)).unwrap();
        assert_eq!(real.conjugate(), real);
    }

    #[test]
    fn coherent_layout() {
        let s = coherent_state(&[c(1.0, 1.0)]).unwrap();
        assert_eq!(s.d().as_slice(), &[2.0, 2.0]);
        let s = coherent_state(&[c(0.5, 0.0), c(0.0, -1.0), c(2.0, 3.0)]).unwrap();
        assert_eq!(s.d().as_slice(), &[1.0, 0.0, 0.0, -2.0, 4.0, 6.0]);
        assert_eq!(s.cm(), &Mat::identity(6, 6));
        assert_eq!(
            coherent_state(&[c(0.0, 0.0)]).unwrap(),
            GaussianState::vacuum(1).unwrap()
        );
    }

    #[test]
    fn squeezed_thermal_special_cases() {
        let th = displaced_squeezed_thermal(1.5, c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(th.cm(), &(Mat::identity(2, 2) * 4.0));
        assert!(th.is_real(DEFAULT_ZERO_TOL));
        let a = c(0.3, -0.4);
        assert_eq!(
            displaced_squeezed_thermal(0.0, c(0.0, 0.0), a).unwrap(),
            coherent_state(&[a]).unwrap()
        );
        let sq = displaced_squeezed_thermal(0.0, c(0.0, 1.0), c(0.0, 0.0)).unwrap();
        assert_relative_eq!(sq.cm()[(0, 1)], 2f64.sinh(), epsilon = 1e-14);
        assert_relative_eq!(sq.cm().determinant(), 1.0, epsilon = 1e-12);
        assert!(displaced_squeezed_thermal(-0.1, c(0.0, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn reduce_examples() {
        let s = two_mode_squeezed_vacuum(1.0).unwrap();
        assert_eq!(s.reduce(&[0, 1]).unwrap(), s);
        let m0 = s.reduce(&[0]).unwrap();
        assert_eq!(m0.d().as_slice(), &[0.0, 0.0]);
        assert_eq!(m0.cm(), &(Mat::identity(2, 2) * (2.0 * 2f64.cosh())));
        let swapped = s.reduce(&[1, 0]).unwrap();
        assert_eq!(swapped.cm()[(0, 2)], s.cm()[(2, 0)]);

        assert_eq!(s.reduce(&[]), Err(StateError::EmptySubset));
        assert_eq!(s.reduce(&[2]), Err(StateError::ModeOutOfRange { mode: 2, n: 2 }));
        assert_eq!(s.reduce(&[1, 1]), Err(StateError::DuplicateMode(1)));
    }

    #[test]
    fn reduce_product_state_returns_block() {
        let a = displaced_squeezed_thermal(0.5, c(0.2, 0.4), c(1.0, -1.0)).unwrap();
        let b = displaced_squeezed_thermal(2.0, c(-0.3, 0.1), c(0.0, 0.5)).unwrap();
        let mut cm = Mat::zeros(4, 4);
        cm.view_mut((0, 0), (2, 2)).copy_from(a.cm());
        cm.view_mut((2, 2), (2, 2)).copy_from(b.cm());
        let d = DVector::from_iterator(4, a.d().iter().chain(b.d().iter()).copied());
        let prod = GaussianState::new(d, cm).unwrap();
        assert_eq!(prod.reduce(&[0]).unwrap(), a);
        assert_eq!(prod.reduce(&[1]).unwrap(), b);
    }

    #[test]
    fn reductions_of_random_states_stay_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for i in 0..1000 {
            let n = 1 + i % 4;
            let s = sampling::random_state(&mut rng, n);
            let modes: Vec<usize> = (0..n).filter(|k| (i >> k) & 1 == 1).collect();
            if modes.is_empty() {
                continue;
            }
            let r = s.reduce(&modes).unwrap();
            GaussianState::new(r.d().clone(), r.cm().clone()).expect("reduced state must validate");
        }
    }

    #[test]
    fn record_round_trip() {
        let s = displaced_squeezed_thermal(0.5, c(0.2, 0.4), c(1.0, -1.0)).unwrap();
        let rec = StateRecord::from(&s);
        let json = serde_json::to_string(&rec).unwrap();
        let back: StateRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.into_state(None).unwrap(), s);
        let bad = StateRecord {
            n: 1,
            d: vec![0.0, 0.0],
            cm: vec![vec![1.0, 0.0]],
        };
        assert!(matches!(
            bad.into_state(None),
            Err(StateError::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn conjugate_is_involution_and_preserves_realness(seed in any::<u64>(), n in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = sampling::random_state(&mut rng, n);
            prop_assert_eq!(&s.conjugate().conjugate(), &s);
            prop_assert_eq!(s.conjugate().is_real(DEFAULT_ZERO_TOL), s.is_real(DEFAULT_ZERO_TOL));
            let r = sampling::random_real_state(&mut rng, n);
            prop_assert_eq!(r.conjugate().is_real(DEFAULT_ZERO_TOL), true);
        }

        #[test]
        fn realness_iff_conjugation_fixed(seed in any::<u64>(), n in 1usize..5, real in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = if real { sampling::random_real_state(&mut rng, n) } else { sampling::random_state(&mut rng, n) };
            let cs = s.conjugate();
            let fixed = (s.d() - cs.d()).amax() <= DEFAULT_ZERO_TOL && (s.cm() - cs.cm()).amax() <= DEFAULT_ZERO_TOL;
            prop_assert_eq!(s.is_real(DEFAULT_ZERO_TOL), fixed);
        }

        #[test]
        fn squeezed_thermal_constructor_always_valid(
            n_th in 0.0f64..20.0, r in 0.0f64..2.0, theta in -3.2f64..3.2, are in -3.0f64..3.0, aim in -3.0f64..3.0
        ) {
            let z = Complex::from_polar(r, theta);
            prop_assert!(displaced_squeezed_thermal(n_th, z, c(are, aim)).is_ok());
        }
    }
}
