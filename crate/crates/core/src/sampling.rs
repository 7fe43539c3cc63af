//! Seeded random generators for property tests and fuzz suites.
//!
//! All generators take a caller-owned RNG; nothing here touches global state.

use nalgebra::DVector;
use rand::Rng;

use crate::linalg::{delta, Mat};
use crate::state::GaussianState;

/// Symplectic matrix `exp(Δ H)` with `H` random symmetric.
///
/// `Δ H` is Hamiltonian, so its exponential is symplectic. Entries of `H`
/// are uniform on `[-scale, scale]`.
pub fn random_symplectic<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> Mat {
    let h = random_symmetric(rng, 2 * n, scale);
    (delta(n) * h).exp()
}

pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> Mat {
    let a = Mat::from_fn(dim, dim, |_, _| rng.random_range(-scale..=scale));
    (&a + a.transpose()).scale(0.5)
}

/// Random SPD matrix with eigenvalues in `[lo, hi]`.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, dim: usize, lo: f64, hi: f64) -> Mat {
    let q = random_orthogonal(rng, dim);
    let diag = DVector::from_fn(dim, |_, _| rng.random_range(lo..=hi));
    let m = &q * Mat::from_diagonal(&diag) * q.transpose();
    (&m + m.transpose()).scale(0.5)
}

pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Mat {
    let a = Mat::from_fn(dim, dim, |_, _| rng.random_range(-1.0..=1.0));
    a.qr().q()
}

/// Covariance matrix `S (⊕ ν_l I₂) Sᵀ` with `ν_l ∈ [1, 3]`.
pub fn random_cm<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat {
    let s = random_symplectic(rng, n, 0.4);
    let diag = DVector::from_iterator(
        2 * n,
        (0..n).flat_map(|_| {
            let v = rng.random_range(1.0..=3.0);
            [v, v]
        }),
    );
    let cm = &s * Mat::from_diagonal(&diag) * s.transpose();
    (&cm + cm.transpose()).scale(0.5)
}

pub fn random_displacement<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(2 * n, |_, _| rng.random_range(-2.0..=2.0))
}

/// Generic state: random CM and displacement, about a third of the draws
/// with zero momentum displacement so the `h = 0` band is exercised too.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> GaussianState {
    let cm = random_cm(rng, n);
    let mut d = random_displacement(rng, n);
    if rng.random_bool(1.0 / 3.0) {
        for k in 0..n {
            d[2 * k + 1] = 0.0;
        }
    }
    GaussianState::new(d, cm).expect("symplectic congruence of a physical diagonal is physical")
}

/// Covariance matrix satisfying the realness pattern: block diagonal in the
/// positions-then-momenta order as `(A, A⁻¹ + C)` with `A` SPD and `C` PSD.
/// `A ⊕ A⁻¹` is the CM of a real pure state; adding `C` keeps it physical.
pub fn random_real_cm<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat {
    let a = random_spd(rng, n, 0.5, 2.0);
    let a_inv = a.clone().try_inverse().expect("SPD");
    let b = Mat::from_fn(n, n, |_, _| rng.random_range(-0.7..=0.7));
    let p = a_inv + &b * b.transpose();
    let mut cm = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            cm[(2 * i, 2 * j)] = a[(i, j)];
            cm[(2 * i + 1, 2 * j + 1)] = p[(i, j)];
        }
    }
    (&cm + cm.transpose()).scale(0.5)
}

/// State obeying the realness pattern exactly.
pub fn random_real_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> GaussianState {
    let cm = random_real_cm(rng, n);
    let mut d = DVector::zeros(2 * n);
    for k in 0..n {
        d[2 * k] = rng.random_range(-2.0..=2.0);
    }
    GaussianState::new(d, cm).expect("real pattern construction is physical")
}

/// Real-patterned state with `±eps` added at one position-momentum entry
/// `(2k, 2l+1)` and its mirror, plus `eps · I` to stay physical.
pub fn random_injected_state<R: Rng + ?Sized>(rng: &mut R, n: usize, eps: f64) -> GaussianState {
    let base = random_real_state(rng, n);
    let mut cm = base.cm().clone();
    let k = rng.random_range(0..n);
    let l = rng.random_range(0..n);
    let e = if rng.random_bool(0.5) { eps } else { -eps };
    cm[(2 * k, 2 * l + 1)] += e;
    cm[(2 * l + 1, 2 * k)] += e;
    cm += Mat::identity(2 * n, 2 * n) * eps;
    GaussianState::new(base.d().clone(), cm).expect("eps·I dominates the injected entry")
}
