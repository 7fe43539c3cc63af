//! Dense real/complex matrix utilities used by the measures.
//!
//! Quadratures are stored in interleaved order `(x_1, p_1, ..., x_n, p_n)`.
//! Indices are 0-based throughout; the 1-based entries `ν_{2k-1,2l}` of the
//! usual notation map to `(2k-2, 2l-1)` here.

use nalgebra::{Cholesky, Complex, DMatrix, DVector, Schur, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Real dense matrix.
pub type Mat = DMatrix<f64>;
/// Complex dense matrix.
pub type CMat = DMatrix<Complex<f64>>;
/// Complex scalar.
pub type C64 = Complex<f64>;

/// Relative residual accepted by [`williamson`] when no tolerance is given.
pub const WILLIAMSON_DEFAULT_TOL: f64 = 1e-8;

/// Eigenvector matrices with a condition number above this are treated as
/// numerically defective by [`sqrt_complex_principal`].
pub const DEFECTIVE_COND_THRESHOLD: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("mode count must be at least 1")]
    ZeroModes,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not symmetric positive definite")]
    NotSpd,
    #[error("eigenvalue {0} lies on the closed negative real axis")]
    NegativeRealEigenvalue(C64),
    #[error("matrix is numerically defective; principal square root unavailable")]
    Defective,
    #[error("matrix is singular")]
    Singular,
    #[error("Williamson residual {residual:e} exceeds tolerance {tol:e}")]
    WilliamsonResidual { residual: f64, tol: f64 },
    #[error("Schur iteration did not converge")]
    NoConvergence,
}

/// The symplectic form `Δ_n = ⊕ [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n: usize,
    matrix: Mat,
}

impl SymplecticForm {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat {
        self.matrix
    }
}

pub fn symplectic_form(n: usize) -> Result<SymplecticForm, LinalgError> {
    if n == 0 {
        return Err(LinalgError::ZeroModes);
    }
    Ok(SymplecticForm { n, matrix: delta(n) })
}

/// Unchecked `Δ_n`; `delta(0)` is the empty matrix.
pub(crate) fn delta(n: usize) -> Mat {
    let mut m = Mat::zeros(2 * n, 2 * n);
    for k in 0..n {
        m[(2 * k, 2 * k + 1)] = 1.0;
        m[(2 * k + 1, 2 * k)] = -1.0;
    }
    m
}

/// `O = ⊕ diag(1, -1)` as a vector of signs.
pub(crate) fn conjugation_signs(n: usize) -> DVector<f64> {
    DVector::from_fn(2 * n, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 })
}

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

/// `i·m` for a real matrix `m`.
pub fn times_i(m: &Mat) -> CMat {
    m.map(|x| C64::new(0.0, x))
}

/// Maximum absolute row sum.
pub fn norm_inf<T: nalgebra::ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.clone().modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Default PSD tolerance `1e-9 · (1 + ‖H‖_∞)`.
pub fn default_psd_tol<T: nalgebra::ComplexField<RealField = f64>>(h: &DMatrix<T>) -> f64 {
    1e-9 * (1.0 + norm_inf(h))
}

fn ensure_square<T: nalgebra::Scalar>(m: &DMatrix<T>) -> Result<usize, LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

fn hermitian_deviation(h: &CMat) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Smallest eigenvalue of a Hermitian matrix (the matrix is Hermitized first).
pub fn min_eigenvalue_hermitian(h: &CMat) -> Result<f64, LinalgError> {
    let n = ensure_square(h)?;
    if n == 0 {
        return Ok(f64::INFINITY);
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// `true` iff the smallest eigenvalue of `h` is at least `-tol`.
pub fn is_psd_hermitian(h: &CMat, tol: f64) -> Result<bool, LinalgError> {
    ensure_square(h)?;
    let dev = hermitian_deviation(h);
    if dev > tol {
        return Err(LinalgError::NotHermitian(dev));
    }
    Ok(min_eigenvalue_hermitian(h)? >= -tol)
}

fn symmetric_eigen_checked(a: &Mat) -> Result<SymmetricEigen<f64, nalgebra::Dyn>, LinalgError> {
    ensure_square(a)?;
    let scale = 1.0 + a.amax();
    if (a - a.transpose()).amax() > 1e-10 * scale {
        return Err(LinalgError::NotSpd);
    }
    let eig = SymmetricEigen::new((a + a.transpose()).scale(0.5));
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(LinalgError::NotSpd);
    }
    Ok(eig)
}

fn spectral_map(eig: &SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> Mat {
    let v = &eig.eigenvectors;
    let d = Mat::from_diagonal(&eig.eigenvalues.map(f));
    let out = v * d * v.transpose();
    (&out + out.transpose()).scale(0.5)
}

/// Principal square root of a symmetric positive definite matrix.
pub fn sqrt_spd(a: &Mat) -> Result<Mat, LinalgError> {
    let eig = symmetric_eigen_checked(a)?;
    Ok(spectral_map(&eig, f64::sqrt))
}

/// `(A^{1/2}, A^{-1/2})` from a single eigendecomposition.
pub fn sqrt_and_inv_sqrt_spd(a: &Mat) -> Result<(Mat, Mat), LinalgError> {
    let eig = symmetric_eigen_checked(a)?;
    Ok((spectral_map(&eig, f64::sqrt), spectral_map(&eig, |l| 1.0 / l.sqrt())))
}

/// `ln det A` via Cholesky.
pub fn spd_log_det(a: &Mat) -> Result<f64, LinalgError> {
    ensure_square(a)?;
    let chol = Cholesky::new(a.clone()).ok_or(LinalgError::NotSpd)?;
    let l = chol.l_dirty();
    Ok(2.0 * (0..a.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// `det A` via Cholesky.
pub fn spd_det(a: &Mat) -> Result<f64, LinalgError> {
    spd_log_det(a).map(f64::exp)
}

pub fn spd_inverse(a: &Mat) -> Result<Mat, LinalgError> {
    ensure_square(a)?;
    Cholesky::new(a.clone()).map(|c| c.inverse()).ok_or(LinalgError::NotSpd)
}

/// Principal square root of a complex matrix.
///
/// Eigenvalues with modulus at most `zero_tol` are treated as exact zeros and
/// mapped to zero; with `zero_tol = 0` any eigenvalue on the closed negative
/// real axis is rejected. The eigendecomposition route is used when the
/// eigenvector matrix has condition number at most
/// [`DEFECTIVE_COND_THRESHOLD`]; otherwise the Schur recurrence is used.
pub fn sqrt_complex_principal(a: &CMat, zero_tol: f64) -> Result<CMat, LinalgError> {
    let m = ensure_square(a)?;
    if m == 0 {
        return Ok(a.clone());
    }
    if zero_tol > 0.0 && a.norm() <= zero_tol {
        return Ok(CMat::zeros(m, m));
    }
    let (q, t) = schur(a)?;

    let mut roots = Vec::with_capacity(m);
    for i in 0..m {
        let lambda = t[(i, i)];
        let r = lambda.norm();
        if zero_tol > 0.0 && r <= zero_tol {
            roots.push(C64::new(0.0, 0.0));
        } else if (lambda.re < 0.0 && lambda.im.abs() <= 1e-14 * r) || r == 0.0 || !r.is_finite() {
            return Err(LinalgError::NegativeRealEigenvalue(lambda));
        } else {
            roots.push(lambda.sqrt());
        }
    }

    if let Some(root) = sqrt_via_eigenvectors(&q, &t, &roots) {
        return Ok(root);
    }
    sqrt_via_schur(&q, &t, &roots, zero_tol)
}

/// Complex Schur form `A = Q T Qᴴ` with a bounded iteration count.
///
/// nalgebra's shifted QR iteration can stall, for instance on a scalar
/// matrix carrying round-off noise. Already-triangular input is returned
/// as is; otherwise stalled attempts are retried on `A − μI` (`μ` the mean
/// eigenvalue) and then on `U (A − μI) Uᴴ` for a few fixed unitaries `U`
/// drawn from a seeded generator.
pub fn schur(a: &CMat) -> Result<(CMat, CMat), LinalgError> {
    let m = ensure_square(a)?;
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let below: f64 = (0..m)
        .flat_map(|j| (j + 1..m).map(move |i| (i, j)))
        .map(|ij| a[ij].norm_sqr())
        .sum();
    if below.sqrt() <= f64::EPSILON * scale {
        return Ok((CMat::identity(m, m), a.upper_triangle()));
    }
    let max_iter = 100 * m.max(10);
    let attempt = |b: CMat| Schur::try_new(b, f64::EPSILON, max_iter).map(|s| s.unpack());
    if let Some(qt) = attempt(a.clone()) {
        return Ok(qt);
    }
    let mu = a.trace() / m as f64;
    let shifted = a - CMat::identity(m, m) * mu;
    let unshift = |(q, t): (CMat, CMat)| (q, t + CMat::identity(m, m) * mu);
    if let Some(qt) = attempt(shifted.clone()) {
        return Ok(unshift(qt));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c4);
    for _ in 0..4 {
        let g = CMat::from_fn(m, m, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let u = g.qr().q();
        if let Some((q, t)) = attempt(&u * &shifted * u.adjoint()) {
            return Ok(unshift((u.adjoint() * q, t)));
        }
    }
    Err(LinalgError::NoConvergence)
}

/// Eigenvectors of the triangular factor by back substitution, then
/// `V diag(√λ) V⁻¹`. `None` when `V` is too ill-conditioned.
fn sqrt_via_eigenvectors(q: &CMat, t: &CMat, roots: &[C64]) -> Option<CMat> {
    let m = t.nrows();
    let smin = f64::EPSILON * t.norm().max(f64::MIN_POSITIVE);
    let mut y = CMat::zeros(m, m);
    for k in 0..m {
        y[(k, k)] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                s += t[(i, j)] * y[(j, k)];
            }
            let mut den = t[(i, i)] - t[(k, k)];
            if den.norm() < smin {
                den = C64::new(smin, 0.0);
            }
            y[(i, k)] = -s / den;
        }
        let norm = y.column(k).norm();
        y.column_mut(k).unscale_mut(norm);
    }
    if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return None;
    }
    let v = q * &y;
    let sv = v.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin_v = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if !(smin_v > 0.0) || smax / smin_v > DEFECTIVE_COND_THRESHOLD {
        return None;
    }
    let v_inv = v.clone().try_inverse()?;
    let d = CMat::from_diagonal(&DVector::from_column_slice(roots));
    Some(v * d * v_inv)
}

/// Björck–Hammarling recurrence on the upper-triangular Schur factor.
fn sqrt_via_schur(q: &CMat, t: &CMat, roots: &[C64], zero_tol: f64) -> Result<CMat, LinalgError> {
    let m = t.nrows();
    let mut u = CMat::zeros(m, m);
    for i in 0..m {
        u[(i, i)] = roots[i];
    }
    for j in 1..m {
        for i in (0..j).rev() {
            let mut s = t[(i, j)];
            for k in (i + 1)..j {
                s -= u[(i, k)] * u[(k, j)];
            }
            let den = u[(i, i)] + u[(j, j)];
            if den.norm() <= f64::EPSILON * (1.0 + t.norm()) {
                if s.norm() <= zero_tol.max(f64::EPSILON * t.norm()) {
                    u[(i, j)] = C64::new(0.0, 0.0);
                    continue;
                }
                return Err(LinalgError::Defective);
            }
            u[(i, j)] = s / den;
        }
    }
    Ok(q * u * q.adjoint())
}

/// Williamson normal form `ν = S (⊕ ν_l I₂) Sᵀ` with `S Δ Sᵀ = Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WilliamsonForm {
    pub s: Mat,
    /// Symplectic eigenvalues, sorted descending.
    pub nus: Vec<f64>,
}

impl WilliamsonForm {
    /// `⊕ f(ν_l) I₂`.
    pub fn diagonal_with(&self, f: impl Fn(f64) -> f64) -> Mat {
        let diag = DVector::from_iterator(
            2 * self.nus.len(),
            self.nus.iter().flat_map(|&v| {
                let x = f(v);
                [x, x]
            }),
        );
        Mat::from_diagonal(&diag)
    }

    /// `S (⊕ f(ν_l) I₂) Sᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Mat {
        let out = &self.s * self.diagonal_with(f) * self.s.transpose();
        (&out + out.transpose()).scale(0.5)
    }

    pub fn reconstruct(&self) -> Mat {
        self.reconstruct_with(|v| v)
    }

    /// `(‖S D Sᵀ − ν‖_F / ‖ν‖_F, ‖S Δ Sᵀ − Δ‖_F)`.
    pub fn residuals(&self, nu: &Mat) -> (f64, f64) {
        let n = self.nus.len();
        let d = delta(n);
        let r_cm = (self.reconstruct() - nu).norm() / nu.norm().max(f64::MIN_POSITIVE);
        let r_symp = (&self.s * &d * self.s.transpose() - &d).norm();
        (r_cm, r_symp)
    }
}

/// Williamson decomposition of a symmetric positive definite `2n×2n` matrix.
///
/// `S = ν^{1/2} K (⊕ ν_l^{-1/2} I₂)` where `K` is the real orthogonal matrix
/// bringing `ν^{-1/2} Δ ν^{-1/2}` to canonical form. `K` is read off the
/// eigenvectors of the Hermitian matrix `i ν^{-1/2} Δ ν^{-1/2}` belonging to
/// its positive eigenvalues `1/ν_l`.
pub fn williamson(nu: &Mat, tol: f64) -> Result<WilliamsonForm, LinalgError> {
    let dim = ensure_square(nu)?;
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(LinalgError::DimensionMismatch {
            expected: 2 * (dim / 2).max(1),
            got: dim,
        });
    }
    let n = dim / 2;
    let (sq, isq) = sqrt_and_inv_sqrt_spd(nu)?;
    let a = &isq * delta(n) * &isq;
    let a = (&a - a.transpose()).scale(0.5);
    let eig = SymmetricEigen::new(times_i(&a));

    let mut positive: Vec<(f64, DVector<C64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| (w, fix_phase(eig.eigenvectors.column(i).into_owned())))
        .collect();
    if positive.len() != n {
        return Err(LinalgError::WilliamsonResidual {
            residual: f64::INFINITY,
            tol,
        });
    }
    // Ascending 1/ν_l gives descending ν_l; ties broken lexicographically on
    // the phase-fixed eigenvector.
    positive.sort_by(|(wa, ua), (wb, ub)| {
        wa.partial_cmp(wb)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| lexicographic(ua, ub))
    });

    let mut k = Mat::zeros(dim, dim);
    let mut nus = Vec::with_capacity(n);
    let root2 = std::f64::consts::SQRT_2;
    for (j, (w, u)) in positive.iter().enumerate() {
        for r in 0..dim {
            k[(r, 2 * j)] = root2 * u[r].im;
            k[(r, 2 * j + 1)] = root2 * u[r].re;
        }
        nus.push(1.0 / w);
    }
    let scale = DVector::from_iterator(
        dim,
        nus.iter().flat_map(|&v| {
            let s = 1.0 / v.sqrt();
            [s, s]
        }),
    );
    let s = sq * k * Mat::from_diagonal(&scale);
    let form = WilliamsonForm { s, nus };
    let (r_cm, r_symp) = form.residuals(nu);
    let residual = r_cm.max(r_symp);
    if !(residual <= tol) {
        return Err(LinalgError::WilliamsonResidual { residual, tol });
    }
    Ok(form)
}

/// Symplectic eigenvalues as the positive eigenvalue moduli of `iΔν`.
///
/// Independent of [`williamson`]; used as a cross-check.
pub fn symplectic_eigenvalues(nu: &Mat) -> Result<Vec<f64>, LinalgError> {
    let dim = ensure_square(nu)?;
    let n = dim / 2;
    let m = times_i(&(delta(n) * nu));
    let (_, t) = schur(&m)?;
    let mut vals: Vec<f64> = t.diagonal().iter().map(|z| z.re).filter(|&re| re > 0.0).collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(vals)
}

fn fix_phase(mut u: DVector<C64>) -> DVector<C64> {
    let (imax, _) = u.iter().enumerate().fold((0, -1.0), |(bi, bv), (i, z)| {
        let v = z.norm();
        if v > bv + 1e-12 {
            (i, v)
        } else {
            (bi, bv)
        }
    });
    let z = u[imax];
    if z.norm() > 0.0 {
        let phase = z.conj() / z.norm();
        u *= phase;
    }
    u
}

fn lexicographic(a: &DVector<C64>, b: &DVector<C64>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        for (p, q) in [(x.re, y.re), (x.im, y.im)] {
            if (p - q).abs() > 1e-12 {
                return p.partial_cmp(&q).unwrap_or(std::cmp::Ordering::Equal);
            }
        }
    }
    std::cmp::Ordering::Equal
}

/// Index map of `P_n`: `(P_n v)[i] = v[mode_order(n)[i]]`, i.e. positions
/// first, then momenta.
pub fn mode_order(n: usize) -> Vec<usize> {
    (0..n).map(|k| 2 * k).chain((0..n).map(|k| 2 * k + 1)).collect()
}

/// The permutation matrix `P_n` with `p_{k,2k-1} = p_{n+k,2k} = 1` (1-based).
pub fn mode_permutation(n: usize) -> Mat {
    let order = mode_order(n);
    let mut p = Mat::zeros(2 * n, 2 * n);
    for (row, &col) in order.iter().enumerate() {
        p[(row, col)] = 1.0;
    }
    p
}

/// Blocks of `P_n ν P_nᵀ`: positions, cross, momenta.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBlocks {
    pub a11: Mat,
    pub a12: Mat,
    pub a22: Mat,
}

pub fn block_split(nu: &Mat, n: usize) -> Result<ModeBlocks, LinalgError> {
    if nu.nrows() != 2 * n || nu.ncols() != 2 * n {
        return Err(LinalgError::DimensionMismatch {
            expected: 2 * n,
            got: nu.nrows().max(nu.ncols()),
        });
    }
    let a11 = Mat::from_fn(n, n, |i, j| nu[(2 * i, 2 * j)]);
    let a12 = Mat::from_fn(n, n, |i, j| nu[(2 * i, 2 * j + 1)]);
    let a22 = Mat::from_fn(n, n, |i, j| nu[(2 * i + 1, 2 * j + 1)]);
    Ok(ModeBlocks { a11, a12, a22 })
}
