//! Imaginarity measures: the block-determinant measure `I^{G_n}` and the
//! fidelity (`M_F`) and Tsallis (`M_{T,μ}`) comparison measures.
//!
//! `I^{G_n}` needs two Cholesky factorizations per block and nothing else.
//! `M_F` runs a chain of complex matrix inversions and a principal square
//! root; `M_{T,μ}` needs a Williamson decomposition. Both can fail
//! numerically on hard inputs, which [`measure_all`] records instead of
//! propagating.

use nalgebra::{Cholesky, Complex, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, delta, CMat, LinalgError, Mat, C64};
use crate::state::{matrix_to_rows, GaussianState};

/// Symplectic eigenvalues at or below `1 + PURE_LIMIT_TOL` take the
/// analytic pure-mode limits in `M_{T,μ}`.
pub const PURE_LIMIT_TOL: f64 = 1e-10;

/// Relative size of the imaginary part of `F_tot⁴` tolerated before the
/// fidelity evaluation is declared non-real.
pub const IMAG_RESIDUE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("mu must lie strictly between 0 and 1, got {0}")]
    InvalidMu(f64),
    #[error("ComplexSqrtBranchFailure: {0}")]
    ComplexSqrtBranchFailure(LinalgError),
    #[error("NonRealResult: F_tot^4 = {re:e} + {im:e}i")]
    NonRealResult { re: f64, im: f64 },
    #[error("mode count mismatch between state ({0}) and conjugate ({1})")]
    ModeMismatch(usize, usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The indicator `h(t)`: 1 when `t` exceeds `zero_tol`, else 0.
pub fn h_term(state: &GaussianState, zero_tol: f64) -> u8 {
    let t: f64 = (0..state.n()).map(|k| state.d()[2 * k + 1].abs()).sum();
    u8::from(t > zero_tol)
}

/// Ingredients of `I^{G_n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IgnDetails {
    pub value: f64,
    pub h_term: u8,
    pub log_det_nu: f64,
    pub log_det_a11: f64,
    pub log_det_a22: f64,
    pub blocks: linalg::ModeBlocks,
}

/// `I^{G_n}(ρ) = 1 − det ν / (det A₁₁ det A₂₂) + h(Σ_k |d_{2k}|)`.
pub fn i_gn(state: &GaussianState, zero_tol: f64) -> f64 {
    i_gn_detailed(state, zero_tol).value
}

pub fn i_gn_detailed(state: &GaussianState, zero_tol: f64) -> IgnDetails {
    let n = state.n();
    let blocks = linalg::block_split(state.cm(), n).expect("validated state has matching dimension");
    // Valid states have ν ≻ 0, so all three Cholesky factorizations exist.
    let log_det_nu = linalg::spd_log_det(state.cm()).expect("validated state is SPD");
    let log_det_a11 = linalg::spd_log_det(&blocks.a11).expect("principal block of SPD");
    let log_det_a22 = linalg::spd_log_det(&blocks.a22).expect("principal block of SPD");
    let h = h_term(state, zero_tol);
    // 1 − ratio via expm1 keeps nearly real states accurate; Fischer's
    // inequality bounds the ratio by 1, so only round-off can push it above.
    let gap = (-(log_det_nu - log_det_a11 - log_det_a22).exp_m1()).max(0.0);
    IgnDetails {
        value: gap + f64::from(h),
        h_term: h,
        log_det_nu,
        log_det_a11,
        log_det_a22,
        blocks,
    }
}

/// Single-mode closed form of `I^{G_1}` on displaced squeezed thermal
/// states; independent of `n_th`.
pub fn i_g1_closed(n_th: f64, zeta: Complex<f64>, alpha: Complex<f64>) -> f64 {
    let _ = n_th;
    let s = squeeze_strength(zeta);
    s / (1.0 + s) + if alpha.im != 0.0 { 1.0 } else { 0.0 }
}

/// `s = sin²θ sinh²(2|ζ|)`.
pub fn squeeze_strength(zeta: Complex<f64>) -> f64 {
    let st = zeta.arg().sin();
    let sh = (2.0 * zeta.norm()).sinh();
    st * st * sh * sh
}

/// Intermediates of the Gaussian fidelity formula evaluated on two
/// covariance inputs `V₁`, `V₂`:
///
/// `W_i = −2 V_i iΔ`, `W_aux = −(W₁ + W₂)⁻¹(I + W₂W₁)`,
/// `X = I − W_aux⁻²`, `F_tot⁴ = det((√X + I) W_aux iΔ)`,
/// `F₀ = F_tot / det(V₁ + V₂)^{1/4}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityChain {
    pub w1: CMat,
    pub w2: CMat,
    pub w_aux: CMat,
    pub x: CMat,
    pub sqrt_x: CMat,
    pub f_tot4: C64,
    pub f0: f64,
}

/// Evaluates the fidelity chain on `(V₁, V₂)`.
///
/// The inputs are covariance matrices in the convention where the vacuum is
/// `I/2`; [`m_f`] passes `ν/2`. `X` is formed without the cancellation in
/// `I − W_aux⁻²`: with `H = W₁ + W₂` and `E_i = W_i² − I`,
/// `X = H⁻¹E₂ H⁻¹E₁ W_aux⁻²`, which vanishes exactly when either input is
/// pure.
pub fn fidelity_chain(v1: &Mat, v2: &Mat) -> Result<FidelityChain, MeasureError> {
    let dim = v1.nrows();
    if v2.nrows() != dim || !dim.is_multiple_of(2) {
        return Err(LinalgError::DimensionMismatch {
            expected: dim,
            got: v2.nrows(),
        }
        .into());
    }
    let n = dim / 2;
    let dl = delta(n);
    let i_delta = linalg::times_i(&dl);
    let id = CMat::identity(dim, dim);

    let w1 = -(linalg::to_complex(v1) * &i_delta).scale(2.0);
    let w2 = -(linalg::to_complex(v2) * &i_delta).scale(2.0);
    let h = &w1 + &w2;
    let g = &id + &w2 * &w1;
    let h_lu = h.clone().lu();
    let w_aux = -h_lu.solve(&g).ok_or(LinalgError::Singular)?;
    let w_aux_inv = -g.clone().lu().solve(&h).ok_or(LinalgError::Singular)?;

    // W_i² − I = −(4 V_i Δ V_i − Δ) Δ, real up to the sign
    let e = |v: &Mat| linalg::to_complex(&(-(v * &dl * v * 4.0 - &dl) * &dl));
    let h_e2 = h_lu.solve(&e(v2)).ok_or(LinalgError::Singular)?;
    let h_e1 = h_lu.solve(&e(v1)).ok_or(LinalgError::Singular)?;
    let x = h_e2 * h_e1 * &w_aux_inv * &w_aux_inv;

    // Eigenvalues of X at round-off level belong to (nearly) pure modes and
    // are taken as exact zeros. A mode with symplectic eigenvalue 1 + ε
    // contributes an eigenvalue of order ε², so √X carries an error of order
    // √(ε_mach ‖X‖) there whatever the threshold.
    let zero_tol = 64.0 * f64::EPSILON * x.norm() + f64::MIN_POSITIVE;
    let sqrt_x = linalg::sqrt_complex_principal(&x, zero_tol).map_err(MeasureError::ComplexSqrtBranchFailure)?;
    let f_tot4 = ((&sqrt_x + &id) * &w_aux * &i_delta).determinant();
    if f_tot4.im.abs() > IMAG_RESIDUE_TOL * (1.0 + f_tot4.re.abs()) || !(f_tot4.re > 0.0) {
        return Err(MeasureError::NonRealResult {
            re: f_tot4.re,
            im: f_tot4.im,
        });
    }
    let log_det_sum = linalg::spd_log_det(&(v1 + v2))?;
    let f0 = (0.25 * (f_tot4.re.ln() - log_det_sum)).exp();
    Ok(FidelityChain {
        w1,
        w2,
        w_aux,
        x,
        sqrt_x,
        f_tot4,
        f0,
    })
}

/// `M_F(ρ) = 1 − F(ρ, ρ*)`.
///
/// `conj` may carry a precomputed conjugate; it is computed otherwise.
pub fn m_f(state: &GaussianState, conj: Option<&GaussianState>) -> Result<f64, MeasureError> {
    m_f_detailed(state, conj).map(|(v, _)| v)
}

pub fn m_f_detailed(state: &GaussianState, conj: Option<&GaussianState>) -> Result<(f64, FidelityChain), MeasureError> {
    let owned;
    let conj = match conj {
        Some(c) => c,
        None => {
            owned = state.conjugate();
            &owned
        }
    };
    if conj.n() != state.n() {
        return Err(MeasureError::ModeMismatch(state.n(), conj.n()));
    }
    let chain = fidelity_chain(&(state.cm() * 0.5), &(conj.cm() * 0.5))?;
    let delta_d = state.d() - conj.d();
    let sum = state.cm() + conj.cm();
    let exponent = -0.25 * quad_form_spd(&sum, &delta_d)?;
    Ok((1.0 - chain.f0 * exponent.exp(), chain))
}

/// `xᵀ A⁻¹ x` for SPD `A`.
fn quad_form_spd(a: &Mat, x: &DVector<f64>) -> Result<f64, LinalgError> {
    let chol = Cholesky::new(a.clone()).ok_or(LinalgError::NotSpd)?;
    Ok(x.dot(&chol.solve(x)))
}

/// Single-mode closed form of `M_F` on displaced squeezed thermal states.
pub fn m_f_closed_single(n_th: f64, zeta: Complex<f64>, alpha: Complex<f64>) -> f64 {
    let (r, theta) = (zeta.norm(), zeta.arg());
    let s = squeeze_strength(zeta);
    let f = 2.0 * n_th + 1.0;
    let q = n_th * (n_th + 1.0);
    let den_exp = f * ((2.0 * r).cosh() - theta.cos() * (2.0 * r).sinh());
    let num = (-2.0 * alpha.im * alpha.im / den_exp).exp();
    1.0 - num / ((f * f * (1.0 + s) + 4.0 * q * q).sqrt() - 2.0 * q).sqrt()
}

fn check_mu(mu: f64) -> Result<(), MeasureError> {
    if mu > 0.0 && mu < 1.0 {
        Ok(())
    } else {
        Err(MeasureError::InvalidMu(mu))
    }
}

/// `M_{T,μ}(ρ) = 1 − Tr[ρ^μ (ρ*)^{1−μ}]` through the Williamson form of `ν`.
pub fn m_t(state: &GaussianState, mu: f64) -> Result<f64, MeasureError> {
    check_mu(mu)?;
    let n = state.n();
    let w = linalg::williamson(state.cm(), linalg::WILLIAMSON_DEFAULT_TOL)?;
    // x_l = e^{−η_l} = (ν_l − 1)/(ν_l + 1)
    let xs: Vec<f64> = w
        .nus
        .iter()
        .map(|&v| {
            if v <= 1.0 + PURE_LIMIT_TOL {
                0.0
            } else {
                (v - 1.0) / (v + 1.0)
            }
        })
        .collect();
    let mut log_prefactor = n as f64 * std::f64::consts::LN_2;
    for &x in &xs {
        log_prefactor += (1.0 - x).ln() - (1.0 - x.powf(mu)).ln() - (1.0 - x.powf(1.0 - mu)).ln();
    }
    let power_nu = |p: f64| {
        let diag = DVector::from_iterator(
            2 * n,
            xs.iter().flat_map(|&x| {
                let v = 2.0 / (1.0 - x.powf(p)) - 1.0;
                [v, v]
            }),
        );
        &w.s * Mat::from_diagonal(&diag) * w.s.transpose()
    };
    let nu_mu = power_nu(mu);
    let signs = linalg::conjugation_signs(n);
    let nu_rest = power_nu(1.0 - mu);
    let nu_rest_conj = Mat::from_fn(2 * n, 2 * n, |i, j| nu_rest[(i, j)] * signs[i] * signs[j]);
    let sum = nu_mu + nu_rest_conj;
    let sum = (&sum + sum.transpose()).scale(0.5);
    let log_det = linalg::spd_log_det(&sum)?;
    let delta_d = state.d() - state.d().component_mul(&signs);
    let quad = quad_form_spd(&sum, &delta_d)?;
    Ok(1.0 - (log_prefactor - 0.5 * log_det - 0.5 * quad).exp())
}

/// Single-mode closed form of `M_{T,μ}` with `x = n_th / (n_th + 1)`.
pub fn m_t_closed_single(n_th: f64, zeta: Complex<f64>, alpha: Complex<f64>, mu: f64) -> Result<f64, MeasureError> {
    check_mu(mu)?;
    let (r, theta) = (zeta.norm(), zeta.arg());
    let s = squeeze_strength(zeta);
    let x = n_th / (n_th + 1.0);
    let g = (1.0 - x.powf(mu)) * (1.0 - x.powf(1.0 - mu));
    let h = (1.0 + x.powf(mu)) * (1.0 + x.powf(1.0 - mu));
    let a = 2.0 * (1.0 - x) / g;
    let pref = a / (a * a + 4.0 * h / g * s).sqrt();
    let num = 4.0 * alpha.im * alpha.im * (1.0 - x) * ((2.0 * r).cosh() + theta.cos() * (2.0 * r).sinh());
    let den = (1.0 - x) * (1.0 - x) / g + h * s;
    Ok(1.0 - pref * (-num / den).exp())
}

/// All three measures of one state with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureReport {
    pub n: usize,
    pub i_gn: f64,
    pub m_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_f_error: Option<String>,
    pub m_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_t_error: Option<String>,
    pub mu: f64,
    pub h_term: u8,
    pub det_nu: f64,
    pub det_a11: f64,
    pub det_a22: f64,
    pub a11: Vec<Vec<f64>>,
    pub a12: Vec<Vec<f64>>,
    pub a22: Vec<Vec<f64>>,
    pub zero_tol: f64,
}

/// Never fails: `m_f` / `m_t` errors are stored as strings and the value
/// left empty, while `i_gn` is always present.
pub fn measure_all(state: &GaussianState, mu: f64, zero_tol: f64) -> MeasureReport {
    let det = i_gn_detailed(state, zero_tol);
    let (m_f, m_f_error) = split(m_f(state, None));
    let (m_t, m_t_error) = split(m_t(state, mu));
    MeasureReport {
        n: state.n(),
        i_gn: det.value,
        m_f,
        m_f_error,
        m_t,
        m_t_error,
        mu,
        h_term: det.h_term,
        det_nu: det.log_det_nu.exp(),
        det_a11: det.log_det_a11.exp(),
        det_a22: det.log_det_a22.exp(),
        a11: matrix_to_rows(&det.blocks.a11),
        a12: matrix_to_rows(&det.blocks.a12),
        a22: matrix_to_rows(&det.blocks.a22),
        zero_tol,
    }
}

fn split(r: Result<f64, MeasureError>) -> (Option<f64>, Option<String>) {
    match r {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    }
}
