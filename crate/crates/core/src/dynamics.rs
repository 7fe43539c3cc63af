//! Two-mode evolution in a squeezed thermal Markovian bath.
//!
//! The master equation is not integrated: its solution interpolates the
//! covariance matrix toward the stationary `ν(∞)`,
//! `ν(t) = e^{−λt} ν(0) + (1 − e^{−λt}) ν(∞)`, and damps the displacement as
//! `d(t) = e^{−λt/2} d(0)`.

use nalgebra::Complex;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::Mat;
use crate::measures::{self, MeasureReport};
use crate::state::{GaussianState, StateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid bath parameters: {0}")]
    InvalidBath(String),
    #[error("bath dynamics needs a two-mode state, got {0} modes")]
    WrongModeCount(usize),
    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Bath damping rate `λ`, thermal photon number `n_th`, squeezing `R` and
/// squeezing phase `φ` (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BathParams {
    pub lambda: f64,
    pub n_th: f64,
    pub r: f64,
    pub phi: f64,
}

/// `N`, `M` and `L_± = N ± Re M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathDerived {
    pub n: f64,
    pub m: Complex<f64>,
    pub l_plus: f64,
    pub l_minus: f64,
}

impl BathParams {
    pub fn new(lambda: f64, n_th: f64, r: f64, phi: f64) -> Result<Self, DynamicsError> {
        let p = Self { lambda, n_th, r, phi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(DynamicsError::InvalidBath(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.n_th >= 0.0 && self.n_th.is_finite()) {
            return Err(DynamicsError::InvalidBath(format!(
                "n_th must be nonnegative, got {}",
                self.n_th
            )));
        }
        if !self.r.is_finite() || !self.phi.is_finite() {
            return Err(DynamicsError::InvalidBath("R and phi must be finite".into()));
        }
        let b = bath_derived(self);
        let bound = b.n * (b.n + 1.0);
        if b.m.norm_sqr() > bound + 1e-9 * (1.0 + bound) {
            return Err(DynamicsError::InvalidBath(format!(
                "|M|^2 = {} exceeds N(N+1) = {bound}",
                b.m.norm_sqr()
            )));
        }
        Ok(())
    }
}

/// `N = n_th (cosh²R + sinh²R) + sinh²R`, `M = −(2n_th + 1) cosh R sinh R e^{iφ}`.
pub fn bath_derived(p: &BathParams) -> BathDerived {
    let (ch, sh) = (p.r.cosh(), p.r.sinh());
    let n = p.n_th * (ch * ch + sh * sh) + sh * sh;
    let m = Complex::from_polar(-(2.0 * p.n_th + 1.0) * ch * sh, p.phi);
    BathDerived {
        n,
        m,
        l_plus: n + m.re,
        l_minus: n - m.re,
    }
}

/// Stationary covariance matrix: two copies of `[[1 + 2L₊, 2 Im M], [2 Im M, 1 + 2L₋]]`.
pub fn nu_infinity(p: &BathParams) -> Mat {
    let b = bath_derived(p);
    let (ap, am, c) = (1.0 + 2.0 * b.l_plus, 1.0 + 2.0 * b.l_minus, 2.0 * b.m.im);
    let mut m = Mat::zeros(4, 4);
    for k in 0..2 {
        let o = 2 * k;
        m[(o, o)] = ap;
        m[(o, o + 1)] = c;
        m[(o + 1, o)] = c;
        m[(o + 1, o + 1)] = am;
    }
    m
}

pub fn evolve(state0: &GaussianState, p: &BathParams, t: f64) -> Result<GaussianState, DynamicsError> {
    if state0.n() != 2 {
        return Err(DynamicsError::WrongModeCount(state0.n()));
    }
    p.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(DynamicsError::InvalidTimeGrid(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    let decay = (-p.lambda * t).exp();
    let cm = state0.cm() * decay + nu_infinity(p) * (-(-p.lambda * t).exp_m1());
    let d = state0.d() * (-0.5 * p.lambda * t).exp();
    // convex combination of two physical CMs; allow round-off on the boundary
    let tol = 1e-9 * (1.0 + cm.amax());
    Ok(GaussianState::with_tolerance(d, cm, Some(tol))?)
}

/// Starting states with printed closed-form trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// The factor-2 two-mode squeezed vacuum with squeezing `r`.
    SqueezedVacuum { r: f64 },
    /// Covariance `I₄`, arbitrary displacement.
    Coherent,
}

/// Recognizes the two closed-form families up to relative tolerance 1e-12.
pub fn detect_family(state0: &GaussianState) -> Option<Family> {
    if state0.n() != 2 {
        return None;
    }
    let cm = state0.cm();
    if (cm - Mat::identity(4, 4)).amax() <= 1e-12 {
        return Some(Family::Coherent);
    }
    if state0.d().amax() != 0.0 {
        return None;
    }
    let x = cm[(0, 0)] / 2.0;
    if !(x >= 1.0) {
        return None;
    }
    let r = x.acosh() / 2.0;
    // cosh is even: take the sign of r from the correlation entry
    let r = if cm[(0, 2)] < 0.0 { -r } else { r };
    let candidate = crate::state::two_mode_squeezed_vacuum(r).ok()?;
    if (cm - candidate.cm()).amax() <= 1e-12 * (1.0 + cm.amax()) {
        Some(Family::SqueezedVacuum { r })
    } else {
        None
    }
}

/// Printed squeezed-vacuum trajectory:
/// `1 − (b⁴ + c⁴ + 2b²c² + a₊²a₋² − 2a₊c²a₋ − a₊²b² − b²a₋²) / ((a₊² − b²)(a₋² − b²))`.
pub fn i_gn_closed_squeezed_vacuum(r: f64, p: &BathParams, t: f64) -> f64 {
    let b_ = bath_derived(p);
    let e = (-p.lambda * t).exp();
    let one_minus = -(-p.lambda * t).exp_m1();
    let ap = 2.0 * e * (2.0 * r).cosh() + one_minus * (1.0 + 2.0 * b_.l_plus);
    let am = 2.0 * e * (2.0 * r).cosh() + one_minus * (1.0 + 2.0 * b_.l_minus);
    let b = 2.0 * e * (2.0 * r).sinh();
    let c = 2.0 * one_minus * b_.m.im;
    let (b2, c2) = (b * b, c * c);
    let num = b2 * b2 + c2 * c2 + 2.0 * b2 * c2 + ap * ap * am * am - 2.0 * ap * c2 * am - ap * ap * b2 - b2 * am * am;
    1.0 - num / ((ap * ap - b2) * (am * am - b2))
}

/// Printed coherent-start trajectory `1 − (a₊a₋ − c²)²/(a₊²a₋²) + h`, with
/// `h` evaluated on the damped momentum displacements.
pub fn i_gn_closed_coherent(d0: &[f64; 4], p: &BathParams, t: f64, zero_tol: f64) -> (f64, u8) {
    let b_ = bath_derived(p);
    let e = (-p.lambda * t).exp();
    let one_minus = -(-p.lambda * t).exp_m1();
    let ap = e + one_minus * (1.0 + 2.0 * b_.l_plus);
    let am = e + one_minus * (1.0 + 2.0 * b_.l_minus);
    let c = 2.0 * one_minus * b_.m.im;
    let damp = (-0.5 * p.lambda * t).exp();
    let h = u8::from((damp * d0[1]).abs() + (damp * d0[3]).abs() > zero_tol);
    let q = ap * am - c * c;
    (1.0 - q * q / (ap * ap * am * am) + f64::from(h), h)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub report: MeasureReport,
    /// Closed-form value when the start state belongs to a known family.
    pub i_gn_closed: Option<f64>,
}

/// Step where the numerical `h` indicator changes value; for a damped
/// displacement this happens once it underflows `zero_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HFlip {
    pub index: usize,
    pub t: f64,
    pub from: u8,
    pub to: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub family: Option<Family>,
    pub points: Vec<TrajectoryPoint>,
    pub h_flips: Vec<HFlip>,
}

pub fn check_time_grid(times: &[f64]) -> Result<(), DynamicsError> {
    if times.is_empty() {
        return Err(DynamicsError::InvalidTimeGrid("empty".into()));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(DynamicsError::InvalidTimeGrid(
            "times must be finite and nonnegative".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(DynamicsError::InvalidTimeGrid("times must be sorted".into()));
    }
    Ok(())
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (count - 1) as f64;
            (0..count)
                .map(|i| if i + 1 == count { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}

/// Measures along the evolution, plus the closed form for recognized
/// starting families.
pub fn trajectory(
    state0: &GaussianState,
    p: &BathParams,
    times: &[f64],
    mu: f64,
    zero_tol: f64,
) -> Result<Trajectory, DynamicsError> {
    if state0.n() != 2 {
        return Err(DynamicsError::WrongModeCount(state0.n()));
    }
    p.validate()?;
    check_time_grid(times)?;
    let family = detect_family(state0);
    let d0 = [state0.d()[0], state0.d()[1], state0.d()[2], state0.d()[3]];
    let mut points = Vec::with_capacity(times.len());
    for &t in times {
        let st = evolve(state0, p, t)?;
        let report = measures::measure_all(&st, mu, zero_tol);
        let i_gn_closed = family.map(|f| match f {
            Family::SqueezedVacuum { r } => i_gn_closed_squeezed_vacuum(r, p, t),
            Family::Coherent => i_gn_closed_coherent(&d0, p, t, zero_tol).0,
        });
        points.push(TrajectoryPoint { t, report, i_gn_closed });
    }
    let h_flips = points
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].report.h_term != w[1].report.h_term)
        .map(|(i, w)| HFlip {
            index: i + 1,
            t: w[1].t,
            from: w[0].report.h_term,
            to: w[1].report.h_term,
        })
        .collect();
    Ok(Trajectory {
        family,
        points,
        h_flips,
    })
}
