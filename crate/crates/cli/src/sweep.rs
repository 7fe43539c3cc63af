//! Declarative parameter sweeps over named state families.
//!
//! A [`SweepSpec`] names a family, pins some of its parameters and sweeps
//! one more over an evenly spaced grid. Parameter names per family:
//!
//! | family | parameters |
//! |---|---|
//! | `coherent` | `alpha_re`, `alpha_im` |
//! | `squeezed` | `r`, `theta` or `zeta_re`, `zeta_im` or `s` (with optional `theta`) |
//! | `squeezed_thermal` | `n_th`, `r`, `theta`, `alpha_re`, `alpha_im` |
//! | `sv_dynamics` | `r`, `n_th`, `R`, `phi`, `lambda`, `t` |
//! | `coherent_dynamics` | `alpha1_re`, `alpha1_im`, `alpha2_re`, `alpha2_im`, `n_th`, `R`, `phi`, `lambda`, `t` |
//!
//! `s` stands for `sin²θ sinh²(2r)`, the single combination the pure
//! squeezed-state measures depend on; `theta` defaults to `π/2` with it.
//! In the dynamics families `r` is the two-mode squeezing of the starting
//! state and `R`, `phi` the bath squeezing; angles are in radians.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use gaussian_imaginarity::dynamics::{linspace, trajectory, BathParams};
use gaussian_imaginarity::measures::measure_all;
use gaussian_imaginarity::state::{coherent_state, displaced_squeezed_thermal, two_mode_squeezed_vacuum};
use gaussian_imaginarity::{dynamics, GaussianState, DEFAULT_ZERO_TOL};
use nalgebra::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::{fmt_csv, fmt_csv_opt};
use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Coherent,
    Squeezed,
    SqueezedThermal,
    SvDynamics,
    CoherentDynamics,
}

impl Family {
    /// Accepted parameter names with their defaults; `None` means required.
    fn params(self) -> &'static [(&'static str, Option<f64>)] {
        match self {
            Family::Coherent => &[("alpha_re", Some(0.0)), ("alpha_im", Some(0.0))],
            Family::Squeezed => &[
                ("r", None),
                ("theta", None),
                ("zeta_re", None),
                ("zeta_im", None),
                ("s", None),
            ],
            Family::SqueezedThermal => &[
                ("n_th", Some(0.0)),
                ("r", Some(0.0)),
                ("theta", Some(0.0)),
                ("alpha_re", Some(0.0)),
                ("alpha_im", Some(0.0)),
            ],
            Family::SvDynamics => &[
                ("r", None),
                ("n_th", None),
                ("R", None),
                ("phi", None),
                ("lambda", None),
                ("t", None),
            ],
            Family::CoherentDynamics => &[
                ("alpha1_re", Some(0.0)),
                ("alpha1_im", Some(0.0)),
                ("alpha2_re", Some(0.0)),
                ("alpha2_im", Some(0.0)),
                ("n_th", None),
                ("R", None),
                ("phi", None),
                ("lambda", None),
                ("t", None),
            ],
        }
    }

    fn is_dynamics(self) -> bool {
        matches!(self, Family::SvDynamics | Family::CoherentDynamics)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn grid(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Free text, ignored by the runner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub family: Family,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    pub axis: Axis,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_zero_tol")]
    pub zero_tol: f64,
}

fn default_mu() -> f64 {
    0.5
}

fn default_zero_tol() -> f64 {
    DEFAULT_ZERO_TOL
}

type Params = BTreeMap<String, f64>;

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Domain(format!("invalid sweep spec: {m}")));
        let known = self.family.params();
        let is_known = |k: &str| known.iter().any(|(name, _)| *name == k);
        if !is_known(&self.axis.name) {
            return bad(format!(
                "axis '{}' is not a parameter of {:?}",
                self.axis.name, self.family
            ));
        }
        if self.fixed.contains_key(&self.axis.name) {
            return bad(format!("'{}' is both fixed and swept", self.axis.name));
        }
        if let Some(k) = self.fixed.keys().find(|k| !is_known(k)) {
            return bad(format!("unknown parameter '{k}' for {:?}", self.family));
        }
        if let Some((k, _)) = self.fixed.iter().find(|(_, v)| !v.is_finite()) {
            return bad(format!("parameter '{k}' is not finite"));
        }
        if self.axis.count < 2 {
            return bad(format!("grid count must be at least 2, got {}", self.axis.count));
        }
        if !(self.axis.start.is_finite() && self.axis.stop.is_finite()) {
            return bad("grid bounds must be finite".into());
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return bad(format!("mu must lie strictly between 0 and 1, got {}", self.mu));
        }
        if !(self.zero_tol >= 0.0 && self.zero_tol.is_finite()) {
            return bad(format!(
                "zero_tol must be finite and nonnegative, got {}",
                self.zero_tol
            ));
        }
        // resolve once with the axis at its start so missing parameters
        // surface before any work is done
        self.params_at(self.axis.start).map(|_| ())
    }

    fn params_at(&self, x: f64) -> Result<Params> {
        let mut p = self.fixed.clone();
        p.insert(self.axis.name.clone(), x);
        for (name, default) in self.family.params() {
            if !p.contains_key(*name) {
                if let Some(v) = default {
                    p.insert((*name).to_string(), *v);
                } else if self.family != Family::Squeezed {
                    return Err(CliError::Domain(format!(
                        "invalid sweep spec: missing parameter '{name}' for {:?}",
                        self.family
                    )));
                }
            }
        }
        if self.family == Family::Squeezed {
            squeezed_zeta(&p)?;
        }
        Ok(p)
    }

    /// The state at grid value `x` of the swept axis.
    pub fn state_at(&self, x: f64) -> Result<GaussianState> {
        let p = self.params_at(x)?;
        let g = |k: &str| p[k];
        let domain = |e: &dyn std::fmt::Display| CliError::Domain(format!("{} = {x}: {e}", self.axis.name));
        match self.family {
            Family::Coherent => coherent_state(&[Complex::new(g("alpha_re"), g("alpha_im"))]).map_err(|e| domain(&e)),
            Family::Squeezed => {
                let zeta = squeezed_zeta(&p)?;
                displaced_squeezed_thermal(0.0, zeta, Complex::new(0.0, 0.0)).map_err(|e| domain(&e))
            }
            Family::SqueezedThermal => displaced_squeezed_thermal(
                g("n_th"),
                Complex::from_polar(g("r"), g("theta")),
                Complex::new(g("alpha_re"), g("alpha_im")),
            )
            .map_err(|e| domain(&e)),
            Family::SvDynamics | Family::CoherentDynamics => {
                let (s0, bath) = self.dynamics_setup(&p).map_err(|e| domain(&e))?;
                dynamics::evolve(&s0, &bath, g("t")).map_err(|e| domain(&e))
            }
        }
    }

    fn dynamics_setup(
        &self,
        p: &Params,
    ) -> std::result::Result<(GaussianState, BathParams), Box<dyn std::error::Error>> {
        let bath = BathParams::new(p["lambda"], p["n_th"], p["R"], p["phi"])?;
        let s0 = match self.family {
            Family::SvDynamics => two_mode_squeezed_vacuum(p["r"])?,
            _ => coherent_state(&[
                Complex::new(p["alpha1_re"], p["alpha1_im"]),
                Complex::new(p["alpha2_re"], p["alpha2_im"]),
            ])?,
        };
        Ok((s0, bath))
    }
}

/// `ζ` of the pure squeezed family from whichever parameterization is used.
fn squeezed_zeta(p: &Params) -> Result<Complex<f64>> {
    let bad = |m: &str| Err(CliError::Domain(format!("invalid sweep spec: squeezed family {m}")));
    let has = |k: &str| p.contains_key(k);
    let polar = has("r") || has("theta") && !has("s");
    let cart = has("zeta_re") || has("zeta_im");
    match (has("s"), polar, cart) {
        (true, _, false) if !has("r") => {
            let s = p["s"];
            let theta = p.get("theta").copied().unwrap_or(FRAC_PI_2);
            let sin = theta.sin();
            if s < 0.0 {
                return bad("needs s >= 0");
            }
            if s > 0.0 && sin == 0.0 {
                return bad("cannot reach s > 0 with sin(theta) = 0");
            }
            let r = if s == 0.0 {
                0.0
            } else {
                (s.sqrt() / sin.abs()).asinh() / 2.0
            };
            Ok(Complex::from_polar(r, theta))
        }
        (false, true, false) => Ok(Complex::from_polar(
            p.get("r").copied().unwrap_or(0.0),
            p.get("theta").copied().unwrap_or(0.0),
        )),
        (false, false, true) => Ok(Complex::new(
            p.get("zeta_re").copied().unwrap_or(0.0),
            p.get("zeta_im").copied().unwrap_or(0.0),
        )),
        _ => bad("takes exactly one of (r, theta), (zeta_re, zeta_im) or (s, theta)"),
    }
}

/// One row per grid point, `axis,i_gn,m_f,m_t`; failed measures print `nan`.
pub fn run_sweep(spec: &SweepSpec) -> Result<String> {
    spec.validate()?;
    let grid = spec.axis.grid();
    let rows: Vec<Result<String>> = grid
        .par_iter()
        .map(|&x| {
            let st = spec.state_at(x)?;
            let r = measure_all(&st, spec.mu, spec.zero_tol);
            Ok(format!(
                "{},{},{},{}\n",
                fmt_csv(x),
                fmt_csv(r.i_gn),
                fmt_csv_opt(r.m_f),
                fmt_csv_opt(r.m_t)
            ))
        })
        .collect();
    let mut out = String::from("axis,i_gn,m_f,m_t\n");
    for row in rows {
        out.push_str(&row?);
    }
    Ok(out)
}

/// CSV of a time trajectory plus human-readable notes for every change of
/// the displacement indicator `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsOutput {
    pub csv: String,
    pub notes: Vec<String>,
}

/// `t,i_gn,i_gn_closed,h_term` along the axis `t` of a dynamics family.
pub fn run_dynamics(spec: &SweepSpec) -> Result<DynamicsOutput> {
    if !spec.family.is_dynamics() {
        return Err(CliError::Domain(format!(
            "invalid dynamics spec: family {:?} is not sv_dynamics or coherent_dynamics",
            spec.family
        )));
    }
    if spec.axis.name != "t" {
        return Err(CliError::Domain(format!(
            "invalid dynamics spec: the axis must be 't', got '{}'",
            spec.axis.name
        )));
    }
    spec.validate()?;
    let p = spec.params_at(spec.axis.start)?;
    let (s0, bath) = spec
        .dynamics_setup(&p)
        .map_err(|e| CliError::Domain(format!("invalid dynamics spec: {e}")))?;
    let tr = trajectory(&s0, &bath, &spec.axis.grid(), spec.mu, spec.zero_tol)
        .map_err(|e| CliError::Domain(format!("invalid dynamics spec: {e}")))?;
    let mut csv = String::from("t,i_gn,i_gn_closed,h_term\n");
    for pt in &tr.points {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_csv(pt.t),
            fmt_csv(pt.report.i_gn),
            fmt_csv_opt(pt.i_gn_closed),
            pt.report.h_term
        ));
    }
    let notes = tr
        .h_flips
        .iter()
        .map(|f| {
            format!(
                "h-flip at row {} (t = {}): h {} -> {}",
                f.index,
                fmt_csv(f.t),
                f.from,
                f.to
            )
        })
        .collect();
    Ok(DynamicsOutput { csv, notes })
}
