//! The `validate` and `measure` commands.

use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;
use gaussian_imaginarity::channel::{physicality_matrix, ChannelRecord};
use gaussian_imaginarity::linalg::{min_eigenvalue_hermitian, symplectic_form, times_i, to_complex, Mat};
use gaussian_imaginarity::measures::{measure_all, MeasureReport};
use gaussian_imaginarity::state::StateRecord;

use crate::io::{fmt_csv, fmt_csv_opt, read_json, read_state_or_channel, InputRecord};
use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Diagnostics for a state or channel file. `Ok` carries the report of a
/// valid input; an invalid one yields `CliError::Failed` with the report
/// and the failing condition.
pub fn validate(path: &Path, zero_tol: f64) -> Result<String> {
    match read_state_or_channel(path)? {
        InputRecord::State(rec) => validate_state(rec, zero_tol),
        InputRecord::Channel(rec) => validate_channel(rec, zero_tol),
    }
}

fn validate_state(rec: StateRecord, zero_tol: f64) -> Result<String> {
    let mut s = format!("kind: state\nn: {}\n", rec.n);
    if let Some(cm) = square(&rec.cm, 2 * rec.n) {
        let _ = writeln!(s, "symmetry residual: {:e}", (&cm - cm.transpose()).amax());
        if let Ok(form) = symplectic_form(rec.n) {
            let sym = (&cm + cm.transpose()).scale(0.5);
            let h = to_complex(&sym) + times_i(form.matrix());
            if let Ok(m) = min_eigenvalue_hermitian(&h) {
                let _ = writeln!(s, "min eigenvalue of cm + iΔ: {m:e}");
            }
        }
    }
    match rec.into_state(None) {
        Ok(st) => {
            let _ = writeln!(s, "valid: true");
            let _ = writeln!(s, "real: {}", st.is_real(zero_tol));
            Ok(s)
        }
        Err(e) => Err(CliError::Failed(format!("{s}valid: false\nerror: {e}\n"))),
    }
}

fn validate_channel(rec: ChannelRecord, zero_tol: f64) -> Result<String> {
    let mut s = format!("kind: channel\nn: {}\n", rec.n);
    let dim = 2 * rec.n;
    if let (Some(t), Some(noise)) = (square(&rec.t, dim), square(&rec.noise, dim)) {
        let _ = writeln!(s, "noise symmetry residual: {:e}", (&noise - noise.transpose()).amax());
        if rec.n > 0 {
            let sym = (&noise + noise.transpose()).scale(0.5);
            if let Ok(m) = min_eigenvalue_hermitian(&physicality_matrix(&t, &sym, rec.n)) {
                let _ = writeln!(s, "min eigenvalue of N + iΔ - iTΔTᵀ: {m:e}");
            }
        }
    }
    match rec.into_channel(None) {
        Ok(ch) => {
            let _ = writeln!(s, "valid: true");
            let _ = writeln!(s, "realness: {:?}", ch.classify_real(zero_tol));
            Ok(s)
        }
        Err(e) => Err(CliError::Failed(format!("{s}valid: false\nerror: {e}\n"))),
    }
}

fn square(rows: &[Vec<f64>], dim: usize) -> Option<Mat> {
    (dim > 0 && rows.len() == dim && rows.iter().all(|r| r.len() == dim))
        .then(|| Mat::from_fn(dim, dim, |i, j| rows[i][j]))
}

pub fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--mu must lie strictly between 0 and 1, got {mu}"
        )))
    }
}

pub fn check_zero_tol(zero_tol: f64) -> Result<()> {
    if zero_tol >= 0.0 && zero_tol.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--zero-tol must be finite and nonnegative, got {zero_tol}"
        )))
    }
}

pub fn measure(path: &Path, mu: f64, zero_tol: f64, format: Format) -> Result<String> {
    check_mu(mu)?;
    check_zero_tol(zero_tol)?;
    let rec: StateRecord = read_json(path)?;
    let st = rec
        .into_state(None)
        .map_err(|e| CliError::Domain(format!("invalid state: {e}")))?;
    let report = measure_all(&st, mu, zero_tol);
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        Format::Csv => report_csv(&report),
    })
}

/// Header plus one row; matrix blocks are left to the JSON output.
pub fn report_csv(r: &MeasureReport) -> String {
    format!(
        "n,i_gn,m_f,m_t,mu,h_term,det_nu,det_a11,det_a22,zero_tol\n{},{},{},{},{},{},{},{},{},{}\n",
        r.n,
        fmt_csv(r.i_gn),
        fmt_csv_opt(r.m_f),
        fmt_csv_opt(r.m_t),
        fmt_csv(r.mu),
        r.h_term,
        fmt_csv(r.det_nu),
        fmt_csv(r.det_a11),
        fmt_csv(r.det_a22),
        fmt_csv(r.zero_tol),
    )
}
