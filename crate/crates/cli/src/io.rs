//! File loading and number formatting.

use std::fs;
use std::path::Path;

use gaussian_imaginarity::channel::ChannelRecord;
use gaussian_imaginarity::state::StateRecord;
use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::{CliError, Result};

/// Significant digits of every float written to CSV.
pub const CSV_DIGITS: usize = 12;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// A state or channel file, told apart by the channel-only `"T"` key.
#[derive(Debug, Clone)]
pub enum InputRecord {
    State(StateRecord),
    Channel(ChannelRecord),
}

pub fn read_state_or_channel(path: &Path) -> Result<InputRecord> {
    let value: Value = read_json(path)?;
    let parse_err = |e: serde_json::Error| CliError::Usage(format!("{}: {e}", path.display()));
    if value.get("T").is_some() {
        serde_json::from_value(value)
            .map(InputRecord::Channel)
            .map_err(parse_err)
    } else {
        serde_json::from_value(value).map(InputRecord::State).map_err(parse_err)
    }
}

/// Rounds to [`CSV_DIGITS`] significant digits and prints the shortest
/// decimal that reads back as the rounded value.
pub fn fmt_csv(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{:.*e}", CSV_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses");
    // avoid "-0"
    if rounded == 0.0 {
        return "0".into();
    }
    if (1e-5..1e16).contains(&rounded.abs()) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

pub fn fmt_csv_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), fmt_csv)
}

/// Writes `text` to `out`, or returns it for stdout when `out` is `None`.
pub fn emit(text: String, out: Option<&Path>) -> Result<String> {
    match out {
        Some(p) => {
            fs::write(p, &text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}
