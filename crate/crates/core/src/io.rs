//! File formats: trial-log and per-step CSVs, and JSON helpers.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::log::{LogRow, TrialLog, LOG_HEADER};
use crate::rollout::Trajectory;

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => parse_error(path, line, format!("{other:?}")),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    create_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_log_csv(path: &Path, log: &TrialLog) -> Result<()> {
    let mut out = String::with_capacity(64 * log.len());
    out.push_str(&LOG_HEADER.join(","));
    out.push('\n');
    for r in &log.rows {
        let vals = [r.t, r.x, r.y, r.psi, r.u, r.v, r.r, r.delta, r.n];
        let line: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

/// Reads a log written by [`write_log_csv`] (or any CSV with the same
/// header). Errors name the offending line.
pub fn read_log_csv(path: &Path) -> Result<TrialLog> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(LOG_HEADER.iter().copied()) {
        return Err(parse_error(
            path,
            1,
            format!("expected header `{}`, found `{}`", LOG_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let mut vals = [0.0; 9];
        for (i, (field, slot)) in rec.iter().zip(&mut vals).enumerate() {
            *slot = field
                .parse::<f64>()
                .map_err(|_| parse_error(path, line, format!("column `{}`: `{field}` is not a number", LOG_HEADER[i])))?;
            if !slot.is_finite() {
                return Err(parse_error(path, line, format!("column `{}` is not finite", LOG_HEADER[i])));
            }
        }
        let [t, x, y, psi, u, v, r, delta, n] = vals;
        rows.push(LogRow {
            t,
            x,
            y,
            psi,
            u,
            v,
            r,
            delta,
            n,
        });
    }
    TrialLog::new(rows).map_err(|e| match e {
        // rows are 0-based, the header is line 1
        Error::NonUniformSampling { row, expected, found } => parse_error(
            path,
            row as u64 + 2,
            format!("sampling interval {found} differs from {expected}"),
        ),
        other => parse_error(path, 0, other.to_string()),
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json_string(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_error(path, e.line() as u64, e.to_string()))
}

/// One row per optimizer step.
pub fn write_loss_trace(path: &Path, columns: &[(&str, &[f64])]) -> Result<()> {
    let len = columns.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
    let mut header = vec!["step"];
    header.extend(columns.iter().map(|(n, _)| *n));
    let mut out = header.join(",");
    out.push('\n');
    for k in 0..len {
        out.push_str(&(k + 1).to_string());
        for (_, col) in columns {
            out.push(',');
            if let Some(v) = col.get(k) {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// Truth and model trajectories side by side, one row per log sample.
/// Models that diverged leave their cells empty after the last completed
/// step.
pub fn write_trajectories_csv(path: &Path, truth: &Trajectory, models: &[(&str, &Trajectory)]) -> Result<()> {
    const COLS: [&str; 6] = ["x", "y", "psi", "u", "v", "r"];
    let mut header = vec!["t".to_string(), "delta".to_string(), "n".to_string()];
    for prefix in std::iter::once("truth").chain(models.iter().map(|(n, _)| *n)) {
        header.extend(COLS.iter().map(|c| format!("{prefix}_{c}")));
    }
    let mut out = header.join(",");
    out.push('\n');
    let cells = |traj: &Trajectory, k: usize, out: &mut String| {
        if k < traj.len() {
            let (p, s) = (&traj.poses[k], &traj.states[k]);
            for v in [p.x, p.y, p.psi, s.u, s.v, s.r] {
                out.push(',');
                out.push_str(&v.to_string());
            }
        } else {
            out.push_str(",,,,,,");
        }
    };
    for k in 0..truth.len() {
        let c = truth.controls.get(k).copied().unwrap_or_default();
        out.push_str(&format!("{},{},{}", truth.times[k], c.delta, c.n));
        cells(truth, k, &mut out);
        for (_, traj) in models {
            cells(traj, k, &mut out);
        }
        out.push('\n');
    }
    write_text(path, &out)
}
