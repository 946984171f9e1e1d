//! File formats: trajectory and diagnostics CSV, and the JSON run summary.
//!
//! Numbers are printed as the shortest decimal that round-trips to the value
//! after rounding to the configured number of significant digits; at 17
//! digits this is the exact binary value. Values that are not defined at a
//! sample (for instance `e_kin_rel` at `t = 0`) are written as empty fields.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::asymptotics::AsymptoticSummary;
use crate::checks::CheckOutcome;
use crate::diagnostics::DiagnosticRecord;
use crate::error::{Error, Result};
use crate::integrate::{StepStats, Trajectory};
use crate::model::{ParticleState, Vec3};
use crate::scenarios::ScenarioSpec;

pub const DIAG_COLUMNS: [&str; 14] = [
    "t",
    "e_kin",
    "e_pot",
    "e_total",
    "e_kin_rel",
    "inertia",
    "inertia_rate",
    "int_e_rel",
    "int_t_epot",
    "residual_b",
    "t_epot",
    "e_rel_scaled",
    "velocity_margin",
    "distance_margin",
];

/// Shortest representation of `x` rounded to `precision` significant digits.
pub fn format_number(x: f64, precision: u32) -> String {
    let rounded = if precision >= 17 || !x.is_finite() || x == 0.0 {
        x
    } else {
        format!("{:.*e}", precision as usize - 1, x)
            .parse::<f64>()
            .expect("formatted float parses")
    };
    format!("{rounded:?}")
}

fn optional(x: Option<f64>, precision: u32) -> String {
    x.map(|v| format_number(v, precision)).unwrap_or_default()
}

/// `t`, then `x<i>_x, x<i>_y, x<i>_z` for every particle, then the
/// velocities `v<i>_x, ...` in the same order.
pub fn trajectory_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for prefix in ["x", "v"] {
        for i in 1..=n {
            for c in ["x", "y", "z"] {
                h.push(format!("{prefix}{i}_{c}"));
            }
        }
    }
    h
}

fn write_rows(out: impl Write, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()
}

pub fn write_trajectory_csv(out: impl Write, trajectory: &Trajectory, precision: u32) -> std::io::Result<()> {
    let n = trajectory.first().state.len();
    let rows = trajectory.samples.iter().map(|s| {
        std::iter::once(s.t())
            .chain(s.state.to_flat())
            .map(|v| format_number(v, precision))
            .collect()
    });
    write_rows(out, &trajectory_header(n), rows)
}

pub fn write_diagnostics_csv(
    out: impl Write,
    trajectory: &Trajectory,
    records: &[DiagnosticRecord],
    precision: u32,
) -> std::io::Result<()> {
    let header: Vec<String> = DIAG_COLUMNS.iter().map(|s| s.to_string()).collect();
    let rows = trajectory.samples.iter().zip(records).map(|(s, d)| {
        let r = &s.report;
        let num = |v: f64| format_number(v, precision);
        vec![
            num(s.t()),
            num(r.e_kin),
            num(r.e_pot),
            num(r.e_total),
            optional(r.e_kin_rel, precision),
            num(r.inertia),
            num(r.inertia_rate),
            optional(s.quad.map(|q| q.int_e_rel()), precision),
            optional(s.quad.map(|q| q.int_t_epot()), precision),
            optional(d.residual_b, precision),
            num(d.t_epot),
            optional(d.e_rel_scaled, precision),
            num(d.velocity_margin),
            optional(d.distance_margin, precision),
        ]
    });
    write_rows(out, &header, rows)
}

/// Reads a trajectory CSV back into states. Rows and columns in errors are
/// 1-based, the header being row 1.
pub fn parse_trajectory_csv(text: &str) -> Result<Vec<ParticleState>> {
    let parse_err = |row: usize, column: usize, message: String| Error::Parse { row, column, message };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(parse_err(1, 1, e.to_string())),
        None => return Err(parse_err(1, 1, "empty file".into())),
    };
    let width = header.len();
    if width < 7 || (width - 1) % 6 != 0 {
        return Err(parse_err(1, width, format!("{width} columns do not match t plus 6 per particle")));
    }
    let n = (width - 1) / 6;
    let expected = trajectory_header(n);
    if let Some((col, (got, want))) = header.iter().zip(&expected).enumerate().find(|(_, (g, w))| g.trim() != w.as_str()) {
        return Err(parse_err(1, col + 1, format!("expected column `{want}`, found `{got}`")));
    }

    let mut states = Vec::new();
    for (k, record) in records.enumerate() {
        let row = k + 2;
        let record = record.map_err(|e| parse_err(row, 1, e.to_string()))?;
        if record.len() != width {
            return Err(parse_err(
                row,
                record.len().min(width) + usize::from(record.len() < width),
                format!("expected {width} fields, found {}", record.len()),
            ));
        }
        let mut values = Vec::with_capacity(width);
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(row, c + 1, format!("`{field}` is not a number")))?;
            values.push(v);
        }
        let triples = |offset: usize| -> Vec<Vec3> {
            (0..n)
                .map(|i| Vec3::new(values[offset + 3 * i], values[offset + 3 * i + 1], values[offset + 3 * i + 2]))
                .collect()
        };
        let state = ParticleState::new(values[0], triples(1), triples(1 + 3 * n))
            .map_err(|e| parse_err(row, 1, e.to_string()))?;
        states.push(state);
    }
    if states.is_empty() {
        return Err(parse_err(2, 1, "no data rows".into()));
    }
    if !text.ends_with('\n') {
        let rows = states.len() + 1;
        return Err(parse_err(rows, width, "truncated row: missing line terminator".into()));
    }
    Ok(states)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCounts {
    pub accepted: usize,
    pub rejected: usize,
}

impl From<StepStats> for StepCounts {
    fn from(s: StepStats) -> Self {
        Self {
            accepted: s.accepted,
            rejected: s.rejected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: ScenarioSpec,
    pub n: usize,
    pub t_end: f64,
    pub e0: f64,
    /// `E_kin^rel(1) + E_pot(1)`.
    pub c_constant: Option<f64>,
    pub steps: StepCounts,
    pub asymptotics: AsymptoticSummary,
    pub checks: Vec<CheckOutcome>,
    pub all_passed: bool,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summary serialises");
    s.push('\n');
    s
}

/// Resolves `<prefix><suffix>`, placing relative prefixes under `out_dir`
/// when one is given.
pub fn output_path(prefix: &str, suffix: &str, out_dir: Option<&Path>) -> PathBuf {
    let file = format!("{prefix}{suffix}");
    let p = PathBuf::from(&file);
    match out_dir {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    }
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
