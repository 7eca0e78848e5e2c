//! CSV and JSON artifacts.
//!
//! CSV files are UTF-8 with a header row and `.` decimals; floating-point
//! values are written in shortest round-trip form, so re-reading a file
//! reproduces the computed numbers exactly.

use optosync_core::measures::MeasureSeries;
use optosync_core::{CellStatus, SweepField, Trajectory};
use serde::Serialize;
use std::io::{self, Write};
use std::path::Path;

/// Shortest round-trip text of `x`; exponent form outside `[1e-4, 1e15)`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Header of the trajectory CSV: time, the four mode amplitudes, then the
/// upper triangle of the covariance row by row (`c_i_j`, `i <= j`, indices
/// in the order x1, y1, x2, y2, q1, p1, q2, p2).
pub fn trajectory_header(with_cov: bool) -> Vec<String> {
    let mut h: Vec<String> = ["t", "a1_re", "a1_im", "a2_re", "a2_im", "b1_re", "b1_im", "b2_re", "b2_im"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if with_cov {
        for i in 0..8 {
            for j in i..8 {
                h.push(format!("c_{i}_{j}"));
            }
        }
    }
    h
}

pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(traj.covs.is_some())).map_err(csv_err)?;
    for (k, (t, m)) in traj.times.iter().zip(&traj.means).enumerate() {
        let mut row = vec![fmt_f64(*t)];
        row.extend(m.to_array().iter().map(|v| fmt_f64(*v)));
        if let Some(covs) = &traj.covs {
            row.extend(covs[k].0.upper_triangle().iter().map(|v| fmt_f64(*v)));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
}

pub const MEASURE_HEADER: [&str; 6] = ["t", "theta", "sc_prime", "sp_prime", "mean_q_minus", "mean_p_minus"];

/// Measure series; covariance columns are empty when it was not propagated.
pub fn write_measures_csv<W: Write>(out: W, m: &MeasureSeries) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MEASURE_HEADER).map_err(csv_err)?;
    let opt = |s: &Option<Vec<f64>>, k: usize| s.as_ref().map_or(String::new(), |v| fmt_f64(v[k]));
    for k in 0..m.times.len() {
        w.write_record([
            fmt_f64(m.times[k]),
            fmt_f64(m.theta[k]),
            opt(&m.sc_prime, k),
            opt(&m.sp_prime, k),
            fmt_f64(m.mean_q_minus[k]),
            fmt_f64(m.mean_p_minus[k]),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

pub fn status_name(s: CellStatus) -> &'static str {
    match s {
        CellStatus::Ok => "ok",
        CellStatus::Divergent => "divergent",
        CellStatus::Marginal => "marginal",
    }
}

/// Sweep field, one row per cell in `mu`-major order.
pub fn write_sweep_csv<W: Write>(out: W, field: &SweepField) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mu", "lambda", "value", "status"]).map_err(csv_err)?;
    for k in 0..field.values.len() {
        let (mu, lambda) = field.grid.point(k);
        w.write_record([
            fmt_f64(mu),
            fmt_f64(lambda),
            fmt_f64(field.values[k]),
            status_name(field.status[k]).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

/// Read back a sweep CSV written by [`write_sweep_csv`] as
/// `(mu, lambda, value, status)` rows.
pub fn read_sweep_csv(path: &Path) -> io::Result<Vec<(f64, f64, f64, String)>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let num = |i: usize| -> io::Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
        };
        rows.push((num(0)?, num(1)?, num(2)?, rec[3].to_string()));
    }
    Ok(rows)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}
