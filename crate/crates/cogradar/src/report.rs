//! CSV report emission for simulation summaries, learned action values,
//! sweep results, beamformer benchmarks, and disturbance spectra.
//!
//! All files share one dialect: UTF-8, a single header row, LF line
//! endings, and floating-point cells printed with nine significant digits.

use crate::agent::QTable;
use crate::beamformer::IcaState;
use crate::disturbance::DisturbanceSpec;
use crate::error::{Error, Result};
use crate::simulator::McSummary;
use std::path::Path;

/// Nine-significant-digit cell format shared by every report.
pub fn sig9(v: f64) -> String {
    format!("{v:.8e}")
}

/// Writes `content` to `path`, wrapping filesystem failures with the path.
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Per-pulse, per-bin simulation table.
pub fn render_summary_csv(summary: &McSummary) -> String {
    let mut out = String::from(
        "pulse,bin,nu,detect_freq,pd_hat_mean,reward_mean,min_pattern_mean\n",
    );
    for k in 0..summary.pulses {
        for (l, &nu) in summary.grid.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                k,
                l,
                sig9(nu),
                sig9(summary.detect_freq[k][l]),
                sig9(summary.pd_hat_mean[k][l]),
                sig9(summary.reward_mean[k]),
                sig9(summary.min_pattern_mean[k]),
            ));
        }
    }
    out
}

/// Learned action values, one row per (state, action) cell.
pub fn render_qtable_csv(q: &QTable) -> String {
    let mut out = String::from("state,action,value\n");
    let m = q.max_targets();
    for s in 0..=m {
        for a in 0..=m {
            out.push_str(&format!("{},{},{}\n", s, a, sig9(q.get(s, a))));
        }
    }
    out
}

/// Action usage per pulse, one row per (pulse, action) with its count.
pub fn render_actions_csv(summary: &McSummary) -> String {
    let mut out = String::from("pulse,action,count\n");
    for (k, row) in summary.action_counts.iter().enumerate() {
        for (a, &count) in row.iter().enumerate() {
            out.push_str(&format!("{k},{a},{count}\n"));
        }
    }
    out
}

/// One point of a false-alarm-rate sweep.
#[derive(Debug, Clone)]
pub struct RocPoint {
    pub pfa: f64,
    pub bin: usize,
    pub nu: f64,
    pub detect_freq: f64,
}

pub fn render_roc_csv(points: &[RocPoint]) -> String {
    let mut out = String::from("pfa,bin,nu,detect_freq\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            sig9(p.pfa),
            p.bin,
            sig9(p.nu),
            sig9(p.detect_freq)
        ));
    }
    out
}

/// One point of an antenna-count sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub n: usize,
    pub bin: usize,
    pub nu: f64,
    pub detect_freq: f64,
}

pub fn render_sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("n,bin,nu,detect_freq\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.n,
            p.bin,
            sig9(p.nu),
            sig9(p.detect_freq)
        ));
    }
    out
}

/// Beam-synthesis benchmark trace for one transmit size: the initial point
/// plus one row per outer iteration.
pub fn render_beam_bench_csv(runs: &[(usize, IcaState)]) -> String {
    let mut out =
        String::from("ntx,iteration,min_pattern,subproblem_value,kkt_residual,converged\n");
    for (n_tx, state) in runs {
        for (it, &pat) in state.history.iter().enumerate() {
            let sub = if it == 0 {
                String::new()
            } else {
                sig9(state.subproblem_values[it - 1])
            };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                n_tx,
                it,
                sig9(pat),
                sub,
                sig9(state.kkt_residual),
                state.converged
            ));
        }
    }
    out
}

/// Disturbance power spectral density sampled on `rows` evenly spaced
/// frequencies across one period.
pub fn render_psd_csv(spec: &DisturbanceSpec, rows: usize) -> String {
    let mut out = String::from("nu,psd\n");
    for i in 0..rows {
        let nu = -0.5 + i as f64 / rows as f64;
        out.push_str(&format!("{},{}\n", sig9(nu), sig9(spec.psd(nu))));
    }
    out
}
