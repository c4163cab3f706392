//! Parameter sweeps over the synthetic market family, written as CSV plot
//! data.
//!
//! Replicate `j` of every grid point uses the same generator seed, so grid
//! points are compared on common random draws. Replicates run in parallel
//! and are merged in grid order; floating-point sums always run in that
//! order, which keeps the output byte-identical across runs.

use std::io::Write;

use rayon::prelude::*;

use crate::datagen::{gen_synthetic, SyntheticConfig};
use crate::error::{Error, Result};
use crate::fairness::solve_fair_singleton;
use crate::model::{build_resources_needs_graph, satisfaction_vector, MarketInstance};
use crate::welfare::{solve_max_welfare, SolveOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub n: usize,
    pub k: usize,
    pub deltas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub beta_hs: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.deltas.is_empty() || self.lambdas.is_empty() || self.beta_hs.is_empty() {
            problems.push("every grid axis needs at least one value".to_string());
        }
        if self.replicates == 0 {
            problems.push("replicates must be at least 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Grid points in output order: delta outermost, then lambda, then beta_h.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for &d in &self.deltas {
            for &l in &self.lambdas {
                for &b in &self.beta_hs {
                    out.push((d, l, b));
                }
            }
        }
        out
    }

    pub fn synthetic(&self, (delta, lambda, beta_h): (f64, f64, f64), replicate: usize) -> SyntheticConfig {
        SyntheticConfig { n: self.n, k: self.k, delta, lambda, beta_h, seed: replicate_seed(self.seed, replicate) }
    }
}

/// Generator seed of replicate `j` (SplitMix64 finalizer of `seed + j`).
pub fn replicate_seed(seed: u64, j: usize) -> u64 {
    let mut z = seed.wrapping_add((j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Measurements of one solved instance.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateMetrics {
    pub sellers: f64,
    pub rn_edges: f64,
    pub welfare: f64,
    /// `(sigma0 + welfare) / sigma_full`, with `sigma_full` the pre-trade
    /// value of the same draw when all water is available.
    pub sigma_ratio: f64,
    pub sat_mean: f64,
    pub sat_min: f64,
    pub sat_full: f64,
}

pub fn replicate_metrics(cfg: &SyntheticConfig) -> Result<ReplicateMetrics> {
    let inst = gen_synthetic(cfg)?;
    let full = gen_synthetic(&SyntheticConfig { delta: 1.0, ..cfg.clone() })?;
    let sol = solve_max_welfare(&inst, SolveOptions::default())?;
    let sigma_full = full.sigma0().to_f64();
    let sigma = (inst.sigma0() + sol.welfare).to_f64();
    let sat = satisfaction_vector(&sol.assignment, &inst).to_f64();
    // no buyers: every buyer is vacuously satisfied
    let (sat_mean, sat_min, sat_full) = if sat.is_empty() {
        (1.0, 1.0, 1.0)
    } else {
        let n = sat.len() as f64;
        (
            sat.iter().sum::<f64>() / n,
            sat.iter().copied().fold(f64::INFINITY, f64::min),
            sat.iter().filter(|&&s| s >= 1.0).count() as f64 / n,
        )
    };
    Ok(ReplicateMetrics {
        sellers: inst.sellers().len() as f64,
        rn_edges: build_resources_needs_graph(&inst).edges().len() as f64,
        welfare: sol.welfare.to_f64(),
        sigma_ratio: if sigma_full > 0.0 { sigma / sigma_full } else { 0.0 },
        sat_mean,
        sat_min,
        sat_full,
    })
}

/// Mean and sample standard deviation (0 for a single sample).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub lambda: f64,
    pub beta_h: f64,
    pub replicates: usize,
    /// `(mean, sd)` per metric, in [`METRIC_NAMES`] order.
    pub stats: Vec<(f64, f64)>,
}

impl SweepRow {
    pub fn mean(&self, metric: &str) -> Option<f64> {
        METRIC_NAMES.iter().position(|m| *m == metric).map(|i| self.stats[i].0)
    }
}

pub const METRIC_NAMES: [&str; 7] = ["sellers", "rn_edges", "welfare", "sigma_ratio", "sat_mean", "sat_min", "sat_full"];

/// Column names and descriptions of the sweep CSV.
pub const SWEEP_COLUMNS: [(&str, &str); 18] = [
    ("delta", "water availability"),
    ("lambda", "seniority-value correlation"),
    ("beta_h", "high-value slope"),
    ("replicates", "instances per grid point"),
    ("sellers_mean", "number of sellers"),
    ("sellers_sd", ""),
    ("rn_edges_mean", "edges of the resources-needs graph"),
    ("rn_edges_sd", ""),
    ("welfare_mean", "welfare of a maximum-welfare assignment"),
    ("welfare_sd", ""),
    ("sigma_ratio_mean", "total value after trade over pre-trade value at delta = 1"),
    ("sigma_ratio_sd", ""),
    ("sat_mean_mean", "mean buyer satisfaction (1 when there are no buyers)"),
    ("sat_mean_sd", ""),
    ("sat_min_mean", "minimum buyer satisfaction"),
    ("sat_min_sd", ""),
    ("sat_full_mean", "fraction of buyers fully satisfied"),
    ("sat_full_sd", ""),
];

pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let points = cfg.points();
    let tasks: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|p| (0..cfg.replicates).map(move |j| (p, j))).collect();
    let results: Vec<ReplicateMetrics> =
        tasks.par_iter().map(|&(p, j)| replicate_metrics(&cfg.synthetic(points[p], j))).collect::<Result<_>>()?;
    Ok(points
        .iter()
        .zip(results.chunks(cfg.replicates))
        .map(|(&(delta, lambda, beta_h), reps)| {
            let columns: [fn(&ReplicateMetrics) -> f64; 7] = [
                |m| m.sellers,
                |m| m.rn_edges,
                |m| m.welfare,
                |m| m.sigma_ratio,
                |m| m.sat_mean,
                |m| m.sat_min,
                |m| m.sat_full,
            ];
            let stats = columns.iter().map(|f| mean_sd(&reps.iter().map(f).collect::<Vec<_>>())).collect();
            SweepRow { delta, lambda, beta_h, replicates: reps.len(), stats }
        })
        .collect())
}

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS.iter().map(|(n, _)| *n))?;
    for r in rows {
        let mut rec = vec![fmt(r.delta), fmt(r.lambda), fmt(r.beta_h), r.replicates.to_string()];
        for &(m, s) in &r.stats {
            rec.push(fmt(m));
            rec.push(fmt(s));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Welfare of the best assignment giving every buyer at least `r` units,
/// over the unconstrained optimum; `None` when no assignment meets the
/// bound, 1 when the unconstrained welfare is 0 and the bound is feasible.
///
/// A feasible bound can still give 0 when every assignment meeting it
/// trades at zero value gap, so the sweep reports infeasibility in its own
/// column besides encoding it as 0.
pub fn fair_ratio(inst: &MarketInstance, r: u32) -> Result<Option<f64>> {
    let best = solve_max_welfare(inst, SolveOptions::default())?.welfare;
    let lower = vec![r; inst.buyers().len()];
    match solve_fair_singleton(inst, &lower) {
        Ok(a) => {
            let w = crate::model::welfare(&a, inst)?;
            Ok(Some(if best.micros() == 0 { 1.0 } else { w.to_f64() / best.to_f64() }))
        }
        Err(e) if e.is_infeasible() => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FairRow {
    pub delta: f64,
    pub lambda: f64,
    pub beta_h: f64,
    pub r: u32,
    pub replicates: usize,
    pub ratio: (f64, f64),
    pub infeasible_frac: f64,
}

pub const FAIR_COLUMNS: [(&str, &str); 8] = [
    ("delta", "water availability"),
    ("lambda", "seniority-value correlation"),
    ("beta_h", "high-value slope"),
    ("r", "lower bound on units for every buyer"),
    ("replicates", "instances per grid point"),
    ("fair_ratio_mean", "welfare with the bound over unconstrained welfare; 0 when infeasible"),
    ("fair_ratio_sd", ""),
    ("infeasible_frac", "fraction of replicates where the bound cannot be met"),
];

/// Welfare-fairness tradeoff: one row per grid point and bound `r`.
pub fn run_fair_sweep(cfg: &SweepConfig, rs: &[u32]) -> Result<Vec<FairRow>> {
    cfg.validate()?;
    if rs.is_empty() {
        return Err(Error::Validation(vec!["no lower bounds given".into()]));
    }
    let points = cfg.points();
    let tasks: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|p| (0..cfg.replicates).map(move |j| (p, j))).collect();
    let results: Vec<Vec<Option<f64>>> = tasks
        .par_iter()
        .map(|&(p, j)| {
            let inst = gen_synthetic(&cfg.synthetic(points[p], j))?;
            rs.iter().map(|&r| fair_ratio(&inst, r)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (&(delta, lambda, beta_h), reps) in points.iter().zip(results.chunks(cfg.replicates)) {
        for (i, &r) in rs.iter().enumerate() {
            let xs: Vec<f64> = reps.iter().map(|v| v[i].unwrap_or(0.0)).collect();
            let infeasible = reps.iter().filter(|v| v[i].is_none()).count() as f64 / xs.len() as f64;
            rows.push(FairRow { delta, lambda, beta_h, r, replicates: xs.len(), ratio: mean_sd(&xs), infeasible_frac: infeasible });
        }
    }
    Ok(rows)
}

pub fn write_fair_csv<W: Write>(rows: &[FairRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FAIR_COLUMNS.iter().map(|(n, _)| *n))?;
    for r in rows {
        w.write_record([
            fmt(r.delta),
            fmt(r.lambda),
            fmt(r.beta_h),
            r.r.to_string(),
            r.replicates.to_string(),
            fmt(r.ratio.0),
            fmt(r.ratio.1),
            fmt(r.infeasible_frac),
        ])?;
    }
    w.flush()?;
    Ok(())
}
