//! Empirical energy CDFs and the multi-gauge comparison experiment.
//!
//! The comparison metric is the mean, over the union of both CDFs' step
//! points, of `F_baseline(e) - F_other(e)`, in percent. CDFs are evaluated
//! right-continuously. A positive value means the baseline put more mass at
//! low energies, i.e. the untransformed problem did better.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::gauge::{decode_sampleset, encode_problem, keygen, SecretKey};
use crate::ising::{IsingProblem, SampleSet, Spins};
use crate::samplers::{exact_boltzmann, simulated_annealing_with, AnnealParams};
use crate::seed::{derive, rng_from_seed};
use crate::{Error, Result};

/// Step points `(energy, P(E <= energy))` with strictly increasing energies
/// and a final probability of exactly 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyCdf {
    pub points: Vec<(f64, f64)>,
}

impl EnergyCdf {
    /// Builds a CDF from `(energy, weight)` pairs. Weights of equal energies
    /// are pooled; weights must be nonnegative with a positive total.
    pub fn from_weighted(mut items: Vec<(f64, f64)>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Empty);
        }
        if items.iter().any(|(e, w)| !e.is_finite() || w.is_nan() || *w < 0.0) {
            return Err(Error::InvalidParameter("energies must be finite and weights nonnegative".into()));
        }
        items.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut grouped: Vec<(f64, f64)> = Vec::new();
        for (e, w) in items {
            match grouped.last_mut() {
                Some(last) if last.0 == e => last.1 += w,
                _ => grouped.push((e, w)),
            }
        }
        let total: f64 = grouped.iter().map(|g| g.1).sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::InvalidParameter("total weight must be positive".into()));
        }
        let mut acc = 0.0;
        let mut points: Vec<(f64, f64)> = grouped
            .into_iter()
            .map(|(e, w)| {
                acc += w;
                (e, acc / total)
            })
            .collect();
        if let Some(last) = points.last_mut() {
            last.1 = 1.0;
        }
        Ok(EnergyCdf { points })
    }

    /// `P(E <= e)`.
    pub fn eval(&self, e: f64) -> f64 {
        let k = self.points.partition_point(|p| p.0 <= e);
        if k == 0 {
            0.0
        } else {
            self.points[k - 1].1
        }
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }
}

/// Occurrence-weighted empirical CDF of sample energies.
pub fn cdf(ss: &SampleSet) -> Result<EnergyCdf> {
    if ss.total_occurrences() == 0 {
        return Err(Error::Empty);
    }
    EnergyCdf::from_weighted(ss.samples.iter().map(|s| (s.energy, s.occurrences as f64)).collect())
}

fn union_grid(a: &EnergyCdf, b: &EnergyCdf) -> Vec<f64> {
    let mut grid: Vec<f64> = a.energies().chain(b.energies()).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Mean of `F_baseline - F_other` over the union of step points, times 100.
pub fn avg_cdf_diff(baseline: &EnergyCdf, other: &EnergyCdf) -> f64 {
    let grid = union_grid(baseline, other);
    if grid.is_empty() {
        return 0.0;
    }
    let sum: f64 = grid.iter().map(|&e| baseline.eval(e) - other.eval(e)).sum();
    100.0 * sum / grid.len() as f64
}

/// Two-sample Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample KS test on raw values, with the asymptotic Kolmogorov
/// distribution for the p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty);
    }
    let fa = EnergyCdf::from_weighted(a.iter().map(|&e| (e, 1.0)).collect())?;
    let fb = EnergyCdf::from_weighted(b.iter().map(|&e| (e, 1.0)).collect())?;
    let statistic = union_grid(&fa, &fb).into_iter().map(|e| (fa.eval(e) - fb.eval(e)).abs()).fold(0.0, f64::max);
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let ne = (n1 * n2 / (n1 + n2)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * statistic;
    Ok(KsResult { statistic, p_value: kolmogorov_q(lambda) })
}

/// `Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)`.
fn kolmogorov_q(x: f64) -> f64 {
    if x < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k as f64).powi(2) * x * x).exp();
        sum += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Sampler used by [`gauge_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SamplerConfig {
    /// Simulated annealing; reads and seed come from the experiment.
    Anneal { sweeps: usize, beta_initial: f64, beta_final: f64 },
    /// The exact Gibbs distribution in place of samples (`n <= 20`).
    Exact { beta: f64 },
}

impl Default for SamplerConfig {
    fn default() -> Self {
        let d = AnnealParams::default();
        SamplerConfig::Anneal { sweeps: d.sweeps, beta_initial: d.beta_initial, beta_final: d.beta_final }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub num_transforms: usize,
    pub reads: usize,
    pub sampler: SamplerConfig,
    pub seed: u64,
    /// Test hook: use the all-zero key for every transform.
    pub force_zero_key: bool,
    /// Test hook: sample every transform with the baseline's sampler seed.
    pub share_sampler_seed: bool,
    pub exec: Execution,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            num_transforms: 10,
            reads: 10_000,
            sampler: SamplerConfig::default(),
            seed: 0,
            force_zero_key: false,
            share_sampler_seed: false,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline_cdf: EnergyCdf,
    pub transformed_cdfs: Vec<EnergyCdf>,
    pub avg_diff_percent: f64,
    pub per_transform_diffs: Vec<f64>,
}

impl ComparisonReport {
    /// Writes `series,energy,cum_prob` rows for every CDF.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["series", "energy", "cum_prob"])?;
        let series = std::iter::once(("baseline".to_string(), &self.baseline_cdf))
            .chain(self.transformed_cdfs.iter().enumerate().map(|(t, c)| (format!("transform_{t}"), c)));
        for (label, c) in series {
            for &(e, p) in &c.points {
                w.write_record([label.as_str(), &e.to_string(), &p.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

const TAG_KEY: u64 = 1;
const TAG_SAMPLER: u64 = 2;

fn sampler_seed(cfg: &ExperimentConfig, pipeline: usize) -> u64 {
    let stream = if cfg.share_sampler_seed { 0 } else { pipeline as u64 };
    derive(cfg.seed, TAG_SAMPLER, stream)
}

/// Key used for transform `t` of an experiment.
pub fn experiment_key(cfg: &ExperimentConfig, n: usize, t: usize) -> SecretKey {
    if cfg.force_zero_key {
        SecretKey::zeros(n)
    } else {
        keygen(n, &mut rng_from_seed(derive(cfg.seed, TAG_KEY, t as u64)))
    }
}

/// Energy CDF of `p` under the configured sampler, optionally encrypted
/// with `key` and decoded before measuring.
fn pipeline_cdf(p: &IsingProblem, key: Option<&SecretKey>, seed: u64, cfg: &ExperimentConfig) -> Result<EnergyCdf> {
    let target = match key {
        Some(k) => encode_problem(p, k)?,
        None => p.clone(),
    };
    match cfg.sampler {
        SamplerConfig::Anneal { sweeps, beta_initial, beta_final } => {
            let params = AnnealParams { num_reads: cfg.reads, sweeps, beta_initial, beta_final, seed };
            let raw = simulated_annealing_with(&target, &params, None, cfg.exec)?;
            let decoded = match key {
                Some(k) => decode_sampleset(&raw, k, p)?,
                None => raw,
            };
            cdf(&decoded)
        }
        SamplerConfig::Exact { beta } => {
            let dist = exact_boltzmann(&target, beta)?;
            let weighted = dist
                .iter()
                .map(|(t, e_star, prob)| {
                    let s_star = Spins::from_index(p.n(), t);
                    let energy = match key {
                        Some(k) => {
                            let e = p.energy(&crate::gauge::decode_sample(&s_star, k)?)?;
                            if e != e_star {
                                return Err(Error::Integrity { index: t as usize, stored: e_star, recomputed: e });
                            }
                            e
                        }
                        None => e_star,
                    };
                    Ok((energy, prob))
                })
                .collect::<Result<Vec<_>>>()?;
            EnergyCdf::from_weighted(weighted)
        }
    }
}

/// Samples `p` directly and under `num_transforms` fresh keys, decodes each
/// encrypted run, and compares every transformed CDF against the baseline.
/// All keys and sampler streams derive from `cfg.seed`.
pub fn gauge_experiment(p: &IsingProblem, cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    if cfg.num_transforms < 1 {
        return Err(Error::InvalidParameter("num_transforms must be at least 1".into()));
    }
    if cfg.reads < 1 {
        return Err(Error::InvalidParameter("reads must be at least 1".into()));
    }
    let cdfs = cfg.exec.try_map_range(cfg.num_transforms + 1, |pipeline| {
        let seed = sampler_seed(cfg, pipeline);
        if pipeline == 0 {
            pipeline_cdf(p, None, seed, cfg)
        } else {
            let key = experiment_key(cfg, p.n(), pipeline - 1);
            pipeline_cdf(p, Some(&key), seed, cfg)
        }
    })?;
    let mut cdfs = cdfs.into_iter();
    let baseline_cdf = cdfs.next().expect("baseline pipeline");
    let transformed_cdfs: Vec<EnergyCdf> = cdfs.collect();
    let per_transform_diffs: Vec<f64> = transformed_cdfs.iter().map(|c| avg_cdf_diff(&baseline_cdf, c)).collect();
    let avg_diff_percent = per_transform_diffs.iter().sum::<f64>() / per_transform_diffs.len() as f64;
    Ok(ComparisonReport { baseline_cdf, transformed_cdfs, avg_diff_percent, per_transform_diffs })
}
