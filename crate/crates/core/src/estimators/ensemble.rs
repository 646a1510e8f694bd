//! Monte Carlo ensembles.
//!
//! Trajectory `i` of an ensemble is driven by `rng::substream(base_seed, i)`.
//! Each trajectory is folded into a small [`TrajectoryRecord`] in a single
//! pass; records are merged by concatenation and reduced in trajectory-index
//! order, so the summary does not depend on scheduling or merge order.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::events::{e1_min_count, e2_window_start, FreezeTime};
use super::stats::{mean_stderr, quantile_sorted, Frequency};
use crate::chain::{check_horizon, ChainParams, ChainWalker, PowerTable};
use crate::error::{Error, Result};
use crate::rng;

/// Default cap on `trajectories × horizon`.
pub const DEFAULT_MAX_WORK: u64 = 50_000_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub params: ChainParams,
    pub horizon: u64,
    pub trajectories: u64,
    pub base_seed: u64,
    /// Sorted step indices in `1..=horizon`.
    pub checkpoints: Vec<u64>,
    pub eps: f64,
    pub delta: f64,
    pub delta_bar: f64,
    pub s_scale: f64,
    pub beta: f64,
    pub max_work: u64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        check_horizon(self.horizon)?;
        if self.trajectories == 0 {
            return Err(Error::validation("trajectories", "must be at least 1"));
        }
        if self.checkpoints.is_empty() {
            return Err(Error::validation("checkpoints", "at least one checkpoint is required"));
        }
        if !self.checkpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::validation("checkpoints", "must be strictly increasing"));
        }
        if self.checkpoints[0] == 0 || *self.checkpoints.last().unwrap() > self.horizon {
            return Err(Error::validation(
                "checkpoints",
                format!("must lie in 1..={}", self.horizon),
            ));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::validation("eps", "must lie in (0, 1)"));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::validation("delta", "must lie in (0, 1/2)"));
        }
        if !(self.delta_bar > 0.0 && self.delta_bar < 0.5) {
            return Err(Error::validation("delta_bar", "must lie in (0, 1/2)"));
        }
        if !(self.s_scale > 0.0 && self.s_scale.is_finite()) {
            return Err(Error::validation("s_scale", "must be positive"));
        }
        if !self.beta.is_finite() {
            return Err(Error::validation("beta", "must be finite"));
        }
        self.check_work()
    }

    fn check_work(&self) -> Result<()> {
        match self.trajectories.checked_mul(self.horizon) {
            Some(w) if w <= self.max_work => Ok(()),
            _ => Err(Error::ResourceCap(format!(
                "{} trajectories x horizon {} exceeds max_work {}",
                self.trajectories, self.horizon, self.max_work
            ))),
        }
    }
}

/// Per-checkpoint state of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointRecord {
    pub d: u64,
    /// `|{0 < m <= n : d[m] >= m^{½-δ}}|`.
    pub occupied: u64,
    pub e2: bool,
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub index: u64,
    pub checkpoints: Vec<CheckpointRecord>,
    pub freeze: FreezeTime,
}

/// Level tables shared by every trajectory of an ensemble.
struct Levels {
    pows: PowerTable,
    occupation: Vec<f64>,
    martingale: Vec<f64>,
}

impl Levels {
    fn new(spec: &EnsembleSpec) -> Self {
        let h = spec.horizon;
        let occ = 0.5 - spec.delta;
        let mart = 0.5 + spec.delta_bar;
        Levels {
            pows: PowerTable::new(spec.params.alpha, h),
            occupation: (0..=h).map(|m| (m as f64).powf(occ)).collect(),
            martingale: (0..=h).map(|m| (m as f64).powf(mart)).collect(),
        }
    }
}

fn fold_trajectory(spec: &EnsembleSpec, levels: &Levels, index: u64) -> Result<TrajectoryRecord> {
    let mut walker = ChainWalker::new(
        spec.params,
        levels.pows.clone(),
        rng::substream(spec.base_seed, index),
    )?;
    let windows: Vec<u64> = spec
        .checkpoints
        .iter()
        .map(|&n| e2_window_start(n, spec.eps))
        .collect();
    let mut out = Vec::with_capacity(spec.checkpoints.len());
    let mut next_cp = 0;
    let mut occupied = 0u64;
    let mut last_violation = 0u64;
    let mut last_descent: Option<u64> = None;
    let mut prev_d = 0u64;

    walker.advance()?;
    for j in 1..=spec.horizon {
        let r = walker.advance()?;
        if r.d + 1 == prev_d {
            last_descent = Some(j - 1);
        }
        prev_d = r.d;
        let ju = j as usize;
        if r.d as f64 >= levels.occupation[ju] {
            occupied += 1;
        }
        if r.m.abs() > levels.martingale[ju] {
            last_violation = j;
        }
        if next_cp < spec.checkpoints.len() && spec.checkpoints[next_cp] == j {
            out.push(CheckpointRecord {
                d: r.d,
                occupied,
                // The newest violation up to j decides whether the window has one.
                e2: last_violation < windows[next_cp],
                m: r.m,
            });
            next_cp += 1;
        }
    }
    Ok(TrajectoryRecord {
        index,
        checkpoints: out,
        freeze: last_descent.map_or(FreezeTime::NoneWithinHorizon, FreezeTime::At),
    })
}

/// Order-insensitive collection of trajectory records.
#[derive(Debug, Clone, Default)]
pub struct EnsembleAccumulator {
    records: Vec<TrajectoryRecord>,
}

impl EnsembleAccumulator {
    pub fn push(&mut self, record: TrajectoryRecord) {
        self.records.push(record);
    }

    pub fn merge(mut self, other: EnsembleAccumulator) -> Self {
        self.records.extend(other.records);
        self
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Reduces the records, in trajectory-index order, into a summary.
    pub fn finish(mut self, spec: &EnsembleSpec) -> Result<EnsembleSummary> {
        if self.records.is_empty() {
            return Err(Error::validation("trajectories", "no records to summarize"));
        }
        self.records.sort_by_key(|r| r.index);
        if self.records.windows(2).any(|w| w[0].index == w[1].index) {
            return Err(Error::Invariant("duplicate trajectory index in merge".into()));
        }
        let total = self.records.len() as u64;
        let mut rows = Vec::with_capacity(spec.checkpoints.len());
        for (c, &n) in spec.checkpoints.iter().enumerate() {
            let threshold = spec.s_scale * (n as f64).powf(spec.beta);
            let at = |r: &TrajectoryRecord| r.checkpoints[c];
            let ge = self.records.iter().filter(|r| at(r).d as f64 >= threshold).count() as u64;
            let e1_min = e1_min_count(n, spec.eps);
            let e1 = self.records.iter().filter(|r| at(r).occupied >= e1_min).count() as u64;
            let e2 = self.records.iter().filter(|r| at(r).e2).count() as u64;
            let frozen = self.records.iter().filter(|r| r.freeze.frozen_by(n)).count() as u64;
            let mut occ: Vec<u64> = self.records.iter().map(|r| at(r).occupied).collect();
            let occ_mean = occ.iter().map(|&k| k as f64 / n as f64).sum::<f64>() / total as f64;
            occ.sort_unstable();
            let occ_p05 = quantile_sorted(&occ, 0.05) as f64 / n as f64;
            let ms: Vec<f64> = self.records.iter().map(|r| at(r).m).collect();
            let (m_mean, m_stderr) = mean_stderr(&ms);
            rows.push(CheckpointSummary {
                n,
                threshold,
                p_ge_threshold: Frequency::new(ge, total),
                e1: Frequency::new(e1, total),
                e2: Frequency::new(e2, total),
                occ_mean,
                occ_p05,
                m_mean,
                m_stderr,
                frozen: Frequency::new(frozen, total),
            });
        }
        let never_descended = self
            .records
            .iter()
            .filter(|r| r.freeze == FreezeTime::NoneWithinHorizon)
            .count() as u64;
        let mut times: Vec<u64> = self
            .records
            .iter()
            .filter_map(|r| match r.freeze {
                FreezeTime::At(t) => Some(t),
                FreezeTime::NoneWithinHorizon => None,
            })
            .collect();
        times.sort_unstable();
        let freeze = FreezeSummary {
            horizon: spec.horizon,
            never_descended,
            observed: times.len() as u64,
            quantiles: if times.is_empty() {
                Vec::new()
            } else {
                [0.5, 0.9, 0.99]
                    .iter()
                    .map(|&q| (q, quantile_sorted(&times, q)))
                    .collect()
            },
        };
        Ok(EnsembleSummary {
            trajectories: total,
            horizon: spec.horizon,
            checkpoints: rows,
            freeze,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSummary {
    pub n: u64,
    /// `s·n^β`.
    pub threshold: f64,
    pub p_ge_threshold: Frequency,
    pub e1: Frequency,
    pub e2: Frequency,
    pub occ_mean: f64,
    pub occ_p05: f64,
    pub m_mean: f64,
    pub m_stderr: f64,
    /// Paths with no descent at any step `>= n` within the horizon.
    pub frozen: Frequency,
}

/// Freeze times observed within the horizon. Right-censored: paths whose
/// freeze time lies beyond the horizon are indistinguishable from paths that
/// have frozen, so quantiles are of the censored variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreezeSummary {
    pub horizon: u64,
    /// Paths monotone from step 1 on.
    pub never_descended: u64,
    pub observed: u64,
    /// `(q, quantile)` pairs over the observed freeze times.
    pub quantiles: Vec<(f64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub trajectories: u64,
    pub horizon: u64,
    pub checkpoints: Vec<CheckpointSummary>,
    pub freeze: FreezeSummary,
}

impl EnsembleSummary {
    pub const CSV_HEADER: &'static str = "n,p_ge_threshold,wilson_lo,wilson_hi,e1_freq,e2_freq,occ_mean,occ_p05,m_mean,m_stderr,frozen_frac";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.checkpoints {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.n,
                r.p_ge_threshold.estimate,
                r.p_ge_threshold.lo,
                r.p_ge_threshold.hi,
                r.e1.estimate,
                r.e2.estimate,
                r.occ_mean,
                r.occ_p05,
                r.m_mean,
                r.m_stderr,
                r.frozen.estimate,
            );
        }
        out
    }
}

/// Folds the trajectories with indices in `range` into an accumulator.
pub fn accumulate(spec: &EnsembleSpec, range: std::ops::Range<u64>) -> Result<EnsembleAccumulator> {
    spec.validate()?;
    let levels = Levels::new(spec);
    let records = range
        .into_par_iter()
        .map(|i| fold_trajectory(spec, &levels, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleAccumulator { records })
}

pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleSummary> {
    accumulate(spec, 0..spec.trajectories)?.finish(spec)
}

/// Outcome of [`conditional_monotone_frequency`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConditionalMonotone {
    /// No trajectory reached `D_N >= N^β`.
    InsufficientSamples { trajectories: u64 },
    Estimate {
        start: u64,
        /// Trajectories with `D_N >= N^β`.
        conditioned: u64,
        frequency: Frequency,
        /// Mean of `1 - p_down(N, D_N)` over the conditioned set.
        mean_up_probability: f64,
    },
}

/// Among trajectories with `D_N >= N^β`, the fraction that never step down
/// on `[N, horizon]`.
pub fn conditional_monotone_frequency(spec: &EnsembleSpec, start: u64) -> Result<ConditionalMonotone> {
    spec.params.validate()?;
    check_horizon(spec.horizon)?;
    if spec.trajectories == 0 {
        return Err(Error::validation("trajectories", "must be at least 1"));
    }
    spec.check_work()?;
    if start == 0 || start >= spec.horizon {
        return Err(Error::validation(
            "start",
            format!("{start} must lie in 1..{}", spec.horizon),
        ));
    }
    let pows = PowerTable::new(spec.params.alpha, spec.horizon);
    let level = (start as f64).powf(spec.beta);
    // (conditioned, monotone, p_up at start)
    let rows = (0..spec.trajectories)
        .into_par_iter()
        .map(|i| -> Result<Option<(bool, f64)>> {
            let mut w = ChainWalker::new(spec.params, pows.clone(), rng::substream(spec.base_seed, i))?;
            let mut r = w.advance()?;
            while r.n < start {
                r = w.advance()?;
            }
            if (r.d as f64) < level {
                return Ok(None);
            }
            let p_up = 1.0 - r.p_down;
            let mut prev = r.d;
            while r.n < spec.horizon {
                r = w.advance()?;
                if r.d < prev {
                    return Ok(Some((false, p_up)));
                }
                prev = r.d;
            }
            Ok(Some((true, p_up)))
        })
        .collect::<Result<Vec<_>>>()?;
    let hits: Vec<(bool, f64)> = rows.into_iter().flatten().collect();
    if hits.is_empty() {
        return Ok(ConditionalMonotone::InsufficientSamples {
            trajectories: spec.trajectories,
        });
    }
    let monotone = hits.iter().filter(|h| h.0).count() as u64;
    let conditioned = hits.len() as u64;
    Ok(ConditionalMonotone::Estimate {
        start,
        conditioned,
        frequency: Frequency::new(monotone, conditioned),
        mean_up_probability: hits.iter().map(|h| h.1).sum::<f64>() / conditioned as f64,
    })
}

/// Histogram of `D_horizon` over `trajectories` independent paths.
pub fn empirical_distribution(
    params: &ChainParams,
    horizon: u64,
    trajectories: u64,
    base_seed: u64,
) -> Result<Vec<u64>> {
    params.validate()?;
    check_horizon(horizon)?;
    let pows = PowerTable::new(params.alpha, horizon);
    let len = horizon as usize + 1;
    (0..trajectories)
        .into_par_iter()
        .try_fold(
            || vec![0u64; len],
            |mut hist, i| -> Result<Vec<u64>> {
                let mut w = ChainWalker::new(*params, pows.clone(), rng::substream(base_seed, i))?;
                let mut r = w.advance()?;
                while r.n < horizon {
                    r = w.advance()?;
                }
                hist[r.d as usize] += 1;
                Ok(hist)
            },
        )
        .try_reduce(
            || vec![0u64; len],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )
}
