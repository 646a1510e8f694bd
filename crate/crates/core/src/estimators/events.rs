//! Per-trajectory statistics: occupation fraction, the two good events, and
//! the freeze time.

use serde::{Deserialize, Serialize};

use crate::bounds::ceil_snapped;
use crate::chain::Trajectory;
use crate::error::{Error, Result};

fn check_n(traj: &Trajectory, n: u64) -> Result<()> {
    if n == 0 || n > traj.horizon() {
        return Err(Error::validation(
            "n",
            format!("{n} is outside 1..={}", traj.horizon()),
        ));
    }
    Ok(())
}

/// Number of `0 < m <= n` with `d[m] >= threshold(m)`.
fn occupation_count(traj: &Trajectory, n: u64, threshold: impl Fn(u64) -> f64) -> u64 {
    (1..=n)
        .filter(|&m| traj.d[m as usize] as f64 >= threshold(m))
        .count() as u64
}

/// `|{0 < m <= n : d[m] >= m^{½-δ}}| / n`.
pub fn occupation_fraction(traj: &Trajectory, n: u64, delta: f64) -> Result<f64> {
    check_n(traj, n)?;
    let e = 0.5 - delta;
    Ok(occupation_count(traj, n, |m| (m as f64).powf(e)) as f64 / n as f64)
}

/// Fraction of `0 < m <= n` with `d[m] >= threshold`, a fixed level.
pub fn occupation_fraction_above(traj: &Trajectory, n: u64, threshold: f64) -> Result<f64> {
    check_n(traj, n)?;
    Ok(occupation_count(traj, n, |_| threshold) as f64 / n as f64)
}

/// Smallest count `k` with `k / n >= 1 - eps`.
pub(crate) fn e1_min_count(n: u64, eps: f64) -> u64 {
    ceil_snapped((1.0 - eps) * n as f64).max(0.0) as u64
}

/// Occupation fraction of level `m^{½-δ}` is at least `1 - eps` (inclusive).
pub fn event_e1(traj: &Trajectory, n: u64, eps: f64, delta: f64) -> Result<bool> {
    check_n(traj, n)?;
    let e = 0.5 - delta;
    Ok(occupation_count(traj, n, |m| (m as f64).powf(e)) >= e1_min_count(n, eps))
}

/// First index of the martingale window `⌈2εn⌉ <= j <= n`, at least 1.
pub(crate) fn e2_window_start(n: u64, eps: f64) -> u64 {
    (ceil_snapped(2.0 * eps * n as f64) as u64).max(1)
}

/// `|m[j]| <= j^{½+δ̄}` for every `⌈2εn⌉ <= j <= n`.
pub fn event_e2(traj: &Trajectory, n: u64, eps: f64, delta_bar: f64) -> Result<bool> {
    check_n(traj, n)?;
    let m = traj
        .m
        .as_ref()
        .ok_or_else(|| Error::validation("trajectory", "missing Doob parts"))?;
    let e = 0.5 + delta_bar;
    Ok((e2_window_start(n, eps)..=n).all(|j| m[j as usize].abs() <= (j as f64).powf(e)))
}

/// Last step index followed by a descent. Right-censored at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreezeTime {
    /// Largest `n` with `d[n+1] != d[n] + 1`.
    At(u64),
    /// The path never steps down within the horizon.
    NoneWithinHorizon,
}

impl FreezeTime {
    /// Whether the path moves up at every step `>= n` within the horizon.
    pub fn frozen_by(self, n: u64) -> bool {
        match self {
            FreezeTime::At(t) => t < n,
            FreezeTime::NoneWithinHorizon => true,
        }
    }
}

pub fn freeze_time(traj: &Trajectory) -> FreezeTime {
    traj.d
        .windows(2)
        .rposition(|w| w[1] != w[0] + 1)
        .map_or(FreezeTime::NoneWithinHorizon, |i| FreezeTime::At(i as u64))
}
