//! The toy arm-growth chain.
//!
//! `D_0 = 0`, `D_1 = 1`, and for `n >= 1`: from `D_n = 0` the chain moves to 1;
//! otherwise it steps down with probability `½·exp(-c·D_n / n^α)` and up
//! otherwise. Simulation shares one uniform per step between the chain and a
//! reflected simple walk `|S_n|` so that `D_n >= |S_n|` holds pathwise, and
//! tracks the Doob decomposition `D = A + M` along the way.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Largest horizon accepted by the simulators. Step indices are stored as
/// `u32` in ensemble records.
pub const MAX_HORIZON: u64 = u32::MAX as u64 - 1;

/// Default cap on the horizon of [`exact_distribution`].
pub const DEFAULT_DP_CAP: u64 = 2000;

/// Drift exponent `alpha` and coefficient `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub alpha: f64,
    pub c: f64,
    /// Permits `c = 0`, under which the chain is the reflected simple walk.
    #[serde(default)]
    pub allow_degenerate_c0: bool,
}

impl ChainParams {
    pub fn new(alpha: f64, c: f64) -> Result<Self> {
        let p = ChainParams {
            alpha,
            c,
            allow_degenerate_c0: false,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `c >= 0` allowed.
    pub fn degenerate(alpha: f64, c: f64) -> Result<Self> {
        let p = ChainParams {
            alpha,
            c,
            allow_degenerate_c0: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::validation(
                "alpha",
                format!("{} is outside the domain (0, 1)", self.alpha),
            ));
        }
        if !self.c.is_finite() {
            return Err(Error::validation("c", format!("{} is not finite", self.c)));
        }
        if self.allow_degenerate_c0 {
            if self.c < 0.0 {
                return Err(Error::validation(
                    "c",
                    format!("{} is negative; domain is [0, inf) with allow_degenerate_c0", self.c),
                ));
            }
        } else if self.c <= 0.0 {
            return Err(Error::validation(
                "c",
                format!(
                    "{} is outside the domain (0, inf); set allow_degenerate_c0 to permit c = 0",
                    self.c
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainState {
    pub n: u64,
    pub d: u64,
}

impl ChainState {
    pub fn new(n: u64, d: u64) -> Self {
        ChainState { n, d }
    }
}

/// `exp(-c·d / n^α)` given the precomputed `n^α`. Both the reference
/// transition and the fast simulators go through this so they agree to the bit.
#[inline]
fn damping(c: f64, d: u64, n_pow_alpha: f64) -> f64 {
    (-c * d as f64 / n_pow_alpha).exp()
}

/// Returns `(p_up, p_down)` for the transition out of `state`.
pub fn transition_probs(state: ChainState, params: &ChainParams) -> Result<(f64, f64)> {
    if state.n == 0 {
        return Err(Error::validation(
            "n",
            "the transition is defined for n >= 1 only (D_1 = 1 is an initial condition)",
        ));
    }
    if state.d == 0 {
        return Ok((1.0, 0.0));
    }
    let p_down = 0.5 * damping(params.c, state.d, (state.n as f64).powf(params.alpha));
    Ok((1.0 - p_down, p_down))
}

/// One transition driven by the uniform `u`: down iff `u < p_down`.
pub fn step(state: ChainState, params: &ChainParams, u: f64) -> Result<ChainState> {
    let (_, p_down) = transition_probs(state, params)?;
    let d = if state.d == 0 {
        1
    } else if u < p_down {
        state.d - 1
    } else {
        state.d + 1
    };
    Ok(ChainState::new(state.n + 1, d))
}

/// Table of `n^α` for `n = 0..=horizon`, shared across trajectories.
#[derive(Debug, Clone)]
pub struct PowerTable {
    alpha: f64,
    pows: Arc<[f64]>,
}

impl PowerTable {
    pub fn new(alpha: f64, horizon: u64) -> Self {
        let pows: Vec<f64> = (0..=horizon).map(|n| (n as f64).powf(alpha)).collect();
        PowerTable {
            alpha,
            pows: pows.into(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn horizon(&self) -> u64 {
        self.pows.len() as u64 - 1
    }

    #[inline]
    pub fn get(&self, n: u64) -> f64 {
        self.pows[n as usize]
    }
}

/// One realized step of a coupled trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub n: u64,
    pub d: u64,
    /// Predictable part `A_n`.
    pub a: f64,
    /// Martingale part `M_n = D_n - A_n`.
    pub m: f64,
    /// Coupled reflected walk `|S_n|`.
    pub s_abs: u64,
    /// `p_down` of the transition out of this state (0 at `d = 0` and `n = 0`).
    pub p_down: f64,
}

/// Streaming simulator: yields `StepRecord`s for `n = 0, 1, ..., horizon`.
///
/// One uniform is drawn per transition `n -> n+1` for `n >= 1`, whether or not
/// the chain sits at 0. The transition `0 -> 1` consumes nothing.
pub struct ChainWalker<R> {
    params: ChainParams,
    pows: PowerTable,
    rng: R,
    n: u64,
    d: u64,
    a: f64,
    s_abs: u64,
    started: bool,
}

impl<R: RngCore> ChainWalker<R> {
    pub fn new(params: ChainParams, pows: PowerTable, rng: R) -> Result<Self> {
        params.validate()?;
        if pows.alpha() != params.alpha {
            return Err(Error::validation("alpha", "power table built for another alpha"));
        }
        Ok(ChainWalker {
            params,
            pows,
            rng,
            n: 0,
            d: 0,
            a: 0.0,
            s_abs: 0,
            started: false,
        })
    }

    fn record(&self) -> StepRecord {
        let p_down = if self.n == 0 || self.d == 0 {
            0.0
        } else {
            0.5 * damping(self.params.c, self.d, self.pows.get(self.n))
        };
        StepRecord {
            n: self.n,
            d: self.d,
            a: self.a,
            m: self.d as f64 - self.a,
            s_abs: self.s_abs,
            p_down,
        }
    }

    /// Advances one step and returns the new record; the first call returns
    /// the record at `n = 0` without advancing.
    pub fn advance(&mut self) -> Result<StepRecord> {
        if !self.started {
            self.started = true;
            return Ok(self.record());
        }
        if self.n >= self.pows.horizon() {
            return Err(Error::validation("horizon", "walked past the power table"));
        }
        if self.n == 0 {
            self.n = 1;
            self.d = 1;
            self.a = 1.0;
            self.s_abs = 1;
            return Ok(self.record());
        }
        let u = rng::uniform(&mut self.rng);
        let drift = if self.d == 0 {
            self.d = 1;
            1.0
        } else {
            let e = damping(self.params.c, self.d, self.pows.get(self.n));
            if u < 0.5 * e {
                self.d -= 1;
            } else {
                self.d += 1;
            }
            1.0 - e
        };
        if !drift.is_finite() {
            return Err(Error::Invariant(format!(
                "non-finite drift at n = {}, d = {}",
                self.n, self.d
            )));
        }
        self.a += drift;
        self.s_abs = if self.s_abs == 0 || u >= 0.5 {
            self.s_abs + 1
        } else {
            self.s_abs - 1
        };
        self.n += 1;
        Ok(self.record())
    }
}

/// A realized path `D_0..D_N` with optional Doob parts and coupled walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: ChainParams,
    pub seed: u64,
    pub d: Vec<u64>,
    pub a: Option<Vec<f64>>,
    pub m: Option<Vec<f64>>,
    pub s_abs: Option<Vec<u64>>,
}

impl Trajectory {
    /// A trajectory assembled from a given path, without Doob parts or
    /// coupling. Useful for feeding estimators synthetic inputs.
    pub fn from_path(params: ChainParams, d: Vec<u64>) -> Self {
        Trajectory {
            params,
            seed: 0,
            d,
            a: None,
            m: None,
            s_abs: None,
        }
    }

    pub fn horizon(&self) -> u64 {
        self.d.len() as u64 - 1
    }

    /// Checks every structural invariant of a simulated path.
    pub fn check_invariants(&self) -> Result<()> {
        let d = &self.d;
        if d.len() < 2 || d[0] != 0 || d[1] != 1 {
            return Err(Error::Invariant("path must start 0, 1".into()));
        }
        for i in 1..d.len() - 1 {
            let ok = if d[i] == 0 {
                d[i + 1] == 1
            } else {
                d[i + 1] + 1 == d[i] || d[i + 1] == d[i] + 1
            };
            if !ok {
                return Err(Error::Invariant(format!("illegal move at step {i}")));
            }
        }
        if let (Some(a), Some(m)) = (&self.a, &self.m) {
            for i in 0..d.len() {
                if a[i] + m[i] != d[i] as f64 {
                    return Err(Error::Invariant(format!("a + m != d at step {i}")));
                }
                if i > 0 {
                    if a[i] < a[i - 1] {
                        return Err(Error::Invariant(format!("a decreases at step {i}")));
                    }
                    if (m[i] - m[i - 1]).abs() > 2.0 {
                        return Err(Error::Invariant(format!("|dm| > 2 at step {i}")));
                    }
                }
            }
        }
        if let Some(s) = &self.s_abs {
            if let Some(i) = (0..d.len()).find(|&i| d[i] < s[i]) {
                return Err(Error::Invariant(format!("coupling broken at step {i}")));
            }
        }
        Ok(())
    }

    /// CSV with header `step,d[,a,m][,s_abs]`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,d");
        let doob = self.a.as_ref().zip(self.m.as_ref());
        if doob.is_some() {
            out.push_str(",a,m");
        }
        if self.s_abs.is_some() {
            out.push_str(",s_abs");
        }
        out.push('\n');
        for (i, d) in self.d.iter().enumerate() {
            let _ = write!(out, "{i},{d}");
            if let Some((a, m)) = doob {
                let _ = write!(out, ",{},{}", a[i], m[i]);
            }
            if let Some(s) = &self.s_abs {
                let _ = write!(out, ",{}", s[i]);
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn check_horizon(horizon: u64) -> Result<()> {
    if horizon == 0 {
        return Err(Error::validation("horizon", "must be at least 1"));
    }
    if horizon > MAX_HORIZON {
        return Err(Error::validation(
            "horizon",
            format!("{horizon} overflows the step index (max {MAX_HORIZON})"),
        ));
    }
    Ok(())
}

/// Simulates `D_0..D_horizon` from the stream seeded by `seed`.
pub fn simulate(
    params: &ChainParams,
    horizon: u64,
    seed: u64,
    with_coupling: bool,
    with_doob: bool,
) -> Result<Trajectory> {
    check_horizon(horizon)?;
    let pows = PowerTable::new(params.alpha, horizon);
    simulate_with(params, &pows, horizon, seed, with_coupling, with_doob)
}

pub(crate) fn simulate_with(
    params: &ChainParams,
    pows: &PowerTable,
    horizon: u64,
    seed: u64,
    with_coupling: bool,
    with_doob: bool,
) -> Result<Trajectory> {
    let len = horizon as usize + 1;
    let mut walker = ChainWalker::new(*params, pows.clone(), rng::stream(seed))?;
    let mut d = Vec::with_capacity(len);
    let mut a = with_doob.then(|| Vec::with_capacity(len));
    let mut m = with_doob.then(|| Vec::with_capacity(len));
    let mut s = with_coupling.then(|| Vec::with_capacity(len));
    for _ in 0..len {
        let r = walker.advance()?;
        d.push(r.d);
        if let (Some(a), Some(m)) = (a.as_mut(), m.as_mut()) {
            a.push(r.a);
            m.push(r.m);
        }
        if let Some(s) = s.as_mut() {
            s.push(r.s_abs);
        }
    }
    Ok(Trajectory {
        params: *params,
        seed,
        d,
        a,
        m,
        s_abs: s,
    })
}

/// Law of `D_n` at a fixed horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDistribution {
    pub n: u64,
    /// `probs[k] = P(D_n = k)` for `k = 0..=n`.
    pub probs: Vec<f64>,
}

impl ExactDistribution {
    pub fn prob(&self, k: u64) -> f64 {
        self.probs.get(k as usize).copied().unwrap_or(0.0)
    }

    /// `P(D_n >= k)`.
    pub fn tail(&self, k: u64) -> f64 {
        self.probs.iter().skip(k as usize).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Total-variation distance to an empirical histogram of counts.
    pub fn total_variation_to_counts(&self, counts: &[u64]) -> f64 {
        let total: u64 = counts.iter().sum();
        let len = self.probs.len().max(counts.len());
        let half: f64 = (0..len)
            .map(|k| {
                let p = self.probs.get(k).copied().unwrap_or(0.0);
                let q = counts.get(k).map_or(0.0, |&c| c as f64 / total as f64);
                (p - q).abs()
            })
            .sum();
        0.5 * half
    }
}

/// Forward recursion of the transition kernel over the `(n, d)` triangle.
pub fn exact_distribution(params: &ChainParams, horizon: u64) -> Result<ExactDistribution> {
    exact_distribution_capped(params, horizon, DEFAULT_DP_CAP)
}

pub fn exact_distribution_capped(
    params: &ChainParams,
    horizon: u64,
    cap: u64,
) -> Result<ExactDistribution> {
    params.validate()?;
    check_horizon(horizon)?;
    if horizon > cap {
        return Err(Error::ResourceCap(format!(
            "exact distribution horizon {horizon} exceeds the DP cap {cap}"
        )));
    }
    let len = horizon as usize + 1;
    let mut probs = vec![0.0; len];
    probs[1] = 1.0;
    let mut next = vec![0.0; len];
    for n in 1..horizon {
        next.iter_mut().for_each(|p| *p = 0.0);
        for d in 0..=n as usize {
            let mass = probs[d];
            if mass == 0.0 {
                continue;
            }
            let (up, down) = transition_probs(ChainState::new(n, d as u64), params)?;
            next[d + 1] += mass * up;
            if d > 0 {
                next[d - 1] += mass * down;
            }
        }
        std::mem::swap(&mut probs, &mut next);
    }
    Ok(ExactDistribution { n: horizon, probs })
}
