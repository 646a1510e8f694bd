//! Closed-form constants and tail bounds for the growth argument.
//!
//! [`derive_profile`] turns `alpha` into the exponent recipe `(δ, K, δ̄, β_k)`,
//! [`azuma_tail`] and [`e2_union_bound`] are the martingale concentration
//! bounds, and [`monotone_tail_bound`] is the product lower bound on the
//! probability that the chain never steps down again after `N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used to decide whether `(α-½)/(1-α)` is an integer. Grid values
/// such as `α = 0.9` land a few ulps off the integer in binary.
const INTEGER_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conditions {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    pub c4: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsProfile {
    pub alpha: f64,
    pub delta: f64,
    #[serde(rename = "K")]
    pub k_max: u32,
    pub delta_bar: f64,
    /// `β_k = ½ - δ + k(1-α)` for `k = 1..=K`.
    pub beta_ladder: Vec<f64>,
    pub beta: f64,
    /// Base drift constant `c/2`.
    pub s1: f64,
    pub conditions: Conditions,
}

/// Rounds `x` to the nearest integer when it is within the snap tolerance.
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= INTEGER_SNAP * r.abs().max(1.0) {
        r
    } else {
        x
    }
}

/// `⌈x⌉`, treating values within rounding noise of an integer as that integer.
pub fn ceil_snapped(x: f64) -> f64 {
    snap(x).ceil()
}

pub fn derive_profile(alpha: f64, c: f64) -> Result<BoundsProfile> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::validation("alpha", format!("{alpha} is outside (0, 1)")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::validation("c", format!("{c} is outside (0, inf)")));
    }
    let gap = 1.0 - alpha;
    let ratio = snap((alpha - 0.5) / gap);
    let k_max = (ratio.floor() + 1.0).max(1.0) as u32;
    let k = k_max as f64;

    let delta = if alpha <= 0.5 {
        0.5 * gap
    } else if ratio.fract() == 0.0 {
        gap / 8.0
    } else {
        ((0.5 + k * gap - alpha) / 8.0).min(gap / 8.0)
    };

    let beta_ladder: Vec<f64> = (1..=k_max).map(|j| 0.5 - delta + j as f64 * gap).collect();
    let beta = *beta_ladder.last().expect("K >= 1");
    let conditions = Conditions {
        c1: delta > 0.0 && delta < 0.5,
        c2: 0.5 - delta + gap > 0.5,
        c3: 0.5 - delta + k * gap > alpha,
        c4: 0.5 - delta + (k - 1.0) * gap < alpha,
    };
    if !(conditions.c1 && conditions.c2 && conditions.c3) {
        return Err(Error::Invariant(format!(
            "exponent recipe violates its conditions at alpha = {alpha}: {conditions:?}"
        )));
    }
    if !(alpha < beta && beta < 1.0) {
        return Err(Error::Invariant(format!(
            "beta = {beta} is outside (alpha, 1) at alpha = {alpha}"
        )));
    }
    Ok(BoundsProfile {
        alpha,
        delta,
        k_max,
        delta_bar: (gap - delta) / 8.0,
        beta_ladder,
        beta,
        s1: c / 2.0,
        conditions,
    })
}

impl BoundsProfile {
    /// The JSON object emitted by the `bounds` subcommand.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "alpha": self.alpha,
            "delta": self.delta,
            "K": self.k_max,
            "delta_bar": self.delta_bar,
            "beta_ladder": self.beta_ladder,
            "beta": self.beta,
            "conditions": self.conditions,
        })
    }
}

/// `min(1, 2·exp(-m^{2δ̄}/8))`, the Azuma bound on `P(|M_m| > m^{½+δ̄})`.
pub fn azuma_tail(m: u64, delta_bar: f64) -> f64 {
    (2.0 * (-(m as f64).powf(2.0 * delta_bar) / 8.0).exp()).clamp(0.0, 1.0)
}

/// `2n·exp(-⌈2εn⌉^{2δ̄}/8)`, the union-bound deficit before clamping.
pub fn e2_union_deficit(n: u64, eps: f64, delta_bar: f64) -> f64 {
    let start = ceil_snapped(2.0 * eps * n as f64);
    2.0 * n as f64 * (-start.powf(2.0 * delta_bar) / 8.0).exp()
}

/// Lower bound `max(0, 1 - 2n·exp(-⌈2εn⌉^{2δ̄}/8))` on the probability that
/// `|M_m| <= m^{½+δ̄}` throughout `⌈2εn⌉ <= m <= n`.
pub fn e2_union_bound(n: u64, eps: f64, delta_bar: f64) -> f64 {
    (1.0 - e2_union_deficit(n, eps, delta_bar)).max(0.0)
}

/// Terms below this are handed to the integral tail.
const TERM_FLOOR: f64 = 1e-18;
/// Direct summation stops after this many terms regardless.
const MAX_DIRECT_TERMS: u64 = 10_000_000;

/// Certified upper bound on `Σ_{k>=start} exp(-c·k^γ)` with `γ = β - α`.
pub fn tail_sum_upper(start: u64, c: f64, gamma: f64) -> f64 {
    // Neumaier-compensated: hundreds of thousands of terms otherwise lose
    // enough low bits to undercut the true sum.
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut k = start;
    loop {
        let term = (-c * (k as f64).powf(gamma)).exp();
        let t = sum + term;
        comp += if sum.abs() >= term { (sum - t) + term } else { (term - t) + sum };
        sum = t;
        if term < TERM_FLOOR || k - start + 1 >= MAX_DIRECT_TERMS {
            break;
        }
        k += 1;
    }
    // The summand decreases in k, so Σ_{j>k} f(j) <= ∫_k^∞ f.
    sum + comp + integral_tail(k as f64, c, gamma)
}

/// `∫_x0^∞ exp(-c·x^γ) dx`, bounded from above.
///
/// With `u = c·x^γ` the integral is `c^{-1/γ}/γ · ∫_{u0}^∞ u^{s-1} e^{-u} du`,
/// `s = 1/γ`. The `u`-integral is split at `U >= max(u0, 2(s-1))`: the head is
/// integrated by adaptive Simpson (its error estimate added back), the tail
/// uses the envelope `u^{s-1}e^{-u} <= U^{s-1}e^{-U}·e^{-(u-U)/2}`.
pub fn integral_tail(x0: f64, c: f64, gamma: f64) -> f64 {
    let s = 1.0 / gamma;
    let u0 = c * x0.powf(gamma);
    let log_f = |u: f64| (s - 1.0) * u.ln() - u;
    let f = |u: f64| log_f(u).exp();
    let knee = (2.0 * (s - 1.0)).max(u0);
    // Push the split out until the envelope remainder is negligible.
    let mut upper = knee + 40.0;
    while 2.0 * log_f(upper).exp() > 1e-300 && log_f(upper) > log_f(knee) - 60.0 {
        upper += 20.0;
    }
    let remainder = 2.0 * log_f(upper).exp();
    let peak = f((s - 1.0).max(u0));
    let panels = 64;
    let width = (upper - u0) / panels as f64;
    let tol = 1e-16 * peak * width;
    let (head, err) = (0..panels)
        .map(|i| {
            let a = u0 + i as f64 * width;
            adaptive_simpson(&f, a, a + width, tol, 30)
        })
        .fold((0.0, 0.0), |(h, e), (hi, ei)| (h + hi, e + ei));
    let scale = (-s * c.ln()).exp() * s;
    scale * (head + err.abs() + remainder)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

/// Returns `(integral, accumulated error estimate)`; `tol` is absolute.
fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> (f64, f64) {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol.max(1e-300) {
        return (left + right + delta / 15.0, delta.abs() / 15.0);
    }
    let (l, le) = simpson_rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1);
    let (r, re) = simpson_rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1);
    (l + r, le + re)
}

/// `exp(-Σ_{k>=start} exp(-c·k^{β-α}))`, a lower bound on the probability
/// of never stepping down after `start` given `D_start >= start^β`.
pub fn monotone_tail_bound(start: u64, c: f64, alpha: f64, beta: f64) -> Result<f64> {
    if beta <= alpha {
        return Err(Error::validation(
            "beta",
            format!("beta = {beta} must exceed alpha = {alpha}; the series diverges"),
        ));
    }
    if start == 0 {
        return Err(Error::validation("start", "must be at least 1"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::validation("c", format!("{c} is outside (0, inf)")));
    }
    Ok((-tail_sum_upper(start, c, beta - alpha)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_profiles() {
        let p = derive_profile(0.3, 1.0).unwrap();
        assert_eq!(p.k_max, 1);
        assert!((p.delta - 0.35).abs() < 1e-15);
        assert!((p.beta - 0.85).abs() < 1e-15);

        let p = derive_profile(0.75, 1.0).unwrap();
        assert_eq!(p.k_max, 2);
        assert_eq!(p.delta, 0.03125);
        assert_eq!(p.beta, 0.96875);

        let p = derive_profile(0.8, 1.0).unwrap();
        assert_eq!(p.k_max, 2);
        assert!((p.delta - 0.0125).abs() < 1e-15);
        assert!((p.beta - 0.8875).abs() < 1e-15);

        let p = derive_profile(0.5, 1.0).unwrap();
        assert_eq!((p.k_max, p.delta, p.beta), (1, 0.25, 0.75));
        assert_eq!(p.delta_bar, 0.03125);
        assert_eq!(p.s1, 0.5);
    }

    #[test]
    fn integer_ratio_on_grid_snaps() {
        // (0.9 - 0.5) / 0.1 is 4 up to rounding: integer branch, K = 5.
        let p = derive_profile(0.05 * 18.0, 1.0).unwrap();
        assert_eq!(p.k_max, 5);
        assert!((p.delta - 0.0125).abs() < 1e-15);
    }

    #[test]
    fn profile_domain() {
        assert!(derive_profile(0.0, 1.0).is_err());
        assert!(derive_profile(1.0, 1.0).is_err());
        assert!(derive_profile(0.5, 0.0).is_err());
    }

    #[test]
    fn json_shape() {
        let v = derive_profile(0.8, 1.0).unwrap().to_json();
        assert_eq!(v["K"], 2);
        assert!(v["conditions"]["c4"].as_bool().unwrap());
        assert_eq!(v["beta_ladder"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn azuma_values() {
        assert!((azuma_tail(64, 0.25) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(azuma_tail(1, 0.25), 1.0);
        let mut prev = 1.0;
        for m in [100u64, 1_000, 10_000, 1_000_000, 100_000_000] {
            let b = azuma_tail(m, 0.25);
            assert!(b <= prev);
            prev = b;
        }
        assert!(prev < 1e-100);
    }

    #[test]
    fn e2_bound_clamps_and_grows() {
        assert_eq!(e2_union_bound(10, 0.05, 0.1), 0.0);
        let far = e2_union_bound(1u64 << 60, 0.25, 0.45);
        assert!(far > 0.99, "{far}");
    }

    #[test]
    fn ceil_snapping() {
        assert_eq!(ceil_snapped(2.0 * 0.05 * 1000.0), 100.0);
        assert_eq!(ceil_snapped(100.000_000_000_01), 100.0);
        assert_eq!(ceil_snapped(100.2), 101.0);
    }

    #[test]
    fn monotone_bound_domain() {
        assert!(monotone_tail_bound(10, 1.0, 0.5, 0.5).is_err());
        assert!(monotone_tail_bound(0, 1.0, 0.5, 0.75).is_err());
        let b = monotone_tail_bound(1000, 1.0, 0.5, 0.75).unwrap();
        assert!(b > 0.0 && b < 1.0);
    }

    #[test]
    fn integral_tail_matches_closed_form_gamma_one() {
        // γ = 1: ∫_x0^∞ e^{-c x} dx = e^{-c x0}/c.
        let got = integral_tail(3.0, 2.0, 1.0);
        let want = (-6.0f64).exp() / 2.0;
        assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");
        // γ = 1/2, c = 1: ∫ e^{-√x} = 2(1+√x0)e^{-√x0}.
        let got = integral_tail(16.0, 1.0, 0.5);
        let want = 2.0 * 5.0 * (-4.0f64).exp();
        assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");
    }
}
