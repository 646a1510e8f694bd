//! Oracles shared by the integration and acceptance targets.
#![allow(dead_code)]

use rand::RngCore;

use wedge_chain::dla::{DlaConfig, Site, WedgeAggregate, WedgeGeometry};

/// Hit distribution of the next attachment to `agg`, computed by solving the
/// absorbing-walk equations on the wedge truncated at the escape column.
///
/// A walker leaving the truncated graph restarts uniformly on the launch
/// column, so the attachment law is the launch-averaged absorption law
/// renormalised by the total absorption probability. Returns `(site, prob)`
/// for each site that can be attached.
pub fn attachment_law(agg: &WedgeAggregate, cfg: &DlaConfig) -> Vec<(Site, f64)> {
    let geom = agg.geometry();
    let x_launch = cfg.launch_x(agg.l_tip());
    let x_escape = cfg.escape_factor * x_launch;
    let heights: Vec<i64> = (0..=x_escape).map(|x| geom.height(x)).collect();

    // Free sites and their index.
    let mut free = Vec::new();
    let mut index = std::collections::HashMap::new();
    for x in 0..=x_escape {
        for y in 0..=heights[x as usize] {
            let s = Site::new(x, y);
            if !agg.contains(s) {
                index.insert(s, free.len());
                free.push(s);
            }
        }
    }
    let inside = |s: Site| s.x >= 0 && s.y >= 0 && s.x <= x_escape && s.y <= heights[s.x as usize];
    let neighbours = |s: Site| -> Vec<Site> {
        [
            Site::new(s.x + 1, s.y),
            Site::new(s.x - 1, s.y),
            Site::new(s.x, s.y + 1),
            Site::new(s.x, s.y - 1),
        ]
        .into_iter()
        .filter(|&n| n.x > x_escape || (n.x >= 0 && geom.contains(n)))
        .collect()
    };

    // Candidate attachment sites: free sites adjacent to the aggregate.
    let candidates: Vec<Site> = free
        .iter()
        .copied()
        .filter(|&s| neighbours(s).into_iter().any(|n| inside(n) && agg.contains(n)))
        .collect();

    let mut law = Vec::new();
    let mut totals = Vec::new();
    for &target in &candidates {
        // h(v) = P(walk from v is absorbed with last free site = target,
        // before leaving the truncated graph).
        let mut h = vec![0.0f64; free.len()];
        loop {
            let mut change = 0.0f64;
            for (i, &v) in free.iter().enumerate() {
                let nb = neighbours(v);
                let w = 1.0 / nb.len() as f64;
                let mut acc = 0.0;
                for n in nb {
                    if !inside(n) {
                        continue;
                    }
                    if agg.contains(n) {
                        if v == target {
                            acc += w;
                        }
                    } else {
                        acc += w * h[index[&n]];
                    }
                }
                change = change.max((acc - h[i]).abs());
                h[i] = acc;
            }
            if change < 1e-15 {
                break;
            }
        }
        let launch: f64 = (0..=heights[x_launch as usize])
            .map(|y| h[index[&Site::new(x_launch, y)]])
            .sum();
        totals.push(launch);
        law.push(target);
    }
    let z: f64 = totals.iter().sum();
    law.into_iter().zip(totals.into_iter().map(|t| t / z)).collect()
}

/// The second aggregate `{(0,0), (1,0)}` in a wide wedge, with a short launch
/// margin so the truncated graph stays small.
pub fn harmonic_setup() -> (WedgeAggregate, DlaConfig) {
    let geom = WedgeGeometry::new(0.9).unwrap();
    let agg = WedgeAggregate::from_sites(geom, &[Site::new(0, 0), Site::new(1, 0)]).unwrap();
    let cfg = DlaConfig {
        launch_margin: 8,
        ..DlaConfig::default()
    };
    (agg, cfg)
}

/// Fraction of `1..=steps` at which a simple symmetric walk satisfies
/// `|S_k| >= level`. Coin flips are taken 64 to a word.
pub fn walk_occupation<R: RngCore>(rng: &mut R, steps: u64, level: f64) -> f64 {
    let level = level.ceil() as i64;
    let mut s = 0i64;
    let mut count = 0u64;
    let mut left = steps;
    while left > 0 {
        let take = left.min(64);
        let mut bits = rng.next_u64();
        for _ in 0..take {
            s += ((bits & 1) as i64) * 2 - 1;
            bits >>= 1;
            count += (s.abs() >= level) as u64;
        }
        left -= take;
    }
    count as f64 / steps as f64
}
