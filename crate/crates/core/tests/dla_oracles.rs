mod common;

use wedge_chain::dla::{
    components_outside, parse_sites_csv, run_dla, DlaConfig, Site, WedgeAggregate, WedgeGeometry,
};
use wedge_chain::rng;

fn straight_arm() -> Vec<Site> {
    (0..=100).map(|x| Site::new(x, 0)).collect()
}

/// A lattice staircase following `y = ⌊√x⌋`, joined to the bottom row only
/// near the origin.
fn upper_arm() -> Vec<Site> {
    let mut out = Vec::new();
    let mut prev = 1i64;
    for x in 1..=100i64 {
        let y = (x as f64).sqrt().floor() as i64;
        for yy in prev..=y {
            out.push(Site::new(x, yy));
        }
        prev = y;
    }
    out.dedup();
    out
}

#[test]
fn ends_on_synthetic_configurations() {
    let g = WedgeGeometry::new(0.5).unwrap();
    let arm = straight_arm();
    assert_eq!(components_outside(&arm, 10.0), 1);

    let mut two = arm.clone();
    two.extend(upper_arm());
    assert!(two.iter().all(|&s| g.contains(s)));
    let agg = WedgeAggregate::from_sites(g, &two).unwrap();
    assert_eq!(agg.ends_estimate(10.0), 2);
    assert_eq!(agg.ends_estimate(0.0), 1);

    let max = two.iter().map(|s| (s.norm_sq() as f64).sqrt()).fold(0.0, f64::max);
    assert_eq!(agg.ends_estimate(max), 0);
    assert_eq!(agg.ends_estimate(max + 1.0), 0);
}

#[test]
fn tip_gap_examples() {
    let g = WedgeGeometry::new(0.5).unwrap();
    let path = [Site::new(0, 0), Site::new(1, 0), Site::new(2, 0)];
    let t = WedgeAggregate::from_sites(g, &path).unwrap().tip_gap();
    assert_eq!((t.l, t.r, t.gap), (2, None, 2));
    let synth = [Site::new(0, 0), Site::new(1, 0), Site::new(1, 1), Site::new(5, 0)];
    let t = WedgeAggregate::from_sites(g, &synth).unwrap().tip_gap();
    assert_eq!((t.l, t.r, t.gap), (5, Some(1), 4));
}

#[test]
fn short_runs_keep_invariants() {
    for (alpha, seed) in [(0.3, 1u64), (0.5, 2), (0.8, 3)] {
        let g = WedgeGeometry::new(alpha).unwrap();
        let run = run_dla(g, 300, &mut rng::stream(seed), &DlaConfig::default()).unwrap();
        run.aggregate.check_invariants().unwrap();
        assert_eq!(run.aggregate.len(), 301);
        assert_eq!(run.tips.len(), 301);
        for w in run.tips.windows(2) {
            assert!(w[1].l >= w[0].l);
            assert!(w[1].r.unwrap_or(0) >= w[0].r.unwrap_or(0));
            assert!(w[0].r.is_none() || w[1].r.is_some());
        }
        let back = parse_sites_csv(&run.aggregate.sites_csv()).unwrap();
        assert_eq!(back, run.aggregate.particles());
    }
}

#[test]
fn same_seed_same_aggregate() {
    let g = WedgeGeometry::new(0.5).unwrap();
    let a = run_dla(g, 200, &mut rng::stream(11), &DlaConfig::default()).unwrap();
    let b = run_dla(g, 200, &mut rng::stream(11), &DlaConfig::default()).unwrap();
    assert_eq!(a.aggregate.particles(), b.aggregate.particles());
}

#[test]
fn oracle_law_sums_to_one_and_names_both_candidates() {
    let (agg, cfg) = common::harmonic_setup();
    let law = common::attachment_law(&agg, &cfg);
    let sites: Vec<Site> = law.iter().map(|p| p.0).collect();
    assert_eq!(sites, vec![Site::new(1, 1), Site::new(2, 0)]);
    let total: f64 = law.iter().map(|p| p.1).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn harmonic_measure_small_case() {
    let (agg, cfg) = common::harmonic_setup();
    let law = common::attachment_law(&agg, &cfg);
    let p = law[0].1;
    let trials = 20_000u64;
    let mut stream = rng::stream(77);
    let mut hits = 0u64;
    for _ in 0..trials {
        let mut a = agg.clone();
        if a.attach_particle(&mut stream, &cfg).unwrap() == Site::new(1, 1) {
            hits += 1;
        }
    }
    let hat = hits as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    assert!((hat - p).abs() < 4.0 * se, "hat {hat} vs oracle {p}");
}
