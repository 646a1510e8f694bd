//! The growing aggregate and the particle walk.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::ends::components_outside;
use super::geometry::{Site, WedgeGeometry};
use crate::error::{Error, Result};

/// Knobs of the walk-from-infinity approximation.
///
/// Walkers start uniformly on the cross-section `x = launch_factor·L + launch_margin`
/// and are relaunched when they step beyond `x = escape_factor·x_launch`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DlaConfig {
    pub launch_margin: i64,
    pub launch_factor: i64,
    pub escape_factor: i64,
    /// Steps allowed per launch before the walk is abandoned and relaunched.
    pub step_budget: u64,
    /// Abandoned walks allowed per particle before failing.
    pub resample_cap: u64,
}

impl Default for DlaConfig {
    fn default() -> Self {
        DlaConfig {
            launch_margin: 64,
            launch_factor: 2,
            escape_factor: 2,
            step_budget: 1 << 32,
            resample_cap: 16,
        }
    }
}

impl DlaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.launch_margin < 1 {
            return Err(Error::validation("launch_margin", "must be at least 1"));
        }
        if self.launch_factor < 1 {
            return Err(Error::validation("launch_factor", "must be at least 1"));
        }
        if self.escape_factor < 2 {
            return Err(Error::validation("escape_factor", "must be at least 2"));
        }
        if self.step_budget == 0 {
            return Err(Error::validation("step_budget", "must be positive"));
        }
        Ok(())
    }

    pub fn launch_x(&self, l_tip: i64) -> i64 {
        self.launch_factor * l_tip + self.launch_margin
    }
}

/// Dense occupancy over the wedge columns `0..=max_x`.
#[derive(Debug, Clone)]
struct Lattice {
    geom: WedgeGeometry,
    heights: Vec<i64>,
    offsets: Vec<usize>,
    occupied: Vec<bool>,
}

impl Lattice {
    fn new(geom: WedgeGeometry) -> Self {
        let mut l = Lattice {
            geom,
            heights: Vec::new(),
            offsets: vec![0],
            occupied: Vec::new(),
        };
        l.ensure(0);
        l
    }

    fn ensure(&mut self, max_x: i64) {
        while (self.heights.len() as i64) <= max_x {
            let h = self.geom.height(self.heights.len() as i64);
            self.heights.push(h);
            let end = self.offsets.last().unwrap() + h as usize + 1;
            self.offsets.push(end);
            self.occupied.resize(end, false);
        }
    }

    fn max_x(&self) -> i64 {
        self.heights.len() as i64 - 1
    }

    #[inline]
    fn height(&self, x: i64) -> i64 {
        self.heights[x as usize]
    }

    #[inline]
    fn index(&self, p: Site) -> usize {
        self.offsets[p.x as usize] + p.y as usize
    }

    #[inline]
    fn get(&self, p: Site) -> bool {
        p.x <= self.max_x() && self.occupied[self.index(p)]
    }

    fn set(&mut self, p: Site) {
        self.ensure(p.x);
        let i = self.index(p);
        self.occupied[i] = true;
    }
}

/// Arm tips: `L` is the largest column holding a site, `R` the largest holding two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TipGap {
    pub l: i64,
    /// `None` when no column holds two sites.
    pub r: Option<i64>,
    /// `L - R`, or `L` when `R` is undefined.
    pub gap: i64,
}

impl TipGap {
    pub fn r_undefined(&self) -> bool {
        self.r.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct WedgeAggregate {
    geom: WedgeGeometry,
    particles: Vec<Site>,
    /// `(attached site, aggregate site it stepped into)` per attachment.
    edges: Vec<(Site, Site)>,
    grid: Lattice,
    column_counts: Vec<u64>,
    l_tip: i64,
    r_tip: Option<i64>,
}

impl WedgeAggregate {
    /// `A_0 = {(0, 0)}`.
    pub fn new(geom: WedgeGeometry) -> Self {
        let mut agg = WedgeAggregate {
            geom,
            particles: Vec::new(),
            edges: Vec::new(),
            grid: Lattice::new(geom),
            column_counts: Vec::new(),
            l_tip: 0,
            r_tip: None,
        };
        agg.insert(Site::ORIGIN);
        agg
    }

    /// An aggregate holding exactly `sites` (need not be connected). Sites must
    /// be distinct and inside the wedge.
    pub fn from_sites(geom: WedgeGeometry, sites: &[Site]) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::validation("sites", "aggregate must be non-empty"));
        }
        let mut agg = WedgeAggregate {
            geom,
            particles: Vec::new(),
            edges: Vec::new(),
            grid: Lattice::new(geom),
            column_counts: Vec::new(),
            l_tip: 0,
            r_tip: None,
        };
        for &s in sites {
            if !geom.contains(s) {
                return Err(Error::validation(
                    "sites",
                    format!("({}, {}) lies outside the wedge", s.x, s.y),
                ));
            }
            if agg.contains(s) {
                return Err(Error::validation(
                    "sites",
                    format!("({}, {}) listed twice", s.x, s.y),
                ));
            }
            agg.insert(s);
        }
        Ok(agg)
    }

    fn insert(&mut self, s: Site) {
        self.grid.set(s);
        let x = s.x as usize;
        if self.column_counts.len() <= x {
            self.column_counts.resize(x + 1, 0);
        }
        self.column_counts[x] += 1;
        self.l_tip = self.l_tip.max(s.x);
        if self.column_counts[x] >= 2 {
            self.r_tip = Some(self.r_tip.map_or(s.x, |r| r.max(s.x)));
        }
        self.particles.push(s);
    }

    pub fn geometry(&self) -> WedgeGeometry {
        self.geom
    }

    pub fn particles(&self) -> &[Site] {
        &self.particles
    }

    pub fn edges(&self) -> &[(Site, Site)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn contains(&self, s: Site) -> bool {
        self.geom.contains(s) && self.grid.get(s)
    }

    pub fn column_count(&self, x: i64) -> u64 {
        usize::try_from(x)
            .ok()
            .and_then(|x| self.column_counts.get(x).copied())
            .unwrap_or(0)
    }

    pub fn l_tip(&self) -> i64 {
        self.l_tip
    }

    pub fn r_tip(&self) -> Option<i64> {
        self.r_tip
    }

    pub fn tip_gap(&self) -> TipGap {
        TipGap {
            l: self.l_tip,
            r: self.r_tip,
            gap: self.l_tip - self.r_tip.unwrap_or(0),
        }
    }

    /// Components of the aggregate outside the closed ball of radius `r`.
    pub fn ends_estimate(&self, r: f64) -> usize {
        components_outside(&self.particles, r)
    }

    /// Runs one walker to the aggregate and attaches the last site it visited.
    pub fn attach_particle<R: RngCore>(&mut self, rng: &mut R, cfg: &DlaConfig) -> Result<Site> {
        let x_launch = cfg.launch_x(self.l_tip);
        let x_escape = cfg.escape_factor * x_launch;
        self.grid.ensure(x_escape + 1);
        let (site, target) = self.walk(rng, cfg, x_launch, x_escape)?;
        self.edges.push((site, target));
        self.insert(site);
        Ok(site)
    }

    /// Returns `(last site visited, aggregate site stepped into)`.
    fn walk<R: RngCore>(
        &self,
        rng: &mut R,
        cfg: &DlaConfig,
        x_launch: i64,
        x_escape: i64,
    ) -> Result<(Site, Site)> {
        let grid = &self.grid;
        let mut abandoned = 0;
        'launch: loop {
            let y0 = rng.random_range(0..=grid.height(x_launch));
            let mut pos = Site::new(x_launch, y0);
            let mut steps = 0u64;
            loop {
                // Uniform over the in-wedge lattice neighbours; moving right
                // never leaves the wedge.
                let mut nbrs = [Site::new(pos.x + 1, pos.y); 4];
                let mut k = 1;
                if pos.x > 0 && pos.y <= grid.height(pos.x - 1) {
                    nbrs[k] = Site::new(pos.x - 1, pos.y);
                    k += 1;
                }
                if pos.y < grid.height(pos.x) {
                    nbrs[k] = Site::new(pos.x, pos.y + 1);
                    k += 1;
                }
                if pos.y > 0 {
                    nbrs[k] = Site::new(pos.x, pos.y - 1);
                    k += 1;
                }
                let next = nbrs[rng.random_range(0..k)];
                if next.x > x_escape {
                    continue 'launch;
                }
                if grid.occupied[grid.index(next)] {
                    return Ok((pos, next));
                }
                pos = next;
                steps += 1;
                if steps >= cfg.step_budget {
                    abandoned += 1;
                    if abandoned > cfg.resample_cap {
                        return Err(Error::ResourceCap(format!(
                            "particle {} abandoned {abandoned} walks of {} steps",
                            self.particles.len(),
                            cfg.step_budget
                        )));
                    }
                    continue 'launch;
                }
            }
        }
    }

    /// Connectivity, confinement, distinctness and tip bookkeeping.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.particles.len();
        if n == 0 || self.particles[0] != Site::ORIGIN {
            return Err(Error::Invariant("aggregate must start at the origin".into()));
        }
        if let Some(s) = self.particles.iter().find(|s| !self.geom.contains(**s)) {
            return Err(Error::Invariant(format!("({}, {}) outside the wedge", s.x, s.y)));
        }
        let mut sorted = self.particles.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != n {
            return Err(Error::Invariant("a site was attached twice".into()));
        }
        for (k, &(site, target)) in self.edges.iter().enumerate() {
            if self.particles[k + 1] != site || !site.is_adjacent(target) || !self.particles[..=k].contains(&target) {
                return Err(Error::Invariant(format!("attachment {} is not adjacent", k + 1)));
            }
        }
        // Breadth-first search over the whole aggregate.
        let mut seen = vec![false; self.grid.occupied.len()];
        let mut queue = VecDeque::from([Site::ORIGIN]);
        seen[self.grid.index(Site::ORIGIN)] = true;
        let mut reached = 1;
        while let Some(p) = queue.pop_front() {
            for q in [
                Site::new(p.x + 1, p.y),
                Site::new(p.x - 1, p.y),
                Site::new(p.x, p.y + 1),
                Site::new(p.x, p.y - 1),
            ] {
                if self.contains(q) && !seen[self.grid.index(q)] {
                    seen[self.grid.index(q)] = true;
                    reached += 1;
                    queue.push_back(q);
                }
            }
        }
        if reached != n {
            return Err(Error::Invariant(format!("only {reached} of {n} sites connected")));
        }
        let l = self.particles.iter().map(|s| s.x).max().unwrap();
        let r = (0..self.column_counts.len())
            .rev()
            .find(|&x| self.column_counts[x] >= 2)
            .map(|x| x as i64);
        if l != self.l_tip || r != self.r_tip || r.is_some_and(|r| r > l) {
            return Err(Error::Invariant("tip bookkeeping out of date".into()));
        }
        Ok(())
    }

    /// Site list CSV `k,x,y`.
    pub fn sites_csv(&self) -> String {
        let mut out = String::from("k,x,y\n");
        for (k, s) in self.particles.iter().enumerate() {
            let _ = writeln!(out, "{k},{},{}", s.x, s.y);
        }
        out
    }

    /// Plain PGM of the occupied lattice; row 0 is the top of the picture.
    pub fn to_pgm(&self) -> String {
        let w = self.l_tip + 1;
        let h = self.grid.height(self.l_tip) + 1;
        let mut out = format!("P2\n{w} {h}\n255\n");
        for row in 0..h {
            let y = h - 1 - row;
            let line: Vec<&str> = (0..w)
                .map(|x| if self.contains(Site::new(x, y)) { "255" } else { "0" })
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Parses a `k,x,y` site list as written by [`WedgeAggregate::sites_csv`].
pub fn parse_sites_csv(text: &str) -> Result<Vec<Site>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == "k,x,y" => {}
        _ => return Err(Error::validation("input", "expected header k,x,y")),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::validation("input", format!("malformed row {}: {line}", i + 2));
            if f.len() != 3 {
                return Err(bad());
            }
            let x = f[1].parse().map_err(|_| bad())?;
            let y = f[2].parse().map_err(|_| bad())?;
            Ok(Site::new(x, y))
        })
        .collect()
}

/// A full run from `A_0` with the tip series after every attachment.
#[derive(Debug, Clone)]
pub struct DlaRun {
    pub aggregate: WedgeAggregate,
    /// Tips after attachment `k`, `k = 0..=particles`.
    pub tips: Vec<TipGap>,
}

impl DlaRun {
    /// Tip series CSV `k,L,R,gap`; `R` is empty while undefined.
    pub fn tips_csv(&self) -> String {
        let mut out = String::from("k,L,R,gap\n");
        for (k, t) in self.tips.iter().enumerate() {
            let r = t.r.map(|r| r.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{k},{},{r},{}", t.l, t.gap);
        }
        out
    }
}

pub fn run_dla<R: RngCore>(
    geom: WedgeGeometry,
    particles: u64,
    rng: &mut R,
    cfg: &DlaConfig,
) -> Result<DlaRun> {
    cfg.validate()?;
    let mut aggregate = WedgeAggregate::new(geom);
    let mut tips = Vec::with_capacity(particles as usize + 1);
    tips.push(aggregate.tip_gap());
    for _ in 0..particles {
        aggregate.attach_particle(rng, cfg)?;
        tips.push(aggregate.tip_gap());
    }
    Ok(DlaRun { aggregate, tips })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn g(alpha: f64) -> WedgeGeometry {
        WedgeGeometry::new(alpha).unwrap()
    }

    #[test]
    fn first_attachment_is_the_only_wedge_neighbour() {
        // (0, 1) is outside the wedge and (1, 1) is not lattice-adjacent to
        // the origin, so the first particle always lands on (1, 0).
        for seed in 0..50 {
            let mut agg = WedgeAggregate::new(g(0.5));
            let s = agg.attach_particle(&mut rng::stream(seed), &DlaConfig::default()).unwrap();
            assert_eq!(s, Site::new(1, 0));
            assert_eq!(agg.len(), 2);
        }
    }

    #[test]
    fn size_grows_by_one() {
        let mut agg = WedgeAggregate::new(g(0.4));
        let mut r = rng::stream(3);
        let cfg = DlaConfig { launch_margin: 8, ..DlaConfig::default() };
        for k in 1..=60 {
            agg.attach_particle(&mut r, &cfg).unwrap();
            assert_eq!(agg.len(), k + 1);
        }
        agg.check_invariants().unwrap();
    }

    #[test]
    fn tip_gap_examples() {
        let line = WedgeAggregate::from_sites(
            g(0.5),
            &[Site::new(0, 0), Site::new(1, 0), Site::new(2, 0)],
        )
        .unwrap();
        let t = line.tip_gap();
        assert!(t.r_undefined());
        assert_eq!((t.l, t.gap), (2, 2));

        let synth = WedgeAggregate::from_sites(
            g(0.5),
            &[Site::new(0, 0), Site::new(1, 0), Site::new(1, 1), Site::new(5, 0)],
        )
        .unwrap();
        assert_eq!(synth.tip_gap(), TipGap { l: 5, r: Some(1), gap: 4 });
    }

    #[test]
    fn from_sites_rejects_bad_input() {
        assert!(WedgeAggregate::from_sites(g(0.5), &[]).is_err());
        assert!(WedgeAggregate::from_sites(g(0.5), &[Site::new(0, 1)]).is_err());
        assert!(WedgeAggregate::from_sites(g(0.5), &[Site::new(1, 0), Site::new(1, 0)]).is_err());
    }

    #[test]
    fn broken_connectivity_is_reported() {
        let agg = WedgeAggregate::from_sites(g(0.5), &[Site::new(0, 0), Site::new(2, 0)]).unwrap();
        assert!(agg.check_invariants().is_err());
    }

    #[test]
    fn resample_cap_fails_loudly() {
        let mut agg = WedgeAggregate::new(g(0.5));
        let cfg = DlaConfig {
            step_budget: 1,
            resample_cap: 3,
            ..DlaConfig::default()
        };
        assert!(matches!(
            agg.attach_particle(&mut rng::stream(1), &cfg),
            Err(Error::ResourceCap(_))
        ));
    }

    #[test]
    fn sites_csv_round_trip() {
        let mut r = rng::stream(8);
        let cfg = DlaConfig { launch_margin: 4, ..DlaConfig::default() };
        let run = run_dla(g(0.6), 30, &mut r, &cfg).unwrap();
        let sites = parse_sites_csv(&run.aggregate.sites_csv()).unwrap();
        assert_eq!(sites, run.aggregate.particles());
        assert!(parse_sites_csv("x,y\n1,2").is_err());
        assert!(parse_sites_csv("k,x,y\n0,a,1").is_err());
        assert_eq!(run.tips.len(), 31);
        assert!(run.tips_csv().starts_with("k,L,R,gap\n0,0,,0\n"));
    }

    #[test]
    fn pgm_header() {
        let agg = WedgeAggregate::from_sites(g(0.5), &[Site::new(0, 0), Site::new(1, 0)]).unwrap();
        assert_eq!(agg.to_pgm(), "P2\n2 2\n255\n0 0\n255 255\n");
    }
}
