use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack on `x^α` when testing `y <= x^α` in floating point.
const BOUNDARY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x: i64,
    pub y: i64,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    pub fn new(x: i64, y: i64) -> Self {
        Site { x, y }
    }

    pub fn norm_sq(self) -> i128 {
        self.x as i128 * self.x as i128 + self.y as i128 * self.y as i128
    }

    pub fn is_adjacent(self, other: Site) -> bool {
        (self.x - other.x).abs() + (self.y - other.y).abs() == 1
    }
}

/// The lattice wedge `{(x, y) : x >= 0, 0 <= y <= x^α}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WedgeGeometry {
    pub alpha: f64,
}

impl WedgeGeometry {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::validation(
                "alpha",
                format!("{alpha} is outside the domain (0, 1)"),
            ));
        }
        Ok(WedgeGeometry { alpha })
    }

    pub fn contains(&self, p: Site) -> bool {
        if p.x < 0 || p.y < 0 {
            return false;
        }
        if p.x == 0 || p.y == 0 {
            return p.y == 0;
        }
        if self.alpha == 0.5 {
            return (p.y as i128) * (p.y as i128) <= p.x as i128;
        }
        p.y as f64 <= (self.alpha * (p.x as f64).ln()).exp() * (1.0 + BOUNDARY_EPS)
    }

    /// Largest `y` with `(x, y)` in the wedge; `x >= 0`.
    pub fn height(&self, x: i64) -> i64 {
        debug_assert!(x >= 0);
        if x == 0 {
            return 0;
        }
        let mut h = ((self.alpha * (x as f64).ln()).exp() * (1.0 + BOUNDARY_EPS)).floor() as i64;
        while h > 0 && !self.contains(Site::new(x, h)) {
            h -= 1;
        }
        while self.contains(Site::new(x, h + 1)) {
            h += 1;
        }
        h
    }
}

pub fn in_wedge(p: Site, geom: &WedgeGeometry) -> bool {
    geom.contains(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_examples() {
        let g = WedgeGeometry::new(0.5).unwrap();
        assert!(in_wedge(Site::new(0, 0), &g));
        assert!(in_wedge(Site::new(4, 2), &g));
        assert!(!in_wedge(Site::new(4, 3), &g));
        assert!(!in_wedge(Site::new(0, 1), &g));
        assert!(!in_wedge(Site::new(-1, 0), &g));
        assert!(!in_wedge(Site::new(3, -1), &g));
        assert!(in_wedge(Site::new(1, 1), &g));
    }

    #[test]
    fn exact_boundary_off_half() {
        // 8^{1/3} = 2 and 27^{1/3} = 3 sit exactly on the boundary.
        let g = WedgeGeometry::new(1.0 / 3.0).unwrap();
        assert!(g.contains(Site::new(8, 2)));
        assert!(g.contains(Site::new(27, 3)));
        assert!(!g.contains(Site::new(26, 3)));
        assert_eq!(g.height(27), 3);
        assert_eq!(g.height(26), 2);
    }

    #[test]
    fn heights_agree_with_membership() {
        for alpha in [0.1, 0.3, 0.5, 0.77, 0.95] {
            let g = WedgeGeometry::new(alpha).unwrap();
            for x in 0..500 {
                let h = g.height(x);
                assert!(g.contains(Site::new(x, h)));
                assert!(!g.contains(Site::new(x, h + 1)));
                if x > 0 {
                    assert!(h >= g.height(x - 1));
                }
            }
        }
    }
}
