use std::collections::HashMap;

use super::geometry::Site;

/// Disjoint sets with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

/// Lattice-connected components of `sites` outside the closed ball `|x| <= r`.
pub fn components_outside(sites: &[Site], r: f64) -> usize {
    let r2 = r * r;
    let mut survivors: Vec<Site> = sites
        .iter()
        .copied()
        .filter(|s| s.norm_sq() as f64 > r2)
        .collect();
    survivors.sort_unstable();
    survivors.dedup();
    let index: HashMap<Site, usize> = survivors.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut uf = UnionFind::new(index.len());
    for (i, s) in survivors.iter().enumerate() {
        for n in [Site::new(s.x + 1, s.y), Site::new(s.x, s.y + 1)] {
            if let Some(&j) = index.get(&n) {
                uf.union(i, j);
            }
        }
    }
    uf.components()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_find_basics() {
        let mut uf = UnionFind::new(5);
        assert_eq!(uf.components(), 5);
        assert!(uf.union(0, 1));
        assert!(uf.union(3, 4));
        assert!(!uf.union(1, 0));
        assert_eq!(uf.components(), 3);
        assert_eq!(uf.find(0), uf.find(1));
        assert_ne!(uf.find(0), uf.find(3));
    }

    #[test]
    fn empty_and_duplicates() {
        assert_eq!(components_outside(&[], 1.0), 0);
        let s = [Site::new(5, 0), Site::new(5, 0)];
        assert_eq!(components_outside(&s, 1.0), 1);
    }

    #[test]
    fn ball_is_closed() {
        let s = [Site::new(3, 4), Site::new(6, 0)];
        assert_eq!(components_outside(&s, 5.0), 1);
        assert_eq!(components_outside(&s, 4.999), 2);
    }
}
