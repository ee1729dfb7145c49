//! Generalised Sierpinski carpet graphs.

use std::collections::{HashSet, VecDeque};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Subset of the `L^d` subcubes of the unit cube kept at each subdivision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarpetGenerator {
    pub dim: usize,
    pub side: usize,
    pub cells: Vec<Vec<usize>>,
}

impl CarpetGenerator {
    /// The standard carpet: the 3x3 square minus its centre.
    pub fn standard() -> Self {
        let mut cells = Vec::new();
        for y in 0..3 {
            for x in 0..3 {
                if (x, y) != (1, 1) {
                    cells.push(vec![x, y]);
                }
            }
        }
        CarpetGenerator { dim: 2, side: 3, cells }
    }

    /// Every subcube kept: the level-n graph is a lattice box.
    pub fn full(dim: usize, side: usize) -> Self {
        let cells = (0..side.pow(dim as u32)).map(|k| digits(k, side, dim)).collect();
        CarpetGenerator { dim, side, cells }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: CarpetGenerator = serde_json::from_str(s)?;
        g.validate()?;
        Ok(g)
    }

    pub fn branches(&self) -> usize {
        self.cells.len()
    }

    fn set(&self) -> HashSet<Vec<usize>> {
        self.cells.iter().cloned().collect()
    }

    /// Number of cells on one face of the unit cube.
    pub fn face_count(&self) -> usize {
        self.cells.iter().filter(|c| c[0] == 0).count()
    }

    /// Runs the four generator conditions in order and names the first
    /// one that fails.
    pub fn validate(&self) -> Result<()> {
        let (d, l) = (self.dim, self.side);
        if d < 2 || l < 3 {
            return Err(Error::Generator(format!("need d >= 2 and L >= 3, got d={d}, L={l}")));
        }
        let set = self.set();
        if set.len() != self.cells.len() || self.cells.iter().any(|c| c.len() != d || c.iter().any(|&x| x >= l)) {
            return Err(Error::Generator("cells must be distinct points of {0..L-1}^d".into()));
        }
        // Symmetry: closed under coordinate swaps and reflections.
        for c in &self.cells {
            for i in 0..d {
                let mut r = c.clone();
                r[i] = l - 1 - r[i];
                if !set.contains(&r) {
                    return Err(Error::Generator(format!("Symmetry: reflection of {c:?} missing")));
                }
                for j in i + 1..d {
                    let mut s = c.clone();
                    s.swap(i, j);
                    if !set.contains(&s) {
                        return Err(Error::Generator(format!("Symmetry: transpose of {c:?} missing")));
                    }
                }
            }
        }
        // Connectedness: face-adjacent cells form one component.
        if face_components(&self.cells) != 1 {
            return Err(Error::Generator("Connectedness: cells are not face-connected".into()));
        }
        // Non-diagonality: every 2^d window has face-connected occupied cells.
        let windows = (l - 1).pow(d as u32);
        for k in 0..windows {
            let base = digits(k, l - 1, d);
            let occupied: Vec<Vec<usize>> = (0..1usize << d)
                .map(|bits| (0..d).map(|i| base[i] + ((bits >> i) & 1)).collect::<Vec<_>>())
                .filter(|c| set.contains(c))
                .collect();
            if !occupied.is_empty() && face_components(&occupied) != 1 {
                return Err(Error::Generator(format!(
                    "Non-diagonality: window at {base:?} meets only along lower-dimensional faces"
                )));
            }
        }
        // Borders included: the edge along the first axis.
        for k in 0..l {
            let mut c = vec![0; d];
            c[0] = k;
            if !set.contains(&c) {
                return Err(Error::Generator(format!("Borders included: cell {c:?} missing")));
            }
        }
        Ok(())
    }

    /// Level-`n` carpet graph: one vertex per kept unit cube (its corner
    /// nearest the origin), edges between vertices at distance 1.
    pub fn build_carpet(&self, n: usize) -> Result<WeightedGraph> {
        self.validate()?;
        let d = self.dim;
        let side = self
            .side
            .checked_pow(n as u32)
            .ok_or_else(|| Error::Capacity(format!("level {n} overflows L^n")))?;
        let total = side
            .checked_pow(d as u32)
            .filter(|&t| t <= 50_000_000)
            .ok_or_else(|| Error::Capacity(format!("level {n} has too many cubes")))?;
        let set = self.set();
        let keep = |p: &[usize]| -> bool {
            let mut q = p.to_vec();
            for _ in 0..n {
                let digit: Vec<usize> = q.iter().map(|x| x % self.side).collect();
                if !set.contains(&digit) {
                    return false;
                }
                q.iter_mut().for_each(|x| *x /= self.side);
            }
            true
        };
        let mut id = vec![usize::MAX; total];
        let mut coords = Vec::new();
        for (k, slot) in id.iter_mut().enumerate() {
            let p = digits(k, side, d);
            if keep(&p) {
                *slot = coords.len();
                coords.push(p);
            }
        }
        let mut edges = Vec::new();
        for p in &coords {
            let k = flat(p, side);
            for (i, &pi) in p.iter().enumerate() {
                if pi + 1 < side {
                    let j = k + side.pow(i as u32);
                    if id[j] != usize::MAX {
                        edges.push((id[k], id[j], 1.0));
                    }
                }
            }
        }
        let exact = coords
            .iter()
            .map(|p| p.iter().map(|&x| Rational64::from_integer(x as i64)).collect())
            .collect();
        let euclid = coords.iter().map(|p| p.iter().map(|&x| x as f64).collect()).collect();
        WeightedGraph::new(euclid, edges, 0)?.with_exact_coords(exact)
    }
}

/// Base-`b` digits of `k`, least significant first, `d` of them.
fn digits(mut k: usize, b: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; d];
    for x in out.iter_mut() {
        *x = k % b;
        k /= b;
    }
    out
}

fn flat(p: &[usize], b: usize) -> usize {
    p.iter().rev().fold(0, |acc, &x| acc * b + x)
}

fn face_components(cells: &[Vec<usize>]) -> usize {
    let set: HashSet<&Vec<usize>> = cells.iter().collect();
    let mut seen: HashSet<&Vec<usize>> = HashSet::new();
    let mut comps = 0;
    for c in cells {
        if seen.contains(c) {
            continue;
        }
        comps += 1;
        seen.insert(c);
        let mut q = VecDeque::from([c.clone()]);
        while let Some(v) = q.pop_front() {
            for i in 0..v.len() {
                for delta in [-1i64, 1] {
                    let x = v[i] as i64 + delta;
                    if x < 0 {
                        continue;
                    }
                    let mut w = v.clone();
                    w[i] = x as usize;
                    if let Some(&key) = set.get(&w) {
                        if seen.insert(key) {
                            q.push_back(w);
                        }
                    }
                }
            }
        }
    }
    comps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_carpet_level_one_is_a_ring() {
        let g = CarpetGenerator::standard().build_carpet(1).unwrap();
        assert_eq!(g.num_vertices(), 8);
        assert_eq!(g.num_edges(), 8);
        assert!((0..8).all(|v| g.degree(v) == 2));
    }

    #[test]
    fn full_generator_gives_grid() {
        let g = CarpetGenerator::full(2, 3).build_carpet(1).unwrap();
        assert_eq!(g.num_vertices(), 9);
        assert_eq!(g.num_edges(), 12);
    }

    #[test]
    fn non_diagonality_violator() {
        let mut cells = Vec::new();
        for y in 0..5 {
            for x in 0..5 {
                if x == 0 || y == 0 || x == 4 || y == 4 {
                    cells.push(vec![x, y]);
                }
            }
        }
        cells.extend([vec![2, 1], vec![1, 2], vec![3, 2], vec![2, 3]]);
        let g = CarpetGenerator { dim: 2, side: 5, cells };
        let e = g.validate().unwrap_err().to_string();
        assert!(e.contains("Non-diagonality"), "{e}");
    }

    #[test]
    fn other_conditions_are_named() {
        let asym = CarpetGenerator {
            dim: 2,
            side: 3,
            cells: vec![vec![0, 0], vec![1, 0], vec![2, 0], vec![0, 1]],
        };
        assert!(asym.validate().unwrap_err().to_string().contains("Symmetry"));
        let corners = CarpetGenerator {
            dim: 2,
            side: 3,
            cells: vec![vec![0, 0], vec![2, 0], vec![0, 2], vec![2, 2]],
        };
        assert!(corners.validate().unwrap_err().to_string().contains("Connectedness"));
        // a plus sign: symmetric and connected, but misses the corner cells
        let plus = CarpetGenerator {
            dim: 2,
            side: 3,
            cells: vec![vec![1, 0], vec![0, 1], vec![1, 1], vec![2, 1], vec![1, 2]],
        };
        assert!(plus.validate().unwrap_err().to_string().contains("Borders included"));
    }

    #[test]
    fn edge_counts_follow_face_recursion() {
        for gen in [
            CarpetGenerator::standard(),
            CarpetGenerator::full(2, 3),
            CarpetGenerator::full(3, 3),
        ] {
            let n_cells = gen.branches();
            let sigma = gen.face_count();
            let e1 = gen.build_carpet(1).unwrap().num_edges();
            let mut e = e1;
            let top = if gen.dim == 3 { 3 } else { 4 };
            for n in 1..top {
                let next = gen.build_carpet(n + 1).unwrap().num_edges();
                assert_eq!(next, n_cells * e + e1 * sigma.pow(n as u32));
                e = next;
            }
        }
    }

    #[test]
    fn vertex_count_is_n_to_the_level() {
        let gen = CarpetGenerator::standard();
        for n in 1..4 {
            assert_eq!(gen.build_carpet(n).unwrap().num_vertices(), 8usize.pow(n as u32));
        }
    }
}
