//! Self-similar (nested fractal) specifications and their prefractal graphs.
//!
//! Points are carried in exact rational "lattice" coordinates. A fixed
//! frame matrix maps lattice coordinates to the Euclidean embedding, which
//! lets the gasket live on the triangular lattice while every vertex
//! identification stays exact.

use std::collections::HashMap;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::tree::OrderedTree;
use crate::graph::{VertexId, WeightedGraph};

type Point = Vec<Rational64>;

/// `psi(x) = linear * x / L + shift`, in lattice coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeMap {
    pub linear: Vec<Vec<i64>>,
    #[serde(with = "rational_vec")]
    pub shift: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IfsSpec {
    pub name: String,
    pub dim: usize,
    /// `L`: every map contracts by `1/L`.
    pub ratio: i64,
    /// Essential fixed points; the first one must be the origin (the root).
    #[serde(with = "rational_rows")]
    pub v0: Vec<Point>,
    pub maps: Vec<LatticeMap>,
    /// Row-major `dim x dim` matrix taking lattice to Euclidean coordinates.
    pub frame: Vec<Vec<f64>>,
}

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn identity(d: usize) -> Vec<Vec<i64>> {
    (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect()
}

fn identity_frame(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

impl IfsSpec {
    /// Sierpinski gasket on the triangular lattice spanned by `(1,0)` and
    /// `(1/2, sqrt(3)/2)`.
    pub fn sierpinski_gasket() -> Self {
        let shifts = [(0, 0), (1, 0), (0, 1)];
        IfsSpec {
            name: "sierpinski-gasket".into(),
            dim: 2,
            ratio: 2,
            v0: vec![vec![r(0, 1), r(0, 1)], vec![r(1, 1), r(0, 1)], vec![r(0, 1), r(1, 1)]],
            maps: shifts
                .iter()
                .map(|&(a, b)| LatticeMap {
                    linear: identity(2),
                    shift: vec![r(a, 2), r(b, 2)],
                })
                .collect(),
            frame: vec![vec![1.0, 0.5], vec![0.0, 3f64.sqrt() / 2.0]],
        }
    }

    /// Vicsek cross: four corner squares and the centre square of the
    /// 3x3 subdivision of the unit square.
    pub fn vicsek_cross() -> Self {
        let shifts = [(0, 0), (2, 0), (2, 2), (0, 2), (1, 1)];
        IfsSpec {
            name: "vicsek-cross".into(),
            dim: 2,
            ratio: 3,
            v0: vec![
                vec![r(0, 1), r(0, 1)],
                vec![r(1, 1), r(0, 1)],
                vec![r(1, 1), r(1, 1)],
                vec![r(0, 1), r(1, 1)],
            ],
            maps: shifts
                .iter()
                .map(|&(a, b)| LatticeMap {
                    linear: identity(2),
                    shift: vec![r(a, 3), r(b, 3)],
                })
                .collect(),
            frame: identity_frame(2),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: IfsSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn branches(&self) -> usize {
        self.maps.len()
    }

    pub fn boundary_size(&self) -> usize {
        self.v0.len()
    }

    fn apply(&self, m: &LatticeMap, x: &[Rational64]) -> Point {
        (0..self.dim)
            .map(|i| {
                let lin: Rational64 = (0..self.dim)
                    .map(|j| Rational64::from_integer(m.linear[i][j]) * x[j])
                    .sum();
                lin / self.ratio + m.shift[i]
            })
            .collect()
    }

    pub fn to_euclidean(&self, x: &[Rational64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.frame[i][j] * rational_to_f64(x[j])).sum())
            .collect()
    }

    /// Checks the similitude property of every map, the root convention,
    /// and a finite-ramification proxy on levels 1 and 2.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d == 0 || self.ratio < 2 {
            return Err(Error::Generator("need dimension >= 1 and L >= 2".into()));
        }
        if self.v0.len() < 2 || self.maps.is_empty() {
            return Err(Error::Generator("need |V0| >= 2 and at least one map".into()));
        }
        if self.frame.len() != d || self.frame.iter().any(|row| row.len() != d) {
            return Err(Error::Generator("frame must be dim x dim".into()));
        }
        if self.v0.iter().any(|p| p.len() != d) {
            return Err(Error::Generator("V0 point of the wrong dimension".into()));
        }
        if self.v0[0].iter().any(|c| *c != Rational64::from_integer(0)) {
            return Err(Error::Generator("first V0 point must be the origin".into()));
        }
        // frame-space Gram matrix must be preserved by every linear part
        let gram = |a: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
            (0..d)
                .map(|i| (0..d).map(|j| (0..d).map(|k| a(k, i) * a(k, j)).sum()).collect())
                .collect()
        };
        let base = gram(&|k, i| self.frame[k][i]);
        for (idx, m) in self.maps.iter().enumerate() {
            if m.linear.len() != d || m.linear.iter().any(|row| row.len() != d) || m.shift.len() != d {
                return Err(Error::Generator(format!("map {idx} has the wrong shape")));
            }
            let fa = |k: usize, i: usize| -> f64 { (0..d).map(|l| self.frame[k][l] * m.linear[l][i] as f64).sum() };
            let g = gram(&fa);
            for i in 0..d {
                for j in 0..d {
                    if (g[i][j] - base[i][j]).abs() > 1e-9 {
                        return Err(Error::Generator(format!("map {idx} is not a 1/L-similitude")));
                    }
                }
            }
        }
        for level in 1..=2 {
            let cells = self.cells(level);
            let mut seen: HashMap<Vec<Point>, usize> = HashMap::new();
            for (i, c) in cells.iter().enumerate() {
                let mut key = c.clone();
                key.sort();
                if let Some(j) = seen.insert(key, i) {
                    return Err(Error::Generator(format!("level-{level} cells {j} and {i} coincide")));
                }
            }
            if d == 2 {
                self.check_planar_overlap(&cells, level)?;
            }
        }
        Ok(())
    }

    /// No cell's boundary point may lie strictly inside another cell's
    /// convex hull.
    fn check_planar_overlap(&self, cells: &[Vec<Point>], level: usize) -> Result<()> {
        let euclid: Vec<Vec<Vec<f64>>> = cells
            .iter()
            .map(|c| c.iter().map(|p| self.to_euclidean(p)).collect())
            .collect();
        let hulls: Vec<Vec<[f64; 2]>> = euclid
            .iter()
            .map(|c| convex_hull(c.iter().map(|p| [p[0], p[1]]).collect()))
            .collect();
        let scale = (self.ratio as f64).powi(level as i32);
        let eps = 1e-9 / scale;
        for (i, hull) in hulls.iter().enumerate() {
            if hull.len() < 3 {
                continue;
            }
            for (j, c) in euclid.iter().enumerate() {
                if i == j {
                    continue;
                }
                if c.iter().any(|p| strictly_inside(hull, [p[0], p[1]], eps)) {
                    return Err(Error::Generator(format!(
                        "level-{level} cells {i} and {j} overlap: not finitely ramified"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Level-`n` cells `psi_w(V0)` in lexicographic word order, in unit
    /// (unscaled) lattice coordinates.
    pub fn cells(&self, n: usize) -> Vec<Vec<Point>> {
        let mut cells = vec![self.v0.clone()];
        for _ in 0..n {
            let mut next = Vec::with_capacity(cells.len() * self.maps.len());
            for m in &self.maps {
                for c in &cells {
                    next.push(c.iter().map(|p| self.apply(m, p)).collect());
                }
            }
            cells = next;
        }
        cells
    }

    /// Level-`n` prefractal graph at scale `L^n`. Vertices `0..|V0|` are
    /// the scaled essential fixed points in `V0` order; the root is the
    /// origin. Unit weight on every pair of distinct points of every cell.
    pub fn build_prefractal(&self, n: usize) -> Result<WeightedGraph> {
        self.validate()?;
        let scale = Rational64::from_integer(
            self.ratio
                .checked_pow(n as u32)
                .ok_or_else(|| Error::Capacity(format!("level {n} overflows L^n")))?,
        );
        let cells = self.cells(n);
        let mut index: HashMap<Point, VertexId> = HashMap::new();
        let mut points: Vec<Point> = Vec::new();
        let mut intern = |p: Point, points: &mut Vec<Point>| -> VertexId {
            *index.entry(p.clone()).or_insert_with(|| {
                points.push(p);
                points.len() - 1
            })
        };
        for p in &self.v0 {
            intern(p.iter().map(|c| c * scale).collect(), &mut points);
        }
        let mut cell_ids = Vec::with_capacity(cells.len());
        let mut edges = Vec::new();
        for c in &cells {
            let ids: Vec<VertexId> = c
                .iter()
                .map(|p| intern(p.iter().map(|x| x * scale).collect(), &mut points))
                .collect();
            for a in 0..ids.len() {
                for b in a + 1..ids.len() {
                    if ids[a] != ids[b] {
                        edges.push((ids[a], ids[b], 1.0));
                    }
                }
            }
            cell_ids.push(ids);
        }
        let coords = points.iter().map(|p| self.to_euclidean(p)).collect();
        WeightedGraph::new(coords, edges, 0)?
            .with_exact_coords(points)?
            .with_cells(cell_ids)
    }

    /// Cell-adjacency graph of level `n`: one node per word, an edge when
    /// two cells share a point. Must be a tree.
    pub fn build_vicsek_adjacency_tree(&self, n: usize) -> Result<OrderedTree> {
        if self.v0.len() != 4 {
            return Err(Error::InvalidArgument(format!(
                "cell-adjacency trees need |V0| = 4, got {}",
                self.v0.len()
            )));
        }
        let g = self.build_prefractal(n)?;
        let cells = g.cells().unwrap_or_default();
        let mut containing: Vec<Vec<usize>> = vec![Vec::new(); g.num_vertices()];
        for (c, ids) in cells.iter().enumerate() {
            for &v in ids {
                containing[v].push(c);
            }
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); cells.len()];
        let mut edge_count = 0usize;
        for list in &containing {
            for a in 0..list.len() {
                for b in a + 1..list.len() {
                    adj[list[a]].push(list[b]);
                    adj[list[b]].push(list[a]);
                    edge_count += 1;
                }
            }
        }
        if edge_count + 1 != cells.len() {
            return Err(Error::NotTreeLike(format!(
                "{} cells but {edge_count} adjacencies",
                cells.len()
            )));
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let root = containing[g.root()][0];
        OrderedTree::from_adjacency(&adj, root).map_err(|e| Error::NotTreeLike(e.to_string()))
    }
}

pub fn rational_to_f64(q: Rational64) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Snaps a float to the simplest rational within `1e-9`.
pub fn snap_rational(x: f64) -> Result<Rational64> {
    if !x.is_finite() {
        return Err(Error::Generator(format!("non-finite coordinate {x}")));
    }
    // continued-fraction convergents until within tolerance
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a.abs() > 1e12 {
            break;
        }
        let a = a as i64;
        let (h2, k2) = match (
            a.checked_mul(h1).and_then(|t| t.checked_add(h0)),
            a.checked_mul(k1).and_then(|t| t.checked_add(k0)),
        ) {
            (Some(h), Some(k)) => (h, k),
            _ => break,
        };
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        if (h1 as f64 / k1 as f64 - x).abs() <= 1e-9 {
            return Ok(Rational64::new(h1, k1));
        }
        let frac = v - a as f64;
        if frac == 0.0 {
            break;
        }
        v = 1.0 / frac;
    }
    Err(Error::Generator(format!("cannot snap {x} to a rational")))
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// `hull` is counter-clockwise.
fn strictly_inside(hull: &[[f64; 2]], p: [f64; 2], eps: f64) -> bool {
    (0..hull.len()).all(|i| cross(hull[i], hull[(i + 1) % hull.len()], p) > eps)
}

/// Serde helpers: rationals as `"p/q"` strings or plain numbers (snapped).
mod rational_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(super) enum Scalar {
        Text(String),
        Int(i64),
        Float(f64),
    }

    pub(super) fn to_rational(s: Scalar) -> std::result::Result<Rational64, String> {
        match s {
            Scalar::Text(t) => crate::graph::parse_rational(&t).map_err(|e| e.to_string()),
            Scalar::Int(i) => Ok(Rational64::from_integer(i)),
            Scalar::Float(f) => snap_rational(f).map_err(|e| e.to_string()),
        }
    }

    pub fn serialize<S: Serializer>(v: &[Rational64], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|q| q.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational64>, D::Error> {
        let raw: Vec<Scalar> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|s| to_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

mod rational_rows {
    use super::rational_vec::{to_rational, Scalar};
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<Rational64>], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(
            v.iter()
                .map(|row| row.iter().map(|q| q.to_string()).collect::<Vec<_>>()),
        )
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<Rational64>>, D::Error> {
        let raw: Vec<Vec<Scalar>> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|s| to_rational(s).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn gasket_level_one_counts() {
        let g = IfsSpec::sierpinski_gasket().build_prefractal(1).unwrap();
        assert_eq!(g.num_vertices(), 6);
        assert_eq!(g.num_edges(), 9);
        assert_eq!(g.root(), 0);
        assert_eq!(g.coords(0), &[0.0, 0.0]);
    }

    #[test]
    fn level_zero_is_complete_graph() {
        for spec in [IfsSpec::sierpinski_gasket(), IfsSpec::vicsek_cross()] {
            let g = spec.build_prefractal(0).unwrap();
            let k = spec.v0.len();
            assert_eq!(g.num_vertices(), k);
            assert_eq!(g.num_edges(), k * (k - 1) / 2);
        }
    }

    /// Brute-force point-set size: collect all level-n points in a set of
    /// exact rationals, independent of the builder's interning.
    fn brute_force_vertices(spec: &IfsSpec, n: usize) -> usize {
        let mut pts: BTreeSet<Vec<Rational64>> = BTreeSet::new();
        let mut words = vec![Vec::<usize>::new()];
        for _ in 0..n {
            words = words
                .into_iter()
                .flat_map(|w| {
                    (0..spec.maps.len()).map(move |i| {
                        let mut v = w.clone();
                        v.push(i);
                        v
                    })
                })
                .collect();
        }
        for w in words {
            for p in &spec.v0 {
                let mut q = p.clone();
                for &i in w.iter().rev() {
                    q = spec.apply(&spec.maps[i], &q);
                }
                pts.insert(q);
            }
        }
        pts.len()
    }

    #[test]
    fn vertex_counts_match_brute_force() {
        for spec in [IfsSpec::sierpinski_gasket(), IfsSpec::vicsek_cross()] {
            for n in 0..=3 {
                let g = spec.build_prefractal(n).unwrap();
                assert_eq!(g.num_vertices(), brute_force_vertices(&spec, n), "{} n={n}", spec.name);
            }
        }
    }

    #[test]
    fn vicsek_level_one_counts() {
        let g = IfsSpec::vicsek_cross().build_prefractal(1).unwrap();
        assert_eq!(g.num_vertices(), 16);
        assert_eq!(g.num_edges(), 30);
    }

    #[test]
    fn gluing_recursions() {
        // gasket: |V_{n+1}| = 3|V_n| - 3, edges 3^{n+1}
        let gasket = IfsSpec::sierpinski_gasket();
        let mut v = 3usize;
        for n in 0..5 {
            let g = gasket.build_prefractal(n).unwrap();
            assert_eq!(g.num_vertices(), v);
            assert_eq!(g.num_edges(), 3usize.pow(n as u32 + 1));
            v = 3 * v - 3;
        }
        // vicsek: |V_{n+1}| = 5|V_n| - 4, edges 6 * 5^n
        let vicsek = IfsSpec::vicsek_cross();
        let mut v = 4usize;
        for n in 0..4 {
            let g = vicsek.build_prefractal(n).unwrap();
            assert_eq!(g.num_vertices(), v);
            assert_eq!(g.num_edges(), 6 * 5usize.pow(n as u32));
            v = 5 * v - 4;
        }
    }

    #[test]
    fn adjacency_trees() {
        let vicsek = IfsSpec::vicsek_cross();
        let t0 = vicsek.build_vicsek_adjacency_tree(0).unwrap();
        assert_eq!(t0.num_vertices(), 1);
        let t1 = vicsek.build_vicsek_adjacency_tree(1).unwrap();
        assert_eq!(t1.num_vertices(), 5);
        // star: the centre cell (word 4) touches the four corner cells
        let center_degree = t1.neighbors(4).count();
        assert_eq!(center_degree, 4);
        let mut gasket = IfsSpec::sierpinski_gasket();
        gasket.v0.push(vec![r(1, 3), r(1, 3)]);
        // a four-point boundary on the gasket still has a cyclic cell graph
        let e = gasket.build_vicsek_adjacency_tree(1);
        assert!(e.is_err());
        let tri = IfsSpec::sierpinski_gasket();
        assert!(matches!(
            tri.build_vicsek_adjacency_tree(1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn gasket_cell_graph_has_a_cycle() {
        let g = IfsSpec::sierpinski_gasket().build_prefractal(1).unwrap();
        let cells = g.cells().unwrap();
        let shared = |a: &Vec<usize>, b: &Vec<usize>| a.iter().any(|v| b.contains(v));
        assert!(shared(&cells[0], &cells[1]));
        assert!(shared(&cells[1], &cells[2]));
        assert!(shared(&cells[2], &cells[0]));
    }

    #[test]
    fn overlapping_maps_are_rejected() {
        let mut spec = IfsSpec::sierpinski_gasket();
        spec.maps.push(LatticeMap {
            linear: identity(2),
            shift: vec![r(1, 4), r(1, 4)],
        });
        assert!(matches!(spec.validate(), Err(Error::Generator(_))));
    }

    #[test]
    fn non_similitude_is_rejected() {
        let mut spec = IfsSpec::vicsek_cross();
        spec.maps[0].linear = vec![vec![2, 0], vec![0, 1]];
        assert!(matches!(spec.validate(), Err(Error::Generator(_))));
    }

    #[test]
    fn json_round_trip_and_float_snapping() {
        let spec = IfsSpec::vicsek_cross();
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(IfsSpec::from_json(&s).unwrap(), spec);
        let floaty = s
            .replace("\"1/3\"", "0.3333333333333333")
            .replace("\"2/3\"", "0.6666666666666666");
        assert_eq!(IfsSpec::from_json(&floaty).unwrap(), spec);
        assert_eq!(snap_rational(0.5).unwrap(), r(1, 2));
        assert_eq!(snap_rational(-0.25).unwrap(), r(-1, 4));
    }

    #[test]
    fn nearest_corner_outside_hull() {
        let g = IfsSpec::sierpinski_gasket().build_prefractal(1).unwrap();
        // graph scale is 2: corners at (0,0), (2,0), (1, sqrt 3)
        let v = g.nearest_vertex(&[3.0, -1.0]);
        assert_eq!(g.coords(v), &[2.0, 0.0]);
    }
}
