//! Weighted graphs with a geometric embedding and a distinguished root.
//!
//! A [`WeightedGraph`] is immutable once built. Adjacency is kept in
//! compressed-row form so that transition operators and breadth-first
//! searches run without hashing.

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense vertex index, `0..num_vertices`.
pub type VertexId = usize;

/// One undirected edge with its conductance. Always stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub w: f64,
}

#[derive(Debug, Clone)]
pub struct WeightedGraph {
    coords: Vec<Vec<f64>>,
    exact: Option<Vec<Vec<Rational64>>>,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    targets: Vec<VertexId>,
    weights: Vec<f64>,
    mass: Vec<f64>,
    root: VertexId,
    cells: Option<Vec<Vec<VertexId>>>,
}

/// Invariant measure of the walk: `mass[x] = sum of weights at x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureTable {
    pub mass: Vec<f64>,
}

impl MeasureTable {
    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Measure of a vertex set.
    pub fn of(&self, set: &[VertexId]) -> f64 {
        set.iter().map(|&v| self.mass[v]).sum()
    }
}

impl WeightedGraph {
    /// Builds and validates a graph. Parallel edges are merged by adding
    /// their conductances.
    pub fn new(
        coords: Vec<Vec<f64>>,
        edges: impl IntoIterator<Item = (VertexId, VertexId, f64)>,
        root: VertexId,
    ) -> Result<Self> {
        let n = coords.len();
        if n < 2 {
            return Err(Error::Construction(format!("graph needs at least 2 vertices, got {n}")));
        }
        if root >= n {
            return Err(Error::UnknownVertex(root));
        }
        let mut list: Vec<Edge> = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::UnknownVertex(a.max(b)));
            }
            if a == b {
                return Err(Error::Construction(format!("self-loop at vertex {a}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Construction(format!(
                    "edge {{{a},{b}}} has non-positive weight {w}"
                )));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            list.push(Edge { u, v, w });
        }
        list.sort_by_key(|e| (e.u, e.v));
        let mut edges: Vec<Edge> = Vec::with_capacity(list.len());
        for e in list {
            match edges.last_mut() {
                Some(last) if last.u == e.u && last.v == e.v => last.w += e.w,
                _ => edges.push(e),
            }
        }

        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for x in 0..n {
            offsets[x + 1] = offsets[x] + degree[x];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0; offsets[n]];
        let mut weights = vec![0.0; offsets[n]];
        for e in &edges {
            targets[fill[e.u]] = e.v;
            weights[fill[e.u]] = e.w;
            fill[e.u] += 1;
            targets[fill[e.v]] = e.u;
            weights[fill[e.v]] = e.w;
            fill[e.v] += 1;
        }
        let mass: Vec<f64> = (0..n)
            .map(|x| weights[offsets[x]..offsets[x + 1]].iter().sum())
            .collect();
        if let Some(x) = mass.iter().position(|&m| m <= 0.0) {
            return Err(Error::Construction(format!("vertex {x} is isolated")));
        }

        let g = WeightedGraph {
            coords,
            exact: None,
            edges,
            offsets,
            targets,
            weights,
            mass,
            root,
            cells: None,
        };
        let reach = g.hop_distances(root);
        if let Some(x) = reach.iter().position(|d| d.is_none()) {
            return Err(Error::Connectivity(format!("vertex {x} is unreachable from the root")));
        }
        Ok(g)
    }

    /// Attaches exact (rational) coordinates; one row per vertex.
    pub fn with_exact_coords(mut self, exact: Vec<Vec<Rational64>>) -> Result<Self> {
        if exact.len() != self.num_vertices() {
            return Err(Error::Construction(
                "exact coordinate table has the wrong length".into(),
            ));
        }
        self.exact = Some(exact);
        Ok(self)
    }

    /// Attaches cell annotations: each cell lists the vertices that are the
    /// images of the boundary set, in boundary order.
    pub fn with_cells(mut self, cells: Vec<Vec<VertexId>>) -> Result<Self> {
        for cell in &cells {
            if let Some(&v) = cell.iter().find(|&&v| v >= self.num_vertices()) {
                return Err(Error::UnknownVertex(v));
            }
        }
        self.cells = Some(cells);
        Ok(self)
    }

    /// Same topology and embedding, new conductances (one per edge, in
    /// [`edges`](Self::edges) order).
    pub fn reweighted(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} weights, got {}",
                self.edges.len(),
                weights.len()
            )));
        }
        let edges = self.edges.iter().zip(weights).map(|(e, &w)| (e.u, e.v, w));
        let mut g = WeightedGraph::new(self.coords.clone(), edges, self.root)?;
        g.exact = self.exact.clone();
        g.cells = self.cells.clone();
        Ok(g)
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn coords(&self, v: VertexId) -> &[f64] {
        &self.coords[v]
    }

    pub fn all_coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    pub fn exact_coords(&self) -> Option<&[Vec<Rational64>]> {
        self.exact.as_deref()
    }

    pub fn cells(&self) -> Option<&[Vec<VertexId>]> {
        self.cells.as_deref()
    }

    pub fn dimension(&self) -> usize {
        self.coords.first().map_or(0, Vec::len)
    }

    /// Neighbours of `x` with the connecting conductance.
    pub fn neighbors(&self, x: VertexId) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        let range = self.offsets[x]..self.offsets[x + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    pub fn degree(&self, x: VertexId) -> usize {
        self.offsets[x + 1] - self.offsets[x]
    }

    /// Conductance between `x` and `y`, zero when they are not adjacent.
    pub fn weight(&self, x: VertexId, y: VertexId) -> f64 {
        self.neighbors(x).find(|&(z, _)| z == y).map_or(0.0, |(_, w)| w)
    }

    /// `mu_x`, the total conductance at `x`.
    pub fn mass(&self, x: VertexId) -> f64 {
        self.mass[x]
    }

    pub fn node_measure(&self) -> MeasureTable {
        MeasureTable {
            mass: self.mass.clone(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn check_vertex(&self, x: VertexId) -> Result<()> {
        if x < self.num_vertices() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(x))
        }
    }

    /// `out = P f`, i.e. `out[x] = sum_y P(x,y) f(y)`.
    pub fn apply_transition(&self, f: &[f64], out: &mut [f64]) {
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.offsets[x]..self.offsets[x + 1] {
                acc += self.weights[k] * f[self.targets[k]];
            }
            *o = acc / self.mass[x];
        }
    }

    /// Generator applied to `f`: `(P - I) f`.
    pub fn apply_generator(&self, f: &[f64], out: &mut [f64]) {
        self.apply_transition(f, out);
        for (o, v) in out.iter_mut().zip(f) {
            *o -= v;
        }
    }

    /// Hop distances from `x`; `None` for unreachable vertices.
    pub fn hop_distances(&self, x: VertexId) -> Vec<Option<usize>> {
        self.hop_distances_within(x, usize::MAX)
    }

    /// Breadth-first search from `x` that stops after depth `max_depth`.
    pub fn hop_distances_within(&self, x: VertexId, max_depth: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_vertices()];
        dist[x] = Some(0);
        let mut queue = VecDeque::from([x]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap_or(0);
            if d >= max_depth {
                continue;
            }
            for k in self.offsets[v]..self.offsets[v + 1] {
                let y = self.targets[k];
                if dist[y].is_none() {
                    dist[y] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Shortest-path length in edges, ignoring weights.
    pub fn hop_metric(&self, x: VertexId, y: VertexId) -> Result<usize> {
        self.check_vertex(x)?;
        self.check_vertex(y)?;
        self.hop_distances(x)[y].ok_or_else(|| Error::Connectivity(format!("vertex {y} is unreachable from {x}")))
    }

    /// Open ball `{y : d_G(x,y) < r}` in increasing id order.
    pub fn hop_ball(&self, x: VertexId, r: f64) -> Result<Vec<VertexId>> {
        self.check_vertex(x)?;
        if r <= 0.0 {
            return Ok(Vec::new());
        }
        // largest integer distance strictly below r
        let depth = (r.ceil() as usize).saturating_sub(1);
        Ok(self
            .hop_distances_within(x, depth)
            .iter()
            .enumerate()
            .filter_map(|(y, d)| d.filter(|&d| (d as f64) < r).map(|_| y))
            .collect())
    }

    pub fn euclidean(&self, x: VertexId, y: VertexId) -> f64 {
        euclidean(&self.coords[x], &self.coords[y])
    }

    /// Vertex minimizing the embedding distance to `p`. Ties go to the
    /// lexicographically smallest coordinate vector, then the smallest id.
    pub fn nearest_vertex(&self, p: &[f64]) -> VertexId {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (v, c) in self.coords.iter().enumerate() {
            let d = euclidean(c, p);
            let better = match d.partial_cmp(&best_d) {
                Some(Ordering::Less) => true,
                Some(Ordering::Equal) => lex_cmp(c, &self.coords[best]) == Ordering::Less,
                _ => false,
            };
            if better {
                best = v;
                best_d = d;
            }
        }
        best
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&GraphFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(s)?;
        file.try_into()
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Bucket grid over the vertex embedding for repeated nearest-vertex
/// queries. Answers agree with [`WeightedGraph::nearest_vertex`],
/// including its tie rule.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    cell: f64,
    lo: Vec<f64>,
    span: Vec<i64>,
    buckets: HashMap<Vec<i64>, Vec<VertexId>>,
    coords: Vec<Vec<f64>>,
}

impl SpatialIndex {
    pub fn new(g: &WeightedGraph) -> Self {
        let d = g.dimension();
        let n = g.num_vertices();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for c in g.all_coords() {
            for i in 0..d {
                lo[i] = lo[i].min(c[i]);
                hi[i] = hi[i].max(c[i]);
            }
        }
        let extent: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| (b - a).max(1e-9)).collect();
        let volume: f64 = extent.iter().product();
        let cell = (volume / n as f64).powf(1.0 / d.max(1) as f64).max(1e-9);
        let key = |c: &[f64]| -> Vec<i64> {
            c.iter()
                .zip(&lo)
                .map(|(x, l)| ((x - l) / cell).floor() as i64)
                .collect()
        };
        let mut buckets: HashMap<Vec<i64>, Vec<VertexId>> = HashMap::new();
        for (v, c) in g.all_coords().iter().enumerate() {
            buckets.entry(key(c)).or_default().push(v);
        }
        let span = extent.iter().map(|e| (e / cell).floor() as i64).collect();
        SpatialIndex {
            cell,
            lo,
            span,
            buckets,
            coords: g.all_coords().to_vec(),
        }
    }

    pub fn nearest(&self, p: &[f64]) -> VertexId {
        let d = self.lo.len();
        let home: Vec<i64> = p
            .iter()
            .zip(&self.lo)
            .map(|(x, l)| ((x - l) / self.cell).floor() as i64)
            .collect();
        // first ring that can meet the occupied box
        let start = (0..d)
            .map(|i| (-home[i]).max(home[i] - self.span[i]).max(0))
            .max()
            .unwrap_or(0);
        let last = (0..d)
            .map(|i| home[i].abs().max((home[i] - self.span[i]).abs()))
            .max()
            .unwrap_or(0)
            + 1;
        let mut best: Option<(f64, VertexId)> = None;
        let mut offset = vec![0i64; d];
        for k in start..=last {
            if let Some((bd, _)) = best {
                // cells in ring k are at least (k - 1) cells away
                if bd < (k - 1) as f64 * self.cell {
                    break;
                }
            }
            visit_ring(&mut offset, 0, k, false, &mut |off: &[i64]| {
                let key: Vec<i64> = home.iter().zip(off).map(|(h, o)| h + o).collect();
                if let Some(vs) = self.buckets.get(&key) {
                    for &v in vs {
                        let dist = euclidean(&self.coords[v], p);
                        let better = match best {
                            None => true,
                            Some((bd, bv)) => match dist.partial_cmp(&bd) {
                                Some(Ordering::Less) => true,
                                Some(Ordering::Equal) => match lex_cmp(&self.coords[v], &self.coords[bv]) {
                                    Ordering::Less => true,
                                    Ordering::Equal => v < bv,
                                    Ordering::Greater => false,
                                },
                                _ => false,
                            },
                        };
                        if better {
                            best = Some((dist, v));
                        }
                    }
                }
            });
        }
        best.map_or(0, |(_, v)| v)
    }
}

/// Calls `f` on every offset in `[-k, k]^d` with max-norm exactly `k`.
fn visit_ring(offset: &mut [i64], i: usize, k: i64, on_shell: bool, f: &mut impl FnMut(&[i64])) {
    if i == offset.len() {
        if on_shell || k == 0 {
            f(offset);
        }
        return;
    }
    for o in -k..=k {
        offset[i] = o;
        visit_ring(offset, i + 1, k, on_shell || o.abs() == k, f);
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

#[derive(Debug, Serialize, Deserialize)]
struct VertexRecord {
    id: VertexId,
    coords: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exact: Option<Vec<String>>,
}

/// On-disk graph layout: `{vertices:[{id,coords}], edges:[{u,v,w}], root}`.
#[derive(Debug, Serialize, Deserialize)]
struct GraphFile {
    vertices: Vec<VertexRecord>,
    edges: Vec<Edge>,
    root: VertexId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cells: Option<Vec<Vec<VertexId>>>,
}

impl From<&WeightedGraph> for GraphFile {
    fn from(g: &WeightedGraph) -> Self {
        let vertices = (0..g.num_vertices())
            .map(|v| VertexRecord {
                id: v,
                coords: g.coords[v].clone(),
                exact: g.exact.as_ref().map(|e| e[v].iter().map(|q| q.to_string()).collect()),
            })
            .collect();
        GraphFile {
            vertices,
            edges: g.edges.clone(),
            root: g.root,
            cells: g.cells.clone(),
        }
    }
}

impl TryFrom<GraphFile> for WeightedGraph {
    type Error = Error;

    fn try_from(mut file: GraphFile) -> Result<Self> {
        file.vertices.sort_by_key(|v| v.id);
        if file.vertices.iter().enumerate().any(|(i, v)| v.id != i) {
            return Err(Error::Construction("vertex ids must be dense 0..n".into()));
        }
        let exact: Option<Vec<Vec<Rational64>>> = if file.vertices.iter().all(|v| v.exact.is_some()) {
            let rows = file
                .vertices
                .iter()
                .map(|v| {
                    v.exact
                        .as_ref()
                        .unwrap_or(&Vec::new())
                        .iter()
                        .map(|s| parse_rational(s))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Some(rows)
        } else {
            None
        };
        let coords = file.vertices.into_iter().map(|v| v.coords).collect();
        let mut g = WeightedGraph::new(coords, file.edges.into_iter().map(|e| (e.u, e.v, e.w)), file.root)?;
        if let Some(exact) = exact {
            g = g.with_exact_coords(exact)?;
        }
        if let Some(cells) = file.cells {
            g = g.with_cells(cells)?;
        }
        Ok(g)
    }
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_rational(s: &str) -> Result<Rational64> {
    s.trim()
        .parse::<Rational64>()
        .map_err(|e| Error::Serialization(format!("bad rational {s:?}: {e}")))
}
