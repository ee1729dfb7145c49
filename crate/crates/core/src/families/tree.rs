//! Rooted ordered trees and their contour (search-depth) encoding.
//!
//! Convention: a tree on `n` vertices has a contour walk `c(0..=2n-2)`
//! that starts at the root, crosses every edge once down and once up, and
//! ends at the root. The excursion has `2n + 1` samples,
//! `w = (0, c(0), ..., c(2n-2), 0)`, i.e. the contour occupies indices
//! `1..=2n-1` and the root pads both ends.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderedTree {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excursion {
    pub samples: Vec<f64>,
}

impl OrderedTree {
    /// Single-vertex tree.
    pub fn singleton() -> Self {
        OrderedTree {
            parent: vec![None],
            children: vec![Vec::new()],
            root: 0,
        }
    }

    /// Orients an undirected adjacency list from `root`; children keep the
    /// order of the adjacency lists.
    pub fn from_adjacency(adj: &[Vec<usize>], root: usize) -> Result<Self> {
        let n = adj.len();
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut stack = vec![root];
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &c in &adj[v] {
                if Some(c) == parent[v] {
                    continue;
                }
                if seen[c] {
                    return Err(Error::NotTreeLike(format!("cycle through {v} and {c}")));
                }
                seen[c] = true;
                count += 1;
                parent[c] = Some(v);
                children[v].push(c);
                stack.push(c);
            }
        }
        if count != n {
            return Err(Error::NotTreeLike("adjacency is disconnected".into()));
        }
        Ok(OrderedTree { parent, children, root })
    }

    pub fn num_vertices(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Parent followed by children.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.parent[v].into_iter().chain(self.children[v].iter().copied())
    }

    pub fn depth(&self, mut v: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.parent[v] {
            v = p;
            d += 1;
        }
        d
    }

    pub fn height(&self) -> usize {
        (0..self.num_vertices()).map(|v| self.depth(v)).max().unwrap_or(0)
    }

    /// Graph distance via the lowest common ancestor.
    pub fn distance(&self, mut a: usize, mut b: usize) -> usize {
        let (mut da, mut db) = (self.depth(a), self.depth(b));
        let mut d = 0;
        while da > db {
            a = self.parent[a].unwrap_or(a);
            da -= 1;
            d += 1;
        }
        while db > da {
            b = self.parent[b].unwrap_or(b);
            db -= 1;
            d += 1;
        }
        while a != b {
            a = self.parent[a].unwrap_or(a);
            b = self.parent[b].unwrap_or(b);
            d += 2;
        }
        d
    }

    /// Contour walk as a vertex sequence of length `2n - 1`.
    pub fn contour(&self) -> Vec<usize> {
        let mut walk = vec![self.root];
        let mut stack: Vec<(usize, usize)> = vec![(self.root, 0)];
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < self.children[v].len() {
                let c = self.children[v][*next];
                *next += 1;
                walk.push(c);
                stack.push((c, 0));
            } else {
                stack.pop();
                if let Some(&(p, _)) = stack.last() {
                    walk.push(p);
                }
            }
        }
        walk
    }

    /// Excursion index (in `0..=2n`) at which each vertex is first visited.
    pub fn first_visit_times(&self) -> Vec<usize> {
        let mut first = vec![usize::MAX; self.num_vertices()];
        for (i, v) in self.contour().into_iter().enumerate() {
            if first[v] == usize::MAX {
                first[v] = i + 1;
            }
        }
        first
    }

    /// Unit-weight graph on the tree. Vertex `v` is embedded at
    /// `(first visit time, depth)`.
    pub fn to_graph(&self) -> Result<WeightedGraph> {
        let first = self.first_visit_times();
        let coords = (0..self.num_vertices())
            .map(|v| vec![first[v] as f64, self.depth(v) as f64])
            .collect();
        let edges = (0..self.num_vertices()).filter_map(|v| self.parent[v].map(|p| (p, v, 1.0)));
        WeightedGraph::new(coords, edges, self.root)
    }
}

/// Encodes a tree by its padded contour depths.
pub fn excursion_from_tree(t: &OrderedTree) -> Excursion {
    let mut depth = vec![0usize; t.num_vertices()];
    let contour = t.contour();
    for &v in &contour {
        if let Some(p) = t.parent(v) {
            depth[v] = depth[p] + 1;
        }
    }
    let mut samples = Vec::with_capacity(contour.len() + 2);
    samples.push(0.0);
    samples.extend(contour.iter().map(|&v| depth[v] as f64));
    samples.push(0.0);
    Excursion { samples }
}

/// Decodes a padded lattice excursion. Vertices are numbered in order of
/// first visit, so the root is 0.
pub fn tree_from_excursion(e: &Excursion) -> Result<OrderedTree> {
    let w = &e.samples;
    let len = w.len();
    if len < 3 || len.is_multiple_of(2) {
        return Err(Error::MalformedExcursion(format!("expected 2n + 1 samples, got {len}")));
    }
    if let Some(i) = w.iter().position(|&x| x < 0.0 || x.fract() != 0.0 || !x.is_finite()) {
        return Err(Error::MalformedExcursion(format!(
            "sample {i} = {} is not a nonnegative integer",
            w[i]
        )));
    }
    if w[0] != 0.0 || w[1] != 0.0 || w[len - 2] != 0.0 || w[len - 1] != 0.0 {
        return Err(Error::MalformedExcursion(
            "padding samples at both ends must be 0".into(),
        ));
    }
    let mut parent = vec![None];
    let mut children = vec![Vec::new()];
    let mut current = 0usize;
    for i in 1..len - 2 {
        let step = w[i + 1] - w[i];
        if step == 1.0 {
            let c = parent.len();
            parent.push(Some(current));
            children.push(Vec::new());
            children[current].push(c);
            current = c;
        } else if step == -1.0 {
            current = parent[current]
                .ok_or_else(|| Error::MalformedExcursion(format!("excursion goes below 0 at {}", i + 1)))?;
        } else {
            return Err(Error::MalformedExcursion(format!("non-unit step {step} at index {i}")));
        }
    }
    Ok(OrderedTree {
        parent,
        children,
        root: 0,
    })
}

/// `w(s) + w(t) - 2 min_{[s,t]} w`.
pub fn excursion_distance(e: &Excursion, s: usize, t: usize) -> f64 {
    let (a, b) = if s <= t { (s, t) } else { (t, s) };
    let m = e.samples[a..=b].iter().copied().fold(f64::INFINITY, f64::min);
    e.samples[s] + e.samples[t] - 2.0 * m
}

/// Uniform random ordered tree on `n` vertices. A uniform arrangement of
/// `n - 1` up-steps and `n` down-steps has exactly one cyclic rotation
/// that stays nonnegative until its final step; dropping that step
/// leaves a uniform Dyck path.
pub fn sample_uniform_tree(n: usize, seed: u64) -> Result<OrderedTree> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("tree size must be >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps: Vec<i64> = std::iter::repeat_n(1, n - 1)
        .chain(std::iter::repeat_n(-1, n))
        .collect();
    steps.shuffle(&mut rng);
    // rotation starts right after the first position of the minimum
    let mut sum = 0i64;
    let mut min = 0i64;
    let mut arg = 0usize;
    for (i, s) in steps.iter().enumerate() {
        sum += s;
        if sum < min {
            min = sum;
            arg = i + 1;
        }
    }
    let len = steps.len();
    steps.rotate_left(arg % len);
    let mut samples = vec![0.0, 0.0];
    let mut h = 0i64;
    for s in &steps[..steps.len() - 1] {
        h += s;
        samples.push(h as f64);
    }
    samples.push(0.0);
    tree_from_excursion(&Excursion { samples })
}
