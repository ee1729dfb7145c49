//! Correspondence distance between finite pointed metric spaces carrying
//! heat-kernel curves.
//!
//! For a correspondence `C` containing the root pair,
//! `delta(C) = dis(C) + max_{(x,y) in C, t} |q_t(x) - q'_t(y)|`, and the
//! distance is the minimum of `delta` over such `C`. Shrinking `C` never
//! increases `delta`, so it suffices to search the minimal covers
//! `{(x, f(x))} ∪ {(g(y), y)}` with `f(root) = root'` and `g(root') = root`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::sample_uniform_tree;
use crate::kernels::smoothed_at;

/// Largest `|a| * |b|` accepted by the exact solver.
pub const EXACT_CAP: usize = 36;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointedKernelSpace {
    #[serde(default)]
    pub points: Vec<String>,
    pub metric: Vec<Vec<f64>>,
    pub root: usize,
    pub t_grid: Vec<f64>,
    /// `curves[x][i]` is `q_{t_i}(x)`.
    pub curves: Vec<Vec<f64>>,
}

pub type Correspondence = Vec<(usize, usize)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaResult {
    pub value: f64,
    pub witness: Correspondence,
}

impl PointedKernelSpace {
    pub fn new(metric: Vec<Vec<f64>>, root: usize, t_grid: Vec<f64>, curves: Vec<Vec<f64>>) -> Result<Self> {
        let s = PointedKernelSpace {
            points: Vec::new(),
            metric,
            root,
            t_grid,
            curves,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let space: PointedKernelSpace = serde_json::from_str(s)?;
        space.validate()?;
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.metric.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metric.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if n == 0 || self.root >= n {
            return bad(format!("root {} outside {n} points", self.root));
        }
        if !self.points.is_empty() && self.points.len() != n {
            return bad(format!("{} labels for {n} points", self.points.len()));
        }
        if self.metric.iter().any(|r| r.len() != n) {
            return bad("metric must be square".into());
        }
        for i in 0..n {
            if self.metric[i][i] != 0.0 {
                return bad(format!("d({i},{i}) is not 0"));
            }
            for j in 0..n {
                let d = self.metric[i][j];
                if !(d.is_finite() && d >= 0.0) || (i != j && d == 0.0) {
                    return bad(format!("d({i},{j}) = {d} is not a positive distance"));
                }
                if d != self.metric[j][i] {
                    return bad(format!("metric is not symmetric at ({i},{j})"));
                }
                for k in 0..n {
                    if d > self.metric[i][k] + self.metric[k][j] + 1e-12 * d.max(1.0) {
                        return bad(format!("triangle inequality fails at ({i},{k},{j})"));
                    }
                }
            }
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !(*t > 0.0)) {
            return bad("t-grid must be nonempty and inside (0, inf)".into());
        }
        if self.curves.len() != n || self.curves.iter().any(|c| c.len() != self.t_grid.len()) {
            return bad("need one curve value per point and grid time".into());
        }
        Ok(())
    }
}

fn check_pair(a: &PointedKernelSpace, b: &PointedKernelSpace) -> Result<()> {
    a.validate()?;
    b.validate()?;
    if a.t_grid != b.t_grid {
        return Err(Error::InvalidArgument("spaces use different t-grids".into()));
    }
    Ok(())
}

/// `max |d_a(x1, x2) - d_b(y1, y2)|` over pairs of pairs; 0 when empty.
pub fn distortion(a: &PointedKernelSpace, b: &PointedKernelSpace, corr: &[(usize, usize)]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, &(x1, y1)) in corr.iter().enumerate() {
        for &(x2, y2) in &corr[i + 1..] {
            worst = worst.max((a.metric[x1][x2] - b.metric[y1][y2]).abs());
        }
    }
    worst
}

fn curve_gap(a: &PointedKernelSpace, b: &PointedKernelSpace, x: usize, y: usize) -> f64 {
    a.curves[x]
        .iter()
        .zip(&b.curves[y])
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

fn is_correspondence(a: &PointedKernelSpace, b: &PointedKernelSpace, corr: &[(usize, usize)]) -> bool {
    let mut left = vec![false; a.len()];
    let mut right = vec![false; b.len()];
    for &(x, y) in corr {
        if x >= a.len() || y >= b.len() {
            return false;
        }
        left[x] = true;
        right[y] = true;
    }
    corr.contains(&(a.root, b.root)) && left.into_iter().all(|s| s) && right.into_iter().all(|s| s)
}

/// `delta_I(C)` for a root-respecting correspondence.
pub fn delta_of(a: &PointedKernelSpace, b: &PointedKernelSpace, corr: &[(usize, usize)]) -> Result<f64> {
    check_pair(a, b)?;
    if !is_correspondence(a, b, corr) {
        return Err(Error::InvalidArgument(
            "pairs do not cover both spaces or miss the root pair".into(),
        ));
    }
    let gap = corr.iter().map(|&(x, y)| curve_gap(a, b, x, y)).fold(0.0, f64::max);
    Ok(distortion(a, b, corr) + gap)
}

/// Incremental search state: pairs chosen so far with their running
/// distortion and curve gap.
struct Search<'a> {
    a: &'a PointedKernelSpace,
    b: &'a PointedKernelSpace,
    gaps: Vec<Vec<f64>>,
    pairs: Vec<(usize, usize)>,
    best: f64,
    witness: Correspondence,
}

impl Search<'_> {
    fn cost_with(&self, x: usize, y: usize, dis: f64, gap: f64) -> (f64, f64) {
        let mut d = dis;
        for &(x2, y2) in &self.pairs {
            d = d.max((self.a.metric[x][x2] - self.b.metric[y][y2]).abs());
        }
        (d, gap.max(self.gaps[x][y]))
    }

    /// Slots `0..|a|` choose `f(x)`, the rest choose `g(y)`; the roots are
    /// already paired.
    fn recurse(&mut self, slots: &[(bool, usize)], k: usize, dis: f64, gap: f64) {
        if dis + gap >= self.best {
            return;
        }
        if k == slots.len() {
            self.best = dis + gap;
            self.witness = self.pairs.clone();
            return;
        }
        let (left, p) = slots[k];
        let options = if left { self.b.len() } else { self.a.len() };
        let mut moves: Vec<(f64, f64, usize)> = (0..options)
            .map(|o| {
                let (x, y) = if left { (p, o) } else { (o, p) };
                let (d, g) = self.cost_with(x, y, dis, gap);
                (d, g, o)
            })
            .collect();
        moves.sort_by(|u, v| (u.0 + u.1).total_cmp(&(v.0 + v.1)));
        for (d, g, o) in moves {
            let pair = if left { (p, o) } else { (o, p) };
            self.pairs.push(pair);
            self.recurse(slots, k + 1, d, g);
            self.pairs.pop();
        }
    }
}

fn gap_table(a: &PointedKernelSpace, b: &PointedKernelSpace) -> Vec<Vec<f64>> {
    (0..a.len())
        .map(|x| (0..b.len()).map(|y| curve_gap(a, b, x, y)).collect())
        .collect()
}

fn exact(a: &PointedKernelSpace, b: &PointedKernelSpace) -> Result<DeltaResult> {
    if a.len() * b.len() > EXACT_CAP {
        return Err(Error::Capacity(format!(
            "exact search needs |a| * |b| <= {EXACT_CAP}, got {} * {}",
            a.len(),
            b.len()
        )));
    }
    // seed the bound with the heuristic so pruning starts tight
    let start = heuristic(a, b);
    let mut slots: Vec<(bool, usize)> = (0..a.len()).filter(|&x| x != a.root).map(|x| (true, x)).collect();
    slots.extend((0..b.len()).filter(|&y| y != b.root).map(|y| (false, y)));
    let mut s = Search {
        a,
        b,
        gaps: gap_table(a, b),
        pairs: vec![(a.root, b.root)],
        best: start.value * (1.0 + 1e-12) + f64::MIN_POSITIVE,
        witness: start.witness.clone(),
    };
    let g0 = s.gaps[a.root][b.root];
    s.recurse(&slots, 0, 0.0, g0);
    let mut witness = s.witness;
    witness.sort_unstable();
    witness.dedup();
    let value = delta_of(a, b, &witness)?;
    Ok(DeltaResult {
        value: value.min(start.value),
        witness: if value <= start.value { witness } else { start.witness },
    })
}

fn cover(a: &PointedKernelSpace, b: &PointedKernelSpace, f: &[usize], g: &[usize]) -> Correspondence {
    let mut c: Correspondence = f.iter().enumerate().map(|(x, &y)| (x, y)).collect();
    c.extend(g.iter().enumerate().map(|(y, &x)| (x, y)));
    c.push((a.root, b.root));
    c.sort_unstable();
    c.dedup();
    c
}

/// `(delta, total)` where `total` sums every pair-of-pairs term and curve
/// gap; the sum breaks ties on the plateaus of the max.
fn score(a: &PointedKernelSpace, b: &PointedKernelSpace, gaps: &[Vec<f64>], f: &[usize], g: &[usize]) -> (f64, f64) {
    let c = cover(a, b, f, g);
    let (mut dis, mut gap, mut total) = (0.0f64, 0.0f64, 0.0);
    for (i, &(x1, y1)) in c.iter().enumerate() {
        gap = gap.max(gaps[x1][y1]);
        total += gaps[x1][y1];
        for &(x2, y2) in &c[i + 1..] {
            let e = (a.metric[x1][x2] - b.metric[y1][y2]).abs();
            dis = dis.max(e);
            total += e;
        }
    }
    (dis + gap, total)
}

fn better(s: (f64, f64), t: (f64, f64)) -> bool {
    s.0 < t.0 || (s.0 == t.0 && s.1 < t.1 - 1e-15 * t.1.abs())
}

fn greedy(
    a: &PointedKernelSpace,
    b: &PointedKernelSpace,
    gaps: &[Vec<f64>],
    seed: Option<(usize, usize)>,
) -> (Vec<usize>, Vec<usize>) {
    let mut pairs = vec![(a.root, b.root)];
    let mut f = vec![b.root; a.len()];
    let mut g = vec![a.root; b.len()];
    if let Some((x, y)) = seed {
        f[x] = y;
        pairs.push((x, y));
    }
    let add_cost = |pairs: &[(usize, usize)], x: usize, y: usize| -> f64 {
        let d = pairs
            .iter()
            .map(|&(x2, y2)| (a.metric[x][x2] - b.metric[y][y2]).abs())
            .fold(0.0, f64::max);
        d + gaps[x][y]
    };
    for x in (0..a.len()).filter(|&x| x != a.root && seed.is_none_or(|s| s.0 != x)) {
        let y = (0..b.len())
            .min_by(|&u, &v| add_cost(&pairs, x, u).total_cmp(&add_cost(&pairs, x, v)))
            .unwrap_or(b.root);
        f[x] = y;
        pairs.push((x, y));
    }
    for y in (0..b.len()).filter(|&y| y != b.root) {
        let x = (0..a.len())
            .min_by(|&u, &v| add_cost(&pairs, u, y).total_cmp(&add_cost(&pairs, v, y)))
            .unwrap_or(a.root);
        g[y] = x;
        pairs.push((x, y));
    }
    (f, g)
}

/// Score and maps of one local-search result.
type Candidate = ((f64, f64), Vec<usize>, Vec<usize>);

/// Tries `candidate`, keeping it when it beats `best`; otherwise reverts.
#[allow(clippy::too_many_arguments)]
fn try_move(
    a: &PointedKernelSpace,
    b: &PointedKernelSpace,
    gaps: &[Vec<f64>],
    f: &mut [usize],
    g: &mut [usize],
    best: &mut (f64, f64),
    apply: impl Fn(&mut [usize], &mut [usize]),
    undo: impl Fn(&mut [usize], &mut [usize]),
) -> bool {
    apply(f, g);
    let s = score(a, b, gaps, f, g);
    if better(s, *best) {
        *best = s;
        true
    } else {
        undo(f, g);
        false
    }
}

fn local_search(
    a: &PointedKernelSpace,
    b: &PointedKernelSpace,
    gaps: &[Vec<f64>],
    f: &mut [usize],
    g: &mut [usize],
) -> (f64, f64) {
    let mut best = score(a, b, gaps, f, g);
    loop {
        let mut improved = false;
        for x in (0..a.len()).filter(|&x| x != a.root) {
            for y in 0..b.len() {
                let old = f[x];
                improved |= try_move(a, b, gaps, f, g, &mut best, |f, _| f[x] = y, |f, _| f[x] = old);
            }
        }
        for y in (0..b.len()).filter(|&y| y != b.root) {
            for x in 0..a.len() {
                let old = g[y];
                improved |= try_move(a, b, gaps, f, g, &mut best, |_, g| g[y] = x, |_, g| g[y] = old);
            }
        }
        for x1 in (0..a.len()).filter(|&x| x != a.root) {
            for x2 in (x1 + 1..a.len()).filter(|&x| x != a.root) {
                let swap = |f: &mut [usize], _: &mut [usize]| f.swap(x1, x2);
                improved |= try_move(a, b, gaps, f, g, &mut best, swap, swap);
            }
        }
        for y1 in (0..b.len()).filter(|&y| y != b.root) {
            for y2 in (y1 + 1..b.len()).filter(|&y| y != b.root) {
                let swap = |_: &mut [usize], g: &mut [usize]| g.swap(y1, y2);
                improved |= try_move(a, b, gaps, f, g, &mut best, swap, swap);
            }
        }
        if !improved {
            return best;
        }
    }
}

/// Number of perturbation rounds applied to the best local optimum.
const KICKS: usize = 60;

/// Greedy covers, one per choice of partner for each non-root point, each
/// refined by single reassignments and pairwise swaps until no move
/// improves; the best optimum is then kicked by random reassignments and
/// re-refined. Deterministic for given inputs.
fn heuristic(a: &PointedKernelSpace, b: &PointedKernelSpace) -> DeltaResult {
    use rand::{Rng, SeedableRng};
    let gaps = gap_table(a, b);
    let mut seeds: Vec<Option<(usize, usize)>> = vec![None];
    for x in (0..a.len()).filter(|&x| x != a.root) {
        seeds.extend((0..b.len()).map(|y| Some((x, y))));
    }
    let mut best: Option<Candidate> = None;
    for seed in seeds {
        let (mut f, mut g) = greedy(a, b, &gaps, seed);
        let s = local_search(a, b, &gaps, &mut f, &mut g);
        if best.as_ref().is_none_or(|(t, _, _)| better(s, *t)) {
            best = Some((s, f, g));
        }
    }
    let (mut s, mut f, mut g) = best.expect("at least one start");
    let slots = a.len() + b.len() - 2;
    if slots > 1 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..KICKS {
            let (mut f2, mut g2) = (f.clone(), g.clone());
            for _ in 0..2 {
                let x = rng.random_range(0..a.len());
                let y = rng.random_range(0..b.len());
                if rng.random_bool(0.5) && x != a.root {
                    f2[x] = y;
                } else if y != b.root {
                    g2[y] = x;
                }
            }
            let s2 = local_search(a, b, &gaps, &mut f2, &mut g2);
            if better(s2, s) {
                (s, f, g) = (s2, f2, g2);
            }
        }
    }
    DeltaResult {
        value: s.0,
        witness: cover(a, b, &f, &g),
    }
}

pub fn delta_distance(a: &PointedKernelSpace, b: &PointedKernelSpace, mode: Mode) -> Result<DeltaResult> {
    check_pair(a, b)?;
    match mode {
        Mode::Exact => exact(a, b),
        Mode::Heuristic => Ok(heuristic(a, b)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub triples: usize,
    pub max_asymmetry: f64,
    pub max_self_distance: f64,
    pub triangle_violations: usize,
    /// Largest `d(a,c) - d(a,b) - d(b,c)` seen; negative when all hold.
    pub worst_triangle_excess: f64,
}

/// Symmetry, identity and triangle checks of the exact distance on
/// `(a, b, c)` triples.
pub fn metric_axiom_suite(
    triples: &[(PointedKernelSpace, PointedKernelSpace, PointedKernelSpace)],
    tol: f64,
) -> Result<AxiomReport> {
    let rows: Vec<(f64, f64, f64)> = triples
        .par_iter()
        .map(|(a, b, c)| {
            let d = |x: &PointedKernelSpace, y: &PointedKernelSpace| delta_distance(x, y, Mode::Exact).map(|r| r.value);
            let (ab, ba, bc, ac) = (d(a, b)?, d(b, a)?, d(b, c)?, d(a, c)?);
            let selfd = d(a, a)?.max(d(b, b)?).max(d(c, c)?);
            Ok(((ab - ba).abs(), selfd, ac - ab - bc))
        })
        .collect::<Result<_>>()?;
    Ok(AxiomReport {
        triples: rows.len(),
        max_asymmetry: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        max_self_distance: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        triangle_violations: rows.iter().filter(|r| r.2 > tol).count(),
        worst_triangle_excess: rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Random instance: `n` points in the unit square with Euclidean distances,
/// root 0, and curves drawn uniformly from `[0, 1)`.
pub fn random_space(n: usize, t_grid: &[f64], seed: u64) -> Result<PointedKernelSpace> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
    let metric = (0..n)
        .map(|i| (0..n).map(|j| crate::graph::euclidean(&pts[i], &pts[j])).collect())
        .collect();
    let curves = (0..n).map(|_| t_grid.iter().map(|_| rng.random()).collect()).collect();
    PointedKernelSpace::new(metric, 0, t_grid.to_vec(), curves)
}

/// A uniform tree on `n` vertices seen through `k` of its vertices (the
/// root and vertices spread along the contour), with metric `d / sqrt(n)`
/// and curves `2n q_{n^(3/2) t}(root, x)`, interpolated linearly in time.
pub fn tree_space(n: usize, seed: u64, k: usize, t_grid: &[f64]) -> Result<PointedKernelSpace> {
    let tree = sample_uniform_tree(n, seed)?;
    let g = tree.to_graph()?;
    let fractions: Vec<f64> = (0..k).map(|i| i as f64 / k as f64).collect();
    let mut chosen = crate::llt::contour_points(&tree, &fractions);
    chosen.sort_unstable();
    chosen.dedup();
    if let Some(p) = chosen.iter().position(|&v| v == tree.root()) {
        chosen.swap(0, p);
    }
    let scale = (n as f64).sqrt();
    let metric = chosen
        .iter()
        .map(|&x| chosen.iter().map(|&y| tree.distance(x, y) as f64 / scale).collect())
        .collect();
    let gamma = (n as f64).powf(1.5);
    let mut steps: Vec<usize> = t_grid
        .iter()
        .flat_map(|&t| {
            let s = (gamma * t).floor() as usize;
            [s, s + 1]
        })
        .collect();
    steps.sort_unstable();
    steps.dedup();
    let q = smoothed_at(&g, g.root(), &steps)?;
    let curves = chosen
        .iter()
        .map(|&x| {
            t_grid
                .iter()
                .map(|&t| {
                    let s = gamma * t;
                    let m = s.floor() as usize;
                    let w = s - m as f64;
                    let lo = q.row(m).map_or(0.0, |r| r[x]);
                    let hi = q.row(m + 1).map_or(0.0, |r| r[x]);
                    2.0 * n as f64 * ((1.0 - w) * lo + w * hi)
                })
                .collect()
        })
        .collect();
    PointedKernelSpace::new(metric, 0, t_grid.to_vec(), curves)
}
