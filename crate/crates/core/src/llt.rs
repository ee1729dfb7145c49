//! Scaling limits of heat kernels: space, measure and time scalings per
//! family, rescaled kernels `beta(n) q_floor(gamma(n) t)(g_n(x))`, and the
//! diagnostics that accompany a local limit theorem.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{sample_uniform_tree, OrderedTree};
use crate::graph::{euclidean, SpatialIndex, VertexId, WeightedGraph};
use crate::kernels::{mean_exit_time, smoothed_at};
use crate::stats::{ks_two_sample, linear_fit, LinearFit};

/// Upper bound on `steps * edges` for a single kernel evaluation.
pub const WORK_LIMIT: f64 = 2e10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ScalingFamily {
    /// `Z^d` with unit conductances; the level is the time scale `n`.
    Lattice { dim: usize },
    /// Uniform ordered trees on `n` vertices.
    Tree,
    /// Nested fractal with `N` branches, similitude ratio `1/L`, distance
    /// scale `alpha` and conductance scale `lambda`.
    Nested {
        branches: usize,
        ratio: f64,
        alpha: f64,
        lambda: Option<f64>,
        boundary: usize,
    },
    /// Generalised carpet with side `L` and walk dimension `d_w`.
    Carpet {
        dim: usize,
        branches: usize,
        side: f64,
        walk_dimension: Option<f64>,
    },
}

impl ScalingFamily {
    pub fn gasket() -> Self {
        ScalingFamily::Nested {
            branches: 3,
            ratio: 2.0,
            alpha: 2.0,
            lambda: Some(5.0 / 3.0),
            boundary: 3,
        }
    }

    pub fn vicsek() -> Self {
        ScalingFamily::Nested {
            branches: 5,
            ratio: 3.0,
            alpha: 3.0,
            lambda: Some(3.0),
            boundary: 4,
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            ScalingFamily::Lattice { .. } => "lattice",
            ScalingFamily::Tree => "tree",
            ScalingFamily::Nested { .. } => "nested",
            ScalingFamily::Carpet { .. } => "carpet",
        }
    }
}

/// `(alpha(n), beta(n), gamma(n))` at one level, with the embedding scale
/// used to project limit-space points onto vertices.
///
/// Constants: for lattices `c1` is the per-coordinate variance of the
/// limit and `beta = c2 n^(d/2)`; for trees `beta = c1 n`, `gamma = c2
/// n^(3/2)`; for fractals `beta = c1 N^n` and `gamma = c2 (N lambda)^n` or
/// `c2 L^(d_w n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTriple {
    pub family: String,
    pub level: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub embed: f64,
    pub c1: f64,
    pub c2: f64,
}

pub fn scaling_for(family: &ScalingFamily, level: f64, constants: Option<(f64, f64)>) -> Result<ScalingTriple> {
    if !(level > 0.0) {
        return Err(Error::InvalidArgument(format!("level must be positive, got {level}")));
    }
    let n = level;
    let pick = |defaults: (f64, f64)| constants.unwrap_or(defaults);
    let (alpha, beta, gamma, embed, (c1, c2)) = match *family {
        ScalingFamily::Lattice { dim } => {
            if dim == 0 {
                return Err(Error::InvalidArgument("lattice dimension must be >= 1".into()));
            }
            let d = dim as f64;
            let (c1, c2) = pick((1.0 / d, 2.0 * d));
            (n.sqrt(), c2 * n.powf(d / 2.0), n, n.sqrt(), (c1, c2))
        }
        ScalingFamily::Tree => {
            let (c1, c2) = pick((2.0, 1.0));
            (n.sqrt(), c1 * n, c2 * n.powf(1.5), n.sqrt(), (c1, c2))
        }
        ScalingFamily::Nested {
            branches,
            ratio,
            alpha,
            lambda,
            boundary,
        } => {
            let lambda = lambda
                .ok_or_else(|| Error::InvalidArgument("nested scaling needs the conductance factor lambda".into()))?;
            let nb = branches as f64;
            let mass = (boundary * boundary.saturating_sub(1)) as f64;
            let (c1, c2) = pick((mass, mass));
            (
                alpha.powf(n),
                c1 * nb.powf(n),
                c2 * (nb * lambda).powf(n),
                ratio.powf(n),
                (c1, c2),
            )
        }
        ScalingFamily::Carpet {
            dim,
            branches,
            side,
            walk_dimension,
        } => {
            let dw = walk_dimension
                .ok_or_else(|| Error::InvalidArgument("carpet scaling needs the walk dimension d_w".into()))?;
            let (c1, c2) = pick((2.0 * dim as f64, 1.0));
            (
                side.powf(n),
                c1 * (branches as f64).powf(n),
                c2 * side.powf(dw * n),
                side.powf(n),
                (c1, c2),
            )
        }
    };
    Ok(ScalingTriple {
        family: family.tag().into(),
        level,
        alpha,
        beta,
        gamma,
        embed,
        c1,
        c2,
    })
}

/// `(2 pi c1 t)^(-d/2) exp(-|x|^2 / (2 c1 t))`.
pub fn gaussian_reference(d: usize, c1: f64, t: f64, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (2.0 * std::f64::consts::PI * c1 * t).powf(-(d as f64) / 2.0) * (-r2 / (2.0 * c1 * t)).exp()
}

/// `k` geometrically spaced points from `a` to `b` inclusive.
pub fn geometric_grid(a: f64, b: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![a];
    }
    let r = (b / a).ln() / (k - 1) as f64;
    (0..k).map(|i| a * (r * i as f64).exp()).collect()
}

/// Points of `step Z^d` in `[-r, r]^d`, first coordinate fastest.
pub fn dyadic_grid(d: usize, r: f64, step: f64) -> Vec<Vec<f64>> {
    let m = (r / step + 1e-9).floor() as i64;
    let side = (2 * m + 1) as usize;
    (0..side.pow(d as u32))
        .map(|mut k| {
            (0..d)
                .map(|_| {
                    let x = (k % side) as i64 - m;
                    k /= side;
                    x as f64 * step
                })
                .collect()
        })
        .collect()
}

/// Hop margin for a lattice box: the window `alpha r` plus three standard
/// deviations of the walk at the last time.
pub fn lattice_margin(triple: &ScalingTriple, t_max: f64, r: f64) -> usize {
    (triple.alpha * r + 3.0 * (triple.gamma * t_max).sqrt()).ceil() as usize + 2
}

/// `g_n(x)`: nearest vertex to each point scaled by `embed`.
pub fn project_grid(g: &WeightedGraph, embed: f64, points: &[Vec<f64>]) -> Vec<VertexId> {
    let index = SpatialIndex::new(g);
    let origin = g.coords(g.root()).to_vec();
    points
        .iter()
        .map(|x| {
            let p: Vec<f64> = x.iter().zip(&origin).map(|(v, o)| o + embed * v).collect();
            index.nearest(&p)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledKernel {
    pub level: f64,
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub vertices: Vec<VertexId>,
    /// `values[i][j] = beta q_floor(gamma t_i)(vertices[j])`.
    pub values: Vec<Vec<f64>>,
}

fn kernel_rows(g: &WeightedGraph, triple: &ScalingTriple, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    if times.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument("times must be finite and >= 0".into()));
    }
    let steps: Vec<usize> = times.iter().map(|&t| (triple.gamma * t).floor() as usize).collect();
    let top = steps.iter().copied().max().unwrap_or(0) as f64;
    if top * g.num_edges() as f64 > WORK_LIMIT {
        return Err(Error::Capacity(format!(
            "{top} steps on {} edges exceeds the work limit {WORK_LIMIT}",
            g.num_edges()
        )));
    }
    let table = smoothed_at(g, g.root(), &steps)?;
    steps
        .iter()
        .map(|&m| table.row_or_err(m).map(|r| r.iter().map(|v| triple.beta * v).collect()))
        .collect()
}

/// Rescaled kernel from the root on explicit vertices.
pub fn rescale_kernel_at(
    g: &WeightedGraph,
    triple: &ScalingTriple,
    times: &[f64],
    points: Vec<Vec<f64>>,
    vertices: Vec<VertexId>,
) -> Result<RescaledKernel> {
    for &v in &vertices {
        g.check_vertex(v)?;
    }
    let rows = kernel_rows(g, triple, times)?;
    let values = rows.iter().map(|r| vertices.iter().map(|&v| r[v]).collect()).collect();
    Ok(RescaledKernel {
        level: triple.level,
        times: times.to_vec(),
        points,
        vertices,
        values,
    })
}

/// Rescaled kernel on limit-space points, projected by `g_n`.
pub fn rescale_kernel(
    g: &WeightedGraph,
    triple: &ScalingTriple,
    times: &[f64],
    points: &[Vec<f64>],
) -> Result<RescaledKernel> {
    let vertices = project_grid(g, triple.embed, points);
    rescale_kernel_at(g, triple, times, points.to_vec(), vertices)
}

/// Vertices first visited at the given fractions of the contour walk.
pub fn contour_points(tree: &OrderedTree, fractions: &[f64]) -> Vec<VertexId> {
    let contour = tree.contour();
    let last = contour.len() - 1;
    fractions
        .iter()
        .map(|&s| contour[((s.clamp(0.0, 1.0) * last as f64).round() as usize).min(last)])
        .collect()
}

pub fn sup_distance(a: &RescaledKernel, b: &RescaledKernel) -> Result<f64> {
    if a.times != b.times || a.values.iter().map(Vec::len).ne(b.values.iter().map(Vec::len)) {
        return Err(Error::InvalidArgument("kernels are on different grids".into()));
    }
    Ok(a.values
        .iter()
        .flatten()
        .zip(b.values.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Sup distance to an analytic reference `f(t, x)`.
pub fn sup_distance_to(a: &RescaledKernel, f: impl Fn(f64, &[f64]) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, &t) in a.times.iter().enumerate() {
        for (j, x) in a.points.iter().enumerate() {
            worst = worst.max((a.values[i][j] - f(t, x)).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeLltRow {
    pub dim: usize,
    pub n: f64,
    pub vertices: usize,
    pub sup_distance: f64,
}

/// Sup distance between the rescaled kernel on `Z^d` and its Gaussian
/// limit over `times x [-r, r]^d` (grid spacing `step`). The box is cut at
/// [`lattice_margin`], beyond which the walk leaves no visible trace.
pub fn lattice_llt(
    dim: usize,
    n: f64,
    times: &[f64],
    r: f64,
    step: f64,
    constants: Option<(f64, f64)>,
) -> Result<LatticeLltRow> {
    if !(r > 0.0 && step > 0.0) || times.is_empty() {
        return Err(Error::InvalidArgument(
            "need r > 0, step > 0 and a nonempty time grid".into(),
        ));
    }
    let triple = scaling_for(&ScalingFamily::Lattice { dim }, n, constants)?;
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let g = crate::families::build_lattice_box(dim, lattice_margin(&triple, t_max, r))?;
    let kernel = rescale_kernel(&g, &triple, times, &dyadic_grid(dim, r, step))?;
    let sup_distance = sup_distance_to(&kernel, |t, x| gaussian_reference(dim, triple.c1, t, x));
    Ok(LatticeLltRow {
        dim,
        n,
        vertices: g.num_vertices(),
        sup_distance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TightnessRow {
    pub delta: f64,
    pub level: f64,
    pub value: f64,
}

/// For each level and `delta`: sup over `x, y` in `B_G(root, alpha r)` with
/// `d_G(x, y) <= alpha delta` and over the time grid of
/// `beta |q(x) - q(y)|`.
pub fn tightness_profile(
    levels: &[(&WeightedGraph, ScalingTriple)],
    times: &[f64],
    r: f64,
    deltas: &[f64],
) -> Result<Vec<TightnessRow>> {
    let mut out = Vec::new();
    for (g, triple) in levels {
        let rows = kernel_rows(g, triple, times)?;
        let ball = g.hop_ball(g.root(), triple.alpha * r)?;
        let mut inside = vec![false; g.num_vertices()];
        for &v in &ball {
            inside[v] = true;
        }
        let max_delta = deltas.iter().copied().fold(0.0, f64::max);
        let depth = (triple.alpha * max_delta).floor() as usize;
        // best[k]: sup over pairs at hop distance exactly k
        let best: Vec<f64> = ball
            .par_iter()
            .map(|&x| {
                let dist = g.hop_distances_within(x, depth);
                let mut local = vec![0.0f64; depth + 1];
                for (y, d) in dist.iter().enumerate() {
                    if let Some(d) = d.filter(|_| inside[y]) {
                        let diff = rows.iter().map(|row| (row[x] - row[y]).abs()).fold(0.0, f64::max);
                        local[d] = local[d].max(diff);
                    }
                }
                local
            })
            .reduce(
                || vec![0.0; depth + 1],
                |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
            );
        for &delta in deltas {
            let k = (triple.alpha * delta + 1e-9).floor() as usize;
            let value = best[..=k.min(depth)].iter().copied().fold(0.0, f64::max);
            out.push(TightnessRow {
                delta,
                level: triple.level,
                value,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricFit {
    /// `min d_G / (alpha d_E)` over the sampled pairs.
    pub c1_hat: f64,
    /// Least-squares slope of `d_G` against `alpha d_E`.
    pub c2_hat: f64,
    /// Largest excess `d_G - c2_hat alpha d_E`, clamped at 0.
    pub tilde_alpha: f64,
    pub pairs: usize,
}

/// Compares graph distance with scaled embedding distance on
/// `V ∩ B_E(root, r)`; at most `max_points` vertices are used, evenly
/// subsampled by id.
pub fn metric_comparability(g: &WeightedGraph, triple: &ScalingTriple, r: f64, max_points: usize) -> Result<MetricFit> {
    let origin = g.coords(g.root()).to_vec();
    let mut ball: Vec<VertexId> = (0..g.num_vertices())
        .filter(|&v| euclidean(g.coords(v), &origin) / triple.embed < r)
        .collect();
    if ball.len() > max_points.max(2) {
        let stride = ball.len().div_ceil(max_points.max(2));
        ball = ball.into_iter().step_by(stride).collect();
    }
    if ball.len() < 2 {
        return Err(Error::InvalidArgument("fewer than two vertices in the window".into()));
    }
    let pairs: Vec<(f64, f64)> = ball
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, &x)| {
            let dist = g.hop_distances(x);
            ball[i + 1..]
                .iter()
                .filter_map(|&y| {
                    let de = triple.alpha * euclidean(g.coords(x), g.coords(y)) / triple.embed;
                    dist[y].map(|d| (de, d as f64))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let c1_hat = pairs.iter().map(|(de, dg)| dg / de).fold(f64::INFINITY, f64::min);
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let c2_hat = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / xs.iter().map(|x| x * x).sum::<f64>();
    let tilde_alpha = pairs.iter().map(|(de, dg)| dg - c2_hat * de).fold(0.0, f64::max);
    Ok(MetricFit {
        c1_hat,
        c2_hat,
        tilde_alpha,
        pairs: pairs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureRow {
    pub level: f64,
    pub center: usize,
    pub radius: f64,
    pub value: f64,
}

/// `beta(n)^-1 nu_n(B_E(x, r))` with vertices placed at `coords / embed`,
/// relative to the root.
pub fn measure_convergence(
    g: &WeightedGraph,
    triple: &ScalingTriple,
    centers: &[Vec<f64>],
    radii: &[f64],
) -> Vec<MeasureRow> {
    let origin = g.coords(g.root()).to_vec();
    let pos: Vec<Vec<f64>> = (0..g.num_vertices())
        .map(|v| {
            g.coords(v)
                .iter()
                .zip(&origin)
                .map(|(c, o)| (c - o) / triple.embed)
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for (ci, c) in centers.iter().enumerate() {
        for &r in radii {
            let mass: f64 = (0..g.num_vertices())
                .filter(|&v| euclidean(&pos[v], c) < r)
                .map(|v| g.mass(v))
                .sum();
            out.push(MeasureRow {
                level: triple.level,
                center: ci,
                radius: r,
                value: mass / triple.beta,
            });
        }
    }
    out
}

/// `alpha(n)^kappa beta(n) / gamma(n)` per level.
pub fn einstein_ratios(triples: &[ScalingTriple], kappa: f64) -> Vec<f64> {
    triples.iter().map(|t| t.alpha.powf(kappa) * t.beta / t.gamma).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EinsteinReport {
    pub ratios: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub exit_times: Vec<(f64, f64)>,
    pub exit_fit: Option<LinearFit>,
}

/// Log-log slope of the mean exit time from `B(center, r)` started at the
/// centre.
pub fn exit_time_fit(g: &WeightedGraph, center: VertexId, radii: &[f64]) -> Result<(Vec<(f64, f64)>, LinearFit)> {
    let times: Vec<(f64, f64)> = radii
        .par_iter()
        .map(|&r| Ok((r, mean_exit_time(g, center, r)?[center])))
        .collect::<Result<_>>()?;
    let lx: Vec<f64> = times.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = times.iter().map(|p| p.1.ln()).collect();
    Ok((times.clone(), linear_fit(&lx, &ly)?))
}

pub fn einstein_check(
    triples: &[ScalingTriple],
    kappa: f64,
    exit: Option<(&WeightedGraph, VertexId, &[f64])>,
) -> Result<EinsteinReport> {
    let ratios = einstein_ratios(triples, kappa);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let (exit_times, exit_fit) = match exit {
        Some((g, c, radii)) => {
            let (t, f) = exit_time_fit(g, c, radii)?;
            (t, Some(f))
        }
        None => (Vec::new(), None),
    };
    Ok(EinsteinReport {
        ratios,
        min,
        max,
        exit_times,
        exit_fit,
    })
}

/// `2n q_floor(n^(3/2) t)(root, root)` for a uniform tree on `n` vertices.
pub fn tree_root_kernel(n: usize, seed: u64, times: &[f64]) -> Result<Vec<f64>> {
    let tree = sample_uniform_tree(n, seed)?;
    let g = tree.to_graph()?;
    let triple = scaling_for(&ScalingFamily::Tree, n as f64, None)?;
    let rows = kernel_rows(&g, &triple, times)?;
    Ok(rows.iter().map(|r| r[g.root()]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsRow {
    pub n_small: usize,
    pub n_large: usize,
    pub t: f64,
    pub ks: f64,
}

/// Samples of [`tree_root_kernel`] for seeds `base..base + count`;
/// `out[i][s]` is time `i`, seed `s`.
pub fn tree_kernel_samples(n: usize, base: u64, count: usize, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let per_seed: Vec<Vec<f64>> = (0..count as u64)
        .into_par_iter()
        .map(|i| tree_root_kernel(n, base + i, times))
        .collect::<Result<_>>()?;
    Ok((0..times.len())
        .map(|k| per_seed.iter().map(|s| s[k]).collect())
        .collect())
}

/// KS distances between consecutive sizes, per time. Size `i` uses seeds
/// `base + i * count ..`.
pub fn tree_distribution_stability(sizes: &[usize], base: u64, count: usize, times: &[f64]) -> Result<Vec<KsRow>> {
    if times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument("times must lie in (0, inf)".into()));
    }
    // disjoint seed blocks keep the samples of different sizes independent
    let samples: Vec<Vec<Vec<f64>>> = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| tree_kernel_samples(n, base + (i * count) as u64, count, times))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for w in 0..sizes.len().saturating_sub(1) {
        for (k, &t) in times.iter().enumerate() {
            out.push(KsRow {
                n_small: sizes[w],
                n_large: sizes[w + 1],
                t,
                ks: ks_two_sample(&samples[w][k], &samples[w + 1][k])?,
            });
        }
    }
    Ok(out)
}
