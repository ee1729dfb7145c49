//! Transition densities of the weighted simple random walk.
//!
//! Densities are taken against the invariant measure:
//! `p_m(x, y) = P_x(X_m = y) / nu(y)`. Because `p_m(x, .)` is symmetric in
//! its arguments, one step of the walk acts on a density row as the
//! transition operator itself: `p_{m+1}(x, .) = P p_m(x, .)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{DiscreteCDF, Poisson};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::graph::{VertexId, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flavor {
    Raw,
    Smoothed,
}

/// Density rows `m -> (vertex -> value)` for a subset of steps.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub source: VertexId,
    pub flavor: Flavor,
    steps: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl KernelTable {
    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn max_step(&self) -> usize {
        self.steps.last().copied().unwrap_or(0)
    }

    pub fn row(&self, m: usize) -> Option<&[f64]> {
        self.steps.binary_search(&m).ok().map(|i| self.rows[i].as_slice())
    }

    pub fn row_or_err(&self, m: usize) -> Result<&[f64]> {
        self.row(m)
            .ok_or_else(|| Error::InvalidArgument(format!("kernel table has no row {m}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.steps.iter().copied().zip(self.rows.iter().map(Vec::as_slice))
    }

    /// Builds a table from explicit rows; steps must be strictly increasing.
    pub fn from_rows(source: VertexId, flavor: Flavor, steps: Vec<usize>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if steps.len() != rows.len() || steps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "kernel rows need strictly increasing steps".into(),
            ));
        }
        Ok(KernelTable {
            source,
            flavor,
            steps,
            rows,
        })
    }
}

/// `sum_y row(y) nu(y)`.
pub fn total_mass(g: &WeightedGraph, row: &[f64]) -> f64 {
    row.iter().enumerate().map(|(y, v)| v * g.mass(y)).sum()
}

fn delta_density(g: &WeightedGraph, start: VertexId) -> Vec<f64> {
    let mut f = vec![0.0; g.num_vertices()];
    f[start] = 1.0 / g.mass(start);
    f
}

/// Raw densities `p_m(start, .)` for every `m` in `0..=steps`.
pub fn evolve_distribution(g: &WeightedGraph, start: VertexId, steps: usize) -> Result<KernelTable> {
    let all: Vec<usize> = (0..=steps).collect();
    evolve_at(g, start, &all)
}

/// Raw densities at the requested steps only; memory is proportional to
/// the number of requested rows.
pub fn evolve_at(g: &WeightedGraph, start: VertexId, steps: &[usize]) -> Result<KernelTable> {
    g.check_vertex(start)?;
    let mut wanted = steps.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    let mut rows = Vec::with_capacity(wanted.len());
    let mut f = delta_density(g, start);
    let mut next = vec![0.0; f.len()];
    let mut m = 0;
    for &target in &wanted {
        while m < target {
            g.apply_transition(&f, &mut next);
            std::mem::swap(&mut f, &mut next);
            m += 1;
        }
        rows.push(f.clone());
    }
    Ok(KernelTable {
        source: start,
        flavor: Flavor::Raw,
        steps: wanted,
        rows,
    })
}

/// `q_m = (p_m + p_{m+1}) / 2` for every `m` whose successor row exists.
pub fn smoothed_kernel(raw: &KernelTable) -> Result<KernelTable> {
    if raw.flavor != Flavor::Raw {
        return Err(Error::InvalidArgument("input table is already smoothed".into()));
    }
    let mut steps = Vec::new();
    let mut rows = Vec::new();
    for (m, row) in raw.iter() {
        if let Some(next) = raw.row(m + 1) {
            steps.push(m);
            rows.push(row.iter().zip(next).map(|(a, b)| 0.5 * (a + b)).collect());
        }
    }
    if steps.is_empty() {
        return Err(Error::InvalidArgument(
            "smoothing needs rows m and m+1 for some m".into(),
        ));
    }
    Ok(KernelTable {
        source: raw.source,
        flavor: Flavor::Smoothed,
        steps,
        rows,
    })
}

/// Smoothed densities `q_m(start, .)` at the requested steps.
pub fn smoothed_at(g: &WeightedGraph, start: VertexId, steps: &[usize]) -> Result<KernelTable> {
    let mut raw_steps: Vec<usize> = steps.iter().flat_map(|&m| [m, m + 1]).collect();
    raw_steps.sort_unstable();
    raw_steps.dedup();
    let raw = evolve_at(g, start, &raw_steps)?;
    let mut wanted = steps.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    let rows = wanted
        .iter()
        .map(|&m| {
            let a = raw.row(m).unwrap_or_default();
            let b = raw.row(m + 1).unwrap_or_default();
            a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
        })
        .collect();
    Ok(KernelTable {
        source: start,
        flavor: Flavor::Smoothed,
        steps: wanted,
        rows,
    })
}

/// Raw tables `p_m(x, .)`, `m = 0..=steps`, for each source, in parallel.
pub fn two_point_kernel(g: &WeightedGraph, sources: &[VertexId], steps: usize) -> Result<Vec<KernelTable>> {
    for &s in sources {
        g.check_vertex(s)?;
    }
    sources.par_iter().map(|&s| evolve_distribution(g, s, steps)).collect()
}

/// Continuous-time densities `p_t(source, .)` of the walk with generator
/// `P - I`, by uniformization. The Poisson series is cut once its tail
/// mass falls below `tol`.
pub fn continuous_kernel(g: &WeightedGraph, source: VertexId, times: &[f64], tol: f64) -> Result<Vec<Vec<f64>>> {
    g.check_vertex(source)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if let Some(t) = times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument(format!("times must be positive, got {t}")));
    }
    let cutoffs: Vec<usize> = times
        .iter()
        .map(|&t| {
            let pois = Poisson::new(t).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let mut k = t.ceil() as u64;
            while pois.sf(k) >= tol {
                k += 1;
            }
            Ok(k as usize)
        })
        .collect::<Result<_>>()?;
    let kmax = cutoffs.iter().copied().max().unwrap_or(0);
    let n = g.num_vertices();
    let mut out = vec![vec![0.0; n]; times.len()];
    let mut f = delta_density(g, source);
    let mut next = vec![0.0; n];
    for k in 0..=kmax {
        for (i, &t) in times.iter().enumerate() {
            if k <= cutoffs[i] {
                let w = (-t + k as f64 * t.ln() - ln_gamma(k as f64 + 1.0)).exp();
                for (o, v) in out[i].iter_mut().zip(&f) {
                    *o += w * v;
                }
            }
        }
        g.apply_transition(&f, &mut next);
        std::mem::swap(&mut f, &mut next);
    }
    Ok(out)
}

/// Expected number of steps to leave the open ball `B(center, r)`, as a
/// function of the starting vertex (zero outside the ball).
pub fn mean_exit_time(g: &WeightedGraph, center: VertexId, r: f64) -> Result<Vec<f64>> {
    let ball = g.hop_ball(center, r)?;
    if ball.len() == g.num_vertices() {
        return Err(Error::InvalidArgument(format!(
            "ball of radius {r} covers the whole graph; exit time undefined"
        )));
    }
    if ball.is_empty() {
        return Ok(vec![0.0; g.num_vertices()]);
    }
    // (I - P) u = 1 on the ball, multiplied through by mu: (D - A) u = mu
    let lap = crate::linalg::laplacian_block(g, &ball);
    let rhs: Vec<f64> = ball.iter().map(|&x| g.mass(x)).collect();
    let u = crate::linalg::SpdSolver::new(lap)?.solve(&rhs);
    let mut out = vec![0.0; g.num_vertices()];
    for (&x, v) in ball.iter().zip(u) {
        out[x] = v;
    }
    Ok(out)
}
