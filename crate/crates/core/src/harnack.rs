//! Space-time cylinders, caloric functions and the parabolic Harnack
//! constant.
//!
//! Balls are open hop balls `B(x, r) = {y : d(x, y) < r}`. A cylinder
//! covers the integer steps of `[t0, t0 + T]`; its caloric functions live
//! on `B(x, R + 1)`, with the ring `B(x, R + 1) \ B(x, R)` carrying free
//! lateral data.
//!
//! The optimal Harnack constant is a maximum over generators. Nonnegative
//! caloric functions are exactly the nonnegative combinations of the fields
//! started by a unit mass at one point of the initial slice or of the
//! lateral ring. Since `sup` is subadditive, `inf` superadditive, and
//! `sum a_k / sum b_k <= max a_k / b_k`, no combination beats the best
//! single generator.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{VertexId, WeightedGraph};
use crate::kernels::smoothed_at;
use crate::stats::linear_fit;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub center: VertexId,
    pub radius: f64,
    pub start: f64,
    pub horizon: f64,
}

fn int_range(lo: f64, hi: f64) -> RangeInclusive<usize> {
    let a = (lo - EPS).ceil().max(0.0) as usize;
    let b = (hi + EPS).floor();
    if b < a as f64 {
        // canonical empty range
        #[allow(clippy::reversed_empty_ranges)]
        return 1..=0;
    }
    a..=b as usize
}

impl Cylinder {
    pub fn new(center: VertexId, radius: f64, horizon: f64) -> Self {
        Cylinder {
            center,
            radius,
            start: 0.0,
            horizon,
        }
    }

    pub fn shifted(center: VertexId, radius: f64, start: f64, horizon: f64) -> Self {
        Cylinder {
            center,
            radius,
            start,
            horizon,
        }
    }

    /// Integer steps covered by the cylinder.
    pub fn steps(&self) -> RangeInclusive<usize> {
        int_range(self.start, self.start + self.horizon)
    }

    /// Steps of `Q-`: `[t0 + T/4, t0 + T/2]`.
    pub fn lower_steps(&self) -> RangeInclusive<usize> {
        int_range(self.start + 0.25 * self.horizon, self.start + 0.5 * self.horizon)
    }

    /// Steps of `Q+`: `[t0 + 3T/4, t0 + T)`, keeping `n + 1` inside the
    /// cylinder so that the smoothed value is defined.
    pub fn upper_steps(&self) -> RangeInclusive<usize> {
        let end = self.start + self.horizon;
        let last = *self.steps().end() as f64;
        let hi = ((end - EPS).ceil() - 1.0).min(last - 1.0);
        int_range(self.start + 0.75 * self.horizon, hi)
    }

    pub fn validate(&self, g: &WeightedGraph) -> Result<()> {
        g.check_vertex(self.center)?;
        let bad = |why: &str| Err(Error::InvalidArgument(format!("degenerate cylinder {self:?}: {why}")));
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad("radius must be positive");
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite() && self.start >= 0.0) {
            return bad("need t0 >= 0 and T > 0");
        }
        if self.lower_steps().is_empty() {
            return bad("Q- contains no integer step");
        }
        if self.upper_steps().is_empty() {
            return bad("Q+ contains no integer step");
        }
        Ok(())
    }
}

/// Vertex bookkeeping for one cylinder.
#[derive(Debug, Clone)]
pub struct CylinderLayout {
    /// `B(x, R + 1)` in increasing id order.
    pub ball: Vec<VertexId>,
    /// `B(x, R + 1) \ B(x, R)` in increasing id order.
    pub ring: Vec<VertexId>,
    interior: Vec<bool>,
    ring_pos: Vec<usize>,
    half: Vec<usize>,
    transitions: Vec<Vec<(usize, f64)>>,
}

impl CylinderLayout {
    pub fn new(g: &WeightedGraph, cyl: &Cylinder) -> Result<Self> {
        cyl.validate(g)?;
        let r = cyl.radius;
        let depth = ((r + 1.0).ceil() as usize).saturating_sub(1);
        let dist = g.hop_distances_within(cyl.center, depth);
        let mut pos = vec![usize::MAX; g.num_vertices()];
        let mut ball = Vec::new();
        let mut d_of = Vec::new();
        for (v, d) in dist.iter().enumerate() {
            if let Some(d) = d.filter(|&d| (d as f64) < r + 1.0) {
                pos[v] = ball.len();
                ball.push(v);
                d_of.push(d as f64);
            }
        }
        let interior: Vec<bool> = d_of.iter().map(|&d| d < r).collect();
        let ring_pos: Vec<usize> = (0..ball.len()).filter(|&i| !interior[i]).collect();
        let ring = ring_pos.iter().map(|&i| ball[i]).collect();
        let half = (0..ball.len()).filter(|&i| d_of[i] < 0.5 * r).collect();
        let transitions = ball
            .iter()
            .zip(&interior)
            .map(|(&v, &inside)| {
                if !inside {
                    return Vec::new();
                }
                let m = g.mass(v);
                g.neighbors(v).map(|(y, w)| (pos[y], w / m)).collect()
            })
            .collect();
        Ok(CylinderLayout {
            ball,
            ring,
            interior,
            ring_pos,
            half,
            transitions,
        })
    }

    fn run(&self, steps: usize, init: Vec<f64>, lateral: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
        let mut values = Vec::with_capacity(steps + 1);
        values.push(init);
        for j in 1..=steps {
            let prev = &values[j - 1];
            let mut next = vec![0.0; self.ball.len()];
            for (i, t) in self.transitions.iter().enumerate() {
                if self.interior[i] {
                    next[i] = t.iter().map(|&(k, p)| p * prev[k]).sum();
                }
            }
            for (r, &i) in self.ring_pos.iter().enumerate() {
                next[i] = lateral(j, r);
            }
            values.push(next);
        }
        values
    }
}

/// A caloric function on the closure of a cylinder.
#[derive(Debug, Clone)]
pub struct CaloricField {
    pub cylinder: Cylinder,
    pub layout: CylinderLayout,
    pub first_step: usize,
    /// `values[j][i]` is `u(first_step + j, layout.ball[i])`.
    pub values: Vec<Vec<f64>>,
}

impl CaloricField {
    pub fn value(&self, n: usize, v: VertexId) -> Option<f64> {
        let j = n.checked_sub(self.first_step)?;
        let i = self.layout.ball.binary_search(&v).ok()?;
        self.values.get(j).map(|row| row[i])
    }

    /// `u(n + 1, v) + u(n, v)`.
    pub fn hat(&self, n: usize, v: VertexId) -> Option<f64> {
        Some(self.value(n + 1, v)? + self.value(n, v)?)
    }

    /// `(sup over Q- of u-hat, inf over Q+ of u-hat)`.
    pub fn window_extrema(&self) -> (f64, f64) {
        window_extrema(&self.values, self.first_step, &self.layout, &self.cylinder)
    }

    /// `sup_{Q-} u-hat / inf_{Q+} u-hat`.
    pub fn harnack_ratio(&self) -> f64 {
        let (sup, inf) = self.window_extrema();
        if sup == 0.0 {
            0.0
        } else if inf <= 0.0 {
            f64::INFINITY
        } else {
            sup / inf
        }
    }

    /// Largest heat-equation residual `|u(n+1) - u(n) - L u(n)|` over the
    /// interior, evaluated with the generator directly.
    pub fn residual(&self, g: &WeightedGraph) -> f64 {
        let mut worst: f64 = 0.0;
        let pos = |v: VertexId| self.layout.ball.binary_search(&v).ok();
        for j in 0..self.values.len().saturating_sub(1) {
            let (now, next) = (&self.values[j], &self.values[j + 1]);
            for (i, &v) in self.layout.ball.iter().enumerate() {
                if !self.layout.interior[i] {
                    continue;
                }
                let m = g.mass(v);
                let lu: f64 = g
                    .neighbors(v)
                    .map(|(y, w)| w / m * (pos(y).map_or(f64::NAN, |k| now[k]) - now[i]))
                    .sum();
                worst = worst.max((next[i] - now[i] - lu).abs());
            }
        }
        worst
    }
}

fn window_extrema(values: &[Vec<f64>], first: usize, layout: &CylinderLayout, cyl: &Cylinder) -> (f64, f64) {
    let hat = |n: usize, i: usize| values[n - first + 1][i] + values[n - first][i];
    let mut sup: f64 = 0.0;
    for n in cyl.lower_steps() {
        for &i in &layout.half {
            sup = sup.max(hat(n, i));
        }
    }
    let mut inf = f64::INFINITY;
    for n in cyl.upper_steps() {
        for &i in &layout.half {
            inf = inf.min(hat(n, i));
        }
    }
    (sup, inf)
}

/// Evolves initial data on `B(x, R + 1)` (in `layout.ball` order) and
/// lateral data on the ring (`lateral[j]` holds step `first + 1 + j`, in
/// `layout.ring` order).
pub fn caloric_evolve(
    g: &WeightedGraph,
    cyl: &Cylinder,
    initial: &[f64],
    lateral: &[Vec<f64>],
) -> Result<CaloricField> {
    let layout = CylinderLayout::new(g, cyl)?;
    let steps = cyl.steps();
    let count = steps.end() - steps.start();
    if initial.len() != layout.ball.len() {
        return Err(Error::InvalidArgument(format!(
            "initial data has {} values, ball has {}",
            initial.len(),
            layout.ball.len()
        )));
    }
    if lateral.len() != count || lateral.iter().any(|row| row.len() != layout.ring.len()) {
        return Err(Error::InvalidArgument(format!(
            "lateral data must be {count} rows of {} values",
            layout.ring.len()
        )));
    }
    let values = layout.run(count, initial.to_vec(), |j, r| lateral[j - 1][r]);
    Ok(CaloricField {
        cylinder: *cyl,
        layout,
        first_step: *steps.start(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    Initial { vertex: VertexId },
    Lateral { step: usize, vertex: VertexId },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiReport {
    /// Optimal constant; infinite when some generator reaches `Q-` but
    /// vanishes somewhere on `Q+`.
    pub value: f64,
    pub generators: usize,
    /// Generators with a nonzero supremum on `Q-`.
    pub contributing: usize,
    pub infinite: bool,
    pub worst: Option<Generator>,
}

/// Field of a single generator.
pub fn generator_field(g: &WeightedGraph, cyl: &Cylinder, gen: Generator) -> Result<CaloricField> {
    let layout = CylinderLayout::new(g, cyl)?;
    let steps = cyl.steps();
    Ok(generator_field_with(
        &layout,
        cyl,
        gen,
        *steps.start(),
        steps.end() - steps.start(),
    ))
}

fn generator_field_with(
    layout: &CylinderLayout,
    cyl: &Cylinder,
    gen: Generator,
    first: usize,
    count: usize,
) -> CaloricField {
    let mut init = vec![0.0; layout.ball.len()];
    let (step, ring_idx) = match gen {
        Generator::Initial { vertex } => {
            init[layout.ball.binary_search(&vertex).unwrap_or(0)] = 1.0;
            (usize::MAX, usize::MAX)
        }
        Generator::Lateral { step, vertex } => (step - first, layout.ring.binary_search(&vertex).unwrap_or(0)),
    };
    let values = layout.run(count, init, |j, r| if j == step && r == ring_idx { 1.0 } else { 0.0 });
    CaloricField {
        cylinder: *cyl,
        layout: layout.clone(),
        first_step: first,
        values,
    }
}

/// Optimal Harnack constant `C_H*` of a cylinder, as a maximum over
/// generators. Lateral generators after the last step of `Q-` cannot reach
/// it and are not evaluated.
pub fn phi_constant(g: &WeightedGraph, cyl: &Cylinder) -> Result<PhiReport> {
    let layout = CylinderLayout::new(g, cyl)?;
    let steps = cyl.steps();
    let first = *steps.start();
    let count = steps.end() - first;
    let reach = *cyl.lower_steps().end();
    let mut gens: Vec<Generator> = layout.ball.iter().map(|&v| Generator::Initial { vertex: v }).collect();
    for n in first + 1..=reach.min(*steps.end()) {
        gens.extend(layout.ring.iter().map(|&v| Generator::Lateral { step: n, vertex: v }));
    }
    let results: Vec<(Generator, f64, f64)> = gens
        .par_iter()
        .map(|&gen| {
            let f = generator_field_with(&layout, cyl, gen, first, count);
            let (sup, inf) = window_extrema(&f.values, first, &layout, cyl);
            (gen, sup, inf)
        })
        .collect();
    let mut value: f64 = 0.0;
    let mut worst = None;
    let mut contributing = 0;
    for (gen, sup, inf) in &results {
        if *sup == 0.0 {
            continue;
        }
        contributing += 1;
        let ratio = if *inf <= 0.0 { f64::INFINITY } else { sup / inf };
        if ratio > value {
            value = ratio;
            worst = Some(*gen);
        }
    }
    Ok(PhiReport {
        value,
        generators: results.len(),
        contributing,
        infinite: value.is_infinite(),
        worst,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSweep {
    pub exact: f64,
    pub best_random: f64,
    pub trials: usize,
}

impl RandomSweep {
    pub fn check(&self) -> Result<()> {
        if self.best_random <= self.exact * (1.0 + 1e-12) {
            Ok(())
        } else {
            Err(Error::Violation {
                check: "harnack constant".into(),
                location: format!("{} random boundary data", self.trials),
                lhs: self.best_random,
                rhs: self.exact,
            })
        }
    }
}

/// Heavy-tailed nonnegative data, often concentrated on a few points.
fn random_data(layout: &CylinderLayout, steps: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<Vec<f64>>) {
    let draw = |rng: &mut ChaCha8Rng| -> f64 {
        let u: f64 = rng.random();
        if rng.random_bool(0.7) {
            0.0
        } else {
            u.powi(4)
        }
    };
    let init = (0..layout.ball.len()).map(|_| draw(rng)).collect();
    let lateral = (0..steps)
        .map(|_| (0..layout.ring.len()).map(|_| draw(rng)).collect())
        .collect();
    (init, lateral)
}

/// Largest Harnack ratio over `trials` random nonnegative initial and
/// lateral data, next to `C_H*`.
pub fn random_data_sweep(g: &WeightedGraph, cyl: &Cylinder, trials: usize, seed: u64) -> Result<RandomSweep> {
    let exact = phi_constant(g, cyl)?.value;
    let layout = CylinderLayout::new(g, cyl)?;
    let steps = cyl.steps().end() - cyl.steps().start();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..trials {
        let (init, lateral) = random_data(&layout, steps, &mut rng);
        best = best.max(caloric_evolve(g, cyl, &init, &lateral)?.harnack_ratio());
    }
    Ok(RandomSweep {
        exact,
        best_random: best,
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiRow {
    pub radius: f64,
    pub horizon: f64,
    pub c_h_star: f64,
    pub generators: usize,
    pub infinite: bool,
}

/// `C_H*` on `Q(x, R, R^kappa)` for each radius.
pub fn phi_sweep(g: &WeightedGraph, x: VertexId, kappa: f64, radii: &[f64]) -> Result<Vec<PhiRow>> {
    radii
        .iter()
        .map(|&r| {
            let t = r.powf(kappa);
            let rep = phi_constant(g, &Cylinder::new(x, r, t))?;
            Ok(PhiRow {
                radius: r,
                horizon: t,
                c_h_star: rep.value,
                generators: rep.generators,
                infinite: rep.infinite,
            })
        })
        .collect()
}

/// Empirical threshold scale: the smallest swept radius from which every
/// larger swept radius has `C_H* <= cap`.
pub fn phi_threshold(rows: &[PhiRow], cap: f64) -> Option<f64> {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.radius.total_cmp(&b.radius));
    let mut best = None;
    for row in sorted.iter().rev() {
        if row.c_h_star <= cap {
            best = Some(row.radius);
        } else {
            break;
        }
    }
    best
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayStep {
    pub k: usize,
    pub radius: f64,
    pub c_h: f64,
    pub osc_outer: f64,
    pub osc_inner: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub t0: f64,
    pub r0: f64,
    pub kappa: f64,
    pub steps: Vec<DecayStep>,
    /// Scales whose regions contain no integer step or vertex.
    pub skipped: Vec<usize>,
}

impl DecayReport {
    pub fn check(&self) -> Result<()> {
        match self.steps.iter().find(|s| !s.holds) {
            None => Ok(()),
            Some(s) => Err(Error::Violation {
                check: "oscillation decay".into(),
                location: format!("k={}", s.k),
                lhs: s.osc_inner,
                rhs: s.bound,
            }),
        }
    }
}

fn oscillation(q: &[Vec<f64>], base: usize, steps: RangeInclusive<usize>, ball: &[VertexId]) -> Option<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for m in steps {
        for &y in ball {
            let v = q[m - base][y];
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (hi >= lo).then_some(hi - lo)
}

/// Dyadic oscillation chain for `q(rho, .)` centred at `rho`: with
/// `T0 = T + 1`, `R_k = 2^-k T0^(1/kappa)`, checks
/// `Osc(Q+(k)) <= (1 - 1/(2 C_H*(k))) Osc(Q(k))` for every `k >= 1` with
/// `R_k >= s`, where `C_H*(k)` is the optimal constant of `Q(k)` itself.
pub fn oscillation_decay_check(g: &WeightedGraph, rho: VertexId, kappa: f64, t: f64, s: f64) -> Result<DecayReport> {
    g.check_vertex(rho)?;
    if !(kappa >= 2.0) {
        return Err(Error::InvalidArgument(format!("kappa must be >= 2, got {kappa}")));
    }
    if !(t > 0.0 && s > 0.0) {
        return Err(Error::InvalidArgument("need T > 0 and s > 0".into()));
    }
    let t0 = t + 1.0;
    let r0 = t0.powf(1.0 / kappa);
    let top = (t0 + EPS).floor() as usize;
    let q_steps: Vec<usize> = (0..=top).collect();
    let table = smoothed_at(g, rho, &q_steps)?;
    let q: Vec<Vec<f64>> = table.iter().map(|(_, row)| row.to_vec()).collect();
    let dist = g.hop_distances(rho);
    let ball = |r: f64| -> Vec<VertexId> {
        (0..g.num_vertices())
            .filter(|&y| dist[y].is_some_and(|d| (d as f64) < r))
            .collect()
    };
    let mut steps = Vec::new();
    let mut skipped = Vec::new();
    let mut k = 1;
    loop {
        let rk = r0 / 2f64.powi(k as i32);
        if rk < s {
            break;
        }
        let h = rk.powf(kappa);
        let outer_steps = int_range(t0 - h, t0);
        let inner_steps = int_range(t0 - 2f64.powf(-kappa) * h, (t0 - EPS).ceil() - 1.0);
        let outer = oscillation(&q, 0, outer_steps, &ball(rk));
        let inner = oscillation(&q, 0, inner_steps, &ball(0.5 * rk));
        let cyl = Cylinder::shifted(rho, rk, t0 - h, h);
        match (outer, inner, cyl.validate(g)) {
            (Some(osc_outer), Some(osc_inner), Ok(())) => {
                let c_h = phi_constant(g, &cyl)?.value;
                let bound = (1.0 - 1.0 / (2.0 * c_h)) * osc_outer;
                let holds = osc_inner <= bound + 1e-12 * osc_outer;
                steps.push(DecayStep {
                    k,
                    radius: rk,
                    c_h,
                    osc_outer,
                    osc_inner,
                    bound,
                    holds,
                });
            }
            _ => skipped.push(k),
        }
        k += 1;
    }
    Ok(DecayReport {
        t0,
        r0,
        kappa,
        steps,
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderPoint {
    pub radius: f64,
    pub horizon: usize,
    /// `R / T^(1/kappa)`.
    pub scale: f64,
    /// `sup_{y in B(x,R)} |q_T(x) - q_T(y)| * nu(B(x, T^(1/kappa)/4))`.
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderFit {
    pub points: Vec<HolderPoint>,
    pub c: f64,
    pub theta: f64,
    /// `max value / scale^theta` over the grid.
    pub worst_ratio: f64,
}

/// Normalized Holder increments of `q_T(root, .)` around `x` over a grid of
/// `(R, T)`, with a log-log fit `value ~ c * scale^theta`.
pub fn holder_ratio(g: &WeightedGraph, x: VertexId, kappa: f64, grid: &[(f64, usize)]) -> Result<HolderFit> {
    g.check_vertex(x)?;
    let nu = g.node_measure();
    let mut points = Vec::with_capacity(grid.len());
    for &(r, t) in grid {
        let span = (t as f64).powf(1.0 / kappa);
        if !(r > 0.0) || span < 4.0 * r {
            return Err(Error::InvalidArgument(format!(
                "need T^(1/kappa) >= 4R, got R={r}, T={t}, T^(1/kappa)={span}"
            )));
        }
        let q = smoothed_at(g, g.root(), &[t])?;
        let row = q.row_or_err(t)?;
        let inc = g
            .hop_ball(x, r)?
            .into_iter()
            .map(|y| (row[x] - row[y]).abs())
            .fold(0.0, f64::max);
        let vol = nu.of(&g.hop_ball(x, 0.25 * span)?);
        points.push(HolderPoint {
            radius: r,
            horizon: t,
            scale: r / span,
            value: inc * vol,
        });
    }
    let used: Vec<&HolderPoint> = points.iter().filter(|p| p.value > 0.0).collect();
    let lx: Vec<f64> = used.iter().map(|p| p.scale.ln()).collect();
    let ly: Vec<f64> = used.iter().map(|p| p.value.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    let theta = fit.slope;
    let c = fit.intercept.exp();
    if !(theta > 0.0) {
        return Err(Error::Violation {
            check: "holder exponent".into(),
            location: format!("vertex {x}"),
            lhs: theta,
            rhs: 0.0,
        });
    }
    let worst_ratio = points.iter().map(|p| p.value / p.scale.powf(theta)).fold(0.0, f64::max);
    Ok(HolderFit {
        points,
        c,
        theta,
        worst_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{build_lattice_box, IfsSpec};
    use crate::kernels::tests::{path, random_graph};

    fn two_vertex() -> WeightedGraph {
        path(2)
    }

    #[test]
    fn cylinder_windows() {
        let c = Cylinder::new(0, 2.0, 8.0);
        assert_eq!(c.steps(), 0..=8);
        assert_eq!(c.lower_steps(), 2..=4);
        assert_eq!(c.upper_steps(), 6..=7);
        let s = Cylinder::shifted(0, 2.0, 0.5, 4.0);
        assert_eq!(s.steps(), 1..=4);
        assert_eq!(s.lower_steps(), 2..=2);
        assert!(s.upper_steps().is_empty());
        assert!(s.validate(&path(3)).is_err());
        assert!(Cylinder::new(0, 2.0, 2.0).validate(&path(3)).is_err());
    }

    #[test]
    fn constants_are_caloric() {
        let g = random_graph(20, 15, 4);
        let cyl = Cylinder::new(3, 2.0, 10.0);
        let layout = CylinderLayout::new(&g, &cyl).unwrap();
        let f = caloric_evolve(
            &g,
            &cyl,
            &vec![1.0; layout.ball.len()],
            &vec![vec![1.0; layout.ring.len()]; 10],
        )
        .unwrap();
        assert!(f.values.iter().flatten().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn two_vertex_alternates() {
        let g = two_vertex();
        let cyl = Cylinder::new(0, 2.0, 4.0);
        let f = caloric_evolve(&g, &cyl, &[1.0, 0.0], &vec![vec![]; 4]).unwrap();
        for n in 0..4 {
            assert_eq!(f.hat(n, 0), Some(1.0));
            assert_eq!(f.hat(n, 1), Some(1.0));
        }
        let rep = phi_constant(&g, &cyl).unwrap();
        assert_eq!(rep.value, 1.0);
        assert!(!rep.infinite);
    }

    #[test]
    fn residual_vanishes_on_random_data() {
        let g = random_graph(20, 18, 9);
        let cyl = Cylinder::new(0, 2.0, 12.0);
        let layout = CylinderLayout::new(&g, &cyl).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let init: Vec<f64> = (0..layout.ball.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lateral: Vec<Vec<f64>> = (0..12)
            .map(|_| (0..layout.ring.len()).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let f = caloric_evolve(&g, &cyl, &init, &lateral).unwrap();
        assert!(f.residual(&g) < 1e-12);
        assert!(caloric_evolve(&g, &cyl, &init[1..], &lateral).is_err());
    }

    #[test]
    fn generator_fields_stay_nonnegative() {
        let g = random_graph(15, 10, 2);
        let cyl = Cylinder::new(0, 2.0, 8.0);
        let layout = CylinderLayout::new(&g, &cyl).unwrap();
        let mut gens: Vec<Generator> = layout.ball.iter().map(|&v| Generator::Initial { vertex: v }).collect();
        gens.extend(layout.ring.iter().map(|&v| Generator::Lateral { step: 3, vertex: v }));
        for gen in gens {
            let f = generator_field(&g, &cyl, gen).unwrap();
            assert!(f.values.iter().flatten().all(|&v| v >= 0.0));
        }
    }

    fn random_never_beats_exact(g: &WeightedGraph, cyl: &Cylinder, trials: usize, seed: u64) -> (f64, f64) {
        let r = random_data_sweep(g, cyl, trials, seed).unwrap();
        (r.exact, r.best_random)
    }

    #[test]
    fn exact_constant_dominates_random_data() {
        let (exact, best) = random_never_beats_exact(&path(3), &Cylinder::new(1, 2.0, 8.0), 10_000, 3);
        assert!(exact.is_finite() && exact >= 1.0);
        assert!(best <= exact * (1.0 + 1e-12), "{best} > {exact}");
        let (exact, best) = random_never_beats_exact(&path(9), &Cylinder::new(4, 2.0, 8.0), 10_000, 4);
        assert!(best <= exact * (1.0 + 1e-12), "{best} > {exact}");
        let g = random_graph(25, 20, 6);
        let (exact, best) = random_never_beats_exact(&g, &Cylinder::new(0, 3.0, 12.0), 2_000, 5);
        assert!(best <= exact * (1.0 + 1e-12), "{best} > {exact}");
    }

    #[test]
    fn single_generator_attains_the_constant() {
        let g = path(9);
        let cyl = Cylinder::new(4, 2.0, 8.0);
        let rep = phi_constant(&g, &cyl).unwrap();
        let f = generator_field(&g, &cyl, rep.worst.unwrap()).unwrap();
        assert!((f.harnack_ratio() - rep.value).abs() <= 1e-12 * rep.value);
    }

    #[test]
    fn unreachable_window_is_infinite() {
        // Q+ only reaches step 3; heat from a lateral injection at distance
        // 4 cannot cover the centre in time
        let g = path(11);
        let cyl = Cylinder::new(5, 4.0, 4.0);
        let rep = phi_constant(&g, &cyl).unwrap();
        assert!(rep.infinite);
    }

    #[test]
    fn constant_kernel_has_no_oscillation() {
        let rep = oscillation_decay_check(&two_vertex(), 0, 2.0, 15.0, 1.0).unwrap();
        assert!(rep.steps.iter().all(|s| s.osc_outer == 0.0 && s.osc_inner == 0.0));
        rep.check().unwrap();
    }

    #[test]
    fn lattice_decay_chain() {
        let g = build_lattice_box(1, 64).unwrap();
        let rep = oscillation_decay_check(&g, g.root(), 2.0, 255.0, 2.0).unwrap();
        assert!(!rep.steps.is_empty());
        assert!(rep.steps.iter().all(|s| s.c_h.is_finite()));
        rep.check().unwrap();
    }

    #[test]
    fn gasket_decay_chain() {
        let g = IfsSpec::sierpinski_gasket().build_prefractal(4).unwrap();
        let kappa = 5f64.ln() / 2f64.ln();
        let t = 16f64.powf(kappa) - 1.0;
        let rep = oscillation_decay_check(&g, g.root(), kappa, t, 2.0).unwrap();
        assert!(!rep.steps.is_empty());
        rep.check().unwrap();
    }

    #[test]
    fn holder_precondition() {
        let g = build_lattice_box(1, 50).unwrap();
        assert!(holder_ratio(&g, g.root(), 2.0, &[(3.0, 100), (1.0, 100)]).is_err());
    }

    #[test]
    fn lattice_holder_exponent_is_lipschitz() {
        let g = build_lattice_box(1, 1000).unwrap();
        // centred one standard deviation out, where the Gaussian slope peaks;
        // open balls make the effective radius R - 1, so R starts at 4
        let x = g.root() + 128;
        let grid: Vec<(f64, usize)> = [4.0, 8.0, 16.0, 32.0].iter().map(|&r| (r, 16384)).collect();
        let fit = holder_ratio(&g, x, 2.0, &grid).unwrap();
        assert!((0.5..=1.5).contains(&fit.theta), "theta {}", fit.theta);
    }

    #[test]
    fn gasket_holder_exponent_is_positive() {
        let g = IfsSpec::sierpinski_gasket().build_prefractal(4).unwrap();
        let kappa = 5f64.ln() / 2f64.ln();
        let grid = [(2.0, 700), (3.0, 700), (4.0, 700), (2.0, 1000), (4.0, 1000)];
        let fit = holder_ratio(&g, g.root(), kappa, &grid).unwrap();
        assert!(fit.theta > 0.0);
    }

    #[test]
    fn sweep_and_threshold() {
        let g = build_lattice_box(1, 40).unwrap();
        let rows = phi_sweep(&g, g.root(), 2.0, &[2.0, 4.0, 8.0]).unwrap();
        assert!(rows.iter().all(|r| r.c_h_star.is_finite() && r.c_h_star >= 1.0));
        let cap = rows.iter().map(|r| r.c_h_star).fold(0.0, f64::max);
        assert_eq!(phi_threshold(&rows, cap), Some(2.0));
        assert_eq!(phi_threshold(&rows, 0.5), None);
    }
}
