//! Dirichlet energy, effective resistance, resistance volume, and checks of
//! the on-diagonal and oscillation inequalities satisfied by the smoothed
//! heat kernel.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{VertexId, WeightedGraph};
use crate::kernels::{evolve_distribution, smoothed_kernel, KernelTable};
use crate::linalg::{laplacian_block, SpdSolver};

/// `sum over edges of w_xy (f(x) - f(y))^2`.
pub fn dirichlet_energy(g: &WeightedGraph, f: &[f64]) -> f64 {
    g.edges().iter().map(|e| e.w * (f[e.u] - f[e.v]).powi(2)).sum()
}

/// The same energy computed as `-(L f, f)` in `L^2(nu)`.
pub fn generator_energy(g: &WeightedGraph, f: &[f64]) -> f64 {
    let mut lf = vec![0.0; f.len()];
    g.apply_generator(f, &mut lf);
    -(0..f.len()).map(|x| g.mass(x) * lf[x] * f[x]).sum::<f64>()
}

/// Potential of a unit current from `x` to `y`, grounded at `y`.
pub fn unit_current_potential(g: &WeightedGraph, x: VertexId, y: VertexId) -> Result<Vec<f64>> {
    g.check_vertex(x)?;
    g.check_vertex(y)?;
    if x == y {
        return Err(Error::InvalidArgument("resistance needs two distinct vertices".into()));
    }
    let rows: Vec<VertexId> = (0..g.num_vertices()).filter(|&v| v != y).collect();
    let solver = SpdSolver::new(laplacian_block(g, &rows))?;
    let mut rhs = vec![0.0; rows.len()];
    let ix = rows.iter().position(|&v| v == x).unwrap_or(0);
    rhs[ix] = 1.0;
    let phi = solver.solve(&rhs);
    let mut out = vec![0.0; g.num_vertices()];
    for (&v, p) in rows.iter().zip(phi) {
        out[v] = p;
    }
    Ok(out)
}

pub fn effective_resistance(g: &WeightedGraph, x: VertexId, y: VertexId) -> Result<f64> {
    Ok(unit_current_potential(g, x, y)?[x])
}

/// Resistances from a centre, with the resistance-volume step function.
#[derive(Debug, Clone)]
pub struct ResistanceProfile {
    pub center: VertexId,
    /// `R(center, x)` for every vertex.
    pub resistance: Vec<f64>,
    /// Sorted distinct resistance values.
    pub radii: Vec<f64>,
    /// `V(radii[k])`: measure of the closed ball of that radius.
    pub volume: Vec<f64>,
    green: DMatrix<f64>,
    index: Vec<Option<usize>>,
}

impl ResistanceProfile {
    pub fn new(g: &WeightedGraph, center: VertexId) -> Result<Self> {
        g.check_vertex(center)?;
        let rows: Vec<VertexId> = (0..g.num_vertices()).filter(|&v| v != center).collect();
        let green = SpdSolver::new(laplacian_block(g, &rows))?.inverse();
        let index = crate::linalg::position_map(g.num_vertices(), &rows);
        let resistance: Vec<f64> = (0..g.num_vertices())
            .map(|x| index[x].map_or(0.0, |i| green[(i, i)]))
            .collect();
        let mut order: Vec<VertexId> = (0..g.num_vertices()).collect();
        order.sort_by(|&a, &b| resistance[a].total_cmp(&resistance[b]));
        let scale = resistance.iter().copied().fold(0.0, f64::max).max(1.0);
        let mut radii: Vec<f64> = Vec::new();
        let mut volume: Vec<f64> = Vec::new();
        let mut acc = 0.0;
        for &x in &order {
            let r = resistance[x];
            acc += g.mass(x);
            match radii.last() {
                // values equal up to round-off belong to the same sphere
                Some(&last) if r - last <= 1e-12 * scale => {
                    if let Some(v) = volume.last_mut() {
                        *v = acc;
                    }
                }
                _ => {
                    radii.push(r);
                    volume.push(acc);
                }
            }
        }
        Ok(ResistanceProfile {
            center,
            resistance,
            radii,
            volume,
            green,
            index,
        })
    }

    /// `R(x, y)` from the grounded Green matrix.
    pub fn between(&self, x: VertexId, y: VertexId) -> f64 {
        let g = |a: VertexId, b: VertexId| match (self.index[a], self.index[b]) {
            (Some(i), Some(j)) => self.green[(i, j)],
            _ => 0.0,
        };
        (g(x, x) + g(y, y) - 2.0 * g(x, y)).max(0.0)
    }

    /// `V(r) = nu{x : R(center, x) <= r}`.
    pub fn volume_at(&self, r: f64) -> f64 {
        match self.radii.partition_point(|&s| s <= r) {
            0 => 0.0,
            k => self.volume[k - 1],
        }
    }

    /// `h(r) = r V(r)`.
    pub fn h(&self, r: f64) -> f64 {
        r * self.volume_at(r)
    }

    /// `sup{r >= 0 : h(r) <= m}`. On `[radii[k], radii[k+1])` the function
    /// is linear with slope `volume[k]`; at each radius it jumps up.
    pub fn h_inverse(&self, m: f64) -> f64 {
        let k_max = self.radii.len();
        for k in 0..k_max {
            let v = self.volume[k];
            let candidate = m / v;
            match self.radii.get(k + 1) {
                Some(&next) if candidate >= next => {
                    // h stays <= m up to `next`; continue only if the jump does too
                    if next * self.volume[k + 1] > m {
                        return next;
                    }
                }
                _ => return candidate.max(self.radii[k]),
            }
        }
        m / self.volume[k_max - 1]
    }
}

pub fn resistance_profile(g: &WeightedGraph, center: VertexId) -> Result<ResistanceProfile> {
    ResistanceProfile::new(g, center)
}

/// One evaluated inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub inequality: String,
    pub m: usize,
    pub x: VertexId,
    pub y: VertexId,
    pub lhs: f64,
    pub rhs: f64,
}

impl CheckRecord {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Outcome of an inequality sweep. `records` keeps the tightest case per
/// `(inequality, m)`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: usize,
    pub records: Vec<CheckRecord>,
    pub violations: Vec<CheckRecord>,
}

impl VerificationReport {
    /// Largest `lhs / rhs` over all records of one inequality.
    pub fn worst_ratio(&self, inequality: &str) -> f64 {
        self.records
            .iter()
            .filter(|r| r.inequality == inequality)
            .map(|r| {
                if r.rhs > 0.0 {
                    r.lhs / r.rhs
                } else if r.lhs > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    /// Smallest `rhs - lhs` over all records of one inequality.
    pub fn worst_slack(&self, inequality: &str) -> f64 {
        self.records
            .iter()
            .filter(|r| r.inequality == inequality)
            .map(CheckRecord::slack)
            .fold(f64::INFINITY, f64::min)
    }

    /// First violation as an error.
    pub fn check(&self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::Violation {
                check: v.inequality.clone(),
                location: format!("m={} x={} y={}", v.m, v.x, v.y),
                lhs: v.lhs,
                rhs: v.rhs,
            }),
        }
    }

    fn push(&mut self, rec: CheckRecord, ok: bool) {
        self.checks += 1;
        if !ok {
            self.violations.push(rec.clone());
        }
        self.records.push(rec);
    }
}

pub const ENERGY_IDENTITY: &str = "energy-identity";
pub const ENERGY_MONOTONE: &str = "energy-monotone";
pub const ENERGY_BOUND: &str = "energy-bound";
pub const ON_DIAGONAL: &str = "on-diagonal";
pub const OSCILLATION: &str = "oscillation";

/// Relative tolerance of the energy identity.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Float slack allowed in the inequalities.
pub const INEQUALITY_SLACK: f64 = 1e-12;

fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + INEQUALITY_SLACK * rhs.abs().max(lhs.abs())
}

/// Smoothed kernel `q_m(center, .)` for `m = 0..=steps`.
pub fn smoothed_table(g: &WeightedGraph, center: VertexId, steps: usize) -> Result<KernelTable> {
    smoothed_kernel(&evolve_distribution(g, center, steps + 1)?)
}

/// Energy identity `E(q_m) = (q_2m(rho) - q_2m+2(rho)) / 2`, monotonicity
/// of `E(q_m)`, the bound `E(q_m) <= 2 q_{2 ceil(m/2)}(rho) / m`, and the
/// on-diagonal bound `q_2m(rho) <= 3 h^{-1}(m) / m`, for `m = 1..=max_m`
/// (the identity also at `m = 0`).
pub fn verify_energy_chain(
    g: &WeightedGraph,
    rho: VertexId,
    max_m: usize,
    profile: &ResistanceProfile,
) -> Result<VerificationReport> {
    if max_m < 2 {
        return Err(Error::InvalidArgument(format!("need M >= 2, got {max_m}")));
    }
    if profile.center != rho {
        return Err(Error::InvalidArgument("profile is centred elsewhere".into()));
    }
    let q = smoothed_table(g, rho, 2 * max_m + 2)?;
    let qr = |m: usize| q.row(m).map_or(0.0, |r| r[rho]);
    let energy: Vec<f64> = (0..=max_m + 1)
        .map(|m| dirichlet_energy(g, q.row(m).unwrap_or_default()))
        .collect();
    // once q_m has mixed, its differences are at the rounding level of q and
    // the computed energy is noise of order sum(w) (eps max q)^2
    let q_max = q.iter().flat_map(|(_, r)| r.iter().copied()).fold(0.0, f64::max);
    let noise = g.edges().iter().map(|e| e.w).sum::<f64>() * (16.0 * f64::EPSILON * q_max).powi(2);
    let mut report = VerificationReport::default();
    for m in 0..=max_m {
        let rhs = 0.5 * (qr(2 * m) - qr(2 * m + 2));
        let lhs = energy[m];
        let ok = (lhs - rhs).abs() <= IDENTITY_TOL * qr(2 * m).abs();
        report.push(rec(ENERGY_IDENTITY, m, rho, rho, lhs, rhs), ok);
        if m == 0 {
            continue;
        }
        let next = energy[m + 1];
        report.push(rec(ENERGY_MONOTONE, m, rho, rho, next, lhs), within(next, lhs + noise));
        let bound = 2.0 * qr(2 * m.div_ceil(2)) / m as f64;
        report.push(rec(ENERGY_BOUND, m, rho, rho, lhs, bound), within(lhs, bound));
        let diag = 3.0 * profile.h_inverse(m as f64) / m as f64;
        report.push(rec(ON_DIAGONAL, m, rho, rho, qr(2 * m), diag), within(qr(2 * m), diag));
    }
    Ok(report)
}

fn rec(name: &str, m: usize, x: VertexId, y: VertexId, lhs: f64, rhs: f64) -> CheckRecord {
    CheckRecord {
        inequality: name.to_string(),
        m,
        x,
        y,
        lhs,
        rhs,
    }
}

/// `(q_m(x) - q_m(y))^2 <= 12 R(x,y) h^{-1}(ceil(m/2)) / m^2` for all
/// `m = 1..=max_m` and all given pairs. `None` means every pair.
pub fn verify_oscillation_bound(
    g: &WeightedGraph,
    rho: VertexId,
    max_m: usize,
    pairs: Option<&[(VertexId, VertexId)]>,
    profile: &ResistanceProfile,
) -> Result<VerificationReport> {
    if max_m < 1 {
        return Err(Error::InvalidArgument("need M >= 1".into()));
    }
    if profile.center != rho {
        return Err(Error::InvalidArgument("profile is centred elsewhere".into()));
    }
    let n = g.num_vertices();
    let all: Vec<(VertexId, VertexId)>;
    let pairs = match pairs {
        Some(p) => {
            for &(x, y) in p {
                g.check_vertex(x)?;
                g.check_vertex(y)?;
            }
            p
        }
        None => {
            all = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
            &all
        }
    };
    let q = smoothed_table(g, rho, max_m)?;
    oscillation_checks(pairs, &q, max_m, profile)
}

/// The oscillation bound evaluated on a supplied smoothed table, such as
/// one read back from disk.
pub fn verify_oscillation_bound_on(
    g: &WeightedGraph,
    table: &KernelTable,
    max_m: usize,
    profile: &ResistanceProfile,
) -> Result<VerificationReport> {
    if table.source != profile.center {
        return Err(Error::InvalidArgument("profile is centred elsewhere".into()));
    }
    let n = g.num_vertices();
    if table.iter().any(|(_, row)| row.len() != n) {
        return Err(Error::InvalidArgument(format!("kernel rows must have {n} entries")));
    }
    let pairs: Vec<(VertexId, VertexId)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
    oscillation_checks(&pairs, table, max_m, profile)
}

fn oscillation_checks(
    pairs: &[(VertexId, VertexId)],
    q: &KernelTable,
    max_m: usize,
    profile: &ResistanceProfile,
) -> Result<VerificationReport> {
    let resist: Vec<f64> = pairs.iter().map(|&(x, y)| profile.between(x, y)).collect();
    let mut report = VerificationReport::default();
    for m in 1..=max_m {
        let row = q.row_or_err(m)?;
        let scale = 12.0 * profile.h_inverse(m.div_ceil(2) as f64) / (m * m) as f64;
        let mut worst: Option<(f64, CheckRecord)> = None;
        for (k, &(x, y)) in pairs.iter().enumerate() {
            let lhs = (row[x] - row[y]).powi(2);
            let rhs = scale * resist[k];
            let ok = within(lhs, rhs);
            report.checks += 1;
            let ratio = if rhs > 0.0 {
                lhs / rhs
            } else if lhs > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            if !ok {
                report.violations.push(rec(OSCILLATION, m, x, y, lhs, rhs));
            }
            if worst.as_ref().is_none_or(|(r, _)| ratio > *r) {
                worst = Some((ratio, rec(OSCILLATION, m, x, y, lhs, rhs)));
            }
        }
        if let Some((_, r)) = worst {
            report.records.push(r);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{sample_uniform_tree, IfsSpec};
    use crate::kernels::tests::{path, random_graph};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cycle(n: usize) -> WeightedGraph {
        let coords = (0..n).map(|i| vec![i as f64]).collect();
        WeightedGraph::new(coords, (0..n).map(|i| (i, (i + 1) % n, 1.0)), 0).unwrap()
    }

    #[test]
    fn energy_examples() {
        assert_eq!(dirichlet_energy(&path(3), &[5.0, 5.0, 5.0]), 0.0);
        assert_eq!(dirichlet_energy(&path(2), &[0.0, 1.0]), 1.0);
        assert_eq!(dirichlet_energy(&path(3), &[0.0, 1.0, 2.0]), 2.0);
    }

    proptest! {
        #[test]
        fn energy_forms_agree(seed in any::<u64>()) {
            let g = random_graph(12, 10, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f: Vec<f64> = (0..12).map(|_| rng.random_range(-2.0..2.0)).collect();
            let a = dirichlet_energy(&g, &f);
            let b = generator_energy(&g, &f);
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn resistance_is_a_metric_and_dominates_differences(seed in any::<u64>()) {
            let g = random_graph(10, 8, seed);
            let p = resistance_profile(&g, 0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            for _ in 0..30 {
                let (a, b, c) = (rng.random_range(0..10), rng.random_range(0..10), rng.random_range(0..10));
                prop_assert!(p.between(a, c) <= p.between(a, b) + p.between(b, c) + 1e-12);
                prop_assert!((p.between(a, b) - p.between(b, a)).abs() < 1e-12);
            }
            for _ in 0..10 {
                let f: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
                let e = dirichlet_energy(&g, &f);
                for x in 0..10 {
                    for y in 0..10 {
                        prop_assert!((f[x] - f[y]).powi(2) <= p.between(x, y) * e * (1.0 + 1e-12) + 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn series_parallel_examples() {
        assert!((effective_resistance(&path(3), 0, 2).unwrap() - 2.0).abs() < 1e-14);
        let tri = cycle(3);
        for (x, y) in [(0, 1), (1, 2), (0, 2)] {
            assert!((effective_resistance(&tri, x, y).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        }
        assert!((effective_resistance(&cycle(4), 0, 1).unwrap() - 0.75).abs() < 1e-14);
        assert!(effective_resistance(&tri, 1, 1).is_err());
    }

    #[test]
    fn potential_attains_the_variational_sup() {
        let g = random_graph(9, 7, 3);
        let phi = unit_current_potential(&g, 2, 7).unwrap();
        let r = phi[2];
        // f = phi / R has f(x) - f(y) = 1 and energy 1 / R
        let f: Vec<f64> = phi.iter().map(|v| v / r).collect();
        assert!((dirichlet_energy(&g, &f) - 1.0 / r).abs() < 1e-12 / r);
    }

    #[test]
    fn tree_resistance_is_graph_distance() {
        let t = sample_uniform_tree(60, 9).unwrap();
        let g = t.to_graph().unwrap();
        let p = resistance_profile(&g, 0).unwrap();
        for x in 0..60 {
            for y in 0..60 {
                assert!((p.between(x, y) - t.distance(x, y) as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn h_inverse_hand_values() {
        let p = resistance_profile(&path(3), 0).unwrap();
        assert_eq!(p.radii.len(), 3);
        assert!(
            (p.volume[0] - 1.0).abs() < 1e-12 && (p.volume[1] - 3.0).abs() < 1e-12 && (p.volume[2] - 4.0).abs() < 1e-12
        );
        assert!((p.h_inverse(2.0) - 1.0).abs() < 1e-12);
        assert!((p.h_inverse(1.0) - 1.0).abs() < 1e-12);
        assert!((p.h_inverse(0.5) - 0.5).abs() < 1e-12);
        assert!((p.h_inverse(8.0) - 2.0).abs() < 1e-12);
        assert!((p.h_inverse(12.0) - 3.0).abs() < 1e-12);
        let two = resistance_profile(&path(2), 0).unwrap();
        assert!((two.h_inverse(2.0) - 1.0).abs() < 1e-12);
        assert!((two.h_inverse(4.0) - 2.0).abs() < 1e-12);
    }

    /// Brute-force check of the sup definition on a fine grid of r.
    #[test]
    fn h_inverse_matches_grid_search() {
        let g = random_graph(15, 10, 21);
        let p = resistance_profile(&g, 0).unwrap();
        let top = p.radii.last().unwrap() * 1.5;
        for &m in &[0.3, 1.0, 2.5, 7.0, 20.0] {
            let grid_sup = (0..=200_000)
                .map(|i| top * i as f64 / 200_000.0)
                .filter(|&r| p.h(r) <= m)
                .fold(0.0, f64::max);
            let exact = p.h_inverse(m);
            assert!(
                exact >= grid_sup - 1e-12 && exact - grid_sup <= top / 200_000.0 + 1e-12,
                "m={m}"
            );
        }
    }

    #[test]
    fn energy_chain_small_graphs() {
        let two = path(2);
        let p = resistance_profile(&two, 0).unwrap();
        let rep = verify_energy_chain(&two, 0, 10, &p).unwrap();
        rep.check().unwrap();
        for r in rep.records.iter().filter(|r| r.inequality == ENERGY_IDENTITY) {
            assert_eq!(r.lhs, 0.0);
            assert_eq!(r.rhs, 0.0);
        }
        let g = path(3);
        let p = resistance_profile(&g, 0).unwrap();
        let rep = verify_energy_chain(&g, 0, 10, &p).unwrap();
        rep.check().unwrap();
        let diag = rep
            .records
            .iter()
            .find(|r| r.inequality == ON_DIAGONAL && r.m == 1)
            .unwrap();
        assert_eq!(diag.lhs, 0.25);
        assert!((diag.rhs - 3.0).abs() < 1e-12);
        assert!(verify_energy_chain(&g, 0, 1, &p).is_err());
    }

    /// Hand computation on a-b-c from a: q_0 = (1/2, 1/4, 0) gives energy
    /// 1/8 while q_0(a) - q_2(a) = 1/4.
    #[test]
    fn identity_carries_a_half() {
        let g = path(3);
        let q = smoothed_table(&g, 0, 4).unwrap();
        assert_eq!(q.row(0).unwrap(), &[0.5, 0.25, 0.0]);
        assert_eq!(dirichlet_energy(&g, q.row(0).unwrap()), 0.125);
        assert_eq!(q.row(0).unwrap()[0] - q.row(2).unwrap()[0], 0.25);
    }

    #[test]
    fn gasket_chain_and_oscillation() {
        let g = IfsSpec::sierpinski_gasket().build_prefractal(3).unwrap();
        let p = resistance_profile(&g, 0).unwrap();
        verify_energy_chain(&g, 0, 200, &p).unwrap().check().unwrap();
        let rep = verify_oscillation_bound(&g, 0, 200, None, &p).unwrap();
        rep.check().unwrap();
        assert!(rep.worst_ratio(OSCILLATION) < 1.0);
        let diag = verify_oscillation_bound(&g, 0, 20, Some(&[(3, 3)]), &p).unwrap();
        assert!(diag.records.iter().all(|r| r.lhs == 0.0));
    }

    #[test]
    fn violations_are_named() {
        let g = path(3);
        let p = resistance_profile(&g, 0).unwrap();
        let mut rep = verify_oscillation_bound(&g, 0, 5, None, &p).unwrap();
        rep.violations.push(rec(OSCILLATION, 3, 0, 2, 1.0, 0.5));
        match rep.check() {
            Err(Error::Violation { check, .. }) => assert_eq!(check, OSCILLATION),
            other => panic!("unexpected {other:?}"),
        }
    }
}
