//! Conductance renormalization on nested fractals: replicate a boundary
//! network into every first-level cell, trace back onto the boundary, and
//! find the scale factor that leaves the result invariant.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::ifs::IfsSpec;
use crate::families::weights::{assign_weights, cell_key, WeightLaw};
use crate::graph::{VertexId, WeightedGraph};
use crate::linalg::{laplacian, schur_complement};

/// Conductances on the unordered pairs of a `size`-point set, stored in
/// lexicographic pair order `(0,1), (0,2), ..., (size-2, size-1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductanceSet {
    pub size: usize,
    pub values: Vec<f64>,
}

pub fn pair_index(size: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    a * (2 * size - a - 1) / 2 + (b - a - 1)
}

impl ConductanceSet {
    pub fn new(size: usize, values: Vec<f64>) -> Result<Self> {
        if size < 2 || values.len() != size * (size - 1) / 2 {
            return Err(Error::InvalidArgument(format!(
                "{} values do not fit {size} points",
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("conductances must be finite and >= 0".into()));
        }
        let c = ConductanceSet { size, values };
        if !c.is_connected() {
            return Err(Error::Connectivity("conductance network is degenerate".into()));
        }
        Ok(c)
    }

    pub fn uniform(size: usize, value: f64) -> Self {
        ConductanceSet {
            size,
            values: vec![value; size * (size - 1) / 2],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.values[pair_index(self.size, i, j)]
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        ConductanceSet {
            size: self.size,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn normalized(&self) -> Self {
        self.scaled(1.0 / self.max())
    }

    /// `sum over ordered pairs x != y of C_xy (f(x) - f(y))^2`.
    pub fn energy(&self, f: &[f64]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.size {
            for j in 0..self.size {
                if i != j {
                    e += self.get(i, j) * (f[i] - f[j]).powi(2);
                }
            }
        }
        e
    }

    pub fn max_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.size];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            for (j, s) in seen.iter_mut().enumerate() {
                if !*s && self.get(i, j) > 0.0 {
                    *s = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn from_laplacian(m: &DMatrix<f64>) -> Self {
        let size = m.nrows();
        let mut values = Vec::with_capacity(size * (size - 1) / 2);
        for i in 0..size {
            for j in i + 1..size {
                values.push((-m[(i, j)]).max(0.0));
            }
        }
        ConductanceSet { size, values }
    }
}

/// Level-one network: one copy of `cells[i]` on each cell `psi_i(V0)`.
/// Conductances on coincident pairs add.
pub fn replicate_cells(ifs: &IfsSpec, cells: &[ConductanceSet]) -> Result<WeightedGraph> {
    let skeleton = ifs.build_prefractal(1)?;
    let k = ifs.boundary_size();
    let ids = skeleton.cells().unwrap_or_default();
    if cells.len() != ids.len() || cells.iter().any(|c| c.size != k) {
        return Err(Error::InvalidArgument(format!(
            "need {} conductance sets on {k} points",
            ids.len()
        )));
    }
    let mut edges = Vec::new();
    for (c, cell) in ids.iter().zip(cells) {
        for i in 0..k {
            for j in i + 1..k {
                let w = cell.get(i, j);
                if w > 0.0 {
                    edges.push((c[i], c[j], w));
                }
            }
        }
    }
    let g = WeightedGraph::new(skeleton.all_coords().to_vec(), edges, 0)
        .map_err(|e| Error::Connectivity(format!("replicated network: {e}")))?;
    g.with_cells(ids.to_vec())
}

/// `E^1_C`: the same `C` in every first-level cell.
pub fn replicate(ifs: &IfsSpec, c: &ConductanceSet) -> Result<WeightedGraph> {
    replicate_cells(ifs, &vec![c.clone(); ifs.branches()])
}

/// Schur complement of the network Laplacian onto `b`, read back as pair
/// conductances in the order of `b`.
pub fn trace_to(g: &WeightedGraph, b: &[VertexId]) -> Result<ConductanceSet> {
    if b.len() < 2 {
        return Err(Error::InvalidArgument("trace needs at least two vertices".into()));
    }
    for &v in b {
        g.check_vertex(v)?;
    }
    let s = schur_complement(&laplacian(g), b)?;
    Ok(ConductanceSet::from_laplacian(&s))
}

/// `Lambda(C)`: trace of the replicated network back onto `V0`.
pub fn renormalize(ifs: &IfsSpec, c: &ConductanceSet) -> Result<ConductanceSet> {
    let net = replicate(ifs, c)?;
    let boundary: Vec<VertexId> = (0..ifs.boundary_size()).collect();
    trace_to(&net, &boundary)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPoint {
    /// Normalized so that the largest conductance is 1.
    pub conductances: ConductanceSet,
    pub lambda: f64,
    pub iterations: usize,
    /// Max-norm change of successive normalized iterates.
    pub trajectory: Vec<f64>,
}

pub const FIXED_POINT_CAP: usize = 10_000;

/// Iterates `C -> Lambda(C) / max Lambda(C)` to a fixed point and returns
/// `lambda = max C / max Lambda(C)` there.
pub fn lambda_fixed_point(ifs: &IfsSpec, c0: &ConductanceSet, tol: f64) -> Result<FixedPoint> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let mut c = ConductanceSet::new(c0.size, c0.values.clone())?.normalized();
    let mut trajectory = Vec::new();
    for it in 1..=FIXED_POINT_CAP {
        let next = renormalize(ifs, &c)?;
        let norm = next.max();
        let next = next.scaled(1.0 / norm);
        let change = next.max_distance(&c);
        trajectory.push(change);
        c = next;
        if change < tol {
            let lambda = 1.0 / renormalize(ifs, &c)?.max();
            if lambda <= 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "renormalization factor {lambda} is not > 1"
                )));
            }
            return Ok(FixedPoint {
                conductances: c,
                lambda,
                iterations: it,
                trajectory,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: FIXED_POINT_CAP,
        last_change: trajectory.last().copied().unwrap_or(f64::NAN),
    })
}

/// Per-cell boundary conductances of the level-`n` network under a
/// cell-symmetric law, in the cell order of [`IfsSpec::cells`].
pub fn cell_conductances(ifs: &IfsSpec, law: &WeightLaw, n: usize) -> Result<Vec<ConductanceSet>> {
    law.validate()?;
    let k = ifs.boundary_size();
    let cells = ifs.branches().pow(n as u32);
    Ok((0..cells)
        .map(|c| ConductanceSet {
            size: k,
            values: (0..k * (k - 1) / 2).map(|p| law.draw(cell_key(c, p))).collect(),
        })
        .collect())
}

/// `Lambda^n(mu)` by one Schur complement of the whole level-`n` network.
pub fn trace_level_direct(ifs: &IfsSpec, law: &WeightLaw, n: usize) -> Result<ConductanceSet> {
    let g = ifs.build_prefractal(n)?;
    let mut cell_law = *law;
    cell_law.kind = crate::families::WeightKind::CellSymmetric;
    let g = assign_weights(&g, &cell_law)?;
    let boundary: Vec<VertexId> = (0..ifs.boundary_size()).collect();
    trace_to(&g, &boundary)
}

/// `Lambda^n(mu)` by tracing the deepest cells first. Cells only meet at
/// boundary points of their parents, so eliminating each parent's interior
/// separately is the same block elimination as the direct complement.
pub fn trace_level_nested(ifs: &IfsSpec, law: &WeightLaw, n: usize) -> Result<ConductanceSet> {
    let mut cells = cell_conductances(ifs, law, n)?;
    let branches = ifs.branches();
    let boundary: Vec<VertexId> = (0..ifs.boundary_size()).collect();
    while cells.len() > 1 {
        cells = cells
            .chunks(branches)
            .map(|children| trace_to(&replicate_cells(ifs, children)?, &boundary))
            .collect::<Result<_>>()?;
    }
    cells.pop().ok_or_else(|| Error::InvalidArgument("no cells".into()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomogenizationSample {
    pub seed: u64,
    pub n: usize,
    pub values: Vec<f64>,
}

/// `lambda^n Lambda^n(mu)` for each seed of a cell-symmetric law.
pub fn homogenize(
    ifs: &IfsSpec,
    law: &WeightLaw,
    n: usize,
    seeds: &[u64],
    lambda: f64,
) -> Result<Vec<HomogenizationSample>> {
    law.validate()?;
    let vertices = ifs.boundary_size() * ifs.branches().pow(n as u32);
    if vertices > 5_000_000 {
        return Err(Error::Capacity(format!(
            "level {n} has about {vertices} cell points; limit is 5000000"
        )));
    }
    let scale = lambda.powi(n as i32);
    seeds
        .par_iter()
        .map(|&seed| {
            let mut l = *law;
            l.seed = seed;
            let c = trace_level_nested(ifs, &l, n)?;
            Ok(HomogenizationSample {
                seed,
                n,
                values: c.scaled(scale).values,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub d_f: f64,
    pub d_w: f64,
    pub kappa: f64,
    pub d_c: f64,
}

/// Fractal, walk, resistance and chemical exponents.
pub fn exponents(n: f64, l: f64, lambda: f64, alpha: f64) -> Result<Exponents> {
    if !(n > 1.0 && l > 1.0 && lambda > 1.0 && alpha > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need N, L, lambda, alpha > 1; got N={n}, L={l}, lambda={lambda}, alpha={alpha}"
        )));
    }
    let la = alpha.ln();
    let e = Exponents {
        d_f: n.ln() / la,
        d_w: (n * lambda).ln() / la,
        kappa: lambda.ln() / la,
        d_c: la / l.ln(),
    };
    debug_assert!((e.d_w - e.d_f - e.kappa).abs() < 1e-12);
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::tests::{path, random_graph};
    use crate::linalg::SpdSolver;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pair_indexing() {
        let mut k = 0;
        for i in 0..5 {
            for j in i + 1..5 {
                assert_eq!(pair_index(5, i, j), k);
                assert_eq!(pair_index(5, j, i), k);
                k += 1;
            }
        }
    }

    #[test]
    fn replicate_examples() {
        let gasket = IfsSpec::sierpinski_gasket();
        let net = replicate(&gasket, &ConductanceSet::uniform(3, 1.0)).unwrap();
        assert_eq!((net.num_vertices(), net.num_edges()), (6, 9));
        assert!(net.edges().iter().all(|e| e.w == 1.0));
        let vicsek = IfsSpec::vicsek_cross();
        let net = replicate(&vicsek, &ConductanceSet::uniform(4, 1.0)).unwrap();
        assert_eq!((net.num_vertices(), net.num_edges()), (16, 30));
        assert!(ConductanceSet::new(3, vec![1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn trace_examples() {
        let s = trace_to(&path(3), &[0, 2]).unwrap();
        assert!((s.values[0] - 0.5).abs() < 1e-15);
        let g = random_graph(6, 5, 1);
        let all: Vec<usize> = (0..6).collect();
        let t = trace_to(&g, &all).unwrap();
        for e in g.edges() {
            assert!((t.get(e.u, e.v) - e.w).abs() < 1e-15);
        }
        let lam = renormalize(&IfsSpec::sierpinski_gasket(), &ConductanceSet::uniform(3, 1.0)).unwrap();
        for v in &lam.values {
            assert!((v - 0.6).abs() < 1e-14);
        }
    }

    /// The trace energy equals the minimum over extensions, found here by
    /// solving the interior Dirichlet problem independently.
    #[test]
    fn trace_energy_is_the_constrained_minimum() {
        let g = random_graph(10, 9, 5);
        let b = [0usize, 3, 7];
        let t = trace_to(&g, &b).unwrap();
        let interior: Vec<usize> = (0..10).filter(|v| !b.contains(v)).collect();
        let lap = laplacian(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let fb: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut f = vec![0.0; 10];
            for (k, &v) in b.iter().enumerate() {
                f[v] = fb[k];
            }
            let lii = DMatrix::from_fn(interior.len(), interior.len(), |i, j| lap[(interior[i], interior[j])]);
            let rhs: Vec<f64> = interior
                .iter()
                .map(|&i| -b.iter().enumerate().map(|(k, &v)| lap[(i, v)] * fb[k]).sum::<f64>())
                .collect();
            let fi = SpdSolver::new(lii).unwrap().solve(&rhs);
            for (k, &v) in interior.iter().enumerate() {
                f[v] = fi[k];
            }
            let min = crate::resistance::dirichlet_energy(&g, &f);
            // ordered-pair energy counts every pair twice
            assert!((t.energy(&fb) / 2.0 - min).abs() < 1e-12);
            // any other extension costs at least as much
            let mut other = f.clone();
            other[interior[0]] += 0.1;
            assert!(crate::resistance::dirichlet_energy(&g, &other) >= min);
        }
    }

    proptest! {
        #[test]
        fn trace_is_idempotent(seed in any::<u64>()) {
            let g = random_graph(9, 8, seed);
            let b = [1usize, 4, 6, 8];
            let once = trace_to(&g, &b).unwrap();
            let coords = vec![vec![0.0]; 4];
            let edges: Vec<(usize, usize, f64)> = (0..4)
                .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
                .filter_map(|(i, j)| {
                    let w = once.get(i, j);
                    (w > 0.0).then_some((i, j, w))
                })
                .collect();
            let h = WeightedGraph::new(coords, edges, 0).unwrap();
            let twice = trace_to(&h, &[0, 1, 2, 3]).unwrap();
            prop_assert!(once.max_distance(&twice) < 1e-12 * once.max().max(1.0));
        }
    }

    #[test]
    fn gasket_lambda() {
        let gasket = IfsSpec::sierpinski_gasket();
        let fp = lambda_fixed_point(&gasket, &ConductanceSet::uniform(3, 1.0), 1e-13).unwrap();
        assert!((fp.lambda - 5.0 / 3.0).abs() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let c0 = ConductanceSet::new(3, (0..3).map(|_| rng.random_range(0.2..5.0)).collect()).unwrap();
            let fp2 = lambda_fixed_point(&gasket, &c0, 1e-13).unwrap();
            assert!((fp2.lambda - fp.lambda).abs() < 1e-8);
            let scaled = lambda_fixed_point(&gasket, &c0.scaled(7.5), 1e-13).unwrap();
            assert!((scaled.lambda - fp.lambda).abs() < 1e-8);
        }
    }

    #[test]
    fn vicsek_lambda() {
        let vicsek = IfsSpec::vicsek_cross();
        let fp = lambda_fixed_point(&vicsek, &ConductanceSet::uniform(4, 1.0), 1e-13).unwrap();
        assert!((fp.lambda - 3.0).abs() < 1e-10, "lambda {}", fp.lambda);
    }

    #[test]
    fn nested_trace_equals_direct_complement() {
        for spec in [IfsSpec::sierpinski_gasket(), IfsSpec::vicsek_cross()] {
            for n in 0..=3 {
                let law = WeightLaw::cell_symmetric(1.0, 2.0, 40 + n as u64);
                let a = trace_level_direct(&spec, &law, n).unwrap();
                let b = trace_level_nested(&spec, &law, n).unwrap();
                assert!(a.max_distance(&b) < 1e-12, "{} n={n}", spec.name);
            }
        }
    }

    #[test]
    fn constant_fixed_point_has_no_variance() {
        let gasket = IfsSpec::sierpinski_gasket();
        let samples = homogenize(&gasket, &WeightLaw::constant(1.0), 3, &[1, 2, 3], 5.0 / 3.0).unwrap();
        for s in &samples {
            for v in &s.values {
                assert!((v - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exponent_examples() {
        let v = exponents(5.0, 3.0, 3.0, 3.0).unwrap();
        assert!((v.d_f - 5f64.ln() / 3f64.ln()).abs() < 1e-15);
        assert!((v.d_w - 15f64.ln() / 3f64.ln()).abs() < 1e-15);
        assert!((v.kappa - 1.0).abs() < 1e-15);
        let g = exponents(3.0, 2.0, 5.0 / 3.0, 2.0).unwrap();
        assert!((g.d_w - 5f64.ln() / 2f64.ln()).abs() < 1e-14);
        assert!((g.d_w - g.d_f - g.kappa).abs() < 1e-14);
        assert!(exponents(3.0, 2.0, 1.0, 2.0).is_err());
    }
}
