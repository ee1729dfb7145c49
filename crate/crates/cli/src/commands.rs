//! One function per subcommand. Each writes its tables into `out` and
//! returns the first failed assertion-class check, if any.

use heatlab_core::families::{assign_weights, WeightLaw};
use heatlab_core::gh::{self, Mode, PointedKernelSpace, EXACT_CAP};
use heatlab_core::harnack::{oscillation_decay_check, phi_sweep, random_data_sweep, Cylinder};
use heatlab_core::kernels::{Flavor, KernelTable};
use heatlab_core::llt::{
    einstein_ratios, exit_time_fit, lattice_llt, scaling_for, tree_distribution_stability, ScalingFamily,
};
use heatlab_core::renorm::{exponents, homogenize, lambda_fixed_point, ConductanceSet};
use heatlab_core::resistance::{
    resistance_profile, smoothed_table, verify_energy_chain, verify_oscillation_bound, verify_oscillation_bound_on,
    VerificationReport,
};
use heatlab_core::stats::{mean, sample_sd};
use heatlab_core::{VertexId, WeightedGraph};

use crate::config::{read, ExperimentConfig, GraphSpec};
use crate::error::CliError;
use crate::output::{float, parse_float, Artifacts, Manifest};

type Check = Option<CliError>;

fn graph_of(cfg: &ExperimentConfig, spec: &GraphSpec) -> Result<WeightedGraph, CliError> {
    let g = spec.build()?;
    Ok(match &cfg.weights {
        Some(law) => assign_weights(&g, law)?,
        None => g,
    })
}

fn main_graph(cfg: &ExperimentConfig) -> Result<WeightedGraph, CliError> {
    graph_of(cfg, cfg.graph.as_ref().expect("validated"))
}

fn record_graph_seeds(cfg: &ExperimentConfig, out: &mut Artifacts) {
    if let Some(GraphSpec::Tree { seed, .. }) = &cfg.graph {
        out.seed("graph", *seed);
    }
    if let Some(w) = &cfg.weights {
        out.seed("weights", w.seed);
    }
}

fn center_of(g: &WeightedGraph, c: Option<VertexId>, key: &str) -> Result<VertexId, CliError> {
    let c = c.unwrap_or(g.root());
    g.check_vertex(c).map_err(|e| CliError::Schema {
        pointer: key.into(),
        message: e.to_string(),
    })?;
    Ok(c)
}

fn first_failure(r: Result<(), heatlab_core::Error>) -> Check {
    r.err().map(CliError::from)
}

pub fn build(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Check, CliError> {
    let spec = cfg.graph.as_ref().expect("validated");
    let specs: Vec<GraphSpec> = match (&cfg.levels, spec.level()) {
        (Some(levels), Some(_)) => levels.iter().map(|&l| spec.with_level(l)).collect(),
        _ => vec![spec.clone()],
    };
    record_graph_seeds(cfg, out);
    let mut rows = Vec::new();
    for s in &specs {
        let g = graph_of(cfg, s)?;
        let tag = s
            .level()
            .map_or_else(|| "graph".to_string(), |l| format!("graph_level{l}"));
        out.raw(&format!("{tag}.json"), g.to_json()?.as_bytes())?;
        let ecc = g.hop_distances(g.root()).into_iter().flatten().max().unwrap_or(0);
        rows.push(vec![
            s.level().map_or_else(String::new, |l| l.to_string()),
            g.num_vertices().to_string(),
            g.num_edges().to_string(),
            float(g.total_mass()),
            g.root().to_string(),
            ecc.to_string(),
        ]);
    }
    out.csv(
        "build.csv",
        &["level", "vertices", "edges", "total_mass", "root", "root_eccentricity"],
        &rows,
    )?;
    Ok(None)
}

fn check_rows(reports: &[&VerificationReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .flat_map(|r| r.records.iter())
        .map(|c| {
            vec![
                c.inequality.clone(),
                c.m.to_string(),
                c.x.to_string(),
                c.y.to_string(),
                float(c.lhs),
                float(c.rhs),
                float(c.slack()),
            ]
        })
        .collect()
}

const CHECK_HEADER: [&str; 7] = ["inequality", "m", "x", "y", "lhs", "rhs", "slack"];

/// Reads `kernel_rows.csv` (`m,vertex,q`) back into a smoothed table.
fn load_kernel_rows(path: &std::path::Path, center: VertexId, n: usize) -> Result<KernelTable, CliError> {
    let text = read(path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut steps: Vec<usize> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let bad = || CliError::Io(format!("{}: malformed row {rec:?}", path.display()));
        let m: usize = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let v: usize = rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let q = parse_float(rec.get(2).ok_or_else(bad)?)?;
        if steps.last() != Some(&m) {
            steps.push(m);
            rows.push(vec![f64::NAN; n]);
        }
        *rows.last_mut().expect("pushed").get_mut(v).ok_or_else(bad)? = q;
    }
    Ok(KernelTable::from_rows(center, Flavor::Smoothed, steps, rows)?)
}

pub fn kernel(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Check, CliError> {
    let p = cfg.kernel.as_ref().expect("validated");
    let g = main_graph(cfg)?;
    record_graph_seeds(cfg, out);
    let rho = center_of(&g, p.center, "kernel.center")?;
    let profile = resistance_profile(&g, rho)?;
    if let Some(file) = &p.kernel_file {
        let table = load_kernel_rows(file, rho, g.num_vertices())?;
        let osc = verify_oscillation_bound_on(&g, &table, p.max_m, &profile)?;
        out.csv("checks.csv", &CHECK_HEADER, &check_rows(&[&osc]))?;
        return Ok(first_failure(osc.check()));
    }
    let q = smoothed_table(&g, rho, 2 * p.max_m + 2)?;
    let mut krows = Vec::new();
    let mut rows = Vec::new();
    for (m, row) in q.iter() {
        if m <= p.max_m {
            krows.extend(
                row.iter()
                    .enumerate()
                    .map(|(v, x)| vec![m.to_string(), v.to_string(), float(*x)]),
            );
            rows.push(vec![
                m.to_string(),
                float(row[rho]),
                float(heatlab_core::resistance::dirichlet_energy(&g, row)),
                float(heatlab_core::kernels::total_mass(&g, row)),
            ]);
        }
    }
    out.csv("kernel.csv", &["m", "q_center", "energy", "mass"], &rows)?;
    out.csv("kernel_rows.csv", &["m", "vertex", "q"], &krows)?;
    let chain = verify_energy_chain(&g, rho, p.max_m, &profile)?;
    let osc = verify_oscillation_bound(&g, rho, p.max_m, None, &profile)?;
    out.csv("checks.csv", &CHECK_HEADER, &check_rows(&[&chain, &osc]))?;
    Ok(first_failure(chain.check()).or_else(|| first_failure(osc.check())))
}

pub fn resistance(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Check, CliError> {
    let p = cfg.resistance.clone().unwrap_or(crate::config::ResistanceParams {
        center: None,
        radii: None,
    });
    let g = main_graph(cfg)?;
    record_graph_seeds(cfg, out);
    let c = center_of(&g, p.center, "resistance.center")?;
    let prof = resistance_profile(&g, c)?;
    let hops = g.hop_distances(c);
    let rows: Vec<Vec<String>> = (0..g.num_vertices())
        .map(|v| {
            vec![
                v.to_string(),
                float(prof.resistance[v]),
                hops[v].map_or_else(String::new, |d| d.to_string()),
            ]
        })
        .collect();
    out.csv("resistance.csv", &["vertex", "resistance", "hop_distance"], &rows)?;
    let radii = p.radii.unwrap_or_else(|| prof.radii.clone());
    let rows: Vec<Vec<String>> = radii
        .iter()
        .map(|&r| vec![float(r), float(prof.volume_at(r)), float(prof.h(r))])
        .collect();
    out.csv("volume.csv", &["radius", "volume", "h"], &rows)?;
    Ok(None)
}

pub fn renorm(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Check, CliError> {
    let p = cfg.renorm.as_ref().expect("validated");
    let ifs = p.ifs.spec();
    let k = ifs.boundary_size();
    let pairs = k * (k - 1) / 2;
    let tol = cfg.tolerances.fixed_point;
    let mut starts = vec![("uniform".to_string(), ConductanceSet::uniform(k, 1.0))];
    if p.random_starts > 0 {
        let base = cfg.seed.expect("validated");
        for i in 0..p.random_starts as u64 {
            let law = WeightLaw::uniform(0.5, 2.0, base + i);
            out.seed(format!("start{i}"), base + i);
            let values = (0..pairs).map(|j| law.draw(j as u64)).collect();
            starts.push((format!("random{i}"), ConductanceSet::new(k, values)?));
        }
    }
    let mut fixed = Vec::new();
    for (name, c0) in &starts {
        fixed.push((name, lambda_fixed_point(&ifs, c0, tol)?));
    }
    let lambda0 = fixed[0].1.lambda;
    let rows: Vec<Vec<String>> = fixed
        .iter()
        .map(|(name, f)| {
            vec![
                name.to_string(),
                float(f.lambda),
                f.iterations.to_string(),
                float(f.trajectory.last().copied().unwrap_or(0.0)),
                float(f.conductances.max_distance(&fixed[0].1.conductances)),
            ]
        })
        .collect();
    out.csv(
        "fixed_point.csv",
        &[
            "start",
            "lambda",
            "iterations",
            "last_change",
            "distance_to_uniform_start",
        ],
        &rows,
    )?;
    let c = &fixed[0].1.conductances;
    let rows: Vec<Vec<String>> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .map(|(i, j)| vec![i.to_string(), j.to_string(), float(c.get(i, j))])
        .collect();
    out.csv("conductances.csv", &["i", "j", "value"], &rows)?;
    let ratio = ifs.ratio as f64;
    let e = exponents(ifs.branches() as f64, ratio, lambda0, ratio)?;
    out.csv(
        "exponents.csv",
        &["branches", "ratio", "lambda", "d_f", "d_w", "kappa", "d_c"],
        &[vec![
            ifs.branches().to_string(),
            float(ratio),
            float(lambda0),
            float(e.d_f),
            float(e.d_w),
            float(e.kappa),
            float(e.d_c),
        ]],
    )?;
    if let Some(h) = &p.homogenization {
        let base = cfg.seed.expect("validated");
        let seeds: Vec<u64> = (0..h.samples as u64).map(|i| base + i).collect();
        out.seed("homogenization", base);
        let mut rows = Vec::new();
        for &n in cfg.levels.as_ref().expect("validated") {
            let samples = homogenize(&ifs, &WeightLaw::uniform(h.low, h.high, base), n, &seeds, lambda0)?;
            let first: Vec<f64> = samples.iter().map(|s| s.values[0]).collect();
            rows.push(vec![
                n.to_string(),
                h.samples.to_string(),
                float(mean(&first)),
                float(sample_sd(&first)),
            ]);
        }
        out.csv("homogenization.csv", &["level", "samples", "mean_c01", "sd_c01"], &rows)?;
    }
    let spread = fixed
        .iter()
        .map(|(_, f)| (f.lambda - lambda0).abs())
        .fold(0.0, f64::max);
    if spread > cfg.tolerances.lambda_spread {
        return Ok(Some(CliError::assertion(
            "lambda invariance",
            format!("spread {spread:e} exceeds {:e}", cfg.tolerances.lambda_spread),
        )));
    }
    Ok(None)
}

pub fn harnack(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Check, CliError> {
    let p = cfg.harnack.as_ref().expect("validated");
    let g = main_graph(cfg)?;
    record_graph_seeds(cfg, out);
    let x = center_of(&g, p.center, "harnack.center")?;
    let rows = phi_sweep(&g, x, p.kappa, &p.radii)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                float(r.radius),
                float(r.horizon),
                float(r.c_h_star),
                r.generators.to_string(),
                r.infinite.to_string(),
            ]
        })
        .collect();
    out.csv(
        "phi.csv",
        &["radius", "horizon", "c_h_star", "generators", "infinite"],
        &csv_rows,
    )?;
    let mut failure: Check = None;
    if p.random_trials > 0 {
        let base = cfg.seed.expect("validated");
        let mut rows = Vec::new();
        for (i, &r) in p.radii.iter().enumerate() {
            let seed = base + i as u64;
            out.seed(format!("random_data_radius{i}"), seed);
            let sweep = random_data_sweep(&g, &Cylinder::new(x, r, r.powf(p.kappa)), p.random_trials, seed)?;
            rows.push(vec![
                float(r),
                float(sweep.exact),
                float(sweep.best_random),
                sweep.trials.to_string(),
            ]);
            if failure.is_none() {
                failure = first_failure(sweep.check());
            }
        }
        out.csv(
            "random_data.csv",
            &["radius", "c_h_star", "best_random_ratio", "trials"],
            &rows,
        )?;
    }
    if let Some(d) = &p.decay {
        let rep = oscillation_decay_check(&g, x, p.kappa, d.horizon, d.min_radius)?;
        let rows: Vec<Vec<String>> = rep
            .steps
            .iter()
            .map(|s| {
                vec![
                    s.k.to_string(),
                    float(s.radius),
                    float(s.c_h),
                    float(s.osc_outer),
                    float(s.osc_inner),
                    float(s.bound),
                    s.holds.to_string(),
                ]
            })
            .collect();
        out.csv(
            "decay.csv",
            &["k", "radius", "c_h_star", "osc_outer", "osc_inner", "bound", "holds"],
            &rows,
        )?;
        if failure.is_none() {
            failure = first_failure(rep.check());
        }
    }
    Ok(failure)
}

fn kappa_of(family: &ScalingFamily) -> Result<f64, CliError> {
    Ok(match *family {
        // resistance grows like r^(2-d) on Z^d
        ScalingFamily::Lattice { dim } => 2.0 - dim as f64,
        ScalingFamily::Tree => 1.0,
        ScalingFamily::Nested { alpha, lambda, .. } => {
            lambda
                .ok_or_else(|| CliError::Schema {
                    pointer: "llt.scaling.lambda".into(),
                    message: "required".into(),
                })?
                .ln()
                / alpha.ln()
        }
        ScalingFamily::Carpet {
            dim: _,
            branches,
            side,
            walk_dimension,
        } => {
            let dw = walk_dimension.ok_or_else(|| CliError::Schema {
                pointer: "llt.scaling.walk_dimension".into(),
                message: "required".into(),
            })?;
            dw - (branches as f64).ln() / side.ln()
        }
    })
}

fn d_f_of(family: &ScalingFamily) -> f64 {
    match *family {
        ScalingFamily::Lattice { dim } => dim as f64,
        ScalingFamily::Tree => 2.0,
        ScalingFamily::Nested { branches, alpha, .. } => (branches as f64).ln() / alpha.ln(),
        ScalingFamily::Carpet { branches, side, .. } => (branches as f64).ln() / side.ln(),
    }
}

pub fn llt(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Check, CliError> {
    let p = cfg.llt.as_ref().expect("validated");
    let times = cfg.times.as_ref().expect("validated");
    match p.scaling {
        ScalingFamily::Tree => {
            let base = cfg.seed.expect("validated");
            out.seed("trees", base);
            let sizes = p.sizes.as_ref().expect("validated");
            let rows = tree_distribution_stability(sizes, base, p.samples, times)?;
            let rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![r.n_small.to_string(), r.n_large.to_string(), float(r.t), float(r.ks)])
                .collect();
            out.csv("ks.csv", &["n_small", "n_large", "t", "ks"], &rows)?;
        }
        ScalingFamily::Lattice { dim } => {
            let mut rows = Vec::new();
            for &k in cfg.levels.as_ref().expect("validated") {
                let n = 2f64.powi(k as i32);
                let r = lattice_llt(dim, n, times, p.window, p.grid_step, p.constants)?;
                rows.push(vec![
                    k.to_string(),
                    float(n),
                    r.vertices.to_string(),
                    float(r.sup_distance),
                ]);
            }
            out.csv("llt.csv", &["level", "n", "vertices", "sup_distance"], &rows)?;
        }
        _ => {}
    }
    if !matches!(p.scaling, ScalingFamily::Tree) {
        let kappa = kappa_of(&p.scaling)?;
        let levels = cfg.levels.as_ref().expect("validated");
        let triples = levels
            .iter()
            .map(|&l| {
                let level = match p.scaling {
                    ScalingFamily::Lattice { .. } => 2f64.powi(l as i32),
                    _ => l as f64,
                };
                scaling_for(&p.scaling, level, p.constants)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let ratios = einstein_ratios(&triples, kappa);
        let rows: Vec<Vec<String>> = triples
            .iter()
            .zip(&ratios)
            .map(|(t, r)| {
                vec![
                    float(t.level),
                    float(t.alpha),
                    float(t.beta),
                    float(t.gamma),
                    float(kappa),
                    float(*r),
                ]
            })
            .collect();
        out.csv(
            "einstein.csv",
            &["level", "alpha", "beta", "gamma", "kappa", "ratio"],
            &rows,
        )?;
    }
    if let Some(radii) = &p.exit_radii {
        let g = main_graph(cfg)?;
        record_graph_seeds(cfg, out);
        let (points, fit) = exit_time_fit(&g, g.root(), radii)?;
        let rows: Vec<Vec<String>> = points.iter().map(|(r, t)| vec![float(*r), float(*t)]).collect();
        out.csv("exit_times.csv", &["radius", "mean_exit_time"], &rows)?;
        out.csv(
            "exit_fit.csv",
            &["slope", "intercept", "r_squared", "kappa_plus_d_f"],
            &[vec![
                float(fit.slope),
                float(fit.intercept),
                float(fit.r_squared),
                float(kappa_of(&p.scaling)? + d_f_of(&p.scaling)),
            ]],
        )?;
    }
    Ok(None)
}

pub fn delta(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Check, CliError> {
    let p = cfg.delta.as_ref().expect("validated");
    let mut failure: Check = None;
    if let Some((a, b)) = &p.pair {
        let (a, b) = (a.load()?, b.load()?);
        let r = gh::delta_distance(&a, &b, p.mode)?;
        let mode = serde_json::to_value(p.mode).expect("mode serializes");
        out.csv(
            "delta.csv",
            &["mode", "value", "distortion"],
            &[vec![
                mode.as_str().unwrap_or_default().to_string(),
                float(r.value),
                float(gh::distortion(&a, &b, &r.witness)),
            ]],
        )?;
        let rows: Vec<Vec<String>> = r
            .witness
            .iter()
            .map(|(x, y)| vec![x.to_string(), y.to_string()])
            .collect();
        out.csv("witness.csv", &["x", "y"], &rows)?;
    }
    if let Some(ax) = &p.axioms {
        let base = cfg.seed.expect("validated");
        out.seed("axioms", base);
        let t = cfg.times.clone().unwrap_or_else(|| vec![1.0]);
        let size = |s: u64| 1 + (s as usize % ax.max_points);
        let triples = (0..ax.triples as u64)
            .map(|i| {
                let s = base + 3 * i;
                Ok((
                    gh::random_space(size(s), &t, s)?,
                    gh::random_space(size(s + 1), &t, s + 1)?,
                    gh::random_space(size(s + 2), &t, s + 2)?,
                ))
            })
            .collect::<Result<Vec<_>, heatlab_core::Error>>()?;
        let rep = gh::metric_axiom_suite(&triples, cfg.tolerances.triangle)?;
        out.csv(
            "axioms.csv",
            &[
                "triples",
                "max_asymmetry",
                "max_self_distance",
                "triangle_violations",
                "worst_triangle_excess",
            ],
            &[vec![
                rep.triples.to_string(),
                float(rep.max_asymmetry),
                float(rep.max_self_distance),
                rep.triangle_violations.to_string(),
                float(rep.worst_triangle_excess),
            ]],
        )?;
        if rep.max_asymmetry > cfg.tolerances.triangle {
            failure = Some(CliError::assertion(
                "symmetry",
                format!("asymmetry {:e}", rep.max_asymmetry),
            ));
        } else if rep.max_self_distance > cfg.tolerances.triangle {
            failure = Some(CliError::assertion(
                "identity",
                format!("self distance {:e}", rep.max_self_distance),
            ));
        } else if rep.triangle_violations > 0 {
            failure = Some(CliError::assertion(
                "triangle inequality",
                format!(
                    "{} violations, worst excess {:e}",
                    rep.triangle_violations, rep.worst_triangle_excess
                ),
            ));
        }
        if ax.comparisons > 0 {
            let cmp_base = base + 3 * ax.triples as u64;
            out.seed("comparisons", cmp_base);
            let mut rows = Vec::new();
            let mut below = 0;
            for i in 0..ax.comparisons as u64 {
                let s = cmp_base + 2 * i;
                let a = gh::random_space(size(s), &t, s)?;
                let b = gh::random_space(size(s + 1), &t, s + 1)?;
                let e = gh::delta_distance(&a, &b, Mode::Exact)?.value;
                let h = gh::delta_distance(&a, &b, Mode::Heuristic)?.value;
                if h < e - 1e-12 {
                    below += 1;
                }
                rows.push(vec![
                    i.to_string(),
                    a.len().to_string(),
                    b.len().to_string(),
                    float(e),
                    float(h),
                ]);
            }
            out.csv(
                "heuristic.csv",
                &["trial", "points_a", "points_b", "exact", "heuristic"],
                &rows,
            )?;
            if below > 0 && failure.is_none() {
                failure = Some(CliError::assertion(
                    "heuristic upper bound",
                    format!("{below} trials below exact"),
                ));
            }
        }
    }
    if let Some(sizes) = &p.tree_sizes {
        let base = cfg.seed.expect("validated");
        out.seed("trees", base);
        let t = cfg.times.as_ref().expect("validated");
        let spaces: Vec<PointedKernelSpace> = sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| gh::tree_space(n, base + i as u64, p.tree_points, t))
            .collect::<Result<_, _>>()?;
        let mut rows = Vec::new();
        for (i, w) in spaces.windows(2).enumerate() {
            let mode = if w[0].len() * w[1].len() <= EXACT_CAP {
                Mode::Exact
            } else {
                Mode::Heuristic
            };
            let r = gh::delta_distance(&w[0], &w[1], mode)?;
            let name = if mode == Mode::Exact { "exact" } else { "heuristic" };
            rows.push(vec![
                sizes[i].to_string(),
                sizes[i + 1].to_string(),
                name.into(),
                float(r.value),
            ]);
        }
        out.csv("tree_delta.csv", &["n_small", "n_large", "mode", "value"], &rows)?;
    }
    Ok(failure)
}

pub fn report(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Check, CliError> {
    let p = cfg.report.as_ref().expect("validated");
    let manifest = Manifest::load(&p.input_dir)?;
    let rerun = if p.rerun {
        let mut c = manifest.config.clone();
        c.output_dir = Some(out.dir().join("rerun"));
        c.workers = cfg.workers.or(c.workers);
        Some(crate::run_to_manifest(&c)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    let mut mismatches = Vec::new();
    for o in &manifest.outputs {
        let current = std::fs::read(p.input_dir.join(&o.file))
            .map(|b| crate::output::sha256_hex(&b))
            .unwrap_or_default();
        let again = rerun.as_ref().map(|m| {
            m.outputs
                .iter()
                .find(|r| r.file == o.file)
                .map(|r| r.sha256.clone())
                .unwrap_or_default()
        });
        let ok = current == o.sha256 && again.as_ref().is_none_or(|h| *h == o.sha256);
        if !ok {
            mismatches.push(o.file.clone());
        }
        rows.push(vec![
            o.file.clone(),
            o.sha256.clone(),
            current,
            again.unwrap_or_default(),
            ok.to_string(),
        ]);
    }
    if let Some(m) = &rerun {
        if m.outputs.len() != manifest.outputs.len() {
            mismatches.push("output list".into());
        }
    }
    out.csv(
        "report.csv",
        &["file", "recorded_sha256", "current_sha256", "rerun_sha256", "matches"],
        &rows,
    )?;
    if mismatches.is_empty() {
        Ok(None)
    } else {
        Ok(Some(CliError::assertion(
            "determinism",
            format!("hash mismatch in {}", mismatches.join(", ")),
        )))
    }
}
