//! Experiment configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use heatlab_core::families::{build_lattice_box, sample_uniform_tree, CarpetGenerator, IfsSpec, WeightLaw};
use heatlab_core::gh::{Mode, PointedKernelSpace};
use heatlab_core::llt::ScalingFamily;
use heatlab_core::{VertexId, WeightedGraph};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "HEATLAB_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "heatlab-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Build,
    Kernel,
    Resistance,
    Renorm,
    Harnack,
    Llt,
    Delta,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Build => "build",
            Command::Kernel => "kernel",
            Command::Resistance => "resistance",
            Command::Renorm => "renorm",
            Command::Harnack => "harnack",
            Command::Llt => "llt",
            Command::Delta => "delta",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    /// Output directory; falls back to `$HEATLAB_OUTPUT_DIR`, then
    /// `heatlab-out`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Base seed for every random draw of the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resistance: Option<ResistanceParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renorm: Option<RenormParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harnack: Option<HarnackParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llt: Option<LltParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<DeltaParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportParams>,
}

/// Graph families that can be built from a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSpec {
    Lattice {
        dim: usize,
        halfwidth: usize,
    },
    Path {
        vertices: usize,
    },
    Gasket {
        level: usize,
    },
    Vicsek {
        level: usize,
    },
    Ifs {
        spec: IfsSpec,
        level: usize,
    },
    Carpet {
        level: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generator: Option<CarpetGenerator>,
    },
    Tree {
        vertices: usize,
        seed: u64,
    },
    File {
        path: PathBuf,
    },
}

impl GraphSpec {
    pub fn level(&self) -> Option<usize> {
        match self {
            GraphSpec::Gasket { level }
            | GraphSpec::Vicsek { level }
            | GraphSpec::Ifs { level, .. }
            | GraphSpec::Carpet { level, .. } => Some(*level),
            _ => None,
        }
    }

    pub fn with_level(&self, n: usize) -> GraphSpec {
        let mut s = self.clone();
        match &mut s {
            GraphSpec::Gasket { level }
            | GraphSpec::Vicsek { level }
            | GraphSpec::Ifs { level, .. }
            | GraphSpec::Carpet { level, .. } => *level = n,
            _ => {}
        }
        s
    }

    pub fn build(&self) -> Result<WeightedGraph, CliError> {
        Ok(match self {
            GraphSpec::Lattice { dim, halfwidth } => build_lattice_box(*dim, *halfwidth)?,
            GraphSpec::Path { vertices } => path_graph(*vertices)?,
            GraphSpec::Gasket { level } => IfsSpec::sierpinski_gasket().build_prefractal(*level)?,
            GraphSpec::Vicsek { level } => IfsSpec::vicsek_cross().build_prefractal(*level)?,
            GraphSpec::Ifs { spec, level } => spec.build_prefractal(*level)?,
            GraphSpec::Carpet { level, generator } => generator
                .clone()
                .unwrap_or_else(CarpetGenerator::standard)
                .build_carpet(*level)?,
            GraphSpec::Tree { vertices, seed } => sample_uniform_tree(*vertices, *seed)?.to_graph()?,
            GraphSpec::File { path } => WeightedGraph::from_json(&read(path)?)?,
        })
    }
}

fn path_graph(n: usize) -> Result<WeightedGraph, CliError> {
    if n < 2 {
        return Err(CliError::Schema {
            pointer: "graph.vertices".into(),
            message: "a path needs 2 or more vertices".into(),
        });
    }
    let coords = (0..n).map(|i| vec![i as f64]).collect();
    Ok(WeightedGraph::new(coords, (0..n - 1).map(|i| (i, i + 1, 1.0)), 0)?)
}

pub(crate) fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed spread of the renormalization factor across random starts.
    #[serde(default = "default_lambda_spread")]
    pub lambda_spread: f64,
    /// Fixed-point iteration tolerance.
    #[serde(default = "default_fixed_point")]
    pub fixed_point: f64,
    /// Triangle-inequality slack for the correspondence distance.
    #[serde(default = "default_triangle")]
    pub triangle: f64,
}

fn default_lambda_spread() -> f64 {
    1e-8
}
fn default_fixed_point() -> f64 {
    1e-13
}
fn default_triangle() -> f64 {
    1e-9
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            lambda_spread: default_lambda_spread(),
            fixed_point: default_fixed_point(),
            triangle: default_triangle(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    /// Source vertex; defaults to the graph root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<VertexId>,
    pub max_m: usize,
    /// Previously written `kernel_rows.csv` to check instead of recomputing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResistanceParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<VertexId>,
    /// Radii at which `V(r)` and `h(r)` are tabulated; defaults to the
    /// distinct resistances from the centre.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IfsChoice {
    Gasket,
    Vicsek,
    Custom(IfsSpec),
}

impl IfsChoice {
    pub fn spec(&self) -> IfsSpec {
        match self {
            IfsChoice::Gasket => IfsSpec::sierpinski_gasket(),
            IfsChoice::Vicsek => IfsSpec::vicsek_cross(),
            IfsChoice::Custom(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenormParams {
    pub ifs: IfsChoice,
    /// Random starting conductance sets besides the uniform one.
    #[serde(default)]
    pub random_starts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homogenization: Option<HomogenizationParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomogenizationParams {
    /// Weights are iid uniform on `[low, high]`.
    pub low: f64,
    pub high: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnackParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<VertexId>,
    pub kappa: f64,
    pub radii: Vec<f64>,
    /// Random nonnegative boundary data per radius.
    #[serde(default)]
    pub random_trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayParams {
    pub horizon: f64,
    pub min_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LltParams {
    pub scaling: ScalingFamily,
    /// `(c1, c2)`; family defaults otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<(f64, f64)>,
    /// Half-width of the spatial window.
    #[serde(default = "default_window")]
    pub window: f64,
    /// Spacing of the spatial grid on lattices.
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    /// Tree sizes; trees ignore `levels`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    /// Trees sampled per size.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Radii for the mean-exit-time fit on `graph`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_radii: Option<Vec<f64>>,
}

fn default_window() -> f64 {
    1.0
}
fn default_grid_step() -> f64 {
    1.0 / 1024.0
}
fn default_samples() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Instance {
    Inline(PointedKernelSpace),
    File(PathBuf),
}

impl Instance {
    pub fn load(&self) -> Result<PointedKernelSpace, CliError> {
        Ok(match self {
            Instance::Inline(s) => {
                s.validate()?;
                s.clone()
            }
            Instance::File(p) => PointedKernelSpace::from_json(&read(p)?)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaParams {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Pair of instances to compare.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<(Instance, Instance)>,
    /// Random triples for the metric-axiom suite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axioms: Option<AxiomParams>,
    /// Tree sizes for a sequence of rescaled tree instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree_sizes: Option<Vec<usize>>,
    /// Points kept per tree instance.
    #[serde(default = "default_tree_points")]
    pub tree_points: usize,
}

fn default_mode() -> Mode {
    Mode::Exact
}
fn default_tree_points() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxiomParams {
    pub triples: usize,
    pub max_points: usize,
    /// Random pairs on which the heuristic is compared with the exact
    /// solver.
    #[serde(default)]
    pub comparisons: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportParams {
    pub input_dir: PathBuf,
    /// Re-execute the recorded config and compare output hashes.
    #[serde(default)]
    pub rerun: bool,
}

fn schema(pointer: &str, message: impl Into<String>) -> CliError {
    CliError::Schema {
        pointer: pointer.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        ExperimentConfig {
            command,
            output_dir: None,
            workers: None,
            seed: None,
            graph: None,
            weights: None,
            levels: None,
            times: None,
            tolerances: Tolerances::default(),
            kernel: None,
            resistance: None,
            renorm: None,
            harnack: None,
            llt: None,
            delta: None,
            report: None,
        }
    }

    /// Parses and validates; schema errors carry a path to the offending
    /// key.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let pointer = if path == "." || path == "?" {
                String::new()
            } else {
                path
            };
            CliError::Schema {
                pointer,
                message: e.into_inner().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.workers == Some(0) {
            return Err(schema("workers", "must be positive"));
        }
        let t = &self.tolerances;
        for (k, v) in [
            ("lambda_spread", t.lambda_spread),
            ("fixed_point", t.fixed_point),
            ("triangle", t.triangle),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(schema(&format!("tolerances.{k}"), "must be positive"));
            }
        }
        if let Some(times) = &self.times {
            if times.is_empty() || times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                return Err(schema("times", "must be a nonempty list of positive numbers"));
            }
        }
        if let Some(levels) = &self.levels {
            if levels.is_empty() {
                return Err(schema("levels", "must not be empty"));
            }
        }
        if let Some(w) = &self.weights {
            w.validate().map_err(|e| schema("weights", e.to_string()))?;
        }
        let needs_graph = matches!(
            self.command,
            Command::Build | Command::Kernel | Command::Resistance | Command::Harnack
        );
        if needs_graph && self.graph.is_none() {
            return Err(schema("graph", format!("required by `{}`", self.command.name())));
        }
        match self.command {
            Command::Kernel => {
                let k = self
                    .kernel
                    .as_ref()
                    .ok_or_else(|| schema("kernel", "required by `kernel`"))?;
                if k.max_m < 2 {
                    return Err(schema("kernel.max_m", "must be at least 2"));
                }
            }
            Command::Renorm => {
                let r = self
                    .renorm
                    .as_ref()
                    .ok_or_else(|| schema("renorm", "required by `renorm`"))?;
                if r.random_starts > 0 && self.seed.is_none() {
                    return Err(schema("seed", "required for random starts"));
                }
                if let Some(h) = &r.homogenization {
                    if !(h.low > 0.0 && h.low <= h.high && h.high.is_finite()) {
                        return Err(schema("renorm.homogenization", "need 0 < low <= high"));
                    }
                    if h.samples < 2 {
                        return Err(schema("renorm.homogenization.samples", "need at least 2"));
                    }
                    if self.seed.is_none() {
                        return Err(schema("seed", "required for homogenization"));
                    }
                    if self.levels.is_none() {
                        return Err(schema("levels", "required for homogenization"));
                    }
                }
            }
            Command::Harnack => {
                let h = self
                    .harnack
                    .as_ref()
                    .ok_or_else(|| schema("harnack", "required by `harnack`"))?;
                if !(h.kappa >= 1.0 && h.kappa.is_finite()) {
                    return Err(schema("harnack.kappa", "must be at least 1"));
                }
                if h.radii.is_empty() || h.radii.iter().any(|r| !(*r > 0.0)) {
                    return Err(schema("harnack.radii", "must be a nonempty list of positive numbers"));
                }
                if h.random_trials > 0 && self.seed.is_none() {
                    return Err(schema("seed", "required for random boundary data"));
                }
                if let Some(d) = &h.decay {
                    if !(d.horizon > 0.0 && d.min_radius > 0.0) {
                        return Err(schema("harnack.decay", "horizon and min_radius must be positive"));
                    }
                }
            }
            Command::Llt => {
                let l = self.llt.as_ref().ok_or_else(|| schema("llt", "required by `llt`"))?;
                if self.times.is_none() {
                    return Err(schema("times", "required by `llt`"));
                }
                if !(l.window > 0.0 && l.grid_step > 0.0) {
                    return Err(schema("llt", "window and grid_step must be positive"));
                }
                if matches!(l.scaling, ScalingFamily::Tree) {
                    let sizes = l
                        .sizes
                        .as_ref()
                        .ok_or_else(|| schema("llt.sizes", "required for trees"))?;
                    if sizes.len() < 2 || sizes.iter().any(|&n| n < 2) {
                        return Err(schema("llt.sizes", "need two or more sizes of at least 2"));
                    }
                    if l.samples < 1 {
                        return Err(schema("llt.samples", "must be positive"));
                    }
                    if self.seed.is_none() {
                        return Err(schema("seed", "required for random trees"));
                    }
                } else if self.levels.is_none() {
                    return Err(schema("levels", "required by `llt`"));
                }
                if l.exit_radii.is_some() && self.graph.is_none() {
                    return Err(schema("graph", "required for the exit-time fit"));
                }
            }
            Command::Delta => {
                let d = self
                    .delta
                    .as_ref()
                    .ok_or_else(|| schema("delta", "required by `delta`"))?;
                if d.pair.is_none() && d.axioms.is_none() && d.tree_sizes.is_none() {
                    return Err(schema("delta", "give `pair`, `axioms` or `tree_sizes`"));
                }
                if (d.axioms.is_some() || d.tree_sizes.is_some()) && self.seed.is_none() {
                    return Err(schema("seed", "required for random instances"));
                }
                if let Some(a) = &d.axioms {
                    if a.triples == 0 || a.max_points == 0 {
                        return Err(schema("delta.axioms", "triples and max_points must be positive"));
                    }
                }
                if d.tree_sizes.is_some() && self.times.is_none() {
                    return Err(schema("times", "required for tree instances"));
                }
                if d.tree_points == 0 {
                    return Err(schema("delta.tree_points", "must be positive"));
                }
            }
            Command::Report => {
                self.report
                    .as_ref()
                    .ok_or_else(|| schema("report", "required by `report`"))?;
            }
            Command::Build | Command::Resistance => {}
        }
        Ok(())
    }
}
