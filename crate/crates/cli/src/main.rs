use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heatlab_cli::config::{
    AxiomParams, DeltaParams, HarnackParams, IfsChoice, Instance, KernelParams, LltParams, RenormParams, ReportParams,
    ResistanceParams,
};
use heatlab_cli::{CliError, Command, ExperimentConfig, GraphSpec};
use heatlab_core::gh::Mode;
use heatlab_core::llt::ScalingFamily;

#[derive(Parser)]
#[command(name = "heatlab", version, about = "Heat-kernel experiments on graphs and fractals")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Output directory (default: $HEATLAB_OUTPUT_DIR or ./heatlab-out).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Lattice,
    Path,
    Gasket,
    Vicsek,
    Carpet,
    Tree,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Lattice dimension.
    #[arg(long = "d", default_value_t = 1)]
    dim: usize,
    /// Lattice half-width.
    #[arg(long, default_value_t = 8)]
    halfwidth: usize,
    /// Prefractal level.
    #[arg(long, default_value_t = 2)]
    level: usize,
    /// Vertices of a path or tree.
    #[arg(long, default_value_t = 10)]
    vertices: usize,
    /// Graph stored as JSON (overrides --family).
    #[arg(long)]
    graph_file: Option<PathBuf>,
}

impl GraphArgs {
    fn spec(&self, seed: Option<u64>) -> Option<GraphSpec> {
        if let Some(path) = &self.graph_file {
            return Some(GraphSpec::File { path: path.clone() });
        }
        Some(match self.family? {
            Family::Lattice => GraphSpec::Lattice {
                dim: self.dim,
                halfwidth: self.halfwidth,
            },
            Family::Path => GraphSpec::Path {
                vertices: self.vertices,
            },
            Family::Gasket => GraphSpec::Gasket { level: self.level },
            Family::Vicsek => GraphSpec::Vicsek { level: self.level },
            Family::Carpet => GraphSpec::Carpet {
                level: self.level,
                generator: None,
            },
            Family::Tree => GraphSpec::Tree {
                vertices: self.vertices,
                seed: seed.unwrap_or(0),
            },
        })
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a JSON experiment config.
    Run {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the JSON schema of experiment configs.
    Schema,
    /// Build graphs and write them as JSON.
    Build {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        graph: GraphArgs,
        /// Levels to build, e.g. `1..4` or `1,3`.
        #[arg(long, value_parser = parse_levels)]
        levels: Option<Levels>,
    },
    /// Heat kernel from a vertex with the energy and oscillation checks.
    Kernel {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        center: Option<usize>,
        #[arg(long, default_value_t = 50)]
        max_m: usize,
        /// Check a stored kernel_rows.csv instead of recomputing.
        #[arg(long)]
        kernel_file: Option<PathBuf>,
    },
    /// Effective resistances and resistance volumes from a vertex.
    Resistance {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        center: Option<usize>,
    },
    /// Renormalization fixed point of a nested fractal.
    Renorm {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "gasket")]
        ifs: Nested,
        #[arg(long, default_value_t = 0)]
        random_starts: usize,
    },
    /// Optimal Harnack constants on cylinders.
    Harnack {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        center: Option<usize>,
        #[arg(long, default_value_t = 2.0)]
        kappa: f64,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        random_trials: usize,
    },
    /// Rescaled kernels against their scaling limits.
    Llt {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        family: LltFamily,
        #[arg(long = "d", default_value_t = 1)]
        dim: usize,
        /// Levels; on lattices level k means n = 2^k.
        #[arg(long, value_parser = parse_levels)]
        levels: Option<Levels>,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        times: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        window: f64,
        #[arg(long, default_value_t = 1.0 / 1024.0)]
        grid_step: f64,
        /// Tree sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Correspondence distance between pointed kernel spaces.
    Delta {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "b")]
        a: Option<PathBuf>,
        #[arg(long, requires = "a")]
        b: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "exact")]
        mode: DeltaMode,
        /// Random triples for the metric-axiom suite.
        #[arg(long)]
        axiom_triples: Option<usize>,
        #[arg(long, default_value_t = 5)]
        max_points: usize,
        #[arg(long, default_value_t = 0)]
        comparisons: usize,
    },
    /// Verify (and optionally re-execute) a finished run from its manifest.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input_dir: PathBuf,
        #[arg(long)]
        rerun: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Nested {
    Gasket,
    Vicsek,
}

#[derive(Clone, Copy, ValueEnum)]
enum LltFamily {
    Lattice,
    Gasket,
    Vicsek,
    Tree,
}

#[derive(Clone, Copy, ValueEnum)]
enum DeltaMode {
    Exact,
    Heuristic,
}

/// Level list given as `a..b` (inclusive) or `a,b,c`.
#[derive(Clone)]
struct Levels(Vec<usize>);

fn parse_levels(s: &str) -> Result<Levels, String> {
    parse_level_list(s).map(Levels)
}

fn parse_level_list(s: &str) -> Result<Vec<usize>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|e| format!("{e}"))?;
        let b: usize = b.trim_start_matches('=').trim().parse().map_err(|e| format!("{e}"))?;
        if a > b {
            return Err(format!("empty range {s}"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|e| format!("{e}")))
        .collect()
}

fn base(command: Command, common: Common) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(command);
    c.output_dir = common.output_dir;
    c.workers = common.workers;
    c.seed = common.seed;
    c
}

fn to_config(cmd: Cmd) -> Result<ExperimentConfig, CliError> {
    Ok(match cmd {
        Cmd::Run {
            config,
            output_dir,
            workers,
        } => {
            let text =
                std::fs::read_to_string(&config).map_err(|e| CliError::Io(format!("{}: {e}", config.display())))?;
            let mut c = ExperimentConfig::from_json(&text)?;
            c.output_dir = output_dir.or(c.output_dir);
            c.workers = workers.or(c.workers);
            c
        }
        Cmd::Schema => unreachable!("handled in main"),
        Cmd::Build { common, graph, levels } => {
            let seed = common.seed;
            let mut c = base(Command::Build, common);
            c.graph = graph.spec(seed);
            c.levels = levels.map(|l| l.0);
            c
        }
        Cmd::Kernel {
            common,
            graph,
            center,
            max_m,
            kernel_file,
        } => {
            let seed = common.seed;
            let mut c = base(Command::Kernel, common);
            c.graph = graph.spec(seed);
            c.kernel = Some(KernelParams {
                center,
                max_m,
                kernel_file,
            });
            c
        }
        Cmd::Resistance { common, graph, center } => {
            let seed = common.seed;
            let mut c = base(Command::Resistance, common);
            c.graph = graph.spec(seed);
            c.resistance = Some(ResistanceParams { center, radii: None });
            c
        }
        Cmd::Renorm {
            common,
            ifs,
            random_starts,
        } => {
            let mut c = base(Command::Renorm, common);
            let ifs = match ifs {
                Nested::Gasket => IfsChoice::Gasket,
                Nested::Vicsek => IfsChoice::Vicsek,
            };
            c.renorm = Some(RenormParams {
                ifs,
                random_starts,
                homogenization: None,
            });
            c
        }
        Cmd::Harnack {
            common,
            graph,
            center,
            kappa,
            radii,
            random_trials,
        } => {
            let seed = common.seed;
            let mut c = base(Command::Harnack, common);
            c.graph = graph.spec(seed);
            c.harnack = Some(HarnackParams {
                center,
                kappa,
                radii,
                random_trials,
                decay: None,
            });
            c
        }
        Cmd::Llt {
            common,
            family,
            dim,
            levels,
            times,
            window,
            grid_step,
            sizes,
            samples,
        } => {
            let mut c = base(Command::Llt, common);
            let scaling = match family {
                LltFamily::Lattice => ScalingFamily::Lattice { dim },
                LltFamily::Gasket => ScalingFamily::gasket(),
                LltFamily::Vicsek => ScalingFamily::vicsek(),
                LltFamily::Tree => ScalingFamily::Tree,
            };
            c.levels = levels.map(|l| l.0);
            c.times = Some(times);
            c.llt = Some(LltParams {
                scaling,
                constants: None,
                window,
                grid_step,
                sizes,
                samples,
                exit_radii: None,
            });
            c
        }
        Cmd::Delta {
            common,
            a,
            b,
            mode,
            axiom_triples,
            max_points,
            comparisons,
        } => {
            let mut c = base(Command::Delta, common);
            let mode = match mode {
                DeltaMode::Exact => Mode::Exact,
                DeltaMode::Heuristic => Mode::Heuristic,
            };
            c.delta = Some(DeltaParams {
                mode,
                pair: a.zip(b).map(|(a, b)| (Instance::File(a), Instance::File(b))),
                axioms: axiom_triples.map(|triples| AxiomParams {
                    triples,
                    max_points,
                    comparisons,
                }),
                tree_sizes: None,
                tree_points: 6,
            });
            c
        }
        Cmd::Report {
            common,
            input_dir,
            rerun,
        } => {
            let mut c = base(Command::Report, common);
            c.report = Some(ReportParams { input_dir, rerun });
            c
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if matches!(cli.command, Cmd::Schema) {
        println!("{}", include_str!("../../../docs/config.schema.json").trim_end());
        return ExitCode::SUCCESS;
    }
    let result = to_config(cli.command).and_then(|c| heatlab_cli::run(&c).map(|m| (c, m)));
    match result {
        Ok((c, m)) => {
            println!(
                "{}: wrote {} files to {}",
                m.command,
                m.outputs.len() + 1,
                c.output_dir().display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("heatlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
