use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use hicomsfem::experiment::{
    cmd_layout, cmd_mesh, run_experiment, ExperimentConfig, GeometrySource, LayoutPattern, LayoutSpec, Mode,
    RunManifest,
};
use hicomsfem::geometry::Geometry;

/// High-contrast multiscale finite elements: fine solves, asymptotic
/// expansions and localization studies.
#[derive(Debug, Parser)]
#[command(name = "hicomsfem", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "HICOMSFEM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an inclusion layout in the unit disk.
    Layout {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.07)]
        radius: f64,
        #[arg(long, default_value = "rings")]
        pattern: LayoutPattern,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Mesh a geometry file.
    Mesh {
        #[arg(long)]
        geometry: PathBuf,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Direct solve at one contrast.
    SolveFine(RunArgs),
    /// Expansion terms and decay diagnostics.
    Expand(RunArgs),
    /// Localized leading term for each delta.
    Localize(RunArgs),
    /// Terms needed to reach the tolerance, per contrast.
    SweepEta(RunArgs),
    /// Localization errors per delta.
    SweepDelta(RunArgs),
    /// Remainder of the partial sums against the fine solution.
    Compare(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Geometry JSON, when no config is given.
    #[arg(long, conflicts_with = "config")]
    geometry: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    h: Option<f64>,
    /// Comma-separated contrast values.
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    /// Comma-separated delta values.
    #[arg(long, value_delimiter = ',')]
    delta: Option<Vec<f64>>,
    #[arg(long)]
    tol: Option<f64>,
    /// Highest term index for `expand` and `compare`.
    #[arg(long)]
    terms: Option<usize>,
}

impl RunArgs {
    fn config(self, mode: Mode) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.geometry) {
            (Some(path), _) => {
                ExperimentConfig::load(path).with_context(|| format!("reading config {}", path.display()))?
            }
            (None, Some(geom)) => {
                let Some(h) = self.h else { bail!("--h is required without --config") };
                ExperimentConfig::new(GeometrySource::File(geom.clone()), h, mode)
            }
            (None, None) => bail!("either --config or --geometry is required"),
        };
        cfg.mode = mode;
        if let Some(out) = self.out {
            cfg.output = out;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(h) = self.h {
            cfg.h = h;
        }
        if let Some(eta) = self.eta {
            cfg.eta = eta;
        }
        if let Some(delta) = self.delta {
            cfg.delta = delta;
        }
        if let Some(tol) = self.tol {
            cfg.tol = tol;
        }
        if let Some(terms) = self.terms {
            cfg.terms = terms;
        }
        Ok(cfg)
    }
}

fn report(m: &RunManifest) {
    for w in &m.warnings {
        eprintln!("warning: {w}");
    }
    for p in &m.artifacts {
        println!("{}", p.display());
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    let manifest = match cli.command {
        Command::Layout { n, radius, pattern, seed, out } => {
            cmd_layout(&LayoutSpec { n, radius, pattern, seed }, &out)?
        }
        Command::Mesh { geometry, h, out } => {
            let geom = Geometry::load(&geometry).with_context(|| format!("reading {}", geometry.display()))?;
            cmd_mesh(&geom, h, &out)?
        }
        Command::SolveFine(a) => run_experiment(&a.config(Mode::Fine)?)?,
        Command::Expand(a) => run_experiment(&a.config(Mode::Expand)?)?,
        Command::Localize(a) => run_experiment(&a.config(Mode::Localize)?)?,
        Command::SweepEta(a) => run_experiment(&a.config(Mode::SweepEta)?)?,
        Command::SweepDelta(a) => run_experiment(&a.config(Mode::SweepDelta)?)?,
        Command::Compare(a) => run_experiment(&a.config(Mode::Compare)?)?,
    };
    report(&manifest);
    Ok(())
}
