//! Command-line front end for the experiment harness.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 config error, 3 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kho_core::harness::{self, ExperimentConfig, ExperimentKind};
use kho_core::KhoError;

#[derive(Parser)]
#[command(name = "kho", version, about = "Kicked harmonic oscillator: quantum vs classical phase-space evolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Orbits of the classical stroboscopic map.
    Poincare(Overrides),
    /// Paired quantum and classical evolution with optional snapshots.
    Evolve(Overrides),
    /// Quantum-classical distance series.
    Dn(Overrides),
    /// Cartesian product of K, eta and D runs with a summary CSV.
    Sweep(Overrides),
    /// Time-rescaling exponent that best collapses D_n across eta.
    Collapse(Overrides),
    /// First-peak height against chi with a log-log slope.
    Peaks(Overrides),
    /// Full pipeline against the first-order prediction.
    Perturb(Overrides),
    /// Render a snapshot as a 16-bit PGM density plot.
    Plot {
        snapshot: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
    },
}

/// Comma-separated numbers.
#[derive(Clone, Debug)]
struct List(Vec<f64>);

fn parse_list(s: &str) -> Result<List, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(List)
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    match parse_list(s)?.0.as_slice() {
        &[a, b] => Ok((a, b)),
        _ => Err(format!("expected two comma-separated numbers, got {s:?}")),
    }
}

#[derive(Args)]
struct Overrides {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Kick strength; a comma-separated list sets the sweep axis.
    #[arg(long = "K", value_parser = parse_list)]
    k: Option<List>,
    /// Lamb-Dicke parameter; a comma-separated list sets the sweep axis.
    #[arg(long, value_parser = parse_list)]
    eta: Option<List>,
    /// Diffusion per kick period; a comma-separated list sets the sweep axis.
    #[arg(long = "D", value_parser = parse_list)]
    d: Option<List>,
    /// Initial centre as "q,p".
    #[arg(long, value_parser = parse_pair)]
    center: Option<(f64, f64)>,
    #[arg(long)]
    kicks: Option<usize>,
    #[arg(long)]
    grid_extent: Option<f64>,
    #[arg(long)]
    grid_cells: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "KHO_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    snapshot_every: Option<usize>,
}

impl Overrides {
    fn resolve(self, kind: ExperimentKind) -> Result<ExperimentConfig, KhoError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.kind = kind;
        let scalar = |name: &str, v: &[f64]| match v {
            [x] => Ok(*x),
            _ => Err(KhoError::Config(format!("--{name} takes one value for this command"))),
        };
        if let Some(List(v)) = &self.k {
            cfg.sweep.k = v.clone();
            if !kind.uses_axes() {
                cfg.model.k = scalar("K", v)?;
            }
        }
        if let Some(List(v)) = &self.eta {
            cfg.sweep.eta = v.clone();
            if !kind.uses_axes() && kind != ExperimentKind::Collapse {
                cfg.model.eta = scalar("eta", v)?;
            }
        }
        if let Some(List(v)) = &self.d {
            cfg.sweep.d = v.clone();
            if !kind.uses_axes() {
                cfg.reservoir.d = scalar("D", v)?;
            }
        }
        if let Some(c) = self.center {
            cfg.x0 = c;
        }
        if let Some(n) = self.kicks {
            cfg.n_kicks = n;
        }
        if let Some(e) = self.grid_extent {
            cfg.grid.extent = e;
        }
        if let Some(n) = self.grid_cells {
            cfg.grid.n_cells = n;
        }
        if let Some(o) = self.out {
            cfg.out_dir = o;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        if let Some(s) = self.snapshot_every {
            cfg.snapshot_every = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cmd: Command) -> Result<(), KhoError> {
    let (kind, ov) = match cmd {
        Command::Plot { snapshot, out, gamma } => {
            let info = harness::emit_density_plot(&snapshot, &out, gamma)?;
            println!(
                "wrote {} (min {:.3e}, max {:.3e}, negative {:.1}%)",
                info.image.display(),
                info.min,
                info.max,
                100.0 * info.negativity_fraction
            );
            return Ok(());
        }
        Command::Poincare(o) => (ExperimentKind::Poincare, o),
        Command::Evolve(o) => (ExperimentKind::Evolve, o),
        Command::Dn(o) => (ExperimentKind::DnSeries, o),
        Command::Sweep(o) => (ExperimentKind::Sweep, o),
        Command::Collapse(o) => (ExperimentKind::Collapse, o),
        Command::Peaks(o) => (ExperimentKind::PeaksVsChi, o),
        Command::Perturb(o) => (ExperimentKind::PerturbativeCompare, o),
    };
    let cfg = ov.resolve(kind)?;
    let rec = harness::run(&cfg)?;
    if let Some(s) = &rec.series {
        println!("max D_n {:.6e} over {} kicks", s.max(), s.values.len() - 1);
    }
    if let Some(p) = rec.peak {
        println!("first peak n = {} D_n = {:.6e}", p.n, p.dn);
    }
    if let Some(c) = rec.chi {
        println!("chi {c:.6e}");
    }
    if let Some(f) = rec.collapse {
        println!("alpha {:.4} improvement {:.3}", f.alpha, f.improvement());
    }
    if let Some(s) = rec.slope {
        println!("log-log slope {s:.4}");
    }
    if rec.boundary_flag {
        eprintln!("warning: mass reached the grid boundary; widen the domain");
    }
    println!("outputs in {}", cfg.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                KhoError::Config(_) | KhoError::InvalidParameter(_) | KhoError::OutOfDomain(_) => ExitCode::from(2),
                e if e.is_io() => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}
