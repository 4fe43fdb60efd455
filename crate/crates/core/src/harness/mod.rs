//! Experiment orchestration: JSON configs in, CSV series, snapshots and a
//! JSON record out.
//!
//! Every output except the wall time in `record.json` is a pure function of
//! the config, so repeated runs produce byte-identical files.

mod config;
mod output;
mod plot;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, ExperimentKind, PeakSettings, SweepAxes};
pub use plot::{emit_density_plot, read_pgm16, DensityPlotInfo};

use crate::decoherence::{chi, dn_perturbative};
use crate::error::{KhoError, Result};
use crate::grid::{coherent_state, make_grid, write_snapshot, FieldKind, ModelParams};
use crate::maps::poincare_section;
use crate::metrics::{collapse_alpha, dn_series, first_peak_of, slope_loglog, CollapseFit, Curve, DnSeries, PairedEvolution};
use output::{ensure_dir, num, write_csv, write_json};

/// One written snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub n: u32,
    pub kind: FieldKind,
    pub path: PathBuf,
}

/// First peak of a `D_n` series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub n: u32,
    pub dn: f64,
}

/// Outcome of one run. `chi` is present exactly when `D > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub series: Option<DnSeries>,
    pub peak: Option<Peak>,
    pub chi: Option<f64>,
    pub wall_time_s: f64,
    pub boundary_flag: bool,
    pub snapshots: Vec<SnapshotEntry>,
    /// Set by `collapse` runs.
    pub collapse: Option<CollapseFit>,
    /// Set by `peaks_vs_chi` runs: slope of `ln dn_peak` against `ln chi`.
    pub slope: Option<f64>,
    /// Files besides `record.json`.
    pub files: Vec<PathBuf>,
    /// Why the run failed, for runs inside a sweep.
    pub error: Option<String>,
}

impl RunRecord {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            config: config.clone(),
            series: None,
            peak: None,
            chi: None,
            wall_time_s: 0.0,
            boundary_flag: false,
            snapshots: Vec::new(),
            collapse: None,
            slope: None,
            files: Vec::new(),
            error: None,
        }
    }
}

fn chi_if_diffusive(k: f64, eta: f64, d: f64) -> Result<Option<f64>> {
    if d > 0.0 {
        chi(k, eta, d).map(Some)
    } else {
        Ok(None)
    }
}

/// Executes one experiment and writes its files under `config.out_dir`.
pub fn run(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let out = &config.out_dir;
    ensure_dir(out)?;
    let start = Instant::now();
    let mut rec = RunRecord::new(config);
    match config.kind {
        ExperimentKind::Poincare => run_poincare(config, &mut rec)?,
        ExperimentKind::Evolve => run_evolve(config, &mut rec)?,
        ExperimentKind::DnSeries => run_dn(config, &mut rec)?,
        ExperimentKind::Sweep => {
            sweep(config)?;
            rec.files.push(out.join("summary.csv"));
        }
        ExperimentKind::Collapse => run_collapse(config, &mut rec)?,
        ExperimentKind::PeaksVsChi => run_peaks_vs_chi(config, &mut rec)?,
        ExperimentKind::PerturbativeCompare => run_perturbative(config, &mut rec)?,
    }
    rec.wall_time_s = start.elapsed().as_secs_f64();
    write_json(&out.join("record.json"), &rec)?;
    Ok(rec)
}

fn run_poincare(cfg: &ExperimentConfig, rec: &mut RunRecord) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let half = cfg.grid.extent;
    let seeds: Vec<(f64, f64)> = (0..cfg.n_seeds)
        .map(|_| (rng.random_range(-half..half), rng.random_range(-half..half)))
        .collect();
    let points = poincare_section(&seeds, cfg.n_kicks, &cfg.model)?;
    let path = cfg.out_dir.join("poincare.csv");
    write_csv(
        &path,
        &["seed_id", "iter", "q", "p"],
        points
            .iter()
            .map(|s| vec![s.seed_id.to_string(), s.iter.to_string(), num(s.q), num(s.p)]),
    )?;
    rec.files.push(path);
    Ok(())
}

fn series_rows(s: &DnSeries) -> impl Iterator<Item = Vec<String>> + '_ {
    let flag = u8::from(s.boundary_flag).to_string();
    s.values
        .iter()
        .map(move |&(n, v)| vec![n.to_string(), num(v), flag.clone()])
}

fn write_series(path: &Path, s: &DnSeries) -> Result<()> {
    write_csv(path, &["n", "dn", "boundary_flag"], series_rows(s))
}

fn attach_series(cfg: &ExperimentConfig, rec: &mut RunRecord, series: DnSeries) -> Result<()> {
    let path = cfg.out_dir.join("series.csv");
    write_series(&path, &series)?;
    rec.files.push(path);
    rec.peak = first_peak_of(&series, cfg.peak.smooth_window, cfg.peak.prominence)
        .ok()
        .map(|(n, dn)| Peak { n, dn });
    rec.boundary_flag = series.boundary_flag;
    rec.series = Some(series);
    Ok(())
}

fn run_evolve(cfg: &ExperimentConfig, rec: &mut RunRecord) -> Result<()> {
    let d = cfg.reservoir.d;
    let grid = cfg.grid_for(cfg.model.eta, d);
    let mut pair = PairedEvolution::new(cfg.x0, &cfg.model, d, grid, cfg.classical)?;
    rec.chi = chi_if_diffusive(cfg.model.k, cfg.model.eta, d)?;
    let snap_dir = cfg.out_dir.join("snapshots");
    if cfg.snapshot_every > 0 {
        ensure_dir(&snap_dir)?;
    }
    let mut values = vec![(0, pair.dn())];
    for _ in 0..cfg.n_kicks {
        pair.step()?;
        let n = pair.kicks();
        values.push((n, pair.dn()));
        if cfg.snapshot_every > 0 && n as usize % cfg.snapshot_every == 0 {
            for (kind, field) in [(FieldKind::Quantum, pair.quantum()), (FieldKind::Classical, pair.classical())] {
                let path = snap_dir.join(format!("{}_{n:04}.bin", kind.name()));
                write_snapshot(&path, field)?;
                rec.snapshots.push(SnapshotEntry { n, kind, path });
            }
        }
    }
    let series = DnSeries {
        k: cfg.model.k,
        eta: cfg.model.eta,
        d,
        x0: cfg.x0,
        values,
        boundary_flag: pair.boundary_flag(),
    };
    attach_series(cfg, rec, series)
}

fn run_dn(cfg: &ExperimentConfig, rec: &mut RunRecord) -> Result<()> {
    let d = cfg.reservoir.d;
    let grid = cfg.grid_for(cfg.model.eta, d);
    rec.chi = chi_if_diffusive(cfg.model.k, cfg.model.eta, d)?;
    let series = dn_series(cfg.x0, &cfg.model, d, cfg.n_kicks, grid, cfg.classical)?;
    attach_series(cfg, rec, series)
}

fn run_collapse(cfg: &ExperimentConfig, rec: &mut RunRecord) -> Result<()> {
    let d = cfg.reservoir.d;
    let mut curves = Vec::new();
    for &eta in &cfg.sweep.eta {
        let params = ModelParams { eta, ..cfg.model };
        let series = dn_series(cfg.x0, &params, d, cfg.n_kicks, cfg.grid_for(eta, d), cfg.classical)?;
        let path = cfg.out_dir.join(format!("series_eta_{eta}.csv"));
        write_series(&path, &series)?;
        rec.files.push(path);
        rec.boundary_flag |= series.boundary_flag;
        curves.push(Curve::from(&series));
    }
    let fit = collapse_alpha(&curves)?;
    let path = cfg.out_dir.join("collapse.json");
    write_json(&path, &fit)?;
    rec.files.push(path);
    rec.collapse = Some(fit);
    Ok(())
}

fn run_peaks_vs_chi(cfg: &ExperimentConfig, rec: &mut RunRecord) -> Result<()> {
    let records = sweep(cfg)?;
    rec.files.push(cfg.out_dir.join("summary.csv"));
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| Some((r.chi?, r.peak?.dn)))
        .collect();
    rec.slope = Some(slope_loglog(&points, cfg.chi_range)?);
    rec.boundary_flag = records.iter().any(|r| r.boundary_flag);
    Ok(())
}

fn run_perturbative(cfg: &ExperimentConfig, rec: &mut RunRecord) -> Result<()> {
    let d = cfg.reservoir.d;
    let p = &cfg.model;
    let grid = cfg.grid_for(p.eta, d);
    let series = dn_series(cfg.x0, p, d, cfg.n_kicks, grid, cfg.classical)?;
    let g = make_grid(grid.extent, grid.n_cells, p.eta)?;
    let w0 = coherent_state(&g, cfg.x0, p.eta, FieldKind::Classical)?;
    let c = chi(p.k, p.eta, d)?;
    let first_order = dn_perturbative(&w0, cfg.n_kicks, p, d)?;
    let path = cfg.out_dir.join("perturbative.csv");
    write_csv(
        &path,
        &["n", "dn", "dn_perturbative"],
        series
            .values
            .iter()
            .zip(&first_order)
            .map(|(&(n, v), &g)| vec![n.to_string(), num(v), num(c * g)]),
    )?;
    rec.files.push(path);
    rec.chi = Some(c);
    attach_series(cfg, rec, series)
}

/// Runs the Cartesian product `K x eta x D` as independent `dn_series`
/// experiments on a bounded thread pool. A failing run is recorded with its
/// error and the sweep carries on. Writes `summary.csv` in product order.
pub fn sweep(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let ax = &config.sweep;
    if ax.k.is_empty() || ax.eta.is_empty() || ax.d.is_empty() {
        return Err(KhoError::Config("sweep axes K, eta and D must all be non-empty".into()));
    }
    if config.n_kicks == 0 {
        return Err(KhoError::Config("n_kicks must be at least 1".into()));
    }
    ensure_dir(&config.out_dir)?;
    let jobs: Vec<ExperimentConfig> = ax
        .k
        .iter()
        .flat_map(|&k| ax.eta.iter().flat_map(move |&eta| ax.d.iter().map(move |&d| (k, eta, d))))
        .enumerate()
        .map(|(i, (k, eta, d))| ExperimentConfig {
            kind: ExperimentKind::DnSeries,
            model: ModelParams { k, eta, ..config.model },
            reservoir: crate::decoherence::ReservoirParams { d },
            out_dir: config.out_dir.join(format!("run_{i:03}")),
            sweep: SweepAxes::default(),
            ..config.clone()
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count())
        .build()
        .map_err(|e| KhoError::Config(format!("thread pool: {e}")))?;
    let records: Vec<RunRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                run(job).unwrap_or_else(|e| RunRecord {
                    error: Some(e.to_string()),
                    chi: chi_if_diffusive(job.model.k, job.model.eta, job.reservoir.d).ok().flatten(),
                    ..RunRecord::new(job)
                })
            })
            .collect()
    });

    let blank = String::new;
    write_csv(
        &config.out_dir.join("summary.csv"),
        &["K", "eta", "D", "chi", "n_peak", "dn_peak"],
        records.iter().map(|r| {
            let m = &r.config;
            vec![
                num(m.model.k),
                num(m.model.eta),
                num(m.reservoir.d),
                r.chi.map(num).unwrap_or_else(blank),
                r.peak.map(|p| p.n.to_string()).unwrap_or_else(blank),
                r.peak.map(|p| num(p.dn)).unwrap_or_else(blank),
            ]
        }),
    )?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::GridSpec;

    fn small(kind: ExperimentKind, dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            kind,
            model: ModelParams::new(0.5, 0.25),
            grid: GridSpec {
                extent: 4.0,
                n_cells: 64,
            },
            n_kicks: 4,
            out_dir: dir.to_path_buf(),
            ..Default::default()
        }
    }

    #[test]
    fn poincare_row_count() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            model: ModelParams::new(2.0, 0.25),
            n_kicks: 5000,
            n_seeds: 20,
            ..small(ExperimentKind::Poincare, dir.path())
        };
        run(&cfg).unwrap();
        let text = std::fs::read_to_string(dir.path().join("poincare.csv")).unwrap();
        assert_eq!(text.lines().count(), 100_000 + 1);
    }

    #[test]
    fn evolve_writes_paired_snapshots() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            snapshot_every: 1,
            n_kicks: 8,
            ..small(ExperimentKind::Evolve, dir.path())
        };
        let rec = run(&cfg).unwrap();
        let count = |k| rec.snapshots.iter().filter(|s| s.kind == k).count();
        assert_eq!(count(FieldKind::Quantum), 8);
        assert_eq!(count(FieldKind::Classical), 8);
        assert!(rec.snapshots.iter().all(|s| s.path.exists()));
        assert!(rec.chi.is_none());
        assert_eq!(rec.series.unwrap().values.len(), 9);
    }

    #[test]
    fn chi_present_iff_diffusive() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(ExperimentKind::DnSeries, dir.path());
        assert!(run(&cfg).unwrap().chi.is_none());
        cfg.reservoir.d = 0.01;
        let rec = run(&cfg).unwrap();
        assert_eq!(rec.chi, Some(chi(0.5, 0.25, 0.01).unwrap()));
    }

    #[test]
    fn series_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        run(&small(ExperimentKind::DnSeries, dir.path())).unwrap();
        let text = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,dn,boundary_flag");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("0,0.0000000000000000e0,"));
    }

    #[test]
    fn empty_d_axis_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(ExperimentKind::Sweep, dir.path());
        cfg.sweep.k = vec![0.5];
        cfg.sweep.eta = vec![0.25];
        assert!(matches!(sweep(&cfg), Err(KhoError::Config(_))));
        assert!(matches!(run(&cfg), Err(KhoError::Config(_))));
    }

    #[test]
    fn sweep_records_failures_and_continues() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(ExperimentKind::Sweep, dir.path());
        cfg.sweep = SweepAxes {
            k: vec![0.5],
            eta: vec![0.25, 2.0],
            d: vec![0.01],
        };
        let recs = sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs[0].error.is_none());
        assert!(recs[1].error.is_some());
        let text = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(text.lines().next().unwrap(), "K,eta,D,chi,n_peak,dn_peak");
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn sweep_is_deterministic_and_worker_independent() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut cfg = small(ExperimentKind::Sweep, a.path());
        cfg.n_kicks = 6;
        cfg.sweep = SweepAxes {
            k: vec![0.5, 1.5],
            eta: vec![0.25],
            d: vec![0.01, 0.05],
        };
        cfg.workers = Some(1);
        sweep(&cfg).unwrap();
        cfg.out_dir = b.path().to_path_buf();
        cfg.workers = Some(3);
        sweep(&cfg).unwrap();
        let read = |d: &Path| std::fs::read(d.join("summary.csv")).unwrap();
        assert_eq!(read(a.path()), read(b.path()));
        let snap = |d: &Path| std::fs::read(d.join("run_002").join("series.csv")).unwrap();
        assert_eq!(snap(a.path()), snap(b.path()));
    }

    #[test]
    fn fig6_axes_give_24_records() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(ExperimentKind::Sweep, dir.path());
        cfg.n_kicks = 1;
        cfg.grid.n_cells = 32;
        cfg.sweep = SweepAxes {
            k: vec![0.5],
            eta: vec![0.25, 0.125, 0.0625, 0.03125],
            d: vec![0.1, 0.05, 0.01, 0.005, 0.001, 0.0005],
        };
        let recs = sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 24);
        // the plotted range of the figure caption: its two ends both occur
        let two_sig = |x: f64| format!("{x:.1e}");
        let chis: Vec<String> = recs.iter().map(|r| two_sig(r.chi.unwrap())).collect();
        assert!(chis.contains(&"4.3e-5".to_string()));
        assert!(chis.contains(&"6.2e-2".to_string()));
        for r in &recs {
            let m = &r.config;
            assert_eq!(r.chi.unwrap(), chi(m.model.k, m.model.eta, m.reservoir.d).unwrap());
        }
    }
}
