use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decoherence::ReservoirParams;
use crate::error::{KhoError, Result};
use crate::grid::ModelParams;
use crate::metrics::{ClassicalChoice, GridSpec};

/// What [`super::run`] should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Poincare,
    Evolve,
    DnSeries,
    Sweep,
    Collapse,
    PeaksVsChi,
    PerturbativeCompare,
}

impl ExperimentKind {
    /// Kinds that iterate over the sweep axes.
    pub fn uses_axes(self) -> bool {
        matches!(self, ExperimentKind::Sweep | ExperimentKind::PeaksVsChi)
    }
}

/// Lists of parameter values whose Cartesian product a sweep visits.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    #[serde(rename = "K", default)]
    pub k: Vec<f64>,
    #[serde(default)]
    pub eta: Vec<f64>,
    #[serde(rename = "D", default)]
    pub d: Vec<f64>,
}

/// First-peak detection settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakSettings {
    pub smooth_window: usize,
    pub prominence: f64,
}

impl Default for PeakSettings {
    fn default() -> Self {
        Self {
            smooth_window: 3,
            prominence: 0.05,
        }
    }
}

/// One experiment, read from a single JSON document. Every field has a
/// default, so `{"kind": "evolve"}` is a complete config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub model: ModelParams,
    pub reservoir: ReservoirParams,
    pub x0: (f64, f64),
    pub grid: GridSpec,
    /// Widen the domain so a diffusing state stays clear of the edges.
    pub widen_for_diffusion: bool,
    pub classical: ClassicalChoice,
    pub n_kicks: usize,
    pub sweep: SweepAxes,
    pub out_dir: PathBuf,
    /// Write snapshots every this many kicks; 0 disables them.
    pub snapshot_every: usize,
    pub seed: u64,
    /// Worker threads for sweeps; `None` means one per core.
    pub workers: Option<usize>,
    /// Number of orbits in a Poincaré run.
    pub n_seeds: usize,
    pub peak: PeakSettings,
    /// Interval of chi used by the log-log fit of `peaks_vs_chi`.
    pub chi_range: (f64, f64),
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::DnSeries,
            model: ModelParams::default(),
            reservoir: ReservoirParams::default(),
            x0: (0.0, 1.1),
            grid: GridSpec::default(),
            widen_for_diffusion: false,
            classical: ClassicalChoice::Auto,
            n_kicks: 60,
            sweep: SweepAxes::default(),
            out_dir: PathBuf::from("kho-out"),
            snapshot_every: 0,
            seed: 0,
            workers: None,
            n_seeds: 20,
            peak: PeakSettings::default(),
            chi_range: (1e-4, 1e-2),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| KhoError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| KhoError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(KhoError::Config(m));
        if self.n_kicks == 0 {
            return bad("n_kicks must be at least 1".into());
        }
        if self.grid.n_cells < 8 || !(self.grid.extent > 0.0 && self.grid.extent.is_finite()) {
            return bad(format!("unusable grid {:?}", self.grid));
        }
        let d = self.reservoir.d;
        if !(d >= 0.0 && d.is_finite()) {
            return bad(format!("D must be finite and >= 0, got {d}"));
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        if self.peak.smooth_window == 0 || self.peak.smooth_window % 2 == 0 {
            return bad(format!("peak smoothing window must be odd, got {}", self.peak.smooth_window));
        }
        if self.kind.uses_axes() || self.kind == ExperimentKind::Collapse {
            if self.sweep.eta.is_empty() {
                return bad("sweep axis eta is empty".into());
            }
            if self.kind.uses_axes() && self.sweep.k.is_empty() {
                return bad("sweep axis K is empty".into());
            }
            if self.kind.uses_axes() && self.sweep.d.is_empty() {
                return bad("sweep axis D is empty".into());
            }
        }
        if self.kind == ExperimentKind::Poincare && self.n_seeds == 0 {
            return bad("n_seeds must be at least 1".into());
        }
        if self.kind == ExperimentKind::PerturbativeCompare && d <= 0.0 {
            return bad("perturbative_compare needs D > 0".into());
        }
        if self.kind != ExperimentKind::Poincare && !self.kind.uses_axes() {
            self.model.validate().map_err(|e| KhoError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Grid for one run at `eta` and `d`, widened for diffusion if asked.
    pub fn grid_for(&self, eta: f64, d: f64) -> GridSpec {
        if !self.widen_for_diffusion {
            return self.grid;
        }
        let spread = (eta * eta + 2.0 * d * self.n_kicks as f64).sqrt();
        let reach = self.x0.0.hypot(self.x0.1) + 2.5 + 5.0 * spread;
        GridSpec {
            extent: self.grid.extent.max(reach),
            n_cells: self.grid.n_cells,
        }
    }

    /// Worker count: `KHO_WORKERS` beats the config, which beats the core count.
    pub fn worker_count(&self) -> usize {
        std::env::var("KHO_WORKERS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n > 0)
            .or(self.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json_fills_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"kind": "evolve", "model": {"K": 2.0, "eta": 0.125}}"#).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Evolve);
        assert_eq!(cfg.model.k, 2.0);
        assert!((cfg.model.nu_tau - std::f64::consts::PI / 3.0).abs() < 1e-15);
        assert_eq!(cfg.n_kicks, 60);
        cfg.validate().unwrap();
    }

    #[test]
    fn json_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.sweep.eta = vec![0.25, 0.125];
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_field_is_config_error() {
        let err = ExperimentConfig::from_json(r#"{"kind": "evolve", "kicks": 3}"#).unwrap_err();
        assert!(matches!(err, KhoError::Config(_)));
    }

    #[test]
    fn sweep_axes_must_be_filled() {
        let mut cfg = ExperimentConfig {
            kind: ExperimentKind::Sweep,
            ..Default::default()
        };
        cfg.sweep.k = vec![0.5];
        cfg.sweep.eta = vec![0.25];
        assert!(matches!(cfg.validate(), Err(KhoError::Config(m)) if m.contains("D")));
        cfg.sweep.d = vec![0.1];
        cfg.validate().unwrap();
    }

    #[test]
    fn zero_kicks_rejected() {
        let cfg = ExperimentConfig {
            n_kicks: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn widened_grid_covers_diffusion() {
        let cfg = ExperimentConfig {
            widen_for_diffusion: true,
            n_kicks: 50,
            grid: GridSpec { extent: 4.0, n_cells: 512 },
            ..Default::default()
        };
        assert!((cfg.grid_for(0.25, 0.0).extent - 4.85).abs() < 1e-9);
        let fixed = ExperimentConfig { widen_for_diffusion: false, ..cfg.clone() };
        assert_eq!(fixed.grid_for(0.0625, 0.1).extent, 4.0);
        let wide = cfg.grid_for(0.0625, 0.1).extent;
        assert!(wide > 18.0 && wide < 20.0, "{wide}");
    }
}
