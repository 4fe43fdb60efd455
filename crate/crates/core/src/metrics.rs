//! Quantum-classical distance, peak extraction and scaling fits.

use serde::{Deserialize, Serialize};

use crate::decoherence::diffuse;
use crate::error::{KhoError, Result};
use crate::grid::{coherent_state, integrate, make_grid, Field, FieldKind, ModelParams, BOUNDARY_THRESHOLD, DEFAULT_EXTENT};
use crate::liouville::{classical_step_with, ClassicalScheme};
use crate::wigner::{quantum_kick, quantum_rotate};

/// L1 distance `integrate(|wq - wc|)`.
pub fn dn(wq: &Field, wc: &Field) -> Result<f64> {
    wq.require_same_grid(wc)?;
    let sum: f64 = wq.values().iter().zip(wc.values()).map(|(a, b)| (a - b).abs()).sum();
    Ok(sum * wq.grid().cell_area())
}

/// Square domain `[-extent, extent]^2` with `n_cells` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub extent: f64,
    pub n_cells: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            extent: DEFAULT_EXTENT,
            n_cells: 512,
        }
    }
}

/// Which classical discretization runs next to the quantum one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalChoice {
    /// Transform-domain scheme with a reservoir, semi-Lagrangian without.
    #[default]
    Auto,
    SemiLagrangian,
    Spectral,
}

impl ClassicalChoice {
    pub fn resolve(self, d: f64) -> ClassicalScheme {
        match self {
            ClassicalChoice::Auto if d > 0.0 => ClassicalScheme::Spectral,
            ClassicalChoice::Auto | ClassicalChoice::SemiLagrangian => ClassicalScheme::SemiLagrangian,
            ClassicalChoice::Spectral => ClassicalScheme::Spectral,
        }
    }
}

/// Quantum and classical fields started from the same coherent state and
/// advanced in lockstep.
#[derive(Debug, Clone)]
pub struct PairedEvolution {
    quantum: Field,
    classical: Field,
    params: ModelParams,
    d: f64,
    scheme: ClassicalScheme,
    max_boundary: f64,
    quantum_mass0: f64,
}

impl PairedEvolution {
    pub fn new(x0: (f64, f64), params: &ModelParams, d: f64, grid: GridSpec, choice: ClassicalChoice) -> Result<Self> {
        params.validate()?;
        let g = make_grid(grid.extent, grid.n_cells, params.eta)?;
        let quantum = coherent_state(&g, x0, params.eta, FieldKind::Quantum)?;
        let classical = quantum.clone().with_kind(FieldKind::Classical);
        // reject a bad D before the first step
        diffuse(&quantum, d)?;
        Ok(Self {
            max_boundary: quantum.boundary_fraction(),
            quantum_mass0: integrate(&quantum),
            quantum,
            classical,
            params: *params,
            d,
            scheme: choice.resolve(d),
        })
    }

    pub fn quantum(&self) -> &Field {
        &self.quantum
    }

    pub fn classical(&self) -> &Field {
        &self.classical
    }

    pub fn kicks(&self) -> u32 {
        self.quantum.kick_index()
    }

    pub fn scheme(&self) -> ClassicalScheme {
        self.scheme
    }

    pub fn dn(&self) -> f64 {
        dn(&self.quantum, &self.classical).expect("fields share a grid")
    }

    /// Largest edge-band mass fraction seen so far, over both fields.
    pub fn max_boundary_fraction(&self) -> f64 {
        self.max_boundary
    }

    pub fn boundary_flag(&self) -> bool {
        self.max_boundary > BOUNDARY_THRESHOLD
    }

    /// Accumulated quantum mass change since the start.
    pub fn quantum_mass_drift(&self) -> f64 {
        integrate(&self.quantum) - self.quantum_mass0
    }

    pub fn step(&mut self) -> Result<()> {
        let p = &self.params;
        let kicked = quantum_kick(&self.quantum, p.k, p.eta)?;
        let next = self.quantum.kick_index() + 1;
        self.quantum = diffuse(&quantum_rotate(&kicked, p.nu_tau)?, self.d)?.with_kick_index(next);
        self.classical = classical_step_with(&self.classical, p, self.d, self.scheme)?.0;
        self.max_boundary = self
            .max_boundary
            .max(self.quantum.boundary_fraction())
            .max(self.classical.boundary_fraction());
        Ok(())
    }
}

/// `D_n` recorded immediately before kick `n` for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnSeries {
    #[serde(rename = "K")]
    pub k: f64,
    pub eta: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub x0: (f64, f64),
    pub values: Vec<(u32, f64)>,
    pub boundary_flag: bool,
}

impl DnSeries {
    pub fn dn_values(&self) -> Vec<f64> {
        self.values.iter().map(|&(_, v)| v).collect()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().map(|&(_, v)| v).fold(0.0, f64::max)
    }
}

pub fn dn_series(
    x0: (f64, f64),
    params: &ModelParams,
    d: f64,
    n_max: usize,
    grid: GridSpec,
    choice: ClassicalChoice,
) -> Result<DnSeries> {
    let mut run = PairedEvolution::new(x0, params, d, grid, choice)?;
    let mut values = Vec::with_capacity(n_max + 1);
    values.push((0, run.dn()));
    for _ in 0..n_max {
        run.step()?;
        values.push((run.kicks(), run.dn()));
    }
    Ok(DnSeries {
        k: params.k,
        eta: params.eta,
        d,
        x0,
        values,
        boundary_flag: run.boundary_flag(),
    })
}

/// Centred moving average; windows are truncated at the ends.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Height of the local maximum at `i` above the higher of its two bases,
/// each base being the lowest point before the signal rises above `s[i]`.
fn prominence(s: &[f64], i: usize) -> f64 {
    let mut left = s[i];
    for &v in s[..i].iter().rev() {
        if v > s[i] {
            break;
        }
        left = left.min(v);
    }
    let mut right = s[i];
    for &v in &s[i + 1..] {
        if v > s[i] {
            break;
        }
        right = right.min(v);
    }
    s[i] - left.max(right)
}

/// First local maximum of the smoothed series whose prominence exceeds
/// `prominence * max(smoothed)`. Returns the index and the raw value there.
pub fn first_peak(values: &[f64], smooth_window: usize, min_prominence: f64) -> Result<(usize, f64)> {
    if values.len() < 3 {
        return Err(KhoError::InsufficientData(format!("need at least 3 samples, got {}", values.len())));
    }
    if smooth_window == 0 || smooth_window % 2 == 0 {
        return Err(KhoError::InvalidParameter(format!("smoothing window must be odd, got {smooth_window}")));
    }
    let s = moving_average(values, smooth_window);
    let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = min_prominence * top;
    let mut i = 1;
    while i + 1 < s.len() {
        if s[i] > s[i - 1] {
            // walk across a plateau
            let mut j = i;
            while j + 1 < s.len() && s[j + 1] == s[i] {
                j += 1;
            }
            if j + 1 < s.len() && s[j + 1] < s[i] && prominence(&s, i) > threshold {
                let mid = (i + j) / 2;
                return Ok((mid, values[mid]));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    Err(KhoError::NoPeak)
}

/// [`first_peak`] on a series, reporting the kick index.
pub fn first_peak_of(series: &DnSeries, smooth_window: usize, min_prominence: f64) -> Result<(u32, f64)> {
    let (i, v) = first_peak(&series.dn_values(), smooth_window, min_prominence)?;
    Ok((series.values[i].0, v))
}

/// Lag in `min_lag..=max_lag` with the largest autocorrelation of the
/// series after removing a moving-average trend of width `trend_window`.
pub fn dominant_period(values: &[f64], trend_window: usize, min_lag: usize, max_lag: usize) -> Result<usize> {
    if values.len() < 2 * max_lag || min_lag == 0 || min_lag > max_lag {
        return Err(KhoError::InsufficientData(format!(
            "{} samples cannot resolve lags {min_lag}..={max_lag}",
            values.len()
        )));
    }
    let trend = moving_average(values, trend_window);
    let resid: Vec<f64> = values.iter().zip(&trend).map(|(v, t)| v - t).collect();
    let mean = resid.iter().sum::<f64>() / resid.len() as f64;
    let centred: Vec<f64> = resid.iter().map(|v| v - mean).collect();
    let acf = |lag: usize| {
        let n = centred.len() - lag;
        (0..n).map(|i| centred[i] * centred[i + lag]).sum::<f64>() / n as f64
    };
    (min_lag..=max_lag)
        .map(|lag| (lag, acf(lag)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(lag, _)| lag)
        .ok_or(KhoError::NoPeak)
}

/// One curve of a collapse fit: `(n, value)` samples at a given `eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub eta: f64,
    pub points: Vec<(f64, f64)>,
}

impl From<&DnSeries> for Curve {
    fn from(s: &DnSeries) -> Self {
        Self {
            eta: s.eta,
            points: s.values.iter().map(|&(n, v)| (n as f64, v)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseFit {
    pub alpha: f64,
    pub objective: f64,
    pub objective_at_zero: f64,
    /// The optimum sits on the lower end of the search range.
    pub no_rescaling_detected: bool,
}

impl CollapseFit {
    /// `objective(0) / objective(alpha*)`.
    pub fn improvement(&self) -> f64 {
        if self.objective > 0.0 {
            self.objective_at_zero / self.objective
        } else {
            f64::INFINITY
        }
    }
}

pub const ALPHA_RANGE: (f64, f64) = (0.1, 3.0);
const ALPHA_TOL: f64 = 1e-3;
const ALPHA_SCAN: usize = 59;
const OVERLAP_SAMPLES: usize = 256;

fn interp(points: &[(f64, f64)], x: f64) -> f64 {
    let i = points.partition_point(|&(s, _)| s < x);
    if i == 0 {
        return points[0].1;
    }
    if i == points.len() {
        return points[i - 1].1;
    }
    let (x0, y0) = points[i - 1];
    let (x1, y1) = points[i];
    if x1 == x0 {
        y1
    } else {
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// Mean pairwise L2 distance of the curves on the axis `s = n eta^alpha`,
/// each pair compared on its overlapping support only.
pub fn collapse_objective(curves: &[Curve], alpha: f64) -> f64 {
    let scaled: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|c| {
            let f = c.eta.powf(alpha);
            c.points.iter().map(|&(n, v)| (n * f, v)).collect()
        })
        .collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..scaled.len() {
        for j in i + 1..scaled.len() {
            let (a, b) = (&scaled[i], &scaled[j]);
            let lo = a[0].0.max(b[0].0);
            let hi = a[a.len() - 1].0.min(b[b.len() - 1].0);
            if !(hi > lo) {
                continue;
            }
            let step = (hi - lo) / (OVERLAP_SAMPLES - 1) as f64;
            let sq: f64 = (0..OVERLAP_SAMPLES)
                .map(|k| {
                    let x = lo + k as f64 * step;
                    (interp(a, x) - interp(b, x)).powi(2)
                })
                .sum();
            total += (sq / OVERLAP_SAMPLES as f64).sqrt();
            pairs += 1;
        }
    }
    if pairs == 0 {
        f64::INFINITY
    } else {
        total / pairs as f64
    }
}

/// Exponent `alpha` in `[0.1, 3]` that best collapses the curves onto the
/// rescaled time `n eta^alpha`: coarse scan, then golden section.
pub fn collapse_alpha(curves: &[Curve]) -> Result<CollapseFit> {
    if curves.len() < 2 {
        return Err(KhoError::InsufficientData(format!("need at least 2 curves, got {}", curves.len())));
    }
    for (i, c) in curves.iter().enumerate() {
        if c.points.len() < 2 {
            return Err(KhoError::InsufficientData(format!("curve {i} has fewer than 2 points")));
        }
        if !(c.eta > 0.0) {
            return Err(KhoError::InvalidParameter(format!("curve {i} has eta = {}", c.eta)));
        }
        if curves[..i].iter().any(|o| o.eta == c.eta) {
            return Err(KhoError::InvalidParameter(format!("duplicate eta {}", c.eta)));
        }
    }
    let first = curves[0].points[0].1;
    if curves.iter().all(|c| c.points.iter().all(|&(_, v)| v == first)) {
        return Err(KhoError::Degenerate("every curve is the same constant".into()));
    }

    let (lo, hi) = ALPHA_RANGE;
    let objective = |a: f64| collapse_objective(curves, a);
    let step = (hi - lo) / (ALPHA_SCAN - 1) as f64;
    let (best_k, _) = (0..ALPHA_SCAN)
        .map(|k| (k, objective(lo + k as f64 * step)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty scan");
    let mut a = (lo + (best_k as f64 - 1.0) * step).max(lo);
    let mut b = (lo + (best_k as f64 + 1.0) * step).min(hi);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while b - a > ALPHA_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = objective(d);
        }
    }
    let mut alpha = 0.5 * (a + b);
    let mut best = objective(alpha);
    for edge in [lo, hi] {
        let fe = objective(edge);
        if fe < best {
            alpha = edge;
            best = fe;
        }
    }
    Ok(CollapseFit {
        alpha,
        objective: best,
        objective_at_zero: objective(0.0),
        no_rescaling_detected: alpha - lo <= 2.0 * ALPHA_TOL,
    })
}

/// Least-squares slope of `ln(dn)` against `ln(chi)` over points with
/// `chi` in `range` (inclusive).
pub fn slope_loglog(points: &[(f64, f64)], range: (f64, f64)) -> Result<f64> {
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(c, v)| c >= range.0 && c <= range.1 && c > 0.0 && v > 0.0)
        .map(|&(c, v)| (c.ln(), v.ln()))
        .collect();
    if used.len() < 3 {
        return Err(KhoError::InsufficientData(format!(
            "need at least 3 points in range, got {}",
            used.len()
        )));
    }
    let n = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / n;
    let my = used.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(KhoError::Degenerate("all chi values coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Separation-time law parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingLaw {
    pub alpha: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Regular,
    Chaotic,
}

/// `tau / eta^alpha` (regular) or `(tau / lambda) ln(1/eta)` (chaotic).
pub fn predicted_ts(law: &ScalingLaw, eta: f64, tau: f64, regime: Regime) -> f64 {
    match regime {
        Regime::Regular => tau / eta.powf(law.alpha),
        Regime::Chaotic => tau / law.lambda * (1.0 / eta).ln(),
    }
}

/// `integrate(symbol * f)`.
pub fn observable_mean(f: &Field, symbol: impl Fn(f64, f64) -> f64) -> f64 {
    let g = f.grid();
    let np = g.np();
    let mut sum = 0.0;
    for iq in 0..g.nq() {
        let q = g.q(iq);
        for ip in 0..np {
            sum += symbol(q, g.p(ip)) * f.values()[iq * np + ip];
        }
    }
    sum * g.cell_area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PhaseSpaceGrid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn dn_examples() {
        let g = make_grid(3.0 * PI, 256, 0.25).unwrap();
        let f = coherent_state(&g, (0.0, 0.0), 0.25, FieldKind::Quantum).unwrap();
        assert_eq!(dn(&f, &f).unwrap(), 0.0);
        let far = coherent_state(&g, (2.5, 0.0), 0.25, FieldKind::Classical).unwrap();
        // centres 10 eta apart: the overlap deficit is 4 Phi(-5) = 1.15e-6 in
        // the continuum; the Riemann sum over the kinked overlap adds ~2e-7
        let deficit = 2.0 - dn(&f, &far).unwrap();
        assert!(deficit > 0.0 && (deficit - 4.0 * 2.866_515_718_791_939e-7).abs() < 3e-7, "{deficit}");
        let other = PhaseSpaceGrid::square(64, 0.1).unwrap();
        assert!(dn(&f, &Field::zeros(other, FieldKind::Quantum)).is_err());
    }

    #[test]
    fn disjoint_unit_masses() {
        let g = PhaseSpaceGrid::square(8, 0.5).unwrap();
        let mut a = vec![0.0; g.len()];
        let mut b = vec![0.0; g.len()];
        a[3] = 4.0;
        b[40] = 4.0;
        let a = Field::from_values(g, a, FieldKind::Quantum).unwrap();
        let b = Field::from_values(g, b, FieldKind::Classical).unwrap();
        assert_eq!(dn(&a, &b).unwrap(), 2.0);
    }

    #[test]
    fn dn_series_without_kick_stays_small() {
        let s = dn_series(
            (0.0, 1.1),
            &ModelParams::new(0.0, 0.25),
            0.0,
            12,
            GridSpec::default(),
            ClassicalChoice::Auto,
        )
        .unwrap();
        assert_eq!(s.values.len(), 13);
        assert_eq!(s.values[0], (0, 0.0));
        assert!(s.max() <= 1e-3, "max {}", s.max());
        assert!(!s.boundary_flag);
    }

    #[test]
    fn first_peak_examples() {
        assert_eq!(first_peak(&[0.0, 1.0, 2.0, 1.0, 0.0], 3, 0.05).unwrap(), (2, 2.0));
        assert!(matches!(first_peak(&[0.0, 1.0, 2.0, 3.0, 4.0], 3, 0.05), Err(KhoError::NoPeak)));
        assert!(first_peak(&[1.0, 2.0], 3, 0.05).is_err());
        // a small wiggle is skipped in favour of the prominent peak
        let v = [0.0, 0.2, 0.19, 0.5, 1.0, 2.0, 1.0, 0.5, 0.6];
        assert_eq!(first_peak(&v, 1, 0.05).unwrap(), (5, 2.0));
    }

    #[test]
    fn period_of_a_ripple() {
        let v: Vec<f64> = (0..120)
            .map(|n| 0.01 * n as f64 + 0.1 * (2.0 * PI * n as f64 / 6.0).sin())
            .collect();
        assert_eq!(dominant_period(&v, 13, 2, 12).unwrap(), 6);
    }

    fn synthetic(alpha: f64, etas: &[f64]) -> Vec<Curve> {
        etas.iter()
            .map(|&eta| Curve {
                eta,
                points: (0..200).map(|n| (n as f64, 1.0 - (-(n as f64) * eta.powf(alpha) / 5.0).exp())).collect(),
            })
            .collect()
    }

    #[test]
    fn collapse_recovers_synthetic_exponent() {
        let fit = collapse_alpha(&synthetic(0.7, &[0.5, 0.25, 0.125])).unwrap();
        assert!((fit.alpha - 0.7).abs() < 0.05, "{fit:?}");
        assert!(fit.improvement() > 2.0);
        assert!(!fit.no_rescaling_detected);
    }

    #[test]
    fn collapse_flags_raw_time_curves() {
        let fit = collapse_alpha(&synthetic(0.0, &[0.5, 0.25, 0.125])).unwrap();
        assert!(fit.no_rescaling_detected, "{fit:?}");
        assert_eq!(fit.objective_at_zero, 0.0);
    }

    #[test]
    fn collapse_rejects_bad_input() {
        let flat = vec![
            Curve { eta: 0.5, points: vec![(0.0, 1.0), (1.0, 1.0)] },
            Curve { eta: 0.25, points: vec![(0.0, 1.0), (1.0, 1.0)] },
        ];
        assert!(matches!(collapse_alpha(&flat), Err(KhoError::Degenerate(_))));
        assert!(collapse_alpha(&flat[..1]).is_err());
    }

    #[test]
    fn slope_examples() {
        let lin: Vec<(f64, f64)> = [1e-4, 1e-3, 1e-2, 0.1].iter().map(|&c| (c, 3.0 * c)).collect();
        assert!((slope_loglog(&lin, (1e-5, 1.0)).unwrap() - 1.0).abs() < 1e-12);
        let sq: Vec<(f64, f64)> = [1e-4, 1e-3, 1e-2].iter().map(|&c| (c, 3.0 * c * c)).collect();
        assert!((slope_loglog(&sq, (1e-5, 1.0)).unwrap() - 2.0).abs() < 1e-12);
        assert!(slope_loglog(&lin, (1e-3, 1e-2)).is_err());
    }

    #[test]
    fn separation_times() {
        let law = ScalingLaw { alpha: 1.0, lambda: 1.0 };
        assert!((predicted_ts(&law, 0.5, 1.0, Regime::Regular) - 2.0).abs() < 1e-15);
        assert!((predicted_ts(&law, (-1f64).exp(), 1.0, Regime::Chaotic) - 1.0).abs() < 1e-15);
        let law = ScalingLaw { alpha: 2.0, lambda: 1.0 };
        assert!((predicted_ts(&law, 0.1, 1.0, Regime::Regular) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn observable_examples() {
        let g = make_grid(3.0 * PI, 512, 0.25).unwrap();
        let f = coherent_state(&g, (0.0, 0.0), 0.25, FieldKind::Quantum).unwrap();
        assert!(observable_mean(&f, |q, _| q).abs() < 1e-10);
        assert!((observable_mean(&f, |_, _| 1.0) - 1.0).abs() < 1e-12);
        let f = coherent_state(&g, (0.0, 1.1), 0.25, FieldKind::Quantum).unwrap();
        let e = observable_mean(&f, |q, p| 0.5 * (q * q + p * p));
        assert!((e / 0.6675 - 1.0).abs() < 0.01, "{e}");
    }

    proptest! {
        #[test]
        fn dn_is_a_metric(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = PhaseSpaceGrid::square(16, 0.25).unwrap();
            let mut draw = || {
                let v: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                Field::from_values(g, v, FieldKind::Quantum).unwrap()
            };
            let (a, b, c) = (draw(), draw(), draw());
            let ab = dn(&a, &b).unwrap();
            prop_assert_eq!(ab, dn(&b, &a).unwrap());
            prop_assert!(ab <= dn(&a, &c).unwrap() + dn(&c, &b).unwrap() + 1e-12);
            prop_assert!(ab <= integrate(&a.abs()) + integrate(&b.abs()) + 1e-12);
            prop_assert!(ab > 0.0);
        }

        #[test]
        fn slope_ignores_overall_scale(c in 1e-3f64..1e3, k in 0.5f64..2.0) {
            let pts: Vec<(f64, f64)> = [1e-4, 3e-4, 1e-3, 5e-3, 1e-2].iter().map(|&x: &f64| (x, x.powf(k) * (1.0 + 0.1 * x.ln().sin()))).collect();
            let scaled: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x, c * y)).collect();
            let a = slope_loglog(&pts, (1e-4, 1e-2)).unwrap();
            let b = slope_loglog(&scaled, (1e-4, 1e-2)).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
