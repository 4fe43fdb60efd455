//! Phase-space discretization and the field container.
//!
//! Nodes sit at `q_i = q_min + i·dq` for `i = 0..nq` (same for `p`), so with
//! an even cell count the origin is always a node and the periodic image of
//! `q_max` is `q_min`. Values are stored row-major with `q` as the outer
//! index: `values[iq * np + ip]`. A fixed-`q` line along `p` is therefore
//! contiguous and is called a column throughout the crate.

mod snapshot;

pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{KhoError, Result};

/// Default half-width of the square domain.
pub const DEFAULT_EXTENT: f64 = 3.0 * PI;

/// Largest admissible comb-to-cell ratio `eta^2 / dp`.
pub const MAX_COMB_RATIO: f64 = 1e6;

/// Number of cells next to each edge watched by [`Field::boundary_fraction`].
pub const BOUNDARY_BAND: usize = 5;

/// Boundary mass fraction above which a run is flagged as contaminated.
pub const BOUNDARY_THRESHOLD: f64 = 1e-4;

/// Uniform rectangular grid, symmetric about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    nq: usize,
    np: usize,
    q_max: f64,
    p_max: f64,
    dq: f64,
    dp: f64,
}

impl PhaseSpaceGrid {
    /// Grid on `[-q_max, q_max) x [-p_max, p_max)` with `nq x np` cells.
    pub fn new(nq: usize, np: usize, q_max: f64, p_max: f64) -> Result<Self> {
        if nq < 2 || np < 2 {
            return Err(KhoError::InvalidGrid(format!(
                "need at least 2 cells per axis, got {nq} x {np}"
            )));
        }
        if nq % 2 != 0 || np % 2 != 0 {
            return Err(KhoError::InvalidGrid(format!(
                "cell counts must be even, got {nq} x {np}"
            )));
        }
        if !(q_max.is_finite() && q_max > 0.0 && p_max.is_finite() && p_max > 0.0) {
            return Err(KhoError::InvalidGrid(format!(
                "extents must be positive and finite, got q_max={q_max}, p_max={p_max}"
            )));
        }
        if nq > u32::MAX as usize || np > u32::MAX as usize {
            return Err(KhoError::InvalidGrid("cell count overflows u32".into()));
        }
        Ok(Self {
            nq,
            np,
            q_max,
            p_max,
            dq: 2.0 * q_max / nq as f64,
            dp: 2.0 * p_max / np as f64,
        })
    }

    /// Square grid from a spacing: `n` cells of width `spacing` per axis.
    pub fn square(n: usize, spacing: f64) -> Result<Self> {
        let half = 0.5 * n as f64 * spacing;
        Self::new(n, n, half, half)
    }

    pub fn nq(&self) -> usize {
        self.nq
    }

    pub fn np(&self) -> usize {
        self.np
    }

    pub fn len(&self) -> usize {
        self.nq * self.np
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn q_min(&self) -> f64 {
        -self.q_max
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn p_min(&self) -> f64 {
        -self.p_max
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn dq(&self) -> f64 {
        self.dq
    }

    pub fn dp(&self) -> f64 {
        self.dp
    }

    pub fn cell_area(&self) -> f64 {
        self.dq * self.dp
    }

    #[inline]
    pub fn q(&self, iq: usize) -> f64 {
        -self.q_max + iq as f64 * self.dq
    }

    #[inline]
    pub fn p(&self, ip: usize) -> f64 {
        -self.p_max + ip as f64 * self.dp
    }

    #[inline]
    pub fn index(&self, iq: usize, ip: usize) -> usize {
        iq * self.np + ip
    }

    /// Node nearest to `(q, p)`, or `None` outside the domain.
    pub fn nearest_node(&self, q: f64, p: f64) -> Option<(usize, usize)> {
        let iq = ((q + self.q_max) / self.dq).round();
        let ip = ((p + self.p_max) / self.dp).round();
        if iq < 0.0 || ip < 0.0 || iq >= self.nq as f64 || ip >= self.np as f64 {
            return None;
        }
        Some((iq as usize, ip as usize))
    }

    /// `Some(s)` when `eta^2 = s * dp` for a positive integer `s`.
    ///
    /// This is what lets the Bessel comb of the quantum kick land on nodes.
    pub fn comb_cells(&self, eta: f64) -> Option<usize> {
        let ratio = eta * eta / self.dp;
        let s = ratio.round();
        if s >= 1.0 && (ratio - s).abs() <= 1e-9 * s {
            Some(s as usize)
        } else {
            None
        }
    }
}

/// Square grid on `[-extent, extent]^2` tuned for quantum evolution at `eta`.
///
/// When the requested spacing `2·extent/n_cells` is finer than `eta^2`, the
/// spacing is lowered to `eta^2 / s` with the smallest integer `s` that keeps
/// it at or below the request, so the momentum comb lands on nodes. The cell
/// count is kept, which means the achieved extent can come out smaller than
/// requested (never by more than a factor two). When `eta^2` is already below
/// the requested spacing no integer `s` exists; the grid is returned as
/// requested and the quantum kick runs through its transform-domain form.
pub fn make_grid(extent: f64, n_cells: usize, eta: f64) -> Result<PhaseSpaceGrid> {
    if !(extent.is_finite() && extent > 0.0) {
        return Err(KhoError::InvalidGrid(format!("extent must be positive, got {extent}")));
    }
    if n_cells == 0 || n_cells % 2 != 0 {
        return Err(KhoError::InvalidGrid(format!(
            "n_cells must be positive and even, got {n_cells}"
        )));
    }
    if !(eta.is_finite() && eta > 0.0) {
        return Err(KhoError::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    if extent < 4.0 * eta {
        return Err(KhoError::OutOfDomain(format!(
            "extent {extent} is smaller than 4 eta = {}",
            4.0 * eta
        )));
    }
    let requested = 2.0 * extent / n_cells as f64;
    let eta_sq = eta * eta;
    let spacing = if eta_sq >= requested {
        let s = (eta_sq / requested * (1.0 - 1e-12)).ceil();
        if s > MAX_COMB_RATIO {
            return Err(KhoError::InvalidGrid(format!(
                "eta^2/dp = {s} exceeds {MAX_COMB_RATIO}"
            )));
        }
        eta_sq / s
    } else {
        requested
    };
    PhaseSpaceGrid::square(n_cells, spacing)
}

/// Which evolution a field belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Quantum,
    Classical,
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Quantum => "quantum",
            FieldKind::Classical => "classical",
        }
    }
}

/// Kick amplitude, rotation per period, and Lamb-Dicke parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(default = "default_nu_tau")]
    pub nu_tau: f64,
    pub eta: f64,
}

fn default_nu_tau() -> f64 {
    PI / 3.0
}

impl ModelParams {
    pub fn new(k: f64, eta: f64) -> Self {
        Self {
            k,
            nu_tau: default_nu_tau(),
            eta,
        }
    }

    /// Effective Planck constant `2 eta^2`.
    pub fn hbar_eff(&self) -> f64 {
        2.0 * self.eta * self.eta
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.k >= 0.0) {
            return Err(KhoError::InvalidParameter(format!("K must be finite and >= 0, got {}", self.k)));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(KhoError::InvalidParameter(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.nu_tau > 0.0 && self.nu_tau < 2.0 * PI) {
            return Err(KhoError::InvalidParameter(format!(
                "nu_tau must lie in (0, 2 pi), got {}",
                self.nu_tau
            )));
        }
        Ok(())
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::new(0.5, 0.25)
    }
}

/// Real distribution sampled on a [`PhaseSpaceGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: PhaseSpaceGrid,
    values: Vec<f64>,
    kind: FieldKind,
    kick_index: u32,
}

impl Field {
    pub fn zeros(grid: PhaseSpaceGrid, kind: FieldKind) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            kind,
            kick_index: 0,
        }
    }

    pub fn from_values(grid: PhaseSpaceGrid, values: Vec<f64>, kind: FieldKind) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(KhoError::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(KhoError::InvalidParameter(format!("non-finite field value {bad}")));
        }
        Ok(Self {
            grid,
            values,
            kind,
            kick_index: 0,
        })
    }

    /// Samples `f(q, p)` at every node.
    pub fn from_fn(grid: PhaseSpaceGrid, kind: FieldKind, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for iq in 0..grid.nq() {
            let q = grid.q(iq);
            for ip in 0..grid.np() {
                values.push(f(q, grid.p(ip)));
            }
        }
        Self {
            grid,
            values,
            kind,
            kick_index: 0,
        }
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn kick_index(&self) -> u32 {
        self.kick_index
    }

    pub fn with_kind(mut self, kind: FieldKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_kick_index(mut self, n: u32) -> Self {
        self.kick_index = n;
        self
    }

    /// Same metadata, new values.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.grid.len());
        Self {
            grid: self.grid,
            values,
            kind: self.kind,
            kick_index: self.kick_index,
        }
    }

    pub fn column(&self, iq: usize) -> &[f64] {
        let np = self.grid.np();
        &self.values[iq * np..(iq + 1) * np]
    }

    pub fn at(&self, iq: usize, ip: usize) -> f64 {
        self.values[self.grid.index(iq, ip)]
    }

    pub fn require_kind(&self, kind: FieldKind) -> Result<()> {
        if self.kind != kind {
            return Err(KhoError::KindMismatch {
                expected: kind.name(),
                got: self.kind.name(),
            });
        }
        Ok(())
    }

    pub fn require_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(KhoError::GridMismatch);
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Field {
        self.with_values(self.values.iter().map(|v| v * factor).collect())
    }

    /// `a·self + b·other` on a shared grid; keeps this field's metadata.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        self.require_same_grid(other)?;
        Ok(self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        ))
    }

    pub fn abs(&self) -> Field {
        self.with_values(self.values.iter().map(|v| v.abs()).collect())
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Node holding the largest value.
    pub fn argmax(&self) -> (usize, usize) {
        let (idx, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        (idx / self.grid.np(), idx % self.grid.np())
    }

    /// Fraction of absolute mass within [`BOUNDARY_BAND`] cells of any edge.
    pub fn boundary_fraction(&self) -> f64 {
        let (nq, np) = (self.grid.nq(), self.grid.np());
        let band = BOUNDARY_BAND.min(nq / 2).min(np / 2);
        let mut edge = 0.0;
        let mut total = 0.0;
        for iq in 0..nq {
            let q_edge = iq < band || iq >= nq - band;
            for (ip, v) in self.column(iq).iter().enumerate() {
                let a = v.abs();
                total += a;
                if q_edge || ip < band || ip >= np - band {
                    edge += a;
                }
            }
        }
        if total > 0.0 {
            edge / total
        } else {
            0.0
        }
    }

    /// Means and variances `(<q>, <p>, var q, var p)` of a unit-mass field.
    pub fn moments(&self) -> Moments {
        let g = &self.grid;
        let mut m0 = 0.0;
        let (mut mq, mut mp, mut mqq, mut mpp) = (0.0, 0.0, 0.0, 0.0);
        for iq in 0..g.nq() {
            let q = g.q(iq);
            for (ip, &v) in self.column(iq).iter().enumerate() {
                let p = g.p(ip);
                m0 += v;
                mq += v * q;
                mp += v * p;
                mqq += v * q * q;
                mpp += v * p * p;
            }
        }
        let mean_q = mq / m0;
        let mean_p = mp / m0;
        Moments {
            mass: m0 * g.cell_area(),
            mean_q,
            mean_p,
            var_q: mqq / m0 - mean_q * mean_q,
            var_p: mpp / m0 - mean_p * mean_p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mass: f64,
    pub mean_q: f64,
    pub mean_p: f64,
    pub var_q: f64,
    pub var_p: f64,
}

/// Riemann sum of the field over the grid.
pub fn integrate(f: &Field) -> f64 {
    f.values.iter().sum::<f64>() * f.grid.cell_area()
}

/// Gaussian Wigner function of the coherent state centred at `center`,
/// with width `eta` along both axes, renormalized to unit Riemann mass.
pub fn coherent_state(
    grid: &PhaseSpaceGrid,
    center: (f64, f64),
    eta: f64,
    kind: FieldKind,
) -> Result<Field> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(KhoError::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    let (q0, p0) = center;
    let margin = 4.0 * eta;
    if q0 - margin < grid.q_min()
        || q0 + margin > grid.q_max()
        || p0 - margin < grid.p_min()
        || p0 + margin > grid.p_max()
    {
        return Err(KhoError::OutOfDomain(format!(
            "center ({q0}, {p0}) needs a {margin} margin inside [{}, {}] x [{}, {}]",
            grid.q_min(),
            grid.q_max(),
            grid.p_min(),
            grid.p_max()
        )));
    }
    Ok(gaussian(grid, center, eta, kind))
}

/// Unit-mass isotropic Gaussian without the domain checks.
pub(crate) fn gaussian(grid: &PhaseSpaceGrid, center: (f64, f64), sigma: f64, kind: FieldKind) -> Field {
    let (q0, p0) = center;
    let two_var = 2.0 * sigma * sigma;
    let norm = 1.0 / (PI * two_var);
    let f = Field::from_fn(*grid, kind, |q, p| {
        norm * (-((q - q0).powi(2) + (p - p0).powi(2)) / two_var).exp()
    });
    let mass = integrate(&f);
    f.scaled(1.0 / mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn make_grid_commensurate_examples() {
        let g = make_grid(3.0 * PI, 512, 0.25).unwrap();
        assert_eq!(g.comb_cells(0.25), Some(2));
        assert!(g.dp() <= 2.0 * 3.0 * PI / 512.0);
        assert_eq!(g.nq(), 512);
        assert_eq!(g.np(), 512);
        assert_eq!(g.q_min(), -g.q_max());
        assert_eq!(g.p_min(), -g.p_max());

        let g = make_grid(3.0 * PI, 4096, 0.125).unwrap();
        let s = g.comb_cells(0.125).unwrap();
        assert_eq!(s as f64 * g.dp(), 0.015625);
    }

    #[test]
    fn make_grid_small_eta_is_sub_cell() {
        // eta^2 = 9.765625e-4 is below the requested spacing of 0.0368
        let g = make_grid(3.0 * PI, 512, 0.03125).unwrap();
        assert_eq!(g.comb_cells(0.03125), None);
        assert!((g.q_max() - 3.0 * PI).abs() < 1e-12);
        // with a fine enough request the same eta becomes exactly commensurate
        let g = make_grid(1.0, 2048, 0.03125).unwrap();
        assert_eq!(g.comb_cells(0.03125), Some(1));
        assert_eq!(g.dp(), 9.765625e-4);
    }

    #[test]
    fn make_grid_guards() {
        assert!(matches!(make_grid(0.5, 64, 0.25), Err(KhoError::OutOfDomain(_))));
        assert!(make_grid(3.0, 63, 0.25).is_err());
        assert!(make_grid(3.0, 0, 0.25).is_err());
        assert!(make_grid(-1.0, 64, 0.25).is_err());
        assert!(make_grid(3.0, 64, 0.0).is_err());
        // comb would need more than 1e6 cells per eta^2
        assert!(make_grid(4.0, 2_000_000_000, 1.0).is_err());
    }

    #[test]
    fn coherent_state_is_normalized_and_has_width_eta() {
        let g = make_grid(3.0 * PI, 512, 0.25).unwrap();
        let w = coherent_state(&g, (0.0, 0.0), 0.25, FieldKind::Quantum).unwrap();
        assert!((integrate(&w) - 1.0).abs() < 1e-12);
        assert!(g.dq() <= 0.25 / 4.0);
        let m = w.moments();
        assert!((m.var_q.sqrt() - 0.25).abs() / 0.25 < 5e-3);
        assert!((m.var_p.sqrt() - 0.25).abs() / 0.25 < 5e-3);
    }

    #[test]
    fn coherent_state_off_center_peak() {
        let g = make_grid(3.0 * PI, 512, 0.25).unwrap();
        let w = coherent_state(&g, (0.0, 1.1), 0.25, FieldKind::Classical).unwrap();
        assert_eq!(w.argmax(), g.nearest_node(0.0, 1.1).unwrap());
        assert_eq!(w.kind(), FieldKind::Classical);
        assert_eq!(w.kick_index(), 0);
        let m = w.moments();
        assert!((m.mean_p - 1.1).abs() < 1e-9);
    }

    #[test]
    fn coherent_state_near_boundary_is_rejected() {
        let g = make_grid(2.0, 128, 0.25).unwrap();
        assert!(coherent_state(&g, (0.0, g.p_max() - 0.5), 0.25, FieldKind::Quantum).is_err());
    }

    #[test]
    fn integrate_trivial_fields() {
        let g = PhaseSpaceGrid::new(64, 32, 2.0, 1.0).unwrap();
        let area = 4.0 * 2.0;
        let uniform = Field::from_fn(g, FieldKind::Classical, |_, _| 1.0 / area);
        assert!((integrate(&uniform) - 1.0).abs() < 1e-14);
        assert_eq!(integrate(&Field::zeros(g, FieldKind::Classical)), 0.0);
    }

    #[test]
    fn boundary_fraction_sees_edge_mass() {
        let g = PhaseSpaceGrid::new(64, 64, 2.0, 2.0).unwrap();
        let centred = gaussian(&g, (0.0, 0.0), 0.2, FieldKind::Classical);
        assert!(centred.boundary_fraction() < 1e-12);
        let mut v = vec![0.0; g.len()];
        v[g.index(0, 30)] = 1.0;
        v[g.index(30, 30)] = 1.0;
        let f = Field::from_values(g, v, FieldKind::Classical).unwrap();
        assert!((f.boundary_fraction() - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn make_grid_comb_is_exact(extent in 1.0f64..12.0, half in 16usize..600, eta in 0.05f64..1.0) {
            let n = 2 * half;
            prop_assume!(extent >= 4.0 * eta);
            let g = make_grid(extent, n, eta).unwrap();
            if eta * eta >= 2.0 * extent / n as f64 {
                let s = g.comb_cells(eta).expect("commensurate");
                prop_assert!((s as f64 * g.dp() - eta * eta).abs() <= 1e-15);
                prop_assert!(g.dp() <= 2.0 * extent / n as f64 * (1.0 + 1e-12));
                prop_assert!(g.q_max() >= 0.5 * extent * (1.0 - 1e-9));
            }
            prop_assert_eq!(g.nq(), n);
            prop_assert_eq!(g.q_min(), -g.q_max());
        }

        #[test]
        fn integrate_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -1.0f64..1.0) {
            let g = PhaseSpaceGrid::new(32, 48, 3.0, 2.0).unwrap();
            let f = Field::from_fn(g, FieldKind::Quantum, |q, p| (q * c).sin() + p * p);
            let h = Field::from_fn(g, FieldKind::Quantum, |q, p| (-q * q - p * p).exp() + c);
            let lhs = integrate(&f.combine(a, &h, b).unwrap());
            let rhs = a * integrate(&f) + b * integrate(&h);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())));
        }
    }
}
