//! Independent reference implementations used to check the production
//! kernels. They share no numerical code with the evolution modules: the
//! kick is integrated directly over `mu`, the Wigner function is built from a
//! wavefunction by an explicit sum, and classical transport is sampled with
//! trajectories.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{KhoError, Result};
use crate::grid::{Field, FieldKind, ModelParams, PhaseSpaceGrid};
use crate::maps::strobe_step;

/// Largest grid the brute-force kick accepts per axis.
pub const BRUTE_FORCE_MAX_CELLS: usize = 256;

/// Direct trapezoid quadrature of the one-kick propagator
/// `(1 / 2 pi eta^2) int dmu exp(i [K sin q sin mu - mu (p - p') ] / eta^2)`
/// over `mu` in `[-mu_cutoff, mu_cutoff]`, applied column by column with
/// periodic wrap in `p`.
///
/// With `eta^2 = s dp` the integrand is periodic in `mu` with period
/// `2 pi s`; a cutoff of `pi s` then makes the trapezoid rule spectrally exact.
pub fn brute_force_kick(f: &Field, k: f64, eta: f64, mu_cutoff: f64, mu_steps: usize) -> Result<Field> {
    let g = *f.grid();
    if g.nq() > BRUTE_FORCE_MAX_CELLS || g.np() > BRUTE_FORCE_MAX_CELLS {
        return Err(KhoError::InvalidGrid(format!(
            "brute-force kick is limited to {BRUTE_FORCE_MAX_CELLS}^2 cells, got {} x {}",
            g.nq(),
            g.np()
        )));
    }
    let eta_sq = eta * eta;
    if !(mu_cutoff > 0.0) || (mu_steps as f64) < 64.0 * mu_cutoff / eta_sq {
        return Err(KhoError::InvalidParameter(format!(
            "mu quadrature under-resolved: {mu_steps} steps for cutoff {mu_cutoff} (need >= {})",
            (64.0 * mu_cutoff / eta_sq).ceil()
        )));
    }
    let np = g.np();
    let half = (np / 2) as i64;
    let h = 2.0 * mu_cutoff / mu_steps as f64;
    let mus: Vec<f64> = (0..=mu_steps).map(|i| -mu_cutoff + i as f64 * h).collect();
    let out: Vec<f64> = (0..g.nq())
        .into_par_iter()
        .flat_map_iter(|iq| {
            let a = k * g.q(iq).sin() / eta_sq;
            // weight of a shift by j cells, j in [-np/2, np/2)
            let weights: Vec<f64> = (-half..half)
                .map(|j| {
                    let dp_shift = j as f64 * g.dp();
                    let mut acc = 0.0;
                    for (i, &mu) in mus.iter().enumerate() {
                        let end = if i == 0 || i == mu_steps { 0.5 } else { 1.0 };
                        acc += end * (a * mu.sin() - mu * dp_shift / eta_sq).cos();
                    }
                    acc * h * g.dp() / (2.0 * std::f64::consts::PI * eta_sq)
                })
                .collect();
            let col = f.column(iq).to_vec();
            (0..np).map(move |ip| {
                let mut acc = 0.0;
                for (w, j) in weights.iter().zip(-half..half) {
                    let src = (ip as i64 - j).rem_euclid(np as i64) as usize;
                    acc += w * col[src];
                }
                acc
            })
        })
        .collect();
    Field::from_values(g, out, f.kind())
}

/// Wavefunction samples `psi(q0 + i h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    pub q0: f64,
    pub h: f64,
    pub amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Samples on the half-spacing lattice of `grid` (`h = dq / 2`), so that
    /// grid nodes are every second sample and `q +- k h` stays on the lattice.
    pub fn on_half_lattice(grid: &PhaseSpaceGrid, psi: impl Fn(f64) -> Complex64) -> Self {
        let h = 0.5 * grid.dq();
        let q0 = grid.q_min();
        let amplitudes = (0..2 * grid.nq()).map(|i| psi(q0 + i as f64 * h)).collect();
        Self { q0, h, amplitudes }
    }

    /// Minimum-uncertainty state with `var q = var p = eta^2` at `(q0, p0)`.
    pub fn coherent(grid: &PhaseSpaceGrid, center: (f64, f64), eta: f64) -> Self {
        let hbar = 2.0 * eta * eta;
        let norm = (2.0 * std::f64::consts::PI * eta * eta).powf(-0.25);
        Self::on_half_lattice(grid, |q| {
            let x = q - center.0;
            Complex64::from_polar(norm * (-x * x / (4.0 * eta * eta)).exp(), center.1 * q / hbar)
        })
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.h
    }

    fn at(&self, i: i64) -> Complex64 {
        if i >= 0 && (i as usize) < self.amplitudes.len() {
            self.amplitudes[i as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// `psi -> exp(-i K cos q / hbar) psi`, the position-diagonal kick.
    pub fn kicked(&self, k: f64, eta: f64) -> Self {
        let hbar = 2.0 * eta * eta;
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let q = self.q0 + i as f64 * self.h;
                a * Complex64::from_polar(1.0, -k * q.cos() / hbar)
            })
            .collect();
        Self {
            q0: self.q0,
            h: self.h,
            amplitudes,
        }
    }
}

/// `W(q, p) = (h / pi hbar) sum_k psi*(q + k h) psi(q - k h) exp(2 i p k h / hbar)`
/// at the nodes of `grid`, which must sit on every second sample of `psi`.
pub fn wigner_of(psi: &PureState, grid: &PhaseSpaceGrid, eta: f64) -> Result<Field> {
    let hbar = 2.0 * eta * eta;
    let stride = grid.dq() / psi.h;
    if (stride - 2.0).abs() > 1e-9 || ((grid.q_min() - psi.q0) / psi.h).fract().abs() > 1e-9 {
        return Err(KhoError::GridMismatch);
    }
    let offset = ((grid.q_min() - psi.q0) / psi.h).round() as i64;
    let n = psi.amplitudes.len() as i64;
    let np = grid.np();
    let out: Vec<f64> = (0..grid.nq())
        .into_par_iter()
        .flat_map_iter(|iq| {
            let centre = offset + 2 * iq as i64;
            let products: Vec<(i64, Complex64)> = (-n..=n)
                .filter_map(|kk| {
                    let v = psi.at(centre + kk).conj() * psi.at(centre - kk);
                    (v.norm_sqr() > 0.0).then_some((kk, v))
                })
                .collect();
            (0..np).map(move |ip| {
                let p = grid.p(ip);
                let mut acc = 0.0;
                for &(kk, v) in &products {
                    let phase = 2.0 * p * kk as f64 * psi.h / hbar;
                    acc += (v * Complex64::from_polar(1.0, phase)).re;
                }
                acc * psi.h / (std::f64::consts::PI * hbar)
            })
        })
        .collect();
    Field::from_values(*grid, out, FieldKind::Quantum)
}

/// Wigner function of the kicked pure state.
pub fn wavefunction_kick_oracle(psi: &PureState, grid: &PhaseSpaceGrid, k: f64, eta: f64) -> Result<Field> {
    wigner_of(&psi.kicked(k, eta), grid, eta)
}

/// Samples per independent random stream.
const MC_CHUNK: usize = 1 << 16;

/// Trajectory ensemble: Gaussian initial cloud of variance `eta^2` per axis,
/// `n_kicks` strobe steps each followed by Gaussian noise of variance `2D`
/// per axis, histogrammed onto the nearest node and divided by
/// `n_samples * cell_area`. Samples that leave the grid are dropped.
///
/// The output depends only on `seed`: every chunk of samples draws from its
/// own ChaCha stream selected by the chunk index.
pub fn monte_carlo_classical(
    x0: (f64, f64),
    params: &ModelParams,
    d: f64,
    n_kicks: usize,
    n_samples: usize,
    seed: u64,
    grid: &PhaseSpaceGrid,
) -> Result<Field> {
    if n_samples == 0 {
        return Err(KhoError::InvalidParameter("n_samples must be positive".into()));
    }
    if !(d >= 0.0 && d.is_finite()) {
        return Err(KhoError::InvalidParameter(format!("D must be finite and >= 0, got {d}")));
    }
    let start = Normal::new(0.0, params.eta).map_err(|e| KhoError::InvalidParameter(e.to_string()))?;
    let noise = Normal::new(0.0, (2.0 * d).sqrt()).map_err(|e| KhoError::InvalidParameter(e.to_string()))?;
    let chunks = n_samples.div_ceil(MC_CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut hist = vec![0u32; grid.len()];
            let len = MC_CHUNK.min(n_samples - c * MC_CHUNK);
            for _ in 0..len {
                let mut x = (x0.0 + start.sample(&mut rng), x0.1 + start.sample(&mut rng));
                for _ in 0..n_kicks {
                    x = strobe_step(x, params);
                    if d > 0.0 {
                        x.0 += noise.sample(&mut rng);
                        x.1 += noise.sample(&mut rng);
                    }
                }
                if let Some((iq, ip)) = grid.nearest_node(x.0, x.1) {
                    hist[grid.index(iq, ip)] += 1;
                }
            }
            hist
        })
        .reduce(
            || vec![0u32; grid.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let scale = 1.0 / (n_samples as f64 * grid.cell_area());
    let values = counts.into_iter().map(|c| c as f64 * scale).collect();
    Field::from_values(*grid, values, FieldKind::Classical)
}
