//! Wigner-function evolution over one kick period.
//!
//! The exact one-kick propagator acts column by column: a kick of amplitude
//! `K` at position `q` spreads the column over momentum shifts `m·eta^2`
//! weighted by `J_m(K sin q / eta^2)`. The harmonic segment between kicks is a
//! rigid rotation, applied by transform-domain shears. Nothing on the quantum
//! path clamps, so negative regions survive every operation.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::decoherence::diffuse;
use crate::error::{KhoError, Result};
use crate::grid::{Field, FieldKind, ModelParams};
use crate::special::{airy_ai, bessel_j_range};
use crate::spectral::{filter_columns, shear_rotate};

/// Default tolerance on the truncated weight sum.
pub const BESSEL_TOL: f64 = 1e-14;

/// Largest admissible comb half-width.
pub const MAX_COMB_ORDER: usize = 1_000_000;

/// Weights `(m, J_m(K sin q / eta^2))` of the momentum comb at position `q`,
/// truncated once the discarded tail is below `tol` and renormalized to sum 1.
pub fn bessel_kick_weights(q: f64, k: f64, eta: f64, tol: f64) -> Result<Vec<(i64, f64)>> {
    if !(tol > 0.0) {
        return Err(KhoError::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    if !(eta > 0.0) {
        return Err(KhoError::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    let a = k * q.sin() / (eta * eta);
    comb_weights(a, tol)
}

fn comb_weights(a: f64, tol: f64) -> Result<Vec<(i64, f64)>> {
    if a == 0.0 {
        return Ok(vec![(0, 1.0)]);
    }
    let aa = a.abs();
    let reach = aa + 12.0 * aa.cbrt() + 40.0;
    if reach > MAX_COMB_ORDER as f64 {
        return Err(KhoError::TruncationOverflow(reach as usize));
    }
    let js = bessel_j_range(reach as usize, a);
    // smallest M past |a| whose two-sided tail is below tol
    let mut tail = 0.0;
    let mut order = js.len() - 1;
    for m in (1..js.len()).rev() {
        tail += 2.0 * js[m].abs();
        if tail > tol || (m as f64) <= aa {
            order = m;
            break;
        }
    }
    let mut weights = Vec::with_capacity(2 * order + 1);
    for m in (1..=order).rev() {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        weights.push((-(m as i64), sign * js[m]));
    }
    for (m, &j) in js.iter().enumerate().take(order + 1) {
        weights.push((m as i64, j));
    }
    let sum: f64 = weights.iter().map(|w| w.1).sum();
    for w in weights.iter_mut() {
        w.1 /= sum;
    }
    Ok(weights)
}

/// Quantum kick; uses the node-exact comb when `eta^2 = s·dp`, the
/// transform-domain form of the same propagator otherwise.
pub fn quantum_kick(f: &Field, k: f64, eta: f64) -> Result<Field> {
    if f.grid().comb_cells(eta).is_some() {
        quantum_kick_comb(f, k, eta)
    } else {
        quantum_kick_spectral(f, k, eta)
    }
}

/// `out(q, p) = sum_m J_m(K sin q / eta^2) in(q, p - m eta^2)` with periodic wrap in `p`.
pub fn quantum_kick_comb(f: &Field, k: f64, eta: f64) -> Result<Field> {
    f.require_kind(FieldKind::Quantum)?;
    let g = *f.grid();
    let s = g.comb_cells(eta).ok_or(KhoError::Incommensurate {
        dp: g.dp(),
        eta_sq: eta * eta,
    })?;
    if k == 0.0 {
        return Ok(f.clone());
    }
    let np = g.np();
    let mut out = vec![0.0; g.len()];
    out.par_chunks_mut(np)
        .enumerate()
        .try_for_each(|(iq, col)| -> Result<()> {
            let src = f.column(iq);
            let weights = comb_weights(k * g.q(iq).sin() / (eta * eta), BESSEL_TOL)?;
            if weights.len() == 1 {
                col.copy_from_slice(src);
                return Ok(());
            }
            for &(m, w) in &weights {
                let shift = (m * s as i64).rem_euclid(np as i64) as usize;
                // out[ip] += w * src[ip - shift]
                let (head, tail) = col.split_at_mut(shift);
                for (o, v) in tail.iter_mut().zip(&src[..np - shift]) {
                    *o += w * v;
                }
                for (o, v) in head.iter_mut().zip(&src[np - shift..]) {
                    *o += w * v;
                }
            }
            Ok(())
        })?;
    Ok(f.with_values(out))
}

/// Transform-domain kick: the comb multiplies the `p`-spectrum of each column
/// by `exp(-i a sin(eta^2 k_p))`, `a = K sin q / eta^2`. Identical to the comb
/// on commensurate grids and valid for any spacing.
pub fn quantum_kick_spectral(f: &Field, k: f64, eta: f64) -> Result<Field> {
    f.require_kind(FieldKind::Quantum)?;
    if !(eta > 0.0) {
        return Err(KhoError::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    if k == 0.0 {
        return Ok(f.clone());
    }
    let g = *f.grid();
    let eta_sq = eta * eta;
    let mut v = f.values().to_vec();
    filter_columns(&mut v, &g, |iq, kp| {
        let a = k * g.q(iq).sin() / eta_sq;
        Complex64::from_polar(1.0, -a * (eta_sq * kp).sin())
    });
    Ok(f.with_values(v))
}

/// Harmonic evolution over one period: rigid rotation by `nu_tau`.
pub fn quantum_rotate(f: &Field, nu_tau: f64) -> Result<Field> {
    f.require_kind(FieldKind::Quantum)?;
    Ok(f.with_values(shear_rotate(f.values(), f.grid(), nu_tau)))
}

/// Kick, rotate, then diffuse with per-axis variance `2d`.
pub fn quantum_step(f: &Field, params: &ModelParams, d: f64) -> Result<Field> {
    let kicked = quantum_kick(f, params.k, params.eta)?;
    let rotated = quantum_rotate(&kicked, params.nu_tau)?;
    let next = f.kick_index() + 1;
    Ok(diffuse(&rotated, d)?.with_kick_index(next))
}

/// Semiclassical kick: per-column convolution with the Airy kernel
/// `|b|^{-1/3} Ai(-sign(b) (K sin q - dp_shift) / |b|^{1/3})`, `b = eta^4 K sin q / 2`,
/// sampled on the `p` grid and normalized to unit sum.
pub fn airy_kick(f: &Field, k: f64, eta: f64) -> Result<Field> {
    f.require_kind(FieldKind::Quantum)?;
    let g = *f.grid();
    let np = g.np();
    let half = (np / 2) as i64;
    let mut out = vec![0.0; g.len()];
    out.par_chunks_mut(np).enumerate().for_each(|(iq, col)| {
        let src = f.column(iq);
        let force = k * g.q(iq).sin();
        let b = 0.5 * eta.powi(4) * force;
        if b.abs() < f64::MIN_POSITIVE || force.abs() < 1e-14 {
            col.copy_from_slice(src);
            return;
        }
        let scale = b.abs().cbrt();
        let mut kernel: Vec<(i64, f64)> = (-half..half)
            .map(|j| {
                let shift = j as f64 * g.dp();
                (j, airy_ai(-b.signum() * (force - shift) / scale) / scale)
            })
            .collect();
        let peak = kernel.iter().map(|w| w.1.abs()).fold(0.0, f64::max);
        kernel.retain(|w| w.1.abs() >= 1e-12 * peak);
        let sum: f64 = kernel.iter().map(|w| w.1).sum();
        for &(j, w) in &kernel {
            let shift = j.rem_euclid(np as i64) as usize;
            let w = w / sum;
            let (head, tail) = col.split_at_mut(shift);
            for (o, v) in tail.iter_mut().zip(&src[..np - shift]) {
                *o += w * v;
            }
            for (o, v) in head.iter_mut().zip(&src[np - shift..]) {
                *o += w * v;
            }
        }
    });
    Ok(f.with_values(out))
}
