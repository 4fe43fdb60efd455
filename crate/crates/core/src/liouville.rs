//! Classical Liouville transport over one kick period.
//!
//! Two discretizations of the same propagator are provided:
//!
//! * [`ClassicalScheme::SemiLagrangian`] follows the exact backward map.
//!   The kick is a shift of each `q` column and the rotation factors into
//!   three shears, so every stage is a set of 1D shifts. Each shift remaps
//!   the cumulative mass of a line with a limited monotone cubic and
//!   differences it, which keeps values non-negative and conserves mass up
//!   to what leaves the domain. Each step is still renormalized to the
//!   incoming mass and the factor reported. It shares no code with the
//!   quantum pipeline.
//! * [`ClassicalScheme::Spectral`] applies the kick as a transform-domain
//!   shift by `K sin q` and reuses the quantum rotation. Its discretization
//!   error is common-mode with the quantum pipeline, so differences between
//!   the two come only from the kick propagators. It does not clamp and
//!   therefore also transports signed fields.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoherence::diffuse;
use crate::error::Result;
use crate::grid::{integrate, Field, FieldKind, ModelParams, PhaseSpaceGrid};
use crate::spectral::{filter_columns, point_reflect, shear_rotate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalScheme {
    #[default]
    SemiLagrangian,
    Spectral,
}

/// Mass bookkeeping of one classical step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    /// `mass_in / mass_after_kick` applied after the kick.
    pub kick_factor: f64,
    /// Mass change of the rotation, before renormalization.
    pub rotate_drift: f64,
    /// `mass_in / mass_out` applied at the end of the step.
    pub step_factor: f64,
}

impl StepReport {
    fn exact() -> Self {
        Self {
            kick_factor: 1.0,
            rotate_drift: 0.0,
            step_factor: 1.0,
        }
    }
}

/// `out(q, p) = in(q, p - K sin q)`, a conservative monotone remap of each column, renormalized.
pub fn classical_kick_advect(f: &Field, k: f64) -> Result<Field> {
    classical_kick_advect_traced(f, k).map(|(field, _)| field)
}

/// As [`classical_kick_advect`], also returning the renormalization factor.
pub fn classical_kick_advect_traced(f: &Field, k: f64) -> Result<(Field, f64)> {
    f.require_kind(FieldKind::Classical)?;
    if k == 0.0 {
        return Ok((f.clone(), 1.0));
    }
    let g = *f.grid();
    let np = g.np();
    let mass_in = integrate(f);
    let mut out = vec![0.0; g.len()];
    out.par_chunks_mut(np).enumerate().for_each(|(iq, col)| {
        let shift = k * g.q(iq).sin() / g.dp();
        remap_shift(f.column(iq), shift, col);
    });
    let advected = f.with_values(out);
    let factor = renorm_factor(mass_in, integrate(&advected));
    Ok((advected.scaled(factor), factor))
}

/// `out(x) = in(R^-1 x)` by three conservative shears; mass carried past
/// the domain edge is dropped. Not renormalized.
pub fn classical_rotate(f: &Field, nu_tau: f64) -> Result<Field> {
    f.require_kind(FieldKind::Classical)?;
    Ok(f.with_values(remap_rotate(f, nu_tau)))
}

/// Kick, rotate and diffuse with the semi-Lagrangian scheme; renormalized.
pub fn classical_step(f: &Field, params: &ModelParams, d: f64) -> Result<Field> {
    classical_step_with(f, params, d, ClassicalScheme::SemiLagrangian).map(|(field, _)| field)
}

/// One classical kick period with the chosen scheme.
pub fn classical_step_with(
    f: &Field,
    params: &ModelParams,
    d: f64,
    scheme: ClassicalScheme,
) -> Result<(Field, StepReport)> {
    let next = f.kick_index() + 1;
    match scheme {
        ClassicalScheme::SemiLagrangian => {
            let mass_in = integrate(f);
            let (kicked, kick_factor) = classical_kick_advect_traced(f, params.k)?;
            let kicked_mass = integrate(&kicked);
            let rotated = classical_rotate(&kicked, params.nu_tau)?;
            let rotate_drift = integrate(&rotated) - kicked_mass;
            // transform-domain smoothing leaves round-off negatives behind
            let mut v = diffuse(&rotated, d)?.into_values();
            clamp_non_negative(&mut v);
            let smoothed = f.with_values(v);
            let step_factor = renorm_factor(mass_in, integrate(&smoothed));
            let report = StepReport {
                kick_factor,
                rotate_drift,
                step_factor,
            };
            Ok((smoothed.scaled(step_factor).with_kick_index(next), report))
        }
        ClassicalScheme::Spectral => {
            let kicked = spectral_kick(f, params.k);
            let rotated = f.with_values(shear_rotate(kicked.values(), f.grid(), params.nu_tau));
            Ok((diffuse(&rotated, d)?.with_kick_index(next), StepReport::exact()))
        }
    }
}

/// Transform-domain shift of every column by `K sin q`. Any field kind.
pub fn spectral_kick(f: &Field, k: f64) -> Field {
    if k == 0.0 {
        return f.clone();
    }
    let g = *f.grid();
    let mut v = f.values().to_vec();
    filter_columns(&mut v, &g, |iq, kp| Complex64::from_polar(1.0, -kp * k * g.q(iq).sin()));
    f.with_values(v)
}

fn renorm_factor(target: f64, actual: f64) -> f64 {
    if actual > 0.0 && target > 0.0 {
        target / actual
    } else {
        1.0
    }
}

fn clamp_non_negative(values: &mut [f64]) {
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Fourth-order centred slope of a non-decreasing sequence at its middle
/// node (unit spacing), limited to `[0, 3 min(left, right)]` so the Hermite
/// cubic through it stays monotone.
#[inline]
fn monotone_slope(y: [f64; 5]) -> f64 {
    let left = y[2] - y[1];
    let right = y[3] - y[2];
    let centred = (y[0] - 8.0 * y[1] + 8.0 * y[3] - y[4]) / 12.0;
    centred.clamp(0.0, 3.0 * left.min(right).max(0.0))
}

/// Mass-conserving, non-negative shift of a line of cell values:
/// `out[i] ~ src(i - shift)`, with zeros outside.
///
/// The cumulative mass at cell edges is non-decreasing; a monotone cubic
/// through it stays non-decreasing, so differencing it at the shifted edges
/// gives non-negative cells whose sum telescopes to the mass left inside.
fn remap_shift(src: &[f64], shift: f64, out: &mut [f64]) {
    let n = src.len();
    let mut cum = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    cum.push(0.0);
    for &v in src {
        acc += v;
        cum.push(acc);
    }
    let at = |k: i64| {
        if k <= 0 {
            0.0
        } else if k >= n as i64 {
            acc
        } else {
            cum[k as usize]
        }
    };
    let whole = shift.floor();
    let frac = shift - whole;
    if frac == 0.0 {
        let w = whole as i64;
        for (i, o) in out.iter_mut().enumerate() {
            let j = i as i64 - w;
            *o = if (0..n as i64).contains(&j) { src[j as usize] } else { 0.0 };
        }
        return;
    }
    // edge k samples the cumulative at k - shift = (k - whole - 1) + (1 - frac)
    let base = -(whole as i64) - 1;
    let t = 1.0 - frac;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let edge = |k: i64| {
        let j = k + base;
        let y = [at(j - 2), at(j - 1), at(j), at(j + 1), at(j + 2), at(j + 3)];
        let d0 = monotone_slope([y[0], y[1], y[2], y[3], y[4]]);
        let d1 = monotone_slope([y[1], y[2], y[3], y[4], y[5]]);
        h00 * y[2] + h10 * d0 + h01 * y[3] + h11 * d1
    };
    let mut lo = edge(0);
    for (i, o) in out.iter_mut().enumerate() {
        let hi = edge(i as i64 + 1);
        *o = (hi - lo).max(0.0);
        lo = hi;
    }
}

/// `out(x) = in(R^-1 x)` for the clockwise rotation, as three shears
/// `q += a p`, `p += b q`, `q += a p` with `a = tan(theta/2)`,
/// `b = -sin(theta)`, each a [`remap_shift`] of every line. Angles beyond a
/// quarter turn first take an exact half turn by point reflection.
fn remap_rotate(f: &Field, theta: f64) -> Vec<f64> {
    let g = *f.grid();
    let mut theta = theta.rem_euclid(2.0 * PI);
    if theta > PI {
        theta -= 2.0 * PI;
    }
    let mut v = if theta.abs() > 0.5 * PI {
        theta -= PI.copysign(theta);
        point_reflect(f.values(), &g)
    } else {
        f.values().to_vec()
    };
    if theta == 0.0 {
        return v;
    }
    let a = (0.5 * theta).tan();
    let b = -theta.sin();
    shear_rows(&mut v, &g, |ip| a * g.p(ip) / g.dq());
    let mut sheared = vec![0.0; v.len()];
    sheared.par_chunks_mut(g.np()).enumerate().for_each(|(iq, col)| {
        remap_shift(&v[iq * g.np()..(iq + 1) * g.np()], b * g.q(iq) / g.dp(), col);
    });
    shear_rows(&mut sheared, &g, |ip| a * g.p(ip) / g.dq());
    sheared
}

/// Remaps every constant-`p` row by `shift(ip)` cells along `q`.
fn shear_rows(values: &mut [f64], g: &PhaseSpaceGrid, shift: impl Fn(usize) -> f64 + Sync) {
    let (nq, np) = (g.nq(), g.np());
    let mut rows = vec![0.0; values.len()];
    rows.par_chunks_mut(nq).enumerate().for_each(|(ip, row)| {
        let line: Vec<f64> = (0..nq).map(|iq| values[iq * np + ip]).collect();
        remap_shift(&line, shift(ip), row);
    });
    values.par_chunks_mut(np).enumerate().for_each(|(iq, col)| {
        for (ip, c) in col.iter_mut().enumerate() {
            *c = rows[ip * nq + iq];
        }
    });
}
