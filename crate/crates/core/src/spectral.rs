//! Line-by-line FFT plumbing shared by the transform-domain operators.
//!
//! Every operator here is a multiplier applied to the discrete Fourier
//! transform of each grid line, with periodic wrap. The forward transform
//! uses `exp(-i k x)`, so a shift `out(x) = in(x - d)` is the multiplier
//! `exp(-i k d)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::grid::PhaseSpaceGrid;

/// Angular wavenumbers of an `n`-point line with the given spacing, in FFT order.
/// The Nyquist bin is reported as positive.
pub(crate) fn wavenumbers(n: usize, spacing: f64) -> Vec<f64> {
    let base = 2.0 * PI / (n as f64 * spacing);
    (0..n)
        .map(|j| {
            let signed = if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
            signed as f64 * base
        })
        .collect()
}

struct LinePlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    ks: Vec<f64>,
    scratch_len: usize,
}

impl LinePlan {
    fn new(n: usize, spacing: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            ks: wavenumbers(n, spacing),
            scratch_len,
        }
    }
}

/// Applies `mult(line, k)` in the transform domain of every contiguous line
/// of length `line_len` in `data`.
///
/// The Nyquist bin receives the real part of its multiplier so that real
/// input stays real.
fn filter_lines<M>(data: &mut [f64], line_len: usize, spacing: f64, mult: M)
where
    M: Fn(usize, f64) -> Complex64 + Sync,
{
    let plan = LinePlan::new(line_len, spacing);
    let nyquist = line_len / 2;
    let scale = 1.0 / line_len as f64;
    data.par_chunks_mut(line_len).enumerate().for_each_init(
        || {
            (
                vec![Complex64::new(0.0, 0.0); line_len],
                vec![Complex64::new(0.0, 0.0); plan.scratch_len],
            )
        },
        |(buf, scratch), (line, values)| {
            for (b, &v) in buf.iter_mut().zip(values.iter()) {
                *b = Complex64::new(v, 0.0);
            }
            plan.forward.process_with_scratch(buf, scratch);
            for (j, b) in buf.iter_mut().enumerate() {
                let m = mult(line, plan.ks[j]);
                *b *= if j == nyquist { Complex64::new(m.re, 0.0) } else { m };
            }
            plan.inverse.process_with_scratch(buf, scratch);
            for (v, b) in values.iter_mut().zip(buf.iter()) {
                *v = b.re * scale;
            }
        },
    );
}

fn transpose(src: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut dst = vec![0.0; src.len()];
    dst.par_chunks_mut(rows).enumerate().for_each(|(c, out)| {
        for (r, o) in out.iter_mut().enumerate() {
            *o = src[r * cols + c];
        }
    });
    dst
}

/// Multiplier along `p` for every fixed-`q` column; `mult(iq, k_p)`.
pub(crate) fn filter_columns<M>(values: &mut [f64], grid: &PhaseSpaceGrid, mult: M)
where
    M: Fn(usize, f64) -> Complex64 + Sync,
{
    filter_lines(values, grid.np(), grid.dp(), mult);
}

/// Multiplier along `q` for every fixed-`p` row; `mult(ip, k_q)`.
pub(crate) fn filter_rows<M>(values: &mut [f64], grid: &PhaseSpaceGrid, mult: M)
where
    M: Fn(usize, f64) -> Complex64 + Sync,
{
    let (nq, np) = (grid.nq(), grid.np());
    let mut t = transpose(values, nq, np);
    filter_lines(&mut t, nq, grid.dq(), mult);
    let back = transpose(&t, np, nq);
    values.copy_from_slice(&back);
}

/// `out(q, p) = in(q, p - shift(iq))`.
pub(crate) fn shift_columns<S>(values: &mut [f64], grid: &PhaseSpaceGrid, shift: S)
where
    S: Fn(usize) -> f64 + Sync,
{
    filter_columns(values, grid, |iq, k| Complex64::from_polar(1.0, -k * shift(iq)));
}

/// `out(q, p) = in(q - shift(ip), p)`.
pub(crate) fn shift_rows<S>(values: &mut [f64], grid: &PhaseSpaceGrid, shift: S)
where
    S: Fn(usize) -> f64 + Sync,
{
    filter_rows(values, grid, |ip, k| Complex64::from_polar(1.0, -k * shift(ip)));
}

/// Convolution with the isotropic Gaussian of variance `2d` per axis.
pub(crate) fn gaussian_smooth(values: &mut [f64], grid: &PhaseSpaceGrid, d: f64) {
    if d == 0.0 {
        return;
    }
    filter_columns(values, grid, |_, k| Complex64::new((-d * k * k).exp(), 0.0));
    filter_rows(values, grid, |_, k| Complex64::new((-d * k * k).exp(), 0.0));
}

/// `out(x) = in(-x)` on the periodic node lattice.
pub(crate) fn point_reflect(values: &[f64], grid: &PhaseSpaceGrid) -> Vec<f64> {
    let (nq, np) = (grid.nq(), grid.np());
    let mut out = vec![0.0; values.len()];
    out.par_chunks_mut(np).enumerate().for_each(|(iq, col)| {
        let src_q = (nq - iq) % nq;
        for (ip, o) in col.iter_mut().enumerate() {
            *o = values[src_q * np + (np - ip) % np];
        }
    });
    out
}

/// Rigid rotation of a field under the clockwise phase-space rotation by
/// `theta`: `(q, p) -> (q cos + p sin, -q sin + p cos)`, so that
/// `out(x) = in(R^-1 x)`.
///
/// Uses the shear factorization `R = X(a) P(b) X(a)` with `a = tan(theta/2)`,
/// `b = -sin(theta)`, where `X(a): q += a p` and `P(b): p += b q`, each shear
/// applied as a linear phase in the transform domain. Angles beyond a quarter
/// turn first take an exact half turn by point reflection.
pub(crate) fn shear_rotate(values: &[f64], grid: &PhaseSpaceGrid, theta: f64) -> Vec<f64> {
    let mut theta = theta.rem_euclid(2.0 * PI);
    if theta > PI {
        theta -= 2.0 * PI;
    }
    let mut out = if theta.abs() > 0.5 * PI {
        theta -= PI.copysign(theta);
        point_reflect(values, grid)
    } else {
        values.to_vec()
    };
    if theta == 0.0 {
        return out;
    }
    let a = (0.5 * theta).tan();
    let b = -theta.sin();
    let g = *grid;
    shift_rows(&mut out, grid, |ip| a * g.p(ip));
    shift_columns(&mut out, grid, |iq| b * g.q(iq));
    shift_rows(&mut out, grid, |ip| a * g.p(ip));
    out
}
