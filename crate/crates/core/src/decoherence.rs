//! Reservoir diffusion, the `chi` parameter and the first-order expansion of
//! the smoothed quantum propagator around the smoothed classical one.
//!
//! To first order in `chi`, one smoothed quantum step equals the smoothed
//! classical step plus `chi` times an insertion step `S`, whose kernel is the
//! classical one weighted by `sin(q') f(y)`. Summing the insertions over all
//! kicks is done by a forward recurrence on the pair `(A, B)`:
//!
//! ```text
//! B <- L B + S A
//! A <- L A
//! ```
//!
//! starting from `A = W0`, `B = 0`, so that after `n` kicks `B` holds every
//! term with exactly one insertion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KhoError, Result};
use crate::grid::{integrate, Field, ModelParams};
use crate::liouville::{classical_step_with, ClassicalScheme};
use crate::spectral::{filter_columns, filter_rows, gaussian_smooth, shear_rotate};

/// Per-kick-period diffusion of the reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReservoirParams {
    #[serde(rename = "D")]
    pub d: f64,
}

impl ReservoirParams {
    pub fn new(d: f64) -> Result<Self> {
        check_diffusion(d)?;
        Ok(Self { d })
    }
}

fn check_diffusion(d: f64) -> Result<()> {
    if d.is_finite() && d >= 0.0 {
        Ok(())
    } else {
        Err(KhoError::InvalidParameter(format!("D must be finite and >= 0, got {d}")))
    }
}

fn check_positive_diffusion(d: f64) -> Result<()> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(KhoError::InvalidParameter(format!("D must be finite and > 0, got {d}")))
    }
}

/// Convolution with the isotropic Gaussian of variance `2D` per axis.
pub fn diffuse(f: &Field, d: f64) -> Result<Field> {
    check_diffusion(d)?;
    if d == 0.0 {
        return Ok(f.clone());
    }
    let mut v = f.values().to_vec();
    gaussian_smooth(&mut v, f.grid(), d);
    Ok(f.with_values(v))
}

/// `chi = K eta^4 / D^(3/2)`.
pub fn chi(k: f64, eta: f64, d: f64) -> Result<f64> {
    check_positive_diffusion(d)?;
    Ok(k * eta.powi(4) / d.powf(1.5))
}

/// `f(y) = (y - 2 y^3 / 3) / 4`.
pub fn f_factor(y: f64) -> f64 {
    0.25 * (y - 2.0 * y * y * y / 3.0)
}

/// One insertion step: the smoothed classical step with its kernel weighted
/// by `sin(q') f(y)`. Signed output with zero total mass.
pub fn insertion_step(f: &Field, k: f64, d: f64, nu_tau: f64) -> Result<Field> {
    check_positive_diffusion(d)?;
    let g = *f.grid();
    let mut v = f.values().to_vec();
    let d32 = d.powf(1.5);
    // sin(q') weight, kick shift and the p-profile f(y) exp(-y^2), all per column
    filter_columns(&mut v, &g, |iq, kp| {
        let s = g.q(iq).sin();
        let profile = Complex64::new(0.0, s * d32 * kp * kp * kp * (-d * kp * kp).exp() / 6.0);
        profile * Complex64::from_polar(1.0, -kp * k * s)
    });
    filter_rows(&mut v, &g, |_, kq| Complex64::new((-d * kq * kq).exp(), 0.0));
    Ok(f.with_values(shear_rotate(&v, &g, nu_tau)))
}

/// First-order field after `n` kicks: the sum of all single-insertion
/// histories, insertions at kicks `0..n`. `n = 0` gives the zero field.
pub fn gj_sum(w0: &Field, n: usize, params: &ModelParams, d: f64) -> Result<Field> {
    let mut out = Field::zeros(*w0.grid(), w0.kind());
    GjRecurrence::new(w0, params, d)?.run(n, |_, b| {
        out = b.clone();
        Ok(())
    })?;
    Ok(out)
}

/// `chi * integrate(|gj_sum(w0, n)|)` for `n = 0..=n_max`.
pub fn dn_perturbative(w0: &Field, n_max: usize, params: &ModelParams, d: f64) -> Result<Vec<f64>> {
    let c = chi(params.k, params.eta, d)?;
    let mut out = Vec::with_capacity(n_max + 1);
    GjRecurrence::new(w0, params, d)?.run(n_max, |_, b| {
        out.push(c * integrate(&b.abs()));
        Ok(())
    })?;
    Ok(out)
}

/// Forward `(A, B)` recurrence shared by [`gj_sum`] and [`dn_perturbative`].
pub struct GjRecurrence {
    a: Field,
    b: Field,
    params: ModelParams,
    d: f64,
}

impl GjRecurrence {
    pub fn new(w0: &Field, params: &ModelParams, d: f64) -> Result<Self> {
        check_positive_diffusion(d)?;
        Ok(Self {
            a: w0.clone(),
            b: Field::zeros(*w0.grid(), w0.kind()),
            params: *params,
            d,
        })
    }

    /// Zeroth-order (classical) field.
    pub fn classical(&self) -> &Field {
        &self.a
    }

    /// Accumulated first-order field, without the `chi` prefactor.
    pub fn first_order(&self) -> &Field {
        &self.b
    }

    pub fn advance(&mut self) -> Result<()> {
        let p = &self.params;
        let inserted = insertion_step(&self.a, p.k, self.d, p.nu_tau)?;
        let carried = classical_step_with(&self.b, p, self.d, ClassicalScheme::Spectral)?.0;
        self.b = carried.combine(1.0, &inserted, 1.0)?.with_kick_index(self.a.kick_index() + 1);
        self.a = classical_step_with(&self.a, p, self.d, ClassicalScheme::Spectral)?.0;
        Ok(())
    }

    /// Calls `visit(n, B_n)` for `n = 0..=n_max`.
    pub fn run(&mut self, n_max: usize, mut visit: impl FnMut(usize, &Field) -> Result<()>) -> Result<()> {
        visit(0, &self.b)?;
        for n in 1..=n_max {
            self.advance()?;
            visit(n, &self.b)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{coherent_state, make_grid, FieldKind, PhaseSpaceGrid};
    use std::f64::consts::PI;

    #[test]
    fn diffuse_examples() {
        let g = make_grid(3.0 * PI, 256, 0.25).unwrap();
        let f = coherent_state(&g, (0.3, -0.2), 0.25, FieldKind::Classical).unwrap();
        assert_eq!(diffuse(&f, 0.0).unwrap(), f);
        assert!(diffuse(&f, -1.0).is_err());
        let before = f.moments();
        for d in [1e-3, 1e-2, 1e-1] {
            let out = diffuse(&f, d).unwrap();
            let m = out.moments();
            assert!(((m.var_q - before.var_q) / (2.0 * d) - 1.0).abs() < 5e-3);
            assert!(((m.var_p - before.var_p) / (2.0 * d) - 1.0).abs() < 5e-3);
            assert!((integrate(&out) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diffuse_is_a_semigroup() {
        let g = make_grid(3.0 * PI, 128, 0.25).unwrap();
        let f = coherent_state(&g, (0.0, 1.1), 0.25, FieldKind::Quantum).unwrap();
        let a = diffuse(&diffuse(&f, 0.01).unwrap(), 0.03).unwrap();
        let b = diffuse(&f, 0.04).unwrap();
        let l1 = integrate(&a.combine(1.0, &b, -1.0).unwrap().abs());
        assert!(l1 < 1e-10, "{l1}");
    }

    #[test]
    fn chi_examples() {
        assert!((chi(0.5, 0.25, 0.1).unwrap() - 6.2e-2).abs() < 5e-4);
        assert!((chi(1.5, 0.03125, 0.1).unwrap() - 4.5e-5).abs() < 5e-7);
        assert_eq!(chi(0.0, 0.25, 0.1).unwrap(), 0.0);
        assert!(chi(0.5, 0.25, 0.0).is_err());
    }

    #[test]
    fn f_examples() {
        assert_eq!(f_factor(0.0), 0.0);
        assert!((f_factor(1.0) - 1.0 / 12.0).abs() < 1e-15);
        let peak = (0..=100_000)
            .map(|i| {
                let y = -5.0 + i as f64 * 1e-4;
                (f_factor(y) * (-y * y).exp()).abs()
            })
            .fold(0.0, f64::max);
        assert!((peak - 0.0811).abs() <= 5e-4, "{peak}");
        assert!(peak <= 0.0815);
    }

    /// Real-space evaluation of the insertion kernel: per column, multiply by
    /// `sin q'`, shift to the kicked momentum, then correlate with
    /// `f(y) exp(-y^2) / (2 sqrt(pi D))` with `y = (u - p) / (2 sqrt D)`.
    fn insertion_p_profile_by_quadrature(col: &[f64], g: &PhaseSpaceGrid, q: f64, k: f64, d: f64) -> Vec<f64> {
        let s = q.sin();
        let np = g.np();
        (0..np)
            .map(|ip| {
                let p = g.p(ip);
                let mut acc = 0.0;
                for (jp, &w) in col.iter().enumerate() {
                    let u = g.p(jp) + k * s;
                    let y = (u - p) / (2.0 * d.sqrt());
                    acc += s * w * f_factor(y) * (-y * y).exp() / (2.0 * (PI * d).sqrt());
                }
                acc * g.dp()
            })
            .collect()
    }

    #[test]
    fn insertion_matches_real_space_kernel() {
        // no rotation, no q-smoothing: isolate the p-profile
        let g = PhaseSpaceGrid::new(16, 512, 3.2, 6.0).unwrap();
        let (k, d): (f64, f64) = (0.7, 0.02);
        let f = coherent_state(&g, (0.4, 0.3), 0.3, FieldKind::Classical).unwrap();
        let mut v = f.values().to_vec();
        let d32 = d.powf(1.5);
        filter_columns(&mut v, &g, |iq, kp| {
            let s = g.q(iq).sin();
            Complex64::new(0.0, s * d32 * kp.powi(3) * (-d * kp * kp).exp() / 6.0) * Complex64::from_polar(1.0, -kp * k * s)
        });
        let mut scale: f64 = 0.0;
        let mut err: f64 = 0.0;
        for iq in [9, 10, 11] {
            let expect = insertion_p_profile_by_quadrature(f.column(iq), &g, g.q(iq), k, d);
            for ip in 0..g.np() {
                scale = scale.max(expect[ip].abs());
                err = err.max((expect[ip] - v[g.index(iq, ip)]).abs());
            }
        }
        assert!(scale > 1e-3);
        assert!(err < 1e-9 * scale.max(1.0), "max error {err}, scale {scale}");
    }

    #[test]
    fn insertion_is_mass_neutral() {
        let g = make_grid(3.0 * PI, 256, 0.25).unwrap();
        let f = coherent_state(&g, (0.0, 1.1), 0.25, FieldKind::Classical).unwrap();
        let s = insertion_step(&f, 0.5, 0.01, PI / 3.0).unwrap();
        assert!(integrate(&s).abs() < 1e-8);
        assert!(s.max_value().abs().max(s.min_value().abs()) > 0.0);
        assert!(s.min_value() < 0.0);
        assert!(insertion_step(&f, 0.5, 0.0, PI / 3.0).is_err());
    }

    #[test]
    fn insertion_vanishes_on_sine_zeros() {
        // pi sits on a node of this grid
        let g = PhaseSpaceGrid::new(64, 64, 2.0 * PI, 4.0).unwrap();
        let mut values = vec![0.0; g.len()];
        for q in [0.0, PI, -PI] {
            let (iq, ip) = g.nearest_node(q, 0.5).unwrap();
            values[g.index(iq, ip)] = 1.0;
        }
        let f = Field::from_values(g, values, FieldKind::Classical).unwrap();
        let s = insertion_step(&f, 0.5, 0.01, PI / 3.0).unwrap();
        assert!(s.abs().max_value() < 1e-12);
    }

    #[test]
    fn gj_sum_is_mass_neutral() {
        let g = make_grid(3.0 * PI, 256, 0.25).unwrap();
        let f = coherent_state(&g, (0.0, 1.1), 0.25, FieldKind::Classical).unwrap();
        let params = ModelParams::new(0.5, 0.25);
        assert_eq!(integrate(&gj_sum(&f, 0, &params, 0.1).unwrap()), 0.0);
        for n in [1, 5] {
            assert!(integrate(&gj_sum(&f, n, &params, 0.1).unwrap()).abs() < 1e-7);
        }
    }

    #[test]
    fn dn_perturbative_examples() {
        let g = make_grid(3.0 * PI, 128, 0.25).unwrap();
        let f = coherent_state(&g, (0.0, 1.1), 0.25, FieldKind::Classical).unwrap();
        let zero = dn_perturbative(&f, 4, &ModelParams::new(0.0, 0.25), 0.05).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));

        // at fixed (K, D) the only eta dependence is the eta^4 prefactor
        let a = dn_perturbative(&f, 4, &ModelParams::new(0.5, 0.25), 0.05).unwrap();
        let b = dn_perturbative(&f, 4, &ModelParams::new(0.5, 0.125), 0.05).unwrap();
        assert_eq!(a.len(), 5);
        for (x, y) in a.iter().zip(&b).skip(1) {
            assert!((x / y - 16.0).abs() < 1e-9);
        }
    }
}
