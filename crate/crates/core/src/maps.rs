//! The classical stroboscopic map `x -> R(K(x))` and its fixed points.

use serde::{Deserialize, Serialize};

use crate::error::{KhoError, Result};
use crate::grid::ModelParams;

pub type Point = (f64, f64);

/// Kick: `p -> p + K sin q`.
#[inline]
pub fn kick_map((q, p): Point, k: f64) -> Point {
    (q, p + k * q.sin())
}

/// Harmonic rotation by `nu_tau` (clockwise in the `(q, p)` plane).
#[inline]
pub fn rotate_map((q, p): Point, nu_tau: f64) -> Point {
    let (s, c) = nu_tau.sin_cos();
    (c * q + s * p, -s * q + c * p)
}

/// One kick followed by one rotation.
#[inline]
pub fn strobe_step(x: Point, params: &ModelParams) -> Point {
    rotate_map(kick_map(x, params.k), params.nu_tau)
}

/// Jacobian of [`strobe_step`] at `x`, row-major.
pub fn strobe_jacobian((q, _): Point, params: &ModelParams) -> [[f64; 2]; 2] {
    let (s, c) = params.nu_tau.sin_cos();
    let kc = params.k * q.cos();
    // R * [[1, 0], [kc, 1]]
    [[c + s * kc, s], [-s + c * kc, c]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityClass {
    pub kind: Stability,
    pub trace: f64,
}

impl StabilityClass {
    pub fn from_trace(trace: f64) -> Self {
        let kind = if (trace.abs() - 2.0).abs() <= 1e-12 {
            Stability::Parabolic
        } else if trace.abs() < 2.0 {
            Stability::Elliptic
        } else {
            Stability::Hyperbolic
        };
        Self { kind, trace }
    }
}

/// Linear stability of the origin: trace `2 cos(nu_tau) + K sin(nu_tau)`.
pub fn classify_origin(k: f64, nu_tau: f64) -> StabilityClass {
    StabilityClass::from_trace(2.0 * nu_tau.cos() + k * nu_tau.sin())
}

/// Kick amplitude where the origin turns parabolic, `2 (1 - cos) / sin`.
///
/// `2/sqrt(3)` for the default `nu_tau = pi/3`.
pub fn critical_kick(nu_tau: f64) -> f64 {
    2.0 * (1.0 - nu_tau.cos()) / nu_tau.sin()
}

/// One orbit point of a Poincaré section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub seed_id: usize,
    pub iter: usize,
    pub q: f64,
    pub p: f64,
}

/// Orbits `x_1..x_n_iter` of every seed, in seed order.
pub fn poincare_section(seeds: &[Point], n_iter: usize, params: &ModelParams) -> Result<Vec<SectionPoint>> {
    if n_iter == 0 {
        return Err(KhoError::InvalidParameter("n_iter must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(seeds.len() * n_iter);
    for (seed_id, &seed) in seeds.iter().enumerate() {
        let mut x = seed;
        for iter in 1..=n_iter {
            x = strobe_step(x, params);
            out.push(SectionPoint {
                seed_id,
                iter,
                q: x.0,
                p: x.1,
            });
        }
    }
    Ok(out)
}

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-10;

/// Newton search for a fixed point of [`strobe_step`] starting at `guess`.
pub fn find_period1_point(guess: Point, params: &ModelParams) -> Result<(Point, StabilityClass)> {
    if !(params.k > 0.0) {
        return Err(KhoError::InvalidParameter(format!("K must be positive, got {}", params.k)));
    }
    let mut x = guess;
    let mut residual = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let fx = strobe_step(x, params);
        let r = (fx.0 - x.0, fx.1 - x.1);
        residual = r.0.hypot(r.1);
        if residual < NEWTON_TOL {
            let j = strobe_jacobian(x, params);
            return Ok((x, StabilityClass::from_trace(j[0][0] + j[1][1])));
        }
        let j = strobe_jacobian(x, params);
        // (J - I) dx = -r
        let a = [[j[0][0] - 1.0, j[0][1]], [j[1][0], j[1][1] - 1.0]];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dq = (-r.0 * a[1][1] + r.1 * a[0][1]) / det;
        let dp = (-r.1 * a[0][0] + r.0 * a[1][0]) / det;
        x = (x.0 + dq, x.1 + dp);
    }
    Err(KhoError::NoConvergence {
        iterations: NEWTON_MAX_ITER,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const SQRT3_2: f64 = 0.866_025_403_784_438_6;

    fn close(a: Point, b: Point, tol: f64) -> bool {
        (a.0 - b.0).abs() <= tol && (a.1 - b.1).abs() <= tol
    }

    #[test]
    fn kick_examples() {
        assert_eq!(kick_map((0.0, 1.1), 0.5), (0.0, 1.1));
        assert!(close(kick_map((PI / 2.0, 0.0), 2.0), (PI / 2.0, 2.0), 1e-15));
        assert!(close(kick_map((-PI / 2.0, 1.0), 0.5), (-PI / 2.0, 0.5), 1e-15));
    }

    #[test]
    fn rotate_examples() {
        assert!(close(rotate_map((1.0, 0.0), PI / 3.0), (0.5, -SQRT3_2), 1e-15));
        assert_eq!(rotate_map((0.0, 0.0), 1.234), (0.0, 0.0));
        let mut x = (0.37, -1.2);
        for _ in 0..6 {
            x = rotate_map(x, PI / 3.0);
        }
        assert!(close(x, (0.37, -1.2), 1e-12));
    }

    #[test]
    fn strobe_examples() {
        let params = ModelParams::new(0.5, 0.25);
        assert_eq!(strobe_step((0.0, 0.0), &ModelParams::new(3.0, 0.25)), (0.0, 0.0));
        assert!(close(strobe_step((0.0, 1.1), &params), (1.1 * SQRT3_2, 0.55), 1e-14));
    }

    #[test]
    fn regular_torus_stays_bounded() {
        let params = ModelParams::new(0.5, 0.25);
        let mut x = (0.7, 0.0);
        let mut r_max: f64 = 0.0;
        for _ in 0..5000 {
            x = strobe_step(x, &params);
            r_max = r_max.max(x.0.hypot(x.1));
        }
        assert!(r_max < 2.0, "max radius {r_max}");
    }

    #[test]
    fn origin_classification() {
        let c = classify_origin(0.5, PI / 3.0);
        assert_eq!(c.kind, Stability::Elliptic);
        assert!((c.trace - (1.0 + SQRT3_2 * 0.5)).abs() < 1e-14);
        assert!((c.trace - 1.4330).abs() < 5e-5);

        let kc = 2.0 / 3f64.sqrt();
        assert!((critical_kick(PI / 3.0) - kc).abs() < 1e-14);
        let c = classify_origin(kc, PI / 3.0);
        assert_eq!(c.kind, Stability::Parabolic);
        assert!((c.trace - 2.0).abs() < 1e-12);

        let c = classify_origin(2.0, PI / 3.0);
        assert_eq!(c.kind, Stability::Hyperbolic);
        assert!((c.trace - (1.0 + 3f64.sqrt())).abs() < 1e-14);

        assert_eq!(classify_origin(kc * (1.0 - 1e-6), PI / 3.0).kind, Stability::Elliptic);
        assert_eq!(classify_origin(kc * (1.0 + 1e-6), PI / 3.0).kind, Stability::Hyperbolic);
    }

    #[test]
    fn section_shapes() {
        let params = ModelParams::new(0.5, 0.25);
        let pts = poincare_section(&[(0.0, 0.0)], 10, &params).unwrap();
        assert_eq!(pts.len(), 10);
        assert!(pts.iter().all(|s| s.q == 0.0 && s.p == 0.0));
        assert_eq!(pts[9].iter, 10);
        assert!(poincare_section(&[(0.0, 0.0)], 0, &params).is_err());

        // seeds on a ring of radius 0.5 stay on a thin annulus (regular tori)
        let seeds: Vec<Point> = (0..8)
            .map(|i| {
                let t = i as f64 * PI / 4.0;
                (0.5 * t.cos(), 0.5 * t.sin())
            })
            .collect();
        let pts = poincare_section(&seeds, 2000, &params).unwrap();
        for id in 0..seeds.len() {
            let radii: Vec<f64> = pts.iter().filter(|s| s.seed_id == id).map(|s| s.q.hypot(s.p)).collect();
            let lo = radii.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = radii.iter().copied().fold(0.0, f64::max);
            assert!(hi - lo < 0.3, "seed {id}: radii in [{lo}, {hi}]");
        }

        // K = 2 near the hyperbolic origin: the orbit fills an area
        let params = ModelParams::new(2.0, 0.25);
        let pts = poincare_section(&[(0.01, 0.0)], 5000, &params).unwrap();
        let r_max = pts.iter().map(|s| s.q.hypot(s.p)).fold(0.0, f64::max);
        assert!(r_max > 1.0, "chaotic orbit stayed within {r_max}");
    }

    #[test]
    fn fixed_points() {
        let (x, c) = find_period1_point((0.0, 0.0), &ModelParams::new(0.5, 0.25)).unwrap();
        // plain Newton from a guess this close to the hyperbolic origin lands on it
        let (x0, c0) = find_period1_point((0.4, 0.2), &ModelParams::new(1.5, 0.25)).unwrap();
        assert!(x0.0.hypot(x0.1) < 1e-12);
        assert_eq!(c0.kind, Stability::Hyperbolic);
        assert_eq!(x, (0.0, 0.0));
        assert_eq!(c.kind, Stability::Elliptic);

        let sep = |k: f64| {
            let params = ModelParams::new(k, 0.25);
            let (a, ca) = find_period1_point((1.5, -1.0), &params).unwrap();
            let (b, cb) = find_period1_point((-1.5, 1.0), &params).unwrap();
            assert!(a.0.hypot(a.1) > 0.1);
            assert_eq!(ca.kind, Stability::Elliptic);
            assert_eq!(cb.kind, Stability::Elliptic);
            let r = strobe_step(a, &params);
            assert!((r.0 - a.0).hypot(r.1 - a.1) < 1e-10);
            (a.0 - b.0).hypot(a.1 - b.1)
        };
        assert!(sep(2.0) > sep(1.5));

        assert!(find_period1_point((0.0, 0.0), &ModelParams::new(0.0, 0.25)).is_err());
    }

    proptest! {
        #[test]
        fn strobe_preserves_area(q in -6.0f64..6.0, p in -6.0f64..6.0, k in 0.0f64..3.0, nt in 0.1f64..6.2) {
            let params = ModelParams { k, nu_tau: nt, eta: 0.25 };
            let j = strobe_jacobian((q, p), &params);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            prop_assert!((det - 1.0).abs() < 1e-12);
        }

        #[test]
        fn rotation_preserves_norm(q in -10.0f64..10.0, p in -10.0f64..10.0, nt in 0.0f64..6.3) {
            let (a, b) = rotate_map((q, p), nt);
            prop_assert!((a.hypot(b) - q.hypot(p)).abs() < 1e-12);
        }

        #[test]
        fn kick_is_periodic_in_q(q in -10.0f64..10.0, p in -5.0f64..5.0, k in 0.0f64..3.0) {
            let a = kick_map((q + 2.0 * PI, p), k);
            let b = kick_map((q, p), k);
            prop_assert!((a.0 - b.0 - 2.0 * PI).abs() < 1e-12);
            prop_assert!((a.1 - b.1).abs() < 1e-12);
        }
    }
}
