//! Bessel functions of integer order and the Airy function.

use std::f64::consts::PI;

/// `J_0(x) .. J_n(x)` by Miller's backward recurrence, normalized with
/// `J_0 + 2 sum_k J_2k = 1`.
pub fn bessel_j_range(n: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    // Start well above both n and |x| so the minimal solution dominates.
    let start = {
        let m = n.max(ax as usize) + 20 + (12.0 * ax.cbrt()) as usize + (ax.sqrt() * 2.0) as usize;
        m + (m % 2)
    };
    let mut j_next = 0.0;
    let mut j_cur = 1e-300;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let j_prev = 2.0 * k as f64 / ax * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        // k - 1 is the order just produced
        if k - 1 <= n {
            out[k - 1] = j_cur;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j_cur;
        }
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    norm += j_cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
    if x < 0.0 {
        for (m, v) in out.iter_mut().enumerate() {
            if m % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

const AI0: f64 = 0.355_028_053_887_817_24;
const AIP0: f64 = 0.258_819_403_792_806_8;

/// Airy function of the first kind.
pub fn airy_ai(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if (-8.0..=5.0).contains(&x) {
        airy_series(x)
    } else if x > 5.0 {
        airy_decaying(x)
    } else {
        airy_oscillating(-x)
    }
}

fn airy_series(x: f64) -> f64 {
    let x3 = x * x * x;
    let mut f = 1.0;
    let mut g = x;
    let mut tf = 1.0;
    let mut tg = x;
    for k in 1..200 {
        let k3 = 3.0 * k as f64;
        tf *= x3 / ((k3 - 1.0) * k3);
        tg *= x3 / (k3 * (k3 + 1.0));
        f += tf;
        g += tg;
        if tf.abs() < 1e-18 * f.abs().max(1.0) && tg.abs() < 1e-18 * g.abs().max(1.0) {
            break;
        }
    }
    AI0 * f - AIP0 * g
}

/// Coefficients `u_k` of the Airy asymptotic expansions.
fn airy_u(count: usize) -> Vec<f64> {
    let mut u = vec![1.0; count];
    for k in 1..count {
        let kf = k as f64;
        u[k] = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
    }
    u
}

fn airy_decaying(x: f64) -> f64 {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let u = airy_u(12);
    let mut sum = 0.0;
    let mut zp = 1.0;
    for (k, uk) in u.iter().enumerate() {
        let term = uk / zp;
        sum += if k % 2 == 0 { term } else { -term };
        zp *= zeta;
    }
    (-zeta).exp() / (2.0 * PI.sqrt() * x.powf(0.25)) * sum
}

/// `Ai(-x)` for large positive `x`.
fn airy_oscillating(x: f64) -> f64 {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let u = airy_u(16);
    let mut even = 0.0;
    let mut odd = 0.0;
    for k in 0..8 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        even += sign * u[2 * k] / zeta.powi(2 * k as i32);
        odd += sign * u[2 * k + 1] / zeta.powi(2 * k as i32 + 1);
    }
    let phase = zeta - 0.25 * PI;
    (phase.cos() * even + phase.sin() * odd) / (PI.sqrt() * x.powf(0.25))
}
