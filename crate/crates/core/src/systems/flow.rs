//! Fixed-step RK4 time maps for the two one-dimensional flows, evaluated in
//! lockstep over a slice of initial conditions.

use std::f64::consts::PI;

/// RK4 substeps per unit map; the step is h/100.
pub const SUBSTEPS: usize = 100;

const LANES: usize = 64;

const FOUR_PI: f64 = 4.0 * PI;
const K_SIN2: f64 = 1.0 / FOUR_PI;

/// Rotates the unit vector (c, s) by a small angle d using truncated series.
/// The angles used here stay below 1e-2, where the truncation error is far
/// below one ulp.
#[inline(always)]
fn rot(c: f64, s: f64, d: f64) -> (f64, f64) {
    let d2 = d * d;
    let cd = 1.0 - d2 * (0.5 - d2 * (1.0 / 24.0 - d2 / 720.0));
    let sd = d * (1.0 - d2 * (1.0 / 6.0 - d2 * (1.0 / 120.0 - d2 / 5040.0)));
    (c * cd - s * sd, s * cd + c * sd)
}

/// Field of the circle flow, x' = sin^2(2 pi x) / (2 pi) = (1 - cos 4 pi x) / (4 pi).
#[inline]
pub fn sin2_field(x: f64) -> f64 {
    (1.0 - (FOUR_PI * x).cos()) * K_SIN2
}

/// Field of the interval flow, x' = x^2 - x^4.
#[inline]
pub fn quartic_field(x: f64) -> f64 {
    let x2 = x * x;
    x2 - x2 * x2
}

/// Advances every entry of `xs` (lift coordinates) by the circle flow for
/// time `t`. The stage angles are tracked by rotating (cos 4 pi x, sin 4 pi x)
/// instead of re-evaluating trig functions; the pair is re-synchronised at
/// the start of every call.
pub fn sin2_advance(xs: &mut [f64], t: f64) {
    let dt = t / SUBSTEPS as f64;
    for chunk in xs.chunks_mut(LANES) {
        let m = chunk.len();
        let mut c = [0.0f64; LANES];
        let mut s = [0.0f64; LANES];
        for i in 0..m {
            let (si, ci) = (FOUR_PI * chunk[i]).sin_cos();
            c[i] = ci;
            s[i] = si;
        }
        for _ in 0..SUBSTEPS {
            for i in 0..m {
                let (ci, si) = (c[i], s[i]);
                let k1 = (1.0 - ci) * K_SIN2;
                let c2 = rot(ci, si, FOUR_PI * 0.5 * dt * k1).0;
                let k2 = (1.0 - c2) * K_SIN2;
                let c3 = rot(ci, si, FOUR_PI * 0.5 * dt * k2).0;
                let k3 = (1.0 - c3) * K_SIN2;
                let c4 = rot(ci, si, FOUR_PI * dt * k3).0;
                let k4 = (1.0 - c4) * K_SIN2;
                let dx = dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                chunk[i] += dx;
                let (cn, sn) = rot(ci, si, FOUR_PI * dx);
                c[i] = cn;
                s[i] = sn;
            }
        }
    }
}

/// Advances every entry of `xs` by the interval flow for time `t`.
pub fn quartic_advance(xs: &mut [f64], t: f64) {
    let dt = t / SUBSTEPS as f64;
    for chunk in xs.chunks_mut(LANES) {
        for _ in 0..SUBSTEPS {
            for y in chunk.iter_mut() {
                let k1 = quartic_field(*y);
                let k2 = quartic_field(*y + 0.5 * dt * k1);
                let k3 = quartic_field(*y + 0.5 * dt * k2);
                let k4 = quartic_field(*y + dt * k3);
                *y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
    }
}

/// RK4 on the state (x, v) with v' = f'(x) v, returning d(phi_t)/dx at x.
pub fn variational<F, G>(x: f64, t: f64, f: F, df: G) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let dt = t / SUBSTEPS as f64;
    let (mut y, mut v) = (x, 1.0);
    for _ in 0..SUBSTEPS {
        let (a1, b1) = (f(y), df(y) * v);
        let (y2, v2) = (y + 0.5 * dt * a1, v + 0.5 * dt * b1);
        let (a2, b2) = (f(y2), df(y2) * v2);
        let (y3, v3) = (y + 0.5 * dt * a2, v + 0.5 * dt * b2);
        let (a3, b3) = (f(y3), df(y3) * v3);
        let (y4, v4) = (y + dt * a3, v + dt * b3);
        let (a4, b4) = (f(y4), df(y4) * v4);
        y += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        v += dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    }
    v
}

pub fn sin2_dfield(x: f64) -> f64 {
    (FOUR_PI * x).sin()
}

pub fn quartic_dfield(x: f64) -> f64 {
    2.0 * x - 4.0 * x * x * x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rk4_plain(x: f64, t: f64, f: impl Fn(f64) -> f64) -> f64 {
        let dt = t / SUBSTEPS as f64;
        let mut y = x;
        for _ in 0..SUBSTEPS {
            let k1 = f(y);
            let k2 = f(y + 0.5 * dt * k1);
            let k3 = f(y + 0.5 * dt * k2);
            let k4 = f(y + dt * k3);
            y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        y
    }

    #[test]
    fn rotated_trig_matches_libm_rk4() {
        let xs0: Vec<f64> = (0..97).map(|i| i as f64 / 97.0).collect();
        let mut xs = xs0.clone();
        let mut plain = xs0.clone();
        for _ in 0..50 {
            sin2_advance(&mut xs, 0.1);
            for p in plain.iter_mut() {
                *p = rk4_plain(*p, 0.1, sin2_field);
            }
        }
        for (a, b) in xs.iter().zip(&plain) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn fixed_points_stay_put() {
        let mut xs = vec![0.0, 0.5, 1.0];
        sin2_advance(&mut xs, 0.1);
        assert_eq!(xs[0], 0.0);
        assert!((xs[1] - 0.5).abs() < 1e-15);
        let mut qs = vec![-1.0, 0.0, 1.0];
        quartic_advance(&mut qs, 0.1);
        assert_eq!(qs, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn variational_matches_finite_difference() {
        for &x in &[0.1, 0.3, 0.45] {
            let e = 1e-6;
            let fd = (rk4_plain(x + e, 0.1, sin2_field) - rk4_plain(x - e, 0.1, sin2_field)) / (2.0 * e);
            let v = variational(x, 0.1, sin2_field, sin2_dfield);
            assert!((fd - v).abs() < 1e-7);
        }
    }
}
