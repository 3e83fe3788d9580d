//! Adaptive Runge–Kutta integration for complex two-state systems.
//!
//! The shooting and contour routines integrate second-order equations
//! v'' = q(y) v written as first-order systems in (v, v'). Coefficients are
//! the Dormand–Prince 5(4) embedded pair with the classic PI-free step
//! controller; states are pairs of [`Complex64`] so real equations with
//! complex parameters need no special casing.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Two complex states (typically a value and its derivative).
pub type State2 = [Complex64; 2];

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (the last row of A: first-same-as-last pair).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Embedded fourth-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate dv/dy = f(y, v) from `y0` to `y1` (either direction) with
/// adaptive step control at mixed tolerance `atol + rtol * |v|`.
pub fn integrate(
    f: &dyn Fn(f64, &State2) -> State2,
    y0: f64,
    y1: f64,
    v0: State2,
    rtol: f64,
    atol: f64,
) -> Result<State2> {
    let span = y1 - y0;
    if span == 0.0 {
        return Ok(v0);
    }
    let dir = span.signum();
    let mut y = y0;
    let mut v = v0;
    let mut h = span * 0.01;
    let h_min = 1e-13 * span.abs();
    let mut steps = 0usize;
    let mut k = [[Complex64::new(0.0, 0.0); 2]; 7];
    k[0] = f(y, &v);
    loop {
        let remaining = y1 - y;
        if remaining == 0.0 || remaining.abs() <= 1e-15 * span.abs() {
            return Ok(v);
        }
        if h.abs() > remaining.abs() {
            h = remaining;
        }
        if h * dir <= 0.0 {
            h = remaining;
        }
        // Stage evaluations.
        for s in 1..7 {
            let mut vs = v;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j] * h;
                vs[0] += kj[0] * a;
                vs[1] += kj[1] * a;
            }
            k[s] = f(y + C[s] * h, &vs);
        }
        let mut v5 = v;
        let mut err = [Complex64::new(0.0, 0.0); 2];
        for (s, ks) in k.iter().enumerate() {
            for i in 0..2 {
                v5[i] += ks[i] * (B5[s] * h);
                err[i] += ks[i] * ((B5[s] - B4[s]) * h);
            }
        }
        let mut en: f64 = 0.0;
        for i in 0..2 {
            let scale = atol + rtol * v[i].norm().max(v5[i].norm());
            en = en.max(err[i].norm() / scale);
        }
        if en <= 1.0 {
            y += h;
            v = v5;
            k[0] = k[6]; // first-same-as-last
            steps += 1;
        }
        let factor = if en > 0.0 {
            (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
        if h.abs() < h_min {
            return Err(Error::NoConvergence {
                residual: en,
                terms: steps,
            });
        }
        if steps > 2_000_000 {
            return Err(Error::NoConvergence {
                residual: en,
                terms: steps,
            });
        }
    }
}
