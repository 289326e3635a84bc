//! Dormand–Prince 5(4) with adaptive steps and dense output by step clipping.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
            h_init: 1e-2,
            h_min: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub last_h: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y' = f(t, y)` from `t0` through each time in `outputs`
/// (monotone, in the direction of travel) and returns the state at each.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    outputs: &[f64],
    opts: &IntegratorOptions,
) -> Result<(Vec<Vec<f64>>, IntegratorStats), IntegratorError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut stats = IntegratorStats::default();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut out = Vec::with_capacity(outputs.len());
    let Some(&last) = outputs.last() else {
        return Ok((out, stats));
    };
    let dir = if last >= t0 { 1.0 } else { -1.0 };
    let mut h = opts.h_init.abs() * dir;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    f(t, &y, &mut k[0]);
    let mut steps = 0usize;
    for &target in outputs {
        while (target - t) * dir > 0.0 {
            if steps >= opts.max_steps {
                return Err(IntegratorError::TooManySteps(opts.max_steps));
            }
            steps += 1;
            let clipped = (target - t) * dir <= h.abs();
            let step = if clipped { target - t } else { h };
            stage(&mut f, t, &y, step, &mut k, &mut tmp, &mut y5);
            let mut err: f64 = 0.0;
            for i in 0..n {
                let e = step * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() {
                err = f64::INFINITY;
            }
            if err <= 1.0 {
                t = if clipped { target } else { t + step };
                y.copy_from_slice(&y5);
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(IntegratorError::NonFinite(t));
                }
                // FSAL: the last stage is the derivative at the new point
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                stats.accepted += 1;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !clipped || step.abs() >= h.abs() * 0.5 {
                    h = step * grow;
                }
            } else {
                stats.rejected += 1;
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
            if h.abs() < opts.h_min {
                return Err(IntegratorError::StepUnderflow { t, h });
            }
        }
        out.push(y.clone());
    }
    stats.last_h = h;
    Ok((out, stats))
}

#[allow(clippy::too_many_arguments)]
fn stage<F>(f: &mut F, t: f64, y: &[f64], h: f64, k: &mut [Vec<f64>], tmp: &mut [f64], y5: &mut [f64])
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    for i in 0..n {
        tmp[i] = y[i] + h * A21 * k[0][i];
    }
    f(t + C2 * h, tmp, &mut k[1]);
    for i in 0..n {
        tmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
    }
    f(t + C3 * h, tmp, &mut k[2]);
    for i in 0..n {
        tmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
    }
    f(t + C4 * h, tmp, &mut k[3]);
    for i in 0..n {
        tmp[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
    }
    f(t + C5 * h, tmp, &mut k[4]);
    for i in 0..n {
        tmp[i] = y[i] + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
    }
    f(t + h, tmp, &mut k[5]);
    for i in 0..n {
        y5[i] = y[i] + h * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
    }
    let (head, tail) = k.split_at_mut(6);
    f(t + h, y5, &mut tail[0]);
    let _ = head;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let outs: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let (ys, _) = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            &outs,
            &IntegratorOptions::default(),
        )
        .unwrap();
        for (t, y) in outs.iter().zip(&ys) {
            assert!((y[0] - t.cos()).abs() < 1e-9, "t={t}");
            assert!((y[1] + t.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn backward_returns_to_start() {
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1] * (1.0 + 0.1 * (-0.1 * t).exp());
            dy[1] = -y[0].sin();
        };
        let opts = IntegratorOptions::default();
        let (fwd, _) = integrate(rhs, 0.0, &[0.3, 0.1], &[20.0], &opts).unwrap();
        let (back, _) = integrate(rhs, 20.0, &fwd[0], &[0.0], &opts).unwrap();
        assert!((back[0][0] - 0.3).abs() < 1e-8 && (back[0][1] - 0.1).abs() < 1e-8);
    }

    #[test]
    fn tighter_tolerance_reduces_error() {
        let rhs = |_: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let err = |rtol: f64| {
            let opts = IntegratorOptions { rtol, atol: rtol * 1e-2, ..Default::default() };
            let (y, _) = integrate(rhs, 0.0, &[1.0, 0.0], &[30.0], &opts).unwrap();
            (y[0][0] - 30f64.cos()).abs()
        };
        assert!(err(1e-10) < err(1e-6));
    }
}
