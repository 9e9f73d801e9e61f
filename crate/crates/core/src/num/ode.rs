//! Explicit Runge-Kutta integration: adaptive Dormand-Prince 5(4) with
//! step-size control and an observer hook, plus a fixed-step classical RK4
//! used as an independent reference in tests.
//!
//! The observer runs after every accepted step and may modify the state in
//! place (the m-function engine uses this to renormalize exponentially
//! growing fundamental systems); it must then report the modification so the
//! cached end-derivative (FSAL) is discarded.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// What the per-step observer wants the integrator to do next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepControl {
    /// Keep going; the state was not touched.
    Continue,
    /// Keep going, but the observer modified the state in place, so cached
    /// derivative information is stale and must be recomputed.
    ContinueRefreshed,
    /// Stop early; the integration result is the current state.
    Stop,
}

/// Tunables for [`dopri5`].
#[derive(Debug, Clone, Copy)]
pub struct Dopri5Options<S> {
    /// Relative tolerance per component.
    pub rtol: S,
    /// Absolute tolerance per component.
    pub atol: S,
    /// Starting step; chosen from the interval length when `None`.
    pub h_init: Option<S>,
    /// Abort when the step falls below this fraction of the current
    /// position (so integrations that start at a tiny `t0` next to a
    /// coefficient singularity may take correspondingly tiny early steps).
    pub h_min_rel: S,
    /// Abort after this many accepted+rejected steps.
    pub max_steps: u64,
}

impl Default for Dopri5Options<f64> {
    fn default() -> Self {
        Dopri5Options {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            h_min_rel: 1e-14,
            max_steps: 20_000_000,
        }
    }
}

/// Result of an integration: final time and state plus step statistics.
#[derive(Debug, Clone)]
pub struct Integration<S, const N: usize> {
    pub t: S,
    pub y: [S; N],
    pub accepted: u64,
    pub rejected: u64,
    /// True when the observer requested an early stop.
    pub stopped_early: bool,
    /// Last accepted step size, usable as `h_init` when resuming.
    pub h_final: S,
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Difference between the 5th- and the embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `y' = f(t, y)` from `t0` forward to `t1` with adaptive
/// Dormand-Prince 5(4).
///
/// `observer(t, &mut y)` runs after each accepted step (and once at the end
/// point); it may rescale the state, and may stop the integration.
pub fn dopri5<S: Scalar, const N: usize>(
    f: &mut impl FnMut(S, &[S; N]) -> [S; N],
    t0: S,
    t1: S,
    y0: [S; N],
    opts: &Dopri5Options<S>,
    observer: &mut impl FnMut(S, &mut [S; N]) -> StepControl,
) -> Result<Integration<S, N>> {
    if !(t1 > t0) {
        return Err(Error::numerics("integration interval must run forward"));
    }
    let span = t1 - t0;
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.h_init.unwrap_or(span * S::of(1e-4));
    let mut accepted = 0u64;
    let mut rejected = 0u64;

    let mut k: [[S; N]; 7] = [[S::zero(); N]; 7];
    let mut k1_fresh = false;

    while t < t1 {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::numerics(format!(
                "step budget of {} exhausted at t = {:?}",
                opts.max_steps, t
            )));
        }
        let h_min = opts.h_min_rel * t.abs().max(S::of(1e-280));
        if h < h_min {
            return Err(Error::numerics(format!("step size collapsed at t = {:?}", t)));
        }
        if t + h > t1 {
            h = t1 - t;
        }

        if !k1_fresh {
            k[0] = f(t, &y);
        }
        for stage in 1..7 {
            let mut ys = y;
            for j in 0..stage {
                let a = S::of(A[stage][j]);
                if a != S::zero() {
                    for (ysi, kj) in ys.iter_mut().zip(k[j].iter()) {
                        *ysi += h * a * *kj;
                    }
                }
            }
            k[stage] = f(t + S::of(C[stage]) * h, &ys);
        }
        // Stage 7 of the tableau IS the 5th-order solution (FSAL), so the
        // `ys` of the last stage equals the proposed new state.
        let mut y_new = y;
        for j in 0..6 {
            let a = S::of(A[6][j]);
            if a != S::zero() {
                for (yi, kj) in y_new.iter_mut().zip(k[j].iter()) {
                    *yi += h * a * *kj;
                }
            }
        }

        // Weighted RMS error of the embedded 4th-order difference.
        let mut err_sq = S::zero();
        for i in 0..N {
            let mut e = S::zero();
            for j in 0..7 {
                e += S::of(E[j]) * k[j][i];
            }
            e *= h;
            let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            let r = e / scale;
            err_sq += r * r;
        }
        let err = (err_sq / S::of(N as f64)).sqrt();

        if err <= S::one() || h <= h_min {
            t += h;
            y = y_new;
            accepted += 1;
            k1_fresh = true;
            k[0] = k[6]; // FSAL
            match observer(t, &mut y) {
                StepControl::Continue => {}
                StepControl::ContinueRefreshed => k1_fresh = false,
                StepControl::Stop => {
                    return Ok(Integration {
                        t,
                        y,
                        accepted,
                        rejected,
                        stopped_early: true,
                        h_final: h,
                    });
                }
            }
            let fac = S::of(0.9) * err.max(S::of(1e-10)).powf(S::of(-0.2));
            h *= fac.min(S::of(5.0)).max(S::of(0.2));
        } else {
            rejected += 1;
            let fac = S::of(0.9) * err.powf(S::of(-0.2));
            h *= fac.min(S::one()).max(S::of(0.1));
        }
    }

    Ok(Integration { t, y, accepted, rejected, stopped_early: false, h_final: h })
}

/// Classical fixed-step fourth-order Runge-Kutta with `n` equal steps.
///
/// Slow and simple; serves as an independent cross-check for the adaptive
/// integrator in tests.
pub fn rk4_fixed<S: Scalar, const N: usize>(
    f: &mut impl FnMut(S, &[S; N]) -> [S; N],
    t0: S,
    t1: S,
    y0: [S; N],
    n: usize,
) -> [S; N] {
    let h = (t1 - t0) / S::of(n as f64);
    let half = S::of(0.5);
    let sixth = S::one() / S::of(6.0);
    let mut y = y0;
    let mut t = t0;
    for _ in 0..n {
        let k1 = f(t, &y);
        let mut y2 = y;
        for i in 0..N {
            y2[i] += half * h * k1[i];
        }
        let k2 = f(t + half * h, &y2);
        let mut y3 = y;
        for i in 0..N {
            y3[i] += half * h * k2[i];
        }
        let k3 = f(t + half * h, &y3);
        let mut y4 = y;
        for i in 0..N {
            y4[i] += h * k3[i];
        }
        let k4 = f(t + h, &y4);
        for i in 0..N {
            y[i] += h * sixth * (k1[i] + S::of(2.0) * (k2[i] + k3[i]) + k4[i]);
        }
        t += h;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_observe<S: Scalar, const N: usize>(_t: S, _y: &mut [S; N]) -> StepControl {
        StepControl::Continue
    }

    #[test]
    fn exponential_growth_to_1e10_relative() {
        let opts = Dopri5Options { rtol: 1e-12, atol: 1e-14, ..Default::default() };
        let out = dopri5(
            &mut |_t: f64, y: &[f64; 1]| [y[0]],
            0.0,
            3.0,
            [1.0],
            &opts,
            &mut no_observe,
        )
        .unwrap();
        let want = 3.0f64.exp();
        assert!(((out.y[0] - want) / want).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator_phase_accuracy() {
        let opts = Dopri5Options { rtol: 1e-11, atol: 1e-13, ..Default::default() };
        let t1 = 20.0 * std::f64::consts::PI;
        let out = dopri5(
            &mut |_t: f64, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            t1,
            [1.0, 0.0],
            &opts,
            &mut no_observe,
        )
        .unwrap();
        assert!((out.y[0] - 1.0).abs() < 1e-8, "cos drift {}", out.y[0] - 1.0);
        assert!(out.y[1].abs() < 1e-8);
    }

    #[test]
    fn observer_can_rescale_state() {
        // Integrate y' = y with periodic renormalization to unit size; the
        // product of the scales must recover e^t.
        let opts = Dopri5Options::default();
        let mut log_scale = 0.0f64;
        let out = dopri5(
            &mut |_t: f64, y: &[f64; 1]| [y[0]],
            0.0,
            40.0,
            [1.0],
            &opts,
            &mut |_t, y: &mut [f64; 1]| {
                if y[0] > 1e6 {
                    log_scale += y[0].ln();
                    y[0] = 1.0;
                    StepControl::ContinueRefreshed
                } else {
                    StepControl::Continue
                }
            },
        )
        .unwrap();
        let log_total = log_scale + out.y[0].ln();
        assert!((log_total - 40.0).abs() < 1e-8, "log total {log_total}");
    }

    #[test]
    fn observer_can_stop_early() {
        let opts = Dopri5Options::default();
        let out = dopri5(
            &mut |_t: f64, y: &[f64; 1]| [y[0]],
            0.0,
            100.0,
            [1.0],
            &opts,
            &mut |_t, y: &mut [f64; 1]| {
                if y[0] > 10.0 {
                    StepControl::Stop
                } else {
                    StepControl::Continue
                }
            },
        )
        .unwrap();
        assert!(out.stopped_early);
        assert!(out.t < 3.0, "stopped at t = {}", out.t);
    }

    #[test]
    fn agrees_with_fixed_step_reference() {
        // A mildly coupled linear system integrated both ways.
        let mut rhs = |t: f64, y: &[f64; 2]| [y[1] + t, -0.3 * y[0]];
        let opts = Dopri5Options { rtol: 1e-12, atol: 1e-14, ..Default::default() };
        let adaptive =
            dopri5(&mut rhs, 0.0, 5.0, [1.0, -1.0], &opts, &mut no_observe).unwrap();
        let reference = rk4_fixed(&mut rhs, 0.0, 5.0, [1.0, -1.0], 200_000);
        for i in 0..2 {
            assert!(
                (adaptive.y[i] - reference[i]).abs() < 1e-9,
                "component {i}: {} vs {}",
                adaptive.y[i],
                reference[i]
            );
        }
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let opts = Dopri5Options { max_steps: 10, ..Default::default() };
        let r = dopri5(
            &mut |_t: f64, y: &[f64; 2]| [y[1], -1000.0 * y[0]],
            0.0,
            100.0,
            [1.0, 0.0],
            &opts,
            &mut no_observe,
        );
        assert!(r.is_err());
    }
}
