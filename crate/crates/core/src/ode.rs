//! Dormand-Prince 5(4) integrator with PI step-size control and the
//! standard fourth-order continuous extension for dense output.
//!
//! Only what the solvers need: forward integration of an autonomous or
//! time-dependent system `y' = f(t, y)` from `0` to `span`, sampling the
//! solution at caller-chosen times.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerances {
    pub fn new(rtol: f64, atol: f64) -> Result<Self> {
        if !(rtol > 0.0 && atol > 0.0 && rtol.is_finite() && atol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tolerances must be positive, got rtol = {rtol}, atol = {atol}"
            )));
        }
        Ok(Self { rtol, atol })
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
    /// Sum over accepted steps of the embedded local error (max norm).
    pub error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Integration {
    /// One state per requested sample time.
    pub samples: Vec<Vec<f64>>,
    pub stats: StepStats,
}

// Butcher tableau
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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// error coefficients: 5th order minus embedded 4th order
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const MAX_STEPS: usize = 10_000_000;

/// Integrates `y' = f(t, y)` on `[0, span]` from `y0`.
///
/// `sample_times` must be non-decreasing and lie in `[0, span]`. A sample
/// exactly at `span` returns the final step's state; interior samples come
/// from the continuous extension. `f` writes the derivative into its last
/// argument and may fail (for example on overflow), which aborts the run.
pub fn integrate<F>(
    mut f: F,
    y0: &[f64],
    span: f64,
    sample_times: &[f64],
    tol: Tolerances,
) -> Result<Integration>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if !(span >= 0.0 && span.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "integration span must be finite and non-negative, got {span}"
        )));
    }
    if sample_times.windows(2).any(|w| w[1] < w[0])
        || sample_times.iter().any(|&t| !(0.0..=span).contains(&t))
    {
        return Err(Error::InvalidParameter(
            "sample times must be sorted and inside the integration span".into(),
        ));
    }
    let n = y0.len();
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0;
    while next_sample < sample_times.len() && sample_times[next_sample] == 0.0 {
        samples.push(y0.to_vec());
        next_sample += 1;
    }
    let mut stats = StepStats::default();
    if span == 0.0 {
        while samples.len() < sample_times.len() {
            samples.push(y0.to_vec());
        }
        return Ok(Integration { samples, stats });
    }

    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut dense = vec![vec![0.0; n]; 5];

    f(0.0, &y, &mut k[0])?;
    stats.rhs_evaluations += 1;
    check_finite(&k[0], 0.0)?;

    let mut h = initial_step(&mut f, &y, &k[0], span, tol, &mut stats)?;
    let h_min = 1e-14 * span;
    let mut t = 0.0;
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;

    while t < span {
        if stats.accepted + stats.rejected >= MAX_STEPS {
            return Err(Error::NoConvergence(format!(
                "integrator exceeded {MAX_STEPS} steps at t = {t}"
            )));
        }
        let mut last = false;
        if t + 1.01 * h >= span {
            h = span - t;
            last = true;
        }
        if h < h_min {
            return Err(Error::StepSizeUnderflow { t, step: h });
        }

        // stages 2..7
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k[0][i];
        }
        f(t + C2 * h, &tmp, &mut k[1])?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
        }
        f(t + C3 * h, &tmp, &mut k[2])?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        f(t + C4 * h, &tmp, &mut k[3])?;
        for i in 0..n {
            tmp[i] =
                y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        f(t + C5 * h, &tmp, &mut k[4])?;
        for i in 0..n {
            tmp[i] = y[i]
                + h * (A61 * k[0][i]
                    + A62 * k[1][i]
                    + A63 * k[2][i]
                    + A64 * k[3][i]
                    + A65 * k[4][i]);
        }
        let t_new = if last { span } else { t + h };
        f(t_new, &tmp, &mut k[5])?;
        for i in 0..n {
            y_new[i] = y[i]
                + h * (A71 * k[0][i]
                    + A73 * k[2][i]
                    + A74 * k[3][i]
                    + A75 * k[4][i]
                    + A76 * k[5][i]);
        }
        f(t_new, &y_new, &mut k[6])?;
        stats.rhs_evaluations += 6;

        let mut err_norm = 0.0;
        let mut err_max: f64 = 0.0;
        for i in 0..n {
            err[i] = h
                * (E1 * k[0][i]
                    + E3 * k[2][i]
                    + E4 * k[3][i]
                    + E5 * k[4][i]
                    + E6 * k[5][i]
                    + E7 * k[6][i]);
            let scale = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err_norm += (err[i] / scale).powi(2);
            err_max = err_max.max(err[i].abs());
        }
        let err_norm = (err_norm / n.max(1) as f64).sqrt();
        if !err_norm.is_finite() {
            // blown-up trial step; shrink and retry
            stats.rejected += 1;
            h *= FAC_MIN;
            last_rejected = true;
            continue;
        }

        if err_norm <= 1.0 {
            check_finite(&y_new, t_new)?;
            // continuous extension coefficients over [t, t_new]
            for i in 0..n {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                dense[0][i] = y[i];
                dense[1][i] = ydiff;
                dense[2][i] = bspl;
                dense[3][i] = ydiff - h * k[6][i] - bspl;
                dense[4][i] = h
                    * (D1 * k[0][i]
                        + D3 * k[2][i]
                        + D4 * k[3][i]
                        + D5 * k[4][i]
                        + D6 * k[5][i]
                        + D7 * k[6][i]);
            }
            while next_sample < sample_times.len()
                && (sample_times[next_sample] < t_new
                    || (!last && sample_times[next_sample] == t_new))
            {
                let theta = (sample_times[next_sample] - t) / h;
                let theta1 = 1.0 - theta;
                samples.push(
                    (0..n)
                        .map(|i| {
                            dense[0][i]
                                + theta
                                    * (dense[1][i]
                                        + theta1
                                            * (dense[2][i]
                                                + theta * (dense[3][i] + theta1 * dense[4][i])))
                        })
                        .collect(),
                );
                next_sample += 1;
            }
            if last {
                while next_sample < sample_times.len() {
                    samples.push(y_new.clone());
                    next_sample += 1;
                }
            }

            stats.accepted += 1;
            stats.error_estimate += err_max;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            t = t_new;

            let mut fac = err_norm.max(1e-10).powf(0.2 - 0.75 * BETA) / err_old.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            err_old = err_norm.max(1e-4);
            last_rejected = false;
            h = h_new;
        } else {
            stats.rejected += 1;
            let fac = (err_norm.powf(0.2 - 0.75 * BETA) / SAFETY).min(1.0 / FAC_MIN);
            h /= fac;
            last_rejected = true;
        }
    }

    Ok(Integration { samples, stats })
}

/// Integrates to `span` and returns only the final state.
pub fn integrate_to<F>(f: F, y0: &[f64], span: f64, tol: Tolerances) -> Result<(Vec<f64>, StepStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let mut run = integrate(f, y0, span, &[span], tol)?;
    Ok((run.samples.pop().expect("one sample"), run.stats))
}

fn check_finite(y: &[f64], t: f64) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericOverflow(format!("non-finite state at t = {t}")))
    }
}

// Hairer & Wanner's starting-step heuristic for a fifth-order method.
fn initial_step<F>(
    f: &mut F,
    y0: &[f64],
    f0: &[f64],
    span: f64,
    tol: Tolerances,
    stats: &mut StepStats,
) -> Result<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y0.len().max(1) as f64;
    let scale: Vec<f64> = y0.iter().map(|y| tol.atol + tol.rtol * y.abs()).collect();
    let norm = |v: &[f64]| -> f64 {
        (v.iter().zip(&scale).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / n).sqrt()
    };
    let d0 = norm(y0);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
    .min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, d)| y + h0 * d).collect();
    let mut f1 = vec![0.0; y0.len()];
    f(h0, &y1, &mut f1)?;
    stats.rhs_evaluations += 1;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> Tolerances {
        Tolerances::new(1e-10, 1e-12).unwrap()
    }

    #[test]
    fn exponential_growth_with_dense_output() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.02).collect();
        let run = integrate(
            |_, y, dy| {
                dy[0] = y[0];
                Ok(())
            },
            &[1.0],
            2.0,
            &times,
            tight(),
        )
        .unwrap();
        assert_eq!(run.samples.len(), times.len());
        for (t, y) in times.iter().zip(&run.samples) {
            assert!((y[0] - t.exp()).abs() < 1e-8 * t.exp(), "t = {t}");
        }
    }

    #[test]
    fn harmonic_oscillator_period() {
        let tau = 2.0 * std::f64::consts::PI;
        let (y, stats) = integrate_to(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            &[1.0, 0.0],
            tau,
            tight(),
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8);
        assert!(y[1].abs() < 1e-8);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = cos t, y(0) = 0
        let (y, _) = integrate_to(
            |t, _, dy| {
                dy[0] = t.cos();
                Ok(())
            },
            &[0.0],
            3.0,
            tight(),
        )
        .unwrap();
        assert!((y[0] - 3f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn linear_solution_is_exact() {
        let times = [0.0, 0.5, 1.0];
        let run = integrate(
            |_, _, dy| {
                dy[0] = -1.0;
                Ok(())
            },
            &[1.0],
            1.0,
            &times,
            Tolerances::default(),
        )
        .unwrap();
        assert_eq!(run.samples[0][0], 1.0);
        assert!((run.samples[1][0] - 0.5).abs() < 1e-15);
        assert!(run.samples[2][0].abs() < 1e-15);
    }

    #[test]
    fn blow_up_reports_overflow_or_underflow() {
        // y' = y², y(0) = 1 blows up at t = 1
        let res = integrate_to(
            |_, y, dy| {
                dy[0] = y[0] * y[0];
                Ok(())
            },
            &[1.0],
            2.0,
            Tolerances::default(),
        );
        assert!(matches!(
            res,
            Err(Error::StepSizeUnderflow { .. }) | Err(Error::NumericOverflow(_))
        ));
    }

    #[test]
    fn rhs_errors_propagate() {
        let res = integrate_to(
            |_, _, _| Err(Error::NumericOverflow("boom".into())),
            &[1.0],
            1.0,
            Tolerances::default(),
        );
        assert_eq!(res.unwrap_err(), Error::NumericOverflow("boom".into()));
    }

    #[test]
    fn rejects_bad_sample_times() {
        let f = |_: f64, _: &[f64], dy: &mut [f64]| {
            dy[0] = 0.0;
            Ok(())
        };
        assert!(integrate(f, &[0.0], 1.0, &[0.5, 0.2], Tolerances::default()).is_err());
        assert!(integrate(f, &[0.0], 1.0, &[1.5], Tolerances::default()).is_err());
        assert!(Tolerances::new(0.0, 1e-3).is_err());
    }

    #[test]
    fn zero_span_returns_initial_state() {
        let run = integrate(
            |_, _, dy| {
                dy[0] = 1.0;
                Ok(())
            },
            &[3.0],
            0.0,
            &[0.0],
            Tolerances::default(),
        )
        .unwrap();
        assert_eq!(run.samples, vec![vec![3.0]]);
    }
}
