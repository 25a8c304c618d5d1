//! Dormand-Prince 5(4) integrator with PI step control.
//!
//! The integrator never steps past a requested stop, so callers can land
//! exactly on output times; a fixed-step mode is available for convergence
//! studies.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    /// Absolute and relative local error target.
    pub tol: f64,
    pub h_max: f64,
    /// Use this constant step instead of adaptive control.
    pub fixed_step: Option<f64>,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn adaptive(tol: f64) -> Self {
        OdeOptions { tol, h_max: f64::INFINITY, fixed_step: None, max_steps: 2_000_000 }
    }

    pub fn fixed(h: f64) -> Self {
        OdeOptions { tol: f64::INFINITY, h_max: h, fixed_step: Some(h), max_steps: 50_000_000 }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// difference between the 5th and embedded 4th order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// An initial value problem being advanced in time.
pub struct Dopri<F> {
    f: F,
    t: f64,
    y: Vec<f64>,
    k1: Vec<f64>,
    h: f64,
    err_prev: f64,
    opts: OdeOptions,
    steps: usize,
}

impl<F> Dopri<F>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    pub fn new(mut f: F, t0: f64, y0: Vec<f64>, opts: OdeOptions) -> Result<Self> {
        let mut k1 = vec![0.0; y0.len()];
        f(t0, &y0, &mut k1)?;
        let h = match opts.fixed_step {
            Some(h) => h,
            None => {
                let ynorm = y0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                let dnorm = k1.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                let guess = if dnorm > 0.0 { 0.01 * (1.0 + ynorm) / dnorm } else { 1e-3 };
                guess.clamp(1e-6, 1e-2).min(opts.h_max)
            }
        };
        Ok(Dopri { f, t: t0, y: y0, k1, h, err_prev: 1e-4, opts, steps: 0 })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Take one accepted step that does not pass `t_stop`.
    pub fn step(&mut self, t_stop: f64) -> Result<()> {
        let n = self.y.len();
        let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
        let mut ytmp = vec![0.0; n];
        loop {
            if self.steps >= self.opts.max_steps {
                return Err(Error::StepCollapse { t: self.t });
            }
            let remaining = t_stop - self.t;
            let mut h = self.h.min(self.opts.h_max);
            let landing = h >= remaining * (1.0 - 1e-12);
            if landing {
                h = remaining;
            }
            if !(h > 1e-14 * (1.0 + self.t.abs())) {
                return Err(Error::StepCollapse { t: self.t });
            }
            k[0].copy_from_slice(&self.k1);
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = self.y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += h * A[s][j] * kj[i];
                    }
                    ytmp[i] = acc;
                }
                (self.f)(self.t + C[s] * h, &ytmp, &mut k[s])?;
            }
            // stage 7 is evaluated at the 5th order solution (FSAL), held in ytmp
            let mut err = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for (s, ks) in k.iter().enumerate() {
                    e += E[s] * ks[i];
                }
                let sc = self.opts.tol + self.opts.tol * self.y[i].abs().max(ytmp[i].abs());
                err += (h * e / sc).powi(2);
            }
            let err = (err / n.max(1) as f64).sqrt();
            let accept = self.opts.fixed_step.is_some() || err <= 1.0;
            if accept {
                self.t = if landing { t_stop } else { self.t + h };
                self.y.copy_from_slice(&ytmp);
                self.k1.copy_from_slice(&k[6]);
                self.steps += 1;
                if self.opts.fixed_step.is_none() {
                    let e = err.max(1e-10);
                    let fac = 0.9 * e.powf(-0.7 / 5.0) * self.err_prev.powf(0.4 / 5.0);
                    self.h = h * fac.clamp(0.2, 5.0);
                    self.err_prev = e;
                    if landing {
                        // keep the step suggestion from before the truncation
                        self.h = self.h.max(h);
                    }
                }
                return Ok(());
            }
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            self.h = h * fac;
            self.steps += 1;
        }
    }

    /// Advance exactly to `t_target`.
    pub fn advance(&mut self, t_target: f64) -> Result<()> {
        while self.t < t_target {
            self.step(t_target)?;
        }
        Ok(())
    }

    /// Replace the state in place (e.g. after a projection), refreshing the
    /// cached derivative.
    pub fn reset_state(&mut self, y: Vec<f64>) -> Result<()> {
        self.y = y;
        (self.f)(self.t, &self.y, &mut self.k1)
    }

    pub fn into_state(self) -> (f64, Vec<f64>) {
        (self.t, self.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn harmonic(_t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        dy[0] = y[1];
        dy[1] = -y[0];
        Ok(())
    }

    #[test]
    fn adaptive_reaches_stops_exactly() {
        let mut ode = Dopri::new(harmonic, 0.0, vec![0.0, 1.0], OdeOptions::adaptive(1e-12)).unwrap();
        for stop in [0.1, 1.0, std::f64::consts::PI] {
            ode.advance(stop).unwrap();
            assert_eq!(ode.t(), stop);
            assert_abs_diff_eq!(ode.y()[0], stop.sin(), epsilon = 1e-10);
        }
    }

    #[test]
    fn fixed_step_is_fifth_order() {
        let run = |h: f64| {
            let mut ode = Dopri::new(harmonic, 0.0, vec![0.0, 1.0], OdeOptions::fixed(h)).unwrap();
            ode.advance(2.0).unwrap();
            (ode.y()[0] - 2f64.sin()).abs()
        };
        let ratio = run(0.1) / run(0.05);
        assert!(ratio > 24.0, "ratio {ratio}");
    }

    #[test]
    fn errors_propagate() {
        let f = |t: f64, _y: &[f64], dy: &mut [f64]| {
            if t > 0.5 {
                return Err(Error::ChartExit { t });
            }
            dy[0] = 1.0;
            Ok(())
        };
        let mut ode = Dopri::new(f, 0.0, vec![0.0], OdeOptions::adaptive(1e-8)).unwrap();
        assert!(matches!(ode.advance(1.0), Err(Error::ChartExit { .. })));
    }

    #[test]
    fn stiff_blowup_collapses() {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[0] * y[0];
            Ok(())
        };
        let mut ode = Dopri::new(f, 0.0, vec![1.0], OdeOptions::adaptive(1e-10)).unwrap();
        assert!(matches!(ode.advance(2.0), Err(Error::StepCollapse { .. })));
    }
}
