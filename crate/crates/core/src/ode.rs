//! Explicit Runge-Kutta steppers over flat `f64` state vectors.

/// A right-hand side refused to evaluate because a molecule reached the
/// coordinate singularity `|z| → 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Singular {
    pub molecule: usize,
    pub z: f64,
}

/// Autonomous first-order system `y' = f(y)`.
pub(crate) trait Rhs {
    fn dim(&self) -> usize;
    fn eval(&self, y: &[f64], dy: &mut [f64]) -> Result<(), Singular>;
}

/// Classical fourth-order Runge-Kutta with preallocated stages.
pub(crate) struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub fn step<R: Rhs>(&mut self, rhs: &R, y: &mut [f64], h: f64) -> Result<(), Singular> {
        let half = 0.5 * h;
        rhs.eval(y, &mut self.k1)?;
        for i in 0..y.len() {
            self.tmp[i] = y[i] + half * self.k1[i];
        }
        rhs.eval(&self.tmp, &mut self.k2)?;
        for i in 0..y.len() {
            self.tmp[i] = y[i] + half * self.k2[i];
        }
        rhs.eval(&self.tmp, &mut self.k3)?;
        for i in 0..y.len() {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        rhs.eval(&self.tmp, &mut self.k4)?;
        let sixth = h / 6.0;
        for i in 0..y.len() {
            y[i] += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau; nodes are not needed for autonomous systems
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum AdaptiveFailure {
    Singular { t: f64, cause: Singular },
    Underflow { t: f64, h: f64 },
}

/// Adaptive Dormand-Prince 5(4) integrator that lands exactly on requested
/// output times. The step size is carried across calls to [`Dopri5::advance`].
pub(crate) struct Dopri5 {
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
    y_new: Vec<f64>,
    h: f64,
    abs_tol: f64,
    rel_tol: f64,
    h_max: f64,
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

impl Dopri5 {
    pub fn new(dim: usize, h0: f64, h_max: f64, abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            stage: vec![0.0; dim],
            y_new: vec![0.0; dim],
            h: h0,
            abs_tol,
            rel_tol,
            h_max,
        }
    }

    pub fn advance<R: Rhs>(&mut self, rhs: &R, y: &mut [f64], t0: f64, t1: f64) -> Result<(), AdaptiveFailure> {
        let mut t = t0;
        rhs.eval(y, &mut self.k[0])
            .map_err(|cause| AdaptiveFailure::Singular { t, cause })?;
        while t < t1 {
            let remaining = t1 - t;
            let mut h = self.h.min(self.h_max);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if h <= 1e-14 * (1.0 + t.abs()) {
                return Err(AdaptiveFailure::Underflow { t, h });
            }
            let err = match self.trial(rhs, y, h) {
                Ok(err) => err,
                Err(_) => {
                    // a trial stage wandered past the singularity; retry smaller
                    self.h = h * MIN_FACTOR;
                    continue;
                }
            };
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                y.copy_from_slice(&self.y_new);
                // first-same-as-last: the seventh stage is f(y_new)
                self.k.swap(0, 6);
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                if !last || factor < 1.0 {
                    self.h = h * factor;
                }
            } else {
                self.h = h * (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            }
        }
        Ok(())
    }

    /// Runs stages 2..7 from `k[0] = f(y)`, leaves the fifth-order solution in
    /// `y_new`, and returns the scaled RMS error estimate.
    fn trial<R: Rhs>(&mut self, rhs: &R, y: &[f64], h: f64) -> Result<f64, Singular> {
        for s in 1..7 {
            for i in 0..y.len() {
                let mut acc = 0.0;
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += a * self.k[j][i];
                }
                self.stage[i] = y[i] + h * acc;
            }
            rhs.eval(&self.stage, &mut self.k[s])?;
        }
        let mut sum = 0.0;
        for i in 0..y.len() {
            let mut high = 0.0;
            let mut low = 0.0;
            for s in 0..7 {
                high += B5[s] * self.k[s][i];
                low += B4[s] * self.k[s][i];
            }
            self.y_new[i] = y[i] + h * high;
            let scale = self.abs_tol + self.rel_tol * y[i].abs().max(self.y_new[i].abs());
            let e = h * (high - low) / scale;
            sum += e * e;
        }
        Ok((sum / y.len().max(1) as f64).sqrt())
    }
}
