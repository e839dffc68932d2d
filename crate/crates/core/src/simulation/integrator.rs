//! Fixed-step classical Runge–Kutta on a uniform grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where in the current step a right-hand side is evaluated: time `t0 + frac·h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub t0: f64,
    pub h: f64,
    pub frac: f64,
}

impl Stage {
    pub fn at(t: f64) -> Self {
        Self {
            t0: t,
            h: 0.0,
            frac: 0.0,
        }
    }

    pub fn time(&self) -> f64 {
        self.t0 + self.frac * self.h
    }
}

/// Right-hand side `ż = F(t, z)`.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&self, stage: Stage, z: &[f64], dz: &mut [f64]) -> Result<()>;

    /// Whether the field is only piecewise smooth in `z`.
    fn has_regimes(&self) -> bool {
        false
    }

    /// Discrete label of the smooth piece containing `z`.
    fn regime(&self, _z: &[f64], _out: &mut Vec<u8>) -> Result<()> {
        Ok(())
    }
}

/// Relative resolution of a located regime switch within a step.
const SWITCH_RESOLUTION: f64 = 1e-12;

/// Upper bound on regime switches handled inside one step.
const MAX_SWITCHES: usize = 16;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4,
}

/// Which state representation q-state agents are integrated in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinates {
    #[default]
    Full,
    /// `q'_j = q_j − q_n`, dropping the translation direction.
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default)]
    pub method: Method,
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default)]
    pub coordinates: Coordinates,
}

fn default_stride() -> usize {
    1
}

impl IntegratorConfig {
    pub fn new(dt: f64, horizon: f64) -> Self {
        Self {
            method: Method::Rk4,
            dt,
            horizon,
            record_stride: 1,
            coordinates: Coordinates::Full,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_coordinates(mut self, coordinates: Coordinates) -> Self {
        self.coordinates = coordinates;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.dt > self.horizon {
            return Err(Error::InvalidConfig(format!(
                "dt {} exceeds horizon {}",
                self.dt, self.horizon
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig(
                "record_stride must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Number of steps; the grid is `t_k = k·dt` with the last point pinned to the horizon.
    pub fn num_steps(&self) -> usize {
        let ratio = self.horizon / self.dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
            rounded as usize
        } else {
            ratio.ceil() as usize
        }
    }

    /// `(t_k, t_{k+1})` for step `k`.
    pub fn step_bounds(&self, k: usize, num_steps: usize) -> (f64, f64) {
        let t0 = k as f64 * self.dt;
        let t1 = if k + 1 == num_steps {
            self.horizon
        } else {
            (k + 1) as f64 * self.dt
        };
        (t0, t1)
    }
}

/// Reusable stage buffers for [`Rk4::step`].
#[derive(Debug, Clone)]
pub struct Rk4 {
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

    /// Advances `z` from `t0` by `h`.
    pub fn step<F: VectorField + ?Sized>(
        &mut self,
        field: &F,
        t0: f64,
        h: f64,
        z: &mut [f64],
    ) -> Result<()> {
        let stage = |frac| Stage { t0, h, frac };
        field.eval(stage(0.0), z, &mut self.k1)?;
        axpy(&mut self.tmp, z, 0.5 * h, &self.k1);
        field.eval(stage(0.5), &self.tmp, &mut self.k2)?;
        axpy(&mut self.tmp, z, 0.5 * h, &self.k2);
        field.eval(stage(0.5), &self.tmp, &mut self.k3)?;
        axpy(&mut self.tmp, z, h, &self.k3);
        field.eval(stage(1.0), &self.tmp, &mut self.k4)?;
        let c = h / 6.0;
        for (i, zi) in z.iter_mut().enumerate() {
            *zi += c * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

impl Rk4 {
    /// Like [`step`](Self::step), but a step that changes the field's regime is
    /// split at the switch, located by bisection on the sub-step length, so that
    /// no RK4 stage straddles a kink. Returns the number of splits.
    pub fn step_located<F: VectorField + ?Sized>(
        &mut self,
        field: &F,
        t0: f64,
        h: f64,
        z: &mut [f64],
    ) -> Result<usize> {
        if !field.has_regimes() {
            self.step(field, t0, h, z)?;
            return Ok(0);
        }
        let end = t0 + h;
        let mut t = t0;
        let mut start = Vec::new();
        let mut probe = Vec::new();
        field.regime(z, &mut start)?;
        let mut trial = z.to_vec();
        let mut splits = 0;
        loop {
            let rem = end - t;
            trial.copy_from_slice(z);
            self.step(field, t, rem, &mut trial)?;
            probe.clear();
            field.regime(&trial, &mut probe)?;
            if probe == start || splits == MAX_SWITCHES {
                z.copy_from_slice(&trial);
                return Ok(splits);
            }
            let (mut lo, mut hi) = (0.0, rem);
            let mut past = trial.clone();
            while hi - lo > SWITCH_RESOLUTION * h {
                let mid = 0.5 * (lo + hi);
                trial.copy_from_slice(z);
                self.step(field, t, mid, &mut trial)?;
                probe.clear();
                field.regime(&trial, &mut probe)?;
                if probe == start {
                    lo = mid;
                } else {
                    hi = mid;
                    past.copy_from_slice(&trial);
                }
            }
            z.copy_from_slice(&past);
            splits += 1;
            if hi >= rem {
                return Ok(splits);
            }
            t += hi;
            start.clear();
            field.regime(z, &mut start)?;
        }
    }
}

#[inline]
fn axpy(out: &mut [f64], z: &[f64], a: f64, k: &[f64]) {
    for ((o, &zi), &ki) in out.iter_mut().zip(z).zip(k) {
        *o = zi + a * ki;
    }
}

/// Integrates an autonomous or time-dependent field to the horizon and
/// returns the final state.
pub fn integrate_to_end<F: VectorField + ?Sized>(
    field: &F,
    z0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut z = z0.to_vec();
    let mut rk = Rk4::new(z.len());
    let n = cfg.num_steps();
    for k in 0..n {
        let (t0, t1) = cfg.step_bounds(k, n);
        rk.step_located(field, t0, t1 - t0, &mut z)?;
    }
    Ok(z)
}
