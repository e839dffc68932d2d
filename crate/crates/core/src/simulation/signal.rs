//! External payoff streams for open-loop runs.

use super::integrator::Stage;

/// A payoff function of time `p: [0, T] → ℝⁿ`.
pub trait PayoffSignal: Send + Sync {
    fn len(&self) -> usize;

    fn value(&self, t: f64, out: &mut [f64]);

    /// Value used by an integrator stage. Piecewise signals override this so
    /// that a step ending exactly on a breakpoint uses the left limit.
    fn value_at_stage(&self, stage: Stage, out: &mut [f64]) {
        self.value(stage.time(), out);
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The same payoff vector at all times.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantSignal(pub Vec<f64>);

impl PayoffSignal for ConstantSignal {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn value(&self, _t: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.0);
    }
}

/// Right-continuous piecewise-constant signal: `values[k]` on `[k·width, (k+1)·width)`.
/// The last piece extends to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    width: f64,
    values: Vec<Vec<f64>>,
}

impl PiecewiseConstant {
    pub fn new(width: f64, values: Vec<Vec<f64>>) -> Self {
        assert!(width > 0.0, "piece width must be positive");
        assert!(!values.is_empty(), "signal needs at least one piece");
        let n = values[0].len();
        assert!(
            values.iter().all(|v| v.len() == n),
            "pieces differ in length"
        );
        Self { width, values }
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn pieces(&self) -> &[Vec<f64>] {
        &self.values
    }

    fn piece(&self, k: usize) -> &[f64] {
        &self.values[k.min(self.values.len() - 1)]
    }

    fn index_of(&self, t: f64) -> usize {
        (t / self.width).floor().max(0.0) as usize
    }
}

impl PayoffSignal for PiecewiseConstant {
    fn len(&self) -> usize {
        self.values[0].len()
    }

    fn value(&self, t: f64, out: &mut [f64]) {
        out.copy_from_slice(self.piece(self.index_of(t)));
    }

    fn value_at_stage(&self, stage: Stage, out: &mut [f64]) {
        // the piece active on the open step interval: right limit at the start,
        // left limit at the end
        let probe = if stage.h > 0.0 {
            let frac = stage.frac.clamp(1e-6, 1.0 - 1e-6);
            let t = stage.t0 + frac * stage.h;
            let left = self.index_of(stage.t0 + 1e-9 * stage.h);
            let right = self.index_of(stage.t0 + stage.h * (1.0 - 1e-9));
            if left == right {
                left
            } else {
                self.index_of(t)
            }
        } else {
            self.index_of(stage.t0)
        };
        out.copy_from_slice(self.piece(probe));
    }
}

/// A signal defined by a closure.
pub struct FnSignal<F> {
    n: usize,
    f: F,
}

impl<F: Fn(f64, &mut [f64]) + Send + Sync> FnSignal<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: Fn(f64, &mut [f64]) + Send + Sync> PayoffSignal for FnSignal<F> {
    fn len(&self) -> usize {
        self.n
    }

    fn value(&self, t: f64, out: &mut [f64]) {
        (self.f)(t, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_uses_interval_piece_on_aligned_steps() {
        let s = PiecewiseConstant::new(1.0, vec![vec![1.0], vec![2.0], vec![3.0]]);
        let mut out = [0.0];
        // step [0.99, 1.0]: end stage sits on the breakpoint but belongs to piece 0
        s.value_at_stage(
            Stage {
                t0: 0.99,
                h: 0.01,
                frac: 1.0,
            },
            &mut out,
        );
        assert_eq!(out, [1.0]);
        s.value_at_stage(
            Stage {
                t0: 1.0,
                h: 0.01,
                frac: 0.0,
            },
            &mut out,
        );
        assert_eq!(out, [2.0]);
        s.value(7.5, &mut out);
        assert_eq!(out, [3.0]);
    }
}
