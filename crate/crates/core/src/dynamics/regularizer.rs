//! Regularizers `h` on the simplex and their FTRL argmax / convex conjugate.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Width of the multiplier bracket at which the separable solver stops.
pub const MULTIPLIER_TOL: f64 = 1e-12;

/// One coordinate `h_j` of a separable regularizer `h(x) = Σ_j h_j(x_j)`.
///
/// `derivative` must be strictly increasing on `(0, 1)`. `derivative_inverse`
/// may return values outside `[0, 1]`; the solver clips them.
pub trait ScalarRegularizer: Send + Sync + fmt::Debug {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
    fn derivative_inverse(&self, y: f64) -> f64;
}

/// A [`ScalarRegularizer`] assembled from three closures.
pub struct FnScalarRegularizer {
    name: String,
    value: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    derivative: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    inverse: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl FnScalarRegularizer {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        inverse: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            value: Box::new(value),
            derivative: Box::new(derivative),
            inverse: Box::new(inverse),
        }
    }
}

impl fmt::Debug for FnScalarRegularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnScalarRegularizer")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

impl ScalarRegularizer for FnScalarRegularizer {
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    fn derivative_inverse(&self, y: f64) -> f64 {
        (self.inverse)(y)
    }
}

/// Separable regularizer with one scalar component per action.
#[derive(Debug, Clone)]
pub struct SeparableRegularizer {
    components: Vec<Arc<dyn ScalarRegularizer>>,
}

impl SeparableRegularizer {
    pub fn new(components: Vec<Arc<dyn ScalarRegularizer>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidDynamic(
                "separable regularizer has no components".into(),
            ));
        }
        Ok(Self { components })
    }

    /// The same component on all `n` coordinates.
    pub fn uniform(component: Arc<dyn ScalarRegularizer>, n: usize) -> Result<Self> {
        Self::new(vec![component; n])
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, j: usize) -> &dyn ScalarRegularizer {
        self.components[j].as_ref()
    }

    fn clipped(&self, q: &[f64], lambda: f64, out: &mut [f64]) -> f64 {
        let mut s = 0.0;
        for ((o, c), &qj) in out.iter_mut().zip(&self.components).zip(q) {
            let v = c.derivative_inverse(qj - lambda);
            *o = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
            s += *o;
        }
        s
    }

    /// Solves `Σ_j clip((h_j')⁻¹(q_j − λ)) = 1` by bisection on `λ`.
    fn argmax(&self, q: &[f64]) -> Result<Vec<f64>> {
        let n = q.len();
        let anchor = 1.0 / n as f64;
        // at λ = q_j − h_j'(1/n) coordinate j sits at 1/n, so the extremes bracket the root
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (c, &qj) in self.components.iter().zip(q) {
            let l = qj - c.derivative(anchor);
            lo = lo.min(l);
            hi = hi.max(l);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidDynamic(
                "separable component derivative is not finite at 1/n".into(),
            ));
        }
        let mut x = vec![0.0; n];
        for _ in 0..200 {
            if hi - lo <= MULTIPLIER_TOL * lo.abs().max(hi.abs()).max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.clipped(q, mid, &mut x) >= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = self.clipped(q, 0.5 * (lo + hi), &mut x);
        if !(s > 0.0) {
            return Err(Error::NoConvergence(
                "separable argmax collapsed to zero".into(),
            ));
        }
        x.iter_mut().for_each(|v| *v /= s);
        Ok(x)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.components
            .iter()
            .zip(x)
            .map(|(c, &v)| c.value(v))
            .sum()
    }
}

/// Strictly convex regularizer defining an FTRL conversion function.
#[derive(Debug, Clone)]
pub enum Regularizer {
    /// `h(x) = Σ x_j log x_j`, giving the logit map (Replicator Dynamic).
    Entropy,
    /// `h(x) = ½ Σ x_j²`, giving Euclidean projection (Online Gradient Descent).
    HalfL2,
    SeparableCustom(SeparableRegularizer),
}

impl Regularizer {
    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::Entropy => "entropy",
            Regularizer::HalfL2 => "half_l2",
            Regularizer::SeparableCustom(_) => "separable",
        }
    }

    /// Fixed action count, if the regularizer carries one.
    pub fn action_count(&self) -> Option<usize> {
        match self {
            Regularizer::SeparableCustom(s) => Some(s.len()),
            _ => None,
        }
    }

    /// `argmax_{x∈Δ} ⟨q, x⟩ − h(x)`.
    pub fn argmax(&self, q: &[f64]) -> Result<Vec<f64>> {
        match self {
            Regularizer::Entropy => Ok(softmax(q)),
            Regularizer::HalfL2 => Ok(project_simplex(q)),
            Regularizer::SeparableCustom(s) => {
                if s.len() != q.len() {
                    return Err(Error::DimensionMismatch {
                        agent: 0,
                        expected: s.len(),
                        found: q.len(),
                    });
                }
                s.argmax(q)
            }
        }
    }

    /// Appends which face of the simplex the maximizer lies on: per action,
    /// 0 when clipped at zero, 2 when clipped at one, 1 otherwise. The
    /// conversion map is smooth while this pattern is unchanged. Entropy
    /// never touches the boundary and appends nothing.
    pub(crate) fn active_set(&self, q: &[f64], out: &mut Vec<u8>) -> Result<()> {
        if matches!(self, Regularizer::Entropy) {
            return Ok(());
        }
        let x = self.argmax(q)?;
        out.extend(x.iter().map(|&v| {
            if v <= 0.0 {
                0
            } else if v >= 1.0 {
                2
            } else {
                1
            }
        }));
        Ok(())
    }

    /// `h(x)` with the `0 log 0 = 0` convention for entropy.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Regularizer::Entropy => x
                .iter()
                .map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 })
                .sum(),
            Regularizer::HalfL2 => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            Regularizer::SeparableCustom(s) => s.value(x),
        }
    }

    /// Convex conjugate `h*(q)` together with the maximizer.
    pub fn conjugate(&self, q: &[f64]) -> Result<(f64, Vec<f64>)> {
        let x = self.argmax(q)?;
        let value = match self {
            // ⟨q, x⟩ − Σ x log x collapses to log Σ e^{q_j} at the logit point
            Regularizer::Entropy => log_sum_exp(q),
            _ => q.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() - self.value(&x),
        };
        Ok((value, x))
    }

    /// Spot-checks `h_j'' > 0` on a grid inside `(0, 1)` for separable kinds.
    pub fn check_strict_convexity(&self) -> Result<()> {
        let Regularizer::SeparableCustom(s) = self else {
            return Ok(());
        };
        let h = 1e-4;
        for j in 0..s.len() {
            let c = s.component(j);
            for k in 1..20 {
                let x = k as f64 / 20.0;
                let curvature = c.derivative(x + h) - c.derivative(x - h);
                if !(curvature > 0.0) {
                    return Err(Error::InvalidDynamic(format!(
                        "component {j} is not strictly convex near x = {x}"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn log_sum_exp(q: &[f64]) -> f64 {
    let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + q.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Logit choice map with the max-shift trick.
pub fn softmax(q: &[f64]) -> Vec<f64> {
    let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut x: Vec<f64> = q.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    x
}

/// Exact Euclidean projection onto the probability simplex (sort-based).
pub fn project_simplex(q: &[f64]) -> Vec<f64> {
    let mut sorted = q.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    q.iter().map(|v| (v - theta).max(0.0)).collect()
}
