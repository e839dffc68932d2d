//! Escort replicator dynamics `ẋ_j = φ_j(x_j)·(p_j − Σφ_ℓp_ℓ / Σφ_ℓ)` and
//! their separable-FTRL counterparts with `h_j'' = 1/φ_j`.

use std::fmt;
use std::sync::Arc;

use crate::dynamics::regularizer::{Regularizer, ScalarRegularizer, SeparableRegularizer};
use crate::error::{Error, Result};

/// A positive escort function on `(0, 1)`.
#[derive(Clone)]
pub enum EscortFunction {
    /// `φ(x) = x`, the Replicator Dynamic.
    Identity,
    /// `φ(x) = 1`, the projection dynamic.
    Constant,
    /// `φ(x) = x^k`.
    Power(f64),
    Custom {
        name: String,
        phi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for EscortFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl PartialEq for EscortFunction {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Custom { phi: a, .. }, Self::Custom { phi: b, .. }) => Arc::ptr_eq(a, b),
            (Self::Custom { .. }, _) | (_, Self::Custom { .. }) => false,
            _ => self.exponent() == other.exponent(),
        }
    }
}

impl EscortFunction {
    pub fn custom(
        name: impl Into<String>,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::Custom {
            name: name.into(),
            phi: Arc::new(phi),
        }
    }

    /// Parses `identity`, `constant` or `power:k`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Self::Identity),
            "constant" => Ok(Self::Constant),
            _ => {
                let k = s
                    .strip_prefix("power:")
                    .and_then(|k| k.parse::<f64>().ok())
                    .filter(|k| k.is_finite())
                    .ok_or_else(|| Error::InvalidEscort(format!("unknown escort family `{s}`")))?;
                Ok(Self::Power(k))
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::Constant => "constant".into(),
            Self::Power(k) => format!("power:{k}"),
            Self::Custom { name, .. } => name.clone(),
        }
    }

    /// Exponent of the power family, when the function belongs to it.
    fn exponent(&self) -> Option<f64> {
        match self {
            Self::Identity => Some(1.0),
            Self::Constant => Some(0.0),
            Self::Power(k) => Some(*k),
            Self::Custom { .. } => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Identity => x,
            Self::Constant => 1.0,
            Self::Power(k) => x.powf(*k),
            Self::Custom { phi, .. } => phi(x),
        }
    }
}

/// Escort functions for every action. A single function is shared by all actions.
#[derive(Debug, Clone, PartialEq)]
pub struct Escort {
    functions: Vec<EscortFunction>,
}

impl Escort {
    pub fn uniform(f: EscortFunction) -> Self {
        Self { functions: vec![f] }
    }

    pub fn per_action(functions: Vec<EscortFunction>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::InvalidEscort("no escort functions".into()));
        }
        Ok(Self { functions })
    }

    /// The action count fixed by per-action functions; `None` when shared.
    pub fn action_count(&self) -> Option<usize> {
        (self.functions.len() > 1).then_some(self.functions.len())
    }

    pub fn function(&self, j: usize) -> &EscortFunction {
        if self.functions.len() == 1 {
            &self.functions[0]
        } else {
            &self.functions[j]
        }
    }

    pub fn describe(&self) -> String {
        self.functions
            .iter()
            .map(EscortFunction::name)
            .collect::<Vec<_>>()
            .join(",")
    }

    fn check_len(&self, n: usize) -> Result<()> {
        match self.action_count() {
            Some(k) if k != n => Err(Error::DimensionMismatch {
                agent: 0,
                expected: k,
                found: n,
            }),
            _ => Ok(()),
        }
    }

    /// Escort velocity; writes into `out`.
    pub fn velocity_into(&self, x: &[f64], p: &[f64], out: &mut [f64]) -> Result<()> {
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, (&xj, &pj)) in x.iter().zip(p).enumerate() {
            let w = self.function(j).eval(xj);
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidEscort(format!(
                    "φ_{j}({xj}) = {w} is not positive"
                )));
            }
            out[j] = w;
            num += w * pj;
            den += w;
        }
        let mean = num / den;
        for (o, &pj) in out.iter_mut().zip(p) {
            *o *= pj - mean;
        }
        Ok(())
    }
}

/// `ẋ` of the escort dynamic at an interior point.
pub fn escort_derivative(phi: &Escort, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    if x.len() != p.len() {
        return Err(Error::DimensionMismatch {
            agent: 0,
            expected: x.len(),
            found: p.len(),
        });
    }
    phi.check_len(x.len())?;
    if let Some((coordinate, &value)) = x.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::BoundaryState { coordinate, value });
    }
    let mut out = vec![0.0; x.len()];
    phi.velocity_into(x, p, &mut out)?;
    Ok(out)
}

/// Separable regularizer whose FTRL dynamic coincides with the escort dynamic
/// on the interior. Components satisfy `h_j'' = 1/φ_j`, `h_j(1/n) = 0` and
/// `h_j'(1/n) = 0`.
pub fn escort_to_ftrl(phi: &Escort, n: usize) -> Result<Regularizer> {
    phi.check_len(n)?;
    if n == 0 {
        return Err(Error::InvalidEscort("zero actions".into()));
    }
    let anchor = 1.0 / n as f64;
    let mut components: Vec<Arc<dyn ScalarRegularizer>> = Vec::with_capacity(n);
    for j in 0..n {
        let f = phi.function(j);
        for k in 1..100 {
            let x = k as f64 / 100.0;
            let v = f.eval(x);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidEscort(format!(
                    "φ_{j}({x}) = {v} is not positive"
                )));
            }
        }
        components.push(Arc::new(EscortPotential::new(f.clone(), anchor)));
    }
    Ok(Regularizer::SeparableCustom(SeparableRegularizer::new(
        components,
    )?))
}

/// `h` with `h'' = 1/φ`, anchored so that `h(a) = h'(a) = 0`.
#[derive(Debug, Clone)]
pub struct EscortPotential {
    phi: EscortFunction,
    anchor: f64,
}

impl EscortPotential {
    pub fn new(phi: EscortFunction, anchor: f64) -> Self {
        Self { phi, anchor }
    }

    /// `h'(x) = ∫_a^x ds/φ(s)` by quadrature, for any escort function.
    pub fn numeric_derivative(&self, x: f64) -> f64 {
        let phi = &self.phi;
        integrate(&|s| 1.0 / phi.eval(s), self.anchor, x)
    }

    /// `h(x) = ∫_a^x (x − s)/φ(s) ds`, the repeated antiderivative in one pass.
    pub fn numeric_value(&self, x: f64) -> f64 {
        let phi = &self.phi;
        integrate(&|s| (x - s) / phi.eval(s), self.anchor, x)
    }

    fn numeric_inverse(&self, y: f64) -> f64 {
        // h' is increasing on (0, 1]
        if y >= self.numeric_derivative(1.0) {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        if y <= self.numeric_derivative(1e-15) {
            return 0.0;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.numeric_derivative(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

impl ScalarRegularizer for EscortPotential {
    fn value(&self, x: f64) -> f64 {
        let a = self.anchor;
        let Some(k) = self.phi.exponent() else {
            return self.numeric_value(x);
        };
        if k == 1.0 {
            if x == 0.0 {
                a
            } else {
                x * (x / a).ln() - x + a
            }
        } else if k == 2.0 {
            if x == 0.0 {
                f64::INFINITY
            } else {
                (x - a) / a - (x / a).ln()
            }
        } else {
            if x == 0.0 && k > 2.0 {
                return f64::INFINITY;
            }
            let e = 2.0 - k;
            ((x.powf(e) - a.powf(e)) / e - a.powf(1.0 - k) * (x - a)) / (1.0 - k)
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        let a = self.anchor;
        match self.phi.exponent() {
            Some(1.0) => (x / a).ln(),
            Some(k) => (x.powf(1.0 - k) - a.powf(1.0 - k)) / (1.0 - k),
            None => self.numeric_derivative(x),
        }
    }

    fn derivative_inverse(&self, y: f64) -> f64 {
        let a = self.anchor;
        match self.phi.exponent() {
            Some(1.0) => a * y.exp(),
            Some(k) => {
                let base = (1.0 - k) * y + a.powf(1.0 - k);
                if base > 0.0 {
                    base.powf(1.0 / (1.0 - k))
                } else if k < 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            None => self.numeric_inverse(y),
        }
    }
}

/// Adaptive 5-point Gauss–Legendre quadrature; never samples the endpoints.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = gauss5(f, a, b);
    adapt(f, a, b, whole, 1e-13, 48)
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = gauss5(f, a, m);
    let right = gauss5(f, m, b);
    let sum = left + right;
    if depth == 0 || (sum - whole).abs() <= tol * sum.abs().max(1.0) {
        return sum;
    }
    adapt(f, a, m, left, tol, depth - 1) + adapt(f, m, b, right, tol, depth - 1)
}

fn gauss5(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const NODES: [f64; 5] = [
        0.0,
        0.538_469_310_105_683_1,
        -0.538_469_310_105_683_1,
        0.906_179_845_938_664,
        -0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    r * NODES
        .iter()
        .zip(WEIGHTS)
        .map(|(&t, w)| w * f(c + r * t))
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn replicator_escort_velocity() {
        let phi = Escort::uniform(EscortFunction::Identity);
        let v = escort_derivative(&phi, &[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert_eq!(v, vec![0.25, -0.25]);
        // replicator form x_j (p_j − ⟨x, p⟩)
        let x = [0.2, 0.3, 0.5];
        let p = [1.0, -2.0, 0.5];
        let v = escort_derivative(&phi, &x, &p).unwrap();
        let avg: f64 = x.iter().zip(&p).map(|(a, b)| a * b).sum();
        for j in 0..3 {
            assert_abs_diff_eq!(v[j], x[j] * (p[j] - avg), epsilon = 1e-15);
        }
    }

    #[test]
    fn projection_escort_velocity() {
        let phi = Escort::uniform(EscortFunction::Constant);
        let v = escort_derivative(&phi, &[0.3, 0.7], &[1.0, 0.0]).unwrap();
        assert_eq!(v, vec![0.5, -0.5]);
    }

    #[test]
    fn constant_payoff_freezes_escort() {
        for f in [
            EscortFunction::Identity,
            EscortFunction::Power(2.5),
            EscortFunction::Constant,
        ] {
            let v = escort_derivative(&Escort::uniform(f), &[0.1, 0.6, 0.3], &[0.7; 3]).unwrap();
            assert!(v.iter().all(|d| d.abs() < 1e-15));
        }
    }

    #[test]
    fn boundary_points_are_rejected() {
        let phi = Escort::uniform(EscortFunction::Identity);
        assert_eq!(
            escort_derivative(&phi, &[1.0, 0.0], &[1.0, 0.0]),
            Err(Error::BoundaryState {
                coordinate: 1,
                value: 0.0
            })
        );
    }

    #[test]
    fn family_names_parse() {
        assert_eq!(
            EscortFunction::parse("identity").unwrap(),
            EscortFunction::Identity
        );
        assert_eq!(
            EscortFunction::parse("power:2").unwrap(),
            EscortFunction::Power(2.0)
        );
        assert_eq!(
            EscortFunction::parse("power:1").unwrap(),
            EscortFunction::Identity
        );
        assert!(EscortFunction::parse("power:x").is_err());
        assert!(EscortFunction::parse("softmax").is_err());
    }

    #[test]
    fn identity_escort_gives_entropy_up_to_affine_terms() {
        let n = 3;
        let a = 1.0 / n as f64;
        let pot = EscortPotential::new(EscortFunction::Identity, a);
        // x log x differs from h by an affine function c0 + c1 x
        let c1 = 1.0 + a.ln();
        let c0 = -a;
        for k in 1..20 {
            let x = k as f64 / 20.0;
            assert_abs_diff_eq!(pot.value(x), x * x.ln() - c1 * x - c0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(pot.value(a), 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(pot.derivative(a), 0.0, epsilon = 1e-16);
    }

    #[test]
    fn constant_escort_gives_half_square() {
        let a = 0.5;
        let pot = EscortPotential::new(EscortFunction::Constant, a);
        for k in 0..=10 {
            let x = k as f64 / 10.0;
            assert_abs_diff_eq!(pot.value(x), 0.5 * (x - a) * (x - a), epsilon = 1e-15);
            assert_abs_diff_eq!(
                pot.derivative_inverse(pot.derivative(x)),
                x,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn square_escort_second_derivative_on_grid() {
        let a = 0.25;
        let pot = EscortPotential::new(EscortFunction::Power(2.0), a);
        let h = 1e-4;
        for k in 1..20 {
            let x = 0.05 + 0.9 * k as f64 / 20.0;
            let second = (pot.value(x + h) - 2.0 * pot.value(x) + pot.value(x - h)) / (h * h);
            assert_abs_diff_eq!(second, 1.0 / (x * x), epsilon = 1e-5 / (x * x));
            // h' = −1/x + const, const fixed by h'(a) = 0
            assert_abs_diff_eq!(pot.derivative(x), -1.0 / x + 1.0 / a, epsilon = 1e-12);
        }
    }

    #[test]
    fn closed_forms_match_quadrature() {
        for k in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
            let pot = EscortPotential::new(EscortFunction::Power(k), 1.0 / 3.0);
            for i in 1..10 {
                let x = i as f64 / 10.0;
                assert_abs_diff_eq!(
                    pot.derivative(x),
                    pot.numeric_derivative(x),
                    epsilon = 1e-10
                );
                assert_abs_diff_eq!(pot.value(x), pot.numeric_value(x), epsilon = 1e-10);
                let y = pot.derivative(x);
                assert_abs_diff_eq!(pot.derivative_inverse(y), x, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn custom_escort_uses_quadrature() {
        let custom = EscortPotential::new(EscortFunction::custom("x^2 custom", |x| x * x), 0.5);
        let closed = EscortPotential::new(EscortFunction::Power(2.0), 0.5);
        for i in 1..10 {
            let x = i as f64 / 10.0;
            assert_abs_diff_eq!(custom.value(x), closed.value(x), epsilon = 1e-10);
            assert_abs_diff_eq!(custom.derivative(x), closed.derivative(x), epsilon = 1e-10);
            assert_abs_diff_eq!(
                custom.derivative_inverse(closed.derivative(x)),
                x,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn escort_to_ftrl_rejects_non_positive_phi() {
        let bad = Escort::uniform(EscortFunction::custom("shifted", |x| x - 0.5));
        assert!(escort_to_ftrl(&bad, 2).is_err());
        let reg = escort_to_ftrl(&Escort::uniform(EscortFunction::Identity), 4).unwrap();
        assert_eq!(reg.action_count(), Some(4));
        reg.check_strict_convexity().unwrap();
    }
}
