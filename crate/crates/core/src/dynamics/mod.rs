//! Learning dynamics: conversion functions `f: q ↦ x`, their storage
//! functions, convex combinations and escort dynamics.
//!
//! A q-state dynamic (FTRL leaf or a combination of them) carries the
//! zero-shift storage `E(q) = h*(q)` whose gradient is the conversion map,
//! and the shifted storage `L(q) = h*(q) − ⟨q, x*⟩ + h(x*)` for `x* ∈ Δ`.
//! Combinations average both the maps and the storages with their weights.

pub mod config;
pub mod escort;
pub mod regularizer;

use std::sync::Arc;

pub use config::DynamicConfig;
pub use escort::{escort_derivative, escort_to_ftrl, Escort, EscortFunction, EscortPotential};
pub use regularizer::{
    log_sum_exp, project_simplex, softmax, FnScalarRegularizer, Regularizer, ScalarRegularizer,
    SeparableRegularizer,
};

use crate::error::{Error, Result};
use crate::game::{check_simplex, dot};
use crate::linalg;

/// Tolerance on `Σ α_ℓ = 1` for combination weights.
pub const WEIGHT_TOL: f64 = 1e-12;

/// A learning dynamic as a tree of FTRL leaves, escort leaves and convex combinations.
#[derive(Debug, Clone)]
pub enum DynamicSpec {
    Ftrl(Regularizer),
    Escort(Escort),
    Combination(Vec<(f64, DynamicSpec)>),
}

/// Reference point subtracted from the strategy output.
#[derive(Debug, Clone, PartialEq)]
pub enum Shift {
    Zero,
    Strategy(Vec<f64>),
}

impl Shift {
    pub fn unit(n: usize, j: usize) -> Self {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        Shift::Strategy(e)
    }

    /// Accepts the exact zero vector or a point of the simplex.
    pub fn from_vector(v: Vec<f64>) -> Result<Self> {
        if v.iter().all(|&x| x == 0.0) {
            return Ok(Shift::Zero);
        }
        check_simplex(0, &v).map_err(|e| Error::InvalidShift(e.to_string()))?;
        Ok(Shift::Strategy(v))
    }

    pub fn as_slice(&self) -> Option<&[f64]> {
        match self {
            Shift::Zero => None,
            Shift::Strategy(v) => Some(v),
        }
    }
}

/// A storage value with the shift it was evaluated against.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageValue {
    pub value: f64,
    pub shift: Shift,
}

/// Cumulative payoff state of one learning operator.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeState {
    pub q: Vec<f64>,
    pub q0: Vec<f64>,
}

impl CumulativeState {
    pub fn new(q0: Vec<f64>) -> Result<Self> {
        ensure_finite(&q0)?;
        Ok(Self { q: q0.clone(), q0 })
    }
}

fn ensure_finite(q: &[f64]) -> Result<()> {
    if q.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            what: "cumulative payoffs",
        })
    }
}

impl DynamicSpec {
    pub fn entropy() -> Self {
        DynamicSpec::Ftrl(Regularizer::Entropy)
    }

    pub fn half_l2() -> Self {
        DynamicSpec::Ftrl(Regularizer::HalfL2)
    }

    pub fn escort(f: EscortFunction) -> Self {
        DynamicSpec::Escort(Escort::uniform(f))
    }

    /// Convex combination; weights must be positive and sum to one.
    pub fn combination(children: Vec<(f64, DynamicSpec)>) -> Result<Self> {
        if children.is_empty() {
            return Err(Error::InvalidDynamic("empty combination".into()));
        }
        if let Some((w, _)) = children.iter().find(|(w, _)| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidDynamic(format!("weight {w} is not positive")));
        }
        let total: f64 = children.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidDynamic(format!("weights sum to {total}")));
        }
        let spec = DynamicSpec::Combination(children);
        spec.action_count()?;
        Ok(spec)
    }

    /// `α·RD + (1 − α)·OGD`.
    pub fn rd_ogd_mix(alpha: f64) -> Result<Self> {
        Self::combination(vec![
            (alpha, Self::entropy()),
            (1.0 - alpha, Self::half_l2()),
        ])
    }

    pub fn is_escort(&self) -> bool {
        matches!(self, DynamicSpec::Escort(_))
    }

    pub fn contains_escort(&self) -> bool {
        match self {
            DynamicSpec::Ftrl(_) => false,
            DynamicSpec::Escort(_) => true,
            DynamicSpec::Combination(c) => c.iter().any(|(_, d)| d.contains_escort()),
        }
    }

    /// Action count fixed by any leaf; errors when leaves disagree.
    pub fn action_count(&self) -> Result<Option<usize>> {
        match self {
            DynamicSpec::Ftrl(r) => Ok(r.action_count()),
            DynamicSpec::Escort(e) => Ok(e.action_count()),
            DynamicSpec::Combination(children) => {
                let mut n = None;
                for (_, c) in children {
                    match (n, c.action_count()?) {
                        (Some(a), Some(b)) if a != b => {
                            return Err(Error::InvalidDynamic(format!(
                                "combination mixes {a} and {b} actions"
                            )))
                        }
                        (None, Some(b)) => n = Some(b),
                        _ => {}
                    }
                }
                Ok(n)
            }
        }
    }

    /// Checks that the dynamic can run on `n` actions.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        match self.action_count()? {
            Some(k) if k != n => Err(Error::DimensionMismatch {
                agent: 0,
                expected: n,
                found: k,
            }),
            _ => Ok(()),
        }
    }

    /// The conversion function `f(q)`.
    pub fn convert(&self, q: &[f64]) -> Result<Vec<f64>> {
        ensure_finite(q)?;
        self.convert_unchecked(q)
    }

    fn convert_unchecked(&self, q: &[f64]) -> Result<Vec<f64>> {
        match self {
            DynamicSpec::Ftrl(r) => r.argmax(q),
            DynamicSpec::Escort(_) => Err(Error::EscortInConvert),
            DynamicSpec::Combination(children) => {
                let mut x = vec![0.0; q.len()];
                for (w, c) in children {
                    let xc = c.convert_unchecked(q)?;
                    x.iter_mut().zip(&xc).for_each(|(a, b)| *a += w * b);
                }
                Ok(x)
            }
        }
    }

    /// `∇E(q)`; identical to [`convert`](Self::convert) for every q-state dynamic.
    pub fn storage_gradient(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.convert(q)
    }

    /// Storage at `q` against `shift`.
    pub fn storage(&self, q: &[f64], shift: &Shift) -> Result<StorageValue> {
        Ok(StorageValue {
            value: self.storage_value(q, shift)?,
            shift: shift.clone(),
        })
    }

    pub fn storage_value(&self, q: &[f64], shift: &Shift) -> Result<f64> {
        ensure_finite(q)?;
        if let Shift::Strategy(s) = shift {
            if s.len() != q.len() {
                return Err(Error::InvalidShift(format!(
                    "shift has {} entries, state has {}",
                    s.len(),
                    q.len()
                )));
            }
        }
        self.storage_unchecked(q, shift)
    }

    fn storage_unchecked(&self, q: &[f64], shift: &Shift) -> Result<f64> {
        match self {
            DynamicSpec::Ftrl(r) => {
                let (h_star, _) = r.conjugate(q)?;
                Ok(match shift {
                    Shift::Zero => h_star,
                    Shift::Strategy(s) => h_star - dot(q, s) + r.value(s),
                })
            }
            DynamicSpec::Escort(_) => Err(Error::EscortInConvert),
            DynamicSpec::Combination(children) => {
                let mut total = 0.0;
                for (w, c) in children {
                    total += w * c.storage_unchecked(q, shift)?;
                }
                Ok(total)
            }
        }
    }

    /// Regret bound `max_j L^j(q)` from the storages at the unit shifts.
    pub fn regret_bound(&self, q: &[f64]) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for j in 0..q.len() {
            best = best.max(self.storage_value(q, &Shift::unit(q.len(), j))?);
        }
        Ok(best)
    }

    /// A cumulative payoff vector whose strategy output is `x`.
    ///
    /// Closed forms are used for single FTRL leaves (`log x` for entropy, `x`
    /// itself for the Euclidean projection, `h'(x)` for separable kinds).
    /// Combinations are inverted by minimizing the convex function
    /// `E(q) − ⟨x, q⟩` in reduced coordinates (last entry pinned to zero).
    pub fn initial_state_for(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_simplex(0, x)?;
        match self {
            DynamicSpec::Ftrl(Regularizer::Entropy) => {
                if let Some((coordinate, &value)) = x.iter().enumerate().find(|(_, v)| **v <= 0.0) {
                    return Err(Error::BoundaryState { coordinate, value });
                }
                Ok(x.iter().map(|v| v.ln()).collect())
            }
            DynamicSpec::Ftrl(Regularizer::HalfL2) => Ok(x.to_vec()),
            DynamicSpec::Ftrl(Regularizer::SeparableCustom(s)) => {
                if s.len() != x.len() {
                    return Err(Error::DimensionMismatch {
                        agent: 0,
                        expected: s.len(),
                        found: x.len(),
                    });
                }
                if let Some((coordinate, &value)) = x.iter().enumerate().find(|(_, v)| **v <= 0.0) {
                    return Err(Error::BoundaryState { coordinate, value });
                }
                Ok(x.iter()
                    .enumerate()
                    .map(|(j, &v)| s.component(j).derivative(v))
                    .collect())
            }
            DynamicSpec::Escort(_) => Err(Error::EscortInConvert),
            DynamicSpec::Combination(children) => {
                let mut candidates = Vec::new();
                for (w, c) in children {
                    if let Ok(q) = c.initial_state_for(x) {
                        candidates.push((*w, q));
                    }
                }
                for (_, q) in &candidates {
                    let fx = self.convert(q)?;
                    if max_abs_diff(&fx, x) <= 1e-13 {
                        return Ok(q.clone());
                    }
                }
                let mut start = vec![0.0; x.len()];
                let total: f64 = candidates.iter().map(|(w, _)| w).sum();
                for (w, q) in &candidates {
                    let pin = q[q.len() - 1];
                    start
                        .iter_mut()
                        .zip(q)
                        .for_each(|(s, v)| *s += w / total * (v - pin));
                }
                self.invert_by_newton(x, start)
            }
        }
    }

    fn invert_by_newton(&self, x: &[f64], mut q: Vec<f64>) -> Result<Vec<f64>> {
        let n = x.len();
        if n == 1 {
            return Ok(vec![0.0]);
        }
        let d = n - 1;
        let objective =
            |q: &[f64]| -> Result<f64> { Ok(self.storage_value(q, &Shift::Zero)? - dot(q, x)) };
        let mut phi = objective(&q)?;
        for _ in 0..200 {
            let fx = self.convert(&q)?;
            let grad: Vec<f64> = (0..d).map(|j| fx[j] - x[j]).collect();
            if max_abs_diff(&fx, x) <= 1e-13 {
                return Ok(q);
            }
            // Hessian of E restricted to the free coordinates = Jacobian of f
            let h = 1e-6;
            let mut jac = vec![0.0; d * d];
            for c in 0..d {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[c] += h;
                qm[c] -= h;
                let (fp, fm) = (self.convert(&qp)?, self.convert(&qm)?);
                for r in 0..d {
                    jac[r * d + c] = (fp[r] - fm[r]) / (2.0 * h);
                }
            }
            let step = linalg::solve(jac, grad.iter().map(|g| -g).collect())
                .unwrap_or_else(|| grad.iter().map(|g| -g).collect());
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = (0..n)
                    .map(|j| if j < d { q[j] + t * step[j] } else { q[j] })
                    .collect();
                let val = objective(&trial)?;
                if val <= phi {
                    q = trial;
                    phi = val;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let fx = self.convert(&q)?;
        if max_abs_diff(&fx, x) <= 1e-10 {
            Ok(q)
        } else {
            Err(Error::NoConvergence(format!(
                "no cumulative payoff maps to {x:?} (closest {fx:?})"
            )))
        }
    }

    /// Serializable form; `None` for custom callables.
    pub fn to_config(&self) -> Option<DynamicConfig> {
        DynamicConfig::from_spec(self)
    }

    /// Face pattern of every leaf's maximizer; see `Regularizer::active_set`.
    pub(crate) fn active_set(&self, q: &[f64], out: &mut Vec<u8>) -> Result<()> {
        match self {
            DynamicSpec::Ftrl(r) => r.active_set(q, out),
            DynamicSpec::Escort(_) => Ok(()),
            DynamicSpec::Combination(children) => {
                children.iter().try_for_each(|(_, c)| c.active_set(q, out))
            }
        }
    }

    /// Whether the conversion map can be non-smooth (a leaf that reaches the boundary).
    pub(crate) fn has_kinks(&self) -> bool {
        match self {
            DynamicSpec::Ftrl(Regularizer::Entropy) | DynamicSpec::Escort(_) => false,
            DynamicSpec::Ftrl(_) => true,
            DynamicSpec::Combination(children) => children.iter().any(|(_, c)| c.has_kinks()),
        }
    }

    /// Short human-readable description.
    pub fn describe(&self) -> String {
        match self {
            DynamicSpec::Ftrl(r) => format!("ftrl:{}", r.name()),
            DynamicSpec::Escort(e) => format!("escort:{}", e.describe()),
            DynamicSpec::Combination(c) => {
                let parts: Vec<String> = c
                    .iter()
                    .map(|(w, d)| format!("{w}*{}", d.describe()))
                    .collect();
                format!("({})", parts.join(" + "))
            }
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max)
}

/// Builds a separable dynamic from escort functions on `n` actions.
pub fn ftrl_from_escort(f: EscortFunction, n: usize) -> Result<DynamicSpec> {
    Ok(DynamicSpec::Ftrl(escort_to_ftrl(&Escort::uniform(f), n)?))
}

/// Convenience for user-supplied separable components.
pub fn separable(components: Vec<Arc<dyn ScalarRegularizer>>) -> Result<DynamicSpec> {
    let reg = Regularizer::SeparableCustom(SeparableRegularizer::new(components)?);
    reg.check_strict_convexity()?;
    Ok(DynamicSpec::Ftrl(reg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mix() -> DynamicSpec {
        DynamicSpec::rd_ogd_mix(0.5).unwrap()
    }

    /// `max_{x∈Δ²} ⟨q, x⟩ − h(x)` on a fine grid.
    fn grid_conjugate(h: impl Fn(&[f64]) -> f64, q: &[f64; 2]) -> f64 {
        (0..=100_000)
            .map(|k| {
                let a = k as f64 / 100_000.0;
                let x = [a, 1.0 - a];
                q[0] * x[0] + q[1] * x[1] - h(&x)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn example_conversions() {
        let q = [0.6, 0.0];
        let cases = [
            (DynamicSpec::entropy(), [0.6457, 0.3543]),
            (DynamicSpec::half_l2(), [0.8, 0.2]),
            (mix(), [0.7228, 0.2772]),
        ];
        for (d, want) in cases {
            let x = d.convert(&q).unwrap();
            assert_abs_diff_eq!(x[0], want[0], epsilon = 5e-5);
            assert_abs_diff_eq!(x[1], want[1], epsilon = 5e-5);
            assert_eq!(d.storage_gradient(&q).unwrap(), x);
        }
        assert_eq!(
            DynamicSpec::half_l2().convert(&[2.0, 0.0]).unwrap(),
            vec![1.0, 0.0]
        );
        let u = DynamicSpec::entropy().convert(&[0.0; 5]).unwrap();
        assert!(u.iter().all(|v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn convert_errors() {
        assert!(matches!(
            DynamicSpec::entropy().convert(&[f64::NAN, 0.0]),
            Err(Error::NonFinite { .. })
        ));
        let with_escort = DynamicSpec::Combination(vec![
            (0.5, DynamicSpec::entropy()),
            (0.5, DynamicSpec::escort(EscortFunction::Identity)),
        ]);
        assert_eq!(
            with_escort.convert(&[0.0, 0.0]),
            Err(Error::EscortInConvert)
        );
    }

    #[test]
    fn storage_examples_against_grid_oracle() {
        let ent = |x: &[f64]| {
            x.iter()
                .map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 })
                .sum::<f64>()
        };
        let l2 = |x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>();

        let oracle = grid_conjugate(ent, &[0.0, 0.0]);
        assert_abs_diff_eq!(oracle, 2f64.ln(), epsilon = 1e-9);
        let v = DynamicSpec::entropy()
            .storage_value(&[0.0, 0.0], &Shift::unit(2, 0))
            .unwrap();
        assert_abs_diff_eq!(v, 2f64.ln(), epsilon = 1e-15);

        // h*(0,0) for the half-square is −1/4 at the uniform point, so L vanishes there
        let oracle = grid_conjugate(l2, &[0.0, 0.0]);
        assert_abs_diff_eq!(oracle, -0.25, epsilon = 1e-12);
        let shift = Shift::from_vector(vec![0.5, 0.5]).unwrap();
        let v = DynamicSpec::half_l2()
            .storage_value(&[0.0, 0.0], &shift)
            .unwrap();
        assert_abs_diff_eq!(v, oracle - 0.0 + 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);

        for q in [[0.6, 0.0], [-1.3, 2.2], [4.0, 0.5]] {
            assert_abs_diff_eq!(
                DynamicSpec::entropy()
                    .storage_value(&q, &Shift::Zero)
                    .unwrap(),
                grid_conjugate(ent, &q),
                epsilon = 1e-8
            );
            assert_abs_diff_eq!(
                DynamicSpec::half_l2()
                    .storage_value(&q, &Shift::Zero)
                    .unwrap(),
                grid_conjugate(l2, &q),
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn storage_is_zero_at_its_own_output() {
        for d in [DynamicSpec::entropy(), DynamicSpec::half_l2()] {
            let q = [0.3, -0.8, 1.1];
            let x = d.convert(&q).unwrap();
            let v = d.storage_value(&q, &Shift::Strategy(x)).unwrap();
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn shift_validation() {
        assert_eq!(Shift::from_vector(vec![0.0, 0.0]).unwrap(), Shift::Zero);
        assert!(Shift::from_vector(vec![-0.5, 1.5]).is_err());
        assert!(Shift::from_vector(vec![0.3, 0.3]).is_err());
        assert!(DynamicSpec::entropy()
            .storage_value(&[0.0, 0.0], &Shift::unit(3, 0))
            .is_err());
    }

    #[test]
    fn combination_validation() {
        assert!(DynamicSpec::combination(vec![]).is_err());
        assert!(DynamicSpec::combination(vec![
            (0.5, DynamicSpec::entropy()),
            (0.4, DynamicSpec::half_l2())
        ])
        .is_err());
        assert!(DynamicSpec::combination(vec![
            (1.5, DynamicSpec::entropy()),
            (-0.5, DynamicSpec::half_l2())
        ])
        .is_err());
        let a = ftrl_from_escort(EscortFunction::Power(2.0), 2).unwrap();
        let b = ftrl_from_escort(EscortFunction::Power(2.0), 3).unwrap();
        assert!(DynamicSpec::combination(vec![(0.5, a), (0.5, b)]).is_err());
    }

    #[test]
    fn combination_storage_is_weighted_sum() {
        let d = DynamicSpec::rd_ogd_mix(0.3).unwrap();
        let q = [0.4, -0.2, 0.9];
        for shift in [
            Shift::Zero,
            Shift::unit(3, 1),
            Shift::Strategy(vec![0.2, 0.5, 0.3]),
        ] {
            let parts = 0.3 * DynamicSpec::entropy().storage_value(&q, &shift).unwrap()
                + 0.7 * DynamicSpec::half_l2().storage_value(&q, &shift).unwrap();
            assert_eq!(d.storage_value(&q, &shift).unwrap(), parts);
        }
    }

    #[test]
    fn initial_state_inverts_conversion() {
        let x = [0.5, 0.25, 0.25];
        for d in [
            DynamicSpec::entropy(),
            DynamicSpec::half_l2(),
            mix(),
            DynamicSpec::rd_ogd_mix(0.25).unwrap(),
            ftrl_from_escort(EscortFunction::Power(2.0), 3).unwrap(),
        ] {
            let q = d.initial_state_for(&x).unwrap();
            let back = d.convert(&q).unwrap();
            for (a, b) in back.iter().zip(x) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
            }
        }
        assert!(DynamicSpec::entropy()
            .initial_state_for(&[1.0, 0.0])
            .is_err());
        // the projection inverts at the boundary too
        assert_eq!(
            DynamicSpec::half_l2()
                .initial_state_for(&[1.0, 0.0])
                .unwrap(),
            vec![1.0, 0.0]
        );
    }

    #[test]
    fn regret_bound_of_uniform_entropy_start() {
        let b = DynamicSpec::entropy().regret_bound(&[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(b, 2f64.ln(), epsilon = 1e-15);
    }
}
