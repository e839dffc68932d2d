//! Divergence of the closed-loop field and volume transport of small simplices.

use crate::error::{Error, Result};
use crate::linalg::determinant;
use crate::simulation::{
    integrate_to_end, Coordinates, IntegratorConfig, Stage, SystemSpec, VectorField,
};

/// Central-difference step for divergence estimates.
pub const DIVERGENCE_STEP: f64 = 1e-5;

/// Central-difference estimate of `Σ_i ∂F_i/∂z_i` at `z`.
pub fn divergence_of<F: VectorField + ?Sized>(field: &F, z: &[f64], step: f64) -> Result<f64> {
    let dim = field.dim();
    if z.len() != dim {
        return Err(Error::DimensionMismatch {
            agent: 0,
            expected: dim,
            found: z.len(),
        });
    }
    let mut zp = z.to_vec();
    let mut fp = vec![0.0; dim];
    let mut fm = vec![0.0; dim];
    let mut div = 0.0;
    for i in 0..dim {
        zp[i] = z[i] + step;
        field.eval(Stage::at(0.0), &zp, &mut fp)?;
        zp[i] = z[i] - step;
        field.eval(Stage::at(0.0), &zp, &mut fm)?;
        zp[i] = z[i];
        div += (fp[i] - fm[i]) / (2.0 * step);
    }
    Ok(div)
}

/// `|Σ_{i,j} ∂p_ij/∂q_ij|` at the concatenated cumulative payoffs `q_hat`.
pub fn divergence_residual(system: &SystemSpec, q_hat: &[f64], step: f64) -> Result<f64> {
    require_cumulative(system)?;
    Ok(divergence_of(&system.field(Coordinates::Full), q_hat, step)?.abs())
}

fn require_cumulative(system: &SystemSpec) -> Result<()> {
    if system.all_cumulative() {
        Ok(())
    } else {
        Err(Error::Hypothesis(
            "volume analysis needs cumulative-payoff states for every agent".into(),
        ))
    }
}

/// Corners of a right-angled simplex: `center` plus `center + edge·e_k` for each axis.
pub fn simplex_cloud(center: &[f64], edge: f64) -> Vec<Vec<f64>> {
    let mut pts = vec![center.to_vec()];
    for k in 0..center.len() {
        let mut p = center.to_vec();
        p[k] += edge;
        pts.push(p);
    }
    pts
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeReport {
    pub initial: f64,
    pub final_volume: f64,
    /// `vol(T)/vol(0) − 1`; negative for contraction.
    pub relative_change: f64,
}

impl VolumeReport {
    /// `|vol(T)/vol(0) − 1|`.
    pub fn drift(&self) -> f64 {
        self.relative_change.abs()
    }
}

/// Transports the simplex spanned by `cloud` (reduced coordinates) to the
/// horizon and compares its volume.
pub fn volume_drift(
    system: &SystemSpec,
    cloud: &[Vec<f64>],
    cfg: &IntegratorConfig,
) -> Result<VolumeReport> {
    volume_drift_damped(system, cloud, cfg, 0.0)
}

/// As [`volume_drift`] with `−γ q̂′` added to the field, a dissipative control.
pub fn volume_drift_damped(
    system: &SystemSpec,
    cloud: &[Vec<f64>],
    cfg: &IntegratorConfig,
    gamma: f64,
) -> Result<VolumeReport> {
    require_cumulative(system)?;
    let field = system.field(Coordinates::Reduced).with_damping(gamma);
    let dim = field.state_dim();
    if cloud.len() != dim + 1 {
        return Err(Error::InvalidConfig(format!(
            "a simplex in dimension {dim} needs {} points, got {}",
            dim + 1,
            cloud.len()
        )));
    }
    if let Some(p) = cloud.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            agent: 0,
            expected: dim,
            found: p.len(),
        });
    }
    let initial = simplex_volume(cloud);
    if !(initial > 0.0) {
        return Err(Error::DegenerateSimplex(initial));
    }
    if cfg.horizon == 0.0 {
        return Ok(VolumeReport {
            initial,
            final_volume: initial,
            relative_change: 0.0,
        });
    }
    let moved = cloud
        .iter()
        .map(|p| integrate_to_end(&field, p, cfg))
        .collect::<Result<Vec<_>>>()?;
    let final_volume = simplex_volume(&moved);
    Ok(VolumeReport {
        initial,
        final_volume,
        relative_change: final_volume / initial - 1.0,
    })
}

/// `|det(p_k − p_0)|`; proportional to the simplex volume.
fn simplex_volume(points: &[Vec<f64>]) -> f64 {
    let dim = points[0].len();
    let mut m = Vec::with_capacity(dim * dim);
    for p in &points[1..] {
        m.extend(p.iter().zip(&points[0]).map(|(a, b)| a - b));
    }
    determinant(m, dim).abs()
}
