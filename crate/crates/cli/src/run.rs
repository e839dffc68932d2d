//! Executes validated scenarios and writes their artifacts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use lossless::analysis::{
    check_constant_of_motion, divergence_residual, recurrence_report_with, regret_report,
    simplex_cloud, volume_drift, CertificationReport, DIVERGENCE_STEP,
};
use lossless::simulation::Coordinates;
use lossless::{simulate, DynamicSpec, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{CheckConfig, Scenario};
use crate::CliError;

/// Half-width of the box the random divergence probes are drawn from.
const PROBE_RADIUS: f64 = 3.0;

pub struct RunSettings {
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub tolerance_scale: f64,
}

pub struct Outcome {
    pub name: String,
    pub dir: PathBuf,
    pub reports: Vec<CertificationReport>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed())
    }
}

#[derive(Serialize)]
struct ReportFile<'a> {
    scenario: &'a str,
    verdict: lossless::analysis::Verdict,
    boundary_hit: bool,
    checks: &'a [CertificationReport],
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    scenario: &'a str,
    config_sha256: String,
    wall_time_seconds: f64,
    seed: u64,
    tolerance_scale: f64,
    config: &'a crate::config::ScenarioConfig,
}

/// Runs every scenario on its own thread; results keep the input order.
pub fn run_all(scenarios: &[Scenario], settings: &RunSettings) -> Vec<Result<Outcome, CliError>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|sc| s.spawn(move || run_one(sc, settings)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    })
}

fn output_dir(sc: &Scenario, settings: &RunSettings) -> PathBuf {
    match (&settings.out, &sc.output) {
        (Some(root), _) => root.join(&sc.name),
        (None, Some(dir)) => dir.clone(),
        (None, None) => Path::new("runs").join(&sc.name),
    }
}

fn run_one(sc: &Scenario, settings: &RunSettings) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let dir = output_dir(sc, settings);
    let fail = |e: lossless::Error| CliError::Run {
        scenario: sc.name.clone(),
        source: e,
    };
    let traj = simulate(&sc.system, &sc.integrator).map_err(fail)?;
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    write_with(&dir.join("trajectory.csv"), |w| traj.write_csv(w))?;

    let mut reports = Vec::with_capacity(sc.checks.len());
    for check in &sc.checks {
        reports.push(certify(sc, check, &traj, &dir).map_err(fail)?);
    }
    let passed = reports.iter().all(|r| r.passed());
    let report = ReportFile {
        scenario: &sc.name,
        verdict: lossless::analysis::Verdict::from_pass(passed),
        boundary_hit: traj.boundary_hit(),
        checks: &reports,
    };
    write_json(&dir.join("report.json"), &report)?;

    let config_json = serde_json::to_vec(&sc.resolved).expect("config serializes");
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        scenario: &sc.name,
        config_sha256: format!("{:x}", Sha256::digest(&config_json)),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        seed: settings.seed,
        tolerance_scale: settings.tolerance_scale,
        config: &sc.resolved,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(Outcome {
        name: sc.name.clone(),
        dir,
        reports,
    })
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn dynamics(sc: &Scenario) -> Vec<&DynamicSpec> {
    sc.system
        .agents()
        .iter()
        .filter_map(|a| a.dynamic())
        .collect()
}

fn certify(
    sc: &Scenario,
    check: &CheckConfig,
    traj: &Trajectory,
    dir: &Path,
) -> lossless::Result<CertificationReport> {
    let (dt, horizon) = (sc.integrator.dt, sc.integrator.horizon);
    let report = |residual: f64, tol: f64, pass: bool| {
        CertificationReport::new(check.name(), &sc.name, residual, tol, pass, dt, horizon)
    };
    Ok(match check {
        CheckConfig::Energy { tolerance } => {
            let d = check_constant_of_motion(traj, &sc.system, &sc.reference, *tolerance)?;
            report(d.relative_drift, *tolerance, d.conserved).with_detail(format!(
                "relative drift of the summed storage; max |H(t) - H(0)| = {:e}",
                d.max_abs_drift
            ))
        }
        CheckConfig::Regret { tolerance } => {
            let r = regret_report(traj, &dynamics(sc), *tolerance)?;
            let excess = -r.min_slack();
            let bounds: Vec<String> = r
                .agents
                .iter()
                .map(|a| format!("sup {:.6e} / bound {:.6e}", a.sup, a.bound))
                .collect();
            report(excess, *tolerance, r.within_bound).with_detail(format!(
                "largest excess of sup regret over its bound; {}",
                bounds.join("; ")
            ))
        }
        CheckConfig::Recurrence {
            epsilon,
            min_returns,
            dead_time,
        } => {
            let r = recurrence_report_with(traj, *epsilon, *dead_time)?;
            write_with(&dir.join("distance.csv"), |w| {
                writeln!(w, "t,distance")?;
                for (t, d) in traj.times().iter().zip(&r.distances) {
                    writeln!(w, "{t:.16e},{d:.16e}")?;
                }
                Ok(())
            })
            .map_err(|e| lossless::Error::InvalidSystem(e.to_string()))?;
            // the depth of the min_returns-th deepest return, or the closest approach
            let all = recurrence_report_with(traj, f64::INFINITY, *dead_time)?;
            let mut depths: Vec<f64> = all.events.iter().map(|e| e.distance).collect();
            depths.sort_by(f64::total_cmp);
            let residual = depths
                .get(min_returns - 1)
                .copied()
                .unwrap_or(r.min_distance);
            let pass = !r.degenerate && r.returns() >= *min_returns;
            let mut detail = format!(
                "{} returns below epsilon (need {min_returns}); closest approach {:e}",
                r.returns(),
                r.min_distance
            );
            if r.degenerate {
                detail.push_str("; trajectory is stationary");
            }
            report(residual, *epsilon, pass)
                .with_detail(detail)
                .with_events(r.events)
        }
        CheckConfig::Divergence {
            tolerance,
            points,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
            let dim = traj.total_actions();
            let mut worst = 0.0f64;
            for _ in 0..*points {
                let q: Vec<f64> = (0..dim)
                    .map(|_| rng.gen_range(-PROBE_RADIUS..PROBE_RADIUS))
                    .collect();
                worst = worst.max(divergence_residual(&sc.system, &q, DIVERGENCE_STEP)?);
            }
            let stride = (traj.len() / (*points).max(1)).max(1);
            for k in (0..traj.len()).step_by(stride) {
                worst = worst.max(divergence_residual(
                    &sc.system,
                    traj.state(k),
                    DIVERGENCE_STEP,
                )?);
            }
            report(worst, *tolerance, worst < *tolerance).with_detail(format!(
                "max |div| over {points} random points and every {stride}-th sample"
            ))
        }
        CheckConfig::Volume {
            tolerance,
            edge,
            center,
        } => {
            let center = center
                .clone()
                .unwrap_or_else(|| sc.system.initial_state(Coordinates::Reduced));
            let v = volume_drift(&sc.system, &simplex_cloud(&center, *edge), &sc.integrator)?;
            report(v.drift(), *tolerance, v.drift() < *tolerance).with_detail(format!(
                "relative volume change of a simplex with edge {edge:e}: {:e} -> {:e}",
                v.initial, v.final_volume
            ))
        }
    })
}
