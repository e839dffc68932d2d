//! Scenario documents: parsing, span tracking and validation.
//!
//! A document is one scenario object, a batch `{"scenarios": [...]}`, or a
//! `manifest.json` written by an earlier run (its embedded `config` is re-run).

use std::fmt;
use std::ops::Deref;
use std::path::{Path, PathBuf};

use json_spanned_value::Spanned;
use lossless::dynamics::DynamicConfig;
use lossless::game::GameFile;
use lossless::simulation::{AgentInit, AgentSpec};
use lossless::{GameSpec, IntegratorConfig, MixedProfile, SystemSpec};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CliError;

/// A deserialized value that remembers the byte range it came from.
#[derive(Clone)]
pub struct Located<T>(Spanned<T>);

impl<T> Located<T> {
    pub fn new(value: T) -> Self {
        Self(Spanned::from(value))
    }

    pub fn start(&self) -> usize {
        self.0.start()
    }
}

impl<T> Deref for Located<T> {
    type Target = T;

    fn deref(&self) -> &T {
        self.0.get_ref()
    }
}

impl<T: fmt::Debug> fmt::Debug for Located<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.get_ref().fmt(f)
    }
}

impl<T: Serialize> Serialize for Located<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.get_ref().serialize(s)
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Located<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Spanned::deserialize(d).map(Located)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: Located<String>,
    pub game: Located<GameConfig>,
    pub agents: Vec<Located<AgentConfig>>,
    pub integrator: Located<IntegratorConfig>,
    /// Equilibrium used as the storage shift; defaults to the uniform profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Located<Vec<Vec<f64>>>>,
    #[serde(default)]
    pub checks: Vec<Located<CheckConfig>>,
    /// Output directory for this scenario's files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Exactly one of `builtin`, `file`, or an inline `action_counts`/`edges` pair.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<lossless::game::EdgeEntry>>,
    /// Widens the constant-sum test for matrices typed in as decimals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_sum_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub dynamic: DynamicConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckConfig {
    /// Relative drift of the summed storage at the reference equilibrium.
    Energy {
        #[serde(default = "default_energy_tol")]
        tolerance: f64,
    },
    /// `sup_t R_i(t) ≤ max_j L_i^j(q⁰) + tolerance` for every agent.
    Regret {
        #[serde(default = "default_regret_tol")]
        tolerance: f64,
    },
    /// At least `min_returns` strict distance minima below `epsilon`.
    Recurrence {
        epsilon: f64,
        #[serde(default = "default_min_returns")]
        min_returns: usize,
        #[serde(default = "default_dead_time")]
        dead_time: f64,
    },
    /// Divergence of the closed-loop field at random points and along the orbit.
    Divergence {
        #[serde(default = "default_divergence_tol")]
        tolerance: f64,
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Relative volume change of a small simplex in reduced coordinates.
    Volume {
        #[serde(default = "default_volume_tol")]
        tolerance: f64,
        #[serde(default = "default_edge")]
        edge: f64,
        /// Defaults to the reduced initial state.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
}

fn default_energy_tol() -> f64 {
    1e-3
}
fn default_regret_tol() -> f64 {
    1e-4
}
fn default_min_returns() -> usize {
    1
}
fn default_dead_time() -> f64 {
    lossless::analysis::DEAD_TIME
}
fn default_divergence_tol() -> f64 {
    1e-8
}
fn default_points() -> usize {
    100
}
fn default_volume_tol() -> f64 {
    1e-2
}
fn default_edge() -> f64 {
    1e-3
}

impl CheckConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CheckConfig::Energy { .. } => "energy",
            CheckConfig::Regret { .. } => "regret",
            CheckConfig::Recurrence { .. } => "recurrence",
            CheckConfig::Divergence { .. } => "divergence",
            CheckConfig::Volume { .. } => "volume",
        }
    }

    /// The same check with its pass threshold multiplied by `scale`; a missing seed is filled in.
    pub fn resolved(&self, scale: f64, seed: u64) -> Self {
        let mut c = self.clone();
        match &mut c {
            CheckConfig::Energy { tolerance }
            | CheckConfig::Regret { tolerance }
            | CheckConfig::Volume { tolerance, .. } => *tolerance *= scale,
            CheckConfig::Recurrence { epsilon, .. } => *epsilon *= scale,
            CheckConfig::Divergence {
                tolerance, seed: s, ..
            } => {
                *tolerance *= scale;
                s.get_or_insert(seed);
            }
        }
        c
    }

    fn threshold(&self) -> f64 {
        match self {
            CheckConfig::Energy { tolerance }
            | CheckConfig::Regret { tolerance }
            | CheckConfig::Divergence { tolerance, .. }
            | CheckConfig::Volume { tolerance, .. } => *tolerance,
            CheckConfig::Recurrence { epsilon, .. } => *epsilon,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Batch {
    scenarios: Vec<ScenarioConfig>,
}

#[derive(Deserialize)]
struct ManifestConfig {
    config: ScenarioConfig,
}

/// A parsed document and the text its spans point into.
pub struct Document {
    pub path: PathBuf,
    pub text: String,
    pub scenarios: Vec<ScenarioConfig>,
}

impl Document {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let scenarios = parse_scenarios(&text).map_err(|e| CliError::from_json(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            text,
            scenarios,
        })
    }

    /// A document built in memory; errors are reported at line 1.
    pub fn in_memory(label: &str, scenarios: Vec<ScenarioConfig>) -> Self {
        Self {
            path: PathBuf::from(label),
            text: String::new(),
            scenarios,
        }
    }

    /// A validation error anchored at byte offset `at`.
    pub fn error_at(&self, at: usize, message: impl Into<String>) -> CliError {
        let (line, column) = line_column(&self.text, at);
        CliError::Config {
            path: self.path.clone(),
            line,
            column,
            message: message.into(),
        }
    }

    fn base_dir(&self) -> &Path {
        self.path.parent().unwrap_or(Path::new("."))
    }
}

fn parse_scenarios(text: &str) -> serde_json::Result<Vec<ScenarioConfig>> {
    // peek at the top-level keys to pick the document shape
    let top: serde_json::Value = serde_json::from_str(text)?;
    let has = |k: &str| top.get(k).is_some();
    if has("scenarios") {
        Ok(json_spanned_value::from_str::<Batch>(text)?.scenarios)
    } else if has("config") && has("config_sha256") {
        Ok(vec![
            json_spanned_value::from_str::<ManifestConfig>(text)?.config,
        ])
    } else {
        Ok(vec![json_spanned_value::from_str::<ScenarioConfig>(text)?])
    }
}

fn line_column(text: &str, at: usize) -> (usize, usize) {
    let before = &text[..at.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// A scenario ready to run: the system is built and every check's hypotheses hold.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub system: SystemSpec,
    pub reference: MixedProfile,
    pub integrator: IntegratorConfig,
    pub checks: Vec<CheckConfig>,
    pub output: Option<PathBuf>,
    /// The scenario with files inlined, defaults filled and tolerances scaled.
    pub resolved: ScenarioConfig,
}

pub fn validate(
    doc: &Document,
    tolerance_scale: f64,
    seed: u64,
) -> Result<Vec<Scenario>, CliError> {
    let mut out: Vec<Scenario> = Vec::with_capacity(doc.scenarios.len());
    if doc.scenarios.is_empty() {
        return Err(doc.error_at(0, "document holds no scenarios"));
    }
    for sc in &doc.scenarios {
        let s = validate_one(doc, sc, tolerance_scale, seed)?;
        if out.iter().any(|o| o.name == s.name) {
            return Err(doc.error_at(
                sc.name.start(),
                format!("duplicate scenario name `{}`", s.name),
            ));
        }
        out.push(s);
    }
    Ok(out)
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn validate_one(
    doc: &Document,
    sc: &ScenarioConfig,
    scale: f64,
    seed: u64,
) -> Result<Scenario, CliError> {
    if !valid_name(&sc.name) {
        return Err(doc.error_at(
            sc.name.start(),
            format!(
                "scenario name `{}` must use only letters, digits, `_`, `-` and `.`",
                *sc.name
            ),
        ));
    }
    let (game, game_file) = load_game(doc, &sc.game)?;
    let counts = game.action_counts().to_vec();
    if sc.agents.len() != counts.len() {
        return Err(doc.error_at(
            sc.game.start(),
            format!(
                "game has {} agents, config lists {}",
                counts.len(),
                sc.agents.len()
            ),
        ));
    }
    let mut specs = Vec::with_capacity(sc.agents.len());
    for (i, a) in sc.agents.iter().enumerate() {
        let at = |m: String| doc.error_at(a.start(), format!("agent {i}: {m}"));
        let dynamic = a.dynamic.build(counts[i]).map_err(|e| at(e.to_string()))?;
        let init = match (&a.x0, &a.q0) {
            (Some(x), None) => AgentInit::Strategy(x.clone()),
            (None, Some(q)) => AgentInit::Cumulative(q.clone()),
            _ => return Err(at("give exactly one of `x0` and `q0`".into())),
        };
        specs.push(AgentSpec::new(dynamic, init));
    }
    let system = SystemSpec::new(game.clone(), specs).map_err(|e| {
        let agent = match &e {
            lossless::Error::DimensionMismatch { agent, .. }
            | lossless::Error::InvalidProfile { agent, .. } => *agent,
            _ => 0,
        };
        doc.error_at(
            sc.agents[agent.min(sc.agents.len() - 1)].start(),
            e.to_string(),
        )
    })?;
    sc.integrator
        .validate()
        .map_err(|e| doc.error_at(sc.integrator.start(), e.to_string()))?;
    let reference = match &sc.reference {
        Some(r) => {
            MixedProfile::new((**r).clone()).map_err(|e| doc.error_at(r.start(), e.to_string()))?
        }
        None => MixedProfile::uniform(&counts),
    };
    let ref_at = sc.reference.as_ref().map(|r| r.start());

    let mut checks = Vec::with_capacity(sc.checks.len());
    for c in &sc.checks {
        let resolved = c.resolved(scale, seed);
        let err = |m: String| doc.error_at(c.start(), format!("{} check: {m}", c.name()));
        if !(resolved.threshold() > 0.0) || !resolved.threshold().is_finite() {
            return Err(err(format!(
                "threshold must be positive, got {}",
                resolved.threshold()
            )));
        }
        match &resolved {
            CheckConfig::Energy { .. } => {
                if !game.validate_constant_sum().holds() {
                    return Err(err("the game is not constant-sum".into()));
                }
                let v = game
                    .verify_nash(&reference, lossless::analysis::NASH_TOL)
                    .map_err(|e| err(e.to_string()))?;
                if !v.is_nash || !v.is_fully_mixed {
                    let msg = "the reference profile is not a fully-mixed Nash equilibrium";
                    return Err(match ref_at {
                        Some(at) => doc.error_at(at, msg),
                        None => err(format!("{msg}; set `reference`")),
                    });
                }
                require_cumulative(&system).map_err(err)?;
            }
            CheckConfig::Regret { .. } | CheckConfig::Divergence { .. } => {
                require_cumulative(&system).map_err(err)?;
            }
            CheckConfig::Recurrence {
                min_returns,
                dead_time,
                ..
            } => {
                if *min_returns == 0 || !(*dead_time >= 0.0) {
                    return Err(err("`min_returns` must be ≥ 1 and `dead_time` ≥ 0".into()));
                }
            }
            CheckConfig::Volume { edge, center, .. } => {
                require_cumulative(&system).map_err(err)?;
                let dim: usize = counts.iter().map(|n| n - 1).sum();
                if !(*edge > 0.0) {
                    return Err(err("`edge` must be positive".into()));
                }
                if let Some(c) = center {
                    if c.len() != dim {
                        return Err(err(format!(
                            "`center` needs {dim} reduced coordinates, got {}",
                            c.len()
                        )));
                    }
                }
            }
        }
        checks.push(resolved);
    }

    let mut game_cfg = GameConfig {
        action_counts: Some(game_file.action_counts),
        edges: Some(game_file.edges),
        constant_sum_tolerance: sc.game.constant_sum_tolerance,
        ..GameConfig::default()
    };
    if sc.game.builtin.is_some() {
        // builtins stay symbolic so manifests read naturally
        game_cfg = (*sc.game).clone();
    }
    let resolved = ScenarioConfig {
        name: sc.name.clone(),
        game: Located::new(game_cfg),
        agents: sc.agents.clone(),
        integrator: sc.integrator.clone(),
        reference: sc.reference.clone(),
        checks: checks.iter().cloned().map(Located::new).collect(),
        output: None,
    };
    Ok(Scenario {
        name: sc.name.to_string(),
        system,
        reference,
        integrator: *sc.integrator,
        checks,
        output: sc.output.clone(),
        resolved,
    })
}

fn require_cumulative(system: &SystemSpec) -> Result<(), String> {
    if system.all_cumulative() {
        Ok(())
    } else {
        Err("escort agents have no cumulative-payoff state".into())
    }
}

fn builtin_game(name: &str) -> Option<GameSpec> {
    match name {
        "rock_paper_scissors" => Some(GameSpec::rock_paper_scissors()),
        "cyclic_matching_pennies" => Some(GameSpec::cyclic_matching_pennies()),
        _ => None,
    }
}

fn load_game(doc: &Document, g: &Located<GameConfig>) -> Result<(GameSpec, GameFile), CliError> {
    let err = |m: String| doc.error_at(g.start(), format!("game: {m}"));
    let kinds = [
        g.builtin.is_some(),
        g.file.is_some(),
        g.action_counts.is_some() || g.edges.is_some(),
    ];
    if kinds.iter().filter(|k| **k).count() != 1 {
        return Err(err(
            "give exactly one of `builtin`, `file`, or inline `action_counts`/`edges`".into(),
        ));
    }
    let game = if let Some(name) = &g.builtin {
        builtin_game(name).ok_or_else(|| {
            err(format!(
                "unknown builtin `{name}` (expected `rock_paper_scissors` or `cyclic_matching_pennies`)"
            ))
        })?
    } else if let Some(file) = &g.file {
        let path = doc.base_dir().join(file);
        let text =
            std::fs::read_to_string(&path).map_err(|e| err(format!("{}: {e}", path.display())))?;
        let parsed: GameFile =
            serde_json::from_str(&text).map_err(|e| CliError::from_json(&path, e))?;
        GameSpec::try_from(parsed).map_err(|e| err(format!("{}: {e}", path.display())))?
    } else {
        let counts = g
            .action_counts
            .clone()
            .ok_or_else(|| err("inline games need `action_counts`".into()))?;
        let file = GameFile {
            action_counts: counts,
            edges: g.edges.clone().unwrap_or_default(),
        };
        GameSpec::try_from(file).map_err(|e| err(e.to_string()))?
    };
    let game = match g.constant_sum_tolerance {
        Some(t) if !(t >= 0.0) => {
            return Err(err("`constant_sum_tolerance` must be non-negative".into()))
        }
        Some(t) => game.with_constant_sum_tolerance(t),
        None => game,
    };
    let file = GameFile::from(&game);
    Ok((game, file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> Result<Vec<Scenario>, CliError> {
        let scenarios =
            parse_scenarios(text).map_err(|e| CliError::from_json(Path::new("t.json"), e))?;
        let d = Document {
            path: "t.json".into(),
            text: text.into(),
            scenarios,
        };
        validate(&d, 1.0, 0)
    }

    const GOOD: &str = r#"{
  "name": "rps",
  "game": {"builtin": "rock_paper_scissors"},
  "agents": [
    {"dynamic": {"ftrl": "entropy"}, "x0": [0.5, 0.25, 0.25]},
    {"dynamic": {"ftrl": "entropy"}, "x0": [0.6, 0.3, 0.1]}
  ],
  "integrator": {"dt": 0.01, "horizon": 1.0},
  "checks": [{"kind": "energy"}, {"kind": "recurrence", "epsilon": 0.01}]
}"#;

    #[test]
    fn parses_and_fills_defaults() {
        let s = doc(GOOD).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].checks[0], CheckConfig::Energy { tolerance: 1e-3 });
        let json = serde_json::to_string(&s[0].resolved).unwrap();
        assert!(json.contains("\"tolerance\":0.001"));
    }

    #[test]
    fn semantic_errors_point_at_the_agent_line() {
        let bad = GOOD.replace("[0.6, 0.3, 0.1]", "[0.6, 0.4]");
        let e = doc(&bad).unwrap_err().to_string();
        assert!(e.starts_with("t.json:6:5:"), "{e}");
    }

    #[test]
    fn unknown_check_is_a_parse_error_with_line() {
        let bad = GOOD.replace("\"energy\"", "\"energie\"");
        let e = doc(&bad).unwrap_err().to_string();
        assert!(e.starts_with("t.json:9:"), "{e}");
        assert!(e.contains("energie"), "{e}");
    }

    #[test]
    fn both_initial_styles_rejected() {
        let bad = GOOD.replace(
            "\"x0\": [0.5, 0.25, 0.25]",
            "\"x0\": [0.5, 0.25, 0.25], \"q0\": [0, 0, 0]",
        );
        let e = doc(&bad).unwrap_err().to_string();
        assert!(e.contains("exactly one of `x0` and `q0`"), "{e}");
    }

    #[test]
    fn energy_needs_an_equilibrium_reference() {
        let bad = GOOD.replace(
            "\"checks\"",
            "\"reference\": [[1, 0, 0], [0, 1, 0]],\n  \"checks\"",
        );
        let e = doc(&bad).unwrap_err().to_string();
        assert!(e.starts_with("t.json:9:16:"), "{e}");
    }

    #[test]
    fn tolerance_scale_applies_to_every_threshold() {
        let c = CheckConfig::Recurrence {
            epsilon: 1e-2,
            min_returns: 2,
            dead_time: 1.0,
        };
        assert_eq!(c.resolved(0.5, 0).threshold(), 5e-3);
        let d = CheckConfig::Divergence {
            tolerance: 1e-8,
            points: 3,
            seed: None,
        };
        assert!(matches!(
            d.resolved(1.0, 7),
            CheckConfig::Divergence { seed: Some(7), .. }
        ));
    }

    #[test]
    fn line_column_counts_from_one() {
        assert_eq!(line_column("ab\ncd", 4), (2, 2));
        assert_eq!(line_column("", 0), (1, 1));
    }
}
