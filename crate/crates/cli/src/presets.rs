//! Built-in scenarios reproducing the recurrence figures.

use lossless::dynamics::DynamicConfig;
use lossless::IntegratorConfig;

use crate::config::{AgentConfig, CheckConfig, GameConfig, Located, ScenarioConfig};

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_HORIZON: f64 = 500.0;

pub struct Preset {
    pub name: &'static str,
    pub figure: &'static str,
    pub description: &'static str,
    build: fn(&IntegratorConfig) -> Vec<ScenarioConfig>,
}

impl Preset {
    pub fn scenarios(&self, integrator: &IntegratorConfig) -> Vec<ScenarioConfig> {
        (self.build)(integrator)
    }
}

pub const CATALOG: &[Preset] = &[
    Preset {
        name: "fig3_mix",
        figure: "figure 3",
        description:
            "cyclic matching pennies from (0.9, 0.88, 0.4) under RD, OGD and the half-half mix",
        build: fig3_mix,
    },
    Preset {
        name: "fig4_rd",
        figure: "figure 4, top",
        description: "RD/RD in rock-paper-scissors, distance to the start",
        build: fig4_rd,
    },
    Preset {
        name: "fig4_ogd",
        figure: "figure 4, bottom",
        description: "OGD/OGD in rock-paper-scissors, distance to the start",
        build: fig4_ogd,
    },
    Preset {
        name: "fig5_alpha",
        figure: "figure 5",
        description: "alpha*RD + (1-alpha)*OGD in rock-paper-scissors for alpha = 1/4, 1/2, 3/4",
        build: fig5_alpha,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    CATALOG.iter().find(|p| p.name == name)
}

const RPS_START: [&[f64]; 2] = [&[0.5, 0.25, 0.25], &[0.6, 0.3, 0.1]];
const CMP_START: [&[f64]; 3] = [&[0.9, 0.1], &[0.88, 0.12], &[0.4, 0.6]];

fn mix(alpha: f64) -> DynamicConfig {
    let mut rd = DynamicConfig::ftrl("entropy");
    rd.w = Some(alpha);
    let mut ogd = DynamicConfig::ftrl("half_l2");
    ogd.w = Some(1.0 - alpha);
    DynamicConfig {
        w: None,
        ftrl: None,
        escort: None,
        combine: Some(vec![rd, ogd]),
    }
}

fn scenario(
    name: String,
    builtin: &str,
    start: &[&[f64]],
    dynamic: DynamicConfig,
    integrator: &IntegratorConfig,
    epsilon: f64,
    min_returns: usize,
) -> ScenarioConfig {
    ScenarioConfig {
        name: Located::new(name),
        game: Located::new(GameConfig {
            builtin: Some(builtin.into()),
            ..GameConfig::default()
        }),
        agents: start
            .iter()
            .map(|x| {
                Located::new(AgentConfig {
                    dynamic: dynamic.clone(),
                    x0: Some(x.to_vec()),
                    q0: None,
                })
            })
            .collect(),
        integrator: Located::new(*integrator),
        reference: None,
        checks: vec![
            Located::new(CheckConfig::Energy { tolerance: 1e-3 }),
            Located::new(CheckConfig::Recurrence {
                epsilon,
                min_returns,
                dead_time: lossless::analysis::DEAD_TIME,
            }),
        ],
        output: None,
    }
}

fn fig3_mix(cfg: &IntegratorConfig) -> Vec<ScenarioConfig> {
    [
        ("rd", DynamicConfig::ftrl("entropy")),
        ("ogd", DynamicConfig::ftrl("half_l2")),
        ("half", mix(0.5)),
    ]
    .into_iter()
    .map(|(tag, d)| {
        scenario(
            format!("fig3_mix_{tag}"),
            "cyclic_matching_pennies",
            &CMP_START,
            d,
            cfg,
            1e-2,
            1,
        )
    })
    .collect()
}

fn fig4_rd(cfg: &IntegratorConfig) -> Vec<ScenarioConfig> {
    let d = DynamicConfig::ftrl("entropy");
    vec![scenario(
        "fig4_rd".into(),
        "rock_paper_scissors",
        &RPS_START,
        d,
        cfg,
        1e-3,
        2,
    )]
}

fn fig4_ogd(cfg: &IntegratorConfig) -> Vec<ScenarioConfig> {
    let d = DynamicConfig::ftrl("half_l2");
    vec![scenario(
        "fig4_ogd".into(),
        "rock_paper_scissors",
        &RPS_START,
        d,
        cfg,
        1e-3,
        2,
    )]
}

fn fig5_alpha(cfg: &IntegratorConfig) -> Vec<ScenarioConfig> {
    [0.25, 0.5, 0.75]
        .into_iter()
        .map(|a| {
            scenario(
                format!("fig5_alpha_{a}"),
                "rock_paper_scissors",
                &RPS_START,
                mix(a),
                cfg,
                1e-2,
                2,
            )
        })
        .collect()
}
