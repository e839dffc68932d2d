//! JSON form of a [`DynamicSpec`] tree.
//!
//! ```json
//! {"combine": [{"w": 0.5, "ftrl": "entropy"}, {"w": 0.5, "ftrl": "half_l2"}]}
//! ```
//!
//! FTRL leaves name `entropy`, `half_l2`, or `escort:<family>` (the separable
//! regularizer equivalent to that escort family). Escort leaves name a family:
//! `identity`, `constant` or `power:k`, or a list with one family per action.

use serde::{Deserialize, Serialize};

use super::{escort_to_ftrl, DynamicSpec, Escort, EscortFunction, Regularizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicConfig {
    /// Weight inside a parent `combine`; forbidden at the root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ftrl: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escort: Option<EscortConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combine: Option<Vec<DynamicConfig>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EscortConfig {
    Shared(String),
    PerAction(Vec<String>),
}

impl DynamicConfig {
    pub fn ftrl(name: &str) -> Self {
        Self {
            w: None,
            ftrl: Some(name.into()),
            escort: None,
            combine: None,
        }
    }

    /// Resolves the tree for an agent with `n` actions.
    pub fn build(&self, n: usize) -> Result<DynamicSpec> {
        if self.w.is_some() {
            return Err(Error::InvalidDynamic(
                "`w` is only allowed inside `combine`".into(),
            ));
        }
        self.build_node(n)
    }

    fn build_node(&self, n: usize) -> Result<DynamicSpec> {
        let kinds = [
            self.ftrl.is_some(),
            self.escort.is_some(),
            self.combine.is_some(),
        ];
        if kinds.iter().filter(|k| **k).count() != 1 {
            return Err(Error::InvalidDynamic(
                "each node needs exactly one of `ftrl`, `escort`, `combine`".into(),
            ));
        }
        if let Some(name) = &self.ftrl {
            return Ok(DynamicSpec::Ftrl(match name.as_str() {
                "entropy" => Regularizer::Entropy,
                "half_l2" => Regularizer::HalfL2,
                other => {
                    let family = other.strip_prefix("escort:").ok_or_else(|| {
                        Error::InvalidDynamic(format!("unknown regularizer `{other}`"))
                    })?;
                    escort_to_ftrl(&Escort::uniform(EscortFunction::parse(family)?), n)?
                }
            }));
        }
        if let Some(e) = &self.escort {
            let escort = match e {
                EscortConfig::Shared(s) => Escort::uniform(EscortFunction::parse(s)?),
                EscortConfig::PerAction(v) => Escort::per_action(
                    v.iter()
                        .map(|s| EscortFunction::parse(s))
                        .collect::<Result<_>>()?,
                )?,
            };
            return Ok(DynamicSpec::Escort(escort));
        }
        let children = self.combine.as_deref().unwrap_or_default();
        let mut built = Vec::with_capacity(children.len());
        for c in children {
            let w = c
                .w
                .ok_or_else(|| Error::InvalidDynamic("combination child is missing `w`".into()))?;
            built.push((w, c.build_node(n)?));
        }
        let spec = DynamicSpec::combination(built)?;
        spec.validate_for(n)?;
        Ok(spec)
    }

    pub(crate) fn from_spec(spec: &DynamicSpec) -> Option<Self> {
        let mut cfg = Self {
            w: None,
            ftrl: None,
            escort: None,
            combine: None,
        };
        match spec {
            DynamicSpec::Ftrl(Regularizer::Entropy) => cfg.ftrl = Some("entropy".into()),
            DynamicSpec::Ftrl(Regularizer::HalfL2) => cfg.ftrl = Some("half_l2".into()),
            DynamicSpec::Ftrl(Regularizer::SeparableCustom(_)) => return None,
            DynamicSpec::Escort(e) => {
                if let Some(n) = e.action_count() {
                    let mut names = Vec::with_capacity(n);
                    for j in 0..n {
                        names.push(family_name(e.function(j))?);
                    }
                    cfg.escort = Some(EscortConfig::PerAction(names));
                } else {
                    cfg.escort = Some(EscortConfig::Shared(family_name(e.function(0))?));
                }
            }
            DynamicSpec::Combination(children) => {
                let mut out = Vec::with_capacity(children.len());
                for (w, c) in children {
                    let mut child = Self::from_spec(c)?;
                    child.w = Some(*w);
                    out.push(child);
                }
                cfg.combine = Some(out);
            }
        }
        Some(cfg)
    }
}

fn family_name(f: &EscortFunction) -> Option<String> {
    match f {
        EscortFunction::Custom { .. } => None,
        other => Some(other.name()),
    }
}
