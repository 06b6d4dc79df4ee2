use super::{perturb, Family, MapSpec, PerturbationKind, PerturbationSpec, PhaseSpace};
use crate::error::{config, Result};
use serde::{Deserialize, Serialize};

/// Text form of a [`MapSpec`]: keys `family`, `params`, `space`, and an
/// optional `[perturbation]` table with `kind` and `amplitude`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub family: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<PhaseSpace>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub breakpoints: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    pub kind: String,
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp: Option<bool>,
}

fn param(family: &str, params: &[f64]) -> Result<f64> {
    match params {
        [v] => Ok(*v),
        _ => Err(config(format!("family `{family}` takes exactly one parameter in `params`"))),
    }
}

impl PerturbationConfig {
    pub fn to_spec(&self) -> Result<PerturbationSpec> {
        let kind = match self.kind.as_str() {
            "additive_constant" => PerturbationKind::AdditiveConstant,
            "smooth_bump" => PerturbationKind::SmoothBump {
                center: self
                    .center
                    .ok_or_else(|| config("smooth_bump perturbation needs `center`"))?,
                width: self
                    .width
                    .ok_or_else(|| config("smooth_bump perturbation needs `width`"))?,
            },
            other => return Err(config(format!("unknown perturbation kind `{other}`"))),
        };
        Ok(PerturbationSpec {
            kind,
            amplitude: self.amplitude,
            clamp: self.clamp.unwrap_or(true),
        })
    }

    pub fn from_spec(p: &PerturbationSpec) -> Self {
        let (kind, center, width) = match p.kind {
            PerturbationKind::AdditiveConstant => ("additive_constant", None, None),
            PerturbationKind::SmoothBump { center, width } => ("smooth_bump", Some(center), Some(width)),
        };
        Self {
            kind: kind.to_string(),
            amplitude: p.amplitude,
            center,
            width,
            clamp: (!p.clamp).then_some(false),
        }
    }
}

impl MapConfig {
    pub fn to_spec(&self) -> Result<MapSpec> {
        let f = self.family.as_str();
        let (family, default_space) = match f {
            "identity" => (Family::Identity, PhaseSpace::Circle),
            "rotation" => (Family::Rotation { alpha: param(f, &self.params)? }, PhaseSpace::Circle),
            "doubling" => (Family::Doubling, PhaseSpace::Circle),
            "tent" => (Family::Tent { slope: param(f, &self.params)? }, PhaseSpace::Interval),
            "logistic" => (Family::Logistic { r: param(f, &self.params)? }, PhaseSpace::Interval),
            "piecewise_linear" => (
                Family::PiecewiseLinear {
                    breakpoints: self.breakpoints.clone(),
                    values: self.values.clone(),
                },
                PhaseSpace::Interval,
            ),
            other => return Err(config(format!("unknown map family `{other}`"))),
        };
        let takes_params = matches!(family, Family::Rotation { .. } | Family::Tent { .. } | Family::Logistic { .. });
        if !takes_params && !self.params.is_empty() {
            return Err(config(format!("family `{f}` takes no `params`")));
        }
        let spec = MapSpec::new(family, self.space.unwrap_or(default_space))?;
        match &self.perturbation {
            Some(p) => perturb(&spec, p.to_spec()?),
            None => Ok(spec),
        }
    }

    pub fn from_spec(spec: &MapSpec) -> Result<Self> {
        let (breakpoints, values) = match spec.family() {
            Family::PiecewiseLinear { breakpoints, values } => (breakpoints.clone(), values.clone()),
            _ => (Vec::new(), Vec::new()),
        };
        let perturbation = match spec.perturbations() {
            [] => None,
            [p] => Some(PerturbationConfig::from_spec(p)),
            _ => return Err(config("a map with several perturbations has no flat text form")),
        };
        Ok(Self {
            family: spec.family().name().to_string(),
            params: spec.family().params(),
            space: Some(spec.space()),
            breakpoints,
            values,
            perturbation,
        })
    }
}

impl MapSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: MapConfig = toml::from_str(text).map_err(|e| config(e.to_string()))?;
        cfg.to_spec()
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(&MapConfig::from_spec(self)?).map_err(|e| config(e.to_string()))
    }
}
