//! Torus-symmetric cycle configurations in ℙ^N and their JSON form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

/// One coordinate-aligned component of a cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum CycleComponent {
    /// The coordinate point `e_index`.
    Point { index: usize },
    /// The line through `e_i` and `e_j`.
    CoordLine { i: usize, j: usize },
    /// `[w_0 : w_1 t : … : w_m t^m]` placed on the listed coordinates.
    #[serde(rename = "WeightedRNC", rename_all = "camelCase")]
    WeightedRnc { index_set: Vec<usize>, weights: Vec<f64> },
}

impl CycleComponent {
    /// Fubini–Study volume, normalized so a line has volume one.
    pub fn volume(&self) -> f64 {
        match self {
            CycleComponent::Point { .. } => 1.0,
            CycleComponent::CoordLine { .. } => 1.0,
            CycleComponent::WeightedRnc { index_set, .. } => (index_set.len() - 1) as f64,
        }
    }

    pub fn indices(&self) -> Vec<usize> {
        match self {
            CycleComponent::Point { index } => vec![*index],
            CycleComponent::CoordLine { i, j } => vec![*i, *j],
            CycleComponent::WeightedRnc { index_set, .. } => index_set.clone(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(&bad) = self.indices().iter().find(|&&i| i > n) {
            return Err(Error::InvalidInput(format!("coordinate index {bad} outside [0, {n}]")));
        }
        match self {
            CycleComponent::Point { .. } => {}
            CycleComponent::CoordLine { i, j } => {
                if i == j {
                    return Err(Error::InvalidInput(format!("line endpoints coincide at {i}")));
                }
            }
            CycleComponent::WeightedRnc { index_set, weights } => {
                if index_set.len() < 2 {
                    return Err(Error::InvalidInput("a rational normal curve needs >= 2 coordinates".into()));
                }
                if weights.len() != index_set.len() {
                    return Err(Error::InvalidInput(format!(
                        "{} weights for {} coordinates",
                        weights.len(),
                        index_set.len()
                    )));
                }
                let mut seen = index_set.clone();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() != index_set.len() {
                    return Err(Error::InvalidInput("repeated coordinate in a rational normal curve".into()));
                }
                if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
                    return Err(Error::InvalidInput(format!("curve weights must be positive, got {w}")));
                }
            }
        }
        Ok(())
    }
}

/// A pair `(V, W)` in ℙ^N with the parameter λ and an optional diagonal
/// group element acting on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CycleConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(rename = "N")]
    pub n: usize,
    pub curve_components: Vec<CycleComponent>,
    /// Coordinate points making up the divisor `W`.
    #[serde(default)]
    pub divisor_points: Vec<usize>,
    pub lambda: f64,
    /// Diagonal torus element `diag(w_0, …, w_N)`; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl CycleConfig {
    pub fn new(n: usize, curve_components: Vec<CycleComponent>, divisor_points: Vec<usize>, lambda: f64) -> Self {
        CycleConfig {
            schema_version: SCHEMA_VERSION,
            n,
            curve_components,
            divisor_points,
            lambda,
            weights: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        CycleConfig { lambda, ..self.clone() }
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Self {
        CycleConfig { weights: Some(weights), ..self.clone() }
    }

    pub fn torus_weights(&self) -> Vec<f64> {
        self.weights.clone().unwrap_or_else(|| vec![1.0; self.dim()])
    }

    pub fn curve_volume(&self) -> f64 {
        self.curve_components.iter().map(CycleComponent::volume).sum()
    }

    pub fn divisor_volume(&self) -> f64 {
        self.divisor_points.len() as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported schemaVersion {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidInput(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        for c in &self.curve_components {
            c.validate(self.n)?;
        }
        if let Some(&bad) = self.divisor_points.iter().find(|&&i| i > self.n) {
            return Err(Error::InvalidInput(format!("divisor point {bad} outside [0, {}]", self.n)));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.dim() {
                return Err(Error::InvalidInput(format!("{} torus weights for dimension {}", w.len(), self.dim())));
            }
            if let Some(x) = w.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
                return Err(Error::InvalidInput(format!("torus weights must be positive, got {x}")));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: CycleConfig = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
