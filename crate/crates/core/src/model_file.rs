//! JSON model files.
//!
//! ```json
//! {
//!   "atoms": ["a", "b"],
//!   "base_weights": [1, 1],
//!   "preparations": { "0,0": [1, 0], "0,+": [0.5, 0.5], "+,0": [0.5, 0.5], "+,+": [0, 1] },
//!   "experiments": [ { "name": "E", "outcomes": ["1", "2"], "response": [[1, 0], [0, 1]] } ],
//!   "quantum_target": { "preps": { "0,0": [[1, 0], [0, 0]] }, "basis": [[[1, 0], [0, 0]]] }
//! }
//! ```
//!
//! `base_weights` defaults to all ones and `quantum_target` is optional.
//! Preparation keys are `"x,y"`; label order follows first appearance.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::measures::{Distribution, OnticSpace};
use crate::models::{Experiment, OntologicalModel, PreparationGrid, QuantumTarget};
use crate::quantum::{Ket, MeasurementBasis};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub atoms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_weights: Option<Vec<f64>>,
    pub preparations: Map<String, Value>,
    #[serde(default)]
    pub experiments: Vec<ExperimentFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantum_target: Option<QuantumTargetFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentFile {
    pub name: String,
    pub outcomes: Vec<String>,
    pub response: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantumTargetFile {
    pub preps: Map<String, Value>,
    pub basis: Vec<Vec<[f64; 2]>>,
}

fn split_key(key: &str) -> Result<(&str, &str)> {
    key.split_once(',')
        .map(|(x, y)| (x.trim(), y.trim()))
        .ok_or_else(|| Error::InvalidGrid(format!("preparation key `{key}` is not of the form \"x,y\"")))
}

fn push_unique(labels: &mut Vec<String>, l: &str) {
    if !labels.iter().any(|x| x == l) {
        labels.push(l.to_owned());
    }
}

fn complex_vec(pairs: &[[f64; 2]]) -> Vec<Complex64> {
    pairs.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn into_model(self) -> Result<OntologicalModel> {
        let weights = self
            .base_weights
            .clone()
            .unwrap_or_else(|| vec![1.0; self.atoms.len()]);
        let space = Arc::new(OnticSpace::new(self.atoms.clone(), weights)?);

        let mut x_labels = Vec::new();
        let mut y_labels = Vec::new();
        for key in self.preparations.keys() {
            let (x, y) = split_key(key)?;
            push_unique(&mut x_labels, x);
            push_unique(&mut y_labels, y);
        }
        let find = |map: &Map<String, Value>, x: &str, y: &str| -> Option<Value> {
            map.iter()
                .find(|(k, _)| split_key(k).map(|p| p == (x, y)).unwrap_or(false))
                .map(|(_, v)| v.clone())
        };

        let mut dists = Vec::new();
        for x in &x_labels {
            for y in &y_labels {
                let value = find(&self.preparations, x, y)
                    .ok_or_else(|| Error::InvalidGrid(format!("missing preparation `{x},{y}`")))?;
                let density: Vec<f64> = serde_json::from_value(value)?;
                let dist = Distribution::new(space.clone(), density).map_err(|e| match e {
                    Error::Normalization { total, tolerance, .. } => Error::Normalization {
                        total,
                        tolerance,
                        context: Some(format!("preparation `{x},{y}`")),
                    },
                    other => other,
                })?;
                dists.push(dist);
            }
        }
        if self.preparations.len() != dists.len() {
            return Err(Error::InvalidGrid("duplicate preparation keys".into()));
        }
        let grid = PreparationGrid::new(x_labels.clone(), y_labels.clone(), dists)?;

        let experiments = self
            .experiments
            .into_iter()
            .map(|e| Experiment::new(e.name, e.outcomes, e.response))
            .collect::<Result<Vec<_>>>()?;

        let quantum_target = match self.quantum_target {
            None => None,
            Some(t) => {
                let basis = MeasurementBasis::new(
                    t.basis
                        .iter()
                        .map(|k| Ket::new(complex_vec(k)))
                        .collect::<Result<Vec<_>>>()?,
                )?;
                let mut preps = Vec::new();
                for x in &x_labels {
                    for y in &y_labels {
                        let value = find(&t.preps, x, y).ok_or_else(|| {
                            Error::InvalidGrid(format!("quantum target lacks preparation `{x},{y}`"))
                        })?;
                        let pairs: Vec<[f64; 2]> = serde_json::from_value(value)?;
                        preps.push(Ket::new(complex_vec(&pairs))?);
                    }
                }
                Some(QuantumTarget { preps, basis })
            }
        };

        OntologicalModel::new(grid, experiments, quantum_target)
    }

    pub fn from_model(model: &OntologicalModel) -> Self {
        let space = model.space();
        let base_weights = if space.base_weights().iter().all(|&w| w == 1.0) {
            None
        } else {
            Some(space.base_weights().to_vec())
        };
        let mut preparations = Map::new();
        for (key, d) in model.grid().keys().into_iter().zip(model.grid().distributions()) {
            preparations.insert(key, serde_json::to_value(d.density()).expect("finite"));
        }
        let experiments = model
            .experiments()
            .iter()
            .map(|e| ExperimentFile {
                name: e.name().to_owned(),
                outcomes: e.outcomes().to_vec(),
                response: e.response().to_vec(),
            })
            .collect();
        let to_pairs = |k: &Ket| -> Vec<[f64; 2]> {
            k.amplitudes().iter().map(|c| [c.re, c.im]).collect()
        };
        let quantum_target = model.quantum_target().map(|t| {
            let mut preps = Map::new();
            for (key, k) in model.grid().keys().into_iter().zip(&t.preps) {
                preps.insert(key, serde_json::to_value(to_pairs(k)).expect("finite"));
            }
            QuantumTargetFile {
                preps,
                basis: t.basis.kets().iter().map(to_pairs).collect(),
            }
        });
        Self {
            atoms: space.atoms().to_vec(),
            base_weights,
            preparations,
            experiments,
            quantum_target,
        }
    }
}

pub fn parse_model(text: &str) -> Result<OntologicalModel> {
    ModelFile::from_json(text)?.into_model()
}

pub fn load_model(path: impl AsRef<Path>) -> Result<OntologicalModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidGrid(format!("cannot read {}: {e}", path.display())))?;
    parse_model(&text)
}

pub fn model_to_json(model: &OntologicalModel) -> String {
    ModelFile::from_model(model).to_json()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
        "atoms": ["a", "b"],
        "preparations": {"0,0": [1, 0], "0,+": [0.5, 0.5], "+,0": [0.5, 0.5], "+,+": [0, 1]},
        "experiments": [{"name": "E", "outcomes": ["1", "2"], "response": [[1, 0], [0, 1]]}]
    }"#;

    #[test]
    fn parses_and_orders_labels() {
        let m = parse_model(SMALL).unwrap();
        assert_eq!(m.grid().x_labels(), ["0", "+"]);
        assert_eq!(m.grid().keys(), ["0,0", "0,+", "+,0", "+,+"]);
        assert_eq!(m.space().base_weights(), [1.0, 1.0]);
        assert!((m.outcome_probability("0", "+", "E", "2").unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn normalization_error_names_preparation() {
        let text = SMALL.replace("\"0,+\": [0.5, 0.5]", "\"0,+\": [0.5, 0.4]");
        let err = parse_model(&text).unwrap_err().to_string();
        assert!(err.contains("normalization"), "{err}");
        assert!(err.contains("0,+"), "{err}");
    }

    #[test]
    fn missing_preparation_is_rejected() {
        let text = SMALL.replace(", \"+,+\": [0, 1]", "");
        assert!(matches!(parse_model(&text), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn syntax_errors_carry_location() {
        let err = parse_model("{\n \"atoms\": [,]\n}").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn round_trip_preserves_model() {
        let m = parse_model(SMALL).unwrap();
        let again = parse_model(&model_to_json(&m)).unwrap();
        assert_eq!(model_to_json(&m), model_to_json(&again));
    }
}
