//! Ontological models: preparation grids, experiments with response
//! functions, preclusion tables and consistency with the Born rule.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{Distribution, OnticSpace, NORMALIZATION_TOL};
use crate::quantum::{born_row, Ket, MeasurementBasis};

/// An experiment with a finite outcome set and per-atom response probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    name: String,
    outcomes: Vec<String>,
    /// `response[atom][k]`
    response: Vec<Vec<f64>>,
}

impl Experiment {
    pub fn new(
        name: impl Into<String>,
        outcomes: Vec<String>,
        response: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let name = name.into();
        let invalid = |reason: String| Error::InvalidExperiment {
            name: name.clone(),
            reason,
        };
        if outcomes.is_empty() {
            return Err(invalid("no outcomes".into()));
        }
        for (i, a) in outcomes.iter().enumerate() {
            if outcomes[..i].contains(a) {
                return Err(invalid(format!("duplicate outcome `{a}`")));
            }
        }
        for (atom, row) in response.iter().enumerate() {
            if row.len() != outcomes.len() {
                return Err(invalid(format!(
                    "atom {atom} has {} response entries for {} outcomes",
                    row.len(),
                    outcomes.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(invalid(format!("response {v} at atom {atom} outside [0,1]")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return Err(invalid(format!(
                    "responses at atom {atom} sum to {total}, not 1"
                )));
            }
        }
        Ok(Self {
            name,
            outcomes,
            response,
        })
    }

    /// Deterministic experiment: atom `i` yields outcome `assignment[i]`.
    pub fn deterministic(
        name: impl Into<String>,
        outcomes: Vec<String>,
        assignment: &[usize],
    ) -> Result<Self> {
        let m = outcomes.len();
        let response = assignment
            .iter()
            .map(|&k| {
                let mut row = vec![0.0; m];
                if k < m {
                    row[k] = 1.0;
                }
                row
            })
            .collect();
        Self::new(name, outcomes, response)
    }

    /// Every atom answers each of `m` outcomes with probability `1/m`.
    pub fn uniform(name: impl Into<String>, m: usize, atoms: usize) -> Result<Self> {
        let outcomes = (1..=m).map(|k| k.to_string()).collect();
        Self::new(name, outcomes, vec![vec![1.0 / m as f64; m]; atoms])
    }

    /// Mixes every response with the uniform response: `(1−h)·p_k + h/m`.
    pub fn with_leakage(&self, h: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&h) {
            return Err(Error::Domain(format!("leakage {h} outside [0,1]")));
        }
        let m = self.outcomes.len() as f64;
        let response = self
            .response
            .iter()
            .map(|row| row.iter().map(|p| (1.0 - h) * p + h / m).collect())
            .collect();
        Self::new(format!("{}~{h}", self.name), self.outcomes.clone(), response)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn outcome_count(&self) -> usize {
        self.outcomes.len()
    }

    pub fn response(&self) -> &[Vec<f64>] {
        &self.response
    }

    pub fn outcome_index(&self, label: &str) -> Result<usize> {
        self.outcomes
            .iter()
            .position(|o| o == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_owned()))
    }

    /// `⟨p_k⟩` under `dist`.
    pub fn outcome_probability(&self, dist: &Distribution, k: usize) -> Result<f64> {
        if self.response.len() != dist.space().len() {
            return Err(Error::DimensionMismatch {
                expected: dist.space().len(),
                found: self.response.len(),
            });
        }
        if k >= self.outcomes.len() {
            return Err(Error::UnknownLabel(k.to_string()));
        }
        Ok(self
            .response
            .iter()
            .enumerate()
            .map(|(i, row)| row[k] * dist.mass(i))
            .sum())
    }

    /// Outcome probabilities under `dist`.
    pub fn distribution_of(&self, dist: &Distribution) -> Result<Vec<f64>> {
        (0..self.outcomes.len())
            .map(|k| self.outcome_probability(dist, k))
            .collect()
    }

    /// Swaps the response columns of two outcomes.
    pub fn swap_outcomes(&self, a: usize, b: usize) -> Self {
        let mut response = self.response.clone();
        for row in &mut response {
            row.swap(a, b);
        }
        Self {
            name: format!("{}[{a}<->{b}]", self.name),
            outcomes: self.outcomes.clone(),
            response,
        }
    }
}

/// Distributions `P_xy` for every pair of preparation labels, on one space.
#[derive(Debug, Clone)]
pub struct PreparationGrid {
    space: Arc<OnticSpace>,
    x_labels: Vec<String>,
    y_labels: Vec<String>,
    /// Row-major: index `i * |Y| + j`.
    dists: Vec<Distribution>,
}

impl PreparationGrid {
    pub fn new(x_labels: Vec<String>, y_labels: Vec<String>, dists: Vec<Distribution>) -> Result<Self> {
        if x_labels.is_empty() || y_labels.is_empty() {
            return Err(Error::InvalidGrid("empty label set".into()));
        }
        if dists.len() != x_labels.len() * y_labels.len() {
            return Err(Error::InvalidGrid(format!(
                "{} distributions for a {}x{} grid",
                dists.len(),
                x_labels.len(),
                y_labels.len()
            )));
        }
        for labels in [&x_labels, &y_labels] {
            for (i, l) in labels.iter().enumerate() {
                if labels[..i].contains(l) {
                    return Err(Error::InvalidGrid(format!("duplicate label `{l}`")));
                }
            }
        }
        let space = dists[0].space().clone();
        if dists.iter().any(|d| !d.same_space(&dists[0])) {
            return Err(Error::DistinctSpaces);
        }
        Ok(Self {
            space,
            x_labels,
            y_labels,
            dists,
        })
    }

    /// 2×2 grid with labels `0`, `+` from distributions ordered `00, 0+, +0, ++`.
    pub fn binary(dists: [Distribution; 4]) -> Result<Self> {
        let labels = || vec!["0".to_owned(), "+".to_owned()];
        Self::new(labels(), labels(), dists.into())
    }

    pub fn space(&self) -> &Arc<OnticSpace> {
        &self.space
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.x_labels.len(), self.y_labels.len())
    }

    pub fn get(&self, i: usize, j: usize) -> &Distribution {
        &self.dists[i * self.y_labels.len() + j]
    }

    pub fn density(&self, i: usize, j: usize, atom: usize) -> f64 {
        self.get(i, j).density_at(atom)
    }

    pub fn index_of(&self, x: &str, y: &str) -> Result<(usize, usize)> {
        let i = self
            .x_labels
            .iter()
            .position(|l| l == x)
            .ok_or_else(|| Error::UnknownLabel(x.to_owned()))?;
        let j = self
            .y_labels
            .iter()
            .position(|l| l == y)
            .ok_or_else(|| Error::UnknownLabel(y.to_owned()))?;
        Ok((i, j))
    }

    pub fn get_labeled(&self, x: &str, y: &str) -> Result<&Distribution> {
        let (i, j) = self.index_of(x, y)?;
        Ok(self.get(i, j))
    }

    /// Distributions in row-major order.
    pub fn distributions(&self) -> &[Distribution] {
        &self.dists
    }

    /// `"x,y"` keys in row-major order.
    pub fn keys(&self) -> Vec<String> {
        self.x_labels
            .iter()
            .flat_map(|x| self.y_labels.iter().map(move |y| format!("{x},{y}")))
            .collect()
    }

    pub fn cells(&self) -> impl Iterator<Item = ((usize, usize), &Distribution)> {
        let ny = self.y_labels.len();
        self.dists.iter().enumerate().map(move |(n, d)| ((n / ny, n % ny), d))
    }

    /// Re-expresses every distribution against a new base measure.
    pub fn rebase(&self, space: Arc<OnticSpace>) -> Result<Self> {
        let dists = self
            .dists
            .iter()
            .map(|d| d.rebase(space.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.x_labels.clone(), self.y_labels.clone(), dists)
    }
}

/// Quantum states the model is meant to reproduce, aligned with the grid.
#[derive(Debug, Clone)]
pub struct QuantumTarget {
    /// Row-major, aligned with [`PreparationGrid::distributions`].
    pub preps: Vec<Ket>,
    pub basis: MeasurementBasis,
}

#[derive(Debug, Clone)]
pub struct OntologicalModel {
    grid: PreparationGrid,
    experiments: Vec<Experiment>,
    quantum_target: Option<QuantumTarget>,
}

impl OntologicalModel {
    pub fn new(
        grid: PreparationGrid,
        experiments: Vec<Experiment>,
        quantum_target: Option<QuantumTarget>,
    ) -> Result<Self> {
        let n = grid.space().len();
        for e in &experiments {
            if e.response().len() != n {
                return Err(Error::InvalidExperiment {
                    name: e.name().to_owned(),
                    reason: format!("{} response rows for {} atoms", e.response().len(), n),
                });
            }
        }
        if let Some(t) = &quantum_target {
            if t.preps.len() != grid.distributions().len() {
                return Err(Error::InvalidGrid(format!(
                    "quantum target has {} preparations, grid has {}",
                    t.preps.len(),
                    grid.distributions().len()
                )));
            }
            if let Some(k) = t.preps.iter().find(|k| k.dim() != t.basis.dim()) {
                return Err(Error::DimensionMismatch {
                    expected: t.basis.dim(),
                    found: k.dim(),
                });
            }
        }
        Ok(Self {
            grid,
            experiments,
            quantum_target,
        })
    }

    pub fn space(&self) -> &Arc<OnticSpace> {
        self.grid.space()
    }

    pub fn grid(&self) -> &PreparationGrid {
        &self.grid
    }

    pub fn experiments(&self) -> &[Experiment] {
        &self.experiments
    }

    pub fn experiment(&self, name: &str) -> Result<&Experiment> {
        self.experiments
            .iter()
            .find(|e| e.name() == name)
            .ok_or_else(|| Error::UnknownLabel(name.to_owned()))
    }

    pub fn quantum_target(&self) -> Option<&QuantumTarget> {
        self.quantum_target.as_ref()
    }

    pub fn with_experiments(&self, experiments: Vec<Experiment>) -> Result<Self> {
        Self::new(self.grid.clone(), experiments, self.quantum_target.clone())
    }

    pub fn with_grid(&self, grid: PreparationGrid) -> Result<Self> {
        Self::new(grid, self.experiments.clone(), self.quantum_target.clone())
    }

    /// Probability of outcome `outcome` of `experiment` under preparation `(x, y)`.
    pub fn outcome_probability(&self, x: &str, y: &str, experiment: &str, outcome: &str) -> Result<f64> {
        let dist = self.grid.get_labeled(x, y)?;
        let e = self.experiment(experiment)?;
        e.outcome_probability(dist, e.outcome_index(outcome)?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PreclusionTable {
    pub experiment: String,
    pub outcomes: Vec<String>,
    pub preparations: Vec<String>,
    /// `probabilities[k][prep]`
    pub probabilities: Vec<Vec<f64>>,
    /// Smallest probability of each outcome over the preparations.
    pub outcome_epsilon: Vec<f64>,
    /// Preparation attaining `outcome_epsilon[k]` (first on ties).
    pub precluded_by: Vec<String>,
    /// Smallest ε for which every outcome is ε-precluded by some preparation.
    pub epsilon: f64,
}

impl PreclusionTable {
    pub fn outcome_count(&self) -> usize {
        self.outcomes.len()
    }
}

pub fn preclusion_table(grid: &PreparationGrid, experiment: &Experiment) -> Result<PreclusionTable> {
    let preparations = grid.keys();
    let probabilities = (0..experiment.outcome_count())
        .map(|k| {
            grid.distributions()
                .iter()
                .map(|d| experiment.outcome_probability(d, k))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut outcome_epsilon = Vec::with_capacity(probabilities.len());
    let mut precluded_by = Vec::with_capacity(probabilities.len());
    for row in &probabilities {
        let (arg, min) = row
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(ai, av), (i, &v)| if v < av { (i, v) } else { (ai, av) });
        outcome_epsilon.push(min);
        precluded_by.push(preparations[arg].clone());
    }
    let epsilon = outcome_epsilon.iter().copied().fold(0.0, f64::max);
    Ok(PreclusionTable {
        experiment: experiment.name().to_owned(),
        outcomes: experiment.outcomes().to_vec(),
        preparations,
        probabilities,
        outcome_epsilon,
        precluded_by,
        epsilon,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyEntry {
    pub preparation: String,
    pub outcome: String,
    pub model: f64,
    pub born: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub experiment: String,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub pass: bool,
    pub entries: Vec<ConsistencyEntry>,
}

/// Compares the model's first experiment against the Born probabilities of
/// its quantum target.
pub fn quantum_consistency(model: &OntologicalModel, tol: f64) -> Result<ConsistencyReport> {
    quantum_consistency_for(model, 0, tol)
}

pub fn quantum_consistency_for(
    model: &OntologicalModel,
    experiment: usize,
    tol: f64,
) -> Result<ConsistencyReport> {
    let target = model.quantum_target().ok_or(Error::MissingQuantumTarget)?;
    let e = model
        .experiments()
        .get(experiment)
        .ok_or_else(|| Error::UnknownLabel(format!("experiment #{experiment}")))?;
    if e.outcome_count() != target.basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.basis.dim(),
            found: e.outcome_count(),
        });
    }
    let mut entries = Vec::new();
    for ((key, dist), ket) in model
        .grid()
        .keys()
        .into_iter()
        .zip(model.grid().distributions())
        .zip(&target.preps)
    {
        let born = born_row(ket, &target.basis)?;
        let predicted = e.distribution_of(dist)?;
        for (k, (m, b)) in predicted.into_iter().zip(born).enumerate() {
            entries.push(ConsistencyEntry {
                preparation: key.clone(),
                outcome: e.outcomes()[k].clone(),
                model: m,
                born: b,
                deviation: (m - b).abs(),
            });
        }
    }
    let max_deviation = entries.iter().map(|e| e.deviation).fold(0.0, f64::max);
    Ok(ConsistencyReport {
        experiment: e.name().to_owned(),
        tolerance: tol,
        max_deviation,
        pass: max_deviation <= tol,
        entries,
    })
}

pub(crate) fn validate_priors(priors: &[f64], expected: usize, side: &str) -> Result<()> {
    if priors.len() != expected {
        return Err(Error::InvalidPriors(format!(
            "{side}: {} priors for {expected} labels",
            priors.len()
        )));
    }
    if let Some(p) = priors.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::InvalidPriors(format!("{side}: prior {p} is not strictly positive")));
    }
    let total: f64 = priors.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidPriors(format!("{side}: priors sum to {total}")));
    }
    Ok(())
}

/// Mixture `Σ p_x q_y P_xy` produced by independent random choice of labels.
pub fn mixture(grid: &PreparationGrid, priors_x: &[f64], priors_y: &[f64]) -> Result<Distribution> {
    let (nx, ny) = grid.shape();
    validate_priors(priors_x, nx, "x")?;
    validate_priors(priors_y, ny, "y")?;
    let mut density = vec![0.0; grid.space().len()];
    for ((i, j), d) in grid.cells() {
        let c = priors_x[i] * priors_y[j];
        for (acc, v) in density.iter_mut().zip(d.density()) {
            *acc += c * v;
        }
    }
    Distribution::new(grid.space().clone(), density)
}

/// Equal-prior mixture of the grid.
pub fn uniform_mixture(grid: &PreparationGrid) -> Result<Distribution> {
    let (nx, ny) = grid.shape();
    mixture(grid, &vec![1.0 / nx as f64; nx], &vec![1.0 / ny as f64; ny])
}
