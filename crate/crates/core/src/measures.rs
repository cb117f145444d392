//! Finite ontic spaces, distributions on them, and the distance and overlap
//! functionals used throughout the crate.
//!
//! Every [`Distribution`] stores a density relative to the base measure of its
//! [`OnticSpace`]. The probability of an atom is `density * base_weight`, so the
//! same probability measure can be re-expressed against a different base
//! measure with [`Distribution::rebase`] without changing any functional.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance applied to normalization when a distribution is constructed.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Slack allowed when checking the inequality chain.
pub const CHAIN_SLACK: f64 = 1e-12;

/// A finite set of labeled atoms carrying a strictly positive base measure.
#[derive(Debug, Clone, PartialEq)]
pub struct OnticSpace {
    atoms: Vec<String>,
    base_weights: Vec<f64>,
    index: HashMap<String, usize>,
}

impl OnticSpace {
    pub fn new(atoms: Vec<String>, base_weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidSpace("no atoms".into()));
        }
        if atoms.len() != base_weights.len() {
            return Err(Error::InvalidSpace(format!(
                "{} atoms but {} base weights",
                atoms.len(),
                base_weights.len()
            )));
        }
        let mut index = HashMap::with_capacity(atoms.len());
        for (i, atom) in atoms.iter().enumerate() {
            if index.insert(atom.clone(), i).is_some() {
                return Err(Error::InvalidSpace(format!("duplicate atom label `{atom}`")));
            }
        }
        if let Some((i, w)) = base_weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::InvalidSpace(format!(
                "base weight {w} at atom `{}` is not strictly positive",
                atoms[i]
            )));
        }
        Ok(Self {
            atoms,
            base_weights,
            index,
        })
    }

    /// Space with unit base weight on every atom (counting measure).
    pub fn counting<S: Into<String>>(atoms: impl IntoIterator<Item = S>) -> Result<Self> {
        let atoms: Vec<String> = atoms.into_iter().map(Into::into).collect();
        let weights = vec![1.0; atoms.len()];
        Self::new(atoms, weights)
    }

    /// Counting space with atoms labeled `0..n`.
    pub fn indexed(n: usize) -> Result<Self> {
        Self::counting((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &str {
        &self.atoms[i]
    }

    pub fn base_weights(&self) -> &[f64] {
        &self.base_weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.base_weights[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn total_weight(&self) -> f64 {
        self.base_weights.iter().sum()
    }

    /// Same atoms, different base measure.
    pub fn with_weights(&self, base_weights: Vec<f64>) -> Result<Self> {
        Self::new(self.atoms.clone(), base_weights)
    }
}

/// A probability distribution given by its density against the base measure.
#[derive(Debug, Clone)]
pub struct Distribution {
    space: Arc<OnticSpace>,
    density: Vec<f64>,
}

impl Distribution {
    pub fn new(space: Arc<OnticSpace>, density: Vec<f64>) -> Result<Self> {
        if density.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                found: density.len(),
            });
        }
        if let Some((i, v)) = density
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::NegativeDensity {
                atom: space.atom(i).to_owned(),
                value: *v,
            });
        }
        let total: f64 = density
            .iter()
            .zip(space.base_weights())
            .map(|(d, w)| d * w)
            .sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Normalization {
                total,
                tolerance: NORMALIZATION_TOL,
                context: None,
            });
        }
        Ok(Self { space, density })
    }

    /// Builds a distribution from per-atom probabilities.
    pub fn from_masses(space: Arc<OnticSpace>, masses: &[f64]) -> Result<Self> {
        if masses.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                found: masses.len(),
            });
        }
        let density = masses
            .iter()
            .zip(space.base_weights())
            .map(|(m, w)| m / w)
            .collect();
        Self::new(space, density)
    }

    /// Uniform probability over the atoms in `support`.
    pub fn uniform_on(space: Arc<OnticSpace>, support: &[usize]) -> Result<Self> {
        let mut masses = vec![0.0; space.len()];
        if support.is_empty() {
            return Err(Error::Normalization {
                total: 0.0,
                tolerance: NORMALIZATION_TOL,
                context: Some("empty support".into()),
            });
        }
        let p = 1.0 / support.len() as f64;
        for &i in support {
            masses[i] = p;
        }
        Self::from_masses(space, &masses)
    }

    pub fn space(&self) -> &Arc<OnticSpace> {
        &self.space
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn density_at(&self, i: usize) -> f64 {
        self.density[i]
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.density[i] * self.space.weight(i)
    }

    pub fn masses(&self) -> Vec<f64> {
        (0..self.density.len()).map(|i| self.mass(i)).collect()
    }

    /// Indices of atoms with positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.density.len())
            .filter(|&i| self.density[i] > 0.0)
            .collect()
    }

    /// Re-expresses the same probability measure against another base measure
    /// on the same atoms.
    pub fn rebase(&self, space: Arc<OnticSpace>) -> Result<Self> {
        if space.atoms() != self.space.atoms() {
            return Err(Error::DistinctSpaces);
        }
        let density = self
            .density
            .iter()
            .enumerate()
            .map(|(i, d)| d * self.space.weight(i) / space.weight(i))
            .collect();
        Ok(Self { space, density })
    }

    pub fn same_space(&self, other: &Distribution) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space
    }
}

fn check_pair(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.same_space(q) {
        Ok(())
    } else {
        Err(Error::DistinctSpaces)
    }
}

fn weighted_sum(p: &Distribution, q: &Distribution, f: impl Fn(f64, f64) -> f64) -> Result<f64> {
    check_pair(p, q)?;
    Ok(p.density
        .iter()
        .zip(&q.density)
        .zip(p.space.base_weights())
        .map(|((&a, &b), &w)| f(a, b) * w)
        .sum())
}

/// Total variation (statistical) distance `½ Σ |p − q| w`.
pub fn total_variation(p: &Distribution, q: &Distribution) -> Result<f64> {
    weighted_sum(p, q, |a, b| (a - b).abs()).map(|s| 0.5 * s)
}

/// Classical overlap `Σ min(p, q) w`.
pub fn overlap(p: &Distribution, q: &Distribution) -> Result<f64> {
    weighted_sum(p, q, f64::min)
}

/// Hellinger distance `sqrt(½ Σ (√p − √q)² w)`.
pub fn hellinger(p: &Distribution, q: &Distribution) -> Result<f64> {
    weighted_sum(p, q, |a, b| (a.sqrt() - b.sqrt()).powi(2)).map(|s| (0.5 * s).sqrt())
}

/// Fidelity (Bhattacharyya coefficient) `Σ √(pq) w`.
pub fn fidelity(p: &Distribution, q: &Distribution) -> Result<f64> {
    weighted_sum(p, q, |a, b| (a * b).sqrt())
}

/// `sqrt(∫ p q dν)` where `ν` is the base measure rescaled to total mass one.
///
/// Cauchy-Schwarz bounds the fidelity by this quantity only when the
/// integrating measure is a probability measure, so the densities are first
/// re-expressed against the normalized base measure.
pub fn l2_bound(p: &Distribution, q: &Distribution) -> Result<f64> {
    let total = p.space.total_weight();
    weighted_sum(p, q, |a, b| a * b).map(|s| (s * total).sqrt())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InequalityChain {
    pub omega: f64,
    pub fidelity: f64,
    pub l2_bound: f64,
    pub delta: f64,
    pub hellinger_sq: f64,
    pub holds: bool,
}

/// Evaluates `ω ≤ F ≤ L2` and `δ ≥ H² ≥ 1 − L2` for a pair of distributions.
pub fn inequality_chain(p: &Distribution, q: &Distribution) -> Result<InequalityChain> {
    let omega = overlap(p, q)?;
    let fidelity = fidelity(p, q)?;
    let l2 = l2_bound(p, q)?;
    let delta = total_variation(p, q)?;
    let h = hellinger(p, q)?;
    let hellinger_sq = h * h;
    let holds = omega <= fidelity + CHAIN_SLACK
        && fidelity <= l2 + CHAIN_SLACK
        && hellinger_sq <= delta + CHAIN_SLACK
        && 1.0 - l2 <= hellinger_sq + CHAIN_SLACK;
    Ok(InequalityChain {
        omega,
        fidelity,
        l2_bound: l2,
        delta,
        hellinger_sq,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n: usize) -> Arc<OnticSpace> {
        Arc::new(OnticSpace::indexed(n).unwrap())
    }

    fn dist(s: &Arc<OnticSpace>, m: &[f64]) -> Distribution {
        Distribution::from_masses(s.clone(), m).unwrap()
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(OnticSpace::counting(["a", "a"]).is_err());
        assert!(OnticSpace::new(vec!["a".into()], vec![0.0]).is_err());
        assert!(OnticSpace::new(vec!["a".into()], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn rejects_unnormalized_density() {
        let s = space(2);
        let err = Distribution::new(s.clone(), vec![0.5, 0.4]).unwrap_err();
        assert!(err.to_string().contains("normalization"));
        assert!(Distribution::new(s, vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn functionals_on_hand_examples() {
        let s = space(2);
        let u = dist(&s, &[0.5, 0.5]);
        let a = dist(&s, &[1.0, 0.0]);
        let b = dist(&s, &[0.0, 1.0]);

        assert_eq!(total_variation(&u, &u).unwrap(), 0.0);
        assert_eq!(total_variation(&a, &b).unwrap(), 1.0);
        assert!((total_variation(&u, &a).unwrap() - 0.5).abs() < 1e-15);

        assert_eq!(overlap(&u, &u).unwrap(), 1.0);
        assert_eq!(overlap(&a, &b).unwrap(), 0.0);
        assert!((overlap(&u, &a).unwrap() - 0.5).abs() < 1e-15);

        assert_eq!(hellinger(&u, &u).unwrap(), 0.0);
        assert!((hellinger(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        let h = hellinger(&u, &a).unwrap();
        assert!((h * h - (1.0 - 0.5f64.sqrt())).abs() < 1e-12);

        assert!((fidelity(&u, &u).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity(&a, &b).unwrap(), 0.0);
        assert!((fidelity(&u, &a).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn chain_on_trivial_pairs() {
        let s = space(4);
        let u = dist(&s, &[0.25; 4]);
        let c = inequality_chain(&u, &u).unwrap();
        assert!((c.omega - 1.0).abs() < 1e-15);
        assert!((c.fidelity - 1.0).abs() < 1e-15);
        assert!((c.l2_bound - 1.0).abs() < 1e-15);
        assert!(c.holds);

        let a = dist(&s, &[0.5, 0.5, 0.0, 0.0]);
        let b = dist(&s, &[0.0, 0.0, 0.5, 0.5]);
        let c = inequality_chain(&a, &b).unwrap();
        assert_eq!((c.omega, c.fidelity, c.l2_bound), (0.0, 0.0, 0.0));
        assert!(c.holds);
    }

    #[test]
    fn mismatched_spaces_error() {
        let a = dist(&space(2), &[0.5, 0.5]);
        let b = dist(&space(3), &[0.5, 0.25, 0.25]);
        assert!(matches!(total_variation(&a, &b), Err(Error::DistinctSpaces)));
        assert!(matches!(overlap(&a, &b), Err(Error::DistinctSpaces)));
        assert!(matches!(hellinger(&a, &b), Err(Error::DistinctSpaces)));
        assert!(matches!(fidelity(&a, &b), Err(Error::DistinctSpaces)));
        assert!(matches!(inequality_chain(&a, &b), Err(Error::DistinctSpaces)));
    }

    #[test]
    fn structurally_equal_spaces_are_compatible() {
        let a = dist(&space(2), &[0.5, 0.5]);
        let b = dist(&space(2), &[1.0, 0.0]);
        assert!((total_variation(&a, &b).unwrap() - 0.5).abs() < 1e-15);
    }
}
