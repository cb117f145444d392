//! Small-dimension pure states and Born probabilities for the two-qubit
//! preclusion experiment.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amplitudes: Vec<Complex64>,
}

impl Ket {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::UnnormalizedKet(norm));
        }
        Ok(Self { amplitudes })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self::from_real(&[1.0, 0.0]).unwrap()
    }

    pub fn one() -> Self {
        Self::from_real(&[0.0, 1.0]).unwrap()
    }

    pub fn plus() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_real(&[r, r]).unwrap()
    }

    pub fn minus() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_real(&[r, -r]).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Ket) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// `a ⊗ b` with amplitudes in lexicographic order of the basis labels.
pub fn tensor(a: &Ket, b: &Ket) -> Ket {
    let amplitudes = a
        .amplitudes
        .iter()
        .flat_map(|x| b.amplitudes.iter().map(move |y| x * y))
        .collect();
    Ket { amplitudes }
}

fn combine(terms: &[(f64, &Ket)]) -> Ket {
    let dim = terms[0].1.dim();
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
    for (c, k) in terms {
        for (acc, a) in amplitudes.iter_mut().zip(&k.amplitudes) {
            *acc += a * c;
        }
    }
    Ket { amplitudes }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    kets: Vec<Ket>,
}

impl MeasurementBasis {
    pub fn new(kets: Vec<Ket>) -> Result<Self> {
        let dim = kets.first().map(Ket::dim).unwrap_or(0);
        if kets.len() != dim || dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: kets.len(),
            });
        }
        for (i, a) in kets.iter().enumerate() {
            if a.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.dim(),
                });
            }
            for (j, b) in kets.iter().enumerate().skip(i + 1) {
                if a.inner(b)?.norm() > STATE_TOL {
                    return Err(Error::NotOrthogonal(i, j));
                }
            }
        }
        Ok(Self { kets })
    }

    pub fn dim(&self) -> usize {
        self.kets.len()
    }

    pub fn kets(&self) -> &[Ket] {
        &self.kets
    }
}

/// The entangled basis `ξ1..ξ4` whose every element is orthogonal to one of
/// the four product preparations.
pub fn pbr_basis() -> MeasurementBasis {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (k0, k1, kp, km) = (Ket::zero(), Ket::one(), Ket::plus(), Ket::minus());
    let xi1 = combine(&[(r, &tensor(&k0, &k1)), (r, &tensor(&k1, &k0))]);
    let xi2 = combine(&[(r, &tensor(&k0, &km)), (r, &tensor(&k1, &kp))]);
    let xi3 = combine(&[(r, &tensor(&kp, &k1)), (r, &tensor(&km, &k0))]);
    let xi4 = combine(&[(r, &tensor(&kp, &km)), (r, &tensor(&km, &kp))]);
    MeasurementBasis::new(vec![xi1, xi2, xi3, xi4]).expect("ξ basis is orthonormal")
}

/// Preparation choice for one subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PrepLabel {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "+")]
    Plus,
}

impl PrepLabel {
    pub const ALL: [PrepLabel; 2] = [PrepLabel::Zero, PrepLabel::Plus];

    pub fn ket(self) -> Ket {
        match self {
            PrepLabel::Zero => Ket::zero(),
            PrepLabel::Plus => Ket::plus(),
        }
    }

    pub fn index(self) -> usize {
        match self {
            PrepLabel::Zero => 0,
            PrepLabel::Plus => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            PrepLabel::Zero
        } else {
            PrepLabel::Plus
        }
    }

    pub fn flip(self) -> Self {
        match self {
            PrepLabel::Zero => PrepLabel::Plus,
            PrepLabel::Plus => PrepLabel::Zero,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PrepLabel::Zero => "0",
            PrepLabel::Plus => "+",
        }
    }
}

impl fmt::Display for PrepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PrepLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" => Ok(PrepLabel::Zero),
            "+" => Ok(PrepLabel::Plus),
            other => Err(Error::UnknownLabel(other.to_owned())),
        }
    }
}

/// Product preparation `|x⟩_A |y⟩_B`.
pub fn product_prep(x: PrepLabel, y: PrepLabel) -> Ket {
    tensor(&x.ket(), &y.ket())
}

/// Like [`product_prep`] but parsing the labels `"0"` and `"+"`.
pub fn product_prep_str(x: &str, y: &str) -> Result<Ket> {
    Ok(product_prep(x.parse()?, y.parse()?))
}

/// The four joint preparations in the fixed order `00, 0+, +0, ++`.
pub fn pbr_preparations() -> [(PrepLabel, PrepLabel); 4] {
    use PrepLabel::*;
    [(Zero, Zero), (Zero, Plus), (Plus, Zero), (Plus, Plus)]
}

/// Born probabilities `|⟨ξ_k|prep⟩|²` for each basis element.
pub fn born_row(prep: &Ket, basis: &MeasurementBasis) -> Result<Vec<f64>> {
    if prep.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: prep.dim(),
        });
    }
    basis
        .kets
        .iter()
        .map(|xi| xi.inner(prep).map(|c| c.norm_sqr()))
        .collect()
}

/// Born rows for the four product preparations against the ξ basis.
pub fn pbr_born_table() -> [[f64; 4]; 4] {
    let basis = pbr_basis();
    let mut table = [[0.0; 4]; 4];
    for (row, (x, y)) in table.iter_mut().zip(pbr_preparations()) {
        let probs = born_row(&product_prep(x, y), &basis).expect("dimension 4");
        row.copy_from_slice(&probs);
    }
    table
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OverlapCheck {
    pub ok: bool,
    pub magnitude: f64,
}

/// Whether `|⟨φ|ψ⟩| ≤ 1/√2`, the regime covered by a four-outcome preclusion
/// experiment on two copies.
pub fn pair_overlap_ok(psi: &Ket, phi: &Ket) -> Result<OverlapCheck> {
    let magnitude = phi.inner(psi)?.norm();
    Ok(OverlapCheck {
        ok: magnitude <= std::f64::consts::FRAC_1_SQRT_2 + STATE_TOL,
        magnitude,
    })
}
