//! Four boxes and a ball per subsystem.
//!
//! Each subsystem's ontic state is the box (1 to 4) holding its ball, so the
//! joint space has sixteen atoms `(a,b)`. The search enumerates every
//! preparation distribution that is uniform over its support and reproduces,
//! in exact rational arithmetic, both subsystem marginals and the Born
//! probabilities of the entangled measurement under a fixed deterministic
//! response partition. Quadruples are kept when they satisfy PUC exactly.

use std::sync::Arc;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::independence::{nca_check, product_structure, puc_check, theorem1_check, PUC_TOL};
use crate::measures::{total_variation, Distribution, OnticSpace};
use crate::models::{quantum_consistency, Experiment, OntologicalModel, PreparationGrid, QuantumTarget};
use crate::quantum::{pbr_basis, pbr_born_table, pbr_preparations, product_prep, PrepLabel};

pub const BOXES: usize = 4;
pub const CELLS: usize = BOXES * BOXES;

/// Atom index of ball positions `(a, b)`, both 1-based.
pub fn cell_index(a: usize, b: usize) -> usize {
    (a - 1) * BOXES + (b - 1)
}

/// Ball positions `(a, b)` of an atom index, both 1-based.
pub fn cell_position(index: usize) -> (usize, usize) {
    (index / BOXES + 1, index % BOXES + 1)
}

pub fn box_space() -> Arc<OnticSpace> {
    let labels = (0..CELLS).map(|i| {
        let (a, b) = cell_position(i);
        format!("({a},{b})")
    });
    Arc::new(OnticSpace::counting(labels).expect("sixteen distinct labels"))
}

/// Outcome index (0 to 3) the response partition assigns to atom `(a,b)`.
pub fn partition_outcome(index: usize) -> usize {
    let (a, b) = cell_position(index);
    match (a >= 3, b >= 3) {
        (true, true) => 0,
        (true, false) => 1,
        (false, true) => 2,
        (false, false) => 3,
    }
}

pub fn response_partition() -> Experiment {
    let assignment: Vec<usize> = (0..CELLS).map(partition_outcome).collect();
    Experiment::deterministic(
        "response-partition",
        ["xi1", "xi2", "xi3", "xi4"].map(String::from).to_vec(),
        &assignment,
    )
    .expect("valid partition")
}

/// Box probabilities for one subsystem prepared in `x`.
pub fn marginal_targets(x: PrepLabel) -> [Rational64; 4] {
    let r = |n, d| Rational64::new(n, d);
    match x {
        PrepLabel::Zero => [r(1, 2), r(1, 4), r(1, 4), r(0, 1)],
        PrepLabel::Plus => [r(0, 1), r(1, 4), r(1, 4), r(1, 2)],
    }
}

/// Nearest fraction with denominator at most `max_den` within `1e-12`.
pub fn rationalize(x: f64, max_den: i64) -> Option<Rational64> {
    (1..=max_den).find_map(|d| {
        let n = (x * d as f64).round();
        ((n / d as f64 - x).abs() < 1e-12).then(|| Rational64::new(n as i64, d))
    })
}

/// Born rows for `00, 0+, +0, ++` as exact fractions.
pub fn born_targets() -> [[Rational64; 4]; 4] {
    let table = pbr_born_table();
    let mut out = [[Rational64::zero(); 4]; 4];
    for (row, probs) in out.iter_mut().zip(table) {
        for (slot, p) in row.iter_mut().zip(probs) {
            *slot = rationalize(p, 64).expect("Born probabilities are dyadic");
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SearchOptions {
    /// Keep only quadruples where `P00` overlaps both `P0+` and `P+0`.
    pub require_nca_violation: bool,
    /// Keep only quadruples where `P00` and `P++` overlap.
    pub require_critical_overlap: bool,
    /// If some preparation has no uniform-support solution, fall back to
    /// masses in multiples of 1/8.
    pub rational_fallback: bool,
}

/// One preparation's distribution with exact masses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrepCandidate {
    /// Bit `i` set iff atom `i` has positive mass.
    pub support: u16,
    pub masses: [Rational64; CELLS],
}

impl PrepCandidate {
    fn uniform(support: u16) -> Self {
        let k = support.count_ones() as i64;
        let mut masses = [Rational64::zero(); CELLS];
        for (i, m) in masses.iter_mut().enumerate() {
            if support >> i & 1 == 1 {
                *m = Rational64::new(1, k);
            }
        }
        Self { support, masses }
    }

    fn from_masses(masses: [Rational64; CELLS]) -> Self {
        let support = (0..CELLS)
            .filter(|&i| masses[i] > Rational64::zero())
            .fold(0u16, |s, i| s | 1 << i);
        Self { support, masses }
    }

    pub fn cells(&self) -> Vec<(usize, usize)> {
        (0..CELLS)
            .filter(|&i| self.support >> i & 1 == 1)
            .map(cell_position)
            .collect()
    }

    pub fn is_uniform(&self) -> bool {
        let k = self.support.count_ones() as i64;
        k > 0
            && self
                .masses
                .iter()
                .all(|m| m.is_zero() || *m == Rational64::new(1, k))
    }

    fn sums(&self) -> ([Rational64; 4], [Rational64; 4], [Rational64; 4]) {
        let mut a = [Rational64::zero(); 4];
        let mut b = [Rational64::zero(); 4];
        let mut r = [Rational64::zero(); 4];
        for (i, m) in self.masses.iter().enumerate() {
            let (x, y) = cell_position(i);
            a[x - 1] += m;
            b[y - 1] += m;
            r[partition_outcome(i)] += m;
        }
        (a, b, r)
    }

    /// Whether marginals and region masses match the targets for `(x, y)`.
    pub fn matches(&self, x: PrepLabel, y: PrepLabel) -> bool {
        let (a, b, r) = self.sums();
        a == marginal_targets(x) && b == marginal_targets(y) && r == born_targets()[prep_slot(x, y)]
    }

    fn to_distribution(&self, space: &Arc<OnticSpace>) -> Distribution {
        let masses: Vec<f64> = self.masses.iter().map(|m| m.to_f64().unwrap_or(f64::NAN)).collect();
        Distribution::from_masses(space.clone(), &masses).expect("exact masses sum to one")
    }
}

fn prep_slot(x: PrepLabel, y: PrepLabel) -> usize {
    x.index() * 2 + y.index()
}

/// Uniform-support candidates for preparation `(x, y)`, ordered by bitmask.
pub fn uniform_candidates(x: PrepLabel, y: PrepLabel) -> Vec<PrepCandidate> {
    let ta = marginal_targets(x);
    let tb = marginal_targets(y);
    let tr = born_targets()[prep_slot(x, y)];
    // Every target times |S| must be an integer.
    let admissible = |k: i64| {
        ta.iter()
            .chain(&tb)
            .chain(&tr)
            .all(|t| (t * Rational64::from_integer(k)).is_integer())
    };
    (1u32..1 << CELLS)
        .into_par_iter()
        .filter(|&s| admissible(s.count_ones() as i64))
        .map(|s| PrepCandidate::uniform(s as u16))
        .filter(|c| c.matches(x, y))
        .collect()
}

/// Candidates whose masses are multiples of 1/8, ordered by mass vector.
pub fn eighths_candidates(x: PrepLabel, y: PrepLabel) -> Vec<PrepCandidate> {
    const DEN: i64 = 8;
    let to_counts = |t: [Rational64; 4]| -> Option<[i64; 4]> {
        let mut out = [0; 4];
        for (o, v) in out.iter_mut().zip(t) {
            let c = v * Rational64::from_integer(DEN);
            if !c.is_integer() {
                return None;
            }
            *o = c.to_integer();
        }
        Some(out)
    };
    let (Some(ra), Some(rb), Some(rr)) = (
        to_counts(marginal_targets(x)),
        to_counts(marginal_targets(y)),
        to_counts(born_targets()[prep_slot(x, y)]),
    ) else {
        return Vec::new();
    };

    fn fill(
        cell: usize,
        counts: &mut [i64; CELLS],
        rows: &mut [i64; 4],
        cols: &mut [i64; 4],
        regions: &mut [i64; 4],
        out: &mut Vec<[i64; CELLS]>,
    ) {
        if cell == CELLS {
            if rows.iter().chain(cols.iter()).chain(regions.iter()).all(|&c| c == 0) {
                out.push(*counts);
            }
            return;
        }
        let (a, b) = cell_position(cell);
        let reg = partition_outcome(cell);
        let cap = rows[a - 1].min(cols[b - 1]).min(regions[reg]);
        // A row is finished once its last cell is placed.
        for c in (0..=cap).rev() {
            if b == BOXES && rows[a - 1] != c {
                continue;
            }
            counts[cell] = c;
            rows[a - 1] -= c;
            cols[b - 1] -= c;
            regions[reg] -= c;
            fill(cell + 1, counts, rows, cols, regions, out);
            rows[a - 1] += c;
            cols[b - 1] += c;
            regions[reg] += c;
        }
        counts[cell] = 0;
    }

    let mut tables = Vec::new();
    let (mut rows, mut cols, mut regions) = (ra, rb, rr);
    fill(0, &mut [0; CELLS], &mut rows, &mut cols, &mut regions, &mut tables);
    tables.sort();
    tables
        .into_iter()
        .map(|t| PrepCandidate::from_masses(t.map(|c| Rational64::new(c, DEN))))
        .collect()
}

/// A quadruple `P00, P0+, P+0, P++` on the box space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyCandidate {
    pub preparations: [PrepCandidate; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExactChecks {
    pub marginals: bool,
    pub born_masses: bool,
    /// `μ00 μ++ = μ0+ μ+0` at every atom.
    pub puc: bool,
    /// Both sides of the PUC identity vanish at every atom.
    pub puc_both_sides_zero: bool,
    pub critical_pairs_disjoint: bool,
}

impl ExactChecks {
    pub fn all(&self) -> bool {
        self.marginals && self.born_masses && self.puc && self.puc_both_sides_zero && self.critical_pairs_disjoint
    }
}

impl ToyCandidate {
    pub fn supports(&self) -> [u16; 4] {
        self.preparations.each_ref().map(|p| p.support)
    }

    pub fn exact_checks(&self) -> ExactChecks {
        let [p00, p0p, pp0, ppp] = &self.preparations;
        let mut marginals = true;
        let mut born_masses = true;
        for ((x, y), p) in pbr_preparations().into_iter().zip(&self.preparations) {
            let (a, b, r) = p.sums();
            marginals &= a == marginal_targets(x) && b == marginal_targets(y);
            born_masses &= r == born_targets()[prep_slot(x, y)];
        }
        let mut puc = true;
        let mut zero = true;
        for i in 0..CELLS {
            let lhs = p00.masses[i] * ppp.masses[i];
            let rhs = p0p.masses[i] * pp0.masses[i];
            puc &= lhs == rhs;
            zero &= lhs.is_zero() && rhs.is_zero();
        }
        ExactChecks {
            marginals,
            born_masses,
            puc,
            puc_both_sides_zero: zero,
            critical_pairs_disjoint: p00.support & ppp.support == 0 && p0p.support & pp0.support == 0,
        }
    }

    pub fn grid(&self) -> PreparationGrid {
        let space = box_space();
        let dists = self.preparations.each_ref().map(|p| p.to_distribution(&space));
        PreparationGrid::binary(dists).expect("grid on one space")
    }

    pub fn model(&self) -> OntologicalModel {
        toy_ontological_model(self.grid())
    }

    /// Text rendering of the four supports, `#` for charged cells. Rows are
    /// the first ball's box, columns the second's.
    pub fn render(&self) -> String {
        render_supports(&self.supports())
    }
}

pub fn render_supports(supports: &[u16; 4]) -> String {
    let names = ["P(0,0)", "P(0,+)", "P(+,0)", "P(+,+)"];
    let mut out = String::new();
    out.push_str(&names.map(|n| format!("{n:<11}")).join(" ").trim_end());
    out.push('\n');
    for a in 1..=BOXES {
        let row: Vec<String> = supports
            .iter()
            .map(|s| {
                let cells: Vec<&str> = (1..=BOXES)
                    .map(|b| if s >> cell_index(a, b) & 1 == 1 { "#" } else { "." })
                    .collect();
                format!("{:<11}", cells.join(" "))
            })
            .collect();
        out.push_str(row.join(" ").trim_end());
        out.push('\n');
    }
    out
}

/// Model on the box space with the response partition and the product
/// quantum states as target.
pub fn toy_ontological_model(grid: PreparationGrid) -> OntologicalModel {
    let preps = pbr_preparations().map(|(x, y)| product_prep(x, y)).to_vec();
    OntologicalModel::new(
        grid,
        vec![response_partition()],
        Some(QuantumTarget {
            preps,
            basis: pbr_basis(),
        }),
    )
    .expect("toy model is well formed")
}

#[derive(Debug, Clone)]
pub struct ToySearch {
    pub options: SearchOptions,
    /// Candidates per preparation in `00, 0+, +0, ++` order.
    pub per_preparation: [Vec<PrepCandidate>; 4],
    pub fallback_used: [bool; 4],
    /// Accepted quadruples ordered lexicographically by support bitmasks.
    pub results: Vec<ToyCandidate>,
}

impl ToySearch {
    pub fn count(&self) -> usize {
        self.results.len()
    }

    pub fn models(&self) -> Vec<OntologicalModel> {
        self.results.iter().map(ToyCandidate::model).collect()
    }
}

pub fn search_toy_models(options: &SearchOptions) -> ToySearch {
    let mut fallback_used = [false; 4];
    let per_preparation: [Vec<PrepCandidate>; 4] = std::array::from_fn(|slot| {
        let (x, y) = pbr_preparations()[slot];
        let uniform = uniform_candidates(x, y);
        if uniform.is_empty() && options.rational_fallback {
            fallback_used[slot] = true;
            eighths_candidates(x, y)
        } else {
            uniform
        }
    });

    let [c00, c0p, cp0, cpp] = &per_preparation;
    let overlaps = |a: &PrepCandidate, b: &PrepCandidate| a.support & b.support != 0;
    let mut results: Vec<ToyCandidate> = c00
        .par_iter()
        .flat_map_iter(|p00| {
            cpp.iter().flat_map(move |ppp| {
                c0p.iter().flat_map(move |p0p| {
                    cp0.iter().filter_map(move |pp0| {
                        let cand = ToyCandidate {
                            preparations: [p00.clone(), p0p.clone(), pp0.clone(), ppp.clone()],
                        };
                        if !cand.exact_checks().puc {
                            return None;
                        }
                        if options.require_nca_violation && !(overlaps(p00, p0p) && overlaps(p00, pp0)) {
                            return None;
                        }
                        if options.require_critical_overlap && !overlaps(p00, ppp) {
                            return None;
                        }
                        Some(cand)
                    })
                })
            })
        })
        .collect();
    results.sort_by(|a, b| {
        a.supports()
            .cmp(&b.supports())
            .then_with(|| a.preparations.each_ref().map(|p| p.masses).cmp(&b.preparations.each_ref().map(|p| p.masses)))
    });
    ToySearch {
        options: *options,
        per_preparation,
        fallback_used,
        results,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Claim {
    pub claim: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AppendixReport {
    pub pass: bool,
    pub claims: Vec<Claim>,
}

impl AppendixReport {
    pub fn failed(&self) -> Vec<&str> {
        self.claims.iter().filter(|c| !c.pass).map(|c| c.claim.as_str()).collect()
    }
}

/// Checks, in order: product ontic space, quantum consistency, PUC, failure of
/// NCA, perfect distinguishability of both critical pairs, and the
/// preclusion theorem's conclusion. Uses the model's first experiment.
pub fn verify_appendix_claims(model: &OntologicalModel, tol: f64) -> Result<AppendixReport> {
    let grid = model.grid();
    if grid.shape() != (2, 2) {
        return Err(Error::InvalidGrid("appendix claims need a 2x2 grid".into()));
    }
    let experiment = model
        .experiments()
        .first()
        .ok_or_else(|| Error::UnknownLabel("model has no experiment".into()))?;
    let mut claims = Vec::new();
    let mut push = |claim: &str, pass: bool, detail: String| {
        claims.push(Claim {
            claim: claim.to_owned(),
            pass,
            detail,
        })
    };

    let product = product_structure(grid.space());
    push(
        "product ontic space",
        product.is_ok(),
        match &product {
            Ok(p) => format!("{} x {} atoms", p.a_labels.len(), p.b_labels.len()),
            Err(e) => e.to_string(),
        },
    );

    let consistency = quantum_consistency(model, tol)?;
    push(
        "quantum consistency",
        consistency.pass,
        format!("max deviation {:e}", consistency.max_deviation),
    );

    let puc = puc_check(grid, tol.max(PUC_TOL));
    push(
        "preparation uninformativeness",
        puc.holds,
        format!("worst residual {:e}", puc.worst_residual),
    );

    match nca_check(grid, tol) {
        Ok(nca) => {
            let worst = nca.entries.iter().map(|e| e.worst_residual).fold(0.0, f64::max);
            push("no-correlation violated", !nca.holds, format!("largest residual {worst:e}"));
        }
        Err(e) => push("no-correlation violated", false, e.to_string()),
    }

    for ((i, j), (k, l), name) in [
        ((0, 0), (1, 1), "00 and ++ perfectly distinguishable"),
        ((0, 1), (1, 0), "0+ and +0 perfectly distinguishable"),
    ] {
        let d = total_variation(grid.get(i, j), grid.get(k, l))?;
        push(name, (d - 1.0).abs() <= tol, format!("distance {d}"));
    }

    let t1 = theorem1_check(grid, experiment)?;
    push(
        "preclusion forces disjoint critical pairs",
        t1.holds(),
        t1.reason.clone().unwrap_or_else(|| format!("{:?}", t1.status)),
    );

    let pass = claims.iter().all(|c| c.pass);
    Ok(AppendixReport { pass, claims })
}

/// Product of independent single-ball states: `|0⟩` uniform on boxes 1 and 2,
/// `|+⟩` uniform on boxes 1 and 3.
pub fn spekkens_independent_model() -> OntologicalModel {
    let space = box_space();
    let boxes = |x: PrepLabel| -> [usize; 2] {
        match x {
            PrepLabel::Zero => [1, 2],
            PrepLabel::Plus => [1, 3],
        }
    };
    let dists = pbr_preparations().map(|(x, y)| {
        let cells: Vec<usize> = boxes(x)
            .iter()
            .flat_map(|&a| boxes(y).map(|b| cell_index(a, b)))
            .collect();
        Distribution::uniform_on(space.clone(), &cells).expect("nonempty support")
    });
    toy_ontological_model(PreparationGrid::binary(dists).expect("one space"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_regions() {
        assert_eq!(partition_outcome(cell_index(3, 4)), 0);
        assert_eq!(partition_outcome(cell_index(4, 1)), 1);
        assert_eq!(partition_outcome(cell_index(2, 3)), 2);
        assert_eq!(partition_outcome(cell_index(1, 2)), 3);
        assert_eq!(box_space().atom(cell_index(2, 3)), "(2,3)");
    }

    #[test]
    fn born_targets_are_quarters() {
        let q = |n| Rational64::new(n, 4);
        assert_eq!(born_targets()[0], [q(0), q(1), q(1), q(2)]);
        assert_eq!(born_targets()[3], [q(2), q(1), q(1), q(0)]);
    }

    #[test]
    fn rationalize_rejects_irrational() {
        assert_eq!(rationalize(0.375, 8), Some(Rational64::new(3, 8)));
        assert_eq!(rationalize(std::f64::consts::FRAC_1_SQRT_2, 64), None);
    }

    #[test]
    fn eighths_contain_uniform_solutions() {
        let (x, y) = (PrepLabel::Zero, PrepLabel::Zero);
        let eighths = eighths_candidates(x, y);
        assert!(eighths.iter().all(|c| c.matches(x, y)));
        for u in uniform_candidates(x, y) {
            assert!(eighths.contains(&u));
        }
        assert!(eighths.iter().any(|c| !c.is_uniform()));
    }

    #[test]
    fn render_marks_support() {
        let s = 1u16 << cell_index(1, 1) | 1 << cell_index(2, 2);
        let text = render_supports(&[s, 0, 0, 0]);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[1].starts_with("# . . ."));
        assert!(lines[2].starts_with(". # . ."));
    }
}
