//! Independence conditions on preparation grids and the bounds they imply.
//!
//! The uninformativeness condition requires, at every atom,
//! `μ_ab(λ) μ_xy(λ) = μ_xb(λ) μ_ay(λ)` for all labels `a, x` and `b, y`.
//! On a finite space conditioning on an atom is exact, so posteriors are
//! evaluated directly at atoms rather than through a limit of shrinking sets.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{fidelity, hellinger, overlap, total_variation, Distribution, OnticSpace};
use crate::models::{preclusion_table, uniform_mixture, validate_priors, Experiment, PreparationGrid};

/// Tolerance used when the uninformativeness condition is a precondition.
pub const PUC_TOL: f64 = 1e-10;
/// An outcome probability at or below this counts as strictly precluded.
pub const PRECLUSION_ZERO_TOL: f64 = 1e-12;
/// Slack for the distance bounds in [`theorem2_check`].
pub const THEOREM2_SLACK: f64 = 1e-9;
/// Default slack of a [`BoundReport`].
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct PosteriorReport {
    pub atom: String,
    pub x_labels: Vec<String>,
    pub y_labels: Vec<String>,
    /// `joint[a][b] = P̄(A_a B_b | λ)`
    pub joint: Vec<Vec<f64>>,
    pub marg_a: Vec<f64>,
    pub marg_b: Vec<f64>,
    /// `max |joint − marg_a · marg_b|`
    pub factorization_gap: f64,
}

/// Beliefs about the two preparation labels after learning the ontic state is `atom`.
pub fn posterior(
    grid: &PreparationGrid,
    priors_x: &[f64],
    priors_y: &[f64],
    atom: usize,
) -> Result<PosteriorReport> {
    let (nx, ny) = grid.shape();
    validate_priors(priors_x, nx, "x")?;
    validate_priors(priors_y, ny, "y")?;
    if atom >= grid.space().len() {
        return Err(Error::UnknownLabel(atom.to_string()));
    }
    let mut joint = vec![vec![0.0; ny]; nx];
    let mut total = 0.0;
    for ((i, j), d) in grid.cells() {
        let v = priors_x[i] * priors_y[j] * d.density_at(atom);
        joint[i][j] = v;
        total += v;
    }
    if total <= 0.0 {
        return Err(Error::ZeroMixtureMass(grid.space().atom(atom).to_owned()));
    }
    for row in &mut joint {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    let marg_a: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
    let marg_b: Vec<f64> = (0..ny).map(|j| joint.iter().map(|row| row[j]).sum()).collect();
    let mut gap: f64 = 0.0;
    for (i, row) in joint.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            gap = gap.max((v - marg_a[i] * marg_b[j]).abs());
        }
    }
    Ok(PosteriorReport {
        atom: grid.space().atom(atom).to_owned(),
        x_labels: grid.x_labels().to_vec(),
        y_labels: grid.y_labels().to_vec(),
        joint,
        marg_a,
        marg_b,
        factorization_gap: gap,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PucViolation {
    pub atom: String,
    pub atom_index: usize,
    /// Labels `(a, b, x, y)` of the worst residual `μ_ab μ_xy − μ_xb μ_ay`.
    pub labels: [String; 4],
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PucReport {
    pub holds: bool,
    pub tolerance: f64,
    pub worst_residual: f64,
    pub worst: Option<PucViolation>,
}

/// Checks `|μ_ab μ_xy − μ_xb μ_ay| ≤ tol` at every atom and every label choice.
pub fn puc_check(grid: &PreparationGrid, tol: f64) -> PucReport {
    let (nx, ny) = grid.shape();
    let mut worst_residual = 0.0;
    let mut worst = None;
    for atom in 0..grid.space().len() {
        for a in 0..nx {
            for x in 0..nx {
                for b in 0..ny {
                    for y in 0..ny {
                        let r = (grid.density(a, b, atom) * grid.density(x, y, atom)
                            - grid.density(x, b, atom) * grid.density(a, y, atom))
                        .abs();
                        if r > worst_residual {
                            worst_residual = r;
                            worst = Some((atom, [a, b, x, y]));
                        }
                    }
                }
            }
        }
    }
    let worst = worst.map(|(atom, [a, b, x, y])| PucViolation {
        atom: grid.space().atom(atom).to_owned(),
        atom_index: atom,
        labels: [
            grid.x_labels()[a].clone(),
            grid.y_labels()[b].clone(),
            grid.x_labels()[x].clone(),
            grid.y_labels()[y].clone(),
        ],
        residual: worst_residual,
    });
    PucReport {
        holds: worst_residual <= tol,
        tolerance: tol,
        worst_residual,
        worst,
    }
}

/// Cartesian structure recovered from atom labels of the form `"(a,b)"`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductStructure {
    pub a_labels: Vec<String>,
    pub b_labels: Vec<String>,
    /// `(a index, b index)` of every atom.
    pub cells: Vec<(usize, usize)>,
}

fn parse_pair(label: &str) -> Option<(&str, &str)> {
    let inner = label.trim().strip_prefix('(')?.strip_suffix(')')?;
    let (a, b) = inner.split_once(',')?;
    Some((a.trim(), b.trim()))
}

/// Recovers the product structure of a space, which must be the full
/// Cartesian product of its component labels.
pub fn product_structure(space: &OnticSpace) -> Result<ProductStructure> {
    let mut a_labels: Vec<String> = Vec::new();
    let mut b_labels: Vec<String> = Vec::new();
    let mut cells = Vec::with_capacity(space.len());
    for atom in space.atoms() {
        let (a, b) = parse_pair(atom)
            .ok_or_else(|| Error::NotProductLabeled(format!("atom `{atom}` is not of the form (a,b)")))?;
        let ia = a_labels.iter().position(|l| l == a).unwrap_or_else(|| {
            a_labels.push(a.to_owned());
            a_labels.len() - 1
        });
        let ib = b_labels.iter().position(|l| l == b).unwrap_or_else(|| {
            b_labels.push(b.to_owned());
            b_labels.len() - 1
        });
        cells.push((ia, ib));
    }
    if a_labels.len() * b_labels.len() != space.len() {
        return Err(Error::NotProductLabeled(format!(
            "{} atoms do not form the full {}x{} product",
            space.len(),
            a_labels.len(),
            b_labels.len()
        )));
    }
    Ok(ProductStructure {
        a_labels,
        b_labels,
        cells,
    })
}

/// Product of two spaces with atoms labeled `"(a,b)"` in `a`-major order and
/// product base weights.
pub fn product_space(a: &OnticSpace, b: &OnticSpace) -> Result<OnticSpace> {
    let mut atoms = Vec::with_capacity(a.len() * b.len());
    let mut weights = Vec::with_capacity(a.len() * b.len());
    for (la, wa) in a.atoms().iter().zip(a.base_weights()) {
        for (lb, wb) in b.atoms().iter().zip(b.base_weights()) {
            atoms.push(format!("({la},{lb})"));
            weights.push(wa * wb);
        }
    }
    OnticSpace::new(atoms, weights)
}

/// Product distribution `P ⊗ Q` on `space`, which must be `product_space(P, Q)`.
pub fn product_distribution(space: &Arc<OnticSpace>, p: &Distribution, q: &Distribution) -> Result<Distribution> {
    if space.len() != p.space().len() * q.space().len() {
        return Err(Error::DimensionMismatch {
            expected: space.len(),
            found: p.space().len() * q.space().len(),
        });
    }
    let density = p
        .density()
        .iter()
        .flat_map(|a| q.density().iter().map(move |b| a * b))
        .collect();
    Distribution::new(space.clone(), density)
}

/// Grid of product distributions `P^A_x ⊗ P^B_y`.
pub fn product_grid(
    a_dists: &[Distribution],
    b_dists: &[Distribution],
    x_labels: Vec<String>,
    y_labels: Vec<String>,
) -> Result<PreparationGrid> {
    let first_a = a_dists.first().ok_or_else(|| Error::InvalidGrid("no A distributions".into()))?;
    let first_b = b_dists.first().ok_or_else(|| Error::InvalidGrid("no B distributions".into()))?;
    let space = Arc::new(product_space(first_a.space(), first_b.space())?);
    let mut dists = Vec::new();
    for p in a_dists {
        for q in b_dists {
            if !p.same_space(first_a) || !q.same_space(first_b) {
                return Err(Error::DistinctSpaces);
            }
            dists.push(product_distribution(&space, p, q)?);
        }
    }
    PreparationGrid::new(x_labels, y_labels, dists)
}

#[derive(Debug, Clone, Serialize)]
pub struct NcaEntry {
    pub preparation: String,
    pub worst_residual: f64,
    pub worst_atom: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct NcaReport {
    pub holds: bool,
    pub tolerance: f64,
    pub entries: Vec<NcaEntry>,
}

/// Checks whether every preparation distribution equals the product of its
/// own marginals on a product-labeled space.
pub fn nca_check(grid: &PreparationGrid, tol: f64) -> Result<NcaReport> {
    let ps = product_structure(grid.space())?;
    let mut entries = Vec::new();
    for (key, d) in grid.keys().into_iter().zip(grid.distributions()) {
        let mut ma = vec![0.0; ps.a_labels.len()];
        let mut mb = vec![0.0; ps.b_labels.len()];
        for (i, &(a, b)) in ps.cells.iter().enumerate() {
            ma[a] += d.mass(i);
            mb[b] += d.mass(i);
        }
        let (worst_residual, worst_atom) = ps
            .cells
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| ((d.mass(i) - ma[a] * mb[b]).abs(), i))
            .fold((0.0, 0), |acc, cur| if cur.0 > acc.0 { cur } else { acc });
        entries.push(NcaEntry {
            preparation: key,
            worst_residual,
            worst_atom: grid.space().atom(worst_atom).to_owned(),
        });
    }
    Ok(NcaReport {
        holds: entries.iter().all(|e| e.worst_residual <= tol),
        tolerance: tol,
        entries,
    })
}

/// Knobs for [`generate_puc_quadruple_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PucGeneratorOptions {
    /// Probability that any single field value is zeroed.
    pub zero_fraction: f64,
    /// Use one field per side, making all four distributions equal.
    pub shared_fields: bool,
    /// At every atom scale one of the four fields by `leak`, which makes the
    /// critical pairs `(00, ++)` and `(0+, +0)` disjoint when `leak == 0`.
    pub critical_disjoint: bool,
    pub leak: f64,
    /// Draw base weights from `[0.5, 2)` instead of unit weights.
    pub random_weights: bool,
}

impl Default for PucGeneratorOptions {
    fn default() -> Self {
        Self {
            zero_fraction: 0.25,
            shared_fields: false,
            critical_disjoint: false,
            leak: 0.0,
            random_weights: true,
        }
    }
}

/// A 2×2 grid satisfying the uninformativeness condition exactly, plus the
/// per-atom field that was scaled in critical-disjoint mode.
#[derive(Debug, Clone)]
pub struct GeneratedQuadruple {
    pub grid: PreparationGrid,
    /// In critical-disjoint mode: which of `a_0, a_+, b_0, b_+` was scaled at each atom.
    pub suppressed: Vec<usize>,
}

/// Random 2×2 grid with `puc_check` residual at rounding level.
pub fn generate_puc_quadruple(seed: u64, n: usize) -> Result<PreparationGrid> {
    generate_puc_quadruple_with(seed, n, &PucGeneratorOptions::default()).map(|g| g.grid)
}

/// Samples pointwise rank-one fields `a_x(λ) b_y(λ)`, repairs the
/// compatibility `Z_00 Z_++ = Z_0+ Z_+0` of their totals by rescaling `a_0` on
/// a random sub-region, then normalizes each `(x, y)` by `1/Z_xy`.
pub fn generate_puc_quadruple_with(
    seed: u64,
    n: usize,
    opts: &PucGeneratorOptions,
) -> Result<GeneratedQuadruple> {
    if n < 2 {
        return Err(Error::Domain(format!("space size {n} < 2")));
    }
    if !(0.0..1.0).contains(&opts.zero_fraction) || !(0.0..=1.0).contains(&opts.leak) {
        return Err(Error::Domain("generator fractions outside [0,1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10_000 {
        let weights: Vec<f64> = (0..n)
            .map(|_| if opts.random_weights { rng.gen_range(0.5..2.0) } else { 1.0 })
            .collect();
        let field = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    if rng.gen::<f64>() < opts.zero_fraction {
                        0.0
                    } else {
                        rng.gen::<f64>()
                    }
                })
                .collect()
        };
        // fields[0] = a_0, [1] = a_+, [2] = b_0, [3] = b_+
        let mut fields = [field(&mut rng), field(&mut rng), field(&mut rng), field(&mut rng)];
        if opts.shared_fields {
            fields[1] = fields[0].clone();
            fields[3] = fields[2].clone();
        }
        let mut suppressed = Vec::new();
        if opts.critical_disjoint {
            for i in 0..n {
                let f = rng.gen_range(0..4);
                fields[f][i] *= opts.leak;
                suppressed.push(f);
            }
        }
        let totals = |fields: &[Vec<f64>; 4], region: Option<&[bool]>| -> [f64; 4] {
            let mut z = [0.0; 4];
            for (xi, a) in [0, 1].into_iter().enumerate() {
                for (yi, b) in [2, 3].into_iter().enumerate() {
                    z[xi * 2 + yi] = (0..n)
                        .filter(|&i| region.is_none_or(|r| r[i]))
                        .map(|i| fields[a][i] * fields[b][i] * weights[i])
                        .sum();
                }
            }
            z
        };
        let z = totals(&fields, None);
        if z.iter().any(|&v| v <= 0.0) {
            continue;
        }
        if !opts.shared_fields {
            let region: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let zr = totals(&fields, Some(&region));
            // Only Z_00 and Z_0+ depend on a_0.
            let out00 = z[0] - zr[0];
            let out0p = z[1] - zr[1];
            let denom = zr[0] * z[3] - zr[1] * z[2];
            let t = (out0p * z[2] - out00 * z[3]) / denom;
            if !t.is_finite() || t <= 0.0 {
                continue;
            }
            for i in 0..n {
                if region[i] {
                    fields[0][i] *= t;
                }
            }
        }
        let z = totals(&fields, None);
        if z.iter().any(|&v| v <= 0.0) {
            continue;
        }
        let space = Arc::new(OnticSpace::new(
            (0..n).map(|i| i.to_string()).collect(),
            weights.clone(),
        )?);
        let mut dists = Vec::with_capacity(4);
        for (xi, a) in [0, 1].into_iter().enumerate() {
            for (yi, b) in [2, 3].into_iter().enumerate() {
                let zxy = z[xi * 2 + yi];
                let density = (0..n).map(|i| fields[a][i] * fields[b][i] / zxy).collect();
                dists.push(Distribution::new(space.clone(), density)?);
            }
        }
        let grid = PreparationGrid::binary(dists.try_into().expect("four distributions"))?;
        if !puc_check(&grid, PUC_TOL).holds {
            continue;
        }
        return Ok(GeneratedQuadruple { grid, suppressed });
    }
    Err(Error::Domain(format!("no feasible quadruple found for seed {seed}")))
}

/// Deterministic experiment aligned with a critical-disjoint quadruple: at each
/// atom it answers the outcome precluded by a preparation whose field was
/// suppressed there.
pub fn aligned_experiment(generated: &GeneratedQuadruple) -> Result<Experiment> {
    // Suppressing a_0 kills 00 and 0+, a_+ kills +0 and ++, b_0 kills 00
    // and +0, b_+ kills 0+ and ++. Outcome k is the one precluded by prep k
    // (order 00, 0+, +0, ++).
    let assignment: Vec<usize> = generated
        .suppressed
        .iter()
        .map(|&f| match f {
            0 => 0,
            1 => 3,
            2 => 2,
            _ => 1,
        })
        .collect();
    if assignment.len() != generated.grid.space().len() {
        return Err(Error::Domain("quadruple was not generated in critical-disjoint mode".into()));
    }
    Experiment::deterministic(
        "aligned",
        ["not00", "not0+", "not+0", "not++"].map(String::from).to_vec(),
        &assignment,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    Holds,
    Violated,
    Inapplicable,
}

/// One inequality `lhs ≤ rhs` with `slack = rhs − lhs`.
#[derive(Debug, Clone, Serialize)]
pub struct Inequality {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub check: String,
    pub status: BoundStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub tolerance: f64,
    pub m: Option<usize>,
    pub epsilon: Option<f64>,
    pub inequalities: Vec<Inequality>,
}

impl BoundReport {
    fn new(check: &str, tolerance: f64) -> Self {
        Self {
            check: check.to_owned(),
            status: BoundStatus::Holds,
            reason: None,
            tolerance,
            m: None,
            epsilon: None,
            inequalities: Vec::new(),
        }
    }

    fn inapplicable(mut self, reason: impl Into<String>) -> Self {
        self.status = BoundStatus::Inapplicable;
        self.reason = Some(reason.into());
        self
    }

    /// Records `lhs ≤ rhs`.
    fn le(&mut self, name: impl Into<String>, lhs: f64, rhs: f64) {
        let slack = rhs - lhs;
        let holds = slack >= -self.tolerance;
        if !holds {
            self.status = BoundStatus::Violated;
        }
        self.inequalities.push(Inequality {
            name: name.into(),
            lhs,
            rhs,
            slack,
            holds,
        });
    }

    pub fn holds(&self) -> bool {
        self.status == BoundStatus::Holds
    }

    pub fn applicable(&self) -> bool {
        self.status != BoundStatus::Inapplicable
    }

    pub fn min_slack(&self) -> f64 {
        self.inequalities.iter().map(|i| i.slack).fold(f64::INFINITY, f64::min)
    }
}

fn require_binary(grid: &PreparationGrid) -> Result<()> {
    if grid.shape() != (2, 2) {
        return Err(Error::InvalidGrid(format!(
            "expected a 2x2 grid, found {:?}",
            grid.shape()
        )));
    }
    Ok(())
}

/// Perfect preclusion plus the uninformativeness condition force both
/// critical pairs to have null overlap.
pub fn theorem1_check(grid: &PreparationGrid, experiment: &Experiment) -> Result<BoundReport> {
    require_binary(grid)?;
    let table = preclusion_table(grid, experiment)?;
    let mut report = BoundReport::new("theorem1", BOUND_SLACK);
    report.m = Some(table.outcome_count());
    report.epsilon = Some(table.epsilon);
    if table.epsilon > PRECLUSION_ZERO_TOL {
        return Ok(report.inapplicable(format!(
            "experiment `{}` only achieves ε = {:e}",
            experiment.name(),
            table.epsilon
        )));
    }
    let puc = puc_check(grid, PUC_TOL);
    if !puc.holds {
        return Ok(report.inapplicable(format!(
            "uninformativeness fails (residual {:e})",
            puc.worst_residual
        )));
    }
    let (l00, lpp, l0p, lp0) = (grid.get(0, 0), grid.get(1, 1), grid.get(0, 1), grid.get(1, 0));
    report.le("overlap(P00,P++)", overlap(l00, lpp)?, 0.0);
    report.le("overlap(P0+,P+0)", overlap(l0p, lp0)?, 0.0);
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SharedAtomExhaustion {
    pub outcomes: usize,
    pub shared_atoms: Vec<String>,
    pub assignments_examined: usize,
    /// Assignments `(atom → outcome)` that would still let that outcome be
    /// precluded by some preparation.
    pub compatible_assignments: usize,
    /// True when the grid has a shared atom and no assignment is compatible,
    /// so no deterministic `m`-outcome experiment precludes every preparation.
    pub impossible: bool,
}

/// Exhausts outcome assignments on atoms charged by all four preparations:
/// whichever outcome such an atom yields, that outcome gets positive
/// probability under every preparation and cannot be precluded.
pub fn exhaust_shared_atom_preclusion(grid: &PreparationGrid, m: usize) -> SharedAtomExhaustion {
    let n = grid.space().len();
    let shared: Vec<usize> = (0..n)
        .filter(|&i| grid.distributions().iter().all(|d| d.mass(i) > 0.0))
        .collect();
    let mut examined = 0;
    let mut compatible = 0;
    for &atom in &shared {
        for _k in 0..m {
            examined += 1;
            // Outcome k collects at least mass(atom) under every preparation.
            let precludable = grid
                .distributions()
                .iter()
                .any(|d| d.mass(atom) <= PRECLUSION_ZERO_TOL);
            if precludable {
                compatible += 1;
            }
        }
    }
    SharedAtomExhaustion {
        outcomes: m,
        shared_atoms: shared.iter().map(|&i| grid.space().atom(i).to_owned()).collect(),
        assignments_examined: examined,
        compatible_assignments: compatible,
        impossible: !shared.is_empty() && compatible == 0,
    }
}

/// Distance bounds from ε-preclusion under the uninformativeness condition:
/// `δ ≥ H² ≥ 1 − 2√(mε)` for both critical pairs.
pub fn theorem2_check(grid: &PreparationGrid, experiment: &Experiment) -> Result<BoundReport> {
    require_binary(grid)?;
    let mut report = BoundReport::new("theorem2", THEOREM2_SLACK);
    let table = preclusion_table(grid, experiment)?;
    let m = table.outcome_count();
    let eps = table.epsilon;
    report.m = Some(m);
    report.epsilon = Some(eps);
    let puc = puc_check(grid, PUC_TOL);
    if !puc.holds {
        return Ok(report.inapplicable(format!(
            "uninformativeness fails (residual {:e})",
            puc.worst_residual
        )));
    }
    let bound = 1.0 - 2.0 * (m as f64 * eps).sqrt();
    let mix = uniform_mixture(grid)?;
    for (name, p, q) in [
        ("(P00,P++)", grid.get(0, 0), grid.get(1, 1)),
        ("(P0+,P+0)", grid.get(0, 1), grid.get(1, 0)),
    ] {
        // ∫ μ_p μ_q dP̄ with densities against the equal-weight mixture.
        let product_integral: f64 = (0..grid.space().len())
            .filter(|&i| mix.mass(i) > 0.0)
            .map(|i| p.mass(i) * q.mass(i) / mix.mass(i))
            .sum();
        report.le(
            format!("integral mu*mu dPbar {name} <= 4 m eps"),
            product_integral,
            4.0 * m as f64 * eps,
        );
        let h = hellinger(p, q)?;
        let delta = total_variation(p, q)?;
        report.le(format!("H^2 {name} <= delta"), h * h, delta);
        report.le(format!("1 - 2 sqrt(m eps) <= H^2 {name}"), bound, h * h);
    }
    Ok(report)
}

/// Overlap bound for a product model built from subsystem distributions:
/// `ω_A ω_B ≤ m ε`, and `δ_A ≥ 1 − √(m ε)` when the subsystem overlaps agree.
/// For the four-outcome experiment these read `ω_A ω_B ≤ 4ε` and `δ ≥ 1 − 2√ε`.
pub fn pip_bound_check(
    a: [&Distribution; 2],
    b: [&Distribution; 2],
    experiment: &Experiment,
) -> Result<BoundReport> {
    let labels = || vec!["0".to_owned(), "+".to_owned()];
    let grid = product_grid(&[a[0].clone(), a[1].clone()], &[b[0].clone(), b[1].clone()], labels(), labels())?;
    let table = preclusion_table(&grid, experiment)?;
    let m = table.outcome_count() as f64;
    let eps = table.epsilon;
    let mut report = BoundReport::new("pip_bound", BOUND_SLACK);
    report.m = Some(table.outcome_count());
    report.epsilon = Some(eps);
    let omega_a = overlap(a[0], a[1])?;
    let omega_b = overlap(b[0], b[1])?;
    report.le("omega_A * omega_B <= m eps", omega_a * omega_b, m * eps);
    if (omega_a - omega_b).abs() <= BOUND_SLACK {
        let delta_a = total_variation(a[0], a[1])?;
        report.le("1 - sqrt(m eps) <= delta_A", 1.0 - (m * eps).sqrt(), delta_a);
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct CorollaryReport {
    pub report: BoundReport,
    pub epsilons: Vec<f64>,
    pub lower_bounds: Vec<f64>,
    /// Largest lower bound on `δ(P00, P++)` over the sequence.
    pub limiting_lower_bound: f64,
}

/// Runs [`theorem2_check`] along a sequence of models and experiments with
/// shrinking preclusion ε and collects the implied lower bounds on the
/// critical distances.
pub fn corollary_check(sequence: &[(PreparationGrid, Experiment)]) -> Result<CorollaryReport> {
    let mut report = BoundReport::new("corollary", THEOREM2_SLACK);
    let mut epsilons = Vec::new();
    let mut lower_bounds = Vec::new();
    for (idx, (grid, experiment)) in sequence.iter().enumerate() {
        let t2 = theorem2_check(grid, experiment)?;
        if !t2.applicable() {
            return Ok(CorollaryReport {
                report: report.inapplicable(format!(
                    "element {idx}: {}",
                    t2.reason.unwrap_or_default()
                )),
                epsilons,
                lower_bounds,
                limiting_lower_bound: f64::NAN,
            });
        }
        let m = t2.m.unwrap_or(0) as f64;
        let eps = t2.epsilon.unwrap_or(f64::NAN);
        let bound = 1.0 - 2.0 * (m * eps).sqrt();
        let delta = total_variation(grid.get(0, 0), grid.get(1, 1))?;
        report.le(format!("[{idx}] 1 - 2 sqrt(m eps) <= delta(P00,P++)"), bound, delta);
        let delta2 = total_variation(grid.get(0, 1), grid.get(1, 0))?;
        report.le(format!("[{idx}] 1 - 2 sqrt(m eps) <= delta(P0+,P+0)"), bound, delta2);
        epsilons.push(eps);
        lower_bounds.push(bound);
    }
    report.m = sequence.first().map(|(_, e)| e.outcome_count());
    report.epsilon = epsilons.iter().copied().reduce(f64::min);
    let limiting_lower_bound = lower_bounds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(CorollaryReport {
        report,
        epsilons,
        lower_bounds,
        limiting_lower_bound,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AtomDetermination {
    pub atom: String,
    /// Preparations `"x,y"` with positive mass at the atom.
    pub compatible: Vec<String>,
    pub a_determined: Option<String>,
    pub b_determined: Option<String>,
}

impl AtomDetermination {
    pub fn charged(&self) -> bool {
        !self.compatible.is_empty()
    }

    pub fn determines_either(&self) -> bool {
        self.a_determined.is_some() || self.b_determined.is_some()
    }
}

/// For each atom, whether it pins down the A label, the B label, or both.
/// Atoms carrying no mass determine nothing.
pub fn determination_map(grid: &PreparationGrid) -> Vec<AtomDetermination> {
    let keys = grid.keys();
    (0..grid.space().len())
        .map(|atom| {
            let positive: Vec<(usize, usize)> = grid
                .cells()
                .filter(|(_, d)| d.mass(atom) > 0.0)
                .map(|(ij, _)| ij)
                .collect();
            let unique = |f: fn(&(usize, usize)) -> usize| -> Option<usize> {
                let first = f(positive.first()?);
                positive.iter().all(|c| f(c) == first).then_some(first)
            };
            let ny = grid.y_labels().len();
            AtomDetermination {
                atom: grid.space().atom(atom).to_owned(),
                compatible: positive.iter().map(|&(i, j)| keys[i * ny + j].clone()).collect(),
                a_determined: unique(|c| c.0).map(|i| grid.x_labels()[i].clone()),
                b_determined: unique(|c| c.1).map(|j| grid.y_labels()[j].clone()),
            }
        })
        .collect()
}

/// `F(P00, P++)` and `F(P0+, P+0)`.
pub fn critical_fidelities(grid: &PreparationGrid) -> Result<(f64, f64)> {
    require_binary(grid)?;
    Ok((
        fidelity(grid.get(0, 0), grid.get(1, 1))?,
        fidelity(grid.get(0, 1), grid.get(1, 0))?,
    ))
}
