//! The N-system guessing game.
//!
//! Each of `N` subsystems is prepared in `|0⟩` or `|+⟩` with equal
//! probability. Given the ontic state, the player guesses `0` for subsystem
//! `α` whenever `μ̄^α_0(λ) ≥ μ̄^α_+(λ)`, where `μ̄^α_x` is the density of the
//! equal mixture of all preparations with `α` in state `x`, taken against
//! the mixture of all preparations. A referee picks one subsystem uniformly
//! at random and the guess for it is scored.
//!
//! Draw order per trial, from one ChaCha8 stream per block of
//! [`BLOCK_TRIALS`] trials (stream id = block index, seed = run seed):
//! `N` preparation bits in subsystem order, then the atom, then the
//! referee's pick.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measures::{overlap, Distribution, OnticSpace};
use crate::models::{preclusion_table, Experiment, PreparationGrid};
use crate::quantum::PrepLabel;

pub const BLOCK_TRIALS: u64 = 4096;

/// Largest subsystem count for which the preparation/atom tables are enumerated.
pub const MAX_ENUMERABLE: usize = 12;

/// `2^{1/3} + 2^{-2/3}`, the leading-order coefficient of the extendibility bound.
pub fn leading_coefficient() -> f64 {
    2f64.powf(1.0 / 3.0) + 2f64.powf(-2.0 / 3.0)
}

/// An N-subsystem ontic model with a finite atom set.
pub trait GameModel: Sync {
    fn subsystems(&self) -> usize;

    fn atom_count(&self) -> usize;

    fn atom_label(&self, atom: usize) -> String;

    /// `P_prep(atom)`.
    fn probability(&self, prep: &[PrepLabel], atom: usize) -> f64;

    fn sample(&self, prep: &[PrepLabel], rng: &mut dyn RngCore) -> usize;

    /// The ε for which every pair of subsystems has an ε-precluding
    /// four-outcome experiment.
    fn pairwise_epsilon(&self) -> f64;

    /// Density of `P̄^α_x` with respect to the equal mixture of all
    /// preparations; zero where the mixture vanishes.
    fn marginal_density(&self, alpha: usize, x: PrepLabel, atom: usize) -> f64 {
        let n = self.subsystems();
        let mut all = 0.0;
        let mut with_x = 0.0;
        for prep in all_preparations(n) {
            let p = self.probability(&prep, atom);
            all += p;
            if prep[alpha] == x {
                with_x += p;
            }
        }
        if all > 0.0 {
            // P̄^α_x / P̄ with P̄ averaging 2^N terms and P̄^α_x averaging 2^{N-1}.
            2.0 * with_x / all
        } else {
            0.0
        }
    }
}

/// All `2^n` preparation vectors, subsystem 0 as the most significant bit.
pub fn all_preparations(n: usize) -> impl Iterator<Item = Vec<PrepLabel>> {
    (0u64..1 << n).map(move |bits| {
        (0..n)
            .map(|a| PrepLabel::from_index(((bits >> (n - 1 - a)) & 1) as usize))
            .collect()
    })
}

/// The guess for subsystem `alpha` given ontic state `atom`; ties go to `0`.
pub fn strategy_guess(model: &dyn GameModel, atom: usize, alpha: usize) -> Result<PrepLabel> {
    if alpha >= model.subsystems() || atom >= model.atom_count() {
        return Err(Error::OutsideSupport(atom));
    }
    let d0 = model.marginal_density(alpha, PrepLabel::Zero, atom);
    let dp = model.marginal_density(alpha, PrepLabel::Plus, atom);
    if d0 <= 0.0 && dp <= 0.0 {
        return Err(Error::OutsideSupport(atom));
    }
    Ok(if d0 >= dp { PrepLabel::Zero } else { PrepLabel::Plus })
}

/// Family in which the ontic state reveals every preparation except at most one.
///
/// Atoms are label strings over `{0, +, ?}` with at most one `?`. A
/// preparation yields its own fully labeled atom with probability
/// `determinism`; otherwise a uniformly chosen position is replaced by `?`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSlackModel {
    n: usize,
    determinism: f64,
}

enum SlackAtom {
    Full(u64),
    /// Bits with the hidden position cleared, and that position.
    Hidden(u64, usize),
}

impl OneSlackModel {
    pub fn new(n: usize, determinism: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("one-slack model needs N >= 2, got {n}")));
        }
        if n > 40 {
            return Err(Error::Domain(format!("N = {n} is too large")));
        }
        if !(0.0..=1.0).contains(&determinism) {
            return Err(Error::Domain(format!("determinism {determinism} outside [0,1]")));
        }
        Ok(Self { n, determinism })
    }

    pub fn determinism(&self) -> f64 {
        self.determinism
    }

    /// Analytic probability that the referee's subsystem is guessed correctly.
    pub fn analytic_p_correct(&self) -> f64 {
        1.0 - (1.0 - self.determinism) / (2.0 * self.n as f64)
    }

    // Bit `n-1-a` of a label vector holds subsystem `a`, 1 meaning `+`.
    fn bit(&self, a: usize) -> u64 {
        1 << (self.n - 1 - a)
    }

    fn bits_of(&self, prep: &[PrepLabel]) -> u64 {
        prep.iter()
            .enumerate()
            .filter(|(_, l)| **l == PrepLabel::Plus)
            .fold(0, |acc, (a, _)| acc | self.bit(a))
    }

    fn decode(&self, atom: usize) -> SlackAtom {
        let full = 1usize << self.n;
        if atom < full {
            return SlackAtom::Full(atom as u64);
        }
        let half = 1usize << (self.n - 1);
        let rest = atom - full;
        let j = rest / half;
        let r = (rest % half) as u64;
        // Re-insert a zero at subsystem j's bit position.
        let pos = self.n - 1 - j;
        let low = r & ((1 << pos) - 1);
        let high = (r >> pos) << (pos + 1);
        SlackAtom::Hidden(high | low, j)
    }

    fn encode_hidden(&self, bits: u64, j: usize) -> usize {
        let pos = self.n - 1 - j;
        let low = bits & ((1 << pos) - 1);
        let high = (bits >> (pos + 1)) << pos;
        (1usize << self.n) + j * (1usize << (self.n - 1)) + (high | low) as usize
    }
}

impl GameModel for OneSlackModel {
    fn subsystems(&self) -> usize {
        self.n
    }

    fn atom_count(&self) -> usize {
        (1usize << self.n) + self.n * (1usize << (self.n - 1))
    }

    fn atom_label(&self, atom: usize) -> String {
        let (bits, hidden) = match self.decode(atom) {
            SlackAtom::Full(b) => (b, None),
            SlackAtom::Hidden(b, j) => (b, Some(j)),
        };
        (0..self.n)
            .map(|a| {
                if hidden == Some(a) {
                    '?'
                } else if bits & self.bit(a) != 0 {
                    '+'
                } else {
                    '0'
                }
            })
            .collect()
    }

    fn probability(&self, prep: &[PrepLabel], atom: usize) -> f64 {
        let p = self.bits_of(prep);
        match self.decode(atom) {
            SlackAtom::Full(b) => {
                if b == p {
                    self.determinism
                } else {
                    0.0
                }
            }
            SlackAtom::Hidden(b, j) => {
                if b == p & !self.bit(j) {
                    (1.0 - self.determinism) / self.n as f64
                } else {
                    0.0
                }
            }
        }
    }

    fn sample(&self, prep: &[PrepLabel], rng: &mut dyn RngCore) -> usize {
        let bits = self.bits_of(prep);
        if rng.gen::<f64>() < self.determinism {
            bits as usize
        } else {
            let j = rng.gen_range(0..self.n);
            self.encode_hidden(bits, j)
        }
    }

    fn pairwise_epsilon(&self) -> f64 {
        0.0
    }

    fn marginal_density(&self, alpha: usize, x: PrepLabel, atom: usize) -> f64 {
        let matches = |bits: u64| (bits & self.bit(alpha) != 0) == (x == PrepLabel::Plus);
        match self.decode(atom) {
            SlackAtom::Full(b) => {
                if self.determinism > 0.0 && matches(b) {
                    2.0
                } else {
                    0.0
                }
            }
            SlackAtom::Hidden(b, j) => {
                if self.determinism >= 1.0 {
                    0.0
                } else if j == alpha {
                    1.0
                } else if matches(b) {
                    2.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Two-subsystem game on a 2×2 preparation grid (labels ordered `0`, `+`).
#[derive(Debug, Clone)]
pub struct GridGameModel {
    grid: PreparationGrid,
    epsilon: f64,
    cumulative: Vec<Vec<f64>>,
}

impl GridGameModel {
    /// Uses the preclusion ε that `experiment` achieves on the grid.
    pub fn new(grid: PreparationGrid, experiment: &Experiment) -> Result<Self> {
        if grid.shape() != (2, 2) {
            return Err(Error::InvalidGrid("guessing game needs a 2x2 grid".into()));
        }
        let epsilon = preclusion_table(&grid, experiment)?.epsilon;
        let cumulative = grid
            .distributions()
            .iter()
            .map(|d| {
                d.masses()
                    .into_iter()
                    .scan(0.0, |acc, m| {
                        *acc += m;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            grid,
            epsilon,
            cumulative,
        })
    }

    pub fn grid(&self) -> &PreparationGrid {
        &self.grid
    }

    fn cell(prep: &[PrepLabel]) -> usize {
        prep[0].index() * 2 + prep[1].index()
    }
}

impl GameModel for GridGameModel {
    fn subsystems(&self) -> usize {
        2
    }

    fn atom_count(&self) -> usize {
        self.grid.space().len()
    }

    fn atom_label(&self, atom: usize) -> String {
        self.grid.space().atom(atom).to_owned()
    }

    fn probability(&self, prep: &[PrepLabel], atom: usize) -> f64 {
        self.grid.distributions()[Self::cell(prep)].mass(atom)
    }

    fn sample(&self, prep: &[PrepLabel], rng: &mut dyn RngCore) -> usize {
        let cdf = &self.cumulative[Self::cell(prep)];
        let u = rng.gen::<f64>() * cdf.last().copied().unwrap_or(1.0);
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        // Skip zero-mass atoms that share the cumulative value.
        let mass = |i: usize| self.probability(prep, i);
        (idx..cdf.len()).find(|&i| mass(i) > 0.0).unwrap_or(idx)
    }

    fn pairwise_epsilon(&self) -> f64 {
        self.epsilon
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GameResult {
    pub subsystems: usize,
    pub trials: u64,
    pub seed: u64,
    pub correct_per_subsystem: Vec<u64>,
    pub referee_correct: u64,
    /// Fraction of trials in which the referee's subsystem was guessed correctly.
    pub p_correct: f64,
    pub std_error: f64,
    /// Mean fraction of all subsystems guessed correctly.
    pub mean_correct_fraction: f64,
    pub more_than_one_incorrect: u64,
}

#[derive(Default)]
struct Tally {
    per_subsystem: Vec<u64>,
    referee: u64,
    multi_wrong: u64,
    pair_both_wrong: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        if self.per_subsystem.is_empty() {
            self.per_subsystem = other.per_subsystem;
        } else {
            for (a, b) in self.per_subsystem.iter_mut().zip(other.per_subsystem) {
                *a += b;
            }
        }
        self.referee += other.referee;
        self.multi_wrong += other.multi_wrong;
        self.pair_both_wrong += other.pair_both_wrong;
        self
    }
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn run_blocks(
    model: &dyn GameModel,
    trials: u64,
    seed: u64,
    pair: Option<(usize, usize)>,
) -> Result<Tally> {
    let n = model.subsystems();
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let tallies = (0..blocks)
        .into_par_iter()
        .map(|block| -> Result<Tally> {
            let mut rng = block_rng(seed, block);
            let count = BLOCK_TRIALS.min(trials - block * BLOCK_TRIALS);
            let mut t = Tally {
                per_subsystem: vec![0; n],
                ..Default::default()
            };
            let mut prep = vec![PrepLabel::Zero; n];
            for _ in 0..count {
                for p in prep.iter_mut() {
                    *p = if rng.gen::<bool>() { PrepLabel::Plus } else { PrepLabel::Zero };
                }
                let atom = model.sample(&prep, &mut rng);
                let referee = rng.gen_range(0..n);
                match pair {
                    None => {
                        let mut wrong = 0;
                        for a in 0..n {
                            if strategy_guess(model, atom, a)? == prep[a] {
                                t.per_subsystem[a] += 1;
                                if a == referee {
                                    t.referee += 1;
                                }
                            } else {
                                wrong += 1;
                            }
                        }
                        if wrong > 1 {
                            t.multi_wrong += 1;
                        }
                    }
                    Some((a, b)) => {
                        if strategy_guess(model, atom, a)? != prep[a]
                            && strategy_guess(model, atom, b)? != prep[b]
                        {
                            t.pair_both_wrong += 1;
                        }
                    }
                }
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(tallies.into_iter().fold(Tally::default(), Tally::merge))
}

/// Monte Carlo estimate of the game value for the density-comparison strategy.
pub fn simulate_game(model: &dyn GameModel, trials: u64, seed: u64) -> Result<GameResult> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let n = model.subsystems();
    let t = run_blocks(model, trials, seed, None)?;
    let p = t.referee as f64 / trials as f64;
    let total_correct: u64 = t.per_subsystem.iter().sum();
    Ok(GameResult {
        subsystems: n,
        trials,
        seed,
        correct_per_subsystem: t.per_subsystem,
        referee_correct: t.referee,
        p_correct: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        mean_correct_fraction: total_correct as f64 / (trials as f64 * n as f64),
        more_than_one_incorrect: t.multi_wrong,
    })
}

fn require_enumerable(model: &dyn GameModel) -> Result<()> {
    if model.subsystems() > MAX_ENUMERABLE {
        return Err(Error::Domain(format!(
            "N = {} exceeds the enumeration limit {MAX_ENUMERABLE}",
            model.subsystems()
        )));
    }
    Ok(())
}

/// Grid of pair mixtures `P̄^{αβ}_{xy}` over the model's atoms.
pub fn pair_grid(model: &dyn GameModel, alpha: usize, beta: usize) -> Result<PreparationGrid> {
    require_enumerable(model)?;
    let n = model.subsystems();
    if alpha >= n || beta >= n || alpha == beta {
        return Err(Error::Domain(format!("invalid pair ({alpha}, {beta})")));
    }
    let atoms = model.atom_count();
    let space = Arc::new(OnticSpace::counting((0..atoms).map(|i| model.atom_label(i)))?);
    let mut masses = vec![vec![0.0; atoms]; 4];
    let share = 1.0 / (1u64 << (n - 2)) as f64;
    for prep in all_preparations(n) {
        let cell = prep[alpha].index() * 2 + prep[beta].index();
        for (atom, m) in masses[cell].iter_mut().enumerate() {
            *m += share * model.probability(&prep, atom);
        }
    }
    let dists = masses
        .iter()
        .map(|m| Distribution::from_masses(space.clone(), m))
        .collect::<Result<Vec<_>>>()?;
    PreparationGrid::binary(dists.try_into().expect("four cells"))
}

/// Deterministic four-outcome experiment on a pair grid: each atom answers the
/// outcome of the first pair preparation (order `00, 0+, +0, ++`) with least
/// mass there.
pub fn canonical_pair_experiment(grid: &PreparationGrid) -> Result<Experiment> {
    let assignment: Vec<usize> = (0..grid.space().len())
        .map(|atom| {
            grid.distributions()
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |(bi, bv), (i, d)| {
                    let m = d.mass(atom);
                    if m < bv {
                        (i, m)
                    } else {
                        (bi, bv)
                    }
                })
                .0
        })
        .collect();
    Experiment::deterministic(
        "pair",
        ["not00", "not0+", "not+0", "not++"].map(String::from).to_vec(),
        &assignment,
    )
}

/// Worst preclusion ε over all pairs achieved by [`canonical_pair_experiment`].
pub fn measured_pairwise_epsilon(model: &dyn GameModel) -> Result<f64> {
    let n = model.subsystems();
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let g = pair_grid(model, a, b)?;
            let e = canonical_pair_experiment(&g)?;
            worst = worst.max(preclusion_table(&g, &e)?.epsilon);
        }
    }
    Ok(worst)
}

/// Subsystems whose preparation is not fixed by `atom`: some two preparations
/// charging the atom disagree on them.
pub fn undetermined_subsystems(model: &dyn GameModel, atom: usize) -> Result<Vec<usize>> {
    require_enumerable(model)?;
    let n = model.subsystems();
    let compatible: Vec<Vec<PrepLabel>> = all_preparations(n)
        .filter(|p| model.probability(p, atom) > 0.0)
        .collect();
    Ok((0..n)
        .filter(|&a| compatible.iter().any(|p| p[a] != compatible[0][a]))
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct PairIncorrectReport {
    pub alpha: usize,
    pub beta: usize,
    pub trials: u64,
    pub seed: u64,
    pub both_incorrect: u64,
    pub estimate: f64,
    pub std_error: f64,
    /// Exact probability of two wrong guesses, by enumeration.
    pub exact: f64,
    pub omega_00_pp: f64,
    pub omega_0p_p0: f64,
    pub epsilon: f64,
    /// `2√ε`, the pairwise bound used in the game argument.
    pub two_sqrt_epsilon: f64,
    /// `2√(4ε)`, the distance theorem instantiated at four outcomes.
    pub theorem2_fidelity_bound: f64,
    pub estimate_within_overlap: bool,
    pub overlap_within_bound: bool,
    pub pass: bool,
}

/// Estimates the probability that both members of a pair are guessed wrong and
/// compares it with the critical overlaps of the pair mixtures.
pub fn pair_incorrect_check(
    model: &dyn GameModel,
    alpha: usize,
    beta: usize,
    trials: u64,
    seed: u64,
) -> Result<PairIncorrectReport> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let grid = pair_grid(model, alpha, beta)?;
    let omega_00_pp = overlap(grid.get(0, 0), grid.get(1, 1))?;
    let omega_0p_p0 = overlap(grid.get(0, 1), grid.get(1, 0))?;

    let n = model.subsystems();
    let mut exact = 0.0;
    let weight = 1.0 / (1u64 << n) as f64;
    for prep in all_preparations(n) {
        for atom in 0..model.atom_count() {
            let p = model.probability(&prep, atom);
            if p > 0.0
                && strategy_guess(model, atom, alpha)? != prep[alpha]
                && strategy_guess(model, atom, beta)? != prep[beta]
            {
                exact += weight * p;
            }
        }
    }

    let t = run_blocks(model, trials, seed, Some((alpha, beta)))?;
    let estimate = t.pair_both_wrong as f64 / trials as f64;
    let std_error = (estimate * (1.0 - estimate) / trials as f64).sqrt();
    let epsilon = model.pairwise_epsilon();
    let two_sqrt_epsilon = 2.0 * epsilon.sqrt();
    let omega = omega_00_pp.max(omega_0p_p0);
    let estimate_within_overlap = estimate <= omega + 3.0 * std_error + 1e-12;
    let overlap_within_bound = omega <= two_sqrt_epsilon + 1e-12;
    Ok(PairIncorrectReport {
        alpha,
        beta,
        trials,
        seed,
        both_incorrect: t.pair_both_wrong,
        estimate,
        std_error,
        exact,
        omega_00_pp,
        omega_0p_p0,
        epsilon,
        two_sqrt_epsilon,
        theorem2_fidelity_bound: 2.0 * (4.0 * epsilon).sqrt(),
        estimate_within_overlap,
        overlap_within_bound,
        pass: estimate_within_overlap && overlap_within_bound,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PerfectCaseBounds {
    pub subsystems: usize,
    pub expected_correct_lb: f64,
    pub p_correct_lb: f64,
}

/// Game bounds under perfect pairwise preclusion: `N − 1/2` and `1 − 1/(2N)`.
pub fn perfect_case_bounds(n: usize) -> Result<PerfectCaseBounds> {
    if n < 1 {
        return Err(Error::Domain("N must be at least 1".into()));
    }
    let nf = n as f64;
    Ok(PerfectCaseBounds {
        subsystems: n,
        expected_correct_lb: nf - 0.5,
        p_correct_lb: 1.0 - 1.0 / (2.0 * nf),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EpsilonCaseBounds {
    pub subsystems: usize,
    pub epsilon: f64,
    pub p_more_than_one_incorrect_ub: f64,
    pub expected_correct_lb: f64,
    pub p_correct_lb: f64,
}

/// Game bounds under pairwise ε-preclusion.
pub fn epsilon_case_bounds(n: usize, epsilon: f64) -> Result<EpsilonCaseBounds> {
    if n < 2 {
        return Err(Error::Domain("N must be at least 2".into()));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("ε = {epsilon} must be non-negative")));
    }
    let nf = n as f64;
    let s = epsilon.sqrt();
    let multi = nf * (nf - 1.0) * s;
    Ok(EpsilonCaseBounds {
        subsystems: n,
        epsilon,
        p_more_than_one_incorrect_ub: multi,
        expected_correct_lb: (nf - 1.0) * (1.0 - multi),
        p_correct_lb: 1.0 - 1.0 / nf - (nf - 1.0).powi(2) * s,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExtendibilityBound {
    pub epsilon: f64,
    /// Largest `N` with `2 N³ √ε ≤ 1`.
    pub n_epsilon: u64,
    pub exact_bound: f64,
    pub leading_order_bound: f64,
}

/// Largest integer `N ≥ 0` with `2 N³ √ε ≤ 1`.
pub fn n_epsilon(epsilon: f64) -> u64 {
    let s = epsilon.sqrt();
    let fits = |n: u64| 2.0 * (n as f64).powi(3) * s <= 1.0;
    let mut n = (1.0 / (2.0 * s)).cbrt().floor().max(0.0) as u64;
    while n > 0 && !fits(n) {
        n -= 1;
    }
    while fits(n + 1) {
        n += 1;
    }
    n
}

/// Lower bound on the game value that holds for every `N` once the
/// composite can always be extended.
pub fn extendibility_bound(epsilon: f64) -> Result<ExtendibilityBound> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("ε = {epsilon} must be positive")));
    }
    let e6 = epsilon.powf(1.0 / 6.0);
    let c13 = 2f64.powf(1.0 / 3.0);
    let denom = 1.0 - c13 * e6;
    if denom <= 0.0 {
        return Err(Error::Domain(format!(
            "ε = {epsilon} puts 1 − 2^(1/3) ε^(1/6) at or below zero"
        )));
    }
    let c23 = 2f64.powf(-2.0 / 3.0);
    Ok(ExtendibilityBound {
        epsilon,
        n_epsilon: n_epsilon(epsilon),
        exact_bound: 1.0 - (c13 / denom + c23) * e6,
        leading_order_bound: 1.0 - leading_coefficient() * e6,
    })
}
