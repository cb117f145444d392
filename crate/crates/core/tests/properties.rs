use std::sync::Arc;

use proptest::prelude::*;

use ontic_core::game::{
    epsilon_case_bounds, extendibility_bound, measured_pairwise_epsilon, n_epsilon, pair_grid, pair_incorrect_check,
    perfect_case_bounds, simulate_game, GameModel, OneSlackModel,
};
use ontic_core::independence::{
    generate_puc_quadruple, generate_puc_quadruple_with, aligned_experiment, posterior, puc_check,
    theorem2_check, PucGeneratorOptions, PUC_TOL,
};
use ontic_core::measures::*;
use ontic_core::model_file::{model_to_json, parse_model};
use ontic_core::models::{Experiment, PreparationGrid};
use ontic_core::quantum::{born_row, pbr_basis, Ket};
use ontic_core::OntologicalModel;

/// Weights in [0.25, 4) and two mass vectors on the same atoms, with some zeros.
fn space_and_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (2usize..=64).prop_flat_map(|n| {
        let mass = prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0f64..1.0], n);
        (prop::collection::vec(0.25f64..4.0, n), mass.clone(), mass)
    })
}

fn normalize(v: &[f64]) -> Option<Vec<f64>> {
    let t: f64 = v.iter().sum();
    (t > 0.0).then(|| v.iter().map(|x| x / t).collect())
}

fn build(weights: &[f64], p: &[f64], q: &[f64]) -> Option<(Distribution, Distribution)> {
    let (p, q) = (normalize(p)?, normalize(q)?);
    let space = Arc::new(OnticSpace::new((0..weights.len()).map(|i| format!("l{i}")).collect(), weights.to_vec()).ok()?);
    Some((
        Distribution::from_masses(space.clone(), &p).ok()?,
        Distribution::from_masses(space, &q).ok()?,
    ))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn functionals_match_mass_oracle((w, p, q) in space_and_pair()) {
        let Some((dp, dq)) = build(&w, &p, &q) else { return Ok(()); };
        let (mp, mq) = (dp.masses(), dq.masses());
        // On masses the functionals do not depend on the base measure.
        let tv: f64 = 0.5 * mp.iter().zip(&mq).map(|(a, b)| (a - b).abs()).sum::<f64>();
        let om: f64 = mp.iter().zip(&mq).map(|(a, b)| a.min(*b)).sum();
        let fid: f64 = mp.iter().zip(&mq).map(|(a, b)| (a * b).sqrt()).sum();
        prop_assert!((total_variation(&dp, &dq).unwrap() - tv).abs() < 1e-12);
        prop_assert!((overlap(&dp, &dq).unwrap() - om).abs() < 1e-12);
        prop_assert!((fidelity(&dp, &dq).unwrap() - fid).abs() < 1e-12);
        let h = hellinger(&dp, &dq).unwrap();
        prop_assert!((h * h - (1.0 - fid)).abs() < 1e-12);
        prop_assert!((tv + om - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chain_holds_and_is_symmetric((w, p, q) in space_and_pair()) {
        let Some((dp, dq)) = build(&w, &p, &q) else { return Ok(()); };
        let c = inequality_chain(&dp, &dq).unwrap();
        prop_assert!(c.holds);
        prop_assert!(c.omega <= c.fidelity + CHAIN_SLACK);
        prop_assert!(c.fidelity <= c.l2_bound + CHAIN_SLACK);
        prop_assert!(c.delta + CHAIN_SLACK >= c.hellinger_sq);
        prop_assert!(c.hellinger_sq + CHAIN_SLACK >= 1.0 - c.l2_bound);
        let r = inequality_chain(&dq, &dp).unwrap();
        prop_assert!((c.delta - r.delta).abs() < 1e-15 && (c.fidelity - r.fidelity).abs() < 1e-15);
    }

    #[test]
    fn rebasing_keeps_mass_functionals((w, p, q) in space_and_pair(), scale in 0.1f64..10.0) {
        let Some((dp, dq)) = build(&w, &p, &q) else { return Ok(()); };
        let other = Arc::new(dp.space().with_weights(w.iter().map(|x| x * scale).collect()).unwrap());
        let (rp, rq) = (dp.rebase(other.clone()).unwrap(), dq.rebase(other).unwrap());
        for (a, b) in [
            (total_variation(&dp, &dq).unwrap(), total_variation(&rp, &rq).unwrap()),
            (overlap(&dp, &dq).unwrap(), overlap(&rp, &rq).unwrap()),
            (fidelity(&dp, &dq).unwrap(), fidelity(&rp, &rq).unwrap()),
            (l2_bound(&dp, &dq).unwrap(), l2_bound(&rp, &rq).unwrap()),
        ] {
            prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn born_rows_are_probabilities(re in prop::collection::vec(-1.0f64..1.0, 8)) {
        let amps: Vec<num_complex::Complex64> =
            re.chunks(2).map(|c| num_complex::Complex64::new(c[0], c[1])).collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let ket = Ket::new(amps.iter().map(|a| a / norm).collect()).unwrap();
        let row = born_row(&ket, &pbr_basis()).unwrap();
        prop_assert!(row.iter().all(|&p| p >= 0.0));
        prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generated_quadruples_satisfy_puc_and_factorize(seed in any::<u64>(), n in 2usize..12) {
        let grid = generate_puc_quadruple(seed, n).unwrap();
        prop_assert!(puc_check(&grid, PUC_TOL).holds);
        for px in [0.1, 0.5, 0.8] {
            for py in [0.3, 0.6] {
                for atom in 0..n {
                    if let Ok(post) = posterior(&grid, &[px, 1.0 - px], &[py, 1.0 - py], atom) {
                        prop_assert!(post.factorization_gap <= 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn distance_bounds_under_approximate_preclusion(seed in any::<u64>(), n in 4usize..16, leak in 0.0f64..0.05) {
        let opts = PucGeneratorOptions { critical_disjoint: true, leak, ..Default::default() };
        let gen = generate_puc_quadruple_with(seed, n, &opts).unwrap();
        let exp = aligned_experiment(&gen).unwrap();
        let report = theorem2_check(&gen.grid, &exp).unwrap();
        prop_assert!(report.applicable());
        prop_assert!(report.min_slack() >= -1e-9, "{report:?}");
    }

    #[test]
    fn model_files_round_trip(seed in any::<u64>(), n in 2usize..8) {
        let grid = generate_puc_quadruple(seed, n).unwrap();
        let model = OntologicalModel::new(grid, vec![Experiment::uniform("flat", 3, n).unwrap()], None).unwrap();
        let text = model_to_json(&model);
        let again = parse_model(&text).unwrap();
        prop_assert_eq!(&text, &model_to_json(&again));
        for (a, b) in model.grid().distributions().iter().zip(again.grid().distributions()) {
            prop_assert_eq!(a.density(), b.density());
        }
    }

    #[test]
    fn n_epsilon_brackets(log_eps in -30.0f64..-0.7) {
        let eps = 10f64.powf(log_eps);
        let n = n_epsilon(eps) as f64;
        prop_assert!(2.0 * n.powi(3) * eps.sqrt() <= 1.0);
        prop_assert!(1.0 < 2.0 * (n + 1.0).powi(3) * eps.sqrt());
        if let Ok(b) = extendibility_bound(eps) {
            prop_assert!(b.exact_bound <= b.leading_order_bound);
        }
    }

    #[test]
    fn game_bounds_stay_below_one(n in 2usize..50, log_eps in -12.0f64..0.0) {
        let b = epsilon_case_bounds(n, 10f64.powf(log_eps)).unwrap();
        prop_assert!(b.p_correct_lb <= 1.0);
        prop_assert!(b.expected_correct_lb <= n as f64);
        let p = perfect_case_bounds(n).unwrap();
        let q = perfect_case_bounds(n + 1).unwrap();
        prop_assert!(q.p_correct_lb > p.p_correct_lb);
    }
}

#[test]
fn one_slack_matches_analytic_value_across_seeds() {
    for (n, alpha) in [(2, 0.5), (3, 0.0), (4, 0.25), (6, 0.9)] {
        let model = OneSlackModel::new(n, alpha).unwrap();
        let analytic = model.analytic_p_correct();
        let floor = epsilon_case_bounds(n, model.pairwise_epsilon()).unwrap().p_correct_lb;
        for seed in 0..5 {
            let r = simulate_game(&model, 20_000, seed).unwrap();
            assert!((r.p_correct - analytic).abs() <= 3.0 * r.std_error + 1e-12, "n={n} alpha={alpha} seed={seed}");
            assert!(r.p_correct >= floor - 3.0 * r.std_error);
            assert!((r.std_error - (r.p_correct * (1.0 - r.p_correct) / 20_000.0).sqrt()).abs() < 1e-15);
        }
    }
}

#[test]
fn one_slack_pairs_are_disjoint_and_uninformative() {
    for (n, alpha) in [(2, 0.0), (3, 0.4), (4, 1.0)] {
        let model = OneSlackModel::new(n, alpha).unwrap();
        assert_eq!(measured_pairwise_epsilon(&model).unwrap(), 0.0);
        for a in 0..n {
            for b in a + 1..n {
                let grid = pair_grid(&model, a, b).unwrap();
                assert!(puc_check(&grid, PUC_TOL).holds);
                assert_eq!(overlap(grid.get(0, 0), grid.get(1, 1)).unwrap(), 0.0);
                assert_eq!(overlap(grid.get(0, 1), grid.get(1, 0)).unwrap(), 0.0);
            }
        }
        let report = pair_incorrect_check(&model, 0, 1, 10_000, 5).unwrap();
        assert_eq!(report.both_incorrect, 0);
        assert_eq!(report.exact, 0.0);
        assert!(report.pass);
    }
}

#[test]
fn marginal_densities_integrate_to_one() {
    let model = OneSlackModel::new(4, 0.3).unwrap();
    let mix: Vec<f64> = (0..model.atom_count())
        .map(|atom| {
            ontic_core::game::all_preparations(4)
                .map(|p| model.probability(&p, atom))
                .sum::<f64>()
                / 16.0
        })
        .collect();
    for alpha in 0..4 {
        for x in ontic_core::quantum::PrepLabel::ALL {
            let total: f64 = (0..model.atom_count())
                .map(|atom| model.marginal_density(alpha, x, atom) * mix[atom])
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn leaky_toy_pair_check_respects_overlap() {
    // Two subsystems from a generated quadruple with small leakage: the
    // simulated double-miss rate must stay under the critical overlaps.
    use ontic_core::game::GridGameModel;
    let opts = PucGeneratorOptions {
        critical_disjoint: true,
        leak: 0.01,
        ..Default::default()
    };
    let gen = generate_puc_quadruple_with(3, 10, &opts).unwrap();
    let exp = aligned_experiment(&gen).unwrap();
    let model = GridGameModel::new(gen.grid.clone(), &exp).unwrap();
    let report = pair_incorrect_check(&model, 0, 1, 50_000, 9).unwrap();
    assert!(report.epsilon > 0.0);
    assert!(report.estimate_within_overlap, "{report:?}");
    assert!(report.overlap_within_bound, "{report:?}");
    assert!((report.estimate - report.exact).abs() <= 4.0 * report.std_error + 1e-9);
}

#[test]
fn grid_mixture_equals_pair_grid_for_two_subsystems() {
    let grid: PreparationGrid = generate_puc_quadruple(17, 6).unwrap();
    let exp = Experiment::uniform("flat", 4, 6).unwrap();
    let model = ontic_core::game::GridGameModel::new(grid.clone(), &exp).unwrap();
    let again = pair_grid(&model, 0, 1).unwrap();
    for (a, b) in grid.distributions().iter().zip(again.distributions()) {
        for (x, y) in a.masses().iter().zip(b.masses()) {
            assert!((x - y).abs() < 1e-15);
        }
    }
}
