use ontic_core::independence::{determination_map, puc_check, theorem1_check};
use ontic_core::measures::Distribution;
use ontic_core::models::{quantum_consistency, PreparationGrid};
use ontic_core::quantum::PrepLabel;
use ontic_core::toymodel::*;

/// Integer-count oracle: supports of size k with box counts and region
/// counts equal to k times the targets, written with quarters only.
fn oracle_supports(x: usize, y: usize) -> Vec<u16> {
    // Quarters per box and per region, preparation order 00, 0+, +0, ++.
    let marg = [[2, 1, 1, 0], [0, 1, 1, 2]];
    let regions = [[0, 1, 1, 2], [1, 0, 2, 1], [1, 2, 0, 1], [2, 1, 1, 0]];
    let mut out = Vec::new();
    for s in 1u32..1 << 16 {
        let k = s.count_ones() as i32;
        let (mut a, mut b, mut r) = ([0; 4], [0; 4], [0; 4]);
        for i in 0..16 {
            if s >> i & 1 == 1 {
                let (p, q) = (i / 4, i % 4);
                a[p] += 4;
                b[q] += 4;
                let reg = match (p >= 2, q >= 2) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, true) => 2,
                    _ => 3,
                };
                r[reg] += 4;
            }
        }
        let ok = (0..4).all(|i| {
            a[i] == marg[x][i] * k && b[i] == marg[y][i] * k && r[i] == regions[x * 2 + y][i] * k
        });
        if ok {
            out.push(s as u16);
        }
    }
    out
}

fn oracle_counts() -> (usize, usize) {
    let s: Vec<Vec<u16>> = [(0, 0), (0, 1), (1, 0), (1, 1)]
        .iter()
        .map(|&(x, y)| oracle_supports(x, y))
        .collect();
    let (mut all, mut nca) = (0, 0);
    for &p00 in &s[0] {
        for &p0p in &s[1] {
            for &pp0 in &s[2] {
                for &ppp in &s[3] {
                    if p00 & ppp == 0 && p0p & pp0 == 0 {
                        all += 1;
                        if p00 & p0p != 0 && p00 & pp0 != 0 {
                            nca += 1;
                        }
                    }
                }
            }
        }
    }
    (all, nca)
}

#[test]
fn search_matches_brute_force_oracle() {
    let (all, nca) = oracle_counts();
    let plain = search_toy_models(&SearchOptions::default());
    let strict = search_toy_models(&SearchOptions {
        require_nca_violation: true,
        ..Default::default()
    });
    assert_eq!(plain.count(), all);
    assert_eq!(strict.count(), nca);
    assert!(nca >= 1);
    for (slot, (x, y)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        let ours: Vec<u16> = plain.per_preparation[slot].iter().map(|c| c.support).collect();
        assert_eq!(ours, oracle_supports(x, y));
    }
}

#[test]
fn witness_support_is_found_and_valid() {
    let witness: u16 = [(1, 1), (1, 3), (3, 1), (2, 2)]
        .iter()
        .fold(0, |s, &(a, b)| s | 1 << cell_index(a, b));
    // Independent check of the witness: marginals and region masses in quarters.
    let cells = [(1, 1), (1, 3), (3, 1), (2, 2)];
    let mut a = [0; 4];
    let mut r = [0; 4];
    for &(x, y) in &cells {
        a[x - 1] += 1;
        r[partition_outcome(cell_index(x, y))] += 1;
    }
    assert_eq!(a, [2, 1, 1, 0]);
    assert_eq!(r, [0, 1, 1, 2]);

    let search = search_toy_models(&SearchOptions {
        require_nca_violation: true,
        ..Default::default()
    });
    assert!(search.results.iter().any(|c| c.supports()[0] == witness));
}

#[test]
fn every_result_is_exact_and_consistent() {
    let search = search_toy_models(&SearchOptions::default());
    for cand in &search.results {
        let exact = cand.exact_checks();
        assert!(exact.all(), "{exact:?}");
        // PUC holding exactly implies both sides vanish and the critical pairs are disjoint.
        assert!(!exact.puc || (exact.puc_both_sides_zero && exact.critical_pairs_disjoint));
        assert!(cand.preparations.iter().all(|p| p.is_uniform()));
        let model = cand.model();
        let qc = quantum_consistency(&model, 0.0).unwrap();
        assert!(qc.max_deviation <= 1e-15, "{}", qc.max_deviation);
        let puc = puc_check(model.grid(), 0.0);
        assert_eq!(puc.worst_residual, 0.0);
    }
}

#[test]
fn nca_filter_postcondition() {
    let search = search_toy_models(&SearchOptions {
        require_nca_violation: true,
        ..Default::default()
    });
    for cand in &search.results {
        let grid = cand.grid();
        let omega = |i, j| ontic_core::measures::overlap(grid.get(0, 0), grid.get(i, j)).unwrap();
        assert!(omega(0, 1) > 0.0 && omega(1, 0) > 0.0);
        let report = verify_appendix_claims(&cand.model(), 1e-12).unwrap();
        assert!(report.pass, "{:?}", report.failed());
    }
}

#[test]
fn demanding_critical_overlap_finds_nothing() {
    let search = search_toy_models(&SearchOptions {
        require_critical_overlap: true,
        ..Default::default()
    });
    assert_eq!(search.count(), 0);
}

#[test]
fn search_is_deterministic_and_sorted() {
    let opts = SearchOptions::default();
    let a = search_toy_models(&opts);
    let b = search_toy_models(&opts);
    assert_eq!(a.results, b.results);
    let keys: Vec<[u16; 4]> = a.results.iter().map(|c| c.supports()).collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn fallback_is_not_triggered_when_uniform_solutions_exist() {
    let search = search_toy_models(&SearchOptions {
        rational_fallback: true,
        ..Default::default()
    });
    assert_eq!(search.fallback_used, [false; 4]);
}

#[test]
fn independent_pairs_fail_consistency() {
    let model = spekkens_independent_model();
    let report = verify_appendix_claims(&model, 1e-12).unwrap();
    assert!(!report.pass);
    assert!(report.failed().contains(&"quantum consistency"));
    assert!(!quantum_consistency(&model, 1e-9).unwrap().pass);
}

#[test]
fn swapping_critical_supports_breaks_consistency() {
    let cand = &search_toy_models(&SearchOptions::default()).results[0];
    let grid = cand.grid();
    let d = grid.distributions();
    let swapped: [Distribution; 4] = [d[3].clone(), d[1].clone(), d[2].clone(), d[0].clone()];
    let model = toy_ontological_model(PreparationGrid::binary(swapped).unwrap());
    assert!(!quantum_consistency(&model, 1e-9).unwrap().pass);
}

#[test]
fn swapping_outcome_labels_breaks_consistency() {
    let model = search_toy_models(&SearchOptions::default()).results[0].model();
    let swapped = model
        .with_experiments(vec![model.experiments()[0].swap_outcomes(0, 1)])
        .unwrap();
    let report = quantum_consistency(&swapped, 1e-9).unwrap();
    assert!((report.max_deviation - 0.25).abs() < 1e-12);
}

#[test]
fn every_charged_atom_determines_a_preparation() {
    for cand in &search_toy_models(&SearchOptions::default()).results {
        let grid = cand.grid();
        for d in determination_map(&grid) {
            assert!(!d.charged() || d.determines_either(), "atom {}", d.atom);
        }
        let t1 = theorem1_check(&grid, &response_partition()).unwrap();
        assert!(t1.holds());
    }
}

#[test]
fn marginal_targets_sum_to_one() {
    for x in PrepLabel::ALL {
        let total: num_rational::Rational64 = marginal_targets(x).iter().sum();
        assert_eq!(total, 1.into());
    }
}
