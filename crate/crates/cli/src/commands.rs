use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde_json::json;

use ontic_core::game::{
    epsilon_case_bounds, extendibility_bound, pair_incorrect_check, perfect_case_bounds, simulate_game,
    OneSlackModel,
};
use ontic_core::independence::{
    corollary_check, nca_check, posterior, product_structure, puc_check, theorem1_check, theorem2_check,
    BoundReport, BoundStatus,
};
use ontic_core::measures::inequality_chain;
use ontic_core::model_file::{load_model, model_to_json};
use ontic_core::models::{preclusion_table, quantum_consistency};
use ontic_core::toymodel::{search_toy_models, SearchOptions, ToyCandidate};
use ontic_core::OntologicalModel;

use crate::report::{num, Check, Outcome, Table};
use crate::Common;

/// Largest subsystem count for which the exact pair check is enumerated.
const PAIR_CHECK_MAX_N: usize = 8;

fn load(path: &Path) -> anyhow::Result<OntologicalModel> {
    load_model(path).with_context(|| format!("model {}", path.display()))
}

fn bound_check(label: String, report: &BoundReport) -> Check {
    match report.status {
        BoundStatus::Inapplicable => Check::skipped(label, report.reason.clone().unwrap_or_default()),
        status => {
            let worst = report
                .inequalities
                .iter()
                .min_by(|a, b| a.slack.total_cmp(&b.slack))
                .map(|i| format!("tightest: {} (slack {:e})", i.name, i.slack))
                .unwrap_or_else(|| "no inequalities".into());
            Check::new(label, status == BoundStatus::Holds, Some(report.min_slack()), worst)
        }
    }
}

fn puc_detail(report: &ontic_core::independence::PucReport) -> String {
    match &report.worst {
        Some(w) if !report.holds => format!(
            "worst residual {:e} at atom {} for labels ({},{}),({},{})",
            w.residual, w.atom, w.labels[0], w.labels[1], w.labels[2], w.labels[3]
        ),
        _ => format!("worst residual {:e}", report.worst_residual),
    }
}

fn theorem_checks(model: &OntologicalModel, prefix: &str, checks: &mut Vec<Check>) -> anyhow::Result<Vec<serde_json::Value>> {
    let grid = model.grid();
    let mut reports = Vec::new();
    if grid.shape() != (2, 2) {
        checks.push(Check::skipped(format!("{prefix}preclusion theorems"), "grid is not 2x2"));
        return Ok(reports);
    }
    for e in model.experiments() {
        let table = preclusion_table(grid, e)?;
        let precluded: Vec<String> = table
            .outcomes
            .iter()
            .zip(&table.precluded_by)
            .map(|(o, p)| format!("{o}<-{p}"))
            .collect();
        checks.push(Check::info(
            format!("{prefix}preclusion `{}`", e.name()),
            Some(table.epsilon),
            format!("epsilon {:e}; {}", table.epsilon, precluded.join(" ")),
        ));
        let t1 = theorem1_check(grid, e)?;
        checks.push(bound_check(format!("{prefix}perfect preclusion `{}`", e.name()), &t1));
        let t2 = theorem2_check(grid, e)?;
        checks.push(bound_check(format!("{prefix}approximate preclusion `{}`", e.name()), &t2));
        reports.push(json!({ "preclusion": table, "theorem1": t1, "theorem2": t2 }));
    }
    Ok(reports)
}

pub fn verify(c: &Common, path: &Path) -> anyhow::Result<Outcome> {
    let model = load(path)?;
    let grid = model.grid();
    let mut out = Outcome::new("verify");
    out.config("model", path.display().to_string());
    let mut checks = vec![Check::new(
        "model valid",
        true,
        None,
        format!(
            "{} atoms, {}x{} preparations, {} experiments",
            model.space().len(),
            grid.shape().0,
            grid.shape().1,
            model.experiments().len()
        ),
    )];

    if model.quantum_target().is_some() && !model.experiments().is_empty() {
        let qc = quantum_consistency(&model, c.tol)?;
        checks.push(Check::new(
            "quantum consistency",
            qc.pass,
            Some(qc.max_deviation),
            format!("experiment `{}`, max deviation {:e}", qc.experiment, qc.max_deviation),
        ));
        out.field("quantum_consistency", qc);
    } else {
        checks.push(Check::skipped("quantum consistency", "no quantum target or experiment"));
    }

    let puc = puc_check(grid, c.tol);
    checks.push(Check::new("preparation uninformativeness", puc.holds, Some(puc.worst_residual), puc_detail(&puc)));
    out.field("puc", &puc);

    if product_structure(grid.space()).is_ok() {
        let nca = nca_check(grid, c.tol)?;
        let worst = nca.entries.iter().map(|e| e.worst_residual).fold(0.0, f64::max);
        checks.push(Check::info(
            "no correlation",
            Some(worst),
            if nca.holds { "holds".to_owned() } else { format!("violated, largest residual {worst:e}") },
        ));
        out.field("nca", nca);
    } else {
        checks.push(Check::skipped("no correlation", "atoms are not product-labeled"));
    }

    let theorems = theorem_checks(&model, "", &mut checks)?;
    out.field("theorems", theorems);
    out.checks(checks);
    Ok(out)
}

pub fn distances(path: &Path) -> anyhow::Result<Outcome> {
    let model = load(path)?;
    let grid = model.grid();
    let mut out = Outcome::new("distances");
    out.config("model", path.display().to_string());
    let keys = grid.keys();
    let dists = grid.distributions();
    let mut pairs = Vec::new();
    let mut rows = Vec::new();
    let mut all_hold = true;
    for i in 0..dists.len() {
        for j in i + 1..dists.len() {
            let chain = inequality_chain(&dists[i], &dists[j])?;
            all_hold &= chain.holds;
            rows.push(vec![
                keys[i].clone(),
                keys[j].clone(),
                num(chain.delta),
                num(chain.omega),
                num(chain.fidelity),
                num(chain.hellinger_sq),
                num(chain.l2_bound),
                chain.holds.to_string(),
            ]);
            pairs.push(json!({ "a": keys[i], "b": keys[j], "chain": chain }));
        }
    }
    out.summary.push(format!(
        "{} {} pairs, inequality chain {}",
        if all_hold { "PASS" } else { "FAIL" },
        pairs.len(),
        if all_hold { "holds" } else { "violated" }
    ));
    out.pass = all_hold;
    out.field("pairs", pairs);
    out.table = Table {
        headers: vec!["a", "b", "delta", "omega", "fidelity", "hellinger_sq", "l2_bound", "chain_holds"],
        rows,
    };
    Ok(out)
}

pub fn puc(c: &Common, path: &Path) -> anyhow::Result<Outcome> {
    let model = load(path)?;
    let grid = model.grid();
    let mut out = Outcome::new("puc-check");
    out.config("model", path.display().to_string());
    let report = puc_check(grid, c.tol);
    let mut checks = vec![Check::new(
        "preparation uninformativeness",
        report.holds,
        Some(report.worst_residual),
        puc_detail(&report),
    )];

    // Posterior factorization under equal priors, at every atom the mixture charges.
    let (nx, ny) = grid.shape();
    let px = vec![1.0 / nx as f64; nx];
    let py = vec![1.0 / ny as f64; ny];
    let mut worst_gap = 0.0f64;
    let mut worst_atom = None;
    for atom in 0..grid.space().len() {
        if let Ok(p) = posterior(grid, &px, &py, atom) {
            if p.factorization_gap > worst_gap {
                worst_gap = p.factorization_gap;
                worst_atom = Some(p.atom.clone());
            }
        }
    }
    checks.push(Check::info(
        "posterior factorization (equal priors)",
        Some(worst_gap),
        match worst_atom {
            Some(a) => format!("largest gap {worst_gap:e} at atom {a}"),
            None => "gap 0 at every charged atom".into(),
        },
    ));

    if product_structure(grid.space()).is_ok() {
        let nca = nca_check(grid, c.tol)?;
        let worst = nca.entries.iter().map(|e| e.worst_residual).fold(0.0, f64::max);
        checks.push(Check::info(
            "no correlation",
            Some(worst),
            if nca.holds { "holds".to_owned() } else { format!("violated, largest residual {worst:e}") },
        ));
        out.field("nca", nca);
    }
    out.field("puc", report);
    out.checks(checks);
    Ok(out)
}

fn cells_text(cand: &ToyCandidate, slot: usize) -> String {
    cand.preparations[slot]
        .cells()
        .iter()
        .map(|(a, b)| format!("({a},{b})"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn toy_search(options: SearchOptions) -> anyhow::Result<Outcome> {
    let search = search_toy_models(&options);
    let mut out = Outcome::new("toy-search");
    out.config("options", options);

    let mut models = Vec::new();
    let mut rows = Vec::new();
    let mut grids = String::new();
    let mut all_exact = true;
    for (i, cand) in search.results.iter().enumerate() {
        let exact = cand.exact_checks();
        all_exact &= exact.all();
        let s = cand.supports();
        let nca_overlap = s[0] & s[1] != 0 && s[0] & s[2] != 0;
        let file = format!("model-{:03}.json", i + 1);
        out.files.push((file.clone(), model_to_json(&cand.model()) + "\n"));
        grids.push_str(&format!("model {}\n{}\n", i + 1, cand.render()));
        let cells: Vec<String> = (0..4).map(|slot| cells_text(cand, slot)).collect();
        rows.push(
            [vec![(i + 1).to_string()], cells.clone(), vec![nca_overlap.to_string(), exact.all().to_string()]].concat(),
        );
        models.push(json!({
            "index": i + 1,
            "file": file,
            "supports": { "0,0": cells[0], "0,+": cells[1], "+,0": cells[2], "+,+": cells[3] },
            "overlaps_p00_with_p0p_and_pp0": nca_overlap,
            "exact": exact,
        }));
    }
    if !search.results.is_empty() {
        out.files.push(("grids.txt".into(), grids));
    }

    let counts: Vec<usize> = search.per_preparation.iter().map(Vec::len).collect();
    out.pass = all_exact;
    out.summary.push(format!(
        "{} found {} models (candidates per preparation: {:?})",
        if all_exact { "PASS" } else { "FAIL" },
        search.count(),
        counts
    ));
    out.field("count", search.count());
    out.field("candidates_per_preparation", counts);
    out.field("fallback_used", search.fallback_used);
    out.field("models", models);
    out.table = Table {
        headers: vec!["index", "support_00", "support_0p", "support_p0", "support_pp", "nca_overlap", "exact"],
        rows,
    };
    Ok(out)
}

pub fn theorem(paths: &[PathBuf]) -> anyhow::Result<Outcome> {
    let mut out = Outcome::new("theorem-check");
    out.config("models", paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>());
    let models = paths.iter().map(|p| load(p)).collect::<anyhow::Result<Vec<_>>>()?;
    let mut checks = Vec::new();
    let mut per_model = Vec::new();
    for (path, model) in paths.iter().zip(&models) {
        let prefix = if paths.len() > 1 { format!("{}: ", path.display()) } else { String::new() };
        per_model.push(json!({
            "model": path.display().to_string(),
            "experiments": theorem_checks(model, &prefix, &mut checks)?,
        }));
    }
    if models.len() > 1 {
        let sequence = models
            .iter()
            .zip(paths)
            .map(|(m, p)| {
                let e = m
                    .experiments()
                    .first()
                    .with_context(|| format!("model {} has no experiment", p.display()))?;
                Ok((m.grid().clone(), e.clone()))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        let corollary = corollary_check(&sequence)?;
        checks.push(bound_check("distance bounds along the sequence".into(), &corollary.report));
        out.field("corollary", corollary);
    }
    out.field("models", per_model);
    out.checks(checks);
    Ok(out)
}

pub fn game(c: &Common, n: usize, alpha: f64, epsilons: &[f64]) -> anyhow::Result<Outcome> {
    if c.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let model = OneSlackModel::new(n, alpha)?;
    let mut out = Outcome::new("game-sim");
    out.config("n", n);
    out.config("alpha", alpha);
    out.config("epsilon", epsilons);

    let result = simulate_game(&model, c.trials, c.seed)?;
    let analytic = model.analytic_p_correct();
    let perfect = perfect_case_bounds(n)?;
    let pairwise = epsilon_case_bounds(n, 0.0)?;
    let three_se = 3.0 * result.std_error;
    let mut checks = vec![
        Check::new(
            "estimate matches one-slack value",
            (result.p_correct - analytic).abs() <= three_se,
            Some(result.p_correct - analytic),
            format!("estimate {} vs {analytic} (3 se = {three_se:e})", result.p_correct),
        ),
        Check::new(
            "estimate above perfect-preclusion bound",
            result.p_correct >= perfect.p_correct_lb - three_se,
            Some(result.p_correct - perfect.p_correct_lb),
            format!("bound {}", perfect.p_correct_lb),
        ),
        Check::new(
            "no trial with two wrong guesses",
            result.more_than_one_incorrect == 0,
            Some(result.more_than_one_incorrect as f64),
            format!("{} of {} trials", result.more_than_one_incorrect, result.trials),
        ),
    ];
    if n <= PAIR_CHECK_MAX_N {
        let pair = pair_incorrect_check(&model, 0, 1, c.trials, c.seed)?;
        checks.push(Check::new(
            "pair (0,1) both wrong within overlap",
            pair.pass,
            Some(pair.estimate),
            format!(
                "estimate {} (exact {}), overlaps {} / {}, 2 sqrt(eps) {}",
                pair.estimate, pair.exact, pair.omega_00_pp, pair.omega_0p_p0, pair.two_sqrt_epsilon
            ),
        ));
        out.field("pair_check", pair);
    } else {
        checks.push(Check::skipped(
            "pair (0,1) both wrong within overlap",
            format!("N > {PAIR_CHECK_MAX_N}, enumeration skipped"),
        ));
    }

    let mut rows = vec![
        vec!["p_correct".into(), num(result.p_correct)],
        vec!["std_error".into(), num(result.std_error)],
        vec!["analytic_p_correct".into(), num(analytic)],
        vec!["mean_correct_fraction".into(), num(result.mean_correct_fraction)],
        vec!["more_than_one_incorrect".into(), result.more_than_one_incorrect.to_string()],
        vec!["perfect_expected_correct_lb".into(), num(perfect.expected_correct_lb)],
        vec!["perfect_p_correct_lb".into(), num(perfect.p_correct_lb)],
    ];
    let mut eps_rows = Vec::new();
    let mut ext_rows = Vec::new();
    for &eps in epsilons {
        match epsilon_case_bounds(n, eps) {
            Ok(b) => {
                rows.push(vec![format!("eps={eps} p_more_than_one_incorrect_ub"), num(b.p_more_than_one_incorrect_ub)]);
                rows.push(vec![format!("eps={eps} expected_correct_lb"), num(b.expected_correct_lb)]);
                rows.push(vec![format!("eps={eps} p_correct_lb"), num(b.p_correct_lb)]);
                eps_rows.push(serde_json::to_value(b)?);
            }
            Err(e) => eps_rows.push(json!({ "epsilon": eps, "error": e.to_string() })),
        }
        match extendibility_bound(eps) {
            Ok(b) => {
                rows.push(vec![format!("eps={eps} n_epsilon"), b.n_epsilon.to_string()]);
                rows.push(vec![format!("eps={eps} exact_bound"), num(b.exact_bound)]);
                rows.push(vec![format!("eps={eps} leading_order_bound"), num(b.leading_order_bound)]);
                ext_rows.push(serde_json::to_value(b)?);
            }
            Err(e) => ext_rows.push(json!({ "epsilon": eps, "error": e.to_string() })),
        }
    }

    out.field("result", &result);
    out.field("analytic_p_correct", analytic);
    out.field("perfect_case", perfect);
    out.field("pairwise_preclusion_case", pairwise);
    out.field("epsilon_case", eps_rows);
    out.field("extendibility", ext_rows);
    out.checks(checks);
    out.table = Table {
        headers: vec!["quantity", "value"],
        rows,
    };
    Ok(out)
}

pub fn bounds(epsilons: &[f64]) -> anyhow::Result<Outcome> {
    let mut out = Outcome::new("bounds");
    out.config("epsilon", epsilons);
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    let mut all_ok = true;
    for &eps in epsilons {
        match extendibility_bound(eps) {
            Ok(b) => {
                let s = eps.sqrt();
                let n = b.n_epsilon as f64;
                let verified = 2.0 * n.powi(3) * s <= 1.0 && 1.0 < 2.0 * (n + 1.0).powi(3) * s;
                all_ok &= verified;
                rows.push(vec![
                    num(eps),
                    b.n_epsilon.to_string(),
                    num(b.exact_bound),
                    num(b.leading_order_bound),
                    if verified { "ok".into() } else { "n_epsilon_mismatch".into() },
                ]);
                json_rows.push(json!({ "bound": b, "n_epsilon_verified": verified, "flag": null }));
            }
            Err(e) => {
                out.summary.push(format!("FLAG epsilon {eps}: {e}"));
                rows.push(vec![num(eps), String::new(), String::new(), String::new(), format!("out_of_domain: {e}")]);
                json_rows.push(json!({ "epsilon": eps, "flag": format!("out_of_domain: {e}") }));
            }
        }
    }
    out.pass = all_ok;
    out.summary.push(format!("{} {} rows", if all_ok { "PASS" } else { "FAIL" }, rows.len()));
    out.field("rows", json_rows);
    out.table = Table {
        headers: vec!["epsilon", "n_epsilon", "exact_bound", "leading_order_bound", "status"],
        rows,
    };
    Ok(out)
}
