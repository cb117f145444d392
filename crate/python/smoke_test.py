"""Smoke test for the ontic extension module.

Build and run:

    cd crates/python && maturin develop --release
    python python/smoke_test.py
"""

import math

import ontic


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def main():
    table = ontic.born_table()
    assert close(table[0][0], 0.0) and close(table[3][3], 0.0)
    assert all(close(sum(row), 1.0) for row in table)

    p, q = [0.5, 0.5, 0.0], [0.0, 0.5, 0.5]
    assert close(ontic.total_variation(p, q), 0.5)
    assert close(ontic.overlap(p, q), 0.5)
    chain = ontic.inequality_chain(p, q)
    assert chain["holds"] and chain["omega"] <= chain["fidelity"]

    models = ontic.toy_search(require_nca_violation=True)
    assert len(models) >= 1
    model = models[0]
    assert len(model.atoms) == 16
    assert model.quantum_consistency(1e-12)["pass"]
    assert model.puc_check()["worst_residual"] == 0.0
    assert not model.nca_check()["holds"]
    claims = model.verify_appendix_claims()
    assert claims["pass"], claims
    again = ontic.Model.from_json(model.to_json())
    assert again.density("0,0") == model.density("0,0")
    assert len(ontic.toy_search(require_critical_overlap=True)) == 0
    assert not ontic.spekkens_independent_model().quantum_consistency()["pass"]

    game = ontic.OneSlackModel(5, 0.0)
    result = game.simulate(20000, 3)
    assert abs(result["p_correct"] - 0.9) <= 3 * result["std_error"]
    assert game.pair_incorrect_check(0, 1, 2000, 1)["both_incorrect"] == 0

    bound = ontic.extendibility_bound(1e-6)
    assert bound["n_epsilon"] == 7
    assert math.isclose(bound["exact_bound"], 0.79285, abs_tol=1e-4)
    assert ontic.perfect_case_bounds(2) == {"subsystems": 2, "expected_correct_lb": 1.5, "p_correct_lb": 0.75}

    try:
        ontic.OneSlackModel(1, 0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("N = 1 accepted")

    print("ontic", ontic.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
