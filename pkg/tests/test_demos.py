import pytest

from quadrisk.demos import DEMOS, run_demo

BUDGET = 20_000
SEED = 20120816


@pytest.mark.parametrize('name', sorted(DEMOS))
def test_all_demos_pass(name):
    report = run_demo(name, seed=SEED, budget=BUDGET)
    assert report.passed, "\n".join(report.lines)
    assert report.to_dict()["result"] == "PASS"
    assert report.lines


def test_successive_weights_match_closed_forms():
    data = run_demo('successive', seed=SEED, budget=BUDGET).data
    assert data["weights"]["forward"] == pytest.approx([0.72, 0.08, 0.2], abs=1e-12)
    assert data["weights"]["backward"] == pytest.approx([0.72, 0.1, 0.18], abs=1e-12)
    assert data["weights"]["one_step"] == pytest.approx([0.7, 0.1, 0.2], abs=1e-12)


def test_sst_gap_is_large_compared_to_noise():
    data = run_demo('sst-equivalence', seed=SEED, budget=BUDGET).data
    assert data["additive_equal"]
    assert abs(data["quantile_gap"]) > 10.0 * data["gap_stderr"]


def test_unknown_demo():
    with pytest.raises(KeyError):
        run_demo('nope')
