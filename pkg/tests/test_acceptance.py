"""
Critérios de aceitação: propriedades das construções de agregação e síntese
reproduzidas em escala de desktop, com sementes fixas.
"""
import json

import numpy as np
import pytest
from click.testing import CliRunner
from scipy.stats import norm

from quadrisk.cli import cli
from quadrisk.demos import run_demo, weights_at
from quadrisk.errors import BallDoesNotFit, NotInvertible
from quadrisk.measures import (
    Empirical,
    FiniteMixtureMeasure,
    PointMass,
    make_gaussian,
    measures_equal,
    point_mass,
)
from quadrisk.quadrants import Quadrant, inscribe_ball, is_two_sided_constrained
from quadrisk.requirements import (
    CheckPolicy,
    Overall,
    QuadrantRequirement,
    RequirementSet,
    check_set,
    quadrant_probability,
)
from quadrisk.scenarios import (
    ScenarioSet,
    aggregate_point_mass,
    aggregate_shifting,
    aggregate_successive,
)
from quadrisk.synthesis import (
    ShiftingSynthesisParams,
    recover_base_measure,
    scenarios_from_requirements_pointmass,
    scenarios_from_requirements_shifting,
)
from quadrisk.utils import dump_json
from quadrisk.valuation import (
    LinearValuation,
    pushforward_capital,
    scenario_impacts,
    sst_aggregate_capital,
)

POLICY = CheckPolicy(z=3.0, budget=10_000, seed=99)


# -----------------------------------------------------------------------------
# geradores aleatórios
# -----------------------------------------------------------------------------
def _unit(rng, n):
    v = rng.normal(size=n)
    return v / np.linalg.norm(v)


def _quadrant_around(rng, z, count):
    """Quadrante aleatório que contém o ponto z."""
    normals = np.array([_unit(rng, z.shape[0]) for _ in range(count)])
    offsets = normals @ z - rng.uniform(0.0, 2.0, size=count)
    return Quadrant.from_arrays(normals, offsets)


def _atomic_measure(rng, n):
    k = int(rng.integers(1, 4))
    weights = rng.dirichlet(np.ones(k + 1))
    comps = [PointMass(rng.normal(scale=3.0, size=n)) for _ in range(k)]
    comps.append(Empirical(rng.normal(scale=3.0, size=(int(rng.integers(1, 6)), n))))
    return FiniteMixtureMeasure.of(weights, comps)


def _floors(rng, k, cap):
    return rng.dirichlet(np.ones(k)) * rng.uniform(0.05, cap)


# -----------------------------------------------------------------------------
# 1) síntese por massa pontual
# -----------------------------------------------------------------------------
def test_pointmass_synthesis_soundness():
    rng = np.random.default_rng(101)
    for _ in range(100):
        n = int(rng.integers(1, 6))
        k = int(rng.integers(1, 7))
        floors = _floors(rng, k, 0.9)
        rs = RequirementSet(tuple(
            QuadrantRequirement(_quadrant_around(rng, rng.normal(scale=5.0, size=n), int(rng.integers(1, 9))),
                                float(p))
            for p in floors
        ))
        P = _atomic_measure(rng, n)
        Q = aggregate_point_mass(P, scenarios_from_requirements_pointmass(rs))
        report = check_set(Q, rs, POLICY)
        assert all(r.estimate.is_exact for r in report.results)
        assert report.overall is Overall.ALL_SATISFIED


# -----------------------------------------------------------------------------
# 2) síntese por deslocamento
# -----------------------------------------------------------------------------
def _one_sided_box(rng, n):
    lo, hi = [None] * n, [None] * n
    axes = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
    for j in axes:
        bound = float(rng.uniform(-5.0, 5.0))
        if rng.random() < 0.5:
            lo[j] = bound
        else:
            hi[j] = bound
    return Quadrant.box(lo, hi)


def _diagonal_gaussian(rng, n):
    return make_gaussian(rng.normal(size=n), np.diag(rng.uniform(0.3, 2.0, size=n)))


def test_shifting_synthesis_soundness():
    rng = np.random.default_rng(202)
    for i in range(50):
        n = int(rng.integers(1, 6))
        k = int(rng.integers(1, 5))
        rs = RequirementSet(tuple(
            QuadrantRequirement(_one_sided_box(rng, n), float(p)) for p in _floors(rng, k, 0.9)
        ))
        if i % 5 == 0:
            P = FiniteMixtureMeasure.of([0.5, 0.5], [_diagonal_gaussian(rng, n), _diagonal_gaussian(rng, n)])
        else:
            P = FiniteMixtureMeasure.single(_diagonal_gaussian(rng, n))
        synthesis = scenarios_from_requirements_shifting(P, rs, ShiftingSynthesisParams(tail_budget=20_000), seed=i)
        report = check_set(aggregate_shifting(P, synthesis.scenarios), rs, POLICY)
        assert all(r.estimate.is_exact for r in report.results)
        assert report.overall is Overall.ALL_SATISFIED


# -----------------------------------------------------------------------------
# 3) contraexemplo
# -----------------------------------------------------------------------------
def test_counterexample_fidelity():
    report = run_demo('counterexample', seed=7, budget=10_000)
    assert report.passed
    assert report.data["max_shifted_box_probability"] < 0.5
    assert report.data["ball_mass_bound"] < 0.5
    assert report.data["pointmass_check"]["overall"] == "all-satisfied"


# -----------------------------------------------------------------------------
# 4) agregação sucessiva
# -----------------------------------------------------------------------------
def test_successive_aggregation_formulas():
    rng = np.random.default_rng(404)
    for _ in range(20):
        d1 = float(rng.uniform(0.5, 3.0))
        d2 = d1 + float(rng.uniform(0.5, 2.0))
        p1, p2 = (float(v) for v in rng.uniform(0.01, 0.49, size=2))
        base = point_mass([0.0])
        m1, m2 = ScenarioSet.of([([d1], p1)]), ScenarioSet.of([([d2], p2)])
        locations = [0.0, d1, d2]
        one_step = weights_at(aggregate_point_mass(base, ScenarioSet.of([([d1], p1), ([d2], p2)])), locations)
        forward = weights_at(aggregate_successive(base, [m1, m2]), locations)
        backward = weights_at(aggregate_successive(base, [m2, m1]), locations)
        assert one_step == pytest.approx([1 - p1 - p2, p1, p2], abs=1e-12)
        assert forward == pytest.approx([(1 - p1) * (1 - p2), p1 * (1 - p2), p2], abs=1e-12)
        assert backward == pytest.approx([(1 - p1) * (1 - p2), p1, (1 - p1) * p2], abs=1e-12)
        vectors = [one_step, forward, backward]
        for a in range(3):
            for b in range(a + 1, 3):
                assert not np.allclose(vectors[a], vectors[b], rtol=0.0, atol=1e-12)


# -----------------------------------------------------------------------------
# 5) recuperação / injetividade
# -----------------------------------------------------------------------------
def _random_base(rng, n):
    k = int(rng.integers(1, 4))
    comps = []
    for _ in range(k):
        kind = rng.integers(0, 3)
        if kind == 0:
            A = rng.normal(size=(n, n))
            comps.append(make_gaussian(rng.normal(size=n), A @ A.T + 0.1 * np.eye(n)))
        elif kind == 1:
            comps.append(PointMass(rng.normal(scale=2.0, size=n)))
        else:
            comps.append(Empirical(rng.normal(size=(int(rng.integers(1, 5)), n))))
    return FiniteMixtureMeasure.of(rng.dirichlet(np.ones(k)), comps)


def test_recovery_is_injective():
    rng = np.random.default_rng(505)
    for _ in range(100):
        n = int(rng.integers(1, 4))
        P = _random_base(rng, n)
        k = int(rng.integers(1, 5))
        probs = rng.dirichlet(np.ones(k)) * rng.uniform(0.0, 0.99)
        M = ScenarioSet.of([(rng.normal(scale=4.0, size=n), float(p)) for p in probs])
        assert measures_equal(recover_base_measure(aggregate_point_mass(P, M), M), P, atol=1e-12)

    full = ScenarioSet.of([([0.0], 0.4), ([1.0], 0.6)])
    with pytest.raises(NotInvertible):
        recover_base_measure(aggregate_point_mass(point_mass([5.0]), full), full)


# -----------------------------------------------------------------------------
# 6) equivalência SST para V aditiva
# -----------------------------------------------------------------------------
def test_additive_valuation_equivalence():
    rng = np.random.default_rng(606)
    for _ in range(50):
        n = int(rng.integers(1, 5))
        k = int(rng.integers(1, 4))
        comps = []
        for _ in range(k):
            A = rng.normal(size=(n, n))
            comps.append(make_gaussian(rng.normal(size=n), A @ A.T + 0.1 * np.eye(n)))
        P = FiniteMixtureMeasure.of(rng.dirichlet(np.ones(k)), comps)
        m = int(rng.integers(1, 4))
        probs = rng.dirichlet(np.ones(m)) * rng.uniform(0.01, 0.5)
        M = ScenarioSet.of([(rng.normal(scale=2.0, size=n), float(p)) for p in probs])
        V = LinearValuation.of(rng.normal(size=n), 0.0)
        lhs = pushforward_capital(V, aggregate_shifting(P, M))
        rhs = sst_aggregate_capital(pushforward_capital(V, P), scenario_impacts(V, M))
        assert measures_equal(lhs, rhs, atol=1e-12)

    data = run_demo('sst-equivalence', seed=8, budget=20_000).data
    assert abs(data["quantile_gap"]) > 10.0 * data["gap_stderr"]


# -----------------------------------------------------------------------------
# 7) dicotomia: restrição bilateral <=> bolas grandes não cabem
# -----------------------------------------------------------------------------
def _dichotomy_quadrant(rng, n, two_sided):
    z = rng.normal(scale=3.0, size=n)
    u = _unit(rng, n)
    normals = []
    for _ in range(int(rng.integers(1, 7))):
        v = _unit(rng, n)
        while v @ u < 0.2:
            v = _unit(rng, n)
        normals.append(v)
    normals = np.array(normals)
    offsets = normals @ z - rng.uniform(0.0, 2.0, size=len(normals))
    if two_sided:
        lam = _unit(rng, n)
        normals = np.vstack([normals, lam, -lam])
        offsets = np.concatenate([offsets, [lam @ z - 0.25, -(lam @ z) - 0.25]])
    return Quadrant.from_arrays(normals, offsets)


def test_two_sided_dichotomy():
    rng = np.random.default_rng(707)
    seen = set()
    for i in range(200):
        n = int(rng.integers(1, 6))
        q = _dichotomy_quadrant(rng, n, two_sided=bool(i % 2))
        try:
            inscribe_ball(q, 1000.0)
            fits = True
        except BallDoesNotFit:
            fits = False
        constrained = is_two_sided_constrained(q)
        assert constrained == (not fits)
        seen.add(constrained)
    assert seen == {True, False}


# -----------------------------------------------------------------------------
# 8) analítico vs Monte Carlo
# -----------------------------------------------------------------------------
def _analytic_instance(rng):
    n = int(rng.integers(1, 4))
    mu = rng.normal(size=n)
    if rng.random() < 0.5:
        sigmas = rng.uniform(0.5, 2.0, size=n)
        P = FiniteMixtureMeasure.single(make_gaussian(mu, np.diag(sigmas ** 2)))
        lo = mu - rng.uniform(0.2, 2.0, size=n) * sigmas
        hi = mu + rng.uniform(0.2, 2.0, size=n) * sigmas
        q = Quadrant.box(lo.tolist(), hi.tolist())
    else:
        A = rng.normal(size=(n, n))
        P = FiniteMixtureMeasure.single(make_gaussian(mu, A @ A.T + 0.1 * np.eye(n)))
        lam = _unit(rng, n)
        sd = float(np.sqrt(lam @ P.components[0].cov @ lam))
        q = Quadrant.halfspace(lam, float(lam @ mu + rng.uniform(-1.5, 1.5) * sd))
    return P, q


def test_analytic_matches_monte_carlo():
    rng = np.random.default_rng(808)
    agree = 0
    for i in range(100):
        P, q = _analytic_instance(rng)
        exact = quadrant_probability(P, q)
        assert exact.is_exact
        mc = quadrant_probability(P, q, budget=1_000_000, seed=i, force_monte_carlo=True)
        if abs(exact.value - mc.value) <= 4.0 * mc.stderr:
            agree += 1
    assert agree >= 99


# -----------------------------------------------------------------------------
# 9) requisito de taxa de juros
# -----------------------------------------------------------------------------
def test_rate_requirement_via_cli(samples_dir, tmp_path):
    out = tmp_path / 'rate.json'
    result = CliRunner().invoke(cli, ['check', f'{samples_dir}/rates_measure.json',
                                      f'{samples_dir}/rates_requirement.json', '-o', str(out)])
    assert result.exit_code == 0, result.output
    entry = json.loads(out.read_text(encoding='utf-8'))["requirements"][0]
    assert abs(entry["value"] - norm.cdf(-4.0 / 3.0)) <= 1e-10
    assert entry["verdict"] == "satisfied"


# -----------------------------------------------------------------------------
# 10) determinismo
# -----------------------------------------------------------------------------
def test_reruns_are_byte_identical():
    def run():
        P = FiniteMixtureMeasure.single(make_gaussian([0.0, 0.0], [[1.0, 0.6], [0.6, 1.0]]))
        rs = RequirementSet((QuadrantRequirement(Quadrant.box([0.0, 0.0], [None, None]), 0.3),))
        report = check_set(P, rs, CheckPolicy(z=3.0, budget=50_000, seed=1234))
        demo = run_demo('counterexample', seed=1234, budget=10_000)
        return dump_json(report.to_dict()) + dump_json(demo.to_dict())

    assert run() == run()
