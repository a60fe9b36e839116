import math

import numpy as np
import pytest
from scipy.stats import norm

from quadrisk.errors import DimensionMismatch, InvalidRequirement, NonProbabilityMeasure
from quadrisk.measures import Empirical, FiniteMixtureMeasure, PointMass, gaussian, mix, point_mass
from quadrisk.quadrants import Quadrant
from quadrisk.requirements import (
    CheckPolicy,
    GeneralizedRequirement,
    Method,
    Overall,
    ProbabilityEstimate,
    QuadrantRequirement,
    RequirementSet,
    Verdict,
    check_requirement,
    check_set,
    decide,
    evaluate_generalized,
    interval_probability,
    quadrant_probability,
)

POLICY = CheckPolicy(z=3.0, budget=20_000, seed=11)


def test_floor_and_total_validation():
    q = Quadrant.halfspace([1.0], 0.0)
    with pytest.raises(InvalidRequirement):
        QuadrantRequirement(q, 1.5)
    with pytest.raises(InvalidRequirement):
        RequirementSet((QuadrantRequirement(q, 0.6), QuadrantRequirement(q, 0.5)))
    with pytest.raises(DimensionMismatch):
        RequirementSet((QuadrantRequirement(q, 0.1), QuadrantRequirement(Quadrant.halfspace([1.0, 0.0], 0.0), 0.1)))


def test_rate_requirement_is_analytic():
    # P(i10 <= 0.5%) para i10 ~ N(1.5%, 0.75%²)
    P = gaussian([0.015], [[0.0075 ** 2]])
    r = QuadrantRequirement(Quadrant.halfspace([-1.0], -0.005), 0.01)
    result = check_requirement(P, r, POLICY)
    assert result.estimate.method is Method.ANALYTIC_GAUSSIAN
    assert abs(result.estimate.value - norm.cdf(-4.0 / 3.0)) <= 1e-10
    assert result.verdict is Verdict.SATISFIED
    assert result.margin == pytest.approx(norm.cdf(-4.0 / 3.0) - 0.01)


def test_atoms_and_empirical_are_exact():
    P = FiniteMixtureMeasure.of(
        [0.5, 0.5], [PointMass(np.array([1.0])), Empirical(np.array([[0.0], [2.0], [3.0], [-1.0]]))]
    )
    est = quadrant_probability(P, Quadrant.halfspace([1.0], 1.0), seed=0)
    assert est.method is Method.EXACT
    assert est.value == pytest.approx(0.5 + 0.5 * 0.5)
    assert est.stderr == 0.0


def test_diagonal_gaussian_on_box():
    P = gaussian([0.0, 1.0], [[1.0, 0.0], [0.0, 4.0]])
    est = quadrant_probability(P, Quadrant.box([-1.0, None], [1.0, 1.0]))
    expected = (norm.cdf(1.0) - norm.cdf(-1.0)) * 0.5
    assert est.method is Method.ANALYTIC_GAUSSIAN
    assert est.value == pytest.approx(expected, abs=1e-12)


def test_degenerate_quadrant_has_zero_gaussian_mass():
    P = gaussian([0.0, 0.0], [[1.0, 0.5], [0.5, 1.0]])
    line = Quadrant.from_arrays([[1.0, -1.0], [-1.0, 1.0]], [0.0, 0.0])
    est = quadrant_probability(P, line)
    assert est.value == 0.0
    assert est.is_exact


def test_monte_carlo_path_for_correlated_gaussian():
    P = gaussian([0.0, 0.0], [[1.0, 0.8], [0.8, 1.0]])
    q = Quadrant.box([0.0, 0.0], [None, None])
    est = quadrant_probability(P, q, budget=50_000, seed=3)
    exact = 0.25 + math.asin(0.8) / (2.0 * math.pi)
    assert est.method is Method.MONTE_CARLO
    assert est.samples == 50_000
    assert abs(est.value - exact) <= 4.0 * est.stderr
    again = quadrant_probability(P, q, budget=50_000, seed=3)
    assert again.value == est.value


def test_decide_bands():
    mc = ProbabilityEstimate(0.5, 0.01, Method.MONTE_CARLO, 1000, 0)
    assert decide(mc, 0.45, 3.0) is Verdict.SATISFIED
    assert decide(mc, 0.6, 3.0) is Verdict.VIOLATED
    assert decide(mc, 0.5, 3.0) is Verdict.INCONCLUSIVE
    exact = ProbabilityEstimate(0.5, 0.0, Method.EXACT)
    assert decide(exact, 0.5 + 1e-13, 3.0) is Verdict.SATISFIED
    assert decide(exact, 0.5 + 1e-9, 3.0) is Verdict.VIOLATED


def test_check_set_overall():
    P = point_mass([0.0])
    ok = QuadrantRequirement(Quadrant.halfspace([-1.0], -1.0), 0.5)
    bad = QuadrantRequirement(Quadrant.halfspace([1.0], 1.0), 0.5)
    assert check_set(P, RequirementSet((ok,)), POLICY).overall is Overall.ALL_SATISFIED
    report = check_set(P, RequirementSet((ok, bad)), POLICY)
    assert report.overall is Overall.SOME_VIOLATED
    assert report.verdicts == [Verdict.SATISFIED, Verdict.VIOLATED]
    assert check_set(P, RequirementSet(()), POLICY).overall is Overall.ALL_SATISFIED


def test_interval_probability_tails():
    assert interval_probability(0.0, 1.0, 10.0, math.inf) == pytest.approx(norm.sf(10.0), rel=1e-10)
    assert interval_probability(0.0, 0.0, -1.0, 1.0) == 1.0
    assert interval_probability(2.0, 0.0, -1.0, 1.0) == 0.0


def test_generalized_requirement_is_linear():
    P = FiniteMixtureMeasure.of([0.3, 0.7], [PointMass(np.array([0.0])), PointMass(np.array([2.0]))])
    g = GeneralizedRequirement(
        ((1.0, Quadrant.halfspace([1.0], 1.0)), (-2.0, Quadrant.halfspace([-1.0], 1.0))),
        threshold=0.5,
    )
    # g vale 1 em x >= 1 e -2 em x <= -1: ∫ g dP = 0.7
    result = evaluate_generalized(P, g, budget=1000, seed=1, z=3.0)
    assert result.value == pytest.approx(0.7)
    assert result.verdict is Verdict.SATISFIED
    assert len(result.terms) == 2


def test_signed_measure_probability_is_not_clipped():
    Q = FiniteMixtureMeasure.of([1.5, -0.5], [PointMass(np.array([1.0])), PointMass(np.array([-1.0]))])
    est = quadrant_probability(Q, Quadrant.halfspace([1.0], 0.0))
    assert est.value == pytest.approx(1.5)


@pytest.mark.parametrize('t', [0.25, 0.5, 0.75])
def test_acceptance_set_is_convex(t):
    rs = RequirementSet((
        QuadrantRequirement(Quadrant.halfspace([1.0], 1.0), 0.3),
        QuadrantRequirement(Quadrant.box([-1.0], [0.5]), 0.2),
    ))
    mu1 = FiniteMixtureMeasure.of([0.4, 0.6], [PointMass(np.array([2.0])), PointMass(np.array([0.0]))])
    mu2 = FiniteMixtureMeasure.of(
        [0.5, 0.5], [Empirical(np.array([[1.5], [3.0]])), PointMass(np.array([-0.5]))]
    )
    assert check_set(mu1, rs, POLICY).overall is Overall.ALL_SATISFIED
    assert check_set(mu2, rs, POLICY).overall is Overall.ALL_SATISFIED
    mixed = mix([(t, mu1), (1.0 - t, mu2)])
    assert check_set(mixed, rs, POLICY).overall is Overall.ALL_SATISFIED


def test_force_monte_carlo_overrides_analytic_path():
    P = gaussian([0.0], [[1.0]])
    est = quadrant_probability(P, Quadrant.halfspace([1.0], 0.0), budget=10_000, seed=5, force_monte_carlo=True)
    assert est.method is Method.MONTE_CARLO
    assert abs(est.value - 0.5) <= 4.0 * est.stderr


def test_check_rejects_measures_that_are_not_probabilities():
    P = FiniteMixtureMeasure.of([0.5, 0.3], [PointMass(np.array([1.0])), PointMass(np.array([-1.0]))])
    assert not P.is_probability
    r = QuadrantRequirement(Quadrant.halfspace([1.0], 0.0), 0.5)
    with pytest.raises(NonProbabilityMeasure):
        check_requirement(P, r, POLICY)
    with pytest.raises(NonProbabilityMeasure):
        check_set(P, RequirementSet((r,)), POLICY)
    # o funcional generalizado continua aceitando medidas com sinal
    g = GeneralizedRequirement(((1.0, r.quadrant),), threshold=0.5)
    assert evaluate_generalized(P, g, budget=1000, seed=1, z=3.0).value == pytest.approx(0.5)


@pytest.mark.parametrize('seed', [5, 17, 2024])
def test_single_term_generalized_matches_check_on_monte_carlo(seed):
    P = gaussian([0.0, 0.0], [[1.0, 0.6], [0.6, 1.0]])
    q = Quadrant.box([0.0, 0.0], [None, None])
    budget, z = 10_000, 3.0
    base = check_requirement(P, QuadrantRequirement(q, 0.1), CheckPolicy(z=z, budget=budget, seed=seed))
    assert base.estimate.method is Method.MONTE_CARLO
    value, stderr = base.estimate.value, base.estimate.stderr
    for k in (-6.0, -1.5, 0.5, 1.5, 6.0):
        floor = value + k * stderr
        r = check_requirement(P, QuadrantRequirement(q, floor), CheckPolicy(z=z, budget=budget, seed=seed))
        g = evaluate_generalized(P, GeneralizedRequirement(((1.0, q),), threshold=floor), budget, seed, z)
        assert g.value == r.estimate.value
        assert g.stderr == pytest.approx(r.estimate.stderr, rel=1e-12)
        assert g.verdict is r.verdict
    seen = {check_requirement(P, QuadrantRequirement(q, value + k * stderr),
                              CheckPolicy(z=z, budget=budget, seed=seed)).verdict for k in (-6.0, 0.5, 6.0)}
    assert seen == {Verdict.SATISFIED, Verdict.INCONCLUSIVE, Verdict.VIOLATED}


def test_generalized_requirement_is_linear_in_the_measure():
    rng = np.random.default_rng(31)
    g = GeneralizedRequirement(
        ((1.0, Quadrant.halfspace([1.0, 0.0], 0.0)),
         (-0.5, Quadrant.box([-1.0, -1.0], [1.0, 1.0])),
         (2.0, Quadrant.halfspace([1.0, 1.0], 1.0))),
        threshold=0.0,
    )
    for _ in range(20):
        mu1 = FiniteMixtureMeasure.of([0.4, 0.6], [PointMass(rng.normal(size=2)),
                                                    Empirical(rng.normal(size=(7, 2)))])
        mu2 = FiniteMixtureMeasure.of([1.0], [Empirical(rng.normal(scale=2.0, size=(11, 2)))])
        a, b = float(rng.uniform(-2.0, 2.0)), float(rng.uniform(-2.0, 2.0))
        combo = FiniteMixtureMeasure.of(
            np.concatenate([a * mu1.weights, b * mu2.weights]), mu1.components + mu2.components,
            probability=False,
        )
        v1 = evaluate_generalized(mu1, g, seed=1).value
        v2 = evaluate_generalized(mu2, g, seed=1).value
        assert evaluate_generalized(combo, g, seed=1).value == pytest.approx(a * v1 + b * v2, abs=1e-12)


def test_adding_halfspaces_never_increases_probability():
    rng = np.random.default_rng(47)
    for _ in range(100):
        n = int(rng.integers(1, 4))
        P = FiniteMixtureMeasure.of([0.3, 0.7], [PointMass(rng.normal(size=n)),
                                                  Empirical(rng.normal(size=(200, n)))])
        z = rng.normal(size=n)
        normals = rng.normal(size=(int(rng.integers(1, 4)), n))
        offsets = normals @ z - rng.uniform(0.0, 2.0, size=normals.shape[0])
        extra = rng.normal(size=(1, n))
        q = Quadrant.from_arrays(normals, offsets)
        tighter = Quadrant.from_arrays(np.vstack([normals, extra]),
                                       np.concatenate([offsets, extra @ z - rng.uniform(0.0, 1.0, size=1)]))
        assert quadrant_probability(P, tighter).value <= quadrant_probability(P, q).value + 1e-12

    G = gaussian([0.5, -0.5], [[1.0, 0.0], [0.0, 2.0]])
    wide = quadrant_probability(G, Quadrant.box([-1.0, None], [None, 1.0]))
    narrow = quadrant_probability(G, Quadrant.box([-1.0, -2.0], [0.5, 1.0]))
    assert wide.is_exact and narrow.is_exact
    assert narrow.value <= wide.value
