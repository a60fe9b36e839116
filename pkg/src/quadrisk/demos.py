"""
Demonstrações reproduzíveis das construções de agregação de cenários.

Cada demo devolve um DemoReport com linhas legíveis, dados em formato JSON e o
resultado (PASS/FAIL) da asserção associada.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from loguru import logger

from quadrisk import config
from quadrisk.errors import NotInvertible, TwoSidedConstrainedQuadrant
from quadrisk.measures import (
    Empirical,
    FiniteMixtureMeasure,
    PointMass,
    gaussian,
    make_gaussian,
    max_ball_mass_bound,
    measures_equal,
    point_mass,
)
from quadrisk.quadrants import Quadrant
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
from quadrisk.seeding import derive_seed
from quadrisk.synthesis import (
    recover_base_measure,
    scale_to_ball_bound,
    scenarios_from_requirements_pointmass,
    scenarios_from_requirements_shifting,
)
from quadrisk.valuation import (
    LinearValuation,
    MaxAffineValuation,
    pushforward_capital,
    quantile,
    scenario_impacts,
    sst_aggregate_capital,
    value_at_risk,
)

__all__ = ['DemoReport', 'DEMOS', 'run_demo', 'weights_at']


@dataclass
class DemoReport:
    name: str
    passed: bool = False
    lines: list[str] = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def say(self, line: str) -> None:
        self.lines.append(line)

    def to_dict(self) -> dict:
        return {"demo": self.name, "result": "PASS" if self.passed else "FAIL", "data": self.data}


def weights_at(measure: FiniteMixtureMeasure, locations: list[float]) -> list[float]:
    """Soma dos pesos das massas pontuais (1-D) em cada localização."""
    out = []
    for loc in locations:
        total = 0.0
        for w, comp in measure:
            if isinstance(comp, PointMass) and abs(float(comp.loc[0]) - loc) <= 1e-12:
                total += w
        out.append(total)
    return out


# -----------------------------------------------------------------------------
def demo_successive(seed: int, budget: int) -> DemoReport:
    report = DemoReport("successive")
    d1, d2, p1, p2 = 1.0, 2.0, 0.1, 0.2
    base = point_mass([0.0])
    m1 = ScenarioSet.of([([d1], p1)])
    m2 = ScenarioSet.of([([d2], p2)])
    both = ScenarioSet.of([([d1], p1), ([d2], p2)])
    locations = [0.0, d1, d2]

    one_step = weights_at(aggregate_point_mass(base, both), locations)
    forward = weights_at(aggregate_successive(base, [m1, m2]), locations)
    backward = weights_at(aggregate_successive(base, [m2, m1]), locations)
    expected = {
        "one_step": [1 - p1 - p2, p1, p2],
        "forward": [(1 - p1) * (1 - p2), p1 * (1 - p2), p2],
        "backward": [(1 - p1) * (1 - p2), p1, (1 - p1) * p2],
    }
    computed = {"one_step": one_step, "forward": forward, "backward": backward}

    report.say(f"base δ0, scenarios (d1={d1}, p1={p1}), (d2={d2}, p2={p2})")
    for key, value in computed.items():
        report.say(f"{key:>9}: weights on (0, d1, d2) = {[round(v, 12) for v in value]}")
    matches = all(
        np.allclose(computed[k], expected[k], rtol=0.0, atol=1e-12) for k in computed
    )
    vectors = list(computed.values())
    distinct = all(
        not np.allclose(vectors[i], vectors[j], rtol=0.0, atol=1e-12)
        for i in range(3) for j in range(i + 1, 3)
    )
    report.say(f"closed forms match: {matches}; pairwise different: {distinct}")
    report.data = {"weights": computed, "expected": expected}
    report.passed = matches and distinct
    return report


def demo_counterexample(seed: int, budget: int) -> DemoReport:
    report = DemoReport("counterexample")
    p_max = 0.5
    box = Quadrant.box([0.0], [1.0])
    rs = RequirementSet((QuadrantRequirement(box, p_max),))

    factor, P = scale_to_ball_bound(gaussian([0.0], [[1.0]]), 0.5, p_max)
    bound = max_ball_mass_bound(P, 0.5)
    report.say(f"P = N(0, {factor ** 2:g}); every interval of length 1 has mass <= {bound:.6f} < {p_max}")

    try:
        scenarios_from_requirements_shifting(P, rs)
        two_sided = False
    except TwoSidedConstrainedQuadrant:
        two_sided = True
    report.say(f"shifting synthesis rejects the bounded box: {two_sided}")

    rng = np.random.default_rng(derive_seed(seed, "counterexample"))
    worst = 0.0
    for _ in range(50):
        k = int(rng.integers(1, 6))
        total = float(rng.uniform(0.5, 1.0))
        probs = rng.dirichlet(np.ones(k)) * total
        deflections = rng.uniform(-3.0, 3.0, size=k)
        M = ScenarioSet.of([([float(d)], float(p)) for d, p in zip(deflections, probs)])
        value = quadrant_probability(aggregate_shifting(P, M), box).value
        worst = max(worst, value)
    shifting_fails = worst < p_max
    report.say(f"max P_M(box) over 50 shifted scenario sets: {worst:.6f} (< {p_max}: {shifting_fails})")

    M_pt = scenarios_from_requirements_pointmass(rs)
    check = check_set(aggregate_point_mass(P, M_pt), rs, CheckPolicy(budget=budget, seed=seed))
    point_ok = check.overall is Overall.ALL_SATISFIED
    report.say(f"point-mass synthesis deflection {float(M_pt.scenarios[0].deflection[0]):g}: "
               f"P_M(box) = {check.results[0].estimate.value:.6f} -> {check.overall.value}")

    report.data = {
        "dilation": factor,
        "ball_mass_bound": bound,
        "max_shifted_box_probability": worst,
        "pointmass_check": check.to_dict(),
        "two_sided_rejected": two_sided,
    }
    report.passed = shifting_fails and point_ok and two_sided
    return report


def demo_sst_equivalence(seed: int, budget: int) -> DemoReport:
    report = DemoReport("sst-equivalence")

    # 1) avaliação aditiva: as duas agregações coincidem exatamente
    P = FiniteMixtureMeasure.of(
        [0.6, 0.4],
        [make_gaussian([0.0, 0.0], np.eye(2)), make_gaussian([1.0, -1.0], [[2.0, 0.3], [0.3, 1.0]])],
    )
    M = ScenarioSet.of([([-2.0, 1.0], 0.05), ([3.0, 0.5], 0.02)])
    V = LinearValuation.of([1.0, -0.5], 0.0)
    shifted = pushforward_capital(V, aggregate_shifting(P, M))
    sst = sst_aggregate_capital(pushforward_capital(V, P), scenario_impacts(V, M))
    additive_equal = measures_equal(shifted, sst, atol=1e-12)
    report.say(f"additive V: shifting then V_* equals SST aggregation component-wise: {additive_equal}")

    # 2) avaliação não aditiva V(x) = min(x, -x): diferença nos quantis
    alpha = 0.05
    P1 = gaussian([0.0], [[1.0]])
    M1 = ScenarioSet.of([([3.0], 0.2)])
    W = MaxAffineValuation.of([([1.0], 0.0), ([-1.0], 0.0)], sign="min")
    replicates = 8
    gaps = []
    for r in range(replicates):
        s = derive_seed(seed, "sst-equivalence", r)
        lhs = pushforward_capital(W, aggregate_shifting(P1, M1), budget, derive_seed(s, "shifting"))
        rhs = sst_aggregate_capital(pushforward_capital(W, P1, budget, derive_seed(s, "sst")),
                                    scenario_impacts(W, M1))
        gaps.append(quantile(lhs, alpha) - quantile(rhs, alpha))
    gap = float(np.mean(gaps))
    stderr = float(np.std(gaps, ddof=1) / math.sqrt(replicates))
    gap_ok = abs(gap) > 10.0 * stderr
    report.say(f"non-additive V=min(x,-x): quantile gap at alpha={alpha} is {gap:.4f} "
               f"(Monte Carlo stderr {stderr:.2e}, ratio {abs(gap) / max(stderr, 1e-300):.1f})")

    report.data = {
        "additive_equal": additive_equal,
        "alpha": alpha,
        "quantile_gap": gap,
        "gap_stderr": stderr,
        "budget": budget,
        "replicates": replicates,
    }
    report.passed = additive_equal and gap_ok
    return report


def demo_recovery(seed: int, budget: int) -> DemoReport:
    report = DemoReport("recovery")
    P = FiniteMixtureMeasure.of(
        [0.7, 0.3],
        [make_gaussian([0.0, 0.0], [[1.0, 0.0], [0.0, 2.0]]),
         Empirical(np.array([[1.0, 1.0], [2.0, -1.0]]))],
    )
    M = ScenarioSet.of([([2.0, 2.0], 0.1), ([-1.0, 0.0], 0.3), ([2.0, 2.0], 0.05)])
    Q = aggregate_point_mass(P, M)
    recovered = recover_base_measure(Q, M)
    equal = measures_equal(recovered, P, atol=1e-12)
    report.say(f"aggregated measure has {len(Q)} components (p_M = {M.total:g})")
    report.say(f"recovered measure equals the original: {equal}")

    full = ScenarioSet.of([([0.0, 0.0], 1.0)])
    try:
        recover_base_measure(aggregate_point_mass(P, full), full)
        rejected = False
    except NotInvertible:
        rejected = True
    report.say(f"p_M = 1 is rejected as not invertible: {rejected}")
    report.data = {"components_aggregated": len(Q), "recovered_equal": equal, "p_m_one_rejected": rejected}
    report.passed = equal and rejected
    return report


def demo_hedged_company(seed: int, budget: int) -> DemoReport:
    report = DemoReport("hedged-company")
    # fatores: (taxa de juros de 10 anos, índice de ações)
    P = gaussian([0.015, 0.0], [[0.0075 ** 2, 0.0], [0.0, 0.04]])
    V = LinearValuation.of([0.0, 1.5], 0.0)
    M = ScenarioSet.of([([-0.01, 0.0], 0.01), ([0.02, 0.0], 0.01)])
    impacts = scenario_impacts(V, M)
    alpha = 0.01

    base = value_at_risk(pushforward_capital(V, P), alpha)
    sst = value_at_risk(sst_aggregate_capital(pushforward_capital(V, P), impacts), alpha)
    shifted = value_at_risk(pushforward_capital(V, aggregate_shifting(P, M)), alpha)
    zero_impacts = all(v == 0.0 for v, _ in impacts)
    unchanged = abs(sst - base) <= 1e-8 and abs(shifted - base) <= 1e-8

    rate_floor = QuadrantRequirement(Quadrant.halfspace([-1.0, 0.0], -0.005), 0.01)
    rate_check = check_set(P, RequirementSet((rate_floor,)), CheckPolicy(budget=budget, seed=seed))

    report.say(f"V(x) = 1.5 * equity; impacts of rate scenarios: {[v for v, _ in impacts]}")
    report.say(f"VaR_{alpha}: base {base:.6f}, SST {sst:.6f}, shifting {shifted:.6f}")
    report.say(f"rate requirement P(i10 <= 0.5%) >= 1%: {rate_check.overall.value} "
               f"(value {rate_check.results[0].estimate.value:.5f}) but it does not move the capital figure")
    report.data = {
        "impacts": [v for v, _ in impacts],
        "var_base": base,
        "var_sst": sst,
        "var_shifting": shifted,
        "rate_requirement": rate_check.to_dict(),
    }
    report.passed = zero_impacts and unchanged
    return report


DEMOS: dict[str, Callable[[int, int], DemoReport]] = {
    "successive": demo_successive,
    "counterexample": demo_counterexample,
    "sst-equivalence": demo_sst_equivalence,
    "recovery": demo_recovery,
    "hedged-company": demo_hedged_company,
}


def run_demo(name: str, seed: int | None = None, budget: int | None = None) -> DemoReport:
    """Executa a demo `name` (KeyError se não existir)."""
    fn = DEMOS[name]
    seed = config.DEFAULT_SEED if seed is None else int(seed)
    budget = int(budget or config.DEFAULT_MC_BUDGET)
    report = fn(seed, budget)
    logger.info(f"demo {name}: {'PASS' if report.passed else 'FAIL'}")
    return report
