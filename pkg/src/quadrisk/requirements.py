"""
Requisitos de quadrante, conjuntos de requisitos, requisitos generalizados
(funções-degrau sobre quadrantes) e o motor de veredictos.

As probabilidades de quadrante são calculadas exatamente sempre que possível
(átomos, empíricas, Gaussianas em um semi-espaço ou em caixas alinhadas com
covariância diagonal) e por Monte Carlo nos demais casos, com erro-padrão explícito.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from loguru import logger
from scipy.stats import norm

from quadrisk import config
from quadrisk.errors import DimensionMismatch, InvalidRequirement, NonProbabilityMeasure
from quadrisk.measures import (
    Empirical,
    FiniteMixtureMeasure,
    Gaussian,
    PointMass,
    sample,
)
from quadrisk.quadrants import MEMBERSHIP_TOL, Quadrant, contains, is_nondegenerate
from quadrisk.seeding import derive_seed

__all__ = [
    'QuadrantRequirement', 'RequirementSet', 'GeneralizedRequirement',
    'Method', 'ProbabilityEstimate', 'Verdict', 'Overall', 'CheckPolicy',
    'RequirementResult', 'SetReport', 'GeneralizedResult',
    'quadrant_probability', 'check_requirement', 'check_set', 'evaluate_generalized',
    'acceptance_margin', 'decide', 'interval_probability',
]

FLOOR_TOL = 1e-12


# -----------------------------------------------------------------------------
# Tipos de domínio
# -----------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class QuadrantRequirement:
    """Exige P(quadrant) >= floor."""
    quadrant: Quadrant
    floor: float

    def __post_init__(self):
        if not (0.0 <= float(self.floor) <= 1.0):
            raise InvalidRequirement(f"floor {self.floor} outside [0, 1]")

    @property
    def dim(self) -> int:
        return self.quadrant.dim


@dataclass(frozen=True, eq=False)
class RequirementSet:
    """Família finita de requisitos com Σ pisos <= 1."""
    requirements: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "requirements", tuple(self.requirements))
        if self.total > 1.0 + FLOOR_TOL:
            raise InvalidRequirement(f"total requirement probability {self.total:.12g} exceeds 1")
        if self.requirements:
            dim = self.requirements[0].dim
            for r in self.requirements:
                if r.dim != dim:
                    raise DimensionMismatch(dim, r.dim, what="requirement quadrant")

    @property
    def total(self) -> float:
        return math.fsum(float(r.floor) for r in self.requirements)

    @property
    def dim(self) -> int | None:
        return self.requirements[0].dim if self.requirements else None

    def __len__(self) -> int:
        return len(self.requirements)

    def __iter__(self):
        return iter(self.requirements)


@dataclass(frozen=True, eq=False)
class GeneralizedRequirement:
    """Condição ∫ g dμ >= threshold com g = Σ c_k·χ_{A_k}."""
    terms: tuple
    threshold: float

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((float(c), q) for c, q in self.terms))
        if not self.terms:
            raise InvalidRequirement("a generalized requirement needs at least one term")
        dim = self.terms[0][1].dim
        for _, q in self.terms:
            if q.dim != dim:
                raise DimensionMismatch(dim, q.dim, what="term quadrant")

    @property
    def dim(self) -> int:
        return self.terms[0][1].dim


class Method(str, Enum):
    EXACT = "exact"
    ANALYTIC_GAUSSIAN = "analytic-gaussian"
    MONTE_CARLO = "monte-carlo"


class Verdict(str, Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


class Overall(str, Enum):
    ALL_SATISFIED = "all-satisfied"
    SOME_VIOLATED = "some-violated"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ProbabilityEstimate:
    value: float
    stderr: float
    method: Method
    samples: int = 0
    seed: int | None = None

    @property
    def is_exact(self) -> bool:
        return self.method is not Method.MONTE_CARLO

    def to_dict(self) -> dict:
        out = {"value": self.value, "stderr": self.stderr, "method": self.method.value}
        if self.method is Method.MONTE_CARLO:
            out["samples"] = self.samples
            out["seed"] = self.seed
        return out


@dataclass(frozen=True)
class CheckPolicy:
    """Política de verificação: multiplicador de confiança, orçamento e semente."""
    z: float = field(default_factory=lambda: config.DEFAULT_CONFIDENCE_Z)
    budget: int = field(default_factory=lambda: config.DEFAULT_MC_BUDGET)
    seed: int = field(default_factory=lambda: config.DEFAULT_SEED)


@dataclass(frozen=True)
class RequirementResult:
    floor: float
    estimate: ProbabilityEstimate
    verdict: Verdict

    @property
    def margin(self) -> float:
        return acceptance_margin(self.estimate, self.floor)

    def to_dict(self) -> dict:
        out = {"floor": self.floor}
        out.update(self.estimate.to_dict())
        out["margin"] = self.margin
        out["verdict"] = self.verdict.value
        return out


@dataclass(frozen=True)
class SetReport:
    results: tuple
    overall: Overall

    @property
    def verdicts(self) -> list[Verdict]:
        return [r.verdict for r in self.results]

    def to_dict(self) -> dict:
        return {
            "overall": self.overall.value,
            "requirements": [r.to_dict() for r in self.results],
        }


@dataclass(frozen=True)
class GeneralizedResult:
    value: float
    stderr: float
    verdict: Verdict
    terms: tuple

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "verdict": self.verdict.value,
            "terms": [t.to_dict() for t in self.terms],
        }


# -----------------------------------------------------------------------------
# Probabilidade de um quadrante
# -----------------------------------------------------------------------------
def interval_probability(mu: float, sigma: float, lo: float, hi: float) -> float:
    if sigma <= 0.0:
        return 1.0 if lo - MEMBERSHIP_TOL <= mu <= hi + MEMBERSHIP_TOL else 0.0
    a = (lo - mu) / sigma
    b = (hi - mu) / sigma
    if a > 0.0:
        # cauda direita: sf evita cancelamento
        return float(norm.sf(a) - norm.sf(b))
    return float(norm.cdf(b) - norm.cdf(a))


def _axis_bounds(q: Quadrant) -> tuple[np.ndarray, np.ndarray]:
    lo = np.full(q.dim, -np.inf)
    hi = np.full(q.dim, np.inf)
    for h in q.halfspaces:
        j = int(np.flatnonzero(h.normal)[0])
        coef = float(h.normal[j])
        bound = h.offset / coef
        if coef > 0.0:
            lo[j] = max(lo[j], bound)
        else:
            hi[j] = min(hi[j], bound)
    return lo, hi


def _gaussian_exact(comp: Gaussian, q: Quadrant) -> float | None:
    """Probabilidade analítica quando existe caminho fechado; None caso contrário."""
    values, _ = comp.eig
    top = float(values.max())
    if len(q.halfspaces) == 1:
        h = q.halfspaces[0]
        var = float(h.normal @ comp.cov @ h.normal)
        if var <= 1e-14 * max(top, 1e-300) * h.norm ** 2:
            # direção sem variância: o componente age como átomo ao longo de λ
            return 1.0 if float(h.normal @ comp.mean) >= h.offset - MEMBERSHIP_TOL else 0.0
        return float(norm.sf((h.offset - float(h.normal @ comp.mean)) / math.sqrt(var)))
    if comp.is_diagonal and q.is_axis_aligned:
        lo, hi = _axis_bounds(q)
        sigmas = np.sqrt(np.diag(comp.cov))
        prob = 1.0
        for j in range(comp.dim):
            prob *= interval_probability(float(comp.mean[j]), float(sigmas[j]), lo[j], hi[j])
            if prob == 0.0:
                break
        return prob
    if float(values.min()) > 1e-12 * top and not is_nondegenerate(q):
        # conjunto Lebesgue-nulo sob densidade
        return 0.0
    return None


def quadrant_probability(P: FiniteMixtureMeasure, q: Quadrant, budget: int | None = None,
                         seed: int | None = None, force_monte_carlo: bool = False) -> ProbabilityEstimate:
    """
    Estima P(q) componente a componente.

    Args:
        P: Medida (mistura com sinal permitida; nesse caso não há truncamento em [0,1]).
        q: Quadrante.
        budget: Amostras de Monte Carlo por componente sem caminho exato.
        seed: Semente mestre; a componente k usa derive_seed(seed, "component", k).
        force_monte_carlo: Ignora os caminhos analíticos das Gaussianas.

    Returns:
        ProbabilityEstimate com valor, erro-padrão e método.
    """
    if P.dim != q.dim:
        raise DimensionMismatch(P.dim, q.dim, what="quadrant")
    budget = int(budget or config.DEFAULT_MC_BUDGET)
    seed = config.DEFAULT_SEED if seed is None else int(seed)

    value = 0.0
    variance = 0.0
    method = Method.EXACT
    samples = 0
    for k, (w, comp) in enumerate(P):
        if isinstance(comp, PointMass):
            value += w * (1.0 if contains(q, comp.loc) else 0.0)
            continue
        if isinstance(comp, Empirical):
            value += w * float(np.mean(q.contains_many(comp.points)))
            continue
        exact = None if force_monte_carlo else _gaussian_exact(comp, q)
        if exact is not None:
            value += w * exact
            if method is Method.EXACT:
                method = Method.ANALYTIC_GAUSSIAN
            continue
        points = sample(FiniteMixtureMeasure.single(comp), budget, derive_seed(seed, "component", k))
        p_hat = float(np.mean(q.contains_many(points)))
        value += w * p_hat
        variance += (w ** 2) * p_hat * (1.0 - p_hat) / budget
        method = Method.MONTE_CARLO
        samples += budget
        logger.debug(f"component #{k}: Monte Carlo estimate {p_hat:.6g} from {budget} samples")

    if P.is_probability:
        value = min(1.0, max(0.0, value))
    return ProbabilityEstimate(
        value=value,
        stderr=math.sqrt(variance),
        method=method,
        samples=samples,
        seed=seed if method is Method.MONTE_CARLO else None,
    )


# -----------------------------------------------------------------------------
# Veredictos
# -----------------------------------------------------------------------------
def decide(estimate: ProbabilityEstimate, floor: float, z: float) -> Verdict:
    """Caminhos exatos: value >= floor - 1e-12; Monte Carlo: banda de confiança ±z·stderr."""
    if estimate.is_exact:
        return Verdict.SATISFIED if estimate.value >= floor - FLOOR_TOL else Verdict.VIOLATED
    if estimate.value - z * estimate.stderr >= floor:
        return Verdict.SATISFIED
    if estimate.value + z * estimate.stderr < floor:
        return Verdict.VIOLATED
    return Verdict.INCONCLUSIVE


def acceptance_margin(estimate: ProbabilityEstimate, floor: float) -> float:
    """Folga value - floor do semi-espaço de aceitação do requisito."""
    return float(estimate.value - floor)


def _require_probability(P: FiniteMixtureMeasure) -> None:
    if not P.is_probability:
        raise NonProbabilityMeasure(
            f"requirements are checked on probability measures (total mass {P.total_mass:.6g})"
        )


def _term_seed(seed: int, k: int) -> int:
    """Semente do termo k: o termo 0 usa a própria seed, os demais derive_seed(seed, "term", k)."""
    return int(seed) if k == 0 else derive_seed(seed, "term", k)


def check_requirement(P: FiniteMixtureMeasure, r: QuadrantRequirement,
                      policy: CheckPolicy | None = None) -> RequirementResult:
    """
    Decide um requisito sobre uma medida de probabilidade.

    A semente usada é a mesma do termo 0 de evaluate_generalized, de modo que
    g = 1·χ_A com limiar p produz o mesmo veredicto que (A, p).
    """
    _require_probability(P)
    policy = policy or CheckPolicy()
    estimate = quadrant_probability(P, r.quadrant, policy.budget, _term_seed(policy.seed, 0))
    verdict = decide(estimate, float(r.floor), policy.z)
    return RequirementResult(float(r.floor), estimate, verdict)


def _overall(verdicts: Sequence[Verdict]) -> Overall:
    if any(v is Verdict.VIOLATED for v in verdicts):
        return Overall.SOME_VIOLATED
    if any(v is Verdict.INCONCLUSIVE for v in verdicts):
        return Overall.INCONCLUSIVE
    return Overall.ALL_SATISFIED


def check_set(P: FiniteMixtureMeasure, rs: RequirementSet, policy: CheckPolicy | None = None) -> SetReport:
    """
    Verifica cada requisito do conjunto; o requisito i usa derive_seed(seed, "requirement", i).

    Returns:
        SetReport com os resultados individuais e o veredicto global.
    """
    _require_probability(P)
    policy = policy or CheckPolicy()
    results = []
    for i, r in enumerate(rs):
        sub = CheckPolicy(z=policy.z, budget=policy.budget, seed=derive_seed(policy.seed, "requirement", i))
        results.append(check_requirement(P, r, sub))
    overall = _overall([r.verdict for r in results])
    logger.info(f"check_set: {len(results)} requirements, overall {overall.value}")
    return SetReport(tuple(results), overall)


def evaluate_generalized(mu: FiniteMixtureMeasure, g: GeneralizedRequirement,
                         budget: int | None = None, seed: int | None = None,
                         z: float | None = None) -> GeneralizedResult:
    """
    Calcula ∫ g dμ = Σ c_k μ(A_k) termo a termo e decide contra o limiar.
    """
    if mu.dim != g.dim:
        raise DimensionMismatch(mu.dim, g.dim, what="generalized requirement")
    seed = config.DEFAULT_SEED if seed is None else int(seed)
    z = config.DEFAULT_CONFIDENCE_Z if z is None else float(z)
    estimates = []
    value = 0.0
    variance = 0.0
    for k, (coef, quadrant) in enumerate(g.terms):
        est = quadrant_probability(mu, quadrant, budget, _term_seed(seed, k))
        estimates.append(est)
        value += coef * est.value
        variance += (coef * est.stderr) ** 2
    exact = all(e.is_exact for e in estimates)
    method = Method.EXACT if exact else Method.MONTE_CARLO
    verdict = decide(ProbabilityEstimate(value, math.sqrt(variance), method), g.threshold, z)
    return GeneralizedResult(value, math.sqrt(variance), verdict, tuple(estimates))
