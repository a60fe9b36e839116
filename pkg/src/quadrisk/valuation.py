"""
Funções de avaliação (capital disponível como função dos fatores de risco),
avaliações torcidas, distribuição do capital, agregação SST no nível do capital
e medidas de risco (VaR e Expected Shortfall).

Convenção de sinais: V é capital disponível (quanto maior, melhor); VaR e ES
são reportados como exigências de capital positivas, por negação do quantil.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from loguru import logger
from scipy.stats import norm

from quadrisk import config
from quadrisk.errors import (
    AlphaOutOfRange,
    DimensionMismatch,
    InvalidScenario,
    InvalidValuation,
    NonProbabilityMeasure,
)
from quadrisk.measures import (
    Empirical,
    FiniteMixtureMeasure,
    Gaussian,
    PointMass,
    make_gaussian,
    mix,
    sample,
    translate,
)
from quadrisk.scenarios import EnhancedScenario, ScenarioSet
from quadrisk.seeding import derive_seed
from quadrisk.utils import as_matrix, as_vector, check_dim

__all__ = [
    'LinearValuation', 'MaxAffineValuation', 'ValuationFunction',
    'evaluate', 'evaluate_many', 'impact', 'twist', 'pushforward_capital',
    'sst_aggregate_capital', 'scenario_impacts', 'capital_cdf',
    'value_at_risk', 'expected_shortfall', 'quantile',
]

QUANTILE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LinearValuation:
    """V(x) = a·x + b."""
    a: np.ndarray
    b: float = 0.0
    constant: bool = False

    def __post_init__(self):
        if not self.constant and float(np.max(np.abs(self.a))) <= 1e-12:
            raise InvalidValuation("linear valuation with zero slope must be flagged constant")

    @classmethod
    def of(cls, a: Sequence[float], b: float = 0.0, constant: bool = False) -> "LinearValuation":
        return cls(as_vector(a, what="slope"), float(b), bool(constant))

    @property
    def dim(self) -> int:
        return int(self.a.shape[0])

    @property
    def is_additive(self) -> bool:
        return self.b == 0.0

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        return X @ self.a + self.b


@dataclass(frozen=True, eq=False)
class MaxAffineValuation:
    """V(x) = max_k (a_k·x + b_k) ou min_k, conforme `sign`."""
    slopes: np.ndarray
    intercepts: np.ndarray
    sign: str = "max"

    def __post_init__(self):
        if self.sign not in ("max", "min"):
            raise InvalidValuation(f"sign must be 'max' or 'min', got {self.sign!r}")
        if self.slopes.ndim != 2 or self.slopes.shape[0] < 1:
            raise InvalidValuation("max-affine valuation needs at least one piece")
        if self.intercepts.shape[0] != self.slopes.shape[0]:
            raise DimensionMismatch(self.slopes.shape[0], self.intercepts.shape[0], what="intercepts")

    @classmethod
    def of(cls, pieces: Sequence[tuple[Sequence[float], float]], sign: str = "max") -> "MaxAffineValuation":
        if not pieces:
            raise InvalidValuation("max-affine valuation needs at least one piece")
        slopes = as_matrix([list(a) for a, _ in pieces], what="slopes")
        intercepts = as_vector([float(b) for _, b in pieces], what="intercepts")
        return cls(slopes, intercepts, sign)

    @property
    def dim(self) -> int:
        return int(self.slopes.shape[1])

    @property
    def is_additive(self) -> bool:
        """V(x + y) = V(x) + V(y) vale apenas com uma única peça sem intercepto."""
        return self.intercepts.shape[0] == 1 and float(self.intercepts[0]) == 0.0

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        values = X @ self.slopes.T + self.intercepts
        return values.max(axis=1) if self.sign == "max" else values.min(axis=1)


ValuationFunction = Union[LinearValuation, MaxAffineValuation]


def _point(V: ValuationFunction, x) -> np.ndarray:
    vec = np.asarray(x, dtype=float).reshape(-1)
    if vec.shape[0] != V.dim:
        raise DimensionMismatch(V.dim, vec.shape[0], what="risk-factor vector")
    return vec


def evaluate(V: ValuationFunction, x: Sequence[float]) -> float:
    return float(V.evaluate_many(_point(V, x)[None, :])[0])


def evaluate_many(V: ValuationFunction, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(V.dim, X.shape[-1] if X.ndim else 0, what="risk-factor matrix")
    check_dim(V.dim, X.shape[1], what="risk-factor matrix")
    return V.evaluate_many(X)


def impact(V: ValuationFunction, s: EnhancedScenario) -> float:
    """Impacto do cenário: V(d_S)."""
    return evaluate(V, s.deflection)


def scenario_impacts(V: ValuationFunction, M: ScenarioSet) -> list[tuple[float, float]]:
    return [(impact(V, s), float(s.probability)) for s in M]


def twist(V: ValuationFunction, d: Sequence[float]) -> ValuationFunction:
    """Avaliação torcida V_d(x) = V(x + d) - V(d)."""
    d = _point(V, d)
    if isinstance(V, LinearValuation):
        return LinearValuation(V.a, 0.0, V.constant)
    shift = evaluate(V, d)
    intercepts = V.intercepts + V.slopes @ d - shift
    intercepts.setflags(write=False)
    return MaxAffineValuation(V.slopes, intercepts, V.sign)


def pushforward_capital(V: ValuationFunction, P: FiniteMixtureMeasure,
                        budget: int | None = None, seed: int | None = None) -> FiniteMixtureMeasure:
    """
    Distribuição do capital V_*P (medida em dimensão 1).

    Avaliação linear em Gaussianas é exata; massas pontuais e empíricas são mapeadas
    ponto a ponto; avaliação max-afim em Gaussianas vira empírica com `budget` amostras.

    Args:
        V: Função de avaliação.
        P: Medida de probabilidade dos fatores de risco.
        budget: Amostras por componente Gaussiana com V não linear.
        seed: Semente mestre; a componente k usa derive_seed(seed, "capital", k).
    """
    if not P.is_probability:
        raise NonProbabilityMeasure("capital distribution requires a probability measure")
    if P.dim != V.dim:
        raise DimensionMismatch(V.dim, P.dim, what="measure")
    budget = int(budget or config.DEFAULT_MC_BUDGET)
    seed = config.DEFAULT_SEED if seed is None else int(seed)

    comps = []
    for k, (_, comp) in enumerate(P):
        if isinstance(comp, PointMass):
            comps.append(PointMass(as_vector([evaluate(V, comp.loc)])))
        elif isinstance(comp, Empirical):
            comps.append(Empirical(as_matrix(evaluate_many(V, comp.points)[:, None])))
        elif isinstance(V, LinearValuation):
            comps.append(make_gaussian([float(V.a @ comp.mean) + V.b], [[float(V.a @ comp.cov @ V.a)]]))
        else:
            points = sample(FiniteMixtureMeasure.single(comp), budget, derive_seed(seed, "capital", k))
            comps.append(Empirical(as_matrix(evaluate_many(V, points)[:, None])))
            logger.debug(f"capital component #{k}: sampled {budget} valuations")
    return FiniteMixtureMeasure(P.weights, tuple(comps), 1, True)


def sst_aggregate_capital(PV: FiniteMixtureMeasure, impacts: Sequence[tuple[float, float]]) -> FiniteMixtureMeasure:
    """(1 - p_M) V_*P + Σ p_S (V_*P transladada por V(d_S))."""
    if PV.dim != 1:
        raise DimensionMismatch(1, PV.dim, what="capital distribution")
    probs = [float(p) for _, p in impacts]
    if any(p < 0.0 or p > 1.0 for p in probs) or math.fsum(probs) > 1.0 + 1e-12:
        raise InvalidScenario("impact probabilities must lie in [0, 1] and sum to at most 1")
    if not impacts:
        return PV
    parts = [(max(0.0, 1.0 - math.fsum(probs)), PV)]
    parts += [(float(p), translate(PV, [float(v)])) for v, p in impacts]
    return mix(parts)


# -----------------------------------------------------------------------------
# CDF, quantil e medidas de risco
# -----------------------------------------------------------------------------
def _capital_check(D: FiniteMixtureMeasure) -> None:
    if D.dim != 1:
        raise DimensionMismatch(1, D.dim, what="capital distribution")
    if not D.is_probability:
        raise NonProbabilityMeasure("risk measures require a probability measure")


def _atoms(D: FiniteMixtureMeasure) -> np.ndarray:
    locs = []
    for _, comp in D:
        if isinstance(comp, PointMass):
            locs.append(comp.loc[:1])
        elif isinstance(comp, Empirical):
            locs.append(comp.points[:, 0])
    return np.unique(np.concatenate(locs)) if locs else np.zeros(0)


def _cdf_many(D: FiniteMixtureMeasure, xs: np.ndarray, left: bool = False) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    total = np.zeros_like(xs)
    side = "left" if left else "right"
    for w, comp in D:
        if isinstance(comp, Gaussian):
            total += w * norm.cdf((xs - comp.mean[0]) / math.sqrt(comp.cov[0, 0]))
        elif isinstance(comp, PointMass):
            loc = float(comp.loc[0])
            total += w * ((loc < xs) if left else (loc <= xs))
        else:
            pts = comp.sorted_first_axis
            total += w * np.searchsorted(pts, xs, side=side) / pts.shape[0]
    return np.clip(total, 0.0, 1.0)


def capital_cdf(D: FiniteMixtureMeasure, x: float, left: bool = False) -> float:
    """
    F(x) = D((-inf, x]); com `left=True`, o limite à esquerda D((-inf, x)).
    """
    _capital_check(D)
    return float(_cdf_many(D, np.array([float(x)]), left)[0])


def _bracket(D: FiniteMixtureMeasure) -> tuple[float, float]:
    lows, highs = [], []
    for _, comp in D:
        if isinstance(comp, Gaussian):
            s = math.sqrt(comp.cov[0, 0])
            lows.append(comp.mean[0] - 40.0 * s)
            highs.append(comp.mean[0] + 40.0 * s)
        elif isinstance(comp, PointMass):
            lows.append(comp.loc[0])
            highs.append(comp.loc[0])
        else:
            lows.append(comp.points[:, 0].min())
            highs.append(comp.points[:, 0].max())
    return float(min(lows)) - 1.0, float(max(highs)) + 1.0


def quantile(D: FiniteMixtureMeasure, alpha: float) -> float:
    """
    q_α = inf{x : F(x) >= α}, inversa generalizada contínua à esquerda.

    Gaussiana única usa a ppf; misturas usam bisseção na CDF analítica, com os
    átomos resolvidos exatamente.
    """
    _capital_check(D)
    if not (0.0 < alpha < 1.0):
        raise AlphaOutOfRange(f"alpha {alpha} outside (0, 1)")
    if len(D) == 1 and isinstance(D.components[0], Gaussian):
        comp = D.components[0]
        return float(comp.mean[0] + math.sqrt(comp.cov[0, 0]) * norm.ppf(alpha))

    atoms = _atoms(D)
    if atoms.size:
        hit = np.flatnonzero((_cdf_many(D, atoms) >= alpha) & (_cdf_many(D, atoms, left=True) < alpha))
        if hit.size:
            return float(atoms[hit[0]])

    lo, hi = _bracket(D)
    while capital_cdf(D, lo) >= alpha:
        lo -= 2.0 * (hi - lo)
    for _ in range(400):
        if hi - lo <= max(QUANTILE_TOL, 4.0 * np.spacing(max(abs(lo), abs(hi)))):
            break
        mid = 0.5 * (lo + hi)
        if capital_cdf(D, mid) >= alpha:
            hi = mid
        else:
            lo = mid
    return float(hi)


def value_at_risk(D: FiniteMixtureMeasure, alpha: float) -> float:
    """VaR_α = -q_α."""
    return -quantile(D, alpha)


def expected_shortfall(D: FiniteMixtureMeasure, alpha: float) -> float:
    """
    ES_α = -(E[X; X < q] + q·(α - F(q⁻))) / α, com divisão do átomo em q.
    """
    q = quantile(D, alpha)
    partial = 0.0
    for w, comp in D:
        if isinstance(comp, Gaussian):
            mu = float(comp.mean[0])
            sigma = math.sqrt(comp.cov[0, 0])
            z = (q - mu) / sigma
            partial += w * (mu * float(norm.cdf(z)) - sigma * float(norm.pdf(z)))
        elif isinstance(comp, PointMass):
            loc = float(comp.loc[0])
            partial += w * (loc if loc < q else 0.0)
        else:
            pts = comp.points[:, 0]
            partial += w * float(np.sum(pts[pts < q])) / pts.shape[0]
    below = capital_cdf(D, q, left=True)
    return -(partial + q * (alpha - below)) / alpha
