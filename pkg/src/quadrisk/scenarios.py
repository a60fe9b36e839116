"""
Cenários enriquecidos (deflexão, probabilidade), conjuntos de cenários e os
operadores de agregação: massa pontual, deslocamento, φ-agregação e agregação
sucessiva; classificação de mapas afins em contrativos/expansivos.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence, Union

import numpy as np
from loguru import logger

from quadrisk.errors import DimensionMismatch, InvalidScenario, NonProbabilityMeasure, UnsupportedMap
from quadrisk.measures import (
    FiniteMixtureMeasure,
    affine_pushforward,
    apply_pointwise,
    mix,
    point_mass,
    translate,
)
from quadrisk.utils import as_matrix, as_vector

__all__ = [
    'EnhancedScenario', 'ScenarioSet',
    'ConstantMap', 'TranslationMap', 'AffineMap', 'PointwiseMap', 'PhiMap',
    'AggregationMethod', 'MapClass',
    'aggregate_point_mass', 'aggregate_shifting', 'aggregate_phi', 'aggregate_successive',
    'aggregate', 'classify_affine_map', 'SINGULAR_TOL',
]

PROBABILITY_TOL = 1e-12
SINGULAR_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EnhancedScenario:
    """Cenário S = (d_S, p_S)."""
    deflection: np.ndarray
    probability: float

    def __post_init__(self):
        if not (0.0 <= float(self.probability) <= 1.0):
            raise InvalidScenario(f"scenario probability {self.probability} outside [0, 1]")

    @classmethod
    def of(cls, deflection: Sequence[float], probability: float) -> "EnhancedScenario":
        return cls(as_vector(deflection, what="deflection"), float(probability))

    @property
    def dim(self) -> int:
        return int(self.deflection.shape[0])


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """Família finita de cenários com p_M = Σ p_S <= 1."""
    scenarios: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        if self.total > 1.0 + PROBABILITY_TOL:
            raise InvalidScenario(f"total scenario probability {self.total:.12g} exceeds 1")
        if self.scenarios:
            dim = self.scenarios[0].dim
            for s in self.scenarios:
                if s.dim != dim:
                    raise DimensionMismatch(dim, s.dim, what="deflection")

    @classmethod
    def of(cls, pairs: Sequence[tuple[Sequence[float], float]]) -> "ScenarioSet":
        return cls(tuple(EnhancedScenario.of(d, p) for d, p in pairs))

    @property
    def total(self) -> float:
        return math.fsum(float(s.probability) for s in self.scenarios)

    @property
    def dim(self) -> int | None:
        return self.scenarios[0].dim if self.scenarios else None

    def __len__(self) -> int:
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    def without(self, index: int) -> "ScenarioSet":
        return ScenarioSet(self.scenarios[:index] + self.scenarios[index + 1:])


# -----------------------------------------------------------------------------
# Famílias de mapas φ
# -----------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class ConstantMap:
    value: np.ndarray
    kind = "constant"

    def push(self, P: FiniteMixtureMeasure) -> FiniteMixtureMeasure:
        return point_mass(self.value)

    def linear_part(self, n: int) -> np.ndarray:
        return np.zeros((n, n))


@dataclass(frozen=True, eq=False)
class TranslationMap:
    shift: np.ndarray
    kind = "translation"

    def push(self, P: FiniteMixtureMeasure) -> FiniteMixtureMeasure:
        return translate(P, self.shift)

    def linear_part(self, n: int) -> np.ndarray:
        return np.eye(n)


@dataclass(frozen=True, eq=False)
class AffineMap:
    matrix: np.ndarray
    offset: np.ndarray
    kind = "affine"

    def __post_init__(self):
        m, n = self.matrix.shape
        if m != n:
            raise DimensionMismatch(n, m, what="affine map rows")
        if self.offset.shape[0] != m:
            raise DimensionMismatch(m, self.offset.shape[0], what="affine map offset")

    @classmethod
    def of(cls, matrix, offset) -> "AffineMap":
        return cls(as_matrix(matrix, what="affine map"), as_vector(offset, what="affine offset"))

    def push(self, P: FiniteMixtureMeasure) -> FiniteMixtureMeasure:
        return affine_pushforward(P, self.matrix, self.offset)

    def linear_part(self, n: int) -> np.ndarray:
        return self.matrix


@dataclass(frozen=True, eq=False)
class PointwiseMap:
    """Experimental: função arbitrária, aplicável só a componentes atômicas."""
    fn: Callable[[np.ndarray], Sequence[float]]
    label: str = "pointwise"
    kind = "pointwise"

    def push(self, P: FiniteMixtureMeasure) -> FiniteMixtureMeasure:
        return apply_pointwise(P, self.fn)

    def linear_part(self, n: int) -> np.ndarray:
        raise UnsupportedMap("pointwise maps cannot be classified")


PhiMap = Union[ConstantMap, TranslationMap, AffineMap, PointwiseMap]


class AggregationMethod(str, Enum):
    POINT_MASS = "pointmass"
    SHIFTING = "shifting"


class MapClass(str, Enum):
    CONTRACTING = "contracting"
    EXPANDING = "expanding"
    ISOMETRY = "isometry"
    NEITHER = "neither"


# -----------------------------------------------------------------------------
# Agregação
# -----------------------------------------------------------------------------
def _check(P: FiniteMixtureMeasure, M: ScenarioSet) -> None:
    if not P.is_probability:
        raise NonProbabilityMeasure("aggregation requires a probability measure")
    if M.dim is not None and M.dim != P.dim:
        raise DimensionMismatch(P.dim, M.dim, what="scenario deflection")


def _aggregate(P: FiniteMixtureMeasure, M: ScenarioSet, pushed: list[FiniteMixtureMeasure]) -> FiniteMixtureMeasure:
    if len(M) == 0:
        return P
    base = max(0.0, 1.0 - M.total)
    parts = [(base, P)] + [(float(s.probability), m) for s, m in zip(M, pushed)]
    return mix(parts)


def aggregate_point_mass(P: FiniteMixtureMeasure, M: ScenarioSet) -> FiniteMixtureMeasure:
    """(1 - p_M) P + Σ p_S δ_{d_S}."""
    _check(P, M)
    return _aggregate(P, M, [point_mass(s.deflection) for s in M])


def aggregate_shifting(P: FiniteMixtureMeasure, M: ScenarioSet) -> FiniteMixtureMeasure:
    """(1 - p_M) P + Σ p_S (P transladada por d_S)."""
    _check(P, M)
    return _aggregate(P, M, [translate(P, s.deflection) for s in M])


def aggregate_phi(P: FiniteMixtureMeasure, M: ScenarioSet, maps: Sequence[PhiMap]) -> FiniteMixtureMeasure:
    """
    φ-agregação (1 - p_M) P + Σ p_S φ_S* P, um mapa por cenário.

    Args:
        P: Medida base.
        M: Conjunto de cenários.
        maps: Mapas alinhados com os cenários de M.
    """
    _check(P, M)
    if len(maps) != len(M):
        raise DimensionMismatch(len(M), len(maps), what="phi maps")
    pushed = []
    for m in maps:
        image = m.push(P)
        if image.dim != P.dim:
            raise DimensionMismatch(P.dim, image.dim, what=f"{m.kind} map image")
        pushed.append(image)
    return _aggregate(P, M, pushed)


def aggregate(P: FiniteMixtureMeasure, M: ScenarioSet, method: AggregationMethod | str) -> FiniteMixtureMeasure:
    method = AggregationMethod(method)
    if method is AggregationMethod.POINT_MASS:
        return aggregate_point_mass(P, M)
    return aggregate_shifting(P, M)


def aggregate_successive(P: FiniteMixtureMeasure, sets: Sequence[ScenarioSet],
                         method: AggregationMethod | str = AggregationMethod.POINT_MASS) -> FiniteMixtureMeasure:
    """Agrega os conjuntos um a um, da esquerda para a direita."""
    result = P
    for k, M in enumerate(sets):
        result = aggregate(result, M, method)
        logger.debug(f"successive aggregation step {k}: {len(result)} components")
    return result


def classify_affine_map(m: PhiMap, dim: int | None = None) -> MapClass:
    """
    Classifica pelo espectro de valores singulares da parte linear A:
    expansivo se σ_min >= 1, contrativo se σ_max <= 1, isometria se ambos.
    """
    if isinstance(m, PointwiseMap):
        raise UnsupportedMap("pointwise maps cannot be classified")
    if dim is None:
        if isinstance(m, AffineMap):
            dim = m.matrix.shape[0]
        elif isinstance(m, ConstantMap):
            dim = m.value.shape[0]
        else:
            dim = m.shift.shape[0]
    sigma = np.linalg.svd(np.asarray(m.linear_part(dim), dtype=float), compute_uv=False)
    expanding = float(sigma.min()) >= 1.0 - SINGULAR_TOL
    contracting = float(sigma.max()) <= 1.0 + SINGULAR_TOL
    if expanding and contracting:
        return MapClass.ISOMETRY
    if expanding:
        return MapClass.EXPANDING
    if contracting:
        return MapClass.CONTRACTING
    return MapClass.NEITHER
