"""
Geometria poliédrica de quadrantes (interseções finitas de semi-espaços afins
fechados λ·x >= c): pertinência, ponto interior (centro de Chebyshev), não
degenerescência, restrição bilateral e bolas inscritas.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from loguru import logger

from quadrisk.errors import (
    BallDoesNotFit,
    DimensionMismatch,
    EmptyQuadrant,
    InvalidHalfSpace,
)
from quadrisk.lp import solve_lp
from quadrisk.utils import as_vector

__all__ = [
    'HalfSpace', 'Quadrant', 'InteriorPoint',
    'contains', 'interior_point', 'is_nondegenerate', 'is_two_sided_constrained', 'inscribe_ball',
    'MEMBERSHIP_TOL', 'MARGIN_TOL', 'INTERIOR_BOX', 'INSCRIBE_BOX', 'WHOLE_SPACE_OFFSET',
]

MEMBERSHIP_TOL = 1e-9
MARGIN_TOL = 1e-9
INTERIOR_BOX = 1e6
INSCRIBE_BOX = 1e9
WHOLE_SPACE_OFFSET = -1e9


@dataclass(frozen=True, eq=False)
class HalfSpace:
    """Semi-espaço fechado {x : normal·x >= offset}."""
    normal: np.ndarray
    offset: float

    def __post_init__(self):
        if not np.isfinite(self.offset):
            raise InvalidHalfSpace("offset must be finite")
        if self.normal.size == 0 or float(np.max(np.abs(self.normal))) <= 1e-12:
            raise InvalidHalfSpace("normal must be non-zero")

    @classmethod
    def of(cls, normal: Sequence[float], offset: float) -> "HalfSpace":
        try:
            vec = as_vector(normal, what="normal")
        except ValueError as e:
            raise InvalidHalfSpace(str(e)) from e
        return cls(vec, float(offset))

    @property
    def dim(self) -> int:
        return int(self.normal.shape[0])

    @cached_property
    def norm(self) -> float:
        return float(np.linalg.norm(self.normal))


@dataclass(frozen=True)
class InteriorPoint:
    point: np.ndarray
    margin: float
    has_interior: bool


@dataclass(frozen=True, eq=False)
class Quadrant:
    """
    Interseção não vazia de semi-espaços.

    A não vacuidade é verificada na construção: por substituição quando um ponto
    âncora é fornecido, senão por um LP de viabilidade.
    """
    halfspaces: tuple
    anchor: np.ndarray | None = None

    def __post_init__(self):
        if len(self.halfspaces) == 0:
            raise InvalidHalfSpace("a quadrant needs at least one half-space")
        dim = self.halfspaces[0].dim
        for h in self.halfspaces:
            if h.dim != dim:
                raise DimensionMismatch(dim, h.dim, what="half-space")
        anchor = self.anchor
        if anchor is not None:
            anchor = as_vector(anchor, what="anchor")
            if anchor.shape[0] != dim or not self._contains(anchor):
                anchor = None
        if anchor is None:
            anchor = self._feasible_point()
        object.__setattr__(self, "anchor", anchor)

    # ------------------------------------------------------------------
    # construtores
    # ------------------------------------------------------------------
    @classmethod
    def from_arrays(cls, normals, offsets, anchor=None) -> "Quadrant":
        normals = np.atleast_2d(np.asarray(normals, dtype=float))
        offsets = np.asarray(offsets, dtype=float).reshape(-1)
        if normals.shape[0] != offsets.shape[0]:
            raise DimensionMismatch(normals.shape[0], offsets.shape[0], what="offsets")
        return cls(tuple(HalfSpace.of(lam, c) for lam, c in zip(normals, offsets)), anchor)

    @classmethod
    def halfspace(cls, normal: Sequence[float], offset: float) -> "Quadrant":
        return cls((HalfSpace.of(normal, offset),))

    @classmethod
    def singleton(cls, point: Sequence[float]) -> "Quadrant":
        """O ponto {d}, codificado por 2n semi-espaços ±e_j·x >= ±d_j."""
        d = as_vector(point, what="point")
        eye = np.eye(d.shape[0])
        halfspaces = []
        for j in range(d.shape[0]):
            halfspaces.append(HalfSpace(eye[j].copy(), float(d[j])))
            halfspaces.append(HalfSpace(-eye[j], -float(d[j])))
        return cls(tuple(halfspaces), d)

    @classmethod
    def box(cls, lo: Sequence[float | None], hi: Sequence[float | None]) -> "Quadrant":
        """
        Caixa alinhada aos eixos lo <= x <= hi (None = ilimitado naquele lado).

        Args:
            lo: Limites inferiores por coordenada.
            hi: Limites superiores por coordenada.
        """
        if len(lo) != len(hi):
            raise DimensionMismatch(len(lo), len(hi), what="box bounds")
        n = len(lo)
        eye = np.eye(n)
        halfspaces = []
        anchor = np.zeros(n)
        for j in range(n):
            a, b = lo[j], hi[j]
            if a is not None and b is not None and a > b:
                raise EmptyQuadrant(f"box is empty along axis {j}: {a} > {b}")
            if a is not None:
                halfspaces.append(HalfSpace(eye[j].copy(), float(a)))
            if b is not None:
                halfspaces.append(HalfSpace(-eye[j], -float(b)))
            if a is not None and b is not None:
                anchor[j] = (a + b) / 2.0
            elif a is not None:
                anchor[j] = a
            elif b is not None:
                anchor[j] = b
        if not halfspaces:
            return cls.whole_space(n)
        return cls(tuple(halfspaces), anchor)

    @classmethod
    def whole_space(cls, n: int) -> "Quadrant":
        """Representante de ℝⁿ: x_1 >= -1e9."""
        normal = np.zeros(n)
        normal[0] = 1.0
        return cls((HalfSpace(normal, WHOLE_SPACE_OFFSET),), np.zeros(n))

    # ------------------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.halfspaces[0].dim

    @cached_property
    def normals(self) -> np.ndarray:
        return np.array([h.normal for h in self.halfspaces])

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.array([h.offset for h in self.halfspaces])

    @cached_property
    def norms(self) -> np.ndarray:
        return np.array([h.norm for h in self.halfspaces])

    @cached_property
    def is_axis_aligned(self) -> bool:
        return bool(np.all(np.count_nonzero(self.normals, axis=1) == 1))

    def _contains(self, x: np.ndarray) -> bool:
        return bool(np.all(self.normals @ x >= self.offsets - MEMBERSHIP_TOL))

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        """Pertinência vetorizada para uma matriz (k, n) de pontos."""
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise DimensionMismatch(self.dim, points.shape[-1], what="points")
        return np.all(points @ self.normals.T >= self.offsets - MEMBERSHIP_TOL, axis=1)

    def _feasible_point(self) -> np.ndarray:
        # λ·x >= c  <=>  -λ·x <= -c
        result = solve_lp(
            np.zeros(self.dim),
            A_ub=-self.normals,
            b_ub=-self.offsets,
            bounds=(None, None),
        )
        if not result.is_optimal:
            raise EmptyQuadrant("half-space intersection is empty")
        return result.point

    @cached_property
    def chebyshev(self) -> InteriorPoint:
        return _chebyshev(self)

    def __repr__(self) -> str:
        return f"Quadrant(dim={self.dim}, halfspaces={len(self.halfspaces)})"


def contains(q: Quadrant, x: Sequence[float]) -> bool:
    """Verdadeiro se λ_i·x >= c_i - 1e-9 para todo semi-espaço (conjunto fechado)."""
    vec = np.asarray(x, dtype=float).reshape(-1)
    if vec.shape[0] != q.dim:
        raise DimensionMismatch(q.dim, vec.shape[0], what="point")
    return q._contains(vec)


def _chebyshev(q: Quadrant) -> InteriorPoint:
    # variáveis [y, t] com x = anchor + y, |y_j| <= 1e6; maximiza t
    n = q.dim
    unit = q.normals / q.norms[:, None]
    slack = unit @ q.anchor - q.offsets / q.norms
    A_ub = np.hstack([-unit, np.ones((len(q.halfspaces), 1))])
    bounds = [(-INTERIOR_BOX, INTERIOR_BOX)] * n + [(None, INTERIOR_BOX)]
    c = np.zeros(n + 1)
    c[-1] = 1.0
    result = solve_lp(c, A_ub=A_ub, b_ub=slack, bounds=bounds, maximize=True)
    if not result.is_optimal:
        logger.warning(f"Chebyshev LP ended with status {result.status.value}; using anchor")
        return InteriorPoint(q.anchor, 0.0, False)
    margin = float(result.point[-1])
    if margin <= MARGIN_TOL:
        return InteriorPoint(q.anchor, max(margin, 0.0), False)
    point = q.anchor + result.point[:n]
    return InteriorPoint(point, margin, True)


def interior_point(q: Quadrant) -> InteriorPoint:
    """
    Ponto de margem máxima (centro de Chebyshev dentro da caixa de meia-largura 1e6
    em torno da âncora). Sem interior, devolve um ponto viável com has_interior=False.
    """
    return q.chebyshev


def is_nondegenerate(q: Quadrant) -> bool:
    """Medida de Lebesgue positiva, isto é, interior não vazio."""
    return q.chebyshev.margin > MARGIN_TOL


def is_two_sided_constrained(q: Quadrant) -> bool:
    """
    Verdadeiro se o quadrante cabe numa faixa λ⁻¹([a, b]).

    Equivale ao cone de recessão {x : λ_i·x >= 0} ter interior vazio: maximiza t
    com λ̂_i·x >= t e ‖x‖∞ <= 1.
    """
    n = q.dim
    unit = q.normals / q.norms[:, None]
    A_ub = np.hstack([-unit, np.ones((len(q.halfspaces), 1))])
    bounds = [(-1.0, 1.0)] * n + [(None, None)]
    c = np.zeros(n + 1)
    c[-1] = 1.0
    result = solve_lp(c, A_ub=A_ub, b_ub=np.zeros(len(q.halfspaces)), bounds=bounds, maximize=True)
    t = float(result.point[-1]) if result.is_optimal else 0.0
    logger.debug(f"recession cone margin t={t:.3g}")
    return t <= MARGIN_TOL


def inscribe_ball(q: Quadrant, radius: float) -> np.ndarray:
    """
    Centro d de uma bola euclidiana de raio `radius` contida no quadrante.

    Entre os centros viáveis, devolve o de menor norma ℓ1 (d = u - v, u, v >= 0).

    Args:
        q: Quadrante.
        radius: Raio (>= 0).

    Returns:
        np.ndarray: Centro d com λ_i·d >= c_i + radius·‖λ_i‖.

    Raises:
        BallDoesNotFit: se nenhuma bola cabe dentro da caixa de meia-largura 1e9.
    """
    r = float(radius)
    if not np.isfinite(r) or r < 0.0:
        raise ValueError("radius must be a non-negative real")
    n = q.dim
    unit = q.normals / q.norms[:, None]
    rhs = q.offsets / q.norms + r
    # -λ̂·(u - v) <= -(ĉ + r)
    A_ub = np.hstack([-unit, unit])
    result = solve_lp(np.ones(2 * n), A_ub=A_ub, b_ub=-rhs, bounds=(0.0, None))
    if not result.is_optimal:
        raise BallDoesNotFit(r)
    d = result.point[:n] - result.point[n:]
    if float(np.max(np.abs(d))) > INSCRIBE_BOX:
        raise BallDoesNotFit(r, f"ball of radius {r:g} only fits outside the search box")
    tol = 1e-9 * max(1.0, r, float(np.max(np.abs(rhs))))
    if np.any(unit @ d < rhs - tol):
        raise BallDoesNotFit(r, f"ball of radius {r:g}: centre failed verification")
    return d
