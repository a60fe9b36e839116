"""
Solver de programação linear embutido: simplex denso em duas fases com regra de Bland.

Os problemas do pacote são pequenos (n <= 50, até algumas centenas de linhas), então
a implementação prioriza pivoteamento cuidadoso e determinismo.

Forma aceita:
    minimiza (ou maximiza) c·x
    sujeito a  A_ub x <= b_ub,  A_eq x = b_eq,  lo_j <= x_j <= hi_j
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from loguru import logger

from quadrisk.errors import DimensionMismatch, LpError

__all__ = ['LpStatus', 'LpResult', 'solve_lp', 'FEASIBILITY_TOL']

PIVOT_TOL = 1e-12
REDUCED_COST_TOL = 1e-10
FEASIBILITY_TOL = 1e-9
MAX_ITERATIONS = 50_000


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpResult:
    """Resultado do LP; `point` e `objective` só existem quando status é OPTIMAL."""
    status: LpStatus
    point: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Unbounded(Exception):
    pass


def _pivot(A: np.ndarray, b: np.ndarray, row: int, col: int) -> None:
    piv = A[row, col]
    A[row] /= piv
    b[row] /= piv
    factors = A[:, col].copy()
    factors[row] = 0.0
    A -= np.outer(factors, A[row])
    b -= factors * b[row]
    A[:, col] = 0.0
    A[row, col] = 1.0
    # ruído numérico não pode tornar a base inviável
    b[(b < 0.0) & (b > -1e-12)] = 0.0


def _run_simplex(A: np.ndarray, b: np.ndarray, c: np.ndarray, basis: list[int],
                 allowed: int, counter: list[int]) -> None:
    """
    Fase do simplex em forma canônica (A[:, basis] = I, b >= 0), minimizando c·x.

    Apenas as colunas < `allowed` podem entrar na base.
    """
    while True:
        counter[0] += 1
        if counter[0] > MAX_ITERATIONS:
            raise LpError(f"simplex did not converge in {MAX_ITERATIONS} iterations")
        reduced = c[:allowed] - c[basis] @ A[:, :allowed]
        candidates = np.flatnonzero(reduced < -REDUCED_COST_TOL)
        if candidates.size == 0:
            return
        # Bland: menor índice que melhora o objetivo
        col = int(candidates[0])
        column = A[:, col]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            raise _Unbounded()
        ratios = b[rows] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(A, b, row, col)
        basis[row] = col


def _transform_bounds(n: int, bounds) -> tuple[np.ndarray, np.ndarray, list[tuple[int, float]]]:
    """
    Reescreve x = offset + T y com y >= 0.

    Returns:
        offset (n), T (n x N) e a lista de limites superiores extras (coluna de y, valor).
    """
    if bounds is None:
        bounds = [(0.0, None)] * n
    elif len(bounds) == 2 and not isinstance(bounds[0], (tuple, list)):
        bounds = [tuple(bounds)] * n
    if len(bounds) != n:
        raise DimensionMismatch(n, len(bounds), what="bounds")

    offset = np.zeros(n)
    columns: list[np.ndarray] = []
    upper_rows: list[tuple[int, float]] = []
    for j, (lo, hi) in enumerate(bounds):
        lo = None if lo is None or lo == -np.inf else float(lo)
        hi = None if hi is None or hi == np.inf else float(hi)
        unit = np.zeros(n)
        unit[j] = 1.0
        if lo is not None:
            offset[j] = lo
            columns.append(unit)
            if hi is not None:
                upper_rows.append((len(columns) - 1, hi - lo))
        elif hi is not None:
            offset[j] = hi
            columns.append(-unit)
        else:
            columns.append(unit)
            columns.append(-unit)
    T = np.array(columns).T if columns else np.zeros((n, 0))
    return offset, T, upper_rows


def solve_lp(c: Sequence[float],
             A_ub=None, b_ub=None,
             A_eq=None, b_eq=None,
             bounds=None,
             maximize: bool = False) -> LpResult:
    """
    Resolve um LP pequeno pelo simplex em duas fases.

    Args:
        c: Vetor de custos (n).
        A_ub, b_ub: Restrições A_ub x <= b_ub.
        A_eq, b_eq: Restrições A_eq x = b_eq.
        bounds: Lista de pares (lo, hi) por variável, com None para infinito;
            um único par vale para todas; padrão (0, None).
        maximize: Maximiza em vez de minimizar.

    Returns:
        LpResult: status, ponto ótimo e valor do objetivo.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    n = c.shape[0]
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).reshape(-1)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).reshape(-1)
    if A_ub.shape[0] != b_ub.shape[0]:
        raise DimensionMismatch(A_ub.shape[0], b_ub.shape[0], what="b_ub")
    if A_eq.shape[0] != b_eq.shape[0]:
        raise DimensionMismatch(A_eq.shape[0], b_eq.shape[0], what="b_eq")

    scale = max(1.0,
                float(np.max(np.abs(b_ub))) if b_ub.size else 0.0,
                float(np.max(np.abs(b_eq))) if b_eq.size else 0.0)
    feas_tol = FEASIBILITY_TOL * scale

    offset, T, upper_rows = _transform_bounds(n, bounds)
    N = T.shape[1]

    # linhas em y: <= (originais e limites superiores) e =
    ub_rows = [A_ub @ T] if A_ub.size else []
    ub_rhs = [b_ub - A_ub @ offset] if A_ub.size else []
    if upper_rows:
        U = np.zeros((len(upper_rows), N))
        for i, (col, _) in enumerate(upper_rows):
            U[i, col] = 1.0
        ub_rows.append(U)
        ub_rhs.append(np.array([val for _, val in upper_rows]))
    G = np.vstack(ub_rows) if ub_rows else np.zeros((0, N))
    h = np.concatenate(ub_rhs) if ub_rhs else np.zeros(0)
    E = A_eq @ T if A_eq.size else np.zeros((0, N))
    e = b_eq - A_eq @ offset if A_eq.size else np.zeros(0)

    m_ub, m_eq = G.shape[0], E.shape[0]
    m = m_ub + m_eq
    cost_y = T.T @ c
    if maximize:
        cost_y = -cost_y

    if m == 0:
        if np.any(cost_y < -REDUCED_COST_TOL):
            return LpResult(LpStatus.UNBOUNDED)
        return LpResult(LpStatus.OPTIMAL, offset.copy(), float(c @ offset), 0)

    # forma padrão: [G I; E 0] [y; s] = [h; e], com linhas de rhs negativo invertidas
    width = N + m_ub
    A = np.zeros((m, width + m))
    A[:m_ub, :N] = G
    A[:m_ub, N:width] = np.eye(m_ub)
    A[m_ub:, :N] = E
    b = np.concatenate([h, e])
    negative = b < 0.0
    A[negative, :width] *= -1.0
    b[negative] *= -1.0
    A[:, width:] = np.eye(m)
    basis = list(range(width, width + m))
    counter = [0]

    # Fase 1: minimiza a soma das artificiais
    phase1 = np.zeros(width + m)
    phase1[width:] = 1.0
    _run_simplex(A, b, phase1, basis, width + m, counter)
    infeasibility = float(phase1[basis] @ b)
    if infeasibility > feas_tol:
        logger.debug(f"LP infeasible (phase-1 residual {infeasibility:.3g}, tol {feas_tol:.3g})")
        return LpResult(LpStatus.INFEASIBLE, iterations=counter[0])

    # retira artificiais da base; linhas sem pivô possível são redundantes
    keep = []
    for row in range(m):
        if basis[row] < width:
            keep.append(row)
            continue
        candidates = np.flatnonzero(np.abs(A[row, :width]) > 1e-9)
        if candidates.size == 0:
            continue
        col = int(candidates[np.argmax(np.abs(A[row, candidates]))])
        _pivot(A, b, row, col)
        basis[row] = col
        keep.append(row)
    A = A[keep][:, :width]
    b = b[keep]
    basis = [basis[r] for r in keep]

    # Fase 2
    phase2 = np.zeros(width)
    phase2[:N] = cost_y
    try:
        _run_simplex(A, b, phase2, basis, width, counter)
    except _Unbounded:
        return LpResult(LpStatus.UNBOUNDED, iterations=counter[0])

    z = np.zeros(width)
    z[basis] = b
    x = offset + T @ z[:N]
    violation = 0.0
    if A_ub.size:
        violation = max(violation, float(np.max(A_ub @ x - b_ub, initial=0.0)))
    if A_eq.size:
        violation = max(violation, float(np.max(np.abs(A_eq @ x - b_eq), initial=0.0)))
    if violation > feas_tol:
        logger.warning(f"LP solution violates constraints by {violation:.3g}")
    return LpResult(LpStatus.OPTIMAL, x, float(c @ x), counter[0])
