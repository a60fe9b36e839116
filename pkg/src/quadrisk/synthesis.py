"""
Pontes construtivas entre conjuntos de requisitos e conjuntos de cenários:
síntese por massa pontual e por deslocamento, requisitos a partir de cenários,
recuperação da medida base, poda de subconjuntos suficientes e truncamento finito
em hipercubos.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
from loguru import logger
from scipy.stats import chi2

from quadrisk import config
from quadrisk.errors import (
    BallDoesNotFit,
    BallPlacementFailed,
    GridTooLarge,
    InvalidMeasure,
    InvalidRequirement,
    InvalidSynthesisParams,
    MissingPointMass,
    NonProbabilityMeasure,
    NotInvertible,
    NotSufficientInitially,
    TotalProbabilityOne,
    TwoSidedConstrainedQuadrant,
)
from quadrisk.measures import (
    Empirical,
    FiniteMixtureMeasure,
    Gaussian,
    PointMass,
    max_ball_mass_bound,
    mean,
    sample,
    scale,
)
from quadrisk.quadrants import (
    MEMBERSHIP_TOL,
    Quadrant,
    inscribe_ball,
    interior_point,
    is_two_sided_constrained,
)
from quadrisk.requirements import (
    CheckPolicy,
    Overall,
    QuadrantRequirement,
    RequirementSet,
    SetReport,
    interval_probability,
    check_set,
)
from quadrisk.scenarios import EnhancedScenario, ScenarioSet, aggregate_point_mass
from quadrisk.seeding import derive_seed

__all__ = [
    'ShiftingSynthesisParams', 'ShiftingSynthesis', 'TailBound',
    'scenarios_from_requirements_pointmass', 'scenarios_from_requirements_shifting',
    'requirements_from_scenarios', 'recover_base_measure', 'sufficient_subset',
    'hypercube_requirements', 'in_pointmass_image', 'scale_to_ball_bound', 'tail_mass_bound',
    'MAX_GRID_CELLS',
]

MAX_GRID_CELLS = 1_000_000
DEFAULT_TAIL_BUDGET = 200_000
ATOM_TOL = 1e-12


@dataclass(frozen=True)
class ShiftingSynthesisParams:
    """Parâmetros manuais; None em epsilon/radius significa escolha automática."""
    epsilon: float | None = None
    radius: float | None = None
    tail_budget: int = DEFAULT_TAIL_BUDGET

    def __post_init__(self):
        if self.epsilon is not None and not (0.0 < self.epsilon < 1.0):
            raise InvalidSynthesisParams(f"epsilon {self.epsilon} outside (0, 1)")
        if self.radius is not None and not self.radius > 0.0:
            raise InvalidSynthesisParams(f"radius {self.radius} must be positive")
        if self.tail_budget < 1:
            raise InvalidSynthesisParams("tail_budget must be positive")


@dataclass(frozen=True)
class TailBound:
    """Cota superior para P(‖x - centro‖ > R)."""
    value: float
    method: str


@dataclass(frozen=True)
class ShiftingSynthesis:
    scenarios: ScenarioSet
    epsilon: float
    radius: float
    center: np.ndarray
    tail: TailBound

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "radius": self.radius,
            "center": self.center,
            "tail_mass": self.tail.value,
            "tail_method": self.tail.method,
        }


# -----------------------------------------------------------------------------
# Requisitos -> cenários
# -----------------------------------------------------------------------------
def scenarios_from_requirements_pointmass(rs: RequirementSet) -> ScenarioSet:
    """
    Um cenário por requisito, com deflexão no centro de Chebyshev do quadrante
    (ponto viável qualquer se não houver interior) e probabilidade igual ao piso.

    Para qualquer P, aggregate_point_mass(P, resultado) satisfaz rs.
    """
    scenarios = []
    for i, r in enumerate(rs):
        ip = interior_point(r.quadrant)
        if not ip.has_interior:
            logger.debug(f"requirement #{i}: degenerate quadrant, using feasible point")
        scenarios.append(EnhancedScenario(ip.point, float(r.floor)))
    return ScenarioSet(tuple(scenarios))


def _single_gaussian(P: FiniteMixtureMeasure) -> Gaussian | None:
    gaussians = [c for w, c in P if w > 0.0 and isinstance(c, Gaussian)]
    others = [c for w, c in P if w > 0.0 and not isinstance(c, Gaussian)]
    if len(gaussians) == 1 and not others:
        return gaussians[0]
    return None


class _TailEstimator:
    """Avalia a cota de cauda para vários raios reaproveitando uma única amostra."""

    def __init__(self, P: FiniteMixtureMeasure, center: np.ndarray, budget: int, seed: int, z: float):
        self.P = P
        self.center = center
        self.z = z
        self.gaussian = _single_gaussian(P)
        self.atomic = all(not isinstance(c, Gaussian) for c in P.components)
        self._norms = None
        self.floor = 0.0
        if self.gaussian is None and not self.atomic:
            points = sample(P, budget, derive_seed(seed, "tail"))
            self._norms = np.linalg.norm(points - center, axis=1)
            self.budget = budget
            # p_hat = 0 still leaves z/n in the upper bound
            self.floor = z / budget

    def __call__(self, radius: float) -> TailBound:
        if self.gaussian is not None:
            # ‖x - μ‖² <= λ_max ‖z‖², z ~ N(0, I)
            lam = float(self.gaussian.eig[0].max())
            offset = float(np.linalg.norm(self.gaussian.mean - self.center))
            if radius <= offset:
                return TailBound(1.0, "analytic-chi2")
            return TailBound(float(chi2.sf((radius - offset) ** 2 / lam, self.gaussian.dim)), "analytic-chi2")
        if self.atomic:
            total = 0.0
            for w, comp in self.P:
                pts = comp.loc[None, :] if isinstance(comp, PointMass) else comp.points
                total += w * float(np.mean(np.linalg.norm(pts - self.center, axis=1) > radius))
            return TailBound(total, "exact")
        p_hat = float(np.mean(self._norms > radius))
        n = self.budget
        upper = p_hat + self.z * math.sqrt((p_hat * (1.0 - p_hat) + 1.0 / n) / n)
        return TailBound(min(1.0, upper), "monte-carlo-ucb")


def tail_mass_bound(P: FiniteMixtureMeasure, radius: float, center=None,
                    budget: int = DEFAULT_TAIL_BUDGET, seed: int | None = None) -> TailBound:
    """Cota superior de P(‖x - centro‖ > radius); o centro padrão é a média de P."""
    center = mean(P) if center is None else np.asarray(center, dtype=float)
    seed = config.DEFAULT_SEED if seed is None else seed
    return _TailEstimator(P, center, budget, seed, config.DEFAULT_CONFIDENCE_Z)(radius)


def _search_radius(tail: _TailEstimator, target: float) -> float:
    radius = 1.0
    doublings = 0
    while tail(radius).value >= target:
        radius *= 2.0
        doublings += 1
        if doublings > 200:
            raise InvalidSynthesisParams("no finite radius reaches the tail target")
    halvings = 0
    while halvings < 60 and tail(radius / 2.0).value < target:
        radius /= 2.0
        halvings += 1
    return radius


def scenarios_from_requirements_shifting(P: FiniteMixtureMeasure, rs: RequirementSet,
                                         params: ShiftingSynthesisParams | None = None,
                                         seed: int | None = None) -> ShiftingSynthesis:
    """
    Síntese por deslocamento.

    Escolha automática: ε = (1 - p_Q)/2, R por busca geométrica até que a cauda
    P(‖x - centro‖ > R) fique abaixo de ε/2, deflexões nos centros de bolas de raio R
    inscritas nos quadrantes (menos o centro de P) e probabilidades floor/(1 - ε).

    Args:
        P: Medida de probabilidade base.
        rs: Conjunto de requisitos sem quadrantes bilateralmente restritos e com p_Q < 1.
        params: Parâmetros manuais opcionais.
        seed: Semente para a estimativa de cauda por Monte Carlo.

    Returns:
        ShiftingSynthesis com o conjunto de cenários e os parâmetros escolhidos.
    """
    if not P.is_probability:
        raise NonProbabilityMeasure("shifting synthesis requires a probability measure")
    params = params or ShiftingSynthesisParams()
    seed = config.DEFAULT_SEED if seed is None else int(seed)
    for i, r in enumerate(rs):
        if r.dim != P.dim:
            raise InvalidRequirement(f"requirement #{i} has dimension {r.dim}, measure has {P.dim}")
        if is_two_sided_constrained(r.quadrant):
            raise TwoSidedConstrainedQuadrant(i)
    total = rs.total
    if total >= 1.0:
        raise TotalProbabilityOne(total)

    center = mean(P)
    if len(rs) == 0:
        return ShiftingSynthesis(ScenarioSet(), 0.5, 0.0, center, TailBound(0.0, "exact"))

    epsilon = params.epsilon if params.epsilon is not None else (1.0 - total) / 2.0
    if total / (1.0 - epsilon) > 1.0 + 1e-12:
        raise InvalidSynthesisParams(f"p_Q/(1-epsilon) = {total / (1.0 - epsilon):.6g} exceeds 1")

    tail = _TailEstimator(P, center, params.tail_budget, seed, config.DEFAULT_CONFIDENCE_Z)
    target = epsilon if params.radius is not None else epsilon / 2.0
    if tail.floor >= target:
        needed = math.floor(config.DEFAULT_CONFIDENCE_Z / target) + 1
        raise InvalidSynthesisParams(
            f"tail_budget {params.tail_budget} cannot certify a tail below {target:.6g}; "
            f"at least {needed} samples are needed"
        )
    if params.radius is not None:
        radius = float(params.radius)
        bound = tail(radius)
        if bound.value >= epsilon:
            raise InvalidSynthesisParams(
                f"tail mass bound {bound.value:.6g} at radius {radius:g} is not below epsilon {epsilon:g}"
            )
    else:
        radius = _search_radius(tail, target)
        bound = tail(radius)
    logger.info(f"shifting synthesis: epsilon={epsilon:.6g}, R={radius:.6g}, "
                f"tail={bound.value:.3g} ({bound.method})")

    scenarios = []
    for i, r in enumerate(rs):
        try:
            ball_center = inscribe_ball(r.quadrant, radius)
        except BallDoesNotFit as e:
            raise BallPlacementFailed(i, radius) from e
        scenarios.append(EnhancedScenario(ball_center - center, float(r.floor) / (1.0 - epsilon)))
    return ShiftingSynthesis(ScenarioSet(tuple(scenarios)), epsilon, radius, center, bound)


# -----------------------------------------------------------------------------
# Cenários -> requisitos, recuperação e imagem
# -----------------------------------------------------------------------------
def requirements_from_scenarios(M: ScenarioSet) -> RequirementSet:
    """Um requisito ({d_S}, p_S) por cenário."""
    return RequirementSet(tuple(
        QuadrantRequirement(Quadrant.singleton(s.deflection), float(s.probability)) for s in M
    ))


def recover_base_measure(Q: FiniteMixtureMeasure, M: ScenarioSet) -> FiniteMixtureMeasure:
    """
    Inverte a agregação por massa pontual: P = (Q - Σ p_S δ_{d_S}) / (1 - p_M).

    Os cenários são processados do último para o primeiro, descontando de cada
    átomo na deflexão (o mais recente primeiro); átomos tocados que chegam a zero
    são removidos.

    Raises:
        NotInvertible: p_M >= 1.
        MissingPointMass: Q não tem massa pontual suficiente numa deflexão.
    """
    p_m = M.total
    if p_m >= 1.0:
        raise NotInvertible(f"p_M = {p_m:.12g}: point-mass aggregation is not injective")
    if M.dim is not None and M.dim != Q.dim:
        raise InvalidMeasure(f"scenario dimension {M.dim} differs from measure dimension {Q.dim}")

    weights = Q.weights.astype(float).tolist()
    comps = list(Q.components)
    touched: set[int] = set()
    for idx in reversed(range(len(M))):
        s = M.scenarios[idx]
        need = float(s.probability)
        atoms = [
            j for j, c in enumerate(comps)
            if isinstance(c, PointMass) and np.allclose(c.loc, s.deflection, rtol=0.0, atol=ATOM_TOL)
        ]
        for j in reversed(atoms):
            take = min(max(weights[j], 0.0), need)
            weights[j] -= take
            need -= take
            touched.add(j)
            if need <= ATOM_TOL:
                break
        if need > ATOM_TOL:
            raise MissingPointMass(idx, need)

    keep = [j for j in range(len(comps)) if not (j in touched and weights[j] <= ATOM_TOL)]
    if not keep:
        raise NotInvertible("no mass left after removing the scenario atoms")
    new_weights = np.array([weights[j] / (1.0 - p_m) for j in keep])
    probability = Q.is_probability
    if probability:
        new_weights = np.clip(new_weights, 0.0, None)
        new_weights = new_weights / math.fsum(new_weights)
    return FiniteMixtureMeasure.of(new_weights, [comps[j] for j in keep], probability=probability)


def in_pointmass_image(Q: FiniteMixtureMeasure, M: ScenarioSet, policy: CheckPolicy | None = None) -> bool:
    """
    Q pertence à imagem de P -> P_M^pt se e somente se Q({d}) >= Σ p_S sobre os
    cenários com deflexão d.
    """
    merged: list[tuple[np.ndarray, float]] = []
    for s in M:
        for k, (d, p) in enumerate(merged):
            if np.allclose(d, s.deflection, rtol=0.0, atol=ATOM_TOL):
                merged[k] = (d, p + float(s.probability))
                break
        else:
            merged.append((s.deflection, float(s.probability)))
    rs = RequirementSet(tuple(QuadrantRequirement(Quadrant.singleton(d), min(1.0, p)) for d, p in merged))
    return check_set(Q, rs, policy).overall is Overall.ALL_SATISFIED


# -----------------------------------------------------------------------------
# Suficiência
# -----------------------------------------------------------------------------
def _passes(P: FiniteMixtureMeasure, M: ScenarioSet, rs: RequirementSet, policy: CheckPolicy) -> SetReport:
    report = check_set(aggregate_point_mass(P, M), rs, policy)
    if any(not r.estimate.is_exact for r in report.results):
        logger.warning("sufficiency check used Monte Carlo estimates; pruning is no longer exact")
    return report


def sufficient_subset(M: ScenarioSet, rs: RequirementSet, P: FiniteMixtureMeasure,
                      policy: CheckPolicy | None = None) -> ScenarioSet:
    """
    Eliminação gulosa: remove repetidamente o primeiro cenário cuja remoção mantém
    todos os requisitos satisfeitos, até nenhum poder ser removido.
    """
    policy = policy or CheckPolicy()
    if _passes(P, M, rs, policy).overall is not Overall.ALL_SATISFIED:
        raise NotSufficientInitially("the full scenario set does not satisfy the requirements")
    current = M
    changed = True
    while changed and len(current) > 0:
        changed = False
        for i in range(len(current)):
            candidate = current.without(i)
            if _passes(P, candidate, rs, policy).overall is Overall.ALL_SATISFIED:
                logger.debug(f"sufficient_subset: dropped scenario at position {i}")
                current = candidate
                changed = True
                break
    return current


# -----------------------------------------------------------------------------
# Truncamento em hipercubos
# -----------------------------------------------------------------------------
def _closed_cells(edges: np.ndarray, x: float) -> np.ndarray:
    return ((edges[:-1] - MEMBERSHIP_TOL <= x) & (x <= edges[1:] + MEMBERSHIP_TOL)).astype(float)


def _outer(vectors: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.multiply.outer, vectors)


def hypercube_requirements(P: FiniteMixtureMeasure, lo: Sequence[float], hi: Sequence[float],
                           cells_per_axis: int, budget: int | None = None, seed: int | None = None,
                           z: float = 3.0) -> list[QuadrantRequirement]:
    """
    Requisitos sobre as células fechadas de uma grade regular em [lo, hi].

    O piso de cada célula é P(célula) menos z erros-padrão de Monte Carlo
    (nada é subtraído nos caminhos exatos), truncado em [0, 1]. Os pisos podem
    somar mais que 1, por isso o retorno é uma lista simples.

    Args:
        P: Medida de probabilidade.
        lo, hi: Cantos da grade (lo < hi em cada eixo).
        cells_per_axis: Número de células por eixo.
        budget: Amostras de Monte Carlo para componentes sem caminho exato.
        seed: Semente mestre.
        z: Margem em erros-padrão.

    Returns:
        list[QuadrantRequirement]: em ordem lexicográfica dos índices das células.
    """
    lo = np.asarray(lo, dtype=float).reshape(-1)
    hi = np.asarray(hi, dtype=float).reshape(-1)
    n = P.dim
    if lo.shape[0] != n or hi.shape[0] != n:
        raise InvalidRequirement("grid corners must match the measure dimension")
    if not np.all(lo < hi):
        raise InvalidRequirement("grid requires lo < hi on every axis")
    cells = int(cells_per_axis)
    if cells < 1:
        raise InvalidRequirement("cells_per_axis must be positive")
    if cells ** n > MAX_GRID_CELLS:
        raise GridTooLarge(f"{cells}^{n} cells exceed the limit of {MAX_GRID_CELLS}")
    budget = int(budget or config.DEFAULT_MC_BUDGET)
    seed = config.DEFAULT_SEED if seed is None else int(seed)

    edges = [np.linspace(lo[j], hi[j], cells + 1) for j in range(n)]
    shape = (cells,) * n
    value = np.zeros(shape)
    variance = np.zeros(shape)
    for k, (w, comp) in enumerate(P):
        if isinstance(comp, PointMass):
            value += w * _outer([_closed_cells(edges[j], comp.loc[j]) for j in range(n)])
        elif isinstance(comp, Empirical):
            acc = np.zeros(shape)
            for point in comp.points:
                acc += _outer([_closed_cells(edges[j], point[j]) for j in range(n)])
            value += w * acc / comp.points.shape[0]
        elif comp.is_diagonal:
            sigmas = np.sqrt(np.diag(comp.cov))
            axes = [
                np.array([
                    interval_probability(float(comp.mean[j]), float(sigmas[j]), edges[j][i], edges[j][i + 1])
                    for i in range(cells)
                ])
                for j in range(n)
            ]
            value += w * _outer(axes)
        else:
            points = sample(FiniteMixtureMeasure.single(comp), budget, derive_seed(seed, "component", k))
            inside = np.all((points >= lo) & (points <= hi), axis=1)
            pts = points[inside]
            idx = [
                np.clip(np.floor((pts[:, j] - lo[j]) / (hi[j] - lo[j]) * cells).astype(np.int64), 0, cells - 1)
                for j in range(n)
            ]
            flat = np.ravel_multi_index(idx, shape) if n > 1 else idx[0]
            counts = np.bincount(flat, minlength=cells ** n).reshape(shape)
            p_hat = counts / budget
            value += w * p_hat
            variance += (w ** 2) * p_hat * (1.0 - p_hat) / budget
            logger.debug(f"hypercube: component #{k} binned from {budget} samples")

    floors = np.clip(value - z * np.sqrt(variance), 0.0, 1.0)
    requirements = []
    for index in np.ndindex(*shape):
        cell_lo = [float(edges[j][index[j]]) for j in range(n)]
        cell_hi = [float(edges[j][index[j] + 1]) for j in range(n)]
        requirements.append(QuadrantRequirement(Quadrant.box(cell_lo, cell_hi), float(floors[index])))
    logger.info(f"hypercube_requirements: {len(requirements)} cells, total floor {float(floors.sum()):.6g}")
    return requirements


# -----------------------------------------------------------------------------
# Dilatação para o contraexemplo
# -----------------------------------------------------------------------------
def scale_to_ball_bound(P: FiniteMixtureMeasure, radius: float, p_max: float,
                        max_doublings: int = 200) -> tuple[float, FiniteMixtureMeasure]:
    """
    Procura c (dobrando a partir de 1) tal que toda bola de raio `radius` tenha
    massa < p_max sob a dilatação de P por c.

    Returns:
        (c, medida dilatada)
    """
    atoms = sum(w for w, c in P if not isinstance(c, Gaussian))
    if atoms >= p_max:
        raise InvalidMeasure(f"atomic mass {atoms:.6g} already reaches p_max; no dilation helps")
    factor = 1.0
    scaled = P
    for _ in range(max_doublings):
        if max_ball_mass_bound(scaled, radius) < p_max:
            return factor, scaled
        factor *= 2.0
        scaled = scale(P, factor)
    raise InvalidMeasure("dilation search did not reach the ball-mass bound")
