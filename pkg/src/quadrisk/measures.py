"""
Medidas de probabilidade no espaço de fatores de risco como misturas finitas de
componentes Gaussianas, massas pontuais e empíricas.

A classe é fechada sob translação, pushforward afim e inserção de massas pontuais,
que são todas as operações usadas pelos métodos de agregação de cenários.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, ClassVar, Iterable, Sequence, Union

import numpy as np
from loguru import logger

from quadrisk import config
from quadrisk.errors import (
    DimensionMismatch,
    InvalidMeasure,
    NonProbabilityMeasure,
    UnsupportedMap,
)
from quadrisk.seeding import chunk_generator, chunk_sizes
from quadrisk.utils import as_matrix, as_vector

__all__ = [
    'Gaussian', 'PointMass', 'Empirical', 'Component', 'FiniteMixtureMeasure',
    'make_gaussian', 'gaussian', 'point_mass', 'empirical',
    'sample', 'translate', 'affine_pushforward', 'scale', 'mix', 'mean',
    'max_ball_mass_bound', 'apply_pointwise', 'canonical_components', 'measures_equal',
    'WEIGHT_TOL', 'PSD_TOL',
]

WEIGHT_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Gaussian:
    """Componente N(mean, cov); a covariância é simétrica PSD (eventualmente singular)."""
    mean: np.ndarray
    cov: np.ndarray
    kind: ClassVar[str] = "gaussian"

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    @cached_property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        values, vectors = np.linalg.eigh(self.cov)
        return np.clip(values, 0.0, None), vectors

    @cached_property
    def factor(self) -> np.ndarray:
        # L com L L^T = cov, válido também para covariâncias singulares
        values, vectors = self.eig
        return vectors * np.sqrt(values)

    @cached_property
    def is_diagonal(self) -> bool:
        return bool(np.all(self.cov[~np.eye(self.dim, dtype=bool)] == 0.0))

    def params(self) -> tuple:
        return tuple(self.mean.tolist()) + tuple(self.cov.reshape(-1).tolist())


@dataclass(frozen=True, eq=False)
class PointMass:
    """Massa pontual (Dirac) em `loc`."""
    loc: np.ndarray
    kind: ClassVar[str] = "pointmass"

    @property
    def dim(self) -> int:
        return int(self.loc.shape[0])

    def params(self) -> tuple:
        return tuple(self.loc.tolist())


@dataclass(frozen=True, eq=False)
class Empirical:
    """Distribuição empírica: pesos iguais sobre `points` (k x n)."""
    points: np.ndarray
    kind: ClassVar[str] = "empirical"

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise InvalidMeasure("empirical component needs at least one point")

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    @cached_property
    def sorted_first_axis(self) -> np.ndarray:
        return np.sort(self.points[:, 0])

    def params(self) -> tuple:
        return (self.points.shape[0],) + tuple(self.points.reshape(-1).tolist())


Component = Union[Gaussian, PointMass, Empirical]

_KIND_ORDER = {"gaussian": 0, "pointmass": 1, "empirical": 2}


def make_gaussian(mean: Sequence[float], cov) -> Gaussian | PointMass:
    """
    Constrói uma componente Gaussiana validando a covariância.

    Autovalores em [-1e-10, 0) são truncados em 0; valores mais negativos são erro.
    Covariância nula vira massa pontual.

    Args:
        mean: Vetor de médias (n).
        cov: Matriz de covariância (n x n).

    Returns:
        Gaussian | PointMass
    """
    mu = as_vector(mean, what="mean")
    n = mu.shape[0]
    sigma = np.array(as_matrix(cov, rows=n, cols=n, what="covariance"))
    scale_ = max(1.0, float(np.max(np.abs(sigma))))
    if not np.allclose(sigma, sigma.T, rtol=0.0, atol=1e-9 * scale_):
        raise InvalidMeasure("covariance must be symmetric")
    sigma = (sigma + sigma.T) / 2.0
    values, vectors = np.linalg.eigh(sigma)
    if values.min() < -PSD_TOL * scale_:
        raise InvalidMeasure(f"covariance is not positive semi-definite (eigenvalue {values.min():.3g})")
    if values.max() <= 0.0:
        return PointMass(mu)
    if values.min() < 0.0:
        sigma = (vectors * np.clip(values, 0.0, None)) @ vectors.T
        sigma = (sigma + sigma.T) / 2.0
    sigma.setflags(write=False)
    return Gaussian(mu, sigma)


@dataclass(frozen=True, eq=False)
class FiniteMixtureMeasure:
    """
    Mistura finita Σ w_k C_k.

    Com `is_probability=True` os pesos são não negativos e somam 1 (tolerância 1e-12);
    com a flag desligada a mistura pode ser uma medida com sinal.
    """
    weights: np.ndarray
    components: tuple
    dim: int
    is_probability: bool = True

    def __post_init__(self):
        if len(self.components) == 0:
            raise InvalidMeasure("a mixture needs at least one component")
        if len(self.weights) != len(self.components):
            raise InvalidMeasure("weights and components differ in length")
        if not np.all(np.isfinite(self.weights)):
            raise InvalidMeasure("weights must be finite")
        for comp in self.components:
            if comp.dim != self.dim:
                raise DimensionMismatch(self.dim, comp.dim, what="component")
        if self.is_probability and not _is_probability_vector(self.weights):
            raise NonProbabilityMeasure(
                f"weights {self.weights.tolist()} do not form a probability vector"
            )

    @classmethod
    def of(cls, weights: Iterable[float], components: Iterable[Component],
           probability: bool | None = None) -> "FiniteMixtureMeasure":
        """Constrói a mistura; `probability=None` detecta a flag pelos pesos."""
        w = np.array(list(weights), dtype=float)
        comps = tuple(components)
        if not comps:
            raise InvalidMeasure("a mixture needs at least one component")
        if probability is None:
            probability = _is_probability_vector(w)
        w.setflags(write=False)
        return cls(w, comps, comps[0].dim, bool(probability))

    @classmethod
    def single(cls, component: Component) -> "FiniteMixtureMeasure":
        return cls.of([1.0], [component], probability=True)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def __iter__(self):
        return iter(zip(self.weights.tolist(), self.components))

    def __len__(self) -> int:
        return len(self.components)


def _is_probability_vector(w: np.ndarray) -> bool:
    return bool(np.all(w >= 0.0) and abs(float(np.sum(w)) - 1.0) <= WEIGHT_TOL)


def gaussian(mean: Sequence[float], cov) -> FiniteMixtureMeasure:
    return FiniteMixtureMeasure.single(make_gaussian(mean, cov))


def point_mass(loc: Sequence[float]) -> FiniteMixtureMeasure:
    return FiniteMixtureMeasure.single(PointMass(as_vector(loc, what="location")))


def empirical(points) -> FiniteMixtureMeasure:
    return FiniteMixtureMeasure.single(Empirical(as_matrix(points, what="points")))


# -----------------------------------------------------------------------------
# Amostragem
# -----------------------------------------------------------------------------
def _sample_chunk(measure: FiniteMixtureMeasure, size: int, seed: int, index: int) -> np.ndarray:
    rng = chunk_generator(seed, index)
    out = np.empty((size, measure.dim), dtype=float)
    if len(measure) == 1:
        labels = np.zeros(size, dtype=np.int64)
    else:
        p = np.asarray(measure.weights, dtype=float)
        labels = rng.choice(len(measure), size=size, p=p / p.sum())
    for k, comp in enumerate(measure.components):
        idx = np.flatnonzero(labels == k)
        if idx.size == 0:
            continue
        if isinstance(comp, PointMass):
            out[idx] = comp.loc
        elif isinstance(comp, Gaussian):
            z = rng.standard_normal((idx.size, comp.dim))
            out[idx] = comp.mean + z @ comp.factor.T
        else:
            picks = rng.integers(0, comp.points.shape[0], size=idx.size)
            out[idx] = comp.points[picks]
    return out


def sample(measure: FiniteMixtureMeasure, count: int, seed: int,
           workers: int | None = None, chunk_size: int | None = None) -> np.ndarray:
    """
    Sorteia `count` pontos da medida de probabilidade.

    A amostra é dividida em chunks de tamanho fixo, cada um com gerador derivado
    de (seed, índice do chunk); o resultado concatenado não depende de `workers`.

    Args:
        measure: Medida de probabilidade.
        count: Número de pontos (> 0).
        seed: Semente de 64 bits.
        workers: Threads de amostragem (padrão: QUADRISK_MC_WORKERS).
        chunk_size: Tamanho do chunk (padrão: QUADRISK_MC_CHUNK).

    Returns:
        np.ndarray: matriz (count, n).
    """
    if not measure.is_probability:
        raise NonProbabilityMeasure("sampling requires a probability measure")
    if count <= 0:
        raise ValueError("count must be a positive integer")
    chunk_size = int(chunk_size or config.MC_CHUNK_SIZE)
    workers = int(workers or config.MC_WORKERS)
    sizes = chunk_sizes(count, chunk_size)

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            chunks = list(executor.map(lambda i: _sample_chunk(measure, sizes[i], seed, i), range(len(sizes))))
    else:
        chunks = [_sample_chunk(measure, size, seed, i) for i, size in enumerate(sizes)]
    return np.concatenate(chunks, axis=0)


# -----------------------------------------------------------------------------
# Transformações
# -----------------------------------------------------------------------------
def _map_component(comp: Component, A: np.ndarray, b: np.ndarray) -> Component:
    if isinstance(comp, Gaussian):
        return make_gaussian(A @ comp.mean + b, A @ comp.cov @ A.T)
    if isinstance(comp, PointMass):
        return PointMass(_frozen(A @ comp.loc + b))
    return Empirical(_frozen(comp.points @ A.T + b))


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def translate(measure: FiniteMixtureMeasure, d: Sequence[float]) -> FiniteMixtureMeasure:
    """Pushforward por x -> x + d; covariâncias e pesos ficam inalterados."""
    shift = as_vector(d, what="deflection")
    if shift.shape[0] != measure.dim:
        raise DimensionMismatch(measure.dim, shift.shape[0], what="deflection")
    comps = []
    for comp in measure.components:
        if isinstance(comp, Gaussian):
            comps.append(Gaussian(_frozen(comp.mean + shift), comp.cov))
        elif isinstance(comp, PointMass):
            comps.append(PointMass(_frozen(comp.loc + shift)))
        else:
            comps.append(Empirical(_frozen(comp.points + shift)))
    return FiniteMixtureMeasure(measure.weights, tuple(comps), measure.dim, measure.is_probability)


def affine_pushforward(measure: FiniteMixtureMeasure, A, b: Sequence[float]) -> FiniteMixtureMeasure:
    """
    Pushforward por x -> A x + b, com A de forma m x n.

    Gaussianas continuam Gaussianas (média A μ + b, covariância A Σ Aᵀ); covariância
    nula colapsa em massa pontual.
    """
    A = as_matrix(A, cols=measure.dim, what="map matrix")
    b = as_vector(b, what="map offset")
    if b.shape[0] != A.shape[0]:
        raise DimensionMismatch(A.shape[0], b.shape[0], what="map offset")
    comps = tuple(_map_component(c, A, b) for c in measure.components)
    return FiniteMixtureMeasure(measure.weights, comps, int(A.shape[0]), measure.is_probability)


def scale(measure: FiniteMixtureMeasure, c: float) -> FiniteMixtureMeasure:
    """Dilatação x -> c·x."""
    n = measure.dim
    return affine_pushforward(measure, float(c) * np.eye(n), np.zeros(n))


def mix(parts: Sequence[tuple[float, FiniteMixtureMeasure]]) -> FiniteMixtureMeasure:
    """
    Achata uma mistura de misturas multiplicando os pesos.

    A flag de probabilidade é mantida se os pesos externos são >= 0, somam 1
    e todas as partes são medidas de probabilidade.
    """
    if not parts:
        raise InvalidMeasure("mix needs at least one part")
    dim = parts[0][1].dim
    weights: list[float] = []
    comps: list[Component] = []
    for w, part in parts:
        if part.dim != dim:
            raise DimensionMismatch(dim, part.dim, what="mixture part")
        weights.extend((float(w) * part.weights).tolist())
        comps.extend(part.components)
    outer = np.array([float(w) for w, _ in parts])
    probability = _is_probability_vector(outer) and all(p.is_probability for _, p in parts)
    if probability and not _is_probability_vector(np.array(weights)):
        # erro de arredondamento acumulado no produto dos pesos
        total = math.fsum(weights)
        weights = [w / total for w in weights]
    return FiniteMixtureMeasure.of(weights, comps, probability=probability)


def mean(measure: FiniteMixtureMeasure) -> np.ndarray:
    """Média analítica Σ w_k E[C_k] (para medidas com sinal, a integral de x)."""
    total = np.zeros(measure.dim)
    for w, comp in measure:
        if isinstance(comp, Gaussian):
            total = total + w * comp.mean
        elif isinstance(comp, PointMass):
            total = total + w * comp.loc
        else:
            total = total + w * comp.points.mean(axis=0)
    return total


def max_ball_mass_bound(measure: FiniteMixtureMeasure, radius: float) -> float:
    """
    Cota superior para sup_B P(B) sobre bolas B de raio `radius`.

    Gaussianas: a bola cabe num cubo de lado 2r nos eixos próprios, e cada eixo
    contribui no máximo min(1, 2r · densidade máxima). Átomos e pontos empíricos
    contribuem com o peso inteiro.
    """
    if not measure.is_probability:
        raise NonProbabilityMeasure("ball-mass bound requires a probability measure")
    r = float(radius)
    bound = 0.0
    for w, comp in measure:
        if isinstance(comp, Gaussian):
            values, _ = comp.eig
            factors = [
                1.0 if lam <= 0.0 else min(1.0, 2.0 * r / (math.sqrt(lam) * math.sqrt(2.0 * math.pi)))
                for lam in values.tolist()
            ]
            bound += w * float(np.prod(factors))
        else:
            bound += w
    return min(1.0, bound)


def apply_pointwise(measure: FiniteMixtureMeasure,
                    fn: Callable[[np.ndarray], Sequence[float]]) -> FiniteMixtureMeasure:
    """
    Experimental: pushforward por uma função arbitrária, apenas para componentes
    atômicas (massas pontuais e empíricas).
    """
    comps = []
    for comp in measure.components:
        if isinstance(comp, Gaussian):
            raise UnsupportedMap("pointwise maps only apply to point-mass and empirical components")
        if isinstance(comp, PointMass):
            comps.append(PointMass(as_vector(fn(comp.loc), what="mapped point")))
        else:
            pts = np.array([as_vector(fn(p), what="mapped point") for p in comp.points])
            comps.append(Empirical(_frozen(pts)))
    dims = {c.dim for c in comps}
    if len(dims) != 1:
        raise DimensionMismatch(comps[0].dim, max(dims), what="mapped component")
    logger.debug(f"apply_pointwise: mapped {len(comps)} atomic components")
    return FiniteMixtureMeasure(measure.weights, tuple(comps), comps[0].dim, measure.is_probability)


# -----------------------------------------------------------------------------
# Comparação canônica
# -----------------------------------------------------------------------------
def canonical_components(measure: FiniteMixtureMeasure) -> list[tuple[float, Component]]:
    """Componentes ordenadas por tipo, parâmetros e peso."""
    return sorted(
        measure,
        key=lambda wc: (_KIND_ORDER[wc[1].kind], wc[1].params(), wc[0]),
    )


def measures_equal(a: FiniteMixtureMeasure, b: FiniteMixtureMeasure, atol: float = 1e-12) -> bool:
    """Igualdade componente a componente após ordenação canônica (sem fusão de componentes)."""
    if a.dim != b.dim or len(a) != len(b):
        return False
    for (wa, ca), (wb, cb) in zip(canonical_components(a), canonical_components(b)):
        if ca.kind != cb.kind or abs(wa - wb) > atol:
            return False
        pa, pb = ca.params(), cb.params()
        if len(pa) != len(pb):
            return False
        if not np.allclose(pa, pb, rtol=0.0, atol=atol):
            return False
    return True
