"""
Exceções do quadrisk.

Todas derivam de `QuadriskError`; erros de valor também derivam de `ValueError`.
"""

__all__ = [
    'QuadriskError', 'DimensionMismatch', 'NonProbabilityMeasure', 'InvalidMeasure',
    'InvalidHalfSpace', 'EmptyQuadrant', 'BallDoesNotFit', 'InvalidRequirement',
    'InvalidScenario', 'UnsupportedMap', 'SynthesisError', 'TwoSidedConstrainedQuadrant',
    'TotalProbabilityOne', 'BallPlacementFailed', 'InvalidSynthesisParams', 'NotInvertible',
    'MissingPointMass', 'NotSufficientInitially', 'GridTooLarge', 'AlphaOutOfRange',
    'InvalidValuation', 'FormatError', 'LpError',
]


class QuadriskError(Exception):
    """Erro base do pacote."""


class DimensionMismatch(QuadriskError, ValueError):
    """Objetos de dimensões diferentes combinados na mesma operação."""

    def __init__(self, expected: int, got: int, what: str = "vector"):
        self.expected = expected
        self.got = got
        super().__init__(f"dimension mismatch for {what}: expected {expected}, got {got}")


class NonProbabilityMeasure(QuadriskError, ValueError):
    """Operação exige medida de probabilidade (pesos >= 0 somando 1)."""


class InvalidMeasure(QuadriskError, ValueError):
    """Componente ou mistura mal formada (covariância não PSD, empírica vazia...)."""


class InvalidHalfSpace(QuadriskError, ValueError):
    """Semi-espaço com forma linear nula ou parâmetros não finitos."""


class EmptyQuadrant(QuadriskError, ValueError):
    """Interseção de semi-espaços vazia."""


class BallDoesNotFit(QuadriskError):
    """Nenhuma bola do raio pedido cabe no quadrante (dentro da caixa de busca)."""

    def __init__(self, radius: float, message: str = ""):
        self.radius = radius
        super().__init__(message or f"no ball of radius {radius:g} fits in the quadrant")


class InvalidRequirement(QuadriskError, ValueError):
    """Piso fora de [0,1], soma de pisos > 1 ou requisito generalizado vazio."""


class InvalidScenario(QuadriskError, ValueError):
    """Probabilidade de cenário fora de [0,1] ou soma > 1."""


class UnsupportedMap(QuadriskError, ValueError):
    """Mapa phi não suportado para a operação pedida."""


class SynthesisError(QuadriskError):
    """Base dos erros de pré-condição da síntese de cenários."""


class TwoSidedConstrainedQuadrant(SynthesisError):
    """Quadrante limitado dos dois lados: o teorema de deslocamento não se aplica."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"quadrant #{index} is two-sided constrained")


class TotalProbabilityOne(SynthesisError):
    """Soma dos pisos >= 1."""

    def __init__(self, total: float):
        self.total = total
        super().__init__(f"total requirement probability {total:.12g} is not < 1")


class BallPlacementFailed(SynthesisError):
    """inscribe_ball falhou no raio escolhido para o quadrante indicado."""

    def __init__(self, index: int, radius: float):
        self.index = index
        self.radius = radius
        super().__init__(f"ball of radius {radius:g} could not be placed in quadrant #{index}")


class InvalidSynthesisParams(SynthesisError, ValueError):
    """Parâmetros manuais (epsilon, raio) inconsistentes com o conjunto de requisitos."""


class NotInvertible(QuadriskError, ValueError):
    """Agregação por massa pontual com p_M >= 1 não é injetiva."""


class MissingPointMass(QuadriskError, ValueError):
    """A medida não possui o átomo exigido na deflexão do cenário."""

    def __init__(self, index: int, missing: float):
        self.index = index
        self.missing = missing
        super().__init__(f"scenario #{index}: measure lacks point mass {missing:.12g} at its deflection")


class NotSufficientInitially(QuadriskError):
    """O conjunto completo de cenários já não satisfaz os requisitos."""


class GridTooLarge(QuadriskError, ValueError):
    """Grade de hipercubos com mais de 10^6 células."""


class AlphaOutOfRange(QuadriskError, ValueError):
    """Nível alpha fora de (0,1)."""


class InvalidValuation(QuadriskError, ValueError):
    """Função de avaliação mal formada."""


class FormatError(QuadriskError, ValueError):
    """Documento JSON mal formado."""


class LpError(QuadriskError):
    """Falha numérica do simplex (limite de iterações)."""
