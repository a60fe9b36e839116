"""
Módulo de utilitários para conversão e validação de vetores/matrizes
e para a escrita determinística de documentos JSON.
"""

import json
import math
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from quadrisk.errors import DimensionMismatch, InvalidMeasure

__all__ = ['as_vector', 'as_matrix', 'check_dim', 'to_list', 'dump_json', 'write_json', 'read_json']


def as_vector(values: Sequence[float], what: str = "vector") -> np.ndarray:
    """
    Converte uma sequência em vetor numpy 1-D de floats finitos.

    Args:
        values: Coordenadas (lista, tupla ou array).
        what: Nome do objeto, usado nas mensagens de erro.

    Returns:
        np.ndarray: Vetor de dimensão n >= 1 (cópia somente leitura).
    """
    arr = np.array(values, dtype=float).reshape(-1) if np.ndim(values) <= 1 else None
    if arr is None:
        raise InvalidMeasure(f"{what} must be one-dimensional")
    if arr.size == 0:
        raise InvalidMeasure(f"{what} must have at least one coordinate")
    if not np.all(np.isfinite(arr)):
        raise InvalidMeasure(f"{what} has non-finite entries")
    arr.setflags(write=False)
    return arr


def as_matrix(values, rows: int | None = None, cols: int | None = None, what: str = "matrix") -> np.ndarray:
    """Converte em matriz 2-D finita, conferindo forma quando informada."""
    arr = np.array(values, dtype=float)
    if arr.ndim != 2:
        raise InvalidMeasure(f"{what} must be two-dimensional")
    if rows is not None and arr.shape[0] != rows:
        raise DimensionMismatch(rows, arr.shape[0], what=f"{what} rows")
    if cols is not None and arr.shape[1] != cols:
        raise DimensionMismatch(cols, arr.shape[1], what=f"{what} columns")
    if not np.all(np.isfinite(arr)):
        raise InvalidMeasure(f"{what} has non-finite entries")
    arr.setflags(write=False)
    return arr


def check_dim(expected: int, got: int, what: str = "vector") -> None:
    if expected != got:
        raise DimensionMismatch(expected, got, what=what)


def to_list(value: Any) -> Any:
    """Converte arrays/escalares numpy em tipos nativos para serialização JSON."""
    if isinstance(value, np.ndarray):
        return [to_list(v) for v in value.tolist()] if value.ndim > 1 else [float(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, dict):
        return {k: to_list(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_list(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        # JSON não aceita inf/nan: representamos como string
        return repr(value)
    return value


def dump_json(document: dict) -> str:
    """Serializa de forma determinística (ordem de inserção, indent=2)."""
    return json.dumps(to_list(document), indent=2, ensure_ascii=False) + "\n"


def write_json(document: dict, output: str | Path | None) -> str:
    """
    Escreve o documento em `output` ou retorna o texto para stdout.

    Args:
        document: Documento a serializar.
        output: Caminho de saída ou None/"-" para stdout.

    Returns:
        str: O texto serializado.
    """
    text = dump_json(document)
    if output not in (None, "-"):
        path = Path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    return text


def read_json(path: str | Path) -> Any:
    """Lê um arquivo JSON (UTF-8)."""
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
