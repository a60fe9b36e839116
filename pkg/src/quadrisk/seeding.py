"""
Sementes determinísticas para todo o pipeline.

Uma única seed de execução; sub-etapas derivam suas sementes por hash rotulado,
de modo que adicionar uma etapa não altera as demais. A amostragem é feita em
chunks de tamanho fixo com gerador próprio por (seed, índice do chunk).
"""
import hashlib

import numpy as np

__all__ = ['derive_seed', 'normalize_seed', 'chunk_generator', 'chunk_sizes']

_MASK64 = (1 << 64) - 1


def normalize_seed(seed: int) -> int:
    """Reduz qualquer inteiro a um inteiro não negativo de 64 bits."""
    return int(seed) & _MASK64


def derive_seed(seed: int, *labels) -> int:
    """
    Deriva uma semente de 64 bits a partir da seed mestre e de rótulos.

    Args:
        seed: seed mestre.
        *labels: rótulos (str ou int) que identificam a sub-etapa.

    Returns:
        Inteiro em [0, 2^64).
    """
    combined = "-".join([str(normalize_seed(seed))] + [str(label) for label in labels])
    digest = hashlib.sha256(combined.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def chunk_generator(seed: int, index: int) -> np.random.Generator:
    """Gerador numpy do chunk `index` da seed `seed`."""
    return np.random.default_rng(np.random.SeedSequence([normalize_seed(seed), int(index)]))


def chunk_sizes(count: int, chunk_size: int) -> list[int]:
    """Divide `count` em chunks de tamanho fixo (o último pode ser menor)."""
    if count <= 0:
        return []
    full, rest = divmod(int(count), int(chunk_size))
    sizes = [int(chunk_size)] * full
    if rest:
        sizes.append(rest)
    return sizes
