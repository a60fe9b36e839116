"""
Codecs JSON dos documentos do pacote: medidas, quadrantes, requisitos,
conjuntos de cenários, mapas φ e funções de avaliação.

Documentos mal formados levantam FormatError indicando o campo com problema.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Callable

from quadrisk.errors import FormatError, QuadriskError
from quadrisk.measures import Empirical, FiniteMixtureMeasure, Gaussian, PointMass, make_gaussian
from quadrisk.quadrants import HalfSpace, Quadrant
from quadrisk.requirements import GeneralizedRequirement, QuadrantRequirement, RequirementSet
from quadrisk.scenarios import AffineMap, ConstantMap, EnhancedScenario, PhiMap, ScenarioSet, TranslationMap
from quadrisk.utils import as_matrix, as_vector, read_json
from quadrisk.valuation import LinearValuation, MaxAffineValuation, ValuationFunction

__all__ = [
    'measure_to_dict', 'measure_from_dict', 'quadrant_to_dict', 'quadrant_from_dict',
    'requirement_to_dict', 'requirement_from_dict', 'requirement_set_to_dict', 'requirement_set_from_dict',
    'requirement_list_to_dict', 'generalized_from_dict', 'generalized_to_dict',
    'scenario_set_to_dict', 'scenario_set_from_dict', 'scenario_sets_from_dict', 'scenario_sets_to_dict',
    'phi_map_to_dict', 'phi_map_from_dict', 'phi_maps_from_dict',
    'valuation_to_dict', 'valuation_from_dict', 'load_document',
]


def _get(doc: Any, key: str, where: str) -> Any:
    if not isinstance(doc, dict):
        raise FormatError(f"{where}: expected an object")
    if key not in doc:
        raise FormatError(f"{where}: missing field '{key}'")
    return doc[key]


def _decode(where: str, fn: Callable[[], Any]) -> Any:
    try:
        return fn()
    except QuadriskError:
        raise
    except (TypeError, ValueError, KeyError, IndexError) as e:
        raise FormatError(f"{where}: {e}") from e


def load_document(path: str | Path) -> Any:
    """Lê um arquivo JSON, convertendo erros de sintaxe/IO em FormatError."""
    try:
        return read_json(path)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON ({e})") from e
    except OSError as e:
        raise FormatError(f"{path}: {e.strerror or e}") from e


# -----------------------------------------------------------------------------
# Medidas
# -----------------------------------------------------------------------------
def measure_to_dict(measure: FiniteMixtureMeasure) -> dict:
    components = []
    for w, comp in measure:
        entry: dict[str, Any] = {"w": w, "kind": comp.kind}
        if isinstance(comp, Gaussian):
            entry["mean"] = comp.mean
            entry["cov"] = comp.cov
        elif isinstance(comp, PointMass):
            entry["loc"] = comp.loc
        else:
            entry["points"] = comp.points
        components.append(entry)
    return {"dim": measure.dim, "components": components}


def _component_from_dict(entry: dict, where: str):
    kind = _get(entry, "kind", where)
    if kind == "gaussian":
        return make_gaussian(_get(entry, "mean", where), _get(entry, "cov", where))
    if kind == "pointmass":
        return PointMass(as_vector(_get(entry, "loc", where), what="loc"))
    if kind == "empirical":
        return Empirical(as_matrix(_get(entry, "points", where), what="points"))
    raise FormatError(f"{where}: unknown component kind {kind!r}")


def measure_from_dict(doc: dict) -> FiniteMixtureMeasure:
    """Decodifica uma medida; a flag de probabilidade é deduzida dos pesos."""
    dim = _get(doc, "dim", "measure")
    entries = _get(doc, "components", "measure")
    if not isinstance(entries, list) or not entries:
        raise FormatError("measure: 'components' must be a non-empty list")

    def build():
        weights, comps = [], []
        for i, entry in enumerate(entries):
            where = f"measure.components[{i}]"
            weights.append(float(_get(entry, "w", where)))
            comps.append(_component_from_dict(entry, where))
        measure = FiniteMixtureMeasure.of(weights, comps)
        if measure.dim != int(dim):
            raise FormatError(f"measure: declared dim {dim} but components have dim {measure.dim}")
        return measure

    return _decode("measure", build)


# -----------------------------------------------------------------------------
# Quadrantes e requisitos
# -----------------------------------------------------------------------------
def quadrant_to_dict(q: Quadrant) -> dict:
    return {
        "dim": q.dim,
        "halfspaces": [{"normal": h.normal, "offset": h.offset} for h in q.halfspaces],
    }


def quadrant_from_dict(doc: dict, where: str = "quadrant") -> Quadrant:
    dim = _get(doc, "dim", where)
    entries = _get(doc, "halfspaces", where)
    if not isinstance(entries, list) or not entries:
        raise FormatError(f"{where}: 'halfspaces' must be a non-empty list")

    def build():
        halfspaces = tuple(
            HalfSpace.of(_get(h, "normal", f"{where}.halfspaces[{i}]"), float(_get(h, "offset", f"{where}.halfspaces[{i}]")))
            for i, h in enumerate(entries)
        )
        if halfspaces[0].dim != int(dim):
            raise FormatError(f"{where}: declared dim {dim} but normals have dim {halfspaces[0].dim}")
        return Quadrant(halfspaces)

    return _decode(where, build)


def requirement_to_dict(r: QuadrantRequirement) -> dict:
    return {"quadrant": quadrant_to_dict(r.quadrant), "floor": float(r.floor)}


def requirement_from_dict(doc: dict, where: str = "requirement") -> QuadrantRequirement:
    quadrant = quadrant_from_dict(_get(doc, "quadrant", where), f"{where}.quadrant")
    return _decode(where, lambda: QuadrantRequirement(quadrant, float(_get(doc, "floor", where))))


def requirement_set_to_dict(rs: RequirementSet) -> dict:
    return {"requirements": [requirement_to_dict(r) for r in rs]}


def _requirement_entries(doc: dict) -> list:
    entries = _get(doc, "requirements", "requirement set")
    if not isinstance(entries, list):
        raise FormatError("requirement set: 'requirements' must be a list")
    return [requirement_from_dict(e, f"requirements[{i}]") for i, e in enumerate(entries)]


def requirement_set_from_dict(doc: dict) -> RequirementSet:
    return RequirementSet(tuple(_requirement_entries(doc)))


def requirement_list_to_dict(requirements: list[QuadrantRequirement]) -> dict:
    return {"kind": "requirement-list", "requirements": [requirement_to_dict(r) for r in requirements]}


def generalized_to_dict(g: GeneralizedRequirement) -> dict:
    return {
        "terms": [{"coef": c, "quadrant": quadrant_to_dict(q)} for c, q in g.terms],
        "threshold": g.threshold,
    }


def generalized_from_dict(doc: dict) -> GeneralizedRequirement:
    entries = _get(doc, "terms", "generalized requirement")
    if not isinstance(entries, list):
        raise FormatError("generalized requirement: 'terms' must be a list")

    def build():
        terms = [
            (float(_get(t, "coef", f"terms[{i}]")),
             quadrant_from_dict(_get(t, "quadrant", f"terms[{i}]"), f"terms[{i}].quadrant"))
            for i, t in enumerate(entries)
        ]
        return GeneralizedRequirement(tuple(terms), float(_get(doc, "threshold", "generalized requirement")))

    return _decode("generalized requirement", build)


# -----------------------------------------------------------------------------
# Cenários e mapas φ
# -----------------------------------------------------------------------------
def scenario_set_to_dict(M: ScenarioSet) -> dict:
    return {"scenarios": [{"d": s.deflection, "p": float(s.probability)} for s in M]}


def scenario_set_from_dict(doc: dict, where: str = "scenario set") -> ScenarioSet:
    entries = _get(doc, "scenarios", where)
    if not isinstance(entries, list):
        raise FormatError(f"{where}: 'scenarios' must be a list")

    def build():
        return ScenarioSet(tuple(
            EnhancedScenario.of(_get(e, "d", f"{where}[{i}]"), float(_get(e, "p", f"{where}[{i}]")))
            for i, e in enumerate(entries)
        ))

    return _decode(where, build)


def scenario_sets_to_dict(sets: list[ScenarioSet]) -> dict:
    return {"sets": [scenario_set_to_dict(M) for M in sets]}


def scenario_sets_from_dict(doc: dict) -> list[ScenarioSet]:
    """Aceita {"sets": [...]} ou um conjunto único {"scenarios": [...]}."""
    if isinstance(doc, dict) and "sets" in doc:
        if not isinstance(doc["sets"], list):
            raise FormatError("'sets' must be a list")
        return [scenario_set_from_dict(s, f"sets[{i}]") for i, s in enumerate(doc["sets"])]
    return [scenario_set_from_dict(doc)]


def phi_map_to_dict(m: PhiMap) -> dict:
    if isinstance(m, ConstantMap):
        return {"kind": "constant", "d": m.value}
    if isinstance(m, TranslationMap):
        return {"kind": "translation", "d": m.shift}
    if isinstance(m, AffineMap):
        return {"kind": "affine", "A": m.matrix, "b": m.offset}
    raise FormatError(f"map kind {m.kind!r} cannot be serialised")


def phi_map_from_dict(doc: dict, where: str = "map") -> PhiMap:
    kind = _get(doc, "kind", where)

    def build():
        if kind == "constant":
            return ConstantMap(as_vector(_get(doc, "d", where), what="d"))
        if kind == "translation":
            return TranslationMap(as_vector(_get(doc, "d", where), what="d"))
        if kind == "affine":
            return AffineMap.of(_get(doc, "A", where), _get(doc, "b", where))
        raise FormatError(f"{where}: unknown map kind {kind!r}")

    return _decode(where, build)


def phi_maps_from_dict(doc: dict) -> list[PhiMap]:
    entries = _get(doc, "maps", "maps")
    if not isinstance(entries, list):
        raise FormatError("'maps' must be a list")
    return [phi_map_from_dict(e, f"maps[{i}]") for i, e in enumerate(entries)]


# -----------------------------------------------------------------------------
# Avaliação
# -----------------------------------------------------------------------------
def valuation_to_dict(V: ValuationFunction) -> dict:
    if isinstance(V, LinearValuation):
        out = {"kind": "linear", "a": V.a, "b": V.b}
        if V.constant:
            out["constant"] = True
        return out
    return {
        "kind": "maxaffine",
        "sign": V.sign,
        "pieces": [{"a": a, "b": float(b)} for a, b in zip(V.slopes, V.intercepts)],
    }


def valuation_from_dict(doc: dict) -> ValuationFunction:
    kind = _get(doc, "kind", "valuation")

    def build():
        if kind == "linear":
            return LinearValuation.of(_get(doc, "a", "valuation"), float(doc.get("b", 0.0)),
                                      bool(doc.get("constant", False)))
        if kind == "maxaffine":
            pieces = _get(doc, "pieces", "valuation")
            if not isinstance(pieces, list):
                raise FormatError("valuation: 'pieces' must be a list")
            return MaxAffineValuation.of(
                [(_get(p, "a", f"pieces[{i}]"), float(_get(p, "b", f"pieces[{i}]"))) for i, p in enumerate(pieces)],
                doc.get("sign", "max"),
            )
        raise FormatError(f"valuation: unknown kind {kind!r}")

    return _decode("valuation", build)
