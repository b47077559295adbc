"""JSON system documents, CSV modulus tables and JSON reports."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

from .core import (
    ALL,
    INF,
    ContinuityClass,
    FiniteMetricSpace,
    NonautonomousSystem,
    SystemMap,
    as_fraction,
    format_fraction,
    validate_space,
)


class DocumentError(ValueError):
    """A document could not be parsed or failed validation; ``where`` names the field or line."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass(frozen=True)
class LoadedSystem:
    space: FiniteMetricSpace
    system: SystemMap | NonautonomousSystem
    cls: ContinuityClass = ALL

    @property
    def autonomous(self) -> bool:
        return isinstance(self.system, SystemMap)


def _rational(value, where) -> Fraction:
    try:
        return as_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise DocumentError(where, f"not an exact rational ({exc})") from None


def _exact_sqrt(q: Fraction, where) -> Fraction:
    num, den = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if num * num != q.numerator or den * den != q.denominator:
        raise DocumentError(where, f"L2 distance sqrt({format_fraction(q)}) is irrational")
    return Fraction(num, den)


def _embedded_matrix(spec, n) -> list[list[Fraction]]:
    coords = spec.get("coords")
    norm = spec.get("norm", "L2")
    if not isinstance(coords, list) or len(coords) != n:
        raise DocumentError("metric.embedded.coords", f"expected a list of {n} coordinates")
    pts = []
    for i, c in enumerate(coords):
        c = c if isinstance(c, list) else [c]
        pts.append([_rational(v, f"metric.embedded.coords[{i}]") for v in c])
    if len({len(p) for p in pts}) != 1:
        raise DocumentError("metric.embedded.coords", "coordinates have differing dimensions")

    def dist(i, j):
        a, b = pts[i], pts[j]
        diffs = [abs(x - y) for x, y in zip(a, b)]
        if norm == "L1":
            return sum(diffs, Fraction(0))
        if norm == "Linf":
            return max(diffs)
        if norm == "L2":
            return _exact_sqrt(sum((v * v for v in diffs), Fraction(0)), f"metric.embedded (points {i},{j})")
        if norm == "circle":
            if len(a) != 1:
                raise DocumentError("metric.embedded.norm", "circle norm needs one coordinate per point")
            t = diffs[0] % 1
            return min(t, 1 - t)
        raise DocumentError("metric.embedded.norm", f"unknown norm {norm!r}")

    return [[dist(i, j) for j in range(n)] for i in range(n)]


def _map_from(images, space: FiniteMetricSpace, where) -> SystemMap:
    if not isinstance(images, list) or len(images) != space.n:
        raise DocumentError(where, f"expected a list of {space.n} point indices")
    out = []
    for i, v in enumerate(images):
        if isinstance(v, bool) or not isinstance(v, (int, str)):
            raise DocumentError(f"{where}[{i}]", "expected a point index or label")
        try:
            out.append(space.index(v))
        except (KeyError, IndexError) as exc:
            raise DocumentError(f"{where}[{i}]", str(exc)) from None
    return SystemMap(space, tuple(out))


def system_from_document(doc: dict) -> LoadedSystem:
    if not isinstance(doc, dict):
        raise DocumentError("document", "expected a JSON object")
    labels = doc.get("labels")
    if not isinstance(labels, list) or not labels or not all(isinstance(x, str) for x in labels):
        raise DocumentError("labels", "expected a nonempty list of strings")
    if len(set(labels)) != len(labels):
        raise DocumentError("labels", "labels must be distinct")
    n = len(labels)
    metric = doc.get("metric")
    if not isinstance(metric, dict):
        raise DocumentError("metric", "expected an object with 'matrix' or 'embedded'")
    if "matrix" in metric:
        rows = metric["matrix"]
        if not isinstance(rows, list) or len(rows) != n or any(not isinstance(r, list) or len(r) != n for r in rows):
            raise DocumentError("metric.matrix", f"expected a {n}x{n} matrix")
        matrix = [[_rational(v, f"metric.matrix[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(rows)]
    elif "embedded" in metric:
        matrix = _embedded_matrix(metric["embedded"], n)
    else:
        raise DocumentError("metric", "expected 'matrix' or 'embedded'")
    space = FiniteMetricSpace(tuple(labels), tuple(tuple(r) for r in matrix))
    bad = validate_space(space)
    if bad is not None:
        names = ", ".join(labels[i] for i in bad.points)
        raise DocumentError("metric", f"{bad.kind} violation at points {bad.points} ({names})")

    if "map" in doc and "maps" in doc:
        raise DocumentError("map", "give either 'map' or 'maps', not both")
    if "map" in doc:
        system = _map_from(doc["map"], space, "map")
    elif "maps" in doc:
        maps = doc["maps"]
        if not isinstance(maps, dict):
            raise DocumentError("maps", "expected {'preperiod': [...], 'period': [...]}")
        pre = [_map_from(m, space, f"maps.preperiod[{i}]") for i, m in enumerate(maps.get("preperiod", []))]
        per = [_map_from(m, space, f"maps.period[{i}]") for i, m in enumerate(maps.get("period", []))]
        if not per:
            raise DocumentError("maps.period", "period must be nonempty")
        system = NonautonomousSystem(tuple(pre), tuple(per))
    else:
        raise DocumentError("map", "missing 'map' or 'maps'")

    cls = ALL
    if "class" in doc:
        try:
            cls = ContinuityClass.parse(doc["class"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DocumentError("class", str(exc)) from None
    return LoadedSystem(space, system, cls)


def system_to_document(system: SystemMap | NonautonomousSystem, cls: ContinuityClass = ALL, **extra) -> dict:
    space = system.space
    doc: dict[str, Any] = {
        "labels": list(space.labels),
        "metric": {"matrix": [[format_fraction(v) for v in row] for row in space.dist]},
    }
    if isinstance(system, SystemMap):
        doc["map"] = list(system.image)
    else:
        doc["maps"] = {
            "preperiod": [list(g.image) for g in system.preperiod],
            "period": [list(g.image) for g in system.period],
        }
    if not cls.is_all:
        doc["class"] = {"lipschitz": format_fraction(cls.lipschitz)}
    doc.update(extra)
    return doc


def read_json(path) -> Any:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None


def load_system(source) -> LoadedSystem:
    """Load a system from a path or an already parsed document."""
    doc = source if isinstance(source, dict) else read_json(source)
    return system_from_document(doc)


def write_json(doc, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")


def table_to_csv(table) -> str:
    from .analyze import COLUMNS

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("epsilon",) + COLUMNS)
    for eps, row in zip(table.epsilons, table.rows):
        writer.writerow([format_fraction(eps)] + [format_fraction(row[c]) for c in COLUMNS])
    return buf.getvalue()


def _parse_threshold(text: str):
    return INF if text == "inf" else Fraction(text)


def table_from_csv(text: str, cls: ContinuityClass = ALL):
    from .analyze import COLUMNS, ModulusTable

    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != ("epsilon",) + COLUMNS:
        raise DocumentError("csv header", f"unexpected columns {header}")
    epsilons, rows = [], []
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != len(header):
            raise DocumentError(f"line {lineno}", "wrong number of fields")
        epsilons.append(Fraction(rec[0]))
        rows.append({c: _parse_threshold(v) for c, v in zip(COLUMNS, rec[1:])})
    return ModulusTable(epsilons, rows, cls)


def save_results(obj, path, labels=None) -> Path:
    """Write a modulus table (CSV), report, verdict or system (JSON) to ``path``."""
    from .analyze import EquivalenceReport, ModulusTable
    from .pseudo import ShadowingVerdict, witness_document

    path = Path(path)
    if isinstance(obj, ModulusTable):
        path.write_text(table_to_csv(obj))
    elif isinstance(obj, EquivalenceReport):
        write_json(obj.to_document(), path)
    elif isinstance(obj, ShadowingVerdict):
        if labels is None:
            raise ValueError("witness documents need point labels")
        write_json(witness_document(obj, labels), path)
    elif isinstance(obj, (SystemMap, NonautonomousSystem)):
        write_json(system_to_document(obj), path)
    elif isinstance(obj, LoadedSystem):
        write_json(system_to_document(obj.system, obj.cls), path)
    elif isinstance(obj, dict):
        write_json(obj, path)
    else:
        raise TypeError(f"don't know how to save {type(obj).__name__}")
    return path


def load_table(path, cls: ContinuityClass = ALL):
    return table_from_csv(Path(path).read_text(), cls)


def pseudo_orbit_from_document(doc: dict, space: FiniteMetricSpace):
    """Read ``{"preperiod", "period", "delta"}``; a check witness (``"prefix"``) is also accepted."""
    from .pseudo import PseudoOrbit

    if not isinstance(doc, dict):
        raise DocumentError("pseudo-orbit", "expected a JSON object")

    def points(key):
        vals = doc.get(key, [])
        if not isinstance(vals, list):
            raise DocumentError(key, "expected a list of points")
        out = []
        for i, v in enumerate(vals):
            try:
                out.append(space.index(v))
            except (KeyError, IndexError, TypeError) as exc:
                raise DocumentError(f"{key}[{i}]", str(exc)) from None
        return tuple(out)

    pre = points("prefix") if "prefix" in doc else points("preperiod")
    per = points("period")
    if not pre and not per:
        raise DocumentError("preperiod", "pseudo-orbit is empty")
    delta = _rational(doc["delta"], "delta") if "delta" in doc else None
    return PseudoOrbit(pre, per, delta)
