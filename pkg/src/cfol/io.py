"""Reading and writing the JSON and text file formats."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .amalgam import PointedExtension
from .errors import InputError
from .formulas import FormulaFamily, enumerate_formulas
from .parser import parse_formula
from .signature import Signature
from .structures import FiniteMetric, Structure
from .syntax import Formula

__all__ = [
    "read_json",
    "dumps",
    "write_json",
    "load_signature",
    "load_structure",
    "save_structure",
    "load_metric",
    "load_formula",
    "load_formulas",
    "load_family_dir",
    "load_tracked",
    "parse_context",
]


def read_json(path: str | Path) -> Any:
    p = Path(path)
    try:
        with p.open(encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"no such file: {p}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{p}: invalid JSON ({exc})") from None


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def write_json(data: Any, path: str | Path) -> None:
    Path(path).write_text(dumps(data), encoding="utf-8")


def load_signature(path: str | Path) -> Signature:
    return Signature.from_json(read_json(path))


def _signature_field(data: dict, base: Path) -> Signature:
    sig = data.get("signature")
    if sig is None:
        raise InputError("structure file has no signature")
    if isinstance(sig, str):
        return load_signature(base / sig)
    return Signature.from_json(sig)


def load_structure(path: str | Path) -> Structure:
    """A structure file; ``signature`` is inline or a path relative to the file."""
    p = Path(path)
    data = read_json(p)
    try:
        return Structure.from_json(data, _signature_field(data, p.parent))
    except (KeyError, TypeError) as exc:
        raise InputError(f"{p}: malformed structure file ({exc!r})") from None


def save_structure(m: Structure, path: str | Path) -> None:
    write_json(m.to_json(), path)


def load_metric(path: str | Path, sort: str | None = None) -> FiniteMetric:
    """``{"points": [...], "metric": [[...]]}`` or a structure file (one sort picked)."""
    p = Path(path)
    data = read_json(p)
    if "points" in data:
        return FiniteMetric(data["points"], data["metric"])
    m = load_structure(p)
    if sort is None:
        if len(m.carriers) != 1:
            raise InputError(f"{p}: structure has several sorts; name one")
        sort = next(iter(m.carriers))
    return m.metric_space(sort)


def parse_context(text: str | None) -> dict[str, str]:
    """``"x:S,y:S"`` -> ``{"x": "S", "y": "S"}``."""
    if not text:
        return {}
    out = {}
    for part in text.split(","):
        name, sep, sort = part.strip().partition(":")
        if not sep or not name or not sort:
            raise InputError(f"bad context entry {part!r}; expected name:Sort")
        out[name.strip()] = sort.strip()
    return out


def _text_lines(p: Path) -> list[str]:
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(f"no such file: {p}") from None
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]


def load_formula(path: str | Path, sig: Signature, context: dict[str, str] | None = None) -> Formula:
    """A text file holding one formula, or JSON ``{"formula": ..., "context": {...}}``."""
    p = Path(path)
    if p.suffix == ".json":
        data = read_json(p)
        ctx = dict(data.get("context", {}))
        ctx.update(context or {})
        return parse_formula(data["formula"], sig, ctx, infer_free=not ctx)
    lines = _text_lines(p)
    if len(lines) != 1:
        raise InputError(f"{p}: expected exactly one formula, found {len(lines)} lines")
    return parse_formula(lines[0], sig, context, infer_free=not context)


def load_formulas(path: str | Path, sig: Signature, context: dict[str, str] | None = None) -> FormulaFamily:
    """A formula family file.

    JSON forms: ``{"formulas": [...], "context": {...}}`` or
    ``{"generate": {...}}`` with keyword arguments for the deterministic
    generator.  Text form: one formula per line, ``#`` comments.
    """
    p = Path(path)
    ctx = dict(context or {})
    if p.suffix == ".json":
        data = read_json(p)
        if "generate" in data:
            params = dict(data["generate"])
            gctx = params.pop("context", ctx)
            return enumerate_formulas(sig, gctx, **params)
        file_ctx = data.get("context") or data.get("variables") or {}
        if isinstance(file_ctx, list):
            file_ctx = dict(file_ctx)
        ctx = {**file_ctx, **ctx}
        formulas = [parse_formula(t, sig, ctx, infer_free=True) for t in data["formulas"]]
        return FormulaFamily.of(formulas, ctx)
    formulas = [parse_formula(t, sig, ctx, infer_free=True) for t in _text_lines(p)]
    return FormulaFamily.of(formulas, ctx)


def load_family_dir(path: str | Path) -> tuple[list[str], list[Structure]]:
    """Every ``*.json`` structure file in a directory, in file-name order."""
    p = Path(path)
    if not p.is_dir():
        raise InputError(f"not a directory: {p}")
    files = sorted(f for f in p.glob("*.json"))
    if not files:
        raise InputError(f"{p}: no structure files")
    return [f.stem for f in files], [load_structure(f) for f in files]


def load_tracked(path: str | Path) -> list[PointedExtension]:
    data = read_json(path)
    if not isinstance(data, list):
        raise InputError("tracked file must hold a JSON list of extensions")
    return [PointedExtension.from_json(d) for d in data]
