"""Model JSON reading and writing, plus preset resolution."""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .errors import ParseError
from .exact_algebra import (
    LinearForm,
    MultiPoly,
    Scalar,
    as_fraction,
    default_names,
    parse_polynomial,
    parse_scalar,
)
from .localization_model import (
    FixedPointComponent,
    GroupData,
    LocalizationModel,
    Normalization,
)
from .model_library import build_p1_power, build_projective_space, build_su3_demo


def _rat(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _vec(form: LinearForm) -> list[str]:
    return [_rat(c) for c in form.coeffs]


def _read_vec(raw, where: str) -> LinearForm:
    if not isinstance(raw, list):
        raise ParseError(f"{where}: expected a list of rationals")
    try:
        return LinearForm(as_fraction(x) if not isinstance(x, float) else _bad_float(where) for x in raw)
    except TypeError as exc:
        raise ParseError(f"{where}: {exc}") from exc


def _bad_float(where: str):
    raise ParseError(f"{where}: floats are not allowed; write rationals as \"p/q\" strings")


def model_to_dict(m: LocalizationModel) -> dict:
    g = m.group
    names = default_names(g.rank)
    group = {
        "rank": g.rank,
        "dim": g.dim,
        "positive_roots": [_vec(r) for r in g.positive_roots],
        "weyl_order": g.weyl_order,
    }
    if g.normalization is not Normalization.GENERAL:
        group["normalization"] = g.normalization.value
    if g.vol_T != Scalar(1):
        group["vol_T"] = str(g.vol_T)
    points = []
    for fp in m.fixed_points:
        entry = {
            "label": fp.label,
            "moment": _vec(fp.moment_image),
            "weights": [{"form": _vec(f), "mult": n} for f, n in fp.weights],
            "class": fp.class_restriction.to_text(names),
            "point_integral": str(fp.point_integral),
        }
        default_terms = ((MultiPoly.one(g.rank), ()),)
        if fp.class_terms != default_terms:
            entry["terms"] = [
                {"numerator": num.to_text(names), "extra": [[i, e] for i, e in extra]}
                for num, extra in fp.class_terms
            ]
        points.append(entry)
    return {"group": group, "dim_X": m.dim_X, "fixed_points": points}


def model_to_json(m: LocalizationModel) -> str:
    return json.dumps(model_to_dict(m), indent=2)


def model_from_dict(data: dict) -> LocalizationModel:
    try:
        g = data["group"]
        rank = int(g["rank"])
        norm = Normalization(g.get("normalization", "general"))
        group = GroupData(
            rank=rank,
            dim=int(g["dim"]),
            positive_roots=tuple(_read_vec(r, "positive_roots") for r in g.get("positive_roots", [])),
            weyl_order=int(g.get("weyl_order", 1)),
            normalization=norm,
            vol_T=parse_scalar(g.get("vol_T", "1")),
        )
        names = default_names(rank)
        pts = []
        for k, raw in enumerate(data["fixed_points"]):
            where = f"fixed_points[{k}]"
            weights = tuple(
                (_read_vec(w["form"], f"{where}.weights"), int(w.get("mult", 1))) for w in raw["weights"]
            )
            terms = None
            if "terms" in raw:
                terms = tuple(
                    (parse_polynomial(t["numerator"], names), tuple((int(i), int(e)) for i, e in t.get("extra", [])))
                    for t in raw["terms"]
                )
            pts.append(
                FixedPointComponent(
                    label=str(raw.get("label", f"F{k}")),
                    moment_image=_read_vec(raw["moment"], f"{where}.moment"),
                    weights=weights,
                    class_restriction=parse_polynomial(raw.get("class", "1"), names),
                    class_terms=terms,
                    point_integral=parse_scalar(raw.get("point_integral", "1")),
                )
            )
        return LocalizationModel(group, pts, int(data["dim_X"]), name=str(data.get("name", "")))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed model JSON: {exc!r}") from exc


def model_from_json(text: str) -> LocalizationModel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return model_from_dict(data)


def resolve_model(spec: str) -> LocalizationModel:
    """Preset name (``p1pow:N``, ``projN:N``, ``su3demo``) or a JSON file path."""
    if spec.startswith("p1pow:") or spec.startswith("projN:"):
        head, _, tail = spec.partition(":")
        try:
            N = int(tail)
        except ValueError as exc:
            raise ParseError(f"bad preset {spec!r}: N must be an integer") from exc
        return build_p1_power(N) if head == "p1pow" else build_projective_space(N)
    if spec == "su3demo":
        return build_su3_demo()
    path = Path(spec)
    if not path.exists():
        raise FileNotFoundError(f"model {spec!r} is neither a preset nor an existing file")
    m = model_from_json(path.read_text())
    if not m.name:
        m.name = path.name
    return m
