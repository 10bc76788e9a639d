"""Prompt construction and defect-driven constraint escalation.

A prompt is a base instruction plus an ordered list of corrective clauses.
Each observed output defect (numbering, prose, implicit multiplication, tan
usage, geometry violations, ...) maps to one clause in a data-driven catalog;
escalation appends missing clauses in catalog order and never removes any.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .expressions import (
    ExpressionAst,
    NoPayloadFound,
    PolicyViolation,
    RawResponse,
    extract_payload_info,
)
from .geometry import PlaneViolation, ValidationReport


class DefectCode(str, Enum):
    NUMBERED_OUTPUT = "NUMBERED_OUTPUT"
    PROSE_PRESENT = "PROSE_PRESENT"
    IMPLICIT_MULTIPLICATION = "IMPLICIT_MULTIPLICATION"
    TAN_USED = "TAN_USED"
    NOT_TRIG = "NOT_TRIG"
    PLANE_VIOLATION = "PLANE_VIOLATION"
    SELF_INTERSECT = "SELF_INTERSECT"
    NON_CONVEX = "NON_CONVEX"
    INNER_CIRCLE_MISS = "INNER_CIRCLE_MISS"
    CENTER_OUT_OF_BOUND = "CENTER_OUT_OF_BOUND"


_GEOMETRY_CODES = {
    DefectCode.SELF_INTERSECT,
    DefectCode.NON_CONVEX,
    DefectCode.INNER_CIRCLE_MISS,
    DefectCode.CENTER_OUT_OF_BOUND,
}

_DEFECT_ORDER = {code: i for i, code in enumerate(DefectCode)}


class UnmappedDefect(ValueError):
    def __init__(self, code: DefectCode):
        super().__init__(f"no catalog clause or suppression entry for {code.value}")
        self.code = code


class UnknownPreset(ValueError):
    pass


@dataclass(frozen=True)
class ConstraintClause:
    """One corrective sentence and the defects it remediates."""

    id: str
    text: str
    trigger_defects: tuple[DefectCode, ...]

    def __post_init__(self):
        if not self.text:
            raise ValueError("clause text must be non-empty")


def _format_radius(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return repr(value)


class ClauseCatalog:
    """Ordered defect-to-clause mapping loaded from a JSON array.

    Entries are ``{id, text, trigger_defect}``; ``trigger_defect`` may be a
    single code or a list when one compound sentence remediates several
    defects.  An entry with ``"text": null`` suppresses its defect (no clause
    is appended, but escalation does not fail).  Clause texts may reference
    ``{inner_radius}`` and ``{center_bound_radius}`` template parameters.
    """

    def __init__(
        self,
        entries,
        inner_radius: float = 6.0,
        center_bound_radius: float = 3.0,
    ):
        self.clauses: list[ConstraintClause] = []
        self.suppressed: set[DefectCode] = set()
        self._by_defect: dict[DefectCode, ConstraintClause] = {}
        params = {
            "inner_radius": _format_radius(inner_radius),
            "center_bound_radius": _format_radius(center_bound_radius),
        }
        seen_ids = set()
        for entry in entries:
            raw_triggers = entry["trigger_defect"]
            if isinstance(raw_triggers, str):
                raw_triggers = [raw_triggers]
            triggers = tuple(DefectCode(code) for code in raw_triggers)
            if entry.get("text") is None:
                self.suppressed.update(triggers)
                continue
            if entry["id"] in seen_ids:
                raise ValueError(f"duplicate clause id {entry['id']!r}")
            seen_ids.add(entry["id"])
            clause = ConstraintClause(entry["id"], entry["text"].format(**params), triggers)
            self.clauses.append(clause)
            for code in triggers:
                if code in self._by_defect:
                    raise ValueError(f"defect {code.value} mapped to more than one clause")
                self._by_defect[code] = clause

    def clause_for(self, code: DefectCode) -> ConstraintClause | None:
        """The clause remediating ``code``; None when suppressed."""
        clause = self._by_defect.get(code)
        if clause is not None:
            return clause
        if code in self.suppressed:
            return None
        raise UnmappedDefect(code)

    def clause_order(self, clause: ConstraintClause) -> int:
        return self.clauses.index(clause)

    @classmethod
    def from_file(cls, path, **kwargs) -> "ClauseCatalog":
        with open(path, "r", encoding="utf-8") as handle:
            return cls(json.load(handle), **kwargs)


def default_catalog(
    inner_radius: float = 6.0, center_bound_radius: float = 3.0
) -> ClauseCatalog:
    data = resources.files("promptcad").joinpath("data/clause_catalog.json").read_text("utf-8")
    return ClauseCatalog(
        json.loads(data),
        inner_radius=inner_radius,
        center_bound_radius=center_bound_radius,
    )


# Base prompts shipped with the engine.
EQUATION_BASE_PROMPT = "Create one polynomial with three variables x, y, and z."
COORDINATE_BASE_PROMPT = "\n".join(
    [
        "Generate 10 sets of coordinates for a convex or concave curve in the xz plane, "
        "where the y-values are all 0.",
        "Those generated points will be control points of the interpolated closed curve.",
        "Only write coordinates not texts.",
        "Points will be control points that connect closed curves.",
    ]
)

PRESET_PROMPTS = {
    "placid": "Generate a polynomial curve that has placid, calm, and linear waves.",
    "drastic": "Generate a polynomial curve that has surge, drastic, and crazy fluctuation waves",
}


@dataclass(frozen=True)
class PromptSpec:
    """Base prompt plus the ordered corrective clauses appended so far."""

    base_text: str
    target_kind: str = "equation"
    clauses: tuple[ConstraintClause, ...] = ()

    def __post_init__(self):
        if self.target_kind not in ("equation", "coordinates"):
            raise ValueError(f"unknown target kind {self.target_kind!r}")
        ids = [c.id for c in self.clauses]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate clause ids in prompt spec")

    def clause_ids(self) -> set[str]:
        return {c.id for c in self.clauses}


def render_prompt(spec: PromptSpec) -> str:
    """Base text first, then clause texts in order, one per line."""
    return "\n".join([spec.base_text, *(c.text for c in spec.clauses)])


def escalate(
    spec: PromptSpec,
    defects,
    catalog: ClauseCatalog | None = None,
) -> PromptSpec:
    """Add the catalog clause for each new defect, keeping catalog order.

    The clause list stays sorted by catalog position regardless of defect
    arrival order.  Idempotent once every triggered clause is present;
    clauses are never removed.  Raises :class:`UnmappedDefect` for a code
    the catalog neither maps nor suppresses.
    """
    catalog = catalog or default_catalog()
    present = spec.clause_ids()
    additions: dict[str, ConstraintClause] = {}
    for code in defects:
        clause = catalog.clause_for(DefectCode(code))
        if clause is None or clause.id in present:
            continue
        additions[clause.id] = clause
    if not additions:
        return spec

    def order(clause: ConstraintClause) -> int:
        try:
            return catalog.clause_order(clause)
        except ValueError:
            return len(catalog.clauses)  # stable sort keeps foreign clauses put

    merged = sorted(spec.clauses + tuple(additions.values()), key=order)
    return PromptSpec(spec.base_text, spec.target_kind, tuple(merged))


def detect_defects(
    response: RawResponse,
    result=None,
    kind: str | None = None,
) -> list[DefectCode]:
    """Map a reply and its parse/validation artifact onto defect codes.

    ``result`` is whatever the attempt produced: an :class:`ExpressionAst`,
    a :class:`ValidationReport`, or the exception that stopped the attempt.
    Extraction defects (numbering, prose) are re-derived from the response
    text itself.  Codes come back deduplicated, in catalog order.
    """
    if kind is None:
        if isinstance(result, (ValidationReport, PlaneViolation)):
            kind = "coordinates"
        else:
            kind = "equation"
    codes: set[DefectCode] = set()
    try:
        info = extract_payload_info(response.text, kind)
        if info.numbering_stripped:
            codes.add(DefectCode.NUMBERED_OUTPUT)
        if info.prose_present:
            codes.add(DefectCode.PROSE_PRESENT)
    except NoPayloadFound:
        codes.add(DefectCode.PROSE_PRESENT)

    if isinstance(result, ExpressionAst):
        if result.implicit_products > 0:
            codes.add(DefectCode.IMPLICIT_MULTIPLICATION)
        if result.uses_function("tan"):
            codes.add(DefectCode.TAN_USED)
    elif isinstance(result, PolicyViolation):
        codes.add(DefectCode(result.code))
        if result.ast is not None and result.ast.implicit_products > 0:
            codes.add(DefectCode.IMPLICIT_MULTIPLICATION)
    elif isinstance(result, PlaneViolation):
        codes.add(DefectCode.PLANE_VIOLATION)
    elif isinstance(result, ValidationReport):
        for code, _message in result.violations:
            if code in DefectCode.__members__:
                member = DefectCode(code)
                if member in _GEOMETRY_CODES:
                    codes.add(member)
    return sorted(codes, key=_DEFECT_ORDER.__getitem__)
