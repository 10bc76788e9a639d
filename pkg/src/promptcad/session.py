"""Timer-driven iterative generation sessions.

Each tick renders the current prompt, asks the provider for a reply, parses
it into a section (coordinates or an equation-profile ring), validates it,
and either accepts the section at the next stacking offset or escalates the
prompt with clauses matching the detected defects.  Accepted sections are
finally lofted into one watertight solid.
"""

from __future__ import annotations

import math
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import geometry
from .expressions import (
    ExpressionSyntaxError,
    NoPayloadFound,
    PolicyViolation,
    RawResponse,
    TrigPolicy,
    extract_payload_info,
    parse_expression,
    sample_profile,
)
from .gateway import ProviderConfig, Transcript, provider_for, send
from .geometry import (
    ClosedSection,
    CoordinateSyntaxError,
    CountMismatch,
    DegenerateInput,
    LoftedMesh,
    PlaneViolation,
    Point3,
    SectionConstraints,
    ValidationReport,
    loft,
    parse_coordinates,
    validate_section,
)
from .prompts import (
    COORDINATE_BASE_PROMPT,
    EQUATION_BASE_PROMPT,
    PRESET_PROMPTS,
    ClauseCatalog,
    PromptSpec,
    UnknownPreset,
    default_catalog,
    detect_defects,
    escalate,
    render_prompt,
)

MODES = ("equation_profile", "coordinate_sections")


def describe_preset(name: str) -> str:
    """Base prompt text for a named wave-style preset."""
    try:
        return PRESET_PROMPTS[name]
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}") from None


@dataclass(frozen=True)
class SessionConfig:
    mode: str = "coordinate_sections"
    sections_target: int = 3
    max_iterations: int = 10
    trigger_interval: float = 0.0
    section_spacing: float = 1.0
    degree: int = 0
    constraints: SectionConstraints = field(
        default_factory=lambda: SectionConstraints(
            require_convex=True, forbid_self_intersection=True
        )
    )
    samples_per_span: int = 16
    points_per_section: int | None = None
    policy: TrigPolicy = field(default_factory=TrigPolicy)
    profile_range: tuple[float, float] = (0.0, 2.0 * math.pi)
    profile_samples: int = 33
    amplitude: float = 1.0
    base_prompt: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.sections_target < 2:
            raise ValueError("sections_target must be >= 2 (a loft needs two)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.trigger_interval < 0:
            raise ValueError("trigger_interval must be >= 0 (0 runs flat out)")
        if not self.section_spacing > 0:
            raise ValueError("section_spacing must be positive")
        if self.degree not in (0, 3):
            raise ValueError("degree must be 0 or 3")

    @property
    def payload_kind(self) -> str:
        return "equation" if self.mode == "equation_profile" else "coordinates"

    def default_base_prompt(self) -> str:
        if self.base_prompt:
            return self.base_prompt
        if self.mode == "equation_profile":
            return EQUATION_BASE_PROMPT
        return COORDINATE_BASE_PROMPT


@dataclass(frozen=True)
class IterationOutcome:
    kind: str  # accepted | rejected | exhausted
    defects: tuple = ()
    report: ValidationReport | None = None
    payload: str | None = None
    message: str | None = None
    ring: tuple | None = None  # accepted section's sampled ring, for viewers

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "defects": [getattr(d, "value", str(d)) for d in self.defects],
            "report": self.report.to_json() if self.report else None,
            "payload": self.payload,
            "message": self.message,
            "ring": [list(p) for p in self.ring] if self.ring is not None else None,
        }


_PARSE_FAILURES = (
    NoPayloadFound,
    ExpressionSyntaxError,
    PolicyViolation,
    CoordinateSyntaxError,
    CountMismatch,
    PlaneViolation,
    DegenerateInput,
    ValueError,
)


class DesignSession:
    """Single-writer generation session; observers read between ticks."""

    def __init__(
        self,
        config: SessionConfig,
        provider,
        catalog: ClauseCatalog | None = None,
        session_id: str | None = None,
    ):
        self.id = session_id or uuid.uuid4().hex[:12]
        self.config = config
        if isinstance(provider, ProviderConfig):
            provider = provider_for(provider)
        self.provider = provider
        inner = config.constraints.inner_circle_radius
        bound = config.constraints.center_bound_radius
        self.catalog = catalog or default_catalog(
            inner_radius=inner if inner is not None else 6.0,
            center_bound_radius=bound if bound is not None else 3.0,
        )
        self.prompt = PromptSpec(config.default_base_prompt(), config.payload_kind)
        self.transcript = Transcript(self.id)
        self.accepted_sections: list[ClosedSection] = []
        self.reports: list[ValidationReport] = []
        self.state = "idle"
        self.failure: str | None = None
        self.iterations = 0
        self._mesh: LoftedMesh | None = None
        self._cancel = threading.Event()
        self._lock = threading.RLock()

    # -- lifecycle ---------------------------------------------------------

    def cancel(self):
        self._cancel.set()

    def snapshot(self) -> dict:
        with self._lock:
            last = self.reports[-1] if self.reports else None
            constraints = self.config.constraints
            return {
                "id": self.id,
                "state": self.state,
                "iteration": self.iterations,
                "sections_accepted": len(self.accepted_sections),
                "prompt_text": render_prompt(self.prompt),
                "prompt_clauses": [c.text for c in self.prompt.clauses],
                "last_report": last.to_json() if last else None,
                "mesh_ready": self.state == "complete",
                "failure": self.failure,
                "constraints": {
                    "require_convex": constraints.require_convex,
                    "forbid_self_intersection": constraints.forbid_self_intersection,
                    "inner_circle_radius": constraints.inner_circle_radius,
                    "center_bound_radius": constraints.center_bound_radius,
                },
            }

    # -- one iteration -----------------------------------------------------

    def tick(self) -> IterationOutcome:
        with self._lock:
            if self.state != "running":
                raise RuntimeError(f"tick requires a running session, state={self.state}")
            prompt_text = render_prompt(self.prompt)
            reply = send(self.transcript, prompt_text, self.provider, self.iterations)
            response = RawResponse(reply.content, self.iterations)

            payload: str | None = None
            ring = None
            control_points: list[Point3] | None = None
            report: ValidationReport | None = None
            evidence = None
            failure_note: str | None = None
            try:
                info = extract_payload_info(response.text, self.config.payload_kind)
                payload = info.payload
                if self.config.mode == "coordinate_sections":
                    control_points = parse_coordinates(
                        payload,
                        expected_count=self.config.points_per_section,
                        plane_axis="y",
                        plane_value=0.0,
                    )
                    ring = geometry.interpolate_closed_section(
                        control_points, self.config.degree, self.config.samples_per_span
                    )
                else:
                    ast = parse_expression(payload, self.config.policy)
                    profile = sample_profile(
                        ast,
                        self.config.profile_range,
                        self.config.profile_samples,
                        layer_y=0.0,
                        amplitude=self.config.amplitude,
                    )
                    ring = _close_profile(profile, self.config.amplitude)
                    control_points = [Point3.from_array(p) for p in ring]
                report = validate_section(ring, self.config.constraints)
                evidence = report
            except _PARSE_FAILURES as exc:
                evidence = exc
                failure_note = f"{type(exc).__name__}: {exc}"

            accepted = report is not None and report.passed
            accepted_ring = None
            if accepted:
                plane_value = len(self.accepted_sections) * self.config.section_spacing
                base = ClosedSection(
                    tuple(control_points),
                    self.config.degree if self.config.mode == "coordinate_sections" else 0,
                    "y",
                    0.0,
                )
                section = base.translated(plane_value)
                self.accepted_sections.append(section)
                accepted_ring = tuple(
                    tuple(p) for p in section.sample(self.config.samples_per_span)
                )
                defects: tuple = ()
            else:
                defects = tuple(
                    detect_defects(response, evidence, kind=self.config.payload_kind)
                )
                self.prompt = escalate(self.prompt, defects, self.catalog)
                report = _rejection_report(report, defects, failure_note)

            self.reports.append(report)
            self.iterations += 1

            if len(self.accepted_sections) >= self.config.sections_target:
                self.state = "complete"
                kind = "accepted"
            elif self.iterations >= self.config.max_iterations:
                self.state = "failed"
                self.failure = "BUDGET_EXHAUSTED"
                kind = "exhausted"
            else:
                kind = "accepted" if accepted else "rejected"
            return IterationOutcome(kind, defects, report, payload, failure_note, accepted_ring)

    # -- full run ----------------------------------------------------------

    def run_to_completion(
        self,
        on_tick: Callable[["DesignSession", IterationOutcome], None] | None = None,
    ) -> "DesignSession":
        """Tick at the configured interval until complete or failed.

        Pacing is fixed-rate (aligned to request starts); a zero interval
        runs flat out.  Cancelation lands between ticks and marks the
        session failed with the CANCELED code.
        """
        if self.state != "idle":
            raise RuntimeError(f"run_to_completion requires an idle session, state={self.state}")
        self.state = "running"
        start = time.monotonic()
        completed = 0
        while True:
            if self._cancel.is_set():
                self.state = "failed"
                self.failure = "CANCELED"
                break
            outcome = self.tick()
            completed += 1
            if on_tick is not None:
                on_tick(self, outcome)
            if self.state in ("complete", "failed"):
                break
            if self.config.trigger_interval > 0:
                next_start = start + completed * self.config.trigger_interval
                delay = next_start - time.monotonic()
                if delay > 0 and self._cancel.wait(timeout=delay):
                    continue  # loop re-checks the cancel flag immediately
        return self

    # -- final geometry ------------------------------------------------------

    def assemble_model(self) -> LoftedMesh:
        """Loft accepted sections (sampled per the configured degree) with caps."""
        with self._lock:
            if self.state != "complete":
                raise RuntimeError("assemble_model requires a complete session")
            if self._mesh is None:
                rings = [
                    section.sample(self.config.samples_per_span)
                    for section in self.accepted_sections
                ]
                self._mesh = loft(rings, cap_ends=True)
            return self._mesh


def _close_profile(profile: np.ndarray, amplitude: float) -> np.ndarray:
    """Close an open wave profile into a simple ring by dropping a base edge
    below the profile's minimum (a wave-wall cross-section)."""
    base_z = float(profile[:, 2].min()) - 0.25 * amplitude
    layer_y = float(profile[0, 1])
    first_t = float(profile[0, 0])
    last_t = float(profile[-1, 0])
    corners = np.array([[last_t, layer_y, base_z], [first_t, layer_y, base_z]])
    return np.vstack([profile, corners])


def _rejection_report(
    report: ValidationReport | None, defects, note: str | None
) -> ValidationReport:
    """Fold detected defects into the per-iteration report.

    Geometry reports keep their booleans; parse-stage failures synthesize a
    failed report whose violations carry the defect codes (plus a PARSE
    entry when no defect code applies, so the report can never pass).
    """
    violations: list[tuple[str, str]] = []
    seen = set()
    if report is not None:
        for code, message in report.violations:
            violations.append((code, message))
            seen.add(code)
    for defect in defects:
        code = getattr(defect, "value", str(defect))
        if code not in seen:
            violations.append((code, f"detected defect {code}"))
            seen.add(code)
    if not violations:
        violations.append(("PARSE_FAILURE", note or "reply did not parse"))
    if report is not None:
        return ValidationReport(
            report.convex,
            report.self_intersecting,
            report.contains_inner_circle,
            report.center_in_bound,
            tuple(violations),
        )
    return ValidationReport(False, False, None, None, tuple(violations))
