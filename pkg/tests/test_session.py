import threading
import time

import numpy as np
import pytest

from promptcad.gateway import MockProvider, MockScriptExhausted
from promptcad.geometry import SectionConstraints, export_obj, validate_section
from promptcad.prompts import DefectCode, UnknownPreset
from promptcad.session import DesignSession, SessionConfig, describe_preset

from conftest import BOWTIE_TEXT, decagon_text


def coordinate_config(**overrides) -> SessionConfig:
    defaults = dict(
        mode="coordinate_sections",
        sections_target=3,
        max_iterations=6,
        constraints=SectionConstraints(
            require_convex=True, forbid_self_intersection=True
        ),
        degree=0,
    )
    defaults.update(overrides)
    return SessionConfig(**defaults)


def run_session(script, **overrides) -> DesignSession:
    session = DesignSession(coordinate_config(**overrides), MockProvider(script))
    session.run_to_completion()
    return session


class TestTick:
    def test_clean_decagon_accepted(self):
        session = DesignSession(
            coordinate_config(sections_target=2, max_iterations=2),
            MockProvider([{"reply": decagon_text(4.0)}, {"reply": decagon_text(4.5)}]),
        )
        session.state = "running"
        outcome = session.tick()
        assert outcome.kind == "accepted"
        assert len(session.accepted_sections) == 1
        assert session.reports[-1].passed

    def test_bowtie_rejected_and_escalates(self):
        session = DesignSession(
            coordinate_config(),
            MockProvider([{"reply": BOWTIE_TEXT}]),
        )
        session.state = "running"
        outcome = session.tick()
        assert outcome.kind == "rejected"
        assert DefectCode.SELF_INTERSECT in outcome.defects
        assert [c.id for c in session.prompt.clauses] == ["convex-non-intersecting"]
        assert len(session.accepted_sections) == 0

    def test_budget_exhaustion(self):
        session = DesignSession(
            coordinate_config(max_iterations=1),
            MockProvider([{"reply": BOWTIE_TEXT}]),
        )
        session.state = "running"
        outcome = session.tick()
        assert outcome.kind == "exhausted"
        assert session.state == "failed"
        assert session.failure == "BUDGET_EXHAUSTED"

    def test_tick_requires_running_state(self):
        session = DesignSession(coordinate_config(), MockProvider([{"reply": "x"}]))
        with pytest.raises(RuntimeError):
            session.tick()

    def test_sections_stack_at_spacing(self):
        session = run_session(
            [{"reply": decagon_text(4.0)}] * 3,
            section_spacing=2.5,
        )
        values = [s.plane_value for s in session.accepted_sections]
        assert values == [0.0, 2.5, 5.0]

    def test_accepted_sections_revalidate(self):
        session = run_session([{"reply": decagon_text(4.0)}] * 3)
        for section in session.accepted_sections:
            report = validate_section(
                section.sample(session.config.samples_per_span),
                session.config.constraints,
            )
            assert report.passed

    def test_gateway_errors_propagate(self):
        session = DesignSession(coordinate_config(), MockProvider([]))
        session.state = "running"
        with pytest.raises(MockScriptExhausted):
            session.tick()


class TestRunToCompletion:
    def test_three_valid_sections_complete_in_three_ticks(self):
        session = run_session([{"reply": decagon_text(r)} for r in (4.0, 4.2, 4.4)])
        assert session.state == "complete"
        assert session.iterations == 3
        assert len(session.reports) == 3

    def test_alternating_bad_good(self):
        script = []
        for radius in (4.0, 4.2, 4.4):
            script.append({"reply": BOWTIE_TEXT})
            script.append({"reply": decagon_text(radius)})
        session = run_session(script)
        assert session.state == "complete"
        assert session.iterations == 6
        rejected = [r for r in session.reports if not r.passed]
        assert len(rejected) == 3

    def test_requires_idle_state(self):
        session = DesignSession(coordinate_config(), MockProvider([{"reply": "x"}]))
        session.state = "running"
        with pytest.raises(RuntimeError):
            session.run_to_completion()

    def test_cancellation_between_ticks(self):
        session = DesignSession(
            coordinate_config(max_iterations=50, trigger_interval=0.2),
            MockProvider([{"reply": BOWTIE_TEXT}] * 50),
        )
        thread = threading.Thread(target=session.run_to_completion)
        thread.start()
        time.sleep(0.05)
        session.cancel()
        thread.join(timeout=5)
        assert session.state == "failed"
        assert session.failure == "CANCELED"

    def test_interval_paces_request_starts(self):
        session = DesignSession(
            coordinate_config(sections_target=2, max_iterations=2, trigger_interval=0.1),
            MockProvider([{"reply": decagon_text(4.0)}, {"reply": decagon_text(4.2)}]),
        )
        start = time.monotonic()
        session.run_to_completion()
        elapsed = time.monotonic() - start
        assert session.state == "complete"
        assert elapsed >= 0.1

    def test_reports_track_every_tick(self):
        session = run_session(
            [{"reply": BOWTIE_TEXT}, {"reply": decagon_text(4.0)},
             {"reply": decagon_text(4.1)}, {"reply": decagon_text(4.2)}])
        assert len(session.reports) == session.iterations == 4

    def test_escalation_causality(self):
        session = run_session(
            [{"reply": BOWTIE_TEXT}, {"reply": decagon_text(4.0)},
             {"reply": decagon_text(4.1)}, {"reply": decagon_text(4.2)}])
        seen = set()
        for report in session.reports:
            seen.update(code for code, _ in report.violations)
        for clause in session.prompt.clauses:
            assert any(code.value in seen for code in clause.trigger_defects)


class TestAssembleModel:
    def test_two_square_sections_make_a_box(self):
        square = "(0,0,0)\n(1,0,0)\n(1,0,1)\n(0,0,1)"
        session = run_session(
            [{"reply": square}] * 2, sections_target=2, max_iterations=2
        )
        mesh = session.assemble_model()
        assert mesh.euler_characteristic() == 2
        assert len(mesh.vertices) == 10

    def test_requires_complete_state(self):
        session = DesignSession(coordinate_config(), MockProvider([{"reply": "x"}]))
        with pytest.raises(RuntimeError):
            session.assemble_model()

    def test_decagon_column(self):
        session = run_session([{"reply": decagon_text(r)} for r in (4.0, 4.3, 4.6)])
        mesh = session.assemble_model()
        assert len(mesh.vertices) == 3 * 10 + 2
        assert mesh.is_edge_manifold()
        assert mesh.euler_characteristic() == 2

    def test_mesh_is_cached(self):
        session = run_session([{"reply": decagon_text(4.0)}] * 3)
        assert session.assemble_model() is session.assemble_model()


class TestEquationMode:
    def equation_config(self, **overrides) -> SessionConfig:
        defaults = dict(
            mode="equation_profile",
            sections_target=2,
            max_iterations=4,
            constraints=SectionConstraints(forbid_self_intersection=True),
            degree=0,
            profile_samples=17,
            amplitude=1.0,
        )
        defaults.update(overrides)
        return SessionConfig(**defaults)

    def test_sine_profiles_loft(self):
        script = [{"reply": "sin(x)"}, {"reply": "sin(x) + 2"}]
        session = DesignSession(self.equation_config(), MockProvider(script))
        session.run_to_completion()
        assert session.state == "complete"
        mesh = session.assemble_model()
        assert mesh.is_edge_manifold()
        assert mesh.euler_characteristic() == 2

    def test_tan_reply_escalates(self):
        script = [{"reply": "tan(x)"}, {"reply": "sin(x)"}, {"reply": "cos(x)"}]
        session = DesignSession(self.equation_config(), MockProvider(script))
        session.run_to_completion()
        assert session.state == "complete"
        assert "Only use sin and cos function not tan." in [
            c.text for c in session.prompt.clauses
        ]

    def test_profiles_stack_along_y(self):
        script = [{"reply": "sin(x)"}, {"reply": "cos(x)"}]
        session = DesignSession(
            self.equation_config(section_spacing=3.0), MockProvider(script)
        )
        session.run_to_completion()
        values = [s.plane_value for s in session.accepted_sections]
        assert values == [0.0, 3.0]


class TestReproducibility:
    def test_identical_runs_byte_identical(self, decagon_session_script):
        def run():
            session = DesignSession(
                coordinate_config(
                    max_iterations=4,
                    constraints=SectionConstraints(
                        require_convex=True,
                        forbid_self_intersection=True,
                        inner_circle_radius=6.0,
                        center_bound_radius=3.0,
                    ),
                ),
                MockProvider(decagon_session_script),
            )
            session.run_to_completion()
            return session

        a, b = run(), run()
        assert export_obj(a.assemble_model()) == export_obj(b.assemble_model())
        strip = lambda t: [(m.role, m.content, m.iteration) for m in t.messages]
        assert strip(a.transcript) == strip(b.transcript)
        assert [r.to_json() for r in a.reports] == [r.to_json() for r in b.reports]


class TestSnapshotAndPresets:
    def test_snapshot_shape(self):
        session = run_session([{"reply": decagon_text(4.0)}] * 3)
        snapshot = session.snapshot()
        assert {
            "id",
            "state",
            "iteration",
            "sections_accepted",
            "prompt_text",
            "last_report",
            "mesh_ready",
        } <= set(snapshot)
        assert snapshot["mesh_ready"] is True
        assert snapshot["sections_accepted"] == 3

    def test_presets(self):
        assert describe_preset("placid") == (
            "Generate a polynomial curve that has placid, calm, and linear waves."
        )
        assert describe_preset("drastic") == (
            "Generate a polynomial curve that has surge, drastic, and crazy fluctuation waves"
        )
        with pytest.raises(UnknownPreset):
            describe_preset("gothic")

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SessionConfig(sections_target=1)
        with pytest.raises(ValueError):
            SessionConfig(trigger_interval=-1)
        with pytest.raises(ValueError):
            SessionConfig(degree=2)
        with pytest.raises(ValueError):
            SessionConfig(mode="sculpting")
