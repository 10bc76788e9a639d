import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from promptcad.cli import main
from promptcad.geometry import export_obj, mesh_from_json

from conftest import BOWTIE_TEXT, DATA_DIR, decagon_text


@pytest.fixture
def runner():
    return CliRunner()


def write_session_script(tmp_path) -> Path:
    path = tmp_path / "script.json"
    path.write_text(json.dumps([{"reply": decagon_text(r)} for r in (4.0, 4.2, 4.4)]))
    return path


class TestValidate:
    def test_bowtie_fails_with_self_intersect(self, runner, tmp_path):
        coords = tmp_path / "bowtie.txt"
        coords.write_text(BOWTIE_TEXT)
        result = runner.invoke(main, ["validate", str(coords)])
        assert result.exit_code == 1
        report = json.loads(result.output)
        codes = [code for code, _ in report["violations"]]
        assert "SELF_INTERSECT" in codes

    def test_decagon_passes(self, runner, tmp_path):
        coords = tmp_path / "decagon.txt"
        coords.write_text(decagon_text(6.5))
        result = runner.invoke(
            main,
            ["validate", str(coords), "--inner-radius", "6", "--center-bound", "3"],
        )
        assert result.exit_code == 0, result.output
        report = json.loads(result.output)
        assert report["passed"] is True
        assert report["contains_inner_circle"] is True

    def test_parse_error_exits_one(self, runner, tmp_path):
        coords = tmp_path / "junk.txt"
        coords.write_text("this is not geometry")
        result = runner.invoke(main, ["validate", str(coords)])
        assert result.exit_code == 1
        assert json.loads(result.output)["passed"] is False

    def test_unknown_flag_exits_two(self, runner, tmp_path):
        coords = tmp_path / "c.txt"
        coords.write_text(decagon_text(4.0))
        result = runner.invoke(main, ["validate", str(coords), "--frobnicate"])
        assert result.exit_code == 2


class TestRoom:
    def test_room_writes_manifold_obj(self, runner, tmp_path):
        out = tmp_path / "room.obj"
        result = runner.invoke(
            main,
            ["room", "6", "4", "3", "0.2", "1", "1.2", "0.9", "2.1", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        assert "roof area 24" in result.output
        assert out.exists()
        lines = out.read_text().splitlines()
        assert any(line.startswith("v ") for line in lines)

    def test_unfit_door_exits_one(self, runner):
        result = runner.invoke(
            main, ["room", "6", "4", "3", "0.2", "1", "1.2", "0.9", "3.5"]
        )
        assert result.exit_code == 1
        assert "FitError" in result.output

    def test_emit_script_round_trips(self, runner):
        result = runner.invoke(
            main,
            ["room", "6", "4", "3", "0.2", "1", "1.2", "0.9", "2.1", "--emit-script"],
        )
        assert result.exit_code == 0
        from promptcad.scene import SceneModel, run_scene_script

        script = "\n".join(
            line for line in result.output.splitlines()
            if line.split(" ")[0] in ("level", "wall", "window", "door", "roof")
        )
        assert isinstance(run_scene_script(script), SceneModel)


class TestLoft:
    def test_stacked_files(self, runner, tmp_path):
        for index, radius in enumerate((4.0, 4.5)):
            (tmp_path / f"s{index}.txt").write_text(decagon_text(radius))
        out = tmp_path / "column.obj"
        result = runner.invoke(
            main,
            ["loft", str(tmp_path / "s0.txt"), str(tmp_path / "s1.txt"), "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        assert out.exists()

    def test_bad_section_exits_one(self, runner, tmp_path):
        (tmp_path / "bad.txt").write_text(BOWTIE_TEXT[:7])
        result = runner.invoke(
            main, ["loft", str(tmp_path / "bad.txt"), "--out", str(tmp_path / "x.obj")]
        )
        assert result.exit_code == 1


class TestGenerate:
    def test_mock_session_to_obj(self, runner, tmp_path):
        script = write_session_script(tmp_path)
        out = tmp_path / "model.obj"
        result = runner.invoke(
            main,
            [
                "generate",
                "--mock-script", str(script),
                "--sections", "3",
                "--max-iterations", "4",
                "--out", str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        assert "complete: 3 sections" in result.output
        assert out.exists()

    def test_record_fixture_bundle(self, runner, tmp_path):
        script = write_session_script(tmp_path)
        record = tmp_path / "fixture"
        result = runner.invoke(
            main,
            ["generate", "--mock-script", str(script), "--record", str(record)],
        )
        assert result.exit_code == 0, result.output
        names = {p.name for p in record.iterdir()}
        assert names == {
            "snapshot.json", "events.json", "model.json", "model.obj", "transcript.jsonl",
        }
        model = json.loads((record / "model.json").read_text())
        assert (record / "model.obj").read_bytes() == export_obj(mesh_from_json(model))

    def test_mock_requires_script(self, runner):
        result = runner.invoke(main, ["generate"])
        assert result.exit_code == 2

    def test_exhausted_session_exits_one(self, runner, tmp_path):
        script = tmp_path / "bad.json"
        script.write_text(json.dumps([{"reply": BOWTIE_TEXT}]))
        result = runner.invoke(
            main,
            ["generate", "--mock-script", str(script), "--max-iterations", "1"],
        )
        assert result.exit_code == 1

    def test_provider_error_exits_three(self, runner, tmp_path):
        script = tmp_path / "short.json"
        script.write_text(json.dumps([{"reply": decagon_text(4.0)}]))
        result = runner.invoke(
            main,
            ["generate", "--mock-script", str(script), "--sections", "3",
             "--max-iterations", "5"],
        )
        assert result.exit_code == 3

    def test_repair_command(self, runner):
        result = runner.invoke(
            main,
            ["repair", "--prompt", "build a room", "--budget", "3",
             "--mock-script", str(DATA_DIR / "room_repair.json")],
        )
        assert result.exit_code == 0, result.output
        assert "converged" in result.output
        assert "UNDEFINED_REFERENCE" in result.output
