from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

DATA_DIR = Path(__file__).parent / "data"


def regular_ring(n: int, radius: float, plane_axis: str = "y", plane_value: float = 0.0,
                 phase: float = 0.0) -> np.ndarray:
    """Regular n-gon in an axis-aligned plane, counterclockwise."""
    angles = 2.0 * np.pi * np.arange(n) / n + phase
    u = radius * np.cos(angles)
    v = radius * np.sin(angles)
    flat = np.full(n, plane_value)
    columns = {"x": (flat, u, v), "y": (u, flat, v), "z": (u, v, flat)}[plane_axis]
    return np.column_stack(columns)


def decagon_text(radius: float) -> str:
    ring = regular_ring(10, radius)
    return "\n".join(f"({p[0]:.6f},0,{p[2]:.6f})" for p in ring)


BOWTIE_TEXT = "(0,0,0)\n(2,0,2)\n(2,0,0)\n(0,0,2)"


@pytest.fixture
def decagon_session_script() -> list:
    return json.loads((DATA_DIR / "decagon_session.json").read_text("utf-8"))


@pytest.fixture
def room_repair_script() -> list:
    return json.loads((DATA_DIR / "room_repair.json").read_text("utf-8"))


# One status line per acceptance criterion, printed even under capture.
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
