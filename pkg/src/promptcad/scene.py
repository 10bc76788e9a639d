"""BIM-lite scene model, a deterministic scene DSL, and the repair loop.

The DSL is a line-oriented stand-in for a host modeling environment:
``wall``/``window``/``door``/``roof``/``room`` commands build a scene, and
the first violated invariant halts execution with a stable, greppable error
string (``line N: CODE: detail``).  Those error strings are the feedback
channel of the generate-execute-debug repair loop.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .gateway import ProviderConfig, Transcript, provider_for, send
from .geometry import Point3, TriangleMesh

OPENING_MARGIN = 0.05
MAX_WALL_HEIGHT = 100.0
_TOL = 1e-9


class FitError(ValueError):
    """A requested room layout violates an opening or wall invariant."""


def _fmt(value: float) -> str:
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


@dataclass
class Wall:
    id: str
    start: Point3
    end: Point3
    height: float
    thickness: float

    @property
    def length(self) -> float:
        return math.hypot(self.end.x - self.start.x, self.end.y - self.start.y)


@dataclass
class Opening:
    """Shared shape of windows and doors; doors always have sill_height 0."""

    id: str
    host_wall: str
    width: float
    height: float
    sill_height: float
    center_offset: float
    kind: str = "window"

    def span(self, wall: Wall) -> tuple[float, float]:
        center = wall.length / 2.0 + self.center_offset
        return center - self.width / 2.0, center + self.width / 2.0

    def vertical_span(self) -> tuple[float, float]:
        return self.sill_height, self.sill_height + self.height


@dataclass
class Roof:
    footprint: tuple[Point3, ...]
    thickness: float

    @property
    def area(self) -> float:
        pts = [(p.x, p.y) for p in self.footprint]
        total = 0.0
        for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]):
            total += x0 * y1 - x1 * y0
        return abs(total) / 2.0


@dataclass
class SceneModel:
    walls: list[Wall] = field(default_factory=list)
    windows: list[Opening] = field(default_factory=list)
    doors: list[Opening] = field(default_factory=list)
    roof: Optional[Roof] = None
    level_elevation: float = 0.0

    def wall_by_id(self, wall_id: str) -> Optional[Wall]:
        for wall in self.walls:
            if wall.id == wall_id:
                return wall
        return None

    def openings_on(self, wall_id: str) -> list[Opening]:
        return [o for o in self.windows + self.doors if o.host_wall == wall_id]


def scene_to_json(scene: SceneModel) -> dict:
    def point(p: Point3):
        return [p.x, p.y, p.z]

    def opening(o: Opening):
        return {
            "id": o.id,
            "host_wall": o.host_wall,
            "width": o.width,
            "height": o.height,
            "sill_height": o.sill_height,
            "center_offset": o.center_offset,
        }

    return {
        "walls": [
            {
                "id": w.id,
                "start": point(w.start),
                "end": point(w.end),
                "height": w.height,
                "thickness": w.thickness,
            }
            for w in scene.walls
        ],
        "windows": [opening(o) for o in scene.windows],
        "doors": [opening(o) for o in scene.doors],
        "roof": {
            "footprint": [point(p) for p in scene.roof.footprint],
            "thickness": scene.roof.thickness,
        }
        if scene.roof
        else None,
        "level_elevation": scene.level_elevation,
    }


# ---------------------------------------------------------------------------
# Invariant checks shared by the interpreter and the room builder
# ---------------------------------------------------------------------------


def _check_wall(wall: Wall) -> Optional[tuple[str, str]]:
    if wall.length <= _TOL:
        return ("NONPOSITIVE_DIMENSION", "wall length 0")
    if wall.height <= 0:
        return ("NONPOSITIVE_DIMENSION", f"height {_fmt(wall.height)}")
    if wall.thickness <= 0:
        return ("NONPOSITIVE_DIMENSION", f"thickness {_fmt(wall.thickness)}")
    if wall.height > MAX_WALL_HEIGHT:
        return (
            "NONPOSITIVE_DIMENSION",
            f"height {_fmt(wall.height)} exceeds the {_fmt(MAX_WALL_HEIGHT)} sanity bound",
        )
    return None


def _check_opening(opening: Opening, wall: Wall) -> Optional[tuple[str, str]]:
    if opening.width <= 0:
        return ("NONPOSITIVE_DIMENSION", f"width {_fmt(opening.width)}")
    if opening.height <= 0:
        return ("NONPOSITIVE_DIMENSION", f"height {_fmt(opening.height)}")
    if opening.sill_height < 0:
        return ("NONPOSITIVE_DIMENSION", f"sill {_fmt(opening.sill_height)}")
    length = wall.length
    if opening.width >= length:
        return (
            "OPENING_EXCEEDS_HOST",
            f"width {_fmt(opening.width)} ≥ wall length {_fmt(length)}",
        )
    lo, hi = opening.span(wall)
    if lo < OPENING_MARGIN - _TOL or hi > length - OPENING_MARGIN + _TOL:
        return (
            "OPENING_EXCEEDS_HOST",
            f"opening spans [{_fmt(lo)}, {_fmt(hi)}] outside the "
            f"{_fmt(OPENING_MARGIN)} margins of wall length {_fmt(length)}",
        )
    top = opening.sill_height + opening.height
    if top >= wall.height:
        if opening.sill_height == 0:
            detail = (
                f"{opening.kind} height {_fmt(opening.height)} ≥ "
                f"wall height {_fmt(wall.height)}"
            )
        else:
            detail = (
                f"sill {_fmt(opening.sill_height)} + height {_fmt(opening.height)} "
                f"≥ wall height {_fmt(wall.height)}"
            )
        return ("OPENING_EXCEEDS_HOST", detail)
    if top > wall.height - OPENING_MARGIN + _TOL:
        return (
            "OPENING_EXCEEDS_HOST",
            f"sill {_fmt(opening.sill_height)} + height {_fmt(opening.height)} leaves "
            f"less than the {_fmt(OPENING_MARGIN)} top margin on wall height "
            f"{_fmt(wall.height)}",
        )
    if opening.kind == "window" and opening.sill_height < OPENING_MARGIN - _TOL:
        return (
            "OPENING_EXCEEDS_HOST",
            f"sill {_fmt(opening.sill_height)} below the {_fmt(OPENING_MARGIN)} "
            "bottom margin",
        )
    return None


def _check_overlap(opening: Opening, wall: Wall, others: list[Opening]) -> Optional[tuple[str, str]]:
    lo, hi = opening.span(wall)
    v0, v1 = opening.vertical_span()
    for other in others:
        if other.id == opening.id or other.host_wall != opening.host_wall:
            continue
        olo, ohi = other.span(wall)
        ov0, ov1 = other.vertical_span()
        if min(hi, ohi) - max(lo, olo) > _TOL and min(v1, ov1) - max(v0, ov0) > _TOL:
            return (
                "OVERLAPPING_OPENINGS",
                f"{opening.id} overlaps {other.id} on wall {wall.id}",
            )
    return None


# ---------------------------------------------------------------------------
# Scene DSL interpreter
# ---------------------------------------------------------------------------

_ARITIES = {"wall": 7, "window": 6, "door": 5, "roof": 1, "room": 4, "level": 1}


def run_scene_script(script_text: str):
    """Interpret a scene script; returns a :class:`SceneModel` or the error string.

    The error string has the exact shape ``line N: CODE: detail`` with codes
    UNKNOWN_COMMAND, BAD_ARITY, UNDEFINED_REFERENCE, OPENING_EXCEEDS_HOST,
    OVERLAPPING_OPENINGS, NONPOSITIVE_DIMENSION.  It is the repair loop's
    feedback channel; treat it as a stable interface.
    """
    level = 0.0
    walls: list[Wall] = []
    openings: list[Opening] = []
    roof_thickness: float | None = None

    def fail(lineno: int, code: str, detail: str) -> str:
        return f"line {lineno}: {code}: {detail}"

    def wall_lookup(wall_id: str) -> Optional[Wall]:
        for wall in walls:
            if wall.id == wall_id:
                return wall
        return None

    for lineno, raw in enumerate(script_text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        command = tokens[0].lower()
        args = tokens[1:]
        if command not in _ARITIES:
            return fail(lineno, "UNKNOWN_COMMAND", command)
        if len(args) != _ARITIES[command]:
            return fail(
                lineno,
                "BAD_ARITY",
                f"{command} expects {_ARITIES[command]} arguments, got {len(args)}",
            )

        def number(token: str) -> float:
            return float(token)

        try:
            if command == "level":
                level = number(args[0])
                continue
            if command == "wall":
                wall_id = args[0]
                x1, y1, x2, y2, height, thickness = map(number, args[1:])
                wall = Wall(
                    wall_id,
                    Point3(x1, y1, level),
                    Point3(x2, y2, level),
                    height,
                    thickness,
                )
                problem = _check_wall(wall)
                if problem:
                    return fail(lineno, *problem)
                existing = wall_lookup(wall_id)
                if existing is not None:
                    walls[walls.index(existing)] = wall
                    for opening in openings:
                        if opening.host_wall == wall_id:
                            problem = _check_opening(opening, wall) or _check_overlap(
                                opening, wall, openings
                            )
                            if problem:
                                return fail(lineno, *problem)
                else:
                    walls.append(wall)
                continue
            if command in ("window", "door"):
                opening_id = args[0]
                wall_id = args[1]
                wall = wall_lookup(wall_id)
                if wall is None:
                    return fail(lineno, "UNDEFINED_REFERENCE", f"wall {wall_id}")
                if command == "window":
                    width, height, sill, offset = map(number, args[2:])
                else:
                    width, height, offset = map(number, args[2:])
                    sill = 0.0
                opening = Opening(opening_id, wall_id, width, height, sill, offset, command)
                problem = _check_opening(opening, wall)
                if problem:
                    return fail(lineno, *problem)
                openings = [o for o in openings if o.id != opening_id]
                problem = _check_overlap(opening, wall, openings)
                if problem:
                    return fail(lineno, *problem)
                openings.append(opening)
                continue
            if command == "roof":
                thickness = number(args[0])
                if thickness <= 0:
                    return fail(lineno, "NONPOSITIVE_DIMENSION", f"thickness {_fmt(thickness)}")
                if not walls:
                    return fail(lineno, "UNDEFINED_REFERENCE", "no walls to roof over")
                roof_thickness = thickness
                continue
            if command == "room":
                length, width, height, thickness = map(number, args)
                for name, value in (
                    ("length", length),
                    ("width", width),
                    ("height", height),
                    ("thickness", thickness),
                ):
                    if value <= 0:
                        return fail(lineno, "NONPOSITIVE_DIMENSION", f"{name} {_fmt(value)}")
                corners = [
                    (0.0, 0.0),
                    (length, 0.0),
                    (length, width),
                    (0.0, width),
                ]
                for index in range(4):
                    x1, y1 = corners[index]
                    x2, y2 = corners[(index + 1) % 4]
                    wall = Wall(
                        f"w{index + 1}",
                        Point3(x1, y1, level),
                        Point3(x2, y2, level),
                        height,
                        thickness,
                    )
                    problem = _check_wall(wall)
                    if problem:
                        return fail(lineno, *problem)
                    existing = wall_lookup(wall.id)
                    if existing is not None:
                        walls[walls.index(existing)] = wall
                    else:
                        walls.append(wall)
                continue
        except ValueError:
            return fail(lineno, "BAD_ARITY", f"{command} expects numeric arguments")

    scene = SceneModel(
        walls=walls,
        windows=[o for o in openings if o.kind == "window"],
        doors=[o for o in openings if o.kind == "door"],
        roof=_roof_over(walls, roof_thickness, level) if roof_thickness else None,
        level_elevation=level,
    )
    return scene


def _roof_over(walls: list[Wall], thickness: float, level: float) -> Roof:
    """Flat roof over the wall ring: the centerline bounding rectangle at the
    top of the tallest wall."""
    xs = [p for w in walls for p in (w.start.x, w.end.x)]
    ys = [p for w in walls for p in (w.start.y, w.end.y)]
    top = level + max(w.height for w in walls)
    footprint = (
        Point3(min(xs), min(ys), top),
        Point3(max(xs), min(ys), top),
        Point3(max(xs), max(ys), top),
        Point3(min(xs), max(ys), top),
    )
    return Roof(footprint, thickness)


def scene_to_script(scene: SceneModel) -> str:
    """Serialize a scene back to DSL; re-running reproduces an equal scene."""
    lines = []
    if scene.level_elevation != 0.0:
        lines.append(f"level {_fmt(scene.level_elevation)}")
    for w in scene.walls:
        lines.append(
            f"wall {w.id} {_fmt(w.start.x)} {_fmt(w.start.y)} {_fmt(w.end.x)} "
            f"{_fmt(w.end.y)} {_fmt(w.height)} {_fmt(w.thickness)}"
        )
    for o in scene.windows:
        lines.append(
            f"window {o.id} {o.host_wall} {_fmt(o.width)} {_fmt(o.height)} "
            f"{_fmt(o.sill_height)} {_fmt(o.center_offset)}"
        )
    for o in scene.doors:
        lines.append(
            f"door {o.id} {o.host_wall} {_fmt(o.width)} {_fmt(o.height)} "
            f"{_fmt(o.center_offset)}"
        )
    if scene.roof is not None:
        lines.append(f"roof {_fmt(scene.roof.thickness)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Room builder
# ---------------------------------------------------------------------------


def build_room(
    length: float,
    width: float,
    wall_height: float,
    wall_thickness: float,
    window_width: float,
    window_height: float,
    door_width: float,
    door_height: float,
    level: float = 0.0,
) -> SceneModel:
    """Four connected walls with a window each, one door, and a flat roof.

    Windows are centered at sill 0.9 m; the door is centered on wall 1 and
    wall 1's window shifts a quarter length sideways so the two never
    overlap.  Raises :class:`FitError` naming the first violated invariant.
    """
    for name, value in (
        ("length", length),
        ("width", width),
        ("wall_height", wall_height),
        ("wall_thickness", wall_thickness),
        ("window_width", window_width),
        ("window_height", window_height),
        ("door_width", door_width),
        ("door_height", door_height),
    ):
        if value <= 0:
            raise FitError(f"{name} must be positive, got {_fmt(value)}")

    corners = [(0.0, 0.0), (length, 0.0), (length, width), (0.0, width)]
    walls = []
    for index in range(4):
        x1, y1 = corners[index]
        x2, y2 = corners[(index + 1) % 4]
        wall = Wall(
            f"w{index + 1}",
            Point3(x1, y1, level),
            Point3(x2, y2, level),
            wall_height,
            wall_thickness,
        )
        problem = _check_wall(wall)
        if problem:
            raise FitError(problem[1])
        walls.append(wall)

    windows = []
    for index, wall in enumerate(walls):
        offset = length / 4.0 if index == 0 else 0.0
        window = Opening(
            f"win{index + 1}", wall.id, window_width, window_height, 0.9, offset, "window"
        )
        problem = _check_opening(window, wall)
        if problem:
            raise FitError(problem[1])
        windows.append(window)

    door = Opening("door1", walls[0].id, door_width, door_height, 0.0, 0.0, "door")
    problem = _check_opening(door, walls[0])
    if problem:
        raise FitError(problem[1])
    problem = _check_overlap(door, walls[0], windows)
    if problem:
        raise FitError(problem[1])

    roof = Roof(
        (
            Point3(0.0, 0.0, level + wall_height),
            Point3(length, 0.0, level + wall_height),
            Point3(length, width, level + wall_height),
            Point3(0.0, width, level + wall_height),
        ),
        wall_thickness,
    )
    return SceneModel(walls, windows, [door], roof, level)


# ---------------------------------------------------------------------------
# Repair loop
# ---------------------------------------------------------------------------

_FENCE_RE = re.compile(r"```[a-zA-Z0-9_-]*\n(.*?)```", re.DOTALL)


def extract_script_block(reply: str) -> str:
    """First fenced code block, or the whole reply when nothing is fenced."""
    match = _FENCE_RE.search(reply)
    if match:
        return match.group(1).strip("\n")
    return reply.strip()


@dataclass
class RepairAttempt:
    script_text: str
    scene: SceneModel | None = None
    error: str | None = None

    @property
    def succeeded(self) -> bool:
        return self.scene is not None

    def to_json(self) -> dict:
        return {
            "script_text": self.script_text,
            "outcome": {"scene": scene_to_json(self.scene)}
            if self.scene is not None
            else {"error": self.error},
        }


@dataclass
class RepairSession:
    transcript: Transcript
    attempts: list[RepairAttempt]
    budget: int
    state: str  # running | converged | exhausted

    @property
    def converged(self) -> bool:
        return self.state == "converged"

    @property
    def scene(self) -> SceneModel | None:
        for attempt in reversed(self.attempts):
            if attempt.scene is not None:
                return attempt.scene
        return None

    def to_json(self) -> dict:
        return {
            "state": self.state,
            "budget": self.budget,
            "attempts": [a.to_json() for a in self.attempts],
        }


def repair_loop(task_prompt: str, provider, budget: int, session_id: str | None = None) -> RepairSession:
    """Generate-execute-debug until a script runs clean or the budget is spent.

    The first turn sends the task prompt; every later turn sends the prior
    error string verbatim.  Fixing one bug may surface another, so no
    monotonicity is assumed; the loop simply terminates within ``budget``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if isinstance(provider, ProviderConfig):
        provider = provider_for(provider)
    transcript = Transcript(session_id or "repair")
    attempts: list[RepairAttempt] = []
    message = task_prompt
    state = "exhausted"
    for attempt_index in range(budget):
        reply = send(transcript, message, provider, attempt_index)
        script = extract_script_block(reply.content)
        result = run_scene_script(script)
        if isinstance(result, SceneModel):
            attempts.append(RepairAttempt(script, scene=result))
            state = "converged"
            break
        attempts.append(RepairAttempt(script, error=result))
        message = result
    return RepairSession(transcript, attempts, budget, state)


# ---------------------------------------------------------------------------
# Scene meshing
# ---------------------------------------------------------------------------


class _MeshBuilder:
    def __init__(self):
        self.vertices: list[tuple[float, float, float]] = []
        self.triangles: list[tuple[int, int, int]] = []
        self._index: dict[tuple[float, float, float], int] = {}

    def vertex(self, point) -> int:
        key = (round(point[0], 9), round(point[1], 9), round(point[2], 9))
        found = self._index.get(key)
        if found is None:
            found = len(self.vertices)
            self._index[key] = found
            self.vertices.append((float(point[0]), float(point[1]), float(point[2])))
        return found

    def tri(self, a, b, c):
        self.triangles.append((self.vertex(a), self.vertex(b), self.vertex(c)))

    def quad(self, a, b, c, d):
        """Two triangles covering a-b-c-d (given in winding order)."""
        self.tri(a, b, c)
        self.tri(a, c, d)

    def build(self) -> TriangleMesh:
        return TriangleMesh(np.array(self.vertices), np.array(self.triangles))


@dataclass(frozen=True)
class _Hole:
    a0: float
    a1: float
    z0: float
    z1: float
    open_bottom: bool


class _WallFrame:
    """Local wall coordinates: a along the wall, b across the thickness,
    z absolute elevation."""

    def __init__(self, wall: Wall, level: float):
        self.length = wall.length
        self.ux = (wall.end.x - wall.start.x) / self.length
        self.uy = (wall.end.y - wall.start.y) / self.length
        self.nx, self.ny = -self.uy, self.ux
        self.half = wall.thickness / 2.0
        self.z_bottom = level
        self.z_top = level + wall.height
        self.origin = wall.start

    def world(self, a: float, b: float, z: float) -> tuple[float, float, float]:
        return (
            self.origin.x + a * self.ux + b * self.nx,
            self.origin.y + a * self.uy + b * self.ny,
            z,
        )


def _emit_tunnel_left(builder, frame, a, z0, z1):
    # Material at smaller a; outward normal +a (counterclockwise in (b, z)).
    h = frame.half
    builder.quad(
        frame.world(a, -h, z0),
        frame.world(a, +h, z0),
        frame.world(a, +h, z1),
        frame.world(a, -h, z1),
    )


def _emit_tunnel_right(builder, frame, a, z0, z1):
    h = frame.half
    builder.quad(
        frame.world(a, -h, z0),
        frame.world(a, -h, z1),
        frame.world(a, +h, z1),
        frame.world(a, +h, z0),
    )


def _emit_tunnel_top(builder, frame, z, a0, a1):
    # Material above; outward normal -z.
    h = frame.half
    builder.quad(
        frame.world(a0, -h, z),
        frame.world(a0, +h, z),
        frame.world(a1, +h, z),
        frame.world(a1, -h, z),
    )


def _emit_tunnel_bottom(builder, frame, z, a0, a1):
    h = frame.half
    builder.quad(
        frame.world(a0, -h, z),
        frame.world(a1, -h, z),
        frame.world(a1, +h, z),
        frame.world(a0, +h, z),
    )


def _emit_top_strip(builder, frame, a0, a1):
    h = frame.half
    builder.quad(
        frame.world(a0, -h, frame.z_top),
        frame.world(a1, -h, frame.z_top),
        frame.world(a1, +h, frame.z_top),
        frame.world(a0, +h, frame.z_top),
    )


def _emit_bottom_strip(builder, frame, a0, a1):
    h = frame.half
    builder.quad(
        frame.world(a0, -h, frame.z_bottom),
        frame.world(a0, +h, frame.z_bottom),
        frame.world(a1, +h, frame.z_bottom),
        frame.world(a1, -h, frame.z_bottom),
    )


def _emit_end_faces(builder, frame):
    h = frame.half
    builder.quad(
        frame.world(0.0, -h, frame.z_bottom),
        frame.world(0.0, -h, frame.z_top),
        frame.world(0.0, +h, frame.z_top),
        frame.world(0.0, +h, frame.z_bottom),
    )
    builder.quad(
        frame.world(frame.length, -h, frame.z_bottom),
        frame.world(frame.length, +h, frame.z_bottom),
        frame.world(frame.length, +h, frame.z_top),
        frame.world(frame.length, -h, frame.z_top),
    )


def _emit_big_faces(builder, frame, tris):
    """Emit (a, z) triangles on both wall faces; input is counterclockwise
    in (a, z), which faces the back; the front face mirrors it."""
    h = frame.half
    for t in tris:
        builder.tri(*(frame.world(a, -h, z) for a, z in t))
    for t in tris:
        builder.tri(*(frame.world(a, +h, z) for a, z in reversed(t)))


def _piece_face_triangles(pa0, pa1, zb, zt, hole: _Hole | None):
    O0, O1, O2, O3 = (pa0, zb), (pa1, zb), (pa1, zt), (pa0, zt)
    if hole is None:
        return [(O0, O1, O2), (O0, O2, O3)]
    h0, h1 = (hole.a0, hole.z0), (hole.a1, hole.z0)
    h2, h3 = (hole.a1, hole.z1), (hole.a0, hole.z1)
    if hole.open_bottom:
        # Notch open at the floor: six triangles around the doorway.
        return [
            (O0, h0, h3),
            (O0, h3, O3),
            (O3, h3, h2),
            (O3, h2, O2),
            (O2, h2, h1),
            (O2, h1, O1),
        ]
    # Interior hole: four trapezoid bands, eight triangles.
    return [
        (O0, O1, h1),
        (O0, h1, h0),
        (O1, O2, h2),
        (O1, h2, h1),
        (O2, O3, h3),
        (O2, h3, h2),
        (O3, O0, h0),
        (O3, h0, h3),
    ]


def _wall_mesh_pieces(builder, frame, holes: list[_Hole]):
    """One piece per hole, cut at the midpoints between consecutive holes."""
    cuts = [0.0]
    for left, right in zip(holes, holes[1:]):
        cuts.append((left.a1 + right.a0) / 2.0)
    cuts.append(frame.length)

    for index in range(len(cuts) - 1):
        pa0, pa1 = cuts[index], cuts[index + 1]
        hole = holes[index] if index < len(holes) else None
        _emit_big_faces(
            builder, frame, _piece_face_triangles(pa0, pa1, frame.z_bottom, frame.z_top, hole)
        )
        _emit_top_strip(builder, frame, pa0, pa1)
        if hole is not None and hole.open_bottom:
            if hole.a0 - pa0 > _TOL:
                _emit_bottom_strip(builder, frame, pa0, hole.a0)
            if pa1 - hole.a1 > _TOL:
                _emit_bottom_strip(builder, frame, hole.a1, pa1)
        else:
            _emit_bottom_strip(builder, frame, pa0, pa1)
        if hole is not None:
            _emit_tunnel_left(builder, frame, hole.a0, hole.z0, hole.z1)
            _emit_tunnel_right(builder, frame, hole.a1, hole.z0, hole.z1)
            _emit_tunnel_top(builder, frame, hole.z1, hole.a0, hole.a1)
            if not hole.open_bottom:
                _emit_tunnel_bottom(builder, frame, hole.z0, hole.a0, hole.a1)


def _wall_mesh_grid(builder, frame, holes: list[_Hole]):
    """General fallback for holes that overlap along the wall: subdivide the
    face into a cut grid so every shared edge matches exactly."""
    a_cuts = sorted({0.0, frame.length, *(h.a0 for h in holes), *(h.a1 for h in holes)})
    z_cuts = sorted({frame.z_bottom, frame.z_top, *(h.z0 for h in holes), *(h.z1 for h in holes)})

    def is_hole(ai, zi) -> bool:
        ca = (a_cuts[ai] + a_cuts[ai + 1]) / 2.0
        cz = (z_cuts[zi] + z_cuts[zi + 1]) / 2.0
        return any(h.a0 < ca < h.a1 and h.z0 < cz < h.z1 for h in holes)

    na, nz = len(a_cuts) - 1, len(z_cuts) - 1
    for ai in range(na):
        for zi in range(nz):
            a0, a1 = a_cuts[ai], a_cuts[ai + 1]
            z0, z1 = z_cuts[zi], z_cuts[zi + 1]
            if not is_hole(ai, zi):
                _emit_big_faces(
                    builder, frame, [((a0, z0), (a1, z0), (a1, z1)), ((a0, z0), (a1, z1), (a0, z1))]
                )
                if zi == nz - 1:
                    _emit_top_strip(builder, frame, a0, a1)
                if zi == 0:
                    _emit_bottom_strip(builder, frame, a0, a1)
                continue
            # Hole cell: tunnel faces toward every solid neighbor.
            if ai > 0 and not is_hole(ai - 1, zi):
                _emit_tunnel_left(builder, frame, a0, z0, z1)
            if ai < na - 1 and not is_hole(ai + 1, zi):
                _emit_tunnel_right(builder, frame, a1, z0, z1)
            if zi < nz - 1 and not is_hole(ai, zi + 1):
                _emit_tunnel_top(builder, frame, z1, a0, a1)
            if zi > 0 and not is_hole(ai, zi - 1):
                _emit_tunnel_bottom(builder, frame, z0, a0, a1)

    # End faces must match the z subdivision of the boundary columns.
    h = frame.half
    for zi in range(nz):
        z0, z1 = z_cuts[zi], z_cuts[zi + 1]
        builder.quad(
            frame.world(0.0, -h, z0),
            frame.world(0.0, -h, z1),
            frame.world(0.0, +h, z1),
            frame.world(0.0, +h, z0),
        )
        builder.quad(
            frame.world(frame.length, -h, z0),
            frame.world(frame.length, +h, z0),
            frame.world(frame.length, +h, z1),
            frame.world(frame.length, -h, z1),
        )


def _wall_mesh(wall: Wall, openings: list[Opening], level: float) -> TriangleMesh:
    frame = _WallFrame(wall, level)
    holes = []
    for o in sorted(openings, key=lambda o: o.span(wall)[0]):
        a0, a1 = o.span(wall)
        z0 = level + o.sill_height
        z1 = z0 + o.height
        holes.append(_Hole(a0, a1, z0, z1, o.kind == "door" and o.sill_height == 0.0))

    builder = _MeshBuilder()
    a_disjoint = all(
        left.a1 <= right.a0 + _TOL for left, right in zip(holes, holes[1:])
    )
    if a_disjoint:
        _wall_mesh_pieces(builder, frame, holes)
        _emit_end_faces(builder, frame)
    else:
        _wall_mesh_grid(builder, frame, holes)

    mesh = builder.build()
    if mesh.signed_volume() < 0:
        mesh.triangles = mesh.triangles[:, ::-1].copy()
    return mesh


def _box_mesh(min_corner, max_corner) -> TriangleMesh:
    x0, y0, z0 = min_corner
    x1, y1, z1 = max_corner
    builder = _MeshBuilder()
    builder.quad((x0, y0, z0), (x0, y0, z1), (x0, y1, z1), (x0, y1, z0))  # -x
    builder.quad((x1, y0, z0), (x1, y1, z0), (x1, y1, z1), (x1, y0, z1))  # +x
    builder.quad((x0, y0, z0), (x1, y0, z0), (x1, y0, z1), (x0, y0, z1))  # -y
    builder.quad((x0, y1, z0), (x0, y1, z1), (x1, y1, z1), (x1, y1, z0))  # +y
    builder.quad((x0, y0, z0), (x0, y1, z0), (x1, y1, z0), (x1, y0, z0))  # -z
    builder.quad((x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1))  # +z
    mesh = builder.build()
    if mesh.signed_volume() < 0:
        mesh.triangles = mesh.triangles[:, ::-1].copy()
    return mesh


def scene_to_mesh(scene: SceneModel) -> TriangleMesh:
    """Triangulate the scene: walls as boxes with openings cut through the
    thickness, the roof as a box.  Each element is its own edge-manifold
    component."""
    parts: list[TriangleMesh] = []
    for wall in scene.walls:
        holes = scene.openings_on(wall.id)
        parts.append(_wall_mesh(wall, holes, scene.level_elevation))
    if scene.roof is not None:
        xs = [p.x for p in scene.roof.footprint]
        ys = [p.y for p in scene.roof.footprint]
        z0 = scene.roof.footprint[0].z
        parts.append(
            _box_mesh((min(xs), min(ys), z0), (max(xs), max(ys), z0 + scene.roof.thickness))
        )
    vertices = []
    triangles = []
    offset = 0
    for part in parts:
        vertices.append(part.vertices)
        triangles.append(part.triangles + offset)
        offset += len(part.vertices)
    return TriangleMesh(np.vstack(vertices), np.vstack(triangles))
