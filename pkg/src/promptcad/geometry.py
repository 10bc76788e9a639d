"""Deterministic computational geometry for sectioned solids.

Coordinate parsing, closed-curve interpolation, validation predicates
(convexity, self-intersection, circle containment), arc-length resampling,
anti-twist lofting, and OBJ export.  Everything is pure and reentrant; all
lengths are meters and all arrays are float64.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

PLANE_TOL = 1e-9
AREA_TOL = 1e-12
FIT_TOL = 1e-6

AXIS_INDEX = {"x": 0, "y": 1, "z": 2}
_CANONICAL_BASIS = {
    # in-plane (u, v) axis pairs for rings lying in an axis-aligned plane
    "x": ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
    "y": ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0)),
    "z": ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)),
}


class CoordinateSyntaxError(ValueError):
    """Coordinate payload does not parse as a tuple list."""

    def __init__(self, message: str, line: int | None = None):
        place = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{place}")
        self.line = line


class CountMismatch(ValueError):
    def __init__(self, found: int, expected: int):
        super().__init__(f"expected {expected} coordinates, found {found}")
        self.found = found
        self.expected = expected


class PlaneViolation(ValueError):
    def __init__(self, index: int, value: float, axis: str, plane_value: float):
        super().__init__(
            f"point {index} has {axis} = {value}, expected {plane_value}"
        )
        self.index = index
        self.value = value
        self.axis = axis
        self.plane_value = plane_value


class DegenerateInput(ValueError):
    """Control points enclose no area (collinear or coincident)."""


class UnsupportedDegree(ValueError):
    def __init__(self, degree):
        super().__init__(f"degree must be 0 or 3, got {degree}")


class InvalidRing(ValueError):
    """Operation undefined on a self-intersecting ring."""


class LoftError(ValueError):
    pass


class TooFewSections(LoftError):
    pass


class NonMonotoneStack(LoftError):
    pass


class DegenerateSection(LoftError):
    pass


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(arr) -> "Point3":
        a = np.asarray(arr, dtype=float)
        return Point3(float(a[0]), float(a[1]), float(a[2]))


ORIGIN = Point3(0.0, 0.0, 0.0)


def as_ring(points) -> np.ndarray:
    """Normalize a point sequence to an (n, 3) float array."""
    if isinstance(points, np.ndarray):
        arr = points.astype(float, copy=True)
    elif points and isinstance(points[0], Point3):
        arr = np.array([[p.x, p.y, p.z] for p in points], dtype=float)
    else:
        arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) point array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("ring has non-finite coordinates")
    return arr


# ---------------------------------------------------------------------------
# Coordinate parsing
# ---------------------------------------------------------------------------

_NUM = r"[+-]?(?:\d+(?:\.\d+)?|\.\d+)(?:[eE][+-]?\d+)?"
_PAREN_TUPLE_RE = re.compile(rf"\(\s*({_NUM})\s*,\s*({_NUM})\s*,\s*({_NUM})\s*\)")
_BRACE_TUPLE_RE = re.compile(rf"\{{\s*({_NUM})\s*,\s*({_NUM})\s*,\s*({_NUM})\s*\}}")
_BARE_TUPLE_RE = re.compile(rf"^\s*({_NUM})\s*,\s*({_NUM})\s*,\s*({_NUM})\s*$")
_SEPARATOR_RE = re.compile(r"[\s,;]*")


@dataclass(frozen=True)
class TupleRun:
    """Character span of consecutive coordinate tuples within one line."""

    start: int
    end: int
    count: int
    full: bool


def _bracketed_matches(line: str):
    matches = list(_PAREN_TUPLE_RE.finditer(line)) + list(_BRACE_TUPLE_RE.finditer(line))
    matches.sort(key=lambda m: m.start())
    return matches


def tuple_run_span(line: str) -> Optional[TupleRun]:
    """Longest run of adjacent tuples in ``line``; None when it has none."""
    bare = _BARE_TUPLE_RE.match(line)
    if bare:
        stripped = line.strip()
        start = line.index(stripped)
        return TupleRun(start, start + len(stripped), 1, True)
    matches = _bracketed_matches(line)
    if not matches:
        return None
    best: Optional[tuple[int, int, int]] = None
    run_start = 0
    while run_start < len(matches):
        run_end = run_start
        while run_end + 1 < len(matches):
            gap = line[matches[run_end].end() : matches[run_end + 1].start()]
            if _SEPARATOR_RE.fullmatch(gap):
                run_end += 1
            else:
                break
        span = (matches[run_start].start(), matches[run_end].end(), run_end - run_start + 1)
        if best is None or span[1] - span[0] > best[1] - best[0]:
            best = span
        run_start = run_end + 1
    start, end, count = best
    full = (
        _SEPARATOR_RE.fullmatch(line[:start]) is not None
        and _SEPARATOR_RE.fullmatch(line[end:]) is not None
    )
    return TupleRun(start, end, count, full)


def _line_tuples(line: str, lineno: int) -> list[tuple[float, float, float]]:
    if not line.strip():
        return []
    bare = _BARE_TUPLE_RE.match(line)
    if bare:
        return [tuple(float(g) for g in bare.groups())]
    matches = _bracketed_matches(line)
    if not matches:
        raise CoordinateSyntaxError("no coordinate tuple found", lineno)
    cursor = 0
    out = []
    for m in matches:
        if not _SEPARATOR_RE.fullmatch(line[cursor : m.start()]):
            raise CoordinateSyntaxError(
                f"unexpected text {line[cursor:m.start()]!r}", lineno
            )
        out.append(tuple(float(g) for g in m.groups()))
        cursor = m.end()
    if not _SEPARATOR_RE.fullmatch(line[cursor:]):
        raise CoordinateSyntaxError(f"unexpected text {line[cursor:]!r}", lineno)
    return out


def parse_coordinates(
    payload: str,
    expected_count: int | None = None,
    plane_axis: str = "y",
    plane_value: float = 0.0,
) -> list[Point3]:
    """Parse ``(a,b,c)`` / ``{a,b,c}`` / bare ``a,b,c``-per-line coordinates.

    Points come back in source order.  Each point's ``plane_axis`` coordinate
    must equal ``plane_value`` within 1e-9 or :class:`PlaneViolation` names
    the first offender.
    """
    if plane_axis not in AXIS_INDEX:
        raise ValueError(f"unknown plane axis {plane_axis!r}")
    if not payload or not payload.strip():
        raise CoordinateSyntaxError("empty coordinate payload")
    triples: list[tuple[float, float, float]] = []
    for lineno, line in enumerate(payload.splitlines(), start=1):
        triples.extend(_line_tuples(line, lineno))
    if not triples:
        raise CoordinateSyntaxError("no coordinate tuples in payload")
    if expected_count is not None and len(triples) != expected_count:
        raise CountMismatch(len(triples), expected_count)
    axis = AXIS_INDEX[plane_axis]
    points = []
    for index, triple in enumerate(triples):
        if abs(triple[axis] - plane_value) > PLANE_TOL:
            raise PlaneViolation(index, triple[axis], plane_axis, plane_value)
        points.append(Point3(*triple))
    return points


# ---------------------------------------------------------------------------
# Planes and projections
# ---------------------------------------------------------------------------


def ring_normal(ring: np.ndarray) -> np.ndarray:
    """Newell normal of a closed polygon (unnormalized)."""
    rolled = np.roll(ring, -1, axis=0)
    return np.sum(np.cross(ring, rolled), axis=0)


def ring_plane_axis(ring: np.ndarray, tol: float = PLANE_TOL) -> Optional[str]:
    """Axis along which the ring is constant, if any."""
    spans = ring.max(axis=0) - ring.min(axis=0)
    for name, idx in AXIS_INDEX.items():
        if spans[idx] <= tol:
            return name
    return None


def ring_basis(ring: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal in-plane (u, v) basis; canonical for axis-aligned rings.

    Falls back to an SVD plane fit for tilted rings whose signed normal
    cancels (figure-eights), so predicates stay defined after rigid motion.
    """
    axis = ring_plane_axis(ring)
    if axis is not None:
        u, v = _CANONICAL_BASIS[axis]
        return np.array(u), np.array(v)
    n = ring_normal(ring)
    norm = np.linalg.norm(n)
    scale = float(np.abs(ring).max()) or 1.0
    if norm > AREA_TOL * scale * scale:
        n = n / norm
        seed = np.eye(3)[int(np.argmin(np.abs(n)))]
        u = seed - np.dot(seed, n) * n
        u = u / np.linalg.norm(u)
        v = np.cross(n, u)
        return u, v
    centered = ring - ring.mean(axis=0)
    _, singular, basis = np.linalg.svd(centered, full_matrices=False)
    if singular[1] <= PLANE_TOL * max(1.0, singular[0]):
        raise DegenerateInput("ring is collinear")
    return basis[0], basis[1]


def ring_to_2d(ring: np.ndarray, basis=None) -> np.ndarray:
    u, v = basis if basis is not None else ring_basis(ring)
    return np.column_stack([ring @ u, ring @ v])


def _project_point(point: Point3 | np.ndarray, basis) -> np.ndarray:
    arr = point.as_array() if isinstance(point, Point3) else np.asarray(point, dtype=float)
    u, v = basis
    return np.array([arr @ u, arr @ v])


def ring_area_2d(ring2: np.ndarray) -> float:
    """Signed shoelace area."""
    x, y = ring2[:, 0], ring2[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


# ---------------------------------------------------------------------------
# Interpolation
# ---------------------------------------------------------------------------


def interpolate_closed_section(points, degree: int, samples_per_span: int = 16) -> np.ndarray:
    """Sample the closed curve through ``points``.

    Degree 0 returns the control points themselves (a closed polyline with
    sharp corners); degree 3 is a closed uniform Catmull-Rom interpolant
    sampled ``samples_per_span`` times per span, passing through every
    control point.
    """
    pts = as_ring(points)
    n = len(pts)
    if n < 3:
        raise ValueError("need at least 3 control points")
    if degree not in (0, 3):
        raise UnsupportedDegree(degree)
    if samples_per_span < 1:
        raise ValueError("samples_per_span must be >= 1")
    gaps = np.linalg.norm(pts - np.roll(pts, -1, axis=0), axis=1)
    if np.any(gaps <= PLANE_TOL):
        raise DegenerateInput("coincident consecutive control points")
    # Collinearity via the second singular value of the centered points;
    # signed area would miss figure-eights, whose lobes cancel.
    centered = pts - pts.mean(axis=0)
    singular = np.linalg.svd(centered, compute_uv=False)
    if singular[1] <= PLANE_TOL * max(1.0, singular[0]):
        raise DegenerateInput("control points are collinear")
    if degree == 0:
        return pts.copy()

    ts = np.arange(samples_per_span) / samples_per_span
    t2, t3 = ts * ts, ts * ts * ts
    out = np.empty((n * samples_per_span, 3))
    for i in range(n):
        p0 = pts[(i - 1) % n]
        p1 = pts[i]
        p2 = pts[(i + 1) % n]
        p3 = pts[(i + 2) % n]
        seg = 0.5 * (
            2.0 * p1
            + np.outer(ts, p2 - p0)
            + np.outer(t2, 2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3)
            + np.outer(t3, -p0 + 3.0 * p1 - 3.0 * p2 + p3)
        )
        out[i * samples_per_span : (i + 1) * samples_per_span] = seg
    return out


# ---------------------------------------------------------------------------
# Predicates
# ---------------------------------------------------------------------------


def is_convex(ring) -> bool:
    """All nonzero turns of the closed ring share one sign.

    Zero cross products (collinear runs) are ignored, so a square with a
    midpoint inserted on an edge still counts as convex.
    """
    arr = as_ring(ring)
    if len(arr) < 3:
        raise ValueError("ring needs at least 3 vertices")
    ring2 = ring_to_2d(arr)
    edges = np.roll(ring2, -1, axis=0) - ring2
    crosses = edges[:, 0] * np.roll(edges[:, 1], -1) - edges[:, 1] * np.roll(edges[:, 0], -1)
    scale = float(np.max(np.sum(edges * edges, axis=1)))
    if scale == 0.0:
        return True
    significant = crosses[np.abs(crosses) > 1e-12 * scale]
    if len(significant) == 0:
        return True
    return bool(np.all(significant > 0) or np.all(significant < 0))


def _orient(p, q, r) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _point_segment_dist(p, a, b) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(p - a))
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def _segments_conflict(a, b, c, d, tol: float) -> bool:
    """Segments meet: proper crossing, touch within tol, or collinear overlap."""
    if min(a[0], b[0]) > max(c[0], d[0]) + tol or min(c[0], d[0]) > max(a[0], b[0]) + tol:
        return False
    if min(a[1], b[1]) > max(c[1], d[1]) + tol or min(c[1], d[1]) > max(a[1], b[1]) + tol:
        return False
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    if ((o1 > 0 and o2 < 0) or (o1 < 0 and o2 > 0)) and (
        (o3 > 0 and o4 < 0) or (o3 < 0 and o4 > 0)
    ):
        return True
    return (
        _point_segment_dist(c, a, b) <= tol
        or _point_segment_dist(d, a, b) <= tol
        or _point_segment_dist(a, c, d) <= tol
        or _point_segment_dist(b, c, d) <= tol
    )


def self_intersects(ring, tol: float = 1e-9) -> bool:
    """True when two non-adjacent closed-ring edges properly intersect or overlap.

    Shared endpoints of adjacent edges are excluded, so a triangle can never
    self-intersect.
    """
    arr = as_ring(ring)
    n = len(arr)
    if n < 3:
        raise ValueError("ring needs at least 3 vertices")
    ring2 = ring_to_2d(arr)
    for i in range(n):
        a, b = ring2[i], ring2[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or abs(i - j) == 1 or (i == 0 and j == n - 1):
                continue
            c, d = ring2[j], ring2[(j + 1) % n]
            if _segments_conflict(a, b, c, d, tol):
                return True
    return False


def point_in_polygon(point2, ring2: np.ndarray, tol: float = 1e-9) -> bool:
    """Inside-or-on test: boundary points within ``tol`` count as inside."""
    p = np.asarray(point2, dtype=float)
    n = len(ring2)
    for i in range(n):
        if _point_segment_dist(p, ring2[i], ring2[(i + 1) % n]) <= tol:
            return True
    inside = False
    px, py = p
    x0, y0 = ring2[-1]
    for x1, y1 in ring2:
        if (y0 > py) != (y1 > py):
            x_cross = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
            if px < x_cross:
                inside = not inside
        x0, y0 = x1, y1
    return inside


@dataclass(frozen=True)
class SectionConstraints:
    """The gate a section must pass before it is accepted for lofting."""

    require_convex: bool = False
    forbid_self_intersection: bool = False
    inner_circle_radius: float | None = None
    center_bound_radius: float | None = None
    center_bound_origin: Point3 = ORIGIN

    def __post_init__(self):
        for name in ("inner_circle_radius", "center_bound_radius"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if (
            self.inner_circle_radius is not None
            and self.center_bound_radius is not None
            and not self.inner_circle_radius > self.center_bound_radius
        ):
            raise ValueError(
                "inner_circle_radius must exceed center_bound_radius for the "
                "containment pair to be satisfiable"
            )


INNER_CIRCLE_SAMPLES = 64


def check_containment(ring, constraints: SectionConstraints) -> tuple[bool | None, bool | None]:
    """(contains_inner_circle, center_in_bound) for the ring, in its own plane.

    The inner circle is sampled at 64 points around the bound origin's
    in-plane projection; the centroid check uses the ring's vertex centroid.
    Raises :class:`InvalidRing` for self-intersecting rings.
    """
    arr = as_ring(ring)
    if self_intersects(arr):
        raise InvalidRing("containment is undefined on a self-intersecting ring")
    basis = ring_basis(arr)
    ring2 = ring_to_2d(arr, basis)
    center2 = _project_point(constraints.center_bound_origin, basis)

    contains: bool | None = None
    if constraints.inner_circle_radius is not None:
        angles = 2.0 * np.pi * np.arange(INNER_CIRCLE_SAMPLES) / INNER_CIRCLE_SAMPLES
        circle = center2 + constraints.inner_circle_radius * np.column_stack(
            [np.cos(angles), np.sin(angles)]
        )
        contains = all(point_in_polygon(p, ring2) for p in circle)

    center_ok: bool | None = None
    if constraints.center_bound_radius is not None:
        centroid = ring2.mean(axis=0)
        center_ok = bool(
            np.linalg.norm(centroid - center2) <= constraints.center_bound_radius + 1e-9
        )
    return contains, center_ok


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the section gate; failures are content, not exceptions."""

    convex: bool
    self_intersecting: bool
    contains_inner_circle: bool | None = None
    center_in_bound: bool | None = None
    violations: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "violations", tuple(tuple(v) for v in self.violations))

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "convex": self.convex,
            "self_intersecting": self.self_intersecting,
            "contains_inner_circle": self.contains_inner_circle,
            "center_in_bound": self.center_in_bound,
            "violations": [list(v) for v in self.violations],
            "passed": self.passed,
        }


def validate_section(ring, constraints: SectionConstraints) -> ValidationReport:
    """Run the constraint checks and collect violations with stable codes."""
    arr = as_ring(ring)
    convex = is_convex(arr)
    intersecting = self_intersects(arr)
    violations: list[tuple[str, str]] = []
    if constraints.require_convex and not convex:
        violations.append(("NON_CONVEX", "ring has turns of mixed sign"))
    if constraints.forbid_self_intersection and intersecting:
        violations.append(("SELF_INTERSECT", "ring edges intersect each other"))

    contains: bool | None = None
    center_ok: bool | None = None
    wants_containment = (
        constraints.inner_circle_radius is not None
        or constraints.center_bound_radius is not None
    )
    if wants_containment and not intersecting:
        contains, center_ok = check_containment(arr, constraints)
        if contains is False:
            violations.append(
                (
                    "INNER_CIRCLE_MISS",
                    f"ring does not contain the radius-"
                    f"{constraints.inner_circle_radius} circle",
                )
            )
        if center_ok is False:
            violations.append(
                (
                    "CENTER_OUT_OF_BOUND",
                    f"ring centroid is farther than {constraints.center_bound_radius} "
                    "from the bound origin",
                )
            )
    return ValidationReport(convex, intersecting, contains, center_ok, tuple(violations))


# ---------------------------------------------------------------------------
# Sections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClosedSection:
    """Closed planar curve defined by control points and an interpolation degree."""

    control_points: tuple[Point3, ...]
    degree: int
    plane_axis: str
    plane_value: float

    def __post_init__(self):
        pts = tuple(
            p if isinstance(p, Point3) else Point3.from_array(p) for p in self.control_points
        )
        object.__setattr__(self, "control_points", pts)
        if len(pts) < 3:
            raise ValueError("a closed section needs at least 3 control points")
        if self.degree not in (0, 3):
            raise UnsupportedDegree(self.degree)
        if self.plane_axis not in AXIS_INDEX:
            raise ValueError(f"unknown plane axis {self.plane_axis!r}")
        axis = AXIS_INDEX[self.plane_axis]
        arr = self.points_array()
        if np.any(np.abs(arr[:, axis] - self.plane_value) > PLANE_TOL):
            raise ValueError(
                f"control points must lie on {self.plane_axis} = {self.plane_value}"
            )
        gaps = np.linalg.norm(arr - np.roll(arr, -1, axis=0), axis=1)
        if np.any(gaps <= PLANE_TOL):
            raise ValueError("consecutive control points coincide")

    def points_array(self) -> np.ndarray:
        return np.array([[p.x, p.y, p.z] for p in self.control_points])

    def sample(self, samples_per_span: int = 16) -> np.ndarray:
        return interpolate_closed_section(self.points_array(), self.degree, samples_per_span)

    def translated(self, plane_value: float) -> "ClosedSection":
        delta = plane_value - self.plane_value
        axis = AXIS_INDEX[self.plane_axis]
        arr = self.points_array()
        arr[:, axis] += delta
        return ClosedSection(
            tuple(Point3.from_array(p) for p in arr), self.degree, self.plane_axis, plane_value
        )


# ---------------------------------------------------------------------------
# Lofting
# ---------------------------------------------------------------------------


@dataclass
class TriangleMesh:
    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(self.triangles) and (
            self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)
        ):
            raise ValueError("triangle indices out of range")

    def edge_counts(self) -> dict[tuple[int, int], int]:
        counts: dict[tuple[int, int], int] = {}
        for i, j, k in self.triangles:
            for a, b in ((i, j), (j, k), (k, i)):
                key = (min(a, b), max(a, b))
                counts[key] = counts.get(key, 0) + 1
        return counts

    def is_edge_manifold(self) -> bool:
        return all(c == 2 for c in self.edge_counts().values())

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edge_counts()) + len(self.triangles)

    def signed_volume(self) -> float:
        v = self.vertices
        t = self.triangles
        return float(
            np.sum(np.einsum("ij,ij->i", v[t[:, 0]], np.cross(v[t[:, 1]], v[t[:, 2]]))) / 6.0
        )

    def triangle_areas(self) -> np.ndarray:
        v = self.vertices
        t = self.triangles
        return 0.5 * np.linalg.norm(
            np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]]), axis=1
        )

    def components(self) -> list["TriangleMesh"]:
        """Split into vertex-connected components, reindexing each."""
        parent = list(range(len(self.vertices)))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb

        for i, j, k in self.triangles:
            union(int(i), int(j))
            union(int(j), int(k))
        groups: dict[int, list[int]] = {}
        for t_idx, (i, _j, _k) in enumerate(self.triangles):
            groups.setdefault(find(int(i)), []).append(t_idx)
        out = []
        for tri_indices in groups.values():
            tris = self.triangles[tri_indices]
            used = np.unique(tris)
            remap = {int(old): new for new, old in enumerate(used)}
            new_tris = np.vectorize(lambda v: remap[int(v)])(tris)
            out.append(TriangleMesh(self.vertices[used], new_tris))
        return out

    def to_json_dict(self) -> dict:
        return {
            "vertices": self.vertices.tolist(),
            "triangles": self.triangles.tolist(),
        }


@dataclass
class LoftedMesh(TriangleMesh):
    section_count: int = 0
    ring_size: int = 0

    def to_json_dict(self) -> dict:
        data = super().to_json_dict()
        data["section_count"] = self.section_count
        data["ring_size"] = self.ring_size
        return data


def resample_ring(ring, count: int) -> np.ndarray:
    """Resample a closed polyline to ``count`` points uniform in arc length,
    starting from the ring's first vertex."""
    arr = as_ring(ring)
    closed = np.vstack([arr, arr[:1]])
    seg_lengths = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    cumulative = np.concatenate([[0.0], np.cumsum(seg_lengths)])
    total = cumulative[-1]
    if total <= PLANE_TOL:
        raise DegenerateSection("ring has zero perimeter")
    targets = np.arange(count) * total / count
    out = np.empty((count, 3))
    for axis in range(3):
        out[:, axis] = np.interp(targets, cumulative, closed[:, axis])
    return out


def align_rings(prev: np.ndarray, ring: np.ndarray) -> tuple[np.ndarray, int, bool, float]:
    """Rotate (and flip, if winding differs) ``ring`` to best match ``prev``.

    Exhausts all cyclic rotations and returns the aligned ring, the chosen
    rotation, whether the ring was flipped, and the minimal twist metric
    (sum of squared correspondence distances).
    """
    if len(prev) != len(ring):
        raise ValueError("rings must share a common size before alignment")
    basis = ring_basis(prev)
    flipped = False
    candidate = ring
    if ring_area_2d(ring_to_2d(prev, basis)) * ring_area_2d(ring_to_2d(ring, basis)) < 0:
        candidate = ring[::-1].copy()
        flipped = True
    m = len(candidate)
    best_rotation = 0
    best_cost = None
    for r in range(m):
        cost = float(np.sum((np.roll(candidate, -r, axis=0) - prev) ** 2))
        if best_cost is None or cost < best_cost - 1e-15:
            best_cost = cost
            best_rotation = r
    aligned = np.roll(candidate, -best_rotation, axis=0)
    return aligned, best_rotation, flipped, best_cost


def _stack_axis(rings: list[np.ndarray]) -> tuple[str, list[float]]:
    axis_name = None
    for name in ("y", "z", "x"):
        if all(ring_plane_axis(r) == name or _axis_constant(r, name) for r in rings):
            axis_name = name
            break
    if axis_name is None:
        raise NonMonotoneStack("sections do not share a common constant axis")
    idx = AXIS_INDEX[axis_name]
    values = [float(r[0, idx]) for r in rings]
    deltas = np.diff(values)
    if not (np.all(deltas > PLANE_TOL) or np.all(deltas < -PLANE_TOL)):
        raise NonMonotoneStack(
            f"stacking coordinate along {axis_name} is not strictly monotone: {values}"
        )
    return axis_name, values


def _axis_constant(ring: np.ndarray, name: str) -> bool:
    idx = AXIS_INDEX[name]
    return float(ring[:, idx].max() - ring[:, idx].min()) <= PLANE_TOL


def loft(sections: Sequence, cap_ends: bool = True) -> LoftedMesh:
    """Skin an ordered stack of closed rings into a triangle mesh.

    Rings are arc-length resampled to a common size, unified in winding,
    rotated to the anti-twist correspondence, joined by quad strips, and
    capped with centroid fans.  The capped result is watertight with
    Euler characteristic 2.
    """
    rings = [as_ring(s) for s in sections]
    if len(rings) < 2:
        raise TooFewSections(f"loft needs at least 2 sections, got {len(rings)}")
    for ring in rings:
        if len(ring) < 3:
            raise DegenerateSection("ring has fewer than 3 vertices")
        scale = float(np.abs(ring).max()) or 1.0
        if np.linalg.norm(ring_normal(ring)) <= AREA_TOL * scale * scale:
            raise DegenerateSection("ring encloses no area")
    _stack_axis(rings)

    m = max(len(r) for r in rings)
    resampled = [resample_ring(r, m) for r in rings]
    aligned = [resampled[0]]
    for ring in resampled[1:]:
        fitted, _, _, _ = align_rings(aligned[-1], ring)
        aligned.append(fitted)

    s = len(aligned)
    vertices = np.vstack(aligned)
    triangles: list[tuple[int, int, int]] = []
    for i in range(s - 1):
        base_a = i * m
        base_b = (i + 1) * m
        for k in range(m):
            a0 = base_a + k
            a1 = base_a + (k + 1) % m
            b0 = base_b + k
            b1 = base_b + (k + 1) % m
            triangles.append((a0, a1, b1))
            triangles.append((a0, b1, b0))
    if cap_ends:
        bottom_centroid = len(vertices)
        top_centroid = len(vertices) + 1
        vertices = np.vstack([vertices, aligned[0].mean(axis=0), aligned[-1].mean(axis=0)])
        for k in range(m):
            triangles.append((bottom_centroid, (k + 1) % m, k))
            base = (s - 1) * m
            triangles.append((top_centroid, base + k, base + (k + 1) % m))

    mesh = LoftedMesh(vertices, np.array(triangles), section_count=s, ring_size=m)
    if mesh.signed_volume() < 0:
        mesh.triangles = mesh.triangles[:, ::-1].copy()
    if np.any(mesh.triangle_areas() <= AREA_TOL):
        raise DegenerateSection("loft produced a degenerate triangle")
    if cap_ends:
        if not mesh.is_edge_manifold():
            raise LoftError("loft is not edge-manifold")
        if mesh.euler_characteristic() != 2:
            raise LoftError(
                f"capped loft has Euler characteristic {mesh.euler_characteristic()}"
            )
    return mesh


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def export_obj(mesh: TriangleMesh) -> bytes:
    """ASCII OBJ with 6-decimal vertices; byte-identical for identical input."""
    if len(mesh.triangles) == 0:
        raise ValueError("refusing to export a mesh with no triangles")
    lines = [f"v {x:.6f} {y:.6f} {z:.6f}" for x, y, z in mesh.vertices]
    lines += [f"f {i + 1} {j + 1} {k + 1}" for i, j, k in mesh.triangles]
    return ("\n".join(lines) + "\n").encode("ascii")


def mesh_from_json(data: dict) -> TriangleMesh:
    if "ring_size" in data or "section_count" in data:
        return LoftedMesh(
            np.array(data["vertices"], dtype=float),
            np.array(data["triangles"], dtype=np.int64),
            section_count=int(data.get("section_count", 0)),
            ring_size=int(data.get("ring_size", 0)),
        )
    return TriangleMesh(
        np.array(data["vertices"], dtype=float),
        np.array(data["triangles"], dtype=np.int64),
    )
