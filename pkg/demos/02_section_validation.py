"""Parsing coordinate replies and gating them on geometric constraints.

Sections that will be lofted into a column must be convex, free of
self-intersections, contain a minimum structural circle (radius 6), and keep
their centroid within radius 3 of the origin. This script shows each check
catching a bad section.
"""

import numpy as np

from promptcad import (
    SectionConstraints,
    interpolate_closed_section,
    parse_coordinates,
    validate_section,
)

constraints = SectionConstraints(
    require_convex=True,
    forbid_self_intersection=True,
    inner_circle_radius=6.0,
    center_bound_radius=3.0,
)


def check(name: str, payload: str):
    points = parse_coordinates(payload, plane_axis="y", plane_value=0.0)
    ring = interpolate_closed_section(points, degree=0)
    report = validate_section(ring, constraints)
    verdict = "PASS" if report.passed else "FAIL " + str([c for c, _ in report.violations])
    print(f"{name:22s} {verdict}")


def ring_text(radius: float, center_x: float = 0.0, n: int = 16) -> str:
    angles = 2 * np.pi * np.arange(n) / n
    return "\n".join(
        f"({center_x + radius * np.cos(a):.6f},0,{radius * np.sin(a):.6f})" for a in angles
    )


check("healthy 16-gon r=7", ring_text(7.0))
check("too small r=5", ring_text(5.0))            # misses the inner circle
check("off-center by 4", ring_text(7.0, center_x=4.0))  # centroid out of bound
check("bowtie", "(0,0,0)\n(2,0,2)\n(2,0,0)\n(0,0,2)")    # self-intersecting

# A smooth degree-3 interpolation stays close to its control points.
points = parse_coordinates(ring_text(6.5, n=10))
smooth = interpolate_closed_section(points, degree=3, samples_per_span=16)
worst = max(
    float(np.min(np.linalg.norm(smooth - p.as_array(), axis=1))) for p in points
)
print(f"\ndegree-3 samples: {len(smooth)}, worst control-point distance: {worst:.2e} m")
