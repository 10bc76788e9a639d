"""Lofting a stack of sections into a watertight column.

Rings of different sizes are resampled to a common vertex count, rotated to
the anti-twist correspondence, skinned with quad strips, and capped. The
result exports as a plain ASCII OBJ.
"""

from pathlib import Path

import numpy as np

from promptcad import export_obj, loft


def ring(n: int, radius: float, y: float, phase: float = 0.0) -> np.ndarray:
    angles = 2 * np.pi * np.arange(n) / n + phase
    return np.column_stack(
        [radius * np.cos(angles), np.full(n, y), radius * np.sin(angles)]
    )


sections = [
    ring(12, 4.0, 0.0),
    ring(16, 3.2, 1.5, phase=0.4),   # different vertex count and start angle
    ring(16, 3.6, 3.0, phase=1.1),
    ring(20, 2.4, 4.5, phase=2.0),
]

mesh = loft(sections, cap_ends=True)
print("vertices:", len(mesh.vertices))
print("triangles:", len(mesh.triangles))
print("edge-manifold:", mesh.is_edge_manifold())
print("V - E + F =", mesh.euler_characteristic())
print("enclosed volume: %.3f m^3" % mesh.signed_volume())

out = Path(__file__).parent / "column.obj"
out.write_bytes(export_obj(mesh))
print("wrote", out)
