"""The generate-execute-debug repair loop against the scene interpreter.

The first scripted reply references a wall that does not exist; the
interpreter's error string is fed back verbatim, and the second reply fixes
it. The converged scene is meshed into wall boxes with cut openings plus a
roof slab.
"""

import json
from pathlib import Path

from promptcad import build_room, export_obj, run_scene_script, scene_to_mesh, scene_to_script
from promptcad.gateway import MockProvider
from promptcad.scene import repair_loop

# The interpreter by itself: a deterministic error channel.
error = run_scene_script("wall w1 0 0 6 0 3 0.2\nwindow win1 w9 1 1.2 0.9 0")
print("interpreter says:", error)

script = json.loads(
    (Path(__file__).parent.parent / "tests" / "data" / "room_repair.json").read_text()
)
session = repair_loop("Write a scene script for a small room", MockProvider(script), budget=3)
print("\nrepair state:", session.state)
for index, attempt in enumerate(session.attempts, start=1):
    outcome = "scene OK" if attempt.succeeded else attempt.error
    print(f"attempt {index}: {outcome}")

# The parametric room builder produces the same kind of scene directly.
scene = build_room(6, 4, 3, 0.2, 1.0, 1.2, 0.9, 2.1)
print("\nbuild_room: 4 walls, roof area", scene.roof.area, "m^2")
print("as DSL:\n" + scene_to_script(scene))

mesh = scene_to_mesh(scene)
components = mesh.components()
print(
    f"mesh: {len(mesh.triangles)} triangles in {len(components)} components, "
    f"all manifold={all(c.is_edge_manifold() for c in components)}"
)
out = Path(__file__).parent / "room.obj"
out.write_bytes(export_obj(mesh))
print("wrote", out)
