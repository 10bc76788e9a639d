"""A full generation session against the deterministic mock provider.

The mock scripts a defective first reply (a self-intersecting bowtie) and
three valid decagons. Watch the engine reject the bowtie, escalate the
prompt with the corrective clause, accept the decagons, and loft the result.
"""

import json
from pathlib import Path

from promptcad import SectionConstraints, export_obj
from promptcad.gateway import MockProvider
from promptcad.session import DesignSession, SessionConfig

script = json.loads(
    (Path(__file__).parent.parent / "tests" / "data" / "decagon_session.json").read_text()
)

config = SessionConfig(
    mode="coordinate_sections",
    sections_target=3,
    max_iterations=4,
    degree=0,
    section_spacing=1.0,
    constraints=SectionConstraints(
        require_convex=True,
        forbid_self_intersection=True,
        inner_circle_radius=6.0,
        center_bound_radius=3.0,
    ),
)

session = DesignSession(config, MockProvider(script))


def narrate(sess, outcome):
    line = f"tick {sess.iterations}: {outcome.kind}"
    if outcome.defects:
        line += "  defects=" + ", ".join(d.value for d in outcome.defects)
    print(line)


session.run_to_completion(on_tick=narrate)

print("\nfinal prompt sent to the model:")
for line in session.snapshot()["prompt_text"].splitlines():
    print("  |", line)

mesh = session.assemble_model()
print(
    f"\nlofted column: {len(mesh.vertices)} vertices, "
    f"{len(mesh.triangles)} triangles, watertight={mesh.is_edge_manifold()}"
)
out = Path(__file__).parent / "session_column.obj"
out.write_bytes(export_obj(mesh))
print("wrote", out)
