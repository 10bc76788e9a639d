"""promptcad: prompt-driven parametric geometry engine.

Turns natural-language prompts into validated 3D geometry through a chat
provider: expressions and coordinate sets are extracted from replies, parsed,
validated against geometric constraints, escalated back into the prompt when
defective, and lofted into watertight solids.  A BIM-lite scene DSL plus a
generate-execute-debug repair loop covers scripted building models.
"""

from .expressions import (
    ExpressionAst,
    ExpressionSyntaxError,
    NoPayloadFound,
    PolicyViolation,
    RawResponse,
    TrigPolicy,
    eval_expression,
    extract_payload,
    parse_expression,
    sample_profile,
)
from .gateway import (
    AuthError,
    ChatMessage,
    MockExpectationFailed,
    MockScriptExhausted,
    ProviderConfig,
    Transcript,
    TransportError,
    load_mock_script,
    provider_for,
    send,
)
from .geometry import (
    ClosedSection,
    CoordinateSyntaxError,
    CountMismatch,
    DegenerateInput,
    DegenerateSection,
    InvalidRing,
    LoftedMesh,
    NonMonotoneStack,
    PlaneViolation,
    Point3,
    SectionConstraints,
    TooFewSections,
    TriangleMesh,
    UnsupportedDegree,
    ValidationReport,
    check_containment,
    export_obj,
    interpolate_closed_section,
    is_convex,
    loft,
    parse_coordinates,
    self_intersects,
    validate_section,
)
from .prompts import (
    ClauseCatalog,
    ConstraintClause,
    DefectCode,
    PromptSpec,
    UnknownPreset,
    UnmappedDefect,
    default_catalog,
    detect_defects,
    escalate,
    render_prompt,
)
from .scene import (
    FitError,
    Opening,
    RepairSession,
    Roof,
    SceneModel,
    Wall,
    build_room,
    repair_loop,
    run_scene_script,
    scene_to_mesh,
    scene_to_script,
)
from .session import DesignSession, IterationOutcome, SessionConfig, describe_preset

__version__ = "0.1.0"
