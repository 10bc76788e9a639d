"""From raw model replies to wave profiles.

Replies rarely arrive clean. This walk-through extracts the equation payload
out of a noisy reply, parses it (implicit multiplication and all), checks it
against the trig policy, and samples it into a 3D wave profile.
"""

import numpy as np

from promptcad import (
    PolicyViolation,
    RawResponse,
    TrigPolicy,
    extract_payload,
    parse_expression,
    sample_profile,
)

# A reply with a panel-index prefix in front of the actual equation.
noisy = RawResponse("{0;0} 0; x^3 + 2xyz + 5y^2z - 7z^3")
payload = extract_payload(noisy, "equation")
print("extracted payload:", payload)

ast = parse_expression(payload)
print("canonical form:  ", ast.canonical())
print("implicit products consumed:", ast.implicit_products)
print("value at (1, 1, 1):", ast.evaluate((1, 1, 1)))

# The default policy bans tan; the violation is observable, not silent.
try:
    parse_expression("tan(x) + 1", TrigPolicy())
except PolicyViolation as exc:
    print("policy violation:", exc.code, "-", exc)

# Sample a smooth trig expression into a wave profile in the plane y = 0.
trig = parse_expression("sin(x)*cos(y)*cos(z) + cos(x)*sin(y)*sin(z)")
profile = sample_profile(trig, (0.0, 2.0 * np.pi), samples=33, layer_y=0.0, amplitude=1.5)
print("\nprofile shape:", profile.shape)
print("z range: [%.3f, %.3f]" % (profile[:, 2].min(), profile[:, 2].max()))
