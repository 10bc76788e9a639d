"""Expression grammar, parsing, evaluation, and payload extraction.

Raw model replies rarely arrive clean: they carry list numbering, panel
prefixes, and prose around the equation itself.  This module isolates the
equation-shaped payload, parses it into an AST over the variables x, y, z
(implicit multiplication included), enforces a trig-usage policy, and samples
expressions into planar profile curves.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

VARIABLES = ("x", "y", "z")
FUNCTIONS = ("sin", "cos", "tan")

_FUNC_TABLE: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
}


class NoPayloadFound(ValueError):
    """No substring of the response lexes as the requested payload kind."""


class ExpressionSyntaxError(ValueError):
    """Parse failure, with the character position and what was expected there."""

    def __init__(self, position: int, expected: str):
        super().__init__(f"syntax error at position {position}: expected {expected}")
        self.position = position
        self.expected = expected


class PolicyViolation(ValueError):
    """Expression parsed but breaks the active trig policy.

    ``code`` is ``"TAN_USED"`` or ``"NOT_TRIG"`` so defect detection can map
    the violation onto a corrective prompt clause; ``ast`` keeps the parsed
    expression observable for further defect checks.
    """

    def __init__(self, code: str, message: str, ast=None):
        super().__init__(message)
        self.code = code
        self.ast = ast


@dataclass(frozen=True)
class TrigPolicy:
    """Which function usage is acceptable in a parsed expression."""

    allow_tan: bool = False
    require_trig_only: bool = False


@dataclass(frozen=True)
class RawResponse:
    """One full model reply, tagged with its iteration number."""

    text: str
    iteration: int = 0

    def __post_init__(self):
        if not self.text:
            raise ValueError("response text must be non-empty")
        if self.iteration < 0:
            raise ValueError("iteration must be non-negative")


# ---------------------------------------------------------------------------
# AST nodes
# ---------------------------------------------------------------------------


class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    name: str


@dataclass(frozen=True)
class Add(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Sub(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Mul(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Neg(Node):
    operand: Node


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int


@dataclass(frozen=True)
class Call(Node):
    func: str
    arg: Node


def _eval(node: Node, x: float, y: float, z: float) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return {"x": x, "y": y, "z": z}[node.name]
    if isinstance(node, Add):
        return _eval(node.left, x, y, z) + _eval(node.right, x, y, z)
    if isinstance(node, Sub):
        return _eval(node.left, x, y, z) - _eval(node.right, x, y, z)
    if isinstance(node, Mul):
        return _eval(node.left, x, y, z) * _eval(node.right, x, y, z)
    if isinstance(node, Neg):
        return -_eval(node.operand, x, y, z)
    if isinstance(node, Pow):
        return _eval(node.base, x, y, z) ** node.exponent
    if isinstance(node, Call):
        return _FUNC_TABLE[node.func](_eval(node.arg, x, y, z))
    raise TypeError(f"unknown node {node!r}")


def _contains_call(node: Node, func: str) -> bool:
    if isinstance(node, Call):
        return node.func == func or _contains_call(node.arg, func)
    if isinstance(node, (Add, Sub, Mul)):
        return _contains_call(node.left, func) or _contains_call(node.right, func)
    if isinstance(node, Neg):
        return _contains_call(node.operand, func)
    if isinstance(node, Pow):
        return _contains_call(node.base, func)
    return False


def _bare_variable_outside_call(node: Node, inside_call: bool = False) -> bool:
    """True when some variable occurs outside every trig-function argument."""
    if isinstance(node, Var):
        return not inside_call
    if isinstance(node, Call):
        return _bare_variable_outside_call(node.arg, True)
    if isinstance(node, (Add, Sub, Mul)):
        return _bare_variable_outside_call(node.left, inside_call) or _bare_variable_outside_call(
            node.right, inside_call
        )
    if isinstance(node, Neg):
        return _bare_variable_outside_call(node.operand, inside_call)
    if isinstance(node, Pow):
        return _bare_variable_outside_call(node.base, inside_call)
    return False


def _format_number(value: float) -> str:
    if math.isfinite(value) and value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


# Precedence levels used only by the canonical printer.
_LEVEL_ADD = 1
_LEVEL_NEG = 2
_LEVEL_MUL = 3
_LEVEL_POW = 4
_LEVEL_ATOM = 5


def _level(node: Node) -> int:
    if isinstance(node, (Add, Sub)):
        return _LEVEL_ADD
    if isinstance(node, Neg):
        return _LEVEL_NEG
    if isinstance(node, Mul):
        return _LEVEL_MUL
    if isinstance(node, Pow):
        return _LEVEL_POW
    if isinstance(node, Const) and node.value < 0:
        return _LEVEL_NEG
    return _LEVEL_ATOM


def _canon(node: Node) -> str:
    if isinstance(node, Const):
        return _format_number(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({_canon(node.arg)})"
    if isinstance(node, Add):
        return f"{_canon(node.left)} + {_canon(node.right)}"
    if isinstance(node, Sub):
        right = _canon(node.right)
        if _level(node.right) <= _LEVEL_NEG:
            right = f"({right})"
        return f"{_canon(node.left)} - {right}"
    if isinstance(node, Neg):
        inner = _canon(node.operand)
        if _level(node.operand) <= _LEVEL_NEG:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Mul):
        parts = []
        for child in (node.left, node.right):
            text = _canon(child)
            if _level(child) < _LEVEL_MUL:
                text = f"({text})"
            parts.append(text)
        return "*".join(parts)
    if isinstance(node, Pow):
        base = _canon(node.base)
        if _level(node.base) < _LEVEL_ATOM:
            base = f"({base})"
        return f"{base}^{node.exponent}"
    raise TypeError(f"unknown node {node!r}")


@dataclass(frozen=True)
class ExpressionAst:
    """Parsed expression plus the normalized text it came from.

    ``implicit_products`` counts adjacency products the parser consumed
    (``2xyz`` contributes three); defect detection uses it to spot replies
    that ignored the explicit-multiplication instruction.
    """

    root: Node
    source_text: str
    implicit_products: int = 0

    def evaluate(self, point) -> float:
        x, y, z = point
        return _eval(self.root, float(x), float(y), float(z))

    def canonical(self) -> str:
        """Serialize with explicit ``*`` and explicit parentheses."""
        return _canon(self.root)

    def uses_function(self, func: str) -> bool:
        return _contains_call(self.root, func)

    def has_variable_outside_trig(self) -> bool:
        return _bare_variable_outside_call(self.root)


def additive_term_count(ast: ExpressionAst) -> int:
    """Number of top-level additive terms (a 4-term sum returns 4)."""

    def walk(node: Node) -> int:
        if isinstance(node, (Add, Sub)):
            return walk(node.left) + walk(node.right)
        return 1

    return walk(ast.root)


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    start: int
    end: int
    value: float = 0.0


_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?|\.\d+")
_PUNCT = {"(": "LPAREN", ")": "RPAREN", "+": "PLUS", "-": "MINUS", "*": "STAR", "^": "CARET"}


def _scan(text: str, start: int = 0) -> tuple[list[_Token], Optional[int]]:
    """Greedy lex from ``start``; returns tokens and the first stuck position."""
    tokens: list[_Token] = []
    i = start
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            m = _NUMBER_RE.match(text, i)
            if not m:
                return tokens, i
            tokens.append(_Token("NUMBER", m.group(), i, m.end(), float(m.group())))
            i = m.end()
            continue
        if ch.isalpha():
            matched = False
            for fname in FUNCTIONS:
                if text.startswith(fname, i):
                    j = i + len(fname)
                    while j < n and text[j].isspace():
                        j += 1
                    if j < n and text[j] == "(":
                        tokens.append(_Token("FUNC", fname, i, i + len(fname)))
                        i += len(fname)
                        matched = True
                        break
            if matched:
                continue
            if ch in VARIABLES:
                tokens.append(_Token("NAME", ch, i, i + 1))
                i += 1
                continue
            return tokens, i
        kind = _PUNCT.get(ch)
        if kind is None:
            return tokens, i
        tokens.append(_Token(kind, ch, i, i + 1))
        i += 1
    return tokens, None


def _tokenize(text: str) -> list[_Token]:
    tokens, stuck = _scan(text)
    if stuck is not None:
        raise ExpressionSyntaxError(stuck, "a number, variable, function, or operator")
    return tokens


# ---------------------------------------------------------------------------
# Recursive-descent parser
#
# expr    := term (('+'|'-') term)*
# term    := ['-'] product
# product := juxt ('*' juxt)*
# juxt    := power power*          -- adjacency binds tighter than '*'
# power   := atom ('^' uint)?
# atom    := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token], source_len: int):
        self.tokens = tokens
        self.pos = 0
        self.source_len = source_len
        self.implicit_products = 0

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def error(self, expected: str) -> ExpressionSyntaxError:
        token = self.peek()
        position = token.start if token is not None else self.source_len
        return ExpressionSyntaxError(position, expected)

    def parse(self) -> Node:
        node = self.expr()
        if self.peek() is not None:
            raise self.error("end of expression")
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            token = self.peek()
            if token is None or token.kind not in ("PLUS", "MINUS"):
                return node
            self.advance()
            rhs = self.term()
            node = Add(node, rhs) if token.kind == "PLUS" else Sub(node, rhs)

    def term(self) -> Node:
        token = self.peek()
        if token is not None and token.kind == "MINUS":
            self.advance()
            return Neg(self.product())
        return self.product()

    def product(self) -> Node:
        node = self.juxt()
        while True:
            token = self.peek()
            if token is None or token.kind != "STAR":
                return node
            self.advance()
            node = Mul(node, self.juxt())

    _ATOM_STARTS = ("NUMBER", "NAME", "FUNC", "LPAREN")

    def juxt(self) -> Node:
        node = self.power()
        while True:
            token = self.peek()
            if token is None or token.kind not in self._ATOM_STARTS:
                return node
            self.implicit_products += 1
            node = Mul(node, self.power())

    def power(self) -> Node:
        base = self.atom()
        token = self.peek()
        if token is not None and token.kind == "CARET":
            self.advance()
            exp_token = self.peek()
            if (
                exp_token is None
                or exp_token.kind != "NUMBER"
                or exp_token.value != int(exp_token.value)
                or "." in exp_token.text
            ):
                raise self.error("a non-negative integer exponent")
            self.advance()
            return Pow(base, int(exp_token.value))
        return base

    def atom(self) -> Node:
        token = self.peek()
        if token is None:
            raise self.error("a number, variable, function, or '('")
        if token.kind == "NUMBER":
            self.advance()
            return Const(token.value)
        if token.kind == "NAME":
            self.advance()
            return Var(token.text)
        if token.kind == "FUNC":
            self.advance()
            opener = self.peek()
            if opener is None or opener.kind != "LPAREN":
                raise self.error("'(' after function name")
            self.advance()
            arg = self.expr()
            closer = self.peek()
            if closer is None or closer.kind != "RPAREN":
                raise self.error("')'")
            self.advance()
            return Call(token.text, arg)
        if token.kind == "LPAREN":
            self.advance()
            inner = self.expr()
            closer = self.peek()
            if closer is None or closer.kind != "RPAREN":
                raise self.error("')'")
            self.advance()
            return inner
        raise self.error("a number, variable, function, or '('")


def parse_expression(payload: str, policy: TrigPolicy | None = None) -> ExpressionAst:
    """Parse ``payload`` into an :class:`ExpressionAst`, enforcing ``policy``.

    Implicit multiplication by adjacency binds tighter than explicit ``*``,
    so ``5y^2z`` means ``5*(y^2)*z``.  ``tan`` is parseable but rejected when
    the policy forbids it, which keeps the usage observable to defect
    detection rather than invisible at the grammar level.
    """
    if not payload or not payload.strip():
        raise ExpressionSyntaxError(0, "a non-empty expression")
    policy = policy or TrigPolicy()
    parser = _Parser(_tokenize(payload), len(payload))
    root = parser.parse()
    ast = ExpressionAst(root, payload.strip(), parser.implicit_products)
    if not policy.allow_tan and ast.uses_function("tan"):
        raise PolicyViolation("TAN_USED", "tan is not allowed by the active policy", ast)
    if policy.require_trig_only and ast.has_variable_outside_trig():
        raise PolicyViolation(
            "NOT_TRIG", "expression has a variable outside sin/cos/tan arguments", ast
        )
    return ast


def eval_expression(ast: ExpressionAst, point) -> float:
    """Evaluate at a finite (x, y, z) triple; deterministic across runs."""
    return ast.evaluate(point)


# ---------------------------------------------------------------------------
# Payload extraction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtractionResult:
    payload: str
    numbering_stripped: bool
    prose_present: bool


# Ordered list-marker patterns stripped from line starts before scanning.
# The bullet pattern requires trailing whitespace and a non-digit so that
# negative coordinates like "-3, 0, 2" survive intact.
_NUMBERING_RES = (
    re.compile(r"^\s*\{\d+;\d+\}\s*\d+;\s*"),
    re.compile(r"^\s*\d+[.)]\s+"),
    re.compile(r"^\s*[-*•]\s+(?!\d)"),
)

_LETTER_RE = re.compile(r"[A-Za-z]")


def _strip_numbering(line: str) -> tuple[str, bool]:
    for pattern in _NUMBERING_RES:
        m = pattern.match(line)
        if m:
            return line[m.end():], True
    return line, False


def _equation_candidate(text: str) -> Optional[tuple[int, int]]:
    """Longest (start, end) span of ``text`` that parses as an expression."""
    best: Optional[tuple[int, int]] = None
    i = 0
    n = len(text)
    while i < n:
        tokens, stuck = _scan(text, i)
        if not tokens:
            if stuck is None:
                break
            i = stuck + 1
            continue
        for a in range(len(tokens)):
            for b in range(len(tokens), a, -1):
                window = tokens[a:b]
                try:
                    _Parser(window, n).parse()
                except ExpressionSyntaxError:
                    continue
                span = (window[0].start, window[-1].end)
                if best is None or span[1] - span[0] > best[1] - best[0]:
                    best = span
                break
        i = (stuck if stuck is not None else n) + 1
    return best


def _coordinate_candidate(lines: list[str]) -> Optional[tuple[str, list[int]]]:
    """Best coordinate payload: a block of tuple-only lines or an inline run."""
    from . import geometry

    best_text: Optional[str] = None
    best_lines: list[int] = []

    block: list[tuple[int, str]] = []

    def flush(block: list[tuple[int, str]]):
        nonlocal best_text, best_lines
        if not block:
            return
        text = "\n".join(line.strip() for _, line in block)
        if best_text is None or len(text) > len(best_text):
            best_text = text
            best_lines = [idx for idx, _ in block]

    for idx, line in enumerate(lines):
        if not line.strip():
            continue
        span = geometry.tuple_run_span(line)
        if span is not None and span.full:
            block.append((idx, line))
            continue
        flush(block)
        block = []
        if span is not None:
            run = line[span.start : span.end].strip()
            if best_text is None or len(run) > len(best_text):
                best_text = run
                best_lines = [idx]
    flush(block)

    if best_text is None:
        return None
    return best_text, best_lines


def extract_payload_info(text: str, kind: str) -> ExtractionResult:
    """Like :func:`extract_payload` but reports what cleanup was needed."""
    if kind not in ("equation", "coordinates"):
        raise ValueError(f"unknown payload kind {kind!r}")
    raw_lines = text.splitlines() or [""]
    stripped = [_strip_numbering(line) for line in raw_lines]
    lines = [line for line, _ in stripped]
    numbering_flags = [flag for _, flag in stripped]
    joined = "\n".join(lines)

    if kind == "equation":
        span = _equation_candidate(joined)
        if span is None:
            raise NoPayloadFound("no substring parses as an equation")
        payload = joined[span[0] : span[1]].strip()
        leftover = joined[: span[0]] + joined[span[1] :]
    else:
        found = _coordinate_candidate(lines)
        if found is None:
            raise NoPayloadFound("no substring parses as a coordinate list")
        payload, payload_lines = found
        leftover = "\n".join(
            line for idx, line in enumerate(lines) if idx not in set(payload_lines)
        )

    # Numbering anywhere in the reply counts as the defect.
    numbering = any(numbering_flags)
    prose = bool(_LETTER_RE.search(leftover))
    return ExtractionResult(payload, numbering, prose)


def extract_payload(response: RawResponse | str, kind: str) -> str:
    """Pull the longest substring of a reply that reads as the payload kind.

    List-numbering prefixes (``{0;0} 0;``, ``1.``, ``-``) are stripped and
    surrounding prose discarded.  A clean payload comes back unchanged.
    """
    text = response.text if isinstance(response, RawResponse) else response
    return extract_payload_info(text, kind).payload


# ---------------------------------------------------------------------------
# Profile sampling
# ---------------------------------------------------------------------------


def sample_profile(
    ast: ExpressionAst,
    t_range: tuple[float, float],
    samples: int,
    layer_y: float,
    amplitude: float,
) -> np.ndarray:
    """Sample ``(t, layer_y, amplitude * f(t, layer_y, 0))`` over ``t_range``.

    Returns an ``(samples, 3)`` array of points tracing the expression as a
    wave profile in the plane ``y = layer_y``.
    """
    t0, t1 = float(t_range[0]), float(t_range[1])
    if not t0 < t1:
        raise ValueError("t_range must satisfy t0 < t1")
    if samples < 2:
        raise ValueError("samples must be >= 2")
    if not amplitude > 0:
        raise ValueError("amplitude must be positive")
    ts = np.linspace(t0, t1, samples)
    zs = np.array([amplitude * ast.evaluate((t, layer_y, 0.0)) for t in ts])
    if not np.all(np.isfinite(zs)):
        raise ValueError("profile produced non-finite values")
    ys = np.full(samples, float(layer_y))
    return np.column_stack([ts, ys, zs])
