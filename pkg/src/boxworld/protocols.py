"""Entanglement-swapping harness and local transformations.

Global subsystem order in a swapping scenario is ``(A, B1, B2, C)``: ``P``
lives on ``A + B1``, ``Q`` on ``B2 + C`` and Bob measures ``B1 + B2``
jointly. Each of the four groups may hold several subsystems.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ConditioningError, InvalidTransformationError, ShapeError, SignatureMismatch
from .measurements import Measurement, require_measurement
from .states import DEFAULT_SIZE_GUARD, CHSH_SIGNATURE, chsh, collapse, is_local, nosig_vertices, require_state, validate_state
from .tensor import (
    BoxTensor,
    Signature,
    as_signature,
    format_rational,
    index_pairs,
    index_positions,
    outcomes,
    parse_rational,
    reduce_to,
    settings,
    size,
    tensor_product,
)


@dataclass(frozen=True)
class SwapScenario:
    """``P`` on ``A + B1``, ``Q`` on ``B2 + C``, Bob's measurement on ``B1 + B2``.

    ``b1`` is the number of trailing subsystems of ``P`` held by Bob and
    ``b2`` the number of leading subsystems of ``Q``.
    """

    P: BoxTensor
    Q: BoxTensor
    bob: Measurement
    b1: int = 1
    b2: int = 1

    def __post_init__(self) -> None:
        if not 0 < self.b1 < self.P.n_subsystems or not 0 < self.b2 < self.Q.n_subsystems:
            raise ShapeError("A, B1, B2 and C must each hold at least one subsystem")
        expected = self.P.signature[-self.b1:] + self.Q.signature[:self.b2]
        if self.bob.signature != expected:
            raise SignatureMismatch(f"Bob's measurement has signature {self.bob.signature}, expected {expected}")

    @property
    def n_a(self) -> int:
        return self.P.n_subsystems - self.b1

    @property
    def ac_signature(self) -> Signature:
        return self.P.signature[:self.n_a] + self.Q.signature[self.b2:]

    def validate(self) -> "SwapScenario":
        require_state(self.P)
        require_state(self.Q)
        require_measurement(self.bob)
        if any(v < 0 for e in self.bob.effects for v in e.entries):
            raise ShapeError("Bob's effects must be in positive representation")
        return self


def _check_outcome(s: SwapScenario, r: int) -> None:
    if not 0 <= r < len(s.bob):
        raise ShapeError(f"Bob's measurement has {len(s.bob)} outcomes, got r={r}")


def swap_joint_distribution(s: SwapScenario, r: int) -> BoxTensor:
    """``Pr(r a c | x z) = sum R_r(b1 b2|y1 y2) P(a b1|x y1) Q(b2 c|y2 z)`` over A and C."""
    _check_outcome(s, r)
    R = s.bob.effects[r]
    na, nb1 = s.n_a, s.b1
    bob_support = [((b, y), v) for (b, y), v in R.items() if v]

    def entry(ac, xz):
        a, c = ac[:na], ac[na:]
        x, z = xz[:na], xz[na:]
        total = Fraction(0)
        for (b, y), v in bob_support:
            pv = s.P[a + b[:nb1], x + y[:nb1]]
            if pv:
                qv = s.Q[b[nb1:] + c, y[nb1:] + z]
                if qv:
                    total += v * pv * qv
        return total

    return BoxTensor.from_function(s.ac_signature, entry)


def outcome_probability(s: SwapScenario, r: int) -> Fraction:
    """``Pr(r)``, read off the joint distribution at ``x = z = 0``."""
    joint = swap_joint_distribution(s, r)
    xz0 = (0,) * len(joint.signature)
    return sum(joint[ac, xz0] for ac in outcomes(joint.signature, xz0))


def collapsed_ac_state(s: SwapScenario, r: int) -> BoxTensor:
    joint = swap_joint_distribution(s, r)
    sig = joint.signature
    norms = {xz: sum(joint[ac, xz] for ac in outcomes(sig, xz)) for xz in settings(sig)}
    if any(v == 0 for v in norms.values()):
        raise ConditioningError(f"Bob's outcome {r} has probability zero")
    return BoxTensor.from_function(sig, lambda ac, xz: joint[ac, xz] / norms[xz])


@dataclass(frozen=True)
class LambdaTerm:
    weight: Fraction
    b1: tuple[int, ...]
    b2: tuple[int, ...]
    y1: tuple[int, ...]
    y2: tuple[int, ...]
    component: BoxTensor


@dataclass(frozen=True)
class LambdaDecomposition:
    """The collapsed AC state as a convex mixture of product states."""

    signature: Signature
    terms: tuple[LambdaTerm, ...]

    def reconstruct(self) -> BoxTensor:
        out = BoxTensor.zeros(self.signature)
        for t in self.terms:
            out = out + t.component.scale(t.weight)
        return out


def lambda_decomposition(s: SwapScenario, r: int) -> LambdaDecomposition:
    """Weights ``C^r / sum C^r`` with ``C^r = R_r(b1 b2|y1 y2) P(b1|y1) Q(b2|y2)``.

    Components are ``P_{b1 y1} (x) Q_{b2 y2}``, products of collapsed states.
    Terms with ``C^r = 0`` are dropped, which also skips zero-probability
    conditionings.
    """
    _check_outcome(s, r)
    R = s.bob.effects[r]
    na, nb1, nb2 = s.n_a, s.b1, s.b2
    p_b1 = reduce_to(s.P, range(na, s.P.n_subsystems))
    q_b2 = reduce_to(s.Q, range(nb2))
    b1_subs = list(range(na, na + nb1))
    b2_subs = list(range(nb2))
    raw = []
    for (b, y), v in R.items():
        if not v:
            continue
        b1, b2, y1, y2 = b[:nb1], b[nb1:], y[:nb1], y[nb1:]
        c = v * p_b1[b1, y1] * q_b2[b2, y2]
        if c:
            raw.append((c, b1, b2, y1, y2))
    total = sum(c for c, *_ in raw)
    if total == 0:
        raise ConditioningError(f"Bob's outcome {r} has probability zero")
    collapsed_p: dict = {}
    collapsed_q: dict = {}
    terms = []
    for c, b1, b2, y1, y2 in raw:
        if (b1, y1) not in collapsed_p:
            collapsed_p[b1, y1] = collapse(s.P, b1_subs, y1, b1)
        if (b2, y2) not in collapsed_q:
            collapsed_q[b2, y2] = collapse(s.Q, b2_subs, y2, b2)
        component = tensor_product(collapsed_p[b1, y1], collapsed_q[b2, y2])
        terms.append(LambdaTerm(c / total, b1, b2, y1, y2, component))
    return LambdaDecomposition(s.ac_signature, tuple(terms))


@dataclass(frozen=True)
class OutcomeCheck:
    outcome: int
    probability: Fraction
    reconstruction_exact: bool
    separable: bool
    lambda_terms: int
    chsh: Fraction | None = None

    def to_data(self) -> dict:
        data = {
            "outcome": self.outcome,
            "probability": format_rational(self.probability),
            "reconstruction_exact": self.reconstruction_exact,
            "separable": self.separable,
            "lambda_terms": self.lambda_terms,
        }
        if self.chsh is not None:
            data["chsh"] = format_rational(self.chsh)
        return data


@dataclass(frozen=True)
class SwapReport:
    outcomes: tuple[OutcomeCheck, ...]

    @property
    def no_swapping(self) -> bool:
        return all(o.reconstruction_exact and o.separable for o in self.outcomes)

    def to_data(self) -> dict:
        return {"no_swapping": self.no_swapping, "outcomes": [o.to_data() for o in self.outcomes]}


def verify_no_swapping(s: SwapScenario, *, limit: int = DEFAULT_SIZE_GUARD) -> SwapReport:
    """For every outcome of positive probability, rebuild the AC state and test locality."""
    s.validate()
    checks = []
    for r in range(len(s.bob)):
        prob = outcome_probability(s, r)
        if prob == 0:
            continue
        state = collapsed_ac_state(s, r)
        lam = lambda_decomposition(s, r)
        local = is_local(state, limit=limit)
        value = chsh(state) if state.signature == CHSH_SIGNATURE else None
        checks.append(OutcomeCheck(r, prob, lam.reconstruct() == state, local.local, len(lam.terms), value))
    return SwapReport(tuple(checks))


# --- transformations --------------------------------------------------------

@dataclass(frozen=True)
class Transformation:
    """Linear map ``P'(a'|x') = sum T(a'|x', a|x) P(a|x)``.

    ``matrix[i][j]`` pairs output index ``i`` with input index ``j``, both in
    canonical order.
    """

    input_signature: Signature
    output_signature: Signature
    matrix: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        sin = as_signature(self.input_signature)
        sout = as_signature(self.output_signature)
        rows = tuple(tuple(Fraction(v) for v in row) for row in self.matrix)
        if len(rows) != size(sout) or any(len(row) != size(sin) for row in rows):
            raise ShapeError(f"transformation matrix must be {size(sout)} x {size(sin)}")
        object.__setattr__(self, "input_signature", sin)
        object.__setattr__(self, "output_signature", sout)
        object.__setattr__(self, "matrix", rows)

    @classmethod
    def from_function(cls, sin, sout, fn) -> "Transformation":
        sin, sout = as_signature(sin), as_signature(sout)
        return cls(sin, sout, tuple(tuple(Fraction(fn(a2, x2, a, x)) for a, x in index_pairs(sin))
                                    for a2, x2 in index_pairs(sout)))

    @classmethod
    def identity(cls, signature) -> "Transformation":
        sig = as_signature(signature)
        return cls.from_function(sig, sig, lambda a2, x2, a, x: int(a2 == a and x2 == x))

    def __call__(self, p: BoxTensor) -> BoxTensor:
        if p.signature != self.input_signature:
            raise SignatureMismatch(f"transformation expects {self.input_signature}, got {p.signature}")
        return BoxTensor(self.output_signature, tuple(
            sum((t * v for t, v in zip(row, p.entries) if t and v), Fraction(0)) for row in self.matrix))

    def to_data(self) -> dict:
        return {
            "signature": [list(s) for s in self.input_signature],
            "output_signature": [list(s) for s in self.output_signature],
            "matrix": [[format_rational(v) for v in row] for row in self.matrix],
        }

    @classmethod
    def from_data(cls, data) -> "Transformation":
        try:
            sin = as_signature(data["signature"])
            sout = as_signature(data.get("output_signature", data["signature"]))
            rows = tuple(tuple(parse_rational(v) for v in row) for row in data["matrix"])
        except (KeyError, TypeError) as exc:
            raise ShapeError(f"transformation object needs 'signature' and 'matrix': {exc}") from exc
        return cls(sin, sout, rows)


def validate_transformation(t: Transformation, signature=None, *, limit: int = DEFAULT_SIZE_GUARD) -> bool:
    """Whether ``t`` maps every valid state to a valid state.

    Checking the no-signalling vertices suffices by linearity and convexity.
    """
    sig = t.input_signature if signature is None else as_signature(signature)
    if sig != t.input_signature:
        return False
    return all(validate_state(t(v)).valid for v in nosig_vertices(sig, limit=limit))


def apply_transformation(t: Transformation, p: BoxTensor, subsystem: int = 0, *, check: bool = True) -> BoxTensor:
    """Act with ``t`` on one subsystem of a joint state, leaving the rest untouched."""
    sig = p.signature
    if not 0 <= subsystem < len(sig):
        raise ShapeError(f"subsystem {subsystem} out of range")
    if t.input_signature != (sig[subsystem],):
        raise SignatureMismatch(
            f"transformation acts on {t.input_signature}, subsystem {subsystem} has {(sig[subsystem],)}"
        )
    if check and not validate_transformation(t):
        raise InvalidTransformationError("transformation does not map valid states to valid states")
    (out_sub,) = t.output_signature
    new_sig = sig[:subsystem] + (out_sub,) + sig[subsystem + 1:]
    in_pairs = index_pairs(t.input_signature)
    out_pos = index_positions(t.output_signature)

    def entry(a, x):
        row = t.matrix[out_pos[(a[subsystem],), (x[subsystem],)]]
        total = Fraction(0)
        for coeff, ((ai,), (xi,)) in zip(row, in_pairs):
            if coeff:
                v = p[a[:subsystem] + (ai,) + a[subsystem + 1:], x[:subsystem] + (xi,) + x[subsystem + 1:]]
                if v:
                    total += coeff * v
        return total

    out = BoxTensor.from_function(new_sig, entry)
    if check:
        report = validate_state(out)
        if not report.valid:
            raise InvalidTransformationError("transformed joint state is invalid: " + "; ".join(report.failures))
    return out
