"""Box-world states: validation, canonical states, polytope vertices, CHSH."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from . import exact
from .errors import ConditioningError, InvalidStateError, ShapeError, SignatureMismatch, SizeGuardError
from .tensor import (
    BoxTensor,
    Signature,
    as_signature,
    index_pairs,
    index_positions,
    marginal,
    outcomes,
    settings,
    size,
    tensor_product_all,
)

DEFAULT_SIZE_GUARD = 1024

CHSH_SIGNATURE: Signature = ((2, 2), (2, 2))


@dataclass(frozen=True)
class StateReport:
    positivity: bool
    normalisation: bool
    no_signalling: bool
    normalised_every_setting: bool
    failures: tuple[str, ...] = ()

    @property
    def valid(self) -> bool:
        return self.positivity and self.normalisation and self.no_signalling

    def __bool__(self) -> bool:
        return self.valid

    def to_data(self) -> dict:
        return {
            "valid": self.valid,
            "positivity": self.positivity,
            "normalisation": self.normalisation,
            "no_signalling": self.no_signalling,
            "normalised_every_setting": self.normalised_every_setting,
            "failures": list(self.failures),
        }


def validate_state(t: BoxTensor) -> StateReport:
    """Check positivity, normalisation at ``x = 0`` and no-signalling."""
    sig = t.signature
    failures: list[str] = []

    negative = [(a, x) for (a, x), v in t.items() if v < 0]
    if negative:
        a, x = negative[0]
        failures.append(f"positivity: P({a}|{x}) = {t[a, x]} < 0 ({len(negative)} negative entries)")

    x0 = (0,) * len(sig)
    norm0 = sum(t[a, x0] for a in outcomes(sig, x0))
    if norm0 != 1:
        failures.append(f"normalisation: sum_a P(a|0) = {norm0}")

    nosig = True
    for n in range(len(sig)):
        ref = marginal(t, n, 0)
        for s in range(1, len(sig[n])):
            other = marginal(t, n, s)
            if other != ref:
                nosig = False
                bad = next(idx for idx, (u, v) in zip(index_pairs(ref.signature),
                                                       zip(ref.entries, other.entries)) if u != v)
                failures.append(
                    f"no-signalling: subsystem {n} marginal differs between settings 0 and {s} at {bad}"
                )
                break

    every = all(sum(t[a, x] for a in outcomes(sig, x)) == 1 for x in settings(sig))
    report = StateReport(not negative, norm0 == 1, nosig, every, tuple(failures))
    if report.valid:
        assert every, "no-signalling plus normalisation at x=0 must normalise every setting"
    return report


def require_state(t: BoxTensor) -> BoxTensor:
    report = validate_state(t)
    if not report.valid:
        raise InvalidStateError("; ".join(report.failures))
    return t


def pr_box() -> BoxTensor:
    """The PR box: ``1/2`` wherever ``a1 xor a2 == x1 and x2``."""
    half = Fraction(1, 2)
    return BoxTensor.from_function(
        CHSH_SIGNATURE, lambda a, x: half if (a[0] ^ a[1]) == (x[0] & x[1]) else 0
    )


def maximally_mixed(signature) -> BoxTensor:
    sig = as_signature(signature)

    def entry(a, x):
        count = 1
        for sub, xi in zip(sig, x):
            count *= sub[xi]
        return Fraction(1, count)

    return BoxTensor.from_function(sig, entry)


def deterministic_single(sub: Sequence[int], assignment: Sequence[int]) -> BoxTensor:
    """Single-system state with ``P(a|x) = 1`` iff ``a == assignment[x]``."""
    return BoxTensor.from_function((tuple(sub),), lambda a, x: int(a[0] == assignment[x[0]]))


def mix(states: Sequence[BoxTensor], weights: Sequence) -> BoxTensor:
    """Convex combination of states."""
    if len(states) != len(weights) or not states:
        raise ValueError("need one weight per state and at least one state")
    ws = [Fraction(w) for w in weights]
    if any(w < 0 for w in ws):
        raise ValueError("mixing weights must be non-negative")
    if sum(ws) != 1:
        raise ValueError(f"mixing weights sum to {sum(ws)}, not 1")
    sig = states[0].signature
    if any(s.signature != sig for s in states):
        raise SignatureMismatch("all mixed states must share a signature")
    entries = [Fraction(0)] * size(sig)
    for s, w in zip(states, ws):
        if w:
            for i, v in enumerate(s.entries):
                if v:
                    entries[i] += w * v
    return BoxTensor(sig, tuple(entries))


# --- vertex sets ------------------------------------------------------------

DETERMINISTIC = "deterministic"
NONLOCAL = "nonlocal"


@dataclass(frozen=True)
class VertexSet:
    signature: Signature
    vertices: tuple[BoxTensor, ...]
    tags: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def with_tag(self, tag: str) -> list[BoxTensor]:
        return [v for v, t in zip(self.vertices, self.tags) if t == tag]


def _guard(sig: Signature, limit: int) -> None:
    if size(sig) > limit:
        raise SizeGuardError(f"index set of {sig} has {size(sig)} entries, limit is {limit}")


def deterministic_vertices(signature, *, limit: int = DEFAULT_SIZE_GUARD) -> VertexSet:
    """Products of single-system deterministic states ``P(a|x) = delta(a, a_x)``."""
    sig = as_signature(signature)
    _guard(sig, limit)
    per_system = [
        [deterministic_single(sub, assign) for assign in itertools.product(*(range(k) for k in sub))]
        for sub in sig
    ]
    verts = tuple(tensor_product_all(list(combo)) for combo in itertools.product(*per_system))
    return VertexSet(sig, verts, (DETERMINISTIC,) * len(verts))


@lru_cache(maxsize=None)
def nosig_equations(sig: Signature) -> tuple[tuple[tuple[Fraction, ...], ...], tuple[Fraction, ...]]:
    """Rows and right-hand side of normalisation plus no-signalling equalities."""
    pos = index_positions(sig)
    n_entries = len(pos)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []

    x0 = (0,) * len(sig)
    row = [Fraction(0)] * n_entries
    for a in outcomes(sig, x0):
        row[pos[a, x0]] = Fraction(1)
    rows.append(row)
    rhs.append(Fraction(1))

    for n, sub in enumerate(sig):
        others = sig[:n] + sig[n + 1:]
        for xr in settings(others):
            for ar in outcomes(others, xr):
                for s in range(1, len(sub)):
                    row = [Fraction(0)] * n_entries
                    for setting, sgn in ((s, 1), (0, -1)):
                        x = xr[:n] + (setting,) + xr[n:]
                        for o in range(sub[setting]):
                            a = ar[:n] + (o,) + ar[n:]
                            row[pos[a, x]] += sgn
                    rows.append(row)
                    rhs.append(Fraction(0))
    return tuple(map(tuple, rows)), tuple(rhs)


@lru_cache(maxsize=None)
def affine_directions(sig: Signature) -> tuple[BoxTensor, ...]:
    """Basis of the direction space of the affine hull of the state polytope.

    The maximally mixed state has every entry positive, so positivity never
    cuts the dimension and the hull is the solution set of the equalities.
    """
    rows, _ = nosig_equations(sig)
    return tuple(BoxTensor(sig, tuple(v)) for v in exact.kernel_basis(rows, size(sig)))


def nosig_vertices(signature, *, limit: int = DEFAULT_SIZE_GUARD) -> VertexSet:
    """All extreme points of the no-signalling polytope, sorted canonically.

    Works in coordinates ``P = P0 + sum_k z_k D_k`` over the affine hull,
    homogenised to a cone in ``(z, t)`` and enumerated by double description.
    """
    sig = as_signature(signature)
    _guard(sig, limit)
    p0 = maximally_mixed(sig)
    dirs = affine_directions(sig)
    d = len(dirs)
    # positivity of each entry: sum_k z_k D_k[i] + t P0[i] >= 0, plus t >= 0
    cons = [[D.entries[i] for D in dirs] + [p0.entries[i]] for i in range(size(sig))]
    cons.append([Fraction(0)] * d + [Fraction(1)])
    rays = exact.extreme_rays(cons, d + 1)
    verts = []
    for ray in rays:
        t = ray[-1]
        if t <= 0:
            raise RuntimeError("unbounded direction in a bounded polytope")
        entries = [p0.entries[i] + sum((Fraction(ray[k], t) * dirs[k].entries[i] for k in range(d)
                                         if ray[k]), Fraction(0))
                   for i in range(size(sig))]
        verts.append(BoxTensor(sig, tuple(entries)))
    verts = sorted(set(verts), key=lambda v: v.entries, reverse=True)
    tags = tuple(DETERMINISTIC if all(e in (0, 1) for e in v.entries) else NONLOCAL for v in verts)
    return VertexSet(sig, tuple(verts), tags)


def chsh(p: BoxTensor) -> Fraction:
    """``E(0,0) + E(0,1) + E(1,0) - E(1,1)`` with ``E = sum (-1)^(a xor b) P(ab|xy)``."""
    if p.signature != CHSH_SIGNATURE:
        raise SignatureMismatch(f"CHSH needs signature {CHSH_SIGNATURE}, got {p.signature}")

    def corr(x, y):
        return sum((-1) ** (a ^ b) * p[(a, b), (x, y)] for a in (0, 1) for b in (0, 1))

    return corr(0, 0) + corr(0, 1) + corr(1, 0) - corr(1, 1)


def collapse(p: BoxTensor, subsystems: Sequence[int], settings_: Sequence[int],
             outcomes_: Sequence[int]) -> BoxTensor:
    """Conditional state of the other subsystems given outcomes ``b`` of settings ``y``.

    ``P_by(a|x) = P(a b|x y) / sum_a P(a b|x y)``.
    """
    sig = p.signature
    subs = list(subsystems)
    if len(set(subs)) != len(subs) or not subs:
        raise ShapeError("conditioning subsystems must be distinct and non-empty")
    if len(settings_) != len(subs) or len(outcomes_) != len(subs):
        raise ShapeError("one setting and one outcome per conditioning subsystem")
    for n, y, b in zip(subs, settings_, outcomes_):
        if not 0 <= n < len(sig):
            raise ShapeError(f"subsystem {n} out of range")
        if not 0 <= y < len(sig[n]) or not 0 <= b < sig[n][y]:
            raise ShapeError(f"setting {y} / outcome {b} out of range on subsystem {n}")
    if len(subs) == len(sig):
        raise ShapeError("cannot condition on every subsystem")
    fixed = dict(zip(subs, zip(settings_, outcomes_)))
    rest = [n for n in range(len(sig)) if n not in fixed]
    rest_sig = tuple(sig[n] for n in rest)

    def full(a_rest, x_rest):
        a, x = [0] * len(sig), [0] * len(sig)
        for n, (y, b) in fixed.items():
            a[n], x[n] = b, y
        for n, an, xn in zip(rest, a_rest, x_rest):
            a[n], x[n] = an, xn
        return tuple(a), tuple(x)

    denom = {}
    for xr in settings(rest_sig):
        total = sum(p[full(ar, xr)] for ar in outcomes(rest_sig, xr))
        if total == 0:
            raise ConditioningError(
                f"outcomes {tuple(outcomes_)} of settings {tuple(settings_)} on subsystems "
                f"{tuple(subs)} have probability zero"
            )
        denom[xr] = total
    return BoxTensor.from_function(rest_sig, lambda a, x: p[full(a, x)] / denom[x])


@dataclass(frozen=True)
class LocalityResult:
    """Outcome of :func:`is_local`.

    ``local`` with ``weights`` over ``vertices`` reconstructing the state,
    or not local with a ``functional`` whose value on the state exceeds
    ``bound`` >= its value on every deterministic vertex.
    """

    local: bool
    vertices: VertexSet
    weights: tuple[Fraction, ...] | None = None
    functional: BoxTensor | None = None
    bound: Fraction | None = None

    def __bool__(self) -> bool:
        return self.local

    def to_data(self) -> dict:
        from .tensor import format_rational, tensor_to_data

        if self.local:
            return {
                "local": True,
                "weights": [format_rational(w) for w in self.weights],
                "vertices": [tensor_to_data(v)["entries"] for v in self.vertices],
            }
        return {
            "local": False,
            "certificate": tensor_to_data(self.functional)["entries"],
            "bound": format_rational(self.bound),
        }


def is_local(p: BoxTensor, *, limit: int = DEFAULT_SIZE_GUARD) -> LocalityResult:
    """Exact membership of ``p`` in the hull of deterministic product vertices."""
    verts = deterministic_vertices(p.signature, limit=limit)
    n = size(p.signature)
    matrix = [[v.entries[i] for v in verts.vertices] for i in range(n)]
    res = exact.feasible(matrix, p.entries, convex=True, n_cols=len(verts))
    if res.feasible:
        weights = tuple(res.solution)
        recon = mix(list(verts.vertices), weights)
        assert recon == p
        return LocalityResult(True, verts, weights=weights)
    # witness y = (w, s): w.V + s >= 0 for all V, w.p + s < 0
    w, s = res.witness[:n], res.witness[n]
    functional = BoxTensor(p.signature, tuple(-v for v in w))
    return LocalityResult(False, verts, functional=functional, bound=Fraction(s))
