"""Exact-rational tensors indexed by joint outcomes and joint settings.

A *signature* lists, for every subsystem, the outcome count of each of its
fiducial measurements, e.g. ``((2, 2), (2, 2))`` for two parties with two
binary fiducials each. Outcome counts may differ between fiducials.

Entries are stored densely in canonical order: the setting vector ``x`` runs
lexicographically (first subsystem slowest) and, inside each setting block,
the outcome vector ``a`` runs lexicographically.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .errors import ShapeError, SignatureMismatch

Signature = tuple[tuple[int, ...], ...]
Index = tuple[tuple[int, ...], tuple[int, ...]]

_RATIONAL_RE = re.compile(r"-?\d+(/\d+)?")


def parse_rational(text: str | int | Fraction) -> Fraction:
    """Parse ``"p/q"`` or ``"p"`` (decimal integers) into a Fraction."""
    if isinstance(text, bool):
        raise ValueError(f"not a rational: {text!r}")
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if not isinstance(text, str) or not _RATIONAL_RE.fullmatch(text):
        raise ValueError(f"not a rational string: {text!r}")
    try:
        return Fraction(text)
    except ZeroDivisionError:
        raise ValueError(f"zero denominator: {text!r}") from None


def format_rational(value: Fraction) -> str:
    return str(Fraction(value))


def as_signature(spec: Iterable[Iterable[int]], *, allow_empty: bool = False) -> Signature:
    """Normalise and validate a signature given as nested sequences."""
    try:
        sig = tuple(tuple(int(k) for k in sub) for sub in spec)
    except TypeError as exc:
        raise ShapeError(f"malformed signature: {spec!r}") from exc
    if not sig and not allow_empty:
        raise ShapeError("signature must list at least one subsystem")
    for n, sub in enumerate(sig):
        if not sub:
            raise ShapeError(f"subsystem {n} has no fiducial measurements")
        if any(k < 1 for k in sub):
            raise ShapeError(f"subsystem {n} has an outcome count < 1: {sub}")
    return sig


@lru_cache(maxsize=None)
def settings(sig: Signature) -> tuple[tuple[int, ...], ...]:
    """All joint setting vectors in canonical order."""
    return tuple(itertools.product(*(range(len(sub)) for sub in sig)))


@lru_cache(maxsize=None)
def outcomes(sig: Signature, x: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    """All joint outcome vectors compatible with setting vector ``x``."""
    return tuple(itertools.product(*(range(sub[xi]) for sub, xi in zip(sig, x))))


@lru_cache(maxsize=None)
def index_pairs(sig: Signature) -> tuple[Index, ...]:
    """Every valid ``(a, x)`` pair, in canonical storage order."""
    return tuple((a, x) for x in settings(sig) for a in outcomes(sig, x))


@lru_cache(maxsize=None)
def index_positions(sig: Signature) -> dict[Index, int]:
    return {pair: i for i, pair in enumerate(index_pairs(sig))}


def size(sig: Signature) -> int:
    return len(index_pairs(sig))


@dataclass(frozen=True)
class BoxTensor:
    """Immutable dense rational array over the index set of a signature.

    States, effects and total measurement arrays are all BoxTensors; which
    constraints apply is decided by the validators elsewhere.
    """

    signature: Signature
    entries: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        sig = as_signature(self.signature, allow_empty=True)
        object.__setattr__(self, "signature", sig)
        entries = tuple(Fraction(v) for v in self.entries)
        if len(entries) != size(sig):
            raise ShapeError(
                f"signature {sig} needs {size(sig)} entries, got {len(entries)}"
            )
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_function(cls, sig: Signature, fn: Callable[[tuple, tuple], object]) -> "BoxTensor":
        sig = as_signature(sig, allow_empty=True)
        return cls(sig, tuple(Fraction(fn(a, x)) for a, x in index_pairs(sig)))

    @classmethod
    def zeros(cls, sig: Signature) -> "BoxTensor":
        sig = as_signature(sig, allow_empty=True)
        return cls(sig, (Fraction(0),) * size(sig))

    @classmethod
    def unit(cls, sig: Signature, a: Sequence[int], x: Sequence[int]) -> "BoxTensor":
        """Tensor with a single entry 1 at ``(a|x)``."""
        sig = as_signature(sig, allow_empty=True)
        pos = _position(sig, tuple(a), tuple(x))
        entries = [Fraction(0)] * size(sig)
        entries[pos] = Fraction(1)
        return cls(sig, tuple(entries))

    @property
    def n_subsystems(self) -> int:
        return len(self.signature)

    def __getitem__(self, key: Index) -> Fraction:
        a, x = key
        return self.entries[_position(self.signature, tuple(a), tuple(x))]

    def items(self) -> Iterator[tuple[Index, Fraction]]:
        return zip(index_pairs(self.signature), self.entries)

    def support(self) -> list[Index]:
        return [idx for idx, v in self.items() if v]

    def is_zero(self) -> bool:
        return not any(self.entries)

    def _check_same(self, other: "BoxTensor") -> None:
        if not isinstance(other, BoxTensor):
            raise TypeError(f"expected BoxTensor, got {type(other).__name__}")
        if other.signature != self.signature:
            raise SignatureMismatch(f"{self.signature} != {other.signature}")

    def __add__(self, other: "BoxTensor") -> "BoxTensor":
        self._check_same(other)
        return BoxTensor(self.signature, tuple(u + v for u, v in zip(self.entries, other.entries)))

    def __sub__(self, other: "BoxTensor") -> "BoxTensor":
        self._check_same(other)
        return BoxTensor(self.signature, tuple(u - v for u, v in zip(self.entries, other.entries)))

    def __neg__(self) -> "BoxTensor":
        return BoxTensor(self.signature, tuple(-v for v in self.entries))

    def scale(self, factor) -> "BoxTensor":
        factor = Fraction(factor)
        return BoxTensor(self.signature, tuple(factor * v for v in self.entries))

    def __mul__(self, factor) -> "BoxTensor":
        if isinstance(factor, BoxTensor):
            return NotImplemented
        return self.scale(factor)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        body = ", ".join(format_rational(v) for v in self.entries)
        return f"BoxTensor({list(map(list, self.signature))}, [{body}])"


def _position(sig: Signature, a: tuple, x: tuple) -> int:
    try:
        return index_positions(sig)[(a, x)]
    except KeyError:
        raise ShapeError(f"index (a={a} | x={x}) is not valid for signature {sig}") from None


def make_tensor(signature, entries: Mapping[Index, object]) -> BoxTensor:
    """Build a tensor from a mapping ``(a, x) -> value`` covering the index set."""
    sig = as_signature(signature)
    positions = index_positions(sig)
    values: list[Fraction | None] = [None] * len(positions)
    for (a, x), v in entries.items():
        key = (tuple(a), tuple(x))
        if key not in positions:
            raise ShapeError(f"index (a={key[0]} | x={key[1]}) is outside signature {sig}")
        values[positions[key]] = Fraction(v)
    missing = [index_pairs(sig)[i] for i, v in enumerate(values) if v is None]
    if missing:
        raise ShapeError(f"{len(missing)} entries missing, first is {missing[0]}")
    return BoxTensor(sig, tuple(values))


def dot(r: BoxTensor, p: BoxTensor) -> Fraction:
    """Exact pairing ``sum_{a,x} r(a|x) p(a|x)``."""
    r._check_same(p)
    return sum((u * v for u, v in zip(r.entries, p.entries) if u and v), Fraction(0))


def tensor_product(t1: BoxTensor, t2: BoxTensor) -> BoxTensor:
    n1 = t1.n_subsystems
    sig = t1.signature + t2.signature

    def entry(a, x):
        return t1[a[:n1], x[:n1]] * t2[a[n1:], x[n1:]]

    return BoxTensor.from_function(sig, entry)


def tensor_product_all(tensors: Sequence[BoxTensor]) -> BoxTensor:
    if not tensors:
        raise ValueError("need at least one tensor")
    out = tensors[0]
    for t in tensors[1:]:
        out = tensor_product(out, t)
    return out


def marginal(p: BoxTensor, subsystem: int, setting: int) -> BoxTensor:
    """Sum out the outcomes of one subsystem with its setting held fixed.

    Marginalising the last remaining subsystem yields a tensor over the
    empty signature, with the single entry at ``((), ())``.
    """
    sig = p.signature
    if not 0 <= subsystem < len(sig):
        raise ShapeError(f"subsystem {subsystem} out of range for {len(sig)} subsystems")
    if not 0 <= setting < len(sig[subsystem]):
        raise ShapeError(f"setting {setting} out of range for subsystem {subsystem}")
    rest = sig[:subsystem] + sig[subsystem + 1:]
    k = sig[subsystem][setting]

    def entry(a, x):
        xf = x[:subsystem] + (setting,) + x[subsystem:]
        return sum(p[a[:subsystem] + (o,) + a[subsystem:], xf] for o in range(k))

    return BoxTensor.from_function(rest, entry)


def reduce_to(p: BoxTensor, keep: Sequence[int]) -> BoxTensor:
    """Marginal onto the subsystems ``keep`` (in their original order).

    Discarded subsystems are summed at fiducial 0, which is the same as
    any other choice for no-signalling tensors.
    """
    keep = sorted(set(keep))
    out = p
    for n in reversed(range(p.n_subsystems)):
        if n not in keep:
            out = marginal(out, n, 0)
    return out


RelabelSpec = Sequence[tuple[Sequence[int], Sequence[Sequence[int]]] | None]


def relabel(t: BoxTensor, perms: RelabelSpec) -> BoxTensor:
    """Locally relabel fiducials and outcomes.

    ``perms[n]`` is ``None`` (identity) or ``(fiducial_perm, outcome_perms)``:
    old fiducial ``i`` of subsystem ``n`` becomes ``fiducial_perm[i]`` and its
    old outcome ``o`` becomes ``outcome_perms[i][o]``.
    """
    sig = t.signature
    if len(perms) != len(sig):
        raise ShapeError(f"need {len(sig)} per-subsystem permutations, got {len(perms)}")
    fid_maps: list[tuple[int, ...]] = []
    out_maps: list[tuple[tuple[int, ...], ...]] = []
    for n, (sub, spec) in enumerate(zip(sig, perms)):
        if spec is None:
            fid_maps.append(tuple(range(len(sub))))
            out_maps.append(tuple(tuple(range(k)) for k in sub))
            continue
        fperm, operms = spec
        fperm = tuple(fperm)
        operms = tuple(tuple(o) for o in operms)
        if sorted(fperm) != list(range(len(sub))):
            raise ShapeError(f"subsystem {n}: {fperm} is not a permutation of its fiducials")
        if len(operms) != len(sub):
            raise ShapeError(f"subsystem {n}: need one outcome permutation per fiducial")
        for i, (k, op) in enumerate(zip(sub, operms)):
            if sorted(op) != list(range(k)):
                raise ShapeError(f"subsystem {n}, fiducial {i}: {op} is not a permutation of range({k})")
        fid_maps.append(fperm)
        out_maps.append(operms)

    new_sig = []
    for sub, fperm in zip(sig, fid_maps):
        counts = [0] * len(sub)
        for i, k in enumerate(sub):
            counts[fperm[i]] = k
        new_sig.append(tuple(counts))
    new_sig = tuple(new_sig)

    # inverse maps: new index -> old index
    inv_fid = [{new: old for old, new in enumerate(f)} for f in fid_maps]
    inv_out = [[{new: old for old, new in enumerate(op)} for op in ops] for ops in out_maps]

    def entry(a, x):
        xo = tuple(inv_fid[n][xn] for n, xn in enumerate(x))
        ao = tuple(inv_out[n][xo[n]][an] for n, an in enumerate(a))
        return t[ao, xo]

    return BoxTensor.from_function(new_sig, entry)


def reorder(t: BoxTensor, order: Sequence[int]) -> BoxTensor:
    """Permute subsystems: new subsystem ``j`` is old subsystem ``order[j]``."""
    order = tuple(order)
    if sorted(order) != list(range(t.n_subsystems)):
        raise ShapeError(f"{order} is not a permutation of the subsystems")
    new_sig = tuple(t.signature[j] for j in order)
    inv = [0] * len(order)
    for j, old in enumerate(order):
        inv[old] = j

    def entry(a, x):
        return t[tuple(a[inv[n]] for n in range(len(order))), tuple(x[inv[n]] for n in range(len(order)))]

    return BoxTensor.from_function(new_sig, entry)


# --- JSON-compatible plain data --------------------------------------------

def tensor_to_data(t: BoxTensor) -> dict:
    return {
        "signature": [list(sub) for sub in t.signature],
        "entries": [format_rational(v) for v in t.entries],
    }


def tensor_from_data(data: Mapping) -> BoxTensor:
    try:
        sig = as_signature(data["signature"])
        raw = data["entries"]
    except (KeyError, TypeError) as exc:
        raise ShapeError(f"tensor object needs 'signature' and 'entries': {exc}") from exc
    if not isinstance(raw, list):
        raise ShapeError("'entries' must be a list of rational strings")
    return BoxTensor(sig, tuple(parse_rational(v) for v in raw))
