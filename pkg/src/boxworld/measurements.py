"""Effects, measurements, validity certificates and post-selection simulation.

Effects are taken in positive representation: every entry lies in [0, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InvalidMeasurementError, SignatureMismatch
from .states import affine_directions, maximally_mixed, nosig_vertices, require_state
from .tensor import (
    BoxTensor,
    Signature,
    as_signature,
    dot,
    format_rational,
    index_pairs,
    outcomes,
    parse_rational,
    settings,
)


@dataclass(frozen=True)
class Measurement:
    """An ordered list of effects; outcome ``r`` is ``effects[r]``.

    Duplicate effects are kept as distinct outcomes.
    """

    effects: tuple[BoxTensor, ...]

    def __post_init__(self) -> None:
        effects = tuple(self.effects)
        if not effects:
            raise InvalidMeasurementError("a measurement needs at least one effect")
        sig = effects[0].signature
        if any(e.signature != sig for e in effects):
            raise SignatureMismatch("all effects of a measurement must share a signature")
        object.__setattr__(self, "effects", effects)

    @property
    def signature(self) -> Signature:
        return self.effects[0].signature

    def __len__(self) -> int:
        return len(self.effects)

    def to_data(self) -> dict:
        return {
            "signature": [list(s) for s in self.signature],
            "effects": [[format_rational(v) for v in e.entries] for e in self.effects],
        }

    @classmethod
    def from_data(cls, data) -> "Measurement":
        try:
            sig = as_signature(data["signature"])
            raw = data["effects"]
        except (KeyError, TypeError) as exc:
            raise InvalidMeasurementError(f"measurement object needs 'signature' and 'effects': {exc}") from exc
        return cls(tuple(BoxTensor(sig, tuple(parse_rational(v) for v in e)) for e in raw))


@dataclass(frozen=True)
class TotalArray:
    """A total measurement array, possibly subnormalised by ``weight``."""

    tensor: BoxTensor
    weight: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        object.__setattr__(self, "weight", Fraction(self.weight))

    @property
    def signature(self) -> Signature:
        return self.tensor.signature


def total_array(m: Measurement) -> TotalArray:
    total = m.effects[0]
    for e in m.effects[1:]:
        total = total + e
    return TotalArray(total, Fraction(1))


def affine_certificate(signature) -> tuple[BoxTensor, ...]:
    """Basis of the span of all differences ``P - P'`` of valid states."""
    return affine_directions(as_signature(signature))


@dataclass(frozen=True)
class MeasurementReport:
    valid: bool
    diagnostics: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.valid

    def to_data(self) -> dict:
        return {"valid": self.valid, "diagnostics": list(self.diagnostics)}


def _unit_interval_failures(m: Measurement) -> list[str]:
    out = []
    for r, e in enumerate(m.effects):
        bad = [(idx, v) for idx, v in e.items() if not 0 <= v <= 1]
        if bad:
            (a, x), v = bad[0]
            out.append(f"effect {r}: R({a}|{x}) = {v} outside [0, 1]")
    return out


def validate_measurement(m: Measurement) -> MeasurementReport:
    """``True`` iff effects lie in [0, 1] and ``M . P = 1`` on the whole state space.

    The second condition is decided without vertex enumeration: ``M`` must
    give 1 on the maximally mixed state and annihilate the affine certificate.
    """
    diagnostics = _unit_interval_failures(m)
    M = total_array(m).tensor
    mixed_value = dot(M, maximally_mixed(m.signature))
    if mixed_value != 1:
        diagnostics.append(f"M . (maximally mixed) = {mixed_value}, expected 1")
    for k, d in enumerate(affine_certificate(m.signature)):
        value = dot(M, d)
        if value:
            diagnostics.append(f"M . d_{k} = {value} for certificate direction {k}, expected 0")
            break
    return MeasurementReport(not diagnostics, tuple(diagnostics))


def require_measurement(m: Measurement) -> Measurement:
    report = validate_measurement(m)
    if not report.valid:
        raise InvalidMeasurementError("; ".join(report.diagnostics))
    return m


def effects_equivalent(r1: BoxTensor, r2: BoxTensor, *, method: str = "certificate") -> bool:
    """Whether ``r1 . P == r2 . P`` for every valid state ``P``.

    ``method="certificate"`` uses the affine certificate; ``method="vertices"``
    compares values on every no-signalling vertex.
    """
    if r1.signature != r2.signature:
        raise SignatureMismatch(f"{r1.signature} != {r2.signature}")
    diff = r1 - r2
    if method == "certificate":
        if dot(diff, maximally_mixed(r1.signature)):
            return False
        return all(dot(diff, d) == 0 for d in affine_certificate(r1.signature))
    if method == "vertices":
        return all(dot(diff, v) == 0 for v in nosig_vertices(r1.signature))
    raise ValueError(f"unknown method {method!r}")


def decompose_separable_effect(r: BoxTensor) -> list[tuple[Fraction, tuple[BoxTensor, ...]]]:
    """Write a positive effect as a sum of product effects.

    One term per nonzero entry ``r(a|x)``: coefficient ``r(a|x)`` times the
    product of single-system unit effects at ``(a_n|x_n)``.
    """
    if any(not 0 <= v <= 1 for v in r.entries):
        raise InvalidMeasurementError("effect entries must lie in [0, 1]")
    terms = []
    for (a, x), v in r.items():
        if v:
            factors = tuple(BoxTensor.unit((sub,), (an,), (xn,))
                            for sub, an, xn in zip(r.signature, a, x))
            terms.append((v, factors))
    return terms


def outcome_distribution(m: Measurement, p: BoxTensor) -> list[Fraction]:
    """Exact ``Pr(r) = R_r . P`` for a validated measurement and state."""
    require_measurement(m)
    require_state(p)
    if m.signature != p.signature:
        raise SignatureMismatch(f"measurement {m.signature} vs state {p.signature}")
    probs = [dot(e, p) for e in m.effects]
    assert sum(probs) == 1
    return probs


# --- post-selection simulation ---------------------------------------------

_TWO64 = 1 << 64


def postselect_conditional(m: Measurement, p: BoxTensor) -> tuple[list[Fraction], Fraction]:
    """Exact ``Pr(r | success)`` and ``Pr(success)`` of the post-selection protocol."""
    M = total_array(m).tensor
    top = max(M.entries)
    if top <= 0:
        raise InvalidMeasurementError("total array is zero")
    settings_ = settings(m.signature)
    q = Fraction(1, len(settings_))
    joint = [sum((q * p[idx] * e[idx] / top for idx in index_pairs(m.signature) if e[idx]), Fraction(0))
             for e in m.effects]
    success = sum(joint)
    if success == 0:
        return [Fraction(0)] * len(joint), success
    return [j / success for j in joint], success


@dataclass(frozen=True)
class SimulationReport:
    samples: int
    seed: int
    counts: tuple[int, ...]
    failures: int
    expected: tuple[Fraction, ...]
    success_probability: Fraction

    @property
    def successes(self) -> int:
        return self.samples - self.failures

    def frequencies(self) -> list[Fraction]:
        """Empirical ``Pr(r | success)``."""
        if not self.successes:
            return [Fraction(0)] * len(self.counts)
        return [Fraction(c, self.successes) for c in self.counts]

    def to_data(self) -> dict:
        return {
            "samples": self.samples,
            "seed": self.seed,
            "counts": list(self.counts),
            "failures": self.failures,
            "expected_conditional": [format_rational(v) for v in self.expected],
            "expected_success_probability": format_rational(self.success_probability),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_data(), sort_keys=True)


def _thresholds(probs: Sequence[Fraction]) -> list[int]:
    """Cumulative cut points on [0, 2^64) for sampling an index from ``probs``."""
    cuts, acc = [], Fraction(0)
    for pr in probs:
        acc += pr
        cuts.append((acc.numerator * _TWO64) // acc.denominator)
    return cuts


def _pick(word: int, cuts: Sequence[int]) -> int | None:
    for i, c in enumerate(cuts):
        if word < c:
            return i
    return None


def trial_words(seed: int, start: int, count: int) -> np.ndarray:
    """Random words for trials ``start .. start+count-1``, shape ``(count, 4)``.

    Trial ``i`` uses the Philox-4x64 block at counter ``i`` under key
    ``seed``, so the words depend only on ``(seed, i)``.
    """
    bitgen = np.random.Philox(key=seed, counter=start)
    return bitgen.random_raw(4 * count).reshape(count, 4)


def simulate_postselect(m: Measurement, p: BoxTensor, samples: int, seed: int) -> SimulationReport:
    """Monte-Carlo run of the fiducial-measurement-plus-post-selection protocol.

    Per trial: draw a joint setting uniformly, sample the joint outcome from
    ``p``, then announce ``r`` with probability ``R_r(a|x) / max M`` or fail.
    """
    require_measurement(m)
    require_state(p)
    if m.signature != p.signature:
        raise SignatureMismatch(f"measurement {m.signature} vs state {p.signature}")
    if samples < 0:
        raise ValueError("samples must be non-negative")
    if not 0 <= seed < _TWO64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    sig = m.signature
    M = total_array(m).tensor
    top = max(M.entries)
    if top <= 0:
        raise InvalidMeasurementError("total array is zero")

    xs = settings(sig)
    outcome_tables = []
    for x in xs:
        outs = outcomes(sig, x)
        cuts = _thresholds([p[a, x] for a in outs])
        announce = {a: _thresholds([e[a, x] / top for e in m.effects]) for a in outs}
        outcome_tables.append((x, outs, cuts, announce))

    counts = [0] * len(m.effects)
    failures = 0
    chunk = 1 << 14
    n_x = len(xs)
    for start in range(0, samples, chunk):
        words = trial_words(seed, start, min(chunk, samples - start)).tolist()
        for w_x, w_a, w_r, _ in words:
            x, outs, cuts, announce = outcome_tables[(w_x * n_x) >> 64]
            ai = _pick(w_a, cuts)
            assert ai is not None  # the last cut is exactly 2^64
            r = _pick(w_r, announce[outs[ai]])
            if r is None:
                failures += 1
            else:
                counts[r] += 1

    expected, success = postselect_conditional(m, p)
    return SimulationReport(samples, seed, tuple(counts), failures, tuple(expected), success)
