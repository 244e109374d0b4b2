"""Basic measurements (adaptive wirings of fiducial measurements) and decompositions.

A basic measurement is a tree: each internal node measures one fiducial on
one subsystem and branches on its outcome; each root-to-leaf path measures
every subsystem exactly once. Its total array is 1 exactly on the ``(a, x)``
pairs the tree can realise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence, Union

from . import exact
from .errors import GreedyBlocked, InvalidMeasurementError, ShapeError, SignatureMismatch, SizeGuardError
from .measurements import Measurement, TotalArray, _pick, _thresholds, total_array, trial_words
from .states import maximally_mixed
from .tensor import (
    BoxTensor,
    Signature,
    as_signature,
    dot,
    format_rational,
    index_pairs,
    index_positions,
    reduce_to,
    size,
)

DEFAULT_ARRAY_GUARD = 20_000


@dataclass(frozen=True)
class Leaf:
    label: int = 0


@dataclass(frozen=True)
class Node:
    subsystem: int
    fiducial: int
    children: tuple["Tree", ...]


Tree = Union[Node, Leaf]


@dataclass(frozen=True)
class BasicTree:
    signature: Signature
    root: Tree

    def __post_init__(self) -> None:
        sig = as_signature(self.signature)
        object.__setattr__(self, "signature", sig)
        self._check(self.root, frozenset())

    def _check(self, node: Tree, seen: frozenset) -> None:
        sig = self.signature
        if isinstance(node, Leaf):
            if len(seen) != len(sig):
                raise ShapeError(f"leaf reached with subsystems {sorted(seen)} measured, need all {len(sig)}")
            return
        k, i = node.subsystem, node.fiducial
        if not 0 <= k < len(sig) or k in seen:
            raise ShapeError(f"subsystem {k} is out of range or measured twice on a path")
        if not 0 <= i < len(sig[k]):
            raise ShapeError(f"fiducial {i} out of range for subsystem {k}")
        if len(node.children) != sig[k][i]:
            raise ShapeError(f"node ({k}, {i}) needs {sig[k][i]} children, has {len(node.children)}")
        for child in node.children:
            self._check(child, seen | {k})

    def walk(self, a: Sequence[int], x: Sequence[int]) -> Leaf | None:
        """The leaf reached when the tree meets ``(a|x)``, or None if unrealisable."""
        node = self.root
        while isinstance(node, Node):
            if x[node.subsystem] != node.fiducial:
                return None
            node = node.children[a[node.subsystem]]
        return node


def tree_total_array(t: BasicTree) -> TotalArray:
    return TotalArray(BoxTensor.from_function(t.signature, lambda a, x: int(t.walk(a, x) is not None)))


def tree_effects(t: BasicTree, outcome: Callable[[tuple[int, ...]], int] | None = None) -> Measurement:
    """0/1 effects of the tree; ``outcome(a)`` defaults to the leaf labels."""
    labels = {}
    for a, x in index_pairs(t.signature):
        leaf = t.walk(a, x)
        if leaf is not None:
            labels[a, x] = outcome(a) if outcome is not None else leaf.label
    if any(r < 0 for r in labels.values()):
        raise ValueError("outcome labels must be non-negative")
    n_out = max(labels.values(), default=0) + 1
    effects = [BoxTensor.from_function(t.signature, lambda a, x, r=r: int(labels.get((a, x)) == r))
               for r in range(n_out)]
    return Measurement(tuple(effects))


def enumerate_trees(signature) -> list[BasicTree]:
    """Every basic tree (unlabelled leaves). Grows very quickly with the signature."""
    sig = as_signature(signature)

    def build(remaining: frozenset) -> list[Tree]:
        if not remaining:
            return [Leaf()]
        out = []
        for k in sorted(remaining):
            rest = build(remaining - {k})
            for i, count in enumerate(sig[k]):
                for kids in itertools.product(rest, repeat=count):
                    out.append(Node(k, i, tuple(kids)))
        return out

    return [BasicTree(sig, root) for root in build(frozenset(range(len(sig))))]


def _count_bound(sig: Signature, subs: frozenset, memo: dict) -> int:
    if not subs:
        return 1
    if subs in memo:
        return memo[subs]
    total = 0
    for k in subs:
        inner = _count_bound(sig, subs - {k}, memo)
        total += sum(inner ** c for c in sig[k])
    memo[subs] = total
    return total


@lru_cache(maxsize=32)
def _basic_catalogue(sig: Signature) -> tuple[tuple[tuple[Fraction, ...], Tree], ...]:
    """Distinct basic arrays with one representative tree each."""

    @lru_cache(maxsize=None)
    def build(subs: tuple[int, ...]) -> dict:
        # arrays over the sub-signature of ``subs`` (global subsystem numbers in nodes)
        if not subs:
            return {(Fraction(1),): Leaf()}
        sub_sig = tuple(sig[n] for n in subs)
        pairs = index_pairs(sub_sig)
        found: dict = {}
        for pos_k, k in enumerate(subs):
            rest = subs[:pos_k] + subs[pos_k + 1:]
            rest_sig = tuple(sig[n] for n in rest)
            rest_pos = index_positions(rest_sig)
            children = list(build(rest).items())
            for i, count in enumerate(sig[k]):
                for combo in itertools.product(children, repeat=count):
                    entries = []
                    for a, x in pairs:
                        if x[pos_k] != i:
                            entries.append(Fraction(0))
                            continue
                        child_entries = combo[a[pos_k]][0]
                        key = (a[:pos_k] + a[pos_k + 1:], x[:pos_k] + x[pos_k + 1:])
                        entries.append(child_entries[rest_pos[key]])
                    entries = tuple(entries)
                    if entries not in found:
                        found[entries] = Node(k, i, tuple(c[1] for c in combo))
        return found

    found = build(tuple(range(len(sig))))
    return tuple(sorted(found.items(), key=lambda kv: kv[0], reverse=True))


def enumerate_basic(signature, *, limit: int = DEFAULT_ARRAY_GUARD) -> list[tuple[TotalArray, BasicTree]]:
    """Distinct basic arrays, canonically ordered, each with a representative tree."""
    sig = as_signature(signature)
    bound = _count_bound(sig, frozenset(range(len(sig))), {})
    if bound > limit:
        raise SizeGuardError(f"up to {bound} basic arrays for {sig}, limit is {limit}")
    return [(TotalArray(BoxTensor(sig, entries)), BasicTree(sig, tree))
            for entries, tree in _basic_catalogue(sig)]


def enumerate_basic_arrays(signature, *, limit: int = DEFAULT_ARRAY_GUARD) -> list[TotalArray]:
    return [arr for arr, _ in enumerate_basic(signature, limit=limit)]


# --- decompositions -------------------------------------------------------

@dataclass(frozen=True)
class DecompositionTerm:
    weight: Fraction
    array: BoxTensor
    tree: BasicTree | None = None


@dataclass(frozen=True)
class Decomposition:
    """``sum_i weight_i * array_i``, each array the total array of a basic tree."""

    signature: Signature
    terms: tuple[DecompositionTerm, ...]
    iterations: int = 0

    @property
    def weights(self) -> list[Fraction]:
        return [t.weight for t in self.terms]

    @property
    def total_weight(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def reconstruct(self) -> BoxTensor:
        out = BoxTensor.zeros(self.signature)
        for t in self.terms:
            out = out + t.array.scale(t.weight)
        return out

    def residual(self, m: TotalArray) -> BoxTensor:
        return m.tensor - self.reconstruct()

    def to_data(self) -> dict:
        return {
            "signature": [list(s) for s in self.signature],
            "weights": [format_rational(w) for w in self.weights],
            "arrays": [[format_rational(v) for v in t.array.entries] for t in self.terms],
        }


@dataclass(frozen=True)
class InfeasibilityCertificate:
    """Separating functional: ``c . B <= bound`` for every basic ``B``, ``c . M > bound * weight``."""

    functional: BoxTensor
    bound: Fraction
    weight: Fraction

    def verify(self, m: TotalArray, arrays: Sequence[TotalArray] | None = None) -> bool:
        if arrays is None:
            arrays = enumerate_basic_arrays(m.signature)
        if any(dot(self.functional, b.tensor) > self.bound for b in arrays):
            return False
        return dot(self.functional, m.tensor) > self.bound * m.weight

    def gap(self, m: TotalArray) -> Fraction:
        return dot(self.functional, m.tensor) - self.bound * m.weight

    def to_data(self) -> dict:
        return {
            "infeasible": True,
            "signature": [list(s) for s in self.functional.signature],
            "certificate": [format_rational(v) for v in self.functional.entries],
            "bound": format_rational(self.bound),
        }


def _leaves(n: int) -> tuple[Leaf, ...]:
    return tuple(Leaf() for _ in range(n))


def _greedy_step(sig: Signature, M: dict) -> tuple[Fraction, dict, Tree] | None:
    """Find a subtractable scaled basic array; returns (k, support indices, tree)."""
    if len(sig) == 1:
        (sub,) = sig
        for xs in range(len(sub)):
            keys = [((a,), (xs,)) for a in range(sub[xs])]
            if all(M[k] > 0 for k in keys):
                return min(M[k] for k in keys), keys, Node(0, xs, _leaves(sub[xs]))
        return None

    # case 1a (subsystem 0 first) is tried for every x* before case 1b
    for order in ((0, 1), (1, 0)):
        lead, follow = order
        for xs in range(len(sig[lead])):
            choice = []
            for a in range(sig[lead][xs]):
                y_a = None
                for y in range(len(sig[follow])):
                    keys = [_bip_key(order, a, b, xs, y) for b in range(sig[follow][y])]
                    if all(M[k] > 0 for k in keys):
                        y_a = (y, keys)
                        break
                if y_a is None:
                    break
                choice.append(y_a)
            else:
                keys = [k for _, ks in choice for k in ks]
                tree = Node(lead, xs, tuple(Node(follow, y, _leaves(sig[follow][y])) for y, _ in choice))
                return min(M[k] for k in keys), keys, tree
    return None


def _bip_key(order, a, b, xs, y):
    if order == (0, 1):
        return (a, b), (xs, y)
    return (b, a), (y, xs)


def greedy_decompose(m: TotalArray) -> Decomposition:
    """Constructive decomposition of a one- or two-party array into basic arrays.

    Repeatedly subtracts the smallest positive multiple of a basic array
    supported on strictly positive entries; every step zeros at least one
    more entry. Raises :class:`GreedyBlocked` if no such array exists,
    which for one or two subsystems means the input was not valid.
    """
    sig = m.signature
    if len(sig) > 2:
        raise ValueError(
            f"greedy_decompose handles 1 or 2 subsystems, got {len(sig)}; use lp_decompose instead"
        )
    if any(v < 0 for v in m.tensor.entries):
        raise InvalidMeasurementError("total array has negative entries")
    M = dict(m.tensor.items())
    terms = []
    limit = size(sig)
    iterations = 0
    while any(M.values()):
        if iterations >= limit:
            raise RuntimeError("greedy decomposition exceeded its iteration bound")
        step = _greedy_step(sig, M)
        if step is None:
            zeros = sum(1 for v in M.values() if v == 0)
            raise GreedyBlocked(
                f"no basic array fits under the remaining array ({zeros} zero entries); "
                "the input is not a valid subnormalised total measurement array"
            )
        k, keys, node = step
        for key in keys:
            M[key] -= k
        tree = BasicTree(sig, node)
        terms.append(DecompositionTerm(k, tree_total_array(tree).tensor, tree))
        iterations += 1
    d = Decomposition(sig, tuple(terms), iterations)
    if d.total_weight != m.weight:
        raise InvalidMeasurementError(
            f"array decomposes with total weight {d.total_weight}, not the claimed {m.weight}"
        )
    assert d.reconstruct() == m.tensor
    return d


def lp_decompose(m: TotalArray, *, limit: int = DEFAULT_ARRAY_GUARD) -> Decomposition | InfeasibilityCertificate:
    """Exact decision of ``sum q_i B_i = M, q >= 0, sum q = weight`` over all basic arrays."""
    catalogue = enumerate_basic(m.signature, limit=limit)
    n = size(m.signature)
    rows = [[arr.tensor.entries[j] for arr, _ in catalogue] for j in range(n)]
    rows.append([Fraction(1)] * len(catalogue))
    rhs = list(m.tensor.entries) + [m.weight]
    res = exact.feasible(rows, rhs, n_cols=len(catalogue))
    if res.feasible:
        terms = tuple(DecompositionTerm(q, arr.tensor, tree)
                      for q, (arr, tree) in zip(res.solution, catalogue) if q)
        d = Decomposition(m.signature, terms, res.iterations)
        assert d.reconstruct() == m.tensor and d.total_weight == m.weight
        return d
    w, s = res.witness[:n], res.witness[n]
    cert = InfeasibilityCertificate(BoxTensor(m.signature, tuple(-v for v in w)), Fraction(s), m.weight)
    if not cert.verify(m, [arr for arr, _ in catalogue]):
        raise RuntimeError("internal error: infeasibility certificate failed verification")
    return cert


# --- executing a decomposition ---------------------------------------------

class RandomizedProtocol:
    """Implements a measurement by picking a basic tree at random and post-processing.

    Term ``i`` is chosen with probability ``w_i``; its tree is run on the
    state; on realised ``(a, x)`` outcome ``r`` is announced with
    probability ``R_r(a|x) / M(a|x)``.
    """

    def __init__(self, m: Measurement, d: Decomposition):
        if m.signature != d.signature:
            raise SignatureMismatch(f"measurement {m.signature} vs decomposition {d.signature}")
        M = total_array(m).tensor
        if d.reconstruct() != M:
            raise InvalidMeasurementError("decomposition does not reproduce the measurement's total array")
        if d.total_weight != 1:
            raise InvalidMeasurementError(f"decomposition weights sum to {d.total_weight}, not 1")
        if any(t.tree is None for t in d.terms):
            raise ValueError("every decomposition term needs a tree to be executable")
        self.measurement = m
        self.decomposition = d
        self._total = M
        self._announce: dict = {}
        for t in d.terms:
            for (a, x), v in t.array.items():
                if v and (a, x) not in self._announce:
                    probs = [e[a, x] / M[a, x] for e in m.effects]
                    if any(pr > 1 or pr < 0 for pr in probs):
                        raise InvalidMeasurementError(f"R_r({a}|{x}) exceeds M({a}|{x})")
                    self._announce[a, x] = probs

    def announce_probabilities(self, a, x) -> list[Fraction]:
        return self._announce[tuple(a), tuple(x)]

    def distribution(self, p: BoxTensor) -> list[Fraction]:
        """Exact outcome distribution of the protocol on state ``p``."""
        out = [Fraction(0)] * len(self.measurement)
        for t in self.decomposition.terms:
            for (a, x), v in t.array.items():
                if v and p[a, x]:
                    for r, pr in enumerate(self._announce[a, x]):
                        out[r] += t.weight * p[a, x] * pr
        return out

    def run(self, p: BoxTensor, samples: int, seed: int) -> list[int]:
        """Outcome counts from ``samples`` executions; trial ``i`` depends only on ``(seed, i)``."""
        sig = p.signature
        if sig != self.measurement.signature:
            raise SignatureMismatch(f"state {sig} vs measurement {self.measurement.signature}")
        n = len(sig)
        stride = (n + 2 + 3) // 4
        term_cuts = _thresholds(self.decomposition.weights)
        marginals: dict = {}

        def cond_cuts(measured: tuple, k: int, fid: int) -> list[int]:
            key = (measured, k, fid)
            if key not in marginals:
                keep = sorted([s for s, _, _ in measured] + [k])
                red = reduce_to(p, keep)
                fixed = {s: (xs, as_) for s, xs, as_ in measured}
                probs = []
                for o in range(sig[k][fid]):
                    a = tuple(o if s == k else fixed[s][1] for s in keep)
                    x = tuple(fid if s == k else fixed[s][0] for s in keep)
                    probs.append(red[a, x])
                total = sum(probs)
                marginals[key] = _thresholds([pr / total for pr in probs])
            return marginals[key]

        counts = [0] * len(self.measurement)
        for i in range(samples):
            words = trial_words(seed, i * stride, stride).ravel().tolist()
            term = self.decomposition.terms[_pick(words[0], term_cuts)]
            node = term.tree.root
            measured: tuple = ()
            depth = 0
            while isinstance(node, Node):
                o = _pick(words[1 + depth], cond_cuts(measured, node.subsystem, node.fiducial))
                measured = tuple(sorted(measured + ((node.subsystem, node.fiducial, o),)))
                node = node.children[o]
                depth += 1
            a = tuple(o for _, _, o in measured)
            x = tuple(f for _, f, _ in measured)
            r = _pick(words[n + 1], _thresholds(self._announce[a, x]))
            counts[r] += 1
        return counts


def randomized_protocol(m: Measurement, d: Decomposition) -> RandomizedProtocol:
    return RandomizedProtocol(m, d)


# --- fixtures -------------------------------------------------------------

TRIPARTITE_SIGNATURE: Signature = ((2, 2), (2, 2), (2, 2))

_COUNTEREXAMPLE_SUPPORT = (
    ((0, 0, 1), (0, 0, 0)),
    ((1, 1, 0), (0, 0, 0)),
    ((0, 0, 0), (1, 0, 0)),
    ((1, 0, 0), (1, 0, 0)),
    ((1, 0, 1), (0, 1, 0)),
    ((1, 1, 1), (0, 1, 0)),
    ((0, 1, 0), (0, 0, 1)),
    ((0, 1, 1), (0, 0, 1)),
)


def counterexample_tripartite() -> Measurement:
    """Eight-outcome three-party measurement whose total array is not a mixture of wirings.

    Effect ``r`` has a single unit entry at the ``r``-th listed ``(a|x)``.
    """
    return Measurement(tuple(BoxTensor.unit(TRIPARTITE_SIGNATURE, a, x) for a, x in _COUNTEREXAMPLE_SUPPORT))


def adaptive_pair_tree() -> BasicTree:
    """Measure fiducial 0 on subsystem 0, then fiducial ``a_0`` on subsystem 1; label ``a_1``."""
    sig = ((2, 2), (2, 2))
    return BasicTree(sig, Node(0, 0, (Node(1, 0, (Leaf(0), Leaf(1))), Node(1, 1, (Leaf(0), Leaf(1))))))


def adaptive_pair_measurement() -> Measurement:
    return tree_effects(adaptive_pair_tree())


def normalisation_functional(signature) -> BoxTensor:
    """``delta_{x, 0}``: a one-effect measurement that always fires."""
    sig = as_signature(signature)
    return BoxTensor.from_function(sig, lambda a, x: int(not any(x)))


def is_basic_array(t: BoxTensor) -> bool:
    return any(arr.tensor == t for arr in enumerate_basic_arrays(t.signature))


def subnormalised_weight(t: BoxTensor) -> Fraction:
    """``M . P`` for any valid state (taken at the maximally mixed state)."""
    return dot(t, maximally_mixed(t.signature))
