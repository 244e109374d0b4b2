"""Seeded generators of random valid and invalid objects for the tests."""

from __future__ import annotations

import random
from fractions import Fraction

from boxworld import BoxTensor, Measurement, TotalArray, enumerate_basic_arrays, mix, nosig_vertices

BIPARTITE = ((2, 2), (2, 2))


def random_weights(rng: random.Random, k: int, scale: int = 12) -> list[Fraction]:
    raw = [rng.randint(1, scale) for _ in range(k)]
    total = sum(raw)
    return [Fraction(v, total) for v in raw]


def random_basic_mixture(rng: random.Random, sig=BIPARTITE, max_terms: int = 5) -> TotalArray:
    arrays = enumerate_basic_arrays(sig)
    k = rng.randint(1, max_terms)
    picks = [rng.choice(arrays).tensor for _ in range(k)]
    out = BoxTensor.zeros(picks[0].signature)
    for w, t in zip(random_weights(rng, k), picks):
        out = out + t.scale(w)
    return TotalArray(out)


def split_array(rng: random.Random, total: BoxTensor, n_effects: int) -> Measurement:
    """Split every entry of ``total`` among ``n_effects`` nonnegative effects."""
    columns = []
    for v in total.entries:
        raw = [rng.randint(0, 4) for _ in range(n_effects)]
        if not any(raw):
            raw[rng.randrange(n_effects)] = 1
        s = sum(raw)
        columns.append([v * Fraction(c, s) for c in raw])
    return Measurement(tuple(BoxTensor(total.signature, tuple(col[r] for col in columns))
                             for r in range(n_effects)))


def random_valid_measurement(rng: random.Random, sig=BIPARTITE, max_effects: int = 4) -> Measurement:
    total = random_basic_mixture(rng, sig).tensor
    return split_array(rng, total, rng.randint(1, max_effects))


def random_effect_list(rng: random.Random, sig=BIPARTITE) -> Measurement:
    """Valid about half the time; the rest are perturbed so they usually fail."""
    m = random_valid_measurement(rng, sig)
    if rng.random() < 0.5:
        return m
    effects = list(m.effects)
    r = rng.randrange(len(effects))
    e = effects[r]
    i = rng.randrange(len(e.entries))
    entries = list(e.entries)
    entries[i] = Fraction(rng.randint(0, 4), 4)
    effects[r] = BoxTensor(e.signature, tuple(entries))
    return Measurement(tuple(effects))


def random_state(rng: random.Random, sig=BIPARTITE, max_terms: int = 4) -> BoxTensor:
    vs = list(nosig_vertices(sig))
    k = rng.randint(1, max_terms)
    return mix([rng.choice(vs) for _ in range(k)], random_weights(rng, k))
