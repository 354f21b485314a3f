"""Synthetic lognormal citation sets and world composition."""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

from .core import CitationSet, EmptySet, LognormalSpec

WORLD_LABEL = "WORLD"


def derive_seeds(seed: int, k: int) -> list[int]:
    """Independent 64-bit child seeds for ``k`` generators from one base seed."""
    children = np.random.SeedSequence(seed).spawn(k)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def sample_lognormal(spec: LognormalSpec, label: str = "synthetic") -> CitationSet:
    """Draw ``spec.n_papers`` citation counts from a discretized lognormal.

    Each count is ``round(exp(mu + sigma * z))`` (nearest integer, halves to
    even), never below zero.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    z = rng.standard_normal(spec.n_papers)
    counts = np.maximum(np.rint(np.exp(spec.mu + spec.sigma * z)), 0).astype(np.int64)
    return CitationSet(label, counts)


def compose_world(
    locals_: Iterable[CitationSet],
    extra: Optional[LognormalSpec] = None,
    label: str = WORLD_LABEL,
) -> CitationSet:
    """Multiset union of local sets plus an optional sampled background."""
    parts = [s.counts for s in locals_]
    if extra is not None:
        parts.append(sample_lognormal(extra).counts)
    if not parts or sum(p.size for p in parts) == 0:
        raise EmptySet("world composition needs at least one non-empty set")
    return CitationSet(label, np.concatenate(parts))


def fig3_setup(seed: int) -> tuple[CitationSet, CitationSet, CitationSet]:
    """The excellent/poor institution pair inside a chemistry-sized world.

    s1: mu=2.4, sigma=1.1, N=500; s7: mu=1.5, sigma=0.9, N=500; the world adds
    a mu=1.7, sigma=1.1 background of 150,000 papers to both (151,000 total).
    """
    s1_seed, s7_seed, bg_seed = derive_seeds(seed, 3)
    s1 = sample_lognormal(LognormalSpec(2.4, 1.1, 500, s1_seed), "s1")
    s7 = sample_lognormal(LognormalSpec(1.5, 0.9, 500, s7_seed), "s7")
    world = compose_world([s1, s7], LognormalSpec(1.7, 1.1, 150_000, bg_seed))
    return s1, s7, world
