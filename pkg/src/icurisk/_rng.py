"""Deterministic random-stream derivation.

All stochastic components take a single integer master seed. Independent
sub-streams (per fold, per bootstrap replicate, per chain) are derived with
numpy's SeedSequence spawn-key mechanism so that adding or reordering one
consumer never perturbs another.
"""

from __future__ import annotations

import numpy as np

# stable tag -> spawn-key coordinate; never renumber, only append
_TAGS = {
    "synth": 1,
    "split": 2,
    "cv": 3,
    "bootstrap": 4,
    "dream": 5,
    "mlp": 6,
    "gbdt": 7,
    "posterior": 8,
    "ablation": 9,
    "shap": 10,
}


def seed_sequence(master_seed: int, tag: str, *indices: int) -> np.random.SeedSequence:
    """SeedSequence for a named sub-stream of the master seed."""
    if tag not in _TAGS:
        raise KeyError(f"unknown rng tag {tag!r}")
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(_TAGS[tag], *indices))


def derive_rng(master_seed: int, tag: str, *indices: int) -> np.random.Generator:
    """Generator for a named sub-stream of the master seed."""
    return np.random.default_rng(seed_sequence(master_seed, tag, *indices))


def derive_int(master_seed: int, tag: str, *indices: int) -> int:
    """Collapse a sub-stream to a plain integer seed (for APIs that take one)."""
    return int(seed_sequence(master_seed, tag, *indices).generate_state(1)[0])
