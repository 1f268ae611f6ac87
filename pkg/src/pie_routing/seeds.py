"""Deterministic RNG derivation.

Every randomized operation derives its own generator from (seed, purpose
tag), so adding draws to one operation never perturbs another and reruns
with the same seed are byte-identical.
"""
from __future__ import annotations

import numpy as np

GLP_TAG = 0x67
WEIGHT_TAG = 0x77
SALT_TAG = 0x5A
ELECTION_TAG = 0xE1
FAILURE_TAG = 0xFA
PAIRS_TAG = 0x9A
TREE_TAG = 0x7E


def rng_for(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, *tags])
