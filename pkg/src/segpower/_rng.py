"""Deterministic per-unit RNG streams.

Each (seed, index) pair keys its own counter-based generator, so a
simulation replicate or Monte Carlo draw gets identical randomness no
matter how work is split across workers or in what order units run.
"""

from __future__ import annotations

import numpy as np


def derived_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for unit ``index`` of a run keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, index))))
