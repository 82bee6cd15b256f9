"""Synthetic stand-ins shaped like the public smart-meter datasets.

The real exports are not redistributed; these generators reproduce their
shape and gross structure so the harness and tests have something to chew on.
"""

from __future__ import annotations

import numpy as np


def appliance_matrix(
    m: int = 80,
    t: int = 4902,
    n_types: int = 28,
    duty: float = 0.10,
    decay: float = 0.8,
    seed: int = 0,
) -> np.ndarray:
    """Sparse, rank-deficient device matrix (tracebase-like, 80 x 4902).

    Each device belongs to one of ``n_types`` appliance types. A type is
    switched on during a few random windows covering about ``duty`` of the
    samples and draws a type-specific power trace there; devices of one type
    are scaled copies of it. Type amplitudes fall off as ``decay**c`` so the
    spectrum decays roughly exponentially, and the rank is ``n_types``.
    """
    rng = np.random.default_rng(seed)
    patterns = np.zeros((n_types, t))
    on_samples = max(1, int(round(duty * t)))
    for c in range(n_types):
        mask = np.zeros(t, dtype=bool)
        while mask.sum() < on_samples:
            length = int(rng.integers(5, 60))
            start = int(rng.integers(0, t))
            mask[start:start + length] = True
        idx = np.flatnonzero(mask)[:on_samples]
        level = 50.0 + 450.0 * rng.random()
        patterns[c, idx] = level * (1.0 + 0.2 * rng.standard_normal(idx.size)).clip(0.05)
        patterns[c] *= decay ** c

    types = np.concatenate([np.arange(n_types), rng.integers(0, n_types, size=max(0, m - n_types))])[:m]
    scales = 0.5 + rng.random(m)
    return scales[:, None] * patterns[types]


def household_matrix(
    m: int = 442,
    t: int = 1440,
    decay_len: float = 40.0,
    base: float = 400.0,
    seed: int = 0,
) -> np.ndarray:
    """Dense, full-rank household matrix (microgrid-like, 442 x 1440).

    A shared daily load shape plus a random low-dimensional mixture whose
    singular values fall off as exp(-i / decay_len). Every entry is positive.
    """
    rng = np.random.default_rng(seed)
    r = min(m, t)
    qa, _ = np.linalg.qr(rng.standard_normal((m, r)))
    qb, _ = np.linalg.qr(rng.standard_normal((t, r)))
    spectrum = 0.5 * base * np.sqrt(m * t) * 0.05 * np.exp(-np.arange(r) / decay_len)
    hours = np.arange(t) * 24.0 / t
    daily = 1.0 + 0.5 * np.sin((hours - 7.0) * np.pi / 12.0) ** 2
    x = base * np.outer(0.5 + rng.random(m), daily) + (qa * spectrum) @ qb.T
    return np.abs(x) + 1.0
