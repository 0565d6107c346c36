"""Condorcet-consistent post-processing of a candidate distribution."""

from __future__ import annotations

import numpy as np

from ..core import smith_set


def truncate_to_smith(p, ranks) -> np.ndarray:
    """Zero the probability of candidates outside the Smith set and renormalise.

    If ``p`` puts no mass on the Smith set at all, the result is uniform over it.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] != np.asarray(ranks).shape[1]:
        raise ValueError("distribution and ranking disagree on the candidate count")
    keep = np.zeros(p.shape, dtype=bool)
    keep[list(smith_set(ranks))] = True
    out = np.where(keep, p, 0.0)
    total = out.sum()
    if total <= 0:
        return keep / keep.sum()
    return out / total
