"""Robust typicality tests on finite alphabets.

A tuple of n-sequences is delta-typical for a joint pmf p when every joint
symbol a has empirical frequency within delta * p(a) of p(a). Symbols with
p(a) = 0 must therefore never occur.
"""

from __future__ import annotations

import numpy as np

from ..errors import BudgetExceeded, ValidationError
from ..prob import LabeledDistribution

# absorbs float dust in p(a) (e.g. 0.1 * 0.5) without changing any verdict
FREQ_TOL = 1e-12


def _as_matrix(seqs):
    arrs = [np.asarray(s, dtype=np.int64) for s in seqs]
    if not arrs:
        raise ValidationError("need at least one sequence")
    n = arrs[0].shape[-1]
    for a in arrs:
        if a.shape[-1] != n:
            raise ValidationError(f"sequence lengths differ: {a.shape[-1]} vs {n}")
    return arrs, n


def is_strongly_typical(sequences, dist, delta):
    """True when ``sequences`` (one per variable of ``dist``) are jointly
    robust-typical with tolerance ``delta``."""
    if not 0 < delta < 1:
        raise ValidationError("delta must lie in (0, 1)")
    seqs, n = _as_matrix(sequences)
    if len(seqs) != len(dist.names):
        raise ValidationError(f"expected {len(dist.names)} sequences, got {len(seqs)}")
    if n == 0:
        raise ValidationError("sequences must be nonempty")
    for a, size in zip(seqs, dist.sizes):
        if a.ndim != 1:
            raise ValidationError("sequences must be one-dimensional")
        if a.min() < 0 or a.max() >= size:
            raise ValidationError("sequence symbol outside its alphabet")
    return bool(JointTest(dist, delta).batch(seqs)[0])


class JointTest:
    """Vectorized typicality test against one fixed joint pmf.

    ``batch`` takes one array per variable, each of shape (C, n) or (n,);
    rows are candidates and 1-D arrays are broadcast across them.
    """

    def __init__(self, dist, delta):
        if not isinstance(dist, LabeledDistribution):
            raise ValidationError("typicality needs a LabeledDistribution")
        self.names = dist.names
        self.sizes = dist.sizes
        self.p = dist.mass.reshape(-1)
        self.lo = self.p * (1.0 - delta) - FREQ_TOL
        self.hi = self.p * (1.0 + delta) + FREQ_TOL
        self.n_cells = self.p.size

    def batch(self, seqs):
        seqs = [np.asarray(s, dtype=np.int64) for s in seqs]
        rows = max((s.shape[0] for s in seqs if s.ndim == 2), default=1)
        n = seqs[0].shape[-1]
        flat = np.zeros((rows, n), dtype=np.int64)
        for s, size in zip(seqs, self.sizes):
            flat = flat * size + np.broadcast_to(s, (rows, n))
        offsets = (np.arange(rows, dtype=np.int64) * self.n_cells)[:, None]
        counts = np.bincount((flat + offsets).ravel(), minlength=rows * self.n_cells)
        freq = counts.reshape(rows, self.n_cells) / n
        return np.all((freq >= self.lo) & (freq <= self.hi), axis=1)


def typical_sequences(dist, n, delta, cap):
    """All n-sequences over a single-variable ``dist`` that are typical.

    Returns an array of shape (count, n) in lexicographic order; raises
    :class:`~coopbc.errors.BudgetExceeded` when |alphabet|**n exceeds ``cap``.
    """
    (size,) = dist.sizes
    total = size**n
    if total > cap:
        raise BudgetExceeded(f"{total} candidate sequences exceed the work budget {cap}")
    allseq = np.array(np.unravel_index(np.arange(total), (size,) * n)).T.reshape(total, n)
    keep = JointTest(dist, delta).batch([allseq])
    return allseq[keep]
