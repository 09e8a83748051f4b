"""Lazily materialized random codebooks for the block-Markov scheme.

Every codeword symbol is a pure function of (seed, book, index tuple,
position): a splitmix64 hash turned into a uniform draw, then into a symbol
by inverse CDF. Codewords therefore never depend on the order in which they
are requested, and the nominal codebooks (indexed by whole source
sequences) never need to be stored.
"""

from __future__ import annotations

from math import ceil

import numpy as np

from ..errors import BudgetExceeded, ValidationError
from ..model import full_joint

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
INDEX_CAP = 1 << 20

BOOKS = ("sigma", "tau", "w", "u", "v", "x", "x1", "x2", "yhat1", "yhat2", "bin1", "bin2")
_BOOK_ID = {b: i + 1 for i, b in enumerate(BOOKS)}


def _mix(z):
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK
    return z ^ (z >> 31)


def hash_key(seed, book, *parts):
    """Fold (seed, book, parts...) into one 64-bit key.

    Sequence parts are length-prefixed so that different splits of the same
    integers cannot collide structurally.
    """
    h = _mix((int(seed) + GOLDEN) & MASK)
    h = _mix((h ^ _BOOK_ID[book]) + GOLDEN & MASK)
    for part in parts:
        if np.ndim(part):
            items = [len(part)] + [int(v) for v in part]
        else:
            items = [int(part)]
        for v in items:
            h = _mix((h ^ (v & MASK)) + GOLDEN & MASK)
    return h


def _mix_array(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def uniforms(key, n):
    """n uniforms in [0, 1) for positions 0..n-1 under ``key``."""
    with np.errstate(over="ignore"):
        z = np.uint64(key) + (np.arange(1, n + 1, dtype=np.uint64) * np.uint64(GOLDEN))
    return (_mix_array(z) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def draw(cdf_rows, row_index, u):
    """Per-position inverse-CDF draw: row ``row_index[m]`` of ``cdf_rows`` at ``u[m]``."""
    rows = cdf_rows[row_index]
    sym = (u[:, None] >= rows).sum(axis=1)
    return np.minimum(sym, cdf_rows.shape[1] - 1)


def index_space(n, rate):
    """2**ceil(n * rate), never fewer than one index."""
    e = max(0, ceil(n * rate - 1e-9))
    if 2**e > INDEX_CAP:
        raise BudgetExceeded(f"index space 2^{e} exceeds the cap {INDEX_CAP}")
    return 2**e


def _conditional(joint, given, out):
    """p(out | given) as an array (prod(given sizes), |out|); uniform where
    the conditioning event has probability zero."""
    m = joint.marginal(tuple(given) + (out,)).mass
    m = m.reshape(-1, m.shape[-1])
    tot = m.sum(axis=1, keepdims=True)
    uni = np.full_like(m, 1.0 / m.shape[1])
    return np.where(tot > 0, m / np.where(tot > 0, tot, 1.0), uni)


def _cdf(rows):
    c = np.cumsum(rows, axis=1)
    c[:, -1] = 1.0
    return c


class CodebookSystem:
    """All random codes of one simulation run, keyed on ``seed``.

    Index spaces (0-based): theta < n_theta, phi < n_phi, r < n_w, p < n_u,
    q < n_v, s_i < n_s[i], z_i < n_z[i].
    """

    def __init__(self, problem, aux, rates, n, seed, cap=None):
        if n < 1:
            raise ValidationError("block length must be at least 1")
        self.problem = problem
        self.aux = aux
        self.rates = rates
        self.n = int(n)
        self.seed = int(seed)
        joint = full_joint(problem, aux) if cap is None else full_joint(problem, aux, cap)
        self.joint = joint
        self.sizes = dict(zip(joint.names, joint.sizes))
        self.alpha = np.asarray(problem.common.alpha, dtype=np.int64)
        self.beta = np.asarray(problem.common.beta, dtype=np.int64)

        self.n_theta = index_space(n, rates.r1)
        self.n_phi = index_space(n, rates.r2)
        self.n_w = index_space(n, rates.rho0)
        self.n_u = index_space(n, rates.rho1)
        self.n_v = index_space(n, rates.rho2)
        self.n_s = {1: index_space(n, rates.Rs1), 2: index_space(n, rates.Rs2)}
        self.n_z = {1: index_space(n, rates.R1), 2: index_space(n, rates.R2)}

        sz = self.sizes
        self._cdf = {
            "w": _cdf(_conditional(joint, ("K",), "W")),
            "u": _cdf(_conditional(joint, ("S", "W"), "U")),
            "v": _cdf(_conditional(joint, ("T", "W"), "V")),
            "x": _cdf(np.asarray(aux.x).reshape(-1, sz["X"])),
            "x1": _cdf(np.asarray(aux.x1).reshape(1, -1)),
            "x2": _cdf(np.asarray(aux.x2).reshape(1, -1)),
            "yhat1": _cdf(_conditional(joint, ("X1",), "Yhat1")),
            "yhat2": _cdf(_conditional(joint, ("X2",), "Yhat2")),
        }
        self._bins = {i: self._make_bins(i) for i in (1, 2)}
        self._cache = {}

    # -- partitions -------------------------------------------------------

    def sigma(self, s):
        return hash_key(self.seed, "sigma", s) % self.n_theta

    def tau(self, t):
        return hash_key(self.seed, "tau", t) % self.n_phi

    def _make_bins(self, i):
        rng = np.random.default_rng([self.seed, _BOOK_ID[f"bin{i}"]])
        perm = rng.permutation(self.n_z[i])
        return perm % self.n_s[i]

    def bin_of(self, i, z):
        """Conference index s_i whose cell contains compression index z."""
        return int(self._bins[i][z])

    def bin_members(self, i, s):
        return np.flatnonzero(self._bins[i] == s)

    # -- codewords --------------------------------------------------------

    def _word(self, book, key_parts, rows):
        key = (book,) + tuple(tuple(int(v) for v in p) if np.ndim(p) else int(p) for p in key_parts)
        hit = self._cache.get(key)
        if hit is None:
            u = uniforms(hash_key(self.seed, book, *key_parts), self.n)
            hit = draw(self._cdf[book], rows, u)
            hit.setflags(write=False)
            self._cache[key] = hit
        return hit

    def w(self, theta, phi, k, r):
        """w^n_{theta,phi}(k^n), index r; symbols ~ p(w | k_m)."""
        k = np.asarray(k)
        return self._word("w", (theta, phi, k, r), k)

    def u(self, s, w_id, p):
        """u^n(s^n, w^n) index p; ``w_id`` = (theta, phi, k^n, r)."""
        s = np.asarray(s)
        w = self.w(*w_id)
        theta, phi, k, r = w_id
        return self._word("u", (s, theta, phi, k, r, p), s * self.sizes["W"] + w)

    def v(self, t, w_id, q):
        t = np.asarray(t)
        w = self.w(*w_id)
        theta, phi, k, r = w_id
        return self._word("v", (t, theta, phi, k, r, q), t * self.sizes["W"] + w)

    def x(self, s, t, w, u, v, idx):
        """Channel codeword for (s^n, t^n); ``idx`` = (r, p, q) of the chosen triple."""
        sz = self.sizes
        rows = (np.asarray(w) * sz["U"] + u) * sz["V"] + v
        return self._word("x", (s, t) + tuple(idx), rows)

    def x_link(self, i, s_i):
        """Relay codeword x_i^n(s_i), iid p(x_i)."""
        return self._word(f"x{i}", (s_i,), np.zeros(self.n, dtype=np.int64))

    def yhat(self, i, z, s_i):
        """Estimate codeword yhat_i^n(z | s_i), symbols ~ p(yhat_i | x_i)."""
        return self._word(f"yhat{i}", (z, s_i), self.x_link(i, s_i))

    def yhat_all(self, i, s_i):
        """Every yhat_i^n(z | s_i) for z < n_z[i], stacked as rows."""
        return np.stack([self.yhat(i, z, s_i) for z in range(self.n_z[i])])
