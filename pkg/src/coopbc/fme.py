"""Feasibility of the nine-rate linear system.

Two independent routes: exact Fourier-Motzkin elimination on rational
coefficients, and a max-slack linear program. Both return a witness when the
system is feasible.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from .errors import ValidationError
from .region import LinearSystem, RateVector

MAX_DENOMINATOR = 10**12


def _q(x):
    return Fraction(x).limit_denominator(MAX_DENOMINATOR)


class _Row:
    __slots__ = ("a", "b", "strict")

    def __init__(self, a, b, strict):
        self.a = a
        self.b = b
        self.strict = strict

    def normalized(self):
        scale = max(abs(c) for c in self.a)
        if scale == 0:
            return self
        return _Row(tuple(c / scale for c in self.a), self.b / scale, self.strict)


def _prepare(system, slack):
    if not isinstance(system, LinearSystem):
        raise ValidationError("feasible() needs a LinearSystem")
    if slack < 0:
        raise ValidationError("slack must be nonnegative")
    s = _q(slack)
    rows = []
    for c in system.constraints:
        a = tuple(_q(v) for v in c.coeffs)
        b = _q(c.bound)
        if c.strict and s > 0:
            rows.append(_Row(a, b + s, False))
        else:
            rows.append(_Row(a, b, c.strict))
    return rows


def _trivially_ok(row):
    # 0 >= b  or  0 > b
    return row.b < 0 or (row.b == 0 and not row.strict)


def _dedupe(rows):
    best = {}
    for r in rows:
        r = r.normalized()
        prev = best.get(r.a)
        if prev is None or r.b > prev.b or (r.b == prev.b and r.strict):
            best[r.a] = r
    return list(best.values())


def _eliminate(rows, j):
    pos = [r for r in rows if r.a[j] > 0]
    neg = [r for r in rows if r.a[j] < 0]
    out = [r for r in rows if r.a[j] == 0]
    for p in pos:
        for n in neg:
            fp, fn = 1 / p.a[j], -1 / n.a[j]
            a = tuple(fp * x + fn * y for x, y in zip(p.a, n.a))
            out.append(_Row(a, fp * p.b + fn * n.b, p.strict or n.strict))
    return out


def _pick(rows, j, x):
    lo, lo_strict, hi, hi_strict = None, False, None, False
    for r in rows:
        if r.a[j] == 0:
            continue
        rest = sum(r.a[i] * x[i] for i in range(len(x)) if i != j and x[i] is not None)
        bound = (r.b - rest) / r.a[j]
        if r.a[j] > 0:
            if lo is None or bound > lo or (bound == lo and r.strict):
                lo, lo_strict = bound, r.strict
        else:
            if hi is None or bound < hi or (bound == hi and r.strict):
                hi, hi_strict = bound, r.strict
    if lo is None and hi is None:
        return Fraction(0)
    if lo is None:
        if hi_strict:
            return Fraction(0) if hi > 0 else hi - 1
        return min(Fraction(0), hi)
    if not lo_strict:
        return lo
    return (lo + hi) / 2 if hi is not None else lo + 1


def fourier_motzkin(system, slack=0.0):
    """Exact feasibility by eliminating every rate variable in turn."""
    rows = _dedupe(_prepare(system, slack))
    nvar = len(rows[0].a) if rows else 0
    stages = []
    remaining = list(range(nvar))
    while remaining:
        # cheapest variable first: fewest generated rows
        j = min(
            remaining,
            key=lambda v: sum(r.a[v] > 0 for r in rows) * sum(r.a[v] < 0 for r in rows)
            - sum(r.a[v] != 0 for r in rows),
        )
        stages.append((j, rows))
        rows = _eliminate(rows, j)
        empty = [r for r in rows if all(c == 0 for c in r.a)]
        if any(not _trivially_ok(r) for r in empty):
            return False, None
        rows = _dedupe([r for r in rows if any(c != 0 for c in r.a)])
        remaining.remove(j)
    x = [None] * nvar
    for j, stage_rows in reversed(stages):
        x[j] = _pick(stage_rows, j, x)
    return True, RateVector.from_array([float(v) for v in x])


def max_slack_lp(system, slack=0.0, tol=1e-9):
    """Maximize the common slack t of the strict rows subject to the rest."""
    if slack < 0:
        raise ValidationError("slack must be nonnegative")
    cons = system.constraints
    n = len(cons[0].coeffs)
    A = np.array([c.coeffs for c in cons])
    b = np.array([c.bound for c in cons])
    strict = np.array([c.strict for c in cons], dtype=float)
    # -A x + strict * t <= -b
    A_ub = np.hstack([-A, strict[:, None]])
    res = linprog(
        np.r_[np.zeros(n), -1.0],
        A_ub=A_ub,
        b_ub=-b,
        bounds=[(None, None)] * n + [(None, 1.0)],
        method="highs",
    )
    if res.status != 0:
        return False, None
    t = res.x[-1]
    if strict.any():
        ok = t >= slack - tol if slack > 0 else t > tol
    else:
        ok = True
    if not ok:
        return False, None
    return True, RateVector.from_array(np.maximum(res.x[:n], 0.0))


def feasible(system, slack=0.0, method="fme"):
    """Decide whether some rate vector satisfies ``system``.

    Non-strict rows must hold; strict rows must hold with margin at least
    ``slack`` (or strictly when ``slack`` is zero). Returns ``(ok, witness)``.
    """
    if method == "fme":
        return fourier_motzkin(system, slack)
    if method == "lp":
        return max_slack_lp(system, slack)
    raise ValidationError(f"unknown method {method!r}")
