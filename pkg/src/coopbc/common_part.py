"""Gacs-Korner common part of a pair of correlated sources."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .prob import ConditionalKernel, LabeledDistribution

SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class CommonPart:
    """K = alpha(S) = beta(T): connected components of the support graph."""

    alpha: tuple
    beta: tuple
    k_size: int
    k_marginal: np.ndarray

    def kernel(self, source="S", name="K"):
        """Deterministic p(k | s) as a kernel, for use in factor graphs."""
        return ConditionalKernel.deterministic(
            (source,), (len(self.alpha),), name, self.k_size, lambda s: self.alpha[s]
        )


def common_part(p_st, tol=SUPPORT_TOL):
    """Label the connected components of the bipartite support graph.

    Components are numbered in order of first appearance scanning S symbols
    0, 1, ...; zero-probability symbols each get a component of their own
    (S ones during the scan, T ones afterwards in T order).
    """
    if len(p_st.names) != 2:
        raise ValidationError("common_part needs a distribution over exactly two variables")
    table = np.asarray(p_st.mass)
    if not np.any(table > tol):
        raise ValidationError("common_part: distribution has no mass")
    edges = table > tol
    ns, nt = table.shape
    alpha = [-1] * ns
    beta = [-1] * nt
    k = 0
    for s0 in range(ns):
        if alpha[s0] >= 0:
            continue
        alpha[s0] = k
        queue = deque([("s", s0)])
        while queue:
            side, i = queue.popleft()
            if side == "s":
                for t in np.flatnonzero(edges[i]):
                    if beta[t] < 0:
                        beta[t] = k
                        queue.append(("t", t))
            else:
                for s in np.flatnonzero(edges[:, i]):
                    if alpha[s] < 0:
                        alpha[s] = k
                        queue.append(("s", s))
        k += 1
    for t in range(nt):
        if beta[t] < 0:
            beta[t] = k
            k += 1
    p_s = table.sum(axis=1)
    k_marginal = np.zeros(k)
    np.add.at(k_marginal, alpha, p_s)
    k_marginal.setflags(write=False)
    return CommonPart(tuple(int(a) for a in alpha), tuple(int(b) for b in beta), k, k_marginal)


def lift_with_k(d, cp=None, source="S", target="T", name="K", tol=SUPPORT_TOL):
    """Adjoin K = alpha(S) to ``d`` as an extra (last) deterministic axis."""
    st = d.marginal((source, target))
    if cp is None:
        cp = common_part(st, tol)
    alpha = np.asarray(cp.alpha)
    beta = np.asarray(cp.beta)
    support = np.argwhere(st.mass > tol)
    bad = [(s, t) for s, t in support if alpha[s] != beta[t]]
    if bad:
        raise ValidationError(
            f"support pairs {bad[:3]} violate alpha(s) == beta(t); common part is stale"
        )
    onehot = np.zeros((len(alpha), cp.k_size))
    onehot[np.arange(len(alpha)), alpha] = 1.0
    axis = d.names.index(source)
    labels = list(range(len(d.names)))
    k_label = len(d.names)
    mass = np.einsum(d.mass, labels, onehot, [axis, k_label], labels + [k_label])
    return LabeledDistribution(d.names + (name,), mass, validate=False)
