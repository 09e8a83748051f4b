"""Reference problems and hand-built auxiliaries used by tests, docs and the CLI."""

from __future__ import annotations

import numpy as np

from .model import AuxiliaryKernels, ProblemSpec, point_mass


def dsbs(p):
    """Doubly symmetric binary source: uniform S, T = S xor Bernoulli(p)."""
    return np.array([[(1 - p) / 2, p / 2], [p / 2, (1 - p) / 2]])


def bsc(eps):
    return np.array([[1 - eps, eps], [eps, 1 - eps]])


def independent_uniform(ns=2, nt=2):
    return np.full((ns, nt), 1.0 / (ns * nt))


def broadcast_from_marginals(ch1, ch2):
    """p(y11,y21|x) = p(y11|x) p(y21|x)."""
    return np.einsum("xa,xb->xab", ch1, ch2)


def noiseless_broadcast(nx):
    """Y11 = Y21 = X."""
    bc = np.zeros((nx, nx, nx))
    for x in range(nx):
        bc[x, x, x] = 1.0
    return bc


def pure_noise_broadcast(nx, ny=2):
    return np.full((nx, ny, ny), 1.0 / (ny * ny))


def noiseless_link(bits=1):
    return np.eye(2**bits)


def noiseless_problem(nx=8, link_bits=1, p_st=None):
    p_st = independent_uniform() if p_st is None else p_st
    return ProblemSpec.from_arrays(
        p_st, noiseless_broadcast(nx), noiseless_link(link_bits), noiseless_link(link_bits)
    )


def pure_noise_problem(nx=2, ny=2, p_st=None):
    p_st = dsbs(0.25) if p_st is None else p_st
    return ProblemSpec.from_arrays(p_st, pure_noise_broadcast(nx, ny), bsc(0.5), bsc(0.5))


def dsbs_bsc_problem(p=0.25, eps=0.1, link_eps=0.1):
    """DSBS(p) sources over a binary BC whose two outputs see independent BSC(eps)."""
    return ProblemSpec.from_arrays(
        dsbs(p), broadcast_from_marginals(bsc(eps), bsc(eps)), bsc(link_eps), bsc(link_eps)
    )


def deterministic(shape_in, n_out, fn):
    k = np.zeros(tuple(shape_in) + (n_out,))
    for idx in np.ndindex(*shape_in):
        k[idx + (fn(*idx),)] = 1.0
    return k


def constant_estimates(problem, n_yhat=1):
    ps = problem.sizes
    y1 = np.zeros((ps["Y11"], ps["X1"], n_yhat))
    y1[..., 0] = 1.0
    y2 = np.zeros((ps["Y21"], ps["X2"], n_yhat))
    y2[..., 0] = 1.0
    return y1, y2


def noiseless8_aux(problem):
    """W a fresh uniform bit, U = S, V = T, X = 4W + 2U + V; uniform link
    inputs; constant estimates. Needs |S| = |T| = 2 and |X| = 8."""
    wuv = np.zeros((2, 2, 2, 2, 2))
    for s in range(2):
        for t in range(2):
            for w in range(2):
                wuv[s, t, w, s, t] = 0.5
    x = deterministic((2, 2, 2), 8, lambda w, u, v: 4 * w + 2 * u + v)
    y1, y2 = constant_estimates(problem)
    ps = problem.sizes
    return AuxiliaryKernels(
        wuv, x, np.full(ps["X1"], 1.0 / ps["X1"]), np.full(ps["X2"], 1.0 / ps["X2"]), y1, y2
    )


def noiseless4_aux(problem):
    """W constant, U = S, V = T, X = 2U + V over a 4-ary channel."""
    wuv = np.zeros((2, 2, 1, 2, 2))
    for s in range(2):
        for t in range(2):
            wuv[s, t, 0, s, t] = 1.0
    x = deterministic((1, 2, 2), 4, lambda w, u, v: 2 * u + v)
    y1, y2 = constant_estimates(problem)
    ps = problem.sizes
    return AuxiliaryKernels(
        wuv, x, np.full(ps["X1"], 1.0 / ps["X1"]), np.full(ps["X2"], 1.0 / ps["X2"]), y1, y2
    )


def identity_aux(problem):
    """W = K, U = S, V = T as point masses; X = embedding of (W, U, V) when
    |X| = |W||U||V|, otherwise X constant."""
    ps = problem.sizes
    ns, nt, nk = ps["S"], ps["T"], ps["K"]
    alpha = problem.common.alpha
    wuv = np.zeros((ns, nt, nk, ns, nt))
    for s in range(ns):
        for t in range(nt):
            wuv[s, t, alpha[s], s, t] = 1.0
    nwuv = nk * ns * nt
    if ps["X"] == nwuv:
        x = deterministic((nk, ns, nt), ps["X"], lambda w, u, v: (w * ns + u) * nt + v)
    else:
        x = deterministic((nk, ns, nt), ps["X"], lambda *a: 0)
    y1, y2 = constant_estimates(problem)
    return AuxiliaryKernels(wuv, x, point_mass(ps["X1"]), point_mass(ps["X2"]), y1, y2)


def random_aux(problem, rng, w=2, u=2, v=2, yhat1=None, yhat2=None, concentration=1.0):
    ps = problem.sizes
    yhat1 = ps["Y11"] if yhat1 is None else yhat1
    yhat2 = ps["Y21"] if yhat2 is None else yhat2

    def kern(shape_in, shape_out):
        n_out = int(np.prod(shape_out))
        d = rng.dirichlet(np.full(n_out, concentration), size=int(np.prod(shape_in)))
        return d.reshape(tuple(shape_in) + tuple(shape_out))

    return AuxiliaryKernels(
        kern((ps["S"], ps["T"]), (w, u, v)),
        kern((w, u, v), (ps["X"],)),
        rng.dirichlet(np.full(ps["X1"], concentration)),
        rng.dirichlet(np.full(ps["X2"], concentration)),
        kern((ps["Y11"], ps["X1"]), (yhat1,)),
        kern((ps["Y21"], ps["X2"]), (yhat2,)),
    )


def random_problem(rng, max_size=3, concentration=1.0):
    def n():
        return int(rng.integers(1, max_size + 1))

    s, t, x, y11, y21, x1, y22, x2, y12 = (n() for _ in range(9))
    s, t = max(s, 2), max(t, 2)
    p_st = rng.dirichlet(np.full(s * t, concentration)).reshape(s, t)
    bc = rng.dirichlet(np.full(y11 * y21, concentration), size=x).reshape(x, y11, y21)
    l1 = rng.dirichlet(np.full(y22, concentration), size=x1)
    l2 = rng.dirichlet(np.full(y12, concentration), size=x2)
    return ProblemSpec.from_arrays(p_st, bc, l1, l2)
