"""Randomized coordinate ascent over the auxiliary kernels.

Given only the physics, look for kernels p(w,u,v|s,t), p(x|w,u,v), p(x1),
p(x2), p(yhat1|y11,x1), p(yhat2|y21,x2) whose margins are all positive.
Finding none proves nothing: the conditions are only sufficient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InconsistencyError, StateSpaceError, ValidationError
from .model import AuxiliaryKernels, full_joint
from .prob import DEFAULT_STATE_CAP
from .region import MarginReport, theorem1_margins

IMPROVE_TOL = 1e-12
CONSTRAINT_PENALTY = 10.0
OBJECTIVES = ("min-margin", "weighted-margin")


@dataclass
class SearchConfig:
    """Cardinalities default to |W| = 2|K|, |U| = 2|S|, |V| = 2|T|,
    |Yhat1| = |Y11|, |Yhat2| = |Y21| when left as ``None``."""

    w_size: int | None = None
    u_size: int | None = None
    v_size: int | None = None
    yhat1_size: int | None = None
    yhat2_size: int | None = None
    restarts: int = 8
    iterations: int = 1500
    step: float = 0.6
    step_halflife: int = 800
    seed: int = 0
    objective: str = "min-margin"
    cap: int = DEFAULT_STATE_CAP

    def resolve(self, problem):
        ps = problem.sizes
        sizes = dict(
            W=self.w_size or 2 * ps["K"],
            U=self.u_size or 2 * ps["S"],
            V=self.v_size or 2 * ps["T"],
            Yhat1=self.yhat1_size or ps["Y11"],
            Yhat2=self.yhat2_size or ps["Y21"],
        )
        for k, v in sizes.items():
            if int(v) != v or v < 1:
                raise ValidationError(f"cardinality of {k} must be a positive integer")
        if self.restarts < 1:
            raise ValidationError("search needs at least one restart")
        if self.iterations < 0:
            raise ValidationError("iterations must be nonnegative")
        if self.objective not in OBJECTIVES:
            raise ValidationError(f"objective must be one of {OBJECTIVES}")
        transmitter = ps["S"] * ps["T"] * ps["K"] * sizes["W"] * sizes["U"] * sizes["V"] * ps["X"]
        if transmitter > self.cap:
            raise StateSpaceError(f"transmitter state space {transmitter} exceeds cap {self.cap}")
        return sizes

    def step_at(self, it):
        return self.step * 0.5 ** (it / self.step_halflife)


@dataclass(frozen=True)
class RestartTrace:
    restart: int
    iterations: int
    accepted: int
    objective: float
    history: tuple = field(repr=False, default=())


@dataclass(frozen=True)
class AuxiliaryCertificate:
    kernels: AuxiliaryKernels
    report: MarginReport
    trace: RestartTrace | None = None

    def verify(self, problem, tol=1e-9):
        """Recompute the margins from scratch and compare with the stored ones."""
        fresh = theorem1_margins(full_joint(problem, self.kernels))
        dev = fresh.max_deviation(self.report)
        if dev > tol or fresh.admissible != self.report.admissible:
            raise InconsistencyError(f"stored margins differ from recomputed ones by {dev:.3g}")
        return fresh


@dataclass(frozen=True)
class SearchResult:
    certificate: AuxiliaryCertificate | None
    best: AuxiliaryCertificate
    restarts: tuple

    @property
    def found(self):
        return self.certificate is not None


def score(report, kind="min-margin"):
    if kind == "min-margin":
        return report.min_margin
    if kind == "weighted-margin":
        return min(report.m1, report.m2, report.m3, report.m4) + CONSTRAINT_PENALTY * min(
            0.0, report.c1, report.c2
        )
    raise ValidationError(f"unknown objective {kind!r}")


def evaluate(problem, kernels, cap=DEFAULT_STATE_CAP):
    return theorem1_margins(full_joint(problem, kernels, cap))


def objective(cert, problem, kind="min-margin"):
    """min(m1, m2, m3, m4, c1, c2) of the certificate's kernels, recomputed."""
    kernels = cert.kernels if isinstance(cert, AuxiliaryCertificate) else cert
    kernels.check_against(problem)
    return score(evaluate(problem, kernels), kind)


def seed_certificate(problem, kernels):
    """Wrap hand-built kernels (e.g. W = K, U = S, V = T) as a certificate."""
    if not isinstance(kernels, AuxiliaryKernels):
        kernels = AuxiliaryKernels(**kernels)
    kernels.check_against(problem)
    return AuxiliaryCertificate(kernels, evaluate(problem, kernels))


def project_simplex(c):
    """Euclidean projection of a vector onto the probability simplex."""
    a = -np.sort(-c)
    lam = (np.cumsum(a) - 1.0) / np.arange(1, len(c) + 1)
    k = np.nonzero(a > lam)[0][-1]
    return np.maximum(c - lam[k], 0.0)


class _Blocks:
    """Flat 2-D views (slices x outputs) of each kernel, in a fixed order."""

    ORDER = ("wuv", "x", "x1", "x2", "yhat1", "yhat2")

    def __init__(self, kernels):
        self.shapes = {f: getattr(kernels, f).shape for f in self.ORDER}
        out = AuxiliaryKernels.OUT_NDIM
        self.arrays = {}
        for f in self.ORDER:
            arr = np.array(getattr(kernels, f))
            nd = out[f]
            n_out = int(np.prod(arr.shape[arr.ndim - nd:]))
            self.arrays[f] = arr.reshape(-1, n_out)

    def kernels(self):
        return AuxiliaryKernels(
            **{f: self.arrays[f].reshape(self.shapes[f]) for f in self.ORDER}
        )


def _initial(problem, sizes, rng):
    ps = problem.sizes

    def dirichlet(n_slices, n_out):
        return rng.dirichlet(np.ones(n_out), size=n_slices)

    w, u, v = sizes["W"], sizes["U"], sizes["V"]
    return AuxiliaryKernels(
        dirichlet(ps["S"] * ps["T"], w * u * v).reshape(ps["S"], ps["T"], w, u, v),
        dirichlet(w * u * v, ps["X"]).reshape(w, u, v, ps["X"]),
        dirichlet(1, ps["X1"])[0],
        dirichlet(1, ps["X2"])[0],
        dirichlet(ps["Y11"] * ps["X1"], sizes["Yhat1"]).reshape(ps["Y11"], ps["X1"], sizes["Yhat1"]),
        dirichlet(ps["Y21"] * ps["X2"], sizes["Yhat2"]).reshape(ps["Y21"], ps["X2"], sizes["Yhat2"]),
    )


def _live_slices(problem, blocks):
    """Slices whose conditioning event can have positive probability."""
    live = {f: np.arange(a.shape[0]) for f, a in blocks.arrays.items()}
    live["wuv"] = np.flatnonzero(problem.p_st.mass.reshape(-1) > 0)
    return {f: s for f, s in live.items() if len(s) and blocks.arrays[f].shape[1] > 1}


def _propose(old, eta, rng):
    """Move one slice: toward a random vertex, by a projected Gaussian step, or
    toward its own mode (sharpening), each with probability 1/3."""
    n = len(old)
    kind = rng.random()
    if kind < 1 / 3 or kind >= 2 / 3:
        target = np.zeros(n)
        if kind < 1 / 3:
            target[rng.integers(n)] = 1.0
        else:
            # jitter breaks ties between equal modes
            target[np.argmax(old + 1e-9 * rng.random(n))] = 1.0
        new = (1.0 - eta) * old + eta * target
    else:
        new = project_simplex(old + eta * rng.standard_normal(n))
    return new / new.sum()


def _run_restart(problem, cfg, sizes, restart, start=None):
    rng = np.random.default_rng([cfg.seed, restart])
    init = _initial(problem, sizes, rng)
    if start is not None:
        init = start
    blocks = _Blocks(init)
    report = evaluate(problem, init, cfg.cap)
    best = score(report, cfg.objective)
    history = [best]
    live = _live_slices(problem, blocks)
    order = [f for f in _Blocks.ORDER if f in live]
    accepted = 0
    for it in range(cfg.iterations if order else 0):
        f = order[it % len(order)]
        i = live[f][rng.integers(len(live[f]))]
        arr = blocks.arrays[f]
        old = arr[i].copy()
        arr[i] = _propose(old, cfg.step_at(it), rng)
        cand = evaluate(problem, blocks.kernels(), cfg.cap)
        val = score(cand, cfg.objective)
        if val >= best + IMPROVE_TOL:
            best, report = val, cand
            accepted += 1
        else:
            arr[i] = old
        history.append(best)
    trace = RestartTrace(restart, cfg.iterations, accepted, best, tuple(history))
    return AuxiliaryCertificate(blocks.kernels(), report, trace)


def search(problem, cfg=None, warm_start=None):
    """Run ``cfg.restarts`` independent restarts and keep the best.

    Restart ``i`` draws from its own stream seeded with ``(seed, i)``; ties go
    to the lowest restart index. ``warm_start`` (a certificate or kernels)
    replaces the random start of restart 0.
    """
    cfg = cfg or SearchConfig()
    sizes = cfg.resolve(problem)
    start = None
    if warm_start is not None:
        start = warm_start.kernels if isinstance(warm_start, AuxiliaryCertificate) else warm_start
        start.check_against(problem)
    runs = [
        _run_restart(problem, cfg, sizes, r, start if r == 0 else None)
        for r in range(cfg.restarts)
    ]
    best = runs[0]
    for run in runs[1:]:
        if score(run.report, cfg.objective) > score(best.report, cfg.objective):
            best = run
    winner = best if best.report.admissible else None
    return SearchResult(winner, best, tuple(r.trace for r in runs))
