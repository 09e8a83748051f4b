"""Problem physics, auxiliary kernels and the factor graphs that join them.

Variable names used throughout:

    S, T              correlated sources
    K                 common part of (S, T)
    W, U, V           auxiliaries (common, private-S, private-T)
    X                 broadcast input; Y11, Y21 its outputs at receivers 1, 2
    X1 -> Y22         link from receiver 1 to receiver 2
    X2 -> Y12         link from receiver 2 to receiver 1
    Yhat1, Yhat2      compressed estimates of Y11 and Y21
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .common_part import common_part
from .errors import ValidationError
from .prob import (
    DEFAULT_STATE_CAP,
    ConditionalKernel,
    FactoredJoint,
    FactorGraphSpec,
    LabeledDistribution,
)
from .validation import check_table

OBS1 = ("Yhat2", "Y11", "Y12")
OBS2 = ("Yhat1", "Y21", "Y22")
FULL_VARIABLES = (
    "S", "T", "K", "W", "U", "V", "X", "X1", "X2",
    "Y11", "Y21", "Y12", "Y22", "Yhat1", "Yhat2",
)
COOPERATION_VARIABLES = ("X1", "X2", "Y12", "Y22", "Yhat1", "Yhat2")


@dataclass(frozen=True)
class ProblemSpec:
    """The fixed physics: source joint, broadcast channel and the two links."""

    p_st: LabeledDistribution
    bc: ConditionalKernel
    link1: ConditionalKernel
    link2: ConditionalKernel

    def __post_init__(self):
        expect = [
            (self.p_st.names, ("S", "T"), "p_st"),
            (self.bc.names, ("X", "Y11", "Y21"), "bc"),
            (self.link1.names, ("X1", "Y22"), "link1"),
            (self.link2.names, ("X2", "Y12"), "link2"),
        ]
        for got, want, what in expect:
            if tuple(got) != want:
                raise ValidationError(f"{what} must be over {want}, got {tuple(got)}")
        object.__setattr__(self, "common", common_part(self.p_st))

    @classmethod
    def from_arrays(cls, p_st, bc, link1, link2, renormalize=False):
        """Build from plain arrays: p(s,t), p(y11,y21|x), p(y22|x1), p(y12|x2)."""
        return cls(
            LabeledDistribution(("S", "T"), p_st, renormalize=renormalize),
            ConditionalKernel(("X",), ("Y11", "Y21"), bc, renormalize=renormalize),
            ConditionalKernel(("X1",), ("Y22",), link1, renormalize=renormalize),
            ConditionalKernel(("X2",), ("Y12",), link2, renormalize=renormalize),
        )

    @property
    def sizes(self):
        s, t = self.p_st.sizes
        x, y11, y21 = self.bc.mass.shape
        x1, y22 = self.link1.mass.shape
        x2, y12 = self.link2.mass.shape
        return dict(S=s, T=t, K=self.common.k_size, X=x, Y11=y11, Y21=y21,
                    X1=x1, Y22=y22, X2=x2, Y12=y12)


@dataclass(frozen=True)
class AuxiliaryKernels:
    """The free design, as plain arrays.

    wuv:    p(w,u,v | s,t)       shape (S, T, W, U, V)
    x:      p(x | w,u,v)         shape (W, U, V, X)
    x1, x2: p(x1), p(x2)
    yhat1:  p(yhat1 | y11, x1)   shape (Y11, X1, Yhat1)
    yhat2:  p(yhat2 | y21, x2)   shape (Y21, X2, Yhat2)
    """

    wuv: np.ndarray
    x: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    yhat1: np.ndarray
    yhat2: np.ndarray

    FIELDS = ("wuv", "x", "x1", "x2", "yhat1", "yhat2")
    OUT_NDIM = {"wuv": 3, "x": 1, "x1": 1, "x2": 1, "yhat1": 1, "yhat2": 1}

    def __post_init__(self):
        for f in self.FIELDS:
            arr = np.array(getattr(self, f), dtype=float)
            nd = self.OUT_NDIM[f]
            axes = tuple(range(arr.ndim - nd, arr.ndim))
            arr = check_table(arr, f"auxiliary kernel {f}", axis=axes)
            arr.setflags(write=False)
            object.__setattr__(self, f, arr)

    @property
    def sizes(self):
        _, _, w, u, v = self.wuv.shape
        return dict(W=w, U=u, V=v, Yhat1=self.yhat1.shape[-1], Yhat2=self.yhat2.shape[-1])

    def replace(self, **kw):
        return replace(self, **kw)

    def as_dict(self):
        return {f: getattr(self, f) for f in self.FIELDS}

    def check_against(self, problem):
        ps = problem.sizes
        want = {
            "wuv": (ps["S"], ps["T"]) + self.wuv.shape[2:],
            "x": self.wuv.shape[2:] + (ps["X"],),
            "x1": (ps["X1"],),
            "x2": (ps["X2"],),
            "yhat1": (ps["Y11"], ps["X1"], self.yhat1.shape[-1]),
            "yhat2": (ps["Y21"], ps["X2"], self.yhat2.shape[-1]),
        }
        for f, shape in want.items():
            got = getattr(self, f).shape
            if got != shape:
                raise ValidationError(f"auxiliary kernel {f} has shape {got}, expected {shape}")


def transmitter_factors(problem, aux):
    return [
        problem.p_st,
        problem.common.kernel(),
        ConditionalKernel(("S", "T"), ("W", "U", "V"), aux.wuv, validate=False),
        ConditionalKernel(("W", "U", "V"), ("X",), aux.x, validate=False),
    ]


def full_factor_graph(problem, aux):
    """The chain p(s,t) p(k|s) p(w,u,v|s,t) p(x|w,u,v) p(x1) p(x2) p(y11,y21|x)
    p(y12|x2) p(y22|x1) p(yhat1|y11,x1) p(yhat2|y21,x2)."""
    aux.check_against(problem)
    return FactorGraphSpec(
        transmitter_factors(problem, aux)
        + [
            LabeledDistribution(("X1",), aux.x1, validate=False),
            LabeledDistribution(("X2",), aux.x2, validate=False),
            problem.bc,
            problem.link2,
            problem.link1,
            ConditionalKernel(("Y11", "X1"), ("Yhat1",), aux.yhat1, validate=False),
            ConditionalKernel(("Y21", "X2"), ("Yhat2",), aux.yhat2, validate=False),
        ]
    )


def full_joint(problem, aux, cap=DEFAULT_STATE_CAP):
    return FactoredJoint(full_factor_graph(problem, aux), cap)


def noncooperative_joint(problem, aux, cap=DEFAULT_STATE_CAP):
    """p(s,t) p(k|s) p(w,u,v|s,t) p(x|w,u,v) p(y1,y2|x): no links, no estimates."""
    aux.check_against(problem)
    bc = problem.bc.rename({"Y11": "Y1", "Y21": "Y2"})
    return FactoredJoint(FactorGraphSpec(transmitter_factors(problem, aux) + [bc]), cap)


def point_mass(size, symbol=0):
    p = np.zeros(size)
    p[symbol] = 1.0
    return p


def degenerate_cooperation(problem, aux):
    """Same transmitter design with X1, X2, Yhat1, Yhat2 pinned to symbol 0.

    Alphabets keep their sizes; every cooperation variable becomes a point
    mass, which is information-theoretically the same as removing it.
    """
    ps = problem.sizes
    yh1 = np.zeros((ps["Y11"], ps["X1"], 1))
    yh1[..., 0] = 1.0
    yh2 = np.zeros((ps["Y21"], ps["X2"], 1))
    yh2[..., 0] = 1.0
    return aux.replace(x1=point_mass(ps["X1"]), x2=point_mass(ps["X2"]), yhat1=yh1, yhat2=yh2)


def is_degenerate_cooperation(aux, tol=1e-12):
    def pinned(kernel):
        flat = kernel.reshape(-1, kernel.shape[-1])
        j = int(np.argmax(flat[0]))
        return np.all(np.abs(flat[:, j] - 1.0) <= tol)

    return all(pinned(getattr(aux, f)) for f in ("x1", "x2", "yhat1", "yhat2"))
