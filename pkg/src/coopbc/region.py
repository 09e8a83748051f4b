"""Signed margins of the admissibility conditions and the raw rate system.

A margin is the slack of one inequality: positive means satisfied. The four
source-decoding inequalities are strict, the two link constraints are not.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import ValidationError
from .model import (
    COOPERATION_VARIABLES,
    FULL_VARIABLES,
    OBS1,
    OBS2,
    degenerate_cooperation,
    full_joint,
    is_degenerate_cooperation,
    noncooperative_joint,
)
from .prob import ConditionalKernel, FactoredJoint, FactorGraphSpec, LabeledDistribution
from .prob import entropy as H
from .prob import mutual_information as I

STRICT_EPS = 1e-9
CONSTRAINT_EPS = 1e-9
MARGIN_NAMES = ("m1", "m2", "m3", "m4", "c1", "c2")


@dataclass(frozen=True)
class MarginReport:
    m1: float
    m2: float
    m3: float
    m4: float
    c1: float
    c2: float
    eps: float = STRICT_EPS
    eps_c: float = CONSTRAINT_EPS
    admissible: bool = field(init=False)

    def __post_init__(self):
        ok = min(self.m1, self.m2, self.m3, self.m4) > self.eps and min(self.c1, self.c2) >= -self.eps_c
        object.__setattr__(self, "admissible", bool(ok))

    @property
    def values(self):
        return tuple(getattr(self, n) for n in MARGIN_NAMES)

    @property
    def min_margin(self):
        return min(self.values)

    def as_dict(self):
        return asdict(self)

    def max_deviation(self, other):
        return max(abs(a - b) for a, b in zip(self.values, other.values))


def _require(joint, names):
    missing = [n for n in names if n not in joint.names]
    if missing:
        raise ValidationError(f"joint is missing variables {missing}")


def _prefetch(joint, *groups):
    for g in groups:
        joint.marginal(g)


def _source_margins(joint, obs1, obs2):
    src = ("S", "T", "K", "W", "U", "V")
    _prefetch(joint, src + obs1, src + obs2)
    i_swu = I(joint, "S W U", obs1)
    i_twv = I(joint, "T W V", obs2)
    i_sutv = I(joint, "S U", "T V", "K W")
    m1 = i_swu - I(joint, "T", "W U", "S") - H(joint, "S")
    m2 = i_twv - I(joint, "S", "W V", "T") - H(joint, "T")
    m3 = (
        min(I(joint, "K W", obs1), I(joint, "K W", obs2))
        + I(joint, "S U", obs1, "K W")
        + I(joint, "T V", obs2, "K W")
        - i_sutv
        - H(joint, "S T")
    )
    m4 = i_twv + i_swu - i_sutv - I(joint, "S T", "K W") - H(joint, "S T")
    return m1, m2, m3, m4


def link_margins(joint):
    """(c1, c2): each link's capacity use against the estimate's net cost."""
    _prefetch(joint, ("X1", "Y22", "Yhat1", "Y11", "Y21"), ("X2", "Y12", "Yhat2", "Y21", "Y11"))
    c1 = I(joint, "X1", "Y22") - I(joint, "Yhat1", "Y11", "X1") + I(joint, "Yhat1", "Y21 Y22", "X1")
    c2 = I(joint, "X2", "Y12") - I(joint, "Yhat2", "Y21", "X2") + I(joint, "Yhat2", "Y11 Y12", "X2")
    return c1, c2


def theorem1_margins(joint, eps=STRICT_EPS, eps_c=CONSTRAINT_EPS):
    """Margins of the four source conditions and the two link constraints.

    ``joint`` is a :class:`LabeledDistribution` or :class:`FactoredJoint` over
    all fifteen chain variables (K included).
    """
    _require(joint, FULL_VARIABLES)
    if isinstance(joint, LabeledDistribution):
        total = float(joint.mass.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"joint is not normalized (sum {total})")
    m = _source_margins(joint, OBS1, OBS2)
    return MarginReport(*m, *link_margins(joint), eps=eps, eps_c=eps_c)


def han_costa_margins(joint, eps=STRICT_EPS, eps_c=CONSTRAINT_EPS):
    """Margins for the broadcast channel without cooperation.

    ``joint`` is over S, T, K, W, U, V, X, Y1, Y2; the link constraints are
    vacuous and reported as zero.
    """
    extra = [n for n in COOPERATION_VARIABLES if n in joint.names]
    if extra:
        raise ValidationError(f"non-cooperative joint must not contain {extra}")
    _require(joint, ("S", "T", "K", "W", "U", "V", "X", "Y1", "Y2"))
    return MarginReport(*_source_margins(joint, ("Y1",), ("Y2",)), 0.0, 0.0, eps=eps, eps_c=eps_c)


# ---------------------------------------------------------------------------
# raw rate system


@dataclass(frozen=True)
class RateVector:
    rho0: float = 0.0
    rho1: float = 0.0
    rho2: float = 0.0
    r1: float = 0.0
    r2: float = 0.0
    R1: float = 0.0
    R2: float = 0.0
    Rs1: float = 0.0
    Rs2: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v) or v < 0:
                raise ValidationError(f"rate {f.name} must be finite and nonnegative, got {v}")

    @classmethod
    def names(cls):
        return tuple(f.name for f in fields(cls))

    def as_array(self):
        return np.array([getattr(self, n) for n in self.names()])

    @classmethod
    def from_array(cls, values, clip=True):
        values = [float(v) for v in values]
        if clip:
            values = [0.0 if -1e-12 < v < 0 else v for v in values]
        return cls(*values)

    def as_dict(self):
        return asdict(self)


RATE_NAMES = RateVector.names()


@dataclass(frozen=True)
class Constraint:
    """``coeffs . x >= bound`` (``>`` when strict) over the nine rates."""

    coeffs: tuple
    bound: float
    strict: bool
    tag: str

    def slack(self, x):
        return float(np.dot(self.coeffs, x) - self.bound)

    def describe(self):
        terms = [
            f"{'+' if c > 0 else '-'} {abs(c):g}*{n}" for c, n in zip(self.coeffs, RATE_NAMES) if c
        ]
        lhs = " ".join(terms).lstrip("+ ") or "0"
        return f"{lhs} {'>' if self.strict else '>='} {self.bound:.9f}"


@dataclass(frozen=True)
class LinearSystem:
    constraints: tuple

    def __post_init__(self):
        for c in self.constraints:
            if len(c.coeffs) != len(RATE_NAMES):
                raise ValidationError(f"constraint {c.tag!r} must have {len(RATE_NAMES)} coefficients")
            if not c.tag:
                raise ValidationError("every constraint needs a provenance tag")

    def __len__(self):
        return len(self.constraints)

    def satisfied_by(self, rates, slack=0.0, tol=1e-12):
        x = rates.as_array() if isinstance(rates, RateVector) else np.asarray(rates)
        for c in self.constraints:
            s = c.slack(x)
            if not c.strict:
                ok = s >= -tol
            elif slack > 0:
                ok = s >= slack - tol
            else:
                ok = s > 0
            if not ok:
                return False
        return True


def _row(tag, bound, strict=False, **coeffs):
    unknown = set(coeffs) - set(RATE_NAMES)
    if unknown:
        raise ValidationError(f"unknown rate names {unknown}")
    return Constraint(tuple(float(coeffs.get(n, 0.0)) for n in RATE_NAMES), float(bound), strict, tag)


def raw_system(joint):
    """Rate constraints of the coding scheme before the auxiliary rates are eliminated.

    Rates: rho0/rho1/rho2 (codebook sizes), r1/r2 (source partitions), R1/R2
    (estimate codebooks), Rs1/Rs2 (conference messages).
    """
    _require(joint, FULL_VARIABLES)
    h_s_kw = H(joint, "S", "K W")
    h_t_kw = H(joint, "T", "K W")
    h_k = H(joint, "K")
    rows = [
        _row("cover:common-codeword", I(joint, "S T", "W", "K"), True, rho0=1),
        _row("cover:private-S", I(joint, "T", "U", "S W"), True, rho1=1),
        _row("cover:private-T", I(joint, "S", "V", "T W"), True, rho2=1),
        _row("cover:private-joint",
             I(joint, "S U", "T V", "W") - I(joint, "S", "T", "W"), True, rho1=1, rho2=1),
        _row("link:decode-s2", -I(joint, "X2", "Y12"), Rs2=-1),
        _row("link:decode-s1", -I(joint, "X1", "Y22"), Rs1=-1),
        _row("relay1:compress", I(joint, "Yhat1", "Y11", "X1"), R1=1),
        _row("relay2:compress", I(joint, "Yhat2", "Y21", "X2"), R2=1),
        _row("relay1:bin-decode", -I(joint, "Yhat1", "Y21 Y22", "X1"), R1=-1, Rs1=1),
        _row("relay2:bin-decode", -I(joint, "Yhat2", "Y11 Y12", "X2"), R2=-1, Rs2=1),
        _row("rx1:same-bin", h_s_kw - I(joint, "S U", OBS1, "K W"), r1=1, rho1=-1),
        _row("rx2:same-bin", h_t_kw - I(joint, "T V", OBS2, "K W"), r2=1, rho2=-1),
        _row("rx1:other-bin", h_s_kw + h_k - I(joint, "S U W", OBS1), r2=-1, rho0=-1, rho1=-1),
        _row("rx2:other-bin", h_t_kw + h_k - I(joint, "T V W", OBS2), r1=-1, rho0=-1, rho2=-1),
    ]
    rows += [_row(f"nonneg:{n}", 0.0, **{n: 1}) for n in RATE_NAMES]
    return LinearSystem(tuple(rows))


# ---------------------------------------------------------------------------
# special-case reductions


@dataclass(frozen=True)
class ReductionReport:
    mode: str
    theorem: MarginReport
    reference: MarginReport
    deviations: dict
    checks: dict

    @property
    def max_deviation(self):
        return max(self.deviations.values())

    def as_dict(self):
        return {
            "mode": self.mode,
            "theorem": self.theorem.as_dict(),
            "reference": self.reference.as_dict(),
            "deviations": dict(self.deviations),
            "max_deviation": self.max_deviation,
            "checks": dict(self.checks),
        }


def _deviations(a, b):
    return {n: abs(x - y) for n, x, y in zip(MARGIN_NAMES, a.values, b.values)}


def reduction_check_noncooperative(problem, aux):
    """Compare the full margins against the non-cooperative evaluator.

    ``aux`` must pin X1, X2, Yhat1 and Yhat2 to single symbols.
    """
    if not is_degenerate_cooperation(aux):
        raise ValidationError("non-cooperative check needs degenerate X1, X2, Yhat1, Yhat2")
    thm = theorem1_margins(full_joint(problem, aux))
    ref = han_costa_margins(noncooperative_joint(problem, aux))
    return ReductionReport("noncoop", thm, ref, _deviations(thm, ref), {"c1": thm.c1, "c2": thm.c2})


def _capacity_link(capacity):
    if capacity < 0 or capacity != int(capacity):
        raise ValidationError(f"link capacity must be a nonnegative integer number of bits, got {capacity}")
    size = 2 ** int(capacity)
    return size, np.eye(size)


def _conference_reference(problem, aux, c12, c21, links_present):
    """Independent-message evaluator on a joint without K and W.

    Sources enter only through H(S) and H(T); the transmitter is the
    W-marginalized kernel p(u,v|s,t), p(x|u,v).
    """
    ps = problem.sizes
    p_s = problem.p_st.marginal("S")
    p_t = problem.p_st.marginal("T")
    p_w_uv = np.einsum("st,stwuv->wuv", problem.p_st.mass, aux.wuv)
    p_uv_st = aux.wuv.sum(axis=2)
    p_uv = p_w_uv.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        x_uv = np.einsum("wuv,wuvx->uvx", p_w_uv, aux.x) / p_uv[..., None]
    x_uv = np.where(np.isfinite(x_uv), x_uv, 1.0 / ps["X"])
    factors = [
        p_s,
        p_t,
        ConditionalKernel(("S", "T"), ("U", "V"), p_uv_st, validate=False),
        ConditionalKernel(("U", "V"), ("X",), x_uv, validate=False),
        problem.bc,
    ]
    if links_present:
        factors += [
            LabeledDistribution(("X1",), aux.x1, validate=False),
            LabeledDistribution(("X2",), aux.x2, validate=False),
            problem.link2,
            problem.link1,
            ConditionalKernel(("Y11", "X1"), ("Yhat1",), aux.yhat1, validate=False),
            ConditionalKernel(("Y21", "X2"), ("Yhat2",), aux.yhat2, validate=False),
        ]
        o1, o2 = OBS1, OBS2
        cond1, cond2 = "X1", "X2"
        side1, side2 = "Y21 Y22", "Y11 Y12"
    else:
        factors += [
            ConditionalKernel(("Y11",), ("Yhat1",), aux.yhat1[:, 0, :], validate=False),
            ConditionalKernel(("Y21",), ("Yhat2",), aux.yhat2[:, 0, :], validate=False),
        ]
        o1, o2 = ("Yhat2", "Y11"), ("Yhat1", "Y21")
        cond1 = cond2 = ()
        side1, side2 = "Y21", "Y11"
    j = FactoredJoint(FactorGraphSpec(factors))
    r1, r2 = H(j, "S"), H(j, "T")
    a1 = I(j, "S U", o1)
    a2 = I(j, "T V", o2)
    coupling = I(j, "S U", "T V")
    m1 = a1 - I(j, "T", "U", "S") - r1
    m2 = a2 - I(j, "S", "V", "T") - r2
    m34 = a1 + a2 - coupling - (r1 + r2)
    c1 = c21 - I(j, "Yhat1", "Y11", cond1) + I(j, "Yhat1", side1, cond1)
    c2 = c12 - I(j, "Yhat2", "Y21", cond2) + I(j, "Yhat2", side2, cond2)
    return MarginReport(m1, m2, m34, m34, c1, c2)


def conferencing_problem(problem, c12, c21, mode="channels"):
    """Replace the links by noiseless ones of ``c12``/``c21`` bits, or by
    single-symbol placeholders when ``mode == "removed"``."""
    from .model import ProblemSpec

    if mode == "channels":
        n21, l1 = _capacity_link(c21)
        n12, l2 = _capacity_link(c12)
    elif mode == "removed":
        _capacity_link(c21)
        _capacity_link(c12)
        n21 = n12 = 1
        l1 = l2 = np.ones((1, 1))
    else:
        raise ValidationError(f"unknown conferencing mode {mode!r}")
    return ProblemSpec.from_arrays(problem.p_st.mass, problem.bc.mass, l1, l2)


def reduction_check_conferencing(problem, aux, c12, c21, mode="channels", tol=1e-12):
    """Compare the full margins with the independent-message cooperative form.

    ``mode="channels"``: the links must be noiseless identity channels on
    2**C symbols and p(x1), p(x2) uniform, so I(X1;Y22) = C21 exactly.
    ``mode="removed"``: the links are single-symbol placeholders and the
    capacities are substituted for I(X1;Y22), I(X2;Y12) in c1, c2.
    """
    if abs(I(problem.p_st, "S", "T")) > tol:
        raise ValidationError("conferencing reduction needs independent sources")
    w_marg = np.einsum("st,stwuv->w", problem.p_st.mass, aux.wuv)
    if np.count_nonzero(w_marg > tol) > 1:
        raise ValidationError("conferencing reduction needs a single-symbol W")
    ps = problem.sizes
    if mode == "channels":
        for cap, size, link, px, name in (
            (c21, ps["X1"], problem.link1.mass, aux.x1, "link1"),
            (c12, ps["X2"], problem.link2.mass, aux.x2, "link2"),
        ):
            n, eye = _capacity_link(cap)
            if size != n or link.shape != eye.shape or not np.array_equal(link, eye):
                raise ValidationError(f"{name} must be a noiseless {n}-symbol channel for {cap} bits")
            if not np.allclose(px, 1.0 / n, atol=tol, rtol=0):
                raise ValidationError(f"{name} input must be uniform for exact capacity")
    elif mode == "removed":
        if ps["X1"] != 1 or ps["X2"] != 1:
            raise ValidationError("removed-links mode needs single-symbol link alphabets")
        _capacity_link(c21)
        _capacity_link(c12)
    else:
        raise ValidationError(f"unknown conferencing mode {mode!r}")

    joint = full_joint(problem, aux)
    # capacity terms first, while their marginals come straight from the link factors
    checks = {
        "I(X1;Y22)": I(joint, "X1", "Y22"),
        "I(X2;Y12)": I(joint, "X2", "Y12"),
        "H(K)": H(joint, "K"),
        "I(S,T;K,W)": I(joint, "S T", "K W"),
    }
    thm = theorem1_margins(joint)
    if mode == "removed":
        thm = MarginReport(thm.m1, thm.m2, thm.m3, thm.m4, thm.c1 + c21, thm.c2 + c12)
    ref = _conference_reference(problem, aux, c12, c21, links_present=(mode == "channels"))
    return ReductionReport(f"conference-{mode}", thm, ref, _deviations(thm, ref), checks)


__all__ = [
    "MarginReport",
    "RateVector",
    "Constraint",
    "LinearSystem",
    "ReductionReport",
    "theorem1_margins",
    "han_costa_margins",
    "link_margins",
    "raw_system",
    "reduction_check_noncooperative",
    "reduction_check_conferencing",
    "conferencing_problem",
    "degenerate_cooperation",
]
