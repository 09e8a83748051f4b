"""Inputs for the special-case reduction checks, built from any spec."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .instances import identity_aux
from .model import degenerate_cooperation
from .region import _capacity_link, conferencing_problem


def noncoop_inputs(problem, aux=None):
    """The spec's transmitter design (or W = K, U = S, V = T when absent)
    with every cooperation variable pinned to one symbol."""
    aux = identity_aux(problem) if aux is None else aux
    return problem, degenerate_cooperation(problem, aux)


def _noiseless_links(problem, c12, c21):
    for cap, link in ((c21, problem.link1.mass), (c12, problem.link2.mass)):
        n, eye = _capacity_link(cap)
        if link.shape != eye.shape or not np.array_equal(link, eye):
            return False
    return True


def _uniform_inputs(problem, aux):
    ps = problem.sizes
    return aux.replace(x1=np.full(ps["X1"], 1.0 / ps["X1"]), x2=np.full(ps["X2"], 1.0 / ps["X2"]))


def drop_links(aux):
    """Adapt ``aux`` to single-symbol link alphabets: p(x1), p(x2) become
    point masses and each estimate kernel is averaged over its link input."""
    y1 = np.einsum("i,yiz->yz", aux.x1, aux.yhat1)[:, None, :]
    y2 = np.einsum("i,yiz->yz", aux.x2, aux.yhat2)[:, None, :]
    return aux.replace(x1=np.ones(1), x2=np.ones(1), yhat1=y1, yhat2=y2)


def conference_inputs(problem, aux, c12, c21, links="auto"):
    """(problem, aux, mode) for the conferencing check.

    ``links="channels"`` keeps the spec's links, which must already be
    noiseless 2**C-symbol channels; ``"removed"`` swaps them for
    single-symbol placeholders; ``"auto"`` picks channels when possible.
    Without auxiliary kernels, W = K, U = S, V = T is used with uniform link
    inputs.
    """
    if links not in ("auto", "channels", "removed"):
        raise ValidationError(f"reduce.links must be auto, channels or removed, got {links!r}")
    if aux is None:
        aux = _uniform_inputs(problem, identity_aux(problem))
    if links == "auto":
        links = "channels" if _noiseless_links(problem, c12, c21) else "removed"
    if links == "channels":
        return problem, aux, "channels"
    return conferencing_problem(problem, c12, c21, "removed"), drop_links(aux), "removed"
