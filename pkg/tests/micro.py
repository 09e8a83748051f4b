"""Micro-instances for the simulator oracle: n = 2, binary alphabets, every
index space at most 4 and every kernel slice either a point mass or a
fair coin, so that typicality at n = 2 is attainable."""

from __future__ import annotations

import numpy as np

from coopbc.model import AuxiliaryKernels, ProblemSpec
from coopbc.region import RateVector
from coopbc.sim import SimConfig

SOURCES = (
    np.array([[0.5, 0.0], [0.0, 0.5]]),  # S = T
    np.array([[0.0, 0.5], [0.5, 0.0]]),  # T = not S
    np.array([[0.5, 0.5], [0.0, 0.0]]),  # S = 0, T a fair coin
    np.array([[0.25, 0.25], [0.25, 0.25]]),  # never typical at n = 2
)
RATE_CHOICES = (0.0, 0.5, 1.0)


def _slice(rng, n_out, p_coin):
    row = np.zeros(n_out)
    if n_out > 1 and rng.random() < p_coin:
        a, b = rng.choice(n_out, size=2, replace=False)
        row[a] = row[b] = 0.5
    else:
        row[rng.integers(n_out)] = 1.0
    return row


def _kernel(rng, shape_in, n_out, p_coin):
    rows = [_slice(rng, n_out, p_coin) for _ in range(int(np.prod(shape_in, dtype=int)))]
    return np.array(rows).reshape(tuple(shape_in) + (n_out,))


def micro_instance(seed):
    rng = np.random.default_rng([7, seed])
    p_st = SOURCES[seed % len(SOURCES)] if seed % 5 else SOURCES[0]
    # even seeds: clean cooperation (identity links, pinned relay inputs,
    # constant estimates, zero conference rates) so step 3 decides the block
    clean = seed % 2 == 0
    bc = _kernel(rng, (2,), 4, 0.2).reshape(2, 2, 2)
    link1 = np.eye(2) if clean else _kernel(rng, (2,), 2, 0.2)
    link2 = np.eye(2) if clean else _kernel(rng, (2,), 2, 0.2)
    problem = ProblemSpec.from_arrays(p_st, bc, link1, link2)
    w, u, v = (int(rng.integers(1, 3)) for _ in range(3))
    wuv = _kernel(rng, (2, 2), w * u * v, 0.1).reshape(2, 2, w, u, v)
    n_yhat = (1, 1) if clean else tuple(int(rng.integers(1, 3)) for _ in range(2))
    aux = AuxiliaryKernels(
        wuv,
        _kernel(rng, (w, u, v), 2, 0.1),
        _slice(rng, 2, 0.0 if clean else 0.3),
        _slice(rng, 2, 0.0 if clean else 0.3),
        _kernel(rng, (2, 2), n_yhat[0], 0.2),
        _kernel(rng, (2, 2), n_yhat[1], 0.2),
    )
    rates = [float(rng.choice(RATE_CHOICES)) for _ in range(9)]
    if clean:
        rates[5:] = [0.0] * 4
    rates = RateVector(*rates)
    cfg = SimConfig(
        n=2,
        blocks=int(rng.integers(3, 5)),
        delta=float(rng.choice([0.2, 0.5])),
        rates=rates,
        trials=4,
        seed=int(seed),
        keep_traces=True,
    )
    return problem, aux, cfg
