import numpy as np
import pytest

from coopbc.errors import InconsistencyError, StateSpaceError, ValidationError
from coopbc.instances import dsbs_bsc_problem, noiseless8_aux, noiseless_problem
from coopbc.search import (
    AuxiliaryCertificate,
    SearchConfig,
    objective,
    project_simplex,
    search,
    seed_certificate,
)

SMALL = dict(restarts=2, iterations=60)


def test_deterministic():
    p = dsbs_bsc_problem()
    a = search(p, SearchConfig(seed=4, **SMALL))
    b = search(p, SearchConfig(seed=4, **SMALL))
    assert a.best.report == b.best.report
    for f in ("wuv", "x", "x1", "x2", "yhat1", "yhat2"):
        assert np.array_equal(getattr(a.best.kernels, f), getattr(b.best.kernels, f))
    c = search(p, SearchConfig(seed=5, **SMALL))
    assert c.best.report != a.best.report


def test_trace_is_monotone():
    res = search(dsbs_bsc_problem(), SearchConfig(seed=1, **SMALL))
    for trace in res.restarts:
        h = np.array(trace.history)
        assert len(h) == SMALL["iterations"] + 1
        assert np.all(np.diff(h) >= 0)
        assert trace.objective == h[-1]


def test_warm_start_dominates_its_seed():
    p = noiseless_problem(8)
    seed = seed_certificate(p, noiseless8_aux(p))
    res = search(p, SearchConfig(w_size=2, u_size=2, v_size=2, yhat1_size=1, yhat2_size=1,
                                 **SMALL), warm_start=seed)
    assert res.restarts[0].objective >= seed.report.min_margin
    assert res.found


def test_certificate_verification():
    p = noiseless_problem(8)
    cert = seed_certificate(p, noiseless8_aux(p))
    assert cert.verify(p).admissible
    assert objective(cert, p) == pytest.approx(1.0)
    forged = AuxiliaryCertificate(cert.kernels, cert.report.__class__(2, 1, 1, 2, 1, 1))
    with pytest.raises(InconsistencyError):
        forged.verify(p)


def test_project_simplex():
    rng = np.random.default_rng(0)
    for _ in range(50):
        v = rng.normal(size=5) * 3
        p = project_simplex(v)
        assert p.min() >= 0 and p.sum() == pytest.approx(1.0)
        # the projection is at least as close as any random simplex point
        q = rng.dirichlet(np.ones(5))
        assert np.linalg.norm(v - p) <= np.linalg.norm(v - q) + 1e-12


def test_config_validation():
    p = dsbs_bsc_problem()
    with pytest.raises(ValidationError):
        SearchConfig(restarts=0).resolve(p)
    with pytest.raises(ValidationError):
        SearchConfig(objective="max").resolve(p)
    with pytest.raises(ValidationError):
        SearchConfig(w_size=0.5).resolve(p)
    with pytest.raises(StateSpaceError):
        SearchConfig(w_size=100, u_size=100, v_size=100, cap=10**5).resolve(p)


def test_weighted_objective_runs():
    res = search(dsbs_bsc_problem(), SearchConfig(objective="weighted-margin", **SMALL))
    assert res.best.report is not None
