import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coopbc.common_part import common_part, lift_with_k
from coopbc.errors import ValidationError
from coopbc.instances import dsbs
from coopbc.prob import LabeledDistribution, entropy
from oracles import same_partition, union_find_components


def test_dsbs_has_trivial_common_part():
    cp = common_part(LabeledDistribution(("S", "T"), dsbs(0.25)))
    assert cp.k_size == 1
    assert cp.alpha == (0, 0) and cp.beta == (0, 0)


def test_identical_sources():
    cp = common_part(LabeledDistribution(("S", "T"), np.diag([0.2, 0.3, 0.5])))
    assert cp.k_size == 3
    assert np.allclose(cp.k_marginal, [0.2, 0.3, 0.5])


def test_block_diagonal():
    t = np.zeros((4, 4))
    t[:2, :2] = 0.1
    t[2:, 2:] = 0.15
    cp = common_part(LabeledDistribution(("S", "T"), t))
    assert cp.k_size == 2
    assert cp.alpha == (0, 0, 1, 1)
    assert cp.k_marginal.tolist() == pytest.approx([0.4, 0.6])


def test_zero_mass_symbols_get_own_components():
    t = np.array([[0.5, 0.0], [0.0, 0.0]])
    t[0, 0] = 1.0
    cp = common_part(LabeledDistribution(("S", "T"), t))
    assert cp.k_size == 3
    assert cp.k_marginal[cp.alpha[1]] == 0.0


def test_no_mass_rejected():
    with pytest.raises(ValidationError):
        common_part(LabeledDistribution(("S", "T"), np.zeros((2, 2)), validate=False))


@given(arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.sampled_from([0.0, 0.0, 0.3, 1.0])))
def test_matches_union_find(t):
    if t.sum() == 0:
        t[0, 0] = 1.0
    d = LabeledDistribution(("S", "T"), t / t.sum())
    cp = common_part(d)
    ra, rb = union_find_components(d.mass)
    assert same_partition(list(cp.alpha) + list(cp.beta), ra + rb)
    assert cp.k_size == len(set(ra + rb))
    lifted = lift_with_k(d, cp)
    assert abs(entropy(lifted, "K", "S")) <= 1e-12
    assert abs(entropy(lifted, "K", "T")) <= 1e-12
    assert cp.k_marginal.sum() == pytest.approx(1.0)
