from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from voroshot import geometry, transforms
from voroshot.data import sample_episode
from voroshot.errors import DomainError
from voroshot.surrogate import (
    BasePrototypeCache, SurrogateParams, base_prototypes, classify_surrogate,
    combined_criterion, select_surrogates, surrogate_criterion, surrogate_repr,
)

vec = arrays(np.float64, st.integers(2, 6), elements=st.floats(0.01, 100))


def test_params_validation():
    with pytest.raises(ValueError):
        SurrogateParams(R=0)
    with pytest.raises(ValueError):
        SurrogateParams(beta=0, gamma=0)
    with pytest.raises(ValueError):
        SurrogateParams(beta=-1)


def test_select_surrogates_union_sorted():
    base = np.array([[0.0], [10.0], [1.0], [11.0], [50.0]])
    novel = np.array([[0.2], [10.4]])
    assert list(select_surrogates(novel, base, 1)) == [0, 1]
    assert list(select_surrogates(novel, base, 2)) == [0, 1, 2, 3]


def test_select_surrogates_tie_lowest_index():
    base = np.array([[1.0], [-1.0]])
    assert list(select_surrogates(np.array([[0.0]]), base, 1)) == [0]


def test_select_surrogates_bad_R():
    with pytest.raises(ValueError):
        select_surrogates(np.zeros((1, 1)), np.zeros((2, 1)), 3)


def test_surrogate_repr_values():
    out = surrogate_repr(np.array([0.0, 0.0]), np.array([[3.0, 4.0], [1.0, 0.0]]))
    assert np.array_equal(out, [25.0, 1.0])


def test_combined_criterion_oracle():
    d = np.array([1.0, 3.0])
    dpp = np.array([2.0, 2.0])
    out = combined_criterion(d, dpp, SurrogateParams(1, 2.0, 1.0))
    assert np.allclose(out, 2.0 * d / 4.0 + dpp / 4.0)


def test_combined_criterion_zero_norm():
    with pytest.raises(DomainError):
        combined_criterion(np.zeros(3), np.ones(3), SurrogateParams())


@settings(max_examples=60, deadline=None)
@given(vec, st.floats(1e-3, 1e3), st.floats(0.1, 5), st.floats(0.1, 5))
def test_combined_criterion_scale_invariance(d, c, beta, gamma):
    dpp = d[::-1].copy()
    p = SurrogateParams(1, beta, gamma)
    assert np.allclose(combined_criterion(d, dpp, p), combined_criterion(c * d, dpp, p))
    assert np.allclose(combined_criterion(d, dpp, p), combined_criterion(d, c * dpp, p))


def test_gamma_zero_equals_vd(small_banks, small_spec):
    base, novel, _ = small_banks
    bp = base_prototypes(base)
    for i in range(10):
        ep = sample_episode(novel, small_spec, i)
        s = transforms.apply(transforms.IDENTITY, ep.support)
        q = transforms.apply(transforms.IDENTITY, ep.query)
        protos = s.reshape(ep.k, ep.n_shot, -1).mean(axis=1)
        got = classify_surrogate(ep, bp, SurrogateParams(2, 1.0, 0.0))
        assert np.array_equal(got, geometry.assign_vd_many(protos, q))


def test_criterion_shape(small_banks, small_spec):
    base, novel, _ = small_banks
    ep = sample_episode(novel, small_spec, 0)
    bp = base_prototypes(base)
    protos = ep.support_by_class(0).mean(axis=1)
    crit = surrogate_criterion(protos, ep.query, bp, SurrogateParams(2))
    assert crit.shape == (ep.query.shape[0], ep.k)


def test_plain_euclidean_surrogate_metric(small_banks, small_spec):
    base, novel, _ = small_banks
    ep = sample_episode(novel, small_spec, 1)
    bp = base_prototypes(base)
    p = SurrogateParams(2, 0.0, 1.0)
    a = classify_surrogate(ep, bp, p, surrogate_metric="sqeuclidean")
    b = classify_surrogate(ep, bp, p, surrogate_metric="euclidean")
    # with beta=0 the criterion is a monotone function of the surrogate distance
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        classify_surrogate(ep, bp, p, surrogate_metric="cosine")


def test_base_prototypes_per_view(small_banks):
    base = small_banks[0]
    v0 = base_prototypes(base)
    v1 = base_prototypes(base, view=1)
    assert v0.centers.shape == v1.centers.shape == (base.n_classes, base.dim)
    assert not np.allclose(v0.centers, v1.centers)
    cache = BasePrototypeCache(base)
    assert cache.get(transforms.IDENTITY, 1) is cache.get(transforms.IDENTITY, 1)
    assert len(v0) == base.n_classes
