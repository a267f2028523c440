import math

import numpy as np
import pytest

from contact_duality.coupling import (
    CouplingModel,
    coupling_value,
    dirichlet,
    neumann,
    normal_vector,
    robin,
    scale_invariant,
    uniform_model,
)
from contact_duality.errors import (
    DegenerateRadius,
    IndexOutOfRange,
    UnsupportedCoupling,
)


def test_normal_vectors():
    np.testing.assert_array_equal(normal_vector(1, 3), [1.0, -1.0, 0.0])
    np.testing.assert_array_equal(normal_vector(2, 3), [0.0, 1.0, -1.0])
    for n in (2, 3, 5):
        for j in range(1, n):
            np.testing.assert_allclose(np.linalg.norm(normal_vector(j, n)), np.sqrt(2))
    with pytest.raises(IndexOutOfRange):
        normal_vector(0, 3)
    with pytest.raises(IndexOutOfRange):
        normal_vector(3, 3)


def test_scale_invariant_value():
    model = uniform_model(3, scale_invariant(2.0))
    x = np.array([0.5, 0.5, -1.0])
    a = coupling_value(model, 1, x)
    np.testing.assert_allclose(a, 2.0 * np.sqrt(1.5), rtol=1e-12)
    np.testing.assert_allclose(a, 2.44949, atol=5e-6)


def test_scale_invariant_translation_invariance():
    model = uniform_model(3, scale_invariant(1.5))
    rng = np.random.default_rng(3)
    for _ in range(10):
        c = rng.normal() * 5
        x = np.array([0.2, 0.2, -0.7])
        np.testing.assert_allclose(
            coupling_value(model, 1, x),
            coupling_value(model, 1, x + c),
            rtol=1e-12,
        )


def test_robin_constant_model():
    model = uniform_model(3, robin(-1.0))
    assert coupling_value(model, 2, np.array([1.0, 0.3, 0.3])) == -1.0
    assert coupling_value(model, 1, np.array([0.5, 0.5, 0.0])) == -1.0


def test_limit_sentinels():
    model = CouplingModel((neumann(), dirichlet()))
    assert math.isinf(coupling_value(model, 1, np.array([1.0, 1.0, 0.0])))
    assert coupling_value(model, 2, np.array([2.0, 1.0, 1.0])) == 0.0


def test_degenerate_radius():
    model = uniform_model(3, scale_invariant(1.0))
    with pytest.raises(DegenerateRadius):
        coupling_value(model, 1, np.array([0.5, 0.5, 0.5]))


def test_face_membership_enforced():
    model = uniform_model(3, robin(1.0))
    with pytest.raises(ValueError):
        coupling_value(model, 1, np.array([1.0, 0.0, -1.0]))


def test_scale_invariant_needs_three_bodies():
    with pytest.raises(UnsupportedCoupling):
        uniform_model(2, scale_invariant(1.0))


def test_entry_validation():
    with pytest.raises(UnsupportedCoupling):
        robin(0.0)
    model = uniform_model(4, robin(2.0))
    assert model.n == 4
    with pytest.raises(IndexOutOfRange):
        model.entry(4)
    assert model.label() == "robin:2,robin:2,robin:2"
