import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import central_difference
from swarm_anneal.potentials import (
    DOUBLE_WELL,
    POTENTIALS,
    SIX_HUMP_CAMEL,
    double_well_1d,
    double_well_1d_grad,
    get_potential,
    grad,
    six_hump_camel,
)

KNOTS = (-6.0, -2.0, 2.0, 6.0)


@pytest.mark.parametrize("x, u", [(4.0, 0.0), (-3.0, 2.0), (0.0, 8.0), (-6.0, 20.0)])
def test_double_well_values(x, u):
    assert double_well_1d(x) == u


@pytest.mark.parametrize("knot", KNOTS)
def test_double_well_continuous_at_knots(knot):
    left = {-6.0: lambda x: -12 * x - 52, -2.0: lambda x: 2 * (x + 3) ** 2 + 2, 2.0: lambda x: 8 - x**2, 6.0: lambda x: (x - 4) ** 2}
    right = {-6.0: lambda x: 2 * (x + 3) ** 2 + 2, -2.0: lambda x: 8 - x**2, 2.0: lambda x: (x - 4) ** 2, 6.0: lambda x: 4 * x - 20}
    assert left[knot](knot) == right[knot](knot) == double_well_1d(knot)


def test_double_well_knot_gradient_uses_closed_side():
    # at x=2 the middle branch 8 - x^2 applies, at x=-2 the left branch 2(x+3)^2+2
    assert double_well_1d_grad(2.0) == -4.0
    assert double_well_1d_grad(-2.0) == 4.0
    assert double_well_1d_grad(-6.0) == -12.0
    assert double_well_1d_grad(6.0) == 4.0


def test_camel_values():
    assert six_hump_camel(0.0, 0.0) == pytest.approx(1.0316)
    assert abs(six_hump_camel(0.0898, -0.7126)) < 1e-4
    assert six_hump_camel(-0.0898, 0.7126) == six_hump_camel(0.0898, -0.7126)


def test_known_gradients():
    assert grad(DOUBLE_WELL, 4.0)[0] == 0.0
    np.testing.assert_array_equal(grad(SIX_HUMP_CAMEL, [0.0, 0.0]), [0.0, 0.0])
    fd = central_difference(SIX_HUMP_CAMEL, np.array([1.0, 1.0]))
    np.testing.assert_allclose(grad(SIX_HUMP_CAMEL, [1.0, 1.0]), fd, rtol=1e-5)


@pytest.mark.parametrize("pot", list(POTENTIALS.values()), ids=lambda p: p.name)
def test_gradient_matches_finite_differences(pot):
    rng = np.random.default_rng(0)
    box = np.array(pot.domain_box)
    pts = rng.uniform(box[:, 0], box[:, 1], size=(100, pot.dim))
    for x in pts:
        if pot is DOUBLE_WELL and min(abs(x[0] - k) for k in KNOTS) < 1e-3:
            continue
        g = pot.grad(x)
        fd = central_difference(pot, x)
        assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(g))


@pytest.mark.parametrize("pot", list(POTENTIALS.values()), ids=lambda p: p.name)
def test_nonnegative_on_grid(pot):
    if pot.dim == 1:
        x = np.linspace(*pot.domain_box[0], 10_000)[:, None]
    else:
        a = np.linspace(*pot.domain_box[0], 100)
        b = np.linspace(*pot.domain_box[1], 100)
        x = np.stack([g.ravel() for g in np.meshgrid(a, b)], axis=1)
    u = pot(x)
    # the shifted camel dips to about -3e-5 just off its rounded minimizers
    assert u.min() >= (-1e-4 if pot is SIX_HUMP_CAMEL else 0.0)


def test_batch_and_single_point_shapes():
    assert isinstance(DOUBLE_WELL(4.0), float)
    assert DOUBLE_WELL(np.array([1.0, 2.0, 3.0])).shape == (3,)
    assert DOUBLE_WELL(np.zeros((5, 1))).shape == (5,)
    assert DOUBLE_WELL.grad(np.zeros((5, 1))).shape == (5, 1)
    assert isinstance(SIX_HUMP_CAMEL([0.0, 0.0]), float)
    assert SIX_HUMP_CAMEL.grad(np.zeros((4, 2))).shape == (4, 2)


def test_registry():
    assert get_potential("double_well") is DOUBLE_WELL
    with pytest.raises(ValueError):
        get_potential("rosenbrock")
    assert DOUBLE_WELL.min_value == 0.0


@given(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))
def test_camel_point_symmetry(a, b):
    assert six_hump_camel(a, b) == pytest.approx(six_hump_camel(-a, -b), abs=1e-15)
