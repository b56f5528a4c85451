import math

import numpy as np
import pytest

from slowlayers.errors import EmptySetError, EpsilonTooLargeError, ValidationError, WrongRegimeError
from slowlayers.grid import Field, Grid
from slowlayers.layers import (
    StepFunction,
    build_layer_datum,
    build_stationary_periodic,
    build_stationary_subcritical,
    equidistant_zeros,
    hausdorff_distance,
    interfaces_of_field,
    l1_distance,
    layer_datum_energy,
    layer_datum_gap,
    max_separation_radius,
    step_interfaces,
)
from slowlayers.potential import PotentialParams, transition_energy, wave_steepness
from slowlayers.profiles import support_radius
from slowlayers.solver import discrete_energy, rhs

FIG_JUMPS = (-3.4, -2.0, -0.5, 0.8, 2.2, 3.2)


def sign_changes(u):
    s = np.sign(u[u != 0])
    return int(np.sum(s[1:] != s[:-1]))


def test_step_function_values():
    v = StepFunction(0, 3, (1, 2), first_sign=-1)
    assert v(0.5) == -1 and v(1.5) == 1 and v(2.5) == -1
    assert list(v.layer_signs()) == [1, -1]
    assert list(v.midpoints()) == [0, 1.5, 3]
    assert v.N == 2


@pytest.mark.parametrize("jumps", [(1, 1), (2, 1), (0, 1), (1, 3)])
def test_step_function_rejects(jumps):
    with pytest.raises(ValidationError):
        StepFunction(0, 3, jumps)


def test_step_function_rejects_sign():
    with pytest.raises(ValidationError):
        StepFunction(0, 3, (1,), first_sign=0)


def test_separation_radius_figure_layout():
    v = StepFunction(-4, 4, FIG_JUMPS)
    gaps = [0.6, 1.4 / 2, 1.5 / 2, 1.3 / 2, 1.4 / 2, 1.0 / 2, 0.8]
    assert max_separation_radius(v) == pytest.approx(min(gaps)) == pytest.approx(0.5)


def test_separation_radius_single_jump():
    assert max_separation_radius(StepFunction(0, 2, (1,))) == 1.0


@pytest.mark.parametrize("eps", [0.2, 0.1, 0.05])
def test_layer_datum_sign_changes(eps):
    params = PotentialParams(2, 2, eps)
    v = StepFunction(-4, 4, FIG_JUMPS)
    u = build_layer_datum(v, params, Grid.resolving(-4, 4, eps))
    assert sign_changes(u.u) == 6
    assert np.all(np.sign(u.u[[0, -1]]) == [-1, -1])


@pytest.mark.parametrize("p,n", [(2, 4), (4, 2), (3, 4)])
def test_layer_datum_other_regimes(p, n):
    params = PotentialParams(p, n, 0.05)
    v = StepFunction(-4, 4, FIG_JUMPS, first_sign=1)
    u = build_layer_datum(v, params, Grid.resolving(-4, 4, 0.05))
    assert sign_changes(u.u) == 6
    assert u.u[0] > 0


def test_layer_datum_l1_decreases():
    v = StepFunction(-4, 4, FIG_JUMPS)
    ds = []
    for eps in (0.2, 0.1, 0.05):
        params = PotentialParams(2, 2, eps)
        ds.append(l1_distance(build_layer_datum(v, params, Grid.resolving(-4, 4, eps)), v))
    assert ds[0] > ds[1] > ds[2] > 0


def test_compacton_datum_plateaus():
    params = PotentialParams(4, 2, 0.05)
    v = StepFunction(-3, 3, (-1, 1))
    grid = Grid.resolving(-3, 3, 0.05)
    xbar = support_radius(params)
    x = grid.x
    # the discrete compacton may reach one cell past x_bar
    for polish, r in ((False, xbar), (True, xbar + 2 * grid.h)):
        u = build_stationary_subcritical(v, params, grid, polish=polish).u
        assert np.all(u[x <= -1 - r] == -1.0)
        assert np.all(u[(x >= -1 + r) & (x <= 1 - r)] == 1.0)
        assert np.all(u[x >= 1 + r] == -1.0)


def test_compacton_polish_residual():
    params = PotentialParams(4, 2, 0.05)
    v = StepFunction(-3, 3, (-1, 1))
    grid = Grid.resolving(-3, 3, 0.05)
    raw = build_stationary_subcritical(v, params, grid, polish=False)
    pol = build_stationary_subcritical(v, params, grid)
    assert np.max(np.abs(rhs(pol.u, grid, params))) < 1e-12
    # the projection is a small correction of the sampled construction
    assert np.max(np.abs(pol.u - raw.u)) < 1e-3


def test_compacton_residual_second_order():
    params = PotentialParams(4, 2, 0.05)
    v = StepFunction(-3, 3, (-1, 1))
    res = []
    for c in (8, 16, 32):
        grid = Grid.resolving(-3, 3, 0.05, c)
        u = build_stationary_subcritical(v, params, grid, polish=False)
        res.append(np.max(np.abs(rhs(u.u, grid, params))))
    rates = np.log2(np.array(res[:-1]) / res[1:])
    assert np.all(rates > 1.9)


def test_compacton_eps_too_large():
    v = StepFunction(-3, 3, (-1, 1))
    params = PotentialParams(4, 2, 0.6)  # x_bar = 1.24 > r = 1
    with pytest.raises(EpsilonTooLargeError):
        build_stationary_subcritical(v, params, Grid.resolving(-3, 3, 0.6))


def test_compacton_wrong_regime():
    v = StepFunction(-3, 3, (-1, 1))
    with pytest.raises(WrongRegimeError):
        build_stationary_subcritical(v, PotentialParams(2, 2, 0.1), Grid.resolving(-3, 3, 0.1))


def test_equidistant_zeros():
    assert np.allclose(equidistant_zeros(2, 0, 1), [0.25, 0.75])
    assert np.allclose(equidistant_zeros(4, -1, 1), [-0.75, -0.25, 0.25, 0.75])


@pytest.mark.parametrize("p,n,N", [(2, 2, 2), (2, 4, 3), (4, 4, 2), (3, 4, 4)])
def test_periodic_zeros_and_boundary(p, n, N):
    params = PotentialParams(p, n, 0.1)
    grid = Grid.resolving(0, 1, 0.1)
    u = build_stationary_periodic(N, params, (0, 1), grid)
    found = interfaces_of_field(u, (0.0, 0.0)).positions
    assert len(found) == N
    assert np.max(np.abs(found - equidistant_zeros(N, 0, 1))) < grid.h
    # crest at both ends, where u - sbar ~ |x|^q with q = 2 (p = 2) or p/(p-1)
    q = 2.0 if p == 2 else p / (p - 1)
    du = np.abs(np.diff(u.u))
    assert du[0] / du[1] == pytest.approx(1 / (2**q - 1), abs=0.05)
    assert du[-1] / du[-2] == pytest.approx(1 / (2**q - 1), abs=0.05)


def test_periodic_zero_spacing():
    params = PotentialParams(2, 2, 0.1)
    u = build_stationary_periodic(4, params, (-1, 1), Grid.resolving(-1, 1, 0.1, 32))
    z = interfaces_of_field(u, (0.0, 0.0)).positions
    assert np.allclose(np.diff(z), 0.5, atol=1e-4)


def test_periodic_residual_second_order_p2():
    for n in (2, 4):
        params = PotentialParams(2, n, 0.1)
        res = []
        for c in (8, 16, 32):
            grid = Grid.resolving(0, 1, 0.1, c)
            u = build_stationary_periodic(2, params, (0, 1), grid)
            res.append(np.max(np.abs(rhs(u.u, grid, params))))
        ratios = np.array(res[:-1]) / res[1:]
        assert np.all(np.abs(ratios - 4) < 0.1)


def test_periodic_residual_degenerate_crests():
    # for p > 2 the orbit is only C^{1,1/(p-1)} at its crests: the sup residual
    # stalls there but the integrated residual still decreases
    params = PotentialParams(4, 4, 0.1)
    l1 = []
    for c in (8, 16, 32):
        grid = Grid.resolving(0, 1, 0.1, c)
        u = build_stationary_periodic(2, params, (0, 1), grid)
        l1.append(np.dot(grid.weights, np.abs(rhs(u.u, grid, params))))
    assert l1[0] > 2 * l1[1] > 4 * l1[2]


def test_periodic_wrong_regime():
    with pytest.raises(WrongRegimeError):
        build_stationary_periodic(2, PotentialParams(4, 2, 0.1), (0, 1))
    with pytest.raises(ValidationError):
        build_stationary_periodic(0, PotentialParams(2, 2, 0.1), (0, 1))


# ----------------------------------------------------------------------- interfaces


def test_interfaces_of_layer_datum():
    eps = 0.1
    params = PotentialParams(2, 2, eps)
    v = StepFunction(-3, 3, (-1, 1))
    grid = Grid.resolving(-3, 3, eps, 32)
    u = build_layer_datum(v, params, grid)
    found = interfaces_of_field(u).positions
    assert len(found) == 2
    assert np.allclose(found, [-1, 1], atol=1e-4)
    # the band [-1/2, 1/2] is left at h +- eps atanh(1/2) / C_p
    half = eps * math.atanh(0.5) / wave_steepness(2)
    x = grid.x
    inside = np.abs(u.u) <= 0.5
    left = x[inside & (x < 0)]
    assert left.min() == pytest.approx(-1 - half, abs=grid.h)
    assert left.max() == pytest.approx(-1 + half, abs=grid.h)


def test_interfaces_empty_for_constant():
    grid = Grid(0, 1, 11)
    assert len(interfaces_of_field(Field(grid, np.ones(11)))) == 0


def test_interfaces_of_sampled_step():
    grid = Grid(0, 1, 11)
    v = StepFunction(0, 1, (0.25, 0.65))
    found = interfaces_of_field(Field(grid, v(grid.x))).positions
    assert np.allclose(found, step_interfaces(v).positions, atol=1e-14)


def test_interfaces_band_without_zero():
    grid = Grid(0, 1, 101)
    u = Field(grid, np.linspace(-1, 1, 101))
    found = interfaces_of_field(u, (0.2, 0.4)).positions
    assert found == pytest.approx([0.65], abs=0.011)
    with pytest.raises(ValidationError):
        interfaces_of_field(u, (0.4, 0.2))


def test_hausdorff_examples():
    assert hausdorff_distance([0.0], [0.0]) == 0.0
    assert hausdorff_distance([0.0, 1.0], [0.0]) == 1.0
    assert hausdorff_distance([0.0, 2.0], [1.0]) == 1.0
    with pytest.raises(EmptySetError):
        hausdorff_distance([], [1.0])


def test_l1_distance_examples():
    grid = Grid(0, 1, 101)
    one = StepFunction(0, 1, (), first_sign=1)
    assert l1_distance(Field(grid, np.zeros(101)), one) == pytest.approx(1.0, abs=1e-14)
    v = StepFunction(0, 1, (0.3,))
    assert l1_distance(Field(grid, v(grid.x)), v) == 0.0
    with pytest.raises(ValidationError):
        l1_distance(Field(Grid(0, 2, 11), np.zeros(11)), v)


# --------------------------------------------------------------------------- energy


@pytest.mark.parametrize("p,n", [(2, 2), (2, 4), (3, 4)])
def test_layer_datum_gap_positive_and_shrinking(p, n):
    v = StepFunction(-4, 4, FIG_JUMPS)
    gaps = [layer_datum_gap(v, PotentialParams(p, n, eps)) for eps in (0.2, 0.1, 0.05)]
    assert gaps[0] > gaps[1] > gaps[2] > 0


def test_layer_datum_gap_critical_closed_form():
    # tails of tanh: int_{1-w}^1 (1-s^2)/sqrt2 ds with w = 1 - tanh(d / (sqrt2 eps))
    eps = 0.1
    params = PotentialParams(2, 2, eps)
    v = StepFunction(-1, 1, (0.0,))
    t = math.tanh(1 / (math.sqrt(2) * eps))
    tail = (1 - t - (1 - t**3) / 3) / math.sqrt(2)
    assert layer_datum_gap(v, params) == pytest.approx(2 * tail, rel=1e-8)


def test_discrete_energy_approaches_continuum():
    v = StepFunction(-4, 4, FIG_JUMPS)
    params = PotentialParams(2, 2, 0.1)
    ref = layer_datum_energy(v, params)
    errs = []
    for c in (8, 16, 32):
        grid = Grid.resolving(-4, 4, 0.1, c)
        errs.append(abs(discrete_energy(build_layer_datum(v, params, grid).u, grid, params) - ref))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.05)
    assert ref < 6 * transition_energy(params)


def test_compacton_datum_energy_exact():
    params = PotentialParams(4, 2, 0.05)
    v = StepFunction(-3, 3, (-1, 1))
    assert layer_datum_gap(v, params) == 0.0
    assert layer_datum_energy(v, params) == pytest.approx(2 * transition_energy(params), abs=1e-12)
