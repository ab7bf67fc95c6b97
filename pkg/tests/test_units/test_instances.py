import math

import numpy as np
import pytest

from lbforge.ensembles import draw_many, enumerate_atoms, validate, x_max
from lbforge.excs import InfeasibleParametersError, ValidationError
from lbforge.instances import (
    Family,
    HalfcubeLayout,
    InstanceParams,
    build_logconcave,
    build_monotone_1d,
    build_monotone_dd,
    domain_cap,
    farness_probability,
    farness_unit,
    feasibility_margins,
    forge,
    lift_halfcube,
    original_view,
    pad_domain,
    select_m,
)
from lbforge.kernels import Side, chebyshev_kernel
from lbforge.models import DiscreteDistribution
from lbforge.oracles import is_log_concave, is_monotone

from ..test_globals import (
    C,
    DEFAULT_C,
    FARNESS_MONOTONE_DD,
    FEASIBLE_AT_DEFAULT_C,
    FEASIBLE_LOG_CONCAVE,
    FEASIBLE_MONOTONE_1D,
    FEASIBLE_MONOTONE_DD,
)

YES_DRAWS = 10 ** 4


def _yes_side_outcomes(instance, exhaustive, rng):
    if exhaustive:
        for _, p in enumerate_atoms(instance.spec, Side.YES):
            yield p
    else:
        masses, _ = draw_many(instance.spec, Side.YES, rng, YES_DRAWS)
        for row in masses:
            yield DiscreteDistribution(row, validate=False)


# ---- parameters ----#


@pytest.mark.parametrize(
    "epsilon,const_c,expected",
    [(0.05, 4.0, 13), (1e-6, 1.0, 15), (8e-8, 1.0, 17), (0.1, 1.0, 3)],
)
def test_select_m(epsilon, const_c, expected):
    # smallest odd integer strictly above C ln(1/eps)
    assert select_m(epsilon, const_c) == expected


def test_select_m_rejects_bad_epsilon():
    with pytest.raises(ValidationError):
        select_m(0.5)
    with pytest.raises(ValidationError):
        select_m(0.0)


def test_params_require_positive_dimension():
    with pytest.raises(ValidationError) as e:
        InstanceParams("monotoneDd", 1e-6, 8, d=0)
    assert "d ≥ 1 required" in str(e.value)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(family="monotone1d", epsilon=0.5, n=10),
        dict(family="monotone1d", epsilon=1e-6, n=1),
        dict(family="monotone1d", epsilon=1e-6, n=10, C=0.5),
        dict(family="logconcave", epsilon=1e-6, n=10, d=2),
        dict(family="unimodal", epsilon=1e-6, n=10),
    ],
)
def test_params_validation(kwargs):
    with pytest.raises(ValidationError):
        InstanceParams(**kwargs)


def test_pad_domain_logconcave():
    assert pad_domain(20, Family.LOG_CONCAVE, 1.2e-7, C=C) == 18


def test_pad_domain_monotone_1d():
    assert pad_domain(101, Family.MONOTONE_1D, 5e-8, C=C) == 100


def test_pad_domain_uses_the_cap():
    cap = domain_cap(Family.MONOTONE_1D, 8e-8, C=C)
    assert 2864 < cap < 2866
    assert pad_domain(10 ** 6, Family.MONOTONE_1D, 8e-8, C=C) == 2864


def test_pad_domain_too_small():
    with pytest.raises(InfeasibleParametersError) as e:
        pad_domain(100, Family.MONOTONE_1D, 0.05, C=4.0)
    assert "n0" in str(e.value)


def test_acceptance_scale_parameters_are_infeasible():
    with pytest.raises(InfeasibleParametersError):
        forge(InstanceParams("monotone1d", 0.02, 60, C=4.0))


@pytest.mark.parametrize("family,d,n,epsilon,m", FEASIBLE_AT_DEFAULT_C)
def test_yes_side_at_the_default_constant(family, d, n, epsilon, m, forge_instance):
    instance = forge_instance(family, epsilon, n, d, const_c=DEFAULT_C)
    assert instance.params.C == DEFAULT_C
    assert instance.m == m
    assert instance.n0 == n
    assert validate(instance.spec).ok
    assert x_max(instance.spec) < 0.1
    assert all(margin.holds for margin in feasibility_margins(instance))

    if family == "logconcave":
        has_property = is_log_concave
    else:
        has_property = lambda p: is_monotone(instance.lift(p))  # noqa: E731
    outcomes = 0
    for _, p in enumerate_atoms(instance.spec, Side.YES):
        assert has_property(p)
        outcomes += 1
    assert outcomes == m ** instance.spec.s


# ---- monotone 1-D ----#


@pytest.mark.parametrize("n,epsilon,m,exhaustive", FEASIBLE_MONOTONE_1D)
def test_monotone_1d_instance(n, epsilon, m, exhaustive, forge_instance):
    instance = forge_instance("monotone1d", epsilon, n)
    spec = instance.spec
    assert instance.n0 == n
    assert instance.m == m
    assert spec.s == n // 2
    assert validate(spec).ok
    assert spec.base.check() is None
    assert is_monotone(spec.base)
    assert instance.amplitude == pytest.approx(8 * m ** 3 * epsilon / n)
    assert instance.amplitude < 1 / (4 * n ** 2)
    assert x_max(spec) < 0.1


@pytest.mark.parametrize("n,epsilon,m,exhaustive", FEASIBLE_MONOTONE_1D)
def test_monotone_1d_yes_side_is_monotone(n, epsilon, m, exhaustive, forge_instance, rng):
    instance = forge_instance("monotone1d", epsilon, n)
    violations = sum(not is_monotone(p) for p in _yes_side_outcomes(instance, exhaustive, rng))
    assert violations == 0


def test_monotone_1d_pads_with_zeros():
    params = InstanceParams("monotone1d", 5e-8, 101, C=C)
    spec = build_monotone_1d(params)
    assert spec.size == 101
    assert spec.base[100] == 0.0
    assert spec.s == 50


def test_monotone_1d_amplitude_bound_is_checked():
    # cap allows n0 = 6 but A = 8 m^3 eps / n0 is far over 1/(4 n0^2)
    with pytest.raises(InfeasibleParametersError) as e:
        forge(InstanceParams("monotone1d", 1e-4, 6, C=C))
    assert e.value.inequality == "A < 1/(4 n0^2)"


def test_monotone_1d_base_by_hand(forge_instance):
    spec = forge_instance("monotone1d", 1e-6, 6).spec
    assert spec.base.masses == pytest.approx(np.array([7, 7, 6, 6, 5, 5]) / 36, rel=1e-12)
    # flat inside a pair, one 1/n0^2 step between pairs
    steps = spec.base.masses[:-1] - spec.base.masses[1:]
    assert steps == pytest.approx([0, 1 / 36, 0, 1 / 36, 0], abs=1e-15)
    assert spec.pairs.tolist() == [[0, 1], [2, 3], [4, 5]]


# ---- monotone d-D ----#


@pytest.mark.parametrize("d,n,epsilon,m,exhaustive", FEASIBLE_MONOTONE_DD)
def test_monotone_dd_instance(d, n, epsilon, m, exhaustive, forge_instance):
    instance = forge_instance("monotoneDd", epsilon, n, d)
    spec = instance.spec
    layout = instance.layout
    assert instance.m == m
    assert instance.n0 == n
    assert layout.s == (n // (2 * d)) ** d
    assert spec.size == 2 * layout.s
    assert validate(spec).ok
    assert spec.base.masses.min() > (2 * d / n) ** d / 4
    lifted = lift_halfcube(layout, spec.base)
    assert lifted.shape == (n,) * d
    assert is_monotone(lifted)


@pytest.mark.parametrize("d,n,epsilon,m,exhaustive", FEASIBLE_MONOTONE_DD)
def test_monotone_dd_yes_side_is_monotone(d, n, epsilon, m, exhaustive, forge_instance, rng):
    instance = forge_instance("monotoneDd", epsilon, n, d)
    violations = sum(not is_monotone(instance.lift(p)) for p in _yes_side_outcomes(instance, exhaustive, rng))
    assert violations == 0


def test_build_monotone_dd_returns_layout():
    spec, layout = build_monotone_dd(InstanceParams("monotoneDd", 1e-6, 8, 2, C))
    assert layout == HalfcubeLayout(8, 2)
    assert spec.s == layout.s


def test_monotone_dd_dimension_limit():
    with pytest.raises(InfeasibleParametersError) as e:
        forge(InstanceParams("monotoneDd", 0.3, 10 ** 6, 2, C))
    assert "d <" in e.value.inequality


def test_monotone_dd_rejects_overlapping_neighbouring_cubes():
    # A < 2^(d-3) d^(d+1) / n0^(d+1) holds here, but a yes draw could lift the second halfcube
    # of a cube above the first halfcube of the next one along the first axis
    params = InstanceParams("monotoneDd", 1.5e-6, 8, 2, C)
    with pytest.raises(InfeasibleParametersError) as e:
        forge(params)
    assert e.value.inequality == "2 A (1 + g) <= 2^(d-1) d^d / n0^(d+1)"


@pytest.mark.parametrize("d,n,epsilon,m,exhaustive", FEASIBLE_MONOTONE_DD)
def test_monotone_dd_neighbour_margin(d, n, epsilon, m, exhaustive, forge_instance):
    instance = forge_instance("monotoneDd", epsilon, n, d)
    margins = {margin.name: margin for margin in feasibility_margins(instance)}
    margin = margins["2 A (1 + g) <= 2^(d-1) d^d / n0^(d+1)"]
    assert margin.holds
    assert margin.value == pytest.approx(2 * instance.amplitude * (1 + math.cos(math.pi / m)))
    assert margin.limit == pytest.approx(2 ** (d - 1) * d ** d / n ** (d + 1))


def test_monotone_dd_in_one_dimension_is_the_1d_construction(forge_instance):
    flat = forge_instance("monotone1d", 1e-6, 6).spec
    lattice = forge_instance("monotoneDd", 1e-6, 6, 1)
    assert lattice.layout.halfcube_size == 1
    assert lattice.spec.base.masses == pytest.approx(flat.base.masses, rel=1e-12)
    assert np.array_equal(lattice.spec.pairs, flat.pairs)
    assert lattice.amplitude == pytest.approx(flat.amplitudes[0], rel=1e-12)
    assert lattice.spec.order == flat.order
    p = DiscreteDistribution(flat.base.masses)
    assert lattice.lift(p).masses == pytest.approx(p.masses)


def test_monotone_dd_base_by_hand(forge_instance):
    instance = forge_instance("monotoneDd", 1e-6, 8, 2)
    spec, layout = instance.spec, instance.layout
    assert layout.cubes.tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]
    levels = spec.base.masses[::2]
    assert levels == pytest.approx([0.140625, 0.125, 0.125, 0.109375], rel=1e-12)
    assert np.array_equal(spec.base.masses[1::2], levels)
    assert math.fsum(spec.base.masses) == pytest.approx(1.0, abs=1e-15)
    # cube (1,1) in 1-based coordinates carries more than cube (2,2)
    assert levels[0] > levels[3]

    lifted = lift_halfcube(layout, spec.base).masses.reshape(8, 8)
    assert math.fsum(lifted.ravel()) == pytest.approx(1.0, abs=1e-15)
    assert lifted[0, 0] == pytest.approx(0.140625 / 8)
    assert lifted[7, 7] == pytest.approx(0.109375 / 8)
    assert lifted[0, 0] > lifted[7, 7]


def test_halfcube_layout():
    layout = HalfcubeLayout(9, 2, 8)
    assert layout.s == 4
    assert layout.halfcube_size == 8
    assert layout.halfcube_of.shape == (81,)
    # padding row and column belong to no halfcube
    grid = layout.halfcube_of.reshape(9, 9)
    assert np.all(grid[8, :] == -1)
    assert np.all(grid[:, 8] == -1)
    # cube 0 is [0, 4)^2, its first halfcube has first coordinate 0 or 1
    assert sorted(layout.first_halfcube(0).tolist()) == [0, 1, 2, 3, 9, 10, 11, 12]
    assert sorted(layout.second_halfcube(0).tolist()) == [18, 19, 20, 21, 27, 28, 29, 30]
    for h in range(layout.num_halfcubes):
        assert layout.members(h).size == layout.halfcube_size


def test_halfcube_layout_rejects_bad_tiling():
    with pytest.raises(ValidationError):
        HalfcubeLayout(10, 2, 10)


def test_lift_halfcube_spreads_uniformly():
    layout = HalfcubeLayout(4, 1)
    p = DiscreteDistribution([0.4, 0.3, 0.2, 0.1])
    lifted = lift_halfcube(layout, p)
    assert lifted.masses.tolist() == pytest.approx([0.4, 0.3, 0.2, 0.1])

    layout = HalfcubeLayout(4, 2)
    lifted = lift_halfcube(layout, DiscreteDistribution.uniform(2))
    assert lifted.masses == pytest.approx(np.full(16, 1 / 16))


# ---- log-concave ----#


@pytest.mark.parametrize("n,epsilon,m,exhaustive", FEASIBLE_LOG_CONCAVE)
def test_logconcave_instance(n, epsilon, m, exhaustive, forge_instance):
    instance = forge_instance("logconcave", epsilon, n)
    spec = instance.spec
    assert instance.m == m
    assert instance.n0 == n
    assert spec.s == n // 6
    assert instance.amplitude < 0
    assert validate(spec).ok
    assert np.all(instance.shifts > 2 * m ** 3 * epsilon / n)
    # shifted pairs keep their sums
    original = instance.original_base.masses
    shifted = spec.base.masses
    for j, k in spec.pairs:
        assert shifted[j] + shifted[k] == pytest.approx(original[j] + original[k], rel=1e-14)


@pytest.mark.parametrize("n,epsilon,m,exhaustive", FEASIBLE_LOG_CONCAVE)
def test_logconcave_gaussian_base_is_strictly_log_concave(n, epsilon, m, exhaustive, forge_instance):
    q = forge_instance("logconcave", epsilon, n).original_base.masses
    assert math.fsum(q) == pytest.approx(1.0, abs=1e-12)
    assert np.all(q[1:-1] ** 2 > q[:-2] * q[2:])
    assert is_log_concave(DiscreteDistribution(q))


@pytest.mark.parametrize("n,epsilon,m,exhaustive", FEASIBLE_LOG_CONCAVE)
def test_logconcave_yes_side_is_log_concave(n, epsilon, m, exhaustive, forge_instance, rng):
    instance = forge_instance("logconcave", epsilon, n)
    violations = sum(not is_log_concave(p) for p in _yes_side_outcomes(instance, exhaustive, rng))
    assert violations == 0


def test_logconcave_shift_makes_constraint_tight():
    instance = forge(InstanceParams("logconcave", 1.2e-7, 18, C=C))
    q = instance.spec.base.masses
    for _, k in instance.spec.pairs:
        assert q[k] == pytest.approx(math.sqrt(q[k - 1] * q[k + 1]), rel=1e-12)


def test_build_logconcave_pads():
    spec = build_logconcave(InstanceParams("logconcave", 1.2e-7, 20, C=C))
    assert spec.size == 20
    assert spec.s == 3
    assert spec.base[18] == 0.0 and spec.base[19] == 0.0


@pytest.mark.parametrize("n,epsilon,m,exhaustive", FEASIBLE_LOG_CONCAVE)
def test_logconcave_normalizer_lies_between_one_and_e(n, epsilon, m, exhaustive, forge_instance):
    q = forge_instance("logconcave", epsilon, n).original_base.masses
    # q_1 = (b/n0) exp(-1/n0^2)
    b = n * q[0] * math.exp(1 / n ** 2)
    assert 1 < b < math.e


def test_logconcave_slack_by_hand(forge_instance):
    n = 12
    instance = forge_instance("logconcave", 4e-7, n)
    q = instance.original_base.masses
    b = n * q[0] * math.exp(1 / n ** 2)
    assert b == pytest.approx(1.38877, abs=1e-4)

    assert instance.spec.pairs.tolist() == [[1, 4], [7, 10]]
    seconds = instance.spec.pairs[:, 1] + 1
    slacks = n ** 3 * instance.shifts
    ratios = slacks / (b * np.exp(-(seconds ** 2) / n ** 2))
    assert ratios == pytest.approx(n ** 2 * (1 - math.exp(-1 / n ** 2)), rel=1e-8)
    assert np.all((0.5 < ratios) & (ratios < 1))


@pytest.mark.parametrize("side", [Side.YES, Side.NO])
def test_logconcave_draws_are_the_original_base_plus_shifted_kernel(side, forge_instance, rng):
    instance = forge_instance("logconcave", 1.2e-7, 18)
    spec = instance.spec
    q = instance.original_base.masses
    first, second = spec.pairs[:, 0], spec.pairs[:, 1]
    masses, realized = draw_many(spec, side, rng, 200)

    view = original_view(instance, realized)
    assert masses[:, first] == pytest.approx(q[first] + view, rel=1e-12)
    assert masses[:, second] == pytest.approx(q[second] - view, rel=1e-12)

    kernel = chebyshev_kernel(abs(instance.amplitude), instance.m, side)
    for i in range(spec.s):
        assert spec.kernel(i, side).values == pytest.approx(-kernel.values, rel=1e-12)
        distance = np.abs(realized[:, i][:, None] - spec.kernel(i, side).values[None, :]).min(axis=1)
        assert np.all(distance <= 1e-18)


def test_original_view_adds_the_shift(rng):
    instance = forge(InstanceParams("logconcave", 1.2e-7, 18, C=C))
    _, realized = draw_many(instance.spec, Side.NO, rng, 1)
    assert np.allclose(original_view(instance, realized[0]), realized[0] + instance.shifts)


def test_original_view_is_identity_for_monotone(forge_instance):
    instance = forge_instance("monotone1d", 1e-6, 6)
    realized = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(original_view(instance, realized), realized)


# ---- farness ----#


def test_farness_unit_monotone_1d(forge_instance):
    instance = forge_instance("monotone1d", 1.5e-8, 200)
    assert instance.m == 19
    unit = farness_unit(instance)
    assert unit == pytest.approx(instance.amplitude * (1 - math.cos(math.pi / 19)))
    assert unit >= instance.epsilon
    assert farness_probability(instance) == pytest.approx(1 - (18 / 19) ** 100, rel=1e-9)


def test_farness_unit_monotone_dd(forge_instance):
    d, n, epsilon = FARNESS_MONOTONE_DD
    instance = forge_instance("monotoneDd", epsilon, n, d)
    assert instance.m == 17
    assert instance.spec.s == 144
    unit = farness_unit(instance)
    assert unit == pytest.approx(0.75 * instance.amplitude * (1 - math.cos(math.pi / 17)))
    # a single negative atom already certifies eps
    assert unit >= epsilon
    assert farness_probability(instance) == pytest.approx(1 - (16 / 17) ** 144)


def test_farness_unit_logconcave(forge_instance):
    instance = forge_instance("logconcave", 1.2e-7, 18)
    assert farness_unit(instance) == pytest.approx(abs(instance.amplitude) * (1 - math.cos(math.pi / 17)) / 2)
    # one negative atom is enough, so the probability is that at least one of s pairs draws it
    assert farness_probability(instance) == pytest.approx(1 - (16 / 17) ** 3)


def test_farness_probability_needs_several_pairs(forge_instance):
    instance = forge_instance("monotone1d", 1.5e-8, 200)
    unit = farness_unit(instance)
    probability = farness_probability(instance, epsilon=2.5 * unit)
    assert 0 < probability < farness_probability(instance)
    assert farness_probability(instance, epsilon=101 * unit) == 0.0


def test_feasibility_margins(forge_instance):
    instance = forge_instance("monotone1d", 1.5e-8, 200)
    margins = feasibility_margins(instance, farness_threshold=0.95)
    names = [margin.name for margin in margins]
    assert "A < 1/(4 n0^2)" in names
    assert "x_max < 1/10" in names
    assert all(margin.holds for margin in margins)


def test_feasibility_margins_flag_low_farness(forge_instance):
    instance = forge_instance("logconcave", 1.2e-7, 18)
    margins = {margin.name: margin for margin in feasibility_margins(instance, farness_threshold=0.95)}
    assert not margins["P[no draw certified eps-far] >= threshold"].holds
    assert margins["2 C m^3 eps / n0 < min C_i/n0^3"].holds
