import math

import numpy as np
import pytest

from lbforge.ensembles import draw_many
from lbforge.excs import BudgetExceededError, HypothesisViolationError, ValidationError
from lbforge.instances import HalfcubeLayout, farness_unit, lift_halfcube
from lbforge.kernels import Side
from lbforge.models import DiscreteDistribution, Method
from lbforge.oracles import (
    LatticeOrder,
    gamma_distance_1d,
    gamma_distance_halfcube,
    is_log_concave,
    is_monotone,
    lp_distance_to_monotone,
    sqrt_triple_distance,
)

from ..test_globals import FARNESS_LOG_CONCAVE, FARNESS_MONOTONE_1D, FARNESS_MONOTONE_DD


def _geometric(ratio, n):
    masses = ratio ** np.arange(n)
    return DiscreteDistribution(masses / masses.sum())


def _perturbed_monotone(rng, n):
    masses = np.sort(rng.random(n))[::-1] + 0.05
    masses *= 1 + 0.3 * rng.standard_normal(n)
    masses = np.abs(masses)
    return DiscreteDistribution(masses / masses.sum())


# ---- membership ----#


def test_uniform_is_monotone():
    assert is_monotone(DiscreteDistribution.uniform(7))
    assert is_monotone(DiscreteDistribution.uniform((3, 3)))


def test_increasing_is_not_monotone():
    assert not is_monotone(DiscreteDistribution([0.2, 0.3, 0.5]))


def test_lattice_uses_strict_dominance():
    # C order: (1,1), (1,2), (2,1), (2,2)
    assert not is_monotone(DiscreteDistribution([0.1, 0.3, 0.3, 0.3], shape=(2, 2)))
    assert is_monotone(DiscreteDistribution([0.4, 0.2, 0.3, 0.1], shape=(2, 2)))


def test_lattice_dominance_reaches_past_neighbours():
    # every diagonal step (i, j) -> (i + 1, j + 1) is non-increasing, but [0, 0] is lighter than
    # [1, 2], which lies strictly above it in both coordinates with no diagonal chain between them
    masses = np.array(
        [
            [0.1, 0.2, 0.125],
            [0.1, 0.05, 0.15],
            [0.125, 0.1, 0.05],
        ]
    )
    assert math.fsum(masses.ravel()) == pytest.approx(1.0, abs=1e-15)
    assert np.all(masses[:-1, :-1] >= masses[1:, 1:])
    p = DiscreteDistribution(masses.ravel(), shape=(3, 3))
    assert not is_monotone(p)

    masses[1, 2], masses[0, 2] = 0.1, 0.175
    assert is_monotone(DiscreteDistribution(masses.ravel(), shape=(3, 3)))


def test_explicit_order_must_match():
    with pytest.raises(ValidationError):
        is_monotone(DiscreteDistribution.uniform(5), LatticeOrder(2, 2))


def test_monotone_slack():
    p = DiscreteDistribution([0.5, 0.5 + 1e-13, 0.0 - 1e-13], validate=False)
    assert is_monotone(p)
    assert not is_monotone(p, slack=0.0)


def test_geometric_is_log_concave():
    # every constraint is tight
    assert is_log_concave(_geometric(0.7, 12))


def test_support_gap_is_not_log_concave():
    assert not is_log_concave(DiscreteDistribution([0.5, 0.0, 0.5]))


def test_log_concave_ignores_zero_tails():
    assert is_log_concave(DiscreteDistribution([0.0, 0.25, 0.5, 0.25, 0.0]))
    assert not is_log_concave(DiscreteDistribution([0.3, 0.1, 0.6]))


# ---- gamma certificates ----#


def test_gamma_1d_examples():
    certificate = gamma_distance_1d(DiscreteDistribution([0.4, 0.6]))
    assert certificate.lower_bound == pytest.approx(0.1)
    assert certificate.method is Method.GAMMA_1D
    assert gamma_distance_1d(DiscreteDistribution.uniform(6)).lower_bound == 0.0


def test_gamma_1d_needs_even_prefix():
    with pytest.raises(ValidationError):
        gamma_distance_1d(DiscreteDistribution.uniform(5))
    assert gamma_distance_1d(DiscreteDistribution.uniform(5), limit=4).per_unit_terms.size == 2


def test_gamma_1d_counts_negative_deltas(forge_instance, rng):
    n, epsilon = FARNESS_MONOTONE_1D
    instance = forge_instance("monotone1d", epsilon, n)
    masses, realized = draw_many(instance.spec, Side.NO, rng, 50)
    for row, delta in zip(masses, realized):
        certificate = gamma_distance_1d(DiscreteDistribution(row, validate=False))
        assert certificate.lower_bound == pytest.approx(np.maximum(0.0, -delta).sum(), rel=1e-9, abs=1e-15)


def test_gamma_halfcube_single_cube():
    layout = HalfcubeLayout(4, 2)
    certificate = gamma_distance_halfcube(layout, DiscreteDistribution([0.4, 0.6]))
    assert certificate.per_unit_terms.tolist() == pytest.approx([0.15])
    assert certificate.lower_bound == pytest.approx(0.075)
    assert certificate.scale == 0.5


def test_gamma_halfcube_reduces_to_1d(rng):
    layout = HalfcubeLayout(10, 1)
    for _ in range(20):
        p = DiscreteDistribution(rng.dirichlet(np.ones(10)))
        assert gamma_distance_halfcube(layout, p).lower_bound == pytest.approx(gamma_distance_1d(p).lower_bound)


def test_gamma_halfcube_size_mismatch():
    with pytest.raises(ValidationError):
        gamma_distance_halfcube(HalfcubeLayout(4, 2), DiscreteDistribution.uniform(4))


def test_gamma_halfcube_below_lattice_lp(rng):
    layout = HalfcubeLayout(8, 2)
    for _ in range(15):
        p = DiscreteDistribution(rng.dirichlet(np.ones(layout.num_halfcubes)))
        lifted = lift_halfcube(layout, p)
        assert gamma_distance_halfcube(layout, p).lower_bound <= lp_distance_to_monotone(lifted).lower_bound + 1e-9


# ---- sqrt-triple certificate ----#


def test_sqrt_triple_example():
    scale = 1 / 1.35
    p = DiscreteDistribution(np.array([0.5, 0.4, 0.45]) * scale)
    certificate = sqrt_triple_distance(p)
    expected = math.sqrt(0.5 * 0.45 * scale ** 2) - 0.4 * scale
    assert certificate.per_unit_terms.tolist() == pytest.approx([expected])
    assert certificate.lower_bound == pytest.approx(expected / 2)
    assert certificate.method is Method.SQRT_TRIPLE


def test_sqrt_triple_is_zero_on_log_concave():
    certificate = sqrt_triple_distance(_geometric(0.9, 9))
    assert certificate.lower_bound == pytest.approx(0.0, abs=1e-15)


def test_sqrt_triple_window_violation_names_the_triple():
    p = DiscreteDistribution([0.2, 0.18, 0.17, 0.1, 0.2, 0.15])
    with pytest.raises(HypothesisViolationError) as e:
        sqrt_triple_distance(p)
    assert e.value.index == 1
    assert "triple 2" in str(e.value)


def test_sqrt_triple_needs_whole_triples():
    with pytest.raises(ValidationError):
        sqrt_triple_distance(DiscreteDistribution.uniform(4))


def test_sqrt_triple_on_logconcave_no_draws(forge_instance, rng):
    n, epsilon = FARNESS_LOG_CONCAVE
    instance = forge_instance("logconcave", epsilon, n)
    masses, realized = draw_many(instance.spec, Side.NO, rng, 200)
    for row, delta in zip(masses, realized):
        certificate = sqrt_triple_distance(DiscreteDistribution(row, validate=False), limit=instance.n0)
        terms = certificate.per_unit_terms
        # pair t shifts the middle of triple 2t + 1
        assert terms[1::2] == pytest.approx(np.maximum(0.0, delta), abs=1e-12)
        assert terms[0::2] == pytest.approx(np.zeros(instance.spec.s), abs=1e-12)
        assert certificate.lower_bound == pytest.approx(np.maximum(0.0, delta).sum() / 2, abs=1e-12)


# ---- exact LP ----#


def test_lp_examples():
    certificate = lp_distance_to_monotone(DiscreteDistribution([0.4, 0.6]))
    assert certificate.lower_bound == pytest.approx(0.1, abs=1e-9)
    assert certificate.method is Method.LP_EXACT
    assert lp_distance_to_monotone(DiscreteDistribution.uniform(5)).lower_bound == 0.0


def test_lp_terms_add_up(rng):
    p = _perturbed_monotone(rng, 12)
    certificate = lp_distance_to_monotone(p)
    assert certificate.per_unit_terms.sum() == pytest.approx(certificate.lower_bound, abs=1e-9)


def test_lp_lattice_examples():
    certificate = lp_distance_to_monotone(DiscreteDistribution([0.1, 0.3, 0.3, 0.3], shape=(2, 2)))
    assert certificate.lower_bound == pytest.approx(0.1, abs=1e-9)
    assert lp_distance_to_monotone(DiscreteDistribution([0.4, 0.2, 0.3, 0.1], shape=(2, 2))).lower_bound == 0.0


def test_monotone_inputs_have_zero_distance(rng, random_monotone):
    for _ in range(20):
        p = random_monotone(rng, 9)
        assert gamma_distance_1d(p, limit=8).lower_bound == 0.0
        assert lp_distance_to_monotone(p).lower_bound == 0.0


def test_gamma_never_exceeds_lp(rng):
    strict = 0
    for _ in range(1000):
        p = _perturbed_monotone(rng, 10)
        gamma = gamma_distance_1d(p).lower_bound
        lp = lp_distance_to_monotone(p).lower_bound
        assert gamma <= lp + 1e-9
        if lp > gamma + 1e-6:
            strict += 1
    assert strict > 0


def test_lp_never_exceeds_explicit_monotone(rng, random_monotone):
    for _ in range(200):
        p = _perturbed_monotone(rng, 10)
        q = random_monotone(rng, 10)
        explicit = 0.5 * np.abs(p.masses - q.masses).sum()
        assert lp_distance_to_monotone(p).lower_bound <= explicit + 1e-9


def test_lp_is_stable_under_row_permutations(rng):
    for _ in range(10):
        p = _perturbed_monotone(rng, 15)
        plain = lp_distance_to_monotone(p).lower_bound
        shuffled = lp_distance_to_monotone(p, shuffle=rng).lower_bound
        assert abs(plain - shuffled) < 1e-9
    lattice = DiscreteDistribution(rng.dirichlet(np.ones(16)), shape=(4, 4))
    plain = lp_distance_to_monotone(lattice).lower_bound
    assert abs(plain - lp_distance_to_monotone(lattice, shuffle=rng).lower_bound) < 1e-9


def test_lp_budget():
    with pytest.raises(BudgetExceededError) as e:
        lp_distance_to_monotone(DiscreteDistribution([0.05] * 10 + [0.5]), budget=10)
    assert e.value.size == 11


# ---- farness of the forged instances ----#


def test_monotone_1d_no_draws_are_far(forge_instance, rng):
    n, epsilon = FARNESS_MONOTONE_1D
    instance = forge_instance("monotone1d", epsilon, n)
    masses, _ = draw_many(instance.spec, Side.NO, rng, 1000)
    far = 0
    for row in masses:
        p = DiscreteDistribution(row, validate=False)
        lp = lp_distance_to_monotone(p).lower_bound
        assert gamma_distance_1d(p).lower_bound <= lp + 1e-9
        far += lp >= epsilon
    assert far >= 950


def test_monotone_dd_no_draws_are_far(forge_instance, rng):
    d, n, epsilon = FARNESS_MONOTONE_DD
    instance = forge_instance("monotoneDd", epsilon, n, d)
    masses, realized = draw_many(instance.spec, Side.NO, rng, 200)
    unit = farness_unit(instance)
    far = 0
    for row, delta in zip(masses, realized):
        certificate = gamma_distance_halfcube(instance.layout, DiscreteDistribution(row, validate=False))
        # only the negative no atom certifies, one unit per pair that draws it
        assert certificate.lower_bound == pytest.approx(unit * np.sum(delta < 0), rel=1e-9, abs=1e-15)
        far += certificate.lower_bound >= epsilon
    assert far >= 190
