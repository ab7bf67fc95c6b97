"""
The three hard-instance families.

* ``monotone1d``: equal-mass pairs of adjacent bins on [n] whose masses step down by 1/n^2
  from one pair to the next. Yes draws stay monotone, no draws put the lighter bin first in a
  fraction of the pairs.
* ``monotoneDd``: the same idea on cubes of side 2d in [n]^d, each split into a heavier first
  halfcube and a second halfcube along the first coordinate.
* ``logconcave``: a discretised Gaussian tail whose pair (6i-4, 6i-1) is shifted until the
  constraint at 6i-1 is tight, then perturbed by a sign-flipped kernel.

Builders validate every feasibility inequality explicitly and raise
InfeasibleParametersError naming the one that fails.
"""

__all__ = [
    "Family",
    "InstanceParams",
    "HalfcubeLayout",
    "Instance",
    "Margin",
    "select_m",
    "domain_cap",
    "pad_domain",
    "build_monotone_1d",
    "build_monotone_dd",
    "build_logconcave",
    "lift_halfcube",
    "forge",
    "original_view",
    "farness_unit",
    "farness_probability",
    "feasibility_margins",
]

import enum
import math
from collections import namedtuple

import numpy as np
from scipy import stats

from .ensembles import x_max
from .excs import InfeasibleParametersError, ValidationError
from .models import DiscreteDistribution, EnsembleSpec
from .utils import _smallest_odd_above


DEFAULT_C = 4.0
X_MAX_LIMIT = 0.1

Margin = namedtuple("Margin", ["name", "value", "limit", "holds"])


class Family(str, enum.Enum):
    MONOTONE_1D = "monotone1d"
    MONOTONE_DD = "monotoneDd"
    LOG_CONCAVE = "logconcave"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ValidationError(f"Unknown family: {value}. Expected one of: {', '.join(f.value for f in cls)}")


class InstanceParams:
    """
    Arguments:

        family (lbforge.instances.Family): Which construction to build

        epsilon (float): Target distance, in (0, 1/2)

        n (int): Domain size per axis

        d (int): Dimension. Must be 1 unless the family is ``monotoneDd``

        C (float): The construction constant, at least 1
    """

    def __init__(self, family, epsilon, n, d=1, C=DEFAULT_C, validate=True):
        self.family = Family.parse(family)
        self.epsilon = float(epsilon)
        self.n = int(n)
        self.d = int(d)
        self.C = float(C)
        if validate is True:
            self._validate()

    def _validate(self):
        if self.d < 1:
            raise ValidationError("d ≥ 1 required")
        if self.family is not Family.MONOTONE_DD and self.d != 1:
            raise ValidationError(f"d = {self.d} is only meaningful for the monotoneDd family")
        if not 0 < self.epsilon < 0.5:
            raise ValidationError(f"epsilon = {self.epsilon!r} must lie in (0, 1/2)")
        if self.n < 2:
            raise ValidationError(f"n = {self.n} must be at least 2")
        if not self.C >= 1:
            raise ValidationError(f"C = {self.C!r} must be at least 1")

    @property
    def log_inv_epsilon(self):
        return math.log(1 / self.epsilon)

    def __eq__(self, other):
        if not isinstance(other, InstanceParams):
            return NotImplemented
        return (self.family, self.epsilon, self.n, self.d, self.C) == (
            other.family,
            other.epsilon,
            other.n,
            other.d,
            other.C,
        )

    def __repr__(self):
        return (
            f"InstanceParams(family={self.family.value}, epsilon={self.epsilon!r}, "
            f"n={self.n}, d={self.d}, C={self.C!r})"
        )


class HalfcubeLayout:
    """
    Cubes of side 2d tiling [n0]^d inside the lattice [n]^d

    Cube ``c`` (C-order index over ``[n0/2d]^d``) owns the halfcube bins ``2c`` (first halfcube,
    first coordinate in the lower half of the cube) and ``2c + 1`` (second halfcube). Lattice
    points outside [n0]^d belong to no halfcube.

    Arguments:

        n (int): Lattice size per axis

        d (int): Dimension

        n0 (int): Size of the tiled corner. Defaults to n. Must be a multiple of 2d.
    """

    def __init__(self, n, d, n0=None):
        n0 = n if n0 is None else n0
        if d < 1 or n0 < 2 * d or n0 % (2 * d) or n0 > n:
            raise ValidationError(f"Can't tile [{n0}]^{d} inside [{n}]^{d} with cubes of side {2 * d}")
        self.n = int(n)
        self.d = int(d)
        self.n0 = int(n0)
        self.side = 2 * self.d
        self.cubes_per_axis = self.n0 // self.side
        self.halfcube_size = self.side ** self.d // 2

        grid = (self.cubes_per_axis,) * self.d
        self.cubes = np.array(list(np.ndindex(*grid)), dtype=np.int64).reshape(-1, self.d)

        coords = np.indices(self.shape).reshape(self.d, -1)
        inside = np.all(coords < self.n0, axis=0)
        cube = np.ravel_multi_index(np.minimum(coords // self.side, self.cubes_per_axis - 1), grid)
        second = (coords[0] % self.side) >= self.d
        halfcube_of = np.where(inside, 2 * cube + second, -1)
        halfcube_of.setflags(write=False)
        self.halfcube_of = halfcube_of

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def s(self):
        return self.cubes.shape[0]

    @property
    def num_halfcubes(self):
        return 2 * self.s

    def members(self, h):
        """ Flat lattice indexes of halfcube ``h`` """
        return np.flatnonzero(self.halfcube_of == h)

    def first_halfcube(self, c):
        return self.members(2 * c)

    def second_halfcube(self, c):
        return self.members(2 * c + 1)

    def __eq__(self, other):
        if not isinstance(other, HalfcubeLayout):
            return NotImplemented
        return (self.n, self.d, self.n0) == (other.n, other.d, other.n0)

    def __repr__(self):
        return f"HalfcubeLayout(n={self.n}, d={self.d}, n0={self.n0})"


class Instance:
    """
    A forged hard instance

    Arguments:

        params (lbforge.instances.InstanceParams): What was asked for

        n0 (int): Padded domain size the construction occupies

        m (int): Kernel order

        spec (lbforge.models.EnsembleSpec): The ensemble recipe

        layout (lbforge.instances.HalfcubeLayout): Halfcube layout, monotoneDd only

        shifts (numpy.ndarray): Per-pair deterministic shift C_i/n0^3 folded into the base, logconcave only
    """

    def __init__(self, params, n0, m, spec, layout=None, shifts=None):
        self.params = params
        self.n0 = int(n0)
        self.m = int(m)
        self.spec = spec
        self.layout = layout
        if shifts is not None:
            shifts = np.array(shifts, dtype=float)
            shifts.setflags(write=False)
        self.shifts = shifts

    @property
    def family(self):
        return self.params.family

    @property
    def epsilon(self):
        return self.params.epsilon

    @property
    def amplitude(self):
        return float(self.spec.amplitudes[0])

    def lift(self, p):
        """ The distribution a tester actually sees: lattice lift for monotoneDd, p otherwise """
        if self.layout is None:
            return p
        return lift_halfcube(self.layout, p)

    @property
    def original_base(self):
        """ Q before the per-pair shifts were folded in """
        if self.shifts is None:
            return self.spec.base
        masses = self.spec.base.masses.copy()
        masses[self.spec.pairs[:, 0]] -= self.shifts
        masses[self.spec.pairs[:, 1]] += self.shifts
        return DiscreteDistribution(masses, validate=False)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        same_shifts = (self.shifts is None and other.shifts is None) or (
            self.shifts is not None and other.shifts is not None and np.array_equal(self.shifts, other.shifts)
        )
        return (
            self.params == other.params
            and self.n0 == other.n0
            and self.m == other.m
            and self.spec == other.spec
            and self.layout == other.layout
            and same_shifts
        )

    def __repr__(self):
        return f"Instance({self.params!r}, n0={self.n0}, m={self.m}, s={self.spec.s})"


# ---- Parameter selection ----#


def select_m(epsilon, C=DEFAULT_C):
    if not 0 < epsilon < 0.5:
        raise ValidationError(f"epsilon = {epsilon!r} must lie in (0, 1/2)")
    if not C >= 1:
        raise ValidationError(f"C = {C!r} must be at least 1")
    return _smallest_odd_above(C * math.log(1 / epsilon))


def domain_cap(family, epsilon, d=1, C=DEFAULT_C):
    family = Family.parse(family)
    log_inv = math.log(1 / epsilon)
    if family is Family.MONOTONE_1D:
        return 1 / (C ** 4 * log_inv ** 3 * epsilon)
    if family is Family.MONOTONE_DD:
        return d / ((C ** 2 * log_inv) ** 3 * epsilon)
    return 1 / (C ** 2 * math.sqrt(epsilon) * log_inv ** 1.5)


def _step_and_minimum(family, d):
    if family is Family.MONOTONE_1D:
        return 2, 4
    if family is Family.MONOTONE_DD:
        return 2 * d, 2 * d
    return 6, 6


def pad_domain(n, family, epsilon, d=1, C=DEFAULT_C):
    """
    Largest admissible construction size n0 <= min(n, cap)

    n0 is even for monotone1d, a multiple of 2d for monotoneDd and a multiple of 6 for logconcave.

    Raises:

        lbforge.excs.InfeasibleParametersError: n0 falls below the family minimum
    """
    family = Family.parse(family)
    step, minimum = _step_and_minimum(family, d)
    cap = domain_cap(family, epsilon, d, C)
    limit = min(float(n), cap)
    n0 = int(math.floor(limit)) // step * step
    if n0 < minimum:
        raise InfeasibleParametersError(
            f"n0 = {n0} < {minimum}: min(n, cap) = min({n}, {cap:.6g}) leaves no room for the {family.value} construction",
            inequality=f"n0 >= {minimum}",
        )
    return n0


# ---- Builders ----#


def _forge_monotone_1d(params):
    eps, C = params.epsilon, params.C
    n0 = pad_domain(params.n, Family.MONOTONE_1D, eps, C=C)
    m = select_m(eps, C)
    amplitude = 8 * m ** 3 * eps / n0
    bound = 1 / (4 * n0 ** 2)
    if amplitude >= bound:
        raise InfeasibleParametersError(
            f"A = 8 m^3 eps / n0 = {amplitude:.6g} must be < 1/(4 n0^2) = {bound:.6g} (m = {m}, n0 = {n0})",
            inequality="A < 1/(4 n0^2)",
        )
    i = np.arange(1, n0 // 2 + 1)
    levels = 5 / (4 * n0) + 1 / (2 * n0 ** 2) - i / n0 ** 2
    masses = np.zeros(params.n)
    masses[:n0] = np.repeat(levels, 2)
    pairs = np.column_stack([np.arange(0, n0, 2), np.arange(1, n0, 2)])
    spec = EnsembleSpec(DiscreteDistribution(masses), pairs, amplitude, math.cos(math.pi / m), m)
    return Instance(params, n0, m, spec)


def _forge_monotone_dd(params):
    eps, C, d = params.epsilon, params.C, params.d
    dimension_limit = (C ** 2 * params.log_inv_epsilon) ** 3
    if d >= dimension_limit:
        raise InfeasibleParametersError(
            f"d = {d} must be < (C^2 ln(1/eps))^3 = {dimension_limit:.6g}",
            inequality="d < (C^2 ln(1/eps))^3",
        )
    n0 = pad_domain(params.n, Family.MONOTONE_DD, eps, d, C)
    m = select_m(eps, C)
    layout = HalfcubeLayout(params.n, d, n0)

    coordinate_sums = (layout.cubes + 1).sum(axis=1)
    levels = (
        5 * (2 * d) ** d / (8 * n0 ** d)
        + 2 ** d * d ** (d + 1) / (4 * n0 ** (d + 1))
        - coordinate_sums * 2 ** (d - 1) * d ** d / n0 ** (d + 1)
    )
    floor = (2 * d / n0) ** d / 4
    if levels.min() <= floor:
        raise InfeasibleParametersError(
            f"min Q = {levels.min():.6g} must be > (1/4)(2d/n0)^d = {floor:.6g}",
            inequality="Q > (1/4)(2d/n0)^d",
        )
    amplitude = 2 ** (d + 2) * m ** 3 * d ** d * eps / n0 ** d
    bound = 2 ** (d - 3) * d ** (d + 1) / n0 ** (d + 1)
    if amplitude >= bound:
        raise InfeasibleParametersError(
            f"A = 2^(d+2) m^3 d^d eps / n0^d = {amplitude:.6g} must be < 2^(d-3) d^(d+1) / n0^(d+1) = {bound:.6g} "
            f"(m = {m}, n0 = {n0})",
            inequality="A < 2^(d-3) d^(d+1) / n0^(d+1)",
        )
    # second halfcube of c lies below the first halfcube of c + e_1, one level step away
    offset = math.cos(math.pi / m)
    swing = 2 * amplitude * (1 + offset)
    step = 2 ** (d - 1) * d ** d / n0 ** (d + 1)
    if swing > step:
        raise InfeasibleParametersError(
            f"2 A (1 + g) = {swing:.6g} must be <= 2^(d-1) d^d / n0^(d+1) = {step:.6g} (m = {m}, n0 = {n0})",
            inequality="2 A (1 + g) <= 2^(d-1) d^d / n0^(d+1)",
        )
    pairs = np.column_stack([np.arange(0, 2 * layout.s, 2), np.arange(1, 2 * layout.s, 2)])
    spec = EnsembleSpec(DiscreteDistribution(np.repeat(levels, 2)), pairs, amplitude, offset, m)
    return Instance(params, n0, m, spec, layout=layout)


def _forge_logconcave(params):
    eps, C = params.epsilon, params.C
    n0 = pad_domain(params.n, Family.LOG_CONCAVE, eps, C=C)
    m = select_m(eps, C)

    weights = np.exp(-((np.arange(1, n0 + 1) / n0) ** 2))
    b = n0 / weights.sum()
    q = b / n0 * weights

    groups = np.arange(n0 // 6)
    first, second = 6 * groups + 1, 6 * groups + 4
    # C_i / n0^3, the slack of the constraint at the second bin of each pair
    shifts = q[second] - np.sqrt(q[second + 1] * q[second - 1])

    excursion = 2 * C * m ** 3 * eps / n0
    if excursion >= shifts.min():
        raise InfeasibleParametersError(
            f"2 C m^3 eps / n0 = {excursion:.6g} must be < min_i C_i/n0^3 = {shifts.min():.6g} (m = {m}, n0 = {n0})",
            inequality="2 C m^3 eps / n0 < min_i C_i/n0^3",
        )

    shifted = q.copy()
    shifted[first] += shifts
    shifted[second] -= shifts
    masses = np.zeros(params.n)
    masses[:n0] = shifted
    pairs = np.column_stack([first, second])
    amplitude = -C * m ** 3 * eps / n0
    spec = EnsembleSpec(DiscreteDistribution(masses), pairs, amplitude, math.cos(math.pi / m), m)
    return Instance(params, n0, m, spec, shifts=shifts)


_BUILDERS = {
    Family.MONOTONE_1D: _forge_monotone_1d,
    Family.MONOTONE_DD: _forge_monotone_dd,
    Family.LOG_CONCAVE: _forge_logconcave,
}


def forge(params):
    """
    Builds the instance of ``params.family``

    Raises:

        lbforge.excs.InfeasibleParametersError: A feasibility inequality fails
    """
    return _BUILDERS[params.family](params)


def build_monotone_1d(params):
    return _forge_monotone_1d(params).spec


def build_monotone_dd(params):
    instance = _forge_monotone_dd(params)
    return instance.spec, instance.layout


def build_logconcave(params):
    return _forge_logconcave(params).spec


def lift_halfcube(layout, p):
    """
    Spreads every halfcube mass uniformly over its (2d)^d/2 lattice bins

    Arguments:

        layout (lbforge.instances.HalfcubeLayout): Layout the halfcube bins refer to

        p (lbforge.models.DiscreteDistribution): Distribution over ``layout.num_halfcubes`` bins

    Returns:

        lbforge.models.DiscreteDistribution: Distribution over [n]^d, flat in C order
    """
    if p.size != layout.num_halfcubes:
        raise ValidationError(f"Expected {layout.num_halfcubes} halfcube masses, got {p.size}")
    lifted = np.zeros(layout.n ** layout.d)
    inside = layout.halfcube_of >= 0
    lifted[inside] = p.masses[layout.halfcube_of[inside]] / layout.halfcube_size
    return DiscreteDistribution(lifted, shape=layout.shape)


# ---- Certified farness ----#


def original_view(instance, realized):
    """ Maps kernel deltas to the deltas of the unshifted (Q, shifted kernel) description """
    realized = np.asarray(realized, dtype=float)
    if instance.shifts is None:
        return realized
    return realized + instance.shifts


def farness_unit(instance):
    """ Certified distance contributed by one pair drawing the negative no-side atom """
    m = instance.m
    drop = abs(instance.amplitude) * (1 - math.cos(math.pi / m))
    if instance.family is Family.MONOTONE_1D:
        return drop
    if instance.family is Family.MONOTONE_DD:
        d = instance.params.d
        return ((2 * d - 1) / (2 * d)) ** (d - 1) * drop
    return drop / 2


def farness_probability(instance, epsilon=None):
    """
    Exact probability that a no-side draw carries a certificate of at least ``epsilon``

    Each pair independently draws the negative atom with probability 1/m and only that atom
    contributes to the certificate, so the certificate is ``X * farness_unit`` with
    X ~ Binomial(s, 1/m).
    """
    epsilon = instance.epsilon if epsilon is None else epsilon
    unit = farness_unit(instance)
    if unit <= 0:
        return 0.0
    needed = max(1, math.ceil(epsilon / unit))
    s = instance.spec.s
    if needed > s:
        return 0.0
    return float(stats.binom.sf(needed - 1, s, 1 / instance.m))


def feasibility_margins(instance, farness_threshold=None):
    """
    Returns:

        list: Margin tuples ``(name, value, limit, holds)`` for every feasibility inequality
    """
    params = instance.params
    eps, C, n0, m = params.epsilon, params.C, instance.n0, instance.m
    cap = domain_cap(params.family, eps, params.d, C)
    margins = [Margin("n0 <= cap", float(n0), cap, n0 <= cap)]

    amplitude = abs(instance.amplitude)
    if params.family is Family.MONOTONE_1D:
        bound = 1 / (4 * n0 ** 2)
        margins.append(Margin("A < 1/(4 n0^2)", amplitude, bound, amplitude < bound))
    elif params.family is Family.MONOTONE_DD:
        d = params.d
        bound = 2 ** (d - 3) * d ** (d + 1) / n0 ** (d + 1)
        margins.append(Margin("A < 2^(d-3) d^(d+1) / n0^(d+1)", amplitude, bound, amplitude < bound))
        swing = 2 * amplitude * (1 + math.cos(math.pi / m))
        step = 2 ** (d - 1) * d ** d / n0 ** (d + 1)
        margins.append(Margin("2 A (1 + g) <= 2^(d-1) d^d / n0^(d+1)", swing, step, swing <= step))
        limit = (C ** 2 * params.log_inv_epsilon) ** 3
        margins.append(Margin("d < (C^2 ln(1/eps))^3", float(d), limit, d < limit))
    else:
        excursion = 2 * C * m ** 3 * eps / n0
        smallest = float(instance.shifts.min())
        margins.append(Margin("2 C m^3 eps / n0 < min C_i/n0^3", excursion, smallest, excursion < smallest))

    relative = x_max(instance.spec)
    margins.append(Margin("x_max < 1/10", relative, X_MAX_LIMIT, relative < X_MAX_LIMIT))
    if farness_threshold is not None:
        probability = farness_probability(instance)
        margins.append(
            Margin("P[no draw certified eps-far] >= threshold", probability, farness_threshold, probability >= farness_threshold)
        )
    return margins
