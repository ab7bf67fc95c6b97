"""
Moment-matched perturbation kernels.

A kernel is the uniform law over ``m`` atoms ``A * (cos(theta_a) + g)``. The yes side
places its phases at ``2*pi*a/m``, the no side at ``2*pi*(a + 1/2)/m``. The two laws share
their first ``m - 1`` moments and differ at the ``m``-th by exactly ``2**(2 - m) * A**m``
when ``m`` is odd.
"""

__all__ = [
    "Side",
    "MomentKernel",
    "atoms",
    "moment",
    "sign_profile",
    "sample",
    "chebyshev_kernel",
]

import enum
import math

import numpy as np

from .excs import ValidationError


# Atoms closer to zero than this (relative to |A|(1+|g|)) are reported as zero by sign_profile
ATOM_ZERO_TOLERANCE = 1e-12


class Side(str, enum.Enum):
    YES = "yes"
    NO = "no"

    @property
    def phase(self):
        return 0.0 if self is Side.YES else 0.5

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"Unknown side: {value}. Expected one of: yes, no")


class MomentKernel:
    """
    Uniform law over the ``order`` atoms ``amplitude * (cos(theta_a) + offset)``

    Arguments:

        amplitude (float): A, in probability-mass units. May be negative.

        offset (float): g, dimensionless.

        order (int): m, the number of atoms.

        side (lbforge.kernels.Side): Which phase grid to use.

        validate (bool): Reject non-integral or non-positive orders and non-finite values.
    """

    def __init__(self, amplitude, offset, order, side=Side.YES, validate=True):
        if validate:
            if isinstance(order, bool) or int(order) != order or order < 1:
                raise ValidationError(f"Kernel order must be a positive integer, got {order}")
            if not (math.isfinite(amplitude) and math.isfinite(offset)):
                raise ValidationError(f"Kernel amplitude and offset must be finite, got A={amplitude}, g={offset}")
        self._amplitude = float(amplitude)
        self._offset = float(offset)
        self._order = int(order)
        self._side = Side.parse(side)
        phases = 2 * np.pi * (np.arange(self._order) + self._side.phase) / self._order
        values = self._amplitude * (np.cos(phases) + self._offset)
        values.setflags(write=False)
        self._values = values

    @property
    def amplitude(self):
        return self._amplitude

    @property
    def offset(self):
        return self._offset

    @property
    def order(self):
        return self._order

    @property
    def side(self):
        return self._side

    @property
    def values(self):
        """ Atom values in order of ``a`` """
        return self._values

    def with_side(self, side):
        return MomentKernel(self._amplitude, self._offset, self._order, side, validate=False)

    def __eq__(self, other):
        if not isinstance(other, MomentKernel):
            return NotImplemented
        return (self._amplitude, self._offset, self._order, self._side) == (
            other._amplitude,
            other._offset,
            other._order,
            other._side,
        )

    def __hash__(self):
        return hash((self._amplitude, self._offset, self._order, self._side))

    def __repr__(self):
        return f"MomentKernel(A={self._amplitude!r}, g={self._offset!r}, m={self._order}, side={self._side.value})"


def chebyshev_kernel(amplitude, order, side=Side.YES):
    """ Kernel with the offset ``g = cos(pi/m)`` shared by every hard-instance family """
    return MomentKernel(amplitude, math.cos(math.pi / order), order, side)


def atoms(kernel):
    probability = 1 / kernel.order
    return [(float(value), probability) for value in kernel.values]


def moment(kernel, k):
    """
    Arguments:

        kernel (lbforge.kernels.MomentKernel): Kernel to evaluate

        k (int): Nonnegative power

    Returns:

        float: E[delta**k], summed exactly over the atoms
    """
    if k < 0:
        raise ValidationError(f"Moment order must be nonnegative, got {k}")
    if k == 0:
        return 1.0
    return math.fsum(float(value) ** k for value in kernel.values) / kernel.order


def sign_profile(kernel):
    """
    Returns:

        tuple: (min_atom, max_atom, negative_atom_count). Atoms within rounding of zero count as zero.
    """
    scale = abs(kernel.amplitude) * (1 + abs(kernel.offset))
    values = np.where(np.abs(kernel.values) <= ATOM_ZERO_TOLERANCE * scale, 0.0, kernel.values)
    return float(values.min()), float(values.max()), int(np.count_nonzero(values < 0))


def sample(kernel, rng):
    return float(kernel.values[rng.integers(kernel.order)])
