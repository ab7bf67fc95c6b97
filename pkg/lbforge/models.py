__all__ = [
    "DiscreteDistribution",
    "EnsembleSpec",
    "ValidationReport",
    "Method",
    "DistanceCertificate",
    "PairConditionalPMF",
    "BoundInputs",
    "TVReport",
]

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .excs import ValidationError
from .kernels import MomentKernel, Side


NORMALIZATION_TOLERANCE = 1e-12


def _frozen(array, dtype=float):
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


class DiscreteDistribution:
    """
    Probability vector over a densely indexed finite bin set

    Bins are the integers ``0 .. size - 1``. Lattice distributions keep their masses flat in
    C order and carry the lattice ``shape`` alongside.

    Arguments:

        masses (array-like): One mass per bin. Copied and made read-only.

        shape (tuple): Lattice shape of the bins. Defaults to ``(len(masses),)``

        validate (bool): Raise ValidationError if a mass is negative or the masses don't sum to one
    """

    def __init__(self, masses, shape=None, validate=True):
        masses = np.array(masses, dtype=float).ravel()
        shape = (masses.size,) if shape is None else tuple(int(axis) for axis in shape)
        if math.prod(shape) != masses.size:
            raise ValidationError(f"Shape {shape} doesn't match {masses.size} masses")
        masses.setflags(write=False)
        self._masses = masses
        self._shape = shape
        if validate is True:
            problem = self.check()
            if problem is not None:
                raise ValidationError(problem)

    @property
    def masses(self):
        return self._masses

    @property
    def shape(self):
        return self._shape

    @property
    def size(self):
        return self._masses.size

    def as_lattice(self):
        return self._masses.reshape(self._shape)

    def check(self, tolerance=NORMALIZATION_TOLERANCE):
        """ Returns a description of the first violated invariant, or None """
        if not np.all(np.isfinite(self._masses)):
            return f"bin {int(np.flatnonzero(~np.isfinite(self._masses))[0])} has a non-finite mass"
        negative = np.flatnonzero(self._masses < 0)
        if negative.size:
            b = int(negative[0])
            return f"nonnegativity: bin {b} has mass {self._masses[b]!r}"
        total = math.fsum(self._masses)
        if abs(total - 1) > tolerance:
            return f"normalization: masses sum to {total!r}"
        return None

    @classmethod
    def uniform(cls, shape):
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        size = math.prod(shape)
        return cls(np.full(size, 1 / size), shape=shape)

    @classmethod
    def point_mass(cls, size, b):
        masses = np.zeros(size)
        masses[b] = 1.0
        return cls(masses)

    def __len__(self):
        return self._masses.size

    def __getitem__(self, b):
        return self._masses[b]

    def __eq__(self, other):
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return self._shape == other._shape and np.array_equal(self._masses, other._masses)

    def __repr__(self):
        return f"DiscreteDistribution(size={self.size}, shape={self._shape})"


class EnsembleSpec:
    """
    Recipe for a pair of ensembles: a base distribution, disjoint bin pairs and one
    kernel ``(A_i, g_i)`` per pair, all sharing the order ``m``. Drawing from the yes
    (or no) ensemble adds a yes (or no) kernel sample ``delta_i`` to bin ``j_i`` and
    subtracts it from bin ``k_i``.

    Arguments:

        base (lbforge.models.DiscreteDistribution): Q

        pairs (array-like): Shape (s, 2) of bin indices (j_i, k_i)

        amplitudes (float or array-like): A_i, broadcast to length s

        offsets (float or array-like): g_i, broadcast to length s

        order (int): m
    """

    def __init__(self, base, pairs, amplitudes, offsets, order):
        if not isinstance(base, DiscreteDistribution):
            base = DiscreteDistribution(base, validate=False)
        pairs = np.array(pairs, dtype=np.int64).reshape(-1, 2)
        s = pairs.shape[0]
        self._base = base
        self._pairs = _frozen(pairs, dtype=np.int64)
        self._amplitudes = _frozen(np.broadcast_to(np.asarray(amplitudes, dtype=float), (s,)))
        self._offsets = _frozen(np.broadcast_to(np.asarray(offsets, dtype=float), (s,)))
        self._order = int(order)
        self._report = None

    @property
    def base(self):
        return self._base

    @property
    def pairs(self):
        return self._pairs

    @property
    def amplitudes(self):
        return self._amplitudes

    @property
    def offsets(self):
        return self._offsets

    @property
    def order(self):
        return self._order

    @property
    def s(self):
        return self._pairs.shape[0]

    @property
    def size(self):
        return self._base.size

    @property
    def pair_weights(self):
        """ Q_j + Q_k for every pair """
        masses = self._base.masses
        return masses[self._pairs[:, 0]] + masses[self._pairs[:, 1]]

    def kernel(self, i, side=Side.YES):
        return MomentKernel(self._amplitudes[i], self._offsets[i], self._order, side)

    def atom_table(self, side):
        """ (s, m) array whose row i lists the atoms of the pair-i kernel """
        side = Side.parse(side)
        phases = 2 * np.pi * (np.arange(self._order) + side.phase) / self._order
        return self._amplitudes[:, None] * (np.cos(phases)[None, :] + self._offsets[:, None])

    def replace(self, base=None, pairs=None, amplitudes=None, offsets=None, order=None):
        return EnsembleSpec(
            self._base if base is None else base,
            self._pairs if pairs is None else pairs,
            self._amplitudes if amplitudes is None else amplitudes,
            self._offsets if offsets is None else offsets,
            self._order if order is None else order,
        )

    def __eq__(self, other):
        if not isinstance(other, EnsembleSpec):
            return NotImplemented
        return (
            self._base == other._base
            and self._order == other._order
            and np.array_equal(self._pairs, other._pairs)
            and np.array_equal(self._amplitudes, other._amplitudes)
            and np.array_equal(self._offsets, other._offsets)
        )

    def __repr__(self):
        return f"EnsembleSpec(size={self.size}, s={self.s}, m={self._order})"


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    constraint: Optional[str] = None
    index: Optional[int] = None
    message: str = "ok"

    def __bool__(self):
        return self.ok


class Method(str, enum.Enum):
    GAMMA_1D = "gamma1d"
    GAMMA_HALFCUBE = "gammaHalfcube"
    SQRT_TRIPLE = "sqrtTriple"
    LP_EXACT = "lpExact"


@dataclass(frozen=True)
class DistanceCertificate:
    """
    A lower bound on the TV distance from ``p`` to a property class.

    ``lower_bound == scale * sum(per_unit_terms)``. The gamma and sqrt-triple methods keep the
    raw per-unit gamma values with ``scale`` 1 or 1/2; the LP keeps per-bin ``|p - q*| / 2``.
    """

    lower_bound: float
    per_unit_terms: np.ndarray
    method: Method
    scale: float = 1.0


@dataclass(frozen=True)
class PairConditionalPMF:
    pair: int
    count: int
    side: Side
    pmf: np.ndarray

    def check(self, tolerance=NORMALIZATION_TOLERANCE):
        if np.any(self.pmf < 0):
            return "pmf has a negative entry"
        if abs(math.fsum(self.pmf) - 1) > tolerance:
            return "pmf doesn't sum to one"
        return None


@dataclass(frozen=True)
class BoundInputs:
    s: int
    m: int
    N: int
    B: float
    x_max: float
    min_weight: float
    max_weight: float
    C: float = 1.0

    @classmethod
    def from_spec(cls, spec, N, C=1.0):
        if spec.s == 0:
            raise ValidationError("Bound inputs need at least one pair")
        weights = spec.pair_weights
        masses = spec.base.masses
        smaller = np.minimum(masses[spec.pairs[:, 0]], masses[spec.pairs[:, 1]])
        x_max = float(np.max(np.abs(spec.amplitudes) * (1 + np.abs(spec.offsets)) / smaller))
        return cls(
            s=spec.s,
            m=spec.order,
            N=int(N),
            B=2 * float(weights.max()) * N,
            x_max=x_max,
            min_weight=float(weights.min()),
            max_weight=float(weights.max()),
            C=float(C),
        )


@dataclass
class TVReport:
    N: int
    per_pair: np.ndarray
    marginal_bound: float
    B: float
    tail_term: float
    crude_bound: float
    truncated: bool = False
    warnings: Tuple[str, ...] = field(default_factory=tuple)
    mc_estimate: Optional[float] = None
    mc_radius: Optional[float] = None
