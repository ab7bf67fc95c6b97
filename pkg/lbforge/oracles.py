"""
Membership tests and distance certificates.

Monotone means ``p_i >= p_j`` whenever ``i < j``. On a lattice ``i < j`` is strict dominance in
every coordinate, so bins that are comparable only along some axes are unconstrained.
"""

__all__ = [
    "LatticeOrder",
    "is_monotone",
    "is_log_concave",
    "gamma_distance_1d",
    "gamma_distance_halfcube",
    "sqrt_triple_distance",
    "lp_distance_to_monotone",
]

import math

import numpy as np
from scipy import optimize, sparse

from .excs import BudgetExceededError, HypothesisViolationError, SolverError, ValidationError
from .models import DistanceCertificate, Method


MONOTONE_SLACK = 1e-12
LOG_CONCAVE_SLACK = 1e-12
DEFAULT_LP_BUDGET = 4096
LP_TOLERANCE = 1e-10


class LatticeOrder:
    """
    Strict-dominance order on ``[n]^d``. ``d == 1`` is the total order on ``[n]``.
    """

    def __init__(self, n, d=1):
        if n < 1 or d < 1:
            raise ValidationError(f"Can't order [{n}]^{d}")
        self.n = int(n)
        self.d = int(d)

    @classmethod
    def total(cls, n):
        return cls(n, 1)

    @classmethod
    def of(cls, p):
        """ Order implied by the lattice shape of ``p`` """
        shape = p.shape
        if len(set(shape)) != 1:
            raise ValidationError(f"Lattice must be a hypercube, got shape {shape}")
        return cls(shape[0], len(shape))

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def is_total(self):
        return self.d == 1

    def __eq__(self, other):
        if not isinstance(other, LatticeOrder):
            return NotImplemented
        return (self.n, self.d) == (other.n, other.d)

    def __repr__(self):
        return f"LatticeOrder(n={self.n}, d={self.d})"


def _resolve(p, order):
    order = LatticeOrder.of(p) if order is None else order
    if math.prod(order.shape) != p.size:
        raise ValidationError(f"{order!r} doesn't index {p.size} bins")
    return order, p.masses.reshape(order.shape)


def _upper_envelope(x):
    """ envelope[k] = max of x over the closed upper orthant of k """
    envelope = x
    for axis in range(x.ndim):
        flipped = np.flip(envelope, axis=axis)
        envelope = np.flip(np.maximum.accumulate(flipped, axis=axis), axis=axis)
    return envelope


def is_monotone(p, order=None, slack=MONOTONE_SLACK):
    """
    Arguments:

        p (lbforge.models.DiscreteDistribution): Distribution to test

        order (lbforge.oracles.LatticeOrder): Defaults to the order implied by ``p.shape``

        slack (float): Violations up to this size count as satisfied

    Returns:

        bool
    """
    order, x = _resolve(p, order)
    if order.is_total:
        return bool(np.all(x[:-1] - x[1:] >= -slack))
    # Strictly dominating bins of i are exactly the closed upper orthant of i + (1, ..., 1)
    head = tuple(slice(None, -1) for _ in range(order.d))
    tail = tuple(slice(1, None) for _ in range(order.d))
    upper = _upper_envelope(x)
    return bool(np.all(x[head] - upper[tail] >= -slack))


def is_log_concave(p, slack=LOG_CONCAVE_SLACK):
    """ Contiguous support and ``p_i**2 >= p_(i-1) p_(i+1)`` at interior support points """
    masses = p.masses
    support = np.flatnonzero(masses > 0)
    if support.size == 0:
        return False
    if support[-1] - support[0] + 1 != support.size:
        return False
    x = masses[support[0] : support[-1] + 1]
    lhs = x[1:-1] ** 2
    rhs = x[:-2] * x[2:]
    return bool(np.all(lhs - rhs >= -slack * np.maximum(lhs, rhs)))


def gamma_distance_1d(p, limit=None):
    """
    Pairing lower bound on the distance from ``p`` to monotone

    Bins ``(2i, 2i + 1)`` form disjoint pairs. A pair whose first bin is lighter contributes
    half the difference.

    Arguments:

        p (lbforge.models.DiscreteDistribution): 1-D distribution

        limit (int): Only pair the first ``limit`` bins. Defaults to all of them. Must be even.

    Returns:

        lbforge.models.DistanceCertificate
    """
    limit = p.size if limit is None else int(limit)
    if limit % 2 or not 0 <= limit <= p.size:
        raise ValidationError(f"gamma_distance_1d pairs an even prefix of the bins, got {limit} of {p.size}")
    x = p.masses[:limit]
    first, second = x[0::2], x[1::2]
    terms = np.where(first < second, (second - first) / 2, 0.0)
    return DistanceCertificate(float(terms.sum()), terms, Method.GAMMA_1D, 1.0)


def gamma_distance_halfcube(layout, p):
    """
    Lower bound on the distance from the halfcube lift of ``p`` to monotone on ``[n]^d``

    Arguments:

        layout (lbforge.instances.HalfcubeLayout): Layout of the halfcube bins

        p (lbforge.models.DiscreteDistribution): Halfcube masses, first halfcube of cube c at ``2c``

    Returns:

        lbforge.models.DistanceCertificate: with ``scale`` 1/2
    """
    if p.size != layout.num_halfcubes:
        raise ValidationError(f"Expected {layout.num_halfcubes} halfcube masses, got {p.size}")
    d = layout.d
    factor = ((2 * d - 1) / (2 * d)) ** (d - 1)
    first, second = p.masses[0::2], p.masses[1::2]
    terms = factor * np.maximum(0.0, second - first)
    return DistanceCertificate(float(terms.sum() / 2), terms, Method.GAMMA_HALFCUBE, 0.5)


def sqrt_triple_distance(p, limit=None):
    """
    Lower bound on the distance from ``p`` to log-concave, over consecutive triples ``(a, b, c)``

    Every triple must sit in the window ``a > c > 4a/5`` and ``b > 3c/4``.

    Arguments:

        p (lbforge.models.DiscreteDistribution): 1-D distribution

        limit (int): Only use the first ``limit`` bins. Defaults to all. Must be a multiple of 3.

    Raises:

        lbforge.excs.HypothesisViolationError: A triple falls outside the window
    """
    limit = p.size if limit is None else int(limit)
    if limit % 3 or not 0 <= limit <= p.size:
        raise ValidationError(f"sqrt_triple_distance needs a multiple of 3 bins, got {limit} of {p.size}")
    triples = p.masses[:limit].reshape(-1, 3)
    a, b, c = triples[:, 0], triples[:, 1], triples[:, 2]
    outside = ~((a > c) & (c > 0.8 * a) & (b > 0.75 * c))
    if np.any(outside):
        t = int(np.flatnonzero(outside)[0])
        raise HypothesisViolationError(
            f"triple {t + 1} (bins {3 * t}..{3 * t + 2}) = ({a[t]!r}, {b[t]!r}, {c[t]!r}) "
            "is outside the window a > c > 0.8 a, b > 0.75 c",
            index=t,
        )
    terms = np.maximum(0.0, np.sqrt(a * c) - b)
    return DistanceCertificate(float(terms.sum() / 2), terms, Method.SQRT_TRIPLE, 0.5)


# ---- Exact distance to monotone ----#


def _rows(pairs_a, pairs_b, offset_a, offset_b, size):
    """ Sparse rows ``-v[offset_a + a] + v[offset_b + b]``, one per (a, b) """
    count = pairs_a.size
    rows = np.repeat(np.arange(count), 2)
    cols = np.column_stack([offset_a + pairs_a, offset_b + pairs_b]).ravel()
    vals = np.tile([-1.0, 1.0], count)
    return sparse.coo_matrix((vals, (rows, cols)), shape=(count, size))


def lp_distance_to_monotone(p, order=None, budget=DEFAULT_LP_BUDGET, shuffle=None):
    """
    Exact ``min (1/2)|p - q|_1`` over monotone distributions q, by linear programming

    The variables are the deviations ``z = (q - p) / s``, absolute values ``t >= |z|`` and, on a
    lattice, an upper envelope ``y`` with ``y_k >= z_k``, ``y`` nonincreasing along every axis and
    ``q_i >= envelope at i + (1, ..., 1)``. ``s`` rescales the right hand sides to unit size.

    Arguments:

        p (lbforge.models.DiscreteDistribution): Distribution to project

        order (lbforge.oracles.LatticeOrder): Defaults to the order implied by ``p.shape``

        budget (int): Largest number of bins accepted

        shuffle (numpy.random.Generator): Permute the constraint rows with this generator

    Returns:

        lbforge.models.DistanceCertificate: per-bin ``|p - q*| / 2``

    Raises:

        lbforge.excs.BudgetExceededError: More bins than ``budget``

        lbforge.excs.SolverError: The solver didn't reach an optimum
    """
    if p.size > budget:
        raise BudgetExceededError(f"|S| = {p.size} bins exceeds the LP budget {budget}", size=p.size, budget=budget)
    order, x = _resolve(p, order)
    size = p.size
    if is_monotone(p, order, slack=0.0):
        return DistanceCertificate(0.0, np.zeros(size), Method.LP_EXACT, 1.0)

    index = np.arange(size).reshape(order.shape)
    flat = x.ravel()
    if order.is_total:
        lower, upper = index[:-1].ravel(), index[1:].ravel()
        raw = flat[lower] - flat[upper]
        scale = float(np.max(np.abs(raw)))
        num_vars = 2 * size
        blocks = [_rows(lower, upper, 0, 0, num_vars)]
        rhs = [raw]
    else:
        head = tuple(slice(None, -1) for _ in range(order.d))
        tail = tuple(slice(1, None) for _ in range(order.d))
        diagonal_from, diagonal_to = index[head].ravel(), index[tail].ravel()
        axis_from, axis_to = [], []
        for axis in range(order.d):
            cut = [slice(None)] * order.d
            cut[axis] = slice(None, -1)
            axis_from.append(index[tuple(cut)].ravel())
            cut[axis] = slice(1, None)
            axis_to.append(index[tuple(cut)].ravel())
        axis_from, axis_to = np.concatenate(axis_from), np.concatenate(axis_to)
        diagonal_raw = flat[diagonal_from] - flat[diagonal_to]
        axis_raw = flat[axis_from] - flat[axis_to]
        scale = float(max(np.max(np.abs(diagonal_raw)), np.max(np.abs(axis_raw), initial=0.0)))
        num_vars = 3 * size
        y = 2 * size
        bins = np.arange(size)
        blocks = [
            _rows(bins, bins, y, 0, num_vars),  # z_k - y_k <= 0
            _rows(axis_from, axis_to, y, y, num_vars),  # envelope nonincreasing
            _rows(diagonal_from, diagonal_to, 0, y, num_vars),  # q_i >= envelope at i + 1
        ]
        rhs = [np.zeros(size), axis_raw, diagonal_raw]

    bins = np.arange(size)
    plus = sparse.coo_matrix(
        (np.concatenate([np.ones(size), -np.ones(size)]), (np.tile(bins, 2), np.concatenate([bins, size + bins]))),
        shape=(size, num_vars),
    )
    minus = sparse.coo_matrix(
        (np.concatenate([-np.ones(size), -np.ones(size)]), (np.tile(bins, 2), np.concatenate([bins, size + bins]))),
        shape=(size, num_vars),
    )
    A_ub = sparse.vstack(blocks + [plus, minus]).tocsr()
    b_ub = np.concatenate([r / scale for r in rhs] + [np.zeros(2 * size)])
    if shuffle is not None:
        permutation = shuffle.permutation(A_ub.shape[0])
        A_ub, b_ub = A_ub[permutation], b_ub[permutation]

    A_eq = sparse.csr_matrix((np.ones(size), (np.zeros(size, dtype=int), bins)), shape=(1, num_vars))
    bounds = [(-value / scale, None) for value in flat] + [(0, None)] * size
    if not order.is_total:
        bounds += [(None, None)] * size
    objective = np.concatenate([np.zeros(size), np.ones(size), np.zeros(num_vars - 2 * size)])

    res = optimize.linprog(
        objective,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=[0.0],
        bounds=bounds,
        method="highs-ds",
        options={"primal_feasibility_tolerance": LP_TOLERANCE, "dual_feasibility_tolerance": LP_TOLERANCE},
    )
    if res.status != 0:
        raise SolverError(f"Distance-to-monotone LP failed: {res.message}", status=res.status)
    terms = np.abs(res.x[:size]) * scale / 2
    return DistanceCertificate(float(res.fun * scale / 2), terms, Method.LP_EXACT, 1.0)
