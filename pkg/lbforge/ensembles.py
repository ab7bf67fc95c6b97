"""
The generic yes/no ensemble engine.

Given an EnsembleSpec, a yes (no) draw picks one yes (no) kernel atom per pair,
independently, adds it to the first bin of the pair and removes it from the second. No
renormalization ever happens: pair sums are preserved, so the result stays normalized.
Unpaired bins pass through with their base mass.
"""

__all__ = [
    "DiscreteDistribution",
    "EnsembleSpec",
    "ValidationReport",
    "validate",
    "draw",
    "draw_many",
    "deltas",
    "enumerate_atoms",
    "sample_dataset",
    "x_max",
]

import itertools

import numpy as np

from .excs import BudgetExceededError, ValidationError
from .kernels import Side
from .models import DiscreteDistribution, EnsembleSpec, ValidationReport


DEFAULT_ENUMERATION_BUDGET = 10 ** 6


def validate(spec):
    """
    Checks the distribution invariants of the base and the Definition-style invariants of the pairs

    Returns:

        lbforge.models.ValidationReport: ``ok`` or the first violated constraint. Pair indexes
        in the report are 0-based, messages name them 1-based.
    """
    problem = spec.base.check()
    if problem is not None:
        return ValidationReport(False, "base", None, f"base distribution: {problem}")
    if spec.order < 1:
        return ValidationReport(False, "order", None, f"kernel order m = {spec.order} must be >= 1")

    masses = spec.base.masses
    used = {}
    for i, (j, k) in enumerate(spec.pairs.tolist()):
        for b in (j, k):
            if not 0 <= b < spec.size:
                return ValidationReport(False, "range", i, f"pair {i + 1}: bin {b} is outside 0..{spec.size - 1}")
        if j == k:
            return ValidationReport(False, "disjointness", i, f"pair {i + 1}: bin {j} is paired with itself")
        for b in (j, k):
            if b in used:
                return ValidationReport(
                    False,
                    "disjointness",
                    i,
                    f"pair {i + 1}: bin {b} reused (already in pair {used[b] + 1})",
                )
            used[b] = i

        amplitude = abs(spec.amplitudes[i])
        offset = abs(spec.offsets[i])
        bound = min(masses[j], masses[k]) / (1 + offset)
        if not np.isfinite(amplitude) or amplitude > bound:
            return ValidationReport(
                False,
                "amplitude",
                i,
                f"pair {i + 1}: |A| = {amplitude!r} exceeds min(Q_j, Q_k)/(1+|g|) = {bound!r}",
            )
    return ValidationReport(True)


def _require_valid(spec):
    if spec._report is None:
        spec._report = validate(spec)
    if not spec._report.ok:
        raise ValidationError(f"Invalid ensemble spec: {spec._report.message}")


def x_max(spec):
    """ Largest relative bin perturbation max_i |A_i|(1+|g_i|)/min(Q_j, Q_k) """
    if spec.s == 0:
        return 0.0
    masses = spec.base.masses
    smaller = np.minimum(masses[spec.pairs[:, 0]], masses[spec.pairs[:, 1]])
    return float(np.max(np.abs(spec.amplitudes) * (1 + np.abs(spec.offsets)) / smaller))


def draw_many(spec, side, rng, size):
    """
    Draws ``size`` independent distributions from one side

    Returns:

        tuple: (masses, deltas) with shapes (size, |S|) and (size, s)
    """
    _require_valid(spec)
    table = spec.atom_table(side)
    picks = rng.integers(spec.order, size=(size, spec.s))
    realized = table[np.arange(spec.s)[None, :], picks]
    masses = np.tile(spec.base.masses, (size, 1))
    masses[:, spec.pairs[:, 0]] += realized
    masses[:, spec.pairs[:, 1]] -= realized
    return masses, realized


def draw(spec, side, rng):
    masses, _ = draw_many(spec, side, rng, 1)
    return DiscreteDistribution(masses[0])


def deltas(spec, side, rng):
    _, realized = draw_many(spec, side, rng, 1)
    return realized[0]


def enumerate_atoms(spec, side, budget=DEFAULT_ENUMERATION_BUDGET):
    """
    Yields every joint kernel outcome of one side

    Arguments:

        spec (lbforge.models.EnsembleSpec): Spec to enumerate

        side (lbforge.kernels.Side): Side to enumerate

        budget (int): Largest number of outcomes allowed

    Yields:

        tuple: (probability, DiscreteDistribution), m**s of them, each with probability m**-s

    Raises:

        lbforge.excs.BudgetExceededError: m**s > budget
    """
    total = spec.order ** spec.s
    if total > budget:
        raise BudgetExceededError(
            f"m^s = {spec.order}^{spec.s} = {total} outcomes exceeds the enumeration budget {budget}",
            size=total,
            budget=budget,
        )
    _require_valid(spec)
    table = spec.atom_table(side)
    rows = np.arange(spec.s)
    probability = 1 / total
    for picks in itertools.product(range(spec.order), repeat=spec.s):
        realized = table[rows, list(picks)]
        masses = spec.base.masses.copy()
        masses[spec.pairs[:, 0]] += realized
        masses[spec.pairs[:, 1]] -= realized
        yield probability, DiscreteDistribution(masses)


def sample_dataset(p, N, rng):
    """
    Multinomial(N, p) counts over the bins of ``p``

    Raises:

        lbforge.excs.ValidationError: N is negative or ``p`` has a negative mass or isn't normalized
    """
    if N < 0:
        raise ValidationError(f"Sample size must be nonnegative, got {N}")
    problem = p.check()
    if problem is not None:
        raise ValidationError(f"Can't sample from an invalid distribution: {problem}")
    return rng.multinomial(int(N), p.masses / p.masses.sum())
