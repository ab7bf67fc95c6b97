"""
How hard the yes and no ensembles are to tell apart from N samples.

Given that ``B_i`` of the N samples land in pair i, the count in the first bin of the pair is
a mixture over the kernel atoms of ``Binomial(B_i, (Q_j + delta)/(Q_j + Q_k))``. The yes and no
mixtures agree for every ``B_i < m`` since the kernels share their first ``m - 1`` moments.
"""

__all__ = [
    "Knobs",
    "binomial_logpmf",
    "pair_conditional_pmf",
    "pair_tv",
    "aggregate_tv_bound",
    "mc_tv_estimate",
    "prop1_bound",
    "corollary1_check",
    "theorem_lower_bound",
    "theorem_branch",
]

import math
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import special, stats

from .excs import DegenerateLikelihoodError, HypothesisWarning, ValidationError
from .instances import Family, domain_cap
from .kernels import Side
from .models import PairConditionalPMF, TVReport
from .utils import _dict


DEFAULT_TRIALS = 10 ** 5
EXACT_SUM_LIMIT = 4096
WINDOW_SIGMAS = 12
COUNT_BLOCK = 64
MC_BLOCK = 1024

DEFAULT_KNOBS = {
    "c1": 1.0,
    "c2": 1.0,
    "c3": 1.0,
    "c4": 1.0,
    "k1": 1.0,
    "k2": 1.0,
    "k3": 1.0,
    "ca": 1.0,
    "cb": 1.0,
    "cs": 1.0,
}


class Knobs(_dict):
    """
    Constants standing in for the big-O factors of the bounds. Every one defaults to 1, which
    is an arbitrary choice.

    * c1..c4: prop1_bound
    * k1..k3: theorem_lower_bound
    * ca, cb, cs: corollary1_check
    """

    def __init__(self, **overrides):
        super().__init__(DEFAULT_KNOBS)
        for key, value in overrides.items():
            if key not in DEFAULT_KNOBS:
                raise ValidationError(f"Unknown knob: {key}. Expected one of: {', '.join(DEFAULT_KNOBS)}")
            self[key] = float(value)

    @classmethod
    def from_assignments(cls, assignments):
        """ Builds knobs from ``["c1=2", "k1=1e-3"]`` style strings """
        overrides = {}
        for assignment in assignments or ():
            key, sep, value = assignment.partition("=")
            if not sep:
                raise ValidationError(f"Knob assignment must look like key=value, got {assignment!r}")
            try:
                overrides[key.strip()] = float(value)
            except ValueError:
                raise ValidationError(f"Knob {key.strip()} needs a number, got {value!r}")
        return cls(**overrides)


def binomial_logpmf(k, n, p):
    """ log Binomial(n, p)(k) through log-gamma, finite for n up to well beyond 10**5 """
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    p = np.asarray(p, dtype=float)
    return (
        special.gammaln(n + 1)
        - special.gammaln(k + 1)
        - special.gammaln(n - k + 1)
        + special.xlogy(k, p)
        + special.xlog1py(n - k, -p)
    )


def _success_probabilities(spec, i, side):
    j, k = spec.pairs[i]
    qj, qk = spec.base.masses[j], spec.base.masses[k]
    weight = qj + qk
    return np.clip((qj + spec.atom_table(side)[i]) / weight, 0.0, 1.0)


def _mixture_pmf(probabilities, count, ell):
    return np.mean([np.exp(binomial_logpmf(ell, count, p)) for p in probabilities], axis=0)


def pair_conditional_pmf(spec, i, side, count):
    """
    Law of the first-bin count of pair ``i`` given ``count`` samples in the pair

    Arguments:

        spec (lbforge.models.EnsembleSpec): The ensemble

        i (int): 0-based pair index

        side (lbforge.kernels.Side): yes or no

        count (int): B_i

    Returns:

        lbforge.models.PairConditionalPMF
    """
    if count < 0:
        raise ValidationError(f"Pair count must be nonnegative, got {count}")
    side = Side.parse(side)
    ell = np.arange(int(count) + 1)
    pmf = _mixture_pmf(_success_probabilities(spec, i, side), int(count), ell)
    return PairConditionalPMF(int(i), int(count), side, pmf)


def pair_tv(spec, i, count):
    """ Total variation between the yes and no conditionals of pair ``i`` at ``count`` samples """
    yes = pair_conditional_pmf(spec, i, Side.YES, count).pmf
    no = pair_conditional_pmf(spec, i, Side.NO, count).pmf
    return float(np.abs(yes - no).sum() / 2)


def _pair_tv_curve(yes_probabilities, no_probabilities, counts):
    """
    pair_tv at each of the increasing ``counts``, evaluated COUNT_BLOCK counts at a time over a
    window of first-bin counts. Mass the window cuts off is added back in full, so every value
    is an upper bound that is exact whenever the window covers ``0..count``.
    """
    counts = np.asarray(counts, dtype=np.int64)
    p_low = min(yes_probabilities.min(), no_probabilities.min())
    p_high = max(yes_probabilities.max(), no_probabilities.max())
    curve = np.zeros(counts.size)
    for start in range(0, counts.size, COUNT_BLOCK):
        block = counts[start : start + COUNT_BLOCK]
        low_count, high_count = int(block[0]), int(block[-1])
        spread = WINDOW_SIGMAS * math.sqrt(high_count / 4) + 1
        lo = max(0, int(math.floor(low_count * p_low - spread)))
        hi = min(high_count, int(math.ceil(high_count * p_high + spread)))
        ell = np.arange(lo, hi + 1)[None, :]
        b = block[:, None]
        valid = ell <= b
        capped = np.minimum(ell, b)

        yes = np.zeros((block.size, ell.size))
        no = np.zeros((block.size, ell.size))
        for p in yes_probabilities:
            yes += np.where(valid, np.exp(binomial_logpmf(capped, b, p)), 0.0)
        for p in no_probabilities:
            no += np.where(valid, np.exp(binomial_logpmf(capped, b, p)), 0.0)
        yes /= yes_probabilities.size
        no /= no_probabilities.size

        values = np.abs(yes - no).sum(axis=1) / 2
        truncated = (lo > 0) | (hi < block)
        if np.any(truncated):
            cut = (np.maximum(0.0, 1 - yes.sum(axis=1)) + np.maximum(0.0, 1 - no.sum(axis=1))) / 2
            values = np.where(truncated, values + cut, values)
        curve[start : start + block.size] = np.minimum(values, 1.0)
    return curve


def _marginal_bound(yes_probabilities, no_probabilities, weight, N):
    """ E[pair_tv(B)] with B ~ Binomial(N, weight). Returns (value, truncated) """
    if weight <= 0 or N == 0:
        return 0.0, False
    if N <= EXACT_SUM_LIMIT:
        counts = np.arange(N + 1)
        probabilities = np.exp(binomial_logpmf(counts, N, weight))
        return float(probabilities @ _pair_tv_curve(yes_probabilities, no_probabilities, counts)), False
    mean = N * weight
    sd = math.sqrt(N * weight * (1 - weight))
    lo = max(0, int(math.floor(mean - WINDOW_SIGMAS * sd)))
    hi = min(N, int(math.ceil(mean + WINDOW_SIGMAS * sd)))
    counts = np.arange(lo, hi + 1)
    probabilities = np.exp(binomial_logpmf(counts, N, weight))
    tails = (stats.binom.cdf(lo - 1, N, weight) if lo > 0 else 0.0) + stats.binom.sf(hi, N, weight)
    body = probabilities @ _pair_tv_curve(yes_probabilities, no_probabilities, counts)
    return float(body + tails), True


def aggregate_tv_bound(spec, N):
    """
    Upper bound on d_TV(D_yes^N, D_no^N): the sum over pairs of E[pair_tv(i, B_i)]

    Pair counts have the same Binomial(N, Q_j + Q_k) marginal under both ensembles, so summing
    per-pair expectations bounds the TV of the joint count profile. The coarser split with
    ``B = 2 max_i (Q_j + Q_k) N`` is reported alongside: ``P(some B_i > B) + sum_i pair_tv(i, B)``.

    Returns:

        lbforge.models.TVReport
    """
    N = int(N)
    if N < 0:
        raise ValidationError(f"Sample size must be nonnegative, got {N}")
    recorded = []
    weights = spec.pair_weights
    if spec.s:
        threshold = 6 * math.log(spec.s) / float(weights.min())
        if N <= threshold:
            message = f"N = {N} <= 6 ln s / min pair weight = {threshold:.6g}; the aggregate bound is outside its hypothesis"
            warnings.warn(message, HypothesisWarning)
            recorded.append(message)

    cache = {}
    per_pair = np.zeros(spec.s)
    truncated = False
    B = 2 * float(weights.max()) * N if spec.s else 0.0
    crude_counts = int(math.floor(B))
    tail_term = 0.0
    crude_sum = 0.0
    masses = spec.base.masses
    for i, (j, k) in enumerate(spec.pairs.tolist()):
        key = (masses[j], masses[k], spec.amplitudes[i], spec.offsets[i])
        if key not in cache:
            yes = _success_probabilities(spec, i, Side.YES)
            no = _success_probabilities(spec, i, Side.NO)
            value, cut = _marginal_bound(yes, no, float(weights[i]), N)
            crude = float(_pair_tv_curve(yes, no, [crude_counts])[0])
            cache[key] = (value, cut, crude)
        value, cut, crude = cache[key]
        per_pair[i] = value
        truncated = truncated or cut
        crude_sum += crude
        tail_term += float(stats.binom.sf(crude_counts, N, float(weights[i])))

    return TVReport(
        N=N,
        per_pair=per_pair,
        marginal_bound=float(per_pair.sum()),
        B=B,
        tail_term=tail_term,
        crude_bound=tail_term + crude_sum,
        truncated=truncated,
        warnings=tuple(recorded),
    )


# ---- Monte Carlo ----#


def _log_mixture(first, second, ratios_first, ratios_second):
    """
    log of the per-pair likelihood relative to the unperturbed pair, for every trial

    ``first``/``second`` are (trials, s) counts, ``ratios_*`` are (s, m) values ``delta/Q``.
    """
    terms = special.xlog1py(first[:, :, None], ratios_first[None, :, :]) + special.xlog1py(
        second[:, :, None], -ratios_second[None, :, :]
    )
    return special.logsumexp(terms, axis=2) - math.log(ratios_first.shape[1])


def _mc_chunk(spec, N, trials, rng):
    masses = spec.base.masses
    qj = masses[spec.pairs[:, 0]]
    qk = masses[spec.pairs[:, 1]]
    weights = qj + qk
    rest = max(0.0, 1 - float(weights.sum()))
    pvals = np.append(weights, rest)
    pvals = pvals / pvals.sum()

    yes_table = spec.atom_table(Side.YES)
    no_table = spec.atom_table(Side.NO)

    def relative(table, q):
        return np.divide(table, q[:, None], out=np.zeros_like(table), where=q[:, None] > 0)

    yes_first, yes_second = relative(yes_table, qj), relative(yes_table, qk)
    no_first, no_second = relative(no_table, qj), relative(no_table, qk)

    rows = np.arange(spec.s)
    values = []
    for start in range(0, trials, MC_BLOCK):
        size = min(MC_BLOCK, trials - start)
        pair_counts = rng.multinomial(N, pvals, size=size)[:, : spec.s]
        picks = rng.integers(spec.order, size=(size, spec.s))
        realized = yes_table[rows[None, :], picks]
        success = np.divide(qj + realized, weights, out=np.zeros_like(realized), where=weights > 0)
        first = rng.binomial(pair_counts, np.clip(success, 0.0, 1.0))
        second = pair_counts - first

        log_yes = _log_mixture(first, second, yes_first, yes_second).sum(axis=1)
        if np.any(np.isneginf(log_yes)):
            raise DegenerateLikelihoodError("A count profile drawn from the yes ensemble has zero yes likelihood")
        log_no = _log_mixture(first, second, no_first, no_second).sum(axis=1)
        values.append(np.maximum(0.0, -np.expm1(log_no - log_yes)))
    return np.concatenate(values) if values else np.zeros(0)


def mc_tv_estimate(spec, N, trials=DEFAULT_TRIALS, rng=None, workers=1):
    """
    Monte Carlo estimate of d_TV(D_yes^N, D_no^N) as E_yes[(1 - L_no/L_yes)^+]

    Only the per-pair factors of the likelihoods are evaluated; multinomial coefficients and
    unpaired bins cancel in the ratio. Trials are split across ``workers`` threads, each with its
    own substream spawned from one master seed drawn from ``rng``, so the result is fixed by
    the seed and the worker count.

    Returns:

        tuple: (estimate, 95% confidence radius)

    Raises:

        lbforge.excs.DegenerateLikelihoodError: A yes draw has zero yes likelihood
    """
    if trials < 2:
        raise ValidationError(f"Need at least 2 trials, got {trials}")
    if workers < 1:
        raise ValidationError(f"Need at least 1 worker, got {workers}")
    rng = np.random.default_rng() if rng is None else rng
    if spec.s == 0:
        return 0.0, 0.0

    master = np.random.SeedSequence(int(rng.integers(2 ** 63)))
    streams = [np.random.default_rng(child) for child in master.spawn(workers)]
    shares = [trials // workers + (1 if w < trials % workers else 0) for w in range(workers)]
    if workers == 1:
        chunks = [_mc_chunk(spec, int(N), shares[0], streams[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_mc_chunk, spec, int(N), share, stream) for share, stream in zip(shares, streams)]
            chunks = [future.result() for future in futures]
    values = np.concatenate(chunks)
    estimate = float(values.mean())
    radius = float(1.96 * values.std(ddof=1) / math.sqrt(values.size))
    return estimate, radius


# ---- Closed forms ----#


def _log_or_inf(value):
    return math.log(value) if value > 0 else -math.inf


def prop1_bound(inputs, knobs=None):
    """
    ``c1/s + m^4 s c2 U (1 + x)^(c3 U) (c4 (sqrt(x^2 B ln s) + x^2 B))^m`` with
    ``U = sqrt(B ln s) + x B`` and ``x = x_max``, evaluated in log space

    Arguments:

        inputs (lbforge.models.BoundInputs): s, m, N, B, x_max and pair weights

        knobs (lbforge.indist.Knobs): Constants c1..c4

    Returns:

        tuple: (value, violations). ``violations`` names every hypothesis that fails; the value
        is computed regardless. N = 0 gives (0.0, []).
    """
    knobs = Knobs() if knobs is None else knobs
    s, m, B, x = inputs.s, inputs.m, float(inputs.B), float(inputs.x_max)
    if s < 1:
        raise ValidationError(f"prop1_bound needs at least one pair, got s = {s}")
    # zero samples can't tell the ensembles apart
    if inputs.N == 0:
        return 0.0, []
    log_s = math.log(s)

    violations = []
    if x >= 0.1:
        violations.append(f"x_max = {x:.6g} >= 1/10")
    if m < inputs.C * log_s:
        violations.append(f"m = {m} < C ln s = {inputs.C * log_s:.6g}")
    if inputs.min_weight > 0 and inputs.N <= 6 * log_s / inputs.min_weight:
        violations.append(f"N = {inputs.N} <= 6 ln s / min pair weight = {6 * log_s / inputs.min_weight:.6g}")
    for violation in violations:
        warnings.warn(f"prop1_bound: {violation}", HypothesisWarning)

    head = knobs.c1 / s
    spread = math.sqrt(B * log_s) + x * B
    base = knobs.c4 * (math.sqrt(x * x * B * log_s) + x * x * B)
    if spread <= 0 or base <= 0 or knobs.c2 <= 0:
        return head, violations
    log_tail = (
        4 * math.log(m)
        + log_s
        + math.log(knobs.c2)
        + math.log(spread)
        + knobs.c3 * spread * math.log1p(x)
        + m * math.log(base)
    )
    try:
        tail = math.exp(log_tail)
    except OverflowError:
        tail = math.inf
    return head + tail, violations


def corollary1_check(inputs, epsilon, knobs=None):
    """
    Returns:

        list: The hypotheses ``B x_max^2 <= ca/ln s``, ``m >= cb ln(s/(x_max eps))`` and ``s >= cs``
        that fail, as readable strings
    """
    knobs = Knobs() if knobs is None else knobs
    s, m, B, x = inputs.s, inputs.m, float(inputs.B), float(inputs.x_max)
    failed = []
    log_s = math.log(s) if s > 0 else -math.inf
    limit = knobs.ca / log_s if log_s > 0 else math.inf
    if B * x * x > limit:
        failed.append(f"B x_max^2 = {B * x * x:.6g} > ca/ln s = {limit:.6g}")
    needed = knobs.cb * (math.log(s / (x * epsilon)) if x > 0 and s > 0 else math.inf)
    if m < needed:
        failed.append(f"m = {m} < cb ln(s/(x_max eps)) = {needed:.6g}")
    if s < knobs.cs:
        failed.append(f"s = {s} < cs = {knobs.cs:.6g}")
    return failed


def theorem_branch(params):
    """ ``"n"`` when n attains the min in the sample-complexity bound, ``"ε-cap"`` otherwise """
    if params.family is Family.LOG_CONCAVE:
        cap = domain_cap(Family.LOG_CONCAVE, params.epsilon, C=1.0)
    else:
        cap = domain_cap(Family.MONOTONE_DD, params.epsilon, params.d, C=1.0)
    return "n" if params.n <= cap else "ε-cap"


def theorem_lower_bound(params, knobs=None):
    """
    Sample-complexity lower bound with every big-O factor replaced by a knob

    * monotone, any d: ``k1 2^(-k2 d) d^-d eps^-2 L^-7 min(n, d/(eps L^3))^d``
    * log-concave: ``k3 L^-7 eps^-2 min(n, eps^(-1/2) L^(-3/2))``

    with ``L = ln(1/eps)``.
    """
    knobs = Knobs() if knobs is None else knobs
    eps = params.epsilon
    log_inv = math.log(1 / eps)
    if params.family is Family.LOG_CONCAVE:
        cap = 1 / (math.sqrt(eps) * log_inv ** 1.5)
        return knobs.k3 * log_inv ** -7 * eps ** -2 * min(params.n, cap)
    d = params.d
    cap = d / (eps * log_inv ** 3)
    return knobs.k1 * 2.0 ** (-knobs.k2 * d) * float(d) ** -d * eps ** -2 * log_inv ** -7 * min(params.n, cap) ** d