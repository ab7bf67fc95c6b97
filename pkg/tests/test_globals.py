# Feasible parameter grid. Values of n0, m and the enumeration mode were worked out from the
# builders' feasibility inequalities and are asserted in test_instances.py

C = 1.0
DEFAULT_C = 4.0

FEASIBLE_MONOTONE_1D = [
    # (n, epsilon, m, exhaustive), at C
    (6, 1e-6, 15, True),
    (12, 5e-7, 15, False),
    (60, 8e-8, 17, False),
]

FEASIBLE_MONOTONE_DD = [
    # (d, n, epsilon, m, exhaustive), at C
    (2, 8, 1e-6, 15, True),
    (3, 12, 7e-7, 15, False),
]

FEASIBLE_LOG_CONCAVE = [
    # (n, epsilon, m, exhaustive), at C
    (12, 4e-7, 15, True),
    (18, 1.2e-7, 17, True),
    (60, 7e-9, 19, False),
]

FEASIBLE_AT_DEFAULT_C = [
    # (family, d, n, epsilon, m), at DEFAULT_C, all small enough to enumerate
    ("monotone1d", 1, 6, 1e-8, 75),
    ("monotoneDd", 2, 4, 1e-8, 75),
    ("logconcave", 1, 12, 1e-10, 93),
]

# No-side draws of these are certified eps-far with probability >= 0.95
FARNESS_MONOTONE_1D = (200, 1.5e-8)
FARNESS_MONOTONE_DD = (2, 48, 1.2e-7)

# Log-concave triples stay inside the sqrt-triple window from n0 = 18 on
FARNESS_LOG_CONCAVE = (18, 1.2e-7)

# Indistinguishability at the lower-bound sample size: N = theorem_lower_bound with k1 below
INDIST_MONOTONE_1D = (60, 8e-8)
INDIST_K1 = 1e-3

MOMENT_ORDERS = [3, 5, 7, 9, 11, 13, 15]
MOMENT_AMPLITUDES = [1e-3, 1.0]
