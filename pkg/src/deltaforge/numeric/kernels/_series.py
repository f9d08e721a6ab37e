"""Shared Taylor coefficients for the sinc-kernel family near w = 0.

With g(w) = sin(w)/w = sum_j (-1)^j w^(2j) / (2j+1)!, the n-th derivative is

    g^(n)(w) = sum_{2j >= n} (-1)^j * (2j)! / ((2j-n)! (2j+1)!) * w^(2j-n)

Both kernel backends read this one table so their small-|w| branches agree
bit for bit.
"""

from math import factorial

MAX_ORDER = 4
_JMAX = 14  # powers up to w^(2*JMAX); far below double precision at |w| < 0.5

# SERIES[n] is a list of (power, coefficient) pairs.
SERIES: list[list[tuple[int, float]]] = []
for _n in range(MAX_ORDER + 1):
    row = []
    for _j in range(_JMAX + 1):
        if 2 * _j < _n:
            continue
        num = factorial(2 * _j)
        den = factorial(2 * _j - _n) * factorial(2 * _j + 1)
        coeff = ((-1) ** _j) * (num / den)
        row.append((2 * _j - _n, coeff))
    SERIES.append(row)
