"""Binomial mass and tail probabilities computed without cancellation."""

import math

import numpy as np


def binomial_pmf(n, p):
    """Return the probability mass of Binomial(n, p) over 0..n as an array.

    The mass is built by the ratio recurrence
    f(m+1)/f(m) = (n-m)/(m+1) * p/(1-p), run outward from the mode so that
    every step shrinks the weight (nothing overflows, far tails underflow
    harmlessly to 0), then normalized with an exactly rounded sum.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    out = np.zeros(n + 1)
    if p == 0.0:
        out[0] = 1.0
        return out
    if p == 1.0:
        out[n] = 1.0
        return out
    odds = p / (1.0 - p)
    mode = min(n, int(math.floor((n + 1) * p)))
    w = [0.0] * (n + 1)
    w[mode] = 1.0
    for m in range(mode, n):
        w[m + 1] = w[m] * (n - m) / (m + 1) * odds
    for m in range(mode, 0, -1):
        w[m - 1] = w[m] * m / ((n - m + 1) * odds)
    total = math.fsum(w)
    out[:] = w
    return out / total


def binomial_sf(n, p):
    """Upper tails P(K > k) for k = 0..n-1, summed from the top down.

    Summing the tail directly keeps small survival probabilities accurate,
    where 1 - cdf would lose them to rounding.  The result is clipped to
    [0, 1] and forced non-increasing, as the exact tail is.
    """
    pmf = binomial_pmf(n, p)
    tail = np.cumsum(pmf[::-1])[::-1]  # tail[k] = P(K >= k)
    return np.minimum.accumulate(np.clip(tail[1:], 0.0, 1.0))
