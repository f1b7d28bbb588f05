"""Analytic write-amplification predictors for greedy garbage collection.

Both models take the device size T (pages), the user space u (pages or
one-page objects), the trim probability q and the pages-per-block count n_p.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from trimssd._binom import binomial_sf
from trimssd.analytics import trim_params
from trimssd.errors import ModelBreakdownError

_INV_E = math.exp(-1.0)
# 1/e = _INV_E + _INV_E_LO to double-double precision
_INV_E_LO = -1.2428753672788363e-17
# branch-point series W = sum c_k p^k with p = sqrt(2(e x + 1))
_BRANCH_SERIES = (-1.0, 1.0, -1.0 / 3.0, 11.0 / 72.0, -43.0 / 540.0, 769.0 / 17280.0,
                  -221.0 / 8505.0, 680863.0 / 43545600.0, -1963.0 / 204120.0)


def lambert_w0(x):
    """Principal branch of the Lambert W function for real ``x >= -1/e``.

    Starts from a branch-point series, a log-based guess or ``log1p`` and
    polishes with Halley's iteration.  Very close to -1/e the iteration
    cannot resolve w + 1 (it loses half the digits to cancellation), so the
    series is evaluated directly from x + 1/e carried in double-double.
    """
    x = float(x)
    if math.isnan(x):
        return x
    if x < -_INV_E:
        # -1/e itself rounds to a double a hair below the true value
        if x < -_INV_E * (1 + 4e-16):
            raise ValueError(f"lambert_w0 is undefined for x < -1/e, got {x}")
        return -1.0
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return x
    if x < -0.32:
        d = (x + _INV_E) + _INV_E_LO  # x + 1/e, exact to ~1e-33
        p = math.sqrt(max(2.0 * math.e * d, 0.0))
        w = math.fsum(c * p ** k for k, c in enumerate(_BRANCH_SERIES))
        if p < 1e-3:
            return w
    elif x < 3.0:
        w = math.log1p(x)
        if x < 0:
            w = x * (1 - x)  # keeps the guess inside (-1, 0)
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1
    for _ in range(64):
        if w == -1.0:
            break
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w_next = w - step
        if w_next <= -1.0:
            w_next = (w - 1.0) / 2.0 if w > -1.0 else -1.0
        if abs(w_next - w) <= 4e-16 * (1.0 + abs(w_next)):
            w = w_next
            break
        w = w_next
    return w


@dataclass(frozen=True)
class WaPrediction:
    model: str
    value: float
    intermediates: dict = field(default_factory=dict, compare=False)


def xiang_wa(T, u, q, n_p):
    """Trim-modified Xiang model with the n_p dependence kept.

    WA = n_p / y with
    y = n_p - W0(T' c^T' ln c) / ((T'/n_p) ln c),  T' = T (1+s_bar),
    c = 1 - 1/(s (1+s_bar) u).
    """
    tp = trim_params(q)
    k = tp.s * (1 + tp.s_bar) * u
    if k <= 1:
        raise ModelBreakdownError(f"s(1+s_bar)u = {k} must exceed 1")
    t_eff = T * (1 + tp.s_bar)
    log_c = math.log1p(-1.0 / k)
    arg = t_eff * math.exp(t_eff * log_c) * log_c
    w = lambert_w0(arg)
    y = n_p + (-w) / ((T / n_p) * (1 + tp.s_bar) * log_c)
    if not 0 < y <= n_p:
        raise ModelBreakdownError(f"y = {y} outside (0, n_p]")
    return WaPrediction("xiang", n_p / y, {"y": y, "w_argument": arg, "w": w})


def hu_wa(T, u, q, n_p, w=None):
    """Trim-modified Hu windowed-greedy model.

    ``p[j]`` is the chance a page of the j-th window block is still valid,
    ``V[k]`` the chance every block in the window holds more than k valid
    pages, and ``p_star[k]`` the law of the victim's valid count.  The
    window defaults to every block (``T // n_p``); once ``p[j]`` reaches 1
    further blocks contribute a factor of exactly 1.

    The last entry of ``p_star`` is taken as ``V[n_p-1]`` (all blocks fully
    valid), which makes ``p_star`` a probability vector.
    """
    if n_p < 2:
        raise ModelBreakdownError("the Hu model needs at least 2 pages per block")
    w = T // n_p if w is None else int(w)
    if w < 1:
        raise ValueError(f"window must be >= 1 block, got {w}")
    us = u * trim_params(q).s
    if us <= 1:
        raise ModelBreakdownError(f"mean In-Use count u*s = {us} must exceed 1")

    growth = 1.1 / (1.0 - 1.0 / us) ** n_p
    p = np.empty(w)
    p[0] = math.exp(-1.9 * (T / us - 1.0))
    for j in range(1, w):
        p[j] = min(1.0, growth * p[j - 1])

    V = np.ones(n_p)
    for pj in p:
        if pj == 1.0:
            break  # every later row is exactly 1 as well
        V *= binomial_sf(n_p, pj)

    p_star = np.empty(n_p + 1)
    p_star[0] = 1.0 - V[0]
    p_star[1:n_p] = V[:-1] - V[1:]
    p_star[n_p] = V[n_p - 1]
    expected_min = float(np.dot(np.arange(n_p + 1), p_star))
    value = n_p / (n_p - expected_min)
    return WaPrediction("hu", value, {"window": w, "p": p, "V": V, "p_star": p_star})
