"""Closed-form steady-state utilization under the Trim-modified workload.

With trim probability q the In-Use object count is approximately Gaussian
with mean u*s and variance u*s_bar, where s = (1-2q)/(1-q) and
s_bar = q/(1-q).
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TrimParams:
    s: float
    s_bar: float


@dataclass(frozen=True)
class AnalyticMoments:
    mean_objects: float
    var_objects: float
    mean_pages: float
    var_pages: float

    @property
    def sd_objects(self):
        return math.sqrt(self.var_objects)

    @property
    def sd_pages(self):
        return math.sqrt(self.var_pages)


def _check_q(q):
    if not 0.0 <= q < 0.5:
        raise ValueError(f"trim probability must satisfy 0 <= q < 0.5, got {q}")


def trim_params(q):
    _check_q(q)
    return TrimParams(s=(1 - 2 * q) / (1 - q), s_bar=q / (1 - q))


def object_moments(u, q):
    """Mean and variance of the steady-state In-Use object count."""
    tp = trim_params(q)
    return u * tp.s, u * tp.s_bar


def page_moments(u, q, dist):
    """Mean and variance of the steady-state valid page count.

    Sizes are redrawn independently on every write, so
    E[Y] = m_Z*u*s and Var[Y] = sigma_Z^2*u*s + m_Z^2*u*s_bar.
    For a fixed size b this is exactly (b*u*s, b^2*u*s_bar).
    """
    mean_x, var_x = object_moments(u, q)
    m, v = dist.mean, dist.var
    return AnalyticMoments(
        mean_objects=mean_x,
        var_objects=var_x,
        mean_pages=m * mean_x,
        var_pages=v * mean_x + m * m * var_x,
    )


def _check_u(u):
    if u < 2:
        raise ValueError(f"pairwise statistics need u >= 2, got {u}")


def covariance_chi(u, q):
    """Covariance of two distinct In-Use indicators, s_bar^2 / (u-1)."""
    _check_u(u)
    return trim_params(q).s_bar ** 2 / (u - 1)


def pair_in_use_expectation(u, q, form="product"):
    """E[chi_i chi_j] for i != j.

    ``form="product"`` evaluates s*(u*s - 1 + s_bar/s)/(u-1);
    ``form="sum"`` evaluates s_bar^2/(u-1) + s^2.  The two are algebraically
    equal.
    """
    _check_u(u)
    tp = trim_params(q)
    if form == "sum":
        return covariance_chi(u, q) + tp.s ** 2
    if form != "product":
        raise ValueError(f"unknown form {form!r}")
    return tp.s * (u * tp.s - 1 + tp.s_bar / tp.s) / (u - 1)


def effective_spare(q, spare_factor):
    """Mean effective spare factor s_bar + s*S_f."""
    if not 0.0 <= spare_factor <= 1.0:
        raise ValueError(f"spare factor must lie in [0, 1], got {spare_factor}")
    tp = trim_params(q)
    return tp.s_bar + tp.s * spare_factor


def gaussian_pdf(mean, variance, x):
    """Normal density at ``x`` (scalar or array)."""
    if variance <= 0:
        raise ValueError(f"variance must be positive, got {variance}")
    x = np.asarray(x, dtype=float)
    out = np.exp(-((x - mean) ** 2) / (2 * variance)) / math.sqrt(2 * math.pi * variance)
    return float(out) if out.ndim == 0 else out
