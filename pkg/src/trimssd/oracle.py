"""Object-space state tracking and the exact In-Use birth-death chain.

The simulated state is the ground truth the closed-form analytics are checked
against: :func:`run_utilization` drives the workload and measures the In-Use
object count X and valid page count Y, while :func:`stationary_distribution`
solves the chain on X exactly for small or moderate ``u``.
"""

import math
from dataclasses import dataclass

import numba
import numpy as np

from trimssd.errors import ContractViolation
from trimssd.workload import Trim, Write, _draw_request


class ObjectState:
    """In-Use flags and sizes for object IDs ``1..u``.

    ``in_use`` and ``size`` are indexed by ``id - 1``.  A size is kept after
    a Trim (only the flag drops), matching Y = sum(in_use * size).  The
    ``members``/``slot`` pair is a dense list of In-Use indices so that a
    Trim target can be drawn uniformly in O(1).
    """

    def __init__(self, u):
        self.u = u
        self.in_use = np.zeros(u, dtype=np.int8)
        self.size = np.zeros(u, dtype=np.int64)
        self.members = np.zeros(u, dtype=np.int64)
        self.slot = np.full(u, -1, dtype=np.int64)
        self.counts = np.zeros(2, dtype=np.int64)  # [X, Y]

    @property
    def X(self):
        return int(self.counts[0])

    @property
    def Y(self):
        return int(self.counts[1])

    def recount(self):
        """Recompute (X, Y) from the flag and size vectors."""
        return int(self.in_use.sum()), int((self.in_use * self.size).sum())

    def check(self):
        x, y = self.recount()
        if (x, y) != (self.X, self.Y):
            raise ContractViolation(f"counts drifted: stored {(self.X, self.Y)}, actual {(x, y)}")
        live = np.sort(self.members[: self.X])
        if not np.array_equal(live, np.flatnonzero(self.in_use)):
            raise ContractViolation("In-Use member list disagrees with flags")


@numba.njit(cache=True, inline="always")
def _apply_write(in_use, size, members, slot, counts, idx, z):
    if in_use[idx]:
        counts[1] += z - size[idx]
    else:
        in_use[idx] = 1
        slot[idx] = counts[0]
        members[counts[0]] = idx
        counts[0] += 1
        counts[1] += z
    size[idx] = z


@numba.njit(cache=True, inline="always")
def _apply_trim(in_use, size, members, slot, counts, idx):
    if not in_use[idx]:
        return False
    pos = slot[idx]
    last = members[counts[0] - 1]
    members[pos] = last
    slot[last] = pos
    slot[idx] = -1
    in_use[idx] = 0
    counts[0] -= 1
    counts[1] -= size[idx]
    return True


def apply(state, req):
    """Apply a Write or Trim to ``state`` in place and return it.

    ``None`` (an idle step from :func:`~trimssd.workload.next_request`)
    leaves the state unchanged.
    """
    if req is None:
        return state
    idx = req.object_id - 1
    if not 0 <= idx < state.u:
        raise ContractViolation(f"object id {req.object_id} outside 1..{state.u}")
    if isinstance(req, Write):
        if req.size < 1:
            raise ContractViolation(f"write size must be >= 1, got {req.size}")
        _apply_write(state.in_use, state.size, state.members, state.slot, state.counts, idx, req.size)
    elif isinstance(req, Trim):
        if not _apply_trim(state.in_use, state.size, state.members, state.slot, state.counts, idx):
            raise ContractViolation(f"trim of object {req.object_id} which is not In-Use")
    else:
        raise TypeError(f"not a request: {req!r}")
    return state


@dataclass
class UtilizationStats:
    """Time averages over a measurement window (population standard deviations).

    ``hist_x[k]`` and ``hist_y[k]`` are the fraction of sampled instants at
    which X == k and Y == k respectively.
    """

    mean_X: float
    sd_X: float
    mean_Y: float
    sd_Y: float
    hist_x: np.ndarray
    hist_y: np.ndarray
    samples: int

    @property
    def histogram_y(self):
        nz = np.flatnonzero(self.hist_y)
        return dict(zip(nz.tolist(), self.hist_y[nz].tolist()))


def _build_utilization_kernel(kind):
    # ``kind`` is a closure constant, so the size-law branches fold away at
    # compile time; built once per size law and process
    @numba.njit
    def kernel(rng, u, q, idle_empty, a, b, prob, alias, warmup, measure,
               in_use, size, members, slot, counts, hist_x, hist_y):
        for _ in range(warmup):
            trim, idx, z = _draw_request(rng, u, q, idle_empty, kind, a, b, prob, alias, members, counts[0])
            if idx < 0:
                pass
            elif trim:
                _apply_trim(in_use, size, members, slot, counts, idx)
            else:
                _apply_write(in_use, size, members, slot, counts, idx, z)
        # shifted integer sums are exact; int64 holds measure * (u * B2)**2 comfortably
        x0 = counts[0]
        y0 = counts[1]
        sx = 0
        sxx = 0
        sy = 0
        syy = 0
        for _ in range(measure):
            trim, idx, z = _draw_request(rng, u, q, idle_empty, kind, a, b, prob, alias, members, counts[0])
            if idx < 0:
                pass
            elif trim:
                _apply_trim(in_use, size, members, slot, counts, idx)
            else:
                _apply_write(in_use, size, members, slot, counts, idx, z)
            dx = counts[0] - x0
            dy = counts[1] - y0
            sx += dx
            sxx += dx * dx
            sy += dy
            syy += dy * dy
            hist_x[counts[0]] += 1
            hist_y[counts[1]] += 1
        return x0, y0, sx, sxx, sy, syy

    return kernel


_KERNELS = {}


def _utilization_kernel(rng, u, q, idle_empty, kind, a, b, prob, alias, *rest):
    kernel = _KERNELS.get(kind)
    if kernel is None:
        kernel = _KERNELS[kind] = _build_utilization_kernel(int(kind))
    return kernel(rng, u, q, idle_empty, a, b, prob, alias, *rest)


def _shifted_moments(shift, s1, s2, n):
    # exact integer numerators, one rounding at the end
    m = s1 / n
    var = (s2 * n - s1 * s1) / (n * n)
    return shift + m, math.sqrt(max(var, 0.0))


def run_utilization(params, warmup, measure, rng, state=None):
    """Simulate the workload and average X and Y after every request of the window."""
    if warmup < 0 or measure < 1:
        raise ValueError("need warmup >= 0 and measure >= 1")
    state = ObjectState(params.u) if state is None else state
    dist = params.size_dist
    hist_x = np.zeros(params.u + 1, dtype=np.int64)
    hist_y = np.zeros(params.u * dist.upper + 1, dtype=np.int64)
    x0, y0, sx, sxx, sy, syy = _utilization_kernel(
        rng, params.u, params.q, params.idle_on_empty, *dist.kernel_args(), int(warmup), int(measure),
        state.in_use, state.size, state.members, state.slot, state.counts, hist_x, hist_y,
    )
    # python ints for the variance numerators: s2 * n overflows int64
    mx, sdx = _shifted_moments(int(x0), int(sx), int(sxx), int(measure))
    my, sdy = _shifted_moments(int(y0), int(sy), int(syy), int(measure))
    return UtilizationStats(mx, sdx, my, sdy, hist_x / measure, hist_y / measure, int(measure))


def merge_stats(stats):
    """Average per-replica statistics in the given order."""
    stats = list(stats)
    n = len(stats)
    return UtilizationStats(
        mean_X=sum(s.mean_X for s in stats) / n,
        sd_X=sum(s.sd_X for s in stats) / n,
        mean_Y=sum(s.mean_Y for s in stats) / n,
        sd_Y=sum(s.sd_Y for s in stats) / n,
        hist_x=sum(s.hist_x for s in stats) / n,
        hist_y=sum(s.hist_y for s in stats) / n,
        samples=sum(s.samples for s in stats),
    )


def stationary_distribution(u, q, empty_trim="idle"):
    """Exact stationary law of the In-Use count X over 0..u.

    Births (a write to a not-In-Use ID) occur with probability
    (1-q)(u-x)/u and deaths (a Trim) with probability q.  Rewrites are
    self-loops, so detailed balance gives pi[x+1] = pi[x] * birth(x) / q.

    ``empty_trim`` selects the boundary at X=0 to match
    :class:`~trimssd.workload.WorkloadParams`: under "idle" a Trim draw
    there is a self-loop as well; under "write" it becomes a Write, which
    lifts the birth probability at 0 from 1-q to 1.
    """
    if u < 1 or not 0.0 <= q < 0.5:
        raise ValueError(f"need u >= 1 and 0 <= q < 0.5, got u={u}, q={q}")
    if empty_trim not in ("idle", "write"):
        raise ValueError(f"unknown empty_trim rule {empty_trim!r}")
    pi = np.zeros(u + 1)
    if q == 0.0:
        pi[u] = 1.0
        return pi
    x = np.arange(u)
    log_ratio = np.log1p(-q) + np.log((u - x) / u) - np.log(q)
    if empty_trim == "write":
        log_ratio[0] = -math.log(q)
    logw = np.concatenate(([0.0], np.cumsum(log_ratio)))
    w = np.exp(logw - logw.max())
    return w / math.fsum(w)


@dataclass(frozen=True)
class ChainMoments:
    mean_X: float
    var_X: float
    mean_Y: float
    var_Y: float
    pair_in_use: float  # E[chi_i chi_j] for i != j


def moments_from_pi(pi, dist):
    """Moments of X and Y implied by a stationary law of X.

    Y is a sum of X independent sizes, so Var[Y] follows from the law of
    total variance.  By exchangeability of IDs,
    E[chi_i chi_j] = E[X(X-1)] / (u(u-1)).
    """
    pi = np.asarray(pi, dtype=float)
    u = len(pi) - 1
    x = np.arange(u + 1, dtype=float)
    ex = math.fsum(x * pi)
    var_x = math.fsum((x - ex) ** 2 * pi)
    pair = math.fsum(x * (x - 1) * pi) / (u * (u - 1)) if u >= 2 else float("nan")
    return ChainMoments(
        mean_X=ex,
        var_X=var_x,
        mean_Y=dist.mean * ex,
        var_Y=dist.var * ex + dist.mean ** 2 * var_x,
        pair_in_use=pair,
    )
