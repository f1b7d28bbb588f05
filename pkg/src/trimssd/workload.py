"""Trim-modified uniform random object workload.

Each request is a Trim with probability ``q`` (aimed at a uniformly chosen
In-Use object) and otherwise a Write of a uniformly chosen object ID whose
size is drawn afresh from the object-size distribution.

Random numbers come from :class:`numpy.random.Generator` backed by PCG64.
Independent streams are derived with :func:`make_rng` from a master seed and
an integer key (replica index, experiment cell, ...) through
:class:`numpy.random.SeedSequence` spawn keys, so a stream depends only on
``(master_seed, key)``.  The request loop consumes the stream identically in
the pure-Python API and in the compiled simulation kernels: one uniform for
the Trim/Write decision, one for the object ID, then whatever the size law
needs (nothing for fixed sizes, one uniform otherwise, more only when a
truncated binomial redraws a zero).
"""

from dataclasses import dataclass, field

import numba
import numpy as np

from trimssd._binom import binomial_pmf

# size-law encodings understood by the compiled kernels
FIXED, UNIFORM, TABLE = 0, 1, 2
_NO_TABLE = (np.ones(1), np.zeros(1, dtype=np.int64))


def make_rng(master_seed, *key):
    """Return a PCG64 generator for the stream ``(master_seed, *key)``."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


class SizeDistribution:
    """Base class for object-size laws (sizes are in pages)."""

    @property
    def mean(self):
        raise NotImplementedError

    @property
    def var(self):
        raise NotImplementedError

    @property
    def std(self):
        return float(np.sqrt(self.var))

    @property
    def lower(self):
        raise NotImplementedError

    @property
    def upper(self):
        raise NotImplementedError

    def kernel_args(self):
        """Encode the law as ``(kind, a, b, prob, alias)`` for the compiled samplers."""
        raise NotImplementedError

    def describe(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Fixed(SizeDistribution):
    b: int

    def __post_init__(self):
        if int(self.b) != self.b or self.b < 1:
            raise ValueError(f"fixed object size must be an integer >= 1, got {self.b}")

    mean = property(lambda self: float(self.b))
    var = property(lambda self: 0.0)
    lower = property(lambda self: self.b)
    upper = property(lambda self: self.b)

    def kernel_args(self):
        return (FIXED, self.b, self.b) + _NO_TABLE

    def describe(self):
        return f"fixed({self.b})"


@dataclass(frozen=True)
class DiscreteUniform(SizeDistribution):
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo < 1 or self.hi < self.lo:
            raise ValueError(f"need 1 <= lo <= hi, got lo={self.lo}, hi={self.hi}")

    @property
    def mean(self):
        return (self.lo + self.hi) / 2

    @property
    def var(self):
        return ((self.hi - self.lo + 1) ** 2 - 1) / 12

    lower = property(lambda self: self.lo)
    upper = property(lambda self: self.hi)

    def kernel_args(self):
        return (UNIFORM, self.lo, self.hi) + _NO_TABLE

    def describe(self):
        return f"uniform({self.lo},{self.hi})"


@dataclass(frozen=True)
class Binomial(SizeDistribution):
    """Binomial(n, p) sizes; with ``truncate`` set, zero-page draws are excluded.

    Truncation samples from the law conditioned on a size of at least one,
    which is what redrawing zeros would give, without the redraw loop.

    The reported moments are those of the untruncated law.  For the
    parameters used here (n=32, p=0.4) a zero has probability ~8e-9, so the
    difference is far below anything a simulation can resolve.
    """

    n: int
    p: float
    truncate: bool = True
    _prob: np.ndarray = field(init=False, repr=False, compare=False)
    _alias: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1 or not 0.0 < self.p < 1.0:
            raise ValueError(f"need n >= 1 and 0 < p < 1, got n={self.n}, p={self.p}")
        pmf = binomial_pmf(self.n, self.p)
        if self.truncate:
            pmf[0] = 0.0
            pmf = pmf / pmf.sum()
        prob, alias = _alias_table(pmf)
        object.__setattr__(self, "_prob", prob)
        object.__setattr__(self, "_alias", alias)

    @property
    def mean(self):
        return self.n * self.p

    @property
    def var(self):
        return self.n * self.p * (1 - self.p)

    @property
    def lower(self):
        return 1 if self.truncate else 0

    upper = property(lambda self: self.n)

    def kernel_args(self):
        return TABLE, int(self.truncate), self.n, self._prob, self._alias

    def describe(self):
        return f"binomial({self.n},{self.p:g})"


def _alias_table(pmf):
    """Walker alias tables (Vose's construction) for sampling ``0..len(pmf)-1``."""
    n = len(pmf)
    scaled = np.asarray(pmf, dtype=float) * n
    prob = np.ones(n)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        lo, hi = small.pop(), large.pop()
        prob[lo] = scaled[lo]
        alias[lo] = hi
        scaled[hi] -= 1.0 - scaled[lo]
        (small if scaled[hi] < 1.0 else large).append(hi)
    # leftovers are 1 up to rounding, except that zero-mass entries must
    # never be returned themselves
    zero = np.asarray(pmf) == 0
    prob[zero] = 0.0
    alias[zero & (alias == np.arange(n))] = int(np.argmax(pmf))
    return prob, alias


def parse_size_distribution(spec):
    """Build a size law from a config mapping such as ``{"kind": "fixed", "b": 32}``."""
    spec = dict(spec)
    kind = spec.pop("kind")
    if kind == "fixed":
        return Fixed(int(spec["b"]))
    if kind == "uniform":
        return DiscreteUniform(int(spec["lo"]), int(spec["hi"]))
    if kind == "binomial":
        return Binomial(int(spec["n"]), float(spec["p"]), bool(spec.get("truncate", True)))
    raise ValueError(f"unknown size distribution kind {kind!r}")


EMPTY_TRIM_RULES = ("write", "idle")


@dataclass(frozen=True)
class WorkloadParams:
    u: int
    q: float
    size_dist: SizeDistribution = Fixed(1)
    # what a Trim drawn while nothing is In-Use becomes: "write" emits a
    # Write instead, "idle" spends the step without changing anything
    empty_trim: str = "write"

    def __post_init__(self):
        if self.u < 1:
            raise ValueError(f"u must be >= 1, got {self.u}")
        if not 0.0 <= self.q < 0.5:
            raise ValueError(f"trim probability must satisfy 0 <= q < 0.5, got {self.q}")
        if self.empty_trim not in EMPTY_TRIM_RULES:
            raise ValueError(f"empty_trim must be one of {EMPTY_TRIM_RULES}, got {self.empty_trim!r}")

    @property
    def idle_on_empty(self):
        return int(self.empty_trim == "idle")


@dataclass(frozen=True)
class Write:
    object_id: int
    size: int


@dataclass(frozen=True)
class Trim:
    object_id: int


# -- compiled primitives, shared by the Python API and the simulation loops --


@numba.njit(cache=True, inline="always")
def _uniform_index(rng, n):
    i = int(rng.random() * n)
    return i if i < n else n - 1


@numba.njit(cache=True, inline="always")
def _alias_draw(rng, n, prob, alias):
    r = rng.random() * n
    i = int(r)
    if i >= n:
        i = n - 1
    return i if r - i < prob[i] else alias[i]


@numba.njit(cache=True, inline="always")
def _draw_size(rng, kind, a, b, prob, alias):
    if kind == FIXED:
        return a
    if kind == UNIFORM:
        return a + _uniform_index(rng, b - a + 1)
    # alias table over 0..b (a truncated law already has zero mass at 0)
    return _alias_draw(rng, b + 1, prob, alias)


@numba.njit(cache=True, inline="always")
def _draw_request(rng, u, q, idle_empty, kind, a, b, prob, alias, members, n_in_use):
    """Return ``(is_trim, index, size)`` with a 0-based object index.

    An index of -1 marks an idle step (Trim drawn with nothing In-Use under
    the "idle" rule).
    """
    if rng.random() < q:
        if n_in_use > 0:
            return True, members[_uniform_index(rng, n_in_use)], 0
        if idle_empty:
            return False, -1, 0
    idx = _uniform_index(rng, u)
    return False, idx, _draw_size(rng, kind, a, b, prob, alias)


def sample_size(dist, rng):
    """Draw one object size in pages."""
    return int(_draw_size(rng, *dist.kernel_args()))


def sample_sizes(dist, rng, count):
    return _draw_sizes(rng, *dist.kernel_args(), count)


@numba.njit(cache=True)
def _draw_sizes(rng, kind, a, b, prob, alias, count):
    out = np.empty(count, dtype=np.int64)
    for i in range(count):
        out[i] = _draw_size(rng, kind, a, b, prob, alias)
    return out


def next_request(params, state, rng):
    """Draw the next request given the current object state.

    A Trim drawn while nothing is In-Use becomes a Write, or ``None`` (an
    idle step) when ``params.empty_trim == "idle"``.  Object IDs in the
    returned request are 1-based.
    """
    is_trim, idx, size = _draw_request(
        rng, params.u, params.q, params.idle_on_empty, *params.size_dist.kernel_args(),
        state.members, state.X,
    )
    if idx < 0:
        return None
    if is_trim:
        return Trim(int(idx) + 1)
    return Write(int(idx) + 1, int(size))
