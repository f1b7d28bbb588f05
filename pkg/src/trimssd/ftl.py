"""Log-structured page-mapped flash simulator with greedy garbage collection.

Objects are stored as contiguous page runs confined to one block, which
requires every object size to divide the pages-per-block count.  Writes go
to the open (frontier) block; when it cannot take the next run a fresh block
is opened, provided one more free block stays in reserve.  Otherwise the
block with the fewest valid pages is reclaimed: its live runs are copied
whole to the frontier and it is erased.  The open block is never a victim
and ties go to the lowest block index.

All state lives in numpy arrays manipulated by compiled helpers, so the
per-request Python API (:class:`Ftl`) and the bulk experiment loop
(:func:`run_wa_experiment`) share one implementation.
"""

import math
from dataclasses import dataclass

import numba
import numpy as np

from trimssd.errors import CapacityError, ContractViolation, UnsupportedLayoutError
from trimssd.oracle import ObjectState, _apply_trim, _apply_write
from trimssd.workload import _draw_request

FREE, VALID, INVALID = 0, 1, 2

# meta slots
FRONTIER, FREE_HEAD, FREE_COUNT, USER_WRITES, GC_COPIES, ERASES, VALID_TOTAL = range(7)

OK, ERR_LAYOUT, ERR_CAPACITY, ERR_UNMAPPED, ERR_LOCKSTEP = range(5)


@dataclass(frozen=True)
class DeviceGeometry:
    n_blocks: int
    n_p: int
    spare_factor: float

    def __post_init__(self):
        if self.n_blocks < 2 or self.n_p < 1:
            raise ValueError("need at least 2 blocks and 1 page per block")
        if not 0.0 <= self.spare_factor < 1.0:
            raise ValueError(f"spare factor must lie in [0, 1), got {self.spare_factor}")
        if self.user_pages > self.T - self.n_p:
            raise ValueError("user space must leave at least one block of true spare")

    @property
    def T(self):
        return self.n_blocks * self.n_p

    @property
    def user_pages(self):
        return int(math.floor((1.0 - self.spare_factor) * self.T + 1e-9))


@dataclass(frozen=True)
class WaMeasurement:
    write_amplification: float
    warmup_user_writes: int
    measured_user_writes: int
    gc_page_copies: int
    erases: int


@numba.njit(cache=True)
def _invalidate(page_state, page_owner, block_valid, obj_start, obj_len, meta, n_p, idx):
    start = obj_start[idx]
    length = obj_len[idx]
    for pg in range(start, start + length):
        page_state[pg] = INVALID
        page_owner[pg] = -1
    block_valid[start // n_p] -= length
    meta[VALID_TOTAL] -= length
    obj_start[idx] = -1
    obj_len[idx] = 0


@numba.njit(cache=True)
def _room(block_fill, meta, n_p):
    fb = meta[FRONTIER]
    if fb < 0:
        return 0
    return n_p - block_fill[fb]


@numba.njit(cache=True)
def _open_block(free_queue, block_free, meta):
    nb = free_queue.shape[0]
    blk = free_queue[meta[FREE_HEAD]]
    meta[FREE_HEAD] = (meta[FREE_HEAD] + 1) % nb
    meta[FREE_COUNT] -= 1
    block_free[blk] = 0
    meta[FRONTIER] = blk


@numba.njit(cache=True)
def _program(page_state, page_owner, block_valid, block_fill, obj_start, obj_len, meta, n_p, idx, z):
    fb = meta[FRONTIER]
    start = fb * n_p + block_fill[fb]
    for pg in range(start, start + z):
        page_state[pg] = VALID
        page_owner[pg] = idx
    block_fill[fb] += z
    block_valid[fb] += z
    meta[VALID_TOTAL] += z
    obj_start[idx] = start
    obj_len[idx] = z


@numba.njit(cache=True)
def _select_victim(block_valid, block_fill, block_free, meta, n_p):
    best = -1
    best_valid = n_p + 1
    fb = meta[FRONTIER]
    for blk in range(block_valid.shape[0]):
        if block_free[blk]:
            continue
        if blk == fb and block_fill[blk] < n_p:
            continue
        if block_valid[blk] < best_valid:
            best = blk
            best_valid = block_valid[blk]
    return best


@numba.njit(cache=True)
def _gc(page_state, page_owner, block_valid, block_fill, block_free, free_queue,
        obj_start, obj_len, meta, n_p):
    victim = _select_victim(block_valid, block_fill, block_free, meta, n_p)
    if victim < 0 or block_valid[victim] >= n_p:
        return ERR_CAPACITY
    base = victim * n_p
    pg = base
    end = base + block_fill[victim]
    while pg < end:
        if page_state[pg] != VALID:
            pg += 1
            continue
        idx = page_owner[pg]
        length = obj_len[idx]
        if _room(block_fill, meta, n_p) < length:
            if meta[FREE_COUNT] == 0:
                return ERR_CAPACITY
            _open_block(free_queue, block_free, meta)
        for old in range(pg, pg + length):
            page_state[old] = INVALID
            page_owner[old] = -1
        block_valid[victim] -= length
        meta[VALID_TOTAL] -= length
        _program(page_state, page_owner, block_valid, block_fill, obj_start, obj_len, meta, n_p, idx, length)
        meta[GC_COPIES] += length
        pg += length
    for old in range(base, base + n_p):
        page_state[old] = FREE
        page_owner[old] = -1
    block_fill[victim] = 0
    block_valid[victim] = 0
    block_free[victim] = 1
    nb = free_queue.shape[0]
    free_queue[(meta[FREE_HEAD] + meta[FREE_COUNT]) % nb] = victim
    meta[FREE_COUNT] += 1
    meta[ERASES] += 1
    if meta[FRONTIER] == victim:
        meta[FRONTIER] = -1
    return OK


@numba.njit(cache=True)
def _make_room(page_state, page_owner, block_valid, block_fill, block_free, free_queue,
               obj_start, obj_len, meta, n_p, z):
    # each reclaim either frees space or proves the device full; the guard
    # only trips if abandoned frontier tails eat every gain
    for _ in range(4 * block_valid.shape[0] + 4):
        if _room(block_fill, meta, n_p) >= z:
            return OK
        if meta[FREE_COUNT] >= 2:
            _open_block(free_queue, block_free, meta)
            return OK
        rc = _gc(page_state, page_owner, block_valid, block_fill, block_free, free_queue,
                 obj_start, obj_len, meta, n_p)
        if rc != OK:
            return rc
    return ERR_CAPACITY


@numba.njit(cache=True)
def _write(page_state, page_owner, block_valid, block_fill, block_free, free_queue,
           obj_start, obj_len, meta, n_p, idx, z):
    if z < 1 or n_p % z != 0:
        return ERR_LAYOUT
    if obj_start[idx] >= 0:
        _invalidate(page_state, page_owner, block_valid, obj_start, obj_len, meta, n_p, idx)
    rc = _make_room(page_state, page_owner, block_valid, block_fill, block_free, free_queue,
                    obj_start, obj_len, meta, n_p, z)
    if rc != OK:
        return rc
    _program(page_state, page_owner, block_valid, block_fill, obj_start, obj_len, meta, n_p, idx, z)
    meta[USER_WRITES] += z
    return OK


@numba.njit(cache=True)
def _trim(page_state, page_owner, block_valid, obj_start, obj_len, meta, n_p, idx):
    if obj_start[idx] < 0:
        return ERR_UNMAPPED
    _invalidate(page_state, page_owner, block_valid, obj_start, obj_len, meta, n_p, idx)
    return OK


def _raise_for(rc, what=""):
    if rc == OK:
        return
    if rc == ERR_LAYOUT:
        raise UnsupportedLayoutError(f"object size must divide pages per block {what}")
    if rc == ERR_CAPACITY:
        raise CapacityError(f"no reclaimable block {what}")
    if rc == ERR_UNMAPPED:
        raise ContractViolation(f"trim of an unmapped object {what}")
    if rc == ERR_LOCKSTEP:
        raise ContractViolation(f"flash valid pages diverged from the object state {what}")
    raise RuntimeError(f"unknown simulator status {rc}")


class Ftl:
    """Mutable device state for ``n_objects`` object IDs numbered from 1."""

    def __init__(self, geometry, n_objects):
        g = geometry
        self.geometry = g
        self.n_objects = n_objects
        self.page_state = np.zeros(g.T, dtype=np.int8)
        self.page_owner = np.full(g.T, -1, dtype=np.int64)
        self.block_valid = np.zeros(g.n_blocks, dtype=np.int64)
        self.block_fill = np.zeros(g.n_blocks, dtype=np.int64)
        self.block_free = np.ones(g.n_blocks, dtype=np.int8)
        self.free_queue = np.arange(g.n_blocks, dtype=np.int64)
        self.obj_start = np.full(n_objects, -1, dtype=np.int64)
        self.obj_len = np.zeros(n_objects, dtype=np.int64)
        self.meta = np.zeros(7, dtype=np.int64)
        self.meta[FRONTIER] = -1
        self.meta[FREE_COUNT] = g.n_blocks

    def _arrays(self):
        return (self.page_state, self.page_owner, self.block_valid, self.block_fill,
                self.block_free, self.free_queue, self.obj_start, self.obj_len, self.meta)

    def _index(self, object_id):
        idx = object_id - 1
        if not 0 <= idx < self.n_objects:
            raise ContractViolation(f"object id {object_id} outside 1..{self.n_objects}")
        return idx

    def write_object(self, object_id, size):
        rc = _write(*self._arrays(), self.geometry.n_p, self._index(object_id), int(size))
        _raise_for(rc, f"(object {object_id}, size {size})")
        return self

    def trim_object(self, object_id):
        rc = _trim(self.page_state, self.page_owner, self.block_valid, self.obj_start,
                   self.obj_len, self.meta, self.geometry.n_p, self._index(object_id))
        _raise_for(rc, f"(object {object_id})")
        return self

    def garbage_collect(self):
        """Reclaim one block greedily, regardless of whether space is needed."""
        _raise_for(_gc(*self._arrays(), self.geometry.n_p))
        return self

    def mapping(self, object_id):
        """Return ``(block, first_page_in_block, length)`` or ``None``."""
        idx = self._index(object_id)
        start = int(self.obj_start[idx])
        if start < 0:
            return None
        n_p = self.geometry.n_p
        return start // n_p, start % n_p, int(self.obj_len[idx])

    @property
    def frontier(self):
        return int(self.meta[FRONTIER])

    @property
    def free_blocks(self):
        nb = self.geometry.n_blocks
        head, count = int(self.meta[FREE_HEAD]), int(self.meta[FREE_COUNT])
        return [int(self.free_queue[(head + i) % nb]) for i in range(count)]

    user_page_writes = property(lambda self: int(self.meta[USER_WRITES]))
    gc_page_copies = property(lambda self: int(self.meta[GC_COPIES]))
    erases = property(lambda self: int(self.meta[ERASES]))
    valid_pages = property(lambda self: int(self.meta[VALID_TOTAL]))

    def page_counts(self):
        c = np.bincount(self.page_state, minlength=3)
        return {"free": int(c[FREE]), "valid": int(c[VALID]), "invalid": int(c[INVALID])}

    def write_amplification(self):
        user = self.user_page_writes
        return (user + self.gc_page_copies) / user if user else float("nan")

    def audit(self):
        """Recompute derived bookkeeping from page states and compare."""
        g = self.geometry
        per_block = (self.page_state == VALID).reshape(g.n_blocks, g.n_p).sum(axis=1)
        if not np.array_equal(per_block, self.block_valid):
            raise ContractViolation("block valid counters disagree with page states")
        counts = self.page_counts()
        if sum(counts.values()) != g.T:
            raise ContractViolation("page states do not cover the device")
        if counts["valid"] != self.valid_pages:
            raise ContractViolation("valid page total disagrees with page states")
        mapped = np.flatnonzero(self.obj_start >= 0)
        if int(self.obj_len[mapped].sum()) != counts["valid"]:
            raise ContractViolation("mapped run lengths disagree with valid pages")
        for idx in mapped:
            start, length = int(self.obj_start[idx]), int(self.obj_len[idx])
            if start // g.n_p != (start + length - 1) // g.n_p:
                raise ContractViolation(f"object {idx + 1} spans a block boundary")
            run = slice(start, start + length)
            if not (np.all(self.page_state[run] == VALID) and np.all(self.page_owner[run] == idx)):
                raise ContractViolation(f"object {idx + 1} run is not wholly valid")
        for blk in self.free_blocks:
            if self.block_fill[blk] or not self.block_free[blk]:
                raise ContractViolation(f"queued free block {blk} is not empty")
        return True


@numba.njit(cache=True)
def _wa_kernel(rng, u, q, idle_empty, kind, a, b, prob, alias, warmup, measure, max_requests,
               in_use, size, members, slot, counts,
               page_state, page_owner, block_valid, block_fill, block_free, free_queue,
               obj_start, obj_len, meta, n_p):
    snap_user = -1
    snap_gc = 0
    snap_erase = 0
    for _ in range(max_requests):
        user = meta[USER_WRITES]
        if snap_user < 0 and user >= warmup:
            snap_user = user
            snap_gc = meta[GC_COPIES]
            snap_erase = meta[ERASES]
        if snap_user >= 0 and user - snap_user >= measure:
            break
        trim, idx, z = _draw_request(rng, u, q, idle_empty, kind, a, b, prob, alias, members, counts[0])
        if idx < 0:
            continue
        if trim:
            _apply_trim(in_use, size, members, slot, counts, idx)
            rc = _trim(page_state, page_owner, block_valid, obj_start, obj_len, meta, n_p, idx)
        else:
            _apply_write(in_use, size, members, slot, counts, idx, z)
            rc = _write(page_state, page_owner, block_valid, block_fill, block_free, free_queue,
                        obj_start, obj_len, meta, n_p, idx, z)
        if rc != OK:
            return rc, snap_user, snap_gc, snap_erase
        if meta[VALID_TOTAL] != counts[1]:
            return ERR_LOCKSTEP, snap_user, snap_gc, snap_erase
    return OK, snap_user, snap_gc, snap_erase


def run_wa_experiment(geometry, workload, warmup_user_writes=None, measure_user_writes=None,
                      rng=None, ftl=None, state=None):
    """Drive the workload through a fresh device and measure write amplification.

    Windows are counted in user page writes; the defaults are 4*T of warmup
    followed by 10*T measured.  The flash valid-page total is checked
    against the object state after every request.
    """
    T = geometry.T
    warmup = 4 * T if warmup_user_writes is None else int(warmup_user_writes)
    measure = 10 * T if measure_user_writes is None else int(measure_user_writes)
    if measure < 1:
        raise ValueError("measurement window must contain at least one page write")
    if workload.u * workload.size_dist.upper > geometry.user_pages:
        raise ValueError(
            f"u*B2 = {workload.u * workload.size_dist.upper} exceeds user space {geometry.user_pages}"
        )
    if rng is None:
        raise ValueError("an explicit random generator is required")
    ftl = Ftl(geometry, workload.u) if ftl is None else ftl
    state = ObjectState(workload.u) if state is None else state
    # plenty of headroom: each write request moves at least one page
    max_requests = int((warmup + measure) / (1 - workload.q) * 4) + 10_000
    rc, snap_user, snap_gc, snap_erase = _wa_kernel(
        rng, workload.u, workload.q, workload.idle_on_empty, *workload.size_dist.kernel_args(), warmup, measure, max_requests,
        state.in_use, state.size, state.members, state.slot, state.counts,
        *ftl._arrays(), geometry.n_p,
    )
    _raise_for(rc)
    if snap_user < 0:
        raise RuntimeError("simulation ended before the warmup window completed")
    user = ftl.user_page_writes - snap_user
    copies = ftl.gc_page_copies - snap_gc
    if user < measure:
        raise RuntimeError("simulation ended before the measurement window completed")
    return WaMeasurement(
        write_amplification=(user + copies) / user,
        warmup_user_writes=int(snap_user),
        measured_user_writes=int(user),
        gc_page_copies=int(copies),
        erases=ftl.erases - int(snap_erase),
    )
