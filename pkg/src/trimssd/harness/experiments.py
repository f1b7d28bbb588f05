"""Experiment drivers shared by the CLI and the reproduction targets."""

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from trimssd import analytics, wamodels
from trimssd.ftl import DeviceGeometry, run_wa_experiment
from trimssd.oracle import merge_stats, run_utilization
from trimssd.workload import Fixed, WorkloadParams, make_rng, parse_size_distribution

# first spawn-key component, keeps experiment families on disjoint streams
UTIL_STREAM, WA_STREAM = 1, 2

ANALYZE_COLUMNS = ["q", "size_dist", "mean_objects", "sd_objects", "mean_pages", "sd_pages"]

UTIL_COLUMNS = [
    "q", "size_dist",
    "mean_objects_analytic", "mean_objects_sim", "mean_objects_se",
    "sd_objects_analytic", "sd_objects_sim", "sd_objects_se",
    "mean_pages_analytic", "mean_pages_sim", "mean_pages_se",
    "sd_pages_analytic", "sd_pages_sim", "sd_pages_se",
    "replicas",
]

HIST_COLUMNS = ["bin_center", "density", "analytic_density"]

WA_COLUMNS = ["n_p", "sim_wa", "sim_wa_se", "xiang_wa", "hu_wa", "effective_spare", "replicas"]
PREDICT_COLUMNS = ["n_p", "xiang_wa", "hu_wa", "effective_spare"]


def provenance(columns):
    out = {}
    for c in columns:
        if c.endswith(("_sim", "_se")) or c.startswith("sim_") or c in ("density",):
            out[c] = "simulated"
        elif c in ("q", "size_dist", "n_p", "replicas", "bin_center"):
            out[c] = "parameter"
        else:
            out[c] = "analytic"
    return out


def run_tasks(fn, items, workers=1):
    """Map ``fn`` over ``items`` and return results in item order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=1))


def q_key(q):
    return int(round(q * 1_000_000))


def analyze_rows(config):
    dist = config.size_dist
    rows = []
    for q in config.q:
        m = analytics.page_moments(config.u, q, dist)
        rows.append({
            "q": q,
            "size_dist": dist.describe(),
            "mean_objects": m.mean_objects,
            "sd_objects": m.sd_objects,
            "mean_pages": m.mean_pages,
            "sd_pages": m.sd_pages,
        })
    return rows


def _util_task(item):
    u, q, size, warmup, measure, seed, replica = item
    params = WorkloadParams(u, q, parse_size_distribution(size))
    return run_utilization(params, warmup, measure, make_rng(seed, UTIL_STREAM, q_key(q), replica))


def _se(values):
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return float("nan")
    return float(values.std(ddof=1) / math.sqrt(len(values)))


def simulate_utilization(config):
    """Run every (q, replica) cell; return ``(rows, {q: merged_stats})``."""
    dist = config.size_dist
    items = [
        (config.u, q, dict(config.size), config.warmup, config.measure, config.seed, r)
        for q in config.q
        for r in range(config.replicas)
    ]
    results = run_tasks(_util_task, items, config.workers)
    rows = []
    merged = {}
    for i, q in enumerate(config.q):
        reps = results[i * config.replicas:(i + 1) * config.replicas]
        stats = merge_stats(reps)
        merged[q] = stats
        m = analytics.page_moments(config.u, q, dist)
        rows.append({
            "q": q,
            "size_dist": dist.describe(),
            "mean_objects_analytic": m.mean_objects,
            "mean_objects_sim": stats.mean_X,
            "mean_objects_se": _se([s.mean_X for s in reps]),
            "sd_objects_analytic": m.sd_objects,
            "sd_objects_sim": stats.sd_X,
            "sd_objects_se": _se([s.sd_X for s in reps]),
            "mean_pages_analytic": m.mean_pages,
            "mean_pages_sim": stats.mean_Y,
            "mean_pages_se": _se([s.mean_Y for s in reps]),
            "sd_pages_analytic": m.sd_pages,
            "sd_pages_sim": stats.sd_Y,
            "sd_pages_se": _se([s.sd_Y for s in reps]),
            "replicas": config.replicas,
        })
    return rows, merged


def histogram_rows(stats, mean, var, bin_pages):
    """Bin the valid-page histogram and attach the Gaussian overlay.

    Bin k collects page counts in [k*w - w//2, k*w - w//2 + w); densities are
    per page so that sum(density) * w == 1.
    """
    w = int(bin_pages)
    hist = stats.hist_y
    nz = np.flatnonzero(hist)
    if nz.size == 0:
        return []
    pages = np.arange(len(hist))
    idx = (pages + w // 2) // w
    mass = np.bincount(idx, weights=hist)
    lo, hi = idx[nz[0]], idx[nz[-1]]
    rows = []
    for k in range(lo, hi + 1):
        center = k * w - w // 2 + (w - 1) / 2
        rows.append({
            "bin_center": float(center),
            "density": float(mass[k] / w),
            "analytic_density": float(analytics.gaussian_pdf(mean, var, center)) if var > 0 else None,
        })
    return rows


def _wa_task(item):
    n_blocks, n_p, spare, object_pages, q, wf, mf, seed, replica = item
    geom = DeviceGeometry(n_blocks, n_p, spare)
    workload = WorkloadParams(geom.user_pages // object_pages, q, Fixed(object_pages))
    m = run_wa_experiment(
        geom, workload,
        warmup_user_writes=int(round(wf * geom.T)),
        measure_user_writes=int(round(mf * geom.T)),
        rng=make_rng(seed, WA_STREAM, n_p, object_pages, replica),
    )
    return m.write_amplification


def predictions(n_blocks, n_p, spare, object_pages, q):
    """Model predictions in object units: an object of b pages acts as one page
    of a block holding n_p/b of them."""
    geom = DeviceGeometry(n_blocks, n_p, spare)
    T = geom.T // object_pages
    u = geom.user_pages // object_pages
    slots = n_p // object_pages
    xiang = wamodels.xiang_wa(T, u, q, slots).value
    hu = wamodels.hu_wa(T, u, q, slots).value if slots >= 2 else None
    return xiang, hu


def predict_rows(config):
    rows = []
    for n_p in config.n_p:
        xiang, hu = predictions(config.n_blocks, n_p, config.spare_factor, config.object_pages, config.wa_q)
        rows.append({
            "n_p": n_p,
            "xiang_wa": xiang,
            "hu_wa": hu,
            "effective_spare": analytics.effective_spare(config.wa_q, config.spare_factor),
        })
    return rows


def wa_rows(config):
    items = [
        (config.n_blocks, n_p, config.spare_factor, config.object_pages, config.wa_q,
         config.warmup_factor, config.measure_factor, config.seed, r)
        for n_p in config.n_p
        for r in range(config.replicas)
    ]
    results = run_tasks(_wa_task, items, config.workers)
    rows = predict_rows(config)
    for i, row in enumerate(rows):
        reps = results[i * config.replicas:(i + 1) * config.replicas]
        row["sim_wa"] = sum(reps) / len(reps)
        row["sim_wa_se"] = _se(reps)
        row["replicas"] = config.replicas
    return rows
