"""Experiment configuration: TOML file, CLI overrides, canonical hashing."""

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import tomli

from trimssd.ftl import DeviceGeometry
from trimssd.workload import WorkloadParams, parse_size_distribution

KINDS = ("utilization", "wa-sim", "wa-predict", "analyze", "reproduce")

PAPER_QS = (0.05, 0.1, 0.2, 0.3, 0.4, 0.45)
PAPER_NP = (1, 2, 4, 8, 16, 32, 64, 128, 256)

# quick mode scales the replica count and windows down; full mode is the
# 64-replica, 1e6 + 9e6 request protocol
QUICK_UTIL = {"replicas": 8, "warmup": 100_000, "measure": 1_000_000}
FULL_UTIL = {"replicas": 64, "warmup": 1_000_000, "measure": 9_000_000}
QUICK_WA = {"replicas": 2, "warmup_factor": 4, "measure_factor": 4}
FULL_WA = {"replicas": 8, "warmup_factor": 4, "measure_factor": 10}


@dataclass
class ExperimentConfig:
    kind: str = "utilization"
    u: int = 1000
    q: tuple = PAPER_QS
    size: dict = field(default_factory=lambda: {"kind": "fixed", "b": 32})
    n_blocks: int = 1280
    n_p: tuple = PAPER_NP
    spare_factor: float = 0.2
    object_pages: int = 1
    wa_q: float = 0.1
    replicas: int | None = None
    warmup: int | None = None
    measure: int | None = None
    warmup_factor: float | None = None
    measure_factor: float | None = None
    bin_pages: int = 32
    seed: int = 20131
    full: bool = False
    # execution settings: never part of the echoed config or its hash
    workers: int = 1
    out: str = "results"

    def __post_init__(self):
        self.q = tuple(float(x) for x in (self.q if isinstance(self.q, (list, tuple)) else [self.q]))
        self.n_p = tuple(int(x) for x in (self.n_p if isinstance(self.n_p, (list, tuple)) else [self.n_p]))
        self._fill_protocol()
        self.validate()

    def _fill_protocol(self):
        util = FULL_UTIL if self.full else QUICK_UTIL
        wa = FULL_WA if self.full else QUICK_WA
        if self.replicas is None:
            self.replicas = wa["replicas"] if self.kind == "wa-sim" else util["replicas"]
        if self.warmup is None:
            self.warmup = util["warmup"]
        if self.measure is None:
            self.measure = util["measure"]
        if self.warmup_factor is None:
            self.warmup_factor = wa["warmup_factor"]
        if self.measure_factor is None:
            self.measure_factor = wa["measure_factor"]

    def validate(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.warmup < 0 or self.measure < 1:
            raise ValueError("need warmup >= 0 and measure >= 1")
        if self.bin_pages < 1:
            raise ValueError("bin_pages must be >= 1")
        for q in self.q:
            WorkloadParams(self.u, q, self.size_dist)
        if self.kind == "wa-sim":
            for n_p in self.n_p:
                DeviceGeometry(self.n_blocks, n_p, self.spare_factor)
                if n_p % self.object_pages:
                    raise ValueError(f"object size {self.object_pages} does not divide n_p={n_p}")

    @property
    def size_dist(self):
        return parse_size_distribution(self.size)

    def effective(self):
        """Experiment settings as a plain dict (execution settings dropped)."""
        d = dataclasses.asdict(self)
        d.pop("workers")
        d.pop("out")
        d["q"] = list(d["q"])
        d["n_p"] = list(d["n_p"])
        return d

    def digest(self):
        blob = json.dumps(self.effective(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_SECTIONS = {
    "workload": {"u", "q", "size"},
    "device": {"n_blocks", "n_p", "spare_factor", "object_pages", "wa_q"},
    "run": {"replicas", "warmup", "measure", "warmup_factor", "measure_factor",
            "bin_pages", "seed", "full", "workers", "out"},
}


def flatten(doc):
    """Map a nested TOML document onto ExperimentConfig field names."""
    flat = {}
    for key, value in doc.items():
        if key in _SECTIONS and isinstance(value, dict):
            for sub, v in value.items():
                if sub not in _SECTIONS[key]:
                    raise ValueError(f"unknown key {key}.{sub}")
                flat[sub] = v
        elif key == "kind":
            flat[key] = value
        else:
            raise ValueError(f"unknown config key {key!r}")
    return flat


def load_config(path=None, **overrides):
    """Read a TOML config (optional) and apply non-None keyword overrides."""
    values = {}
    if path is not None:
        with open(path, "rb") as fh:
            values.update(flatten(tomli.load(fh)))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)
