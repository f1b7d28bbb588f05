"""CSV writer with a ``#``-prefixed metadata header.

Floats are written with ``repr`` so reruns with the same inputs produce
byte-identical files.
"""

import csv
import io
import json
import os

from trimssd import __version__


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(columns, rows, config=None, provenance=None, extra=None):
    """Render rows (dicts keyed by column name) to CSV text.

    ``provenance`` maps column names to one of ``parameter``, ``analytic``,
    ``simulated`` or ``paper``.
    """
    buf = io.StringIO()
    buf.write(f"# tool: trimssd {__version__}\n")
    if config is not None:
        buf.write(f"# config_sha256: {config.digest()}\n")
        buf.write(f"# master_seed: {config.seed}\n")
        buf.write(f"# mode: {'full' if config.full else 'quick'}\n")
        buf.write(f"# config: {json.dumps(config.effective(), sort_keys=True)}\n")
    for key, value in (extra or {}).items():
        buf.write(f"# {key}: {value}\n")
    if provenance:
        buf.write("# provenance: " + ", ".join(f"{c}={provenance.get(c, 'parameter')}" for c in columns) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def write_csv(path, columns, rows, **kwargs):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    text = render_csv(columns, rows, **kwargs)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def read_csv(path):
    """Return ``(metadata, rows)``; empty cells come back as ``None``."""
    meta = {}
    lines = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, value = line[2:].rstrip("\n").partition(": ")
                meta[key] = value
            else:
                lines.append(line)
    rows = []
    for rec in csv.DictReader(lines):
        rows.append({k: (None if v == "" else v) for k, v in rec.items()})
    return meta, rows
