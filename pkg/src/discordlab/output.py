"""Deterministic JSON/CSV writers and the run manifest."""

import csv
import io
import json
import math
import os

import numpy as np

from . import __version__


def format_float(x):
    """17 significant digits; non-finite values become ``null``/empty upstream."""
    return format(float(x), ".17g")


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent=2):
    """JSON text with floats at 17 significant digits and NaN/inf as null."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj):
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps(obj))


def csv_cell(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return format_float(x) if math.isfinite(x) else ""
    return str(x)


def csv_text(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if isinstance(row, dict):
            row = [row[c] for c in columns]
        w.writerow([csv_cell(x) for x in row])
    return buf.getvalue()


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(columns, rows))


def manifest_path(primary):
    return os.fspath(primary) + ".manifest.json"


def write_manifest(primary, command, config, seed, outputs, duration_s):
    """Write ``<primary>.manifest.json`` listing every output; call it last.

    The manifest carries the wall-clock duration and is therefore the one
    file that differs between otherwise identical runs.
    """
    path = manifest_path(primary)
    write_json(path, {"command": command, "config": config, "seed": seed,
                      "code_version": __version__, "outputs": [os.fspath(p) for p in outputs],
                      "wall_clock_s": duration_s})
    return path
