"""CSV tables and run manifests, written atomically."""

import csv
from datetime import datetime, timezone
import hashlib
import io
import json
import math
import os
import tempfile

from ._mix import MIXER_ID


def fmt(value):
    """Deterministic text for one CSV cell (``repr`` round-trips floats)."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if value.is_integer() and abs(value) < 2**53:
            return str(int(value))
        return repr(value)
    if hasattr(value, "item"):
        return fmt(value.item())
    return str(value)


def render_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(row.get(h)) for h in header])
    return buf.getvalue()


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temp file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def manifest(command, argv, seed, config, csv_text, version):
    return {
        "tool": "cookiewalk",
        "version": version,
        "command": command,
        "argv": list(argv),
        "seed": seed,
        "mixer": MIXER_ID,
        "config_digest": config.digest() if config is not None else None,
        "config": config.to_dict() if config is not None else None,
        "csv_sha256": hashlib.sha256(csv_text.encode()).hexdigest(),
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def write_outputs(path, csv_text, meta):
    """CSV at ``path`` plus ``<path>.manifest.json`` next to it."""
    atomic_write(path, csv_text)
    atomic_write(path + ".manifest.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
