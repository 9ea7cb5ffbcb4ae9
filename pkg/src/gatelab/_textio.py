"""Small helpers for the plain-text tabular formats and atomic file writes.

Every emitted file is tab separated with '#'-prefixed header metadata lines,
and every writer has a matching parser so files round-trip.
"""

import json
import os
import tempfile


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temp file + rename in the same dir."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path, record):
    """Serialise ``record`` deterministically (sorted keys) and write it."""
    atomic_write_text(path, json.dumps(record, indent=2, sort_keys=True) + "\n")


def fmt(value, sig=17):
    """Format a float with ``sig`` significant digits."""
    return "%.*g" % (sig, float(value))


def header_line(key, value):
    return "# %s\t%s" % (key, value)


def parse_header(lines):
    """Collect '# key<TAB>value' metadata from an iterable of lines.

    Returns (meta dict, remaining data lines). Bare '#' comment lines
    without a tab are skipped.
    """
    meta = {}
    data = []
    for line in lines:
        stripped = line.rstrip("\n")
        if not stripped.strip():
            continue
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if "\t" in body:
                key, value = body.split("\t", 1)
                meta[key.strip()] = value.strip()
            continue
        data.append(stripped)
    return meta, data
