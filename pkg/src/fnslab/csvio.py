"""Delimited output with fixed formatting so reruns are byte-identical.

Floats are written as %.14e (15 significant digits, '.' separator),
integers plainly, and every file starts with a header line.  Kernel
tables and bound checks share one column convention:

    alpha, n, t, r, k, value, bound_value, ratio
"""

from __future__ import annotations

import numpy as np

KERNEL_HEADER = ("alpha", "n", "t", "r", "k", "value", "bound_value", "ratio")


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.14e" % float(value)
    s = str(value)
    if "," in s or "\n" in s:
        raise ValueError(f"field {s!r} would break the delimiter")
    return s


def write_csv(path, header, rows) -> int:
    """Write rows under a mandatory header; returns the row count."""
    header = list(header)
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = [fmt(v) for v in row]
            if len(cells) != len(header):
                raise ValueError(
                    f"row has {len(cells)} fields, header has {len(header)}"
                )
            fh.write(",".join(cells) + "\n")
            count += 1
    return count


def kernel_rows(table, bound_fn, k=0):
    """Standard-convention rows for one kernel table.

    bound_fn maps (r, t, alpha, n, k) to the reference bound; ratio is
    |value| / bound.
    """
    for r, v in zip(table.radii, table.values):
        b = bound_fn(float(r), table.t, table.alpha, table.n, k)
        yield (table.alpha, table.n, table.t, float(r), k,
               float(v), float(b), abs(float(v)) / b)
