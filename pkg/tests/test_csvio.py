"""Delimited output: stable formatting, header discipline, kernel rows."""

import numpy as np
import pytest

from fnslab.csvio import KERNEL_HEADER, fmt, kernel_rows, write_csv
from fnslab.kernels import eval_phi


def test_fmt_types():
    assert fmt(True) == "true" and fmt(False) == "false"
    assert fmt(np.bool_(True)) == "true"
    assert fmt(42) == "42" and fmt(np.int64(-3)) == "-3"
    assert fmt(1.0) == "1.00000000000000e+00"
    assert fmt(np.float64(0.5)) == "5.00000000000000e-01"
    assert fmt("plain") == "plain"
    with pytest.raises(ValueError, match="delimiter"):
        fmt("a,b")


def test_write_csv(tmp_path):
    path = tmp_path / "t.csv"
    count = write_csv(path, ("a", "b"), [(1, 2.0), (3, 4.0)])
    assert count == 2
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    assert lines[0] == "a,b"
    assert lines[1] == "1,2.00000000000000e+00"
    assert text.endswith("\n")
    # rerun is byte-identical
    write_csv(tmp_path / "t2.csv", ("a", "b"), [(1, 2.0), (3, 4.0)])
    assert (tmp_path / "t2.csv").read_bytes() == path.read_bytes()


def test_write_csv_rejects_ragged_rows(tmp_path):
    with pytest.raises(ValueError, match="fields"):
        write_csv(tmp_path / "bad.csv", ("a", "b"), [(1, 2, 3)])


def test_kernel_rows_convention():
    tab = eval_phi(0.75, 1, 1.0, np.array([0.5, 1.0]))
    rows = list(kernel_rows(tab, lambda r, t, a, n, k: 2.0, k=1))
    assert len(rows) == 2
    assert len(rows[0]) == len(KERNEL_HEADER)
    alpha, n, t, r, k, value, bound, ratio = rows[0]
    assert (alpha, n, t, r, k) == (0.75, 1, 1.0, 0.5, 1)
    assert value == pytest.approx(float(tab.values[0]))
    assert bound == 2.0
    assert ratio == pytest.approx(abs(value) / 2.0)
