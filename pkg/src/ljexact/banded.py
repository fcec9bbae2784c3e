"""Sparse banded Gaussian elimination on mpmath scalars.

Rows are dictionaries ``{column: value}``.  Partial pivoting searches the
``kl`` rows below the diagonal, so fill-in stays inside a band of width
``kl + ku``.
"""
from __future__ import annotations

from mpmath import mp

from .errors import SingularSystemError


def solve_banded(rows, rhs, kl):
    """Solve ``A x = rhs`` for a banded ``A`` given as a list of row dicts.

    ``rows`` is consumed (modified in place).  Raises
    :class:`SingularSystemError` on an exactly zero pivot.
    """
    n = len(rows)
    b = list(rhs)
    for i in range(n):
        last = min(n - 1, i + kl)
        piv, best = i, abs(rows[i].get(i, 0))
        for r in range(i + 1, last + 1):
            v = abs(rows[r].get(i, 0))
            if v > best:
                piv, best = r, v
        if best == 0:
            raise SingularSystemError(f"zero pivot in column {i}")
        if piv != i:
            rows[i], rows[piv] = rows[piv], rows[i]
            b[i], b[piv] = b[piv], b[i]
        prow = rows[i]
        d = prow[i]
        for r in range(i + 1, last + 1):
            row = rows[r]
            if i not in row:
                continue
            f = row.pop(i) / d
            for col, val in prow.items():
                if col != i:
                    row[col] = row.get(col, 0) - f * val
            b[r] -= f * b[i]
    x = [mp.zero] * n
    for i in range(n - 1, -1, -1):
        row = rows[i]
        s = b[i]
        for col, val in row.items():
            if col != i:
                s -= val * x[col]
        x[i] = s / row[i]
    return x
