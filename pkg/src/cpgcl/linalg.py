"""Exact linear algebra over Fractions: sparse Gaussian elimination and small inverses."""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, Hashable, List, Mapping, Optional, Sequence


class SingularSystem(ArithmeticError):
    pass


def solve_sparse(
    rows: Mapping[Hashable, Mapping[Hashable, Fraction]],
    rhs: Mapping[Hashable, Fraction],
) -> Dict[Hashable, Fraction]:
    """Solve ``sum_j rows[i][j] * x_j = rhs[i]`` for a square system keyed by unknown.

    Row ``i`` is preferably pivoted on its own unknown ``i`` (the diagonal), which
    is always nonzero for the M-matrices produced by reachability problems; any
    other nonzero entry is used otherwise.  The result is checked by substitution.
    """
    unknowns = list(rows)
    order = {u: k for k, u in enumerate(unknowns)}
    work = {i: dict(r) for i, r in rows.items()}
    b = {i: Fraction(rhs.get(i, 0)) for i in unknowns}
    by_col: Dict[Hashable, set] = {}
    for i, r in work.items():
        for j in r:
            by_col.setdefault(j, set()).add(i)
    pivots: List = []
    done = set()
    for col in unknowns:
        if col not in done and work[col].get(col):
            prow = col
        else:
            prow = next(
                (i for i in sorted(by_col.get(col, ()), key=order.__getitem__) if i not in done and work[i].get(col)),
                None,
            )
        if prow is None:
            raise SingularSystem(f"no pivot for {col!r}")
        done.add(prow)
        pivots.append((col, prow))
        r = work[prow]
        pv = r[col]
        if pv != 1:
            for j in r:
                r[j] /= pv
            b[prow] /= pv
        for i in list(by_col.get(col, ())):
            if i == prow:
                continue
            other = work[i]
            factor = other.get(col)
            if not factor:
                continue
            for j, v in r.items():
                nv = other.get(j, 0) - factor * v
                if nv:
                    other[j] = nv
                    by_col.setdefault(j, set()).add(i)
                else:
                    other.pop(j, None)
                    by_col.get(j, set()).discard(i)
            b[i] -= factor * b[prow]
    # Gauss-Jordan: each pivot row now holds only its pivot column among pivot columns
    x = {col: b[prow] for col, prow in pivots}
    for i, r in rows.items():
        total = sum((c * x[j] for j, c in r.items()), Fraction(0))
        if total != rhs.get(i, 0):
            raise SingularSystem("solution check failed")
    return x


def inverse(a: Sequence[Sequence[Fraction]]) -> Optional[List[List[Fraction]]]:
    """Inverse of a small dense matrix, or None if it is singular."""
    n = len(a)
    m = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        prow = next((r for r in range(col, n) if m[r][col] != 0), None)
        if prow is None:
            return None
        m[col], m[prow] = m[prow], m[col]
        pv = m[col][col]
        m[col] = [v / pv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [v - f * w for v, w in zip(m[r], m[col])]
    return [row[n:] for row in m]
