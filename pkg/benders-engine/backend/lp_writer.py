"""
LP文本文件导出 (CPLEX LP 格式)，用于离线调试
"""
from pathlib import Path
from typing import List, Sequence

import numpy as np

_SENSE_TOKEN = {"<=": "<=", ">=": ">=", "==": "="}


def _names(names: Sequence[str], prefix: str, count: int) -> List[str]:
    if names is not None and len(names) == count:
        return [str(n).replace(" ", "_") for n in names]
    return [f"{prefix}{k}" for k in range(count)]


def _linear_terms(coefs, cols, names) -> str:
    terms = []
    for v, j in zip(coefs, cols):
        if v == 0:
            continue
        sign = "-" if v < 0 else "+"
        terms.append(f"{sign} {abs(v):.17g} {names[j]}")
    if not terms:
        return "0 " + names[0] if names else "0"
    text = " ".join(terms)
    return text[2:] if text.startswith("+ ") else text


def write_lp_file(lp, path) -> Path:
    """
    将 LinearProgram 写为 CPLEX LP 文本

    Args:
        lp: LinearProgram
        path: 输出路径

    Returns:
        写入的文件路径
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = _names(lp.col_names, "z", lp.n_cols)
    rows = _names(lp.row_names, "r", lp.n_rows)

    lines = [f"\\ {lp.name}", "Minimize"]
    nz = np.flatnonzero(lp.c)
    obj = " obj: " + _linear_terms(lp.c[nz], nz, cols)
    if lp.is_quadratic:
        Q = lp.Q.tocoo()
        quad = []
        for i, j, v in zip(Q.row, Q.col, Q.data):
            if j < i or v == 0:
                continue
            coef = v if i == j else 2.0 * v
            term = f"{cols[i]} ^ 2" if i == j else f"{cols[i]} * {cols[j]}"
            quad.append(f"{'-' if coef < 0 else '+'} {abs(coef):.17g} {term}")
        if quad:
            obj += " + [ " + " ".join(quad).lstrip("+ ") + " ] / 2"
    lines.append(obj)

    lines.append("Subject To")
    A = lp.A.tocsr()
    for k in range(lp.n_rows):
        start, end = A.indptr[k], A.indptr[k + 1]
        lhs = _linear_terms(A.data[start:end], A.indices[start:end], cols)
        lines.append(f" {rows[k]}: {lhs} {_SENSE_TOKEN[lp.senses[k]]} {lp.b[k]:.17g}")

    lines.append("Bounds")
    for j, (lo, hi) in enumerate(zip(lp.lower, lp.upper)):
        if np.isneginf(lo) and np.isposinf(hi):
            lines.append(f" {cols[j]} free")
        elif np.isneginf(lo):
            lines.append(f" -inf <= {cols[j]} <= {hi:.17g}")
        elif np.isposinf(hi):
            lines.append(f" {cols[j]} >= {lo:.17g}")
        else:
            lines.append(f" {lo:.17g} <= {cols[j]} <= {hi:.17g}")
    lines.append("End")

    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
