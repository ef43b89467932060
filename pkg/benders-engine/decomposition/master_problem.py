"""
主问题构造: 受限主问题 (RMP, LP) 与水平集主问题 (LMP, QP)

变量顺序 (x, β_0, ..., β_{|I|-1})。
割行: (λ'S_i) x − β_i ≤ λ'x̂ − θ
"""
from typing import List, Tuple

import numpy as np
import scipy.sparse as sp

from backend.lp_backend import LinearProgram
from problem.structured_problem import StructuredProblem
from .cuts import CutPool


class MasterProblemBuilder:
    """增量维护割行的主问题构造器"""

    def __init__(self, problem: StructuredProblem):
        self.problem = problem
        self.x_dim = problem.master.x_dim
        self.node_count = problem.node_count
        self.pi = problem.probabilities
        # 每节点已转换的割行缓存 (列下标, 系数, rhs)
        self._rows: List[List[Tuple[np.ndarray, np.ndarray, float]]] = [[] for _ in range(self.node_count)]
        self._selector_t = [node.x_selector.T.tocsr() for node in problem.nodes]

    @property
    def n_cols(self) -> int:
        return self.x_dim + self.node_count

    def objective(self) -> np.ndarray:
        return np.concatenate([self.problem.master.f, self.pi])

    def level_row(self) -> np.ndarray:
        """f'x + Σπ_i β_i"""
        return self.objective()

    def _sync(self, pools: CutPool) -> None:
        for i in range(self.node_count):
            cuts = pools.cuts(i)
            cache = self._rows[i]
            for cut in cuts[len(cache):]:
                coef = self._selector_t[i] @ cut.lam
                nz = np.flatnonzero(coef)
                rhs = float(cut.lam @ cut.x_anchor - cut.theta)
                cache.append((nz, coef[nz], rhs))

    def _cut_block(self, pools: CutPool) -> Tuple[sp.csr_matrix, np.ndarray]:
        self._sync(pools)
        data, rows, cols, rhs = [], [], [], []
        r = 0
        for i in range(self.node_count):
            for nz, vals, b in self._rows[i]:
                rows.extend([r] * (nz.size + 1))
                cols.extend(nz.tolist())
                cols.append(self.x_dim + i)
                data.extend(vals.tolist())
                data.append(-1.0)
                rhs.append(b)
                r += 1
        A = sp.csr_matrix((data, (rows, cols)), shape=(r, self.n_cols))
        return A, np.asarray(rhs, dtype=float)

    def _base(self, pools: CutPool):
        m = self.problem.master
        A_master = sp.hstack([m.A_x, sp.csr_matrix((m.n_rows, self.node_count))], format="csr")
        A_cut, b_cut = self._cut_block(pools)
        A = sp.vstack([A_master, A_cut], format="csr")
        senses = np.concatenate([m.senses, np.full(A_cut.shape[0], "<=", dtype="<U2")])
        b = np.concatenate([m.b, b_cut])
        lower = np.concatenate([m.x_lower, np.full(self.node_count, pools.floor)])
        upper = np.concatenate([m.x_upper, np.full(self.node_count, np.inf)])
        return A, senses, b, lower, upper

    def build_rmp(self, pools: CutPool) -> LinearProgram:
        """RMP: min f'x + Σπβ s.t. 𝒳, 割"""
        A, senses, b, lower, upper = self._base(pools)
        return LinearProgram(c=self.objective(), A=A, senses=senses, b=b, lower=lower, upper=upper,
                             name=f"{self.problem.name}_rmp")

    def build_lmp(self, pools: CutPool, x_ref: np.ndarray, target: float) -> LinearProgram:
        """LMP: min ‖x − x_ref‖² s.t. 𝒳, 割, f'x + Σπβ ≤ T"""
        A, senses, b, lower, upper = self._base(pools)
        A = sp.vstack([A, sp.csr_matrix(self.level_row())], format="csr")
        senses = np.append(senses, "<=")
        b = np.append(b, target)

        diag = np.concatenate([np.full(self.x_dim, 2.0), np.zeros(self.node_count)])
        c = np.concatenate([-2.0 * x_ref, np.zeros(self.node_count)])
        return LinearProgram(c=c, A=A, senses=senses, b=b, lower=lower, upper=upper,
                             Q=sp.diags(diag, format="csr"), offset=float(x_ref @ x_ref),
                             name=f"{self.problem.name}_lmp")

    def split(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return z[: self.x_dim].copy(), z[self.x_dim:].copy()
