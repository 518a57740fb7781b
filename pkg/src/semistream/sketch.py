"""Random-projection sketch of odd-set dual mass.

Think of an n x t matrix X whose column t is sqrt(z_t) times the indicator
of the set U_t.  Row i of X squared and summed is the total mass of the sets
containing i, and the inner product of rows i and j is the mass of the sets
containing both.  The sketch stores S_i = A^T X_i for a k x t Gaussian
matrix A whose columns are regenerated from (seed, t) on demand, so neither
the sets nor the matrix are ever stored.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

C_JL = 8.0


def sketch_dimension(n: int, eps: float, c_jl: float = C_JL) -> int:
    return int(math.ceil(c_jl / eps**2 * math.log(n)))


class NodeSketch:
    def __init__(self, n: int, eps: float, seed: int, c_jl: float = C_JL, cap: float = 3.0):
        if not (0 < eps < 1):
            raise ValueError(f"eps must lie in (0, 1), got {eps}")
        if n < 2:
            raise ValueError("a sketch needs at least two nodes")
        self.n = n
        self.eps = eps
        self.seed = int(seed)
        self.k = sketch_dimension(n, eps, c_jl)
        self.cap = cap
        self.vectors = np.zeros((n, self.k))
        self.t = 0

    def column(self, t: int) -> np.ndarray:
        """Column t of the projection, entries N(0, 1/k); counter-based, so free to regenerate."""
        gen = np.random.Generator(np.random.Philox(key=self.seed, counter=[0, 0, 0, t]))
        return gen.standard_normal(self.k) / math.sqrt(self.k)

    def add_set(self, U: Iterable[int], z: float) -> "NodeSketch":
        if z < 0:
            raise ValueError("set weights must be nonnegative")
        idx = np.fromiter(U, dtype=np.int64)
        if z > 0 and len(idx):
            self.vectors[idx] += math.sqrt(z) * self.column(self.t)
        self.t += 1
        return self

    def scale(self, c: float) -> "NodeSketch":
        """Multiply every stored set weight by c >= 0 (rows scale by sqrt(c))."""
        if c < 0:
            raise ValueError("scale must be nonnegative")
        self.vectors *= math.sqrt(c)
        return self

    def copy(self) -> "NodeSketch":
        out = NodeSketch.__new__(NodeSketch)
        out.n, out.eps, out.seed, out.k, out.cap, out.t = self.n, self.eps, self.seed, self.k, self.cap, self.t
        out.vectors = self.vectors.copy()
        return out

    def node_sum(self, i: int) -> float:
        v = self.vectors[i]
        return float(v @ v)

    def pair_sum(self, i: int, j: int) -> float:
        if i == j:
            raise ValueError("pair sums need two distinct nodes")
        a, b = self.vectors[i], self.vectors[j]
        d = a - b
        raw = 0.5 * (a @ a + b @ b - d @ d)
        return float(min(max(raw, 0.0), self.cap))

    def pair_sums(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        """Vectorized, clamped pair sums for edge arrays."""
        if self.t == 0 or len(us) == 0:
            return np.zeros(len(us))
        raw = np.einsum("ij,ij->i", self.vectors[us], self.vectors[vs])
        return np.clip(raw, 0.0, self.cap)

    def node_sums(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.vectors, self.vectors)

    @property
    def words(self) -> int:
        return self.n * self.k


def sketch_new(n: int, eps: float, seed: int, c_jl: float = C_JL) -> NodeSketch:
    return NodeSketch(n, eps, seed, c_jl)


def sketch_add_set(s: NodeSketch, U: Iterable[int], z: float) -> NodeSketch:
    return s.add_set(U, z)


def estimate_pair_sum(s: NodeSketch, i: int, j: int) -> float:
    return s.pair_sum(i, j)


def estimate_node_sum(s: NodeSketch, i: int) -> float:
    return s.node_sum(i)
