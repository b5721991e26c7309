"""Centered pattern polynomials and the tree-counting detection statistic.

The per-entry centering maps an adjacency bit to a mean-zero unit-variance
value under the null density p = λs/n. Per-shape sums W of centered products
over injective tree embeddings come from three interchangeable evaluators:

* ``w_exact`` - direct sum over all injective maps (small hosts only);
* color coding - unbiased estimator via rainbow-embedding dynamic
  programming over color subsets, with both a dense message form and a
  rank-one-plus-sparse split that never materialises the n² entries;
* the sparse exact engine from :mod:`csbmlab.counting` (default at scale).

The pair statistic is Σ_shapes a_shape · W_shape(A) · W_shape(B), thresholded
at a fixed fraction of its predicted planted mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .counting import counting_engine
from .graphs import Graph, count_cycles
from .models import ModelParams
from .moments import predicted_f_mean
from .trees import TreeShape, a_coefficient, enumerate_trees, tree_count

__all__ = [
    "CenteredMatrix",
    "psi",
    "w_exact",
    "w_color_coding",
    "colorful_probability",
    "default_reps",
    "TreeStatResult",
    "f_tree_stat",
    "threshold_test",
    "cycle_count_test",
    "TreeCountingDetector",
]

EXACT_BUDGET_N = 40
EXACT_BUDGET_ALEPH = 4


@dataclass(frozen=True)
class CenteredMatrix:
    """Mean-zero unit-variance view of an adjacency matrix under ER(p)."""

    n: int
    base_graph: Graph
    edge_value: float
    nonedge_value: float

    @staticmethod
    def from_graph(graph: Graph, params: ModelParams) -> "CenteredMatrix":
        p = params.null_density
        scale = math.sqrt(p * (1 - p))
        return CenteredMatrix(n=graph.n_vertices, base_graph=graph,
                              edge_value=(1 - p) / scale,
                              nonedge_value=-p / scale)

    def entry(self, i: int, j: int) -> float:
        if i == j:
            raise ValueError("diagonal entries are undefined")
        return self.edge_value if self.base_graph.has_edge(i, j) else self.nonedge_value

    @property
    def slope(self) -> float:
        """entry = nonedge_value + slope · A_ij."""
        return self.edge_value - self.nonedge_value

    def dense(self) -> np.ndarray:
        out = np.full((self.n, self.n), self.nonedge_value)
        np.fill_diagonal(out, 0.0)
        for u, v in self.base_graph.edges:
            out[u, v] = out[v, u] = self.edge_value
        return out

    def sparse_adjacency(self) -> sp.csr_matrix:
        edges = self.base_graph.edges
        if not edges:
            return sp.csr_matrix((self.n, self.n))
        rows = [u for u, _ in edges] + [v for _, v in edges]
        cols = [v for _, v in edges] + [u for u, _ in edges]
        data = np.ones(2 * len(edges))
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))


def psi(pattern: Graph, x: CenteredMatrix) -> float:
    """Product of centered entries over the pattern's edges; 1 when empty."""
    out = 1.0
    for u, v in pattern.edges:
        if u >= x.n or v >= x.n:
            raise ValueError("pattern exceeds the host vertex range")
        out *= x.entry(u, v)
    return out


# ---------------------------------------------------------------------------
# Exact brute-force evaluator
# ---------------------------------------------------------------------------

def w_exact(shape: TreeShape, x: CenteredMatrix,
            max_n: int = EXACT_BUDGET_N, max_aleph: int = EXACT_BUDGET_ALEPH,
            chunk_rows: int = 2_000_000) -> float:
    """Sum of centered products over all injective maps, divided by |Aut|.

    Enumerates host tuples incrementally with the weight carried along;
    intended for hosts within the configured budget.
    """
    if x.n > max_n or shape.aleph > max_aleph:
        raise ValueError("w_exact budget exceeded; use the sparse or color-"
                         "coding evaluators")
    n = x.n
    entries = x.dense()
    parents = {max(u, v): min(u, v) for u, v in shape.canonical_edges}

    rows = np.arange(n, dtype=np.int32)[:, None]
    weights = np.ones(n)
    total = 0.0
    last = shape.aleph
    for v in range(1, last + 1):
        attach = parents[v]
        pieces_r, pieces_w = [], []
        step = max(1, chunk_rows // max(n, 1))
        for lo in range(0, rows.shape[0], step):
            base = rows[lo: lo + step]
            wgt = weights[lo: lo + step]
            m = base.shape[0]
            cand = np.repeat(base, n, axis=0)
            new = np.tile(np.arange(n, dtype=np.int32), m)
            ok = (cand != new[:, None]).all(axis=1)
            cand, new = cand[ok], new[ok]
            w_new = np.repeat(wgt, n)[ok] * entries[cand[:, attach], new]
            if v == last:
                total += float(w_new.sum())
            else:
                pieces_r.append(np.concatenate([cand, new[:, None]], axis=1))
                pieces_w.append(w_new)
        if v != last:
            rows = np.concatenate(pieces_r, axis=0)
            weights = np.concatenate(pieces_w)
    return total / shape.aut


# ---------------------------------------------------------------------------
# Color coding
# ---------------------------------------------------------------------------

def colorful_probability(aleph: int) -> float:
    """Chance that aleph+1 iid uniform colors on aleph+1 vertices are distinct."""
    c = aleph + 1
    return math.factorial(c) / c ** c


def default_reps(params: ModelParams, aleph: int, budget: float = 0.2) -> int:
    """Repetitions so the estimator's added standard deviation stays below
    ``budget`` times the target separation s^(2·aleph)·#shapes.

    One repetition keeps each embedding with the rainbow probability q, which
    inflates the null variance of the assembled statistic by (1 + 1/(qR))².
    Solving (1+x)² <= 1 + (budget·s^aleph·sqrt(#shapes))² for x = 1/(qR):
    """
    target = budget * params.s ** aleph * math.sqrt(tree_count(aleph))
    x = math.sqrt(1 + target ** 2) - 1
    return max(1, math.ceil(1 / (colorful_probability(aleph) * x)))


def _rooted_children(shape: TreeShape) -> dict[int, list[int]]:
    children: dict[int, list[int]] = {v: [] for v in range(shape.aleph + 1)}
    for u, v in shape.canonical_edges:
        children[min(u, v)].append(max(u, v))
    return children


def _subtree_sizes(children: dict[int, list[int]], root: int = 0) -> dict[int, int]:
    sizes: dict[int, int] = {}

    def visit(v: int) -> int:
        sizes[v] = 1 + sum(visit(c) for c in children[v])
        return sizes[v]

    visit(root)
    return sizes


def _disjoint_mask_pairs(n_colors: int, acc_size: int, child_size: int
                         ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(acc masks, child masks, union masks) over all disjoint pairs."""
    masks = np.arange(1 << n_colors)
    pop = np.zeros(1 << n_colors, dtype=np.int64)
    tmp = masks.copy()
    while tmp.any():
        pop += tmp & 1
        tmp >>= 1
    acc = masks[pop == acc_size]
    child = masks[pop == child_size]
    pairs_a, pairs_c = np.meshgrid(acc, child, indexing="ij")
    flat_a, flat_c = pairs_a.ravel(), pairs_c.ravel()
    disjoint = (flat_a & flat_c) == 0
    return flat_a[disjoint], flat_c[disjoint], (flat_a | flat_c)[disjoint]


def _cc_messages(dp: np.ndarray, x: CenteredMatrix, adj: sp.csr_matrix | None,
                 naive: np.ndarray | None) -> np.ndarray:
    """M[r, S, i] = Σ_{j≠i} entry(i, j)·dp[r, S, j].

    The naive form contracts against the dense entry matrix; the split form
    uses entry = nonedge + slope·A, so the all-j sum is a rank-one column sum
    plus a sparse product, with the j = i term removed explicitly. The two
    agree exactly."""
    if naive is not None:
        return np.einsum("rsj,ij->rsi", dp, naive)
    reps, n_masks, n = dp.shape
    colsum = dp.sum(axis=2, keepdims=True)
    flat = dp.reshape(reps * n_masks, n)
    sparse_part = adj.dot(flat.T).T.reshape(reps, n_masks, n)
    return x.nonedge_value * (colsum - dp) + x.slope * sparse_part


def w_color_coding(shape: TreeShape, x: CenteredMatrix, reps: int,
                   rng: np.random.Generator, naive_messages: bool = False,
                   batch: int | None = None,
                   return_samples: bool = False):
    """Unbiased color-coding estimate of ``w_exact``.

    Per repetition every host vertex gets an iid uniform color among aleph+1;
    a subset-state DP sums centered products over rainbow embeddings, and
    dividing by the rainbow probability and |Aut| removes the bias.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    c = shape.aleph + 1
    n = x.n
    children = _rooted_children(shape)
    sizes = _subtree_sizes(children)
    post = _postorder(children)
    q = colorful_probability(shape.aleph)
    adj = None if naive_messages else x.sparse_adjacency()
    dense = x.dense() if naive_messages else None
    if batch is None:
        batch = max(1, (1 << 22) // ((1 << c) * max(n, 1)))
    samples = np.empty(reps)
    done = 0
    while done < reps:
        r_b = min(batch, reps - done)
        colors = rng.integers(0, c, size=(r_b, n))
        bit = (1 << colors).astype(np.int64)
        dp_cache: dict[int, np.ndarray] = {}
        for v in post:
            acc = np.zeros((r_b, 1 << c, n))
            ridx = np.repeat(np.arange(r_b), n)
            hidx = np.tile(np.arange(n), r_b)
            acc[ridx, bit.ravel(), hidx] = 1.0
            acc_size = 1
            for child in children[v]:
                msg = _cc_messages(dp_cache.pop(child), x, adj, dense)
                csz = sizes[child]
                a_masks, c_masks, out_masks = _disjoint_mask_pairs(c, acc_size, csz)
                new = np.zeros_like(acc)
                for cm in np.unique(c_masks):
                    sel = c_masks == cm
                    new[:, out_masks[sel], :] += (acc[:, a_masks[sel], :]
                                                  * msg[:, cm, :][:, None, :])
                acc = new
                acc_size += csz
            dp_cache[v] = acc
        root_dp = dp_cache[0]
        full = (1 << c) - 1
        samples[done: done + r_b] = root_dp[:, full, :].sum(axis=1) / (q * shape.aut)
        done += r_b
    if return_samples:
        return samples
    return float(samples.mean())


def _postorder(children: dict[int, list[int]], root: int = 0) -> list[int]:
    out: list[int] = []

    def visit(v: int) -> None:
        for ch in children[v]:
            visit(ch)
        out.append(v)

    visit(root)
    return out


# ---------------------------------------------------------------------------
# Assembled statistic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeStatResult:
    value: float
    per_shape: tuple[tuple[int, float, float], ...]
    method: str
    reps: int = 0


def _w_all(graph: Graph, params: ModelParams, aleph: int, method: str,
           reps: int, rng: np.random.Generator | None,
           naive_messages: bool) -> np.ndarray:
    x = CenteredMatrix.from_graph(graph, params)
    catalog = enumerate_trees(aleph)
    if method == "exact":
        return np.array([w_exact(shape, x) for shape in catalog])
    if method == "sparse":
        engine = counting_engine(aleph)
        return engine.w_all_shapes(graph, x.nonedge_value, x.slope)
    if method == "cc":
        if rng is None:
            raise ValueError("color coding needs an explicit generator")
        return np.array([
            w_color_coding(shape, x, reps, rng, naive_messages=naive_messages)
            for shape in catalog])
    raise ValueError(f"unknown method {method!r}")


def resolve_method(method: str, n: int, aleph: int) -> str:
    if method != "auto":
        return method
    if n <= EXACT_BUDGET_N and aleph <= EXACT_BUDGET_ALEPH:
        return "exact"
    return "sparse"


def f_tree_stat(a: Graph, b: Graph, params: ModelParams, aleph: int,
                method: str = "auto", reps: int | None = None,
                rng: np.random.Generator | None = None,
                naive_messages: bool = False) -> TreeStatResult:
    """Tree-counting pair statistic Σ_shapes a_shape·W_shape(A)·W_shape(B)."""
    if a.n_vertices != params.n or b.n_vertices != params.n:
        raise ValueError("graphs must live on the model's vertex set")
    method = resolve_method(method, params.n, aleph)
    if reps is None:
        reps = default_reps(params, aleph) if method == "cc" else 0
    w_a = _w_all(a, params, aleph, method, reps, rng, naive_messages)
    w_b = _w_all(b, params, aleph, method, reps, rng, naive_messages)
    catalog = enumerate_trees(aleph)
    coeffs = np.array([a_coefficient(shape, params.n, params.s)
                       for shape in catalog])
    value = float(np.sum(coeffs * w_a * w_b))
    per_shape = tuple((i, float(w_a[i]), float(w_b[i])) for i in range(len(catalog)))
    return TreeStatResult(value=value, per_shape=per_shape, method=method,
                          reps=reps if method == "cc" else 0)


def threshold_test(value: float, params: ModelParams, aleph: int,
                   C: float) -> str:
    """Decide planted/null at τ = C · predicted planted mean (ties planted)."""
    if not 0 < C < 1:
        raise ValueError("C must lie in (0, 1)")
    tau = C * predicted_f_mean(params, aleph)
    return "planted" if value >= tau else "null"


def cycle_count_test(a: Graph, ell: int, params: ModelParams) -> float:
    """Single-graph cycle-count z-score against the null Poisson mean
    (λs)^ell/(2·ell)."""
    if ell < 3:
        raise ValueError("cycle length must be >= 3")
    m0 = (params.lam * params.s) ** ell / (2 * ell)
    observed = count_cycles(a, ell)
    return (observed - m0) / math.sqrt(m0)


# ---------------------------------------------------------------------------
# Estimator-style wrapper
# ---------------------------------------------------------------------------

def _validate_pair(pair: Sequence, n: int) -> tuple[Graph, Graph]:
    if len(pair) != 2 or not all(isinstance(g, Graph) for g in pair):
        raise TypeError("each sample must be a (Graph, Graph) pair")
    a, b = pair
    if a.n_vertices != n or b.n_vertices != n:
        raise ValueError(f"graphs must have exactly n={n} vertices")
    return a, b


class TreeCountingDetector:
    """Detector with an estimator-style interface over graph pairs.

    Parameters mirror the model; `fit` freezes the shape catalog and the
    decision threshold, `decision_function` returns the statistic per pair
    and `predict` returns 1 for planted, 0 for null.
    """

    def __init__(self, n: int = 1000, lam: float = 1.0, k: int = 2,
                 eps: float = 0.0, s: float = 0.8, aleph: int = 4,
                 method: str = "auto", reps: int | None = None,
                 C: float = 0.5, seed: int = 0):
        self.n = n
        self.lam = lam
        self.k = k
        self.eps = eps
        self.s = s
        self.aleph = aleph
        self.method = method
        self.reps = reps
        self.C = C
        self.seed = seed

    # sklearn-style parameter plumbing
    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name)
                for name in ("n", "lam", "k", "eps", "s", "aleph", "method",
                             "reps", "C", "seed")}

    def set_params(self, **params) -> "TreeCountingDetector":
        for name, value in params.items():
            if not hasattr(self, name):
                raise ValueError(f"unknown parameter {name!r}")
            setattr(self, name, value)
        return self

    def fit(self, X=None, y=None) -> "TreeCountingDetector":
        self.params_ = ModelParams(n=self.n, lam=self.lam, k=self.k,
                                   eps=self.eps, s=self.s)
        self.catalog_ = enumerate_trees(self.aleph)
        self.tau_ = self.C * predicted_f_mean(self.params_, self.aleph)
        self._rng = np.random.default_rng(self.seed)
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "tau_"):
            raise RuntimeError("call fit() before using the detector")

    def decision_function(self, pairs: Iterable[Sequence]) -> np.ndarray:
        self._check_fitted()
        out = []
        for pair in pairs:
            a, b = _validate_pair(pair, self.n)
            res = f_tree_stat(a, b, self.params_, self.aleph,
                              method=self.method, reps=self.reps,
                              rng=self._rng)
            out.append(res.value)
        return np.array(out)

    def predict(self, pairs: Iterable[Sequence]) -> np.ndarray:
        scores = self.decision_function(pairs)
        return (scores >= self.tau_).astype(int)
