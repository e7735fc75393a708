"""Distributional regression forests for the zero-adjusted families.

Trees split on the likelihood gain of a constant zero-adjusted model:
``loglik(left MLE) + loglik(right MLE) - loglik(node MLE)``. Node MLEs come
from cumulative sufficient statistics, so every candidate threshold of a
predictor is scored in one vectorised call.

Forest prediction is the weighted MLE over training rows, with weight
``sum_t inbag_t(i) / leaf_size_t(x) / n_trees`` for rows sharing x's leaf.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy import sparse

from ..api.v1.endpoints import ForestConfig
from ..dataset import Dataset
from ..distributions import Family, PredictiveBatch, ZeroAdjustedParams, safeguard_arrays
from ..errors import ShapeError, SizeError
from ..mle import mle_from_stats, observation_columns, stats_from_matrix
from ..schema import PREDICTORS
from ..seeding import derive_seed

MODEL_FORMAT_VERSION = 1
LEAF = -1
# relative gain below which a split is treated as no improvement
SPLIT_TOL = 1e-9


@dataclass(frozen=True)
class SplitChoice:
    feature: int
    threshold: float
    gain: float
    n_left: int


def candidate_positions(x_sorted: np.ndarray, min_leaf: int, max_candidates: int) -> np.ndarray:
    """Left-block sizes (k rows go left) at which a threshold can sit.

    Only gaps between distinct values that leave ``min_leaf`` rows on each
    side qualify; more than ``max_candidates`` are thinned to evenly spaced
    quantiles of the qualifying gaps.
    """
    n = x_sorted.shape[0]
    k = np.flatnonzero(x_sorted[1:] > x_sorted[:-1]) + 1
    k = k[(k >= min_leaf) & (n - k >= min_leaf)]
    if k.shape[0] > max_candidates:
        pick = np.unique(np.round(np.linspace(0, k.shape[0] - 1, max_candidates)).astype(int))
        k = k[pick]
    return k


def _midpoint(lo: float, hi: float) -> float:
    mid = lo + 0.5 * (hi - lo)
    return mid if mid < hi else lo


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    features: Sequence[int],
    family: Family,
    min_leaf: int,
    max_candidates: int = 64,
) -> SplitChoice | None:
    """Highest-gain (feature, threshold) among the candidates, or None.

    Ties go to the earlier feature in ``features`` and then the lower threshold.
    """
    cols = observation_columns(y)
    total = cols.sum(axis=0)
    node_ll = float(mle_from_stats(family, stats_from_matrix(total)).loglik)
    best: SplitChoice | None = None
    for j in features:
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        k = candidate_positions(xs, min_leaf, max_candidates)
        if k.shape[0] == 0:
            continue
        left = np.cumsum(cols[order], axis=0)[k - 1]
        ll_left = mle_from_stats(family, stats_from_matrix(left)).loglik
        ll_right = mle_from_stats(family, stats_from_matrix(total - left)).loglik
        gain = np.nan_to_num(ll_left + ll_right - node_ll, nan=-np.inf)
        i = int(np.argmax(gain))
        if best is None or gain[i] > best.gain:
            pos = int(k[i])
            best = SplitChoice(int(j), _midpoint(xs[pos - 1], xs[pos]), float(gain[i]), pos)
    if best is None or not best.gain > SPLIT_TOL * max(1.0, abs(node_ll)):
        return None
    return best


@dataclass(frozen=True)
class DistTree:
    """Array-encoded binary tree; ``feature == -1`` marks a leaf.

    Every node keeps the MLE of the rows that reached it, so leaves carry
    their local parameters. ``inbag`` is the bootstrap multiplicity of each
    training row.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    nu: np.ndarray
    inbag: np.ndarray
    seed: int

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of X."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            inner = feat != LEAF
            if not np.any(inner):
                return node
            idx = rows[inner]
            n_inner = node[inner]
            go_left = X[idx, feat[inner]] <= self.threshold[n_inner]
            node[idx] = np.where(go_left, self.left[n_inner], self.right[n_inner])

    def leaf_params(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        leaves = self.apply(X)
        return self.mu[leaves], self.sigma[leaves], self.nu[leaves]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
            "nu": self.nu.tolist(),
            "inbag": self.inbag.tolist(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DistTree":
        ints = {k: np.asarray(payload[k], dtype=np.int64) for k in ("feature", "left", "right", "inbag")}
        floats = {k: np.asarray(payload[k], dtype=float) for k in ("threshold", "mu", "sigma", "nu")}
        return cls(seed=int(payload["seed"]), **ints, **floats)


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    family: Family,
    config: ForestConfig,
    seed: int,
) -> DistTree:
    """Grow one tree on a bootstrap sample drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    n, p = X.shape
    if config.bootstrap:
        sample = rng.integers(0, n, size=n)
    else:
        sample = np.arange(n)
    inbag = np.bincount(sample, minlength=n).astype(np.int64)
    mtry = min(config.mtry, p)

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    params: list[tuple[float, float, float]] = []

    def new_node(rows: np.ndarray) -> int:
        res = mle_from_stats(family, stats_from_matrix(observation_columns(y[rows]).sum(axis=0)))
        mu, sigma, nu = safeguard_arrays(res.mu, res.sigma, res.nu)
        params.append((float(mu), float(sigma), float(nu)))
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        return len(feature) - 1

    root = new_node(sample)
    stack = [(root, sample, 0)]
    while stack:
        node, rows, depth = stack.pop()
        if depth >= config.max_depth or rows.shape[0] < 2 * config.min_leaf:
            continue
        features = np.sort(rng.choice(p, size=mtry, replace=False))
        choice = best_split(X[rows], y[rows], features, family, config.min_leaf, config.max_candidates)
        if choice is None:
            continue
        goes_left = X[rows, choice.feature] <= choice.threshold
        left_rows, right_rows = rows[goes_left], rows[~goes_left]
        feature[node] = choice.feature
        threshold[node] = choice.threshold
        left[node] = new_node(left_rows)
        right[node] = new_node(right_rows)
        # right pushed first so the left subtree is grown (and numbered) first
        stack.append((right[node], right_rows, depth + 1))
        stack.append((left[node], left_rows, depth + 1))

    mu, sigma, nu = (np.array(v, dtype=float) for v in zip(*params))
    return DistTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        mu=mu,
        sigma=sigma,
        nu=nu,
        inbag=inbag,
        seed=int(seed),
    )


@dataclass(frozen=True)
class DistForest:
    family: Family
    trees: tuple[DistTree, ...]
    X_train: np.ndarray
    y_train: np.ndarray
    seed: int
    config: ForestConfig = field(default_factory=ForestConfig)

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family.parse(self.family))
        if len(self.trees) != self.config.n_trees:
            raise ShapeError(f"Forest holds {len(self.trees)} trees but config asks for {self.config.n_trees}.")
        # per tree: training-row leaves and leaf sums of the observation columns, scaled by leaf size
        cols = observation_columns(self.y_train)
        leaf_rows, leaf_stats = [], []
        for tree in self.trees:
            leaves = tree.apply(self.X_train)
            size = np.bincount(leaves, weights=tree.inbag, minlength=tree.n_nodes)
            sums = np.zeros((tree.n_nodes, cols.shape[1]))
            np.add.at(sums, leaves, cols * tree.inbag[:, None])
            with np.errstate(invalid="ignore", divide="ignore"):
                leaf_stats.append(np.where(size[:, None] > 0, sums / size[:, None], 0.0))
            leaf_rows.append(leaves)
        object.__setattr__(self, "_train_leaves", tuple(leaf_rows))
        object.__setattr__(self, "_leaf_stats", tuple(leaf_stats))

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def weighted_stats(self, X: np.ndarray) -> np.ndarray:
        """(m, 7) forest-weighted sufficient statistics for each row of X."""
        X = _check_rows(X)
        out = np.zeros((X.shape[0], 7))
        for tree, stats in zip(self.trees, self._leaf_stats):
            out += stats[tree.apply(X)]
        return out / self.n_trees

    def predict_batch(self, X: np.ndarray) -> PredictiveBatch:
        batch, _ = self.predict_with_diagnostics(X)
        return batch

    def predict_with_diagnostics(self, X: np.ndarray) -> tuple[PredictiveBatch, dict]:
        res = mle_from_stats(self.family, stats_from_matrix(self.weighted_stats(X)))
        mu, sigma, nu = safeguard_arrays(res.mu, res.sigma, res.nu)
        n_fallback = int(np.sum(res.fallback))
        if n_fallback:
            logging.warning("[forest] %d predictions used weighted moment estimates", n_fallback)
        return PredictiveBatch(self.family, mu, sigma, nu), {"moment_fallbacks": n_fallback}

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "forest",
            "family": self.family.value,
            "seed": self.seed,
            "config": self.config.model_dump(mode="json"),
            "X_train": self.X_train.tolist(),
            "y_train": self.y_train.tolist(),
            "trees": [tree.to_dict() for tree in self.trees],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DistForest":
        version = payload.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise ShapeError(f"Unsupported forest format version: {version}")
        return cls(
            family=Family.parse(payload["family"]),
            trees=tuple(DistTree.from_dict(t) for t in payload["trees"]),
            X_train=np.asarray(payload["X_train"], dtype=float),
            y_train=np.asarray(payload["y_train"], dtype=float),
            seed=int(payload["seed"]),
            config=ForestConfig.model_validate(payload["config"]),
        )


def _check_rows(X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != len(PREDICTORS):
        raise ShapeError(f"Expected {len(PREDICTORS)} predictors per row, got {X.shape[1]}.")
    return X


def fit_forest(
    d: Dataset,
    family: Family | str,
    config: ForestConfig | None = None,
    seed: int = 0,
    learner_id: str | None = None,
) -> DistForest:
    family = Family.parse(family)
    config = config or ForestConfig()
    n = len(d)
    if n < 2 * config.min_leaf:
        raise SizeError(f"A forest with min_leaf={config.min_leaf} needs at least {2 * config.min_leaf} samples, got {n}.")
    X, y = d.X, d.y
    seeds = [derive_seed(seed, "tree", t) for t in range(config.n_trees)]

    # results come back in seed order for any n_jobs
    trees = tuple(
        Parallel(n_jobs=config.n_jobs, prefer="threads")(
            delayed(grow_tree)(X, y, family, config, tree_seed) for tree_seed in seeds
        )
    )
    leaves = [t.n_leaves for t in trees]
    logging.info(
        "[%s] %d trees, %d-%d leaves per tree", learner_id or "forest", len(trees), min(leaves), max(leaves)
    )
    return DistForest(family=family, trees=trees, X_train=X, y_train=y, seed=int(seed), config=config)


def forest_weight_matrix(f: DistForest, X) -> sparse.csr_matrix:
    """Sparse (m, n_train) matrix of forest weights; each row sums to 1."""
    X = _check_rows(X)
    m, n = X.shape[0], f.X_train.shape[0]
    total = sparse.csr_matrix((m, n))
    for tree, train_leaves in zip(f.trees, f._train_leaves):
        size = np.bincount(train_leaves, weights=tree.inbag, minlength=tree.n_nodes)
        inbag = tree.inbag > 0
        rows = np.flatnonzero(inbag)
        member = sparse.csr_matrix(
            (tree.inbag[rows] / size[train_leaves[rows]], (train_leaves[rows], rows)),
            shape=(tree.n_nodes, n),
        )
        test_leaves = tree.apply(X)
        pick = sparse.csr_matrix((np.ones(m), (np.arange(m), test_leaves)), shape=(m, tree.n_nodes))
        total = total + pick @ member
    return total / f.n_trees


def forest_weights(f: DistForest, x: Sequence[float]) -> np.ndarray:
    row = np.asarray(x, dtype=float)
    if row.ndim != 1 or row.shape[0] != len(PREDICTORS):
        raise ShapeError(f"Expected a row of {len(PREDICTORS)} predictors, got shape {row.shape}.")
    return np.asarray(forest_weight_matrix(f, row[None, :]).todense()).ravel()


def forest_predict_params(f: DistForest, x: Sequence[float]) -> ZeroAdjustedParams:
    row = np.asarray(x, dtype=float)
    if row.ndim != 1 or row.shape[0] != len(PREDICTORS):
        raise ShapeError(f"Expected a row of {len(PREDICTORS)} predictors, got shape {row.shape}.")
    return f.predict_batch(row[None, :])[0].params


__all__ = [
    "DistForest",
    "DistTree",
    "SplitChoice",
    "best_split",
    "candidate_positions",
    "fit_forest",
    "forest_predict_params",
    "forest_weight_matrix",
    "forest_weights",
    "grow_tree",
]
