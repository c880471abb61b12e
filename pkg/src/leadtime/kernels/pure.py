"""Pure-numpy kernels: reference implementations of the hot inner loops.

These mirror the compiled extension operation-for-operation: same summation
order in the split scan, same stable partitioning, and the same splitmix64
stream for per-node feature subsets, so both backends grow identical trees.
The coordinate-descent sweep may differ from the compiled one in the last
bits because numpy's dot product is BLAS-backed.
"""

from __future__ import annotations

import numpy as np

from ..rng import splitmix64


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    min_leaf: int,
) -> tuple[int, float, float]:
    """Best (column, threshold) over candidate columns by SSE reduction.

    Thresholds are midpoints between consecutive sorted unique values; ties
    in gain are broken by lowest column index (scan order) then lowest
    threshold.  Returns (-1, 0.0, 0.0) when no valid split exists.
    """
    m = rows.shape[0]
    if m < 2 or m < 2 * min_leaf:
        return -1, 0.0, 0.0
    lo = min_leaf if min_leaf > 1 else 1
    i0, i1 = lo - 1, m - lo  # candidate boundaries: split after sorted position i
    if i0 >= i1:
        return -1, 0.0, 0.0
    yr = y[rows]

    best_col = -1
    best_thr = 0.0
    best_gain = 0.0
    found = False
    for col in cols:
        vals = X[rows, col]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        if sv[0] == sv[m - 1]:
            continue
        sy = yr[order]
        cum = np.cumsum(sy)
        total = cum[-1]
        sl = cum[i0:i1]
        nl = np.arange(i0 + 1, i1 + 1, dtype=np.int64)
        sr = total - sl
        nr = m - nl
        gains = sl * sl / nl + sr * sr / nr - total * total / m
        valid = sv[i0 + 1 : i1 + 1] > sv[i0:i1]
        if not valid.any():
            continue
        masked = np.where(valid, gains, -np.inf)
        j = int(np.argmax(masked))
        gain = float(masked[j])
        if not found or gain > best_gain:
            i = i0 + j
            best_col = int(col)
            best_thr = 0.5 * (float(sv[i]) + float(sv[i + 1]))
            best_gain = gain
            found = True
    if not found:
        return -1, 0.0, 0.0
    return best_col, best_thr, best_gain


def _sample_columns(d: int, m: int, state: int) -> tuple[np.ndarray, int]:
    """First m entries of a partial Fisher-Yates shuffle, sorted ascending.

    Consumes exactly m splitmix64 draws; bit-compatible with the compiled
    backend.
    """
    pool = list(range(d))
    for i in range(m):
        state, draw = splitmix64(state)
        j = i + draw % (d - i)
        pool[i], pool[j] = pool[j], pool[i]
    return np.array(sorted(pool[:m]), dtype=np.int64), state


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    max_depth: int,
    min_leaf: int,
    m: int,
    seed: int,
) -> tuple[np.ndarray, ...]:
    """Grow a CART regression tree over ``rows`` (a row-index multiset).

    max_depth < 0 means unlimited.  Returns the node arrays
    (feature, threshold, left, right, value, n_samples, impurity, gain).
    """
    d = X.shape[1]
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []
    n_samples: list[int] = []
    impurity: list[float] = []
    gain: list[float] = []

    def _new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        n_samples.append(0)
        impurity.append(0.0)
        gain.append(0.0)
        return len(feature) - 1

    state = int(seed)
    all_cols = np.arange(d, dtype=np.int64)
    root = _new_node()
    stack = [(np.asarray(rows, dtype=np.int64), 0, root)]
    while stack:
        node_rows, depth, node = stack.pop()
        ynode = y[node_rows]
        mean = float(ynode.mean())
        var = float(ynode.var())  # two-pass: exactly 0 on constant nodes
        value[node] = mean
        n_samples[node] = int(node_rows.size)
        impurity[node] = var
        depth_ok = max_depth < 0 or depth < max_depth
        if not (depth_ok and node_rows.size >= 2 * min_leaf and var > 0.0):
            continue
        if m >= d:
            cols = all_cols
        else:
            cols, state = _sample_columns(d, m, state)
        col, thr, g = best_split(X, y, node_rows, cols, min_leaf)
        if col < 0 or g <= 0.0:
            continue
        feature[node] = col
        threshold[node] = thr
        gain[node] = g if g > 0.0 else 0.0
        mask = X[node_rows, col] <= thr
        lnode = _new_node()
        rnode = _new_node()
        left[node] = lnode
        right[node] = rnode
        stack.append((node_rows[~mask], depth + 1, rnode))
        stack.append((node_rows[mask], depth + 1, lnode))

    return (
        np.asarray(feature, dtype=np.int32),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.asarray(value, dtype=np.float64),
        np.asarray(n_samples, dtype=np.int64),
        np.asarray(impurity, dtype=np.float64),
        np.asarray(gain, dtype=np.float64),
    )


def grow_tree_dense(
    X: np.ndarray,
    y: np.ndarray,
    order: np.ndarray,
    max_depth: int,
    min_leaf: int,
) -> tuple[np.ndarray, ...]:
    """Boosting-stage tree over all rows and columns.

    The compiled backend exploits the presorted column ``order``; here the
    generic grower produces the same splits (node numbering may differ).
    """
    del order  # presorting only pays off in the compiled backend
    n, d = X.shape
    return grow_tree(X, y, np.arange(n, dtype=np.int64), max_depth, min_leaf, d, 0)


def cd_sweep(
    G: np.ndarray,
    c: np.ndarray,
    w: np.ndarray,
    l1_half: float,
    l2: float,
) -> float:
    """One cyclic coordinate-descent sweep on the Gram-form objective.

    Minimizes ||Xw - r||^2 + 2*l1_half*sum|w_j| + l2*sum w_j^2 coordinate by
    coordinate, where G = X'X and c = X'r.  Updates ``w`` in place and
    returns the largest absolute coordinate change.
    """
    d = w.shape[0]
    max_change = 0.0
    for j in range(d):
        gjj = float(G[j, j])
        denom = gjj + l2
        if denom <= 0.0:
            wj = 0.0
        else:
            q = float(c[j]) - float(np.dot(G[j], w)) + gjj * float(w[j])
            if q > l1_half:
                wj = (q - l1_half) / denom
            elif q < -l1_half:
                wj = (q + l1_half) / denom
            else:
                wj = 0.0
        change = abs(wj - float(w[j]))
        if change > max_change:
            max_change = change
        w[j] = wj
    return max_change
