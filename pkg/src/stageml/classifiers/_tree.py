"""Compiled CART kernels shared by the decision tree, random forest and
boosting code.

Trees are stored as flat parallel arrays. A node with ``feature == -1`` is a
leaf. Samples with ``x[feature] <= threshold`` go left.

Split search works on dense per-feature ranks computed once per fit, so a
node scan is a counting pass over ranks instead of a sort.
"""

import numpy as np
from numba import njit

GINI = 0
ENTROPY = 1

_TIE_EPS = 1e-12


@njit(cache=True)
def dense_ranks(X):
    """Per-feature dense ranks of ``X`` (n, p).

    Returns ``rank_t`` (p, n) with ``rank_t[f, i]`` the position of
    ``X[i, f]`` among the sorted distinct values of column f, the sorted
    distinct values ``uvals`` (p, n) and their counts ``n_unique`` (p,).
    """
    n, p = X.shape
    rank_t = np.empty((p, n), np.int64)
    uvals = np.zeros((p, n))
    n_unique = np.empty(p, np.int64)
    for f in range(p):
        col = X[:, f].copy()
        order = np.argsort(col)
        r = -1
        prev = np.nan
        for k in range(n):
            v = col[order[k]]
            if k == 0 or v != prev:
                r += 1
                uvals[f, r] = v
                prev = v
            rank_t[f, order[k]] = r
        n_unique[f] = r + 1
    return rank_t, uvals, n_unique


@njit(cache=True)
def _mix(z):
    """splitmix64 finaliser."""
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _child_key(key, side):
    return _mix(key + np.uint64(side + 1) * np.uint64(0x9E3779B97F4A7C15))


@njit(cache=True)
def _next(state):
    """Advance a splitmix64 stream; returns (new_state, output)."""
    state = state + np.uint64(0x9E3779B97F4A7C15)
    return state, _mix(state)


@njit(cache=True)
def _impurity(count1, total, criterion):
    if total <= 0.0:
        return 0.0
    p1 = count1 / total
    p0 = 1.0 - p1
    if criterion == GINI:
        return 1.0 - p0 * p0 - p1 * p1
    h = 0.0
    if p0 > 0.0:
        h -= p0 * np.log2(p0)
    if p1 > 0.0:
        h -= p1 * np.log2(p1)
    return h


@njit(cache=True)
def _children_impurity(c1l, nl, c1r, nr, criterion):
    """Size-weighted impurity sum of the two children."""
    if criterion == GINI:
        # n * gini = 2 * c1 * (n - c1) / n
        return 2.0 * (c1l * (nl - c1l) / nl + c1r * (nr - c1r) / nr)
    return nl * _impurity(c1l, nl, criterion) + nr * _impurity(c1r, nr, criterion)


@njit(cache=True)
def _midpoint(lo, hi):
    thr = 0.5 * (lo + hi)
    if thr >= hi or thr < lo:
        thr = lo
    return thr


@njit(cache=True)
def _better(gain, f, thr, best_gain, best_f, best_thr):
    if gain > best_gain + _TIE_EPS:
        return True
    if gain >= best_gain - _TIE_EPS:
        if f < best_f:
            return True
        if f == best_f and thr < best_thr:
            return True
    return False


@njit(cache=True)
def _partition(idx, start, end, rank_t, f, split_rank, tmp):
    """Stable partition of idx[start:end]; rows with rank <= split_rank go
    first. Returns the size of the left block."""
    nl = 0
    for k in range(start, end):
        if rank_t[f, idx[k]] <= split_rank:
            tmp[nl] = idx[k]
            nl += 1
    nr = nl
    for k in range(start, end):
        if rank_t[f, idx[k]] > split_rank:
            tmp[nr] = idx[k]
            nr += 1
    for k in range(end - start):
        idx[start + k] = tmp[k]
    return nl


@njit(cache=True)
def _occupied_in_order(occ, n_occ, rmin, rmax, cnt):
    """Put the distinct ranks occ[:n_occ] in ascending order, either by
    sorting them or by sweeping the rank range, whichever is cheaper."""
    if n_occ < 24:
        for i in range(1, n_occ):
            v = occ[i]
            j = i - 1
            while j >= 0 and occ[j] > v:
                occ[j + 1] = occ[j]
                j -= 1
            occ[j + 1] = v
    elif 8 * n_occ < rmax - rmin:
        occ[:n_occ] = np.sort(occ[:n_occ])
    else:
        u = 0
        for q in range(rmin, rmax + 1):
            if cnt[q] != 0.0:
                occ[u] = q
                u += 1


@njit(cache=True)
def _grow_classifier(rank_t, uvals, y, idx, criterion, max_depth,
                     min_samples_split, min_samples_leaf, max_features,
                     tree_key, feature, threshold, left, right, value, n_node):
    """Grow one classification tree in place and return its node count.

    ``idx`` holds the (possibly repeated) training rows and is permuted.
    Output arrays need room for ``2 * len(idx) - 1`` nodes.

    Each node draws its feature order from a stream keyed by its path from
    the root, so growing with a tighter ``max_depth`` or larger
    ``min_samples_split`` gives exactly a truncation of the looser tree.
    """
    n_features, n_rows = rank_t.shape
    n = idx.shape[0]
    cap = 2 * n + 1
    st_node = np.empty(cap, np.int64)
    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    st_key = np.empty(cap, np.uint64)
    order = np.arange(n_features)
    cnt = np.zeros(n_rows)
    cnt1 = np.zeros(n_rows)
    occ = np.empty(n_rows, np.int64)
    tmp = np.empty(n, np.int64)

    node_count = 1
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    st_key[0] = tree_key
    top = 1
    while top > 0:
        top -= 1
        node = st_node[top]
        start = st_start[top]
        end = st_end[top]
        depth = st_depth[top]
        key = st_key[top]
        m = end - start
        c1 = 0.0
        for i in range(start, end):
            c1 += y[idx[i]]
        value[node] = c1 / m
        n_node[node] = m
        feature[node] = -1
        left[node] = -1
        right[node] = -1
        if ((max_depth >= 0 and depth >= max_depth) or m < min_samples_split
                or m < 2 * min_samples_leaf or c1 == 0.0 or c1 == m):
            continue
        parent = _impurity(c1, m, criterion)

        best_gain = -np.inf
        best_f = n_features
        best_thr = np.inf
        best_rank = -1
        visited = 0
        for i in range(n_features):
            order[i] = i
        state = key
        for i in range(n_features):
            state, draw = _next(state)
            j = i + np.int64(draw % np.uint64(n_features - i))
            t = order[i]
            order[i] = order[j]
            order[j] = t
            f = order[i]
            rmin = n_rows
            rmax = -1
            n_occ = 0
            for k in range(start, end):
                r = idx[k]
                q = rank_t[f, r]
                if cnt[q] == 0.0:
                    occ[n_occ] = q
                    n_occ += 1
                cnt[q] += 1.0
                cnt1[q] += y[r]
                if q < rmin:
                    rmin = q
                if q > rmax:
                    rmax = q
            if n_occ == 1:
                cnt[rmin] = 0.0
                cnt1[rmin] = 0.0
                continue
            visited += 1
            _occupied_in_order(occ, n_occ, rmin, rmax, cnt)
            nl = cnt[rmin]
            cl = cnt1[rmin]
            prev = rmin
            cnt[rmin] = 0.0
            cnt1[rmin] = 0.0
            for u in range(1, n_occ):
                q = occ[u]
                if nl >= min_samples_leaf and m - nl >= min_samples_leaf:
                    gain = parent - _children_impurity(cl, nl, c1 - cl, m - nl,
                                                       criterion) / m
                    thr = _midpoint(uvals[f, prev], uvals[f, q])
                    if _better(gain, f, thr, best_gain, best_f, best_thr):
                        best_gain = gain
                        best_f = f
                        best_thr = thr
                        best_rank = prev
                nl += cnt[q]
                cl += cnt1[q]
                prev = q
                cnt[q] = 0.0
                cnt1[q] = 0.0
            if visited >= max_features and best_f < n_features:
                break
        if best_f == n_features:
            continue

        nl = _partition(idx, start, end, rank_t, best_f, best_rank, tmp)
        feature[node] = best_f
        threshold[node] = best_thr
        lid = node_count
        rid = node_count + 1
        node_count += 2
        left[node] = lid
        right[node] = rid
        # push right first so the left subtree is expanded first
        st_node[top] = rid
        st_start[top] = start + nl
        st_end[top] = end
        st_depth[top] = depth + 1
        st_key[top] = _child_key(key, 1)
        top += 1
        st_node[top] = lid
        st_start[top] = start
        st_end[top] = start + nl
        st_depth[top] = depth + 1
        st_key[top] = _child_key(key, 0)
        top += 1
    return node_count


@njit(cache=True)
def build_forest(rank_t, uvals, y, n_estimators, bootstrap, criterion,
                 max_depth, min_samples_split, min_samples_leaf, max_features,
                 seeds):
    """Grow ``n_estimators`` trees, tree t seeded with ``seeds[t]``.

    Returns node arrays of shape (n_estimators, cap) and per-tree node
    counts. With ``bootstrap`` each tree sees n rows drawn with replacement.
    """
    n = y.shape[0]
    cap = 2 * n + 1
    feature = np.full((n_estimators, cap), -1, np.int64)
    threshold = np.zeros((n_estimators, cap))
    left = np.full((n_estimators, cap), -1, np.int64)
    right = np.full((n_estimators, cap), -1, np.int64)
    value = np.zeros((n_estimators, cap))
    n_node = np.zeros((n_estimators, cap), np.int64)
    counts = np.zeros(n_estimators, np.int64)
    idx = np.empty(n, np.int64)
    for t in range(n_estimators):
        np.random.seed(seeds[t])
        if bootstrap:
            for i in range(n):
                idx[i] = np.random.randint(0, n)
        else:
            for i in range(n):
                idx[i] = i
        counts[t] = _grow_classifier(rank_t, uvals, y, idx, criterion,
                                     max_depth, min_samples_split,
                                     min_samples_leaf, max_features,
                                     _mix(np.uint64(seeds[t])),
                                     feature[t], threshold[t], left[t],
                                     right[t], value[t], n_node[t])
    return feature, threshold, left, right, value, n_node, counts


@njit(cache=True)
def truncate_tree(feature, threshold, left, right, value, n_node, max_depth,
                  min_samples_split):
    """Re-derive a tree grown with a tighter depth / split-size limit.

    Walks the source tree in the same order the grower allocates nodes, so
    the result matches a direct fit array for array.
    """
    cap = feature.shape[0]
    o_feature = np.full(cap, -1, np.int64)
    o_threshold = np.zeros(cap)
    o_left = np.full(cap, -1, np.int64)
    o_right = np.full(cap, -1, np.int64)
    o_value = np.zeros(cap)
    o_n_node = np.zeros(cap, np.int64)
    st_src = np.empty(cap + 1, np.int64)
    st_dst = np.empty(cap + 1, np.int64)
    st_depth = np.empty(cap + 1, np.int64)
    st_src[0] = 0
    st_dst[0] = 0
    st_depth[0] = 0
    top = 1
    count = 1
    while top > 0:
        top -= 1
        src = st_src[top]
        dst = st_dst[top]
        depth = st_depth[top]
        o_value[dst] = value[src]
        o_n_node[dst] = n_node[src]
        if (feature[src] < 0 or (max_depth >= 0 and depth >= max_depth)
                or n_node[src] < min_samples_split):
            continue
        o_feature[dst] = feature[src]
        o_threshold[dst] = threshold[src]
        lid = count
        rid = count + 1
        count += 2
        o_left[dst] = lid
        o_right[dst] = rid
        st_src[top] = right[src]
        st_dst[top] = rid
        st_depth[top] = depth + 1
        top += 1
        st_src[top] = left[src]
        st_dst[top] = lid
        st_depth[top] = depth + 1
        top += 1
    return (o_feature[:count].copy(), o_threshold[:count].copy(),
            o_left[:count].copy(), o_right[:count].copy(),
            o_value[:count].copy(), o_n_node[:count].copy())


@njit(cache=True)
def apply_tree(X, feature, threshold, left, right, offset):
    """Leaf reached by each row for the tree whose nodes start at ``offset``
    in the flat arrays (child ids are tree-local). Returns global ids."""
    n = X.shape[0]
    out = np.empty(n, np.int64)
    for i in range(n):
        node = 0
        while feature[offset + node] >= 0:
            if X[i, feature[offset + node]] <= threshold[offset + node]:
                node = left[offset + node]
            else:
                node = right[offset + node]
        out[i] = offset + node
    return out


@njit(cache=True)
def forest_votes(X, feature, threshold, left, right, value, offsets):
    """Number of trees voting for class 1 (leaf fraction > 0.5) per row."""
    n = X.shape[0]
    votes = np.zeros(n, np.int64)
    for t in range(offsets.shape[0]):
        leaves = apply_tree(X, feature, threshold, left, right, offsets[t])
        for i in range(n):
            if value[leaves[i]] > 0.5:
                votes[i] += 1
    return votes


@njit(cache=True)
def forest_margin(X, feature, threshold, left, right, value, offsets):
    """Sum over trees of the leaf values reached by each row."""
    n = X.shape[0]
    out = np.zeros(n)
    for t in range(offsets.shape[0]):
        leaves = apply_tree(X, feature, threshold, left, right, offsets[t])
        for i in range(n):
            out[i] += value[leaves[i]]
    return out


@njit(cache=True)
def grow_regression_tree(rank_t, uvals, grad, hess, max_depth,
                         min_child_weight, reg_lambda):
    """Second-order boosting tree over all features.

    Split gain is G_L^2/(H_L+lam) + G_R^2/(H_R+lam) - G^2/(H+lam) and must
    be positive; leaf weight is -G/(H+lam).
    """
    n_features, n = rank_t.shape
    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    weight = np.zeros(cap)
    idx = np.arange(n)
    tmp = np.empty(n, np.int64)
    gsum = np.zeros(n)
    hsum = np.zeros(n)
    seen = np.zeros(n, np.bool_)
    st_node = np.empty(cap, np.int64)
    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    top = 1
    node_count = 1
    while top > 0:
        top -= 1
        node = st_node[top]
        start = st_start[top]
        end = st_end[top]
        depth = st_depth[top]
        m = end - start
        G = 0.0
        H = 0.0
        for k in range(start, end):
            G += grad[idx[k]]
            H += hess[idx[k]]
        weight[node] = -G / (H + reg_lambda)
        if depth >= max_depth or m < 2:
            continue
        parent = G * G / (H + reg_lambda)
        best_gain = _TIE_EPS
        best_f = -1
        best_thr = 0.0
        best_rank = -1
        for f in range(n_features):
            rmin = n
            rmax = -1
            for k in range(start, end):
                r = idx[k]
                q = rank_t[f, r]
                gsum[q] += grad[r]
                hsum[q] += hess[r]
                seen[q] = True
                if q < rmin:
                    rmin = q
                if q > rmax:
                    rmax = q
            gl = gsum[rmin]
            hl = hsum[rmin]
            prev = rmin
            gsum[rmin] = 0.0
            hsum[rmin] = 0.0
            seen[rmin] = False
            for q in range(rmin + 1, rmax + 1):
                if not seen[q]:
                    continue
                hr = H - hl
                if hl >= min_child_weight and hr >= min_child_weight:
                    gr = G - gl
                    gain = (gl * gl / (hl + reg_lambda)
                            + gr * gr / (hr + reg_lambda) - parent)
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        best_thr = _midpoint(uvals[f, prev], uvals[f, q])
                        best_rank = prev
                gl += gsum[q]
                hl += hsum[q]
                prev = q
                gsum[q] = 0.0
                hsum[q] = 0.0
                seen[q] = False
        if best_f < 0:
            continue
        nl = _partition(idx, start, end, rank_t, best_f, best_rank, tmp)
        feature[node] = best_f
        threshold[node] = best_thr
        lid = node_count
        rid = node_count + 1
        node_count += 2
        left[node] = lid
        right[node] = rid
        st_node[top] = rid
        st_start[top] = start + nl
        st_end[top] = end
        st_depth[top] = depth + 1
        top += 1
        st_node[top] = lid
        st_start[top] = start
        st_end[top] = start + nl
        st_depth[top] = depth + 1
        top += 1
    return (feature[:node_count].copy(), threshold[:node_count].copy(),
            left[:node_count].copy(), right[:node_count].copy(),
            weight[:node_count].copy())
