# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot inner loops.

Mirrors ``pure.py`` operation-for-operation: identical summation order and
tie-breaking in the split scan, stable partitioning, and the same splitmix64
stream for feature subsets, so both backends grow identical trees.  The
coordinate-descent dot product is a naive loop, which may differ from BLAS
in the last bits.
"""

from libc.stdlib cimport free, malloc

import numpy as np


cdef void _stable_argsort(double* vals, Py_ssize_t* idx, Py_ssize_t* tmp,
                          Py_ssize_t n) noexcept nogil:
    # Bottom-up stable mergesort of idx by vals[idx].
    cdef Py_ssize_t width = 1
    cdef Py_ssize_t lo, mid, hi, a, b, k, i
    cdef Py_ssize_t* src = idx
    cdef Py_ssize_t* dst = tmp
    cdef Py_ssize_t* swap
    while width < n:
        lo = 0
        while lo < n:
            mid = lo + width
            hi = mid + width
            if mid > n:
                mid = n
            if hi > n:
                hi = n
            a = lo
            b = mid
            k = lo
            while a < mid and b < hi:
                if vals[src[a]] <= vals[src[b]]:
                    dst[k] = src[a]
                    a += 1
                else:
                    dst[k] = src[b]
                    b += 1
                k += 1
            while a < mid:
                dst[k] = src[a]
                a += 1
                k += 1
            while b < hi:
                dst[k] = src[b]
                b += 1
                k += 1
            lo = hi
        swap = src
        src = dst
        dst = swap
        width *= 2
    if src != idx:
        for i in range(n):
            idx[i] = src[i]


cdef struct ScanResult:
    Py_ssize_t col
    double thr
    double gain
    bint found


cdef struct Workspace:
    double* vals
    double* sv
    double* csum
    Py_ssize_t* idx
    Py_ssize_t* tmp


cdef ScanResult _scan_node(double[:, ::1] X, double[::1] y, long* rows,
                           Py_ssize_t start, Py_ssize_t end, long* cols,
                           Py_ssize_t ncols, Py_ssize_t min_leaf,
                           Workspace ws) noexcept nogil:
    cdef ScanResult out
    out.col = -1
    out.thr = 0.0
    out.gain = 0.0
    out.found = 0
    cdef Py_ssize_t m = end - start
    if m < 2 or m < 2 * min_leaf:
        return out
    cdef Py_ssize_t lo = min_leaf if min_leaf > 1 else 1
    cdef Py_ssize_t i0 = lo - 1
    cdef Py_ssize_t i1 = m - lo
    if i0 >= i1:
        return out

    cdef Py_ssize_t ci, i, col
    cdef double total, run, sl, sr, gain, col_gain, col_thr
    cdef Py_ssize_t nl, nr
    cdef bint col_found
    for ci in range(ncols):
        col = cols[ci]
        for i in range(m):
            ws.vals[i] = X[rows[start + i], col]
            ws.idx[i] = i
        _stable_argsort(ws.vals, ws.idx, ws.tmp, m)
        for i in range(m):
            ws.sv[i] = ws.vals[ws.idx[i]]
        if ws.sv[0] == ws.sv[m - 1]:
            continue
        run = 0.0
        for i in range(m):
            run += y[rows[start + ws.idx[i]]]
            ws.csum[i] = run
        total = ws.csum[m - 1]
        col_found = 0
        col_gain = 0.0
        col_thr = 0.0
        for i in range(i0, i1):
            if ws.sv[i + 1] > ws.sv[i]:
                sl = ws.csum[i]
                nl = i + 1
                sr = total - sl
                nr = m - nl
                gain = (sl * sl) / <double>nl + (sr * sr) / <double>nr \
                    - (total * total) / <double>m
                if col_found == 0 or gain > col_gain:
                    col_gain = gain
                    col_thr = 0.5 * (ws.sv[i] + ws.sv[i + 1])
                    col_found = 1
        if col_found and (out.found == 0 or col_gain > out.gain):
            out.col = col
            out.thr = col_thr
            out.gain = col_gain
            out.found = 1
    return out


cdef Workspace _alloc_workspace(Py_ssize_t n):
    cdef Workspace ws
    ws.vals = <double*> malloc(n * sizeof(double))
    ws.sv = <double*> malloc(n * sizeof(double))
    ws.csum = <double*> malloc(n * sizeof(double))
    ws.idx = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    ws.tmp = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    return ws


cdef void _free_workspace(Workspace ws) noexcept:
    free(ws.vals)
    free(ws.sv)
    free(ws.csum)
    free(ws.idx)
    free(ws.tmp)


cdef bint _workspace_ok(Workspace ws) noexcept:
    return (ws.vals != NULL and ws.sv != NULL and ws.csum != NULL
            and ws.idx != NULL and ws.tmp != NULL)


def best_split(double[:, ::1] X, double[::1] y, long[::1] rows,
               long[::1] cols, Py_ssize_t min_leaf):
    """Best (column, threshold) over candidate columns by SSE reduction."""
    cdef Py_ssize_t m = rows.shape[0]
    if m < 2 or m < 2 * min_leaf:
        return -1, 0.0, 0.0
    cdef Workspace ws = _alloc_workspace(m)
    cdef long* row_buf = <long*> malloc(m * sizeof(long))
    cdef long* col_buf = <long*> malloc(cols.shape[0] * sizeof(long))
    if not _workspace_ok(ws) or row_buf == NULL or col_buf == NULL:
        _free_workspace(ws)
        free(row_buf)
        free(col_buf)
        raise MemoryError()
    cdef Py_ssize_t i
    for i in range(m):
        row_buf[i] = rows[i]
    for i in range(cols.shape[0]):
        col_buf[i] = cols[i]
    cdef ScanResult res
    with nogil:
        res = _scan_node(X, y, row_buf, 0, m, col_buf, cols.shape[0], min_leaf, ws)
    _free_workspace(ws)
    free(row_buf)
    free(col_buf)
    if not res.found:
        return -1, 0.0, 0.0
    return int(res.col), res.thr, res.gain


cdef unsigned long long _SPLITMIX_INC = 0x9E3779B97F4A7C15ULL


cdef unsigned long long _splitmix_next(unsigned long long* state) noexcept nogil:
    state[0] = state[0] + _SPLITMIX_INC
    cdef unsigned long long z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef void _insertion_sort(long* arr, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef long key
    for i in range(1, n):
        key = arr[i]
        j = i - 1
        while j >= 0 and arr[j] > key:
            arr[j + 1] = arr[j]
            j -= 1
        arr[j + 1] = key


def grow_tree(double[:, ::1] X, double[::1] y, long[::1] rows,
              long max_depth, Py_ssize_t min_leaf, Py_ssize_t m,
              unsigned long long seed):
    """Grow a CART regression tree over ``rows`` (a row-index multiset).

    max_depth < 0 means unlimited.  Returns the node arrays
    (feature, threshold, left, right, value, n_samples, impurity, gain).
    """
    cdef Py_ssize_t n = rows.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Workspace ws = _alloc_workspace(n)
    cdef long* row_buf = <long*> malloc(n * sizeof(long))
    cdef long* part_buf = <long*> malloc(n * sizeof(long))
    cdef long* pool = <long*> malloc(d * sizeof(long))
    cdef long* cols = <long*> malloc(d * sizeof(long))
    # stack entries: (start, end, depth, node id); never more than one live
    # entry per eventual node
    cdef Py_ssize_t stack_cap = 2 * n + 4
    cdef Py_ssize_t* stack = <Py_ssize_t*> malloc(4 * stack_cap * sizeof(Py_ssize_t))
    if (not _workspace_ok(ws) or row_buf == NULL or part_buf == NULL
            or pool == NULL or cols == NULL or stack == NULL):
        _free_workspace(ws)
        free(row_buf); free(part_buf); free(pool); free(cols); free(stack)
        raise MemoryError()

    cdef Py_ssize_t i
    for i in range(n):
        row_buf[i] = rows[i]

    feature: list = []
    threshold: list = []
    left: list = []
    right: list = []
    value: list = []
    n_samples: list = []
    impurity: list = []
    gain: list = []

    cdef unsigned long long state = seed
    cdef Py_ssize_t top = 0
    cdef Py_ssize_t start, end, depth, node, m_node, nl_count, k, j
    cdef Py_ssize_t lnode, rnode, ncols
    cdef double s, mean, var, dev, g
    cdef unsigned long long draw
    cdef ScanResult res
    cdef bint depth_ok

    # root
    feature.append(-1); threshold.append(0.0); left.append(-1); right.append(-1)
    value.append(0.0); n_samples.append(0); impurity.append(0.0); gain.append(0.0)
    stack[0] = 0; stack[1] = n; stack[2] = 0; stack[3] = 0
    top = 1

    while top > 0:
        top -= 1
        start = stack[4 * top]
        end = stack[4 * top + 1]
        depth = stack[4 * top + 2]
        node = stack[4 * top + 3]
        m_node = end - start

        # two-pass mean/variance: exactly zero on constant nodes
        s = 0.0
        for i in range(start, end):
            s += y[row_buf[i]]
        mean = s / <double>m_node
        var = 0.0
        for i in range(start, end):
            dev = y[row_buf[i]] - mean
            var += dev * dev
        var = var / <double>m_node

        value[node] = mean
        n_samples[node] = m_node
        impurity[node] = var

        depth_ok = max_depth < 0 or depth < max_depth
        if not (depth_ok and m_node >= 2 * min_leaf and var > 0.0):
            continue

        if m >= d:
            ncols = d
            for i in range(d):
                cols[i] = i
        else:
            ncols = m
            for i in range(d):
                pool[i] = i
            for i in range(m):
                draw = _splitmix_next(&state)
                j = i + <Py_ssize_t>(draw % <unsigned long long>(d - i))
                k = pool[i]; pool[i] = pool[j]; pool[j] = k
            for i in range(m):
                cols[i] = pool[i]
            _insertion_sort(cols, m)

        with nogil:
            res = _scan_node(X, y, row_buf, start, end, cols, ncols, min_leaf, ws)
        if not res.found or res.gain <= 0.0:
            continue

        feature[node] = int(res.col)
        threshold[node] = res.thr
        g = res.gain
        gain[node] = g if g > 0.0 else 0.0

        # stable partition: left block keeps <= thr in original order
        nl_count = 0
        k = 0
        for i in range(start, end):
            if X[row_buf[i], res.col] <= res.thr:
                part_buf[nl_count] = row_buf[i]
                nl_count += 1
            else:
                part_buf[n - 1 - k] = row_buf[i]  # right block, reversed
                k += 1
        for i in range(nl_count):
            row_buf[start + i] = part_buf[i]
        for i in range(k):
            row_buf[start + nl_count + i] = part_buf[n - 1 - i]

        lnode = len(feature)
        feature.append(-1); threshold.append(0.0); left.append(-1); right.append(-1)
        value.append(0.0); n_samples.append(0); impurity.append(0.0); gain.append(0.0)
        rnode = len(feature)
        feature.append(-1); threshold.append(0.0); left.append(-1); right.append(-1)
        value.append(0.0); n_samples.append(0); impurity.append(0.0); gain.append(0.0)
        left[node] = lnode
        right[node] = rnode

        # push right, then left: left subtree is processed first
        stack[4 * top] = start + nl_count; stack[4 * top + 1] = end
        stack[4 * top + 2] = depth + 1; stack[4 * top + 3] = rnode
        top += 1
        stack[4 * top] = start; stack[4 * top + 1] = start + nl_count
        stack[4 * top + 2] = depth + 1; stack[4 * top + 3] = lnode
        top += 1

    _free_workspace(ws)
    free(row_buf); free(part_buf); free(pool); free(cols); free(stack)
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


def grow_tree_dense(double[:, ::1] X, double[::1] y, long[:, ::1] order,
                    long max_depth, Py_ssize_t min_leaf):
    """Level-wise CART growth over all rows and columns, using presorted
    column orders (for boosting stages, where X never changes).

    Produces the same splits as the per-node scan: per column the node's
    rows stream in the same stable order, totals and prefix sums accumulate
    in the same sequence, and ties break by lowest column then lowest
    threshold.  Node numbering is level-order rather than depth-first.
    """
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t cap = n + 1

    node_of_arr = np.zeros(n, dtype=np.int64)
    cdef long[::1] node_of = node_of_arr

    cdef Py_ssize_t* cnt = <Py_ssize_t*> malloc(cap * sizeof(Py_ssize_t))
    cdef double* ssum = <double*> malloc(cap * sizeof(double))
    cdef double* meanv = <double*> malloc(cap * sizeof(double))
    cdef double* varv = <double*> malloc(cap * sizeof(double))
    cdef char* splittable = <char*> malloc(cap * sizeof(char))
    cdef double* bg = <double*> malloc(cap * sizeof(double))
    cdef long* bcol = <long*> malloc(cap * sizeof(long))
    cdef double* bthr = <double*> malloc(cap * sizeof(double))
    cdef char* bfound = <char*> malloc(cap * sizeof(char))
    cdef double* cg = <double*> malloc(cap * sizeof(double))
    cdef double* ct = <double*> malloc(cap * sizeof(double))
    cdef char* cfound = <char*> malloc(cap * sizeof(char))
    cdef double* rs = <double*> malloc(cap * sizeof(double))
    cdef Py_ssize_t* lc = <Py_ssize_t*> malloc(cap * sizeof(Py_ssize_t))
    cdef double* lv = <double*> malloc(cap * sizeof(double))
    cdef char* seen = <char*> malloc(cap * sizeof(char))
    cdef double* tot = <double*> malloc(cap * sizeof(double))
    cdef long* lchild = <long*> malloc(cap * sizeof(long))
    cdef long* rchild = <long*> malloc(cap * sizeof(long))
    if (cnt == NULL or ssum == NULL or meanv == NULL or varv == NULL
            or splittable == NULL or bg == NULL or bcol == NULL
            or bthr == NULL or bfound == NULL or cg == NULL or ct == NULL
            or cfound == NULL or rs == NULL or lc == NULL or lv == NULL
            or seen == NULL or tot == NULL or lchild == NULL or rchild == NULL):
        free(cnt); free(ssum); free(meanv); free(varv); free(splittable)
        free(bg); free(bcol); free(bthr); free(bfound); free(cg); free(ct)
        free(cfound); free(rs); free(lc); free(lv); free(seen); free(tot)
        free(lchild); free(rchild)
        raise MemoryError()

    feature: list = [-1]
    threshold: list = [0.0]
    left: list = [-1]
    right: list = [-1]
    value: list = [0.0]
    n_samples: list = [0]
    impurity: list = [0.0]
    gain: list = [0.0]

    cdef Py_ssize_t base = 0
    cdef Py_ssize_t nf = 1
    cdef Py_ssize_t depth = 0
    cdef Py_ssize_t i, row, slot, col, nl, nr
    cdef long nid
    cdef double v, dev, sl, sr, g
    cdef bint depth_ok, any_split

    while nf > 0:
        # pass 1: count and sum per frontier node (row-index order)
        for i in range(nf):
            cnt[i] = 0
            ssum[i] = 0.0
        with nogil:
            for row in range(n):
                nid = node_of[row]
                if nid >= 0:
                    slot = nid - base
                    cnt[slot] += 1
                    ssum[slot] += y[row]
        for i in range(nf):
            meanv[i] = ssum[i] / <double>cnt[i]
            varv[i] = 0.0
        with nogil:
            for row in range(n):
                nid = node_of[row]
                if nid >= 0:
                    slot = nid - base
                    dev = y[row] - meanv[slot]
                    varv[slot] += dev * dev
        depth_ok = max_depth < 0 or depth < max_depth
        for i in range(nf):
            varv[i] = varv[i] / <double>cnt[i]
            value[base + i] = meanv[i]
            n_samples[base + i] = cnt[i]
            impurity[base + i] = varv[i]
            splittable[i] = 1 if (depth_ok and cnt[i] >= 2 * min_leaf
                                  and varv[i] > 0.0) else 0
            bfound[i] = 0
            bg[i] = 0.0
            bcol[i] = -1
            bthr[i] = 0.0

        any_split = False
        for i in range(nf):
            if splittable[i]:
                any_split = True
                break

        if any_split:
            with nogil:
                for col in range(d):
                    # pass A: per-node totals in this column's sorted order
                    for i in range(nf):
                        tot[i] = 0.0
                        cfound[i] = 0
                        cg[i] = 0.0
                        ct[i] = 0.0
                        rs[i] = 0.0
                        lc[i] = 0
                        seen[i] = 0
                        lv[i] = 0.0
                    for i in range(n):
                        row = order[col, i]
                        nid = node_of[row]
                        if nid >= 0 and splittable[nid - base]:
                            tot[nid - base] += y[row]
                    # pass B: streaming boundary evaluation
                    for i in range(n):
                        row = order[col, i]
                        nid = node_of[row]
                        if nid < 0:
                            continue
                        slot = nid - base
                        if not splittable[slot]:
                            continue
                        v = X[row, col]
                        if seen[slot] and v > lv[slot]:
                            nl = lc[slot]
                            nr = cnt[slot] - nl
                            if nl >= min_leaf and nr >= min_leaf:
                                sl = rs[slot]
                                sr = tot[slot] - sl
                                g = (sl * sl) / <double>nl \
                                    + (sr * sr) / <double>nr \
                                    - (tot[slot] * tot[slot]) / <double>cnt[slot]
                                if cfound[slot] == 0 or g > cg[slot]:
                                    cg[slot] = g
                                    ct[slot] = 0.5 * (lv[slot] + v)
                                    cfound[slot] = 1
                        rs[slot] += y[row]
                        lc[slot] += 1
                        lv[slot] = v
                        seen[slot] = 1
                    for i in range(nf):
                        if cfound[i] and (bfound[i] == 0 or cg[i] > bg[i]):
                            bg[i] = cg[i]
                            bcol[i] = col
                            bthr[i] = ct[i]
                            bfound[i] = 1

        # finalize: create children for nodes that split, settle the rest
        for i in range(nf):
            if bfound[i] and bg[i] > 0.0:
                feature[base + i] = int(bcol[i])
                threshold[base + i] = bthr[i]
                gain[base + i] = bg[i]
                lchild[i] = len(feature)
                feature.append(-1); threshold.append(0.0)
                left.append(-1); right.append(-1)
                value.append(0.0); n_samples.append(0)
                impurity.append(0.0); gain.append(0.0)
                rchild[i] = len(feature)
                feature.append(-1); threshold.append(0.0)
                left.append(-1); right.append(-1)
                value.append(0.0); n_samples.append(0)
                impurity.append(0.0); gain.append(0.0)
                left[base + i] = lchild[i]
                right[base + i] = rchild[i]
            else:
                lchild[i] = -1
                rchild[i] = -1
        with nogil:
            for row in range(n):
                nid = node_of[row]
                if nid < 0:
                    continue
                slot = nid - base
                if lchild[slot] < 0:
                    node_of[row] = -1
                elif X[row, bcol[slot]] <= bthr[slot]:
                    node_of[row] = lchild[slot]
                else:
                    node_of[row] = rchild[slot]
        base = base + nf
        nf = len(feature) - base
        depth += 1

    free(cnt); free(ssum); free(meanv); free(varv); free(splittable)
    free(bg); free(bcol); free(bthr); free(bfound); free(cg); free(ct)
    free(cfound); free(rs); free(lc); free(lv); free(seen); free(tot)
    free(lchild); free(rchild)
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


def cd_sweep(double[:, ::1] G, double[::1] c, double[::1] w,
             double l1_half, double l2):
    """One cyclic coordinate-descent sweep; updates w in place."""
    cdef Py_ssize_t d = w.shape[0]
    cdef Py_ssize_t j, k
    cdef double max_change = 0.0
    cdef double gjj, denom, q, wj, change
    with nogil:
        for j in range(d):
            gjj = G[j, j]
            denom = gjj + l2
            if denom <= 0.0:
                wj = 0.0
            else:
                q = 0.0
                for k in range(d):
                    q += G[j, k] * w[k]
                q = c[j] - q + gjj * w[j]
                if q > l1_half:
                    wj = (q - l1_half) / denom
                elif q < -l1_half:
                    wj = (q + l1_half) / denom
                else:
                    wj = 0.0
            change = wj - w[j]
            if change < 0.0:
                change = -change
            if change > max_change:
                max_change = change
            w[j] = wj
    return max_change
