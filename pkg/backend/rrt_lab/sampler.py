"""Compiled kernels: compensated log-space prefix sums and the dynamic
weighted sampler used to grow trees.

The sampler is a Fenwick (binary indexed) tree over rescaled weights
exp(logw[j] - offset). Appending a weight whose rescaled value would exceed e^300
triggers an O(k) rebuild around a fresh offset.
"""
import numpy as np
from numba import njit

RESCALE_LIMIT = 300.0


@njit(cache=True, nogil=True)
def log_cumsum_exp(x):
    """log(sum_{q<=r} exp(x[q])) for every r, to a few ulps.

    Keeps a running maximum as the scale and a Kahan-compensated sum of
    exp(x[q] - scale), rescaling both when the maximum moves.
    """
    n = x.shape[0]
    out = np.empty(n)
    if n == 0:
        return out
    scale = x[0]
    acc = 1.0
    comp = 0.0
    out[0] = x[0]
    for r in range(1, n):
        v = x[r]
        if v > scale:
            factor = np.exp(scale - v)
            acc *= factor
            comp *= factor
            scale = v
        term = np.exp(v - scale) - comp
        total = acc + term
        comp = (total - acc) - term
        acc = total
        out[r] = scale + np.log(acc)
    return out


@njit(cache=True, nogil=True)
def _fenwick_build(values, size):
    tree = np.zeros(values.shape[0] + 1)
    for i in range(1, size + 1):
        tree[i] += values[i - 1]
        parent = i + (i & -i)
        if parent <= size:
            tree[parent] += tree[i]
    return tree


@njit(cache=True, nogil=True)
def _fenwick_add(tree, index, value, size):
    i = index + 1
    while i <= size:
        tree[i] += value
        i += i & -i


@njit(cache=True, nogil=True)
def _fenwick_total(tree, size):
    s = 0.0
    i = size
    while i > 0:
        s += tree[i]
        i -= i & -i
    return s


@njit(cache=True, nogil=True)
def _fenwick_find(tree, target, size, top_bit):
    """Smallest 0-based index whose inclusive prefix sum exceeds target."""
    pos = 0
    step = top_bit
    while step > 0:
        nxt = pos + step
        if nxt <= size and tree[nxt] <= target:
            pos = nxt
            target -= tree[nxt]
        step >>= 1
    return pos


@njit(cache=True, nogil=True)
def grow_parents(logw, uniforms, capacity):
    """Choose the parent of every vertex k = 1..n.

    Vertex k attaches to j < k with probability exp(logw[j]) / W_{k-1}.
    ``uniforms[k - 1]`` drives step k. Returns (parent, rebuilds).
    """
    n = uniforms.shape[0]
    parent = np.empty(n + 1, dtype=np.int64)
    parent[0] = -1
    top_bit = 1
    while top_bit * 2 <= capacity:
        top_bit *= 2

    offset = logw[0]
    values = np.zeros(capacity)
    values[0] = 1.0
    tree = _fenwick_build(values, capacity)
    total = 1.0
    rebuilds = 0
    for k in range(1, n + 1):
        target = uniforms[k - 1] * total
        j = _fenwick_find(tree, target, k, top_bit)
        if j > k - 1:
            # roundoff pushed target past the total
            j = k - 1
        parent[k] = j
        if k == n:
            break
        v = logw[k]
        if v - offset > RESCALE_LIMIT:
            # offset tracks the running maximum; weights far below it only
            # lose mass that is negligible against the maximum
            offset = v
            for q in range(k + 1):
                values[q] = np.exp(logw[q] - offset)
            tree = _fenwick_build(values, capacity)
            rebuilds += 1
        else:
            values[k] = np.exp(v - offset)
            _fenwick_add(tree, k, values[k], capacity)
        total = _fenwick_total(tree, k + 1)
    return parent, rebuilds


@njit(cache=True, nogil=True)
def depths_from_parents(parent, edge_len):
    """D_0 = 0, D_k = D_{parent[k]} + Y(k); valid because parent[k] < k."""
    n = parent.shape[0]
    depth = np.zeros(n)
    for k in range(1, n):
        depth[k] = depth[parent[k]] + edge_len[k]
    return depth
