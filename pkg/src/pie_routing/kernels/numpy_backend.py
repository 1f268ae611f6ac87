"""Pure-numpy fallback kernels.

Same signatures and bit-identical results as ``numba_backend`` (the two are
equivalence-tested); used when numba is unavailable or when the PIE_BACKEND
environment variable selects it.  Inner loops are vectorized per round/hop
rather than compiled.
"""
from __future__ import annotations

import numpy as np

NAME = "numpy"

DELIVERED = 0
STUCK = 1
TTL_EXCEEDED = 2


def _row_sources(indptr):
    n = indptr.size - 1
    return np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))


def _canonical_parents(indptr, indices, weights, dist):
    n = indptr.size - 1
    src = _row_sources(indptr)
    dst = indices.astype(np.int64)
    tight = np.isfinite(dist[dst]) & (dist[src] + weights == dist[dst])
    parent = np.full(n, n, dtype=np.int64)
    np.minimum.at(parent, dst[tight], src[tight])
    parent[parent == n] = -1
    parent[dist == 0.0] = -1
    parent[~np.isfinite(dist)] = -1
    return parent.astype(np.int32)


def _dijkstra(indptr, indices, weights, dist):
    n = indptr.size - 1
    done = np.zeros(n, dtype=bool)
    while True:
        cand = np.where(done, np.inf, dist)
        mu = cand.min() if n else np.inf
        if not np.isfinite(mu):
            break
        batch = np.flatnonzero(cand == mu)
        done[batch] = True
        starts = indptr[batch]
        counts = indptr[batch + 1] - starts
        total = int(counts.sum())
        if total == 0:
            continue
        eidx = np.repeat(starts, counts) + _ragged_arange(counts)
        tgt = indices[eidx].astype(np.int64)
        np.minimum.at(dist, tgt, mu + weights[eidx])
    return dist


def _ragged_arange(counts):
    total = int(counts.sum())
    out = np.arange(total, dtype=np.int64)
    if counts.size:
        offsets = np.repeat(np.cumsum(counts) - counts, counts)
        out -= offsets
    return out


def sssp(indptr, indices, weights, source):
    """Single-source Dijkstra: (dist, canonical min-id tight parent)."""
    n = indptr.size - 1
    dist = np.full(n, np.inf)
    dist[source] = 0.0
    _dijkstra(indptr, indices, weights, dist)
    return dist, _canonical_parents(indptr, indices, weights, dist)


def sssp_multi(indptr, indices, weights, source_mask):
    """Distance to the nearest of a set of sources."""
    n = indptr.size - 1
    dist = np.full(n, np.inf)
    dist[source_mask] = 0.0
    return _dijkstra(indptr, indices, weights, dist)


def tree_converge(indptr, indices, weights, init_key, init_root, init_height,
                  key_major, max_rounds, window):
    """Synchronous tree-maintainer rounds; see numba_backend for semantics.

    The per-receiver sequential fold over ascending senders is equivalent to
    taking the lexicographically best offer (stable within CSR order) and
    adopting it iff strictly better than the round-start state; that is what
    is vectorized here.
    """
    m, n = init_key.shape
    key = init_key.copy()
    root = init_root.copy()
    height = init_height.copy()
    parent = np.full((m, n), -1, dtype=np.int32)
    prev_parent = parent.copy()

    recv = _row_sources(indptr)
    send = indices.astype(np.int64)
    edges2 = indices.size
    messages = 0
    quiet = 0
    rounds = 0
    for r in range(1, max_rounds + 1):
        rounds = r
        messages += m * edges2
        par_s = parent.copy()
        any_change = False
        for l in range(m):
            ok = key[l, send]
            oh = height[l, send] + weights
            orr = root[l, send]
            if key_major[l]:
                order = np.lexsort((oh, -ok, recv))
            else:
                order = np.lexsort((-ok, oh, recv))
            recv_sorted = recv[order]
            uniq, first = np.unique(recv_sorted, return_index=True)
            be = order[first]
            bk, bh, br, bp = ok[be], oh[be], orr[be], send[be]
            ck, ch = key[l, uniq], height[l, uniq]
            if key_major[l]:
                adopt = (bk > ck) | ((bk == ck) & (bh < ch))
            else:
                adopt = (bh < ch) | ((bh == ch) & (bk > ck))
            if adopt.any():
                tgt = uniq[adopt]
                key[l, tgt] = bk[adopt]
                height[l, tgt] = bh[adopt]
                root[l, tgt] = br[adopt]
                parent[l, tgt] = bp[adopt]
                any_change = True
        children_change = not np.array_equal(par_s, prev_parent)
        prev_parent = par_s
        if any_change or children_change:
            quiet = 0
        else:
            quiet += 1
            if quiet >= window:
                return key, root, height, parent, rounds, messages, True
    return key, root, height, parent, rounds, messages, False


def _ceil_log2(s):
    h = 0
    x = 1
    while x < s:
        x <<= 1
        h += 1
    return h


def _code_len(s, rank):
    if s < 2:
        return 0
    h = _ceil_log2(s)
    n_short = (1 << h) - s
    return h - 1 if rank < n_short else h


def _code_value(s, rank):
    h = _ceil_log2(s)
    n_short = (1 << h) - s
    return rank if rank < n_short else (n_short << 1) + (rank - n_short)


def _children_csr(par_l, n):
    order = np.argsort(par_l, kind="stable")
    order = order[par_l[order] >= 0]
    parents = par_l[order]
    start = np.zeros(n + 1, dtype=np.int64)
    np.add.at(start, parents + 1, 1)
    np.cumsum(start, out=start)
    rank = np.arange(order.size, dtype=np.int64) - start[parents]
    return start, order.astype(np.int64), rank, parents


def embed_forest(indptr, indices, weights, parent, root):
    """Coordinates for every (level, node); see numba_backend docstring."""
    m, n = parent.shape
    dims = np.zeros((m, n), dtype=np.int64)
    per_level = []
    for l in range(m):
        start, child_list, rank_of_pos, _ = _children_csr(parent[l], n)
        rank = np.zeros(n, dtype=np.int64)
        rank[child_list] = rank_of_pos
        sibs = np.zeros(n, dtype=np.int64)
        has_p = parent[l] >= 0
        sibs[has_p] = (start[parent[l, has_p] + 1] - start[parent[l, has_p]])
        bfs = list(np.flatnonzero(~has_p))
        dims[l, ~has_p] = 1
        head = 0
        order = list(bfs)
        while head < len(order):
            u = order[head]
            head += 1
            kids = child_list[start[u]:start[u + 1]]
            for v in kids:
                dims[l, v] = dims[l, u] + _code_len(int(sibs[v]), int(rank[v]))
            order.extend(kids.tolist())
        per_level.append((start, child_list, rank, sibs, order))

    off = np.zeros(m * n + 1, dtype=np.int64)
    np.cumsum(dims.reshape(-1), out=off[1:])
    val = np.zeros(int(off[-1]), dtype=np.float64)

    for l in range(m):
        start, child_list, rank, sibs, order = per_level[l]
        for u in order:
            base = l * n + u
            if parent[l, u] < 0:
                val[off[base]] = 0.0
                continue
            p = int(parent[l, u])
            w = _edge_weight(indptr, indices, weights, u, p)
            pb = l * n + p
            pvals = val[off[pb]:off[pb + 1]]
            out = np.where(pvals < 0.0, pvals - w, pvals + w)
            s = int(sibs[u])
            clen = _code_len(s, int(rank[u]))
            row = val[off[base]:off[base + 1]]
            row[:out.size] = out
            if clen:
                cv = _code_value(s, int(rank[u]))
                bits = (cv >> np.arange(clen - 1, -1, -1)) & 1
                row[out.size:] = np.where(bits == 1, w, -w)
    return off, val


def _edge_weight(indptr, indices, weights, u, v):
    lo, hi = int(indptr[u]), int(indptr[u + 1])
    i = lo + int(np.searchsorted(indices[lo:hi], v))
    return float(weights[i])


def _pad_coords(off, val):
    rows = off.size - 1
    dims = np.diff(off)
    width = int(dims.max()) if rows else 1
    mat = np.zeros((rows, width), dtype=np.float64)
    idx = np.repeat(np.arange(rows, dtype=np.int64), dims)
    col = np.arange(val.size, dtype=np.int64) - np.repeat(off[:-1], dims)
    mat[idx, col] = val
    return mat, dims, width


def pairwise_linf(off, val, ids):
    """Dense distance matrix over coordinate rows ``ids`` (global l*n+u)."""
    k = ids.size
    dims = (off[ids + 1] - off[ids]).astype(np.int64)
    width = int(dims.max()) if k else 1
    mat = np.zeros((k, width), dtype=np.float64)
    for i, r in enumerate(ids):
        mat[i, :dims[i]] = val[off[r]:off[r + 1]]
    out = np.zeros((k, k), dtype=np.float64)
    cols = np.arange(width)
    chunk = max(1, int(4_000_000 // max(1, k * width)))
    for i0 in range(0, k, chunk):
        i1 = min(k, i0 + chunk)
        diff = np.abs(mat[i0:i1, None, :] - mat[None, :, :])
        kk = np.minimum(dims[i0:i1, None], dims[None, :])
        np.copyto(diff, 0.0, where=cols[None, None, :] >= kk[:, :, None])
        out[i0:i1] = diff.max(axis=2)
    return out


def _linf_single(off, val, a, b):
    k = int(min(off[a + 1] - off[a], off[b + 1] - off[b]))
    da = val[off[a]:off[a] + k]
    db = val[off[b]:off[b] + k]
    return float(np.abs(da - db).max()) if k else 0.0


def _next_hop(indptr, indices, weights, root, off, val, dims, cmat, alive,
              v, t):
    """Vectorized greedy choice at v; same tie rules as the numba kernel
    (cost argmin, ties to smaller neighbor id then lower level)."""
    m, n = root.shape
    lo, hi = int(indptr[v]), int(indptr[v + 1])
    nbrs = indices[lo:hi].astype(np.int64)
    ws = weights[lo:hi]
    live = alive[nbrs]
    costs = np.full((nbrs.size, m), np.inf)
    width = cmat.shape[1]
    cols = np.arange(width)
    for l in range(m):
        rt = root[l, t]
        if root[l, v] != rt:
            continue
        iv, it = l * n + v, l * n + t
        dv = _linf_single(off, val, iv, it)
        elig = live & (root[l, nbrs] == rt)
        if not elig.any():
            continue
        iu = l * n + nbrs[elig]
        kk = np.minimum(dims[iu], dims[it])
        diff = np.abs(cmat[iu] - cmat[it][None, :])
        np.copyto(diff, 0.0, where=cols[None, :] >= kk[:, None])
        du = diff.max(axis=1)
        okp = du < dv
        rows = np.flatnonzero(elig)[okp]
        costs[rows, l] = ws[rows] + du[okp]
    flat = costs.ravel()
    j = int(np.argmin(flat)) if flat.size else 0
    if not flat.size or not np.isfinite(flat[j]):
        return -1, -1, 0.0
    return int(nbrs[j // m]), j % m, float(ws[j // m])


def trace_routes(indptr, indices, weights, root, off, val, src, dst,
                 alive, ttl, paths):
    """Greedy traces for each pair; see numba_backend docstring."""
    npairs = src.size
    outcome = np.empty(npairs, np.int8)
    length = np.zeros(npairs, np.float64)
    hops = np.zeros(npairs, np.int32)
    levels_used = np.zeros(npairs, np.uint64)
    cmat, dims, _ = _pad_coords(off, val)
    width = paths.shape[1]
    paths[:] = -1
    for i in range(npairs):
        s, d = int(src[i]), int(dst[i])
        cur = s
        if width > 0:
            paths[i, 0] = s
        if s == d:
            outcome[i] = DELIVERED
            continue
        out = TTL_EXCEEDED
        for hop in range(ttl):
            u, l, w = _next_hop(indptr, indices, weights, root, off, val,
                                dims, cmat, alive, cur, d)
            if u < 0:
                out = STUCK
                break
            length[i] += w
            hops[i] += 1
            levels_used[i] |= np.uint64(1) << np.uint64(l)
            cur = u
            if hop + 1 < width:
                paths[i, hop + 1] = cur
            if cur == d:
                out = DELIVERED
                break
        outcome[i] = out
    return outcome, length, hops, levels_used


def _greedy_record(indptr, indices, weights, root, off, val, dims, cmat,
                   alive, s, d, ttl):
    cur = s
    path = [s]
    bif = []
    dist = 0.0
    for _hop in range(ttl):
        u, l, w = _next_hop(indptr, indices, weights, root, off, val,
                            dims, cmat, alive, cur, d)
        if u < 0:
            return False, dist, path, bif
        dist += w
        if u != s:
            nh, _, _ = _next_hop(indptr, indices, weights, root, off, val,
                                 dims, cmat, alive, u, s)
            if nh != cur:
                bif.append((u, cur))
        path.append(u)
        cur = u
        if cur == d:
            return True, dist, path, bif
    return False, dist, path, bif


def _steered(indptr, indices, weights, root, off, val, dims, cmat, alive,
             s, d, ttl, bif):
    cur = s
    path = [s]
    dist = 0.0
    for _hop in range(ttl):
        nxt = -1
        w = 0.0
        for at, b in bif:
            if at != cur or not alive[b]:
                continue
            lo, hi = int(indptr[cur]), int(indptr[cur + 1])
            i = lo + int(np.searchsorted(indices[lo:hi], b))
            if i < hi and indices[i] == b:
                nxt, w = b, float(weights[i])
                break
        if nxt < 0:
            u, l, w2 = _next_hop(indptr, indices, weights, root, off, val,
                                 dims, cmat, alive, cur, d)
            if u < 0:
                return False, dist, path
            nxt, w = u, w2
        dist += w
        path.append(nxt)
        cur = nxt
        if cur == d:
            return True, dist, path
    return False, dist, path


def source_flows(indptr, indices, weights, root, off, val, src, dst,
                 alive, ttl):
    """Bidirectional source-aided flows; see numba_backend docstring."""
    nf = src.size
    ok = np.zeros(nf, np.int8)
    len_f = np.zeros(nf, np.float64)
    len_r = np.zeros(nf, np.float64)
    steady = np.zeros(nf, np.float64)
    bif_size = np.zeros(nf, np.int32)
    used_rev = np.zeros(nf, np.bool_)
    replay = np.ones(nf, np.bool_)
    cmat, dims, _ = _pad_coords(off, val)
    for i in range(nf):
        s, d = int(src[i]), int(dst[i])
        okf, df, pf, bf = _greedy_record(indptr, indices, weights, root, off,
                                         val, dims, cmat, alive, s, d, ttl)
        if not okf:
            ok[i] = 1
            continue
        okr, dr, pr, br = _greedy_record(indptr, indices, weights, root, off,
                                         val, dims, cmat, alive, d, s, ttl)
        if not okr:
            ok[i] = 2
            continue
        len_f[i] = df
        len_r[i] = dr
        bif_size[i] = len(br)
        if dr < df:
            used_rev[i] = True
            oks, ds, ps = _steered(indptr, indices, weights, root, off, val,
                                   dims, cmat, alive, s, d, ttl, br)
            if not oks:
                ok[i] = 3
                continue
            steady[i] = ds
            replay[i] = ps == pr[::-1]
        else:
            steady[i] = df
    return ok, len_f, len_r, steady, bif_size, used_rev, replay


def warmup():
    """No compilation needed; present for backend API parity."""
