"""Dev probe: acceptance-critical numbers on real sizes (not shipped)."""
import sys
import time

import numpy as np

from pie_routing import graph as G
from pie_routing.kernels import get_backend
from pie_routing.seeds import rng_for, SALT_TAG, ELECTION_TAG, FAILURE_TAG, PAIRS_TAG

nb = get_backend("numba")
nb.warmup()


def build(g, m, seed):
    n = g.n
    salt = rng_for(seed, SALT_TAG).random(n)
    key = np.zeros((m, n))
    root = np.zeros((m, n), np.int32)
    h = np.zeros((m, n))
    key[0] = g.degrees() + salt
    root[0] = np.arange(n)
    root0 = int(np.argmax(key[0]))
    erng = rng_for(seed, ELECTION_TAG)
    draws = erng.random((max(m - 1, 0), n))
    for l in range(1, m):
        p = min(1.0, (2 ** l) / n)
        mask = draws[l - 1] < p
        if not mask.any():
            mask[root0] = True
        key[l] = np.where(mask, np.arange(n, dtype=float), -np.inf)
        root[l] = np.where(mask, np.arange(n), -1)
        h[l] = np.where(mask, 0.0, np.inf)
    km = np.zeros(m, bool)
    km[0] = True
    k, r, hh, par, rounds, msgs, conv = nb.tree_converge(
        g.indptr, g.indices, g.weights, key, root, h, km, 10000, 1)
    assert conv
    off, val = nb.embed_forest(g.indptr, g.indices, g.weights, par, r)
    return r, par, hh, off, val, rounds


def sample_pairs(n, count, seed, alive=None):
    rng = rng_for(seed, PAIRS_TAG)
    if alive is None:
        ids = np.arange(n, dtype=np.int64)
    else:
        ids = np.flatnonzero(alive)
    a = ids.size
    total = a * (a - 1)
    count = min(count, total)
    idx = rng.choice(total, size=count, replace=False)
    s = idx // (a - 1)
    rr = idx % (a - 1)
    d = rr + (rr >= s)
    return ids[s].astype(np.int32), ids[d].astype(np.int32)


def dg_for_pairs(g, src, dst):
    order = np.argsort(src, kind="stable")
    out = np.empty(src.size)
    i = 0
    while i < order.size:
        j = i
        s = src[order[i]]
        while j < order.size and src[order[j]] == s:
            j += 1
        dist, _ = nb.sssp(g.indptr, g.indices, g.weights, int(s))
        out[order[i:j]] = dist[dst[order[i:j]]]
        i = j
    return out


def stretch_run(n, m, seed, pairs, weighted=False):
    g = G.generate_glp(G.GlpParams(n=n), seed=seed)
    if weighted:
        g = G.assign_weights(g, G.WeightMode.UNIFORM_INT, seed)
    r, par, hh, off, val, rounds = build(g, m, seed)
    src, dst = sample_pairs(g.n, pairs, seed)
    alive = np.ones(g.n, bool)
    ttl = 4 * G.diameter_estimate(g) * (int(g.max_weight()) if weighted else 1)
    paths = np.empty((src.size, 1), np.int32)
    out, length, hops, lv = nb.trace_routes(
        g.indptr, g.indices, g.weights, r, off, val, src, dst, alive, ttl, paths)
    dg = dg_for_pairs(g, src, dst)
    st = length / dg
    return g, (r, off, val), dict(
        delivered=float((out == 0).mean()), ttl_exceeded=int((out == 2).sum()),
        mean=float(st.mean()), p90=float(np.quantile(st, 0.9)),
        max=float(st.max()), frac1=float((length == dg).mean()),
        lt13=float((st < 1.3).mean()), rounds=rounds)


t0 = time.time()
n = 10_000
for m in (2, 6):
    g, state, st = stretch_run(n, m, seed=1, pairs=10_000)
    print(f"m={m} unweighted: {st}  [{time.time()-t0:.1f}s]")

# weighted stretch + delivery
g, state, st = stretch_run(n, 6, seed=1, pairs=10_000, weighted=True)
print(f"m=6 weighted: {st}  [{time.time()-t0:.1f}s]")

# flows (criterion 6) on weighted graph
r, off, val = state
src, dst = sample_pairs(g.n, 10_000, 99)
alive = np.ones(g.n, bool)
ttl = 4 * G.diameter_estimate(g) * int(g.max_weight())
ok, lf, lr, steady, bifs, used, replay = nb.source_flows(
    g.indptr, g.indices, g.weights, r, off, val, src, dst, alive, ttl)
ben = lr < lf
print(f"flows: ok={np.bincount(ok.astype(int))}, benefiting={ben.mean():.3f}, "
      f"bif mean={bifs[ben].mean():.3f} max={bifs[ben].max()}, "
      f"replay_all={bool(replay.all())}, replay_frac={replay[used].mean():.4f}",
      f"[{time.time()-t0:.1f}s]")
print("  steady==min(lf,lr):", bool(np.all(steady == np.minimum(lf, lr))))

# failures (criterion 8): m=8, 10% failed
g = G.generate_glp(G.GlpParams(n=n), seed=2)
r, par, hh, off, val, rounds = build(g, 8, 2)
frng = rng_for(2, FAILURE_TAG)
failed = frng.choice(n, size=n // 10, replace=False)
alive = np.ones(n, bool)
alive[failed] = False
src, dst = sample_pairs(n, 10_000, 5, alive=alive)
ttl = 4 * G.diameter_estimate(g)
paths = np.empty((src.size, 1), np.int32)
out, length, hops, lv = nb.trace_routes(
    g.indptr, g.indices, g.weights, r, off, val, src, dst, alive, ttl, paths)
pie_ratio = float((out == 0).mean())
# baseline: canonical shortest-path next hop per destination, stale tables
order = np.argsort(dst, kind="stable")
base_ok = np.zeros(src.size, bool)
i = 0
while i < order.size:
    j = i
    d = dst[order[i]]
    while j < order.size and dst[order[j]] == d:
        j += 1
    dist, parent = nb.sssp(g.indptr, g.indices, g.weights, int(d))
    for k in order[i:j]:
        cur = src[k]
        okp = True
        while cur != d:
            cur = parent[cur]
            if cur < 0 or (cur != d and not alive[cur]):
                okp = False
                break
        base_ok[k] = okp
    i = j
base_ratio = float(base_ok.mean())
print(f"failures@10% m=8: pie={pie_ratio:.4f} base={base_ratio:.4f} "
      f"fail_ratio={(1-pie_ratio)/(1-base_ratio):.3f}  [{time.time()-t0:.1f}s]")

# dims scaling (criterion 7)
ratios = []
for e in range(10, 15):
    nn = 2 ** e
    g = G.generate_glp(G.GlpParams(n=nn), seed=3)
    m = max(1, nn.bit_length() - 1 - 7)
    r, par, hh, off, val, rounds = build(g, m, 3)
    dims_total = np.diff(off).reshape(m, nn).sum(axis=0)
    ratio = dims_total.max() / (2 + np.log10(nn)) ** 3
    ratios.append(ratio)
    print(f"n=2^{e} m={m}: dims max={dims_total.max()} mean={dims_total.mean():.1f} "
          f"ratio={ratio:.3f}  [{time.time()-t0:.1f}s]")
print("band factor:", max(ratios) / min(ratios))
print("TOTAL", time.time() - t0)
