"""Independent reference implementations used to freeze expected values."""

import itertools
import math

import numpy as np


def floyd_warshall(g) -> np.ndarray:
    n = g.num_nodes
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0)
    for u, v in g.edge_list():
        d[u, v] = d[v, u] = 1
    for k in range(n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return d


def cos01(a, b) -> float:
    """Rescaled cosine written out element by element."""
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0 or nb == 0:
        return 0.5
    return (max(-1.0, min(1.0, dot / (na * nb))) + 1) / 2


def exhaustive_top_k(target, candidates, z, k) -> list[int]:
    """Subset of size min(k, |C|) maximizing the summed similarity.

    Among optimal subsets the lexicographically smallest sorted index tuple
    wins (lower index breaks ties). Sums use fsum, so equal multisets of
    similarities compare equal.
    """
    cands = sorted(int(c) for c in candidates)
    k = min(k, len(cands))
    if k <= 0:
        return []
    sim = {c: cos01(z[target], z[c]) for c in cands}
    best, best_key = None, None
    for subset in itertools.combinations(cands, k):
        key = math.fsum(sim[c] for c in subset)
        if best is None or key > best_key:
            best, best_key = subset, key
    return list(best)


def loop_scores(cands, z, k_p, k_t, tau):
    """Per-target scores with scalar loops only."""
    out = []
    for i, t in enumerate(cands.targets.tolist()):
        picked = set()
        for pool, k in ((cands.cp[i], k_p), (cands.ct[i], k_t)):
            ranked = sorted(pool.tolist(), key=lambda c: (-cos01(z[t], z[c]), c))
            picked.update(ranked[:k])
        if not picked:
            out.append(0.0)
            continue
        mean = sum(cos01(z[t], z[c]) for c in sorted(picked)) / len(picked)
        out.append(mean ** (1 / tau))
    return out
