"""Product-quantization dictionary: per-segment k-means sub-codebooks whose
Cartesian product forms K^M visual words, plus exact S-nearest product-word
enumeration via a multi-sequence heap merge (never materializes K^M words)."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .vecio import FeatureSet


@dataclass
class PqConfig:
    segments: int  # M
    words_per_segment: int  # K
    kmeans_iters: int = 25
    kmeans_seed: int = 0
    kmeans_restarts: int = 3

    def __post_init__(self):
        if self.segments < 1 or self.words_per_segment < 1:
            raise ValueError("segments and words_per_segment must be >= 1")
        if self.kmeans_iters < 1 or self.kmeans_restarts < 1:
            raise ValueError("kmeans_iters and kmeans_restarts must be >= 1")
        if self.words_per_segment ** self.segments > 2**63 - 1:
            raise ValueError("K^M does not fit in a 64-bit word id")


@dataclass
class PqCodebook:
    """M sub-codebooks of K centroids each, dimension D/M.

    Product word id w encodes sub-word ids (w_1..w_M) in mixed-radix base K
    with segment 1 most significant.
    """

    sub_codebooks: np.ndarray  # (M, K, D/M) float32
    config: PqConfig

    @property
    def dim(self) -> int:
        return self.sub_codebooks.shape[0] * self.sub_codebooks.shape[2]

    @property
    def word_count(self) -> int:
        return self.config.words_per_segment ** self.config.segments


def encode_word(sub_ids, k: int) -> int:
    """Mixed-radix encode (w_1..w_M) -> product word id."""
    wid = 0
    for w in sub_ids:
        wid = wid * k + int(w)
    return wid


def decode_word(wid: int, k: int, m: int) -> tuple[int, ...]:
    """Mixed-radix decode of a product word id into (w_1..w_M)."""
    if not 0 <= wid < k**m:
        raise ValueError(f"word id {wid} out of range [0, {k**m})")
    out = []
    for _ in range(m):
        out.append(wid % k)
        wid //= k
    return tuple(reversed(out))


def train(training: FeatureSet, cfg: PqConfig) -> PqCodebook:
    """Train per-segment sub-codebooks with restarted k-means++ Lloyd runs.

    Each sub-codebook is the best of kmeans_restarts runs by within-cluster
    sum of squares. Deterministic for a fixed seed.
    """
    m, k = cfg.segments, cfg.words_per_segment
    n, d = training.n, training.dim
    if d % m != 0:
        raise ValueError(f"dimension {d} not divisible by {m} segments")
    if n < k:
        raise ValueError(f"need at least {k} training vectors, got {n}")
    seg_dim = d // m
    rng = np.random.default_rng(cfg.kmeans_seed)
    sub = np.empty((m, k, seg_dim), dtype=np.float32)
    for s in range(m):
        pts = training.vectors[:, s * seg_dim : (s + 1) * seg_dim].astype(np.float64)
        best = None
        best_wcss = np.inf
        for _ in range(cfg.kmeans_restarts):
            centroids, wcss = _kmeans(pts, k, cfg.kmeans_iters, rng)
            if wcss < best_wcss:
                best, best_wcss = centroids, wcss
        sub[s] = best.astype(np.float32)
    return PqCodebook(sub_codebooks=sub, config=cfg)


def _kmeans(pts: np.ndarray, k: int, max_iters: int, rng) -> tuple[np.ndarray, float]:
    """One Lloyd run with k-means++ seeding; stops when assignments stabilize."""
    n = pts.shape[0]
    centroids = np.empty((k, pts.shape[1]))
    centroids[0] = pts[rng.integers(n)]
    d2 = _sq_dist_to(pts, centroids[0])
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centroids[j] = pts[idx]
        np.minimum(d2, _sq_dist_to(pts, centroids[j]), out=d2)

    assign = None
    for _ in range(max_iters):
        dists = _pairwise_sq_dists(pts, centroids)
        new_assign = dists.argmin(axis=1)
        if assign is not None and np.array_equal(assign, new_assign):
            break
        assign = new_assign
        mind = dists[np.arange(n), assign]
        for j in range(k):
            members = assign == j
            if members.any():
                centroids[j] = pts[members].mean(axis=0)
            else:
                # steal the point currently worst-represented
                centroids[j] = pts[int(mind.argmax())]
    dists = _pairwise_sq_dists(pts, centroids)
    wcss = float(dists.min(axis=1).sum())
    return centroids, wcss


def _sq_dist_to(pts: np.ndarray, c: np.ndarray) -> np.ndarray:
    diff = pts - c
    return np.einsum("ij,ij->i", diff, diff)


def _pairwise_sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between rows of x (n,d) and c (k,d)."""
    x = np.asarray(x, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    d = (x * x).sum(axis=1)[:, None] - 2.0 * (x @ c.T) + (c * c).sum(axis=1)[None, :]
    np.maximum(d, 0.0, out=d)
    return d


def segment_distances(x, cb: PqCodebook) -> np.ndarray:
    """Per-segment squared distances of one vector, shape (M, K)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cb.dim,):
        raise ValueError(f"vector dim {x.shape} does not match codebook dim {cb.dim}")
    m, k, seg_dim = cb.sub_codebooks.shape
    out = np.empty((m, k))
    for s in range(m):
        seg = x[s * seg_dim : (s + 1) * seg_dim]
        out[s] = _pairwise_sq_dists(seg[None, :], cb.sub_codebooks[s])[0]
    return out


def segment_distances_batch(xs: np.ndarray, cb: PqCodebook) -> np.ndarray:
    """Per-segment squared distances for a batch, shape (N, M, K)."""
    m, k, seg_dim = cb.sub_codebooks.shape
    n = xs.shape[0]
    out = np.empty((n, m, k))
    for s in range(m):
        seg = xs[:, s * seg_dim : (s + 1) * seg_dim]
        out[:, s, :] = _pairwise_sq_dists(seg, cb.sub_codebooks[s])
    return out


def assign(x, cb: PqCodebook) -> int:
    """Nearest product word: per-segment argmin, ties to the smaller sub-id."""
    dists = segment_distances(x, cb)
    return encode_word(dists.argmin(axis=1), cb.config.words_per_segment)


def nearest_words(x, cb: PqCodebook, count: int) -> list[tuple[int, float]]:
    """The `count` product words nearest to x, ascending by summed segment
    distance, ties broken by smaller product word id."""
    return _merge_nearest(segment_distances(x, cb), cb.config.words_per_segment, count)


def nearest_words_batch(xs: np.ndarray, cb: PqCodebook, count: int,
                        chunk: int = 4096) -> np.ndarray:
    """Word ids of the `count` nearest product words per row, shape (N, count)."""
    n = xs.shape[0]
    out = np.empty((n, count), dtype=np.int64)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        dists = segment_distances_batch(np.asarray(xs[lo:hi], dtype=np.float64), cb)
        for i in range(hi - lo):
            found = _merge_nearest(dists[i], cb.config.words_per_segment, count)
            out[lo + i] = [w for w, _ in found]
    return out


def _merge_nearest(dists: np.ndarray, k: int, count: int) -> list[tuple[int, float]]:
    """Multi-sequence heap merge over per-segment sorted distance lists.

    Explores product words in nondecreasing summed distance, so at most
    O(count * M) heap operations; K^M candidates are never enumerated.
    """
    m = dists.shape[0]
    if not 1 <= count <= k**m:
        raise ValueError(f"count must be in [1, {k**m}], got {count}")
    orders = np.argsort(dists, axis=1, kind="stable")
    sorted_d = np.take_along_axis(dists, orders, axis=1)

    def entry(pos: tuple[int, ...]):
        total = float(sum(sorted_d[s][p] for s, p in enumerate(pos)))
        wid = encode_word((orders[s][p] for s, p in enumerate(pos)), k)
        return (total, wid, pos)

    start = (0,) * m
    heap = [entry(start)]
    seen = {start}
    popped: list[tuple[float, int]] = []
    # keep popping past `count` while equal-distance candidates may remain,
    # so the (distance, word id) tie-break is globally correct
    while heap:
        if len(popped) >= count:
            kth = sorted(popped)[count - 1][0]
            if heap[0][0] > kth:
                break
        total, wid, pos = heapq.heappop(heap)
        popped.append((total, wid))
        for s in range(m):
            if pos[s] + 1 < k:
                nxt = pos[:s] + (pos[s] + 1,) + pos[s + 1 :]
                if nxt not in seen:
                    seen.add(nxt)
                    heapq.heappush(heap, entry(nxt))
    popped.sort()
    return [(wid, total) for total, wid in popped[:count]]


def reconstruct(wid: int, cb: PqCodebook) -> np.ndarray:
    """Concatenation of the M sub-centroids encoded by a product word id."""
    m, k, _ = cb.sub_codebooks.shape
    sub_ids = decode_word(wid, k, m)
    return np.concatenate([cb.sub_codebooks[s][w] for s, w in enumerate(sub_ids)])


def reconstruct_batch(wids: np.ndarray, cb: PqCodebook) -> np.ndarray:
    """Reconstructed centroids for an array of word ids, shape (len, D)."""
    m, k, seg_dim = cb.sub_codebooks.shape
    wids = np.asarray(wids, dtype=np.int64)
    out = np.empty((wids.size, m * seg_dim), dtype=np.float32)
    rem = wids.copy()
    for s in reversed(range(m)):
        out[:, s * seg_dim : (s + 1) * seg_dim] = cb.sub_codebooks[s][rem % k]
        rem //= k
    return out
