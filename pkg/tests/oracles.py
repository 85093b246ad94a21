"""Independent reference implementations used to check the library.

Everything here is deliberately naive: discretized instant-by-instant
scoring, exhaustive assignment search, brute-force neighbor scans, and
two-pass statistics. None of it shares code with the package under test.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter

import numpy as np


# ---------------------------------------------------------------------------
# Instant-by-instant DER scoring on a fixed grid.


def discretized_der(
    reference: list[tuple[float, float, str]],
    hypothesis: list[tuple[float, float, str]],
    uem: list[tuple[float, float]],
    collar: float = 0.0,
    skip_overlap: bool = True,
    half_each_side: bool = True,
    step: float = 0.001,
) -> dict[str, float]:
    """Score by sampling the midpoint of every `step`-sized cell.

    Exact (up to float rounding) whenever all boundaries are multiples of
    `step`; intended for hand-built cases on a coarse grid.
    """
    lo = min(s for s, _ in uem)
    hi = max(e for _, e in uem)
    half = collar / 2.0 if half_each_side else collar
    boundaries = [t for s, e, _ in reference for t in (s, e)]

    def active(ann, t):
        return {label for s, e, label in ann if s <= t < e}

    conf = fa = miss = total = 0.0
    n = round((hi - lo) / step)
    for i in range(n):
        t = lo + (i + 0.5) * step
        if not any(s <= t < e for s, e in uem):
            continue
        if collar > 0 and any(abs(t - b) < half for b in boundaries):
            continue
        r = active(reference, t)
        if skip_overlap and len(r) >= 2:
            continue
        h = active(hypothesis, t)
        if not r and not h:
            continue
        total += len(r) * step
        conf += (min(len(r), len(h)) - len(r & h)) * step
        miss += max(0, len(r) - len(h)) * step
        fa += max(0, len(h) - len(r)) * step
    return {"confusion": conf, "fa": fa, "miss": miss, "total": total}


def overlap_duration(a: list[tuple[float, float]], b: list[tuple[float, float]]) -> float:
    return sum(
        max(0.0, min(e1, e2) - max(s1, s2)) for s1, e1 in a for s2, e2 in b
    )


def exhaustive_mapping(
    reference: list[tuple[float, float, str]],
    hypothesis: list[tuple[float, float, str]],
) -> dict[str, str]:
    """Best one-to-one hyp->ref map by trying every injection."""
    ref_labels = sorted({l for _, _, l in reference})
    hyp_labels = sorted({l for _, _, l in hypothesis})
    by_ref = {r: [(s, e) for s, e, l in reference if l == r] for r in ref_labels}
    by_hyp = {h: [(s, e) for s, e, l in hypothesis if l == h] for h in hyp_labels}

    best_score, best_map = -1.0, {}
    m = min(len(ref_labels), len(hyp_labels))
    for size in range(m + 1):
        for hyp_subset in itertools.permutations(hyp_labels, size):
            for ref_subset in itertools.permutations(ref_labels, size):
                mapping = dict(zip(hyp_subset, ref_subset))
                score = sum(
                    overlap_duration(by_hyp[h], by_ref[r]) for h, r in mapping.items()
                )
                if score > best_score + 1e-12:
                    best_score, best_map = score, mapping
    return {h: r for h, r in best_map.items() if overlap_duration(by_hyp[h], by_ref[r]) > 1e-9}


# ---------------------------------------------------------------------------
# Classifier oracles.


def knn_predict(
    stored: list[tuple[np.ndarray, str]], x: np.ndarray, k: int
) -> tuple[str, float, dict[str, float]]:
    """Brute-force cosine K-NN with the library's documented tie rules:
    neighbor ties at the boundary resolve by insertion order, vote ties by
    lexicographically smallest label."""
    distances = [1.0 - float(v @ x) for v, _ in stored]
    order = sorted(range(len(stored)), key=lambda i: (distances[i], i))
    kk = min(k, len(stored))
    votes = Counter(stored[i][1] for i in order[:kk])
    labels = sorted({label for _, label in stored})
    best = max(votes.values())
    label = min(l for l, c in votes.items() if c == best)
    posteriors = {l: votes.get(l, 0) / kk for l in labels}
    return label, votes[label] / kk, posteriors


def nc_centroids(samples: list[tuple[np.ndarray, str]]) -> dict[str, np.ndarray]:
    """Per-class mean vector renormalized to the unit sphere."""
    out = {}
    for label in sorted({l for _, l in samples}):
        vs = np.stack([v for v, l in samples if l == label])
        mean = vs.mean(axis=0)
        out[label] = mean / np.linalg.norm(mean)
    return out


def nc_predict(samples: list[tuple[np.ndarray, str]], x: np.ndarray) -> tuple[str, dict[str, float]]:
    cents = nc_centroids(samples)
    labels = sorted(cents)
    dists = np.array([1.0 - float(cents[l] @ x) for l in labels])
    logits = -dists - np.max(-dists)
    post = np.exp(logits) / np.exp(logits).sum()
    # Labels are sorted, so np.argmin's first-hit rule is the lexicographic tie rule.
    best = int(np.argmin(dists))
    return labels[best], dict(zip(labels, post.tolist()))


def gnb_two_pass(
    samples: list[tuple[np.ndarray, str]], var_smoothing: float
) -> tuple[dict[str, tuple[int, np.ndarray, np.ndarray]], float]:
    """Classic two-pass per-class moments plus the pooled smoothing term."""
    stats = {}
    for label in sorted({l for _, l in samples}):
        vs = np.stack([v for v, l in samples if l == label])
        mean = vs.mean(axis=0)
        var = ((vs - mean) ** 2).mean(axis=0)
        stats[label] = (len(vs), mean, var)
    allv = np.stack([v for v, _ in samples])
    pooled_var = ((allv - allv.mean(axis=0)) ** 2).mean(axis=0)
    return stats, var_smoothing * float(pooled_var.max())


def gnb_predict(
    samples: list[tuple[np.ndarray, str]],
    x: np.ndarray,
    var_smoothing: float,
    uniform_priors: bool = False,
) -> tuple[str, dict[str, float]]:
    stats, eps = gnb_two_pass(samples, var_smoothing)
    n_total = sum(n for n, _, _ in stats.values())
    labels = sorted(stats)
    joint = []
    for label in labels:
        n, mean, var = stats[label]
        smoothed = var + eps
        ll = float(np.sum(-0.5 * np.log(2.0 * math.pi * smoothed) - (x - mean) ** 2 / (2.0 * smoothed)))
        if not uniform_priors:
            ll += math.log(n / n_total)
        joint.append(ll)
    joint = np.array(joint)
    post = np.exp(joint - joint.max())
    post /= post.sum()
    return labels[int(np.argmax(post))], dict(zip(labels, post.tolist()))


# ---------------------------------------------------------------------------
# Integer-grid interval-set semantics for timeline algebra.


def cells(segments: list[tuple[int, int]]) -> set[int]:
    """Half-open integer cells covered by the segments."""
    out: set[int] = set()
    for a, b in segments:
        out.update(range(a, b))
    return out


def cells_to_segments(cell_set: set[int]) -> list[tuple[int, int]]:
    """Canonical disjoint segments back from an integer cell set."""
    out = []
    for _, group in itertools.groupby(enumerate(sorted(cell_set)), key=lambda p: p[1] - p[0]):
        g = [c for _, c in group]
        out.append((g[0], g[-1] + 1))
    return out
