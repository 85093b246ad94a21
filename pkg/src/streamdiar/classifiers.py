"""Incremental classifiers over unit-vector embeddings.

Three classifiers share one interface: k-nearest-neighbors (cosine
metric), Gaussian naive Bayes (max-likelihood with variance smoothing),
and nearest centroid (cosine metric). Each supports `fit`, `partial_fit`
(sufficient-statistic update equivalent to refitting on everything seen),
and probabilistic `predict`.

Ties anywhere (equal distances, equal votes, equal likelihoods) resolve
to the lexicographically smallest class label.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import cosine_distance  # noqa: F401  (re-exported metric)


class SampleOrigin(Enum):
    ENROLLMENT = "enrollment"
    PSEUDO = "pseudo"


@dataclass(frozen=True, eq=False)
class LabeledSample:
    """One training vector with its class label.

    `origin` records whether the label came from enrollment ground truth or
    from the model's own prediction; both carry full weight in training.
    """

    vector: np.ndarray
    label: str
    origin: SampleOrigin = SampleOrigin.ENROLLMENT


@dataclass(frozen=True)
class ClassifierConfig:
    """Settings for one classifier instance.

    kind: "knn", "gnb", or "nc". `k` applies to knn only, `var_smoothing`
    and `uniform_priors` to gnb only. The metric is cosine throughout.
    """

    kind: str
    k: int = 3
    var_smoothing: float = 0.1
    uniform_priors: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("knn", "gnb", "nc"):
            raise ValueError(f"unknown classifier kind {self.kind!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.var_smoothing < 0:
            raise ValueError("var_smoothing must be >= 0")


@dataclass(frozen=True)
class Prediction:
    """A predicted label with its posterior and the full posterior map."""

    label: str
    score: float
    posteriors: Mapping[str, float]


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max()
    e = np.exp(shifted)
    return e / e.sum()


class _Classifier:
    """Shared plumbing: class bookkeeping and batch prediction."""

    def __init__(self) -> None:
        self._labels: list[str] = []
        self.dimension: int | None = None

    @property
    def classes(self) -> list[str]:
        return list(self._labels)

    def _check_batch(self, samples: Sequence[LabeledSample]) -> None:
        for s in samples:
            if self.dimension is None:
                self.dimension = int(s.vector.shape[0])
            elif s.vector.shape[0] != self.dimension:
                raise ValueError(
                    f"dimension mismatch: expected {self.dimension}, got {s.vector.shape[0]}"
                )

    def _check_vector(self, x: np.ndarray) -> np.ndarray:
        if not self._labels:
            raise ValueError("classifier has not been fitted")
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dimension,):
            raise ValueError(f"dimension mismatch: expected ({self.dimension},), got {x.shape}")
        return x

    def fit(self, samples: Sequence[LabeledSample]) -> "_Classifier":
        if not samples:
            raise ValueError("cannot fit on an empty sample set")
        if self._labels:
            raise ValueError("already fitted; use partial_fit for updates")
        return self.partial_fit(samples)

    def partial_fit(self, samples: Sequence[LabeledSample]) -> "_Classifier":
        raise NotImplementedError

    def predict(self, x: np.ndarray) -> Prediction:
        raise NotImplementedError

    def predict_batch(self, frames: Iterable) -> list[Prediction]:
        """Predict each frame (or raw vector) in order; never mutates state."""
        out = []
        for f in frames:
            vec = getattr(f, "vector", f)
            out.append(self.predict(vec))
        return out

    def _finish(self, log_scores: np.ndarray) -> Prediction:
        posteriors = _softmax(log_scores)
        best = int(np.argmax(posteriors))
        post_map = {label: float(p) for label, p in zip(self._labels, posteriors)}
        return Prediction(self._labels[best], float(posteriors[best]), post_map)


class NearestCentroid(_Classifier):
    """Per-class running vector sums; centroid = renormalized class mean.

    Posteriors are a softmax over negative cosine distances to the
    centroids (temperature 1).
    """

    def __init__(self) -> None:
        super().__init__()
        self._sums: np.ndarray | None = None  # (C, d)
        self._counts: np.ndarray | None = None  # (C,)
        self._centroids: np.ndarray | None = None

    def partial_fit(self, samples: Sequence[LabeledSample]) -> "NearestCentroid":
        self._check_batch(samples)
        for s in samples:
            if s.label not in self._labels:
                self._insert_class(s.label)
            idx = self._labels.index(s.label)
            self._sums[idx] += s.vector
            self._counts[idx] += 1
        self._centroids = None
        return self

    def _insert_class(self, label: str) -> None:
        pos = bisect_left(self._labels, label)
        self._labels.insert(pos, label)
        zero = np.zeros((1, self.dimension))
        if self._sums is None:
            self._sums = zero
            self._counts = np.zeros(1)
        else:
            self._sums = np.insert(self._sums, pos, 0.0, axis=0)
            self._counts = np.insert(self._counts, pos, 0.0)

    def centroids(self) -> np.ndarray:
        """(C, d) matrix of unit-norm class centroids, rows in class order."""
        if self._centroids is None:
            means = self._sums / self._counts[:, None]
            norms = np.linalg.norm(means, axis=1, keepdims=True)
            if np.any(norms <= 1e-12):
                raise ValueError("a class centroid has near-zero norm")
            self._centroids = means / norms
        return self._centroids

    def class_sum(self, label: str) -> tuple[np.ndarray, int]:
        idx = self._labels.index(label)
        return self._sums[idx].copy(), int(self._counts[idx])

    def predict(self, x: np.ndarray) -> Prediction:
        x = self._check_vector(x)
        distances = 1.0 - self.centroids() @ x
        return self._finish(-distances)


class KNearestNeighbors(_Classifier):
    """Stores every sample; votes among the k nearest by cosine distance.

    Distance ties at the k-th boundary keep insertion order; the class
    posterior is its vote share among the k (or fewer) neighbors used.
    """

    def __init__(self, k: int = 3) -> None:
        super().__init__()
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self._vectors: list[np.ndarray] = []
        self._sample_labels: list[str] = []
        self._matrix: np.ndarray | None = None
        self._label_idx: np.ndarray | None = None

    def partial_fit(self, samples: Sequence[LabeledSample]) -> "KNearestNeighbors":
        self._check_batch(samples)
        for s in samples:
            if s.label not in self._labels:
                self._labels.append(s.label)
                self._labels.sort()
                self._label_idx = None
            self._vectors.append(np.asarray(s.vector, dtype=np.float64))
            self._sample_labels.append(s.label)
        self._matrix = None
        return self

    def __len__(self) -> int:
        return len(self._vectors)

    def _stacked(self) -> tuple[np.ndarray, np.ndarray]:
        if self._matrix is None:
            self._matrix = np.vstack(self._vectors)
            self._label_idx = None
        if self._label_idx is None:
            order = {label: i for i, label in enumerate(self._labels)}
            self._label_idx = np.array([order[lab] for lab in self._sample_labels])
        return self._matrix, self._label_idx

    def predict(self, x: np.ndarray) -> Prediction:
        x = self._check_vector(x)
        matrix, label_idx = self._stacked()
        distances = 1.0 - matrix @ x
        k = min(self.k, len(distances))
        # Stable sort keeps insertion order among equal distances.
        nearest = np.argsort(distances, kind="stable")[:k]
        votes = np.bincount(label_idx[nearest], minlength=len(self._labels))
        posteriors = votes / k
        best = int(np.argmax(posteriors))
        post_map = {label: float(p) for label, p in zip(self._labels, posteriors)}
        return Prediction(self._labels[best], float(posteriors[best]), post_map)


class GaussianNaiveBayes(_Classifier):
    """Per-class, per-feature Gaussian moments with variance smoothing.

    Class-conditional variances get `var_smoothing` times the largest
    pooled per-feature variance added, so single-sample classes stay
    well-defined. Moments update in one pass via the parallel
    mean/M2-combine rule, numerically equivalent to a batch refit.
    """

    def __init__(self, var_smoothing: float = 0.1, uniform_priors: bool = False) -> None:
        super().__init__()
        if var_smoothing < 0:
            raise ValueError("var_smoothing must be >= 0")
        self.var_smoothing = var_smoothing
        self.uniform_priors = uniform_priors
        self._counts: np.ndarray | None = None  # (C,)
        self._means: np.ndarray | None = None  # (C, d)
        self._m2: np.ndarray | None = None  # (C, d)
        self._global_n: float = 0.0
        self._global_mean: np.ndarray | None = None
        self._global_m2: np.ndarray | None = None

    @staticmethod
    def _combine(
        n1: float, mean1: np.ndarray, m2_1: np.ndarray, n2: float, mean2: np.ndarray, m2_2: np.ndarray
    ) -> tuple[float, np.ndarray, np.ndarray]:
        n = n1 + n2
        delta = mean2 - mean1
        mean = mean1 + delta * (n2 / n)
        m2 = m2_1 + m2_2 + delta * delta * (n1 * n2 / n)
        return n, mean, m2

    def partial_fit(self, samples: Sequence[LabeledSample]) -> "GaussianNaiveBayes":
        self._check_batch(samples)
        groups: dict[str, list[np.ndarray]] = {}
        for s in samples:
            groups.setdefault(s.label, []).append(np.asarray(s.vector, dtype=np.float64))

        for label in sorted(groups):
            batch = np.vstack(groups[label])
            n_b = float(batch.shape[0])
            mean_b = batch.mean(axis=0)
            m2_b = ((batch - mean_b) ** 2).sum(axis=0)
            if label not in self._labels:
                self._insert_class(label)
            idx = self._labels.index(label)
            n, mean, m2 = self._combine(
                float(self._counts[idx]), self._means[idx], self._m2[idx], n_b, mean_b, m2_b
            )
            self._counts[idx] = n
            self._means[idx] = mean
            self._m2[idx] = m2

        all_vecs = np.vstack([np.asarray(s.vector, dtype=np.float64) for s in samples])
        n_b = float(all_vecs.shape[0])
        mean_b = all_vecs.mean(axis=0)
        m2_b = ((all_vecs - mean_b) ** 2).sum(axis=0)
        if self._global_mean is None:
            self._global_n, self._global_mean, self._global_m2 = n_b, mean_b, m2_b
        else:
            self._global_n, self._global_mean, self._global_m2 = self._combine(
                self._global_n, self._global_mean, self._global_m2, n_b, mean_b, m2_b
            )
        return self

    def _insert_class(self, label: str) -> None:
        pos = bisect_left(self._labels, label)
        self._labels.insert(pos, label)
        if self._counts is None:
            self._counts = np.zeros(1)
            self._means = np.zeros((1, self.dimension))
            self._m2 = np.zeros((1, self.dimension))
        else:
            self._counts = np.insert(self._counts, pos, 0.0)
            self._means = np.insert(self._means, pos, 0.0, axis=0)
            self._m2 = np.insert(self._m2, pos, 0.0, axis=0)

    def moments(self, label: str) -> tuple[float, np.ndarray, np.ndarray]:
        """(count, mean, sum-of-squared-deviations) for one class."""
        idx = self._labels.index(label)
        return float(self._counts[idx]), self._means[idx].copy(), self._m2[idx].copy()

    def smoothing_term(self) -> float:
        """var_smoothing times the largest pooled per-feature variance."""
        if self._global_mean is None:
            raise ValueError("classifier has not been fitted")
        return self.var_smoothing * float((self._global_m2 / self._global_n).max())

    def _log_joint(self, x: np.ndarray) -> np.ndarray:
        variances = self._m2 / self._counts[:, None] + self.smoothing_term()
        if np.any(variances <= 0):
            raise ValueError("zero class variance; increase var_smoothing")
        log_lik = -0.5 * (np.log(2.0 * np.pi * variances) + (x - self._means) ** 2 / variances)
        log_lik = log_lik.sum(axis=1)
        if self.uniform_priors:
            return log_lik
        return log_lik + np.log(self._counts / self._counts.sum())

    def predict(self, x: np.ndarray) -> Prediction:
        x = self._check_vector(x)
        return self._finish(self._log_joint(x))


def fit(config: ClassifierConfig, samples: Sequence[LabeledSample]) -> _Classifier:
    """Build the configured classifier and fit it on `samples`."""
    if config.kind == "nc":
        model: _Classifier = NearestCentroid()
    elif config.kind == "knn":
        model = KNearestNeighbors(k=config.k)
    else:
        model = GaussianNaiveBayes(
            var_smoothing=config.var_smoothing, uniform_priors=config.uniform_priors
        )
    return model.fit(samples)
