"""Class balancing, logistic regression and cross-validated F1 evaluation."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .features import FeaturePipeline, FeatureVector
from .lexicon import ALL_LABELS, Trait

log = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1


class InsufficientDataError(ValueError):
    pass


def subseed(seed: int, name: str) -> int:
    """Derive a named, reproducible child seed from the run seed."""
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


# -- sampling ---------------------------------------------------------------

def _class_indices(labels) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(labels).astype(bool)
    pos, neg = np.flatnonzero(y), np.flatnonzero(~y)
    if len(pos) == 0 or len(neg) == 0:
        raise InsufficientDataError("both classes must be present to rebalance")
    return pos, neg


def undersample(labels, seed: int) -> np.ndarray:
    """Indices of a class-balanced subset: the majority class is cut to minority size."""
    pos, neg = _class_indices(labels)
    rng = np.random.default_rng(seed)
    small, big = (pos, neg) if len(pos) <= len(neg) else (neg, pos)
    kept = rng.choice(big, size=len(small), replace=False)
    return np.sort(np.concatenate([small, kept]))


def oversample(labels, seed: int) -> np.ndarray:
    """Indices with minority examples duplicated (drawn with replacement) up to majority size."""
    pos, neg = _class_indices(labels)
    rng = np.random.default_rng(seed)
    small, big = (pos, neg) if len(pos) <= len(neg) else (neg, pos)
    extra = rng.choice(small, size=len(big) - len(small), replace=True)
    return np.sort(np.concatenate([pos, neg, extra]))


def resample(labels, mode: str, seed: int) -> np.ndarray:
    if mode == "none":
        return np.arange(len(labels))
    if mode == "under":
        return undersample(labels, seed)
    if mode == "over":
        return oversample(labels, seed)
    raise ValueError(f"unknown sampling mode {mode!r}")


# -- logistic regression ----------------------------------------------------

@dataclass
class LogRegConfig:
    l2: Optional[float] = None  # None means 1 / n_train
    max_iter: int = 2000
    tol: float = 1e-6
    seed: int = 0


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    scale: np.ndarray
    schema: tuple = ()
    config: LogRegConfig = field(default_factory=LogRegConfig)
    n_iter: int = 0
    converged: bool = True

    def decision_function(self, X) -> np.ndarray:
        v = self.weights / self.scale
        return np.asarray(X @ v).ravel() - float(self.mean @ v) + self.bias

    def to_json(self) -> str:
        doc = {
            "format_version": MODEL_FORMAT_VERSION,
            "schema": list(self.schema),
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "config": asdict(self.config),
            "seed": self.config.seed,
            "n_iter": self.n_iter,
            "converged": self.converged,
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "LogRegModel":
        doc = json.loads(text)
        if doc.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format {doc.get('format_version')!r}")
        return cls(
            weights=np.array(doc["weights"], dtype=float),
            bias=float(doc["bias"]),
            mean=np.array(doc["mean"], dtype=float),
            scale=np.array(doc["scale"], dtype=float),
            schema=tuple(doc["schema"]),
            config=LogRegConfig(**doc["config"]),
            n_iter=doc["n_iter"],
            converged=doc["converged"],
        )


def column_stats(X) -> tuple[np.ndarray, np.ndarray]:
    """Column mean and population SD; constant columns get SD 1."""
    if sp.issparse(X):
        mean = np.asarray(X.mean(axis=0)).ravel()
        sq = np.asarray(X.multiply(X).mean(axis=0)).ravel()
        var = np.maximum(sq - mean**2, 0.0)
    else:
        X = np.asarray(X, dtype=float)
        mean = X.mean(axis=0)
        var = X.var(axis=0)
    scale = np.sqrt(var)
    scale[scale < 1e-12] = 1.0
    return mean, scale


def loss_and_grad(w, b, X, y, l2, mean, scale):
    """Mean negative log-likelihood + (l2/2)|w|^2 on standardized features.

    Standardization ``(x - mean) / scale`` is applied implicitly, so sparse
    inputs stay sparse.
    """
    v = w / scale
    z = np.asarray(X @ v).ravel() - mean @ v + b
    n = len(y)
    loss = np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w)
    r = (_sigmoid(z) - y) / n
    g_raw = np.asarray(X.T @ r).ravel() - mean * r.sum()
    gw = g_raw / scale + l2 * w
    gb = r.sum()
    return float(loss), gw, float(gb)


def _sigmoid(z):
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def train_logistic(X, y, config: Optional[LogRegConfig] = None, schema: Sequence[str] = ()) -> LogRegModel:
    """Fit L2-regularized logistic regression by full-batch gradient descent.

    Each step moves along the negative gradient; the step length starts from
    a Barzilai-Borwein estimate and is halved until the Armijo condition
    holds. Iteration stops when the largest gradient entry drops below
    ``config.tol`` or after ``config.max_iter`` steps. Weights start at zero.
    """
    config = config or LogRegConfig()
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=float)
        finite = np.all(np.isfinite(X.data))
    else:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        finite = np.all(np.isfinite(X))
    if not finite:
        raise ValueError("non-finite feature values")
    y = np.asarray(y, dtype=float)
    if X.shape[0] != len(y):
        raise ValueError("feature rows and labels differ in length")
    if not (y.any() and (1 - y).any()):
        raise InsufficientDataError("training data needs both classes")
    n, d = X.shape
    l2 = 1.0 / n if config.l2 is None else config.l2
    mean, scale = column_stats(X)

    w = np.zeros(d)
    b = 0.0
    f, gw, gb = loss_and_grad(w, b, X, y, l2, mean, scale)
    step = 1.0
    prev = None
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        gmax = max(np.max(np.abs(gw), initial=0.0), abs(gb))
        if gmax < config.tol:
            converged = True
            it -= 1
            break
        if prev is not None:
            dw, db, dgw, dgb = w - prev[0], b - prev[1], gw - prev[2], gb - prev[3]
            sy = dw @ dgw + db * dgb
            if sy > 0:
                step = float(np.clip((dw @ dw + db * db) / sy, 1e-10, 1e10))
        gg = gw @ gw + gb * gb
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            f_new, gw_new, gb_new = loss_and_grad(w_new, b_new, X, y, l2, mean, scale)
            if f_new <= f - 1e-4 * step * gg or step < 1e-14:
                break
            step *= 0.5
        prev = (w, b, gw, gb)
        w, b, f, gw, gb = w_new, b_new, f_new, gw_new, gb_new
    else:
        gmax = max(np.max(np.abs(gw), initial=0.0), abs(gb))
        converged = gmax < config.tol
    return LogRegModel(w, float(b), mean, scale, tuple(schema), config, it, converged)


def predict_proba(model: LogRegModel, features, schema: Optional[Sequence[str]] = None) -> np.ndarray:
    if isinstance(features, FeatureVector):
        schema = features.schema
        features = features.values[None, :]
    if schema is not None and model.schema and tuple(schema) != tuple(model.schema):
        raise ValueError("feature schema does not match the model")
    if not sp.issparse(features):
        features = np.atleast_2d(np.asarray(features, dtype=float))
    if features.shape[1] != len(model.weights):
        raise ValueError(f"expected {len(model.weights)} features, got {features.shape[1]}")
    return _sigmoid(model.decision_function(features))


def predict(model: LogRegModel, features, schema=None, threshold: float = 0.5) -> np.ndarray:
    return (predict_proba(model, features, schema) >= threshold).astype(int)


def f1_score(predictions, gold, average: str = "binary") -> float:
    """Positive-class F1 (``average="binary"``) or the mean of both classes' F1."""
    p = np.asarray(predictions).astype(bool)
    g = np.asarray(gold).astype(bool)
    if p.shape != g.shape:
        raise ValueError("predictions and gold differ in length")
    if average == "macro":
        return 0.5 * (f1_score(p, g) + f1_score(~p, ~g))
    if average != "binary":
        raise ValueError(f"unknown average {average!r}")
    tp = np.sum(p & g)
    denom = 2 * tp + np.sum(p & ~g) + np.sum(~p & g)
    return float(2 * tp / denom) if denom else 0.0


# -- cross-validation -------------------------------------------------------

def stratified_folds(labels, k: int, seed: int) -> list[np.ndarray]:
    """Test indices for ``k`` stratified folds; every index lands in exactly one fold."""
    y = np.asarray(labels).astype(bool)
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(np.flatnonzero(y)), rng.permutation(np.flatnonzero(~y))])
    assign = np.empty(len(y), dtype=int)
    assign[order] = np.arange(len(y)) % k
    return [np.flatnonzero(assign == f) for f in range(k)]


@dataclass
class EvalReport:
    method: str
    sampling: str
    seed: int
    k: int
    fold_f1: dict = field(default_factory=dict)   # trait value -> list of k fold scores
    skipped: dict = field(default_factory=dict)   # trait value -> reason

    @property
    def traits(self) -> list[str]:
        return list(self.fold_f1)

    @property
    def mean_f1(self) -> dict:
        return {t: float(np.mean(v)) for t, v in self.fold_f1.items()}

    @property
    def average(self) -> float:
        means = list(self.mean_f1.values())
        return float(np.mean(means)) if means else float("nan")

    def merge(self, other: "EvalReport") -> "EvalReport":
        if (self.method, self.sampling, self.seed, self.k) != (other.method, other.sampling, other.seed, other.k):
            raise ValueError("cannot merge reports of different runs")
        return EvalReport(self.method, self.sampling, self.seed, self.k,
                          {**self.fold_f1, **other.fold_f1}, {**self.skipped, **other.skipped})

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "trait", "fold", "f1"])
        for trait, scores in self.fold_f1.items():
            for i, s in enumerate(scores):
                w.writerow([self.method, trait, i, f"{s:.6f}"])
            w.writerow([self.method, trait, "mean", f"{np.mean(scores):.6f}"])
        for trait, reason in self.skipped.items():
            w.writerow([self.method, trait, "skipped", reason])
        w.writerow([self.method, "average", "mean", f"{self.average:.6f}"])
        return buf.getvalue()


PipelineFactory = Callable[[], FeaturePipeline]


def _labels_for(documents, trait: Trait) -> np.ndarray:
    return np.array([trait in d.labels for d in documents], dtype=int)


def cross_validate(
    documents,
    trait: Trait,
    pipeline: Union[FeaturePipeline, PipelineFactory],
    k: int = 10,
    sampling: str = "none",
    seed: int = 0,
    config: Optional[LogRegConfig] = None,
    average: str = "binary",
    method: Optional[str] = None,
) -> EvalReport:
    """Stratified k-fold F1 of a one-vs-rest classifier for ``trait``.

    Per fold, the pipeline is fitted and the training split rebalanced using
    the training split only; F1 is measured on the untouched test split.
    Fold assignment depends only on ``seed`` and the trait, so different
    pipelines see identical folds.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    y = _labels_for(documents, trait)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos < k or n_neg < k:
        raise InsufficientDataError(
            f"trait {trait.value}: {n_pos} positive / {n_neg} negative documents, need {k} of each"
        )
    make = pipeline if callable(pipeline) and not isinstance(pipeline, FeaturePipeline) else (lambda: pipeline)
    config = config or LogRegConfig(seed=seed)
    folds = stratified_folds(y, k, subseed(seed, f"folds:{trait.value}"))
    scores = []
    name = method
    for f, test_idx in enumerate(folds):
        train_mask = np.ones(len(y), dtype=bool)
        train_mask[test_idx] = False
        train_idx = np.flatnonzero(train_mask)
        pipe = make()
        name = name or pipe.name
        train_docs = [documents[i] for i in train_idx]
        pipe.fit(train_docs)
        pick = resample(y[train_idx], sampling, subseed(seed, f"sampling:{trait.value}:{f}"))
        X_train = pipe.transform([train_docs[i] for i in pick])
        model = train_logistic(X_train, y[train_idx][pick], config)
        X_test = pipe.transform([documents[i] for i in test_idx])
        scores.append(f1_score(predict(model, X_test), y[test_idx], average=average))
    return EvalReport(name, sampling, seed, k, {trait.value: scores})


def evaluate(
    documents,
    pipeline: Union[FeaturePipeline, PipelineFactory],
    traits: Sequence[Trait] = ALL_LABELS,
    **kwargs,
) -> EvalReport:
    """Cross-validate every trait; traits with too little data are skipped and recorded."""
    report = None
    skipped = {}
    for trait in traits:
        try:
            r = cross_validate(documents, trait, pipeline, **kwargs)
        except InsufficientDataError as exc:
            log.warning("skipping %s", exc)
            skipped[trait.value] = str(exc)
            continue
        report = r if report is None else report.merge(r)
    if report is None:
        name = kwargs.get("method") or (pipeline.name if isinstance(pipeline, FeaturePipeline) else pipeline().name)
        report = EvalReport(name, kwargs.get("sampling", "none"), kwargs.get("seed", 0), kwargs.get("k", 10))
    report.skipped.update(skipped)
    return report
