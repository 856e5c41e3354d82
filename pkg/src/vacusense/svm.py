"""Soft-margin Gaussian-kernel SVM trained with an in-repo SMO-style solver.

The dual problem is solved by most-violating-pair coordinate updates on the
signed variables b_i = y_i * alpha_i (box [A_i, B_i], sum-to-zero constraint),
which keeps the equality constraint satisfied exactly at every step. Features
are standardized with training-set statistics before the kernel is applied so
that a single kernel width is meaningful across both features.

``GaussianSvmClassifier`` exposes the scikit-learn estimator API (fit /
predict / decision_function / get_params) and produces an immutable
``SvmModel`` artifact that serializes to versioned JSON.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import InvalidInputError, InvalidParameterError, TrainingError
from .features import ContactLabel, FeatureVector, LabeledSample, features_matrix
from .validation import as_feature_matrix

MODEL_FORMAT = "vacusense.svm-model"
MODEL_FORMAT_VERSION = 1

_BOUND_SNAP = 1e-12


def gaussian_kernel(a, b, gamma: float) -> float:
    """exp(-gamma * ||a - b||^2) for a single pair of feature vectors."""
    if gamma <= 0.0:
        raise InvalidParameterError(f"gamma must be > 0, got {gamma}")
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return float(np.exp(-gamma * np.dot(diff, diff)))


def kernel_matrix(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """Gaussian kernel matrix between row sets A (n, d) and B (m, d)."""
    if gamma <= 0.0:
        raise InvalidParameterError(f"gamma must be > 0, got {gamma}")
    sq = (
        np.sum(A**2, axis=1)[:, None]
        + np.sum(B**2, axis=1)[None, :]
        - 2.0 * A @ B.T
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


def median_heuristic_gamma(X_scaled: np.ndarray, y: np.ndarray | None = None) -> float:
    """gamma = 1 / (2 * median(pairwise distance)^2) on scaled features.

    When labels are supplied the median runs over cross-class pairs only.
    On strongly bimodal data the all-pairs median collapses to the
    within-cluster noise scale, which turns the kernel into a near-diagonal
    matrix that memorizes the training set; the cross-class median keeps the
    kernel width at the scale that separates the classes.
    """
    n = X_scaled.shape[0]
    if n < 2:
        return 1.0
    diffs = X_scaled[:, None, :] - X_scaled[None, :, :]
    dists = np.sqrt(np.sum(diffs**2, axis=-1))
    if y is not None:
        y = np.asarray(y)
        mask = y[:, None] != y[None, :]
        pool = dists[mask]
    else:
        pool = dists[np.triu_indices(n, k=1)]
    med = float(np.median(pool)) if pool.size else 0.0
    if med <= 0.0:
        return 1.0
    return 1.0 / (2.0 * med * med)


@dataclass(frozen=True)
class FeatureScaler:
    """Per-feature standardization (mean, std) fitted on the training set."""

    mean: tuple[float, float]
    std: tuple[float, float]

    @classmethod
    def fit(cls, X: np.ndarray) -> "FeatureScaler":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std = np.where(std > 0.0, std, 1.0)
        return cls(mean=(float(mean[0]), float(mean[1])), std=(float(std[0]), float(std[1])))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - np.asarray(self.mean)) / np.asarray(self.std)


@dataclass(frozen=True)
class SolverDiagnostics:
    iterations: int
    kkt_gap: float
    converged: bool


@dataclass(frozen=True)
class SvmModel:
    """Trained classifier artifact: scaled support vectors and dual weights."""

    support_vectors: np.ndarray  # (m, 2), already standardized
    dual_coef: np.ndarray  # (m,), alpha_i * y_i
    bias: float
    gamma: float
    c: float
    scaler: FeatureScaler
    training_digest: str | None = None
    diagnostics: SolverDiagnostics = field(
        default=SolverDiagnostics(iterations=0, kkt_gap=0.0, converged=True)
    )

    def decision_function(self, X) -> np.ndarray:
        """Signed distance-like score; positive means contact."""
        X = as_feature_matrix("X", X)
        K = kernel_matrix(self.scaler.transform(X), self.support_vectors, self.gamma)
        return K @ self.dual_coef + self.bias

    def predict(self, X) -> np.ndarray:
        """Labels as +1 (contact) / -1 (no contact); score 0 -> no contact."""
        scores = self.decision_function(X)
        return np.where(scores > 0.0, 1, -1)

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(model_to_json(self), sort_keys=True).encode()
        ).hexdigest()


def dataset_digest(X: np.ndarray, y: np.ndarray) -> str:
    rows = [[float(a), float(b), int(lab)] for (a, b), lab in zip(X, y)]
    return hashlib.sha256(json.dumps(rows).encode()).hexdigest()


def _solve_dual(
    K: np.ndarray, y: np.ndarray, c: float, tol: float, max_iter: int
) -> tuple[np.ndarray, float, SolverDiagnostics]:
    """Most-violating-pair dual descent on signed multipliers.

    Minimizes 0.5 b^T K b - y^T b over A <= b <= B with sum(b) = 0, where
    b_i = y_i alpha_i. Returns (alpha, bias, diagnostics).
    """
    n = y.size
    b = np.zeros(n)
    lower = np.where(y > 0, 0.0, -c)
    upper = np.where(y > 0, c, 0.0)
    grad = -y.astype(float)  # gradient of the objective at b = 0

    iterations = 0
    gap = np.inf
    last_pair = (0, 0)
    for iterations in range(1, max_iter + 1):
        can_up = b < upper - _BOUND_SNAP
        can_down = b > lower + _BOUND_SNAP
        if not can_up.any() or not can_down.any():
            gap = 0.0
            break
        i = int(np.argmin(np.where(can_up, grad, np.inf)))
        j = int(np.argmax(np.where(can_down, grad, -np.inf)))
        last_pair = (i, j)
        gap = grad[j] - grad[i]
        if gap <= tol:
            break
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0.0:
            quad = 1e-12
        step = min(gap / quad, upper[i] - b[i], b[j] - lower[j])
        b[i] += step
        b[j] -= step
        grad += step * (K[:, i] - K[:, j])

    converged = bool(gap <= tol)
    alpha = b * y
    alpha = np.clip(alpha, 0.0, c)
    alpha[alpha < _BOUND_SNAP] = 0.0
    alpha[alpha > c - _BOUND_SNAP] = c

    free = (alpha > 0.0) & (alpha < c)
    if free.any():
        bias = float(np.mean(-grad[free]))
    else:
        i, j = last_pair
        bias = float(-(grad[i] + grad[j]) / 2.0)
    return alpha, bias, SolverDiagnostics(iterations, float(gap), converged)


class GaussianSvmClassifier(ClassifierMixin, BaseEstimator):
    """scikit-learn style binary SVM over the two pressure features.

    Parameters
    ----------
    gamma : float or "median"
        Kernel width; "median" selects 1/(2 * median pairwise distance^2)
        on the standardized training features.
    c : float
        Soft-margin box constraint.
    tol : float
        KKT gap tolerance for the dual solver.
    max_iter : int
        Pair-update budget; exceeding it emits a warning and keeps the best
        iterate (diagnosed on ``model_.diagnostics``).
    """

    def __init__(
        self,
        gamma: float | str = "median",
        c: float = 1.0,
        tol: float = 1e-6,
        max_iter: int = 200_000,
    ):
        self.gamma = gamma
        self.c = c
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y) -> "GaussianSvmClassifier":
        X = as_feature_matrix("X", X)
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise InvalidInputError(
                f"y has shape {y.shape}, expected ({X.shape[0]},)"
            )
        y = np.where(y.astype(float) > 0, 1, -1).astype(int)
        classes = np.unique(y)
        if classes.size < 2:
            raise TrainingError("training data contains a single class")
        if not (isinstance(self.c, (int, float)) and self.c > 0):
            raise InvalidParameterError(f"c must be > 0, got {self.c!r}")

        scaler = FeatureScaler.fit(X)
        Xs = scaler.transform(X)
        if self.gamma == "median":
            gamma = median_heuristic_gamma(Xs, y)
        else:
            gamma = float(self.gamma)
            if gamma <= 0.0:
                raise InvalidParameterError(f"gamma must be > 0, got {gamma}")

        K = kernel_matrix(Xs, Xs, gamma)
        alpha, bias, diag = _solve_dual(K, y, float(self.c), self.tol, self.max_iter)
        if not diag.converged:
            warnings.warn(
                f"dual solver stopped after {diag.iterations} iterations with "
                f"KKT gap {diag.kkt_gap:.3e} > tol {self.tol:.1e}",
                RuntimeWarning,
                stacklevel=2,
            )

        keep = alpha > 0.0
        self.model_ = SvmModel(
            support_vectors=Xs[keep].copy(),
            dual_coef=(alpha[keep] * y[keep]).astype(float),
            bias=bias,
            gamma=gamma,
            c=float(self.c),
            scaler=scaler,
            training_digest=dataset_digest(X, y),
            diagnostics=diag,
        )
        self.classes_ = np.array([-1, 1])
        return self

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        return self.model_.decision_function(X)

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        return self.model_.predict(X)

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_"):
            raise InvalidInputError("classifier has not been fitted")


# ---------------------------------------------------------------------------
# Functional wrappers over labeled samples


def train(
    samples: list[LabeledSample],
    gamma: float | str = "median",
    c: float = 1.0,
    tol: float = 1e-6,
    max_iter: int = 200_000,
) -> SvmModel:
    X, y = features_matrix(samples)
    clf = GaussianSvmClassifier(gamma=gamma, c=c, tol=tol, max_iter=max_iter)
    clf.fit(X, y)
    return clf.model_


def predict(model: SvmModel, fv: FeatureVector) -> tuple[ContactLabel, float]:
    """Classify one feature vector; returns (label, decision score)."""
    score = float(model.decision_function(fv.as_array())[0])
    label = ContactLabel.CONTACT if score > 0.0 else ContactLabel.NO_CONTACT
    return label, score


# ---------------------------------------------------------------------------
# Evaluation protocols


@dataclass(frozen=True)
class FoldResult:
    fold: int
    accuracy: float
    f1: float | None
    classification_loss: float
    test_size: int


@dataclass(frozen=True)
class CrossValidationReport:
    folds: list[FoldResult]
    accuracy: float
    f1: float | None
    classification_loss: float
    skipped_folds: int


@dataclass(frozen=True)
class SplitEvaluationReport:
    accuracies: list[float]
    f1_scores: list[float]
    mean_accuracy: float
    mean_f1: float


def _binary_f1(y_true: np.ndarray, y_pred: np.ndarray) -> float | None:
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == -1) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == -1)))
    if 2 * tp + fp + fn == 0:
        return None
    return 2.0 * tp / (2.0 * tp + fp + fn)


def _stratified_folds(y: np.ndarray, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Deterministic stratified fold assignment (round-robin per class)."""
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        for pos, sample in enumerate(idx):
            folds[pos % k].append(int(sample))
    return [np.sort(np.array(f, dtype=int)) for f in folds]


def cross_validate(
    samples: list[LabeledSample],
    k_folds: int = 10,
    gamma: float | str = "median",
    c: float = 1.0,
    seed: int = 0,
) -> CrossValidationReport:
    """Stratified k-fold evaluation; loss is the misclassification fraction."""
    X, y = features_matrix(samples)
    if k_folds < 2:
        raise InvalidParameterError(f"k_folds must be >= 2, got {k_folds}")
    if len(samples) < k_folds:
        raise InvalidInputError(
            f"need at least {k_folds} samples for {k_folds}-fold CV, got {len(samples)}"
        )
    rng = np.random.default_rng(seed)
    folds = _stratified_folds(y, k_folds, rng)

    results: list[FoldResult] = []
    skipped = 0
    pooled_true: list[np.ndarray] = []
    pooled_pred: list[np.ndarray] = []
    for fold_idx, test_idx in enumerate(folds):
        if test_idx.size == 0:
            skipped += 1
            continue
        train_mask = np.ones(len(y), dtype=bool)
        train_mask[test_idx] = False
        if np.unique(y[train_mask]).size < 2:
            warnings.warn(
                f"fold {fold_idx} skipped: training split has a single class",
                RuntimeWarning,
                stacklevel=2,
            )
            skipped += 1
            continue
        clf = GaussianSvmClassifier(gamma=gamma, c=c)
        clf.fit(X[train_mask], y[train_mask])
        pred = clf.predict(X[test_idx])
        truth = y[test_idx]
        acc = float(np.mean(pred == truth))
        results.append(
            FoldResult(
                fold=fold_idx,
                accuracy=acc,
                f1=_binary_f1(truth, pred),
                classification_loss=1.0 - acc,
                test_size=int(test_idx.size),
            )
        )
        pooled_true.append(truth)
        pooled_pred.append(pred)

    if not results:
        raise TrainingError("all cross-validation folds were skipped")
    y_true = np.concatenate(pooled_true)
    y_pred = np.concatenate(pooled_pred)
    accuracy = float(np.mean(y_true == y_pred))
    return CrossValidationReport(
        folds=results,
        accuracy=accuracy,
        f1=_binary_f1(y_true, y_pred),
        classification_loss=1.0 - accuracy,
        skipped_folds=skipped,
    )


def split_evaluate(
    samples: list[LabeledSample],
    train_fraction: float = 0.303,
    repeats: int = 10,
    gamma: float | str = "median",
    c: float = 1.0,
    seed: int = 0,
) -> SplitEvaluationReport:
    """Repeated stratified train/validate splits; reports mean accuracy/F1."""
    X, y = features_matrix(samples)
    if not (0.0 < train_fraction < 1.0):
        raise InvalidParameterError(
            f"train_fraction must be in (0, 1), got {train_fraction}"
        )
    rng = np.random.default_rng(seed)
    accuracies: list[float] = []
    f1_scores: list[float] = []
    for _ in range(repeats):
        train_idx: list[int] = []
        for cls in np.unique(y):
            idx = np.flatnonzero(y == cls)
            rng.shuffle(idx)
            n_train = max(1, round(train_fraction * idx.size))
            train_idx.extend(int(v) for v in idx[:n_train])
        train_mask = np.zeros(len(y), dtype=bool)
        train_mask[train_idx] = True
        clf = GaussianSvmClassifier(gamma=gamma, c=c)
        clf.fit(X[train_mask], y[train_mask])
        pred = clf.predict(X[~train_mask])
        truth = y[~train_mask]
        accuracies.append(float(np.mean(pred == truth)))
        f1 = _binary_f1(truth, pred)
        if f1 is None:
            warnings.warn("split repeat had undefined F1; excluded from the mean",
                          RuntimeWarning, stacklevel=2)
        else:
            f1_scores.append(f1)
    return SplitEvaluationReport(
        accuracies=accuracies,
        f1_scores=f1_scores,
        mean_accuracy=float(np.mean(accuracies)),
        mean_f1=float(np.mean(f1_scores)) if f1_scores else float("nan"),
    )


# ---------------------------------------------------------------------------
# Serialization (versioned JSON; round-trips must preserve predictions)


def model_to_json(model: SvmModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "gamma": float(model.gamma),
        "c": float(model.c),
        "bias": float(model.bias),
        "support_vectors": [[float(a), float(b)] for a, b in model.support_vectors],
        "dual_coefficients": [float(v) for v in model.dual_coef],
        "scaler": {"mean": list(model.scaler.mean), "std": list(model.scaler.std)},
        "training_digest": model.training_digest,
        "diagnostics": {
            "iterations": model.diagnostics.iterations,
            "kkt_gap": float(model.diagnostics.kkt_gap),
            "converged": model.diagnostics.converged,
        },
    }


def model_from_json(doc: dict) -> SvmModel:
    if doc.get("format") != MODEL_FORMAT:
        raise InvalidInputError(f"not an svm-model document: {doc.get('format')!r}")
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise InvalidInputError(f"unsupported model version {doc.get('version')!r}")
    scaler = FeatureScaler(
        mean=tuple(doc["scaler"]["mean"]), std=tuple(doc["scaler"]["std"])
    )
    diag = doc.get("diagnostics", {})
    return SvmModel(
        support_vectors=np.asarray(doc["support_vectors"], dtype=np.float64).reshape(
            -1, 2
        ),
        dual_coef=np.asarray(doc["dual_coefficients"], dtype=np.float64),
        bias=float(doc["bias"]),
        gamma=float(doc["gamma"]),
        c=float(doc["c"]),
        scaler=scaler,
        training_digest=doc.get("training_digest"),
        diagnostics=SolverDiagnostics(
            iterations=int(diag.get("iterations", 0)),
            kkt_gap=float(diag.get("kkt_gap", 0.0)),
            converged=bool(diag.get("converged", True)),
        ),
    )


def save_model(model: SvmModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_json(model), indent=2))


def load_model(path: str | Path) -> SvmModel:
    return model_from_json(json.loads(Path(path).read_text()))
