"""Linear readout trained by ridge regression, plus evaluation metrics."""
from __future__ import annotations

import json
from typing import Protocol, runtime_checkable

import numpy as np
from scipy import linalg

from .errors import ValidationError


@runtime_checkable
class Estimator(Protocol):
    """Anything with scikit-learn style ``fit`` / ``predict`` can drive a forecast."""

    def fit(self, X, y): ...

    def predict(self, X): ...


def _matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValidationError(f"{name} must be 1-D or 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains non-finite entries")
    return a


class ReadoutModel:
    """``Y_hat = X @ W_out + intercept`` fitted by ridge regression.

    Minimises ``||Y - X W - 1 b^T||_F^2 + lam ||W||_F^2`` with the intercept
    left unpenalised.  ``lam = 0`` gives the minimum-norm least-squares
    solution, which is also what rank-deficient inputs get.
    """

    def __init__(self, lam: float = 1e-6, fit_intercept: bool = True):
        if not lam >= 0:
            raise ValidationError(f"ridge coefficient must be >= 0, got {lam}")
        self.lam = float(lam)
        self.fit_intercept = fit_intercept
        self.W_out: np.ndarray | None = None
        self.intercept: np.ndarray | None = None
        self._vector_target = False

    def fit(self, X, y) -> "ReadoutModel":
        X = _matrix(X, "X")
        Y = _matrix(y, "y")
        if X.shape[0] != Y.shape[0] or X.shape[0] < 1:
            raise ValidationError(f"X has {X.shape[0]} rows but y has {Y.shape[0]}")
        self._vector_target = np.ndim(y) == 1
        if self.fit_intercept:
            x_mean, y_mean = X.mean(axis=0), Y.mean(axis=0)
        else:
            x_mean, y_mean = np.zeros(X.shape[1]), np.zeros(Y.shape[1])
        Xc, Yc = X - x_mean, Y - y_mean
        if self.lam > 0:
            gram = Xc.T @ Xc + self.lam * np.eye(X.shape[1])
            W = linalg.cho_solve(linalg.cho_factor(gram), Xc.T @ Yc)
        else:
            W = np.linalg.lstsq(Xc, Yc, rcond=None)[0]
        self.W_out = W
        self.intercept = y_mean - x_mean @ W
        return self

    @property
    def n_features(self) -> int:
        self._check_fitted()
        return self.W_out.shape[0]

    def _check_fitted(self) -> None:
        if self.W_out is None:
            raise ValidationError("model is not fitted")

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        X = _matrix(X, "X")
        if X.shape[1] != self.W_out.shape[0]:
            raise ValidationError(f"expected {self.W_out.shape[0]} features, got {X.shape[1]}")
        out = X @ self.W_out + self.intercept
        return out[:, 0] if self._vector_target else out

    # -- persistence --------------------------------------------------------

    def dumps(self) -> str:
        """Text dump; floats are written with ``repr`` so loading is bit-exact."""
        self._check_fitted()
        doc = {
            "n_features": self.W_out.shape[0],
            "n_targets": self.W_out.shape[1],
            "lambda": self.lam,
            "fit_intercept": self.fit_intercept,
            "vector_target": self._vector_target,
            "W_out": [float(v) for v in self.W_out.ravel()],
            "intercept": [float(v) for v in self.intercept],
        }
        return json.dumps(doc, indent=1) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ReadoutModel":
        doc = json.loads(text)
        model = cls(doc["lambda"], doc["fit_intercept"])
        f, d = doc["n_features"], doc["n_targets"]
        model.W_out = np.array(doc["W_out"], dtype=np.float64).reshape(f, d)
        model.intercept = np.array(doc["intercept"], dtype=np.float64)
        model._vector_target = doc["vector_target"]
        return model


def fit_ridge(X, Y, lam: float = 1e-6, fit_intercept: bool = True) -> ReadoutModel:
    return ReadoutModel(lam, fit_intercept).fit(X, Y)


def model_predict(model, X) -> np.ndarray:
    return model.predict(X)


def mse(y, y_hat) -> float:
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise ValidationError(f"length mismatch: {y.shape} vs {y_hat.shape}")
    if y.size == 0:
        raise ValidationError("mse of empty sequences")
    sq = (y - y_hat) ** 2
    if sq.ndim == 2:
        sq = sq.sum(axis=1)  # squared Euclidean error per timestep
    return float(np.mean(sq))


def accuracy(y, y_hat) -> float:
    """Fraction of positions where the decoded prediction equals the truth."""
    y, y_hat = list(y), list(y_hat)
    if len(y) != len(y_hat):
        raise ValidationError(f"length mismatch: {len(y)} vs {len(y_hat)}")
    if not y:
        raise ValidationError("accuracy of empty sequences")
    return sum(a == b for a, b in zip(y, y_hat)) / len(y)
