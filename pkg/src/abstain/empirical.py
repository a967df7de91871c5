"""Empirical abstain study for a probability-emitting multi-class classifier.

The classifier is an L2-regularised multinomial logistic model.  It abstains
when its largest class probability falls below a threshold ``p_a``.  Inputs
are attacked with a single sign-of-gradient step of size ``xi`` in the
infinity norm.  Errors are counted on a test set:

* nominal error: fraction of clean inputs not labelled with their true class
  (abstaining counts as an error);
* adversarial error: fraction of perturbed inputs labelled with a wrong class
  (abstaining does not count).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import log_softmax, softmax

from .exceptions import ValidationError

ABSTAIN = -1


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    m: int

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.features, dtype=float))
        z = np.asarray(self.labels)
        if X.shape[0] < 1:
            raise ValidationError("dataset is empty")
        if z.shape != (X.shape[0],):
            raise ValidationError("need one label per row")
        if not np.all(np.isfinite(X)):
            raise ValidationError("features must be finite")
        if not np.all(np.equal(np.mod(z, 1), 0)):
            raise ValidationError("labels must be integers")
        z = z.astype(int)
        m = int(self.m)
        if z.min() < 0 or z.max() >= m:
            raise ValidationError(f"labels must lie in 0..{m - 1}")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", z)
        object.__setattr__(self, "m", m)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


def make_blobs(n_train: int = 2000, n_test: int = 2000, m: int = 3, sigma: float = 0.6,
               seed: int = 0) -> tuple[Dataset, Dataset]:
    """Isotropic 2-D Gaussian blobs with means evenly spaced on the unit circle."""
    rng = np.random.default_rng(seed)
    angles = 2 * np.pi * np.arange(m) / m
    means = np.column_stack([np.cos(angles), np.sin(angles)])

    def draw(n: int) -> Dataset:
        z = np.arange(n) % m
        X = means[z] + sigma * rng.standard_normal((n, 2))
        return Dataset(X, z, m)

    return draw(n_train), draw(n_test)


def save_dataset(path: str | Path, ds: Dataset) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label"] + [f"f{k + 1}" for k in range(ds.d)])
        for z, x in zip(ds.labels, ds.features):
            w.writerow([int(z)] + [repr(float(v)) for v in x])


def load_dataset(path: str | Path, m: int | None = None) -> Dataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "label":
        raise ValidationError(f"{path}: expected header 'label,f1,...'")
    body = [r for r in rows[1:] if r]
    if not body:
        raise ValidationError(f"{path}: no data rows")
    try:
        z = np.array([int(r[0]) for r in body])
        X = np.array([[float(v) for v in r[1:]] for r in body])
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return Dataset(X, z, int(z.max()) + 1 if m is None else m)


@dataclass(frozen=True)
class ProbModel:
    weights: np.ndarray  # (m, d)
    biases: np.ndarray  # (m,)
    loss_history: tuple[float, ...] = field(default=(), compare=False, repr=False)

    @property
    def m(self) -> int:
        return self.weights.shape[0]

    def scores(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return X @ self.weights.T + self.biases

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.scores(X), axis=1)


def _objective(W, b, X, Y, l2):
    logp = log_softmax(X @ W.T + b, axis=1)
    return -np.mean(np.sum(Y * logp, axis=1)) + 0.5 * l2 * np.sum(W * W)


def train_model(train: Dataset, l2: float = 1e-3, seed: int = 0, max_iter: int = 10_000,
                rtol: float = 1e-8) -> ProbModel:
    """Full-batch gradient descent on mean cross-entropy plus ``l2/2 ||W||^2``.

    The step is ``1/L`` with ``L`` an upper bound on the Hessian norm, so the
    objective decreases monotonically.  Biases are not penalised.
    """
    if l2 < 0 or not math.isfinite(l2):
        raise ValidationError("l2 must be a finite nonnegative number")
    counts = np.bincount(train.labels, minlength=train.m)
    if np.any(counts == 0):
        raise ValidationError("every class needs at least one training sample")
    X, N = train.features, train.n
    Y = np.eye(train.m)[train.labels]
    Xa = np.column_stack([X, np.ones(N)])
    lip = 0.5 * np.linalg.eigvalsh(Xa.T @ Xa / N)[-1] + l2
    step = 1.0 / lip

    rng = np.random.default_rng(seed)
    W = 0.01 * rng.standard_normal((train.m, train.d))
    b = np.zeros(train.m)
    history = [_objective(W, b, X, Y, l2)]
    for _ in range(max_iter):
        P = softmax(X @ W.T + b, axis=1)
        G = (P - Y) / N
        W = W - step * (G.T @ X + l2 * W)
        b = b - step * G.sum(axis=0)
        history.append(_objective(W, b, X, Y, l2))
        if abs(history[-2] - history[-1]) <= rtol * abs(history[-2]):
            break
    return ProbModel(W, b, tuple(history))


def abstain_predict(model: ProbModel, X, p_a: float):
    """Argmax label (lowest index on ties), or ``ABSTAIN`` if the top probability is below ``p_a``."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    P = model.predict_proba(X)
    out = np.where(P.max(axis=1) < p_a, ABSTAIN, P.argmax(axis=1))
    return int(out[0]) if single else out


def adversarial_perturb(model: ProbModel, X, true_labels, xi: float) -> np.ndarray:
    """Shift each input by ``xi`` along the sign of the cross-entropy input gradient."""
    if xi < 0:
        raise ValidationError("perturbation bound must be >= 0")
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    z = np.atleast_1d(np.asarray(true_labels, dtype=int))
    P = model.predict_proba(X2)
    P[np.arange(len(z)), z] -= 1.0
    grad = P @ model.weights
    out = X2 + xi * np.sign(grad)
    # rounding of x + xi can overshoot by an ulp; step back so the bound holds exactly
    for _ in range(4):
        over = np.abs(out - X2) > xi
        if not over.any():
            break
        out = np.where(over, np.nextafter(out, X2), out)
    return out[0] if single else out


@dataclass(frozen=True)
class EmpiricalReport:
    p_a: float
    e_nom: float
    e_adv: float
    abstain_fraction: float
    xi: float

    def as_row(self) -> list[float]:
        return [self.p_a, self.e_nom, self.e_adv, self.abstain_fraction, self.xi]


def _reports(P_clean: np.ndarray, P_adv: np.ndarray, z: np.ndarray, pa_grid, xi: float):
    top_c, arg_c = P_clean.max(axis=1), P_clean.argmax(axis=1)
    top_a, arg_a = P_adv.max(axis=1), P_adv.argmax(axis=1)
    out = []
    for p_a in pa_grid:
        zhat = np.where(top_c < p_a, ABSTAIN, arg_c)
        ztil = np.where(top_a < p_a, ABSTAIN, arg_a)
        out.append(EmpiricalReport(
            p_a=float(p_a),
            e_nom=float(np.mean(zhat != z)),
            e_adv=float(np.mean((ztil != z) & (ztil != ABSTAIN))),
            abstain_fraction=float(np.mean(zhat == ABSTAIN)),
            xi=float(xi),
        ))
    return out


def empirical_errors(model: ProbModel, test: Dataset, p_a: float, xi: float) -> EmpiricalReport:
    return sweep_pa(model, test, [p_a], xi)[0]


def sweep_pa(model: ProbModel, test: Dataset, pa_grid: Sequence[float], xi: float) -> list[EmpiricalReport]:
    """One report per threshold; the attack is computed once and shared."""
    grid = [float(v) for v in pa_grid]
    if any(not 0.0 <= v <= 1.0 for v in grid):
        raise ValidationError("thresholds must lie in [0, 1]")
    if any(b < a for a, b in zip(grid[:-1], grid[1:])):
        raise ValidationError("threshold grid must be sorted")
    X_adv = adversarial_perturb(model, test.features, test.labels, xi)
    return _reports(model.predict_proba(test.features), model.predict_proba(X_adv),
                    test.labels, grid, xi)


def max_abstain_jump(reports: Sequence[EmpiricalReport]) -> float:
    """Largest rise of the abstain fraction between consecutive thresholds.

    Small values mean the abstain fraction grows evenly over the sweep.
    """
    a = np.array([r.abstain_fraction for r in reports])
    return float(np.max(np.diff(a))) if a.size > 1 else 0.0


def parse_grid(text: str) -> list[float]:
    """Parse ``start:stop:step`` (inclusive stop) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValidationError(f"grid {text!r} must look like start:stop:step")
        try:
            a, b, h = (float(v) for v in parts)
        except ValueError:
            raise ValidationError(f"bad grid {text!r}") from None
        if h <= 0 or b < a:
            raise ValidationError(f"bad grid {text!r}")
        k = int(math.floor((b - a) / h + 1e-9))
        vals = [round(a + i * h, 12) for i in range(k + 1)]
        if b - vals[-1] > 1e-9:
            vals.append(b)
        return vals
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"bad grid {text!r}") from None
