"""Support vector machines solved by SMO, with Platt-calibrated probabilities."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
import logging
import math
from typing import Any

import numpy as np
import numpy.typing as npt
from scipy.spatial.distance import cdist
from scipy.special import expit

from .const import (
    CONF_C,
    CONF_DELTA,
    CONF_GAMMA,
    CONF_KERNEL,
    CONF_MAX_ITER,
    CONF_TOL,
    KERNEL_LINEAR,
    KERNEL_RBF,
    KIND_FSVM,
    KIND_SVM,
    N_CLASSES,
)
from .exceptions import ConfigError, ConvergenceError, DataValidationError
from .learners import Classifier, as_codes, as_rows, require_two_classes

_LOGGER = logging.getLogger(__name__)

# Denominator floor for the pairwise step
MIN_CURVATURE = 1e-12

PLATT_MAX_ITER = 100
PLATT_MIN_STEP = 1e-10
PLATT_SIGMA = 1e-12
PLATT_EPS = 1e-5


# ── Kernels ───────────────────────────────────────────────────


def default_gamma(X: np.ndarray) -> float:
    """1 / (n_features * variance of all training entries)."""
    variance = float(np.var(X))
    return 1.0 / (X.shape[1] * variance) if variance > 0 else 1.0


def kernel_matrix(kernel: str, gamma: float, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Gram matrix between the rows of A and B."""
    if kernel == KERNEL_LINEAR:
        return A @ B.T
    if kernel == KERNEL_RBF:
        return np.exp(-gamma * cdist(A, B, "sqeuclidean"))
    raise ConfigError(f"unknown kernel {kernel!r}")


# ── SMO solver ────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class SmoSolution:
    """Dual solution of a binary soft-margin SVM.

    ``coef`` holds y_i * alpha_i, so alpha_i = |coef_i| and the equality
    constraint reads sum(coef) = 0.
    """

    coef: np.ndarray
    bias: float
    iterations: int
    gap: float

    @property
    def alpha(self) -> np.ndarray:
        """Dual variables alpha_i >= 0."""
        return np.abs(self.coef)


def solve_smo(
    K: np.ndarray,
    y: np.ndarray,
    upper: np.ndarray,
    *,
    tol: float,
    max_iter: int,
) -> SmoSolution:
    """Maximal-violating-pair SMO for the soft-margin dual.

    ``y`` is +-1, ``upper`` the per-sample box bound (C or C * weight).
    Works on coef = y * alpha with bounds [lo_i, hi_i] = [0, upper_i] for
    positive and [-upper_i, 0] for negative samples, keeping sum(coef) = 0.
    Stops once the largest KKT violation drops to ``tol``.
    """
    y = y.astype(np.float64)
    lo = np.where(y > 0, 0.0, -upper)
    hi = np.where(y > 0, upper, 0.0)
    coef = np.zeros(y.shape[0])
    gradient = y.copy()
    diagonal = np.diag(K)

    gap = math.inf
    for iteration in range(max_iter + 1):
        can_rise = coef < hi
        can_fall = coef > lo
        if not can_rise.any() or not can_fall.any():
            gap = 0.0
            break
        i = int(np.argmax(np.where(can_rise, gradient, -np.inf)))
        j = int(np.argmin(np.where(can_fall, gradient, np.inf)))
        gap = float(gradient[i] - gradient[j])
        if gap <= tol:
            break
        if iteration == max_iter:
            raise ConvergenceError(
                f"SMO did not converge in {max_iter} iterations (gap {gap:.3g})",
                iterations=max_iter,
                gap=gap,
                best_iterate=coef.copy(),
            )
        curvature = max(diagonal[i] + diagonal[j] - 2.0 * K[i, j], MIN_CURVATURE)
        room_i, room_j = hi[i] - coef[i], coef[j] - lo[j]
        step = min(room_i, room_j, gap / curvature)
        # snap to the bound so bounded variables compare equal to it
        coef[i] = hi[i] if step == room_i else coef[i] + step
        coef[j] = lo[j] if step == room_j else coef[j] - step
        gradient -= step * (K[:, i] - K[:, j])

    free = (coef > lo) & (coef < hi)
    if free.any():
        bias = float(gradient[free].mean())
    else:
        up = np.where(coef < hi, gradient, -np.inf).max()
        down = np.where(coef > lo, gradient, np.inf).min()
        bias = float((up + down) / 2.0) if np.isfinite(up) and np.isfinite(down) else 0.0
    return SmoSolution(coef=coef, bias=bias, iterations=iteration, gap=gap)


# ── Platt calibration ─────────────────────────────────────────


def _platt_objective(a: float, b: float, f: np.ndarray, t: np.ndarray) -> float:
    z = a * f + b
    return float(np.sum(np.logaddexp(0.0, z) - (1.0 - t) * z))


def fit_platt(decision: npt.ArrayLike, positive: npt.ArrayLike) -> tuple[float, float]:
    """Fit P(positive | f) = 1 / (1 + exp(a f + b)) by Newton with backtracking.

    Targets are the smoothed values (N+ + 1)/(N+ + 2) and 1/(N- + 2).
    """
    f = np.asarray(decision, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = float(positive.sum())
    n_neg = float(positive.size - n_pos)
    t = np.where(positive, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    a, b = 0.0, math.log((n_neg + 1.0) / (n_pos + 1.0))
    objective = _platt_objective(a, b, f, t)
    for _ in range(PLATT_MAX_ITER):
        p = expit(-(a * f + b))
        d1 = t - p
        d2 = p * (1.0 - p)
        gradient = np.array([np.dot(f, d1), d1.sum()])
        if np.max(np.abs(gradient)) < PLATT_EPS:
            break
        hessian = np.array(
            [
                [np.dot(f * f, d2) + PLATT_SIGMA, np.dot(f, d2)],
                [np.dot(f, d2), d2.sum() + PLATT_SIGMA],
            ]
        )
        direction = -np.linalg.solve(hessian, gradient)
        slope = float(np.dot(gradient, direction))
        step = 1.0
        while step >= PLATT_MIN_STEP:
            new_a, new_b = a + step * direction[0], b + step * direction[1]
            new_objective = _platt_objective(new_a, new_b, f, t)
            if new_objective < objective + 1e-4 * step * slope:
                a, b, objective = new_a, new_b, new_objective
                break
            step /= 2.0
        else:
            _LOGGER.debug("Platt line search failed; keeping a=%g b=%g", a, b)
            break
    return float(a), float(b)


def platt_probability(decision: np.ndarray, a: float, b: float) -> np.ndarray:
    """Calibrated probability of the positive class."""
    return expit(-(a * decision + b))


# ── Binary and one-vs-rest SVM ────────────────────────────────


@dataclass(eq=False)
class BinarySvm:
    """Fitted binary SVM restricted to its support vectors."""

    support: np.ndarray
    coef: np.ndarray
    bias: float
    platt_a: float = 0.0
    platt_b: float = 0.0

    def decision(self, K: np.ndarray) -> np.ndarray:
        """Decision values given the kernel between inputs and support vectors."""
        return K @ self.coef + self.bias

    def to_dict(self) -> dict[str, Any]:
        """JSON-friendly form."""
        return {
            "support": self.support.tolist(),
            "coef": self.coef.tolist(),
            "bias": self.bias,
            "platt_a": self.platt_a,
            "platt_b": self.platt_b,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> BinarySvm:
        """Inverse of to_dict."""
        support = np.asarray(data["support"], dtype=np.float64)
        coef = np.asarray(data["coef"], dtype=np.float64)
        if support.ndim != 2 or coef.shape != (support.shape[0],):
            raise ValueError("support vectors and coefficients do not match")
        return cls(
            support=support,
            coef=coef,
            bias=float(data["bias"]),
            platt_a=float(data["platt_a"]),
            platt_b=float(data["platt_b"]),
        )


def fuzzy_weights(X: npt.ArrayLike, y: npt.ArrayLike, delta: float = 1e-6) -> np.ndarray:
    """Membership weight per sample from its distance to the class centroid.

    s_i = 1 - d(x_i, c_k) / (r_k + delta) where c_k is the class mean and
    r_k the largest distance to it within the class. Weights lie in (0, 1].
    """
    rows, codes = as_rows(X), as_codes(y)
    weights = np.ones(rows.shape[0])
    for k in np.unique(codes):
        members = codes == k
        distance = np.linalg.norm(rows[members] - rows[members].mean(axis=0), axis=1)
        weights[members] = 1.0 - distance / (distance.max() + delta)
    return weights


class SvmClassifier(Classifier):
    """One-vs-rest soft-margin SVMs with Platt-scaled, normalized outputs.

    Classes absent from the training set get probability 0.
    """

    kind = KIND_SVM
    standardize = True

    def __init__(self, hyperparameters: Mapping[str, Any] | None = None, seed: int = 0) -> None:
        super().__init__(hyperparameters, seed)
        self.gamma: float = 0.0
        self.machines: dict[int, BinarySvm] = {}
        self.solutions: dict[int, SmoSolution] = {}
        self.sample_weight: np.ndarray | None = None

    @property
    def kernel(self) -> str:
        """Kernel name."""
        return str(self.hyperparameters[CONF_KERNEL])

    def _weights(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.ones(X.shape[0])

    def fit_weighted(
        self, X: npt.ArrayLike, y: npt.ArrayLike, sample_weight: npt.ArrayLike
    ) -> SvmClassifier:
        """Fit with explicit per-sample box weights."""
        weight = np.asarray(sample_weight, dtype=np.float64)
        if weight.ndim != 1 or weight.shape[0] != as_rows(X).shape[0]:
            raise DataValidationError("one sample weight per training row expected")
        if (weight <= 0).any() or not np.isfinite(weight).all():
            raise DataValidationError("sample weights must be positive and finite")
        self.sample_weight = weight
        try:
            return self.fit(X, y)
        finally:
            self.sample_weight = None

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        require_two_classes(y, self.kind)
        hp = self.hyperparameters
        gamma = hp[CONF_GAMMA]
        self.gamma = float(gamma) if gamma is not None else default_gamma(X)
        weight = self.sample_weight if self.sample_weight is not None else self._weights(X, y)
        upper = float(hp[CONF_C]) * weight
        K = kernel_matrix(self.kernel, self.gamma, X, X)

        self.machines, self.solutions = {}, {}
        for k in range(N_CLASSES):
            positive = y == k
            if not positive.any():
                _LOGGER.debug("Class %d absent from training set; probability fixed at 0", k)
                continue
            solution = solve_smo(
                K,
                np.where(positive, 1.0, -1.0),
                upper,
                tol=float(hp[CONF_TOL]),
                max_iter=int(hp[CONF_MAX_ITER]),
            )
            support = solution.coef != 0.0
            machine = BinarySvm(
                support=X[support], coef=solution.coef[support], bias=solution.bias
            )
            decision = K[:, support] @ machine.coef + machine.bias
            machine.platt_a, machine.platt_b = fit_platt(decision, positive)
            self.machines[k] = machine
            self.solutions[k] = solution
            _LOGGER.debug(
                "SVM class %d: %d support vectors, %d SMO iterations, gap %.3g",
                k,
                int(support.sum()),
                solution.iterations,
                solution.gap,
            )

    def decision_function(self, X: npt.ArrayLike) -> np.ndarray:
        """One-vs-rest decision values (n, 4); NaN for absent classes."""
        rows = as_rows(X)
        if self.standardizer is not None:
            rows = self.standardizer.apply(rows)
        return self._decision(rows)

    def _decision(self, X: np.ndarray) -> np.ndarray:
        values = np.full((X.shape[0], N_CLASSES), np.nan)
        for k, machine in self.machines.items():
            values[:, k] = machine.decision(
                kernel_matrix(self.kernel, self.gamma, X, machine.support)
            )
        return values

    def _predict_proba(self, X: np.ndarray) -> np.ndarray:
        decision = self._decision(X)
        proba = np.zeros_like(decision)
        for k, machine in self.machines.items():
            proba[:, k] = platt_probability(decision[:, k], machine.platt_a, machine.platt_b)
        return proba

    def _get_state(self) -> dict[str, Any]:
        return {
            "gamma": self.gamma,
            "machines": {str(k): machine.to_dict() for k, machine in self.machines.items()},
        }

    def _set_state(self, state: Mapping[str, Any]) -> None:
        self.gamma = float(state["gamma"])
        self.machines = {
            int(k): BinarySvm.from_dict(machine) for k, machine in state["machines"].items()
        }
        if not self.machines:
            raise ValueError("SVM without binary machines")
        if any(not 0 <= k < N_CLASSES for k in self.machines):
            raise ValueError("binary machine for an unknown class")


class FuzzySvmClassifier(SvmClassifier):
    """SVM whose box bounds are scaled by class-centroid membership weights."""

    kind = KIND_FSVM

    def _weights(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        return fuzzy_weights(X, y, float(self.hyperparameters[CONF_DELTA]))
