"""
Performance Model
===================
Epsilon-insensitive Support Vector Regression with an RBF kernel that maps
(frequency, active cores, input size) to execution time.

Features and targets are z-scored with training-set statistics kept in the
model, so gamma and epsilon are expressed in standardized units. The dual is
solved as a dense quadratic program with cvxopt's interior-point solver; each
Newton step factors one n x n matrix (kernel plus a diagonal), which keeps a
full characterization grid well inside a second or two per fit. The trained
model keeps only the kernel expansion (support vectors, dual coefficients,
bias) and is evaluated with numpy, so a model loaded from disk predicts
exactly like the one that was trained.
"""

import hashlib
import logging
from collections.abc import Sequence
from typing import NamedTuple

import numpy as np
from cvxopt import matrix, solvers
from joblib import Parallel, delayed
from pydantic import (
    BaseModel,
    ConfigDict,
    FiniteFloat,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    field_validator,
    model_validator,
)
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from sklearn.metrics.pairwise import rbf_kernel

from energy_copilot.config import settings
from energy_copilot.errors import (
    AllGridPointsFailed,
    DegenerateData,
    EnergyCopilotError,
    InvalidInput,
    NoConvergence,
    TooFewSamples,
)
from energy_copilot.models.power_model import percentage_absolute_error

logger = logging.getLogger(__name__)

FEATURE_NAMES = ("freq_ghz", "cores", "input_size")
DEFAULT_EPSILON = 0.01
MIN_TIME_S = 1e-6


# =============================================================================
# Domain types
# =============================================================================

class PerfSample(BaseModel):
    """One benchmark observation: (f, p, N) -> measured time."""

    model_config = ConfigDict(frozen=True)

    freq_ghz: PositiveFloat
    cores: PositiveInt
    input_size: FiniteFloat
    time_s: PositiveFloat

    def features(self) -> tuple[float, float, float]:
        return (self.freq_ghz, float(self.cores), self.input_size)


class SvrHyperparams(BaseModel):
    model_config = ConfigDict(frozen=True)

    c_penalty: PositiveFloat
    gamma: PositiveFloat
    epsilon_tube: NonNegativeFloat = DEFAULT_EPSILON


# "10x10^3" read literally as C = 1e4.
REFERENCE_HYPERPARAMS = SvrHyperparams(c_penalty=1e4, gamma=0.5)

DEFAULT_GRID = [
    SvrHyperparams(c_penalty=c, gamma=g, epsilon_tube=e)
    for c in (1.0, 10.0, 100.0, 1e3, 1e4)
    for g in (0.05, 0.1, 0.5, 1.0, 2.0)
    for e in (0.001, 0.01, 0.1)
]


class FeatureScaler(BaseModel):
    """Z-score statistics of the training features and target."""

    model_config = ConfigDict(frozen=True)

    feature_mean: tuple[float, float, float]
    feature_std: tuple[PositiveFloat, PositiveFloat, PositiveFloat]
    target_mean: float
    target_std: PositiveFloat
    degenerate_features: tuple[str, ...] = ()
    degenerate_target: bool = False

    @classmethod
    def fit(cls, X: np.ndarray, y: np.ndarray) -> "FeatureScaler":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        flat = [name for name, s in zip(FEATURE_NAMES, std) if s == 0]
        if flat:
            logger.warning(f"Constant feature(s) {flat}: standard deviation replaced by 1")
        std = np.where(std == 0, 1.0, std)

        t_mean = float(y.mean())
        t_std = float(y.std())
        degenerate_target = t_std == 0
        if degenerate_target:
            logger.warning("Constant target time: standard deviation replaced by 1")
            t_std = 1.0

        return cls(
            feature_mean=tuple(float(v) for v in mean),
            feature_std=tuple(float(v) for v in std),
            target_mean=t_mean,
            target_std=t_std,
            degenerate_features=tuple(flat),
            degenerate_target=degenerate_target,
        )

    def transform_features(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - np.array(self.feature_mean)) / np.array(self.feature_std)

    def transform_target(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.target_mean) / self.target_std

    def inverse_target(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.target_std + self.target_mean


class PerfModel(BaseModel):
    """Trained kernel expansion: sum_i beta_i k(x, x_i) + b, in scaled units."""

    model_config = ConfigDict(frozen=True)

    support_vectors: list[tuple[float, float, float]]
    dual_coeffs: list[float]
    bias: float
    hyperparams: SvrHyperparams
    scaler: FeatureScaler
    n_train: PositiveInt
    train_seed: int
    fingerprint: str

    @model_validator(mode="after")
    def _check_expansion(self) -> "PerfModel":
        if len(self.support_vectors) != len(self.dual_coeffs):
            raise ValueError("support_vectors and dual_coeffs must have equal length")
        limit = self.hyperparams.c_penalty * (1 + 1e-9)
        for beta in self.dual_coeffs:
            if beta == 0:
                raise ValueError("dual coefficients of stored support vectors must be nonzero")
            if abs(beta) > limit:
                raise ValueError(f"dual coefficient {beta} outside [-C, C]")
        return self

    @property
    def n_support(self) -> int:
        return len(self.dual_coeffs)


class CvReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    folds: int
    mae_s: NonNegativeFloat
    pae: NonNegativeFloat

    @field_validator("folds")
    @classmethod
    def _at_least_two(cls, folds: int) -> int:
        if folds < 2:
            raise ValueError("cross-validation needs at least 2 folds")
        return folds


class TimePrediction(NamedTuple):
    time_s: float
    clamped: bool


# =============================================================================
# Helpers
# =============================================================================

def _canonical(samples: Sequence[PerfSample]) -> list[PerfSample]:
    """Input-order independent ordering of the samples."""
    return sorted(samples, key=lambda s: (s.freq_ghz, s.cores, s.input_size, s.time_s))


def _arrays(samples: Sequence[PerfSample]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([s.features() for s in samples], dtype=float).reshape(-1, len(FEATURE_NAMES))
    y = np.array([s.time_s for s in samples], dtype=float)
    return X, y


def fingerprint(samples: Sequence[PerfSample]) -> str:
    digest = hashlib.sha256()
    for s in _canonical(samples):
        digest.update(f"{s.freq_ghz!r},{s.cores},{s.input_size!r},{s.time_s!r}\n".encode())
    return digest.hexdigest()


def _fold_assignment(n: int, folds: int, seed: int) -> np.ndarray:
    """Fold index per canonical sample position; identical for a given seed."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    assignment = np.empty(n, dtype=int)
    assignment[order] = np.arange(n) % folds
    return assignment


# =============================================================================
# Dual solver
# =============================================================================

# Interior-point stopping tolerances; the looser `tol` decides acceptance when
# the solver stops early.
_QP_OPTIONS = {"show_progress": False, "abstol": 1e-8, "reltol": 1e-8, "feastol": 1e-8, "refinement": 1}
_JITTER = (1e-10, 1e-8, 1e-6)


class _DualSolution(NamedTuple):
    beta: np.ndarray
    bias: float
    iterations: int


def _kkt_factory(K: np.ndarray):
    """
    Structured KKT solver for the SVR dual in (alpha, alpha*) form.

    Newton systems of the 2n-variable problem reduce to one n x n system
    (K + diag(S)) w = g bordered by the equality row, so each interior-point
    iteration costs a single Cholesky factorization of the kernel size.
    """
    n = K.shape[0]
    ones = np.ones(n)

    def kktsolver(W):
        di = np.array(W["di"]).ravel()
        di2 = di**2
        delta = di2[: 2 * n] + di2[2 * n:]
        d1, d2 = delta[:n], delta[n:]
        total = d1 + d2
        M = K + np.diag(d1 * d2 / total)

        for jitter in _JITTER:
            try:
                factor = cho_factor(M + jitter * np.eye(n), lower=True, check_finite=False)
                break
            except LinAlgError:
                continue
        else:
            raise ArithmeticError("kernel system is not positive definite")
        m_ones = cho_solve(factor, ones, check_finite=False)
        denom = float(ones @ m_ones)

        def solve(x, y, z):
            bx = np.array(x).ravel()
            bz = np.array(z).ravel()
            r = bx - bz[: 2 * n] * di2[: 2 * n] + bz[2 * n:] * di2[2 * n:]
            r1, r2 = r[:n], r[n:]
            m_g = cho_solve(factor, (d2 * r1 - d1 * r2) / total, check_finite=False)
            uy = (float(ones @ m_g) - y[0]) / denom
            w = m_g - uy * m_ones
            x1 = (d2 * w + r1 + r2) / total
            ux = np.concatenate([x1, x1 - w])
            uz = (np.concatenate([-ux, ux]) - bz) * di
            x[:] = matrix(ux)
            y[0] = uy
            z[:] = matrix(uz)

        return solve

    return kktsolver


def _solve_dual(K: np.ndarray, y: np.ndarray, hp: SvrHyperparams, tol: float, max_iter: int) -> _DualSolution:
    """
    min 1/2 b'Kb + eps sum(a + a*) - y'b  with  b = a - a*,  0 <= a, a* <= C,  sum(b) = 0.

    Coefficients the solver leaves at a bound (slack below its multiplier)
    are snapped onto it, so non-support vectors carry an exact zero.
    """
    n = K.shape[0]
    C = hp.c_penalty

    def P(x, out, alpha=1.0, beta=0.0):
        v = np.array(x).ravel()
        kw = K @ (v[:n] - v[n:])
        out[:] = matrix(alpha * np.concatenate([kw, -kw]) + beta * np.array(out).ravel())

    def G(x, out, alpha=1.0, beta=0.0, trans="N"):
        v = np.array(x).ravel()
        gv = np.concatenate([-v, v]) if trans == "N" else v[2 * n:] - v[: 2 * n]
        out[:] = matrix(alpha * gv + beta * np.array(out).ravel())

    def A(x, out, alpha=1.0, beta=0.0, trans="N"):
        v = np.array(x).ravel()
        if trans == "N":
            out[0] = alpha * float(v[:n].sum() - v[n:].sum()) + beta * out[0]
        else:
            av = np.concatenate([np.full(n, v[0]), np.full(n, -v[0])])
            out[:] = matrix(alpha * av + beta * np.array(out).ravel())

    q = np.concatenate([hp.epsilon_tube - y, hp.epsilon_tube + y])
    h = np.concatenate([np.zeros(2 * n), np.full(2 * n, C)])
    sol = solvers.coneqp(
        P,
        matrix(q),
        G=G,
        h=matrix(h),
        dims={"l": 4 * n, "q": [], "s": []},
        A=A,
        b=matrix(0.0, (1, 1)),
        kktsolver=_kkt_factory(K),
        options={**_QP_OPTIONS, "maxiters": max_iter},
    )

    iterations = int(sol["iterations"])
    if sol["status"] != "optimal":
        rel_gap = sol["relative gap"]
        residual = max(np.inf if v is None else v for v in (sol["primal infeasibility"], sol["dual infeasibility"]))
        if rel_gap is None or rel_gap > tol or residual > tol:
            raise NoConvergence(
                f"SVR dual stopped after {iterations} of {max_iter} iterations above tol={tol} "
                f"(relative gap {rel_gap}, residual {residual:.3g}; "
                f"C={C}, gamma={hp.gamma}, epsilon={hp.epsilon_tube}, n={n})",
                max_iter=max_iter,
                n_iter=iterations,
            )
        logger.debug(f"SVR dual accepted at relative gap {rel_gap:.3g} after {iterations} iterations")

    x = np.array(sol["x"]).ravel()
    z = np.array(sol["z"]).ravel()
    x = np.where(x < z[: 2 * n], 0.0, x)
    x = np.where(C - x < z[2 * n:], C, x)
    return _DualSolution(beta=x[:n] - x[n:], bias=float(sol["y"][0]), iterations=iterations)


# =============================================================================
# Training and prediction
# =============================================================================

def train(
    samples: Sequence[PerfSample],
    hp: SvrHyperparams = REFERENCE_HYPERPARAMS,
    seed: int = settings.default_seed,
    *,
    tol: float = settings.svr_tol,
    max_iter: int = settings.svr_max_iter,
    allow_degenerate: bool = False,
) -> PerfModel:
    """
    Fit the epsilon-SVR on standardized features and targets.

    The interior-point solver draws no random numbers, so the result depends
    only on the (canonically ordered) samples and hyperparameters; the seed is
    recorded in the model document for provenance. `max_iter` caps the
    interior-point iterations, each a full pass over the kernel matrix.

    Raises:
        TooFewSamples: fewer than two samples.
        DegenerateData: every sample has the same feature vector while the
            targets spread wider than the tube (pass allow_degenerate=True to
            solve the dual anyway; both coefficients then saturate at +-C).
        NoConvergence: the solver stopped with its duality gap or residuals
            above `tol`; the error carries the iterations used.
    """
    if len(samples) < 2:
        raise TooFewSamples(f"SVR training needs at least 2 samples, got {len(samples)}")

    ordered = _canonical(samples)
    X, y = _arrays(ordered)
    scaler = FeatureScaler.fit(X, y)
    Xs = scaler.transform_features(X)
    ys = scaler.transform_target(y)

    if len(scaler.degenerate_features) == len(FEATURE_NAMES):
        spread = float(ys.max() - ys.min())
        if spread > 2 * hp.epsilon_tube and not allow_degenerate:
            raise DegenerateData(
                f"all {len(ordered)} samples share one feature vector but targets span "
                f"{spread:.4g} scaled units (> 2 x epsilon = {2 * hp.epsilon_tube:.4g})"
            )

    dual = _solve_dual(rbf_kernel(Xs, gamma=hp.gamma), ys, hp, tol, max_iter)

    keep = dual.beta != 0
    model = PerfModel(
        support_vectors=[tuple(float(v) for v in row) for row in Xs[keep]],
        dual_coeffs=[float(b) for b in dual.beta[keep]],
        bias=dual.bias,
        hyperparams=hp,
        scaler=scaler,
        n_train=len(ordered),
        train_seed=seed,
        fingerprint=fingerprint(ordered),
    )
    logger.info(
        f"SVR trained on {len(ordered)} samples: {model.n_support} support vectors, "
        f"{dual.iterations} solver iterations "
        f"(C={hp.c_penalty:g}, gamma={hp.gamma:g}, epsilon={hp.epsilon_tube:g})"
    )
    return model


def decision_scaled(model: PerfModel, features_scaled: np.ndarray) -> np.ndarray:
    """Kernel expansion in standardized target units."""
    Xs = np.atleast_2d(np.asarray(features_scaled, dtype=float))
    if not model.dual_coeffs:
        return np.full(Xs.shape[0], model.bias)
    K = rbf_kernel(Xs, np.array(model.support_vectors), gamma=model.hyperparams.gamma)
    return K @ np.array(model.dual_coeffs) + model.bias


def predict_many(model: PerfModel, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Predicted seconds for rows of (freq_ghz, cores, input_size), plus a clamp mask."""
    Xs = model.scaler.transform_features(np.atleast_2d(features))
    times = model.scaler.inverse_target(decision_scaled(model, Xs))
    clamped = times < MIN_TIME_S
    if clamped.any():
        logger.warning(f"{int(clamped.sum())} predicted time(s) below {MIN_TIME_S} s clamped to the floor")
        times = np.where(clamped, MIN_TIME_S, times)
    return times, clamped


def predict_with_flag(model: PerfModel, freq_ghz: float, cores: int, input_size: float) -> TimePrediction:
    times, clamped = predict_many(model, np.array([[freq_ghz, cores, input_size]], dtype=float))
    return TimePrediction(float(times[0]), bool(clamped[0]))


def predict(model: PerfModel, freq_ghz: float, cores: int, input_size: float) -> float:
    """Predicted execution time in seconds, floored at MIN_TIME_S."""
    return predict_with_flag(model, freq_ghz, cores, input_size).time_s


def evaluate(model: PerfModel, samples: Sequence[PerfSample]) -> tuple[float, float]:
    """(MAE in seconds, PAE fraction) of a trained model on the given samples."""
    if not samples:
        raise TooFewSamples("evaluation needs at least one sample")
    X, y = _arrays(samples)
    predicted, _ = predict_many(model, X)
    return float(np.mean(np.abs(y - predicted))), percentage_absolute_error(y, predicted)


# =============================================================================
# Validation
# =============================================================================

def holdout_split(
    samples: Sequence[PerfSample],
    train_fraction: float = settings.train_fraction,
    seed: int = settings.default_seed,
) -> tuple[list[PerfSample], list[PerfSample]]:
    """Seeded shuffle, then split into non-empty train and test parts."""
    if not 0 < train_fraction < 1:
        raise InvalidInput(f"train_fraction must be in (0, 1), got {train_fraction}")
    if len(samples) < 2:
        raise TooFewSamples(f"holdout split needs at least 2 samples, got {len(samples)}")

    ordered = _canonical(samples)
    order = np.random.default_rng(seed).permutation(len(ordered))
    n_train = min(max(int(round(len(ordered) * train_fraction)), 1), len(ordered) - 1)
    train_part = [ordered[i] for i in order[:n_train]]
    test_part = [ordered[i] for i in order[n_train:]]
    return train_part, test_part


def cross_validate(
    samples: Sequence[PerfSample],
    hp: SvrHyperparams = REFERENCE_HYPERPARAMS,
    folds: int = settings.kfold,
    seed: int = settings.default_seed,
    **train_kwargs,
) -> CvReport:
    """k-fold CV: per-fold MAE and PAE on held-out predictions, averaged over folds."""
    if folds < 2:
        raise InvalidInput(f"cross-validation needs at least 2 folds, got {folds}")
    if len(samples) < folds:
        raise TooFewSamples(f"{folds}-fold cross-validation needs at least {folds} samples, got {len(samples)}")

    ordered = _canonical(samples)
    assignment = _fold_assignment(len(ordered), folds, seed)

    maes, paes = [], []
    for k in range(folds):
        train_part = [s for s, a in zip(ordered, assignment) if a != k]
        test_part = [s for s, a in zip(ordered, assignment) if a == k]
        model = train(train_part, hp, seed, **train_kwargs)
        mae, pae = evaluate(model, test_part)
        maes.append(mae)
        paes.append(pae)

    report = CvReport(folds=folds, mae_s=float(np.mean(maes)), pae=float(np.mean(paes)))
    logger.info(
        f"{folds}-fold CV (C={hp.c_penalty:g}, gamma={hp.gamma:g}, epsilon={hp.epsilon_tube:g}): "
        f"MAE={report.mae_s:.4g} s, PAE={report.pae * 100:.2f}%"
    )
    return report


def _cv_or_failure(samples, hp, folds, seed, train_kwargs) -> CvReport | str:
    try:
        return cross_validate(samples, hp, folds, seed, **train_kwargs)
    except EnergyCopilotError as exc:
        return f"{type(exc).__name__}: {exc}"


def grid_search(
    samples: Sequence[PerfSample],
    grid: Sequence[SvrHyperparams] = DEFAULT_GRID,
    folds: int = settings.kfold,
    seed: int = settings.default_seed,
    n_jobs: int = settings.grid_jobs,
    **train_kwargs,
) -> tuple[SvrHyperparams, CvReport]:
    """
    Pick the grid point with the lowest k-fold CV MAE.

    Every point sees the same fold assignment. Ties go to the smaller penalty,
    then the smaller gamma. Points whose training fails are logged and skipped.
    """
    if not grid:
        raise InvalidInput("grid search needs at least one hyperparameter point")
    if folds < 2:
        raise InvalidInput(f"cross-validation needs at least 2 folds, got {folds}")
    if len(samples) < folds:
        raise TooFewSamples(f"{folds}-fold grid search needs at least {folds} samples, got {len(samples)}")

    outcomes = Parallel(n_jobs=n_jobs)(
        delayed(_cv_or_failure)(samples, hp, folds, seed, train_kwargs) for hp in grid
    )

    scored: list[tuple[tuple, SvrHyperparams, CvReport]] = []
    failures: list[tuple[SvrHyperparams, str]] = []
    for index, (hp, outcome) in enumerate(zip(grid, outcomes)):
        if isinstance(outcome, str):
            logger.warning(f"Grid point {hp} skipped: {outcome}")
            failures.append((hp, outcome))
            continue
        key = (outcome.mae_s, hp.c_penalty, hp.gamma, hp.epsilon_tube, index)
        scored.append((key, hp, outcome))

    if not scored:
        raise AllGridPointsFailed(f"all {len(grid)} grid points failed to train", failures)

    _, best_hp, best_report = min(scored, key=lambda item: item[0])
    logger.info(
        f"Grid search over {len(grid)} points ({len(failures)} failed) selected "
        f"C={best_hp.c_penalty:g}, gamma={best_hp.gamma:g}, epsilon={best_hp.epsilon_tube:g} "
        f"with MAE={best_report.mae_s:.4g} s"
    )
    return best_hp, best_report
