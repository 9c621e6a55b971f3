"""Monte Carlo harness for the least-squares generalisation gap.

Each trial draws its own generator from ``SeedSequence(seed, spawn_key=(...))``
so results do not depend on how trials are batched or ordered; reductions
run over arrays indexed by trial.
"""
from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

import numpy as np

from symgap import theory
from symgap.groups import Representation
from symgap.symmetrize import (IntertwinerProjector, VectorAverager,
                               build_intertwiner_projector, build_vector_averager)

# trials per linear-algebra batch
_BATCH = 2048


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based child stream: identical for a given (seed, key)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(key))))


def standard_error(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    return float(values.std(ddof=1) / np.sqrt(len(values)))


class NoEquivariantTargetError(ValueError):
    pass


def sample_equivariant_target(phi: Representation, psi: Representation, scale: float,
                              seed=None) -> np.ndarray:
    """A random d x k intertwiner with Frobenius norm `scale`."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    proj = build_intertwiner_projector(phi, psi)
    if proj.trace < 0.5:
        raise NoEquivariantTargetError(f"no nonzero intertwiners for ({phi.name}, {psi.name})")
    rng = np.random.default_rng(seed)
    for _ in range(100):
        Theta = proj.project(rng.standard_normal((phi.dim, psi.dim)))
        norm = np.linalg.norm(Theta)
        if norm > 1e-8:
            return Theta * (scale / norm)
    raise NoEquivariantTargetError("failed to draw a nonzero intertwiner")


def pinv(A: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via SVD; works on stacks (..., n, d).

    Singular values below max(n, d) * eps * s_max are treated as zero.
    """
    A = np.asarray(A, dtype=float)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    cutoff = max(A.shape[-2:]) * np.finfo(float).eps * s[..., :1]
    inv_s = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return np.swapaxes(Vt, -1, -2) @ (inv_s[..., :, None] * np.swapaxes(U, -1, -2))


def min_norm_least_squares(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """W = X^+ Y, the minimum-Frobenius-norm minimiser of ||Y - X W||."""
    Y = np.asarray(Y, dtype=float)
    squeeze = Y.ndim == np.asarray(X).ndim - 1
    W = pinv(X) @ (Y[..., None] if squeeze else Y)
    return W[..., 0] if squeeze else W


def empirical_gap(W: np.ndarray, proj: IntertwinerProjector, sigma_x: float) -> float | np.ndarray:
    """sigma_x^2 ||W_perp||_F^2: the exact gap of W against its average under isotropic inputs."""
    perp = proj.complement(W)
    return sigma_x ** 2 * np.sum(perp ** 2, axis=(-2, -1))


# --------------------------------------------------------------------------
# tasks and reports


@dataclass
class RegressionTask:
    phi: Representation
    psi: Representation
    n: int
    Theta: np.ndarray
    sigma_x: float = 1.0
    sigma_xi: float = 1.0
    seed: int = 0
    group_name: str = ""

    def __post_init__(self):
        self.Theta = np.asarray(self.Theta, dtype=float).reshape(self.d, self.k)
        if not self.group_name:
            self.group_name = self.phi.group.name
        norm = np.linalg.norm(self.Theta)
        if np.linalg.norm(self.projector.complement(self.Theta)) > 1e-8 * max(norm, 1.0):
            raise theory.NotEquivariantError("task target is not equivariant")

    @property
    def d(self) -> int:
        return self.phi.dim

    @property
    def k(self) -> int:
        return self.psi.dim

    @property
    def projector(self) -> IntertwinerProjector:
        cached = self.__dict__.get("_projector")
        if cached is None or cached.phi is not self.phi or cached.psi is not self.psi:
            cached = build_intertwiner_projector(self.phi, self.psi)
            self.__dict__["_projector"] = cached
        return cached

    def with_n(self, n: int) -> "RegressionTask":
        return dataclasses.replace(self, n=n)

    def predicted(self) -> theory.RegimeValue:
        return theory.predicted_gap_equivariant(self.n, self.d, self.k, self.sigma_x, self.sigma_xi,
                                                self.Theta, self.phi, self.psi)


def make_task(phi: Representation, psi: Representation, n: int, sigma_x: float = 1.0,
              sigma_xi: float = 1.0, theta_norm: float = 1.0, seed: int = 0) -> RegressionTask:
    """Task whose target is a random intertwiner drawn from the seed's own stream."""
    Theta = sample_equivariant_target(phi, psi, theta_norm, trial_rng(seed, 0xCAFE))
    return RegressionTask(phi, psi, n, Theta, sigma_x, sigma_xi, seed)


def draw_data(task: RegressionTask, trial: int) -> tuple[np.ndarray, np.ndarray]:
    """Training set for one trial: X ~ N(0, sigma_x^2 I), Y = X Theta + xi."""
    rng = trial_rng(task.seed, task.n, trial)
    X = task.sigma_x * rng.standard_normal((task.n, task.d))
    xi = task.sigma_xi * rng.standard_normal((task.n, task.k))
    return X, X @ task.Theta + xi


def trial_gaps(task: RegressionTask, trials: int) -> np.ndarray:
    """Per-trial empirical gaps of the fitted min-norm estimator, indexed by trial."""
    gaps = np.empty(trials)
    for start in range(0, trials, _BATCH):
        stop = min(start + _BATCH, trials)
        Xs = np.empty((stop - start, task.n, task.d))
        Ys = np.empty((stop - start, task.n, task.k))
        for j, t in enumerate(range(start, stop)):
            Xs[j], Ys[j] = draw_data(task, t)
        W = min_norm_least_squares(Xs, Ys)
        gaps[start:stop] = empirical_gap(W, task.projector, task.sigma_x)
    return gaps


REPORT_COLUMNS = (
    "group", "phi", "psi", "n", "d", "k", "trials", "regime",
    "empirical_gap_mean", "empirical_gap_stderr", "empirical_gap_median",
    "empirical_gap_q25", "empirical_gap_q75",
    "predicted_gap", "noiseless_term", "noise_term", "z_score", "pass", "wall_time_s",
)


@dataclass
class ReportRow:
    group: str
    phi: str
    psi: str
    n: int
    d: int
    k: int
    trials: int
    regime: str
    empirical_gap_mean: float
    empirical_gap_stderr: float
    empirical_gap_median: float
    empirical_gap_q25: float
    empirical_gap_q75: float
    predicted: theory.RegimeValue
    wall_time_s: float
    tolerance_se: float = 3.0

    @property
    def z_score(self) -> float | None:
        if self.predicted.infinite:
            return None
        if self.empirical_gap_stderr == 0.0:
            return 0.0 if abs(self.empirical_gap_mean - self.predicted.value) <= 1e-12 else float("inf")
        return (self.empirical_gap_mean - self.predicted.value) / self.empirical_gap_stderr

    @property
    def passed(self) -> bool | None:
        """3-standard-error agreement; None in the threshold regime (ordinal checks only)."""
        if self.regime == theory.THRESHOLD or self.predicted.infinite:
            return None
        pred = self.predicted.value
        tol = self.tolerance_se * self.empirical_gap_stderr
        # degenerate (noiseless) cases have zero spread
        return abs(self.empirical_gap_mean - pred) <= max(tol, 1e-12 * max(1.0, abs(pred)))

    def as_record(self) -> dict:
        def fmt(v):
            return "" if v is None else repr(float(v))
        z = self.z_score
        return {
            "group": self.group, "phi": self.phi, "psi": self.psi,
            "n": self.n, "d": self.d, "k": self.k, "trials": self.trials, "regime": self.regime,
            "empirical_gap_mean": fmt(self.empirical_gap_mean),
            "empirical_gap_stderr": fmt(self.empirical_gap_stderr),
            "empirical_gap_median": fmt(self.empirical_gap_median),
            "empirical_gap_q25": fmt(self.empirical_gap_q25),
            "empirical_gap_q75": fmt(self.empirical_gap_q75),
            "predicted_gap": self.predicted.label(),
            "noiseless_term": fmt(self.predicted.noiseless_term),
            "noise_term": "inf" if self.predicted.infinite and self.predicted.noise_term is None
                          else fmt(self.predicted.noise_term),
            "z_score": fmt(z),
            "pass": "" if self.passed is None else str(self.passed).lower(),
            "wall_time_s": f"{self.wall_time_s:.3f}",
        }


@dataclass
class ExperimentReport:
    rows: list[ReportRow] = field(default_factory=list)
    seed: int = 0
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed is not False for r in self.rows)

    def records(self) -> list[dict]:
        return [r.as_record() for r in self.rows]


def run_gap_experiment(task: RegressionTask, trials: int = 20_000) -> ReportRow:
    """Fit `trials` independent min-norm estimators and compare the mean gap with theory."""
    if trials < 2:
        raise ValueError("need at least two trials for a standard error")
    t0 = time.perf_counter()
    gaps = trial_gaps(task, trials)
    q25, med, q75 = np.quantile(gaps, [0.25, 0.5, 0.75])
    return ReportRow(
        group=task.group_name, phi=task.phi.name, psi=task.psi.name,
        n=task.n, d=task.d, k=task.k, trials=trials, regime=theory.regime_of(task.n, task.d),
        empirical_gap_mean=float(gaps.mean()), empirical_gap_stderr=standard_error(gaps),
        empirical_gap_median=float(med), empirical_gap_q25=float(q25), empirical_gap_q75=float(q75),
        predicted=task.predicted(), wall_time_s=time.perf_counter() - t0,
    )


def sweep_over_n(template: RegressionTask, n_values, trials: int = 5_000) -> ExperimentReport:
    """One report row per n (the double-descent curve)."""
    rows = [run_gap_experiment(template.with_n(int(n)), trials) for n in n_values]
    return ExperimentReport(rows, seed=template.seed)


# --------------------------------------------------------------------------
# held-out check of the gap identity


def held_out_gap(W: np.ndarray, task: RegressionTask, points: int, rng: np.random.Generator
                 ) -> tuple[float, float]:
    """Fresh-sample estimate of E||Y - W^T X||^2 - E||Y - Wbar^T X||^2 with its SE."""
    Wbar = task.projector.project(W)
    X = task.sigma_x * rng.standard_normal((points, task.d))
    Y = X @ task.Theta + task.sigma_xi * rng.standard_normal((points, task.k))
    diff = np.sum((Y - X @ W) ** 2, axis=1) - np.sum((Y - X @ Wbar) ** 2, axis=1)
    return float(diff.mean()), standard_error(diff)


# --------------------------------------------------------------------------
# appendix-lemma oracles


@dataclass
class WishartOracleResult:
    n: int
    d: int
    trials: int
    mean: np.ndarray
    stderr: np.ndarray
    scalar: float
    scalar_stderr: float
    predicted: theory.RegimeValue
    max_abs_deviation: float | None

    @property
    def offdiag_max_z(self) -> float:
        mask = ~np.eye(self.d, dtype=bool)
        return float(np.max(np.abs(self.mean[mask]) / self.stderr[mask]))

    @property
    def scalar_z(self) -> float | None:
        if self.predicted.infinite:
            return None
        return (self.scalar - self.predicted.value) / self.scalar_stderr

    def passed(self, n_se: float = 3.0) -> bool | None:
        if self.predicted.infinite:
            return None
        return abs(self.scalar_z) <= n_se and self.offdiag_max_z <= n_se


def wishart_pseudoinverse_oracle(n: int, d: int, trials: int = 50_000, seed: int = 0) -> WishartOracleResult:
    """Monte Carlo mean of (X^T X)^+ for n x d standard Gaussian X."""
    total = np.zeros((d, d))
    total_sq = np.zeros((d, d))
    scalars = np.empty(trials)
    for start in range(0, trials, _BATCH):
        stop = min(start + _BATCH, trials)
        X = np.stack([trial_rng(seed, 1, n, d, t).standard_normal((n, d)) for t in range(start, stop)])
        M = pinv(np.swapaxes(X, -1, -2) @ X)
        total += M.sum(axis=0)
        total_sq += (M ** 2).sum(axis=0)
        scalars[start:stop] = np.trace(M, axis1=1, axis2=2) / d
    mean = total / trials
    var = (total_sq - trials * mean ** 2) / (trials - 1)
    stderr = np.sqrt(np.maximum(var, 0.0) / trials)
    pred = theory.r_factor(n, d)
    dev = None if pred.infinite else float(np.abs(mean - pred.value * np.eye(d)).max())
    return WishartOracleResult(n, d, trials, mean, stderr, float(scalars.mean()), standard_error(scalars),
                               pred, dev)


def projection_moment_closed_form(n: int, d: int) -> tuple[float, float, float]:
    beta = n * (d - n) / (d * (d - 1) * (d + 2))
    return beta + n * (n - 1) / (d * (d - 1)), beta, beta


def isotropic_tensor(d: int, alpha: float, beta: float, gamma: float) -> np.ndarray:
    eye = np.eye(d)
    return (alpha * np.einsum("ab,ce->abce", eye, eye) + beta * np.einsum("ac,be->abce", eye, eye)
            + gamma * np.einsum("ae,bc->abce", eye, eye))


@dataclass
class ProjectionOracleResult:
    n: int
    d: int
    trials: int
    mean: np.ndarray                 # d x d x d x d estimate of E[P (x) P]
    stderr: np.ndarray
    fit: tuple[float, float, float]  # alpha, beta, gamma
    fit_stderr: tuple[float, float, float]
    closed_form: tuple[float, float, float]
    trace_sq_defect: float           # max |tr(P)^2 - n^2| over samples

    @property
    def fit_z(self) -> tuple[float, float, float]:
        return tuple((f - c) / s for f, c, s in zip(self.fit, self.closed_form, self.fit_stderr))

    def passed(self, n_se: float = 3.0) -> bool:
        return all(abs(z) <= n_se for z in self.fit_z) and self.trace_sq_defect <= 1e-9


def projection_moment_oracle(n: int, d: int, trials: int = 50_000, seed: int = 0) -> ProjectionOracleResult:
    """Monte Carlo E[P_E (x) P_E] for the row space E of an n x d Gaussian matrix.

    The isotropic coefficients are read off index patterns with distinct
    indices a != b: alpha from E[P_aa P_bb], beta from E[P_ab P_ab] and gamma
    from E[P_ab P_ba], each averaged over all such pairs per sample.
    """
    if not 0 < n < d:
        raise ValueError("need 0 < n < d")
    off = ~np.eye(d, dtype=bool)
    total = np.zeros((d,) * 4)
    total_sq = np.zeros((d,) * 4)
    coefs = np.empty((trials, 3))
    worst = 0.0
    for start in range(0, trials, _BATCH):
        stop = min(start + _BATCH, trials)
        X = np.stack([trial_rng(seed, 2, n, d, t).standard_normal((n, d)) for t in range(start, stop)])
        P = pinv(X) @ X
        PP = np.einsum("tab,tce->tabce", P, P)
        total += PP.sum(axis=0)
        total_sq += (PP ** 2).sum(axis=0)
        diag = np.diagonal(P, axis1=1, axis2=2)
        coefs[start:stop, 0] = (diag[:, :, None] * diag[:, None, :])[:, off].mean(axis=1)
        coefs[start:stop, 1] = (P ** 2)[:, off].mean(axis=1)
        coefs[start:stop, 2] = (P * np.swapaxes(P, 1, 2))[:, off].mean(axis=1)
        worst = max(worst, float(np.abs(np.trace(P, axis1=1, axis2=2) ** 2 - n ** 2).max()))
    mean = total / trials
    var = (total_sq - trials * mean ** 2) / (trials - 1)
    return ProjectionOracleResult(
        n, d, trials, mean, np.sqrt(np.maximum(var, 0.0) / trials),
        tuple(float(c) for c in coefs.mean(axis=0)),
        tuple(standard_error(coefs[:, i]) for i in range(3)),
        projection_moment_closed_form(n, d), worst,
    )


# --------------------------------------------------------------------------
# Rademacher complexity of linear classes


@dataclass
class RademacherResult:
    full: float
    averaged: float
    antisymmetric: float
    full_se: float
    averaged_se: float
    antisymmetric_se: float
    reduction_se: float            # SE of full - averaged
    slack_se: float                # SE of antisymmetric - (full - averaged)
    pointwise_contraction: bool    # ||Phi v|| <= ||v|| on every draw

    @property
    def reduction(self) -> float:
        return self.full - self.averaged

    def sandwich_holds(self, n_se: float = 3.0) -> bool:
        lower = self.reduction >= -n_se * self.reduction_se
        upper = self.reduction <= self.antisymmetric + n_se * self.slack_se
        return bool(lower and upper)


def rademacher_experiment(radius: float, phi: Representation, n: int, mc_sigma: int = 1000,
                          mc_data: int = 1000, seed: int = 0,
                          averager: VectorAverager | None = None) -> RademacherResult:
    """Rademacher complexities of {x -> w^T x : ||w|| <= radius} and its averaged
    and anti-symmetric parts, under standard Gaussian data.

    The supremum over the ball is closed form: radius * ||v|| with
    v = (1/n) sum_i s_i x_i (projected by Phi or I - Phi for the other classes).
    """
    avg = averager if averager is not None else build_vector_averager(phi)
    Phi = avg.matrix
    d = phi.dim
    per_data = np.empty((mc_data, 3))
    contraction = True
    for t in range(mc_data):
        rng = trial_rng(seed, 3, n, t)
        X = rng.standard_normal((n, d))
        signs = rng.choice(np.array([-1.0, 1.0]), size=(mc_sigma, n))
        V = signs @ X / n
        full = np.linalg.norm(V, axis=1)
        sym = np.linalg.norm(V @ Phi.T, axis=1)
        anti = np.linalg.norm(V - V @ Phi.T, axis=1)
        contraction &= bool(np.all(sym <= full + 1e-12))
        per_data[t] = radius * np.array([full.mean(), sym.mean(), anti.mean()])
    means = per_data.mean(axis=0)
    ses = [standard_error(per_data[:, i]) for i in range(3)]
    reduction = per_data[:, 0] - per_data[:, 1]
    slack = per_data[:, 2] - reduction
    return RademacherResult(float(means[0]), float(means[1]), float(means[2]), *ses,
                            standard_error(reduction), standard_error(slack), contraction)
