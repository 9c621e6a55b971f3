"""Small bias-free ReLU networks with intertwining weights.

F(x) = W^L relu(W^{L-1} relu(... relu(W^1 x))), with W^l of shape
(kappa_{l+1}, kappa_l).  Layer l is equivariant when
W^l psi_l(g) = psi_{l+1}(g) W^l, which is the image of the intertwining
average with psi_{l+1} on the row side and psi_l on the column side.
Hidden representations must be permutation representations so they commute
with the element-wise activation.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from symgap.groups import Representation
from symgap.symmetrize import IntertwinerProjector, build_intertwiner_projector


class SpecError(ValueError):
    pass


def relu(z):
    return np.maximum(z, 0.0)


@dataclass(frozen=True, eq=False)
class MlpSpec:
    reps: tuple[Representation, ...]       # psi_1 (input) .. psi_{L+1} (output)
    weights: tuple[np.ndarray, ...]        # W^1 .. W^L

    def __post_init__(self):
        reps, weights = tuple(self.reps), tuple(np.asarray(W, dtype=float) for W in self.weights)
        object.__setattr__(self, "reps", reps)
        object.__setattr__(self, "weights", weights)
        if len(reps) != len(weights) + 1 or not weights:
            raise SpecError("need L >= 1 weight matrices and L + 1 representations")
        group = reps[0].group
        for r in reps:
            if r.group != group:
                raise SpecError("all layer representations must share one group")
        for l, W in enumerate(weights):
            if W.shape != (reps[l + 1].dim, reps[l].dim):
                raise SpecError(f"layer {l + 1}: weight shape {W.shape} does not match "
                                f"({reps[l + 1].dim}, {reps[l].dim})")
        for r in reps[1:-1]:
            if not r.is_permutation():
                raise SpecError(f"hidden representation {r.name} is not a permutation representation "
                                "and need not commute with ReLU")

    @property
    def depth(self) -> int:
        return len(self.weights)

    @property
    def widths(self) -> list[int]:
        return [r.dim for r in self.reps]

    def with_weights(self, weights) -> "MlpSpec":
        return dataclasses.replace(self, weights=tuple(weights))


def init_spec(reps: Sequence[Representation], rng: np.random.Generator, scale: float = 1.0) -> MlpSpec:
    """He-style Gaussian initialisation (not projected)."""
    weights = [scale * rng.standard_normal((b.dim, a.dim)) * np.sqrt(2.0 / a.dim)
               for a, b in zip(reps[:-1], reps[1:])]
    return MlpSpec(tuple(reps), tuple(weights))


def build_layer_projectors(spec: MlpSpec) -> list[IntertwinerProjector]:
    return [build_intertwiner_projector(spec.reps[l + 1], spec.reps[l]) for l in range(spec.depth)]


def forward(spec: MlpSpec, x: np.ndarray) -> np.ndarray:
    """Network output for one input (kappa_1,) or a batch (B, kappa_1)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.widths[0]:
        raise SpecError(f"input width {x.shape[-1]} does not match {spec.widths[0]}")
    h = x
    for l, W in enumerate(spec.weights):
        h = h @ W.T
        if l < spec.depth - 1:
            h = relu(h)
    return h


def _forward_cache(spec, X):
    pre, post = [], [X]
    h = X
    for l, W in enumerate(spec.weights):
        z = h @ W.T
        pre.append(z)
        h = relu(z) if l < spec.depth - 1 else z
        post.append(h)
    return pre, post


def mse_loss(spec: MlpSpec, X: np.ndarray, Y: np.ndarray) -> float:
    """Batch mean of ||F(x) - y||^2."""
    return float(np.mean(np.sum((forward(spec, X) - Y) ** 2, axis=1)))


def loss_and_gradients(spec: MlpSpec, X: np.ndarray, Y: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """Backpropagation for the batch-mean squared loss (ReLU derivative 0 at 0)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    B = X.shape[0]
    pre, post = _forward_cache(spec, X)
    resid = post[-1] - Y
    loss = float(np.mean(np.sum(resid ** 2, axis=1)))
    delta = 2.0 * resid / B
    grads = [None] * spec.depth
    for l in range(spec.depth - 1, -1, -1):
        grads[l] = delta.T @ post[l]
        if l > 0:
            delta = (delta @ spec.weights[l]) * (pre[l - 1] > 0)
    return loss, grads


def equivariance_penalty(spec: MlpSpec, projectors: Sequence[IntertwinerProjector]) -> float:
    """Sum over layers of ||W_perp||_F^2."""
    return float(sum(np.sum(P.complement(W) ** 2) for P, W in zip(projectors, spec.weights)))


def penalty_gradients(spec: MlpSpec, projectors) -> list[np.ndarray]:
    # complement is a self-adjoint projection, so d||P W||^2 / dW = 2 P W
    return [2.0 * P.complement(W) for P, W in zip(projectors, spec.weights)]


def gd_step(spec: MlpSpec, grads, eta: float) -> MlpSpec:
    return spec.with_weights(W - eta * G for W, G in zip(spec.weights, grads))


def projected_gd_step(spec: MlpSpec, grads, eta: float, projectors) -> MlpSpec:
    """Plain step followed by projecting every layer onto its intertwiners."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    return spec.with_weights(P.project(W - eta * G) for P, W, G in zip(projectors, spec.weights, grads))


def project_spec(spec: MlpSpec, projectors) -> MlpSpec:
    return spec.with_weights(P.project(W) for P, W in zip(projectors, spec.weights))


def max_layer_defect(spec: MlpSpec, projectors) -> float:
    return float(max(np.linalg.norm(P.complement(W)) for P, W in zip(projectors, spec.weights)))


# --------------------------------------------------------------------------
# equivariance measurements


def equivariance_defect(spec: MlpSpec, X: np.ndarray) -> float:
    """max over enumerated g and rows x of ||F(phi(g) x) - psi_out(g) F(x)|| / (1 + ||F(x)||)."""
    phi, psi = spec.reps[0], spec.reps[-1]
    out = forward(spec, X)
    scale = 1.0 + np.linalg.norm(out, axis=1)
    worst = 0.0
    for g in phi.group.elements():
        lhs = forward(spec, X @ phi.matrix(g).T)
        rhs = out @ psi.matrix(g).T
        worst = max(worst, float(np.max(np.linalg.norm(lhs - rhs, axis=1) / scale)))
    return worst


def _orbit_average(fn, phi, psi, X, rng, samples):
    G = phi.group
    elems = G.elements() if G.finite else G.sample_many(rng, samples)
    acc = 0.0
    for g in elems:
        acc = acc + fn(X @ phi.matrix(g).T) @ psi.matrix(g)
    return acc / len(elems)


def symmetrisation_error(spec: MlpSpec, mc_points: int, rng: np.random.Generator,
                         samples: int = 256) -> tuple[float, float]:
    """Monte Carlo E||F(X) - QF(X)||^2 for X ~ N(0, I), with standard error."""
    X = rng.standard_normal((mc_points, spec.widths[0]))
    fn = lambda Z: forward(spec, Z)
    diff = fn(X) - _orbit_average(fn, spec.reps[0], spec.reps[-1], X, rng, samples)
    sq = np.sum(diff ** 2, axis=1)
    return float(sq.mean()), float(sq.std(ddof=1) / np.sqrt(mc_points))


@dataclass
class EquivarianceError:
    estimate: float
    stderr: float
    bound: float

    def within_bound(self, n_se: float = 3.0) -> bool:
        return self.estimate <= self.bound + n_se * self.stderr


def equivariance_error(W: np.ndarray, phi: Representation, psi_out: Representation,
                       mc_points: int = 20_000, seed=None, lipschitz: float = 1.0,
                       samples: int = 256) -> EquivarianceError:
    """Distance of the layer x -> relu(W x) from its symmetrisation, and the
    bound 2 C^2 ||W_perp||_F^2.

    Single layer only: `W` is a (k, d) matrix, or an MlpSpec of depth 1.
    """
    if isinstance(W, MlpSpec):
        if W.depth != 1:
            raise SpecError("the bound is only established for a single layer")
        W = W.weights[0]
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape != (psi_out.dim, phi.dim):
        raise SpecError(f"single-layer weight must have shape ({psi_out.dim}, {phi.dim})")
    if not psi_out.is_permutation():
        raise SpecError("output representation must commute with the activation")
    rng = np.random.default_rng(seed)
    proj = build_intertwiner_projector(psi_out, phi)
    X = rng.standard_normal((mc_points, phi.dim))
    fn = lambda Z: relu(Z @ W.T)
    diff = fn(X) - _orbit_average(fn, phi, psi_out, X, rng, samples)
    sq = np.sum(diff ** 2, axis=1)
    bound = 2.0 * lipschitz ** 2 * float(np.sum(proj.complement(W) ** 2))
    return EquivarianceError(float(sq.mean()), float(sq.std(ddof=1) / np.sqrt(mc_points)), bound)


# --------------------------------------------------------------------------
# training


@dataclass
class StepRecord:
    step: int
    loss: float
    penalty: float
    max_layer_defect: float
    equivariance_error: float | None = None

    def as_record(self) -> dict:
        eq = "" if self.equivariance_error is None else repr(self.equivariance_error)
        return {"step": self.step, "loss": repr(self.loss), "penalty": repr(self.penalty),
                "max_layer_defect": repr(self.max_layer_defect), "equivariance_error": eq}


TRAIN_COLUMNS = ("step", "loss", "penalty", "max_layer_defect", "equivariance_error")


def train(spec: MlpSpec, X: np.ndarray, Y: np.ndarray, eta: float, steps: int, mode: str = "projected",
          lam: float = 1.0, projectors=None, eval_every: int = 0, mc_points: int = 2000,
          seed: int = 0, backtrack: bool = False) -> tuple[MlpSpec, list[StepRecord]]:
    """Full-batch gradient descent in mode "projected", "regularised" or "plain".

    Row 0 is the initial state (after projection in projected mode).  The
    equivariance error column is filled every `eval_every` steps and at the end.
    With `backtrack`, a step that would increase the training objective is
    retried with half the learning rate (up to 30 times).
    """
    if mode not in ("projected", "regularised", "plain"):
        raise ValueError(f"unknown training mode {mode!r}")
    projectors = projectors if projectors is not None else build_layer_projectors(spec)
    if mode == "projected":
        spec = project_spec(spec, projectors)
    eval_rng = np.random.default_rng(seed)

    def record(step, loss):
        eq = None
        if step == steps or (eval_every and step % eval_every == 0):
            eq = symmetrisation_error(spec, mc_points, eval_rng)[0]
        return StepRecord(step, loss, equivariance_penalty(spec, projectors),
                          max_layer_defect(spec, projectors), eq)

    def objective(s):
        value = mse_loss(s, X, Y)
        return value + lam * equivariance_penalty(s, projectors) if mode == "regularised" else value

    def step_from(s, lr):
        _, grads = loss_and_gradients(s, X, Y)
        if mode == "projected":
            return projected_gd_step(s, grads, lr, projectors)
        if mode == "regularised":
            grads = [G + lam * P for G, P in zip(grads, penalty_gradients(s, projectors))]
        return gd_step(s, grads, lr)

    history = [record(0, mse_loss(spec, X, Y))]
    for step in range(1, steps + 1):
        candidate = step_from(spec, eta)
        if backtrack:
            current = objective(spec)
            for _ in range(30):
                if objective(candidate) <= current:
                    break
                eta *= 0.5
                candidate = step_from(spec, eta)
        spec = candidate
        history.append(record(step, mse_loss(spec, X, Y)))
    return spec, history
