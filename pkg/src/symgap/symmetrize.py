"""Group-averaging operators on vectors, matrices and functions.

The intertwining average of a d x k matrix W is the Haar mean of
phi(g) W psi(g)^-1.  It is stored as the dense 4-tensor

    T[a, b, c, e] = mean_g phi(g)[a, c] * psi(g)[b, e]

so that the projection is ``einsum("abce,ce->ab", T, W)``.  Its image consists
of the matrices W with phi(g) W = W psi(g), i.e. linear maps x -> W^T x that
are equivariant from phi to psi.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

from symgap.groups import GroupMismatchError, Representation, trivial_rep


def _same_group(phi: Representation, psi: Representation) -> None:
    if phi.group != psi.group:
        raise GroupMismatchError(f"{phi.name} and {psi.name} act on different groups "
                                 f"({phi.group.name} vs {psi.group.name})")


@dataclass(frozen=True, eq=False)
class VectorAverager:
    phi: Representation
    matrix: np.ndarray

    @property
    def complement_matrix(self) -> np.ndarray:
        return np.eye(self.phi.dim) - self.matrix

    def __call__(self, w: np.ndarray) -> np.ndarray:
        return self.matrix @ w


def build_vector_averager(phi: Representation) -> VectorAverager:
    return VectorAverager(phi, phi.node_matrices.mean(axis=0))


@dataclass(frozen=True, eq=False)
class IntertwinerProjector:
    phi: Representation
    psi: Representation
    tensor: np.ndarray

    @property
    def d(self) -> int:
        return self.phi.dim

    @property
    def k(self) -> int:
        return self.psi.dim

    @cached_property
    def matrix(self) -> np.ndarray:
        """The operator flattened to a (d*k, d*k) matrix acting on row-major vec(W)."""
        dk = self.d * self.k
        return self.tensor.reshape(dk, dk)

    def _check(self, W: np.ndarray) -> np.ndarray:
        W = np.asarray(W, dtype=float)
        if W.shape[-2:] != (self.d, self.k):
            raise ValueError(f"expected a {self.d}x{self.k} matrix, got shape {W.shape}")
        return W

    def project(self, W: np.ndarray) -> np.ndarray:
        """Intertwining average; accepts a single matrix or a stack (..., d, k)."""
        W = self._check(W)
        flat = W.reshape(*W.shape[:-2], self.d * self.k)
        return (flat @ self.matrix.T).reshape(W.shape)

    def complement(self, W: np.ndarray) -> np.ndarray:
        W = self._check(W)
        return W - self.project(W)

    @property
    def trace(self) -> float:
        """Dimension of the intertwiner space (trace of an orthogonal projection)."""
        return float(np.trace(self.matrix))


def build_intertwiner_projector(phi: Representation, psi: Representation) -> IntertwinerProjector:
    _same_group(phi, psi)
    P = phi.node_matrices
    Q = psi.node_matrices
    tensor = np.einsum("gac,gbe->abce", P, Q) / P.shape[0]
    return IntertwinerProjector(phi, psi, tensor)


def project(proj: IntertwinerProjector, W: np.ndarray) -> np.ndarray:
    return proj.project(W)


def complement(proj: IntertwinerProjector, W: np.ndarray) -> np.ndarray:
    return proj.complement(W)


def character_inner_product(phi: Representation, psi: Representation) -> float:
    """Haar mean of chi_phi(g) * chi_psi(g), the dimension of the intertwiner space."""
    _same_group(phi, psi)
    return float(np.mean(phi.node_characters * psi.node_characters))


def dim_A(phi: Representation, psi: Representation) -> float:
    """Codimension d*k - <chi_psi, chi_phi> of the equivariant linear maps."""
    return phi.dim * psi.dim - character_inner_product(phi, psi)


def dim_S(phi: Representation, psi: Representation) -> float:
    return character_inner_product(phi, psi)


def j_matrix(phi: Representation, psi: Representation) -> np.ndarray:
    """k x k matrix mean_g (chi_phi(g) psi(g) + psi(g g))."""
    _same_group(phi, psi)
    chi = phi.node_characters
    return (np.einsum("g,gij->ij", chi, psi.node_matrices) / len(chi)
            + psi.node_square_matrices.mean(axis=0))


# --------------------------------------------------------------------------
# function averaging


def _draw_elements(group, rng, samples):
    if group.finite:
        return group.elements()
    return group.sample_many(rng, samples)


def mc_average_Q(f: Callable[[np.ndarray], np.ndarray], phi: Representation, psi: Representation,
                 x: np.ndarray, samples: int = 1000, seed=None, return_stderr: bool = False):
    """Estimate (Qf)(x) = E_g[psi(g)^-1 f(phi(g) x)].

    Exact enumeration for finite groups (`samples` ignored, stderr 0);
    Monte Carlo over `samples` Haar draws otherwise.
    """
    _same_group(phi, psi)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    elems = _draw_elements(phi.group, rng, samples)
    x = np.asarray(x, dtype=float)
    vals = np.stack([psi.matrix(g).T @ np.atleast_1d(f(phi.matrix(g) @ x)) for g in elems])
    mean = vals.mean(axis=0)
    if not return_stderr:
        return mean
    if phi.group.finite or len(vals) < 2:
        return mean, np.zeros_like(mean)
    return mean, vals.std(axis=0, ddof=1) / np.sqrt(len(vals))


def _q_at_points(f, phi, psi, points, elems):
    """(N, k) values of mean over `elems` of psi(g)^T f(phi(g) x) at each point."""
    acc = None
    for g in elems:
        vals = np.atleast_2d(np.asarray(f(points @ phi.matrix(g).T), dtype=float).reshape(len(points), -1))
        term = vals @ psi.matrix(g)   # row-wise psi(g)^T v
        acc = term if acc is None else acc + term
    return acc / len(elems)


def symmetric_part(f, phi, psi, points, samples=256, rng=None):
    """Qf evaluated at each row of `points` (batched f: (N, d) -> (N, k) or (N,))."""
    rng = rng if rng is not None else np.random.default_rng()
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return _q_at_points(f, phi, psi, points, _draw_elements(phi.group, rng, samples))


@dataclass
class Decomposition:
    symmetric: np.ndarray
    antisymmetric: np.ndarray
    inner_product: float
    inner_product_stderr: float


def decompose_function(f, phi: Representation, psi: Representation | None, test_points: np.ndarray,
                       mu_sampler: Callable[[np.random.Generator, int], np.ndarray],
                       samples: int = 256, seed=None, mu_points: int = 4000) -> Decomposition:
    """Split f into s = Qf and a = f - Qf, and estimate <s, a>_mu.

    `f` is batched over rows.  `mu_sampler(rng, n)` draws n points from a
    G-invariant law.  For continuous groups the inner product uses two
    independent group samples per point so the estimate is unbiased.
    """
    psi = psi if psi is not None else trivial_rep(phi.group)
    _same_group(phi, psi)
    rng = np.random.default_rng(seed)

    def fv(pts):
        return np.asarray(f(pts), dtype=float).reshape(len(pts), -1)

    test_points = np.atleast_2d(np.asarray(test_points, dtype=float))
    s_test = symmetric_part(f, phi, psi, test_points, samples, rng)
    a_test = fv(test_points) - s_test

    pts = np.asarray(mu_sampler(rng, mu_points), dtype=float)
    s1 = symmetric_part(f, phi, psi, pts, samples, rng)
    s2 = s1 if phi.group.finite else symmetric_part(f, phi, psi, pts, samples, rng)
    per_point = np.sum(s1 * (fv(pts) - s2), axis=1)
    return Decomposition(s_test, a_test, float(per_point.mean()),
                         float(per_point.std(ddof=1) / np.sqrt(len(per_point))))


def mu_distance_sq(f, h, mu_sampler, points: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo ||f - h||_mu^2 with its standard error."""
    x = np.asarray(mu_sampler(rng, points), dtype=float)
    diff = np.asarray(f(x), dtype=float).reshape(points, -1) - np.asarray(h(x), dtype=float).reshape(points, -1)
    sq = np.sum(diff ** 2, axis=1)
    return float(sq.mean()), float(sq.std(ddof=1) / np.sqrt(points))


# --------------------------------------------------------------------------
# export

_HEADER = struct.Struct("<4q")


def write_tensor_binary(path: str | Path, tensor: np.ndarray) -> None:
    """Four little-endian int64 dims, then row-major little-endian float64 data."""
    tensor = np.ascontiguousarray(tensor, dtype="<f8")
    if tensor.ndim != 4:
        raise ValueError("expected a 4-tensor")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(*tensor.shape))
        fh.write(tensor.tobytes(order="C"))


def read_tensor_binary(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    dims = _HEADER.unpack_from(raw)
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if data.size != int(np.prod(dims)):
        raise ValueError(f"{path}: payload size does not match header {dims}")
    return data.reshape(dims).astype(float)


def write_tensor_csv(path: str | Path, tensor: np.ndarray) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("a,b,c,e,value\n")
        for idx in np.ndindex(*tensor.shape):
            fh.write(",".join(str(i) for i in idx) + f",{tensor[idx]!r}\n")
