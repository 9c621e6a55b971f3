"""Closed-form generalisation gaps for invariant and equivariant least squares.

Pure functions, no randomness.  The divergence at the interpolation
threshold is carried as an explicit flag rather than a float infinity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from symgap.groups import Representation
from symgap.symmetrize import (build_intertwiner_projector, character_inner_product,
                               j_matrix)

OVER = "overparameterised"
THRESHOLD = "threshold"
UNDER = "underparameterised"


class NotEquivariantError(ValueError):
    pass


@dataclass(frozen=True)
class RegimeValue:
    regime: str
    value: float | None          # None marks divergence
    noiseless_term: float | None = None
    noise_term: float | None = None

    @property
    def infinite(self) -> bool:
        return self.value is None

    def __float__(self) -> float:
        return math.inf if self.value is None else self.value

    def label(self) -> str:
        return "inf" if self.value is None else repr(self.value)


def regime_of(n: int, d: int) -> str:
    if n < d - 1:
        return OVER
    if n > d + 1:
        return UNDER
    return THRESHOLD


def r_factor(n: int, d: int) -> RegimeValue:
    """E[(X^T X)^+] = r(n, d) I for an n x d standard Gaussian X."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    regime = regime_of(n, d)
    if regime == OVER:
        return RegimeValue(regime, n / (d * (d - n - 1)))
    if regime == UNDER:
        return RegimeValue(regime, 1.0 / (n - d - 1))
    return RegimeValue(regime, None)


def snap_integer(x: float, tol: float = 1e-6) -> float:
    """Round to the nearest integer when within `tol`; raw value otherwise."""
    r = round(x)
    return float(r) if abs(x - r) <= tol else float(x)


def _projection_coefficient(n: int, d: int) -> float:
    # n(d-n) / (d(d-1)(d+2)), the isotropic fourth moment of a random n-plane
    return n * (d - n) / (d * (d - 1) * (d + 2))


def _assemble(n, d, sigma_xi, codim, noiseless) -> RegimeValue:
    regime = regime_of(n, d)
    noise_coef = sigma_xi ** 2 * codim
    if noise_coef == 0.0:
        noise = 0.0
    else:
        r = r_factor(n, d)
        noise = None if r.infinite else noise_coef * r.value
    if noise is None:
        return RegimeValue(regime, None, noiseless, None)
    return RegimeValue(regime, noiseless + noise, noiseless, noise)


def predicted_gap_invariant(n: int, d: int, sigma_x: float, sigma_xi: float, theta_norm: float,
                            dim_a: float) -> RegimeValue:
    """Expected gap between the min-norm least-squares predictor and its average (k = 1)."""
    dim_a = snap_integer(dim_a)
    if dim_a < -1e-8:
        raise ValueError(f"dim A must be nonnegative, got {dim_a}")
    dim_a = max(dim_a, 0.0)
    noiseless = 0.0
    if n < d:
        noiseless = dim_a * sigma_x ** 2 * theta_norm ** 2 * _projection_coefficient(n, d)
    return _assemble(n, d, sigma_xi, dim_a, noiseless)


def predicted_gap_equivariant(n: int, d: int, k: int, sigma_x: float, sigma_xi: float,
                              Theta: np.ndarray, phi: Representation, psi: Representation,
                              check_tol: float = 1e-8) -> RegimeValue:
    """Expected gap for a k-output target that is equivariant from phi to psi."""
    Theta = np.asarray(Theta, dtype=float).reshape(d, k)
    if phi.dim != d or psi.dim != k:
        raise ValueError("representation dimensions do not match (d, k)")
    proj = build_intertwiner_projector(phi, psi)
    norm = float(np.linalg.norm(Theta))
    if np.linalg.norm(proj.complement(Theta)) > check_tol * max(norm, 1.0):
        raise NotEquivariantError("target Theta is not an intertwiner of (phi, psi)")
    codim = snap_integer(d * k - character_inner_product(phi, psi))
    noiseless = 0.0
    if n < d:
        J = j_matrix(phi, psi)
        bracket = (d + 1) * norm ** 2 - float(np.trace(J @ Theta.T @ Theta))
        noiseless = sigma_x ** 2 * _projection_coefficient(n, d) * bracket
    if noiseless < -1e-10 or codim < -1e-8:
        raise ArithmeticError(f"negative gap term (noiseless={noiseless}, codim={codim})")
    return _assemble(n, d, sigma_xi, max(codim, 0.0), max(noiseless, 0.0))


def vc_alpha(layer_widths: Sequence[int]) -> float:
    """log2(4e log2(sum 2e i k_i) sum i k_i) over layers i = 1..L."""
    weighted = sum(i * w for i, w in enumerate(layer_widths, start=1))
    inner = math.log2(2 * math.e * weighted)
    return math.log2(4 * math.e * inner * weighted)


def vc_bound(layer_widths: Sequence[int], layer_char_products: Sequence[float]) -> float:
    """VC-dimension bound for a ReLU network whose weights intertwine layer representations.

    `layer_char_products[i]` is <chi_i, chi_{i+1}>; its length fixes L.  Only
    the first L widths enter.
    """
    L = len(layer_char_products)
    if L < 1:
        raise ValueError("need at least one layer")
    widths = list(layer_widths)[:L]
    if len(widths) < L or min(widths) < 1:
        raise ValueError("need L positive layer widths")
    return L + 0.5 * vc_alpha(widths) * L * (L + 1) * max(layer_char_products)
