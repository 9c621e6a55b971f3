"""Compact groups and their orthogonal representations.

Finite groups (cyclic, symmetric, dihedral and products) are enumerated
exactly and carry a precomputed composition table.  SO(2) is handled as a
torus discretised by equispaced quadrature nodes: the nodes form a cyclic
subgroup, so averages of trigonometric polynomials whose frequency is below
the node count are exact.  Haar sampling on the torus is continuous.

Elements are canonical integers for finite groups, angles (floats in
[0, 2*pi)) for the torus and tuples for products.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

# composition tables are only materialised up to this order
MAX_TABLE_ORDER = 5040


class GroupMismatchError(ValueError):
    """An element or representation does not belong to the expected group."""


class Group:
    """Base class.  Subclasses provide the group law and enumeration."""

    kind: str = "abstract"
    finite: bool = True

    @property
    def order(self) -> int | str:
        raise NotImplementedError

    @property
    def identity(self) -> Any:
        raise NotImplementedError

    def elements(self) -> list:
        """All elements (quadrature nodes for the torus), identity first."""
        raise NotImplementedError

    def compose(self, g, h):
        raise NotImplementedError

    def inverse(self, g):
        raise NotImplementedError

    def contains(self, g) -> bool:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator):
        raise NotImplementedError

    def sample_many(self, rng: np.random.Generator, size: int) -> list:
        return [self.sample(rng) for _ in range(size)]

    @property
    def name(self) -> str:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<Group {self.name}>"

    def __eq__(self, other) -> bool:
        return isinstance(other, Group) and self.name == other.name

    def __hash__(self) -> int:
        return hash(self.name)

    def check(self, g) -> None:
        if not self.contains(g):
            raise GroupMismatchError(f"{g!r} is not an element of {self.name}")


class FiniteGroup(Group):
    """A finite group given by its elements 0..order-1 and a Cayley table.

    Element 0 is always the identity.
    """

    def __init__(self, order: int):
        if order < 1:
            raise ValueError("group order must be positive")
        self._order = int(order)

    @property
    def order(self) -> int:
        return self._order

    @property
    def identity(self) -> int:
        return 0

    def elements(self) -> list[int]:
        return list(range(self._order))

    def contains(self, g) -> bool:
        return isinstance(g, (int, np.integer)) and 0 <= int(g) < self._order

    def compose(self, g, h) -> int:
        return int(self.table[g, h])

    def inverse(self, g) -> int:
        return int(self.inverses[g])

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self._order))

    def sample_many(self, rng, size):
        return [int(v) for v in rng.integers(self._order, size=size)]

    @cached_property
    def table(self) -> np.ndarray:
        if self._order > MAX_TABLE_ORDER:
            raise ValueError(f"composition table too large for order {self._order}")
        return self._build_table()

    @cached_property
    def inverses(self) -> np.ndarray:
        rows, cols = np.nonzero(self.table == 0)
        inv = np.empty(self._order, dtype=np.int64)
        inv[rows] = cols
        return inv

    def _build_table(self) -> np.ndarray:
        raise NotImplementedError


class CyclicGroup(FiniteGroup):
    kind = "cyclic"

    def __init__(self, m: int):
        super().__init__(m)
        self.m = int(m)

    @property
    def name(self) -> str:
        return f"cyclic({self.m})"

    def _build_table(self):
        idx = np.arange(self.m)
        return (idx[:, None] + idx[None, :]) % self.m

    def compose(self, g, h) -> int:
        return (int(g) + int(h)) % self.m

    def inverse(self, g) -> int:
        return (-int(g)) % self.m


class SymmetricGroup(FiniteGroup):
    """Permutations of {0..m-1} in lexicographic order (identity first).

    Composition is (g h)(i) = g(h(i)).
    """

    kind = "symmetric"

    def __init__(self, m: int):
        if m < 1:
            raise ValueError("symmetric group needs m >= 1")
        super().__init__(math.factorial(m))
        self.m = int(m)

    @property
    def name(self) -> str:
        return f"symmetric({self.m})"

    @cached_property
    def perms(self) -> np.ndarray:
        return np.array(list(itertools.permutations(range(self.m))), dtype=np.int64).reshape(-1, self.m)

    @cached_property
    def _codes(self) -> np.ndarray:
        # lexicographic order makes mixed-radix codes sorted
        return self._encode(self.perms)

    def _encode(self, perms: np.ndarray) -> np.ndarray:
        weights = self.m ** np.arange(self.m - 1, -1, -1, dtype=np.int64)
        return perms @ weights

    def index_of(self, perm: Sequence[int]) -> int:
        code = self._encode(np.asarray(perm, dtype=np.int64)[None, :])[0]
        i = int(np.searchsorted(self._codes, code))
        if i >= self.order or self._codes[i] != code:
            raise GroupMismatchError(f"{perm!r} is not a permutation of range({self.m})")
        return i

    def permutation(self, g: int) -> tuple[int, ...]:
        self.check(g)
        return tuple(int(v) for v in self.perms[g])

    def _build_table(self):
        p = self.perms
        n = len(p)
        table = np.empty((n, n), dtype=np.int64)
        for i in range(n):
            # (p_i o p_j)(k) = p_i[p_j[k]]
            table[i] = np.searchsorted(self._codes, self._encode(p[i][p]))
        return table

    def compose(self, g, h) -> int:
        if self.order <= MAX_TABLE_ORDER and "table" in self.__dict__:
            return int(self.table[g, h])
        return self.index_of(self.perms[g][self.perms[h]])

    def inverse(self, g) -> int:
        return self.index_of(np.argsort(self.perms[g]))


class DihedralGroup(FiniteGroup):
    """Symmetries of the regular m-gon, order 2m.

    Element i + m*f encodes r^i s^f with s r s = r^-1.
    """

    kind = "dihedral"

    def __init__(self, m: int):
        if m < 1:
            raise ValueError("dihedral group needs m >= 1")
        super().__init__(2 * m)
        self.m = int(m)

    @property
    def name(self) -> str:
        return f"dihedral({self.m})"

    def split(self, g: int) -> tuple[int, int]:
        return int(g) % self.m, int(g) // self.m

    def compose(self, g, h) -> int:
        i, a = self.split(g)
        j, b = self.split(h)
        rot = (i + (j if a == 0 else -j)) % self.m
        return rot + self.m * ((a + b) % 2)

    def inverse(self, g) -> int:
        i, a = self.split(g)
        return ((-i) % self.m) if a == 0 else int(g)

    def _build_table(self):
        n = self.order
        return np.array([[self.compose(g, h) for h in range(n)] for g in range(n)], dtype=np.int64)


class TorusSO2(Group):
    """SO(2) with equispaced quadrature nodes for deterministic averaging."""

    kind = "torus-SO2"
    finite = False

    def __init__(self, quadrature_points: int = 64):
        if quadrature_points < 3:
            raise ValueError("torus-SO2 needs at least 3 quadrature points")
        self.quadrature_points = int(quadrature_points)

    @property
    def name(self) -> str:
        return f"torus-SO2({self.quadrature_points})"

    @property
    def order(self) -> str:
        return "continuous"

    @property
    def identity(self) -> float:
        return 0.0

    def elements(self) -> list[float]:
        q = self.quadrature_points
        return [TWO_PI * j / q for j in range(q)]

    def compose(self, g, h) -> float:
        return math.fmod(float(g) + float(h), TWO_PI) % TWO_PI

    def inverse(self, g) -> float:
        return (-float(g)) % TWO_PI

    def contains(self, g) -> bool:
        return isinstance(g, (float, int, np.floating, np.integer)) and math.isfinite(float(g))

    def sample(self, rng) -> float:
        return float(rng.uniform(0.0, TWO_PI))

    def sample_many(self, rng, size):
        return [float(v) for v in rng.uniform(0.0, TWO_PI, size=size)]


class ProductGroup(Group):
    """Direct product G x H; elements are pairs (g, h)."""

    kind = "product"

    def __init__(self, left: Group, right: Group):
        self.left = left
        self.right = right
        self.finite = left.finite and right.finite

    @property
    def name(self) -> str:
        return f"product({self.left.name},{self.right.name})"

    @property
    def order(self):
        if self.finite:
            return self.left.order * self.right.order
        return "continuous"

    @property
    def identity(self):
        return (self.left.identity, self.right.identity)

    def elements(self) -> list:
        return list(itertools.product(self.left.elements(), self.right.elements()))

    def compose(self, g, h):
        return (self.left.compose(g[0], h[0]), self.right.compose(g[1], h[1]))

    def inverse(self, g):
        return (self.left.inverse(g[0]), self.right.inverse(g[1]))

    def contains(self, g) -> bool:
        return (isinstance(g, tuple) and len(g) == 2
                and self.left.contains(g[0]) and self.right.contains(g[1]))

    def sample(self, rng):
        return (self.left.sample(rng), self.right.sample(rng))


def trivial_group() -> CyclicGroup:
    return CyclicGroup(1)


def enumerate_elements(group: Group) -> list:
    """Every element (or quadrature node) exactly once, identity first."""
    return group.elements()


def sample_haar(group: Group, rng: np.random.Generator):
    """One Haar-distributed element, drawn with the caller's generator."""
    return group.sample(rng)


# --------------------------------------------------------------------------
# representations


@dataclass(frozen=True, eq=False)
class Representation:
    """An orthogonal matrix representation of `group` on R^dim."""

    group: Group
    dim: int
    matrix_fn: Callable[[Any], np.ndarray] = field(repr=False)
    name: str = "custom"

    def matrix(self, g) -> np.ndarray:
        self.group.check(g)
        return np.asarray(self.matrix_fn(g), dtype=float)

    @cached_property
    def node_matrices(self) -> np.ndarray:
        """Stack of matrices over enumerate_elements, shape (N, dim, dim)."""
        return np.stack([self.matrix(g) for g in self.group.elements()])

    @cached_property
    def node_characters(self) -> np.ndarray:
        return np.trace(self.node_matrices, axis1=1, axis2=2)

    @cached_property
    def node_square_matrices(self) -> np.ndarray:
        """Matrices of g*g over the enumeration."""
        G = self.group
        return np.stack([self.matrix(G.compose(g, g)) for g in G.elements()])

    def character(self, g) -> float:
        return float(np.trace(self.matrix(g)))

    def is_permutation(self) -> bool:
        """True if every node matrix is a 0/1 permutation matrix."""
        M = self.node_matrices
        if not np.all((M == 0.0) | (M == 1.0)):
            return False
        return bool(np.all(M.sum(axis=1) == 1.0) and np.all(M.sum(axis=2) == 1.0))

    def __repr__(self) -> str:
        return f"Representation({self.name}, {self.group.name}, dim={self.dim})"


def rep_matrix(rep: Representation, g) -> np.ndarray:
    return rep.matrix(g)


def character(rep: Representation, g) -> float:
    return rep.character(g)


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _perm_matrix(perm: Sequence[int]) -> np.ndarray:
    """Matrix sending e_i to e_{perm[i]}."""
    m = len(perm)
    P = np.zeros((m, m))
    P[list(perm), np.arange(m)] = 1.0
    return P


def trivial_rep(group: Group, dim: int = 1) -> Representation:
    eye = np.eye(dim)
    return Representation(group, dim, lambda g: eye, name="trivial" if dim == 1 else f"trivial-{dim}")


def permutation_rep(group: Group) -> Representation:
    """Natural permutation action: coordinates of S_m, cyclic shift for C_m,
    vertices of the m-gon for D_m."""
    if isinstance(group, SymmetricGroup):
        fn = lambda g: _perm_matrix(group.perms[g])
        dim = group.m
    elif isinstance(group, CyclicGroup):
        m = group.m
        fn = lambda g: _perm_matrix([(i + g) % m for i in range(m)])
        dim = m
    elif isinstance(group, DihedralGroup):
        m = group.m

        def fn(g):
            i, f = group.split(g)
            if f == 0:
                return _perm_matrix([(k + i) % m for k in range(m)])
            return _perm_matrix([(i - k) % m for k in range(m)])
        dim = m
    else:
        raise ValueError(f"no permutation representation for {group.name}")
    return Representation(group, dim, fn, name="permutation")


def reflection_rep(group: Group, dim: int) -> Representation:
    """C_2 acting on R^dim by negating the first coordinate."""
    if not (isinstance(group, CyclicGroup) and group.m == 2):
        raise ValueError("reflection representation needs cyclic(2)")
    flip = np.eye(dim)
    flip[0, 0] = -1.0
    eye = np.eye(dim)
    return Representation(group, dim, lambda g: flip if g == 1 else eye, name="reflection-coord-1")


def rotation_rep(group: Group, frequency: int = 1) -> Representation:
    """2x2 rotation block: angle*frequency on the torus, 2*pi*i/m on C_m / D_m."""
    if isinstance(group, TorusSO2):
        fn = lambda g: rotation(frequency * float(g))
    elif isinstance(group, CyclicGroup):
        fn = lambda g: rotation(TWO_PI * frequency * int(g) / group.m)
    elif isinstance(group, DihedralGroup):
        flip = np.diag([1.0, -1.0])

        def fn(g):
            i, f = group.split(g)
            R = rotation(TWO_PI * frequency * i / group.m)
            return R @ flip if f else R
    else:
        raise ValueError(f"no rotation representation for {group.name}")
    return Representation(group, 2, fn, name="rotation-block" if frequency == 1 else f"rotation-block-{frequency}")


def sign_rep(group: SymmetricGroup) -> Representation:
    def fn(g):
        perm = group.perms[g]
        # parity from cycle count
        seen = np.zeros(group.m, dtype=bool)
        cycles = 0
        for start in range(group.m):
            if not seen[start]:
                cycles += 1
                j = start
                while not seen[j]:
                    seen[j] = True
                    j = perm[j]
        return np.array([[(-1.0) ** (group.m - cycles)]])
    return Representation(group, 1, fn, name="sign")


def regular_rep(group: FiniteGroup) -> Representation:
    """Left multiplication on R^|G|."""
    n = group.order
    return Representation(group, n, lambda g: _perm_matrix([group.compose(g, h) for h in range(n)]),
                          name="regular")


def direct_sum(first: Representation, second: Representation) -> Representation:
    if first.group != second.group:
        raise GroupMismatchError("direct sum needs representations of the same group")
    d1, d2 = first.dim, second.dim

    def fn(g):
        M = np.zeros((d1 + d2, d1 + d2))
        M[:d1, :d1] = first.matrix(g)
        M[d1:, d1:] = second.matrix(g)
        return M
    return Representation(first.group, d1 + d2, fn, name=f"{first.name}+{second.name}")


def product_rep(group: ProductGroup, left: Representation, right: Representation,
                mode: str = "sum") -> Representation:
    """Representation of G x H from one of G and one of H.

    mode "sum" is the block-diagonal action, "tensor" the Kronecker product.
    """
    if left.group != group.left or right.group != group.right:
        raise GroupMismatchError("factor representations do not match the product factors")
    if mode == "sum":
        d1, d2 = left.dim, right.dim

        def fn(g):
            M = np.zeros((d1 + d2, d1 + d2))
            M[:d1, :d1] = left.matrix(g[0])
            M[d1:, d1:] = right.matrix(g[1])
            return M
        return Representation(group, d1 + d2, fn, name=f"({left.name})+({right.name})")
    if mode == "tensor":
        return Representation(group, left.dim * right.dim,
                              lambda g: np.kron(left.matrix(g[0]), right.matrix(g[1])),
                              name=f"({left.name})x({right.name})")
    raise ValueError(f"unknown product mode {mode!r}")


def corrupted(rep: Representation, element, scale: float = 1.01) -> Representation:
    """Copy of `rep` whose matrix at one element is scaled; a test fixture."""
    target = element

    def fn(g):
        M = rep.matrix(g)
        return M * scale if g == target else M
    return Representation(rep.group, rep.dim, fn, name=f"{rep.name}-corrupted")


# --------------------------------------------------------------------------
# verification


@dataclass
class VerificationReport:
    rep_name: str
    group_name: str
    pairs_checked: int
    orthogonality_defect: float
    homomorphism_defect: float
    identity_defect: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.orthogonality_defect, self.homomorphism_defect, self.identity_defect) <= self.tol


def verify_representation(rep: Representation, pair_samples: int = 1000, tol: float = 1e-10,
                          rng: np.random.Generator | None = None) -> VerificationReport:
    """Orthogonality and homomorphism defects (Frobenius norms).

    All pairs are checked for finite groups; `pair_samples` Haar pairs
    otherwise.  Failures are reported, never raised.
    """
    G = rep.group
    eye = np.eye(rep.dim)
    if G.finite:
        M = rep.node_matrices
        elems = G.elements()
        ortho = np.linalg.norm(np.transpose(M, (0, 2, 1)) @ M - eye, axis=(1, 2)).max()
        index = {g: i for i, g in enumerate(elems)}
        homo = 0.0
        for i, g in enumerate(elems):
            prod_idx = [index[G.compose(g, h)] for h in elems]
            homo = max(homo, float(np.linalg.norm(M[prod_idx] - M[i] @ M, axis=(1, 2)).max()))
        pairs = len(elems) ** 2
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        ortho = homo = 0.0
        for _ in range(pair_samples):
            g, h = G.sample(rng), G.sample(rng)
            Rg, Rh = rep.matrix(g), rep.matrix(h)
            ortho = max(ortho, float(np.linalg.norm(Rg.T @ Rg - eye)))
            homo = max(homo, float(np.linalg.norm(rep.matrix(G.compose(g, h)) - Rg @ Rh)))
        for g in G.elements():
            R = rep.matrix(g)
            ortho = max(ortho, float(np.linalg.norm(R.T @ R - eye)))
        pairs = pair_samples
    ident = float(np.abs(rep.matrix(G.identity) - eye).max())
    return VerificationReport(rep.name, G.name, pairs, float(ortho), float(homo), ident, tol)


# --------------------------------------------------------------------------
# construction by name (config files)


def make_group(spec: dict | str) -> Group:
    """Build a group from a config mapping such as {"name": "symmetric", "m": 4}."""
    if isinstance(spec, str):
        spec = {"name": spec}
    name = spec.get("name") or spec.get("group")
    if name == "trivial":
        return trivial_group()
    if name == "cyclic":
        return CyclicGroup(int(spec["m"]))
    if name == "symmetric":
        return SymmetricGroup(int(spec["m"]))
    if name == "dihedral":
        return DihedralGroup(int(spec["m"]))
    if name in ("torus-SO2", "so2", "SO2", "torus"):
        return TorusSO2(int(spec.get("quadrature_points", 64)))
    if name == "product":
        return ProductGroup(make_group(spec["left"]), make_group(spec["right"]))
    raise ValueError(f"unknown group {name!r}")


def make_rep(group: Group, spec: dict | str) -> Representation:
    """Build a representation from e.g. {"name": "reflection", "dim": 7}."""
    if isinstance(spec, str):
        spec = {"name": spec}
    name = spec["name"]
    if name == "trivial":
        return trivial_rep(group, int(spec.get("dim", 1)))
    if name == "permutation":
        return permutation_rep(group)
    if name in ("reflection", "reflection-coord-1"):
        return reflection_rep(group, int(spec["dim"]))
    if name in ("rotation", "rotation-block", "natural"):
        return rotation_rep(group, int(spec.get("frequency", 1)))
    if name == "sign":
        return sign_rep(group)
    if name == "regular":
        return regular_rep(group)
    if name == "sum":
        return direct_sum(make_rep(group, spec["first"]), make_rep(group, spec["second"]))
    if name in ("product-sum", "product-tensor"):
        if not isinstance(group, ProductGroup):
            raise ValueError(f"{name} needs a product group")
        return product_rep(group, make_rep(group.left, spec["left"]), make_rep(group.right, spec["right"]),
                           mode=name.split("-")[1])
    raise ValueError(f"unknown representation {name!r}")
