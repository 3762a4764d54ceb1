"""P1 finite elements on the unit interval with homogeneous Dirichlet data.

Uniform mesh, interior hat-function basis, tridiagonal mass/stiffness
matrices with closed-form entries, exact load vectors for power-law data
(including integrable singularities like ``x^-0.49``), a Thomas-type
tridiagonal solver, and the extreme generalized eigenvalues of the
stiffness/mass pencil.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = [
    "FemOperators",
    "Mesh1D",
    "Tridiag",
    "TridiagFactor",
    "assemble",
    "eigen_smallest",
    "l2_norm",
    "l2_project",
    "load_power",
    "pencil_lambda_max",
    "prolong",
    "tridiag_solve",
]


@dataclass(frozen=True)
class Mesh1D:
    """Uniform mesh of (0, 1) with ``n_cells`` cells and n_cells - 1 interior nodes."""

    n_cells: int

    def __post_init__(self):
        if self.n_cells < 2:
            raise ValueError("need at least 2 cells for one interior node")

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @property
    def ndof(self) -> int:
        return self.n_cells - 1

    def interior_nodes(self) -> np.ndarray:
        return self.h * np.arange(1, self.n_cells)


@dataclass(frozen=True)
class Tridiag:
    """Symmetric tridiagonal matrix: one main diagonal, one shared off diagonal."""

    main: np.ndarray
    off: np.ndarray  # length len(main) - 1

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.main * v
        out[:-1] += self.off * v[1:]
        out[1:] += self.off * v[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        return (
            np.diag(self.main)
            + np.diag(self.off, 1)
            + np.diag(self.off, -1)
        )

    def scaled_add(self, c1: float, other: "Tridiag", c2: float) -> "Tridiag":
        return Tridiag(c1 * self.main + c2 * other.main, c1 * self.off + c2 * other.off)


class TridiagFactor:
    """LU factorization (no pivoting) of an SPD tridiagonal matrix.

    Forward/backward substitution runs on plain Python floats; for the
    system sizes here that beats per-element ndarray indexing.
    """

    def __init__(self, tri: Tridiag):
        main = tri.main.tolist()
        off = tri.off.tolist()
        n = len(main)
        gamma = [0.0] * (n - 1)  # U's scaled superdiagonal
        diag = [0.0] * n  # pivots
        beta = main[0]
        if beta <= 0:
            raise ArithmeticError("factorization pivot not positive at row 0")
        diag[0] = beta
        for i in range(1, n):
            gamma[i - 1] = off[i - 1] / beta
            beta = main[i] - off[i - 1] * gamma[i - 1]
            if beta <= 0:
                raise ArithmeticError(f"factorization pivot not positive at row {i}")
            diag[i] = beta
        self._gamma = gamma
        self._diag = diag
        self._off = off
        self._n = n

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        n = self._n
        if len(rhs) != n:
            raise ValueError("right-hand side length mismatch")
        off, diag, gamma = self._off, self._diag, self._gamma
        x = rhs.tolist()
        x[0] = x[0] / diag[0]
        for i in range(1, n):
            x[i] = (x[i] - off[i - 1] * x[i - 1]) / diag[i]
        for i in range(n - 2, -1, -1):
            x[i] -= gamma[i] * x[i + 1]
        return np.array(x)


def tridiag_solve(tri: Tridiag, rhs: np.ndarray) -> np.ndarray:
    """Solve ``tri x = rhs`` by Thomas factorization (SPD assumed)."""
    return TridiagFactor(tri).solve(np.asarray(rhs, dtype=float))


@dataclass
class FemOperators:
    """Mass and stiffness matrices of one mesh, with a cached mass factorization."""

    mesh: Mesh1D
    mass: Tridiag
    stiffness: Tridiag
    _mass_factor: TridiagFactor | None = field(default=None, repr=False)

    def mass_factor(self) -> TridiagFactor:
        if self._mass_factor is None:
            self._mass_factor = TridiagFactor(self.mass)
        return self._mass_factor


def assemble(mesh: Mesh1D) -> FemOperators:
    """Closed-form P1 matrices: mass (h/6)[1, 4, 1], stiffness (1/h)[-1, 2, -1]."""
    n = mesh.ndof
    if n < 1:
        raise ValueError("mesh has no interior degrees of freedom")
    h = mesh.h
    mass = Tridiag(np.full(n, 4.0 * h / 6.0), np.full(n - 1, h / 6.0))
    stiffness = Tridiag(np.full(n, 2.0 / h), np.full(n - 1, -1.0 / h))
    return FemOperators(mesh=mesh, mass=mass, stiffness=stiffness)


def load_power(mesh: Mesh1D, s: float, scale: float = 1.0) -> np.ndarray:
    """Exact load vector of ``scale * x^s`` against the interior hat functions.

    Valid for any ``s > -1``; the antiderivatives of ``x^s`` and ``x^(s+1)``
    integrate the singular cell at the origin exactly, which fixed-order
    quadrature cannot.
    """
    if s <= -1:
        raise ValueError(f"x^s is not integrable for s <= -1, got s={s}")
    h = mesh.h
    x = mesh.h * np.arange(0, mesh.n_cells + 1)  # all nodes, 0..1
    p1 = x ** (s + 1.0) / (s + 1.0)
    p2 = x ** (s + 2.0) / (s + 2.0)
    left = (p2[1:-1] - p2[:-2]) - x[:-2] * (p1[1:-1] - p1[:-2])
    right = x[2:] * (p1[2:] - p1[1:-1]) - (p2[2:] - p2[1:-1])
    return scale / h * (left + right)


def l2_project(ops: FemOperators, load: np.ndarray) -> np.ndarray:
    """Coefficients of the L2-orthogonal projection: solve ``M c = load``."""
    load = np.asarray(load, dtype=float)
    if len(load) != ops.mesh.ndof:
        raise ValueError("load vector length mismatch")
    return ops.mass_factor().solve(load)


def l2_norm(ops: FemOperators, coeffs: np.ndarray) -> float:
    """L2(0,1) norm of the P1 function with the given interior coefficients."""
    return math.sqrt(max(0.0, float(coeffs @ ops.mass.matvec(np.asarray(coeffs, float)))))


def eigen_smallest(ops: FemOperators) -> tuple[float, float]:
    """Extreme generalized eigenvalues of ``A c = lambda M c``.

    Dense symmetric-definite solve; meshes here are small enough that this
    is instant, and it is the independent check for the closed-form bound.
    """
    n = ops.mesh.ndof
    if n == 1:
        lam = ops.stiffness.main[0] / ops.mass.main[0]
        return lam, lam
    w = scipy.linalg.eigh(
        ops.stiffness.to_dense(), ops.mass.to_dense(), eigvals_only=True
    )
    return float(w[0]), float(w[-1])


def pencil_lambda_max(mesh: Mesh1D) -> float:
    """Largest pencil eigenvalue, ``(6/h^2) (1 - cos(N pi h)) / (2 + cos(N pi h))``."""
    h = mesh.h
    c = math.cos(mesh.ndof * math.pi * h)
    return 6.0 / h ** 2 * (1.0 - c) / (2.0 + c)


def prolong(coeffs: np.ndarray, mesh_from: Mesh1D, mesh_to: Mesh1D) -> np.ndarray:
    """Exact embedding of a coarse P1 function into a nested finer space."""
    if mesh_to.n_cells % mesh_from.n_cells:
        raise ValueError(
            f"meshes are not nested: {mesh_from.n_cells} cells into {mesh_to.n_cells}"
        )
    xs = np.concatenate(([0.0], mesh_from.interior_nodes(), [1.0]))
    vals = np.concatenate(([0.0], coeffs, [0.0]))
    return np.interp(mesh_to.interior_nodes(), xs, vals)
