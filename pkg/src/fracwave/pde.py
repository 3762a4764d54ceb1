"""Full discretizations of the fractional wave equation on (0, 1).

Couples the convolution time stepping with the P1 discrete Laplacian: at
every level one tridiagonal solve with the constant matrix ``d_0 M +
(tau^alpha / 2) A``, plus a history combination of mass-weighted increments.
A spectral route (diagonalizing the stiffness/mass pencil and running the
scalar stepper per mode) provides an independent implementation of the same
discretization for cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .fem import (
    FemOperators,
    Mesh1D,
    Tridiag,
    TridiagFactor,
    assemble,
    eigen_smallest,
    load_power,
    pencil_lambda_max,
)
from .kernels import KernelTable
from .ode import ScalarProblem, SourceTerm, ZeroSource, solve_l1, solve_ml1

__all__ = [
    "PdeHistory",
    "PdeProblem",
    "PowerProfile",
    "RatioReport",
    "h_minus1_surrogate",
    "l2_error",
    "ratio_diagnostic",
    "residual_max_pde",
    "solve_pde",
    "spectral_decompose_solve",
]


@dataclass(frozen=True)
class PowerProfile:
    """Spatial data ``coeff * x^exponent`` supplied through its load vector."""

    coeff: float
    exponent: float

    def load(self, mesh: Mesh1D) -> np.ndarray:
        return load_power(mesh, self.exponent, self.coeff)


@dataclass(frozen=True)
class PdeProblem:
    """Initial data and separable source ``g(x) q(t)`` from the profile catalog."""

    u0: PowerProfile | None = None
    u1: PowerProfile | None = None
    source_space: PowerProfile | None = None
    source_time: SourceTerm = ZeroSource()


@dataclass(frozen=True)
class PdeHistory:
    """All nodal-coefficient states U_0..U_n of one run."""

    tau: float
    alpha: float
    scheme: str
    mesh: Mesh1D
    states: np.ndarray  # (n+1, ndof)
    mu_max: float

    @property
    def n(self) -> int:
        return self.states.shape[0] - 1


def _load_or_zero(profile, mesh):
    if profile is None:
        return np.zeros(mesh.ndof)
    return profile.load(mesh)


def solve_pde(
    p: PdeProblem,
    scheme: str,
    alpha: float,
    tau: float,
    n: int,
    mesh: Mesh1D,
    kt: KernelTable,
    ops: FemOperators | None = None,
) -> PdeHistory:
    """March the full discretization for ``n`` steps on the given mesh.

    The recurrence is stepped in increment form: with ``D_k = c_{k+1} - c_k``
    and the weight second differences ``e_i``,

        (d_0 M + (tau^alpha/2) A) D_k
            = R_k - sum_{j<k} e_{k-j} M D_j - tau^alpha A c_k,

    where ``R_k`` collects the source interval integral and the ``u1`` load.
    The step matrix is factorized once and reused.
    """
    if scheme not in ("l1", "ml1"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if kt.alpha != alpha:
        raise ValueError(f"kernel table built for alpha={kt.alpha}, solver got {alpha}")
    if kt.n < n:
        raise ValueError(f"kernel table has {kt.n} levels, need {n}")
    if ops is None:
        ops = assemble(mesh)
    d = kt.db if scheme == "l1" else kt.dbeta
    e = kt.d2b if scheme == "l1" else kt.d2beta
    mass, stiff = ops.mass, ops.stiffness
    ndof = mesh.ndof

    load_u1 = _load_or_zero(p.u1, mesh)
    load_g = _load_or_zero(p.source_space, mesh)
    q_int = p.source_time.interval_integrals(tau, n)
    src_scale = tau ** (alpha - 1.0)
    half_ta = 0.5 * tau ** alpha

    states = np.empty((n + 1, ndof))
    if p.u0 is None:
        states[0] = 0.0
    else:
        states[0] = ops.mass_factor().solve(p.u0.load(mesh))

    step_matrix = mass.scaled_add(d[0], stiff, half_ta)
    factor = TridiagFactor(step_matrix)

    m_incr = np.empty((n, ndof))  # rows M D_j
    erev = e[::-1]
    m = len(e)
    for k in range(n):
        rhs = src_scale * q_int[k] * load_g + (tau * d[k]) * load_u1
        rhs -= (2.0 * half_ta) * stiff.matvec(states[k])
        if k:
            rhs -= np.dot(erev[m - 1 - k : m - 1], m_incr[:k])
        delta = factor.solve(rhs)
        states[k + 1] = states[k] + delta
        m_incr[k] = mass.matvec(delta)
    if not np.all(np.isfinite(states[n])):
        raise ArithmeticError(
            f"{scheme} run diverged (alpha={alpha}, tau={tau}, h={mesh.h})"
        )
    return PdeHistory(
        tau=tau,
        alpha=alpha,
        scheme=scheme,
        mesh=mesh,
        states=states,
        mu_max=pencil_lambda_max(mesh) * tau ** alpha / 2.0,
    )


def spectral_decompose_solve(
    p: PdeProblem,
    scheme: str,
    alpha: float,
    tau: float,
    n: int,
    mesh: Mesh1D,
    kt: KernelTable,
    ops: FemOperators | None = None,
) -> PdeHistory:
    """Same discretization through the eigenbasis of the stiffness/mass pencil.

    Every mode obeys the scalar recurrence with lambda = lambda_i, so the
    result must agree with :func:`solve_pde` to roundoff; this is the
    independent dual path used by the equivalence tests.  Restricted to
    small meshes (ndof <= 256).
    """
    if mesh.ndof > 256:
        raise ValueError(f"spectral route is limited to 256 dofs, got {mesh.ndof}")
    if ops is None:
        ops = assemble(mesh)
    lam, modes = scipy.linalg.eigh(ops.stiffness.to_dense(), ops.mass.to_dense())
    # modes are M-orthonormal; data components are plain load projections
    load_u0 = _load_or_zero(p.u0, mesh)
    load_u1 = _load_or_zero(p.u1, mesh)
    load_g = _load_or_zero(p.source_space, mesh)
    y0 = modes.T @ load_u0
    y1 = modes.T @ load_u1
    g = modes.T @ load_g

    solver = solve_l1 if scheme == "l1" else solve_ml1
    states = np.zeros((n + 1, mesh.ndof))
    for i in range(mesh.ndof):
        sp = ScalarProblem(
            y0=float(y0[i]),
            y1=float(y1[i]),
            lam=float(lam[i]),
            source=p.source_time.scaled(float(g[i])),
        )
        traj = solver(sp, alpha, tau, n, kt)
        states += np.outer(traj.values, modes[:, i])
    return PdeHistory(
        tau=tau,
        alpha=alpha,
        scheme=scheme,
        mesh=mesh,
        states=states,
        mu_max=pencil_lambda_max(mesh) * tau ** alpha / 2.0,
    )


def l2_error(a: np.ndarray, b: np.ndarray, ops: FemOperators) -> float:
    """L2(0,1) distance between two coefficient vectors on one mesh."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if a.shape != b.shape or len(a) != ops.mesh.ndof:
        raise ValueError("coefficient vectors do not match the mesh")
    diff = a - b
    return math.sqrt(max(0.0, float(diff @ ops.mass.matvec(diff))))


@dataclass(frozen=True)
class RatioReport:
    """Step/mesh stiffness diagnostic: tau^alpha / h^2 and mu_max."""

    alpha: float
    tau: float
    h: float
    ratio: float
    mu_max: float
    warn: bool


def ratio_diagnostic(mesh: Mesh1D, alpha: float, tau: float) -> RatioReport:
    """Report ``tau^alpha / h^2`` and ``mu_max``; warn when the ratio exceeds 1.

    The error bounds of both schemes assume a bounded ratio; beyond it the
    temporal accuracy degrades even though stepping stays stable.
    """
    _, lam_max = eigen_smallest(assemble(mesh))
    ta = tau ** alpha
    ratio = ta / mesh.h ** 2
    return RatioReport(
        alpha=alpha,
        tau=tau,
        h=mesh.h,
        ratio=ratio,
        mu_max=lam_max * ta / 2.0,
        warn=ratio > 1.0,
    )


def h_minus1_surrogate(ops: FemOperators, load: np.ndarray) -> float:
    """Discrete negative-norm surrogate ``sqrt(load^T A^-1 load)`` of a load vector."""
    load = np.asarray(load, float)
    sol = TridiagFactor(ops.stiffness).solve(load)
    return math.sqrt(max(0.0, float(load @ sol)))


def residual_max_pde(h: PdeHistory, p: PdeProblem, kt: KernelTable, ops: FemOperators | None = None) -> float:
    """Largest mass-weighted residual of the defining relation over the run.

    Normalized by the peak magnitude of the mass- and stiffness-weighted
    states, so it measures backward error of the stepping itself.
    """
    if ops is None:
        ops = assemble(h.mesh)
    d = kt.db if h.scheme == "l1" else kt.dbeta
    mass, stiff = ops.mass, ops.stiffness
    c = h.states
    n = h.n
    load_u1 = _load_or_zero(p.u1, h.mesh)
    load_g = _load_or_zero(p.source_space, h.mesh)
    q_int = p.source_time.interval_integrals(h.tau, n)
    src_scale = h.tau ** (h.alpha - 1.0)
    half_ta = 0.5 * h.tau ** h.alpha

    m_states = np.array([mass.matvec(c[j]) for j in range(n + 1)])
    s2 = m_states[2:] - 2.0 * m_states[1:-1] + m_states[:-2]  # rows j=1..n-1
    scale = 1.0 + float(np.max(np.abs(m_states))) + half_ta * float(
        np.max([np.max(np.abs(stiff.matvec(c[j]))) for j in range(n + 1)])
    )
    worst = 0.0
    for k in range(n):
        conv = (m_states[1] - m_states[0]) * d[k]
        if k >= 1:
            conv = conv + np.tensordot(d[:k][::-1], s2[:k], axes=1)
        lhs = conv + half_ta * stiff.matvec(c[k] + c[k + 1])
        rhs = src_scale * q_int[k] * load_g + h.tau * d[k] * load_u1
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst / scale
