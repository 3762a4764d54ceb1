"""Independent reference solutions for the scalar problem.

Three routes that share no code with the steppers:

* a Mittag-Leffler closed form (series convolution identities for the
  power-law source catalog),
* direct quadrature of the inverse-Laplace wedge-contour representation of
  the exact solution,
* quadrature of the clipped-contour representation of the *discrete*
  solution, which must match the recurrence to quadrature accuracy.

A fine-grid self-reference mirrors the methodology used by the convergence
tables.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .kernels import (
    CertificateError,
    ContourSpec,
    KernelTable,
    bhat,
    build_kernels,
    certify_denominator,
    default_contour,
    psi,
    theta_upper_bound,
)
from .ode import (
    ConstantSource,
    PowerSource,
    ScalarProblem,
    SolutionHistory,
    SourceTerm,
    SumSource,
    TabulatedSource,
    ZeroSource,
    solve_l1,
    solve_ml1,
)
from .special import AccuracyError, MlParams, cexpm1, cpow, gamma, mittag_leffler

__all__ = [
    "ExactEval",
    "contour_ej",
    "discrete_contour",
    "exact_scalar",
    "fine_grid_reference",
    "reference_values_at",
]


@dataclass(frozen=True)
class ExactEval:
    """A scalar problem plus the evaluation route and its tolerance."""

    problem: ScalarProblem
    alpha: float
    method: str = "mittag-leffler"  # or "contour"
    tolerance: float = 1e-10

    def __post_init__(self):
        if self.method not in ("mittag-leffler", "contour"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if not 1.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (1, 2), got {self.alpha}")


def exact_scalar(e: ExactEval, t: float) -> float:
    """Exact solution value y(t) for t > 0 by the configured route."""
    if t <= 0:
        raise ValueError(f"need t > 0, got {t}")
    if e.method == "mittag-leffler":
        return _exact_ml(e.problem, e.alpha, t, e.tolerance)
    return _exact_contour(e.problem, e.alpha, t, e.tolerance)


# ---------------------------------------------------------------------------
# Mittag-Leffler route
# ---------------------------------------------------------------------------


def _exact_ml(p: ScalarProblem, alpha: float, t: float, tol: float) -> float:
    x = -p.lam * t ** alpha
    val = 0.0
    if p.y0:
        val += p.y0 * mittag_leffler(MlParams(alpha, 1.0, tol), x)
    if p.y1:
        val += p.y1 * t * mittag_leffler(MlParams(alpha, 2.0, tol), x)
    val += _ml_source_term(p.source, p.lam, alpha, t, tol)
    return val


def _ml_source_term(src: SourceTerm, lam: float, alpha: float, t: float, tol: float) -> float:
    # For c * s^gamma the Duhamel convolution with the relaxation kernel has
    # the closed form c Gamma(gamma+1) t^(alpha+gamma) E_{alpha, alpha+gamma+1}(x).
    if isinstance(src, ZeroSource):
        return 0.0
    if isinstance(src, ConstantSource):
        return src.value * t ** alpha * mittag_leffler(
            MlParams(alpha, alpha + 1.0, tol), -lam * t ** alpha
        )
    if isinstance(src, PowerSource):
        g = src.exponent
        return (
            src.coeff
            * gamma(g + 1.0)
            * t ** (alpha + g)
            * mittag_leffler(MlParams(alpha, alpha + g + 1.0, tol), -lam * t ** alpha)
        )
    if isinstance(src, SumSource):
        return sum(_ml_source_term(part, lam, alpha, t, tol) for part in src.parts)
    # Tabulated: integrate s^(alpha-1) E_{alpha,alpha}(-lam s^alpha) f(t-s).
    kernel_params = MlParams(alpha, alpha, min(tol, 1e-11))

    def integrand(s):
        return s ** (alpha - 1.0) * mittag_leffler(kernel_params, -lam * s ** alpha) * src(t - s)

    val, est = quad(integrand, 0.0, t, epsabs=0.2 * tol, epsrel=0, limit=200)
    if est > tol:
        raise AccuracyError("source convolution quadrature above tolerance", est)
    return val


# ---------------------------------------------------------------------------
# Contour route for the exact solution
#
# In the Laplace variable s the homogeneous part is
#   y(t) = 1/(2 pi i) int e^{ts} (y0 s^(alpha-1) + y1 s^(alpha-2)) / (s^alpha
#   + lambda) ds
# over a wedge |arg s| = theta with pi/2 < theta < pi/alpha, and the source
# enters through the kernel Ec(u) = 1/(2 pi i) int e^{us} / (s^alpha +
# lambda) ds.  Conjugate symmetry reduces everything to the upper ray plus a
# small arc around the origin; the ray is integrated in log-radius so the
# s^(alpha-2) singularity is resolved uniformly.
# ---------------------------------------------------------------------------


def _halved_wedge(fvals_fn, theta: float, t: float, tol: float, u_min_shift: float = 0.0):
    """(1/pi) Im of the upper-ray + arc integral, with panel-doubling control."""
    r_hi = max(4.0, 46.0 / (t * abs(math.cos(theta))))
    u_lo = -42.0 + u_min_shift  # radius e^{u_lo}; arc contribution is negligible
    u_hi = math.log(r_hi)
    eps_arc = math.exp(u_lo)

    def quadrature(panels: int) -> float:
        edges = np.linspace(u_lo, u_hi, panels + 1)
        u, w = _gauss_panels(edges, 12)
        r = np.exp(u)
        s = r * cmath.exp(1j * theta)
        ray = np.sum(w * fvals_fn(s) * s)  # ds = s du on the log ray
        arc_edges = np.linspace(0.0, theta, max(2, panels // 8) + 1)
        phi, wphi = _gauss_panels(arc_edges, 12)
        sa = eps_arc * np.exp(1j * phi)
        arc = np.sum(wphi * fvals_fn(sa) * 1j * sa)
        return float((ray + arc).imag / math.pi)

    panels = 32
    prev = quadrature(panels)
    while panels <= 8192:
        panels *= 2
        cur = quadrature(panels)
        if abs(cur - prev) <= 0.5 * tol:
            return cur
        prev = cur
    raise AccuracyError("contour quadrature did not converge", abs(cur - prev))


def _gauss_panels(edges: np.ndarray, order: int):
    xg, wg = np.polynomial.legendre.leggauss(order)
    a = edges[:-1, None]
    b = edges[1:, None]
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * xg[None, :]
    weights = 0.5 * (b - a) * wg[None, :]
    return nodes.ravel(), weights.ravel()


def _contour_theta(alpha: float) -> float:
    # Poles of 1/(s^alpha + lam) sit on arg s = pi/alpha; stay strictly below
    # both that ray and the admissible symbol wedge.
    return min(math.pi / 2 + 0.3, 0.5 * (math.pi / 2 + theta_upper_bound(alpha)))


def _exact_contour(p: ScalarProblem, alpha: float, t: float, tol: float) -> float:
    theta = _contour_theta(alpha)
    val = 0.0
    if p.y0 or p.y1:

        def hom(s):
            return (
                np.exp(t * s)
                * (p.y0 * cpow(s, alpha - 1.0) + p.y1 * cpow(s, alpha - 2.0))
                / (cpow(s, alpha) + p.lam)
            )

        val += _halved_wedge(hom, theta, t, 0.5 * tol)
    if not isinstance(p.source, ZeroSource):
        val += _contour_source_term(p, alpha, t, theta, 0.5 * tol)
    return val


def _contour_source_term(p: ScalarProblem, alpha: float, t: float, theta: float, tol: float) -> float:
    cache: dict[float, float] = {}

    def relax_kernel(u: float) -> float:
        if u == 0.0:
            return 0.0
        if u not in cache:
            cache[u] = _halved_wedge(
                lambda s: np.exp(u * s) / (cpow(s, alpha) + p.lam), theta, u, 0.1 * tol
            )
        return cache[u]

    val, est = quad(
        lambda s: relax_kernel(t - s) * p.source(s), 0.0, t, epsabs=0.5 * tol, epsrel=0, limit=100
    )
    if est > tol:
        raise AccuracyError("contour source convolution above tolerance", est)
    return val


# ---------------------------------------------------------------------------
# Contour route for the discrete solution
#
# The generating-function inversion of the recurrence gives, for k >= 1,
#   Y_k = 1/(2 pi i) int e^{kz} N(z) / (psi(z) + mu (e^z + 1)) dz
# over the wedge clipped at |Im z| = pi, with
#   N(z) = ((e^z-1)^2 bhat - psi/2 + mu (e^z-1)/2) y0 + tau (e^z-1) bhat y1,
# plus a discrete Duhamel sum built from the coefficients E_j of the bare
# resolvent.  Only the homogeneous weights are evaluated here; sources are
# exercised through the E_j convolution.
# ---------------------------------------------------------------------------


def _clipped_wedge(numerator_fn, alpha: float, mu: float, spec: ContourSpec, k: int, tol: float) -> float:
    theta = spec.theta
    r_hi = spec.clip_radius()
    u_lo = (-46.0 - abs(math.log(mu))) / (alpha - 1.0)
    u_hi = math.log(r_hi)

    def quadrature(panels: int) -> float:
        edges = np.linspace(u_lo, u_hi, panels + 1)
        u, w = _gauss_panels(edges, 12)
        z = np.exp(u) * cmath.exp(1j * theta)
        vals = np.exp(k * z) * numerator_fn(z) / (psi(alpha, z) + mu * (np.exp(z) + 1.0))
        return float(np.sum(w * vals * z).imag / math.pi)

    panels = max(32, spec.panels)
    prev = quadrature(panels)
    while panels <= 8192:
        panels *= 2
        cur = quadrature(panels)
        if abs(cur - prev) <= 0.5 * tol:
            return cur
        prev = cur
    raise AccuracyError("clipped-contour quadrature did not converge", abs(cur - prev))


def _require_certificate(alpha: float, mu: float, spec: ContourSpec | None) -> ContourSpec:
    if spec is None:
        spec = default_contour(alpha, mu)
    report = certify_denominator(alpha, mu, spec)
    if not report.passed:
        raise CertificateError(
            f"denominator margin {report.margin:.3e} not positive for "
            f"alpha={alpha}, mu={mu}, theta={spec.theta:.4f}"
        )
    return spec


def discrete_contour(
    alpha: float,
    mu: float,
    kt: KernelTable,
    spec: ContourSpec | None,
    y0: float,
    y1: float,
    k: int,
    tau: float | None = None,
    tol: float = 1e-10,
) -> float:
    """Level-k value of the homogeneous discrete solution by contour quadrature.

    The y1 weight in the representation carries a factor tau, so ``tau`` must
    be supplied whenever ``y1 != 0``.  Refuses to run unless the denominator
    certificate for (alpha, mu) passes on the contour.
    """
    if kt.alpha != alpha:
        raise ValueError("kernel table alpha mismatch")
    if k < 1:
        raise ValueError(f"the representation holds for k >= 1, got {k}")
    if y1 != 0.0 and tau is None:
        raise ValueError("tau is required when y1 != 0")
    spec = _require_certificate(alpha, mu, spec)

    def numerator(z):
        em1 = cexpm1(z)
        bh = bhat(alpha, z)
        num = y0 * (em1 ** 2 * bh - 0.5 * psi(alpha, z) + 0.5 * mu * em1)
        if y1 != 0.0:
            num = num + tau * y1 * em1 * bh
        return num

    return _clipped_wedge(numerator, alpha, mu, spec, k, tol)


def contour_ej(
    alpha: float,
    mu: float,
    kt: KernelTable,
    spec: ContourSpec | None,
    j: int,
    tol: float = 1e-11,
) -> float:
    """Resolvent coefficient E_j = contour integral of e^{jz}/(psi + mu(e^z+1))."""
    if kt.alpha != alpha:
        raise ValueError("kernel table alpha mismatch")
    if j < 1:
        raise ValueError(f"need j >= 1, got {j}")
    spec = _require_certificate(alpha, mu, spec)
    return _clipped_wedge(lambda z: np.ones_like(z), alpha, mu, spec, j, tol)


# ---------------------------------------------------------------------------
# Fine-grid self-reference
# ---------------------------------------------------------------------------


def fine_grid_reference(
    scheme: str,
    problem: ScalarProblem,
    alpha: float,
    tau_ref: float,
    horizon: float = 1.0,
    kt: KernelTable | None = None,
) -> SolutionHistory:
    """Trajectory on a fine grid, used as the reference in convergence studies."""
    n = round(horizon / tau_ref)
    if abs(n * tau_ref - horizon) > 1e-12 * horizon:
        raise ValueError(f"tau_ref={tau_ref} does not divide the horizon {horizon}")
    if kt is None:
        kt = _kernel_cache(alpha, n)
    solver = {"l1": solve_l1, "ml1": solve_ml1}[scheme]
    return solver(problem, alpha, tau_ref, n, kt)


def reference_values_at(ref: SolutionHistory, tau: float) -> np.ndarray:
    """Reference values at the coarse grid times j*tau, by index extraction.

    The coarse step must be a multiple of the reference step (nested grids);
    anything else is a configuration error.
    """
    stride_f = tau / ref.tau
    stride = round(stride_f)
    if stride < 1 or abs(stride_f - stride) > 1e-9:
        raise ValueError(
            f"coarse step {tau} is not a multiple of the reference step {ref.tau}"
        )
    if ref.n % stride:
        raise ValueError("reference trajectory does not cover the coarse grid")
    return ref.values[::stride]


_KERNELS: dict = {}


def _kernel_cache(alpha: float, n: int) -> KernelTable:
    kt = _KERNELS.get(alpha)
    if kt is None or kt.n < n:
        kt = _KERNELS[alpha] = build_kernels(alpha, n)
    return kt
