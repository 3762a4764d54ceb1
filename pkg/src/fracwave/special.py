"""Scalar special functions used by the kernel tables and the analytic oracles.

Provides the gamma function, the Riemann zeta function on the real axis
``s > 1``, principal-branch complex powers, and the two-parameter
Mittag-Leffler function ``E_{alpha,beta}`` restricted to the negative real
axis.  Everything here is a pure function of its arguments and safe to call
concurrently.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AccuracyError",
    "MlParams",
    "cexpm1",
    "cpow",
    "gamma",
    "mittag_leffler",
    "zeta",
]


class AccuracyError(ArithmeticError):
    """A quadrature or series stopped above the requested tolerance.

    The reached error estimate is carried in :attr:`estimate`.
    """

    def __init__(self, message: str, estimate: float):
        super().__init__(f"{message} (error estimate {estimate:.3e})")
        self.estimate = estimate


def gamma(x: float) -> float:
    """Gamma function for real ``x > 0``.

    Backed by the platform's Lanczos-type libm implementation, which is
    accurate to a few ulp on the range used here; the independent
    high-precision oracle lives in the test suite.
    """
    if x <= 0:
        raise ValueError(f"gamma requires x > 0, got {x}")
    return math.gamma(x)


# Bernoulli numbers B_2, B_4, ..., B_16 for the Euler-Maclaurin tail.
_BERNOULLI = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
)


def zeta(s: float, tol: float = 1e-13) -> float:
    """Riemann zeta function for real ``s > 1``.

    Euler-Maclaurin summation: a partial sum up to ``K - 1``, the integral
    and midpoint corrections at ``K``, and Bernoulli-series terms.  ``K`` is
    doubled until the magnitude of the first omitted Bernoulli term (a valid
    remainder bound for real ``s > 0``) drops below ``tol``.
    """
    if s <= 1:
        raise ValueError(f"zeta requires s > 1, got {s}")
    k_cut = 16
    while True:
        total = sum(k ** (-s) for k in range(1, k_cut))
        total += k_cut ** (1.0 - s) / (s - 1.0) + 0.5 * k_cut ** (-s)
        poch = s  # s(s+1)...(s+2j-2), built incrementally
        fact = 2.0  # (2j)!
        power = k_cut ** (-s - 1.0)
        bound = math.inf
        for j, b2j in enumerate(_BERNOULLI, start=1):
            term = b2j / fact * poch * power
            if j < len(_BERNOULLI):
                total += term
            else:
                bound = abs(term)  # first omitted term
                break
            poch *= (s + 2 * j - 1) * (s + 2 * j)
            fact *= (2 * j + 1) * (2 * j + 2)
            power /= k_cut * k_cut
        if bound <= tol:
            return total
        if k_cut > 4096:  # unreachable for s > 1, defensive
            raise AccuracyError("zeta tail bound did not reach tolerance", bound)
        k_cut *= 2


def cpow(z, p: float):
    """Principal-branch power ``z**p = exp(p Log z)`` with ``Arg z`` in (-pi, pi].

    Accepts a complex scalar or a complex ndarray.  ``z = 0`` is allowed only
    for ``p > 0`` (returning 0).
    """
    if isinstance(z, np.ndarray):
        return np.exp(p * np.log(z))
    if z == 0:
        if p > 0:
            return 0j
        raise ValueError("cpow(0, p) undefined for p <= 0")
    return cmath.exp(p * cmath.log(z))


def cexpm1(z):
    """``exp(z) - 1`` with full relative accuracy near 0, for complex input.

    ``exp(z) - 1`` evaluated directly loses the real part of ``z`` once
    ``|z|`` drops below machine epsilon, which distorts the phase of contour
    integrands near the origin.  A short Taylor polynomial takes over for
    ``|z| < 1e-4``.
    """
    if isinstance(z, np.ndarray):
        small = np.abs(z) < 1e-4
        zs = np.where(small, z, 0.0)
        series = zs * (1.0 + zs / 2 * (1.0 + zs / 3 * (1.0 + zs / 4 * (1.0 + zs / 5))))
        return np.where(small, series, np.exp(z) - 1.0)
    if abs(z) < 1e-4:
        return z * (1.0 + z / 2 * (1.0 + z / 3 * (1.0 + z / 4 * (1.0 + z / 5))))
    return cmath.exp(z) - 1.0


@dataclass(frozen=True)
class MlParams:
    """Order/type pair and absolute tolerance for a Mittag-Leffler evaluation.

    The solvers use ``alpha`` strictly inside (1, 2); the closed endpoints are
    accepted here only so the classical identities E_{1,1} = exp and
    E_{2,1}(-x^2) = cos(x) can be exercised.
    """

    alpha: float
    beta: float = 1.0
    tolerance: float = 1e-10

    def __post_init__(self):
        if not 1.0 <= self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in [1, 2], got {self.alpha}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")


#: Taylor/contour switch radius: the series is well conditioned up to |x| = 1.
ML_SWITCH_RADIUS = 1.0


def mittag_leffler(p: MlParams, x: float) -> float:
    """Two-parameter Mittag-Leffler function ``E_{alpha,beta}(x)`` for ``x <= 0``.

    Taylor series for ``|x| <= 1``; for larger ``|x|`` an inverse-Laplace
    evaluation on a deformed wedge contour, with the conjugate pole pair of
    ``1 / (s**alpha + |x|)`` taken out as residues.  The absolute error is kept
    below ``p.tolerance`` or :class:`AccuracyError` is raised.
    """
    if x > 0:
        raise ValueError(f"mittag_leffler is restricted to x <= 0, got {x}")
    if x == 0.0:
        return 1.0 / gamma(p.beta)
    if abs(x) <= ML_SWITCH_RADIUS or p.alpha == 1.0:
        return _ml_series(p, x)
    return _ml_contour(p, x)


def _ml_series(p: MlParams, x: float) -> float:
    """Taylor sum of x^k / Gamma(alpha k + beta) with a cancellation guard."""
    total = 0.0
    term = 1.0 / gamma(p.beta)
    largest = abs(term)
    for k in range(1, 400):
        total += term
        term = x ** k / gamma(p.alpha * k + p.beta)
        mag = abs(term)
        largest = max(largest, mag)
        if mag < 0.01 * p.tolerance and p.alpha * k + p.beta > abs(x) + 2:
            break
    else:
        raise AccuracyError("Mittag-Leffler series did not converge", abs(term))
    cancellation = largest * 1e-16
    if cancellation > p.tolerance:
        raise AccuracyError("Mittag-Leffler series lost too many digits", cancellation)
    return total + term


def _ml_contour(p: MlParams, x: float) -> float:
    alpha, beta = p.alpha, p.beta
    t = -x
    # Conjugate poles of 1/(s^alpha + t) at t^(1/alpha) e^{+-i pi/alpha}; the
    # contour angle is placed halfway between the pole ray and pi, so the pole
    # pair sits to the right and contributes residues e^{s} s^{1-beta} / alpha.
    pole = t ** (1.0 / alpha) * cmath.exp(1j * math.pi / alpha)
    osc = (2.0 / alpha) * (cmath.exp(pole) * cpow(pole, 1.0 - beta)).real
    theta = 0.5 * (math.pi / alpha + math.pi)

    rho = min(1.0, 0.5 * t ** (1.0 / alpha))
    r_max = 46.0 / abs(math.cos(theta))

    def integrand(s):
        return np.exp(s) * cpow(s, alpha - beta) / (cpow(s, alpha) + t)

    def quadrature(panels: int) -> float:
        # Ray r in [rho, r_max], graded toward rho, plus the arc |s| = rho.
        edges = rho + (r_max - rho) * (np.arange(panels + 1) / panels) ** 3
        nodes, weights = _gauss_panels(edges, 12)
        ray = np.sum(weights * integrand(nodes * cmath.exp(1j * theta))) * cmath.exp(
            1j * theta
        )
        arc_edges = np.linspace(0.0, theta, max(2, panels // 8) + 1)
        phi, wphi = _gauss_panels(arc_edges, 12)
        s_arc = rho * np.exp(1j * phi)
        arc = np.sum(wphi * integrand(s_arc) * 1j * s_arc)
        return (ray + arc).imag / math.pi

    return osc + _refine(quadrature, p.tolerance, what="Mittag-Leffler contour")


def _gauss_panels(edges: np.ndarray, order: int):
    """Composite Gauss-Legendre nodes/weights over consecutive panel edges."""
    xg, wg = np.polynomial.legendre.leggauss(order)
    a = edges[:-1, None]
    b = edges[1:, None]
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * xg[None, :]
    weights = 0.5 * (b - a) * wg[None, :]
    return nodes.ravel(), weights.ravel()


def _refine(quadrature, tol: float, what: str, start: int = 16, cap: int = 4096) -> float:
    """Double panel counts until two successive evaluations agree to tol."""
    panels = start
    prev = quadrature(panels)
    while panels <= cap:
        panels *= 2
        cur = quadrature(panels)
        if abs(cur - prev) <= 0.5 * tol:
            return cur
        prev = cur
    raise AccuracyError(f"{what} quadrature did not converge", abs(cur - prev))
