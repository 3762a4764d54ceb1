"""Convolution weights of the L1 scheme and their discrete Laplace symbols.

The time discretizations are driven by the sequence ``b_j = j^(2-alpha) /
Gamma(3-alpha)`` and by a corrected sequence ``beta_j`` that differs from
``b_j`` only at ``j = 1``, where a lattice sum ``2 sin(alpha pi/2) *
sum_k (2 k pi)^(alpha-3)`` is added.  This module builds the weight tables,
evaluates the generating functions ``bhat``/``betahat`` and the step symbols
``psi``/``psi_modified`` on the complex plane, and produces the numerical
certificates (denominator margins, sign conditions) that the contour-based
oracles rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import zeta as _hurwitz_zeta

from .special import cexpm1, cpow, gamma, zeta

__all__ = [
    "CertificateError",
    "ContourSpec",
    "KernelTable",
    "MarginReport",
    "beta1_correction",
    "betahat",
    "betahat_minus_pole",
    "bhat",
    "bhat_minus_pole",
    "build_kernels",
    "certify_denominator",
    "default_contour",
    "psi",
    "psi_modified",
    "quadratic_symbol_re",
]


class CertificateError(RuntimeError):
    """A kernel certificate failed; contour evaluation refuses to proceed."""


def _check_alpha(alpha: float):
    if not 1.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (1, 2), got {alpha}")


@dataclass(frozen=True)
class KernelTable:
    """Weight sequences for one ``alpha`` and at least ``n`` time levels.

    ``b`` and ``beta`` hold indices 0..n+1; ``db`` and ``dbeta`` hold the
    first differences ``d_j = b_{j+1} - b_j`` for j = 0..n.  ``d2b`` and
    ``d2beta`` hold the second differences ``e_i = d_i - d_{i-1}`` for
    i = 1..n (index 0 is unused and kept at 0); the steppers march an
    increment-form recurrence against these, which avoids forming second
    differences of O(1) state values in floating point.  The table is
    immutable and may be shared between concurrent solver runs.
    """

    alpha: float
    n: int
    b: np.ndarray
    beta: np.ndarray
    db: np.ndarray
    dbeta: np.ndarray
    d2b: np.ndarray
    d2beta: np.ndarray


def beta1_correction(alpha: float) -> float:
    """The amount added to ``b_1``: ``2 sin(alpha pi/2) (2 pi)^(alpha-3) zeta(3-alpha)``."""
    _check_alpha(alpha)
    return 2.0 * math.sin(alpha * math.pi / 2) * (2 * math.pi) ** (alpha - 3) * zeta(3 - alpha)


def build_kernels(alpha: float, n: int) -> KernelTable:
    """Build the weight table ``b_j = j^(2-alpha)/Gamma(3-alpha)`` up to level ``n``.

    First and second differences are computed through ``expm1``/``log1p``
    identities rather than by subtraction, which keeps them fully accurate
    for large ``j`` where the raw values nearly cancel.
    """
    _check_alpha(alpha)
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    g = gamma(3.0 - alpha)
    q = 2.0 - alpha
    j = np.arange(n + 2, dtype=float)
    b = j ** q / g
    db = np.empty(n + 1)
    db[0] = b[1]
    jj = j[1 : n + 1]
    db[1:] = jj ** q * np.expm1(q * np.log1p(1.0 / jj)) / g

    d2b = np.zeros(n + 1)
    if n >= 1:
        d2b[1] = b[2] - 2.0 * b[1] + b[0]
    if n >= 2:
        d2b[2] = b[3] - 2.0 * b[2] + b[1]
    if n >= 3:
        ji = j[3 : n + 1]
        up = np.expm1(q * np.log1p(1.0 / ji))
        down = np.expm1(q * np.log1p(-1.0 / ji))
        d2b[3:] = ji ** q * (up + down) / g

    beta = b.copy()
    beta[1] += beta1_correction(alpha)
    dbeta = db.copy()
    dbeta[0] = beta[1]
    if n >= 1:
        dbeta[1] = b[2] - beta[1]
    d2beta = d2b.copy()
    corr = beta[1] - b[1]
    if n >= 1:
        d2beta[1] -= 2.0 * corr
    if n >= 2:
        d2beta[2] += corr
    return KernelTable(
        alpha=alpha, n=n, b=b, beta=beta, db=db, dbeta=dbeta, d2b=d2b, d2beta=d2beta
    )


# ---------------------------------------------------------------------------
# Discrete Laplace transforms
#
# For Re z away from 0 the defining series sum_k b_k e^(-kz) (a polylogarithm)
# converges quickly.  Inside the strip |Im z| < 2 pi the transform equals
# z^(alpha-3) plus an analytic remainder S(z) = sum_{k != 0} (z + 2 k pi
# i)^(alpha-3); expanding each term binomially and summing the lattice in k
# turns S into a power series whose coefficients involve zeta(m + 3 - alpha).
# That series converges for |z| < 2 pi and is the workhorse branch on the
# integration contours, where |z| <= pi / sin(theta).
# ---------------------------------------------------------------------------

_STRIP_RADIUS = 5.2  # |z| limit for the power-series branch (ratio 0.83 to 2 pi)
_SERIES_RE_MIN = 0.05  # smallest Re z the polylogarithm branch accepts


@lru_cache(maxsize=64)
def _strip_coeffs(alpha: float, terms: int = 240) -> np.ndarray:
    p = alpha - 3.0
    coeffs = np.empty(terms)
    binom = 1.0
    for m in range(terms):
        coeffs[m] = (
            binom
            * (2 * math.pi) ** (p - m)
            * zeta(m + 3.0 - alpha)
            * 2.0
            * math.cos((p - m) * math.pi / 2)
        )
        binom *= (p - m) / (m + 1)
    return coeffs


def _bhat_strip_remainder(alpha, z):
    """S(z) = bhat(z) - z^(alpha-3), analytic for |Im z| < 2 pi, |z| < 2 pi."""
    coeffs = _strip_coeffs(alpha)
    z = np.asarray(z, dtype=complex)
    total = np.zeros_like(z)
    zpow = np.ones_like(z)
    for m, c in enumerate(coeffs):
        term = c * zpow
        total += term
        zpow *= z
        if m > 24 and np.max(np.abs(term)) < 1e-17 * max(1.0, np.max(np.abs(total))):
            break
    else:
        raise ValueError(
            f"series branch of bhat needs |z| <= {_STRIP_RADIUS}, got |z| up to "
            f"{np.max(np.abs(z)):.3f}"
        )
    return total


def _bhat_polylog(alpha, z):
    """Defining series Li_(alpha-2)(e^-z)/Gamma(3-alpha), for Re z > 0."""
    z = np.asarray(z, dtype=complex)
    re_min = float(np.min(z.real))
    n_terms = min(20000, int(44.0 / re_min) + 20)
    w = np.exp(-z)
    wk = w.copy()
    total = np.zeros_like(z)
    g = gamma(3.0 - alpha)
    for k in range(1, n_terms + 1):
        total += k ** (2.0 - alpha) / g * wk
        wk *= w
    return total


def _dispatch(alpha, z, remainder_only: bool):
    _check_alpha(alpha)
    scalar = np.isscalar(z) or getattr(z, "ndim", 1) == 0
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    on_cut = (zz.imag == 0) & (zz.real <= 0)
    if np.any(on_cut):
        raise ValueError("bhat/betahat are not defined on the branch cut (-inf, 0]")
    out = np.empty_like(zz)
    strip = (np.abs(zz) <= _STRIP_RADIUS) & (np.abs(zz.imag) < 2 * math.pi) & (
        zz.real < 0.5
    )
    series = ~strip
    if np.any(series):
        bad = series & (zz.real < _SERIES_RE_MIN)
        if np.any(bad):
            raise ValueError(
                "outside the strip |Im z| < 2 pi, |z| <= "
                f"{_STRIP_RADIUS}, bhat needs Re z >= {_SERIES_RE_MIN}"
            )
        vals = _bhat_polylog(alpha, zz[series])
        if remainder_only:
            vals = vals - cpow(zz[series], alpha - 3.0)
        out[series] = vals
    if np.any(strip):
        vals = _bhat_strip_remainder(alpha, zz[strip])
        if not remainder_only:
            vals = vals + cpow(zz[strip], alpha - 3.0)
        out[strip] = vals
    return out[0] if scalar else out.reshape(np.shape(z))


def bhat(alpha: float, z):
    """Discrete Laplace transform of ``(b_k)``: ``sum_k b_k e^(-kz)``.

    Defined for ``Re z > 0`` and, by continuation, on the strip
    ``|Im z| < 2 pi`` off the cut ``(-inf, 0]``.  Scalar or ndarray ``z``.
    """
    return _dispatch(alpha, z, remainder_only=False)


def bhat_minus_pole(alpha: float, z):
    """``bhat(z) - z^(alpha-3)``, computed without cancellation near 0."""
    return _dispatch(alpha, z, remainder_only=True)


def _exp(z):
    if np.isscalar(z) or getattr(z, "ndim", 1) == 0:
        return complex(np.exp(complex(z)))
    return np.exp(np.asarray(z, dtype=complex))


def betahat(alpha: float, z):
    """Transform of the corrected weights: ``bhat(z) + (beta_1 - b_1) e^(-z)``."""
    return bhat(alpha, z) + beta1_correction(alpha) * _exp(-np.asarray(z, complex) if not np.isscalar(z) else -z)


def betahat_minus_pole(alpha: float, z):
    """``betahat(z) - z^(alpha-3)``; vanishes at ``z = 0``."""
    return bhat_minus_pole(alpha, z) + beta1_correction(alpha) * _exp(
        -np.asarray(z, complex) if not np.isscalar(z) else -z
    )


def psi(alpha: float, z):
    """Step symbol of the plain scheme: ``e^(-z) (e^z - 1)^3 bhat(z)``."""
    em1 = cexpm1(np.asarray(z, complex) if not np.isscalar(z) else z)
    return (1.0 / (em1 + 1.0)) * em1 ** 3 * bhat(alpha, z)


def psi_modified(alpha: float, z):
    """Step symbol of the corrected scheme: ``e^(-z) (e^z - 1)^3 betahat(z)``."""
    em1 = cexpm1(np.asarray(z, complex) if not np.isscalar(z) else z)
    return (1.0 / (em1 + 1.0)) * em1 ** 3 * betahat(alpha, z)


def quadratic_symbol_re(alpha: float, y, modified: bool = False):
    """``Re(e^(-iy) (e^(iy) - 1)^2 chat(iy))`` for ``y`` in (0, pi).

    This is the energy weight controlling discrete stability; it is positive
    for both weight families, with the corrected one bounded below by a
    positive multiple of the plain one.
    """
    y = np.asarray(y, dtype=float)
    z = 1j * y
    transform = betahat(alpha, z) if modified else bhat(alpha, z)
    return (np.exp(-z) * cexpm1(z) ** 2 * transform).real


def psi_imag_axis_parts(alpha: float, y):
    """Cosine/sine lattice sums (A, B) with ``psi(iy) = e^(-iy)(e^(iy)-1)^3 (A + iB)``.

    Evaluated through Hurwitz zeta functions; A is negative on (0, pi), which
    is exactly what makes ``Im((1 + e^(iy))^(-1) psi(iy))`` positive there.
    """
    _check_alpha(alpha)
    y = np.asarray(y, dtype=float)
    s = 3.0 - alpha
    scale = (2 * math.pi) ** (alpha - 3.0)
    lattice_up = scale * _hurwitz_zeta(s, 1.0 - y / (2 * math.pi))
    lattice_down = scale * _hurwitz_zeta(s, y / (2 * math.pi))
    a = -math.cos((alpha - 1) * math.pi / 2) * (lattice_up + lattice_down)
    b = math.sin((alpha - 1) * math.pi / 2) * (lattice_up - lattice_down)
    return a, b


# ---------------------------------------------------------------------------
# Contours and certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContourSpec:
    """Wedge contour ``r e^(+-i theta)`` with quadrature controls.

    ``theta`` must exceed pi/2; the alpha-dependent upper bound
    ``(alpha + 2) pi / (4 alpha)`` is enforced where a contour meets a
    concrete ``alpha`` (see :func:`default_contour`).  ``radius`` truncates
    the infinite contour; ``None`` selects it from the integrand decay.  The
    clipped contour used for discrete representations ends at
    ``|Im z| = pi`` regardless of ``radius``.
    """

    theta: float = math.pi / 2 + 0.3
    radius: float | None = None
    panels: int = 64
    grading: float = 3.0

    def __post_init__(self):
        if self.theta <= math.pi / 2:
            raise ValueError("contour angle must exceed pi/2")
        if self.panels < 1 or self.grading < 1:
            raise ValueError("need panels >= 1 and grading >= 1")

    def clip_radius(self) -> float:
        """Radial extent of the clipped contour, where |Im z| reaches pi."""
        return math.pi / math.sin(self.theta)


def theta_upper_bound(alpha: float) -> float:
    """Largest admissible contour angle ``(alpha + 2) pi / (4 alpha)``."""
    _check_alpha(alpha)
    return (alpha + 2.0) * math.pi / (4.0 * alpha)


def default_contour(alpha: float, mu: float | None = None) -> ContourSpec:
    """Contour with angle pi/2 + 0.3, clamped under the alpha bound.

    If ``mu`` is given, the denominator certificate is evaluated and the
    angle is halved toward pi/2 until the margin is positive.
    """
    cap = theta_upper_bound(alpha)
    theta = min(math.pi / 2 + 0.3, math.pi / 2 + 0.75 * (cap - math.pi / 2))
    spec = ContourSpec(theta=theta)
    if mu is None:
        return spec
    for _ in range(6):
        if certify_denominator(alpha, mu, spec).margin > 0:
            return spec
        theta = math.pi / 2 + 0.5 * (theta - math.pi / 2)
        spec = ContourSpec(theta=theta)
    raise CertificateError(
        f"no admissible contour angle found for alpha={alpha}, mu={mu}"
    )


@dataclass(frozen=True)
class MarginReport:
    """Result of sampling ``|psi(z) + mu (1 + e^z)| / (mu + |z|^alpha)`` on a contour."""

    alpha: float
    mu: float
    theta: float
    margin: float
    r_at_min: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.margin > 0


def certify_denominator(
    alpha: float, mu: float, spec: ContourSpec | None = None, samples: int = 10_000
) -> MarginReport:
    """Sample the clipped contour and report the worst denominator margin.

    A positive margin certifies that the resolvent-style quadratures are
    well defined for this ``(alpha, mu)`` pair on this contour.
    """
    _check_alpha(alpha)
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if spec is None:
        spec = default_contour(alpha)
    if spec.theta >= theta_upper_bound(alpha):
        raise ValueError(
            f"contour angle {spec.theta:.4f} exceeds the bound "
            f"{theta_upper_bound(alpha):.4f} for alpha={alpha}"
        )
    r_max = spec.clip_radius()
    r = r_max * (np.arange(1, samples + 1) / samples) ** spec.grading
    z = r * np.exp(1j * spec.theta)
    denom = np.abs(psi(alpha, z) + mu * (1.0 + np.exp(z)))
    ratio = denom / (mu + r ** alpha)
    idx = int(np.argmin(ratio))
    return MarginReport(
        alpha=alpha,
        mu=mu,
        theta=spec.theta,
        margin=float(ratio[idx]),
        r_at_min=float(r[idx]),
        samples=samples,
    )
