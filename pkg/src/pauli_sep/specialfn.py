"""Jacobi elliptic functions and the complete elliptic integral of the first kind.

Both are computed from the arithmetic-geometric mean sequence of
(1, k'), i.e. the descending Landen transformation, so there is no
dependence on an external special-function library.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

_LANDEN_TOL = 1e-15
_AGM_TOL = 1e-15
_K_LIMIT = 1.0 - 1e-12


@dataclass(frozen=True)
class EllipticModulus:
    k: float
    k_prime: float = field(init=False)

    def __post_init__(self):
        if not (0.0 < self.k < 1.0):
            raise DomainError(f"elliptic modulus must satisfy 0 < k < 1, got {self.k}")
        object.__setattr__(self, "k_prime", float(np.sqrt((1.0 - self.k) * (1.0 + self.k))))


def _check_modulus(k):
    if not np.isfinite(k) or k < 0.0 or k > 1.0:
        raise DomainError(f"modulus k must lie in [0, 1], got {k}")


def jacobi_sn_cn_dn(u, k):
    """Return ``(sn, cn, dn)`` of real argument ``u`` (scalar or array) and modulus ``k``.

    Uses the descending Landen / AGM scheme: the AGM of (1, k') is run
    until c_n / a_n < 1e-15, the amplitude is formed as 2^N a_N u and
    then unwound with sin(2 phi_{n-1} - phi_n) = (c_n / a_n) sin(phi_n).
    Works for every real u; periodicity is built into the amplitude.
    ``k = 0`` and ``k = 1`` short-circuit to sin/cos and tanh/sech.
    """
    k = float(k)
    _check_modulus(k)
    u_arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u_arr)):
        raise DomainError("argument u must be finite")

    if k == 0.0:
        sn, cn, dn = np.sin(u_arr), np.cos(u_arr), np.ones_like(u_arr)
    elif k == 1.0:
        sn, cn = np.tanh(u_arr), 1.0 / np.cosh(u_arr)
        dn = cn.copy()
    else:
        a = 1.0
        b = np.sqrt((1.0 - k) * (1.0 + k))
        c = k
        ratios = []
        while abs(c / a) >= _LANDEN_TOL and len(ratios) < 64:
            a, b, c = 0.5 * (a + b), np.sqrt(a * b), 0.5 * (a - b)
            ratios.append(c / a)
        n = len(ratios)
        phi = (2.0 ** n) * a * u_arr
        for r in reversed(ratios):
            phi = 0.5 * (phi + np.arcsin(r * np.sin(phi)))
        sn, cn = np.sin(phi), np.cos(phi)
        # dn >= k' > 0, so the positive root is the right branch; this is
        # more accurate than cos(phi0) / cos(phi1 - phi0) near cn = 0
        dn = np.sqrt((1.0 - k * sn) * (1.0 + k * sn))

    if np.ndim(u) == 0:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn


def complete_elliptic_K(k):
    """Quarter period K(k) = pi / (2 AGM(1, k'))."""
    k = float(k)
    if not np.isfinite(k) or k < 0.0:
        raise DomainError(f"modulus k must lie in [0, 1), got {k}")
    if k > _K_LIMIT:
        raise DomainError(f"K(k) diverges as k -> 1; refusing k = {k!r}")
    if k == 0.0:
        return np.pi / 2.0
    a, b = 1.0, np.sqrt((1.0 - k) * (1.0 + k))
    for _ in range(64):
        if abs(a - b) <= _AGM_TOL * a:
            break
        a, b = 0.5 * (a + b), np.sqrt(a * b)
    return np.pi / (a + b)


def jacobi_derivatives(sn, cn, dn, k):
    """d/du of (sn, cn, dn) expressed through the function values."""
    return cn * dn, -sn * dn, -(k * k) * sn * cn
