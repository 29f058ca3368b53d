"""2x2 spin algebra, the unitary propagator U(t) and the multiplier Q(t, x).

Matrices are plain complex numpy arrays of shape (..., 2, 2); spinors are
shape (..., 2).
"""
import math

import numpy as np

from .errors import DomainError, IntegrationError
from .fields import S_phase
from .frame import x_prime

IDENTITY = np.eye(2, dtype=complex)
SIGMA = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)

UNITARITY_LIMIT = 1e-6


def pauli_sigma(i):
    """sigma_i for i in {1, 2, 3}."""
    if i not in (1, 2, 3):
        raise DomainError(f"Pauli index must be 1, 2 or 3, got {i!r}")
    return SIGMA[i - 1].copy()


def sigma_dot(v):
    """sigma . v for real vectors of shape (..., 3)."""
    return np.einsum("...i,ijk->...jk", np.asarray(v, dtype=float), SIGMA)


def is_unitary(U, tol=1e-10):
    return unitarity_defect(U) < tol


def is_hermitian(M, tol=1e-12):
    M = np.asarray(M)
    return float(np.max(np.abs(M - np.conj(np.swapaxes(M, -1, -2))))) < tol


def unitarity_defect(U):
    """Frobenius norm of U*U - I (max over leading axes)."""
    U = np.asarray(U)
    D = np.conj(np.swapaxes(U, -1, -2)) @ U - IDENTITY
    return float(np.max(np.sqrt(np.sum(np.abs(D) ** 2, axis=(-1, -2)))))


def _generator(eH_values):
    # dU/dt = i (sigma . eH) U
    return 1j * sigma_dot(eH_values)


def _rk4(eH, t0, t1, step, check=True):
    """RK4 from U(t0) = I to t1 with n equal steps of size at most |step|.

    Returns the node times, node values and node derivatives.
    """
    span = t1 - t0
    n = max(1, int(math.ceil(abs(span) / step - 1e-12))) if span != 0 else 0
    if n == 0:
        ts = np.array([t0])
        G = _generator(np.asarray(eH(ts)).reshape(1, 3))
        U = IDENTITY[None].copy()
        return ts, U, G @ U
    h = span / n
    half_times = t0 + 0.5 * h * np.arange(2 * n + 1)
    G = _generator(np.asarray(eH(half_times), dtype=float).reshape(-1, 3))
    U = np.empty((n + 1, 2, 2), dtype=complex)
    U[0] = IDENTITY
    cur = IDENTITY.copy()
    for j in range(n):
        Ga, Gm, Gb = G[2 * j], G[2 * j + 1], G[2 * j + 2]
        k1 = Ga @ cur
        k2 = Gm @ (cur + 0.5 * h * k1)
        k3 = Gm @ (cur + 0.5 * h * k2)
        k4 = Gb @ (cur + h * k3)
        cur = cur + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        U[j + 1] = cur
    defect = unitarity_defect(U)
    if check and defect > UNITARITY_LIMIT:
        raise IntegrationError(f"unitarity drift {defect:.2e} exceeds {UNITARITY_LIMIT}; reduce the step")
    ts = half_times[::2]
    return ts, U, G[::2] @ U


def solve_U(eH, t, step=1e-3, check=True):
    """U(t) solving i dU/dt = -(sigma . eH(t)) U with U(0) = I (classical RK4).

    ``eH`` maps an array of times to an array of shape (n, 3).  With
    ``check`` an IntegrationError is raised when |U*U - I| drifts above
    1e-6 anywhere along the way.
    """
    if not step > 0:
        raise DomainError("step must be positive")
    _, U, _ = _rk4(eH, 0.0, float(t), step, check)
    return U[-1]


class Propagator:
    """U(t) tabulated on [t_min, t_max] and evaluated by cubic Hermite interpolation.

    Node derivatives come from the ODE right-hand side, so the interpolant
    is C^1 and exact at the nodes.
    """

    def __init__(self, eH, t_min=0.0, t_max=1.0, step=1e-3):
        if not step > 0:
            raise DomainError("step must be positive")
        t_min, t_max = min(float(t_min), 0.0), max(float(t_max), 0.0)
        self.eH = eH
        self.step = step
        parts = []
        if t_min < 0:
            ts, U, dU = _rk4(eH, 0.0, t_min, step)
            parts.append((ts[::-1], U[::-1], dU[::-1]))
        ts, U, dU = _rk4(eH, 0.0, t_max, step)
        if parts:
            ts, U, dU = (np.concatenate([p, q[1:]]) for p, q in zip(parts[0], (ts, U, dU)))
        self.times, self.values, self.derivs = ts, U, dU

    @property
    def span(self):
        return self.times[0], self.times[-1]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.span
        if np.any(t < lo - 1e-12) or np.any(t > hi + 1e-12):
            raise DomainError(f"t outside tabulated span [{lo}, {hi}]")
        if len(self.times) == 1:
            return np.broadcast_to(self.values[0], t.shape + (2, 2)).copy()
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2)
        t0, t1 = self.times[idx], self.times[idx + 1]
        h = (t1 - t0)[..., None, None]
        s = ((t - t0) / (t1 - t0))[..., None, None]
        h00 = 2 * s ** 3 - 3 * s ** 2 + 1
        h10 = s ** 3 - 2 * s ** 2 + s
        h01 = -2 * s ** 3 + 3 * s ** 2
        h11 = s ** 3 - s ** 2
        return (h00 * self.values[idx] + h10 * h * self.derivs[idx]
                + h01 * self.values[idx + 1] + h11 * h * self.derivs[idx + 1])

    def unitarity_defect(self):
        return unitarity_defect(self.values)

    def richardson_error(self):
        """Error estimate at the final node from one step-halving: |U_h - U_{h/2}| * 16/15."""
        t_end = self.times[-1]
        fine = solve_U(self.eH, t_end, self.step / 2)
        return float(np.max(np.abs(self.values[-1] - fine))) * 16.0 / 15.0


def S1_damping(f, t):
    """-1/2 sum ln l_a."""
    l = f.scales(t)
    if np.any(l <= 0):
        raise DomainError("S1 needs positive scales")
    return -0.5 * np.sum(np.log(l), axis=-1)


def Q_multiplier(f, t, x, U):
    """Q = U (l1 l2 l3)^{-1/2} exp(i S), with S evaluated at x' = O^T x.

    ``U`` is the propagator value at ``t``; the result has shape (..., 2, 2)
    for points x of shape (..., 3).
    """
    l = f.scales(t)
    prod = float(np.prod(l))
    if prod <= 0:
        raise DomainError("Q needs l1 l2 l3 > 0")
    scalar = np.exp(1j * S_phase(f, t, x_prime(f, t, x))) / np.sqrt(prod)
    return np.asarray(U)[..., :, :] * np.asarray(scalar)[..., None, None]
