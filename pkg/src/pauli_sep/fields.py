"""Electromagnetic quantities of a separable configuration.

The charge is never stored on its own: every field carries it
premultiplied (eH, eA, eA0), and a gauge function passed to
``gauge_transform`` is likewise the product e*f.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import coords
from .errors import DomainError
from .frame import omega_of_x, rotation_matrix, x_prime
from .timefunc import Constant, TimeFunction, as_timefunction, from_dict


@dataclass(frozen=True)
class FCoefficients:
    """Scalar coefficients F_00(t), F_10(w1), F_20(w2), F_30(w3)."""

    F00: TimeFunction = Constant(0.0)
    F10: TimeFunction = Constant(0.0)
    F20: TimeFunction = Constant(0.0)
    F30: TimeFunction = Constant(0.0)

    def __post_init__(self):
        for name in ("F00", "F10", "F20", "F30"):
            object.__setattr__(self, name, as_timefunction(getattr(self, name)))

    def spatial(self, omega):
        """(F_10(w1), F_20(w2), F_30(w3)) stacked along the last axis."""
        w = np.asarray(omega, dtype=float)
        vals = [self.F10(w[..., 0]), self.F20(w[..., 1]), self.F30(w[..., 2])]
        return np.stack(np.broadcast_arrays(*vals), axis=-1)

    def to_dict(self):
        return {k: getattr(self, k).to_dict() for k in ("F00", "F10", "F20", "F30")}

    @classmethod
    def from_dict(cls, record):
        unknown = set(record) - {"F00", "F10", "F20", "F30"}
        if unknown:
            raise DomainError(f"unknown coefficient keys {sorted(unknown)}")
        return cls(**{k: from_dict(v) for k, v in record.items()})


@dataclass(frozen=True)
class ElectromagneticPotential:
    """Callables eH(t) -> (3,), eA(t, x) -> (..., 3), eA0(t, x) -> (...)."""

    eH: Callable
    eA: Callable
    eA0: Callable


def magnetic_field(f, t):
    """eH(t) of the separable configuration, from the Euler angles of the frame."""
    a, b, g = f.angles(t)
    da, db, dg = f.angles(t, 1)
    return np.stack(np.broadcast_arrays(
        -dg * np.cos(a) - db * np.sin(a) * np.sin(g),
        -dg * np.sin(a) + db * np.cos(a) * np.sin(g),
        -da - db * np.cos(g),
    ), axis=-1)


def vector_potential(eH, x):
    """eA = (1/2) eH x x."""
    return 0.5 * np.cross(np.asarray(eH, dtype=float), np.asarray(x, dtype=float))


def A_squared(eH, x):
    """e^2 A.A written as the sum of squared cross-product components over four."""
    H = np.asarray(eH, dtype=float)
    x = np.asarray(x, dtype=float)
    H1, H2, H3 = H[..., 0], H[..., 1], H[..., 2]
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    return 0.25 * ((H2 * x3 - H3 * x2) ** 2 + (H3 * x1 - H1 * x3) ** 2 + (H2 * x1 - H1 * x2) ** 2)


def _frame_terms(f, t):
    l = f.scales(t)
    if np.any(l == 0):
        raise DomainError("zero scale")
    return l, f.scales(t, 1), f.scales(t, 2), f.translation(t, 1), f.translation(t, 2)


def P_function(f, t, xp):
    xp = np.asarray(xp, dtype=float)
    l, dl, ddl, dv, ddv = _frame_terms(f, t)
    terms = ddl / l * xp ** 2 + 2 * (l * ddv + 2 * dl * dv) * xp + l ** 2 * dv ** 2
    return np.sum(terms, axis=-1)


def S_phase(f, t, xp):
    """Real phase S of the multiplier, as a function of the rotated point x'."""
    xp = np.asarray(xp, dtype=float)
    l, dl, _, dv, _ = _frame_terms(f, t)
    return 0.25 * np.sum(dl / l * xp ** 2 + 2 * l * dv * xp, axis=-1)


def grad_S(f, t, x):
    """Exact gradient of S with respect to x (not x')."""
    l, dl, _, dv, _ = _frame_terms(f, t)
    xp = x_prime(f, t, x)
    g_prime = 0.5 * (dl / l * xp + l * dv)
    return np.einsum("...ij,...j->...i", rotation_matrix(f, t), g_prime)


def scalar_potential(f, F, t, x, omega=None):
    """eA0(t, x) assembled from the coefficients, eikonals, |eA|^2 and P.

    ``omega`` may carry precomputed coordinates of ``x`` (or a guess is
    seeded automatically).
    """
    x = np.asarray(x, dtype=float)
    if omega is None:
        omega = omega_of_x(f, t, x)
    R = coords.eikonal(f.system, omega, f.scales(t))
    spatial = np.sum(F.spatial(omega) * R, axis=-1)
    eH = magnetic_field(f, t)
    return spatial - F.F00(t) - A_squared(eH, x) - 0.25 * P_function(f, t, x_prime(f, t, x))


def separable_potential(f, F, guess_fn=None):
    """ElectromagneticPotential of the frame/coefficients pair.

    ``guess_fn(t, x)`` optionally supplies Newton guesses for the inversion.
    """

    def eA0(t, x):
        guess = guess_fn(t, x) if guess_fn is not None else None
        return scalar_potential(f, F, t, x, omega=omega_of_x(f, t, x, guess=guess))

    return ElectromagneticPotential(
        eH=lambda t: magnetic_field(f, t),
        eA=lambda t, x: vector_potential(magnetic_field(f, t), x),
        eA0=eA0,
    )


@dataclass(frozen=True)
class GaugeFunction:
    """Closed-form e*f(t, x) with exact gradient and time derivative."""

    value: Callable
    grad: Callable
    dt: Callable

    def phase(self, t, x):
        return np.exp(1j * self.value(t, x))


def linear_gauge(c_t=0.0, c_x=(0.0, 0.0, 0.0), c_tx=(0.0, 0.0, 0.0)):
    """e f = c_t t + c_x . x + t (c_tx . x)."""
    c_x = np.asarray(c_x, dtype=float)
    c_tx = np.asarray(c_tx, dtype=float)

    def value(t, x):
        x = np.asarray(x, dtype=float)
        return c_t * t + x @ c_x + t * (x @ c_tx)

    def grad(t, x):
        return np.broadcast_to(c_x + t * c_tx, np.shape(x)).copy()

    def dt(t, x):
        x = np.asarray(x, dtype=float)
        return c_t + x @ c_tx

    return GaugeFunction(value, grad, dt)


def gauge_transform(pot, gauge):
    """eA' = eA + grad(ef), eA0' = eA0 - d(ef)/dt; eH is unchanged."""
    return ElectromagneticPotential(
        eH=pot.eH,
        eA=lambda t, x: pot.eA(t, x) + gauge.grad(t, x),
        eA0=lambda t, x: pot.eA0(t, x) - gauge.dt(t, x),
    )


# --- finite-difference Maxwell check ------------------------------------------

_E = np.eye(3)


def _fd_terms(pot, t, X, h):
    """Signed residual vectors of the two vacuum Maxwell equations at points X."""
    A0 = pot.eA0
    A = pot.eA

    def lap(fn, tt):
        c = fn(tt, X)
        return sum(fn(tt, X + h * _E[i]) - 2 * c + fn(tt, X - h * _E[i]) for i in range(3)) / h ** 2

    def div(tt, Y):
        return sum(A(tt, Y + h * _E[i])[..., i] - A(tt, Y - h * _E[i])[..., i] for i in range(3)) / (2 * h)

    def dA0dt(tt, Y):
        return (A0(tt + h, Y) - A0(tt - h, Y)) / (2 * h)

    d2A0dt2 = (A0(t + h, X) - 2 * A0(t, X) + A0(t - h, X)) / h ** 2
    d2Adt2 = (A(t + h, X) - 2 * A(t, X) + A(t - h, X)) / h ** 2
    lapA0 = lap(A0, t)
    lapA = sum(A(t, X + h * _E[i]) - 2 * A(t, X) + A(t, X - h * _E[i]) for i in range(3)) / h ** 2

    def L(tt, Y):
        return dA0dt(tt, Y) + div(tt, Y)

    dL_dt = (L(t + h, X) - L(t - h, X)) / (2 * h)
    grad_L = np.stack([(L(t, X + h * _E[i]) - L(t, X - h * _E[i])) / (2 * h) for i in range(3)], axis=-1)
    r0 = d2A0dt2 - lapA0 - dL_dt
    rA = d2Adt2 - lapA + grad_L
    return r0, rA, dL_dt, grad_L


def maxwell_residual(pot, grid, h=1e-2, richardson=True, points=None):
    """Max-norm residuals (r_A0, r_A, r_gauge_coupling) of the vacuum Maxwell equations.

    Second-order central differences with step ``h`` in t and x.  With
    ``richardson`` the h and h/2 stencils are combined pointwise,
    (4 r(h/2) - r(h)) / 3, cancelling the leading truncation term; the
    singular Coulomb-like terms otherwise dominate the residual near
    exclusion balls.  ``points`` overrides the grid's own point set (the
    grid still supplies the time slices).
    """
    X = grid.points() if points is None else np.asarray(points, dtype=float)
    if X.size == 0:
        raise DomainError("grid has no points outside the exclusions")
    out = np.zeros(3)
    for t in grid.times:
        r = _fd_terms(pot, t, X, h)
        if richardson:
            r_half = _fd_terms(pot, t, X, h / 2)
            r = tuple((4 * b - a) / 3 for a, b in zip(r, r_half))
        if not all(np.all(np.isfinite(v)) for v in r):
            raise DomainError("non-finite potential values on the stencil; enlarge the exclusions")
        r0, rA, dL_dt, grad_L = r
        coupling = max(np.max(np.abs(dL_dt)), np.max(np.abs(grad_L)))
        out = np.maximum(out, [np.max(np.abs(r0)), np.max(np.abs(rA)), coupling])
    return tuple(float(v) for v in out)
