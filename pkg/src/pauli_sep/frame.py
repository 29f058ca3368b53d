"""Time-dependent rotation + dilatation + translation frame x = O(t) L(t) (z(omega) + v(t))."""
from dataclasses import dataclass, field

import numpy as np

from . import coords
from .coords import CoordSystem, SplitClass
from .errors import ConstructionError, DomainError
from .timefunc import Constant, TimeFunction, as_timefunction, from_dict


def hat(w):
    """Antisymmetric matrix with hat(w) @ x == cross(w, x)."""
    w = np.asarray(w, dtype=float)
    H = np.zeros(w.shape[:-1] + (3, 3))
    H[..., 0, 1], H[..., 0, 2] = -w[..., 2], w[..., 1]
    H[..., 1, 0], H[..., 1, 2] = w[..., 2], -w[..., 0]
    H[..., 2, 0], H[..., 2, 1] = -w[..., 1], w[..., 0]
    return H


def vee(M):
    """Inverse of ``hat`` applied to the antisymmetric part of M."""
    M = np.asarray(M, dtype=float)
    A = 0.5 * (M - np.swapaxes(M, -1, -2))
    return np.stack([A[..., 2, 1], A[..., 0, 2], A[..., 1, 0]], axis=-1)


def euler_rotation(alpha, beta, gamma):
    """The orthogonal matrix with the given Euler angles (any broadcastable shapes)."""
    alpha, beta, gamma = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (alpha, beta, gamma)))
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(beta), np.sin(beta)
    cg, sg = np.cos(gamma), np.sin(gamma)
    rows = [
        [ca * cb - sa * sb * cg, -ca * sb - sa * cb * cg, sa * sg],
        [sa * cb + ca * sb * cg, -sa * sb + ca * cb * cg, -ca * sg],
        [sb * sg, cb * sg, cg],
    ]
    rows = [np.broadcast_arrays(*r) for r in rows]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def angular_velocity_from_angles(alpha, beta, gamma, dalpha, dbeta, dgamma):
    return np.stack(np.broadcast_arrays(
        dgamma * np.cos(alpha) + dbeta * np.sin(alpha) * np.sin(gamma),
        dgamma * np.sin(alpha) - dbeta * np.cos(alpha) * np.sin(gamma),
        dalpha + dbeta * np.cos(gamma),
    ), axis=-1)


def _tf(obj):
    return as_timefunction(obj)


@dataclass(frozen=True)
class EulerFrame:
    """Moving frame bound to a coordinate family.

    Scales must not vanish on ``window`` and must satisfy the split-class
    pattern of ``system`` (l1 = l2 for families 2-4, all equal for 5-11).
    """

    system: CoordSystem
    alpha: TimeFunction = Constant(0.0)
    beta: TimeFunction = Constant(0.0)
    gamma: TimeFunction = Constant(0.0)
    l1: TimeFunction = Constant(1.0)
    l2: TimeFunction = Constant(1.0)
    l3: TimeFunction = Constant(1.0)
    v1: TimeFunction = Constant(0.0)
    v2: TimeFunction = Constant(0.0)
    v3: TimeFunction = Constant(0.0)
    window: tuple = (0.0, 1.0)
    _checks: int = field(default=401, repr=False, compare=False)

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "l1", "l2", "l3", "v1", "v2", "v3"):
            object.__setattr__(self, name, _tf(getattr(self, name)))
        t0, t1 = (float(x) for x in self.window)
        if not t1 >= t0:
            raise ConstructionError(f"time window must be increasing, got {self.window}")
        object.__setattr__(self, "window", (t0, t1))
        ts = np.linspace(t0, t1, self._checks)
        scales = [l(ts) for l in (self.l1, self.l2, self.l3)]
        for i, vals in enumerate(scales, start=1):
            if np.any(vals == 0) or np.any(np.sign(vals) != np.sign(vals[0])):
                raise ConstructionError(f"scale l{i} vanishes inside the window {self.window}")
        sc = self.system.split_class

        def same(f, g):
            for order in range(3):
                a, b = f.derivative(ts, order), g.derivative(ts, order)
                if not np.allclose(a, b, rtol=1e-12, atol=1e-12):
                    return False
            return True

        if sc in (SplitClass.PARTIALLY_SPLIT, SplitClass.NON_SPLIT) and not same(self.l1, self.l2):
            raise ConstructionError(f"{self.system.name} requires l1 == l2")
        if sc == SplitClass.NON_SPLIT and not same(self.l1, self.l3):
            raise ConstructionError(f"{self.system.name} requires l1 == l2 == l3")

    # --- component access -------------------------------------------------
    def angles(self, t, order=0):
        return tuple(f.derivative(t, order) for f in (self.alpha, self.beta, self.gamma))

    def scales(self, t, order=0):
        return np.stack(np.broadcast_arrays(*(f.derivative(t, order) for f in (self.l1, self.l2, self.l3))), axis=-1)

    def translation(self, t, order=0):
        return np.stack(np.broadcast_arrays(*(f.derivative(t, order) for f in (self.v1, self.v2, self.v3))), axis=-1)

    def to_dict(self):
        out = {"system": self.system.to_dict(), "window": list(self.window)}
        for name in ("alpha", "beta", "gamma", "l1", "l2", "l3", "v1", "v2", "v3"):
            out[name] = getattr(self, name).to_dict()
        return out

    @classmethod
    def from_dict(cls, record, system=None):
        record = dict(record)
        sys_rec = record.pop("system", None)
        if system is None:
            if sys_rec is None:
                raise ConstructionError("frame record needs a coordinate system")
            system = CoordSystem.from_dict(sys_rec)
        allowed = {"alpha", "beta", "gamma", "l1", "l2", "l3", "v1", "v2", "v3", "window"}
        unknown = set(record) - allowed
        if unknown:
            raise ConstructionError(f"unknown frame keys {sorted(unknown)}")
        kwargs = {k: from_dict(v) if isinstance(v, dict) else v for k, v in record.items()}
        if "window" in kwargs:
            kwargs["window"] = tuple(kwargs["window"])
        return cls(system, **kwargs)


def rotation_matrix(f, t):
    return euler_rotation(*f.angles(t))


def angular_velocity(f, t):
    """Omega(t) from the Euler angles and their exact rates."""
    return angular_velocity_from_angles(*f.angles(t), *f.angles(t, 1))


def rotation_rate_matrix(f, t):
    """dO/dt O^{-1} written out entrywise from the Euler angles and rates."""
    a, b, g = f.angles(t)
    da, db, dg = f.angles(t, 1)
    p = da + db * np.cos(g)
    q = dg * np.sin(a) - db * np.cos(a) * np.sin(g)
    r = dg * np.cos(a) + db * np.sin(a) * np.sin(g)
    p, q, r = np.broadcast_arrays(p, q, r)
    zero = np.zeros_like(p)
    return np.stack([
        np.stack([zero, -p, q], axis=-1),
        np.stack([p, zero, -r], axis=-1),
        np.stack([-q, r, zero], axis=-1),
    ], axis=-2)


def rotation_derivative(f, t):
    """dO/dt, exact."""
    return rotation_rate_matrix(f, t) @ rotation_matrix(f, t)


def M_matrix(f, t):
    """(dO/dt O^{-1}, O dL/dt L^{-1} O^{-1}): antisymmetric and symmetric parts."""
    l = f.scales(t)
    if np.any(l == 0):
        raise DomainError("zero scale")
    O = rotation_matrix(f, t)
    rate = f.scales(t, 1) / l
    sym = O @ (rate[..., :, None] * np.swapaxes(O, -1, -2))
    return rotation_rate_matrix(f, t), sym


def x_of_omega(f, t, omega):
    """x = O L (z(omega) + v)."""
    z = coords.z_of_omega(f.system, omega)
    inner = f.scales(t) * (z + f.translation(t))
    return np.einsum("...ij,...j->...i", rotation_matrix(f, t), inner)


def x_prime(f, t, x):
    """x' = O^{-1} x = O^T x."""
    return np.einsum("...ji,...j->...i", rotation_matrix(f, t), np.asarray(x, dtype=float))


def z_of_x(f, t, x):
    """Frame-inverted point z = L^{-1} O^T x - v."""
    return x_prime(f, t, x) / f.scales(t) - f.translation(t)


def omega_of_x(f, t, x, guess=None):
    return coords.omega_of_z(f.system, z_of_x(f, t, x), guess=guess)
