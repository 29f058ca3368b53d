"""The eleven separable coordinate families z(omega) and their metric data.

Every function accepts ``omega`` of shape ``(..., 3)`` and broadcasts.
The eikonal and Staeckel formulas are the closed forms of the families;
nothing here is obtained by numerical differentiation.
"""
from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError, SingularityError
from .specialfn import complete_elliptic_K, jacobi_sn_cn_dn

DOMAIN_MARGIN = 1e-6
_DET_MIN = 1e-12


class Family(IntEnum):
    CARTESIAN = 1
    CYLINDRICAL = 2
    PARABOLIC_CYLINDRICAL = 3
    ELLIPTIC_CYLINDRICAL = 4
    SPHERICAL = 5
    PROLATE_SPHEROIDAL = 6
    OBLATE_SPHEROIDAL = 7
    PARABOLIC = 8
    PARABOLOIDAL = 9
    ELLIPSOIDAL = 10
    CONICAL = 11


class SplitClass(IntEnum):
    FULLY_SPLIT = 1
    PARTIALLY_SPLIT = 2
    NON_SPLIT = 3


_NAMES = {
    Family.CARTESIAN: "cartesian",
    Family.CYLINDRICAL: "cylindrical",
    Family.PARABOLIC_CYLINDRICAL: "parabolic_cylindrical",
    Family.ELLIPTIC_CYLINDRICAL: "elliptic_cylindrical",
    Family.SPHERICAL: "spherical",
    Family.PROLATE_SPHEROIDAL: "prolate_spheroidal",
    Family.OBLATE_SPHEROIDAL: "oblate_spheroidal",
    Family.PARABOLIC: "parabolic",
    Family.PARABOLOIDAL: "paraboloidal",
    Family.ELLIPSOIDAL: "ellipsoidal",
    Family.CONICAL: "conical",
}
_BY_NAME = {v: k for k, v in _NAMES.items()}

_NEEDS_A = {Family.ELLIPTIC_CYLINDRICAL, Family.PROLATE_SPHEROIDAL, Family.OBLATE_SPHEROIDAL,
            Family.PARABOLOIDAL, Family.ELLIPSOIDAL}
_NEEDS_K = {Family.ELLIPSOIDAL, Family.CONICAL}


@dataclass(frozen=True)
class CoordSystem:
    """A coordinate family with its geometric parameters.

    ``variant`` is only meaningful for the prolate spheroidal family: +1 or
    -1 selects the shifted form z_3 = a (coth w1 tanh w2 +- 1).
    """

    family: Family
    a: float = None
    k: float = None
    variant: int = 0

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if fam in _NEEDS_A:
            if self.a is None or not self.a > 0:
                raise DomainError(f"{fam.name} needs a > 0, got a={self.a}")
            object.__setattr__(self, "a", float(self.a))
        elif self.a is not None:
            raise DomainError(f"{fam.name} takes no parameter a")
        if fam in _NEEDS_K:
            if self.k is None or not 0 < self.k < 1:
                raise DomainError(f"{fam.name} needs 0 < k < 1, got k={self.k}")
            object.__setattr__(self, "k", float(self.k))
        elif self.k is not None:
            raise DomainError(f"{fam.name} takes no modulus k")
        if self.variant not in (0, 1, -1):
            raise DomainError("variant must be 0, +1 or -1")
        if self.variant and fam != Family.PROLATE_SPHEROIDAL:
            raise DomainError("only the prolate spheroidal family has a shifted variant")

    @property
    def name(self):
        return _NAMES[self.family]

    @property
    def split_class(self):
        if self.family == Family.CARTESIAN:
            return SplitClass.FULLY_SPLIT
        if self.family <= Family.ELLIPTIC_CYLINDRICAL:
            return SplitClass.PARTIALLY_SPLIT
        return SplitClass.NON_SPLIT

    @property
    def k_prime(self):
        return float(np.sqrt((1.0 - self.k) * (1.0 + self.k)))

    @property
    def K(self):
        return complete_elliptic_K(self.k)

    @property
    def K_prime(self):
        return complete_elliptic_K(self.k_prime)

    def to_dict(self):
        out = {"family": self.name}
        if self.a is not None:
            out["a"] = self.a
        if self.k is not None:
            out["k"] = self.k
        if self.variant:
            out["variant"] = self.variant
        return out

    @classmethod
    def from_dict(cls, record):
        record = dict(record)
        fam = record.pop("family")
        if isinstance(fam, str):
            if fam not in _BY_NAME:
                raise DomainError(f"unknown coordinate family {fam!r}")
            fam = _BY_NAME[fam]
        unknown = set(record) - {"a", "k", "variant"}
        if unknown:
            raise DomainError(f"unknown coordinate keys {sorted(unknown)}")
        return cls(Family(fam), **record)


def coord_system(name, **params):
    """Build a CoordSystem from a family name (``"spherical"``) or index."""
    fam = _BY_NAME[name] if isinstance(name, str) else Family(name)
    return CoordSystem(fam, **params)


def all_families():
    return list(Family)


def family_description(fam):
    """(domain text, parameter names) of a family, for listings."""
    return _DESCRIPTIONS[Family(fam)]


_DESCRIPTIONS = {
    Family.CARTESIAN: ("w1, w2, w3 real", ()),
    Family.CYLINDRICAL: ("w1 real, 0 <= w2 < 2pi (periodic), w3 real", ()),
    Family.PARABOLIC_CYLINDRICAL: ("w1 > 0, w2 real, w3 real", ()),
    Family.ELLIPTIC_CYLINDRICAL: ("w1 > 0, -pi < w2 <= pi (periodic), w3 real", ("a",)),
    Family.SPHERICAL: ("w1 > 0, w2 real, 0 <= w3 < 2pi (periodic)", ()),
    Family.PROLATE_SPHEROIDAL: ("w1 > 0, w2 real, 0 <= w3 < 2pi (periodic)", ("a",)),
    Family.OBLATE_SPHEROIDAL: ("0 < w1 < pi/2, w2 real, 0 <= w3 < 2pi (periodic)", ("a",)),
    Family.PARABOLIC: ("w1, w2 real, 0 <= w3 < 2pi (periodic)", ()),
    Family.PARABOLOIDAL: ("w1, w3 real, 0 <= w2 < pi", ("a",)),
    Family.ELLIPSOIDAL: ("0 < w1 < K, -K' <= w2 <= K', 0 <= w3 <= 4K (periodic)", ("a", "k")),
    Family.CONICAL: ("w1 > 0, -K' <= w2 <= K', 0 <= w3 <= 4K (periodic)", ("k",)),
}


def _split(omega):
    w = np.asarray(omega, dtype=float)
    if w.shape[-1] != 3:
        raise DomainError(f"omega must have trailing dimension 3, got shape {w.shape}")
    return w[..., 0], w[..., 1], w[..., 2]


def _bounds(sys):
    """Per-axis open bounds (lo, hi); None means unbounded or periodic."""
    f = sys.family
    if f in (Family.PARABOLIC_CYLINDRICAL, Family.ELLIPTIC_CYLINDRICAL, Family.SPHERICAL,
             Family.PROLATE_SPHEROIDAL, Family.CONICAL):
        b = [(0.0, None), (None, None), (None, None)]
    elif f == Family.OBLATE_SPHEROIDAL:
        b = [(0.0, np.pi / 2), (None, None), (None, None)]
    elif f == Family.PARABOLOIDAL:
        b = [(None, None), (0.0, np.pi), (None, None)]
    elif f == Family.ELLIPSOIDAL:
        b = [(0.0, sys.K), (-sys.K_prime, sys.K_prime), (None, None)]
    else:
        b = [(None, None)] * 3
    if f == Family.CONICAL:
        b[1] = (-sys.K_prime, sys.K_prime)
    return b


def check_domain(sys, omega, margin=DOMAIN_MARGIN):
    """Raise DomainError unless every point lies inside the domain by ``margin``."""
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)):
        raise DomainError("omega contains non-finite entries")
    for axis, (lo, hi) in enumerate(_bounds(sys)):
        comp = w[..., axis]
        if lo is not None and np.any(comp <= lo + margin):
            raise DomainError(f"{sys.name}: omega_{axis + 1} must exceed {lo} (margin {margin}); "
                              f"min value {np.min(comp)}")
        if hi is not None and np.any(comp >= hi - margin):
            raise DomainError(f"{sys.name}: omega_{axis + 1} must stay below {hi} (margin {margin}); "
                              f"max value {np.max(comp)}")


def _elliptic(sys, w1, w2, w3):
    k, kp = sys.k, sys.k_prime
    sn1, cn1, dn1 = jacobi_sn_cn_dn(w1, k) if sys.family == Family.ELLIPSOIDAL else (None, None, None)
    sn2, cn2, dn2 = jacobi_sn_cn_dn(w2, kp)
    sn3, cn3, dn3 = jacobi_sn_cn_dn(w3, k)
    return (sn1, cn1, dn1), (sn2, cn2, dn2), (sn3, cn3, dn3)


def z_of_omega(sys, omega, check=True):
    """Cartesian point z(omega) of the family, shape ``(..., 3)``."""
    if check:
        check_domain(sys, omega)
    w1, w2, w3 = _split(omega)
    f, a = sys.family, sys.a
    if f == Family.CARTESIAN:
        z = (w1, w2, w3)
    elif f == Family.CYLINDRICAL:
        r = np.exp(w1)
        z = (r * np.cos(w2), r * np.sin(w2), w3)
    elif f == Family.PARABOLIC_CYLINDRICAL:
        z = ((w1 ** 2 - w2 ** 2) / 2, w1 * w2, w3)
    elif f == Family.ELLIPTIC_CYLINDRICAL:
        z = (a * np.cosh(w1) * np.cos(w2), a * np.sinh(w1) * np.sin(w2), w3)
    elif f == Family.SPHERICAL:
        rho = 1.0 / (w1 * np.cosh(w2))
        z = (rho * np.cos(w3), rho * np.sin(w3), np.tanh(w2) / w1)
    elif f == Family.PROLATE_SPHEROIDAL:
        rho = a / (np.sinh(w1) * np.cosh(w2))
        z3 = a * (np.tanh(w2) / np.tanh(w1) + sys.variant)
        z = (rho * np.cos(w3), rho * np.sin(w3), z3)
    elif f == Family.OBLATE_SPHEROIDAL:
        rho = a / (np.sin(w1) * np.cosh(w2))
        z = (rho * np.cos(w3), rho * np.sin(w3), a * np.tanh(w2) / np.tan(w1))
    elif f == Family.PARABOLIC:
        rho = np.exp(w1 + w2)
        z = (rho * np.cos(w3), rho * np.sin(w3), (np.exp(2 * w1) - np.exp(2 * w2)) / 2)
    elif f == Family.PARABOLOIDAL:
        z = (2 * a * np.cosh(w1) * np.cos(w2) * np.sinh(w3),
             2 * a * np.sinh(w1) * np.sin(w2) * np.cosh(w3),
             a * (np.cosh(2 * w1) + np.cos(2 * w2) - np.cosh(2 * w3)) / 2)
    elif f == Family.ELLIPSOIDAL:
        (sn1, cn1, dn1), (sn2, cn2, dn2), (sn3, cn3, dn3) = _elliptic(sys, w1, w2, w3)
        z = (a * dn2 * sn3 / sn1, a * dn1 * cn2 * cn3 / sn1, a * cn1 * sn2 * dn3 / sn1)
    else:
        _, (sn2, cn2, dn2), (sn3, cn3, dn3) = _elliptic(sys, w1, w2, w3)
        z = (dn2 * sn3 / w1, cn2 * cn3 / w1, sn2 * dn3 / w1)
    return np.stack(np.broadcast_arrays(*z), axis=-1)


def _jacobian_columns(sys, omega):
    w1, w2, w3 = _split(omega)
    f, a = sys.family, sys.a
    zero = np.zeros_like(w1)
    one = np.ones_like(w1)
    if f == Family.CARTESIAN:
        return (one, zero, zero), (zero, one, zero), (zero, zero, one)
    if f in (Family.CYLINDRICAL, Family.PARABOLIC_CYLINDRICAL, Family.ELLIPTIC_CYLINDRICAL):
        # conformal in (w1, w2): columns (p, q) and (-q, p)
        if f == Family.CYLINDRICAL:
            p, q = np.exp(w1) * np.cos(w2), np.exp(w1) * np.sin(w2)
        elif f == Family.PARABOLIC_CYLINDRICAL:
            p, q = w1, w2
        else:
            p, q = a * np.sinh(w1) * np.cos(w2), a * np.cosh(w1) * np.sin(w2)
        return (p, q, zero), (-q, p, zero), (zero, zero, one)
    if f in (Family.SPHERICAL, Family.PROLATE_SPHEROIDAL, Family.OBLATE_SPHEROIDAL):
        z = z_of_omega(sys, omega, check=False)
        z1, z2 = z[..., 0], z[..., 1]
        th2 = np.tanh(w2)
        sech2_sq = 1.0 / np.cosh(w2) ** 2
        if f == Family.SPHERICAL:
            c1 = (-z1 / w1, -z2 / w1, -z[..., 2] / w1)
            c2 = (-z1 * th2, -z2 * th2, sech2_sq / w1)
        elif f == Family.PROLATE_SPHEROIDAL:
            coth1 = 1.0 / np.tanh(w1)
            c1 = (-z1 * coth1, -z2 * coth1, -a * th2 / np.sinh(w1) ** 2)
            c2 = (-z1 * th2, -z2 * th2, a * coth1 * sech2_sq)
        else:
            cot1 = 1.0 / np.tan(w1)
            c1 = (-z1 * cot1, -z2 * cot1, -a * th2 / np.sin(w1) ** 2)
            c2 = (-z1 * th2, -z2 * th2, a * cot1 * sech2_sq)
        return c1, c2, (-z2, z1, zero)
    if f == Family.PARABOLIC:
        e = np.exp(w1 + w2)
        z1, z2 = e * np.cos(w3), e * np.sin(w3)
        return (z1, z2, np.exp(2 * w1)), (z1, z2, -np.exp(2 * w2)), (-z2, z1, zero)
    if f == Family.PARABOLOIDAL:
        ch1, sh1 = np.cosh(w1), np.sinh(w1)
        c2, s2 = np.cos(w2), np.sin(w2)
        ch3, sh3 = np.cosh(w3), np.sinh(w3)
        return ((2 * a * sh1 * c2 * sh3, 2 * a * ch1 * s2 * ch3, a * np.sinh(2 * w1)),
                (-2 * a * ch1 * s2 * sh3, 2 * a * sh1 * c2 * ch3, -a * np.sin(2 * w2)),
                (2 * a * ch1 * c2 * ch3, 2 * a * sh1 * s2 * sh3, -a * np.sinh(2 * w3)))
    k, kp = sys.k, sys.k_prime
    e1, (sn2, cn2, dn2), (sn3, cn3, dn3) = _elliptic(sys, w1, w2, w3)
    if f == Family.ELLIPSOIDAL:
        sn1, cn1, dn1 = e1
        s1sq = sn1 ** 2
        col1 = (-a * dn2 * sn3 * cn1 * dn1 / s1sq, -a * cn2 * cn3 * cn1 / s1sq, -a * sn2 * dn3 * dn1 / s1sq)
        col2 = (-a * kp ** 2 * sn2 * cn2 * sn3 / sn1, -a * dn1 * sn2 * dn2 * cn3 / sn1,
                a * cn1 * cn2 * dn2 * dn3 / sn1)
        col3 = (a * dn2 * cn3 * dn3 / sn1, -a * dn1 * cn2 * sn3 * dn3 / sn1,
                -a * k ** 2 * cn1 * sn2 * sn3 * cn3 / sn1)
        return col1, col2, col3
    inv = 1.0 / w1
    col1 = (-dn2 * sn3 * inv ** 2, -cn2 * cn3 * inv ** 2, -sn2 * dn3 * inv ** 2)
    col2 = (-kp ** 2 * sn2 * cn2 * sn3 * inv, -sn2 * dn2 * cn3 * inv, cn2 * dn2 * dn3 * inv)
    col3 = (dn2 * cn3 * dn3 * inv, -cn2 * sn3 * dn3 * inv, -k ** 2 * sn2 * sn3 * cn3 * inv)
    return col1, col2, col3


def jacobian(sys, omega, check=True):
    """Exact dz_i/domega_j, shape ``(..., 3, 3)``; raises on the singular locus."""
    if check:
        check_domain(sys, omega)
    cols = _jacobian_columns(sys, omega)
    shape = np.shape(omega)[:-1]
    J = np.empty(shape + (3, 3))
    for j, col in enumerate(cols):
        for i, entry in enumerate(col):
            J[..., i, j] = entry
    if check:
        det = np.linalg.det(J)
        if np.any(np.abs(det) <= _DET_MIN):
            raise SingularityError(f"{sys.name}: Jacobian singular (min |det| = {np.min(np.abs(det)):.3e})")
    return J


def eikonal(sys, omega, scales):
    """R_a^{-2} = |grad omega_a|^2 for x = L z(omega), with h_a taken as the scale l_a.

    Families 2-4 use l_1 for the first two axes and l_3 for the third;
    families 5-11 use l_1 throughout (the split-class constraints make the
    other scales equal to it).
    """
    check_domain(sys, omega)
    l = np.asarray(scales, dtype=float)
    if l.shape[-1] != 3 or np.any(l == 0):
        raise DomainError(f"scales must be three nonzero numbers, got {scales}")
    g1 = 1.0 / l[..., 0] ** 2
    g2 = 1.0 / l[..., 1] ** 2
    g3 = 1.0 / l[..., 2] ** 2
    w1, w2, w3 = _split(omega)
    f, a = sys.family, sys.a
    if f == Family.CARTESIAN:
        r = (g1 * np.ones_like(w1), g2 * np.ones_like(w1), g3 * np.ones_like(w1))
    elif f in (Family.CYLINDRICAL, Family.PARABOLIC_CYLINDRICAL, Family.ELLIPTIC_CYLINDRICAL):
        if f == Family.CYLINDRICAL:
            base = np.exp(-2 * w1)
        elif f == Family.PARABOLIC_CYLINDRICAL:
            base = 1.0 / (w1 ** 2 + w2 ** 2)
        else:
            base = 1.0 / (a ** 2 * (np.cosh(w1) ** 2 - np.cos(w2) ** 2))
        r = (g1 * base, g1 * base, g3 * np.ones_like(w1))
    elif f == Family.SPHERICAL:
        r = (g1 * w1 ** 4, g1 * w1 ** 2 * np.cosh(w2) ** 2, g1 * w1 ** 2 * np.cosh(w2) ** 2)
    elif f == Family.PROLATE_SPHEROIDAL:
        s1, c2 = np.sinh(w1) ** 2, np.cosh(w2) ** 2
        d = 1.0 / (1.0 / s1 + 1.0 / c2)
        r = (g1 / a ** 2 * s1 * d, g1 / a ** 2 * c2 * d, g1 / a ** 2 * s1 * c2)
    elif f == Family.OBLATE_SPHEROIDAL:
        s1, c2 = np.sin(w1) ** 2, np.cosh(w2) ** 2
        d = 1.0 / (1.0 / s1 - 1.0 / c2)
        r = (g1 / a ** 2 * s1 * d, g1 / a ** 2 * c2 * d, g1 / a ** 2 * s1 * c2)
    elif f == Family.PARABOLIC:
        s = np.exp(2 * w1) + np.exp(2 * w2)
        r = (g1 * np.exp(-2 * w1) / s, g1 * np.exp(-2 * w2) / s, g1 * np.exp(-2 * (w1 + w2)))
    elif f == Family.PARABOLOIDAL:
        A, B, C = np.cosh(2 * w1), np.cos(2 * w2), np.cosh(2 * w3)
        pre = g1 / a ** 2
        r = (pre / ((A - B) * (A + C)), pre / ((A - B) * (B + C)), pre / ((A + C) * (B + C)))
    else:
        k, kp = sys.k, sys.k_prime
        e1, (_, cn2, _), (_, cn3, _) = _elliptic(sys, w1, w2, w3)
        q2 = kp ** 2 * cn2 ** 2
        q3 = k ** 2 * cn3 ** 2
        if f == Family.ELLIPSOIDAL:
            sn1, _, dn1 = e1
            q1 = dn1 ** 2 / sn1 ** 2
            pre = g1 / a ** 2
            r = (pre / ((q1 - q2) * (q1 + q3)), pre / ((q1 - q2) * (q2 + q3)), pre / ((q1 + q3) * (q2 + q3)))
        else:
            r = (g1 * w1 ** 4, g1 * w1 ** 2 / (q2 + q3), g1 * w1 ** 2 / (q2 + q3))
    return np.stack(np.broadcast_arrays(*r), axis=-1)


def stackel_matrix(sys, omega):
    """Staeckel matrix S_ab(omega_a), shape ``(..., 3, 3)``; row a depends on omega_a only."""
    check_domain(sys, omega)
    w1, w2, w3 = _split(omega)
    f, a = sys.family, sys.a
    shape = np.shape(omega)[:-1]
    S = np.zeros(shape + (3, 3))
    if f == Family.CARTESIAN:
        S[..., 0, 0] = S[..., 1, 1] = S[..., 2, 2] = 1.0
    elif f == Family.CYLINDRICAL:
        S[..., 0, 0], S[..., 0, 1] = np.exp(2 * w1), -1.0
        S[..., 1, 1] = 1.0
        S[..., 2, 2] = 1.0
    elif f == Family.PARABOLIC_CYLINDRICAL:
        S[..., 0, 0], S[..., 0, 1] = w1 ** 2, -1.0
        S[..., 1, 0], S[..., 1, 1] = w2 ** 2, 1.0
        S[..., 2, 2] = 1.0
    elif f == Family.ELLIPTIC_CYLINDRICAL:
        S[..., 0, 0], S[..., 0, 1] = a ** 2 * np.cosh(w1) ** 2, 1.0
        S[..., 1, 0], S[..., 1, 1] = -a ** 2 * np.cos(w2) ** 2, -1.0
        S[..., 2, 2] = 1.0
    elif f == Family.SPHERICAL:
        S[..., 0, 0], S[..., 0, 1] = w1 ** -4.0, -w1 ** -2.0
        S[..., 1, 1], S[..., 1, 2] = 1.0 / np.cosh(w2) ** 2, -1.0
        S[..., 2, 2] = 1.0
    elif f == Family.PROLATE_SPHEROIDAL:
        s1 = 1.0 / np.sinh(w1) ** 2
        c2 = 1.0 / np.cosh(w2) ** 2
        S[..., 0, :] = np.stack(np.broadcast_arrays(a ** 2 * s1 ** 2, -s1, -1.0), axis=-1)
        S[..., 1, :] = np.stack(np.broadcast_arrays(a ** 2 * c2 ** 2, c2, -1.0), axis=-1)
        S[..., 2, 2] = 1.0
    elif f == Family.OBLATE_SPHEROIDAL:
        s1 = 1.0 / np.sin(w1) ** 2
        c2 = 1.0 / np.cosh(w2) ** 2
        S[..., 0, :] = np.stack(np.broadcast_arrays(a ** 2 * s1 ** 2, -s1, 1.0), axis=-1)
        S[..., 1, :] = np.stack(np.broadcast_arrays(-a ** 2 * c2 ** 2, c2, -1.0), axis=-1)
        S[..., 2, 2] = 1.0
    elif f == Family.PARABOLIC:
        e1, e2 = np.exp(2 * w1), np.exp(2 * w2)
        S[..., 0, :] = np.stack(np.broadcast_arrays(e1 ** 2, -e1, -1.0), axis=-1)
        S[..., 1, :] = np.stack(np.broadcast_arrays(e2 ** 2, e2, -1.0), axis=-1)
        S[..., 2, 2] = 1.0
    elif f == Family.PARABOLOIDAL:
        A, B, C = np.cosh(2 * w1), np.cos(2 * w2), np.cosh(2 * w3)
        S[..., 0, :] = np.stack(np.broadcast_arrays(a ** 2 * A ** 2, -a * A, -1.0), axis=-1)
        S[..., 1, :] = np.stack(np.broadcast_arrays(-a ** 2 * B ** 2, a * B, 1.0), axis=-1)
        S[..., 2, :] = np.stack(np.broadcast_arrays(a ** 2 * C ** 2, a * C, -1.0), axis=-1)
    else:
        k, kp = sys.k, sys.k_prime
        e1, (_, cn2, _), (_, cn3, _) = _elliptic(sys, w1, w2, w3)
        q2 = kp ** 2 * cn2 ** 2
        q3 = k ** 2 * cn3 ** 2
        if f == Family.ELLIPSOIDAL:
            sn1, _, dn1 = e1
            q1 = dn1 ** 2 / sn1 ** 2
            S[..., 0, :] = np.stack(np.broadcast_arrays(a ** 2 * q1 ** 2, -q1, 1.0), axis=-1)
            S[..., 1, :] = np.stack(np.broadcast_arrays(-a ** 2 * q2 ** 2, q2, -1.0), axis=-1)
            S[..., 2, :] = np.stack(np.broadcast_arrays(a ** 2 * q3 ** 2, q3, 1.0), axis=-1)
        else:
            S[..., 0, 0], S[..., 0, 1] = w1 ** -4.0, -w1 ** -2.0
            S[..., 1, 1], S[..., 1, 2] = q2, -1.0
            S[..., 2, 1], S[..., 2, 2] = q3, 1.0
    return S


def periodic_axes(sys):
    """{axis index: period} for the angle-like coordinates of the family."""
    f = sys.family
    if f in (Family.CYLINDRICAL, Family.ELLIPTIC_CYLINDRICAL):
        return {1: 2 * np.pi}
    if f in (Family.SPHERICAL, Family.PROLATE_SPHEROIDAL, Family.OBLATE_SPHEROIDAL, Family.PARABOLIC):
        return {2: 2 * np.pi}
    if f in (Family.ELLIPSOIDAL, Family.CONICAL):
        return {2: 4 * sys.K}
    return {}


def stackel_row(sys, axis, w):
    """Row ``axis`` (0-based) of the Staeckel matrix as a function of omega_axis alone.

    The other two coordinates are pinned at the centre of ``sample_box``;
    the row does not depend on them.
    """
    w = np.asarray(w, dtype=float)
    centre = sample_box(sys).mean(axis=1)
    omega = np.broadcast_to(centre, w.shape + (3,)).copy()
    omega[..., axis] = w
    return stackel_matrix(sys, omega)[..., axis, :]


def T_functions(sys, scales):
    """Column (T_1, T_2, T_3) of the extended Staeckel matrix, from the frame scales."""
    l = np.asarray(scales, dtype=float)
    if np.any(l == 0):
        raise DomainError("scales must be nonzero")
    inv = 1.0 / l ** 2
    zero = np.zeros_like(inv[..., 0])
    if sys.split_class == SplitClass.FULLY_SPLIT:
        return inv
    if sys.split_class == SplitClass.PARTIALLY_SPLIT:
        return np.stack([inv[..., 0], zero, inv[..., 2]], axis=-1)
    return np.stack([inv[..., 0], zero, zero], axis=-1)


# --- sampling and inversion ---------------------------------------------------

def sample_box(sys):
    """A comfortable interior box (lo, hi) per axis used for seeding and tests."""
    f = sys.family
    if f == Family.CARTESIAN:
        return np.array([[-2.0, 2.0]] * 3)
    if f == Family.CYLINDRICAL:
        return np.array([[-1.0, 1.0], [0.0, 2 * np.pi], [-2.0, 2.0]])
    if f == Family.PARABOLIC_CYLINDRICAL:
        return np.array([[0.3, 2.0], [-2.0, 2.0], [-2.0, 2.0]])
    if f == Family.ELLIPTIC_CYLINDRICAL:
        return np.array([[0.2, 1.5], [-np.pi, np.pi], [-2.0, 2.0]])
    if f == Family.SPHERICAL:
        return np.array([[0.4, 2.5], [-1.5, 1.5], [0.0, 2 * np.pi]])
    if f == Family.PROLATE_SPHEROIDAL:
        return np.array([[0.3, 1.5], [-1.5, 1.5], [0.0, 2 * np.pi]])
    if f == Family.OBLATE_SPHEROIDAL:
        return np.array([[0.2, 1.35], [-1.5, 1.5], [0.0, 2 * np.pi]])
    if f == Family.PARABOLIC:
        return np.array([[-1.0, 1.0], [-1.0, 1.0], [0.0, 2 * np.pi]])
    if f == Family.PARABOLOIDAL:
        return np.array([[0.2, 1.2], [0.2, np.pi - 0.2], [0.2, 1.2]])
    if f == Family.ELLIPSOIDAL:
        return np.array([[0.15 * sys.K, 0.85 * sys.K], [-0.85 * sys.K_prime, 0.85 * sys.K_prime],
                         [0.0, 4 * sys.K]])
    return np.array([[0.4, 2.5], [-0.85 * sys.K_prime, 0.85 * sys.K_prime], [0.0, 4 * sys.K]])


def sample_interior(sys, n, rng):
    """``n`` random points from ``sample_box`` (well away from singular loci)."""
    box = sample_box(sys)
    u = rng.random((n, 3))
    return box[:, 0] + u * (box[:, 1] - box[:, 0])


@lru_cache(maxsize=64)
def _seed_table(sys):
    from scipy.spatial import cKDTree

    box = sample_box(sys)
    axes = [np.linspace(lo, hi, 25) for lo, hi in box]
    W = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    Z = z_of_omega(sys, W, check=False)
    return W, cKDTree(Z)


def seed_guess(sys, z):
    """Nearest tabulated omega whose image is closest to each z (coarse guess)."""
    W, tree = _seed_table(sys)
    _, idx = tree.query(np.asarray(z, dtype=float).reshape(-1, 3))
    return W[idx].reshape(np.shape(z))


def omega_of_z(sys, z, guess=None, max_iter=50, tol=1e-14):
    """Invert z_of_omega by damped Newton with the exact Jacobian.

    ``guess`` selects the branch; if omitted a coarse seed from a tabulated
    grid is used.  Iteration continues until the step is below
    ``tol * (1 + |omega|)`` so the result is accurate to roundoff, which the
    finite-difference checks downstream depend on.
    """
    z = np.asarray(z, dtype=float)
    if guess is None:
        guess = seed_guess(sys, z)
    w = np.array(np.broadcast_to(guess, z.shape), dtype=float)
    flat_w = w.reshape(-1, 3)
    flat_z = z.reshape(-1, 3)
    active = np.ones(len(flat_w), dtype=bool)
    lo_hi = _bounds(sys)

    def inside(cand):
        ok = np.all(np.isfinite(cand), axis=-1)
        for axis, (lo, hi) in enumerate(lo_hi):
            if lo is not None:
                ok &= cand[:, axis] > lo
            if hi is not None:
                ok &= cand[:, axis] < hi
        return ok

    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        wa = flat_w[idx]
        resid = z_of_omega(sys, wa, check=False) - flat_z[idx]
        J = jacobian(sys, wa, check=False)
        det = np.linalg.det(J)
        if np.any(~np.isfinite(det)) or np.any(np.abs(det) <= _DET_MIN):
            raise SingularityError(f"{sys.name}: singular Jacobian during inversion")
        step = np.linalg.solve(J, resid[..., None])[..., 0]
        rnorm = np.linalg.norm(resid, axis=-1)
        lam = np.ones(len(idx))
        cand = wa - step
        for _ in range(20):
            ok = inside(cand)
            new_r = np.full(len(idx), np.inf)
            if np.any(ok):
                new_r[ok] = np.linalg.norm(z_of_omega(sys, cand[ok], check=False) - flat_z[idx][ok], axis=-1)
            bad = ~ok | (new_r > rnorm) & (rnorm > 1e-13 * (1 + np.linalg.norm(flat_z[idx], axis=-1)))
            if not np.any(bad):
                break
            lam[bad] *= 0.5
            cand[bad] = wa[bad] - lam[bad, None] * step[bad]
        flat_w[idx] = cand
        small = np.linalg.norm(lam[:, None] * step, axis=-1) <= tol * (1.0 + np.linalg.norm(cand, axis=-1))
        active[idx[small]] = False
    else:
        if np.any(active):
            raise ConvergenceError(f"{sys.name}: Newton inversion did not converge in {max_iter} iterations")
    w = flat_w.reshape(z.shape)
    back = z_of_omega(sys, w, check=False)
    err = np.max(np.abs(back - z) / (1.0 + np.abs(z))) if z.size else 0.0
    if err > 1e-9:
        raise ConvergenceError(f"{sys.name}: inversion residual {err:.2e} exceeds 1e-9")
    return w
