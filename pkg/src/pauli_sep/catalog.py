"""Maxwell-compatible separable potentials, their frames, and the worked spherical example.

Stationary cases carry eH = (0, 0, k); the non-stationary case carries
eH = (0, 0, A t + B).  Every scalar potential here is time independent,
so ``catalog_A0`` takes no time argument.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import coords
from .errors import ConstructionError, DomainError, IntegrationError
from .fields import ElectromagneticPotential, FCoefficients, maxwell_residual, vector_potential
from .frame import EulerFrame
from .grid import GridSpec
from .timefunc import Constant, Linear, Power, Sech2, Sum

CASE_IDS = ("nonstationary", "s1", "s2", "s3", "s4", "s5", "s6", "s7")
EXCLUSION_RADIUS = 0.5
MAXWELL_TOL = 1e-4

_PARAMS = {
    "nonstationary": {"A": 0.0, "B": 1.0, "k": 1.0, "a1": 0.0, "a2": 0.0, "a3": 0.0},
    "s1": {"k": 1.0, "a1": 0.0, "a2": 0.0, "a3": 0.0},
    "s2": {"k": 1.0, "a": 1.0},
    "s3": {"k": 1.0, "a1": 1.0, "a2": 0.0, "a3": 0.0},
    "s4": {"k": 1.0, "a": 1.0, "a1": 1.0, "a2": 1.0, "a3": 0.0},
    "s5": {"k": 1.0, "a": 1.0, "a1": 1.0, "a2": 0.0, "a3": 0.0},
    "s6": {"k": 1.0, "a1": 1.0, "a2": 0.0, "a3": 0.0},
    "s7": {"k": 1.0, "q": 1.0, "a": 1.0, "a3": 0.0},
}


@dataclass(frozen=True)
class CatalogCase:
    """A catalog entry: ``id`` in CASE_IDS plus its named parameters.

    Missing parameters take the defaults in ``case_parameters``.  Case s7
    needs ``variant`` "verbatim" (the form as printed) or "amended"
    (log of x1^2 + x2^2); neither is treated as verified.
    """

    id: str
    params: dict = field(default_factory=dict)
    variant: str = "verbatim"

    def __post_init__(self):
        cid = str(self.id).lower()
        if cid not in CASE_IDS:
            raise ConstructionError(f"unknown catalog case {self.id!r}; expected one of {CASE_IDS}")
        defaults = _PARAMS[cid]
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ConstructionError(f"case {cid} has no parameters {sorted(unknown)}")
        merged = {**defaults, **{k: float(v) for k, v in self.params.items()}}
        if cid != "nonstationary" and merged["k"] == 0:
            raise ConstructionError("stationary cases need k != 0")
        if cid in ("s4", "s5") and not merged["a"] > 0:
            raise ConstructionError("the half-distance a must be positive")
        if self.variant not in ("verbatim", "amended"):
            raise ConstructionError("variant must be 'verbatim' or 'amended'")
        object.__setattr__(self, "id", cid)
        object.__setattr__(self, "params", merged)

    @property
    def unverified(self):
        return self.id == "s7"

    def to_dict(self):
        out = {"id": self.id, "params": dict(self.params)}
        if self.id == "s7":
            out["variant"] = self.variant
        return out


def case_parameters(case_id):
    """Parameter names and defaults of a case."""
    return dict(_PARAMS[case_id])


def case_field(case, t):
    """eH(t) of the case, shape (..., 3)."""
    t = np.asarray(t, dtype=float)
    p = case.params
    Hz = p["A"] * t + p["B"] if case.id == "nonstationary" else p["k"] + 0.0 * t
    return np.stack(np.broadcast_arrays(0.0 * t, 0.0 * t, Hz), axis=-1)


def case_alpha(case, t):
    """Rotation angle alpha(t) of the case's frame (beta = gamma = 0 or const)."""
    p = case.params
    if case.id == "nonstationary":
        return -0.5 * p["A"] * t ** 2 - p["B"] * t
    return -p["k"] * np.asarray(t, dtype=float)


# --- singular loci --------------------------------------------------------------

def _axis_distance(x):
    return np.hypot(x[..., 0], x[..., 1])


def _disk_distance(x, a):
    """Distance to the disk x3 = 0, x1^2 + x2^2 <= a^2."""
    rho = _axis_distance(x)
    return np.hypot(np.maximum(rho - a, 0.0), x[..., 2])


def singular_distance(case, x):
    """Distance from x to the nearest singular locus of the case's potential (inf if none)."""
    x = np.asarray(x, dtype=float)
    p = case.params
    inf = np.full(x.shape[:-1], np.inf)
    r = np.linalg.norm(x, axis=-1)
    cid = case.id
    if cid in ("nonstationary", "s1"):
        return inf
    if cid == "s2":
        return r
    if cid == "s3":
        d = r if (p["a1"] or p["a2"] or p["a3"]) else inf
        return np.minimum(d, _axis_distance(x)) if p["a3"] else d
    if cid == "s4":
        a = p["a"]
        d = np.minimum(np.linalg.norm(x - [0, 0, -a], axis=-1), np.linalg.norm(x - [0, 0, a], axis=-1))
        return np.minimum(d, _axis_distance(x)) if p["a3"] else d
    if cid == "s5":
        d = _disk_distance(x, p["a"])
        return np.minimum(d, _axis_distance(x)) if p["a3"] else d
    if cid == "s6":
        d = r if (p["a1"] or p["a3"]) else inf
        return np.minimum(d, _axis_distance(x)) if p["a3"] else d
    if case.variant == "verbatim":
        # log(x1 + x2) needs x1 + x2 > 0: distance to the plane x1 + x2 = 0, negative behind it
        return (x[..., 0] + x[..., 1]) / math.sqrt(2.0)
    return _axis_distance(x)


# --- potentials -----------------------------------------------------------------

def _quad(x):
    return x[..., 0] ** 2 + x[..., 1] ** 2 - 2 * x[..., 2] ** 2


def _lin(p, x):
    return p["a1"] * x[..., 0] + p["a2"] * x[..., 1] + p["a3"] * x[..., 2]


def catalog_A0(case, x, tol=1e-12):
    """The case's scalar potential eA0(x).

    Points on (or within ``tol`` of) a singular locus raise DomainError.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise DomainError("x must have trailing dimension 3")
    if np.any(singular_distance(case, x) <= tol):
        raise DomainError(f"case {case.id}: point on a singular locus")
    p = case.params
    cid = case.id
    r = np.linalg.norm(x, axis=-1)
    x3 = x[..., 2]
    with np.errstate(all="ignore"):
        if cid == "nonstationary":
            val = -0.5 * p["k"] * _quad(x) + _lin(p, x)
        elif cid == "s1":
            val = -p["k"] ** 2 / 12 * _quad(x) + _lin(p, x)
        elif cid == "s2":
            val = p["a"] / r - p["k"] ** 2 / 12 * _quad(x)
        elif cid == "s3":
            val = -p["k"] ** 2 / 12 * _quad(x) + p["a1"] / r + p["a2"] * x3 / r ** 3
            if p["a3"]:
                val = val + p["a3"] / r ** 2 * (x3 / (2 * r) * np.log((r + x3) / (r - x3)) - 1)
        elif cid == "s4":
            a = p["a"]
            xp, xm = x3 + a, x3 - a
            rp = np.sqrt(x[..., 0] ** 2 + x[..., 1] ** 2 + xp ** 2)
            rm = np.sqrt(x[..., 0] ** 2 + x[..., 1] ** 2 + xm ** 2)
            val = -p["k"] ** 2 / 12 * _quad(x) + p["a1"] / rp + p["a2"] / rm
            if p["a3"]:
                val = val + p["a3"] * (np.arctanh(xp / rp) / rp - np.arctanh(xm / rm) / rm)
        elif cid == "s5":
            val = -p["k"] ** 2 / 12 * _quad(x) + _s5_singular_part(p, x)
        elif cid == "s6":
            val = -p["k"] ** 2 / 6 * _quad(x) + p["a1"] / r + p["a2"] * x3
            if p["a3"]:
                val = val + p["a3"] / r * np.log((r + x3) / (r - x3))
        else:
            if case.variant == "verbatim":
                log_term = np.log(x[..., 0] + x[..., 1])
            else:
                log_term = np.log(x[..., 0] ** 2 + x[..., 1] ** 2)
            val = -p["q"] / 2 * _quad(x) + p["a"] * log_term + p["a3"] * x3
    if not np.all(np.isfinite(val)):
        raise DomainError(f"case {case.id}: potential not finite at the given points")
    return val


def _s5_singular_part(p, x):
    a, a1, a2, a3 = p["a"], p["a1"], p["a2"], p["a3"]
    r2 = np.sum(x ** 2, axis=-1)
    x3 = x[..., 2]
    f = np.sqrt((a ** 2 - r2) ** 2 + 4 * a ** 2 * x3 ** 2)
    f1 = np.sqrt((-a ** 2 + r2 + f) / (2 * a ** 2))
    arccot = np.arctan2(1.0, f1)
    out = 2 * a1 * a * f1 / f + 2 * a2 * x3 / (f * f1)
    if a3:
        out = out - 2 * a3 * (a * f1 / f * arccot - x3 / (f * f1) * np.arctanh(x3 / (a * f1)))
    return out


def s5_complex_form(case, x):
    """Case s5 written with the complex-conjugate centres x3 = -+ i a (principal branches)."""
    if case.id != "s5":
        raise DomainError("complex-centre form exists for case s5 only")
    x = np.asarray(x, dtype=float)
    if np.any(singular_distance(case, x) <= 1e-12):
        raise DomainError("case s5: point on a singular locus")
    p = case.params
    a, a1, a2, a3 = p["a"], p["a1"], p["a2"], p["a3"]
    rho2 = (x[..., 0] ** 2 + x[..., 1] ** 2).astype(complex)
    xp, xm = x[..., 2] + 1j * a, x[..., 2] - 1j * a
    rp, rm = np.sqrt(rho2 + xp ** 2), np.sqrt(rho2 + xm ** 2)
    val = (a1 + 1j * a2) / rp + (a1 - 1j * a2) / rm
    if a3:
        val = val + 1j * a3 * (np.arctanh(xp / rp) / rp - np.arctanh(xm / rm) / rm)
    return -p["k"] ** 2 / 12 * _quad(x) + val


def case_potential(case):
    """ElectromagneticPotential (eH, eA = eH x x / 2, eA0) of a case."""
    return ElectromagneticPotential(
        eH=lambda t: case_field(case, t),
        eA=lambda t, x: vector_potential(case_field(case, t), x),
        eA0=lambda t, x: catalog_A0(case, x),
    )


@dataclass(frozen=True)
class MaxwellReport:
    case: dict
    r_A0: float
    r_A: float
    r_coupling: float
    r_laplace: float
    n_points: int
    h: float
    radius: float
    unverified: bool
    tol: float = MAXWELL_TOL

    @property
    def max_residual(self):
        return max(self.r_A0, self.r_A, self.r_coupling, self.r_laplace)

    @property
    def passed(self):
        return self.max_residual < self.tol

    def to_dict(self):
        return {"case": self.case, "r_A0": self.r_A0, "r_A": self.r_A, "r_coupling": self.r_coupling,
                "r_laplace": self.r_laplace, "max_residual": self.max_residual, "n_points": self.n_points,
                "h": self.h, "exclusion_radius": self.radius, "tol": self.tol,
                "passed": self.passed, "unverified": self.unverified}


def _laplacian(fn, X, h):
    E = np.eye(3)
    c = fn(X)
    return sum(fn(X + h * E[i]) - 2 * c + fn(X - h * E[i]) for i in range(3)) / h ** 2


def catalog_maxwell_check(case, grid=None, h=1e-2, radius=EXCLUSION_RADIUS, richardson=True):
    """Finite-difference Maxwell and Laplace residuals of a case's potential pair.

    Grid points closer than ``radius`` to a singular locus are dropped.
    Richardson-combined second-order differences are used as in
    ``fields.maxwell_residual``.
    """
    grid = grid or GridSpec((-2.0, -2.0, -2.0), (2.0, 2.0, 2.0), (9, 9, 9), times=(0.0, 0.5))
    X = grid.points()
    X = X[singular_distance(case, X) >= radius]
    if X.size == 0:
        raise DomainError("no grid points left outside the singular loci")
    pot = case_potential(case)
    r0, rA, rc = maxwell_residual(pot, grid, h=h, richardson=richardson, points=X)

    def A0(Y):
        return catalog_A0(case, Y)

    lap = _laplacian(A0, X, h)
    if richardson:
        lap = (4 * _laplacian(A0, X, h / 2) - lap) / 3
    return MaxwellReport(case.to_dict(), r0, rA, rc, float(np.max(np.abs(lap))), int(len(X)), h, radius,
                         case.unverified)


# --- frame equations ------------------------------------------------------------

_FRAME_PARAMS = ("A", "B", "k", "c", "c3", "c11", "c12", "c13", "a1", "a2", "a3")
_FRAME_STATE = ("l", "l3", "v1", "v2", "v3")


@dataclass(frozen=True)
class FrameSolution:
    """Tabulated l(t), l3(t), v(t) with first derivatives at uniform nodes."""

    t: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    params: dict

    def component(self, name, order=0):
        i = _FRAME_STATE.index(name)
        return (self.y, self.dy)[order][:, i]

    def residual(self):
        """Max |lhs - rhs| of the five equations, second derivatives from 4th-order differences of the rates."""
        if len(self.t) < 5:
            return 0.0
        h = self.t[1] - self.t[0]
        d = self.dy
        dd = (-d[4:] + 8 * d[3:-1] - 8 * d[1:-3] + d[:-4]) / (12 * h)
        t = self.t[2:-2]
        y, dy = self.y[2:-2], self.dy[2:-2]
        return float(np.max(np.abs(_frame_equations_lhs(self.params, t, y, dy, dd))))


def _frame_equations_lhs(p, t, y, dy, dd):
    """Residuals of the five printed equations written as lhs - rhs."""
    l, l3, v1, v2, v3 = (y[..., i] for i in range(5))
    dl, dl3, dv1, dv2, dv3 = (dy[..., i] for i in range(5))
    ddl, ddl3, ddv1, ddv2, ddv3 = (dd[..., i] for i in range(5))
    alpha = -0.5 * p["A"] * t ** 2 - p["B"] * t
    ca, sa = np.cos(alpha), np.sin(alpha)
    c, c3 = p["c"], p["c3"]
    e1 = 2 * c / l ** 4 - 0.5 * ddl / l + p["k"] - 0.5 * (p["A"] * t + p["B"]) ** 2
    e2 = c3 / l3 ** 4 - 0.25 * ddl3 / l3 - p["k"]
    e3 = l * ddv1 + 2 * dl * dv1 + 4 * c * v1 / l ** 3 - 2 * p["c11"] / l + 2 * (p["a1"] * ca + p["a2"] * sa)
    e4 = l * ddv2 + 2 * dl * dv2 + 4 * c * v2 / l ** 3 - 2 * p["c12"] / l + 2 * (-p["a1"] * sa + p["a2"] * ca)
    e5 = l3 * ddv3 + 2 * dl3 * dv3 + 4 * c3 * v3 / l3 ** 3 - 2 * p["c13"] / l3 + 2 * p["a3"]
    return np.stack([e1, e2, e3, e4, e5], axis=-1)


def _frame_rhs(p, t, y, dy):
    """Second derivatives solved from the five equations."""
    l, l3, v1, v2, v3 = y
    dl, dl3, dv1, dv2, dv3 = dy
    if l == 0 or l3 == 0:
        raise IntegrationError(f"scale reached zero at t={t:.6g}")
    alpha = -0.5 * p["A"] * t ** 2 - p["B"] * t
    ca, sa = math.cos(alpha), math.sin(alpha)
    c, c3 = p["c"], p["c3"]
    ddl = 2 * l * (2 * c / l ** 4 + p["k"] - 0.5 * (p["A"] * t + p["B"]) ** 2)
    ddl3 = 4 * l3 * (c3 / l3 ** 4 - p["k"])
    ddv1 = (-2 * (p["a1"] * ca + p["a2"] * sa) - 2 * dl * dv1 - 4 * c * v1 / l ** 3 + 2 * p["c11"] / l) / l
    ddv2 = (-2 * (-p["a1"] * sa + p["a2"] * ca) - 2 * dl * dv2 - 4 * c * v2 / l ** 3 + 2 * p["c12"] / l) / l
    ddv3 = (-2 * p["a3"] - 2 * dl3 * dv3 - 4 * c3 * v3 / l3 ** 3 + 2 * p["c13"] / l3) / l3
    return np.array([ddl, ddl3, ddv1, ddv2, ddv3])


def case1_frame_solve(params, t_end, y0=(1.0, 1.0, 0.0, 0.0, 0.0), dy0=(0.0,) * 5, step=1e-3):
    """RK4 solution of the non-stationary case's frame equations on [0, t_end].

    ``params`` names A, B, k, c, c3, c11, c12, c13, a1, a2, a3 (missing ones
    are 0).  State order is (l, l3, v1, v2, v3).  A scale that changes
    sign raises IntegrationError.
    """
    unknown = set(params) - set(_FRAME_PARAMS)
    if unknown:
        raise ConstructionError(f"unknown frame parameters {sorted(unknown)}")
    p = {k: float(params.get(k, 0.0)) for k in _FRAME_PARAMS}
    y = np.array(y0, dtype=float)
    dy = np.array(dy0, dtype=float)
    if y[0] == 0 or y[1] == 0:
        raise DomainError("initial scales must be nonzero")
    n = max(1, int(math.ceil(t_end / step - 1e-12)))
    h = t_end / n
    ts = h * np.arange(n + 1)
    Y = np.empty((n + 1, 5))
    D = np.empty((n + 1, 5))
    Y[0], D[0] = y, dy
    signs = np.sign(y[:2])
    for j in range(n):
        t = ts[j]
        k1y, k1d = dy, _frame_rhs(p, t, y, dy)
        k2y, k2d = dy + 0.5 * h * k1d, _frame_rhs(p, t + 0.5 * h, y + 0.5 * h * k1y, dy + 0.5 * h * k1d)
        k3y, k3d = dy + 0.5 * h * k2d, _frame_rhs(p, t + 0.5 * h, y + 0.5 * h * k2y, dy + 0.5 * h * k2d)
        k4y, k4d = dy + h * k3d, _frame_rhs(p, t + h, y + h * k3y, dy + h * k3d)
        y = y + h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
        dy = dy + h / 6 * (k1d + 2 * k2d + 2 * k3d + k4d)
        if np.any(np.sign(y[:2]) != signs):
            raise IntegrationError(f"a scale crossed zero near t={ts[j + 1]:.6g}")
        Y[j + 1], D[j + 1] = y, dy
    return FrameSolution(ts, Y, D, p)


def case2_l_closed_form(C1, k, variant, t, order=0):
    """Closed-form l(t) (or its derivative of ``order`` <= 2) for the stationary case with eH = (0, 0, k).

    variant ``plus``:  l^2 = sqrt(C1^2 + 1/k^2) sin(2 sqrt(2/3) k t) + C1   (c = -1)
    variant ``minus``: l^2 = sqrt(C1^2 - 1/k^2) sin(2 sqrt(2/3) k t) + C1   (c = +1)
    variant ``sine``:  l = C1 sin(sqrt(2/3) k t)                            (c = 0)
    """
    t = np.asarray(t, dtype=float)
    if k == 0:
        raise DomainError("k must be nonzero")
    if variant == "sine":
        w = math.sqrt(2.0 / 3.0) * k
        out = [C1 * np.sin(w * t), C1 * w * np.cos(w * t), -C1 * w ** 2 * np.sin(w * t)][order]
        if order == 0 and np.any(out == 0):
            raise DomainError("l vanishes at the requested time")
        return out
    if variant not in ("plus", "minus"):
        raise DomainError(f"unknown variant {variant!r}")
    rad = C1 ** 2 + (1.0 if variant == "plus" else -1.0) / k ** 2
    if rad < 0:
        raise DomainError("negative radicand C1^2 - 1/k^2")
    R, w = math.sqrt(rad), 2 * math.sqrt(2.0 / 3.0) * k
    u = R * np.sin(w * t) + C1
    if np.any(u <= 0):
        raise DomainError("l^2 is not positive at the requested time")
    du = R * w * np.cos(w * t)
    ddu = -R * w ** 2 * np.sin(w * t)
    l = np.sqrt(u)
    if order == 0:
        return l
    if order == 1:
        return du / (2 * l)
    return ddu / (2 * l) - du ** 2 / (4 * u * l)


def case2_constant(variant):
    """The constant c of the scale equation k^2 + 3/2 l''/l = c / l^4 for each variant."""
    return {"plus": -1.0, "minus": 1.0, "sine": 0.0}[variant]


# --- the worked spherical example ------------------------------------------------

def proposition_coefficients(q, c, k1, k2, k3):
    """Separation coefficients of the Coulomb-plus-rotation potential in spherical coordinates."""
    F10 = Sum((Power(q, -3), Power(c ** 2 / 6, -6), Power(k1, -4), Power(-k2, -2)))
    return FCoefficients(F00=Constant(k1), F10=F10, F20=Sech2(k2) - k3, F30=Constant(k3))


def proposition_potential(q, c, x):
    """eA0 = q/|x| - c^2/12 (x1^2 + x2^2 - 2 x3^2)."""
    x = np.asarray(x, dtype=float)
    return q / np.linalg.norm(x, axis=-1) - c ** 2 / 12 * _quad(x)


def proposition_example(q=1.0, c=1.0, k1=0.3, k2=0.2, k3=0.1, lam=(0.4, -0.3, -0.6), beta=0.0, gamma=0.0,
                        grid=None, window=(0.0, 0.2), **numerics):
    """Spherical-coordinate scenario for a Coulomb centre in the field eH = (0, 0, c).

    Frame: alpha = -c t, constant beta and gamma, unit scales, no translation.
    """
    from .separation import Scenario

    if q == 0 or c == 0:
        raise ConstructionError("q and c must be nonzero")
    frame = EulerFrame(coords.coord_system("spherical"), alpha=Linear(0.0, -c), beta=Constant(beta),
                       gamma=Constant(gamma), window=window)
    grid = grid or GridSpec((0.5, -0.5, -0.5), (1.3, 0.5, 0.5), (5, 5, 5), times=(0.0, 0.1))
    return Scenario(frame, F=proposition_coefficients(q, c, k1, k2, k3), lam=lam, grid=grid,
                    name="proposition", **numerics)


def proposition_coordinate_menu(a=1.0, k=0.5, branch=1):
    """The three systems admitting the Coulomb-plus-rotation potential:
    spherical, prolate spheroidal with the shifted z3 (``branch`` = +1 or -1), conical."""
    return [
        coords.coord_system("spherical"),
        coords.coord_system("prolate_spheroidal", a=a, variant=branch),
        coords.coord_system("conical", k=k),
    ]


def case7_coordinate_map(t, omega, k=1.0, l3=1.0, v3=0.0, variant="verbatim"):
    """The planar map of case s7: verbatim uses omega1 in both radius and angle,
    amended uses omega2 in the angle."""
    w = np.asarray(omega, dtype=float)
    ang = (w[..., 0] if variant == "verbatim" else w[..., 1]) - k * t
    rho = np.exp(w[..., 0])
    return np.stack([rho * np.cos(ang), rho * np.sin(ang), l3 * w[..., 2] + v3], axis=-1)
