"""Separated solutions psi = Q phi0(t) phi1(w1) phi2(w2) phi3(w3) chi and their verification.

The end-to-end path is scalar: the reduced equations are

    i phi0' = -(F00(t) + T_b(t) lam_b) phi0,
    phi_a''  =  (F_a0(w_a) + S_ab(w_a) lam_b) phi_a,

with the spin coupling carried by the propagator U inside Q.  The matrix
coefficient forms are available for structural checks only.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from . import coords
from .errors import ConstructionError, DomainError, IntegrationError, NotSeparableError
from .fields import FCoefficients, magnetic_field, scalar_potential, vector_potential
from .frame import EulerFrame, euler_rotation, hat, omega_of_x, rotation_matrix, vee, x_prime
from .grid import GridSpec, parallel_map
from .spinor import SIGMA, IDENTITY, Propagator, Q_multiplier, sigma_dot
from .timefunc import as_timefunction

ODE_STEPS_PER_UNIT = 2000
PSI_FLOOR = 1e-10
PIVOT_TOL = 1e-10
COMMUTATOR_TOL = 1e-12


# --- scenario -------------------------------------------------------------------

@dataclass(frozen=True)
class Corruption:
    """A deliberate defect injected into a scenario (negative controls).

    kinds:
      ``stackel_entry``   S[row, col] += delta in the spatial equations;
      ``stackel_column``  column ``col`` replaced by column ``row``;
      ``lambda_coupling`` the time factor sees T_b lam_b (1 + delta);
      ``q_phase``         Q picks up an extra exp(i delta |x'|^2).
    """

    kind: str
    row: int = 0
    col: int = 0
    delta: float = 0.5

    KINDS = ("stackel_entry", "stackel_column", "lambda_coupling", "q_phase")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConstructionError(f"unknown corruption kind {self.kind!r}; expected one of {self.KINDS}")
        if not (0 <= self.row < 3 and 0 <= self.col < 3):
            raise ConstructionError("corruption row/col must be 0, 1 or 2")

    def to_dict(self):
        return {"kind": self.kind, "row": self.row, "col": self.col, "delta": self.delta}

    @classmethod
    def from_dict(cls, record):
        unknown = set(record) - {"kind", "row", "col", "delta"}
        if unknown:
            raise ConstructionError(f"unknown corruption keys {sorted(unknown)}")
        return cls(**record)


def _complex_pair(z):
    z = complex(z)
    return [z.real, z.imag]


def _from_pair(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConstructionError(f"complex numbers are [re, im] pairs, got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


@dataclass(frozen=True)
class Scenario:
    """A complete separable configuration plus the numerics used to verify it."""

    frame: EulerFrame
    F: FCoefficients = field(default_factory=FCoefficients)
    lam: tuple = (0.0, 0.0, 0.0)
    chi: tuple = (1.0, 0.0)
    grid: GridSpec = field(default_factory=GridSpec)
    ode_step: float = 1e-3
    fd_step: float = 1e-3
    ic: tuple = ((1.0, 0.0), (1.0, 0.0), (1.0, 0.0))
    corruption: Optional[Corruption] = None
    name: str = ""

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lam)
        if len(lam) != 3:
            raise ConstructionError("lam needs three entries")
        chi = tuple(complex(v) for v in self.chi)
        if len(chi) != 2:
            raise ConstructionError("chi needs two entries")
        ic = tuple(tuple(complex(v) for v in pair) for pair in self.ic)
        if len(ic) != 3 or any(len(p) != 2 for p in ic):
            raise ConstructionError("ic needs three (value, slope) pairs")
        if not (self.ode_step > 0 and self.fd_step > 0):
            raise ConstructionError("steps must be positive")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "ic", ic)

    @property
    def system(self):
        return self.frame.system

    @property
    def window(self):
        return self.frame.window

    def replace(self, **changes):
        kw = {k: getattr(self, k) for k in self.__dataclass_fields__}
        kw.update(changes)
        return Scenario(**kw)

    def to_dict(self):
        return {
            "name": self.name,
            "system": self.system.to_dict(),
            "frame": {k: v for k, v in self.frame.to_dict().items() if k != "system"},
            "coefficients": self.F.to_dict(),
            "lambda": list(self.lam),
            "chi": [_complex_pair(z) for z in self.chi],
            "ic": [[_complex_pair(z) for z in pair] for pair in self.ic],
            "grid": self.grid.to_dict(),
            "numerics": {"ode_step": self.ode_step, "fd_step": self.fd_step},
            "corruption": self.corruption.to_dict() if self.corruption else None,
        }


# --- coefficient evaluation -----------------------------------------------------

def stackel_row_of(s, axis, w):
    """Row ``axis`` of the scenario's Staeckel matrix at w (corruptions applied)."""
    row = coords.stackel_row(s.system, axis, w)
    c = s.corruption
    if c is not None and c.kind == "stackel_entry" and c.row == axis:
        row = row.copy()
        row[..., c.col] += c.delta
    elif c is not None and c.kind == "stackel_column":
        row = row.copy()
        row[..., c.col] = row[..., c.row]
    return row


def scenario_stackel(s, omega):
    """Full 3x3 Staeckel matrix of the scenario at omega (corruptions applied)."""
    omega = np.asarray(omega, dtype=float)
    return np.stack([stackel_row_of(s, a, omega[..., a]) for a in range(3)], axis=-2)


def time_coefficient(s, t):
    """F00(t) + T_b(t) lam_b."""
    T = coords.T_functions(s.system, s.frame.scales(t))
    coupling = T @ np.asarray(s.lam)
    c = s.corruption
    if c is not None and c.kind == "lambda_coupling":
        coupling = coupling * (1.0 + c.delta)
    return s.F.F00(t) + coupling


def axis_coefficient(s, axis, w):
    """F_a0(w) + S_ab(w) lam_b for axis a (0-based)."""
    Fa = (s.F.F10, s.F.F20, s.F.F30)[axis]
    return Fa(w) + stackel_row_of(s, axis, w) @ np.asarray(s.lam)


# --- reduced ODE solutions ------------------------------------------------------

def solve_time_factor(s, t):
    """phi0(t) = exp(i int_{t0}^t (F00 + T_b lam_b)) with adaptive quadrature to 1e-12."""
    t0 = s.window[0]

    def integrand(tau):
        return float(time_coefficient(s, tau))

    val, _ = quad(integrand, t0, float(t), epsabs=1e-12, epsrel=1e-12, limit=200)
    return complex(np.exp(1j * val))


@dataclass(frozen=True)
class AxisFactor:
    """phi_a tabulated on uniform nodes, cubic Hermite between them."""

    nodes: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    coeff: np.ndarray

    @property
    def span(self):
        return float(self.nodes[0]), float(self.nodes[-1])

    def __call__(self, w, order=0):
        w = np.asarray(w, dtype=float)
        lo, hi = self.span
        if np.any(w < lo) or np.any(w > hi):
            raise DomainError(f"argument outside tabulated range [{lo}, {hi}]")
        h = self.nodes[1] - self.nodes[0]
        idx = np.clip(((w - lo) / h).astype(int), 0, len(self.nodes) - 2)
        s = (w - self.nodes[idx]) / h
        y0, y1 = self.values[idx], self.values[idx + 1]
        d0, d1 = self.derivs[idx] * h, self.derivs[idx + 1] * h
        if order == 0:
            return ((2 * s ** 3 - 3 * s ** 2 + 1) * y0 + (s ** 3 - 2 * s ** 2 + s) * d0
                    + (-2 * s ** 3 + 3 * s ** 2) * y1 + (s ** 3 - s ** 2) * d1)
        if order == 1:
            return ((6 * s ** 2 - 6 * s) * y0 + (3 * s ** 2 - 4 * s + 1) * d0
                    + (-6 * s ** 2 + 6 * s) * y1 + (3 * s ** 2 - 2 * s) * d1) / h
        raise DomainError("only orders 0 and 1 are interpolated")

    def ode_residual(self):
        """Max |phi'' - c phi| on interior nodes, phi'' from 4th-order differences of phi'.

        Relative to max(1, max|phi|).
        """
        h = self.nodes[1] - self.nodes[0]
        d = self.derivs
        if len(d) < 5:
            return 0.0
        dd = (-d[4:] + 8 * d[3:-1] - 8 * d[1:-3] + d[:-4]) / (12 * h)
        r = dd - self.coeff[2:-2] * self.values[2:-2]
        return float(np.max(np.abs(r)) / max(1.0, np.max(np.abs(self.values))))


def _rk4_second_order(c_nodes, c_half, h, y0, dy0):
    """y'' = c y with c sampled at nodes and midpoints; returns values and slopes."""
    n = len(c_nodes) - 1
    ys = np.empty(n + 1, dtype=complex)
    ds = np.empty(n + 1, dtype=complex)
    y, d = complex(y0), complex(dy0)
    ys[0], ds[0] = y, d
    for j in range(n):
        ca, cm, cb = c_nodes[j], c_half[j], c_nodes[j + 1]
        k1y, k1d = d, ca * y
        k2y, k2d = d + 0.5 * h * k1d, cm * (y + 0.5 * h * k1y)
        k3y, k3d = d + 0.5 * h * k2d, cm * (y + 0.5 * h * k2y)
        k4y, k4d = d + h * k3d, cb * (y + h * k3y)
        y = y + h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
        d = d + h / 6 * (k1d + 2 * k2d + 2 * k3d + k4d)
        ys[j + 1], ds[j + 1] = y, d
    return ys, ds


def solve_spatial_factor(s, axis, omega_range, ic=None, steps_per_unit=ODE_STEPS_PER_UNIT):
    """RK4 solution of phi'' = (F_a0 + S_ab lam_b) phi on ``omega_range``.

    Integrates outward from the midpoint, where ``ic = (value, slope)``
    (default: the scenario's initial conditions for the axis).
    """
    if axis not in (0, 1, 2):
        raise DomainError("axis must be 0, 1 or 2")
    lo, hi = (float(v) for v in omega_range)
    if not hi > lo:
        raise DomainError(f"empty range {omega_range}")
    y0, dy0 = ic if ic is not None else s.ic[axis]
    mid = 0.5 * (lo + hi)
    n_half = max(2, int(math.ceil((hi - mid) * steps_per_unit)))
    h = (hi - mid) / n_half
    nodes = mid + h * np.arange(-n_half, n_half + 1)
    half = mid + h * (np.arange(-n_half, n_half) + 0.5)
    with np.errstate(all="ignore"):
        c_nodes = np.asarray(axis_coefficient(s, axis, nodes), dtype=float)
        c_half = np.asarray(axis_coefficient(s, axis, half), dtype=float)
    if not (np.all(np.isfinite(c_nodes)) and np.all(np.isfinite(c_half))):
        raise DomainError(f"coefficient of axis {axis + 1} is singular inside [{lo}, {hi}]")
    up_y, up_d = _rk4_second_order(c_nodes[n_half:], c_half[n_half:], h, y0, dy0)
    dn_y, dn_d = _rk4_second_order(c_nodes[n_half::-1], c_half[n_half - 1::-1], -h, y0, dy0)
    values = np.concatenate([dn_y[::-1], up_y[1:]])
    derivs = np.concatenate([dn_d[::-1], up_d[1:]])
    return AxisFactor(nodes, values, derivs, c_nodes)


@dataclass
class SeparatedSolution:
    """Tabulated factors of a scenario together with the branch bookkeeping for angles."""

    scenario: Scenario
    factors: tuple
    propagator: Propagator
    anchor: dict
    x_ref: np.ndarray
    _ref_cache: dict = field(default_factory=dict, repr=False)

    def phi0(self, t):
        return solve_time_factor(self.scenario, t)

    def _ref_angle(self, t):
        key = float(t)
        if key not in self._ref_cache:
            w = omega_of_x(self.scenario.frame, key, self.x_ref[None])[0]
            self._ref_cache[key] = {ax: _wrap_near(w[ax], self.anchor[ax], P)
                                    for ax, P in coords.periodic_axes(self.scenario.system).items()}
        return self._ref_cache[key]

    def omega(self, t, x, guess=None):
        """Coordinates of x at time t, angles placed on the branch next to the reference point."""
        w = omega_of_x(self.scenario.frame, t, x, guess=guess)
        periodic = coords.periodic_axes(self.scenario.system)
        if periodic:
            ref = self._ref_angle(t)
            w = np.array(w)
            for ax, P in periodic.items():
                w[..., ax] = _wrap_near(w[..., ax], ref[ax], P)
        return w

    def check_factors(self, tol=1e-8):
        worst = max(f.ode_residual() for f in self.factors)
        if worst > tol:
            raise IntegrationError(f"reduced ODE re-substitution residual {worst:.2e} exceeds {tol}")
        return worst


def _wrap_near(w, ref, period):
    return ref + np.mod(w - ref + 0.5 * period, period) - 0.5 * period


def _stencil_times(s, h=None):
    h = s.fd_step if h is None else h
    return sorted({t + d for t in s.grid.times for d in (-h, 0.0, h)})


def _stencil_points(X, h):
    E = np.eye(3)
    return [X] + [X + sgn * h * E[i] for i in range(3) for sgn in (1, -1)]


def solve_separated(s, omega_ranges=None, fd_steps=None, margin=0.02):
    """Tabulate phi_1..3 and U for a scenario.

    Without explicit ``omega_ranges`` the ranges are taken from every
    point the residual stencils (steps ``fd_steps``, default the
    scenario's) will visit, widened by ``margin``.
    """
    steps = sorted(set(fd_steps or (s.fd_step,)))
    X = s.grid.points()
    if X.size == 0:
        raise DomainError("grid has no points outside the exclusions")
    t_all = sorted({t for h in steps for t in _stencil_times(s, h)})
    frame = s.frame
    propagator = Propagator(lambda t: magnetic_field(frame, t), min(t_all), max(t_all), s.ode_step)
    x_ref = X[0].copy()
    w_ref0 = omega_of_x(frame, s.window[0], x_ref[None])[0]
    anchor = {ax: float(w_ref0[ax]) for ax in coords.periodic_axes(s.system)}
    sol = SeparatedSolution(s, (), propagator, anchor, x_ref)
    if omega_ranges is None:
        lo = np.full(3, np.inf)
        hi = np.full(3, -np.inf)
        for t in t_all:
            wc = sol.omega(t, X)
            for h in steps:
                for P in _stencil_points(X, h)[1:]:
                    w = sol.omega(t, P, guess=wc)
                    lo = np.minimum(lo, w.min(axis=0))
                    hi = np.maximum(hi, w.max(axis=0))
            lo = np.minimum(lo, wc.min(axis=0))
            hi = np.maximum(hi, wc.max(axis=0))
        pad = margin * np.maximum(hi - lo, 1e-3)
        omega_ranges = list(zip(lo - pad, hi + pad))
    sol.factors = tuple(solve_spatial_factor(s, a, omega_ranges[a]) for a in range(3))
    return sol


def assemble_solution(s, sol, t, x, omega=None):
    """psi(t, x) = Q phi0 phi1 phi2 phi3 chi, shape (..., 2)."""
    x = np.asarray(x, dtype=float)
    if omega is None:
        omega = sol.omega(t, x)
    prod = sol.phi0(t) * np.ones(x.shape[:-1], dtype=complex)
    for a in range(3):
        prod = prod * sol.factors[a](omega[..., a])
    Q = Q_multiplier(s.frame, t, x, sol.propagator(t))
    c = s.corruption
    if c is not None and c.kind == "q_phase":
        xp = x_prime(s.frame, t, x)
        Q = Q * np.exp(1j * c.delta * np.sum(xp ** 2, axis=-1))[..., None, None]
    chi = np.asarray(s.chi, dtype=complex)
    return np.einsum("...ij,j->...i", Q, chi) * prod[..., None]


# --- the Pauli residual ---------------------------------------------------------

@dataclass(frozen=True)
class ResidualReport:
    max_rel: float
    mean_rel: float
    scale: float
    n_points: int
    n_excluded: int
    h: float
    times: tuple

    def __iter__(self):
        return iter((self.max_rel, self.mean_rel))

    def to_dict(self):
        return {"max_rel": self.max_rel, "mean_rel": self.mean_rel, "scale": self.scale,
                "n_points": self.n_points, "n_excluded": self.n_excluded, "h": self.h,
                "times": list(self.times)}


def _norm2(v):
    return np.sqrt(np.sum(np.abs(v) ** 2, axis=-1))


def pauli_residual(s, sol, h=None, potential=None, psi_transform=None):
    """Relative residual of i psi_t - eA0 psi - (p - eA)^2 psi + e sigma.H psi over the grid.

    Derivatives are second-order central differences with spacing ``h`` in
    t and x.  The residual is normalised by the largest of the four
    operator terms over the grid; points where |psi| < 1e-10 max|psi| are
    dropped.  ``potential`` (an ElectromagneticPotential) replaces the
    scenario's own fields and ``psi_transform(t, x, psi)`` post-processes
    the assembled spinor; together they express gauge transformations.
    """
    h = s.fd_step if h is None else float(h)
    X = s.grid.points()
    if X.size == 0:
        raise DomainError("grid has no points outside the exclusions")
    frame = s.frame

    def psi_at(t, P, guess):
        w = sol.omega(t, P, guess=guess)
        val = assemble_solution(s, sol, t, P, omega=w)
        if psi_transform is not None:
            val = psi_transform(t, P, val)
        return val

    E = np.eye(3)
    rows = []
    for t in s.grid.times:
        def chunk(P, t=t):
            wc = sol.omega(t, P)
            psi = psi_at(t, P, wc)
            dpsi_t = (psi_at(t + h, P, wc) - psi_at(t - h, P, wc)) / (2 * h)
            grad = []
            lap = np.zeros_like(psi)
            for i in range(3):
                plus = psi_at(t, P + h * E[i], wc)
                minus = psi_at(t, P - h * E[i], wc)
                grad.append((plus - minus) / (2 * h))
                lap += (plus - 2 * psi + minus) / h ** 2
            if potential is None:
                eH = magnetic_field(frame, t)
                eA = vector_potential(eH, P)
                eA0 = scalar_potential(frame, s.F, t, P, omega=wc)
                div = np.zeros(len(P))
            else:
                eH = np.asarray(potential.eH(t), dtype=float)
                eA = potential.eA(t, P)
                eA0 = potential.eA0(t, P)
                div = sum(potential.eA(t, P + h * E[i])[..., i] - potential.eA(t, P - h * E[i])[..., i]
                          for i in range(3)) / (2 * h)
            A_dot_grad = sum(eA[..., i, None] * grad[i] for i in range(3))
            T1 = 1j * dpsi_t
            T2 = eA0[..., None] * psi
            T3 = (-lap + 2j * A_dot_grad + 1j * div[..., None] * psi
                  + np.sum(eA ** 2, axis=-1)[..., None] * psi)
            T4 = np.einsum("ij,...j->...i", sigma_dot(eH), psi)
            r = T1 - T2 - T3 + T4
            return np.stack([_norm2(r), _norm2(T1), _norm2(T2), _norm2(T3), _norm2(T4), _norm2(psi)], axis=-1)

        rows.append(parallel_map(chunk, X))
    data = np.concatenate(rows, axis=0)
    if not np.all(np.isfinite(data)):
        raise DomainError("non-finite values in the residual; the grid touches a coordinate singularity")
    keep = data[:, 5] >= PSI_FLOOR * np.max(data[:, 5])
    kept = data[keep]
    scale = float(np.max(kept[:, 1:5]))
    if scale == 0:
        raise DomainError("all operator terms vanish on the grid")
    rel = kept[:, 0] / scale
    return ResidualReport(float(np.max(rel)), float(np.mean(rel)), scale,
                          int(keep.sum()), int((~keep).sum()), h, tuple(s.grid.times))


# --- structural validators -------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    ok: bool
    worst: float = 0.0
    where: object = None
    detail: str = ""

    def __post_init__(self):
        object.__setattr__(self, "ok", bool(self.ok))
        object.__setattr__(self, "worst", float(self.worst))

    def __bool__(self):
        return self.ok


def _as_fn(obj):
    if obj is None:
        return lambda w: 0.0
    if callable(obj):
        return obj
    return as_timefunction(obj)


@dataclass(frozen=True)
class ReducedODECoefficients:
    """Matrix coefficients P_mu_nu = F_mu_nu I + G (s . sigma) of the reduced equations.

    ``form`` selects how G and s combine:
      ``scalar``          G = 0;
      ``shared_axis``     one vector s for every block, G[mu][nu] per block;
      ``shared_function`` G[mu] per equation, a vector s[nu] per constant;
      ``general``         G[mu][nu] and s[nu] both free (not commutative in general).
    Index mu = 0 is the time equation, nu = 0 the constant term.
    """

    form: str
    F: tuple
    G: tuple = ()
    s: tuple = ()

    FORMS = ("scalar", "shared_axis", "shared_function", "general")

    def block(self, mu, nu, arg):
        P = complex(self.F[mu][nu](arg)) * IDENTITY
        if self.form == "scalar":
            return P
        if self.form == "shared_axis":
            return P + complex(self.G[mu][nu](arg)) * sigma_dot(self.s)
        if self.form == "shared_function":
            return P + complex(self.G[mu](arg)) * sigma_dot(self.s[nu])
        return P + complex(self.G[mu][nu](arg)) * sigma_dot(self.s[nu])

    def operator(self, mu, arg, lam):
        return self.block(mu, 0, arg) + sum(self.block(mu, b + 1, arg) * lam[b] for b in range(3))


def _comm(A, B):
    return A @ B - B @ A


def _default_samples(n=5, seed=0):
    return np.random.default_rng(seed).uniform(-1.0, 1.0, (n, 4))


def matrix_coefficient_forms(form, F, G=None, s=None, samples=None):
    """Build ReducedODECoefficients and check the lambda-splitting identity
    [P_mu_a, P_nu_b] + [P_mu_b, P_nu_a] = 0 at sample arguments.

    ``F`` is a 4x4 nested sequence of functions or numbers; ``G`` and ``s``
    follow the layout of ``form``.  Violations raise ConstructionError.
    """
    if form not in ReducedODECoefficients.FORMS:
        raise ConstructionError(f"unknown form {form!r}")
    Fm = tuple(tuple(_as_fn(F[m][n]) for n in range(4)) for m in range(4))
    if form == "scalar":
        coeffs = ReducedODECoefficients(form, Fm)
    elif form == "shared_axis":
        Gm = tuple(tuple(_as_fn(G[m][n]) for n in range(4)) for m in range(4))
        coeffs = ReducedODECoefficients(form, Fm, Gm, tuple(float(v) for v in s))
    elif form == "shared_function":
        Gm = tuple(_as_fn(G[m]) for m in range(4))
        coeffs = ReducedODECoefficients(form, Fm, Gm, tuple(tuple(float(v) for v in vec) for vec in s))
    else:
        Gm = tuple(tuple(_as_fn(G[m][n]) for n in range(4)) for m in range(4))
        coeffs = ReducedODECoefficients(form, Fm, Gm, tuple(tuple(float(v) for v in vec) for vec in s))
    samples = _default_samples() if samples is None else np.asarray(samples, dtype=float)
    for args in samples:
        for mu in range(4):
            for nu in range(4):
                for al in range(4):
                    for be in range(4):
                        C = (_comm(coeffs.block(mu, al, args[mu]), coeffs.block(nu, be, args[nu]))
                             + _comm(coeffs.block(mu, be, args[mu]), coeffs.block(nu, al, args[nu])))
                        if np.max(np.abs(C)) > COMMUTATOR_TOL:
                            raise ConstructionError(
                                f"splitting identity fails for (mu, nu, alpha, beta)=({mu},{nu},{al},{be}) "
                                f"at {args.tolist()}: |C| = {np.max(np.abs(C)):.2e}")
    return coeffs


def commutativity_check(coeffs, samples=None, lambdas=None):
    """Pairwise commutators of P_mu0 + P_mub lam_b at the sample arguments and lambdas."""
    samples = _default_samples() if samples is None else np.asarray(samples, dtype=float)
    if lambdas is None:
        lambdas = np.random.default_rng(1).uniform(-2.0, 2.0, (3, 3))
    worst, where = 0.0, None
    for args in samples:
        for lam in lambdas:
            ops = [coeffs.operator(mu, args[mu], lam) for mu in range(4)]
            for mu in range(4):
                for nu in range(mu + 1, 4):
                    A, B = ops[mu], ops[nu]
                    size = max(1.0, np.max(np.abs(A)) * np.max(np.abs(B)))
                    c = float(np.max(np.abs(_comm(A, B)))) / size
                    if c > worst:
                        worst, where = c, {"mu": mu, "nu": nu, "args": args.tolist(), "lambda": [float(v) for v in lam]}
    return CheckResult(worst <= COMMUTATOR_TOL, worst, where)


def numerical_rank(M, tol=PIVOT_TOL):
    """Rank by Gaussian elimination with complete pivoting; pivots below tol * max|M| count as zero."""
    A = np.array(M, dtype=complex)
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale == 0:
        return 0
    rank = 0
    rows, cols = A.shape
    for k in range(min(rows, cols)):
        sub = np.abs(A[k:, k:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        if sub[i, j] <= tol * scale:
            break
        A[[k, k + i]] = A[[k + i, k]]
        A[:, [k, k + j]] = A[:, [k + j, k]]
        A[k + 1:] -= np.outer(A[k + 1:, k] / A[k, k], A[k])
        rank += 1
    return rank


def rank_check(sys, F, f, samples, stackel=None, times=None):
    """Independence of the separation constants: rank of [T_b(t); S_ab(w_a)] equals 3.

    The T row is assembled from the consistency identity T_b = S_ab R_a^{-2}
    using the same Staeckel matrix, so a corrupted matrix is tested as a
    whole.  ``stackel(omega)`` overrides the family's matrix.  The result's
    ``detail`` also records the largest deviation of that T row from the
    closed-form T functions of the frame scales.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if times is None:
        times = np.linspace(f.window[0], f.window[1], 3)
    S_fn = stackel if stackel is not None else (lambda w: coords.stackel_matrix(sys, w))
    worst_rank, where, defect = 3, None, 0.0
    for t in times:
        scales = f.scales(t)
        T_closed = coords.T_functions(sys, scales)
        for w in samples:
            S = np.asarray(S_fn(w), dtype=float)
            R = coords.eikonal(sys, w, scales)
            T = R @ S
            defect = max(defect, float(np.max(np.abs(T - T_closed))))
            r = numerical_rank(np.vstack([T, S]))
            if r < worst_rank:
                worst_rank, where = r, {"t": float(t), "omega": w.tolist()}
    return CheckResult(worst_rank == 3, float(3 - worst_rank), where,
                       f"min rank {worst_rank}; consistency defect {defect:.2e}")


# --- fixed-field frame ----------------------------------------------------------

@dataclass(frozen=True)
class RotationTable:
    """O(t) tabulated on a uniform grid from t = 0, with cubic Hermite evaluation."""

    nodes: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    eH: Callable

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.nodes[0] - 1e-12) or np.any(t > self.nodes[-1] + 1e-12):
            raise DomainError("time outside the tabulated range")
        if len(self.nodes) == 1:
            return np.broadcast_to(self.values[0], t.shape + (3, 3)).copy()
        h = self.nodes[1] - self.nodes[0]
        idx = np.clip(((t - self.nodes[0]) / h).astype(int), 0, len(self.nodes) - 2)
        s = ((t - self.nodes[idx]) / h)[..., None, None]
        return ((2 * s ** 3 - 3 * s ** 2 + 1) * self.values[idx] + (s ** 3 - 2 * s ** 2 + s) * h * self.derivs[idx]
                + (-2 * s ** 3 + 3 * s ** 2) * self.values[idx + 1]
                + (s ** 3 - s ** 2) * h * self.derivs[idx + 1])

    def angular_velocity(self, t):
        """vee(dO/dt O^T) with dO/dt from a five-point difference of the table."""
        t = np.asarray(t, dtype=float)
        if len(self.nodes) < 5:
            raise DomainError("table too short for a five-point difference")
        h = self.nodes[1] - self.nodes[0]
        t0, t1 = self.nodes[0], self.nodes[-1]
        # fourth order everywhere: centred inside, one-sided within 2h of either end
        fwd = t < t0 + 2 * h - 1e-12
        bwd = t > t1 - 2 * h + 1e-12
        tc = np.where(fwd | bwd, np.clip(t, t0 + 2 * h, t1 - 2 * h), t)
        central = (-self(tc + 2 * h) + 8 * self(tc + h) - 8 * self(tc - h) + self(tc - 2 * h)) / (12 * h)
        tf = np.clip(t, t0, t1 - 4 * h)
        forward = (-25 * self(tf) + 48 * self(tf + h) - 36 * self(tf + 2 * h)
                   + 16 * self(tf + 3 * h) - 3 * self(tf + 4 * h)) / (12 * h)
        tb = np.clip(t, t0 + 4 * h, t1)
        backward = (25 * self(tb) - 48 * self(tb - h) + 36 * self(tb - 2 * h)
                    - 16 * self(tb - 3 * h) + 3 * self(tb - 4 * h)) / (12 * h)
        dO = np.where(fwd[..., None, None], forward, np.where(bwd[..., None, None], backward, central))
        return vee(dO @ np.swapaxes(self(t), -1, -2))

    def orthogonality_defect(self):
        V = self.values
        return float(np.max(np.abs(np.swapaxes(V, -1, -2) @ V - np.eye(3))))


def _polar(M):
    U, _, Vt = np.linalg.svd(M)
    return U @ Vt


def fixed_potential_frame(eH, t_grid, step=1e-3):
    """Integrate dO/dt = -[eH]_x O from O(0) = I, re-orthonormalising every step.

    ``eH`` maps an array of times to shape (n, 3).  Returns a RotationTable
    covering [0, max(t_grid)].
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0):
        raise DomainError("times must be non-negative")
    t_end = float(np.max(t_grid)) if t_grid.size else 0.0
    n = max(1, int(math.ceil(t_end / step - 1e-12))) if t_end > 0 else 0
    if n == 0:
        nodes = np.array([0.0])
        O = np.eye(3)[None]
        G = -hat(np.asarray(eH(nodes), dtype=float).reshape(1, 3))
        return RotationTable(nodes, O, G @ O, eH)
    h = t_end / n
    half = 0.5 * h * np.arange(2 * n + 1)
    G = -hat(np.asarray(eH(half), dtype=float).reshape(-1, 3))
    O = np.empty((n + 1, 3, 3))
    O[0] = np.eye(3)
    cur = np.eye(3)
    for j in range(n):
        Ga, Gm, Gb = G[2 * j], G[2 * j + 1], G[2 * j + 2]
        k1 = Ga @ cur
        k2 = Gm @ (cur + 0.5 * h * k1)
        k3 = Gm @ (cur + 0.5 * h * k2)
        k4 = Gb @ (cur + h * k3)
        nxt = cur + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        drift = np.max(np.abs(nxt.T @ nxt - np.eye(3)))
        if drift > 1e-6:
            raise IntegrationError(f"orthogonality drift {drift:.2e} at t={half[2 * j + 2]:.4g}; reduce the step")
        cur = _polar(nxt)
        O[j + 1] = cur
    table = RotationTable(half[::2], O, G[::2] @ O, eH)
    if table.orthogonality_defect() > 1e-9:
        raise IntegrationError("rotation table is not orthogonal to 1e-9")
    return table


def euler_angles_of(O, gimbal_tol=1e-9):
    """(alpha, beta, gamma) of rotation matrices, unwrapped along the leading axis.

    When sin(gamma) vanishes only alpha + beta (or alpha - beta) is
    defined; beta is then reported as 0.
    """
    O = np.asarray(O, dtype=float)
    single = O.ndim == 2
    O = O.reshape(-1, 3, 3)
    gamma = np.arccos(np.clip(O[:, 2, 2], -1.0, 1.0))
    sg = np.sin(gamma)
    regular = sg > gimbal_tol
    alpha = np.where(regular, np.arctan2(O[:, 0, 2], -O[:, 1, 2]), np.arctan2(O[:, 1, 0], O[:, 0, 0]))
    beta = np.where(regular, np.arctan2(O[:, 2, 0], O[:, 2, 1]), 0.0)
    alpha, beta = np.unwrap(alpha), np.unwrap(beta)
    out = np.stack([alpha, beta, gamma], axis=-1)
    return out[0] if single else out


def check_euler_extraction(O, angles, tol=1e-9):
    """max |euler_rotation(angles) - O|."""
    a = np.asarray(angles)
    return float(np.max(np.abs(euler_rotation(a[..., 0], a[..., 1], a[..., 2]) - O)))


# --- gauge reduction ------------------------------------------------------------

def gauge_reduce(eA, t, x_samples, tol=1e-6):
    """Split eA(t, .) into a rotational part 1/2 eH x x and a removable gradient part.

    Fits eA ~ M x + b by least squares.  Returns (eH, defect) where eH is
    twice the axial vector of the antisymmetric part of M and ``defect``
    is the max-norm of the symmetric part of M and of b (the pure-gauge
    remainder).  A fit residual above ``tol`` means the field is not
    linear in x and raises NotSeparableError.
    """
    X = np.atleast_2d(np.asarray(x_samples, dtype=float))
    design = np.hstack([X, np.ones((len(X), 1))])
    if len(X) < 4 or np.linalg.matrix_rank(design) < 4:
        raise DomainError("need at least four non-coplanar sample points")
    Y = np.asarray(eA(t, X), dtype=float)
    coef, *_ = np.linalg.lstsq(design, Y, rcond=None)
    resid = float(np.max(np.abs(design @ coef - Y)))
    scale = max(1.0, float(np.max(np.abs(Y))))
    if resid > tol * scale:
        raise NotSeparableError(
            f"vector potential is not linear in x (fit residual {resid:.2e}); "
            "the equation is not separable in this framework")
    M = coef[:3].T
    b = coef[3]
    eH = 2.0 * vee(M)
    sym = 0.5 * (M + M.T)
    defect = float(max(np.max(np.abs(sym)), np.max(np.abs(b))))
    return eH, defect
