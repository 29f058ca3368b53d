import numpy as np
import pytest

from pauli_sep import coords
from pauli_sep.cli import load_scenario_file
from pauli_sep.coords import coord_system
from pauli_sep.errors import ConstructionError, DomainError, IntegrationError, NotSeparableError
from pauli_sep.fields import FCoefficients, vector_potential
from pauli_sep.frame import EulerFrame, euler_rotation, hat, rotation_matrix
from pauli_sep.grid import GridSpec
from pauli_sep.separation import (Corruption, ReducedODECoefficients, Scenario, assemble_solution,
                                  commutativity_check, euler_angles_of, fixed_potential_frame, gauge_reduce,
                                  matrix_coefficient_forms, numerical_rank, pauli_residual, rank_check,
                                  solve_separated, solve_spatial_factor, solve_time_factor)
from pauli_sep.spinor import sigma_dot
from pauli_sep.timefunc import Constant, Linear, Sinusoid

from conftest import ALL_SYSTEMS

CART = coord_system("cartesian")
SMALL_GRID = GridSpec((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5), (3, 3, 3), times=(0.0, 0.05))


def cart_scenario(**kw):
    return Scenario(EulerFrame(CART, window=(0, 0.1)), grid=SMALL_GRID, **kw)


# --- reduced equations ------------------------------------------------------------

def test_time_factor():
    assert solve_time_factor(cart_scenario(), 0.07) == 1
    k1 = 0.8
    s = cart_scenario(F=FCoefficients(F00=Constant(k1)))
    assert solve_time_factor(s, 0.07) == pytest.approx(np.exp(1j * k1 * 0.07), abs=1e-14)
    s = cart_scenario(F=FCoefficients(F00=Sinusoid(2, 3)), lam=(0.3, -1, 2))
    for t in (0.01, 0.05, 0.09):
        assert abs(solve_time_factor(s, t)) == pytest.approx(1.0, abs=1e-14)


def test_spatial_factor_closed_forms():
    w = np.linspace(-0.9, 0.9, 37)
    trivial = solve_spatial_factor(cart_scenario(), 0, (-1, 1), ic=(1, 0))
    assert np.max(np.abs(trivial(w) - 1)) < 1e-14
    mu = 1.7
    grow = solve_spatial_factor(cart_scenario(F=FCoefficients(F10=Constant(mu ** 2))), 0, (-1, 1), ic=(1, 0))
    assert np.max(np.abs(grow(w) - np.cosh(mu * w))) < 1e-8
    osc = solve_spatial_factor(cart_scenario(F=FCoefficients(F20=Constant(-mu ** 2))), 1, (-1, 1), ic=(0, mu))
    assert np.max(np.abs(osc(w) - np.sin(mu * w))) < 1e-8
    assert np.max(np.abs(osc(w, 1) - mu * np.cos(mu * w))) < 1e-8
    assert osc.ode_residual() < 1e-8


def test_spatial_factor_lambda_enters_through_stackel():
    # Cartesian: S = I, so axis 3 sees F30 + lam_3
    s = cart_scenario(lam=(0, 0, -4.0))
    f = solve_spatial_factor(s, 2, (-1, 1), ic=(1, 0))
    w = np.linspace(-0.9, 0.9, 11)
    assert np.max(np.abs(f(w) - np.cos(2 * w))) < 1e-8


def test_spatial_factor_singular_coefficient():
    s = Scenario(EulerFrame(coord_system("spherical"), window=(0, 0.1)), grid=SMALL_GRID)
    with pytest.raises(DomainError):
        solve_spatial_factor(s, 0, (-0.5, 0.5))
    with pytest.raises(DomainError):
        solve_spatial_factor(s, 0, (1, 1))


# --- assembly ----------------------------------------------------------------------

def test_trivial_assembly():
    s = cart_scenario()
    sol = solve_separated(s)
    psi = assemble_solution(s, sol, 0.03, SMALL_GRID.points())
    assert np.allclose(psi, [1, 0])
    zero = s.replace(chi=(0, 0))
    assert np.all(assemble_solution(zero, sol, 0.03, SMALL_GRID.points()) == 0)


def test_assembly_is_linear_in_chi():
    s = load_scenario_file("rotating_cylindrical").scenario
    sol = solve_separated(s)
    X = s.grid.points()[:10]
    kappa = 0.4 - 1.3j
    base = assemble_solution(s, sol, 0.05, X)
    scaled = assemble_solution(s.replace(chi=tuple(kappa * c for c in s.chi)), sol, 0.05, X)
    assert np.allclose(scaled, kappa * base, rtol=1e-14, atol=0)


def test_factors_satisfy_reduced_equations():
    s = load_scenario_file("proposition").scenario
    sol = solve_separated(s)
    assert sol.check_factors() < 1e-8


def test_check_factors_raises_on_tight_tolerance():
    sol = solve_separated(load_scenario_file("proposition").scenario)
    with pytest.raises(IntegrationError):
        sol.check_factors(tol=1e-30)


# --- residual ------------------------------------------------------------------------

def test_free_particle_residual():
    s = load_scenario_file("free_particle").scenario
    rep = pauli_residual(s, solve_separated(s))
    assert rep.max_rel < 1e-4
    assert rep.n_excluded == 0
    max_rel, mean_rel = rep
    assert mean_rel <= max_rel


def test_perturbed_lambda_breaks_separation():
    s = load_scenario_file("rotating_cylindrical").scenario
    sol = solve_separated(s)
    # factors solved with the original constants, time factor and residual with others
    bad = s.replace(lam=(s.lam[0] + 0.5, s.lam[1], s.lam[2]))
    sol.scenario = bad
    assert pauli_residual(bad, sol).max_rel > 1e-2


@pytest.mark.parametrize("seed", range(5))
def test_lambda_independence(seed):
    s = load_scenario_file("rotating_cylindrical").scenario
    lam = tuple(np.random.default_rng(seed).uniform(-1, 1, 3))
    s = s.replace(lam=lam)
    assert pauli_residual(s, solve_separated(s)).max_rel < 1e-4


def test_residual_report_serialises():
    s = load_scenario_file("free_particle").scenario
    d = pauli_residual(s, solve_separated(s)).to_dict()
    assert set(d) == {"max_rel", "mean_rel", "scale", "n_points", "n_excluded", "h", "times"}


# --- scenario plumbing -----------------------------------------------------------------

def test_scenario_validation():
    with pytest.raises(ConstructionError):
        cart_scenario(lam=(1, 2))
    with pytest.raises(ConstructionError):
        cart_scenario(chi=(1, 0, 0))
    with pytest.raises(ConstructionError):
        cart_scenario(ode_step=0)
    with pytest.raises(ConstructionError):
        Corruption("nonsense")
    with pytest.raises(ConstructionError):
        Corruption("stackel_entry", 3, 0)


def test_corruption_round_trip():
    c = Corruption("lambda_coupling", 1, 2, 0.25)
    assert Corruption.from_dict(c.to_dict()) == c


# --- structural validators ---------------------------------------------------------------

def test_sigma_commutator_oracle():
    s, t = np.array([1.0, 0.2, 0]), np.array([0, 1.0, 0.5])
    A, B = sigma_dot(s), sigma_dot(t)
    assert np.allclose(A @ B - B @ A, 2j * sigma_dot(np.cross(s, t)))


def test_scalar_form_commutes():
    F = [[1.0, 0, 0, 0], [Linear(0, 1), 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    coeffs = matrix_coefficient_forms("scalar", F)
    assert commutativity_check(coeffs)


def test_shared_axis_form_commutes():
    F = [[Sinusoid(1, 1), 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    G = [[Linear(0, 1), 0.5, 0, 0], [Sinusoid(1, 2), 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0]]
    coeffs = matrix_coefficient_forms("shared_axis", F, G, s=(0.3, -0.4, 1.0))
    assert commutativity_check(coeffs)


def test_shared_function_form_with_independent_vectors():
    F = [[0, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    G = [Linear(1, 1), Sinusoid(1, 1), Constant(0.5), Linear(0, 2)]
    s = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]
    coeffs = matrix_coefficient_forms("shared_function", F, G, s)
    assert commutativity_check(coeffs)


def test_identity_normalisation_gives_stackel_entries():
    sys = coord_system("spherical")
    S = lambda a, b: (lambda w: coords.stackel_row(sys, a, w)[b])
    F = [[0, 1, 0, 0]] + [[0] + [S(a, b) for b in range(3)] for a in range(3)]
    coeffs = matrix_coefficient_forms("scalar", F, samples=[[0.1, 0.9, 0.3, 1.0]])
    w = 0.9
    for b in range(3):
        assert coeffs.block(1, b + 1, w)[0, 0] == pytest.approx(coords.stackel_row(sys, 0, w)[b])


def test_two_axis_counterexample_rejected():
    F = [[0, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    G = [[0, Linear(0, 1), 0, 0], [0, 1, 0, 0], [0, 0, Sinusoid(1, 1), 0], [0, 0, 0, 0]]
    s = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 0)]
    with pytest.raises(ConstructionError):
        matrix_coefficient_forms("general", F, G, s)
    F_fns = tuple(tuple((lambda v: (lambda w: v))(float(x)) if not callable(x) else x for x in row) for row in F)
    G_fns = tuple(tuple((lambda v: (lambda w: v))(float(x)) if not callable(x) else x for x in row) for row in G)
    coeffs = ReducedODECoefficients("general", F_fns, G_fns, tuple(map(tuple, s)))
    result = commutativity_check(coeffs)
    assert not result
    assert result.worst > 1e-6


def test_numerical_rank():
    assert numerical_rank(np.eye(3)) == 3
    assert numerical_rank(np.zeros((4, 3))) == 0
    M = np.array([[1.0, 2, 2], [0, 1, 1], [3, 1, 1], [1, 0, 0]])
    assert numerical_rank(M) == 2


@pytest.mark.parametrize("sys", ALL_SYSTEMS, ids=[s.name for s in ALL_SYSTEMS])
def test_rank_condition_holds_for_every_family(sys, rng):
    f = EulerFrame(sys, l1=Linear(1, 0.3), l2=Linear(1, 0.3), l3=Linear(1, 0.3), window=(0, 1))
    samples = coords.sample_interior(sys, 20, rng)
    assert rank_check(sys, FCoefficients(), f, samples)


def test_duplicated_column_is_rank_deficient():
    sys = coord_system("spherical")
    f = EulerFrame(sys, window=(0, 1))

    def duplicated(w):
        S = coords.stackel_matrix(sys, w)
        S[:, 1] = S[:, 0]
        return S

    res = rank_check(sys, FCoefficients(), f, [[1.0, 0.2, 0.5]], stackel=duplicated)
    assert not res
    assert "rank 2" in res.detail


# --- fixed-potential frame ------------------------------------------------------------------

def test_frame_for_constant_field():
    c = 0.9
    eH = lambda t: np.stack(np.broadcast_arrays(0 * t, 0 * t, c + 0 * t), -1)
    ts = np.linspace(0, 3, 31)
    table = fixed_potential_frame(eH, ts)
    expected = rotation_matrix(EulerFrame(CART, alpha=Linear(0, -c), window=(0, 3)), ts)
    assert np.max(np.abs(table(ts) - expected)) < 1e-9
    assert np.allclose(euler_angles_of(table(ts))[:, 0], -c * ts, atol=1e-9)


def test_frame_for_zero_field():
    table = fixed_potential_frame(lambda t: np.zeros(np.shape(t) + (3,)), np.linspace(0, 1, 5))
    assert np.allclose(table(np.linspace(0, 1, 5)), np.eye(3))


def test_frame_for_generic_field():
    eH = lambda t: np.stack(np.broadcast_arrays(np.sin(t), 0.3 + 0 * t, 0.5 * np.cos(2 * t)), -1)
    ts = np.linspace(0, 2, 41)
    table = fixed_potential_frame(eH, ts)
    assert table.orthogonality_defect() < 1e-9
    t, h = ts[1:-1], 1e-5
    dO = (table(t + h) - table(t - h)) / (2 * h)
    rate = dO @ np.swapaxes(table(t), -1, -2)
    assert np.max(np.abs(rate + hat(eH(t)))) < 1e-7
    assert np.max(np.abs(table.angular_velocity(ts) + eH(ts))) < 1e-7


def test_frame_rejects_negative_times():
    with pytest.raises(DomainError):
        fixed_potential_frame(lambda t: np.zeros(np.shape(t) + (3,)), [-1.0, 0.0])


def test_euler_extraction_round_trip(rng):
    for _ in range(20):
        a, b, g = rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0.1, 3.0)
        O = euler_rotation(a, b, g)
        assert np.allclose(euler_rotation(*euler_angles_of(O)), O, atol=1e-12)
    O = euler_rotation(0.4, 0.3, 0.0)
    assert np.allclose(euler_rotation(*euler_angles_of(O)), O, atol=1e-12)


# --- gauge reduction ----------------------------------------------------------------

def test_gauge_reduce(rng):
    X = rng.normal(size=(12, 3))
    c = 1.4
    eH, defect = gauge_reduce(lambda t, x: vector_potential([0, 0, c], x), 0.0, X)
    assert np.allclose(eH, [0, 0, c]) and defect < 1e-12
    Sym = np.array([[0.3, 0.1, 0], [0.1, -0.2, 0], [0, 0, 0.05]])
    eH, defect = gauge_reduce(lambda t, x: vector_potential([0, 0, c], x) + x @ Sym + 0.7, 0.0, X)
    assert np.allclose(eH, [0, 0, c])
    assert defect == pytest.approx(0.7)
    with pytest.raises(NotSeparableError):
        gauge_reduce(lambda t, x: x ** 2, 0.0, X)
    with pytest.raises(DomainError):
        gauge_reduce(lambda t, x: x, 0.0, X[:3])
