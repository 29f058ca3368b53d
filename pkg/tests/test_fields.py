import numpy as np
import pytest

from pauli_sep import fields
from pauli_sep.catalog import proposition_example, proposition_potential
from pauli_sep.coords import coord_system
from pauli_sep.fields import ElectromagneticPotential, FCoefficients
from pauli_sep.frame import EulerFrame, angular_velocity
from pauli_sep.grid import GridSpec
from pauli_sep.timefunc import Constant, Exp, Linear, Sinusoid

from conftest import fd_gradient

CART = coord_system("cartesian")


def generic_frame():
    return EulerFrame(CART, alpha=Sinusoid(0.7, 1.3, 0.2), beta=Linear(0.4, 0.9),
                      gamma=Sinusoid(0.5, -0.8, 1.0, 0.9), l1=Exp(1.2, 0.3), l2=Sinusoid(0.2, 1, 0, 1.5),
                      l3=Linear(1, 0.4), v1=Linear(0.1, 0.2), v2=Sinusoid(0.3, 2.0), v3=Exp(0.2, -1),
                      window=(0, 2))


def test_magnetic_field_examples():
    c = 1.3
    f = EulerFrame(CART, alpha=Linear(0, -c))
    assert np.allclose(fields.magnetic_field(f, 0.4), [0, 0, c])
    assert np.allclose(fields.magnetic_field(EulerFrame(CART, beta=Constant(1)), 0.4), 0)


def test_field_is_minus_angular_velocity():
    f = generic_frame()
    t = np.linspace(0, 2, 50)
    assert np.max(np.abs(fields.magnetic_field(f, t) + angular_velocity(f, t))) < 1e-12


def test_vector_potential_examples():
    c = 2.0
    assert np.allclose(fields.vector_potential([0, 0, c], [1, 0, 0]), [0, c / 2, 0])
    assert np.allclose(fields.vector_potential([0, 0, c], [0, 0, 5]), 0)
    assert fields.A_squared([0, 0, c], [1, 0, 0]) == pytest.approx(c * c / 4)
    assert fields.A_squared([1, 2, 3], [0, 0, 0]) == 0


def test_A_squared_is_norm_of_potential(rng):
    H, x = rng.normal(size=(5, 3)), rng.normal(size=(5, 3))
    assert np.allclose(fields.A_squared(H, x), np.sum(fields.vector_potential(H, x) ** 2, axis=-1))


def test_vector_potential_curl_and_divergence():
    H = np.array([0.3, -0.7, 1.1])
    x = np.array([0.4, 0.2, -0.5])
    G = fd_gradient(lambda y: fields.vector_potential(H, y), x)
    curl = np.array([G[2, 1] - G[1, 2], G[0, 2] - G[2, 0], G[1, 0] - G[0, 1]])
    assert np.allclose(curl, H, atol=1e-9)
    assert abs(np.trace(G)) < 1e-8


def test_P_and_S_examples():
    static = EulerFrame(CART, l1=Constant(2.0), v1=Constant(1.0))
    assert fields.P_function(static, 0.3, [1, 2, 3]) == 0
    assert fields.S_phase(static, 0.3, [1, 2, 3]) == 0
    moving = EulerFrame(CART, v1=Linear(0, 1))
    assert fields.P_function(moving, 0.3, [1, 0, 0]) == pytest.approx(1.0)
    growing = EulerFrame(CART, l1=Exp(1, 1), window=(0, 2))
    assert fields.S_phase(growing, 0.7, [2, 0, 0]) == pytest.approx(1.0)


def test_P_term_by_term():
    f = generic_frame()
    t, xp = 0.6, np.array([0.3, -0.8, 1.2])
    total = 0.0
    for a, (l, v) in enumerate(((f.l1, f.v1), (f.l2, f.v2), (f.l3, f.v3))):
        total += (l.d2(t) / l(t) * xp[a] ** 2 + 2 * (l(t) * v.d2(t) + 2 * l.d1(t) * v.d1(t)) * xp[a]
                  + l(t) ** 2 * v.d1(t) ** 2)
    assert fields.P_function(f, t, xp) == pytest.approx(total, rel=1e-12)


def test_grad_S_against_finite_differences():
    f = generic_frame()
    t, x = 0.9, np.array([0.5, -0.3, 0.8])
    from pauli_sep.frame import x_prime
    fd = fd_gradient(lambda y: fields.S_phase(f, t, x_prime(f, t, y)), x, h=1e-3)
    assert np.allclose(fields.grad_S(f, t, x), fd, atol=1e-8)


def test_scalar_potential_trivial_and_shift():
    f = EulerFrame(CART)
    x = np.array([[0.3, 0.1, -0.4], [1, 2, 3]])
    assert np.allclose(fields.scalar_potential(f, FCoefficients(), 0.2, x), 0)
    F = FCoefficients(F10=Linear(0, 1), F20=Sinusoid(1, 1))
    base = fields.scalar_potential(f, F, 0.2, x)
    shifted = fields.scalar_potential(f, FCoefficients(F00=Constant(0.7), F10=F.F10, F20=F.F20), 0.2, x)
    assert np.allclose(shifted, base - 0.7)


def test_proposition_potential_reproduced(rng):
    s = proposition_example(q=1.3, c=0.8)
    x = rng.uniform(-1, 1, (50, 3))
    x = x[np.linalg.norm(x, axis=1) > 0.3]
    for t in (0.0, 0.07, 0.15):
        got = fields.scalar_potential(s.frame, s.F, t, x)
        assert np.max(np.abs(got - proposition_potential(1.3, 0.8, x))) < 1e-9


def test_small_c_approaches_coulomb(rng):
    s = proposition_example(q=1.0, c=1e-6)
    x = rng.normal(size=(40, 3))
    x /= np.linalg.norm(x, axis=1)[:, None]
    got = fields.scalar_potential(s.frame, s.F, 0.05, x)
    assert np.max(np.abs(got - 1.0)) < 1e-6


def test_gauge_transform():
    pot = fields.separable_potential(EulerFrame(CART, alpha=Linear(0, -1)), FCoefficients(F10=Linear(0, 1)))
    x = np.array([[0.2, 0.3, -0.1]])
    same = fields.gauge_transform(pot, fields.linear_gauge())
    assert np.allclose(same.eA(0.3, x), pot.eA(0.3, x)) and np.allclose(same.eA0(0.3, x), pot.eA0(0.3, x))
    c = 0.4
    timed = fields.gauge_transform(pot, fields.linear_gauge(c_t=c))
    assert np.allclose(timed.eA(0.3, x), pot.eA(0.3, x))
    assert np.allclose(timed.eA0(0.3, x), pot.eA0(0.3, x) - c)
    g = fields.linear_gauge(c_x=(0.1, 0, 0.2), c_tx=(1, 0, 0))
    moved = fields.gauge_transform(pot, g)

    def curl(fn, y):
        G = fd_gradient(fn, y)
        return np.array([G[2, 1] - G[1, 2], G[0, 2] - G[2, 0], G[1, 0] - G[0, 1]])

    y = x[0]
    assert np.allclose(curl(lambda z: moved.eA(0.3, z), y), curl(lambda z: pot.eA(0.3, z), y), atol=1e-8)


def test_maxwell_residual_constant_potential():
    pot = ElectromagneticPotential(eH=lambda t: np.zeros(3), eA=lambda t, x: np.zeros(np.shape(x)),
                                   eA0=lambda t, x: np.full(np.shape(x)[:-1], 2.0))
    r = fields.maxwell_residual(pot, GridSpec(n=(3, 3, 3), times=(0.0, 0.5)))
    assert np.allclose(r, 0)


def test_maxwell_residual_proposition_potential():
    s = proposition_example()
    pot = fields.ElectromagneticPotential(
        eH=lambda t: np.array([0, 0, 1.0]),
        eA=lambda t, x: fields.vector_potential([0, 0, 1.0], x),
        eA0=lambda t, x: proposition_potential(1.0, 1.0, x))
    grid = GridSpec((-2, -2, -2), (2, 2, 2), (6, 6, 6), exclusions=(((0, 0, 0), 0.5),), times=(0.0, 0.5))
    assert max(fields.maxwell_residual(pot, grid)) < 1e-4
    assert s.system.name == "spherical"


def test_potential_is_time_independent(rng):
    s = proposition_example()
    x = rng.uniform(0.4, 1.0, (20, 3))
    ref = fields.scalar_potential(s.frame, s.F, 0.0, x)
    for t in (0.05, 0.1, 0.2):
        assert np.max(np.abs(fields.scalar_potential(s.frame, s.F, t, x) - ref)) < 1e-9


def test_coefficients_round_trip():
    F = FCoefficients(F00=Linear(1, 2), F20=Sinusoid(1, 2))
    assert FCoefficients.from_dict(F.to_dict()).to_dict() == F.to_dict()
