import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pauli_sep import frame as fr
from pauli_sep.coords import coord_system
from pauli_sep.errors import ConstructionError, DomainError
from pauli_sep.frame import EulerFrame
from pauli_sep.timefunc import Constant, Exp, Linear, Sinusoid

CART = coord_system("cartesian")


def generic_frame(system=CART):
    return EulerFrame(system, alpha=Sinusoid(0.7, 1.3, 0.2), beta=Linear(0.4, 0.9),
                      gamma=Sinusoid(0.5, -0.8, 1.0, 0.9), l1=Exp(1.2, 0.3), l2=Exp(1.2, 0.3),
                      l3=Exp(1.2, 0.3), v1=Linear(0.1, 0.2), v2=Sinusoid(0.3, 2.0), window=(0, 2))


def fd_time(fn, t, h=1e-5):
    return (fn(t + h) - fn(t - h)) / (2 * h)


def test_euler_rotation_examples():
    assert np.allclose(fr.euler_rotation(0, 0, 0), np.eye(3))
    assert np.allclose(fr.euler_rotation(np.pi / 2, 0, 0), [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.tuples(*[st.floats(-7, 7)] * 3))
def test_rotation_orthogonal(angles):
    O = fr.euler_rotation(*angles)
    assert np.max(np.abs(O @ O.T - np.eye(3))) < 1e-13
    assert np.linalg.det(O) == pytest.approx(1.0, abs=1e-13)


def test_hat_vee_inverse():
    w = np.array([0.3, -1.2, 2.0])
    assert np.array_equal(fr.vee(fr.hat(w)), w)
    assert np.allclose(fr.hat(w) @ np.array([1.0, 2, 3]), np.cross(w, [1.0, 2, 3]))


def test_angular_velocity_examples():
    c = 0.7
    f = EulerFrame(CART, alpha=Linear(0, -c), beta=Constant(0.4), gamma=Constant(1.1))
    assert np.allclose(fr.angular_velocity(f, 0.3), [0, 0, -c])
    assert np.allclose(fr.angular_velocity(EulerFrame(CART, alpha=Constant(1.0)), 0.5), 0)
    M = fr.rotation_rate_matrix(EulerFrame(CART, alpha=Linear(0, -c)), 0.3)
    assert np.allclose(M, [[0, c, 0], [-c, 0, 0], [0, 0, 0]])


def test_rotation_rate_against_finite_differences():
    f = generic_frame()
    for t in (0.2, 0.9, 1.7):
        O = fr.rotation_matrix(f, t)
        dO = fd_time(lambda s: fr.rotation_matrix(f, s), t)
        M = fr.rotation_rate_matrix(f, t)
        assert np.max(np.abs(dO @ O.T - M)) < 1e-7
        assert np.max(np.abs(M + M.T)) < 1e-15
        assert np.max(np.abs(fr.hat(fr.angular_velocity(f, t)) - M)) < 1e-12


def test_M_matrix():
    sym, anti = fr.M_matrix(EulerFrame(CART), 0.4)[::-1]
    assert np.allclose(sym, 0) and np.allclose(anti, 0)
    f = EulerFrame(CART, l1=Exp(1, 1), l2=Exp(1, 1), l3=Exp(1, 1))
    anti, sym = fr.M_matrix(f, 0.4)
    assert np.allclose(sym, np.eye(3)) and np.allclose(anti, 0)
    g = generic_frame()
    t = 0.8
    anti, sym = fr.M_matrix(g, t)
    OL = lambda s: fr.rotation_matrix(g, s) * g.scales(s)[None, :]
    assert np.max(np.abs(fd_time(OL, t) @ np.linalg.inv(OL(t)) - (anti + sym))) < 1e-7
    assert np.max(np.abs(sym - sym.T)) < 1e-12


def test_coordinate_map_examples():
    w = np.array([0.3, -0.2, 1.1])
    assert np.allclose(fr.x_of_omega(EulerFrame(CART), 0.0, w), w)
    assert np.allclose(fr.x_of_omega(EulerFrame(CART, v1=Constant(1.0)), 0.0, [0, 0, 0]), [1, 0, 0])
    rot = EulerFrame(CART, alpha=Linear(0, -1.0), window=(0, 2))
    assert np.allclose(fr.x_of_omega(rot, np.pi / 2, [1, 0, 0]), [0, -1, 0], atol=1e-15)
    quarter = EulerFrame(CART, alpha=Constant(np.pi / 2))
    assert np.allclose(fr.x_prime(quarter, 0.0, [1, 0, 0]), [0, -1, 0], atol=1e-15)


def test_inverse_map_round_trip():
    f = generic_frame(coord_system("spherical"))
    w = np.array([[0.8, 0.3, 1.0], [1.5, -0.4, 4.0]])
    x = fr.x_of_omega(f, 0.6, w)
    assert np.allclose(fr.omega_of_x(f, 0.6, x, guess=w + 0.02), w, atol=1e-10)


def test_split_class_constraints():
    with pytest.raises(ConstructionError):
        EulerFrame(coord_system("spherical"), l3=Constant(2.0))
    with pytest.raises(ConstructionError):
        EulerFrame(coord_system("cylindrical"), l1=Constant(2.0))
    EulerFrame(coord_system("cylindrical"), l3=Constant(2.0))
    EulerFrame(CART, l1=Constant(2.0), l2=Constant(3.0))


def test_scale_zero_crossing_rejected():
    with pytest.raises(ConstructionError):
        EulerFrame(CART, l1=Linear(1, -1), window=(0, 2))
    EulerFrame(CART, l1=Linear(1, -1), window=(0, 0.9))


def test_zero_scale_domain_error():
    f = EulerFrame(CART, l1=Linear(1, -1), window=(0, 0.5))
    with pytest.raises(DomainError):
        fr.M_matrix(f, 1.0)


def test_frame_round_trip():
    f = generic_frame(coord_system("spherical"))
    g = EulerFrame.from_dict(f.to_dict())
    assert g.to_dict() == f.to_dict()
    with pytest.raises(ConstructionError):
        EulerFrame.from_dict({**f.to_dict(), "omega": 1})
