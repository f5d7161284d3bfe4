import math

import numpy as np
import pytest

from freewrap import transforms as tr
from freewrap.class_l import ClassLDescriptor, classl_F
from freewrap.measures import TWO_PI, CircleMeasure, RealAtomicMeasure
from freewrap.wrapping import aligned_line_grid, eta_handle, wrap_descriptor, wrap_direct

from conftest import disk_samples, upper_samples

ATOM = ClassLDescriptor(0.0, CircleMeasure([0.0], [1.0]))
ZI = ClassLDescriptor(0.0, CircleMeasure(c0=1.0, cn=[0.5j]))


def zi_density(x):
    return (1 + np.sin(x)) / (x ** 2 + 2 * x * np.cos(x) + 2 + 2 * np.sin(x)) / math.pi


def test_handle_kinds_and_domains():
    F = tr.affine_F(1j)
    assert F.in_domain(np.array([1j]))[0] and not F.in_domain(np.array([-1j]))[0]
    with pytest.raises(ValueError):
        tr.TransformHandle("G", lambda z: z, None)


def test_contour_derivative_matches_exact(rng):
    F = classl_F(ATOM)
    z = upper_samples(rng, 10, 0.5)
    assert np.max(np.abs(tr.contour_derivative(F, z) - F.derivative(z))) < 1e-9


def test_pick_and_schur_sampling(rng):
    F = classl_F(ZI)
    assert tr.pick_deviation(F, upper_samples(rng, 500)) <= 0
    assert tr.schur_deviation(eta_handle(wrap_descriptor(ZI)), disk_samples(rng, 500, 0.99)) <= 0


def test_invert_affine_and_linear():
    r = tr.invert_transform(tr.affine_F(1j), np.array([5j]))
    assert r.preimage[0] == pytest.approx(4j, abs=1e-13)
    r = tr.invert_transform(tr.linear_eta(math.exp(-1)), np.array([0.1]))
    assert r.preimage[0] == pytest.approx(0.1 * math.e, abs=1e-13)


def test_invert_atomic_descriptor_by_reevaluation():
    F = classl_F(ATOM)
    r = tr.invert_transform(F, np.array([10j]))
    assert abs(F(r.preimage)[0] - 10j) < 1e-12


def test_phi_examples():
    z = np.array([1 + 8j, -3 + 12j])
    assert np.allclose(tr.phi_eval(tr.affine_F(2j), z), -2j, atol=1e-12)
    assert np.allclose(tr.phi_eval(tr.affine_F(-0.7), z), 0.7, atol=1e-12)
    F = classl_F(ATOM)
    v = tr.phi_eval(F, np.array([10j]))
    assert abs(F(10j + v) - 10j)[0] < 1e-10


def test_sigma_examples():
    z = np.array([0.05, 0.02j])
    assert np.allclose(tr.sigma_eval(tr.linear_eta(math.exp(-0.5)), z), math.exp(0.5), atol=1e-12)
    g = np.exp(0.7j)
    assert np.allclose(tr.sigma_eval(tr.linear_eta(g), z), np.conj(g), atol=1e-12)
    eta = eta_handle(wrap_descriptor(ZI))
    s = tr.sigma_eval(eta, np.array([0.1]))
    assert abs(eta(s * 0.1)[0] - 0.1) < 1e-12


def test_extrapolation_is_exact_for_quadratics():
    hs = np.array([0.1, 0.05, 0.01])
    assert tr.extrapolate_to_zero(hs, [3 + 2 * h + h * h for h in hs]) == pytest.approx(3.0, abs=1e-12)


def test_recover_line_cauchy_and_atom():
    g = np.linspace(-10, 10, 401)
    p = tr.recover_line(tr.affine_F(1j), g)
    assert np.max(np.abs(p.density - 1 / (math.pi * (1 + g ** 2)))) < 1e-6
    assert p.atoms() == []
    p = tr.recover_line(tr.affine_F(-0.5), g)
    (x, w), = p.atoms()
    assert x == pytest.approx(0.5, abs=1e-9) and w == pytest.approx(1.0, abs=1e-6)


def test_recover_line_simplest_class_l_example():
    g = np.linspace(-20 * math.pi, 20 * math.pi, 4001)
    p = tr.recover_line(classl_F(ZI), g, detect_atoms=False)
    assert np.max(np.abs(p.density - zi_density(g))) < 1e-6


def test_recover_line_finds_atoms_of_atomic_descriptor():
    F = classl_F(ATOM)
    p = tr.recover_line(F, np.linspace(-30, 30, 3001))
    x, w = zip(*p.atoms())
    i = int(np.argmin(np.abs(np.array(x) - 1.3065)))
    assert x[i] == pytest.approx(1.3065423741888065, abs=1e-8)
    assert w[i] == pytest.approx(1 / (1.5 + x[i] ** 2 / 2), abs=1e-6)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_recover_circle_wrapped_cauchy(t):
    th = np.arange(512) * TWO_PI / 512
    p = tr.recover_circle(tr.linear_eta(math.exp(-t)), th)
    exact = (1 - math.exp(-2 * t)) / np.abs(np.exp(1j * th) - math.exp(-t)) ** 2 / TWO_PI
    assert np.max(np.abs(p.density - exact)) < 1e-6


def test_recover_circle_point_mass():
    p = tr.recover_circle(tr.linear_eta(1.0), np.arange(256) * TWO_PI / 256)
    (a, w), = p.atoms()
    assert a == pytest.approx(0.0, abs=1e-9) and w == pytest.approx(1.0, abs=1e-6)


def test_recover_circle_matches_wrapped_line_density():
    th = np.arange(512) * TWO_PI / 512
    circ = tr.recover_circle(eta_handle(wrap_descriptor(ZI)), th)
    line = tr.recover_line(classl_F(ZI), aligned_line_grid(th, 64), detect_atoms=False)
    direct = wrap_direct(line, th, 64)
    assert np.max(np.abs(circ.density - direct.density)) < 1e-5


def test_line_atom_weight_of_two_point_law():
    F = tr.F_from_atoms(RealAtomicMeasure([-1.0, 2.0], [0.25, 0.75]))
    assert np.allclose(tr.line_atom_weight(F, np.array([-1.0, 2.0])), [0.25, 0.75], atol=1e-8)


def test_compose_and_identity():
    a, b = tr.affine_F(1j), tr.affine_F(-2.0)
    c = tr.compose(a, b)
    assert c(np.array([1 + 1j]))[0] == pytest.approx(-1 + 2j)
    assert tr.identity_handle("eta")(np.array([0.3j]))[0] == 0.3j
