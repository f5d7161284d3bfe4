import json
import math

import numpy as np
import pytest

from freewrap import wrapping as wr
from freewrap.class_l import ClassLDescriptor, classl_F, solve_atoms_detailed
from freewrap.exceptions import InsufficientMassError
from freewrap.harness import gen_random_descriptor
from freewrap.measures import TWO_PI, CircleMeasure, MeasureProfile
from freewrap.transforms import affine_F, recover_circle, recover_line

from conftest import upper_samples

ATOM = ClassLDescriptor(0.0, CircleMeasure([0.0], [1.0]))


def test_point_mass_wraps_clockwise():
    b = wr.wrap_descriptor(ClassLDescriptor(0.8, CircleMeasure()))
    assert b.gamma == pytest.approx(np.exp(-0.8j), abs=1e-16)


def test_cauchy_and_simplest_examples(rng):
    w = 0.9 * np.exp(1j * rng.uniform(0, TWO_PI, 20)) * rng.uniform(0, 1, 20)
    eta = wr.eta_handle(wr.wrap_descriptor(ClassLDescriptor(0.0, CircleMeasure.haar(0.6))))
    assert np.allclose(eta(w), math.exp(-0.6) * w, atol=1e-15)
    eta = wr.eta_handle(wr.wrap_descriptor(ClassLDescriptor(0.0, CircleMeasure(c0=1.0, cn=[0.5j]))))
    assert np.allclose(eta(w), w * math.exp(-1) * np.exp(1j * w), atol=1e-15)


def test_functional_identity(rng):
    for seed in range(10):
        d = gen_random_descriptor(seed)
        z = upper_samples(rng, 50)
        eta = wr.eta_handle(wr.wrap_descriptor(d))
        assert np.max(np.abs(np.exp(1j * classl_F(d)(z)) - eta(np.exp(1j * z)))) < 1e-12


def test_unwrap_examples():
    d = wr.unwrap_descriptor(wr.BooleanIDDescriptor(1.0, CircleMeasure()), 0)
    assert d.beta == 0.0
    d = wr.unwrap_descriptor(wr.BooleanIDDescriptor(1.0, CircleMeasure.haar()), 1)
    assert d.beta == pytest.approx(TWO_PI)
    for seed in range(20):
        b = wr.wrap_descriptor(gen_random_descriptor(seed))
        for n in (-2, 0, 3):
            assert abs(wr.wrap_descriptor(wr.unwrap_descriptor(b, n)).gamma - b.gamma) < 1e-14


def test_descriptor_validation_and_json(tmp_path):
    with pytest.raises(ValueError):
        wr.BooleanIDDescriptor(1.1, CircleMeasure())
    b = wr.BooleanIDDescriptor.from_angle(0.3, CircleMeasure([1.0], [0.2]))
    (tmp_path / "b.json").write_text(json.dumps(b.to_json()))
    c = wr.BooleanIDDescriptor.load(tmp_path / "b.json")
    assert abs(c.gamma - b.gamma) < 1e-16
    assert wr.BooleanIDDescriptor.from_json({"gamma_angle": 0.3}).gamma == pytest.approx(np.exp(0.3j))


def test_wrap_and_unwrap_handles(rng):
    d = gen_random_descriptor(4)
    eta = wr.wrap_handle(classl_F(d))
    w = 0.8 * np.exp(1j * rng.uniform(0, TWO_PI, 30))
    assert np.max(np.abs(eta(w) - wr.eta_handle(wr.wrap_descriptor(d))(w))) < 1e-12
    z = upper_samples(rng, 30, 0.3)
    for n in (-1, 0, 2):
        F = wr.unwrap_handle(wr.eta_handle(wr.wrap_descriptor(d)), n)
        ref = classl_F(wr.unwrap_descriptor(wr.wrap_descriptor(d), n))
        assert np.max(np.abs(F(z) - ref(z))) < 1e-10


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_direct_wrap_of_cauchy(t):
    th = np.arange(512) * TWO_PI / 512
    line = recover_line(affine_F(1j * t), wr.aligned_line_grid(th, 64), detect_atoms=False)
    circ = wr.wrap_direct(line, th, 64)
    exact = (1 - math.exp(-2 * t)) / np.abs(np.exp(1j * th) - math.exp(-t)) ** 2 / TWO_PI
    assert np.max(np.abs(circ.density - exact)) < 1e-6


def test_direct_wrap_of_atom():
    th = np.arange(64) * TWO_PI / 64
    p = MeasureProfile("line", [TWO_PI], [1.0], np.linspace(-10, 10, 5), np.zeros(5))
    circ = wr.wrap_direct(p, th, 4, min_mass=0.5)
    assert circ.atoms() == [(0.0, 1.0)]


def test_direct_wrap_separates_arcsine_from_point_mass():
    from freewrap.measures import total_variation
    R = 4 * math.pi
    u0 = math.acos(1 - 1e-3 / R)
    u = np.linspace(u0, math.pi - u0, 6001)
    x = np.concatenate([[-R - 1e-3], -R * np.cos(u), [R + 1e-3]])
    dens = np.zeros_like(x)
    dens[1:-1] = 1 / (math.pi * np.sqrt(R * R - x[1:-1] ** 2))
    th = np.arange(512) * TWO_PI / 512
    circ = wr.wrap_direct(MeasureProfile("line", [], [], x, dens), th, 2, min_mass=0.95)
    point = MeasureProfile("circle", [0.0], [1.0], th, np.zeros_like(th))
    assert total_variation(circ, point) > 0.5


def test_direct_wrap_needs_mass():
    p = MeasureProfile("line", [], [], np.linspace(-1, 1, 5), np.full(5, 0.1))
    with pytest.raises(InsufficientMassError):
        wr.wrap_direct(p, np.linspace(0, 6, 7))


def test_atom_correspondence():
    pairs = wr.atom_correspondence(ATOM, 50)
    assert max(abs(p.line_weight - p.circle_weight) for p in pairs) < 1e-6
    p = min(pairs, key=lambda p: abs(p.line_loc - 1.3065))
    assert p.circle_angle == pytest.approx(TWO_PI - p.line_loc, abs=1e-12)
    assert p.circle_weight == pytest.approx(1 / (1.5 + p.line_loc ** 2 / 2), abs=1e-6)


def test_atom_families_approach_their_accumulation_points():
    sol = solve_atoms_detailed(ClassLDescriptor(0.4, CircleMeasure([0.3, 2.0], [0.3, 0.5])), 200)
    ang = sol.circle_angles()
    for fam in (0, 1):
        sel = (sol.family == fam) & (sol.k >= 0)
        ks = sol.k[sel]
        a = ang[sel][np.argsort(ks)]
        # distance to the accumulation point shrinks monotonically in k
        target = np.mod(-(sol.pole_angles[sel][0]), TWO_PI)
        dist = np.abs(np.angle(np.exp(1j * (a - target))))
        assert np.all(np.diff(dist[5:]) <= 1e-15)

