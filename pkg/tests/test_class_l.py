import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freewrap import class_l
from freewrap.class_l import ClassLDescriptor, classl_F
from freewrap.exceptions import WindowTooSmallError
from freewrap.harness import gen_random_descriptor
from freewrap.measures import TWO_PI, CircleMeasure
from freewrap.transforms import line_atom_weight

from conftest import upper_samples

ATOM = ClassLDescriptor(0.0, CircleMeasure([0.0], [1.0]))
X_STAR = 1.3065423741888065  # root of x = cot(x/2) in (0, 2pi), by brentq below


def test_reference_root_is_independent():
    from scipy.optimize import brentq
    assert brentq(lambda x: x - 1 / math.tan(x / 2), 0.1, 3.0, xtol=1e-15) == pytest.approx(X_STAR, abs=1e-14)


def test_classl_F_examples(rng):
    z = upper_samples(rng, 20)
    assert np.allclose(classl_F(ClassLDescriptor(0.4, CircleMeasure()))(z), z - 0.4, atol=1e-15)
    assert np.allclose(classl_F(ClassLDescriptor(0.0, CircleMeasure.haar(1.5)))(z), z + 1.5j, atol=1e-14)
    zi = ClassLDescriptor(0.0, CircleMeasure(c0=1.0, cn=[0.5j]))
    assert np.allclose(classl_F(zi)(z), z + np.exp(1j * z) + 1j, atol=1e-14)


def test_membership_examples(rng):
    z = upper_samples(rng, 50)
    from freewrap.transforms import TransformHandle, affine_F
    assert class_l.membership_check(affine_F(1j), z) == (True, 0.0)
    bern = TransformHandle("F", lambda w: w - 4 * math.pi ** 2 / w, None)
    assert not class_l.membership_check(bern, z)[0]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_random_descriptors_are_members(seed):
    rng = np.random.default_rng(seed)
    ok, dev = class_l.membership_check(classl_F(gen_random_descriptor(seed)), upper_samples(rng, 30))
    assert ok and dev < 1e-12


def test_disk_function_maps_into_closed_upper_half_plane(rng):
    d = gen_random_descriptor(3)
    w = 0.99 * np.sqrt(rng.uniform(0, 1, 500)) * np.exp(1j * rng.uniform(0, TWO_PI, 500))
    assert np.all(d.f(w).imag >= -1e-12)


def test_atom_solution_for_point_mass():
    sol = class_l.solve_atoms_detailed(ATOM, 200)
    assert sol.residuals.max() < 1e-10
    i = int(np.argmin(np.abs(sol.locations - X_STAR)))
    assert sol.locations[i] == pytest.approx(X_STAR, abs=1e-12)
    assert sol.weights[i] == pytest.approx(1 / (1.5 + X_STAR ** 2 / 2), abs=1e-12)
    assert sol.weights.sum() >= 0.99
    # weights against independent residue limits of F
    near = np.abs(sol.locations) < 40
    est = line_atom_weight(classl_F(ATOM), sol.locations[near])
    assert np.max(np.abs(est - sol.weights[near])) < 1e-6


def test_one_root_per_pole_interval():
    sol = class_l.solve_atoms_detailed(ATOM, 20)
    x = np.sort(sol.locations)
    k = np.floor(x / TWO_PI)
    assert len(np.unique(k)) == len(k) == 40


def test_root_set_is_antisymmetric_for_symmetric_sigma():
    # sigma = delta at angle 0 and beta = 0: x -> -x maps x = cot(x/2) to itself
    x = np.sort(class_l.solve_atoms_detailed(ATOM, 30).locations)
    assert np.max(np.abs(x + x[::-1])) < 1e-9


def test_tail_mass_consistent_with_window():
    for K in (50, 200):
        sol = class_l.solve_atoms_detailed(ATOM, K)
        assert 1 - sol.weights.sum() == pytest.approx(sol.tail_mass_bound, rel=0.2)


def test_solver_rejects_bad_input():
    with pytest.raises(ValueError):
        class_l.solve_atoms(ClassLDescriptor(0.0, CircleMeasure.haar()), 10)
    with pytest.raises(WindowTooSmallError):
        class_l.solve_atoms(ClassLDescriptor(0.0, CircleMeasure([0.0], [30.0])), 1)


def test_density_examples():
    g = np.linspace(-20 * math.pi, 20 * math.pi, 8001)
    zi = ClassLDescriptor(0.0, CircleMeasure(c0=1.0, cn=[0.5j]))
    p = class_l.classl_density(zi, g)
    exact = (1 + np.sin(g)) / (g ** 2 + 2 * g * np.cos(g) + 2 + 2 * np.sin(g)) / math.pi
    assert np.max(np.abs(p.density - exact)) < 1e-8
    assert class_l.count_local_maxima(p.density) >= 2
    t = 0.7
    p = class_l.classl_density(ClassLDescriptor(0.0, CircleMeasure.haar(t)), g)
    assert np.max(np.abs(p.density - t / (math.pi * (g ** 2 + t * t)))) < 1e-14


def test_density_warns_about_atoms():
    d = ClassLDescriptor(0.0, CircleMeasure([1.0], [0.3], 0.5))
    with pytest.warns(RuntimeWarning, match="atomic-part-present"):
        class_l.classl_density(d, np.linspace(-5, 5, 11))


def test_branch_and_shift():
    d = gen_random_descriptor(5)
    assert class_l.branch_index(ClassLDescriptor(0.0, d.sigma)) == 0
    s = class_l.shift(d, 1)
    assert s.beta == d.beta - TWO_PI and s.branch == d.branch + 1
    assert class_l.shift(class_l.shift(d, 1), -1).beta == d.beta
    from freewrap.wrapping import wrap_descriptor
    assert abs(wrap_descriptor(s).gamma - wrap_descriptor(d).gamma) < 1e-15


def test_descriptor_json(tmp_path):
    d = gen_random_descriptor(9)
    (tmp_path / "d.json").write_text(__import__("json").dumps(d.to_json()))
    e = ClassLDescriptor.load(tmp_path / "d.json")
    assert e.beta == d.beta and e.sigma.allclose(d.sigma, 0.0)
    with pytest.raises(ValueError):
        ClassLDescriptor(float("nan"), CircleMeasure())
