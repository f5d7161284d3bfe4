import json
import math

import numpy as np
import pytest

from freewrap import levy
from freewrap.exceptions import InconsistentBetaError
from freewrap.measures import TWO_PI, CircleMeasure
from freewrap.transforms import sigma_eval
from freewrap.wrapping import BooleanIDDescriptor, eta_handle

from conftest import disk_samples, upper_samples


def pair(alpha=0.0, xs=(), ms=()):
    return levy.CanonicalPairR.from_atoms(alpha, xs, ms)


@pytest.mark.parametrize("kind", ["boolean", "free", "monotone"])
def test_zero_tau_gives_point_mass(kind, rng):
    z = upper_samples(rng, 10, 0.5)
    assert np.allclose(levy.build_additive_id(kind, pair(0.6))(z), z - 0.6, atol=1e-10)


def test_boolean_gaussian_pair(rng):
    z = upper_samples(rng, 10, 0.5)
    assert np.allclose(levy.build_additive_id("boolean", pair(0, [0], [0.7]))(z), z - 0.7 / z, atol=1e-14)


def test_free_semicircle_transform(rng):
    # tau = t delta_0: F solves F + t/F = z, i.e. F = (z + sqrt(z^2 - 4t))/2
    z = upper_samples(rng, 20, 0.2)
    F = levy.build_additive_id("free", pair(0, [0], [1.0]))
    exact = 0.5 * (z + np.sqrt(z - 2) * np.sqrt(z + 2))
    assert np.max(np.abs(F(z) - exact)) < 1e-10


def test_free_builder_near_the_axis():
    F = levy.build_additive_id("free", pair(0.2, [0, 1], [0.5, 0.25]))
    z = np.linspace(-5, 5, 101) + 1e-5j
    w = F(z)
    assert np.all(w.imag > 0)
    v, _ = levy._kernel_sum(levy._finite_measure([0, 1], [0.5, 0.25]), w, -1.0)
    assert np.max(np.abs(w + 0.2 + v - z)) < 1e-9


def test_monotone_additive_flow_matches_boolean_for_gaussian(rng):
    # with tau = delta_0 the monotone flow F' = -1/F has F_t(z) = sqrt(z^2 - 2t)
    z = upper_samples(rng, 10, 0.5)
    F = levy.build_additive_id("monotone", pair(0, [0], [1.0]))
    assert np.max(np.abs(F(z) - np.sqrt(z - math.sqrt(2)) * np.sqrt(z + math.sqrt(2)))) < 1e-8


def test_classical_characteristic_function():
    chf = levy.build_additive_id("classical", pair(0.3, [0], [1.0]))
    u = np.linspace(-3, 3, 7)
    assert np.allclose(chf(u), np.exp(0.3j * u - u ** 2 / 2), atol=1e-14)


@pytest.mark.parametrize("kind", ["boolean", "free", "monotone"])
def test_zero_sigma_gives_rotation(kind, rng):
    g = np.exp(0.9j)
    w = disk_samples(rng, 10)
    assert np.allclose(levy.build_mult_id(kind, (g, CircleMeasure()))(w), g * w, atol=1e-10)


def test_classical_zero_sigma():
    g = np.exp(0.9j)
    co = levy.build_mult_id("classical", (g, CircleMeasure()))
    p = np.arange(-3, 4)
    assert np.allclose(co(p), g ** p, atol=1e-14)


@pytest.mark.parametrize("h", [0.5, 1.0])
@pytest.mark.parametrize("beta", [0.0, 0.7])
def test_monotone_flow_with_haar_sigma(h, beta, rng):
    w = disk_samples(rng, 20, 0.9)
    eta = levy.build_mult_id("monotone", (beta, CircleMeasure.haar(h)))
    assert np.max(np.abs(eta(w) - np.exp(-(1j * beta + h)) * w)) < 1e-8


def test_monotone_semigroup(rng):
    s = CircleMeasure([1.0], [0.4], 0.3)
    w = disk_samples(rng, 10, 0.9)
    e3 = levy.build_mult_id("monotone", (0.2, s), t=0.3)
    e7 = levy.build_mult_id("monotone", (0.2, s), t=0.7)
    e1 = levy.build_mult_id("monotone", (0.2, s), t=1.0)
    assert np.max(np.abs(e3(e7(w)) - e1(w))) < 1e-7


def test_free_gaussian_sigma_transform():
    eta = levy.build_mult_id("free", (1.0 + 0j, CircleMeasure([0.0], [0.5])))
    z = np.array([0.05, 0.03j, -0.02 + 0.01j])
    assert np.allclose(sigma_eval(eta, z), np.exp(0.5 * (1 + z) / (1 - z)), atol=1e-12)


def test_bp_map_examples():
    g, s = levy.bp_pair_map(pair(0, [0], [1.0]))
    assert g == 1 and s.allclose(CircleMeasure([0.0], [0.5]), 0.0)
    g, s = levy.bp_pair_map(pair(0.4))
    assert g == pytest.approx(np.exp(-0.4j)) and s.total_mass() == 0
    g, s = levy.bp_pair_map(pair(0, [math.pi], [1.0]))
    assert s.thetas[0] == pytest.approx(math.pi)
    assert s.masses[0] == pytest.approx(2 * (math.pi ** 2 + 1) / math.pi ** 2, abs=1e-14)


def test_bp_map_drops_multiples_of_two_pi():
    g, s = levy.bp_pair_map(pair(0, [0, TWO_PI], [0.5, 0.5]))
    assert s.n_atoms == 1 and s.masses[0] == pytest.approx(0.25)


def test_bp_beta_is_inconsistent_for_finite_tau():
    assert levy.bp_beta(pair(0.3)) == pytest.approx(0.3)
    with pytest.raises(InconsistentBetaError):
        levy.bp_beta(pair(0, [0], [1.0]))


def test_classical_coefficients_match_wrapped_char_function():
    for xs, ms in (((0.0,), (1.0,)), ((0.0, 1.0), (0.5, 0.25)), ((math.pi,), (1.0,))):
        p = pair(0.0, xs, ms)
        g, s = levy.bp_pair_map(p)
        k = np.arange(-32, 33)
        chf = levy.build_additive_id("classical", p)
        co = levy.build_mult_id("classical", (g, s))
        assert np.max(np.abs(chf(-k) - co(k))) < 1e-8


def test_classical_circle_density_is_a_probability():
    co = levy.build_mult_id("classical", (1.0 + 0j, CircleMeasure([0.0], [0.5])))
    th = np.arange(1024) * TWO_PI / 1024
    dens, tail = levy.classical_circle_density(co, th)
    assert np.mean(dens) * TWO_PI == pytest.approx(1.0, abs=1e-12)
    assert tail < 1e-10


def test_generator_periodicity(rng):
    Phi = levy.additive_generator_from_circle(0.3, CircleMeasure([1.0], [0.5], 0.2))
    z = upper_samples(rng, 20)
    assert np.max(np.abs(Phi(z + TWO_PI) - Phi(z))) < 1e-12


def test_free_gaussian_preimage_weights():
    tau = levy.free_gaussian_preimage_check(0)
    assert np.max(np.abs(tau.ws - 1 / (1 + tau.xs ** 2))) < 1e-4
    w = dict(zip(np.round(tau.xs / TWO_PI).astype(int), tau.ws))
    assert w[0] == pytest.approx(1.0, abs=1e-4)
    # 1/(1 + 4 pi^2) = 0.0247045...
    assert w[1] == pytest.approx(1 / (1 + 4 * math.pi ** 2), abs=1e-12)
    assert w[-1] == pytest.approx(w[1], abs=1e-14)


def test_loewner_residual():
    z = np.array([0.3 + 0.2j, -0.4j, 0.5])
    cauchy = BooleanIDDescriptor(1.0, CircleMeasure.haar(1.0))
    assert np.max(levy.loewner_residual(cauchy, 0.5, z)) < 1e-8
    atom = BooleanIDDescriptor(1.0, CircleMeasure([0.0], [1.0]))
    r1 = levy.loewner_residual(atom, 0.5, z, 4e-3)
    r2 = levy.loewner_residual(atom, 0.5, z, 2e-3)
    assert np.all(r1 / r2 == pytest.approx(4.0, rel=0.05))


def test_flow_at_time_zero_is_the_identity(rng):
    from freewrap.convolutions import belinschi_nica
    b = BooleanIDDescriptor(np.exp(0.2j), CircleMeasure([0.0], [1.0]))
    w = disk_samples(rng, 10, 0.8)
    assert np.allclose(belinschi_nica(b, 0.0)(w), eta_handle(b)(w), atol=1e-12)


def test_pair_json(tmp_path):
    p = pair(0.1, [0, 1], [0.5, 2.0])
    (tmp_path / "p.json").write_text(json.dumps(p.to_json()))
    q = levy.CanonicalPairR.load(tmp_path / "p.json")
    assert q.alpha == 0.1 and np.array_equal(q.tau.ws, p.tau.ws)


def test_unknown_kind():
    with pytest.raises(ValueError):
        levy.build_mult_id("cubic", (1.0 + 0j, CircleMeasure()))
