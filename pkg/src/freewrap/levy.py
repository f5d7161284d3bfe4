"""Levy-Khinchin builders for infinitely divisible laws on the line and the
circle, the Bercovici-Pata pair map between them, monotone ODE flows and
the Loewner-type residual of the multiplicative Belinschi-Nica flow.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .class_l import ClassLDescriptor, classl_F
from .convolutions import FixedPointStats, _disk, _upper, belinschi_nica, continued_fixed_point, fixed_point
from .exceptions import InconsistentBetaError, LeftDomainError
from .measures import TWO_PI, CircleMeasure, FiniteAtomicMeasure, RealAtomicMeasure
from .transforms import TransformHandle, extrapolate_to_zero
from .wrapping import BooleanIDDescriptor, eta_handle

ODE_STEP = 1e-3
MAX_HALVINGS = 20
FOURIER_MODES = 256


@dataclass(frozen=True, eq=False)
class CanonicalPairR:
    """``(alpha, tau)`` with ``tau`` finitely supported (weights need not sum to 1)."""

    alpha: float
    tau: RealAtomicMeasure

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))

    @classmethod
    def from_atoms(cls, alpha, xs=(), ms=()):
        return cls(alpha, _finite_measure(xs, ms))

    def to_json(self) -> dict:
        return {"alpha": self.alpha,
                "tau": {"atoms": [{"x": float(x), "w": float(w)}
                                  for x, w in zip(self.tau.xs, self.tau.ws)]}}

    @classmethod
    def from_json(cls, obj: dict) -> "CanonicalPairR":
        atoms = obj.get("tau", {}).get("atoms", [])
        return cls.from_atoms(obj.get("alpha", 0.0), [a["x"] for a in atoms],
                              [a["w"] for a in atoms])

    @classmethod
    def load(cls, path) -> "CanonicalPairR":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _finite_measure(xs, ms) -> FiniteAtomicMeasure:
    return FiniteAtomicMeasure(xs, ms)


def _kernel_sum(tau, z, sign=1.0):
    """``sum m (1 + x z)/(x - z)`` (``sign=1``) and its ``z``-derivative."""
    z = np.asarray(z, dtype=complex)
    xs, ms = tau.xs, tau.ws
    d = xs - z[..., None]
    val = np.sum(ms * (1 + xs * z[..., None]) / d, axis=-1)
    der = np.sum(ms * (1 + xs ** 2) / d ** 2, axis=-1)
    return sign * val, sign * der


# -- additive ------------------------------------------------------------------------

def boolean_generator(pair: CanonicalPairR):
    """``B(z) = sum m (1 + xz)/(x - z)``; ``F = z - alpha + B`` for the Boolean law."""
    return lambda z: _kernel_sum(pair.tau, z)


def rk4_flow(field, dfield, z0, t_end: float, step: float, in_domain, kind: str):
    """Integrate ``dw/dt = field(w)`` from ``w(0) = z0`` to ``t_end`` with RK4.

    Steps leaving the domain are retried with half the step, at most
    ``MAX_HALVINGS`` times.  Also propagates ``dw/dz`` through the
    variational equation ``d(w_z)/dt = field'(w) w_z``.
    """
    w = np.array(z0, dtype=complex)
    dz = np.ones_like(w)
    t = 0.0
    h = step
    while t < t_end - 1e-15:
        h = min(h, t_end - t)
        for _ in range(MAX_HALVINGS + 1):
            k1 = field(w)
            j1 = dfield(w) * dz
            w2 = w + 0.5 * h * k1
            k2 = field(w2)
            j2 = dfield(w2) * (dz + 0.5 * h * j1)
            w3 = w + 0.5 * h * k2
            k3 = field(w3)
            j3 = dfield(w3) * (dz + 0.5 * h * j2)
            w4 = w + h * k3
            k4 = field(w4)
            j4 = dfield(w4) * (dz + h * j3)
            new = w + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if np.all(in_domain(np.stack([w2, w3, w4, new]))) and np.all(np.isfinite(new)):
                break
            h *= 0.5
        else:
            raise LeftDomainError()
        dz = dz + h / 6 * (j1 + 2 * j2 + 2 * j3 + j4)
        w = new
        t += h
        h = step
    return w, dz


def build_additive_id(kind: str, pair: CanonicalPairR, t: float = 1.0, step: float = ODE_STEP):
    """Infinitely divisible law on the line with canonical pair ``(alpha, tau)``.

    Returns an ``F``-handle for ``boolean``, ``free`` and ``monotone`` and a
    characteristic-function callable ``u -> E exp(iuX)`` for ``classical``.
    ``t`` is the semigroup time (the law itself at ``t = 1``).
    """
    a, tau = pair.alpha, pair.tau
    if kind == "boolean":
        def F(z):
            return z - t * a + t * _kernel_sum(tau, z)[0]

        def dF(z):
            return 1 + t * _kernel_sum(tau, z)[1]

        return TransformHandle("F", F, dF, provenance="closed-form")
    if kind == "free":
        stats = FixedPointStats()

        def phi(w):
            v, d = _kernel_sum(tau, w, -1.0)
            return t * (a + v), t * d

        def F(z):
            z = np.asarray(z, dtype=complex)

            def make_T(zf):
                def T(w, idx):
                    v, d = phi(w)
                    return zf[idx] - v, -d
                return T

            def seed(zz):
                s0 = zz - phi(zz)[0]
                return np.where(s0.imag > zz.imag, s0, zz)

            return continued_fixed_point(make_T, z, seed, stats)

        def dF(z):
            return 1 / (1 + phi(F(z))[1])

        return TransformHandle("F", F, dF, provenance="fixed-point", meta={"stats": stats})
    if kind == "monotone":
        def Phi(w):
            return -a + _kernel_sum(tau, w)[0]

        def dPhi(w):
            return _kernel_sum(tau, w)[1]

        def F(z):
            return rk4_flow(Phi, dPhi, np.asarray(z, dtype=complex), t, step, _upper, "F")[0]

        def dF(z):
            return rk4_flow(Phi, dPhi, np.asarray(z, dtype=complex), t, step, _upper, "F")[1]

        return TransformHandle("F", F, dF, provenance="ode")
    if kind == "classical":
        return classical_char_function(pair, t)
    raise ValueError(f"unknown kind {kind!r}")


def classical_char_function(pair: CanonicalPairR, t: float = 1.0):
    """``u -> exp(t (i alpha u + int (e^{iux} - 1 - iux/(1+x^2)) (1+x^2)/x^2 dtau))``.

    An atom of ``tau`` at 0 contributes the Gaussian term ``-u^2/2``.
    """
    xs, ms = pair.tau.xs, pair.tau.ws

    def chf(u):
        u = np.asarray(u, dtype=float)[..., None]
        nz = xs != 0
        x = np.where(nz, xs, 1.0)
        term = np.where(nz, (np.exp(1j * u * x) - 1 - 1j * u * x / (1 + x * x)) * (1 + x * x) / (x * x),
                        -0.5 * u * u)
        return np.exp(t * (1j * pair.alpha * u[..., 0] + np.sum(ms * term, axis=-1)))

    return chf


# -- multiplicative ----------------------------------------------------------------------

def _gamma_beta(pair):
    """Accept ``(gamma, sigma)`` or ``(beta, sigma)`` given as a real drift."""
    g, sigma = pair
    if isinstance(g, (complex, np.complexfloating)):
        g = complex(g)
        return g, -math.atan2(g.imag, g.real), sigma
    beta = float(g)
    return complex(math.cos(beta), -math.sin(beta)), beta, sigma


def classical_mult_coefficients(gamma: complex, sigma: CircleMeasure, ps):
    """``F(p) = gamma^p exp(int (zeta^p - 1 - i p Im zeta)/(1 - Re zeta) dsigma)``.

    An atom at ``zeta = 1`` contributes ``-p^2`` times its mass; the density
    part is integrated by the periodic trapezoid rule, which is exact here
    because the integrand is a trigonometric polynomial.
    """
    ps = np.atleast_1d(np.asarray(ps, dtype=int))
    out = np.empty(ps.shape, dtype=complex)
    arg = math.atan2(gamma.imag, gamma.real)
    for i, p in enumerate(ps):
        total = 0j
        for th, m in zip(sigma.thetas, sigma.masses):
            if th == 0.0:
                total += -p * p * m
            else:
                z = np.exp(1j * th)
                total += m * (z ** p - 1 - 1j * p * z.imag) / (1 - z.real)
        if not sigma.is_atomic:
            n = 4 * (abs(int(p)) + sigma.degree) + 64
            th = TWO_PI * np.arange(1, n) / n
            z = np.exp(1j * th)
            g = (z ** p - 1 - 1j * p * z.imag) / (1 - z.real)
            vals = np.concatenate([[-float(p) ** 2 * sigma.density(0.0)], g * sigma.density(th)])
            total += np.mean(vals)
        out[i] = np.exp(1j * p * arg) * np.exp(total)
    return out


def build_mult_id(kind: str, pair, t: float = 1.0, step: float = ODE_STEP, modes: int = FOURIER_MODES):
    """Infinitely divisible law on the circle with pair ``(gamma, sigma)``.

    ``pair[0]`` may be a unit complex ``gamma`` or a real drift ``beta`` with
    ``gamma = exp(-i beta)``.  Returns an ``eta``-handle for ``boolean``,
    ``free`` and ``monotone`` and, for ``classical``, a callable ``p -> F(p)``
    giving Fourier coefficients ``int zeta^p dnu``.  With ``sigma = 0`` every
    kind yields the point mass at ``gamma``.
    """
    gamma, beta, sigma = _gamma_beta(pair)
    if kind == "boolean":
        if t != 1.0:
            sigma = CircleMeasure(sigma.thetas, t * sigma.masses, t * sigma.c0, t * sigma.cn)
            gamma = complex(math.cos(t * beta), -math.sin(t * beta))
        return eta_handle(BooleanIDDescriptor(gamma, sigma))
    if kind == "free":
        stats = FixedPointStats()
        g = complex(math.cos(t * beta), -math.sin(t * beta))

        def H(w):
            return t * sigma.herglotz(w), t * sigma.herglotz_derivative(w)

        def eta(z):
            # eta(z) solves w Sigma(w) = z with Sigma = conj(gamma) exp(H)
            z = np.asarray(z, dtype=complex)
            zf = z.reshape(-1)

            def T(w, idx):
                h, dh = H(w)
                v = g * zf[idx] * np.exp(-h)
                return v, -v * dh

            return fixed_point(T, g * math.exp(-t * sigma.total_mass()) * z, _disk, stats=stats)[0]

        def deta(z):
            z = np.asarray(z, dtype=complex)
            w = eta(z)
            d0 = g * math.exp(-t * sigma.total_mass())
            safe = np.where(z == 0, 1, z)
            return np.where(z == 0, d0, (w / safe) / (1 + w * H(w)[1]))

        return TransformHandle("eta", eta, deta, vanishes_only_at_zero=True,
                               provenance="fixed-point", meta={"stats": stats})
    if kind == "monotone":
        def A(w):
            return w * (-1j * beta - sigma.herglotz(w))

        def dA(w):
            return -1j * beta - sigma.herglotz(w) - w * sigma.herglotz_derivative(w)

        def eta(z):
            return rk4_flow(A, dA, np.asarray(z, dtype=complex), t, step, _disk, "eta")[0]

        def deta(z):
            return rk4_flow(A, dA, np.asarray(z, dtype=complex), t, step, _disk, "eta")[1]

        return TransformHandle("eta", eta, deta, vanishes_only_at_zero=True, provenance="ode")
    if kind == "classical":
        g = complex(math.cos(t * beta), -math.sin(t * beta))
        s = CircleMeasure(sigma.thetas, t * sigma.masses, t * sigma.c0, t * sigma.cn)

        def coeffs(p):
            p = np.asarray(p, dtype=int)
            flat = p.reshape(-1)
            pos = classical_mult_coefficients(g, s, np.abs(flat))
            return np.where(flat >= 0, pos, np.conj(pos)).reshape(p.shape)

        coeffs.modes = modes
        return coeffs
    raise ValueError(f"unknown kind {kind!r}")


def classical_circle_density(coeffs, angles, modes: int = FOURIER_MODES):
    """Density w.r.t. ``dtheta`` from Fourier coefficients, truncated at ``|p| <= modes``.

    Returns the density and the tail bound ``sum_{|p| > modes}`` estimated
    from the last computed coefficient magnitudes.
    """
    p = np.arange(-modes, modes + 1)
    c = coeffs(p)
    th = np.asarray(angles, dtype=float)
    dens = np.real(np.exp(-1j * np.outer(th, p)) @ c) / TWO_PI
    tail = float(2 * np.abs(c[-1]) / TWO_PI)
    return dens, tail


def monotone_mult_generator(beta: float, sigma: CircleMeasure):
    """``A(z) = z (-i beta - H_sigma(z))``; the line generator is ``-i A(e^{iz})``-shaped."""
    return lambda w: w * (-1j * beta - sigma.herglotz(w))


def additive_generator_from_circle(beta: float, sigma: CircleMeasure):
    """``Phi(z) = -i A(e^{iz})/e^{iz} = -beta + i H(e^{iz})``; 2pi-periodic by construction."""
    return lambda z: -beta + 1j * sigma.herglotz(np.exp(1j * np.asarray(z, dtype=complex)))


# -- Bercovici-Pata pair map ----------------------------------------------------------------

def bp_pair_map(pair: CanonicalPairR):
    """``(alpha, tau) -> (gamma, sigma)`` by the wrapping relations for Levy data.

    An atom ``x != 0`` of mass ``m`` becomes mass ``(1 - cos x)(x^2+1)/x^2 m``
    at ``exp(-ix)``; ``tau({0})/2`` goes to ``zeta = 1``.  Atoms landing on
    the same angle are summed.  Zero masses (``x`` a nonzero multiple of
    ``2 pi``) are dropped.
    """
    acc: dict[float, float] = {}
    phase = -pair.alpha
    for x, m in zip(pair.tau.xs, pair.tau.ws):
        if x == 0:
            acc[0.0] = acc.get(0.0, 0.0) + 0.5 * m
            continue
        k = (1 + x * x) / (x * x)
        mass = (1 - math.cos(x)) * k * m
        phase -= (math.sin(x) - x / (1 + x * x)) * k * m
        if mass <= 0:
            continue
        ang = math.fmod(-x, TWO_PI)
        if ang < 0:
            ang += TWO_PI
        key = next((a for a in acc if abs(a - ang) < 1e-14), ang)
        acc[key] = acc.get(key, 0.0) + mass
    gamma = complex(math.cos(phase), math.sin(phase))
    return gamma, CircleMeasure(list(acc), list(acc.values()))


def sigma_tau_residual(pair: CanonicalPairR, z) -> np.ndarray:
    """``|exp(-i alpha) exp(i B(z)) - gamma exp(-H_sigma(e^{iz}))|`` at the samples."""
    gamma, sigma = bp_pair_map(pair)
    z = np.asarray(z, dtype=complex)
    lhs = np.exp(-1j * pair.alpha) * np.exp(1j * _kernel_sum(pair.tau, z)[0])
    rhs = gamma * np.exp(-sigma.herglotz(np.exp(1j * z)))
    return np.abs(lhs - rhs)


def bp_beta(pair: CanonicalPairR, tol: float = 1e-8) -> float:
    """Drift ``beta`` solving ``alpha - B(z) + i H(e^{iz}) = beta`` for the monotone pair.

    Solved at ``z = 10i`` and checked at ``z = 3 + 5i``.

    Raises
    ------
    InconsistentBetaError
        If the two values differ by more than ``tol`` (the relation then has
        no constant solution).
    """
    _, sigma = bp_pair_map(pair)

    def solve(z):
        z = np.asarray(z, dtype=complex)
        return pair.alpha - _kernel_sum(pair.tau, z)[0] + 1j * sigma.herglotz(np.exp(1j * z))

    b1, b2 = complex(solve(10j)), complex(solve(3 + 5j))
    if abs(b1 - b2) > tol or abs(b1.imag) > tol:
        raise InconsistentBetaError(f"beta at 10i is {b1}, at 3+5i is {b2}")
    return b1.real


def free_gaussian_preimage_check(n: int = 0, ks=range(-3, 4), y_ladder=(1e-2, 1e-3, 1e-4)):
    """Levy measure of the line preimages of the multiplicative free Gaussian.

    ``phi(z) = -(i/2)(1 + e^{iz})/(1 - e^{iz}) + 2 pi n``; ``tau({x})`` is read
    off as ``lim_{y -> 0} iy phi(x + iy) / (1 + x^2)`` at ``x = 2 pi k``.
    """
    ks = np.asarray(list(ks))
    xs = TWO_PI * ks

    def phi(z):
        w = np.exp(1j * z)
        return -0.5j * (1 + w) / (1 - w) + TWO_PI * n

    ys = np.asarray(y_ladder, dtype=float)
    vals = [np.real(1j * y * phi(xs + 1j * y)) for y in ys]
    w = np.real(extrapolate_to_zero(ys, vals)) / (1 + xs ** 2)
    return _finite_measure(xs, w)


# -- Loewner / Burgers ------------------------------------------------------------------

def loewner_residual(b: BooleanIDDescriptor, t: float, z, h: float = 1e-3, branch: int = 0):
    """``|df/dt - z log f df/dz|`` for ``f(t, z) = eta_{M_t(b)}(z)/z`` by central differences.

    ``log f`` is ``i (F_t(w) - w)`` on the line, with ``w = -i log z``, which
    is continuous in ``z`` and equals ``log eta'(0)`` (branch ``branch``) at 0.
    """
    z = np.asarray(z, dtype=complex)

    def f(s, zz):
        return belinschi_nica(b, s, branch).handle(zz) / zz

    def logf(s, zz):
        F = belinschi_nica(b, s, branch).handle.line
        w = -1j * np.log(zz)
        return 1j * (F(w) - w)

    ft = (f(t + h, z) - f(t - h, z)) / (2 * h)
    fz = (f(t, z + h) - f(t, z - h)) / (2 * h)
    return np.abs(ft - z * logf(t, z) * fz)
