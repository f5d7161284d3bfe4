"""The clockwise wrapping map ``x -> exp(-ix)`` from the line to the circle.

On descriptors the map is exact: ``(beta, sigma) -> (exp(-i beta), sigma)``.
On sampled profiles it is the direct sum over 2pi-translates, with a
rational tail model for the translates outside the summation window.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import zeta

from .class_l import ClassLDescriptor, solve_atoms_detailed
from .exceptions import InsufficientMassError
from .measures import TWO_PI, CircleMeasure, MeasureProfile
from .transforms import TransformHandle, circle_atom_weight

UNIT_TOL = 1e-12
LOG_ZERO_HEIGHT = 40.0


@dataclass(frozen=True, eq=False)
class BooleanIDDescriptor:
    """``eta(z) = gamma z exp(-H_sigma(z))`` with ``|gamma| = 1``."""

    gamma: complex
    sigma: CircleMeasure

    def __post_init__(self):
        g = complex(self.gamma)
        if abs(abs(g) - 1) > UNIT_TOL:
            raise ValueError("gamma must have unit modulus")
        object.__setattr__(self, "gamma", g)

    @classmethod
    def from_angle(cls, angle: float, sigma: CircleMeasure) -> "BooleanIDDescriptor":
        return cls(complex(math.cos(angle), math.sin(angle)), sigma)

    def eta_prime0(self) -> complex:
        return self.gamma * math.exp(-self.sigma.total_mass())

    def to_json(self) -> dict:
        return {"gamma": [self.gamma.real, self.gamma.imag], "sigma": self.sigma.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "BooleanIDDescriptor":
        sigma = CircleMeasure.from_json(obj.get("sigma", {}))
        if "gamma_angle" in obj:
            return cls.from_angle(obj["gamma_angle"], sigma)
        re, im = obj["gamma"]
        return cls(complex(re, im) / abs(complex(re, im)), sigma)

    @classmethod
    def load(cls, path) -> "BooleanIDDescriptor":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def __repr__(self):
        return f"BooleanIDDescriptor(gamma={self.gamma}, sigma={self.sigma!r})"


def eta_handle(b: BooleanIDDescriptor) -> TransformHandle:
    s, g = b.sigma, b.gamma

    def eta(z):
        return g * z * np.exp(-s.herglotz(z))

    def deta(z):
        return g * np.exp(-s.herglotz(z)) * (1 - z * s.herglotz_derivative(z))

    return TransformHandle("eta", eta, deta, vanishes_only_at_zero=True,
                           provenance="closed-form", meta={"descriptor": b})


def wrap_descriptor(d: ClassLDescriptor) -> BooleanIDDescriptor:
    return BooleanIDDescriptor(complex(math.cos(d.beta), -math.sin(d.beta)), d.sigma)


def unwrap_descriptor(b: BooleanIDDescriptor, n: int = 0) -> ClassLDescriptor:
    """Preimage ``beta = -Arg(gamma) + 2 pi n`` with ``Arg`` in ``(-pi, pi]``."""
    arg = math.atan2(b.gamma.imag, b.gamma.real)
    if arg == -math.pi:
        arg = math.pi
    return ClassLDescriptor(-arg + TWO_PI * n, b.sigma)


# -- handle-level wrapping ----------------------------------------------------------

def wrap_handle(F: TransformHandle) -> TransformHandle:
    """``eta(w) = exp(i F(-i log w))`` for a 2pi-equivariant ``F``.

    The line handle is kept on the result so that :func:`unwrap_handle` is exact.
    """
    if F.kind != "F":
        raise ValueError("wrap_handle expects an F-handle")
    y = LOG_ZERO_HEIGHT
    d0 = complex(np.exp(1j * (F(np.array(1j * y)) - 1j * y)))

    def eta(w):
        w = np.asarray(w, dtype=complex)
        out = np.zeros(w.shape, dtype=complex)
        nz = w != 0
        z = -1j * np.log(w[nz])
        out[nz] = np.exp(1j * F(z))
        return out

    def deta(w):
        w = np.asarray(w, dtype=complex)
        out = np.full(w.shape, d0, dtype=complex)
        nz = w != 0
        z = -1j * np.log(w[nz])
        out[nz] = np.exp(1j * F(z)) * F.derivative(z) / w[nz]
        return out

    return TransformHandle("eta", eta, deta, vanishes_only_at_zero=True,
                           provenance=F.provenance, line=F)


def _log_ratio_along_ray(eta, w, n=64):
    """Continuous ``log(eta(w)/w)`` obtained by unwrapping the phase along ``[0, w]``."""
    w = np.asarray(w, dtype=complex)
    t = np.linspace(0, 1, n + 1)[1:]
    pts = w[..., None] * t
    h0 = complex(eta.derivative(np.array(0j)))
    ratio = eta(pts) / np.where(pts == 0, 1, pts)
    ratio = np.where(pts == 0, h0, ratio)
    phase = np.unwrap(np.concatenate([np.full(w.shape + (1,), np.angle(h0)), np.angle(ratio)],
                                     axis=-1), axis=-1)
    return np.log(np.abs(ratio[..., -1])) + 1j * phase[..., -1]


def unwrap_handle(eta: TransformHandle, n: int = 0) -> TransformHandle:
    """``F`` with ``exp(iF(z)) = eta(exp(iz))`` on the unwrap branch ``n``.

    Uses the stored line handle when ``eta`` came from :func:`wrap_handle`;
    otherwise ``F(z) = z - i log(eta(w)/w)`` with the logarithm continued
    from ``w = 0`` along a ray.
    """
    if eta.kind != "eta":
        raise ValueError("unwrap_handle expects an eta-handle")
    arg0 = float(np.angle(eta.derivative(np.array(0j))))
    if eta.line is not None:
        L = eta.line
        y = LOG_ZERO_HEIGHT
        c = float(np.real(L(np.array(1j * y)) - 1j * y))
        m = int(round((c - arg0) / TWO_PI)) + n
        if m == 0:
            return L
        shift = TWO_PI * m
        return TransformHandle("F", lambda z: L(z) - shift, L.deriv, periodic_shift=L.periodic_shift,
                               provenance=L.provenance, meta=L.meta)
    shift = TWO_PI * n

    def F(z):
        z = np.asarray(z, dtype=complex)
        return z - 1j * _log_ratio_along_ray(eta, np.exp(1j * z)) - shift

    return TransformHandle("F", F, None, periodic_shift=True, provenance="composed")


# -- direct wrapping of profiles -------------------------------------------------------

def _hurwitz_tail(x0, M, c2, c3, side):
    """``sum_{m > M} c2/x**2 + c3/x**3`` over ``x = x0 + side * 2 pi m``."""
    q = M + 1 + side * x0 / TWO_PI
    return c2 * zeta(2, q) / TWO_PI ** 2 + side * c3 * zeta(3, q) / TWO_PI ** 3


def wrap_direct(profile: MeasureProfile, angle_grid, M: int = 64,
                min_mass: float = 0.99) -> MeasureProfile:
    """Wrap a line profile onto the circle by summing 2pi-translates.

    The circle density at angle ``theta`` (w.r.t. ``dtheta``) is
    ``sum_{|m| <= M} p(-theta + 2 pi m)`` plus, on each side, a tail fitted as
    ``c2/x**2 + c3/x**3`` through the two outermost translates and summed
    exactly with Hurwitz zeta functions.  Samples are looked up exactly when
    the line grid contains the translate and interpolated otherwise;
    translates beyond the line grid are covered by the tail model, which is
    skipped on a side where the profile is zero at the end of its grid.

    Raises
    ------
    InsufficientMassError
        If the line profile accounts for less than ``min_mass``.
    """
    if profile.domain != "line":
        raise ValueError("wrap_direct expects a line profile")
    if profile.captured_mass < min_mass:
        raise InsufficientMassError()
    theta = np.asarray(angle_grid, dtype=float)
    xg, dg = profile.abscissa, profile.density
    spline = CubicSpline(xg, dg) if len(xg) >= 4 else None
    x0 = -theta
    lo, hi = xg[0], xg[-1]

    def sample(x):
        idx = np.clip(np.searchsorted(xg, x), 0, len(xg) - 1)
        exact = np.abs(xg[idx] - x) <= 1e-12 * np.maximum(1, np.abs(x))
        out = np.zeros_like(x)
        out[exact] = dg[idx[exact]]
        rest = ~exact & (x >= lo) & (x <= hi)
        if rest.any() and spline is not None:
            out[rest] = np.clip(spline(x[rest]), 0, None)
        return out

    dens = np.zeros_like(theta)
    tail_mass = 0.0
    # m ranges over translates that stay inside the line grid for every angle
    m_hi = min(M, int(math.floor((hi + theta.min()) / TWO_PI)) if len(theta) else 0)
    m_lo = min(M, int(math.floor((-lo - theta.max()) / TWO_PI)) + 0 if len(theta) else 0)
    m_hi, m_lo = max(m_hi, 0), max(m_lo, 0)
    for m in range(-m_lo, m_hi + 1):
        dens += sample(x0 + TWO_PI * m)
    for side, mm in ((1, m_hi), (-1, m_lo)):
        # a profile that vanishes at the grid end is taken to be supported inside it
        if mm < 2 or dg[-1 if side > 0 else 0] == 0:
            continue
        xa, xb = x0 + side * TWO_PI * mm, x0 + side * TWO_PI * (mm - 1)
        pa, pb = sample(xa), sample(xb)
        # solve p = c2/x**2 + c3/x**3 at the two outermost translates
        det = xa ** -2 * xb ** -3 - xb ** -2 * xa ** -3
        c2 = (pa * xb ** -3 - pb * xa ** -3) / det
        c3 = (xa ** -2 * pb - xb ** -2 * pa) / det
        tail = np.clip(_hurwitz_tail(x0, mm, c2, c3, side), 0, None)
        dens += tail
        if len(theta) > 1:
            tail_mass += float(np.mean(tail) * TWO_PI)
    atoms: dict[float, float] = {}
    for x, w in profile.atoms():
        ang = float(np.mod(-x, TWO_PI))
        if ang >= TWO_PI:
            ang = 0.0
        key = next((k for k in atoms if abs(k - ang) < 1e-12), ang)
        atoms[key] = atoms.get(key, 0.0) + w
    note = (f"translates m in [-{m_lo}, {m_hi}] of window M={M}; "
            f"rational tail mass ~{tail_mass:.3e}")
    return MeasureProfile.bounded("circle", list(atoms), list(atoms.values()), theta, dens, note)


def aligned_line_grid(angle_grid, M: int) -> np.ndarray:
    """Line abscissae ``-theta + 2 pi m``, ``|m| <= M``, hit exactly by :func:`wrap_direct`."""
    theta = np.asarray(angle_grid, dtype=float)
    m = np.arange(-M, M + 1)
    return np.unique((-theta[None, :] + TWO_PI * m[:, None]).ravel())


# -- atoms ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AtomPair:
    line_loc: float
    circle_angle: float
    line_weight: float
    circle_weight: float


def atom_correspondence(d: ClassLDescriptor, K: int = 200):
    """Pair every line atom ``x`` with the circle atom at ``exp(-ix)``.

    Line weights come from the atom solver, circle weights from the residue
    ``lim (1-r) eta/(1-eta)`` of the wrapped descriptor.
    """
    sol = solve_atoms_detailed(d, K)
    angles = sol.circle_angles()
    eta = eta_handle(wrap_descriptor(d))
    cw = circle_atom_weight(eta, angles)
    return [AtomPair(float(x), float(a), float(lw), float(c))
            for x, a, lw, c in zip(sol.locations, angles, sol.weights, cw)]
