"""The class of measures on the line whose ``F``-transform commutes with 2pi-translation.

Each such measure is described by a real drift ``beta`` and a finite circle
measure ``sigma`` through

    F(z) = z - beta + i * H_sigma(exp(iz)),

where ``H_sigma`` is the Herglotz integral of :class:`~freewrap.measures.CircleMeasure`.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .exceptions import WindowTooSmallError
from .measures import TWO_PI, CircleMeasure, MeasureProfile, RealAtomicMeasure
from .transforms import TransformHandle, recover_line

POLE_STANDOFF = 1e-9


@dataclass(frozen=True, eq=False)
class ClassLDescriptor:
    beta: float
    sigma: CircleMeasure

    def __post_init__(self):
        object.__setattr__(self, "beta", float(self.beta))
        if not math.isfinite(self.beta):
            raise ValueError("beta must be finite")

    @property
    def branch(self) -> int:
        return branch_index(self)

    def f(self, w):
        """Disk-side function ``f(w) = -beta + i H_sigma(w)``; ``F(z) = z + f(exp(iz))``."""
        return -self.beta + 1j * self.sigma.herglotz(w)

    def to_json(self) -> dict:
        return {"beta": self.beta, "sigma": self.sigma.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "ClassLDescriptor":
        return cls(obj["beta"], CircleMeasure.from_json(obj.get("sigma", {})))

    @classmethod
    def load(cls, path) -> "ClassLDescriptor":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def __repr__(self):
        return f"ClassLDescriptor(beta={self.beta}, sigma={self.sigma!r})"


def classl_F(d: ClassLDescriptor) -> TransformHandle:
    """Closed-form ``F`` for a descriptor, with its exact derivative."""
    s, beta = d.sigma, d.beta

    def F(z):
        return z - beta + 1j * s.herglotz(np.exp(1j * z))

    def dF(z):
        w = np.exp(1j * z)
        return 1 - w * s.herglotz_derivative(w)

    return TransformHandle("F", F, dF, periodic_shift=True, provenance="closed-form",
                           meta={"descriptor": d})


def membership_check(F: TransformHandle, samples, tol: float = 1e-8):
    """Test 2pi-equivariance and the Pick inequality on ``samples``.

    Returns
    -------
    ok : bool
    deviation : float
        ``max |F(z + 2pi) - F(z) - 2pi|`` over the samples.
    """
    z = np.asarray(samples, dtype=complex)
    fz = F(z)
    dev = float(np.max(np.abs(F(z + TWO_PI) - fz - TWO_PI)))
    pick = bool(np.all(fz.imag >= z.imag - tol * np.maximum(1, np.abs(z))))
    return (dev < tol) and pick, dev


# -- atoms -----------------------------------------------------------------------

@dataclass(frozen=True)
class AtomSolution:
    """Roots of the atom equation for a purely atomic ``sigma``.

    Each root is ``x = pole + offset`` where ``pole = -theta_j + 2 pi k`` is a
    singularity of the cotangent sum; ``residual`` is the equation residual
    computed in the offset variable, where it is free of cancellation.
    """

    poles: np.ndarray
    offsets: np.ndarray
    weights: np.ndarray
    residuals: np.ndarray
    family: np.ndarray
    k: np.ndarray
    tail_mass_bound: float
    pole_angles: np.ndarray = None

    def circle_angles(self) -> np.ndarray:
        """Angles of ``exp(-ix)`` computed without reducing the large ``x``."""
        return np.mod(-self.pole_angles - self.offsets, TWO_PI)

    @property
    def locations(self) -> np.ndarray:
        return self.poles + self.offsets

    def measure(self) -> RealAtomicMeasure:
        ws = self.weights
        if ws.sum() > 1:
            ws = ws / ws.sum()
        return RealAtomicMeasure(self.locations, ws)


def _atom_equation(d, phi_j, k, delta, owner=None):
    """``x - beta - sum a cot((theta+x)/2)`` and ``F'(x)`` at ``x = phi_j + 2 pi k + delta``.

    ``phi_j`` is a pole angle ``-theta_j mod 2 pi``.

    ``cot`` has period ``pi`` so the arguments are reduced without using ``k``;
    the term of the atom ``owner`` that owns the pole is evaluated as
    ``cot(delta/2)`` to keep full relative accuracy next to the pole.
    """
    th, a = d.sigma.thetas, d.sigma.masses
    half = 0.5 * (th + phi_j + delta)
    if owner is not None:
        half[owner] = 0.5 * delta
    g = phi_j + TWO_PI * k + delta - d.beta - np.sum(a / np.tan(half))
    dg = 1.0 + 0.5 * np.sum(a / np.sin(half) ** 2)
    return g, dg


def solve_atoms_detailed(d: ClassLDescriptor, K: int = 200) -> AtomSolution:
    """Atoms of a purely atomic class-L measure in ``2 K N`` pole intervals around 0."""
    s = d.sigma
    if s.n_atoms == 0 or not s.is_atomic:
        raise ValueError("sigma must be purely atomic with at least one atom")
    if K < 1:
        raise ValueError("K must be >= 1")
    phis = np.mod(-s.thetas, TWO_PI)
    owners = np.argsort(phis)
    phis = phis[owners]
    n = len(phis)
    gaps = np.diff(np.concatenate([phis, [phis[0] + TWO_PI]]))
    eps = 4 * np.finfo(float).eps
    poles, offs, ws, res, fam, ks, anchors = [], [], [], [], [], [], []
    for j, (phi, gap) in enumerate(zip(phis, gaps)):
        # the interval right of pole (phi, k) ends at pole (phi_next, k_next)
        jn = j + 1 if j + 1 < n else 0
        phi_next, dk = phis[jn], int(j + 1 == n)
        for k in range(-K, K):
            mid = _atom_equation(d, phi, k, 0.5 * gap, owners[j])[0]
            # offsets are measured from the nearer pole to avoid cancellation
            if mid > 0:
                anchor, kk, own, lo, hi = phi, k, owners[j], POLE_STANDOFF, 0.5 * gap
            else:
                anchor, kk, own, lo, hi = phi_next, k + dk, owners[jn], -0.5 * gap, -POLE_STANDOFF
            def g(off):
                return _atom_equation(d, anchor, kk, off, own)[0]
            off = brentq(g, lo, hi, xtol=1e-300, rtol=eps, maxiter=500)
            val, der = _atom_equation(d, anchor, kk, off, own)
            poles.append(anchor + TWO_PI * kk)
            anchors.append(anchor)
            offs.append(off)
            ws.append(1.0 / der)
            res.append(abs(val))
            fam.append(j)
            ks.append(k)
    poles, offs = np.array(poles), np.array(offs)
    order = np.argsort(poles + offs)
    m0 = s.total_mass()
    # far roots have weight ~ 2 m0 / x**2 summed over all families
    tail = m0 / (math.pi ** 2 * K)
    sol = AtomSolution(poles[order], offs[order], np.array(ws)[order], np.array(res)[order],
                       np.array(fam)[order], np.array(ks)[order], tail, np.array(anchors)[order])
    if sol.weights.sum() < 0.5:
        raise WindowTooSmallError()
    return sol


def solve_atoms(d: ClassLDescriptor, K: int = 200) -> RealAtomicMeasure:
    """Atoms of the class-L measure of ``d`` when ``sigma`` is purely atomic.

    Parameters
    ----------
    d : ClassLDescriptor
    K : int
        Number of 2pi-periods on each side of the origin.

    Raises
    ------
    WindowTooSmallError
        If the atoms found carry less than half of the mass.
    """
    return solve_atoms_detailed(d, K).measure()


def classl_density(d: ClassLDescriptor, grid) -> MeasureProfile:
    """Absolutely continuous part of the class-L measure sampled on ``grid``.

    Uses ``Im f / (pi |x + f(exp(ix))|**2)`` directly on the boundary; if
    ``sigma`` has no density part the boundary values are singular and the
    profile is obtained from ``F`` by the ``y``-ladder instead.
    """
    grid = np.asarray(grid, dtype=float)
    s = d.sigma
    if s.is_atomic:
        prof = recover_line(classl_F(d), grid, detect_atoms=False)
        return MeasureProfile("line", [], [], grid, prof.density,
                              truncation_note="no density part; ladder estimate")
    if s.n_atoms:
        warnings.warn("atomic-part-present", RuntimeWarning, stacklevel=2)
    with np.errstate(all="ignore"):
        fx = d.f(np.exp(1j * grid))
        dens = fx.imag / (math.pi * ((grid + fx.real) ** 2 + fx.imag ** 2))
    dens = np.where(np.isfinite(dens), np.clip(dens, 0, None), 0.0)
    note = f"window [{grid.min():.6g}, {grid.max():.6g}]"
    if s.n_atoms:
        note += "; atomic part omitted"
    return MeasureProfile.bounded("line", [], [], grid, dens, note)


def count_local_maxima(values) -> int:
    v = np.asarray(values, dtype=float)
    return int(np.sum((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])))


# -- branches ----------------------------------------------------------------------

def branch_index(d: ClassLDescriptor) -> int:
    """Branch ``n`` with ``-beta`` (that is, ``Re f(0)``) in ``[2 n pi, 2 (n+1) pi)``."""
    return int(math.floor(-d.beta / TWO_PI))


def shift(d: ClassLDescriptor, m: int) -> ClassLDescriptor:
    """``(beta - 2 pi m, sigma)``: the same wrap, branch index moved by ``m``."""
    return ClassLDescriptor(d.beta - TWO_PI * m, d.sigma)
