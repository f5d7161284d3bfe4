"""Finite measures on the circle and the line, and sampled measure profiles.

A :class:`CircleMeasure` is a finite positive measure on the unit circle made
of point masses plus a nonnegative trigonometric-polynomial density.  All the
Herglotz-type integrals the rest of the package needs,

.. math::

    H_\\sigma(w) = \\int \\frac{1 + \\zeta w}{1 - \\zeta w} \\, d\\sigma(\\zeta),

are closed form for this representation: atoms stay rational, and the density
part reduces to the polynomial ``m_0 + 2 * sum(m_n w**n)`` in the Fourier
moments ``m_n``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import NegativeMassError

TWO_PI = 2.0 * math.pi
POSITIVITY_GRID = 4096
MASS_SLACK = 1e-6


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CircleMeasure:
    """Finite measure ``sum a_j delta_{exp(i theta_j)} + d(theta) dtheta/2pi``.

    The density is ``d(theta) = c0 + 2 Re(sum_{n>=1} c_n exp(i n theta))``.

    Parameters
    ----------
    thetas, masses : array_like
        Atom angles (reduced into ``[0, 2pi)``) and their nonnegative masses.
    c0 : float
        Constant Fourier coefficient, i.e. the mass of the density part.
    cn : array_like of complex
        Coefficients ``c_1, ..., c_N``.
    """

    thetas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    masses: np.ndarray = field(default_factory=lambda: np.zeros(0))
    c0: float = 0.0
    cn: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))

    def __post_init__(self):
        thetas = np.mod(np.asarray(self.thetas, dtype=float).reshape(-1), TWO_PI)
        masses = np.asarray(self.masses, dtype=float).reshape(-1)
        if thetas.shape != masses.shape:
            raise ValueError("thetas and masses must have the same length")
        if np.any(masses < 0) or self.c0 < 0:
            raise NegativeMassError()
        if len(np.unique(thetas)) != len(thetas):
            raise ValueError("atom angles must be distinct")
        object.__setattr__(self, "thetas", _frozen(thetas, float))
        object.__setattr__(self, "masses", _frozen(masses, float))
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "cn", _frozen(self.cn, complex))
        if len(self.cn):
            grid = np.arange(POSITIVITY_GRID) * TWO_PI / POSITIVITY_GRID
            if self.density(grid).min() < -1e-12 * max(1.0, self.c0):
                raise NegativeMassError("density is negative somewhere on the circle")

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls) -> "CircleMeasure":
        return cls()

    @classmethod
    def point(cls, theta: float, mass: float = 1.0) -> "CircleMeasure":
        return cls([theta], [mass])

    @classmethod
    def haar(cls, mass: float = 1.0) -> "CircleMeasure":
        return cls(c0=mass)

    # -- basic quantities -------------------------------------------------
    @property
    def n_atoms(self) -> int:
        return len(self.masses)

    @property
    def degree(self) -> int:
        return len(self.cn)

    @property
    def is_atomic(self) -> bool:
        return self.c0 == 0.0 and not np.any(self.cn)

    def total_mass(self) -> float:
        return float(self.masses.sum() + self.c0)

    def density(self, theta):
        """Density of the absolutely continuous part w.r.t. ``dtheta/2pi``."""
        theta = np.asarray(theta, dtype=float)
        out = np.full(theta.shape, self.c0)
        for n, c in enumerate(self.cn, start=1):
            out = out + 2.0 * np.real(c * np.exp(1j * n * theta))
        return out

    def moment(self, n: int) -> complex:
        """``m_n = int zeta**n dsigma``; see :func:`fourier_moment`."""
        if n < 0:
            return np.conj(self.moment(-n))
        val = complex(np.sum(self.masses * np.exp(1j * n * self.thetas)))
        if n == 0:
            return val + self.c0
        if n <= self.degree:
            val += np.conj(self.cn[n - 1])
        return val

    def density_moments(self) -> np.ndarray:
        """Moments ``m_0 .. m_N`` of the density part alone."""
        return np.concatenate([[self.c0], np.conj(self.cn)])

    # -- Herglotz integral ------------------------------------------------
    def herglotz(self, w):
        """``H(w) = int (1 + zeta w)/(1 - zeta w) dsigma(zeta)`` for ``|w| <= 1``."""
        w = np.asarray(w, dtype=complex)
        out = np.zeros(w.shape, dtype=complex)
        if self.n_atoms:
            zeta = np.exp(1j * self.thetas)
            zw = w[..., None] * zeta
            out = out + np.sum(self.masses * (1 + zw) / (1 - zw), axis=-1)
        if self.c0 or self.degree:
            m = self.density_moments()
            coeffs = np.concatenate([[m[0]], 2.0 * m[1:]])
            out = out + np.polynomial.polynomial.polyval(w, coeffs)
        return out

    def herglotz_derivative(self, w):
        w = np.asarray(w, dtype=complex)
        out = np.zeros(w.shape, dtype=complex)
        if self.n_atoms:
            zeta = np.exp(1j * self.thetas)
            zw = w[..., None] * zeta
            out = out + np.sum(self.masses * 2 * zeta / (1 - zw) ** 2, axis=-1)
        if self.degree:
            m = self.density_moments()
            n = np.arange(1, self.degree + 1)
            out = out + np.polynomial.polynomial.polyval(w, 2.0 * n * m[1:])
        return out

    # -- serialization ----------------------------------------------------
    def to_json(self) -> dict:
        return {
            "atoms": [{"theta": float(t), "mass": float(a)}
                      for t, a in zip(self.thetas, self.masses)],
            "fourier": {"c0": self.c0,
                        "cn": [[float(c.real), float(c.imag)] for c in self.cn]},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CircleMeasure":
        atoms = obj.get("atoms", [])
        fourier = obj.get("fourier", {})
        return cls([a["theta"] for a in atoms], [a["mass"] for a in atoms],
                   fourier.get("c0", 0.0),
                   [complex(re, im) for re, im in fourier.get("cn", [])])

    def __repr__(self):
        return (f"CircleMeasure(atoms={list(zip(self.thetas.round(6), self.masses))}, "
                f"c0={self.c0}, cn={list(self.cn)})")

    def allclose(self, other: "CircleMeasure", atol=1e-12) -> bool:
        if self.n_atoms != other.n_atoms:
            return False
        i, j = np.argsort(self.thetas), np.argsort(other.thetas)
        n = max(self.degree, other.degree)
        a = np.pad(self.cn, (0, n - self.degree))
        b = np.pad(other.cn, (0, n - other.degree))
        return (np.allclose(self.thetas[i], other.thetas[j], atol=atol, rtol=0)
                and np.allclose(self.masses[i], other.masses[j], atol=atol, rtol=0)
                and abs(self.c0 - other.c0) <= atol
                and np.allclose(a, b, atol=atol, rtol=0))


def circle_measure_add(s1: CircleMeasure, s2: CircleMeasure) -> CircleMeasure:
    """Sum of two circle measures; atoms at bit-identical angles are merged."""
    merged: dict[float, float] = {}
    for t, a in zip(np.concatenate([s1.thetas, s2.thetas]),
                    np.concatenate([s1.masses, s2.masses])):
        merged[float(t)] = merged.get(float(t), 0.0) + float(a)
    n = max(s1.degree, s2.degree)
    cn = np.pad(s1.cn, (0, n - s1.degree)) + np.pad(s2.cn, (0, n - s2.degree))
    return CircleMeasure(list(merged), list(merged.values()), s1.c0 + s2.c0, cn)


def circle_measure_scale(s: CircleMeasure, t: float) -> CircleMeasure:
    if t < 0:
        raise NegativeMassError()
    return CircleMeasure(s.thetas, t * s.masses, t * s.c0, t * s.cn)


def fourier_moment(s: CircleMeasure, n: int) -> complex:
    """``m_n = sum_j a_j exp(i n theta_j) + conj(c_n)``; ``m_0`` is the total mass."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return s.moment(n)


@dataclass(frozen=True, eq=False)
class RealAtomicMeasure:
    """Finitely many point masses on the real line with total weight <= 1."""

    xs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ws: np.ndarray = field(default_factory=lambda: np.zeros(0))

    max_total = 1.0

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float).reshape(-1)
        ws = np.asarray(self.ws, dtype=float).reshape(-1)
        if xs.shape != ws.shape:
            raise ValueError("xs and ws must have the same length")
        if np.any(ws < 0):
            raise NegativeMassError()
        if ws.sum() > self.max_total + 1e-12:
            raise ValueError(f"total weight exceeds {self.max_total}")
        if len(np.unique(xs)) != len(xs):
            raise ValueError("atom locations must be distinct")
        order = np.argsort(xs)
        object.__setattr__(self, "xs", _frozen(xs[order], float))
        object.__setattr__(self, "ws", _frozen(ws[order], float))

    def total_mass(self) -> float:
        return float(self.ws.sum())

    def __len__(self):
        return len(self.xs)

    def to_json(self) -> dict:
        return {"atoms": [{"x": float(x), "w": float(w)} for x, w in zip(self.xs, self.ws)]}

    @classmethod
    def from_json(cls, obj: dict) -> "RealAtomicMeasure":
        atoms = obj.get("atoms", [])
        return cls([a["x"] for a in atoms], [a["w"] for a in atoms])


class FiniteAtomicMeasure(RealAtomicMeasure):
    """Finitely supported finite measure without the unit-mass cap (Levy measures)."""

    max_total = math.inf


@dataclass(frozen=True, eq=False)
class MeasureProfile:
    """A recovered measure: atoms plus a sampled density.

    ``abscissa`` is a line coordinate for ``domain == "line"`` and the angle
    ``theta`` of the point ``exp(i theta)`` for ``domain == "circle"``; in the
    circle case densities are taken w.r.t. ``dtheta`` (not ``dtheta/2pi``).
    """

    domain: str
    atom_locs: np.ndarray
    atom_weights: np.ndarray
    abscissa: np.ndarray
    density: np.ndarray
    captured_mass: float = float("nan")
    truncation_note: str = ""

    def __post_init__(self):
        if self.domain not in ("line", "circle"):
            raise ValueError(f"unknown domain {self.domain!r}")
        x = np.asarray(self.abscissa, dtype=float).reshape(-1)
        d = np.asarray(self.density, dtype=float).reshape(-1)
        if x.shape != d.shape:
            raise ValueError("abscissa and density must have the same length")
        if np.any(d < 0):
            raise NegativeMassError("density values must be nonnegative")
        order = np.argsort(x, kind="stable")
        object.__setattr__(self, "abscissa", _frozen(x[order], float))
        object.__setattr__(self, "density", _frozen(d[order], float))
        object.__setattr__(self, "atom_locs", _frozen(self.atom_locs, float))
        object.__setattr__(self, "atom_weights", _frozen(self.atom_weights, float))
        accounted = self.atom_mass + self.density_mass
        if math.isnan(self.captured_mass):
            object.__setattr__(self, "captured_mass", accounted)
        elif abs(self.captured_mass - accounted) > 1e-9:
            raise ValueError("captured_mass disagrees with its own accounting")
        if self.captured_mass > 1 + MASS_SLACK:
            raise ValueError(f"captured mass {self.captured_mass} exceeds 1 by more than {MASS_SLACK}")

    @classmethod
    def bounded(cls, domain, atom_locs, atom_weights, abscissa, density, note="") -> "MeasureProfile":
        """Build a profile whose captured mass is at most 1.

        A sampled density whose trapezoid sum pushes the total above 1 is
        under-resolved by its grid; it is scaled down to fit and the factor
        is recorded in the truncation note.
        """
        ws = np.asarray(atom_weights, dtype=float)
        x = np.asarray(abscissa, dtype=float)
        d = np.asarray(density, dtype=float)
        order = np.argsort(x, kind="stable")
        dm = float(np.trapezoid(d[order], x[order])) if len(x) > 1 else 0.0
        am = float(ws.sum())
        if am + dm > 1 + MASS_SLACK:
            if am > 1:
                ws = ws / am
                am = 1.0
            f = (1 - am) / dm if dm > 0 else 1.0
            d = d * f
            note = (note + "; " if note else "") + f"density scaled by {f:.6g} (quadrature overshoot)"
        return cls(domain, atom_locs, ws, abscissa, d, truncation_note=note)

    @property
    def atom_mass(self) -> float:
        return float(self.atom_weights.sum())

    @property
    def density_mass(self) -> float:
        if len(self.abscissa) < 2:
            return 0.0
        return float(np.trapezoid(self.density, self.abscissa))

    def atoms(self):
        return list(zip(self.atom_locs.tolist(), self.atom_weights.tolist()))

    def to_csv(self, path) -> None:
        """Write the density grid; atoms and mass accounting go to ``<path>.json``."""
        path = Path(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["abscissa", "density"])
            for x, d in zip(self.abscissa, self.density):
                writer.writerow([repr(float(x)), repr(float(d))])
        sidecar = {
            "domain": self.domain,
            "atoms": [{"loc": x, "weight": w} for x, w in self.atoms()],
            "atom_mass": self.atom_mass,
            "density_mass": self.density_mass,
            "captured_mass": self.captured_mass,
            "truncation_note": self.truncation_note,
        }
        with open(path.with_suffix(path.suffix + ".json"), "w") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)

    @classmethod
    def from_csv(cls, path) -> "MeasureProfile":
        path = Path(path)
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        with open(path.with_suffix(path.suffix + ".json")) as fh:
            side = json.load(fh)
        return cls(side["domain"], [a["loc"] for a in side["atoms"]],
                   [a["weight"] for a in side["atoms"]], data[:, 0], data[:, 1],
                   side["captured_mass"], side.get("truncation_note", ""))


def total_variation(p: MeasureProfile, q: MeasureProfile, atom_tol=1e-6) -> float:
    """Total-variation distance between two profiles sampled on one grid."""
    if not np.array_equal(p.abscissa, q.abscissa):
        raise ValueError("profiles must share a grid")
    diff = 0.0
    unmatched = list(q.atoms())
    for x, w in p.atoms():
        for k, (y, v) in enumerate(unmatched):
            if abs(x - y) < atom_tol:
                diff += abs(w - v)
                unmatched.pop(k)
                break
        else:
            diff += w
    diff += sum(v for _, v in unmatched)
    diff += float(np.trapezoid(np.abs(p.density - q.density), p.abscissa))
    return 0.5 * diff
