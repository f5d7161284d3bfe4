"""Analytic transforms on the half-plane and the disk, their inverses, and
recovery of measures from boundary values.

Two kinds of maps are handled uniformly through :class:`TransformHandle`:

* ``kind="F"``: a self-map of the upper half-plane, the reciprocal Cauchy
  transform ``F = 1/G`` of a probability measure on the line;
* ``kind="eta"``: a self-map ``eta = psi/(1 + psi)`` of the unit disk with
  ``eta(0) = 0``, attached to a probability measure on the circle.

Everything is vectorized over numpy arrays of evaluation points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .exceptions import (EtaDerivativeZeroError, LeftDomainError, NoConvergenceError,
                         NonFiniteEvaluationError)
from .measures import MeasureProfile, RealAtomicMeasure

LINE_ANCHOR = 1e3
DISK_ANCHOR = 1e-3
STOLZ_HEIGHT = 8.0
DEFAULT_Y_LADDER = (1e-2, 1e-3, 1e-4)
DEFAULT_R_LADDER = (1 - 1e-2, 1 - 1e-3, 1 - 1e-4)
ATOM_THRESHOLD = 1e-4


@dataclass(frozen=True, eq=False)
class TransformHandle:
    """An evaluator for ``F`` on the upper half-plane or ``eta`` on the disk.

    ``line`` optionally records the half-plane map an ``eta`` handle was
    wrapped from, so the exact preimage can be recovered without taking
    logarithms (see :func:`freewrap.wrapping.unwrap_handle`).
    """

    kind: str
    func: Callable
    deriv: Optional[Callable] = None
    periodic_shift: bool = False
    vanishes_only_at_zero: bool = False
    provenance: str = "closed-form"
    line: Optional["TransformHandle"] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("F", "eta"):
            raise ValueError(f"unknown transform kind {self.kind!r}")

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return np.asarray(self.func(z), dtype=complex)

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        if self.deriv is not None:
            return np.asarray(self.deriv(z), dtype=complex)
        return contour_derivative(self, z)

    def in_domain(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "F":
            return z.imag > 0
        return np.abs(z) < 1

    def with_meta(self, **kw) -> "TransformHandle":
        return replace(self, meta={**self.meta, **kw})


def contour_derivative(fn, z, n=8):
    """Derivative of an analytic ``fn`` by the trapezoid rule on a small circle."""
    z = np.asarray(z, dtype=complex)
    if getattr(fn, "kind", "F") == "F":
        dist = np.where(np.isfinite(z.imag), z.imag, 1.0)
    else:
        dist = 1 - np.abs(z)
    rho = np.minimum(1e-3, 0.5 * np.abs(dist))[..., None]
    nodes = np.exp(2j * np.pi * np.arange(n) / n)
    vals = np.asarray(fn(z[..., None] + rho * nodes), dtype=complex)
    return np.mean(vals / nodes, axis=-1) / rho[..., 0]


# -- elementary handles -------------------------------------------------------

def affine_F(c: complex) -> TransformHandle:
    """``F(z) = z + c``; ``c = t i`` is the Cauchy law, ``c = -a`` is ``delta_a``."""
    c = complex(c)
    return TransformHandle("F", lambda z: z + c, lambda z: np.ones_like(z),
                           periodic_shift=True, provenance="closed-form")


def linear_eta(c: complex) -> TransformHandle:
    """``eta(z) = c z``: a wrapped Cauchy law, or a point mass when ``|c| = 1``."""
    c = complex(c)
    return TransformHandle("eta", lambda z: c * z, lambda z: np.full_like(z, c),
                           vanishes_only_at_zero=c != 0, provenance="closed-form")


def identity_handle(kind: str) -> TransformHandle:
    return TransformHandle(kind, lambda z: z, lambda z: np.ones_like(z),
                           periodic_shift=kind == "F", vanishes_only_at_zero=kind == "eta")


def F_from_atoms(m: RealAtomicMeasure) -> TransformHandle:
    """Reciprocal Cauchy transform ``1/G`` of a finitely supported measure."""
    xs, ws = m.xs, m.ws

    def G(z):
        return np.sum(ws / (z[..., None] - xs), axis=-1)

    def dG(z):
        return -np.sum(ws / (z[..., None] - xs) ** 2, axis=-1)

    return TransformHandle("F", lambda z: 1.0 / G(z), lambda z: -dG(z) / G(z) ** 2,
                           provenance="closed-form")


def compose(a: TransformHandle, b: TransformHandle) -> TransformHandle:
    """``a o b``; both handles must be of the same kind."""
    if a.kind != b.kind:
        raise ValueError("cannot compose handles of different kinds")

    def deriv(z):
        return a.derivative(b(z)) * b.derivative(z)

    return TransformHandle(a.kind, lambda z: a(b(z)), deriv,
                           periodic_shift=a.periodic_shift and b.periodic_shift,
                           vanishes_only_at_zero=a.vanishes_only_at_zero and b.vanishes_only_at_zero,
                           provenance="composed")


def pick_deviation(F: TransformHandle, samples) -> float:
    """``max(Im z - Im F(z))``; nonpositive for a Pick function."""
    samples = np.asarray(samples, dtype=complex)
    return float(np.max(samples.imag - F(samples).imag))


def schur_deviation(eta: TransformHandle, samples) -> float:
    """``max(|eta(z)| - |z|)`` together with ``|eta(0)|``; nonpositive-ish when valid."""
    samples = np.asarray(samples, dtype=complex)
    return float(max(np.max(np.abs(eta(samples)) - np.abs(samples)), abs(eta(np.array(0j)))))


# -- inversion -----------------------------------------------------------------

@dataclass(frozen=True)
class InversionResult:
    preimage: np.ndarray
    residual: np.ndarray
    iterations: np.ndarray


def _damped_newton(T, target, w, tol, maxiter, halvings):
    target = target.astype(complex)
    w = w.astype(complex).copy()
    err = np.abs(T(w) - target)
    err[~np.isfinite(err)] = np.inf
    thr = tol * np.maximum(1.0, np.abs(target))
    its = np.zeros(w.shape, dtype=int)
    dead = ~T.in_domain(w)
    left = dead.copy()
    for _ in range(maxiter):
        act = np.flatnonzero((err > thr) & ~dead)
        if act.size == 0:
            break
        wa, ta, ea = w[act], target[act], err[act]
        step = (T(wa) - ta) / T.derivative(wa)
        lam = np.ones(act.size)
        done = np.zeros(act.size, dtype=bool)
        seen_domain = np.zeros(act.size, dtype=bool)
        for _ in range(halvings + 1):
            pend = np.flatnonzero(~done)
            if pend.size == 0:
                break
            cand = wa[pend] - lam[pend] * step[pend]
            inside = T.in_domain(cand) & np.isfinite(cand)
            e = np.full(pend.size, np.inf)
            if inside.any():
                e[inside] = np.abs(T(cand[inside]) - ta[pend][inside])
            e[~np.isfinite(e)] = np.inf
            seen_domain[pend] |= inside
            good = e < ea[pend]
            gi = pend[good]
            wa[gi], ea[gi] = cand[good], e[good]
            done[gi] = True
            lam[pend] *= 0.5
        w[act], err[act] = wa, ea
        its[act] += 1
        fail = act[~done]
        dead[fail] = True
        left[fail] = ~seen_domain[~done]
    ok = err <= thr
    # a few undamped polishing steps, kept only where they help
    for _ in range(3):
        idx = np.flatnonzero(ok & (err > 0))
        if idx.size == 0:
            break
        cand = w[idx] - (T(w[idx]) - target[idx]) / T.derivative(w[idx])
        inside = T.in_domain(cand)
        e = np.full(idx.size, np.inf)
        e[inside] = np.abs(T(cand[inside]) - target[idx][inside])
        good = e < err[idx]
        w[idx[good]], err[idx[good]] = cand[good], e[good]
    return w, err, its, ok, left


def _default_seed(T, target):
    if T.kind == "F":
        seed = 2 * target - T(target)
        bad = ~(seed.imag > 0) | ~np.isfinite(seed)
        seed[bad] = target[bad].real + 0.5j * np.abs(target[bad].imag) + 1e-3j
        return seed
    d0 = complex(T.derivative(np.array(0j)))
    seed = target / d0 if abs(d0) > 1e-12 else target.copy()
    r = np.abs(seed)
    big = r >= 0.95
    seed[big] = seed[big] / r[big] * 0.95
    return seed


def invert_transform(T: TransformHandle, target, seed=None, tol: float = 1e-12,
                     maxiter: int = 200, halvings: int = 10,
                     continuation_steps: int = 32) -> InversionResult:
    """Solve ``T(w) = target`` by damped Newton, with path continuation fallback.

    Newton steps are halved (at most ``halvings`` times) until the residual
    decreases and the iterate stays in the half-plane (resp. disk).  Points
    that fail are retried by continuation along a straight path of targets
    starting from the image of a trusted anchor: ``Re(target) + 1000 i`` for
    ``F`` and ``0.001 * target/|target|`` for ``eta``.

    Raises
    ------
    NoConvergenceError
        If some point does not reach the tolerance.
    LeftDomainError
        If every damped step for some point leaves the domain.
    """
    target = np.asarray(target, dtype=complex)
    shape = target.shape
    tgt = target.reshape(-1)
    w0 = _default_seed(T, tgt) if seed is None else np.broadcast_to(
        np.asarray(seed, dtype=complex), shape).reshape(-1).copy()
    w, err, its, ok, left = _damped_newton(T, tgt, w0, tol, maxiter, halvings)
    bad = np.flatnonzero(~ok)
    if bad.size:
        tb = tgt[bad]
        if T.kind == "F":
            anchor = tb.real + 1j * LINE_ANCHOR
        else:
            direction = np.where(np.abs(tb) > 0, tb / np.where(np.abs(tb) > 0, np.abs(tb), 1), 1)
            anchor = DISK_ANCHOR * direction
        start = T(anchor)
        wb = anchor.copy()
        okb = np.ones(bad.size, dtype=bool)
        for s in np.linspace(0, 1, continuation_steps + 1)[1:]:
            sub = start + s * (tb - start)
            wb_new, eb, ib, okk, lb = _damped_newton(T, sub, wb, tol, maxiter, halvings)
            wb = np.where(okk, wb_new, wb)
            okb &= okk
            its[bad] += ib
        w[bad], err[bad] = wb, np.abs(T(wb) - tb)
        ok[bad] = okb & (err[bad] <= tol * np.maximum(1.0, np.abs(tb)))
        left[bad] &= ~ok[bad]
    if not ok.all():
        if np.any(left & ~ok):
            raise LeftDomainError()
        raise NoConvergenceError()
    return InversionResult(w.reshape(shape), err.reshape(shape), its.reshape(shape))


def phi_eval(F: TransformHandle, z, tol: float = 1e-12):
    """Voiculescu transform ``phi(z) = F^{-1}(z) - z``.

    Intended for ``Im z >= 8``; lower points are reached by continuation.
    """
    z = np.asarray(z, dtype=complex)
    return invert_transform(F, z, tol=tol).preimage - z


def sigma_eval(eta: TransformHandle, z, tol: float = 1e-12):
    """``Sigma(z) = eta^{-1}(z)/z`` near the origin; ``Sigma(0) = 1/eta'(0)``."""
    d0 = complex(eta.derivative(np.array(0j)))
    if abs(d0) < 1e-12:
        raise EtaDerivativeZeroError()
    z = np.asarray(z, dtype=complex)
    zero = z == 0
    safe = np.where(zero, 1e-300, z)
    pre = invert_transform(eta, np.where(zero, 0, z), tol=tol).preimage
    return np.where(zero, 1 / d0, pre / safe)


# -- boundary limits -------------------------------------------------------------

def extrapolate_to_zero(hs, values):
    """Neville polynomial extrapolation of ``values[k] ~ v(hs[k])`` to ``h = 0``.

    ``values`` has the ladder on its first axis.
    """
    hs = np.asarray(hs, dtype=float)
    p = [np.asarray(v, dtype=complex) for v in values]
    n = len(hs)
    for m in range(1, n):
        p = [(hs[k] * p[k + 1] - hs[k + m] * p[k]) / (hs[k] - hs[k + m])
             for k in range(n - m)]
    return p[0]


def adaptive_limit(fn, ladder, atol=1e-12, rtol=1e-9, shrink=10.0, max_shrinks=6):
    """Extrapolate ``fn(h)`` to ``h -> 0``, shrinking the ladder until stable.

    ``fn`` maps a scalar ladder parameter to an array of values.  The ladder
    is divided by ``shrink`` while successive extrapolations disagree, which
    handles singularities sitting closer to the boundary point than the
    default ladder.  Each entry keeps the estimate whose change from the
    previous ladder was smallest, so roundoff at tiny ``h`` cannot win.
    """
    ladder = np.asarray(ladder, dtype=float)
    prev = np.asarray(extrapolate_to_zero(ladder, [fn(h) for h in ladder]))
    best = prev.copy()
    best_diff = np.full(prev.shape, np.inf)
    for _ in range(max_shrinks):
        ladder = ladder / shrink
        cur = np.asarray(extrapolate_to_zero(ladder, [fn(h) for h in ladder]))
        diff = np.abs(cur - prev)
        better = diff < best_diff
        best = np.where(better, cur, best)
        best_diff = np.where(better, diff, best_diff)
        if np.all(best_diff <= atol + rtol * np.abs(best)):
            break
        prev = cur
    return best


def _check_finite(vals):
    if not np.all(np.isfinite(vals)):
        raise NonFiniteEvaluationError()
    return vals


def line_atom_weight(F: TransformHandle, x, y_ladder=DEFAULT_Y_LADDER):
    """``lim_{y->0} iy/F(x+iy)``: the mass of the point ``x``."""
    x = np.asarray(x, dtype=float)
    return adaptive_limit(lambda y: 1j * y / _check_finite(F(x + 1j * y)), y_ladder).real


def circle_atom_weight(eta: TransformHandle, theta, r_ladder=DEFAULT_R_LADDER):
    """``lim_{r->1} (1-r) eta/(1-eta)`` at ``r exp(-i theta)``: mass of ``exp(i theta)``."""
    theta = np.asarray(theta, dtype=float)
    hs = 1 - np.asarray(r_ladder, dtype=float)

    def fn(h):
        e = _check_finite(eta((1 - h) * np.exp(-1j * theta)))
        return h * e / (1 - e)

    return adaptive_limit(fn, hs).real


def _refine_crossings(g, brackets, hs):
    """Upward roots of ``g(x, h)`` for every ladder value, extrapolated to h=0.

    The bracket is exact for the smallest ``h``; for larger ``h`` the root may
    drift out of it, so the bracket is widened around the previous root.
    The drift is even in ``h``, hence the extrapolation in ``h**2``.
    """
    hs = np.sort(np.asarray(hs, dtype=float))
    out = []
    for a, b in brackets:
        roots = []
        lo, hi = a, b
        for h in hs:
            width = hi - lo
            for _ in range(40):
                if g(lo, h) < 0 <= g(hi, h):
                    break
                c = 0.5 * (lo + hi)
                width *= 2
                lo, hi = c - width, c + width
            else:
                roots = None
                break
            r = brentq(lambda x: g(x, h), lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
            roots.append(r)
            lo, hi = r - 0.5 * (b - a), r + 0.5 * (b - a)
        if roots is not None:
            out.append(float(extrapolate_to_zero(hs ** 2, roots).real))
    return out


def find_line_atoms(F: TransformHandle, grid, y_ladder=DEFAULT_Y_LADDER,
                    threshold=ATOM_THRESHOLD):
    """Atoms of the measure with transform ``F`` inside the span of ``grid``.

    Candidates are upward zero crossings of ``Re F`` just above the axis; each
    is located by extrapolating the crossing in ``y`` and kept if its residue
    ``lim iy/F`` exceeds ``threshold``.
    """
    grid = np.sort(np.asarray(grid, dtype=float))
    y0 = min(y_ladder)
    re = _check_finite(F(grid + 1j * y0)).real
    idx = np.flatnonzero((re[:-1] < 0) & (re[1:] >= 0))
    brackets = [(grid[i], grid[i + 1]) for i in idx]
    locs = _refine_crossings(lambda x, h: F(np.array(x + 1j * h)).real, brackets,
                             0.1 * np.asarray(y_ladder))
    if not locs:
        return np.zeros(0), np.zeros(0)
    locs = np.array(locs)
    w = line_atom_weight(F, locs, y_ladder)
    keep = w > threshold
    return locs[keep], w[keep]


def find_circle_atoms(eta: TransformHandle, angles, r_ladder=DEFAULT_R_LADDER,
                      threshold=ATOM_THRESHOLD):
    """Atoms ``exp(i theta)`` of the measure with transform ``eta``.

    At an atom ``eta(exp(-i theta)) = 1`` and ``arg eta(r exp(-i theta))``
    decreases through zero as ``theta`` increases.
    """
    angles = np.sort(np.asarray(angles, dtype=float))
    hs = 1 - np.asarray(r_ladder, dtype=float)
    h0 = min(hs)
    ext = np.concatenate([[angles[-1] - 2 * np.pi], angles, [angles[0] + 2 * np.pi]])
    u = np.angle(_check_finite(eta((1 - h0) * np.exp(-1j * ext))))
    idx = np.flatnonzero((u[:-1] > 0) & (u[1:] <= 0) & (np.abs(u[:-1] - u[1:]) < np.pi))
    brackets = [(ext[i], ext[i + 1]) for i in idx]
    locs = _refine_crossings(lambda t, h: -np.angle(eta(np.array((1 - h) * np.exp(-1j * t)))),
                             brackets, 0.1 * hs)
    if not locs:
        return np.zeros(0), np.zeros(0)
    locs = np.sort(np.mod(np.array(locs), 2 * np.pi))
    # the padded grid may report an atom at theta ~ 0 twice
    gap = np.diff(np.concatenate([locs, [locs[0] + 2 * np.pi]]))
    locs = locs[gap > 1e-9] if len(locs) > 1 else locs
    if len(locs) > 1 and 2 * np.pi - locs[-1] + locs[0] < 1e-9:
        locs = locs[1:]
    w = circle_atom_weight(eta, locs, r_ladder)
    keep = w > threshold
    return locs[keep], w[keep]


def recover_line(F: TransformHandle, grid, y_ladder=DEFAULT_Y_LADDER,
                 detect_atoms: bool = True) -> MeasureProfile:
    """Recover a measure on the line from its ``F``-transform.

    The density ``-(1/pi) Im(1/F(x+iy))`` is extrapolated to ``y = 0`` through
    ``y_ladder``, after subtracting the Poisson kernels of detected atoms.
    """
    grid = np.asarray(grid, dtype=float)
    locs, ws = find_line_atoms(F, grid, y_ladder) if detect_atoms else (np.zeros(0), np.zeros(0))

    def dens(y):
        d = -np.imag(1.0 / _check_finite(F(grid + 1j * y))) / np.pi
        if len(locs):
            d = d - np.sum(ws * y / (np.pi * ((grid[:, None] - locs) ** 2 + y * y)), axis=1)
        return d

    values = [dens(y) for y in y_ladder]
    density = np.clip(extrapolate_to_zero(y_ladder, values).real, 0, None)
    note = f"window [{grid.min():.6g}, {grid.max():.6g}], y ladder {tuple(y_ladder)}"
    return MeasureProfile.bounded("line", locs, ws, grid, density, note)


def recover_circle(eta: TransformHandle, angle_grid, r_ladder=DEFAULT_R_LADDER,
                   detect_atoms: bool = True) -> MeasureProfile:
    """Recover a circle measure from ``eta``; abscissae are angles of ``exp(i theta)``.

    Densities are w.r.t. ``dtheta`` and use the clockwise evaluation point
    ``r exp(-i theta)``.
    """
    angle_grid = np.asarray(angle_grid, dtype=float)
    hs = 1 - np.asarray(r_ladder, dtype=float)
    locs, ws = (find_circle_atoms(eta, angle_grid, r_ladder) if detect_atoms
                else (np.zeros(0), np.zeros(0)))

    def dens(h):
        r = 1 - h
        e = _check_finite(eta(r * np.exp(-1j * angle_grid)))
        d = np.real((1 + e) / (1 - e)) / (2 * np.pi)
        if len(locs):
            k = (1 - r * r) / np.abs(1 - r * np.exp(1j * (locs - angle_grid[:, None]))) ** 2
            d = d - np.sum(ws * k, axis=1) / (2 * np.pi)
        return d

    values = [dens(h) for h in hs]
    density = np.clip(extrapolate_to_zero(hs, values).real, 0, None)
    note = f"angles [{angle_grid.min():.6g}, {angle_grid.max():.6g}], r ladder {tuple(r_ladder)}"
    return MeasureProfile.bounded("circle", locs, ws, angle_grid, density, note)
