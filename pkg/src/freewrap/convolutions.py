"""Additive and multiplicative convolutions, powers, subordination and the
Belinschi-Nica flows.

Boolean and monotone operations are exact (sums of Caratheodory data and
compositions).  Free operations go through subordination fixed points that
are solved by Newton's method with a plain-iteration fallback; the plain
iteration is a self-map of ``{Im w >= Im z}`` (resp. of ``{|w| <= |z|}``),
so the fallback always makes progress.  Multiplicative free operations are
computed on the line and wrapped, which is how all branch bookkeeping is
kept explicit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .class_l import ClassLDescriptor, classl_F
from .exceptions import FixedPointStallError, NonFiniteEvaluationError
from .measures import TWO_PI, circle_measure_add, circle_measure_scale
from .transforms import TransformHandle, compose
from .wrapping import (BooleanIDDescriptor, eta_handle, unwrap_descriptor, unwrap_handle,
                       wrap_handle)

STEP_TOL = 1e-13
MAX_ITER = 10_000
NEWTON_HALVINGS = 8
CONTINUATION_HEIGHT = 2.0
CONTINUATION_FACTOR = 4.0


@dataclass
class FixedPointStats:
    max_iterations: int = 0
    max_residual: float = 0.0
    calls: int = 0

    def update(self, its, res):
        self.calls += 1
        if np.size(its):
            self.max_iterations = max(self.max_iterations, int(np.max(its)))
            self.max_residual = max(self.max_residual, float(np.max(res)))


def fixed_point(T, w0, in_domain, tol=STEP_TOL, maxiter=MAX_ITER, stats=None):
    """Solve ``w = T(w)`` for arrays of independent problems.

    ``T(w, idx)`` returns ``(T(w), T'(w))`` for the problems ``idx`` (flat
    indices into ``w0``).  A Newton step on ``w - T(w)``, halved up to
    ``NEWTON_HALVINGS`` times, is taken when it stays in the domain and
    reduces the residual, otherwise the plain step
    ``w <- T(w)``.  Converged when the step is below ``tol * max(1, |w|)``.

    Raises
    ------
    FixedPointStallError
        After ``maxiter`` iterations without convergence.
    """
    w = np.array(w0, dtype=complex).reshape(-1)
    shape = np.shape(w0)
    its = np.zeros(w.size, dtype=int)
    res = np.zeros(w.size)
    act = np.arange(w.size)
    val, der = T(w, act)
    for _ in range(maxiter):
        if act.size == 0:
            break
        if not (np.all(np.isfinite(val)) and np.all(np.isfinite(der))):
            raise NonFiniteEvaluationError()
        wa = w[act]
        g = wa - val
        with np.errstate(all="ignore"):
            newton = wa - g / (1 - der)
        new = val.copy()
        nv, nd = np.empty_like(val), np.empty_like(der)
        plain = np.ones(act.size, dtype=bool)
        lam = 1.0
        for _h in range(NEWTON_HALVINGS + 1):
            cand = np.flatnonzero(plain)
            with np.errstate(all="ignore"):
                trial = wa[cand] - lam * (wa[cand] - newton[cand])
            ok = in_domain(trial) & np.isfinite(trial)
            if ok.any():
                tv, td = T(trial[ok], act[cand[ok]])
                better = np.abs(trial[ok] - tv) < np.abs(g[cand[ok]])
                sel = cand[ok][better]
                new[sel] = trial[ok][better]
                nv[sel], nd[sel] = tv[better], td[better]
                plain[sel] = False
            if not plain.any():
                break
            lam *= 0.5
        if plain.any():
            pv, pd = T(new[plain], act[plain])
            nv[plain], nd[plain] = pv, pd
        step = np.abs(new - wa)
        w[act] = new
        its[act] += 1
        done = step <= tol * np.maximum(1.0, np.abs(new))
        res[act[done]] = np.abs(new[done] - nv[done])
        keep = ~done
        act, val, der = act[keep], nv[keep], nd[keep]
    if act.size:
        raise FixedPointStallError()
    if stats is not None:
        stats.update(its, res)
    return w.reshape(shape), its.reshape(shape)


def _upper(w):
    return w.imag > 0


def _disk(w):
    return np.abs(w) < 1


def continued_fixed_point(make_T, z, seed=None, stats=None, height=CONTINUATION_HEIGHT,
                          factor=CONTINUATION_FACTOR):
    """:func:`fixed_point` on ``C+`` with continuation in ``Im z``.

    ``make_T(zf)`` returns the map ``T(w, idx)`` for the flat targets ``zf``.
    Problems are first solved at height ``max(Im z, height)`` (seeded with
    ``seed`` or ``z``) and carried down to ``Im z`` in steps of ``1/factor``,
    each solve seeded with the previous solution; close to the real axis a
    cold start may otherwise fall into the plain iteration's slow regime.
    """
    z = np.asarray(z, dtype=complex)
    y = np.maximum(z.imag, height)
    zz = z.real + 1j * y
    w0 = zz if seed is None else seed(zz)
    w = fixed_point(make_T(zz.reshape(-1)), w0, _upper, stats=stats)[0]
    while np.any(y > z.imag):
        lower = np.maximum(z.imag, y / factor)
        zz = z.real + 1j * lower
        w = fixed_point(make_T(zz.reshape(-1)), w, _upper, stats=stats)[0]
        y = lower
    return w


@dataclass(frozen=True, eq=False)
class ConvolutionResult:
    handle: TransformHandle
    closed_form: Optional[object] = None
    stats: FixedPointStats = field(default_factory=FixedPointStats)

    @property
    def diagnostics(self):
        return {"max_iterations": self.stats.max_iterations,
                "max_residual": self.stats.max_residual}

    def __call__(self, z):
        return self.handle(z)


Circle = Union[BooleanIDDescriptor, TransformHandle]
Line = Union[ClassLDescriptor, TransformHandle]


def as_F(x: Line) -> TransformHandle:
    if isinstance(x, ClassLDescriptor):
        return classl_F(x)
    if x.kind != "F":
        raise ValueError("expected an F-handle")
    return x


def as_eta(x: Circle) -> TransformHandle:
    if isinstance(x, BooleanIDDescriptor):
        return eta_handle(x)
    if x.kind != "eta":
        raise ValueError("expected an eta-handle")
    return x


def line_preimage(x: Circle, n: int = 0) -> TransformHandle:
    """A line handle wrapping onto ``x``; ``n`` is the unwrap branch."""
    if isinstance(x, BooleanIDDescriptor):
        return classl_F(unwrap_descriptor(x, n))
    return unwrap_handle(x, n)


# -- Boolean ------------------------------------------------------------------------

def boolean_add(d1: ClassLDescriptor, d2: ClassLDescriptor) -> ClassLDescriptor:
    return ClassLDescriptor(d1.beta + d2.beta, circle_measure_add(d1.sigma, d2.sigma))


def boolean_power(d: ClassLDescriptor, t: float) -> ClassLDescriptor:
    return ClassLDescriptor(t * d.beta, circle_measure_scale(d.sigma, t))


def boolean_add_handles(a: TransformHandle, b: TransformHandle) -> TransformHandle:
    """``F_a + F_b - z``."""
    return TransformHandle("F", lambda z: a(z) + b(z) - z,
                           lambda z: a.derivative(z) + b.derivative(z) - 1,
                           periodic_shift=a.periodic_shift and b.periodic_shift,
                           provenance="composed")


def boolean_power_handle(F: TransformHandle, q: float) -> TransformHandle:
    """``z + q (F(z) - z)``."""
    return TransformHandle("F", lambda z: z + q * (F(z) - z),
                           lambda z: 1 + q * (F.derivative(z) - 1),
                           periodic_shift=F.periodic_shift, provenance="composed")


def mult_boolean(b1: BooleanIDDescriptor, b2: BooleanIDDescriptor) -> BooleanIDDescriptor:
    return BooleanIDDescriptor(b1.gamma * b2.gamma, circle_measure_add(b1.sigma, b2.sigma))


def mult_boolean_power(b: BooleanIDDescriptor, t: float, k: int = 0) -> BooleanIDDescriptor:
    """``(exp(i t (Arg gamma + 2 pi k)), t sigma)``; ``k`` selects the branch."""
    arg = float(np.angle(b.gamma))
    if arg == -np.pi:
        arg = np.pi
    return BooleanIDDescriptor.from_angle(t * (arg + TWO_PI * k), circle_measure_scale(b.sigma, t))


def mult_boolean_handles(a: TransformHandle, b: TransformHandle) -> TransformHandle:
    """``eta_a(z) eta_b(z) / z``."""
    def eta(z):
        z = np.asarray(z, dtype=complex)
        safe = np.where(z == 0, 1, z)
        return np.where(z == 0, 0, a(z) * b(z) / safe)

    def deta(z):
        z = np.asarray(z, dtype=complex)
        safe = np.where(z == 0, 1, z)
        d0 = a.derivative(z) * b.derivative(z)
        full = (a.derivative(z) * b(z) + a(z) * b.derivative(z)) / safe - a(z) * b(z) / safe ** 2
        return np.where(z == 0, d0, full)

    return TransformHandle("eta", eta, deta, vanishes_only_at_zero=True, provenance="composed")


def mult_boolean_power_handle(x: Circle, q: float, k: int = 0) -> TransformHandle:
    """Boolean power on the circle through the line; ``k`` as in :func:`mult_boolean_power`."""
    return wrap_handle(boolean_power_handle(line_preimage(x, -k), q))


# -- monotone -------------------------------------------------------------------------

def monotone_compose(a: TransformHandle, b: TransformHandle) -> TransformHandle:
    return compose(a, b)


# -- free additive --------------------------------------------------------------------

def free_add(a: Line, b: Line) -> ConvolutionResult:
    """Free additive convolution by subordination.

    ``omega_1`` solves ``w = z + h_b(z + h_a(w))`` with ``h = F - id`` and
    ``F(z) = F_a(omega_1(z))``.  The derivative uses the implicit relation
    ``omega_1' = (1 + h_b'(u)) / (1 - h_b'(u) h_a'(omega_1))``.
    """
    Fa, Fb = as_F(a), as_F(b)
    stats = FixedPointStats()

    def solve(z):
        def make_T(zf):
            def T(w, idx):
                zz = zf[idx]
                u = zz + Fa(w) - w
                return zz + Fb(u) - u, (Fb.derivative(u) - 1) * (Fa.derivative(w) - 1)
            return T

        return continued_fixed_point(make_T, z, stats=stats)

    def omegas(z):
        z = np.asarray(z, dtype=complex)
        w1 = solve(z)
        u = z + Fa(w1) - w1
        return w1, u

    def F(z):
        w1, _ = omegas(z)
        return Fa(w1)

    def dF(z):
        w1, u = omegas(z)
        ha_d = Fa.derivative(w1) - 1
        hb_d = Fb.derivative(u) - 1
        return Fa.derivative(w1) * (1 + hb_d) / (1 - hb_d * ha_d)

    h = TransformHandle("F", F, dF, periodic_shift=Fa.periodic_shift and Fb.periodic_shift,
                        provenance="fixed-point", meta={"omegas": omegas})
    return ConvolutionResult(h, None, stats)


def free_power(a: Line, t: float) -> ConvolutionResult:
    """``F_t(z) = F(omega(z))`` where ``omega = z + (t - 1)(F(omega) - omega)``, for ``t >= 1``."""
    if t < 1:
        raise ValueError("free powers are only available for t >= 1")
    F = as_F(a)
    stats = FixedPointStats()
    if t == 1:
        return ConvolutionResult(F, None, stats)
    s = t - 1.0

    def omega(z):
        z = np.asarray(z, dtype=complex)
        def make_T(zf):
            def T(w, idx):
                return zf[idx] + s * (F(w) - w), s * (F.derivative(w) - 1)
            return T

        return continued_fixed_point(make_T, z, stats=stats)

    def Ft(z):
        return F(omega(z))

    def dFt(z):
        w = omega(z)
        return F.derivative(w) / (1 - s * (F.derivative(w) - 1))

    h = TransformHandle("F", Ft, dFt, periodic_shift=F.periodic_shift, provenance="fixed-point",
                        meta={"omega": omega})
    return ConvolutionResult(h, None, stats)


# -- free multiplicative --------------------------------------------------------------

def mult_free(a: Circle, b: Circle) -> ConvolutionResult:
    """Free multiplicative convolution: unwrap both factors, add freely, wrap back."""
    r = free_add(line_preimage(a), line_preimage(b))
    return ConvolutionResult(wrap_handle(r.handle), None, r.stats)


def mult_free_power(a: Circle, t: float, k: int = 0) -> ConvolutionResult:
    """``t``-th free multiplicative power on branch ``k`` (line preimage branch ``-k``).

    ``k`` is labelled like :func:`mult_boolean_power`: for descriptors the phase
    of ``eta'(0)`` is continued as ``t (Arg gamma + 2 pi k)``.
    """
    r = free_power(line_preimage(a, -k), t)
    return ConvolutionResult(wrap_handle(r.handle), None, r.stats)


def _ratio_handle(eta: TransformHandle) -> TransformHandle:
    """``h(w) = eta(w)/w`` with its removable singularity filled in."""
    d0 = complex(eta.derivative(np.array(0j)))

    def h(w):
        w = np.asarray(w, dtype=complex)
        safe = np.where(w == 0, 1, w)
        return np.where(w == 0, d0, eta(w) / safe)

    def dh(w):
        w = np.asarray(w, dtype=complex)
        small = np.abs(w) < 1e-6
        safe = np.where(small, 1, w)
        full = (eta.derivative(w) * safe - eta(w)) / safe ** 2
        if small.any():
            # second-order Taylor term, by a contour average of h
            r = 1e-3
            nodes = np.exp(2j * np.pi * np.arange(16) / 16)
            c1 = np.mean(eta(r * nodes) / (r * nodes) / (r * nodes)) * 1.0
            full = np.where(small, c1, full)
        return full

    return TransformHandle("eta", h, dh, provenance="composed")


def _disk_subordination(a: TransformHandle, b: TransformHandle, stats):
    """``omega_1 = z h_b(z h_a(omega_1))`` with ``h = eta/w``; returns ``(omega_1, omega_2)``."""
    ha, hb = _ratio_handle(a), _ratio_handle(b)

    def omegas(z):
        z = np.asarray(z, dtype=complex)
        zf = z.reshape(-1)

        def T(w, idx):
            zz = zf[idx]
            u = zz * ha(w)
            return zz * hb(u), zz * hb.derivative(u) * zz * ha.derivative(w)

        w1 = fixed_point(T, z, _disk, stats=stats)[0]
        return w1, z * ha(w1)

    return omegas, ha, hb


def mult_free_disk(a: Circle, b: Circle) -> ConvolutionResult:
    """Free multiplicative convolution from the disk-side subordination system.

    Independent of the unwrapping route of :func:`mult_free`; used as a cross-check.
    """
    ea, eb = as_eta(a), as_eta(b)
    stats = FixedPointStats()
    omegas, ha, hb = _disk_subordination(ea, eb, stats)

    def eta(z):
        return ea(omegas(z)[0])

    def deta(z):
        z = np.asarray(z, dtype=complex)
        w1, u = omegas(z)
        # w1 = z hb(u), u = z ha(w1)
        A = hb(u) + z * hb.derivative(u) * ha(w1)
        B = z * hb.derivative(u) * z * ha.derivative(w1)
        return ea.derivative(w1) * A / (1 - B)

    return ConvolutionResult(TransformHandle("eta", eta, deta, vanishes_only_at_zero=True,
                                             provenance="fixed-point"), None, stats)


def subordination_dist(mu, nu, domain: str = "circle") -> ConvolutionResult:
    """Handle of the subordination distribution of ``mu`` with respect to ``nu``.

    On the line this is ``omega_2(z) = z + h_mu(omega_1(z))``, on the circle
    ``omega_2(z) = z eta_mu(omega_1)/omega_1``; in both cases
    ``T_nu(omega_2) = T_{mu * nu}`` so no inverse of ``T_nu`` is needed.
    """
    if domain == "line":
        r = free_add(mu, nu)
        Fa = as_F(mu)
        omegas = r.handle.meta["omegas"]

        def w2(z):
            return omegas(z)[1]

        def dw2(z):
            w1, u = omegas(z)
            ha_d = Fa.derivative(w1) - 1
            hb_d = as_F(nu).derivative(u) - 1
            return 1 + ha_d * (1 + hb_d) / (1 - hb_d * ha_d)

        h = TransformHandle("F", w2, dw2, periodic_shift=r.handle.periodic_shift,
                            provenance="fixed-point")
        return ConvolutionResult(h, None, r.stats)
    if domain != "circle":
        raise ValueError("domain must be 'line' or 'circle'")
    ea, eb = as_eta(mu), as_eta(nu)
    stats = FixedPointStats()
    omegas, ha, hb = _disk_subordination(ea, eb, stats)

    def w2(z):
        return omegas(z)[1]

    def dw2(z):
        z = np.asarray(z, dtype=complex)
        w1, u = omegas(z)
        A = hb(u) + z * hb.derivative(u) * ha(w1)
        B = z * hb.derivative(u) * z * ha.derivative(w1)
        dw1 = A / (1 - B)
        return ha(w1) + z * ha.derivative(w1) * dw1

    h = TransformHandle("eta", w2, dw2, vanishes_only_at_zero=True, provenance="fixed-point")
    return ConvolutionResult(h, None, stats)


# -- Belinschi-Nica --------------------------------------------------------------------

def belinschi_nica(x, t: float, branch: int = 0) -> ConvolutionResult:
    """``B_t(mu) = (mu^{free 1+t})^{boolean 1/(1+t)}`` on the line, and its wrapped
    counterpart on the circle (computed on the unwrap branch ``branch``).
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    circle = isinstance(x, BooleanIDDescriptor) or (isinstance(x, TransformHandle) and x.kind == "eta")
    F = line_preimage(x, branch) if circle else as_F(x)
    if t == 0:
        out, stats = F, FixedPointStats()
    else:
        r = free_power(F, 1 + t)
        out, stats = boolean_power_handle(r.handle, 1 / (1 + t)), r.stats
    if circle:
        return ConvolutionResult(wrap_handle(out), None, stats)
    return ConvolutionResult(out, None, stats)
