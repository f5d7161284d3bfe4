"""Command line interface.

Descriptors are JSON files: a line descriptor is ``{"beta": b, "sigma": {...}}``,
a circle descriptor ``{"gamma": [re, im], "sigma": {...}}`` (or ``"gamma_angle"``),
a Levy pair on the line ``{"alpha": a, "tau": {"atoms": [{"x":.., "w":..}]}}``.
Results are printed as JSON; profiles are written as CSV with a JSON sidecar.
Relative output paths are placed under ``$FREEWRAP_OUT`` when it is set.
"""
from __future__ import annotations

import json
import math
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import convolutions as cv, harness, levy, transforms as tr, wrapping as wr
from .class_l import ClassLDescriptor, classl_F
from .exceptions import FreewrapError
from .measures import TWO_PI, MeasureProfile
from .wrapping import BooleanIDDescriptor, eta_handle


def _out_path(path) -> Path:
    p = Path(path)
    base = os.environ.get(harness.OUT_ENV)
    return Path(base) / p if base and not p.is_absolute() else p


def _echo(obj):
    click.echo(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable))


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(type(x).__name__)


def _profile_summary(p: MeasureProfile) -> dict:
    return {"domain": p.domain, "atoms": [{"loc": x, "w": w} for x, w in p.atoms()],
            "captured_mass": p.captured_mass, "note": p.truncation_note}


def _line_grid(half_width, points):
    return np.linspace(-half_width, half_width, points)


def _angle_grid(points):
    return np.arange(points) * TWO_PI / points


def _finish(profile, out):
    if out:
        path = harness.emit(profile, _out_path(out))
        click.echo(f"wrote {path}", err=True)
    _echo(_profile_summary(profile))


class _Group(click.Group):
    """Maps library and usage errors to exit code 1 with a one-line message."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (FreewrapError, ValueError, KeyError, OSError) as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            ctx.exit(1)

    def main(self, *args, **kwargs):
        kwargs["standalone_mode"] = False
        try:
            rv = super().main(*args, **kwargs)
        except click.exceptions.Abort:
            click.echo("aborted", err=True)
            sys.exit(1)
        except click.ClickException as exc:
            exc.show()
            sys.exit(1)
        # standalone_mode=False returns the exit code of ctx.exit instead of exiting
        sys.exit(rv if isinstance(rv, int) else 0)


@click.group(cls=_Group)
def main():
    """Wrapping of class-L line measures onto the circle, and their convolutions."""


@main.command()
@click.option("--descriptor", "descriptor", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--direct", is_flag=True, help="Also wrap the line density directly and compare.")
@click.option("--window", "M", type=int, default=64, show_default=True)
@click.option("--angles", type=int, default=512, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV for the circle profile.")
def wrap(descriptor, direct, M, angles, out):
    """Wrap a line descriptor (beta, sigma) to (gamma, sigma)."""
    d = ClassLDescriptor.load(descriptor)
    b = wr.wrap_descriptor(d)
    result = {"descriptor": b.to_json(), "branch": d.branch}
    if direct or out:
        th = _angle_grid(angles)
        circ = tr.recover_circle(eta_handle(b), th)
        if direct:
            line = tr.recover_line(classl_F(d), wr.aligned_line_grid(th, M), detect_atoms=False)
            dw = wr.wrap_direct(line, th, M)
            result["direct_sup_difference"] = float(np.max(np.abs(dw.density - circ.density)))
            result["direct_note"] = dw.truncation_note
        if out:
            result["profile"] = str(harness.emit(circ, _out_path(out)))
    _echo(result)


@main.command()
@click.argument("descriptor", type=click.Path(exists=True, dir_okay=False))
@click.option("--branch", "n", type=int, default=0, show_default=True)
def unwrap(descriptor, n):
    """Line preimage (beta, sigma) of a circle descriptor on branch n."""
    d = wr.unwrap_descriptor(BooleanIDDescriptor.load(descriptor), n)
    _echo({"descriptor": d.to_json(), "branch": d.branch})


def _convolve_line(op, a, b, grid):
    if op == "boolean":
        d = cv.boolean_add(a, b)
        return tr.recover_line(classl_F(d), grid), d.to_json()
    if op == "free":
        return tr.recover_line(cv.free_add(a, b).handle, grid), None
    return tr.recover_line(cv.monotone_compose(classl_F(a), classl_F(b)), grid), None


def _convolve_circle(op, a, b, th):
    if op == "boolean":
        d = cv.mult_boolean(a, b)
        return tr.recover_circle(eta_handle(d), th), d.to_json()
    if op == "free":
        return tr.recover_circle(cv.mult_free_disk(a, b).handle, th), None
    return tr.recover_circle(cv.monotone_compose(eta_handle(a), eta_handle(b)), th), None


@main.command()
@click.option("--op", type=click.Choice(["boolean", "free", "monotone"]), required=True)
@click.option("--domain", type=click.Choice(["line", "circle"]), required=True)
@click.argument("a", type=click.Path(exists=True, dir_okay=False))
@click.argument("b", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--points", type=int, default=2001, show_default=True)
@click.option("--half-width", type=float, default=20.0, show_default=True)
def convolve(op, domain, a, b, out, points, half_width):
    """Convolve two descriptors and write the resulting profile."""
    if domain == "line":
        prof, closed = _convolve_line(op, ClassLDescriptor.load(a), ClassLDescriptor.load(b),
                                      _line_grid(half_width, points))
    else:
        prof, closed = _convolve_circle(op, BooleanIDDescriptor.load(a), BooleanIDDescriptor.load(b),
                                        _angle_grid(points))
    path = harness.emit(prof, _out_path(out))
    res = _profile_summary(prof)
    res["profile"] = str(path)
    if closed is not None:
        res["descriptor"] = closed
    _echo(res)


@main.command()
@click.argument("descriptor", type=click.Path(exists=True, dir_okay=False))
@click.option("--t", "t", type=float, required=True)
@click.option("--branch", "k", type=int, default=0, show_default=True)
@click.option("--op", type=click.Choice(["boolean", "free"]), default="boolean", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--points", type=int, default=512, show_default=True)
def power(descriptor, t, k, op, out, points):
    """Multiplicative power of a circle descriptor on branch k."""
    b = BooleanIDDescriptor.load(descriptor)
    if op == "boolean":
        p = cv.mult_boolean_power(b, t, k)
        res = {"descriptor": p.to_json()}
        if out:
            res["profile"] = str(harness.emit(tr.recover_circle(eta_handle(p), _angle_grid(points)),
                                              _out_path(out)))
        _echo(res)
        return
    _finish(tr.recover_circle(cv.mult_free_power(b, t, k).handle, _angle_grid(points)), out)


@main.command()
@click.argument("descriptor", type=click.Path(exists=True, dir_okay=False))
@click.option("--t", "t", type=float, required=True)
@click.option("--branch", "n", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--points", type=int, default=512, show_default=True)
def bn(descriptor, t, n, out, points):
    """Multiplicative Belinschi-Nica flow of a circle descriptor at time t."""
    b = BooleanIDDescriptor.load(descriptor)
    _finish(tr.recover_circle(cv.belinschi_nica(b, t, n).handle, _angle_grid(points)), out)


@main.group(name="levy")
def levy_group():
    """Levy-Khinchin builders and the Bercovici-Pata pair map."""


@levy_group.command("build")
@click.option("--kind", type=click.Choice(["boolean", "free", "monotone", "classical"]), required=True)
@click.option("--domain", type=click.Choice(["line", "circle"]), required=True)
@click.argument("pair", type=click.Path(exists=True, dir_okay=False))
@click.option("--t", "t", type=float, default=1.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--points", type=int, default=1001, show_default=True)
@click.option("--half-width", type=float, default=20.0, show_default=True)
def levy_build(kind, domain, pair, t, out, points, half_width):
    """Infinitely divisible law for a canonical pair.

    On the line PAIR holds (alpha, tau); on the circle (gamma, sigma).
    """
    if domain == "line":
        p = levy.CanonicalPairR.load(pair)
        law = levy.build_additive_id(kind, p, t)
        if kind == "classical":
            u = np.linspace(-10, 10, 21)
            _echo({"kind": kind, "u": u.tolist(), "char_function": [[c.real, c.imag] for c in law(u)]})
            return
        _finish(tr.recover_line(law, _line_grid(half_width, points)), out)
        return
    b = BooleanIDDescriptor.load(pair)
    law = levy.build_mult_id(kind, (b.gamma, b.sigma), t)
    th = _angle_grid(points)
    if kind == "classical":
        dens, tail = levy.classical_circle_density(law, th)
        prof = MeasureProfile.bounded("circle", [], [], th, np.clip(dens, 0, None),
                                      f"{levy.FOURIER_MODES} Fourier modes, tail bound {tail:.2e}")
        _finish(prof, out)
        return
    _finish(tr.recover_circle(law, th), out)


@levy_group.command("bp-map")
@click.argument("pair", type=click.Path(exists=True, dir_okay=False))
def levy_bp_map(pair):
    """Map a line pair (alpha, tau) to the circle pair (gamma, sigma)."""
    p = levy.CanonicalPairR.load(pair)
    gamma, sigma = levy.bp_pair_map(p)
    res = {"gamma": [gamma.real, gamma.imag], "sigma": sigma.to_json()}
    try:
        res["beta"] = levy.bp_beta(p)
    except FreewrapError as exc:
        res["beta_error"] = str(exc)
    _echo(res)


@levy_group.command("burgers")
@click.option("--t", "t", type=float, required=True)
@click.option("--grid", "G", type=int, default=8, show_default=True, help="Radial and angular samples.")
@click.option("--descriptor", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Circle descriptor (default: gamma = 1, sigma = point mass at 1).")
@click.option("--h", "h", type=float, default=1e-3, show_default=True)
def levy_burgers(t, G, descriptor, h):
    """Loewner-equation residual of the Belinschi-Nica flow on a polar grid in |z| <= 0.8."""
    if descriptor:
        b = BooleanIDDescriptor.load(descriptor)
    else:
        b = BooleanIDDescriptor.from_json({"gamma": [1.0, 0.0], "sigma": {"atoms": [{"theta": 0.0, "mass": 1.0}]}})
    if t - h < 0:
        raise click.BadParameter("t must be at least the difference step h")
    r = np.linspace(0.1, 0.8, G)
    a = np.arange(G) * TWO_PI / G
    z = (r[:, None] * np.exp(1j * a[None, :])).ravel()
    r1 = levy.loewner_residual(b, t, z, h)
    r2 = levy.loewner_residual(b, t, z, h / 2)
    _echo({"t": t, "max_residual": float(r1.max()), "max_residual_half_step": float(r2.max()),
           "observed_order": float(math.log2(r1.max() / r2.max())) if r2.max() > 0 else None})


@main.command()
@click.option("--config", "config", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--only", multiple=True, help="Check name or prefix (repeatable).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
def verify(config, only, out_dir):
    """Run the property suite; exit code 0 iff every check passes."""
    cfg = harness.SuiteConfig.load(config) if config else harness.SuiteConfig()
    if out_dir:
        cfg.out_dir = out_dir
    rep = harness.run_suite(cfg, list(only) or None)
    for line in rep.summary_lines():
        click.echo(line)
    path = harness.emit(rep, cfg.output_dir() / "report.json")
    click.echo(f"{'PASS' if rep.passed else 'FAIL'}: {sum(r.passed for r in rep.records)}/{len(rep.records)}"
               f" checks; report {path}")
    sys.exit(0 if rep.passed else 1)


if __name__ == "__main__":
    main()
