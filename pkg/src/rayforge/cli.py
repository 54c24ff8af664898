"""``rayforge`` command line.

Exit codes: 0 ok, 2 not converged, 3 usage error, 4 no matching periodic
point, 5 ambiguous continuation.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import io as rio
from .core import MapSpec, find_periodic_points
from .domains import build_expansion_domain, postsingular_analysis
from .errors import (
    AddressSyntaxError,
    ContinuationAmbiguous,
    InvalidSymbol,
    NotAFixedPoint,
    RadiusTooSmall,
    RayforgeError,
    UnsupportedFamily,
)
from .rays import (
    PARABOLIC_GAP,
    eventual_period,
    landing_point,
    pullback_sequence,
    straight_leg,
    trace_ray,
    verify_landing,
)
from .render import RenderConfig, render, thread_count
from .symbolic import build_partition, default_partition, parse_address, validate_symbol

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_USAGE, EXIT_NO_MATCH, EXIT_AMBIGUOUS = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_map_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=("exp", "cosine", "scaledbf"))
    p.add_argument("--lambda", dest="lam", metavar="RE,IM")
    p.add_argument("--a", metavar="RE,IM")
    p.add_argument("--b", metavar="RE,IM")
    p.add_argument("--alpha", type=float)
    p.add_argument("--radius", type=float, help="partition radius R (default from the map)")


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--figure", help="also render a matplotlib figure to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rayforge", description="Dynamic rays, landing checks and escape-time renders.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("trace", help="trace a periodic or preperiodic ray to CSV")
    _add_map_flags(p)
    p.add_argument("--address", required=True)
    p.add_argument("--depth", type=int, default=40)
    p.add_argument("--samples", type=int, default=64, help="minimum samples per level")
    _add_output_flags(p)

    p = sub.add_parser("verify-landing", help="check where a periodic ray lands")
    _add_map_flags(p)
    p.add_argument("--address", required=True)
    p.add_argument("--depth", type=int, default=40)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--period-search-box", metavar="RE0,RE1,IM0,IM1")
    p.add_argument("--grid", type=int, default=40, help="Newton seeds per box side")
    _add_output_flags(p)

    p = sub.add_parser("render", help="escape-time raster as PGM/PPM")
    _add_map_flags(p)
    p.add_argument("--config", help="JSON file whose keys mirror the flags")
    p.add_argument("--viewport", metavar="RE0,RE1,IM0,IM1")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--escape-radius", type=float)
    p.add_argument("--overlay", action="append", default=None, help="ray CSV or periodic-point JSON")
    _add_output_flags(p)

    p = sub.add_parser("pullback", help="iterate the leg map at a fixed point")
    _add_map_flags(p)
    p.add_argument("--z0", required=True, metavar="RE,IM")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--straight", metavar="RE,IM", help="direction of a straight initial leg")
    g.add_argument("--leg", help="CSV file with the initial leg (t,re,im)")
    p.add_argument("--iterations", type=int, default=30)
    _add_output_flags(p)

    p = sub.add_parser("analyze", help="postsingular orbits and the expansion domain")
    _add_map_flags(p)
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--escape-radius", type=float, default=1e3)
    p.add_argument("--z0", metavar="RE,IM", help="build the expansion domain at this fixed point")
    _add_output_flags(p)
    return parser


def _map_from(ns, cfg: Optional[dict] = None) -> MapSpec:
    cfg = cfg or {}

    def pick(name, key=None):
        v = getattr(ns, name, None)
        return v if v is not None else cfg.get(key or name)

    family = pick("family")
    if family is None:
        raise UsageError("--family is required")
    try:
        if family == "exp":
            lam = pick("lam", "lambda")
            if lam is None:
                raise UsageError("--lambda is required for exp")
            return MapSpec.exp(rio.parse_complex(lam))
        if family == "cosine":
            a, b = pick("a"), pick("b")
            if a is None or b is None:
                raise UsageError("--a and --b are required for cosine")
            return MapSpec.cosine(rio.parse_complex(a), rio.parse_complex(b))
        if family == "scaledbf":
            alpha = pick("alpha")
            return MapSpec.scaled_bf(1.0 if alpha is None else float(alpha))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    raise UsageError(f"unknown family {family!r}")


def _partition(ns, m: MapSpec):
    try:
        return build_partition(m, ns.radius) if ns.radius is not None else default_partition(m)
    except (RadiusTooSmall, UnsupportedFamily) as exc:
        raise UsageError(str(exc)) from None


def _address(text: str, m: MapSpec):
    try:
        addr = parse_address(text)
        for s in addr.preperiod + addr.period:
            validate_symbol(m, s)
        return addr
    except (AddressSyntaxError, InvalidSymbol, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _check_positive(name: str, value: int) -> None:
    if value < 1:
        raise UsageError(f"{name} must be positive")


def _emit_text(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _check_writable(*paths: Optional[str]) -> None:
    for p in paths:
        if p and not Path(p).resolve().parent.is_dir():
            raise UsageError(f"directory of {p} does not exist")


def cmd_trace(ns) -> int:
    m = _map_from(ns)
    part = _partition(ns, m)
    addr = _address(ns.address, m)
    _check_positive("--depth", ns.depth)
    _check_positive("--samples", ns.samples)
    _check_writable(ns.out, ns.figure)
    ray = trace_ray(part, addr, depth=ns.depth, samples_per_level=ns.samples)
    _emit_text(rio.curve_to_csv(ray), ns.out)
    if ns.figure:
        from .plotting import plot_curves

        plot_curves(ns.figure, [ray], [str(addr)], title=m.describe(), clip=12.0)
    return EXIT_OK if ray.converged else EXIT_NOT_CONVERGED


def cmd_verify_landing(ns) -> int:
    m = _map_from(ns)
    part = _partition(ns, m)
    addr = _address(ns.address, m)
    if not addr.is_periodic:
        raise UsageError("verify-landing needs a periodic address")
    _check_positive("--depth", ns.depth)
    _check_positive("--samples", ns.samples)
    _check_positive("--grid", ns.grid)
    box = None
    if ns.period_search_box is not None:
        try:
            box = rio.parse_box(ns.period_search_box)
        except ValueError as exc:
            raise UsageError(f"--period-search-box: {exc}") from None
    _check_writable(ns.out, ns.figure)
    n = len(addr.period)
    ray = trace_ray(part, addr, depth=ns.depth, samples_per_level=ns.samples)
    est = landing_point(ray, m, n)
    if box is None:
        c = est.estimate
        box = (c.real - 0.5, c.real + 0.5, c.imag - 0.5, c.imag + 0.5)
    points = find_periodic_points(m, n, box, grid_density=ns.grid)
    report = verify_landing(part, addr, points, ray=ray, estimate=est)
    _emit_text(rio.dump_json(report.to_json()), ns.out)
    if ns.figure:
        from .plotting import plot_curves

        shown = [report.matched] if report.matched is not None else []
        plot_curves(ns.figure, [ray], [str(addr)], points=shown, title=m.describe(), clip=12.0)
    if report.matched is None or not report.gap < PARABOLIC_GAP:
        return EXIT_NO_MATCH
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


RENDER_KEYS = ("viewport", "width", "height", "max_iter", "escape_radius", "overlays")


def _render_config(ns) -> tuple[MapSpec, RenderConfig]:
    cfg: dict = {}
    if ns.config:
        try:
            cfg = rio.load_json(Path(ns.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        unknown = set(cfg) - set(RENDER_KEYS) - {"family", "lambda", "a", "b", "alpha", "radius"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
    m = _map_from(ns, cfg)
    viewport = ns.viewport if ns.viewport is not None else cfg.get("viewport")
    if viewport is None:
        raise UsageError("--viewport is required")
    try:
        vp = rio.parse_box(viewport) if isinstance(viewport, str) else tuple(float(v) for v in viewport)
        width = ns.width if ns.width is not None else cfg.get("width", 256)
        height = ns.height if ns.height is not None else cfg.get("height", 256)
        max_iter = ns.max_iter if ns.max_iter is not None else cfg.get("max_iter", 100)
        radius = ns.escape_radius if ns.escape_radius is not None else cfg.get("escape_radius", 50.0)
        overlays = ns.overlay if ns.overlay is not None else cfg.get("overlays", [])
        rc = RenderConfig(vp, width, height, max_iter, float(radius), tuple(overlays))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    return m, rc


def _load_overlays(paths) -> tuple[list, list]:
    rays, points = [], []
    for p in paths:
        try:
            text = Path(p).read_text(encoding="utf-8")
            if p.lower().endswith(".csv"):
                rays.append(rio.curve_from_csv(text).z)
            elif p.lower().endswith(".json"):
                points.extend(rio.periodic_points_from_json(text))
            else:
                raise UsageError(f"overlay {p} must be .csv or .json")
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"bad overlay {p}: {exc}") from None
    return rays, points


def cmd_render(ns) -> int:
    m, rc = _render_config(ns)
    rays, points = _load_overlays(rc.overlays)
    try:
        threads = thread_count()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _check_writable(ns.out, ns.figure)
    data = render(m, rc, rays, points, threads=threads)
    if ns.out:
        Path(ns.out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
    if ns.figure:
        from .plotting import plot_raster
        from .render import decode_pnm

        plot_raster(ns.figure, decode_pnm(data), rc.viewport, title=m.describe())
    return EXIT_OK


def cmd_pullback(ns) -> int:
    m = _map_from(ns)
    part = _partition(ns, m)
    try:
        z0 = rio.parse_complex(ns.z0)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if ns.iterations < 0:
        raise UsageError("--iterations must be >= 0")
    if ns.straight is not None:
        try:
            d = rio.parse_complex(ns.straight)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if d == 0:
            raise UsageError("--straight direction must be nonzero")
        leg = straight_leg(z0, d)
    else:
        try:
            leg = rio.leg_from_csv(Path(ns.leg).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"bad leg file: {exc}") from None
        if len(leg) < 2 or abs(leg.z[0] - z0) > 1e-12 * max(1.0, abs(z0)):
            raise UsageError("the leg must have >= 2 samples and start at --z0")
    _check_writable(ns.out, ns.figure)
    try:
        steps = pullback_sequence(m, z0, leg, ns.iterations, part)
    except NotAFixedPoint as exc:
        raise UsageError(f"--z0 is not a fixed point: {exc}") from None
    except ContinuationAmbiguous as exc:
        print(f"rayforge: {exc}", file=sys.stderr)
        return EXIT_AMBIGUOUS
    symbols = [s.tail_symbol for s in steps]
    ev = eventual_period(symbols, min_repeats=min(3, len(symbols)))
    doc = {
        "z0": [z0.real, z0.imag],
        "iterations": ns.iterations,
        "steps": [
            {"iteration": k, "tail_symbol": s.tail_symbol, "head_gap": s.head_gap, "samples": len(s.curve)}
            for k, s in enumerate(steps)
        ],
        "eventual_period": None if ev is None else {"preperiod": ev[0], "period": ev[1]},
    }
    _emit_text(rio.dump_json(doc), ns.out)
    if ns.figure:
        from .plotting import plot_pullback

        plot_pullback(ns.figure, [s.head_gap for s in steps], symbols, title=m.describe())
    return EXIT_OK if ev is not None else EXIT_NOT_CONVERGED


def cmd_analyze(ns) -> int:
    m = _map_from(ns)
    _check_positive("--max-iter", ns.max_iter)
    z0 = None
    if ns.z0 is not None:
        try:
            z0 = rio.parse_complex(ns.z0)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    _check_writable(ns.out, ns.figure)
    report = postsingular_analysis(m, max_iter=ns.max_iter, escape_radius=ns.escape_radius)
    doc = {"singular_orbits": report.to_json(), "expansion_domain": None}
    code = EXIT_OK
    if z0 is not None:
        try:
            doc["expansion_domain"] = build_expansion_domain(m, z0, report).to_json()
        except RayforgeError as exc:
            doc["expansion_domain"] = {"error": type(exc).__name__, "message": str(exc)}
            code = EXIT_NOT_CONVERGED
    _emit_text(rio.dump_json(doc), ns.out)
    if ns.figure:
        from .plotting import plot_curves

        orbits = [rec.samples for rec in report.per_value]
        plot_curves(ns.figure, orbits, [f"orbit of {v:.4g}" for v in report.singular_values], title=m.describe())
    return code


COMMANDS = {
    "trace": cmd_trace,
    "verify-landing": cmd_verify_landing,
    "render": cmd_render,
    "pullback": cmd_pullback,
    "analyze": cmd_analyze,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            raise UsageError("a command is required")
        return COMMANDS[ns.command](ns)
    except UsageError as exc:
        print(f"rayforge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        # reader closed early (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
