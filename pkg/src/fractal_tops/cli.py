"""Command-line interface: ``fractal-tops <command> ...``.

Exit codes: 0 success, 1 a verification found violations, 2 usage error.
Files are written to ``--out``, else ``$FRACTAL_TOPS_OUT``, else ./fractal_tops_out.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .addresses import PriorityOrder
from .attractor import Raster, Viewport, save_png
from .catalog import builtin_names, resolve_ifs
from .config import OUT_ENV, load_config, output_dir
from .errors import FractalTopsError
from .render import COLOR_MODES, RenderStyle, render_overlay, render_tiling, render_top_field
from .verify import SUITES, Check, Session, run_suite

log = logging.getLogger("fractal_tops")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _session(args) -> Session:
    order = PriorityOrder.parse(args.order) if getattr(args, "order", None) else None
    return Session(resolve_ifs(args.ifs), args.cfg, order)


def _print_checks(checks: list[Check]) -> int:
    for c in checks:
        print(c.line())
    bad = sum(not c.ok for c in checks)
    print(f"{len(checks) - bad}/{len(checks)} checks passed")
    return 1 if bad else 0


def cmd_attractor(args) -> int:
    s = _session(args)
    path = args.outdir / f"{s.ifs.name}_attractor.png"
    save_png(s.base, path)
    print(f"{s.base.count} cells -> {path}")
    return 0


def cmd_top(args) -> int:
    s = _session(args)
    f = s.field(args.depth)
    words = s.top_words(args.depth)
    png, txt = render_top_field(f, args.outdir / f"{s.ifs.name}_tops_depth{args.depth}.png", words)
    print(words.listing(f.order), end="")
    print(f"{len(words)} top words -> {png}, {txt}")
    return 0


def _style(args) -> RenderStyle:
    return RenderStyle(
        color_mode=args.color_mode, photo=args.photo, stroke_width=args.stroke, labels=args.labels, resolution=args.render_resolution
    )


def cmd_tiling(args) -> int:
    s = _session(args)
    i = s.address(args.address)
    t = s.tiling(i, args.level)
    stem = args.outdir / f"{s.ifs.name}_tiling_{str(i).strip('()')}_k{args.level}"
    svg = render_tiling(t, _style(args), stem.with_suffix(".svg"), png=stem.with_suffix(".png"))
    stem.with_suffix(".tsv").write_text(t.manifest())
    print(f"{len(t)} tiles -> {svg}")
    return 0


def cmd_blowup(args) -> int:
    from .tiling import blowup_region

    s = _session(args)
    i = s.address(args.address)
    method = "push" if args.push else "pull"
    r = blowup_region(s.ifs, i, args.depth, s.base, method=method)
    path = args.outdir / f"{s.ifs.name}_blowup_{str(i).strip('()')}_n{args.depth}.png"
    save_png(r, path)
    print(f"A({i}|{args.depth}): {r.count} cells, viewport {r.viewport.lo}..{r.viewport.hi} -> {path}")
    return 0


def cmd_classify(args) -> int:
    from .tiling import classify_transition

    s = _session(args)
    i = s.address(args.address)
    k = args.level
    r = classify_transition(
        s.ifs, i, k, s.tiling(i, k), s.tiling(i, k + 1), threshold=s.cfg["containment_threshold"], strict=False
    )
    print(r.summary())
    for p, kids in sorted(r.children.items()):
        print(f"  parent {''.join(map(str, p)) or '-'} -> {[''.join(map(str, c)) for c in kids]}")
    print(f"  new tiles: {[''.join(map(str, w)) for w in r.new_tiles]}")
    for w in r.warnings:
        print(f"  warning: {w}")
    for v in r.violations:
        print(f"  violation: {v}")
    return 0 if r.ok else 1


def cmd_rifs(args) -> int:
    from .rifs import Window, example1, example2, fib_projection, forward_orbit, verify_invariance_window

    if args.example == "dyadic":
        rifs, seeds, window = example1(), [0, 1], Window.radius(args.window, 1)
    else:
        rifs, seeds, window = example2(), [(0, 0), (0, 1)], Window.radius(args.window)
    orbit = forward_orbit(rifs, seeds, window)
    inv = verify_invariance_window(rifs, orbit)
    print(f"{rifs.name}: {len(orbit)} points in window radius {args.window}")
    print(f"invariance on inner window: {'ok' if inv.ok else 'FAILED'} ({inv.checked} points checked)")
    csv = args.outdir / f"{rifs.name}_orbit.csv"
    csv.write_text(orbit.to_csv())
    print(f"orbit -> {csv}")
    if args.project:
        if args.example != "fib":
            raise UsageError("--project applies to the fib example")
        rep = fib_projection(orbit)
        print(rep.summary())
        lengths, counts = rep.generic()
        print(f"recurring gaps: {len(lengths)}" + (f", long/short = {lengths[-1] / lengths[0]:.12f}, count ratio = {counts[-1] / counts[0]:.4f}" if len(lengths) == 2 else ""))
    return 0 if inv.ok else 1


def cmd_fastbasin(args) -> int:
    from .rifs import fast_basin

    s = _session(args)
    lo, hi = s.base.bbox()
    mid, half = (lo + hi) / 2, (hi - lo).max() * args.window / 2
    vp = Viewport.square_cells(mid - half, mid + half, args.render_resolution)
    basin = fast_basin(s.ifs, vp, args.depth, s.base)
    a = Raster(vp, s.base.sample(vp.centers()))
    path = render_overlay([(basin, (60, 60, 160)), (a, (200, 40, 40))], args.outdir / f"{s.ifs.name}_fast_basin.png")
    print(f"{basin.count} basin cells -> {path}")
    return 0


def cmd_verify(args) -> int:
    names = SUITES if args.suite == "all" else (args.suite,)
    s = _session(args) if args.ifs else None
    if s is None and any(n != "rifs" for n in names):
        if args.suite != "all":
            raise UsageError(f"suite {args.suite} needs --ifs")
        names = ("rifs",)
    checks = []
    for n in names:
        print(f"== {n}")
        got = run_suite(n, s, depth=args.depth, addresses=args.address or None)
        for c in got:
            print(c.line())
        checks += got
    bad = sum(not c.ok for c in checks)
    print(f"{len(checks) - bad}/{len(checks)} checks passed")
    return 1 if bad else 0


def cmd_figures(args) -> int:
    from .figures import generate_all

    files = generate_all(args.outdir, args.cfg)
    print(f"{len(files)} files -> {args.outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fractal-tops", description="Fractal tops, tilings and reverse IFS experiments.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--config", help="JSON file overriding the defaults")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./fractal_tops_out)")
    p.add_argument("--workers", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--resolution", type=int, help="2D raster cells per axis")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    ifs_help = f"JSON file or builtin name ({', '.join(builtin_names())})"

    def with_ifs(sp, required=True):
        sp.add_argument("--ifs", required=required, help=ifs_help)
        sp.add_argument("--order", help='priority order, highest first, e.g. "2>1"')
        return sp

    def with_style(sp):
        sp.add_argument("--color-mode", choices=COLOR_MODES, default="address-hash")
        sp.add_argument("--photo", help="image for photo-sample colouring")
        sp.add_argument("--stroke", type=float, default=0.0)
        sp.add_argument("--labels", action="store_true", help="print tile addresses")
        sp.add_argument("--render-resolution", type=int, default=512)
        return sp

    with_ifs(sub.add_parser("attractor", help="raster of the attractor")).set_defaults(func=cmd_attractor)
    sp = with_ifs(sub.add_parser("top", help="top field and top words at one depth"))
    sp.add_argument("--depth", type=int, required=True)
    sp.set_defaults(func=cmd_top)
    sp = with_style(with_ifs(sub.add_parser("tiling", help="partial tiling of a blowup")))
    sp.add_argument("--address", default="(1)", help='eventually periodic address, e.g. "(12)"')
    sp.add_argument("--level", type=int, required=True)
    sp.set_defaults(func=cmd_tiling)
    sp = with_ifs(sub.add_parser("blowup", help="raster of f_{-i|n}(A)"))
    sp.add_argument("--address", default="(1)")
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--push", action="store_true", help="push base cells forward (dust-like attractors)")
    sp.set_defaults(func=cmd_blowup)
    sp = with_ifs(sub.add_parser("classify", help="children and new tiles between levels k and k+1"))
    sp.add_argument("--address", default="(1)")
    sp.add_argument("--level", type=int, required=True)
    sp.set_defaults(func=cmd_classify)
    sp = sub.add_parser("rifs", help="reverse IFS examples on lattices")
    sp.add_argument("--example", choices=("dyadic", "fib"), required=True)
    sp.add_argument("--window", type=int, default=40, help="window radius")
    sp.add_argument("--project", action="store_true", help="project the fib orbit onto y = rho x")
    sp.set_defaults(func=cmd_rifs)
    sp = with_ifs(sub.add_parser("fastbasin", help="part of the fast basin around A"))
    sp.add_argument("--depth", type=int, default=4)
    sp.add_argument("--window", type=float, default=4.0, help="window size in units of A's box")
    sp.add_argument("--render-resolution", type=int, default=512)
    sp.set_defaults(func=cmd_fastbasin)
    sp = with_ifs(sub.add_parser("verify", help="run verification suites"), required=False)
    sp.add_argument("--suite", choices=SUITES + ("all",), default="all")
    sp.add_argument("--depth", type=int)
    sp.add_argument("--address", action="append", help="address for theorem5/reversible (repeatable)")
    sp.set_defaults(func=cmd_verify)
    sub.add_parser("figures", help="regenerate the figure set").set_defaults(func=cmd_figures)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        args.cfg = load_config(args.config, workers=args.workers, seed=args.seed, resolution=args.resolution)
        args.outdir = Path(output_dir(args.out))
        return args.func(args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 2
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    except (FractalTopsError, ValueError, KeyError, OSError) as e:
        print(f"fractal-tops: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
