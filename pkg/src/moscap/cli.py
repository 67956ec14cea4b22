"""Command-line front end: ``moscap <subcommand> ...``.

Data goes to stdout or ``--out``; every diagnostic goes to stderr.
Exit codes: 0 ok, 1 usage/parse error, 2 numerical non-convergence,
3 invalid physical input.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .device import PF, Kind, Polarity, Regime, SweepPlan
from .errors import ConvergenceError, MoscapError
from .extraction import (
    ThreePointMarkers,
    doping_profile_from_cv,
    extract_area,
    extract_doping_maxmin,
    extract_oxide_capacitance,
    extract_tox,
    fit_cv,
    junction_depth,
    markers_from_profile,
)
from .fileio import (
    format_extraction_result,
    parse_cv_csv,
    parse_profile_csv,
    parse_quantity,
    parse_stack_config_verbose,
    write_cv_csv,
    write_profile_csv,
    write_text_atomic,
)
from .model import c_min, flat_band_voltage, oxide_capacitance, threshold_voltage
from .plotting import comparison_svg, render_svg_plot, thickness_series_svg
from .sweep import REFERENCE_NAMES, comparison_table, simulate_sweep, thickness_series_curves

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_PHYSICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _styled(prefix: str) -> str:
    if os.environ.get("MOSCAP_NO_COLOR") or not sys.stderr.isatty():
        return prefix
    return f"\033[1;31m{prefix}\033[0m"


def _diag(message: str):
    print(message, file=sys.stderr)


def _emit(text: str, out):
    if out:
        write_text_atomic(out, text)
    else:
        sys.stdout.write(text)


def _quantity(dimension):
    def conv(text):
        try:
            return parse_quantity(text, dimension)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    conv.__name__ = dimension
    return conv


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_stack(path, verbose=False):
    stack, defaults = parse_stack_config_verbose(_read(path))
    if verbose:
        for key, value in defaults.items():
            _diag(f"default applied: {key} = {value!r}")
    return stack


def _line(name, value, unit, pf=False):
    extra = f" ({value / PF:.2f} pF)" if pf else ""
    return f"{name} = {value:.4g} {unit}{extra}"


# --- subcommands ---------------------------------------------------------------


def cmd_model(args):
    stack = _load_stack(args.stack, args.verbose)
    lines = [_line("C_ox", oxide_capacitance(stack.oxide), "F", pf=True)]
    if stack.kind is Kind.MOS:
        lines += [
            _line("V_fb", flat_band_voltage(stack), "V"),
            _line("V_T", threshold_voltage(stack), "V"),
            _line("C_min", c_min(stack), "F", pf=True),
        ]
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_sweep(args):
    stack = _load_stack(args.stack, args.verbose)
    plan = SweepPlan(args.start, args.stop, args.step, Regime(args.regime),
                     args.noise, args.seed, args.settle)
    if args.verbose:
        _diag(f"sweep: {plan.count} points, {plan.regime.value}, noise {plan.noise_sigma:g} F, seed {plan.seed}")
    _emit(write_cv_csv(simulate_sweep(stack, plan)), args.out)
    return EXIT_OK


def _cox_from(args):
    if args.cox is not None:
        return args.cox
    if args.csv is None:
        raise UsageError("give either --cox or --csv")
    pol = None if args.polarity == "none" else Polarity(args.polarity)
    return extract_oxide_capacitance(parse_cv_csv(_read(args.csv)), pol)


def cmd_extract(args):
    what = args.what
    if what == "junction":
        return _extract_junction(args)
    if what == "profile":
        if not args.csv or args.area is None:
            raise UsageError("extract profile needs --csv and --area")
        profile = doping_profile_from_cv(parse_cv_csv(_read(args.csv)), args.area, args.cox)
        _emit(write_profile_csv(profile), args.out)
        return EXIT_OK
    if args.values:
        raise UsageError(f"extract {what} takes no positional values")
    if what == "tox":
        if args.area is None:
            raise UsageError("extract tox needs --area")
        print(f"{extract_tox(_cox_from(args), args.area, args.epsilon_r):.6g} nm")
    elif what == "area":
        if args.tox is None:
            raise UsageError("extract area needs --tox")
        print(f"{extract_area(_cox_from(args), args.tox / 1e-7, args.epsilon_r):.6g} cm2")
    elif what == "doping":
        if args.area is None:
            raise UsageError("extract doping needs --area")
        if args.cmin is not None:
            cmin = args.cmin
        elif args.csv:
            cmin = float(parse_cv_csv(_read(args.csv)).capacitance.min())
        else:
            raise UsageError("give --cmin or --csv")
        print(f"{extract_doping_maxmin(_cox_from(args), cmin, args.area):.6g} per_cm3")
    return EXIT_OK


def _extract_junction(args):
    if args.profile:
        markers = markers_from_profile(parse_profile_csv(_read(args.profile)))
        _diag(f"markers: {markers.x1_onset:g} um, {markers.x2_minimum:g} um, {markers.x3_end:g} um")
    else:
        if len(args.values) != 3:
            raise UsageError("extract junction needs three marker depths in um (onset minimum end)")
        try:
            x = [_micrometres(v) for v in args.values]
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        markers = ThreePointMarkers(*x)
    print(f"{junction_depth(markers):.6g} um")
    return EXIT_OK


def _micrometres(text):
    # bare numbers are already um; suffixed lengths come back in cm
    if text[-1:].isalpha():
        return parse_quantity(text, "length") / 1e-4
    return float(text)


def cmd_fit(args):
    curve = parse_cv_csv(_read(args.csv))
    stack = _load_stack(args.stack, args.verbose)
    free = [s.strip() for s in args.free.split(",") if s.strip()]
    try:
        result = fit_cv(curve, stack, free, Regime(args.regime))
    except ConvergenceError as exc:
        if exc.best is not None:
            _emit(format_extraction_result(exc.best), args.out)
        raise
    _emit(format_extraction_result(result), args.out)
    if not result.converged:
        _diag(f"fit did not converge in {result.iterations} iterations")
        return EXIT_NUMERICAL
    if args.verbose:
        _diag(f"converged in {result.iterations} iterations, rms residual {result.residual_rms:.3g} F")
    return EXIT_OK


def cmd_plot(args):
    curves = [parse_cv_csv(_read(p)) for p in args.csv]
    labels = args.labels.split(",") if args.labels else [Path(p).stem for p in args.csv]
    svg = render_svg_plot(curves, (args.xlabel, args.ylabel), labels, args.title)
    _emit(svg, args.out)
    return EXIT_OK


def cmd_reference(args):
    names = [args.name] if args.name else list(REFERENCE_NAMES)
    rows = comparison_table(names)
    lines = ["series,t_ox_nm,published_pF,model_pF,deviation_pct"]
    for r in rows:
        lines.append(f"{r.series},{r.t_ox_nm:g},{r.published_pf:g},{r.model_pf:.4f},{100 * r.deviation:+.2f}")
    _emit("\n".join(lines) + "\n", args.out)
    if args.figures:
        outdir = Path(args.figures)
        outdir.mkdir(parents=True, exist_ok=True)
        for name in names:
            svg = thickness_series_svg(thickness_series_curves(name), title=name)
            write_text_atomic(outdir / f"{name}_cv.svg", svg)
        write_text_atomic(outdir / "thickness_comparison.svg", comparison_svg(rows))
        if args.verbose:
            _diag(f"figures written to {outdir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="moscap", description="MOS capacitor C-V modelling and parameter extraction.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="{model,sweep,extract,fit,plot,reference}",
                           parser_class=_Parser)
    sub.required = True

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("-v", "--verbose", action="store_true")
        sp.set_defaults(func=func)
        return sp

    sp = add("model", cmd_model, "Print C_ox, V_fb, V_T and C_min for a stack file.")
    sp.add_argument("stack")

    sp = add("sweep", cmd_sweep, "Simulate an instrument bias sweep and write C-V CSV.")
    sp.add_argument("stack")
    sp.add_argument("--start", type=float, default=-5.0)
    sp.add_argument("--stop", type=float, default=5.0)
    sp.add_argument("--step", type=float, default=0.1)
    sp.add_argument("--regime", default="high-frequency",
                    choices=[r.value for r in Regime if r is not Regime.RAW])
    sp.add_argument("--noise", type=_quantity("capacitance"), default=0.0,
                    help="noise sigma, e.g. 0.05pF (bare numbers are farads)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--settle", type=int, default=0, help="leading points to flag as settling")
    sp.add_argument("--out")

    sp = add("extract", cmd_extract, "Recover t_ox, area, doping, junction depth or a doping profile.")
    sp.add_argument("what", choices=["tox", "area", "doping", "junction", "profile"])
    sp.add_argument("values", nargs="*", help="junction: onset minimum end depths in um")
    sp.add_argument("--csv", help="C-V CSV to read")
    sp.add_argument("--profile", help="doping-profile CSV for automatic junction markers")
    sp.add_argument("--cox", type=_quantity("capacitance"))
    sp.add_argument("--cmin", type=_quantity("capacitance"))
    sp.add_argument("--area", type=_quantity("area"))
    sp.add_argument("--tox", type=_quantity("length"))
    sp.add_argument("--epsilon-r", type=float, default=3.9)
    sp.add_argument("--polarity", choices=["p", "n", "none"], default="p")
    sp.add_argument("--out")

    sp = add("fit", cmd_fit, "Least-squares fit of a stack to a measured C-V CSV.")
    sp.add_argument("csv")
    sp.add_argument("stack")
    sp.add_argument("--free", default="t_ox,doping", help="comma list from t_ox,doping,flat_band,area")
    sp.add_argument("--regime", default="high-frequency",
                    choices=[r.value for r in Regime if r is not Regime.RAW])
    sp.add_argument("--out")

    sp = add("plot", cmd_plot, "Render one or more C-V CSV files to SVG.")
    sp.add_argument("csv", nargs="+")
    sp.add_argument("--labels", help="comma-separated series labels")
    sp.add_argument("--xlabel", default="Gate voltage (V)")
    sp.add_argument("--ylabel", default="Capacitance (pF)")
    sp.add_argument("--title")
    sp.add_argument("--out")

    sp = add("reference", cmd_reference, "Compare the published thickness series with the model.")
    sp.add_argument("name", nargs="?", choices=list(REFERENCE_NAMES))
    sp.add_argument("--out")
    sp.add_argument("--figures", help="directory for SVG figures")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        _diag(str(exc).rstrip())
        return EXIT_USAGE
    except MoscapError as exc:
        _diag(f"{_styled('error:')} {exc}")
        return exc.exit_code
    except OSError as exc:
        _diag(f"{_styled('error:')} {exc}")
        return EXIT_USAGE
