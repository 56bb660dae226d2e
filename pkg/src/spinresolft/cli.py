"""Command-line interface: ``spinresolft {simulate,fit,reproduce}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import GOLDEN_NMR, Scenario, ScenarioError
from .fitting import (
    FitError,
    fit_gaussian_center,
    fit_resolft_psf,
    fit_sinusoid_fixed_phase,
    fit_stretched_exponential,
    fit_two_peaks,
)
from .fitting.models import cosine_fixed_phase, gaussian_peak, stretched_exponential, two_gaussians
from .io import SchemaError, read_csv, write_csv
from .plotting import PlotSpec, save_svg
from .reproduce import FIGURES, SIMULATIONS, fit_nmr, readout_waist
from .sequences import build_hahn_echo, phase_per_tesla

log = logging.getLogger("spinresolft")

FIT_MODELS = ("gaussian", "two_peaks", "resolft_psf", "stretched_exponential", "sinusoid", "nmr_dip")
GOLDEN = {"@golden_nmr": GOLDEN_NMR}

# required (x, y) columns per model; a ``sigma`` column is used when present
_FIT_COLUMNS = {
    "gaussian": ("x_nm", "profile"),
    "two_peaks": ("x_nm", "profile"),
    "resolft_psf": ("x_nm", "profile"),
    "stretched_exponential": ("t_us", "contrast"),
    "sinusoid": ("current_ma", "contrast"),
    "nmr_dip": ("tau_ns", "contrast"),
}


def _header(scen: Scenario, what: str) -> dict:
    return {
        "spinresolft_version": __version__,
        "command": what,
        "seed": scen.seed,
        "scenario_sha256": scen.sha256,
        "units": "lengths nm, times us/ns as labelled, fields uT, currents mA",
    }


def _write_output(out: Path, name: str, result, scen: Scenario, fmt: str):
    out.mkdir(parents=True, exist_ok=True)
    header = _header(scen, name)
    for tname, cols in result.tables.items():
        write_csv(out / f"{tname}.csv", cols, header)
    if result.summary:
        summary = {"header": header, "summary": _plain(result.summary)}
        (out / f"{name}_summary.yaml").write_text(yaml.safe_dump(summary, sort_keys=True))
    if fmt == "csv+svg":
        for spec in result.plots:
            save_svg(out / f"{spec.table}.svg", spec, result.tables[spec.table])


def _plain(obj):
    """Convert numpy scalars for YAML."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)) and not isinstance(obj, bool):
        return int(obj)
    return obj


def _scenario(args) -> Scenario:
    scen = Scenario.load(args.scenario)
    if args.seed is not None:
        scen = scen.with_seed(args.seed)
    scen.seed  # noqa: B018  (raises if no seed is available)
    return scen


def cmd_simulate(args) -> int:
    scen = _scenario(args)
    result = SIMULATIONS[args.kind](scen)
    _write_output(Path(args.out), args.kind, result, scen, args.format)
    print(f"wrote {args.kind} to {args.out}")
    return 0


def cmd_reproduce(args) -> int:
    scen = _scenario(args)
    result = FIGURES[args.figure](scen)
    _write_output(Path(args.out) / args.figure, args.figure, result, scen, args.format)
    print(yaml.safe_dump(_plain(result.summary), sort_keys=True).rstrip())
    return 0


def _load_table(args):
    """Pick (x, y, sigma) from the input table.

    Column names default to the model's schema; a generic table with
    ``x``, ``y`` and optional ``sigma`` columns is accepted too.
    """
    path = GOLDEN.get(str(args.input), args.input)
    cols, _ = read_csv(path)
    xcol, ycol = _FIT_COLUMNS[args.model]
    xcol, ycol = args.x_col or xcol, args.y_col or ycol
    if xcol not in cols and ycol not in cols and not (args.x_col or args.y_col) and {"x", "y"} <= set(cols):
        xcol, ycol = "x", "y"
    missing = [c for c in (xcol, ycol) if c not in cols]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    scol = args.sigma_col or "sigma"
    if args.sigma_col and scol not in cols:
        raise SchemaError(f"{path}: missing column(s) {scol}")
    return cols[xcol], cols[ycol], cols.get(scol)


def cmd_fit(args) -> int:
    scen = _scenario(args)
    x, y, sigma = _load_table(args)
    o, im = scen["optics"], scen["imaging"]
    curve = None
    if args.model == "gaussian":
        res = fit_gaussian_center(x * 1e-9, y, sigma)
        curve = gaussian_peak(x * 1e-9, *res.values)
    elif args.model == "two_peaks":
        res = fit_two_peaks(x * 1e-9, y, sigma)
        curve = two_gaussians(x * 1e-9, *res.values)
    elif args.model == "resolft_psf":
        tau = (args.tau_d_us if args.tau_d_us is not None else im["tau_d_us"]) * 1e-6
        res = fit_resolft_psf(x * 1e-9, y, tau, o["doughnut_r0_nm"] * 1e-9, o["epsilon"], scen.rates(),
                              sigma, waist=readout_waist(scen))
    elif args.model == "stretched_exponential":
        res = fit_stretched_exponential(x * 1e-6, y, sigma)
        curve = stretched_exponential(x * 1e-6, *res.values)
    elif args.model == "sinusoid":
        m = scen["magnetometry"]
        f_ac = m["frequency_khz"] * 1e3
        w = phase_per_tesla(build_hahn_echo(1.0 / (2.0 * f_ac)), f_ac)
        res = fit_sinusoid_fixed_phase(x * 1e-3, y, sigma, phase_per_tesla=w,
                                       reference_current=m["reference_current_ma"] * 1e-3)
        curve = cosine_fixed_phase(x * 1e-3, *res.values)
    else:
        res = fit_nmr(scen, x * 1e-9, y, sigma)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = dict(_header(scen, f"fit {args.model}"), units="fit parameters in SI units (m, s, T)")
    doc = {"header": header, "fit": _plain(res.as_dict())}
    doc["fit"].pop("derived", None)
    derived = {k: v for k, v in res.extras.items() if np.isscalar(v)}
    if derived:
        doc["fit"]["derived"] = _plain(derived)
    (out / f"fit_{args.model}.yaml").write_text(yaml.safe_dump(doc, sort_keys=True))
    if args.format == "csv+svg" and curve is not None:
        xname, yname = _FIT_COLUMNS[args.model]
        cols = {xname: x, yname: y, "fit": curve}
        save_svg(out / f"fit_{args.model}.svg", PlotSpec("fit", xname, [yname, "fit"], styles=["o", "-"]), cols)
    for n, v, e in zip(res.names, res.values, res.errors):
        print(f"{n} = {v:.6g} +/- {e:.2g}")
    for k, v in derived.items():
        print(f"{k} = {v:.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinresolft", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--scenario", default=None,
                        help="scenario YAML (bare names resolve in $SPINRESOLFT_SCENARIO_DIR)")
        sp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        sp.add_argument("--out", default="out", help="output directory (default: out)")
        sp.add_argument("--format", choices=("csv", "csv+svg"), default="csv")

    s = sub.add_parser("simulate", help="simulate one dataset family")
    s.add_argument("kind", choices=sorted(SIMULATIONS))
    common(s)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="fit a model to a CSV table")
    f.add_argument("model", choices=FIT_MODELS)
    f.add_argument("input", help="CSV file, or @golden_nmr for the bundled NMR dataset")
    f.add_argument("--tau-d-us", type=float, default=None, help="doughnut duration for resolft_psf")
    f.add_argument("--x-col", default=None, help="x column (default depends on the model)")
    f.add_argument("--y-col", default=None, help="y column (default depends on the model)")
    f.add_argument("--sigma-col", default=None, help="uncertainty column (default: sigma, if present)")
    common(f)
    f.set_defaults(func=cmd_fit)

    r = sub.add_parser("reproduce", help="run a pinned figure recipe")
    r.add_argument("figure", choices=sorted(FIGURES))
    common(r)
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, SchemaError, FitError, ValueError, OSError) as exc:
        print(f"spinresolft: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
