"""Command-line interface.

Exit status: 0 success, 2 invalid input or configuration, 3 numerical failure,
4 failed verification.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import CrossKerrError, InvalidParameterError, NumericalError, ValidationError
from .noise_theory import mc_higher_power_dc_concentration, noise_quanta_bound
from .operator_algebra import (build_blocks, classical_pump_V, solve_UV_general, solve_V_closed,
                               verify_reduction)
from .params import (DEFAULT_L, EXAMPLE_CONFIG, SystemParams, load_config, normalize,
                     system_params_from_mapping)
from .spectra import (DEFAULT_POINTS, DEFAULT_RANGE, build_variation, higher_order_spectrum,
                      linearized_spectrum, make_grid, output_spectrum, reflectivity, symmetrize)
from .steady_state import nonlinearity_measure, solve_pump, steady_state_at
from .time_domain import estimate_psd, integrate_variations, output_trace

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 4

SCHEMES = ("higher-order", "linearized")
FORMATS = ("csv", "json")
SWEEP_RANGE_W = (4e-18, 4e-15)
SWEEP_POINTS = 50
UNITS = "w = omega/(2 Omega) normalized frequency; tau = 2 Omega t; power in W"

log = logging.getLogger("crosskerr")


@dataclass
class RunConfig:
    params: SystemParams
    L: int = DEFAULT_L
    grid_range: tuple = DEFAULT_RANGE
    grid_points: int = DEFAULT_POINTS
    sweep_range: tuple = SWEEP_RANGE_W
    sweep_points: int = SWEEP_POINTS
    scheme: str = "higher-order"
    out: Optional[str] = None
    fmt: str = "csv"
    seed: int = 0
    n_bar: Optional[float] = None

    def __post_init__(self):
        if self.grid_points < 2:
            raise InvalidParameterError("grid points must be >= 2")
        if not self.grid_range[0] < self.grid_range[1]:
            raise InvalidParameterError("grid range must be increasing")
        lo, hi = self.sweep_range
        if not 0 < lo < hi:
            raise InvalidParameterError("sweep range must be positive and increasing")
        if self.sweep_points < 2:
            raise InvalidParameterError("sweep needs at least two points")
        if self.scheme not in SCHEMES:
            raise InvalidParameterError(f"scheme must be one of {SCHEMES}")
        if self.fmt not in FORMATS:
            raise InvalidParameterError(f"format must be one of {FORMATS}")
        if self.n_bar is not None and self.n_bar < 0:
            raise InvalidParameterError("n_bar must be >= 0")

    def describe(self) -> dict:
        d = asdict(self)
        d["params"] = {k: v for k, v in asdict(self.params).items()}
        d.pop("out")
        return d


# --- config resolution ------------------------------------------------------------

def resolve_config(args: argparse.Namespace) -> RunConfig:
    raw = load_config(args.config) if args.config else {}
    mapping = dict(EXAMPLE_CONFIG)
    if "params" in raw:
        mapping.update(raw["params"])
        # a loss rate given in the file replaces the example's quality factor
        for rate, q in (("pump_loss_hz", "pump_q"), ("probe_loss_hz", "probe_q")):
            if rate in raw["params"] and q not in raw["params"]:
                mapping.pop(q, None)
    if args.power is not None:
        mapping["power_w"] = args.power
    params = system_params_from_mapping(mapping)
    grid = raw.get("grid", {})
    sweep = raw.get("sweep", {})
    run = raw.get("run", {})

    def pick(cli_value, table, key, default):
        return cli_value if cli_value is not None else table.get(key, default)

    return RunConfig(
        params=params,
        L=int(pick(args.L, run, "L", DEFAULT_L)),
        grid_range=tuple(pick(args.grid_range, grid, "range", DEFAULT_RANGE)),
        grid_points=int(pick(args.grid_points, grid, "points", DEFAULT_POINTS)),
        sweep_range=tuple(pick(getattr(args, "sweep_range", None), sweep, "range_w", SWEEP_RANGE_W)),
        sweep_points=int(pick(getattr(args, "sweep_points", None), sweep, "points", SWEEP_POINTS)),
        scheme=pick(args.scheme, run, "scheme", "higher-order"),
        out=args.out,
        fmt=pick(args.format, run, "format", "csv"),
        seed=int(pick(args.seed, run, "seed", 0)),
        n_bar=pick(args.n_bar, run, "n_bar", None),
    )


# --- output ---------------------------------------------------------------------------

def header_lines(command: str, cfg: RunConfig, columns: Sequence[str] = ()) -> list[str]:
    lines = [f"crosskerr {__version__}", f"command: {command}",
             "config: " + json.dumps(cfg.describe(), sort_keys=True), f"units: {UNITS}"]
    if columns:
        lines.append("columns: " + ", ".join(columns))
    return lines


def _open(path: Optional[str]):
    if path is None:
        return _Stdout()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="")


class _Stdout:
    def __enter__(self):
        return sys.stdout

    def __exit__(self, *exc):
        sys.stdout.flush()


def write_table(path, command, cfg, columns, rows, fmt="csv"):
    if fmt == "json":
        record = {"header": header_lines(command, cfg), "columns": list(columns),
                  "rows": [[_jsonable(v) for v in row] for row in rows]}
        write_record(path, record)
        return
    with _open(path) as fh:
        for line in header_lines(command, cfg, columns):
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_record(path, record):
    with _open(path) as fh:
        json.dump(record, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


# --- subcommands ----------------------------------------------------------------------

def _steady_state(cfg: RunConfig):
    p = normalize(cfg.params, cfg.L)
    if cfg.n_bar is not None:
        return p, steady_state_at(cfg.n_bar, p)
    return p, solve_pump(p)


def cmd_steady_state(cfg: RunConfig, args) -> int:
    p, ss = _steady_state(cfg)
    record = {"xi": p.xi, "alpha": p.alpha, "beta": p.beta, "lam": p.lam, "gamma1": p.gamma1,
              **ss.as_dict()}
    if cfg.fmt == "json":
        write_record(cfg.out, {"header": header_lines("steady-state", cfg), "result": record})
    else:
        keys = list(record)
        write_table(cfg.out, "steady-state", cfg, keys, [[record[k] for k in keys]])
    return EXIT_OK


def sweep_rows(cfg: RunConfig):
    powers = np.geomspace(*cfg.sweep_range, cfg.sweep_points)
    rows = []
    for P in powers:
        p = normalize(cfg.params.with_power(float(P)), cfg.L)
        ss = solve_pump(p)
        rows.append([float(P), p.xi, ss.n_bar, ss.m_bar, nonlinearity_measure(ss)])
    return rows


def cmd_sweep(cfg: RunConfig, args) -> int:
    write_table(cfg.out, "sweep", cfg, ["P_op", "xi", "n_bar", "m_bar", "measure"],
                sweep_rows(cfg), cfg.fmt)
    return EXIT_OK


def cmd_spectra(cfg: RunConfig, args) -> int:
    p, ss = _steady_state(cfg)
    grid = make_grid(*cfg.grid_range, cfg.grid_points)
    if cfg.scheme == "linearized":
        s_bb = linearized_spectrum(ss, p, grid)
        s_dd = np.full(grid.n_points, np.nan)
    else:
        dd, s_bb = higher_order_spectrum(ss, p, grid)
        s_dd = dd.values
    sym = symmetrize(s_bb).values
    rows = zip(grid.w, s_dd, s_bb.values, sym)
    write_table(cfg.out, "spectra", cfg, ["w", "S_DD", "S_BB", "Sbar_BB"], rows, cfg.fmt)
    return EXIT_OK


def cmd_reflectivity(cfg: RunConfig, args) -> int:
    if cfg.scheme != "higher-order":
        raise InvalidParameterError("reflectivity is defined for the higher-order scheme only")
    p, ss = _steady_state(cfg)
    grid = make_grid(*cfg.grid_range, cfg.grid_points)
    R, T = reflectivity(build_variation(ss, p), grid)
    Rbar = symmetrize(R).values
    write_table(cfg.out, "reflectivity", cfg, ["w", "R", "Rbar", "T"],
                zip(grid.w, R.values, Rbar, T.values), cfg.fmt)
    return EXIT_OK


def cmd_time_sim(cfg: RunConfig, args) -> int:
    p, ss = _steady_state(cfg)
    vs = build_variation(ss, p)
    seeds = [cfg.seed + k for k in range(args.seeds)]
    outputs = []
    out = Path(cfg.out) if cfg.out else None
    for seed in seeds:
        tr = integrate_variations(vs, args.dt, args.steps, seed=seed)
        o = output_trace(vs, tr)
        outputs.append(o)
        if out is not None and args.trace_stride > 0:
            sl = slice(None, None, args.trace_stride)
            x = tr.states[:-1, args.channel][sl]
            write_table(str(out.with_name(f"{out.stem}_trace{seed}.csv")), "time-sim", cfg,
                        ["tau", "re", "im", "out_re", "out_im"],
                        zip(tr.tau[:-1][sl], x.real, x.imag,
                            o.states[sl, args.channel].real, o.states[sl, args.channel].imag))
    psd = estimate_psd(outputs, channel=args.channel, nperseg=args.nperseg,
                       window="hann" if args.nperseg else "boxcar")
    keep = (psd.w >= cfg.grid_range[0]) & (psd.w <= cfg.grid_range[1])
    w = psd.w[keep]
    analytic = output_spectrum(vs, w, channel=args.channel)
    write_table(cfg.out, "time-sim", cfg, ["w", "psd", "stderr", "analytic"],
                zip(w, psd.values[keep], psd.meta["stderr"][keep], analytic), cfg.fmt)
    return EXIT_OK


def cmd_noise_theory(cfg: RunConfig, args) -> int:
    table = noise_quanta_bound(12)
    report = mc_higher_power_dc_concentration(2, args.samples, seed=cfg.seed)
    if cfg.fmt == "json":
        write_record(cfg.out, {"header": header_lines("noise-theory", cfg),
                               "bounds": [{"j": j, "bound": b} for j, b in table],
                               "dc_report": report.as_dict()})
    else:
        write_table(cfg.out, "noise-theory", cfg, ["j", "bound"], table)
        print(json.dumps(report.as_dict(), sort_keys=True), file=sys.stderr)
    return EXIT_OK


def verification_report(cfg: RunConfig) -> dict:
    p = normalize(cfg.params, max(cfg.L, 3))
    bs = build_blocks(p)
    rm = solve_UV_general(bs)
    rep = verify_reduction(bs, rm)
    closed = solve_V_closed(p)
    classical = classical_pump_V(p)
    record = rep.as_dict()
    record["closed_form_V_difference"] = float(np.abs(closed - rm.V).max())
    record["classical_decoupling_residual"] = classical.decoupling_residual
    tol = rep.tolerance * rep.scale
    record["closed_form_V_matches"] = record["closed_form_V_difference"] < tol
    record["classical_decoupled"] = classical.decoupling_residual < tol
    record["passed"] = bool(rep.passed and record["closed_form_V_matches"]
                            and record["classical_decoupled"])
    return record


def cmd_verify(cfg: RunConfig, args) -> int:
    record = verification_report(cfg)
    write_record(cfg.out, {"header": header_lines("verify", cfg), "report": record})
    return EXIT_OK if record["passed"] else EXIT_VERIFY


COMMANDS = {
    "steady-state": cmd_steady_state,
    "sweep": cmd_sweep,
    "spectra": cmd_spectra,
    "reflectivity": cmd_reflectivity,
    "time-sim": cmd_time_sim,
    "noise-theory": cmd_noise_theory,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file with [params], [grid], [sweep], [run] tables")
    common.add_argument("--power", type=float, help="override input power P_op [W]")
    common.add_argument("--n-bar", type=float, help="fix the pump population instead of solving for it")
    common.add_argument("--L", type=int, help="truncation order (blocks)")
    common.add_argument("--scheme", choices=SCHEMES)
    common.add_argument("--grid-range", type=float, nargs=2, metavar=("A", "B"))
    common.add_argument("--grid-points", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="crosskerr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"crosskerr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "steady-state": "mean-field pump and probe populations",
        "sweep": "steady state over a log-spaced range of input powers",
        "spectra": "probe noise spectral densities on a frequency grid",
        "reflectivity": "reflectivity and transmissivity on a frequency grid",
        "time-sim": "Euler-Maruyama traces and their averaged periodogram",
        "noise-theory": "higher-power noise bounds and Monte-Carlo DC report",
        "verify": "exact-reduction residual report",
    }
    subs = {name: sub.add_parser(name, parents=[common], help=h) for name, h in helps.items()}
    subs["sweep"].add_argument("--sweep-range", type=float, nargs=2, metavar=("PMIN", "PMAX"),
                               help="power range [W], log-spaced")
    subs["sweep"].add_argument("--sweep-points", type=int)
    ts = subs["time-sim"]
    ts.add_argument("--dt", type=float, default=1e-3)
    ts.add_argument("--steps", type=int, default=100_000)
    ts.add_argument("--seeds", type=int, default=8)
    ts.add_argument("--channel", type=int, default=0, choices=(0, 1, 2))
    ts.add_argument("--nperseg", type=int, default=None, help="Welch segment length")
    ts.add_argument("--trace-stride", type=int, default=0,
                    help="write every k-th sample of each trace (0: no trace files)")
    subs["noise-theory"].add_argument("--samples", type=int, default=1_000_000)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CrossKerrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
