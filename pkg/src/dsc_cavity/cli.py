"""Command-line front end writing plot-ready CSV or JSON.

Subcommands:
  spectrum   eigenfrequencies from the root solver next to the deep-coupling asymptotes
  field      quantum and classical mode profiles with their shape correlation
  fractions  matter fraction of the four lowest modes
  emission   spontaneous emission rate with the weak-coupling and plateau references
  xcheck     three-way spectrum comparison (root solver, Hopfield matrix, transfer matrix)

Frequencies are in units of omega_c, except gamma_el / gamma_ph and the emission outputs,
which are in units of omega_0. Sweeps run over omega_r / omega_0.

Exit codes: 0 success, 1 invalid input (and a failed xcheck), 2 numerical audit failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import hopfield, inputoutput, spectrum, transfermatrix
from .model import CONFIG_KEYS, ParameterError, SystemParams, load_config, params_from_config

EXIT_OK, EXIT_INVALID, EXIT_AUDIT = 0, 1, 2

OFF_CENTER_WALL = {"omega_0": 1.7, "l": 0.3}
CENTERED_WALL = {"omega_0": 1.0, "l": 0.5}
BASE_DEFAULTS = {"omega_r": 0.0, "n_modes": 200, "gamma_el": 0.05, "gamma_ph": 0.05, "damping_profile": "flat"}

COMMAND_DEFAULTS = {
    "spectrum": {**BASE_DEFAULTS, **OFF_CENTER_WALL},
    "field": {**BASE_DEFAULTS, **OFF_CENTER_WALL, "omega_r": 2 * 1.7, "n_modes": 400},
    "fractions": {**BASE_DEFAULTS, **OFF_CENTER_WALL},
    "emission": {**BASE_DEFAULTS, **CENTERED_WALL},
    "xcheck": {**BASE_DEFAULTS, **OFF_CENTER_WALL, "n_modes": 400},
}
DEFAULT_SWEEPS = {"fractions": "0:3:31", "emission": "0.001:3:40", "xcheck": "0:2:20"}

XCHECK_CLASSICAL_TOL = 1e-10
XCHECK_HB_TOL = 1e-6
XCHECK_MODES = 6
FIELD_MIN_CORRELATION = 0.99


class AuditFailure(RuntimeError):
    """A numerical check on the produced data did not pass."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class Sweep:
    start: float
    stop: float
    steps: int
    log: bool = False

    def values(self) -> np.ndarray:
        if self.log:
            return np.geomspace(self.start, self.stop, self.steps)
        return np.linspace(self.start, self.stop, self.steps)


def parse_sweep(text: str, log: bool = False) -> Sweep:
    try:
        a, b, n = text.split(":")
        sweep = Sweep(float(a), float(b), int(n), log)
    except ValueError:
        raise ParameterError(f"sweep {text!r} is not FROM:TO:STEPS") from None
    if not sweep.start < sweep.stop:
        raise ParameterError("sweep needs FROM < TO")
    if sweep.steps < 2:
        raise ParameterError("sweep needs STEPS >= 2")
    if log and sweep.start <= 0:
        raise ParameterError("logarithmic sweep needs FROM > 0")
    return sweep


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated list of integers") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON or YAML file with keys " + ", ".join(CONFIG_KEYS))
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--n-modes", type=int, help="photon-mode truncation N")
    common.add_argument("--sweep", help="omega_r/omega_0 grid FROM:TO:STEPS")
    common.add_argument("--log-sweep", action="store_true", help="space the sweep geometrically")
    common.add_argument("--ratio", type=float, help="single omega_r/omega_0 value (overrides the sweep)")
    common.add_argument("--omega-0", type=float, help="matter frequency, units of omega_c")
    common.add_argument("--l", type=float, help="wall position L_W/L_C")

    parser = _Parser(prog="dsc-cavity", description="Planar cavity with a dipole wall: spectra, fields, emission.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("spectrum", parents=[common], help="eigenfrequencies and asymptotes")
    p.add_argument("--count", type=int, default=6, help="number of lowest modes per point")
    p.add_argument("--convergence", action="store_true",
                   help="also diagonalize at N and 2N and report the drift of the first 10 eigenvalues")

    p = sub.add_parser("field", parents=[common], help="mode field profiles")
    p.add_argument("--modes", type=_int_list, default=[0, 1, 2, 3, 4, 5], help="mode indices, e.g. 0,1,2")
    p.add_argument("--z-points", type=int, default=201)

    sub.add_parser("fractions", parents=[common], help="matter fractions of the four lowest modes")

    p = sub.add_parser("emission", parents=[common], help="spontaneous emission rate")
    p.add_argument("--gamma-el", type=float, help="electronic loss, units of omega_0")
    p.add_argument("--gamma-ph", type=float, help="photonic loss, units of omega_0")
    p.add_argument("--profile", choices=("flat", "smooth_zero"))
    p.add_argument("--jobs", type=int, default=1, help="worker processes (0: all cores)")

    sub.add_parser("xcheck", parents=[common], help="compare the three spectrum routes")
    return parser


def resolve_config(args) -> tuple[dict, np.ndarray]:
    """Merge command defaults, the config file and flags; return the config and the ratio grid."""
    config = dict(COMMAND_DEFAULTS[args.command])
    if args.config is not None:
        config.update(load_config(args.config))
    for key, flag in (("n_modes", "n_modes"), ("omega_0", "omega_0"), ("l", "l"),
                      ("gamma_el", "gamma_el"), ("gamma_ph", "gamma_ph"), ("damping_profile", "profile")):
        value = getattr(args, flag, None)
        if value is not None:
            config[key] = value
    config = {k: config[k] for k in CONFIG_KEYS}
    params_from_config(config, {})  # validates

    if args.ratio is not None:
        ratios = np.array([args.ratio])
        config["omega_r"] = args.ratio * config["omega_0"]
    elif args.sweep is not None or args.command in DEFAULT_SWEEPS:
        log = args.log_sweep or (args.sweep is None and args.command == "emission")
        sweep = parse_sweep(args.sweep or DEFAULT_SWEEPS[args.command], log)
        ratios = sweep.values()
        config["sweep"] = {"from": sweep.start, "to": sweep.stop, "steps": sweep.steps, "log": sweep.log}
    else:
        ratios = np.array([config["omega_r"] / config["omega_0"]])
    if np.any(ratios < 0):
        raise ParameterError("omega_r/omega_0 must be >= 0")
    config["command"] = args.command
    return config, ratios


def check_writable(path: Path | None) -> None:
    if path is None:
        return
    target = path if path.exists() else path.parent.resolve()
    if path.is_dir() or not os.access(target, os.W_OK):
        raise ParameterError(f"cannot write to {path}")


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".15g")
    return str(value)


def render(config: dict, columns: list[str], rows: list[tuple], fmt: str) -> str:
    if fmt == "json":
        records = [{c: (float(v) if isinstance(v, (float, np.floating)) else v) for c, v in zip(columns, row)}
                   for row in rows]
        return json.dumps({"config": config, "columns": columns, "rows": records}, sort_keys=True, indent=1) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(config, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _params(config: dict) -> SystemParams:
    return params_from_config({k: config[k] for k in CONFIG_KEYS}, {})[0]


def cmd_spectrum(config, ratios, args):
    base = _params(config)
    columns = ["omega_r_over_omega_0", "mode", "omega_over_omega_c", "flag", "asymptotic_over_omega_c"]
    rows = []
    omega_max = (args.count + 1) * base.omega_c
    for ratio in ratios:
        p = base.with_ratio(float(ratio))
        result = spectrum.solve_spectrum(p, omega_max)
        asymptotes = spectrum.asymptotic_spectrum(p, args.count)
        for mu, root in enumerate(result.roots[: args.count]):
            rows.append((float(ratio), mu, root.omega, root.flag, asymptotes[mu]))
        if args.convergence:
            first = hopfield.frequencies(hopfield.polariton_modes(p))[:10]
            second = hopfield.frequencies(hopfield.polariton_modes(p.with_modes(2 * p.n_modes)))[:10]
            drift = float(np.max(np.abs(second - first) / second))
            print(f"convergence at omega_r/omega_0={ratio:g}: N={p.n_modes} -> {2 * p.n_modes},"
                  f" max relative drift of the first 10 eigenvalues {drift:.3e}", file=sys.stderr)
    return columns, rows


def _shape(values: np.ndarray) -> np.ndarray:
    peak = np.max(values)
    return values / peak if peak > 0 else values


def cmd_field(config, ratios, args):
    base = _params(config)
    if args.z_points < 2:
        raise ParameterError("--z-points must be >= 2")
    if not args.modes or min(args.modes) < 0:
        raise ParameterError("--modes must list non-negative indices")
    z = np.linspace(0.0, 1.0, args.z_points)
    columns = ["omega_r_over_omega_0", "mode", "omega_over_omega_c", "z_over_Lc", "intensity", "intensity_normalized",
               "quantum_abs_E_normalized", "classical_abs_E_normalized", "correlation"]
    rows = []
    worst = None
    for ratio in ratios:
        p = base.with_ratio(float(ratio))
        modes = hopfield.polariton_modes(p)
        top = max(args.modes)
        if top >= len(modes):
            raise ParameterError(f"mode {top} exceeds the {len(modes)} available modes")
        roots = transfermatrix.classical_spectrum(p, (top + 2) * p.omega_c)
        for mu in args.modes:
            omega = modes[mu].omega
            if abs(roots[mu] - omega) > 1e-6 * omega:
                raise AuditFailure(f"mode {mu}: classical root {roots[mu]:.9g} does not match {omega:.9g}")
            intensity, normalized = hopfield.field_profile(modes, mu, z)
            quantum = _shape(np.sqrt(intensity))
            classical = _shape(np.abs(transfermatrix.classical_field_profile(p, roots[mu], z)))
            if np.max(quantum) == 0:
                corr = float("nan")  # pure matter excitation, no field to compare
            else:
                corr = float(np.corrcoef(quantum, classical)[0, 1])
                if worst is None or corr < worst[0]:
                    worst = (corr, float(ratio), mu)
            for zi, i, n, q, c in zip(z, intensity, normalized, quantum, classical):
                rows.append((float(ratio), mu, omega, zi, i, n, q, c, corr))
    if worst is not None and worst[0] < FIELD_MIN_CORRELATION:
        raise AuditFailure(f"profile correlation {worst[0]:.4f} < {FIELD_MIN_CORRELATION}"
                           f" (omega_r/omega_0={worst[1]:g}, mode {worst[2]})", columns, rows)
    return columns, rows


def cmd_fractions(config, ratios, args):
    base = _params(config)
    columns = ["omega_r_over_omega_0"] + [f"chi_{mu}" for mu in range(4)]
    rows = []
    for ratio in ratios:
        modes = hopfield.polariton_modes(base.with_ratio(float(ratio)))
        rows.append((float(ratio), *[hopfield.matter_fraction(m) for m in modes[:4]]))
    return columns, rows


def cmd_emission(config, ratios, args):
    params, bath = params_from_config({k: config[k] for k in CONFIG_KEYS}, {})
    curve = inputoutput.emission_sweep(params, bath, ratios, jobs=args.jobs)
    if curve.failures:
        ratio, message = curve.failures[0]
        raise AuditFailure(f"omega_r/omega_0={ratio:g}: {message}")
    columns = ["omega_r_over_omega_0", "gamma_over_omega_0", "gamma_weak_coupling", "gamma_plateau", "quad_error"]
    return columns, [tuple(float(v) for v in row) for row in curve.rows()]


def spectrum_deviations(params: SystemParams, count: int = XCHECK_MODES) -> tuple[float, float]:
    """Max relative deviation of the first ``count`` modes: (root vs classical, root vs Hopfield)."""
    omega_max = (count + 1) * params.omega_c
    roots = spectrum.solve_spectrum(params, omega_max).omegas[:count]
    classical = transfermatrix.classical_spectrum(params, omega_max)[:count]
    hb = hopfield.frequencies(hopfield.polariton_modes(params))[:count]
    if len(classical) != len(roots):
        dev_cl = float("inf")
    else:
        dev_cl = float(np.max(np.abs(classical - roots) / roots))
    k = min(len(hb), len(roots))
    dev_hb = float(np.max(np.abs(hb[:k] - roots[:k]) / roots[:k])) if k == len(roots) else float("inf")
    return dev_cl, dev_hb


def cmd_xcheck(config, ratios, args):
    n_modes = config["n_modes"]
    if args.config is not None or args.omega_0 is not None or args.l is not None:
        sets = [{"omega_0": config["omega_0"], "l": config["l"]}]
    else:
        sets = [OFF_CENTER_WALL, CENTERED_WALL]
    config["parameter_sets"] = sets
    columns = ["omega_0", "l", "omega_r_over_omega_0", "dev_root_vs_classical", "dev_root_vs_hopfield"]
    rows = []
    for s in sets:
        for ratio in ratios:
            p = SystemParams.from_ratio(s["omega_0"], float(ratio), s["l"], n_modes=n_modes)
            rows.append((s["omega_0"], s["l"], float(ratio), *spectrum_deviations(p)))
    worst_cl = max(rows, key=lambda r: r[3])
    worst_hb = max(rows, key=lambda r: r[4])
    ok = worst_cl[3] < XCHECK_CLASSICAL_TOL and worst_hb[4] < XCHECK_HB_TOL
    summary = (f"xcheck {'PASS' if ok else 'FAIL'}: root vs classical {worst_cl[3]:.3e}"
               f" (limit {XCHECK_CLASSICAL_TOL:g}, worst at omega_0={worst_cl[0]:g}, l={worst_cl[1]:g},"
               f" omega_r/omega_0={worst_cl[2]:g}); root vs Hopfield N={n_modes} {worst_hb[4]:.3e}"
               f" (limit {XCHECK_HB_TOL:g}, worst at omega_0={worst_hb[0]:g}, l={worst_hb[1]:g},"
               f" omega_r/omega_0={worst_hb[2]:g})")
    return columns, rows, ok, summary


COMMANDS = {"spectrum": cmd_spectrum, "field": cmd_field, "fractions": cmd_fractions,
            "emission": cmd_emission, "xcheck": cmd_xcheck}

NUMERICAL_ERRORS = (spectrum.SpectrumAuditError, hopfield.HopfieldError, inputoutput.QuadratureError,
                    inputoutput.GreenFunctionError, AuditFailure, RuntimeError)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config, ratios = resolve_config(args)
        check_writable(args.out)
    except (ParameterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    try:
        result = COMMANDS[args.command](config, ratios, args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NUMERICAL_ERRORS as exc:
        if isinstance(exc, AuditFailure) and len(exc.args) == 3:
            _emit(render(config, exc.args[1], exc.args[2], args.format), args.out)
        print(f"audit failure: {exc.args[0]}", file=sys.stderr)
        return EXIT_AUDIT

    if args.command == "xcheck":
        columns, rows, ok, summary = result
        _emit(render(config, columns, rows, args.format), args.out)
        print(summary, file=sys.stderr if args.out is None else sys.stdout)
        return EXIT_OK if ok else EXIT_INVALID
    columns, rows = result
    _emit(render(config, columns, rows, args.format), args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
