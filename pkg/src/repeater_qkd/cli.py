"""Scenario runner: computes rate breakdowns, parameter sweeps, optimizer
and root-finder results, and canned reproduction targets, writing CSV/JSON
plus companion plot scripts.

Output conventions
------------------
* ``rate`` prints one flat JSON object with keys ``P_S``, ``P_M_1..P_M_n``,
  ``P_click``, ``P_error``, ``P_C``, ``P_E``, ``epsilon_Q``, ``H_term``,
  ``R_ent_per_s``, ``R_qkd_bits_per_s``, ``undefined_qber``.
* CSV sweeps use the header
  ``L_km, n, detector, eta, p, P_S, P_M_1..P_M_n, P_click, qber,
  R_qkd_bits_per_s`` (P_M columns up to the largest n in the file).
* Exit codes: 0 success, 2 infeasible scenario or model-validity violation,
  1 configuration error.

Config files are flat ``key=value`` text with keys named after SystemParams
fields; ``--param KEY=VALUE`` flags override file values.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import analysis
from .detection import NRPD, PNRD
from .errors import (BracketEndError, ImpossibleOutcomeError,
                     ModelValidityError, NoCrossoverError,
                     NoFeasiblePointError, RepeaterError, UndefinedQberError)
from .params import SystemParams
from .rates import key_rate

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2


class ConfigError(Exception):
    pass


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SystemParams)}


def _coerce(key: str, raw: str):
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown parameter {key!r}")
    raw = raw.strip()
    if key == "detector":
        return raw.lower()
    if key in ("n", "n_max"):
        return int(raw)
    if key == "drop_p_squared":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"bad boolean {raw!r} for {key}")
    if key == "multimode_modes":
        if raw.lower() in ("none", ""):
            return None
        return int(raw)
    if raw.lower() in ("inf", "infinity"):
        return math.inf
    return float(raw)


def load_config(path: str) -> dict:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, raw = line.split("=", 1)
        values[key.strip()] = _coerce(key.strip(), raw)
    return values


def build_params(args) -> SystemParams:
    values = {}
    if args.config:
        values.update(load_config(args.config))
    for item in args.param or []:
        if "=" not in item:
            raise ConfigError(f"--param needs KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        values[key.strip()] = _coerce(key.strip(), raw)
    if args.detector:
        values["detector"] = args.detector
    try:
        return SystemParams(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# -- CSV helpers -------------------------------------------------------------

def _csv_header(max_n: int):
    head = ["L_km", "n", "detector", "eta", "p", "P_S"]
    head += [f"P_M_{k}" for k in range(1, max_n + 1)]
    head += ["P_click", "qber", "R_qkd_bits_per_s"]
    return head


def _csv_row(params: SystemParams, rb, max_n: int):
    row = [f"{params.L:.6g}", str(params.n), params.detector,
           f"{params.eta:.6g}", f"{params.p:.6g}", f"{rb.P_S:.12g}"]
    for k in range(max_n):
        row.append(f"{rb.P_M_list[k]:.12g}" if k < len(rb.P_M_list) else "")
    qber = "" if math.isnan(rb.epsilon_Q) else f"{rb.epsilon_Q:.12g}"
    row += [f"{rb.P_click:.12g}", qber, f"{rb.R_QKD:.12g}"]
    return row


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path}")


def _eval_scenario(task):
    protocol, params = task
    try:
        return key_rate(params, protocol)
    except (ModelValidityError, ImpossibleOutcomeError):
        return None


def _map_scenarios(tasks, jobs: int):
    if jobs <= 1:
        return [_eval_scenario(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_eval_scenario, tasks))


# -- plot script emission ----------------------------------------------------

_PLOT_TEMPLATE = '''\
"""Plot {title} from {csv_name} (run from this directory)."""
import csv
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("{csv_name}")))
curves = defaultdict(list)
for r in rows:
    y = float(r["{ycol}"]) if r["{ycol}"] else 0.0
    curves[{key_expr}].append((float(r["{xcol}"]), y))

fig, ax = plt.subplots(figsize=(6, 4.2))
for label in sorted(curves):
    pts = sorted(curves[label])
    ax.plot([x for x, _ in pts], [y for _, y in pts], marker=".", label=str(label))
ax.set_xlabel("{xlabel}")
ax.set_ylabel("{ylabel}")
{yscale}
ax.legend(fontsize=8)
ax.grid(True, which="both", alpha=0.3)
fig.tight_layout()
fig.savefig("{png_name}", dpi=150)
print("wrote {png_name}")
'''


def _emit_plot(out: Path, target: str, csv_name: str, xcol: str, ycol: str,
               key_expr: str, xlabel: str, ylabel: str, logy: bool = True):
    script = _PLOT_TEMPLATE.format(
        title=target, csv_name=csv_name, xcol=xcol, ycol=ycol,
        key_expr=key_expr, xlabel=xlabel, ylabel=ylabel,
        yscale='ax.set_yscale("log")' if logy else "",
        png_name=f"{target}.png",
    )
    path = out / f"{target}_plot.py"
    path.write_text(script)
    print(f"wrote {path}")


# -- subcommands -------------------------------------------------------------

def cmd_rate(args) -> int:
    params = build_params(args)
    rb = key_rate(params, protocol=args.protocol)
    payload = rb.to_json_dict()
    text = json.dumps(payload, indent=2)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "rate.json").write_text(text + "\n")
    return EXIT_OK


def _sweep_values(spec: str):
    try:
        key, grid = spec.split("=", 1)
        lo_s, hi_s, step_s = grid.split(":")
        lo, hi, step = float(lo_s), float(hi_s), float(step_s)
    except ValueError as exc:
        raise ConfigError(f"--sweep needs KEY=LO:HI:STEP, got {spec!r}") from exc
    if step <= 0 or hi < lo:
        raise ConfigError(f"empty sweep grid {spec!r}")
    values = []
    x = lo
    while x <= hi + 1e-12 * max(abs(hi), 1.0):
        values.append(min(x, hi))
        x += step
    return key.strip(), values


def cmd_scan(args) -> int:
    params = build_params(args)
    key, values = _sweep_values(args.sweep)
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown sweep parameter {key!r}")
    tasks = []
    scanned = []
    for v in values:
        coerced = int(round(v)) if key in ("n", "n_max") else v
        try:
            scanned.append(params.replace(**{key: coerced}))
            tasks.append((args.protocol, scanned[-1]))
        except (ValueError, ModelValidityError):
            continue
    if not tasks:
        raise ConfigError("sweep grid contains no valid points")
    results = _map_scenarios(tasks, args.jobs)
    max_n = max(p.n for p in scanned)
    rows = [_csv_row(p, rb, max_n) for p, rb in zip(scanned, results) if rb]
    out = Path(args.out)
    _write_csv(out / "scan.csv", _csv_header(max_n), rows)
    return EXIT_OK


def cmd_optimize_eta(args) -> int:
    params = build_params(args)
    eta, rate = analysis.optimize_eta(params)
    print(json.dumps({"eta_opt": eta, "R_qkd_bits_per_s": rate}, indent=2))
    return EXIT_OK


def cmd_cutoff_p(args) -> int:
    params = build_params(args)
    eta = args.eta if args.eta is not None else None
    pstar = analysis.cutoff_p(params, eta=eta)
    print(json.dumps({"p_cutoff": pstar}, indent=2))
    return EXIT_OK


def cmd_crossover(args) -> int:
    params = build_params(args)
    L = analysis.crossover_distance(params, args.n_low)
    print(json.dumps({"n_low": args.n_low, "n_high": args.n_low + 1,
                      "crossover_km": L}, indent=2))
    return EXIT_OK


def cmd_security_distance(args) -> int:
    params = build_params(args)
    try:
        L = analysis.security_distance(params)
        capped = False
    except BracketEndError as exc:
        L, capped = exc.bound, True
    print(json.dumps({"L_max_km": L, "capped_at_bracket": capped}, indent=2))
    return EXIT_OK


def cmd_min_t2(args) -> int:
    params = build_params(args)
    t2 = analysis.min_coherence_time(params, params.L)
    print(json.dumps({"T2_min_s": t2}, indent=2))
    return EXIT_OK


def cmd_compare_dlcz(args) -> int:
    params = build_params(args)
    p_grid = [float(x) for x in args.p_grid.split(",") if x]
    if not p_grid:
        raise ConfigError("empty --p-grid")
    distances = None
    if args.distances:
        distances = [float(x) for x in args.distances.split(",") if x]
    records = analysis.compare_dlcz_sps(params, p_grid, distances)
    out = Path(args.out)
    rows = [[f"{r['L_km']:.6g}", f"{r['p']:.6g}", f"{r['sps_rate']:.12g}",
             f"{r['dlcz_rate']:.12g}", f"{r['ratio']:.12g}"] for r in records]
    _write_csv(out / "compare_dlcz.csv",
               ["L_km", "p", "sps_rate", "dlcz_rate", "ratio"], rows)
    return EXIT_OK


# -- reproduction targets ----------------------------------------------------

def _repro_fig6(params: SystemParams, out: Path, jobs: int):
    base = params.replace(p=1e-3, L=250.0)
    etas = [round(0.04 + 0.02 * k, 4) for k in range(44)]
    scanned, tasks = [], []
    for det in (PNRD, NRPD):
        for n in (0, 1):
            for eta in etas:
                scanned.append(base.replace(detector=det, n=n, eta=eta))
                tasks.append(("sps", scanned[-1]))
    results = _map_scenarios(tasks, jobs)
    rows = [_csv_row(p, rb, 1) for p, rb in zip(scanned, results) if rb]
    _write_csv(out / "fig6.csv", _csv_header(1), rows)
    _emit_plot(out, "fig6", "fig6.csv", "eta", "R_qkd_bits_per_s",
               '(r["detector"], r["n"])', "source splitting eta",
               "secret key rate (bit/s per memory)")


def _repro_fig7(params: SystemParams, out: Path, jobs: int):
    base = params.replace(L=250.0)
    p_values = [10 ** (-5 + 0.15 * k) for k in range(25)]
    scanned, tasks = [], []
    for det in (PNRD, NRPD):
        for n in (0, 1):
            eta = analysis.level_eta(base.replace(detector=det), n)
            for p in p_values:
                scanned.append(base.replace(detector=det, n=n, eta=eta, p=p))
                tasks.append(("sps", scanned[-1]))
    results = _map_scenarios(tasks, jobs)
    rows = [_csv_row(p, rb, 1) for p, rb in zip(scanned, results) if rb]
    _write_csv(out / "fig7a.csv", _csv_header(1), rows)
    _emit_plot(out, "fig7a", "fig7a.csv", "p", "R_qkd_bits_per_s",
               '(r["detector"], r["n"])', "double-photon probability p",
               "secret key rate (bit/s per memory)")

    cut_rows = []
    for det in (PNRD, NRPD):
        for n in (0, 1):
            eta = analysis.level_eta(base.replace(detector=det), n)
            for d_c in (0.0, 2.5e-7, 5e-7, 7.5e-7, 1e-6):
                try:
                    pstar = analysis.cutoff_p(
                        base.replace(detector=det, n=n, d_c=d_c), eta=eta)
                except RepeaterError:
                    continue
                cut_rows.append([f"{d_c:.6g}", str(n), det, f"{eta:.6g}",
                                 f"{pstar:.8g}"])
    _write_csv(out / "fig7b.csv", ["d_c", "n", "detector", "eta", "p_cutoff"],
               cut_rows)
    _emit_plot(out, "fig7b", "fig7b.csv", "d_c", "p_cutoff",
               '(r["detector"], r["n"])', "dark count per gate d_c",
               "cutoff double-photon probability", logy=False)


def _repro_fig8(params: SystemParams, out: Path, jobs: int):
    base = params.replace(p=1e-4, d_c=1e-7)
    rows = []
    for n_low in (0, 1, 2):
        for eta_s in (0.15, 0.3, 0.5, 0.7, 0.9):
            point = base.replace(eta_0=1.0, eta_D=eta_s)
            try:
                L = analysis.crossover_distance(point, n_low)
            except RepeaterError:
                continue
            rows.append([f"{eta_s:.6g}", str(n_low), str(n_low + 1),
                         f"{L:.1f}"])
    _write_csv(out / "fig8.csv", ["eta_s", "n_low", "n_high", "crossover_km"],
               rows)
    _emit_plot(out, "fig8", "fig8.csv", "eta_s", "crossover_km",
               '(r["n_low"], r["n_high"])', "measurement efficiency eta_s",
               "crossover distance (km)", logy=False)


def _repro_fig9(params: SystemParams, out: Path, jobs: int):
    base = params.replace(detector=NRPD, p=1e-3)
    scanned, tasks = [], []
    for t2 in (0.010, 0.100):
        for n in (0, 1):
            eta = analysis.level_eta(base, n)
            for L in range(50, 520, 15):
                scanned.append(base.replace(T2=t2, n=n, eta=eta, L=float(L)))
                tasks.append(("sps", scanned[-1]))
    results = _map_scenarios(tasks, jobs)
    rows = []
    for p, rb in zip(scanned, results):
        if rb:
            rows.append([f"{p.T2:.6g}"] + _csv_row(p, rb, 1))
    _write_csv(out / "fig9a.csv", ["T2_s"] + _csv_header(1), rows)
    _emit_plot(out, "fig9a", "fig9a.csv", "L_km", "R_qkd_bits_per_s",
               '(r["T2_s"], r["n"])', "distance (km)",
               "secret key rate (bit/s per memory)")

    scanned, tasks = [], []
    t2_values = [10 ** (-3 + 0.1 * k) for k in range(21)]
    for n in (0, 1):
        eta = analysis.level_eta(base, n)
        for t2 in t2_values:
            scanned.append(base.replace(T2=t2, n=n, eta=eta, L=250.0))
            tasks.append(("sps", scanned[-1]))
    results = _map_scenarios(tasks, jobs)
    rows = []
    for p, rb in zip(scanned, results):
        if rb:
            rows.append([f"{p.T2:.6g}"] + _csv_row(p, rb, 1))
    _write_csv(out / "fig9b.csv", ["T2_s"] + _csv_header(1), rows)
    _emit_plot(out, "fig9b", "fig9b.csv", "T2_s", "R_qkd_bits_per_s",
               'r["n"]', "dephasing time T2 (s)",
               "secret key rate (bit/s per memory)")


def _repro_fig10(params: SystemParams, out: Path, jobs: int):
    base = params.replace(d_c=0.0)
    distances = [float(L) for L in range(50, 650, 50)]
    rows = []
    for p in (1e-4, 2e-3, 4e-3):
        records = analysis.compare_dlcz_sps(base, [p], distances)
        for rec in records:
            rows.append([f"{rec['L_km']:.6g}", f"sps_p={p:g}",
                         f"{rec['sps_rate']:.12g}"])
    for rec in analysis.compare_dlcz_sps(base, [base.p], distances):
        rows.append([f"{rec['L_km']:.6g}", "dlcz", f"{rec['dlcz_rate']:.12g}"])
    _write_csv(out / "fig10.csv", ["L_km", "curve", "rate_bits_per_s"], rows)
    _emit_plot(out, "fig10", "fig10.csv", "L_km", "rate_bits_per_s",
               'r["curve"]', "distance (km)",
               "secret key rate (bit/s per memory)")


def _repro_table2(params: SystemParams, out: Path, jobs: int):
    rows = []
    for det in (PNRD, NRPD):
        for n in range(4):
            point = params.replace(detector=det, L=250.0, p=1e-3)
            p_used = 1e-3
            try:
                eta, rate = analysis.optimize_eta(point.replace(n=n))
            except NoFeasiblePointError:
                # beyond this level's cutoff at p=1e-3; optimum is
                # p-insensitive below the cutoff, so step p down
                eta = analysis.level_eta(point, n)
                p_used = None
                rate = math.nan
            rows.append([str(n), det, f"{eta:.4f}",
                         "" if p_used is None else f"{p_used:g}",
                         "" if math.isnan(rate) else f"{rate:.6g}"])
    _write_csv(out / "table2.csv",
               ["n", "detector", "eta_opt", "p", "R_qkd_bits_per_s"], rows)


def _repro_table3(params: SystemParams, out: Path, jobs: int):
    rows = []
    for n in range(4):
        point = params.replace(detector=PNRD, L=250.0, n=n)
        eta = analysis.level_eta(point, n)
        pstar = analysis.cutoff_p(point, eta=eta)
        rows.append([str(n), f"{eta:.4f}", f"{pstar:.6g}"])
    _write_csv(out / "table3.csv", ["n", "eta", "p_cutoff"], rows)


_REPRO_TARGETS = {
    "fig6": _repro_fig6,
    "fig7": _repro_fig7,
    "fig8": _repro_fig8,
    "fig9": _repro_fig9,
    "fig10": _repro_fig10,
    "table2": _repro_table2,
    "table3": _repro_table3,
}


def cmd_reproduce(args) -> int:
    params = build_params(args)
    target = args.target.lower()
    if target not in _REPRO_TARGETS:
        raise ConfigError(
            f"unknown target {args.target!r}; choose from "
            f"{sorted(_REPRO_TARGETS)}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _REPRO_TARGETS[target](params, out, args.jobs)
    return EXIT_OK


# -- entry point -------------------------------------------------------------

def _add_common(parser):
    parser.add_argument("--config", help="flat key=value parameter file")
    parser.add_argument("--param", action="append", metavar="KEY=VALUE",
                        help="override one parameter (repeatable)")
    parser.add_argument("--detector", choices=[PNRD, NRPD])
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker processes for grid evaluation")
    parser.add_argument("--protocol", choices=["sps", "dlcz"], default="sps")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repeater-qkd",
        description="Secret-key rates per memory for QKD over probabilistic "
                    "quantum repeaters")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("rate", help="one rate breakdown as JSON")
    _add_common(sp)
    sp.set_defaults(func=cmd_rate)

    sp = sub.add_parser("scan", help="sweep one named parameter to CSV")
    _add_common(sp)
    sp.add_argument("--sweep", required=True, metavar="KEY=LO:HI:STEP")
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("optimize-eta", help="optimal source splitting")
    _add_common(sp)
    sp.set_defaults(func=cmd_optimize_eta)

    sp = sub.add_parser("cutoff-p", help="largest feasible double-photon p")
    _add_common(sp)
    sp.add_argument("--eta", type=float, help="fix eta instead of optimizing")
    sp.set_defaults(func=cmd_cutoff_p)

    sp = sub.add_parser("crossover", help="distance where level n+1 wins")
    _add_common(sp)
    sp.add_argument("--n-low", type=int, default=0)
    sp.set_defaults(func=cmd_crossover)

    sp = sub.add_parser("security-distance", help="largest feasible distance")
    _add_common(sp)
    sp.set_defaults(func=cmd_security_distance)

    sp = sub.add_parser("min-t2", help="smallest feasible coherence time")
    _add_common(sp)
    sp.set_defaults(func=cmd_min_t2)

    sp = sub.add_parser("compare-dlcz", help="photon-source vs ensemble rates")
    _add_common(sp)
    sp.add_argument("--p-grid", default="1e-4,5e-4,1e-3,2e-3,4e-3,8e-3")
    sp.add_argument("--distances", help="comma list of distances (km)")
    sp.set_defaults(func=cmd_compare_dlcz)

    sp = sub.add_parser("reproduce", help="canned figure/table configs")
    _add_common(sp)
    sp.add_argument("target", help="fig6|fig7|fig8|fig9|fig10|table2|table3")
    sp.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ModelValidityError as exc:
        print(f"model validity: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NoFeasiblePointError, NoCrossoverError, ImpossibleOutcomeError,
            UndefinedQberError) as exc:
        print(f"infeasible scenario: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except BracketEndError as exc:
        print(f"bracket end: {exc} (bound {exc.bound:g})", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
