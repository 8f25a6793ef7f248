"""``sim`` command line: run, sweep, demo, report and export."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis as an
from . import config as cfgmod
from .devices import Dc, Pwl
from .engine import (
    SimOptions, SimulationError, assemble, dc_operating_point, dc_sweep, log_points,
    response_sweep, sweepable_sources, transient,
)
from .netlist import (
    BUILTINS, NetlistError, ValidationError, builtin, parse, parse_value, reset_pulse,
    serialize,
)
from .plotting import line_plot
from .report import aligned, sweep_table, transient_table, write_csv

log = logging.getLogger("pixsim")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2

LOG_FIT_RANGE = (1e-9, 1e-6)
RESPONSE_RANGE = (1e-11, 1e-5)
RESPONSE_PPD = 8
T_SAMPLE = 20.9e-6              # end of the first frame, just before the next reset
CYCLE = (1e-6, 21e-6)           # one reset period starting at the first reset edge
DEMO_IPH = 100e-9
CYCLE_TSTOP = 41e-6
RESET_SETTLE = 0.5e-6           # 10% of the reset width
LINLOG_BUILTINS = ("pixel_4t_linlog", "pixel_3tm")
NOTE_UNITS = "area unit printed as pm^2 in the source table; interpreted as um^2"
NOTE_POWER = ("the source table lists 3T-M above 4T in power, which contradicts "
              "its own prose claim that the memristor lowers power; absolute values "
              "depend on unpublished device cards")


class UserError(Exception):
    """Bad input or flags; maps to exit code 1."""


@dataclass
class RunManifest:
    command: str
    source: str
    overrides: dict
    outdir: str
    files: list = field(default_factory=list)
    duration_s: float = 0.0

    def emit(self, path: Path) -> Path:
        self.files.append(str(path))
        return path

    def write(self):
        missing = [f for f in self.files if not Path(f).exists()]
        if missing:
            raise RuntimeError(f"manifest lists missing files: {missing}")
        out = Path(self.outdir) / "manifest.json"
        out.write_text(json.dumps(dataclasses.asdict(self), indent=2) + "\n")


# --------------------------------------------------------------------------
# input helpers


def _value(text: str) -> float:
    try:
        return parse_value(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def load_circuit(args):
    if getattr(args, "builtin", None):
        if args.builtin not in BUILTINS:
            raise UserError(f"unknown builtin {args.builtin!r}; valid: {', '.join(BUILTINS)}")
        iph = args.iph if getattr(args, "iph", None) is not None else 10e-9
        c = builtin(args.builtin, iph=iph)
        label = f"builtin:{args.builtin}"
    elif getattr(args, "netlist", None):
        path = Path(args.netlist)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise UserError(f"cannot read netlist {path}: {exc.strerror or exc}") from None
        except UnicodeDecodeError as exc:
            raise UserError(f"{path}: not UTF-8 text ({exc.reason})") from None
        try:
            c = parse(text, name=path.stem)
        except NetlistError as exc:
            raise UserError(f"{path}:{exc.line}:{exc.column}: {exc.message}") from None
        if getattr(args, "iph", None) is not None:
            for d in c.devices:
                if d.kind == "YPD":
                    c = c.replace_device(d.name, card=dataclasses.replace(d.card, iph=Dc(args.iph)))
        label = str(path)
    else:
        raise UserError("give a netlist path or --builtin NAME")
    if getattr(args, "card_config", None):
        c = cfgmod.apply_card_overrides(c, _read_config(args.card_config))
    return c, label


def _read_config(path):
    try:
        return cfgmod.load_config(path)
    except OSError as exc:
        raise UserError(f"cannot read config {path}: {exc.strerror or exc}") from None


def _system(c):
    try:
        return assemble(c)
    except ValidationError as exc:
        raise UserError(f"{c.name}: invalid circuit: {exc}") from None


def _options(args) -> SimOptions:
    kw = {}
    for name in ("reltol", "abstol", "vtol", "lte_tol"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    if getattr(args, "integrator", None):
        kw["integrator"] = args.integrator
    if getattr(args, "max_iters", None) is not None:
        if args.max_iters < 1:
            raise UserError("--max-iters must be >= 1")
        kw["max_newton_iters"] = args.max_iters
    return SimOptions(**kw)


def _outdir(args) -> Path:
    out = Path(args.outdir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UserError(f"cannot create output directory {out}: {exc.strerror or exc}") from None
    return out


def _write_transient(man, out: Path, stem: str, tr, nodes=None, title=""):
    header, rows = transient_table(tr)
    man.emit(write_csv(out / f"{stem}.csv", header, rows))
    nodes = nodes or [l for l in tr.labels if not l.startswith("i(")]
    series = [(f"v({n})", tr.time * 1e6, tr.node(n)) for n in nodes]
    man.emit(line_plot(out / f"{stem}.svg", series, "time (us)", "voltage (V)", title))


# --------------------------------------------------------------------------
# commands


def cmd_run(args, man) -> int:
    c, _ = load_circuit(args)
    sys_ = _system(c)
    opts = _options(args)
    out = _outdir(args)
    if args.op:
        sol = dc_operating_point(sys_, opts)
        rows = [(lab, f"{v:.9g}") for lab, v in zip(sys_.labels, sol.x)]
        rows += [(f"x({m.lower()})", f"{x:.9g}") for m, x in sol.states.items()]
        print(aligned(rows, ["unknown", "value"]))
        man.emit(write_csv(out / f"{c.name}_op.csv", ["unknown", "value"],
                           zip(sys_.labels, sol.x)))
        return EXIT_OK
    tran = args.tran or c.analyses.get("tran")
    if not tran:
        raise UserError("no analysis: pass --op or --tran DT TSTOP (or add .tran to the netlist)")
    dt, tstop = tran
    if not (0 < dt <= tstop):
        raise UserError("--tran needs 0 < dt <= tstop")
    opts = dataclasses.replace(opts, dt_initial=dt, dt_max=max(dt, tstop / 50), dt_min=None)
    tr = transient(sys_, tstop, opts)
    _write_transient(man, out, f"{c.name}_tran", tr, title=c.name)
    print(f"{c.name}: {tr.time.size} time points, t = 0 .. {tstop:g} s")
    return EXIT_OK


def _sweep_report(sw, node: str, fit_range) -> list:
    lines = []
    try:
        fit = an.fit_log_slope(sw, node, fit_range)
        lines.append(f"log fit v({node}) over {fit.fit_range[0]:.3g}..{fit.fit_range[1]:.3g} A: "
                     f"slope {fit.log_slope:.2f} mV/dec, intercept {fit.log_intercept:.4f} V, "
                     f"r2 {fit.r_squared:.5f}")
    except an.AnalysisError as exc:
        lines.append(f"log fit: {exc}")
    try:
        k = an.detect_knee(sw, node)
        lines.append(f"knee v({node}): {k.knee_current:.3e} A, linear r2 {k.linear_r2:.5f}, "
                     f"log r2 {k.log_r2:.5f}")
    except an.AnalysisError as exc:
        lines.append(f"knee: {exc}")
    try:
        lines.append(f"dynamic range v({node}): {an.dynamic_range_db(sw, node):.1f} dB")
    except an.AnalysisError as exc:
        lines.append(f"dynamic range: {exc}")
    return lines


def _do_sweep(c, source, values, mode, t_sample, opts, jobs):
    sys_ = _system(c)
    if mode == "response":
        return response_sweep(sys_, source, values, t_sample, opts, jobs=jobs)
    return dc_sweep(sys_, source, values, opts, jobs=jobs)


def _write_sweep(man, out, stem, sw, node, title, report_lines):
    header, rows = sweep_table(sw)
    man.emit(write_csv(out / f"{stem}.csv", header, rows))
    ok = sw.converged
    man.emit(line_plot(out / f"{stem}.svg", [(f"v({node})", sw.values[ok], sw.node(node)[ok])],
                       "photocurrent (A)", "voltage (V)", title, logx=True))
    text = "\n".join(report_lines) + "\n"
    man.emit(out / f"{stem}_report.txt").write_text(text)
    print(text, end="")


def cmd_sweep(args, man) -> int:
    c, _ = load_circuit(args)
    sources = sweepable_sources(c)
    if args.source is None:
        pds = [d.name for d in c.devices if d.kind == "YPD"]
        if len(pds) == 1:
            sources = pds + [s for s in sources if s != pds[0]]
        elif len(sources) != 1:
            raise UserError(f"--source required; valid: {', '.join(sources)}")
        args.source = sources[0]
    if args.source.lower() not in [s.lower() for s in sources]:
        raise UserError(f"unknown source {args.source!r}; valid: {', '.join(sources) or 'none'}")
    if not (0 < args.start < args.stop):
        raise UserError("need 0 < --from < --to")
    if args.ppd < 1:
        raise UserError("--ppd must be >= 1")
    mode = args.mode
    if mode == "auto":
        mode = "response" if c.name in LINLOG_BUILTINS else "dc"
    values = log_points(args.start, args.stop, args.ppd)
    sw = _do_sweep(c, args.source, values, mode, args.t_sample, _options(args), args.jobs)
    if args.node not in sw.labels:
        raise UserError(f"unknown node {args.node!r}")
    out = _outdir(args)
    lines = [f"{c.name}: {mode} sweep of {args.source}, {values.size} points, "
             f"{int((~sw.converged).sum())} failed"]
    lines += _sweep_report(sw, args.node, args.fit_range or LOG_FIT_RANGE)
    _write_sweep(man, out, f"{c.name}_sweep", sw, args.node, c.name, lines)
    return EXIT_OK if sw.converged.any() else EXIT_NUMERIC


# ---- demos


def fig3_illumination() -> Pwl:
    """Photocurrent steps 1 nA -> 10 nA -> 100 nA -> 1 uA after reset release."""
    return Pwl(((0.0, 1e-9), (8e-6, 1e-9), (8.01e-6, 1e-8), (11e-6, 1e-8),
                (11.01e-6, 1e-7), (14e-6, 1e-7), (14.01e-6, 1e-6)))


def swing_comparison(opts=SimOptions()):
    """Transients of the 3T log and 2T-M pixels under the same steps, with swings."""
    pulse = reset_pulse()
    tstop = T_SAMPLE
    results = {}
    for name in ("pixel_3t_log", "pixel_2tm"):
        tr = transient(_system(builtin(name, iph=fig3_illumination())), tstop, opts)
        mask = an.mask_for(tr, an.post_reset_windows(pulse, tstop, settle=RESET_SETTLE))
        results[name] = (tr, an.output_swing(tr, "out", mask))
    return results


def demo_fig3(args, man, out):
    res = swing_comparison(_options(args))
    series = []
    for name, (tr, swing) in res.items():
        header, rows = transient_table(tr)
        man.emit(write_csv(out / f"fig3_{name}.csv", header, rows))
        series.append((f"{name} v(out)", tr.time * 1e6, tr.node("out")))
    man.emit(line_plot(out / "fig3.svg", series, "time (us)", "voltage (V)",
                       "3T log vs 2T-M transient"))
    s3, s2 = res["pixel_3t_log"][1], res["pixel_2tm"][1]
    text = (f"swing pixel_3t_log: {s3:.4f} V\nswing pixel_2tm: {s2:.4f} V\n"
            f"swing ratio 2T-M/3T: {s2 / s3:.3f}\n")
    man.emit(out / "fig3_swing.txt").write_text(text)
    print(text, end="")


def linlog_response(name, opts=SimOptions(), jobs=1, ppd=RESPONSE_PPD):
    values = log_points(*RESPONSE_RANGE, ppd)
    return response_sweep(_system(builtin(name)), "PD", values, T_SAMPLE, opts, jobs=jobs)


def demo_sweep(args, man, out, fig, name):
    sw = linlog_response(name, _options(args), args.jobs)
    lines = [f"{name}: integrating response sampled at {T_SAMPLE * 1e6:g} us"]
    lines += _sweep_report(sw, "out", LOG_FIT_RANGE)
    _write_sweep(man, out, fig, sw, "out", f"{name} photoresponse", lines)


def operation_cycle(name, opts=SimOptions(), iph=DEMO_IPH):
    return transient(_system(builtin(name, iph=iph)), CYCLE_TSTOP, opts)


def cycle_checks(tr, node="out"):
    """(max deviation below the cycle maximum while reset is high,
    slope sign changes after release) for the first full cycle."""
    pulse = reset_pulse()
    v = tr.node(node)
    cyc = tr.window(*CYCLE)
    vmax = v[cyc].max()
    high = an.mask_for(tr, an.reset_high_windows(pulse, CYCLE[1], settle=RESET_SETTLE)) & cyc
    deviation = float(vmax - v[high].min())
    release = pulse.delay + pulse.rise + pulse.width + pulse.fall
    post = tr.window(release, CYCLE[1])
    d = np.diff(v[post])
    s = np.sign(d[np.abs(d) > 1e-9])
    changes = int(np.sum(s[1:] != s[:-1]))
    return deviation, changes


def demo_cycle(args, man, out, fig, name):
    tr = operation_cycle(name, _options(args))
    _write_transient(man, out, fig, tr, nodes=["rst", "pd", "out"], title=f"{name} operation cycle")
    dev, changes = cycle_checks(tr)
    text = (f"{name}: Iph {DEMO_IPH:g} A; reset-high OUT within {dev * 1e3:.1f} mV of cycle max; "
            f"{changes} slope sign changes after release\n")
    man.emit(out / f"{fig}_checks.txt").write_text(text)
    print(text, end="")


def cmd_demo(args, man) -> int:
    out = _outdir(args)
    fig = args.figure
    if fig == "fig3":
        demo_fig3(args, man, out)
    elif fig == "fig6":
        demo_sweep(args, man, out, fig, "pixel_3tm")
    elif fig == "fig7":
        demo_cycle(args, man, out, fig, "pixel_3tm")
    elif fig == "fig8":
        demo_sweep(args, man, out, fig, "pixel_4t_linlog")
    elif fig == "fig9":
        demo_cycle(args, man, out, fig, "pixel_4t_linlog")
    return EXIT_OK


# ---- report


def table1_reports(area_cfg: dict | None, opts=SimOptions()):
    reports = []
    for name in ("pixel_3tm", "pixel_4t_linlog"):
        c = builtin(name)
        rules = cfgmod.area_config(area_cfg, name) if area_cfg is not None else an.AreaConfig()
        area = an.area_report(c, rules)
        tr = transient(_system(c), CYCLE[1], opts)
        power = an.average_power(tr, c, window=CYCLE)
        reports.append(an.PixelReport(name, avg_power=power, total_area=area.total_um2,
                                      area_rows=area.rows))
    return reports


def cmd_report(args, man) -> int:
    out = _outdir(args)
    area_cfg = None
    if args.area_config:
        area_cfg = _read_config(args.area_config)
    try:
        reports = table1_reports(area_cfg, _options(args))
    except an.MissingGeometry as exc:
        raise UserError(f"area config {args.area_config}: missing rule for kind '{exc.kind}'") from None
    comp = an.compare_pixels(reports)
    rows = []
    for r, ar, pr, _, _ in comp.rows():
        rows.append((r.name, f"{r.total_area:.2f}", f"{r.avg_power * 1e3:.6f}",
                     f"{ar:.4f}", f"{pr:.3f}"))
    text = aligned(rows, ["pixel", "area_um2", "power_mW", "area_ratio", "power_ratio"])
    notes = [NOTE_UNITS]
    if area_cfg is None:
        notes.append("areas use default per-kind rules and are NOT calibrated to the table")
    p3, p4 = reports[0].avg_power, reports[1].avg_power
    order = "matches" if p3 > p4 else "does NOT match"
    notes.append(f"simulated power ordering P(3T-M) {'>' if p3 > p4 else '<='} P(4T) "
                 f"{order} the table's 0.00376 vs 0.000605 mW")
    notes.append(NOTE_POWER)
    text += "\n" + "\n".join(f"note: {n}" for n in notes) + "\n"
    print(text, end="")
    man.emit(write_csv(out / "table1.csv",
                       ["pixel", "area_um2", "power_W", "area_ratio", "power_ratio"],
                       [(r.name, r.total_area, r.avg_power, ar, pr)
                        for r, ar, pr, _, _ in comp.rows()]))
    man.emit(out / "table1.txt").write_text(text)
    return EXIT_OK


def cmd_export(args, man) -> int:
    if args.builtin not in BUILTINS:
        raise UserError(f"unknown builtin {args.builtin!r}; valid: {', '.join(BUILTINS)}")
    path = Path(args.path)
    try:
        path.write_text(serialize(builtin(args.builtin)), encoding="utf-8")
    except OSError as exc:
        raise UserError(f"cannot write {path}: {exc.strerror or exc}") from None
    man.emit(path)
    print(f"wrote {path}")
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing


def _common(p, inputs=True):
    if inputs:
        p.add_argument("netlist", nargs="?", help="netlist file (.cir)")
        p.add_argument("--builtin", help=f"builtin circuit: {', '.join(BUILTINS)}")
        p.add_argument("--iph", type=_value, help="photocurrent override (A)")
        p.add_argument("--card-config", help="model-card override file")
    p.add_argument("--outdir", default=".", help="output directory (default: .)")
    p.add_argument("--integrator", choices=("trap", "be"))
    p.add_argument("--reltol", type=_value)
    p.add_argument("--abstol", type=_value)
    p.add_argument("--vtol", type=_value)
    p.add_argument("--lte-tol", dest="lte_tol", type=_value)
    p.add_argument("--max-iters", dest="max_iters", type=int, help="Newton iteration limit")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UserError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sim", description="Pixel circuit simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="operating point or transient analysis")
    _common(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--tran", nargs=2, type=_value, metavar=("DT", "TSTOP"))
    g.add_argument("--op", action="store_true")

    p = sub.add_parser("sweep", help="photocurrent sweep with fits")
    _common(p)
    p.add_argument("--source")
    p.add_argument("--from", dest="start", type=_value, default=1e-10)
    p.add_argument("--to", dest="stop", type=_value, default=1e-5)
    p.add_argument("--ppd", type=int, default=10, help="points per decade")
    p.add_argument("--node", default="out")
    p.add_argument("--mode", choices=("auto", "dc", "response"), default="auto")
    p.add_argument("--t-sample", dest="t_sample", type=_value, default=T_SAMPLE)
    p.add_argument("--fit-range", nargs=2, type=_value, metavar=("LO", "HI"))
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("demo", help="reproduce a figure")
    p.add_argument("figure", choices=("fig3", "fig6", "fig7", "fig8", "fig9"))
    _common(p, inputs=False)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("report", help="area/power comparison table")
    p.add_argument("table", choices=("table1",))
    p.add_argument("--area-config")
    _common(p, inputs=False)

    p = sub.add_parser("export", help="write a builtin as a netlist")
    p.add_argument("--builtin", required=True)
    p.add_argument("path")
    return ap


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "demo": cmd_demo,
            "report": cmd_report, "export": cmd_export}


def main(argv=None) -> int:
    start = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    source = getattr(args, "netlist", None) or getattr(args, "builtin", None) or \
        getattr(args, "figure", None) or getattr(args, "table", "")
    man = RunManifest(args.command, str(source),
                      {k: v for k, v in vars(args).items()
                       if v is not None and k not in ("command", "netlist", "outdir")},
                      getattr(args, "outdir", "."))
    try:
        code = COMMANDS[args.command](args, man)
    except (UserError, cfgmod.ConfigError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SimulationError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.command != "export" and code == EXIT_OK:
        man.duration_s = round(time.perf_counter() - start, 3)
        man.write()
    return code


if __name__ == "__main__":
    sys.exit(main())
