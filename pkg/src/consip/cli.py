"""Command-line entry point.

Exit codes: 0 ok, 1 assertion or verification failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from consip.config import ConfigError, apply_overrides, dump_config, load_config
from consip.fsm import ConsistencyError
from consip.metrics import export_pdf_cdf, histogram_csv, pdf_cdf_csv, plateau_masses
from consip.simulator import (
    LATENCY_COLUMNS,
    POWER_COLUMNS,
    YEAR_S,
    ScenarioConfig,
    fmt3,
    ie_size_sweep,
    latency_cells,
    paired_sweep,
    placement_experiment,
    power_cells,
    run,
    table1_row,
)
from consip.verifier import MAX_HORIZON, MUTANTS, ExchangeScript, random_soak, verify

T_UPDATES = (7.5, 15.0, 30.0, 60.0, 120.0, 240.0)
T_APPS = (30.0, 5.0)
IE_SIZES = (16, 14, 12, 10, 8)

TABLE1_COLUMNS = ("listing", "t_app_s", "t_update_min", "n_nu") + POWER_COLUMNS + ("delta_pct",) + LATENCY_COLUMNS + ("duration_years",)
EXCHANGE_COLUMNS = ("latency", "mu_d", "sigma_d", "d_min", "d_p99", "d_p99_9", "d_max")


class UsageError(Exception):
    pass


def _csv(columns: Sequence[str], rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


class Output:
    """Output directory; refuses to clobber files unless ``force``."""

    def __init__(self, path: Optional[str], default: str, force: bool):
        self.dir = Path(path or default)
        self.force = force
        self.written: list[Path] = []

    def write(self, name: str, text: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        p = self.dir / name
        if p.exists() and not self.force:
            raise UsageError(f"{p} exists; pass --force to overwrite")
        p.write_text(text)
        self.written.append(p)
        return p


def _scenario(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.duration_years is not None:
        cfg = replace(cfg, duration=args.duration_years * YEAR_S)
    if args.set:
        cfg = apply_overrides(cfg, args.set)
    cfg.validate()
    return cfg


def _exchange_rows(r) -> list[dict]:
    rows = []
    for name, s in (("d_SW", r.d_sw), ("d_DL", r.d_dl), ("d_tot", r.d_tot)):
        row = {"latency": name}
        if s is None:
            row.update(dict.fromkeys(EXCHANGE_COLUMNS[1:], ""))
        else:
            row.update(
                mu_d=fmt3(s.mean), sigma_d=fmt3(s.stddev), d_min=fmt3(s.min),
                d_p99=fmt3(s.p99), d_p99_9=fmt3(s.p999), d_max=fmt3(s.max),
            )
        rows.append(row)
    return rows


def _print_table(columns: Sequence[str], rows: Sequence[dict]) -> None:
    widths = [max(len(c), *(len(str(r.get(c, ""))) for r in rows)) for c in columns]
    print("  ".join(c.rjust(w) for c, w in zip(columns, widths)))
    for r in rows:
        print("  ".join(str(r.get(c, "")).rjust(w) for c, w in zip(columns, widths)))


# --------------------------------------------------------------------------- commands


def cmd_run(args) -> int:
    cfg = _scenario(args)
    out = Output(args.out, "out/run", args.force)
    r = run(cfg)
    row = table1_row(r)
    out.write("config.toml", dump_config(cfg))
    out.write("report.csv", _csv(TABLE1_COLUMNS, [row]))
    lat = {"count": r.latency_hist.total, **latency_cells(r.latency)}
    out.write("latency.csv", _csv(("count",) + LATENCY_COLUMNS, [lat]))
    out.write("exchange_latency.csv", _csv(EXCHANGE_COLUMNS, _exchange_rows(r)))
    slot_s = cfg.slotframe.slot_s
    for name, h in (("latency", r.latency_hist), ("d_sw", r.d_sw_hist), ("d_dl", r.d_dl_hist), ("d_tot", r.d_tot_hist)):
        out.write(f"hist_{name}.csv", histogram_csv(h, slot_s))
    _print_table(TABLE1_COLUMNS[:-1], [row])
    print(
        f"packets generated {r.generated}, delivered {r.delivered}, duplicates {r.duplicates}, "
        f"backlog {r.backlog}; exchanges requested {r.exchanges_requested}, "
        f"completed {r.exchanges_completed}, aborted {r.exchanges_aborted}"
    )
    if r.exchanges_completed:
        _print_table(EXCHANGE_COLUMNS, _exchange_rows(r))
    print(f"wrote {len(out.written)} files to {out.dir}")
    return 0


def cmd_table1(args) -> int:
    base = _scenario(args)
    out = Output(args.out, "out/table1", args.force)
    rows = []
    for t_app in T_APPS:
        reports = paired_sweep(replace(base, t_app=t_app), T_UPDATES, jobs=args.jobs)
        rows.extend(table1_row(r) for r in reports)
    out.write("table1.csv", _csv(TABLE1_COLUMNS, rows))
    _print_table(TABLE1_COLUMNS[:-1], rows)
    return 0


def cmd_table2(args) -> int:
    base = replace(_scenario(args), t_app=30.0, t_update=30.0)
    out = Output(args.out, "out/table2", args.force)
    _, reports = ie_size_sweep(base, IE_SIZES, jobs=args.jobs)
    rows = []
    for size, r in zip(IE_SIZES, reports):
        row = {"l_ie_p": str(size), **power_cells(r.power)}
        row["delta_pct"] = f"{r.power.delta_pct:+.3f}"
        row["duration_years"] = f"{base.duration / YEAR_S:g}"
        rows.append(row)
    cols = ("l_ie_p",) + POWER_COLUMNS + ("delta_pct", "duration_years")
    out.write("table2.csv", _csv(cols, rows))
    _print_table(cols[:-1], rows)
    return 0


def cmd_table3(args) -> int:
    cfg = replace(_scenario(args), consip_enabled=True)
    out = Output(args.out, "out/table3", args.force)
    r = run(cfg)
    rows = _exchange_rows(r)
    for row in rows:
        row["duration_years"] = f"{cfg.duration / YEAR_S:g}"
    out.write("table3.csv", _csv(EXCHANGE_COLUMNS + ("duration_years",), rows))
    _print_table(EXCHANGE_COLUMNS, rows)
    print(f"{r.exchanges_completed} completed exchanges")
    return 0


def cmd_fig4(args) -> int:
    cfg = replace(_scenario(args), consip_enabled=True)
    out = Output(args.out, "out/fig4", args.force)
    r = run(cfg)
    slot_s = cfg.slotframe.slot_s
    out.write("fig4_d_sw.csv", pdf_cdf_csv(export_pdf_cdf(r.d_sw_hist, slot_s)))
    masses = plateau_masses(r.d_sw_hist, cfg.slotframe.n_slots)
    print(f"{r.d_sw_hist.total} swap latencies; plateau width {cfg.slotframe.slotframe_s:.2f} s")
    for k, m in enumerate(masses[:8]):
        print(f"  [{k * cfg.slotframe.slotframe_s:6.2f}, {(k + 1) * cfg.slotframe.slotframe_s:6.2f}) s  mass {m:.5f}")
    return 0


def cmd_placement(args) -> int:
    base = replace(_scenario(args), consip_enabled=True)
    out = Output(args.out, "out/placement", args.force)
    rep = placement_experiment(base, jobs=args.jobs)
    rows = []
    for name, r in (("equally_spaced", rep.spaced), ("contiguous", rep.contiguous)):
        row = {"placement": name, "slot_i": str(r.config.slot_i), "slot_j": str(r.config.slot_j)}
        row.update(power_cells(r.power))
        row.update(latency_cells(r.latency))
        rows.append(row)
    cols = ("placement", "slot_i", "slot_j") + POWER_COLUMNS + LATENCY_COLUMNS
    out.write("placement.csv", _csv(cols, rows))
    _print_table(cols, rows)
    print(f"|delta mu_d| = {rep.mean_latency_diff_s * 1000:.3f} ms, |delta P_tot| = {rep.p_tot_diff_pct:.4f} %")
    return 0


def cmd_verify(args) -> int:
    if not 1 <= args.horizon <= MAX_HORIZON:
        raise UsageError(f"horizon {args.horizon} over budget (max {MAX_HORIZON})")
    try:
        script = ExchangeScript.parse(args.script)
    except ValueError as e:
        raise UsageError(f"bad --script: {e}") from None
    kwargs = {}
    if args.mutant:
        kwargs["rx_transition"] = MUTANTS[args.mutant]
    res = verify(args.horizon, script, **kwargs)
    print(
        f"horizon {res.horizon}, script {res.script}: {res.paths} complete paths, "
        f"{res.transitions} transitions, {res.distinct_states} distinct joint states"
    )
    if res.ok:
        print("ok: no violation reachable")
        return 0
    ce = res.counterexample
    print(f"VIOLATION: {ce.reason}")
    print("outcomes: " + " ".join(o.value for o in ce.outcomes))
    for k, s in enumerate(ce.states):
        print(f"  state[{k}] {s}")
    if args.out:
        p = Output(args.out, args.out, args.force).write("counterexample.trace", ce.trace_text())
        print(f"trace written to {p}")
    return 1


def cmd_soak(args) -> int:
    cfg = _scenario(args)
    res = random_soak(args.exchanges, cfg.seed, base=cfg, eps_f=args.eps_f, eps_a=args.eps_a)
    print(
        f"seed {res.seed}: {res.exchanges_requested} exchanges requested, "
        f"{res.exchanges_completed} completed"
    )
    if res.ok:
        print("ok: zero violations")
        return 0
    print(res.message)
    return 1


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML scenario file")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--duration-years", type=float, help="simulated duration (default 1; the reference campaign used 10)")
    common.add_argument("--jobs", type=int, default=1, help="parallel runs in sweeps")
    common.add_argument("--force", action="store_true", help="overwrite existing output files")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="config override, repeatable")

    p = argparse.ArgumentParser(prog="consip", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run one scenario").set_defaults(func=cmd_run)
    sub.add_parser("table1", parents=[common], help="power/latency vs update period").set_defaults(func=cmd_table1)
    sub.add_parser("table2", parents=[common], help="power vs IE payload size").set_defaults(func=cmd_table2)
    sub.add_parser("table3", parents=[common], help="exchange latencies").set_defaults(func=cmd_table3)
    sub.add_parser("fig4", parents=[common], help="PDF/CDF of swap latency").set_defaults(func=cmd_fig4)
    sub.add_parser("placement", parents=[common], help="spaced vs contiguous backup cell").set_defaults(func=cmd_placement)
    v = sub.add_parser("verify", parents=[common], help="bounded exhaustive check")
    v.add_argument("--horizon", type=int, default=8)
    v.add_argument("--script", default="request@0", help='e.g. "request@0,abort@2,request@3"')
    v.add_argument("--mutant", choices=sorted(MUTANTS), help="check a deliberately broken receiver")
    v.set_defaults(func=cmd_verify)
    s = sub.add_parser("soak", parents=[common], help="long randomized run with assertions")
    s.add_argument("--exchanges", type=int, default=100_000)
    s.add_argument("--eps-f", type=float)
    s.add_argument("--eps-a", type=float)
    s.set_defaults(func=cmd_soak)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ConsistencyError as e:
        print(f"assertion failure: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
