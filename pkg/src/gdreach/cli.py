"""Command line entry point: verify a scenario, simulate it, write reports."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from .config import ScenarioError, dump_scenario, load_scenario
from .sim import containment_check, simulate_many, trajectories_csv
from .sys_reach import COMPLETED, ReachDomainError, reach_system

OUT_ENV = "GDREACH_OUT_DIR"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gdreach", description="Taylor-model reachability of gradient-descent controlled plants.")
    p.add_argument("--scenario", required=True, help="shipped scenario name or path to a TOML file")
    p.add_argument("--out", help=f"output directory (default: ${OUT_ENV}, then the scenario's output.dir)")
    p.add_argument("--no-shrink-wrap", action="store_true", help="disable physical and digital shrink wrapping")
    p.add_argument("--no-symbolic-remainders", action="store_true", help="disable predicted-state placeholders")
    p.add_argument("--simulate", type=int, metavar="N", help="number of simulated trajectories")
    p.add_argument("--desk-scale", type=int, metavar="K", help="override the number of control steps")
    p.add_argument("--dump-tm", action="store_true", help="write every step's Taylor models")
    p.add_argument("--trace", action="store_true", help="write per-iterate controller records")
    p.add_argument("--seed", type=int, metavar="S", help="override the sampling seed")
    return p


def hulls_csv(result) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "dim", "lo", "hi"])
    for k, i, lo, hi in result.hull_rows():
        w.writerow([k, i, repr(lo), repr(hi)])
    return buf.getvalue()


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def projection_svg(result, trajs, proj: tuple[int, int], size: int = 480, pad: int = 40) -> str:
    """Reach boxes as rectangles and trajectories as polylines.

    Each rectangle carries the exact hull endpoints (as written to the hull
    CSV) in ``data-*`` attributes; drawing coordinates are derived from them.
    """
    a, b = proj
    xs = [v for hs in result.hulls for v in (hs[a].lo, hs[a].hi)]
    ys = [v for hs in result.hulls for v in (hs[b].lo, hs[b].hi)]
    for tr in trajs:
        xs += [x[a] for x in tr.states]
        ys += [x[b] for x in tr.states]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    sx = (size - 2 * pad) / ((x1 - x0) or 1.0)
    sy = (size - 2 * pad) / ((y1 - y0) or 1.0)

    def px(v):
        return pad + (v - x0) * sx

    def py(v):
        return size - pad - (v - y0) * sy

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}" data-projection="{a},{b}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        '<g class="hulls" fill="#4a90d9" fill-opacity="0.25" stroke="#1f4e8c" stroke-width="0.5">',
    ]
    for k, hs in enumerate(result.hulls):
        ha, hb = hs[a], hs[b]
        out.append(
            f'<rect data-k="{k}" data-x-lo="{ha.lo!r}" data-x-hi="{ha.hi!r}" '
            f'data-y-lo="{hb.lo!r}" data-y-hi="{hb.hi!r}" '
            f'x="{_fmt(px(ha.lo))}" y="{_fmt(py(hb.hi))}" '
            f'width="{_fmt(max((ha.hi - ha.lo) * sx, 0.5))}" height="{_fmt(max((hb.hi - hb.lo) * sy, 0.5))}"/>'
        )
    out.append("</g>")
    out.append('<g class="trajectories" fill="none" stroke="#c0392b" stroke-width="0.6" stroke-opacity="0.7">')
    for t, tr in enumerate(trajs):
        pts = " ".join(f"{_fmt(px(x[a]))},{_fmt(py(x[b]))}" for x in tr.states)
        out.append(f'<polyline data-traj="{t}" points="{pts}"/>')
    out.append("</g>")
    out.append(
        f'<text x="{pad}" y="{size - 10}" font-size="11" font-family="sans-serif">'
        f"x{a + 1} in [{_fmt(x0)}, {_fmt(x1)}], x{b + 1} in [{_fmt(y0)}, {_fmt(y1)}]</text>"
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _write(path: Path, text: str):
    path.write_text(text, encoding="utf-8")


def _json(path: Path, obj):
    _write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.scenario)
    except ScenarioError as e:
        print(f"gdreach: {e}", file=sys.stderr)
        return EXIT_USAGE
    for flag in ("simulate", "desk_scale"):
        v = getattr(args, flag)
        if v is not None and v < 0:
            print(f"gdreach: --{flag.replace('_', '-')} must be non-negative", file=sys.stderr)
            return EXIT_USAGE
    if args.desk_scale is not None:
        sc = sc.with_(K=args.desk_scale)
    if args.seed is not None:
        sc = sc.with_(seed=args.seed)
    if args.simulate is not None:
        sc = sc.with_(n_sim=args.simulate)
    if args.no_shrink_wrap:
        sc = sc.with_(shrink_wrap=False)
    if args.no_symbolic_remainders:
        sc = sc.with_(symbolic_remainders=False)
    out = Path(args.out or os.environ.get(OUT_ENV) or sc.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "scenario.toml", dump_scenario(sc))
    err = out / "error.json"
    if err.exists():
        err.unlink()

    try:
        res = reach_system(sc, trace=args.trace)
    except ReachDomainError as e:
        _json(err, e.to_dict())
        print(f"gdreach: domain error at {e}", file=sys.stderr)
        return EXIT_FAIL

    _write(out / "hulls.csv", hulls_csv(res))
    _json(out / "events.json", {
        "scenario": sc.name,
        "fingerprint": res.fingerprint,
        "status": res.status,
        "K": sc.K,
        "steps": res.K,
        "flags": res.flags,
        "events": res.events,
        "wall_seconds": res.wall,
    })
    if args.dump_tm:
        with open(out / "tm_dump.txt", "w", encoding="utf-8") as f:
            for k, v in enumerate(res.tms):
                for i, t in enumerate(v):
                    f.write(f"# k={k} dim={i}\n{t.to_text()}\n")
    if args.trace:
        with open(out / "trace.jsonl", "w", encoding="utf-8") as f:
            for k, tr in enumerate(res.traces, start=1):
                for rec in tr:
                    f.write(json.dumps({"k": k, **rec}) + "\n")

    trajs = simulate_many(sc, sc.n_sim, sc.K)
    _write(out / "trajectories.csv", trajectories_csv(trajs))
    report = containment_check(trajs, res, sc.fingerprint())
    _json(out / "containment.json", report.to_dict())
    a, b = sc.projection
    _write(out / f"reach_x{a + 1}_x{b + 1}.svg", projection_svg(res, trajs, sc.projection))

    if res.status != COMPLETED:
        _json(err, {
            "error": "Diverged",
            "step": res.K,
            "max_hull_width": res.events[-1]["max_hull_width"],
            "bound": sc.blowup_factor * max(hi - lo for lo, hi in sc.initial),
        })
        print(f"gdreach: reach sets diverged at step {res.K}", file=sys.stderr)
        return EXIT_FAIL
    if not report.passed:
        print(f"gdreach: containment failed, first violation {report.first_violation}", file=sys.stderr)
        return EXIT_FAIL
    print(f"gdreach: {sc.name} verified for {res.K} steps, {report.checked} trajectories contained; output in {out}")
    return EXIT_OK


def main():
    sys.exit(run())
