"""Command-line front-end.

Subcommands: ``gen`` (emit a topology as edge-list text), ``solve`` (optimize
transmit probabilities), ``simulate`` (run the Monte Carlo protocol at given
q), ``sweep`` (CSV datasets over network size), and ``compare`` (solve, then
simulate at the optimum and check analytic vs empirical agreement).

Reports are printed to stdout; ``--out`` writes the machine-readable payload
(JSON by default, CSV with ``--format csv``). Passing ``--format`` without
``--out`` prints the payload itself to stdout, for piping. All output is
deterministic: randomness flows from ``--seed`` (default 0, never wall-clock)
and no timestamps are emitted. Infinite values are rendered as null in JSON
and ``inf`` in CSV.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import analysis, graph, optimizer, simulator
from .analysis import NetworkParams, ObjectiveKind
from .graph import Topology

_PRESET_SWEEP = ("tree6", "grid:2x3", "astar6", "acircle6")


class UsageError(Exception):
    """Invalid flag combination or malformed input; exits with status 2."""


def _parse_prob_list(text: str, n: int, name: str) -> np.ndarray:
    parts = [p for p in text.split(",") if p.strip()]
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"--{name} must be a number or comma-separated list")
    if len(vals) == 1:
        vals = vals * n
    if len(vals) != n:
        raise UsageError(f"--{name} needs 1 or {n} values, got {len(vals)}")
    arr = np.array(vals)
    if np.any((arr < 0) | (arr > 1)):
        raise UsageError(f"--{name} entries must lie in [0, 1]")
    return arr


def _load_topology(args) -> Topology:
    if args.edges and args.topology:
        raise UsageError("give either --topology or --edges, not both")
    if args.edges:
        try:
            with open(args.edges, "r", encoding="utf-8") as fh:
                return graph.parse_edge_list(fh.read())
        except (OSError, graph.EdgeListParseError) as exc:
            raise UsageError(f"cannot load {args.edges}: {exc}")
    if args.topology:
        try:
            return graph.from_spec(args.topology)
        except ValueError as exc:
            raise UsageError(str(exc))
    raise UsageError("a topology is required (--topology or --edges)")


def _objective_kind(name: str) -> ObjectiveKind:
    return (ObjectiveKind.NEIGHBOR_NORMALIZED if name == "normalized"
            else ObjectiveKind.TOTAL)


def _sanitize(obj):
    """Replace non-finite floats by None for strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


def _fmt_csv(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return repr(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt_csv(v) for v in row])
    return buf.getvalue()


def _emit(args, report: str, payload_json: dict, payload_csv: tuple) -> None:
    fmt = args.format
    if fmt == "json":
        text = json.dumps(_sanitize(payload_json), indent=2, allow_nan=False) + "\n"
    else:
        text = _csv_text(*payload_csv)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        sys.stdout.write(report)
    elif args.format_given:
        sys.stdout.write(text)
    else:
        sys.stdout.write(report)


def _per_link_records(t: Topology, params: NetworkParams) -> list[dict]:
    metrics = analysis.link_metrics(t, params)
    return [
        {"receiver": link.receiver, "sender": link.sender,
         "mu": stat.mu, "aoi": stat.aoi}
        for link, stat in sorted(metrics.entries.items())
    ]


def _solve_with(args, t: Topology, p: np.ndarray, kind: ObjectiveKind):
    """Run the selected solver; returns (q_star, info dict)."""
    opts = optimizer.SolveOptions(max_iters=args.max_iters)
    solver = args.solver
    if solver == "pgd":
        res = optimizer.solve_projected_gradient(t, p, kind, opts)
    elif solver == "fixed-point":
        res = optimizer.solve_fixed_point(t, p, kind, opts)
    elif solver == "d-regular":
        degs = t.degrees()
        d = degs[0] if degs else 0
        if d < 1 or not t.is_regular(d):
            raise UsageError("--solver d-regular needs a d-regular topology")
        if np.ptp(p) != 0.0:
            raise UsageError("--solver d-regular needs a homogeneous --p")
        q = np.full(t.n, optimizer.d_regular_closed_form(d, float(p[0])))
        res = _closed_form_result(t, p, kind, q)
    elif solver == "star":
        ref = graph.make_star(t.n) if t.n >= 2 else None
        if ref is None or t.edges != ref.edges:
            raise UsageError("--solver star needs a star:N topology (hub node 0)")
        if np.any(p != 1.0):
            raise UsageError("--solver star assumes p = 1 on every node")
        if kind is not ObjectiveKind.TOTAL:
            raise UsageError("--solver star optimizes the total objective only")
        sol = optimizer.star_solve(t.n)
        q = np.full(t.n, sol.q2)
        q[0] = sol.q1
        res = _closed_form_result(t, p, kind, q)
    elif solver == "grid-oracle":
        q, f = optimizer.brute_force_grid(t, p, kind, resolution=args.resolution)
        res = _closed_form_result(t, p, kind, q, objective_value=f)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown solver {solver!r}")
    return res


def _closed_form_result(t, p, kind, q, objective_value=None):
    ev = analysis.Evaluator(t, p, kind)
    f = ev.value(q) if objective_value is None else objective_value
    act = ev.active
    try:
        grad = ev.gradient(q)
        pg = float(np.linalg.norm(
            optimizer._projected_grad(q, grad, act, 0.0, 1.0)))
        fp = optimizer._fp_residual(ev, q, 1e-9)
    except analysis.InfeasiblePointError:
        pg = fp = math.inf
    return optimizer.SolveResult(q_star=q, objective_value=f, grad_residual=pg,
                                 fp_residual=fp, iterations=0, converged=True)


def cmd_gen(args) -> int:
    t = _load_topology(args)
    text = graph.serialize(t)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"wrote {t.n} nodes, {len(t.edges)} edges to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_solve(args) -> int:
    t = _load_topology(args)
    p = _parse_prob_list(args.p, t.n, "p")
    kind = _objective_kind(args.objective)
    res = _solve_with(args, t, p, kind)
    params = NetworkParams(p, res.q_star)
    per_link = _per_link_records(t, params)
    payload = {
        "topology": {"n": t.n, "edges": [list(e) for e in t.edges]},
        "p": p.tolist(),
        "q_star": res.q_star.tolist(),
        "objective": res.objective_value,
        "objective_kind": kind.value,
        "per_link": per_link,
        "residuals": {"grad": res.grad_residual,
                      "fixed_point": res.fp_residual},
        "iterations": res.iterations,
        "converged": res.converged,
        "solver": args.solver,
    }
    rows = [[r["receiver"], r["sender"], float(res.q_star[r["receiver"]]),
             float(res.q_star[r["sender"]]), r["mu"], r["aoi"]] for r in per_link]
    report = [f"solver={args.solver} objective_kind={kind.value}"]
    report.append(f"objective = {res.objective_value!r}")
    report.append(f"iterations = {res.iterations}, converged = {res.converged}, "
                  f"grad_residual = {res.grad_residual:.3e}, "
                  f"fp_residual = {res.fp_residual:.3e}")
    report.append("node  degree  q_star")
    for v in range(t.n):
        report.append(f"{v:4d}  {t.degree(v):6d}  {res.q_star[v]:.6f}")
    report.append("receiver  sender      mu         aoi")
    for r in per_link:
        report.append(f"{r['receiver']:8d}  {r['sender']:6d}  {r['mu']:.6f}  "
                      f"{r['aoi']:.4f}" if math.isfinite(r["aoi"]) else
                      f"{r['receiver']:8d}  {r['sender']:6d}  {r['mu']:.6f}  inf")
    _emit(args, "\n".join(report) + "\n", payload,
          (["receiver", "sender", "q_receiver", "q_sender", "mu", "aoi"], rows))
    return 0


def _simulate_payload(t, params, cfg, result):
    metrics = analysis.link_metrics(t, params)
    per_link = []
    worst = 0.0
    for link in sorted(result.per_link_aoi):
        mu = metrics[link].mu
        aoi = metrics[link].aoi
        mu_hat = result.per_link_deliveries[link] / result.slots_measured
        aoi_sim = result.per_link_aoi[link]
        delivered = result.per_link_deliveries[link] > 0
        rel_aoi = abs(aoi_sim - aoi) / aoi if math.isfinite(aoi) and aoi > 0 else None
        rel_mu = abs(mu_hat - mu) / mu if mu > 0 else None
        if rel_aoi is not None:
            worst = max(worst, rel_aoi)
        if rel_mu is not None:
            worst = max(worst, rel_mu)
        per_link.append({
            "receiver": link.receiver, "sender": link.sender,
            "aoi_sim": aoi_sim, "mu_hat": mu_hat,
            "deliveries": result.per_link_deliveries[link],
            "mu": mu, "aoi": aoi,
            "rel_err_aoi": rel_aoi, "rel_err_mu": rel_mu,
            "no_deliveries": not delivered,
        })
    payload = {
        "topology": {"n": t.n, "edges": [list(e) for e in t.edges]},
        "p": params.p.tolist(),
        "q": params.q.tolist(),
        "config": {"slots": cfg.slots, "warmup": cfg.warmup,
                   "replications": cfg.replications, "seed": cfg.seed},
        "slots_measured": result.slots_measured,
        "per_link": per_link,
    }
    return payload, per_link, worst


_SIM_CSV_HEADER = ["receiver", "sender", "aoi_sim", "mu_hat", "deliveries",
                   "mu", "aoi", "rel_err_aoi", "rel_err_mu"]


def _sim_rows(per_link):
    return [[r["receiver"], r["sender"], r["aoi_sim"], r["mu_hat"],
             r["deliveries"], r["mu"], r["aoi"], r["rel_err_aoi"],
             r["rel_err_mu"]] for r in per_link]


def _sim_report(per_link, cfg, worst) -> list[str]:
    lines = [f"slots={cfg.slots} warmup={cfg.warmup} "
             f"replications={cfg.replications} seed={cfg.seed}"]
    lines.append("receiver  sender   aoi_sim    mu_hat       aoi        mu")
    for r in per_link:
        tag = "  (no deliveries)" if r["no_deliveries"] else ""
        aoi = f"{r['aoi']:.4f}" if math.isfinite(r["aoi"]) else "inf"
        lines.append(f"{r['receiver']:8d}  {r['sender']:6d}  {r['aoi_sim']:9.4f}"
                     f"  {r['mu_hat']:.6f}  {aoi:>9}  {r['mu']:.6f}{tag}")
    lines.append(f"worst relative error = {worst:.4%}")
    return lines


def cmd_simulate(args) -> int:
    t = _load_topology(args)
    p = _parse_prob_list(args.p, t.n, "p")
    if args.q_file:
        try:
            with open(args.q_file, "r", encoding="utf-8") as fh:
                record = json.load(fh)
            q = np.array([float(v) for v in record["q_star"]])
        except (OSError, KeyError, ValueError, TypeError) as exc:
            raise UsageError(f"cannot read q_star from {args.q_file}: {exc}")
        if q.shape != (t.n,):
            raise UsageError(f"q from {args.q_file} has length {len(q)}, "
                             f"topology has {t.n} nodes")
    elif args.q:
        q = _parse_prob_list(args.q, t.n, "q")
    else:
        raise UsageError("simulate needs --q or --q-file")
    params = NetworkParams(p, q)
    cfg = simulator.SimConfig(slots=args.slots, seed=args.seed,
                              warmup=args.warmup, replications=args.reps)
    result = simulator.run(t, params, cfg)
    payload, per_link, worst = _simulate_payload(t, params, cfg, result)
    report = _sim_report(per_link, cfg, worst)
    _emit(args, "\n".join(report) + "\n", payload,
          (_SIM_CSV_HEADER, _sim_rows(per_link)))
    return 0


def cmd_compare(args) -> int:
    t = _load_topology(args)
    p = _parse_prob_list(args.p, t.n, "p")
    kind = _objective_kind(args.objective)
    res = _solve_with(args, t, p, kind)
    params = NetworkParams(p, res.q_star)
    cfg = simulator.SimConfig(slots=args.slots, seed=args.seed,
                              warmup=args.warmup, replications=args.reps)
    result = simulator.run(t, params, cfg)
    sim_payload, per_link, worst = _simulate_payload(t, params, cfg, result)
    tol = args.tol
    for r in per_link:
        r["pass"] = bool(
            r["rel_err_aoi"] is not None and r["rel_err_mu"] is not None
            and r["rel_err_aoi"] <= tol and r["rel_err_mu"] <= tol)
    all_pass = all(r["pass"] for r in per_link)
    payload = {
        "solve": {
            "q_star": res.q_star.tolist(),
            "objective": res.objective_value,
            "objective_kind": kind.value,
            "residuals": {"grad": res.grad_residual,
                          "fixed_point": res.fp_residual},
            "iterations": res.iterations,
            "converged": res.converged,
            "solver": args.solver,
        },
        "simulation": sim_payload,
        "tolerance": tol,
        "all_within_tolerance": all_pass,
    }
    rows = [[r["receiver"], r["sender"], r["mu"], r["aoi"], r["mu_hat"],
             r["aoi_sim"], r["rel_err_mu"], r["rel_err_aoi"], r["pass"]]
            for r in per_link]
    report = [f"solver={args.solver} q_star = "
              + np.array2string(res.q_star, precision=6, separator=", ")]
    report.extend(_sim_report(per_link, cfg, worst))
    report.append(f"tolerance = {tol:.4%} -> "
                  + ("PASS" if all_pass else "FAIL"))
    _emit(args, "\n".join(report) + "\n", payload,
          (["receiver", "sender", "mu", "aoi", "mu_hat", "aoi_sim",
            "rel_err_mu", "rel_err_aoi", "pass"], rows))
    return 0 if all_pass else 1


def _sweep_line(n_min: int, n_max: int):
    rows = []
    q_cf = optimizer.d_regular_closed_form(2, 1.0)
    for n in range(n_min, n_max + 1):
        t = graph.make_line(n)
        f_cf = analysis.objective(t, NetworkParams.uniform(n, 1.0, q_cf))
        res = optimizer.solve_projected_gradient(t, 1.0)
        gap = (f_cf - res.objective_value) / res.objective_value
        rows.append({"n": n, "q_closed_form": q_cf,
                     "objective_closed_form_per_node": f_cf / n,
                     "objective_optimal_per_node": res.objective_value / n,
                     "relative_gap": gap})
    return ["n", "q_closed_form", "objective_closed_form_per_node",
            "objective_optimal_per_node", "relative_gap"], rows


def _star_normalized_qs(n: int) -> tuple[float, float]:
    t = graph.make_star(n)
    res = optimizer.solve_projected_gradient(
        t, 1.0, ObjectiveKind.NEIGHBOR_NORMALIZED)
    leaves = res.q_star[1:]
    if np.ptp(leaves) > 1e-6:
        raise RuntimeError(f"leaf probabilities failed to tie for star:{n}")
    return float(res.q_star[0]), float(np.mean(leaves))


def _sweep_star(n_min: int, n_max: int):
    rows = []
    for n in range(max(n_min, 3), n_max + 1):
        sol = optimizer.star_solve(n)
        q1n, q2n = _star_normalized_qs(n)
        rows.append({"n": n, "q1_total": sol.q1, "q2_total": sol.q2,
                     "q1_normalized": q1n, "q2_normalized": q2n})
    return ["n", "q1_total", "q2_total", "q1_normalized", "q2_normalized"], rows


def _sweep_presets():
    rows = []
    for spec in _PRESET_SWEEP:
        t = graph.from_spec(spec)
        res = optimizer.solve_projected_gradient(
            t, 1.0, ObjectiveKind.NEIGHBOR_NORMALIZED)
        avg_deg = 2 * len(t.edges) / t.n
        rows.append({"preset": spec, "n": t.n,
                     "average_degree": avg_deg,
                     "normalized_aoi": res.objective_value})
    return ["preset", "n", "average_degree", "normalized_aoi"], rows


def cmd_sweep(args) -> int:
    if args.kind != "presets" and args.n_min > args.n_max:
        raise UsageError("--n-min must not exceed --n-max")
    if args.kind == "line":
        if args.n_min < 2:
            raise UsageError("line sweep needs --n-min >= 2")
        header, rows = _sweep_line(args.n_min, args.n_max)
    elif args.kind == "star":
        header, rows = _sweep_star(args.n_min, args.n_max)
    else:
        header, rows = _sweep_presets()
    payload = {"kind": args.kind, "rows": rows}
    csv_rows = [[row[h] for h in header] for row in rows]
    if not args.format_given:
        args.format = "csv"  # sweeps are tabular datasets first
    if args.format == "json":
        text = json.dumps(_sanitize(payload), indent=2, allow_nan=False) + "\n"
    else:
        text = _csv_text(header, csv_rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _add_common_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write the payload to this path")
    p.add_argument("--format", choices=("json", "csv"), default=None,
                   help="payload format (default json)")


def _add_topology_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--topology",
                   help="preset spec: line:N ring:N star:N complete:N "
                        "grid:RxC tree6 astar6 acircle6")
    p.add_argument("--edges", help="path to an edge-list file")


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--slots", type=int, default=1_000_000,
                   help="simulation horizon in slots (default 1e6)")
    p.add_argument("--warmup", type=int, default=1000,
                   help="leading slots excluded from averages (default 1000)")
    p.add_argument("--reps", type=int, default=1,
                   help="independent replications (default 1)")
    p.add_argument("--seed", type=int, default=0,
                   help="base RNG seed (default 0; never wall-clock)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoinet",
        description="Average age-of-information analysis, optimization, and "
                    "simulation for half-duplex slotted-ALOHA networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="emit a topology as edge-list text")
    _add_topology_flags(p_gen)
    p_gen.add_argument("--out", help="write the edge list to this path")
    p_gen.set_defaults(func=cmd_gen)

    p_solve = sub.add_parser("solve", help="optimize transmit probabilities")
    _add_topology_flags(p_solve)
    p_solve.add_argument("--p", default="1", help="generation probability "
                         "(scalar or comma list, default 1)")
    p_solve.add_argument("--objective", choices=("total", "normalized"),
                         default="total")
    p_solve.add_argument("--solver",
                         choices=("pgd", "fixed-point", "d-regular", "star",
                                  "grid-oracle"), default="pgd")
    p_solve.add_argument("--resolution", type=int, default=100,
                         help="grid-oracle points per axis (default 100)")
    p_solve.add_argument("--max-iters", type=int, default=10_000)
    _add_common_output(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_sim = sub.add_parser("simulate", help="Monte Carlo run at a given q")
    _add_topology_flags(p_sim)
    p_sim.add_argument("--p", default="1")
    p_sim.add_argument("--q", help="transmit probability (scalar or comma list)")
    p_sim.add_argument("--q-file", help="JSON solve record to take q_star from")
    _add_sim_flags(p_sim)
    _add_common_output(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="CSV dataset over network size")
    p_sweep.add_argument("--kind", choices=("line", "star", "presets"),
                         required=True)
    p_sweep.add_argument("--n-min", type=int, default=3)
    p_sweep.add_argument("--n-max", type=int, default=20)
    _add_common_output(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_cmp = sub.add_parser("compare",
                           help="solve, simulate at the optimum, and check "
                                "analytic vs empirical agreement")
    _add_topology_flags(p_cmp)
    p_cmp.add_argument("--p", default="1")
    p_cmp.add_argument("--objective", choices=("total", "normalized"),
                       default="total")
    p_cmp.add_argument("--solver", choices=("pgd", "fixed-point"),
                       default="pgd")
    p_cmp.add_argument("--max-iters", type=int, default=10_000)
    p_cmp.add_argument("--tol", type=float, default=0.02,
                       help="relative tolerance per link (default 0.02)")
    _add_sim_flags(p_cmp)
    _add_common_output(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.format_given = args.__dict__.get("format") is not None
    if getattr(args, "format", None) is None:
        args.format = "json"
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
