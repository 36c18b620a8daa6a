"""Scenario-driven command line front end.

Subcommands
-----------
``simulate``         run a scenario, writing snapshots, an energy CSV and a report
``compare``          co-evolve a scenario and perturbed copies, writing pair CSVs
``verify``           run an acceptance suite or a single numbered criterion
``interp-test``      interpolation and embedding ratios on the function family
``coercivity-test``  energy/norm and elliptic coercivity ratios for a scenario

Exit codes: 0 ok, 2 invariant failure or guard breach, 3 inadmissible
state, 4 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .errors import (CFLViolationError, ConfigError, HypothesisError, InadmissibleStateError,
                     RelvacError, StepRejectedError)
from .scenarios import Scenario, format_scenario, initial_arrays, load_scenario
from .state import GoodState

__all__ = ["main", "build_parser", "save_snapshot", "load_snapshot", "EXIT_OK",
           "EXIT_INVARIANT", "EXIT_INADMISSIBLE", "EXIT_CONFIG", "REPORT_SCHEMA"]

EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_INADMISSIBLE = 3
EXIT_CONFIG = 4

REPORT_SCHEMA = 1


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------

def save_snapshot(path, state: GoodState) -> None:
    """Write ``r``, ``v``, mask and time of a state to an ``.npz`` file."""
    np.savez(path, t=state.t, r=state.r.values, v=state.v.values, mask=state.mask,
             kappa=state.params.kappa)


def load_snapshot(path, grid, params) -> GoodState:
    with np.load(path) as z:
        return GoodState.from_arrays(grid, z["r"], z["v"], params, t=float(z["t"]),
                                     mask=z["mask"])


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _boundary_row(state: GoodState) -> dict:
    b = state.boundary
    if state.dim != 1 or b is None or len(b.points) != 2:
        return {}
    order = np.argsort(b.points[:, 0])
    return {"x_l": float(b.points[order[0], 0]), "x_r": float(b.points[order[1], 0]),
            "slope_l": float(b.slopes[order[0]]), "slope_r": float(b.slopes[order[1]])}


def _energy_row(state: GoodState, level: int, seed: int, **extra) -> dict:
    from .energy import energy_at
    from .spaces import control_norms

    rep = energy_at(state, level)
    cn = control_norms(state, seed=seed)
    row = {"t": state.t, "E_wave": rep.E_wave, "E_transport": rep.E_transport,
           "E_total": rep.E_total, "A": cn.A, "B": cn.B}
    row.update(_boundary_row(state))
    row.update(extra)
    return row


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _simulate_one(sc: Scenario, out: Path, tag: str) -> dict:
    """Run one scenario; returns a report dict (raises library errors)."""
    from .dynamics import integrate
    from .energy import write_energy_csv
    from .stepper import run

    level, seed = int(sc.level), int(sc.seed)
    snaps = out / f"snapshots{tag}"
    snaps.mkdir(parents=True, exist_ok=True)
    state = sc.initial_state()
    every = int(sc.snapshot_every)
    rows = [_energy_row(state, level, seed)]
    kept = [state]
    report = {"schema": REPORT_SCHEMA, "scenario": sc.values, "status": "ok", "exit_code": EXIT_OK}
    if sc.integrator == "threestep":
        step_no = [0]

        def cb(cur, rep):
            step_no[0] += 1
            rows.append(_energy_row(cur, level, seed, defect=rep.local_residual,
                                    growth_factor=rep.growth_factor))
            if every and step_no[0] % every == 0:
                kept.append(cur)

        res = run(state, float(sc.T), float(sc.eps), level=level, c_max=float(sc.c_max),
                  keep_every=10**9, callback=cb)
        if res.states[-1] is not kept[-1]:
            kept.append(res.states[-1])
        if res.reports:
            last = res.reports[-1]
            report["last_step"] = {k: getattr(last, k) for k in
                                   ("epsilon", "t", "energy_before", "energy_after",
                                    "growth_factor", "local_residual", "boundary_shift")}
        if not res.completed:
            report["status"] = res.error
            report["exit_code"] = (EXIT_INVARIANT if res.reports and
                                   res.reports[-1].growth_factor > 1 + float(sc.c_max) * res.reports[-1].epsilon
                                   else EXIT_INADMISSIBLE)
    else:
        dt = float(sc.dt) if float(sc.dt) > 0 else None
        stride = every if every else 10
        traj = integrate(state, float(sc.T), dt=dt, cfl=float(sc.cfl), keep_every=stride)
        prev = rows[0]
        for cur in traj[1:]:
            row = _energy_row(cur, level, seed)
            row["growth_factor"] = row["E_total"] / prev["E_total"]
            rows.append(row)
            prev = row
        kept = traj if every else [traj[0], traj[-1]]
        c_lim = float(sc.c_max)
        for a, b in zip(rows[:-1], rows[1:]):
            if b["growth_factor"] > 1.0 + c_lim * (b["t"] - a["t"]):
                report["status"] = f"energy guard breached at t={b['t']:.4g}"
                report["exit_code"] = EXIT_INVARIANT
                break
    for n, s in enumerate(kept):
        save_snapshot(snaps / f"snap_{n:05d}.npz", s)
    write_energy_csv(out / f"energy{tag}.csv", rows)
    report["final"] = rows[-1]
    report["snapshots"] = len(kept)
    return report


def _simulate_job(args):
    values, out, tag = args
    sc = Scenario(dict(values))
    warnings.simplefilter("ignore", RuntimeWarning)
    try:
        return _simulate_one(sc, Path(out), tag)
    except InadmissibleStateError as exc:
        return {"schema": REPORT_SCHEMA, "scenario": values, "status": str(exc),
                "exit_code": EXIT_INADMISSIBLE}
    except CFLViolationError as exc:
        return {"schema": REPORT_SCHEMA, "scenario": values, "status": str(exc),
                "exit_code": EXIT_CONFIG}


def _map(fn, jobs, threads: int) -> list:
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def cmd_simulate(args) -> int:
    sc = _scenario_from(args)
    out = _out_dir(args, sc)
    eps_list = _eps_list(args, sc)
    jobs = []
    for e in eps_list:
        tag = f"_eps{e:g}" if len(eps_list) > 1 else ""
        jobs.append((sc.updated(eps=e).values, str(out), tag))
    (out / "scenario.cfg").write_text(format_scenario(sc))
    reports = _map(_simulate_job, jobs, args.threads)
    code = max(r["exit_code"] for r in reports)
    summary = reports[0] if len(reports) == 1 else {"schema": REPORT_SCHEMA, "runs": reports,
                                                   "exit_code": code}
    _write_json(out / "report.json", summary)
    for r in reports:
        print(f"eps={r['scenario']['eps']:g} integrator={r['scenario']['integrator']} "
              f"status={r['status']}")
    return code


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def perturbed_state(sc: Scenario, delta: float) -> GoodState:
    """Scenario data with amplitude, centre and ``alpha`` each moved by ``delta``."""
    grid = sc.grid
    shift = np.zeros(grid.dim)
    shift[0] = delta
    X = grid.coords - shift
    tmp = _CoordGrid(grid, X)
    r, v = initial_arrays(sc.family, tmp, h0=float(sc.h0) * (1.0 + delta),
                          alpha=float(sc.alpha) + delta, beta=float(sc.beta),
                          gamma=float(sc.gamma), omega=float(sc.omega))
    return GoodState.from_arrays(grid, r, v, sc.params)


class _CoordGrid:
    """Minimal grid stand-in exposing shifted node coordinates."""

    def __init__(self, grid, coords):
        self.coords = coords
        self.dim = grid.dim
        self.shape = grid.shape


def _compare_job(args):
    values, out, delta = args
    from .distance import stability_monitor
    from .dynamics import integrate, stable_dt

    warnings.simplefilter("ignore", RuntimeWarning)
    sc = Scenario(dict(values))
    s1 = sc.initial_state()
    s2 = perturbed_state(sc, delta) if delta != 0 else s1
    dt = float(sc.dt) if float(sc.dt) > 0 else 0.5 * min(stable_dt(s1), stable_dt(s2))
    every = int(sc.snapshot_every) or 10
    tr1 = integrate(s1, float(sc.T), dt=dt, keep_every=every)
    tr2 = integrate(s2, float(sc.T), dt=dt, keep_every=every)
    res = stability_monitor(tr1, tr2)
    res.write_csv(Path(out) / f"pair_delta{delta:g}.csv")
    return {"delta": delta, "D0": float(res.D[0]), "amplification": res.amplification,
            "C_gronwall": res.C_gronwall, "C_rate": res.C_rate,
            "max_D_over_tilde_D": float(np.max(res.D / np.where(res.tilde_D > 0, res.tilde_D, 1.0))),
            "max_proximity": float(np.max(res.proximity))}


def cmd_compare(args) -> int:
    sc = _scenario_from(args)
    out = _out_dir(args, sc)
    try:
        deltas = [float(x) for x in args.delta.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad --delta list {args.delta!r}") from exc
    (out / "scenario.cfg").write_text(format_scenario(sc))
    rows = _map(_compare_job, [(sc.values, str(out), d) for d in deltas], args.threads)
    cols = ("delta", "D0", "amplification", "C_gronwall", "C_rate", "max_D_over_tilde_D",
            "max_proximity")
    lines = [",".join(cols)] + [",".join(f"{r[c]:.17g}" for c in cols) for r in rows]
    (out / "delta_sweep.csv").write_text("\n".join(lines) + "\n")
    _write_json(out / "report.json", {"schema": REPORT_SCHEMA, "scenario": sc.values,
                                      "sweep": rows, "exit_code": EXIT_OK})
    for r in rows:
        print(f"delta={r['delta']:g} amplification={r['amplification']:.6g} "
              f"C_gronwall={r['C_gronwall']:.4g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify and harness commands
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    from .acceptance import SUITES, run_all

    if args.criterion is not None:
        numbers = [int(x) for x in args.criterion.split(",")]
        bad = [n for n in numbers if n not in SUITES["all"]]
        if bad:
            raise ConfigError(f"unknown criterion number(s) {bad}")
    else:
        numbers = list(SUITES[args.suite])
    results = run_all(numbers, echo=print)
    failed = [r.number for r in results if not r.passed]
    report = {"schema": REPORT_SCHEMA, "suite": args.suite if args.criterion is None else None,
              "passed": not failed, "failed": failed,
              "criteria": [r.as_dict() for r in results]}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "verify_report.json", report)
    if failed:
        print("failed invariants: " + ", ".join(f"criterion {n:02d}" for n in failed))
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_interp_test(args) -> int:
    from .spaces import PROPS, embedding_check, interp_check

    props = PROPS if args.prop == "all" else (args.prop,)
    lines = ["kind,prop,j,m,sigma_m,sigma_0,ratio"]
    worst = 0.0
    for prop in props:
        for (j, m, sm, s0), q in interp_check(prop=prop, N=args.N).items():
            lines.append(f"interp,{prop},{j},{m},{sm:g},{s0:g},{q:.17g}")
            worst = max(worst, q)
    for (s1, g1, s2, g2), q in embedding_check(N=args.N).items():
        lines.append(f"embedding,,{s1},{s2},{g1:g},{g2:g},{q:.17g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "interp.csv").write_text(text)
    else:
        sys.stdout.write(text)
    ok = all(np.isfinite(float(ln.rsplit(",", 1)[1])) for ln in lines[1:])
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_coercivity_test(args) -> int:
    from .energy import coercivity_ratio as energy_ratio
    from .energy import default_dtau, snapshot_window, window_size
    from .transition import coercivity_ratio as elliptic_ratio

    sc = _scenario_from(args)
    st = sc.initial_state()
    level = int(sc.level)
    k = level // 2
    win = [st] if level == 0 else snapshot_window(st, window_size(k) // 2,
                                                   default_dtau(st, level))
    lo, hi = energy_ratio(win, level)
    rows = {"level": level, "E_over_norm": lo, "norm_over_E": hi,
            "elliptic_tL1": elliptic_ratio("tL1", st),
            "elliptic_tL2+tL3": elliptic_ratio("tL2+tL3", st)}
    for key, val in rows.items():
        print(f"{key}={val:.6g}" if isinstance(val, float) else f"{key}={val}")
    if args.out:
        out = _out_dir(args, sc)
        _write_json(out / "coercivity.json", {"schema": REPORT_SCHEMA, "scenario": sc.values,
                                              **rows})
    ok = all(np.isfinite(v) for v in rows.values())
    return EXIT_OK if ok else EXIT_INVARIANT


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------

def _scenario_from(args) -> Scenario:
    sc = load_scenario(args.scenario)
    over = {"seed": args.seed}
    if getattr(args, "level", None) is not None:
        over["level"] = args.level
    if getattr(args, "eps", None) and "," not in args.eps:
        over["eps"] = _parse_eps(args.eps)[0]
    return sc.updated(**over)


def _parse_eps(text: str) -> list:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --eps value {text!r}") from exc
    if not vals or any(v <= 0 for v in vals):
        raise ConfigError("--eps values must be positive")
    return vals


def _eps_list(args, sc: Scenario) -> list:
    return _parse_eps(args.eps) if args.eps else [float(sc.eps)]


def _out_dir(args, sc: Scenario) -> Path:
    out = Path(args.out) if args.out else Path("runs") / str(sc.name)
    out.mkdir(parents=True, exist_ok=True)
    return out


def build_parser() -> argparse.ArgumentParser:
    from .acceptance import SUITES

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", default="blob1d",
                        help="scenario file or bundled name (default blob1d)")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled seminorms")
    common.add_argument("--threads", type=int, default=1,
                        help="worker processes for eps and delta sweeps (1 = sequential)")
    common.add_argument("--eps", default=None,
                        help="step size, or a comma list for a sweep (one CSV per value)")
    common.add_argument("--level", type=int, default=None, choices=(0, 2, 4),
                        help="energy level 2k")
    p = argparse.ArgumentParser(prog="relvac", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run a scenario")
    c = sub.add_parser("compare", parents=[common], help="stability of perturbed pairs")
    c.add_argument("--delta", default="1e-2,1e-3,1e-4", help="comma list of perturbation sizes")
    v = sub.add_parser("verify", parents=[common], help="run an acceptance suite")
    v.add_argument("suite", nargs="?", default="all", choices=sorted(SUITES))
    v.add_argument("--criterion", default=None, help="comma list of criterion numbers")
    i = sub.add_parser("interp-test", parents=[common], help="interpolation ratios")
    i.add_argument("--prop", default="all", help="gen, Linf, Chalf, Ctilde or all")
    i.add_argument("--N", type=int, default=513)
    sub.add_parser("coercivity-test", parents=[common], help="energy and elliptic coercivity")
    return p


_COMMANDS = {"simulate": cmd_simulate, "compare": cmd_compare, "verify": cmd_verify,
             "interp-test": cmd_interp_test, "coercivity-test": cmd_coercivity_test}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return _COMMANDS[args.command](args)
    except (ConfigError, CFLViolationError, HypothesisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StepRejectedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except InadmissibleStateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except RelvacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
