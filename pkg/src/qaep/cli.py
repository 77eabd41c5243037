"""Command-line harness.

Subcommands sweep one experiment family each and write CSV and/or JSON
reports plus a rendered PNG figure into the output directory:

  validate     model validity checks
  entropy      mean-entropy sweep per state
  typicality   typical-projection report per state
  deviation    lower/upper deviation masses per state
  pressure     finite-volume pressure sweep per observable
  variational  variational-inequality table and Gibbs lower bounds

Exit codes: 0 success, 2 configuration error, 3 capacity exceeded,
4 invariant violation.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import plots
from .chain import block_interval_factorization_test, check_assumption
from .config import ExperimentConfig, load_config
from .entropy import lambda_tau, mean_entropy
from .errors import CapacityError, ConfigError, InvariantError, QaepError
from .pressure import (
    gibbs_lower_bound,
    oracle_pressure,
    pressure_limit,
    product_gibbs_candidate,
    product_state_grid,
    variational_inequality,
)
from .reports import ensure_outdir, format_table, write_csv, write_json
from .states import GibbsBlockState
from .typicality import lower_deviation, upper_deviation_argument, verify_typicality

COMMANDS = ("validate", "entropy", "typicality", "deviation", "pressure", "variational")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qaep",
        description="entropy, pressure and typical-subspace sweeps on finite spin chains",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="experiment JSON file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument(
        "--format", choices=("csv", "json", "both"), default="both",
        help="delimited output format",
    )
    parser.add_argument(
        "--jobs", type=int, default=1,
        help="worker threads across states/observables",
    )
    parser.add_argument(
        "--seed", type=int, default=0,
        help="seed for the random-element property sweeps",
    )
    return parser


def _pmap(fn, items, jobs: int):
    """Map preserving input order; threads only when requested."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _state_entropy(cfg: ExperimentConfig, state) -> float:
    """Mean entropy used to centre spectral windows: the exact per-period
    value for Gibbs block states, the increment estimator otherwise."""
    if isinstance(state, GibbsBlockState):
        return state.mean_entropy_exact()
    return mean_entropy(state, cfg.run.volumes()).limit


def run_validate(cfg: ExperimentConfig, args) -> tuple[dict, dict, int]:
    rng = np.random.default_rng(args.seed)
    report = check_assumption(cfg.model, rng)
    rows = []
    for c in report.checks:
        rows.append(
            {
                "site_dim": cfg.model.site_dim,
                "window": cfg.model.window,
                "name": c.name,
                "passed": c.passed,
                "residual": c.residual,
                "note": c.note,
            }
        )
    for m in cfg.run.block_sizes:
        n_needed = 2 * m + cfg.model.commute_dist
        if cfg.model.dim(n_needed) > cfg.model.cap:
            continue
        res = block_interval_factorization_test(cfg.model, m, rng)
        rows.append(
            {
                "site_dim": cfg.model.site_dim,
                "window": cfg.model.window,
                "name": f"block_factorisation_m{m}",
                "passed": res <= 1e-10,
                "residual": res,
                "note": "",
            }
        )
    lt = lambda_tau(cfg.model, cfg.run.volumes())
    payload = {
        "command": "validate",
        "config_sha": cfg.sha256,
        "all_passed": all(r["passed"] for r in rows),
        "checks": rows,
        "lambda_tau": {"limit": lt.limit, "rows": lt.to_rows()},
    }
    figure = plots.plot_validate(rows, args.out)
    _emit(args, payload, {"validate": rows})
    print(format_table(rows, ["name", "passed", "residual", "note"]))
    print(f"lambda_tau limit: {lt.limit:.12g}")
    print(f"figure: {figure}")
    return payload, {"validate": rows}, 0 if payload["all_passed"] else 4


def run_entropy(cfg: ExperimentConfig, args) -> tuple[dict, dict, int]:
    states = cfg.selected_states()
    results = _pmap(
        lambda item: (item[0], mean_entropy(item[1], cfg.run.volumes())),
        states,
        args.jobs,
    )
    per_state = {name: est.to_dict() for name, est in results}
    lt = lambda_tau(cfg.model, cfg.run.volumes())
    payload = {
        "command": "entropy",
        "config_sha": cfg.sha256,
        "states": per_state,
        "lambda_tau": {"limit": lt.limit, "rows": lt.to_rows()},
    }
    rows = []
    for name, est in results:
        for r in est.to_rows():
            rows.append({"state": name, **r})
    summary = [
        {
            "state": name,
            "raw": est.raw,
            "increment": est.increment,
            "two_point": est.two_point,
            "limit": est.limit,
        }
        for name, est in results
    ]
    figure = plots.plot_entropy(per_state, args.out)
    _emit(args, payload, {"entropy": rows, "entropy_summary": summary})
    print(format_table(summary))
    print(f"figure: {figure}")
    return payload, {"entropy": rows}, 0


def run_typicality(cfg: ExperimentConfig, args) -> tuple[dict, dict, int]:
    states = cfg.selected_states()

    def one(item):
        name, state = item
        s = _state_entropy(cfg, state)
        return name, verify_typicality(cfg.model, state, cfg.run.delta, cfg.run.volumes(), s)

    results = _pmap(one, states, args.jobs)
    per_state = {name: rep.to_dict() for name, rep in results}
    payload = {"command": "typicality", "config_sha": cfg.sha256, "states": per_state}
    rows = []
    for name, rep in results:
        for r in rep.rows:
            rows.append({"state": name, **r.to_dict()})
    summary = [
        {
            "state": name,
            "s_used": rep.s_used,
            "omega_first": rep.rows[0].omega_pn,
            "omega_last": rep.rows[-1].omega_pn,
            "all_eig_bounds_ok": rep.all_bounds_ok,
            "rank_ok_from": rep.rank_ok_from,
            "ergodicity_certified": rep.ergodicity_certified,
        }
        for name, rep in results
    ]
    figure = plots.plot_typicality(per_state, args.out)
    _emit(args, payload, {"typicality": rows, "typicality_summary": summary})
    print(format_table(summary))
    print(f"figure: {figure}")
    code = 4 if any(not rep.all_bounds_ok for _, rep in results) else 0
    return payload, {"typicality": rows}, code


def run_deviation(cfg: ExperimentConfig, args) -> tuple[dict, dict, int]:
    states = cfg.selected_states()
    lam = cfg.model.lambda_tau_exact

    def one(item):
        name, state = item
        s = _state_entropy(cfg, state)
        t = cfg.run.t if cfg.run.t is not None else lam - s - cfg.run.delta
        rows = []
        for n in cfg.run.volumes():
            rec = upper_deviation_argument(
                cfg.model, state, cfg.run.delta, cfg.run.delta_prime, n, s
            )
            rows.append(
                {
                    "state": name,
                    "n": n,
                    "t": t,
                    "lower_mass": lower_deviation(cfg.model, state, t, n),
                    **{k: v for k, v in rec.to_dict().items() if k != "n"},
                }
            )
        return name, s, t, rows

    results = _pmap(one, states, args.jobs)
    rows = [r for _, _, _, rs in results for r in rs]
    payload = {
        "command": "deviation",
        "config_sha": cfg.sha256,
        "states": {
            name: {"s_used": s, "t": t, "rows": rs} for name, s, t, rs in results
        },
    }
    figure = plots.plot_deviation({name: rs for name, _, _, rs in results}, args.out)
    _emit(args, payload, {"deviation": rows})
    print(
        format_table(
            rows, ["state", "n", "lower_mass", "omega_q_minus", "omega_q_plus", "q_minus_rel_info"]
        )
    )
    print(f"figure: {figure}")
    code = 4 if any(r["chain_residual"] < -1e-9 for r in rows) else 0
    return payload, {"deviation": rows}, code


def run_pressure(cfg: ExperimentConfig, args) -> tuple[dict, dict, int]:
    observables = cfg.selected_observables()
    results = _pmap(
        lambda item: (item[0], pressure_limit(cfg.model, item[1], cfg.run.volumes())),
        observables,
        args.jobs,
    )
    per_obs = {name: rep.to_dict() for name, rep in results}
    payload = {"command": "pressure", "config_sha": cfg.sha256, "observables": per_obs}
    rows = []
    for name, rep in results:
        for r in per_obs[name]["rows"]:
            rows.append({"observable": name, **r})
    summary = [
        {
            "observable": name,
            "limit": rep.limit,
            "oracle": rep.oracle,
            "oracle_gap": rep.oracle_gap,
        }
        for name, rep in results
    ]
    figure = plots.plot_pressure(per_obs, args.out)
    _emit(args, payload, {"pressure": rows, "pressure_summary": summary})
    print(format_table(summary))
    print(f"figure: {figure}")
    return payload, {"pressure": rows}, 0


def run_variational(cfg: ExperimentConfig, args) -> tuple[dict, dict, int]:
    observables = cfg.selected_observables()
    base_candidates = list(cfg.selected_states())
    grid = product_state_grid(cfg.model, cfg.run.grid_points)

    def one(item):
        name, a = item
        candidates = list(base_candidates) + list(grid)
        if cfg.model.volume_of_dim(a.blocks[0].shape[0]) == 1:
            candidates.append(("product_gibbs", product_gibbs_candidate(cfg.model, a)))
        pressure = oracle_pressure(cfg.model, a)
        if pressure is None:
            pressure = pressure_limit(cfg.model, a, cfg.run.volumes(), oracle=None).limit
        records = variational_inequality(
            cfg.model, candidates, a, pressure=pressure,
            entropy_range=cfg.run.volumes(),
        )
        bounds = []
        for m in cfg.run.block_sizes:
            state = GibbsBlockState(cfg.model, m, a)
            if cfg.model.dim(state.period) > cfg.model.cap:
                continue
            bounds.append(gibbs_lower_bound(cfg.model, m, a, pressure=pressure))
        return name, pressure, records, bounds

    results = _pmap(one, observables, args.jobs)
    var_rows, bound_rows = [], []
    per_obs = {}
    for name, pressure, records, bounds in results:
        per_obs[name] = {
            "pressure": pressure,
            "records": [r.to_dict() for r in records],
            "gibbs_bounds": [b.to_dict() for b in bounds],
        }
        for r in records:
            var_rows.append(
                {"observable": name, "pressure": pressure, **r.to_dict()}
            )
        for b in bounds:
            bound_rows.append({"observable": name, **b.to_dict()})
    payload = {"command": "variational", "config_sha": cfg.sha256, "observables": per_obs}
    figure = plots.plot_variational(
        {name: per_obs[name]["records"] for name in per_obs}, args.out
    )
    _emit(args, payload, {"variational": var_rows, "gibbs_bound": bound_rows})
    worst = [
        {
            "observable": name,
            "pressure": per_obs[name]["pressure"],
            "min_gap": min(r["gap"] for r in per_obs[name]["records"]),
            "bound_slacks": " ".join(
                f"m{b['block_size']}:{b['slack']:.4f}" for b in per_obs[name]["gibbs_bounds"]
            ),
        }
        for name in per_obs
    ]
    print(format_table(worst))
    print(f"figure: {figure}")
    code = 4 if any(r["gap"] < -1e-9 for r in var_rows) else 0
    code = code or (4 if any(b["slack"] < -1e-9 for b in bound_rows) else 0)
    return payload, {"variational": var_rows}, code


def _emit(args, payload: dict, tables: dict[str, list[dict]]):
    outdir = ensure_outdir(args.out)
    sha = payload["config_sha"]
    if args.format in ("json", "both"):
        write_json(f"{outdir}/{payload['command']}.json", payload)
    if args.format in ("csv", "both"):
        for name, rows in tables.items():
            write_csv(f"{outdir}/{name}.csv", rows, sha)


RUNNERS = {
    "validate": run_validate,
    "entropy": run_entropy,
    "typicality": run_typicality,
    "deviation": run_deviation,
    "pressure": run_pressure,
    "variational": run_variational,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        ensure_outdir(args.out)
        _, _, code = RUNNERS[args.command](cfg, args)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    except InvariantError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 4
    except QaepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
