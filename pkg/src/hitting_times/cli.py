"""Command-line entry point.

Every command writes a CSV table and a ``.meta.json`` sidecar holding the
resolved configuration.  Exit codes: 0 success, 2 configuration error,
3 data error, 4 numerical degeneracy.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from . import theory as th
from .estimators import (
    DegenerateDataError,
    InsufficientDataError,
    estimate_theta,
    heavy_acf,
)
from .hitting import EmpiricalPmf, ThresholdSpec, Timed, default_path_len, mc_hits, mc_pmf, mc_timed_hits
from .ingest import (
    EdgeListError,
    ExperimentTable,
    TableError,
    degree_table,
    read_edge_list,
    read_table,
    write_table,
)
from .processes import ARMAX, AR1Uniform, IidFrechet, InterArrivalSpec, MovingMax, ProcessSpec, simulate
from .rng import RngStream

logger = logging.getLogger("hitting_times")

OUTPUT_DIR_ENV = "HITTING_TIMES_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class ConfigError(ValueError):
    pass


class DataError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    process: Optional[dict] = None
    threshold: Optional[dict] = None
    paths: Optional[int] = None
    path_len: Optional[int] = None
    statistic: Optional[str] = None
    theory: Optional[dict] = None
    master_seed: int = 0
    output: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["version"] = __version__
        return d


# -- argument helpers ---------------------------------------------------------


def _process_from_args(args) -> ProcessSpec:
    name = args.process
    try:
        if name == "iid":
            return IidFrechet()
        if name == "armax":
            if args.alpha is None:
                raise ConfigError("--alpha is required for --process armax")
            return ARMAX(args.alpha)
        if name == "mm":
            if not args.weights:
                raise ConfigError("--weights is required for --process mm")
            return MovingMax(tuple(float(w) for w in args.weights.split(",")))
        if name == "ar1":
            if args.r is None:
                raise ConfigError("--r is required for --process ar1")
            return AR1Uniform(args.r)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown process {name!r}")


def _threshold_from_args(args) -> ThresholdSpec:
    if args.u is not None:
        return ThresholdSpec.absolute(args.u)
    if args.rho is None:
        raise ConfigError("give a quantile level --rho or an absolute threshold --u")
    try:
        return ThresholdSpec.quantile(args.rho)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _theory_from_args(args, theta: Optional[float] = None, rho: Optional[float] = None) -> th.TheoryParams:
    theta = args.theta if args.theta is not None else theta
    rho = rho if rho is not None else args.rho
    if theta is None or rho is None:
        raise ConfigError("theory parameters need --theta (or a process) and --rho")
    try:
        return th.TheoryParams(
            theta=theta,
            rho=rho,
            n=args.n,
            j0=args.j0,
            alpha_tail=args.alpha_tail,
            horizon=args.horizon,
            tau=args.tau,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _statistic_from_args(args):
    if args.statistic == "timed":
        if args.horizon is None or math.isinf(args.horizon):
            raise ConfigError("--statistic timed needs a finite --horizon")
        try:
            return Timed(args.horizon, InterArrivalSpec(args.alpha_tail, args.scale))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if args.statistic == "joint":
        return "joint_first_gap"
    return args.statistic


def _path_len(args, spec: ProcessSpec, threshold: ThresholdSpec) -> int:
    if args.path_len is not None:
        if args.path_len < 1:
            raise ConfigError("--path-len must be positive")
        return args.path_len
    if threshold.mode != "quantile":
        raise ConfigError("--path-len is required with an absolute threshold --u")
    return default_path_len(spec.theta, threshold.value)


def _output_path(args, default_name: str) -> Path:
    if args.output:
        return Path(args.output)
    return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / default_name


def _load_series(args) -> tuple[np.ndarray, str]:
    """Data series from --edge-list (degrees in file order) or --data CSV (--column)."""
    try:
        if args.edge_list:
            seq = read_edge_list(args.edge_list)
            return seq.degrees.astype(np.float64), seq.source_label
        if args.data:
            table = read_table(args.data)
            col = args.column or table.names[-1]
            if col not in table.columns:
                raise DataError(f"{args.data}: no column {col!r}")
            return table[col].astype(np.float64), Path(args.data).stem
    except (OSError, EdgeListError, TableError) as exc:
        raise DataError(str(exc)) from exc
    raise ConfigError("no input data: pass --edge-list or --data")


# -- commands -----------------------------------------------------------------


def cmd_simulate(args) -> ExperimentTable:
    """Raw hitting statistics per path (0 marks a statistic that was not observed)."""
    spec = _process_from_args(args)
    threshold = _threshold_from_args(args)
    stat = _statistic_from_args(args)
    path_len = _path_len(args, spec, threshold)
    u = threshold.resolve(spec)
    idx = np.arange(args.paths, dtype=np.int64)
    if isinstance(stat, Timed):
        cols = {"path": idx, "timed_first": mc_timed_hits(spec, u, args.paths, path_len, stat, args.seed,
                                                          args.burn_in, 0, args.threads)}
    else:
        hits = mc_hits(spec, u, args.paths, path_len, 1 if stat == "first" else 2, args.seed,
                       args.burn_in, 0, args.threads)
        cols = {"path": idx, "first": hits[:, 0]}
        if stat == "second":
            cols["second"] = hits[:, 1]
        elif stat == "joint_first_gap":
            cols["gap"] = np.where(hits[:, 1] > 0, hits[:, 1] - hits[:, 0], 0)
    cfg = ExperimentConfig("simulate", spec.to_dict(), asdict(threshold), args.paths, path_len,
                           args.statistic, None, args.seed, extra={"threshold_u": u, "burn_in": args.burn_in})
    return ExperimentTable(cols, cfg.to_dict())


def _exact_pmf_column(spec: ProcessSpec, p: th.TheoryParams, js, u: float, n: Optional[int]):
    if isinstance(spec, (IidFrechet, ARMAX, MovingMax)):
        return np.array([th.armax_pmf_exact(j, p) for j in js])
    if isinstance(spec, AR1Uniform):
        if n is None:
            return None
        return np.array([th.ar1_pmf(j, u, spec.r, n) for j in js])
    return None


def cmd_compare(args) -> ExperimentTable:
    """Monte Carlo pmf next to the limit and exact models, with per-j z-scores."""
    spec = _process_from_args(args)
    threshold = _threshold_from_args(args)
    stat = _statistic_from_args(args)
    if stat not in ("first",) and not isinstance(stat, Timed):
        raise ConfigError("compare supports --statistic first or timed")
    path_len = _path_len(args, spec, threshold)
    u = threshold.resolve(spec)
    rho = threshold.value if threshold.mode == "quantile" else (1.0 - u if spec.marginal == "uniform" else None)
    if rho is None:
        raise ConfigError("compare needs a quantile threshold --rho for Frechet-marginal models")
    p = _theory_from_args(args, theta=spec.theta, rho=rho)
    pmf = mc_pmf(spec, threshold, args.paths, path_len, stat, args.seed, args.burn_in, args.threads)
    j_max = args.j_max or min(path_len, int(math.ceil(5.0 / (p.theta * p.rho))))
    if isinstance(spec, AR1Uniform):
        j_max = min(j_max, th.ar1_m(u, spec.r) - 1)
    js = np.arange(1, j_max + 1)
    if isinstance(stat, Timed):
        # row j holds P{T*_T = j + 1}
        emp = np.array([pmf.pmf(j + 1) for j in js])
        se = np.array([pmf.se(j + 1) for j in js])
        model = np.array([th.timed_pmf_model(j, p) for j in js])
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (emp - model) / np.sqrt(model * (1.0 - model) / pmf.paths)
        cols = {"j": js, "empirical": emp, "stderr": se, "timed_model": model, "z_timed_model": z}
    else:
        emp = pmf.prob[: js.size]
        se = pmf.stderr[: js.size]
        psi = np.array([th.psi_pmf(j, p) for j in js])
        geo = np.array([th.limit_geometric_pmf(j, p) for j in js])
        cols = {"j": js, "empirical": emp, "stderr": se, "psi": psi, "limit_geometric": geo}
        exact = _exact_pmf_column(spec, p, js, u, args.n)
        if exact is not None:
            cols["exact"] = exact
            cols["z_exact"] = pmf.model_z_scores(exact)
        cols["z_psi"] = pmf.model_z_scores(psi)
    cfg = ExperimentConfig("compare", spec.to_dict(), asdict(threshold), args.paths, path_len, args.statistic,
                           asdict(p), args.seed,
                           extra={"threshold_u": u, "overflow_prob": pmf.overflow_prob,
                                  "overflow_flagged": pmf.overflow_flagged, "mean": pmf.mean()})
    if pmf.overflow_flagged:
        logger.warning("overflow mass %.4g exceeds 0.01; increase --path-len", pmf.overflow_prob)
    return ExperimentTable(cols, cfg.to_dict())


def cmd_estimate_theta(args) -> ExperimentTable:
    if args.rho is None:
        raise ConfigError("--rho is required")
    if args.edge_list or args.data:
        x, label = _load_series(args)
        source = {"data": label}
    else:
        spec = _process_from_args(args)
        if args.n is None:
            raise ConfigError("--n (series length) is required when estimating from a simulated process")
        x = simulate(spec, args.n, RngStream(args.seed, 0), args.burn_in).values
        source = {"process": spec.to_dict(), "n": args.n}
    try:
        est = estimate_theta(x, args.rho)
    except InsufficientDataError as exc:
        raise DataError(str(exc)) from exc
    cols = {
        "theta_hat": np.array([est.theta_hat]),
        "raw": np.array([est.raw]),
        "n_exceedances": np.array([est.n_exceedances]),
        "threshold_u": np.array([est.threshold_u]),
        "shifted_variant": np.array([int(est.used_variant == "shifted")]),
    }
    cfg = ExperimentConfig("estimate-theta", master_seed=args.seed, extra={"rho": args.rho, **source})
    return ExperimentTable(cols, cfg.to_dict())


def cmd_acf(args) -> ExperimentTable:
    x, label = _load_series(args)
    if not 0 <= args.max_lag < x.size:
        raise ConfigError(f"--max-lag must lie in [0, {x.size - 1}]")
    res = heavy_acf(x, args.max_lag)
    cfg = ExperimentConfig("acf", extra={"source": label, "max_lag": args.max_lag, "order": "file order"})
    return ExperimentTable({"lag": res.lags, "acf": res.values}, cfg.to_dict())


def cmd_ingest(args) -> ExperimentTable:
    if not args.edge_list:
        raise ConfigError("--edge-list is required")
    try:
        seq = read_edge_list(args.edge_list)
    except (OSError, EdgeListError) as exc:
        raise DataError(str(exc)) from exc
    table = degree_table(seq)
    table.metadata.update(ExperimentConfig("ingest", extra={"edge_list": str(args.edge_list)}).to_dict())
    return table


def _rho_grid(args) -> np.ndarray:
    if not 0.0 < args.rho_min < args.rho_max < 1.0 or args.rho_steps < 2:
        raise ConfigError("need 0 < --rho-min < --rho-max < 1 and --rho-steps >= 2")
    return np.linspace(args.rho_min, args.rho_max, args.rho_steps)


def figure_table(which: int, args) -> ExperimentTable:
    """Curves of one figure as columns over its abscissa grid."""
    if which == 1:
        theta = args.theta if args.theta is not None else 0.1
        rhos = _rho_grid(args)
        cols = {"rho": rhos}
        for j in (5, 20):
            ps = [th.TheoryParams(theta, r) for r in rhos]
            cols[f"exact_pmf_j{j}"] = np.array([th.armax_pmf_paper(j, p) for p in ps])
            cols[f"limit_model_j{j}"] = np.array([th.psi_pmf(j, p) for p in ps])
        extra = {"theta": theta, "j": [5, 20]}
    elif which == 2:
        theta = args.theta if args.theta is not None else 0.1
        rhos = _rho_grid(args)
        ps = [th.TheoryParams(theta, r) for r in rhos]
        cols = {
            "rho": rhos,
            "mean_closed_form": np.array([th.armax_mean_paper(p) for p in ps]),
            "mean_exact": np.array([th.armax_mean_exact(p) for p in ps]),
        }
        for j0 in (0, 5):
            cols[f"model_j0_{j0}"] = np.array([th.truncated_mean_model(p.with_(j0=j0)) for p in ps])
        extra = {"theta": theta, "j0": [0, 5]}
    elif which == 3:
        rho = args.rho if args.rho is not None else 0.05
        thetas = [float(t) for t in args.thetas.split(",")]
        labels = args.labels.split(",")
        if len(labels) != len(thetas):
            raise ConfigError("--labels and --thetas must have the same length")
        j0s = np.arange(args.j0_max + 1)
        cols = {"j0": j0s}
        for label, theta in zip(labels, thetas):
            cols[f"model_{label}"] = np.array(
                [th.truncated_mean_model(th.TheoryParams(theta, rho, j0=int(j))) for j in j0s]
            )
        extra = {"rho": rho, "thetas": dict(zip(labels, thetas))}
    elif which == 4:
        sources = list(args.degrees or []) + list(args.edge_list_many or [])
        if not sources:
            raise DataError("figure 4 needs degree data: run `hitting-times ingest --edge-list FILE` "
                            "and pass the result with --degrees, or pass --edge-list-many FILE")
        cols = {"lag": np.arange(args.max_lag + 1)}
        labels = []
        for src in sources:
            try:
                if src in (args.degrees or []):
                    x = read_table(src)["degree"].astype(np.float64)
                else:
                    x = read_edge_list(src).degrees.astype(np.float64)
            except (OSError, KeyError, EdgeListError, TableError) as exc:
                raise DataError(f"{src}: {exc}") from exc
            if args.max_lag >= x.size:
                raise ConfigError(f"--max-lag {args.max_lag} too large for {src} ({x.size} values)")
            label = Path(src).name.split(".")[0]
            cols[f"acf_{label}"] = heavy_acf(x, args.max_lag).values
            labels.append(label)
        extra = {"sources": [str(s) for s in sources], "order": "file order"}
    else:
        raise ConfigError(f"unknown figure {which}")
    cfg = ExperimentConfig("reproduce-figure", extra={"figure": which, **extra})
    return ExperimentTable(cols, cfg.to_dict())


def cmd_reproduce_figure(args) -> ExperimentTable:
    return figure_table(args.figure, args)


# -- parser -------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", help=f"output CSV (default: ${OUTPUT_DIR_ENV} or cwd)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--threads", type=int, default=None, help="bound on worker threads")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_process(p: argparse.ArgumentParser) -> None:
    p.add_argument("--process", choices=["iid", "armax", "mm", "ar1"], default="armax")
    p.add_argument("--alpha", type=float, help="ARMAX coefficient")
    p.add_argument("--weights", help="moving maxima weights, comma separated, non-increasing")
    p.add_argument("--r", type=int, help="AR(1) grid size r >= 2")
    p.add_argument("--burn-in", type=int, default=0)


def _add_theory(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theta", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--j0", type=int, default=0)
    p.add_argument("--alpha-tail", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=math.inf)
    p.add_argument("--tau", type=float)


def _add_mc(p: argparse.ArgumentParser) -> None:
    p.add_argument("--u", type=float, help="absolute threshold (instead of --rho)")
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--path-len", type=int)
    p.add_argument("--statistic", choices=["first", "second", "joint", "timed"], default="first")
    p.add_argument("--scale", type=float, default=1.0, help="Pareto inter-arrival scale")


def _add_data(p: argparse.ArgumentParser) -> None:
    p.add_argument("--edge-list", help="edge list file; degrees are used in file order")
    p.add_argument("--data", help="CSV table produced by this tool")
    p.add_argument("--column", help="column of --data to use (default: last)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hitting-times", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="raw hitting statistics per path")
    _add_process(p), _add_theory(p), _add_mc(p), _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="Monte Carlo pmf against the closed-form models")
    _add_process(p), _add_theory(p), _add_mc(p), _add_common(p)
    p.add_argument("--j-max", type=int)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("estimate-theta", help="intervals estimate of the extremal index")
    _add_process(p), _add_theory(p), _add_data(p), _add_common(p)
    p.set_defaults(func=cmd_estimate_theta)

    p = sub.add_parser("acf", help="non-centred sample ACF of a data series")
    _add_data(p), _add_common(p)
    p.add_argument("--max-lag", type=int, default=100)
    p.set_defaults(func=cmd_acf)

    p = sub.add_parser("ingest", help="edge list to degree table")
    p.add_argument("--edge-list")
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("reproduce-figure", help="figure curves as CSV")
    p.add_argument("--figure", type=int, choices=[1, 2, 3, 4], required=True)
    p.add_argument("--theta", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--rho-min", type=float, default=0.01)
    p.add_argument("--rho-max", type=float, default=0.99)
    p.add_argument("--rho-steps", type=int, default=99)
    p.add_argument("--thetas", default="0.22,0.15")
    p.add_argument("--labels", default="enron,dblp")
    p.add_argument("--j0-max", type=int, default=50)
    p.add_argument("--degrees", action="append", help="degree CSV from `ingest` (repeatable)")
    p.add_argument("--edge-list-many", action="append", help="edge list file (repeatable)")
    p.add_argument("--max-lag", type=int, default=100)
    _add_common(p)
    p.set_defaults(func=cmd_reproduce_figure)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        table = args.func(args)
        name = args.command + (f"_{args.figure}" if args.command == "reproduce-figure" else "") + ".csv"
        out = _output_path(args, name)
        table.metadata["output"] = str(out)
        write_table(out, table)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, TableError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DegenerateDataError, ZeroDivisionError, OverflowError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # domain checks in the model and process layers
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {out} ({len(table)} rows)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
