"""`ranklab` command-line driver.

Every subcommand reads its inputs from directories, writes CSV/JSON(L)
outputs into `--out` and leaves a manifest.json next to them.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from .. import __version__
from ..backend import set_threads
from ..cluster import (
    CLUSTERS_FILE, PROFILE_FILE, cluster_profile, cluster_users, fit_by_cluster,
    load_clustered_fit, save_clustered_fit, save_clustering, user_clusters,
)
from ..counterfact import RankingPolicy, simulate_counterfactual
from ..data import LabConfig, load_config, load_dataset, preset, save_dataset
from ..data.dataset_base import write_json
from ..domain import SlotTable, restrict_sample, validate
from ..estimate import column_table, fit_columns, fit_pipeline, load_fit, save_fit
from ..metrics import (
    data_equivalent_alpha, frontier_sweep, gini, index_by_position, lorenz_curve,
    model_fit_lorenz, observed_counts, appearance_counts, position_shares, price_cdfs,
    summary_report,
)
from ..src.errors import DataIOError, RanklabError, UsageError, ValidationError
from ..src.logging_utils import configure_logging, get_logger, log
from ..synth import generate_dataset
from .manifest import RunManifest, hash_inputs

logger = get_logger(__name__)


# ---------------------------------------------------------------------------
# helpers


def _config(args) -> LabConfig:
    base = preset(args.preset) if args.preset else LabConfig.defaults()
    cfg = load_config(args.config, base)
    pairs = {}
    for item in args.set or ():
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got '{item}'")
        key, value = item.split("=", 1)
        pairs[key.strip()] = value.strip()
    return cfg.with_overrides(pairs) if pairs else cfg


def _out(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise DataIOError(f"cannot create '{out}': {err}") from err
    return out


def _table(data_dir, cfg: LabConfig) -> SlotTable:
    data = restrict_sample(load_dataset(data_dir), cfg.estimate.min_requests)
    return SlotTable.from_dataset(data, winsor_percentile=cfg.estimate.winsor_percentile)


def _model(fit_dir, table):
    """Clustered fit when the directory holds a clustering, pooled otherwise."""
    path = Path(fit_dir)
    if not path.is_dir():
        raise DataIOError(f"fit directory '{path}' does not exist")
    if (path / CLUSTERS_FILE).exists():
        return load_clustered_fit(path, table)
    return load_fit(path)


def _csv(frame, path: Path, **kw) -> None:
    try:
        frame.to_csv(path, float_format="%.10g", **kw)
    except OSError as err:
        raise DataIOError(f"cannot write '{path}': {err}") from err


def _text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as err:
        raise DataIOError(f"cannot write '{path}': {err}") from err


def _parse_alphas(text: str) -> List[float]:
    try:
        alphas = [float(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise UsageError(f"malformed alpha list '{text}'") from None
    if not alphas or any(not 0.0 <= a <= 1.0 for a in alphas):
        raise UsageError(f"alphas must be a nonempty list in [0, 1], got '{text}'")
    return alphas


def _manifest(args, cfg: LabConfig, out: Path, inputs: Sequence, seed=None, **extra) -> None:
    RunManifest(
        command=args.command,
        argv=list(args.argv),
        config_path=args.config,
        seed=seed,
        inputs=hash_inputs([Path(p) for p in inputs]),
        output=str(out),
        config=cfg.to_lines(),
        extra=extra,
    ).write()


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args, cfg: LabConfig) -> int:
    out = _out(args)
    data = generate_dataset(cfg.market, cfg.estimate.winsor_percentile)
    save_dataset(data, out)
    _manifest(args, cfg, out, [], seed=cfg.market.seed, searches=len(data.searches))
    return 0


def cmd_validate(args, cfg: LabConfig) -> int:
    report = validate(load_dataset(args.data))
    for line in report.lines():
        print(line)
    counts = report.count_by_kind()
    if args.out:
        out = _out(args)
        _text(out / "validation.txt", "".join(f"{line}\n" for line in report.lines()))
        _manifest(args, cfg, out, [args.data], violations=counts)
    if not report.valid:
        raise ValidationError(f"{len(report.violations)} violations: {counts}")
    print("valid")
    return 0


def cmd_estimate(args, cfg: LabConfig) -> int:
    out = _out(args)
    table = _table(args.data, cfg)
    fit = fit_pipeline(table, cfg.estimate)
    save_fit(fit, out)
    _csv(fit.request.table(), out / "request.csv")
    _csv(fit.click.table(), out / "click.csv")
    _csv(_r2_frame(fit.projection), out / "projection_r2.csv")
    _csv(fit.normalization.table(), out / "euros.csv", index=False)
    extra: Dict[str, Any] = {
        "request_loglik": fit.request.loglik, "click_loglik": fit.click.loglik,
        "request_converged": fit.request.converged, "click_converged": fit.click.converged,
    }

    if args.columns:
        cols = fit_columns(table, cfg.estimate)
        _csv(column_table(cols["request"]), out / "request_columns.csv")
        _csv(column_table(cols["click"]), out / "click_columns.csv")

    if args.clusters:
        ccfg = replace(cfg.cluster, k=args.clusters)
        cdir = out / "clusters"
        result = cluster_users(table, ccfg)
        save_clustering(result, cdir)
        uc = user_clusters(table, result.user_ids, result.assignment.labels)
        clustered = fit_by_cluster(table, uc, ccfg.k, cfg.estimate)
        save_clustered_fit(clustered, cdir)
        _csv(cluster_profile(table, uc), cdir / PROFILE_FILE)
        extra.update(k=ccfg.k, silhouette=result.silhouette, cluster_cost=result.assignment.cost)
        _manifest(args, cfg, cdir, [args.data], seed=ccfg.seed, k=ccfg.k, silhouette=result.silhouette,
                  cost=result.assignment.cost)

    _manifest(args, cfg, out, [args.data], **extra)
    return 0


def _r2_frame(projection) -> pd.DataFrame:
    return pd.Series(projection.r2_map(), name="r2").rename_axis("component").to_frame()


def cmd_report(args, cfg: LabConfig) -> int:
    out = _out(args)
    table = _table(args.data, cfg)
    _text(out / "summary.txt", summary_report(table).to_text())
    _csv(position_shares(table), out / "positions.csv")
    cdfs = price_cdfs(table)
    _csv(cdfs.frame, out / "price_cdfs.csv", index=False)

    inputs = [args.data]
    if args.fit:
        model = _model(args.fit, table)
        lorenz = model_fit_lorenz(table, model, cfg.counterfact.utility)
        _csv(index_by_position(table, model, cfg.counterfact.utility), out / "index_by_position.csv")
        inputs.append(args.fit)
    else:
        series = {
            "appearances": appearance_counts(table),
            "observed_clicks": observed_counts(table, "clicked"),
            "observed_requests": observed_counts(table, "requested"),
        }
        lorenz = pd.concat([lorenz_curve(c).to_frame(k) for k, c in series.items() if c.sum() > 0],
                           ignore_index=True)
    _csv(lorenz, out / "lorenz.csv", index=False)
    _manifest(args, cfg, out, inputs, mean_prices=cdfs.means)
    return 0


def cmd_simulate(args, cfg: LabConfig) -> int:
    out = _out(args)
    table = _table(args.data, cfg)
    model = _model(args.fit, table)
    policy = RankingPolicy.parse(args.policy)
    seed = cfg.counterfact.seed if args.seed is None else args.seed
    cf = simulate_counterfactual(table, model, policy, seed=seed, utility_mode=cfg.counterfact.utility,
                                 garble=args.garble, garble_universe=cfg.counterfact.garble_universe)
    cf.save(out)
    stats = {
        "gini_clicks": gini(cf.room_counts("clicked")),
        "gini_requests": gini(cf.room_counts("requested")),
        "avg_u_requested": cf.mean_euro_utility("requested"),
    }
    print(" ".join(f"{k}={v:.6g}" for k, v in stats.items()))
    _manifest(args, cfg, out, [args.data, args.fit], seed=seed, policy=policy.label(), **stats)
    return 0


def cmd_frontier(args, cfg: LabConfig) -> int:
    out = _out(args)
    table = _table(args.data, cfg)
    model = _model(args.fit, table)
    alphas = _parse_alphas(args.alphas) if args.alphas else list(cfg.counterfact.alphas)
    n_seeds = cfg.counterfact.seeds_per_alpha if args.seeds is None else args.seeds
    seed = cfg.counterfact.seed if args.seed is None else args.seed
    frontier = frontier_sweep(table, model, alphas, n_seeds, base_seed=seed,
                              utility_mode=cfg.counterfact.utility, garble=args.garble,
                              garble_universe=cfg.counterfact.garble_universe)
    frontier.write_csv(out / "frontier.csv")

    equivalent = {}
    for event, column in (("clicked", "gini_clicks"), ("requested", "gini_requests")):
        counts = observed_counts(table, event)
        if counts.sum() > 0:
            equivalent[column] = data_equivalent_alpha(frontier, gini(counts), column)
    write_json(out / "data_equivalent_alpha.json", equivalent)
    _manifest(args, cfg, out, [args.data, args.fit], seed=seed, alphas=alphas, seeds=n_seeds,
              garbled=bool(args.garble))
    return 0


def cmd_cluster(args, cfg: LabConfig) -> int:
    out = _out(args)
    ccfg = cfg.cluster if args.k is None else replace(cfg.cluster, k=args.k)
    table = _table(args.data, cfg)
    result = cluster_users(table, ccfg)
    save_clustering(result, out)
    _csv(cluster_profile(table, user_clusters(table, result.user_ids, result.assignment.labels)),
         out / PROFILE_FILE)
    _manifest(args, cfg, out, [args.data], seed=ccfg.seed, k=ccfg.k, cost=result.assignment.cost,
              silhouette=result.silhouette)
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "validate": cmd_validate,
    "estimate": cmd_estimate,
    "report": cmd_report,
    "simulate": cmd_simulate,
    "frontier": cmd_frontier,
    "cluster": cmd_cluster,
}


# ---------------------------------------------------------------------------
# parser


def _common_options(parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument("--preset", help="start from a named preset (small, desk, vertical)")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one configuration key; repeatable")
    parser.add_argument("--threads", type=int, help="worker threads (default: RANKLAB_THREADS or all cores)")
    parser.add_argument("--log-level", help="DEBUG, INFO (default), WARNING or ERROR")
    parser.add_argument("-v", "--verbose", action="store_true", help="same as --log-level DEBUG")
    return parser


def build_parser() -> argparse.ArgumentParser:
    # subcommand copies of the global options carry no defaults
    common = _common_options(argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS))

    parser = _common_options(argparse.ArgumentParser(
        prog="ranklab", description="Ranking, congestion and matching experiments on search logs."))
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--print-config", action="store_true", help="print the effective configuration and exit")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("generate", parents=[common], help="synthesize a dataset directory")
    p.add_argument("--out", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a dataset for integrity violations")
    p.add_argument("--data", required=True)
    p.add_argument("--out")

    p = sub.add_parser("estimate", parents=[common], help="fit the request and click models")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--clusters", type=int, metavar="K", help="also cluster users and fit each cluster")
    p.add_argument("--columns", action="store_true", help="also fit the nested specification columns")

    p = sub.add_parser("report", parents=[common], help="descriptive tables and Lorenz curves")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fit", help="fit directory for model-fit Lorenz curves")

    p = sub.add_parser("simulate", parents=[common], help="counterfactual logs under one ranking policy")
    p.add_argument("--data", required=True)
    p.add_argument("--fit", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--policy", required=True, help="statusquo | personalized | random | blend:ALPHA")
    p.add_argument("--garble", action="store_true", help="relabel rooms across searches")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("frontier", parents=[common], help="utility/congestion frontier over alpha")
    p.add_argument("--data", required=True)
    p.add_argument("--fit", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alphas", help="comma-separated weights in [0, 1]")
    p.add_argument("--seeds", type=int)
    p.add_argument("--seed", type=int, help="first seed")
    p.add_argument("--garble", action="store_true")

    p = sub.add_parser("cluster", parents=[common], help="cluster users by implicit search filters")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    configure_logging("DEBUG" if args.verbose else (args.log_level or "INFO"))

    try:
        if args.threads is not None:
            if args.threads < 1:
                raise UsageError(f"--threads must be >= 1, got {args.threads}")
            set_threads(args.threads)
        cfg = _config(args)
        if args.print_config:
            print("\n".join(cfg.to_lines()))
            return 0
        if not args.command:
            parser.print_usage(sys.stderr)
            return UsageError.exit_code
        return COMMANDS[args.command](args, cfg)
    except RanklabError as err:
        log(logger, 40, "command_failed", command=args.command, error=type(err).__name__)
        print(f"ranklab: error: {err}", file=sys.stderr)
        return err.exit_code
