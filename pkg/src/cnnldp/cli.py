"""Command-line entry point: ``cnnldp {gen-dataset,train,run,compare}``."""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, load_config
from .dataset import generate_dataset, load_dataset, priority_samples, rb_samples, save_dataset
from .errors import ConfigError, DomainError, InvariantViolation, NonFiniteError
from .interference import ConflictGraph, build_conflict_graph, write_conflicts_csv
from .metrics import MetricsReport, linear_gain_percent, sinr_gain_percent, summarize, write_sinr_csv
from .nn import build_cnn, load_model, save_model, train
from .scheduler import ModelPair, ScheduleTrace, run_horizon, schedule_conflicts
from .topology import Network, generate_network, write_network_csv
from .traffic import generate_traffic, write_traffic_csv

log = logging.getLogger("cnnldp")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INVARIANT = 0, 2, 3, 4

COMPARISON_COLUMNS = ("metric", "a", "b", "gain_percent")
COMPARED_METRICS = (
    "mean_sinr_db",
    "sinr_q25_db",
    "sinr_q75_db",
    "mean_sinr_linear",
    "schedulable_ratio",
    "reliability",
    "capacity",
    "mean_latency_s",
    "deadline_misses",
    "messages_sent",
)


def _resolve(out: Path, p: str) -> Path:
    path = Path(p)
    return path if path.is_absolute() else out / path


def scenario_seeds(seed: int) -> tuple[int, int]:
    """Independent network and traffic seeds derived from one run seed."""
    a, b = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint32)
    return int(a), int(b)


# ---------------------------------------------------------------------------
# gen-dataset / train


def cmd_gen_dataset(cfg: ScenarioConfig, out: Path) -> Path:
    d = cfg.dataset
    ds = generate_dataset(
        d.n_samples,
        d.n_links,
        cfg.run.n_rb,
        d.seed,
        max_demand=d.max_demand,
        deadline_scale=d.deadline_scale,
        exclusion_factor=d.exclusion_factor,
        rb_rows=cfg.model.rb_rows,
    )
    path = save_dataset(ds, _resolve(out, d.dir))
    log.info("wrote %d samples x %d links to %s", ds.n_samples, ds.n_links, path)
    return path


def cmd_train(cfg: ScenarioConfig, out: Path, which: str) -> tuple[Path, Path]:
    if which not in ("priority", "rb"):
        raise ConfigError(f"unknown model {which!r}")
    data_dir = _resolve(out, cfg.dataset.dir)
    try:
        ds = load_dataset(data_dir)
    except FileNotFoundError as exc:
        raise ConfigError(f"{exc}; run gen-dataset first") from exc
    m = cfg.model
    if which == "priority":
        data = priority_samples(ds)
        model = build_cnn(ds.n_links, data.x.shape[2], ds.categories, m.conv_filters, m.dense_units, seed=m.seed)
        model.metadata.update(
            kind="priority",
            feature_min=ds.feature_min.tolist(),
            feature_span=ds.feature_span.tolist(),
        )
        loss_kind, mu = "ce_l1", 0.0
    else:
        if ds.n_rb != cfg.run.n_rb:
            raise ConfigError(f"dataset was built for {ds.n_rb} RBs, run.n_rb is {cfg.run.n_rb}")
        data = rb_samples(ds)
        rows, cols = data.x.shape[1:3]
        model = build_cnn(rows, cols, ds.n_rb, m.rb_conv_filters, m.rb_dense_units, seed=m.seed)
        model.metadata.update(kind="rb", n_rb=ds.n_rb)
        loss_kind, mu = "ldp_shared", m.mu

    def progress(rec):
        log.info("%s epoch %d loss %.5f val %.5f acc %.4f", which, rec.epoch, rec.train_loss, rec.val_loss, rec.train_acc)

    report = train(
        model, data, m.epochs, m.learning_rate, m.batch_size, m.split, m.seed,
        loss_kind=loss_kind, l1_weight=m.l1_weight, mu=mu, log=progress,
    )
    model_path = _resolve(out, m.priority if which == "priority" else m.rb)
    model_path.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, model_path)
    report_path = model_path.with_name(f"train_{which}.csv")
    report.write_csv(report_path)
    return model_path, report_path


# ---------------------------------------------------------------------------
# run / compare


@dataclass
class RunResult:
    cfg: ScenarioConfig
    net: Network
    graph: ConflictGraph
    trace: ScheduleTrace
    report: MetricsReport


def load_models(cfg: ScenarioConfig, out: Path) -> ModelPair:
    paths = [_resolve(out, cfg.model.priority), _resolve(out, cfg.model.rb)]
    missing = [str(p) for p in paths if not p.is_file()]
    if missing:
        raise ConfigError(f"scheduler=cnn needs trained models; missing: {', '.join(missing)}")
    return ModelPair(load_model(paths[0]), load_model(paths[1]))


def simulate(cfg: ScenarioConfig, models: ModelPair | None = None) -> RunResult:
    """Build the scenario and run the configured scheduler; writes nothing."""
    net_seed, traffic_seed = scenario_seeds(cfg.run.seed)
    net = generate_network(cfg.network, net_seed)
    g = build_conflict_graph(net, cfg.run.exclusion_factor)
    specs = generate_traffic(net, cfg.traffic, traffic_seed)
    if cfg.run.scheduler == "cnn" and models is None:
        raise ConfigError("scheduler=cnn requires models")
    trace = run_horizon(
        net, g, specs, cfg.run.scheduler, models, horizon=cfg.run.horizon,
        seed=cfg.run.seed, gate_threshold=cfg.run.gate_threshold,
    )
    for s in trace.slots:
        bad = schedule_conflicts(g, s.state)
        if bad:
            rb, i, j = bad[0]
            raise InvariantViolation(f"slot {s.t}: links {i} and {j} both ACTIVE on RB {rb}")
    return RunResult(cfg, net, g, trace, summarize(trace, net, g, cfg.metrics))


def write_run(res: RunResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    res.trace.write_csv(out, messages=res.cfg.run.scheduler == "cnn")
    res.report.write(out / "report.json")
    write_sinr_csv(res.trace, res.net, res.graph, out / "sinr.csv", res.cfg.metrics)
    write_network_csv(res.net, out)
    write_conflicts_csv(res.graph, out / "conflicts.csv")
    write_traffic_csv(res.trace.specs, out / "traffic.csv")


def summary_line(r: MetricsReport) -> str:
    return (
        f"{r.scheduler}: mean SINR {r.mean_sinr_db:.2f} dB, schedulable {r.schedulable_ratio:.3f}, "
        f"reliability {r.reliability:.3f}, capacity {r.capacity:.2f}"
    )


def cmd_run(cfg: ScenarioConfig, out: Path, models_from: Path | None = None) -> RunResult:
    models = load_models(cfg, models_from or out) if cfg.run.scheduler == "cnn" else None
    res = simulate(cfg, models)
    write_run(res, out)
    return res


def comparison_rows(a: MetricsReport, b: MetricsReport) -> list[tuple[str, float, float, float]]:
    """Per-metric values and the relative change of ``a`` over ``b`` in percent."""
    rows = []
    for name in COMPARED_METRICS:
        va, vb = float(getattr(a, name)), float(getattr(b, name))
        if name == "mean_sinr_db":
            gain = sinr_gain_percent(va, vb)
        elif name == "mean_sinr_linear":
            gain = linear_gain_percent(va, vb)
        elif vb == 0:
            gain = 0.0 if va == 0 else math.nan
        else:
            gain = (va - vb) / abs(vb) * 100.0
        rows.append((name, va, vb, gain))
    return rows


def write_comparison(rows, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(COMPARISON_COLUMNS)
        for name, va, vb, gain in rows:
            wr.writerow([name, repr(va), repr(vb), repr(gain)])


def cmd_compare(cfg_a: ScenarioConfig, cfg_b: ScenarioConfig, out: Path) -> list[tuple[str, float, float, float]]:
    res = []
    for tag, cfg in (("a", cfg_a), ("b", cfg_b)):
        res.append(cmd_run(cfg, out / tag, models_from=out))
    rows = comparison_rows(res[0].report, res[1].report)
    write_comparison(rows, out / "comparison.csv")
    return rows


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML scenario file or preset name")
    common.add_argument("--seed", type=int, default=None, help="override run.seed")
    common.add_argument("--out", default=None, help="output/work directory (default: config 'output')")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="cnnldp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-dataset", parents=[common], help="generate the training corpus")
    t = sub.add_parser("train", parents=[common], help="train the priority and/or RB model")
    t.add_argument("--which", choices=("priority", "rb", "both"), default="both")
    r = sub.add_parser("run", parents=[common], help="simulate one scenario")
    r.add_argument("--scheduler", choices=("baseline", "cnn"), default=None, help="override run.scheduler")
    r.add_argument("--horizon", type=int, default=None, help="override run.horizon")
    c = sub.add_parser("compare", parents=[common], help="run two scenarios side by side")
    c.add_argument(
        "--against",
        default=None,
        help="second config (default: the same config with scheduler=baseline, first run as cnn)",
    )
    return p


def _apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    kw = {}
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        kw["seed"] = args.seed
    if getattr(args, "scheduler", None):
        kw["scheduler"] = args.scheduler
    if getattr(args, "horizon", None) is not None:
        kw["horizon"] = args.horizon
    if kw:
        cfg = cfg.with_run(**kw)
        cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        out = Path(args.out if args.out is not None else cfg.output)
        if args.command == "gen-dataset":
            print(cmd_gen_dataset(cfg, out))
        elif args.command == "train":
            for which in ("priority", "rb") if args.which == "both" else (args.which,):
                model_path, report_path = cmd_train(cfg, out, which)
                print(f"{which}: {model_path} ({report_path.name})")
        elif args.command == "run":
            print(summary_line(cmd_run(cfg, out).report))
        elif args.command == "compare":
            if args.against:
                cfg_b = _apply_overrides(load_config(args.against), args)
            else:
                cfg, cfg_b = cfg.with_run(scheduler="cnn"), cfg.with_run(scheduler="baseline")
            rows = cmd_compare(cfg, cfg_b, out)
            for name, va, vb, gain in rows:
                print(f"{name:18s} {va:14.6g} {vb:14.6g} {gain:9.2f}%")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonFiniteError, DomainError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
