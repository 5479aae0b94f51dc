"""Experiment runner: config parsing, sampler dispatch, result emission.

Configs are INI-style "key = value" sections.  Every run is reproducible
from (config, seed): a single root seed feeds named substreams per
component, and outputs carry a manifest with the config hash so results can
be traced back to their exact settings.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import configparser
import csv
import hashlib
import io
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .data import generate_lr_data, load_csv_dataset, save_csv_dataset, standardize_dataset
from .diagnostics import ess_per_dimension, summarize, speedup
from .hmc import (
    EXPLOITATION,
    HMCConfig,
    RngStreams,
    run_arns_hmc,
    run_gp_hmc,
    run_hmc,
    run_rns_hmc,
    vanishing_schedule,
)
from .surrogates import save_surrogate
from .targets import BananaTarget, GaussianTarget, LogisticRegressionTarget

TARGET_KINDS = ("gaussian", "banana", "logistic-sim", "logistic-csv")
SAMPLER_KINDS = ("hmc", "rns-hmc", "arns-hmc", "gp-hmc")
SURROGATE_SAMPLERS = ("rns-hmc", "arns-hmc", "gp-hmc")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3


class ConfigError(Exception):
    """Configuration problem with file/section/key context."""

    def __init__(self, message, path=None, section=None, key=None):
        self.path = path
        self.section = section
        self.key = key
        where = []
        if path:
            where.append(str(path))
        if section:
            where.append(f"[{section}]")
        if key:
            where.append(key)
        prefix = " ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


@dataclass(frozen=True)
class TargetSpec:
    kind: str
    dim: int | None = None
    main_variance: float = 1.0
    minor_variance: float = 0.01
    bend: float = 0.1
    scale: float = 10.0
    observations: int | None = None
    data_seed: int | None = None
    prior_variance: float = 100.0
    standardize: bool = False
    path: str | None = None
    label_column: str | None = None


@dataclass(frozen=True)
class SamplerSpec:
    kind: str
    step_size: float
    leapfrog_steps: int
    jitter: bool = True
    mass_diagonal: tuple | None = None
    warmup: int = 0
    burnin: int = 0
    samples: int = 1


@dataclass(frozen=True)
class SurrogateSpec:
    hidden_units: int = 1000
    node_kind: str = "additive"
    ridge: float = 1e-6
    include_rejected: bool = False
    node_candidates: int = 1
    init_batch: int = 500
    schedule_constant: float = 10.0
    signal_variance: float = 1.0
    length_scale: float | None = None
    noise_variance: float = 1e-2


@dataclass(frozen=True)
class FixtureSpec:
    reference_iterations: int = 200000
    reference_burnin: int = 10000


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    target: TargetSpec
    sampler: SamplerSpec
    surrogate: SurrogateSpec | None = None
    fixture: FixtureSpec = field(default_factory=FixtureSpec)
    output: str | None = None
    chains: int = 1
    divergence_budget: int | None = None


def _cast_bool(raw):
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _cast_float_list(raw):
    return tuple(float(part) for part in raw.split(","))


# section -> key -> (dataclass field, caster)
_SCHEMA = {
    "experiment": {
        "seed": ("seed", int),
        "output": ("output", str),
        "chains": ("chains", int),
        "divergence-budget": ("divergence_budget", int),
    },
    "target": {
        "kind": ("kind", str),
        "dim": ("dim", int),
        "main-variance": ("main_variance", float),
        "minor-variance": ("minor_variance", float),
        "bend": ("bend", float),
        "scale": ("scale", float),
        "observations": ("observations", int),
        "data-seed": ("data_seed", int),
        "prior-variance": ("prior_variance", float),
        "standardize": ("standardize", _cast_bool),
        "path": ("path", str),
        "label-column": ("label_column", str),
    },
    "sampler": {
        "kind": ("kind", str),
        "step-size": ("step_size", float),
        "leapfrog-steps": ("leapfrog_steps", int),
        "jitter": ("jitter", _cast_bool),
        "mass-diagonal": ("mass_diagonal", _cast_float_list),
        "warmup": ("warmup", int),
        "burnin": ("burnin", int),
        "samples": ("samples", int),
    },
    "surrogate": {
        "hidden-units": ("hidden_units", int),
        "node-kind": ("node_kind", str),
        "ridge": ("ridge", float),
        "include-rejected": ("include_rejected", _cast_bool),
        "node-candidates": ("node_candidates", int),
        "init-batch": ("init_batch", int),
        "schedule-constant": ("schedule_constant", float),
        "signal-variance": ("signal_variance", float),
        "length-scale": ("length_scale", float),
        "noise-variance": ("noise_variance", float),
    },
    "fixture": {
        "reference-iterations": ("reference_iterations", int),
        "reference-burnin": ("reference_burnin", int),
    },
}

_REQUIRED = {
    "experiment": ("seed",),
    "target": ("kind",),
    "sampler": ("kind", "step-size", "leapfrog-steps", "samples"),
}


def _read_section(parser, section, path):
    if section not in parser:
        return {}
    schema = _SCHEMA[section]
    values = {}
    for key, raw in parser[section].items():
        if key not in schema:
            raise ConfigError(
                f"unknown key {key!r} (known keys: {sorted(schema)})",
                path=path,
                section=section,
                key=key,
            )
        attr, caster = schema[key]
        try:
            values[attr] = caster(raw)
        except ValueError as exc:
            raise ConfigError(
                f"bad value {raw!r}: {exc}", path=path, section=section, key=key
            ) from None
    return values


def _require(parser, path):
    for section, keys in _REQUIRED.items():
        if section not in parser:
            raise ConfigError(f"missing [{section}] section", path=path)
        for key in keys:
            if key not in parser[section]:
                raise ConfigError("required key missing", path=path, section=section, key=key)


def _validate(cfg, path=None):
    tgt, smp = cfg.target, cfg.sampler
    def fail(message, section=None, key=None):
        raise ConfigError(message, path=path, section=section, key=key)

    if cfg.chains < 1:
        fail("chains must be at least 1", "experiment", "chains")
    if cfg.divergence_budget is not None and cfg.divergence_budget < 0:
        fail("divergence-budget must be non-negative", "experiment", "divergence-budget")
    if tgt.kind not in TARGET_KINDS:
        fail(f"unknown target kind {tgt.kind!r} (choices: {TARGET_KINDS})", "target", "kind")
    if tgt.kind in ("gaussian", "logistic-sim") and (tgt.dim is None or tgt.dim < 1):
        fail("dim is required and must be positive", "target", "dim")
    if tgt.kind == "logistic-sim":
        if tgt.dim < 2:
            fail("logistic-sim needs dim >= 2", "target", "dim")
        if tgt.observations is None or tgt.observations < 1:
            fail("observations is required and must be positive", "target", "observations")
    if tgt.kind == "logistic-csv":
        if not tgt.path:
            fail("path is required", "target", "path")
        if not tgt.label_column:
            fail("label-column is required", "target", "label-column")
        if path is not None and not Path(tgt.path).exists():
            fail(f"dataset file {tgt.path!r} does not exist", "target", "path")
    if tgt.kind == "banana" and (tgt.bend < 0 or tgt.scale <= 0):
        fail("banana needs bend >= 0 and scale > 0", "target")
    if tgt.prior_variance <= 0:
        fail("prior-variance must be positive", "target", "prior-variance")
    if smp.kind not in SAMPLER_KINDS:
        fail(f"unknown sampler kind {smp.kind!r} (choices: {SAMPLER_KINDS})", "sampler", "kind")
    if smp.step_size <= 0:
        fail("step-size must be positive", "sampler", "step-size")
    if smp.leapfrog_steps < 1:
        fail("leapfrog-steps must be at least 1", "sampler", "leapfrog-steps")
    if smp.samples < 1:
        fail("samples must be at least 1", "sampler", "samples")
    if smp.warmup < 0 or smp.burnin < 0:
        fail("warmup and burnin must be non-negative", "sampler")
    if smp.mass_diagonal is not None and any(m <= 0 for m in smp.mass_diagonal):
        fail("mass-diagonal entries must be positive", "sampler", "mass-diagonal")
    if smp.kind in ("rns-hmc", "gp-hmc") and not smp.burnin > smp.warmup:
        fail("surrogate samplers need burnin > warmup", "sampler", "burnin")
    if smp.kind in SURROGATE_SAMPLERS:
        if cfg.surrogate is None:
            fail(f"sampler {smp.kind!r} needs a [surrogate] section", "surrogate")
        sur = cfg.surrogate
        if sur.hidden_units < 1:
            fail("hidden-units must be at least 1", "surrogate", "hidden-units")
        if sur.node_kind not in ("additive", "rbf"):
            fail(f"unknown node-kind {sur.node_kind!r}", "surrogate", "node-kind")
        if sur.ridge < 0:
            fail("ridge must be non-negative", "surrogate", "ridge")
        if sur.node_candidates < 1:
            fail("node-candidates must be at least 1", "surrogate", "node-candidates")
        if sur.init_batch < 0:
            fail("init-batch must be non-negative", "surrogate", "init-batch")
        if smp.kind == "arns-hmc" and sur.init_batch >= smp.burnin + smp.samples:
            fail("init-batch must be smaller than burnin + samples", "surrogate", "init-batch")
        if sur.schedule_constant <= 0:
            fail("schedule-constant must be positive", "surrogate", "schedule-constant")
        if sur.signal_variance <= 0 or sur.noise_variance < 0:
            fail("need signal-variance > 0 and noise-variance >= 0", "surrogate")
        if sur.length_scale is not None and sur.length_scale <= 0:
            fail("length-scale must be positive", "surrogate", "length-scale")
    elif cfg.surrogate is not None:
        fail("[surrogate] section is only valid for surrogate samplers", "surrogate")
    if cfg.fixture.reference_iterations < 1 or cfg.fixture.reference_burnin < 0:
        fail("reference-iterations must be >= 1 and reference-burnin >= 0", "fixture")
    return cfg


def parse_config(path):
    """Parse and validate an experiment config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError("config file does not exist", path=path)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse: {exc}", path=path) from None
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(
                f"unknown section [{section}] (known: {sorted(_SCHEMA)})", path=path
            )
    _require(parser, path)
    experiment = _read_section(parser, "experiment", path)
    target = TargetSpec(**_read_section(parser, "target", path))
    sampler = SamplerSpec(**_read_section(parser, "sampler", path))
    surrogate = (
        SurrogateSpec(**_read_section(parser, "surrogate", path))
        if "surrogate" in parser
        else None
    )
    fixture = FixtureSpec(**_read_section(parser, "fixture", path))
    cfg = ExperimentConfig(
        target=target, sampler=sampler, surrogate=surrogate, fixture=fixture, **experiment
    )
    return _validate(cfg, path=path)


def _emit_section(lines, name, spec, schema):
    pairs = []
    for key, (attr, _) in schema.items():
        value = getattr(spec, attr)
        if value is None:
            continue
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, tuple):
            value = ",".join(repr(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        pairs.append(f"{key} = {value}")
    if pairs:
        lines.append(f"[{name}]")
        lines.extend(pairs)
        lines.append("")


def serialize_config(cfg):
    """Canonical text form; parse(serialize(parse(f))) == parse(f)."""
    lines = []
    _emit_section(lines, "experiment", cfg, _SCHEMA["experiment"])
    _emit_section(lines, "target", cfg.target, _SCHEMA["target"])
    _emit_section(lines, "sampler", cfg.sampler, _SCHEMA["sampler"])
    if cfg.surrogate is not None:
        _emit_section(lines, "surrogate", cfg.surrogate, _SCHEMA["surrogate"])
    _emit_section(lines, "fixture", cfg.fixture, _SCHEMA["fixture"])
    return "\n".join(lines)


def parse_config_text(text):
    """Parse a config from a string (used for round-trip checks)."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_string(text)
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
    experiment = _read_section(parser, "experiment", None)
    target = TargetSpec(**_read_section(parser, "target", None))
    sampler = SamplerSpec(**_read_section(parser, "sampler", None))
    surrogate = (
        SurrogateSpec(**_read_section(parser, "surrogate", None))
        if "surrogate" in parser
        else None
    )
    fixture = FixtureSpec(**_read_section(parser, "fixture", None))
    return _validate(
        ExperimentConfig(
            target=target, sampler=sampler, surrogate=surrogate, fixture=fixture, **experiment
        )
    )


def config_hash(cfg):
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()


def build_target(cfg):
    """Construct the target model described by a config."""
    tgt = cfg.target
    if tgt.kind == "gaussian":
        return GaussianTarget.correlated(
            tgt.dim, main_variance=tgt.main_variance, minor_variance=tgt.minor_variance
        )
    if tgt.kind == "banana":
        return BananaTarget(bend=tgt.bend, scale=tgt.scale)
    if tgt.kind == "logistic-sim":
        data_seed = tgt.data_seed if tgt.data_seed is not None else cfg.seed
        dataset, _ = generate_lr_data(tgt.dim, tgt.observations, data_seed)
        if tgt.standardize:
            dataset = standardize_dataset(dataset)
        return LogisticRegressionTarget(
            dataset.features, dataset.labels, prior_variance=tgt.prior_variance
        )
    if tgt.kind == "logistic-csv":
        dataset = load_csv_dataset(tgt.path, tgt.label_column, standardize=tgt.standardize)
        return LogisticRegressionTarget(
            dataset.features, dataset.labels, prior_variance=tgt.prior_variance
        )
    raise ConfigError(f"unknown target kind {tgt.kind!r}")


def _hmc_config(cfg):
    smp = cfg.sampler
    mass = np.asarray(smp.mass_diagonal) if smp.mass_diagonal is not None else None
    return HMCConfig(
        step_size=smp.step_size,
        n_leapfrog=smp.leapfrog_steps,
        mass_diagonal=mass,
        jitter_steps=smp.jitter,
        seed=cfg.seed,
    )


def _run_one_chain(cfg, target, chain_index, sampler_kind=None):
    """Run the configured sampler for one chain index; returns (chain, surrogate)."""
    smp = cfg.sampler
    kind = sampler_kind or smp.kind
    hmc_cfg = _hmc_config(cfg)
    streams = RngStreams(cfg.seed, chain_index=chain_index)
    q0 = np.zeros(target.dim)
    if kind == "hmc":
        chain = run_hmc(
            target,
            hmc_cfg,
            q0,
            smp.burnin + smp.samples,
            burn_in=smp.burnin,
            streams=streams,
        )
        return chain, None
    sur = cfg.surrogate
    if kind == "rns-hmc":
        return run_rns_hmc(
            target,
            hmc_cfg,
            q0,
            smp.burnin,
            smp.warmup,
            smp.samples,
            n_hidden=sur.hidden_units,
            node_kind=sur.node_kind,
            ridge=sur.ridge,
            include_rejected=sur.include_rejected,
            n_node_candidates=sur.node_candidates,
            streams=streams,
        )
    if kind == "gp-hmc":
        chain, gp = run_gp_hmc(
            target,
            hmc_cfg,
            q0,
            smp.burnin,
            smp.warmup,
            smp.samples,
            signal_variance=sur.signal_variance,
            length_scale=sur.length_scale,
            noise_variance=sur.noise_variance,
            include_rejected=sur.include_rejected,
            streams=streams,
        )
        return chain, gp
    if kind == "arns-hmc":
        return run_arns_hmc(
            target,
            hmc_cfg,
            q0,
            smp.burnin + smp.samples,
            n_hidden=sur.hidden_units,
            node_kind=sur.node_kind,
            schedule=vanishing_schedule(sur.schedule_constant),
            init_batch=sur.init_batch,
            streams=streams,
        )
    raise ConfigError(f"unknown sampler kind {kind!r}")


def write_trace_csv(chain, path):
    """Chain trace: iter, phase, accepted, potential, seconds, q_1..q_d."""
    dim = chain.samples.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["iter", "phase", "accepted", "potential", "seconds"]
            + [f"q_{j + 1}" for j in range(dim)]
        )
        for i in range(len(chain)):
            writer.writerow(
                [
                    i + 1,
                    chain.phase[i],
                    int(chain.accepted[i]),
                    repr(float(chain.potentials[i])),
                    repr(float(chain.seconds[i])),
                ]
                + [repr(float(v)) for v in chain.samples[i]]
            )


def _aggregate_reports(chains, reports):
    stacked = np.stack([r.ess_per_dim for r in reports])
    summed = stacked.sum(axis=0)
    total_seconds = float(sum(r.total_seconds for r in reports))
    return {
        "acceptance_rate": float(np.mean([r.acceptance_rate for r in reports])),
        "seconds_per_iteration": float(np.mean([r.seconds_per_iteration for r in reports])),
        "ess": {
            "min": float(np.min(summed)),
            "median": float(np.median(summed)),
            "max": float(np.max(summed)),
        },
        "min_ess_per_second": float(np.min(summed)) / total_seconds,
        "divergences": int(sum(c.divergences for c in chains)),
    }


def run_experiment(cfg, out_dir, dry_run=False):
    """Run the configured experiment and write its artifacts.

    Writes one trace CSV per chain, a report JSON, the surrogate checkpoint
    (when the sampler trained one) and a manifest with the config hash.
    Returns the process exit code.
    """
    out = Path(out_dir)
    plan = {
        "config_sha256": config_hash(cfg),
        "seed": cfg.seed,
        "chains": cfg.chains,
        "target": cfg.target.kind,
        "sampler": cfg.sampler.kind,
    }
    if dry_run:
        print(
            json.dumps(
                {"plan": {**plan, "output_dir": str(out)}, "config": serialize_config(cfg)},
                indent=2,
            )
        )
        return EXIT_OK
    out.mkdir(parents=True, exist_ok=True)
    target = build_target(cfg)
    indices = list(range(cfg.chains))
    if cfg.chains == 1:
        results = [_run_one_chain(cfg, target, 0)]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=cfg.chains) as pool:
            results = list(pool.map(lambda i: _run_one_chain(cfg, target, i), indices))
    chains = [r[0] for r in results]
    surrogates = [r[1] for r in results]
    outputs = []
    for i, chain in enumerate(chains):
        name = "trace.csv" if cfg.chains == 1 else f"trace_{i}.csv"
        write_trace_csv(chain, out / name)
        outputs.append(name)
    total_divergences = sum(c.divergences for c in chains)
    if cfg.divergence_budget is not None and total_divergences > cfg.divergence_budget:
        print(
            json.dumps(
                {
                    "error": "divergence-budget",
                    "message": f"{total_divergences} divergent trajectories exceed "
                    f"budget {cfg.divergence_budget}",
                }
            ),
            file=sys.stderr,
        )
        return EXIT_DIVERGENCE
    reports = [summarize(chain) for chain in chains]
    if cfg.chains == 1:
        report_payload = reports[0].to_dict()
    else:
        report_payload = {
            "chains": [r.to_dict() for r in reports],
            "aggregate": _aggregate_reports(chains, reports),
        }
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report_payload, fh, indent=2)
    outputs.append("report.json")
    for i, surrogate in enumerate(surrogates):
        if surrogate is None:
            continue
        name = "surrogate.json" if cfg.chains == 1 else f"surrogate_{i}.json"
        if hasattr(surrogate, "nodes"):
            save_surrogate(out / name, surrogate, seed=cfg.seed)
            outputs.append(name)
    manifest = {
        "format": "surrhmc/manifest",
        "tool_version": __version__,
        "command": "run",
        **plan,
        "outputs": outputs,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
    return EXIT_OK


def run_comparison(cfg, out_dir):
    """Run hmc and rns-hmc on one config; emit paired efficiency rows."""
    if cfg.surrogate is None:
        raise ConfigError("compare needs a [surrogate] section for the rns-hmc run")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = build_target(cfg)
    baseline_chain, _ = _run_one_chain(cfg, target, 0, sampler_kind="hmc")
    surrogate_chain, surrogate = _run_one_chain(cfg, target, 0, sampler_kind="rns-hmc")
    base_report = summarize(baseline_chain)
    sur_report = summarize(surrogate_chain)
    rows = [
        {"method": "hmc", **base_report.to_dict(speedup_vs_baseline=1.0)},
        {
            "method": "rns-hmc",
            **sur_report.to_dict(speedup_vs_baseline=speedup(sur_report, base_report)),
        },
    ]
    payload = {"baseline": "hmc", "rows": rows, "config_sha256": config_hash(cfg)}
    with open(out / "comparison.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
    header = f"{'method':<10} {'AP':>6} {'ESS (min, med, max)':>30} {'s/iter':>10} {'minESS/s':>10} {'speedup':>8}"
    print(header)
    for row in rows:
        ess_triple = f"({row['ess']['min']:.1f}, {row['ess']['median']:.1f}, {row['ess']['max']:.1f})"
        print(
            f"{row['method']:<10} {row['acceptance_rate']:>6.2f} {ess_triple:>30} "
            f"{row['seconds_per_iteration']:>10.5f} {row['min_ess_per_second']:>10.2f} "
            f"{row['speedup_vs_baseline']:>8.2f}"
        )
    total_div = baseline_chain.divergences + surrogate_chain.divergences
    if cfg.divergence_budget is not None and total_div > cfg.divergence_budget:
        return EXIT_DIVERGENCE
    return EXIT_OK


def generate_fixture(kind, cfg, out_dir):
    """Write a data or reference-mean fixture with a provenance block."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    provenance = {
        "tool_version": __version__,
        "config_sha256": config_hash(cfg),
        "seed": cfg.seed,
    }
    if kind == "lr-data":
        tgt = cfg.target
        if tgt.kind != "logistic-sim":
            raise ConfigError("lr-data fixture needs target kind logistic-sim")
        data_seed = tgt.data_seed if tgt.data_seed is not None else cfg.seed
        dataset, beta = generate_lr_data(tgt.dim, tgt.observations, data_seed)
        save_csv_dataset(dataset, out / "lr_data.csv")
        provenance.update(
            {
                "kind": "lr-data",
                "data_seed": data_seed,
                "dim": tgt.dim,
                "observations": tgt.observations,
                "true_coefficients": beta.tolist(),
            }
        )
        with open(out / "lr_data.provenance.json", "w", encoding="utf-8") as fh:
            json.dump(provenance, fh, indent=2)
        return EXIT_OK
    if kind == "reference-mean":
        target = build_target(cfg)
        hmc_cfg = _hmc_config(cfg)
        iterations = cfg.fixture.reference_iterations
        burnin = cfg.fixture.reference_burnin
        chain = run_hmc(
            target,
            hmc_cfg,
            np.zeros(target.dim),
            burnin + iterations,
            burn_in=burnin,
            streams=RngStreams(cfg.seed),
        )
        mean = chain.exploitation_samples().mean(axis=0)
        provenance.update(
            {"kind": "reference-mean", "iterations": iterations, "burnin": burnin}
        )
        payload = {"mean": mean.tolist(), "provenance": provenance}
        with open(out / "reference_mean.json", "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
        return EXIT_OK
    raise ConfigError(f"unknown fixture kind {kind!r} (choices: lr-data, reference-mean)")


def _load_config(args):
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "chains", None) is not None:
        cfg = replace(cfg, chains=args.chains)
    return _validate(cfg)


def _resolve_out(cfg, args):
    out = getattr(args, "out", None) or cfg.output
    if out is None:
        raise ConfigError("no output directory: set [experiment] output or pass --out")
    return out


def build_parser():
    parser = argparse.ArgumentParser(
        prog="surrhmc",
        description="Surrogate-accelerated Hamiltonian Monte Carlo experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, chains=True):
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")
        if chains:
            p.add_argument("--chains", type=int, default=None, help="independent chains")

    run_p = sub.add_parser("run", help="run the configured sampler")
    add_common(run_p)
    run_p.add_argument(
        "--dry-run",
        action="store_true",
        help="validate the config and print the resolved plan without sampling",
    )

    fixture_p = sub.add_parser("fixture", help="generate a data or reference fixture")
    fixture_p.add_argument("kind", choices=["lr-data", "reference-mean"])
    add_common(fixture_p, chains=False)

    validate_p = sub.add_parser("validate", help="check a config file")
    validate_p.add_argument("--config", required=True)

    compare_p = sub.add_parser("compare", help="run hmc and rns-hmc, report speedup")
    add_common(compare_p, chains=False)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            cfg = parse_config(args.config)
            print(json.dumps({"ok": True, "config_sha256": config_hash(cfg)}))
            return EXIT_OK
        cfg = _load_config(args)
        if args.command == "run":
            return run_experiment(cfg, _resolve_out(cfg, args), dry_run=args.dry_run)
        if args.command == "fixture":
            return generate_fixture(args.kind, cfg, _resolve_out(cfg, args))
        if args.command == "compare":
            return run_comparison(cfg, _resolve_out(cfg, args))
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(
            json.dumps(
                {
                    "error": "config",
                    "message": str(exc),
                    "file": str(exc.path) if exc.path else None,
                    "section": exc.section,
                    "key": exc.key,
                }
            ),
            file=sys.stderr,
        )
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # pragma: no cover - defensive
        print(
            json.dumps({"error": "runtime", "message": f"{type(exc).__name__}: {exc}"}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
