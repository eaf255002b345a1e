"""Run-configuration files and on-disk formats.

Everything here is plain text. Run configurations are JSON documents
validated against a small versioned schema (unknown keys are an error,
so a typo never silently falls back to a default). Trajectories and
node states are CSV; floats are written with 17 significant digits so
the parsed values round-trip exactly. Loading a state renormalizes the
rows after validating them, which can move the last bit.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import analysis, catalog, dynamics, geometry

SCHEMA_RUN = "spheresync-run/1"
SCHEMA_SUMMARY = "spheresync-summary/1"

TRAJECTORY_COLUMNS = ("t", "r", "V_pair", "V_dbody", "max_speed")

# Norm slack accepted when reading a state file before renormalizing.
STATE_NORM_TOL = 1e-6

FREQUENCY_KINDS = ("none", "random")
INITIAL_KINDS = ("random", "colocated", "catalog", "file")


class ConfigError(ValueError):
    """A run configuration failed validation."""


@dataclass(frozen=True)
class FrequencySpec:
    """How to build the per-node rotation generators."""

    kind: str = "none"
    magnitude: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class InitialSpec:
    """Where the initial configuration comes from.

    ``jitter`` adds Gaussian noise of the given scale before the final
    renormalization, which is the standard way to probe stability of an
    exact state.
    """

    kind: str = "random"
    seed: int = 0
    family: str | None = None
    phase0: float = 0.0
    path: str | None = None
    jitter: float = 0.0
    jitter_seed: int = 0


@dataclass(frozen=True)
class OutputSpec:
    trajectory: str | None = None
    summary: str | None = None
    state: str | None = None
    checkpoints: str | None = None


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of one run-configuration file."""

    d: int
    n: int
    kappa2: float = 0.0
    kappa_dbody: float = 0.0
    t_max: float = 100.0
    dt: float | None = None
    steady_tol: float = dynamics.STEADY_TOL
    sample_stride: int = 10
    checkpoint_stride: int = 0
    frequencies: FrequencySpec = field(default_factory=FrequencySpec)
    initial: InitialSpec = field(default_factory=InitialSpec)
    output: OutputSpec = field(default_factory=OutputSpec)


_TOP_KEYS = {"schema", "model", "integration", "frequencies", "initial", "output"}
_MODEL_KEYS = {"d", "n", "kappa2", "kappa_dbody"}
_INTEGRATION_KEYS = {"t_max", "dt", "steady_tol", "sample_stride", "checkpoint_stride"}
_FREQUENCY_KEYS = {"kind", "magnitude", "seed"}
_INITIAL_KEYS = {"kind", "seed", "family", "phase0", "path", "jitter", "jitter_seed"}
_OUTPUT_KEYS = {"trajectory", "summary", "state", "checkpoints"}


def _require_mapping(doc, where: str) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be a JSON object, got {type(doc).__name__}")
    return doc


def _reject_unknown(doc: dict, allowed: set, where: str) -> None:
    extra = sorted(set(doc) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where} must be an integer, got {value!r}")
    return value


def _as_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    return float(value)


def parse_run_config(doc) -> RunConfig:
    """Validate a parsed JSON document and return the run configuration."""
    doc = _require_mapping(doc, "run configuration")
    _reject_unknown(doc, _TOP_KEYS, "run configuration")
    if doc.get("schema") != SCHEMA_RUN:
        raise ConfigError(
            f"schema must be {SCHEMA_RUN!r}, got {doc.get('schema')!r}"
        )
    if "model" not in doc:
        raise ConfigError("run configuration needs a 'model' section")

    model = _require_mapping(doc["model"], "'model'")
    _reject_unknown(model, _MODEL_KEYS, "'model'")
    for key in ("d", "n"):
        if key not in model:
            raise ConfigError(f"'model' needs {key!r}")
    d = _as_int(model["d"], "model.d")
    n = _as_int(model["n"], "model.n")
    if d < 2:
        raise ConfigError(f"model.d must be at least 2, got {d}")
    if n < d:
        raise ConfigError(f"model.n must be at least d={d}, got {n}")
    kappa2 = _as_float(model.get("kappa2", 0.0), "model.kappa2")
    kappa_dbody = _as_float(model.get("kappa_dbody", 0.0), "model.kappa_dbody")

    integ = _require_mapping(doc.get("integration", {}), "'integration'")
    _reject_unknown(integ, _INTEGRATION_KEYS, "'integration'")
    t_max = _as_float(integ.get("t_max", 100.0), "integration.t_max")
    if t_max <= 0.0:
        raise ConfigError(f"integration.t_max must be positive, got {t_max}")
    dt = integ.get("dt", None)
    if dt is not None:
        dt = _as_float(dt, "integration.dt")
        if dt <= 0.0:
            raise ConfigError(f"integration.dt must be positive, got {dt}")
    steady_tol = _as_float(
        integ.get("steady_tol", dynamics.STEADY_TOL), "integration.steady_tol"
    )
    sample_stride = _as_int(integ.get("sample_stride", 10), "integration.sample_stride")
    if sample_stride < 1:
        raise ConfigError("integration.sample_stride must be at least 1")
    checkpoint_stride = _as_int(
        integ.get("checkpoint_stride", 0), "integration.checkpoint_stride"
    )
    if checkpoint_stride < 0:
        raise ConfigError("integration.checkpoint_stride must be non-negative")

    freq_doc = _require_mapping(doc.get("frequencies", {}), "'frequencies'")
    _reject_unknown(freq_doc, _FREQUENCY_KEYS, "'frequencies'")
    freq_kind = freq_doc.get("kind", "none")
    if freq_kind not in FREQUENCY_KINDS:
        raise ConfigError(
            f"frequencies.kind must be one of {FREQUENCY_KINDS}, got {freq_kind!r}"
        )
    frequencies = FrequencySpec(
        kind=freq_kind,
        magnitude=_as_float(freq_doc.get("magnitude", 0.0), "frequencies.magnitude"),
        seed=_as_int(freq_doc.get("seed", 0), "frequencies.seed"),
    )
    if frequencies.kind == "random" and frequencies.magnitude < 0.0:
        raise ConfigError("frequencies.magnitude must be non-negative")

    init_doc = _require_mapping(doc.get("initial", {}), "'initial'")
    _reject_unknown(init_doc, _INITIAL_KEYS, "'initial'")
    init_kind = init_doc.get("kind", "random")
    if init_kind not in INITIAL_KINDS:
        raise ConfigError(
            f"initial.kind must be one of {INITIAL_KINDS}, got {init_kind!r}"
        )
    family = init_doc.get("family")
    if family is not None and family not in catalog.FAMILIES:
        raise ConfigError(
            f"initial.family must be one of {catalog.FAMILIES}, got {family!r}"
        )
    if init_kind == "catalog" and family is None:
        raise ConfigError("initial.kind 'catalog' needs initial.family")
    path = init_doc.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError(f"initial.path must be a string, got {path!r}")
    if init_kind == "file" and path is None:
        raise ConfigError("initial.kind 'file' needs initial.path")
    initial = InitialSpec(
        kind=init_kind,
        seed=_as_int(init_doc.get("seed", 0), "initial.seed"),
        family=family,
        phase0=_as_float(init_doc.get("phase0", 0.0), "initial.phase0"),
        path=path,
        jitter=_as_float(init_doc.get("jitter", 0.0), "initial.jitter"),
        jitter_seed=_as_int(init_doc.get("jitter_seed", 0), "initial.jitter_seed"),
    )
    if initial.jitter < 0.0:
        raise ConfigError("initial.jitter must be non-negative")

    out_doc = _require_mapping(doc.get("output", {}), "'output'")
    _reject_unknown(out_doc, _OUTPUT_KEYS, "'output'")
    out_values = {}
    for key in _OUTPUT_KEYS:
        value = out_doc.get(key)
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"output.{key} must be a string path, got {value!r}")
        out_values[key] = value
    output = OutputSpec(**out_values)

    return RunConfig(
        d=d,
        n=n,
        kappa2=kappa2,
        kappa_dbody=kappa_dbody,
        t_max=t_max,
        dt=dt,
        steady_tol=steady_tol,
        sample_stride=sample_stride,
        checkpoint_stride=checkpoint_stride,
        frequencies=frequencies,
        initial=initial,
        output=output,
    )


def load_run_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return parse_run_config(doc)


def run_config_to_dict(cfg: RunConfig) -> dict:
    """Inverse of ``parse_run_config``, for echoing the run into summaries."""
    doc = {
        "schema": SCHEMA_RUN,
        "model": {
            "d": cfg.d,
            "n": cfg.n,
            "kappa2": cfg.kappa2,
            "kappa_dbody": cfg.kappa_dbody,
        },
        "integration": {
            "t_max": cfg.t_max,
            "dt": cfg.dt,
            "steady_tol": cfg.steady_tol,
            "sample_stride": cfg.sample_stride,
            "checkpoint_stride": cfg.checkpoint_stride,
        },
        "frequencies": dataclasses.asdict(cfg.frequencies),
        "initial": {
            key: value
            for key, value in dataclasses.asdict(cfg.initial).items()
            if value is not None
        },
        "output": {
            key: value
            for key, value in dataclasses.asdict(cfg.output).items()
            if value is not None
        },
    }
    return doc


def build_params(cfg: RunConfig) -> dynamics.ModelParams:
    if cfg.frequencies.kind == "random" and cfg.frequencies.magnitude != 0.0:
        freqs = dynamics.random_frequency_generators(
            cfg.d, cfg.n, cfg.frequencies.magnitude, cfg.frequencies.seed
        )
    else:
        freqs = None
    return dynamics.ModelParams(
        d=cfg.d,
        n=cfg.n,
        kappa2=cfg.kappa2,
        kappa_dbody=cfg.kappa_dbody,
        frequencies=freqs,
    )


def _catalog_initial(cfg: RunConfig) -> np.ndarray:
    family = cfg.initial.family
    d, n = cfg.d, cfg.n
    family_d = d if family == "basis" else int(family[1])
    if family_d != d:
        raise ConfigError(f"initial.family {family!r} lives in d={family_d}, model has d={d}")
    kappa_dbody = cfg.kappa_dbody if cfg.kappa_dbody != 0.0 else 1.0
    try:
        if family == "basis":
            if n != d:
                raise ConfigError(f"'basis' family needs n = d = {d}, got n={n}")
            spec = catalog.basis_state(d)
        elif family.endswith("_combined"):
            spec = catalog.combined_state(
                d, n, cfg.kappa2, kappa_dbody, phase0=cfg.initial.phase0
            )
            if spec is None:
                raise ConfigError(
                    f"{family}: no equispaced steady state at kappa2/|kappa_dbody| = "
                    f"{cfg.kappa2 / abs(kappa_dbody):g} (above the existence threshold)"
                )
        else:
            spec = catalog.ring_state(d, n, phase0=cfg.initial.phase0, kappa_dbody=kappa_dbody)
            if spec.family != family:
                raise ConfigError(
                    f"initial.family {family!r} does not exist for d={d} (did you mean "
                    f"{spec.family!r}?)"
                )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return catalog.exact_configuration(spec)


def build_initial_state(cfg: RunConfig, base_dir: str | None = None) -> np.ndarray:
    """Construct the (n, d) initial configuration a run config describes."""
    init = cfg.initial
    if init.kind == "random":
        x0 = geometry.random_unit_configuration(cfg.d, cfg.n, init.seed)
    elif init.kind == "colocated":
        x0 = np.zeros((cfg.n, cfg.d))
        x0[:, -1] = 1.0
    elif init.kind == "catalog":
        x0 = _catalog_initial(cfg)
    else:
        path = init.path
        if base_dir is not None and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        x0 = load_state(path)
        if x0.shape != (cfg.n, cfg.d):
            raise ConfigError(
                f"state file {init.path!r} has shape {x0.shape}, expected {(cfg.n, cfg.d)}"
            )
    if init.jitter > 0.0:
        rng = np.random.Generator(np.random.PCG64(init.jitter_seed))
        x0 = geometry.renormalize(x0 + init.jitter * rng.standard_normal(x0.shape))
    return x0


# ---------------------------------------------------------------------------
# state files


def save_state(path, config) -> None:
    """Write one configuration as CSV, one node per row."""
    config = np.asarray(config, dtype=float)
    if config.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {config.shape}")
    n, d = config.shape
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# spheresync state n={n} d={d}\n")
        for row in config:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def load_state(path) -> np.ndarray:
    """Read a state CSV back; rows must be unit vectors up to 1e-6."""
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2, dtype=float)
    norms = np.linalg.norm(data, axis=1)
    if np.any(np.abs(norms - 1.0) > STATE_NORM_TOL):
        worst = float(np.abs(norms - 1.0).max())
        raise ConfigError(
            f"{path}: rows are not unit vectors (worst norm deviation {worst:.3g})"
        )
    return geometry.renormalize(data)


# ---------------------------------------------------------------------------
# trajectory and summary files


def write_trajectory(path, record: dynamics.TrajectoryRecord) -> None:
    columns = (
        record.times,
        record.order_parameter,
        record.v_pair,
        record.v_dbody,
        record.max_speed,
    )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
        for values in zip(*columns):
            fh.write(",".join(format(v, ".17g") for v in values) + "\n")


def read_trajectory(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if tuple(header.split(",")) != TRAJECTORY_COLUMNS:
            raise ConfigError(f"{path}: unexpected trajectory header {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2, dtype=float)
    if data.size == 0:
        data = data.reshape(0, len(TRAJECTORY_COLUMNS))
    return {name: data[:, i] for i, name in enumerate(TRAJECTORY_COLUMNS)}


def save_checkpoints(dirpath, record: dynamics.TrajectoryRecord) -> list:
    """Write every checkpointed configuration into a directory; returns paths."""
    os.makedirs(dirpath, exist_ok=True)
    paths = []
    for step, config in record.checkpoints:
        path = os.path.join(dirpath, f"state_{step:09d}.csv")
        save_state(path, config)
        paths.append(path)
    return paths


def _jsonable(value):
    if isinstance(value, dict):
        return {key: _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(item) for item in value.tolist()]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


def summary_document(report: analysis.SummaryReport, cfg: RunConfig | None = None) -> dict:
    doc = {"schema": SCHEMA_SUMMARY}
    doc.update(_jsonable(report.to_dict()))
    if cfg is not None:
        doc["run"] = run_config_to_dict(cfg)
    return doc


def write_summary(path, report: analysis.SummaryReport, cfg: RunConfig | None = None) -> None:
    doc = summary_document(report, cfg)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def execute_run(cfg: RunConfig, base_dir: str | None = None):
    """Run one configuration end to end and write whatever outputs it names.

    Returns ``(result, report)`` so callers can inspect the run without
    re-reading the files.
    """
    params = build_params(cfg)
    x0 = build_initial_state(cfg, base_dir=base_dir)
    result = dynamics.simulate(
        x0,
        params,
        t_max=cfg.t_max,
        dt=cfg.dt,
        steady_tol=cfg.steady_tol,
        sample_stride=cfg.sample_stride,
        checkpoint_stride=cfg.checkpoint_stride,
    )
    report = analysis.classify_final(result)

    def _resolve(path):
        if base_dir is not None and not os.path.isabs(path):
            return os.path.join(base_dir, path)
        return path

    out = cfg.output
    if out.trajectory:
        write_trajectory(_resolve(out.trajectory), result.record)
    if out.summary:
        write_summary(_resolve(out.summary), report, cfg)
    if out.state:
        save_state(_resolve(out.state), result.final_state)
    if out.checkpoints:
        save_checkpoints(_resolve(out.checkpoints), result.record)
    return result, report
