"""Seeded recovery experiments and learner timing benchmarks.

Trial t uses ``RngSeed(seed, stream=t)``, so any single trial can be rerun
alone.  Deterministic outputs (per-trial outcomes and the run manifest) are
kept separate from wall-clock measurements, which go to their own file.
"""

from __future__ import annotations

import csv
import dataclasses
import gc
import io
import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import learner
from .dynamics import INIT_STREAM, RngSeed, simulate_ct
from .graphs import GENERATORS, assign_couplings, generate_graph
from .learner import LearnerParams, glauber_learn, practical_params, theory_params
from .model import IsingModel, ParamBounds, read_model
from .oracle import MAX_ENUM_NODES, exact_gibbs

INIT_MODES = ("random", "plus", "stationary")
COUPLING_MODES = ("random", "const", "file")

# Hard cap on simulated events per trial (about 16 bytes each in memory).
MAX_EVENTS = 200_000_000


@dataclass(frozen=True)
class ExperimentConfig:
    graph: str = "cycle"
    p: int = 8
    d: int | None = None
    rows: int | None = None
    cols: int | None = None
    model_file: str | None = None
    couplings: str = "random"
    theta: float = 0.8
    alpha: float | None = None
    beta: float | None = None
    mode: str = "practical"
    L: float | None = None
    tau: float | str | None = "clt"
    T: float | None = None
    delta: float = 0.01
    symmetrize: bool = False
    init: str = "random"
    trials: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.graph not in GENERATORS:
            raise ValueError(f"unknown graph {self.graph!r}; choose from {', '.join(GENERATORS)}")
        if self.couplings not in COUPLING_MODES:
            raise ValueError(f"couplings must be one of {COUPLING_MODES}")
        if (self.graph == "file") != (self.couplings == "file"):
            raise ValueError("graph=file and couplings=file go together")
        if self.mode not in ("theory", "practical"):
            raise ValueError(f"mode must be theory or practical, got {self.mode!r}")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if self.seed is None:
            raise ValueError("an explicit seed is required")

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "ExperimentConfig":
        """Build from string-valued settings (config file or flags)."""
        kinds = {f.name: f.type for f in dataclasses.fields(cls)}
        out = {}
        for key, raw in values.items():
            if key not in kinds:
                raise ValueError(f"unknown setting {key!r}")
            if raw is None:
                continue
            out[key] = _coerce(key, kinds[key], raw)
        return cls(**out)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _coerce(key: str, kind: str, raw):
    if not isinstance(raw, str):
        return raw
    if key == "tau":
        try:
            return float(raw)
        except ValueError:
            return raw
    if kind.startswith("bool"):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {raw!r}")
    if kind.startswith("int"):
        return int(raw)
    if kind.startswith("float"):
        return float(raw)
    return raw


def read_config(path: str | Path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, ln in enumerate(Path(path).read_text().splitlines(), 1):
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        if "=" not in ln:
            raise ValueError(f"{path}:{n}: expected key = value")
        k, v = ln.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build_model(cfg: ExperimentConfig) -> IsingModel:
    if cfg.graph == "file":
        return read_model(cfg.model_file)
    d = cfg.d if cfg.d is not None else 2
    graph = generate_graph(cfg.graph, p=cfg.p, d=d, seed=cfg.seed, rows=cfg.rows, cols=cfg.cols)
    d_decl = cfg.d if cfg.d is not None else max(graph.max_degree, 1)
    if graph.max_degree > d_decl:
        raise ValueError(f"generated graph has degree {graph.max_degree} > d = {d_decl}")
    return assign_couplings(graph, cfg.theta, cfg.couplings, cfg.seed, cfg.alpha, cfg.beta, d_decl)


def resolve_params(cfg: ExperimentConfig, model: IsingModel) -> LearnerParams:
    b = model.bounds
    if cfg.mode == "theory":
        base = theory_params(model.p, b.d, b.alpha, b.beta)
        L = cfg.L if cfg.L is not None else base.L
        T = cfg.T if cfg.T is not None else base.T
        if cfg.L is None and cfg.T is None and cfg.tau in (None, "default", "clt"):
            return base
        tau = base.tau if cfg.tau in (None, "default") else cfg.tau
        return practical_params(L, T, b.alpha, b.beta, b.d, tau, model.p, cfg.delta, cfg.symmetrize)
    if cfg.L is None or cfg.T is None:
        raise ValueError("practical mode needs L and T")
    return practical_params(cfg.L, cfg.T, b.alpha, b.beta, b.d, cfg.tau, model.p, cfg.delta, cfg.symmetrize)


def initial_state(cfg_init: str, model: IsingModel, seed: RngSeed) -> np.ndarray:
    rng = seed.generator(INIT_STREAM)
    if cfg_init == "plus":
        return np.ones(model.p, dtype=np.int8)
    if cfg_init == "random":
        return rng.choice(np.array([-1, 1], dtype=np.int8), size=model.p)
    if model.p > MAX_ENUM_NODES:
        raise ValueError(f"stationary start needs p <= {MAX_ENUM_NODES}")
    return exact_gibbs(model).sample(1, rng)[0]


@dataclass(frozen=True)
class TrialResult:
    trial: int
    recovered: bool
    false_pos: int
    false_neg: int
    n_events: int
    seconds: float = field(compare=False)


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    params: LearnerParams
    true_edges: frozenset
    trials: tuple[TrialResult, ...]

    @property
    def successes(self) -> int:
        return sum(t.recovered for t in self.trials)

    @property
    def success_rate(self) -> float:
        return self.successes / len(self.trials)


def run_trial(cfg: ExperimentConfig, model: IsingModel, params: LearnerParams, trial: int) -> TrialResult:
    seed = RngSeed(cfg.seed, trial)
    t0 = time.perf_counter()
    trace = simulate_ct(model, initial_state(cfg.init, model, seed), params.T, seed)
    found = glauber_learn(trace, params, cfg.symmetrize)
    truth = model.graph.edge_set
    fp, fn = len(found - truth), len(truth - found)
    return TrialResult(trial, fp == 0 and fn == 0, fp, fn, len(trace), time.perf_counter() - t0)


def run_recovery_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    model = build_model(cfg)
    params = resolve_params(cfg, model)
    expected = model.p * params.T
    if not math.isfinite(expected) or expected > MAX_EVENTS:
        raise ValueError(f"horizon T={params.T:.3g} means about {expected:.3g} events per trial; too many to simulate")
    # Trials run in index order on one process; each owns its trace.
    trials = tuple(run_trial(cfg, model, params, t) for t in range(cfg.trials))
    return ExperimentResult(cfg, params, model.graph.edge_set, trials)


def _versions() -> dict:
    import numba
    import scipy

    from . import __version__

    return {
        "glauberlearn": __version__,
        "numpy": np.__version__,
        "numba": numba.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def manifest(result: ExperimentResult) -> dict:
    return {
        "config": result.config.as_dict(),
        "derived": result.params.as_dict(),
        "true_edges": sorted(list(e) for e in result.true_edges),
        "seeds": {"seed": result.config.seed, "streams": list(range(len(result.trials)))},
        "successes": result.successes,
        "trials": len(result.trials),
        "success_rate": result.success_rate,
        "versions": _versions(),
    }


def _echo_lines(result: ExperimentResult) -> list[str]:
    items = {**result.config.as_dict(), **result.params.as_dict()}
    return [f"# {k}={v!r}" for k, v in items.items()]


def results_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    buf.write("\n".join(_echo_lines(result)) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "recovered", "false_pos", "false_neg", "n_events"])
    for t in result.trials:
        w.writerow([t.trial, int(t.recovered), t.false_pos, t.false_neg, t.n_events])
    return buf.getvalue()


def write_experiment(result: ExperimentResult, out_dir: str | Path) -> dict[str, Path]:
    """results.csv and manifest.json are byte-deterministic; timing.csv is not."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"results": out / "results.csv", "manifest": out / "manifest.json", "timing": out / "timing.csv"}
    paths["results"].write_text(results_csv(result))
    paths["manifest"].write_text(json.dumps(manifest(result), indent=2, sort_keys=True) + "\n")
    lines = _echo_lines(result) + ["trial,seconds"]
    lines += [f"{t.trial},{t.seconds:.6f}" for t in result.trials]
    paths["timing"].write_text("\n".join(lines) + "\n")
    return paths


# -- benchmarks ---------------------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkRow:
    p: int
    n_events: int
    k_max: int
    sim_seconds: float
    learn_seconds: float


@dataclass(frozen=True)
class BenchmarkResult:
    rows: tuple[BenchmarkRow, ...]
    exponent: float  # slope of log(learn time) against log(p)
    T: float
    L: float


def _fit_slope(x: Sequence[float], y: Sequence[float]) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def time_learner(trace, params: LearnerParams, repeats: int = 3) -> float:
    """Best of ``repeats`` full learner runs, including the per-node index build."""
    best = math.inf
    # as timeit does, keep the collector out of the timed region
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(repeats):
            learner.forget_index(trace)
            t0 = time.perf_counter()
            glauber_learn(trace, params)
            best = min(best, time.perf_counter() - t0)
    finally:
        if was_enabled:
            gc.enable()
    return best


def run_scaling_benchmark(
    p_values: Sequence[int],
    T: float,
    seed: int,
    L: float = 1.0,
    d: int = 3,
    repeats: int = 3,
) -> BenchmarkResult:
    """Learner wall-clock against p on the empty graph (theta = 0) at fixed T."""
    p_values = list(p_values)
    if p_values != sorted(p_values) or len(set(p_values)) != len(p_values):
        raise ValueError("p values must be strictly ascending")
    if len(p_values) < 2:
        raise ValueError("need at least two p values to fit an exponent")
    bounds = ParamBounds(1.0, 1.0, d)
    # compile the kernels before timing
    warm = IsingModel(generate_graph("empty", 4), {}, bounds)
    warm_trace = simulate_ct(warm, np.ones(4), 3 * L, RngSeed(seed, 0))
    glauber_learn(warm_trace, practical_params(L, 3 * L, 1.0, 1.0, d, 1.0))
    rows = []
    for n, p in enumerate(p_values):
        model = IsingModel(generate_graph("empty", p), {}, bounds)
        seed_n = RngSeed(seed, n)
        t0 = time.perf_counter()
        trace = simulate_ct(model, initial_state("random", model, seed_n), T, seed_n)
        sim = time.perf_counter() - t0
        params = practical_params(L, T, 1.0, 1.0, d, "clt", p)
        rows.append(BenchmarkRow(p, len(trace), params.k_max, sim, time_learner(trace, params, repeats)))
        learner.forget_index(trace)
    slope = _fit_slope([r.p for r in rows], [r.learn_seconds for r in rows])
    return BenchmarkResult(tuple(rows), slope, float(T), float(L))


def benchmark_csv(result: BenchmarkResult) -> str:
    buf = io.StringIO()
    buf.write(f"# T={result.T!r}\n# L={result.L!r}\n# exponent={result.exponent:.4f}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "n_events", "k_max", "sim_seconds", "learn_seconds"])
    for r in result.rows:
        w.writerow([r.p, r.n_events, r.k_max, f"{r.sim_seconds:.6f}", f"{r.learn_seconds:.6f}"])
    return buf.getvalue()
