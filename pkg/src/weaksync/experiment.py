"""Experiment configs: parse, validate, run, and write artifacts."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import agents as ag
from .analysis import DEFAULT_EPSILON_CT, DEFAULT_EPSILON_DT, ConvergenceCriterion, SyncReport, build_sync_report
from .errors import ConfigError
from .generate import StructuredGraphSpec, generate_structured
from .graph import (
    DirectedWeightedGraph,
    build_laplacian,
    decompose_bicomponents,
    graph_from_dict,
    has_directed_spanning_tree,
    load_graph,
)
from .kernel import kernel_structure, scaled_reduction
from .simulate import SimConfig, Trajectory, simulate, trajectory_to_csv, trajectory_to_dict

log = logging.getLogger(__name__)

VERDICTS = ("weak_sync", "basic_sync", "convex_limits", "output_sync", "spanning_tree_output_sync")
DEFAULT_VERDICTS = ("weak_sync", "basic_sync", "convex_limits", "spanning_tree_output_sync")
OUTPUTS = ("csv", "json", "report", "plots")


@dataclass
class ExperimentConfig:
    name: str
    graph: DirectedWeightedGraph
    agents: list[ag.ClosedLoopAgent]
    sim: SimConfig
    criteria: ConvergenceCriterion
    seed: int | None = None
    verify: tuple[str, ...] = DEFAULT_VERDICTS
    outputs: tuple[str, ...] = ("report",)


@dataclass
class ExperimentResult:
    exit_code: int
    report: dict
    trajectory: Trajectory
    sync: SyncReport
    files: list[Path] = field(default_factory=list)


def _require(data, key, path):
    if not isinstance(data, dict) or key not in data:
        raise ConfigError(path, f"missing required field '{key}'")
    return data[key]


def _parse_graph(spec, seed, base_dir) -> DirectedWeightedGraph:
    if not isinstance(spec, dict):
        raise ConfigError("graph", "must be an object with 'file', 'generator' or inline 'n'/'edges'")
    try:
        if "file" in spec:
            path = Path(spec["file"])
            return load_graph(path if path.is_absolute() else base_dir / path)
        if "generator" in spec:
            if seed is None:
                raise ConfigError("seed", "required when the graph comes from a generator")
            try:
                gspec = StructuredGraphSpec.from_dict(spec["generator"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError("graph.generator", str(exc)) from exc
            return generate_structured(gspec, seed)
        if "weights" in spec:
            return DirectedWeightedGraph(spec["weights"])
        return graph_from_dict(spec)
    except OSError as exc:
        raise ConfigError("graph.file", str(exc)) from exc
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("graph", str(exc)) from exc


def _direct_agent(spec, L, time_domain, path):
    if isinstance(spec, str):
        spec = {"preset": spec}
    if "preset" in spec:
        if spec["preset"] != "single-integrator":
            raise ConfigError(f"{path}.preset", f"unknown preset {spec['preset']!r}")
        gain = spec.get("gain", 1.0)
        if gain == "auto":
            dmax = float(np.max(np.diag(L))) if L.size else 0.0
            gain = 1.0 / (2.0 * dmax) if dmax > 0 else 1.0
        agent = ag.single_integrator(float(gain))
        if time_domain == "discrete":
            agent = ag.direct_closed_loop([[1.0]], agent.B_t, agent.C_t, agent.H_t)
        return agent
    try:
        return ag.direct_closed_loop(spec["A_t"], spec["B_t"], spec["C_t"], spec["H_t"])
    except KeyError as exc:
        raise ConfigError(path, f"missing block {exc.args[0]}") from exc


def _model_agent(entry, time_domain, path):
    model_spec = entry["model"]
    try:
        model = ag.builtin_models(model_spec) if isinstance(model_spec, str) else ag.AgentModel.from_dict(model_spec)
    except KeyError as exc:
        raise ConfigError(f"{path}.model", str(exc.args[0])) from exc
    if model.time_domain != time_domain:
        raise ConfigError(f"{path}.model", f"model is {model.time_domain} but sim.time_domain is {time_domain}")
    if "protocol" not in entry:
        raise ConfigError(path, "a model needs a 'protocol' (or use 'direct' closed-loop blocks)")
    try:
        protocol = ag.DynamicProtocol.from_dict(entry["protocol"])
    except KeyError as exc:
        raise ConfigError(f"{path}.protocol", f"missing gain {exc.args[0]}") from exc
    return ag.assemble_closed_loop(model, protocol)


def _parse_agents(spec, n, L, time_domain) -> list[ag.ClosedLoopAgent]:
    if not isinstance(spec, list) or not spec:
        raise ConfigError("agents", "must be a nonempty list")
    keyed = all(isinstance(e, dict) and "nodes" in e for e in spec)
    if not keyed and len(spec) != n:
        raise ConfigError("agents", f"{len(spec)} agent entries for {n} nodes")
    assigned: list[ag.ClosedLoopAgent | None] = [None] * n
    for pos, entry in enumerate(spec):
        path = f"agents[{pos}]"
        if not isinstance(entry, dict):
            raise ConfigError(path, "must be an object")
        if keyed:
            nodes = entry["nodes"]
            nodes = list(range(1, n + 1)) if nodes == "all" else nodes
        else:
            nodes = [pos + 1]
        try:
            if "direct" in entry:
                agent = _direct_agent(entry["direct"], L, time_domain, f"{path}.direct")
            elif "model" in entry:
                agent = _model_agent(entry, time_domain, path)
            else:
                raise ConfigError(path, "needs 'direct' or 'model'")
        except (ValueError, KeyError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(path, str(exc)) from exc
        for v in nodes:
            if not isinstance(v, int) or not 1 <= v <= n:
                raise ConfigError(f"{path}.nodes", f"node {v!r} outside 1..{n}")
            if assigned[v - 1] is not None:
                raise ConfigError(f"{path}.nodes", f"node {v} already has an agent")
            assigned[v - 1] = agent
    missing = [i + 1 for i, a in enumerate(assigned) if a is None]
    if missing:
        raise ConfigError("agents", f"no agent assigned to nodes {missing}")
    return assigned  # type: ignore[return-value]


def _parse_initial_state(spec, total, seed, path="sim.initial_state"):
    if isinstance(spec, dict) and "random" in spec:
        lo, hi = spec["random"]
        rng = np.random.default_rng([seed if seed is not None else 0, 1])
        return rng.uniform(lo, hi, size=total)
    x0 = np.asarray(spec, dtype=float).ravel()
    if x0.size != total:
        raise ConfigError(path, f"length {x0.size} but the network has {total} states")
    return x0


def parse_config(data: dict, base_dir=".", name="run") -> ExperimentConfig:
    base_dir = Path(base_dir)
    seed = data.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise ConfigError("seed", "must be an integer")
    graph = _parse_graph(_require(data, "graph", ""), seed, base_dir)
    L = build_laplacian(graph)

    sim_spec = dict(data.get("sim", {}))
    time_domain = sim_spec.get("time_domain", "continuous")
    if time_domain not in ("continuous", "discrete"):
        raise ConfigError("sim.time_domain", f"must be 'continuous' or 'discrete', got {time_domain!r}")
    agent_list = _parse_agents(_require(data, "agents", ""), graph.n, L, time_domain)
    total = sum(a.n_states for a in agent_list)
    x0 = _parse_initial_state(sim_spec.get("initial_state", {"random": [-1.0, 1.0]}), total, seed)
    try:
        sim = SimConfig(
            initial_state=x0,
            time_domain=time_domain,
            step=float(sim_spec.get("step", 0.01)),
            horizon=sim_spec.get("horizon"),
            sample_stride=int(sim_spec.get("sample_stride", 10)),
        )
    except ValueError as exc:
        raise ConfigError("sim", str(exc)) from exc

    crit_spec = data.get("criteria", {})
    default_eps = DEFAULT_EPSILON_CT if time_domain == "continuous" else DEFAULT_EPSILON_DT
    try:
        criteria = ConvergenceCriterion(
            epsilon=float(crit_spec.get("epsilon", default_eps)),
            window_fraction=float(crit_spec.get("window_fraction", 0.2)),
        )
    except ValueError as exc:
        raise ConfigError("criteria", str(exc)) from exc

    verify = tuple(data.get("verify", DEFAULT_VERDICTS))
    for v in verify:
        if v not in VERDICTS:
            raise ConfigError("verify", f"unknown verdict {v!r}; choose from {VERDICTS}")
    outputs = tuple(data.get("outputs", ("report",)))
    for o in outputs:
        if o not in OUTPUTS:
            raise ConfigError("outputs", f"unknown output {o!r}; choose from {OUTPUTS}")
    return ExperimentConfig(
        name=str(data.get("name", name)),
        graph=graph,
        agents=agent_list,
        sim=sim,
        criteria=criteria,
        seed=seed,
        verify=verify,
        outputs=outputs,
    )


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Read a JSON config; ``overrides`` patch top-level sections before parsing."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path} is not valid JSON: {exc}") from exc
    for section, values in (overrides or {}).items():
        if isinstance(values, dict):
            data[section] = {**data.get(section, {}), **values}
        else:
            data[section] = values
    return parse_config(data, base_dir=path.parent, name=path.stem)


def with_overrides(cfg: ExperimentConfig, epsilon=None, horizon=None, step=None) -> ExperimentConfig:
    sim = cfg.sim
    if horizon is not None or step is not None:
        sim = SimConfig(
            sim.initial_state,
            sim.time_domain,
            step if step is not None else sim.step,
            horizon if horizon is not None else sim.horizon,
            sim.sample_stride,
        )
    criteria = cfg.criteria if epsilon is None else replace(cfg.criteria, epsilon=epsilon)
    return replace(cfg, sim=sim, criteria=criteria)


def analyze_graph(g: DirectedWeightedGraph) -> dict:
    """Structural report of a graph with 1-based node labels."""
    d = decompose_bicomponents(g)
    L = build_laplacian(g)
    ks = kernel_structure(L, d)
    reductions = []
    for i in range(d.k):
        red = scaled_reduction(L, ks, i)
        reductions.append(
            {
                "bicomponent": i + 1,
                "support": [v + 1 for v in red.support],
                "size": red.size,
                "rank": red.rank,
                "row_sum_max": float(np.max(np.abs(red.reduced.sum(axis=1)))),
            }
        )
    return {
        "n": g.n,
        "components": [[v + 1 for v in c] for c in d.components],
        "basic_flags": list(d.basic_flags),
        "k": d.k,
        "block_sizes": list(d.block_sizes),
        "canonical_order": [v + 1 for v in d.canonical_order],
        "has_spanning_tree": has_directed_spanning_tree(d),
        "beta": {str(v + 1): row.tolist() for v, row in ks.beta_by_node().items()},
        "kernel_basis": ks.kernel_basis.tolist(),
        "reduced_laplacians": reductions,
    }


def evaluate_verdicts(requested, sync: SyncReport, spanning_tree: bool, m0: int) -> dict[str, bool]:
    raw = sync.verdicts()
    out = {}
    for name in requested:
        if name == "spanning_tree_output_sync":
            out[name] = raw["output_sync"] if spanning_tree else True
        elif name == "convex_limits":
            out[name] = bool(raw["convex_limits"]) if m0 > 0 else True
        else:
            out[name] = bool(raw[name])
    return out


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Analyze, assemble, simulate and verify; write the requested artifacts.

    Exit code 0 when every requested verdict passes, 1 otherwise. Errors from
    the underlying modules propagate to the caller.
    """
    g = cfg.graph
    d = decompose_bicomponents(g)
    L = build_laplacian(g)
    ks = kernel_structure(L, d)
    system = ag.assemble_network(cfg.agents, L)
    log.info("simulating %s: %d agents, %d states, k=%d", cfg.name, g.n, system.n_states, d.k)
    tr = simulate(system, cfg.sim)
    sync = build_sync_report(tr, d, ks, cfg.criteria)
    verdicts = evaluate_verdicts(cfg.verify, sync, has_directed_spanning_tree(d), d.m0)
    report = {
        "name": cfg.name,
        "seed": cfg.seed,
        "graph": analyze_graph(g),
        "sync": sync.to_dict(),
        "requested_verdicts": verdicts,
        "passed": all(verdicts.values()),
    }
    files: list[Path] = []
    if out_dir is not None and cfg.outputs:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if "csv" in cfg.outputs:
            files.append(out_dir / "trajectory.csv")
            files[-1].write_text(trajectory_to_csv(tr))
        if "json" in cfg.outputs:
            files.append(out_dir / "trajectory.json")
            files[-1].write_text(json.dumps(trajectory_to_dict(tr)))
        if "report" in cfg.outputs:
            files.append(out_dir / "report.json")
            files[-1].write_text(json.dumps(report, indent=2) + "\n")
        if "plots" in cfg.outputs:
            from .plotting import emit_plots

            files.extend(emit_plots(tr, sync, out_dir))
    return ExperimentResult(0 if report["passed"] else 1, report, tr, sync, files)

