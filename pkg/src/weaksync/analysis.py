"""Convergence verdicts extracted from simulated trajectories.

"Tends to zero" is approximated by the sup-norm over the trailing
``window_fraction`` of the samples staying below ``epsilon``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._linalg import numerical_rank
from .errors import PreconditionError, StructuralError
from .graph import BicomponentDecomposition
from .kernel import KernelStructure
from .simulate import Trajectory

DEFAULT_EPSILON_CT = 1e-4
DEFAULT_EPSILON_DT = 1e-6


@dataclass(frozen=True)
class ConvergenceCriterion:
    epsilon: float = DEFAULT_EPSILON_CT
    window_fraction: float = 0.2

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0 < self.window_fraction <= 1:
            raise ValueError(f"window_fraction must lie in (0, 1], got {self.window_fraction}")

    def tail(self, n_samples) -> slice:
        count = max(1, math.ceil(self.window_fraction * n_samples - 1e-9))
        return slice(n_samples - count, n_samples)


@dataclass(frozen=True)
class StabilityResult:
    tail_norms: np.ndarray
    passed: np.ndarray
    epsilon: float

    @property
    def all_passed(self) -> bool:
        return bool(np.all(self.passed))


@dataclass(frozen=True)
class GroupSyncResult:
    group: tuple[int, ...]
    value: float
    passed: bool


@dataclass(frozen=True)
class ConvexLimitResult:
    nodes: tuple[int, ...]
    residuals: np.ndarray
    passed: np.ndarray

    @property
    def all_passed(self) -> bool:
        return bool(np.all(self.passed))


@dataclass(frozen=True)
class WitnessResult:
    found: bool
    pair: tuple[int, int] | None
    difference: float
    status: str


def _require_samples(tr: Trajectory):
    if len(tr) == 0:
        raise ValueError("trajectory has no samples")


def check_network_stability(tr: Trajectory, c: ConvergenceCriterion) -> StabilityResult:
    """Per-agent tail sup-norm of ``zeta_i`` against ``epsilon``."""
    _require_samples(tr)
    tail = np.abs(tr.signals[c.tail(len(tr))])
    per_agent = tail.reshape(tail.shape[0], -1, tr.p).max(axis=(0, 2))
    return StabilityResult(per_agent, per_agent <= c.epsilon, c.epsilon)


def _group_spread(tr: Trajectory, group, window) -> np.ndarray:
    """max over pairs of ``|y_a - y_b|_inf`` at each sample in ``window``."""
    ys = tr.outputs_by_agent()[window][:, list(group), :]
    return (ys.max(axis=1) - ys.min(axis=1)).max(axis=1)


def check_output_sync(tr: Trajectory, group, c: ConvergenceCriterion) -> GroupSyncResult:
    _require_samples(tr)
    group = tuple(int(v) for v in group)
    if not group:
        raise ValueError("group must be nonempty")
    for v in group:
        if not 0 <= v < tr.N:
            raise IndexError(f"node {v} not in trajectory with {tr.N} agents")
    value = float(_group_spread(tr, group, c.tail(len(tr))).max())
    return GroupSyncResult(group, value, value <= c.epsilon)


def synchronized_trajectories(tr: Trajectory, d: BicomponentDecomposition) -> list[np.ndarray]:
    """Per basic bicomponent, the per-sample mean output, shape ``(samples, p)``."""
    ys = tr.outputs_by_agent()
    return [ys[:, list(comp), :].mean(axis=1) for comp in d.basic_components]


def check_convex_limits(tr: Trajectory, d: BicomponentDecomposition, ks: KernelStructure, c: ConvergenceCriterion) -> ConvexLimitResult:
    """Residual of each non-basic output against its convex combination.

    Refuses to run unless the network is stable and every basic bicomponent
    is output-synchronized, since the residuals mean nothing otherwise.
    """
    if not check_network_stability(tr, c).all_passed:
        raise PreconditionError("network is not stable; convex limits are undefined")
    for i, comp in enumerate(d.basic_components):
        if not check_output_sync(tr, comp, c).passed:
            raise PreconditionError(f"basic bicomponent {i} is not output-synchronized")
    ys = tr.outputs_by_agent()
    ysync = np.stack(synchronized_trajectories(tr, d), axis=1)  # (samples, k, p)
    tail = c.tail(len(tr))
    nodes = d.nonbasic_nodes
    residuals = np.empty(len(nodes))
    for row, node in enumerate(nodes):
        target = np.einsum("i,sip->sp", ks.beta[row], ysync[tail])
        residuals[row] = np.abs(ys[tail, node, :] - target).max()
    return ConvexLimitResult(tuple(nodes), residuals, residuals <= c.epsilon)


def left_null_vector(L_sub) -> np.ndarray:
    """Normalized positive ``w`` with ``w^T L = 0`` and ``w^T 1 = 1``."""
    L_sub = np.atleast_2d(np.asarray(L_sub, dtype=float))
    size = L_sub.shape[0]
    if size == 1:
        return np.ones(1)
    rank = numerical_rank(L_sub)
    if rank != size - 1:
        raise StructuralError(f"rank deficiency is {size - rank}, expected 1 for a strongly connected block")
    _, _, vh = np.linalg.svd(L_sub.T)
    w = vh[-1]
    w = w / w.sum()
    return w


def consensus_oracle_single_integrator(L_sub, x0_sub):
    """Consensus value ``w^T x0`` reached by single integrators on ``L_sub``.

    ``x0_sub`` may be ``(M,)`` or ``(M, p)``; the result has one value per
    output channel.
    """
    w = left_null_vector(L_sub)
    return w @ np.asarray(x0_sub, dtype=float)


def desync_witness(tr: Trajectory, d: BicomponentDecomposition, ks: KernelStructure, c: ConvergenceCriterion) -> WitnessResult:
    """Find two basic bicomponents whose synchronized outputs stay apart.

    Requires ``k >= 2``, a stable network, and at least one basic
    bicomponent with a nonvanishing limit. When all limits coincide the
    result reports ``"indistinguishable limits"`` instead of a witness.
    """
    if d.k < 2:
        raise PreconditionError("needs at least two basic bicomponents")
    if not check_network_stability(tr, c).all_passed:
        raise PreconditionError("network is not stable")
    tail = c.tail(len(tr))
    ysync = synchronized_trajectories(tr, d)
    if max(float(np.abs(y[tail]).max()) for y in ysync) <= c.epsilon:
        raise PreconditionError("all synchronized trajectories vanish; only the trivial case remains")
    reps = [comp[0] for comp in d.basic_components]
    ys = tr.outputs_by_agent()[tail]
    best, pair = -1.0, None
    for i in range(d.k):
        for j in range(i + 1, d.k):
            diff = float(np.abs(ys[:, reps[i], :] - ys[:, reps[j], :]).max())
            if diff > best:
                best, pair = diff, (reps[i], reps[j])
    if best > c.epsilon:
        return WitnessResult(True, pair, best, "witness")
    return WitnessResult(False, None, best, "indistinguishable limits")


@dataclass
class SyncReport:
    epsilon: float
    stability: StabilityResult
    groups: list[GroupSyncResult]
    global_sync: GroupSyncResult
    convex_limits: ConvexLimitResult | None
    synchronized: list[np.ndarray]
    eta_tail_norms: np.ndarray | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def weak_sync(self) -> bool:
        return self.stability.all_passed

    @property
    def basic_sync(self) -> bool:
        return all(g.passed for g in self.groups)

    def verdicts(self) -> dict[str, bool | None]:
        return {
            "weak_sync": self.weak_sync,
            "basic_sync": self.basic_sync,
            "convex_limits": None if self.convex_limits is None else self.convex_limits.all_passed,
            "output_sync": self.global_sync.passed,
        }

    def to_dict(self) -> dict:
        out = {
            "epsilon": self.epsilon,
            "verdicts": self.verdicts(),
            "network_stable": {
                "passed": self.weak_sync,
                "max_tail_zeta": [float(v) for v in self.stability.tail_norms],
            },
            "groups": [
                {"nodes": [v + 1 for v in g.group], "passed": g.passed, "max_tail_disagreement": g.value}
                for g in self.groups
            ],
            "global_output_sync": {"passed": self.global_sync.passed, "max_tail_disagreement": self.global_sync.value},
            "convex_limits": None
            if self.convex_limits is None
            else [
                {"node": v + 1, "residual": float(r), "passed": bool(ok)}
                for v, r, ok in zip(self.convex_limits.nodes, self.convex_limits.residuals, self.convex_limits.passed)
            ],
            "synchronized_final": [y[-1].tolist() for y in self.synchronized],
            "notes": list(self.notes),
        }
        if self.eta_tail_norms is not None:
            out["eta_tail_norms"] = [float(v) for v in self.eta_tail_norms]
        return out


def build_sync_report(tr: Trajectory, d: BicomponentDecomposition, ks: KernelStructure, c: ConvergenceCriterion) -> SyncReport:
    stability = check_network_stability(tr, c)
    groups = [check_output_sync(tr, comp, c) for comp in d.basic_components]
    global_sync = check_output_sync(tr, range(tr.N), c)
    notes = []
    convex = None
    if d.m0 > 0:
        try:
            convex = check_convex_limits(tr, d, ks, c)
        except PreconditionError as exc:
            notes.append(f"convex limits skipped: {exc}")
    eta = None
    if tr.eta_signals.size:
        eta = np.abs(tr.eta_signals[c.tail(len(tr))]).max(axis=0)
    return SyncReport(
        epsilon=c.epsilon,
        stability=stability,
        groups=groups,
        global_sync=global_sync,
        convex_limits=convex,
        synchronized=synchronized_trajectories(tr, d),
        eta_tail_norms=eta,
        notes=notes,
    )
