"""Fixed-step simulation of an assembled network and trajectory export."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .agents import NetworkSystem
from .errors import DimensionError, SimulationDiverged
from .graph import BicomponentDecomposition
from .kernel import SUPPORT_TOL, KernelStructure

DIVERGENCE_LIMIT = 1e12
DEFAULT_STEP = 0.01
DEFAULT_CT_HORIZON = 50.0
DEFAULT_DT_HORIZON = 500
DEFAULT_STRIDE = 10


@dataclass(frozen=True)
class SimConfig:
    """``horizon`` is a final time (continuous) or a step count (discrete)."""

    initial_state: np.ndarray
    time_domain: str = "continuous"
    step: float = DEFAULT_STEP
    horizon: float | None = None
    sample_stride: int = DEFAULT_STRIDE

    def __post_init__(self):
        if self.time_domain not in ("continuous", "discrete"):
            raise ValueError(f"time_domain must be 'continuous' or 'discrete', got {self.time_domain!r}")
        if self.horizon is None:
            default = DEFAULT_CT_HORIZON if self.time_domain == "continuous" else DEFAULT_DT_HORIZON
            object.__setattr__(self, "horizon", default)
        if not self.step > 0:
            raise ValueError(f"step must be > 0, got {self.step}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")
        if int(self.sample_stride) < 1:
            raise ValueError(f"sample_stride must be >= 1, got {self.sample_stride}")
        x0 = np.array(self.initial_state, dtype=float).ravel()
        x0.setflags(write=False)
        object.__setattr__(self, "initial_state", x0)
        object.__setattr__(self, "sample_stride", int(self.sample_stride))

    @property
    def n_steps(self) -> int:
        if self.time_domain == "discrete":
            return int(round(self.horizon))
        return int(round(self.horizon / self.step))

    def with_initial_state(self, x0) -> SimConfig:
        return SimConfig(x0, self.time_domain, self.step, self.horizon, self.sample_stride)


@dataclass(frozen=True)
class Trajectory:
    """Sampled run. ``outputs`` and ``signals`` are ``(samples, N*p)``.

    ``eta_signals`` carries the relative combination of the protocol's extra
    exchange variables and has zero columns when the agents exchange none.
    """

    times: np.ndarray
    states: np.ndarray
    outputs: np.ndarray
    signals: np.ndarray
    p: int = 1
    eta_signals: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def __len__(self):
        return len(self.times)

    @property
    def N(self) -> int:
        return self.outputs.shape[1] // self.p if self.p else 0

    def output(self, i) -> np.ndarray:
        """Output samples of agent ``i``, shape ``(samples, p)``."""
        return self.outputs[:, i * self.p : (i + 1) * self.p]

    def signal(self, i) -> np.ndarray:
        return self.signals[:, i * self.p : (i + 1) * self.p]

    def outputs_by_agent(self) -> np.ndarray:
        """Outputs reshaped to ``(samples, N, p)``."""
        return self.outputs.reshape(len(self.times), -1, self.p)


def _rk4_step(M, x, h):
    k1 = M @ x
    k2 = M @ (x + 0.5 * h * k1)
    k3 = M @ (x + 0.5 * h * k2)
    k4 = M @ (x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(M, x0, cfg: SimConfig):
    """Integrate ``x+ = M x``; return sample times and sampled states."""
    M = np.asarray(M, dtype=float)
    x = np.array(x0, dtype=float)
    if M.shape != (x.size, x.size):
        raise DimensionError(f"initial state has length {x.size} but system matrix is {M.shape}")
    discrete = cfg.time_domain == "discrete"
    h = 1.0 if discrete else cfg.step
    steps, stride = cfg.n_steps, cfg.sample_stride
    sample_steps = list(range(0, steps + 1, stride))
    if sample_steps[-1] != steps:
        sample_steps.append(steps)
    states = np.empty((len(sample_steps), x.size))
    states[0] = x
    slot = 1
    for s in range(1, steps + 1):
        x = M @ x if discrete else _rk4_step(M, x, h)
        norm = np.max(np.abs(x)) if x.size else 0.0
        if not np.isfinite(norm) or norm > DIVERGENCE_LIMIT:
            raise SimulationDiverged(s * h, norm)
        if slot < len(sample_steps) and s == sample_steps[slot]:
            states[slot] = x
            slot += 1
    times = np.array(sample_steps, dtype=float) * h
    return times, states


def simulate(sys: NetworkSystem, cfg: SimConfig) -> Trajectory:
    times, states = integrate(sys.system_matrix, cfg.initial_state, cfg)
    return Trajectory(
        times=times,
        states=states,
        outputs=states @ sys.output_map.T,
        signals=states @ sys.zeta_map.T,
        p=sys.p,
        eta_signals=states @ sys.eta_signal_map.T,
    )


def superposition_split(x0, d: BicomponentDecomposition, ks: KernelStructure, state_dims=None) -> list[np.ndarray]:
    """Split ``x0`` into one initial state per basic bicomponent.

    Agents in basic bicomponent ``i`` go to piece ``i``; a non-basic agent goes
    to the first bicomponent whose convex weight for it is nonzero. The
    pieces sum to ``x0`` exactly.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    if state_dims is None:
        state_dims = [1] * d.n
    bounds = np.concatenate([[0], np.cumsum(state_dims)]).astype(int)
    if bounds[-1] != x0.size:
        raise DimensionError(f"state dims sum to {bounds[-1]} but x0 has length {x0.size}")
    owner = d.basic_index_of()
    for node, row in ks.beta_by_node().items():
        owner[node] = int(np.flatnonzero(row > SUPPORT_TOL)[0])
    pieces = [np.zeros_like(x0) for _ in range(d.k)]
    for node in range(d.n):
        sl = slice(bounds[node], bounds[node + 1])
        pieces[owner[node]][sl] = x0[sl]
    return pieces


def verify_superposition(sys: NetworkSystem, cfg: SimConfig, splits) -> float:
    """Largest sup-norm gap between the summed split runs and the full run."""
    _, full = integrate(sys.system_matrix, cfg.initial_state, cfg)
    total = np.zeros_like(full)
    for piece in splits:
        _, states = integrate(sys.system_matrix, piece, cfg)
        total += states
    return float(np.max(np.abs(total - full))) if full.size else 0.0


# -- CSV export ---------------------------------------------------------------


def trajectory_header(tr: Trajectory) -> list[str]:
    return (
        ["t"]
        + [f"x[{i}]" for i in range(tr.states.shape[1])]
        + [f"y[{i}]" for i in range(tr.outputs.shape[1])]
        + [f"zeta[{i}]" for i in range(tr.signals.shape[1])]
    )


def trajectory_to_csv(tr: Trajectory) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(trajectory_header(tr))
    rows = np.column_stack([tr.times, tr.states, tr.outputs, tr.signals])
    for row in rows:
        writer.writerow([f"{v:.17g}" for v in row])
    return buf.getvalue()


def trajectory_from_csv(text: str, p: int = 1) -> Trajectory:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    groups = {"x": [], "y": [], "zeta": []}
    for col, name in enumerate(header[1:], 1):
        groups[name.split("[", 1)[0]].append(col)
    data = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
    if data.size == 0:
        data = np.zeros((0, len(header)))
    return Trajectory(
        times=data[:, 0],
        states=data[:, groups["x"]],
        outputs=data[:, groups["y"]],
        signals=data[:, groups["zeta"]],
        p=p,
    )


def trajectory_to_dict(tr: Trajectory) -> dict:
    return {
        "p": tr.p,
        "times": tr.times.tolist(),
        "states": tr.states.tolist(),
        "outputs": tr.outputs.tolist(),
        "signals": tr.signals.tolist(),
    }

