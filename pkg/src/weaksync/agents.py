"""Heterogeneous LTI agents, dynamic protocols and network assembly.

An agent ``x+ = A x + B u, y = C x`` (optionally with a local measurement
``y_m = C_m x``) runs the protocol

    xi+ = K xi + G_zeta zeta + G_eta zeta_hat + G_meas y_m
    u   = M xi
    eta = N xi

where ``zeta`` is the weighted relative output received over the network and
``zeta_hat`` the same relative combination of the ``eta`` signals. The two
together give a closed loop ``x_e+ = A_t x_e + B_t [zeta; zeta_hat]`` with
``y = C_t x_e`` and exchanged signal ``z = H_t x_e = [y; eta]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._linalg import frozen
from .errors import DimensionError

TIME_DOMAINS = ("continuous", "discrete")


def _matrix(value, name, rows=None, cols=None):
    m = np.array(value, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1:
        m = m.reshape(1, -1) if rows == 1 else m.reshape(-1, 1)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got {m.ndim}-D")
    if (rows is not None and m.shape[0] != rows) or (cols is not None and m.shape[1] != cols):
        want = f"({rows if rows is not None else '*'}, {cols if cols is not None else '*'})"
        raise DimensionError(f"{name} has shape {m.shape}, expected {want}")
    return frozen(m)


@dataclass(frozen=True)
class AgentModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    C_m: np.ndarray | None = None
    time_domain: str = "continuous"

    def __post_init__(self):
        A = _matrix(self.A, "A")
        n = A.shape[0]
        if A.shape[1] != n:
            raise DimensionError(f"A must be square, got {A.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", _matrix(self.B, "B", rows=n))
        object.__setattr__(self, "C", _matrix(self.C, "C", rows=1 if np.ndim(self.C) == 1 else None, cols=n))
        if self.C_m is not None:
            cm = _matrix(self.C_m, "C_m", rows=1 if np.ndim(self.C_m) == 1 else None, cols=n)
            object.__setattr__(self, "C_m", cm)
        if self.time_domain not in TIME_DOMAINS:
            raise ValueError(f"time_domain must be one of {TIME_DOMAINS}, got {self.time_domain!r}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def n_meas(self) -> int:
        return 0 if self.C_m is None else self.C_m.shape[0]

    def to_dict(self) -> dict:
        return {
            "time_domain": self.time_domain,
            "n": self.n,
            "m": self.m,
            "p": self.p,
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "C_m": None if self.C_m is None else self.C_m.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> AgentModel:
        model = cls(
            A=data["A"],
            B=data["B"],
            C=data["C"],
            C_m=data.get("C_m"),
            time_domain=data.get("time_domain", "continuous"),
        )
        for key in ("n", "m", "p"):
            if key in data and int(data[key]) != getattr(model, key):
                raise DimensionError(f"declared {key}={data[key]} but matrices give {getattr(model, key)}")
        return model


@dataclass(frozen=True)
class DynamicProtocol:
    """Protocol gains. ``G_zeta`` is the gain on the network signal.

    ``G_eta``/``N`` may be omitted when no extra exchange is used (r = 0);
    ``G_meas`` may be omitted for non-introspective agents.
    """

    K: np.ndarray
    G_zeta: np.ndarray
    M: np.ndarray
    G_eta: np.ndarray | None = None
    G_meas: np.ndarray | None = None
    N: np.ndarray | None = None

    def __post_init__(self):
        K = _matrix(self.K, "K")
        q = K.shape[0]
        if K.shape[1] != q:
            raise DimensionError(f"K must be square, got {K.shape}")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "G_zeta", _matrix(self.G_zeta, "G_zeta", rows=q))
        object.__setattr__(self, "M", _matrix(self.M, "M", cols=q))
        N = np.zeros((0, q)) if self.N is None else _matrix(self.N, "N", rows=1 if np.ndim(self.N) == 1 else None, cols=q)
        object.__setattr__(self, "N", frozen(N))
        r = N.shape[0]
        G_eta = np.zeros((q, r)) if self.G_eta is None else _matrix(self.G_eta, "G_eta", rows=q, cols=r)
        object.__setattr__(self, "G_eta", frozen(G_eta))
        if self.G_meas is not None:
            object.__setattr__(self, "G_meas", _matrix(self.G_meas, "G_meas", rows=q))

    @property
    def q(self) -> int:
        return self.K.shape[0]

    @property
    def r(self) -> int:
        return self.N.shape[0]

    @classmethod
    def from_dict(cls, data: dict) -> DynamicProtocol:
        return cls(
            K=data["K"],
            G_zeta=data["G_zeta"],
            M=data["M"],
            G_eta=data.get("G_eta"),
            G_meas=data.get("G_meas"),
            N=data.get("N"),
        )


@dataclass(frozen=True)
class ClosedLoopAgent:
    A_t: np.ndarray
    B_t: np.ndarray
    C_t: np.ndarray
    H_t: np.ndarray

    def __post_init__(self):
        A = _matrix(self.A_t, "A_t")
        ns = A.shape[0]
        if A.shape[1] != ns:
            raise DimensionError(f"A_t must be square, got {A.shape}")
        C = _matrix(self.C_t, "C_t", rows=1 if np.ndim(self.C_t) <= 1 else None, cols=ns)
        H = _matrix(self.H_t, "H_t", rows=1 if np.ndim(self.H_t) <= 1 else None, cols=ns)
        B = _matrix(self.B_t, "B_t", rows=ns, cols=H.shape[0])
        p = C.shape[0]
        if H.shape[0] < p or not np.array_equal(H[:p], C):
            raise DimensionError("top block row of H_t must equal C_t")
        for name, value in (("A_t", A), ("B_t", B), ("C_t", C), ("H_t", H)):
            object.__setattr__(self, name, value)

    @property
    def n_states(self) -> int:
        return self.A_t.shape[0]

    @property
    def p(self) -> int:
        return self.C_t.shape[0]

    @property
    def r(self) -> int:
        return self.H_t.shape[0] - self.p


def assemble_closed_loop(model: AgentModel, protocol: DynamicProtocol) -> ClosedLoopAgent:
    n, q, p, r = model.n, protocol.q, model.p, protocol.r
    if protocol.G_zeta.shape[1] != p:
        raise DimensionError(
            f"G_zeta has shape {protocol.G_zeta.shape} but C has {p} output rows; expected ({q}, {p})"
        )
    if protocol.M.shape[0] != model.m:
        raise DimensionError(f"M has shape {protocol.M.shape} but B has shape {model.B.shape}; expected ({model.m}, {q})")
    meas_block = np.zeros((q, n))
    if protocol.G_meas is not None and np.any(protocol.G_meas):
        if model.C_m is None:
            raise DimensionError(f"G_meas has shape {protocol.G_meas.shape} but the agent has no C_m")
        if protocol.G_meas.shape[1] != model.n_meas:
            raise DimensionError(
                f"G_meas has shape {protocol.G_meas.shape} but C_m has shape {model.C_m.shape}; "
                f"expected ({q}, {model.n_meas})"
            )
        meas_block = protocol.G_meas @ model.C_m

    A_t = np.block([[model.A, model.B @ protocol.M], [meas_block, protocol.K]])
    B_t = np.vstack([np.zeros((n, p + r)), np.hstack([protocol.G_zeta, protocol.G_eta])])
    C_t = np.hstack([model.C, np.zeros((p, q))])
    H_t = np.block([[model.C, np.zeros((p, q))], [np.zeros((r, n)), protocol.N]])
    return ClosedLoopAgent(A_t, B_t, C_t, H_t)


def direct_closed_loop(A_t, B_t, C_t, H_t) -> ClosedLoopAgent:
    """Wrap user-supplied closed-loop blocks, e.g. ``u = -zeta`` integrators."""
    return ClosedLoopAgent(A_t, B_t, C_t, H_t)


def single_integrator(gain=1.0) -> ClosedLoopAgent:
    """Scalar agent ``x+ = -gain * zeta`` (CT: x' = -gain zeta)."""
    return ClosedLoopAgent([[0.0]], [[-gain]], [[1.0]], [[1.0]])


@dataclass(frozen=True)
class NetworkSystem:
    agents: tuple[ClosedLoopAgent, ...]
    laplacian: np.ndarray
    system_matrix: np.ndarray
    output_map: np.ndarray
    signal_map: np.ndarray

    @property
    def N(self) -> int:
        return len(self.agents)

    @property
    def p(self) -> int:
        return self.agents[0].p

    @property
    def r(self) -> int:
        return self.agents[0].r

    @property
    def state_dims(self) -> tuple[int, ...]:
        return tuple(a.n_states for a in self.agents)

    @property
    def n_states(self) -> int:
        return self.system_matrix.shape[0]

    def state_slices(self) -> list[slice]:
        bounds = np.concatenate([[0], np.cumsum(self.state_dims)])
        return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]

    @property
    def zeta_map(self) -> np.ndarray:
        """Rows of ``signal_map`` that produce the stacked ``zeta``."""
        w = self.p + self.r
        rows = [i * w + c for i in range(self.N) for c in range(self.p)]
        return self.signal_map[rows]

    @property
    def eta_signal_map(self) -> np.ndarray:
        w = self.p + self.r
        rows = [i * w + self.p + c for i in range(self.N) for c in range(self.r)]
        return self.signal_map[rows]


def assemble_network(agents, L) -> NetworkSystem:
    """Build ``A~ + B~ (L (x) H~)`` block by block.

    Block ``(i, j)`` of the system matrix is ``A_t[i] delta_ij + l_ij B_t[i] H_t[j]``,
    which is the Kronecker form when all agents are identical.
    """
    agents = tuple(agents)
    L = np.asarray(L, dtype=float)
    N = len(agents)
    if L.shape != (N, N):
        raise DimensionError(f"{N} agents but Laplacian has shape {L.shape}")
    p, r = agents[0].p, agents[0].r
    for idx, a in enumerate(agents):
        if a.p != p or a.r != r:
            raise DimensionError(f"agent {idx} has (p, r) = ({a.p}, {a.r}); agent 0 has ({p}, {r})")
    dims = [a.n_states for a in agents]
    offs = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    total = int(offs[-1])
    w = p + r

    A_blk = np.zeros((total, total))
    B_blk = np.zeros((total, N * w))
    C_blk = np.zeros((N * p, total))
    signal = np.zeros((N * w, total))
    for i, a in enumerate(agents):
        si = slice(offs[i], offs[i + 1])
        A_blk[si, si] = a.A_t
        B_blk[si, i * w : (i + 1) * w] = a.B_t
        C_blk[i * p : (i + 1) * p, si] = a.C_t
        for j, b in enumerate(agents):
            if L[i, j] != 0.0:
                signal[i * w : (i + 1) * w, offs[j] : offs[j + 1]] = L[i, j] * b.H_t
    system = A_blk.copy()
    for i, a in enumerate(agents):
        si = slice(offs[i], offs[i + 1])
        for j, b in enumerate(agents):
            if L[i, j] != 0.0:
                system[si, offs[j] : offs[j + 1]] += L[i, j] * (a.B_t @ b.H_t)
    return NetworkSystem(
        agents=agents,
        laplacian=frozen(L),
        system_matrix=frozen(system),
        output_map=frozen(C_blk),
        signal_map=frozen(signal),
    )


# -- models from the numerical examples ------------------------------------

_BUILTIN = {
    "ct1": dict(
        A=[[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [0, 0, 0, 0]],
        B=[[0, 1], [0, 0], [1, 0], [0, 1]],
        C=[[1, 0, 0, 0]],
        C_m=[[1, 1, 0, 0]],
        time_domain="continuous",
    ),
    "ct2": dict(
        A=[[0, 1, 0], [0, 0, 1], [0, 0, 0]],
        B=[[0], [0], [1]],
        C=[[1, 0, 0]],
        C_m=[[1, 1, 0]],
        time_domain="continuous",
    ),
    "ct3": dict(
        A=[
            [-1, 0, 0, -1, 0],
            [0, 0, 1, 1, 0],
            [0, 1, -1, 1, 0],
            [0, 0, 0, 1, 1],
            [-1, 1, 0, 1, 1],
        ],
        B=[[0, 0], [0, 0], [0, 1], [0, 0], [1, 0]],
        C=[[0, 0, 0, 1, 0]],
        C_m=[[1, 1, 0, 0, 0]],
        time_domain="continuous",
    ),
    "ct-target": dict(
        A=[[0, 1, 0], [0, 0, 1], [0, -1, 0]],
        B=[[0], [0], [1]],
        C=[[1, 0, 0]],
        time_domain="continuous",
    ),
    "dt1": dict(
        A=[[0, 1, 0, 0], [0, 0, 1, 0], [-1, 0, 0, -1], [0, -1, 0, 0]],
        B=[[0, 0], [0, 0], [0, 1], [1, 0]],
        C=[[0, 0, 0, 1]],
        C_m=[[0, -1, 0, 1]],
        time_domain="discrete",
    ),
    "dt2": dict(
        A=[[0, 1, 0], [0, 0, 1], [0, 0, 0]],
        B=[[0], [0], [1]],
        C=[[1, 0, 0]],
        C_m=[[1, 1, 0]],
        time_domain="discrete",
    ),
    "dt3": dict(
        A=[[0, 1], [0, 0]],
        B=[[0], [1]],
        C=[[1, 0]],
        C_m=[[1, 1]],
        time_domain="discrete",
    ),
    "dt4": dict(
        A=[[0, 1], [-2, -2]],
        B=[[0], [1]],
        C=[[1, 0]],
        C_m=[[1, 1]],
        time_domain="discrete",
    ),
    "dt-target": dict(
        A=[[0, 1, 0], [0, 0, 1], [1, -2, 2]],
        B=[[0], [0], [1]],
        C=[[1, 0, 0]],
        time_domain="discrete",
    ),
}

BUILTIN_MODEL_NAMES = tuple(_BUILTIN)


def builtin_models(name: str) -> AgentModel:
    try:
        spec = _BUILTIN[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; choose from {', '.join(BUILTIN_MODEL_NAMES)}") from None
    return AgentModel(**spec)


def dump_builtin_models() -> str:
    """Canonical JSON dump of every built-in model, keyed by name."""
    data = {name: builtin_models(name).to_dict() for name in BUILTIN_MODEL_NAMES}
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
