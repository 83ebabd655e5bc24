import numpy as np
import pytest
from scipy.linalg import expm

from oracles import laplacian, random_digraph
from weaksync.agents import assemble_network, direct_closed_loop, single_integrator
from weaksync.errors import SimulationDiverged
from weaksync.graph import DirectedWeightedGraph, build_laplacian, decompose_bicomponents
from weaksync.kernel import kernel_structure
from weaksync.simulate import (
    SimConfig,
    integrate,
    simulate,
    superposition_split,
    trajectory_from_csv,
    trajectory_to_csv,
    verify_superposition,
)


def integrators(w):
    L = laplacian(w)
    return assemble_network([single_integrator()] * len(L), L)


def edges(n, *triples):
    return DirectedWeightedGraph.from_edges(n, [(a - 1, b - 1, w) for a, b, w in triples])


HUB = edges(3, (1, 3, 1.0), (2, 3, 3.0))
CHAIN2 = edges(2, (1, 2, 1.0))


def random_stable_matrix(rng, n):
    A = rng.normal(size=(n, n))
    shift = np.max(np.linalg.eigvals(A).real) + rng.uniform(0.2, 1.0)
    return A - shift * np.eye(n)


def rk4_error(M, x0, h, T=1.0):
    cfg = SimConfig(x0, step=h, horizon=T, sample_stride=1)
    _, states = integrate(M, x0, cfg)
    return np.max(np.abs(states[-1] - expm(M * T) @ x0))


class TestIntegrate:
    def test_exponential_decay(self):
        times, states = integrate([[-1.0]], [1.0], SimConfig([1.0], step=0.01, horizon=1.0))
        assert times[-1] == pytest.approx(1.0)
        assert abs(states[-1, 0] - np.exp(-1.0)) < 1e-6

    def test_zero_matrix_is_constant(self):
        x0 = np.array([1.5, -2.0, 0.25])
        _, states = integrate(np.zeros((3, 3)), x0, SimConfig(x0, horizon=2.0))
        assert np.array_equal(states, np.tile(x0, (len(states), 1)))

    def test_chain_signal(self):
        sys = integrators(CHAIN2.weights)
        tr = simulate(sys, SimConfig([0.0, 1.0], step=0.01, horizon=5.0))
        assert np.all(tr.signal(0) == 0)
        assert np.max(np.abs(tr.signal(1)[:, 0] - np.exp(-tr.times))) < 1e-6

    def test_sampling_includes_final_step(self):
        cfg = SimConfig([1.0], step=0.1, horizon=1.0, sample_stride=4)
        times, _ = integrate([[-1.0]], [1.0], cfg)
        np.testing.assert_allclose(times, [0.0, 0.4, 0.8, 1.0])

    def test_discrete_is_repeated_multiplication(self):
        rng = np.random.default_rng(0)
        M = rng.normal(size=(4, 4)) / 3
        x0 = rng.normal(size=4)
        _, states = integrate(M, x0, SimConfig(x0, time_domain="discrete", horizon=30, sample_stride=1))
        x = x0.copy()
        for t in range(1, 31):
            x = M @ x
            assert np.array_equal(states[t], x)

    def test_divergence_guard(self):
        with pytest.raises(SimulationDiverged) as info:
            integrate([[10.0]], [1.0], SimConfig([1.0], step=0.01, horizon=10.0))
        assert 2.0 < info.value.time < 3.0

    def test_signal_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            w = random_digraph(rng, n_max=8)
            sys = integrators(w)
            x0 = rng.normal(size=len(w))
            tr = simulate(sys, SimConfig(x0, horizon=3.0))
            np.testing.assert_allclose(tr.signals, tr.outputs @ laplacian(w).T, atol=1e-12)

    @pytest.mark.parametrize("bad", [dict(step=0.0), dict(horizon=-1.0), dict(sample_stride=0), dict(time_domain="hybrid")])
    def test_config_validation(self, bad):
        with pytest.raises(ValueError):
            SimConfig([1.0], **bad)

    def test_rk4_order(self):
        rng = np.random.default_rng(2)
        M = random_stable_matrix(rng, 4)
        x0 = rng.normal(size=4)
        ratio = rk4_error(M, x0, 0.1) / rk4_error(M, x0, 0.05)
        assert 12 <= ratio <= 20


class TestSuperposition:
    def test_hub_split(self):
        d = decompose_bicomponents(HUB)
        ks = kernel_structure(build_laplacian(HUB), d)
        x1, x2, x3 = 2.0, 6.0, -1.0
        first, second = superposition_split([x1, x2, x3], d, ks)
        # node 3 sees both sources; the lower bicomponent index wins
        assert np.array_equal(first, [x1, 0.0, x3])
        assert np.array_equal(second, [0.0, x2, 0.0])

    def test_single_bicomponent(self):
        d = decompose_bicomponents(CHAIN2)
        ks = kernel_structure(build_laplacian(CHAIN2), d)
        (only,) = superposition_split([3.0, 4.0], d, ks)
        assert np.array_equal(only, [3.0, 4.0])

    def test_all_basic(self):
        g = edges(4, (1, 2, 1.0), (2, 1, 1.0))
        d = decompose_bicomponents(g)
        ks = kernel_structure(build_laplacian(g), d)
        pieces = superposition_split([1.0, 2.0, 3.0, 4.0], d, ks)
        assert [p.tolist() for p in pieces] == [[1, 2, 0, 0], [0, 0, 3, 0], [0, 0, 0, 4]]

    def test_multi_state_blocks(self):
        d = decompose_bicomponents(HUB)
        ks = kernel_structure(build_laplacian(HUB), d)
        x0 = np.arange(1.0, 7.0)
        first, second = superposition_split(x0, d, ks, state_dims=[2, 1, 3])
        assert np.array_equal(first, [1, 2, 0, 4, 5, 6])
        assert np.array_equal(first + second, x0)

    def test_hub_deviation(self):
        d = decompose_bicomponents(HUB)
        ks = kernel_structure(build_laplacian(HUB), d)
        sys = integrators(HUB.weights)
        cfg = SimConfig([2.0, 6.0, -1.0])
        assert verify_superposition(sys, cfg, superposition_split(cfg.initial_state, d, ks)) < 1e-10

    def test_single_split_exact(self):
        d = decompose_bicomponents(CHAIN2)
        ks = kernel_structure(build_laplacian(CHAIN2), d)
        cfg = SimConfig([3.0, 4.0])
        assert verify_superposition(integrators(CHAIN2.weights), cfg, superposition_split([3.0, 4.0], d, ks)) == 0.0

    def test_random_heterogeneous(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            w = random_digraph(rng, n_max=6, n_min=6)
            g = DirectedWeightedGraph(w)
            d = decompose_bicomponents(g)
            ks = kernel_structure(build_laplacian(g), d)
            dims = rng.integers(1, 3, size=6)
            agents = [direct_closed_loop(-np.eye(k) + 0.1 * rng.normal(size=(k, k)), -0.3 * np.eye(k, 1), np.eye(1, k), np.eye(1, k)) for k in dims]
            sys = assemble_network(agents, build_laplacian(g))
            x0 = rng.normal(size=sys.n_states)
            cfg = SimConfig(x0, horizon=10.0)
            assert verify_superposition(sys, cfg, superposition_split(x0, d, ks, state_dims=dims)) < 1e-9


class TestCsv:
    def test_round_trip_bit_exact(self):
        rng = np.random.default_rng(4)
        sys = integrators(HUB.weights)
        tr = simulate(sys, SimConfig(rng.normal(size=3) * np.pi, horizon=2.0))
        text = trajectory_to_csv(tr)
        assert text.splitlines()[0] == "t,x[0],x[1],x[2],y[0],y[1],y[2],zeta[0],zeta[1],zeta[2]"
        back = trajectory_from_csv(text)
        for name in ("times", "states", "outputs", "signals"):
            assert np.array_equal(getattr(back, name), getattr(tr, name))
