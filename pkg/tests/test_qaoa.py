"""Statevector simulation, sampling, and the training loop."""

from __future__ import annotations

from dataclasses import replace
from functools import reduce

import numpy as np
import pytest

from puboqa.extbp import builtin_instance, to_pubo
from puboqa.pbf import Polynomial
from puboqa.qaoa import (
    QUBIT_CAP,
    CostTable,
    QaoaConfig,
    bits_string,
    build_cost_table,
    estimate_loss,
    evolve,
    optimize,
    run,
    sample,
)

V = Polynomial.variable


class TestCostTable:
    def test_single_variable(self):
        table = build_cost_table(V(0), 1)
        assert table.values.tolist() == [0.0, 1.0]

    def test_two_qubit_example(self):
        poly = 1 + 2 * V(0) - V(1) + 3 * Polynomial({(0, 1): 1.0})
        table = build_cost_table(poly, 2)
        # z = 0, 1 (x0), 2 (x1), 3 (both)
        assert table.values.tolist() == [1.0, 3.0, 0.0, 5.0]

    def test_zero_polynomial(self):
        assert build_cost_table(Polynomial.zero(), 2).values.tolist() == [0.0] * 4

    def test_constant_on_zero_qubits(self):
        table = build_cost_table(Polynomial.constant(7.0), 0)
        assert table.values.tolist() == [7.0]

    def test_matches_pointwise_evaluation(self):
        rng = np.random.default_rng(3)
        n = 6
        terms = {}
        for _ in range(12):
            mono = tuple(sorted(int(v) for v in rng.choice(n, size=rng.integers(1, 4), replace=False)))
            terms[mono] = terms.get(mono, 0.0) + float(rng.integers(-5, 6))
        poly = Polynomial(terms) + 2.5
        table = build_cost_table(poly, n)
        for z in range(1 << n):
            bits = [(z >> k) & 1 for k in range(n)]
            assert table.values[z] == pytest.approx(poly.evaluate(bits), abs=1e-12)

    def test_min_and_minimizers(self):
        table = CostTable(2, np.array([1.0, 0.0, 0.0, 2.0]))
        assert table.min_value() == 0.0
        assert table.minimizers().tolist() == [1, 2]

    def test_variable_out_of_range(self):
        with pytest.raises(ValueError, match="outside"):
            build_cost_table(V(3), 2)

    def test_qubit_cap(self):
        with pytest.raises(ValueError, match="cap"):
            build_cost_table(V(0), QUBIT_CAP + 1)

    def test_shape_validation(self):
        with pytest.raises(ValueError, match="expected"):
            CostTable(2, np.zeros(3))


class TestBitsString:
    def test_little_endian(self):
        assert bits_string(1, 3) == "100"
        assert bits_string(4, 3) == "001"
        assert bits_string(6, 4) == "0110"

    def test_round_trip(self):
        for z in range(16):
            s = bits_string(z, 4)
            assert int(s[::-1], 2) == z


def dense_evolve(params, values):
    """Reference implementation with explicit operator matrices."""
    params = np.asarray(params, dtype=float)
    depth = len(params) // 2
    n = int(np.log2(len(values)))
    psi = np.full(len(values), 2.0 ** (-n / 2), dtype=np.complex128)
    for layer in range(depth):
        gamma, beta = params[layer], params[depth + layer]
        psi = np.exp(-1j * gamma * values) * psi
        c, s = np.cos(beta), np.sin(beta)
        m1 = np.array([[c, -1j * s], [-1j * s, c]])
        mixer = reduce(np.kron, [m1] * n)
        psi = mixer @ psi
    return psi


class TestEvolve:
    def table(self, n):
        rng = np.random.default_rng(17 + n)
        return CostTable(n, rng.integers(-4, 5, size=1 << n).astype(float))

    def test_zero_gamma_keeps_uniform_probabilities(self):
        table = self.table(3)
        psi = evolve([0.0, 0.7], table)
        probs = np.abs(psi) ** 2
        assert np.allclose(probs, 1 / 8, atol=1e-12)

    def test_zero_beta_leaves_pure_phases(self):
        table = self.table(3)
        gamma = 1.3
        psi = evolve([gamma, 0.0], table)
        want = 2.0 ** (-1.5) * np.exp(-1j * gamma * table.values)
        assert np.array_equal(psi, want)

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    @pytest.mark.parametrize("depth", [1, 2, 3])
    def test_against_dense_operators(self, n, depth):
        table = self.table(n)
        rng = np.random.default_rng(100 * n + depth)
        params = np.concatenate(
            [rng.uniform(0, 2 * np.pi, depth), rng.uniform(0, np.pi, depth)]
        )
        got = evolve(params, table)
        want = dense_evolve(params, table.values)
        assert np.allclose(got, want, atol=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 6])
    def test_norm_preserved(self, n):
        table = self.table(n)
        psi = evolve([0.9, 2.2, 0.4, 1.1], table, check_norm=True)
        assert abs(np.vdot(psi, psi).real - 1.0) < 1e-9

    def test_single_qubit_exact_solve(self):
        # gamma = pi/2, beta = pi/4 concentrates everything on state 1
        table = build_cost_table(V(0), 1)
        psi = evolve([np.pi / 2, np.pi / 4], table)
        assert abs(psi[0]) < 1e-12
        assert abs(abs(psi[1]) - 1.0) < 1e-12

    def test_separable_cost_factorizes(self):
        single = evolve([0.8, 0.3], build_cost_table(V(0), 1))
        table3 = build_cost_table(V(0) + V(1) + V(2), 3)
        got = evolve([0.8, 0.3], table3)
        want = np.kron(single, np.kron(single, single))
        assert np.allclose(got, want, atol=1e-12)

    def test_odd_parameter_count_rejected(self):
        with pytest.raises(ValueError, match="even"):
            evolve([0.1, 0.2, 0.3], self.table(2))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            evolve([np.nan, 0.1], self.table(2))


class _StubRng:
    def __init__(self, draws):
        self.draws = np.asarray(draws, dtype=float)

    def random(self, n):
        assert n == len(self.draws)
        return self.draws


class TestSample:
    def test_point_mass(self):
        psi = np.zeros(8, dtype=np.complex128)
        psi[5] = 1.0
        out = sample(psi, 50, np.random.default_rng(0))
        assert np.all(out == 5)

    def test_deterministic_under_seed(self):
        psi = np.full(8, 2.0 ** -1.5, dtype=np.complex128)
        a = sample(psi, 100, np.random.default_rng(42))
        b = sample(psi, 100, np.random.default_rng(42))
        assert np.array_equal(a, b)

    def test_uniform_frequencies(self):
        psi = np.full(4, 0.5, dtype=np.complex128)
        out = sample(psi, 20000, np.random.default_rng(7))
        freqs = np.bincount(out, minlength=4) / 20000
        sigma = np.sqrt(0.25 * 0.75 / 20000)
        assert np.all(np.abs(freqs - 0.25) < 5 * sigma)

    def test_boundary_draws(self):
        # amplitudes 0.5 square to exactly 0.25, so the cdf edges are exact
        psi = np.full(4, 0.5, dtype=np.complex128)
        out = sample(psi, 4, _StubRng([0.0, 0.25, 0.5, 1.0]))
        # a draw equal to a cdf edge falls into the next bin; 1.0 clips back
        assert out.tolist() == [0, 1, 2, 3]

    def test_shot_count_validated(self):
        psi = np.array([1.0 + 0j, 0.0])
        with pytest.raises(ValueError, match="at least 1"):
            sample(psi, 0, np.random.default_rng(0))


class TestEstimateLoss:
    def test_mean_of_table_values(self):
        table = CostTable(2, np.array([1.0, 3.0, 0.0, 5.0]))
        assert estimate_loss(np.array([0, 3]), table) == 3.0
        assert estimate_loss(np.array([2, 2, 2]), table) == 0.0

    def test_empty_rejected(self):
        table = CostTable(1, np.array([0.0, 1.0]))
        with pytest.raises(ValueError, match="zero samples"):
            estimate_loss(np.array([], dtype=int), table)


class TestOptimize:
    def test_converges_on_quadratic(self):
        calls = []

        def loss(theta):
            calls.append(1)
            return float((theta[0] - 1.0) ** 2 + (theta[1] + 2.0) ** 2)

        theta, trace = optimize(loss, [4.0, 4.0], QaoaConfig(max_evals=200))
        assert abs(theta[0] - 1.0) <= 1e-2 and abs(theta[1] + 2.0) <= 1e-2
        assert len(trace) == len(calls) <= 200

    def test_hard_evaluation_cap(self):
        def loss(theta):
            return float(np.sum(np.asarray(theta) ** 2))

        _, trace = optimize(loss, [3.0, -3.0], QaoaConfig(max_evals=5))
        assert len(trace) <= 5

    def test_constant_loss_terminates(self):
        _, trace = optimize(lambda t: 1.0, [0.0, 0.0], QaoaConfig(max_evals=50))
        assert trace and all(v == 1.0 for _, v in trace)

    def test_trace_matches_function(self):
        def loss(theta):
            return float(np.cos(theta[0]) + 0.1 * theta[1] ** 2)

        _, trace = optimize(loss, [1.0, 1.0], QaoaConfig(max_evals=30))
        for theta, value in trace:
            assert value == pytest.approx(loss(theta), abs=1e-12)


class TestRun:
    CFG = QaoaConfig(depth=1, n_shots=5, max_evals=25)

    def table(self):
        return build_cost_table(to_pubo(builtin_instance("A")).poly, 7)

    def test_replays_bit_identically(self):
        a = run(self.table(), self.CFG, seed=3)
        b = run(self.table(), self.CFG, seed=3)
        assert a.trace == b.trace
        assert a.final_params == b.final_params
        assert (a.best_state, a.best_loss) == (b.best_state, b.best_loss)
        assert (a.n_iterations, a.n_sampled) == (b.n_iterations, b.n_sampled)

    def test_seeds_change_the_run(self):
        a = run(self.table(), self.CFG, seed=3)
        b = run(self.table(), self.CFG, seed=4)
        assert a.trace[0][0] != b.trace[0][0]

    def test_bookkeeping(self):
        rec = run(self.table(), self.CFG, seed=5)
        assert rec.n_qubits == 7
        assert rec.n_iterations == len(rec.trace) <= self.CFG.max_evals
        assert rec.n_sampled == self.CFG.n_shots * rec.n_iterations
        assert len(rec.final_params) == 2 * self.CFG.depth

    def test_best_state_consistent_with_loss(self):
        table = self.table()
        rec = run(table, self.CFG, seed=5)
        assert table.values[rec.best_state] == rec.best_loss
        assert rec.best_loss <= min(v for _, v in rec.trace) + 1e-9

    def test_best_bits_little_endian(self):
        rec = run(self.table(), self.CFG, seed=6)
        assert len(rec.best_bits) == 7
        assert int(rec.best_bits[::-1], 2) == rec.best_state

    def test_initial_params_inside_documented_ranges(self):
        cfg = replace(self.CFG, depth=3)
        rec = run(self.table(), cfg, seed=11)
        theta0 = rec.trace[0][0]
        assert all(0 <= g < 2 * np.pi for g in theta0[:3])
        assert all(0 <= b < np.pi for b in theta0[3:])

    def test_accepts_encoding_directly(self):
        rec = run(to_pubo(builtin_instance("A")), self.CFG, seed=2)
        assert rec.n_qubits == 7

    def test_seed_from_config(self):
        cfg = replace(self.CFG, seed=9)
        a = run(self.table(), cfg)
        b = run(self.table(), cfg, seed=9)
        assert a.trace == b.trace

    def test_seed_required(self):
        with pytest.raises(ValueError, match="seed"):
            run(self.table(), self.CFG)


class TestQaoaConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(depth=0),
            dict(n_shots=0),
            dict(max_evals=0),
            dict(rho_begin=1e-4, rho_end=1e-3),
            dict(rho_end=0.0),
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            QaoaConfig(**kwargs)
