"""Bin packing instances, oracles, and both binary encodings."""

from __future__ import annotations

from itertools import product

import pytest

from puboqa.extbp import (
    Classification,
    EbpAssignment,
    EbpInstance,
    Train,
    brute_force,
    builtin_instance,
    classify,
    default_lambda,
    encode,
    is_feasible,
    objective_polynomial,
    objective_value,
    to_pubo,
    to_qubo,
)
from puboqa.pbf import Polynomial


def bits_of(z, width):
    return tuple((z >> k) & 1 for k in range(width))


class TestInstances:
    def test_builtin_shapes(self):
        a, b, c = (builtin_instance(k) for k in "ABC")
        assert (a.num_trains, a.num_groups, a.num_y, a.cmax) == (3, 2, 4, 2)
        assert (b.num_trains, b.num_groups, b.num_y, b.cmax) == (3, 4, 6, 2)
        assert (c.num_trains, c.num_groups, c.num_y, c.cmax) == (3, 5, 8, 2)
        for inst in (a, b, c):
            assert all(t.cost == 1.0 and t.benefit == 1.0 for t in inst.trains)

    def test_y_pairs_train_major(self):
        a = builtin_instance("A")
        assert a.y_pairs == ((0, 0), (1, 1), (2, 0), (2, 1))

    def test_eligible_trains(self):
        a = builtin_instance("A")
        assert a.eligible_trains(0) == (0, 2)
        assert a.eligible_trains(1) == (1, 2)

    def test_builtin_name_is_case_insensitive(self):
        assert builtin_instance(" b ").name == "B"

    def test_unknown_builtin(self):
        with pytest.raises(ValueError, match="unknown builtin"):
            builtin_instance("D")

    def test_json_round_trip(self):
        c = builtin_instance("C")
        assert EbpInstance.from_obj(c.to_obj()) == c

    def test_malformed_object(self):
        with pytest.raises(ValueError, match="malformed"):
            EbpInstance.from_obj({"name": "X"})

    @pytest.mark.parametrize(
        "kwargs,msg",
        [
            (dict(cmax=0), "cmax"),
            (dict(trains=(Train(-1.0, 1.0, (0,)),)), "negative"),
            (dict(trains=(Train(1.0, 1.0, (1, 0)),)), "increasing"),
            (dict(trains=(Train(1.0, 1.0, (5,)),)), "out of range"),
        ],
    )
    def test_validation(self, kwargs, msg):
        base = dict(name="X", num_groups=2, cmax=2, trains=(Train(1.0, 1.0, (0,)),))
        base.update(kwargs)
        with pytest.raises(ValueError, match=msg):
            EbpInstance(**base)


class TestFeasibilityAndObjective:
    def setup_method(self):
        self.a = builtin_instance("A")

    def test_all_zero_is_feasible_at_zero(self):
        empty = EbpAssignment((0, 0, 0), (0, 0, 0, 0))
        assert is_feasible(self.a, empty)
        assert objective_value(self.a, empty) == 0.0

    def test_shared_train_carries_both_groups(self):
        best = EbpAssignment((0, 0, 1), (0, 0, 1, 1))
        assert is_feasible(self.a, best)
        assert objective_value(self.a, best) == -1.0

    def test_boarding_unused_train_is_infeasible(self):
        assert not is_feasible(self.a, EbpAssignment((0, 0, 0), (1, 0, 0, 0)))

    def test_double_boarding_is_infeasible(self):
        assert not is_feasible(self.a, EbpAssignment((1, 0, 1), (1, 0, 1, 0)))

    def test_capacity_bound(self):
        inst = EbpInstance(
            "X", 3, 2, (Train(1.0, 1.0, (0, 1, 2)),)
        )
        assert is_feasible(inst, EbpAssignment((1,), (1, 1, 0)))
        assert not is_feasible(inst, EbpAssignment((1,), (1, 1, 1)))

    def test_classify(self):
        best = EbpAssignment((0, 0, 1), (0, 0, 1, 1))
        ok = EbpAssignment((1, 0, 0), (1, 0, 0, 0))
        bad = EbpAssignment((0, 0, 0), (1, 0, 0, 0))
        assert classify(self.a, best, -1.0) is Classification.OPTIMAL
        assert classify(self.a, ok, -1.0) is Classification.FEASIBLE_NON_OPTIMAL
        assert classify(self.a, bad, -1.0) is Classification.INFEASIBLE

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            objective_value(self.a, EbpAssignment((0, 0), (0, 0, 0, 0)))


class TestBruteForce:
    def test_published_optima(self):
        for name, value, count in [("A", -1.0, 1), ("B", -2.0, 1), ("C", -2.0, 11)]:
            best, optima = brute_force(builtin_instance(name))
            assert best == value
            assert len(optima) == count
            for a in optima:
                assert classify(builtin_instance(name), a, value) is Classification.OPTIMAL

    def test_instance_a_optimum(self):
        _, optima = brute_force(builtin_instance("A"))
        assert optima == (EbpAssignment((0, 0, 1), (0, 0, 1, 1)),)

    def test_instance_b_optimum(self):
        _, optima = brute_force(builtin_instance("B"))
        assert optima == (EbpAssignment((1, 1, 0), (1, 1, 1, 1, 0, 0)),)

    def test_matches_exhaustive_python(self):
        inst = builtin_instance("A")
        best, optima = brute_force(inst)
        seen = []
        for xz in product((0, 1), repeat=inst.num_trains):
            for yz in product((0, 1), repeat=inst.num_y):
                a = EbpAssignment(xz, yz)
                if is_feasible(inst, a):
                    seen.append((objective_value(inst, a), a))
        want = min(v for v, _ in seen)
        assert best == want
        assert set(optima) == {a for v, a in seen if v == want}

    def test_cap(self):
        trains = tuple(Train(1.0, 1.0, (g,)) for g in range(16))
        inst = EbpInstance("big", 16, 2, trains)
        with pytest.raises(ValueError, match="cap"):
            brute_force(inst)


class TestObjectivePolynomial:
    def test_layout_for_a(self):
        poly = objective_polynomial(builtin_instance("A"))
        want = Polynomial(
            {(0,): 1.0, (1,): 1.0, (2,): 1.0, (3,): -1.0, (4,): -1.0, (5,): -1.0, (6,): -1.0}
        )
        assert poly == want

    @pytest.mark.parametrize("name,lam", [("A", 8.0), ("B", 10.0), ("C", 12.0)])
    def test_default_lambda(self, name, lam):
        assert default_lambda(builtin_instance(name)) == lam


class TestPuboEncoding:
    @pytest.mark.parametrize("name,qubits", [("A", 7), ("B", 9), ("C", 11)])
    def test_qubit_count(self, name, qubits):
        enc = to_pubo(builtin_instance(name))
        assert enc.qubit_count == qubits
        assert len(enc.var_names) == qubits

    def test_var_names_for_a(self):
        enc = to_pubo(builtin_instance("A"))
        assert enc.var_names == ("x_0", "x_1", "x_2", "y_0_0", "y_1_1", "y_2_0", "y_2_1")

    def test_cubic_terms_present(self):
        assert to_pubo(builtin_instance("A")).poly.degree == 3

    def test_penalty_decomposes_into_violation_counts(self):
        inst = builtin_instance("A")
        lam_uni, lam_capa = 5.0, 9.0
        enc = to_pubo(inst, lam_uni=lam_uni, lam_capa=lam_capa)
        obj = objective_polynomial(inst)
        n, pairs = inst.num_trains, inst.y_pairs
        for z in range(1 << enc.qubit_count):
            bits = bits_of(z, enc.qubit_count)
            boarded = [0] * inst.num_groups
            carried = [0] * n
            for k, (i, j) in enumerate(pairs):
                boarded[j] += bits[n + k]
                carried[i] += bits[n + k]
            uni = sum(1 for b in boarded if b > 1)
            capa = 0
            for i in range(n):
                if bits[i] == 0:
                    capa += 1 if carried[i] >= 1 else 0
                else:
                    capa += 1 if carried[i] > inst.cmax else 0
            want = obj.evaluate(bits) + lam_uni * uni + lam_capa * capa
            assert enc.poly.evaluate(bits) == pytest.approx(want, abs=1e-9)

    def test_default_lambdas_recorded(self):
        enc = to_pubo(builtin_instance("B"))
        assert enc.lam_uni == enc.lam_capa == 10.0

    def test_project_reads_x_then_y(self):
        enc = to_pubo(builtin_instance("A"))
        z = (1 << 0) | (1 << 4)
        assert enc.project(z) == EbpAssignment((1, 0, 0), (0, 1, 0, 0))


class TestQuboEncoding:
    @pytest.mark.parametrize("name,qubits", [("A", 15), ("B", 17), ("C", 20)])
    def test_qubit_count(self, name, qubits):
        enc = to_qubo(builtin_instance(name))
        assert enc.qubit_count == qubits
        assert len(enc.var_names) == qubits

    def test_degree_at_most_two(self):
        for name in "ABC":
            assert to_qubo(builtin_instance(name)).poly.degree <= 2

    def test_var_names_for_a(self):
        enc = to_qubo(builtin_instance("A"))
        assert enc.var_names == (
            "x_0", "x_1", "x_2", "y_0_0", "y_1_1", "y_2_0", "y_2_1",
            "s_0", "s_1",
            "r_0_0", "r_0_1", "r_1_0", "r_1_1", "r_2_0", "r_2_1",
        )

    def test_single_eligible_groups_get_no_slack(self):
        # groups 1 and 2 can only board train 0; only group 0 needs a slack bit
        inst = EbpInstance(
            "X", 3, 2, (Train(1.0, 1.0, (0, 1, 2)), Train(1.0, 1.0, (0,)))
        )
        enc = to_qubo(inst)
        s_names = [v for v in enc.var_names if v.startswith("s_")]
        assert s_names == ["s_0"]

    def test_capacity_slack_width_tracks_cmax(self):
        inst = EbpInstance("X", 3, 3, (Train(1.0, 1.0, (0, 1, 2)),))
        enc = to_qubo(inst)
        r_names = [v for v in enc.var_names if v.startswith("r_")]
        assert r_names == ["r_0_0", "r_0_1"]
        assert enc.qubit_count == 1 + 3 + 0 + 2

    def test_min_over_slack_matches_feasibility(self):
        inst = EbpInstance("X", 3, 3, (Train(1.0, 1.0, (0, 1, 2)),))
        enc = to_qubo(inst)
        obj = objective_polynomial(inst)
        base = inst.num_trains + inst.num_y
        k = enc.qubit_count - base
        for zb in range(1 << base):
            pattern = bits_of(zb, base)
            best = min(
                enc.poly.evaluate(pattern + s) for s in product((0, 1), repeat=k)
            )
            a = enc.project(zb)
            if is_feasible(inst, a):
                assert best == pytest.approx(obj.evaluate(pattern), abs=1e-9)
            else:
                assert best > obj.evaluate(pattern) + 1.0 - 1e-9

    def test_project_drops_slack_bits(self):
        enc = to_qubo(builtin_instance("A"))
        z = (1 << 2) | (1 << 9) | (1 << 14)
        assert enc.project(z) == EbpAssignment((0, 0, 1), (0, 0, 0, 0))


class TestEncodeDispatcher:
    def test_routes_by_name(self):
        inst = builtin_instance("A")
        assert encode(inst, "pubo").kind == "pubo"
        assert encode(inst, "qubo").kind == "qubo"

    def test_unknown_formulation(self):
        with pytest.raises(ValueError, match="formulation"):
            encode(builtin_instance("A"), "ising")

    def test_nonpositive_lambda_rejected(self):
        inst = builtin_instance("A")
        with pytest.raises(ValueError, match="positive"):
            to_pubo(inst, lam_uni=0.0)
        with pytest.raises(ValueError, match="positive"):
            to_qubo(inst, lam_capa=-1.0)
