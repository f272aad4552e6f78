import itertools
import math

import numpy as np
import pytest

from lrle import catalog as cat
from lrle.errors import BudgetExceeded, CriterionViolated
from lrle.le import (
    CSV_HEADER,
    build_projector_chain,
    check_factor_unitarity,
    choose_q,
    curve_to_csv,
    estimate_decay,
    factor_sums,
    le_curve,
    le_fixed_basis,
    le_monte_carlo,
    optimize_basis,
)
from lrle.mps import BasisRotation, BoundaryIsometry, MPSTensor, rotate_physical_basis

import oracles

EX2_LIMIT = 1.2247448713915883  # enumerated raw_sum of Example 2, constant in N


@pytest.fixture(scope="module")
def ghz_rotated(ghz):
    return rotate_physical_basis(ghz.tensor, BasisRotation(cat.HADAMARD))


class TestProjectorChain:
    def test_example2_single_step(self, example2):
        chain = build_projector_chain(example2.tensor, example2.suggested_P, [1])
        assert chain.alive
        assert chain.factors[0] == pytest.approx(0.5)
        assert chain.factors == pytest.approx(oracles.chain_factors(example2.tensor.matrices, example2.suggested_P.M, [1]))
        M = chain.isometries[0]
        assert np.allclose(M.conj().T @ M, np.eye(2))

    def test_unitary_family_factors(self):
        entry = cat.make_unitary_family(3, 3, seed=2)
        A = entry.tensor.matrices
        alpha2 = np.array([np.linalg.norm(M) ** 2 / 3 for M in A])
        outcomes = [0, 2, 1, 1]
        chain = build_projector_chain(entry.tensor, entry.suggested_P, outcomes)
        assert chain.factors == pytest.approx(alpha2[outcomes], abs=1e-12)

    def test_gamma_recursion(self, example2):
        # sum over the last outcome of |gamma|^2 reproduces the parent's |gamma|^2
        P = example2.suggested_P
        parent = build_projector_chain(example2.tensor, P, [0, 1]).gammas[-1]
        kids = [build_projector_chain(example2.tensor, P, [0, 1, i]).gammas[-1] for i in range(3)]
        assert sum(g**2 for g in kids) == pytest.approx(parent**2)

    def test_product_tensor_factor_vanishes(self, product):
        chain = build_projector_chain(product.tensor, product.suggested_P, [0, 1])
        assert not chain.alive or chain.factors[0] == 0

    def test_example2_unitarity_everywhere(self, example2):
        for outcomes in itertools.product(range(3), repeat=6):
            assert all(check_factor_unitarity(example2.tensor, example2.suggested_P, outcomes))

    def test_random_tensor_breaks_unitarity(self):
        entry = cat.make_random_canonical(2, 3, seed=0)
        flags = [
            all(check_factor_unitarity(entry.tensor, entry.suggested_P, o))
            for o in itertools.product(range(2), repeat=3)
        ]
        assert not all(flags)

    def test_bond_dimension_one(self):
        t = MPSTensor(np.array([[[1.0]], [[1.0]]]) / np.sqrt(2))
        assert check_factor_unitarity(t, np.ones((1, 2)), [0, 1]) == [True, True]


@pytest.mark.parametrize("name", ["example1", "example2", "ghz", "product", "aklt", "d3_block", "random"])
def test_factor_bound(name):
    entry = cat.get_entry(name)
    P = entry.suggested_P or BoundaryIsometry.embed(entry.tensor.D)
    assert factor_sums(entry.tensor, P, 6).max() <= 1 + 1e-9


class TestEnumeration:
    def test_ghz_rotated(self, ghz_rotated):
        P = BoundaryIsometry.embed(2)
        r = le_fixed_basis(ghz_rotated, P, P, 8)
        assert r.normalized_le == pytest.approx(1, abs=1e-12)
        assert r.norm_sq == pytest.approx(2)
        assert r.branches_visited == 256

    def test_product_zero(self, product):
        P = BoundaryIsometry.embed(2)
        for N in (1, 4, 9):
            assert le_fixed_basis(product.tensor, P, P, N).raw_sum < 1e-14

    def test_example2_converged(self, example2):
        r10 = le_fixed_basis(example2.tensor, example2.suggested_P, example2.suggested_Q, 10)
        r11 = le_fixed_basis(example2.tensor, example2.suggested_P, example2.suggested_Q, 11)
        assert abs(r10.raw_sum - r11.raw_sum) < 1e-6
        assert r10.raw_sum == pytest.approx(EX2_LIMIT, abs=1e-12)
        assert r10.normalized_le <= 1 + 1e-12

    @pytest.mark.parametrize("N", [1, 2, 5])
    def test_matches_state_vector(self, example2, N):
        P, Q = example2.suggested_P.M, example2.suggested_Q.M
        raw, norm = oracles.localizable_entanglement(example2.tensor.matrices, P, Q, N)
        r = le_fixed_basis(example2.tensor, P, Q, N)
        assert r.raw_sum == pytest.approx(raw, abs=1e-12)
        assert r.norm_sq == pytest.approx(norm, abs=1e-12)

    def test_pruning_bounds(self, example2):
        P, Q = example2.suggested_P, example2.suggested_Q
        exact = le_fixed_basis(example2.tensor, P, Q, 7)
        assert exact.pruned_mass == 0
        pruned = le_fixed_basis(example2.tensor, P, Q, 7, prune_eps=1e-3)
        assert pruned.pruned_mass > 0
        assert pruned.raw_sum <= exact.raw_sum + 1e-12
        assert exact.raw_sum - pruned.raw_sum <= pruned.pruned_mass + 1e-12

    def test_budget(self, example2):
        with pytest.raises(BudgetExceeded):
            le_fixed_basis(example2.tensor, example2.suggested_P, example2.suggested_Q, 12, max_branches=1000)

    def test_thread_count_does_not_change_bits(self, example2, monkeypatch):
        import lrle.le as le

        monkeypatch.setattr(le, "CHUNK_BRANCHES", 64)
        P, Q = example2.suggested_P, example2.suggested_Q
        a = le_fixed_basis(example2.tensor, P, Q, 7, threads=1)
        b = le_fixed_basis(example2.tensor, P, Q, 7, threads=4)
        assert a == b

    def test_csv(self, example2):
        curve = le_curve(example2.tensor, example2.suggested_P, example2.suggested_Q, [2, 3])
        text = curve_to_csv(curve)
        lines = text.splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert lines[1].startswith("2,")
        assert float(lines[1].split(",")[1]) == curve[0].raw_sum

    def test_monotone_for_criterion_tensors(self, d3_block):
        P = d3_block.suggested_P
        vals = [r.raw_sum for r in le_curve(d3_block.tensor, P, P, range(1, 8))]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


class TestMonteCarlo:
    def test_example2(self, example2):
        exact = le_fixed_basis(example2.tensor, example2.suggested_P, example2.suggested_Q, 8).raw_sum
        mc = le_monte_carlo(example2.tensor, example2.suggested_P, example2.suggested_Q, 8, 10**5, seed=0)
        assert abs(mc.estimate - exact) < 3 * mc.stderr
        assert mc.stderr < 0.05 * exact

    def test_product(self, product):
        P = BoundaryIsometry.embed(2)
        mc = le_monte_carlo(product.tensor, P, P, 5, 1000, seed=0)
        assert mc.estimate < 1e-14 and mc.stderr < 1e-14

    def test_ghz_rotated_constant_weights(self, ghz_rotated):
        P = BoundaryIsometry.embed(2)
        mc = le_monte_carlo(ghz_rotated, P, P, 6, 500, seed=3)
        assert mc.estimate == pytest.approx(2.0)
        assert mc.stderr < 1e-12

    def test_unbiased(self, example2):
        P, Q = example2.suggested_P, example2.suggested_Q
        exact = le_fixed_basis(example2.tensor, P, Q, 6).raw_sum
        runs = [le_monte_carlo(example2.tensor, P, Q, 6, 2000, seed=s) for s in range(50)]
        mean = np.mean([r.estimate for r in runs])
        combined = math.sqrt(sum(r.stderr**2 for r in runs)) / len(runs)
        assert abs(mean - exact) < 3 * combined

    def test_seeded(self, example2):
        a = le_monte_carlo(example2.tensor, example2.suggested_P, example2.suggested_Q, 5, 300, seed=9)
        b = le_monte_carlo(example2.tensor, example2.suggested_P, example2.suggested_Q, 5, 300, seed=9)
        assert a == b


class TestOptimizeBasis:
    def test_ghz(self, ghz):
        P = BoundaryIsometry.embed(2)
        assert le_fixed_basis(ghz.tensor, P, P, 8).raw_sum < 1e-14
        rot, res = optimize_basis(ghz.tensor, P, P, 8)
        assert res.normalized_le == pytest.approx(1, abs=1e-6)
        assert np.allclose(np.abs(rot.U), 1 / np.sqrt(2), atol=1e-4)

    def test_example2_identity_is_local_optimum(self, example2):
        # with the hand-picked Q the identity is not stationary; with the
        # dominant-frame Q it is
        P = example2.suggested_P
        Q = choose_q(example2.tensor, P, 5)
        base = le_fixed_basis(example2.tensor, P, Q, 5).raw_sum
        rot, res = optimize_basis(example2.tensor, P, Q, 5, restarts=1)
        assert res.raw_sum == pytest.approx(base, rel=1e-9)
        assert base == pytest.approx(math.sqrt(2), rel=1e-12)

    def test_trivial_group(self):
        t = MPSTensor(np.eye(2)[None])
        P = BoundaryIsometry.embed(2)
        rot, res = optimize_basis(t, P, P, 3)
        assert np.array_equal(rot.U, np.eye(1))
        assert res.raw_sum == pytest.approx(2)


class TestChooseQ:
    def test_example2(self, example2):
        P = example2.suggested_P
        Q = choose_q(example2.tensor, P, 8)
        ours = le_fixed_basis(example2.tensor, P, Q, 8).raw_sum
        theirs = le_fixed_basis(example2.tensor, P, example2.suggested_Q, 8).raw_sum
        assert ours >= 0.5 * theirs

    def test_example1(self, example1):
        Q = choose_q(example1.tensor, example1.suggested_P, 6)
        assert le_fixed_basis(example1.tensor, example1.suggested_P, Q, 6).raw_sum > 1e-3

    def test_ghz_recovers_embedding(self, ghz_rotated):
        P = BoundaryIsometry.embed(2)
        Q = choose_q(ghz_rotated, P, 6).M
        # same column space as the embedding, i.e. a unitary 2x2
        assert np.allclose(Q.conj().T @ Q, np.eye(2))
        assert abs(abs(np.linalg.det(Q)) - 1) < 1e-12

    def test_violation(self):
        entry = cat.make_random_canonical(2, 3, seed=0)
        with pytest.raises(CriterionViolated):
            choose_q(entry.tensor, entry.suggested_P, 4)


class TestDecay:
    def test_random_d2_decays(self):
        entry = cat.make_random_canonical(2, 2, seed=0)
        est = estimate_decay(entry.tensor)
        assert est.delta_star > 0
        assert est.fit_r2 > 0.99
        assert est.fit_rate < 0
        assert est.consistent

    def test_example2_no_contraction(self, example2):
        est = estimate_decay(example2.tensor, s_max=6)
        assert est.delta_star == 0 and est.s_star == 0
        assert max(est.deltas) < 1e-6

    def test_unitary_family_no_contraction(self):
        est = estimate_decay(cat.make_unitary_family(2, 2, seed=1).tensor, s_max=4)
        assert est.delta_star == 0

    def test_product_vanishes(self, product):
        est = estimate_decay(product.tensor, s_max=3)
        assert est.fit_rate == -math.inf
        assert est.delta_star == pytest.approx(1)
        assert est.consistent
