import numpy as np
import pytest

from lrle.errors import DomainError, NotNormalized, WrongShape
from lrle.measures import (
    CoefficientMatrix,
    bound_r,
    bound_w,
    bounds_report,
    check_projection_bound,
    concurrence,
    entanglement_entropy,
    entropy_from_concurrence,
    g_value,
)


def random_state(rng, D=2):
    X = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
    return X / np.linalg.norm(X)


class TestConcurrence:
    def test_bell(self):
        assert concurrence(np.eye(2) / np.sqrt(2)) == pytest.approx(1)

    def test_product(self):
        assert concurrence(np.diag([1.0, 0.0])) == 0

    def test_partial(self):
        assert concurrence(np.diag([np.sqrt(0.9), np.sqrt(0.1)])) == pytest.approx(0.6)

    def test_errors(self):
        with pytest.raises(NotNormalized):
            concurrence(np.eye(2))
        with pytest.raises(WrongShape):
            concurrence(np.eye(3) / np.sqrt(3))
        with pytest.raises(NotNormalized):
            CoefficientMatrix(np.ones((2, 2)))

    def test_accepts_wrapper(self):
        assert concurrence(CoefficientMatrix(np.eye(2) / np.sqrt(2))) == pytest.approx(1)


class TestEntropy:
    def test_bell_and_product(self):
        assert entanglement_entropy(np.eye(2) / np.sqrt(2)) == pytest.approx(1)
        assert entanglement_entropy(np.diag([1.0, 0.0])) == 0

    def test_matches_concurrence_formula(self, rng):
        worst = max(
            abs(entanglement_entropy(psi) - entropy_from_concurrence(concurrence(psi)))
            for psi in (random_state(rng) for _ in range(100))
        )
        assert worst < 1e-10

    def test_not_normalised(self):
        with pytest.raises(NotNormalized):
            entanglement_entropy(2 * np.eye(2))


class TestBounds:
    def test_ratio_limit(self):
        r = bounds_report(1 - 1e-6, 3)
        assert r.ratio == pytest.approx(2, abs=1e-3)

    def test_uniform_point(self):
        for D in (2, 3, 5):
            assert bound_w(1 / D, D) == pytest.approx(np.log2(D))

    def test_qubit_case_coincide(self):
        assert bound_w(0.75, 2) == pytest.approx(bound_r(0.75, 2), abs=1e-15)
        assert bound_w(0.75, 2) == pytest.approx(0.8112781244591328)

    def test_domain(self):
        with pytest.raises(DomainError):
            bound_w(1.0, 3)
        with pytest.raises(DomainError):
            bound_r(0.2, 3)
        with pytest.raises(DomainError):
            bound_w(0.5, 1)

    def test_ratio_finite_on_grid(self):
        for D in (3, 4):
            P = np.linspace(1 / D, 1 - 1e-9, 2000)
            ratios = [bound_w(p, D) / bound_r(p, D) for p in P]
            assert np.all(np.isfinite(ratios))
            assert max(ratios) <= g_value(D) + 1e-12

    def test_g_at_least_endpoint(self):
        assert g_value(3) >= 2


class TestProjectionBound:
    def test_no_violations(self):
        rep = check_projection_bound(3, samples=10**4, seed=0)
        assert rep.violations == 0
        assert rep.max_ratio <= rep.f_value

    def test_report_serialisable(self):
        import json

        json.dumps(check_projection_bound(4, samples=50, seed=1).to_dict())

    def test_rank_two_state(self, rng):
        # a rank-2 state is its own projection: p E <= p g C reduces to E <= g C
        psi = np.zeros((3, 3), complex)
        psi[:2, :2] = random_state(rng)
        C = 2 * np.prod(np.linalg.svd(psi, compute_uv=False)[:2])
        E = entanglement_entropy(psi)
        assert E <= g_value(3) * C

    def test_maximally_mixed(self):
        psi = np.eye(3) / np.sqrt(3)
        s2 = np.full(3, 1 / 3)
        pt = s2[0] + s2[1]
        ratio = entanglement_entropy(psi) / (2 * np.sqrt(s2[0] * s2[1]) / pt)
        assert np.isfinite(ratio)
        assert ratio <= g_value(3)

    def test_requires_qutrits(self):
        with pytest.raises(DomainError):
            check_projection_bound(2)
