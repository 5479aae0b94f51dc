"""Incremental pseudoinverse tests against batch SVD oracles."""

import time

import numpy as np
import pytest

from surrhmc import OnlineLeastSquares


def batch_solution(rows, targets):
    """Oracle: minimum-norm least squares via an explicit SVD pseudoinverse."""
    return np.linalg.pinv(np.asarray(rows)) @ np.asarray(targets)


def batch_auxiliaries(rows):
    m = np.asarray(rows).shape[1]
    pinv = np.linalg.pinv(rows)
    phi = np.eye(m) - rows.T @ pinv.T
    theta = pinv @ pinv.T
    return phi, theta


class TestInitialization:
    def test_empty_state_convention(self):
        state = OnlineLeastSquares(4)
        assert np.array_equal(state.weights, np.zeros(4))
        assert np.array_equal(state.phi, np.eye(4))
        assert np.array_equal(state.theta, np.zeros((4, 4)))
        assert state.count == 0

    def test_identity_batch(self):
        targets = np.array([1.0, -2.0, 3.0])
        state = OnlineLeastSquares.from_batch(np.eye(3), targets)
        assert np.allclose(state.weights, targets, atol=1e-12)
        assert np.allclose(state.phi, np.zeros((3, 3)), atol=1e-12)
        assert np.allclose(state.theta, np.eye(3), atol=1e-12)

    def test_random_batch_matches_svd_definitions(self):
        rng = np.random.default_rng(0)
        rows = rng.normal(size=(50, 8))
        targets = rng.normal(size=50)
        state = OnlineLeastSquares.from_batch(rows, targets)
        phi, theta = batch_auxiliaries(rows)
        assert np.allclose(state.weights, batch_solution(rows, targets), atol=1e-10)
        assert np.allclose(state.phi, phi, atol=1e-10)
        assert np.allclose(state.theta, theta, atol=1e-10)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            OnlineLeastSquares.from_batch(np.array([[np.nan, 1.0]]), np.array([1.0]))


class TestUpdate:
    def test_matches_batch_at_every_step(self):
        rng = np.random.default_rng(1)
        m = 6
        state = OnlineLeastSquares(m)
        rows, targets = [], []
        for k in range(40):
            h = rng.normal(size=m)
            t = rng.normal()
            rows.append(h)
            targets.append(t)
            state.update(h, t)
            expected = batch_solution(np.array(rows), np.array(targets))
            scale = max(np.linalg.norm(expected), 1.0)
            assert np.linalg.norm(state.weights - expected) / scale < 1e-8, f"k={k}"

    def test_duplicate_row_rank_preserving_branch(self):
        rng = np.random.default_rng(2)
        m = 5
        state = OnlineLeastSquares(m)
        rows, targets = [], []
        for _ in range(4):
            h, t = rng.normal(size=m), rng.normal()
            rows.append(h), targets.append(t)
            state.update(h, t)
        # Exact duplicate with a conflicting target exercises case (i).
        dup, t2 = rows[1].copy(), rng.normal()
        rows.append(dup), targets.append(t2)
        state.update(dup, t2)
        expected = batch_solution(np.array(rows), np.array(targets))
        assert np.linalg.norm(state.weights - expected) < 1e-8

    def test_zero_row_is_a_no_op(self):
        rng = np.random.default_rng(3)
        state = OnlineLeastSquares(4)
        for _ in range(3):
            state.update(rng.normal(size=4), rng.normal())
        before = state.weights
        state.update(np.zeros(4), 7.0)
        assert np.array_equal(state.weights, before)

    def test_fresh_direction_interpolates_exactly(self):
        rng = np.random.default_rng(4)
        m = 6
        state = OnlineLeastSquares(m)
        for _ in range(3):
            state.update(rng.normal(size=m), rng.normal())
        h = rng.normal(size=m)
        t = rng.normal()
        state.update(h, t)
        # A rank-growing row is fit exactly by the updated estimator.
        assert abs(float(h @ state.weights) - t) < 1e-10

    def test_consistent_dependent_row_keeps_residual_zero(self):
        rng = np.random.default_rng(5)
        m = 5
        state = OnlineLeastSquares(m)
        rows = rng.normal(size=(3, m))
        for h in rows:
            state.update(h, rng.normal())
        # Replay a row with the target the estimator already assigns to it:
        # the update must not move anything.
        h = rows[0]
        t = float(h @ state.weights)
        state.update(h, t)
        assert abs(float(h @ state.weights) - t) < 1e-10

    def test_mixed_branch_sequences_match_batch(self):
        # Interleave fresh rows, duplicates and zero rows in several orders.
        rng = np.random.default_rng(6)
        m = 6
        for trial in range(20):
            state = OnlineLeastSquares(m)
            rows, targets = [], []
            for k in range(30):
                draw = rng.uniform()
                if draw < 0.2 and rows:
                    h = rows[int(rng.integers(len(rows)))].copy()
                elif draw < 0.3:
                    h = np.zeros(m)
                else:
                    h = rng.normal(size=m)
                t = rng.normal()
                rows.append(h), targets.append(t)
                state.update(h, t)
            expected = batch_solution(np.array(rows), np.array(targets))
            scale = max(np.linalg.norm(expected), 1.0)
            assert np.linalg.norm(state.weights - expected) / scale < 1e-8


class TestAuxiliaryInvariants:
    @staticmethod
    def _run_updates(state, rng, k):
        for _ in range(k):
            state.update(rng.normal(size=state.n_features), rng.normal())
        return state

    def test_symmetry_and_psd(self):
        rng = np.random.default_rng(7)
        state = self._run_updates(OnlineLeastSquares(6), rng, 50)
        assert np.max(np.abs(state.phi - state.phi.T)) < 1e-8
        assert np.max(np.abs(state.theta - state.theta.T)) < 1e-8
        assert np.linalg.eigvalsh(state.theta).min() > -1e-8

    def test_projector_after_many_updates(self):
        rng = np.random.default_rng(8)
        state = self._run_updates(OnlineLeastSquares(6), rng, 1000)
        assert state.projector_residual() <= 1e-6

    def test_drift_rebuild_restores_projector(self):
        rng = np.random.default_rng(9)
        state = OnlineLeastSquares(5, recheck_interval=10)
        self._run_updates(state, rng, 9)
        # Corrupt the projector past tolerance; the scheduled recheck at the
        # tenth update must rebuild the state from the retained rows.
        state._phi = state._phi + 1e-3
        state.update(rng.normal(size=5), rng.normal())
        assert state.projector_residual() < 1e-10
        rows = np.array(state._rows)
        targets = np.array(state._targets)
        assert np.allclose(state.weights, batch_solution(rows, targets), atol=1e-8)

    def test_update_cost_independent_of_count(self):
        # Coarse wall-clock check: the per-update cost at k ~ 10^4 stays
        # within 2x of the cost at k ~ 10^2.
        rng = np.random.default_rng(10)
        m = 24
        state = OnlineLeastSquares(m, recheck_interval=0)

        def median_update_time(n_updates=200):
            times = []
            for _ in range(n_updates):
                h = rng.normal(size=m)
                t = rng.normal()
                tic = time.perf_counter()
                state.update(h, t)
                times.append(time.perf_counter() - tic)
            return np.median(times)

        self._run_updates(state, rng, 100)
        early = median_update_time()
        self._run_updates(state, rng, 10_000 - state.count)
        late = median_update_time()
        assert late < 2.0 * max(early, 1e-7), (early, late)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(11)
        state = OnlineLeastSquares(4)
        for _ in range(12):
            state.update(rng.normal(size=4), rng.normal())
        path = tmp_path / "state.json"
        state.save(path)
        back = OnlineLeastSquares.load(path)
        assert np.array_equal(back.weights, state.weights)
        assert np.array_equal(back.phi, state.phi)
        assert np.array_equal(back.theta, state.theta)
        assert back.count == state.count
        # Resumed state keeps updating correctly (rows were retained).
        h, t = rng.normal(size=4), rng.normal()
        state.update(h, t)
        back.update(h, t)
        assert np.allclose(back.weights, state.weights, atol=1e-12)
