import itertools
import math

import numpy as np
import pytest

from conftest import random_noise
from entdist.distribution import BellStateId, bell_state, run_distribution
from entdist.elements import NoiseAngles, NoiseParams
from entdist.protocols import (
    MeasurementBasis,
    baseline_direct,
    bbm92_records,
    bbm92_run,
    joint_outcome_distribution,
    measure,
    qber_vs_theta_sweep,
    qss_run,
    reconciliation_bit,
)
from entdist.qstate import BasisLabel, H, PureState, V
from entdist.rng import TrialRng

S = 1 / math.sqrt(2)
Z, X, Y = MeasurementBasis.Z, MeasurementBasis.X, MeasurementBasis.Y


def pol_state(amp_h, amp_v, path=0):
    amps = {}
    if amp_h:
        amps[(BasisLabel(H, None, path),)] = amp_h
    if amp_v:
        amps[(BasisLabel(V, None, path),)] = amp_v
    return PureState(1, amps)


def three_sigma(p, n):
    return 3 * math.sqrt(p * (1 - p) / n)


class TestMeasure:
    def test_eigenstate_is_deterministic(self):
        state = pol_state(1.0, 0.0)
        for trial in range(20):
            bit, collapsed = measure(state, 0, Z, TrialRng(1, trial))
            assert bit == 0
            assert collapsed == state

    def test_born_rule_frequencies(self):
        state = pol_state(0.6, 0.8)
        hits = sum(
            measure(state, 0, Z, TrialRng(5, t))[0] == 0 for t in range(100000)
        )
        assert abs(hits / 100000 - 0.36) < three_sigma(0.36, 100000)

    def test_bell_pair_anticorrelated_in_z(self):
        psi = bell_state(BellStateId.PSI_PLUS, 0, 1)
        first_bits = []
        for trial in range(200):
            stream = TrialRng(9, trial)
            bit_a, collapsed = measure(psi, 0, Z, stream)
            bit_b, _ = measure(collapsed, 1, Z, stream)
            assert bit_b == bit_a ^ 1
            first_bits.append(bit_a)
        assert 0 < sum(first_bits) < 200  # both outcomes occur

    def test_collapse_is_renormalized(self):
        state = pol_state(0.6, 0.8)
        _, collapsed = measure(state, 0, X, TrialRng(2, 0))
        assert collapsed.norm_squared() == pytest.approx(1.0, abs=1e-12)

    def test_numpy_generator_also_works(self):
        bit, _ = measure(pol_state(1.0, 0.0), 0, Z, np.random.default_rng(0))
        assert bit == 0


class TestJointDistribution:
    def test_matches_sequential_measurement_probabilities(self, rand):
        """Joint table equals the product of sequential Born factors."""
        from entdist.protocols import _project_polarization

        for _ in range(20):
            amps = rand.normal(size=4) + 1j * rand.normal(size=4)
            amps /= np.linalg.norm(amps)
            labels = [
                (BasisLabel(p0, None, 0), BasisLabel(p1, None, 1))
                for p0 in (H, V)
                for p1 in (H, V)
            ]
            state = PureState(2, dict(zip(labels, amps)))
            for ba, bb in itertools.product((Z, X, Y), repeat=2):
                table = joint_outcome_distribution(state, [ba, bb])
                assert table.sum() == pytest.approx(1.0, abs=1e-12)
                for b0 in (0, 1):
                    p0, partial = _project_polarization(state, 0, ba.vectors()[b0])
                    if p0 == 0:
                        continue
                    scale = 1 / math.sqrt(p0)
                    collapsed = PureState(
                        2, {k: v * scale for k, v in partial.items()}
                    )
                    for b1 in (0, 1):
                        p1, _ = _project_polarization(collapsed, 1, bb.vectors()[b1])
                        assert table[b0 * 2 + b1] == pytest.approx(
                            p0 * p1, abs=1e-12
                        )

    def test_bell_state_correlations(self):
        psi = bell_state(BellStateId.PSI_PLUS, 0, 1)
        phi = bell_state(BellStateId.PHI_PLUS, 0, 1)
        # psi+ anticorrelated in Z, correlated in X; phi+ correlated in both
        assert joint_outcome_distribution(psi, [Z, Z]) == pytest.approx([0, 0.5, 0.5, 0])
        assert joint_outcome_distribution(psi, [X, X]) == pytest.approx([0.5, 0, 0, 0.5])
        assert joint_outcome_distribution(phi, [Z, Z]) == pytest.approx([0.5, 0, 0, 0.5])
        assert joint_outcome_distribution(phi, [X, X]) == pytest.approx([0.5, 0, 0, 0.5])


class TestReconciliation:
    def test_known_cases(self):
        assert reconciliation_bit((1, 2), Z, 1) == 1  # phi+, no flip
        assert reconciliation_bit((1, 1), Z, 1) == 0  # psi+, Z flips
        assert reconciliation_bit((1, 1), X, 0) == 0  # psi+ X-correlated
        assert reconciliation_bit((1, 1), X, 1) == 1

    def test_unknown_pattern(self):
        with pytest.raises(ValueError, match="unknown port pattern"):
            reconciliation_bit((1, 3), Z, 0)

    def test_rule_agrees_with_measurement_oracle(self):
        """Every nonzero-probability joint outcome must reconcile to equal
        key bits, for every pattern and basis."""
        from entdist.distribution import TWO_PARTY_REFERENCES

        for slots, bell in TWO_PARTY_REFERENCES.items():
            state = bell_state(bell, 0, 1)
            for basis in (Z, X):
                table = joint_outcome_distribution(state, [basis, basis])
                for idx, prob in enumerate(table):
                    if prob == 0:
                        continue
                    bit_a, bit_b = idx >> 1, idx & 1
                    assert bit_a == reconciliation_bit(slots, basis, bit_b)


class TestBbm92:
    def test_zero_qber_for_random_noise(self, rand):
        for _ in range(5):
            stats = bbm92_run(20000, random_noise(rand), random_noise(rand), seed=17)
            assert stats.qber == 0.0
            assert stats.n_errors == 0
            assert abs(stats.sift_rate - 0.5) < three_sigma(0.5, 20000)

    def test_deterministic_given_seed(self, rand):
        pa, pb = random_noise(rand), random_noise(rand)
        s1 = bbm92_run(5000, pa, pb, seed=23)
        s2 = bbm92_run(5000, pa, pb, seed=23)
        assert s1 == s2
        assert bbm92_records(5000, pa, pb, seed=23) == bbm92_records(5000, pa, pb, seed=23)

    def test_seed_changes_outcomes(self, rand):
        pa, pb = random_noise(rand), random_noise(rand)
        assert bbm92_run(5000, pa, pb, 1) != bbm92_run(5000, pa, pb, 2)

    def test_records_consistent_with_stats(self, rand):
        pa, pb = random_noise(rand), random_noise(rand)
        stats = bbm92_run(3000, pa, pb, seed=5)
        records = bbm92_records(3000, pa, pb, seed=5)
        assert len(records) == 3000
        assert sum(r.sifted for r in records) == stats.n_sifted
        assert sum(bool(r.error) for r in records) == stats.n_errors

    def test_aggregation_is_order_independent(self, rand):
        records = bbm92_records(2000, random_noise(rand), random_noise(rand), seed=5)
        shuffled = list(records)
        np.random.default_rng(0).shuffle(shuffled)
        assert sum(r.sifted for r in shuffled) == sum(r.sifted for r in records)

    def test_pattern_frequencies_follow_distribution(self, rand):
        pa, pb = random_noise(rand), random_noise(rand)
        outcomes = run_distribution(pa, pb)
        records = bbm92_records(50000, pa, pb, seed=3)
        counts = {o.slots: 0 for o in outcomes}
        for r in records:
            counts[r.pattern] += 1
        for o in outcomes:
            if o.probability > 0.01:
                rate = counts[o.slots] / 50000
                assert abs(rate - o.probability) < three_sigma(o.probability, 50000)

    def test_rejects_nonpositive_pairs(self):
        with pytest.raises(ValueError, match="> 0"):
            bbm92_run(0, NoiseParams.identity(), NoiseParams.identity(), 0)


class TestQss:
    def test_zero_qber_xy(self, rand):
        for _ in range(3):
            noise = [random_noise(rand) for _ in range(3)]
            stats = qss_run(10000, noise, seed=31)
            assert stats.qber == 0.0
            assert abs(stats.sift_rate - 0.5) < three_sigma(0.5, 10000)

    def test_only_valid_combinations_sifted(self, rand):
        noise = [random_noise(rand) for _ in range(3)]
        stats = qss_run(5000, noise, seed=7)
        kept = {"XXX", "XYY", "YXY", "YYX"}
        for combo, count in stats.sifted_by_basis.items():
            if combo not in kept:
                assert count == 0
        assert sum(stats.sifted_by_basis[c] for c in kept) == stats.n_sifted

    def test_zy_mode_reports_zzz_correlation(self, rand):
        noise = [random_noise(rand) for _ in range(3)]
        stats = qss_run(8000, noise, seed=11, basis_pair="zy")
        assert stats.qber == 0.0
        assert stats.n_sifted == stats.sifted_by_basis["ZZZ"]
        assert abs(stats.sift_rate - 1 / 8) < three_sigma(1 / 8, 8000)

    def test_determinism(self, rand):
        noise = [random_noise(rand) for _ in range(3)]
        assert qss_run(2000, noise, seed=2) == qss_run(2000, noise, seed=2)

    def test_validates_inputs(self):
        with pytest.raises(ValueError, match="3 noise"):
            qss_run(10, [NoiseParams.identity()] * 2, 0)
        with pytest.raises(ValueError, match="basis_pair"):
            qss_run(10, [NoiseParams.identity()] * 3, 0, basis_pair="xz")


class TestBaseline:
    def test_identity_noise_zero_qber(self):
        stats = baseline_direct(20000, NoiseParams.identity(), NoiseParams.identity(), 1)
        assert stats.qber == 0.0

    def test_quarter_rotation_z_error_half(self):
        stats = baseline_direct(
            100000, NoiseAngles(math.pi / 4).to_params(), NoiseParams.identity(), 13
        )
        z_rate = stats.errors_by_basis["Z"] / stats.sifted_by_basis["Z"]
        assert abs(z_rate - 0.5) < three_sigma(0.5, stats.sifted_by_basis["Z"])

    def test_z_error_matches_sin_squared(self):
        theta = math.pi / 8
        stats = baseline_direct(
            100000, NoiseAngles(theta).to_params(), NoiseParams.identity(), 29
        )
        expected = math.sin(theta) ** 2
        z_rate = stats.errors_by_basis["Z"] / stats.sifted_by_basis["Z"]
        assert abs(z_rate - expected) < three_sigma(expected, stats.sifted_by_basis["Z"])

    def test_scheme_never_worse_than_baseline(self, rand):
        for _ in range(5):
            pa, pb = random_noise(rand), random_noise(rand)
            scheme = bbm92_run(5000, pa, pb, 3)
            base = baseline_direct(5000, pa, pb, 3)
            assert scheme.qber <= base.qber


class TestSweep:
    def test_sweep_rows(self):
        grid = [
            (NoiseAngles(t), NoiseAngles(0.0))
            for t in (0.0, math.pi / 8, math.pi / 4)
        ]
        rows = qber_vs_theta_sweep(grid, n_pairs=4000, seed=1)
        assert len(rows) == 3
        for row, (ang_a, _) in zip(rows, grid):
            assert row.theta_a == ang_a.theta
            assert row.scheme_qber == 0.0
            assert row.success_prob == pytest.approx(1.0, abs=1e-12)
        assert rows[0].baseline_qber == 0.0
        assert rows[1].baseline_qber < rows[2].baseline_qber

    def test_baseline_follows_sin_squared_curve(self):
        """At phi = 0 both sifted bases err at rate sin^2(theta), so the
        overall baseline QBER traces the analytic curve."""
        thetas = [0.0, 0.3, 0.6, 0.9, 1.2]
        grid = [(NoiseAngles(t), NoiseAngles(0.0)) for t in thetas]
        rows = qber_vs_theta_sweep(grid, n_pairs=20000, seed=8)
        for row, theta in zip(rows, thetas):
            expected = math.sin(theta) ** 2
            if expected == 0.0:
                assert row.baseline_qber == 0.0
            else:
                # sifted count is ~10000; 9000 makes the 3-sigma width conservative
                assert abs(row.baseline_qber - expected) < three_sigma(expected, 9000)

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            qber_vs_theta_sweep([], 100, 0)
