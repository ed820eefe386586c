import itertools

import numpy as np
import pytest

from mbqc_deutsch import cluster, qcore, tomography
from mbqc_deutsch.cluster import NoiseSpec
from mbqc_deutsch.errors import ConfigurationError, EstimationError
from mbqc_deutsch.tomography import CountTable

# +1 eigenvector first, written out independently of the package
EIGEN = {
    "X": (np.array([1, 1]) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2)),
    "Y": (np.array([1, 1j]) / np.sqrt(2), np.array([1, -1j]) / np.sqrt(2)),
    "Z": (np.array([1, 0]), np.array([0, 1])),
}


def oracle_probability(rho, setting, outcome, projector):
    P = projector(*(EIGEN[a][int(b)] for a, b in zip(setting, outcome)))
    return np.trace(P @ rho).real


class TestPlan:
    def test_four_qubits(self, plan4):
        assert (plan4.n_settings, plan4.n_outcomes, plan4.n_projectors) == (81, 16, 1296)

    def test_two_qubits(self, plan2):
        assert (plan2.n_settings, plan2.n_outcomes, plan2.n_projectors) == (9, 4, 36)

    @pytest.mark.parametrize("n", [2, 4])
    def test_each_projector_once(self, n):
        plan = tomography.settings_plan(n)
        labels = [plan.projector_label(s, o) for s in plan.settings for o in plan.outcomes]
        assert len(labels) == len(set(labels)) == 6**n
        assert set(labels) == {"".join(t) for t in itertools.product("01+-RL", repeat=n)}

    def test_qubit_one_first(self, plan2):
        assert plan2.settings[:3] == ("XX", "XY", "XZ")
        assert plan2.projector_label("XZ", "10") == "-0"
        assert plan2.projector_label("YY", "01") == "RL"

    @pytest.mark.parametrize("n", [1, 3, 5])
    def test_unsupported(self, n):
        with pytest.raises(ConfigurationError):
            tomography.settings_plan(n)

    def test_projector_kets_match_oracle(self, plan2, projector):
        kets = plan2.projector_kets()
        k = 0
        for s in plan2.settings:
            for o in plan2.outcomes:
                expected = projector(*(EIGEN[a][int(b)] for a, b in zip(s, o)))
                np.testing.assert_allclose(np.outer(kets[k], kets[k].conj()), expected, atol=1e-15)
                k += 1

    @pytest.mark.parametrize("n", [2, 4])
    def test_completeness(self, n, rng):
        plan = tomography.settings_plan(n)
        kets = plan.projector_kets()
        for _ in range(20):
            rho = qcore.random_density(n, rng)
            raw = np.einsum("ki,ij,kj->k", kets.conj(), rho, kets).real
            np.testing.assert_allclose(raw.reshape(plan.n_settings, -1).sum(axis=1), 1.0, atol=1e-12)


class TestCounts:
    def test_basis_state_zzzz(self, plan4):
        rho = qcore.density(qcore.ket("0000"))
        table = tomography.simulate_counts(rho, plan4, 300, rng=1)
        row = table.counts[plan4.settings.index("ZZZZ")]
        assert row[0] == 300 and row[1:].sum() == 0

    def test_multinomial_rows_sum_to_shots(self, plan4, phi_c):
        table = tomography.simulate_counts(qcore.density(phi_c), plan4, 123, rng=2)
        assert np.all(table.counts.sum(axis=1) == 123)
        assert table.mode == "multinomial" and table.seed == 2

    def test_poisson_mode(self, plan2):
        table = tomography.simulate_counts(np.eye(4) / 4, plan2, 1000, rng=3, mode="poisson")
        assert table.mode == "poisson"
        assert not np.all(table.counts.sum(axis=1) == 1000)
        assert abs(table.counts.mean() - 250) < 4 * np.sqrt(250 / table.counts.size)

    def test_law_of_large_numbers(self, plan4, phi_c):
        n = 10_000
        table = tomography.simulate_counts(qcore.density(phi_c), plan4, n, rng=4)
        p = tomography.born_probabilities(qcore.density(phi_c), plan4)
        assert np.max(np.abs(table.counts / n - p)) < 5 / np.sqrt(n)

    def test_xxxx_against_oracle(self, plan4, phi_c, projector):
        n = 20_000
        rho = qcore.density(phi_c)
        table = tomography.simulate_counts(rho, plan4, n, rng=5)
        row = table.counts[plan4.settings.index("XXXX")]
        for j, outcome in enumerate(plan4.outcomes):
            p = oracle_probability(rho, "XXXX", outcome, projector)
            sigma = np.sqrt(n * p * (1 - p))
            assert abs(row[j] - n * p) <= 4 * sigma + 1e-9

    def test_born_against_oracle(self, plan2, rng, projector):
        rho = qcore.random_density(2, rng)
        p = tomography.born_probabilities(rho, plan2)
        for i, s in enumerate(plan2.settings):
            for j, o in enumerate(plan2.outcomes):
                assert p[i, j] == pytest.approx(oracle_probability(rho, s, o, projector), abs=1e-12)

    def test_deterministic(self, plan4, calibrated_phi_c):
        a = tomography.simulate_counts(calibrated_phi_c, plan4, 500, rng=6)
        b = tomography.simulate_counts(calibrated_phi_c, plan4, 500, rng=6)
        np.testing.assert_array_equal(a.counts, b.counts)

    def test_rejects_bad_input(self, plan2):
        with pytest.raises(ConfigurationError):
            tomography.simulate_counts(np.eye(4) / 4, plan2, 0)
        with pytest.raises(ConfigurationError):
            tomography.simulate_counts(np.eye(4) / 4, plan2, 10, mode="binomial")
        with pytest.raises(ConfigurationError):
            tomography.simulate_counts(np.diag([1.5, -0.5, 0, 0]), plan2, 10)
        with pytest.raises(ConfigurationError):
            CountTable(plan2, 10, -np.ones((9, 4)))
        with pytest.raises(ConfigurationError):
            CountTable(plan2, 10, np.ones((4, 9)))

    def test_csv_round_trip(self, plan4, calibrated_phi_c, tmp_path):
        table = tomography.simulate_counts(calibrated_phi_c, plan4, 500, rng=7)
        path = tmp_path / "counts.csv"
        table.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "# shots=500 mode=multinomial seed=7"
        assert lines[1] == "setting,outcome,count"
        assert len(lines) == 2 + 1296
        back = CountTable.from_csv(path)
        np.testing.assert_array_equal(back.counts, table.counts)
        assert (back.shots, back.mode, back.seed) == (500, "multinomial", 7)

    def test_csv_round_trip_expected(self, plan2, rng, tmp_path):
        table = tomography.expected_counts(qcore.random_density(2, rng), plan2, 1000)
        table.to_csv(tmp_path / "c.csv")
        back = CountTable.from_csv(tmp_path / "c.csv")
        np.testing.assert_array_equal(back.counts, table.counts)

    def test_csv_malformed(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("# shots=5 mode=multinomial seed=none\nsetting,outcome,count\nXQ,00,3\n")
        with pytest.raises(ConfigurationError):
            CountTable.from_csv(path)
        path.write_text("setting,outcome,count\n")
        with pytest.raises(ConfigurationError):
            CountTable.from_csv(path)

    def test_empty_table(self, plan2):
        with pytest.raises(EstimationError):
            tomography.mle_reconstruct(CountTable(plan2, 10, np.zeros((9, 4), dtype=int)))


class TestReconstruction:
    def test_exact_frequencies_two_qubits(self, plan2, rng):
        for _ in range(10):
            rho = qcore.random_density(2, rng)
            result = tomography.mle_reconstruct(tomography.expected_counts(rho, plan2))
            assert qcore.trace_distance(result.rho, rho) < 1e-4

    def test_rank_deficient_truth(self, plan2, rng):
        rho = qcore.random_density(2, rng, rank=1)
        result = tomography.mle_reconstruct(tomography.expected_counts(rho, plan2))
        assert qcore.trace_distance(result.rho, rho) < 1e-3

    def test_maximally_mixed_counts(self, plan4, phi_c):
        table = tomography.simulate_counts(np.eye(16) / 16, plan4, 500, rng=8)
        result = tomography.mle_reconstruct(table)
        assert qcore.fidelity(result.rho, phi_c) == pytest.approx(1 / 16, abs=0.02)

    def test_history_monotone(self, plan4, calibrated_phi_c):
        table = tomography.simulate_counts(calibrated_phi_c, plan4, 500, rng=9)
        result = tomography.mle_reconstruct(table)
        assert np.all(np.diff(result.history) >= -1e-12)
        assert result.log_likelihood == result.history[-1]
        assert result.iterations >= 1

    def test_rrho_alone_monotone(self, plan2, rng):
        table = tomography.simulate_counts(qcore.random_density(2, rng), plan2, 200, rng=10)
        for eps in (0.05, 0.1, 0.5):
            result = tomography.mle_reconstruct(table, epsilon=eps, refine=False)
            assert np.all(np.diff(result.history) >= -1e-12)
            assert result.newton_steps == 0

    def test_fixed_point_of_iteration(self, plan2, rng):
        # R(rho) = I at the truth when frequencies are exact, so one step leaves rho unchanged
        rho = qcore.random_density(2, rng)
        freqs = tomography.expected_counts(rho, plan2).frequencies()
        kets = plan2.projector_kets()
        p = np.einsum("ki,ij,kj->k", kets.conj(), rho, kets).real
        R = np.einsum("k,ki,kj->ij", freqs.ravel() / p, kets, kets.conj())
        np.testing.assert_allclose(R, np.eye(4), atol=1e-12)

    def test_random_tables_physical(self, plan2, rng, is_density):
        for _ in range(1000):
            counts = rng.integers(0, 50, size=(9, 4))
            counts[rng.integers(9), rng.integers(4)] += 1
            result = tomography.mle_reconstruct(CountTable(plan2, 50, counts, "poisson"), max_iter=300)
            assert is_density(result.rho, tol=1e-9)

    def test_consistency_in_shots(self, plan2, rng):
        rho = qcore.random_density(2, rng)
        medians = []
        for n in (100, 1000, 10_000):
            dists = []
            for seed in range(20):
                table = tomography.simulate_counts(rho, plan2, n, rng=seed)
                dists.append(qcore.trace_distance(tomography.mle_reconstruct(table).rho, rho))
            medians.append(np.median(dists))
        assert medians[0] > medians[1] > medians[2]

    def test_invalid_epsilon(self, plan2):
        with pytest.raises(ConfigurationError):
            tomography.mle_reconstruct(tomography.expected_counts(np.eye(4) / 4, plan2), epsilon=0)

    def test_unknown_backend(self, plan2):
        with pytest.raises(ConfigurationError):
            tomography.mle_reconstruct(tomography.expected_counts(np.eye(4) / 4, plan2), backend="gpu")


class TestErrorBar:
    def test_zero_noise_limit(self, plan4, phi_c):
        table = tomography.expected_counts(qcore.density(phi_c), plan4, 1e8)
        bar = tomography.monte_carlo_errorbar(table, phi_c, runs=4, seed=1)
        assert bar.std < 1e-3
        assert bar.mean == pytest.approx(1.0, abs=1e-3)

    def test_reproducible_and_positive(self, plan2):
        rho = cluster.apply_noise(qcore.ket("+-"), NoiseSpec.white(0.8))
        table = tomography.simulate_counts(rho, plan2, 500, rng=11)
        a = tomography.monte_carlo_errorbar(table, qcore.ket("+-"), runs=30, seed=3)
        b = tomography.monte_carlo_errorbar(table, qcore.ket("+-"), runs=30, seed=3)
        assert a == b
        assert 0 < a.std < 0.05
        assert a.runs == 30 and len(a.samples) == 30
        assert a.std == pytest.approx(np.std(a.samples, ddof=1), abs=1e-15)

    def test_needs_two_runs(self, plan2):
        table = tomography.expected_counts(np.eye(4) / 4, plan2, 100)
        with pytest.raises(ConfigurationError):
            tomography.monte_carlo_errorbar(table, qcore.ket("00"), runs=1)


class TestWitness:
    def test_ideal(self, phi_c):
        f, passed = tomography.biseparability_witness(qcore.density(phi_c))
        assert f == pytest.approx(1.0, abs=1e-12) and passed

    def test_mixed(self):
        f, passed = tomography.biseparability_witness(np.eye(16) / 16)
        assert f == pytest.approx(0.0625, abs=1e-12) and not passed

    def test_calibrated(self, calibrated_phi_c):
        f, passed = tomography.biseparability_witness(calibrated_phi_c)
        assert f == pytest.approx(0.62, abs=1e-12) and passed

    def test_linear_cluster_reference(self, phi_lin):
        f, passed = tomography.biseparability_witness(qcore.density(phi_lin), ideal=phi_lin)
        assert passed

    def test_dimension(self):
        with pytest.raises(ConfigurationError):
            tomography.biseparability_witness(np.eye(4) / 4)


class TestDensityJson:
    def test_round_trip_exact(self, rng, tmp_path):
        rho = qcore.random_density(4, rng)
        tomography.write_density_json(rho, tmp_path / "rho.json")
        back = tomography.read_density_json(tmp_path / "rho.json")
        np.testing.assert_array_equal(back, rho)

    def test_layout(self, tmp_path):
        import json
        rho = np.diag([0.5, 0.25, 0.25, 0]).astype(complex)
        rho[0, 1], rho[1, 0] = 0.1j, -0.1j
        tomography.write_density_json(rho, tmp_path / "r.json")
        doc = json.loads((tmp_path / "r.json").read_text())
        assert doc["n"] == 2
        assert doc["re"][0] == [0.5, 0, 0, 0]
        assert doc["im"][0][1] == 0.1

    def test_rejects_garbage(self, tmp_path):
        (tmp_path / "x.json").write_text('{"n": 2, "re": [[1]]}')
        with pytest.raises(ConfigurationError):
            tomography.read_density_json(tmp_path / "x.json")
        (tmp_path / "y.json").write_text('{"n": 2, "re": [[1]], "im": [[0]]}')
        with pytest.raises(ConfigurationError):
            tomography.read_density_json(tmp_path / "y.json")
