"""
Unit Tests for the Synthetic Bench
=====================================
Ground-truth generators, brute-force oracle and governor-proxy comparison.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from energy_copilot.bench.synth_bench import (
    PROXY_LIMITATION,
    NoiseSpec,
    SyntheticApp,
    brute_force_optimum,
    default_apps,
    default_core_list,
    energy_regret,
    generate_perf_dataset,
    generate_power_dataset,
    generate_power_traces,
    governor_proxy_comparison,
    governor_proxy_table,
    true_time,
    write_comparison_csv,
)
from energy_copilot.errors import EmptyInput, Infeasible, InvalidInput
from energy_copilot.models.perf_model import SvrHyperparams, train
from energy_copilot.models.power_model import REFERENCE_COEFFICIENTS, MachineSpec, power_eval
from energy_copilot.optimizer.energy_optimizer import Constraints
from energy_copilot.utils.data_io import aggregate_traces

# Brute-force optimum core count per parallel fraction on the reference node (all at 2.2 GHz).
EXPECTED_CORES = {0.0: 1, 0.25: 4, 0.5: 6, 0.75: 11, 0.9: 16, 1.0: 32}


@pytest.fixture
def machine():
    return MachineSpec.reference_node()


@pytest.fixture(scope="module")
def small_machine():
    return MachineSpec.from_range(1.2, 2.2, 0.5, cores_per_socket=4, num_sockets=2)


class TestGenerators:
    def test_true_time(self):
        app = SyntheticApp(parallel_fraction=0.5, w0_ghz_s=400.0)
        assert true_time(app, 2.0, 4, 2.0) == pytest.approx(250.0)

    def test_custom_work_function(self):
        app = SyntheticApp(parallel_fraction=0.0, work_fn=lambda n: 10.0 * n**2)
        assert true_time(app, 2.0, 8, 3.0) == pytest.approx(45.0)
        assert "work_fn" not in app.model_dump()

    def test_non_positive_work(self):
        app = SyntheticApp(parallel_fraction=0.5)
        with pytest.raises(InvalidInput):
            app.work(0.0)

    def test_parallel_fraction_bounds(self):
        with pytest.raises(ValueError):
            SyntheticApp(parallel_fraction=1.5)

    def test_noiseless_power_dataset(self, machine):
        observations = generate_power_dataset(REFERENCE_COEFFICIENTS, machine)
        assert len(observations) == 352
        for o in observations:
            assert o.mean_watts == power_eval(REFERENCE_COEFFICIENTS, o.config)

    def test_power_noise_is_seeded(self, machine):
        a = generate_power_dataset(REFERENCE_COEFFICIENTS, machine, NoiseSpec(power_sigma_w=2.38, seed=42))
        b = generate_power_dataset(REFERENCE_COEFFICIENTS, machine, NoiseSpec(power_sigma_w=2.38, seed=42))
        c = generate_power_dataset(REFERENCE_COEFFICIENTS, machine, NoiseSpec(power_sigma_w=2.38, seed=43))
        assert a == b
        assert a != c

    def test_power_noise_magnitude(self, machine):
        noisy = generate_power_dataset(REFERENCE_COEFFICIENTS, machine, NoiseSpec(power_sigma_w=2.38))
        residual = [o.mean_watts - power_eval(REFERENCE_COEFFICIENTS, o.config) for o in noisy]
        assert np.std(residual) == pytest.approx(2.38, rel=0.15)

    def test_power_traces_aggregate_to_truth(self, small_machine):
        traces = generate_power_traces(REFERENCE_COEFFICIENTS, small_machine, samples_per_config=10)
        assert len(traces) == len(small_machine.configurations())
        assert all(len(t.samples) == 10 for t in traces)
        for observation in aggregate_traces(traces):
            assert observation.mean_watts == pytest.approx(power_eval(REFERENCE_COEFFICIENTS, observation.config), rel=1e-12)

    def test_perf_dataset_covers_campaign(self, machine):
        samples = generate_perf_dataset(SyntheticApp(parallel_fraction=0.9), machine, [1, 2, 3, 4, 5])
        assert len(samples) == 1760

    def test_perf_noise_is_relative(self, small_machine):
        app = SyntheticApp(parallel_fraction=0.5)
        noisy = generate_perf_dataset(app, small_machine, [1.0, 2.0], NoiseSpec(time_sigma_rel=0.02))
        ratios = [s.time_s / true_time(app, s.freq_ghz, s.cores, s.input_size) for s in noisy]
        assert np.mean(ratios) == pytest.approx(1.0, abs=0.02)
        assert 0.0 < np.std(ratios) < 0.05

    def test_perf_dataset_needs_sizes(self, small_machine):
        with pytest.raises(EmptyInput):
            generate_perf_dataset(SyntheticApp(parallel_fraction=0.5), small_machine, [])


class TestBruteForce:
    @pytest.mark.parametrize("phi, cores", sorted(EXPECTED_CORES.items()))
    def test_reference_node_optima(self, machine, phi, cores):
        best = brute_force_optimum(REFERENCE_COEFFICIENTS, SyntheticApp(parallel_fraction=phi), machine, 3.0)
        assert best.config.cores == cores
        assert best.config.freq_ghz == 2.2

    def test_optimal_cores_grow_with_parallel_fraction(self, machine):
        picks = [
            brute_force_optimum(REFERENCE_COEFFICIENTS, app, machine, 3.0).config.cores
            for app in default_apps()
        ]
        assert picks == sorted(picks)

    def test_respects_constraints(self, machine):
        app = SyntheticApp(parallel_fraction=1.0)
        best = brute_force_optimum(REFERENCE_COEFFICIENTS, app, machine, 3.0, Constraints(max_cores=16))
        assert best.config.cores == 16

    def test_infeasible_names_the_deadline(self, machine):
        with pytest.raises(Infeasible) as info:
            brute_force_optimum(
                REFERENCE_COEFFICIENTS, SyntheticApp(parallel_fraction=0.5), machine, 3.0, Constraints(max_time_s=1e-6)
            )
        assert info.value.bound == "max_time_s"
        assert "fastest time" in str(info.value)

    def test_infeasible_names_the_core_bound(self, machine):
        with pytest.raises(Infeasible) as info:
            brute_force_optimum(
                REFERENCE_COEFFICIENTS, SyntheticApp(parallel_fraction=0.5), machine, 3.0, Constraints(min_cores=64)
            )
        assert info.value.bound == "min_cores"

    def test_regret_of_optimum_is_zero(self, machine):
        app = SyntheticApp(parallel_fraction=0.75)
        best = brute_force_optimum(REFERENCE_COEFFICIENTS, app, machine, 2.0)
        assert energy_regret(REFERENCE_COEFFICIENTS, app, machine, best.config, 2.0) == 0.0
        worse = machine.configuration(1.2, 32)
        assert energy_regret(REFERENCE_COEFFICIENTS, app, machine, worse, 2.0) > 0.0


class TestGovernorProxy:
    @pytest.fixture(scope="class")
    def serial_model(self, small_machine):
        app = SyntheticApp(parallel_fraction=0.0)
        samples = generate_perf_dataset(app, small_machine, [1.0, 2.0, 3.0])
        return train(samples, SvrHyperparams(c_penalty=1e4, gamma=0.5, epsilon_tube=0.001))

    def test_default_core_list(self):
        cores = default_core_list(32)
        assert cores[:4] == [1, 2, 4, 6]
        assert cores[-1] == 32
        assert len(cores) == 17

    def test_serial_app_saves_against_full_node(self, small_machine, serial_model):
        app = SyntheticApp(parallel_fraction=0.0)
        row = governor_proxy_comparison(
            REFERENCE_COEFFICIENTS, app, small_machine, 2.0, [1, 2, 4, 8], REFERENCE_COEFFICIENTS, serial_model
        )
        assert row.proxy_worst.cores == 8
        assert row.proxy_best.cores == 1
        assert row.max_save_pct > 0
        assert row.min_save_pct >= -1.0
        expected = (row.proxy_worst.energy_j / row.optimizer_j - 1) * 100
        assert row.max_save_pct == pytest.approx(expected)

    def test_table_averages_rows(self, small_machine, serial_model):
        app = SyntheticApp(parallel_fraction=0.0)
        table = governor_proxy_table(
            REFERENCE_COEFFICIENTS, app, small_machine, [1.0, 2.0, 3.0], [1, 2, 4, 8], REFERENCE_COEFFICIENTS, serial_model
        )
        assert len(table.rows) == 3
        assert table.mean_max_save_pct == pytest.approx(np.mean([r.max_save_pct for r in table.rows]))

    def test_core_list_outside_machine(self, small_machine, serial_model):
        with pytest.raises(InvalidInput):
            governor_proxy_comparison(
                REFERENCE_COEFFICIENTS,
                SyntheticApp(parallel_fraction=0.0),
                small_machine,
                2.0,
                [1, 16],
                REFERENCE_COEFFICIENTS,
                serial_model,
            )

    def test_comparison_csv(self, tmp_path, small_machine, serial_model):
        table = governor_proxy_table(
            REFERENCE_COEFFICIENTS,
            SyntheticApp(parallel_fraction=0.0),
            small_machine,
            [1.0, 2.0],
            [1, 8],
            REFERENCE_COEFFICIENTS,
            serial_model,
        )
        lines = write_comparison_csv(table, tmp_path / "compare.csv").read_text().splitlines()
        assert lines[0].startswith("# ")
        assert PROXY_LIMITATION.startswith(lines[0][2:])
        assert lines[1] == "input_size,proxy_best_j,proxy_worst_j,optimizer_j,min_save_pct,max_save_pct"
        assert len(lines) == 4
