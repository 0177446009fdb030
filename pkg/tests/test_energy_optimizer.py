"""
Unit Tests for the Energy Optimizer
======================================
Surface construction, constrained argmin, tie-breaking and diagnostics.
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

sys.path.insert(0, str(Path(__file__).parent.parent))

from energy_copilot.errors import EmptyInput, Infeasible
from energy_copilot.models.perf_model import MIN_TIME_S, FeatureScaler, PerfModel, PerfSample, SvrHyperparams, train
from energy_copilot.models.power_model import (
    REFERENCE_COEFFICIENTS,
    Configuration,
    MachineSpec,
    PowerCoefficients,
    power_eval,
)
from energy_copilot.optimizer.energy_optimizer import (
    Constraints,
    EnergyEstimate,
    analyze_strategy,
    energy_surface,
    estimate,
    optimize,
    selection_key,
    validate_energy,
)


TIGHT = SvrHyperparams(c_penalty=1e4, gamma=0.5, epsilon_tube=0.001)


@pytest.fixture(scope="module")
def machine():
    return MachineSpec.from_range(1.2, 2.2, 0.5, cores_per_socket=4, num_sockets=2)


def amdahl_runs(machine, scale=1.0):
    return [
        PerfSample(freq_ghz=f, cores=p, input_size=n, time_s=scale * 400.0 * n * (0.1 + 0.9 / p) / f)
        for f in machine.freq_grid_ghz
        for p in range(1, machine.max_cores + 1)
        for n in (1.0, 2.0, 3.0)
    ]


@pytest.fixture(scope="module")
def model(machine):
    return train(amdahl_runs(machine), TIGHT)


def make_estimate(freq, cores, energy, sockets=1):
    return EnergyEstimate(
        config=Configuration(freq_ghz=freq, cores=cores, sockets=sockets),
        power_w=100.0,
        time_s=energy / 100.0,
        energy_j=energy,
    )


class TestEnergySurface:
    def test_covers_every_configuration(self, machine, model):
        surface = energy_surface(REFERENCE_COEFFICIENTS, model, machine, 2.0)
        assert len(surface) == 3 * 8
        assert [e.config for e in surface] == machine.configurations()

    def test_energy_is_power_times_time(self, machine, model):
        for item in energy_surface(REFERENCE_COEFFICIENTS, model, machine, 2.0):
            assert item.energy_j == pytest.approx(item.power_w * item.time_s, rel=1e-12)
            assert item.power_w == pytest.approx(power_eval(REFERENCE_COEFFICIENTS, item.config), rel=1e-12)

    def test_surface_matches_pointwise_estimate(self, machine, model):
        surface = energy_surface(REFERENCE_COEFFICIENTS, model, machine, 2.0)
        config = machine.configuration(1.7, 5)
        point = estimate(REFERENCE_COEFFICIENTS, model, config, 2.0)
        assert next(e for e in surface if e.config == config).energy_j == pytest.approx(point.energy_j, rel=1e-12)


    def test_clamped_time_still_gives_positive_energy(self):
        scaler = FeatureScaler(
            feature_mean=(0.0, 0.0, 0.0),
            feature_std=(1.0, 1.0, 1.0),
            target_mean=0.0,
            target_std=1.0,
        )
        negative = PerfModel(
            support_vectors=[],
            dual_coeffs=[],
            bias=-5.0,
            hyperparams=TIGHT,
            scaler=scaler,
            n_train=1,
            train_seed=42,
            fingerprint="",
        )
        config = Configuration(freq_ghz=2.2, cores=4, sockets=1)
        item = estimate(REFERENCE_COEFFICIENTS, negative, config, 1.0)
        assert item.time_clamped
        assert item.time_s == MIN_TIME_S
        assert item.energy_j == power_eval(REFERENCE_COEFFICIENTS, config) * MIN_TIME_S
        assert item.energy_j > 0


class TestOptimize:
    def test_pick_is_surface_minimum(self, machine, model):
        best, surface = optimize(REFERENCE_COEFFICIENTS, model, machine, 2.0)
        assert best == min(surface, key=selection_key)
        assert all(best.energy_j <= e.energy_j for e in surface)

    def test_constraints_filter_surface(self, machine, model):
        constraints = Constraints(max_cores=2, max_freq_ghz=1.7)
        best, surface = optimize(REFERENCE_COEFFICIENTS, model, machine, 2.0, constraints)
        assert len(surface) == 2 * 2
        assert best.config.cores <= 2
        assert best.config.freq_ghz <= 1.7

    def test_deadline_admits_only_fast_configurations(self, machine, model):
        unconstrained, surface = optimize(REFERENCE_COEFFICIENTS, model, machine, 2.0)
        deadline = sorted(e.time_s for e in surface)[3]
        best, admitted = optimize(REFERENCE_COEFFICIENTS, model, machine, 2.0, Constraints(max_time_s=deadline))
        assert len(admitted) == 4
        assert best.time_s <= deadline
        assert best.energy_j >= unconstrained.energy_j

    def test_infeasible_deadline_names_bound(self, machine, model):
        with pytest.raises(Infeasible) as info:
            optimize(REFERENCE_COEFFICIENTS, model, machine, 2.0, Constraints(max_time_s=1e-3))
        assert info.value.bound == "max_time_s"
        assert "fastest time" in str(info.value)

    def test_infeasible_frequency_window(self, machine, model):
        with pytest.raises(Infeasible) as info:
            optimize(REFERENCE_COEFFICIENTS, model, machine, 2.0, Constraints(min_freq_ghz=1.8, max_freq_ghz=2.0))
        assert info.value.bound in {"min_freq_ghz", "max_freq_ghz"}

    def test_inconsistent_constraints_rejected(self):
        with pytest.raises(ValidationError):
            Constraints(min_cores=8, max_cores=4)
        with pytest.raises(ValidationError):
            Constraints(min_freq_ghz=2.0, max_freq_ghz=1.5)


    @pytest.mark.parametrize("scale", [0.5, 2.0])
    def test_pick_is_invariant_to_time_scaling(self, machine, model, scale):
        scaled_model = train(amdahl_runs(machine, scale), TIGHT)
        base, _ = optimize(REFERENCE_COEFFICIENTS, model, machine, 2.0)
        scaled, _ = optimize(REFERENCE_COEFFICIENTS, scaled_model, machine, 2.0)
        assert scaled.config == base.config
        assert scaled.energy_j == pytest.approx(scale * base.energy_j, rel=1e-9)

    @pytest.mark.parametrize("seed", range(10))
    def test_constraints_hold_on_random_models(self, machine, seed):
        rng = np.random.default_rng(seed)
        runs = [
            PerfSample(freq_ghz=f, cores=p, input_size=2.0, time_s=float(rng.uniform(10, 500)))
            for f in machine.freq_grid_ghz
            for p in range(1, machine.max_cores + 1)
        ]
        random_model = train(runs, SvrHyperparams(c_penalty=100.0, gamma=0.5, epsilon_tube=0.01))
        full = energy_surface(REFERENCE_COEFFICIENTS, random_model, machine, 2.0)
        bounds = Constraints(
            max_time_s=float(np.quantile([e.time_s for e in full], 0.75)),
            min_cores=int(rng.integers(1, 4)),
            max_freq_ghz=float(rng.choice(machine.freq_grid_ghz[1:])),
        )
        admissible = [e for e in full if bounds.admits(e)]
        if not admissible:
            with pytest.raises(Infeasible):
                optimize(REFERENCE_COEFFICIENTS, random_model, machine, 2.0, bounds)
            return
        best, surface = optimize(REFERENCE_COEFFICIENTS, random_model, machine, 2.0, bounds)
        assert surface == admissible
        assert bounds.admits(best)
        assert all(best.energy_j <= e.energy_j for e in admissible)


class TestTieBreaking:
    def test_ties_go_to_higher_frequency(self):
        items = [make_estimate(1.2, 4, 500.0), make_estimate(2.2, 4, 500.0), make_estimate(1.7, 4, 500.0)]
        assert min(items, key=selection_key).config.freq_ghz == 2.2

    def test_then_to_fewer_cores(self):
        items = [make_estimate(2.2, 8, 500.0, sockets=2), make_estimate(2.2, 3, 500.0)]
        assert min(items, key=selection_key).config.cores == 3

    def test_energy_dominates(self):
        items = [make_estimate(2.2, 1, 500.0), make_estimate(1.2, 8, 499.0)]
        assert min(items, key=selection_key).energy_j == 499.0


class TestStrategy:
    def test_reference_node_races_to_idle(self):
        report = analyze_strategy(REFERENCE_COEFFICIENTS, MachineSpec.reference_node())
        assert report.dynamic_plus_leak_max_w == pytest.approx(185.46144, abs=1e-9)
        assert report.static_w == 198.59
        assert report.race_to_idle_expected
        assert report.max_config == Configuration(freq_ghz=2.2, cores=32, sockets=2)

    def test_dominant_dynamic_power_paces(self):
        hot = REFERENCE_COEFFICIENTS.model_copy(update={"c3": 50.0})
        assert not analyze_strategy(hot, MachineSpec.reference_node()).race_to_idle_expected

    def test_cubic_term_dominates(self):
        cubic = PowerCoefficients(c1=10.0, c2=0.0, c3=1.0, c4=0.0)
        report = analyze_strategy(cubic, MachineSpec.reference_node())
        assert report.dynamic_plus_leak_max_w == pytest.approx(3407.36, abs=1e-9)
        assert not report.race_to_idle_expected

    def test_equal_parcel_and_static_power_does_not_race(self):
        balanced = PowerCoefficients(c1=0.0, c2=0.0, c3=10.0, c4=5.0)
        report = analyze_strategy(balanced, MachineSpec.reference_node())
        assert report.dynamic_plus_leak_max_w == report.static_w
        assert not report.race_to_idle_expected


class TestValidateEnergy:
    def test_exact_measurements(self, machine, model):
        runs = [
            (cfg, 2.0, estimate(REFERENCE_COEFFICIENTS, model, cfg, 2.0).energy_j)
            for cfg in machine.configurations()[:5]
        ]
        report = validate_energy(REFERENCE_COEFFICIENTS, model, runs)
        assert report.n_runs == 5
        assert report.mae_j == pytest.approx(0.0, abs=1e-9)
        assert report.pae == pytest.approx(0.0, abs=1e-12)

    def test_biased_measurements(self, machine, model):
        cfg = machine.configuration(2.2, 8)
        modeled = estimate(REFERENCE_COEFFICIENTS, model, cfg, 2.0).energy_j
        report = validate_energy(REFERENCE_COEFFICIENTS, model, [(cfg, 2.0, modeled * 1.25)])
        assert report.pae == pytest.approx(0.2, rel=1e-9)

    def test_empty(self, model):
        with pytest.raises(EmptyInput):
            validate_energy(REFERENCE_COEFFICIENTS, model, [])
