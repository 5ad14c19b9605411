import json

import numpy as np
import pytest

from conftest import (
    APNEA_PATIENT_LAMBDA,
    APNEA_PATIENT_PI,
    APNEA_PATIENT_RATES,
    HEALTHY_LAMBDA,
    HEALTHY_PI,
    HEALTHY_RATES,
    R_M,
    SIX_STATE_LAMBDA,
    SIX_STATE_PI,
)
from ctmc.fit import count_transitions, fit_generator, fit_generator_from_schedule, schedule_transitions
from ctmc.generator import (
    GeneratorMatrix,
    communicating_classes,
    embedded_chain,
    mean_sojourn_times,
    stationary,
    strip_movement_state,
    transition_matrix,
)
from ctmc.model_io import (
    BreathingModel,
    ModelMeta,
    export_servo_schedule,
    load_model,
    load_schedule,
    save_model,
    save_schedule,
)
from ctmc.simulate import SojournSchedule, simulate
from errors import (
    DataFormatError,
    InsufficientDataError,
    InvalidInputError,
    NoTransitionsError,
    NotApplicableError,
    ReducibilityError,
    SingularStateError,
)
from evaluation.metrics import kl_divergence
from quantizer.quantize import QuantizedTrajectory
from quantizer.state_space import StateSpace

TABLE_2B_LAMBDA = [
    [-0.227545, 0.083832, 0.023952, 0.023952, 0.095808],
    [0.011161, -0.071429, 0.035714, 0.001116, 0.023438],
    [0.010604, 0.067869, -0.123012, 0.012725, 0.031813],
    [0.0, 0.021978, 0.076923, -0.131868, 0.032967],
    [0.003406, 0.014986, 0.011580, 0.001362, -0.031335],
]
TABLE_2B_PI = [0.02902, 0.29355, 0.15485, 0.02781, 0.49477]

# four-state fit of the same recording
TABLE_2A_LAMBDA = [
    [-0.196532, 0.109827, 0.023121, 0.063584],
    [0.021876, -0.058898, 0.012621, 0.024401],
    [0.0, 0.105263, -0.144044, 0.038781],
    [0.006814, 0.021124, 0.003407, -0.031346],
]
TABLE_2A_PI = [0.0605, 0.38942, 0.05555, 0.49453]

# printed generators with their printed diagonals, and printed pi
PUBLISHED_MODELS = {
    "apnea_patient": (APNEA_PATIENT_LAMBDA, APNEA_PATIENT_PI),
    "healthy_patient": (HEALTHY_LAMBDA, HEALTHY_PI),
    "four_state": (TABLE_2A_LAMBDA, TABLE_2A_PI),
    "five_state": (TABLE_2B_LAMBDA, TABLE_2B_PI),
    "six_state": (SIX_STATE_LAMBDA, SIX_STATE_PI),
}

THREE_STATE = [[-0.3, 0.2, 0.1], [0.1, -0.2, 0.1], [0.05, 0.15, -0.2]]


def random_generator(rng, n):
    rates = rng.uniform(0.01, 1.0, (n, n))
    return GeneratorMatrix.from_off_diagonal(rates)


@pytest.fixture
def three_state(newborn):
    ss = StateSpace(np.array([0.5, 0.9, 1.3]), False, False, newborn)
    return GeneratorMatrix.from_off_diagonal(THREE_STATE), ss


@pytest.fixture
def stripped_apnea_patient(apnea_patient):
    return strip_movement_state(*apnea_patient)


class TestGeneratorMatrix:
    def test_row_sums_checked(self):
        with pytest.raises(InvalidInputError):
            GeneratorMatrix(np.array([[-1.0, 0.5], [1.0, -1.0]]))

    def test_negative_off_diagonal(self):
        with pytest.raises(InvalidInputError):
            GeneratorMatrix(np.array([[1.0, -1.0], [1.0, -1.0]]))

    def test_from_off_diagonal_balances_rows(self):
        gen = GeneratorMatrix.from_off_diagonal(APNEA_PATIENT_LAMBDA)
        np.testing.assert_allclose(gen.entries.sum(axis=1), 0.0, atol=1e-15)
        np.testing.assert_allclose(gen.exit_rates[3], 0.066677, atol=2e-6)


class TestEmbeddedChain:
    def test_two_state(self):
        q = embedded_chain(GeneratorMatrix.from_off_diagonal([[0, 0.3], [2.0, 0]])).probabilities
        np.testing.assert_allclose(q, [[0, 1], [1, 0]])

    def test_published_row(self, apnea_patient):
        gen, _ = apnea_patient
        row = embedded_chain(gen).probabilities[3]
        expected = np.array([0.007717, 0.019756, 0.036734, 0.0, 0.00247]) / 0.066677
        np.testing.assert_allclose(row, expected, atol=1e-4)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            q = embedded_chain(random_generator(rng, 4)).probabilities
            np.testing.assert_allclose(q.sum(axis=1), 1.0, atol=1e-12)
            assert np.all(np.diag(q) == 0)

    def test_singular_state(self):
        gen = GeneratorMatrix.from_off_diagonal([[0, 0.5, 0], [0, 0, 0], [0.1, 0.1, 0]])
        with pytest.raises(SingularStateError) as info:
            embedded_chain(gen)
        assert info.value.state == 1


class TestStationary:
    def test_two_state_closed_form(self):
        a, b = 0.3, 0.7
        pi = stationary(GeneratorMatrix.from_off_diagonal([[0, a], [b, 0]])).probabilities
        np.testing.assert_allclose(pi, [b / (a + b), a / (a + b)], atol=1e-15)

    def test_apnea_patient(self, apnea_patient):
        gen, _ = apnea_patient
        np.testing.assert_allclose(stationary(gen).probabilities, APNEA_PATIENT_PI, atol=5e-4)

    @pytest.mark.parametrize("name", sorted(PUBLISHED_MODELS))
    @pytest.mark.parametrize("method", ["solve", "gth"])
    def test_published_models(self, name, method):
        entries, printed_pi = PUBLISHED_MODELS[name]
        # six printed decimals leave row sums off zero by up to 1e-6
        gen = GeneratorMatrix(np.array(entries), row_sum_tol=1e-4)
        pi = stationary(gen, method=method).probabilities
        np.testing.assert_allclose(pi, printed_pi, atol=5e-4)

    @pytest.mark.parametrize("name", sorted(PUBLISHED_MODELS))
    def test_printed_rows_within_print_rounding(self, name):
        entries = np.array(PUBLISHED_MODELS[name][0])
        assert np.abs(entries.sum(axis=1)).max() <= 1e-4
        gen = GeneratorMatrix(entries, row_sum_tol=1e-4)
        assert np.all(gen.exit_rates > 0)

    @pytest.mark.parametrize("model", ["apnea_patient", "healthy_patient", "six_state_patient"])
    def test_global_balance_and_gth_agreement(self, model, request):
        gen, _ = request.getfixturevalue(model)
        pi = stationary(gen).probabilities
        np.testing.assert_allclose(pi @ gen.entries, 0.0, atol=1e-10)
        np.testing.assert_allclose(stationary(gen, method="gth").probabilities, pi, atol=1e-10)
        assert pi.sum() == pytest.approx(1.0, abs=1e-12)

    def test_reducible(self):
        gen = GeneratorMatrix.from_off_diagonal([[0, 1, 0], [1, 0, 0], [0, 1, 0]])
        with pytest.raises(ReducibilityError):
            stationary(gen)
        assert communicating_classes(gen) == [[0, 1], [2]]

    def test_unvisited_state_allowed_when_flagged(self):
        gen = GeneratorMatrix.from_off_diagonal([[0, 1, 0], [2, 0, 0], [0, 0, 0]], unvisited={2})
        with pytest.raises(ReducibilityError):
            stationary(gen)
        pi = stationary(gen, allow_partial=True).probabilities
        np.testing.assert_allclose(pi, [2 / 3, 1 / 3, 0.0], atol=1e-15)

    def test_unknown_method(self, apnea_patient):
        with pytest.raises(InvalidInputError):
            stationary(apnea_patient[0], method="power")


class TestStripMovement:
    def test_published_model(self, stripped_apnea_patient):
        gen, ss = stripped_apnea_patient
        assert gen.n_states == 4 and not ss.has_movement
        np.testing.assert_allclose(
            gen.entries[0], [-(0.08972 + 0.04486 + 0.042991), 0.08972, 0.04486, 0.042991], atol=1e-15
        )

    def test_rows_balanced(self, newborn):
        rng = np.random.default_rng(1)
        ss = StateSpace(np.array([0.5, 0.9, 1.3, R_M]), False, True, newborn)
        for _ in range(100):
            gen, _ = strip_movement_state(random_generator(rng, 4), ss)
            np.testing.assert_allclose(gen.entries.sum(axis=1), 0.0, atol=1e-12)

    def test_two_state_degenerates(self, newborn):
        ss = StateSpace(np.array([0.9, R_M]), False, True, newborn)
        gen, stripped = strip_movement_state(GeneratorMatrix.from_off_diagonal([[0, 0.2], [0.4, 0]]), ss)
        np.testing.assert_array_equal(gen.entries, [[0.0]])
        schedule = simulate(gen, stripped, 50.0, seed=3)
        np.testing.assert_array_equal(schedule.states, [0])
        np.testing.assert_array_equal(schedule.sojourns, [50.0])

    def test_needs_movement_state(self, three_state):
        with pytest.raises(NotApplicableError):
            strip_movement_state(*three_state)


class TestTransitionMatrix:
    def test_identity_at_zero(self, apnea_patient):
        np.testing.assert_allclose(transition_matrix(apnea_patient[0], 0.0), np.eye(5), atol=1e-15)

    def test_converges_to_stationary(self, apnea_patient):
        gen, _ = apnea_patient
        p = transition_matrix(gen, 2000.0)
        np.testing.assert_allclose(p, np.tile(stationary(gen).probabilities, (5, 1)), atol=1e-8)

    def test_rows_are_distributions(self, three_state):
        p = transition_matrix(three_state[0], 3.7)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(p >= 0)

    def test_mean_sojourn_times(self, three_state):
        np.testing.assert_allclose(mean_sojourn_times(three_state[0]), [1 / 0.3, 5.0, 5.0])


class TestFitGenerator:
    def test_alternating_path(self, newborn):
        ss = StateSpace(np.array([0.5, 1.0]), False, False, newborn)
        states = np.repeat([0, 1, 0, 1], 10)
        gen = fit_generator(QuantizedTrajectory(states, 1.0, ss))
        # two A->B jumps and one B->A jump, 20 s held in each state
        np.testing.assert_allclose(gen.entries, [[-0.1, 0.1], [0.05, -0.05]])

    def test_counts_and_holding(self, newborn):
        ss = StateSpace(np.array([0.5, 1.0]), False, False, newborn)
        stats = count_transitions(QuantizedTrajectory([0, 0, 1, 1, 1, 0], 0.5, ss))
        np.testing.assert_array_equal(stats.counts, [[0, 1], [1, 0]])
        np.testing.assert_allclose(stats.holding_s, [1.5, 1.5])

    def test_single_state_path(self, three_state):
        with pytest.raises(NoTransitionsError):
            fit_generator(QuantizedTrajectory(np.zeros(20, dtype=int), 1.0, three_state[1]))

    def test_too_short(self, three_state):
        with pytest.raises(InsufficientDataError):
            fit_generator(QuantizedTrajectory([1], 1.0, three_state[1]))

    def test_unvisited_state_flagged(self, three_state):
        gen = fit_generator(QuantizedTrajectory([0, 0, 1, 1, 0], 1.0, three_state[1]))
        assert gen.unvisited == frozenset({2})
        np.testing.assert_array_equal(gen.entries[2], 0.0)

    def test_round_trip_from_simulation(self, three_state):
        gen, ss = three_state
        schedule = simulate(gen, ss, 1e5, seed=42)
        truth = gen.entries
        off = ~np.eye(3, dtype=bool)
        counts = count_transitions(schedule.sample(0.05)).counts
        assert np.all(counts[off] >= 100)
        for fitted in (fit_generator_from_schedule(schedule), fit_generator(schedule.sample(0.05))):
            np.testing.assert_allclose(fitted.entries[off], truth[off], rtol=0.10)

    def test_round_trip_published_chain(self, stripped_apnea_patient):
        gen, ss = stripped_apnea_patient
        schedule = simulate(gen, ss, 2e5, seed=2024)
        counts = schedule_transitions(schedule).counts
        fitted = fit_generator_from_schedule(schedule)
        observed = ~np.eye(gen.n_states, dtype=bool) & (counts >= 100)
        # every printed rate is large enough to be observed
        assert observed.sum() == gen.n_states * (gen.n_states - 1)
        np.testing.assert_allclose(fitted.entries[observed], gen.entries[observed], rtol=0.10)


class TestSimulate:
    def test_symmetric_chain(self, newborn):
        ss = StateSpace(np.array([0.5, 1.0]), False, False, newborn)
        schedule = simulate(GeneratorMatrix.from_off_diagonal([[0, 1], [1, 0]]), ss, 1e5, seed=0)
        assert schedule.occupancy()[0] == pytest.approx(0.5, abs=0.01)

    def test_schedule_invariants(self, stripped_apnea_patient):
        gen, ss = stripped_apnea_patient
        schedule = simulate(gen, ss, 5000.0, seed=1)
        assert np.all(schedule.sojourns > 0)
        assert np.all(schedule.states[1:] != schedule.states[:-1])
        assert np.all(np.diff(schedule.jump_times) > 0)
        assert schedule.duration == pytest.approx(5000.0, rel=1e-12)

    def test_occupancy_matches_stationary(self, stripped_apnea_patient):
        gen, ss = stripped_apnea_patient
        schedule = simulate(gen, ss, 2e5, seed=2024)
        assert kl_divergence(schedule.occupancy(), stationary(gen).probabilities) <= 1e-3

    def test_kl_shrinks_with_duration(self, stripped_apnea_patient):
        gen, ss = stripped_apnea_patient
        pi = stationary(gen).probabilities

        def mean_kl(duration):
            return np.mean([kl_divergence(simulate(gen, ss, duration, seed=s).occupancy(), pi) for s in range(5)])

        kls = [mean_kl(d) for d in (1e3, 1e4, 1e5)]
        assert kls[0] > kls[1] > kls[2]

    def test_mean_sojourn(self, three_state):
        gen, ss = three_state
        schedule = simulate(gen, ss, 1e5, seed=5)
        # the last sojourn is truncated
        states, sojourns = schedule.states[:-1], schedule.sojourns[:-1]
        held = sojourns[states == 1]
        expected = 1 / gen.exit_rates[1]
        assert abs(held.mean() - expected) <= 3 * expected / np.sqrt(held.size)

    def test_deterministic(self, stripped_apnea_patient):
        gen, ss = stripped_apnea_patient
        a = simulate(gen, ss, 3000.0, seed=9)
        b = simulate(gen, ss, 3000.0, seed=9)
        c = simulate(gen, ss, 3000.0, seed=10)
        np.testing.assert_array_equal(a.states, b.states)
        np.testing.assert_array_equal(a.sojourns, b.sojourns)
        assert a.sojourns[0] != c.sojourns[0]

    def test_invalid_duration(self, three_state):
        with pytest.raises(InvalidInputError):
            simulate(*three_state, 0.0, seed=0)


class TestSojournSchedule:
    def test_rejects_repeated_state(self, three_state):
        with pytest.raises(InvalidInputError):
            SojournSchedule([0, 0], [1.0, 2.0], three_state[1])

    def test_state_at_and_sample(self, three_state):
        schedule = SojournSchedule([0, 2, 1], [2.0, 1.0, 3.0], three_state[1])
        np.testing.assert_array_equal(schedule.state_at([0.0, 1.99, 2.0, 2.5, 3.0, 5.9]), [0, 0, 2, 2, 1, 1])
        qt = schedule.sample(1.0)
        np.testing.assert_array_equal(qt.state_indices, [0, 0, 2, 1, 1, 1])
        np.testing.assert_allclose(schedule.occupancy(), [2 / 6, 3 / 6, 1 / 6])


class TestModelIo:
    def test_model_round_trip(self, tmp_path, apnea_patient):
        gen, ss = apnea_patient
        model = BreathingModel(gen, ss, stationary(gen), ModelMeta(source="x.csv", fit_step_s=0.5))
        save_model(tmp_path / "m.json", model)
        loaded = load_model(tmp_path / "m.json")
        np.testing.assert_array_equal(loaded.generator.entries, gen.entries)
        np.testing.assert_array_equal(loaded.stationary.probabilities, model.stationary.probabilities)
        np.testing.assert_array_equal(loaded.state_space.rates, ss.rates)
        assert loaded.state_space.has_apnea and loaded.state_space.has_movement
        assert loaded.meta.fit_step_s == 0.5

    def test_printed_matrix_loads(self, tmp_path):
        doc = {
            "rates_hz": APNEA_PATIENT_RATES,
            "has_apnea": True,
            "has_movement": True,
            "lambda_per_s": APNEA_PATIENT_LAMBDA,
            "pi": APNEA_PATIENT_PI,
            "bounds_hz": {"r_low": 0.4, "r_high": 1.5, "r_movement": R_M},
        }
        (tmp_path / "m.json").write_text(json.dumps(doc))
        assert load_model(tmp_path / "m.json").generator.n_states == 5

    @pytest.mark.parametrize(
        "rates, entries, printed_pi, has_apnea",
        [
            ([0.0, 0.5, 0.9, 1.32, 10.0], APNEA_PATIENT_LAMBDA, APNEA_PATIENT_PI, True),
            ([0.44, 0.74, 1.04, 1.33, 10.0], HEALTHY_LAMBDA, HEALTHY_PI, False),
        ],
    )
    def test_bare_document(self, tmp_path, rates, entries, printed_pi, has_apnea):
        doc = {
            "rates_hz": rates,
            "has_apnea": has_apnea,
            "has_movement": True,
            "lambda_per_s": entries,
            "pi": printed_pi,
            "meta": {"source": "printed", "fit_step_s": 0.5, "seed": None},
        }
        (tmp_path / "m.json").write_text(json.dumps(doc))
        model = load_model(tmp_path / "m.json")
        assert model.state_space.bounds.r_movement == 10.0
        assert model.stationary.probabilities.sum() == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(model.stationary.probabilities, printed_pi, atol=5e-4)
        gen, ss = strip_movement_state(model.generator, model.state_space)
        assert len(simulate(gen, ss, 1000.0, seed=1)) > 0

    def test_stored_pi_is_recomputed(self, tmp_path, apnea_patient):
        gen, ss = apnea_patient
        save_model(tmp_path / "m.json", BreathingModel(gen, ss, stationary(gen), ModelMeta()))
        doc = json.loads((tmp_path / "m.json").read_text())
        doc["pi"] = [0.2] * 5
        (tmp_path / "m.json").write_text(json.dumps(doc))
        np.testing.assert_array_equal(load_model(tmp_path / "m.json").stationary.probabilities, stationary(gen).probabilities)

    def test_mismatched_sizes(self, tmp_path):
        doc = {
            "rates_hz": HEALTHY_RATES,
            "has_apnea": False,
            "has_movement": True,
            "lambda_per_s": TABLE_2A_LAMBDA,
            "pi": TABLE_2A_PI,
        }
        (tmp_path / "m.json").write_text(json.dumps(doc))
        with pytest.raises(DataFormatError):
            load_model(tmp_path / "m.json")

    def test_schedule_round_trip(self, tmp_path, stripped_apnea_patient):
        gen, ss = stripped_apnea_patient
        schedule = simulate(gen, ss, 500.0, seed=4)
        save_schedule(tmp_path / "s.csv", schedule)
        loaded = load_schedule(tmp_path / "s.csv", ss)
        np.testing.assert_array_equal(loaded.states, schedule.states)
        np.testing.assert_array_equal(loaded.sojourns, schedule.sojourns)
        assert loaded.seed == 4

    def test_servo_export(self, apnea_patient):
        _, ss = apnea_patient
        schedule = SojournSchedule([0, 3, 4], [12.0, 30.0, 5.0], ss)
        assert export_servo_schedule(schedule) == [(0, 0.033, 12.0), (3, 1.32, 30.0), (4, 3.33, 5.0)]
