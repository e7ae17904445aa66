import math

import numpy as np
import pytest
from scipy import stats

from src.dynamics import (
    Converged,
    Flipped,
    LambdaParam,
    RunRecord,
    default_max_flips,
    random_config,
    run_trajectory,
    sample_depth,
    select_site,
    step,
)
from src.errors import InvalidArgumentError
from src.oracle import is_one_flip_stable
from src.sk_model import delta_spectrum, energy, init_state

LAMBDA_GRID = [1, 10, 25, 45, 70, 100]


# ----- lambda -----

@pytest.mark.parametrize("value", [0.0, -1.0, math.inf, math.nan])
def test_lambda_must_be_positive_and_finite(value):
    with pytest.raises(InvalidArgumentError):
        LambdaParam(value)


def test_lambda_of_passes_instances_through():
    lam = LambdaParam(2.5)
    assert LambdaParam.of(lam) is lam
    assert LambdaParam.of(3).value == 3.0


# ----- depth sampler -----

def test_unit_uniform_gives_zero_depth(fixed_uniform):
    assert sample_depth(3.0, fixed_uniform(0.0)) == 0.0


def test_depth_at_exp_minus_lambda_is_minus_one(fixed_uniform):
    lam = 4.0
    assert sample_depth(lam, fixed_uniform(1.0 - math.exp(-lam))) == pytest.approx(-1.0, abs=1e-12)


def test_depths_are_never_positive(rng):
    assert np.all(sample_depth(0.5, rng, size=10_000) <= 0.0)


def test_depth_moments(rng):
    lam = 10.0
    draws = sample_depth(lam, rng, size=1_000_000)
    assert draws.mean() == pytest.approx(-1.0 / lam, abs=3e-4)
    assert draws.var() == pytest.approx(1.0 / lam**2, rel=0.05)


def test_scaled_depths_follow_unit_exponential(rng):
    lam = 7.0
    draws = sample_depth(lam, rng, size=100_000)
    assert stats.kstest(-lam * draws, "expon").pvalue > 0.01


def test_sampler_rejects_bad_lambda(rng):
    with pytest.raises(InvalidArgumentError):
        sample_depth(0.0, rng)


# ----- site selection -----

def test_select_closest_descending_site():
    assert select_site(np.array([-3.0, -1.0, 2.0]), -0.9) == 1
    assert select_site(np.array([-3.0, -1.0, 2.0]), -10.0) == 0


def test_select_ignores_ascending_and_neutral_sites():
    assert select_site(np.array([0.5, 0.0, -0.2]), 0.0) == 2


def test_select_ties_go_to_smallest_index():
    assert select_site(np.array([-1.0, -1.0]), -1.0) == 0
    assert select_site(np.array([2.0, -1.0, -3.0]), -2.0) == 1


def test_select_returns_none_without_descending_sites():
    assert select_site(np.array([0.0, 1.0, 2.0]), -0.5) is None


def test_large_lambda_prefers_shallowest_drop(rng):
    spectrum = np.array([-3.0, -1.0, -0.05, 2.0])
    picks = [select_site(spectrum, sample_depth(100.0, rng)) for _ in range(2000)]
    assert picks.count(2) / len(picks) > 0.9


def test_small_lambda_prefers_deepest_drop(rng):
    spectrum = np.array([-3.0, -1.0, -0.05, 2.0])
    picks = [select_site(spectrum, sample_depth(0.01, rng)) for _ in range(2000)]
    assert picks.count(0) / len(picks) > 0.9


# ----- single steps -----

def test_step_from_stable_state_consumes_no_draw(pair, rng):
    state = init_state(pair, [1, 1])
    before = rng.bit_generator.state
    assert step(state, 1.0, rng) == Converged()
    assert rng.bit_generator.state == before
    assert state.flips == 0


def test_step_two_spin_descent(pair, rng):
    state = init_state(pair, [1, -1])
    outcome = step(state, 1.0, rng)
    assert isinstance(outcome, Flipped)
    assert state.energy == -1.0
    assert state.flips == 1
    assert step(state, 1.0, rng) == Converged()


@pytest.mark.parametrize("n", [2, 10, 50, 200])
def test_every_step_strictly_lowers_the_energy(instance, rng, n):
    J = instance(n)
    state = init_state(J, random_config(n, rng))
    while True:
        spectrum = delta_spectrum(state).copy()
        before = state.energy
        outcome = step(state, 10.0, rng)
        if isinstance(outcome, Converged):
            break
        assert spectrum[outcome.site] < 0
        assert state.energy - before == pytest.approx(2 * spectrum[outcome.site], abs=1e-9)
        assert state.energy < before
    assert state.energy == pytest.approx(energy(J, state.spins), abs=1e-9)


# ----- trajectories -----

def test_trajectory_on_two_spins(pair, rng):
    record = run_trajectory(pair, [1, -1], 1.0, rng, start_seed=1)
    assert record.flips == 1
    assert record.converged
    assert record.final_energy_per_spin == -0.5


def test_trajectory_from_stable_start_makes_no_flips(pair, rng):
    record = run_trajectory(pair, [-1, -1], 5.0, rng, start_seed=2)
    assert record.flips == 0
    assert record.converged
    assert record.final_energy_per_spin == -0.5


@pytest.mark.parametrize("lam", LAMBDA_GRID)
def test_converged_endpoints_are_stable(instance, lam):
    J = instance(10, seed=4)
    for k in range(20):
        rng = np.random.default_rng(k)
        record = run_trajectory(J, random_config(10, rng), lam, rng, start_seed=k)
        assert record.converged
        assert is_one_flip_stable(J, record.final_spins)


def test_trajectories_replay_from_the_same_seed(instance):
    J = instance(40)
    records = []
    for _ in range(2):
        rng = np.random.default_rng(123)
        records.append(run_trajectory(J, random_config(40, rng), 25.0, rng, start_seed=123))
    assert records[0].flips == records[1].flips
    assert records[0].final_energy_per_spin == records[1].final_energy_per_spin


def test_trajectory_records_its_start_seed(pair, rng):
    assert run_trajectory(pair, [1, -1], 1.0, rng, start_seed=77).start_seed == 77
    with pytest.raises(TypeError):
        run_trajectory(pair, [1, -1], 1.0, rng)
    with pytest.raises(TypeError):
        RunRecord(flips=0, final_energy_per_spin=0.0, converged=True)


def test_flip_cap_truncates_without_raising(instance, rng):
    J = instance(50)
    record = run_trajectory(J, random_config(50, rng), 100.0, rng, max_flips=1, start_seed=3)
    assert record.flips == 1
    assert not record.converged


def test_flip_cap_must_be_positive(pair, rng):
    with pytest.raises(InvalidArgumentError):
        run_trajectory(pair, [1, -1], 1.0, rng, max_flips=0, start_seed=4)


def test_default_cap_scales_with_n_squared():
    assert default_max_flips(10) == 10_000


def test_reluctant_descent_takes_more_flips_than_greedy(instance):
    n = 60
    J = instance(n, seed=21)

    def mean_flips(lam):
        flips = []
        for k in range(10):
            rng = np.random.default_rng(1000 + k)
            flips.append(run_trajectory(J, random_config(n, rng), lam, rng, start_seed=1000 + k).flips)
        return np.mean(flips)

    assert mean_flips(100.0) > mean_flips(1.0)


# ----- random starts -----

def test_random_config_values(rng):
    sigma = random_config(1, rng)
    assert sigma.tolist() in ([1], [-1])
    assert sigma.dtype == np.int8


def test_random_config_is_balanced(rng):
    sigma = random_config(100_000, rng)
    assert np.mean(sigma == 1) == pytest.approx(0.5, abs=0.01)


def test_random_config_is_reproducible():
    a = random_config(30, np.random.default_rng(5))
    b = random_config(30, np.random.default_rng(5))
    assert np.array_equal(a, b)


def test_random_config_rejects_empty_system(rng):
    with pytest.raises(InvalidArgumentError):
        random_config(0, rng)
