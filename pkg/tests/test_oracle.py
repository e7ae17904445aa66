import itertools

import numpy as np
import pytest

from src.dynamics import random_config, run_trajectory
from src.errors import InvalidArgumentError, SizeLimitError
from src.oracle import ORACLE_MAX_N, brute_force_ground_state, is_one_flip_stable
from src.sk_model import energy, generate_couplings


def _all_configs(n):
    return (np.array(c) for c in itertools.product([-1, 1], repeat=n))


def test_two_spin_ground_state(pair):
    truth = brute_force_ground_state(pair)
    assert truth.energy_per_spin == -0.5
    assert [c.tolist() for c in truth.argmin_configs] == [[1, 1]]


def test_single_spin_ground_state():
    truth = brute_force_ground_state(generate_couplings(1, 3))
    assert truth.energy_per_spin == 0.0
    assert [c.tolist() for c in truth.argmin_configs] == [[1]]


def test_matches_independent_enumeration(instance):
    n = 12
    J = instance(n, seed=17)
    expected = min(energy(J, sigma) for sigma in _all_configs(n)) / n
    truth = brute_force_ground_state(J)
    assert truth.energy_per_spin == pytest.approx(expected, abs=1e-12)


def test_minimizers_are_canonical_and_stable(instance):
    J = instance(10, seed=2)
    truth = brute_force_ground_state(J)
    assert truth.argmin_configs
    for config in truth.argmin_configs:
        assert config[0] == 1
        assert energy(J, config) / J.n == pytest.approx(truth.energy_per_spin, abs=1e-12)
        assert is_one_flip_stable(J, config)


def test_stable_state_count_matches_direct_count(instance):
    n = 8
    J = instance(n, seed=8)
    direct = sum(is_one_flip_stable(J, sigma) for sigma in _all_configs(n))
    assert brute_force_ground_state(J, count_stable=True).n_stable_states == direct


def test_two_spin_stable_states(pair):
    assert brute_force_ground_state(pair, count_stable=True).n_stable_states == 2
    assert brute_force_ground_state(pair).n_stable_states is None


def test_refuses_large_instances():
    with pytest.raises(SizeLimitError):
        brute_force_ground_state(generate_couplings(ORACLE_MAX_N + 1, 0))


def test_descent_never_beats_the_ground_state(instance):
    n = 10
    J = instance(n, seed=31)
    floor = brute_force_ground_state(J).energy_per_spin
    for k in range(30):
        rng = np.random.default_rng(k)
        record = run_trajectory(J, random_config(n, rng), 10.0, rng, start_seed=k)
        assert record.final_energy_per_spin >= floor - 1e-12


# ----- stability -----

def test_stability_examples(pair):
    assert is_one_flip_stable(pair, [1, 1])
    assert is_one_flip_stable(pair, [-1, -1])
    assert not is_one_flip_stable(pair, [1, -1])


def test_stability_is_flip_symmetric(instance, rng):
    J = instance(15)
    for _ in range(50):
        sigma = random_config(15, rng)
        assert is_one_flip_stable(J, sigma) == is_one_flip_stable(J, -sigma)


def test_stability_rejects_wrong_dimension(pair):
    with pytest.raises(InvalidArgumentError):
        is_one_flip_stable(pair, [1, 1, 1])
