"""
Exact ground truth for small instances: exhaustive ground-state search
and 1-spin-flip stability checks.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import SizeLimitError
from .sk_model import CouplingMatrix, SpinLike, as_spin_config

logger = logging.getLogger(__name__)

ORACLE_MAX_N = 24

# Configurations evaluated per numpy batch during enumeration
_CHUNK = 1 << 15

_MINIMIZER_TOL = 1e-12


@dataclass
class GroundTruth:
    """
    Exact minimum of one instance. Minimizers are canonicalized to spin 0 = +1,
    one representative per global-flip pair.
    """

    energy_per_spin: float
    argmin_configs: List[np.ndarray] = field(default_factory=list)
    n_stable_states: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "energy_per_spin": self.energy_per_spin,
            "argmin_configs": [cfg.astype(int).tolist() for cfg in self.argmin_configs],
            "n_stable_states": self.n_stable_states,
        }


def brute_force_ground_state(J: CouplingMatrix, count_stable: bool = False) -> GroundTruth:
    """
    Enumerate the 2^(n-1) configurations with spin 0 fixed to +1.

    With count_stable, also counts 1-spin-flip stable configurations over
    the full 2^n space (twice the half-space count by flip symmetry).
    """
    n = J.n
    if n > ORACLE_MAX_N:
        raise SizeLimitError(f"exhaustive search is capped at n={ORACLE_MAX_N}, got n={n}")

    total = 1 << (n - 1)
    bits = np.arange(n - 1, dtype=np.int64)

    best = np.inf
    minimizers: List[np.ndarray] = []
    stable = 0

    for start in range(0, total, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        spins = np.ones((codes.size, n), dtype=np.float64)
        spins[:, 1:] = 1.0 - 2.0 * ((codes[:, None] >> bits) & 1)

        fields = spins @ J.entries
        energies = -0.5 * np.einsum("ki,ki->k", spins, fields)

        if count_stable:
            stable += int(np.count_nonzero(np.all(spins * fields >= 0.0, axis=1)))

        chunk_min = float(energies.min())
        if chunk_min < best - _MINIMIZER_TOL:
            best = chunk_min
            minimizers = []
        if chunk_min <= best + _MINIMIZER_TOL:
            for row in np.flatnonzero(energies <= best + _MINIMIZER_TOL):
                minimizers.append(spins[row].astype(np.int8))
            best = min(best, chunk_min)

    # a later, slightly lower chunk minimum may leave stale near-ties behind
    minimizers = [cfg for cfg in minimizers if _energy(J, cfg) <= best + _MINIMIZER_TOL]

    logger.debug(f"Enumerated {total} configurations for n={n}: E/N={best / n:.12f}")
    return GroundTruth(
        energy_per_spin=best / n,
        argmin_configs=minimizers,
        n_stable_states=2 * stable if count_stable else None,
    )


def is_one_flip_stable(J: CouplingMatrix, sigma: SpinLike) -> bool:
    """True iff no single flip lowers the energy (dE_i >= 0 for all i)."""
    spins = as_spin_config(sigma, J.n).astype(np.float64)
    return bool(np.all(spins * (J.entries @ spins) >= 0.0))


def _energy(J: CouplingMatrix, spins: np.ndarray) -> float:
    s = spins.astype(np.float64)
    return float(-0.5 * s @ J.entries @ s)
