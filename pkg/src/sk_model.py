"""
Sherrington-Kirkpatrick instances and the energy algebra used by
single-spin-flip dynamics.

Conventions:
    H(J, s) = -1/2 * sum_ij J_ij s_i s_j          (total, not per spin)
    h_i     = sum_{j != i} J_ij s_j               (local field)
    dE_i    = s_i * h_i                           (selection quantity)

Flipping spin i changes H by exactly 2 * dE_i. The dynamics select moves
on dE_i itself so that the depth parameter keeps its usual scale; the
factor 2 only appears in the energy bookkeeping.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InvalidArgumentError

logger = logging.getLogger(__name__)

# Identifies the (n, seed) -> matrix mapping. Bump when the sampling changes.
GENERATOR_VERSION = "numpy-pcg64-standard-normal/1"

SEED_MAX = 2**64


# ============================================================
# DOMAIN TYPES
# ============================================================

@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """
    Quenched disorder of one SK instance.

    `entries` is a dense symmetric float64 matrix with a zero diagonal.
    It is made read-only on construction so one instance can be shared by
    any number of trajectories.
    """

    n: int
    entries: np.ndarray = field(repr=False)
    seed: Optional[int] = None
    generator_version: str = GENERATOR_VERSION

    def __post_init__(self):
        self.entries.setflags(write=False)

    @classmethod
    def from_entries(cls, entries, seed: Optional[int] = None) -> "CouplingMatrix":
        """Build a validated instance from explicit couplings."""
        matrix = np.array(entries, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
            raise InvalidArgumentError(f"couplings must be a non-empty square matrix, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise InvalidArgumentError("couplings must be finite")
        if not np.array_equal(matrix, matrix.T):
            raise InvalidArgumentError("couplings must be symmetric")
        if np.any(np.diag(matrix) != 0.0):
            raise InvalidArgumentError("couplings must have a zero diagonal")
        return cls(n=matrix.shape[0], entries=matrix, seed=seed, generator_version="explicit")


@dataclass(eq=False)
class DynamicsState:
    """
    Spins of one trajectory plus incrementally maintained local fields,
    total energy and flip counter. Owned by a single trajectory.
    """

    couplings: CouplingMatrix = field(repr=False)
    spins: np.ndarray
    local_fields: np.ndarray
    energy: float
    flips: int = 0

    @property
    def n(self) -> int:
        return self.couplings.n

    @property
    def energy_per_spin(self) -> float:
        return self.energy / self.couplings.n

    def reanchor(self) -> "DynamicsState":
        """Recompute fields and energy from scratch to drop accumulated drift."""
        self.local_fields = _local_fields(self.couplings, self.spins)
        self.energy = _energy_from_fields(self.spins, self.local_fields)
        return self


SpinLike = Union[np.ndarray, Sequence[int]]


def as_spin_config(values: SpinLike, n: Optional[int] = None) -> np.ndarray:
    """
    Validate a spin configuration and return it as an int8 array of +-1.
    """
    spins = np.asarray(values)
    if spins.ndim != 1:
        raise InvalidArgumentError(f"spin configuration must be one-dimensional, got shape {spins.shape}")
    if n is not None and spins.shape[0] != n:
        raise InvalidArgumentError(f"spin configuration has length {spins.shape[0]}, instance has n={n}")
    if not np.all((spins == 1) | (spins == -1)):
        raise InvalidArgumentError("every spin must be exactly -1 or +1")
    return spins.astype(np.int8)


# ============================================================
# OPERATIONS
# ============================================================

def generate_couplings(n: int, seed: int) -> CouplingMatrix:
    """
    Draw an SK instance: J_ij ~ N(0, 1/n) i.i.d. above the diagonal,
    mirrored below, zero diagonal. A pure function of (n, seed).
    """
    if n < 1:
        raise InvalidArgumentError(f"system size must be >= 1, got {n}")
    if not 0 <= seed < SEED_MAX:
        raise InvalidArgumentError(f"seed must be a 64-bit unsigned integer, got {seed}")

    rng = np.random.default_rng(seed)
    upper = np.triu_indices(n, k=1)
    entries = np.zeros((n, n), dtype=np.float64)
    entries[upper] = rng.standard_normal(len(upper[0])) / np.sqrt(n)
    entries = entries + entries.T

    return CouplingMatrix(n=n, entries=entries, seed=int(seed))


def energy(J: CouplingMatrix, sigma: SpinLike) -> float:
    """Total energy H(J, sigma) by the full double sum."""
    spins = as_spin_config(sigma, J.n).astype(np.float64)
    return float(-0.5 * spins @ J.entries @ spins)


def init_state(J: CouplingMatrix, sigma: SpinLike) -> DynamicsState:
    """Fresh dynamics state with fields and energy computed from scratch."""
    spins = as_spin_config(sigma, J.n).copy()
    fields = _local_fields(J, spins)
    return DynamicsState(
        couplings=J,
        spins=spins,
        local_fields=fields,
        energy=_energy_from_fields(spins, fields),
        flips=0,
    )


def delta_spectrum(state: DynamicsState) -> np.ndarray:
    """dE_i = s_i * h_i for every site. Negative entries mark descending flips."""
    return state.spins * state.local_fields


def apply_flip(state: DynamicsState, k: int) -> DynamicsState:
    """
    Flip spin k in place and update fields and energy in O(n).

    h_k itself is unchanged because J_kk = 0.
    """
    if not 0 <= k < state.n:
        raise InvalidArgumentError(f"site index {k} out of range for n={state.n}")

    old_spin = int(state.spins[k])
    delta = old_spin * state.local_fields[k]

    state.local_fields -= (2.0 * old_spin) * state.couplings.entries[k]
    state.spins[k] = -old_spin
    state.energy += 2.0 * delta
    state.flips += 1
    return state


# ============================================================
# INSTANCE DUMP / LOAD
# ============================================================

def save_instance(J: CouplingMatrix, path: Union[str, Path], include_entries: bool = False) -> Path:
    """
    Write an instance to an .npz file. Without entries the file only stores
    the identity (n, seed, generator version) and is regenerated on load.
    """
    if J.seed is None and not include_entries:
        raise InvalidArgumentError("an instance without a seed can only be saved with its entries")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "n": np.int64(J.n),
        "seed": np.uint64(J.seed if J.seed is not None else 0),
        "has_seed": np.bool_(J.seed is not None),
        "generator_version": np.array(J.generator_version),
    }
    if include_entries:
        payload["entries"] = np.asarray(J.entries)

    with open(path, "wb") as f:
        np.savez_compressed(f, **payload)
    logger.debug(f"Saved instance n={J.n} seed={J.seed} to {path}")
    return path


def load_instance(path: Union[str, Path]) -> CouplingMatrix:
    """Read an instance written by save_instance."""
    with np.load(Path(path)) as data:
        n = int(data["n"])
        seed = int(data["seed"]) if bool(data["has_seed"]) else None
        version = str(data["generator_version"])

        if "entries" in data.files:
            entries = np.array(data["entries"], dtype=np.float64)
            if entries.shape != (n, n):
                raise InvalidArgumentError(f"stored entries have shape {entries.shape}, expected ({n}, {n})")
            return CouplingMatrix(n=n, entries=entries, seed=seed, generator_version=version)

    if version != GENERATOR_VERSION:
        raise InvalidArgumentError(
            f"instance was generated by {version!r}; this build regenerates with {GENERATOR_VERSION!r}"
        )
    return generate_couplings(n, seed)


# ============================================================
# HELPERS
# ============================================================

def _local_fields(J: CouplingMatrix, spins: np.ndarray) -> np.ndarray:
    return J.entries @ spins.astype(np.float64)


def _energy_from_fields(spins: np.ndarray, fields: np.ndarray) -> float:
    return float(-0.5 * np.dot(spins.astype(np.float64), fields))
