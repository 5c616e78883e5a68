"""Small classical Ising instances with exhaustively enumerated state space.

Configurations are encoded as integers: bit i of the index holds spin i,
with a set bit meaning sigma_i = +1. The classical energy is

    E(sigma) = -sum_{i<j} J_ij sigma_i sigma_j - sum_i h_i sigma_i + offset

where the offset is chosen at construction so the minimum over all 2^N
configurations is exactly zero.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

MAX_SPINS = 20
GROUND_TOLERANCE = 1e-9

TOPOLOGIES = ("chain-periodic", "chain-open", "general")


def spins_from_index(index: int, n_spins: int) -> np.ndarray:
    """Decode a configuration index into a +/-1 spin vector of length n_spins."""
    bits = (index >> np.arange(n_spins)) & 1
    return 2 * bits.astype(np.int8) - 1


def index_from_spins(spins) -> int:
    """Encode a +/-1 spin vector into its configuration index."""
    index = 0
    for i, s in enumerate(spins):
        if s == 1:
            index |= 1 << i
        elif s != -1:
            raise ValueError(f"spin {i} is {s}, expected +1 or -1")
    return index


@dataclass(frozen=True, order=True)
class SpinConfiguration:
    """One classical configuration, stored as its bit-encoded index."""

    index: int

    def spins(self, n_spins: int) -> np.ndarray:
        return spins_from_index(self.index, n_spins)

    @classmethod
    def from_spins(cls, spins) -> "SpinConfiguration":
        return cls(index_from_spins(spins))


@dataclass(frozen=True)
class IsingModel:
    """Immutable Ising instance. couplings holds (i, j, J) with i < j."""

    n_spins: int
    couplings: tuple = ()
    fields: tuple = ()
    topology: str = "general"
    energy_offset: float = field(init=False, default=0.0)

    def __post_init__(self):
        if not 1 <= self.n_spins <= MAX_SPINS:
            raise ValueError(f"n_spins must be in [1, {MAX_SPINS}], got {self.n_spins}")
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        object.__setattr__(self, "couplings", tuple((int(i), int(j), float(jij)) for i, j, jij in self.couplings))
        object.__setattr__(self, "fields", tuple((int(i), float(h)) for i, h in self.fields))
        for i, j, _ in self.couplings:
            if not (0 <= i < j < self.n_spins):
                raise ValueError(f"coupling ({i}, {j}) must satisfy 0 <= i < j < n_spins")
        for i, _ in self.fields:
            if not 0 <= i < self.n_spins:
                raise ValueError(f"field index {i} out of range")
        # Offset fixes the shifted ground energy at exactly zero; x - x == 0 in IEEE.
        object.__setattr__(self, "energy_offset", -float(_unshifted_diagonal(self).min()))

    @property
    def dim(self) -> int:
        return 1 << self.n_spins

    def unshifted_energy(self, config) -> float:
        return self.energy(config) - self.energy_offset

    def energy(self, config) -> float:
        """Shifted classical energy of one configuration (index or SpinConfiguration)."""
        index = config.index if isinstance(config, SpinConfiguration) else int(config)
        if not 0 <= index < self.dim:
            raise ValueError(f"configuration index {index} out of range for N={self.n_spins}")
        return float(h0_diagonal(self)[index])


@dataclass(frozen=True)
class GroundSet:
    """All configurations at the shifted ground energy (zero)."""

    configurations: frozenset
    degeneracy: int

    @property
    def indices(self) -> tuple:
        return tuple(sorted(c.index for c in self.configurations))


def _unshifted_diagonal(model: IsingModel) -> np.ndarray:
    idx = np.arange(1 << model.n_spins)
    energies = np.zeros(idx.shape[0])
    for i, j, jij in model.couplings:
        si = (((idx >> i) & 1) * 2 - 1).astype(np.float64)
        sj = (((idx >> j) & 1) * 2 - 1).astype(np.float64)
        energies -= jij * si * sj
    for i, h in model.fields:
        si = (((idx >> i) & 1) * 2 - 1).astype(np.float64)
        energies -= h * si
    return energies


@functools.lru_cache(maxsize=64)
def h0_diagonal(model: IsingModel) -> np.ndarray:
    """Shifted energies of all 2^N configurations, as a read-only vector."""
    diag = _unshifted_diagonal(model) + model.energy_offset
    diag.flags.writeable = False
    return diag


def energy(model: IsingModel, config) -> float:
    return model.energy(config)


def ground_states(model: IsingModel, tolerance: float = GROUND_TOLERANCE) -> GroundSet:
    """All configurations within `tolerance` of the shifted minimum (zero)."""
    diag = h0_diagonal(model)
    members = np.flatnonzero(diag <= tolerance)
    return GroundSet(
        configurations=frozenset(SpinConfiguration(int(i)) for i in members),
        degeneracy=int(members.size),
    )


def ferromagnetic_chain(n_spins: int, j: float = 1.0, h: float = 0.0, periodic: bool = True) -> IsingModel:
    """Uniform-J chain, optionally with a uniform field h on every site."""
    couplings = [(i, i + 1, j) for i in range(n_spins - 1)]
    if periodic and n_spins > 2:
        couplings.append((0, n_spins - 1, j))
    fields = [(i, h) for i in range(n_spins)] if h != 0.0 else []
    topology = "chain-periodic" if periodic else "chain-open"
    return IsingModel(n_spins, tuple(couplings), tuple(fields), topology)


def random_model(n_spins: int, rng: np.random.Generator,
                 j_scale: float = 0.6, h_scale: float = 0.3) -> IsingModel:
    """Random instance: a ring plus ~N/2 random chords, bounded |J| and |h|.

    The bounded energy spread keeps exp(beta*H0/2) factors well inside the
    floating-point range for the betas used in tests.
    """
    pairs = {(i, (i + 1) % n_spins) for i in range(n_spins)} if n_spins >= 3 else {(0, 1)} if n_spins == 2 else set()
    pairs = {(min(i, j), max(i, j)) for i, j in pairs}
    for _ in range(n_spins // 2):
        i, j = rng.choice(n_spins, size=2, replace=False)
        pairs.add((min(int(i), int(j)), max(int(i), int(j))))
    couplings = tuple((i, j, float(rng.uniform(-j_scale, j_scale))) for i, j in sorted(pairs))
    fields = tuple((i, float(rng.uniform(-h_scale, h_scale))) for i in range(n_spins))
    return IsingModel(n_spins, couplings, fields, "general")


def model_from_dict(data: dict, where: str = "model") -> IsingModel:
    """Build a model from a parsed config table. Errors name the offending entry."""
    if "n_spins" not in data:
        raise ConfigError(f"{where}: missing required key 'n_spins'")
    try:
        n_spins = int(data["n_spins"])
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.n_spins: expected an integer, got {data['n_spins']!r}")
    if not 1 <= n_spins <= MAX_SPINS:
        raise ConfigError(f"{where}.n_spins: must be in [1, {MAX_SPINS}], got {n_spins}")

    topology = data.get("topology", "general")
    if topology not in TOPOLOGIES:
        raise ConfigError(f"{where}.topology: expected one of {TOPOLOGIES}, got {topology!r}")

    if topology.startswith("chain") and "couplings" not in data:
        j = data.get("j", 1.0)
        h = data.get("h", 0.0)
        model = ferromagnetic_chain(n_spins, j=float(j), h=float(h),
                                    periodic=(topology == "chain-periodic"))
        extra = _parsed_fields(data.get("fields", []), n_spins, where)
        if extra:
            merged = dict(model.fields)
            merged.update(dict(extra))
            model = IsingModel(n_spins, model.couplings, tuple(sorted(merged.items())), topology)
        return model

    couplings = []
    for k, entry in enumerate(data.get("couplings", [])):
        try:
            i, j, jij = entry
            i, j, jij = int(i), int(j), float(jij)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}.couplings[{k}]: expected [i, j, J], got {entry!r}")
        if not (0 <= i < j < n_spins):
            raise ConfigError(f"{where}.couplings[{k}]: need 0 <= i < j < {n_spins}, got ({i}, {j})")
        couplings.append((i, j, jij))
    fields = _parsed_fields(data.get("fields", []), n_spins, where)
    return IsingModel(n_spins, tuple(couplings), tuple(fields), topology)


def _parsed_fields(entries, n_spins: int, where: str):
    fields = []
    for k, entry in enumerate(entries):
        try:
            i, h = entry
            i, h = int(i), float(h)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}.fields[{k}]: expected [i, h], got {entry!r}")
        if not 0 <= i < n_spins:
            raise ConfigError(f"{where}.fields[{k}]: site {i} out of range for N={n_spins}")
        fields.append((i, h))
    return tuple(fields)
