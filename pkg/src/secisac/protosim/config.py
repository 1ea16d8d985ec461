"""Simulation configuration and the block schedule it implies."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

from ..chanfam import StateChannelFamily, family_from_dict, universal_input
from ..probcore import InvalidInputError, Seed
from ..region import InputPolicy, check_policy

EVE_MODES = ("iid-surrogate", "exact-mixture")


@dataclass(frozen=True, eq=False)
class SimConfig:
    """One Monte Carlo campaign at a fixed horizon ``n``.

    ``horizon_factor`` sets how far past ``n`` trials may run before they are
    censored; ``decode`` turns on exhaustive message decoding at the receiver,
    which is only practical for small codebooks.
    """

    n: int
    epsilon: float
    family: StateChannelFamily
    policy: InputPolicy
    true_state: int = 0
    trials: int = 1000
    seed: Seed = field(default_factory=lambda: Seed(0))
    beta: float = 0.25
    delta: float = 0.1
    codebook_cap: int = 4096
    eve_mode: str = "iid-surrogate"
    horizon_factor: float = 8.0
    decode: bool = False

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 4:
            raise InvalidInputError(f"n must be an integer >= 4, got {self.n!r}")
        if not 0.0 < self.beta < 0.5:
            raise InvalidInputError(f"beta must lie in (0, 1/2), got {self.beta}")
        if not 0.0 < self.delta < 1.0:
            raise InvalidInputError(f"delta must lie in (0, 1), got {self.delta}")
        if not math.isfinite(self.epsilon):
            raise InvalidInputError("epsilon must be finite")
        if self.trials < 1:
            raise InvalidInputError("trials must be positive")
        if not 0 <= self.true_state < self.family.num_states:
            raise InvalidInputError(f"true_state {self.true_state} outside [0, {self.family.num_states})")
        if self.codebook_cap < 2:
            raise InvalidInputError("codebook_cap must be at least 2")
        if self.eve_mode not in EVE_MODES:
            raise InvalidInputError(f"eve_mode must be one of {EVE_MODES}, got {self.eve_mode!r}")
        if self.horizon_factor < 1.0:
            raise InvalidInputError("horizon_factor must be >= 1")
        check_policy(self.family, self.policy)
        if self.block_len < 2:
            raise InvalidInputError("block length ceil(sqrt(n)) must be at least 2")
        if self.universal_blocks * self.block_len >= self.n:
            raise InvalidInputError("universal phase ceil(n^beta) * N must be shorter than n")
        if self.message_len < 1:
            raise InvalidInputError(f"delta = {self.delta} leaves no room for the message in a block of {self.block_len}")

    @property
    def block_len(self) -> int:
        return math.isqrt(self.n - 1) + 1  # ceil(sqrt(n))

    @property
    def universal_blocks(self) -> int:
        return math.ceil(self.n**self.beta - 1e-12)

    @property
    def signal_len(self) -> int:
        return math.ceil(self.delta * self.block_len - 1e-12)

    @property
    def message_len(self) -> int:
        return self.block_len - self.signal_len

    @property
    def max_blocks(self) -> int:
        return max(int(math.floor(self.horizon_factor * self.n)) // self.block_len, 1)

    def with_(self, **changes) -> "SimConfig":
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(changes)
        return SimConfig(**data)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "epsilon": self.epsilon,
            "family": self.family.to_dict(),
            "policy": self.policy.to_dict(),
            "true_state": self.true_state,
            "trials": self.trials,
            "seed": self.seed.master_seed,
            "beta": self.beta,
            "delta": self.delta,
            "codebook_cap": self.codebook_cap,
            "eve_mode": self.eve_mode,
            "horizon_factor": self.horizon_factor,
            "decode": self.decode,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict, family: StateChannelFamily | None = None, policy: InputPolicy | None = None):
        data = dict(data)
        for key in ("n", "epsilon"):
            if key not in data:
                raise InvalidInputError(f"sim config is missing field {key!r}")
        fam = family or family_from_dict(data.pop("family", {"preset": "table1"}))
        data.pop("family", None)
        pol = policy
        if pol is None:
            pol = InputPolicy.from_dict(data["policy"]) if "policy" in data else default_policy(fam)
        data.pop("policy", None)
        seed = data.pop("seed", 0)
        known = set(cls.__dataclass_fields__) - {"family", "policy", "seed"}
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(f"unknown sim config fields: {sorted(unknown)}")
        return cls(family=fam, policy=pol, seed=Seed(int(seed)), **data)


def default_policy(fam: StateChannelFamily, rho: float = 0.0) -> InputPolicy:
    """Every state uses the universal sensing input."""
    return InputPolicy.common(universal_input(fam).p_tilde, fam.num_states, rho)
