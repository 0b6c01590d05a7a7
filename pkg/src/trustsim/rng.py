"""Counter-based random streams.

Every draw is a hash of ``(seed, agent, purpose, counter)``, so a stream's
values do not depend on how many other streams exist or in which order they
are consumed. Adding a vehicle never perturbs another vehicle's decisions.
"""
from __future__ import annotations

import hashlib

_MASK64 = (1 << 64) - 1
_INV53 = 1.0 / (1 << 53)


def _prefix(seed: int, agent: str, purpose: str):
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    h = hashlib.blake2b(digest_size=8, person=b"trustsim-rng")
    h.update(seed.to_bytes(8, "little"))
    h.update(f"{agent}\x1f{purpose}\x1f".encode())
    return h


def draw(seed: int, agent: str, purpose: str, counter: int) -> float:
    """Uniform value in [0, 1) for one stream position."""
    h = _prefix(seed, agent, purpose)
    h.update(counter.to_bytes(8, "little"))
    return (int.from_bytes(h.digest(), "little") >> 11) * _INV53


class RngStream:
    """A positioned view onto one ``(seed, agent, purpose)`` stream.

    ``random()`` returns the draw at the current counter and advances it.
    """

    __slots__ = ("seed", "agent", "purpose", "counter", "_h")

    def __init__(self, seed: int, agent: str, purpose: str, counter: int = 0):
        self.seed = seed
        self.agent = agent
        self.purpose = purpose
        self.counter = counter
        self._h = _prefix(seed, agent, purpose)

    def random(self) -> float:
        h = self._h.copy()
        h.update(self.counter.to_bytes(8, "little"))
        self.counter += 1
        return (int.from_bytes(h.digest(), "little") >> 11) * _INV53

    def bernoulli(self, p: float) -> bool:
        return self.random() < p

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        return min(int(self.random() * n), n - 1)

    def at(self, counter: int) -> "RngStream":
        return RngStream(self.seed, self.agent, self.purpose, counter)

    def __repr__(self):
        return (f"RngStream(seed={self.seed}, agent={self.agent!r}, "
                f"purpose={self.purpose!r}, counter={self.counter})")
