"""Masses and reduced masses for a three-particle system.

All masses are in MeV (natural units, hbar = c = 1).  Partition ``i``
designates particle ``i`` as the spectator; its interacting pair is the
remaining two particles in cyclic order: 1 -> (2,3), 2 -> (3,1), 3 -> (1,2).
Every mass ratio used by the kinematics, kernel and singularity modules is
derived from this one type.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError

#: spectator index -> (pair indices) in cyclic order
SPECTATOR_PAIR = {1: (2, 3), 2: (3, 1), 3: (1, 2)}


@dataclass(frozen=True)
class MassSet:
    m1: float
    m2: float
    m3: float

    def __post_init__(self):
        for name in ("m1", "m2", "m3"):
            if not getattr(self, name) > 0.0:
                raise ValidationError(f"mass {name} must be positive, got {getattr(self, name)!r}")

    @property
    def total(self) -> float:
        """M = m1 + m2 + m3."""
        return self.m1 + self.m2 + self.m3

    def mass(self, i: int) -> float:
        if i not in (1, 2, 3):
            raise ValidationError(f"particle index must be 1, 2 or 3, got {i!r}")
        return (self.m1, self.m2, self.m3)[i - 1]

    def mu(self, i: int, j: int) -> float:
        """Pair reduced mass m_i m_j / (m_i + m_j)."""
        if i == j:
            raise ValidationError("pair reduced mass needs two distinct particles")
        mi, mj = self.mass(i), self.mass(j)
        return mi * mj / (mi + mj)

    def nu(self, i: int) -> float:
        """Spectator reduced mass m_i (m_j + m_k) / M."""
        mi = self.mass(i)
        return mi * (self.total - mi) / self.total

    def pair_mu(self, spectator: int) -> float:
        """Reduced mass of the pair interacting while ``spectator`` watches."""
        j, k = SPECTATOR_PAIR[spectator]
        return self.mu(j, k)

    def permuted(self, order: tuple[int, int, int]) -> "MassSet":
        """Relabelled mass set: slot n of the result takes particle order[n]."""
        return MassSet(self.mass(order[0]), self.mass(order[1]), self.mass(order[2]))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.m1, self.m2, self.m3)
