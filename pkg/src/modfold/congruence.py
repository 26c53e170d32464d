"""Error-free remainder reconstruction.

Classical closed-form CRT for pairwise-coprime moduli plus a generalized
pairwise-merge solver that accepts non-coprime moduli and detects
contradictory residue systems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .intmath import mod_inverse

__all__ = [
    "InconsistentSystem",
    "CongruenceSystem",
    "crt_pair_merge",
    "crt_general",
    "crt_coprime_closed_form",
    "remainders_of",
]


class InconsistentSystem(ValueError):
    """The residues admit no common solution (contradictory congruences)."""


@dataclass(frozen=True)
class CongruenceSystem:
    """A system x == residues[i] (mod moduli[i]), residues stored reduced."""

    residues: tuple[int, ...]
    moduli: tuple[int, ...]

    def __init__(self, residues: Sequence[int], moduli: Sequence[int]):
        residues = tuple(int(r) for r in residues)
        moduli = tuple(int(m) for m in moduli)
        if len(residues) != len(moduli):
            raise ValueError(
                f"{len(residues)} residues but {len(moduli)} moduli"
            )
        for m in moduli:
            if m <= 0:
                raise ValueError(f"moduli must be positive, got {m}")
        object.__setattr__(
            self, "residues", tuple(r % m for r, m in zip(residues, moduli))
        )
        object.__setattr__(self, "moduli", moduli)

    def __len__(self) -> int:
        return len(self.moduli)


def crt_pair_merge(a: int, m: int, b: int, n: int) -> tuple[int, int]:
    """Merge x == a (mod m) and x == b (mod n) into x == c (mod lcm(m, n)).

    Returns (c, lcm) with 0 <= c < lcm.  Raises InconsistentSystem when
    gcd(m, n) does not divide b - a, i.e. no x satisfies both congruences.
    """
    if m <= 0 or n <= 0:
        raise ValueError("moduli must be positive")
    g = math.gcd(m, n)
    diff = b - a
    if diff % g != 0:
        raise InconsistentSystem(
            f"x == {a} (mod {m}) contradicts x == {b} (mod {n})"
        )
    ndg = n // g
    t = ((diff // g) * mod_inverse(m // g, ndg)) % ndg
    l = m * ndg
    return (a + m * t) % l, l


def crt_general(system: CongruenceSystem) -> int:
    """Smallest nonnegative solution of a (possibly non-coprime) system.

    The result is the canonical representative in [0, lcm(moduli)).
    Raises InconsistentSystem when the congruences contradict each other.
    """
    if len(system) == 0:
        raise ValueError("empty congruence system")
    acc_r, acc_m = system.residues[0], system.moduli[0]
    for r, m in zip(system.residues[1:], system.moduli[1:]):
        acc_r, acc_m = crt_pair_merge(acc_r, acc_m, r, m)
    return acc_r


def crt_coprime_closed_form(system: CongruenceSystem) -> int:
    """Single-sum CRT formula, valid only for pairwise-coprime moduli.

    Agrees with crt_general on every coprime system; rejects non-coprime
    moduli with ValueError.
    """
    if len(system) == 0:
        raise ValueError("empty congruence system")
    mods = system.moduli
    for i in range(len(mods)):
        for j in range(i + 1, len(mods)):
            if math.gcd(mods[i], mods[j]) != 1:
                raise ValueError(
                    f"moduli {mods[i]} and {mods[j]} are not coprime"
                )
    total = math.prod(mods)
    acc = 0
    for r, m in zip(system.residues, mods):
        if m == 1:
            continue
        others = total // m
        acc += r * mod_inverse(others, m) * others
    return acc % total


def remainders_of(n: int, moduli: Sequence[int]) -> tuple[int, ...]:
    """Exact remainders of n for each modulus, each in [0, modulus)."""
    for m in moduli:
        if m <= 0:
            raise ValueError(f"moduli must be positive, got {m}")
    return tuple(n % m for m in moduli)
