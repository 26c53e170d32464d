"""Single-stage robust reconstruction from erroneous remainders.

Given distinct moduli M_1..M_L and noisy remainders of an unknown integer N,
the solver recovers the folding numbers n_i (the quotients in
N = n_i * M_i + r_i) exactly, provided the remainder errors stay within the
bounds computed here.  The method:

  1. pick a reference modulus M_k maximizing the worst pairwise gcd,
  2. divide each remainder difference by gcd(M_k, M_i) and round it to an
     integer quotient estimate,
  3. turn the quotient estimates into congruences for n_k via modular
     inverses and solve them with the generalized CRT,
  4. derive every other folding number by an exact division.

Failures of step 3 or 4 (contradictory congruences, non-exact division,
negative folding numbers) are diagnostic evidence that the errors exceeded
the admissible bounds; they surface as FoldingFailure rather than being
silently rounded away.

The fused estimate of N is the half-up-rounded average of the per-modulus
reconstructions, which keeps |estimate - N| within the remainder error level
whenever the folding numbers are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .intmath import mod_inverse, round_half_up_div

__all__ = [
    "FoldingFailure",
    "SearchCapExceeded",
    "FoldingSolution",
    "BoundsReport",
    "validate_moduli",
    "theta_bound",
    "select_reference",
    "per_remainder_bounds",
    "prune_redundant",
    "estimate_q_hat",
    "check_ns_condition",
    "solve_folding",
    "folding_oracle",
]

ORACLE_CAP_DEFAULT = 10_000_000


class FoldingFailure(Exception):
    """Folding-number recovery failed; remainder errors were too large.

    partial_estimate carries the fused value computed from the defective
    folding numbers when the arithmetic still produced a full set of them
    (e.g. a negative folding number); it is None when the congruence system
    itself was unsolvable.
    """

    def __init__(
        self,
        reason: str,
        partial_folding: tuple[int, ...] | None = None,
        partial_estimate: int | None = None,
    ):
        super().__init__(reason)
        self.reason = reason
        self.partial_folding = partial_folding
        self.partial_estimate = partial_estimate


class SearchCapExceeded(RuntimeError):
    """An exhaustive search would exceed the configured work cap."""


@dataclass(frozen=True)
class FoldingSolution:
    """Recovered folding numbers plus the fused integer estimate."""

    folding: tuple[int, ...]
    estimate: int
    reference_index: int | None


@dataclass(frozen=True)
class BoundsReport:
    """Per-remainder error bounds for a chosen reference modulus.

    strict[i] is True when the bound is exclusive (error must stay strictly
    below) and False when the bound itself is still admissible.
    """

    theta: Fraction
    reference: int
    per_remainder: tuple[Fraction, ...]
    strict: tuple[bool, ...]


def validate_moduli(
    moduli: Sequence[int], *, divisor_free: bool = False
) -> tuple[int, ...]:
    """Check moduli are distinct positive integers; return them as a tuple.

    With divisor_free=True additionally reject sets where one modulus
    divides another (prune_redundant output satisfies this).
    """
    ms = tuple(int(m) for m in moduli)
    if not ms:
        raise ValueError("empty moduli set")
    for m in ms:
        if m <= 0:
            raise ValueError(f"moduli must be positive, got {m}")
    if len(set(ms)) != len(ms):
        raise ValueError(f"moduli must be distinct, got {ms}")
    if divisor_free:
        for i, a in enumerate(ms):
            for j, b in enumerate(ms):
                if i != j and a % b == 0:
                    raise ValueError(
                        f"modulus {b} divides {a}; run prune_redundant first"
                    )
    return ms


def _min_pair_gcd(ms: Sequence[int], i: int) -> int:
    return min(math.gcd(ms[i], ms[j]) for j in range(len(ms)) if j != i)


def theta_bound(moduli: Sequence[int]) -> Fraction:
    """Single-stage robustness bound: max_i min_{j!=i} gcd(M_i, M_j) / 4.

    Remainder errors strictly below this bound guarantee exact folding
    recovery (with the reference from select_reference).
    """
    ms = validate_moduli(moduli)
    if len(ms) < 2:
        raise ValueError("theta_bound needs at least two moduli")
    return Fraction(max(_min_pair_gcd(ms, i) for i in range(len(ms))), 4)


def select_reference(moduli: Sequence[int]) -> int:
    """Smallest index attaining the max-min pairwise gcd."""
    ms = validate_moduli(moduli)
    if len(ms) < 2:
        raise ValueError("select_reference needs at least two moduli")
    best, best_i = -1, 0
    for i in range(len(ms)):
        g = _min_pair_gcd(ms, i)
        if g > best:
            best, best_i = g, i
    return best_i


def per_remainder_bounds(moduli: Sequence[int], k: int) -> BoundsReport:
    """Individual error bounds when remainder k is used as the reference.

    The reference error must stay strictly below min_{j!=k} gcd(M_k, M_j)/4;
    every other remainder i tolerates errors up to (inclusive)
    gcd(M_k, M_i)/2 minus that same quarter term.
    """
    ms = validate_moduli(moduli)
    if len(ms) < 2:
        raise ValueError("per_remainder_bounds needs at least two moduli")
    if not 0 <= k < len(ms):
        raise ValueError(f"reference index {k} out of range")
    theta = theta_bound(ms)
    ref_quarter = Fraction(_min_pair_gcd(ms, k), 4)
    if ref_quarter != theta:
        raise ValueError(
            f"index {k} does not attain the max-min bound {theta}"
        )
    bounds: list[Fraction] = []
    strict: list[bool] = []
    for i in range(len(ms)):
        if i == k:
            bounds.append(ref_quarter)
            strict.append(True)
        else:
            bounds.append(Fraction(math.gcd(ms[k], ms[i]), 2) - ref_quarter)
            strict.append(False)
    return BoundsReport(
        theta=theta,
        reference=k,
        per_remainder=tuple(bounds),
        strict=tuple(strict),
    )


def prune_redundant(moduli: Sequence[int]) -> tuple[int, ...]:
    """Drop every modulus that divides another one.

    Such a modulus contributes nothing to the lcm (the reconstruction range)
    and can only hold the robustness bound down.  Order of the survivors is
    preserved; the lcm never changes.
    """
    ms = validate_moduli(moduli)
    if len(ms) < 2:
        raise ValueError("prune_redundant needs at least two moduli")
    # divisibility is transitive, so one pass against the full set is the
    # same as iterating to a fixpoint
    return tuple(
        m
        for i, m in enumerate(ms)
        if not any(j != i and other % m == 0 for j, other in enumerate(ms))
    )


def estimate_q_hat(rt_i: int, rt_ref: int, m: int) -> int:
    """Rounded quotient estimate of the remainder difference over gcd m."""
    return round_half_up_div(rt_i - rt_ref, m)


def check_ns_condition(
    deltas: Sequence[int], moduli: Sequence[int], k: int
) -> bool:
    """Exactness test for the remainder error vector.

    True iff for every i != k the error difference delta_i - delta_k lies in
    [-gcd(M_k, M_i)/2, gcd(M_k, M_i)/2).  This is necessary and sufficient
    for solve_folding (with reference k) to recover every folding number.
    """
    ms = tuple(moduli)
    if len(deltas) != len(ms):
        raise ValueError("deltas and moduli lengths differ")
    if not 0 <= k < len(ms):
        raise ValueError(f"reference index {k} out of range")
    dk = deltas[k]
    for i in range(len(ms)):
        if i == k:
            continue
        g = math.gcd(ms[k], ms[i])
        d2 = 2 * (deltas[i] - dk)
        if not (-g <= d2 < g):
            return False
    return True


class _FoldingPlan:
    """Precomputed constants for solve_folding on a fixed (moduli, k).

    Holds the pairwise gcds, cofactors, modular inverses and the CRT merge
    schedule (or closed-form weights when the congruence moduli are pairwise
    coprime), so repeated solves only perform a handful of integer ops.
    """

    __slots__ = (
        "moduli",
        "k",
        "others",
        "pair_gcds",
        "ref_cofactors",
        "cong_moduli",
        "inverses",
        "coprime",
        "weights",
        "weight_mod",
        "merge_steps",
        "first_mod",
    )

    def __init__(self, moduli: tuple[int, ...], k: int):
        self.moduli = moduli
        self.k = k
        mk = moduli[k]
        self.others = tuple(i for i in range(len(moduli)) if i != k)
        self.pair_gcds = tuple(math.gcd(mk, moduli[i]) for i in self.others)
        self.ref_cofactors = tuple(mk // g for g in self.pair_gcds)
        self.cong_moduli = tuple(
            moduli[i] // g for i, g in zip(self.others, self.pair_gcds)
        )
        self.inverses = tuple(
            mod_inverse(c, n) if n > 1 else 0
            for c, n in zip(self.ref_cofactors, self.cong_moduli)
        )
        mods = self.cong_moduli
        self.coprime = all(
            math.gcd(mods[a], mods[b]) == 1
            for a in range(len(mods))
            for b in range(a + 1, len(mods))
        )
        if self.coprime:
            total = math.prod(mods)
            self.weight_mod = total
            self.weights = tuple(
                (total // n) * mod_inverse(total // n, n) if n > 1 else 0
                for n in mods
            )
            self.merge_steps = ()
            self.first_mod = 0
        else:
            self.weights = ()
            self.weight_mod = 0
            # merge schedule: fold congruences left to right, remembering
            # the running modulus so the inverses can be precomputed
            self.first_mod = mods[0]
            acc = mods[0]
            steps = []
            for n in mods[1:]:
                g = math.gcd(acc, n)
                ndg = n // g
                inv = mod_inverse((acc // g) % ndg, ndg) if ndg > 1 else 0
                steps.append((g, ndg, inv, acc))
                acc *= ndg
            self.merge_steps = tuple(steps)

    def solve_reference(self, xis: Sequence[int]) -> int:
        """Smallest nonnegative folding number of the reference modulus."""
        if self.coprime:
            return (
                sum(x * w for x, w in zip(xis, self.weights))
                % self.weight_mod
            )
        acc_r = xis[0] % self.first_mod
        for xi, (g, ndg, inv, acc_m) in zip(xis[1:], self.merge_steps):
            diff = xi - acc_r
            if diff % g != 0:
                raise FoldingFailure(
                    "remainder errors produced contradictory congruences"
                )
            acc_r += acc_m * (((diff // g) * inv) % ndg)
        return acc_r


@lru_cache(maxsize=512)
def _folding_plan(moduli: tuple[int, ...], k: int) -> _FoldingPlan:
    return _FoldingPlan(moduli, k)


def _solve_with_plan(
    plan: _FoldingPlan,
    remainders: Sequence[int],
    force_merge: bool = False,
) -> tuple[tuple[int, ...], int]:
    """Hot path shared by solve_folding and the multi-stage engine."""
    moduli = plan.moduli
    rt_ref = remainders[plan.k]
    qs = []
    xis = []
    for i, g, n, inv in zip(
        plan.others, plan.pair_gcds, plan.cong_moduli, plan.inverses
    ):
        d = remainders[i] - rt_ref
        q = (2 * d + g) // (2 * g)
        qs.append(q)
        xis.append((q * inv) % n if n > 1 else 0)
    if force_merge and plan.coprime:
        # the schedule the non-coprime path would have used, for cross-checks
        n_ref = _merge_all(xis, plan.cong_moduli)
    else:
        n_ref = plan.solve_reference(xis)

    folding = [0] * len(moduli)
    folding[plan.k] = n_ref
    for pos, i in enumerate(plan.others):
        num = n_ref * plan.ref_cofactors[pos] - qs[pos]
        den = plan.cong_moduli[pos]
        if num % den != 0:
            raise FoldingFailure("folding derivation is not an exact division")
        folding[i] = num // den

    total = sum(f * m + r for f, m, r in zip(folding, moduli, remainders))
    est = round_half_up_div(total, len(moduli))
    if any(f < 0 for f in folding):
        raise FoldingFailure(
            "negative folding number",
            partial_folding=tuple(folding),
            partial_estimate=est,
        )
    return tuple(folding), est


def _merge_all(xis: Sequence[int], mods: Sequence[int]) -> int:
    acc_r = xis[0] % mods[0]
    acc_m = mods[0]
    for xi, n in zip(xis[1:], mods[1:]):
        g = math.gcd(acc_m, n)
        diff = xi - acc_r
        if diff % g != 0:
            raise FoldingFailure(
                "remainder errors produced contradictory congruences"
            )
        ndg = n // g
        inv = mod_inverse((acc_m // g) % ndg, ndg) if ndg > 1 else 0
        acc_r += acc_m * (((diff // g) * inv) % ndg)
        acc_m *= ndg
    return acc_r


def solve_folding(
    moduli: Sequence[int],
    remainders: Sequence[int],
    k: int,
    *,
    closed_form: bool | None = None,
) -> FoldingSolution:
    """Recover all folding numbers from erroneous remainders, reference k.

    Remainders are taken as given, even outside [0, M_i): the arithmetic
    only uses differences, so no wrapping is applied here.  closed_form
    selects the single-sum reconstruction of the reference folding number
    (None = automatic when the congruence moduli are pairwise coprime,
    True = require it, False = always use the pairwise merge).

    Raises FoldingFailure when the errors were too large for recovery to be
    trusted: contradictory congruences, a non-exact derivation, or a
    negative folding number.
    """
    ms = validate_moduli(moduli)
    if len(ms) < 2:
        raise ValueError("solve_folding needs at least two moduli")
    if len(remainders) != len(ms):
        raise ValueError("remainders and moduli lengths differ")
    if not 0 <= k < len(ms):
        raise ValueError(f"reference index {k} out of range")
    plan = _folding_plan(ms, k)
    if closed_form is True and not plan.coprime:
        raise ValueError(
            "closed form requires pairwise-coprime congruence moduli"
        )
    force_merge = closed_form is False
    folding, est = _solve_with_plan(plan, list(remainders), force_merge)
    return FoldingSolution(folding=folding, estimate=est, reference_index=k)


def folding_oracle(
    moduli: Sequence[int],
    remainders: Sequence[int],
    tau: int | Fraction,
    *,
    cap: int = ORACLE_CAP_DEFAULT,
) -> list[FoldingSolution]:
    """Exhaustive reference answer: every candidate below the lcm.

    Scans all N in [0, lcm) and keeps those whose exact remainders differ
    from the given ones by at most tau entry-wise.  Independent of
    solve_folding; intended as a brute-force oracle for small moduli sets.
    Raises SearchCapExceeded when lcm exceeds cap.
    """
    ms = validate_moduli(moduli)
    if len(remainders) != len(ms):
        raise ValueError("remainders and moduli lengths differ")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    lam = math.lcm(*ms)
    if lam > cap:
        raise SearchCapExceeded(f"lcm {lam} exceeds oracle cap {cap}")
    rt = list(remainders)
    out: list[FoldingSolution] = []
    seen: set[tuple[int, ...]] = set()
    for n in range(lam):
        if all(abs(r - n % m) <= tau for r, m in zip(rt, ms)):
            folding = tuple(n // m for m in ms)
            if folding in seen:
                continue
            seen.add(folding)
            total = sum(f * m + r for f, m, r in zip(folding, ms, rt))
            out.append(
                FoldingSolution(
                    folding=folding,
                    estimate=round_half_up_div(total, len(ms)),
                    reference_index=None,
                )
            )
    return out
