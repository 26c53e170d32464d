"""Search for a two-stage grouping that beats the single-stage bound.

For each modulus, collect the partners whose pairwise gcd/4 exceeds the
single-stage bound theta; enumerate every irreducible cover of the moduli
by those candidate sets; keep the covers whose per-group bounds and cross
bound all exceed theta.  When several covers qualify, the one with the
largest worst-case group bound wins (ties: fewer groups, then lexicographic
index order).

For moduli of the form M * c_i with pairwise-coprime c_i no grouping can
help, and the search reports failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .multistage import DegenerateTreeError, Leaf, Node, StageBounds, stage_bounds
from .robust import (
    SearchCapExceeded,
    select_reference,
    theta_bound,
    validate_moduli,
)

__all__ = [
    "CandidateSet",
    "GroupingProposal",
    "candidate_sets",
    "prune_subset_sets",
    "minimal_covers",
    "propose_grouping",
    "render_proposal",
]

COVER_CAP_DEFAULT = 16


@dataclass(frozen=True)
class CandidateSet:
    """A modulus (anchor) plus every partner exceeding theta with it."""

    anchor: int
    members: frozenset[int]


@dataclass(frozen=True)
class GroupingProposal:
    """Outcome of the grouping search.

    groups holds modulus-index tuples (sorted) for the winning cover; empty
    on failure.  bounds is the StageBounds of the winning depth-2 plan.
    shared_reference marks a proposal that only succeeded after inserting
    the reference modulus into singleton groups (relaxed criterion: no
    group bound below theta, at least one above).
    """

    moduli: tuple[int, ...]
    theta: Fraction
    verdict: str  # "success" | "failure"
    groups: tuple[tuple[int, ...], ...]
    bounds: StageBounds | None
    shared_reference: bool = False


def candidate_sets(moduli: Sequence[int]) -> list[CandidateSet]:
    """One candidate set per modulus: itself plus all strong partners.

    A partner qualifies when gcd(partner, anchor)/4 strictly exceeds the
    single-stage bound.  Requires at least three divisor-free moduli (run
    prune_redundant first).
    """
    ms = validate_moduli(moduli, divisor_free=True)
    if len(ms) < 3:
        raise ValueError("grouping search needs at least three moduli")
    theta = theta_bound(ms)
    out = []
    for i, a in enumerate(ms):
        members = {i}
        for j, b in enumerate(ms):
            if j != i and Fraction(math.gcd(a, b), 4) > theta:
                members.add(j)
        out.append(CandidateSet(anchor=i, members=frozenset(members)))
    return out


def prune_subset_sets(cands: Sequence[CandidateSet]) -> list[CandidateSet]:
    """Drop candidate sets whose members are contained in an earlier-kept one.

    Keeps the first maximal set under input order; equal member sets keep
    only the first.  Note this shrinks the pool of irreducible covers, so
    the full search works on the unpruned list.
    """
    kept: list[CandidateSet] = []
    for i, c in enumerate(cands):
        dominated = False
        for j, d in enumerate(cands):
            if j == i or not (c.members <= d.members):
                continue
            if c.members != d.members or j < i:
                dominated = True
                break
        if not dominated:
            kept.append(c)
    return kept


def minimal_covers(
    cands: Sequence[CandidateSet],
    n_moduli: int,
    *,
    cap: int = COVER_CAP_DEFAULT,
) -> list[tuple[CandidateSet, ...]]:
    """All irreducible covers of the index set 0..n_moduli-1.

    A combination qualifies when its union is the full index set and
    removing any one member loses coverage.  Enumeration is exponential in
    the number of candidate sets; SearchCapExceeded guards beyond cap sets.
    """
    if len(cands) > cap:
        raise SearchCapExceeded(
            f"{len(cands)} candidate sets exceed the cover cap {cap}"
        )
    universe = frozenset(range(n_moduli))
    covers = []
    for r in range(1, len(cands) + 1):
        for combo in combinations(range(len(cands)), r):
            union = frozenset().union(*(cands[i].members for i in combo))
            if union != universe:
                continue
            if any(
                frozenset().union(
                    *(cands[i].members for i in combo if i != skip)
                )
                == universe
                for skip in combo
            ):
                continue
            covers.append(tuple(cands[i] for i in combo))
    return covers


def _evaluate_cover(
    ms: tuple[int, ...], groups: list[tuple[int, ...]]
) -> StageBounds:
    tree = Node(children=tuple(Leaf(indices=g) for g in groups))
    return stage_bounds(tree, ms)


def _worst_bound(bounds: StageBounds) -> Fraction:
    return min(bounds.per_leaf_effective)


def propose_grouping(
    moduli: Sequence[int],
    *,
    share_reference: bool = False,
    cover_cap: int = COVER_CAP_DEFAULT,
) -> GroupingProposal:
    """Run the full grouping search.

    Success requires a cover whose cross bound and every group bound
    strictly exceed theta.  With share_reference=True, a failed search is
    retried with the reference modulus inserted into each singleton group,
    accepting covers where no effective group bound drops below theta and
    at least one rises above it.
    """
    ms = validate_moduli(moduli, divisor_free=True)
    if len(ms) < 3:
        raise ValueError("grouping search needs at least three moduli")
    theta = theta_bound(ms)
    cands = candidate_sets(ms)
    covers = minimal_covers(cands, len(ms), cap=cover_cap)

    def groups_of(cover: tuple[CandidateSet, ...]) -> list[tuple[int, ...]]:
        return [tuple(sorted(c.members)) for c in cover]

    def pick(
        scored: list[tuple[Fraction, int, tuple, StageBounds]]
    ) -> tuple[tuple[tuple[int, ...], ...], StageBounds]:
        # best worst-case bound, then fewer groups, then lexicographic
        best = sorted(scored, key=lambda s: (-s[0], s[1], s[2]))[0]
        return tuple(best[2]), best[3]

    successes = []
    for cover in covers:
        groups = groups_of(cover)
        if len(groups) < 2:
            continue  # a single group is just the single-stage solver
        try:
            bounds = _evaluate_cover(ms, groups)
        except DegenerateTreeError:
            continue  # sibling groups with equal lcms cannot form a plan
        if bounds.cross > theta and all(g > theta for g in bounds.per_group):
            successes.append(
                (_worst_bound(bounds), len(groups), tuple(groups), bounds)
            )
    if successes:
        groups, bounds = pick(successes)
        return GroupingProposal(
            moduli=ms,
            theta=theta,
            verdict="success",
            groups=groups,
            bounds=bounds,
        )

    if share_reference:
        ref = select_reference(ms)
        shared = []
        for cover in covers:
            groups = [
                tuple(sorted(set(g) | {ref})) if len(g) == 1 else g
                for g in groups_of(cover)
            ]
            if len(groups) < 2 or len(set(groups)) != len(groups):
                continue
            try:
                bounds = _evaluate_cover(ms, groups)
            except DegenerateTreeError:
                continue
            eff = bounds.per_leaf_effective
            if all(e >= theta for e in eff) and any(e > theta for e in eff):
                shared.append(
                    (_worst_bound(bounds), len(groups), tuple(groups), bounds)
                )
        if shared:
            groups, bounds = pick(shared)
            return GroupingProposal(
                moduli=ms,
                theta=theta,
                verdict="success",
                groups=groups,
                bounds=bounds,
                shared_reference=True,
            )

    return GroupingProposal(
        moduli=ms,
        theta=theta,
        verdict="failure",
        groups=(),
        bounds=None,
    )


def render_proposal(proposal: GroupingProposal) -> str:
    """Plain-text report: groups as modulus values, bounds as p/q."""
    lines = [
        f"moduli: {' '.join(str(m) for m in proposal.moduli)}",
        f"single-stage bound: {_pq(proposal.theta)}",
        f"verdict: {proposal.verdict}",
    ]
    if proposal.shared_reference:
        lines.append("note: reference modulus shared into singleton groups")
    if proposal.verdict == "success" and proposal.bounds is not None:
        b = proposal.bounds
        for g, gb, eff in zip(
            proposal.groups, b.per_group, b.per_leaf_effective
        ):
            vals = " ".join(str(proposal.moduli[i]) for i in g)
            lines.append(
                f"group [{vals}]: bound {_pq(gb)}, effective {_pq(eff)}"
            )
        lines.append(f"cross bound: {_pq(b.cross)}")
    return "\n".join(lines)


def _pq(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"
