"""Multi-stage reconstruction over grouping plans.

A grouping plan is a tree whose leaves hold modulus indices.  Each leaf is
solved with the single-stage algorithm; every internal node then treats its
children's (estimate, lcm) pairs as a fresh remainder system and solves it
the same way, composing the folding numbers downwards:

    n = K_leaf + sum over ancestors of (ancestor multiplier * lcm / M)

Trees are written as nested index lists, e.g. [[0, 1], [2, 3]] for two
groups of two, or [[[0, 1], [2, 3]], [4, 5]] for a three-stage plan.  Leaves
may share indices (a modulus can back more than one group); children of a
node must have pairwise-distinct lcms.

The module also computes the stage-bound calculus: a per-group bound for
each leaf, a cross bound for each internal node over its children's lcms,
and the effective per-leaf bound (the minimum along the path to the root).
Remainder errors strictly below the effective bounds guarantee exact
recovery of every folding number.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .intmath import round_half_up, round_half_up_div
from .robust import (
    FoldingFailure,
    FoldingSolution,
    _folding_plan,
    _solve_with_plan,
    select_reference,
    theta_bound,
    validate_moduli,
)

__all__ = [
    "Leaf",
    "Node",
    "GroupTree",
    "DegenerateTreeError",
    "parse_tree",
    "tree_to_nested",
    "tree_leaves",
    "validate_tree",
    "StageBounds",
    "StageSolution",
    "GroupReferenceBounds",
    "stage_bounds",
    "fused_error_bound",
    "reconstruct_tree",
    "reconstruct_two_stage",
    "per_group_reference_bounds",
]


class DegenerateTreeError(ValueError):
    """Two siblings share the same lcm, so their congruences collapse."""


@dataclass(frozen=True)
class Leaf:
    """A group: indices into the moduli set (at least one, no repeats)."""

    indices: tuple[int, ...]


@dataclass(frozen=True)
class Node:
    """An inner stage joining at least two subtrees."""

    children: tuple["GroupTree", ...]


GroupTree = Leaf | Node


def parse_tree(layout: str | Sequence) -> GroupTree:
    """Build a GroupTree from a JSON string or nested lists of indices."""
    data = json.loads(layout) if isinstance(layout, str) else layout
    return _parse_node(data)


def _parse_node(data) -> GroupTree:
    if not isinstance(data, (list, tuple)) or len(data) == 0:
        raise ValueError(f"tree nodes must be nonempty lists, got {data!r}")
    if all(isinstance(x, int) and not isinstance(x, bool) for x in data):
        return Leaf(indices=tuple(data))
    if all(isinstance(x, (list, tuple)) for x in data):
        return Node(children=tuple(_parse_node(x) for x in data))
    raise ValueError(f"tree node mixes indices and sublists: {data!r}")


def tree_to_nested(tree: GroupTree) -> list:
    """Inverse of parse_tree (up to list/tuple type)."""
    if isinstance(tree, Leaf):
        return list(tree.indices)
    return [tree_to_nested(c) for c in tree.children]


def tree_leaves(tree: GroupTree) -> list[Leaf]:
    """All leaves in left-to-right order."""
    if isinstance(tree, Leaf):
        return [tree]
    out: list[Leaf] = []
    for c in tree.children:
        out.extend(tree_leaves(c))
    return out


def validate_tree(tree: GroupTree, n_moduli: int) -> None:
    """Structural checks: index range, full coverage, node arity."""
    seen: set[int] = set()

    def walk(t: GroupTree) -> None:
        if isinstance(t, Leaf):
            if len(t.indices) == 0:
                raise ValueError("leaf with no indices")
            if len(set(t.indices)) != len(t.indices):
                raise ValueError(f"leaf repeats an index: {t.indices}")
            for i in t.indices:
                if not 0 <= i < n_moduli:
                    raise ValueError(f"leaf index {i} out of range")
            seen.update(t.indices)
        else:
            if len(t.children) < 2:
                raise ValueError("inner node needs at least two children")
            for c in t.children:
                walk(c)

    walk(tree)
    missing = set(range(n_moduli)) - seen
    if missing:
        raise ValueError(f"moduli indices {sorted(missing)} appear in no leaf")


@dataclass(frozen=True)
class StageBounds:
    """The bound calculus of a grouping plan.

    per_group: one bound per leaf (left-to-right); singleton groups get
        modulus/4.
    node_cross: (path, bound) per inner node, path being the child-index
        route from the root (root = ()).
    cross: the root node's cross bound (None for a single-leaf tree).
    per_leaf_effective: min of the leaf's own bound and every ancestor
        cross bound.
    """

    per_group: tuple[Fraction, ...]
    node_cross: tuple[tuple[tuple[int, ...], Fraction], ...]
    cross: Fraction | None
    per_leaf_effective: tuple[Fraction, ...]


@dataclass(frozen=True)
class StageSolution:
    """All intermediate values of a multi-stage reconstruction.

    per_group_estimates: leaf estimates left-to-right, then inner (non-root)
        node estimates in completion (bottom-up) order.
    outer_folding: the root's solved child multipliers first, then the
        remaining inner nodes' in completion order, flattened.
    final: folding numbers aligned with the full moduli set and the fused
        estimate averaged over every leaf occurrence.
    """

    per_group_estimates: tuple[int, ...]
    outer_folding: tuple[int, ...]
    final: FoldingSolution


@dataclass(frozen=True)
class GroupReferenceBounds:
    """Per-group error bounds when one group's lcm acts as the reference."""

    reference: int
    group_bounds: tuple[Fraction, ...]
    cross: Fraction
    per_group_tau: tuple[Fraction, ...]  # all strict


def _group_bound(moduli: Sequence[int]) -> Fraction:
    if len(moduli) == 1:
        return Fraction(moduli[0], 4)
    return theta_bound(moduli)


def _maxmin_quarter(values: Sequence[int]) -> Fraction:
    best = 0
    for i in range(len(values)):
        g = min(
            math.gcd(values[i], values[j])
            for j in range(len(values))
            if j != i
        )
        best = max(best, g)
    return Fraction(best, 4)


def stage_bounds(tree: GroupTree, moduli: Sequence[int]) -> StageBounds:
    """Group, cross and effective bounds of a plan over the given moduli."""
    ms = validate_moduli(moduli)
    validate_tree(tree, len(ms))

    per_group: list[Fraction] = []
    node_cross: list[tuple[tuple[int, ...], Fraction]] = []
    effective: list[Fraction] = []

    def walk(t: GroupTree, path: tuple[int, ...]) -> int:
        """Returns the subtree lcm; records bounds along the way."""
        if isinstance(t, Leaf):
            sub = [ms[i] for i in t.indices]
            per_group.append(_group_bound(sub))
            return math.lcm(*sub)
        lams = [walk(c, path + (ci,)) for ci, c in enumerate(t.children)]
        if len(set(lams)) != len(lams):
            raise DegenerateTreeError(
                f"children of node {path} share an lcm: {lams}"
            )
        node_cross.append((path, _maxmin_quarter(lams)))
        return math.lcm(*lams)

    walk(tree, ())
    crosses = dict(node_cross)

    def eff(t: GroupTree, path: tuple[int, ...], above: Fraction | None):
        if isinstance(t, Leaf):
            own = per_group[len(effective)]
            effective.append(own if above is None else min(own, above))
            return
        here = crosses[path]
        limit = here if above is None else min(here, above)
        for ci, c in enumerate(t.children):
            eff(c, path + (ci,), limit)

    eff(tree, (), None)
    return StageBounds(
        per_group=tuple(per_group),
        node_cross=tuple(node_cross),
        cross=crosses.get((), None),
        per_leaf_effective=tuple(effective),
    )


def fused_error_bound(
    taus: Sequence[Fraction | int], group_sizes: Sequence[int]
) -> int:
    """Error bound of the fused estimate: the rounded size-weighted mean."""
    if len(taus) != len(group_sizes):
        raise ValueError("taus and group_sizes lengths differ")
    if not taus:
        raise ValueError("empty bound list")
    total = sum(Fraction(t) * s for t, s in zip(taus, group_sizes))
    return round_half_up(total / sum(group_sizes))


class _CTree:
    """One compiled subtree: solver plan plus static occurrence layout."""

    __slots__ = ("kind", "idxs", "plan", "lam", "children", "factors", "occ")

    def __init__(self, kind, idxs, plan, lam, children, factors, occ):
        self.kind = kind            # "leaf1" | "leaf" | "node"
        self.idxs = idxs            # leaf: modulus indices
        self.plan = plan            # folding plan (None for leaf1)
        self.lam = lam              # subtree lcm
        self.children = children    # node: compiled children
        self.factors = factors      # node: per child, lam_child // M per occ
        self.occ = occ              # modulus index per leaf occurrence


class _TreeProgram:
    """Prevalidated reconstruction plan for a fixed (moduli, tree) pair."""

    def __init__(self, moduli: tuple[int, ...], tree: GroupTree):
        validate_tree(tree, len(moduli))
        self.moduli = moduli
        self.tree = tree
        self.root = self._compile(tree)
        self.root_is_leaf = isinstance(tree, Leaf)
        self.occ_indices = self.root.occ

    def _compile(self, t: GroupTree) -> _CTree:
        ms = self.moduli
        if isinstance(t, Leaf):
            idxs = t.indices
            if len(idxs) == 1:
                return _CTree("leaf1", idxs, None, ms[idxs[0]], (), (), idxs)
            sub = tuple(ms[i] for i in idxs)
            plan = _folding_plan(sub, select_reference(sub))
            return _CTree("leaf", idxs, plan, math.lcm(*sub), (), (), idxs)
        children = tuple(self._compile(c) for c in t.children)
        lams = tuple(c.lam for c in children)
        if len(set(lams)) != len(lams):
            raise DegenerateTreeError(f"sibling groups share an lcm: {lams}")
        plan = _folding_plan(lams, select_reference(lams))
        factors = tuple(
            tuple(c.lam // ms[i] for i in c.occ) for c in children
        )
        occ = tuple(i for c in children for i in c.occ)
        return _CTree("node", (), plan, math.lcm(*lams), children, factors, occ)

    def run(self, remainders: Sequence[int], collect: bool = True):
        """Solve every stage bottom-up.

        Returns (foldings aligned with occ_indices, estimate, records);
        records is (leaf_estimates, node_estimates, node_multipliers) or
        None when collect is False.  FoldingFailure propagates from any
        stage.
        """
        rt = remainders
        leaf_est: list[int] = []
        node_est: list[int] = []
        node_mult: list[list[tuple[int, ...]]] = [[], []]  # [inner, root]

        def run_sub(c: _CTree, is_root: bool) -> tuple[list[int], int]:
            if c.kind == "leaf1":
                est = rt[c.idxs[0]]
                if collect:
                    leaf_est.append(est)
                return [0], est
            if c.kind == "leaf":
                folding, est = _solve_with_plan(
                    c.plan, [rt[i] for i in c.idxs]
                )
                if collect:
                    leaf_est.append(est)
                return list(folding), est
            folds: list[list[int]] = []
            ests: list[int] = []
            for ch in c.children:
                f, e = run_sub(ch, False)
                folds.append(f)
                ests.append(e)
            mult, est = _solve_with_plan(c.plan, ests)
            if collect:
                node_mult[1 if is_root else 0].append(mult)
                if not is_root:
                    node_est.append(est)
            merged: list[int] = []
            for f, m, facs in zip(folds, mult, c.factors):
                merged.extend(fv + m * fac for fv, fac in zip(f, facs))
            return merged, est

        folds, est = run_sub(self.root, True)
        if not collect:
            return folds, est, None
        # root multipliers come first, then inner nodes in completion order
        multipliers = node_mult[1] + node_mult[0]
        return folds, est, (leaf_est, node_est, multipliers)

    def finalize(self, remainders: Sequence[int]) -> StageSolution:
        folds, _root_est, records = self.run(remainders, collect=True)
        leaf_est, node_est, multipliers = records
        rt = remainders
        ms = self.moduli

        if self.root_is_leaf:
            # degenerate plan: identical to the single-stage solver
            final = FoldingSolution(
                folding=self._by_index(folds),
                estimate=_occurrence_estimate(folds, self.occ_indices, ms, rt),
                reference_index=self.occ_indices[self.root.plan.k]
                if self.root.plan is not None
                else None,
            )
            return StageSolution(
                per_group_estimates=(),
                outer_folding=(),
                final=final,
            )

        final = FoldingSolution(
            folding=self._by_index(folds),
            estimate=_occurrence_estimate(folds, self.occ_indices, ms, rt),
            reference_index=None,
        )
        return StageSolution(
            per_group_estimates=tuple(leaf_est) + tuple(node_est),
            outer_folding=tuple(x for m in multipliers for x in m),
            final=final,
        )

    def _by_index(self, folds: list[int]) -> tuple[int, ...]:
        """Foldings per modulus index; shared occurrences must agree."""
        by_idx: dict[int, int] = {}
        for idx, f in zip(self.occ_indices, folds):
            prev = by_idx.setdefault(idx, f)
            if prev != f:
                raise FoldingFailure(
                    f"conflicting folding numbers for modulus index {idx}"
                )
        return tuple(by_idx[i] for i in range(len(self.moduli)))


def _occurrence_estimate(folds, occ_indices, moduli, remainders) -> int:
    total = sum(
        f * moduli[i] + remainders[i] for f, i in zip(folds, occ_indices)
    )
    return round_half_up_div(total, len(folds))


@lru_cache(maxsize=128)
def _tree_program(moduli: tuple[int, ...], tree: GroupTree) -> _TreeProgram:
    return _TreeProgram(moduli, tree)


def reconstruct_tree(
    moduli: Sequence[int],
    remainders: Sequence[int],
    tree: GroupTree | str | Sequence,
) -> StageSolution:
    """Run the full multi-stage reconstruction over a grouping plan.

    A single-leaf tree reproduces the single-stage solver exactly.  Any
    stage may raise FoldingFailure; it propagates untouched.
    """
    ms = validate_moduli(moduli)
    if not isinstance(tree, (Leaf, Node)):
        tree = parse_tree(tree)
    if len(remainders) != len(ms):
        raise ValueError("remainders and moduli lengths differ")
    return _tree_program(ms, tree).finalize(list(remainders))


def reconstruct_two_stage(
    moduli: Sequence[int],
    remainders: Sequence[int],
    tree: GroupTree | str | Sequence,
) -> StageSolution:
    """Depth-2 reconstruction: groups solved first, then fused across."""
    if not isinstance(tree, (Leaf, Node)):
        tree = parse_tree(tree)
    if not (
        isinstance(tree, Node)
        and all(isinstance(c, Leaf) for c in tree.children)
    ):
        raise ValueError("two-stage plan must be one node of leaf groups")
    return reconstruct_tree(moduli, remainders, tree)


def per_group_reference_bounds(
    tree: GroupTree | str | Sequence, moduli: Sequence[int]
) -> GroupReferenceBounds:
    """Per-group bounds of a depth-2 plan with a reference group.

    The reference group k is the one whose lcm attains the cross bound; its
    remainders must stay strictly below min(G_k, G).  Every other group j
    tolerates errors strictly below
    min(G_j, gcd(lcm_j, lcm_k)/2 - min(G_k, G)).
    """
    ms = validate_moduli(moduli)
    if not isinstance(tree, (Leaf, Node)):
        tree = parse_tree(tree)
    if not (
        isinstance(tree, Node)
        and all(isinstance(c, Leaf) for c in tree.children)
    ):
        raise ValueError("reference bounds require a depth-2 plan")
    validate_tree(tree, len(ms))
    groups = [[ms[i] for i in leaf.indices] for leaf in tree.children]
    g_bounds = [_group_bound(g) for g in groups]
    lams = [math.lcm(*g) for g in groups]
    if len(set(lams)) != len(lams):
        raise DegenerateTreeError(f"groups share an lcm: {lams}")
    cross = _maxmin_quarter(lams)
    k = select_reference(lams)
    ref_term = min(g_bounds[k], cross)
    taus: list[Fraction] = []
    for j in range(len(groups)):
        if j == k:
            taus.append(ref_term)
        else:
            taus.append(
                min(
                    g_bounds[j],
                    Fraction(math.gcd(lams[j], lams[k]), 2) - ref_term,
                )
            )
    return GroupReferenceBounds(
        reference=k,
        group_bounds=tuple(g_bounds),
        cross=cross,
        per_group_tau=tuple(taus),
    )
