import math
import random
from fractions import Fraction

import pytest

from modfold.multistage import (
    DegenerateTreeError,
    Leaf,
    Node,
    fused_error_bound,
    parse_tree,
    per_group_reference_bounds,
    reconstruct_tree,
    reconstruct_two_stage,
    stage_bounds,
    tree_leaves,
    tree_to_nested,
    validate_tree,
)
from modfold.robust import (
    FoldingFailure,
    folding_oracle,
    select_reference,
    solve_folding,
    theta_bound,
)

EX_SPLIT = (180, 220, 486, 513)
EX_SIM = (135, 180, 162)
EX_THREE = (192, 288, 216, 360, 320, 448)


def all_partitions(indices):
    if len(indices) == 1:
        yield [indices]
        return
    first, rest = indices[0], indices[1:]
    for part in all_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


class TestTreeStructure:
    def test_parse_round_trip(self):
        for layout in ("[[0,1],[2,3]]", "[[[0,1],[2,3]],[4,5]]", "[[0,1],[2]]"):
            tree = parse_tree(layout)
            assert parse_tree(tree_to_nested(tree)) == tree

    def test_parse_flat_leaf(self):
        assert parse_tree("[0,1,2]") == Leaf((0, 1, 2))

    def test_parse_rejects_mixed(self):
        with pytest.raises(ValueError):
            parse_tree("[0,[1,2]]")
        with pytest.raises(ValueError):
            parse_tree("[]")

    def test_leaves_in_order(self):
        tree = parse_tree("[[[0,1],[2,3]],[4,5]]")
        assert [l.indices for l in tree_leaves(tree)] == [
            (0, 1),
            (2, 3),
            (4, 5),
        ]

    def test_validate(self):
        validate_tree(parse_tree("[[0,1],[2]]"), 3)
        with pytest.raises(ValueError):
            validate_tree(parse_tree("[[0,1]]"), 3)  # index 2 uncovered
        with pytest.raises(ValueError):
            validate_tree(parse_tree("[[0,0],[1,2]]"), 3)
        with pytest.raises(ValueError):
            validate_tree(parse_tree("[[0,1],[2,5]]"), 3)
        with pytest.raises(ValueError):
            validate_tree(Node((Leaf((0,)),)), 1)


class TestStageBounds:
    def test_two_group_goldens(self):
        cases = [
            (EX_SPLIT, "[[0,1],[2,3]]", (20, 27), 18),
            ((192, 144, 168, 112), "[[0,1],[2,3]]", (48, 56), 48),
            ((192, 144, 168, 112), "[[0,3],[1,2]]", (16, 24), 336),
        ]
        for ms, layout, groups, cross in cases:
            b = stage_bounds(parse_tree(layout), ms)
            assert b.per_group == tuple(Fraction(g, 4) for g in groups)
            assert b.cross == Fraction(cross, 4)

    def test_three_stage_golden(self):
        b = stage_bounds(parse_tree("[[[0,1],[2,3]],[4,5]]"), EX_THREE)
        assert b.per_group == (
            Fraction(96, 4),
            Fraction(72, 4),
            Fraction(64, 4),
        )
        assert dict(b.node_cross)[(0,)] == Fraction(72, 4)
        assert b.cross == Fraction(320, 4)
        assert b.per_leaf_effective == (
            Fraction(72, 4),
            Fraction(72, 4),
            Fraction(64, 4),
        )

    def test_singleton_group_rule(self):
        b = stage_bounds(parse_tree("[[0,1],[2]]"), EX_SIM)
        assert b.per_group == (Fraction(45, 4), Fraction(162, 4))
        assert b.cross == Fraction(54, 4)
        assert b.per_leaf_effective == (Fraction(45, 4), Fraction(54, 4))

    def test_degenerate_rejected(self):
        with pytest.raises(DegenerateTreeError):
            stage_bounds(parse_tree("[[0,1],[2,3]]"), (6, 10, 15, 30))

    def test_cross_bound_matches_direct_maxmin(self):
        # independent recomputation of the cross formula over group lcms
        groups = [(130, 156), (189, 351), (420, 308)]
        ms = tuple(m for g in groups for m in g)
        b = stage_bounds(parse_tree("[[0,1],[2,3],[4,5]]"), ms)
        lams = [math.lcm(*g) for g in groups]
        direct = max(
            min(
                Fraction(math.gcd(lams[i], lams[j]), 4)
                for j in range(3)
                if j != i
            )
            for i in range(3)
        )
        assert b.cross == direct == Fraction(39, 4)

    def test_monotone_composition(self):
        rng = random.Random(97)
        for _ in range(40):
            ms = tuple(sorted(rng.sample(range(4, 200), 4)))
            for part in all_partitions(list(range(4))):
                if len(part) < 2:
                    continue
                tree = Node(tuple(Leaf(tuple(g)) for g in part))
                try:
                    b = stage_bounds(tree, ms)
                except DegenerateTreeError:
                    continue
                for own, eff in zip(b.per_group, b.per_leaf_effective):
                    assert eff <= own
                    assert eff <= b.cross

    def test_effective_below_theta_for_coprime_cofactors(self):
        # when moduli are a common factor times coprime parts, no grouping
        # can beat the single-stage bound
        for ms in ((25, 35, 80, 95), (14, 21, 35)):
            theta = theta_bound(ms)
            for part in all_partitions(list(range(len(ms)))):
                if len(part) < 2:
                    continue
                tree = Node(tuple(Leaf(tuple(g)) for g in part))
                try:
                    b = stage_bounds(tree, ms)
                except DegenerateTreeError:
                    continue
                assert all(e <= theta for e in b.per_leaf_effective)

    def test_improving_tree_exists_for_entangled_sets(self):
        cases = [
            ((192, 144, 168, 112), "[[0,1],[2,3]]"),
            (EX_THREE, "[[0,1],[2,3],[4,5]]"),
            ((560, 480, 210), "[[0,1],[2]]"),
        ]
        for ms, layout in cases:
            theta = theta_bound(ms)
            b = stage_bounds(parse_tree(layout), ms)
            assert all(e > theta for e in b.per_leaf_effective)


class TestFusedErrorBound:
    def test_examples(self):
        assert fused_error_bound([3, 3], [2, 2]) == 3
        assert fused_error_bound([11, 11], [2, 1]) == 11
        assert fused_error_bound([2, 5], [1, 3]) == 4

    def test_rational_taus(self):
        assert fused_error_bound([Fraction(5, 2), Fraction(1, 2)], [1, 1]) == 2

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            fused_error_bound([1], [1, 2])


class TestReconstructTwoStage:
    def test_zero_errors_exact(self):
        tree = parse_tree("[[0,1],[2,3]]")
        lam = math.lcm(*EX_SPLIT)
        rng = random.Random(101)
        for _ in range(200):
            n = rng.randrange(lam)
            sol = reconstruct_two_stage(EX_SPLIT, [n % m for m in EX_SPLIT], tree)
            assert sol.final.estimate == n
            assert sol.final.folding == tuple(n // m for m in EX_SPLIT)

    def test_simulation_set_error_level(self):
        tree = parse_tree("[[0,1],[2]]")
        rng = random.Random(103)
        for _ in range(400):
            n = rng.randrange(1620)
            deltas = [rng.randint(-11, 11) for _ in EX_SIM]
            rt = [n % m + d for m, d in zip(EX_SIM, deltas)]
            sol = reconstruct_two_stage(EX_SIM, rt, tree)
            assert sol.final.folding == tuple(n // m for m in EX_SIM)
            assert abs(sol.final.estimate - n) <= 11

    def test_split_set_within_cross_bound(self):
        tree = parse_tree("[[0,1],[2,3]]")
        lam = math.lcm(*EX_SPLIT)
        rng = random.Random(107)
        for _ in range(300):
            n = rng.randrange(lam)
            deltas = [rng.randint(-4, 4) for _ in EX_SPLIT]
            rt = [n % m + d for m, d in zip(EX_SPLIT, deltas)]
            sol = reconstruct_two_stage(EX_SPLIT, rt, tree)
            assert sol.final.folding == tuple(n // m for m in EX_SPLIT)

    def test_oracle_cross_check(self):
        tree = parse_tree("[[0,1],[2]]")
        rng = random.Random(109)
        for _ in range(3):
            n = rng.randrange(1620)
            rt = [n % m + rng.randint(-6, 6) for m in EX_SIM]
            sol = reconstruct_two_stage(EX_SIM, rt, tree)
            oracle = folding_oracle(EX_SIM, rt, 6)
            assert sol.final.folding in [s.folding for s in oracle]

    def test_intermediate_records(self):
        tree = parse_tree("[[0,1],[2]]")
        n = 1234
        rt = [n % m for m in EX_SIM]
        sol = reconstruct_two_stage(EX_SIM, rt, tree)
        # group estimates are the per-group reconstructions of n mod lcm
        assert sol.per_group_estimates == (n % 540, n % 162)
        # outer multipliers recover n from the group estimates
        l1, l2 = sol.outer_folding
        assert l1 * 540 + n % 540 == n
        assert l2 * 162 + n % 162 == n

    def test_requires_depth_two(self):
        with pytest.raises(ValueError):
            reconstruct_two_stage(EX_SIM, [0, 0, 0], Leaf((0, 1, 2)))
        with pytest.raises(ValueError):
            reconstruct_two_stage(
                EX_THREE, [0] * 6, parse_tree("[[[0,1],[2,3]],[4,5]]")
            )

    def test_failure_propagates(self):
        # the first group alone already fails with a negative folding number
        with pytest.raises(FoldingFailure):
            solve_folding((8, 12), [-6, 4], 0)
        with pytest.raises(FoldingFailure):
            reconstruct_two_stage((8, 12, 20), [-6, 4, 0], "[[0,1],[2]]")


class TestReconstructTree:
    def test_depth_two_equivalence(self):
        tree = parse_tree("[[0,1],[2,3]]")
        rng = random.Random(113)
        for _ in range(50):
            n = rng.randrange(math.lcm(*EX_SPLIT))
            rt = [n % m + rng.randint(-4, 4) for m in EX_SPLIT]
            assert reconstruct_tree(EX_SPLIT, rt, tree) == reconstruct_two_stage(
                EX_SPLIT, rt, tree
            )

    def test_three_stage_zero_errors(self):
        tree = parse_tree("[[[0,1],[2,3]],[4,5]]")
        lam = math.lcm(*EX_THREE)
        rng = random.Random(127)
        for _ in range(150):
            n = rng.randrange(lam)
            sol = reconstruct_tree(EX_THREE, [n % m for m in EX_THREE], tree)
            assert sol.final.estimate == n
            assert sol.final.folding == tuple(n // m for m in EX_THREE)

    def test_three_stage_within_effective_bounds(self):
        tree = parse_tree("[[[0,1],[2,3]],[4,5]]")
        caps = (17, 17, 15)  # strictly below (72/4, 72/4, 64/4)
        groups = ((0, 1), (2, 3), (4, 5))
        lam = math.lcm(*EX_THREE)
        rng = random.Random(131)
        for _ in range(400):
            n = rng.randrange(lam)
            deltas = [0] * 6
            for g, cap in zip(groups, caps):
                for i in g:
                    deltas[i] = rng.randint(-cap, cap)
            rt = [n % m + d for m, d in zip(EX_THREE, deltas)]
            sol = reconstruct_tree(EX_THREE, rt, tree)
            assert sol.final.folding == tuple(n // m for m in EX_THREE)

    def test_three_stage_oracle_cross_check(self):
        tree = parse_tree("[[[0,1],[2,3]],[4,5]]")
        rng = random.Random(137)
        for _ in range(3):
            n = rng.randrange(math.lcm(*EX_THREE))
            rt = [n % m + rng.randint(-10, 10) for m in EX_THREE]
            sol = reconstruct_tree(EX_THREE, rt, tree)
            oracle = folding_oracle(EX_THREE, rt, 10)
            assert sol.final.folding in [s.folding for s in oracle]

    def test_single_leaf_matches_single_stage(self):
        rng = random.Random(139)
        leaf = Leaf((0, 1, 2, 3))
        k = select_reference(EX_SPLIT)
        for _ in range(60):
            n = rng.randrange(math.lcm(*EX_SPLIT))
            rt = [n % m + rng.randint(-2, 2) for m in EX_SPLIT]
            direct = solve_folding(EX_SPLIT, rt, k)
            via_tree = reconstruct_tree(EX_SPLIT, rt, leaf)
            assert via_tree.final == direct
            assert via_tree.per_group_estimates == ()
            assert via_tree.outer_folding == ()

    def test_shared_modulus_across_groups(self):
        ms = (12, 18, 35)
        tree = parse_tree("[[0,1],[0,2]]")
        lam = math.lcm(*ms)
        rng = random.Random(149)
        for _ in range(100):
            n = rng.randrange(lam)
            sol = reconstruct_tree(ms, [n % m for m in ms], tree)
            assert sol.final.estimate == n
            assert sol.final.folding == tuple(n // m for m in ms)

    def test_degenerate_node_rejected(self):
        with pytest.raises(DegenerateTreeError):
            reconstruct_tree((6, 10, 15, 30), [0, 0, 0, 0], "[[0,1],[2,3]]")


class TestPerGroupReferenceBounds:
    def test_three_group_golden(self):
        ms = (130, 156, 189, 351, 420, 308)
        ref = per_group_reference_bounds("[[0,1],[2,3],[4,5]]", ms)
        assert ref.group_bounds == (
            Fraction(26, 4),
            Fraction(27, 4),
            Fraction(28, 4),
        )
        assert ref.cross == Fraction(39, 4)
        assert ref.reference == 0
        assert ref.per_group_tau == (
            Fraction(26, 4),
            Fraction(27, 4),
            Fraction(28, 4),
        )

    def test_reference_attains_cross(self):
        ms = (130, 156, 189, 351, 420, 308)
        ref = per_group_reference_bounds("[[0,1],[2,3],[4,5]]", ms)
        lams = [math.lcm(130, 156), math.lcm(189, 351), math.lcm(420, 308)]
        k = ref.reference
        attained = min(
            Fraction(math.gcd(lams[k], lams[j]), 4)
            for j in range(3)
            if j != k
        )
        assert attained == ref.cross

    def test_degenerate_rejected(self):
        with pytest.raises(DegenerateTreeError):
            per_group_reference_bounds("[[0,1],[2,3]]", (6, 10, 15, 30))

    def test_depth_two_only(self):
        with pytest.raises(ValueError):
            per_group_reference_bounds("[[[0,1],[2,3]],[4,5]]", EX_THREE)
