"""Monte Carlo harness and exhaustive verification campaigns.

Trials are fully deterministic and platform independent.  Trial t of a run
seeded with s owns the substream key k_t = splitmix64(s, t); its j-th raw
draw is splitmix64(k_t, j), and a uniform integer in [0, n) is that draw
modulo n (the bias is below n / 2**64, irrelevant at these ranges).  Draw
order per trial: the unknown integer first, then one error per modulus.
Substreams make serial and (hypothetical) parallel executions agree.

Inconsistent reconstructions count as folding failures; when the solver
still produced a fused value (single-stage negative-folding case) that
value enters the error statistics, otherwise the trial is excluded from
the mean and the max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import product
from typing import Callable, Sequence

from .multistage import GroupTree, _tree_program
from .robust import (
    FoldingFailure,
    SearchCapExceeded,
    _folding_plan,
    _solve_with_plan,
    check_ns_condition,
    select_reference,
    validate_moduli,
)

__all__ = [
    "TrialConfig",
    "TrialStats",
    "ExactnessReport",
    "run_trials",
    "sweep",
    "stats_to_csv",
    "verify_exactness_condition",
    "ONE_SIDED",
    "SYMMETRIC",
]

ONE_SIDED = "one-sided"
SYMMETRIC = "symmetric"

_MASK64 = (1 << 64) - 1


def _splitmix64(seed: int, index: int) -> int:
    """Stable per-trial substream key (splitmix64 of seed + index step)."""
    z = (seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class TrialConfig:
    """One simulation campaign.

    tree=None runs the single-stage solver with the automatic reference;
    otherwise the grouping plan drives a multi-stage reconstruction.
    error_model "one-sided" draws integer errors uniformly from {0..tau},
    "symmetric" from {-tau..tau}.  clamp_remainders forces perturbed
    remainders back into [0, M_i - 1].
    """

    moduli: tuple[int, ...]
    tree: GroupTree | None = None
    tau: int = 0
    trials: int = 100_000
    rng_seed: int = 0
    error_model: str = ONE_SIDED
    clamp_remainders: bool = False

    def __post_init__(self):
        object.__setattr__(self, "moduli", tuple(self.moduli))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.error_model not in (ONE_SIDED, SYMMETRIC):
            raise ValueError(f"unknown error model {self.error_model!r}")


@dataclass(frozen=True)
class TrialStats:
    """Aggregated outcome of a campaign."""

    tau: int
    trials: int
    mean_abs_error: Fraction
    max_abs_error: int
    bound: int
    bound_violations: int
    folding_failures: int
    estimated_trials: int

    @property
    def mean_abs_error_decimal(self) -> float:
        return float(self.mean_abs_error)


def run_trials(cfg: TrialConfig) -> TrialStats:
    """Run one campaign and aggregate the statistics."""
    ms = validate_moduli(cfg.moduli)
    lam = math.lcm(*ms)
    tau = cfg.tau
    one_sided = cfg.error_model == ONE_SIDED

    if cfg.tree is None:
        if len(ms) < 2:
            raise ValueError("single-stage simulation needs >= 2 moduli")
        plan = _folding_plan(ms, select_reference(ms))

        def reconstruct(rt: list[int]) -> int:
            return _solve_with_plan(plan, rt)[1]

    else:
        program = _tree_program(ms, cfg.tree)

        def reconstruct(rt: list[int]) -> int:
            return program.run(rt, collect=False)[1]

    total_err = 0
    max_err = 0
    violations = 0
    failures = 0
    estimated = 0
    bound = tau  # the fused estimate stays within the error level
    span = tau + 1 if one_sided else 2 * tau + 1
    shift = 0 if one_sided else tau
    seed = cfg.rng_seed
    clamp = cfg.clamp_remainders
    mix = _splitmix64

    for t in range(cfg.trials):
        key = mix(seed, t)
        n = mix(key, 0) % lam
        rt: list[int] = []
        for j, m in enumerate(ms):
            v = n % m + mix(key, j + 1) % span - shift
            if clamp:
                v = min(max(v, 0), m - 1)
            rt.append(v)
        try:
            est = reconstruct(rt)
        except FoldingFailure as exc:
            failures += 1
            est = exc.partial_estimate
        if est is None:
            continue
        err = abs(est - n)
        estimated += 1
        total_err += err
        if err > max_err:
            max_err = err
        if err > bound:
            violations += 1

    mean = Fraction(total_err, estimated) if estimated else Fraction(0)
    return TrialStats(
        tau=tau,
        trials=cfg.trials,
        mean_abs_error=mean,
        max_abs_error=max_err,
        bound=bound,
        bound_violations=violations,
        folding_failures=failures,
        estimated_trials=estimated,
    )


def sweep(cfg_base: TrialConfig, taus: Sequence[int]) -> list[TrialStats]:
    """One campaign per error level, same seed and trial count."""
    return [run_trials(replace(cfg_base, tau=int(t))) for t in taus]


def stats_to_csv(rows: Sequence[TrialStats]) -> str:
    """Render sweep results as CSV (header + one line per error level)."""
    out = ["tau,mean_abs_error,max_abs_error,bound,violations,folding_failures"]
    for s in rows:
        out.append(
            f"{s.tau},{float(s.mean_abs_error):.6f},{s.max_abs_error},"
            f"{s.bound},{s.bound_violations},{s.folding_failures}"
        )
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class ExactnessReport:
    """Exhaustive check of the exactness condition against the solver.

    A sufficiency counterexample is a case where the condition holds but
    recovery was not exact; a necessity counterexample is exact recovery
    despite a violated condition.  Both lists cap at 20 samples.
    """

    moduli: tuple[int, ...]
    reference: int
    window: int
    cases: int
    condition_true: int
    sufficiency_counterexamples: tuple[tuple[int, tuple[int, ...]], ...]
    necessity_counterexamples: tuple[tuple[int, tuple[int, ...]], ...]
    sufficiency_failures: int
    necessity_failures: int

    @property
    def passed(self) -> bool:
        return self.sufficiency_failures == 0 and self.necessity_failures == 0


def verify_exactness_condition(
    moduli: Sequence[int],
    *,
    window: int = 4,
    cap: int = 50_000_000,
    reference: int | None = None,
    condition: Callable[[Sequence[int], Sequence[int], int], bool]
    | None = None,
) -> ExactnessReport:
    """Enumerate every (N, error vector) pair in a window and compare.

    For each unknown in [0, lcm) and each integer error vector in
    [-window, window]^L, checks that the exactness condition predicts
    exactly whether solve_folding recovers the true folding numbers.
    condition can be overridden (e.g. deliberately mutated) to validate
    that the harness itself detects discrepancies.
    """
    ms = validate_moduli(moduli)
    if len(ms) < 2:
        raise ValueError("verification needs at least two moduli")
    lam = math.lcm(*ms)
    span = 2 * window + 1
    total = lam * span ** len(ms)
    if total > cap:
        raise SearchCapExceeded(f"{total} cases exceed the cap {cap}")
    k = select_reference(ms) if reference is None else reference
    cond = condition or check_ns_condition
    plan = _folding_plan(ms, k)

    cases = 0
    cond_true = 0
    suff: list[tuple[int, tuple[int, ...]]] = []
    nec: list[tuple[int, tuple[int, ...]]] = []
    n_suff = 0
    n_nec = 0
    deltas_all = list(product(range(-window, window + 1), repeat=len(ms)))
    for n in range(lam):
        base = [n % m for m in ms]
        truth = tuple(n // m for m in ms)
        for deltas in deltas_all:
            cases += 1
            rt = [r + d for r, d in zip(base, deltas)]
            ok = cond(deltas, ms, k)
            if ok:
                cond_true += 1
            try:
                folding, _ = _solve_with_plan(plan, rt)
                exact = folding == truth
            except FoldingFailure:
                exact = False
            if ok and not exact:
                n_suff += 1
                if len(suff) < 20:
                    suff.append((n, deltas))
            elif exact and not ok:
                n_nec += 1
                if len(nec) < 20:
                    nec.append((n, deltas))
    return ExactnessReport(
        moduli=ms,
        reference=k,
        window=window,
        cases=cases,
        condition_true=cond_true,
        sufficiency_counterexamples=tuple(suff),
        necessity_counterexamples=tuple(nec),
        sufficiency_failures=n_suff,
        necessity_failures=n_nec,
    )
