"""Exact data model for chore allocation.

Instances, allocations, the envy verifier and the shared partition
primitives.  Every cost is a nonnegative :class:`fractions.Fraction` and every
comparison is exact; no floating point is used anywhere.  Agents and items are
0-indexed throughout.

Tie-breaking is fixed globally so that every operation is deterministic:
items sort by descending cost then ascending index, bundles by ascending
bundle index.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .errors import (
    BundleOverlap,
    TooFewItems,
    UnknownItem,
    ValidationError,
    ValidationIssue,
)

Rational = Union[int, Fraction]

ZERO = Fraction(0)
ONE = Fraction(1)


class Infinity:
    """Order-maximal sentinel: the envy ratio when a rival bundle costs zero.

    Compares greater than every ``Fraction`` and equal only to itself.
    """

    _instance: "Infinity | None" = None
    __slots__ = ()

    def __new__(cls) -> "Infinity":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __lt__(self, other: object) -> bool:
        return False

    def __le__(self, other: object) -> bool:
        return isinstance(other, Infinity)

    def __gt__(self, other: object) -> bool:
        return not isinstance(other, Infinity)

    def __ge__(self, other: object) -> bool:
        return True

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Infinity)

    def __hash__(self) -> int:
        return hash("chorefair.Infinity")

    def __repr__(self) -> str:
        return "inf"


INFINITY = Infinity()

#: Either an exact nonnegative rational or the infinite sentinel.
Alpha = Union[Fraction, Infinity]


def parse_rational(text: str) -> Fraction:
    """Parse ``"p"`` or ``"p/q"`` into an exact Fraction.

    Raises ``ValueError`` on anything else, including a zero denominator and
    float syntax; negativity is a validation concern, not a parse error.
    """
    s = text.strip()
    if "/" in s:
        num_s, _, den_s = s.partition("/")
        num, den = int(num_s), int(den_s)
        if den == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return Fraction(num, den)
    return Fraction(int(s))


def format_rational(value: Rational) -> str:
    """Canonical text form: lowest-terms ``p/q``, plain ``p`` for integers."""
    f = Fraction(value)
    if f.denominator == 1:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"


@dataclass(frozen=True)
class Instance:
    """A chore-allocation instance: ``n`` agents, ``m`` items, exact costs.

    ``costs[i][e]`` is agent ``i``'s cost for item ``e``.  Use
    :func:`validate_instance` to build one from untrusted input.
    """

    n: int
    m: int
    costs: tuple[tuple[Fraction, ...], ...]
    labels: tuple[str, ...] | None = None

    def item_cost(self, agent: int, item: int) -> Fraction:
        return self.costs[agent][item]

    def cost(self, agent: int, items: Iterable[int]) -> Fraction:
        row = self.costs[agent]
        total = ZERO
        for e in items:
            total += row[e]
        return total

    def agents(self) -> range:
        return range(self.n)

    def items(self) -> range:
        return range(self.m)

    def row_sum(self, agent: int) -> Fraction:
        return self.cost(agent, range(self.m))


def validate_instance(
    rows: Sequence[Sequence[object]],
    labels: Sequence[str] | None = None,
    n: int | None = None,
    m: int | None = None,
) -> Instance:
    """Check a candidate cost matrix and return an :class:`Instance`.

    Entries may be ints, Fractions or rational strings.  All defects are
    collected and reported together in a :class:`ValidationError`; each issue
    names the offending cell.
    """
    issues: list[ValidationIssue] = []
    if n is not None and len(rows) != n:
        issues.append(
            ValidationIssue(
                "ShapeMismatch", "costs", f"declared n={n} but found {len(rows)} rows"
            )
        )
    n_eff = len(rows)
    if n_eff == 0:
        issues.append(ValidationIssue("ShapeMismatch", "costs", "no agent rows"))
        raise ValidationError(issues)
    widths = {len(r) for r in rows}
    m_eff = len(rows[0])
    if len(widths) > 1:
        issues.append(
            ValidationIssue("ShapeMismatch", "costs", f"ragged rows of widths {sorted(widths)}")
        )
    elif m is not None and m_eff != m:
        issues.append(
            ValidationIssue(
                "ShapeMismatch", "costs", f"declared m={m} but rows have {m_eff} columns"
            )
        )
    parsed: list[tuple[Fraction, ...]] = []
    for i, row in enumerate(rows):
        out: list[Fraction] = []
        for e, raw in enumerate(row):
            where = f"costs[{i}][{e}]"
            try:
                if isinstance(raw, bool) or isinstance(raw, float):
                    raise ValueError("floats and booleans are not exact rationals")
                if isinstance(raw, str):
                    value = parse_rational(raw)
                elif isinstance(raw, (int, Fraction)):
                    value = Fraction(raw)
                else:
                    raise ValueError(f"unsupported cost type {type(raw).__name__}")
            except (ValueError, ZeroDivisionError) as exc:
                issues.append(ValidationIssue("BadRational", where, str(exc)))
                continue
            if value < 0:
                issues.append(ValidationIssue("NegativeCost", where, f"cost {value} < 0"))
                continue
            out.append(value)
        parsed.append(tuple(out))
    label_tuple: tuple[str, ...] | None = None
    if labels is not None:
        label_tuple = tuple(str(x) for x in labels)
        if len(label_tuple) != m_eff:
            issues.append(
                ValidationIssue(
                    "ShapeMismatch", "labels", f"{len(label_tuple)} labels for {m_eff} items"
                )
            )
        elif len(set(label_tuple)) != len(label_tuple):
            issues.append(ValidationIssue("ShapeMismatch", "labels", "duplicate item labels"))
    if issues:
        raise ValidationError(issues)
    return Instance(n=n_eff, m=m_eff, costs=tuple(parsed), labels=label_tuple)


def zero_cost_agents(inst: Instance) -> frozenset[int]:
    """Agents whose whole row is zero; they are envy-free under any allocation."""
    return frozenset(i for i in inst.agents() if inst.row_sum(i) == 0)


def normalize(inst: Instance) -> Instance:
    """Scale every row to sum to one.

    A row whose sum is zero is left all-zero (see :func:`zero_cost_agents`).
    Idempotent, and harmless for the verifier: the minimal envy ratio is
    invariant under positive per-row scaling.
    """
    rows: list[tuple[Fraction, ...]] = []
    for i in inst.agents():
        total = inst.row_sum(i)
        if total == 0:
            rows.append(inst.costs[i])
        else:
            rows.append(tuple(c / total for c in inst.costs[i]))
    return Instance(n=inst.n, m=inst.m, costs=tuple(rows), labels=inst.labels)


@dataclass(frozen=True)
class SortedOrder:
    """Agent ``agent``'s items from most to least costly, ties by index."""

    agent: int
    order: tuple[int, ...]


def sorted_order(inst: Instance, agent: int) -> SortedOrder:
    """Descending-cost permutation of the items under one agent's costs."""
    row = inst.costs[agent]
    order = sorted(inst.items(), key=lambda e: (-row[e], e))
    return SortedOrder(agent=agent, order=tuple(order))


def tail_items(inst: Instance, agent: int) -> frozenset[int]:
    """Everything but the agent's ``n - 1`` most costly items.

    Size is ``max(0, m - n + 1)``; every excluded item costs at least as much
    as every included one under this agent's row.
    """
    order = sorted_order(inst, agent).order
    return frozenset(order[inst.n - 1 :])


@dataclass(frozen=True)
class Allocation:
    """An assignment of items to the ``n`` agents, possibly partial.

    Bundles are pairwise disjoint; items absent from every bundle are simply
    unallocated.
    """

    bundles: tuple[frozenset[int], ...]

    @property
    def allocated(self) -> frozenset[int]:
        out: set[int] = set()
        for b in self.bundles:
            out |= b
        return frozenset(out)

    def is_complete(self, inst: Instance) -> bool:
        return self.allocated == frozenset(inst.items())


def make_allocation(bundles: Iterable[Iterable[int]], inst: Instance | None = None) -> Allocation:
    """Build an :class:`Allocation`, rejecting overlaps and unknown items."""
    sets = tuple(frozenset(b) for b in bundles)
    seen: dict[int, int] = {}
    for j, bundle in enumerate(sets):
        for e in bundle:
            if e in seen:
                raise BundleOverlap(f"item {e} appears in bundles {seen[e]} and {j}")
            seen[e] = j
            if inst is not None and not (0 <= e < inst.m):
                raise UnknownItem(f"item {e} outside range 0..{inst.m - 1}")
    return Allocation(bundles=sets)


@dataclass(frozen=True)
class VerifyReport:
    """Exact outcome of the envy check.

    ``alpha`` is the least ratio for which the allocation is alpha-EFX;
    ``witness`` is an ``(envier, envied, removed item)`` triple attaining it,
    or ``None`` when ``alpha`` is zero.  ``per_pair`` maps every ordered agent
    pair to its own minimal feasible ratio.
    """

    alpha: Alpha
    witness: tuple[int, int, int] | None
    per_pair: Mapping[tuple[int, int], Alpha]


def _check_alloc(inst: Instance, alloc: Allocation) -> None:
    if len(alloc.bundles) != inst.n:
        raise ValueError(f"allocation has {len(alloc.bundles)} bundles for n={inst.n}")
    seen: dict[int, int] = {}
    for j, bundle in enumerate(alloc.bundles):
        for e in bundle:
            if not (0 <= e < inst.m):
                raise UnknownItem(f"item {e} outside range 0..{inst.m - 1}")
            if e in seen:
                raise BundleOverlap(f"item {e} appears in bundles {seen[e]} and {j}")
            seen[e] = j


def min_efx_alpha(inst: Instance, alloc: Allocation) -> VerifyReport:
    """Least ``alpha`` for which ``alloc`` is alpha-EFX, with a witness.

    For each envier ``i`` the binding removal is always the cheapest item of
    her own bundle (costs are nonnegative), so each ordered pair needs one
    exact comparison.  The ratio is infinite exactly when some remainder is
    positive while the rival bundle costs zero.  Partial allocations are
    verified over the bundles as given.
    """
    _check_alloc(inst, alloc)
    per_pair: dict[tuple[int, int], Alpha] = {}
    best: Alpha = ZERO
    witness: tuple[int, int, int] | None = None
    for i in inst.agents():
        row = inst.costs[i]
        own = alloc.bundles[i]
        if len(own) >= 2:
            drop = min(own, key=lambda e: (row[e], e))
            remainder = inst.cost(i, own) - row[drop]
        else:
            drop = -1
            remainder = ZERO
        for j in inst.agents():
            if j == i:
                continue
            if remainder == 0:
                pair_alpha: Alpha = ZERO
            else:
                rival = inst.cost(i, alloc.bundles[j])
                if rival == 0:
                    pair_alpha = INFINITY
                else:
                    pair_alpha = remainder / rival
            per_pair[(i, j)] = pair_alpha
            if pair_alpha > best:
                best = pair_alpha
                witness = (i, j, drop)
    return VerifyReport(alpha=best, witness=witness, per_pair=per_pair)


def is_alpha_efx(inst: Instance, alloc: Allocation, alpha: Rational) -> bool:
    """True iff the allocation is ``alpha``-EFX, decided exactly."""
    return min_efx_alpha(inst, alloc).alpha <= Fraction(alpha)


def trivial_tail_allocation(inst: Instance, pivot: int) -> Allocation:
    """Head items of the pivot's order to the others, the tail to the pivot.

    The k-th non-pivot agent (by index) receives the pivot's k-th most costly
    item; the pivot keeps everything else.  The result is ``(m - n)``-EFX.
    Requires ``m >= n``.
    """
    if inst.m < inst.n:
        raise TooFewItems(f"m={inst.m} < n={inst.n}; give each of the first m agents one item")
    order = sorted_order(inst, pivot).order
    bundles: list[set[int]] = [set() for _ in inst.agents()]
    others = [i for i in inst.agents() if i != pivot]
    for k, agent in enumerate(others):
        bundles[agent].add(order[k])
    bundles[pivot] = set(order[inst.n - 1 :])
    return Allocation(bundles=tuple(frozenset(b) for b in bundles))


def greedy_identical_partition(
    costs: Sequence[Fraction], items: Iterable[int], k: int
) -> list[frozenset[int]]:
    """Split ``items`` into ``k`` bundles that are EFX under the single row.

    Items are placed in descending cost order, each into the currently
    cheapest bundle.  Removing any item from any bundle then leaves it no
    more costly than every other bundle: the last item placed into a bundle
    is its cheapest, and at placement time that bundle was the minimum.
    """
    if k < 1:
        raise ValueError("bundle count must be at least 1")
    bundles: list[set[int]] = [set() for _ in range(k)]
    loads: list[Fraction] = [ZERO] * k
    for e in sorted(items, key=lambda e: (-costs[e], e)):
        j = min(range(k), key=lambda j: (loads[j], j))
        bundles[j].add(e)
        loads[j] += costs[e]
    return [frozenset(b) for b in bundles]


def divide_and_choose(
    inst: Instance, cutter: int, chooser: int, items: Iterable[int]
) -> tuple[frozenset[int], frozenset[int]]:
    """Two-agent EFX split: the cutter partitions, the chooser picks first.

    The cut is the greedy two-way partition under the cutter's costs; the
    chooser takes whichever half is cheaper for her (tie: the first).
    Restricted to these two agents and these items the result is EFX for
    both.
    """
    if cutter == chooser:
        raise ValueError("cutter and chooser must differ")
    half_a, half_b = greedy_identical_partition(inst.costs[cutter], items, 2)
    if inst.cost(chooser, half_a) <= inst.cost(chooser, half_b):
        return half_b, half_a
    return half_a, half_b
