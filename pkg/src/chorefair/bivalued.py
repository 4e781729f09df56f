"""Allocation algorithms for two-value cost matrices.

When every cost is one of two global values the matrix scales to entries in
``{eps, 1}`` with ``eps in [0, 1)``.  Three agents then admit an exactly
envy-free-up-to-any-item allocation; for four or more agents the exact ratio
is at most ``n - 1``.  This module never normalizes rows: all reasoning is on
the scaled two-value matrix, which leaves the verifier's per-agent ratios
unchanged.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import NotBiValued, WrongAgentCount
from .model import ONE, ZERO, Allocation, Instance, greedy_identical_partition, min_efx_alpha


@dataclass(frozen=True)
class BiProfile:
    """Recognition result for a two-value instance.

    ``large_bit[i][e]`` is true when item ``e`` carries the larger value for
    agent ``i``.  ``m_plus`` holds the items large to everyone, ``m_minus``
    everything else (small to at least one agent); ``small_items[i]`` are the
    items small to agent ``i``.
    """

    epsilon: Fraction
    large_bit: tuple[tuple[bool, ...], ...]
    m_plus: frozenset[int]
    m_minus: frozenset[int]
    small_items: tuple[frozenset[int], ...]

    def value(self, agent: int, item: int) -> Fraction:
        return ONE if self.large_bit[agent][item] else self.epsilon

    def bundle_value(self, agent: int, items: Iterable[int]) -> Fraction:
        large = 0
        small = 0
        for e in items:
            if self.large_bit[agent][e]:
                large += 1
            else:
                small += 1
        return large + self.epsilon * small


def detect_bivalued(inst: Instance) -> BiProfile | None:
    """Profile the instance if at most two distinct cost values appear.

    The larger value scales to one.  A single-value matrix degenerates to
    all-small bits (value zero) or all-large bits (one positive value); a
    matrix with three or more values returns ``None``.
    """
    values = sorted({c for row in inst.costs for c in row})
    if len(values) > 2:
        return None
    if len(values) <= 1:
        eps = ZERO
        large = bool(values) and values[0] > 0
        bits = tuple(tuple(large for _ in range(inst.m)) for _ in range(inst.n))
    else:
        lo, hi = values
        eps = lo / hi
        bits = tuple(tuple(c == hi for c in row) for row in inst.costs)
    m_plus = frozenset(e for e in inst.items() if all(bits[i][e] for i in inst.agents()))
    m_minus = frozenset(inst.items()) - m_plus
    small_items = tuple(
        frozenset(e for e in inst.items() if not bits[i][e]) for i in inst.agents()
    )
    return BiProfile(
        epsilon=eps, large_bit=bits, m_plus=m_plus, m_minus=m_minus, small_items=small_items
    )


@dataclass(frozen=True)
class ItemTag:
    """How one item's large/small pattern spreads over the agents."""

    kind: str  # "consistently_large" | "consistently_small" | "large_only" | "small_only" | "mixed"
    agent: int | None = None


def classify_items(profile: BiProfile) -> tuple[ItemTag, ...]:
    """Tag every item; with three agents no item is ever ``mixed``."""
    n = len(profile.large_bit)
    m = len(profile.large_bit[0]) if n else 0
    tags: list[ItemTag] = []
    for e in range(m):
        col = [profile.large_bit[i][e] for i in range(n)]
        ones = sum(col)
        if ones == n:
            tags.append(ItemTag("consistently_large"))
        elif ones == 0:
            tags.append(ItemTag("consistently_small"))
        elif ones == 1:
            tags.append(ItemTag("large_only", col.index(True)))
        elif ones == n - 1:
            tags.append(ItemTag("small_only", col.index(False)))
        else:
            tags.append(ItemTag("mixed"))
    return tuple(tags)


def large_only_sets(profile: BiProfile) -> tuple[frozenset[int], ...]:
    """Per agent, the items large to her and small to everyone else."""
    tags = classify_items(profile)
    n = len(profile.large_bit)
    out: list[set[int]] = [set() for _ in range(n)]
    for e, tag in enumerate(tags):
        if tag.kind == "large_only":
            assert tag.agent is not None
            out[tag.agent].add(e)
    return tuple(frozenset(s) for s in out)


def round_robin_chores(
    inst: Instance, items: Iterable[int], order: Sequence[int]
) -> tuple[tuple[frozenset[int], ...], dict[int, int]]:
    """Cyclic picking of the cheapest remaining item, chore-style.

    Agents act in the cyclic ``order``; each takes her minimum-cost remaining
    item (tie: lowest index).  Returns one bundle per instance agent (agents
    outside ``order`` stay empty) plus each picker's last round, rounds
    counted from one.  An earlier-finishing agent never envies a later one,
    and the later one stops envying after dropping her final pick.
    """
    pool = sorted(set(items))
    prefs = {i: sorted(pool, key=lambda e: (inst.costs[i][e], e)) for i in set(order)}
    cursor = {i: 0 for i in set(order)}
    taken: set[int] = set()
    bundles: list[set[int]] = [set() for _ in inst.agents()]
    last_round: dict[int, int] = {}
    round_no = 0
    turn = 0
    while round_no < len(pool):
        agent = order[turn % len(order)]
        seq = prefs[agent]
        c = cursor[agent]
        while seq[c] in taken:
            c += 1
        cursor[agent] = c + 1
        item = seq[c]
        taken.add(item)
        round_no += 1
        bundles[agent].add(item)
        last_round[agent] = round_no
        turn += 1
    return tuple(frozenset(b) for b in bundles), last_round


def _forced_finish_order(
    inst: Instance, items: Sequence[int], finish: tuple[int, int, int]
) -> tuple[tuple[frozenset[int], ...], dict[int, int]]:
    """Round-robin over three agents so their last picks come in ``finish`` order.

    With ``len(items) = 3q + s`` the starting rotation below makes the agents
    finish first/middle/last exactly as requested; with fewer than three
    items the agents that never pick count as finishing earliest, which only
    strengthens the guarantees the callers rely on.
    """
    a, b, c = finish
    rem = len(items) % 3
    start = {0: (a, b, c), 1: (c, a, b), 2: (b, c, a)}[rem]
    bundles, last = round_robin_chores(inst, items, list(start))
    defined = [x for x in finish if x in last]
    for u, v in zip(defined, defined[1:]):
        assert last[u] < last[v], "finish order was not forced"
    return bundles, last


def _identical_row_split(
    inst: Instance, profile: BiProfile, pair: tuple[int, int], other: int
) -> Allocation:
    row = [profile.value(pair[0], e) for e in inst.items()]
    parts = greedy_identical_partition(row, inst.items(), 3)
    pick = min(range(3), key=lambda j: (profile.bundle_value(other, parts[j]), j))
    rest = [j for j in range(3) if j != pick]
    bundles: list[frozenset[int]] = [frozenset()] * 3
    bundles[other] = parts[pick]
    bundles[pair[0]] = parts[rest[0]]
    bundles[pair[1]] = parts[rest[1]]
    return Allocation(bundles=tuple(bundles))


def solve_bi_three(inst: Instance) -> Allocation:
    """Exactly envy-free-up-to-any-item allocation for three two-value agents.

    Routed by the first matching case: a shared cost row; an item small only
    to one agent; an agent with two items large only to her; and the
    remaining pattern of at most one large-only item per agent.
    """
    if inst.n != 3:
        raise WrongAgentCount(f"need n=3, got n={inst.n}")
    profile = detect_bivalued(inst)
    if profile is None:
        raise NotBiValued("matrix has more than two distinct values")
    bits = profile.large_bit
    eps = profile.epsilon
    items = list(inst.items())

    for i, j in ((0, 1), (0, 2), (1, 2)):
        if bits[i] == bits[j]:
            other = next(a for a in range(3) if a not in (i, j))
            return _identical_row_split(inst, profile, (i, j), other)

    tags = classify_items(profile)
    small_only = [(e, tags[e].agent) for e in items if tags[e].kind == "small_only"]
    if small_only:
        e1, agent = small_only[0]
        assert agent is not None
        i = agent
        o1, o2 = (a for a in range(3) if a != i)
        e2 = next(e for e in items if e != e1 and bits[o1][e] != bits[o2][e])
        j, l = (o1, o2) if not bits[o1][e2] else (o2, o1)
        pool = [e for e in items if e not in (e1, e2)]
        parts, _ = _forced_finish_order(inst, pool, (i, j, l))
        bundles = [set(parts[a]) for a in range(3)]
        bundles[i].add(e1)
        bundles[j].add(e2)
        return Allocation(bundles=tuple(frozenset(b) for b in bundles))

    only = large_only_sets(profile)
    heavy = [a for a in range(3) if len(only[a]) >= 2]
    if heavy:
        i = heavy[0]
        others = [a for a in range(3) if a != i]
        with_large = [a for a in others if only[a]]
        assert with_large, "both rivals without large-only items would share a row"
        j = with_large[0]
        l = next(a for a in others if a != j)
        e1, e2 = sorted(only[i])[:2]
        e3 = min(only[j])
        cheap_i = profile.small_items[i]
        if cheap_i == frozenset({e3}):
            # Everything but e3 is large to agent i, so the other two agents
            # agree everywhere else; cut under their shared row.
            pool = [e for e in items if e != e3]
            assert all(bits[j][e] == bits[l][e] for e in pool)
            row = [profile.value(j, e) for e in items]
            parts = greedy_identical_partition(row, pool, 3)
            pick = min(range(3), key=lambda k: (profile.bundle_value(i, parts[k]), k))
            rest = [k for k in range(3) if k != pick]
            lo, hi = sorted((j, l))
            bundles = [frozenset()] * 3
            bundles[i] = parts[pick] | {e3}
            bundles[lo] = parts[rest[0]]
            bundles[hi] = parts[rest[1]]
            return Allocation(bundles=tuple(bundles))
        e4 = min(cheap_i - {e3})
        pool = [e for e in items if e not in (e1, e2, e3, e4)]
        parts, _ = _forced_finish_order(inst, pool, (l, j, i))
        bundles = [set(parts[a]) for a in range(3)]
        bundles[i].add(e4)
        bundles[j].add(e1)
        bundles[l].update((e2, e3))
        return Allocation(bundles=tuple(frozenset(b) for b in bundles))

    defined = [a for a in range(3) if only[a]]
    assert len(defined) >= 2, "two agents without large-only items would share a row"
    if len(defined) == 3:
        i, j, l = 0, 1, 2
    else:
        i, j = defined
        l = next(a for a in range(3) if a not in defined)
    e_i = min(only[i])
    e_j = min(only[j])
    e_l = min(only[l]) if only[l] else None
    removed = {e_i, e_j} | ({e_l} if e_l is not None else set())
    pool = [e for e in items if e not in removed]
    assert all(tags[e].kind.startswith("consistently") for e in pool)
    row = [profile.value(0, e) for e in items]
    parts = greedy_identical_partition(row, pool, 3)
    order = sorted(range(3), key=lambda k: (profile.bundle_value(0, parts[k]), k))
    s1, s2, s3 = (parts[k] for k in order)
    gap = profile.bundle_value(0, s3) - profile.bundle_value(0, s1)
    bundles = [frozenset()] * 3
    if e_l is not None and gap > eps:
        bundles[i] = s1 | {e_j, e_l}
        bundles[j] = s2 | {e_i}
        bundles[l] = s3
    elif e_l is not None:
        bundles[i] = s1 | {e_j}
        bundles[j] = s2 | {e_l}
        bundles[l] = s3 | {e_i}
    else:
        bundles[i] = s1 | {e_j}
        bundles[j] = s2 | {e_i}
        bundles[l] = s3
    return Allocation(bundles=tuple(bundles))


@dataclass(frozen=True)
class PartialBundles:
    """Rebalanced assignment of the not-consistently-large items.

    Every agent holds only items small to her; bundle sizes admit no further
    path transfers, which pins down the balance properties the grouping and
    the final allocation lean on.
    """

    bundles: tuple[frozenset[int], ...]
    sizes: tuple[int, ...]


def _find_transfer_path(
    bundles: Sequence[set[int]], bits: Sequence[Sequence[bool]], n: int
) -> list[int] | None:
    """Shortest path small-end to big-end along cheap-item edges, if any.

    There is an edge ``j -> i`` when agent ``j`` finds some item of bundle
    ``i`` cheap.  Sources are tried by (size, index); a path qualifies when
    its endpoint's bundle is larger by at least two.
    """
    adj = [
        [i != j and any(not bits[j][e] for e in bundles[i]) for i in range(n)] for j in range(n)
    ]
    for j in sorted(range(n), key=lambda a: (len(bundles[a]), a)):
        parent: dict[int, int | None] = {j: None}
        queue: deque[int] = deque([j])
        while queue:
            u = queue.popleft()
            if u != j and len(bundles[u]) - len(bundles[j]) >= 2:
                path = [u]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])  # type: ignore[arg-type]
                path.reverse()
                return path
            for v in range(n):
                if adj[u][v] and v not in parent:
                    parent[v] = u
                    queue.append(v)
    return None


def _assert_balance_properties(
    bundles: Sequence[frozenset[int]], bits: Sequence[Sequence[bool]], n: int
) -> None:
    sizes = [len(b) for b in bundles]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if sizes[i] - sizes[j] >= 2:
                assert all(bits[j][e] for e in bundles[i]), (
                    f"agent {j} still finds bundle {i} partly cheap despite a size gap"
                )
    for i in range(n):
        for j in range(n):
            for l in range(n):
                if len({i, j, l}) < 3:
                    continue
                if sizes[i] - sizes[j] == 1 and sizes[j] - sizes[l] == 1:
                    top_full = all(bits[j][e] for e in bundles[i])
                    mid_full = all(bits[l][e] for e in bundles[j])
                    assert top_full or mid_full, "chained unit gaps need one expensive link"


def partial_allocation_small(inst: Instance, profile: BiProfile) -> PartialBundles:
    """Assign every not-consistently-large item to an agent that finds it cheap,
    then rebalance along transfer paths until no size gap of two is reachable.

    Each transfer walks a path from the small bundle to the big one; every
    node takes its successor's cheapest item, so only the endpoints change
    size and every moved item stays cheap to its receiver.  The sum of
    squared sizes strictly decreases, so the loop terminates.
    """
    n = inst.n
    bits = profile.large_bit
    bundles: list[set[int]] = [set() for _ in range(n)]
    for e in sorted(profile.m_minus):
        homes = [i for i in range(n) if not bits[i][e]]
        target = min(homes, key=lambda i: (len(bundles[i]), i))
        bundles[target].add(e)
    while True:
        path = _find_transfer_path(bundles, bits, n)
        if path is None:
            break
        for taker, source in zip(path, path[1:]):
            item = min(bundles[source], key=lambda e: (bits[taker][e], e))
            assert not bits[taker][item], "transfer would hand over an expensive item"
            bundles[source].remove(item)
            bundles[taker].add(item)
    out = tuple(frozenset(b) for b in bundles)
    for i in range(n):
        assert all(not bits[i][e] for e in out[i])
    _assert_balance_properties(out, bits, n)
    return PartialBundles(bundles=out, sizes=tuple(len(b) for b in out))


@dataclass(frozen=True)
class AgentGroups:
    """Ordered partition of the agents, largest rebalanced bundles first.

    Agents whose bundle looks partly cheap to the level below are grouped one
    level down; within a group sizes differ by at most one, and agents in a
    lower group price every higher-group bundle at its full item count.
    """

    groups: tuple[frozenset[int], ...]
    level_of: Mapping[int, int]


def build_agent_groups(x0: PartialBundles, profile: BiProfile) -> AgentGroups:
    bits = profile.large_bit
    sizes = x0.sizes
    n = len(sizes)
    lo, hi = min(sizes), max(sizes)
    level_sets = {r: [i for i in range(n) if sizes[i] == r] for r in range(lo, hi + 1)}

    def sees_cheap(j: int, i: int) -> bool:
        return any(not bits[j][e] for e in x0.bundles[i])

    promoted: dict[int, set[int]] = {}
    for r in range(lo, hi + 1):
        members = level_sets[r]
        below = level_sets.get(r - 1, [])
        f = {i for i in members if any(sees_cheap(j, i) for j in below)}
        changed = True
        while changed:
            changed = False
            for i in members:
                if i not in f and any(sees_cheap(j, i) for j in f):
                    f.add(i)
                    changed = True
        promoted[r] = f
    groups: list[frozenset[int]] = []
    for r in range(hi, lo - 1, -1):
        a_r = set(promoted.get(r + 1, set())) | (set(level_sets[r]) - promoted[r])
        if a_r:
            groups.append(frozenset(a_r))
    level_of = {i: pos for pos, g in enumerate(groups) for i in g}
    for g in groups:
        span = [sizes[i] for i in g]
        assert max(span) - min(span) <= 1
    for hi_pos in range(len(groups)):
        for lo_pos in range(hi_pos + 1, len(groups)):
            for upper in groups[hi_pos]:
                for lower in groups[lo_pos]:
                    assert not sees_cheap(lower, upper), (
                        "lower-group agent prices a higher-group bundle below its size"
                    )
    assert all(level_of[i] == len(groups) - 1 for i in range(n) if sizes[i] == lo)
    return AgentGroups(groups=tuple(groups), level_of=level_of)


def bi_general_branch(profile: BiProfile, n: int) -> str:
    """Which arm of the four-or-more-agent solver an instance takes."""
    p = len(profile.m_plus)
    if p >= n:
        return "plenty-large"
    if p == n - 1:
        return "one-short"
    return "scarce-large"


def _rr_merge(
    inst: Instance, bundles: list[set[int]], pool: Iterable[int], order: Sequence[int]
) -> None:
    picked, _ = round_robin_chores(inst, pool, order)
    for i in inst.agents():
        bundles[i] |= picked[i]


def solve_bi_general(inst: Instance) -> Allocation:
    """Allocation for ``n >= 4`` two-value agents, exact ratio at most n-1.

    With at least ``n`` everyone-large items each agent absorbs one before a
    chore round-robin; with exactly ``n - 1`` the agent richest in cheap
    items first fills up to unit cost.  Otherwise the cheap items are
    rebalanced into a partial allocation whose group structure steers where
    the everyone-large items (and any further moves) may go.
    """
    n = inst.n
    if n < 4:
        raise WrongAgentCount(f"need n>=4, got n={n}")
    profile = detect_bivalued(inst)
    if profile is None:
        raise NotBiValued("matrix has more than two distinct values")
    plus = sorted(profile.m_plus)
    bundles: list[set[int]] = [set() for _ in inst.agents()]
    if len(plus) >= n:
        for agent in inst.agents():
            bundles[agent].add(plus[agent])
        rest = [e for e in inst.items() if e not in set(plus[:n])]
        _rr_merge(inst, bundles, rest, list(inst.agents()))
        return Allocation(bundles=tuple(frozenset(b) for b in bundles))
    if len(plus) == n - 1:
        rich = max(inst.agents(), key=lambda i: (len(profile.small_items[i]), -i))
        pool = sorted(profile.m_minus)
        filled: Fraction = ZERO
        while filled < 1 and pool:
            e = min(pool, key=lambda x: (profile.value(rich, x), x))
            pool.remove(e)
            bundles[rich].add(e)
            filled += profile.value(rich, e)
        others = [i for i in inst.agents() if i != rich]
        for agent, e in zip(others, plus):
            bundles[agent].add(e)
        _rr_merge(inst, bundles, pool, others + [rich])
        return Allocation(bundles=tuple(frozenset(b) for b in bundles))
    return _solve_bi_scarce(inst, profile)


def _solve_bi_scarce(inst: Instance, profile: BiProfile) -> Allocation:
    """The ``|M+| <= n - 2`` arm: rebalance, group, then place the large items."""
    n = inst.n
    bits = profile.large_bit
    x0 = partial_allocation_small(inst, profile)
    groups = build_agent_groups(x0, profile)
    # Re-index agents: higher groups first, larger bundles first, then by
    # index.  Bottom-group agents occupy the trailing slots.
    slot_of_agent = sorted(inst.agents(), key=lambda i: (groups.level_of[i], -x0.sizes[i], i))
    position = {agent: k for k, agent in enumerate(slot_of_agent)}
    x0_slot = [x0.bundles[slot_of_agent[k]] for k in range(n)]
    group_slots = [frozenset(position[i] for i in g) for g in groups.groups]
    bottom = sorted(group_slots[-1])
    assert bottom == list(range(n - len(bottom), n))

    def is_large(slot: int, item: int) -> bool:
        return bits[slot_of_agent[slot]][item]

    def slot_value(slot: int, items: Iterable[int]) -> Fraction:
        return profile.bundle_value(slot_of_agent[slot], items)

    work = [set(b) for b in x0_slot]
    baseline = min_efx_alpha(inst, Allocation(bundles=x0.bundles)).alpha
    if baseline > Fraction(n - 1):
        _rebalance_into_bound(work, x0_slot, group_slots, bottom, profile, is_large, n)
    else:
        _place_large_on_bottom(work, x0_slot, bottom, profile, is_large, slot_value, n)
    out: list[frozenset[int]] = [frozenset()] * n
    for k in range(n):
        out[slot_of_agent[k]] = frozenset(work[k])
    return Allocation(bundles=tuple(out))


def _rebalance_into_bound(
    work: list[set[int]],
    x0_slot: Sequence[frozenset[int]],
    group_slots: Sequence[frozenset[int]],
    bottom: Sequence[int],
    profile: BiProfile,
    is_large,
    n: int,
) -> None:
    """Even out bundle sizes batch-by-batch until the count ratio is safe.

    Empty bottom-group bundles are fed first from the everyone-large pool and
    then from the current largest bundle.  While the largest count exceeds
    ``(n-1) * smallest + 1``, the smallest bundle's whole group receives one
    item apiece, harvested from the largest bundles when the pool runs dry.
    Leftover pool items cycle over the bottom group.
    """
    pool: deque[int] = deque(sorted(profile.m_plus))
    while True:
        empties = [j for j in bottom if not work[j]]
        if not empties:
            break
        j = empties[0]
        if pool:
            e = pool.popleft()
        else:
            donor = max(range(n), key=lambda i: (len(work[i]), i))
            if len(work[donor]) <= 1:
                # Fewer items than bundles; everything left is a singleton,
                # which is already safe.
                break
            e = min(work[donor])
            work[donor].remove(e)
        work[j].add(e)
    rounds = 0
    while True:
        sizes = [len(b) for b in work]
        if max(sizes) <= (n - 1) * min(sizes) + 1:
            break
        rounds += 1
        assert rounds <= 8 * (len(profile.m_minus) + n + 4), "rebalancing failed to converge"
        j = min(range(n), key=lambda i: (len(work[i]), i))
        batch = next(g for g in group_slots if j in g)
        assert max(sizes) - min(sizes) >= n, "not enough slack for a batched transfer"
        while len(pool) < len(batch):
            donor = max(range(n), key=lambda i: (len(work[i]), i))
            e = min(work[donor])
            work[donor].remove(e)
            pool.append(e)
        for member in sorted(batch):
            work[member].add(pool.popleft())
    k = 0
    while pool:
        work[bottom[k % len(bottom)]].add(pool.popleft())
        k += 1
    _assert_rebalance_invariants(work, x0_slot, group_slots, is_large, n)


def _assert_rebalance_invariants(
    work: Sequence[set[int]],
    x0_slot: Sequence[frozenset[int]],
    group_slots: Sequence[frozenset[int]],
    is_large,
    n: int,
) -> None:
    received = [frozenset(work[i]) - x0_slot[i] for i in range(n)]
    for hi_pos in range(len(group_slots)):
        for lo_pos in range(hi_pos + 1, len(group_slots)):
            for upper in group_slots[hi_pos]:
                for lower in group_slots[lo_pos]:
                    for e in work[upper]:
                        assert is_large(lower, e), (
                            "higher-group bundle holds an item cheap to a lower group"
                        )
                    assert len(received[upper]) <= len(received[lower])
    for i in range(n):
        for e in received[i]:
            assert is_large(i, e), "moved item should be expensive to its receiver"
    for g in group_slots[:-1]:
        assert len({len(received[i]) for i in g}) <= 1
    bottom_counts = [len(received[i]) for i in sorted(group_slots[-1])]
    assert max(bottom_counts) - min(bottom_counts) <= 1


def _place_large_on_bottom(
    work: list[set[int]],
    x0_slot: Sequence[frozenset[int]],
    bottom: Sequence[int],
    profile: BiProfile,
    is_large,
    slot_value,
    n: int,
) -> None:
    """Distribute the everyone-large items over the bottom group without
    breaking the ratio the rebalanced allocation already satisfies.

    If the pool covers the whole group, cycle it; if the group member at
    pool-depth already carries cost ``1/(n-2)``, the last ``|pool|`` agents
    take one item each.  Otherwise agents are finalized back-to-front: a
    bundle wholly cheap to the remaining group is dissolved into it and
    replaced by one pool item, and when pool and group sizes meet, the
    leftovers go one apiece.
    """
    plus = sorted(profile.m_plus)
    p = len(plus)
    if p == 0:
        return
    s = len(bottom)
    if s <= p:
        for k, e in enumerate(plus):
            work[bottom[k % s]].add(e)
        return
    watermark = n - p - 1  # slot holding the (n - p)-th largest bundle
    if slot_value(watermark, x0_slot[watermark]) >= Fraction(1, n - 2):
        for k, e in enumerate(plus):
            work[n - 1 - k].add(e)
        return
    pool: deque[int] = deque(plus)
    live = set(bottom)
    took_pool: dict[int, int] = {i: 0 for i in bottom}
    for i in range(n - 1, n - s - 1, -1):
        if not pool:
            # Nothing left to hand out; the remaining agents keep their
            # bundles, which the finalized ones already price at one or hold
            # as singletons.
            break
        rest = live - {i}
        movable = all(any(not is_large(j, e) for j in rest) for e in work[i])
        if movable:
            for e in sorted(work[i]):
                homes = [j for j in rest if not is_large(j, e)]
                target = min(homes, key=lambda j: (len(work[j]), j))
                work[i].remove(e)
                work[target].add(e)
            taken = pool.popleft()
            work[i].add(taken)
            took_pool[i] += 1
        live.remove(i)
        if len(pool) == len(live):
            for j, e in zip(sorted(live), list(pool)):
                work[j].add(e)
                took_pool[j] += 1
            pool.clear()
            break
    assert not pool, "everyone-large items left over after the finalize loop"
    for i in bottom:
        assert took_pool[i] <= 1, "bottom-group agent received two everyone-large items"
        if i in live or len(work[i]) == 1:
            continue
        for j in live:
            assert slot_value(j, work[i]) >= 1, (
                "finalized bundle should look expensive to every remaining agent"
            )
