"""Combinatorial dimensions, the tuple-labeling game, and witness trees.

Three dimensions over a finite class: VC (largest shattered set), the
mistake-tree depth (exhaustive minimax game search with version-space
memoization), and the depth of the deepest tuple tree whose level-n nodes
carry (n+1)-point tuples with every pattern realizable.

The tuple-labeling game: the adversary plays a k-tuple of points each
round, the learner answers with a bit pattern, and recorded rounds cut the
version space down.  `winning_strategy` is an effective greedy strategy:
play an unrealized pattern if one exists (immediate win), otherwise the
pattern leaving the fewest consistent hypotheses, which divides the
version space by at least 2^k.  `induced_partial_class` materializes the
class of all total labelings of the domain that dodge the strategy on
every k-tuple.

`build_vcl_adversary_tree` produces the exponentially reweighted VCL tree
(BFS node k carries 2^(k-1) points) used by the hard-process generator,
either by a backtracking branching construction (small depths; deeper
branching trees need 2^(#nodes)-1 distinct points, which no finite domain
supplies) or as a chain through one shattered point set.
"""

from dataclasses import dataclass, field
from itertools import combinations, permutations, product

from .concepts import ConceptClass, FullClass
from .errors import InfeasibleError, SizeError, StateError

#: Domain-size cap for materializing the strategy-dodging class at k >= 2.
INDUCED_DOMAIN_MAX = 12

DEFAULT_DIM_CAP = 32


# ---------------------------------------------------------------------------
# version-space oracle (bitmask-indexed, memoized)
# ---------------------------------------------------------------------------


class VersionSpaceOracle:
    """Memoized mistake-tree computations over subsets of one finite class.

    Version spaces are bitmasks over the class's hypothesis list; the memo
    is private to the instance, so concurrent trials can each own one.
    """

    def __init__(self, concept_class):
        if isinstance(concept_class, FullClass):
            raise TypeError("use the analytic path for FullClass")
        self.cls = concept_class
        self.labels = [h.labels for h in concept_class.hypotheses]
        self.domain = concept_class.domain
        self.full_mask = (1 << len(self.labels)) - 1
        self._restrict_memo = {}
        self._ldim_memo = {}

    def restrict_mask(self, mask, pos, y):
        key = (mask, pos, y)
        got = self._restrict_memo.get(key)
        if got is None:
            bit = str(y)
            got = 0
            m = mask
            while m:
                low = m & -m
                i = low.bit_length() - 1
                if self.labels[i][pos] == bit:
                    got |= low
                m ^= low
            self._restrict_memo[key] = got
        return got

    def ldim(self, mask):
        """Mistake-tree depth of the masked subclass; -1 for the empty mask."""
        if mask == 0:
            return -1
        got = self._ldim_memo.get(mask)
        if got is not None:
            return got
        best = 0
        for pos in range(len(self.domain)):
            m0 = self.restrict_mask(mask, pos, 0)
            m1 = self.restrict_mask(mask, pos, 1)
            if m0 and m1:
                cand = 1 + min(self.ldim(m0), self.ldim(m1))
                if cand > best:
                    best = cand
        self._ldim_memo[mask] = best
        return best

    def ldim_witness(self, mask, depth):
        """Nested witness {(): point, (b,): point, ...} for a depth-d tree."""
        nodes = {}

        def rec(m, path):
            if len(path) >= depth:
                return
            for pos in range(len(self.domain)):
                m0 = self.restrict_mask(m, pos, 0)
                m1 = self.restrict_mask(m, pos, 1)
                if (
                    m0
                    and m1
                    and 1 + min(self.ldim(m0), self.ldim(m1)) >= depth - len(path)
                ):
                    nodes[path] = self.domain[pos]
                    rec(m0, path + (0,))
                    rec(m1, path + (1,))
                    return
            raise StateError("witness extraction lost the guaranteed depth")

        rec(mask, ())
        return nodes


# ---------------------------------------------------------------------------
# dimensions
# ---------------------------------------------------------------------------


def vc_dimension(concept_class):
    """Largest |S| with S shattered; None for the empty class."""
    if isinstance(concept_class, FullClass):
        return concept_class.free_count()
    if concept_class.is_empty():
        return None
    domain = concept_class.domain
    best = 0
    for size in range(1, len(domain) + 1):
        if any(
            concept_class.shatters(S) for S in combinations(domain, size)
        ):
            best = size
        else:
            break
    return best


def littlestone_dimension(concept_class, cap=DEFAULT_DIM_CAP):
    """Exact mistake-tree depth, saturated at `cap` (a return equal to the
    cap means "at least cap"); None for the empty class."""
    if isinstance(concept_class, FullClass):
        return min(concept_class.free_count(), cap)
    if concept_class.is_empty():
        return None
    oracle = VersionSpaceOracle(concept_class)
    return min(oracle.ldim(oracle.full_mask), cap)


def littlestone_witness(concept_class, depth):
    """A depth-d complete binary mistake tree, as a LittlestoneTree."""
    if isinstance(concept_class, FullClass):
        free = [p for p in concept_class.domain if p not in concept_class.pins]
        if depth > len(free):
            raise InfeasibleError(
                f"no depth-{depth} mistake tree: only {len(free)} free points"
            )
        return LittlestoneTree(depth=depth, levels=tuple(free[:depth]), nodes=None)
    oracle = VersionSpaceOracle(concept_class)
    have = oracle.ldim(oracle.full_mask)
    if depth > have:
        raise InfeasibleError(f"no depth-{depth} mistake tree: dimension is {have}")
    return LittlestoneTree(
        depth=depth, levels=None, nodes=oracle.ldim_witness(oracle.full_mask, depth)
    )


@dataclass(frozen=True)
class LittlestoneTree:
    """Complete binary mistake tree of the given depth.

    Either per-level uniform (`levels[d]` labels every depth-d node; the
    analytic full-class witness) or explicit (`nodes[path] -> point` for
    every bit path shorter than `depth`).
    """

    depth: int
    levels: tuple = None
    nodes: dict = None

    def point_at(self, path):
        if len(path) >= self.depth:
            raise InfeasibleError(f"walk below witness depth {self.depth}")
        if self.levels is not None:
            return self.levels[len(path)]
        return self.nodes[tuple(path)]

    def paths_consistent(self, concept_class):
        """Check every root path is realized (used by tests at desk scale)."""
        for bits in product((0, 1), repeat=self.depth):
            prefix = []
            for d in range(self.depth):
                prefix.append((self.point_at(bits[:d]), bits[d]))
                if not concept_class.is_realizable(prefix):
                    return False
        return True


def vcl_depth(concept_class, cap=DEFAULT_DIM_CAP):
    """Depth of the deepest tuple tree (level n uses (n+1)-point tuples,
    all patterns realizable), saturated at `cap`."""
    if isinstance(concept_class, FullClass):
        free = concept_class.free_count()
        d = 0
        while (d + 1) * (d + 2) // 2 <= free:
            d += 1
        return min(d, cap)
    if concept_class.is_empty():
        return 0
    oracle = VersionSpaceOracle(concept_class)
    domain = concept_class.domain
    memo = {}

    def depth_from(mask, level):
        if level >= cap:
            return 0
        key = (mask, level)
        got = memo.get(key)
        if got is not None:
            return got
        best = 0
        for S in combinations(range(len(domain)), level + 1):
            sub = []
            ok = True
            for pattern in product((0, 1), repeat=level + 1):
                m = mask
                for pos, y in zip(S, pattern):
                    m = oracle.restrict_mask(m, pos, y)
                    if not m:
                        ok = False
                        break
                if not ok:
                    break
                sub.append(m)
            if ok:
                best = max(best, 1 + min(depth_from(m, level + 1) for m in sub))
                if best >= cap - level:
                    break
        memo[key] = best
        return best

    return min(depth_from(oracle.full_mask, 0), cap)


# ---------------------------------------------------------------------------
# the tuple-labeling game
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GameRecord:
    """Accumulated (tuple, pattern) rounds of the tuple-labeling game.

    Round r's tuple has length r; the pattern labels it pointwise.
    """

    rounds: tuple = ()

    def __post_init__(self):
        for r, (tup, pattern) in enumerate(self.rounds, start=1):
            if len(tup) != r or len(pattern) != r:
                raise ValueError(f"round {r} must carry an {r}-tuple and {r}-bit pattern")

    @property
    def k(self):
        return len(self.rounds) + 1

    def pairs(self):
        out = []
        for tup, pattern in self.rounds:
            out.extend(zip(tup, (int(b) for b in pattern)))
        return out

    def extended(self, tup, pattern):
        return GameRecord(self.rounds + ((tuple(tup), pattern),))


def _strategy_pattern(version_space, tup, thresholds_shortcut=False):
    """Greedy pattern choice on `tup` against the given version space.

    Returns the lexicographically least pattern realized by no hypothesis
    (immediate win) or, failing that, the lexicographically least pattern
    minimizing the surviving count.  Defined (all-zeros) even on an empty
    version space.
    """
    k = len(tup)
    if thresholds_shortcut and k == 2:
        # thresholds never realize the decreasing pattern: 1 on the smaller
        # point, 0 on the other (ties keep "10")
        a, b = tup
        return "10" if int(a) <= int(b) else "01"
    best_pattern, best_count = None, None
    for bits in product("01", repeat=k):
        pattern = "".join(bits)
        pairs = list(zip(tup, (int(b) for b in pattern)))
        count = sum(1 for h in version_space.hypotheses if version_space._consistent(h.labels, pairs))
        if count == 0:
            return pattern
        if best_count is None or count < best_count:
            best_pattern, best_count = pattern, count
    return best_pattern


def winning_strategy(record, concept_class, tup):
    """The strategy's pattern for the current round's tuple.

    Plays an unrealized pattern when one exists; otherwise the surviving
    version space shrinks by a factor of at least 2^k.  Raises StateError
    once the version space is already empty (game already won).
    """
    tup = tuple(tup)
    if len(tup) != record.k:
        raise ValueError(f"tuple must have length {record.k}, got {len(tup)}")
    for x in tup:
        concept_class.position(x)
    current = concept_class.restrict(record.pairs())
    if current.is_empty():
        raise StateError("game already won: version space is empty")
    shortcut = str(concept_class.preset).startswith("thresholds:")
    return _strategy_pattern(current, tup, thresholds_shortcut=shortcut)


def induced_partial_class(record, concept_class, domain_cap=INDUCED_DOMAIN_MAX):
    """All total labelings of the domain that disagree with the strategy's
    pattern on every k-tuple (ordered, repeats allowed).

    Materialized extensionally; at k >= 2 the domain is capped because the
    build enumerates 2^N labelings against N^k tuples.
    """
    from .concepts import Hypothesis  # local to avoid a cycle at import time

    domain = concept_class.domain
    k = record.k
    shortcut = str(concept_class.preset).startswith("thresholds:")
    current = concept_class.restrict(record.pairs())

    if k > len(domain):
        # tuples range over distinct points, so none exist: vacuous constraint
        if len(domain) > domain_cap:
            raise SizeError(
                f"induced class needs 2^{len(domain)} labelings", cap=domain_cap
            )
        hyps = [
            Hypothesis(domain, "".join(bits))
            for bits in product("01", repeat=len(domain))
        ]
        return ConceptClass(domain, hyps, preset="custom")
    if k == 1:
        # pointwise flip of the strategy: exactly one labeling
        row = []
        for x in domain:
            g = _strategy_pattern(current, (x,), thresholds_shortcut=shortcut)
            row.append("1" if g == "0" else "0")
        return ConceptClass(domain, (Hypothesis(domain, "".join(row)),), preset="custom")
    if len(domain) > domain_cap:
        raise SizeError(
            f"induced class at k={k} needs 2^{len(domain)} labelings", cap=domain_cap
        )
    strategy = {}
    for tup in permutations(domain, k):
        strategy[tup] = _strategy_pattern(current, tup, thresholds_shortcut=shortcut)
    kept = []
    for bits in product("01", repeat=len(domain)):
        row = "".join(bits)
        value = {x: row[i] for i, x in enumerate(domain)}
        if all(
            "".join(value[x] for x in tup) != pattern
            for tup, pattern in strategy.items()
        ):
            kept.append(Hypothesis(domain, row))
    return ConceptClass(domain, kept, preset="custom")


# ---------------------------------------------------------------------------
# reweighted adversary tree
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VclNode:
    index: int  # 1-based BFS index
    depth: int
    parent: int  # 0 for the root
    edge_pattern: str  # labels on the parent's points; "" for the root
    points: tuple
    pins: tuple  # inherited (point, label) constraints incl. indifference


@dataclass
class VclTree:
    """Tuple tree whose BFS-indexed node k carries 2^(k-1) points.

    `chain=True` marks the degenerate shattered-chain form: every pattern
    from node k leads to the same node k+1, so a walk never leaves the
    spine and no off-branch nodes exist.  Branching trees store explicit
    children keyed by (parent index, edge pattern).
    """

    depth: int
    nodes: tuple
    children: dict = field(default_factory=dict)
    chain: bool = False

    def node(self, index):
        return self.nodes[index - 1]

    def child(self, index, pattern):
        if self.chain:
            return index + 1 if index < len(self.nodes) else None
        return self.children.get((index, pattern))

    def check_invariants(self, concept_class):
        """Node sizing, path realizability, and pin consistency."""
        for node in self.nodes:
            if len(node.points) != 1 << (node.index - 1):
                raise StateError(f"node {node.index} has {len(node.points)} points")
            if concept_class.restrict(node.pins).is_empty():
                raise StateError(f"node {node.index} has no consistent labeling")
        return True


def _tree_shape(depth, max_nodes):
    """BFS shape of the branching tree: list of (depth, parent, pattern-slot
    arity source) or None when the point demand exceeds the domain."""
    shape = [(0, 0, None)]  # (depth, parent index, edge pattern placeholder)
    queue = [(1, 0)]  # (bfs index, depth)
    total_points = 1
    while queue:
        index, d = queue.pop(0)
        if d >= depth - 1:
            continue
        size = 1 << (index - 1)
        for _ in range(1 << size):
            child_index = len(shape) + 1
            shape.append((d + 1, index, None))
            child_points = 1 << (child_index - 1)
            total_points += child_points
            if len(shape) > max_nodes or total_points > max_nodes:
                return None, total_points
            queue.append((child_index, d + 1))
    return shape, total_points


def build_vcl_adversary_tree(concept_class, depth):
    """Reweighted tuple tree of the given depth for the class.

    Tries the branching construction first (backtracking over point tuples
    and indifference labelings, feasible only at small depth: a depth-D
    branching tree demands 2^(#nodes)-1 distinct points); falls back to
    the chain through one shattered set of 2^D - 1 points.  Raises
    InfeasibleError when neither exists.
    """
    if depth == 0:
        return VclTree(depth=0, nodes=())
    domain = concept_class.domain
    n_domain = len(domain)

    tree = None
    shape, demand = _tree_shape(depth, max_nodes=n_domain)
    if shape is not None and demand <= n_domain:
        tree = _build_branching(concept_class, depth, shape)
    if tree is None:
        tree = _build_chain(concept_class, depth)
    if tree is None:
        raise InfeasibleError(
            f"no depth-{depth} reweighted tree for {concept_class!r}"
        )
    return tree


def _build_chain(concept_class, depth):
    need = (1 << depth) - 1
    domain = concept_class.domain
    if len(domain) < need:
        return None
    points = list(domain[:need])
    if isinstance(concept_class, FullClass):
        if any(p in concept_class.pins for p in points):
            return None
    else:
        if need > 20 or not concept_class.shatters(points):
            return None
    nodes = []
    start = 0
    for k in range(1, depth + 1):
        size = 1 << (k - 1)
        nodes.append(
            VclNode(
                index=k,
                depth=k - 1,
                parent=k - 1,
                edge_pattern="",
                points=tuple(points[start : start + size]),
                pins=(),
            )
        )
        start += size
    return VclTree(depth=depth, nodes=tuple(nodes), chain=True)


def _build_branching(concept_class, depth, shape):
    """Backtracking assignment of point tuples + indifference labels.

    Candidates are tried in domain order, making the construction (and the
    promoted-descendant choice it mirrors) canonical.
    """
    domain = concept_class.domain
    n = len(shape)
    sizes = [1 << i for i in range(n)]
    assignment = [None] * n  # per node: (points, pins)

    def viable(pins, points):
        sub = concept_class.restrict(pins)
        return not sub.is_empty() and sub.shatters(points)

    def rec(i, used):
        if i == n:
            return True
        d, parent, _ = shape[i]
        size = sizes[i]
        if parent == 0:
            base_pins = ()
        else:
            p_points, p_pins = assignment[parent - 1]
            # edge pattern from the parent is chosen per child slot: child
            # slots of one parent appear consecutively in BFS order
            first_child = next(
                j for j in range(n) if shape[j][1] == parent
            )
            pattern_rank = i - first_child
            psize = sizes[parent - 1]
            pattern = format(pattern_rank, f"0{psize}b")
            base_pins = p_pins + tuple(zip(p_points, (int(b) for b in pattern)))
        # indifference: the new subtree must commit to labels for every node
        # strictly between its parent and itself in BFS order
        gap_nodes = [assignment[j] for j in range(parent, i)] if parent else []
        free = [p for p in domain if p not in used]
        for tup in combinations(free, size):
            for taus in _tau_choices(gap_nodes):
                pins = base_pins + taus
                if viable(pins, tup):
                    assignment[i] = (tup, pins)
                    if rec(i + 1, used | set(tup)):
                        return True
                    assignment[i] = None
        return False

    def _tau_choices(gap_nodes):
        if not gap_nodes:
            yield ()
            return
        spans = [pts for pts, _ in gap_nodes]
        total = sum(len(pts) for pts in spans)
        for bits in product((0, 1), repeat=total):
            out = []
            pos = 0
            for pts in spans:
                out.extend(zip(pts, bits[pos : pos + len(pts)]))
                pos += len(pts)
            yield tuple(out)

    if not rec(0, set()):
        return None

    nodes = []
    children = {}
    child_counter = {}
    for i in range(n):
        d, parent, _ = shape[i]
        points, pins = assignment[i]
        if parent:
            rank = child_counter.get(parent, 0)
            child_counter[parent] = rank + 1
            psize = sizes[parent - 1]
            pattern = format(rank, f"0{psize}b")
            children[(parent, pattern)] = i + 1
        else:
            pattern = ""
        nodes.append(
            VclNode(
                index=i + 1,
                depth=d,
                parent=parent,
                edge_pattern=pattern,
                points=points,
                pins=pins,
            )
        )
    return VclTree(depth=depth, nodes=tuple(nodes), children=children)
