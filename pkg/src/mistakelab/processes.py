"""Data-process generators with conditional-rollout oracles, plus the two
hard-process constructions.

Randomness contract: every model draws through named substreams derived
from one master seed (`seeding.derive_rng`), so instance sequencing and
adversary labels are independent of anything a learner does, and traces
are reproducible bit-for-bit from (model, seed, T).

Adversaries:

- `littlestone_adversary` walks a mistake-tree witness: the instance is
  the node at the current walk depth, the label an oblivious uniform bit,
  and the walk descends the labeled edge.  Any fixed learner therefore
  errs with probability exactly 1/2 per round.
- `vcl_adversary` emits the reweighted tree's node points (in node order,
  BFS across nodes), labels in-branch nodes by the uniformly chosen edge
  pattern, and labels off-branch nodes by the labels the next in-branch
  node's subtree is committed to (indifference), recording the boundary
  after node k at 2^k - 1 emitted instances.  Every prefix stays
  realizable by the backing class.
"""

from dataclasses import dataclass, field

from .concepts import FullClass
from .errors import ConfigError, EndOfStream, InfeasibleError, InvariantError
from .seeding import derive_rng
from .trees import littlestone_witness


# ---------------------------------------------------------------------------
# process models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IIDProcess:
    points: tuple
    probs: tuple = None  # uniform when omitted
    kind = "iid"
    deterministic = False

    def __post_init__(self):
        if self.probs is not None:
            if len(self.probs) != len(self.points):
                raise ConfigError("probs must align with points")
            if abs(sum(self.probs) - 1.0) > 1e-9:
                raise ConfigError("probs must sum to 1")

    def _draw(self, rng):
        if self.probs is None:
            return self.points[rng.randrange(len(self.points))]
        return rng.choices(self.points, weights=self.probs, k=1)[0]

    def next_point(self, history, rng):
        return self._draw(rng)

    def rollout(self, history, horizon, rng):
        return tuple(self._draw(rng) for _ in range(horizon))


@dataclass(frozen=True)
class MarkovProcess:
    """Finite-state chain over points; rows map a point to successor
    points with probabilities."""

    points: tuple
    start: str
    transitions: dict  # point -> ((succ, prob), ...)
    kind = "markov"
    deterministic = False

    def _step(self, state, rng):
        row = self.transitions.get(state)
        if not row:
            raise ConfigError(f"no transition row for state {state!r}")
        succs, probs = zip(*row)
        return rng.choices(succs, weights=probs, k=1)[0]

    def next_point(self, history, rng):
        if not history:
            return self.start
        return self._step(history[-1], rng)

    def rollout(self, history, horizon, rng):
        out = []
        state = history[-1] if history else None
        for _ in range(horizon):
            state = self.start if state is None else self._step(state, rng)
            out.append(state)
        return tuple(out)


@dataclass(frozen=True)
class DeterministicProcess:
    sequence: tuple
    kind = "deterministic"
    deterministic = True

    def next_point(self, history, rng=None):
        t = len(history)
        if t >= len(self.sequence):
            raise EndOfStream(f"sequence exhausted after {len(self.sequence)} points")
        return self.sequence[t]

    def rollout(self, history, horizon, rng=None):
        t = len(history)
        if t + horizon > len(self.sequence):
            raise EndOfStream(
                f"sequence of length {len(self.sequence)} cannot continue "
                f"{horizon} rounds past {t}"
            )
        return tuple(self.sequence[t : t + horizon])


@dataclass(frozen=True)
class NovelPointProcess:
    """A fresh, never-seen point every round: the canonical process
    violating the disjoint-set visit condition with singleton sets."""

    points: tuple
    kind = "novel-point"
    deterministic = True

    def next_point(self, history, rng=None):
        t = len(history)
        if t >= len(self.points):
            raise InfeasibleError(
                f"domain of {len(self.points)} points exhausted at round {t + 1}"
            )
        return self.points[t]

    def rollout(self, history, horizon, rng=None):
        t = len(history)
        if t + horizon > len(self.points):
            raise InfeasibleError(
                f"domain of {len(self.points)} points cannot supply "
                f"{horizon} more fresh points"
            )
        return tuple(self.points[t : t + horizon])


def sample_next(model, history, t, seed=0):
    """Next instance; reproducible from (model, seed, t)."""
    if t != len(history) + 1:
        raise ValueError(f"t must be len(history)+1 = {len(history) + 1}, got {t}")
    return model.next_point(tuple(history), derive_rng(seed, "x", t))


def conditional_rollout(model, history, horizon, trial_seed, call=0):
    """A sampled continuation of the given horizon, conditioned on the
    observed history.  Deterministic models return the unique one."""
    rng = derive_rng(trial_seed, "rollout", len(history), call)
    return model.rollout(tuple(history), horizon, rng)


class ProcessOracle:
    """Conditional-rollout handle handed to learners.

    Rollouts draw from substreams keyed by a per-oracle call counter, so a
    trial replayed with the same seed sees identical rollouts while
    successive calls stay independent.
    """

    def __init__(self, model, seed):
        self.model = model
        self.seed = seed
        self.calls = 0

    @property
    def deterministic(self):
        return self.model.deterministic

    def rollout(self, history, horizon):
        self.calls += 1
        return conditional_rollout(
            self.model, history, horizon, self.seed, call=self.calls
        )


# ---------------------------------------------------------------------------
# adversary traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdversaryTrace:
    """Oblivious labeled sequence from a tree walk.

    rows: (t, point, label, node index, on-path flag); boundaries are the
    trace lengths at which each walk node is complete.
    """

    rows: tuple
    walk_patterns: tuple
    boundaries: tuple

    def pairs(self):
        return tuple((r[1], r[2]) for r in self.rows)


def _assert_prefixes_realizable(concept_class, pairs, context):
    if isinstance(concept_class, FullClass):
        pins = {}
        for x, y in pairs:
            if pins.setdefault(x, y) != y:
                raise InvariantError(f"{context}: prefix unrealizable at {x!r}")
        return
    current = concept_class
    for x, y in pairs:
        current = current.restrict([(x, y)])
        if current.is_empty():
            raise InvariantError(f"{context}: prefix unrealizable at {x!r}")


def littlestone_adversary(concept_class, T, seed, witness=None):
    """Random walk on a depth-T mistake-tree witness with oblivious
    uniform labels.  Raises InfeasibleError when no such witness exists."""
    if witness is None:
        witness = littlestone_witness(concept_class, T)
    if witness.depth < T:
        raise InfeasibleError(
            f"witness depth {witness.depth} cannot supply {T} rounds"
        )
    rng = derive_rng(seed, "mistake-walk")
    rows = []
    path = ()
    pairs = []
    for t in range(1, T + 1):
        x = witness.point_at(path)
        y = rng.randrange(2)
        path += (y,)
        rows.append((t, x, y, t, True))
        pairs.append((x, y))
    _assert_prefixes_realizable(concept_class, pairs, "mistake-tree walk")
    return AdversaryTrace(
        rows=tuple(rows),
        walk_patterns=tuple(str(b) for b in path),
        boundaries=tuple(range(1, T + 1)),
    )


def vcl_adversary(tree, concept_class, seed):
    """Walk the reweighted tree and emit every node up to the deepest
    in-branch node, in BFS order.

    In-branch points take the walk's edge pattern; off-branch points take
    the labels committed by the earliest in-branch node after them in BFS
    order (the indifference rule), so every prefix is realizable by the
    hypothesis consistent with the whole walk.
    """
    if tree.depth == 0 or not tree.nodes:
        return AdversaryTrace(rows=(), walk_patterns=(), boundaries=())
    rng = derive_rng(seed, "vcl-walk")
    walk = []  # (bfs index, pattern)
    index = 1
    for _ in range(tree.depth):
        node = tree.node(index)
        pattern = "".join(str(rng.randrange(2)) for _ in node.points)
        walk.append((index, pattern))
        nxt = tree.child(index, pattern)
        if nxt is None:
            break
        index = nxt
    last_index = walk[-1][0]
    on_path = dict(walk)

    rows = []
    boundaries = []
    pairs = []
    t = 0
    for node in tree.nodes[:last_index]:
        if node.index in on_path:
            labels = [int(b) for b in on_path[node.index]]
        else:
            cover_index = min(i for i, _ in walk if i > node.index)
            cover = tree.node(cover_index)
            committed = dict(cover.pins)
            labels = [committed[p] for p in node.points]
        for p, y in zip(node.points, labels):
            t += 1
            rows.append((t, p, y, node.index, node.index in on_path))
            pairs.append((p, y))
        if node.index in on_path:
            boundaries.append(t)
    _assert_prefixes_realizable(concept_class, pairs, "reweighted-tree walk")
    for node_index, bound in zip((i for i, _ in walk), boundaries):
        if bound != (1 << node_index) - 1:
            raise InvariantError(
                f"boundary after node {node_index} was {bound}, "
                f"expected {(1 << node_index) - 1}"
            )
    return AdversaryTrace(
        rows=tuple(rows),
        walk_patterns=tuple(p for _, p in walk),
        boundaries=tuple(boundaries),
    )


def novel_point_process(T, points):
    """The first T points of a fresh-point stream over the given pool."""
    model = NovelPointProcess(tuple(points))
    history = []
    for t in range(1, T + 1):
        history.append(model.next_point(history))
    return tuple(history)
