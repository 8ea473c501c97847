"""Online learners and expert aggregation.

All learners follow a two-phase protocol: ``predict(x) -> 0/1`` then
``observe(y)``.  They are deterministic given their inputs (ties break to
0 everywhere), single-trial objects, and never share mutable state.

Learners:

- :class:`SOALearner` - version-space learner predicting the label that
  keeps the mistake-tree dimension largest.
- :class:`ShatterWeightLearner` - learner for a (partial) concept class
  driven by the window weight function: predict the label whose
  hypothetical mistake is likelier to halve the weight of the remaining
  batch window, estimated by conditional rollouts (exact for
  deterministic processes).  Batches end at the triangular numbers.
- :class:`GameGuidedLearner` - wraps the weight learner with the
  tuple-labeling game: whenever some tuple of past rounds matches the
  game strategy's pattern, the game advances, the strategy-dodging class
  is rebuilt, and the weight learner restarts with a shifted schedule.
- :class:`WeightedMajority` / :class:`SquintAggregator` - expert
  aggregation with the canonical prior 1/(i(i+1)) over expert indices.

Experts are prediction streams depending only on past instances: a base
learner replayed on its own outputs, flipped at a fixed finite set of
rounds.  `index_of_set` / `set_of_index` give the canonical bijection
between flip sets and expert indices (ordered by |J|*max(J), ties by
|J|, then lexicographically).
"""

import bisect
import math
from itertools import product

import numpy as np

from .concepts import FullClass
from .errors import (
    ConfigError,
    DomainError,
    RealizabilityError,
    SizeError,
    StateError,
)
from .trees import (
    GameRecord,
    VersionSpaceOracle,
    induced_partial_class,
    winning_strategy,
)


def _triangular(m):
    return m * (m + 1) // 2


# ---------------------------------------------------------------------------
# version-space learner
# ---------------------------------------------------------------------------


class SOALearner:
    """Predicts the label keeping the mistake-tree dimension maximal.

    Ties predict 0.  Observing a label inconsistent with every remaining
    hypothesis raises RealizabilityError and leaves the state unchanged.
    """

    name = "soa"

    def __init__(self, concept_class, oracle=None):
        self.cls = concept_class
        self._pending = None
        if isinstance(concept_class, FullClass):
            self._pins = dict(concept_class.pins)
            self._free = len(concept_class.domain) - len(self._pins)
            self._oracle = None
        else:
            if concept_class.is_empty():
                raise StateError("version space is empty")
            self._oracle = oracle or VersionSpaceOracle(concept_class)
            self._mask = self._oracle.full_mask

    def _dim_if(self, x, y):
        if self._oracle is None:
            if x in self._pins:
                return self._free if self._pins[x] == y else -1
            return self._free - 1
        pos = self.cls.position(x)
        return self._oracle.ldim(self._oracle.restrict_mask(self._mask, pos, y))

    def predict(self, x):
        self.cls.position(x)  # domain check
        d0 = self._dim_if(x, 0)
        d1 = self._dim_if(x, 1)
        yhat = 1 if d1 > d0 else 0
        self._pending = x
        return yhat

    def observe(self, y):
        if self._pending is None:
            raise StateError("observe() before predict()")
        x, self._pending = self._pending, None
        y = int(y)
        if self._oracle is None:
            if self._pins.get(x, y) != y:
                raise RealizabilityError(f"label {y} at {x!r} contradicts history")
            self._pins[x] = y
            self._free = len(self.cls.domain) - len(self._pins)
            return
        pos = self.cls.position(x)
        new_mask = self._oracle.restrict_mask(self._mask, pos, y)
        if not new_mask:
            raise RealizabilityError(
                f"label {y} at {x!r} is inconsistent with every hypothesis"
            )
        self._mask = new_mask


class ConstantLearner:
    """Always predicts the same bit."""

    def __init__(self, bit=0):
        self.bit = int(bit)
        self.name = f"constant{self.bit}"

    def predict(self, x):
        return self.bit

    def observe(self, y):
        pass


# ---------------------------------------------------------------------------
# window-weight learner
# ---------------------------------------------------------------------------


class ShatterWeightLearner:
    """Learner for a (partial) concept class with finite VC dimension.

    Round t of batch m looks at the window of instances from t to the
    batch end t(m) = m(m+1)/2 (shifted by `start_t`); future instances
    are drawn from the process oracle.  The prediction is the label whose
    hypothetical mistake is likelier to at least halve the window weight
    of the current version of the class (ties predict 0).  Mistakes are
    appended to the version-space restriction.

    With a deterministic oracle a single rollout reproduces the exact
    conditional probabilities, and the learner additionally keeps a
    per-batch ledger of realized weight-halving mistakes.
    """

    name = "alg2"

    def __init__(
        self,
        partial_class,
        oracle,
        rollouts=64,
        weight_cap=20,
        start_t=0,
    ):
        if partial_class.is_empty():
            raise StateError("partial class is empty")
        if rollouts < 1:
            raise ConfigError(f"rollouts must be >= 1, got {rollouts}")
        self.cls = partial_class
        self.oracle = oracle
        self.rollouts = rollouts
        self.weight_cap = weight_cap
        self.start_t = start_t
        self.t = start_t  # last completed global round
        self.m = 1
        self.mistakes = []  # the list L of (point, label) mistake pairs
        self.current = partial_class  # class restricted by L
        self.halving_ledger = []  # (batch m, halved?) per mistake, exact iff deterministic
        self._history = ()
        self._pending = None

    def _window_end(self):
        return _triangular(self.m) + self.start_t

    def predict(self, x):
        self.cls.position(x)
        t = self.t + 1
        horizon = max(self._window_end() - t, 0)
        n_rolls = 1 if self.oracle.deterministic else self.rollouts
        hyp = {
            0: self.current.restrict([(x, 1)]),
            1: self.current.restrict([(x, 0)]),
        }
        counts = [0, 0]
        for _ in range(n_rolls):
            window = (x,) + tuple(self.oracle.rollout(self._history + (x,), horizon))
            base = self.current.weight(window, cap=self.weight_cap)
            for y in (0, 1):
                if 2 * hyp[y].weight(window, cap=self.weight_cap) <= base:
                    counts[y] += 1
        yhat = 1 if counts[1] > counts[0] else 0
        self._pending = (x, yhat)
        return yhat

    def observe(self, y):
        if self._pending is None:
            raise StateError("observe() before predict()")
        (x, yhat), self._pending = self._pending, None
        y = int(y)
        self.t += 1
        self._history += (x,)
        if y != yhat:
            if self.oracle.deterministic:
                self._record_halving(x, y)
            self.mistakes.append((x, y))
            self.current = self.current.restrict([(x, y)])
        if self.t >= self._window_end():
            self.m += 1

    def _record_halving(self, x, y):
        # realized halving event: the restricted class on the rest of the
        # window weighs at most half of the pre-mistake class on the window
        horizon = max(self._window_end() - self.t, 0)
        tail = tuple(self.oracle.rollout(self._history, horizon))
        window = (x,) + tail
        before = self.current.weight(window, cap=self.weight_cap)
        after = self.current.restrict([(x, y)]).weight(tail, cap=self.weight_cap)
        self.halving_ledger.append((self.m, 2 * after <= before))


# ---------------------------------------------------------------------------
# game-guided learner
# ---------------------------------------------------------------------------


class GameGuidedLearner:
    """Wraps the window-weight learner with the tuple-labeling game.

    Before each prediction, past rounds are searched for a tuple of
    distinct points whose observed labels equal the game strategy's
    pattern; a hit records the tuple, bumps the tuple arity, rebuilds the
    strategy-dodging class, and restarts the weight learner with the
    schedule shifted to the current round.  Once the recorded rounds empty
    the version space the game is over and no further checks run.

    The tuple search ranges over distinct observed (point, label) pairs
    rather than over round indices, which is equivalent and bounded by the
    domain size instead of the history length.
    """

    name = "alg1"

    def __init__(
        self,
        concept_class,
        oracle,
        rollouts=64,
        weight_cap=20,
        history_cap=2000,
        domain_cap=12,
    ):
        self.cls = concept_class
        self.oracle = oracle
        self.rollouts = rollouts
        self.weight_cap = weight_cap
        self.history_cap = history_cap
        self.domain_cap = domain_cap
        self.record = GameRecord()
        self.game_won = False
        self.advancements = 0
        self._pairs = []  # distinct observed (point, label) pairs, in order seen
        self._t = 0
        self._pending = None
        self._strategy_memo = {}
        self._sub = self._fresh_subroutine(start_t=0)

    def _fresh_subroutine(self, start_t):
        partial = induced_partial_class(
            self.record, self.cls, domain_cap=self.domain_cap
        )
        return ShatterWeightLearner(
            partial,
            self.oracle,
            rollouts=self.rollouts,
            weight_cap=self.weight_cap,
            start_t=start_t,
        )

    def _strategy(self, points):
        got = self._strategy_memo.get(points)
        if got is None:
            got = winning_strategy(self.record, self.cls, points)
            self._strategy_memo[points] = got
        return got

    def _find_match(self):
        k = self.record.k
        for combo in product(self._pairs, repeat=k):
            points = tuple(q[0] for q in combo)
            if len(set(points)) != k:
                continue
            labels = "".join(str(q[1]) for q in combo)
            if self._strategy(points) == labels:
                return points, labels
        return None

    def predict(self, x):
        t = self._t + 1
        if t - 1 > self.history_cap:
            raise SizeError("tuple search history exceeded", cap=self.history_cap)
        if not self.game_won and self.record.k <= len(self.cls.domain):
            hit = self._find_match()
            if hit is not None:
                points, labels = hit
                self.record = self.record.extended(points, labels)
                self.advancements += 1
                self._strategy_memo = {}
                if self.cls.restrict(self.record.pairs()).is_empty():
                    self.game_won = True
                self._sub = self._fresh_subroutine(start_t=t - 1)
        yhat = self._sub.predict(x)
        self._pending = x
        return yhat

    def observe(self, y):
        if self._pending is None:
            raise StateError("observe() before predict()")
        x, self._pending = self._pending, None
        y = int(y)
        self._sub.observe(y)
        self._t += 1
        if (x, y) not in self._pairs:
            self._pairs.append((x, y))


# ---------------------------------------------------------------------------
# canonical expert indexing
# ---------------------------------------------------------------------------

_KEY_COUNTS = {}  # key value -> number of finite sets with that key
_CUM_COUNTS = [1]  # _CUM_COUNTS[v] = number of sets with key <= v


def _count_key(v):
    """Number of finite sets of positive integers with |J|*max(J) == v."""
    got = _KEY_COUNTS.get(v)
    if got is None:
        got = 0
        for s in range(1, math.isqrt(v) + 1):
            if v % s == 0:
                m = v // s  # size s, maximum m, s <= m
                got += math.comb(m - 1, s - 1)
        _KEY_COUNTS[v] = got
    return got


def _cum_through(v):
    while len(_CUM_COUNTS) <= v:
        nxt = len(_CUM_COUNTS)
        _CUM_COUNTS.append(_CUM_COUNTS[-1] + _count_key(nxt))
    return _CUM_COUNTS[v]


def _combo_rank(combo, n):
    """0-based lexicographic rank of an ascending tuple among size-|combo|
    subsets of {1..n}."""
    rank = 0
    prev = 0
    r = len(combo)
    for i, c in enumerate(combo):
        for x in range(prev + 1, c):
            rank += math.comb(n - x, r - i - 1)
        prev = c
    return rank


def _combo_unrank(rank, n, r):
    combo = []
    prev = 0
    for i in range(r):
        x = prev + 1
        while True:
            block = math.comb(n - x, r - i - 1)
            if rank < block:
                break
            rank -= block
            x += 1
        combo.append(x)
        prev = x
    return tuple(combo)


def index_of_set(J):
    """Canonical 1-based index of a finite set of positive round numbers.

    Sets are ordered by |J|*max(J), ties by |J|, remaining ties
    lexicographically on the sorted elements; the empty set is first.
    """
    J = sorted(int(j) for j in J)
    if any(j < 1 for j in J):
        raise DomainError("round indices must be positive")
    if len(set(J)) != len(J):
        raise DomainError("round indices must be distinct")
    if not J:
        return 1
    m, s = J[-1], len(J)
    v = s * m
    idx = _cum_through(v - 1)
    for s2 in range(1, s):
        if v % s2 == 0 and s2 <= v // s2:
            idx += math.comb(v // s2 - 1, s2 - 1)
    idx += _combo_rank(tuple(J[:-1]), m - 1)
    return idx + 1


def set_of_index(i):
    """Inverse of :func:`index_of_set` (by ordered enumeration)."""
    i = int(i)
    if i < 1:
        raise DomainError(f"index must be >= 1, got {i}")
    if i == 1:
        return frozenset()
    while _CUM_COUNTS[-1] < i:
        _cum_through(len(_CUM_COUNTS))
    v = bisect.bisect_left(_CUM_COUNTS, i)
    rem = i - _cum_through(v - 1) - 1  # 0-based rank within key v
    for s in range(1, math.isqrt(v) + 1):
        if v % s == 0:
            m = v // s
            block = math.comb(m - 1, s - 1)
            if rem < block:
                rest = _combo_unrank(rem, m - 1, s - 1)
                return frozenset(rest + (m,))
            rem -= block
    raise StateError("index enumeration out of range")  # pragma: no cover


# ---------------------------------------------------------------------------
# experts
# ---------------------------------------------------------------------------


class Expert:
    """A base learner replayed on its own outputs, flipped at fixed rounds.

    The expert sees only instances: the base learner is fed the expert's
    own past predictions as labels.  If a flip makes the simulated history
    unrealizable for the base learner, the offending update is skipped so
    the expert stays total.
    """

    def __init__(self, flip_rounds, base_factory, index=None):
        self.flips = frozenset(int(r) for r in flip_rounds)
        self.index = index_of_set(self.flips) if index is None else int(index)
        self._base = base_factory()
        self._t = 0

    def step(self, x):
        self._t += 1
        tilde = self._base.predict(x)
        out = 1 - tilde if self._t in self.flips else tilde
        try:
            self._base.observe(out)
        except RealizabilityError:
            pass
        return out


def expert_predict(flip_rounds, base_factory, instances, t, x):
    """Replay an expert over past instances and predict for round t."""
    if t != len(instances) + 1:
        raise ValueError("t must equal len(instances) + 1")
    expert = Expert(flip_rounds, base_factory)
    for past in instances:
        expert.step(past)
    return expert.step(x)


def expert_pool(max_index, base_factory):
    """Experts 1..max_index under the canonical flip-set indexing."""
    return [
        Expert(set_of_index(i), base_factory, index=i)
        for i in range(1, max_index + 1)
    ]


def save_expert_pool(flip_sets, path):
    with open(path, "w", encoding="utf-8") as f:
        for J in flip_sets:
            f.write(" ".join(str(j) for j in sorted(J)) + "\n")


def load_expert_pool(path):
    with open(path, "r", encoding="utf-8") as f:
        return [frozenset(int(tok) for tok in line.split()) for line in f.read().splitlines()]


# ---------------------------------------------------------------------------
# weighted majority
# ---------------------------------------------------------------------------


def initial_weight(index):
    return 1.0 / (index * (index + 1))


def wm_step(weights, votes, y):
    """One weighted-majority round: returns (prediction, updated weights).

    Predicts 1 when the weighted vote mass on 1 is at least half; every
    wrong expert's weight is halved.
    """
    if not weights:
        raise StateError("weighted majority needs at least one expert")
    total = sum(weights)
    mass1 = sum(w for w, v in zip(weights, votes) if v == 1) / total
    pred = 1 if mass1 >= 0.5 else 0
    new_weights = [w * (0.5 if v != y else 1.0) for w, v in zip(weights, votes)]
    return pred, new_weights


class WeightedMajority:
    """Weighted majority over experts with prior weights 1/(i(i+1)).

    Tracks per-expert mistake counts so the deterministic mistake bound
    (3 * best expert mistakes + 3 * log2(1/w0)) can be asserted after
    every run.
    """

    name = "wm"

    def __init__(self, experts):
        if not experts:
            raise StateError("weighted majority needs at least one expert")
        self.experts = list(experts)
        self.weights = [initial_weight(e.index) for e in self.experts]
        self.expert_mistakes = [0] * len(self.experts)
        self.cum_mistakes = 0
        self._pending = None

    def predict(self, x):
        votes = [e.step(x) for e in self.experts]
        total = sum(self.weights)
        mass1 = sum(w for w, v in zip(self.weights, votes) if v == 1) / total
        pred = 1 if mass1 >= 0.5 else 0
        self._pending = (votes, pred)
        return pred

    def observe(self, y):
        if self._pending is None:
            raise StateError("observe() before predict()")
        (votes, pred), self._pending = self._pending, None
        y = int(y)
        if pred != y:
            self.cum_mistakes += 1
        for i, v in enumerate(votes):
            if v != y:
                self.expert_mistakes[i] += 1
                self.weights[i] *= 0.5
        # rescale to dodge underflow on long runs; predictions use ratios only
        top = max(self.weights)
        if top < 1e-300:
            self.weights = [w / top for w in self.weights]

    def mistake_bound(self):
        """Deterministic bound: min_i 3*m_i + 3*log2(1/w_i^0)."""
        return min(
            3 * m + 3 * math.log2(e.index * (e.index + 1))
            for m, e in zip(self.expert_mistakes, self.experts)
        )

    def bound_holds(self):
        return self.cum_mistakes <= self.mistake_bound() + 1e-9


# ---------------------------------------------------------------------------
# second-order aggregator
# ---------------------------------------------------------------------------

SQUINT_GRID = tuple(2.0 ** -j for j in range(1, 31))


def squint_mixture_weights(indices, regrets, variances):
    """Normalized expert weights: prior 1/(i(i+1)) mixed uniformly over the
    learning-rate grid, exp(eta*R - eta^2*V) per rate, in log space."""
    idx = np.asarray(indices, dtype=float)
    log_prior = -np.log(idx) - np.log(idx + 1.0)
    etas = np.asarray(SQUINT_GRID)
    R = np.asarray(regrets, dtype=float)
    V = np.asarray(variances, dtype=float)
    mat = log_prior[:, None] + etas[None, :] * R[:, None] - (etas**2)[None, :] * V[:, None]
    mat -= math.log(len(SQUINT_GRID))
    top = mat.max()
    if not np.isfinite(top):
        raise ArithmeticError("aggregator weights overflowed")
    w = np.exp(mat - top).sum(axis=1)
    return w / w.sum()


def squint_step(state, votes, y):
    """One aggregator round on 0-1 loss: returns (prediction, new state).

    `state` is (indices, regrets, variances); per-round instantaneous
    regrets live in {-1, 0, 1} and update both the first- and
    second-order statistics.
    """
    indices, regrets, variances = state
    w = squint_mixture_weights(indices, regrets, variances)
    mass1 = float(np.sum(w[np.asarray(votes) == 1]))
    pred = 1 if mass1 >= 0.5 else 0
    y = int(y)
    loss_pred = 1 if pred != y else 0
    new_R = []
    new_V = []
    for r, v, vote in zip(regrets, variances, votes):
        inst = loss_pred - (1 if vote != y else 0)
        new_R.append(r + inst)
        new_V.append(v + inst * inst)
    return pred, (indices, tuple(new_R), tuple(new_V))


class SquintAggregator:
    """Second-order expert aggregator with prior 1/(i(i+1)).

    Derandomized by default (majority of the mixture mass); with
    ``randomized=True`` predictions are sampled from the mixture using the
    given rng.
    """

    name = "squint"

    def __init__(self, experts, randomized=False, rng=None):
        if not experts:
            raise StateError("aggregator needs at least one expert")
        self.experts = list(experts)
        self.indices = tuple(e.index for e in self.experts)
        self.regrets = tuple(0.0 for _ in self.experts)
        self.variances = tuple(0.0 for _ in self.experts)
        self.randomized = randomized
        self.rng = rng
        self.cum_mistakes = 0
        self._pending = None
        if randomized and rng is None:
            raise ConfigError("randomized aggregation needs a seeded rng")

    def predict(self, x):
        votes = tuple(e.step(x) for e in self.experts)
        w = squint_mixture_weights(self.indices, self.regrets, self.variances)
        mass1 = float(np.sum(w[np.asarray(votes) == 1]))
        if self.randomized:
            pred = 1 if self.rng.random() < mass1 else 0
        else:
            pred = 1 if mass1 >= 0.5 else 0
        self._pending = (votes, pred)
        return pred

    def observe(self, y):
        if self._pending is None:
            raise StateError("observe() before predict()")
        (votes, pred), self._pending = self._pending, None
        y = int(y)
        loss_pred = 1 if pred != y else 0
        if loss_pred:
            self.cum_mistakes += 1
        R = list(self.regrets)
        V = list(self.variances)
        for i, vote in enumerate(votes):
            inst = loss_pred - (1 if vote != y else 0)
            R[i] += inst
            V[i] += inst * inst
        self.regrets = tuple(R)
        self.variances = tuple(V)
