"""Learner behavior, expert indexing, and aggregation bounds."""

import math
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import mistakelab as ml
from mistakelab.learners import initial_weight
from mistakelab.processes import DeterministicProcess, IIDProcess, ProcessOracle


def make_class(domain, rows, preset="custom"):
    domain = tuple(domain)
    return ml.ConceptClass(
        domain, tuple(ml.Hypothesis(domain, r) for r in rows), preset=preset
    )


def run_learner(learner, pairs):
    mistakes = []
    for t, (x, y) in enumerate(pairs, start=1):
        if learner.predict(x) != y:
            mistakes.append(t)
        learner.observe(y)
    return mistakes


# --- version-space learner -----------------------------------------------------


def test_soa_singleton_never_errs():
    solo = make_class(("a", "b", "c"), ["010"])
    learner = ml.SOALearner(solo)
    stream = [("b", 1), ("a", 0), ("c", 0), ("b", 1)]
    assert run_learner(learner, stream) == []


def test_soa_two_hypotheses_at_most_one_mistake():
    cls = make_class(("a", "b"), ["00", "01"])
    # brute force over all realizable streams of length <= 5
    def streams(prefix):
        if len(prefix) == 5:
            return
        for x in cls.domain:
            for y in (0, 1):
                nxt = prefix + [(x, y)]
                if cls.is_realizable(nxt):
                    yield nxt
                    yield from streams(nxt)

    for stream in streams([]):
        assert len(run_learner(ml.SOALearner(cls), stream)) <= 1


def test_soa_thresholds_bounded_by_dimension():
    thr = ml.thresholds_class(7)
    d = ml.littlestone_dimension(thr)
    for target in thr.hypotheses:
        stream = [(x, int(target.labels[thr.position(x)])) for x in thr.domain]
        assert len(run_learner(ml.SOALearner(thr), stream)) <= d


def test_soa_realizability_error_keeps_state():
    solo = make_class(("a", "b"), ["01"])
    learner = ml.SOALearner(solo)
    assert learner.predict("a") == 0
    with pytest.raises(ml.RealizabilityError):
        learner.observe(1)
    # state unchanged: the learner still predicts from the intact space
    assert learner.predict("a") == 0
    learner.observe(0)


def test_soa_on_analytic_full_class():
    fc = ml.FullClass(("a", "b", "c"))
    learner = ml.SOALearner(fc)
    assert learner.predict("a") == 0  # tie breaks to 0
    learner.observe(1)
    assert learner.predict("a") == 1  # memorized
    learner.observe(1)


# --- window-weight learner -------------------------------------------------------


def spec_example_class():
    dom = ("a", "b")
    return make_class(dom, ["00", "11", "01"])


def test_weight_learner_spec_example():
    cls = spec_example_class()
    # weight arithmetic behind the prediction, over the window (b)
    assert cls.weight(("b",)) == 2
    assert cls.restrict([("a", 1)]).weight(("b",)) == 1
    assert cls.restrict([("a", 0)]).weight(("b",)) == 2
    oracle = ProcessOracle(DeterministicProcess(("a", "b")), seed=0)
    learner = ml.ShatterWeightLearner(cls, oracle)
    assert learner.predict("a") == 0


def test_weight_learner_rejects_bad_config():
    cls = spec_example_class()
    oracle = ProcessOracle(DeterministicProcess(("a", "b")), seed=0)
    with pytest.raises(ml.ConfigError):
        ml.ShatterWeightLearner(cls, oracle, rollouts=0)
    with pytest.raises(ml.StateError):
        ml.ShatterWeightLearner(make_class(("a",), []), oracle)


def test_weight_learner_batch_schedule():
    cls = ml.full_class(3)
    seq = tuple(cls.domain[t % 3] for t in range(10))
    learner = ml.ShatterWeightLearner(
        cls, ProcessOracle(DeterministicProcess(seq), seed=0)
    )
    ms = []
    for t, x in enumerate(seq, start=1):
        learner.predict(x)
        learner.observe(0)
        ms.append(learner.m)
    # batch m covers rounds (t(m-1), t(m)]: boundaries after rounds 1, 3, 6, 10
    assert ms == [2, 2, 3, 3, 3, 4, 4, 4, 4, 5]


def test_weight_learner_halving_ledger_bound():
    cls = ml.full_class(5)
    d = ml.vc_dimension(cls)
    for seed in range(5):
        rng = __import__("random").Random(seed)
        seq = tuple(cls.domain[rng.randrange(5)] for _ in range(55))  # 10 batches
        target = cls.hypotheses[rng.randrange(cls.size())]
        learner = ml.ShatterWeightLearner(
            cls, ProcessOracle(DeterministicProcess(seq), seed=seed)
        )
        for x in seq:
            learner.predict(x)
            learner.observe(int(target.labels[cls.position(x)]))
        counts = {}
        for batch, halved in learner.halving_ledger:
            counts[batch] = counts.get(batch, 0) + (1 if halved else 0)
        for batch, c in counts.items():
            assert c <= d * math.log2(max(batch, 1)) + 1


def test_weight_learner_on_starred_partial_class():
    dom = ("a", "b", "c")
    cls = make_class(dom, ["01*", "0*1", "11*"])
    seq = ("a", "b", "c") * 4
    learner = ml.ShatterWeightLearner(
        cls, ProcessOracle(DeterministicProcess(seq), seed=1)
    )
    # labels from the defined part of the first hypothesis, 0 where undefined
    target = {"a": 0, "b": 1, "c": 0}
    mistakes = 0
    for x in seq[:9]:
        if learner.predict(x) != target[x]:
            mistakes += 1
        learner.observe(target[x])
    assert mistakes <= 6  # learns the defined coordinates quickly


def test_weight_learner_stochastic_reproducible():
    cls = ml.full_class(3)
    model = IIDProcess(cls.domain)
    def run(seed):
        learner = ml.ShatterWeightLearner(cls, ProcessOracle(model, seed), rollouts=8)
        outs = []
        rng = __import__("random").Random(99)
        for t in range(12):
            x = cls.domain[rng.randrange(3)]
            outs.append(learner.predict(x))
            learner.observe(rng.randrange(2))
        return outs
    assert run(7) == run(7)


# --- game-guided learner ---------------------------------------------------------


def test_game_learner_no_advancement_on_singleton_realizable():
    solo = make_class(("a", "b", "c"), ["010"], preset="custom")
    seq = ("a", "b", "c", "a", "b", "c")
    learner = ml.GameGuidedLearner(
        solo, ProcessOracle(DeterministicProcess(seq), seed=0)
    )
    for x in seq:
        learner.predict(x)
        learner.observe(int(solo.hypotheses[0].labels[solo.position(x)]))
    assert learner.advancements == 0


def test_game_learner_matches_subroutine_when_game_is_quiet():
    solo = make_class(("a", "b", "c"), ["010"])
    seq = ("a", "b", "c", "a", "b", "c")
    target = solo.hypotheses[0]
    game = ml.GameGuidedLearner(
        solo, ProcessOracle(DeterministicProcess(seq), seed=0)
    )
    induced = ml.induced_partial_class(ml.GameRecord(), solo)
    sub = ml.ShatterWeightLearner(
        induced, ProcessOracle(DeterministicProcess(seq), seed=0)
    )
    for x in seq:
        got = game.predict(x)
        want = sub.predict(x)
        assert got == want
        y = int(target.labels[solo.position(x)])
        game.observe(y)
        sub.observe(y)
    assert game.advancements == 0


@given(
    st.integers(2, 6),
    st.integers(0, 10_000),
)
@settings(deadline=None, max_examples=25)
def test_game_learner_advancements_bounded(n_hyps, seed):
    rng = __import__("random").Random(seed)
    dom = tuple("abcde"[:4])
    rows = set()
    while len(rows) < n_hyps:
        rows.add("".join(rng.choice("01") for _ in dom))
    cls = make_class(dom, sorted(rows))
    # sequence longer than the trial so batch windows can always roll out
    seq = tuple(rng.choice(dom) for _ in range(80))
    learner = ml.GameGuidedLearner(
        cls, ProcessOracle(DeterministicProcess(seq), seed=seed)
    )
    for x in seq[:20]:  # labels arbitrary: the bound holds on any stream
        learner.predict(x)
        learner.observe(rng.randrange(2))
    assert learner.advancements <= math.ceil(math.log2(cls.size())) + 1


def test_game_learner_history_cap():
    solo = make_class(("a",), ["0"])
    seq = ("a",) * 8
    learner = ml.GameGuidedLearner(
        solo, ProcessOracle(DeterministicProcess(seq), seed=0), history_cap=5
    )
    with pytest.raises(ml.SizeError):
        for x in seq:
            learner.predict(x)
            learner.observe(0)


# --- expert indexing -------------------------------------------------------------


def brute_force_order(max_key):
    sets = [frozenset()]
    for m in range(1, max_key + 1):
        for s in range(1, m + 1):
            if s * m > max_key:
                break
            from itertools import combinations

            for rest in combinations(range(1, m), s - 1):
                sets.append(frozenset(rest + (m,)))
    return sorted(
        sets, key=lambda J: (len(J) * max(J) if J else 0, len(J), tuple(sorted(J)))
    )


def test_index_examples():
    assert ml.index_of_set(set()) == 1
    assert ml.index_of_set({1}) == 2
    assert ml.index_of_set({2}) == 3
    assert ml.index_of_set({3}) == 4
    assert ml.index_of_set({4}) == 5
    assert ml.index_of_set({1, 2}) == 6


def test_index_matches_brute_force_order():
    order = brute_force_order(16)
    for pos, J in enumerate(order, start=1):
        assert ml.index_of_set(J) == pos
        assert ml.set_of_index(pos) == J


def test_index_errors():
    with pytest.raises(ml.DomainError):
        ml.index_of_set({0, 2})
    with pytest.raises(ml.DomainError):
        ml.set_of_index(0)


def test_index_inverse_and_key_monotone():
    prev_key = -1
    for i in range(1, 100_001):
        J = ml.set_of_index(i)
        key = len(J) * max(J) if J else 0
        assert key >= prev_key
        prev_key = key
        assert ml.index_of_set(J) == i


def test_index_paper_growth_bound():
    for i in range(1, 5000):
        J = ml.set_of_index(i)
        k = len(J) * max(J) if J else 0
        assert i <= (k + 1) * math.exp(math.sqrt(k))


# --- experts ----------------------------------------------------------------------


def test_expert_empty_set_equals_base_self_run():
    thr = ml.thresholds_class(5)
    expert = ml.Expert((), lambda: ml.SOALearner(thr))
    base = ml.SOALearner(thr)
    for x in ("3", "1", "5", "2", "4"):
        out = base.predict(x)
        base.observe(out)
        assert expert.step(x) == out


def test_expert_reproduces_labels_with_mistake_set():
    thr = ml.thresholds_class(7)
    target = thr.hypotheses[2]
    stream = [(x, int(target.labels[thr.position(x)])) for x in ("4", "2", "6", "1", "7", "3", "5")]
    mistakes = run_learner(ml.SOALearner(thr), stream)
    expert = ml.Expert(mistakes, lambda: ml.SOALearner(thr))
    for x, y in stream:
        assert expert.step(x) == y


def test_expert_predict_replays_history():
    thr = ml.thresholds_class(5)
    factory = lambda: ml.SOALearner(thr)
    live = ml.Expert({2}, factory)
    outs = [live.step(x) for x in ("1", "2", "3")]
    assert ml.expert_predict({2}, factory, ("1", "2"), 3, "3") == outs[2]
    with pytest.raises(ValueError):
        ml.expert_predict({2}, factory, ("1",), 3, "3")


def test_expert_survives_unrealizable_flip():
    solo = make_class(("a", "b"), ["00"])
    expert = ml.Expert({1}, lambda: ml.SOALearner(solo))
    outs = [expert.step(x) for x in ("a", "b", "a")]
    assert outs[0] == 1  # flipped against the only hypothesis
    assert outs[1:] == [0, 0]  # total despite the inconsistent history


def test_expert_pool_serialization(tmp_path):
    pool = ml.expert_pool(6, lambda: ml.ConstantLearner(0))
    assert [e.index for e in pool] == [1, 2, 3, 4, 5, 6]
    path = tmp_path / "pool.txt"
    ml.learners.save_expert_pool([e.flips for e in pool], path)
    loaded = ml.learners.load_expert_pool(path)
    assert loaded == [e.flips for e in pool]


# --- weighted majority -------------------------------------------------------------


def test_wm_step_spec_arithmetic():
    pred, new = ml.wm_step([0.5, 1 / 6], [0, 1], 0)
    assert pred == 0
    assert new == [0.5, 1 / 12]


def test_wm_step_agreement_and_errors():
    pred, _ = ml.wm_step([0.9, 0.1], [1, 1], 1)
    assert pred == 1
    with pytest.raises(ml.StateError):
        ml.wm_step([], [], 0)


class FixedExpert:
    def __init__(self, bits, index):
        self.bits = tuple(bits)
        self.index = index
        self._t = 0

    def step(self, x):
        out = self.bits[self._t % len(self.bits)]
        self._t += 1
        return out


def test_wm_initial_weights_and_bound():
    assert initial_weight(1) == 0.5
    assert initial_weight(2) == pytest.approx(1 / 6)
    rng = __import__("random").Random(0)
    for trial in range(20):
        experts = [
            FixedExpert([rng.randrange(2) for _ in range(8)], index=i + 1)
            for i in range(4)
        ]
        wm = ml.WeightedMajority(experts)
        for t in range(50):
            wm.predict(f"x{t}")
            wm.observe(rng.randrange(2))
        assert wm.cum_mistakes <= wm.mistake_bound() + 1e-9


def test_wm_perfect_expert_bound():
    # a pool whose expert i is perfect: mistakes <= 3*log2(i*(i+1))
    rng = __import__("random").Random(3)
    ys = [rng.randrange(2) for _ in range(200)]
    perfect_index = 5
    experts = [
        FixedExpert(ys if i == perfect_index else [rng.randrange(2) for _ in ys], i)
        for i in range(1, 7)
    ]
    wm = ml.WeightedMajority(experts)
    for t, y in enumerate(ys):
        wm.predict(f"x{t}")
        wm.observe(y)
    assert wm.cum_mistakes <= 3 * math.log2(perfect_index * (perfect_index + 1))


# --- second-order aggregator ----------------------------------------------------------


def test_squint_single_expert_followed():
    bits = [0, 1, 1, 0, 1]
    agg = ml.SquintAggregator([FixedExpert(bits, 1)])
    cum_alg = cum_exp = 0
    rng = __import__("random").Random(1)
    for t in range(5):
        p = agg.predict(f"x{t}")
        y = rng.randrange(2)
        cum_alg += p != y
        cum_exp += bits[t] != y
        agg.observe(y)
    assert cum_alg - cum_exp <= 0


def test_squint_zero_regret_keeps_weights():
    from mistakelab.learners import squint_mixture_weights

    agg = ml.SquintAggregator([FixedExpert([0], 1), FixedExpert([0], 2)])
    before = squint_mixture_weights(agg.indices, agg.regrets, agg.variances)
    for t in range(4):
        agg.predict(f"x{t}")
        agg.observe(0)  # everyone right: all instantaneous regrets zero
    assert agg.regrets == (0.0, 0.0) and agg.variances == (0.0, 0.0)
    after = squint_mixture_weights(agg.indices, agg.regrets, agg.variances)
    assert list(before) == pytest.approx(list(after))


def test_squint_step_instantaneous_regrets():
    state = ((1, 2), (0.0, 0.0), (0.0, 0.0))
    pred, (idx, R, V) = ml.squint_step(state, (0, 1), 1)
    # prior mass favors expert 1 (weight 1/2 vs 1/6): prediction 0, a mistake
    assert pred == 0
    assert R == (0.0, 1.0) and V == (0.0, 1.0)


def test_squint_randomized_needs_rng():
    with pytest.raises(ml.ConfigError):
        ml.SquintAggregator([FixedExpert([0], 1)], randomized=True)
