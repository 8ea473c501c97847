"""Trial runner, empirical condition checkers, and file emission.

A trial wires together a concept class, a data process with a label
source, and a learner, and produces a per-round Trace.  Realizable-mode
trials re-assert prefix realizability every round, the weighted-majority
deterministic mistake bound after every aggregator run, and the
flip-set-expert reproduction property after every deterministic
realizable run; violations raise InvariantError (CLI exit 4).

The two checkers turn the asymptotic learnability conditions into
finite-sample verdicts against thresholds declared in config and recorded
in the report header.  The expert-cover checker is labeled per process:
it can only ever sweep the processes it is given.
"""

import configparser
import importlib.resources as resources
import json
import math
from dataclasses import dataclass, field

from .concepts import FullClass, parse_class_spec
from .errors import (
    ConfigError,
    InfeasibleError,
    InvariantError,
    StateError,
)
from .learners import (
    ConstantLearner,
    Expert,
    GameGuidedLearner,
    ShatterWeightLearner,
    SOALearner,
    SquintAggregator,
    WeightedMajority,
    expert_pool,
    index_of_set,
)
from .processes import (
    AdversaryTrace,
    DeterministicProcess,
    IIDProcess,
    MarkovProcess,
    NovelPointProcess,
    ProcessOracle,
    littlestone_adversary,
    sample_next,
    vcl_adversary,
)
from .seeding import derive_rng, derive_seed
from .trees import build_vcl_adversary_tree


@dataclass
class Trace:
    """Per-round record of one trial.

    rows: (t, point, y, yhat, mistake, cum_mistakes, cum_regret), with the
    cum columns prefix sums and regret measured against the comparator
    named in the metadata.
    """

    rows: tuple
    metadata: dict


@dataclass
class CheckReport:
    """Series of (n, statistic) pairs with a thresholded verdict."""

    kind: str
    series: tuple
    verdict: str
    header: dict


# ---------------------------------------------------------------------------
# stream construction
# ---------------------------------------------------------------------------


@dataclass
class Stream:
    xs: tuple
    ys: tuple
    model: object
    realizable: bool
    adversary: AdversaryTrace = None


def _target_labeler(concept_class, spec, seed):
    spec = (spec or "random").strip()
    if isinstance(concept_class, FullClass):
        # a seeded random total labeling, materialized point by point
        def label(x):
            concept_class.position(x)
            return derive_rng(seed, "target", x).randrange(2)

        return label
    if spec == "random":
        rng = derive_rng(seed, "target")
        hyp = concept_class.hypotheses[rng.randrange(concept_class.size())]
    elif spec.startswith("index:"):
        hyp = concept_class.hypotheses[int(spec.partition(":")[2])]
    else:
        raise ConfigError(f"unknown target spec {spec!r}")
    return lambda x: int(hyp.labels[concept_class.position(x)])


def build_model(process_cfg, concept_class, seed):
    kind = process_cfg.get("kind", "iid")
    points = tuple(process_cfg.get("points", "").split()) or tuple(
        concept_class.domain
    )
    if kind == "iid":
        return IIDProcess(points)
    if kind == "markov":
        rows = {}
        for chunk in process_cfg.get("transitions", "").split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            state, _, rest = chunk.partition(":")
            toks = rest.split()
            if len(toks) % 2:
                raise ConfigError(f"bad markov row {chunk!r}")
            rows[state.strip()] = tuple(
                (toks[i], float(toks[i + 1])) for i in range(0, len(toks), 2)
            )
        start = process_cfg.get("start") or points[0]
        return MarkovProcess(points, start, rows)
    if kind == "deterministic":
        seq = tuple(process_cfg.get("sequence", "").split())
        if not seq:
            length = int(process_cfg.get("length", "0"))
            if length <= 0:
                raise ConfigError("deterministic process needs sequence or length")
            rng = derive_rng(seed, "detseq")
            seq = tuple(points[rng.randrange(len(points))] for _ in range(length))
        return DeterministicProcess(seq)
    if kind == "novel-point":
        return NovelPointProcess(points)
    raise ConfigError(f"unknown process kind {kind!r}")


def build_stream(process_cfg, concept_class, T, seed):
    """Instances and labels for one trial, plus the process model."""
    kind = process_cfg.get("kind", "iid")
    if kind == "littlestone-walk":
        trace = littlestone_adversary(concept_class, T, seed)
        xs = tuple(r[1] for r in trace.rows)
        ys = tuple(r[2] for r in trace.rows)
        return Stream(xs, ys, DeterministicProcess(xs), True, adversary=trace)
    if kind == "vcl-walk":
        depth = int(process_cfg.get("depth", "0"))
        if depth <= 0:
            raise ConfigError("vcl-walk needs a positive depth")
        tree = build_vcl_adversary_tree(concept_class, depth)
        trace = vcl_adversary(tree, concept_class, seed)
        if T > len(trace.rows):
            raise InfeasibleError(
                f"walk supplies {len(trace.rows)} rounds, trial wants {T}"
            )
        rows = trace.rows[:T]
        xs = tuple(r[1] for r in rows)
        ys = tuple(r[2] for r in rows)
        return Stream(xs, ys, DeterministicProcess(xs), True, adversary=trace)

    model = build_model(process_cfg, concept_class, seed)
    xs = []
    for t in range(1, T + 1):
        xs.append(sample_next(model, xs, t, seed=seed))
    xs = tuple(xs)
    labels = process_cfg.get("labels", "target")
    if labels == "target":
        labeler = _target_labeler(concept_class, process_cfg.get("target"), seed)
        ys = tuple(labeler(x) for x in xs)
        return Stream(xs, ys, model, True)
    if labels == "coins":
        ys = tuple(derive_rng(seed, "coins", t).randrange(2) for t in range(1, T + 1))
        return Stream(xs, ys, model, False)
    if labels == "sequence":
        ys = tuple(int(b) for b in process_cfg.get("label_sequence", "").split())
        if len(ys) < T:
            raise ConfigError("label_sequence shorter than the trial")
        return Stream(xs, ys[:T], model, False)
    raise ConfigError(f"unknown label source {labels!r}")


# ---------------------------------------------------------------------------
# learner construction
# ---------------------------------------------------------------------------


def _base_factory(name, concept_class, model, seed):
    name = (name or "constant0").strip()
    if name == "constant0":
        return lambda: ConstantLearner(0)
    if name == "constant1":
        return lambda: ConstantLearner(1)
    if name == "soa":
        return lambda: SOALearner(concept_class)
    if name == "alg2":
        return lambda: ShatterWeightLearner(
            concept_class, ProcessOracle(model, seed)
        )
    raise ConfigError(f"unknown expert base {name!r}")


def learner_factory(learner_cfg, concept_class, model, seed):
    """Zero-argument factory producing identically-configured learners.

    Each instantiation owns a fresh rollout oracle, so a replay sees the
    same conditional samples.
    """
    name = learner_cfg.get("name", "soa")
    rollouts = int(learner_cfg.get("rollouts", "64"))
    weight_cap = int(learner_cfg.get("weight_cap", "20"))
    experts_max = int(learner_cfg.get("experts_max", "8"))
    base = learner_cfg.get("expert_base", "constant0")

    if name == "soa":
        return lambda: SOALearner(concept_class)
    if name == "alg2":
        return lambda: ShatterWeightLearner(
            concept_class,
            ProcessOracle(model, seed),
            rollouts=rollouts,
            weight_cap=weight_cap,
        )
    if name == "alg1":
        history_cap = int(learner_cfg.get("history_cap", "2000"))
        return lambda: GameGuidedLearner(
            concept_class,
            ProcessOracle(model, seed),
            rollouts=rollouts,
            weight_cap=weight_cap,
            history_cap=history_cap,
        )
    if name == "constant":
        bit = int(learner_cfg.get("constant", "0"))
        return lambda: ConstantLearner(bit)
    if name in ("wm", "squint"):
        factory = _base_factory(base, concept_class, model, seed)

        def make():
            pool = expert_pool(experts_max, factory)
            if name == "wm":
                return WeightedMajority(pool)
            randomized = learner_cfg.get("randomized", "false") == "true"
            rng = derive_rng(seed, "squint") if randomized else None
            return SquintAggregator(pool, randomized=randomized, rng=rng)

        return make
    raise ConfigError(f"unknown learner {name!r}")


# ---------------------------------------------------------------------------
# trial runner
# ---------------------------------------------------------------------------


class _PrefixChecker:
    """Incremental prefix-realizability assertion."""

    def __init__(self, concept_class):
        self.current = concept_class
        self.pins = (
            dict(concept_class.pins) if isinstance(concept_class, FullClass) else None
        )

    def push(self, t, x, y):
        if self.pins is not None:
            if self.pins.setdefault(x, y) != y:
                raise InvariantError(f"round {t}: prefix unrealizable at {x!r}")
            return
        self.current = self.current.restrict([(x, y)])
        if self.current.is_empty():
            raise InvariantError(f"round {t}: prefix unrealizable at {x!r}")


def _comparator_mistakes(comparator, stream, factory):
    """Per-round mistake indicators of the named comparator."""
    T = len(stream.xs)
    if comparator == "truth":
        return [0] * T
    if comparator == "none":
        return [0] * T
    if comparator == "best_expert":
        learner = factory()
        experts = getattr(learner, "experts", None)
        if experts is None:
            raise ConfigError("best_expert comparator needs an aggregator")
        per_expert = []
        for e in experts:
            flags = []
            for x, y in zip(stream.xs, stream.ys):
                flags.append(1 if e.step(x) != y else 0)
            per_expert.append(flags)
        best = min(per_expert, key=sum)
        return best
    raise ConfigError(f"unknown comparator {comparator!r}")


def run_trial(
    learner_cfg,
    process_cfg,
    class_spec,
    T,
    seed,
    mode="realizable",
    comparator="truth",
    checks=True,
):
    """Run one trial and return its Trace.

    In realizable mode every prefix is asserted realizable; aggregator
    runs additionally assert the deterministic weighted-majority bound,
    and deterministic realizable runs assert that the expert flipping the
    learner at its own mistake rounds reproduces the labels.
    """
    concept_class = (
        parse_class_spec(class_spec) if isinstance(class_spec, str) else class_spec
    )
    stream = build_stream(process_cfg, concept_class, T, seed)
    factory = learner_factory(learner_cfg, concept_class, stream.model, seed)
    learner = factory()

    if mode == "realizable" and not stream.realizable:
        raise ConfigError("realizable mode needs a realizable label source")
    prefix_checker = _PrefixChecker(concept_class) if mode == "realizable" else None

    rows = []
    cum = 0
    mistakes = []
    comp_flags = _comparator_mistakes(comparator, stream, factory)
    comp_cum = 0
    for t, (x, y) in enumerate(zip(stream.xs, stream.ys), start=1):
        if prefix_checker is not None:
            prefix_checker.push(t, x, y)
        yhat = learner.predict(x)
        miss = 1 if yhat != y else 0
        cum += miss
        comp_cum += comp_flags[t - 1]
        if miss:
            mistakes.append(t)
        rows.append((t, x, y, yhat, miss, cum, cum - comp_cum))
        learner.observe(y)

    if checks and isinstance(learner, WeightedMajority):
        if not learner.bound_holds():
            raise InvariantError(
                f"weighted-majority bound violated: {learner.cum_mistakes} > "
                f"{learner.mistake_bound():.3f}"
            )
    randomized = getattr(learner, "randomized", False)
    if checks and mode == "realizable" and not randomized:
        _assert_expert_reproduction(factory, stream, mistakes)

    meta = {
        "learner": learner_cfg.get("name", "soa"),
        "process": process_cfg.get("kind", "iid"),
        "class": str(getattr(concept_class, "preset", class_spec)),
        "seed": str(seed),
        "T": str(T),
        "mode": mode,
        "comparator": comparator,
    }
    for key in ("rollouts", "weight_cap", "history_cap", "experts_max"):
        if key in learner_cfg:
            meta[key] = str(learner_cfg[key])
    return Trace(rows=tuple(rows), metadata=meta)


def _assert_expert_reproduction(factory, stream, mistake_rounds):
    """The flip-set expert built from the learner's own mistake rounds must
    reproduce the true labels on the whole realizable prefix."""
    expert = Expert(mistake_rounds, factory)
    for t, (x, y) in enumerate(zip(stream.xs, stream.ys), start=1):
        got = expert.step(x)
        if got != y:
            raise InvariantError(
                f"mistake-set expert diverged at round {t}: {got} != {y}"
            )


# ---------------------------------------------------------------------------
# condition checkers
# ---------------------------------------------------------------------------


def check_condition1(
    base_cfg,
    process_cfg,
    class_spec,
    seeds,
    n_grid,
    envelope=0.1,
    pool_cap=None,
):
    """Expert-cover growth check for one process family.

    For each seed and each n, the least index of an expert perfect on the
    length-n prefix equals the canonical index of the base learner's
    mistake set on that prefix (supersets only add later rounds, which
    strictly increase the ordering key), so the statistic mean-over-seeds
    of log(i_n)/n is computed exactly.  Verdict: pass iff the statistic at
    the largest n is at most the envelope.
    """
    concept_class = (
        parse_class_spec(class_spec) if isinstance(class_spec, str) else class_spec
    )
    n_grid = sorted(int(n) for n in n_grid)
    n_max = n_grid[-1]
    stats = {n: [] for n in n_grid}
    capped = False
    for seed in seeds:
        stream = build_stream(process_cfg, concept_class, n_max, seed)
        factory = learner_factory(base_cfg, concept_class, stream.model, seed)
        base = factory()
        mistake_rounds = []
        for t, (x, y) in enumerate(zip(stream.xs, stream.ys), start=1):
            if base.predict(x) != y:
                mistake_rounds.append(t)
            base.observe(y)
        _assert_expert_reproduction(factory, stream, mistake_rounds)
        for n in n_grid:
            J_n = [r for r in mistake_rounds if r <= n]
            i_n = index_of_set(J_n)
            if pool_cap is not None and i_n > pool_cap:
                capped = True
            stats[n].append(math.log(i_n) / n)
    series = tuple((n, sum(v) / len(v)) for n, v in sorted(stats.items()))
    last = series[-1][1]
    if capped:
        verdict = "inconclusive"
    else:
        verdict = "pass" if last <= envelope else "fail"
    header = {
        "statistic": "mean over seeds of log(i_n)/n, i_n = index of the base "
        "learner's mistake set (least perfect expert index)",
        "envelope": str(envelope),
        "seeds": str(len(list(seeds))),
        "scope": "single-process check; one pool covering all admissible "
        "processes is not certified here",
    }
    return CheckReport(kind="condition1", series=series, verdict=verdict, header=header)


def _partition_groups(partition, points):
    if partition == "singletons":
        return {p: p for p in points}
    if partition == "one-set":
        return {p: "A1" for p in points}
    groups = {}
    for i, chunk in enumerate(partition.split(";")):
        members = chunk.split()
        for p in members:
            if p in groups:
                raise ConfigError(f"partition sets overlap on {p!r}")
            groups[p] = f"A{i + 1}"
    return groups


def check_c2(
    process_cfg,
    partition,
    t_grid,
    seeds,
    threshold=0.05,
    class_spec=None,
):
    """Disjoint-set visit-count check: the number of partition cells the
    instance prefix touches must grow sublinearly.

    Verdict: pass iff the mean count/T is below the threshold at the
    largest T and the series is non-increasing across the grid.
    """
    t_grid = sorted(int(t) for t in t_grid)
    t_max = t_grid[-1]
    concept_class = (
        parse_class_spec(class_spec) if isinstance(class_spec, str) else class_spec
    )
    stats = {T: [] for T in t_grid}
    for seed in seeds:
        if concept_class is not None:
            stream = build_stream(process_cfg, concept_class, t_max, seed)
            xs = stream.xs
        else:
            model = build_model(process_cfg, _DummyDomain(process_cfg), seed)
            xs = []
            for t in range(1, t_max + 1):
                xs.append(sample_next(model, xs, t, seed=seed))
        groups = _partition_groups(partition, sorted(set(xs)))
        visited = set()
        k = 0
        for t, x in enumerate(xs, start=1):
            cell = groups.get(x)
            if cell is not None and cell not in visited:
                visited.add(cell)
            if t in stats:
                stats[t].append(len(visited) / t)
    series = tuple((T, sum(v) / len(v)) for T, v in sorted(stats.items()))
    trend_ok = all(
        series[i + 1][1] <= series[i][1] + 1e-12 for i in range(len(series) - 1)
    )
    ok = series[-1][1] < threshold and trend_ok
    header = {
        "statistic": "mean over seeds of |{cells visited by X_1..X_T}| / T",
        "threshold": str(threshold),
        "trend": "non-increasing across the grid",
        "seeds": str(len(list(seeds))),
    }
    return CheckReport(
        kind="c2", series=series, verdict="pass" if ok else "fail", header=header
    )


class _DummyDomain:
    """Minimal stand-in when a c2 check runs without a concept class."""

    def __init__(self, process_cfg):
        pts = tuple(process_cfg.get("points", "").split())
        if not pts:
            raise ConfigError("c2 check without a class needs explicit points")
        self.domain = pts

    def position(self, point):
        return self.domain.index(point)


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

TRACE_COLUMNS = ("t", "point", "y", "yhat", "mistake", "cum_mistakes", "cum_regret")


def emit(obj, fmt, path):
    """Write a Trace or CheckReport as csv, jsonl, or svg."""
    if fmt not in ("csv", "jsonl", "svg"):
        raise ConfigError(f"unknown format {fmt!r}")
    if isinstance(obj, Trace):
        text = {
            "csv": trace_to_csv,
            "jsonl": trace_to_jsonl,
            "svg": trace_to_svg,
        }[fmt](obj)
    elif isinstance(obj, CheckReport):
        text = {
            "csv": report_to_csv,
            "jsonl": report_to_jsonl,
            "svg": report_to_svg,
        }[fmt](obj)
    else:
        raise ConfigError(f"cannot emit {type(obj).__name__}")
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from None
    return path


def trace_to_csv(trace):
    lines = [f"# {k}={trace.metadata[k]}" for k in sorted(trace.metadata)]
    lines.append(",".join(TRACE_COLUMNS))
    for row in trace.rows:
        lines.append(",".join(str(v) for v in row))
    return "\n".join(lines) + "\n"


def parse_trace_csv(text):
    meta = {}
    rows = []
    header_seen = False
    for line in text.splitlines():
        if not line:
            continue
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            meta[key] = value
            continue
        if not header_seen:
            if line != ",".join(TRACE_COLUMNS):
                raise ConfigError(f"unexpected trace header {line!r}")
            header_seen = True
            continue
        t, point, y, yhat, miss, cum, regret = line.split(",")
        rows.append(
            (int(t), point, int(y), int(yhat), int(miss), int(cum), int(regret))
        )
    return Trace(rows=tuple(rows), metadata=meta)


def read_trace_csv(path):
    with open(path, "r", encoding="utf-8") as f:
        return parse_trace_csv(f.read())


def trace_to_jsonl(trace):
    lines = [json.dumps({"meta": trace.metadata}, sort_keys=True)]
    for row in trace.rows:
        lines.append(json.dumps(dict(zip(TRACE_COLUMNS, row)), sort_keys=True))
    return "\n".join(lines) + "\n"


def report_to_csv(report):
    lines = [f"# kind={report.kind}", f"# verdict={report.verdict}"]
    lines.extend(f"# {k}={report.header[k]}" for k in sorted(report.header))
    lines.append("n,statistic")
    for n, stat in report.series:
        lines.append(f"{n},{stat!r}")
    return "\n".join(lines) + "\n"


def report_to_jsonl(report):
    head = {"kind": report.kind, "verdict": report.verdict, "header": report.header}
    lines = [json.dumps(head, sort_keys=True)]
    for n, stat in report.series:
        lines.append(json.dumps({"n": n, "statistic": stat}, sort_keys=True))
    return "\n".join(lines) + "\n"


def _svg_chart(points, title, y_label):
    """Minimal line chart as plain svg text (no rendering dependency)."""
    width, height, margin = 640, 400, 50
    if points:
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        x_lo, x_hi = min(xs), max(xs)
        y_lo, y_hi = min(ys), max(ys)
        if x_hi == x_lo:
            x_hi = x_lo + 1
        if y_hi == y_lo:
            y_hi = y_lo + 1
        coords = " ".join(
            f"{margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin):.2f},"
            f"{height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin):.2f}"
            for x, y in points
        )
        poly = f'<polyline fill="none" stroke="#1f6fb2" stroke-width="1.5" points="{coords}"/>'
        labels = (
            f'<text x="{margin}" y="{height - margin + 20}" font-size="11">{x_lo}</text>'
            f'<text x="{width - margin}" y="{height - margin + 20}" font-size="11" text-anchor="end">{x_hi}</text>'
            f'<text x="{margin - 6}" y="{height - margin}" font-size="11" text-anchor="end">{y_lo:.4f}</text>'
            f'<text x="{margin - 6}" y="{margin}" font-size="11" text-anchor="end">{y_hi:.4f}</text>'
        )
    else:
        poly = ""
        labels = ""
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
        f'<rect width="{width}" height="{height}" fill="white"/>'
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>'
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>'
        f'<text x="{width // 2}" y="20" font-size="13" text-anchor="middle">{title}</text>'
        f'<text x="14" y="{height // 2}" font-size="11" transform="rotate(-90 14 {height // 2})" '
        f'text-anchor="middle">{y_label}</text>'
        f"{labels}{poly}</svg>\n"
    )


def trace_to_svg(trace):
    points = [(t, cum / t) for t, _, _, _, _, cum, _ in trace.rows]
    title = "mistake rate: " + ", ".join(
        f"{k}={trace.metadata[k]}" for k in ("learner", "process", "seed")
        if k in trace.metadata
    )
    return _svg_chart(points, title, "cum_mistakes / t")


def report_to_svg(report):
    return _svg_chart(
        list(report.series), f"{report.kind} ({report.verdict})", "statistic"
    )


def adversary_to_csv(trace):
    lines = ["t,point_id,y,node_bfs_index,on_path"]
    for t, point, y, node, on_path in trace.rows:
        lines.append(f"{t},{point},{y},{node},{1 if on_path else 0}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------


def load_config(path):
    """Line-oriented key = value config with one section per module."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config {path}")
    return {section: dict(parser[section]) for section in parser.sections()}


def default_config():
    """The shipped default configuration (thresholds for the checkers)."""
    text = resources.files("mistakelab").joinpath("data/default.ini").read_text()
    parser = configparser.ConfigParser()
    parser.read_string(text)
    return {section: dict(parser[section]) for section in parser.sections()}
