"""Hypotheses, partial hypotheses, and finite concept classes.

A domain is an ordered tuple of opaque point ids (strings).  A hypothesis
is a total or partial binary labeling of the domain, stored as a string
over ``{0,1,*}`` aligned with the domain order (``*`` marks undefined).
A concept class is a finite set of such labelings over one shared domain.

Everything here is extensional and immutable: operations are pure
functions, safe to share across concurrent trials.  The one exception to
extensionality is :class:`FullClass`, an analytic stand-in for the
"every labeling" preset on domains too large to tabulate (the extensional
representation needs ``2^N`` rows); it implements the same operation
surface and is cross-checked against the extensional preset in tests.

Realizability follows prefix semantics: a labeled prefix is realizable
when a single hypothesis matches every pair, with no requirement that it
also covers future rounds.
"""

from dataclasses import dataclass, field
from itertools import combinations, product

from .errors import ConfigError, DomainError, SizeError

STAR = "*"

#: Subset-enumeration cap for the weight function (2^cap subsets).
DEFAULT_WEIGHT_CAP = 20

#: Largest domain for which the ``full`` preset is tabulated extensionally.
FULL_EXTENSIONAL_MAX = 12


@dataclass(frozen=True)
class Hypothesis:
    """A (possibly partial) labeling of a finite domain.

    ``labels[i]`` is the label of ``domain[i]``; ``*`` means undefined.
    A total hypothesis has no ``*``.
    """

    domain: tuple
    labels: str

    def __post_init__(self):
        if len(self.domain) != len(self.labels):
            raise ValueError("labels must align with the domain")
        bad = set(self.labels) - {"0", "1", STAR}
        if bad:
            raise ValueError(f"labels must be over 01*, got {sorted(bad)}")

    @property
    def is_total(self):
        return STAR not in self.labels


def evaluate(hypothesis, point):
    """Table lookup: 0, 1, or ``"*"`` when the hypothesis is undefined there."""
    try:
        pos = hypothesis.domain.index(point)
    except ValueError:
        raise DomainError(f"point {point!r} not in domain") from None
    ch = hypothesis.labels[pos]
    return STAR if ch == STAR else int(ch)


class ConceptClass:
    """A finite set of pairwise-distinct hypotheses over a shared domain.

    The hypothesis set may be empty (e.g. after restriction), the domain
    may not.  ``preset`` records how the class was built ("custom" unless
    produced by :func:`preset_class`), testable by regeneration.
    """

    def __init__(self, domain, hypotheses, preset="custom"):
        self.domain = tuple(domain)
        self.hypotheses = tuple(hypotheses)
        self.preset = preset
        if not self.domain:
            raise ValueError("domain must be nonempty")
        if len(set(self.domain)) != len(self.domain):
            raise ValueError("duplicate point ids in domain")
        tables = [h.labels for h in self.hypotheses]
        if len(set(tables)) != len(tables):
            raise ValueError("hypotheses must be pairwise distinct")
        for h in self.hypotheses:
            if h.domain != self.domain:
                raise ValueError("hypothesis domain mismatch")
        self._pos = {p: i for i, p in enumerate(self.domain)}

    def __eq__(self, other):
        return (
            isinstance(other, ConceptClass)
            and self.domain == other.domain
            and set(h.labels for h in self.hypotheses)
            == set(h.labels for h in other.hypotheses)
        )

    def __repr__(self):
        return f"ConceptClass({self.preset!r}, |domain|={len(self.domain)}, |H|={self.size()})"

    def size(self):
        return len(self.hypotheses)

    def is_empty(self):
        return not self.hypotheses

    def position(self, point):
        try:
            return self._pos[point]
        except KeyError:
            raise DomainError(f"point {point!r} not in domain") from None

    def _consistent(self, labels, pairs):
        # exact match required: '*' never matches a requested label
        for x, y in pairs:
            if labels[self.position(x)] != str(y):
                return False
        return True

    def is_realizable(self, prefix):
        """True iff some hypothesis matches every (point, label) pair."""
        pairs = list(prefix)
        return any(self._consistent(h.labels, pairs) for h in self.hypotheses)

    def restrict(self, prefix):
        """Version space: the subclass consistent with every pair (may be empty)."""
        pairs = list(prefix)
        if not pairs:
            return self
        kept = [h for h in self.hypotheses if self._consistent(h.labels, pairs)]
        return ConceptClass(self.domain, kept, preset="custom")

    def shatters(self, points):
        """All 2^|S| patterns realized on S with no ``*``.

        Convention: the empty set is shattered iff the class is nonempty.
        """
        positions = sorted({self.position(p) for p in points})
        target = 1 << len(positions)
        if self.is_empty():
            return False
        seen = set()
        for h in self.hypotheses:
            proj = tuple(h.labels[i] for i in positions)
            if STAR in proj:
                continue
            seen.add(proj)
            if len(seen) == target:
                return True
        return len(seen) == target

    def weight(self, window, cap=DEFAULT_WEIGHT_CAP):
        """Number of shattered subsets of the window's point set.

        Duplicated window points are collapsed before enumeration; the
        empty subset counts whenever the class is nonempty, so a nonempty
        class always has weight >= 1.
        """
        positions = sorted({self.position(p) for p in window})
        if len(positions) > cap:
            raise SizeError(
                f"window has {len(positions)} distinct points", cap=cap
            )
        if self.is_empty():
            return 0
        n = len(positions)
        # bitmask signatures over the window: (defined positions, values)
        sigs = set()
        for h in self.hypotheses:
            d = v = 0
            for j, i in enumerate(positions):
                ch = h.labels[i]
                if ch != STAR:
                    d |= 1 << j
                    if ch == "1":
                        v |= 1 << j
            sigs.add((d, v))
        sigs = list(sigs)
        count = 0
        for s in range(1 << n):
            target = 1 << bin(s).count("1")
            seen = set()
            for d, v in sigs:
                if d & s == s:
                    seen.add(v & s)
                    if len(seen) == target:
                        break
            if len(seen) == target:
                count += 1
        return count

    def behaviors(self):
        """Distinct full-domain label strings (total hypotheses only)."""
        return {h.labels for h in self.hypotheses if h.is_total}


class FullClass:
    """Analytic "every labeling" class, optionally with pinned values.

    Behaves like the extensional ``full`` preset (2^N total hypotheses,
    minus those conflicting with ``pins``) without materializing rows, so
    it scales to domains where tabulation is impossible.  ``pins`` is a
    mapping point -> label accumulated by :meth:`restrict`.
    """

    def __init__(self, domain, pins=None, preset=None):
        self.domain = tuple(domain)
        self.pins = dict(pins or {})
        self.preset = preset or f"full:{len(self.domain)}"
        if not self.domain:
            raise ValueError("domain must be nonempty")
        if len(set(self.domain)) != len(self.domain):
            raise ValueError("duplicate point ids in domain")
        for p in self.pins:
            if p not in self.domain:
                raise DomainError(f"pinned point {p!r} not in domain")

    def __repr__(self):
        return f"FullClass(|domain|={len(self.domain)}, pins={len(self.pins)})"

    def size(self):
        return 1 << self.free_count()

    def is_empty(self):
        return False

    def free_count(self):
        return len(self.domain) - len(self.pins)

    def position(self, point):
        try:
            return self.domain.index(point)
        except ValueError:
            raise DomainError(f"point {point!r} not in domain") from None

    def is_realizable(self, prefix):
        merged = dict(self.pins)
        for x, y in prefix:
            self.position(x)
            y = int(y)
            if merged.setdefault(x, y) != y:
                return False
        return True

    def restrict(self, prefix):
        """Pins the prefix; contradictions yield an empty extensional class."""
        pairs = list(prefix)
        if not pairs:
            return self
        merged = dict(self.pins)
        for x, y in pairs:
            self.position(x)
            y = int(y)
            if merged.setdefault(x, y) != y:
                return ConceptClass(self.domain, (), preset="custom")
        return FullClass(self.domain, merged, preset=self.preset)

    def shatters(self, points):
        # a pinned point can take only its pinned label
        for p in points:
            self.position(p)
        return not any(p in self.pins for p in points)

    def weight(self, window, cap=DEFAULT_WEIGHT_CAP):
        pts = {p for p in window}
        for p in pts:
            self.position(p)
        free = [p for p in pts if p not in self.pins]
        return 1 << len(free)

    def materialize(self):
        """Extensional twin; only valid on small domains (tests use this)."""
        if self.free_count() > FULL_EXTENSIONAL_MAX:
            raise SizeError(
                f"cannot tabulate 2^{self.free_count()} hypotheses",
                cap=FULL_EXTENSIONAL_MAX,
            )
        hyps = []
        free = [p for p in self.domain if p not in self.pins]
        for bits in product("01", repeat=len(free)):
            row = []
            it = iter(bits)
            for p in self.domain:
                row.append(str(self.pins[p]) if p in self.pins else next(it))
            hyps.append(Hypothesis(self.domain, "".join(row)))
        return ConceptClass(self.domain, hyps, preset="custom")


def is_realizable(concept_class, prefix):
    return concept_class.is_realizable(prefix)


def restrict(concept_class, prefix):
    return concept_class.restrict(prefix)


def shatters(concept_class, points):
    return concept_class.shatters(points)


def weight(concept_class, window, cap=DEFAULT_WEIGHT_CAP):
    return concept_class.weight(window, cap=cap)


# ---------------------------------------------------------------------------
# presets and class-file i/o
# ---------------------------------------------------------------------------


def thresholds_class(n):
    """h_a(x) = 1[x >= a] over points 1..n, all cutoffs a = 1..n+1."""
    domain = tuple(str(i) for i in range(1, n + 1))
    hyps = []
    for a in range(1, n + 2):
        hyps.append(Hypothesis(domain, "".join("1" if x >= a else "0" for x in range(1, n + 1))))
    return ConceptClass(domain, hyps, preset=f"thresholds:{n}")


def singletons_class(n):
    """h_i is 1 at point i only, over points 1..n."""
    domain = tuple(str(i) for i in range(1, n + 1))
    hyps = [
        Hypothesis(domain, "".join("1" if j == i else "0" for j in range(n)))
        for i in range(n)
    ]
    return ConceptClass(domain, hyps, preset=f"singletons:{n}")


def full_class(n):
    """Every binary labeling of an n-point domain.

    Extensional up to FULL_EXTENSIONAL_MAX points; analytic beyond, where
    tabulating 2^n rows is impossible.
    """
    domain = tuple(f"p{i}" for i in range(1, n + 1))
    if n <= FULL_EXTENSIONAL_MAX:
        hyps = [
            Hypothesis(domain, "".join(bits)) for bits in product("01", repeat=n)
        ]
        return ConceptClass(domain, hyps, preset=f"full:{n}")
    return FullClass(domain, preset=f"full:{n}")


def union_split_class(p, q):
    """Two-part domain: thresholds on the first part (zero on the second),
    united with all labelings of the second part (constant on the first)."""
    domain = tuple(f"a{i}" for i in range(1, p + 1)) + tuple(
        f"b{i}" for i in range(1, q + 1)
    )
    rows = set()
    for a in range(1, p + 2):
        rows.add("".join("1" if x >= a else "0" for x in range(1, p + 1)) + "0" * q)
    for c in "01":
        for bits in product("01", repeat=q):
            rows.add(c * p + "".join(bits))
    hyps = [Hypothesis(domain, row) for row in sorted(rows)]
    return ConceptClass(domain, hyps, preset=f"union-split:{p},{q}")


PRESET_BUILDERS = {
    "thresholds": lambda args: thresholds_class(int(args)),
    "singletons": lambda args: singletons_class(int(args)),
    "full": lambda args: full_class(int(args)),
    "union-split": lambda args: union_split_class(*(int(a) for a in args.split(","))),
}


def parse_class_spec(spec):
    """Build a class from a spec string: preset ("thresholds:7", "full:6",
    "singletons:5", "union-split:3,2") or "file:PATH"."""
    spec = spec.strip()
    if ":" not in spec:
        raise ConfigError(f"class spec needs name:params, got {spec!r}")
    name, _, args = spec.partition(":")
    if name == "file":
        return load_class_file(args)
    try:
        builder = PRESET_BUILDERS[name]
    except KeyError:
        raise ConfigError(f"unknown class preset {name!r}") from None
    try:
        return builder(args)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameters for preset {name!r}: {exc}") from None


def verify_preset(concept_class):
    """Regenerate the class from its preset tag and compare tables."""
    if concept_class.preset == "custom":
        return True
    rebuilt = parse_class_spec(concept_class.preset)
    if isinstance(rebuilt, FullClass) or isinstance(concept_class, FullClass):
        return type(rebuilt) is type(concept_class) and rebuilt.domain == concept_class.domain
    return rebuilt == concept_class


def load_class_file(path):
    """Plain-text class file: header ``domain: id1 id2 ...`` then one
    hypothesis per line as a string over 01* aligned with the domain."""
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln.strip() for ln in f if ln.strip() and not ln.startswith("#")]
    if not lines or not lines[0].startswith("domain:"):
        raise ConfigError(f"class file {path}: first line must be 'domain: ...'")
    domain = tuple(lines[0][len("domain:"):].split())
    if not domain:
        raise ConfigError(f"class file {path}: empty domain")
    hyps = []
    for ln in lines[1:]:
        if len(ln) != len(domain) or set(ln) - {"0", "1", STAR}:
            raise ConfigError(f"class file {path}: bad hypothesis row {ln!r}")
        hyps.append(Hypothesis(domain, ln))
    try:
        return ConceptClass(domain, hyps, preset="custom")
    except ValueError as exc:
        raise ConfigError(f"class file {path}: {exc}") from None


def save_class_file(concept_class, path):
    if isinstance(concept_class, FullClass):
        concept_class = concept_class.materialize()
    with open(path, "w", encoding="utf-8") as f:
        f.write("domain: " + " ".join(concept_class.domain) + "\n")
        for h in concept_class.hypotheses:
            f.write(h.labels + "\n")
