"""Declarative descriptions of homogeneous Moran constructions.

A construction is driven by four per-level sequences (child count n_k,
contraction ratio c_k, left boundary gap L_k, right boundary gap R_k) plus a
policy that distributes the per-parent interior slack over the n_k - 1
interior gaps.  Everything is exact: sequence values are integers or
`fractions.Fraction` and the interior gaps of every parent sum to the
level slack exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .errors import ConfigError, InconsistentSpecError, InvalidSpecError, RuleEvalError

Rational = Fraction

#: Gaps drawn by the seeded policy are integer weights in [1, WEIGHT_SPAN],
#: normalized exactly; the span bounds the denominators of generated gaps.
WEIGHT_SPAN = 2**30


def parse_rational(text: str | int | Fraction) -> Fraction:
    """Parse "p/q" or "p" (or pass through ints/Fractions) into a Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad rational literal {text!r}: {exc}") from exc


def format_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class SequenceRule:
    """A total function of the level index k >= 1.

    kinds:
      constant        -- values[0] for every k
      periodic        -- values[(k-1) % len(values)]
      explicit-prefix -- values[k-1]; evaluation past the prefix is an error
      table-function  -- func(k); func must be deterministic
    """

    kind: str
    values: tuple = ()
    func: Callable[[int], int | Fraction] | None = None
    name: str = "rule"

    def __post_init__(self):
        if self.kind not in ("constant", "periodic", "explicit-prefix", "table-function"):
            raise ConfigError(f"unknown rule kind {self.kind!r}")
        if self.kind == "table-function":
            if self.func is None:
                raise ConfigError("table-function rule needs func")
        elif not self.values:
            raise ConfigError(f"{self.kind} rule needs at least one value")

    def __call__(self, k: int):
        if k < 1:
            raise RuleEvalError(self.name, k, "levels start at 1")
        if self.kind == "constant":
            return self.values[0]
        if self.kind == "periodic":
            return self.values[(k - 1) % len(self.values)]
        if self.kind == "explicit-prefix":
            if k > len(self.values):
                raise RuleEvalError(self.name, k, f"prefix has {len(self.values)} entries")
            return self.values[k - 1]
        return self.func(k)


def constant(value, name="rule") -> SequenceRule:
    return SequenceRule("constant", (value,), name=name)


@dataclass(frozen=True)
class GapPolicy:
    """Distributes the interior slack of one parent over its interior gaps.

    Boundary gaps are never produced here; they are always the L/R rules.
    kinds:
      uniform       -- slack split equally
      weighted      -- slack split proportionally to a fixed rational weight
                       cycle (cycled when shorter than the gap count)
      seeded-random -- positive pseudorandom weights drawn deterministically
                       from (seed, sigma, k), normalized to the exact slack
    """

    kind: str
    weights: tuple[Fraction, ...] = ()
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "weighted", "seeded-random"):
            raise ConfigError(f"unknown gap policy kind {self.kind!r}")
        if self.kind == "weighted":
            if not self.weights:
                raise ConfigError("weighted gap policy needs weights")
            if any(w < 0 for w in self.weights) or sum(self.weights) == 0:
                raise ConfigError("weights must be nonnegative with positive sum")
        if self.kind == "seeded-random" and self.seed is None:
            raise ConfigError("seeded-random gap policy needs a seed")

    @property
    def node_independent(self) -> bool:
        """True when every parent at a level receives identical gaps."""
        return self.kind != "seeded-random"

    def interior_gaps(self, sigma: tuple[int, ...], k: int, count: int,
                      slack: Fraction) -> tuple[Fraction, ...]:
        """The `count` interior gaps of parent `sigma` at level k, summing to slack."""
        if count < 1:
            raise InvalidSpecError(f"level {k} has {count + 1} children; need >= 2")
        if slack < 0:
            raise InconsistentSpecError(f"negative slack {slack} at level {k}")
        if self.kind == "uniform":
            share = slack / count
            return (share,) * count
        if self.kind == "weighted":
            w = [self.weights[i % len(self.weights)] for i in range(count)]
        else:
            rng = random.Random(f"{self.seed}|{k}|{','.join(map(str, sigma))}")
            w = [rng.randint(1, WEIGHT_SPAN) for _ in range(count)]
        total = sum(w)
        # Exact proportional split; the sum telescopes back to `slack`.
        return tuple(slack * wi / total for wi in w)


class MoranSpec:
    """Declarative generator of one homogeneous Moran construction.

    Rules are total functions of k, so the spec describes an infinite object;
    every operation takes an explicit finite depth.
    """

    def __init__(self, n_rule: SequenceRule, c_rule: SequenceRule,
                 L_rule: SequenceRule, R_rule: SequenceRule,
                 gaps: GapPolicy,
                 interval: tuple[Fraction, Fraction] = (Fraction(0), Fraction(1)),
                 name: str = "custom"):
        self.n_rule = n_rule
        self.c_rule = c_rule
        self.L_rule = L_rule
        self.R_rule = R_rule
        self.gaps = gaps
        self.interval = (Fraction(interval[0]), Fraction(interval[1]))
        if self.interval[0] >= self.interval[1]:
            raise ConfigError("initial interval must have positive length")
        self.name = name
        self._delta = {0: self.interval[1] - self.interval[0]}
        self._count = {0: 1}

    def n(self, k: int) -> int:
        v = self.n_rule(k)
        if not isinstance(v, int) or v < 2:
            raise InvalidSpecError(f"n_{k} = {v!r}; need an integer >= 2")
        return v

    def c(self, k: int) -> Fraction:
        v = Fraction(self.c_rule(k))
        if v <= 0:
            raise InvalidSpecError(f"c_{k} = {v}; need a positive rational")
        return v

    def L(self, k: int) -> Fraction:
        v = Fraction(self.L_rule(k))
        if v < 0:
            raise InvalidSpecError(f"L_{k} = {v}; need a nonnegative rational")
        return v

    def R(self, k: int) -> Fraction:
        v = Fraction(self.R_rule(k))
        if v < 0:
            raise InvalidSpecError(f"R_{k} = {v}; need a nonnegative rational")
        return v

    def delta(self, k: int) -> Fraction:
        """Exact length of every level-k interval (level 0 = initial interval)."""
        if k not in self._delta:
            top = max(i for i in self._delta if i <= k)
            d = self._delta[top]
            for j in range(top + 1, k + 1):
                d *= self.c(j)
                self._delta[j] = d
        return self._delta[k]

    def count(self, k: int) -> int:
        """Exact number of level-k intervals."""
        if k not in self._count:
            top = max(i for i in self._count if i <= k)
            n = self._count[top]
            for j in range(top + 1, k + 1):
                n *= self.n(j)
                self._count[j] = n
        return self._count[k]

    def slack(self, k: int) -> Fraction:
        """Interior gap budget of every level-(k-1) parent: what remains of the
        parent after the n_k children and both boundary gaps are placed."""
        e = self.delta(k - 1) - self.n(k) * self.delta(k) - self.L(k) - self.R(k)
        if e < 0:
            raise InconsistentSpecError(
                f"negative slack at level {k}: e_{k} = {e}; children and boundary "
                "gaps exceed the parent length")
        return e

    def interior_gaps(self, sigma: tuple[int, ...], k: int) -> tuple[Fraction, ...]:
        return self.gaps.interior_gaps(sigma, k, self.n(k) - 1, self.slack(k))

    def __repr__(self):
        return f"MoranSpec({self.name!r})"


@dataclass
class LevelCheck:
    k: int
    n: int | None = None
    c: Fraction | None = None
    slack: Fraction | None = None
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


@dataclass
class ValidationReport:
    spec_name: str
    depth: int
    levels: list[LevelCheck]
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and all(lc.ok for lc in self.levels)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec_name,
            "depth": self.depth,
            "ok": self.ok,
            "error": self.error,
            "levels": [
                {"k": lc.k, "ok": lc.ok, "problems": lc.problems}
                for lc in self.levels
            ],
        }


def validate_spec(spec: MoranSpec, K: int) -> ValidationReport:
    """Check the structural constraints on every level up to K.

    Per level: n_k >= 2 integer, n_k c_k < 1, L_k, R_k >= 0, slack e_k >= 0,
    and (for node-independent policies) nonnegative interior gaps.  Rule
    evaluation failures abort with a structured error naming the level.
    """
    if K < 1:
        raise ConfigError("depth must be >= 1")
    levels = []
    for k in range(1, K + 1):
        lc = LevelCheck(k)
        try:
            try:
                lc.n = spec.n(k)
            except InvalidSpecError as exc:
                lc.problems.append(str(exc))
            try:
                lc.c = spec.c(k)
            except InvalidSpecError as exc:
                lc.problems.append(str(exc))
            if lc.n is not None and lc.c is not None and lc.n * lc.c >= 1:
                lc.problems.append(f"n_{k} * c_{k} = {lc.n * lc.c} >= 1")
            for label, rule in (("L", spec.L), ("R", spec.R)):
                try:
                    rule(k)
                except InvalidSpecError as exc:
                    lc.problems.append(str(exc))
            if lc.ok:
                try:
                    lc.slack = spec.slack(k)
                except InconsistentSpecError as exc:
                    lc.problems.append(str(exc))
            if lc.ok and spec.gaps.node_independent:
                gaps = spec.interior_gaps((), k)
                if any(g < 0 for g in gaps):
                    lc.problems.append(f"negative interior gap at level {k}")
        except RuleEvalError as exc:
            levels.append(lc)
            return ValidationReport(spec.name, K, levels, error=str(exc))
        levels.append(lc)
    return ValidationReport(spec.name, K, levels)


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

def _cantor3() -> MoranSpec:
    return MoranSpec(
        constant(2, "n"), constant(Fraction(1, 3), "c"),
        constant(Fraction(0), "L"), constant(Fraction(0), "R"),
        GapPolicy("uniform"), name="cantor3")


def _dim1_binary() -> MoranSpec:
    c = SequenceRule("table-function",
                     func=lambda k: (1 - Fraction(1, 4**k)) / 2, name="c")
    return MoranSpec(
        constant(2, "n"), c,
        constant(Fraction(0), "L"), constant(Fraction(0), "R"),
        GapPolicy("uniform"), name="dim1_binary")


def _wide10() -> MoranSpec:
    return MoranSpec(
        constant(10, "n"), constant(Fraction(1, 20), "c"),
        constant(Fraction(0), "L"), constant(Fraction(0), "R"),
        GapPolicy("uniform"), name="wide10")


def _skew10(seed: int = 42) -> MoranSpec:
    return MoranSpec(
        constant(10, "n"), constant(Fraction(1, 20), "c"),
        constant(Fraction(0), "L"), constant(Fraction(0), "R"),
        GapPolicy("seeded-random", seed=seed), name="skew10")


def _padded2() -> MoranSpec:
    # Nonzero boundary gaps: every trimmed quantity differs from its base one.
    lr = SequenceRule("table-function", func=lambda k: Fraction(1, 8 * 4**k), name="LR")
    return MoranSpec(
        constant(2, "n"), constant(Fraction(1, 4), "c"),
        lr, lr, GapPolicy("uniform"), name="padded2")


_PRESETS: dict[str, Callable[..., MoranSpec]] = {
    "cantor3": _cantor3,
    "dim1_binary": _dim1_binary,
    "wide10": _wide10,
    "skew10": _skew10,
    "padded2": _padded2,
}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def presets() -> dict[str, MoranSpec]:
    """All built-in constructions, freshly instantiated."""
    return {name: fn() for name, fn in _PRESETS.items()}


def preset(name: str, **kwargs) -> MoranSpec:
    try:
        fn = _PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(preset_names())}")
    return fn(**kwargs)


# ---------------------------------------------------------------------------
# Config-file loading
# ---------------------------------------------------------------------------

def _rule_from_config(node: dict, name: str, integer: bool) -> SequenceRule:
    if not isinstance(node, dict) or "kind" not in node:
        raise ConfigError(f"rule {name!r} must be an object with a 'kind'")
    kind = node["kind"]
    raw = node.get("values", [])
    if kind == "table-function":
        raise ConfigError("table-function rules are API-only, not loadable from config")
    if integer:
        values = tuple(int(v) for v in raw)
    else:
        values = tuple(parse_rational(v) for v in raw)
    return SequenceRule(kind, values, name=name)


def spec_from_config(cfg: dict, name: str = "custom") -> MoranSpec:
    """Build a MoranSpec from a parsed config mapping.

    Schema: {"n": rule, "c": rule, "L": rule, "R": rule,
             "gaps": {"kind": ..., "seed": int | "weights": [rationals]},
             "interval": {"lo": "p/q", "hi": "p/q"}}   (interval optional)
    """
    for key in ("n", "c", "L", "R", "gaps"):
        if key not in cfg:
            raise ConfigError(f"spec config missing key {key!r}")
    gp = cfg["gaps"]
    policy = GapPolicy(
        gp.get("kind", "uniform"),
        weights=tuple(parse_rational(w) for w in gp.get("weights", [])),
        seed=gp.get("seed"))
    iv = cfg.get("interval", {"lo": "0", "hi": "1"})
    return MoranSpec(
        _rule_from_config(cfg["n"], "n", integer=True),
        _rule_from_config(cfg["c"], "c", integer=False),
        _rule_from_config(cfg["L"], "L", integer=False),
        _rule_from_config(cfg["R"], "R", integer=False),
        policy,
        interval=(parse_rational(iv["lo"]), parse_rational(iv["hi"])),
        name=name)
