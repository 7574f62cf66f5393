"""Closed-form scalar distribution descriptors.

These parameterize block weights and fitness values; keeping them as tagged
descriptors (rather than opaque callables) lets families compute the exact
moments the limit constants need, lets the config layer round-trip them, and
lets the compiled kernels sample them from a shared inverse-transform
(:func:`rrms._kernels.dist_quantile`), so the object layer and the
replication kernels realize the same law.

Supported kinds: ``const`` (point mass), ``exp`` (Exponential(rate)),
``geom`` (Geometric on {1, 2, ...} with mean 1/p), ``pmf`` (finite support).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._kernels import DIST_CONST, DIST_EXP, DIST_GEOM, DIST_PMF, dist_quantile

_CODES = {"const": DIST_CONST, "exp": DIST_EXP, "geom": DIST_GEOM, "pmf": DIST_PMF}
_EMPTY = np.empty(0, dtype=np.float64)

PMF_MASS_TOL = 1e-12


@dataclass(frozen=True)
class ScalarDist:
    """One scalar law. Use the module constructors rather than __init__."""

    kind: str
    a: float = 0.0
    values: tuple[float, ...] = ()
    probs: tuple[float, ...] = ()
    _cdf: np.ndarray = field(default=_EMPTY, repr=False, compare=False)
    _vals: np.ndarray = field(default=_EMPTY, repr=False, compare=False)

    def draw(self, rng: np.random.Generator) -> float:
        """One sample; consumes one uniform (none for ``const``)."""
        if self.kind == "const":
            return self.a
        return self.quantile(rng.random())

    def quantile(self, u: float) -> float:
        return float(dist_quantile(self.code, self._transform_a, self._vals, self._cdf, u))

    @property
    def code(self) -> int:
        return _CODES[self.kind]

    @property
    def _transform_a(self) -> float:
        # the kernels take a precomputed constant so the per-draw transform
        # is a single multiply: -1/rate for exp, 1/log1p(-p) for geom
        if self.kind == "exp":
            return -1.0 / self.a
        if self.kind == "geom":
            return 1.0 / math.log1p(-self.a)
        return self.a

    def compiled(self) -> tuple[int, float, np.ndarray, np.ndarray]:
        """(code, transform constant, values, cdf) as the kernels consume them."""
        return self.code, self._transform_a, self._vals, self._cdf

    def moment(self, r: int) -> float:
        """Exact E[X^r] for r in {1, 2, 3}."""
        if r not in (1, 2, 3):
            raise ValueError(f"moment order must be 1, 2 or 3, got {r}")
        if self.kind == "const":
            return self.a**r
        if self.kind == "exp":
            return math.factorial(r) / self.a**r
        if self.kind == "geom":
            p = self.a
            if r == 1:
                return 1.0 / p
            if r == 2:
                return (2.0 - p) / p**2
            return (p * p - 6.0 * p + 6.0) / p**3
        return float(sum(q * v**r for v, q in zip(self.values, self.probs)))

    def mean(self) -> float:
        return self.moment(1)

    def zero_mass(self) -> float:
        """P(X = 0)."""
        if self.kind == "const":
            return 1.0 if self.a == 0.0 else 0.0
        if self.kind == "pmf":
            return float(sum(q for v, q in zip(self.values, self.probs) if v == 0.0))
        return 0.0

    def min_value(self) -> float:
        if self.kind == "const":
            return self.a
        if self.kind == "exp":
            return 0.0
        if self.kind == "geom":
            return 1.0
        return min(self.values)

    def is_discrete(self) -> bool:
        return self.kind != "exp"

    def is_finite(self) -> bool:
        return self.kind in ("const", "pmf")

    def atoms(self) -> list[tuple[float, Fraction]]:
        """Exact (value, probability) atoms; finite kinds only."""
        if self.kind == "const":
            return [(self.a, Fraction(1))]
        if self.kind == "pmf":
            total = sum(Fraction(q) for q in self.probs)
            return [(v, Fraction(q) / total) for v, q in zip(self.values, self.probs)]
        raise ValueError(f"{self.kind} distribution has no finite atom list")

    def conditioned_positive(self) -> "ScalarDist":
        """The law of X given X > 0 (exact for finite kinds)."""
        z = self.zero_mass()
        if z == 0.0:
            return self
        if self.kind == "const":
            raise ValueError("constant 0 cannot be conditioned on positivity")
        kept = [(v, q) for v, q in zip(self.values, self.probs) if v != 0.0]
        scale = 1.0 - z
        return finite_pmf([v for v, _ in kept], [q / scale for _, q in kept])

    def to_config(self) -> dict:
        if self.kind == "const":
            return {"kind": "const", "value": self.a}
        if self.kind == "exp":
            return {"kind": "exp", "rate": self.a}
        if self.kind == "geom":
            return {"kind": "geom", "p": self.a}
        return {"kind": "pmf", "values": list(self.values), "probs": list(self.probs)}


def constant(value: float) -> ScalarDist:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError("constant value must be finite")
    return ScalarDist("const", a=value)


def exponential(rate: float) -> ScalarDist:
    rate = float(rate)
    if not (rate > 0.0 and math.isfinite(rate)):
        raise ValueError(f"exponential rate must be positive, got {rate}")
    return ScalarDist("exp", a=rate)


def geometric(p: float) -> ScalarDist:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0,1), got {p}")
    return ScalarDist("geom", a=p)


def finite_pmf(values, probs) -> ScalarDist:
    values = [float(v) for v in values]
    probs = [float(q) for q in probs]
    if len(values) != len(probs) or not values:
        raise ValueError("pmf needs matching nonempty values and probs")
    if any(not math.isfinite(v) for v in values):
        raise ValueError("pmf values must be finite")
    if any(q < 0.0 for q in probs):
        raise ValueError("pmf probabilities must be nonnegative")
    mass = sum(probs)
    if abs(mass - 1.0) > PMF_MASS_TOL:
        raise ValueError(f"pmf probabilities sum to {mass!r}, not 1")
    if len(set(values)) != len(values):
        raise ValueError("pmf values must be distinct")
    kept = sorted((v, q) for v, q in zip(values, probs) if q > 0.0)
    values = tuple(v for v, _ in kept)
    probs = tuple(q for _, q in kept)
    cdf = np.cumsum(np.asarray(probs, dtype=np.float64))
    cdf[-1] = 1.0  # searchsorted never falls off the table
    return ScalarDist(
        "pmf",
        values=values,
        probs=probs,
        _cdf=cdf,
        _vals=np.asarray(values, dtype=np.float64),
    )


def from_config(cfg: dict) -> ScalarDist:
    """Inverse of :meth:`ScalarDist.to_config`; rejects unknown fields."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ValueError(f"distribution config must be a dict with 'kind', got {cfg!r}")
    kind = cfg["kind"]
    expected = {
        "const": {"kind", "value"},
        "exp": {"kind", "rate"},
        "geom": {"kind", "p"},
        "pmf": {"kind", "values", "probs"},
    }.get(kind)
    if expected is None:
        raise ValueError(f"unknown distribution kind {kind!r}")
    extra = set(cfg) - expected
    if extra:
        raise ValueError(f"unknown distribution field(s) {sorted(extra)} for kind {kind!r}")
    missing = expected - set(cfg)
    if missing:
        raise ValueError(f"missing distribution field(s) {sorted(missing)} for kind {kind!r}")
    if kind == "const":
        return constant(cfg["value"])
    if kind == "exp":
        return exponential(cfg["rate"])
    if kind == "geom":
        return geometric(cfg["p"])
    return finite_pmf(cfg["values"], cfg["probs"])


def parse(text: str) -> ScalarDist:
    """Parse CLI shorthand: const:1, exp:2.0, geom:0.5, pmf:1=0.5,2=0.5."""
    kind, sep, rest = text.partition(":")
    if not sep:
        raise ValueError(f"distribution must look like kind:params, got {text!r}")
    try:
        if kind == "const":
            return constant(float(rest))
        if kind == "exp":
            return exponential(float(rest))
        if kind == "geom":
            return geometric(float(rest))
        if kind == "pmf":
            values, probs = [], []
            for item in rest.split(","):
                v, sep2, q = item.partition("=")
                if not sep2:
                    raise ValueError(f"pmf atoms must look like value=prob, got {item!r}")
                values.append(float(v))
                probs.append(float(q))
            return finite_pmf(values, probs)
    except ValueError as exc:
        raise ValueError(f"bad distribution {text!r}: {exc}") from None
    raise ValueError(f"unknown distribution kind {kind!r}")
