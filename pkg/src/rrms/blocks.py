"""Block abstraction and the concrete block families.

A block is a weighted space with a distinguished attachment point (its hook)
and a probability measure; all the growth process ever needs from it is its
weight and the law of the distance from the hook to a measure-random point
(the within-block depth), so that pair is all a :class:`BlockInstance`
carries.  A :class:`BlockFamily` is a law over blocks: one generator for the
initial block (whose weight must be strictly positive) and one for the
i.i.d. attachments, plus exact moments where closed forms exist.

Discrete blocks carry their depth law as exact rational atoms so the
small-instance oracles can do exact arithmetic; the compiled kernels get the
same laws as float cdf tables via :meth:`BlockFamily.compiled`.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from . import dists
from ._kernels import (
    FAM_CATALOG,
    FAM_GEOM_PATH,
    FAM_K2,
    FAM_USEG,
    CompiledFamily,
    DIST_CONST,
)

PMF_MASS_TOL = 1e-12

_EMPTY_F = np.empty(0, dtype=np.float64)
_EMPTY_I = np.empty(0, dtype=np.int64)

Atom = tuple[object, Fraction]  # (depth: int | Fraction, probability)


@dataclass
class BlockInstance:
    """One realized block: weight plus its within-block depth law."""

    weight: float
    depth_sampler: Callable[[np.random.Generator], float]
    exact_pmf: Optional[list[Atom]] = None
    mean_depth: object = None  # int | Fraction | float | None

    def mean_from_pmf(self):
        if self.exact_pmf is None:
            raise ValueError("block has no exact pmf")
        return sum(d * p for d, p in self.exact_pmf)


@dataclass(frozen=True)
class FamilyMoments:
    """Closed-form moments: E[W], E[W_0], E[W delta'], E[W delta'^2]."""

    e_w: float
    e_w0: float
    e_wd: float
    e_wd2: float

    def __post_init__(self):
        if not self.e_w > 0.0:
            raise ValueError(f"E[W] must be positive, got {self.e_w}")
        if not self.e_w0 > 0.0:
            raise ValueError(f"E[W_0] must be positive, got {self.e_w0}")


def _exact_depth_key(value) -> object:
    """Exact grid key for a depth: int when integral, else exact rational."""
    if isinstance(value, (int, Fraction)):
        frac = Fraction(value)
    elif isinstance(value, float):
        if not math.isfinite(value) or value < 0.0:
            raise ValueError(f"depths must be finite and nonnegative, got {value}")
        frac = Fraction(value)
    else:
        raise ValueError(f"unsupported depth value {value!r}")
    if frac < 0:
        raise ValueError(f"depths must be nonnegative, got {value}")
    return int(frac) if frac.denominator == 1 else frac


def normalize_atoms(entries: Sequence[tuple]) -> list[Atom]:
    """Validate, exactly normalize, merge and sort (depth, prob) atoms."""
    if not entries:
        raise ValueError("pmf must have at least one atom")
    merged: dict[object, Fraction] = {}
    for depth, prob in entries:
        p = Fraction(prob)
        if p < 0:
            raise ValueError(f"pmf probabilities must be nonnegative, got {prob}")
        if p == 0:
            continue
        key = _exact_depth_key(depth)
        merged[key] = merged.get(key, Fraction(0)) + p
    total = sum(merged.values())
    if abs(float(total) - 1.0) > PMF_MASS_TOL:
        raise ValueError(f"pmf probabilities sum to {float(total)!r}, not 1")
    return sorted((d, p / total) for d, p in merged.items())


def _atom_sampler(atoms: list[Atom]) -> tuple[Callable, np.ndarray, np.ndarray]:
    vals = np.array([float(d) for d, _ in atoms], dtype=np.float64)
    cdf = np.cumsum(np.array([float(p) for _, p in atoms], dtype=np.float64))
    cdf[-1] = 1.0

    def sampler(rng: np.random.Generator) -> float:
        return float(vals[np.searchsorted(cdf, rng.random(), side="right")])

    return sampler, vals, cdf


def _discrete_instance(weight: float, atoms: list[Atom]) -> BlockInstance:
    sampler, _, _ = _atom_sampler(atoms)
    mean = sum(d * p for d, p in atoms)
    return BlockInstance(float(weight), sampler, exact_pmf=atoms, mean_depth=mean)


def _unlatchable(weight: float) -> BlockInstance:
    def sampler(rng):
        raise ValueError("a zero-weight block is never latched into")

    return BlockInstance(float(weight), sampler)


class BlockFamily:
    """A law over blocks. Build via the ``*_family`` constructors."""

    def __init__(self, kind, descriptor, moments, compiled, **attrs):
        self.kind = kind
        self.descriptor = descriptor
        self.moments = moments
        self.compiled = compiled
        for name, value in attrs.items():
            setattr(self, name, value)

    def __repr__(self):
        return f"BlockFamily({self.descriptor!r})"

    # -- sampling -----------------------------------------------------------

    def sample_initial(self, rng: np.random.Generator) -> BlockInstance:
        """Draw the initial block; its weight is strictly positive a.s."""
        if self.kind == "k2":
            return _k2_initial_instance(self.fit0.draw(rng))
        if self.kind == "geometric_path":
            return _geom_block_instance(self.p, self.gd.draw(rng))
        if self.kind == "uniform_segment":
            return _useg_block_instance(self.wd0.draw(rng))
        v = int(np.searchsorted(self.ini_cdf, rng.random(), side="right"))
        return self.initials[v]

    def sample_block(self, rng: np.random.Generator) -> BlockInstance:
        """Draw one i.i.d. attachment block."""
        if self.kind == "k2":
            return _k2_block_instance(self.alpha, self.fit.draw(rng))
        if self.kind == "geometric_path":
            return _geom_block_instance(self.p, self.gd.draw(rng))
        if self.kind == "uniform_segment":
            return _useg_block_instance(self.wd.draw(rng))
        v = int(np.searchsorted(self.var_cdf, rng.random(), side="right"))
        return self.variants[v]

    def instance_for(self, weight: float, aux: int, is_initial: bool) -> BlockInstance:
        """The block described by a kernel record (weight, catalog variant)."""
        if self.kind == "k2":
            if is_initial:
                return _k2_initial_instance(weight)
            return _k2_block_instance(self.alpha, weight - self.alpha, weight)
        if self.kind == "geometric_path":
            return _geom_block_instance(self.p, weight)
        if self.kind == "uniform_segment":
            return _useg_block_instance(weight)
        return self.initials[aux] if is_initial else self.variants[aux]

    # -- exact structure ----------------------------------------------------

    def exact_variants(self) -> tuple[BlockInstance, list[BlockInstance]]:
        """(initial block, finite variant list) for exact-identity checks.

        Only available when every variant is finite and discrete with a
        deterministic weight, and the initial block is deterministic; the
        exact oracles assign variant k of the cycle to block k.
        """
        if self.kind == "k2":
            if not (self.fit.is_finite() and self.fit0.is_finite()):
                raise ValueError("exact mode requires finite fitness distributions")
            ini_atoms = self.fit0.atoms()
            if len(ini_atoms) != 1:
                raise ValueError("exact mode requires a deterministic initial block")
            initial = _k2_initial_instance(ini_atoms[0][0])
            variants = [_k2_block_instance(self.alpha, a) for a, _ in self.fit.atoms()]
            return initial, variants
        if self.kind in ("hooking", "custom_discrete"):
            if len(self.initials) != 1:
                raise ValueError("exact mode requires a deterministic initial block")
            return self.initials[0], list(self.variants)
        raise ValueError("exact mode requires discrete blocks with deterministic weights")

    # -- serialization ------------------------------------------------------

    def to_config(self) -> dict:
        return self.descriptor


# -- k2 (preferential attachment with additive fitness) ----------------------


def _k2_initial_instance(a0: float) -> BlockInstance:
    # single attachment point at the master hook itself
    return BlockInstance(
        float(a0),
        lambda rng: 0.0,
        exact_pmf=[(0, Fraction(1))],
        mean_depth=Fraction(0),
    )


def _k2_block_instance(alpha: float, a: float, weight: float | None = None) -> BlockInstance:
    w = float(alpha + a) if weight is None else float(weight)
    if w <= 0.0:
        return _unlatchable(w)
    fa, fw = Fraction(float(alpha)), Fraction(w)
    atoms = normalize_atoms([(0, fa / fw), (1, (fw - fa) / fw)])

    def sampler(rng: np.random.Generator) -> float:
        return 0.0 if rng.random() * w < alpha else 1.0

    return BlockInstance(w, sampler, exact_pmf=atoms, mean_depth=(fw - fa) / fw)


def k2_family(
    alpha: float,
    fitness_dist: dists.ScalarDist,
    initial_fitness_dist: dists.ScalarDist | None = None,
) -> BlockFamily:
    """Vertex blocks of weight alpha + A: the latch sits at the hook with
    probability alpha/(alpha + A) and one step below it otherwise.

    The initial block is a single point of weight A_0 at depth 0.  When
    ``initial_fitness_dist`` is omitted, the fitness law conditioned on
    positivity is used.
    """
    alpha = float(alpha)
    if not (alpha >= 0.0 and math.isfinite(alpha)):
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if fitness_dist.zero_mass() >= 1.0:
        raise ValueError("fitness distribution must not be the constant 0")
    if fitness_dist.min_value() < 0.0:
        raise ValueError("fitness values must be nonnegative")
    fit0 = initial_fitness_dist
    if fit0 is None:
        fit0 = fitness_dist.conditioned_positive()
    if fit0.min_value() < 0.0 or fit0.zero_mass() > 0.0:
        raise ValueError("initial fitness distribution must be strictly positive")
    moments = FamilyMoments(
        e_w=alpha + fitness_dist.mean(),
        e_w0=fit0.mean(),
        e_wd=fitness_dist.mean(),
        e_wd2=fitness_dist.mean(),
    )
    descriptor = {
        "kind": "k2",
        "alpha": alpha,
        "fitness": fitness_dist.to_config(),
        "initial_fitness": fit0.to_config(),
    }
    wd = fitness_dist.compiled()
    w0 = fit0.compiled()
    compiled = CompiledFamily(
        kind=FAM_K2,
        alpha=alpha,
        wd_code=wd[0],
        wd_a=wd[1],
        wd_vals=wd[2],
        wd_cdf=wd[3],
        w0_code=w0[0],
        w0_a=w0[1],
        w0_vals=w0[2],
        w0_cdf=w0[3],
        var_cdf=_EMPTY_F,
        var_weight=_EMPTY_F,
        var_doff=_EMPTY_I,
        var_dvals=_EMPTY_F,
        var_dcdf=_EMPTY_F,
        ini_cdf=_EMPTY_F,
        ini_weight=_EMPTY_F,
        ini_doff=_EMPTY_I,
        ini_dvals=_EMPTY_F,
        ini_dcdf=_EMPTY_F,
        e_w=moments.e_w,
        e_w0=moments.e_w0,
    )
    return BlockFamily(
        "k2", descriptor, moments, compiled, alpha=alpha, fit=fitness_dist, fit0=fit0
    )


# -- geometric paths ----------------------------------------------------------


def _geom_block_instance(p: float, w: float) -> BlockInstance:
    length = int(w)

    def sampler(rng: np.random.Generator) -> float:
        return 1.0 + np.floor(rng.random() * w)

    atoms = [(j, Fraction(1, length)) for j in range(1, length + 1)]
    return BlockInstance(float(w), sampler, exact_pmf=atoms, mean_depth=Fraction(length + 1, 2))


def geometric_path_family(p: float) -> BlockFamily:
    """Path blocks hooked at one end: the weight is the path length, drawn
    geometrically on {1, 2, ...} with mean 1/p, and the latch is uniform over
    the non-hook path vertices.  The initial block follows the same law."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0,1), got {p}")
    moments = FamilyMoments(
        e_w=1.0 / p,
        e_w0=1.0 / p,
        e_wd=1.0 / p**2,
        e_wd2=(2.0 - p) / p**3,
    )
    descriptor = {"kind": "geometric_path", "p": p}
    wd = dists.geometric(p).compiled()
    compiled = CompiledFamily(
        kind=FAM_GEOM_PATH,
        alpha=0.0,
        wd_code=wd[0],
        wd_a=wd[1],
        wd_vals=wd[2],
        wd_cdf=wd[3],
        w0_code=wd[0],
        w0_a=wd[1],
        w0_vals=wd[2],
        w0_cdf=wd[3],
        var_cdf=_EMPTY_F,
        var_weight=_EMPTY_F,
        var_doff=_EMPTY_I,
        var_dvals=_EMPTY_F,
        var_dcdf=_EMPTY_F,
        ini_cdf=_EMPTY_F,
        ini_weight=_EMPTY_F,
        ini_doff=_EMPTY_I,
        ini_dvals=_EMPTY_F,
        ini_dcdf=_EMPTY_F,
        e_w=moments.e_w,
        e_w0=moments.e_w0,
    )
    return BlockFamily(
        "geometric_path", descriptor, moments, compiled, p=p, gd=dists.geometric(p)
    )


# -- uniform segments ---------------------------------------------------------


def _useg_block_instance(w: float) -> BlockInstance:
    if w <= 0.0:
        return _unlatchable(w)

    def sampler(rng: np.random.Generator) -> float:
        return rng.random() * w

    return BlockInstance(float(w), sampler, exact_pmf=None, mean_depth=w / 2.0)


def uniform_segment_family(weight_dist: dists.ScalarDist) -> BlockFamily:
    """Line segments [0, W] hooked at 0 with the uniform measure.  The
    initial block conditions the weight law on positivity."""
    if weight_dist.min_value() < 0.0:
        raise ValueError("segment weights must be nonnegative")
    if weight_dist.zero_mass() >= 1.0 or weight_dist.mean() <= 0.0:
        raise ValueError("segment weight distribution must have positive mean")
    wd0 = weight_dist.conditioned_positive()
    moments = FamilyMoments(
        e_w=weight_dist.moment(1),
        e_w0=wd0.moment(1),
        e_wd=weight_dist.moment(2) / 2.0,
        e_wd2=weight_dist.moment(3) / 3.0,
    )
    descriptor = {"kind": "uniform_segment", "weights": weight_dist.to_config()}
    wd = weight_dist.compiled()
    w0 = wd0.compiled()
    compiled = CompiledFamily(
        kind=FAM_USEG,
        alpha=0.0,
        wd_code=wd[0],
        wd_a=wd[1],
        wd_vals=wd[2],
        wd_cdf=wd[3],
        w0_code=w0[0],
        w0_a=w0[1],
        w0_vals=w0[2],
        w0_cdf=w0[3],
        var_cdf=_EMPTY_F,
        var_weight=_EMPTY_F,
        var_doff=_EMPTY_I,
        var_dvals=_EMPTY_F,
        var_dcdf=_EMPTY_F,
        ini_cdf=_EMPTY_F,
        ini_weight=_EMPTY_F,
        ini_doff=_EMPTY_I,
        ini_dvals=_EMPTY_F,
        ini_dcdf=_EMPTY_F,
        e_w=moments.e_w,
        e_w0=moments.e_w0,
    )
    return BlockFamily(
        "uniform_segment", descriptor, moments, compiled, wd=weight_dist, wd0=wd0
    )


# -- catalog-backed families (hooking networks, custom discrete) -------------


def _catalog_compiled(
    variants: list[BlockInstance],
    var_probs: list[Fraction],
    initials: list[BlockInstance],
    ini_probs: list[Fraction],
    e_w: float,
    e_w0: float,
) -> tuple[CompiledFamily, np.ndarray, np.ndarray]:
    def tables(insts, probs):
        cdf = np.cumsum(np.array([float(q) for q in probs], dtype=np.float64))
        cdf[-1] = 1.0
        weight = np.array([b.weight for b in insts], dtype=np.float64)
        doff = np.zeros(len(insts) + 1, dtype=np.int64)
        dvals, dcdf = [], []
        for i, b in enumerate(insts):
            atoms = b.exact_pmf
            if atoms is None:
                raise ValueError("catalog blocks need exact depth pmfs")
            acc = 0.0
            for d, q in atoms:
                dvals.append(float(d))
                acc += float(q)
                dcdf.append(acc)
            dcdf[-1] = 1.0
            doff[i + 1] = len(dvals)
        return (
            cdf,
            weight,
            doff,
            np.array(dvals, dtype=np.float64),
            np.array(dcdf, dtype=np.float64),
        )

    var_cdf, var_weight, var_doff, var_dvals, var_dcdf = tables(variants, var_probs)
    ini_cdf, ini_weight, ini_doff, ini_dvals, ini_dcdf = tables(initials, ini_probs)
    compiled = CompiledFamily(
        kind=FAM_CATALOG,
        alpha=0.0,
        wd_code=DIST_CONST,
        wd_a=0.0,
        wd_vals=_EMPTY_F,
        wd_cdf=_EMPTY_F,
        w0_code=DIST_CONST,
        w0_a=0.0,
        w0_vals=_EMPTY_F,
        w0_cdf=_EMPTY_F,
        var_cdf=var_cdf,
        var_weight=var_weight,
        var_doff=var_doff,
        var_dvals=var_dvals,
        var_dcdf=var_dcdf,
        ini_cdf=ini_cdf,
        ini_weight=ini_weight,
        ini_doff=ini_doff,
        ini_dvals=ini_dvals,
        ini_dcdf=ini_dcdf,
        e_w=e_w,
        e_w0=e_w0,
    )
    return compiled, var_cdf, ini_cdf


def _normalize_probs(probs, what: str) -> list[Fraction]:
    fracs = [Fraction(float(q)) for q in probs]
    if any(q < 0 for q in fracs):
        raise ValueError(f"{what} must be nonnegative")
    total = sum(fracs)
    if abs(float(total) - 1.0) > PMF_MASS_TOL:
        raise ValueError(f"{what} sum to {float(total)!r}, not 1")
    return [q / total for q in fracs]


def _graph_block(edges, hook: int, chi: Fraction, rho: Fraction, initial: bool):
    """Exact (weight, depth atoms) of one hooked graph under degree weights."""
    if not edges:
        raise ValueError("catalog graphs must have at least one edge")
    verts = {int(hook)}
    for a, b in edges:
        verts.add(int(a))
        verts.add(int(b))
    if min(verts) < 0 or max(verts) + 1 != len(verts):
        raise ValueError("graph vertices must be labeled 0..V-1")
    nv = len(verts)
    deg = [0] * nv
    adj = [[] for _ in range(nv)]
    for a, b in edges:
        a, b = int(a), int(b)
        deg[a] += 1
        deg[b] += 1
        adj[a].append(b)
        adj[b].append(a)
    dist = [-1] * nv
    dist[hook] = 0
    queue = deque([hook])
    while queue:
        v = queue.popleft()
        for u in adj[v]:
            if dist[u] < 0:
                dist[u] = dist[v] + 1
                queue.append(u)
    if any(d < 0 for d in dist):
        raise ValueError("catalog graphs must be connected")
    vw = []
    for v in range(nv):
        mass = chi * deg[v] + rho
        if v == hook and not initial:
            mass = chi * deg[v]
        if mass < 0:
            raise ValueError(
                f"vertex {v} gets negative measure {float(mass)} under chi={float(chi)}, rho={float(rho)}"
            )
        vw.append(mass)
    weight = sum(vw)
    if weight <= 0:
        raise ValueError("graph weight must be positive")
    atoms = normalize_atoms([(dist[v], vw[v] / weight) for v in range(nv)])
    return weight, atoms


def hooking_family(
    block_catalog: Sequence[tuple[Sequence, int]],
    catalog_probs: Sequence[float],
    chi: float,
    rho: float,
) -> BlockFamily:
    """Graph blocks glued hook-to-latch, vertex measure chi*deg(v) + rho.

    For attachment blocks the hook keeps only its degree mass (the rho share
    belongs to the attachment point it fused with), so W = sum(chi*deg + rho)
    - rho; the initial block keeps the full sum.  Depth atoms and moments are
    exact rationals from the integer degree/distance data.
    """
    chi = float(chi)
    rho = float(rho)
    if chi < 0.0:
        raise ValueError(f"chi must be nonnegative, got {chi}")
    if chi + rho <= 0.0:
        raise ValueError(f"chi + rho must be positive, got {chi + rho}")
    if len(block_catalog) != len(catalog_probs) or not block_catalog:
        raise ValueError("catalog and probabilities must match and be nonempty")
    probs = _normalize_probs(catalog_probs, "catalog probabilities")
    chi_f, rho_f = Fraction(chi), Fraction(rho)
    variants, initials = [], []
    for edges, hook in block_catalog:
        w, atoms = _graph_block(edges, int(hook), chi_f, rho_f, initial=False)
        variants.append(_discrete_instance(float(w), atoms))
        w0, atoms0 = _graph_block(edges, int(hook), chi_f, rho_f, initial=True)
        initials.append(_discrete_instance(float(w0), atoms0))
    return _catalog_family(
        kind="hooking",
        descriptor={
            "kind": "hooking",
            "chi": chi,
            "rho": rho,
            "catalog": [
                {
                    "edges": [[int(a), int(b)] for a, b in edges],
                    "hook": int(hook),
                    "prob": float(q),
                }
                for (edges, hook), q in zip(block_catalog, probs)
            ],
        },
        variants=variants,
        var_probs=probs,
        initials=initials,
        ini_probs=probs,
    )


def custom_discrete_family(
    weighted_pmf_blocks: Sequence[tuple[float, Sequence[tuple]]],
    block_probs: Sequence[float],
    initial: tuple[float, Sequence[tuple]],
) -> BlockFamily:
    """Arbitrary finite-discrete blocks with explicit weights and depth pmfs."""
    if len(weighted_pmf_blocks) != len(block_probs) or not weighted_pmf_blocks:
        raise ValueError("blocks and probabilities must match and be nonempty")
    probs = _normalize_probs(block_probs, "block probabilities")
    variants = []
    for w, pmf in weighted_pmf_blocks:
        w = float(w)
        if not (w >= 0.0 and math.isfinite(w)):
            raise ValueError(f"block weight must be nonnegative, got {w}")
        variants.append(_discrete_instance(w, normalize_atoms(pmf)))
    w0, pmf0 = initial
    w0 = float(w0)
    if not w0 > 0.0:
        raise ValueError(f"initial block weight must be positive, got {w0}")
    initial_inst = _discrete_instance(w0, normalize_atoms(pmf0))
    pmf_cfg = lambda inst: [[float(d), float(q)] for d, q in inst.exact_pmf]
    return _catalog_family(
        kind="custom_discrete",
        descriptor={
            "kind": "custom_discrete",
            "blocks": [
                {"weight": b.weight, "pmf": pmf_cfg(b), "prob": float(q)}
                for b, q in zip(variants, probs)
            ],
            "initial": {"weight": initial_inst.weight, "pmf": pmf_cfg(initial_inst)},
        },
        variants=variants,
        var_probs=probs,
        initials=[initial_inst],
        ini_probs=[Fraction(1)],
    )


def _catalog_family(kind, descriptor, variants, var_probs, initials, ini_probs) -> BlockFamily:
    def wmean(insts, probs, f):
        return float(sum(q * f(b) for b, q in zip(insts, probs)))

    e_w = wmean(variants, var_probs, lambda b: Fraction(b.weight))
    e_w0 = wmean(initials, ini_probs, lambda b: Fraction(b.weight))
    e_wd = wmean(
        variants, var_probs, lambda b: Fraction(b.weight) * sum(d * p for d, p in b.exact_pmf)
    )
    e_wd2 = wmean(
        variants,
        var_probs,
        lambda b: Fraction(b.weight) * sum(d * d * p for d, p in b.exact_pmf),
    )
    moments = FamilyMoments(e_w=e_w, e_w0=e_w0, e_wd=e_wd, e_wd2=e_wd2)
    compiled, var_cdf, ini_cdf = _catalog_compiled(
        variants, var_probs, initials, ini_probs, e_w, e_w0
    )
    return BlockFamily(
        kind,
        descriptor,
        moments,
        compiled,
        variants=variants,
        var_probs=var_probs,
        var_cdf=var_cdf,
        initials=initials,
        ini_probs=ini_probs,
        ini_cdf=ini_cdf,
    )


# -- config round-trip --------------------------------------------------------

_FAMILY_FIELDS = {
    "k2": {"kind", "alpha", "fitness", "initial_fitness"},
    "geometric_path": {"kind", "p"},
    "uniform_segment": {"kind", "weights"},
    "hooking": {"kind", "chi", "rho", "catalog"},
    "custom_discrete": {"kind", "blocks", "initial"},
}

_OPTIONAL_FIELDS = {"k2": {"initial_fitness"}}


def family_from_config(cfg: dict) -> BlockFamily:
    """Build a family from its tagged descriptor; rejects unknown fields."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ValueError(f"family config must be a dict with 'kind', got {cfg!r}")
    kind = cfg["kind"]
    expected = _FAMILY_FIELDS.get(kind)
    if expected is None:
        raise ValueError(f"unknown family kind {kind!r}")
    extra = set(cfg) - expected
    if extra:
        raise ValueError(f"unknown family field(s) {sorted(extra)} for kind {kind!r}")
    missing = expected - set(cfg) - _OPTIONAL_FIELDS.get(kind, set())
    if missing:
        raise ValueError(f"missing family field(s) {sorted(missing)} for kind {kind!r}")
    if kind == "k2":
        fit0 = cfg.get("initial_fitness")
        return k2_family(
            cfg["alpha"],
            dists.from_config(cfg["fitness"]),
            dists.from_config(fit0) if fit0 is not None else None,
        )
    if kind == "geometric_path":
        return geometric_path_family(cfg["p"])
    if kind == "uniform_segment":
        return uniform_segment_family(dists.from_config(cfg["weights"]))
    if kind == "hooking":
        entries = cfg["catalog"]
        if not isinstance(entries, list) or not entries:
            raise ValueError("hooking catalog must be a nonempty list")
        for e in entries:
            extra = set(e) - {"edges", "hook", "prob"}
            if extra:
                raise ValueError(f"unknown catalog entry field(s) {sorted(extra)}")
        return hooking_family(
            [(e["edges"], e["hook"]) for e in entries],
            [e.get("prob", 1.0 / len(entries)) for e in entries],
            cfg["chi"],
            cfg["rho"],
        )
    entries = cfg["blocks"]
    if not isinstance(entries, list) or not entries:
        raise ValueError("custom blocks must be a nonempty list")
    for e in entries:
        extra = set(e) - {"weight", "pmf", "prob"}
        if extra:
            raise ValueError(f"unknown block entry field(s) {sorted(extra)}")
    ini = cfg["initial"]
    extra = set(ini) - {"weight", "pmf"}
    if extra:
        raise ValueError(f"unknown initial block field(s) {sorted(extra)}")
    return custom_discrete_family(
        [(e["weight"], e["pmf"]) for e in entries],
        [e.get("prob", 1.0 / len(entries)) for e in entries],
        (ini["weight"], ini["pmf"]),
    )
