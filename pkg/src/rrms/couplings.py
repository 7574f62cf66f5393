"""Alternative constructions of the insertion depth on a frozen weight trace.

The depth of the n'th insertion can be sampled three ways besides running
the growth engine:

* bucket sum: conditionally on the weights, the depth is a sum of
  independent indicator-gated within-block draws, one per existing block,
  with the k'th indicator Bernoulli(W_k/S_k) and the initial one forced on.
* independent approximation: replace each ratio W_k/S_k by W_k/es(k) with
  es(k) = k E[W] + E[W_0], gate on W_k <= es(k), and draw fresh blocks, so
  the summands are fully independent across k.
* coupled pair: sample both on one probability space so the bucket and
  independent indicators agree except on an event of small probability.

These exist to cross-check the engine and to make the law-of-large-numbers
and gap diagnostics cheap to state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import exactoracle
from .blocks import BlockFamily, BlockInstance, FamilyMoments

TRACE_SUM_RTOL = 1e-9


@dataclass
class WeightTrace:
    """Frozen realization of the first n block weights and their partial sums.

    s[k] is the total weight once blocks 0..k are attached; block_refs keeps
    the sampled block objects so within-block laws stay tied to the weights
    that produced them.
    """

    n: int
    w: np.ndarray
    s: np.ndarray
    block_refs: list

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        self.s = np.asarray(self.s, dtype=np.float64)
        if self.n < 1:
            raise ValueError(f"trace length must be at least 1, got {self.n}")
        if self.w.shape != (self.n,) or self.s.shape != (self.n,):
            raise ValueError("weight and partial-sum arrays must have length n")
        if len(self.block_refs) != self.n:
            raise ValueError("need one block reference per weight")
        if not self.w[0] > 0:
            raise ValueError("the initial block weight must be positive")
        if np.any(self.w < 0) or not np.all(np.isfinite(self.w)):
            raise ValueError("weights must be finite and nonnegative")
        expect = np.cumsum(self.w)
        if not np.allclose(self.s, expect, rtol=TRACE_SUM_RTOL, atol=0.0):
            raise ValueError("partial sums are inconsistent with the weights")
        for k, b in enumerate(self.block_refs):
            if float(b.weight) != float(self.w[k]):
                raise ValueError(f"block {k} weight disagrees with the trace")


def trace_from_blocks(blocks: Sequence[BlockInstance]) -> WeightTrace:
    w = np.array([float(b.weight) for b in blocks], dtype=np.float64)
    # compensated running sum, same discipline as the growth engine
    s = np.empty_like(w)
    total = 0.0
    comp = 0.0
    for k, x in enumerate(w):
        y = x - comp
        t = total + y
        comp = (t - total) - y
        total = t
        s[k] = total
    return WeightTrace(n=len(blocks), w=w, s=s, block_refs=list(blocks))


def draw_weight_trace(family: BlockFamily, n: int, rng) -> WeightTrace:
    """Initial block plus n-1 i.i.d. attachment blocks, in draw order."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    blocks = [family.sample_initial(rng)]
    for _ in range(n - 1):
        blocks.append(family.sample_block(rng))
    return trace_from_blocks(blocks)


def cycled_trace(family: BlockFamily, n: int) -> WeightTrace:
    """Deterministic trace cycling the family's finite block variants.

    Block 0 is the (single-atom) initial block; block k >= 1 is variant
    (k-1) mod M.  Only families whose blocks form a finite deterministic
    catalog support this.
    """
    initial, variants = family.exact_variants()
    blocks = [initial]
    for k in range(1, n):
        blocks.append(variants[(k - 1) % len(variants)])
    return trace_from_blocks(blocks)


@dataclass(frozen=True)
class ExpectedWeights:
    """Deterministic weight scale es(k) = k * e_w + e_w0 used in place of S_k."""

    e_w: float
    e_w0: float

    def __post_init__(self):
        if not (self.e_w > 0 and math.isfinite(self.e_w)):
            raise ValueError("e_w must be positive and finite")
        if not (self.e_w0 > 0 and math.isfinite(self.e_w0)):
            raise ValueError("e_w0 must be positive and finite")

    def es(self, k: int) -> float:
        return k * self.e_w + self.e_w0

    @staticmethod
    def from_moments(moments: FamilyMoments) -> "ExpectedWeights":
        return ExpectedWeights(e_w=float(moments.e_w), e_w0=float(moments.e_w0))


def expected_weights_for(family: BlockFamily) -> ExpectedWeights:
    if family.moments is None:
        raise ValueError(
            "family has no closed-form moments; use estimate_expected_weights"
        )
    return ExpectedWeights.from_moments(family.moments)


def estimate_expected_weights(
    family: BlockFamily, rng, draws: int = 10**5
) -> tuple[ExpectedWeights, dict]:
    """Monte Carlo fallback for families without closed-form weight moments.

    The estimate is frozen into the returned object; downstream samplers
    treat es(k) as exact, so the estimation error becomes a small systematic
    bias rather than extra variance.  Metadata records how it was obtained.
    """
    if draws < 2:
        raise ValueError("need at least 2 draws to estimate moments")
    wsum = 0.0
    for _ in range(draws):
        wsum += family.sample_block(rng).weight
    w0sum = 0.0
    for _ in range(draws):
        w0sum += family.sample_initial(rng).weight
    ew = ExpectedWeights(e_w=wsum / draws, e_w0=w0sum / draws)
    meta = {"estimated": True, "draws": draws}
    return ew, meta


def sample_bucket_depth(trace: WeightTrace, rng) -> float:
    """One depth draw from the bucket-sum construction on a frozen trace.

    Draw order per block: the indicator uniform first, then the within-block
    draw only if the indicator fired.  Block 0 always contributes.
    """
    acc = trace.block_refs[0].depth_sampler(rng)
    for k in range(1, trace.n):
        wk = trace.w[k]
        if wk <= 0.0:
            continue
        if rng.random() * trace.s[k] < wk:
            acc += trace.block_refs[k].depth_sampler(rng)
    return acc


def exact_bucket_pmf(trace: WeightTrace, prune: float = 0.0) -> exactoracle.DepthPmf:
    """Exact law of the bucket sum: convolution of the gated block laws.

    All arithmetic is rational; partial sums are recomputed exactly from the
    weights rather than trusted from the float trace.  Entries below `prune`
    are dropped only when the caller opts in (the result then has mass
    slightly under 1).
    """
    w = [Fraction(float(x)) for x in trace.w]
    s = list(w)
    for k in range(1, trace.n):
        s[k] = s[k - 1] + w[k]

    b0 = trace.block_refs[0]
    if b0.exact_pmf is None:
        raise ValueError("block 0 has no finite discrete depth law")
    pmf: dict = {d: Fraction(p) for d, p in b0.exact_pmf}
    for k in range(1, trace.n):
        if w[k] == 0:
            continue
        bk = trace.block_refs[k]
        if bk.exact_pmf is None:
            raise ValueError(f"block {k} has no finite discrete depth law")
        pj = w[k] / s[k]
        mixed = [(0, 1 - pj)] + [(d, pj * q) for d, q in bk.exact_pmf]
        nxt: dict = {}
        for d1, p1 in pmf.items():
            for d2, p2 in mixed:
                key = d1 + d2
                nxt[key] = nxt.get(key, Fraction(0)) + p1 * p2
        pmf = nxt
    entries = sorted(pmf.items())
    if prune > 0.0:
        entries = [(d, p) for d, p in entries if p >= prune]
    return exactoracle.DepthPmf(
        tuple((exactoracle._normalized(d), p) for d, p in entries)
    )


def sample_independent_approx(
    family: BlockFamily, n: int, ew: ExpectedWeights, rng
) -> float:
    """One draw of the fully independent approximation X_n = sum of X_{n,k}.

    For k = 1..n-1: draw a fresh block, gate on its weight not exceeding
    es(k), fire with probability W/es(k), and add a within-block draw when
    it fires.  There is no k = 0 term.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    acc = 0.0
    for k in range(1, n):
        b = family.sample_block(rng)
        wk = b.weight
        if wk <= 0.0:
            continue
        esk = ew.es(k)
        if wk <= esk and rng.random() * esk < wk:
            acc += b.depth_sampler(rng)
    return acc


def sample_coupled_pair(
    trace: WeightTrace, ew: ExpectedWeights, rng
) -> tuple[float, float]:
    """One draw of (bucket sum Y_n, coupled independent sum X_n).

    Both sums reuse the same blocks and the same within-block draws; only
    the indicators differ, and they are coupled so that they agree except
    on an event of probability O(1/k) per term:

    * W_k > es(k): the independent indicator is forced to 0.
    * es(k) >= S_k: I = H * J with H ~ Be(S_k/es(k)) drawn only when J = 1.
    * es(k) < S_k: I = max(J, H) with
      H ~ Be(W_k (S_k - es(k)) / (es(k) (S_k - W_k))) drawn only when J = 0.

    Either way P(I = 1) = W_k/es(k) on {W_k <= es(k)}, exactly the
    independent-approximation law.  The k = 0 term belongs to Y only.
    """
    y = trace.block_refs[0].depth_sampler(rng)
    x = 0.0
    for k in range(1, trace.n):
        wk = trace.w[k]
        if wk <= 0.0:
            continue
        sk = trace.s[k]
        if not sk > wk:
            raise AssertionError(
                "partial sum equal to the block weight; the initial block"
                " should make this impossible"
            )
        esk = ew.es(k)
        j = rng.random() * sk < wk
        if wk > esk:
            i = False
        elif esk >= sk:
            i = j and (rng.random() * esk < sk)
        else:
            if j:
                i = True
            else:
                # P(H=1) = wk (sk - esk) / (esk (sk - wk))
                i = rng.random() * (esk * (sk - wk)) < wk * (sk - esk)
        if j or i:
            d = trace.block_refs[k].depth_sampler(rng)
            if j:
                y += d
            if i:
                x += d
    return y, x


def theoretical_limits(moments: FamilyMoments) -> tuple[float, float]:
    """(mu, sigma2) of the depth clt: depth/log n -> mu and
    (depth - mu log n)/sqrt(sigma2 log n) -> standard normal, with
    mu = E[W delta']/E[W] and sigma2 = E[W delta'^2]/E[W].
    """
    if moments is None:
        raise ValueError("closed-form moments missing for this family")
    mu = float(Fraction(moments.e_wd) / Fraction(moments.e_w))
    sigma2 = float(Fraction(moments.e_wd2) / Fraction(moments.e_w))
    return mu, sigma2


def finite_n_mean_bound(n: int, moments: FamilyMoments) -> float:
    """Upper bound on E[X_n]: sum over k = 1..n-1 of E[W delta']/es(k)."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if moments is None:
        raise ValueError("closed-form moments missing for this family")
    if n == 1:
        return 0.0
    k = np.arange(1, n, dtype=np.float64)
    e_wd = float(moments.e_wd)
    e_w = float(moments.e_w)
    e_w0 = float(moments.e_w0)
    return float(np.sum(e_wd / (k * e_w + e_w0)))
