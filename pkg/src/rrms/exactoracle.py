"""Ground-truth depth laws for tiny instances, by exhaustive enumeration.

Every growth history of a fixed block sequence is walked depth-first with
exact rational probabilities, producing the exact marginal law of the n'th
insertion depth.  This is deliberately brute force (the history tree has
(n-1)! * prod(atoms) branches) and capped at small n; its only job is to be
unarguably correct so the engine and the bucket-sum construction can be
tested against it.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

DEFAULT_ENUMERATION_CAP = 6

MASS_TOL = 1e-12


def _is_exact(value) -> bool:
    return isinstance(value, (int, Fraction))


@dataclass(frozen=True)
class DepthPmf:
    """Finite depth law: sorted distinct depths with their probabilities.

    Depths and probabilities are exact (int/Fraction) when produced by the
    oracles; float entries are accepted for laws that only exist numerically.
    """

    entries: tuple

    def __post_init__(self):
        entries = tuple((d, p) for d, p in self.entries)
        depths = [d for d, _ in entries]
        if not entries:
            raise ValueError("a depth pmf needs at least one atom")
        if any(d < 0 for d in depths):
            raise ValueError("depths must be nonnegative")
        if sorted(depths) != depths or len(set(depths)) != len(depths):
            raise ValueError("depths must be distinct and sorted")
        if any(p < 0 for _, p in entries):
            raise ValueError("probabilities must be nonnegative")
        if abs(float(self.mass()) - 1.0) > MASS_TOL:
            raise ValueError(f"probabilities sum to {float(self.mass())!r}, not 1")
        object.__setattr__(self, "entries", entries)

    def mass(self):
        return sum(p for _, p in self.entries)

    def mean(self):
        return sum(d * p for d, p in self.entries)

    def prob_of(self, depth):
        for d, p in self.entries:
            if d == depth:
                return p
        return Fraction(0)

    def tv_distance(self, other: "DepthPmf"):
        """Total variation distance; exact when both pmfs are exact."""
        support = {d for d, _ in self.entries} | {d for d, _ in other.entries}
        gap = sum(abs(self.prob_of(d) - other.prob_of(d)) for d in support)
        return gap / 2

    def as_floats(self) -> tuple[np.ndarray, np.ndarray]:
        depths = np.array([float(d) for d, _ in self.entries])
        probs = np.array([float(p) for _, p in self.entries])
        return depths, probs

    def to_csv(self) -> str:
        """Rows of depth,prob with exact values kept as p/q rationals."""
        out = io.StringIO()
        out.write("depth,prob\n")
        for d, p in self.entries:
            out.write(f"{_format_exact(d)},{_format_exact(p)}\n")
        return out.getvalue()

    @staticmethod
    def from_csv(text: str) -> "DepthPmf":
        lines = [ln for ln in text.strip().splitlines() if ln]
        if not lines or lines[0] != "depth,prob":
            raise ValueError("expected a depth,prob header")
        entries = []
        for ln in lines[1:]:
            d, _, p = ln.partition(",")
            entries.append((_parse_exact(d), _parse_exact(p)))
        return DepthPmf(tuple(entries))


def _format_exact(value) -> str:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def _parse_exact(text: str):
    if "/" in text:
        return Fraction(text)
    if "." in text or "e" in text or "E" in text:
        return float(text)
    return int(text)


def _normalized(d):
    return int(d) if isinstance(d, Fraction) and d.denominator == 1 else d


def exact_depth_pmf(
    blocks, n: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> DepthPmf:
    """Exact law of the n'th insertion depth for fixed blocks B_0..B_{n-1}.

    Enumerates every history: at step m, each existing block k is the parent
    with probability W_k/S_{m-1}, each of its depth atoms is the latch, and
    the new block's hook lands at the resulting depth.  All arithmetic is in
    rationals (floats enter exactly as binary rationals).
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if n > cap:
        raise ValueError(f"n={n} exceeds the enumeration cap {cap}")
    if len(blocks) < n:
        raise ValueError(f"need {n} blocks, got {len(blocks)}")
    blocks = list(blocks[:n])
    w = [Fraction(float(b.weight)) for b in blocks]
    if w[0] <= 0:
        raise ValueError("the initial block must have positive weight")
    atoms = []
    for k, b in enumerate(blocks):
        if w[k] == 0:
            atoms.append(())  # never a parent
            continue
        if b.exact_pmf is None:
            raise ValueError(f"block {k} has no finite discrete depth law")
        atoms.append(tuple(b.exact_pmf))
    s = [w[0]]
    for k in range(1, n):
        s.append(s[-1] + w[k])

    acc: dict = {}
    hooks = [0]

    def walk(m: int, prob: Fraction):
        total = s[m - 1]
        for k in range(m):
            if w[k] == 0:
                continue
            p_parent = prob * w[k] / total
            for d, q in atoms[k]:
                depth = hooks[k] + d
                p_branch = p_parent * q
                if m == n:
                    acc[depth] = acc.get(depth, Fraction(0)) + p_branch
                else:
                    hooks.append(depth)
                    walk(m + 1, p_branch)
                    hooks.pop()

    walk(1, Fraction(1))
    return DepthPmf(tuple(sorted((_normalized(d), p) for d, p in acc.items())))


def exact_mean_bucket(trace):
    """Exact finite-n mean of the depth given the trace's blocks:
    E[delta'_0] + sum over k >= 1 of (W_k/S_k) E[delta'_k].

    Returns a Fraction when every ingredient is exact, else a float.
    """
    refs = trace.block_refs
    means = []
    for k, b in enumerate(refs):
        if k > 0 and b.weight == 0.0:
            means.append(0)
            continue
        if b.mean_depth is None:
            raise ValueError(f"block {k} has no mean_depth")
        means.append(b.mean_depth)
    exact = all(_is_exact(m) for m in means)
    if exact:
        w = [Fraction(float(x)) for x in trace.w]
        s = list(w)
        for k in range(1, len(s)):
            s[k] = s[k - 1] + w[k]
        total = Fraction(means[0])
        for k in range(1, trace.n):
            if w[k] != 0:
                total += w[k] / s[k] * means[k]
        return total
    w = np.asarray(trace.w, dtype=np.float64)
    s = np.cumsum(w)
    total = float(means[0])
    for k in range(1, trace.n):
        if w[k] != 0.0:
            total += w[k] / s[k] * float(means[k])
    return total


def pmf_mean_matches_bucket(pmf: DepthPmf, trace, tol: float = MASS_TOL) -> bool:
    """Consistency check: mean of the enumerated law vs the bucket mean."""
    return abs(float(pmf.mean()) - float(exact_mean_bucket(trace))) <= tol
