"""Sequential growth of a random recursive metric space, one block per step.

State is flat arrays plus a Fenwick tree over block weights, so each step is
O(log n): pick the parent block with probability proportional to weight,
latch at a point drawn inside it, and attach a fresh block whose hook sits
at the resulting depth.  The depth of step n is the distance from the hook
of block n back to the origin.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .blocks import BlockFamily, BlockInstance

_INITIAL_CAPACITY = 16


@dataclass(frozen=True)
class DepthRecord:
    """One growth step: block n attached at `depth`, inside `parent_block`."""

    n: int
    depth: float
    parent_block: int
    block_weight: float
    total_weight: float


@dataclass
class GrowthState:
    """Mutable state of a growing space with blocks 0..n-1 attached."""

    family: BlockFamily
    n: int
    weights: np.ndarray
    hooks: np.ndarray
    blocks: list
    tree: np.ndarray
    cap: int
    total: float
    comp: float
    debug: bool = False
    parents: Optional[list] = None
    deltas: Optional[list] = None

    @property
    def total_weight(self) -> float:
        return self.total

    def block(self, k: int) -> BlockInstance:
        if not 0 <= k < self.n:
            raise IndexError(f"block index {k} out of range [0, {self.n})")
        return self.blocks[k]

    def hook_depth(self, k: int) -> float:
        if not 0 <= k < self.n:
            raise IndexError(f"block index {k} out of range [0, {self.n})")
        return float(self.hooks[k])

    def ancestor_chain(self, k: int) -> list:
        """Parent indices from block k back to block 0 (debug mode only)."""
        if not self.debug:
            raise ValueError("ancestor chains are tracked only in debug mode")
        chain = [k]
        while chain[-1] != 0:
            chain.append(self.parents[chain[-1]])
        return chain

    def _ensure_capacity(self, m: int):
        if m < len(self.weights):
            return
        new_len = max(2 * len(self.weights), m + 1)
        for name in ("weights", "hooks"):
            old = getattr(self, name)
            arr = np.zeros(new_len, dtype=np.float64)
            arr[: len(old)] = old
            setattr(self, name, arr)
        new_cap = _kernels.fenwick_capacity(new_len)
        if new_cap != self.cap:
            tree = np.zeros(new_cap + 1, dtype=np.float64)
            _kernels.fenwick_build(tree, new_cap, self.weights, self.n)
            self.tree = tree
            self.cap = new_cap


def init(family: BlockFamily, rng, debug: bool = False) -> GrowthState:
    """Attach block 0.  Fails if its sampled weight is not positive."""
    first = family.sample_initial(rng)
    w0 = float(first.weight)
    if not w0 > 0:
        raise ValueError(f"initial block weight must be positive, got {w0}")
    cap = _kernels.fenwick_capacity(_INITIAL_CAPACITY)
    weights = np.zeros(_INITIAL_CAPACITY, dtype=np.float64)
    hooks = np.zeros(_INITIAL_CAPACITY, dtype=np.float64)
    weights[0] = w0
    tree = np.zeros(cap + 1, dtype=np.float64)
    _kernels.fenwick_add(tree, cap, 0, w0)
    state = GrowthState(
        family=family,
        n=1,
        weights=weights,
        hooks=hooks,
        blocks=[first],
        tree=tree,
        cap=cap,
        total=w0,
        comp=0.0,
        debug=debug,
        parents=[-1] if debug else None,
        deltas=[0.0] if debug else None,
    )
    return state


def grow_step(state: GrowthState, rng) -> DepthRecord:
    """Attach block n: weight-proportional parent, within-block latch,
    fresh block hooked at the latch depth.

    Uniforms are consumed in a fixed order (parent pick, within-block draw,
    new-block draw) so runs are reproducible for a given generator state.
    """
    m = state.n
    u = rng.random()
    k = int(
        _kernels.pick_parent(state.tree, state.cap, state.weights, m, state.total, u)
    )
    delta = state.blocks[k].depth_sampler(rng)
    depth = float(state.hooks[k]) + delta
    new = state.family.sample_block(rng)
    wn = float(new.weight)

    state._ensure_capacity(m)
    state.weights[m] = wn
    state.hooks[m] = depth
    state.blocks.append(new)
    _kernels.fenwick_add(state.tree, state.cap, m, wn)
    # compensated sum; attachment order must not leak into the total
    y = wn - state.comp
    t = state.total + y
    state.comp = (t - state.total) - y
    state.total = t
    state.n = m + 1
    if state.debug:
        state.parents.append(k)
        state.deltas.append(delta)
    return DepthRecord(
        n=m,
        depth=depth,
        parent_block=k,
        block_weight=wn,
        total_weight=state.total,
    )


def run_depth_stream(
    family: BlockFamily, n: int, rng, debug: bool = False
) -> tuple[list, GrowthState]:
    """Grow to n attachments, returning every DepthRecord and the final state."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    state = init(family, rng, debug=debug)
    records = [grow_step(state, rng) for _ in range(n)]
    return records, state


def final_depth(family: BlockFamily, n: int, rng) -> float:
    """Depth of the n'th insertion only."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    state = init(family, rng)
    depth = 0.0
    for _ in range(n):
        depth = grow_step(state, rng).depth
    return depth


def records_to_csv(records: Sequence[DepthRecord]) -> str:
    """CSV rows for a depth stream; floats keep 17 significant digits."""
    out = io.StringIO()
    out.write("n,depth,parent_block,block_weight,total_weight\n")
    for r in records:
        out.write(
            f"{r.n},{r.depth:.17g},{r.parent_block},"
            f"{r.block_weight:.17g},{r.total_weight:.17g}\n"
        )
    return out.getvalue()


def chain_depth_identity(state: GrowthState, k: int) -> tuple[float, float]:
    """(hook depth of block k, sum of within-block draws along its ancestor
    chain).  Equal by construction; exposed for debug-mode verification."""
    chain = state.ancestor_chain(k)
    total = sum(state.deltas[j] for j in chain if j != 0)
    return float(state.hooks[k]), total
