"""Compiled sampling kernels shared by the growth engine and the samplers.

Everything here is numba-jittable (with a pure-Python fallback, see
``_jit``) and operates on plain scalars and numpy arrays.  Families are
passed as a :class:`CompiledFamily` tuple of arrays so one kernel services
every family kind.  Replication loops draw their randomness from the
counter-based streams in ``_philox``; single-draw helpers taking an explicit
uniform (``dist_quantile``, ``delta_quantile``) are also the single source
of truth for the object-level samplers, which feed them uniforms from a
``numpy.random.Generator`` instead.

Uniform-consumption contract (per draw, in stream order):

* constant distributions consume 0 uniforms, all other scalar draws 1;
* a growth step consumes: 1 (parent pick) + within-block draw + new-block
  draw, in that order;
* bucket/coupled terms consume: new-block draw, 1 (J), then lazily 1 (H,
  coupled only, in the branches that need it) and the within-block draw only
  when some indicator fired.

Layout note: the replication kernels unpack every CompiledFamily field they
touch into locals before entering the loop and route per-draw work through
``_raw`` helpers that take plain arrays.  Extracting an array field from a
NamedTuple inside a compiled loop costs a reference-count round trip per
access, an order of magnitude more than the arithmetic it feeds.  The
CompiledFamily-taking wrappers below exist for the object layer and other
cold paths.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from ._jit import jit, jit_inline
from ._philox import px_init, px_uniform

# scalar distribution codes
DIST_CONST = 0
DIST_EXP = 1
DIST_GEOM = 2
DIST_PMF = 3

# family kind codes
FAM_K2 = 0
FAM_GEOM_PATH = 1
FAM_USEG = 2
FAM_CATALOG = 3


class CompiledFamily(NamedTuple):
    """Array encoding of a block family, consumable by the kernels.

    ``wd_*`` describe the i.i.d. scalar draw (fitness for k2, weight
    otherwise), ``w0_*`` the initial-block variant of it.  ``var_*`` and
    ``ini_*`` hold the discrete catalog (weights, per-variant depth atoms as
    offset-indexed cdf tables) for catalog-backed families; they are empty
    for the parametric kinds.
    """

    kind: int
    alpha: float
    wd_code: int
    wd_a: float
    wd_vals: np.ndarray
    wd_cdf: np.ndarray
    w0_code: int
    w0_a: float
    w0_vals: np.ndarray
    w0_cdf: np.ndarray
    var_cdf: np.ndarray
    var_weight: np.ndarray
    var_doff: np.ndarray
    var_dvals: np.ndarray
    var_dcdf: np.ndarray
    ini_cdf: np.ndarray
    ini_weight: np.ndarray
    ini_doff: np.ndarray
    ini_dvals: np.ndarray
    ini_dcdf: np.ndarray
    e_w: float
    e_w0: float


_LANE0 = np.uint64(0)


@jit_inline
def dist_quantile(code, a, vals, cdf, u):
    """Inverse transform of one scalar distribution at uniform ``u``.

    ``a`` is the precomputed transform constant: the value itself for
    constants, -1/rate for exponentials, 1/log1p(-p) for geometrics.
    """
    if code == DIST_CONST:
        return a
    if code == DIST_EXP:
        return math.log1p(-u) * a
    if code == DIST_GEOM:
        return 1.0 + np.floor(math.log1p(-u) * a)
    return vals[np.searchsorted(cdf, u, side="right")]


@jit_inline
def dist_draw(st, code, a, vals, cdf):
    if code == DIST_CONST:
        return a
    return dist_quantile(code, a, vals, cdf, px_uniform(st))


@jit_inline
def _delta_q_raw(kind, alpha, doff, dvals, dcdf, is_initial, w, aux, u):
    """Within-block depth at uniform ``u`` against preselected atom tables.

    The caller passes the ``ini_*`` tables for the initial block and the
    ``var_*`` tables otherwise; ``is_initial`` still matters for the k2
    kind, whose initial block sits entirely at depth 0.
    """
    if kind == FAM_K2:
        if is_initial:
            return 0.0
        # P(hook) = alpha / (alpha + A) = alpha / w
        return 0.0 if u * w < alpha else 1.0
    if kind == FAM_GEOM_PATH:
        return 1.0 + np.floor(u * w)
    if kind == FAM_USEG:
        return u * w
    o = doff[aux]
    h = doff[aux + 1]
    return dvals[o + np.searchsorted(dcdf[o:h], u, side="right")]


@jit_inline
def _delta_draw_raw(st, kind, alpha, doff, dvals, dcdf, is_initial, w, aux):
    if kind == FAM_K2 and is_initial:
        return 0.0
    return _delta_q_raw(kind, alpha, doff, dvals, dcdf, is_initial, w, aux, px_uniform(st))


@jit_inline
def _block_draw_raw(st, kind, alpha, wd_code, wd_a, wd_vals, wd_cdf, var_cdf, var_weight):
    """New i.i.d. block: returns (weight, catalog variant or -1)."""
    if kind == FAM_CATALOG:
        u = px_uniform(st)
        v = np.searchsorted(var_cdf, u, side="right")
        return var_weight[v], v
    if kind == FAM_K2:
        return alpha + dist_draw(st, wd_code, wd_a, wd_vals, wd_cdf), -1
    return dist_draw(st, wd_code, wd_a, wd_vals, wd_cdf), -1


@jit_inline
def _initial_draw_raw(st, kind, w0_code, w0_a, w0_vals, w0_cdf, ini_cdf, ini_weight):
    """Initial block: returns (weight, catalog variant or -1)."""
    if kind == FAM_CATALOG:
        u = px_uniform(st)
        v = np.searchsorted(ini_cdf, u, side="right")
        return ini_weight[v], v
    return dist_draw(st, w0_code, w0_a, w0_vals, w0_cdf), -1


# -- table-free variants for the parametric fast path ------------------------
#
# A branch that merely mentions an array (the catalog searchsorted fallbacks
# above) pins reference-count updates inside the replication loop that the
# optimizer cannot remove, roughly tripling the cost of a trace step even
# when the branch never runs.  Families whose scalar draws carry no pmf
# table (every parametric kind) therefore get loops built from these
# scalar-only helpers.  They must consume uniforms in exactly the same
# order and evaluate exactly the same float expressions as the general
# helpers so that both paths produce bit-identical streams.


@jit_inline
def _scalar_param(st, code, a):
    if code == DIST_CONST:
        return a
    u = px_uniform(st)
    if code == DIST_EXP:
        return math.log1p(-u) * a
    return 1.0 + np.floor(math.log1p(-u) * a)


@jit_inline
def _block_param(st, kind, alpha, wd_code, wd_a):
    if kind == FAM_K2:
        return alpha + _scalar_param(st, wd_code, wd_a)
    return _scalar_param(st, wd_code, wd_a)


@jit_inline
def _delta_param(st, kind, alpha, is_initial, w):
    if kind == FAM_K2:
        if is_initial:
            return 0.0
        u = px_uniform(st)
        return 0.0 if u * w < alpha else 1.0
    u = px_uniform(st)
    if kind == FAM_GEOM_PATH:
        return 1.0 + np.floor(u * w)
    return u * w


# -- CompiledFamily-taking wrappers (object layer and other cold paths) ------


@jit
def delta_quantile(cf, is_initial, w, aux, u):
    """Within-block depth of a realized block at uniform ``u``.

    ``w`` is the block's weight and ``aux`` its catalog variant (-1 for
    parametric kinds).  Only callable for blocks that can be latched into
    (w > 0), except the k2 initial block whose depth is identically 0.
    """
    if is_initial:
        return _delta_q_raw(
            cf.kind, cf.alpha, cf.ini_doff, cf.ini_dvals, cf.ini_dcdf, True, w, aux, u
        )
    return _delta_q_raw(
        cf.kind, cf.alpha, cf.var_doff, cf.var_dvals, cf.var_dcdf, False, w, aux, u
    )


@jit
def draw_delta(cf, st, is_initial, w, aux):
    if cf.kind == FAM_K2 and is_initial:
        return 0.0
    return delta_quantile(cf, is_initial, w, aux, px_uniform(st))


@jit
def draw_block(cf, st):
    """New i.i.d. block: returns (weight, catalog variant or -1)."""
    return _block_draw_raw(
        st, cf.kind, cf.alpha, cf.wd_code, cf.wd_a, cf.wd_vals, cf.wd_cdf,
        cf.var_cdf, cf.var_weight,
    )


@jit
def draw_initial(cf, st):
    """Initial block: returns (weight, catalog variant or -1)."""
    return _initial_draw_raw(
        st, cf.kind, cf.w0_code, cf.w0_a, cf.w0_vals, cf.w0_cdf,
        cf.ini_cdf, cf.ini_weight,
    )


# ---------------------------------------------------------------------------
# Fenwick (binary indexed) tree over per-block weights, 1-indexed internally.
# ``cap`` must be a power of two >= the number of slots; ``tree`` has cap+1
# entries with tree[0] unused.


@jit_inline
def fenwick_add(tree, cap, i, delta):
    j = i + 1
    while j <= cap:
        tree[j] += delta
        j += j & (-j)


@jit_inline
def fenwick_prefix(tree, i):
    """Sum of the first ``i`` weights (exclusive end)."""
    acc = 0.0
    j = i
    while j > 0:
        acc += tree[j]
        j -= j & (-j)
    return acc


@jit_inline
def fenwick_search(tree, cap, t):
    """Smallest index k with w[0] + ... + w[k] > t; cap when t >= total."""
    idx = 0
    mask = cap
    while mask > 0:
        nxt = idx + mask
        if nxt <= cap and tree[nxt] <= t:
            t -= tree[nxt]
            idx = nxt
        mask >>= 1
    return idx


@jit
def fenwick_build(tree, cap, w, m):
    for j in range(cap + 1):
        tree[j] = 0.0
    for i in range(m):
        fenwick_add(tree, cap, i, w[i])


@jit_inline
def pick_parent(tree, cap, w, m, total, u):
    """Index k < m with probability w[k]/total; guards the t >= total edge.

    Zero-weight blocks are never the smallest strict exceeder, so they are
    unreachable except through the float edge, which the walk-back handles
    (w[0] > 0 guarantees termination).
    """
    k = fenwick_search(tree, cap, u * total)
    if k >= m:
        k = m - 1
    while k > 0 and w[k] <= 0.0:
        k -= 1
    return k


def fenwick_capacity(slots: int) -> int:
    """Smallest power of two >= slots."""
    cap = 1
    while cap < slots:
        cap <<= 1
    return cap


# ---------------------------------------------------------------------------
# Replication kernels.  Each replication r of a run seeded with s draws from
# the dedicated (s, r) stream, so results are independent of how the [lo, hi)
# ranges are scheduled across threads.


@jit
def run_final(cf, n, st, w, hook, aux, tree, cap):
    """One growth run to n attachments; returns the n'th insertion depth.

    Scratch arrays w/hook/aux need n+1 slots; tree needs cap+1 with
    cap = fenwick_capacity(n+1).  Compensated summation keeps the running
    total weight accurate over long runs.
    """
    kind = cf.kind
    alpha = cf.alpha
    wd_code = cf.wd_code
    wd_a = cf.wd_a
    wd_vals = cf.wd_vals
    wd_cdf = cf.wd_cdf
    var_cdf = cf.var_cdf
    var_weight = cf.var_weight
    var_doff = cf.var_doff
    var_dvals = cf.var_dvals
    var_dcdf = cf.var_dcdf
    ini_doff = cf.ini_doff
    ini_dvals = cf.ini_dvals
    ini_dcdf = cf.ini_dcdf

    for j in range(cap + 1):
        tree[j] = 0.0
    w0, a0 = _initial_draw_raw(
        st, kind, cf.w0_code, cf.w0_a, cf.w0_vals, cf.w0_cdf, cf.ini_cdf, cf.ini_weight
    )
    w[0] = w0
    hook[0] = 0.0
    aux[0] = a0
    fenwick_add(tree, cap, 0, w0)
    total = w0
    comp = 0.0
    depth = 0.0
    for m in range(1, n + 1):
        u = px_uniform(st)
        k = pick_parent(tree, cap, w, m, total, u)
        if k == 0:
            delta = _delta_draw_raw(
                st, kind, alpha, ini_doff, ini_dvals, ini_dcdf, True, w[k], aux[k]
            )
        else:
            delta = _delta_draw_raw(
                st, kind, alpha, var_doff, var_dvals, var_dcdf, False, w[k], aux[k]
            )
        depth = hook[k] + delta
        wm, am = _block_draw_raw(
            st, kind, alpha, wd_code, wd_a, wd_vals, wd_cdf, var_cdf, var_weight
        )
        w[m] = wm
        hook[m] = depth
        aux[m] = am
        fenwick_add(tree, cap, m, wm)
        y = wm - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return depth


@jit
def mc_direct(cf, n, seed, rep_lo, rep_hi, out, w, hook, aux, tree, cap):
    st = np.empty(11, dtype=np.uint64)
    for r in range(rep_lo, rep_hi):
        px_init(st, seed, np.uint64(r), _LANE0)
        out[r] = run_final(cf, n, st, w, hook, aux, tree, cap)


@jit
def mc_bucket(cf, n, seed, rep_lo, rep_hi, out):
    """Bucket-sum depth: Y_0 + sum of J_k * delta'_k over k = 1..n-1.

    J_k is Bernoulli(W_k/S_k) given the freshly drawn weights; the k = 0
    indicator is identically 1.  Streams one trace per replication without
    materializing it.
    """
    kind = cf.kind
    alpha = cf.alpha
    wd_code = cf.wd_code
    wd_a = cf.wd_a
    w0_code = cf.w0_code
    w0_a = cf.w0_a

    st = np.empty(11, dtype=np.uint64)
    if kind != FAM_CATALOG and wd_code != DIST_PMF and w0_code != DIST_PMF:
        for r in range(rep_lo, rep_hi):
            px_init(st, seed, np.uint64(r), _LANE0)
            w0 = _scalar_param(st, w0_code, w0_a)
            total = w0
            comp = 0.0
            acc = _delta_param(st, kind, alpha, True, w0)
            for k in range(1, n):
                wk = _block_param(st, kind, alpha, wd_code, wd_a)
                y = wk - comp
                t = total + y
                comp = (t - total) - y
                total = t
                u = px_uniform(st)
                if u * total < wk:
                    acc += _delta_param(st, kind, alpha, False, wk)
            out[r] = acc
        return

    wd_vals = cf.wd_vals
    wd_cdf = cf.wd_cdf
    w0_vals = cf.w0_vals
    w0_cdf = cf.w0_cdf
    var_cdf = cf.var_cdf
    var_weight = cf.var_weight
    var_doff = cf.var_doff
    var_dvals = cf.var_dvals
    var_dcdf = cf.var_dcdf
    ini_cdf = cf.ini_cdf
    ini_weight = cf.ini_weight
    ini_doff = cf.ini_doff
    ini_dvals = cf.ini_dvals
    ini_dcdf = cf.ini_dcdf

    for r in range(rep_lo, rep_hi):
        px_init(st, seed, np.uint64(r), _LANE0)
        w0, a0 = _initial_draw_raw(
            st, kind, w0_code, w0_a, w0_vals, w0_cdf, ini_cdf, ini_weight
        )
        total = w0
        comp = 0.0
        acc = _delta_draw_raw(
            st, kind, alpha, ini_doff, ini_dvals, ini_dcdf, True, w0, a0
        )
        for k in range(1, n):
            wk, ak = _block_draw_raw(
                st, kind, alpha, wd_code, wd_a, wd_vals, wd_cdf, var_cdf, var_weight
            )
            y = wk - comp
            t = total + y
            comp = (t - total) - y
            total = t
            u = px_uniform(st)
            if u * total < wk:
                acc += _delta_draw_raw(
                    st, kind, alpha, var_doff, var_dvals, var_dcdf, False, wk, ak
                )
        out[r] = acc


@jit
def mc_independent(cf, n, seed, rep_lo, rep_hi, out):
    """Independent-approximation depth: sum over k = 1..n-1 of I_k * delta'_k.

    I_k is Bernoulli(W_k/es(k)) when W_k <= es(k) and 0 otherwise, with
    es(k) = k*E[W] + E[W_0]; fully independent across k, no partial sums
    involved.
    """
    kind = cf.kind
    alpha = cf.alpha
    wd_code = cf.wd_code
    wd_a = cf.wd_a
    e_w = cf.e_w
    e_w0 = cf.e_w0

    st = np.empty(11, dtype=np.uint64)
    if kind != FAM_CATALOG and wd_code != DIST_PMF:
        for r in range(rep_lo, rep_hi):
            px_init(st, seed, np.uint64(r), _LANE0)
            acc = 0.0
            for k in range(1, n):
                wk = _block_param(st, kind, alpha, wd_code, wd_a)
                es = k * e_w + e_w0
                u = px_uniform(st)
                if wk <= es and u * es < wk:
                    acc += _delta_param(st, kind, alpha, False, wk)
            out[r] = acc
        return

    wd_vals = cf.wd_vals
    wd_cdf = cf.wd_cdf
    var_cdf = cf.var_cdf
    var_weight = cf.var_weight
    var_doff = cf.var_doff
    var_dvals = cf.var_dvals
    var_dcdf = cf.var_dcdf

    for r in range(rep_lo, rep_hi):
        px_init(st, seed, np.uint64(r), _LANE0)
        acc = 0.0
        for k in range(1, n):
            wk, ak = _block_draw_raw(
                st, kind, alpha, wd_code, wd_a, wd_vals, wd_cdf, var_cdf, var_weight
            )
            es = k * e_w + e_w0
            u = px_uniform(st)
            if wk <= es and u * es < wk:
                acc += _delta_draw_raw(
                    st, kind, alpha, var_doff, var_dvals, var_dcdf, False, wk, ak
                )
        out[r] = acc


@jit
def mc_coupled(cf, n, seed, rep_lo, rep_hi, y_out, x_out):
    """Coupled (bucket, independent) pair sharing one trace and one delta'.

    Per k: J ~ Be(W_k/S_k); then I is built so its marginal is exactly
    Be(W_k/es(k)) on {W_k <= es(k)}:

    * W_k > es(k): I = 0;
    * es(k) >= S_k: I = H*J with H ~ Be(S_k/es(k)) independent of J;
    * es(k) < S_k: I = max(J, H) with H ~ Be(W_k(S_k-es)/(es(S_k-W_k))).

    H is only drawn in the branches where it can still change I.  The y sum
    includes the k = 0 term, the x sum starts at k = 1.
    """
    kind = cf.kind
    alpha = cf.alpha
    wd_code = cf.wd_code
    wd_a = cf.wd_a
    w0_code = cf.w0_code
    w0_a = cf.w0_a
    e_w = cf.e_w
    e_w0 = cf.e_w0

    st = np.empty(11, dtype=np.uint64)
    if kind != FAM_CATALOG and wd_code != DIST_PMF and w0_code != DIST_PMF:
        for r in range(rep_lo, rep_hi):
            px_init(st, seed, np.uint64(r), _LANE0)
            w0 = _scalar_param(st, w0_code, w0_a)
            total = w0
            comp = 0.0
            y_acc = _delta_param(st, kind, alpha, True, w0)
            x_acc = 0.0
            for k in range(1, n):
                wk = _block_param(st, kind, alpha, wd_code, wd_a)
                y = wk - comp
                t = total + y
                comp = (t - total) - y
                total = t
                es = k * e_w + e_w0
                u = px_uniform(st)
                j = u * total < wk
                if wk > es:
                    i = False
                elif es >= total:
                    if j:
                        uh = px_uniform(st)
                        i = uh * es < total
                    else:
                        i = False
                else:
                    if j:
                        i = True
                    else:
                        # P(H=1) = wk (sk - esk) / (esk (sk - wk))
                        uh = px_uniform(st)
                        i = uh * (es * (total - wk)) < wk * (total - es)
                if j or i:
                    d = _delta_param(st, kind, alpha, False, wk)
                    if j:
                        y_acc += d
                    if i:
                        x_acc += d
            y_out[r] = y_acc
            x_out[r] = x_acc
        return

    wd_vals = cf.wd_vals
    wd_cdf = cf.wd_cdf
    w0_vals = cf.w0_vals
    w0_cdf = cf.w0_cdf
    var_cdf = cf.var_cdf
    var_weight = cf.var_weight
    var_doff = cf.var_doff
    var_dvals = cf.var_dvals
    var_dcdf = cf.var_dcdf
    ini_cdf = cf.ini_cdf
    ini_weight = cf.ini_weight
    ini_doff = cf.ini_doff
    ini_dvals = cf.ini_dvals
    ini_dcdf = cf.ini_dcdf

    for r in range(rep_lo, rep_hi):
        px_init(st, seed, np.uint64(r), _LANE0)
        w0, a0 = _initial_draw_raw(
            st, kind, w0_code, w0_a, w0_vals, w0_cdf, ini_cdf, ini_weight
        )
        total = w0
        comp = 0.0
        y_acc = _delta_draw_raw(
            st, kind, alpha, ini_doff, ini_dvals, ini_dcdf, True, w0, a0
        )
        x_acc = 0.0
        for k in range(1, n):
            wk, ak = _block_draw_raw(
                st, kind, alpha, wd_code, wd_a, wd_vals, wd_cdf, var_cdf, var_weight
            )
            y = wk - comp
            t = total + y
            comp = (t - total) - y
            total = t
            es = k * e_w + e_w0
            u = px_uniform(st)
            j = u * total < wk
            if wk > es:
                i = False
            elif es >= total:
                if j:
                    uh = px_uniform(st)
                    i = uh * es < total
                else:
                    i = False
            else:
                if j:
                    i = True
                else:
                    # P(H=1) = wk (sk - esk) / (esk (sk - wk))
                    uh = px_uniform(st)
                    i = uh * (es * (total - wk)) < wk * (total - es)
            if j or i:
                d = _delta_draw_raw(
                    st, kind, alpha, var_doff, var_dvals, var_dcdf, False, wk, ak
                )
                if j:
                    y_acc += d
                if i:
                    x_acc += d
        y_out[r] = y_acc
        x_out[r] = x_acc


@jit
def count_parents(w, m, n_draws, seed, tree, cap, counts):
    """Frequency of each block index over n_draws parent picks from a
    frozen weight vector (counts must be zeroed by the caller)."""
    fenwick_build(tree, cap, w, m)
    total = 0.0
    comp = 0.0
    for i in range(m):
        y = w[i] - comp
        t = total + y
        comp = (t - total) - y
        total = t
    st = np.empty(11, dtype=np.uint64)
    px_init(st, seed, np.uint64(0), _LANE0)
    for _ in range(n_draws):
        u = px_uniform(st)
        counts[pick_parent(tree, cap, w, m, total, u)] += 1
