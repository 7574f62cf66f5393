"""Block families: moments, exact structure, catalog geometry, config I/O."""

from fractions import Fraction

import numpy as np
import pytest

from rrms.blocks import (
    BlockInstance,
    custom_discrete_family,
    family_from_config,
    geometric_path_family,
    hooking_family,
    k2_family,
    normalize_atoms,
    uniform_segment_family,
)
from rrms.dists import constant, exponential, finite_pmf, geometric

from conftest import family_zoo, path2_hooking_family, rrt_family, two_block_family


# -- moments ------------------------------------------------------------------
# e_wd = E[W E[d'|W]] and e_wd2 = E[W E[d'^2|W]], recomputed here from the
# conditional depth laws rather than the closed forms the module uses.


def test_geometric_path_moments():
    m = geometric_path_family(0.5).moments
    # W ~ Geom(1/2): E W = 2, E W^2 = 6, E W^3 = 26; d'|W uniform on {1..W}
    assert m.e_w == 2.0
    assert m.e_w0 == 2.0
    assert m.e_wd == pytest.approx((6 + 2) / 2)  # E[W (W+1)/2]
    assert m.e_wd2 == pytest.approx((2 * 26 + 3 * 6 + 2) / 6)  # E[W (W+1)(2W+1)/6]


def test_uniform_segment_moments():
    m = uniform_segment_family(exponential(1.0)).moments
    assert m.e_w == 1.0
    assert m.e_w0 == 1.0
    assert m.e_wd == pytest.approx(2.0 / 2.0)  # E[W^2]/2
    assert m.e_wd2 == pytest.approx(6.0 / 3.0)  # E[W^3]/3


def test_k2_moments():
    m = k2_family(0.5, geometric(0.3)).moments
    assert m.e_w == pytest.approx(0.5 + 1 / 0.3)
    assert m.e_w0 == pytest.approx(1 / 0.3)  # geometric is already positive
    # the latch leaves the hook with probability A/(alpha+A), one step down
    assert m.e_wd == pytest.approx(1 / 0.3)
    assert m.e_wd2 == pytest.approx(1 / 0.3)


def test_rrt_moments():
    m = rrt_family().moments
    assert (m.e_w, m.e_w0, m.e_wd, m.e_wd2) == (1.0, 1.0, 1.0, 1.0)


def test_hooking_path2_moments():
    # path 0-1-2 hooked at 0, chi=0, rho=1: attachment blocks lose the hook's
    # rho mass, so masses are (0,1,1); the initial block keeps (1,1,1)
    m = path2_hooking_family().moments
    assert m.e_w == 2.0
    assert m.e_w0 == 3.0
    assert m.e_wd == pytest.approx(2 * (1 * 0.5 + 2 * 0.5))
    assert m.e_wd2 == pytest.approx(2 * (1 * 0.5 + 4 * 0.5))


def test_two_block_moments():
    m = two_block_family().moments
    assert m.e_w == 1.5
    assert m.e_w0 == 1.0
    assert m.e_wd == pytest.approx(0.5 * 2 * 0.5 + 0.5 * 1 * 2)
    assert m.e_wd2 == pytest.approx(0.5 * 2 * 0.5 + 0.5 * 1 * 4)


def test_initial_weight_law_conditions_on_positivity():
    fam = uniform_segment_family(finite_pmf([0.0, 2.0], [0.5, 0.5]))
    assert fam.moments.e_w == 1.0
    assert fam.moments.e_w0 == 2.0
    rng = np.random.default_rng(0)
    assert all(fam.sample_initial(rng).weight == 2.0 for _ in range(20))


# -- sampling and instances ---------------------------------------------------


def test_sample_block_laws(rng):
    fam = two_block_family()
    weights = [fam.sample_block(rng).weight for _ in range(2000)]
    frac2 = sum(1 for w in weights if w == 2.0) / len(weights)
    assert set(weights) == {1.0, 2.0}
    assert abs(frac2 - 0.5) < 0.05


def test_k2_block_depth_sampler(rng):
    fam = k2_family(1.0, constant(1.0))
    b = fam.sample_block(rng)
    assert b.weight == 2.0
    draws = {b.depth_sampler(rng) for _ in range(200)}
    assert draws == {0.0, 1.0}
    assert b.exact_pmf == [(0, Fraction(1, 2)), (1, Fraction(1, 2))]


def test_geometric_path_block_depths(rng):
    fam = geometric_path_family(0.5)
    b = fam.instance_for(3.0, -1, False)
    assert b.exact_pmf == [(j, Fraction(1, 3)) for j in (1, 2, 3)]
    assert b.mean_depth == Fraction(2)
    xs = {b.depth_sampler(rng) for _ in range(300)}
    assert xs == {1.0, 2.0, 3.0}


def test_uniform_segment_depth_range(rng):
    fam = uniform_segment_family(exponential(2.0))
    b = fam.instance_for(1.5, -1, False)
    xs = np.array([b.depth_sampler(rng) for _ in range(500)])
    assert xs.min() >= 0.0
    assert xs.max() <= 1.5
    assert b.mean_depth == pytest.approx(0.75)


def test_instance_for_catalog_variants():
    fam = two_block_family()
    assert fam.instance_for(2.0, 0, False) is fam.variants[0]
    assert fam.instance_for(1.0, 1, False) is fam.variants[1]
    assert fam.instance_for(1.0, 0, True) is fam.initials[0]


def test_zero_weight_blocks(rng):
    # catalog variants may carry zero weight; they are simply never picked
    fam = custom_discrete_family(
        [(0.0, [(1.0, 1.0)]), (1.0, [(1.0, 1.0)])],
        [0.5, 0.5],
        (1.0, [(0.0, 1.0)]),
    )
    assert fam.instance_for(0.0, 0, False).weight == 0.0
    # a zero-length segment has no depth law at all
    seg = uniform_segment_family(finite_pmf([0.0, 1.0], [0.5, 0.5]))
    dead = seg.instance_for(0.0, -1, False)
    with pytest.raises(ValueError, match="never latched"):
        dead.depth_sampler(rng)


def test_mean_from_pmf():
    b = BlockInstance(1.0, lambda rng: 0.0, exact_pmf=[(0, Fraction(1, 2)), (3, Fraction(1, 2))])
    assert b.mean_from_pmf() == Fraction(3, 2)
    with pytest.raises(ValueError, match="no exact pmf"):
        BlockInstance(1.0, lambda rng: 0.0).mean_from_pmf()


# -- exact variants -----------------------------------------------------------


def test_exact_variants_rrt():
    initial, variants = rrt_family().exact_variants()
    assert initial.weight == 1.0
    assert initial.exact_pmf == [(0, Fraction(1))]
    assert len(variants) == 1
    assert variants[0].exact_pmf == [(1, Fraction(1))]


def test_exact_variants_catalog():
    initial, variants = two_block_family().exact_variants()
    assert initial.weight == 1.0
    assert [v.weight for v in variants] == [2.0, 1.0]


@pytest.mark.parametrize("build", [
    lambda: geometric_path_family(0.5),
    lambda: uniform_segment_family(exponential(1.0)),
    lambda: k2_family(0.5, geometric(0.3)),
])
def test_exact_variants_rejected_for_random_weights(build):
    with pytest.raises(ValueError, match="exact mode requires"):
        build().exact_variants()


# -- hooking geometry ---------------------------------------------------------


def test_hooking_triangle_degree_measure():
    # triangle, chi=1, rho=0: every vertex has degree 2, the hook keeps its
    # degree mass even as an attachment, so both laws are uniform-ish
    fam = hooking_family([([(0, 1), (1, 2), (2, 0)], 0)], [1.0], 1.0, 0.0)
    v = fam.variants[0]
    assert v.weight == 6.0
    assert v.exact_pmf == [(0, Fraction(1, 3)), (1, Fraction(2, 3))]
    i = fam.initials[0]
    assert i.weight == 6.0
    assert i.exact_pmf == v.exact_pmf


def test_hooking_attachment_drops_hook_rho():
    fam = path2_hooking_family()
    assert fam.variants[0].weight == 2.0
    assert fam.initials[0].weight == 3.0
    assert fam.variants[0].exact_pmf == [(1, Fraction(1, 2)), (2, Fraction(1, 2))]
    assert fam.initials[0].exact_pmf == [
        (0, Fraction(1, 3)),
        (1, Fraction(1, 3)),
        (2, Fraction(1, 3)),
    ]


@pytest.mark.parametrize(
    "edges, msg",
    [
        ([], "at least one edge"),
        ([(0, 2)], "labeled 0..V-1"),
        ([(0, 1), (2, 3)], "connected"),
    ],
)
def test_hooking_graph_validation(edges, msg):
    with pytest.raises(ValueError, match=msg):
        hooking_family([(edges, 0)], [1.0], 0.0, 1.0)


@pytest.mark.parametrize(
    "build, msg",
    [
        (lambda: hooking_family([([(0, 1)], 0)], [1.0], -1.0, 1.0), "chi must be"),
        (lambda: hooking_family([([(0, 1)], 0)], [1.0], 0.0, 0.0), "chi \\+ rho"),
        (lambda: hooking_family([([(0, 1)], 0)], [0.5, 0.5], 0.0, 1.0), "must match"),
        (lambda: k2_family(-0.5, constant(1.0)), "alpha must be nonnegative"),
        (lambda: k2_family(1.0, constant(0.0)), "must not be the constant 0"),
        (lambda: k2_family(1.0, constant(-1.0)), "nonnegative"),
        (lambda: geometric_path_family(0.0), "p must lie in"),
        (lambda: uniform_segment_family(constant(0.0)), "positive mean"),
        (
            lambda: uniform_segment_family(finite_pmf([-1.0, 2.0], [0.5, 0.5])),
            "nonnegative",
        ),
        (
            lambda: custom_discrete_family(
                [(-1.0, [(0.0, 1.0)])], [1.0], (1.0, [(0.0, 1.0)])
            ),
            "nonnegative",
        ),
        (
            lambda: custom_discrete_family(
                [(1.0, [(0.0, 1.0)])], [1.0], (0.0, [(0.0, 1.0)])
            ),
            "must be positive",
        ),
    ],
)
def test_family_validation(build, msg):
    with pytest.raises(ValueError, match=msg):
        build()


def test_normalize_atoms_merges_and_sorts():
    atoms = normalize_atoms([(2, 0.25), (0, 0.5), (2.0, 0.25)])
    assert atoms == [(0, Fraction(1, 2)), (2, Fraction(1, 2))]
    with pytest.raises(ValueError, match="sum to"):
        normalize_atoms([(0, 0.4)])
    with pytest.raises(ValueError, match="nonnegative"):
        normalize_atoms([(0, 1.5), (1, -0.5)])
    with pytest.raises(ValueError, match="at least one atom"):
        normalize_atoms([])


# -- config round-trip --------------------------------------------------------


@pytest.mark.parametrize("name", sorted(family_zoo()))
def test_family_config_round_trip(name):
    fam = family_zoo()[name]
    back = family_from_config(fam.to_config())
    assert back.to_config() == fam.to_config()
    assert back.moments == fam.moments
    a, b = back.compiled, fam.compiled
    assert (a.kind, a.alpha, a.wd_code, a.wd_a) == (b.kind, b.alpha, b.wd_code, b.wd_a)
    np.testing.assert_array_equal(a.var_cdf, b.var_cdf)
    np.testing.assert_array_equal(a.var_dvals, b.var_dvals)
    np.testing.assert_array_equal(a.ini_dcdf, b.ini_dcdf)


def test_family_from_config_rejects_bad_input():
    with pytest.raises(ValueError, match="unknown family kind"):
        family_from_config({"kind": "erdos"})
    with pytest.raises(ValueError, match="unknown family field"):
        family_from_config({"kind": "geometric_path", "p": 0.5, "q": 1})
    with pytest.raises(ValueError, match="missing family field"):
        family_from_config({"kind": "uniform_segment"})
    with pytest.raises(ValueError, match="must be a dict"):
        family_from_config("geometric_path")
    with pytest.raises(ValueError, match="unknown catalog entry"):
        family_from_config(
            {
                "kind": "hooking",
                "chi": 0.0,
                "rho": 1.0,
                "catalog": [{"edges": [[0, 1]], "hook": 0, "weight": 2}],
            }
        )


def test_compiled_tables_cover_catalog():
    cf = two_block_family().compiled
    np.testing.assert_array_equal(cf.var_weight, [2.0, 1.0])
    np.testing.assert_array_equal(cf.var_doff, [0, 2, 3])
    np.testing.assert_array_equal(cf.var_dvals, [0.0, 1.0, 2.0])
    assert cf.var_cdf[-1] == 1.0
    assert cf.ini_cdf[-1] == 1.0
    assert cf.e_w == 1.5
    assert cf.e_w0 == 1.0
