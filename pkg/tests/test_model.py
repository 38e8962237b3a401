import math

import numpy as np
import pytest

from nlglass.model import (Bond, ModelSpec, build_dyson, build_laws, build_long_range,
                           interpolate_dyson, realization_to_csv, realize,
                           realize_block)


def test_long_range_single_bond():
    laws = build_long_range(ModelSpec(family="long_range", beta=1.0, alpha=2.0, L=2))
    assert len(laws) == 1
    assert laws[0].bond == Bond(1, 2, 0)
    assert laws[0].x == pytest.approx(4.0)


def test_long_range_beta_zero():
    laws = build_long_range(ModelSpec(family="long_range", beta=0.0, alpha=1.5, L=5))
    assert all(law.x == 0.0 for law in laws)


def test_long_range_distant_pair_value():
    laws = build_long_range(ModelSpec(family="long_range", beta=0.5, alpha=1.5, L=3))
    x13 = next(l.x for l in laws if l.bond == Bond(1, 3, 0))
    assert x13 == pytest.approx(4 * 0.25 / 2 ** 1.5, abs=1e-12)
    assert x13 == pytest.approx(0.353553, abs=1e-6)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.5])
def test_long_range_variance_decays_with_distance(alpha):
    laws = build_long_range(ModelSpec(family="long_range", beta=1.0, alpha=alpha, L=10))
    by_dist = {}
    for law in laws:
        by_dist.setdefault(law.bond.j - law.bond.i, law.x)
    dists = sorted(by_dist)
    xs = [by_dist[d] for d in dists]
    assert all(a > b for a, b in zip(xs, xs[1:]))


def test_dyson_one_level():
    laws = build_dyson(ModelSpec(family="dyson", beta=1.0, alpha=2.0, N=1))
    assert len(laws) == 4
    assert all(law.x == pytest.approx(0.25) for law in laws)


def test_dyson_level_two_variance():
    laws = build_dyson(ModelSpec(family="dyson", beta=1.0, alpha=1.25, N=2))
    top = [l for l in laws if l.bond.level == 2]
    assert len(top) == 16
    assert top[0].x == pytest.approx(2 ** 1.5 / 16, abs=1e-9)
    assert top[0].x == pytest.approx(0.176777, abs=1e-6)


def test_dyson_beta_zero():
    laws = build_dyson(ModelSpec(family="dyson", beta=0.0, alpha=1.25, N=3))
    assert all(law.x == 0.0 for law in laws)


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_dyson_level_counts(N):
    laws = build_dyson(ModelSpec(family="dyson", beta=1.0, alpha=1.5, N=N))
    for q in range(1, N + 1):
        per_level = sum(1 for l in laws if l.bond.level == q)
        assert per_level == 2 ** (N - q) * 2 ** (2 * q)


def test_dyson_no_diagonal_toggle():
    spec = ModelSpec(family="dyson", beta=1.0, alpha=1.5, N=2, include_diagonal=False)
    laws = build_dyson(spec)
    assert all(l.bond.i != l.bond.j for l in laws)
    assert len(laws) == 24 - 2 * 4  # level 1: two blocks lose 2 each; level 2 loses 4


def test_variance_overrides_applied():
    spec = ModelSpec(family="dyson", beta=1.0, alpha=1.25, N=2,
                     variance_overrides=(0.3, 0.7))
    laws = build_dyson(spec)
    assert {l.x for l in laws if l.bond.level == 1} == {0.3}
    assert {l.x for l in laws if l.bond.level == 2} == {0.7}


def test_variance_overrides_validation():
    with pytest.raises(ValueError):
        ModelSpec(family="dyson", beta=1.0, alpha=1.25, N=2, variance_overrides=(0.3,))
    with pytest.raises(ValueError):
        ModelSpec(family="dyson", beta=1.0, alpha=1.25, N=2,
                  variance_overrides=(0.3, -0.1))


def test_spec_validation_errors():
    with pytest.raises(ValueError):
        ModelSpec(family="long_range", beta=1.0, alpha=2.0, L=1)
    with pytest.raises(ValueError):
        ModelSpec(family="long_range", beta=1.0, alpha=0.0, L=4)
    with pytest.raises(ValueError):
        ModelSpec(family="long_range", beta=-0.5, alpha=2.0, L=4)
    with pytest.raises(ValueError):
        ModelSpec(family="dyson", beta=1.0, alpha=1.25, N=0)
    with pytest.raises(ValueError):
        ModelSpec(family="nope", beta=1.0)


def test_interpolation_endpoint_matches_plain_model():
    spec = ModelSpec(family="dyson", beta=1.0, alpha=1.25, N=2)
    laws_t1 = interpolate_dyson(spec, 1.0)
    assert [l for l in laws_t1 if l.bond.tag == ""] == build_dyson(spec)
    assert all(l.x == 0.0 for l in laws_t1 if l.bond.tag == "interp")


def test_interpolation_decoupled_endpoint_splits_variance():
    spec = ModelSpec(family="dyson", beta=1.0, alpha=1.25, N=2)
    laws = interpolate_dyson(spec, 0.0)
    x_top = 2 ** 1.5 / 16
    top = [l for l in laws if l.bond.level == 2 and l.bond.tag == ""]
    assert all(l.x == 0.0 for l in top)
    extras = [l for l in laws if l.bond.tag == "interp"]
    assert len(extras) == 8  # two halves, 4 ordered pairs each
    assert all(l.x == pytest.approx(2 * x_top) for l in extras)
    # per ordered pair inside a half, split + sub-level variance reproduces an
    # (N-1)-level model with top parameter 2 x_N + x_{N-1}
    x1 = next(l.x for l in laws if l.bond.level == 1 and l.bond.tag == "")
    assert x1 + 2 * x_top == pytest.approx(0.420448 + 2 * 0.176777, abs=1e-5)


def test_interpolation_midpoint_and_bounds():
    spec = ModelSpec(family="dyson", beta=1.0, alpha=1.25, N=2)
    laws = interpolate_dyson(spec, 0.5)
    top = [l for l in laws if l.bond.level == 2 and l.bond.tag == ""]
    assert top[0].x == pytest.approx(0.0883883, abs=1e-6)
    with pytest.raises(ValueError):
        interpolate_dyson(spec, -0.01)
    with pytest.raises(ValueError):
        interpolate_dyson(spec, 1.01)


def test_interpolation_structure_is_t_independent():
    spec = ModelSpec(family="dyson", beta=1.0, alpha=1.25, N=3)
    bonds_a = [l.bond for l in interpolate_dyson(spec, 0.2)]
    bonds_b = [l.bond for l in interpolate_dyson(spec, 0.9)]
    assert bonds_a == bonds_b


def test_realize_zero_variance_gives_zero_coupling():
    spec = ModelSpec(family="custom", beta=1.0, custom_bonds=((1, 2, 0.0),),
                     n_sites_custom=2)
    real = realize(build_laws(spec), seed=3, sample_index=9)
    assert real.couplings[0] == 0.0


def test_realize_bit_identical():
    spec = ModelSpec(family="dyson", beta=1.0, alpha=1.25, N=2)
    laws = build_laws(spec)
    a = realize(laws, seed=42, sample_index=7)
    b = realize(laws, seed=42, sample_index=7)
    assert np.array_equal(a.couplings, b.couplings)
    assert np.array_equal(a.z, b.z)
    c = realize(laws, seed=42, sample_index=8)
    assert not np.array_equal(a.couplings, c.couplings)


def test_realize_block_matches_single_draws():
    spec = ModelSpec(family="dyson", beta=1.0, alpha=1.25, N=2)
    laws = build_laws(spec)
    coup, z, n = realize_block(laws, 5, range(4))
    for k in range(4):
        single = realize(laws, 5, k)
        assert np.array_equal(coup[:, k], single.couplings)


def test_realize_mean_matches_nishimori_window():
    spec = ModelSpec(family="custom", beta=1.0, custom_bonds=((1, 2, 1.0),),
                     n_sites_custom=2)
    laws = build_laws(spec)
    coup, _, _ = realize_block(laws, 123, range(100000))
    se = 1.0 / math.sqrt(100000)
    assert abs(coup.mean() - 1.0) < 4 * se  # 1.000 +- 0.013


def test_sample_moments_satisfy_nishimori_condition():
    x = 0.7
    spec = ModelSpec(family="custom", beta=1.0, custom_bonds=((1, 2, x),),
                     n_sites_custom=2)
    coup, _, _ = realize_block(build_laws(spec), 321, range(100000))
    n = coup.size
    se_mean = math.sqrt(x / n)
    se_var = x * math.sqrt(2.0 / n)
    assert abs(coup.mean() - x) < 5 * se_mean
    assert abs(coup.var(ddof=1) - x) < 5 * se_var


def test_spec_json_round_trip():
    for spec in (
        ModelSpec(family="long_range", beta=0.8, alpha=1.5, L=6),
        ModelSpec(family="dyson", beta=2.0, alpha=1.25, N=3),
        ModelSpec(family="dyson", beta=1.0, alpha=1.25, N=2,
                  variance_overrides=(0.1, 0.2), include_diagonal=False),
        ModelSpec(family="custom", beta=0.0, custom_bonds=((1, 2, 0.5), (2, 3, 0.1)),
                  n_sites_custom=3),
    ):
        assert ModelSpec.from_json(spec.to_json()) == spec


def test_realization_csv_deterministic():
    spec = ModelSpec(family="dyson", beta=1.0, alpha=1.25, N=2)
    laws = build_laws(spec)
    a = realization_to_csv(realize(laws, 9, 0))
    b = realization_to_csv(realize(laws, 9, 0))
    assert a == b
    assert a.splitlines()[0] == "bond_i,bond_j,level,x,coupling"
    assert len(a.splitlines()) == 25
