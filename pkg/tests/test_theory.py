import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symgap import groups as g
from symgap import theory as th
from symgap.regress import sample_equivariant_target
from symgap.symmetrize import dim_A


def _gap_fraction(n, d, dim_a, sx=1, sxi=1, tn=1):
    """Exact rational evaluation of the invariant gap, written out independently."""
    n, d, dim_a = Fraction(n), Fraction(d), Fraction(dim_a)
    if n > d + 1:
        return sxi ** 2 * dim_a / (n - d - 1)
    assert n < d - 1
    noiseless = sx ** 2 * tn ** 2 * dim_a * n * (d - n) / (d * (d - 1) * (d + 2))
    return noiseless + sxi ** 2 * dim_a * n / (d * (d - n - 1))


def test_regimes():
    assert th.regime_of(3, 10) == th.OVER
    assert [th.regime_of(n, 10) for n in (9, 10, 11)] == [th.THRESHOLD] * 3
    assert th.regime_of(12, 10) == th.UNDER


def test_r_factor_values():
    assert th.r_factor(20, 5).value == pytest.approx(1 / 14)
    assert th.r_factor(4, 12).value == pytest.approx(1 / 21)
    assert th.r_factor(10, 10).infinite
    assert float(th.r_factor(9, 10)) == math.inf
    with pytest.raises(ValueError):
        th.r_factor(0, 3)


def test_underparameterised_permutation_s6():
    val = th.predicted_gap_invariant(20, 6, 1.0, 1.0, 1.0, 5)
    assert val.value == pytest.approx(5 / 13, abs=1e-12)
    assert val.noiseless_term == 0.0


def test_overparameterised_reflection():
    val = th.predicted_gap_invariant(4, 12, 1.0, 1.0, 1.0, 1)
    assert val.value == pytest.approx(float(_gap_fraction(4, 12, 1)), abs=1e-15)
    assert val.value == pytest.approx(0.0649351, abs=1e-7)


def test_threshold_is_flagged():
    val = th.predicted_gap_invariant(10, 10, 1.0, 1.0, 1.0, 3)
    assert val.infinite and val.label() == "inf" and val.regime == th.THRESHOLD


@pytest.mark.parametrize("n,d,dim_a", [(2, 10, 3), (5, 30, 7), (40, 10, 9), (13, 10, 1)])
def test_invariant_matches_rational_oracle(n, d, dim_a):
    val = th.predicted_gap_invariant(n, d, 1.0, 1.0, 1.0, dim_a)
    assert val.value == pytest.approx(float(_gap_fraction(n, d, dim_a)), rel=1e-13)


def test_scaling_in_sigmas():
    base = th.predicted_gap_invariant(3, 9, 1.0, 1.0, 1.0, 2)
    scaled = th.predicted_gap_invariant(3, 9, 2.0, 3.0, 0.5, 2)
    assert scaled.noiseless_term == pytest.approx(base.noiseless_term * 4 * 0.25)
    assert scaled.noise_term == pytest.approx(base.noise_term * 9)


def test_zero_codimension_gives_zero_everywhere():
    for n in (1, 9, 10, 11, 40):
        val = th.predicted_gap_invariant(n, 10, 1.0, 1.0, 1.0, 0)
        assert val.value == 0.0


def test_noiseless_data_enough_samples():
    for n in (10, 11, 30):
        assert th.predicted_gap_invariant(n, 10, 1.0, 0.0, 1.0, 4).value == 0.0


def test_equivariant_s3_permutation():
    S3 = g.SymmetricGroup(3)
    perm = g.permutation_rep(S3)
    Theta = sample_equivariant_target(perm, perm, 1.0, seed=0)
    val = th.predicted_gap_equivariant(16, 3, 3, 1.0, 1.0, Theta, perm, perm)
    assert val.value == pytest.approx(7 / 12, abs=1e-12)
    val20 = th.predicted_gap_equivariant(20, 3, 3, 1.0, 1.0, Theta, perm, perm)
    assert val20.value == pytest.approx(7 / 16, abs=1e-12)


def test_trivial_group_has_no_gap(rng):
    G = g.trivial_group()
    for n in (2, 5, 20):
        Theta = rng.standard_normal((8, 3))
        val = th.predicted_gap_equivariant(n, 8, 3, 1.0, 1.0, Theta, g.trivial_rep(G, 8), g.trivial_rep(G, 3))
        assert val.value == pytest.approx(0.0, abs=1e-12)


def test_non_equivariant_target_rejected():
    R = g.reflection_rep(g.CyclicGroup(2), 4)
    triv = g.trivial_rep(R.group)
    with pytest.raises(th.NotEquivariantError):
        th.predicted_gap_equivariant(2, 4, 1, 1.0, 1.0, np.eye(4)[:, :1], R, triv)


def _random_config(rng):
    choices = [
        lambda: g.permutation_rep(g.SymmetricGroup(int(rng.integers(2, 6)))),
        lambda: g.reflection_rep(g.CyclicGroup(2), int(rng.integers(3, 15))),
        lambda: g.permutation_rep(g.CyclicGroup(int(rng.integers(3, 9)))),
        lambda: g.permutation_rep(g.DihedralGroup(int(rng.integers(3, 7)))),
        lambda: g.direct_sum(g.rotation_rep(g.TorusSO2(32)), g.trivial_rep(g.TorusSO2(32), 2)),
    ]
    phi = choices[int(rng.integers(len(choices)))]()
    d = phi.dim
    n = int(rng.choice([m for m in range(1, 3 * d + 4) if abs(m - d) > 1]))
    return phi, n


def test_reduction_to_invariant_case():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        phi, n = _random_config(rng)
        triv = g.trivial_rep(phi.group)
        sx, sxi, tn = rng.uniform(0.5, 2.0, size=3)
        Theta = sample_equivariant_target(phi, triv, tn, seed=int(rng.integers(1 << 30)))
        eq = th.predicted_gap_equivariant(n, phi.dim, 1, sx, sxi, Theta, phi, triv)
        inv = th.predicted_gap_invariant(n, phi.dim, sx, sxi, tn, dim_A(phi, triv))
        assert abs(eq.value - inv.value) <= 1e-10


def test_snap_integer():
    assert th.snap_integer(4.9999999) == 5.0
    assert th.snap_integer(4.9) == 4.9


def test_vc_alpha_two_paths():
    widths = [6, 6, 1]
    w = sum(i * k for i, k in enumerate(widths, start=1))
    via_ln = math.log(4 * math.e * (math.log(2 * math.e * w) / math.log(2)) * w) / math.log(2)
    assert th.vc_alpha(widths) == pytest.approx(via_ln, rel=1e-14)


def test_vc_bound():
    widths, chars = [4, 4, 1], [2.0, 1.0]
    alpha = th.vc_alpha(widths[:2])
    assert th.vc_bound(widths, chars) == pytest.approx(2 + 0.5 * alpha * 2 * 3 * 2.0)
    with pytest.raises(ValueError):
        th.vc_bound(widths, [])


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 60), st.integers(2, 60), st.integers(0, 30),
       st.floats(0.1, 5), st.floats(0.0, 5), st.floats(0.0, 5))
def test_invariant_gap_properties(n, d, dim_a, sx, sxi, tn):
    val = th.predicted_gap_invariant(n, d, sx, sxi, tn, dim_a)
    if val.infinite:
        assert th.regime_of(n, d) == th.THRESHOLD and sxi > 0 and dim_a > 0
        return
    assert val.value >= 0.0
    if n >= d:
        assert val.noiseless_term == 0.0
    if dim_a == 0:
        assert val.value == 0.0
    # linear in dim A
    doubled = th.predicted_gap_invariant(n, d, sx, sxi, tn, 2 * dim_a)
    assert doubled.value == pytest.approx(2 * val.value, rel=1e-12, abs=1e-300)
