import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import kstest

from scgle.config import ModelParams, NoiseKind, NoiseSpec
from scgle.errors import ShapeMismatch
from scgle.noise import (
    BrownianIncrement,
    ConvIncrement,
    NoiseHierarchy,
    RngStream,
    analytic_coupled_variance,
    couple_down,
    couple_down_brownian,
    increments_to_csv_rows,
    sample_brownian_increment,
    sample_conv_increment,
    variance_conv,
)
from scgle.spectral import semigroup_multiplier, sub_slice

WHITE = NoiseSpec(NoiseKind.WHITE)
REG = NoiseSpec()
MODEL = ModelParams()


def draws(fn, n, N, dt, spec, stream=3):
    return np.stack([fn(RngStream(17, stream, c), N, dt, spec).values for c in range(n)])


def test_variance_examples():
    assert variance_conv(0, 0.25, WHITE) == 0.25
    lam = (2 * math.pi) ** 2
    ref = quad(lambda s: math.exp(-2 * lam * s), 0, 1e-3, epsabs=1e-20, epsrel=1e-13)[0]
    assert abs(variance_conv(1, 1e-3, WHITE) - ref) <= 1e-12 * ref
    assert variance_conv(1, 1e-3, WHITE) == pytest.approx((1 - math.exp(-2 * lam * 1e-3)) / (2 * lam), rel=1e-14)
    np.testing.assert_allclose(variance_conv(np.array([-2, 2]), 1e-3, REG), variance_conv(2, 1e-3, REG))


def test_variance_small_step_limit():
    # v_k(dt) -> q_k dt as dt -> 0
    v = variance_conv(5, 1e-12, REG)
    assert v == pytest.approx(5.0 ** (-1.001) * 1e-12, rel=1e-9)


def test_conv_increment_law():
    dt = 1e-3
    x = draws(sample_conv_increment, 20000, 16, dt, REG)
    for k in (0, 1, 7):
        v = variance_conv(k, dt, REG)
        col = x[:, k + 7]
        for part in (col.real, col.imag):
            assert abs(np.mean(part**2) / v - 1) < 0.05
            assert kstest(part / math.sqrt(v), "norm").pvalue > 1e-3
    # components are uncorrelated across modes and between Re/Im
    c = np.corrcoef(np.column_stack([x[:, 8].real, x[:, 8].imag, x[:, 9].real]).T)
    assert np.max(np.abs(c - np.eye(3))) < 0.05


def test_brownian_increment_law():
    x = draws(sample_brownian_increment, 20000, 8, 1e-3, WHITE)
    assert isinstance(sample_brownian_increment(RngStream(0), 8, 1e-3, WHITE), BrownianIncrement)
    assert abs(np.mean(x[:, 3].real ** 2) / 1e-3 - 1) < 0.05


def test_zero_mode_law_shared_by_both_increments():
    dt = 0.01
    assert variance_conv(0, dt, REG) == dt * 1.0
    conv = sample_conv_increment(RngStream(5), 4, dt, REG)
    brown = sample_brownian_increment(RngStream(5), 4, dt, REG)
    # same normals, same scale on k = 0
    assert conv.values[1] == brown.values[1]


def test_determinism_and_independence():
    a = sample_conv_increment(RngStream(1, 2, 3), 32, 1e-3, REG)
    b = sample_conv_increment(RngStream(1, 2, 3), 32, 1e-3, REG)
    np.testing.assert_array_equal(a.values, b.values)
    for other in (RngStream(1, 2, 4), RngStream(1, 3, 3), RngStream(2, 2, 3)):
        assert not np.array_equal(sample_conv_increment(other, 32, 1e-3, REG).values, a.values)
    assert RngStream(1, 2, 3).split(9) == RngStream(1, 9, 0)
    with pytest.raises(ValueError):
        RngStream(-1)


def test_couple_down_matches_direct_sum():
    fine = [sample_conv_increment(RngStream(4, 0, j), 32, 1e-4, REG) for j in range(4)]
    coarse = couple_down(fine, MODEL)
    direct = sum(semigroup_multiplier(16, (3 - j) * 1e-4, MODEL.nu) * fine[j].values[sub_slice(32, 16)]
                 for j in range(4))
    assert coarse.N == 16 and coarse.dt == 4e-4
    assert np.max(np.abs(coarse.values - direct)) <= 1e-15


def test_coupled_variance_identity():
    ks = np.arange(-20, 21)
    for spec in (REG, WHITE):
        for dt in (1e-6, 2.0**-12, 0.3):
            np.testing.assert_allclose(analytic_coupled_variance(ks, dt, spec), variance_conv(ks, dt, spec),
                                       rtol=1e-12, atol=0)


def test_coupled_empirical_variance():
    dt = 1e-3
    vals = np.array([
        couple_down([sample_conv_increment(RngStream(8, 0, 4 * i + j), 8, dt / 4, REG) for j in range(4)],
                    MODEL).values
        for i in range(8000)
    ])
    for k in (0, 1):
        assert abs(np.mean(vals[:, k + 1].real ** 2) / variance_conv(k, dt, REG) - 1) < 0.06


def test_couple_down_brownian_sums():
    fine = [sample_brownian_increment(RngStream(4, 0, j), 8, 0.25, WHITE) for j in range(4)]
    out = couple_down_brownian(fine)
    np.testing.assert_allclose(out.values, sum(f.values[sub_slice(8, 4)] for f in fine), atol=1e-16)


def test_couple_down_rejects_bad_input():
    fine = [sample_conv_increment(RngStream(0, 0, j), 8, 0.1, REG) for j in range(4)]
    with pytest.raises(ShapeMismatch):
        couple_down(fine[:3], MODEL)
    with pytest.raises(ShapeMismatch):
        couple_down(fine[:3] + [sample_conv_increment(RngStream(0), 16, 0.1, REG)], MODEL)
    with pytest.raises(ShapeMismatch):
        couple_down([sample_conv_increment(RngStream(0, 0, j), 7, 0.1, REG) for j in range(4)], MODEL)
    with pytest.raises(ShapeMismatch):
        couple_down_brownian(fine)


def test_hierarchy_levels_share_one_path():
    h = NoiseHierarchy(8, 1e-2, 3, REG, MODEL)
    assert h.levels == [(8, 1e-2), (16, 2.5e-3), (32, 6.25e-4)] and h.fine_per_coarse == 16
    stream = RngStream(3, 1)
    coarse, mid, fine = h.sample_path(stream, 2)
    assert (len(coarse), len(mid), len(fine)) == (2, 8, 32)
    # finest level uses counters m * 16 + i
    np.testing.assert_array_equal(fine[17].values,
                                  sample_conv_increment(stream.at(17), 32, 6.25e-4, REG).values)
    np.testing.assert_allclose(mid[5].values, couple_down(fine[20:24], MODEL).values, atol=1e-17)
    np.testing.assert_allclose(coarse[1].values, couple_down(mid[4:8], MODEL).values, atol=1e-17)
    for inc in coarse:
        assert isinstance(inc, ConvIncrement) and inc.N == 8


def test_hierarchy_brownian_kind():
    h = NoiseHierarchy(4, 0.1, 2, WHITE, MODEL, kind="brownian")
    coarse, fine = h.sample_path(RngStream(0), 1)
    np.testing.assert_allclose(coarse[0].values, sum(f.values[sub_slice(8, 4)] for f in fine), atol=1e-16)
    with pytest.raises(ValueError):
        NoiseHierarchy(4, 0.1, 2, WHITE, MODEL, kind="levy")


def test_csv_rows():
    inc = ConvIncrement(2, 0.1, np.array([1 + 2j, -0.5j]))
    assert increments_to_csv_rows(1, 3, inc) == ["1,3,0,1.0,2.0", "1,3,1,-0.0,-0.5"]
