import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import smile_from_sigma
from oracles import lognormal_pdf
from ivsmile.density import (
    breeden_litzenberger,
    density_rows,
    extract_density,
    find_modes,
    normalize,
    raw_density,
)
from ivsmile.errors import DegenerateDensity
from ivsmile.grid import MoneynessGrid


def flat_density(step=0.001, lo=0.9, hi=1.1, sigma=0.3, tau=7 / 365):
    n = int(round((hi - lo) / step)) + 1
    smile = smile_from_sigma(np.full(n, sigma), m0=lo, step=step)
    return extract_density(smile, 100.0, 0.0, tau)


def test_flat_smile_matches_lognormal():
    dens = flat_density()
    q = lognormal_pdf(dens.strikes, 100.0, 0.3, 7 / 365)
    q /= q.sum()
    assert np.abs(dens.probabilities / q - 1).max() <= 1e-3
    assert dens.probabilities.sum() == pytest.approx(1.0, abs=1e-12)
    assert dens.modality == 1


def test_coarse_grid_is_only_a_rough_match():
    # at the default step the second difference is far from the pdf itself
    dens = flat_density(step=0.025, lo=0.8, hi=1.2)
    q = lognormal_pdf(dens.strikes, 100.0, 0.3, 7 / 365)
    q /= q.sum()
    assert np.abs(dens.probabilities / q - 1).max() > 1e-3


def test_affine_prices_have_zero_density():
    g = breeden_litzenberger([5.0, 4.0, 3.0], 2.5, 0.0, 1.0)
    assert g[0] == 0.0


def test_discounting():
    g = breeden_litzenberger([5.0, 4.0, 3.5], 1.0, 0.05, 2.0)
    assert g[0] == pytest.approx(0.5 * np.exp(0.1))


def test_zero_vol_mass_brackets_spot():
    # nodes 0.91, 0.935, 0.96, 0.985, 1.01, ...: the spot (m = 1) falls between nodes 3 and 4
    grid = MoneynessGrid(0.91, 0.025, 9)
    p = normalize(raw_density(grid, np.zeros(9), 100.0, 0.0, 0.1))
    expected = np.zeros(7)
    expected[2] = (1.01 - 1.0) / 0.025  # node 3, weight by distance to the far node
    expected[3] = (1.0 - 0.985) / 0.025  # node 4
    np.testing.assert_allclose(p, expected, atol=1e-9)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_zero_vol_spot_on_a_node_is_a_single_spike():
    grid = MoneynessGrid(0.9, 0.025, 9)
    p = normalize(raw_density(grid, np.zeros(9), 100.0, 0.0, 0.1))
    assert np.argmax(p) == 3  # node m = 1.0 is grid index 4, density index 3
    assert p[3] == pytest.approx(1.0)
    assert np.abs(np.delete(p, 3)).max() < 1e-12


def test_normalize_keeps_negatives():
    p = normalize([1.0, -0.5, 1.5])
    np.testing.assert_allclose(p, [0.5, -0.25, 0.75])


def test_degenerate():
    with pytest.raises(DegenerateDensity):
        normalize([0.0, 0.0])


def test_spot_scaling_invariance():
    grid = MoneynessGrid(0.8, 0.025, 17)
    sigma = 0.5 - 2.0 * (grid.nodes - 1.0) ** 2
    a = normalize(raw_density(grid, sigma, 100.0, 0.0, 5 / 365))
    b = normalize(raw_density(grid, sigma, 1000.0, 0.0, 5 / 365))
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-13)


def test_unimodal_bell():
    x = np.linspace(-3, 3, 41)
    (mode,) = find_modes(np.exp(-(x**2)))
    assert mode[0] == 20


def two_bump(s=0.015, w2=0.5):
    m = np.linspace(0.85, 1.15, 61)
    return 0.5 * np.exp(-0.5 * ((m - 0.95) / s) ** 2) + w2 * np.exp(-0.5 * ((m - 1.05) / s) ** 2)


def test_two_bump_mixture():
    modes = find_modes(two_bump())
    assert len(modes) == 2
    assert all(prom >= 0.05 for _, _, prom in modes)


def test_minor_bump_suppressed():
    # a small shoulder bump whose prominence is about 0.01 of the maximum
    m = np.linspace(0.85, 1.15, 61)
    p = np.exp(-0.5 * ((m - 0.97) / 0.03) ** 2) + 0.03 * np.exp(-0.5 * ((m - 1.08) / 0.006) ** 2)
    all_peaks = find_modes(p, prominence=0.0)
    assert len(all_peaks) == 2
    minor = min(prom for _, _, prom in all_peaks)
    assert 0.005 < minor < 0.05
    assert len(find_modes(p)) == 1


def test_plateau_counts_once_at_left_edge():
    assert find_modes([0.0, 1.0, 2.0, 2.0, 2.0, 1.0, 0.0]) == [(2, 2.0, 1.0)]


def test_edges_are_not_modes():
    assert find_modes([3.0, 2.0, 1.0]) == []
    assert find_modes([]) == []


@given(
    st.lists(st.floats(0, 1), min_size=3, max_size=40),
    st.sampled_from([2.0**-10, 0.25, 2.0, 8.0, 2.0**20]),
)
@settings(max_examples=200, deadline=None)
def test_mode_count_scale_invariant(values, k):
    # power-of-two factors rescale exactly, so ties and thresholds are preserved
    v = np.asarray(values)
    assume(v.max() > 0)
    assert find_modes(v * k) == [(i, x * k, p) for i, x, p in find_modes(v)]


def test_density_rows():
    dens = flat_density(step=0.025, lo=0.8, hi=1.2)
    rows = density_rows(dens)
    assert len(rows) == 15
    assert sum(r["is_mode"] for r in rows) == 1
    assert rows[0]["moneyness"] == pytest.approx(0.825)
