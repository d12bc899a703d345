import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptweyl.discretize import FourierBasis, assemble_operator
from ptweyl.linalg import eigenvalues
from ptweyl.symbols import OperatorSpec, QuadratureGrid, TrigPoly, xi_bound
from ptweyl.weylgeom import (
    Disc,
    Rect,
    Sector,
    boundary_tube_volume,
    count_in_region,
    distance_to_symbol_range,
    preimage_volume,
    preimage_volume_converged,
    region_from_json,
    tube_profile,
    weyl_report,
)

ONE = TrigPoly.constant(1)
FREE = OperatorSpec(1.0, ((1, ONE),))  # p = xi^2
TRI = OperatorSpec(1.0, ((1, ONE),), TrigPoly.exp(1))  # p = xi^2 + e^{ix}
TILT = OperatorSpec(1.0, ((1, ONE + TrigPoly.sin(1, 0.5j)),))  # D(1 + i/2 sin x)D


def test_free_rect_volume_exact():
    # {xi^2 <= 1} x [0, 2pi): 2 * 2pi; |xi| = 1 is a cell edge on this grid
    g = QuadratureGrid(64, 64, 2.0)
    assert preimage_volume(FREE, Rect(0, 1, -1, 1), g) == pytest.approx(4 * math.pi, rel=1e-12)


def test_free_tube_oracle():
    g = QuadratureGrid(64, 4096, 1.5)
    r = 0.1
    exact = 2 * math.pi * (2 * (math.sqrt(1.1) - math.sqrt(0.9)) + 2 * math.sqrt(0.1))
    assert boundary_tube_volume(FREE, Rect(0, 1, -1, 1), r, g) == pytest.approx(exact, rel=0.02)


def test_tube_profile_monotone_and_rejects_zero():
    g = QuadratureGrid(32, 256, 2.0)
    prof = tube_profile(FREE, Rect(0, 1, -1, 1), [0.3, 0.05, 0.1], g)
    assert prof[1] <= prof[2] <= prof[0]
    with pytest.raises(ValueError):
        tube_profile(FREE, Rect(0, 1, -1, 1), [0.0], g)


def test_disc_volume_resolution_agreement():
    D = Disc(2 + 0.5j, 0.3)
    g = QuadratureGrid(1024, 1024, xi_bound(TRI, D.outer_radius))
    v = preimage_volume_converged(TRI, D, g)
    assert v["rel_diff"] < 0.02
    assert v["fine"] == pytest.approx(0.517, rel=0.03)


def test_grid_cover_check():
    with pytest.raises(ValueError, match="does not cover"):
        preimage_volume(FREE, Rect(0, 4, -1, 1), QuadratureGrid(16, 16, 1.0))


def test_count_examples():
    R = Rect(0, 1, -1, 1)
    assert count_in_region([0.5, 2.0, 0.5 + 0.5j], R) == 2
    assert count_in_region([1.0 + 1e-12, 1.1], R) == 1  # boundary tolerance
    assert count_in_region([], R) == 0
    assert count_in_region([2 + 0.5j, 2 + 0.5j, 3], Disc(2 + 0.5j, 0.1)) == 2  # multiplicity


def test_prediction_arithmetic():
    h = 0.05
    g = QuadratureGrid(64, 64, 2.0)
    rep = weyl_report(FREE.with_h(h), [0.5, 0.25], Rect(0, 1, -1, 1), g)
    # 4 pi / (2 pi * 0.05) = 40
    assert rep.prediction == pytest.approx(40.0, rel=1e-12)
    assert rep.count == 2 and rep.deviation == pytest.approx(38.0)


def test_unperturbed_triangular_has_no_eigenvalues_in_disc():
    h = 0.05
    spec = TRI.with_h(h)
    D = Disc(2 + 0.5j, 0.3)
    z = eigenvalues(assemble_operator(spec, FourierBasis(60))).eigenvalues
    g = QuadratureGrid(512, 512, xi_bound(spec, D.outer_radius))
    rep = weyl_report(spec, z, D, g)
    assert rep.count == 0
    assert rep.prediction > 1.0
    assert rep.relative_deviation == 1.0


def test_zero_lambda_sector():
    S = Sector(0.0, math.pi / 2, 0.0)
    assert count_in_region([0.0, 0.1, 1j], S) == 1
    assert S.contains(0) and not S.contains(1e-3)


def test_sector_membership_with_profile():
    S = Sector(0.0, 1.0, 2.0, g=ONE + TrigPoly.cos(1, 0.25))
    th = 0.5
    edge = 2.0 * (1 + 0.25 * math.cos(th))
    assert S.contains(0.99 * edge * np.exp(1j * th))
    assert not S.contains(1.01 * edge * np.exp(1j * th))
    assert not S.contains(np.exp(1.5j))
    assert S.boundary_distance(np.array([0.5 * edge * np.exp(1j * th)]))[0] > 0.1
    with pytest.raises(ValueError):
        Sector(0.0, 1.0, 1.0, g=TrigPoly.constant(-1))


@settings(max_examples=25, deadline=None)
@given(
    st.floats(0.3, 3.0), st.floats(0.05, 1.0), st.floats(0.05, 0.6),
    st.dictionaries(st.integers(-2, 2), st.floats(-1, 1), max_size=3),
)
def test_pt_mirror_volume(re, im, rad, vcoef):
    spec = OperatorSpec(1.0, ((1, ONE),), TrigPoly(vcoef))
    D = Disc(complex(re, im), rad)
    g = QuadratureGrid(128, 128, xi_bound(spec, D.outer_radius))
    # p(-x, xi) = conj p(x, xi): the grid x -> 2pi - x is a bijection of midpoints
    assert preimage_volume(spec, D, g) == pytest.approx(preimage_volume(spec, D.conj(), g), abs=2 * g.cell)


def test_additivity_and_monotonicity():
    g = QuadratureGrid(256, 256, xi_bound(TRI, 4.0))
    whole = preimage_volume(TRI, Rect(0.5, 3.0, -1.2, 1.2), g)
    left = preimage_volume(TRI, Rect(0.5, 1.7, -1.2, 1.2), g)
    right = preimage_volume(TRI, Rect(1.7, 3.0, -1.2, 1.2), g)
    assert left + right == pytest.approx(whole, abs=4 * g.cell)
    vols = [preimage_volume(TRI, Disc(2 + 0.5j, r), g) for r in (0.1, 0.2, 0.4, 0.8)]
    assert all(a <= b for a, b in zip(vols, vols[1:]))


def test_sector_scaling_exponent():
    S = Sector(0.0, 0.4, 1.0)
    lams = [10.0, 20.0, 40.0, 80.0]
    g = QuadratureGrid(256, 2048, xi_bound(TILT, 80.0, principal_only=True))
    vols = [preimage_volume(TILT, S.with_lambda(l), g, principal_only=True) for l in lams]
    slope = np.polyfit(np.log(lams), np.log(vols), 1)[0]
    assert slope == pytest.approx(1 / TILT.order, abs=0.02)


@pytest.mark.parametrize(
    "region",
    [Disc(1 - 2j, 0.5), Rect(-1, 2, 0, 3), Sector(0.1, 1.2, 5.0), Sector(0.0, 2.0, 3.0, g=ONE + TrigPoly.cos(2, 0.3))],
)
def test_region_json_roundtrip(region):
    back = region_from_json(region.to_json())
    assert back.to_json() == region.to_json()
    z = np.array([0.2 + 0.3j, 1 - 1.9j, 2 + 2j, -1])
    np.testing.assert_array_equal(back.contains(z), region.contains(z))


def test_region_conj():
    z = np.array([0.3 + 0.2j, 1 + 1j, 0.5 - 0.1j])
    for R in (Disc(1 + 1j, 0.5), Rect(0, 1, 0.1, 2), Sector(0.1, 1.0, 2.0, g=ONE + TrigPoly.cos(1, 0.2))):
        np.testing.assert_array_equal(R.conj().contains(z.conj()), R.contains(z))


def test_unknown_region_type():
    with pytest.raises(ValueError, match="unknown region"):
        region_from_json({"type": "hexagon"})


def test_distance_to_symbol_range():
    g = QuadratureGrid(128, 128, 2.0)
    d = distance_to_symbol_range(FREE, [0.5, -1.0, 1j], g)
    assert d[0] < 0.05
    assert d[1] == pytest.approx(1.0, abs=1e-3)
    assert d[2] == pytest.approx(1.0, abs=1e-3)
