"""Continuity-exponent law, perturbation families, and the sweep driver."""

import json
import math

import numpy as np
import pytest

from chslab.holder import (
    HolderReport,
    default_horizon,
    holder_exponent,
    make_family,
    run_holder,
    save_curves_csv,
    save_reports_csv,
    save_reports_json,
    sweep,
)
from chslab.solver import SystemParams
from chslab.spectral import Grid, sobolev_norm


@pytest.fixture
def grid():
    return Grid(256, 64.0)


def params():
    return SystemParams(b=2.0, kappa=1.0, alpha=0.0, c_s=1.0)


# -------------------------------------------------------- exponent law

def test_frozen_exponent_values():
    assert holder_exponent(4.0, 1.0).beta == 1.0
    assert holder_exponent(4.0, 1.0).regime == "lipschitz"
    assert holder_exponent(4.0, 2.0).beta == 1.0
    assert holder_exponent(3.75, 1.0).beta == pytest.approx(10.0 / 11.0, abs=1e-15)
    assert holder_exponent(3.75, 1.0).regime == "interpolation-low"
    assert holder_exponent(4.0, 3.5).beta == 0.5
    assert holder_exponent(4.0, 3.5).regime == "interpolation-high"


def test_overlapping_clauses_agree():
    # at s = 3.75, r = 1.25 both interpolation clauses apply and give 1
    case = holder_exponent(3.75, 1.25)
    assert case.beta == pytest.approx(1.0, abs=1e-12)


def test_boundary_between_clauses_is_continuous():
    # approach r = 5 - s from both sides and compare at the seam
    for s in np.linspace(3.6, 3.95, 8):
        r = 5.0 - s
        here = holder_exponent(s, r).beta
        below = holder_exponent(s, r - 1e-7).beta
        assert abs(here - below) < 1e-6
        assert abs(here - (2.0 * s - 5.0) / (s - r)) < 1e-9


def test_exponent_range_enforcement():
    with pytest.raises(ValueError):
        holder_exponent(3.4, 1.0)  # s too low
    with pytest.raises(ValueError):
        holder_exponent(4.0, 0.5)  # r below the data class floor
    with pytest.raises(ValueError):
        holder_exponent(4.0, 4.0)  # r must stay below s


def test_trivial_second_component_widens_the_range():
    case = holder_exponent(4.5, 0.3, rho_trivial=True)
    assert case.beta == pytest.approx(20.0 / 21.0, abs=1e-15)
    with pytest.raises(ValueError):
        holder_exponent(4.5, 0.3, rho_trivial=False)
    # the low clause opens up to s < 5 in this regime
    assert holder_exponent(4.6, 0.2, rho_trivial=True).regime == "interpolation-low"


# ------------------------------------------------------------- families

def test_family_member_zero_is_the_base(grid):
    fam = make_family(grid, 4.0, 2.0)
    st = fam.member(0.0)
    assert st.u is fam.u0
    assert st.rho is fam.rho0


def test_family_distances_scale_exactly_linearly(grid):
    fam = make_family(grid, 4.0, 2.0)
    base = fam.member(0.0)
    for d in fam.deltas:
        st = fam.member(float(d))
        dist = (sobolev_norm(st.u - base.u, 4.0)
                + sobolev_norm(st.rho - base.rho, 2.0))
        assert dist == pytest.approx(float(d), rel=1e-12)


def test_family_fits_in_the_requested_ball(grid):
    fam = make_family(grid, 4.0, 1.5, base_amplitude=5.0)  # forces a rescale
    for d in fam.deltas:
        assert fam.member_y(float(d)) <= 1.5 * (1.0 + 1e-12)


def test_family_rejects_bad_ladders(grid):
    with pytest.raises(ValueError):
        make_family(grid, 4.0, 2.0, deltas=np.array([1e-2, 1e-3, 1e-4]))  # short
    with pytest.raises(ValueError):
        make_family(grid, 4.0, 2.0, deltas=np.array([1e-4, 1e-3, 1e-2, 1e-1]))
    with pytest.raises(ValueError):
        make_family(grid, 4.0, 2.0,
                    deltas=np.geomspace(1e-2, 9e-3, 5))  # under two decades
    with pytest.raises(ValueError):
        make_family(grid, 4.0, 2.0,
                    deltas=np.array([1e-1, 1e-2, 5e-3, 1e-4]))  # uneven spacing
    with pytest.raises(ValueError):
        make_family(grid, 4.0, 0.005)  # ladder cannot fit in the ball


def test_family_kinds_are_checked(grid):
    with pytest.raises(ValueError):
        make_family(grid, 4.0, 2.0, base_kind="triangle")
    with pytest.raises(ValueError):
        make_family(grid, 4.0, 2.0, direction_kind="spike")


def test_trivial_family_flag_follows_contents(grid):
    fam = make_family(grid, 4.0, 2.0, rho_trivial=True)
    assert fam.rho_trivial
    assert sobolev_norm(fam.rho0, 0.0) == 0.0
    mixed = make_family(grid, 4.0, 2.0)
    assert not mixed.rho_trivial


# ------------------------------------------------------------ single runs

def test_single_case_passes_and_reports_unit_slope(grid):
    fam = make_family(grid, 4.0, 2.0)
    rep = run_holder(fam, params(), 4.0, 2.0, T=0.5)
    assert rep.verdict == "pass"
    assert rep.slope == pytest.approx(1.0, abs=1e-6)
    assert rep.residual < 1e-6
    assert rep.case.beta == 1.0


def test_degenerate_ladder_is_flagged(grid):
    deltas = np.geomspace(1e-12, 1e-15, 5)
    fam = make_family(grid, 4.0, 2.0, deltas=deltas)
    rep = run_holder(fam, params(), 4.0, 2.0, T=0.2)
    assert rep.verdict.startswith("degenerate")
    assert math.isnan(rep.slope)


def test_default_horizon_is_positive_and_modest(grid):
    fam = make_family(grid, 4.0, 2.0)
    T = default_horizon(fam, params(), 4.0)
    assert 0.0 < T < 100.0


# ----------------------------------------------------------------- sweep

def test_sweep_preserves_case_order_and_is_deterministic(grid):
    cases = [(4.0, 2.0), (4.0, 2.0)]
    reports = sweep(cases, grid, params(), T=0.3)
    assert len(reports) == 2
    assert reports[0].slope == reports[1].slope
    assert np.array_equal(reports[0].distances, reports[1].distances)


def test_sweep_turns_case_errors_into_rows(grid):
    reports = sweep([(4.0, 2.0), (3.4, 1.0)], grid, params(), T=0.3)
    assert reports[0].verdict == "pass"
    assert reports[1].verdict.startswith("error:")
    assert math.isnan(reports[1].slope)


def test_report_files_round_trip(tmp_path, grid):
    reports = sweep([(4.0, 2.0)], grid, params(), T=0.3)
    csv_path = tmp_path / "reports.csv"
    save_reports_csv(reports, csv_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "case,s,r,beta_theory,slope,residual,verdict"
    assert len(lines) == 2
    assert lines[1].startswith("s4-r2,")

    json_path = tmp_path / "reports.json"
    save_reports_json(reports, json_path)
    data = json.loads(json_path.read_text())
    assert data[0]["verdict"] == "pass"

    curves = tmp_path / "curve.csv"
    save_curves_csv(reports[0], curves)
    rows = curves.read_text().splitlines()
    assert rows[0] == "delta,distance"
    assert len(rows) == 1 + len(reports[0].deltas)
