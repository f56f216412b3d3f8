from fractions import Fraction

import pytest

from bellseries import refdata
from bellseries.errors import PreconditionError
from bellseries.model import Pairing, SeriesTable
from bellseries.stats import (
    BoundVerdict,
    cardinality_bound,
    chsh,
    chsh_detail,
    clauser_horne_j,
    correlation,
    correlation_report,
    detector_efficiencies,
    efficiency_bound,
    overlap_fraction,
    run_detector_efficiencies,
    set_stats,
    station_overlap_min,
    station_retention,
    table_eta,
)

import naive_stats
from conftest import make_rng, random_table, table_rows


# --- frozen values for the worked examples ---------------------------------


def test_reference_full_table_correlations():
    table = refdata.fig2()
    assert correlation(table, Pairing.AB).e == Fraction(1, 2)
    assert correlation(table, Pairing.ABP).e == Fraction(-1, 2)
    assert correlation(table, Pairing.APB).e == Fraction(1, 2)
    assert correlation(table, Pairing.APBP).e == Fraction(1, 2)
    detail = chsh_detail(table)
    assert detail.s == 2
    assert detail.nc_equal
    assert table_eta(table) == 1
    assert efficiency_bound(table).verdict is BoundVerdict.WITHIN_BOUND


def test_reference_missed_detection_table():
    table = refdata.fig3()
    ab = correlation(table, Pairing.AB)
    assert (ab.e, ab.n_c) == (Fraction(8, 14), 14)
    detail = chsh_detail(table)
    assert detail.s == Fraction(32, 14)
    assert table_eta(table) == Fraction(14, 15)
    bound = efficiency_bound(table)
    assert bound.product == Fraction(32, 15)
    assert bound.verdict is BoundVerdict.VIOLATES

    st = set_stats(table)
    assert st.n_alpha_both_same == 6
    assert st.n_alpha_both_diff == 7

    cb = cardinality_bound(table)
    assert cb.lhs == 32
    assert cb.rhs == 32
    assert cb.holds


def test_station_overlap_minimum():
    assert station_overlap_min(refdata.fig2(), "a") == 1
    assert station_overlap_min(refdata.fig3(), "a") == Fraction(13, 14)
    assert station_overlap_min(refdata.fig3(), "a_prime") == Fraction(13, 14)


def test_per_detector_efficiency_on_run():
    det = run_detector_efficiencies(refdata.fig1())
    assert det["a+"]["efficiency"] == Fraction(2, 3)
    assert det["a+"]["singles"] == 3
    assert det["a-"]["efficiency"] == Fraction(1, 2)
    assert det["b-"]["efficiency"] == 1


def test_overlap_fraction_guarantee():
    assert overlap_fraction(Fraction(1)) == 1
    assert overlap_fraction(Fraction(14, 15)) == Fraction(13, 14)
    # at half retention or below, nothing is guaranteed to overlap
    assert overlap_fraction(Fraction(1, 2)) == 0
    assert overlap_fraction(Fraction(1, 3)) == 0


# --- generic behavior -------------------------------------------------------


def test_set_stats_requires_full_table():
    partial = SeriesTable.from_rows((1, None), (1, 1), (-1, 1), (1, -1))
    with pytest.raises(PreconditionError, match="complete the table first"):
        set_stats(partial)


def test_chsh_undefined_without_coincidences():
    table = SeriesTable.from_rows((1, 0), (0, 1), (1, 0), (0, 1))
    assert chsh(table) is None


def test_retention_none_when_station_silent():
    table = SeriesTable.from_rows((0, 0), (1, 1), (1, -1), (1, 1))
    ret = station_retention(table, Pairing.AB)
    assert ret["a"] is None


def test_report_is_json_shaped():
    report = correlation_report(refdata.fig3())
    assert report["schema_version"] == 1
    s = report["chsh"]["s"]
    assert (s["num"], s["den"]) == (16, 7)
    assert abs(s["decimal"] - 16 / 7) < 1e-12
    assert report["efficiency"]["eta"] == {
        "num": 14, "den": 15, "decimal": 14 / 15,
    }
    assert report["cardinality_bound"]["rhs"] == 32
    assert report["set_stats"]["n_alpha_both_same"] == 6


def test_detector_efficiencies_full_table():
    det = detector_efficiencies(refdata.fig3())
    assert set(det) == {"a", "b", "a_prime", "b_prime"}
    assert det["a"]["recorded"] == 16
    assert det["a"]["detections"] == 15
    # row a participates in the two alpha pairings only
    assert set(det["a"]["retention_by_pairing"]) == {
        "alpha:beta", "alpha:beta_prime",
    }
    assert det["a"]["retention_by_pairing"]["alpha:beta"] == Fraction(14, 15)


# --- cross-checks against the naive reference implementations --------------


def test_matches_naive_on_random_tables():
    rng = make_rng(20)
    for _ in range(300):
        table = random_table(rng)
        rows = table_rows(table)
        for pairing in Pairing:
            stat = correlation(table, pairing)
            num, den = naive_stats.naive_correlation(
                rows, pairing.a_row, pairing.b_row
            )
            assert stat.n_c == den
            assert stat.e == naive_stats.naive_e(rows, pairing.a_row, pairing.b_row)
        assert chsh(table) == naive_stats.naive_chsh(rows)
        assert clauser_horne_j(table).j == naive_stats.naive_ch_j(rows)
        assert table_eta(table) == naive_stats.naive_eta(rows)


def test_matches_naive_counting_bound():
    rng = make_rng(21)
    for i in range(300):
        alphabet = (-1, 1) if i % 2 else (-1, 0, 1)
        table = random_table(rng, alphabet=alphabet)
        lhs, rhs = naive_stats.naive_cardinality_sides(table_rows(table))
        cb = cardinality_bound(table)
        assert (cb.lhs, cb.rhs) == (lhs, rhs)
        assert cb.holds, "the counting bound is an identity, zeros included"
