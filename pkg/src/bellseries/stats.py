"""Correlation and bound statistics over series tables.

All ratio-valued statistics are computed with exact rational arithmetic
(:class:`fractions.Fraction`); nothing here rounds.  Decimal renderings are
produced only at the reporting edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from typing import Iterable

from .errors import PreconditionError
from .model import (
    MINUS,
    PAIRINGS,
    PLUS,
    ROW_KEYS,
    ZERO,
    Pairing,
    RecordedRun,
    SeriesTable,
)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class PairingStat:
    """Coincidence count, outcome-product sum, and correlation for one
    setting pair."""

    pairing: Pairing
    n_c: int
    total: int
    e: Fraction | None

    @property
    def defined(self) -> bool:
        return self.e is not None


def correlation(table: SeriesTable, pairing: Pairing) -> PairingStat:
    """Correlation over slots where both stations of the pairing detected.

    A 0 on either side removes the slot from the coincidence count; an
    unmeasured cell does too.
    """
    a_row = table.row(pairing.a_row)
    b_row = table.row(pairing.b_row)
    n_c = 0
    total = 0
    for x, y in zip(a_row, b_row):
        if x in (PLUS, MINUS) and y in (PLUS, MINUS):
            n_c += 1
            total += x * y
    e = Fraction(total, n_c) if n_c else None
    return PairingStat(pairing, n_c, total, e)


def correlation_over_slots(
    table: SeriesTable, pairing: Pairing, slots: Iterable[int]
) -> PairingStat:
    """Same as :func:`correlation`, but restricted to the given slots."""
    a_row = table.row(pairing.a_row)
    b_row = table.row(pairing.b_row)
    n_c = 0
    total = 0
    for i in slots:
        x, y = a_row[i], b_row[i]
        if x in (PLUS, MINUS) and y in (PLUS, MINUS):
            n_c += 1
            total += x * y
    e = Fraction(total, n_c) if n_c else None
    return PairingStat(pairing, n_c, total, e)


def correlations(table: SeriesTable) -> dict[Pairing, PairingStat]:
    return {p: correlation(table, p) for p in PAIRINGS}


@dataclass(frozen=True)
class ChshDetail:
    stats: dict[Pairing, PairingStat]
    s: Fraction | None
    nc_equal: bool

    @property
    def defined(self) -> bool:
        return self.s is not None


def chsh_detail(table: SeriesTable) -> ChshDetail:
    """S = |E(a,b) - E(a,b')| + |E(a',b) + E(a',b')| with each correlation
    normalized by its own coincidence count.

    S is undefined (None) when any pairing has no coincidences.  When all
    four coincidence counts agree, this per-pairing form coincides with the
    single-sum form normalized by the common count; ``nc_equal`` reports
    whether that held.
    """
    stats = correlations(table)
    counts = {stats[p].n_c for p in PAIRINGS}
    nc_equal = len(counts) == 1
    if any(stats[p].e is None for p in PAIRINGS):
        return ChshDetail(stats, None, nc_equal)
    s = abs(stats[Pairing.AB].e - stats[Pairing.ABP].e) + abs(
        stats[Pairing.APB].e + stats[Pairing.APBP].e
    )
    return ChshDetail(stats, s, nc_equal)


def chsh(table: SeriesTable) -> Fraction | None:
    return chsh_detail(table).s


def _ch_indicator(v) -> int:
    """Detection-of-plus indicator: +1 counts, everything recorded else
    (including no detection) does not."""
    return 1 if v == PLUS else 0


@dataclass(frozen=True)
class ClauserHorneDetail:
    j: int
    coincidences: dict[Pairing, int]
    singles_a: int
    singles_b: int
    slot_terms: tuple[int, ...] | None


def clauser_horne_j(table: SeriesTable) -> ClauserHorneDetail:
    """The count-based combination

        J = N(a,b) + N(a,b') + N(a',b) - N(a',b') - N(a) - N(b)

    where each N is a number of ++ coincidences (or single + detections for
    the last two), counting +1 as a detection and everything else as none.

    For a fully measured table the per-slot contributions are also returned;
    each lies in {-2,-1,0} so their sum, J itself, cannot be positive there.
    """
    coincidences = {}
    for p in PAIRINGS:
        a_row = table.row(p.a_row)
        b_row = table.row(p.b_row)
        coincidences[p] = sum(
            _ch_indicator(x) * _ch_indicator(y) for x, y in zip(a_row, b_row)
        )
    singles_a = sum(_ch_indicator(v) for v in table.a)
    singles_b = sum(_ch_indicator(v) for v in table.b)
    j = (
        coincidences[Pairing.AB]
        + coincidences[Pairing.ABP]
        + coincidences[Pairing.APB]
        - coincidences[Pairing.APBP]
        - singles_a
        - singles_b
    )
    slot_terms = None
    if table.fully_measured:
        terms = []
        for i in range(table.slots):
            a = _ch_indicator(table.a[i])
            ap = _ch_indicator(table.a_prime[i])
            b = _ch_indicator(table.b[i])
            bp = _ch_indicator(table.b_prime[i])
            terms.append(a * b + a * bp + ap * b - ap * bp - a - b)
        slot_terms = tuple(terms)
    return ClauserHorneDetail(j, coincidences, singles_a, singles_b, slot_terms)


@dataclass(frozen=True)
class SetStats:
    """Index-set census of a fully measured table.

    ``alpha`` etc. are the slot sets where the row detected (nonzero);
    ``both_same`` / ``both_diff`` split the slots where b and b' both
    detected by sign agreement.  The u-values are the outcome-product sums
    entering the four correlations, restricted to coincidences.
    """

    alpha: frozenset[int]
    beta: frozenset[int]
    alpha_prime: frozenset[int]
    beta_prime: frozenset[int]
    both_same: frozenset[int]
    both_diff: frozenset[int]
    u_ab: int
    u_abp: int
    u_apb: int
    u_apbp: int
    n_ab: int
    n_abp: int
    n_apb: int
    n_apbp: int

    @property
    def coincidence_total(self) -> int:
        return self.n_ab + self.n_abp + self.n_apb + self.n_apbp

    @property
    def n_alpha(self) -> int:
        return len(self.alpha)

    @property
    def n_beta(self) -> int:
        return len(self.beta)

    @property
    def n_alpha_prime(self) -> int:
        return len(self.alpha_prime)

    @property
    def n_beta_prime(self) -> int:
        return len(self.beta_prime)

    @property
    def n_both_same(self) -> int:
        return len(self.both_same)

    @property
    def n_both_diff(self) -> int:
        return len(self.both_diff)

    @property
    def n_alpha_beta_beta_prime(self) -> int:
        return len(self.alpha & self.beta & self.beta_prime)

    @property
    def n_alpha_prime_beta_beta_prime(self) -> int:
        return len(self.alpha_prime & self.beta & self.beta_prime)

    @property
    def n_alpha_both_same(self) -> int:
        return len(self.alpha & self.both_same)

    @property
    def n_alpha_both_diff(self) -> int:
        return len(self.alpha & self.both_diff)

    @property
    def n_alpha_prime_both_same(self) -> int:
        return len(self.alpha_prime & self.both_same)

    @property
    def n_alpha_prime_both_diff(self) -> int:
        return len(self.alpha_prime & self.both_diff)


def set_stats(table: SeriesTable) -> SetStats:
    if not table.fully_measured:
        raise PreconditionError(
            "set statistics need every cell recorded; complete the table first "
            "(fill or condense)"
        )
    detected = {
        key: frozenset(i for i, v in enumerate(table.row(key)) if v != ZERO)
        for key in ROW_KEYS
    }
    both = detected["b"] & detected["b_prime"]
    both_same = frozenset(i for i in both if table.b[i] == table.b_prime[i])
    both_diff = both - both_same

    def u_and_n(a_key: str, b_key: str) -> tuple[int, int]:
        coinc = detected[a_key] & detected[b_key]
        a_row = table.row(a_key)
        b_row = table.row(b_key)
        return sum(a_row[i] * b_row[i] for i in coinc), len(coinc)

    u_ab, n_ab = u_and_n("a", "b")
    u_abp, n_abp = u_and_n("a", "b_prime")
    u_apb, n_apb = u_and_n("a_prime", "b")
    u_apbp, n_apbp = u_and_n("a_prime", "b_prime")
    return SetStats(
        alpha=detected["a"],
        beta=detected["b"],
        alpha_prime=detected["a_prime"],
        beta_prime=detected["b_prime"],
        both_same=both_same,
        both_diff=both_diff,
        u_ab=u_ab,
        u_abp=u_abp,
        u_apb=u_apb,
        u_apbp=u_apbp,
        n_ab=n_ab,
        n_abp=n_abp,
        n_apb=n_apb,
        n_apbp=n_apbp,
    )


@dataclass(frozen=True)
class CardinalityBound:
    """Both sides of the count-level inequality

        |u1 - u2| + |u3 + u4| <= sum of the four coincidence counts
                                 - 2 N(alpha & both_same)
                                 - 2 N(alpha' & both_diff)

    which holds for every fully measured table by term counting alone."""

    lhs: int
    rhs: int
    n_alpha_both_same: int
    n_alpha_prime_both_diff: int

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def cardinality_bound(table: SeriesTable) -> CardinalityBound:
    st = set_stats(table)
    n1 = st.n_alpha_both_same
    n2 = st.n_alpha_prime_both_diff
    lhs = abs(st.u_ab - st.u_abp) + abs(st.u_apb + st.u_apbp)
    rhs = st.coincidence_total - 2 * n1 - 2 * n2
    return CardinalityBound(lhs, rhs, n1, n2)


def overlap_fraction(eta: Fraction) -> Fraction:
    """Guaranteed fraction of coincidence slots shared between two pairings
    that each retain at least a fraction ``eta`` of a common slot pool:
    (2*eta - 1)/eta above one half, zero at or below it."""
    if not 0 <= eta <= 1:
        raise PreconditionError(f"efficiency must lie in [0, 1], got {eta}")
    if eta * 2 <= 1:
        return Fraction(0)
    return (2 * eta - 1) / eta


class BoundVerdict(Enum):
    WITHIN_BOUND = "within_bound"
    VIOLATES = "violates"
    NOT_APPLICABLE = "not_applicable"


@dataclass(frozen=True)
class EfficiencyBound:
    """The efficiency-scaled CHSH test: S * eta <= 2, meaningful only when
    every pairing retains more than half of each participating station's
    detections."""

    s: Fraction | None
    eta: Fraction | None
    product: Fraction | None
    verdict: BoundVerdict


def station_retention(table: SeriesTable, pairing: Pairing) -> dict[str, Fraction | None]:
    """For one pairing, the fraction of each station's detections that also
    saw the other station detect (coincidences / singles)."""
    a_row = table.row(pairing.a_row)
    b_row = table.row(pairing.b_row)
    n_a = sum(1 for v in a_row if v in (PLUS, MINUS))
    n_b = sum(1 for v in b_row if v in (PLUS, MINUS))
    n_c = correlation(table, pairing).n_c
    return {
        pairing.a_row: Fraction(n_c, n_a) if n_a else None,
        pairing.b_row: Fraction(n_c, n_b) if n_b else None,
    }


def table_eta(table: SeriesTable) -> Fraction | None:
    """The table's working efficiency: the smallest of the eight
    per-pairing station retentions, or None when some station never
    detected under some pairing."""
    ratios: list[Fraction] = []
    for p in PAIRINGS:
        for ratio in station_retention(table, p).values():
            if ratio is None:
                return None
            ratios.append(ratio)
    return min(ratios)


def efficiency_bound(table: SeriesTable) -> EfficiencyBound:
    s = chsh(table)
    eta = table_eta(table)
    if s is None or eta is None:
        return EfficiencyBound(s, eta, None, BoundVerdict.NOT_APPLICABLE)
    product = s * eta
    if eta * 2 <= 1:
        return EfficiencyBound(s, eta, product, BoundVerdict.NOT_APPLICABLE)
    verdict = BoundVerdict.WITHIN_BOUND if product <= 2 else BoundVerdict.VIOLATES
    return EfficiencyBound(s, eta, product, verdict)


def station_overlap_min(table: SeriesTable, row: str) -> Fraction | None:
    """Guaranteed overlap between the two coincidence sets a station row
    participates in, as a fraction of that row's detections.

    Row ``a`` is paired once against b and once against b'; if it retains at
    least a fraction eta of its detections in each, the two coincidence sets
    must share at least (2*eta - 1)/eta of them.  None when a retention is
    undefined.
    """
    pairings = [p for p in PAIRINGS if row in (p.a_row, p.b_row)]
    etas = [station_retention(table, p)[row] for p in pairings]
    if any(e is None for e in etas):
        return None
    return overlap_fraction(min(etas))


def run_detector_efficiencies(run: RecordedRun) -> dict[str, dict[str, object]]:
    """Sign-specific detector bookkeeping for a recorded run.

    Each station has one detector per outcome sign per setting; a single is
    any slot where that detector fired, a coincidence one where the distant
    station also detected (either sign).  Efficiency is their ratio.
    """
    out: dict[str, dict[str, object]] = {}
    counters: dict[str, list[int]] = {}
    for i in range(run.slots):
        a_row = run.schedule.a_settings[i].row
        b_row = run.schedule.b_settings[i].row
        a_v, b_v = run.a_outcomes[i], run.b_outcomes[i]
        if a_v != ZERO:
            rec = counters.setdefault(f"{a_row}{'+' if a_v == PLUS else '-'}", [0, 0])
            rec[0] += 1
            rec[1] += 1 if b_v != ZERO else 0
        if b_v != ZERO:
            rec = counters.setdefault(f"{b_row}{'+' if b_v == PLUS else '-'}", [0, 0])
            rec[0] += 1
            rec[1] += 1 if a_v != ZERO else 0
    for label in sorted(counters):
        singles, coincidences = counters[label]
        out[label] = {
            "singles": singles,
            "coincidences": coincidences,
            "efficiency": Fraction(coincidences, singles) if singles else None,
        }
    return out


def detector_efficiencies(table: SeriesTable) -> dict[str, dict[str, object]]:
    """Per-row detection bookkeeping: recorded slots, detections (nonzero),
    and for each pairing the row participates in, its coincidence retention."""
    out: dict[str, dict[str, object]] = {}
    for key in ROW_KEYS:
        row = table.row(key)
        recorded = sum(1 for v in row if v is not None)
        fired = sum(1 for v in row if v in (PLUS, MINUS))
        retentions = {}
        for p in PAIRINGS:
            if key in (p.a_row, p.b_row):
                retentions[p.key] = station_retention(table, p)[key]
        out[key] = {
            "recorded": recorded,
            "detections": fired,
            "retention_by_pairing": retentions,
        }
    return out


def _frac_json(x: Fraction | None) -> dict | None:
    if x is None:
        return None
    return {
        "num": x.numerator,
        "den": x.denominator,
        "decimal": float(x),
    }


def correlation_report(table: SeriesTable) -> dict:
    """Everything the analyzer computes for one table, JSON-shaped."""
    detail = chsh_detail(table)
    report: dict = {
        "schema_version": SCHEMA_VERSION,
        "slots": table.slots,
        "fully_measured": table.fully_measured,
        "pairings": {},
        "chsh": {
            "s": _frac_json(detail.s),
            "nc_equal": detail.nc_equal,
            "n_c_common": detail.stats[Pairing.AB].n_c if detail.nc_equal else None,
        },
    }
    for p in PAIRINGS:
        st = detail.stats[p]
        report["pairings"][p.key] = {
            "n_c": st.n_c,
            "total": st.total,
            "e": _frac_json(st.e),
        }
    ch = clauser_horne_j(table)
    report["clauser_horne"] = {
        "j": ch.j,
        "coincidences": {p.key: ch.coincidences[p] for p in PAIRINGS},
        "singles_a": ch.singles_a,
        "singles_b": ch.singles_b,
    }
    eff = efficiency_bound(table)
    report["efficiency"] = {
        "eta": _frac_json(eff.eta),
        "s_times_eta": _frac_json(eff.product),
        "verdict": eff.verdict.value,
        "overlap_fraction": _frac_json(
            overlap_fraction(eff.eta) if eff.eta is not None else None
        ),
        "retention": {
            p.key: {
                row: _frac_json(ratio)
                for row, ratio in station_retention(table, p).items()
            }
            for p in PAIRINGS
        },
        "station_overlap_min": {
            "a": _frac_json(station_overlap_min(table, "a")),
            "a_prime": _frac_json(station_overlap_min(table, "a_prime")),
        },
    }
    if table.fully_measured:
        st = set_stats(table)
        cb = cardinality_bound(table)
        report["set_stats"] = {
            "n_alpha": st.n_alpha,
            "n_beta": st.n_beta,
            "n_alpha_prime": st.n_alpha_prime,
            "n_beta_prime": st.n_beta_prime,
            "n_both_same": st.n_both_same,
            "n_both_diff": st.n_both_diff,
            "n_alpha_beta_beta_prime": st.n_alpha_beta_beta_prime,
            "n_alpha_prime_beta_beta_prime": st.n_alpha_prime_beta_beta_prime,
            "n_alpha_both_same": st.n_alpha_both_same,
            "n_alpha_both_diff": st.n_alpha_both_diff,
            "n_alpha_prime_both_same": st.n_alpha_prime_both_same,
            "n_alpha_prime_both_diff": st.n_alpha_prime_both_diff,
            "same_diff_asymmetry": {
                "alpha": st.n_alpha_both_same - st.n_alpha_both_diff,
                "alpha_prime": st.n_alpha_prime_both_same - st.n_alpha_prime_both_diff,
            },
            "u": {
                "alpha:beta": st.u_ab,
                "alpha:beta_prime": st.u_abp,
                "alpha_prime:beta": st.u_apb,
                "alpha_prime:beta_prime": st.u_apbp,
            },
        }
        report["cardinality_bound"] = {
            "lhs": cb.lhs,
            "rhs": cb.rhs,
            "holds": cb.holds,
            "n_alpha_both_same": cb.n_alpha_both_same,
            "n_alpha_prime_both_diff": cb.n_alpha_prime_both_diff,
        }
    return report
