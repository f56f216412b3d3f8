"""Exhaustive ground truth at small sizes.

Every bound the statistics module reports is re-derived here by brute
force: tables are enumerated outright and the extremal value of the
quantity in question is measured, not assumed.  The search spaces are tiny
by design (tens of millions of tables at most), so the sweeps stay exact.

Enumeration order is fixed and documented so witnesses are reproducible:
a table is a base-K numeral whose digits are its slot columns, first slot
most significant; a column (a, b, a', b') is indexed lexicographically with
cell values ordered -1 < 0 < +1.  Identity-constrained sweeps enumerate the
free cells of the block layout instead (see :func:`_sica_component`) and
order witnesses by that free-cell numeral.

Scans run as a half-table meet: property vectors are precomputed for every
left and right half, and objectives are evaluated on their sums in bulk.
All discriminating comparisons happen on integers or on floats whose
nearest distinct exact values differ by far more than the roundoff (counts
are at most 8, so every ratio is a fraction with a tiny denominator); the
reported maximum itself is recomputed exactly from the witness.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import BudgetExceeded, PreconditionError
from .model import (
    PAIRINGS,
    ROW_KEYS,
    ASetting,
    BSetting,
    RecordedRun,
    SeriesTable,
    block_halves,
    table_from_run,
)
from .sica import _is_block_halves, check_sica
from .stats import chsh, clauser_horne_j, correlation_over_slots, table_eta

DEFAULT_BUDGET = 2**26

_PROPS = 15
_U1, _U2, _U3, _U4 = 0, 1, 2, 3
_N1, _N2, _N3, _N4 = 4, 5, 6, 7
_NA, _NB, _NAP, _NBP = 8, 9, 10, 11
_QBS, _QBD = 12, 13
_JT = 14

_VALUES = {"pm": (-1, 1), "pmz": (-1, 0, 1)}

Constraint = object  # None | "equal_nc" | "sica" | (kind, Fraction)


@dataclass(frozen=True)
class EnumSpec:
    """One exhaustive sweep: table size, cell alphabet, admissibility
    constraint, and the size ceiling the sweep refuses to exceed."""

    slots: int
    alphabet: str = "pm"
    constraint: Constraint = None
    budget: int = DEFAULT_BUDGET

    @property
    def space_size(self) -> int:
        k = len(_VALUES[self.alphabet])
        if self.constraint == "sica":
            return k ** (2 * self.slots)
        return k ** (4 * self.slots)

    def validate(self) -> None:
        if self.alphabet not in _VALUES:
            raise PreconditionError(f"alphabet must be 'pm' or 'pmz', got {self.alphabet!r}")
        if self.slots < 1:
            raise PreconditionError(f"need at least one slot, got {self.slots}")
        if self.constraint == "sica" and self.slots not in (4, 8):
            raise PreconditionError(
                "identity-constrained sweeps support 4 or 8 slots "
                f"(block layout), got {self.slots}"
            )
        if isinstance(self.constraint, tuple):
            kind, q = self.constraint
            if kind not in ("eta_at_least", "eta_at_most", "eta_below"):
                raise PreconditionError(f"unknown constraint {self.constraint!r}")
            if not 0 <= q <= 1:
                raise PreconditionError(f"efficiency threshold out of range: {q}")
        elif self.constraint not in (None, "equal_nc", "sica"):
            raise PreconditionError(f"unknown constraint {self.constraint!r}")
        if self.space_size > self.budget:
            raise BudgetExceeded(
                f"sweep needs {self.space_size} tables, budget is {self.budget}",
                required=self.space_size,
            )


@dataclass(frozen=True)
class ExtremalResult:
    max_value: Fraction | None
    witnesses: tuple[SeriesTable, ...]
    tables_scanned: int
    admissible: int
    space_size: int
    elapsed: float
    note: str = ""


@dataclass(frozen=True)
class CardinalitySweep:
    tables_scanned: int
    violations: int
    min_slack: int | None
    witness: SeriesTable | None
    elapsed: float


@dataclass(frozen=True)
class CensusResult:
    count: int
    construction_count: int | None
    samples: tuple[SeriesTable, ...]
    space_size: int
    elapsed: float


# ---------------------------------------------------------------------------
# Property tables and half enumerations


@lru_cache(maxsize=None)
def _column_classes(alphabet: str) -> tuple[tuple[int, int, int, int], ...]:
    return tuple(itertools.product(_VALUES[alphabet], repeat=4))


@lru_cache(maxsize=None)
def _column_props(alphabet: str) -> np.ndarray:
    classes = _column_classes(alphabet)
    out = np.zeros((len(classes), _PROPS), dtype=np.int64)
    for idx, (a, b, ap, bp) in enumerate(classes):
        ia, ib = int(a == 1), int(b == 1)
        iap, ibp = int(ap == 1), int(bp == 1)
        out[idx] = (
            a * b,
            a * bp,
            ap * b,
            ap * bp,
            abs(a * b),
            abs(a * bp),
            abs(ap * b),
            abs(ap * bp),
            abs(a),
            abs(b),
            abs(ap),
            abs(bp),
            abs(a) if (b != 0 and b == bp) else 0,
            abs(ap) if (b != 0 and bp != 0 and b != bp) else 0,
            ia * ib + ia * ibp + iap * ib - iap * ibp - ia - ib,
        )
    return out


@lru_cache(maxsize=None)
def _prefix_props(alphabet: str, n_slots: int) -> np.ndarray:
    """Property vectors of every column sequence of the given length,
    indexed by the base-K numeral with the first slot most significant."""
    col = _column_props(alphabet)
    out = np.zeros((1, _PROPS), dtype=np.int64)
    for _ in range(n_slots):
        out = (out[:, None, :] + col[None, :, :]).reshape(-1, _PROPS)
    return out


# The identity-constrained grid.  Under the block layout each row is two
# interleaved copies of its free half, which couples the slots into two
# independent groups; each group is 4 slots driven by 8 free cells, and both
# groups share the same structure:
_COMPONENT_SLOT_VARS = ((0, 2, 4, 6), (0, 3, 4, 7), (1, 2, 5, 6), (1, 3, 5, 7))


@lru_cache(maxsize=None)
def _sica_component(alphabet: str) -> np.ndarray:
    values = _VALUES[alphabet]
    k = len(values)
    n = k**8
    idx = np.arange(n)
    digits = np.empty((n, 8), dtype=np.int64)
    for j in range(8):
        digits[:, j] = (idx // k ** (7 - j)) % k
    col = _column_props(alphabet)
    out = np.zeros((n, _PROPS), dtype=np.int64)
    for va, vb, vap, vbp in _COMPONENT_SLOT_VARS:
        cls = (
            (digits[:, va] * k + digits[:, vb]) * k + digits[:, vap]
        ) * k + digits[:, vbp]
        out += col[cls]
    return out


def _halves(spec: EnumSpec) -> tuple[np.ndarray, np.ndarray]:
    if spec.constraint == "sica":
        grid = _sica_component(spec.alphabet)
        if spec.slots == 4:
            return grid, np.zeros((1, _PROPS), dtype=np.int64)
        return grid, grid
    left = spec.slots // 2
    return (
        _prefix_props(spec.alphabet, left),
        _prefix_props(spec.alphabet, spec.slots - left),
    )


# ---------------------------------------------------------------------------
# Witness reconstruction


def _digits(value: int, base: int, width: int) -> list[int]:
    out = []
    for j in range(width):
        out.append((value // base ** (width - 1 - j)) % base)
    return out


def _table_from_index(spec: EnumSpec, global_idx: int, n_right: int) -> SeriesTable:
    li, ri = divmod(global_idx, n_right)
    values = _VALUES[spec.alphabet]
    k = len(values)
    if spec.constraint == "sica":
        va = [values[d] for d in _digits(li, k, 8)]
        if spec.slots == 4:
            v = va
            return SeriesTable.from_rows(
                a=(v[0], v[0], v[1], v[1]),
                b=(v[2], v[3], v[2], v[3]),
                a_prime=(v[4], v[4], v[5], v[5]),
                b_prime=(v[6], v[7], v[6], v[7]),
            )
        vb = [values[d] for d in _digits(ri, k, 8)]
        return SeriesTable.from_rows(
            a=(va[0], vb[0], va[0], vb[0], va[1], vb[1], va[1], vb[1]),
            b=(va[2], vb[2], va[3], vb[3], va[2], vb[2], va[3], vb[3]),
            a_prime=(va[4], vb[4], va[4], vb[4], va[5], vb[5], va[5], vb[5]),
            b_prime=(va[6], vb[6], va[7], vb[7], va[6], vb[6], va[7], vb[7]),
        )
    classes = _column_classes(spec.alphabet)
    kk = len(classes)
    left = spec.slots // 2
    cols = [classes[d] for d in _digits(li, kk, left)]
    cols += [classes[d] for d in _digits(ri, kk, spec.slots - left)]
    return SeriesTable.from_rows(
        a=[c[0] for c in cols],
        b=[c[1] for c in cols],
        a_prime=[c[2] for c in cols],
        b_prime=[c[3] for c in cols],
    )


# ---------------------------------------------------------------------------
# Objectives (vectorized floats for the scan, exact rationals at the end)

_NEG = -np.inf


def _constraint_mask(spec: EnumSpec, c: np.ndarray) -> np.ndarray:
    mask = np.ones(len(c), dtype=bool)
    if spec.constraint == "equal_nc":
        mask &= (
            (c[:, _N1] == c[:, _N2])
            & (c[:, _N1] == c[:, _N3])
            & (c[:, _N1] == c[:, _N4])
            & (c[:, _N1] >= 1)
        )
    elif isinstance(spec.constraint, tuple):
        kind, q = spec.constraint
        qn, qd = q.numerator, q.denominator
        pairs = (
            (_N1, _NA), (_N1, _NB),
            (_N2, _NA), (_N2, _NBP),
            (_N3, _NAP), (_N3, _NB),
            (_N4, _NAP), (_N4, _NBP),
        )
        defined = (c[:, [_NA, _NB, _NAP, _NBP]] >= 1).all(axis=1)
        if kind == "eta_at_least":
            ok = defined.copy()
            for ni, nr in pairs:
                ok &= c[:, ni] * qd >= qn * c[:, nr]
        elif kind == "eta_at_most":
            any_le = np.zeros(len(c), dtype=bool)
            for ni, nr in pairs:
                any_le |= c[:, ni] * qd <= qn * c[:, nr]
            ok = defined & any_le
        else:  # eta_below, strict
            any_lt = np.zeros(len(c), dtype=bool)
            for ni, nr in pairs:
                any_lt |= c[:, ni] * qd < qn * c[:, nr]
            ok = defined & any_lt
        mask &= ok
    return mask


def _chsh_vals(c: np.ndarray) -> np.ndarray:
    ok = (c[:, _N1:_N4 + 1] >= 1).all(axis=1)
    n = np.where(c[:, _N1:_N4 + 1] == 0, 1, c[:, _N1:_N4 + 1]).astype(np.float64)
    e = c[:, _U1:_U4 + 1] / n
    s = np.abs(e[:, 0] - e[:, 1]) + np.abs(e[:, 2] + e[:, 3])
    return np.where(ok, s, _NEG)


def _eta_vals(c: np.ndarray) -> np.ndarray:
    singles = c[:, [_NA, _NB, _NAP, _NBP]]
    ok = (singles >= 1).all(axis=1)
    safe = np.where(singles == 0, 1, singles).astype(np.float64)
    ratios = np.stack(
        [
            c[:, _N1] / safe[:, 0], c[:, _N1] / safe[:, 1],
            c[:, _N2] / safe[:, 0], c[:, _N2] / safe[:, 3],
            c[:, _N3] / safe[:, 2], c[:, _N3] / safe[:, 1],
            c[:, _N4] / safe[:, 2], c[:, _N4] / safe[:, 3],
        ],
        axis=1,
    )
    return np.where(ok, ratios.min(axis=1), _NEG)


def _s_eta_vals(c: np.ndarray) -> np.ndarray:
    s = _chsh_vals(c)
    eta = _eta_vals(c)
    ok = (s > _NEG) & (eta > _NEG)
    return np.where(ok, np.where(ok, s, 0.0) * np.where(ok, eta, 0.0), _NEG)


def _ch_vals(c: np.ndarray) -> np.ndarray:
    return c[:, _JT].astype(np.float64)


def _exact_chsh(table: SeriesTable) -> Fraction | None:
    return chsh(table)


def _exact_s_eta(table: SeriesTable) -> Fraction | None:
    s = chsh(table)
    eta = table_eta(table)
    if s is None or eta is None:
        return None
    return s * eta


def _exact_ch(table: SeriesTable) -> Fraction:
    return Fraction(clauser_horne_j(table).j)


_OBJECTIVES = {
    "chsh": (_chsh_vals, _exact_chsh),
    "s_eta": (_s_eta_vals, _exact_s_eta),
    "ch": (_ch_vals, _exact_ch),
}

# Exact values here are ratios of counts bounded by the slot budget, so any
# two distinct candidates differ by at least 1/(2^30); a comfortably larger
# tolerance still cannot merge them, while float roundoff stays below 1e-12.
_TIE_TOL = 1e-9


def _scan_max(spec: EnumSpec, objective: str, witness_cap: int) -> ExtremalResult:
    spec.validate()
    t0 = time.perf_counter()
    vals_fn, exact_fn = _OBJECTIVES[objective]
    left, right = _halves(spec)
    n_right = len(right)
    best = _NEG
    admissible = 0
    for i in range(len(left)):
        c = left[i] + right
        mask = _constraint_mask(spec, c)
        vals = np.where(mask, vals_fn(c), _NEG)
        admissible += int(np.count_nonzero(vals > _NEG))
        m = vals.max()
        if m > best:
            best = m
    scanned = len(left) * n_right
    if best == _NEG:
        return ExtremalResult(
            None, (), scanned, 0, spec.space_size,
            time.perf_counter() - t0, note="no table satisfies the constraint",
        )
    hits: list[int] = []
    for i in range(len(left)):
        c = left[i] + right
        mask = _constraint_mask(spec, c)
        vals = np.where(mask, vals_fn(c), _NEG)
        for j in np.flatnonzero(vals >= best - _TIE_TOL):
            hits.append(i * n_right + int(j))
            if len(hits) >= witness_cap:
                break
        if len(hits) >= witness_cap:
            break
    witnesses = tuple(_table_from_index(spec, h, n_right) for h in hits)
    exact_values = [exact_fn(w) for w in witnesses]
    max_value = exact_values[0]
    for w, v in zip(witnesses, exact_values):
        if v != max_value:
            raise AssertionError(
                f"witness disagreement: {v} != {max_value} for {w}"
            )
        if spec.constraint == "sica":
            if not check_sica(w, block_halves(spec.slots)).holds:
                raise AssertionError("constrained witness fails the identity check")
    return ExtremalResult(
        max_value,
        witnesses,
        scanned,
        admissible,
        spec.space_size,
        time.perf_counter() - t0,
    )


def max_chsh(spec: EnumSpec, witness_cap: int = 3) -> ExtremalResult:
    """Exact maximum of the CHSH combination over every admissible table."""
    return _scan_max(spec, "chsh", witness_cap)


def max_clauser_horne(spec: EnumSpec, witness_cap: int = 3) -> ExtremalResult:
    """Exact maximum of the count-based CH combination (an integer)."""
    return _scan_max(spec, "ch", witness_cap)


def max_s_eta(spec: EnumSpec, witness_cap: int = 3) -> ExtremalResult:
    """Exact maximum of S times the table's working efficiency."""
    return _scan_max(spec, "s_eta", witness_cap)


def sweep_cardinality_bound(spec: EnumSpec) -> CardinalitySweep:
    """Check the counting inequality on every admissible table.

    The left side |u1 - u2| + |u3 + u4| is compared against the coincidence
    total minus twice the two overlap-census corrections; the sweep reports
    how many tables violate it (expected: none, it is a term-counting
    identity) and the smallest slack together with a table attaining it.
    """
    if spec.alphabet != "pmz":
        raise PreconditionError("the counting bound concerns {+1,-1,0} tables")
    spec.validate()
    t0 = time.perf_counter()
    left, right = _halves(spec)
    n_right = len(right)
    violations = 0
    min_slack: int | None = None
    first_idx: int | None = None
    for i in range(len(left)):
        c = left[i] + right
        lhs = np.abs(c[:, _U1] - c[:, _U2]) + np.abs(c[:, _U3] + c[:, _U4])
        rhs = (
            c[:, _N1] + c[:, _N2] + c[:, _N3] + c[:, _N4]
            - 2 * c[:, _QBS] - 2 * c[:, _QBD]
        )
        slack = rhs - lhs
        violations += int(np.count_nonzero(slack < 0))
        m = int(slack.min())
        if min_slack is None or m < min_slack:
            min_slack = m
            first_idx = i * n_right + int(np.flatnonzero(slack == m)[0])
    witness = (
        _table_from_index(spec, first_idx, n_right) if first_idx is not None else None
    )
    return CardinalitySweep(
        len(left) * n_right, violations, min_slack, witness, time.perf_counter() - t0
    )


def census_complete_tables(
    run: RecordedRun, budget: int = DEFAULT_BUDGET, sample_cap: int = 64
) -> CensusResult:
    """Count every fully measured +-1 extension of a run's factual cells
    that satisfies the series identity under the run's schedule.

    Factual cells keep their values, so factual correlations are preserved
    by construction; the census is over the never-measured cells only,
    filled from the numeral's bits (0 as minus, 1 as plus, first missing
    cell most significant, cells ordered by row then slot).
    """
    t0 = time.perf_counter()
    base = table_from_run(run)
    rows = {key: list(base.row(key)) for key in ROW_KEYS}
    missing = [
        (key, i) for key in ROW_KEYS for i in range(base.slots) if rows[key][i] is None
    ]
    space = 1 << len(missing)
    if space > budget:
        raise BudgetExceeded(
            f"census needs {space} extensions, budget is {budget}", required=space
        )
    pair_checks: list[tuple[str, int, int]] = []
    schedule = run.schedule
    for key in ROW_KEYS:
        if key in ("a", "a_prime"):
            lefts = [i for i in range(schedule.slots) if schedule.b_settings[i] is BSetting.BETA]
            rights = [
                i for i in range(schedule.slots)
                if schedule.b_settings[i] is BSetting.BETA_PRIME
            ]
        else:
            lefts = [i for i in range(schedule.slots) if schedule.a_settings[i] is ASetting.ALPHA]
            rights = [
                i for i in range(schedule.slots)
                if schedule.a_settings[i] is ASetting.ALPHA_PRIME
            ]
        if len(lefts) != len(rights):
            return CensusResult(0, None, (), space, time.perf_counter() - t0)
        pair_checks.extend((key, l, r) for l, r in zip(lefts, rights))
    construction_count = None
    if (
        run.slots % 4 == 0
        and run.slots > 0
        and _is_block_halves(schedule)
        and all(v != 0 for v in run.a_outcomes)
        and all(v != 0 for v in run.b_outcomes)
    ):
        construction_count = 1 << (run.slots // 2)
    count = 0
    samples: list[SeriesTable] = []
    width = len(missing)
    for numeral in range(space):
        for j, (key, slot) in enumerate(missing):
            bit = (numeral >> (width - 1 - j)) & 1
            rows[key][slot] = 1 if bit else -1
        if all(rows[key][l] == rows[key][r] for key, l, r in pair_checks):
            count += 1
            if len(samples) < sample_cap:
                samples.append(
                    SeriesTable.from_rows(
                        rows["a"], rows["b"], rows["a_prime"], rows["b_prime"]
                    )
                )
    for sample in samples:
        for p in PAIRINGS:
            factual = [
                i
                for i in range(run.slots)
                if schedule.a_settings[i] is p.a_setting
                and schedule.b_settings[i] is p.b_setting
            ]
            got = correlation_over_slots(sample, p, factual)
            want = correlation_over_slots(base, p, factual)
            if got.n_c != want.n_c or got.total != want.total:
                raise AssertionError("census sample does not preserve factual counts")
    return CensusResult(
        count, construction_count, tuple(samples), space, time.perf_counter() - t0
    )
