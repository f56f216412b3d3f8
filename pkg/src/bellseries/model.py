"""Core data model for two-station outcome series.

A measurement run records, for every time slot, which analyzer setting was
active at each of the two stations (A chooses between ``alpha`` and
``alpha_prime``, B between ``beta`` and ``beta_prime``) and the detector
outcome at each station: +1, -1, or 0 for "no detection".

A series table holds the four aligned value series (a, a', b, b') over the
same slots.  A cell is ``None`` where the corresponding setting was not
active, i.e. nothing was or could have been recorded there.  A recorded 0 and
an absent cell are logically different states and are never conflated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import PreconditionError, StructuralError

PLUS = 1
MINUS = -1
ZERO = 0

#: Values a measured cell may take.
MEASURED_VALUES = (PLUS, MINUS, ZERO)

Cell = Optional[int]

ROW_KEYS = ("a", "b", "a_prime", "b_prime")


class ASetting(str, Enum):
    ALPHA = "alpha"
    ALPHA_PRIME = "alpha_prime"

    @property
    def row(self) -> str:
        return "a" if self is ASetting.ALPHA else "a_prime"


class BSetting(str, Enum):
    BETA = "beta"
    BETA_PRIME = "beta_prime"

    @property
    def row(self) -> str:
        return "b" if self is BSetting.BETA else "b_prime"


class Pairing(Enum):
    """One of the four joint setting choices."""

    AB = (ASetting.ALPHA, BSetting.BETA)
    ABP = (ASetting.ALPHA, BSetting.BETA_PRIME)
    APB = (ASetting.ALPHA_PRIME, BSetting.BETA)
    APBP = (ASetting.ALPHA_PRIME, BSetting.BETA_PRIME)

    @property
    def a_setting(self) -> ASetting:
        return self.value[0]

    @property
    def b_setting(self) -> BSetting:
        return self.value[1]

    @property
    def a_row(self) -> str:
        return self.a_setting.row

    @property
    def b_row(self) -> str:
        return self.b_setting.row

    @property
    def key(self) -> str:
        """Stable identifier used in JSON reports, e.g. ``"alpha:beta"``."""
        return f"{self.a_setting.value}:{self.b_setting.value}"


PAIRINGS = (Pairing.AB, Pairing.ABP, Pairing.APB, Pairing.APBP)


def _as_cells(values: Iterable[Cell]) -> tuple[Cell, ...]:
    return tuple(values)


@dataclass(frozen=True)
class SeriesTable:
    """Four aligned outcome series over ``slots`` time slots.

    The constructor stores data as given; use :func:`validate` to obtain a
    report of structural problems instead of an exception.
    """

    slots: int
    a: tuple[Cell, ...]
    b: tuple[Cell, ...]
    a_prime: tuple[Cell, ...]
    b_prime: tuple[Cell, ...]

    def __post_init__(self):
        for key in ROW_KEYS:
            object.__setattr__(self, key, _as_cells(getattr(self, key)))

    @classmethod
    def from_rows(cls, a, b, a_prime, b_prime) -> "SeriesTable":
        """Build a table from four equal-length rows, checking the cells."""
        rows = [_as_cells(r) for r in (a, b, a_prime, b_prime)]
        lengths = {len(r) for r in rows}
        if len(lengths) != 1:
            raise StructuralError(
                f"rows differ in length: {sorted(len(r) for r in rows)}"
            )
        for key, row in zip(ROW_KEYS, rows):
            for i, v in enumerate(row):
                if v is not None and v not in MEASURED_VALUES:
                    raise StructuralError(
                        f"row {key} slot {i}: cell {v!r} is not one of 1, -1, 0, None"
                    )
        return cls(len(rows[0]), *rows)

    def row(self, key: str) -> tuple[Cell, ...]:
        if key not in ROW_KEYS:
            raise KeyError(key)
        return getattr(self, key)

    def rows(self) -> dict[str, tuple[Cell, ...]]:
        return {key: getattr(self, key) for key in ROW_KEYS}

    @property
    def fully_measured(self) -> bool:
        return all(None not in self.row(key) for key in ROW_KEYS)

    def recorded_count(self, key: str) -> int:
        return sum(1 for v in self.row(key) if v is not None)


@dataclass(frozen=True)
class Schedule:
    """Per-slot assignment of analyzer settings to both stations.

    Two schedules are equal when they assign the same settings slot for
    slot; ``kind`` and ``seed`` only describe where the assignment came
    from and survive neither event-log serialization nor comparison.
    """

    kind: str
    a_settings: tuple[ASetting, ...]
    b_settings: tuple[BSetting, ...]
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "a_settings", tuple(self.a_settings))
        object.__setattr__(self, "b_settings", tuple(self.b_settings))
        if len(self.a_settings) != len(self.b_settings):
            raise PreconditionError("schedule station assignments differ in length")

    def __eq__(self, other):
        if not isinstance(other, Schedule):
            return NotImplemented
        return (
            self.a_settings == other.a_settings
            and self.b_settings == other.b_settings
        )

    def __hash__(self):
        return hash((self.a_settings, self.b_settings))

    @property
    def slots(self) -> int:
        return len(self.a_settings)

    def pairing(self, slot: int) -> Pairing:
        return _PAIRING_BY_SETTINGS[(self.a_settings[slot], self.b_settings[slot])]

    def active_count(self, setting: ASetting | BSetting) -> int:
        if isinstance(setting, ASetting):
            return sum(1 for s in self.a_settings if s is setting)
        return sum(1 for s in self.b_settings if s is setting)

    def to_json(self) -> dict:
        data: dict = {
            "kind": self.kind,
            "a_settings": [s.value for s in self.a_settings],
            "b_settings": [s.value for s in self.b_settings],
        }
        if self.seed is not None:
            data["seed"] = self.seed
        return data


_PAIRING_BY_SETTINGS = {(p.a_setting, p.b_setting): p for p in PAIRINGS}


def block_halves(slots: int) -> Schedule:
    """The block layout: A measures alpha on the first half of the slots and
    alpha_prime on the second, while B measures beta on the middle half and
    beta_prime on the outer quarters.

    Requires ``slots`` divisible by 4 so the four contiguous quarters carry
    one setting pair each.
    """
    if slots % 4 != 0:
        raise PreconditionError(
            f"block-halves schedule needs a slot count divisible by 4, got {slots}"
        )
    quarter = slots // 4
    a = [ASetting.ALPHA] * (2 * quarter) + [ASetting.ALPHA_PRIME] * (2 * quarter)
    b = (
        [BSetting.BETA_PRIME] * quarter
        + [BSetting.BETA] * (2 * quarter)
        + [BSetting.BETA_PRIME] * quarter
    )
    return Schedule("block", tuple(a), tuple(b))


def random_per_slot(slots: int, seed: int) -> Schedule:
    """Independent uniform setting choices at both stations, seeded."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    a_bits = rng.integers(0, 2, size=slots)
    b_bits = rng.integers(0, 2, size=slots)
    a = tuple(ASetting.ALPHA if bit == 0 else ASetting.ALPHA_PRIME for bit in a_bits)
    b = tuple(BSetting.BETA if bit == 0 else BSetting.BETA_PRIME for bit in b_bits)
    return Schedule("random", a, b, seed=seed)


def custom_schedule(a_settings: Sequence[ASetting], b_settings: Sequence[BSetting]) -> Schedule:
    return Schedule("custom", tuple(a_settings), tuple(b_settings))


def schedule_from_json(data: dict) -> Schedule:
    try:
        a = tuple(ASetting(v) for v in data["a_settings"])
        b = tuple(BSetting(v) for v in data["b_settings"])
    except (KeyError, ValueError, TypeError) as exc:
        raise PreconditionError(f"bad schedule data: {exc}") from exc
    return Schedule(data.get("kind", "custom"), a, b, seed=data.get("seed"))


@dataclass(frozen=True, eq=False)
class RecordedRun:
    """A run: one setting pair and one outcome pair per slot.

    Outcomes are integers in {+1, -1, 0}; at most one detector fires per
    station per slot, which the single signed value per station encodes by
    construction.  ``meta`` carries provenance (simulator configuration,
    seeds, generator name) and does not take part in equality.
    """

    schedule: Schedule
    a_outcomes: tuple[int, ...]
    b_outcomes: tuple[int, ...]
    meta: dict | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "a_outcomes", tuple(self.a_outcomes))
        object.__setattr__(self, "b_outcomes", tuple(self.b_outcomes))
        n = self.schedule.slots
        if len(self.a_outcomes) != n or len(self.b_outcomes) != n:
            raise PreconditionError("run outcome series must match the schedule length")
        for series in (self.a_outcomes, self.b_outcomes):
            for v in series:
                if v not in MEASURED_VALUES:
                    raise PreconditionError(f"outcome {v!r} not one of +1, -1, 0")

    @property
    def slots(self) -> int:
        return self.schedule.slots

    def __eq__(self, other):
        if not isinstance(other, RecordedRun):
            return NotImplemented
        return (
            self.schedule == other.schedule
            and self.a_outcomes == other.a_outcomes
            and self.b_outcomes == other.b_outcomes
        )


def table_from_run(run: RecordedRun) -> SeriesTable:
    """Lay the recorded outcomes into the four series; cells under inactive
    settings stay unmeasured."""
    rows: dict[str, list[Cell]] = {key: [None] * run.slots for key in ROW_KEYS}
    for i in range(run.slots):
        rows[run.schedule.a_settings[i].row][i] = run.a_outcomes[i]
        rows[run.schedule.b_settings[i].row][i] = run.b_outcomes[i]
    return SeriesTable.from_rows(rows["a"], rows["b"], rows["a_prime"], rows["b_prime"])


def derive_schedule(table: SeriesTable) -> Schedule:
    """Recover the setting schedule from a run-derived table.

    Requires exactly one of (a, a') and one of (b, b') measured per slot.
    """
    a_settings: list[ASetting] = []
    b_settings: list[BSetting] = []
    for i in range(table.slots):
        a_meas = table.a[i] is not None
        ap_meas = table.a_prime[i] is not None
        b_meas = table.b[i] is not None
        bp_meas = table.b_prime[i] is not None
        if a_meas == ap_meas:
            raise PreconditionError(
                f"slot {i}: expected exactly one measured A cell, table is not run-derived"
            )
        if b_meas == bp_meas:
            raise PreconditionError(
                f"slot {i}: expected exactly one measured B cell, table is not run-derived"
            )
        a_settings.append(ASetting.ALPHA if a_meas else ASetting.ALPHA_PRIME)
        b_settings.append(BSetting.BETA if b_meas else BSetting.BETA_PRIME)
    return custom_schedule(a_settings, b_settings)


def run_from_table(table: SeriesTable, meta: dict | None = None) -> RecordedRun:
    """Inverse of :func:`table_from_run` for run-derived tables."""
    schedule = derive_schedule(table)
    a_out = tuple(table.row(schedule.a_settings[i].row)[i] for i in range(table.slots))
    b_out = tuple(table.row(schedule.b_settings[i].row)[i] for i in range(table.slots))
    return RecordedRun(schedule, a_out, b_out, meta=meta)


def project_table(table: SeriesTable, schedule: Schedule, meta: dict | None = None) -> RecordedRun:
    """Sample a fully measured table through a schedule of the same length,
    reading each active row at the same slot index."""
    if not table.fully_measured:
        raise PreconditionError("projection needs a fully measured table")
    if schedule.slots != table.slots:
        raise PreconditionError(
            f"schedule has {schedule.slots} slots but the table has {table.slots}"
        )
    a_out = tuple(table.row(schedule.a_settings[i].row)[i] for i in range(table.slots))
    b_out = tuple(table.row(schedule.b_settings[i].row)[i] for i in range(table.slots))
    return RecordedRun(schedule, a_out, b_out, meta=meta)


def pairing_blocks(run: RecordedRun) -> dict[Pairing, list[int]]:
    """Slots grouped by the active setting pair, each group in time order."""
    blocks: dict[Pairing, list[int]] = {p: [] for p in PAIRINGS}
    for i in range(run.slots):
        blocks[run.schedule.pairing(i)].append(i)
    return blocks


@dataclass(frozen=True)
class Violation:
    rule: str
    detail: str
    row: str | None = None
    slot: int | None = None


def validate(table: SeriesTable, schedule: Schedule | None = None) -> list[Violation]:
    """Report structural problems with a table.  Never raises.

    With a schedule, additionally checks that measured cells sit exactly
    under the active settings.
    """
    out: list[Violation] = []
    for key in ROW_KEYS:
        row = table.row(key)
        if len(row) != table.slots:
            out.append(
                Violation(
                    "row-length",
                    f"row {key} has {len(row)} cells, expected {table.slots}",
                    row=key,
                )
            )
            continue
        for i, v in enumerate(row):
            if v is not None and v not in MEASURED_VALUES:
                out.append(
                    Violation(
                        "cell-domain",
                        f"row {key} slot {i} holds {v!r}, not +1/-1/0/unmeasured",
                        row=key,
                        slot=i,
                    )
                )
    if schedule is not None and schedule.slots == table.slots and not out:
        for i in range(table.slots):
            active = {schedule.a_settings[i].row, schedule.b_settings[i].row}
            for key in ROW_KEYS:
                v = table.row(key)[i]
                if key in active and v is None:
                    out.append(
                        Violation(
                            "active-unmeasured",
                            f"row {key} slot {i} is active but holds no value",
                            row=key,
                            slot=i,
                        )
                    )
                if key not in active and v is not None:
                    out.append(
                        Violation(
                            "inactive-measured",
                            f"row {key} slot {i} is inactive but holds {v}",
                            row=key,
                            slot=i,
                        )
                    )
    elif schedule is not None and schedule.slots != table.slots:
        out.append(
            Violation(
                "schedule-length",
                f"schedule covers {schedule.slots} slots, table has {table.slots}",
            )
        )
    return out
