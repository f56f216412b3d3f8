"""Run generation: correlated two-station sources and table replay.

The quantum-style source draws joint sign outcomes from a configurable
correlation law E(theta_A, theta_B) with unbiased marginals:

    P(same sign) = (1 + E) / 2,  split evenly between ++ and --
    P(opposite)  = (1 - E) / 2,  split evenly between +- and -+

The deterministic source reads outcomes from a fixed instruction table.
Detection losses erase outcomes to 0 independently per station per slot.

RNG contract: all randomness comes from numpy's PCG64 seeded with the
config seed.  Per slot the quantum model consumes, in this order, four
uniform streams drawn as whole arrays: ``s`` (sign agreement), ``t``
(common sign), ``u_a`` (station A erasure), ``u_b`` (station B erasure).
The deterministic model consumes only ``u_a`` and ``u_b``.  This order is
part of the reproducibility contract and is echoed in the run metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import PreconditionError
from .model import (
    MINUS,
    PAIRINGS,
    PLUS,
    ROW_KEYS,
    Pairing,
    RecordedRun,
    Schedule,
    SeriesTable,
    project_table,
)

#: Analyzer angles (alpha, alpha_prime, beta, beta_prime) in degrees that
#: maximize the CHSH combination under the cosine correlation law.
DEFAULT_ANGLES = (0.0, 45.0, 22.5, 67.5)

GENERATOR_NAME = "numpy-pcg64"


def cosine_correlation(theta_a: float, theta_b: float) -> float:
    """E(theta_A, theta_B) = cos 2(theta_A - theta_B), angles in degrees."""
    return math.cos(2.0 * math.radians(theta_a - theta_b))


@dataclass(frozen=True)
class SourceConfig:
    model: str
    schedule: Schedule
    seed: int
    angles: tuple[float, float, float, float] = DEFAULT_ANGLES
    eta: float = 1.0
    instructions: SeriesTable | None = None
    correlation: Callable[[float, float], float] | None = None

    def __post_init__(self):
        if self.model not in ("quantum", "deterministic"):
            raise PreconditionError(f"unknown source model {self.model!r}")
        if not 0.0 <= self.eta <= 1.0:
            raise PreconditionError(f"efficiency must lie in [0, 1], got {self.eta}")
        if len(self.angles) != 4:
            raise PreconditionError("angles must be (alpha, alpha_prime, beta, beta_prime)")
        if self.model == "deterministic":
            if self.instructions is None:
                raise PreconditionError("deterministic model needs an instruction table")
            if not self.instructions.fully_measured:
                raise PreconditionError("instruction table must be fully measured")
        else:
            for p in PAIRINGS:
                e = self.pairing_correlation(p)
                if not -1.0 <= e <= 1.0:
                    raise PreconditionError(
                        f"correlation law gives E={e} for {p.key}, outside [-1, 1]"
                    )

    def pairing_angles(self, pairing: Pairing) -> tuple[float, float]:
        theta_a = self.angles[0] if pairing.a_row == "a" else self.angles[1]
        theta_b = self.angles[2] if pairing.b_row == "b" else self.angles[3]
        return theta_a, theta_b

    def pairing_correlation(self, pairing: Pairing) -> float:
        law = self.correlation or cosine_correlation
        return law(*self.pairing_angles(pairing))


def expected_chsh(config: SourceConfig) -> float:
    """The CHSH value implied by the configured correlation law alone."""
    e = {p: config.pairing_correlation(p) for p in PAIRINGS}
    return abs(e[Pairing.AB] - e[Pairing.ABP]) + abs(e[Pairing.APB] + e[Pairing.APBP])


def _meta(config: SourceConfig, draw_order: str) -> dict:
    meta = {
        "model": config.model,
        "seed": config.seed,
        "eta": config.eta,
        "slots": config.schedule.slots,
        "schedule": config.schedule.kind,
        "generator": GENERATOR_NAME,
        "draw_order": draw_order,
    }
    if config.model == "quantum":
        meta["angles"] = list(config.angles)
    else:
        meta["instruction_slots"] = config.instructions.slots
    if config.schedule.seed is not None:
        meta["schedule_seed"] = config.schedule.seed
    return meta


def simulate(config: SourceConfig) -> RecordedRun:
    """Generate a run from the configured source, schedule, and efficiency.

    Bit-exact reproducible: the same config (seed included) always yields
    the same run.
    """
    n = config.schedule.slots
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed)))
    if config.model == "quantum":
        s = rng.random(n)
        t = rng.random(n)
        u_a = rng.random(n)
        u_b = rng.random(n)
        e_by_pairing = {p: config.pairing_correlation(p) for p in PAIRINGS}
        a_out = []
        b_out = []
        for i in range(n):
            e = e_by_pairing[config.schedule.pairing(i)]
            same = s[i] < (1.0 + e) / 2.0
            sign = PLUS if t[i] < 0.5 else MINUS
            a = sign
            b = sign if same else -sign
            if u_a[i] >= config.eta:
                a = 0
            if u_b[i] >= config.eta:
                b = 0
            a_out.append(a)
            b_out.append(b)
        return RecordedRun(
            config.schedule, tuple(a_out), tuple(b_out), meta=_meta(config, "s,t,u_a,u_b")
        )

    u_a = rng.random(n)
    u_b = rng.random(n)
    table = config.instructions
    a_out = []
    b_out = []
    for i in range(n):
        j = i % table.slots
        a = table.row(config.schedule.a_settings[i].row)[j]
        b = table.row(config.schedule.b_settings[i].row)[j]
        if u_a[i] >= config.eta:
            a = 0
        if u_b[i] >= config.eta:
            b = 0
        a_out.append(a)
        b_out.append(b)
    return RecordedRun(
        config.schedule, tuple(a_out), tuple(b_out), meta=_meta(config, "u_a,u_b")
    )


def replay(table: SeriesTable, schedule: Schedule, meta: dict | None = None) -> RecordedRun:
    """Expose a fully measured table through a measurement schedule.

    Two layouts are supported:

    * schedule of the same length: read the active rows at the same slot;
    * schedule of twice the length, activating every row exactly
      ``table.slots`` times: each row is consumed in slot order, so the
      k-th slot where a row's setting is active reads that row's k-th
      value.  This is how a table over T joint slots spreads over 2T
      single-setting slots.
    """
    if not table.fully_measured:
        raise PreconditionError("replay needs a fully measured table")
    if meta is None:
        meta = {"generator": "replay", "source_slots": table.slots}
    if schedule.slots == table.slots:
        return project_table(table, schedule, meta=meta)
    if schedule.slots == 2 * table.slots:
        active = {key: 0 for key in ROW_KEYS}
        for i in range(schedule.slots):
            active[schedule.a_settings[i].row] += 1
            active[schedule.b_settings[i].row] += 1
        bad = {k: v for k, v in active.items() if v != table.slots}
        if bad:
            raise PreconditionError(
                f"sequential replay needs every row active exactly {table.slots} "
                f"times, got {bad}"
            )
        cursor = {key: 0 for key in ROW_KEYS}
        a_out = []
        b_out = []
        for i in range(schedule.slots):
            row = schedule.a_settings[i].row
            a_out.append(table.row(row)[cursor[row]])
            cursor[row] += 1
            row = schedule.b_settings[i].row
            b_out.append(table.row(row)[cursor[row]])
            cursor[row] += 1
        return RecordedRun(schedule, tuple(a_out), tuple(b_out), meta=meta)
    raise PreconditionError(
        f"schedule must cover {table.slots} or {2 * table.slots} slots, "
        f"got {schedule.slots}"
    )
