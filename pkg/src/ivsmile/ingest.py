"""Option-chain snapshot files: parsing, validation, serialization, grouping.

One CSV row is one (moneyness, IV) observation. Rows sharing
``(ticker, snapshot_date, ead_date, expiry_days)`` form a snapshot.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, NamedTuple

from .errors import AmbiguousPhase, EmptyFile, InvariantViolation, MalformedRow

COLUMNS = (
    "ticker",
    "snapshot_date",
    "ead_date",
    "phase",
    "expiry_days",
    "spot",
    "rate",
    "moneyness",
    "iv",
)
REQUIRED_COLUMNS = tuple(c for c in COLUMNS if c not in ("phase", "rate"))

IV_UPPER_BOUND = 10.0
DEFAULT_RATE = 0.0


class Phase(str, Enum):
    BEFORE = "before"
    ON = "on"
    AFTER = "after"

    @classmethod
    def infer(cls, snapshot_date: dt.date, ead_date: dt.date) -> Phase:
        if snapshot_date < ead_date:
            return cls.BEFORE
        if snapshot_date > ead_date:
            return cls.AFTER
        return cls.ON


@dataclass(frozen=True)
class IvObservation:
    moneyness: float
    iv: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.moneyness) and self.moneyness > 0):
            raise InvariantViolation(f"moneyness must be > 0, got {self.moneyness!r}")
        if not (math.isfinite(self.iv) and 0 < self.iv < IV_UPPER_BOUND):
            raise InvariantViolation(
                f"iv must lie in (0, {IV_UPPER_BOUND}), got {self.iv!r}"
            )


@dataclass(frozen=True)
class ChainSnapshot:
    """Observed smile for one ticker, date and expiry, plus market context."""

    ticker: str
    snapshot_date: dt.date
    ead_date: dt.date
    phase: Phase
    expiry_days: int
    spot: float
    rate: float
    observations: tuple[IvObservation, ...]

    def __post_init__(self) -> None:
        if not self.ticker:
            raise InvariantViolation("ticker must be non-empty")
        if len(self.observations) < 3:
            raise InvariantViolation(
                f"{self.key_label}: need >= 3 observations, got {len(self.observations)}"
            )
        ms = [o.moneyness for o in self.observations]
        for a, b in zip(ms, ms[1:]):
            if b == a:
                raise InvariantViolation(f"{self.key_label}: duplicate moneyness {a!r}")
            if b < a:
                raise InvariantViolation(
                    f"{self.key_label}: observations not sorted by moneyness"
                )
        if isinstance(self.expiry_days, bool) or self.expiry_days < 1:
            raise InvariantViolation(f"{self.key_label}: expiry_days must be >= 1")
        if not (math.isfinite(self.spot) and self.spot > 0):
            raise InvariantViolation(f"{self.key_label}: spot must be > 0")
        if not math.isfinite(self.rate):
            raise InvariantViolation(f"{self.key_label}: rate must be finite")
        if Phase.infer(self.snapshot_date, self.ead_date) is not self.phase:
            raise InvariantViolation(
                f"{self.key_label}: phase {self.phase.value!r} inconsistent with "
                f"snapshot {self.snapshot_date} vs EAD {self.ead_date}"
            )

    @property
    def key_label(self) -> str:
        return f"{self.ticker} {self.snapshot_date} (EAD {self.ead_date})"

    @property
    def moneyness(self) -> list[float]:
        return [o.moneyness for o in self.observations]

    @property
    def ivs(self) -> list[float]:
        return [o.iv for o in self.observations]

    @property
    def tau(self) -> float:
        """Year fraction to expiry, actual/365."""
        return self.expiry_days / 365.0

    @property
    def stem(self) -> str:
        """File-name stem unique per snapshot."""
        return f"{self.ticker}_{self.snapshot_date.isoformat()}_{self.phase.value}_{self.expiry_days}d"


def quarter_label(ead_date: dt.date) -> str:
    return f"Q{(ead_date.month - 1) // 3 + 1}-{ead_date.year}"


@dataclass(frozen=True)
class EventStudy:
    ticker: str
    quarter: str
    before: ChainSnapshot
    after: ChainSnapshot
    on: ChainSnapshot | None = None

    def __post_init__(self) -> None:
        snaps = [s for s in (self.before, self.on, self.after) if s is not None]
        if {s.ticker for s in snaps} != {self.ticker}:
            raise InvariantViolation("event snapshots must share the ticker")
        if len({s.ead_date for s in snaps}) != 1:
            raise InvariantViolation("event snapshots must share the EAD")
        if self.before.phase is not Phase.BEFORE or self.after.phase is not Phase.AFTER:
            raise InvariantViolation("before/after snapshots carry the wrong phase")
        if self.on is not None and self.on.phase is not Phase.ON:
            raise InvariantViolation("on snapshot carries the wrong phase")

    @property
    def ead_date(self) -> dt.date:
        return self.before.ead_date

    @property
    def sort_key(self) -> tuple[str, dt.date]:
        return (self.ticker, self.ead_date)


class IncompleteEvent(NamedTuple):
    ticker: str
    ead_date: dt.date
    missing: tuple[Phase, ...]


class EventGrouping(NamedTuple):
    studies: list[EventStudy]
    incomplete: list[IncompleteEvent]


def _parse_date(text: str, field: str, where: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise MalformedRow(f"{where}: bad ISO date in {field!r}: {text!r}") from None


def _parse_float(text: str, field: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MalformedRow(f"{where}: bad number in {field!r}: {text!r}") from None
    if not math.isfinite(value):
        raise MalformedRow(f"{where}: non-finite {field!r}: {text!r}")
    return value


def _parse_int(text: str, field: str, where: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise MalformedRow(f"{where}: bad integer in {field!r}: {text!r}") from None


def parse_snapshot_file(
    path: str | Path, default_rate: float = DEFAULT_RATE
) -> list[ChainSnapshot]:
    """Read and validate every snapshot in an option-chain CSV.

    ``default_rate`` is used for rows whose ``rate`` is absent or empty.
    Snapshots come back sorted by (ticker, snapshot_date, ead_date, expiry_days)
    with observations ascending in moneyness.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        text = fh.read()
    if not text.strip():
        raise EmptyFile(f"{path}: file is empty")
    return parse_snapshot_text(text, source=str(path), default_rate=default_rate)


def parse_snapshot_text(
    text: str, source: str = "<string>", default_rate: float = DEFAULT_RATE
) -> list[ChainSnapshot]:
    reader = csv.reader(text.splitlines())
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise EmptyFile(f"{source}: file is empty") from None
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    unknown = [c for c in header if c not in COLUMNS]
    if missing or unknown or len(set(header)) != len(header):
        raise MalformedRow(
            f"{source}:1: bad header (missing={missing}, unknown={unknown})"
        )
    col = {name: i for i, name in enumerate(header)}

    groups: dict[tuple, dict] = {}
    n_rows = 0
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not f.strip() for f in row):
            continue
        where = f"{source}:{lineno}"
        if len(row) != len(header):
            raise MalformedRow(f"{where}: expected {len(header)} fields, got {len(row)}")
        n_rows += 1

        def get(name: str) -> str:
            return row[col[name]].strip() if name in col else ""

        ticker = get("ticker")
        if not ticker:
            raise MalformedRow(f"{where}: empty ticker")
        snap_date = _parse_date(get("snapshot_date"), "snapshot_date", where)
        ead_date = _parse_date(get("ead_date"), "ead_date", where)
        phase_text = get("phase").lower()
        if phase_text:
            try:
                phase = Phase(phase_text)
            except ValueError:
                raise MalformedRow(f"{where}: unknown phase {phase_text!r}") from None
        else:
            phase = None
        expiry = _parse_int(get("expiry_days"), "expiry_days", where)
        spot = _parse_float(get("spot"), "spot", where)
        rate_text = get("rate")
        rate = _parse_float(rate_text, "rate", where) if rate_text else default_rate
        try:
            obs = IvObservation(
                _parse_float(get("moneyness"), "moneyness", where),
                _parse_float(get("iv"), "iv", where),
            )
        except InvariantViolation as exc:
            raise InvariantViolation(f"{where}: {exc}") from None

        key = (ticker, snap_date, ead_date, expiry)
        group = groups.setdefault(
            key,
            {"phase": phase, "spot": spot, "rate": rate, "obs": [], "line": lineno},
        )
        if group["spot"] != spot or group["rate"] != rate:
            raise InvariantViolation(
                f"{where}: spot/rate differ from line {group['line']} of the same snapshot"
            )
        if phase is not None:
            if group["phase"] is not None and group["phase"] is not phase:
                raise InvariantViolation(
                    f"{where}: phase differs from line {group['line']} of the same snapshot"
                )
            group["phase"] = phase
        group["obs"].append(obs)

    if n_rows == 0:
        raise EmptyFile(f"{source}: no data rows")

    snapshots = []
    for key in sorted(groups):
        ticker, snap_date, ead_date, expiry = key
        g = groups[key]
        phase = g["phase"] or Phase.infer(snap_date, ead_date)
        try:
            snapshots.append(
                ChainSnapshot(
                    ticker=ticker,
                    snapshot_date=snap_date,
                    ead_date=ead_date,
                    phase=phase,
                    expiry_days=expiry,
                    spot=g["spot"],
                    rate=g["rate"],
                    observations=tuple(sorted(g["obs"], key=lambda o: o.moneyness)),
                )
            )
        except InvariantViolation as exc:
            raise InvariantViolation(f"{source}:{g['line']}: {exc}") from None
    return snapshots


def serialize_snapshots(snapshots: Iterable[ChainSnapshot]) -> str:
    """Inverse of :func:`parse_snapshot_text`; floats are written with ``repr``."""
    lines = [",".join(COLUMNS)]
    for s in snapshots:
        for o in s.observations:
            lines.append(
                ",".join(
                    [
                        s.ticker,
                        s.snapshot_date.isoformat(),
                        s.ead_date.isoformat(),
                        s.phase.value,
                        str(s.expiry_days),
                        repr(s.spot),
                        repr(s.rate),
                        repr(o.moneyness),
                        repr(o.iv),
                    ]
                )
            )
    return "\n".join(lines) + "\n"


def write_snapshot_file(snapshots: Iterable[ChainSnapshot], path: str | Path) -> None:
    Path(path).write_text(serialize_snapshots(snapshots), encoding="utf-8")


def group_event_studies(snapshots: Iterable[ChainSnapshot]) -> EventGrouping:
    """Group snapshots into before/on/after event studies keyed by (ticker, EAD).

    Groups lacking a before or after snapshot are returned in
    ``EventGrouping.incomplete`` rather than dropped.
    """
    by_event: dict[tuple[str, dt.date], dict[Phase, ChainSnapshot]] = defaultdict(dict)
    for snap in snapshots:
        slots = by_event[(snap.ticker, snap.ead_date)]
        if snap.phase in slots:
            raise AmbiguousPhase(
                f"{snap.ticker} EAD {snap.ead_date}: more than one "
                f"{snap.phase.value!r} snapshot"
            )
        slots[snap.phase] = snap

    studies, incomplete = [], []
    for (ticker, ead), slots in sorted(by_event.items()):
        missing = tuple(p for p in (Phase.BEFORE, Phase.AFTER) if p not in slots)
        if missing:
            incomplete.append(IncompleteEvent(ticker, ead, missing))
            continue
        studies.append(
            EventStudy(
                ticker=ticker,
                quarter=quarter_label(ead),
                before=slots[Phase.BEFORE],
                on=slots.get(Phase.ON),
                after=slots[Phase.AFTER],
            )
        )
    return EventGrouping(studies, incomplete)
