"""TLE/3LE parsing and two-body Keplerian propagation.

Positions come from mean elements with a pure two-body model, not SGP4.
That is plenty for building a proximity graph at one instant, but expect
errors of a few km after hours (and far more after days) compared with SGP4
ephemerides.
"""

from __future__ import annotations

import json
import math
import urllib.request
import warnings
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from .errors import ConvergenceError, OutOfWindowError, TleChecksumWarning, TleParseError

MU_EARTH = 398600.4418  # km^3 / s^2
EARTH_RADIUS_KM = 6378.137
TWO_PI = 2.0 * math.pi
LINE_LENGTH = 69
STALE_WINDOW = timedelta(days=7)
CELESTRAK_STARLINK_URL = "https://celestrak.org/NORAD/elements/gp.php?GROUP=starlink&FORMAT=3le"


@dataclass(frozen=True)
class TleRecord:
    name: str
    catalog_number: int
    epoch: datetime
    inclination: float
    raan: float
    eccentricity: float
    arg_perigee: float
    mean_anomaly: float
    mean_motion: float  # rev/day

    @property
    def semi_major_axis(self) -> float:
        return semi_major_axis(self.mean_motion)

    @property
    def period_seconds(self) -> float:
        return 86400.0 / self.mean_motion


@dataclass(frozen=True)
class StateVector:
    position: tuple[float, float, float]  # km, ECI
    timestamp: datetime

    @property
    def r(self) -> np.ndarray:
        return np.array(self.position)

    @property
    def radius(self) -> float:
        return math.sqrt(sum(p * p for p in self.position))


def checksum(line: str) -> int:
    """Modulo-10 checksum of columns 1-68: digits count at face value, '-' as 1."""
    total = 0
    for ch in line[:68]:
        if ch.isdigit():
            total += int(ch)
        elif ch == "-":
            total += 1
    return total % 10


def checksum_ok(line: str) -> bool:
    return len(line) == LINE_LENGTH and line[68].isdigit() and int(line[68]) == checksum(line)


def _number(text: str, lineno: int, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise TleParseError(f"non-numeric {what} field {text!r}", lineno) from None


def _integer(text: str, lineno: int, what: str) -> int:
    text = text.strip()
    if not text.isdigit():
        raise TleParseError(f"non-numeric {what} field {text!r}", lineno)
    return int(text)


def _angle(text: str, lineno: int, what: str) -> float:
    return math.radians(_number(text, lineno, what)) % TWO_PI


def _parse_epoch(text: str, lineno: int) -> datetime:
    yy = text[:2]
    if not yy.strip().isdigit():
        raise TleParseError(f"bad epoch year {yy!r}", lineno)
    year = int(yy)
    year += 1900 if year >= 57 else 2000
    try:
        day = Decimal(text[2:].strip())
    except InvalidOperation:
        raise TleParseError(f"bad epoch day {text[2:]!r}", lineno) from None
    if not Decimal(1) <= day < Decimal(367):
        raise TleParseError(f"epoch day {day} out of range", lineno)
    micros = int(((day - 1) * Decimal(86_400_000_000)).to_integral_value())
    return datetime(year, 1, 1, tzinfo=timezone.utc) + timedelta(microseconds=micros)


def _parse_elements(name: str, l1: str, l2: str, lineno: int) -> TleRecord:
    cat1 = _integer(l1[2:7], lineno, "catalog number")
    cat2 = _integer(l2[2:7], lineno + 1, "catalog number")
    if cat1 != cat2:
        raise TleParseError(f"catalog numbers differ between lines ({cat1} vs {cat2})", lineno + 1)
    epoch = _parse_epoch(l1[18:32], lineno)
    ecc_text = l2[26:33]
    if not ecc_text.isdigit():
        raise TleParseError(f"non-numeric eccentricity field {ecc_text!r}", lineno + 1)
    mean_motion = _number(l2[52:63], lineno + 1, "mean motion")
    if not mean_motion > 0:
        raise TleParseError(f"mean motion must be positive, got {mean_motion}", lineno + 1)
    return TleRecord(
        name=name,
        catalog_number=cat1,
        epoch=epoch,
        inclination=_angle(l2[8:16], lineno + 1, "inclination"),
        raan=_angle(l2[17:25], lineno + 1, "RAAN"),
        eccentricity=float("0." + ecc_text),
        arg_perigee=_angle(l2[34:42], lineno + 1, "argument of perigee"),
        mean_anomaly=_angle(l2[43:51], lineno + 1, "mean anomaly"),
        mean_motion=mean_motion,
    )


def parse3le(text: str) -> list[TleRecord]:
    """Parse 3LE text (name line, line 1, line 2 per satellite).

    A leading ``0 `` on the name line (Celestrak's 3LE style) is dropped and a
    missing name line is tolerated. Records whose element lines fail the
    checksum are skipped with a :class:`TleChecksumWarning`; structural
    problems raise :class:`TleParseError` carrying the 1-based line number.
    """
    lines = [(i + 1, ln.rstrip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln.strip()]
    records = []
    k = 0
    while k < len(lines):
        lineno, line = lines[k]
        if line.startswith("1 ") and k + 1 < len(lines) and lines[k + 1][1].startswith("2 "):
            name = ""
        else:
            name = line[2:].strip() if line.startswith("0 ") else line.strip()
            k += 1
        if k + 1 >= len(lines):
            raise TleParseError("truncated record: expected two element lines", lineno)
        (n1, l1), (n2, l2) = lines[k], lines[k + 1]
        k += 2
        for num, ln, tag in ((n1, l1, "1"), (n2, l2, "2")):
            if not ln.startswith(tag + " "):
                raise TleParseError(f"expected element line {tag}", num)
            if len(ln) != LINE_LENGTH:
                raise TleParseError(f"element line has {len(ln)} characters, expected {LINE_LENGTH}", num)
        bad = [num for num, ln in ((n1, l1), (n2, l2)) if not checksum_ok(ln)]
        if bad:
            warnings.warn(
                f"checksum mismatch on line(s) {bad}; skipping record {name or l1[2:7].strip()!r}",
                TleChecksumWarning,
                stacklevel=2,
            )
            continue
        records.append(_parse_elements(name, l1, l2, n1))
    return records


def load_3le(path: str | Path) -> list[TleRecord]:
    return parse3le(Path(path).read_text())


def fetch_3le(url: str = CELESTRAK_STARLINK_URL, timeout: float = 30.0) -> str:
    """Download 3LE text. Network access; not used by the test-suite."""
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        return resp.read().decode("ascii", errors="replace")


def _with_checksum(body: str) -> str:
    assert len(body) == 68, body
    return body + str(checksum(body))


def format_3le(rec: TleRecord, intl_designator: str = "", element_set: int = 999, rev_number: int = 0) -> str:
    """Render a record as three 3LE lines (drag terms written as zero)."""
    start = datetime(rec.epoch.year, 1, 1, tzinfo=timezone.utc)
    day = 1.0 + (rec.epoch - start) / timedelta(days=1)
    ecc = f"{rec.eccentricity:.7f}"
    if not ecc.startswith("0."):
        raise ValueError(f"eccentricity {rec.eccentricity} cannot be written")
    l1 = (
        f"1 {rec.catalog_number:05d}U {intl_designator:<8.8} {rec.epoch.year % 100:02d}{day:012.8f} "
        f" .00000000  00000-0  00000-0 0 {element_set % 10000:>4d}"
    )
    l2 = (
        f"2 {rec.catalog_number:05d} {math.degrees(rec.inclination):8.4f} {math.degrees(rec.raan):8.4f} "
        f"{ecc[2:]} {math.degrees(rec.arg_perigee):8.4f} {math.degrees(rec.mean_anomaly):8.4f} "
        f"{rec.mean_motion:11.8f}{rev_number % 100000:5d}"
    )
    return "\n".join([rec.name, _with_checksum(l1), _with_checksum(l2)])


def semi_major_axis(mean_motion_rev_per_day: float) -> float:
    n = mean_motion_rev_per_day * TWO_PI / 86400.0
    return (MU_EARTH / (n * n)) ** (1.0 / 3.0)


def solve_kepler(mean_anomaly: float, e: float, tol: float = 1e-12, max_iter: int = 50) -> float:
    """Eccentric anomaly ``E`` with ``E - e sin E = M``.

    Newton's method from ``E0 = M`` (``pi`` when ``e > 0.8``), working on M
    reduced to [0, 2 pi). A step leaving the bracket ``[M - e, M + e]``,
    which always holds the root, is replaced by bisection.
    """
    if not 0.0 <= e < 1.0:
        raise ValueError(f"eccentricity must be in [0, 1), got {e}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if e == 0.0:
        return mean_anomaly
    turns = math.floor(mean_anomaly / TWO_PI)
    m = mean_anomaly - turns * TWO_PI
    lo, hi = m - e, m + e
    E = math.pi if e > 0.8 else m
    for _ in range(max_iter):
        f = E - e * math.sin(E) - m
        if abs(f) < tol:
            # one more Newton step takes the residual down to rounding level
            polished = E - f / (1.0 - e * math.cos(E))
            if abs(polished - e * math.sin(polished) - m) < abs(f):
                E = polished
            return E + turns * TWO_PI
        if f > 0:
            hi = min(hi, E)
        else:
            lo = max(lo, E)
        step = E - f / (1.0 - e * math.cos(E))
        E = step if lo < step < hi else 0.5 * (lo + hi)
    raise ConvergenceError(f"Kepler solver did not converge for M={mean_anomaly}, e={e}")


def propagate_seconds(rec: TleRecord, dt: float) -> np.ndarray:
    """ECI position (km) ``dt`` seconds after the record epoch."""
    n = rec.mean_motion * TWO_PI / 86400.0
    a = (MU_EARTH / (n * n)) ** (1.0 / 3.0)
    e = rec.eccentricity
    m = (rec.mean_anomaly + n * dt) % TWO_PI
    E = solve_kepler(m, e)
    nu = 2.0 * math.atan2(math.sqrt(1.0 + e) * math.sin(E / 2.0), math.sqrt(1.0 - e) * math.cos(E / 2.0))
    r = a * (1.0 - e * math.cos(E))
    u = rec.arg_perigee + nu
    cos_o, sin_o = math.cos(rec.raan), math.sin(rec.raan)
    cos_i, sin_i = math.cos(rec.inclination), math.sin(rec.inclination)
    cos_u, sin_u = math.cos(u), math.sin(u)
    return np.array(
        [
            r * (cos_o * cos_u - sin_o * sin_u * cos_i),
            r * (sin_o * cos_u + cos_o * sin_u * cos_i),
            r * (sin_u * sin_i),
        ]
    )


def propagate(rec: TleRecord, t: datetime, allow_stale: bool = False) -> StateVector:
    if t.tzinfo is None:
        t = t.replace(tzinfo=timezone.utc)
    delta = t - rec.epoch
    if abs(delta) > STALE_WINDOW and not allow_stale:
        raise OutOfWindowError(
            f"{rec.name or rec.catalog_number}: {t.isoformat()} is {delta} from epoch {rec.epoch.isoformat()}"
        )
    pos = propagate_seconds(rec, delta / timedelta(seconds=1))
    return StateVector(tuple(float(p) for p in pos), t)


def pairwise_distances(states: list[StateVector]) -> np.ndarray:
    if not states:
        return np.zeros((0, 0))
    t0 = states[0].timestamp
    if any(s.timestamp != t0 for s in states):
        raise ValueError("states must share one timestamp")
    pos = np.array([s.position for s in states])
    diff = pos[:, None, :] - pos[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def parse_timestamp(text: str) -> datetime:
    """RFC 3339 timestamp; naive values are taken as UTC."""
    t = datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    return t if t.tzinfo else t.replace(tzinfo=timezone.utc)


def positions_to_json(records: list[TleRecord], states: list[StateVector]) -> list[dict]:
    return [
        {"name": rec.name, "id": rec.catalog_number, "r": list(st.position)}
        for rec, st in zip(records, states)
    ]


def load_positions(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a positions snapshot; returns names and an (n, 3) array of km."""
    with open(path) as fh:
        rows = json.load(fh)
    names = [str(r.get("name", r.get("id", i))) for i, r in enumerate(rows)]
    return names, np.array([r["r"] for r in rows], dtype=float).reshape(len(rows), 3)
