"""GEO NB-IoT uplink budget: CNR, resource-unit capacity, sensor headroom.

The chain: free-space path loss from slant distance and carrier frequency,
CNR from the dB budget (EIRP, G/T, four fixed losses, noise bandwidth,
Boltzmann constant), a threshold table mapping CNR to bits per resource
unit, peak system throughput from the subcarrier count and RU duration,
and finally how many reporting sensors that throughput supports.

The FSPL constant is the textbook 32.45 for km/MHz units. Reference CNR
figures for the two bundled elevation scenarios reproduce to about
0.01 dB; the residual comes from the rounded constant (32.4478 exact).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import ValidationError

BOLTZMANN_DBW_K_HZ = -228.6
SYSTEM_BANDWIDTH_HZ = 180000.0
RU_DURATION_S = 0.032
SECONDS_PER_DAY = 86400.0


class LinkInfeasibleError(RuntimeError):
    """CNR fell below the lowest modulation threshold; the link cannot close."""


@dataclass(frozen=True)
class LinkParams:
    """Uplink budget inputs. elevation_deg is a label, not an input."""

    eirp_dbm: float
    g_over_t_db_k: float
    bandwidth_hz: float
    freq_mhz: float
    distance_km: float
    pl_atmos_db: float
    pl_shadow_db: float
    pl_scint_db: float
    pl_polar_db: float
    elevation_deg: float | None = None

    def __post_init__(self) -> None:
        for name in ("bandwidth_hz", "freq_mhz", "distance_km"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("pl_atmos_db", "pl_shadow_db", "pl_scint_db", "pl_polar_db"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0, got {getattr(self, name)}")

    @classmethod
    def from_json(cls, path: str | Path) -> "LinkParams":
        fpath = Path(path)
        if not fpath.is_file():
            raise ValidationError(f"link params file missing: {fpath}")
        try:
            raw = json.loads(fpath.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"link params {fpath} is not valid JSON: {exc}") from exc
        allowed = set(cls.__dataclass_fields__)
        unknown = set(raw) - allowed
        if unknown:
            raise ValidationError(f"unknown link param fields: {sorted(unknown)}")
        missing = {f for f in allowed if f != "elevation_deg"} - set(raw)
        if missing:
            raise ValidationError(f"link params missing fields: {sorted(missing)}")
        return cls(**raw)


# worst case: lowest elevation, longest slant range
TABLE1_10DEG = LinkParams(
    eirp_dbm=23.0, g_over_t_db_k=19.0, bandwidth_hz=3750.0, freq_mhz=1500.0,
    distance_km=40581.0, pl_atmos_db=0.16, pl_shadow_db=3.0,
    pl_scint_db=2.2, pl_polar_db=3.0, elevation_deg=10.0)

# best case: satellite overhead
TABLE1_90DEG = LinkParams(
    eirp_dbm=23.0, g_over_t_db_k=19.0, bandwidth_hz=3750.0, freq_mhz=1500.0,
    distance_km=35786.0, pl_atmos_db=0.16, pl_shadow_db=3.0,
    pl_scint_db=2.2, pl_polar_db=3.0, elevation_deg=90.0)


@dataclass(frozen=True)
class TrafficModel:
    """Average sensor uplink demand."""

    reports_per_day: float
    payload_bytes: float

    def __post_init__(self) -> None:
        if self.reports_per_day <= 0:
            raise ValidationError(
                f"reports_per_day must be > 0, got {self.reports_per_day}")
        if self.payload_bytes <= 0:
            raise ValidationError(f"payload_bytes must be > 0, got {self.payload_bytes}")


PERIODIC_REPORT = TrafficModel(reports_per_day=2.0, payload_bytes=50.0)
EVENT_REPORT = TrafficModel(reports_per_day=1440.0, payload_bytes=50.0)


class TbsMap:
    """CNR thresholds to bits per resource unit, ascending in both."""

    def __init__(self, rows: list[tuple[float, int]]):
        if not rows:
            raise ValidationError("TBS map must have at least one row")
        for (c0, b0), (c1, b1) in zip(rows, rows[1:]):
            if not (c0 < c1 and b0 < b1):
                raise ValidationError(
                    f"TBS rows must strictly increase, got ({c0},{b0}) then ({c1},{b1})")
        self.rows = [(float(c), int(b)) for c, b in rows]

    @classmethod
    def from_csv(cls, path: str | Path) -> "TbsMap":
        fpath = Path(path)
        if not fpath.is_file():
            raise ValidationError(f"TBS map file missing: {fpath}")
        with fpath.open(newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["min_cnr_db", "bits_per_ru"]:
                raise ValidationError(
                    f"TBS map header must be min_cnr_db,bits_per_ru, got {reader.fieldnames}")
            rows = [(float(r["min_cnr_db"]), int(r["bits_per_ru"])) for r in reader]
        return cls(rows)


# single anchor: the uplink single-tone TBS entry both scenarios land on
DEFAULT_TBS = TbsMap([(8.0, 144)])


@dataclass(frozen=True)
class CapacityReport:
    cnr_db: float
    bits_per_ru: int
    peak_rate_bps: float
    per_sensor_bps: float
    supportable_sensors: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


def fspl_db(distance_km: float, freq_mhz: float) -> float:
    """Free-space path loss, km/MHz form: 32.45 + 20 log10 d + 20 log10 f."""
    if distance_km <= 0:
        raise ValidationError(f"distance_km must be > 0, got {distance_km}")
    if freq_mhz <= 0:
        raise ValidationError(f"freq_mhz must be > 0, got {freq_mhz}")
    return 32.45 + 20.0 * math.log10(distance_km) + 20.0 * math.log10(freq_mhz)


def cnr_db(p: LinkParams) -> float:
    """Uplink carrier-to-noise ratio in dB from the full budget."""
    return ((p.eirp_dbm - 30.0) + p.g_over_t_db_k
            - fspl_db(p.distance_km, p.freq_mhz)
            - p.pl_atmos_db - p.pl_shadow_db - p.pl_scint_db - p.pl_polar_db
            - 10.0 * math.log10(p.bandwidth_hz) - BOLTZMANN_DBW_K_HZ)


def bits_per_ru(cnr: float, tbs: TbsMap = DEFAULT_TBS) -> int:
    """Largest TBS row whose threshold the CNR meets."""
    best: int | None = None
    for min_cnr, bits in tbs.rows:
        if cnr >= min_cnr:
            best = bits
    if best is None:
        raise LinkInfeasibleError(
            f"CNR {cnr:.4f} dB is below the lowest TBS threshold "
            f"({tbs.rows[0][0]} dB); the link cannot close")
    return best


def peak_rate_bps(bits_ru: int, system_bw_hz: float = SYSTEM_BANDWIDTH_HZ,
                  subcarrier_hz: float = 3750.0,
                  ru_duration_s: float = RU_DURATION_S) -> float:
    """System peak throughput: all subcarriers sending one RU per duration."""
    if bits_ru < 0:
        raise ValidationError(f"bits_ru must be >= 0, got {bits_ru}")
    if min(system_bw_hz, subcarrier_hz, ru_duration_s) <= 0:
        raise ValidationError("bandwidths and RU duration must be > 0")
    n_sub = system_bw_hz / subcarrier_hz
    if abs(n_sub - round(n_sub)) > 1e-9:
        raise ValidationError(
            f"system bandwidth {system_bw_hz} is not a whole number of "
            f"{subcarrier_hz} Hz subcarriers")
    return bits_ru * round(n_sub) / ru_duration_s


def per_sensor_bps(t: TrafficModel) -> float:
    """Average uplink rate of one sensor, spread uniformly over the day."""
    return t.payload_bytes * 8.0 * t.reports_per_day / SECONDS_PER_DAY


def supportable_sensors(peak_bps: float, per_sensor: float) -> int:
    """How many sensors the peak throughput carries at the given demand."""
    if per_sensor <= 0:
        raise ValidationError(f"per_sensor must be > 0, got {per_sensor}")
    if peak_bps < 0:
        raise ValidationError(f"peak_bps must be >= 0, got {peak_bps}")
    return math.floor(peak_bps / per_sensor)


def capacity_report(p: LinkParams, traffic: TrafficModel,
                    tbs: TbsMap = DEFAULT_TBS,
                    system_bw_hz: float = SYSTEM_BANDWIDTH_HZ,
                    ru_duration_s: float = RU_DURATION_S) -> CapacityReport:
    """Full chain from link params and traffic model to sensor headroom."""
    cnr = cnr_db(p)
    bits = bits_per_ru(cnr, tbs)
    peak = peak_rate_bps(bits, system_bw_hz, p.bandwidth_hz, ru_duration_s)
    per = per_sensor_bps(traffic)
    return CapacityReport(cnr_db=cnr, bits_per_ru=bits, peak_rate_bps=peak,
                          per_sensor_bps=per,
                          supportable_sensors=supportable_sensors(peak, per))
