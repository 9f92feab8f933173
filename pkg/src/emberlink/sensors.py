"""Ground sensor fields: deployment, persistence, proximity queries.

A field is a flat (n, 2) array of planar sensor positions (km), plus the
deployment provenance needed to regenerate it: the RNG seed and the
region rectangle. Proximity queries run against a lazily built spatial
hash bucketed near the expected inter-sensor spacing, so lookups stay
cheap from thousands to millions of sensors; results are always exact,
the hash only narrows the candidate set.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .envdata import Rect
from .errors import ValidationError

# spatial-hash cell bounds (km); the target is one sensor per cell
MIN_CELL_KM = 0.25
MAX_CELL_KM = 64.0
_KEY_BIAS = 1 << 25  # cell indices must fit signed 26-bit for hashing


@dataclass
class SensorField:
    """Sensor positions with their deployment seed and region.

    seed and region are optional provenance: a field deployed by
    deploy_uniform carries both and can be regenerated bit-for-bit from
    (count, region, seed); hand-built or loaded fields may lack them.
    """

    positions: np.ndarray
    seed: int | None = None
    region: Rect | None = None
    _grid: tuple[float, np.ndarray, np.ndarray, np.ndarray] | None = field(
        default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=float)
        if pos.size == 0:
            pos = pos.reshape(0, 2)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValidationError(f"positions must be (n, 2), got {pos.shape}")
        if pos.size and not np.isfinite(pos).all():
            raise ValidationError("sensor positions contain non-finite values")
        if self.region is not None and pos.size:
            r = self.region
            ok = ((pos[:, 0] >= r.x0) & (pos[:, 0] <= r.x0 + r.width_km)
                  & (pos[:, 1] >= r.y0) & (pos[:, 1] <= r.y0 + r.height_km))
            if not ok.all():
                bad = int(np.flatnonzero(~ok)[0])
                raise ValidationError(
                    f"sensor {bad} at ({pos[bad, 0]}, {pos[bad, 1]}) lies outside "
                    f"the field region {r}")
        self.positions = pos

    def __len__(self) -> int:
        return self.positions.shape[0]

    def _cell_km(self) -> float:
        # one expected sensor per cell, clamped to sane extremes
        n = max(len(self), 1)
        if self.region is not None:
            area = self.region.width_km * self.region.height_km
        elif len(self) > 1:
            span = self.positions.max(axis=0) - self.positions.min(axis=0)
            area = float(span[0] * span[1])
        else:
            area = 0.0
        if area <= 0:
            return MAX_CELL_KM
        return min(max(math.sqrt(area / n), MIN_CELL_KM), MAX_CELL_KM)

    def _hash(self) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
        if self._grid is None:
            cell = self._cell_km()
            ki = np.floor(self.positions[:, 0] / cell).astype(np.int64)
            kj = np.floor(self.positions[:, 1] / cell).astype(np.int64)
            if self.positions.size and (np.abs(ki).max() >= _KEY_BIAS
                                        or np.abs(kj).max() >= _KEY_BIAS):
                raise ValidationError("sensor coordinates too large to index")
            key = (ki + _KEY_BIAS) * (2 * _KEY_BIAS) + (kj + _KEY_BIAS)
            order = np.argsort(key, kind="stable").astype(np.int64)
            skey = key[order]
            bounds = np.flatnonzero(np.diff(skey)) + 1
            starts = np.concatenate(([0], bounds, [skey.size])).astype(np.int64)
            self._grid = (cell, skey[starts[:-1]] if skey.size else skey,
                          starts, order)
        return self._grid

    def _candidates(self, center: tuple[float, float], radius: float) -> np.ndarray:
        cell, ukeys, starts, order = self._hash()
        cx0 = math.floor((center[0] - radius) / cell)
        cx1 = math.floor((center[0] + radius) / cell)
        cy0 = math.floor((center[1] - radius) / cell)
        cy1 = math.floor((center[1] + radius) / cell)
        if (cx1 - cx0 + 1) * (cy1 - cy0 + 1) >= ukeys.size:
            # disk covers most occupied cells; scan everything
            return np.arange(len(self), dtype=np.int64)
        qi = np.arange(cx0, cx1 + 1, dtype=np.int64) + _KEY_BIAS
        qj = np.arange(cy0, cy1 + 1, dtype=np.int64) + _KEY_BIAS
        qkeys = (qi[:, None] * (2 * _KEY_BIAS) + qj[None, :]).ravel()
        pos = np.searchsorted(ukeys, qkeys)
        hit = np.flatnonzero((pos < ukeys.size) & (ukeys[np.minimum(pos, ukeys.size - 1)] == qkeys))
        if hit.size == 0:
            return np.empty(0, dtype=np.int64)
        return np.concatenate([order[starts[p]:starts[p + 1]] for p in pos[hit]])


def indices_within(field_: SensorField, center: tuple[float, float],
                   radius: float) -> np.ndarray:
    """Ascending indices of sensors inside the closed disk of given radius."""
    if radius < 0:
        raise ValidationError(f"radius must be >= 0, got {radius}")
    if len(field_) == 0:
        return np.empty(0, dtype=np.int64)
    cand = field_._candidates(center, radius)
    if cand.size == 0:
        return cand
    d = field_.positions[cand] - np.asarray(center, dtype=float)
    inside = np.einsum("ij,ij->i", d, d) <= radius * radius
    return np.sort(cand[inside])


def nearest_index_within(field_: SensorField, center: tuple[float, float],
                         radius: float) -> int | None:
    """Index of the closest sensor in the closed disk, or None.

    Distance ties resolve to the lowest index.
    """
    hits = indices_within(field_, center, radius)
    if hits.size == 0:
        return None
    d = field_.positions[hits] - np.asarray(center, dtype=float)
    dist2 = np.einsum("ij,ij->i", d, d)
    return int(hits[np.argmin(dist2)])  # argmin takes the first of equals


def nearest_distance(field_: SensorField, center: tuple[float, float]) -> float:
    """Distance to the closest sensor, or inf for an empty field."""
    if len(field_) == 0:
        return math.inf
    d = field_.positions - np.asarray(center, dtype=float)
    return float(np.sqrt(np.einsum("ij,ij->i", d, d).min()))


def deploy_uniform(n: int, rect: Rect, seed: int) -> SensorField:
    """Drop n sensors i.i.d. uniform over the rectangle, reproducibly.

    The same (n, rect, seed) always yields the same field, on any
    platform; the stream is counter-based, so deployments of different
    sizes from one seed share a common prefix and never depend on call
    order.
    """
    if n < 0:
        raise ValidationError(f"sensor count must be >= 0, got {n}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    u = rng.random((n, 2))
    pos = np.empty((n, 2), dtype=float)
    pos[:, 0] = rect.x0 + rect.width_km * u[:, 0]
    pos[:, 1] = rect.y0 + rect.height_km * u[:, 1]
    return SensorField(positions=pos, seed=seed, region=rect)


def save_sensors(field_: SensorField, path: str | Path) -> Path:
    """Write a sensor CSV: '#' provenance lines, then x_km,y_km rows."""
    fpath = Path(path)
    fpath.parent.mkdir(parents=True, exist_ok=True)
    with fpath.open("w", newline="") as fh:
        if field_.region is not None:
            r = field_.region
            fh.write(f"# region={r.x0!r},{r.y0!r},{r.width_km!r},{r.height_km!r}\n")
        if field_.seed is not None:
            fh.write(f"# seed={field_.seed}\n")
        fh.write("x_km,y_km\n")
        for x, y in field_.positions:
            fh.write(f"{float(x)!r},{float(y)!r}\n")
    return fpath


def _parse_region(raw: str, fpath: Path) -> Rect:
    parts = raw.split(",")
    if len(parts) != 4:
        raise ValidationError(
            f"sensor file {fpath}: region needs x0,y0,width_km,height_km, got {raw!r}")
    try:
        x0, y0, w, h = (float(p) for p in parts)
    except ValueError as exc:
        raise ValidationError(f"sensor file {fpath}: bad region {raw!r}") from exc
    return Rect(x0=x0, y0=y0, width_km=w, height_km=h)


def load_sensors(path: str | Path) -> SensorField:
    """Read a sensor CSV written by save_sensors; positions round-trip exactly.

    A declared region header is enforced (any row outside it is an
    error); without one the region is inferred as the points' bounding
    rectangle.
    """
    fpath = Path(path)
    if not fpath.is_file():
        raise ValidationError(f"sensor file missing: {fpath}")
    meta: dict[str, str] = {}
    rows: list[tuple[float, float]] = []
    with fpath.open(newline="") as fh:
        lines = []
        for raw in fh:
            if raw.startswith("#"):
                body = raw[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    meta[key.strip()] = value.strip()
                continue
            lines.append(raw)
        reader = csv.reader(lines)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"sensor file {fpath} has no header") from None
        if [h.strip() for h in header] != ["x_km", "y_km"]:
            raise ValidationError(
                f"sensor file {fpath} header must be x_km,y_km, got {header}")
        for n, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ValidationError(f"sensor file row {n}: expected 2 columns, got {len(row)}")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError as exc:
                raise ValidationError(f"sensor file row {n}: bad coordinate") from exc
    pos = np.asarray(rows, dtype=float).reshape(len(rows), 2)
    region = _parse_region(meta["region"], fpath) if "region" in meta else None
    if region is None and rows:
        lo = pos.min(axis=0)
        span = pos.max(axis=0) - lo
        region = Rect(x0=float(lo[0]), y0=float(lo[1]),
                      width_km=float(span[0]), height_km=float(span[1]))
    seed: int | None = None
    if "seed" in meta:
        try:
            seed = int(meta["seed"])
        except ValueError as exc:
            raise ValidationError(f"sensor file {fpath}: bad seed {meta['seed']!r}") from exc
    try:
        return SensorField(positions=pos, seed=seed, region=region)
    except ValidationError as exc:
        raise ValidationError(f"sensor file {fpath}: {exc}") from exc
