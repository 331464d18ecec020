"""Covers of the phase-space grid: symbol families, admissibility, generators.

A cover is an indexed family of nonnegative masks ("symbols") on Z_L x Z_L,
each with a designated center.  Admissibility is checked in exact integer
arithmetic on supports: bounded outer radius, optional inner regularity
(a full ball around each center inside the support), and a spreadness count
of centers per window.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import PhaseSpaceGrid
from .errors import InvalidArgumentError


@dataclass(frozen=True)
class Symbol:
    """One nonnegative mask eta on the grid, stored sparsely.

    ``cells`` is an (n, 2) integer array of (x, xi) support points, ``values``
    the matching positive weights.  ``dense()`` materializes the (L, L) array.
    """

    L: int
    center: tuple[int, int]
    cells: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int64).reshape(-1, 2)
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if cells.shape[0] == 0:
            raise InvalidArgumentError("symbol support is empty")
        if cells.shape[0] != values.shape[0]:
            raise InvalidArgumentError(
                f"{cells.shape[0]} cells but {values.shape[0]} values"
            )
        if cells.min() < 0 or cells.max() >= self.L:
            raise InvalidArgumentError("cell indices outside [0, L)")
        if not np.all(np.isfinite(values)) or values.min() < 0.0:
            raise InvalidArgumentError("symbol values must be finite and >= 0")
        flat = cells[:, 0] * self.L + cells[:, 1]
        if np.unique(flat).size != flat.size:
            raise InvalidArgumentError("duplicate cells in symbol support")
        cx, cxi = int(self.center[0]), int(self.center[1])
        if not (0 <= cx < self.L and 0 <= cxi < self.L):
            raise InvalidArgumentError(f"center {self.center} outside the grid")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "center", (cx, cxi))

    @property
    def mass(self) -> float:
        """||eta||_1 = sum of values."""
        return float(self.values.sum())

    def dense(self) -> np.ndarray:
        out = np.zeros((self.L, self.L))
        out[self.cells[:, 0], self.cells[:, 1]] = self.values
        return out

    def shifted(self, z: tuple[int, int]) -> "Symbol":
        """The translated symbol eta(. - z), support and center moved by z."""
        dz = np.asarray([int(z[0]), int(z[1])], dtype=np.int64)
        return Symbol(
            self.L,
            tuple((np.asarray(self.center) + dz) % self.L),
            (self.cells + dz) % self.L,
            self.values,
        )

    @staticmethod
    def indicator(L: int, center: tuple[int, int], cells) -> "Symbol":
        cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
        return Symbol(L, center, cells, np.ones(cells.shape[0]))


@dataclass(frozen=True)
class Cover:
    """An indexed family of Symbols on a common grid."""

    L: int
    regions: tuple[Symbol, ...]

    def __post_init__(self):
        regions = tuple(self.regions)
        if not regions:
            raise InvalidArgumentError("cover has no regions")
        for s in regions:
            if s.L != self.L:
                raise InvalidArgumentError(
                    f"region grid {s.L} does not match cover grid {self.L}"
                )
        object.__setattr__(self, "regions", regions)

    @property
    def centers(self) -> list[tuple[int, int]]:
        return [s.center for s in self.regions]


@dataclass(frozen=True)
class AdmissibilityReport:
    """Exact admissibility measurements for a cover.

    ``spreadness`` is the largest number of centers falling in any wrapped
    w x w window (w = ``window``), so an exact partition into boxes of side
    >= w has spreadness 1.
    """

    covers_grid: bool
    outer_radius_ok: bool
    max_outer_radius: int
    inner_radius_ok: bool | None
    min_inner_radius: int | None
    spreadness: int
    window: int
    sum_min: float
    sum_max: float
    duplicate_centers: bool


def sum_symbols(cover: Cover) -> tuple[np.ndarray, float, float]:
    """Pointwise sum of all symbols and its extremes over the grid."""
    total = np.zeros((cover.L, cover.L))
    for s in cover.regions:
        np.add.at(total, (s.cells[:, 0], s.cells[:, 1]), s.values)
    return total, float(total.min()), float(total.max())


def _largest_inner_radius(grid: PhaseSpaceGrid, support: np.ndarray, center) -> int:
    """Largest r with the full wrapped ball B_r(center) inside ``support``; -1 if none."""
    best = -1
    for r in range(grid.L // 2 + 1):
        ball = grid.ball_cells(center, r)
        if np.all(support[ball[:, 0], ball[:, 1]]):
            best = r
        else:
            break
    return best


def validate_cover(cover: Cover, R: int, r: int | None = None, w: int = 1) -> AdmissibilityReport:
    """Admissibility report for a cover; pure, never raises on well-formed input.

    Outer radius and inner radius are exact integer computations on supports;
    coverage is sum_min > 0; spreadness is the max number of centers in any
    wrapped ball of radius ``w``.
    """
    if R < 0 or w < 1 or (r is not None and r < 0):
        raise InvalidArgumentError(f"bad radii R={R}, r={r}, w={w}")
    grid = PhaseSpaceGrid(cover.L)
    _, sum_min, sum_max = sum_symbols(cover)

    max_outer = 0
    for s in cover.regions:
        dx = grid.circdist(s.cells[:, 0], s.center[0])
        dxi = grid.circdist(s.cells[:, 1], s.center[1])
        max_outer = max(max_outer, int(np.max(np.maximum(dx, dxi))))

    min_inner: int | None = None
    inner_ok: bool | None = None
    if r is not None:
        min_inner = cover.L
        for s in cover.regions:
            support = np.zeros((cover.L, cover.L), dtype=bool)
            support[s.cells[:, 0], s.cells[:, 1]] = True
            min_inner = min(min_inner, _largest_inner_radius(grid, support, s.center))
        inner_ok = min_inner >= r

    # splat each center onto every window anchor that sees it: anchors in
    # [c - w + 1, c] per axis for half-open w x w windows
    counts = np.zeros((cover.L, cover.L), dtype=np.int64)
    offs = np.arange(w)
    if w >= cover.L:
        counts[:] = len(cover.centers)
    else:
        for cx, cxi in cover.centers:
            anchors_x = (cx - offs) % cover.L
            anchors_xi = (cxi - offs) % cover.L
            counts[np.ix_(anchors_x, anchors_xi)] += 1
    spreadness = int(counts.max())

    centers = cover.centers
    return AdmissibilityReport(
        covers_grid=sum_min > 0.0,
        outer_radius_ok=max_outer <= R,
        max_outer_radius=max_outer,
        inner_radius_ok=inner_ok,
        min_inner_radius=min_inner,
        spreadness=spreadness,
        window=w,
        sum_min=sum_min,
        sum_max=sum_max,
        duplicate_centers=len(set(centers)) != len(centers),
    )


# ---------------------------------------------------------------------------
# Generators.  All emit indicator symbols and sum exactly to 1 where stated.
# ---------------------------------------------------------------------------

def _box_cells(L: int, x0: int, xi0: int, wd: int, ht: int) -> np.ndarray:
    xs = (x0 + np.arange(wd)) % L
    xis = (xi0 + np.arange(ht)) % L
    return np.stack(np.meshgrid(xs, xis, indexing="ij"), axis=-1).reshape(-1, 2)


def gen_regular_boxes(L: int, bx: int, by: int) -> Cover:
    """Partition into (L/bx) x (L/by) disjoint boxes; centers at box centers."""
    if bx < 1 or by < 1 or L % bx or L % by:
        raise InvalidArgumentError(f"box sides ({bx}, {by}) must divide L={L}")
    regions = []
    for x0 in range(0, L, bx):
        for xi0 in range(0, L, by):
            center = ((x0 + bx // 2) % L, (xi0 + by // 2) % L)
            regions.append(Symbol.indicator(L, center, _box_cells(L, x0, xi0, bx, by)))
    return Cover(L, tuple(regions))


def gen_wedge_cover(L: int, bands: list[tuple[int, int, int]]) -> Cover:
    """Frequency bands with band-dependent time resolution.

    ``bands`` is a list of (xi_lo, xi_hi, time_step); the bands must partition
    the frequency axis [0, L) exactly and every time_step must divide L.  Each
    band is tiled by time_step x (xi_hi - xi_lo) rectangles, so the cover is
    an exact partition of the grid.
    """
    ordered = sorted((int(lo), int(hi), int(step)) for lo, hi, step in bands)
    if not ordered or ordered[0][0] != 0 or ordered[-1][1] != L:
        raise InvalidArgumentError(f"bands must cover the frequency axis [0, {L})")
    for lo, hi, step in ordered:
        if hi <= lo:
            raise InvalidArgumentError(f"empty band ({lo}, {hi})")
        if step < 1 or L % step:
            raise InvalidArgumentError(f"time_step {step} must divide L={L}")
    for (_, hi, _), (lo2, _, _) in zip(ordered, ordered[1:]):
        if lo2 != hi:
            raise InvalidArgumentError(f"bands overlap or leave a gap at xi={min(hi, lo2)}")
    regions = []
    for lo, hi, step in ordered:
        for x0 in range(0, L, step):
            center = ((x0 + step // 2) % L, (lo + (hi - lo) // 2) % L)
            regions.append(Symbol.indicator(L, center, _box_cells(L, x0, lo, step, hi - lo)))
    return Cover(L, tuple(regions))


def gen_random_irregular(L: int, seed: int, target_size: int, overlap: float) -> Cover:
    """Randomized irregular box cover, deterministic in ``seed``.

    Boxes have side lengths jittered around ``target_size`` and are anchored
    at the first uncovered grid point in row-major order; ``overlap`` in [0, 1]
    scales both the size jitter and the random back-shift of each box into
    already-covered territory.  With overlap=0 and target_size=L the cover
    degenerates to a single whole-grid region.  Max outer radius is always
    <= 2 * target_size.
    """
    if not (2 <= target_size <= L):
        raise InvalidArgumentError(f"target_size must be in [2, L], got {target_size}")
    if not (0.0 <= overlap <= 1.0):
        raise InvalidArgumentError(f"overlap must be in [0, 1], got {overlap}")
    rng = np.random.default_rng(seed)
    jitter = int(overlap * target_size / 2)
    covered = np.zeros((L, L), dtype=bool)
    regions = []
    while not covered.all():
        flat = int(np.argmin(covered))  # first uncovered cell, row-major
        ax, axi = divmod(flat, L)
        if jitter:
            wd = int(np.clip(target_size + rng.integers(-jitter, jitter + 1), 2, L))
            ht = int(np.clip(target_size + rng.integers(-jitter, jitter + 1), 2, L))
            sx = int(rng.integers(0, min(jitter, wd - 1) + 1))
            sxi = int(rng.integers(0, min(jitter, ht - 1) + 1))
        else:
            wd = ht = target_size
            sx = sxi = 0
        x0, xi0 = (ax - sx) % L, (axi - sxi) % L
        cells = _box_cells(L, x0, xi0, wd, ht)
        center = ((x0 + wd // 2) % L, (xi0 + ht // 2) % L)
        regions.append(Symbol.indicator(L, center, cells))
        covered[cells[:, 0], cells[:, 1]] = True
    return Cover(L, tuple(regions))


# ---------------------------------------------------------------------------
# JSON cover files:
#   {"L": int, "regions": [{"center": [x, xi], "cells": [[x, xi], ...],
#                           "values": [...]}]}
# `values` is omitted when all 1.0; readers accept any key order.
# ---------------------------------------------------------------------------

def cover_to_dict(cover: Cover) -> dict:
    regions = []
    for s in cover.regions:
        entry = {"center": list(s.center), "cells": s.cells.tolist()}
        if not np.all(s.values == 1.0):
            entry["values"] = [float(v) for v in s.values]
        regions.append(entry)
    return {"L": cover.L, "regions": regions}


def cover_from_dict(data: dict) -> Cover:
    try:
        L = int(data["L"])
        raw_regions = data["regions"]
    except (KeyError, TypeError) as exc:
        raise InvalidArgumentError(f"malformed cover JSON: missing {exc}") from exc
    regions = []
    for i, entry in enumerate(raw_regions):
        cells = np.asarray(entry["cells"], dtype=np.int64).reshape(-1, 2)
        values = entry.get("values")
        if values is None:
            values = np.ones(cells.shape[0])
        else:
            values = np.asarray(values, dtype=np.float64)
            if values.shape[0] != cells.shape[0]:
                raise InvalidArgumentError(
                    f"region {i}: {values.shape[0]} values for {cells.shape[0]} cells"
                )
        regions.append(Symbol(L, tuple(entry["center"]), cells, values))
    return Cover(L, tuple(regions))


def write_cover_json(path, cover: Cover) -> None:
    with open(path, "w", newline="") as fh:
        json.dump(cover_to_dict(cover), fh, indent=1)
        fh.write("\n")


def read_cover_json(path) -> Cover:
    with open(path) as fh:
        return cover_from_dict(json.load(fh))
