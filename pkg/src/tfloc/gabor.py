"""Separable lattice Gabor systems on Z_L and their multipliers.

For a lattice Lambda = aZ_{L/a} x bZ_{L/b} the frame operator is
S = sum_{lam in Lambda} |pi(lam) phi><pi(lam) phi| (no 1/L factor); the
canonical tight window S^{-1/2} phi turns the system into a tight frame with
expansion constant A = L / |Lambda| once renormalized to unit norm.  A Gabor
multiplier masks the tight expansion:

    GM_m = A sum_{lam} m(lam) |pi(lam) phi><pi(lam) phi|,

so GM_1 is the identity and trace(GM_m) = A ||phi||^2 sum m.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import Window
from .covers import Cover, Symbol
from .errors import (
    EmptyFrameError,
    InvalidArgumentError,
    NotAFrameError,
    PreconditionViolation,
)
from .frames import (
    EigenFrame,
    FrameAtom,
    FrameCertificate,
    SelectionPolicy,
    _map_ordered,
    frame_certificate,
    select_eigenfunctions,
)
from .locop import LocOperator, shifted_window_columns

_FRAME_FLOOR_RTOL = 1e-9
_TIGHT_CONDITION_TOL = 1e-8


@dataclass(frozen=True)
class Lattice:
    """The separable lattice {(ja, kb)} in Z_L x Z_L; a and b must divide L."""

    L: int
    a: int
    b: int

    def __post_init__(self):
        if self.a < 1 or self.b < 1 or self.L % self.a or self.L % self.b:
            raise InvalidArgumentError(
                f"lattice steps ({self.a}, {self.b}) must divide L={self.L}"
            )

    @property
    def n_points(self) -> int:
        return (self.L // self.a) * (self.L // self.b)

    def points(self) -> np.ndarray:
        """(n, 2) array of lattice points, time-major order."""
        js = np.arange(self.L // self.a) * self.a
        ks = np.arange(self.L // self.b) * self.b
        return np.stack(np.meshgrid(js, ks, indexing="ij"), axis=-1).reshape(-1, 2)

    def contains(self, cell) -> bool:
        return cell[0] % self.a == 0 and cell[1] % self.b == 0


def gabor_frame_operator(phi: Window, lattice: Lattice) -> tuple[np.ndarray, float, float]:
    """Frame operator of the Gabor system and its frame bounds (A_gab, B_gab).

    Rank deficiency (fewer lattice points than the dimension) shows up as
    A_gab = 0 in the report; it is not an error.
    """
    W = shifted_window_columns(lattice.L, np.asarray(phi.samples), lattice.points())
    S = W @ W.conj().T
    ev = np.linalg.eigvalsh(S)
    return S, float(ev[0]), float(ev[-1])


@dataclass(frozen=True)
class LatticeGaborSystem:
    window: Window
    lattice: Lattice
    frame_operator: np.ndarray
    A_gab: float
    B_gab: float

    @property
    def tight(self) -> bool:
        return self.A_gab > 0.0 and self.B_gab / self.A_gab <= 1.0 + _TIGHT_CONDITION_TOL

    @property
    def tight_constant(self) -> float:
        """A of the tight expansion f = A sum <f, pi phi> pi phi.

        Computed as L / trace(S) = 1 / (mean eigenvalue); for a tight system
        this equals 1/lambda(S).
        """
        return self.lattice.L / float(np.trace(self.frame_operator).real)

    @staticmethod
    def build(phi: Window, lattice: Lattice) -> "LatticeGaborSystem":
        S, A_gab, B_gab = gabor_frame_operator(phi, lattice)
        return LatticeGaborSystem(phi, lattice, S, A_gab, B_gab)


def canonical_tight(phi: Window, lattice: Lattice) -> Window:
    """The unit-norm canonical tight window S^{-1/2} phi.

    Rejects systems whose frame operator is numerically singular
    (lambda_min <= 1e-9 * lambda_max).
    """
    S, A_gab, B_gab = gabor_frame_operator(phi, lattice)
    if A_gab <= _FRAME_FLOOR_RTOL * max(B_gab, 1.0):
        raise NotAFrameError(
            f"Gabor system is not a frame (A_gab={A_gab!r}, B_gab={B_gab!r})",
            n_points=lattice.n_points,
            L=lattice.L,
        )
    w, Q = np.linalg.eigh(S)
    phit = Q @ ((Q.conj().T @ phi.samples) / np.sqrt(w))
    phit = phit / np.linalg.norm(phit)
    return Window(phit, normalized=True)


def _lattice_values(m, lattice: Lattice) -> np.ndarray:
    """Coerce a multiplier mask to a flat vector over lattice.points()."""
    arr = np.asarray(m, dtype=np.float64)
    shape = (lattice.L // lattice.a, lattice.L // lattice.b)
    if arr.shape != shape:
        raise InvalidArgumentError(
            f"multiplier mask must have shape {shape}, got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0:
        raise InvalidArgumentError("multiplier mask must be finite and >= 0")
    return arr.reshape(-1)


def gabor_multiplier(m, sys: LatticeGaborSystem) -> LocOperator:
    """GM_m = A sum m(lam) |pi(lam) phi><pi(lam) phi| for a tight system.

    ``m`` is an (L/a, L/b) nonnegative array over the lattice index grid.
    """
    if not sys.tight:
        raise PreconditionViolation(
            "Gabor multipliers need a tight system; run canonical_tight first "
            f"(condition {sys.B_gab / sys.A_gab if sys.A_gab > 0 else float('inf')!r})"
        )
    vals = _lattice_values(m, sys.lattice)
    pts = sys.lattice.points()
    A = sys.tight_constant
    L = sys.lattice.L
    M = np.zeros((L, L), dtype=np.complex128)
    scale = np.sqrt(A * vals)
    nz = scale > 0.0
    if np.any(nz):
        W = shifted_window_columns(L, np.asarray(sys.window.samples), pts[nz]) * scale[nz][None, :]
        M = W @ W.conj().T
    return LocOperator(M, symbol_ref="gabor-multiplier")


def symbol_on_lattice(symbol: Symbol, lattice: Lattice) -> np.ndarray:
    """Restrict a grid symbol to the lattice index grid; off-lattice cells error."""
    out = np.zeros((lattice.L // lattice.a, lattice.L // lattice.b))
    for i in range(symbol.cells.shape[0]):
        x, xi = int(symbol.cells[i, 0]), int(symbol.cells[i, 1])
        if x % lattice.a or xi % lattice.b:
            raise InvalidArgumentError(
                f"cell ({x}, {xi}) is not a lattice point", cell_index=i
            )
        out[x // lattice.a, xi // lattice.b] = symbol.values[i]
    return out


def lattice_masses(cover: Cover, lattice: Lattice) -> list[float]:
    """Per-region l1 masses of the symbols restricted to the lattice."""
    return [float(symbol_on_lattice(s, lattice).sum()) for s in cover.regions]


def lattice_coverage_min(cover: Cover, lattice: Lattice) -> float:
    """Min over lattice points of the pointwise symbol sum."""
    total = np.zeros((lattice.L // lattice.a, lattice.L // lattice.b))
    for s in cover.regions:
        total += symbol_on_lattice(s, lattice)
    return float(total.min())


def gabor_eigenframe(
    cover: Cover,
    sys: LatticeGaborSystem,
    policy: SelectionPolicy,
    weighted: bool = True,
    threads: int = 1,
) -> tuple[EigenFrame, FrameCertificate]:
    """Eigenfunction frame from per-region Gabor multipliers.

    Region symbols must be supported on the lattice, their sum must be
    strictly positive at every lattice point, and all centers must be lattice
    points.  Selection uses the multiplier trace as the region measure, like
    the grid pipeline.
    """
    masks = [symbol_on_lattice(s, sys.lattice) for s in cover.regions]
    total = np.zeros_like(masks[0])
    for mask in masks:
        total += mask
    if float(total.min()) <= 0.0:
        raise PreconditionViolation(
            f"cover does not cover the lattice (min symbol sum {float(total.min())!r})"
        )
    for i, s in enumerate(cover.regions):
        if not sys.lattice.contains(s.center):
            raise InvalidArgumentError(
                f"region {i} center {s.center} is not a lattice point"
            )

    ops = _map_ordered(lambda mask: gabor_multiplier(mask, sys), masks, threads)
    spectra = _map_ordered(lambda op: op.spectrum(), ops, threads)
    measures = [op.trace for op in ops]
    counts = select_eigenfunctions(spectra, measures, policy)

    atoms: list[FrameAtom] = []
    for gamma, (spec, n) in enumerate(zip(spectra, counts)):
        if spec.eigenvalues[0] <= 1e-14:
            warnings.warn(
                f"region {gamma} has a numerically zero multiplier; contributing no atoms",
                stacklevel=2,
            )
            continue
        for k in range(n):
            lam = float(spec.eigenvalues[k])
            atoms.append(
                FrameAtom(
                    vector=spec.eigenvectors[:, k].copy(),
                    weight=lam if weighted else 1.0,
                    gamma=gamma,
                    k=k + 1,
                    lam=lam,
                )
            )
    if not atoms:
        raise EmptyFrameError("selection produced no atoms")
    frame = EigenFrame(cover.L, tuple(atoms), weighted)
    return frame, frame_certificate(frame)
