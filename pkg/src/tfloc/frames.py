"""Eigenfunction frames adapted to a cover.

For each region, the top eigenvectors of its localization operator are
selected (by an eigenvalue threshold or by a count proportional to the
region's trace measure) and collected, weighted by their eigenvalues or left
unweighted.  The frame operator S = sum w^2 |v><v| certifies the frame bounds
A = lambda_min(S), B = lambda_max(S), and its inverse performs canonical dual
reconstruction.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import PhaseSpaceGrid, Signal, Window
from .covers import Cover, Symbol, sum_symbols, validate_cover
from .errors import (
    EmptyFrameError,
    InvalidArgumentError,
    NotAFrameError,
    PreconditionViolation,
)
from .locop import LocOperator, Spectrum, assemble_locop

_DEGENERATE_TOL = 1e-14


@dataclass(frozen=True)
class SelectionPolicy:
    """How many eigenfunctions to keep per region.

    ``alpha`` mode keeps ceil(alpha * measure) where ``measure`` is the trace
    of the region operator (the grid analogue of the region's area); the
    implied threshold is epsilon = 1/alpha.  ``epsilon`` mode keeps the
    eigenvalues strictly above ``epsilon``; epsilon = 0 keeps the numerical
    rank.  Both are capped at ``n_max``.
    """

    mode: str
    alpha: float | None = None
    epsilon: float | None = None
    n_max: int = 1_000_000

    def __post_init__(self):
        if self.mode not in ("alpha", "epsilon"):
            raise InvalidArgumentError(f"unknown selection mode {self.mode!r}")
        if self.n_max < 1:
            raise InvalidArgumentError(f"n_max must be >= 1, got {self.n_max}")
        if self.mode == "alpha":
            if self.alpha is None or self.alpha <= 0 or self.epsilon is not None:
                raise InvalidArgumentError("alpha mode requires alpha > 0 and no epsilon")
        else:
            if self.epsilon is None or self.epsilon < 0 or self.alpha is not None:
                raise InvalidArgumentError("epsilon mode requires epsilon >= 0 and no alpha")

    @property
    def implied_alpha(self) -> float:
        if self.mode == "alpha":
            return self.alpha
        return math.inf if self.epsilon == 0.0 else 1.0 / self.epsilon


def select_eigenfunctions(
    spectra: list[Spectrum], measures: list[float], policy: SelectionPolicy
) -> list[int]:
    """Per-region counts N_gamma for the given spectra and trace measures."""
    if not spectra:
        raise InvalidArgumentError("no spectra to select from")
    if len(spectra) != len(measures):
        raise InvalidArgumentError(
            f"{len(spectra)} spectra but {len(measures)} measures"
        )
    counts = []
    for spec, measure in zip(spectra, measures):
        dim = spec.eigenvalues.size
        if policy.mode == "alpha":
            n = min(policy.n_max, dim, int(math.ceil(policy.alpha * measure)))
        elif policy.epsilon == 0.0:
            n = min(policy.n_max, spec.numerical_rank())
        else:
            n = min(policy.n_max, int(np.sum(spec.eigenvalues > policy.epsilon)))
        counts.append(max(n, 0))
    return counts


@dataclass(frozen=True)
class FrameAtom:
    vector: np.ndarray  # unit norm, length L
    weight: float
    gamma: int  # region index
    k: int  # 1-based eigenvalue index within the region
    lam: float


@dataclass(frozen=True)
class EigenFrame:
    L: int
    atoms: tuple[FrameAtom, ...]
    weighted: bool

    def __post_init__(self):
        if not self.atoms:
            raise EmptyFrameError("frame has no atoms")

    def atom_matrix(self) -> np.ndarray:
        """L x n matrix whose columns are the weighted atoms w_i v_i."""
        G = np.stack([a.vector * a.weight for a in self.atoms], axis=1)
        return G

    def counts_per_region(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for a in self.atoms:
            out[a.gamma] = max(out.get(a.gamma, 0), a.k)
        return out


@dataclass(frozen=True)
class FrameCertificate:
    A: float
    B: float
    condition: float
    frame_operator: np.ndarray
    is_frame: bool
    a_tol: float


def _map_ordered(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def region_operators(cover: Cover, phi: Window, threads: int = 1) -> list[LocOperator]:
    """One localization operator per region, in region order."""
    return _map_ordered(lambda s: assemble_locop(s, phi), cover.regions, threads)


def assemble_frame(
    cover: Cover,
    phi: Window,
    policy: SelectionPolicy,
    weighted: bool = True,
    threads: int = 1,
) -> EigenFrame:
    """Build the eigenfunction frame of a cover.

    Requires the cover to actually cover the grid; the unweighted variant
    additionally requires inner regularity (each center's radius-1 wrapped
    ball inside its region's support), which is what keeps the selected
    eigenvalues bounded away from zero.
    """
    _, sum_min, _ = sum_symbols(cover)
    if sum_min <= 0.0:
        raise PreconditionViolation(
            f"cover does not cover the grid (min symbol sum {sum_min!r})"
        )
    if not weighted:
        report = validate_cover(cover, R=cover.L // 2, r=1)
        if not report.inner_radius_ok:
            raise PreconditionViolation(
                "unweighted frames need inner regularity: every center's "
                "radius-1 ball must lie inside its region's support "
                f"(measured min inner radius {report.min_inner_radius})"
            )

    ops = region_operators(cover, phi, threads)
    spectra = _map_ordered(lambda op: op.spectrum(), ops, threads)
    measures = [op.trace for op in ops]
    counts = select_eigenfunctions(spectra, measures, policy)

    atoms: list[FrameAtom] = []
    for gamma, (spec, n) in enumerate(zip(spectra, counts)):
        if spec.eigenvalues[0] <= _DEGENERATE_TOL:
            warnings.warn(
                f"region {gamma} has a numerically zero operator; contributing no atoms",
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
    return EigenFrame(cover.L, tuple(atoms), weighted)


def frame_operator(frame: EigenFrame) -> np.ndarray:
    G = frame.atom_matrix()
    return G @ G.conj().T


def frame_certificate(frame: EigenFrame, a_tol: float | None = None) -> FrameCertificate:
    """Frame bounds as the extreme eigenvalues of S = sum w^2 |v><v|."""
    S = frame_operator(frame)
    ev = np.linalg.eigvalsh(S)
    A, B = float(ev[0]), float(ev[-1])
    if a_tol is None:
        a_tol = 1e-9 * B
    condition = B / A if A > 0.0 else math.inf
    return FrameCertificate(A, B, condition, S, A > a_tol, float(a_tol))


def reconstruct(
    frame: EigenFrame, f: Signal, certificate: FrameCertificate | None = None
) -> tuple[Signal, float]:
    """Canonical dual reconstruction f_rec = S^{-1} sum <f, w v> (w v).

    The Hermitian solve reuses the eigendecomposition of the frame operator.
    Returns (f_rec, relative error); the zero signal reconstructs to zero with
    error 0 by convention.
    """
    cert = certificate if certificate is not None else frame_certificate(frame)
    if not cert.is_frame:
        raise NotAFrameError(
            f"lower frame bound {cert.A!r} is below tolerance {cert.a_tol!r}"
        )
    if f.length != frame.L:
        raise InvalidArgumentError(f"signal length {f.length} != frame length {frame.L}")
    if f.norm == 0.0:
        return Signal(np.zeros(frame.L, dtype=np.complex128)), 0.0
    G = frame.atom_matrix()
    y = G @ (G.conj().T @ f.samples)
    w, Q = np.linalg.eigh(cert.frame_operator)
    f_rec = Q @ ((Q.conj().T @ y) / w)
    rel = float(np.linalg.norm(f_rec - f.samples) / f.norm)
    return Signal(f_rec), rel


# ---------------------------------------------------------------------------
# Norm-equivalence diagnostics: extreme eigenvalues of G = sum_gamma K'K with
# K per region being H (plain), H^2 (squared), or the thresholded H^eps
# (thresholded); the equivalence constants are their square roots.
# ---------------------------------------------------------------------------

def _gram_from_spectra(spectra: list[Spectrum], power: float, epsilon: float | None) -> np.ndarray:
    L = spectra[0].eigenvalues.size
    G = np.zeros((L, L), dtype=np.complex128)
    for spec in spectra:
        lam = spec.eigenvalues
        if epsilon is None:
            Q = spec.eigenvectors
            G += (Q * lam**power) @ Q.conj().T
        else:
            keep = lam > epsilon
            Q = spec.eigenvectors[:, keep]
            G += (Q * lam[keep] ** power) @ Q.conj().T
    return G


def norm_equivalence_constants(
    cover: Cover,
    phi: Window,
    variant: str = "plain",
    epsilon: float | None = None,
    threads: int = 1,
) -> tuple[float, float]:
    """(c, C) = extreme eigenvalues of the Gram sum for the chosen variant."""
    _, sum_min, _ = sum_symbols(cover)
    if sum_min <= 0.0:
        raise PreconditionViolation("cover does not cover the grid")
    ops = region_operators(cover, phi, threads)
    spectra = _map_ordered(lambda op: op.spectrum(), ops, threads)
    if variant == "plain":
        G = _gram_from_spectra(spectra, 2.0, None)
    elif variant == "squared":
        G = _gram_from_spectra(spectra, 4.0, None)
    elif variant == "thresholded":
        if epsilon is None or epsilon < 0.0:
            raise InvalidArgumentError("thresholded variant requires epsilon >= 0")
        G = _gram_from_spectra(spectra, 2.0, epsilon)
    else:
        raise InvalidArgumentError(f"unknown variant {variant!r}")
    ev = np.linalg.eigvalsh(G)
    return float(ev[0]), float(ev[-1])


def epsilon_sweep(
    cover: Cover, phi: Window, epsilons, threads: int = 1
) -> list[tuple[float, float, float]]:
    """(epsilon, c, C) rows of the thresholded constants; one eigensolve per region."""
    ops = region_operators(cover, phi, threads)
    spectra = _map_ordered(lambda op: op.spectrum(), ops, threads)
    rows = []
    for eps in epsilons:
        G = _gram_from_spectra(spectra, 2.0, float(eps))
        ev = np.linalg.eigvalsh(G)
        rows.append((float(eps), float(ev[0]), float(ev[-1])))
    return rows


def ball_operator_spectrum(L: int, phi: Window, radius: int) -> np.ndarray:
    """Descending spectrum of the indicator operator of a wrapped ball.

    By covariance this does not depend on the ball's center; it provides the
    floor lambda_k >= c * lambda^{ball}_k for eigenvalues selected from any
    region whose symbol dominates c times a radius-``radius`` ball indicator.
    """
    grid = PhaseSpaceGrid(L)
    ball = Symbol.indicator(L, (0, 0), grid.ball_cells((0, 0), radius))
    return assemble_locop(ball, phi).spectrum().eigenvalues


# ---------------------------------------------------------------------------
# Frame files: JSON manifest + binary atom sidecar (magic b"TFAT", then
# consecutive length-L complex f64 records at the byte offsets recorded in
# the manifest).  Certificate JSON uses the fixed key set below.
# ---------------------------------------------------------------------------

def write_frame(manifest_path, atoms_path, frame: EigenFrame) -> None:
    record_len = frame.L * 16
    entries = []
    with open(atoms_path, "wb") as fh:
        fh.write(b"TFAT")
        for i, atom in enumerate(frame.atoms):
            offset = 4 + i * record_len
            interleaved = np.empty((frame.L, 2), dtype="<f8")
            interleaved[:, 0] = atom.vector.real
            interleaved[:, 1] = atom.vector.imag
            fh.write(interleaved.tobytes())
            entries.append(
                {
                    "gamma": atom.gamma,
                    "k": atom.k,
                    "lambda": atom.lam,
                    "weight": atom.weight,
                    "offset": offset,
                }
            )
    manifest = {"L": frame.L, "weighted": frame.weighted, "atoms": entries}
    with open(manifest_path, "w", newline="") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")


def read_frame(manifest_path, atoms_path) -> EigenFrame:
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    L = int(manifest["L"])
    with open(atoms_path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != b"TFAT":
        raise InvalidArgumentError(f"bad atoms magic {blob[:4]!r}", path=str(atoms_path))
    atoms = []
    for entry in manifest["atoms"]:
        off = int(entry["offset"])
        data = np.frombuffer(blob, dtype="<f8", count=2 * L, offset=off).reshape(L, 2)
        atoms.append(
            FrameAtom(
                vector=(data[:, 0] + 1j * data[:, 1]).copy(),
                weight=float(entry["weight"]),
                gamma=int(entry["gamma"]),
                k=int(entry["k"]),
                lam=float(entry["lambda"]),
            )
        )
    return EigenFrame(L, tuple(atoms), bool(manifest["weighted"]))


def certificate_to_dict(cert: FrameCertificate) -> dict:
    return {
        "A": cert.A,
        "B": cert.B,
        "condition": cert.condition,
        "is_frame": cert.is_frame,
        "atol": cert.a_tol,
    }


def write_certificate_json(path, cert: FrameCertificate) -> None:
    with open(path, "w", newline="") as fh:
        json.dump(certificate_to_dict(cert), fh, indent=1)
        fh.write("\n")
