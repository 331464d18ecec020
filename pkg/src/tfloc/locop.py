"""Time-frequency localization operators on Z_L.

The operator attached to a nonnegative mask ``eta`` and a unit-norm window
``phi`` is the dense Hermitian L x L matrix

    H[t, t'] = (1/L) sum_z eta(z) (pi(z) phi)(t) conj((pi(z) phi)(t')),

i.e. mask the STFT coefficients by ``eta``, then synthesize.  With the 1/L
normalization the unit mask gives exactly the identity, trace(H) = ||eta||_1/L,
and eta >= 0 makes H positive semidefinite.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .core import Signal, Window, stft, _require_window
from .covers import Symbol
from .errors import DimensionError, InvalidArgumentError, NumericError

# columns of shifted windows are materialized in fixed chunks; keeps memory
# bounded and the accumulation order deterministic
_ASSEMBLY_CHUNK = 4096

# eigenvalues <= RANK_RTOL * lambda_1 count as numerically zero in rank reports
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class Spectrum:
    """Descending eigenpairs of a Hermitian operator.

    Column k of ``eigenvectors`` belongs to ``eigenvalues[k]``.  Each column is
    scaled so its largest-magnitude entry (lowest index on ties) is real and
    positive; within a degenerate cluster only the spanned subspace is
    meaningful.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def numerical_rank(self) -> int:
        if self.eigenvalues.size == 0 or self.eigenvalues[0] <= 0.0:
            return 0
        return int(np.sum(self.eigenvalues > RANK_RTOL * self.eigenvalues[0]))


class LocOperator:
    """Dense Hermitian localization operator with a cached eigendecomposition."""

    def __init__(self, matrix: np.ndarray, symbol: Symbol | None = None,
                 window: Window | None = None, symbol_ref: str = ""):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InvalidArgumentError(f"operator matrix must be square, got {matrix.shape}")
        self.matrix = matrix
        self.symbol = symbol
        self.window = window
        self.symbol_ref = symbol_ref or (f"symbol@{symbol.center}" if symbol else "")
        self._spectrum: Spectrum | None = None

    @property
    def L(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def spectrum(self) -> Spectrum:
        if self._spectrum is None:
            self._spectrum = eigendecomp(self)
        return self._spectrum

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v


def shifted_window_columns(L: int, w: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """Matrix whose column i is pi(cells[i]) w."""
    t = np.arange(L)[:, None]
    phase = np.exp((2j * np.pi / L) * (t * cells[None, :, 1]))
    return phase * w[(t - cells[None, :, 0]) % L]


def assemble_locop(eta: Symbol, phi: Window) -> LocOperator:
    """Assemble H_eta densely; O(L^2 |supp eta|) in fixed chunks."""
    w = _require_window(phi, eta.L)
    L = eta.L
    M = np.zeros((L, L), dtype=np.complex128)
    scale = np.sqrt(eta.values / L)
    for lo in range(0, eta.cells.shape[0], _ASSEMBLY_CHUNK):
        hi = lo + _ASSEMBLY_CHUNK
        A = shifted_window_columns(L, w, eta.cells[lo:hi]) * scale[lo:hi][None, :]
        M += A @ A.conj().T
    return LocOperator(M, symbol=eta, window=phi)


def eigendecomp(op: LocOperator) -> Spectrum:
    """Descending eigendecomposition with the deterministic phase convention."""
    try:
        w, Q = np.linalg.eigh(op.matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    w = w[::-1].copy()
    Q = Q[:, ::-1].copy()
    lead = np.argmax(np.abs(Q), axis=0)
    ph = Q[lead, np.arange(Q.shape[1])]
    mag = np.abs(ph)
    safe = mag > 0.0
    factors = np.ones_like(ph)
    factors[safe] = np.conj(ph[safe]) / mag[safe]
    return Spectrum(w, Q * factors[None, :])


@dataclass(frozen=True)
class ThresholdedOp:
    """Spectral truncation keeping eigenvalues strictly above ``epsilon``."""

    source: LocOperator
    epsilon: float
    rank: int

    @property
    def kept_indices(self) -> range:
        return range(self.rank)

    def apply(self, v: np.ndarray) -> np.ndarray:
        spec = self.source.spectrum()
        Q = spec.eigenvectors[:, : self.rank]
        return Q @ (spec.eigenvalues[: self.rank] * (Q.conj().T @ v))

    def matrix(self) -> np.ndarray:
        spec = self.source.spectrum()
        Q = spec.eigenvectors[:, : self.rank]
        return (Q * spec.eigenvalues[: self.rank]) @ Q.conj().T

    def squared_matrix(self) -> np.ndarray:
        """(H^eps)^2, assembled from the kept eigenpairs."""
        spec = self.source.spectrum()
        Q = spec.eigenvectors[:, : self.rank]
        return (Q * spec.eigenvalues[: self.rank] ** 2) @ Q.conj().T


def threshold(op: LocOperator, epsilon: float) -> ThresholdedOp:
    if epsilon < 0.0:
        raise InvalidArgumentError(f"threshold must be >= 0, got {epsilon}")
    spec = op.spectrum()
    rank = int(np.sum(spec.eigenvalues > epsilon))
    return ThresholdedOp(op, float(epsilon), rank)


def concentration(f: Signal, eta: Symbol, phi: Window) -> float:
    """Time-frequency mass of f inside eta: (1/L) sum_z eta(z) |Vf(z)|^2."""
    if f.norm == 0.0:
        raise InvalidArgumentError("concentration of the zero signal is undefined")
    if f.length != eta.L:
        raise DimensionError(f"signal length {f.length} != grid {eta.L}")
    V = stft(f, phi).values
    vals = np.abs(V[eta.cells[:, 0], eta.cells[:, 1]]) ** 2
    return float(np.sum(eta.values * vals) / eta.L)


def tf_shift_matrix(L: int, z: tuple[int, int]) -> np.ndarray:
    """The unitary matrix of pi(z) on C^L."""
    x, xi = int(z[0]) % L, int(z[1]) % L
    t = np.arange(L)
    U = np.zeros((L, L), dtype=np.complex128)
    U[t, (t - x) % L] = np.exp(2j * np.pi * xi * t / L)
    return U


@dataclass(frozen=True)
class ConjugationReport:
    shift: tuple[int, int]
    max_matrix_deviation: float
    max_spectrum_deviation: float

    @property
    def ok(self) -> bool:
        return self.max_matrix_deviation <= 1e-9 and self.max_spectrum_deviation <= 1e-9


def shift_symbol_conjugation_check(op: LocOperator, z: tuple[int, int]) -> ConjugationReport:
    """Compare pi(z) H_eta pi(z)* against the operator of the shifted symbol.

    Both the matrices and the descending spectra are compared; deviations
    <= 1e-9 constitute a pass.
    """
    if op.symbol is None or op.window is None:
        raise InvalidArgumentError("operator does not carry its source symbol and window")
    U = tf_shift_matrix(op.L, z)
    lhs = U @ op.matrix @ U.conj().T
    shifted_op = assemble_locop(op.symbol.shifted(z), op.window)
    dev = float(np.max(np.abs(lhs - shifted_op.matrix)))
    spec_dev = float(
        np.max(np.abs(op.spectrum().eigenvalues - shifted_op.spectrum().eigenvalues))
    )
    return ConjugationReport(tuple(int(c) for c in z), dev, spec_dev)


# ---------------------------------------------------------------------------
# Operator binary format: magic b"TFLO", little-endian u32 L, then L^2
# little-endian f64 (re, im) pairs in row-major order.
# Spectrum CSV: header `k,lambda`, k starting at 1, descending.
# ---------------------------------------------------------------------------

def write_operator_binary(path, op: LocOperator) -> None:
    L = op.L
    interleaved = np.empty((L * L, 2), dtype="<f8")
    interleaved[:, 0] = op.matrix.real.ravel()
    interleaved[:, 1] = op.matrix.imag.ravel()
    with open(path, "wb") as fh:
        fh.write(b"TFLO")
        fh.write(struct.pack("<I", L))
        fh.write(interleaved.tobytes())


def read_operator_binary(path) -> LocOperator:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != b"TFLO":
            raise InvalidArgumentError(f"bad operator magic {magic!r}", path=str(path))
        (L,) = struct.unpack("<I", fh.read(4))
        data = np.frombuffer(fh.read(L * L * 16), dtype="<f8").reshape(L * L, 2)
    return LocOperator((data[:, 0] + 1j * data[:, 1]).reshape(L, L))


def write_spectrum_csv(path, spec: Spectrum) -> None:
    lines = ["k,lambda"]
    for k, lam in enumerate(spec.eigenvalues, start=1):
        lines.append(f"{k},{float(lam)!r}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
