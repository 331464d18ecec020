"""Frames adapted to covers of the finite time-frequency plane Z_L x Z_L."""

from .core import (
    PhasePlaneArray,
    PhaseSpaceGrid,
    Signal,
    Window,
    gauss_window,
    istft,
    stft,
    tf_shift,
)
from .covers import (
    AdmissibilityReport,
    Cover,
    Symbol,
    gen_random_irregular,
    gen_regular_boxes,
    gen_wedge_cover,
    read_cover_json,
    sum_symbols,
    validate_cover,
    write_cover_json,
)
from .errors import (
    DimensionError,
    EmptyFrameError,
    InternalError,
    InvalidArgumentError,
    NotAFrameError,
    NumericError,
    PreconditionViolation,
    TflocError,
)
from .frames import (
    EigenFrame,
    FrameAtom,
    FrameCertificate,
    SelectionPolicy,
    assemble_frame,
    ball_operator_spectrum,
    epsilon_sweep,
    frame_certificate,
    norm_equivalence_constants,
    read_frame,
    reconstruct,
    select_eigenfunctions,
    write_frame,
)
from .gabor import (
    Lattice,
    LatticeGaborSystem,
    canonical_tight,
    gabor_eigenframe,
    gabor_frame_operator,
    gabor_multiplier,
    lattice_masses,
)
from .locop import (
    LocOperator,
    Spectrum,
    ThresholdedOp,
    assemble_locop,
    concentration,
    eigendecomp,
    shift_symbol_conjugation_check,
    threshold,
)

__version__ = "0.1.0"
