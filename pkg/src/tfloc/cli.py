"""Command-line front end: spectrogram, frame, reconstruct, diagnose.

All structured output is JSON with shortest round-trip float printing;
images are binary PGM.  Runs are fully deterministic for a fixed config and
inputs, independent of the thread count: worker threads only change the
scheduling of per-region jobs, never any numeric path.  Wall-clock timings
are therefore opt-in (``--timings``); without the flag the ``timings`` field
of ``report.json`` is null and every output byte is reproducible.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .core import Window, gauss_window, read_signal_csv, stft
from .covers import (
    Cover,
    gen_random_irregular,
    gen_regular_boxes,
    gen_wedge_cover,
    read_cover_json,
    validate_cover,
    write_cover_json,
)
from .errors import (
    InternalError,
    InvalidArgumentError,
    PreconditionViolation,
    TflocError,
)
from .frames import (
    EigenFrame,
    FrameCertificate,
    SelectionPolicy,
    assemble_frame,
    epsilon_sweep,
    frame_certificate,
    norm_equivalence_constants,
    read_frame,
    reconstruct,
    write_certificate_json,
    write_frame,
)
from .locop import RANK_RTOL
from .gabor import (
    Lattice,
    LatticeGaborSystem,
    canonical_tight,
    gabor_eigenframe,
    lattice_coverage_min,
    lattice_masses,
)

SWEEP_EPSILONS = [round(0.1 * i, 1) for i in range(10)]


@dataclass
class RunConfig:
    L: int
    window_source: str | Path  # "gauss" or a CSV path
    cover_source: tuple[str, dict] | Path  # (generator name, params) or a JSON path
    policy: SelectionPolicy
    weighted: bool
    lattice: Lattice | None
    admissibility: dict
    seed: int | None
    reconstruct_tol: float
    output_dir: Path | None
    base_dir: Path


def _exactly_one(name: str, present: list[str]) -> None:
    if len(present) != 1:
        raise InvalidArgumentError(
            f"config needs exactly one {name} source, got {present or 'none'}"
        )


def load_config(path) -> RunConfig:
    path = Path(path)
    with open(path) as fh:
        raw = json.load(fh)
    try:
        L = int(raw["L"])
    except KeyError:
        raise InvalidArgumentError("config is missing 'L'", path=str(path)) from None

    window = raw.get("window", "gauss")
    if window == "gauss":
        window_source: str | Path = "gauss"
    elif isinstance(window, dict) and set(window) == {"file"}:
        window_source = path.parent / window["file"]
    else:
        raise InvalidArgumentError(
            'config "window" must be "gauss" or {"file": path}', got=window
        )

    cover = raw.get("cover")
    if not isinstance(cover, dict):
        raise InvalidArgumentError('config is missing a "cover" object')
    known = [k for k in ("regular", "wedge", "irregular", "file") if k in cover]
    _exactly_one("cover", known)
    kind = known[0]
    cover_source: tuple[str, dict] | Path
    if kind == "file":
        cover_source = path.parent / cover["file"]
    else:
        cover_source = (kind, dict(cover[kind]))

    pol = raw.get("policy", {})
    policy = SelectionPolicy(
        mode=pol.get("mode", "epsilon"),
        alpha=pol.get("alpha"),
        epsilon=pol.get("epsilon"),
        n_max=int(pol.get("n_max", L)),
    )

    lattice = None
    if raw.get("lattice") is not None:
        lattice = Lattice(L, int(raw["lattice"]["a"]), int(raw["lattice"]["b"]))

    out = raw.get("output_dir")
    return RunConfig(
        L=L,
        window_source=window_source,
        cover_source=cover_source,
        policy=policy,
        weighted=bool(raw.get("weighted", True)),
        lattice=lattice,
        admissibility=dict(raw.get("admissibility", {})),
        seed=raw.get("seed"),
        reconstruct_tol=float(raw.get("reconstruct_tol", 1e-8)),
        output_dir=path.parent / out if out else None,
        base_dir=path.parent,
    )


def resolve_window(cfg: RunConfig) -> Window:
    if cfg.window_source == "gauss":
        return gauss_window(cfg.L)
    sig = read_signal_csv(cfg.window_source)
    if sig.length != cfg.L:
        raise InvalidArgumentError(
            f"window file has length {sig.length}, config L={cfg.L}",
            path=str(cfg.window_source),
        )
    return Window(sig.samples).unit()


def resolve_cover(cfg: RunConfig) -> Cover:
    if isinstance(cfg.cover_source, Path):
        cover = read_cover_json(cfg.cover_source)
        if cover.L != cfg.L:
            raise InvalidArgumentError(
                f"cover file has L={cover.L}, config L={cfg.L}",
                path=str(cfg.cover_source),
            )
        return cover
    kind, params = cfg.cover_source
    if kind == "regular":
        return gen_regular_boxes(cfg.L, int(params["bx"]), int(params["by"]))
    if kind == "wedge":
        return gen_wedge_cover(cfg.L, [tuple(b) for b in params["bands"]])
    seed = params.get("seed", cfg.seed)
    if seed is None:
        raise InvalidArgumentError("irregular cover needs a seed (in cover spec or top level)")
    return gen_random_irregular(
        cfg.L, int(seed), int(params["target_size"]), float(params.get("overlap", 0.5))
    )


def _write_json(path: Path, payload) -> None:
    with open(path, "w", newline="") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def write_pgm(path: Path, values: np.ndarray) -> None:
    """8-bit PGM of a phase-plane magnitude array indexed [x, xi].

    Rows run over xi descending, columns over x ascending; values are mapped
    linearly from [0, max] to [0, 255] (an all-zero array stays zero).
    """
    L = values.shape[0]
    vmax = float(values.max())
    img = values.T[::-1, :]
    if vmax > 0.0:
        pix = np.floor(img * (255.0 / vmax) + 0.5).astype(np.uint8)
    else:
        pix = np.zeros((L, L), dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{L} {L}\n255\n".encode())
        fh.write(pix.tobytes())


def _region_rows(frame: EigenFrame, n_regions: int, masses: list[float]) -> list[dict]:
    per: dict[int, list[float]] = {}
    for atom in frame.atoms:
        per.setdefault(atom.gamma, []).append(atom.lam)
    rows = []
    for gamma in range(n_regions):
        lams = per.get(gamma, [])
        rows.append(
            {
                "gamma": gamma,
                "count": len(lams),
                "lambda_max": max(lams) if lams else None,
                "lambda_min": min(lams) if lams else None,
                "mass": masses[gamma],
            }
        )
    return rows


def _build_frame(cfg: RunConfig, cover: Cover, phi: Window, threads: int):
    """Grid or lattice pipeline; returns (frame, certificate, extras-for-report)."""
    if cfg.lattice is None:
        frame = assemble_frame(cover, phi, cfg.policy, cfg.weighted, threads=threads)
        cert = frame_certificate(frame)
        masses = [s.mass for s in cover.regions]
        extras = {"lattice": None, "measure": "l1_mass / L (operator trace)"}
    else:
        phit = canonical_tight(phi, cfg.lattice)
        sys_ = LatticeGaborSystem.build(phit, cfg.lattice)
        frame, cert = gabor_eigenframe(cover, sys_, cfg.policy, cfg.weighted, threads=threads)
        masses = lattice_masses(cover, cfg.lattice)
        extras = {
            "lattice": {"a": cfg.lattice.a, "b": cfg.lattice.b},
            "tight_constant": sys_.tight_constant,
            "measure": "tight_constant * lattice l1_mass (multiplier trace)",
        }
    return frame, cert, masses, extras


def cmd_spectrogram(cfg: RunConfig, signal_path, out_dir: Path, threads: int) -> int:
    f = read_signal_csv(signal_path)
    if f.length != cfg.L:
        raise InvalidArgumentError(
            f"signal length {f.length} does not match config L={cfg.L}",
            path=str(signal_path),
        )
    phi = resolve_window(cfg)
    V = stft(f, phi)
    power = np.abs(V.values) ** 2
    L = cfg.L
    lines = ["x,xi,value"]
    for x in range(L):
        for xi in range(L):
            lines.append(f"{x},{xi},{float(power[x, xi])!r}")
    with open(out_dir / "spectrogram.csv", "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    write_pgm(out_dir / "spectrogram.pgm", power)
    return 0


def cmd_frame(cfg: RunConfig, out_dir: Path, threads: int, timings: bool = False) -> int:
    t0 = time.perf_counter()
    phi = resolve_window(cfg)
    cover = resolve_cover(cfg)

    adm = cfg.admissibility
    report = validate_cover(
        cover,
        R=int(adm.get("R", cfg.L // 2)),
        r=adm.get("r"),
        w=int(adm.get("w", 1)),
    )
    adm_payload = {
        "covers_grid": report.covers_grid,
        "outer_radius_ok": report.outer_radius_ok,
        "max_outer_radius": report.max_outer_radius,
        "inner_radius_ok": report.inner_radius_ok,
        "min_inner_radius": report.min_inner_radius,
        "spreadness": report.spreadness,
        "window": report.window,
        "sum_min": report.sum_min,
        "sum_max": report.sum_max,
        "duplicate_centers": report.duplicate_centers,
    }
    if cfg.lattice is not None:
        # symbols are restricted to the lattice: coverage is judged there,
        # outer radius stays a full-grid notion
        lat_min = lattice_coverage_min(cover, cfg.lattice)
        adm_payload["lattice_sum_min"] = lat_min
        adm_payload["covers_lattice"] = lat_min > 0.0
    _write_json(out_dir / "admissibility.json", adm_payload)
    if cfg.lattice is None and not report.covers_grid:
        raise PreconditionViolation("cover does not cover the grid")
    if cfg.lattice is not None and not adm_payload["covers_lattice"]:
        raise PreconditionViolation("cover does not cover the lattice")
    if not report.outer_radius_ok:
        raise PreconditionViolation(
            f"outer radius {report.max_outer_radius} exceeds configured R={adm.get('R', cfg.L // 2)}"
        )

    t1 = time.perf_counter()
    frame, cert, masses, extras = _build_frame(cfg, cover, phi, threads)
    t2 = time.perf_counter()

    write_frame(out_dir / "frame.json", out_dir / "frame_atoms.tfat", frame)
    write_certificate_json(out_dir / "certificate.json", cert)
    if isinstance(cfg.cover_source, tuple):
        write_cover_json(out_dir / "cover.json", cover)

    report_payload = {
        "L": cfg.L,
        "weighted": cfg.weighted,
        "policy": {
            "mode": cfg.policy.mode,
            "alpha": cfg.policy.alpha,
            "epsilon": cfg.policy.epsilon,
            "n_max": cfg.policy.n_max,
        },
        "implied_alpha": cfg.policy.implied_alpha,
        "atom_count": len(frame.atoms),
        "regions": _region_rows(frame, len(cover.regions), masses),
        "A": cert.A,
        "B": cert.B,
        "condition": cert.condition,
        "is_frame": cert.is_frame,
        "rank_rtol": RANK_RTOL,
        **extras,
        "timings": None,
    }
    if timings:
        report_payload["timings"] = {
            "setup_s": t1 - t0,
            "assemble_s": t2 - t1,
            "total_s": time.perf_counter() - t0,
        }
    _write_json(out_dir / "report.json", report_payload)
    return 0 if cert.is_frame else 1


def _load_or_build_frame(cfg: RunConfig, out_dir: Path, threads: int) -> tuple[EigenFrame, FrameCertificate]:
    manifest = out_dir / "frame.json"
    atoms = out_dir / "frame_atoms.tfat"
    if manifest.exists() and atoms.exists():
        frame = read_frame(manifest, atoms)
        if frame.L != cfg.L:
            raise InvalidArgumentError(
                f"stored frame has L={frame.L}, config L={cfg.L}", path=str(manifest)
            )
        return frame, frame_certificate(frame)
    phi = resolve_window(cfg)
    cover = resolve_cover(cfg)
    frame, cert, _, _ = _build_frame(cfg, cover, phi, threads)
    return frame, cert


def cmd_reconstruct(cfg: RunConfig, signal_path, out_dir: Path, threads: int) -> int:
    f = read_signal_csv(signal_path)
    if f.length != cfg.L:
        raise InvalidArgumentError(
            f"signal length {f.length} does not match config L={cfg.L}",
            path=str(signal_path),
        )
    frame, cert = _load_or_build_frame(cfg, out_dir, threads)
    _, rel_error = reconstruct(frame, f, cert)
    ok = rel_error <= cfg.reconstruct_tol
    _write_json(
        out_dir / "reconstruction.json",
        {"rel_error": rel_error, "tol": cfg.reconstruct_tol, "ok": ok},
    )
    print(f"rel_error = {rel_error!r}")
    return 0 if ok else 1


def cmd_diagnose(cfg: RunConfig, out_dir: Path, threads: int) -> int:
    phi = resolve_window(cfg)
    cover = resolve_cover(cfg)
    eps = cfg.policy.epsilon if cfg.policy.mode == "epsilon" else 1.0 / cfg.policy.alpha
    c_plain, C_plain = norm_equivalence_constants(cover, phi, "plain", threads=threads)
    c_sq, C_sq = norm_equivalence_constants(cover, phi, "squared", threads=threads)
    c_th, C_th = norm_equivalence_constants(cover, phi, "thresholded", epsilon=eps, threads=threads)
    sweep = epsilon_sweep(cover, phi, SWEEP_EPSILONS, threads=threads)

    cs = [row[1] for row in sweep]
    for prev, nxt in zip(cs, cs[1:]):
        if nxt > prev + 1e-9:
            raise InternalError(
                f"thresholded lower constant increased along the sweep: {prev!r} -> {nxt!r}"
            )
    a_tol = 1e-9 * C_plain
    feasible = [row[0] for row in sweep if row[1] > a_tol]
    payload = {
        "plain": {"c": c_plain, "C": C_plain},
        "squared": {"c": c_sq, "C": C_sq},
        "thresholded": {"epsilon": eps, "c": c_th, "C": C_th},
        "epsilon_sweep": [{"epsilon": e, "c": c, "C": C} for e, c, C in sweep],
        "largest_epsilon_with_positive_c": max(feasible) if feasible else None,
        "atol": a_tol,
    }
    _write_json(out_dir / "diagnostics.json", payload)
    return 0


def _error_payload(exc: Exception) -> dict:
    if isinstance(exc, TflocError):
        return {"code": exc.code, "message": str(exc), "context": exc.context}
    if isinstance(exc, OSError):
        ctx = {"path": exc.filename} if getattr(exc, "filename", None) else {}
        return {"code": "io-error", "message": str(exc), "context": ctx}
    return {"code": "internal-error", "message": f"{type(exc).__name__}: {exc}", "context": {}}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfloc",
        description="Construct and certify eigenfunction frames adapted to "
        "covers of the finite time-frequency plane.",
    )
    parser.add_argument("--version", action="version", version=f"tfloc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, signal=False):
        p.add_argument("--config", required=True, help="run configuration JSON")
        if signal:
            p.add_argument("--signal", required=True, help="signal CSV (t,re,im)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help="worker threads for per-region jobs (default: $TFLOC_THREADS or 1)",
        )

    common(sub.add_parser("spectrogram", help="export |STFT|^2 as CSV and PGM"), signal=True)
    p_frame = sub.add_parser("frame", help="build a frame, certificate and report")
    common(p_frame)
    p_frame.add_argument(
        "--timings", action="store_true", help="include wall-clock timings in report.json"
    )
    common(sub.add_parser("reconstruct", help="dual-frame reconstruction error"), signal=True)
    common(sub.add_parser("diagnose", help="norm-equivalence constants and epsilon sweep"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("TFLOC_THREADS", "1"))
    if threads < 1:
        threads = 1

    out_dir: Path | None = Path(args.out) if args.out else None
    try:
        cfg = load_config(args.config)
        if out_dir is None:
            out_dir = cfg.output_dir or Path.cwd()
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "spectrogram":
            return cmd_spectrogram(cfg, args.signal, out_dir, threads)
        if args.command == "frame":
            return cmd_frame(cfg, out_dir, threads, timings=args.timings)
        if args.command == "reconstruct":
            return cmd_reconstruct(cfg, args.signal, out_dir, threads)
        if args.command == "diagnose":
            return cmd_diagnose(cfg, out_dir, threads)
        raise InternalError(f"unhandled command {args.command!r}")
    except (TflocError, OSError) as exc:
        payload = _error_payload(exc)
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
            _write_json(out_dir / "error.json", payload)
        print(f"error [{payload['code']}]: {payload['message']}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
