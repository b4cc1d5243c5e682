"""Deterministic serialization of run artifacts.

CSV writers emit one header row and shortest-round-trip decimal floats
(Python's repr), so a written file reads back bit-exactly and two runs
with the same seed produce byte-identical artifacts.  2D fields go to
binary PGM (P5) with the value range recorded in a comment line.  All
writers create the file under a temporary name in the target directory
and rename it into place, so a failed run leaves no partial artifacts.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


def fmt(value: float) -> str:
    """Shortest decimal representation that round-trips the float."""
    return repr(float(value))


def _atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-aggrsim-")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_csv(path: str, header: list[str], rows: list[list[str]]) -> None:
    """Write a CSV file atomically with Unix newlines."""
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ConfigError("row width does not match the header")
        lines.append(",".join(row))
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def write_particles_csv(
    path: str,
    positions: np.ndarray,
    theta: np.ndarray,
    velocities: np.ndarray | None = None,
) -> None:
    """Particle table: id,x[,y][,vx,vy],theta."""
    positions = np.asarray(positions, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if positions.ndim != 2 or positions.shape[1] not in (1, 2):
        raise ConfigError("positions must have shape (n, 1) or (n, 2)")
    n, dim = positions.shape
    if theta.shape != (n,):
        raise ConfigError("theta must have one value per particle")
    header = ["id", "x"] + (["y"] if dim == 2 else [])
    if velocities is not None:
        velocities = np.asarray(velocities, dtype=np.float64)
        if velocities.shape != positions.shape:
            raise ConfigError("velocities must match the positions shape")
        header += ["vx"] + (["vy"] if dim == 2 else [])
    header.append("theta")
    rows = []
    for i in range(n):
        row = [str(i)] + [fmt(c) for c in positions[i]]
        if velocities is not None:
            row += [fmt(c) for c in velocities[i]]
        row.append(fmt(theta[i]))
        rows.append(row)
    write_csv(path, header, rows)


def write_profile_csv(path: str, x: np.ndarray, rho: np.ndarray) -> None:
    """1D density profile: x,rho."""
    x = np.asarray(x, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    if x.ndim != 1 or x.shape != rho.shape:
        raise ConfigError("x and rho must be 1D arrays of equal length")
    write_csv(path, ["x", "rho"], [[fmt(a), fmt(b)] for a, b in zip(x, rho)])


def read_profile_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Read back a profile written by write_profile_csv."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.strip() for line in handle if line.strip()]
    if not lines or lines[0] != "x,rho":
        raise ConfigError("not a profile CSV (expected header 'x,rho')")
    xs, rhos = [], []
    for line in lines[1:]:
        a, b = line.split(",")
        xs.append(float(a))
        rhos.append(float(b))
    return np.array(xs), np.array(rhos)


def write_moments_csv(
    path: str,
    times: np.ndarray,
    masses: np.ndarray,
    momenta: np.ndarray,
    energies: np.ndarray,
) -> None:
    """Global moment trace: t,mass,momentum,energy."""
    arrays = [np.asarray(a, dtype=np.float64) for a in (times, masses, momenta, energies)]
    if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1:
        raise ConfigError("moment columns must be 1D arrays of equal length")
    rows = [[fmt(v) for v in row] for row in zip(*arrays)]
    write_csv(path, ["t", "mass", "momentum", "energy"], rows)


def write_stability_csv(path: str, report) -> None:
    """Per-mode stability table: n,xi,ReW,lambda,stable (stable: 1/0)."""
    rows = [
        [str(m.n), fmt(m.xi), fmt(m.re_w), fmt(m.growth_rate), str(int(not m.unstable))]
        for m in report.modes
    ]
    write_csv(path, ["n", "xi", "ReW", "lambda", "stable"], rows)


def write_pgm(path: str, values: np.ndarray) -> None:
    """Binary PGM (P5) of a 2D array, linearly rescaled to 0..255.

    The comment line records the original range as `# min=<v> max=<v>`
    with full round-trip precision; a constant array maps to gray 128.
    Row i of the array is row i of the image (top to bottom).
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ConfigError("PGM output needs a 2D array")
    lo = float(values.min())
    hi = float(values.max())
    if hi > lo:
        scaled = np.rint((values - lo) * (255.0 / (hi - lo)))
        pixels = np.clip(scaled, 0.0, 255.0).astype(np.uint8)
    else:
        pixels = np.full(values.shape, 128, dtype=np.uint8)
    height, width = values.shape
    header = f"P5\n# min={fmt(lo)} max={fmt(hi)}\n{width} {height}\n255\n"
    _atomic_write(path, header.encode("ascii") + pixels.tobytes())


def read_pgm(path: str) -> tuple[np.ndarray, float, float]:
    """Read back a PGM written by write_pgm: (pixels, min, max)."""
    with open(path, "rb") as handle:
        data = handle.read()
    parts = data.split(b"\n", 4)
    if len(parts) != 5 or parts[0] != b"P5":
        raise ConfigError("not a binary PGM file")
    comment = parts[1].decode("ascii")
    if not comment.startswith("# min=") or " max=" not in comment:
        raise ConfigError("missing range comment in PGM")
    lo = float(comment[len("# min=") : comment.index(" max=")])
    hi = float(comment[comment.index(" max=") + len(" max=") :])
    width, height = (int(tok) for tok in parts[2].split())
    if parts[3] != b"255":
        raise ConfigError("expected 8-bit PGM")
    pixels = np.frombuffer(parts[4][: width * height], dtype=np.uint8)
    if pixels.size != width * height:
        raise ConfigError("truncated PGM pixel data")
    return pixels.reshape(height, width).copy(), lo, hi

@dataclass(frozen=True)
class SnapshotRecord:
    """One recorded artifact: a time stamp, a payload kind, and the data.

    Kinds and payload keys:
      particles -> positions, theta, optionally velocities
      field1d   -> x, rho
      field2d   -> values (2D array)
      phase     -> values (space x velocity array)
      moments   -> times, masses, momenta, energies
      stability -> report
    """

    time: float
    kind: str
    label: str
    payload: dict


_FORMATS_BY_KIND = {
    "particles": ("csv",),
    "field1d": ("csv",),
    "field2d": ("pgm",),
    "phase": ("pgm",),
    "moments": ("csv",),
    "stability": ("csv",),
}


def write_snapshot(
    record: SnapshotRecord,
    directory: str,
    formats: tuple[str, ...] = ("csv", "pgm"),
) -> list[str]:
    """Write one record into `directory` in every applicable format.

    Tables and 1D profiles are CSV; 2D and phase-space fields are PGM
    (phase payloads are transposed so velocity increases upward).  The
    requested formats are intersected with what the payload supports;
    an empty intersection is a configuration error.  Returns the paths
    written.
    """
    if record.kind not in _FORMATS_BY_KIND:
        raise ConfigError(f"unknown snapshot kind: {record.kind!r}")
    applicable = [f for f in _FORMATS_BY_KIND[record.kind] if f in formats]
    if not applicable:
        raise ConfigError(
            f"no requested format applies to a {record.kind} payload"
        )
    paths = []
    p = record.payload
    for form in applicable:
        path = os.path.join(directory, f"{record.label}.{form}")
        if record.kind == "particles":
            write_particles_csv(path, p["positions"], p["theta"], p.get("velocities"))
        elif record.kind == "field1d":
            write_profile_csv(path, p["x"], p["rho"])
        elif record.kind == "field2d":
            write_pgm(path, p["values"])
        elif record.kind == "phase":
            write_pgm(path, np.asarray(p["values"]).T[::-1])
        elif record.kind == "moments":
            write_moments_csv(path, p["times"], p["masses"], p["momenta"], p["energies"])
        else:
            write_stability_csv(path, p["report"])
        paths.append(path)
    return paths
