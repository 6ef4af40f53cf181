"""Text file formats: scans, mode tables, thermo measurements, run reports.

Scan files are plain text. Header lines start with ``#`` and carry
``key=value`` metadata (``temperature_K``, ``normalization``, ``label`` and
anything else); data lines hold ``frequency_Hz transmission [sigma]``.
Floats are written with ``repr`` so a write/read roundtrip is bit-exact.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError
from .spectrum import NORMALIZATIONS, SpectrumScan
from .thermo import ThermoMeasurement


@contextmanager
def atomic_write(path, mode: str = "w"):
    """Write to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
        _default_permissions(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _default_permissions(path) -> None:
    # mkstemp creates 0600; give the final file the usual umask-derived mode
    umask = os.umask(0)
    os.umask(umask)
    os.chmod(path, 0o666 & ~umask)


def _r(x) -> str:
    return repr(float(x))


def format_scan(scan: SpectrumScan) -> str:
    lines = []
    if scan.temperature is not None:
        lines.append(f"# temperature_K={_r(scan.temperature)}")
    lines.append(f"# normalization={scan.normalization}")
    lines.append(f"# label={scan.label}")
    for key, value in scan.meta.items():
        if key in ("temperature_K", "normalization", "label"):
            continue
        text = json.dumps(value) if not isinstance(value, str) else value
        lines.append(f"# {key}={text}")
    lines.append("# columns: frequency_Hz transmission" + (" sigma" if scan.sigma is not None else ""))
    if scan.sigma is None:
        lines.extend(f"{_r(f)} {_r(t)}" for f, t in zip(scan.frequency, scan.transmission))
    else:
        lines.extend(f"{_r(f)} {_r(t)} {_r(s)}" for f, t, s in zip(scan.frequency, scan.transmission, scan.sigma))
    return "\n".join(lines) + "\n"


def write_scan_file(scan: SpectrumScan, path) -> Path:
    with atomic_write(path) as fh:
        fh.write(format_scan(scan))
    return Path(path)


def parse_scan(text: str, path: str | None = None) -> SpectrumScan:
    header: dict[str, str] = {}
    rows: list[list[float]] = []
    ncols = None
    last_nu, last_line = None, None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body and not body.startswith("columns"):
                key, _, value = body.partition("=")
                header[key.strip()] = value.strip()
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise FormatError(f"expected 2 or 3 columns, found {len(parts)}", lineno, path)
        if ncols is None:
            ncols = len(parts)
        elif len(parts) != ncols:
            raise FormatError(f"column count changed from {ncols} to {len(parts)}", lineno, path)
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise FormatError(f"not a number: {line!r}", lineno, path) from None
        if not all(math.isfinite(v) for v in vals):
            raise FormatError("non-finite value", lineno, path)
        if ncols == 3 and vals[2] <= 0:
            raise FormatError("sigma must be positive", lineno, path)
        if last_nu is not None and vals[0] <= last_nu:
            raise FormatError(
                f"frequency not strictly increasing ({vals[0]!r} after {last_nu!r} on line {last_line})",
                lineno, path,
            )
        last_nu, last_line = vals[0], lineno
        rows.append(vals)
    if not rows:
        raise FormatError("no data rows", None, path)
    if len(rows) < 8:
        raise FormatError(f"need at least 8 samples, found {len(rows)}", None, path)
    data = np.array(rows)
    norm = header.pop("normalization", "raw")
    if norm not in NORMALIZATIONS:
        raise FormatError(f"unknown normalization {norm!r}", None, path)
    temp = header.pop("temperature_K", None)
    label = header.pop("label", "")
    meta = {}
    for key, value in header.items():
        try:
            meta[key] = json.loads(value)
        except ValueError:
            meta[key] = value
    return SpectrumScan(
        data[:, 0], data[:, 1], sigma=data[:, 2] if ncols == 3 else None,
        normalization=norm, temperature=None if temp in (None, "") else float(temp), label=label, meta=meta,
    )


def read_scan_file(path) -> SpectrumScan:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise FormatError("file not found", None, str(path)) from None
    return parse_scan(text, str(path))


def write_mode_table(modes, path) -> Path:
    """Columns: wavelength_nm n_eff a_eff_surf_um2."""
    with atomic_write(path) as fh:
        fh.write("# wavelength_nm n_eff a_eff_surf_um2\n")
        for m in modes:
            fh.write(f"{_r(m.wavelength * 1e9)} {_r(m.n_eff)} {_r(m.a_eff_surf * 1e12)}\n")
    return Path(path)


def read_mode_table(path) -> np.ndarray:
    return np.loadtxt(path, comments="#", ndmin=2)


def read_measurement_file(path, lambda_uncertainty: float = 0.0, shift_uncertainty: float | None = None) -> ThermoMeasurement:
    """Two data rows ``temperature_K wavelength_m``, initial state first."""
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"expected 'temperature_K wavelength_m', found {len(parts)} columns", lineno, str(path))
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise FormatError(f"not a number: {line!r}", lineno, str(path)) from None
    if len(rows) != 2:
        raise FormatError(f"expected exactly two measurement rows, found {len(rows)}", None, str(path))
    (ti, li), (tf, lf) = rows
    return ThermoMeasurement(li, lf, ti, tf, lambda_uncertainty, shift_uncertainty)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class Quantity:
    name: str
    value: float
    unit: str
    uncertainty: float | None = None


@dataclass
class RunReport:
    command: str
    config: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    outputs: list[Quantity] = field(default_factory=list)
    wall_time: float = 0.0

    def add(self, name: str, value: float, unit: str, uncertainty: float | None = None) -> Quantity:
        q = Quantity(name, float(value), unit, None if uncertainty is None else float(uncertainty))
        self.outputs.append(q)
        return q

    def add_input(self, path) -> None:
        self.inputs[str(path)] = file_digest(path)

    def scalars(self) -> dict[str, tuple[float, float | None]]:
        return {q.name: (q.value, q.uncertainty) for q in self.outputs}

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=False)

    def write_json(self, path) -> Path:
        with atomic_write(path) as fh:
            fh.write(self.to_json() + "\n")
        return Path(path)

    def to_tsv(self) -> str:
        lines = ["name\tvalue\tuncertainty\tunit"]
        for q in self.outputs:
            unc = "" if q.uncertainty is None else f"{q.uncertainty:.6g}"
            lines.append(f"{q.name}\t{q.value:.10g}\t{unc}\t{q.unit}")
        return "\n".join(lines) + "\n"

    def write_tsv(self, path) -> Path:
        with atomic_write(path) as fh:
            fh.write(self.to_tsv())
        return Path(path)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        d = json.loads(text)
        d["outputs"] = [Quantity(**q) for q in d.get("outputs", [])]
        return cls(**d)
