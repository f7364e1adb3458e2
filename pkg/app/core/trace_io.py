"""Plain-text exports: trace CSV files and operator dumps."""
from __future__ import annotations

import io
import logging
from pathlib import Path

import numpy as np

from ..config import logging_config  # pylint: disable=unused-import
from .hamiltonian import OperatorMatrix
from .propagation import TransferTrace

logger = logging.getLogger("pst.trace_io")

SCHEMA_VERSION = "v1"
FMT = "%.12g"


def trace_to_csv(trace: TransferTrace) -> str:
    """Render a trace: schema comment line, header row, one row per sample."""
    header = [f"# pst-trace {SCHEMA_VERSION} labels={','.join(trace.labels)}"]
    header.append(",".join(["time_s"] + [f"site_{k}" for k in range(len(trace.labels))]))
    data = np.column_stack([trace.times, trace.site_probabilities]) if len(trace) else np.zeros((0, len(trace.labels) + 1))
    buf = io.StringIO()
    np.savetxt(buf, data, fmt=FMT, delimiter=",", header="\n".join(header), comments="")
    return buf.getvalue()


def write_trace_csv(trace: TransferTrace, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(trace_to_csv(trace), encoding="utf-8")
    logger.info("wrote %d trace rows to %s", len(trace), path)
    return path


def read_trace_csv(path: str | Path) -> TransferTrace:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith(f"# pst-trace {SCHEMA_VERSION}"):
        raise ValueError(f"{path} is not a {SCHEMA_VERSION} trace file")
    labels = tuple(lines[0].split("labels=", 1)[1].split(","))
    rows = [line for line in lines[2:] if line.strip()]
    data = np.loadtxt(rows, delimiter=",", ndmin=2) if rows else np.zeros((0, len(labels) + 1))
    return TransferTrace(data[:, 0], data[:, 1:], labels)


def dump_operator(op: OperatorMatrix, path: str | Path) -> Path:
    """Write real and imaginary parts as two blocks of whitespace-separated rows."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"# basis={op.basis.kind.value} n_sites={op.basis.n_sites} dim={op.dim}\n")
        fh.write("# real part\n")
        np.savetxt(fh, op.data.real, fmt=FMT)
        fh.write("# imaginary part\n")
        np.savetxt(fh, op.data.imag, fmt=FMT)
    logger.info("dumped %dx%d operator to %s", op.dim, op.dim, path)
    return path
