"""CSV export and import.

Every float is written with 17 significant digits, so a file read back
reproduces the arrays bit for bit and reruns give byte-identical output.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exceptions import InvalidData

FMT = "%.17g"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return FMT % float(v)


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def read_rows(path) -> tuple[list[str], np.ndarray, list[str]]:
    """(header, float matrix, comment lines) of a file written by write_rows."""
    comments, lines = [], []
    with Path(path).open() as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                comments.append(line[1:].strip())
            elif line:
                lines.append(line)
    if not lines:
        raise InvalidData(f"{path}: no header")
    header = lines[0].split(",")
    try:
        data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=float)
    except ValueError as exc:
        raise InvalidData(f"{path}: {exc}") from None
    if data.size == 0:
        data = np.empty((0, len(header)))
    if data.shape[1] != len(header):
        raise InvalidData(f"{path}: row width does not match header")
    return header, data, comments


def read_records(path) -> tuple[list[str], list[tuple]]:
    """Header and typed rows for files with text columns; numeric fields
    become floats, everything else stays a string."""
    with Path(path).open() as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise InvalidData(f"{path}: no header")
    header = lines[0].split(",")

    def conv(v):
        try:
            return float(v)
        except ValueError:
            return v

    rows = [tuple(conv(v) for v in ln.split(",")) for ln in lines[1:]]
    if any(len(r) != len(header) for r in rows):
        raise InvalidData(f"{path}: row width does not match header")
    return header, rows


def _expect(header, want, path):
    if header != list(want):
        raise InvalidData(f"{path}: expected header {','.join(want)}, got {','.join(header)}")


# u and density tables


def write_utable(table, path):
    return write_rows(path, ["theta", "u"], zip(table.grid, table.u))


def read_utable(path):
    header, data, _ = read_rows(path)
    _expect(header, ["theta", "u"], path)
    return data[:, 0], data[:, 1]


def write_density(density, path):
    return write_rows(path, ["theta", "p"], zip(density.grid, density.p),
                      comments=[f"logZ={FMT % density.logZ}"])


def read_density(path):
    from .prior import DensityTable
    header, data, comments = read_rows(path)
    _expect(header, ["theta", "p"], path)
    logz = [c for c in comments if c.startswith("logZ=")]
    if not logz:
        raise InvalidData(f"{path}: missing logZ comment")
    return DensityTable(data[:, 0], data[:, 1], float(logz[0][5:]))


# scores


SCORE_HEADER = ("theta", "logscore", "hyvarinen", "total")


def write_scores(scores, path):
    return write_rows(path, SCORE_HEADER,
                      ((s.theta, s.log_score, s.hyvarinen_score, s.total) for s in scores))


def read_scores(path):
    header, data, _ = read_rows(path)
    _expect(header, SCORE_HEADER, path)
    return data


# chains


def chain_header(d: int) -> list[str]:
    return ["iter"] + [f"coord_{j}" for j in range(d)]


def write_chain(chain, path):
    d = chain.dimension
    return write_rows(path, chain_header(d),
                      ((i, *row) for i, row in enumerate(chain.draws)),
                      comments=[f"burn_in={chain.burn_in}", f"seed={chain.seed}",
                                "accepted=" + ";".join(str(int(a)) for a in chain.accepted),
                                "names=" + ";".join(chain.names)])


def read_chain(path):
    from .mcmc import Chain
    header, data, comments = read_rows(path)
    _expect(header, chain_header(len(header) - 1), path)
    meta = dict(c.split("=", 1) for c in comments if "=" in c)
    seed = meta.get("seed", "None")
    names = tuple(n for n in meta.get("names", "").split(";") if n)
    accepted = [int(a) for a in meta.get("accepted", "").split(";") if a]
    return Chain(data[:, 1:], accepted or [0] * (len(header) - 1),
                 int(meta.get("burn_in", 0)), None if seed == "None" else int(seed), names)


SUMMARY_HEADER = ("coord", "mean", "sd", "lower", "upper", "acceptance")


def write_summary(summary, path, names: Sequence[str] = ()):
    d = len(summary.mean)
    names = list(names) if names else [f"coord_{j}" for j in range(d)]
    rows = zip(names, summary.mean, summary.sd, summary.lower, summary.upper,
               summary.acceptance_rate)
    return write_rows(path, SUMMARY_HEADER, rows)


def read_summary(path):
    with Path(path).open() as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.startswith("#")]
    header = lines[0].split(",")
    _expect(header, SUMMARY_HEADER, path)
    names = [ln.split(",")[0] for ln in lines[1:]]
    vals = np.array([[float(v) for v in ln.split(",")[1:]] for ln in lines[1:]])
    return names, vals
