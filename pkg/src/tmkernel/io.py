"""File formats: burst ensembles, matrices, grid fields, coordinates, reports.

Text formats write floats with ``repr`` so that export, import and
re-export are byte-identical.  Every writer goes through a temporary file
in the target directory and ``os.replace``.
"""

import json
import os
import struct
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from tmkernel.dynamics import BurstEnsemble
from tmkernel.kernels.gram import SymmetricMatrix
from tmkernel.manifold import EmbeddingResult
from tmkernel.oracle import Grid, GridField
from tmkernel.whitney import FeatureMatrix


class FormatError(ValueError):
    pass


@contextmanager
def atomic_write(path, mode="w"):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if "b" in mode else {"newline": "\n"})) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _f(x):
    return repr(float(x))


def _row(values):
    return ",".join(_f(v) for v in values)


def _dump_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _provenance_line(provenance):
    return f"# provenance {_dump_json(provenance or {})}\n"


def _read_lines(path):
    try:
        with open(path, "r", newline="") as fh:
            return fh.read().split("\n")
    except FileNotFoundError:
        raise FormatError(f"{path}: no such file") from None


def _parse_header(line, magic, path):
    if not line.startswith(f"# {magic}"):
        raise FormatError(f"{path}: expected header '# {magic} ...', got {line[:60]!r}")
    fields = {}
    for token in line[len(magic) + 2:].split():
        key, sep, value = token.partition("=")
        if not sep:
            raise FormatError(f"{path}: malformed header token {token!r}")
        fields[key] = value
    return fields


def _parse_provenance(line, path):
    if not line.startswith("# provenance "):
        raise FormatError(f"{path}: missing '# provenance' line")
    return json.loads(line[len("# provenance "):])


def _floats(cells, path, lineno):
    try:
        return [float(c) for c in cells]
    except ValueError:
        raise FormatError(f"{path}:{lineno}: non-numeric entry in {cells!r}") from None


# burst ensembles

_TMB = struct.Struct("<4sIIId")


def _meta_path(path):
    return Path(str(path) + ".meta.json")


def write_bursts(path, ens):
    """Binary TMB1 file plus a ``.meta.json`` sidecar."""
    with atomic_write(path, "wb") as fh:
        fh.write(_TMB.pack(b"TMB1", ens.N, ens.M, ens.dim, float(ens.tau)))
        fh.write(np.ascontiguousarray(ens.samples, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(ens.points, dtype="<f8").tobytes())
    with atomic_write(_meta_path(path)) as fh:
        fh.write(json.dumps(dict(ens.meta), sort_keys=True, indent=1) + "\n")


def read_bursts(path):
    try:
        raw = Path(path).read_bytes()
    except FileNotFoundError:
        raise FormatError(f"{path}: no such file") from None
    if len(raw) < _TMB.size or raw[:4] != b"TMB1":
        raise FormatError(f"{path}: not a TMB1 burst file")
    _, N, M, n, tau = _TMB.unpack_from(raw)
    expected = _TMB.size + 8 * (N * M * n + N * n)
    if len(raw) != expected:
        raise FormatError(f"{path}: size {len(raw)} bytes, header implies {expected}")
    body = np.frombuffer(raw, dtype="<f8", offset=_TMB.size)
    samples = body[: N * M * n].reshape(N, M, n).astype(float)
    points = body[N * M * n:].reshape(N, n).astype(float)
    meta_file = _meta_path(path)
    meta = json.loads(meta_file.read_text()) if meta_file.exists() else {"potential": "external"}
    return BurstEnsemble(points, samples, tau, meta)


def write_bursts_csv(path, ens):
    """One row per endpoint ``i,l,y_1..y_n``; rows with ``l=-1`` hold the test points."""
    with atomic_write(path) as fh:
        fh.write(f"# tmkernel-bursts n={ens.dim} N={ens.N} M={ens.M} tau={_f(ens.tau)}\n")
        fh.write(_provenance_line(dict(ens.meta)))
        fh.write("i,l," + ",".join(f"y_{d + 1}" for d in range(ens.dim)) + "\n")
        for i in range(ens.N):
            fh.write(f"{i},-1,{_row(ens.points[i])}\n")
            for l in range(ens.M):
                fh.write(f"{i},{l},{_row(ens.samples[i, l])}\n")


def read_bursts_csv(path):
    """Read a burst CSV; external data needs the header and the ``l=-1`` point rows."""
    lines = _read_lines(path)
    head = _parse_header(lines[0], "tmkernel-bursts", path)
    try:
        n, N, M, tau = int(head["n"]), int(head["N"]), int(head["M"]), float(head["tau"])
    except (KeyError, ValueError):
        raise FormatError(f"{path}: header needs integer n, N, M and a float tau") from None
    k = 1
    meta = {"potential": "external"}
    if lines[k].startswith("# provenance "):
        meta = _parse_provenance(lines[k], path)
        k += 1
    if lines[k].startswith("i,"):
        k += 1
    samples = np.full((N, M, n), np.nan)
    points = np.full((N, n), np.nan)
    for lineno, line in enumerate(lines[k:], start=k + 1):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != n + 2:
            raise FormatError(f"{path}:{lineno}: expected {n + 2} columns, found {len(cells)}")
        i, l = int(cells[0]), int(cells[1])
        if not (0 <= i < N and -1 <= l < M):
            raise FormatError(f"{path}:{lineno}: index (i={i}, l={l}) outside N={N}, M={M}")
        y = _floats(cells[2:], path, lineno)
        if l < 0:
            points[i] = y
        else:
            samples[i, l] = y
    if np.isnan(points).any():
        raise FormatError(f"{path}: every burst needs a test-point row with l=-1")
    if np.isnan(samples).any():
        raise FormatError(f"{path}: missing endpoint rows (need all N*M = {N * M})")
    return BurstEnsemble(points, samples, tau, meta)


# symmetric matrices

def write_matrix_csv(path, K, provenance=None):
    extra = " squared=true" if K.squared else ""
    with atomic_write(path) as fh:
        fh.write(f"# tmkernel-matrix kind={K.kind} n={K.N}{extra}\n")
        fh.write(_provenance_line(provenance))
        for row in K.values:
            fh.write(_row(row) + "\n")


def read_matrix_csv(path):
    lines = _read_lines(path)
    head = _parse_header(lines[0], "tmkernel-matrix", path)
    N = int(head.get("n", -1))
    body = [ln for ln in lines[1:] if ln and not ln.startswith("#")]
    if len(body) != N:
        raise FormatError(f"{path}: header says n={N}, found {len(body)} rows")
    values = np.array([_floats(ln.split(","), path, k + 3) for k, ln in enumerate(body)])
    if values.shape != (N, N):
        raise FormatError(f"{path}: matrix is {values.shape}, expected ({N}, {N})")
    return SymmetricMatrix(values, head.get("kind"), squared=head.get("squared") == "true")


_TMM = struct.Struct("<4sI")


def write_matrix_bin(path, K):
    with atomic_write(path, "wb") as fh:
        fh.write(_TMM.pack(b"TMM1", K.N))
        fh.write(np.ascontiguousarray(K.lower_triangle(), dtype="<f8").tobytes())
    with atomic_write(_meta_path(path)) as fh:
        fh.write(_dump_json({"kind": K.kind, "squared": K.squared}) + "\n")


def read_matrix_bin(path):
    try:
        raw = Path(path).read_bytes()
    except FileNotFoundError:
        raise FormatError(f"{path}: no such file") from None
    if len(raw) < _TMM.size or raw[:4] != b"TMM1":
        raise FormatError(f"{path}: not a TMM1 matrix file")
    _, N = _TMM.unpack_from(raw)
    if len(raw) != _TMM.size + 8 * N * (N + 1) // 2:
        raise FormatError(f"{path}: truncated lower triangle for N={N}")
    tri = np.frombuffer(raw, dtype="<f8", offset=_TMM.size).astype(float)
    meta_file = _meta_path(path)
    if not meta_file.exists():
        raise FormatError(f"{path}: missing sidecar {meta_file.name} with the matrix kind")
    meta = json.loads(meta_file.read_text())
    return SymmetricMatrix.from_lower_triangle(tri, N, meta["kind"], squared=meta["squared"])


def read_matrix(path):
    """Dispatch on the file's magic bytes."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    return read_matrix_bin(path) if magic == b"TMM1" else read_matrix_csv(path)


# grid fields

def write_grid_field(path, field, provenance=None):
    g = field.grid
    shape = "x".join(str(m) for m in g.shape)
    box = ",".join(f"{_f(lo)}:{_f(hi)}" for lo, hi in g.box)
    with atomic_write(path) as fh:
        fh.write(f"# tmkernel-grid kind={field.kind} shape={shape} box={box}\n")
        fh.write(_provenance_line(provenance))
        for idx in np.ndindex(*g.shape):
            fh.write(",".join(str(j) for j in idx) + "," + _f(field.values[idx]) + "\n")


def read_grid_field(path):
    lines = _read_lines(path)
    head = _parse_header(lines[0], "tmkernel-grid", path)
    shape = tuple(int(m) for m in head["shape"].split("x"))
    box = [[float(v) for v in pair.split(":")] for pair in head["box"].split(",")]
    values = np.full(shape, np.nan)
    for lineno, line in enumerate(lines[2:], start=3):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(shape) + 1:
            raise FormatError(f"{path}:{lineno}: expected {len(shape) + 1} columns")
        values[tuple(int(c) for c in cells[:-1])] = float(cells[-1])
    if np.isnan(values).any():
        raise FormatError(f"{path}: some grid cells have no value")
    return GridField(Grid(box, shape), values, head["kind"])


# embeddings, features, reports

def write_coordinates(path, coords, provenance=None, prefix="rc"):
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    with atomic_write(path) as fh:
        fh.write(f"# tmkernel-coords n={coords.shape[0]} k={coords.shape[1]}\n")
        fh.write(_provenance_line(provenance))
        fh.write("i," + ",".join(f"{prefix}_{j + 1}" for j in range(coords.shape[1])) + "\n")
        for i, row in enumerate(coords):
            fh.write(f"{i},{_row(row)}\n")


def read_coordinates(path):
    lines = _read_lines(path)
    _parse_header(lines[0], "tmkernel-coords", path)
    rows = [ln.split(",")[1:] for ln in lines[3:] if ln]
    return np.array([[float(c) for c in r] for r in rows]).reshape(len(rows), -1)


def write_spectrum(path, eigenvalues, provenance=None):
    with atomic_write(path) as fh:
        fh.write("# tmkernel-spectrum\n")
        fh.write(_provenance_line(provenance))
        fh.write("k,eigenvalue\n")
        for k, w in enumerate(eigenvalues):
            fh.write(f"{k},{_f(w)}\n")


def read_spectrum(path):
    lines = _read_lines(path)
    _parse_header(lines[0], "tmkernel-spectrum", path)
    return np.array([float(ln.split(",")[1]) for ln in lines[3:] if ln])


def write_embedding(stem, result, provenance=None):
    """``<stem>.coords.csv`` and ``<stem>.spectrum.csv``."""
    prov = dict(provenance or {}, method=result.method)
    write_coordinates(f"{stem}.coords.csv", result.coords, prov)
    write_spectrum(f"{stem}.spectrum.csv", result.eigenvalues, prov)


def read_embedding(stem):
    prov = _parse_provenance(_read_lines(f"{stem}.coords.csv")[1], stem)
    return EmbeddingResult(read_coordinates(f"{stem}.coords.csv"), read_spectrum(f"{stem}.spectrum.csv"),
                           prov.get("method", "unknown"))


def write_feature_matrix(path, F):
    with atomic_write(path) as fh:
        fh.write(f"# tmkernel-features r={F.r} provenance={F.provenance}\n")
        for row in F.weights:
            fh.write(_row(row) + "\n")


def read_feature_matrix(path):
    lines = _read_lines(path)
    head = _parse_header(lines[0], "tmkernel-features", path)
    A = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:] if ln])
    return FeatureMatrix(A, int(head["r"]), head.get("provenance", "explicit"))


def write_table(path, rows, columns, title, provenance=None):
    """Generic CSV table with a ``# tmkernel-<title>`` header."""
    with atomic_write(path) as fh:
        fh.write(f"# tmkernel-{title}\n")
        fh.write(_provenance_line(provenance))
        fh.write(",".join(columns) + "\n")
        for r in rows:
            fh.write(",".join(_f(r[c]) if isinstance(r[c], float) else str(r[c]) for c in columns) + "\n")


def read_table(path):
    lines = _read_lines(path)
    columns = lines[2].split(",")
    out = []
    for ln in lines[3:]:
        if ln:
            out.append(dict(zip(columns, ln.split(","))))
    return out


def write_distortion(path, report, provenance=None):
    row = {
        "contraction": report.contraction,
        "expansion": report.expansion,
        "distortion": report.distortion,
        "contraction_pair": f"{report.contraction_pair[0]}-{report.contraction_pair[1]}",
        "expansion_pair": f"{report.expansion_pair[0]}-{report.expansion_pair[1]}",
        "floor": report.floor,
        "pairs_used": report.pairs_used,
        "pairs_skipped": report.pairs_skipped,
    }
    write_table(path, [row], list(row), "distortion", provenance)
