"""File formats: point clouds, poses, correspondences, and config text.

Clouds travel as PLY (ascii or binary little-endian) or plain XYZ text,
poses as whitespace-separated 4x4 homogeneous matrices, correspondences
as ``i j [w]`` lines, and tool configuration as ``key=value`` text. All
writers emit floats with 17 significant digits so every round trip is
value-exact for 64-bit floats.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import InvalidRotation, ParseError, UnsupportedFormat
from .geometry import ROTATION_TOL, PointCloud, RigidTransform
from .metrics import CorrespondenceSet, SvcConfig

PLY_ASCII = "ply-ascii"
PLY_BINARY_LE = "ply-binary-le"
XYZ_TEXT = "xyz-text"

_FLOAT_FMT = "%.17g"

# PLY scalar type name -> little-endian numpy dtype string.
_PLY_DTYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "<i2", "int16": "<i2",
    "ushort": "<u2", "uint16": "<u2",
    "int": "<i4", "int32": "<i4",
    "uint": "<u4", "uint32": "<u4",
    "float": "<f4", "float32": "<f4",
    "double": "<f8", "float64": "<f8",
}
_PLY_FLOAT_TYPES = {"float", "float32", "double", "float64"}


def _sniff_format(path: str) -> str:
    ext = os.path.splitext(path)[1].lower()
    if ext == ".ply":
        with open(path, "rb") as fh:
            head = fh.read(512)
        return PLY_BINARY_LE if b"binary_little_endian" in head else PLY_ASCII
    if ext in (".xyz", ".txt", ".asc"):
        return XYZ_TEXT
    raise UnsupportedFormat(f"cannot infer point cloud format from {path!r}")


def load_cloud(path: str, format: str | None = None) -> PointCloud:
    """Read a point cloud file.

    ``format`` picks the parser explicitly; when omitted it is inferred
    from the extension (and, for .ply, the header). The sensor viewpoint
    is taken from a ``viewpoint x y z`` comment when present, else the
    origin.
    """
    fmt = format or _sniff_format(path)
    if fmt in (PLY_ASCII, PLY_BINARY_LE):
        return _load_ply(path, fmt)
    if fmt == XYZ_TEXT:
        return _load_xyz(path)
    raise UnsupportedFormat(f"unknown point cloud format {fmt!r}")


def _parse_viewpoint(tokens, path, line_no) -> np.ndarray:
    if len(tokens) != 3:
        raise ParseError("viewpoint comment needs exactly 3 values", path=path, line=line_no)
    try:
        return np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise ParseError(f"bad viewpoint value: {exc}", path=path, line=line_no) from None


def _load_ply(path: str, fmt: str) -> PointCloud:
    with open(path, "rb") as fh:
        raw = fh.read()

    # ---- header ----
    lines = []
    offset = 0
    while True:
        nl = raw.find(b"\n", offset)
        if nl < 0:
            raise ParseError("header has no end_header line", path=path, line=len(lines) + 1)
        lines.append(raw[offset:nl].rstrip(b"\r"))
        offset = nl + 1
        if lines[-1].strip() == b"end_header":
            break

    def fail(msg, line_no):
        raise ParseError(msg, path=path, line=line_no)

    if not lines or lines[0].strip() != b"ply":
        fail("missing 'ply' magic", 1)

    viewpoint = np.zeros(3)
    declared_fmt = None
    n_vertices = None
    props: list[tuple[str, str]] = []
    in_vertex = False
    saw_later_element = False
    for i, bline in enumerate(lines[1:-1], start=2):
        parts = bline.decode("ascii", errors="replace").split()
        if not parts:
            continue
        key = parts[0]
        if key == "format":
            if len(parts) < 2:
                fail("format line needs a type", i)
            declared_fmt = parts[1]
        elif key == "comment":
            if len(parts) >= 2 and parts[1] == "viewpoint":
                viewpoint = _parse_viewpoint(parts[2:], path, i)
        elif key == "element":
            if len(parts) != 3:
                fail("element line needs a name and a count", i)
            if parts[1] == "vertex":
                if n_vertices is not None:
                    fail("duplicate vertex element", i)
                if saw_later_element:
                    raise UnsupportedFormat(
                        f"{path}: vertex element must come first"
                    )
                try:
                    n_vertices = int(parts[2])
                except ValueError:
                    fail(f"bad vertex count {parts[2]!r}", i)
                if n_vertices < 0:
                    fail("negative vertex count", i)
                in_vertex = True
            else:
                in_vertex = False
                saw_later_element = True
        elif key == "property":
            if not in_vertex:
                continue
            if parts[1] == "list":
                raise UnsupportedFormat(f"{path}: list properties on vertices")
            if len(parts) != 3:
                fail("property line needs a type and a name", i)
            if parts[1] not in _PLY_DTYPES:
                raise UnsupportedFormat(f"{path}: property type {parts[1]!r}")
            props.append((parts[2], parts[1]))
        elif key in ("obj_info",):
            continue
        else:
            fail(f"unrecognized header keyword {key!r}", i)

    expect = "ascii" if fmt == PLY_ASCII else "binary_little_endian"
    if declared_fmt != expect:
        if declared_fmt in ("ascii", "binary_little_endian"):
            raise ParseError(
                f"file declares format {declared_fmt!r} but {fmt!r} was requested",
                path=path,
                line=2,
            )
        raise UnsupportedFormat(f"{path}: PLY format {declared_fmt!r}")
    if n_vertices is None:
        fail("no vertex element", len(lines))
    names = [n for n, _ in props]
    for axis in ("x", "y", "z"):
        if axis not in names:
            fail(f"vertex element lacks property {axis!r}", len(lines))
    for n, t in props:
        if n in ("x", "y", "z") and t not in _PLY_FLOAT_TYPES:
            raise UnsupportedFormat(f"{path}: coordinate property {n!r} has type {t!r}")

    if fmt == PLY_BINARY_LE:
        vdt = np.dtype([(n, _PLY_DTYPES[t]) for n, t in props])
        need = n_vertices * vdt.itemsize
        if len(raw) - offset < need:
            raise ParseError(
                f"vertex data truncated: need {need} bytes, have {len(raw) - offset}",
                path=path,
                offset=offset,
            )
        rows = np.frombuffer(raw, dtype=vdt, count=n_vertices, offset=offset)
        pts = np.stack(
            [rows["x"].astype(np.float64), rows["y"].astype(np.float64), rows["z"].astype(np.float64)],
            axis=1,
        )
        return _finish_cloud(pts, viewpoint, path)

    # ascii body
    text = raw[offset:].decode("ascii", errors="replace").splitlines()
    header_lines = len(lines)
    if len(text) < n_vertices:
        raise ParseError(
            f"vertex data truncated: need {n_vertices} rows, have {len(text)}",
            path=path,
            line=header_lines + len(text) + 1,
        )
    ix, iy, iz = (names.index(a) for a in ("x", "y", "z"))
    pts = np.empty((n_vertices, 3))
    for r in range(n_vertices):
        tokens = text[r].split()
        line_no = header_lines + r + 1
        if len(tokens) != len(props):
            raise ParseError(
                f"expected {len(props)} values, got {len(tokens)}", path=path, line=line_no
            )
        try:
            pts[r] = (float(tokens[ix]), float(tokens[iy]), float(tokens[iz]))
        except ValueError as exc:
            raise ParseError(f"bad coordinate: {exc}", path=path, line=line_no) from None
    return _finish_cloud(pts, viewpoint, path)


def _load_xyz(path: str) -> PointCloud:
    viewpoint = np.zeros(3)
    rows = []
    with open(path, encoding="ascii", errors="replace") as fh:
        for line_no, line in enumerate(fh, start=1):
            body = line.strip()
            if not body:
                continue
            if body.startswith("#"):
                tokens = body[1:].split()
                if tokens and tokens[0] == "viewpoint":
                    viewpoint = _parse_viewpoint(tokens[1:], path, line_no)
                continue
            tokens = body.split()
            if len(tokens) != 3:
                raise ParseError(
                    f"expected 3 coordinates, got {len(tokens)}", path=path, line=line_no
                )
            try:
                rows.append((float(tokens[0]), float(tokens[1]), float(tokens[2])))
            except ValueError as exc:
                raise ParseError(f"bad coordinate: {exc}", path=path, line=line_no) from None
    pts = np.array(rows, dtype=np.float64).reshape(len(rows), 3)
    return _finish_cloud(pts, viewpoint, path)


def _finish_cloud(pts: np.ndarray, viewpoint: np.ndarray, path: str) -> PointCloud:
    if not np.isfinite(pts).all():
        raise ParseError("non-finite coordinate in point data", path=path)
    return PointCloud(pts, viewpoint)


def save_cloud(pc: PointCloud, path: str, format: str | None = None) -> None:
    """Write a point cloud; format inferred from the extension when omitted."""
    fmt = format or _sniff_save_format(path)
    if fmt == XYZ_TEXT:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("# viewpoint %s %s %s\n" % tuple(_FLOAT_FMT % v for v in pc.viewpoint))
            for p in pc.points:
                fh.write("%s %s %s\n" % tuple(_FLOAT_FMT % v for v in p))
        return
    if fmt not in (PLY_ASCII, PLY_BINARY_LE):
        raise UnsupportedFormat(f"unknown point cloud format {fmt!r}")
    header = [
        "ply",
        "format %s 1.0" % ("ascii" if fmt == PLY_ASCII else "binary_little_endian"),
        "comment viewpoint %s %s %s" % tuple(_FLOAT_FMT % v for v in pc.viewpoint),
        "element vertex %d" % len(pc),
        "property float64 x",
        "property float64 y",
        "property float64 z",
        "end_header",
    ]
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if fmt == PLY_BINARY_LE:
            fh.write(np.ascontiguousarray(pc.points, dtype="<f8").tobytes())
        else:
            body = "\n".join(
                "%s %s %s" % tuple(_FLOAT_FMT % v for v in p) for p in pc.points
            )
            fh.write((body + ("\n" if body else "")).encode("ascii"))


def _sniff_save_format(path: str) -> str:
    ext = os.path.splitext(path)[1].lower()
    if ext == ".ply":
        return PLY_BINARY_LE
    if ext in (".xyz", ".txt", ".asc"):
        return XYZ_TEXT
    raise UnsupportedFormat(f"cannot infer point cloud format from {path!r}")


# --------------------------------------------------------------------------
# Poses
# --------------------------------------------------------------------------


def load_pose(path: str) -> RigidTransform:
    """Read a 4x4 row-major homogeneous matrix from whitespace text."""
    rows = []
    with open(path, encoding="ascii", errors="replace") as fh:
        for line_no, line in enumerate(fh, start=1):
            body = line.strip()
            if not body or body.startswith("#"):
                continue
            tokens = body.split()
            if len(tokens) != 4:
                raise ParseError(f"expected 4 values, got {len(tokens)}", path=path, line=line_no)
            try:
                rows.append([float(t) for t in tokens])
            except ValueError as exc:
                raise ParseError(f"bad matrix entry: {exc}", path=path, line=line_no) from None
    if len(rows) != 4:
        raise ParseError(f"expected 4 matrix rows, got {len(rows)}", path=path)
    m = np.array(rows)
    if not np.isfinite(m).all():
        raise ParseError("non-finite matrix entry", path=path)
    if np.abs(m[3] - [0.0, 0.0, 0.0, 1.0]).max() > 1e-9:
        raise ParseError("bottom row must be 0 0 0 1", path=path)
    r = m[:3, :3]
    if (
        np.abs(r.T @ r - np.eye(3)).max() > ROTATION_TOL
        or abs(np.linalg.det(r) - 1.0) > ROTATION_TOL
    ):
        raise InvalidRotation("matrix rotation block is not a proper rotation")
    return RigidTransform(r, m[:3, 3])


def save_pose(t: RigidTransform, path: str) -> None:
    """Write a transform as a 4x4 matrix, value-exact on reload."""
    with open(path, "w", encoding="ascii") as fh:
        for row in t.as_matrix():
            fh.write(" ".join(_FLOAT_FMT % v for v in row) + "\n")


# --------------------------------------------------------------------------
# Correspondences and config text
# --------------------------------------------------------------------------


def load_correspondences(path: str) -> CorrespondenceSet:
    """Read ``i j`` or ``i j w`` lines into a correspondence set.

    Weights must be given on all lines or none; duplicate index pairs are
    a parse error so silent double counting cannot happen downstream.
    """
    pairs: list[tuple[int, int]] = []
    weights: list[float] = []
    seen: set[tuple[int, int]] = set()
    with open(path, encoding="ascii", errors="replace") as fh:
        for line_no, line in enumerate(fh, start=1):
            body = line.strip()
            if not body or body.startswith("#"):
                continue
            tokens = body.split()
            if len(tokens) not in (2, 3):
                raise ParseError(
                    f"expected 'i j' or 'i j w', got {len(tokens)} values",
                    path=path,
                    line=line_no,
                )
            try:
                ij = (int(tokens[0]), int(tokens[1]))
            except ValueError as exc:
                raise ParseError(f"bad index: {exc}", path=path, line=line_no) from None
            if ij in seen:
                raise ParseError(f"duplicate pair {ij}", path=path, line=line_no)
            seen.add(ij)
            if len(tokens) == 3:
                try:
                    weights.append(float(tokens[2]))
                except ValueError as exc:
                    raise ParseError(f"bad weight: {exc}", path=path, line=line_no) from None
            elif weights:
                raise ParseError(
                    "mixed weighted and unweighted lines", path=path, line=line_no
                )
            if weights and len(weights) != len(pairs) + 1:
                raise ParseError(
                    "mixed weighted and unweighted lines", path=path, line=line_no
                )
            pairs.append(ij)
    arr = np.array(pairs, dtype=np.int64).reshape(len(pairs), 2)
    try:
        return CorrespondenceSet(arr, np.array(weights) if weights else None)
    except ValueError as exc:
        raise ParseError(str(exc), path=path) from None


_CONFIG_FIELDS = {
    "tau": float,
    "eta1": float,
    "eta2": float,
    "t_threshold": float,
    "k": int,
    "min_range": float,
}


def load_config(path: str) -> dict:
    """Read ``key=value`` configuration text into a keyword dict.

    Keys mirror the verifier configuration fields; unknown keys are a
    parse error so typos cannot silently fall back to defaults.
    """
    out: dict = {}
    with open(path, encoding="ascii", errors="replace") as fh:
        for line_no, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ParseError("expected key=value", path=path, line=line_no)
            key, _, value = body.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in _CONFIG_FIELDS:
                raise ParseError(f"unknown config key {key!r}", path=path, line=line_no)
            try:
                out[key] = _CONFIG_FIELDS[key](value)
            except ValueError as exc:
                raise ParseError(f"bad value for {key}: {exc}", path=path, line=line_no) from None
    return out


def merged_config(base: SvcConfig | None = None, file_path: str | None = None, **overrides) -> SvcConfig:
    """Layer configuration: defaults, then file entries, then explicit overrides."""
    values = {
        "tau": (base or SvcConfig()).tau,
        "eta1": (base or SvcConfig()).eta1,
        "eta2": (base or SvcConfig()).eta2,
        "t_threshold": (base or SvcConfig()).t_threshold,
        "k": (base or SvcConfig()).k,
        "min_range": (base or SvcConfig()).min_range,
    }
    if file_path is not None:
        values.update(load_config(file_path))
    for key, val in overrides.items():
        if key not in values:
            raise ValueError(f"unknown config field {key!r}")
        if val is not None:
            values[key] = val
    return SvcConfig(**values)
