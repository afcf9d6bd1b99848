"""Family files, PGM/CSV/JSON writers and number formatting."""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .core import AffineMap, FamilyMember, OneParamFamily
from .errors import SchemaError, SingularLinearPart

SINGULAR_TOL = 1e-12


def fmt(x) -> str:
    """Float with 17 significant digits (round-trips exactly)."""
    return format(float(x), ".17g")


def _clean(obj):
    """JSON-ready copy with floats rounded through 17 significant digits."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not np.isfinite(v):
            return None if np.isnan(v) else ("inf" if v > 0 else "-inf")
        return float(fmt(v))
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))


# ---------------------------------------------------------------- family files

def family_from_dict(doc: dict, source: str = "<dict>") -> OneParamFamily:
    if not isinstance(doc, dict):
        raise SchemaError(f"{source}: top level must be an object")
    for key in ("dim", "members"):
        if key not in doc:
            raise SchemaError(f"{source}: missing field '{key}'")
    d = doc["dim"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise SchemaError(f"{source}: field 'dim' must be a positive integer")
    mem = doc["members"]
    if not isinstance(mem, list) or len(mem) < 2:
        raise SchemaError(f"{source}: field 'members' must list at least two members")
    out = []
    for k, m in enumerate(mem):
        where = f"{source}: members[{k}]"
        if not isinstance(m, dict):
            raise SchemaError(f"{where} must be an object")
        for key in ("L", "a", "q"):
            if key not in m:
                raise SchemaError(f"{where}: missing field '{key}'")
        try:
            L = np.array(m["L"], dtype=float)
            a = np.array(m["a"], dtype=float)
            q = np.array(m["q"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{where}: non-numeric entry ({exc})") from None
        if L.shape != (d, d):
            raise SchemaError(f"{where}.L has shape {L.shape}, expected ({d}, {d})")
        if a.shape != (d,):
            raise SchemaError(f"{where}.a has length {a.size}, expected {d}")
        if q.shape != (d,):
            raise SchemaError(f"{where}.q has length {q.size}, expected {d}")
        if not (np.isfinite(L).all() and np.isfinite(a).all() and np.isfinite(q).all()):
            raise SchemaError(f"{where}: non-finite entry")
        if abs(np.linalg.det(L)) <= SINGULAR_TOL:
            raise SingularLinearPart(f"{where}.L is singular")
        out.append(FamilyMember(AffineMap(L, a), q))
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise SchemaError(f"{source}: field 'name' must be a string")
    return OneParamFamily(out, name)


def parse_family(path) -> OneParamFamily:
    """Load and validate a family JSON file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return family_from_dict(doc, str(path))


def serialize_family(family: OneParamFamily) -> str:
    # repr of a float round-trips, so parse(serialize(f)) == f exactly
    return json.dumps(family.to_dict(), indent=2) + "\n"


def write_family(path, family):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_family(family))


# ---------------------------------------------------------------- images / tables

def write_pgm(path, img):
    """Binary PGM (P5, maxval 255); img[row, col] with row 0 at the top."""
    img = np.asarray(img, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img).tobytes())


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    fields, pos = [], 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    if fields[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = int(fields[1]), int(fields[2])
    # exactly one whitespace byte separates the header from the raster
    pix = np.frombuffer(data[pos + 1:pos + 1 + w * h], dtype=np.uint8)
    return pix.reshape(h, w)


def cover_image(cover):
    """Occupied = 0, empty = 255; x to the right, y upwards."""
    m = cover.mask()
    if m.ndim == 1:
        m = m[:, None]
    return np.where(m.T[::-1], 0, 255).astype(np.uint8)


def write_cover(path, cover):
    """PGM plus a sidecar JSON with origin, cell, width and height."""
    img = cover_image(cover)
    write_pgm(path, img)
    side = os.path.splitext(path)[0] + ".json"
    write_json(side, {"origin": cover.origin.tolist(), "cell": cover.cell,
                      "width": int(img.shape[1]), "height": int(img.shape[0])})
    return [path, side]


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(_cell(v) for v in r) + "\n")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return str(v)


def write_points(path, points):
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    header = ["x", "y"][: P.shape[1]]
    write_csv(path, header, P.tolist())


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, files):
    entries = []
    for f in sorted(set(files)):
        entries.append({"file": os.path.relpath(f, out_dir), "sha256": sha256(f)})
    path = os.path.join(out_dir, "manifest.json")
    write_json(path, {"files": entries})
    return path
