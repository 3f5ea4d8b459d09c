"""
Image, table and report I/O.

Formats:
    PGM (P5, 8-bit, maxval 255), mapped linearly to [0, 1], via Pillow;
         "# key=value" comment lines follow the magic number
    PFM-txt: first line "Pf-txt h w", optional "# key=value" comment lines,
             then h*w whitespace-separated reals (row-major), lossless
    CSV with leading "# key=value" metadata lines, written by pandas
    JSON with sorted keys
"""
import io
import json
from pathlib import Path

import numpy as np
import pandas as pd
from PIL import Image as PILImage

from app.core.image import as_image
from app.errors import ConfigError, DimensionError

PFM_TXT_MAGIC = "Pf-txt"


def read_pgm(path):
    with PILImage.open(path) as img:
        if img.mode != "L":
            img = img.convert("L")
        data = np.asarray(img, dtype=np.float64)
    return data / 255.0


def _meta_lines(meta):
    """'# key=value' header lines, with line breaks in values flattened to spaces."""
    return [f"# {k}={' '.join(str(v).split())}" for k, v in sorted((meta or {}).items())]


def _parse_meta_line(line, meta):
    key, sep, value = line.lstrip("#").strip().partition("=")
    if sep:
        meta[key] = value


def write_pgm(path, x, meta=None):
    """P5 via Pillow; metadata goes into comment lines right after the magic number."""
    x = as_image(x)
    levels = np.round(np.clip(x, 0.0, 1.0) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    PILImage.fromarray(levels).save(buf, format="PPM")
    magic, _, rest = buf.getvalue().partition(b"\n")
    comments = "".join(line + "\n" for line in _meta_lines(meta)).encode("ascii", "replace")
    Path(path).write_bytes(magic + b"\n" + comments + rest)


def read_pgm_meta(path):
    """'# key=value' comments from a PGM header."""
    meta = {}
    fields = 0
    with open(path, "rb") as fh:
        fh.readline()
        while fields < 3:
            line = fh.readline()
            if not line:
                break
            text = line.decode("ascii", "replace")
            body, hash_, comment = text.partition("#")
            fields += len(body.split())
            if hash_:
                _parse_meta_line(comment, meta)
    return meta


def read_pfm_txt(path):
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ConfigError(f"empty PFM-txt file {path}")
    header = lines[0].split()
    if len(header) != 3 or header[0] != PFM_TXT_MAGIC:
        raise ConfigError(f"bad PFM-txt header {lines[0]!r}", line=1, source=str(path))
    h, w = int(header[1]), int(header[2])
    values = np.array(" ".join(lines[1:]).split(), dtype=np.float64)
    if values.size != h * w:
        raise DimensionError(f"PFM-txt {path}: expected {h * w} values, found {values.size}")
    return as_image(values.reshape(h, w))


def write_pfm_txt(path, x, meta=None):
    x = as_image(x)
    h, w = x.shape
    out = [f"{PFM_TXT_MAGIC} {h} {w}"]
    out.extend(_meta_lines(meta))
    out.extend(" ".join(f"{v:.17g}" for v in row) for row in x)
    Path(path).write_text("\n".join(out) + "\n")


def read_image(path):
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        return read_pgm(path)
    if suffix in (".txt", ".pfm"):
        return read_pfm_txt(path)
    raise ConfigError(f"unsupported image format '{suffix}' for {path}")


def read_pfm_txt_meta(path):
    meta = {}
    with open(path) as fh:
        fh.readline()
        for line in fh:
            if not line.lstrip().startswith("#"):
                break
            _parse_meta_line(line.strip(), meta)
    return meta


def read_image_meta(path):
    """Metadata written alongside an image by :func:`write_image`."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        return read_pgm_meta(path)
    if suffix in (".txt", ".pfm"):
        return read_pfm_txt_meta(path)
    raise ConfigError(f"unsupported image format '{suffix}' for {path}")


def write_image(path, x, meta=None):
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        write_pgm(path, x, meta)
    elif suffix in (".txt", ".pfm"):
        write_pfm_txt(path, x, meta)
    else:
        raise ConfigError(f"unsupported image format '{suffix}' for {path}")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if isinstance(obj, Path):
        return str(obj)
    return str(obj)


def to_json(payload):
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default)


def write_json(path, payload, meta=None):
    if meta:
        payload = {**payload, "meta": meta}
    Path(path).write_text(to_json(payload) + "\n")


def write_csv(path, frame: pd.DataFrame, meta=None):
    with open(path, "w", newline="") as fh:
        for k, v in sorted((meta or {}).items()):
            fh.write(f"# {k}={v}\n")
        frame.to_csv(fh, index=False)


def read_csv(path):
    return pd.read_csv(path, comment="#")


def read_csv_meta(path):
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
    return meta
