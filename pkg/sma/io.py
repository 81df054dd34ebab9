"""
Artifact files: SMA1 sinograms, CSV tables with a provenance header, JSON
summaries, PGM images with a scale sidecar and Parquet sample sets.
"""

import json
import logging
import struct
from pathlib import Path

import numpy as np
import pandas as pd
import pyarrow as pa
import pyarrow.parquet as pq

from sma.errors import DimensionError, PreconditionError
from sma.sampling import SamplingGrid, Sinogram

logger = logging.getLogger(__name__)

MAGIC = b"SMA1"
HEADER = struct.Struct("<4sIIdddd")


def header_line(config_hash, seed):
    return f"# config_hash={config_hash} seed={seed}"


def _ensure_parent(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_sinogram(path, sinogram):
    """Little-endian SMA1: magic, n_alpha, n_p, d_alpha, d_p, p_bar, P, then row-major f64 values"""
    grid = sinogram.grid
    path = _ensure_parent(path)
    with open(path, "wb") as handle:
        handle.write(HEADER.pack(MAGIC, grid.n_alpha, grid.n_p, grid.d_alpha, grid.epsilon, grid.p_bar, grid.support))
        handle.write(np.ascontiguousarray(sinogram.values, dtype="<f8").tobytes())
    logger.debug("wrote %s (%d x %d)", path, grid.n_alpha, grid.n_p)
    return path


def read_header(path):
    with open(path, "rb") as handle:
        raw = handle.read(HEADER.size)
    if len(raw) < HEADER.size:
        raise PreconditionError(f"{path} is too short for an SMA1 header")
    magic, n_alpha, n_p, d_alpha, d_p, p_bar, support = HEADER.unpack(raw)
    if magic != MAGIC:
        raise PreconditionError(f"{path} is not an SMA1 file (magic {magic!r})")
    return {"n_alpha": n_alpha, "n_p": n_p, "d_alpha": d_alpha, "d_p": d_p, "p_bar": p_bar, "support": support}


def read_sinogram(path):
    """
    Sinogram from an SMA1 file.

    The header does not carry the lattice origin: the lattice of
    ``SamplingGrid.create`` is used when its shape matches, otherwise a
    lattice centered on index 0.
    """
    header = read_header(path)
    values = np.fromfile(path, dtype="<f8", offset=HEADER.size)
    expected = header["n_alpha"] * header["n_p"]
    if values.size != expected:
        raise DimensionError(f"{path} holds {values.size} values, header says {expected}")
    kappa = header["d_alpha"] / header["d_p"]
    grid = SamplingGrid.create(header["d_p"], kappa, header["p_bar"], header["support"])
    if grid.shape != (header["n_alpha"], header["n_p"]):
        grid = SamplingGrid(
            epsilon=header["d_p"],
            kappa=kappa,
            p_bar=header["p_bar"],
            support=header["support"],
            k_min=-(header["n_alpha"] // 2),
            n_alpha=header["n_alpha"],
            j_min=-(header["n_p"] // 2),
            n_p=header["n_p"],
        )
    return Sinogram(grid, values.reshape(grid.shape))


def sinogram_frame(sinogram):
    grid = sinogram.grid
    k, j = np.meshgrid(np.arange(grid.n_alpha), np.arange(grid.n_p), indexing="ij")
    alpha, p = grid.mesh()
    return pd.DataFrame(
        {
            "k": (k + grid.k_min).ravel(),
            "j": (j + grid.j_min).ravel(),
            "alpha": alpha.ravel(),
            "p": p.ravel(),
            "value": sinogram.values.ravel(),
        }
    )


def write_table(path, frame, header):
    """CSV with one provenance comment line"""
    path = _ensure_parent(path)
    with open(path, "w", newline="") as handle:
        handle.write(header + "\n")
        frame.to_csv(handle, index=False, lineterminator="\n")
    logger.debug("wrote %s (%d rows)", path, len(frame))
    return path


def read_table(path):
    return pd.read_csv(path, comment="#")


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_json(path, payload):
    path = _ensure_parent(path)
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, default=_jsonable)
        handle.write("\n")
    return path


def image_frame(image):
    xx, yy = np.meshgrid(image.xs, image.ys, indexing="ij")
    return pd.DataFrame({"x": xx.ravel(), "y": yy.ravel(), "value": image.values.ravel()})


def write_pgm(path, values, header=None):
    """
    16-bit binary PGM of a 2D array indexed [x][y], min-max scaled; the
    scale goes to a JSON sidecar next to the file.
    """
    values = np.asarray(values, dtype=float)
    lo, hi = float(np.min(values)), float(np.max(values))
    span = hi - lo
    scaled = np.zeros(values.shape) if span == 0 else (values - lo) / span
    pixels = np.rint(scaled * 65535).astype(">u2")
    # rows run top to bottom: decreasing y
    pixels = pixels.T[::-1]
    path = _ensure_parent(path)
    with open(path, "wb") as handle:
        handle.write(f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n65535\n".encode("ascii"))
        handle.write(pixels.tobytes())
    sidecar = {"min": lo, "max": hi, "maxval": 65535}
    if header:
        sidecar["provenance"] = header.lstrip("# ")
    write_json(path.with_suffix(".json"), sidecar)
    return path


def read_pgm(path):
    """Values of a PGM written by ``write_pgm``, rescaled with its sidecar"""
    path = Path(path)
    with open(path, "rb") as handle:
        data = handle.read()
    magic, size, maxval, body = data.split(b"\n", 3)
    if magic != b"P5":
        raise PreconditionError(f"{path} is not a binary PGM")
    width, height = (int(v) for v in size.split())
    pixels = np.frombuffer(body, dtype=">u2").reshape(height, width)
    with open(path.with_suffix(".json")) as handle:
        sidecar = json.load(handle)
    values = sidecar["min"] + pixels.astype(float) / int(maxval) * (sidecar["max"] - sidecar["min"])
    return values[::-1].T


def write_samples(path, sample_set, config_hash):
    """Parquet table (arm, f1[, f2]) with provenance in the schema metadata"""
    table = pa.Table.from_pandas(sample_set.to_frame(), preserve_index=False)
    metadata = dict(table.schema.metadata or {})
    metadata.update(
        {
            b"config_hash": str(config_hash).encode(),
            b"seed": str(sample_set.provenance.get("seed", "")).encode(),
            b"spec_hash": str(sample_set.provenance.get("spec_hash", "")).encode(),
            b"statistic": str(sample_set.provenance.get("statistic", "")).encode(),
        }
    )
    path = _ensure_parent(path)
    pq.write_table(table.replace_schema_metadata(metadata), path)
    return path


def read_samples(path):
    """(frame, provenance) of a Parquet sample file"""
    table = pq.read_table(path)
    metadata = table.schema.metadata or {}
    provenance = {
        key.decode(): value.decode()
        for key, value in metadata.items()
        if key in (b"config_hash", b"seed", b"spec_hash", b"statistic")
    }
    return table.to_pandas(), provenance


def summarize_sinogram(path):
    """Header fields and value statistics of an SMA1 file"""
    header = read_header(path)
    values = read_sinogram(path).values
    summary = dict(header)
    summary.update(
        {
            "kappa": header["d_alpha"] / header["d_p"],
            "min": float(values.min()),
            "max": float(values.max()),
            "mean": float(values.mean()),
            "l2_norm": float(np.linalg.norm(values)),
            "nonzero": int(np.count_nonzero(values)),
        }
    )
    return summary


def write_json_lines(path, records, header):
    """One JSON object per line after a provenance comment line"""
    path = _ensure_parent(path)
    with open(path, "w") as handle:
        handle.write(header + "\n")
        for record in records:
            handle.write(json.dumps(record, sort_keys=True, default=_jsonable) + "\n")
    return path


def read_json_lines(path):
    with open(path) as handle:
        return [json.loads(line) for line in handle if line.strip() and not line.startswith("#")]
