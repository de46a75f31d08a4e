import dataclasses
import json
import logging
import os
import subprocess
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence, Type

import numpy as np

import imuon.configuration.config as config
import imuon.backend.manifold_part.manifolds as manifolds
from imuon.backend.utility.errors import InvalidInput

logger = logging.getLogger(__name__)


# =====================================================
# LOGGING AND PROVENANCE
# =====================================================

def setup_logging(level: Optional[str] = None, prefix: str = "imuon") -> str:
    """
    Configure root logging once: timestamped file under LOG_DIRECTORY plus terminal

    Returns:
        Path of the log file
    """
    os.makedirs(config.LOG_DIRECTORY, exist_ok=True)
    logname = os.path.join(config.LOG_DIRECTORY, f"{prefix}_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log")
    handlers: List[logging.Handler] = [logging.FileHandler(logname, mode='a')]
    if config.LOG_TO_TERMINAL:
        handlers.append(logging.StreamHandler())
    logging.basicConfig(
        level=getattr(logging, (level or config.LOG_LEVEL).upper(), logging.INFO),
        format=config.LOG_FORMAT,
        handlers=handlers,
        force=True,
    )
    return logname


def build_id() -> str:
    """git describe of the working tree, or 'unknown' outside a repository"""
    try:
        result = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=10,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if result.returncode == 0 and result.stdout.strip():
            return result.stdout.strip()
    except (OSError, subprocess.SubprocessError) as e:
        logger.debug(f"git describe unavailable: {e}")
    return "unknown"


# =====================================================
# MATRIX TEXT FORMAT
# =====================================================

def format_matrix_rows(M: np.ndarray) -> List[str]:
    return [" ".join(f"{v:.17g}" for v in row) for row in np.atleast_2d(M)]


def write_matrix(path: str, M: np.ndarray) -> None:
    """Header 'rows cols' then one line per row, 17 significant digits"""
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{M.shape[0]} {M.shape[1]}\n")
        for line in format_matrix_rows(M):
            f.write(line + "\n")


def _parse_rows(lines: Sequence[str], rows: int, cols: int, source: str) -> np.ndarray:
    if len(lines) < rows:
        raise InvalidInput(f"{source}: expected {rows} rows, found {len(lines)}")
    data = np.array([[float(v) for v in line.split()] for line in lines[:rows]], dtype=np.float64)
    if data.shape != (rows, cols):
        raise InvalidInput(f"{source}: expected shape {(rows, cols)}, found {data.shape}")
    return data.reshape(rows, cols)


def read_matrix(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as f:
        lines = [line for line in f.read().splitlines() if line.strip()]
    if not lines:
        raise InvalidInput(f"{path}: empty matrix file")
    try:
        rows, cols = (int(v) for v in lines[0].split())
    except ValueError as e:
        raise InvalidInput(f"{path}: malformed header {lines[0]!r}") from e
    return _parse_rows(lines[1:], rows, cols, path)


def write_point(path: str, x: manifolds.ManifoldPoint) -> None:
    """Header 'kind rows cols [r]' followed by the point's matrices"""
    if isinstance(x, manifolds.ProductPoint):
        raise InvalidInput("Write product components individually")
    with open(path, "w", encoding="utf-8") as f:
        if isinstance(x, manifolds.FixedRankPoint):
            dims = x.dims
            f.write(f"fixed_rank {dims['m']} {dims['n']} {dims['r']}\n")
            blocks = (x.B, x.A)
        else:
            f.write(f"{x.kind.value} {x.X.shape[0]} {x.X.shape[1]}\n")
            blocks = (x.X,)
        for block in blocks:
            for line in format_matrix_rows(block):
                f.write(line + "\n")


def read_point(path: str) -> manifolds.ManifoldPoint:
    with open(path, "r", encoding="utf-8") as f:
        lines = [line for line in f.read().splitlines() if line.strip()]
    if not lines:
        raise InvalidInput(f"{path}: empty point file")
    header = lines[0].split()
    kind = header[0]
    try:
        if kind == "fixed_rank":
            m, n, r = (int(v) for v in header[1:4])
            B = _parse_rows(lines[1:1 + m], m, r, path)
            A = _parse_rows(lines[1 + m:1 + m + r], r, n, path)
            return manifolds.FixedRankPoint(B, A)
        rows, cols = (int(v) for v in header[1:3])
    except ValueError as e:
        raise InvalidInput(f"{path}: malformed header {lines[0]!r}") from e
    X = _parse_rows(lines[1:], rows, cols, path)
    builders = {
        "spd": manifolds.SpdPoint,
        "stiefel": manifolds.StiefelPoint,
        "grassmann": manifolds.GrassmannPoint,
    }
    if kind not in builders:
        raise InvalidInput(f"{path}: unknown point kind {kind!r}")
    return builders[kind](X)


# =====================================================
# TRAJECTORY FILES
# =====================================================

class TrajectoryWriter:
    """
    JSONL trajectory file: a run header object, then one record per line
    """

    def __init__(self, path: str, header: Dict[str, Any]):
        """Create the file and write the run header"""
        self.path = path
        self.records_written = 0
        try:
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
            with open(self.path, "w", encoding="utf-8") as f:
                f.write(json.dumps({"header": header}, sort_keys=True) + "\n")
            logger.debug(f"Trajectory file initialized: {self.path}")
        except OSError as e:
            logger.error(f"Failed to initialize trajectory file {self.path}: {e}")
            raise

    def append(self, records: Sequence[Any]) -> None:
        """Append pydantic records (or plain dicts)"""
        with open(self.path, "a", encoding="utf-8") as f:
            for record in records:
                payload = record.model_dump() if hasattr(record, "model_dump") else dict(record)
                f.write(json.dumps(payload, sort_keys=True) + "\n")
                self.records_written += 1


def read_trajectory(path: str) -> Dict[str, Any]:
    """Return {'header': ..., 'records': [...]} from a JSONL trajectory"""
    with open(path, "r", encoding="utf-8") as f:
        lines = [json.loads(line) for line in f if line.strip()]
    if not lines or "header" not in lines[0]:
        raise InvalidInput(f"{path}: missing run header")
    return {"header": lines[0]["header"], "records": lines[1:]}


# =====================================================
# INSTANCE DIRECTORIES
# =====================================================

def save_instance(instance: Any, directory: str) -> None:
    """
    Serialize a dataclass instance: scalars to meta.json, integer vectors and
    index pairs to CSV, float arrays to matrix text (3-D stacks flattened)
    """
    os.makedirs(directory, exist_ok=True)
    meta: Dict[str, Any] = {"type": type(instance).__name__, "arrays": {}}
    for item in dataclasses.fields(instance):
        value = getattr(instance, item.name)
        if isinstance(value, np.ndarray):
            meta["arrays"][item.name] = {"shape": list(value.shape), "dtype": str(value.dtype)}
            if np.issubdtype(value.dtype, np.integer):
                table = value.reshape(value.shape[0], -1) if value.ndim > 1 else value[:, None]
                np.savetxt(os.path.join(directory, f"{item.name}.csv"), table, fmt="%d", delimiter=",")
            else:
                flat = value.reshape(-1, value.shape[-1]) if value.ndim > 1 else value[None, :]
                write_matrix(os.path.join(directory, f"{item.name}.txt"), flat)
        else:
            meta[item.name] = value
    with open(os.path.join(directory, "meta.json"), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
    logger.info(f"Saved {meta['type']} to {directory}")


def load_instance(cls: Type, directory: str) -> Any:
    with open(os.path.join(directory, "meta.json"), "r", encoding="utf-8") as f:
        meta = json.load(f)
    if meta.get("type") != cls.__name__:
        raise InvalidInput(f"{directory} holds {meta.get('type')}, not {cls.__name__}")
    kwargs: Dict[str, Any] = {}
    for item in dataclasses.fields(cls):
        if item.name in meta["arrays"]:
            spec = meta["arrays"][item.name]
            shape = tuple(spec["shape"])
            if spec["dtype"].startswith("int"):
                table = np.loadtxt(os.path.join(directory, f"{item.name}.csv"), dtype=np.int64, delimiter=",", ndmin=2)
                kwargs[item.name] = table.reshape(shape)
            else:
                kwargs[item.name] = read_matrix(os.path.join(directory, f"{item.name}.txt")).reshape(shape)
        elif item.name in meta:
            value = meta[item.name]
            kwargs[item.name] = tuple(value) if isinstance(value, list) else value
    return cls(**kwargs)
