"""File formats and canonical report serialisation."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .algebra import TranslationOp
from .atmen import Kernel, distance_kernel, embedding_kernel, explicit_kernel, truncated_kernel
from .errors import CoarseError, InputError
from .morita import DensePartition, build_partition
from .space import CoarseSpace, ControlledSet, PartialTranslation


def read_json(path: str | Path) -> Any:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(f"{p}: no such file") from None
    except OSError as exc:
        raise InputError(f"{p}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{p}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def _wrap(path, fn):
    try:
        return fn()
    except InputError:
        raise
    except (CoarseError, KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"{path}: {exc}") from None


def load_space(path) -> CoarseSpace:
    data = read_json(path)
    return _wrap(path, lambda: CoarseSpace.from_json(data))


def load_controlled_set(path, n: int) -> ControlledSet:
    data = read_json(path)
    return _wrap(path, lambda: ControlledSet(n, [tuple(p) for p in data["pairs"]]))


def load_translation(path, n: int) -> PartialTranslation:
    data = read_json(path)
    return _wrap(path, lambda: PartialTranslation(n, data["domain"], data["image"]))


def load_operator(path, space: CoarseSpace) -> TranslationOp:
    data = read_json(path)
    return _wrap(path, lambda: TranslationOp.from_triplets(space.n, data["triplets"], space))


def load_partition(path, space: CoarseSpace) -> DensePartition:
    data = read_json(path)

    def build():
        if "blocks" in data:
            return DensePartition.from_blocks(space.n, {int(y): v for y, v in data["blocks"].items()})
        return build_partition(space, data["Y"], int(data["radius"]))

    return _wrap(path, build)


def load_kernel(path, space: CoarseSpace) -> Kernel:
    data = read_json(path)

    def build():
        kind = data["kind"]
        if kind == "distance":
            return distance_kernel(space)
        if kind == "truncated":
            return truncated_kernel(space, data.get("cap"))
        if kind == "embedding":
            return embedding_kernel([np.asarray(p, dtype=float) for p in data["points"]])
        if kind == "explicit":
            return explicit_kernel(data["matrices"])
        raise ValueError(f"unknown kernel kind {kind!r}")

    kernel = _wrap(path, build)
    sizes = space.component_sizes()
    if len(kernel.matrices) != len(sizes) or any(m.shape != (s, s) for m, s in zip(kernel.matrices, sizes)):
        raise InputError(f"{path}: kernel shapes do not match the space components")
    return kernel


def canonical(obj: Any) -> Any:
    """JSON-ready copy with floats fixed at 15 significant digits and ``inf`` as a string."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [canonical(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        x = float(f"{x:.15g}")
        return 0.0 if x == 0 else x
    if isinstance(obj, complex):
        return [canonical(obj.real), canonical(obj.imag)]
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(canonical(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
