"""JSON codecs for tensors, witnesses and boundary isometries.

Complex numbers are written as ``[re, im]`` pairs. Tensor files use the
layout ``{"d": int, "D": int, "matrices": [...]}`` with matrices listed
row-major, outer index ``i``. Unknown top-level keys are ignored on load so
catalog output (which carries a ``"sidecar"`` entry) stays readable.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from lrle.errors import WrongShape
from lrle.mps import BasisRotation, BoundaryIsometry, MPSTensor


def encode_complex(arr: np.ndarray) -> Any:
    arr = np.asarray(arr, dtype=complex)
    if arr.ndim == 0:
        z = complex(arr)
        return [_clean(z.real), _clean(z.imag)]
    return [encode_complex(a) for a in arr]


def _clean(v: float) -> float:
    # normalise -0.0 so output is byte-stable
    v = float(v)
    return 0.0 if v == 0.0 else v


def decode_complex(obj: Any) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.shape[-1:] != (2,):
        raise WrongShape("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def tensor_to_dict(tensor: MPSTensor) -> dict:
    return {"d": tensor.d, "D": tensor.D, "matrices": encode_complex(tensor.matrices)}


def tensor_from_dict(obj: dict) -> MPSTensor:
    A = decode_complex(obj["matrices"])
    if A.ndim != 3 or A.shape != (obj["d"], obj["D"], obj["D"]):
        raise WrongShape(f"matrices have shape {A.shape}, header says d={obj['d']}, D={obj['D']}")
    return MPSTensor(A)


def witness_to_dict(witness) -> dict:
    return {
        "x": encode_complex(witness.x),
        "y": encode_complex(witness.y),
        "U": encode_complex(witness.rotation.U),
    }


def witness_from_dict(obj: dict):
    from lrle.criterion import Witness

    return Witness(
        x=decode_complex(obj["x"]),
        y=decode_complex(obj["y"]),
        rotation=BasisRotation(decode_complex(obj["U"])),
    )


def isometry_to_dict(iso: BoundaryIsometry) -> dict:
    return {"M": encode_complex(iso.M)}


def isometry_from_obj(obj: Any) -> BoundaryIsometry:
    if isinstance(obj, dict):
        obj = obj["M"]
    return BoundaryIsometry(decode_complex(obj))


def dumps(obj: Any) -> str:
    """Deterministic JSON text (sorted keys, fixed separators)."""
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=True) + "\n"


def load_json(path: str | Path) -> Any:
    with open(path) as fh:
        return json.load(fh)


def load_tensor(path: str | Path) -> MPSTensor:
    return tensor_from_dict(load_json(path))
