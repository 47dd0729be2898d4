"""Source mini-grammar and the JSON state-file format.

Grammar::

    singlet | phi+ | werner:<v> | ghz:<n> | w:<n> | maximally-mixed[:<n>]
    | product:<bits> | random:<d1>x<d2>...:<seed> | file:<path>

State files are JSON objects ``{"dims": [...], "re": [[...]], "im": [[...]]}``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .kit import basis_ket, ghz, maximally_mixed, phi_plus, random_density, singlet, w_state, werner_state
from .tensor import LabeledOperator


class SourceError(ValueError):
    pass


def parse_source(spec: str) -> LabeledOperator:
    """Density operator described by ``spec``."""
    kind, _, arg = spec.strip().partition(":")
    kind = kind.lower()
    try:
        if kind == "singlet":
            return singlet().projector()
        if kind in ("phi+", "phi_plus"):
            return phi_plus().projector()
        if kind == "werner":
            return werner_state(float(arg))
        if kind == "ghz":
            return ghz(int(arg)).projector()
        if kind == "w":
            return w_state(int(arg)).projector()
        if kind == "maximally-mixed":
            return maximally_mixed((2,) * (int(arg) if arg else 2))
        if kind == "product":
            bits = arg.strip().strip("|>")
            if not bits or set(bits) - {"0", "1"}:
                raise SourceError(f"product source needs a bit string, got {arg!r}")
            return basis_ket([int(c) for c in bits]).projector()
        if kind == "random":
            dims_text, _, seed = arg.partition(":")
            dims = [int(d) for d in dims_text.split("x")]
            return random_density(dims, seed=int(seed) if seed else 0)
        if kind == "file":
            return load_state(arg)
    except SourceError:
        raise
    except (ValueError, OSError, KeyError) as err:
        raise SourceError(f"cannot build source {spec!r}: {err}") from err
    raise SourceError(f"unknown source kind {kind!r}")


def load_state(path: str | Path) -> LabeledOperator:
    obj = json.loads(Path(path).read_text())
    if not isinstance(obj, dict) or not {"dims", "re", "im"} <= obj.keys():
        raise SourceError("state file must be an object with keys dims, re, im")
    data = np.array(obj["re"], dtype=float) + 1j * np.array(obj["im"], dtype=float)
    rho = LabeledOperator.square(data, obj["dims"])
    try:
        return rho.check_density()
    except ValueError as err:
        raise SourceError(f"state file is not a density operator: {err}") from err


def save_state(rho: LabeledOperator, path: str | Path) -> None:
    obj = {"dims": list(rho.dims), "re": rho.data.real.tolist(), "im": rho.data.imag.tolist()}
    Path(path).write_text(json.dumps(obj))
