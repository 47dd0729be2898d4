"""Honest broadcast network and its exact Born-rule behavior.

Each party ``X`` receives one qubit of the source and applies the isometry
``|psi> -> |psi>_{X1in} |Phi+>_{X1aux X2}``. Registers of one party are stored
in the order ``(X1in, X1aux, X2)`` and parties are concatenated ``A, B, C, ...``.

The upper branch ``X1`` has a four-outcome Bell measurement at setting 0 and six
binary measurements ``M^(1..6)`` on ``X1aux`` at settings 1..6. The lower
branch ``X2`` measures the Paulis assigned by :data:`LOWER_OBSERVABLES`.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, replace
from math import prod
from typing import Sequence

import numpy as np

from .kit import Povm, bell_state, binary_povm, pauli, phi_plus
from .tensor import (
    DimensionError,
    LabeledOperator,
    apply,
    identity,
    kron,
    partial_transpose,
)

#: lower-branch setting -> Pauli measured by X2
LOWER_OBSERVABLES = {1: "Z", 2: "X", 3: "Y"}
UPPER_SETTINGS = tuple(range(7))
LOWER_SETTINGS = tuple(LOWER_OBSERVABLES)

_S2 = np.sqrt(2)


def upper_observable(setting: int) -> LabeledOperator:
    """``M^(x)`` for x = 1..6: (Z +- X), (Z +- Y), (X +- Y), all over sqrt(2)."""
    pairs = {1: ("Z", "X", 1), 2: ("Z", "X", -1), 3: ("Z", "Y", 1),
             4: ("Z", "Y", -1), 5: ("X", "Y", 1), 6: ("X", "Y", -1)}
    if setting not in pairs:
        raise ValueError(f"upper binary settings are 1..6, got {setting}")
    a, b, sign = pairs[setting]
    return (pauli(a) + sign * pauli(b)) / _S2


def lower_projector(outcome: int, setting: int) -> LabeledOperator:
    """``Pi^(a|x) = (1 + (-1)^a sigma_x)/2`` with the lower-branch assignment."""
    return binary_povm(pauli(LOWER_OBSERVABLES[setting]))[outcome]


def broadcast_isometry() -> LabeledOperator:
    """``V: X -> X1in X1aux X2`` appending an EPR pair to the incoming qubit."""
    return kron([identity((2,)), phi_plus()])


def upper_povm() -> Povm:
    """Effects on ``(X1in, X1aux)``."""
    # written on (aux, in) and permuted into storage order (in, aux)
    bell = tuple(bell_state(m).projector() for m in range(4))
    groups = [bell]
    for x in range(1, 7):
        groups.append(tuple(kron([e, identity((2,))]) for e in binary_povm(upper_observable(x))))
    return Povm(tuple(groups), UPPER_SETTINGS, frozenset({0, 1})).permuted([1, 0])


def lower_povm() -> Povm:
    groups = [tuple(lower_projector(a, x) for a in (0, 1)) for x in LOWER_SETTINGS]
    return Povm(tuple(groups), LOWER_SETTINGS, frozenset({2}))


@dataclass(frozen=True, eq=False)
class PartyModel:
    """Local isometry plus the two branch POVMs of one party."""

    isometry: LabeledOperator
    upper: Povm
    lower: Povm
    transposed: bool = False

    def __post_init__(self):
        if not self.isometry.is_isometry():
            raise ValueError("party map is not an isometry")
        n_up = len(self.upper.dims)
        out = self.isometry.dims_out
        if self.upper.dims + self.lower.dims != out:
            raise DimensionError(
                f"branch POVMs on {self.upper.dims} + {self.lower.dims} do not match isometry output {out}"
            )
        if self.upper.acting_on != frozenset(range(n_up)) or self.lower.acting_on != frozenset(
            range(n_up, len(out))
        ):
            raise DimensionError("upper branch must hold the leading registers, lower the rest")

    def transpose(self) -> PartyModel:
        return PartyModel(self.isometry.conj(), self.upper.transposed(), self.lower.transposed(), not self.transposed)

    def effect_tensor(self) -> np.ndarray:
        """Array ``F[xu, xl, au, al]`` of the joint local effects, padded with zeros."""
        nu, nl = len(self.upper.settings), len(self.lower.settings)
        mu, ml = max(self.upper.outcome_counts), max(self.lower.outcome_counts)
        d = self.isometry.shape[0]
        out = np.zeros((nu, nl, mu, ml, d, d), dtype=complex)
        for i, up in enumerate(self.upper.effects):
            for j, low in enumerate(self.lower.effects):
                for a, eu in enumerate(up):
                    for b, el in enumerate(low):
                        out[i, j, a, b] = np.kron(eu.data, el.data)
        return out


def honest_party() -> PartyModel:
    return PartyModel(broadcast_isometry(), upper_povm(), lower_povm())


@dataclass(frozen=True, eq=False)
class BroadcastModel:
    source: LabeledOperator
    parties: tuple[PartyModel, ...]

    def __post_init__(self):
        parties = tuple(self.parties)
        self.source.check_density()
        if self.source.dims != tuple(p.isometry.dims_in[0] for p in parties):
            raise DimensionError("source dims do not match the party inputs")
        object.__setattr__(self, "parties", parties)

    @property
    def num_parties(self) -> int:
        return len(self.parties)

    @property
    def flags(self) -> tuple[int, ...]:
        return tuple(int(p.transposed) for p in self.parties)

    def global_state(self) -> LabeledOperator:
        """State right before measurement, registers ``(X1in, X1aux, X2)`` per party."""
        return apply(kron([p.isometry for p in self.parties]), self.source)


def honest_model(source: LabeledOperator, parties: int | None = None) -> BroadcastModel:
    if source.is_ket:
        source = source.projector()
    n = source.num_subsystems if parties is None else parties
    if source.num_subsystems != n:
        raise DimensionError(f"source has {source.num_subsystems} slots, expected {n}")
    if any(d != 2 for d in source.dims):
        raise DimensionError("honest broadcast model is defined for qubit sources only")
    return BroadcastModel(source, tuple(honest_party() for _ in range(n)))


def transpose_model(model: BroadcastModel, parties: Sequence[int] | None = None) -> BroadcastModel:
    """Transpose the source and the devices of ``parties`` (default: everyone).

    For a strict subset of parties the partially transposed source has to stay
    positive, otherwise the result is not a quantum model and ``ValueError``
    is raised.
    """
    n = model.num_parties
    which = range(n) if parties is None else sorted(set(parties))
    source = partial_transpose(model.source, which)
    new_parties = tuple(p.transpose() if i in which else p for i, p in enumerate(model.parties))
    return BroadcastModel(source, new_parties)


def site_names(num_parties: int) -> tuple[str, ...]:
    return tuple(f"{string.ascii_uppercase[i]}{b}" for i in range(num_parties) for b in (1, 2))


@dataclass(frozen=True, eq=False)
class Behavior:
    """``P(outcomes | settings)`` over measurement sites.

    ``table`` has one settings axis per site followed by one outcome axis per
    site; outcome axes are padded to the largest outcome count of the site,
    padded entries are zero.
    """

    table: np.ndarray
    site_names: tuple[str, ...]
    settings: tuple[tuple[int, ...], ...]
    outcome_counts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n = len(self.site_names)
        expected = tuple(len(s) for s in self.settings) + tuple(max(c) for c in self.outcome_counts)
        if self.table.shape != expected or len(self.settings) != n or len(self.outcome_counts) != n:
            raise DimensionError(f"behavior table shape {self.table.shape} != {expected}")
        table = np.array(self.table, dtype=float)
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def num_sites(self) -> int:
        return len(self.site_names)

    def site(self, name_or_index) -> int:
        if isinstance(name_or_index, str):
            return self.site_names.index(name_or_index)
        return int(name_or_index)

    def setting_index(self, site: int, label: int) -> int:
        try:
            return self.settings[site].index(label)
        except ValueError:
            raise KeyError(f"site {self.site_names[site]} has no setting {label}") from None

    def prob(self, settings: Sequence[int], outcomes: Sequence[int]) -> float:
        idx = tuple(self.setting_index(i, s) for i, s in enumerate(settings))
        return float(self.table[idx + tuple(outcomes)])

    def marginal(self, keep: Sequence, reference: dict | None = None) -> Behavior:
        """Behavior of the sites in ``keep`` (in that order).

        Discarded sites have their outcomes summed at a reference setting
        (label 1 unless given in ``reference``).
        """
        keep = [self.site(k) for k in keep]
        reference = {self.site(k): v for k, v in (reference or {}).items()}
        n = self.num_sites
        index: list = []
        for i in range(n):
            if i in keep:
                index.append(slice(None))
            else:
                label = reference.get(i, 1 if 1 in self.settings[i] else self.settings[i][0])
                index.append(self.setting_index(i, label))
        t = self.table[tuple(index) + (slice(None),) * n]
        # remaining axes: kept settings (original order), then all outcomes
        kept_sorted = sorted(keep)
        drop_out = tuple(len(kept_sorted) + i for i in range(n) if i not in keep)
        t = t.sum(axis=drop_out)
        order = [kept_sorted.index(k) for k in keep]
        t = t.transpose(order + [len(keep) + o for o in order])
        return Behavior(
            t,
            tuple(self.site_names[k] for k in keep),
            tuple(self.settings[k] for k in keep),
            tuple(self.outcome_counts[k] for k in keep),
        )

    def normalization_error(self) -> float:
        n = self.num_sites
        sums = self.table.sum(axis=tuple(range(n, 2 * n)))
        return float(np.max(np.abs(sums - 1)))

    def signaling_error(self) -> float:
        """Largest dependence of any site-marginal on a discarded site's setting."""
        n = self.num_sites
        worst = 0.0
        for j in range(n):
            summed = self.table.sum(axis=n + j)
            spread = summed.max(axis=j) - summed.min(axis=j)
            worst = max(worst, float(np.max(spread)))
        return worst

    def range_error(self) -> float:
        return float(max(0.0, -self.table.min(), self.table.max() - 1))

    def check(self, tol: float = 1e-9) -> Behavior:
        if self.range_error() > 1e-12:
            raise ValueError("probabilities outside [0, 1]")
        if self.normalization_error() > tol:
            raise ValueError("behavior is not normalized")
        if self.signaling_error() > tol:
            raise ValueError("behavior is signaling")
        return self


def behavior(model: BroadcastModel) -> Behavior:
    """Exact ``P = tr[(E_1 x ... x E_N) (xV) rho (xV)^dag]`` for all settings and outcomes."""
    n = model.num_parties
    rho = model.global_state()
    dims = [p.isometry.shape[0] for p in model.parties]
    x = rho.data.reshape(dims + dims)
    shapes = []
    for k, party in enumerate(model.parties):
        f = party.effect_tensor()
        shapes.append(f.shape[:4])
        m = prod(f.shape[:4])
        d = dims[k]
        f = f.reshape(m, d, d)
        remaining = n - k
        # contract F[e, j, i] with X[i, ..., j, ...]; move the new axis to the back
        x = np.tensordot(f, x, axes=([1, 2], [remaining, 0]))
        x = np.moveaxis(x, 0, -1)
    p = x.real.reshape(sum((s for s in shapes), ()))
    # axes now (xu, xl, au, al) per party -> all settings first, then outcomes
    setting_axes = [4 * k + j for k in range(n) for j in (0, 1)]
    outcome_axes = [4 * k + j for k in range(n) for j in (2, 3)]
    p = p.transpose(setting_axes + outcome_axes)
    settings, counts = [], []
    for party in model.parties:
        settings += [party.upper.settings, party.lower.settings]
        counts += [party.upper.outcome_counts, party.lower.outcome_counts]
    return Behavior(p, site_names(n), tuple(settings), tuple(counts))


def mixture_behavior(models: Sequence[tuple[float, BroadcastModel]], tol: float = 1e-10) -> Behavior:
    weights = np.array([w for w, _ in models], dtype=float)
    if len(weights) == 0 or np.any(weights < 0) or abs(weights.sum() - 1) > tol:
        raise ValueError("mixture weights must be non-negative and sum to 1")
    parts = [behavior(m) for w, m in models]
    first = parts[0]
    for b in parts[1:]:
        if b.table.shape != first.table.shape or b.settings != first.settings:
            raise DimensionError("mixed models have different scenarios")
    table = sum(w * b.table for w, b in zip(weights, parts))
    return replace(first, table=table)


def product_behavior_check(b: Behavior, split: int) -> float:
    """Max deviation of ``b`` from the product of its marginals on sites ``[:split]`` and ``[split:]``."""
    n = b.num_sites
    left, right = list(range(split)), list(range(split, n))
    t = b.table
    pl = t.sum(axis=tuple(n + i for i in right))
    pr = t.sum(axis=tuple(n + i for i in left))
    prod_table = np.einsum(_product_subscripts(n, split), pl, pr)
    return float(np.max(np.abs(prod_table - t)))


def _product_subscripts(n: int, split: int) -> str:
    letters = string.ascii_letters
    s = letters[:n]
    o = letters[n : 2 * n]
    left = s + o[:split]
    right = s + o[split:]
    return f"{left},{right}->{s}{o}"
