"""Entanglement witnesses and the broadcast witness functional.

A two-qubit witness ``W`` is expanded in the lower-branch Pauli projectors,
``W = sum w[a, b, x, y] Pi^(a|x) x Pi^(b|y)``, and the functional

    I(P) = sum w[a2, b2, x2, y2] P(a2, b2, a1*, b1* | x2, y2, 0, 0)

is evaluated on a behavior, conditioned on the Bell outcomes ``(a1*, b1*)``.
In the honest network each Bell outcome occurs with probability 1/4 per side,
so ``I(P) = tr[W rho] / 16`` for the default Phi+ conditioning.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kit import PAULI_LABELS, pauli_string, werner_state
from .network import LOWER_OBSERVABLES, LOWER_SETTINGS, Behavior, behavior, honest_model, lower_projector
from .tensor import LabeledOperator, hermitian_eigs, kron, partial_transpose

#: Bell outcome of the Phi+ projector (sigma_0 = 1)
PHI_PLUS_OUTCOME = 0
#: probability of the Phi+ outcome on both sides of the honest network
HONEST_WEIGHT = 1 / 16

_LABEL_INDEX = {lab: i for i, lab in enumerate(PAULI_LABELS)}


class NotNPTError(ValueError):
    """The state has a positive partial transpose, so no NPT witness exists."""


@dataclass(frozen=True, eq=False)
class WitnessExpansion:
    """A two-qubit witness with its Pauli and projector coefficients.

    ``c[mu, nu]`` is indexed by ``PAULI_LABELS`` (I, X, Y, Z); ``w[a, b, x-1, y-1]``
    by outcomes and lower-branch settings.
    """

    W: LabeledOperator
    c: np.ndarray
    w: np.ndarray
    certified_value: float | None = None

    def pauli_sum(self) -> LabeledOperator:
        out = np.zeros((4, 4), dtype=complex)
        for i, mu in enumerate(PAULI_LABELS):
            for j, nu in enumerate(PAULI_LABELS):
                out += self.c[i, j] * pauli_string([mu, nu]).data
        return LabeledOperator.square(out, (2, 2))

    def projector_sum(self) -> LabeledOperator:
        out = np.zeros((4, 4), dtype=complex)
        for a in (0, 1):
            for b in (0, 1):
                for x in LOWER_SETTINGS:
                    for y in LOWER_SETTINGS:
                        coeff = self.w[a, b, x - 1, y - 1]
                        if coeff:
                            out += coeff * kron([lower_projector(a, x), lower_projector(b, y)]).data
        return LabeledOperator.square(out, (2, 2))


def pauli_expansion(W: LabeledOperator) -> WitnessExpansion:
    """Pauli coefficients and the canonical projector coefficients of ``W``.

    Identity components are routed through lower setting 3 (summing over its
    outcomes reproduces the identity).
    """
    if W.dims != (2, 2) or not W.is_hermitian():
        raise ValueError("pauli_expansion needs a hermitian two-qubit operator")
    c = np.zeros((4, 4))
    for i, mu in enumerate(PAULI_LABELS):
        for j, nu in enumerate(PAULI_LABELS):
            c[i, j] = (pauli_string([mu, nu]).data.conj().T @ W.data).trace().real / 4
    w = np.zeros((2, 2, 3, 3))
    route = LOWER_SETTINGS[-1]
    for a in (0, 1):
        for b in (0, 1):
            sa, sb = (-1) ** a, (-1) ** b
            for x in LOWER_SETTINGS:
                for y in LOWER_SETTINGS:
                    px = _LABEL_INDEX[LOWER_OBSERVABLES[x]]
                    py = _LABEL_INDEX[LOWER_OBSERVABLES[y]]
                    val = sa * sb * c[px, py]
                    if y == route:
                        val += sa * c[px, 0]
                    if x == route:
                        val += sb * c[0, py]
                    if x == route and y == route:
                        val += c[0, 0]
                    w[a, b, x - 1, y - 1] = val
    return WitnessExpansion(W, c, w)


def pt_min_eig(rho: LabeledOperator) -> float:
    vals, _ = hermitian_eigs(partial_transpose(rho, [1]))
    return float(vals[-1])


def npt_witness(rho: LabeledOperator, tol: float = 1e-9) -> WitnessExpansion:
    """``W = (|phi><phi|)^T_B`` for the most negative eigenvector ``phi`` of ``rho^T_B``."""
    if rho.is_ket:
        rho = rho.projector()
    if rho.dims != (2, 2):
        raise ValueError("npt_witness is implemented for two-qubit states")
    rho.check_density()
    vals, vecs = hermitian_eigs(partial_transpose(rho, [1]))
    if vals[-1] >= -tol:
        raise NotNPTError(f"not NPT-certifiable (min PT eigenvalue {vals[-1]:.3e})")
    phi = LabeledOperator.ket(vecs[:, -1], (2, 2))
    W = partial_transpose(phi.projector(), [1])
    exp = pauli_expansion(W)
    return WitnessExpansion(exp.W, exp.c, exp.w, float(vals[-1]))


def expectation(W: LabeledOperator, rho: LabeledOperator) -> float:
    return float((W.data @ rho.data).trace().real)


def broadcast_functional(
    b: Behavior,
    w: WitnessExpansion,
    conditioning: tuple[int, int] = (PHI_PLUS_OUTCOME, PHI_PLUS_OUTCOME),
    parties: tuple[str, str] = ("A", "B"),
) -> float:
    """``sum w * P(a2, b2, a1*, b1* | x2, y2, 0, 0)`` on the sites of ``parties``."""
    pa, pb = parties
    sites = [f"{pa}2", f"{pb}2", f"{pa}1", f"{pb}1"]
    missing = [s for s in sites if s not in b.site_names]
    if missing:
        raise KeyError(f"behavior has no sites {missing}")
    sub = b.marginal(sites)
    try:
        i0 = sub.setting_index(2, 0), sub.setting_index(3, 0)
    except KeyError as err:
        raise KeyError("behavior lacks the Bell-measurement setting 0") from err
    a1, b1 = conditioning
    total = 0.0
    for x in LOWER_SETTINGS:
        for y in LOWER_SETTINGS:
            ix, iy = sub.setting_index(0, x), sub.setting_index(1, y)
            p = sub.table[ix, iy, i0[0], i0[1], :2, :2, a1, b1]
            total += float(np.sum(w.w[:, :, x - 1, y - 1] * p))
    return total


def honest_witness_value(rho: LabeledOperator, W: LabeledOperator) -> float:
    """Closed-form honest value of the functional: ``tr[W rho] / 16``."""
    return HONEST_WEIGHT * expectation(W, rho)


def verify_honest_identity(rho: LabeledOperator, W: LabeledOperator) -> tuple[float, float]:
    """``(I from the honest behavior, tr[W rho] / 4)``."""
    if rho.is_ket:
        rho = rho.projector()
    value = broadcast_functional(behavior(honest_model(rho)), pauli_expansion(W))
    return value, expectation(W, rho) / 4


@dataclass(frozen=True)
class SweepRow:
    v: float
    min_pt_eig: float
    I: float | None
    quarter_trace: float | None
    detected: bool


def werner_sweep(grid: Sequence[float]) -> list[SweepRow]:
    rows = []
    for v in grid:
        rho = werner_state(v)
        lam = pt_min_eig(rho)
        try:
            wit = npt_witness(rho)
        except NotNPTError:
            rows.append(SweepRow(float(v), lam, None, None, False))
            continue
        value = broadcast_functional(behavior(honest_model(rho)), wit)
        rows.append(SweepRow(float(v), lam, value, expectation(wit.W, rho) / 4, value < -1e-10))
    return rows


def separable_value(W: LabeledOperator, sigma: LabeledOperator) -> dict[str, float]:
    """``tr[W' sigma]`` for ``W`` and its partial transposes."""
    return {
        "W": expectation(W, sigma),
        "W^TA": expectation(partial_transpose(W, [0]), sigma),
        "W^TB": expectation(partial_transpose(W, [1]), sigma),
        "W^T": expectation(W.T, sigma),
    }


def branch_contributions(branches: dict[tuple[int, ...], LabeledOperator], W: LabeledOperator) -> dict:
    """``tr[W^T(k) rho^(k)]`` for every flag pattern ``k`` of a two-party branch decomposition."""
    return {
        k: expectation(partial_transpose(W, [i for i, f in enumerate(k) if f]), rho)
        for k, rho in branches.items()
    }

