import itertools

import numpy as np
import pytest

from broadcast_bell.kit import (
    ghz,
    maximally_mixed,
    pauli,
    random_density,
    random_pure,
    singlet,
    w_state,
    werner_state,
)
from broadcast_bell.network import (
    behavior,
    honest_model,
    honest_party,
    lower_projector,
    mixture_behavior,
    transpose_model,
)
from broadcast_bell.selftest import (
    BranchDecomposition,
    NotGMEError,
    analytic_pt_spectrum,
    corrected_channel,
    extract_branches,
    extraction_instrument,
    is_gme_pure,
    pauli_tomography,
    pt_spectrum_report,
    pure_refinement_check,
    reconstruct,
    schmidt_coefficients,
)
from broadcast_bell.tensor import LabeledOperator, apply, kron, partial_transpose
import oracle

CORPUS = (
    [random_density((2, 2), rank=r, seed=s) for r, s in ((1, 0), (2, 1), (4, 2))]
    + [werner_state(v) for v in (0.0, 0.3, 0.7, 1.0)]
    + [ghz(3).projector(), w_state(3).projector(), random_pure((2, 2, 2), seed=4).projector()]
)


def test_honest_branches_are_teleportation():
    instr = extraction_instrument(honest_party())
    for seed in range(50):
        rho = random_density((2,), seed=seed)
        for s in range(4):
            want = kron([pauli(s) @ rho @ pauli(s) / 4, LabeledOperator.square(np.diag([1, 0]), (2,))])
            assert instr.branch(s, rho).max_abs_diff(want) <= 1e-10
            assert np.allclose(oracle.teleport_branch(rho.data, s), (pauli(s) @ rho @ pauli(s)).data / 4)


def test_transposed_branches_carry_flag_one():
    instr = extraction_instrument(honest_party().transpose())
    rho = random_density((2,), seed=3)
    out = instr.branch(2, rho)
    # the transposition lives on the source; the party itself only relabels the flag
    want = kron([pauli(2) @ rho @ pauli(2) / 4, LabeledOperator.square(np.diag([0, 1]), (2,))])
    assert out.max_abs_diff(want) <= 1e-10


def test_corrected_channel_is_identity_with_flag():
    kraus = corrected_channel(extraction_instrument(honest_party()))
    flag = LabeledOperator.square(np.diag([1, 0]), (2,))
    for seed in range(20):
        rho = random_density((2,), seed=seed)
        assert apply(list(kraus), rho).max_abs_diff(kron([rho, flag])) <= 1e-10


@pytest.mark.parametrize("source", CORPUS, ids=lambda r: str(r.dims))
@pytest.mark.parametrize("p", [0.0, 0.3, 1.0])
def test_reconstruction_identity(source, p):
    n = source.num_subsystems
    dec = extract_branches(source, [(p, (0,) * n), (1 - p, (1,) * n)])
    assert reconstruct(dec).max_abs_diff(source) <= 1e-9
    assert abs(dec.total_trace() - 1) <= 1e-9


def test_branch_traces_ghz_mixture():
    dec = extract_branches(ghz(3), [(0.3, (0, 0, 0)), (0.7, (1, 1, 1))])
    traces = dec.traces()
    assert set(traces) == {"000", "111"}
    assert np.isclose(traces["000"], 0.3) and np.isclose(traces["111"], 0.7)
    assert dec.get((1, 1, 1)).max_abs_diff(0.7 * ghz(3).projector().T) <= 1e-10


def test_partial_flag_mixture_for_product_source():
    rho = kron([random_density((2,), seed=1), random_density((2,), seed=2)])
    dec = extract_branches(rho, [(0.5, (0, 1)), (0.5, (0, 0))])
    assert set(dec.traces()) == {"00", "01"}
    assert reconstruct(dec).max_abs_diff(rho) <= 1e-10


@pytest.mark.parametrize("target", [ghz(3), w_state(3)], ids=["ghz3", "w3"])
@pytest.mark.parametrize("p", [0.0, 0.3, 1.0])
def test_pure_refinement_passes(target, p):
    dec = extract_branches(target, [(p, (0, 0, 0)), (1 - p, (1, 1, 1))])
    rep = pure_refinement_check(dec, target)
    assert rep.passed, rep.message
    assert np.isclose(rep.p, p)
    assert set(dec.traces()) <= {"000", "111"}


def test_pure_refinement_flags_partial_branch():
    psi = ghz(3).projector()
    branches = {
        (0, 0, 0): 0.5 * psi,
        (0, 1, 0): 0.5 * partial_transpose(psi, [1]),
    }
    dec = BranchDecomposition(branches, 3, validated=False)
    assert reconstruct(dec).max_abs_diff(psi) <= 1e-12
    rep = pure_refinement_check(dec, ghz(3))
    assert not rep.passed
    assert rep.offending[0][0] == "010"


def test_pure_refinement_needs_gme_target():
    product = kron([random_pure((2,), seed=0), random_pure((2,), seed=1)])
    dec = extract_branches(product, [(1.0, (0, 0))])
    with pytest.raises(NotGMEError):
        pure_refinement_check(dec, product)
    with pytest.raises(NotGMEError):
        pure_refinement_check(dec, werner_state(0.5))


def test_gme_detection():
    assert is_gme_pure(ghz(3)) and is_gme_pure(w_state(3)) and is_gme_pure(singlet())
    biseparable = kron([singlet(), random_pure((2,), seed=0)])
    assert not is_gme_pure(biseparable)


def test_schmidt_coefficients():
    lam = schmidt_coefficients(ghz(3), [0])
    assert np.allclose(lam, [1 / np.sqrt(2), 1 / np.sqrt(2)])
    psi = LabeledOperator.ket([np.sqrt(0.9), 0, 0, np.sqrt(0.1)], (2, 2))
    assert np.allclose(schmidt_coefficients(psi, [1]), [np.sqrt(0.9), np.sqrt(0.1)])


def test_analytic_pt_spectrum_example():
    psi = LabeledOperator.ket([np.sqrt(0.9), 0, 0, np.sqrt(0.1)], (2, 2))
    assert np.allclose(analytic_pt_spectrum(psi, [1]), [0.9, 0.3, 0.1, -0.3])
    vals = np.linalg.eigvalsh(partial_transpose(psi.projector(), [1]).data)[::-1]
    assert np.allclose(vals, [0.9, 0.3, 0.1, -0.3])


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 3), (4, 4)])
def test_analytic_pt_spectrum_random(dims):
    for seed in range(5):
        psi = random_pure(dims, seed=seed)
        vals = np.linalg.eigvalsh(partial_transpose(psi.projector(), [1]).data)[::-1]
        assert np.max(np.abs(analytic_pt_spectrum(psi, [1]) - vals)) <= 1e-8


def test_pt_spectrum_phi_plus():
    spec = pt_spectrum_report(ghz(2), [1])
    assert np.isclose(spec.min, -0.5) and np.isclose(spec.max, 0.5)
    assert spec.top_is_product is None


def test_pt_spectrum_product_saturates():
    prod_state = kron([random_pure((2,), seed=0), random_pure((3,), seed=1)])
    spec = pt_spectrum_report(prod_state, [1])
    assert np.isclose(spec.max, 1)
    assert spec.top_is_product and spec.top_second_schmidt <= 1e-6


def test_pt_spectrum_bounds_random():
    for seed in range(100):
        dims = [(2, 2), (2, 3), (3, 3), (4, 4)][seed % 4]
        spec = pt_spectrum_report(random_density(dims, rank=1 + seed % 3, seed=seed), [1])
        assert spec.min >= -0.5 - 1e-9 and spec.max <= 1 + 1e-9


@pytest.fixture(scope="module")
def singlet_behavior():
    return behavior(honest_model(singlet()))


def test_tomography_singlet(singlet_behavior):
    R = pauli_tomography(singlet_behavior, (0, 0))
    assert R.max_abs_diff(singlet().projector()) <= 1e-9


def test_tomography_byproduct_before_correction(singlet_behavior):
    R = pauli_tomography(singlet_behavior, (1, 0))
    corr = kron([pauli(1), pauli(0)])
    assert R.max_abs_diff(corr @ singlet().projector() @ corr) <= 1e-9
    unnormalized = pauli_tomography(singlet_behavior, (1, 0), normalize=False)
    assert np.isclose(unnormalized.trace().real, 1 / 16)


def test_tomography_maximally_mixed():
    b = behavior(honest_model(maximally_mixed((2, 2))))
    for s in itertools.product(range(4), repeat=2):
        assert pauli_tomography(b, s).max_abs_diff(maximally_mixed((2, 2))) <= 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_tomography_corrected_random(seed):
    rho = random_density((2, 2), seed=seed)
    b = behavior(honest_model(rho))
    for s in itertools.product(range(4), repeat=2):
        assert pauli_tomography(b, s, correct=True).max_abs_diff(rho) <= 1e-8


def test_tomography_mixture_recovers_source():
    rho = random_density((2, 2), seed=12)
    model = honest_model(rho)
    b = mixture_behavior([(0.3, model), (0.7, transpose_model(model))])
    assert pauli_tomography(b, (2, 3), correct=True).max_abs_diff(rho) <= 1e-8


def test_tomography_three_parties():
    b = behavior(honest_model(w_state(3)))
    assert pauli_tomography(b, (0, 0, 0)).max_abs_diff(w_state(3).projector()) <= 1e-8


def test_tomography_rejects_wrong_length(singlet_behavior):
    with pytest.raises(ValueError):
        pauli_tomography(singlet_behavior, (0,))


@pytest.mark.parametrize("flags", [(0, 0), (1, 1)])
def test_key_relation(flags):
    rho = random_density((2, 2), seed=31)
    model = honest_model(rho)
    if any(flags):
        model = transpose_model(model)
    b = behavior(model)
    for a1, b1 in [(0, 0), (1, 2), (3, 3)]:
        dec = extract_branches(rho, [(1.0, flags)], outcome=(a1, b1))
        assert set(dec.traces()) == {"".join(map(str, flags))}
        branch = dec.get(flags)
        for x2, y2 in itertools.product((1, 2, 3), repeat=2):
            for a2, b2 in itertools.product((0, 1), repeat=2):
                proj = kron([lower_projector(a2, x2), lower_projector(b2, y2)])
                if any(flags):
                    proj = proj.T
                pred = (proj @ branch).trace().real
                born = b.prob((0, x2, 0, y2), (a1, a2, b1, b2))
                assert abs(pred - born) <= 1e-9
