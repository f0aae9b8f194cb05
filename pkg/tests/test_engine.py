import json
import math

import numpy as np
import pytest

from poafd.engine import (
    Decomposition,
    DegenerateCandidate,
    SelectionConfig,
    candidate_score,
    commit_atom,
    gram_matrix,
    gs_step,
    is_consecutive,
    maximal_select,
    poafd_run,
    relative_error,
)
from poafd.experiments import example1
from poafd.kernels import Atom, KernelFamily, ParamPoint, eval_K
from poafd.oracles import brute_force_argmax, grid_points
from poafd.signals import KernelCombination, signal_norm
from poafd.verify import random_param, random_signal

from conftest import CLOSED_FAMILIES, conv_family

P1, H1, H2, S3 = KernelFamily.poisson(1), KernelFamily.heat(1), KernelFamily.heat(2), KernelFamily.sphere(3)
SMALL = SelectionConfig(t_max=5.0, x_max=3.0, grid_steps=(41, 31), starts=2)

# Gram matrix of the first experiment's three kernels by sphere quadrature (800 x 1600)
ORACLE_EX1_GRAM = np.array([
    [1.6439874904303633, 0.7693942526354507, 0.4048959660355598],
    [0.7693942526354507, 3.3203122907428555, 0.46222845578606236],
    [0.4048959660355598, 0.46222845578606236, 12.654318966532106],
])


GRID = SelectionConfig(t_max=5.0, x_max=3.0, grid_steps=(41, 31), refine=False)


def _empty(fam, sig):
    return Decomposition(fam, signal_norm=signal_norm(sig, fam))


def _state_at(fam, sig, p):
    """A decomposition of ``sig`` holding exactly the plain atom at ``p``."""
    return commit_atom(fam, sig, _empty(fam, sig), Atom(p))


# -- gram_matrix -------------------------------------------------------------


def test_gram_single():
    q = ParamPoint.half(0.8, 0.1)
    assert gram_matrix(P1, [Atom(q)]).tolist() == [[eval_K(P1, q, q)]]


def test_gram_duplicate_is_singular():
    q = ParamPoint.half(0.8, 0.1)
    G = gram_matrix(H1, [Atom(q), Atom(q)])
    assert abs(np.linalg.det(G)) <= 1e-10
    assert np.linalg.matrix_rank(G) == 1


def test_gram_example1_matches_quadrature():
    atoms = [a for _, a in example1().signal.terms]
    np.testing.assert_allclose(gram_matrix(S3, atoms), ORACLE_EX1_GRAM, rtol=1e-4)


def test_gram_symmetric(rng):
    for fam in CLOSED_FAMILIES:
        sig = random_signal(fam, rng, 5, multiples=True)
        G = gram_matrix(fam, [a for _, a in sig.terms])
        assert np.max(np.abs(G - G.T)) <= 1e-12 * np.max(np.abs(G))


# -- gs_step -----------------------------------------------------------------


def test_gs_first_step():
    row, den = gs_step(np.zeros((0, 0)), np.zeros((0, 0)), np.zeros(0), 4.0)
    assert row.tolist() == [0.5]
    assert den == 2.0


def test_gs_duplicate_is_degenerate():
    q = ParamPoint.half(0.8, 0.1)
    G = gram_matrix(P1, [Atom(q)])
    row, _ = gs_step(np.zeros((0, 0)), np.zeros((0, 0)), np.zeros(0), G[0, 0])
    with pytest.raises(DegenerateCandidate) as info:
        gs_step(G, row[None, :], G[0], G[0, 0])
    assert info.value.denominator <= 1e-6


def test_gs_rows_match_cholesky(rng):
    for fam in CLOSED_FAMILIES:
        atoms = [Atom(random_param(fam, rng)) for _ in range(3)]
        G = gram_matrix(fam, atoms)
        rows = np.zeros((0, 0))
        for k in range(3):
            row, _ = gs_step(G[:k, :k], rows, G[k, :k], G[k, k])
            grown = np.zeros((k + 1, k + 1))
            grown[:k, :k] = rows
            grown[k] = row
            rows = grown
        # Gram-Schmidt in order is the inverse Cholesky factor
        L = np.linalg.cholesky(G)
        np.testing.assert_allclose(rows, np.linalg.inv(L), rtol=1e-9, atol=1e-10 * np.max(np.abs(rows)))
        assert np.max(np.abs(rows @ G @ rows.T - np.eye(3))) <= 1e-10


# -- candidate_score ---------------------------------------------------------


def test_score_of_own_atom_is_one(rng):
    for fam in CLOSED_FAMILIES + [conv_family()]:
        p = random_param(fam, rng)
        sig = KernelCombination([(1.0, Atom(p))])
        assert candidate_score(fam, sig, _empty(fam, sig), Atom(p)) == pytest.approx(1.0, rel=1e-12)


def test_score_decays_along_ray():
    p = ParamPoint.half(1.0, 0.0)
    sig = KernelCombination([(1.0, Atom(p))])
    state = _empty(P1, sig)
    scores = [candidate_score(P1, sig, state, Atom(ParamPoint.half(1.0, 2.0**k))) for k in range(12)]
    assert all(b < a for a, b in zip(scores, scores[1:]))
    assert scores[-1] < 1e-3


def test_score_after_exact_recovery():
    p = grid_points(H1, GRID)[300]
    sig = KernelCombination([(1.0, Atom(p))])
    state = poafd_run(H1, sig, 1, GRID)
    assert state.atoms == [Atom(p)]
    for q in (ParamPoint.half(0.4, 1.0), ParamPoint.half(2.0, -1.0)):
        assert candidate_score(H1, sig, state, Atom(q)) <= 1e-8


def test_score_flags_degenerate():
    p = ParamPoint.half(1.0, 0.5)
    sig = KernelCombination([(1.0, Atom(ParamPoint.half(2.0, 0.0)))])
    state = _state_at(H1, sig, p)
    with pytest.raises(DegenerateCandidate):
        candidate_score(H1, sig, state, Atom(p))


# -- maximal_select ----------------------------------------------------------


def test_select_grid_atom():
    cfg = GRID
    p = grid_points(P1, cfg)[200]
    sig = KernelCombination([(1.0, Atom(p))])
    atom, score = maximal_select(P1, sig, _empty(P1, sig), cfg)
    assert atom == Atom(p)
    assert score == pytest.approx(1.0, rel=1e-12)


def test_select_example1_matches_brute_force():
    exp = example1()
    cfg = SelectionConfig(grid_steps=(14, 14, 14), refine=False)
    state = _empty(S3, exp.signal)
    atom, score = maximal_select(S3, exp.signal, state, cfg)
    ref_atom, ref_score = brute_force_argmax(S3, exp.signal, state, grid_points(S3, cfg))
    assert atom == ref_atom
    assert score == pytest.approx(ref_score, rel=1e-12)


def test_select_escalates_order():
    p = ParamPoint.half(1.0, 0.5)
    u = (0.6, 0.8)
    sig = KernelCombination([(2.0, Atom(p)), (-0.7, Atom(p, 2, u))])
    cfg = SelectionConfig(t_max=5.0, x_max=3.0, grid_steps=(41, 31), starts=2)
    state = _state_at(H1, sig, p)
    atom, _ = maximal_select(H1, sig, state, cfg)
    assert atom.param == p
    assert atom.order == 2
    # the residual lies along one direction, which the order-2 search recovers
    assert abs(np.dot(atom.direction, u)) == pytest.approx(1.0, abs=1e-9)


def test_weak_selection_contract(rng):
    for rho in (0.5, 0.8):
        cfg = SelectionConfig(t_max=5.0, x_max=3.0, grid_steps=(30, 30), refine=False, weak_rho=rho)
        full = SelectionConfig(t_max=5.0, x_max=3.0, grid_steps=(30, 30), refine=False)
        sig = random_signal(P1, rng, 4, t=(0.3, 4.0), x=2.5)
        state = _empty(P1, sig)
        _, best = maximal_select(P1, sig, state, full)
        atom, score = maximal_select(P1, sig, state, cfg)
        assert atom.order == 1
        assert score >= rho * best
        assert score == pytest.approx(candidate_score(P1, sig, state, atom), rel=1e-10)


def test_weak_mode_never_repeats(rng):
    cfg = SelectionConfig(t_max=5.0, x_max=3.0, grid_steps=(20, 20), refine=False, weak_rho=0.7)
    sig = random_signal(P1, rng, 4, t=(0.3, 4.0), x=2.5)
    dec = poafd_run(P1, sig, 8, cfg)
    assert len({a.param for a in dec.atoms}) == len(dec)
    assert all(a.order == 1 for a in dec.atoms)


# -- poafd_run ---------------------------------------------------------------


def test_one_atom_recovery():
    p = ParamPoint.half(1.3, 0.4)
    sig = KernelCombination([(1.0, Atom(p))])
    dec = poafd_run(P1, sig, 1, SMALL)
    assert len(dec) == 1
    assert dec.remainder_energies[0] <= 1e-10
    assert relative_error(dec, 1) <= 1e-5


def test_run_rejects_bad_input():
    sig = KernelCombination([(1.0, Atom(ParamPoint.half(1.0, 0.0)))])
    with pytest.raises(ValueError):
        poafd_run(P1, sig, 0, SMALL)
    with pytest.raises(ValueError):
        poafd_run(P1, KernelCombination([]), 2, SMALL)


def test_relative_error_range_and_monotone(rng):
    sig = random_signal(P1, rng, 4, t=(0.3, 4.0), x=2.5)
    dec = poafd_run(P1, sig, 5, SMALL)
    errs = [relative_error(dec, k) for k in range(1, len(dec) + 1)]
    assert all(b <= a for a, b in zip(errs, errs[1:]))
    with pytest.raises(IndexError):
        relative_error(dec, 0)
    with pytest.raises(IndexError):
        relative_error(dec, len(dec) + 1)


def test_scale_equivariance(rng):
    for fam in (P1, H2):
        cfg = SelectionConfig(t_max=5.0, x_max=3.0, grid_steps=(20,) * (fam.d + 1), starts=2)
        sig = random_signal(fam, rng, 3, t=(0.3, 4.0), x=2.5)
        dec = poafd_run(fam, sig, 4, cfg)
        # a power of two scales every float exactly, so the run is bit-identical
        exact = poafd_run(fam, sig.scaled(-2.0), 4, cfg)
        assert exact.atoms == dec.atoms
        np.testing.assert_array_equal(exact.fourier_coeffs, -2.0 * dec.fourier_coeffs)
        alpha = 2.5
        scaled = poafd_run(fam, sig.scaled(alpha), 4, cfg)
        assert [(a.param, a.order) for a in scaled.atoms] == [(a.param, a.order) for a in dec.atoms]
        for a, b in zip(scaled.atoms, dec.atoms):
            if a.order > 1:
                np.testing.assert_allclose(a.direction, b.direction, rtol=0, atol=1e-12)
        np.testing.assert_allclose(scaled.fourier_coeffs, alpha * dec.fourier_coeffs, rtol=1e-9)


def test_convolution_delta_below_one_refused():
    from poafd.kernels import ConvolutionProfile, KernelError, QuadratureBox

    prof = ConvolutionProfile(lambda x: 0.5 * (1 + np.abs(x[..., 0])) ** -2.0, 0.5, 1.0)
    fam = KernelFamily.convolution(prof, 1, QuadratureBox(40.0, 400))
    sig = KernelCombination([(1.0, Atom(ParamPoint.half(1.0, 0.0)))])
    with pytest.raises(KernelError):
        poafd_run(fam, sig, 1, SMALL)


def test_box_boundary_warning():
    from poafd.engine import BoxBoundaryWarning

    sig = KernelCombination([(1.0, Atom(ParamPoint.half(8.0, 0.0)))])
    with pytest.warns(BoxBoundaryWarning):
        maximal_select(P1, sig, _empty(P1, sig), SMALL)


# -- decomposition structure -------------------------------------------------


def test_is_consecutive():
    p, q = ParamPoint.half(1.0, 0.0), ParamPoint.half(2.0, 0.0)
    u = (1.0, 0.0)
    assert is_consecutive([Atom(p), Atom(q), Atom(p, 2, u), Atom(p, 3, u)])
    assert not is_consecutive([Atom(p, 2, u)])
    assert not is_consecutive([Atom(p), Atom(p, 3, u)])
    assert not is_consecutive([Atom(p), Atom(p)])


def test_json_round_trip(rng):
    sig = random_signal(H2, rng, 3, multiples=True, t=(0.3, 4.0), x=2.5)
    dec = poafd_run(H2, sig, 4, SelectionConfig(t_max=5.0, x_max=3.0, grid_steps=(10, 12, 12), starts=1))
    back = Decomposition.from_json(dec.to_json())
    assert back.family == dec.family
    assert back.atoms == dec.atoms
    assert np.array_equal(back.gs_matrix, dec.gs_matrix)
    assert np.array_equal(back.fourier_coeffs, dec.fourier_coeffs)
    assert np.array_equal(back.remainder_energies, dec.remainder_energies)
    assert back.signal_norm == dec.signal_norm
    assert back.to_json() == dec.to_json()


def test_json_schema_checked():
    data = json.loads(Decomposition(P1).to_json())
    data["schema"] = 99
    with pytest.raises(ValueError):
        Decomposition.from_dict(data)


def test_energy_identity_from_signal(rng):
    for fam in (P1, H2):
        cfg = SelectionConfig(t_max=5.0, x_max=3.0, grid_steps=(20,) * (fam.d + 1), starts=1)
        sig = random_signal(fam, rng, 3, multiples=True, t=(0.3, 4.0), x=2.5)
        dec = poafd_run(fam, sig, 4, cfg)
        assert dec.remainder_energy(sig) == pytest.approx(dec.remainder_energies[-1], abs=1e-10)
        assert dec.energy_defect(sig) <= 1e-10
        assert np.all(np.diff(dec.remainder_energies) <= 0)
        assert np.all(dec.remainder_energies >= -1e-10)


def test_truncated(rng):
    sig = random_signal(P1, rng, 4, t=(0.3, 4.0), x=2.5)
    dec = poafd_run(P1, sig, 4, SMALL)
    two = dec.truncated(2)
    assert two.atoms == dec.atoms[:2]
    assert relative_error(two, 2) == relative_error(dec, 2)
    with pytest.raises(IndexError):
        dec.truncated(len(dec) + 1)
