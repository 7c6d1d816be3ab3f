"""Unit tests for Gram certificates, dilation, correction and the solver."""

import numpy as np
import pytest

from mufact import (
    GramCertificate,
    MixedUnitaryEnsemble,
    MufactError,
    NormTooLarge,
    NotAFactorisation,
    NotBlockDiagonal,
    NotUnitary,
    ShapeMismatch,
    UnitaryTuple,
    UnitaryTupleEnsemble,
    correction_pipeline,
    dist_upper_bound,
    gram_matrix,
    halmos_dilate,
    lift_schur,
    membership_solve,
    mu_ensemble_from_tuples,
    random_haar_unitary,
    random_tuple_ensemble,
    rng_from_seed,
    to_blocks,
    tuples_from_ensemble,
    verify_certificate,
)


# ---------------------------------------------------------------------------
# Gram matrices


def test_gram_of_phases():
    g = gram_matrix(np.array([[[1.0]], [[1.0j]]]))
    assert np.allclose(g, [[1.0, 1.0j], [-1.0j, 1.0]], atol=1e-15)


def test_gram_of_shift_powers_is_identity():
    s = np.roll(np.eye(3), 1, axis=0)
    tup = np.stack([np.linalg.matrix_power(s, n).astype(complex) for n in range(3)])
    assert np.allclose(gram_matrix(tup), np.eye(3), atol=1e-14)


def test_gram_rejects_bad_shapes():
    with pytest.raises(ShapeMismatch):
        gram_matrix(np.zeros((2, 2)))


def test_tuple_check_rejects_non_unitary():
    with pytest.raises(NotUnitary):
        UnitaryTuple(np.zeros((2, 3, 3))).check()


def test_ensemble_gram_average_and_check():
    ens = random_tuple_ensemble(3, 2, 4, rng_from_seed(31))
    manual = sum(
        w * gram_matrix(ens.tuples[m]) for m, w in enumerate(ens.weights)
    )
    assert np.allclose(ens.gram_average(), manual, atol=1e-14)
    with pytest.raises(MufactError):
        UnitaryTupleEnsemble(ens.weights * 0.9, ens.tuples).check()


# ---------------------------------------------------------------------------
# certificates


def test_certificate_build_and_verify():
    ens = random_tuple_ensemble(3, 1, 2, rng_from_seed(32))
    cert = GramCertificate.build(ens, ens.gram_average())
    assert cert.residual_fro <= 1e-14
    assert cert.residual_max <= 1e-14
    verify_certificate(cert)


def test_certificate_detects_tampering():
    ens = random_tuple_ensemble(3, 1, 2, rng_from_seed(33))
    cert = GramCertificate.build(ens, ens.gram_average())
    cert.residual_fro += 1e-6
    with pytest.raises(MufactError):
        verify_certificate(cert)


# ---------------------------------------------------------------------------
# the two exact directions


def test_mu_ensemble_realises_lifted_schur():
    ens = random_tuple_ensemble(2, 2, 2, rng_from_seed(34))
    c = ens.gram_average()
    mu = mu_ensemble_from_tuples(ens)
    assert mu.size == ens.size * ens.d ** 4
    # every member is block diagonal on the k x k grid
    for u in mu.unitaries:
        blocks = to_blocks(u, 2, 2).copy()  # to_blocks is a view
        blocks[range(2), range(2)] = 0.0  # keep only off-diagonal blocks
        assert np.abs(blocks).max() == 0.0
    # action agrees with the lifted Schur multiplier on a random input
    rng = rng_from_seed(35)
    x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert np.abs(mu.apply(x) - lift_schur(c, 2, x)).max() <= 1e-12


def test_extract_round_trip():
    ens = random_tuple_ensemble(3, 2, 2, rng_from_seed(36))
    c = ens.gram_average()
    mu = mu_ensemble_from_tuples(ens)
    rec = tuples_from_ensemble(mu, c, 2, 3)
    assert np.abs(rec.gram_average() - c).max() <= 1e-12


def test_extract_rejects_wrong_target():
    ens = random_tuple_ensemble(2, 2, 2, rng_from_seed(37))
    c = ens.gram_average().copy()
    mu = mu_ensemble_from_tuples(ens)
    c[0, 1] += 0.05
    c[1, 0] += 0.05
    with pytest.raises(NotAFactorisation):
        tuples_from_ensemble(mu, c, 2, 2)


def test_extract_rejects_non_block_diagonal_member():
    # a full unitary hiding behind a tiny weight passes the action check at
    # a loose tolerance but still has O(1) off-diagonal blocks
    ens = random_tuple_ensemble(2, 2, 2, rng_from_seed(38))
    c = ens.gram_average()
    mu = mu_ensemble_from_tuples(ens)
    eps = 1e-5
    rogue = random_haar_unitary(4, rng_from_seed(39))
    spiked = MixedUnitaryEnsemble(
        np.concatenate([mu.weights * (1.0 - eps), [eps]]),
        np.concatenate([mu.unitaries, rogue[None]]),
    )
    with pytest.raises(NotBlockDiagonal):
        tuples_from_ensemble(spiked, c, 2, 2, tol=1e-3)


# ---------------------------------------------------------------------------
# Halmos dilation


def test_dilation_frozen_scalar():
    w = halmos_dilate(np.array([[0.5]]))
    b = np.sqrt(0.75)
    assert np.allclose(w, [[0.5, b], [-b, 0.5]], atol=1e-12)


def test_dilation_of_random_contraction():
    rng = rng_from_seed(40)
    z = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    x = 0.8 * z / np.linalg.norm(z, 2)
    w = halmos_dilate(x)
    assert np.linalg.norm(w.conj().T @ w - np.eye(10)) <= 1e-10
    assert np.abs(w[:5, :5] - x).max() == 0.0
    assert np.abs(w[5:, 5:] - x).max() == 0.0


def test_dilation_rescales_marginal_norms_and_rejects_large_ones():
    w = halmos_dilate(np.array([[1.0 + 5e-10]]))
    assert abs(w[0, 0] - 1.0) <= 2e-9
    assert np.linalg.norm(w.conj().T @ w - np.eye(2)) <= 1e-9
    with pytest.raises(NormTooLarge):
        halmos_dilate(np.array([[1.5]]))


# ---------------------------------------------------------------------------
# correction pipeline


def test_correction_exact_input_is_a_fixed_point():
    ens = random_tuple_ensemble(3, 2, 2, rng_from_seed(41))
    c = ens.gram_average()
    phi = mu_ensemble_from_tuples(ens)
    rep = correction_pipeline(c, phi, 0.05, 2)
    assert rep.max_abs_delta <= 1e-9
    assert rep.bound_ok
    assert np.abs(rep.c_tilde - c).max() <= 1e-9
    assert rep.certificate.ensemble.d == 4
    verify_certificate(rep.certificate)


def test_correction_convex_perturbation_obeys_bound():
    rng = rng_from_seed(42)
    t = 0.05
    e0 = random_tuple_ensemble(3, 2, 2, rng)
    e1 = random_tuple_ensemble(3, 2, 2, rng)
    c = (1.0 - t) * e0.gram_average() + t * e1.gram_average()
    rep = correction_pipeline(c, mu_ensemble_from_tuples(e0), 2.0 * t, 2)
    assert rep.max_abs_delta < 4.0 * t
    assert rep.bound_ok
    verify_certificate(rep.certificate)


# ---------------------------------------------------------------------------
# membership search


def test_membership_recovers_planted_target():
    planted = random_tuple_ensemble(3, 1, 2, rng_from_seed(43)).gram_average()
    cert = membership_solve(planted, 1, restarts=6, max_iters=200, tol=1e-8, seed=0)
    assert cert.residual_fro <= 1e-6
    assert cert.ensemble.size <= 10  # default atom budget k^2 + 1, pruned
    verify_certificate(cert)


def test_membership_is_deterministic():
    planted = random_tuple_ensemble(3, 1, 2, rng_from_seed(44)).gram_average()
    a = membership_solve(planted, 1, restarts=3, max_iters=80, tol=1e-8, seed=5)
    b = membership_solve(planted, 1, restarts=3, max_iters=80, tol=1e-8, seed=5)
    assert np.array_equal(a.ensemble.weights, b.ensemble.weights)
    assert np.array_equal(a.ensemble.tuples, b.ensemble.tuples)


def test_membership_parallel_matches_serial(monkeypatch):
    planted = random_tuple_ensemble(3, 1, 2, rng_from_seed(45)).gram_average()
    serial = membership_solve(planted, 1, restarts=4, max_iters=80, tol=1e-8, seed=2)
    monkeypatch.setenv("MUFACT_THREADS", "3")
    parallel = membership_solve(planted, 1, restarts=4, max_iters=80, tol=1e-8, seed=2)
    assert np.array_equal(serial.ensemble.weights, parallel.ensemble.weights)
    assert np.array_equal(serial.ensemble.tuples, parallel.ensemble.tuples)


def test_solver_moves_never_increase_the_misfit():
    from mufact.factorise import _atom_sweep, _gn_polish, _weight_update

    rng = rng_from_seed(60)
    k, d, m_cnt = 3, 2, 4
    target = random_tuple_ensemble(k, d, 2, rng).gram_average()
    atoms = np.stack(
        [[random_haar_unitary(d, rng) for _ in range(k)] for _ in range(m_cnt)]
    )
    p = np.full(m_cnt, 1.0 / m_cnt)
    grams = np.einsum("miab,mjab->mij", np.conj(atoms), atoms) / d

    def misfit(q, g):
        r = np.einsum("m,mij->ij", q, g) - target
        return float(np.vdot(r, r).real)

    f0 = misfit(p, grams)
    p, _ = _weight_update(p, grams, target)
    f1 = misfit(p, grams)
    assert f1 <= f0 + 1e-12
    resid = np.einsum("m,mij->ij", p, grams) - target
    atoms, grams, resid = _atom_sweep(p, atoms, grams, resid)
    f2 = misfit(p, grams)
    assert f2 <= f1 + 1e-12
    f3, _, _ = _gn_polish(p, atoms, target, d, 1e-10)
    assert f3 <= f2 + 1e-12


def test_membership_reports_honest_residual_when_budget_is_too_small():
    # one atom at d = 1 cannot reach the 2x2 identity: the off-diagonal
    # Gram entry always has modulus 1
    cert = membership_solve(np.eye(2), 1, atoms=1, restarts=2, max_iters=50, tol=1e-8)
    assert cert.residual_fro >= 1.0
    verify_certificate(cert)


# ---------------------------------------------------------------------------
# distance bounds


def test_dist_bound_planted_and_monotone_under_doubling():
    planted = random_tuple_ensemble(3, 1, 2, rng_from_seed(46)).gram_average()
    b1 = dist_upper_bound(planted, 1, restarts=6, max_iters=200, tol=1e-8, seed=0)
    b2 = dist_upper_bound(planted, 2, restarts=6, max_iters=200, tol=1e-8, seed=0)
    assert b1.value <= 1e-6
    assert b2.value <= b1.value
    assert b2.certificate.ensemble.d == 2
    verify_certificate(b2.certificate)
    assert b2.cb.lower <= b2.cb.upper
    assert b2.split >= 0.0
