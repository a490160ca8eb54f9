import math

import numpy as np
import pytest

from conftest import kron_dense, random_lcu
from sossa import operators as ops
from sossa import sosopt
from sossa import syk


def lcu(*pairs, n=None):
    n = n or len(pairs[0][1])
    return ops.LcuHamiltonian.from_terms(
        n, [ops.PauliTerm(c, w) for c, w in pairs]
    )


class TestBasis:
    def test_identity_must_lead(self):
        with pytest.raises(ops.ValidationError):
            sosopt.SosBasis.from_pauli_words(1, ["Z", "I"])

    def test_duplicates_rejected(self):
        with pytest.raises(ops.ValidationError):
            sosopt.SosBasis.from_pauli_words(1, ["I", "Z", "Z"])

    def test_pauli_up_to_degree_counts(self):
        basis = sosopt.SosBasis.pauli_up_to_degree(2, 2)
        assert basis.size == 16  # 1 + 6 weight-1 + 9 weight-2
        assert basis.elements[0][0] == (0, 0)

    def test_majorana_degree2_dimensions(self):
        basis = sosopt.SosBasis.majorana_degree2(6)
        assert basis.size == 1 + 6 + 15


class TestBuildSdp:
    def test_minus_z_toy_structure(self):
        # one symmetric-matrix equality (the Z coefficient); the off-diagonal
        # symmetry pairing is carried by the representer itself
        prob = sosopt.build_sos_sdp(
            lcu((-1.0, "Z")), sosopt.SosBasis.from_pauli_words(1, ["I", "Z"])
        )
        assert prob.gram_dim == 2
        assert len(prob.constraints) == 1
        c = prob.constraints[0]
        assert c.target == -1.0
        assert sorted(zip(c.rows.tolist(), c.cols.tolist())) == [(0, 1), (1, 0)]

    def test_zero_hamiltonian_feasible_at_zero(self):
        prob = sosopt.build_sos_sdp(
            ops.LcuHamiltonian(1, {}), sosopt.SosBasis.from_pauli_words(1, ["I", "X"])
        )
        cert = sosopt.solve_sdp(prob)
        assert cert.beta == pytest.approx(0.0, abs=1e-8)
        assert np.max(np.abs(cert.gram)) <= 1e-8

    def test_constraint_count_matches_bruteforce_expander(self):
        # independent oracle: enumerate distinct product monomials densely
        h = lcu((1.0, "XX"), (1.0, "ZZ"))
        basis = sosopt.SosBasis.pauli_up_to_degree(2, 2)
        prob = sosopt.build_sos_sdp(h, basis)

        words = {}
        for _, wu in enumerate(basis.elements):
            for _, wv in enumerate(basis.elements):
                mu = ops.word_dense(wu[0], 2)
                mv = ops.word_dense(wv[0], 2)
                prod = mu @ mv
                # identify the canonical word by testing against all 16 words
                for letters in (
                    a + b for a in "IXYZ" for b in "IXYZ"
                ):
                    ref = kron_dense(letters)
                    overlap = np.trace(ref.conj().T @ prod) / 4.0
                    if abs(overlap) > 1e-9 and letters != "II":
                        words[letters] = True
        # one real equation per reachable monomial whose representer is
        # nonzero on symmetric matrices; complex targets would add a second
        assert len(prob.constraints) == len(words)

    def test_unexpressible_hamiltonian_rejected(self):
        h = lcu((1.0, "XX"))
        basis = sosopt.SosBasis.from_pauli_words(2, ["II", "XI"])
        with pytest.raises(ops.ValidationError):
            sosopt.build_sos_sdp(h, basis)


class TestSolve:
    def test_minus_z_exact(self):
        h = lcu((-1.0, "Z"))
        cert = sosopt.solve_sdp(
            sosopt.build_sos_sdp(h, sosopt.SosBasis.from_pauli_words(1, ["I", "Z"]))
        )
        assert cert.converged
        assert cert.beta == pytest.approx(1.0, abs=1e-6)
        gens = sosopt.extract_generators(cert)
        recon = gens.reconstruction_dense()
        assert np.allclose(recon, np.diag([0.0, 2.0]), atol=1e-6)

    def test_x_by_symmetry(self):
        h = lcu((1.0, "X"))
        cert = sosopt.solve_sdp(
            sosopt.build_sos_sdp(h, sosopt.SosBasis.from_pauli_words(1, ["I", "X"]))
        )
        assert cert.beta == pytest.approx(1.0, abs=1e-6)

    def test_bisection_cross_checks_admm(self):
        h = lcu((-1.0, "Z"))
        prob = sosopt.build_sos_sdp(h, sosopt.SosBasis.from_pauli_words(1, ["I", "Z"]))
        a = sosopt.solve_sdp(prob, method="admm")
        b = sosopt.solve_sdp(prob, method="bisect")
        assert a.beta == pytest.approx(b.beta, abs=1e-5)

    def test_beta_equals_trace(self):
        rng = np.random.default_rng(0)
        h = random_lcu(rng, 2, 3)
        basis = sosopt.SosBasis.pauli_up_to_degree(2, 2)
        cert = sosopt.solve_sdp(sosopt.build_sos_sdp(h, basis))
        assert cert.beta == pytest.approx(float(np.trace(cert.gram)), abs=1e-9)

    def test_soundness_and_termwise_dominance(self):
        # basis contains {1, sigma_j}: the per-term projector certificate is
        # feasible, so the optimum cannot exceed the l1-norm
        rng = np.random.default_rng(42)
        for trial in range(4):
            h = random_lcu(rng, 3, 5)
            words = ["III"] + [t.letters for t in h.term_list()]
            basis = sosopt.SosBasis.from_pauli_words(3, list(dict.fromkeys(words)))
            cert = sosopt.solve_sdp(sosopt.build_sos_sdp(h, basis))
            assert cert.converged
            e0 = float(np.linalg.eigvalsh(h.to_dense().entries)[0])
            assert -cert.beta <= e0 + 1e-6 * max(1.0, h.lambda_lcu)
            assert cert.beta <= h.lambda_lcu + 1e-6

    def test_syk_soundness_over_seeds(self):
        for seed in range(3):
            inst = syk.generate_syk(8, seed)
            cert, gens, _ = syk.certify_instance(inst)
            assert cert.converged and cert.residual <= 1e-7
            e0 = syk.ground_energy(inst)
            assert -cert.beta <= e0 + 1e-9

    def test_syk_beta_per_mode_band(self):
        # the optimal shift grows linearly in the mode count; the per-mode
        # constant stays in a narrow band across disorder
        ratios = []
        for seed in range(20):
            inst = syk.generate_syk(8, seed)
            cert, _, _ = syk.certify_instance(inst)
            ratios.append(cert.beta / 8.0)
        assert max(ratios) / min(ratios) <= 2.0
        assert 0.05 <= min(ratios) and max(ratios) <= 1.0

    def test_slack_bounded_by_modes(self):
        inst = syk.generate_syk(12, 0)
        cert, gens, _ = syk.certify_instance(inst)
        chk = sosopt.verify_certificate(syk.syk_hamiltonian(inst), gens, cert.beta)
        assert -1e-7 <= chk.slack <= 1.0 * 12  # slack = delta, O(N)


class TestExtraction:
    def test_diagonal_gram(self):
        basis = sosopt.SosBasis.from_pauli_words(1, ["I", "Z"])
        cert = sosopt.SosCertificate(
            basis, np.diag([4.0, 0.0]), 4.0, 0.0, 1e-7, True, 0, 0.0
        )
        gens = sosopt.extract_generators(cert)
        assert gens.rank == 1
        assert np.allclose(np.abs(gens.vectors), [[2.0, 0.0]])

    def test_identity_gram_three_generators(self):
        basis = sosopt.SosBasis.from_pauli_words(2, ["II", "XI", "ZI"])
        cert = sosopt.SosCertificate(
            basis, np.eye(3), 3.0, 0.0, 1e-7, True, 0, 0.0
        )
        gens = sosopt.extract_generators(cert)
        assert gens.rank == 3
        assert np.allclose(np.linalg.norm(gens.vectors, axis=1), 1.0)

    def test_rank_bounded_by_dimension(self):
        inst = syk.generate_syk(8, 1)
        cert, gens, _ = syk.certify_instance(inst)
        assert gens.rank <= cert.basis.size

    def test_syk_reconstruction_tight(self):
        inst = syk.generate_syk(8, 2)
        cert, gens, _ = syk.certify_instance(inst)
        chk = sosopt.verify_certificate(syk.syk_hamiltonian(inst), gens, cert.beta)
        assert chk.residual_rel_fro <= 1e-6
        assert chk.valid


class TestVerify:
    def test_exact_toy_certificate(self):
        h = lcu((-1.0, "Z"))
        cert = sosopt.solve_sdp(
            sosopt.build_sos_sdp(h, sosopt.SosBasis.from_pauli_words(1, ["I", "Z"]))
        )
        gens = sosopt.extract_generators(cert)
        chk = sosopt.verify_certificate(h, gens, cert.beta)
        assert chk.residual_rel_fro <= 1e-7
        assert abs(chk.slack) <= 1e-6

    def test_perturbed_gram_detected(self):
        h = lcu((-1.0, "Z"))
        prob = sosopt.build_sos_sdp(h, sosopt.SosBasis.from_pauli_words(1, ["I", "Z"]))
        cert = sosopt.solve_sdp(prob)
        rng = np.random.default_rng(1)
        noise = 1e-3 * rng.standard_normal(cert.gram.shape)
        noisy = cert.gram + (noise + noise.T) / 2.0
        vals, vecs = np.linalg.eigh(noisy)
        noisy_psd = (vecs * np.clip(vals, 0, None)) @ vecs.T
        bad = sosopt.SosCertificate(
            cert.basis, noisy_psd, float(np.trace(noisy_psd)),
            prob.constraint_residual(noisy_psd), 1e-7, False, 0, 0.0,
        )
        gens = sosopt.extract_generators(bad, rank_tol=1e-12)
        chk = sosopt.verify_certificate(h, gens, bad.beta)
        assert chk.residual_rel_fro > 1e-4


class TestMajorana2Families:
    def test_k_and_j_zero_gives_zero(self):
        prob = sosopt.build_majorana2_sdp(np.zeros((4, 4)), {}, 4)
        cert = sosopt.solve_sdp(prob)
        assert cert.beta == pytest.approx(0.0, abs=1e-8)

    def test_constraint_families_present(self):
        # degree-1 and degree-3 targets vanish; degree-2 carries K and
        # degree-4 carries J
        K = np.zeros((4, 4))
        K[0, 1], K[1, 0] = 0.3, -0.3
        prob = sosopt.build_majorana2_sdp(K, {(1, 2, 3, 4): 1.0}, 4)
        by_degree = {}
        for c in prob.constraints:
            key = c.label.split(":")[0]
            degree = len([x for x in key.strip("()").split(",") if x.strip()])
            by_degree.setdefault(degree, []).append(c)
        assert set(by_degree) == {1, 2, 3, 4}
        deg2_targets = sorted(abs(c.target) for c in by_degree[2] if c.target)
        assert deg2_targets[-1] == pytest.approx(0.6)  # 2 K_12
        deg4_targets = [c.target for c in by_degree[4] if c.target]
        assert deg4_targets == [-1.0]

    def test_single_coupling_tight_bound(self):
        inst_h = ops.MajoranaPolynomial(4, {(1, 2, 3, 4): 1.0})
        prob = sosopt.build_sos_sdp(inst_h, sosopt.SosBasis.majorana_degree2(4))
        cert = sosopt.solve_sdp(prob)
        e0 = float(np.linalg.eigvalsh(inst_h.to_dense().entries)[0])
        assert e0 == pytest.approx(-1.0, abs=1e-12)
        assert -cert.beta <= e0 + 1e-7
        assert cert.beta == pytest.approx(1.0, abs=1e-5)

    def test_quadratic_hamiltonian_with_k(self):
        # H = 2i K_12 g1 g2 has spectrum +-2K_12; the degree-2 program is
        # exact on quadratic Hamiltonians
        K = np.zeros((4, 4))
        K[0, 1], K[1, 0] = 0.5, -0.5
        prob = sosopt.build_majorana2_sdp(K, {}, 4)
        cert = sosopt.solve_sdp(prob)
        poly = ops.MajoranaPolynomial(4, {(1, 2): 1.0j})
        e0 = float(np.linalg.eigvalsh(poly.to_dense().entries)[0])
        assert -cert.beta <= e0 + 1e-6
        assert cert.beta == pytest.approx(-e0, abs=1e-5)

    def test_antisymmetry_required(self):
        with pytest.raises(ops.ValidationError):
            sosopt.build_majorana2_sdp(np.eye(4), {}, 4)


class TestDualNormBound:
    def test_zero(self):
        assert sosopt.dual_norm_bound(np.zeros((6, 6))) == 0.0

    def test_scaled_identity(self):
        m = 6
        assert sosopt.dual_norm_bound(np.eye(m) / m) == pytest.approx(1.0)

    def test_non_square_rejected(self):
        with pytest.raises(ops.ValidationError):
            sosopt.dual_norm_bound(np.zeros((2, 3)))

    def test_single_coupling_norm(self):
        inst = syk.generate_syk(8, 0)
        single = syk.SykInstance(
            8, 0, {k: (1.0 if k == (1, 2, 3, 4) else 0.0) for k in inst.couplings}
        )
        norm, bound = syk.j_matrix_norm(single)
        assert norm == pytest.approx(1.0 / math.sqrt(70.0), rel=1e-12)
        assert bound == pytest.approx(28.0 / math.sqrt(70.0), rel=1e-12)
