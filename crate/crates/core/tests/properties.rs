use hybrid_irb::clifford::{all_elements, CliffordElement};
use hybrid_irb::linalg::{self, Matrix, C64};
use hybrid_irb::noise::{self, NoiseModel, QuantumChannel, SequenceSpec, TargetGate};
use hybrid_irb::pauli::{
    chi_vector, chi_vector_pure, conditional_letter_probabilities, pauli_matrix,
    sampling_distribution, Pauli, PauliLabel,
};
use hybrid_irb::statistics::{
    chebyshev_l, fit_decay_points, hoeffding_shots, FidelityEstimate,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval_matches_purity(seed in any::<u64>(), n in 1usize..=3) {
        let rho = linalg::random_mixed_state(linalg::dim_for(n), &mut rng(seed));
        let chi = chi_vector(&rho, n).unwrap();
        let purity = linalg::trace(&(&rho * &rho)).re;
        prop_assert!((chi.purity() - purity).abs() < 1e-12);
    }

    #[test]
    fn pure_states_give_a_distribution(seed in any::<u64>(), n in 1usize..=3) {
        let psi = linalg::random_pure_state(linalg::dim_for(n), &mut rng(seed));
        let dist = sampling_distribution(&chi_vector_pure(&psi, n).unwrap()).unwrap();
        let total: f64 = dist.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(dist.probabilities().iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn chi_matches_dense_trace(seed in any::<u64>(), n in 1usize..=2) {
        // oracle: Tr[P ρ]/√d with explicit Kronecker-product Paulis
        let d = linalg::dim_for(n);
        let rho = linalg::random_mixed_state(d, &mut rng(seed));
        let chi = chi_vector(&rho, n).unwrap();
        let single = |c: char| -> Matrix {
            let (o, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
            let j = C64::new(0.0, 1.0);
            match c {
                'I' => Matrix::from_row_slice(2, 2, &[i, o, o, i]),
                'X' => Matrix::from_row_slice(2, 2, &[o, i, i, o]),
                'Y' => Matrix::from_row_slice(2, 2, &[o, -j, j, o]),
                _ => Matrix::from_row_slice(2, 2, &[i, o, o, -i]),
            }
        };
        for k in 0..PauliLabel::count(n) {
            let word = PauliLabel(k).word(n);
            let p = word
                .chars()
                .map(single)
                .reduce(|a, b| linalg::kron(&a, &b))
                .unwrap();
            let expected = linalg::trace(&(p * &rho)).re / (d as f64).sqrt();
            prop_assert!((chi.get(PauliLabel(k)) - expected).abs() < 1e-12, "{word}");
        }
    }

    #[test]
    fn conditional_chain_reproduces_direct(seed in any::<u64>(), n in 1usize..=3) {
        let psi = linalg::random_pure_state(linalg::dim_for(n), &mut rng(seed));
        let direct = sampling_distribution(&chi_vector_pure(&psi, n).unwrap()).unwrap();
        for k in 0..PauliLabel::count(n) {
            let label = PauliLabel(k);
            let mut prefix: Vec<Pauli> = Vec::new();
            let mut prob = 1.0;
            for q in 0..n {
                prob *= conditional_letter_probabilities(&psi, n, &prefix)[label.letter(q).digit()];
                prefix.push(label.letter(q));
            }
            prop_assert!((prob - direct.probability(label)).abs() < 1e-12);
        }
    }

    #[test]
    fn clifford_inverse_and_matrix(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let a = CliffordElement::random(n, &mut r).unwrap();
        let b = CliffordElement::random(n, &mut r).unwrap();
        prop_assert!(a.compose(&a.inverse()).unwrap().is_identity());
        let ua = a.to_unitary();
        prop_assert!(linalg::is_unitary(&ua, 1e-10));
        // compose(a, b) applies b first
        let uab = a.compose(&b).unwrap().to_unitary();
        prop_assert!(linalg::phase_insensitive_distance(&uab, &(&ua * b.to_unitary())) < 1e-10);
        prop_assert_eq!(CliffordElement::from_unitary(&ua, n), Some(a.clone()));
    }

    #[test]
    fn conjugation_matches_dense(seed in any::<u64>(), n in 1usize..=3) {
        let c = CliffordElement::random(n, &mut rng(seed)).unwrap();
        let u = c.to_unitary();
        for k in 0..PauliLabel::count(n) {
            let (negative, image) = c.conjugate_label(PauliLabel(k));
            let lhs = &u * pauli_matrix(PauliLabel(k), n) * u.adjoint();
            let sign = if negative { -1.0 } else { 1.0 };
            let rhs = pauli_matrix(image, n) * C64::new(sign, 0.0);
            prop_assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn channels_preserve_states(seed in any::<u64>(), rank in 1usize..=4) {
        let mut r = rng(seed);
        let ch = QuantumChannel::random(4, rank, &mut r);
        let rho = linalg::random_mixed_state(4, &mut r);
        let out = ch.apply(&rho);
        prop_assert!((linalg::trace(&out).re - 1.0).abs() < 1e-12);
        prop_assert!(linalg::hermitian_eigenvalues(&out)[0] > -1e-12);
    }

    #[test]
    fn twirl_is_depolarizing(seed in any::<u64>(), rank in 1usize..=4) {
        let group = all_elements(1).unwrap();
        let r = QuantumChannel::random(2, rank, &mut rng(seed)).twirl(&group).pauli_transfer_matrix();
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    prop_assert!(r[(a, b)].abs() < 1e-10);
                }
            }
        }
        prop_assert!((r[(1, 1)] - r[(2, 2)]).abs() < 1e-10);
        prop_assert!((r[(1, 1)] - r[(3, 3)]).abs() < 1e-10);
    }

    #[test]
    fn budgets_are_ceilings(alpha in 0.01f64..1.0, delta in 0.01f64..0.99, chi2 in 1e-4f64..0.5) {
        let l = chebyshev_l(alpha, delta).unwrap();
        let raw = 8.0 / (alpha * alpha * delta);
        prop_assert!(l as f64 >= raw && (l as f64) < raw + 1.0);
        let n = hoeffding_shots(chi2.sqrt(), 2, l, alpha, delta).unwrap();
        let raw = 8.0 * (4.0 / delta).ln() / (2.0 * l as f64 * alpha * alpha * chi2);
        prop_assert!(n >= 1);
        prop_assert!(n as f64 >= raw * (1.0 - 1e-12) && (n as f64) < raw.max(1.0) + 1.0);
    }

    #[test]
    fn interval_is_ordered(r in 0.0f64..0.05, i in 0.0f64..0.05) {
        let e = FidelityEstimate::from_error_rates(r, i);
        prop_assert!(0.0 <= e.eps_lower);
        prop_assert!(e.eps_lower <= e.eps_point + 1e-18);
        prop_assert!(e.eps_point <= e.eps_upper + 1e-18);
    }

    #[test]
    fn fit_recovers_exact_decay(a in 0.2f64..0.8, p in 0.9f64..0.999, b in 0.1f64..0.6) {
        let pts: Vec<(f64, f64)> = [1, 3, 7, 15, 30, 60, 120, 250]
            .iter()
            .map(|&y| (y as f64, a * p.powi(y) + b))
            .collect();
        let fit = fit_decay_points(&pts, 3).unwrap();
        prop_assert!((fit.effective_decay().unwrap() - p).abs() < 1e-6, "{:?}", fit);
    }
}

#[test]
fn random_cliffords_are_uniform() {
    let group = all_elements(1).unwrap();
    let mut counts = vec![0usize; group.len()];
    let mut r = rng(99);
    let draws = 24_000;
    for _ in 0..draws {
        let c = CliffordElement::random(1, &mut r).unwrap();
        counts[group.iter().position(|g| *g == c).unwrap()] += 1;
    }
    let expected = draws as f64 / 24.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 23 degrees of freedom; the 99.9% quantile is about 49.7
    assert!(chi2 < 49.7, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn depolarizing_layers_compose_multiplicatively() {
    // p_{C×V} = p_C · p_V for gate-independent depolarizing noise
    let (pc, pv) = (0.995, 0.97);
    let target = TargetGate::t_gate(1).unwrap();
    let noise = NoiseModel::gate_independent(QuantumChannel::depolarizing(pc, 2).unwrap())
        .with_target(QuantumChannel::depolarizing(pv, 2).unwrap());
    let psi0 = linalg::basis_state(2, 0);
    let mut r = rng(5);
    for y in [1usize, 4, 9] {
        let seq = SequenceSpec::random_interleaved(1, y, &target, &mut r).unwrap();
        let overlap = hybrid_irb::protocols::exact_sequence_overlap(&seq, &noise, &psi0).unwrap();
        let expected = 0.5 * (pc * pv).powi(y as i32) + 0.5;
        assert!((overlap - expected).abs() < 1e-12);
        let ideal = noise::ideal_state(&psi0, &seq).unwrap();
        assert!((ideal.norm() - 1.0).abs() < 1e-12);
    }
}
