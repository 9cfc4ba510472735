use nalgebra::DMatrix;
use proptest::prelude::*;
use replica_tn::commutant::*;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn basis_cases() -> impl Strategy<Value = (CommutantBasis, usize)> {
    prop_oneof![
        (1usize..=4, 2usize..=4).prop_map(|(k, d)| (symmetric_basis(k).unwrap(), d)),
        (1usize..=3, 2usize..=3).prop_map(|(k, d)| (brauer_basis(k).unwrap(), d)),
        (2usize..=4).prop_map(|d| (clifford_basis(2, d).unwrap(), d)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weingarten_is_a_generalised_inverse((basis, d) in basis_cases()) {
        for q in [d, d * d] {
            let g = gram_matrix(&basis, q).unwrap().entries;
            let w = weingarten_matrix(&basis, q).unwrap().entries;
            let scale = g.abs().max();
            prop_assert!((&g * &w * &g - &g).abs().max() <= 1e-9 * scale);
            prop_assert!((&w * &g * &w - &w).abs().max() <= 1e-9 * w.abs().max().max(1e-300));
        }
    }

    #[test]
    fn loop_counting_matches_explicit_vectors((basis, d) in basis_cases()) {
        prop_assume!(d.pow(2 * basis.k as u32) <= 1 << 16);
        let g = gram_matrix(&basis, d).unwrap().entries;
        let vs: Vec<Vec<f64>> = (0..basis.len()).map(|i| element_vector(&basis, i, d).unwrap()).collect();
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                prop_assert!((g[(i, j)] - dot(&vs[i], &vs[j])).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn permutation_group_laws(k in 1usize..=5, a in 0usize..120, b in 0usize..120) {
        let all = Permutation::all(k);
        let (p, q) = (&all[a % all.len()], &all[b % all.len()]);
        prop_assert!(p.compose(&p.inverse()).is_identity());
        prop_assert_eq!(p.compose(q).inverse(), q.inverse().compose(&p.inverse()));
        prop_assert_eq!(cycle_count(p), cycle_count(&p.inverse()));
    }

    #[test]
    fn gram_is_symmetric_with_dominant_diagonal((basis, d) in basis_cases()) {
        let g = gram_matrix(&basis, d).unwrap().entries;
        prop_assert!((&g - g.transpose()).abs().max() < 1e-12);
        let top = (d as f64).powi(basis.k as i32);
        for i in 0..basis.len() {
            if !matches!(basis.elements[i], Element::Q3(_)) {
                prop_assert!((g[(i, i)] - top).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn basis_sizes() {
    let sizes: Vec<usize> = (1..=5).map(|k| symmetric_basis(k).unwrap().len()).collect();
    assert_eq!(sizes, vec![1, 2, 6, 24, 120]);
    let sizes: Vec<usize> = (1..=4).map(|k| brauer_basis(k).unwrap().len()).collect();
    assert_eq!(sizes, vec![1, 3, 15, 105]);
    assert_eq!(clifford_basis(3, 3).unwrap().len(), 8);
    assert!(symmetric_basis(6).is_err());
    assert!(clifford_basis(3, 2).is_err());
}

#[test]
fn identity_comes_first() {
    for b in [symmetric_basis(3).unwrap(), clifford_basis(3, 3).unwrap()] {
        assert_eq!(b.elements[0], Element::Perm(Permutation::identity(3)));
    }
    let id = BrauerDiagram::from_permutation(&Permutation::identity(3));
    assert_eq!(brauer_basis(3).unwrap().elements[0], Element::Diagram(id));
}

#[test]
fn s2_gram_and_weingarten() {
    let b = symmetric_basis(2).unwrap();
    assert_eq!(gram_matrix(&b, 2).unwrap().entries, DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 4.0]));
    let w = weingarten_matrix(&b, 4).unwrap().entries;
    let expect = DMatrix::from_row_slice(2, 2, &[1.0 / 15.0, -1.0 / 60.0, -1.0 / 60.0, 1.0 / 15.0]);
    assert!((w - expect).abs().max() < 1e-15);
}

#[test]
fn brauer_gram_at_k2() {
    // identity, swap, and the cup-cap diagram
    let b = brauer_basis(2).unwrap();
    let q = 3.0;
    let g = gram_matrix(&b, 3).unwrap().entries;
    let expect = DMatrix::from_row_slice(3, 3, &[q * q, q, q, q, q * q, q, q, q, q * q]);
    assert!((g - expect).abs().max() < 1e-12);
}

#[test]
fn irrep_dimensions_and_identities() {
    for (k, d, red) in [(2, 2, 2), (3, 2, 5), (4, 2, 14), (4, 3, 23), (5, 2, 42)] {
        let b = symmetric_basis(k).unwrap();
        let g = gram_matrix(&b, d).unwrap();
        let p = irrep_projector(&g);
        assert_eq!(p.d_red(), red, "k={k} d={d}");
        let ppt = &p.p * p.p.transpose();
        assert!((ppt - DMatrix::identity(red, red)).abs().max() < 1e-10);
        let ptp = p.p.transpose() * &p.p;
        let proj = pseudo_inverse(&g.entries) * &g.entries;
        assert!((ptp - proj).abs().max() < 1e-10);
    }
}

#[test]
fn reduced_boundary_round_trip() {
    let b = symmetric_basis(4).unwrap();
    let g = gram_matrix(&b, 2).unwrap();
    let p = irrep_projector(&g);
    let v: Vec<f64> = (0..24).map(|i| (i as f64 * 0.37).sin()).collect();
    let red = irrep_reduce_boundary(&v, &p).unwrap();
    let back = p.p.transpose() * nalgebra::DVector::from_vec(red);
    let expect = pseudo_inverse(&g.entries) * &g.entries * nalgebra::DVector::from_vec(v);
    assert!((back - expect).abs().max() < 1e-10);
}

#[test]
fn clifford_qutrit_gram_uses_explicit_vectors() {
    let b = clifford_basis(3, 3).unwrap();
    let g = gram_matrix(&b, 3).unwrap().entries;
    let g9 = gram_matrix(&b, 9).unwrap().entries;
    assert!((g9 - g.map(|x| x * x)).abs().max() < 1e-9);
    assert!(gram_matrix(&b, 4).is_err());
    let w = weingarten_matrix(&b, 3).unwrap().entries;
    assert!((&g * w * &g - &g).abs().max() < 1e-9);
}

#[test]
fn matrix_csv_round_trip() {
    let b = symmetric_basis(3).unwrap();
    let g = gram_matrix(&b, 2).unwrap().entries;
    let mut buf = Vec::new();
    write_matrix_csv(&g, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let parsed: Vec<f64> = text.lines().flat_map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap())).collect();
    assert_eq!(parsed.len(), 36);
    assert_eq!(parsed, g.transpose().iter().copied().collect::<Vec<_>>());
}
