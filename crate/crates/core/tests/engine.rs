use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use replica_tn::channels::{depolarising_choi, noisy_gram_or_clean, ChannelStack};
use replica_tn::commutant::*;
use replica_tn::observables::{ipr_boundary, purity_boundary, BoundarySpec, Problem};
use replica_tn::oracles::dense_contract;
use replica_tn::rtn::*;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn random_mps(seed: u64, n_pairs: usize, p: usize, m: usize) -> RowMPS {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mat = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
    let pairs: Vec<_> = (0..n_pairs).map(|_| (mat(p, m), mat(m, p))).collect();
    pair_product_mps(&pairs, 0.0)
}

fn ones(n_sites: usize, p: usize) -> Vec<Vec<f64>> {
    vec![vec![1.0; p]; n_sites]
}

fn value(m: &RowMPS, b: &[Vec<f64>]) -> f64 {
    let (x, l) = contract_top(m, b);
    x * l.exp()
}

fn gate_cases() -> impl Strategy<Value = (CommutantBasis, usize)> {
    prop_oneof![
        (2usize..=4, 2usize..=3).prop_map(|(k, d)| (symmetric_basis(k).unwrap(), d)),
        (2usize..=3, 2usize..=3).prop_map(|(k, d)| (brauer_basis(k).unwrap(), d)),
        (2usize..=3).prop_map(|d| (clifford_basis(2, d).unwrap(), d)),
        Just((clifford_basis(3, 3).unwrap(), 3)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn output_legs_are_locked((basis, d) in gate_cases(), p in 0.0f64..1.0) {
        let g = gram_matrix(&basis, d).unwrap();
        let stack = ChannelStack::uniform(depolarising_choi(d, p).unwrap(), basis.k);
        let link = noisy_gram_or_clean(&basis, d, Some(&stack), &g).unwrap();
        let t = dressed_gate(&basis, d, &link, &link).unwrap();
        prop_assert!(t.is_locked());
        let n = basis.len();
        for s1 in 0..n {
            for s2 in (0..n).filter(|&s2| s2 != s1) {
                for c in 0..n * n {
                    prop_assert_eq!(t.get(s1, s2, c / n, c % n), 0.0);
                }
            }
        }
    }

    #[test]
    fn centre_moves_preserve_value(seed in 0u64..1000, moves in proptest::collection::vec(0usize..8, 1..6)) {
        let mut m = random_mps(seed, 4, 3, 3);
        let b = ones(8, 3);
        let v0 = value(&m, &b);
        for c in moves {
            m.move_center(c);
            prop_assert!(rel(value(&m, &b), v0) < 1e-10);
        }
        m.sweep();
        prop_assert!(rel(value(&m, &b), v0) < 1e-10);
    }

    #[test]
    fn smaller_cutoff_never_discards_more(seed in 0u64..1000, lo in 1e-8f64..1e-4, hi in 1e-3f64..1e-1) {
        let b = symmetric_basis(2).unwrap();
        let g = gram_matrix(&b, 2).unwrap();
        let gate = dressed_gate(&b, 2, &g, &g).unwrap();
        let mut m = random_mps(seed, 4, 2, 2);
        let exact = TruncationParams::exact();
        m.apply_layer(&gate, Parity::Even, &exact).unwrap();
        let run = |cutoff: f64| {
            let mut x = m.clone();
            let t = TruncationParams { cutoff, ..exact };
            x.apply_layer(&gate, Parity::Odd, &t).unwrap().discarded_weight
        };
        prop_assert!(run(lo) <= run(hi));
        prop_assert!(run(0.0) <= run(lo));
    }

    #[test]
    fn block_and_dense_splits_agree(seed in 0u64..1000, k in 2usize..=3) {
        let basis = symmetric_basis(k).unwrap();
        let g = gram_matrix(&basis, 2).unwrap();
        let gate = dressed_gate(&basis, 2, &g, &g).unwrap();
        let n = basis.len();
        let m0 = random_mps(seed, 3, n, 2);
        let b = ones(6, n);
        let mut vals = Vec::new();
        for block_svd in [true, false] {
            let t = TruncationParams { block_svd, ..TruncationParams::exact() };
            let mut m = m0.clone();
            for layer in 2..6 {
                m.apply_layer(&gate, Parity::of_layer(layer), &t).unwrap();
            }
            vals.push(value(&m, &b));
        }
        prop_assert!(rel(vals[0], vals[1]) < 1e-10);
    }
}

fn boundaries(basis: &CommutantBasis, d: usize, n: usize) -> Vec<BoundarySpec> {
    vec![ipr_boundary(basis, d, n).unwrap(), purity_boundary(basis, d, n, 1, n / 2).unwrap()]
}

#[test]
fn exact_bond_matches_dense_oracle() {
    let cases: Vec<(CommutantBasis, usize, usize)> = vec![
        (symmetric_basis(2).unwrap(), 2, 8),
        (symmetric_basis(2).unwrap(), 3, 6),
        (symmetric_basis(3).unwrap(), 2, 4),
        (brauer_basis(2).unwrap(), 2, 6),
        (clifford_basis(2, 3).unwrap(), 3, 6),
        (clifford_basis(3, 3).unwrap(), 3, 4),
    ];
    for (basis, d, n) in &cases {
        let (d, n) = (*d, *n);
        let chi = basis.len().pow(n as u32 / 2);
        let trunc = TruncationParams { chi_max: chi, cutoff: 0.0, block_svd: true };
        let stack = ChannelStack::uniform(depolarising_choi(d, 0.15).unwrap(), basis.k);
        for bnd in boundaries(basis, d, n) {
            for st in [None, Some(&stack)] {
                let p = Problem { stack: st, ..Problem::clean(basis, d, n, &bnd) };
                for t in 1..=4 {
                    let mps = p.at(t, &trunc).unwrap().value.value();
                    let dense = dense_contract(basis, d, n, t, &bnd, st, None).unwrap();
                    assert!(rel(mps, dense) < 1e-10, "{:?} d={d} N={n} t={t}: {mps} vs {dense}", basis.ensemble);
                }
            }
        }
    }
}

#[test]
fn bond_one_is_close_to_bond_sixteen_at_k2() {
    let b = symmetric_basis(2).unwrap();
    let bnd = ipr_boundary(&b, 2, 16).unwrap();
    let p = Problem::clean(&b, 2, 16, &bnd);
    let run = |chi_max: usize| p.at(20, &TruncationParams { chi_max, ..TruncationParams::default_for(2) }).unwrap().value.value();
    assert!((run(1) - run(16)).abs() < 1e-6);
}

#[test]
fn deep_long_chains_stay_finite() {
    let b = symmetric_basis(2).unwrap();
    let n = 256;
    let trunc = TruncationParams::default_for(2);
    for bnd in boundaries(&b, 2, n) {
        let r = Problem::clean(&b, 2, n, &bnd).at(100, &trunc).unwrap();
        assert!(r.value.mantissa > 0.0 && r.value.mantissa.is_finite());
        assert!(r.value.ln_abs().is_finite());
        assert!(r.diagnostics.log_scale.is_finite());
    }
    // the IPR plateau 2/(2^N+1) is below the smallest double
    let n = 1100;
    let r = Problem::clean(&b, 2, n, &ipr_boundary(&b, 2, n).unwrap()).at(120, &trunc).unwrap();
    assert_eq!(r.value.value(), 0.0);
    let plateau = 2f64.ln() - (n as f64 * 2f64.ln());
    // default bond leaves a ~1e-5 relative truncation error at this length
    assert!((r.value.ln_abs() - plateau).abs() < 1e-4);
}

#[test]
fn frames_agree() {
    for (basis, d) in [(symmetric_basis(2).unwrap(), 2), (symmetric_basis(3).unwrap(), 2), (symmetric_basis(3).unwrap(), 3)] {
        let n = 6;
        let trunc = TruncationParams { block_svd: false, ..TruncationParams::exact() };
        for bnd in boundaries(&basis, d, n) {
            let raw = Problem::clean(&basis, d, n, &bnd);
            let want = raw.at(5, &trunc).unwrap().value.value();
            for (reduce, metric) in [(true, false), (false, true), (true, true)] {
                let got = Problem { reduce, metric, ..raw }.at(5, &trunc).unwrap().value.value();
                assert!(rel(got, want) < 1e-10, "k={} d={d} reduce={reduce} metric={metric}", basis.k);
            }
        }
    }
}

#[test]
fn clifford_two_copies_match_haar() {
    for d in [2usize, 3] {
        let (c, u) = (clifford_basis(2, d).unwrap(), symmetric_basis(2).unwrap());
        let trunc = TruncationParams::default_for(2);
        for n in [4usize, 8] {
            for (bc, bu) in boundaries(&c, d, n).iter().zip(boundaries(&u, d, n)) {
                let a = Problem::clean(&c, d, n, bc).sweep(1, 10, &trunc).unwrap();
                let b = Problem::clean(&u, d, n, &bu).sweep(1, 10, &trunc).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert!(rel(x.value.value(), y.value.value()) < 1e-10);
                }
            }
        }
    }
}

#[test]
fn sweeps_leave_values_alone() {
    let b = symmetric_basis(2).unwrap();
    let bnd = purity_boundary(&b, 2, 10, 1, 5).unwrap();
    let net = Problem::clean(&b, 2, 10, &bnd).network().unwrap();
    let trunc = TruncationParams::exact();
    let mut plain = Vec::new();
    let mut swept = Vec::new();
    net.evolve(1, 8, &trunc, false, |r| plain.push(r.value.value())).unwrap();
    net.evolve(1, 8, &trunc, true, |r| swept.push(r.value.value())).unwrap();
    for (a, b) in plain.iter().zip(&swept) {
        assert!(rel(*a, *b) < 1e-12);
    }
}

#[test]
fn diagnostics_serialise_as_json_lines() {
    let b = symmetric_basis(2).unwrap();
    let bnd = ipr_boundary(&b, 2, 8).unwrap();
    let runs = Problem::clean(&b, 2, 8, &bnd).sweep(1, 4, &TruncationParams::default_for(2)).unwrap();
    let diags: Vec<_> = runs.iter().map(|r| r.diagnostics.clone()).collect();
    let mut buf = Vec::new();
    write_diagnostics(&diags, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 4);
    let back: LayerDiagnostics = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(back.bond_dims, diags[3].bond_dims);
    assert!((back.log_scale - diags[3].log_scale).abs() < 1e-12);
    assert!(rel(back.discarded_weight, diags[3].discarded_weight) < 1e-12);
}

#[test]
fn odd_chains_are_rejected() {
    let b = symmetric_basis(2).unwrap();
    let ov = InitOverlaps::zero_state(&b, 2, 5).unwrap();
    assert!(matches!(init_mps(5, &b, 2, &ov, true, None), Err(replica_tn::RtnError::Invalid(_))));
}
