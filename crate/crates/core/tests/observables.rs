use replica_tn::channels::*;
use replica_tn::commutant::*;
use replica_tn::observables::*;
use replica_tn::oracles::*;
use replica_tn::rtn::TruncationParams;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

fn s2() -> CommutantBasis {
    symmetric_basis(2).unwrap()
}

fn trunc() -> TruncationParams {
    TruncationParams::default_for(2)
}

#[test]
fn closed_forms() {
    for dim in [4.0, 16.0, 1e6] {
        assert!(close(haar_ipr(dim, 2), 2.0 / (dim + 1.0), 1e-14));
        assert!(close(orthogonal_ipr_stat(dim, 2), 3.0 / (dim + 2.0), 1e-14));
        assert!(close(haar_ipr(dim, 3), 6.0 / ((dim + 1.0) * (dim + 2.0)), 1e-14));
    }
    for n in 1..6 {
        let dim = 3f64.powi(n as i32);
        assert!(close(clifford_ipr_stat(3, n, 3), 8.0 / ((dim + 1.0) * (dim + 3.0)), 1e-12));
        assert!(close(clifford_ipr_stat(3, n, 2), haar_ipr(dim, 2), 1e-12));
    }
    assert!(close(page_purity(2.0, 2.0), 0.8, 1e-15));
    assert!(close(page_purity(16.0, 256.0), page_purity(256.0, 16.0), 1e-15));
    // ln forms survive dimensions far past f64
    let ln_d = 4096.0 * 2f64.ln();
    assert!(close(ln_haar_ipr(ln_d, 2), 2f64.ln() - ln_d, 1e-12));
    assert!(ln_page_purity(ln_d, ln_d).is_finite());
}

#[test]
fn single_gate_values() {
    let b = s2();
    let ipr = ipr_boundary(&b, 2, 2).unwrap();
    assert!(close(brickwork_average(&b, 2, 2, 1, &ipr, &trunc()).unwrap().value(), 0.4, 1e-12));
    let pur = purity_boundary(&b, 2, 2, 1, 1).unwrap();
    assert!(close(brickwork_average(&b, 2, 2, 1, &pur, &trunc()).unwrap().value(), 0.8, 1e-12));
    let id = identity_choi(2);
    assert!(close(xeb(2, 2, 1, &id, &trunc()).unwrap(), 0.6, 1e-12));
    let clean = ChannelStack::identity(2, 2);
    assert!(close(relative_coherence(2, 2, 1, &clean, &trunc()).unwrap(), 2.5f64.ln(), 1e-12));
}

#[test]
fn ipr_plateau_n12() {
    let b = s2();
    let ipr = ipr_boundary(&b, 2, 12).unwrap();
    let v = brickwork_average(&b, 2, 12, 200, &ipr, &trunc()).unwrap().value();
    assert!(close(v, haar_ipr(4096.0, 2), 1e-9));
}

#[test]
fn xeb_is_rescaled_ipr_for_a_clean_device() {
    let b = s2();
    let n = 8;
    let ipr = ipr_boundary(&b, 2, n).unwrap();
    let id = identity_choi(2);
    for t in [1, 3, 6, 12] {
        let i2 = brickwork_average(&b, 2, n, t, &ipr, &trunc()).unwrap().value();
        let chi = xeb(2, n, t, &id, &trunc()).unwrap();
        assert!(close(chi, 256.0 * i2 - 1.0, 1e-11), "t={t}");
    }
    let wide = TruncationParams { chi_max: 64, ..trunc() };
    let late = xeb(2, 16, 140, &id, &wide).unwrap();
    let dim = 65536.0;
    assert!(close(late, (dim - 1.0) / (dim + 1.0), 1e-9));
}

#[test]
fn identity_stack_is_clean() {
    let b = s2();
    let n = 8;
    for bnd in [ipr_boundary(&b, 2, n).unwrap(), purity_boundary(&b, 2, n, 1, 4).unwrap()] {
        let clean = brickwork_average(&b, 2, n, 7, &bnd, &trunc()).unwrap().value();
        let noisy = noisy_brickwork_average(&b, 2, n, 7, &bnd, &ChannelStack::identity(2, 2), &trunc()).unwrap().value();
        assert!(close(noisy, clean, 1e-12));
    }
}

#[test]
fn full_depolarisation_endpoints() {
    let b = s2();
    let n = 8;
    let dep = depolarising_choi(2, 1.0).unwrap();
    let stack = ChannelStack::uniform(dep.clone(), 2);
    let full = purity_boundary(&b, 2, n, 1, n).unwrap();
    for t in [2, 5] {
        let v = noisy_brickwork_average(&b, 2, n, t, &full, &stack, &trunc()).unwrap().value();
        assert!(close(v, 2f64.powi(-(n as i32)), 1e-10));
        assert!(relative_coherence(2, n, t, &stack, &trunc()).unwrap().abs() < 1e-10);
        assert!(xeb(2, n, t, &dep, &trunc()).unwrap().abs() < 1e-10);
    }
}

#[test]
fn noisy_coherence_decays() {
    let stack = ChannelStack::uniform(depolarising_choi(2, 0.1).unwrap(), 2);
    // past t ~ 50 the curve sits on its roundoff floor near 1e-14
    let c = relative_coherence_sweep(2, 16, 1, 45, &stack, &trunc()).unwrap();
    let late: Vec<f64> = c[20..].iter().map(|x| x.1).collect();
    assert!(late.windows(2).all(|w| w[1] < w[0]));
    assert!(late[late.len() - 1] < 1e-5 * late[0]);
}

#[test]
fn coherent_information_limits() {
    for t in [1, 4, 9] {
        let ic = coherent_information(2, 8, 1, t, 0.0, &trunc(), true).unwrap();
        assert!(close(ic, 1.0, 1e-12), "t={t}: {ic}");
    }
    let noisy = coherent_information_sweep(2, 8, 2, 1, 120, 0.1, &trunc(), true).unwrap();
    assert!(noisy[0].1 > 0.5);
    assert!(close(noisy[119].1, -1.0, 1e-6));
    assert!(coherent_information(2, 8, 5, 3, 0.1, &trunc(), true).is_err());
}

#[test]
fn coherent_purities_match_monte_carlo() {
    let (n, t, p) = (4, 3, 0.1);
    let (tr_b, tr_rb) = coherent_purities_sweep(2, n, 1, t, t, p, &TruncationParams::exact()).unwrap();
    for (obs, tn) in [(McObservable::CoherentB { k_logical: 1 }, &tr_b[0]), (McObservable::CoherentRB { k_logical: 1 }, &tr_rb[0])] {
        let mc = mc_average(Ensemble::Unitary, 2, n, t, &obs, p, 2000, 7).unwrap();
        assert!((mc.mean - tn.value.value()).abs() < 3.0 * mc.std_error, "{obs:?}: {mc:?} vs {}", tn.value.value());
    }
}

#[test]
fn tripartite_boundary_values() {
    let b = symmetric_basis(3).unwrap();
    let eta = Permutation::cyclic(3);
    let d = 2usize;
    let bnd = BoundarySpec::from_sites(&b, d, vec![SiteObservable::Perm(eta.clone()); 2], "cyclic").unwrap();
    for i in 0..b.len() {
        let Element::Perm(s) = &b.elements[i] else { unreachable!() };
        let cycles = cycle_count(&eta.inverse().compose(s));
        assert!(close(bnd.per_site[0][i], (d as f64).powi(cycles as i32), 1e-12));
    }
}
