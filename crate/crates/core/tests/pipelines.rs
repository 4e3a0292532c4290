//! End-to-end flows across modules through the public API.

use twisted_core::campaign::{random_degree_one, random_matrix, sample, sample_triples};
use twisted_core::polyfactor::{block_swap_word, expand_factors, local_action, mu_matrix, sylvester_swap};
use twisted_core::rmatrix::{check_inverse, check_twisted_ybr, make_trivial_flip, make_trivial_keep};
use twisted_core::theta::factor::chain_product_residual;
use twisted_core::theta::{det_zeros, mu_theta, multiply, theta_local_action, theta_refactor};
use twisted_core::transpositions::{check_relations, make_algebra_map};
use twisted_core::{BraidWord, Factorization, Lattice, SpectrumPartition, ThetaFactor, ThetaSection, C64};

fn square() -> Lattice {
    Lattice::new(C64::new(0.0, 1.0)).unwrap()
}

#[test]
fn block_swap_word_equals_sylvester_swap() {
    let pairs = sample(
        5,
        5,
        |rng| Factorization::new(vec![random_matrix(rng, 2), random_matrix(rng, 2)]),
        |_| true,
    )
    .unwrap();
    for f in pairs {
        let g = local_action(&block_swap_word(2), &f).unwrap();
        let (b1, b2) = sylvester_swap(&f.factors()[0], &f.factors()[1]).unwrap();
        let scale = 1.0 + b1.frobenius_norm().max(b2.frobenius_norm());
        assert!(g.factors()[0].distance(&b1) / scale < 1e-8);
        assert!(g.factors()[1].distance(&b2) / scale < 1e-8);
        // spectra fully exchanged, order kept
        for (a, b) in [(0, 1), (1, 0)] {
            for (x, y) in g.spectra()[a].values().iter().zip(f.spectra()[b].values()) {
                assert!((x - y).norm() < 1e-9 * (1.0 + y.norm()), "{x} vs {y}");
            }
        }
    }
}

#[test]
fn matrix_swap_conserves_sum_and_product() {
    let triples = sample_triples(6, 10, |rng| Ok(random_matrix(rng, 3)), |_| true).unwrap();
    let mu = mu_matrix(3);
    for (a1, a2, _) in &triples {
        let (b1, b2) = mu.apply(a1, a2).unwrap();
        let scale = 1.0 + a1.frobenius_norm() + a2.frobenius_norm();
        assert!((&b1 + &b2).distance(&(a1 + a2)) / scale < 1e-10);
        assert!((&b1 * &b2).distance(&(a1 * a2)) / (scale * scale) < 1e-10);
        let p = expand_factors(&[a1.clone(), a2.clone()]).unwrap();
        assert!(expand_factors(&[b1, b2]).unwrap().distance(&p) / (1.0 + p.max_coeff_norm()) < 1e-9);
    }
}

#[test]
fn trivial_rmatrices_against_algebra_map() {
    let map = make_algebra_map(2);
    let triples = sample_triples(7, 10, |rng| Ok(random_matrix(rng, 2)), |_| true).unwrap();
    let pairs: Vec<_> = triples.iter().map(|t| (t.0.clone(), t.1.clone())).collect();
    for r in [make_trivial_keep(3), make_trivial_flip(3)] {
        let inv = check_inverse(&r, &map, &pairs, 1e-12);
        let ybr = check_twisted_ybr(&r, &map, &triples, 1e-12);
        assert!(inv.pass && ybr.pass, "{:?} {:?}", inv.max_residuals, ybr.max_residuals);
    }
    let bad = make_trivial_keep(2).perturbed(0.05);
    assert!(!check_twisted_ybr(&bad, &map, &triples, 1e-6).pass);
}

#[test]
fn theta_product_factors_back_into_degree_one_pieces() {
    let l = square();
    let parts = sample(8, 2, |rng| random_degree_one(rng, 2, &l), |_| true).unwrap();
    let h = multiply(&parts).unwrap();
    assert_eq!(h.n(), 2);
    let zeros = det_zeros(&h).unwrap();
    assert_eq!(zeros.len(), 4);
    let blocks: Vec<Vec<C64>> = parts.iter().map(|f| det_zeros(f).unwrap().points).collect();
    let back = theta_refactor(&h, &SpectrumPartition::new(blocks).unwrap()).unwrap();
    assert_eq!(back.len(), 2);
    // the split is unique up to the gauge of c, so compare pointwise products
    let rebuilt = multiply(&back).unwrap();
    assert!(rebuilt.ray_distance(&h) < 1e-6, "{}", rebuilt.ray_distance(&h));
}

#[test]
fn theta_chain_braid_relation_at_boundary_and_interior() {
    let l = square();
    let sections = sample(9, 3, |rng| random_degree_one(rng, 2, &l), |_| true).unwrap();
    let chain: Vec<ThetaFactor> = sections.into_iter().map(|s| ThetaFactor::new(s).unwrap()).collect();
    for i in 1..5 {
        let a = theta_local_action(&BraidWord::new(6, vec![i, i + 1, i]).unwrap(), &chain).unwrap();
        let b = theta_local_action(&BraidWord::new(6, vec![i + 1, i, i + 1]).unwrap(), &chain).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(x.section.ray_distance(&y.section) < 1e-6, "letters {i}, {}", i + 1);
            for (z, w) in x.zeros.iter().zip(&y.zeros) {
                assert!(l.periodic_distance(*z, *w, 2) < 1e-6);
            }
        }
        assert!(chain_product_residual(&chain, &a) < 1e-6);
    }
}

#[test]
fn theta_map_passes_relations_and_json_survives() {
    let l = square();
    let mu = mu_theta(2, l);
    let triples = sample_triples(10, 2, |rng| random_degree_one(rng, 2, &l), |_| true).unwrap();
    let report = check_relations(&mu, &triples, 1e-5);
    assert!(report.pass, "{:?}", report.max_residuals);
    let text = serde_json::to_string(&triples[0].0).unwrap();
    let back: ThetaSection = serde_json::from_str(&text).unwrap();
    assert_eq!(back, triples[0].0);
    // a section that violates the constraints is refused
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["coeffs"][0]["entries"][0] = serde_json::json!([5.0, 5.0]);
    assert!(serde_json::from_value::<ThetaSection>(v).is_err());
}
