mod common;

use algforge::algebroid::{tangent_algebroid, LieAlgebroid, Section, VectorFieldN};
use algforge::check::{compare, vanishes};
use algforge::expr::{Expr, VarSpace};
use algforge::sampling::{random_polynomial, Sampling};
use proptest::prelude::*;

fn random_section(seed: u64, r: usize, n: usize) -> Section {
    let mut g = common::rng(seed);
    Section::new((0..r).map(|_| random_polynomial(&mut g, n, 2, 3)).collect())
}

fn samples(n: usize) -> Vec<Vec<f64>> {
    Sampling::default().with_points(40).points(n)
}

fn algebroids() -> Vec<LieAlgebroid> {
    let so3 = common::so3();
    let (m, m_inv) = common::random_unipotent(11, 3, 3);
    let twisted = so3.change_frame(&m, &m_inv).unwrap();
    vec![so3, common::aff1(), tangent_algebroid(2), twisted]
}

#[test]
fn so3_axioms_hold_and_perturbation_is_detected() {
    let l = common::so3();
    let pts = Sampling::default().points(3);
    assert!(vanishes(&l.anchor_morphism_residuals(), &pts).max_residual <= 1e-12);
    assert!(vanishes(&l.jacobi_residuals(), &pts).max_residual <= 1e-12);
    let rho: Vec<Vec<Expr>> = (0..3).map(|a| (0..3).map(|al| l.rho(al, a).clone()).collect()).collect();
    let broken = LieAlgebroid::new(3, rho, [(2, 0, 1, Expr::constant(1.2)), (0, 1, 2, Expr::one()), (1, 0, 2, -Expr::one())]).unwrap();
    assert!(vanishes(&broken.anchor_morphism_residuals(), &pts).max_residual >= 0.1);
}

#[test]
fn so3_structure_matches_levi_civita() {
    let l = common::so3();
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                assert_eq!(l.c(c, a, b).as_const().unwrap_or(0.0), common::levi(a, b, c));
            }
        }
    }
    // ρ(e_1) = x3 ∂_2 − x2 ∂_3
    let x = VarSpace::indexed("x", 3);
    assert_eq!(l.rho(1, 0).simplify(), common::parse("x3", &x).simplify());
    assert_eq!(l.rho(2, 0).simplify(), common::parse("-x2", &x).simplify());
}

#[test]
fn frame_change_preserves_axioms() {
    for (seed, l) in [(3u64, common::so3()), (5, common::aff1())] {
        let (r, n) = (l.rank(), l.base_dim());
        let (m, m_inv) = common::random_unipotent(seed, r, n);
        let l2 = l.change_frame(&m, &m_inv).unwrap();
        let pts = samples(n);
        assert!(vanishes(&l2.anchor_morphism_residuals(), &pts).max_residual <= 1e-9);
        assert!(vanishes(&l2.jacobi_residuals(), &pts).max_residual <= 1e-9);
        // the bracket of two sections is frame independent
        let mu = random_section(seed + 1, r, n);
        let nu = random_section(seed + 2, r, n);
        let to_new = |s: &Section| {
            Section::new((0..r).map(|a| Expr::sum((0..r).map(|b| &m_inv[a][b] * &s.coeffs[b]).collect::<Vec<_>>())).collect())
        };
        let old = to_new(&l.bracket_sections(&mu, &nu).unwrap());
        let new = l2.bracket_sections(&to_new(&mu), &to_new(&nu)).unwrap();
        assert!(compare(&old.coeffs, Some(&new.coeffs), &pts).max_residual <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bracket_is_antisymmetric(seed in any::<u64>(), which in 0usize..4) {
        let l = &algebroids()[which];
        let (r, n) = (l.rank(), l.base_dim());
        let mu = random_section(seed, r, n);
        let nu = random_section(seed ^ 0x55, r, n);
        let sum = l.bracket_sections(&mu, &nu).unwrap().add(&l.bracket_sections(&nu, &mu).unwrap());
        prop_assert!(vanishes(&sum.coeffs, &samples(n)).max_residual <= 1e-10);
    }

    #[test]
    fn bracket_obeys_leibniz(seed in any::<u64>(), which in 0usize..4) {
        let l = &algebroids()[which];
        let (r, n) = (l.rank(), l.base_dim());
        let mu = random_section(seed, r, n);
        let nu = random_section(seed ^ 0x77, r, n);
        let f = random_polynomial(&mut common::rng(seed ^ 0x99), n, 2, 3);
        let lhs = l.bracket_sections(&mu, &nu.scale(&f)).unwrap();
        let anchor: VectorFieldN = l.anchor_apply(&mu).unwrap();
        let rhs = l.bracket_sections(&mu, &nu).unwrap().scale(&f).add(&nu.scale(&anchor.apply(&f)));
        prop_assert!(compare(&lhs.coeffs, Some(&rhs.coeffs), &samples(n)).max_residual <= 1e-10);
    }

    #[test]
    fn anchor_preserves_brackets_on_sections(seed in any::<u64>(), which in 0usize..4) {
        let l = &algebroids()[which];
        let (r, n) = (l.rank(), l.base_dim());
        let mu = random_section(seed, r, n);
        let nu = random_section(seed ^ 0x33, r, n);
        let lhs = l.anchor_apply(&l.bracket_sections(&mu, &nu).unwrap()).unwrap();
        let rhs = l.anchor_apply(&mu).unwrap().bracket(&l.anchor_apply(&nu).unwrap());
        prop_assert!(compare(&lhs.coeffs, Some(&rhs.coeffs), &samples(n)).max_residual <= 1e-9);
    }
}
