mod common;

use algforge::algebroid::{tangent_algebroid, LieAlgebroid, Section};
use algforge::check::{compare, vanishes};
use algforge::connections::{
    anchor_compatibility_residuals, apply_econn, basic_connection_e, basic_connection_tn, basic_curvature,
    basic_relation_residuals, basic_relation_residuals_with, curvature_econn, curvature_linear, first_bianchi_residuals,
    nabla_rho, torsion, CurvatureTable, EConnOnTN, LinearConnection,
};
use algforge::expr::{Expr, Tape, VarSpace};
use algforge::sampling::{random_polynomial, Sampling};
use algforge::table::Table;
use proptest::prelude::*;

fn x3() -> VarSpace {
    VarSpace::indexed("x", 3)
}

fn zero_anchor() -> LieAlgebroid {
    let x = VarSpace::indexed("x", 1);
    LieAlgebroid::new(1, vec![vec![Expr::zero()]; 3], [(2, 0, 1, common::parse("1 + 0.5*x1", &x))]).unwrap()
}

#[test]
fn basic_connection_of_flat_action_is_the_bracket() {
    let l = common::so3();
    let flat = LinearConnection::flat(3, 3);
    let b = basic_connection_e(&l, &flat).unwrap();
    assert_eq!(b.b.simplify(), l.c_table().simplify());
    assert_eq!(b.b.get(&[2, 0, 1]).as_const(), Some(1.0));
    // ∇^bas_{e1} e2 = e3
    let e = |a| Section::frame(3, a).coeffs;
    let v = apply_econn(&l, &b, &e(0), &e(1)).unwrap();
    assert_eq!(v.iter().map(|c| c.as_const().unwrap_or(f64::NAN)).collect::<Vec<_>>(), vec![0.0, 0.0, 1.0]);
    // G^α_{aβ} = ε_{aβα}
    let g = basic_connection_tn(&l, &flat).unwrap();
    for alpha in 0..3 {
        for a in 0..3 {
            for beta in 0..3 {
                assert_eq!(g.g.get(&[alpha, a, beta]).simplify().as_const(), Some(common::levi(a, beta, alpha)));
            }
        }
    }
    let t = torsion(&l, &b).unwrap();
    assert_eq!(t.get(&[2, 0, 1]).as_const(), Some(1.0));
}

#[test]
fn basic_connection_with_connection_term() {
    let l = common::so3();
    let conn = LinearConnection::new(3, 3, [(0, 0, 0, Expr::var(0))]).unwrap();
    let b = basic_connection_e(&l, &conn).unwrap();
    assert!(b.b.get(&[0, 0, 0]).simplify().is_zero());
    assert_eq!(b.b.get(&[0, 0, 2]).simplify(), common::parse("x1*x2", &x3()).simplify());
}

#[test]
fn nabla_rho_vanishes_with_zero_anchor_or_zero_connection() {
    let za = zero_anchor();
    let conn = LinearConnection::new(3, 1, [(0, 1, 0, Expr::var(0)), (2, 2, 0, Expr::one())]).unwrap();
    assert!(nabla_rho(&za, &conn).unwrap().b.data().iter().all(|e| e.simplify().is_zero()));
    assert!(basic_connection_tn(&za, &conn).unwrap().g.data().iter().all(|e| e.simplify().is_zero()));
    let l = common::so3();
    assert!(nabla_rho(&l, &LinearConnection::flat(3, 3)).unwrap().b.data().iter().all(|e| e.is_zero()));
}

#[test]
fn torsion_is_antisymmetric_and_vanishes_for_symmetric_coefficients() {
    let l = tangent_algebroid(2);
    let conn = common::random_connection(4, 2, 2);
    let t = torsion(&l, &basic_connection_e(&l, &conn).unwrap()).unwrap();
    for a in 0..2 {
        for b in 0..2 {
            assert!(t.get(&[a, b, b]).simplify().is_zero());
        }
    }
    // abelian algebroid with zero anchor, symmetric B
    let ab = LieAlgebroid::new(1, vec![vec![Expr::zero()]; 2], Vec::new()).unwrap();
    let sym = algforge::connections::EConnOnE {
        b: Table::from_fn(&[2, 2, 2], |i| if i[1] == i[2] { Expr::var(0) } else { Expr::constant(0.5) }),
    };
    assert!(torsion(&ab, &sym).unwrap().data().iter().all(|e| e.simplify().is_zero()));
}

#[test]
fn flat_action_algebroids_have_vanishing_basic_curvature() {
    for l in [common::so3(), common::aff1(), tangent_algebroid(2)] {
        let (r, n) = (l.rank(), l.base_dim());
        let s = basic_curvature(&l, &LinearConnection::flat(r, n)).unwrap();
        assert!(vanishes(s.s.data(), &Sampling::default().points(n)).max_residual <= 1e-12);
        let be = basic_connection_e(&l, &LinearConnection::flat(r, n)).unwrap();
        let curv = curvature_econn(&l, &be).unwrap();
        assert!(vanishes(curv.table.data(), &Sampling::default().points(n)).max_residual <= 1e-12);
    }
}

#[test]
fn zero_anchor_basic_curvature_measures_derivation_failure() {
    let l = zero_anchor();
    let conn = LinearConnection::new(3, 1, [(0, 0, 0, Expr::var(0)), (2, 1, 0, Expr::constant(0.3))]).unwrap();
    let s = basic_curvature(&l, &conn).unwrap();
    // S(e_b, e_c)∂ = ∇[e_b,e_c] − [∇e_b, e_c] − [e_b, ∇e_c] in the frame
    let mut expected = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                let mut terms = vec![l.c(a, b, c).diff(0)];
                for d in 0..3 {
                    terms.push(conn.omega(a, d, 0) * l.c(d, b, c));
                    terms.push(-(l.c(a, d, c) * conn.omega(d, b, 0)));
                    terms.push(-(l.c(a, b, d) * conn.omega(d, c, 0)));
                }
                expected.push(Expr::sum(terms));
            }
        }
    }
    let got: Vec<Expr> = s.s.data().to_vec();
    assert!(compare(&got, Some(&expected), &Sampling::default().points(1)).max_residual <= 1e-12);
    let abelian = LieAlgebroid::new(1, vec![vec![Expr::zero()]; 2], Vec::new()).unwrap();
    let s0 = basic_curvature(&abelian, &common::random_connection(2, 2, 1)).unwrap();
    assert!(s0.s.data().iter().all(|e| e.simplify().is_zero()));
}

#[test]
fn basic_relations_on_tangent_plane() {
    let l = tangent_algebroid(2);
    let y = VarSpace::indexed("x", 2);
    let single = LinearConnection::new(2, 2, [(0, 1, 0, common::parse("x2", &y))]).unwrap();
    let pts = Sampling::default().with_points(50).points(2);
    for conn in [single, common::random_connection(8, 2, 2), common::random_connection(9, 2, 2)] {
        let res = basic_relation_residuals(&l, &conn).unwrap();
        assert!(vanishes(&res.all(), &pts).max_residual <= 1e-9);
        assert!(vanishes(&anchor_compatibility_residuals(&l, &conn).unwrap(), &pts).max_residual <= 1e-10);
    }
}

#[test]
fn altered_basic_curvature_is_caught() {
    let l = tangent_algebroid(2);
    let conn = common::random_connection(8, 2, 2);
    let mut s = basic_curvature(&l, &conn).unwrap();
    let bumped = (s.s.get(&[0, 0, 1, 0]) + 1.0).simplify();
    s.s.set(&[0, 0, 1, 0], bumped);
    let res = basic_relation_residuals_with(&l, &conn, &s).unwrap();
    assert!(vanishes(&res.all(), &Sampling::default().with_points(50).points(2)).max_residual >= 0.5);
}

#[test]
fn first_bianchi_on_randomized_pairs() {
    let pts = Sampling::default().with_points(50).points(3);
    for seed in 0..3u64 {
        let (m, m_inv) = common::random_unipotent(100 + seed, 3, 3);
        let l = common::so3().change_frame(&m, &m_inv).unwrap();
        let conn = common::random_connection(200 + seed, 3, 3);
        let b = basic_connection_e(&l, &conn).unwrap();
        assert!(vanishes(&first_bianchi_residuals(&l, &b).unwrap(), &pts).max_residual <= 1e-8);
    }
}

/// `x ↦ [Γ_a]` for `a` over the base coordinates.
type Christoffel = dyn Fn(&[f64]) -> Vec<Vec<Vec<f64>>>;

/// `(P − I)/h²` for parallel transport around the square of side `h` centred at
/// `x0` in the `(s, t)` plane; tends to `−R(∂_s, ∂_t)` as `h → 0`.
/// `gamma(x)[a]` is the matrix `Γ_a` of `∇_{∂_a} v = ∂_a v + Γ_a v`.
fn holonomy(gamma: &Christoffel, x0: &[f64], s: usize, t: usize, h: f64) -> Vec<Vec<f64>> {
    let f = gamma(x0)[0].len();
    // based at the centre: walk to the corner, go around, walk back
    let legs = [
        (s, -0.5f64),
        (t, -0.5),
        (s, 1.0),
        (t, 1.0),
        (s, -1.0),
        (t, -1.0),
        (t, 0.5),
        (s, 0.5),
    ];
    let mut cols = Vec::new();
    for j in 0..f {
        let mut v: Vec<f64> = (0..f).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
        let mut x = x0.to_vec();
        for &(dir, length) in &legs {
            let sign = length.signum();
            let steps = 8;
            let dt = h * length.abs() / steps as f64;
            let rhs = |x: &[f64], v: &[f64]| -> Vec<f64> {
                let g = &gamma(x)[dir];
                (0..f).map(|i| -sign * (0..f).map(|k| g[i][k] * v[k]).sum::<f64>()).collect()
            };
            for _ in 0..steps {
                let at = |tau: f64| {
                    let mut y = x.clone();
                    y[dir] += sign * tau;
                    y
                };
                let k1 = rhs(&at(0.0), &v);
                let v2: Vec<f64> = v.iter().zip(&k1).map(|(a, k)| a + dt / 2.0 * k).collect();
                let k2 = rhs(&at(dt / 2.0), &v2);
                let v3: Vec<f64> = v.iter().zip(&k2).map(|(a, k)| a + dt / 2.0 * k).collect();
                let k3 = rhs(&at(dt / 2.0), &v3);
                let v4: Vec<f64> = v.iter().zip(&k3).map(|(a, k)| a + dt * k).collect();
                let k4 = rhs(&at(dt), &v4);
                for i in 0..f {
                    v[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                x[dir] += sign * dt;
            }
        }
        cols.push(v);
    }
    (0..f).map(|i| (0..f).map(|j| (cols[j][i] - if i == j { 1.0 } else { 0.0 }) / (h * h)).collect()).collect()
}

fn compare_with_holonomy(gamma: &Christoffel, curv: &CurvatureTable, n: usize, points: usize) -> f64 {
    let tape = Tape::new(curv.table.data().iter());
    let shape = curv.table.shape().to_vec();
    let mut worst: f64 = 0.0;
    for x0 in Sampling::default().with_points(points).points(n) {
        let r = tape.eval(&x0).unwrap();
        for s in 0..n {
            for t in 0..n {
                if s == t {
                    continue;
                }
                // Richardson step removes the h² error of the loop
                let coarse = holonomy(gamma, &x0, s, t, 1e-3);
                let fine = holonomy(gamma, &x0, s, t, 5e-4);
                let p: Vec<Vec<f64>> =
                    coarse.iter().zip(&fine).map(|(c, f)| c.iter().zip(f).map(|(c, f)| (4.0 * f - c) / 3.0).collect()).collect();
                for i in 0..shape[0] {
                    for j in 0..shape[3] {
                        let exact = r[((i * shape[1] + s) * shape[2] + t) * shape[3] + j];
                        worst = worst.max((p[i][j] + exact).abs());
                    }
                }
            }
        }
    }
    worst
}

/// `Γ` matrices from a coefficient table `K[i][a][j]`.
fn gamma_from(table: &Table) -> impl Fn(&[f64]) -> Vec<Vec<Vec<f64>>> {
    let shape = table.shape().to_vec();
    let tape = Tape::new(table.data().iter());
    move |x: &[f64]| {
        let k = tape.eval(x).unwrap();
        (0..shape[1])
            .map(|a| (0..shape[0]).map(|i| (0..shape[2]).map(|j| k[(i * shape[1] + a) * shape[2] + j]).collect()).collect())
            .collect()
    }
}

#[test]
fn tangent_basic_curvature_on_tn_matches_holonomy() {
    let l = tangent_algebroid(2);
    let y = VarSpace::indexed("x", 2);
    let conn = LinearConnection::new(2, 2, [(0, 1, 0, common::parse("x1", &y))]).unwrap();
    let g: EConnOnTN = basic_connection_tn(&l, &conn).unwrap();
    let curv = curvature_econn(&l, &g).unwrap();
    assert!(curv.table.data().iter().any(|e| !e.simplify().is_zero()));
    let err = compare_with_holonomy(&gamma_from(&g.g), &curv, 2, 10);
    assert!(err <= 1e-6, "holonomy mismatch {err:e}");
}

#[test]
fn linear_curvature_matches_holonomy() {
    let conn = common::random_connection(31, 2, 3);
    // ∇_{∂_α} e_b = ω^a_{bα} e_a, so Γ_α[a][b] = ω^a_{bα}
    let omega = conn.table().clone();
    let as_k = Table::from_fn(&[2, 3, 2], |i| omega.get(&[i[0], i[2], i[1]]).clone());
    let curv = curvature_linear(&LieAlgebroid::new(3, vec![vec![Expr::zero(); 3]; 2], Vec::new()).unwrap(), &conn).unwrap();
    let err = compare_with_holonomy(&gamma_from(&as_k), &curv, 3, 10);
    assert!(err <= 1e-6, "holonomy mismatch {err:e}");
}

#[test]
fn curvature_tables_are_antisymmetric() {
    let l = common::so3();
    let conn = common::random_connection(12, 3, 3);
    let pts = Sampling::default().with_points(30).points(3);
    let tables = [
        curvature_econn(&l, &basic_connection_e(&l, &conn).unwrap()).unwrap(),
        curvature_econn(&l, &basic_connection_tn(&l, &conn).unwrap()).unwrap(),
        curvature_econn(&l, &nabla_rho(&l, &conn).unwrap()).unwrap(),
        curvature_linear(&l, &conn).unwrap(),
    ];
    for t in &tables {
        assert!(vanishes(&t.antisymmetry_residuals(), &pts).max_residual <= 1e-12);
    }
    let s = basic_curvature(&l, &conn).unwrap();
    let mut res = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for beta in 0..3 {
                    res.push(s.get(a, b, c, beta) + s.get(a, c, b, beta));
                }
            }
        }
    }
    assert!(vanishes(&res, &pts).max_residual <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn econnections_obey_leibniz(seed in any::<u64>()) {
        let l = common::so3();
        let conn = common::random_connection(seed, 3, 3);
        let mut g = common::rng(seed ^ 0xABC);
        let mu: Vec<Expr> = (0..3).map(|_| random_polynomial(&mut g, 3, 2, 2)).collect();
        let v: Vec<Expr> = (0..3).map(|_| random_polynomial(&mut g, 3, 2, 2)).collect();
        let f = random_polynomial(&mut g, 3, 2, 3);
        let rho_mu_f = l.anchor_apply(&Section::new(mu.clone())).unwrap().apply(&f);
        let pts = Sampling::default().points(3);
        let be = basic_connection_e(&l, &conn).unwrap();
        let gt = basic_connection_tn(&l, &conn).unwrap();
        for k in [&be as &dyn algforge::connections::EConnection, &gt] {
            let fv: Vec<Expr> = v.iter().map(|c| &f * c).collect();
            let lhs = apply_econn(&l, k, &mu, &fv).unwrap();
            let plain = apply_econn(&l, k, &mu, &v).unwrap();
            let rhs: Vec<Expr> = plain.iter().zip(&v).map(|(p, c)| &f * p + &rho_mu_f * c).collect();
            prop_assert!(compare(&lhs, Some(&rhs), &pts).max_residual <= 1e-10);
        }
    }

    #[test]
    fn basic_relations_hold_for_random_connections(seed in any::<u64>()) {
        let l = tangent_algebroid(2);
        let conn = common::random_connection(seed, 2, 2);
        let res = basic_relation_residuals(&l, &conn).unwrap();
        prop_assert!(vanishes(&res.all(), &Sampling::default().with_points(20).points(2)).max_residual <= 1e-8);
    }
}
