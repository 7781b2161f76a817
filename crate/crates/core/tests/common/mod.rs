#![allow(dead_code)]

use algforge::algebroid::{action_algebroid, LieAlgebroid, VectorFieldN};
use algforge::connections::LinearConnection;
use algforge::expr::{parse_expr, Expr, VarSpace};
use algforge::sampling::{random_polynomial, Sampling};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sign of the permutation `(a, b, c)` of `(0, 1, 2)`, zero on repeats.
pub fn levi(a: usize, b: usize, c: usize) -> f64 {
    if a == b || b == c || a == c {
        return 0.0;
    }
    let p = [a, b, c];
    let inversions = (0..3).flat_map(|i| (i + 1..3).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Rotation action `γ_a = −ε_{aβα} x^β ∂_α` with `[γ_a, γ_b] = ε_{abc} γ_c`.
pub fn so3() -> LieAlgebroid {
    let gamma: Vec<VectorFieldN> = (0..3)
        .map(|a| {
            VectorFieldN::new(
                (0..3)
                    .map(|alpha| Expr::sum((0..3).map(|b| -levi(a, b, alpha) * Expr::var(b)).collect::<Vec<_>>()).simplify())
                    .collect(),
            )
        })
        .collect();
    let f: Vec<Vec<Vec<f64>>> = (0..3).map(|c| (0..3).map(|a| (0..3).map(|b| levi(a, b, c)).collect()).collect()).collect();
    action_algebroid(&f, &gamma, &Sampling::default(), 1e-12).unwrap()
}

/// Translations and dilations of the line: `γ_1 = ∂_x`, `γ_2 = x ∂_x`, `[e_1, e_2] = e_1`.
pub fn aff1() -> LieAlgebroid {
    let gamma = vec![VectorFieldN::new(vec![Expr::one()]), VectorFieldN::new(vec![Expr::var(0)])];
    let f = vec![vec![vec![0.0, 1.0], vec![-1.0, 0.0]], vec![vec![0.0; 2]; 2]];
    action_algebroid(&f, &gamma, &Sampling::default(), 1e-12).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connection with seeded polynomial coefficients of degree ≤ 2.
pub fn random_connection(seed: u64, r: usize, n: usize) -> LinearConnection {
    let mut g = rng(seed);
    let mut entries = Vec::new();
    for a in 0..r {
        for b in 0..r {
            for alpha in 0..n {
                entries.push((a, b, alpha, random_polynomial(&mut g, n, 2, 2)));
            }
        }
    }
    LinearConnection::new(r, n, entries).unwrap()
}

/// Frame change `M = I + N` with `N` strictly upper triangular and seeded polynomial
/// entries; the inverse is the finite Neumann series. Returns `(m[b][a], m_inv[a][b])`.
pub fn random_unipotent(seed: u64, r: usize, n: usize) -> (Vec<Vec<Expr>>, Vec<Vec<Expr>>) {
    let mut g = rng(seed);
    let nil: Vec<Vec<Expr>> = (0..r)
        .map(|b| (0..r).map(|a| if b < a { 0.5 * random_polynomial(&mut g, n, 2, 2) } else { Expr::zero() }).collect())
        .collect();
    let id = |i: usize, j: usize| if i == j { Expr::one() } else { Expr::zero() };
    let m: Vec<Vec<Expr>> = (0..r).map(|b| (0..r).map(|a| (id(b, a) + &nil[b][a]).simplify()).collect()).collect();
    let mut inv: Vec<Vec<Expr>> = (0..r).map(|i| (0..r).map(|j| id(i, j)).collect()).collect();
    let mut power = inv.clone();
    for _ in 1..r {
        power = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| Expr::sum((0..r).map(|k| -(&power[i][k] * &nil[k][j])).collect::<Vec<_>>()).simplify())
                    .collect()
            })
            .collect();
        for i in 0..r {
            for j in 0..r {
                inv[i][j] = (&inv[i][j] + &power[i][j]).simplify();
            }
        }
    }
    (m, inv)
}

pub fn parse(text: &str, space: &VarSpace) -> Expr {
    parse_expr(text, space).unwrap()
}

pub fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v.abs()) })
}
