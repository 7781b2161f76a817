//! Lie algebroids over a single chart with a global frame `(e_a)`.
//!
//! The anchor is stored as `rho[a][α] = ρ^α_a` (row `a` is the vector field
//! `ρ(e_a)`), structure functions as `c[a][b][c] = C^a_bc` with
//! `[e_b, e_c] = C^a_bc e_a`. Only `b < c` is ever supplied; the rest of the
//! table is derived, so antisymmetry holds by construction.

use std::time::Instant;

use thiserror::Error;

use crate::check::{self, CheckResult, Measure};
use crate::expr::{Expr, VarSpace};
use crate::sampling::Sampling;
use crate::table::Table;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebroidError {
    #[error("expected {expected} coefficients, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("structure function entries need b < c, got ({b}, {c})")]
    LowerIndexOrder { b: usize, c: usize },
    #[error("structure constants are not antisymmetric")]
    NotAntisymmetric,
    #[error("action is not a Lie algebra homomorphism: max residual {max_residual:e}")]
    NotHomomorphism { max_residual: f64 },
}

/// Section `μ = μ^a e_a` with coefficients over the base coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub coeffs: Vec<Expr>,
}

/// Vector field `X = X^α ∂_α` on the base.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorFieldN {
    pub coeffs: Vec<Expr>,
}

impl Section {
    pub fn new(coeffs: Vec<Expr>) -> Section {
        Section { coeffs }
    }

    /// The frame section `e_a`.
    pub fn frame(rank: usize, a: usize) -> Section {
        Section { coeffs: (0..rank).map(|b| if a == b { Expr::one() } else { Expr::zero() }).collect() }
    }

    pub fn zero(rank: usize) -> Section {
        Section { coeffs: vec![Expr::zero(); rank] }
    }

    pub fn scale(&self, f: &Expr) -> Section {
        Section { coeffs: self.coeffs.iter().map(|c| f * c).collect() }
    }

    pub fn add(&self, other: &Section) -> Section {
        Section { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Section) -> Section {
        Section { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect() }
    }

    pub fn simplify(&self) -> Section {
        Section { coeffs: self.coeffs.iter().map(Expr::simplify).collect() }
    }
}

impl VectorFieldN {
    pub fn new(coeffs: Vec<Expr>) -> VectorFieldN {
        VectorFieldN { coeffs }
    }

    pub fn coordinate(dim: usize, alpha: usize) -> VectorFieldN {
        VectorFieldN { coeffs: Section::frame(dim, alpha).coeffs }
    }

    /// `X(f) = X^α ∂_α f`.
    pub fn apply(&self, f: &Expr) -> Expr {
        Expr::sum(
            self.coeffs
                .iter()
                .enumerate()
                .filter(|(_, x)| !x.is_zero())
                .map(|(alpha, x)| x * f.diff(alpha))
                .collect::<Vec<_>>(),
        )
    }

    /// Commutator `[X, Y]^β = X(Y^β) − Y(X^β)`.
    pub fn bracket(&self, other: &VectorFieldN) -> VectorFieldN {
        VectorFieldN {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(xb, yb)| (self.apply(yb) - other.apply(xb)).simplify())
                .collect(),
        }
    }

    pub fn simplify(&self) -> VectorFieldN {
        VectorFieldN { coeffs: self.coeffs.iter().map(Expr::simplify).collect() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgebroid {
    n: usize,
    r: usize,
    space: VarSpace,
    rho: Table,
    c: Table,
}

impl LieAlgebroid {
    /// `rho[a][α] = ρ^α_a`; `structure` lists `(a, b, c, C^a_bc)` with `b < c`.
    /// Repeated entries add up; absent entries are zero.
    pub fn new(
        base_dim: usize,
        rho: Vec<Vec<Expr>>,
        structure: impl IntoIterator<Item = (usize, usize, usize, Expr)>,
    ) -> Result<LieAlgebroid, AlgebroidError> {
        if base_dim == 0 {
            return Err(AlgebroidError::Shape("base dimension must be positive".into()));
        }
        let r = rho.len();
        if r == 0 {
            return Err(AlgebroidError::Shape("rank must be positive".into()));
        }
        let mut rho_t = Table::zeros(&[r, base_dim]);
        for (a, row) in rho.into_iter().enumerate() {
            if row.len() != base_dim {
                return Err(AlgebroidError::Shape(format!(
                    "anchor row {} has {} entries, base dimension is {base_dim}",
                    a + 1,
                    row.len()
                )));
            }
            for (alpha, e) in row.into_iter().enumerate() {
                rho_t.set(&[a, alpha], e);
            }
        }
        let mut c = Table::zeros(&[r, r, r]);
        for (a, b, cc, e) in structure {
            if a >= r || b >= r || cc >= r {
                return Err(AlgebroidError::Shape(format!("structure index ({a}, {b}, {cc}) exceeds rank {r}")));
            }
            if b >= cc {
                return Err(AlgebroidError::LowerIndexOrder { b, c: cc });
            }
            let v = (c.get(&[a, b, cc]) + &e).simplify();
            c.set(&[a, cc, b], (-&v).simplify());
            c.set(&[a, b, cc], v);
        }
        Ok(LieAlgebroid { n: base_dim, r, space: VarSpace::indexed("x", base_dim), rho: rho_t, c })
    }

    /// Builds from a full structure table, reading only `b < c`.
    pub fn from_tables(base_dim: usize, rho: &Table, c: &Table) -> Result<LieAlgebroid, AlgebroidError> {
        let r = rho.shape()[0];
        let rows = (0..r).map(|a| (0..base_dim).map(|al| rho.get(&[a, al]).clone()).collect()).collect();
        let mut entries = Vec::new();
        for a in 0..r {
            for b in 0..r {
                for cc in b + 1..r {
                    entries.push((a, b, cc, c.get(&[a, b, cc]).clone()));
                }
            }
        }
        LieAlgebroid::new(base_dim, rows, entries)
    }

    pub fn base_dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    /// Coordinates `x1..xn`.
    pub fn space(&self) -> &VarSpace {
        &self.space
    }

    /// `ρ^α_a`.
    pub fn rho(&self, alpha: usize, a: usize) -> &Expr {
        self.rho.get(&[a, alpha])
    }

    /// `C^a_bc`.
    pub fn c(&self, a: usize, b: usize, c: usize) -> &Expr {
        self.c.get(&[a, b, c])
    }

    pub fn rho_table(&self) -> &Table {
        &self.rho
    }

    pub fn c_table(&self) -> &Table {
        &self.c
    }

    pub fn digest_parts(&self) -> Vec<String> {
        let mut parts = vec![format!("algebroid n={} r={}", self.n, self.r)];
        parts.extend(self.rho.data().iter().chain(self.c.data()).map(|e| e.display(&self.space).to_string()));
        parts
    }

    fn check_rank(&self, s: &Section) -> Result<(), AlgebroidError> {
        if s.coeffs.len() != self.r {
            return Err(AlgebroidError::RankMismatch { expected: self.r, got: s.coeffs.len() });
        }
        Ok(())
    }

    /// `X^α = ρ^α_a μ^a`.
    pub fn anchor_apply(&self, mu: &Section) -> Result<VectorFieldN, AlgebroidError> {
        self.check_rank(mu)?;
        Ok(VectorFieldN {
            coeffs: (0..self.n)
                .map(|alpha| Expr::sum((0..self.r).map(|a| self.rho(alpha, a) * &mu.coeffs[a]).collect::<Vec<_>>()).simplify())
                .collect(),
        })
    }

    /// `[μ,ν]^a = μ^b ν^c C^a_bc + ρ(μ)(ν^a) − ρ(ν)(μ^a)`.
    pub fn bracket_sections(&self, mu: &Section, nu: &Section) -> Result<Section, AlgebroidError> {
        self.check_rank(mu)?;
        self.check_rank(nu)?;
        let rmu = self.anchor_apply(mu)?;
        let rnu = self.anchor_apply(nu)?;
        let coeffs = (0..self.r)
            .map(|a| {
                let mut terms = Vec::new();
                for b in 0..self.r {
                    for c in 0..self.r {
                        let cabc = self.c(a, b, c);
                        if !cabc.is_zero() {
                            terms.push(Expr::product([mu.coeffs[b].clone(), nu.coeffs[c].clone(), cabc.clone()]));
                        }
                    }
                }
                terms.push(rmu.apply(&nu.coeffs[a]));
                terms.push(-rnu.apply(&mu.coeffs[a]));
                Expr::sum(terms).simplify()
            })
            .collect();
        Ok(Section { coeffs })
    }

    /// `R^β_ab = ρ^α_a ∂_α ρ^β_b − ρ^α_b ∂_α ρ^β_a − ρ^β_c C^c_ab`, all `a < b`.
    pub fn anchor_morphism_residuals(&self) -> Vec<Expr> {
        let mut out = Vec::new();
        for a in 0..self.r {
            for b in a + 1..self.r {
                for beta in 0..self.n {
                    let mut terms = Vec::new();
                    for alpha in 0..self.n {
                        terms.push(self.rho(alpha, a) * self.rho(beta, b).diff(alpha));
                        terms.push(-(self.rho(alpha, b) * self.rho(beta, a).diff(alpha)));
                    }
                    for c in 0..self.r {
                        terms.push(-(self.rho(beta, c) * self.c(c, a, b)));
                    }
                    out.push(Expr::sum(terms).simplify());
                }
            }
        }
        out
    }

    /// `J^e_abc = Σ_cyc(a,b,c) [C^d_bc C^e_ad + ρ^α_a ∂_α C^e_bc]`, all `a < b < c`.
    pub fn jacobi_residuals(&self) -> Vec<Expr> {
        let mut out = Vec::new();
        for a in 0..self.r {
            for b in a + 1..self.r {
                for c in b + 1..self.r {
                    for e in 0..self.r {
                        let mut terms = Vec::new();
                        for (x, y, z) in [(a, b, c), (b, c, a), (c, a, b)] {
                            for d in 0..self.r {
                                terms.push(self.c(d, y, z) * self.c(e, x, d));
                            }
                            for alpha in 0..self.n {
                                terms.push(self.rho(alpha, x) * self.c(e, y, z).diff(alpha));
                            }
                        }
                        out.push(Expr::sum(terms).simplify());
                    }
                }
            }
        }
        out
    }

    pub fn check_anchor_morphism(&self, sampling: &Sampling, tol: f64) -> CheckResult {
        let started = Instant::now();
        let pts = sampling.points(self.n);
        let m = measure_or_empty(&self.anchor_morphism_residuals(), &pts);
        CheckResult::new("anchor-morphism", check::digest(&self.digest_parts()), sampling, m, tol, started)
    }

    pub fn check_jacobi(&self, sampling: &Sampling, tol: f64) -> CheckResult {
        let started = Instant::now();
        let pts = sampling.points(self.n);
        let m = measure_or_empty(&self.jacobi_residuals(), &pts);
        CheckResult::new("jacobi", check::digest(&self.digest_parts()), sampling, m, tol, started)
    }

    /// Same bundle in the frame `e'_a = M^b_a e_b`; `m[b][a] = M^b_a`, `m_inv` its inverse.
    pub fn change_frame(&self, m: &[Vec<Expr>], m_inv: &[Vec<Expr>]) -> Result<LieAlgebroid, AlgebroidError> {
        let r = self.r;
        let new_frame: Vec<Section> = (0..r).map(|a| Section::new((0..r).map(|b| m[b][a].clone()).collect())).collect();
        let rho: Vec<Vec<Expr>> = new_frame.iter().map(|s| self.anchor_apply(s).map(|v| v.coeffs)).collect::<Result<_, _>>()?;
        let mut entries = Vec::new();
        for b in 0..r {
            for c in b + 1..r {
                let br = self.bracket_sections(&new_frame[b], &new_frame[c])?;
                for a in 0..r {
                    let e = Expr::sum((0..r).map(|f| &m_inv[a][f] * &br.coeffs[f]).collect::<Vec<_>>()).simplify();
                    entries.push((a, b, c, e));
                }
            }
        }
        LieAlgebroid::new(self.n, rho, entries)
    }
}

fn measure_or_empty(residuals: &[Expr], pts: &[Vec<f64>]) -> Measure {
    if residuals.is_empty() {
        return Measure { points: pts.len(), ..Measure::default() };
    }
    check::vanishes(residuals, pts)
}

/// Action algebroid of a Lie algebra with constants `f[c][a][b] = f^c_ab`
/// acting through the vector fields `gamma`. The action must satisfy
/// `[γ_a, γ_b] = f^c_ab γ_c`; this is checked at the sample points.
pub fn action_algebroid(
    f: &[Vec<Vec<f64>>],
    gamma: &[VectorFieldN],
    sampling: &Sampling,
    tol: f64,
) -> Result<LieAlgebroid, AlgebroidError> {
    let r = gamma.len();
    if r == 0 {
        return Err(AlgebroidError::Shape("an action needs at least one generator".into()));
    }
    let n = gamma[0].coeffs.len();
    if gamma.iter().any(|g| g.coeffs.len() != n) {
        return Err(AlgebroidError::Shape("action vector fields differ in dimension".into()));
    }
    if f.len() != r || f.iter().any(|m| m.len() != r || m.iter().any(|row| row.len() != r)) {
        return Err(AlgebroidError::Shape("structure constants must be rank x rank x rank".into()));
    }
    for c in 0..r {
        for a in 0..r {
            for b in 0..r {
                if f[c][a][b] != -f[c][b][a] {
                    return Err(AlgebroidError::NotAntisymmetric);
                }
            }
        }
    }
    let mut residuals = Vec::new();
    for a in 0..r {
        for b in a + 1..r {
            let lhs = gamma[a].bracket(&gamma[b]);
            for alpha in 0..n {
                let rhs = Expr::sum((0..r).map(|c| f[c][a][b] * &gamma[c].coeffs[alpha]).collect::<Vec<_>>());
                residuals.push((&lhs.coeffs[alpha] - rhs).simplify());
            }
        }
    }
    let m = measure_or_empty(&residuals, &sampling.points(n));
    // negated so that a NaN residual is rejected
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(m.max_residual <= tol) {
        return Err(AlgebroidError::NotHomomorphism { max_residual: m.max_residual });
    }
    let rho = gamma.iter().map(|g| g.coeffs.clone()).collect();
    let mut entries = Vec::new();
    for a in 0..r {
        for b in 0..r {
            for c in b + 1..r {
                if f[a][b][c] != 0.0 {
                    entries.push((a, b, c, Expr::constant(f[a][b][c])));
                }
            }
        }
    }
    LieAlgebroid::new(n, rho, entries)
}

/// `TN` for `N ⊆ ℝⁿ`: identity anchor, vanishing structure functions.
pub fn tangent_algebroid(n: usize) -> LieAlgebroid {
    let rho = (0..n).map(|a| Section::frame(n, a).coeffs).collect();
    LieAlgebroid::new(n, rho, Vec::new()).expect("tangent algebroid is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Expr {
        Expr::var(i)
    }

    #[test]
    fn storage_is_antisymmetric() {
        let l = LieAlgebroid::new(1, vec![vec![Expr::zero()], vec![Expr::zero()]], [(0, 0, 1, x(0))]).unwrap();
        assert_eq!(l.c(0, 1, 0).simplify(), (-x(0)).simplify());
        assert!(l.c(0, 0, 0).is_zero());
        assert!(matches!(
            LieAlgebroid::new(1, vec![vec![Expr::zero()], vec![Expr::zero()]], [(0, 1, 0, x(0))]),
            Err(AlgebroidError::LowerIndexOrder { .. })
        ));
    }

    #[test]
    fn tangent_bracket_is_vector_field_bracket() {
        let t = tangent_algebroid(1);
        let mu = Section::new(vec![x(0)]);
        let e1 = Section::frame(1, 0);
        let b = t.bracket_sections(&mu, &e1).unwrap();
        assert_eq!(b.coeffs[0].simplify().as_const(), Some(-1.0));
    }

    #[test]
    fn rank_mismatch_is_reported() {
        let t = tangent_algebroid(2);
        assert!(matches!(t.anchor_apply(&Section::zero(3)), Err(AlgebroidError::RankMismatch { .. })));
    }
}
