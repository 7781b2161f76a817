//! Linear connections on `E`, E-connections on `E` and `TN`, the basic
//! connection pair, torsion, curvatures and the basic curvature.
//!
//! Table layouts, all with the output index first:
//!
//! | object                | layout            | meaning                               |
//! |-----------------------|-------------------|---------------------------------------|
//! | [`LinearConnection`]  | `[a][b][α]`       | `∇_{∂_α} e_b = ω^a_{bα} e_a`          |
//! | [`EConnOnE`]          | `[a][b][c]`       | `∇_{e_b} e_c = B^a_{bc} e_a`          |
//! | [`EConnOnTN`]         | `[α][a][β]`       | `∇_{e_a} ∂_β = G^α_{aβ} ∂_α`          |
//! | [`BasicCurvature`]    | `[a][b][c][β]`    | `R^bas(e_b,e_c)∂_β = S^a_{bcβ} e_a`   |
//! | [`CurvatureTable`]    | `[i][s][t][j]`    | `R(slot s, slot t) f_j`, component i  |

use std::time::Instant;

use thiserror::Error;

use crate::algebroid::{AlgebroidError, LieAlgebroid, Section, VectorFieldN};
use crate::check::{self, CheckResult};
use crate::expr::Expr;
use crate::sampling::Sampling;
use crate::table::Table;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConnectionError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Algebroid(#[from] AlgebroidError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearConnection {
    r: usize,
    n: usize,
    omega: Table,
}

impl LinearConnection {
    /// Sparse constructor from `(a, b, α, ω^a_{bα})`; absent entries are zero.
    pub fn new(
        rank: usize,
        base_dim: usize,
        entries: impl IntoIterator<Item = (usize, usize, usize, Expr)>,
    ) -> Result<LinearConnection, ConnectionError> {
        let mut omega = Table::zeros(&[rank, rank, base_dim]);
        for (a, b, alpha, e) in entries {
            if a >= rank || b >= rank || alpha >= base_dim {
                return Err(ConnectionError::Shape(format!(
                    "connection index ({}, {}, {}) outside rank {rank}, base dimension {base_dim}",
                    a + 1,
                    b + 1,
                    alpha + 1
                )));
            }
            let v = (omega.get(&[a, b, alpha]) + e).simplify();
            omega.set(&[a, b, alpha], v);
        }
        Ok(LinearConnection { r: rank, n: base_dim, omega })
    }

    /// The canonical flat connection of the global frame.
    pub fn flat(rank: usize, base_dim: usize) -> LinearConnection {
        LinearConnection { r: rank, n: base_dim, omega: Table::zeros(&[rank, rank, base_dim]) }
    }

    pub fn from_table(omega: Table) -> LinearConnection {
        let s = omega.shape().to_vec();
        assert!(s.len() == 3 && s[0] == s[1], "connection table must be r x r x n");
        LinearConnection { r: s[0], n: s[2], omega }
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn base_dim(&self) -> usize {
        self.n
    }

    /// `ω^a_{bα}`.
    pub fn omega(&self, a: usize, b: usize, alpha: usize) -> &Expr {
        self.omega.get(&[a, b, alpha])
    }

    pub fn table(&self) -> &Table {
        &self.omega
    }

    pub fn is_flat_frame(&self) -> bool {
        self.omega.data().iter().all(|e| e.simplify().is_zero())
    }

    pub fn digest_parts(&self, l: &LieAlgebroid) -> Vec<String> {
        self.omega.data().iter().map(|e| e.display(l.space()).to_string()).collect()
    }

    pub fn check_shape(&self, l: &LieAlgebroid) -> Result<(), ConnectionError> {
        if self.r != l.rank() || self.n != l.base_dim() {
            return Err(ConnectionError::Shape(format!(
                "connection is for rank {} over dimension {}, algebroid has rank {} over dimension {}",
                self.r,
                self.n,
                l.rank(),
                l.base_dim()
            )));
        }
        Ok(())
    }

    /// `(∇_X μ)^a = X^α (∂_α μ^a + ω^a_{bα} μ^b)`.
    pub fn covariant_derivative(&self, x: &VectorFieldN, mu: &Section) -> Section {
        let coeffs = (0..self.r)
            .map(|a| {
                let mut terms = Vec::new();
                for (alpha, xa) in x.coeffs.iter().enumerate() {
                    if xa.is_zero() {
                        continue;
                    }
                    let mut inner = vec![mu.coeffs[a].diff(alpha)];
                    for b in 0..self.r {
                        let w = self.omega(a, b, alpha);
                        if !w.is_zero() {
                            inner.push(w * &mu.coeffs[b]);
                        }
                    }
                    terms.push(xa * Expr::sum(inner));
                }
                Expr::sum(terms).simplify()
            })
            .collect();
        Section { coeffs }
    }

    /// Coefficients in the frame `e'_a = M^b_a e_b`:
    /// `ω'^a_{bα} = (M⁻¹)^a_f (∂_α M^f_b + ω^f_{cα} M^c_b)`.
    pub fn change_frame(&self, m: &[Vec<Expr>], m_inv: &[Vec<Expr>]) -> LinearConnection {
        let r = self.r;
        let omega = Table::from_fn(&[r, r, self.n], |i| {
            let (a, b, alpha) = (i[0], i[1], i[2]);
            let mut terms = Vec::new();
            for f in 0..r {
                let mut inner = vec![m[f][b].diff(alpha)];
                for c in 0..r {
                    inner.push(self.omega(f, c, alpha) * &m[c][b]);
                }
                terms.push(&m_inv[a][f] * Expr::sum(inner));
            }
            Expr::sum(terms).simplify()
        });
        LinearConnection { r, n: self.n, omega }
    }
}

/// Shared behaviour of E-connections: coefficient table `K[i][b][j]` with
/// `∇_{e_b} f_j = K^i_{bj} f_i` for the frame `(f_j)` of the target bundle.
pub trait EConnection {
    fn coefficients(&self) -> &Table;

    fn fiber_dim(&self) -> usize {
        self.coefficients().shape()[0]
    }

    fn rank(&self) -> usize {
        self.coefficients().shape()[1]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EConnOnE {
    pub b: Table,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EConnOnTN {
    pub g: Table,
}

impl EConnection for EConnOnE {
    fn coefficients(&self) -> &Table {
        &self.b
    }
}

impl EConnection for EConnOnTN {
    fn coefficients(&self) -> &Table {
        &self.g
    }
}

impl EConnOnE {
    pub fn zero(rank: usize) -> EConnOnE {
        EConnOnE { b: Table::zeros(&[rank, rank, rank]) }
    }

    /// `∇_μ v` for sections of `E`.
    pub fn apply(&self, l: &LieAlgebroid, mu: &Section, v: &Section) -> Result<Section, ConnectionError> {
        Ok(Section { coeffs: apply_econn(l, self, &mu.coeffs, &v.coeffs)? })
    }
}

impl EConnOnTN {
    pub fn zero(rank: usize, base_dim: usize) -> EConnOnTN {
        EConnOnTN { g: Table::zeros(&[base_dim, rank, base_dim]) }
    }

    /// `∇_μ X` for vector fields on the base.
    pub fn apply(&self, l: &LieAlgebroid, mu: &Section, x: &VectorFieldN) -> Result<VectorFieldN, ConnectionError> {
        Ok(VectorFieldN { coeffs: apply_econn(l, self, &mu.coeffs, &x.coeffs)? })
    }
}

/// `(∇_μ v)^i = μ^b K^i_{bj} v^j + ρ^α_b μ^b ∂_α v^i`.
pub fn apply_econn(l: &LieAlgebroid, conn: &dyn EConnection, mu: &[Expr], v: &[Expr]) -> Result<Vec<Expr>, ConnectionError> {
    let k = conn.coefficients();
    let f = conn.fiber_dim();
    let r = l.rank();
    if mu.len() != r || v.len() != f || conn.rank() != r {
        return Err(ConnectionError::Shape(format!(
            "E-connection on a rank-{f} bundle applied to a section with {} and a target with {} coefficients",
            mu.len(),
            v.len()
        )));
    }
    let x = l.anchor_apply(&Section::new(mu.to_vec()))?;
    Ok((0..f)
        .map(|i| {
            let mut terms = Vec::new();
            for (b, mub) in mu.iter().enumerate() {
                if mub.is_zero() {
                    continue;
                }
                for (j, vj) in v.iter().enumerate() {
                    let kij = k.get(&[i, b, j]);
                    if !kij.is_zero() && !vj.is_zero() {
                        terms.push(Expr::product([mub.clone(), kij.clone(), vj.clone()]));
                    }
                }
            }
            terms.push(x.apply(&v[i]));
            Expr::sum(terms).simplify()
        })
        .collect())
}

fn require(l: &LieAlgebroid, conn: &LinearConnection) -> Result<(), ConnectionError> {
    conn.check_shape(l)
}

/// `∇_ρ`: `B^a_{bc} = ρ^α_b ω^a_{cα}`.
pub fn nabla_rho(l: &LieAlgebroid, conn: &LinearConnection) -> Result<EConnOnE, ConnectionError> {
    require(l, conn)?;
    let (r, n) = (l.rank(), l.base_dim());
    Ok(EConnOnE {
        b: Table::from_fn(&[r, r, r], |i| {
            let (a, b, c) = (i[0], i[1], i[2]);
            Expr::sum((0..n).map(|alpha| l.rho(alpha, b) * conn.omega(a, c, alpha)).collect::<Vec<_>>()).simplify()
        }),
    })
}

/// Basic connection on `E`: `B^a_{bc} = C^a_{bc} + ρ^α_c ω^a_{bα}`.
pub fn basic_connection_e(l: &LieAlgebroid, conn: &LinearConnection) -> Result<EConnOnE, ConnectionError> {
    require(l, conn)?;
    let (r, n) = (l.rank(), l.base_dim());
    Ok(EConnOnE {
        b: Table::from_fn(&[r, r, r], |i| {
            let (a, b, c) = (i[0], i[1], i[2]);
            let mut terms = vec![l.c(a, b, c).clone()];
            terms.extend((0..n).map(|alpha| l.rho(alpha, c) * conn.omega(a, b, alpha)));
            Expr::sum(terms).simplify()
        }),
    })
}

/// Basic connection on `TN`: `G^α_{aβ} = −∂_β ρ^α_a + ρ^α_c ω^c_{aβ}`.
pub fn basic_connection_tn(l: &LieAlgebroid, conn: &LinearConnection) -> Result<EConnOnTN, ConnectionError> {
    require(l, conn)?;
    let (r, n) = (l.rank(), l.base_dim());
    Ok(EConnOnTN {
        g: Table::from_fn(&[n, r, n], |i| {
            let (alpha, a, beta) = (i[0], i[1], i[2]);
            let mut terms = vec![-l.rho(alpha, a).diff(beta)];
            terms.extend((0..r).map(|c| l.rho(alpha, c) * conn.omega(c, a, beta)));
            Expr::sum(terms).simplify()
        }),
    })
}

/// `t^a_{bc} = B^a_{bc} − B^a_{cb} − C^a_{bc}`, layout `[a][b][c]`.
pub fn torsion(l: &LieAlgebroid, conn: &EConnOnE) -> Result<Table, ConnectionError> {
    let r = l.rank();
    if conn.b.shape() != [r, r, r] {
        return Err(ConnectionError::Shape("E-connection table does not match the rank".into()));
    }
    Ok(Table::from_fn(&[r, r, r], |i| {
        let (a, b, c) = (i[0], i[1], i[2]);
        (conn.b.get(&[a, b, c]) - conn.b.get(&[a, c, b]) - l.c(a, b, c)).simplify()
    }))
}

/// Curvature components, layout `[i][s][t][j]`: component `i` of `R(s, t) f_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureTable {
    pub table: Table,
}

impl CurvatureTable {
    pub fn get(&self, i: usize, s: usize, t: usize, j: usize) -> &Expr {
        self.table.get(&[i, s, t, j])
    }

    /// Residuals `R(s,t) + R(t,s)` for all entries.
    pub fn antisymmetry_residuals(&self) -> Vec<Expr> {
        let sh = self.table.shape();
        let mut out = Vec::new();
        for i in 0..sh[0] {
            for s in 0..sh[1] {
                for t in s..sh[2] {
                    for j in 0..sh[3] {
                        out.push((self.get(i, s, t, j) + self.get(i, t, s, j)).simplify());
                    }
                }
            }
        }
        out
    }
}

/// `R(e_a,e_b) f_j = ∇_a ∇_b f_j − ∇_b ∇_a f_j − C^c_{ab} ∇_c f_j`,
/// computed by applying the connection to frame sections.
pub fn curvature_econn(l: &LieAlgebroid, conn: &dyn EConnection) -> Result<CurvatureTable, ConnectionError> {
    let (r, f) = (l.rank(), conn.fiber_dim());
    if conn.rank() != r {
        return Err(ConnectionError::Shape("E-connection rank does not match the algebroid".into()));
    }
    let e = |a: usize| Section::frame(r, a).coeffs;
    let fr = |j: usize| Section::frame(f, j).coeffs;
    // first[b][j] = ∇_{e_b} f_j
    let mut first = vec![vec![Vec::new(); f]; r];
    for (b, row) in first.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = apply_econn(l, conn, &e(b), &fr(j))?;
        }
    }
    let mut table = Table::zeros(&[f, r, r, f]);
    for a in 0..r {
        for b in 0..r {
            for j in 0..f {
                let ab = apply_econn(l, conn, &e(a), &first[b][j])?;
                let ba = apply_econn(l, conn, &e(b), &first[a][j])?;
                for i in 0..f {
                    let mut terms = vec![ab[i].clone(), -&ba[i]];
                    for c in 0..r {
                        terms.push(-(l.c(c, a, b) * &first[c][j][i]));
                    }
                    table.set(&[i, a, b, j], Expr::sum(terms).simplify());
                }
            }
        }
    }
    Ok(CurvatureTable { table })
}

/// `R_∇(∂_α, ∂_β) e_b`, layout `[a][α][β][b]`:
/// `∂_α ω^a_{bβ} − ∂_β ω^a_{bα} + ω^a_{cα} ω^c_{bβ} − ω^a_{cβ} ω^c_{bα}`.
pub fn curvature_linear(l: &LieAlgebroid, conn: &LinearConnection) -> Result<CurvatureTable, ConnectionError> {
    require(l, conn)?;
    let (r, n) = (l.rank(), l.base_dim());
    let table = Table::from_fn(&[r, n, n, r], |i| {
        let (a, alpha, beta, b) = (i[0], i[1], i[2], i[3]);
        let mut terms = vec![conn.omega(a, b, beta).diff(alpha), -conn.omega(a, b, alpha).diff(beta)];
        for c in 0..r {
            terms.push(conn.omega(a, c, alpha) * conn.omega(c, b, beta));
            terms.push(-(conn.omega(a, c, beta) * conn.omega(c, b, alpha)));
        }
        Expr::sum(terms).simplify()
    });
    Ok(CurvatureTable { table })
}

/// Basic curvature, layout `[a][b][c][β]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasicCurvature {
    pub s: Table,
}

impl BasicCurvature {
    /// `S^a_{bcβ}`.
    pub fn get(&self, a: usize, b: usize, c: usize, beta: usize) -> &Expr {
        self.s.get(&[a, b, c, beta])
    }

    /// `R^bas(μ, ν)` as the `E`-valued 1-form `S^a_{bcβ} μ^b ν^c dx^β`, layout `[a][β]`.
    pub fn contract(&self, mu: &Section, nu: &Section) -> Vec<Vec<Expr>> {
        let sh = self.s.shape();
        let (r, n) = (sh[0], sh[3]);
        (0..r)
            .map(|a| {
                (0..n)
                    .map(|beta| {
                        let mut terms = Vec::new();
                        for b in 0..r {
                            for c in 0..r {
                                let s = self.get(a, b, c, beta);
                                if !s.is_zero() {
                                    terms.push(Expr::product([s.clone(), mu.coeffs[b].clone(), nu.coeffs[c].clone()]));
                                }
                            }
                        }
                        Expr::sum(terms).simplify()
                    })
                    .collect()
            })
            .collect()
    }
}

/// `R^bas(μ,ν)X = ∇_X[μ,ν] − [∇_Xμ,ν] − [μ,∇_Xν] − ∇_{∇^bas_ν X}μ + ∇_{∇^bas_μ X}ν`
/// on frame sections and coordinate vector fields.
pub fn basic_curvature(l: &LieAlgebroid, conn: &LinearConnection) -> Result<BasicCurvature, ConnectionError> {
    require(l, conn)?;
    let (r, n) = (l.rank(), l.base_dim());
    let g = basic_connection_tn(l, conn)?;
    let mut s = Table::zeros(&[r, r, r, n]);
    for beta in 0..n {
        let x = VectorFieldN::coordinate(n, beta);
        let nabla_x: Vec<Section> = (0..r).map(|b| conn.covariant_derivative(&x, &Section::frame(r, b))).collect();
        let bas_x: Vec<VectorFieldN> =
            (0..r).map(|b| g.apply(l, &Section::frame(r, b), &x)).collect::<Result<_, _>>()?;
        for b in 0..r {
            for c in 0..r {
                let (eb, ec) = (Section::frame(r, b), Section::frame(r, c));
                let t1 = conn.covariant_derivative(&x, &l.bracket_sections(&eb, &ec)?);
                let t2 = l.bracket_sections(&nabla_x[b], &ec)?;
                let t3 = l.bracket_sections(&eb, &nabla_x[c])?;
                let t4 = conn.covariant_derivative(&bas_x[c], &eb);
                let t5 = conn.covariant_derivative(&bas_x[b], &ec);
                for a in 0..r {
                    let v = &t1.coeffs[a] - &t2.coeffs[a] - &t3.coeffs[a] - &t4.coeffs[a] + &t5.coeffs[a];
                    s.set(&[a, b, c, beta], v.simplify());
                }
            }
        }
    }
    Ok(BasicCurvature { s })
}

/// Residuals of the three basic-connection relations.
#[derive(Clone, Debug)]
pub struct BasicRelationResiduals {
    /// `R_{∇bas,E}(e_a,e_b)e_c + R^bas(e_a,e_b)ρ(e_c)`.
    pub on_e: Vec<Expr>,
    /// `R_{∇bas,TN}(e_a,e_b)∂_β + ρ(R^bas(e_a,e_b)∂_β)`.
    pub on_tn: Vec<Expr>,
    /// `R^bas(e_b,e_c)∂_β − (∇_β t)(e_b,e_c) + R_∇(ρ(e_b),∂_β)e_c − R_∇(ρ(e_c),∂_β)e_b`.
    pub torsion_identity: Vec<Expr>,
}

impl BasicRelationResiduals {
    pub fn all(&self) -> Vec<Expr> {
        self.on_e.iter().chain(&self.on_tn).chain(&self.torsion_identity).cloned().collect()
    }
}

/// Builds the relation residuals from a given basic curvature table, so that
/// a deliberately altered table can be tested as well.
pub fn basic_relation_residuals_with(
    l: &LieAlgebroid,
    conn: &LinearConnection,
    s: &BasicCurvature,
) -> Result<BasicRelationResiduals, ConnectionError> {
    require(l, conn)?;
    let (r, n) = (l.rank(), l.base_dim());
    let be = basic_connection_e(l, conn)?;
    let gt = basic_connection_tn(l, conn)?;
    let curv_e = curvature_econn(l, &be)?;
    let curv_tn = curvature_econn(l, &gt)?;
    let curv = curvature_linear(l, conn)?;
    let t = torsion(l, &be)?;

    let mut on_e = Vec::new();
    let mut on_tn = Vec::new();
    let mut torsion_identity = Vec::new();
    for a in 0..r {
        for b in 0..r {
            for c in 0..r {
                for d in 0..r {
                    let mut terms = vec![curv_e.get(d, a, b, c).clone()];
                    for beta in 0..n {
                        terms.push(s.get(d, a, b, beta) * l.rho(beta, c));
                    }
                    on_e.push(Expr::sum(terms).simplify());
                }
            }
            for beta in 0..n {
                for alpha in 0..n {
                    let mut terms = vec![curv_tn.get(alpha, a, b, beta).clone()];
                    for d in 0..r {
                        terms.push(l.rho(alpha, d) * s.get(d, a, b, beta));
                    }
                    on_tn.push(Expr::sum(terms).simplify());
                }
            }
        }
    }
    for a in 0..r {
        for b in 0..r {
            for c in 0..r {
                for beta in 0..n {
                    let mut nabla_t = vec![t.get(&[a, b, c]).diff(beta)];
                    for d in 0..r {
                        nabla_t.push(conn.omega(a, d, beta) * t.get(&[d, b, c]));
                        nabla_t.push(-(t.get(&[a, d, c]) * conn.omega(d, b, beta)));
                        nabla_t.push(-(t.get(&[a, b, d]) * conn.omega(d, c, beta)));
                    }
                    let mut terms = vec![s.get(a, b, c, beta).clone(), -Expr::sum(nabla_t)];
                    for alpha in 0..n {
                        terms.push(l.rho(alpha, b) * curv.get(a, alpha, beta, c));
                        terms.push(-(l.rho(alpha, c) * curv.get(a, alpha, beta, b)));
                    }
                    torsion_identity.push(Expr::sum(terms).simplify());
                }
            }
        }
    }
    Ok(BasicRelationResiduals { on_e, on_tn, torsion_identity })
}

pub fn basic_relation_residuals(l: &LieAlgebroid, conn: &LinearConnection) -> Result<BasicRelationResiduals, ConnectionError> {
    let s = basic_curvature(l, conn)?;
    basic_relation_residuals_with(l, conn, &s)
}

pub fn check_basic_relations(
    l: &LieAlgebroid,
    conn: &LinearConnection,
    sampling: &Sampling,
    tol: f64,
) -> Result<CheckResult, ConnectionError> {
    let started = Instant::now();
    let res = basic_relation_residuals(l, conn)?;
    let m = check::vanishes(&res.all(), &sampling.points(l.base_dim()));
    let mut parts = l.digest_parts();
    parts.extend(conn.digest_parts(l));
    Ok(CheckResult::new("basic-relations", check::digest(&parts), sampling, m, tol, started))
}

/// First Bianchi identity for an E-connection on `E` with torsion:
/// `Σ_cyc R(e_a,e_b)e_c − Σ_cyc t(t(e_a,e_b),e_c) − Σ_cyc (∇_{e_a} t)(e_b,e_c)`.
pub fn first_bianchi_residuals(l: &LieAlgebroid, conn: &EConnOnE) -> Result<Vec<Expr>, ConnectionError> {
    let r = l.rank();
    let curv = curvature_econn(l, conn)?;
    let t = torsion(l, conn)?;
    let t_sec = |b: usize, c: usize| -> Vec<Expr> { (0..r).map(|i| t.get(&[i, b, c]).clone()).collect() };
    let mut out = Vec::new();
    for a in 0..r {
        for b in a + 1..r {
            for c in b + 1..r {
                let mut per_i: Vec<Vec<Expr>> = vec![Vec::new(); r];
                for (x, y, z) in [(a, b, c), (b, c, a), (c, a, b)] {
                    let applied = apply_econn(l, conn, &Section::frame(r, x).coeffs, &t_sec(y, z))?;
                    for (i, terms) in per_i.iter_mut().enumerate() {
                        terms.push(curv.get(i, x, y, z).clone());
                        terms.push(-&applied[i]);
                        for d in 0..r {
                            terms.push(-(t.get(&[d, x, y]) * t.get(&[i, d, z])));
                            terms.push(conn.b.get(&[d, x, y]) * t.get(&[i, d, z]));
                            terms.push(conn.b.get(&[d, x, z]) * t.get(&[i, y, d]));
                        }
                    }
                }
                out.extend(per_i.into_iter().map(|terms| Expr::sum(terms).simplify()));
            }
        }
    }
    Ok(out)
}

/// `ρ(∇^bas_{e_b} e_c) − ∇^bas_{e_b} ρ(e_c)` for all `b, c`.
pub fn anchor_compatibility_residuals(l: &LieAlgebroid, conn: &LinearConnection) -> Result<Vec<Expr>, ConnectionError> {
    let (r, n) = (l.rank(), l.base_dim());
    let be = basic_connection_e(l, conn)?;
    let gt = basic_connection_tn(l, conn)?;
    let mut out = Vec::new();
    for b in 0..r {
        for c in 0..r {
            let rhs = gt.apply(l, &Section::frame(r, b), &l.anchor_apply(&Section::frame(r, c))?)?;
            for alpha in 0..n {
                let lhs = Expr::sum((0..r).map(|a| l.rho(alpha, a) * be.b.get(&[a, b, c])).collect::<Vec<_>>());
                out.push((lhs - &rhs.coeffs[alpha]).simplify());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::tangent_algebroid;

    #[test]
    fn nabla_rho_on_tangent_plane() {
        let l = tangent_algebroid(2);
        let conn = LinearConnection::new(2, 2, [(0, 0, 0, Expr::var(1))]).unwrap();
        let b = nabla_rho(&l, &conn).unwrap();
        assert_eq!(b.b.get(&[0, 0, 0]), &Expr::var(1));
        assert!(b.b.get(&[0, 1, 0]).is_zero());
    }

    #[test]
    fn shape_errors() {
        let l = tangent_algebroid(2);
        let conn = LinearConnection::flat(3, 2);
        assert!(matches!(basic_connection_e(&l, &conn), Err(ConnectionError::Shape(_))));
        assert!(LinearConnection::new(2, 2, [(2, 0, 0, Expr::one())]).is_err());
    }
}
