//! Registry of named identity checks and the suite runner.
//!
//! | id  | statement checked |
//! |-----|-------------------|
//! | V1  | anchor is a bracket homomorphism |
//! | V2  | Jacobi identity of the frame structure functions |
//! | V3  | curvatures of the basic connections and the torsion identity for `R^bas` |
//! | V4  | `R^bas` is antisymmetric |
//! | V5  | `δ_ε𝔇 = 0` |
//! | V6  | `R_δ(*μ,*ν)ϖ₂ = −Φ^!(R^bas(μ,ν))` |
//! | V7  | `⟦*μ,*ν⟧ = *[μ,ν]_E`, and `∇`-independence of `⟦·,·⟧` and of `δ` on A-free functionals |
//! | V8  | Jacobi identity of `⟦·,·⟧` (needs `R^bas = 0`) |
//! | V9  | first Bianchi identity of `∇^bas` on `E` |
//! | V10 | flow commutator equals `−h²Ψ_⟦ε,ϑ⟧` (needs `R^bas = 0`) |
//! | V11 | flat action-algebroid case: `δ` is the component Lie derivative, classical formulas |
//! | V12 | graded sign rule and `Φ^!F = (1/l!)(Φ*F)(DΦ∧…∧DΦ)` |
//! | V13 | `R_δ(ϑ,ε)(*x^α) = 0` |
//! | V14 | `δA^a` is covariant under a field-dependent frame change |
//! | V15 | finite-difference flow oracle reproduces `δ` on `𝔇`, `ϖ₂`, `*x^α` with O(h²) error |

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebroid::{LieAlgebroid, Section};
use crate::check::{self, fmax, CheckResult, Measure};
use crate::connections::{
    basic_connection_e, basic_curvature, basic_relation_residuals, first_bianchi_residuals, LinearConnection,
};
use crate::expr::{Expr, Tape};
use crate::forms::{form_pullback, pullback_by_graded_extension, wedge_extend, Bundle, Chart, MultiTensor, VForm};
use crate::gauge::{
    closure_defect, fd_delta_oracle, gauge_a, gauge_higgs, minimal_coupling, FieldConfig, FlowRhs, GaugeContext,
    GaugeError, GaugeParameter, JetFunctional, JetPoint, JetSpace,
};
use crate::sampling::{random_polynomial, Sampling};
use crate::scenario::Scenario;
use crate::table::Table;
use crate::tolerances;

/// Identifier, one-line statement and default tolerance of a check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckInfo {
    pub id: &'static str,
    pub statement: &'static str,
    pub tolerance: f64,
}

pub const CHECKS: [CheckInfo; 15] = [
    CheckInfo { id: "V1", statement: "anchor is a homomorphism of brackets", tolerance: tolerances::SYMBOLIC },
    CheckInfo { id: "V2", statement: "Jacobi identity of the structure functions", tolerance: tolerances::SYMBOLIC },
    CheckInfo { id: "V3", statement: "basic-connection curvature relations", tolerance: tolerances::SYMBOLIC_LONG },
    CheckInfo { id: "V4", statement: "basic curvature is antisymmetric", tolerance: tolerances::SYMBOLIC },
    CheckInfo { id: "V5", statement: "minimal coupling is gauge invariant", tolerance: tolerances::SYMBOLIC },
    CheckInfo { id: "V6", statement: "R_delta on pullbacks equals minus the pulled-back basic curvature", tolerance: tolerances::SYMBOLIC_LONG },
    CheckInfo { id: "V7", statement: "pre-bracket of pullbacks and independence of the connection", tolerance: tolerances::SYMBOLIC },
    CheckInfo { id: "V8", statement: "Jacobi identity of the pre-bracket", tolerance: tolerances::SYMBOLIC_LONG },
    CheckInfo { id: "V9", statement: "first Bianchi identity of the basic connection", tolerance: tolerances::SYMBOLIC_LONG },
    CheckInfo { id: "V10", statement: "closure of the flow commutator", tolerance: tolerances::FLOW_COMMUTATOR },
    CheckInfo { id: "V11", statement: "flat action-algebroid case recovers the classical formulas", tolerance: tolerances::SYMBOLIC },
    CheckInfo { id: "V12", statement: "graded sign rule and graded pullback identity", tolerance: tolerances::SYMBOLIC },
    CheckInfo { id: "V13", statement: "R_delta vanishes on Higgs coordinates", tolerance: tolerances::SYMBOLIC },
    CheckInfo { id: "V14", statement: "frame-change covariance of the gauge-boson variation", tolerance: tolerances::SYMBOLIC_LONG },
    CheckInfo { id: "V15", statement: "finite-difference flow oracle agrees with the jet calculus", tolerance: tolerances::FLOW_ORACLE },
];

pub fn check_info(id: &str) -> Option<&'static CheckInfo> {
    CHECKS.iter().find(|c| c.id.eq_ignore_ascii_case(id))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("unknown check id {0:?}")]
    UnknownCheck(String),
    #[error("check {id} does not apply to this scenario: {reason}")]
    Precondition { id: String, reason: String },
    #[error("inconsistent scenario: {0}")]
    Scenario(String),
}

impl From<GaugeError> for VerifyError {
    fn from(e: GaugeError) -> Self {
        VerifyError::Scenario(e.to_string())
    }
}

/// Suite settings; `None` fields keep the scenario's or the check's default.
#[derive(Clone, Debug, Default)]
pub struct SuiteOptions {
    /// Requested ids; empty means every check whose preconditions hold.
    pub checks: Vec<String>,
    pub seed: Option<u64>,
    pub points: Option<usize>,
    pub half_width: Option<f64>,
    /// Overrides every default tolerance.
    pub tolerance: Option<f64>,
    /// Per-check overrides, applied after `tolerance`.
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub id: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

impl Environment {
    pub fn current() -> Environment {
        Environment {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub version: String,
    pub environment: Environment,
    pub scenario: String,
    pub results: Vec<CheckResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<Skipped>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }
}

/// Shared inputs of all checks for one scenario.
struct Env<'a> {
    s: &'a Scenario,
    sampling: Sampling,
    jet: JetSpace,
    ctx: GaugeContext,
    eps: GaugeParameter,
    theta: GaugeParameter,
    eta: GaugeParameter,
    x_points: Vec<Vec<f64>>,
    jet_points: Vec<Vec<f64>>,
    u_points: Vec<Vec<f64>>,
}

type Outcome = Result<Measure, GaugeError>;

impl<'a> Env<'a> {
    fn new(s: &'a Scenario, sampling: Sampling) -> Result<Env<'a>, VerifyError> {
        let jet = s.jet();
        let ctx = GaugeContext::new(&s.algebroid, &s.connection, jet.d)?;
        let eps = ctx.parameter(s.epsilon.clone())?;
        let theta = ctx.parameter(s.theta.clone())?;
        let eta = ctx.parameter(s.eta.clone())?;
        s.config.check_shape(&jet)?;
        Ok(Env {
            x_points: sampling.points(jet.n),
            jet_points: sampling.stream(jet.len(), 1),
            u_points: sampling.stream(jet.d, 2),
            s,
            sampling,
            jet,
            ctx,
            eps,
            theta,
            eta,
        })
    }

    fn l(&self) -> &LieAlgebroid {
        &self.s.algebroid
    }

    fn params(&self) -> [&GaugeParameter; 3] {
        [&self.eps, &self.theta, &self.eta]
    }

    fn config_points(&self, limit: usize) -> Result<Vec<JetPoint>, GaugeError> {
        self.u_points.iter().take(limit).map(|u| JetPoint::from_config(&self.s.config, u)).collect()
    }

    fn basic_curvature_magnitude(&self) -> Result<f64, GaugeError> {
        let s = basic_curvature(self.l(), &self.s.connection)?;
        Ok(check::vanishes(s.s.data(), &self.x_points).max_residual)
    }

    fn precondition(&self, id: &str) -> Result<Option<String>, GaugeError> {
        Ok(match id {
            "V8" | "V10" => {
                let m = self.basic_curvature_magnitude()?;
                (m > tolerances::ROUNDING_FLOOR).then(|| format!("basic curvature does not vanish (max {m:.3e})"))
            }
            "V11" => {
                if !self.s.connection.is_flat_frame() {
                    Some("connection is not the canonical flat one".into())
                } else if self.l().c_table().data().iter().any(|e| !e.simplify().variables().is_empty()) {
                    Some("structure functions are not constant".into())
                } else {
                    None
                }
            }
            _ => None,
        })
    }

    fn run(&self, id: &str) -> Outcome {
        match id {
            "V1" => Ok(check::vanishes(&self.l().anchor_morphism_residuals(), &self.x_points)),
            "V2" => Ok(vanish_or_empty(&self.l().jacobi_residuals(), &self.x_points)),
            "V3" => Ok(check::vanishes(&basic_relation_residuals(self.l(), &self.s.connection)?.all(), &self.x_points)),
            "V4" => self.v4(),
            "V5" => self.v5(),
            "V6" => self.v6(),
            "V7" => self.v7(),
            "V8" => self.v8(),
            "V9" => {
                let b = basic_connection_e(self.l(), &self.s.connection)?;
                Ok(vanish_or_empty(&first_bianchi_residuals(self.l(), &b)?, &self.x_points))
            }
            "V10" => self.v10(),
            "V11" => self.v11(),
            "V12" => self.v12(),
            "V13" => self.v13(),
            "V14" => self.v14(),
            "V15" => self.v15(),
            other => unreachable!("unregistered check {other}"),
        }
    }

    fn v4(&self) -> Outcome {
        let s = basic_curvature(self.l(), &self.s.connection)?;
        let (r, n) = (self.jet.r, self.jet.n);
        let mut res = Vec::new();
        for a in 0..r {
            for b in 0..r {
                for c in b..r {
                    for beta in 0..n {
                        res.push((s.get(a, b, c, beta) + s.get(a, c, b, beta)).simplify());
                    }
                }
            }
        }
        Ok(check::vanishes(&res, &self.x_points))
    }

    fn v5(&self) -> Outcome {
        let dc = minimal_coupling(self.l(), &self.jet);
        let mut res = Vec::new();
        for p in self.params() {
            res.extend(self.ctx.delta(p, &dc)?.coefficients());
        }
        Ok(check::vanishes(&res, &self.jet_points))
    }

    fn v6(&self) -> Outcome {
        let (mu, nu) = (&self.s.mu, &self.s.nu);
        let lhs = self.ctx.r_delta(
            &self.ctx.pullback(mu)?,
            &self.ctx.pullback(nu)?,
            &JetFunctional::gauge_boson(&self.jet),
        )?;
        let lhs = lhs.at_config(&self.s.config);
        let rb = basic_curvature(self.l(), &self.s.connection)?.contract(mu, nu);
        let form = VForm::from_fn(Chart::N, self.jet.n, 1, Bundle::E, self.jet.r, |a, b| rb[a][b[0]].clone())?;
        let rhs = form_pullback(&self.s.config.phi, self.jet.d, &form)?.scale(&Expr::constant(-1.0));
        Ok(check::compare(&lhs.flat(), Some(&rhs.flat()), &self.u_points))
    }

    /// A second connection: the scenario's plus a seeded polynomial perturbation.
    fn other_connection(&self) -> LinearConnection {
        let n = self.jet.n;
        let base = self.s.connection.table();
        let shape = base.shape().to_vec();
        LinearConnection::from_table(Table::from_fn(&shape, |i| {
            let salt = i.iter().fold(0xD00u64, |acc, k| acc * 31 + *k as u64 + 1);
            (base.get(i) + seeded_polynomial(&self.sampling, salt, n, 2, 2)).simplify()
        }))
    }

    fn v7(&self) -> Outcome {
        let l = self.l();
        let (mu, nu) = (&self.s.mu, &self.s.nu);
        let br = self.ctx.pre_bracket(&self.ctx.pullback(mu)?, &self.ctx.pullback(nu)?)?;
        let direct = self.ctx.pullback(&l.bracket_sections(mu, nu)?)?;
        let mut m = check::compare(&br.coeffs, Some(&direct.coeffs), &self.jet_points);

        let other = GaugeContext::with_lifts(l, &self.other_connection(), self.jet.d, self.ctx.lift_e.clone(), self.ctx.lift_tn.clone())?;
        let b1 = self.ctx.pre_bracket_from_torsion(&self.theta, &self.eps)?;
        let b2 = other.pre_bracket_from_torsion(&self.theta, &self.eps)?;
        m = m.merge(check::compare(&b1.coeffs, Some(&b2.coeffs), &self.jet_points));

        let a_free = [
            JetFunctional::higgs_coordinate(&self.jet, 0),
            JetFunctional::total_differential(&self.jet),
            JetFunctional::pullback_section(&self.jet, mu),
        ];
        for f in &a_free {
            let d1 = self.ctx.delta(&self.eps, f)?.coefficients();
            let d2 = other.delta(&self.eps, f)?.coefficients();
            m = m.merge(check::compare(&d1, Some(&d2), &self.jet_points));
        }
        Ok(m)
    }

    fn v8(&self) -> Outcome {
        let c = &self.ctx;
        let (e, t, h) = (&self.eps, &self.theta, &self.eta);
        let terms = [c.pre_bracket(h, &c.pre_bracket(t, e)?)?, c.pre_bracket(t, &c.pre_bracket(e, h)?)?, c.pre_bracket(e, &c.pre_bracket(h, t)?)?];
        let res: Vec<Expr> = (0..self.jet.r)
            .map(|a| Expr::sum(terms.iter().map(|p| p.coeffs[a].clone()).collect::<Vec<_>>()).simplify())
            .collect();
        Ok(check::vanishes(&res, &self.jet_points))
    }

    /// Richardson-extrapolated `D(h)/h²` against `−Ψ_⟦ε,ϑ⟧` on `x` and `A`, plus the h-scaling ratio.
    fn v10(&self) -> Outcome {
        let h = tolerances::HOLONOMY_STEP;
        let points = self.config_points(self.sampling.points.min(50))?;
        let bracket = self.ctx.pre_bracket(&self.eps, &self.theta)?;
        let rhs = FlowRhs::new(&self.ctx, &bracket)?;
        let (n, d) = (self.jet.n, self.jet.d);
        let keep = |i: usize| i < n || i >= n + n * d;
        let per_point: Vec<Result<(Measure, f64, f64), GaugeError>> = points
            .par_iter()
            .map(|p| {
                let d1 = closure_defect(&self.ctx, &self.eps, &self.theta, p, h, 4)?;
                let d2 = closure_defect(&self.ctx, &self.eps, &self.theta, p, h / 2.0, 4)?;
                let v = rhs.velocity(&p.u, &p.y)?;
                let mut m = Measure { points: 1, ..Measure::default() };
                let (mut big, mut small) = (0.0f64, 0.0f64);
                for i in (0..v.len()).filter(|&i| keep(i)) {
                    let est = 2.0 * d2[i] / (h * h / 4.0) - d1[i] / (h * h);
                    m.record((est + v[i]).abs(), v[i].abs());
                    big = fmax(big, d1[i].abs());
                    small = fmax(small, d2[i].abs());
                }
                Ok((m, big, small))
            })
            .collect();
        let mut m = Measure { points: points.len(), ..Measure::default() };
        let (mut big, mut small) = (0.0f64, 0.0f64);
        for r in per_point {
            let (pm, b, s) = r?;
            m = m.merge(pm);
            big = fmax(big, b);
            small = fmax(small, s);
        }
        m.points = points.len();
        if big > tolerances::ROUNDING_FLOOR {
            let ratio = big / small;
            let (lo, hi) = tolerances::RICHARDSON_RATIO;
            if !(lo..=hi).contains(&ratio) {
                m.max_residual = f64::INFINITY;
                m.diagnostic = Some(format!("defect ratio D(h)/D(h/2) = {ratio:.3}, expected about 4"));
            } else {
                m.diagnostic = Some(format!("defect ratio D(h)/D(h/2) = {ratio:.3}"));
            }
        }
        Ok(m)
    }

    fn v11(&self) -> Outcome {
        let l = self.l();
        let jet = self.jet;
        // with ω = 0 the lifts ∇_ρ vanish, so the frame is parallel
        let flat = GaugeContext::with_nabla_rho_lifts(l, &self.s.connection, &self.s.connection, jet.d)?;
        let points = self.config_points(self.sampling.points)?;
        let rhs = FlowRhs::new(&flat, &self.eps)?;
        let functionals = [
            JetFunctional::higgs_coordinate(&jet, 0),
            JetFunctional::gauge_boson(&jet),
            minimal_coupling(l, &jet),
            JetFunctional::pullback_section(&jet, &self.s.mu),
        ];
        let mut m = Measure { points: points.len(), ..Measure::default() };
        for f in &functionals {
            let coeffs = f.coefficients();
            let delta = flat.delta(&self.eps, f)?.coefficients();
            let grads: Vec<Expr> = coeffs.iter().flat_map(|c| (0..jet.len()).map(move |i| c.diff(i))).collect();
            let gt = Tape::new(grads.iter());
            let dt = Tape::new(delta.iter());
            for p in &points {
                let env = p.jet();
                let g = gt.eval(&env)?;
                let dv = dt.eval(&env)?;
                let vel = rhs.velocity(&p.u, &p.y)?;
                for (k, dk) in dv.iter().enumerate() {
                    let lie: f64 = (0..jet.n + jet.n * jet.d + jet.r * jet.d).map(|i| g[k * jet.len() + jet.d + i] * vel[i]).sum();
                    m.record((dk - lie).abs(), dk.abs());
                }
            }
        }
        // u-only parameter: classical Higgs rotation and [ε, A] − dε
        let zero_x: Vec<Expr> = (0..jet.d).map(Expr::var).chain((0..jet.n).map(|_| Expr::zero())).collect();
        let eps_u = flat.parameter(self.eps.coeffs.iter().map(|e| e.substitute(&zero_x).simplify()).collect())?;
        let cfg = &self.s.config;
        let dphi = gauge_higgs(&flat, cfg, &eps_u)?;
        let da = gauge_a(&flat, cfg, &eps_u)?;
        let e_u: Vec<Expr> = eps_u.coeffs.clone();
        let (r, n, d) = (jet.r, jet.n, jet.d);
        let mut lhs = Vec::new();
        let mut classical = Vec::new();
        for alpha in 0..n {
            lhs.push(dphi[alpha].clone());
            let gamma: Vec<Expr> = (0..r).map(|a| l.rho(alpha, a).substitute(&cfg.phi) * &e_u[a]).collect();
            classical.push(-Expr::sum(gamma));
        }
        for a in 0..r {
            for mu in 0..d {
                lhs.push(da[a][mu].clone());
                let mut terms = vec![-e_u[a].diff(mu)];
                for b in 0..r {
                    for c in 0..r {
                        if let Some(k) = l.c(a, b, c).as_const().filter(|k| *k != 0.0) {
                            terms.push(k * &e_u[b] * &cfg.a[c][mu]);
                        }
                    }
                }
                classical.push(Expr::sum(terms));
            }
        }
        Ok(m.merge(check::compare(&lhs, Some(&classical), &self.u_points)))
    }

    fn v12(&self) -> Outcome {
        let (n, r, d) = (self.jet.n, self.jet.r, self.jet.d);
        let mut m = Measure { points: self.x_points.len(), ..Measure::default() };
        let sampling = self.sampling;
        let coeff = move |salt: u64| move |t: usize, mi: &[usize]| {
            let k = mi.iter().fold(t as u64, |acc, i| acc * 7 + *i as u64 + 1);
            seeded_polynomial(&sampling, salt * 1000 + k, n, 2, 3)
        };
        // graded sign rule for the structure tensor C (antisymmetric E ⊗ E → E) on N
        let c_tensor = MultiTensor::new(Chart::N, vec![Bundle::E, Bundle::E], Bundle::E, self.l().c_table().clone())?;
        for k in 0..=2usize {
            for mm in 0..=2usize {
                if k + mm > n.min(3) {
                    continue;
                }
                let a = VForm::from_fn(Chart::N, n, k, Bundle::E, r, coeff(0xF0 + (3 * k + mm) as u64))?;
                let b = VForm::from_fn(Chart::N, n, mm, Bundle::E, r, coeff(0xF8 + (3 * k + mm) as u64))?;
                let ab = wedge_extend(&c_tensor, &[&a, &b])?;
                let ba = wedge_extend(&c_tensor, &[&b, &a])?;
                let sign = if (k * mm) % 2 == 0 { 1.0 } else { -1.0 };
                let res = ab.add(&ba.scale(&Expr::constant(sign)))?;
                m = m.merge(check::vanishes(&res.flat(), &self.x_points));
            }
        }
        // pullback identity for a seeded E-valued form of degree min(2, n) on N
        let deg = n.min(2);
        let omega = VForm::from_fn(Chart::N, n, deg, Bundle::E, r, coeff(0xF1))?;
        let phi = &self.s.config.phi;
        let direct = form_pullback(phi, d, &omega)?;
        let graded = pullback_by_graded_extension(phi, d, &omega)?;
        let mut pm = check::compare(&direct.flat(), Some(&graded.flat()), &self.u_points);
        if direct.flat().is_empty() {
            pm = Measure { points: self.u_points.len(), ..Measure::default() };
        }
        Ok(m.merge(pm))
    }

    fn v13(&self) -> Outcome {
        let mut res = Vec::new();
        for alpha in 0..self.jet.n {
            let f = JetFunctional::higgs_coordinate(&self.jet, alpha);
            res.extend(self.ctx.r_delta(&self.theta, &self.eps, &f)?.coefficients());
        }
        Ok(check::vanishes(&res, &self.jet_points))
    }

    fn v14(&self) -> Outcome {
        let l = self.l();
        let (n, r, d) = (self.jet.n, self.jet.r, self.jet.d);
        let (m, m_inv) = frame_change(n, r);
        let l2 = l.change_frame(&m, &m_inv)?;
        let conn2 = self.s.connection.change_frame(&m, &m_inv);
        let ctx2 = GaugeContext::new(&l2, &conn2, d)?;
        let cfg = &self.s.config;
        let at_phi = |e: &Expr| e.substitute(&cfg.phi);
        let a2: Vec<Vec<Expr>> = (0..r)
            .map(|a| {
                (0..d)
                    .map(|mu| Expr::sum((0..r).map(|b| at_phi(&m_inv[a][b]) * &cfg.a[b][mu]).collect::<Vec<_>>()).simplify())
                    .collect()
            })
            .collect();
        let cfg2 = FieldConfig::new(d, cfg.phi.clone(), a2)?;
        let jet = self.jet;
        let eps2 = ctx2.parameter(
            (0..r)
                .map(|a| Expr::sum((0..r).map(|b| jet.lift_base(&m_inv[a][b]) * &self.eps.coeffs[b]).collect::<Vec<_>>()).simplify())
                .collect(),
        )?;
        let lhs: Vec<Expr> = gauge_a(&ctx2, &cfg2, &eps2)?.into_iter().flatten().collect();
        let mut rhs = Vec::new();
        for a in 0..r {
            for mu in 0..d {
                let comp = Expr::sum((0..r).map(|b| jet.lift_base(&m_inv[a][b]) * Expr::var(jet.a(b, mu))).collect::<Vec<_>>());
                let f = JetFunctional::scalar(&jet, comp.simplify());
                rhs.push(self.ctx.delta(&self.eps, &f)?.at_config(cfg).flat()[0].clone());
            }
        }
        Ok(check::compare(&lhs, Some(&rhs), &self.u_points))
    }

    fn v15(&self) -> Outcome {
        let h = tolerances::HOLONOMY_STEP;
        let points = self.config_points(self.sampling.points.min(50))?;
        let functionals =
            [minimal_coupling(self.l(), &self.jet), JetFunctional::gauge_boson(&self.jet), JetFunctional::higgs_coordinate(&self.jet, 0)];
        let mut m = Measure { points: points.len(), ..Measure::default() };
        let (mut e1, mut e2) = (0.0f64, 0.0f64);
        for f in &functionals {
            let exact = self.ctx.delta(&self.eps, f)?.coefficients();
            let tape = Tape::new(exact.iter());
            let fd1 = fd_delta_oracle(&self.ctx, &self.eps, f, &points, h, 4)?;
            let fd2 = fd_delta_oracle(&self.ctx, &self.eps, f, &points, h / 2.0, 4)?;
            for (k, p) in points.iter().enumerate() {
                let ex = tape.eval(&p.jet())?;
                for i in 0..ex.len() {
                    let err = (fd1.values[k][i] - ex[i]).abs();
                    m.record(err, ex[i].abs());
                    e1 = fmax(e1, err);
                    e2 = fmax(e2, (fd2.values[k][i] - ex[i]).abs());
                }
            }
        }
        if e1 > tolerances::ROUNDING_FLOOR * 100.0 {
            let ratio = e1 / e2;
            let (lo, hi) = tolerances::RICHARDSON_RATIO;
            if !(lo..=hi).contains(&ratio) {
                m.max_residual = f64::INFINITY;
                m.diagnostic = Some(format!("error ratio at h and h/2 is {ratio:.3}, expected about 4"));
            } else {
                m.diagnostic = Some(format!("error ratio at h and h/2 is {ratio:.3}"));
            }
        }
        Ok(m)
    }
}

fn seeded_polynomial(sampling: &Sampling, salt: u64, nvars: usize, degree: u32, terms: usize) -> Expr {
    random_polynomial(&mut sampling.rng(salt), nvars, degree, terms)
}

fn vanish_or_empty(res: &[Expr], pts: &[Vec<f64>]) -> Measure {
    if res.is_empty() {
        Measure { points: pts.len(), ..Measure::default() }
    } else {
        check::vanishes(res, pts)
    }
}

/// Field-dependent frame `e'_a = M^b_a e_b` with `M = U·diag(1 + cos(x)/10)`, `U`
/// unipotent upper triangular with `sin` entries. Returns `(m[b][a], m_inv[a][b])`.
pub fn frame_change(n: usize, r: usize) -> (Vec<Vec<Expr>>, Vec<Vec<Expr>>) {
    let x = |i: usize| Expr::var(i % n);
    let nil: Vec<Vec<Expr>> = (0..r)
        .map(|b| (0..r).map(|a| if b < a { 0.2 * x(a + b).sin() } else { Expr::zero() }).collect())
        .collect();
    let diag: Vec<Expr> = (0..r).map(|a| (1.0 + 0.1 * x(a + 1).cos()).simplify()).collect();
    let m: Vec<Vec<Expr>> = (0..r)
        .map(|b| (0..r).map(|a| ((if a == b { Expr::one() } else { nil[b][a].clone() }) * &diag[a]).simplify()).collect())
        .collect();
    // U⁻¹ = Σ_k (−N)^k, finite because N is nilpotent
    let mul = |p: &[Vec<Expr>], q: &[Vec<Expr>]| -> Vec<Vec<Expr>> {
        (0..r)
            .map(|i| (0..r).map(|j| Expr::sum((0..r).map(|k| &p[i][k] * &q[k][j]).collect::<Vec<_>>()).simplify()).collect())
            .collect()
    };
    let neg: Vec<Vec<Expr>> = nil.iter().map(|row| row.iter().map(|e| (-e).simplify()).collect()).collect();
    let mut power: Vec<Vec<Expr>> = (0..r).map(|i| (0..r).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect()).collect();
    let mut u_inv = power.clone();
    for _ in 1..r {
        power = mul(&power, &neg);
        u_inv = u_inv.iter().zip(&power).map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x + y).simplify()).collect()).collect();
    }
    let m_inv = (0..r).map(|a| (0..r).map(|b| (&u_inv[a][b] / &diag[a]).simplify()).collect()).collect();
    (m, m_inv)
}

/// Runs the requested checks (or every applicable one) on a scenario.
pub fn run_suite(s: &Scenario, opts: &SuiteOptions) -> Result<VerificationReport, VerifyError> {
    let mut requested = Vec::new();
    for id in &opts.checks {
        let info = check_info(id).ok_or_else(|| VerifyError::UnknownCheck(id.clone()))?;
        if !requested.contains(&info.id) {
            requested.push(info.id);
        }
    }
    let mut overrides = BTreeMap::new();
    for (id, &tol) in &opts.tolerances {
        let info = check_info(id).ok_or_else(|| VerifyError::UnknownCheck(id.clone()))?;
        overrides.insert(info.id, tol);
    }
    let mut sampling = s.sampling;
    if let Some(seed) = opts.seed {
        sampling.seed = seed;
    }
    if let Some(p) = opts.points {
        sampling.points = p;
    }
    if let Some(b) = opts.half_width {
        sampling.half_width = b;
    }
    if sampling.points == 0 || sampling.half_width.is_nan() || sampling.half_width <= 0.0 {
        return Err(VerifyError::Scenario("sampling needs at least one point and a positive box".into()));
    }
    let env = Env::new(s, sampling)?;
    let explicit = !requested.is_empty();
    let candidates: Vec<&'static str> = if explicit { requested } else { CHECKS.iter().map(|c| c.id).collect() };
    let mut run = Vec::new();
    let mut skipped = Vec::new();
    for id in candidates {
        match env.precondition(id)? {
            None => run.push(id),
            Some(reason) if explicit => return Err(VerifyError::Precondition { id: id.into(), reason }),
            Some(reason) => skipped.push(Skipped { id: id.into(), reason }),
        }
    }
    let base_digest = s.digest_parts();
    let results = run
        .par_iter()
        .map(|&id| {
            let info = check_info(id).expect("registered");
            let tol = overrides.get(id).copied().or(opts.tolerance).unwrap_or(info.tolerance);
            let started = Instant::now();
            let m = env.run(id).unwrap_or_else(|e| Measure::failed(0, e.to_string()));
            let mut parts = base_digest.clone();
            parts.push(id.to_string());
            parts.push(format!("{}:{}:{}", sampling.seed, sampling.points, sampling.half_width));
            CheckResult::new(id, check::digest(&parts), &sampling, m, tol, started)
        })
        .collect();
    Ok(VerificationReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        environment: Environment::current(),
        scenario: s.name.clone(),
        results,
        skipped,
    })
}

/// Sections used by the pullback checks, exposed for callers that build their own.
pub fn scenario_sections(s: &Scenario) -> (Section, Section) {
    (s.mu.clone(), s.nu.clone())
}
