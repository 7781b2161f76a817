//! Fields, gauge parameters, and the infinitesimal gauge derivation `δ_ε`.
//!
//! Functionals are represented by their coefficients over jet symbols
//! `(u^μ, x^α, G^α_μ, A^a_μ)`: a configuration `(Φ, A)` is plugged in through
//! `x → Φ(u)`, `G^α_μ → ∂_μΦ^α(u)` and `A → A(u)`. On these coefficients
//! `δ_ε` acts as the derivation fixed by its values on the symbols, followed by
//! the frame correction of the target bundle's E-connection. Because the class
//! is closed under `δ_ε`, iterated variations stay exact.

mod flow;

pub use flow::{
    closure_defect, fd_delta_oracle, flow, flow_grid, flow_step, FdOracle, FlowRhs, FlowState, GridFlow, GridSpec,
    JetPoint,
};

use thiserror::Error;

use crate::algebroid::{AlgebroidError, LieAlgebroid, Section, VectorFieldN};
use crate::connections::{
    basic_connection_e, basic_connection_tn, nabla_rho, torsion, ConnectionError, EConnOnE, EConnOnTN, EConnection,
    LinearConnection,
};
use crate::expr::{EvalError, Expr, VarSpace};
use crate::forms::{multi_indices, Bundle, Chart, FormError, VForm};
use crate::table::Table;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaugeError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("symbol {index} is outside the jet space of length {len}")]
    UnsupportedSymbol { index: usize, len: usize },
    #[error("gauge parameter outside the supported class: {0}")]
    ClassViolation(String),
    #[error("flow produced a non-finite value: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Connection(#[from] ConnectionError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl From<AlgebroidError> for GaugeError {
    fn from(e: AlgebroidError) -> Self {
        GaugeError::Connection(ConnectionError::Algebroid(e))
    }
}

/// Index layout of jet symbols: `u` (d), `x` (n), `G` (n·d), `A` (r·d).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JetSpace {
    pub d: usize,
    pub n: usize,
    pub r: usize,
}

impl JetSpace {
    pub fn new(d: usize, n: usize, r: usize) -> JetSpace {
        JetSpace { d, n, r }
    }

    pub fn u(&self, mu: usize) -> usize {
        mu
    }

    pub fn x(&self, alpha: usize) -> usize {
        self.d + alpha
    }

    pub fn g(&self, alpha: usize, mu: usize) -> usize {
        self.d + self.n + alpha * self.d + mu
    }

    pub fn a(&self, a: usize, mu: usize) -> usize {
        self.d + self.n + self.n * self.d + a * self.d + mu
    }

    /// Number of `(u, x)` symbols, the domain of gauge parameters.
    pub fn param_len(&self) -> usize {
        self.d + self.n
    }

    pub fn len(&self) -> usize {
        self.d + self.n + self.n * self.d + self.r * self.d
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn var_space(&self) -> VarSpace {
        let mut names: Vec<String> = (1..=self.d).map(|i| format!("u{i}")).collect();
        names.extend((1..=self.n).map(|i| format!("x{i}")));
        for alpha in 1..=self.n {
            names.extend((1..=self.d).map(|mu| format!("G_{alpha}_{mu}")));
        }
        for a in 1..=self.r {
            names.extend((1..=self.d).map(|mu| format!("A_{a}_{mu}")));
        }
        VarSpace::new(names).expect("jet symbol names are distinct identifiers")
    }

    /// Space of gauge-parameter expressions: `u1..ud, x1..xn`.
    pub fn param_space(&self) -> VarSpace {
        let mut names: Vec<String> = (1..=self.d).map(|i| format!("u{i}")).collect();
        names.extend((1..=self.n).map(|i| format!("x{i}")));
        VarSpace::new(names).expect("parameter names are distinct identifiers")
    }

    /// Moves an expression over base coordinates `x` into jet indices.
    pub fn lift_base(&self, e: &Expr) -> Expr {
        let d = self.d;
        e.remap(&|i| d + i)
    }

    /// Total derivative `D_μ = ∂_{u^μ} + G^β_μ ∂_{x^β}` of a `(u, x)` expression.
    pub fn total_derivative(&self, e: &Expr, mu: usize) -> Expr {
        let mut terms = vec![e.diff(self.u(mu))];
        for beta in 0..self.n {
            if e.depends_on(self.x(beta)) {
                terms.push(Expr::var(self.g(beta, mu)) * e.diff(self.x(beta)));
            }
        }
        Expr::sum(terms).simplify()
    }
}

/// Higgs and gauge-boson components over spacetime coordinates `u1..ud`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldConfig {
    pub d: usize,
    /// `Φ^α(u)`.
    pub phi: Vec<Expr>,
    /// `A^a_μ(u)`, layout `[a][μ]`.
    pub a: Vec<Vec<Expr>>,
}

impl FieldConfig {
    pub fn new(d: usize, phi: Vec<Expr>, a: Vec<Vec<Expr>>) -> Result<FieldConfig, GaugeError> {
        if a.iter().any(|row| row.len() != d) {
            return Err(GaugeError::Shape(format!("every A row needs {d} spacetime components")));
        }
        for e in phi.iter().chain(a.iter().flatten()) {
            if let Some(&i) = e.variables().iter().find(|&&i| i >= d) {
                return Err(GaugeError::Shape(format!("field component uses coordinate {i} beyond spacetime dimension {d}")));
            }
        }
        Ok(FieldConfig { d, phi, a })
    }

    pub fn check_shape(&self, jet: &JetSpace) -> Result<(), GaugeError> {
        if self.d != jet.d || self.phi.len() != jet.n || self.a.len() != jet.r {
            return Err(GaugeError::Shape(format!(
                "config has d={}, {} Higgs and {} boson components; expected d={}, n={}, r={}",
                self.d,
                self.phi.len(),
                self.a.len(),
                jet.d,
                jet.n,
                jet.r
            )));
        }
        Ok(())
    }

    /// Expressions over `u` replacing each jet symbol.
    pub fn jet_substitution(&self) -> Vec<Expr> {
        let mut s: Vec<Expr> = (0..self.d).map(Expr::var).collect();
        s.extend(self.phi.iter().cloned());
        for p in &self.phi {
            s.extend((0..self.d).map(|mu| p.diff(mu).simplify()));
        }
        s.extend(self.a.iter().flatten().cloned());
        s
    }

    /// Substitution for `(u, x)` expressions: `x → Φ(u)`.
    pub fn param_substitution(&self) -> Vec<Expr> {
        let mut s: Vec<Expr> = (0..self.d).map(Expr::var).collect();
        s.extend(self.phi.iter().cloned());
        s
    }
}

/// `ε̂^a(u, x)`; the field-dependent section is `ε^a(u) = ε̂^a(u, Φ(u))`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeParameter {
    pub coeffs: Vec<Expr>,
}

impl GaugeParameter {
    /// Rejects any dependence beyond the `(u, x)` symbols.
    pub fn new(jet: &JetSpace, coeffs: Vec<Expr>) -> Result<GaugeParameter, GaugeError> {
        if coeffs.len() != jet.r {
            return Err(GaugeError::Shape(format!("parameter has {} components, rank is {}", coeffs.len(), jet.r)));
        }
        for e in &coeffs {
            if let Some(&i) = e.variables().iter().find(|&&i| i >= jet.param_len()) {
                return Err(GaugeError::ClassViolation(format!(
                    "component depends on jet symbol {i}; only spacetime and Higgs coordinates are allowed"
                )));
            }
        }
        Ok(GaugeParameter { coeffs })
    }

    /// Pullback `*μ` of a section over `N`.
    pub fn pullback(jet: &JetSpace, mu: &Section) -> Result<GaugeParameter, GaugeError> {
        GaugeParameter::new(jet, mu.coeffs.iter().map(|c| jet.lift_base(c)).collect())
    }

    pub fn zero(jet: &JetSpace) -> GaugeParameter {
        GaugeParameter { coeffs: vec![Expr::zero(); jet.r] }
    }

    pub fn combine(&self, s: f64, other: &GaugeParameter, t: f64) -> GaugeParameter {
        GaugeParameter {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (s * a + t * b).simplify()).collect(),
        }
    }

    /// `ε^a(u)` for a configuration.
    pub fn on_config(&self, config: &FieldConfig) -> Vec<Expr> {
        let s = config.param_substitution();
        self.coeffs.iter().map(|c| c.substitute(&s).simplify()).collect()
    }

    pub fn as_functional(&self, jet: &JetSpace) -> JetFunctional {
        JetFunctional::zero_form(jet, Bundle::E, self.coeffs.clone())
    }
}

/// Form-valued functional: a degree-k form on spacetime with values in
/// `*V`, `V ∈ {trivial, E, TN}`, coefficients over jet symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct JetFunctional {
    pub form: VForm,
}

impl JetFunctional {
    fn build(jet: &JetSpace, degree: usize, target: Bundle, f: impl Fn(usize, &[usize]) -> Expr) -> JetFunctional {
        let dim = target_dim(jet, target);
        JetFunctional { form: VForm::from_fn(Chart::M, jet.d, degree, target, dim, f).expect("degree at most one") }
    }

    /// Degree-0 functional with the given components.
    pub fn zero_form(jet: &JetSpace, target: Bundle, values: Vec<Expr>) -> JetFunctional {
        JetFunctional::build(jet, 0, target, |t, _| values[t].clone())
    }

    pub fn from_form(form: VForm) -> JetFunctional {
        JetFunctional { form }
    }

    pub fn scalar(jet: &JetSpace, e: Expr) -> JetFunctional {
        JetFunctional::zero_form(jet, Bundle::Scalar, vec![e])
    }

    /// `*(x^α)`, a coordinate of the Higgs field.
    pub fn higgs_coordinate(jet: &JetSpace, alpha: usize) -> JetFunctional {
        JetFunctional::scalar(jet, Expr::var(jet.x(alpha)))
    }

    /// `D`, the total differential `DΦ`: `G^α_μ du^μ`.
    pub fn total_differential(jet: &JetSpace) -> JetFunctional {
        JetFunctional::build(jet, 1, Bundle::TN, |alpha, mu| Expr::var(jet.g(alpha, mu[0])))
    }

    /// `ϖ₂`, projection onto the gauge bosons: `A^a_μ du^μ`.
    pub fn gauge_boson(jet: &JetSpace) -> JetFunctional {
        JetFunctional::build(jet, 1, Bundle::E, |a, mu| Expr::var(jet.a(a, mu[0])))
    }

    /// `(*ρ)(ϖ₂)`: `ρ^α_a(x) A^a_μ du^μ`.
    pub fn anchored_boson(l: &LieAlgebroid, jet: &JetSpace) -> JetFunctional {
        JetFunctional::build(jet, 1, Bundle::TN, |alpha, mu| {
            Expr::sum((0..jet.r).map(|a| jet.lift_base(l.rho(alpha, a)) * Expr::var(jet.a(a, mu[0]))).collect::<Vec<_>>())
                .simplify()
        })
    }

    /// `*v` for a section of `E`.
    pub fn pullback_section(jet: &JetSpace, v: &Section) -> JetFunctional {
        JetFunctional::zero_form(jet, Bundle::E, v.coeffs.iter().map(|c| jet.lift_base(c)).collect())
    }

    /// `*X` for a vector field on `N`.
    pub fn pullback_vector(jet: &JetSpace, x: &VectorFieldN) -> JetFunctional {
        JetFunctional::zero_form(jet, Bundle::TN, x.coeffs.iter().map(|c| jet.lift_base(c)).collect())
    }

    /// `!ω` for a form on `N`: `Σ ω_{α_1…α_k}(x) G^{α_1}_{μ_1} ⋯ G^{α_k}_{μ_k}`.
    pub fn pullback_form(jet: &JetSpace, omega: &VForm) -> Result<JetFunctional, GaugeError> {
        if omega.chart() != Chart::N || omega.dim() != jet.n {
            return Err(GaugeError::Shape("pullback functional needs a form on N".into()));
        }
        let k = omega.degree();
        let mut tuples = vec![Vec::new()];
        for _ in 0..k {
            tuples = tuples.into_iter().flat_map(|t: Vec<usize>| (0..jet.n).map(move |a| [t.clone(), vec![a]].concat())).collect();
        }
        let form = VForm::from_fn(Chart::M, jet.d, k, omega.target(), omega.target_dim(), |t, mus| {
            let mut terms = Vec::new();
            for alphas in &tuples {
                let c = omega.component(t, alphas);
                if c.is_zero() {
                    continue;
                }
                let mut factors = vec![jet.lift_base(&c)];
                factors.extend(mus.iter().zip(alphas).map(|(&mu, &alpha)| Expr::var(jet.g(alpha, mu))));
                terms.push(Expr::product(factors));
            }
            Expr::sum(terms).simplify()
        })?;
        Ok(JetFunctional { form })
    }

    pub fn degree(&self) -> usize {
        self.form.degree()
    }

    pub fn target(&self) -> Bundle {
        self.form.target()
    }

    /// All coefficients, target-major then increasing multi-index.
    pub fn coefficients(&self) -> Vec<Expr> {
        self.form.flat()
    }

    pub fn add(&self, other: &JetFunctional) -> Result<JetFunctional, GaugeError> {
        Ok(JetFunctional { form: self.form.add(&other.form)? })
    }

    pub fn sub(&self, other: &JetFunctional) -> Result<JetFunctional, GaugeError> {
        Ok(JetFunctional { form: self.form.sub(&other.form)? })
    }

    pub fn scale(&self, s: f64) -> JetFunctional {
        JetFunctional { form: self.form.scale(&Expr::constant(s)) }
    }

    /// Evaluation at a configuration: a form on spacetime over `u`.
    pub fn at_config(&self, config: &FieldConfig) -> VForm {
        let s = config.jet_substitution();
        self.form.map(|e| e.substitute(&s).simplify())
    }

    fn max_symbol(&self) -> Option<usize> {
        self.coefficients().iter().flat_map(|e| e.variables()).max()
    }
}

fn target_dim(jet: &JetSpace, target: Bundle) -> usize {
    match target {
        Bundle::Scalar => 1,
        Bundle::E => jet.r,
        Bundle::TN => jet.n,
    }
}

/// Algebroid, connection and target-bundle lifts, with coefficient tables
/// already moved into jet indices.
#[derive(Clone, Debug)]
pub struct GaugeContext {
    pub algebroid: LieAlgebroid,
    pub connection: LinearConnection,
    pub jet: JetSpace,
    /// E-connection used for `E`-valued targets; basic connection by default.
    pub lift_e: EConnOnE,
    /// E-connection used for `TN`-valued targets; basic connection by default.
    pub lift_tn: EConnOnTN,
    rho: Table,
    c: Table,
    omega: Table,
    lift_e_jet: Table,
    lift_tn_jet: Table,
}

impl GaugeContext {
    pub fn new(l: &LieAlgebroid, conn: &LinearConnection, d: usize) -> Result<GaugeContext, GaugeError> {
        let e = basic_connection_e(l, conn)?;
        let tn = basic_connection_tn(l, conn)?;
        GaugeContext::with_lifts(l, conn, d, e, tn)
    }

    /// Context whose target lifts are `∇_ρ` of the given connection on `E`
    /// and the flat `∇_ρ` (zero table) on `TN`.
    pub fn with_nabla_rho_lifts(
        l: &LieAlgebroid,
        conn: &LinearConnection,
        lift_from: &LinearConnection,
        d: usize,
    ) -> Result<GaugeContext, GaugeError> {
        let e = nabla_rho(l, lift_from)?;
        GaugeContext::with_lifts(l, conn, d, e, EConnOnTN::zero(l.rank(), l.base_dim()))
    }

    pub fn with_lifts(
        l: &LieAlgebroid,
        conn: &LinearConnection,
        d: usize,
        lift_e: EConnOnE,
        lift_tn: EConnOnTN,
    ) -> Result<GaugeContext, GaugeError> {
        conn.check_shape(l)?;
        let (n, r) = (l.base_dim(), l.rank());
        if d == 0 {
            return Err(GaugeError::Shape("spacetime dimension must be at least 1".into()));
        }
        if lift_e.b.shape() != [r, r, r] || lift_tn.g.shape() != [n, r, n] {
            return Err(GaugeError::Shape("lift tables do not match the algebroid".into()));
        }
        let jet = JetSpace::new(d, n, r);
        let lift = |t: &Table| t.map(|e| jet.lift_base(e));
        Ok(GaugeContext {
            rho: lift(l.rho_table()),
            c: lift(l.c_table()),
            omega: lift(conn.table()),
            lift_e_jet: lift(&lift_e.b),
            lift_tn_jet: lift(&lift_tn.g),
            algebroid: l.clone(),
            connection: conn.clone(),
            jet,
            lift_e,
            lift_tn,
        })
    }

    pub fn d(&self) -> usize {
        self.jet.d
    }

    /// `ρ^α_a(x)` in jet indices (the algebroid stores rows by `a`).
    pub fn rho(&self, alpha: usize, a: usize) -> &Expr {
        self.rho.get(&[a, alpha])
    }

    /// `C^a_{bc}(x)` in jet indices.
    pub fn c(&self, a: usize, b: usize, c: usize) -> &Expr {
        self.c.get(&[a, b, c])
    }

    /// `ω^a_{bα}(x)` in jet indices.
    pub fn omega(&self, a: usize, b: usize, alpha: usize) -> &Expr {
        self.omega.get(&[a, b, alpha])
    }

    pub fn parameter(&self, coeffs: Vec<Expr>) -> Result<GaugeParameter, GaugeError> {
        GaugeParameter::new(&self.jet, coeffs)
    }

    pub fn pullback(&self, mu: &Section) -> Result<GaugeParameter, GaugeError> {
        GaugeParameter::pullback(&self.jet, mu)
    }

    fn check_parameter(&self, eps: &GaugeParameter) -> Result<(), GaugeError> {
        GaugeParameter::new(&self.jet, eps.coeffs.clone()).map(|_| ())
    }

    /// `δx^α = −ρ^α_a(x) ε̂^a`.
    pub fn delta_x(&self, eps: &GaugeParameter) -> Vec<Expr> {
        (0..self.jet.n)
            .map(|alpha| {
                -Expr::sum((0..self.jet.r).map(|a| self.rho(alpha, a) * &eps.coeffs[a]).collect::<Vec<_>>()).simplify()
            })
            .map(|e| e.simplify())
            .collect()
    }

    /// Values of `δ` on every jet symbol; `u` is inert.
    pub fn symbol_variations(&self, eps: &GaugeParameter) -> Vec<Expr> {
        let jet = self.jet;
        let (d, n, r) = (jet.d, jet.n, jet.r);
        let dx = self.delta_x(eps);
        let mut out = vec![Expr::zero(); jet.len()];
        for alpha in 0..n {
            out[jet.x(alpha)] = dx[alpha].clone();
            for mu in 0..d {
                out[jet.g(alpha, mu)] = jet.total_derivative(&dx[alpha], mu);
            }
        }
        for a in 0..r {
            for mu in 0..d {
                out[jet.a(a, mu)] = self.delta_a_symbol(eps, a, mu);
            }
        }
        out
    }

    /// `δA^a_μ = C^a_{bc}ε̂^bA^c_μ + ω^a_{bα}ρ^α_c ε̂^bA^c_μ − D_με̂^a − ε̂^b ω^a_{bα} G^α_μ`.
    fn delta_a_symbol(&self, eps: &GaugeParameter, a: usize, mu: usize) -> Expr {
        let jet = self.jet;
        let (n, r) = (jet.n, jet.r);
        let mut terms = Vec::new();
        for b in 0..r {
            if eps.coeffs[b].is_zero() {
                continue;
            }
            for c in 0..r {
                let mut coef = vec![self.c(a, b, c).clone()];
                coef.extend((0..n).map(|alpha| self.omega(a, b, alpha) * self.rho(alpha, c)));
                let coef = Expr::sum(coef).simplify();
                if !coef.is_zero() {
                    terms.push(Expr::product([coef, eps.coeffs[b].clone(), Expr::var(jet.a(c, mu))]));
                }
            }
            for alpha in 0..n {
                let w = self.omega(a, b, alpha);
                if !w.is_zero() {
                    terms.push(-Expr::product([eps.coeffs[b].clone(), w.clone(), Expr::var(jet.g(alpha, mu))]));
                }
            }
        }
        terms.push(-jet.total_derivative(&eps.coeffs[a], mu));
        Expr::sum(terms).simplify()
    }

    fn lift_coefficients(&self, target: Bundle) -> Option<&Table> {
        match target {
            Bundle::Scalar => None,
            Bundle::E => Some(&self.lift_e_jet),
            Bundle::TN => Some(&self.lift_tn_jet),
        }
    }

    /// `Ψ_ε` applied to one scalar coefficient: the chain rule through the symbol variations.
    pub fn lie_derivative(&self, variations: &[Expr], e: &Expr) -> Expr {
        let terms: Vec<Expr> = e
            .variables()
            .into_iter()
            .filter(|&i| !variations[i].is_zero())
            .map(|i| e.diff(i) * &variations[i])
            .collect();
        Expr::sum(terms).simplify()
    }

    /// `δ_ε F`: componentwise `Ψ_ε F^i − ε̂^b K^i_{bj}(x) F^j` with `K` the target lift.
    pub fn delta(&self, eps: &GaugeParameter, f: &JetFunctional) -> Result<JetFunctional, GaugeError> {
        self.check_parameter(eps)?;
        if let Some(i) = f.max_symbol().filter(|&i| i >= self.jet.len()) {
            return Err(GaugeError::UnsupportedSymbol { index: i, len: self.jet.len() });
        }
        let expected = target_dim(&self.jet, f.target());
        if f.form.target_dim() != expected || f.form.dim() != self.jet.d {
            return Err(GaugeError::Shape("functional does not match the context".into()));
        }
        let vars = self.symbol_variations(eps);
        let lift = self.lift_coefficients(f.target());
        let rows = f.form.rows();
        let form = VForm::from_fn(Chart::M, self.jet.d, f.degree(), f.target(), expected, |i, mi| {
            let pos = multi_indices(self.jet.d, mi.len()).iter().position(|m| m == mi).expect("increasing");
            let mut terms = vec![self.lie_derivative(&vars, &rows[i][pos])];
            if let Some(k) = lift {
                for (b, eb) in eps.coeffs.iter().enumerate() {
                    if eb.is_zero() {
                        continue;
                    }
                    for (j, row) in rows.iter().enumerate() {
                        let kij = k.get(&[i, b, j]);
                        if !kij.is_zero() && !row[pos].is_zero() {
                            terms.push(-Expr::product([eb.clone(), kij.clone(), row[pos].clone()]));
                        }
                    }
                }
            }
            Expr::sum(terms).simplify()
        })?;
        Ok(JetFunctional { form })
    }

    /// `⟦ϑ, ε⟧^a = Ψ_εϑ̂^a − Ψ_ϑε̂^a + ϑ̂^b ε̂^c C^a_{bc}(x)`.
    pub fn pre_bracket(&self, theta: &GaugeParameter, eps: &GaugeParameter) -> Result<GaugeParameter, GaugeError> {
        self.check_parameter(theta)?;
        self.check_parameter(eps)?;
        let ve = self.symbol_variations(eps);
        let vt = self.symbol_variations(theta);
        let r = self.jet.r;
        let coeffs = (0..r)
            .map(|a| {
                let mut terms = vec![self.lie_derivative(&ve, &theta.coeffs[a]), -self.lie_derivative(&vt, &eps.coeffs[a])];
                for b in 0..r {
                    for c in 0..r {
                        let cabc = self.c(a, b, c);
                        if !cabc.is_zero() {
                            terms.push(Expr::product([theta.coeffs[b].clone(), eps.coeffs[c].clone(), cabc.clone()]));
                        }
                    }
                }
                Expr::sum(terms).simplify()
            })
            .collect();
        GaugeParameter::new(&self.jet, coeffs)
    }

    /// The defining form `δ_εϑ − δ_ϑε − *t_{∇^bas}(ϑ, ε)`, with both variations
    /// taken through `∇^bas` regardless of the configured lifts.
    pub fn pre_bracket_from_torsion(&self, theta: &GaugeParameter, eps: &GaugeParameter) -> Result<GaugeParameter, GaugeError> {
        let l = &self.algebroid;
        let basic = GaugeContext::new(l, &self.connection, self.jet.d)?;
        let t = torsion(l, &basic.lift_e)?;
        let de_theta = basic.delta(eps, &theta.as_functional(&self.jet))?.coefficients();
        let dt_eps = basic.delta(theta, &eps.as_functional(&self.jet))?.coefficients();
        let r = self.jet.r;
        let coeffs = (0..r)
            .map(|a| {
                let mut terms = vec![de_theta[a].clone(), -&dt_eps[a]];
                for b in 0..r {
                    for c in 0..r {
                        let tabc = t.get(&[a, b, c]);
                        if !tabc.is_zero() {
                            terms.push(-Expr::product([
                                self.jet.lift_base(tabc),
                                theta.coeffs[b].clone(),
                                eps.coeffs[c].clone(),
                            ]));
                        }
                    }
                }
                Expr::sum(terms).simplify()
            })
            .collect();
        GaugeParameter::new(&self.jet, coeffs)
    }

    /// `R_δ(ϑ, ε)F = δ_ϑδ_εF − δ_εδ_ϑF + δ_{⟦ϑ,ε⟧}F`.
    pub fn r_delta(&self, theta: &GaugeParameter, eps: &GaugeParameter, f: &JetFunctional) -> Result<JetFunctional, GaugeError> {
        let te = self.delta(theta, &self.delta(eps, f)?)?;
        let et = self.delta(eps, &self.delta(theta, f)?)?;
        let br = self.delta(&self.pre_bracket(theta, eps)?, f)?;
        te.sub(&et)?.add(&br)
    }

    /// `(*R)(ϑ, ε)F`: `ϑ̂^s ε̂^t R^i_{stj}(x) F^j` with `R` the curvature of the target lift.
    pub fn pulled_back_curvature(
        &self,
        theta: &GaugeParameter,
        eps: &GaugeParameter,
        f: &JetFunctional,
    ) -> Result<JetFunctional, GaugeError> {
        let l = &self.algebroid;
        let curv = match f.target() {
            Bundle::Scalar => return Ok(f.scale(0.0)),
            Bundle::E => crate::connections::curvature_econn(l, &self.lift_e as &dyn EConnection)?,
            Bundle::TN => crate::connections::curvature_econn(l, &self.lift_tn as &dyn EConnection)?,
        };
        let r = self.jet.r;
        let rows = f.form.rows();
        let dim = rows.len();
        let form = VForm::from_fn(Chart::M, self.jet.d, f.degree(), f.target(), dim, |i, mi| {
            let pos = multi_indices(self.jet.d, mi.len()).iter().position(|m| m == mi).expect("increasing");
            let mut terms = Vec::new();
            for s in 0..r {
                for t in 0..r {
                    for (j, row) in rows.iter().enumerate() {
                        let rr = curv.get(i, s, t, j);
                        if !rr.is_zero() && !row[pos].is_zero() {
                            terms.push(Expr::product([
                                theta.coeffs[s].clone(),
                                eps.coeffs[t].clone(),
                                self.jet.lift_base(rr),
                                row[pos].clone(),
                            ]));
                        }
                    }
                }
            }
            Expr::sum(terms).simplify()
        })?;
        Ok(JetFunctional { form })
    }
}

/// `𝔇 = D − (*ρ)(ϖ₂)`: coefficients `G^α_μ − ρ^α_a(x) A^a_μ`.
pub fn minimal_coupling(l: &LieAlgebroid, jet: &JetSpace) -> JetFunctional {
    JetFunctional::total_differential(jet)
        .sub(&JetFunctional::anchored_boson(l, jet))
        .expect("same shape")
}

/// `δΦ^α(u) = −ρ^α_a(Φ(u)) ε^a(u)`.
pub fn gauge_higgs(ctx: &GaugeContext, config: &FieldConfig, eps: &GaugeParameter) -> Result<Vec<Expr>, GaugeError> {
    config.check_shape(&ctx.jet)?;
    ctx.check_parameter(eps)?;
    let l = &ctx.algebroid;
    let e = eps.on_config(config);
    Ok((0..l.base_dim())
        .map(|alpha| {
            let terms: Vec<Expr> = (0..l.rank()).map(|a| l.rho(alpha, a).substitute(&config.phi) * &e[a]).collect();
            (-Expr::sum(terms)).simplify()
        })
        .collect())
}

/// `δA^a_μ(u)` on a configuration. The derivative of `ε^a(u) = ε̂^a(u, Φ(u))` is
/// taken on the composite, so the chain rule through `Φ` is exact.
pub fn gauge_a(ctx: &GaugeContext, config: &FieldConfig, eps: &GaugeParameter) -> Result<Vec<Vec<Expr>>, GaugeError> {
    config.check_shape(&ctx.jet)?;
    ctx.check_parameter(eps)?;
    let l = &ctx.algebroid;
    let (n, r, d) = (l.base_dim(), l.rank(), config.d);
    let e = eps.on_config(config);
    let at = |x: &Expr| x.substitute(&config.phi);
    let dphi: Vec<Vec<Expr>> = config.phi.iter().map(|p| (0..d).map(|mu| p.diff(mu)).collect()).collect();
    Ok((0..r)
        .map(|a| {
            (0..d)
                .map(|mu| {
                    let mut terms = vec![-e[a].diff(mu)];
                    for b in 0..r {
                        for c in 0..r {
                            let mut coef = vec![at(l.c(a, b, c))];
                            coef.extend((0..n).map(|alpha| at(ctx.connection.omega(a, b, alpha)) * at(l.rho(alpha, c))));
                            terms.push(Expr::product([Expr::sum(coef), e[b].clone(), config.a[c][mu].clone()]));
                        }
                        for alpha in 0..n {
                            terms.push(-Expr::product([
                                e[b].clone(),
                                at(ctx.connection.omega(a, b, alpha)),
                                dphi[alpha][mu].clone(),
                            ]));
                        }
                    }
                    Expr::sum(terms).simplify()
                })
                .collect()
        })
        .collect())
}
