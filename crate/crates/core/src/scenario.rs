//! Scenario documents: an algebroid with optional connection, field
//! configuration, gauge parameters and sampling settings.
//!
//! All indices in documents are one-based. `rho[a]` lists the components of
//! the vector field `ρ(e_a)`. Absent optional parts are filled with fixed
//! polynomial defaults, and the names of the filled parts are kept in
//! [`Scenario::defaults`].

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::algebroid::{AlgebroidError, LieAlgebroid, Section};
use crate::connections::{ConnectionError, LinearConnection};
use crate::expr::{parse_expr, Expr, ParseError, VarSpace};
use crate::gauge::{FieldConfig, GaugeError, JetSpace};
use crate::sampling::Sampling;

/// Spacetime dimension used when a scenario has no configuration.
pub const DEFAULT_SPACETIME_DIM: usize = 2;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("in {field}: {source}")]
    Expr {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("inconsistent scenario: {0}")]
    Shape(String),
    #[error(transparent)]
    Algebroid(#[from] AlgebroidError),
    #[error(transparent)]
    Connection(#[from] ConnectionError),
    #[error(transparent)]
    Gauge(#[from] GaugeError),
}

/// Expression text; bare JSON numbers are accepted as constants.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Text {
    Str(String),
    Num(f64),
}

impl Text {
    fn parse(&self, space: &VarSpace, field: impl Fn() -> String) -> Result<Expr, ScenarioError> {
        match self {
            Text::Num(v) => Ok(Expr::constant(*v)),
            Text::Str(s) => parse_expr(s, space).map_err(|source| ScenarioError::Expr { field: field(), source }),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    description: Option<String>,
    algebroid: RawAlgebroid,
    connection: Option<RawConnection>,
    config: Option<RawConfig>,
    parameters: Option<RawParameters>,
    sampling: Option<Sampling>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgebroid {
    base_dim: usize,
    rank: usize,
    rho: Vec<Vec<Text>>,
    #[serde(rename = "C", default)]
    c: Vec<RawStructure>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStructure {
    a: usize,
    b: usize,
    c: usize,
    expr: Text,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConnection {
    #[serde(default)]
    omega: Vec<RawOmega>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOmega {
    a: usize,
    b: usize,
    alpha: usize,
    expr: Text,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    spacetime_dim: usize,
    phi: Vec<Text>,
    #[serde(rename = "A", default)]
    a: Vec<RawBoson>,
    epsilon: Option<Vec<Text>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBoson {
    a: usize,
    mu: usize,
    expr: Text,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParameters {
    epsilon: Option<Vec<Text>>,
    theta: Option<Vec<Text>>,
    eta: Option<Vec<Text>>,
    mu: Option<Vec<Text>>,
    nu: Option<Vec<Text>>,
}

/// A resolved scenario. Parameter expressions live over `u1..ud, x1..xn`,
/// which are the first `d + n` jet symbols.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub description: Option<String>,
    pub algebroid: LieAlgebroid,
    pub connection: LinearConnection,
    pub config: FieldConfig,
    pub epsilon: Vec<Expr>,
    pub theta: Vec<Expr>,
    pub eta: Vec<Expr>,
    pub mu: Section,
    pub nu: Section,
    pub sampling: Sampling,
    /// Parts that were absent from the document and filled with defaults.
    pub defaults: Vec<String>,
}

fn one_based(i: usize, bound: usize, what: &str) -> Result<usize, ScenarioError> {
    if i == 0 || i > bound {
        return Err(ScenarioError::Shape(format!("{what} index {i} outside 1..={bound}")));
    }
    Ok(i - 1)
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let mut s = Scenario::from_json_str(&text)?;
        if s.name.is_empty() {
            s.name = path.file_stem().map(|x| x.to_string_lossy().into_owned()).unwrap_or_default();
        }
        Ok(s)
    }

    pub fn from_json_str(text: &str) -> Result<Scenario, ScenarioError> {
        let raw: RawScenario = serde_json::from_str(text)
            .map_err(|e| {
                // serde_json appends the position, which is reported separately
                let text = e.to_string();
                let message = text.rsplit_once(" at line ").map_or(text.clone(), |(m, _)| m.to_string());
                ScenarioError::Json { line: e.line(), column: e.column(), message }
            })?;
        Scenario::resolve(raw)
    }

    fn resolve(raw: RawScenario) -> Result<Scenario, ScenarioError> {
        let mut defaults = Vec::new();
        let RawAlgebroid { base_dim: n, rank: r, rho, c } = raw.algebroid;
        if n == 0 || r == 0 {
            return Err(ScenarioError::Shape("base_dim and rank must be positive".into()));
        }
        if rho.len() != r {
            return Err(ScenarioError::Shape(format!("rho has {} rows, rank is {r}", rho.len())));
        }
        let xs = VarSpace::indexed("x", n);
        let mut rho_rows = Vec::with_capacity(r);
        for (a, row) in rho.iter().enumerate() {
            if row.len() != n {
                return Err(ScenarioError::Shape(format!("rho row {} has {} entries, base_dim is {n}", a + 1, row.len())));
            }
            let parsed = row
                .iter()
                .enumerate()
                .map(|(al, t)| t.parse(&xs, || format!("algebroid.rho[{}][{}]", a + 1, al + 1)))
                .collect::<Result<Vec<_>, _>>()?;
            rho_rows.push(parsed);
        }
        let mut entries = Vec::new();
        for (k, s) in c.iter().enumerate() {
            let e = s.expr.parse(&xs, || format!("algebroid.C[{}]", k + 1))?;
            entries.push((one_based(s.a, r, "C.a")?, one_based(s.b, r, "C.b")?, one_based(s.c, r, "C.c")?, e));
        }
        let algebroid = LieAlgebroid::new(n, rho_rows, entries)?;

        let connection = match raw.connection {
            Some(conn) => {
                let mut entries = Vec::new();
                for (k, w) in conn.omega.iter().enumerate() {
                    let e = w.expr.parse(&xs, || format!("connection.omega[{}]", k + 1))?;
                    entries.push((
                        one_based(w.a, r, "omega.a")?,
                        one_based(w.b, r, "omega.b")?,
                        one_based(w.alpha, n, "omega.alpha")?,
                        e,
                    ));
                }
                LinearConnection::new(r, n, entries)?
            }
            None => {
                defaults.push("connection".into());
                LinearConnection::flat(r, n)
            }
        };

        let mut params = raw.parameters.unwrap_or_default();
        let (config, config_eps) = match raw.config {
            Some(cfg) => {
                let d = cfg.spacetime_dim;
                if d == 0 {
                    return Err(ScenarioError::Shape("spacetime_dim must be positive".into()));
                }
                if cfg.phi.len() != n {
                    return Err(ScenarioError::Shape(format!("phi has {} components, base_dim is {n}", cfg.phi.len())));
                }
                let us = VarSpace::indexed("u", d);
                let phi = cfg
                    .phi
                    .iter()
                    .enumerate()
                    .map(|(al, t)| t.parse(&us, || format!("config.phi[{}]", al + 1)))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut a = vec![vec![Expr::zero(); d]; r];
                for (k, b) in cfg.a.iter().enumerate() {
                    let e = b.expr.parse(&us, || format!("config.A[{}]", k + 1))?;
                    let (ai, mi) = (one_based(b.a, r, "A.a")?, one_based(b.mu, d, "A.mu")?);
                    a[ai][mi] = (&a[ai][mi] + e).simplify();
                }
                (FieldConfig::new(d, phi, a)?, cfg.epsilon)
            }
            None => {
                defaults.push("config".into());
                (default_config(n, r, DEFAULT_SPACETIME_DIM), None)
            }
        };
        let d = config.d;
        let jet = JetSpace::new(d, n, r);
        let ps = jet.param_space();
        if params.epsilon.is_some() && config_eps.is_some() {
            return Err(ScenarioError::Shape("epsilon given both in config and in parameters".into()));
        }
        let eps_text = params.epsilon.take().or(config_eps);
        let mut param = |text: Option<Vec<Text>>, name: &str, seed: usize| -> Result<Vec<Expr>, ScenarioError> {
            match text {
                Some(v) => {
                    if v.len() != r {
                        return Err(ScenarioError::Shape(format!("{name} has {} components, rank is {r}", v.len())));
                    }
                    v.iter()
                        .enumerate()
                        .map(|(a, t)| t.parse(&ps, || format!("{name}[{}]", a + 1)))
                        .collect()
                }
                None => {
                    defaults.push(name.to_string());
                    Ok(default_parameter(&jet, seed))
                }
            }
        };
        let epsilon = param(eps_text, "epsilon", 0)?;
        let theta = param(params.theta.take(), "theta", 1)?;
        let eta = param(params.eta.take(), "eta", 2)?;
        let mut section = |text: Option<Vec<Text>>, name: &str, seed: usize| -> Result<Section, ScenarioError> {
            match text {
                Some(v) => {
                    if v.len() != r {
                        return Err(ScenarioError::Shape(format!("{name} has {} components, rank is {r}", v.len())));
                    }
                    let c = v
                        .iter()
                        .enumerate()
                        .map(|(a, t)| t.parse(&xs, || format!("{name}[{}]", a + 1)))
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(Section::new(c))
                }
                None => {
                    defaults.push(name.to_string());
                    Ok(default_section(n, r, seed))
                }
            }
        };
        let mu = section(params.mu.take(), "mu", 0)?;
        let nu = section(params.nu.take(), "nu", 1)?;
        let sampling = raw.sampling.unwrap_or_default();
        if sampling.points == 0 || sampling.half_width.is_nan() || sampling.half_width <= 0.0 {
            return Err(ScenarioError::Shape("sampling needs at least one point and a positive box".into()));
        }
        Ok(Scenario {
            name: raw.name.unwrap_or_default(),
            description: raw.description,
            algebroid,
            connection,
            config,
            epsilon,
            theta,
            eta,
            mu,
            nu,
            sampling,
            defaults,
        })
    }

    pub fn jet(&self) -> JetSpace {
        JetSpace::new(self.config.d, self.algebroid.base_dim(), self.algebroid.rank())
    }

    /// Stable description of every input, for result digests.
    pub fn digest_parts(&self) -> Vec<String> {
        let mut parts = self.algebroid.digest_parts();
        parts.extend(self.connection.digest_parts(&self.algebroid));
        parts.push(format!("{:?}", self.config));
        for p in [&self.epsilon, &self.theta, &self.eta, &self.mu.coeffs, &self.nu.coeffs] {
            parts.push(format!("{p:?}"));
        }
        parts
    }
}

fn x(alpha: usize) -> Expr {
    Expr::var(alpha)
}

/// `Φ^α = 0.1(α+1) + 0.5(−1)^α u1 + 0.3/(α+1) u2 + 0.2 u1 u2` (terms with `u2` only when `d ≥ 2`).
pub fn default_config(n: usize, r: usize, d: usize) -> FieldConfig {
    let u = Expr::var;
    let last = d - 1;
    let phi = (0..n)
        .map(|al| {
            let sign = if al % 2 == 0 { 0.5 } else { -0.5 };
            let mut terms = vec![Expr::constant(0.1 * (al + 1) as f64), sign * u(0)];
            if d >= 2 {
                terms.push(0.3 / (al + 1) as f64 * u(1));
                terms.push(0.2 * u(0) * u(1));
            }
            Expr::sum(terms).simplify()
        })
        .collect();
    let a = (0..r)
        .map(|a| {
            (0..d)
                .map(|mu| {
                    Expr::sum([
                        0.2 * (a + 1) as f64 * u(mu),
                        Expr::constant(0.1 * (mu + 1) as f64),
                        -0.15 * u(0) * u(last),
                    ])
                    .simplify()
                })
                .collect()
        })
        .collect();
    FieldConfig::new(d, phi, a).expect("default config is well formed")
}

/// Fixed `(u, x)`-dependent parameters, distinct for each `seed`.
pub fn default_parameter(jet: &JetSpace, seed: usize) -> Vec<Expr> {
    let (d, n) = (jet.d, jet.n);
    let u = |mu: usize| Expr::var(jet.u(mu));
    let xj = |alpha: usize| Expr::var(jet.x(alpha % n));
    (0..jet.r)
        .map(|a| {
            let k = (a + 1) as f64;
            let terms = match seed {
                0 => vec![0.4 * xj(a), 0.3 * u(0) * xj(a + 1), -0.2 * u(d - 1), Expr::constant(0.1 * k)],
                1 => vec![0.5 * xj(a + 1) * xj(a), -0.3 * u(0), 0.2 * k * xj(a + 2)],
                _ => vec![0.25 * u(d - 1) * xj(a), 0.35 * xj(a + 2), -0.1 * k * u(0) * u(d - 1)],
            };
            Expr::sum(terms).simplify()
        })
        .collect()
}

/// Fixed polynomial sections over `N`.
pub fn default_section(n: usize, r: usize, seed: usize) -> Section {
    Section::new(
        (0..r)
            .map(|a| {
                let terms = if seed == 0 {
                    vec![Expr::constant(0.2 * (a + 1) as f64), 0.6 * x((a + 1) % n)]
                } else {
                    vec![0.7 * x(a % n) * x((a + 2) % n), Expr::constant(-0.4)]
                };
                Expr::sum(terms).simplify()
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_gets_defaults() {
        let s = Scenario::from_json_str(r#"{"algebroid": {"base_dim": 1, "rank": 1, "rho": [["0"]]}}"#).unwrap();
        assert_eq!(s.config.d, DEFAULT_SPACETIME_DIM);
        assert!(s.defaults.contains(&"connection".to_string()));
        assert_eq!(s.epsilon.len(), 1);
    }

    #[test]
    fn malformed_json_reports_position() {
        match Scenario::from_json_str("{\n  \"algebroid\": [1,\n}") {
            Err(ScenarioError::Json { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_expression_names_the_field() {
        let e = Scenario::from_json_str(r#"{"algebroid": {"base_dim": 1, "rank": 1, "rho": [["y1"]]}}"#).unwrap_err();
        assert!(e.to_string().contains("algebroid.rho[1][1]"), "{e}");
    }
}
