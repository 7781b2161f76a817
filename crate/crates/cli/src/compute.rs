//! Tables produced by `algforge compute`.

use algforge::connections::{
    basic_connection_e, basic_connection_tn, basic_curvature, curvature_econn, curvature_linear, nabla_rho, torsion,
};
use algforge::forms::VForm;
use algforge::gauge::{gauge_a, gauge_higgs, minimal_coupling, GaugeContext};
use algforge::scenario::Scenario;
use algforge::table::{unflatten, Table};
use algforge::{Expr, VarSpace};
use clap::ValueEnum;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum What {
    BasicConn,
    BasicCurv,
    Torsion,
    Curvatures,
    MinimalCoupling,
    GaugePhi,
    #[value(name = "gauge-A", alias = "gauge-a")]
    GaugeA,
    PreBracket,
}

pub struct Labeled {
    pub label: String,
    pub note: &'static str,
    pub table: Table,
}

/// Computed tables and the coordinate space their entries live over.
pub struct Computation {
    pub space: VarSpace,
    pub tables: Vec<Labeled>,
}

fn labeled(label: &str, note: &'static str, table: Table) -> Labeled {
    Labeled { label: label.into(), note, table }
}

fn form_table(f: &VForm) -> Table {
    let rows = f.rows();
    let width = rows.first().map_or(0, Vec::len);
    Table::from_fn(&[rows.len(), width], |i| rows[i[0]][i[1]].clone())
}

fn vector_table(v: &[Expr]) -> Table {
    Table::from_fn(&[v.len()], |i| v[i[0]].clone())
}

pub fn compute(s: &Scenario, what: What) -> Result<Computation, String> {
    let l = &s.algebroid;
    let conn = &s.connection;
    let jet = s.jet();
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let x_space = l.space().clone();
    let u_space = VarSpace::indexed("u", jet.d);
    let ctx = || GaugeContext::new(l, conn, jet.d).map_err(|e| err(&e));
    Ok(match what {
        What::BasicConn => {
            let b = basic_connection_e(l, conn).map_err(|e| err(&e))?;
            let g = basic_connection_tn(l, conn).map_err(|e| err(&e))?;
            Computation {
                space: x_space,
                tables: vec![
                    labeled("B", "basic connection on E, [a][b][c] = B^a_bc", b.b),
                    labeled("G", "basic connection on TN, [α][b][β] = G^α_bβ", g.g),
                ],
            }
        }
        What::BasicCurv => {
            let sb = basic_curvature(l, conn).map_err(|e| err(&e))?;
            Computation { space: x_space, tables: vec![labeled("S", "basic curvature, [a][b][c][β]", sb.s)] }
        }
        What::Torsion => {
            let t_bas = torsion(l, &basic_connection_e(l, conn).map_err(|e| err(&e))?).map_err(|e| err(&e))?;
            let t_rho = torsion(l, &nabla_rho(l, conn).map_err(|e| err(&e))?).map_err(|e| err(&e))?;
            Computation {
                space: x_space,
                tables: vec![
                    labeled("t_bas", "torsion of the basic connection on E, [a][b][c]", t_bas),
                    labeled("t_rho", "torsion of the E-connection ∇_ρ on E, [a][b][c]", t_rho),
                ],
            }
        }
        What::Curvatures => {
            let lin = curvature_linear(l, conn).map_err(|e| err(&e))?;
            let be = curvature_econn(l, &basic_connection_e(l, conn).map_err(|e| err(&e))?).map_err(|e| err(&e))?;
            let bt = curvature_econn(l, &basic_connection_tn(l, conn).map_err(|e| err(&e))?).map_err(|e| err(&e))?;
            let er = curvature_econn(l, &nabla_rho(l, conn).map_err(|e| err(&e))?).map_err(|e| err(&e))?;
            Computation {
                space: x_space,
                tables: vec![
                    labeled("R_lin", "curvature of ∇, [a][α][β][b]", lin.table),
                    labeled("R_rho", "curvature of ∇_ρ on E, [a][s][t][b]", er.table),
                    labeled("R_bas_E", "curvature of the basic connection on E, [a][s][t][b]", be.table),
                    labeled("R_bas_TN", "curvature of the basic connection on TN, [α][s][t][β]", bt.table),
                ],
            }
        }
        What::MinimalCoupling => {
            let f = minimal_coupling(l, &jet).at_config(&s.config);
            Computation { space: u_space, tables: vec![labeled("D", "minimal coupling on the configuration, [α][μ]", form_table(&f))] }
        }
        What::GaugePhi => {
            let c = ctx()?;
            let eps = c.parameter(s.epsilon.clone()).map_err(|e| err(&e))?;
            let v = gauge_higgs(&c, &s.config, &eps).map_err(|e| err(&e))?;
            Computation { space: u_space, tables: vec![labeled("dPhi", "variation of the Higgs field, [α]", vector_table(&v))] }
        }
        What::GaugeA => {
            let c = ctx()?;
            let eps = c.parameter(s.epsilon.clone()).map_err(|e| err(&e))?;
            let v = gauge_a(&c, &s.config, &eps).map_err(|e| err(&e))?;
            let t = Table::from_fn(&[jet.r, jet.d], |i| v[i[0]][i[1]].clone());
            Computation { space: u_space, tables: vec![labeled("dA", "variation of the gauge boson, [a][μ]", t)] }
        }
        What::PreBracket => {
            let c = ctx()?;
            let eps = c.parameter(s.epsilon.clone()).map_err(|e| err(&e))?;
            let theta = c.parameter(s.theta.clone()).map_err(|e| err(&e))?;
            let b = c.pre_bracket(&eps, &theta).map_err(|e| err(&e))?;
            Computation {
                space: jet.param_space(),
                tables: vec![labeled("bracket", "pre-bracket of epsilon and theta, [a]", vector_table(&b.coeffs))],
            }
        }
    })
}

impl Computation {
    /// Evaluates every entry at `at`, whose length must match the coordinate space.
    pub fn values(&self, at: &[f64]) -> Result<Vec<Vec<f64>>, String> {
        if at.len() != self.space.len() {
            return Err(format!(
                "--at has {} coordinates, expected {} ({})",
                at.len(),
                self.space.len(),
                self.space.names().join(", ")
            ));
        }
        self.tables
            .iter()
            .map(|t| t.table.data().iter().map(|e| e.eval(at).map_err(|e| e.to_string())).collect())
            .collect()
    }

    pub fn render(&self, at: Option<&[f64]>) -> Result<String, String> {
        let values = at.map(|p| self.values(p)).transpose()?;
        let mut out = format!("variables: {}\n", self.space.names().join(", "));
        for (k, t) in self.tables.iter().enumerate() {
            out.push_str(&format!("# {}\n", t.note));
            match &values {
                None => out.push_str(&t.table.render(&t.label, &self.space)),
                Some(v) => {
                    for (i, x) in v[k].iter().enumerate() {
                        let idx: Vec<String> = unflatten(t.table.shape(), i).iter().map(|j| (j + 1).to_string()).collect();
                        out.push_str(&format!("{}[{}] = {x:.12e}\n", t.label, idx.join(",")));
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn to_json(&self, at: Option<&[f64]>) -> Result<Value, String> {
        let values = at.map(|p| self.values(p)).transpose()?;
        let tables: Vec<Value> = self
            .tables
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let entries: Vec<Value> = t
                    .table
                    .data()
                    .iter()
                    .enumerate()
                    .map(|(i, e)| {
                        let index: Vec<usize> = unflatten(t.table.shape(), i).iter().map(|j| j + 1).collect();
                        match &values {
                            Some(v) => json!({ "index": index, "value": v[k][i] }),
                            None => json!({ "index": index, "expr": e.simplify().display(&self.space).to_string() }),
                        }
                    })
                    .collect();
                json!({ "label": t.label, "description": t.note, "shape": t.table.shape(), "entries": entries })
            })
            .collect();
        Ok(json!({ "variables": self.space.names(), "at": at, "tables": tables }))
    }
}
