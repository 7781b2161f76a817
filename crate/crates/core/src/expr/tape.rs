//! Flattened evaluation of many expressions at once.
//!
//! Building a tape hash-conses the shared DAG of all outputs, so every
//! distinct subexpression is evaluated once per point. Arithmetic order
//! matches [`Expr::eval`] exactly, hence results are bit-identical.

use std::collections::HashMap;

use super::eval::{apply_div, apply_func, apply_powi, EvalError};
use super::{Expr, Func, Node};

#[derive(Clone, Debug)]
enum Op {
    Const(f64),
    Var(usize),
    Sum(Vec<usize>),
    Product(Vec<usize>),
    Quotient(usize, usize),
    Neg(usize),
    Pow(usize, i32),
    Func(Func, usize),
}

/// Compiled multi-output evaluator.
#[derive(Clone, Debug)]
pub struct Tape {
    ops: Vec<Op>,
    outputs: Vec<usize>,
}

impl Tape {
    pub fn new<'a>(exprs: impl IntoIterator<Item = &'a Expr>) -> Tape {
        let mut builder = Builder { ops: Vec::new(), slots: HashMap::new() };
        let outputs = exprs.into_iter().map(|e| builder.slot(e)).collect();
        Tape { ops: builder.ops, outputs }
    }

    pub fn outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Evaluates every output at `env`; `out` receives one value per output.
    pub fn eval_into(&self, env: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) -> Result<(), EvalError> {
        assert_eq!(out.len(), self.outputs.len(), "output buffer length");
        scratch.clear();
        scratch.reserve(self.ops.len());
        for op in &self.ops {
            let v = match op {
                Op::Const(c) => *c,
                Op::Var(i) => *env.get(*i).ok_or(EvalError::Unbound { index: *i, len: env.len() })?,
                Op::Sum(xs) => {
                    let mut acc = scratch[xs[0]];
                    for &k in &xs[1..] {
                        acc += scratch[k];
                    }
                    acc
                }
                Op::Product(xs) => {
                    let mut acc = scratch[xs[0]];
                    for &k in &xs[1..] {
                        acc *= scratch[k];
                    }
                    acc
                }
                Op::Quotient(a, b) => apply_div(scratch[*a], scratch[*b])?,
                Op::Neg(a) => -scratch[*a],
                Op::Pow(b, n) => apply_powi(scratch[*b], *n)?,
                Op::Func(f, a) => apply_func(*f, scratch[*a])?,
            };
            scratch.push(v);
        }
        for (o, &k) in out.iter_mut().zip(&self.outputs) {
            let v = scratch[k];
            if !v.is_finite() {
                return Err(EvalError::NonFinite);
            }
            *o = v;
        }
        Ok(())
    }

    pub fn eval(&self, env: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut out = vec![0.0; self.outputs.len()];
        let mut scratch = Vec::new();
        self.eval_into(env, &mut scratch, &mut out)?;
        Ok(out)
    }
}

struct Builder {
    ops: Vec<Op>,
    slots: HashMap<Expr, usize>,
}

impl Builder {
    fn slot(&mut self, e: &Expr) -> usize {
        if let Some(&k) = self.slots.get(e) {
            return k;
        }
        let op = match e.node() {
            Node::Const(c) => Op::Const(*c),
            Node::Var(i) => Op::Var(*i),
            Node::Sum(xs) => Op::Sum(xs.iter().map(|x| self.slot(x)).collect()),
            Node::Product(xs) => Op::Product(xs.iter().map(|x| self.slot(x)).collect()),
            Node::Quotient(a, b) => {
                let a = self.slot(a);
                let b = self.slot(b);
                Op::Quotient(a, b)
            }
            Node::Neg(a) => Op::Neg(self.slot(a)),
            Node::Pow(b, n) => Op::Pow(self.slot(b), *n),
            Node::Func(f, a) => Op::Func(*f, self.slot(a)),
        };
        let k = self.ops.len();
        self.ops.push(op);
        self.slots.insert(e.clone(), k);
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_tree_evaluation_bitwise() {
        let x = Expr::var(0);
        let y = Expr::var(1);
        let shared = (&x * &y).sin() + &x / &y;
        let a = &shared * &shared - x.clone().exp();
        let b = shared.clone().pow(3) + y.clone().ln();
        let tape = Tape::new([&a, &b]);
        let env = [0.3, 1.7];
        let v = tape.eval(&env).unwrap();
        assert_eq!(v[0].to_bits(), a.eval(&env).unwrap().to_bits());
        assert_eq!(v[1].to_bits(), b.eval(&env).unwrap().to_bits());
    }

    #[test]
    fn reports_domain_errors() {
        let tape = Tape::new([&Expr::var(0).ln()]);
        assert!(tape.eval(&[0.0]).is_err());
    }
}
