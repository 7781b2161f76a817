use thiserror::Error;

use super::{Expr, Func, Node};

/// Failure of numeric evaluation. Evaluation never silently yields NaN.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("ln of non-positive value {0}")]
    LnDomain(f64),
    #[error("non-finite intermediate value")]
    NonFinite,
    #[error("variable index {index} outside environment of length {len}")]
    Unbound { index: usize, len: usize },
}

pub(crate) fn apply_func(f: Func, x: f64) -> Result<f64, EvalError> {
    Ok(match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Exp => x.exp(),
        Func::Ln => {
            if x <= 0.0 {
                return Err(EvalError::LnDomain(x));
            }
            x.ln()
        }
    })
}

pub(crate) fn apply_powi(b: f64, n: i32) -> Result<f64, EvalError> {
    if n < 0 && b == 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    Ok(b.powi(n))
}

pub(crate) fn apply_div(a: f64, b: f64) -> Result<f64, EvalError> {
    if b == 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    Ok(a / b)
}

impl Expr {
    /// Evaluates at `env` (indexed by variable). For repeated evaluation of
    /// large shared trees prefer [`super::Tape`].
    pub fn eval(&self, env: &[f64]) -> Result<f64, EvalError> {
        let v = self.eval_rec(env)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn eval_rec(&self, env: &[f64]) -> Result<f64, EvalError> {
        Ok(match self.node() {
            Node::Const(c) => *c,
            Node::Var(i) => *env.get(*i).ok_or(EvalError::Unbound { index: *i, len: env.len() })?,
            Node::Sum(ts) => {
                let mut acc = ts[0].eval_rec(env)?;
                for t in &ts[1..] {
                    acc += t.eval_rec(env)?;
                }
                acc
            }
            Node::Product(fs) => {
                let mut acc = fs[0].eval_rec(env)?;
                for f in &fs[1..] {
                    acc *= f.eval_rec(env)?;
                }
                acc
            }
            Node::Quotient(a, b) => apply_div(a.eval_rec(env)?, b.eval_rec(env)?)?,
            Node::Neg(a) => -a.eval_rec(env)?,
            Node::Pow(b, n) => apply_powi(b.eval_rec(env)?, *n)?,
            Node::Func(f, a) => apply_func(*f, a.eval_rec(env)?)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_errors() {
        let q = Expr::var(0) / Expr::var(1);
        assert_eq!(q.eval(&[1.0, 0.0]), Err(EvalError::DivisionByZero));
        assert!(matches!(Expr::var(0).ln().eval(&[-1.0]), Err(EvalError::LnDomain(_))));
        assert_eq!(Expr::var(0).pow(-2).eval(&[0.0]), Err(EvalError::DivisionByZero));
        assert_eq!(Expr::var(0).exp().exp().eval(&[10.0]), Err(EvalError::NonFinite));
        assert!(matches!(Expr::var(3).eval(&[0.0]), Err(EvalError::Unbound { .. })));
    }

    #[test]
    fn pythagoras() {
        let x = Expr::var(0);
        let e = x.clone().sin().pow(2) + x.cos().pow(2);
        assert!((e.eval(&[0.7]).unwrap() - 1.0).abs() <= 1e-15);
    }
}
