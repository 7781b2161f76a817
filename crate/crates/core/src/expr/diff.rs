use std::collections::HashMap;

use super::{Expr, Func, Node};

impl Expr {
    /// Exact partial derivative with respect to variable `var`.
    pub fn diff(&self, var: usize) -> Expr {
        let mut memo = HashMap::new();
        self.diff_rec(var, &mut memo)
    }

    fn diff_rec(&self, var: usize, memo: &mut HashMap<*const (), Expr>) -> Expr {
        if let Some(d) = memo.get(&self.ptr()) {
            return d.clone();
        }
        let d = match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(i) => {
                if *i == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Sum(ts) => Expr::sum(ts.iter().map(|t| t.diff_rec(var, memo)).collect::<Vec<_>>()),
            Node::Product(fs) => {
                let mut terms = Vec::with_capacity(fs.len());
                for i in 0..fs.len() {
                    let di = fs[i].diff_rec(var, memo);
                    if di.is_zero() {
                        continue;
                    }
                    let mut factors = Vec::with_capacity(fs.len());
                    for (j, f) in fs.iter().enumerate() {
                        factors.push(if i == j { di.clone() } else { f.clone() });
                    }
                    terms.push(Expr::product(factors));
                }
                Expr::sum(terms)
            }
            Node::Quotient(a, b) => {
                let da = a.diff_rec(var, memo);
                let db = b.diff_rec(var, memo);
                let left = Expr::quotient(da, b.clone());
                if db.is_zero() {
                    left
                } else {
                    left - Expr::quotient(a * db, b.clone().pow(2))
                }
            }
            Node::Neg(a) => -a.diff_rec(var, memo),
            Node::Pow(b, n) => {
                let db = b.diff_rec(var, memo);
                Expr::product([Expr::constant(*n as f64), b.clone().pow(n - 1), db])
            }
            Node::Func(f, a) => {
                let da = a.diff_rec(var, memo);
                if da.is_zero() {
                    Expr::zero()
                } else {
                    match f {
                        Func::Sin => a.clone().cos() * da,
                        Func::Cos => -(a.clone().sin() * da),
                        Func::Exp => self.clone() * da,
                        Func::Ln => da / a,
                    }
                }
            }
        };
        memo.insert(self.ptr(), d.clone());
        d
    }
}
