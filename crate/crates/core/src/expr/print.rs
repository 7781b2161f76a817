//! Printing in the parser's grammar. Output re-parses to a semantically equal tree.

use std::fmt;

use super::space::VarSpace;
use super::{Expr, Node};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Sum,
    Product,
    Unary,
    Power,
    Atom,
}

/// Display adaptor binding an expression to variable names.
pub struct Printed<'a> {
    expr: &'a Expr,
    space: &'a VarSpace,
}

impl<'a> Printed<'a> {
    pub(crate) fn new(expr: &'a Expr, space: &'a VarSpace) -> Printed<'a> {
        Printed { expr, space }
    }
}

impl fmt::Display for Printed<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = |i: usize| self.space.name(i).map_or_else(|| format!("_v{i}"), str::to_string);
        f.write_str(&to_string_with(self.expr, &names))
    }
}

pub(crate) fn to_string_with(e: &Expr, names: &dyn Fn(usize) -> String) -> String {
    render(e, names).0
}

fn wrap((s, p): (String, Prec), min: Prec) -> String {
    if p < min {
        format!("({s})")
    } else {
        s
    }
}

/// Shortest round-trip form; integers without a fractional part.
fn number(c: f64) -> String {
    if c == 0.0 {
        "0".into()
    } else if c.fract() == 0.0 && c.abs() < 1e15 {
        format!("{c:.0}")
    } else {
        format!("{c:?}")
    }
}

/// If `e` reads naturally as `-(t)`, returns `t`.
fn negated(e: &Expr) -> Option<Expr> {
    match e.node() {
        Node::Neg(t) => Some(t.clone()),
        Node::Const(c) if *c < 0.0 => Some(Expr::constant(-c)),
        Node::Product(fs) => match fs[0].node() {
            Node::Const(c) if *c < 0.0 => {
                let mut v = fs.clone();
                v[0] = Expr::constant(-c);
                Some(Expr::product(v))
            }
            _ => None,
        },
        _ => None,
    }
}

fn render(e: &Expr, names: &dyn Fn(usize) -> String) -> (String, Prec) {
    match e.node() {
        Node::Const(c) => {
            if *c < 0.0 {
                (format!("-{}", number(-c)), Prec::Unary)
            } else {
                (number(*c), Prec::Atom)
            }
        }
        Node::Var(i) => (names(*i), Prec::Atom),
        Node::Sum(ts) => {
            let mut s = wrap(render(&ts[0], names), Prec::Product);
            for t in &ts[1..] {
                match negated(t) {
                    Some(pos) => {
                        s.push_str(" - ");
                        s.push_str(&wrap(render(&pos, names), Prec::Product));
                    }
                    None => {
                        s.push_str(" + ");
                        s.push_str(&wrap(render(t, names), Prec::Product));
                    }
                }
            }
            (s, Prec::Sum)
        }
        Node::Product(fs) => {
            let mut num = Vec::new();
            let mut den = Vec::new();
            for f in fs {
                match f.node() {
                    Node::Pow(b, n) if *n < 0 => den.push(Expr::powi(b.clone(), -n)),
                    _ => num.push(f.clone()),
                }
            }
            let mut s = if num.is_empty() {
                "1".to_string()
            } else {
                num.iter().map(|f| wrap(render(f, names), Prec::Unary)).collect::<Vec<_>>().join("*")
            };
            for d in den {
                s.push('/');
                s.push_str(&wrap(render(&d, names), Prec::Power));
            }
            (s, Prec::Product)
        }
        Node::Quotient(a, b) => {
            let s = format!("{}/{}", wrap(render(a, names), Prec::Product), wrap(render(b, names), Prec::Power));
            (s, Prec::Product)
        }
        Node::Neg(a) => (format!("-{}", wrap(render(a, names), Prec::Unary)), Prec::Unary),
        Node::Pow(b, n) => {
            if *n < 0 {
                let inner = Expr::powi(b.clone(), -n);
                (format!("1/{}", wrap(render(&inner, names), Prec::Power)), Prec::Product)
            } else {
                (format!("{}^{}", wrap(render(b, names), Prec::Atom), n), Prec::Power)
            }
        }
        Node::Func(func, a) => (format!("{}({})", func.name(), render(a, names).0), Prec::Atom),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_expr;
    use super::*;

    #[test]
    fn round_trips() {
        let s = VarSpace::indexed("x", 2);
        for text in [
            "x1*x2 + sin(x2)",
            "x1^2 - -x1",
            "-(x1 + x2)^3/(x1*x2)",
            "1/(x1 - x2)^2 - exp(-x1)",
            "(-2)^3*x1 - 1e-7",
            "ln(2 + x1^2)/(x2 + 3)",
        ] {
            let e = parse_expr(text, &s).unwrap();
            for simplified in [false, true] {
                let e = if simplified { e.simplify() } else { e.clone() };
                let printed = e.display(&s).to_string();
                let back = parse_expr(&printed, &s).unwrap_or_else(|err| panic!("{printed}: {err}"));
                let env = [0.37, -1.21];
                let a = e.eval(&env).unwrap();
                let b = back.eval(&env).unwrap();
                assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{text} -> {printed}");
            }
        }
    }
}
