//! Scalar expressions over a coordinate space.
//!
//! An [`Expr`] is an immutable, reference-counted tree. Subtrees are shared
//! freely; every node caches a structural hash so equality and hash-consing
//! are cheap. Variables are plain indices into a [`VarSpace`]; the space is
//! only needed for parsing and printing.

mod diff;
mod eval;
mod parse;
mod print;
mod simplify;
mod space;
mod tape;

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

pub use eval::EvalError;
pub use parse::{parse_expr, ParseError, ParseErrorKind};
pub use print::Printed;
pub use space::{EvalEnv, SpaceError, VarSpace};
pub use tape::Tape;

/// Unary functions of the expression language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "ln" => Some(Func::Ln),
            _ => None,
        }
    }
}

/// Node of an expression tree.
///
/// `Sum` and `Product` are n-ary with at least two operands once built
/// through the smart constructors. `Pow` exponents may be negative after
/// simplification (a quotient becomes a negative power).
#[derive(Clone, Debug)]
pub enum Node {
    Const(f64),
    Var(usize),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Quotient(Expr, Expr),
    Neg(Expr),
    Pow(Expr, i32),
    Func(Func, Expr),
}

struct Inner {
    node: Node,
    hash: u64,
}

/// Immutable symbolic scalar expression.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn mix(h: u64, v: u64) -> u64 {
    let mut x = h ^ v;
    x = x.wrapping_mul(FNV_PRIME);
    x ^ (x >> 29)
}

fn node_hash(node: &Node) -> u64 {
    let seed = 0xcbf2_9ce4_8422_2325u64;
    match node {
        Node::Const(c) => mix(mix(seed, 1), normalize_zero(*c).to_bits()),
        Node::Var(i) => mix(mix(seed, 2), *i as u64),
        Node::Sum(ts) => ts.iter().fold(mix(seed, 3), |h, t| mix(h, t.hash())),
        Node::Product(fs) => fs.iter().fold(mix(seed, 4), |h, f| mix(h, f.hash())),
        Node::Quotient(a, b) => mix(mix(mix(seed, 5), a.hash()), b.hash()),
        Node::Neg(a) => mix(mix(seed, 6), a.hash()),
        Node::Pow(b, n) => mix(mix(mix(seed, 7), b.hash()), *n as i64 as u64),
        Node::Func(f, a) => mix(mix(mix(seed, 8), *f as u64), a.hash()),
    }
}

// -0.0 and 0.0 are the same constant for hashing and equality.
fn normalize_zero(c: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c
    }
}

impl Expr {
    fn from_node(node: Node) -> Expr {
        let hash = node_hash(&node);
        Expr(Arc::new(Inner { node, hash }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub(crate) fn hash(&self) -> u64 {
        self.0.hash
    }

    pub(crate) fn ptr(&self) -> *const () {
        Arc::as_ptr(&self.0) as *const ()
    }

    pub fn constant(c: f64) -> Expr {
        Expr::from_node(Node::Const(normalize_zero(c)))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(index: usize) -> Expr {
        Expr::from_node(Node::Var(index))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Structurally the constant zero. Numerically vanishing trees are not detected.
    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    /// n-ary sum with zero elimination, constant folding and flattening.
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        let mut out: Vec<Expr> = Vec::new();
        let mut constant = 0.0;
        let mut saw_const = false;
        for t in terms {
            match t.node() {
                Node::Const(c) => {
                    constant += c;
                    saw_const = true;
                }
                Node::Sum(inner) => {
                    for s in inner {
                        match s.node() {
                            Node::Const(c) => {
                                constant += c;
                                saw_const = true;
                            }
                            _ => out.push(s.clone()),
                        }
                    }
                }
                _ => out.push(t),
            }
        }
        if saw_const && constant != 0.0 {
            out.insert(0, Expr::constant(constant));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::from_node(Node::Sum(out)),
        }
    }

    /// n-ary product with 0-annihilation, 1-identity, constant folding and flattening.
    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Expr {
        let mut out: Vec<Expr> = Vec::new();
        let mut constant = 1.0;
        for f in factors {
            match f.node() {
                Node::Const(c) => {
                    if *c == 0.0 {
                        return Expr::zero();
                    }
                    constant *= c;
                }
                Node::Product(inner) => {
                    for g in inner {
                        match g.node() {
                            Node::Const(c) => {
                                if *c == 0.0 {
                                    return Expr::zero();
                                }
                                constant *= c;
                            }
                            _ => out.push(g.clone()),
                        }
                    }
                }
                _ => out.push(f),
            }
        }
        if out.is_empty() {
            return Expr::constant(constant);
        }
        if constant == -1.0 {
            let p = if out.len() == 1 {
                out.pop().unwrap()
            } else {
                Expr::from_node(Node::Product(out))
            };
            return Expr::from_node(Node::Neg(p));
        }
        if constant != 1.0 {
            out.insert(0, Expr::constant(constant));
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Expr::from_node(Node::Product(out))
        }
    }

    pub fn neg_of(a: Expr) -> Expr {
        match a.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::from_node(Node::Neg(a)),
        }
    }

    pub fn quotient(a: Expr, b: Expr) -> Expr {
        if a.is_zero() {
            return Expr::zero();
        }
        if b.is_one() {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            if y != 0.0 {
                return Expr::constant(x / y);
            }
        }
        Expr::from_node(Node::Quotient(a, b))
    }

    pub fn powi(base: Expr, n: i32) -> Expr {
        if n == 0 {
            return Expr::one();
        }
        if n == 1 {
            return base;
        }
        match base.node() {
            Node::Const(c) if *c != 0.0 || n > 0 => Expr::constant(c.powi(n)),
            Node::Pow(b, m) => match m.checked_mul(n) {
                Some(k) => Expr::powi(b.clone(), k),
                None => Expr::from_node(Node::Pow(base, n)),
            },
            _ => Expr::from_node(Node::Pow(base, n)),
        }
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        if let Some(c) = arg.as_const() {
            if let Ok(v) = eval::apply_func(f, c) {
                if v.is_finite() {
                    return Expr::constant(v);
                }
            }
        }
        Expr::from_node(Node::Func(f, arg))
    }

    pub fn sin(self) -> Expr {
        Expr::func(Func::Sin, self)
    }

    pub fn cos(self) -> Expr {
        Expr::func(Func::Cos, self)
    }

    pub fn exp(self) -> Expr {
        Expr::func(Func::Exp, self)
    }

    pub fn ln(self) -> Expr {
        Expr::func(Func::Ln, self)
    }

    pub fn pow(self, n: i32) -> Expr {
        Expr::powi(self, n)
    }

    /// Replaces variable `i` by `subs[i]`. Panics if a variable has no substitute.
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        let mut memo = HashMap::new();
        self.subst_rec(subs, &mut memo)
    }

    fn subst_rec(&self, subs: &[Expr], memo: &mut HashMap<*const (), Expr>) -> Expr {
        if let Some(e) = memo.get(&self.ptr()) {
            return e.clone();
        }
        let out = match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(i) => subs
                .get(*i)
                .unwrap_or_else(|| panic!("no substitute for variable {i}"))
                .clone(),
            _ => self.map_children(|c| c.subst_rec(subs, memo)),
        };
        memo.insert(self.ptr(), out.clone());
        out
    }

    /// Renames variables through `f`.
    pub fn remap(&self, f: &dyn Fn(usize) -> usize) -> Expr {
        let mut memo = HashMap::new();
        self.remap_rec(f, &mut memo)
    }

    fn remap_rec(&self, f: &dyn Fn(usize) -> usize, memo: &mut HashMap<*const (), Expr>) -> Expr {
        if let Some(e) = memo.get(&self.ptr()) {
            return e.clone();
        }
        let out = match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(i) => Expr::var(f(*i)),
            _ => self.map_children(|c| c.remap_rec(f, memo)),
        };
        memo.insert(self.ptr(), out.clone());
        out
    }

    /// Rebuilds a compound node from transformed children via the smart constructors.
    pub(crate) fn map_children(&self, mut f: impl FnMut(&Expr) -> Expr) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Var(_) => self.clone(),
            Node::Sum(ts) => Expr::sum(ts.iter().map(&mut f).collect::<Vec<_>>()),
            Node::Product(fs) => Expr::product(fs.iter().map(&mut f).collect::<Vec<_>>()),
            Node::Quotient(a, b) => {
                let a = f(a);
                let b = f(b);
                Expr::quotient(a, b)
            }
            Node::Neg(a) => Expr::neg_of(f(a)),
            Node::Pow(b, n) => Expr::powi(f(b), *n),
            Node::Func(g, a) => Expr::func(*g, f(a)),
        }
    }

    /// Sorted, deduplicated variable indices occurring in the tree.
    pub fn variables(&self) -> Vec<usize> {
        let mut seen = std::collections::HashSet::new();
        let mut vars = Vec::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.ptr()) {
                continue;
            }
            match e.node() {
                Node::Const(_) => {}
                Node::Var(i) => vars.push(*i),
                Node::Sum(xs) | Node::Product(xs) => stack.extend(xs.iter().cloned()),
                Node::Quotient(a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
                Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) => stack.push(a.clone()),
            }
        }
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.variables().binary_search(&var).is_ok()
    }

    /// Number of distinct nodes in the shared DAG.
    pub fn dag_size(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.ptr()) {
                continue;
            }
            match e.node() {
                Node::Const(_) | Node::Var(_) => {}
                Node::Sum(xs) | Node::Product(xs) => stack.extend(xs.iter().cloned()),
                Node::Quotient(a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
                Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) => stack.push(a.clone()),
            }
        }
        seen.len()
    }

    pub fn display<'a>(&'a self, space: &'a VarSpace) -> Printed<'a> {
        Printed::new(self, space)
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.hash() != other.hash() {
            return false;
        }
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => normalize_zero(*a).to_bits() == normalize_zero(*b).to_bits(),
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Sum(a), Node::Sum(b)) | (Node::Product(a), Node::Product(b)) => a == b,
            (Node::Quotient(a, b), Node::Quotient(c, d)) => a == c && b == d,
            (Node::Neg(a), Node::Neg(b)) => a == b,
            (Node::Pow(a, n), Node::Pow(b, m)) => n == m && a == b,
            (Node::Func(f, a), Node::Func(g, b)) => f == g && a == b,
            _ => false,
        }
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", print::to_string_with(self, &|i| format!("v{i}")))
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Expr {
        Expr::constant(c)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl std::ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl std::ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
        impl std::ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, Expr::constant(rhs))
            }
        }
        impl std::ops::$trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), Expr::constant(rhs))
            }
        }
        impl std::ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(Expr::constant(self), rhs)
            }
        }
        impl std::ops::$trait<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(Expr::constant(self), rhs.clone())
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum([a, b]));
binop!(Sub, sub, |a, b| Expr::sum([a, Expr::neg_of(b)]));
binop!(Mul, mul, |a, b| Expr::product([a, b]));
binop!(Div, div, Expr::quotient);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg_of(self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg_of(self.clone())
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        Expr::sum(iter.collect::<Vec<_>>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smart_constructors_fold() {
        let x = Expr::var(0);
        assert!((Expr::zero() * &x).is_zero());
        assert_eq!(Expr::one() * &x, x);
        assert_eq!((&x + 0.0), x);
        assert_eq!((Expr::constant(2.0) * 3.0).as_const(), Some(6.0));
        assert_eq!(-(-x.clone()), x);
        assert_eq!(x.clone().pow(1), x);
        assert!(x.clone().pow(0).is_one());
    }

    #[test]
    fn structural_equality_ignores_sharing() {
        let a = Expr::var(0) * Expr::var(1).sin();
        let b = Expr::var(0) * Expr::var(1).sin();
        assert_eq!(a, b);
        assert_ne!(a, Expr::var(1) * Expr::var(0).sin());
    }

    #[test]
    fn substitute_and_variables() {
        let e = Expr::var(0) * Expr::var(2);
        let s = e.substitute(&[Expr::var(1), Expr::zero(), Expr::constant(3.0)]);
        assert_eq!(s.variables(), vec![1]);
        assert_eq!(e.variables(), vec![0, 2]);
        assert!(e.depends_on(2) && !e.depends_on(1));
    }
}
