//! Bottom-up normalisation.
//!
//! Sums become coefficient-weighted lists of distinct terms, products become
//! coefficient-weighted lists of distinct bases with integer exponents,
//! quotients turn into negative powers. Operand order is canonical (sorted by
//! structural hash), so identical subtrees from different origins merge.

use std::collections::HashMap;

use super::{eval, Expr, Node};

impl Expr {
    pub fn simplify(&self) -> Expr {
        let mut memo = HashMap::new();
        simp(self, &mut memo)
    }
}

/// Splits a simplified term into `coefficient * rest`.
fn split_coeff(e: &Expr) -> (f64, Option<Expr>) {
    match e.node() {
        Node::Const(c) => (*c, None),
        Node::Neg(a) => {
            let (c, r) = split_coeff(a);
            (-c, r)
        }
        Node::Product(fs) => match fs[0].node() {
            Node::Const(c) => {
                let rest: Vec<Expr> = fs[1..].to_vec();
                let rest = if rest.len() == 1 { rest.into_iter().next().unwrap() } else { Expr::from_node(Node::Product(rest)) };
                (*c, Some(rest))
            }
            _ => (1.0, Some(e.clone())),
        },
        _ => (1.0, Some(e.clone())),
    }
}

fn scaled(c: f64, rest: Expr) -> Expr {
    if c == 1.0 {
        rest
    } else if c == -1.0 {
        Expr::from_node(Node::Neg(rest))
    } else {
        match rest.node() {
            Node::Product(fs) => {
                let mut v = Vec::with_capacity(fs.len() + 1);
                v.push(Expr::constant(c));
                v.extend(fs.iter().cloned());
                Expr::from_node(Node::Product(v))
            }
            _ => Expr::from_node(Node::Product(vec![Expr::constant(c), rest])),
        }
    }
}

fn build_sum(terms: Vec<Expr>) -> Expr {
    let mut constant = 0.0;
    let mut index: HashMap<Expr, usize> = HashMap::new();
    let mut groups: Vec<(Expr, f64)> = Vec::new();
    // (weight, term); constant multiples of sums are distributed so that
    // `a + b - (a + b)` cancels
    let mut stack: Vec<(f64, Expr)> = terms.into_iter().rev().map(|t| (1.0, t)).collect();
    while let Some((w, t)) = stack.pop() {
        let (c, rest) = split_coeff(&t);
        let c = w * c;
        match rest {
            None => constant += c,
            Some(rest) => {
                if let Node::Sum(inner) = rest.node() {
                    for s in inner.iter().rev() {
                        stack.push((c, s.clone()));
                    }
                    continue;
                }
                match index.get(&rest) {
                    Some(&k) => groups[k].1 += c,
                    None => {
                        index.insert(rest.clone(), groups.len());
                        groups.push((rest, c));
                    }
                }
            }
        }
    }
    groups.retain(|(_, c)| *c != 0.0);
    groups.sort_by_key(|(e, _)| e.hash());
    let mut out: Vec<Expr> = Vec::with_capacity(groups.len() + 1);
    if constant != 0.0 {
        out.push(Expr::constant(constant));
    }
    out.extend(groups.into_iter().map(|(e, c)| scaled(c, e)));
    match out.len() {
        0 => Expr::zero(),
        1 => out.pop().unwrap(),
        _ => Expr::from_node(Node::Sum(out)),
    }
}

fn build_product(factors: Vec<(Expr, i32)>) -> Expr {
    let mut coeff = 1.0;
    let mut index: HashMap<Expr, usize> = HashMap::new();
    let mut groups: Vec<(Expr, i64)> = Vec::new();
    let mut stack = factors;
    stack.reverse();
    while let Some((f, n)) = stack.pop() {
        match f.node() {
            Node::Const(c) => {
                if *c == 0.0 && n > 0 {
                    return Expr::zero();
                }
                match eval::apply_powi(*c, n) {
                    Ok(v) => coeff *= v,
                    Err(_) => push_group(&mut index, &mut groups, f.clone(), n as i64),
                }
            }
            Node::Neg(a) => {
                if n % 2 != 0 {
                    coeff = -coeff;
                }
                stack.push((a.clone(), n));
            }
            Node::Product(fs) => {
                for g in fs.iter().rev() {
                    stack.push((g.clone(), n));
                }
            }
            Node::Pow(b, m) => match m.checked_mul(n) {
                Some(k) => stack.push((b.clone(), k)),
                None => push_group(&mut index, &mut groups, f.clone(), n as i64),
            },
            _ => push_group(&mut index, &mut groups, f.clone(), n as i64),
        }
    }
    if coeff == 0.0 {
        return Expr::zero();
    }
    groups.retain(|(_, n)| *n != 0);
    groups.sort_by_key(|(e, _)| e.hash());
    let mut out: Vec<Expr> = Vec::with_capacity(groups.len());
    for (b, n) in groups {
        let n = i32::try_from(n).unwrap_or(if n > 0 { i32::MAX } else { i32::MIN });
        out.push(if n == 1 { b } else { Expr::from_node(Node::Pow(b, n)) });
    }
    let rest = match out.len() {
        0 => return Expr::constant(coeff),
        1 => out.pop().unwrap(),
        _ => Expr::from_node(Node::Product(out)),
    };
    scaled(coeff, rest)
}

fn push_group(index: &mut HashMap<Expr, usize>, groups: &mut Vec<(Expr, i64)>, f: Expr, n: i64) {
    match index.get(&f) {
        Some(&k) => groups[k].1 += n,
        None => {
            index.insert(f.clone(), groups.len());
            groups.push((f, n));
        }
    }
}

fn simp(e: &Expr, memo: &mut HashMap<*const (), Expr>) -> Expr {
    if let Some(s) = memo.get(&e.ptr()) {
        return s.clone();
    }
    let out = match e.node() {
        Node::Const(_) | Node::Var(_) => e.clone(),
        Node::Sum(ts) => {
            let ts: Vec<Expr> = ts.iter().map(|t| simp(t, memo)).collect();
            build_sum(ts)
        }
        Node::Product(fs) => {
            let fs: Vec<(Expr, i32)> = fs.iter().map(|f| (simp(f, memo), 1)).collect();
            build_product(fs)
        }
        Node::Quotient(a, b) => {
            let a = simp(a, memo);
            let b = simp(b, memo);
            build_product(vec![(a, 1), (b, -1)])
        }
        Node::Neg(a) => {
            let a = simp(a, memo);
            build_product(vec![(Expr::constant(-1.0), 1), (a, 1)])
        }
        Node::Pow(b, n) => {
            let b = simp(b, memo);
            build_product(vec![(b, *n)])
        }
        Node::Func(f, a) => Expr::func(*f, simp(a, memo)),
    };
    memo.insert(e.ptr(), out.clone());
    out
}
