//! Dense multi-index tables of expressions (row-major).

use rayon::prelude::*;

use crate::expr::{Expr, VarSpace};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    shape: Vec<usize>,
    data: Vec<Expr>,
}

impl Table {
    pub fn zeros(shape: &[usize]) -> Table {
        let len = shape.iter().product();
        Table { shape: shape.to_vec(), data: vec![Expr::zero(); len] }
    }

    /// Fills every entry from its multi-index.
    pub fn from_fn(shape: &[usize], f: impl Fn(&[usize]) -> Expr + Sync + Send) -> Table {
        let len: usize = shape.iter().product();
        let data = (0..len)
            .into_par_iter()
            .map(|flat| {
                let idx = unflatten(shape, flat);
                f(&idx)
            })
            .collect();
        Table { shape: shape.to_vec(), data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.shape.len(), "index rank");
        let mut off = 0;
        for (i, (&k, &n)) in idx.iter().zip(&self.shape).enumerate() {
            assert!(k < n, "index {k} out of range {n} in slot {i}");
            off = off * n + k;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> &Expr {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], e: Expr) {
        let o = self.offset(idx);
        self.data[o] = e;
    }

    pub fn data(&self) -> &[Expr] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr + Sync + Send) -> Table {
        Table { shape: self.shape.clone(), data: self.data.par_iter().map(f).collect() }
    }

    pub fn simplify(&self) -> Table {
        self.map(Expr::simplify)
    }

    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.data.len()).map(move |k| unflatten(&self.shape, k))
    }

    /// Entry-wise difference, for residual tables.
    pub fn sub(&self, other: &Table) -> Table {
        assert_eq!(self.shape, other.shape, "table shapes differ");
        Table {
            shape: self.shape.clone(),
            data: self.data.par_iter().zip(&other.data).map(|(a, b)| (a - b).simplify()).collect(),
        }
    }

    /// Human-readable listing of nonzero entries with one-based indices.
    pub fn render(&self, label: &str, space: &VarSpace) -> String {
        let mut s = String::new();
        for (k, e) in self.data.iter().enumerate() {
            let e = e.simplify();
            if e.is_zero() {
                continue;
            }
            let idx: Vec<String> = unflatten(&self.shape, k).iter().map(|i| (i + 1).to_string()).collect();
            s.push_str(&format!("{label}[{}] = {}\n", idx.join(","), e.display(space)));
        }
        if s.is_empty() {
            s.push_str(&format!("{label}: all entries zero\n"));
        }
        s
    }
}

pub fn unflatten(shape: &[usize], mut flat: usize) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for (slot, &n) in shape.iter().enumerate().rev() {
        idx[slot] = flat % n;
        flat /= n;
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_row_major() {
        let t = Table::from_fn(&[2, 3], |i| Expr::constant((10 * i[0] + i[1]) as f64));
        assert_eq!(t.get(&[1, 2]).as_const(), Some(12.0));
        assert_eq!(t.data()[4].as_const(), Some(11.0));
        assert_eq!(unflatten(&[2, 3], 5), vec![1, 2]);
        let idx: Vec<_> = t.indices().collect();
        assert_eq!(idx[3], vec![1, 0]);
    }
}
