//! Bundle-valued differential forms in a chart, the graded extension of
//! multilinear tensors, and pullbacks along maps between charts.
//!
//! A k-form stores one coefficient per strictly increasing multi-index
//! `i_1 < … < i_k`, for each target frame index. Any other index order is
//! resolved by sign on access, so antisymmetry cannot be violated.

use thiserror::Error;

use crate::expr::Expr;
use crate::table::Table;

/// Highest form degree supported.
pub const MAX_DEGREE: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error("form degree {0} exceeds the supported maximum {MAX_DEGREE}")]
    DegreeTooHigh(usize),
    #[error("bundle tag mismatch: {0}")]
    TagMismatch(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Chart a form lives on: the target manifold `N` or spacetime `M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    N,
    M,
}

/// Bundle a form or tensor slot takes values in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bundle {
    Scalar,
    E,
    TN,
}

/// All strictly increasing k-tuples in `0..dim`, lexicographic.
pub fn multi_indices(dim: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, dim: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(i + 1, dim, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= dim {
        rec(0, dim, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Sorts `idx` and returns the permutation sign, or `None` on a repeated index.
pub fn sort_with_sign(idx: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = idx.to_vec();
    let mut sign = 1.0;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            } else if v[j] == v[j + 1] {
                return None;
            }
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

#[derive(Clone, Debug, PartialEq)]
pub struct VForm {
    chart: Chart,
    dim: usize,
    degree: usize,
    target: Bundle,
    /// `coeffs[t][k]`: target index `t`, k-th increasing multi-index.
    coeffs: Vec<Vec<Expr>>,
    /// Set when the form was forced to zero because its degree exceeds the chart dimension.
    overflowed: bool,
}

impl VForm {
    pub fn zero(chart: Chart, dim: usize, degree: usize, target: Bundle, target_dim: usize) -> Result<VForm, FormError> {
        if degree > MAX_DEGREE {
            return Err(FormError::DegreeTooHigh(degree));
        }
        let count = multi_indices(dim, degree).len();
        Ok(VForm {
            chart,
            dim,
            degree,
            target,
            coeffs: vec![vec![Expr::zero(); count]; target_dim],
            overflowed: degree > dim,
        })
    }

    /// Coefficients from a function of `(target index, increasing multi-index)`.
    pub fn from_fn(
        chart: Chart,
        dim: usize,
        degree: usize,
        target: Bundle,
        target_dim: usize,
        f: impl Fn(usize, &[usize]) -> Expr,
    ) -> Result<VForm, FormError> {
        let mut form = VForm::zero(chart, dim, degree, target, target_dim)?;
        let mis = multi_indices(dim, degree);
        for (t, row) in form.coeffs.iter_mut().enumerate() {
            for (k, mi) in mis.iter().enumerate() {
                row[k] = f(t, mi);
            }
        }
        Ok(form)
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn target(&self) -> Bundle {
        self.target
    }

    pub fn target_dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn overflowed(&self) -> bool {
        self.overflowed
    }

    pub fn multi_indices(&self) -> Vec<Vec<usize>> {
        multi_indices(self.dim, self.degree)
    }

    /// Stored coefficient rows, `[target][multi-index]`.
    pub fn rows(&self) -> &[Vec<Expr>] {
        &self.coeffs
    }

    /// All stored coefficients, flattened target-major.
    pub fn flat(&self) -> Vec<Expr> {
        self.coeffs.iter().flatten().cloned().collect()
    }

    fn position(&self, sorted: &[usize]) -> usize {
        // rank of an increasing tuple among the lexicographic enumeration
        multi_indices(self.dim, self.degree)
            .iter()
            .position(|m| m == sorted)
            .expect("multi-index within chart")
    }

    /// Coefficient for an arbitrary index tuple, with the antisymmetry sign.
    pub fn component(&self, t: usize, idx: &[usize]) -> Expr {
        assert_eq!(idx.len(), self.degree, "index count must equal degree");
        match sort_with_sign(idx) {
            None => Expr::zero(),
            Some((sorted, sign)) => {
                let c = &self.coeffs[t][self.position(&sorted)];
                if sign > 0.0 {
                    c.clone()
                } else {
                    -c
                }
            }
        }
    }

    pub fn set(&mut self, t: usize, increasing: &[usize], e: Expr) {
        let k = self.position(increasing);
        self.coeffs[t][k] = e;
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> VForm {
        VForm { coeffs: self.coeffs.iter().map(|row| row.iter().map(&f).collect()).collect(), ..self.clone() }
    }

    pub fn simplify(&self) -> VForm {
        self.map(Expr::simplify)
    }

    pub fn scale(&self, s: &Expr) -> VForm {
        self.map(|c| (s * c).simplify())
    }

    fn same_kind(&self, other: &VForm) -> Result<(), FormError> {
        if self.chart != other.chart || self.dim != other.dim {
            return Err(FormError::TagMismatch("forms live on different charts".into()));
        }
        if self.degree != other.degree || self.target != other.target || self.target_dim() != other.target_dim() {
            return Err(FormError::Shape("forms differ in degree or target".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &VForm) -> Result<VForm, FormError> {
        self.same_kind(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x + y).simplify()).collect())
            .collect();
        Ok(VForm { coeffs, overflowed: self.overflowed || other.overflowed, ..self.clone() })
    }

    pub fn sub(&self, other: &VForm) -> Result<VForm, FormError> {
        self.add(&other.scale(&Expr::constant(-1.0)))
    }
}

/// Scalar wedge of coefficient lists of degrees `k` and `m` on a `dim`-chart.
fn scalar_wedge(alpha: &[Expr], k: usize, beta: &[Expr], m: usize, dim: usize) -> Vec<Expr> {
    let mis_k = multi_indices(dim, k);
    let mis_m = multi_indices(dim, m);
    multi_indices(dim, k + m)
        .iter()
        .map(|big| {
            let mut terms = Vec::new();
            for (ja, j) in mis_k.iter().enumerate() {
                if alpha[ja].is_zero() || !j.iter().all(|i| big.contains(i)) {
                    continue;
                }
                let rest: Vec<usize> = big.iter().copied().filter(|i| !j.contains(i)).collect();
                let kb = mis_m.iter().position(|x| *x == rest).expect("complement is increasing");
                if beta[kb].is_zero() {
                    continue;
                }
                let joined: Vec<usize> = j.iter().chain(&rest).copied().collect();
                let (_, sign) = sort_with_sign(&joined).expect("disjoint indices");
                terms.push(Expr::product([Expr::constant(sign), alpha[ja].clone(), beta[kb].clone()]));
            }
            Expr::sum(terms)
        })
        .collect()
}

/// Multilinear bundle map `F(e_{a_1}, …, e_{a_l})^o` with coefficients over
/// the chart coordinates. Layout `[o][a_1]…[a_l]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiTensor {
    pub chart: Chart,
    pub inputs: Vec<Bundle>,
    pub output: Bundle,
    pub coeffs: Table,
}

impl MultiTensor {
    pub fn new(chart: Chart, inputs: Vec<Bundle>, output: Bundle, coeffs: Table) -> Result<MultiTensor, FormError> {
        if coeffs.shape().len() != inputs.len() + 1 {
            return Err(FormError::Shape("coefficient table rank must be arity + 1".into()));
        }
        Ok(MultiTensor { chart, inputs, output, coeffs })
    }

    pub fn arity(&self) -> usize {
        self.inputs.len()
    }

    /// Composition with a chart map `Φ`, giving the tensor `Φ*F` on the other chart.
    pub fn compose(&self, phi: &[Expr]) -> MultiTensor {
        let chart = match self.chart {
            Chart::N => Chart::M,
            Chart::M => Chart::N,
        };
        MultiTensor { chart, coeffs: self.coeffs.map(|e| e.substitute(phi).simplify()), ..self.clone() }
    }
}

/// Graded extension `F(A_1 ∧, …, ∧ A_l) = F(e_{a_1},…,e_{a_l}) ⊗ A_1^{a_1} ∧ … ∧ A_l^{a_l}`.
pub fn wedge_extend(f: &MultiTensor, forms: &[&VForm]) -> Result<VForm, FormError> {
    if forms.len() != f.arity() {
        return Err(FormError::Shape(format!("tensor takes {} arguments, got {}", f.arity(), forms.len())));
    }
    if forms.is_empty() {
        return Err(FormError::Shape("graded extension needs at least one argument".into()));
    }
    let (chart, dim) = (forms[0].chart, forms[0].dim);
    for (i, a) in forms.iter().enumerate() {
        if a.chart != f.chart || a.chart != chart || a.dim != dim {
            return Err(FormError::TagMismatch(format!("argument {} is on a different chart", i + 1)));
        }
        if a.target != f.inputs[i] || a.target_dim() != f.coeffs.shape()[i + 1] {
            return Err(FormError::TagMismatch(format!("argument {} has the wrong bundle", i + 1)));
        }
    }
    let total: usize = forms.iter().map(|a| a.degree).sum();
    if total > MAX_DEGREE {
        return Err(FormError::DegreeTooHigh(total));
    }
    let out_dim = f.coeffs.shape()[0];
    let mut result = VForm::zero(chart, dim, total, f.output, out_dim)?;
    if total > dim {
        return Ok(result);
    }
    let in_shape: Vec<usize> = f.coeffs.shape()[1..].to_vec();
    let combos: usize = in_shape.iter().product();
    let mut acc: Vec<Vec<Vec<Expr>>> = vec![vec![Vec::new(); result.coeffs[0].len()]; out_dim];
    for flat in 0..combos {
        let idx = crate::table::unflatten(&in_shape, flat);
        let mut full = vec![0];
        full.extend(&idx);
        if (0..out_dim).all(|o| {
            full[0] = o;
            f.coeffs.get(&full).is_zero()
        }) {
            continue;
        }
        let mut w = forms[0].coeffs[idx[0]].clone();
        let mut deg = forms[0].degree;
        for (i, a) in forms.iter().enumerate().skip(1) {
            w = scalar_wedge(&w, deg, &a.coeffs[idx[i]], a.degree, dim);
            deg += a.degree;
        }
        for (o, rows) in acc.iter_mut().enumerate() {
            full[0] = o;
            let fo = f.coeffs.get(&full);
            if fo.is_zero() {
                continue;
            }
            for (k, wk) in w.iter().enumerate() {
                if !wk.is_zero() {
                    rows[k].push(fo * wk);
                }
            }
        }
    }
    for (o, rows) in acc.into_iter().enumerate() {
        for (k, terms) in rows.into_iter().enumerate() {
            result.coeffs[o][k] = Expr::sum(terms).simplify();
        }
    }
    Ok(result)
}

/// `Φ^!ω`: evaluate `ω` at `Φ(u)` on the pushed-forward coordinate vectors,
/// `(Φ^!ω)_{μ_1…μ_k} = Σ_{α_1…α_k} ω_{α_1…α_k}(Φ) ∂_{μ_1}Φ^{α_1} ⋯ ∂_{μ_k}Φ^{α_k}`.
/// `phi` holds `n` expressions over the `d` spacetime coordinates.
pub fn form_pullback(phi: &[Expr], d: usize, omega: &VForm) -> Result<VForm, FormError> {
    if omega.chart != Chart::N {
        return Err(FormError::TagMismatch("pullback expects a form on N".into()));
    }
    if phi.len() != omega.dim {
        return Err(FormError::Shape(format!("map has {} components, chart has dimension {}", phi.len(), omega.dim)));
    }
    let n = omega.dim;
    let k = omega.degree;
    let dphi: Vec<Vec<Expr>> = phi.iter().map(|p| (0..d).map(|mu| p.diff(mu).simplify()).collect()).collect();
    let composed = omega.map(|e| e.substitute(phi));
    let all_tuples: Vec<Vec<usize>> = {
        let mut v = vec![Vec::new()];
        for _ in 0..k {
            v = v.into_iter().flat_map(|t| (0..n).map(move |a| [t.clone(), vec![a]].concat())).collect();
        }
        v
    };
    VForm::from_fn(Chart::M, d, k, omega.target, omega.target_dim(), |t, mus| {
        let mut terms = Vec::new();
        for alphas in &all_tuples {
            let c = composed.component(t, alphas);
            if c.is_zero() {
                continue;
            }
            let mut factors = vec![c];
            for (mu, alpha) in mus.iter().zip(alphas) {
                factors.push(dphi[*alpha][*mu].clone());
            }
            terms.push(Expr::product(factors));
        }
        Expr::sum(terms).simplify()
    })
}

/// The same pullback through the graded extension:
/// `Φ^!ω = (1/k!) (Φ*ω)(DΦ ∧, …, ∧ DΦ)` with `DΦ` the `TN`-valued 1-form `∂_μΦ^α du^μ`.
pub fn pullback_by_graded_extension(phi: &[Expr], d: usize, omega: &VForm) -> Result<VForm, FormError> {
    if omega.chart != Chart::N {
        return Err(FormError::TagMismatch("pullback expects a form on N".into()));
    }
    let n = omega.dim;
    let k = omega.degree;
    if k == 0 {
        return Ok(VForm { chart: Chart::M, dim: d, overflowed: false, ..omega.map(|e| e.substitute(phi).simplify()) });
    }
    let mut shape = vec![omega.target_dim()];
    shape.extend(std::iter::repeat_n(n, k));
    let coeffs = Table::from_fn(&shape, |i| omega.component(i[0], &i[1..]));
    let f = MultiTensor::new(Chart::N, vec![Bundle::TN; k], omega.target, coeffs)?.compose(phi);
    let dphi = VForm::from_fn(Chart::M, d, 1, Bundle::TN, n, |alpha, mu| phi[alpha].diff(mu[0]).simplify())?;
    let args: Vec<&VForm> = std::iter::repeat_n(&dphi, k).collect();
    let factorial: f64 = (1..=k).map(|i| i as f64).product();
    Ok(wedge_extend(&f, &args)?.scale(&Expr::constant(1.0 / factorial)))
}

/// Exterior derivative, componentwise in the target frame.
pub fn exterior_derivative(omega: &VForm) -> Result<VForm, FormError> {
    let k = omega.degree + 1;
    if k > MAX_DEGREE {
        return Err(FormError::DegreeTooHigh(k));
    }
    let mut out = VForm::zero(omega.chart, omega.dim, k, omega.target, omega.target_dim())?;
    let mis = multi_indices(omega.dim, k);
    for t in 0..omega.target_dim() {
        for (pos, big) in mis.iter().enumerate() {
            let mut terms = Vec::new();
            for j in 0..big.len() {
                let rest: Vec<usize> = big.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, v)| *v).collect();
                let d = omega.component(t, &rest).diff(big[j]);
                terms.push(if j % 2 == 0 { d } else { -d });
            }
            out.coeffs[t][pos] = Expr::sum(terms).simplify();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(multi_indices(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(multi_indices(2, 3).len(), 0);
        assert_eq!(sort_with_sign(&[2, 0, 1]), Some((vec![0, 1, 2], 1.0)));
        assert_eq!(sort_with_sign(&[1, 0]), Some((vec![0, 1], -1.0)));
        assert_eq!(sort_with_sign(&[1, 1]), None);
    }

    #[test]
    fn d_of_x1_dx2() {
        let w = VForm::from_fn(Chart::N, 2, 1, Bundle::Scalar, 1, |_, mi| if mi[0] == 1 { Expr::var(0) } else { Expr::zero() }).unwrap();
        let dw = exterior_derivative(&w).unwrap();
        assert_eq!(dw.component(0, &[0, 1]).as_const(), Some(1.0));
        assert_eq!(dw.component(0, &[1, 0]).as_const(), Some(-1.0));
    }

    #[test]
    fn degree_cap_and_overflow() {
        assert_eq!(VForm::zero(Chart::N, 4, 4, Bundle::Scalar, 1), Err(FormError::DegreeTooHigh(4)));
        let z = VForm::zero(Chart::N, 1, 2, Bundle::Scalar, 1).unwrap();
        assert!(z.overflowed());
    }
}
