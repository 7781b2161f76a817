//! Numeric flow of the gauge vector field `Ψ_ε` on field configurations.
//!
//! The primary integrator works on first jets: at a fixed spacetime point the
//! state `(Φ, ∂Φ, A)` obeys a closed ODE, because the velocity of `∂Φ` is the
//! total derivative of `−ρ(Φ)ε̂(u, Φ)` and needs nothing beyond first jets.
//! Points are therefore independent. The velocity is assembled numerically
//! from `ρ, C, ω, ε̂` and their first partials; it does not reuse the symbolic
//! `δ` rules, so it serves as an oracle for them.
//!
//! The secondary integrator keeps `Φ, A` on a uniform grid and recomputes
//! `∂Φ` by central differences every stage.

use rayon::prelude::*;

use super::{FieldConfig, GaugeContext, GaugeError, GaugeParameter, JetFunctional};
use crate::expr::{Expr, Tape};
use crate::forms::Bundle;

/// A spacetime point with the jet state `y = (x, G, A)` laid out as in [`super::JetSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct JetPoint {
    pub u: Vec<f64>,
    pub y: Vec<f64>,
}

impl JetPoint {
    /// Values of `Φ`, `∂Φ`, `A` at `u`.
    pub fn from_config(config: &FieldConfig, u: &[f64]) -> Result<JetPoint, GaugeError> {
        let subs = config.jet_substitution();
        let vals = Tape::new(subs.iter()).eval(u)?;
        Ok(JetPoint { u: u.to_vec(), y: vals[config.d..].to_vec() })
    }

    /// Full jet vector `(u, x, G, A)`.
    pub fn jet(&self) -> Vec<f64> {
        let mut v = self.u.clone();
        v.extend(&self.y);
        v
    }
}

/// Numeric velocity of `Ψ_ε` on jet states.
pub struct FlowRhs {
    d: usize,
    n: usize,
    r: usize,
    tape: Tape,
}

// output offsets inside the tape
struct Layout {
    eps: usize,
    deps_u: usize,
    deps_x: usize,
    rho: usize,
    drho: usize,
    c: usize,
    omega: usize,
}

impl FlowRhs {
    fn layout(d: usize, n: usize, r: usize) -> Layout {
        let eps = 0;
        let deps_u = eps + r;
        let deps_x = deps_u + r * d;
        let rho = deps_x + r * n;
        let drho = rho + n * r;
        let c = drho + n * r * n;
        let omega = c + r * r * r;
        Layout { eps, deps_u, deps_x, rho, drho, c, omega }
    }

    pub fn new(ctx: &GaugeContext, eps: &GaugeParameter) -> Result<FlowRhs, GaugeError> {
        ctx.check_parameter(eps)?;
        let jet = ctx.jet;
        let (d, n, r) = (jet.d, jet.n, jet.r);
        let mut exprs: Vec<Expr> = eps.coeffs.clone();
        for a in 0..r {
            exprs.extend((0..d).map(|mu| eps.coeffs[a].diff(jet.u(mu))));
        }
        for a in 0..r {
            exprs.extend((0..n).map(|beta| eps.coeffs[a].diff(jet.x(beta))));
        }
        for alpha in 0..n {
            exprs.extend((0..r).map(|a| ctx.rho(alpha, a).clone()));
        }
        for alpha in 0..n {
            for a in 0..r {
                exprs.extend((0..n).map(|beta| ctx.rho(alpha, a).diff(jet.x(beta))));
            }
        }
        for a in 0..r {
            for b in 0..r {
                exprs.extend((0..r).map(|c| ctx.c(a, b, c).clone()));
            }
        }
        for a in 0..r {
            for b in 0..r {
                exprs.extend((0..n).map(|alpha| ctx.omega(a, b, alpha).clone()));
            }
        }
        Ok(FlowRhs { d, n, r, tape: Tape::new(exprs.iter()) })
    }

    /// `ε^a` at the point (evaluated at `(u, x)`).
    pub fn parameter_values(&self, p: &JetPoint) -> Result<Vec<f64>, GaugeError> {
        let mut env = p.u.clone();
        env.extend(&p.y[..self.n]);
        Ok(self.tape.eval(&env)?[..self.r].to_vec())
    }

    /// `dy/dt` at the point.
    pub fn velocity(&self, u: &[f64], y: &[f64]) -> Result<Vec<f64>, GaugeError> {
        let (d, n, r) = (self.d, self.n, self.r);
        let lay = FlowRhs::layout(d, n, r);
        let mut env = u.to_vec();
        env.extend(&y[..n]);
        let v = self.tape.eval(&env)?;
        let g = |beta: usize, mu: usize| y[n + beta * d + mu];
        let a_of = |c: usize, mu: usize| y[n + n * d + c * d + mu];
        let eps = |a: usize| v[lay.eps + a];
        let rho = |alpha: usize, a: usize| v[lay.rho + alpha * r + a];
        let drho = |alpha: usize, a: usize, beta: usize| v[lay.drho + (alpha * r + a) * n + beta];
        let c = |a: usize, b: usize, cc: usize| v[lay.c + (a * r + b) * r + cc];
        let omega = |a: usize, b: usize, alpha: usize| v[lay.omega + (a * r + b) * n + alpha];
        // total derivative of ε^a along u^μ
        let deps = |a: usize, mu: usize| {
            let mut s = v[lay.deps_u + a * d + mu];
            for beta in 0..n {
                s += v[lay.deps_x + a * n + beta] * g(beta, mu);
            }
            s
        };
        let mut out = vec![0.0; y.len()];
        for alpha in 0..n {
            out[alpha] = -(0..r).map(|a| rho(alpha, a) * eps(a)).sum::<f64>();
            for mu in 0..d {
                let mut s = 0.0;
                for a in 0..r {
                    for beta in 0..n {
                        s += drho(alpha, a, beta) * g(beta, mu) * eps(a);
                    }
                    s += rho(alpha, a) * deps(a, mu);
                }
                out[n + alpha * d + mu] = -s;
            }
        }
        for a in 0..r {
            for mu in 0..d {
                let mut s = -deps(a, mu);
                for b in 0..r {
                    for cc in 0..r {
                        let mut coef = c(a, b, cc);
                        for alpha in 0..n {
                            coef += omega(a, b, alpha) * rho(alpha, cc);
                        }
                        s += coef * eps(b) * a_of(cc, mu);
                    }
                    for alpha in 0..n {
                        s -= eps(b) * omega(a, b, alpha) * g(alpha, mu);
                    }
                }
                out[n + n * d + a * d + mu] = s;
            }
        }
        if out.iter().any(|x| !x.is_finite()) {
            return Err(GaugeError::NonFinite(format!("velocity at u={u:?}")));
        }
        Ok(out)
    }

    fn rk4(&self, u: &[f64], y: &[f64], h: f64) -> Result<Vec<f64>, GaugeError> {
        let axpy = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
        let k1 = self.velocity(u, y)?;
        let k2 = self.velocity(u, &axpy(y, &k1, h / 2.0))?;
        let k3 = self.velocity(u, &axpy(y, &k2, h / 2.0))?;
        let k4 = self.velocity(u, &axpy(y, &k3, h))?;
        let next: Vec<f64> =
            (0..y.len()).map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
        if next.iter().any(|x| !x.is_finite()) {
            return Err(GaugeError::NonFinite(format!("RK4 step at u={u:?}")));
        }
        Ok(next)
    }

    /// Flow of a single point for parameter time `t` in `steps` RK4 steps (`t` may be negative).
    pub fn integrate(&self, p: &JetPoint, t: f64, steps: usize) -> Result<JetPoint, GaugeError> {
        let h = t / steps.max(1) as f64;
        let mut y = p.y.clone();
        for _ in 0..steps.max(1) {
            y = self.rk4(&p.u, &y, h)?;
        }
        Ok(JetPoint { u: p.u.clone(), y })
    }
}

/// Flow parameter and per-point jet states.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub points: Vec<JetPoint>,
}

impl FlowState {
    pub fn from_config(config: &FieldConfig, us: &[Vec<f64>]) -> Result<FlowState, GaugeError> {
        let points = us.iter().map(|u| JetPoint::from_config(config, u)).collect::<Result<_, _>>()?;
        Ok(FlowState { t: 0.0, points })
    }
}

/// One RK4 step of size `h` at every point.
pub fn flow_step(ctx: &GaugeContext, state: &FlowState, eps: &GaugeParameter, h: f64) -> Result<FlowState, GaugeError> {
    let rhs = FlowRhs::new(ctx, eps)?;
    let points = state.points.par_iter().map(|p| rhs.integrate(p, h, 1)).collect::<Result<_, _>>()?;
    Ok(FlowState { t: state.t + h, points })
}

/// Flow for parameter time `t` with `steps` RK4 steps.
pub fn flow(ctx: &GaugeContext, state: &FlowState, eps: &GaugeParameter, t: f64, steps: usize) -> Result<FlowState, GaugeError> {
    let rhs = FlowRhs::new(ctx, eps)?;
    let points = state.points.par_iter().map(|p| rhs.integrate(p, t, steps)).collect::<Result<_, _>>()?;
    Ok(FlowState { t: state.t + t, points })
}

/// Finite-difference estimate of `δ_εF` at jet points, and the same estimate at half the step.
#[derive(Clone, Debug, PartialEq)]
pub struct FdOracle {
    pub h: f64,
    /// `[point][coefficient]`, coefficients ordered as [`JetFunctional::coefficients`].
    pub values: Vec<Vec<f64>>,
}

/// `(F(flow(+h)) − F(flow(−h)))/2h − ε̂^b K^i_{bj} F^j` at every point, with `K` the
/// target lift of the context. Each half-flow uses `substeps` RK4 steps.
pub fn fd_delta_oracle(
    ctx: &GaugeContext,
    eps: &GaugeParameter,
    f: &JetFunctional,
    points: &[JetPoint],
    h: f64,
    substeps: usize,
) -> Result<FdOracle, GaugeError> {
    let rhs = FlowRhs::new(ctx, eps)?;
    let coeffs = f.coefficients();
    let ftape = Tape::new(coeffs.iter());
    let rows = f.form.rows();
    let dim = rows.len();
    let per_row = rows.first().map_or(0, Vec::len);
    let lift = ctx.lift_coefficients(f.target()).cloned();
    let ltape = lift.as_ref().map(|t| Tape::new(t.data().iter()));
    let r = ctx.jet.r;
    let values = points
        .par_iter()
        .map(|p| -> Result<Vec<f64>, GaugeError> {
            let plus = rhs.integrate(p, h, substeps)?;
            let minus = rhs.integrate(p, -h, substeps)?;
            let fp = ftape.eval(&plus.jet())?;
            let fm = ftape.eval(&minus.jet())?;
            let mut out: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            if let (Some(lt), true) = (&ltape, f.target() != Bundle::Scalar) {
                let jet0 = p.jet();
                let k = lt.eval(&jet0)?;
                let f0 = ftape.eval(&jet0)?;
                let e = rhs.parameter_values(p)?;
                for i in 0..dim {
                    for pos in 0..per_row {
                        let mut s = 0.0;
                        for (b, eb) in e.iter().enumerate() {
                            for j in 0..dim {
                                s += eb * k[(i * r + b) * dim + j] * f0[j * per_row + pos];
                            }
                        }
                        out[i * per_row + pos] -= s;
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    Ok(FdOracle { h, values })
}

/// State after flowing along `ε` then `ϑ`, minus the state after `ϑ` then `ε`,
/// each leg lasting parameter time `h`.
pub fn closure_defect(
    ctx: &GaugeContext,
    eps: &GaugeParameter,
    theta: &GaugeParameter,
    p: &JetPoint,
    h: f64,
    substeps: usize,
) -> Result<Vec<f64>, GaugeError> {
    let fe = FlowRhs::new(ctx, eps)?;
    let ft = FlowRhs::new(ctx, theta)?;
    let et = ft.integrate(&fe.integrate(p, h, substeps)?, h, substeps)?;
    let te = fe.integrate(&ft.integrate(p, h, substeps)?, h, substeps)?;
    Ok(et.y.iter().zip(&te.y).map(|(a, b)| a - b).collect())
}

/// Uniform grid on `[-half_width, half_width]^d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub per_axis: usize,
    pub half_width: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { per_axis: 33, half_width: 1.0 }
    }
}

impl GridSpec {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.per_axis - 1) as f64
    }

    fn node_count(&self, d: usize) -> usize {
        self.per_axis.pow(d as u32)
    }

    fn multi(&self, d: usize, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; d];
        for slot in (0..d).rev() {
            idx[slot] = k % self.per_axis;
            k /= self.per_axis;
        }
        idx
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.per_axis + i)
    }

    pub fn node(&self, d: usize, k: usize) -> Vec<f64> {
        self.multi(d, k).iter().map(|&i| -self.half_width + i as f64 * self.spacing()).collect()
    }
}

/// Grid-based flow result: `Φ` and `A` at every node, `∂Φ` by central differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFlow {
    pub spec: GridSpec,
    pub d: usize,
    pub t: f64,
    /// Jet states at every node, with `G` recomputed from the final `Φ`.
    pub nodes: Vec<JetPoint>,
}

impl GridFlow {
    /// Whether node `k` is at least `margin` nodes away from every face.
    pub fn is_interior(&self, k: usize, margin: usize) -> bool {
        self.spec.multi(self.d, k).iter().all(|&i| i >= margin && i + margin < self.spec.per_axis)
    }
}

fn grid_gradient(spec: &GridSpec, d: usize, n: usize, phi: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let h = spec.spacing();
    let m = spec.per_axis;
    (0..phi.len())
        .map(|k| {
            let idx = spec.multi(d, k);
            let mut g = vec![0.0; n * d];
            for mu in 0..d {
                let at = |off: isize| {
                    let mut j = idx.clone();
                    j[mu] = (j[mu] as isize + off) as usize;
                    &phi[spec.flat(&j)]
                };
                let i = idx[mu];
                for alpha in 0..n {
                    // second order everywhere: one-sided stencils on the faces
                    g[alpha * d + mu] = if i == 0 {
                        (-3.0 * at(0)[alpha] + 4.0 * at(1)[alpha] - at(2)[alpha]) / (2.0 * h)
                    } else if i == m - 1 {
                        (3.0 * at(0)[alpha] - 4.0 * at(-1)[alpha] + at(-2)[alpha]) / (2.0 * h)
                    } else {
                        (at(1)[alpha] - at(-1)[alpha]) / (2.0 * h)
                    };
                }
            }
            g
        })
        .collect()
}

/// Flow on a grid for time `t` in `steps` RK4 steps; stages are synchronised
/// across nodes because `∂Φ` couples neighbours.
pub fn flow_grid(
    ctx: &GaugeContext,
    config: &FieldConfig,
    eps: &GaugeParameter,
    t: f64,
    steps: usize,
    spec: GridSpec,
) -> Result<GridFlow, GaugeError> {
    config.check_shape(&ctx.jet)?;
    if spec.per_axis < 3 {
        return Err(GaugeError::Shape("grid needs at least 3 nodes per axis".into()));
    }
    let rhs = FlowRhs::new(ctx, eps)?;
    let (d, n) = (ctx.jet.d, ctx.jet.n);
    let count = spec.node_count(d);
    let us: Vec<Vec<f64>> = (0..count).map(|k| spec.node(d, k)).collect();
    let init: Vec<JetPoint> = us.par_iter().map(|u| JetPoint::from_config(config, u)).collect::<Result<_, _>>()?;
    // reduced state per node: (x, A) without G
    let split = |y: &[f64]| -> Vec<f64> { y[..n].iter().chain(&y[n + n * d..]).copied().collect() };
    let mut state: Vec<Vec<f64>> = init.iter().map(|p| split(&p.y)).collect();
    let assemble = |s: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let phi: Vec<Vec<f64>> = s.iter().map(|v| v[..n].to_vec()).collect();
        let grads = grid_gradient(&spec, d, n, &phi);
        s.iter()
            .zip(grads)
            .map(|(v, g)| {
                let mut y = v[..n].to_vec();
                y.extend(g);
                y.extend(&v[n..]);
                y
            })
            .collect()
    };
    let deriv = |s: &[Vec<f64>]| -> Result<Vec<Vec<f64>>, GaugeError> {
        let ys = assemble(s);
        ys.par_iter().zip(&us).map(|(y, u)| rhs.velocity(u, y).map(|v| split(&v))).collect()
    };
    let h = t / steps.max(1) as f64;
    let axpy = |s: &[Vec<f64>], k: &[Vec<f64>], c: f64| -> Vec<Vec<f64>> {
        s.iter().zip(k).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + c * y).collect()).collect()
    };
    for _ in 0..steps.max(1) {
        let k1 = deriv(&state)?;
        let k2 = deriv(&axpy(&state, &k1, h / 2.0))?;
        let k3 = deriv(&axpy(&state, &k2, h / 2.0))?;
        let k4 = deriv(&axpy(&state, &k3, h))?;
        for (i, s) in state.iter_mut().enumerate() {
            for j in 0..s.len() {
                s[j] += h / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]);
            }
        }
        if state.iter().flatten().any(|x| !x.is_finite()) {
            return Err(GaugeError::NonFinite("grid flow".into()));
        }
    }
    let nodes = assemble(&state).into_iter().zip(us).map(|(y, u)| JetPoint { u, y }).collect();
    Ok(GridFlow { spec, d, t, nodes })
}
