//! Interface-driven, penalized thermo-phase-field fracture solver.
//!
//! The displacement block is linear given the previous phase-field iterate;
//! the phase-field block is semilinear through the irreversibility penalty.
//! The two are iterated by alternating minimization to a fixed point.

use crate::fem::{
    assemble, cell_geom, edge_quad, eval_basis, newton_solve, solve_linear, tri_quad,
    ElasticParams, ElementSystem, FESpace, FemError, Field, NewtonOptions,
};
use crate::mesh::{FacetLabel, Subdomain, TriMesh};
use crate::scalar::{Ad, Dual, Real};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PffError {
    #[error("interface facet set is empty")]
    EmptyInterface,
    #[error("alternating minimization did not converge in {iterations} steps (increment {increment})")]
    NoConvergence { iterations: usize, increment: f64 },
    #[error(transparent)]
    Fem(#[from] FemError),
}

/// Boundary-trace function evaluable at interface quadrature points.
pub type Trace<'a, T> = &'a (dyn Fn([T; 2]) -> T + Sync);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PffParams<T> {
    pub elastic: ElasticParams<T>,
    pub g_c: T,
    pub alpha_theta: T,
    pub alpha_b: T,
    pub eps: T,
    pub kappa_reg: T,
    pub gamma: T,
    pub p0: T,
    pub theta0: T,
}

impl<T: Real> PffParams<T> {
    /// Coefficient of (θ − θ₀) in the interface load.
    pub fn theta_coeff(&self) -> T {
        self.alpha_theta - T::of(3.0) * self.alpha_theta * self.elastic.k_dr
    }

    /// Combined interface load (1−α_B)(p−p₀) + (α_θ−3α_θK_dr)(θ−θ₀).
    fn load(&self, p: T, theta: T) -> T {
        (T::one() - self.alpha_b) * (p - self.p0) + self.theta_coeff() * (theta - self.theta0)
    }
}

/// Degradation g(φ) = (1−κ)φ² + κ.
pub fn degradation<T: Real, S: Ad<T>>(phi: S, kappa_reg: T) -> S {
    phi * phi * (T::one() - kappa_reg) + kappa_reg
}

pub struct PffState<T> {
    pub u: Field<T>,
    pub phi: Field<T>,
    pub phi_old: Field<T>,
}

#[derive(Clone, Debug, Default)]
pub struct PffReport {
    pub am_iterations: usize,
    pub increments: Vec<f64>,
}

fn sigma<T: Real, S: Ad<T>>(grad_u: [[S; 2]; 2], el: &ElasticParams<T>) -> [[S; 2]; 2] {
    let exy = (grad_u[0][1] + grad_u[1][0]) * T::of(0.5);
    let e = [[grad_u[0][0], exy], [exy, grad_u[1][1]]];
    let tr = e[0][0] + e[1][1];
    let two_mu = el.mu + el.mu;
    [
        [e[0][0] * two_mu + tr * el.lambda, e[0][1] * two_mu],
        [e[1][0] * two_mu, e[1][1] * two_mu + tr * el.lambda],
    ]
}

/// Displacement block: (g(φ_lin) σ_s(u), e(w)) plus interface loads.
struct USystem<'a, T: Real> {
    space: &'a FESpace<T>,
    phi_lin: &'a [T],
    params: &'a PffParams<T>,
    p: Trace<'a, T>,
    theta: Trace<'a, T>,
    facets: &'a [usize],
}

impl<'a, T: Real> ElementSystem<T> for USystem<'a, T> {
    fn n_dofs(&self) -> usize {
        self.space.n_dofs()
    }
    fn n_cells(&self) -> usize {
        self.space.mesh.n_triangles()
    }
    fn n_facets(&self) -> usize {
        self.facets.len()
    }
    fn cell_dofs(&self, cell: usize, out: &mut Vec<usize>) {
        let (pts, n) = self.space.cell_points(cell);
        for &p in &pts[..n] {
            out.push(self.space.dof(p, 0));
            out.push(self.space.dof(p, 1));
        }
    }
    fn facet_dofs(&self, facet: usize, out: &mut Vec<usize>) {
        let f = &self.space.mesh.facets[self.facets[facet]];
        for &v in &f.vertices {
            out.push(self.space.dof(v, 0));
            out.push(self.space.dof(v, 1));
        }
    }
    fn cell_residual<S: Ad<T>>(&self, cell: usize, vals: &[S], out: &mut [S]) {
        let mesh = &self.space.mesh;
        let geom = cell_geom(mesh, cell);
        let tri = mesh.triangles[cell];
        let kappa = self.params.kappa_reg;
        for (l, w) in tri_quad::<T>() {
            let b = eval_basis(1, l, &geom);
            let dx = w * geom.area;
            let mut grad_u = [[S::zero(); 2]; 2];
            for i in 0..3 {
                for c in 0..2 {
                    for k in 0..2 {
                        grad_u[c][k] += vals[2 * i + c] * b.grad[i][k];
                    }
                }
            }
            let phi_lin: T = (0..3).map(|i| self.phi_lin[tri[i]] * l[i]).sum();
            let g = degradation(phi_lin, kappa);
            let sig = sigma(grad_u, &self.params.elastic);
            for i in 0..3 {
                for c in 0..2 {
                    out[2 * i + c] +=
                        (sig[c][0] * b.grad[i][0] + sig[c][1] * b.grad[i][1]) * (g * dx);
                }
            }
        }
    }
    fn facet_residual<S: Ad<T>>(&self, facet: usize, _vals: &[S], out: &mut [S]) {
        let mesh = &self.space.mesh;
        let f = &mesh.facets[self.facets[facet]];
        let n = mesh.facet_normal(f);
        let len = mesh.facet_length(f);
        let a = mesh.vertices[f.vertices[0]];
        let b = mesh.vertices[f.vertices[1]];
        for (t, w) in edge_quad::<T>() {
            let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let c = self.params.load((self.p)(x), (self.theta)(x));
            let shapes = [T::one() - t, t];
            for (k, nk) in shapes.iter().enumerate() {
                for comp in 0..2 {
                    out[2 * k + comp] += S::constant(c * n[comp] * *nk * w * len);
                }
            }
        }
    }
}

/// Phase-field block: elastic driving term, Ambrosio-Tortorelli terms,
/// irreversibility penalty, and the linearized interface terms.
struct PhiSystem<'a, T: Real> {
    space: &'a FESpace<T>,
    u: &'a [T],
    phi_old: &'a [T],
    params: &'a PffParams<T>,
    p: Trace<'a, T>,
    theta: Trace<'a, T>,
    facets: &'a [usize],
}

impl<'a, T: Real> ElementSystem<T> for PhiSystem<'a, T> {
    fn n_dofs(&self) -> usize {
        self.space.n_dofs()
    }
    fn n_cells(&self) -> usize {
        self.space.mesh.n_triangles()
    }
    fn n_facets(&self) -> usize {
        self.facets.len()
    }
    fn cell_dofs(&self, cell: usize, out: &mut Vec<usize>) {
        out.extend_from_slice(&self.space.mesh.triangles[cell]);
    }
    fn facet_dofs(&self, facet: usize, out: &mut Vec<usize>) {
        out.extend_from_slice(&self.space.mesh.facets[self.facets[facet]].vertices);
    }
    fn cell_residual<S: Ad<T>>(&self, cell: usize, vals: &[S], out: &mut [S]) {
        let mesh = &self.space.mesh;
        let geom = cell_geom(mesh, cell);
        let tri = mesh.triangles[cell];
        let p = self.params;
        let one_mk = T::one() - p.kappa_reg;
        // grad u is constant per (P1) cell
        let mut grad_u = [[T::zero(); 2]; 2];
        for i in 0..3 {
            let b = &geom.grad_l[i];
            for c in 0..2 {
                for k in 0..2 {
                    grad_u[c][k] += self.u[2 * tri[i] + c] * b[k];
                }
            }
        }
        let sig = sigma(grad_u, &p.elastic);
        let exy = (grad_u[0][1] + grad_u[1][0]) * T::of(0.5);
        let se = sig[0][0] * grad_u[0][0] + sig[1][1] * grad_u[1][1] + (sig[0][1] + sig[1][0]) * exy;
        for (l, w) in tri_quad::<T>() {
            let dx = w * geom.area;
            let mut phi = S::zero();
            let mut grad_phi = [S::zero(); 2];
            let mut phi_old = T::zero();
            for i in 0..3 {
                phi += vals[i] * l[i];
                phi_old += self.phi_old[tri[i]] * l[i];
                for k in 0..2 {
                    grad_phi[k] += vals[i] * geom.grad_l[i][k];
                }
            }
            let bulk = phi * (one_mk * se)
                + (phi * p.gamma - p.gamma * phi_old).plus()
                - (-phi + T::one()) * (p.g_c / p.eps);
            for i in 0..3 {
                out[i] += bulk * (l[i] * dx)
                    + (grad_phi[0] * geom.grad_l[i][0] + grad_phi[1] * geom.grad_l[i][1])
                        * (p.g_c * p.eps * dx);
            }
        }
    }
    fn facet_residual<S: Ad<T>>(&self, facet: usize, _vals: &[S], out: &mut [S]) {
        let mesh = &self.space.mesh;
        let f = &mesh.facets[self.facets[facet]];
        let n = mesh.facet_normal(f);
        let len = mesh.facet_length(f);
        let [va, vb] = f.vertices;
        let a = mesh.vertices[va];
        let b = mesh.vertices[vb];
        let two_1mk = T::of(2.0) * (T::one() - self.params.kappa_reg);
        for (t, w) in edge_quad::<T>() {
            let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let c = self.params.load((self.p)(x), (self.theta)(x));
            let s = T::one() - t;
            let u_q = [
                self.u[2 * va] * s + self.u[2 * vb] * t,
                self.u[2 * va + 1] * s + self.u[2 * vb + 1] * t,
            ];
            let nu = n[0] * u_q[0] + n[1] * u_q[1];
            let common = two_1mk * c * nu * w * len;
            out[0] += S::constant(common * s);
            out[1] += S::constant(common * t);
        }
    }
}

/// Initial phase field: solves the Ambrosio-Tortorelli equation without
/// coupling or penalty, with φ = 0 enforced on the fluid region.
pub fn init_phase_field<T: Real>(
    mesh: Arc<TriMesh<T>>,
    params: &PffParams<T>,
) -> Result<PffState<T>, PffError> {
    let phi_space = FESpace::new(mesh.clone(), 1, 1);
    let u_space = FESpace::new(mesh.clone(), 1, 2);
    let mut phi = phi_space.zero_field();
    for c in phi.coeffs.iter_mut() {
        *c = T::one();
    }
    let fluid = phi_space.points_in(Subdomain::Fluid);
    for &p in &fluid {
        phi.coeffs[p] = T::zero();
    }
    let mut init_params = *params;
    init_params.gamma = T::zero();
    let u = u_space.zero_field();
    let zero = |_: [T; 2]| T::zero();
    let sys = PhiSystem {
        space: &phi_space,
        u: &u.coeffs,
        phi_old: &phi.coeffs,
        params: &init_params,
        p: &zero,
        theta: &zero,
        facets: &[],
    };
    let mut assembled = assemble::<T, 3>(&sys, &phi.coeffs)?;
    assembled.constrain(fluid.iter().copied());
    let delta = solve_linear(&assembled)?;
    for (c, d) in phi.coeffs.iter_mut().zip(&delta) {
        // the discrete screened equation can overshoot [0,1] by a few 1e-5
        // on non-acute triangles; clamp the indicator-like field
        *c = (*c - *d).min(T::one()).max(T::zero());
    }
    Ok(PffState {
        u,
        phi_old: phi.clone(),
        phi,
    })
}

/// One interface-driven PFF solve (Definition-3.2-type system) by alternating
/// minimization: a linear displacement solve given the previous phase-field
/// iterate, then a semismooth Newton solve of the phase-field equation.
///
/// The irreversibility penalty acts against `state.phi_old` (the previous
/// coupling iteration), while the degradation factor is relaxed with the
/// previous alternating-minimization iterate. The fluid region is the crack
/// set, so φ = 0 stays enforced there, matching the initialization.
pub fn solve_pff_step<T: Real>(
    state: &PffState<T>,
    p_trace: Trace<'_, T>,
    theta_trace: Trace<'_, T>,
    params: &PffParams<T>,
    facets: &[usize],
) -> Result<(PffState<T>, PffReport), PffError> {
    if facets.is_empty() {
        return Err(PffError::EmptyInterface);
    }
    let phi_space = state.phi.space.clone();
    let u_space = state.u.space.clone();
    let outer: Vec<usize> = u_space
        .points_on(FacetLabel::Outer)
        .iter()
        .flat_map(|&p| [u_space.dof(p, 0), u_space.dof(p, 1)])
        .collect();

    let mut u = state.u.coeffs.clone();
    for &d in &outer {
        u[d] = T::zero();
    }
    let fluid = phi_space.points_in(Subdomain::Fluid);
    let mut phi = state.phi.coeffs.clone();
    for &p in &fluid {
        phi[p] = T::zero();
    }
    let mut report = PffReport::default();

    for m in 1..=50 {
        // displacement solve, linear given the current phase-field iterate
        let u_prev = u.clone();
        let usys = USystem {
            space: &u_space,
            phi_lin: &phi,
            params,
            p: p_trace,
            theta: theta_trace,
            facets,
        };
        let mut assembled = assemble::<T, 6>(&usys, &u)?;
        assembled.constrain(outer.iter().copied());
        let delta = solve_linear(&assembled)?;
        for (x, d) in u.iter_mut().zip(&delta) {
            *x -= *d;
        }

        // phase-field solve, semismooth in the penalty
        let phi_prev = phi.clone();
        let psys = PhiSystem {
            space: &phi_space,
            u: &u,
            phi_old: &state.phi_old.coeffs,
            params,
            p: p_trace,
            theta: theta_trace,
            facets,
        };
        newton_solve(
            &mut phi,
            |x| {
                let mut a = assemble::<T, 3>(&psys, x)?;
                a.constrain(fluid.iter().copied());
                Ok(a)
            },
            |_| true,
            NewtonOptions {
                tol: T::of(1e-9),
                max_iter: 50,
                max_backtracks: 0,
                full_steps: true,
                // the γ-penalty puts a floor under the achievable residual;
                // active-set cycling below 1e-5 relative is accepted
                stagnation_window: 8,
                stagnation_tol: T::of(1e-5),
            },
        )?;

        let norm = |v: &[T]| v.iter().map(|x| *x * *x).sum::<T>().sqrt();
        let diff = |a: &[T], b: &[T]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (*x - *y) * (*x - *y))
                .sum::<T>()
                .sqrt()
        };
        let inc = (diff(&u, &u_prev) + diff(&phi, &phi_prev))
            / T::one().max(norm(&u) + norm(&phi));
        report.am_iterations = m;
        report.increments.push(inc.as_f64());
        if inc <= T::of(1e-8) {
            let mk = |space: &FESpace<T>, coeffs: Vec<T>| Field {
                space: space.clone(),
                coeffs,
            };
            return Ok((
                PffState {
                    u: mk(&u_space, u),
                    phi: mk(&phi_space, phi),
                    phi_old: state.phi_old.clone(),
                },
                report,
            ));
        }
    }
    Err(PffError::NoConvergence {
        iterations: 50,
        increment: *report.increments.last().unwrap_or(&f64::NAN),
    })
}

/// Energy functional: degraded elastic energy, Ambrosio-Tortorelli surface
/// energy, interface load work (with g(φ)), and the irreversibility penalty.
pub fn pff_energy<T: Real>(
    state: &PffState<T>,
    params: &PffParams<T>,
    p_trace: Trace<'_, T>,
    theta_trace: Trace<'_, T>,
    facets: &[usize],
) -> T {
    let (e, _, _) = energy_and_gradient(state, params, p_trace, theta_trace, facets, false);
    e
}

/// Analytic gradient of [`pff_energy`] with respect to (u, φ) coefficients.
pub fn pff_energy_gradient<T: Real>(
    state: &PffState<T>,
    params: &PffParams<T>,
    p_trace: Trace<'_, T>,
    theta_trace: Trace<'_, T>,
    facets: &[usize],
) -> (Vec<T>, Vec<T>) {
    let (_, gu, gp) = energy_and_gradient(state, params, p_trace, theta_trace, facets, true);
    (gu, gp)
}

fn energy_and_gradient<T: Real>(
    state: &PffState<T>,
    params: &PffParams<T>,
    p_trace: Trace<'_, T>,
    theta_trace: Trace<'_, T>,
    facets: &[usize],
    with_grad: bool,
) -> (T, Vec<T>, Vec<T>) {
    let mesh = &state.phi.space.mesh;
    let u = &state.u.coeffs;
    let phi = &state.phi.coeffs;
    let phi_old = &state.phi_old.coeffs;
    let p = params;
    let mut energy = T::zero();
    let mut grad_u = vec![T::zero(); u.len()];
    let mut grad_phi = vec![T::zero(); phi.len()];

    // cell energy via duals over the 9 local dofs (6 u + 3 phi)
    type D<T> = Dual<T, 9>;
    for cell in 0..mesh.n_triangles() {
        let geom = cell_geom(mesh, cell);
        let tri = mesh.triangles[cell];
        let mut lu = [D::<T>::new(T::zero()); 6];
        let mut lphi = [D::<T>::new(T::zero()); 3];
        for i in 0..3 {
            for c in 0..2 {
                lu[2 * i + c] = D::variable(u[2 * tri[i] + c], 2 * i + c);
            }
            lphi[i] = D::variable(phi[tri[i]], 6 + i);
        }
        let mut e_cell = D::<T>::new(T::zero());
        let mut gu = [[D::<T>::new(T::zero()); 2]; 2];
        for i in 0..3 {
            for c in 0..2 {
                for k in 0..2 {
                    gu[c][k] += lu[2 * i + c] * geom.grad_l[i][k];
                }
            }
        }
        let sig = sigma(gu, &p.elastic);
        let exy = (gu[0][1] + gu[1][0]) * T::of(0.5);
        let se = sig[0][0] * gu[0][0] + sig[1][1] * gu[1][1] + (sig[0][1] + sig[1][0]) * exy;
        for (l, w) in tri_quad::<T>() {
            let dx = w * geom.area;
            let mut ph = D::<T>::new(T::zero());
            let mut gph = [D::<T>::new(T::zero()); 2];
            let mut ph_old = T::zero();
            for i in 0..3 {
                ph += lphi[i] * l[i];
                ph_old += phi_old[tri[i]] * l[i];
                for k in 0..2 {
                    gph[k] += lphi[i] * geom.grad_l[i][k];
                }
            }
            let g = degradation(ph, p.kappa_reg);
            let one_minus = -ph + T::one();
            let pen = (ph - ph_old).plus();
            e_cell += (g * se * T::of(0.5)
                + (gph[0] * gph[0] + gph[1] * gph[1]) * (p.g_c * p.eps * T::of(0.5))
                + one_minus * one_minus * (p.g_c / (T::of(2.0) * p.eps))
                + pen * pen * (p.gamma * T::of(0.5)))
                * dx;
        }
        energy += e_cell.re;
        if with_grad {
            for i in 0..3 {
                for c in 0..2 {
                    grad_u[2 * tri[i] + c] += e_cell.eps[2 * i + c];
                }
                grad_phi[tri[i]] += e_cell.eps[6 + i];
            }
        }
    }

    // facet energy: 6 local dofs (4 u + 2 phi)
    type F<T> = Dual<T, 6>;
    for &fi in facets {
        let f = &mesh.facets[fi];
        let n = mesh.facet_normal(f);
        let len = mesh.facet_length(f);
        let [va, vb] = f.vertices;
        let a = mesh.vertices[va];
        let b = mesh.vertices[vb];
        let lu = [
            F::variable(u[2 * va], 0),
            F::variable(u[2 * va + 1], 1),
            F::variable(u[2 * vb], 2),
            F::variable(u[2 * vb + 1], 3),
        ];
        let lphi = [F::variable(phi[va], 4), F::variable(phi[vb], 5)];
        let mut e_f = F::<T>::new(T::zero());
        for (t, w) in edge_quad::<T>() {
            let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let c = p.load((p_trace)(x), (theta_trace)(x));
            let s = T::one() - t;
            let uq = [lu[0] * s + lu[2] * t, lu[1] * s + lu[3] * t];
            let phq = lphi[0] * s + lphi[1] * t;
            let nu = uq[0] * n[0] + uq[1] * n[1];
            e_f += degradation(phq, p.kappa_reg) * nu * (c * w * len);
        }
        energy += e_f.re;
        if with_grad {
            grad_u[2 * va] += e_f.eps[0];
            grad_u[2 * va + 1] += e_f.eps[1];
            grad_u[2 * vb] += e_f.eps[2];
            grad_u[2 * vb + 1] += e_f.eps[3];
            grad_phi[va] += e_f.eps[4];
            grad_phi[vb] += e_f.eps[5];
        }
    }
    (energy, grad_u, grad_phi)
}

/// Total crack volume ∫ u·∇φ dx.
pub fn total_crack_volume<T: Real>(u: &Field<T>, phi: &Field<T>) -> T {
    let mesh = &phi.space.mesh;
    let mut tcv = T::zero();
    for cell in 0..mesh.n_triangles() {
        let geom = cell_geom(mesh, cell);
        let tri = mesh.triangles[cell];
        let (upts, un) = u.space.cell_points(cell);
        for (l, w) in tri_quad::<T>() {
            let b = eval_basis(u.space.degree, l, &geom);
            let mut uq = [T::zero(); 2];
            for i in 0..un {
                for c in 0..2 {
                    uq[c] += u.coeffs[u.space.dof(upts[i], c)] * b.val[i];
                }
            }
            let mut gph = [T::zero(); 2];
            for i in 0..3 {
                for k in 0..2 {
                    gph[k] += phi.coeffs[tri[i]] * geom.grad_l[i][k];
                }
            }
            tcv += (uq[0] * gph[0] + uq[1] * gph[1]) * w * geom.area;
        }
    }
    tcv
}

/// All INTERFACE facet indices of a mesh.
pub fn interface_facets<T: Real>(mesh: &TriMesh<T>) -> Vec<usize> {
    (0..mesh.facets.len())
        .filter(|&i| mesh.facets[i].label == FacetLabel::Interface)
        .collect()
}
