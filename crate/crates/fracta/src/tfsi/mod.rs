//! Stationary monolithic thermo-fluid-structure interaction in ALE
//! coordinates on a fitted mesh.
//!
//! One Newton solve couples velocity, deformation, pressure, and temperature:
//! Boussinesq flow pulled back by F = I + grad u in the fluid, linear
//! thermo-elasticity in the solid, a harmonic mesh extension for the fluid
//! deformation, and convection-diffusion for the temperature on the whole
//! domain. The pressure is normalized to mean zero over the fluid by a scalar
//! Lagrange multiplier.

use crate::fem::{
    assemble, cell_geom, eval_basis, newton_solve, tri_quad, ElasticParams, ElementSystem,
    FESpace, FemError, Field, NewtonOptions,
};
use crate::mesh::{FacetLabel, Subdomain, TriMesh};
use crate::scalar::{Ad, Real};
use std::cell::Cell;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TfsiError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mesh entanglement: deformation update kept det(I + grad u) nonpositive")]
    MeshEntanglement,
    #[error(transparent)]
    Fem(#[from] FemError),
}

/// Fluid-side material data and loads. Forces are functions of the reference
/// coordinate.
pub struct FluidParams<T> {
    pub rho: T,
    pub nu: T,
    pub alpha_theta: T,
    /// Buoyancy force per unit mass.
    pub f_f: [T; 2],
    pub kappa_f: T,
    pub f_hat: Box<dyn Fn([T; 2]) -> [T; 2] + Sync>,
    pub f_theta: Box<dyn Fn([T; 2]) -> T + Sync>,
    /// Harmonic mesh extension parameter.
    pub alpha_u: T,
}

impl<T: Real> FluidParams<T> {
    /// Quiescent fluid: unit density/viscosity/extension, no loads.
    pub fn quiescent(kappa_f: T) -> Self {
        FluidParams {
            rho: T::one(),
            nu: T::one(),
            alpha_theta: T::zero(),
            f_f: [T::zero(); 2],
            kappa_f,
            f_hat: Box::new(|_| [T::zero(); 2]),
            f_theta: Box::new(|_| T::zero()),
            alpha_u: T::one(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolidParamsT<T> {
    pub elastic: ElasticParams<T>,
    pub alpha_theta: T,
    pub alpha_b: T,
    pub kappa_s: T,
    pub theta0: T,
    pub p0: T,
}

/// Outer-boundary Dirichlet data; deformation is always zero there.
pub struct TfsiBc<T> {
    pub v_outer: Box<dyn Fn([T; 2]) -> [T; 2] + Sync>,
    pub theta_outer: Box<dyn Fn([T; 2]) -> T + Sync>,
}

impl<T: Real> TfsiBc<T> {
    pub fn homogeneous(theta0: T) -> Self {
        TfsiBc {
            v_outer: Box::new(|_| [T::zero(); 2]),
            theta_outer: Box::new(move |_| theta0),
        }
    }
}

pub struct TfsiState<T> {
    pub v: Field<T>,
    pub u: Field<T>,
    pub p: Field<T>,
    pub theta: Field<T>,
}

#[derive(Clone, Debug, Default)]
pub struct TfsiReport {
    pub newton_iterations: usize,
    pub residual_norms: Vec<f64>,
    /// Whether the two-step load ramp was needed.
    pub ramped: bool,
    /// Mean-zero pressure multiplier at the solution.
    pub multiplier: f64,
}

/// Monolithic system over (v, u, theta) quadratic, p linear, plus one
/// mean-zero pressure multiplier as the last global dof.
struct TfsiSystem<'a, T: Real> {
    mesh: &'a TriMesh<T>,
    p2: &'a FESpace<T>,
    fp: &'a FluidParams<T>,
    sp: &'a SolidParamsT<T>,
    np2: usize,
    n: usize,
    /// Homotopy factor on loads, convection, and buoyancy.
    ramp: T,
}

impl<'a, T: Real> TfsiSystem<'a, T> {
    fn off_u(&self) -> usize {
        2 * self.np2
    }
    fn off_th(&self) -> usize {
        4 * self.np2
    }
    fn off_p(&self) -> usize {
        5 * self.np2
    }
}

impl<'a, T: Real> ElementSystem<T> for TfsiSystem<'a, T> {
    fn n_dofs(&self) -> usize {
        self.n
    }
    fn n_cells(&self) -> usize {
        self.mesh.n_triangles()
    }
    fn cell_dofs(&self, cell: usize, out: &mut Vec<usize>) {
        let (pts, _) = self.p2.cell_points(cell);
        for &pt in &pts {
            out.push(2 * pt);
            out.push(2 * pt + 1);
        }
        for &pt in &pts {
            out.push(self.off_u() + 2 * pt);
            out.push(self.off_u() + 2 * pt + 1);
        }
        for &pt in &pts {
            out.push(self.off_th() + pt);
        }
        if self.mesh.tri_label[cell] == Subdomain::Fluid {
            for &v in &self.mesh.triangles[cell] {
                out.push(self.off_p() + v);
            }
            out.push(self.n - 1);
        }
    }
    fn cell_residual<S: Ad<T>>(&self, cell: usize, vals: &[S], out: &mut [S]) {
        let geom = cell_geom(self.mesh, cell);
        let fluid = self.mesh.tri_label[cell] == Subdomain::Fluid;
        let (fp, sp) = (self.fp, self.sp);
        let ramp = self.ramp;
        for (l, w) in tri_quad::<T>() {
            let b = eval_basis(2, l, &geom);
            let dx = w * geom.area;
            let x = geom.point(l);
            let mut v = [S::zero(); 2];
            let mut gv = [[S::zero(); 2]; 2];
            let mut gu = [[S::zero(); 2]; 2];
            let mut th = S::zero();
            let mut gth = [S::zero(); 2];
            for i in 0..6 {
                for c in 0..2 {
                    v[c] += vals[2 * i + c] * b.val[i];
                    for k in 0..2 {
                        gv[c][k] += vals[2 * i + c] * b.grad[i][k];
                        gu[c][k] += vals[12 + 2 * i + c] * b.grad[i][k];
                    }
                }
                th += vals[24 + i] * b.val[i];
                for k in 0..2 {
                    gth[k] += vals[24 + i] * b.grad[i][k];
                }
            }
            // F = I + grad u, its determinant and inverse
            let f = [
                [gu[0][0] + T::one(), gu[0][1]],
                [gu[1][0], gu[1][1] + T::one()],
            ];
            let jj = f[0][0] * f[1][1] - f[0][1] * f[1][0];
            let finv = [[f[1][1] / jj, -f[0][1] / jj], [-f[1][0] / jj, f[0][0] / jj]];

            if fluid {
                let p = vals[30] * l[0] + vals[31] * l[1] + vals[32] * l[2];
                let lam = vals[33];
                // G = grad v F^{-1}; sigma_Bou = -p I + rho nu (G + G^T)
                let mut g = [[S::zero(); 2]; 2];
                for c in 0..2 {
                    for k in 0..2 {
                        g[c][k] = gv[c][0] * finv[0][k] + gv[c][1] * finv[1][k];
                    }
                }
                let rn = fp.rho * fp.nu;
                let mut sig = [[S::zero(); 2]; 2];
                for c in 0..2 {
                    for k in 0..2 {
                        sig[c][k] = (g[c][k] + g[k][c]) * rn;
                    }
                    sig[c][c] -= p;
                }
                // A = J sigma_Bou F^{-T}
                let mut a = [[S::zero(); 2]; 2];
                for c in 0..2 {
                    for k in 0..2 {
                        a[c][k] = (sig[c][0] * finv[k][0] + sig[c][1] * finv[k][1]) * jj;
                    }
                }
                let wv = [
                    finv[0][0] * v[0] + finv[0][1] * v[1],
                    finv[1][0] * v[0] + finv[1][1] * v[1],
                ];
                let fh = (fp.f_hat)(x);
                let buoy_c = fp.alpha_theta * ramp;
                for i in 0..6 {
                    for c in 0..2 {
                        let conv = (wv[0] * gv[c][0] + wv[1] * gv[c][1]) * (fp.rho * ramp);
                        let load = (th - sp.theta0) * (buoy_c * fp.f_f[c])
                            + S::constant(fp.rho * ramp * fh[c]);
                        out[2 * i + c] += (a[c][0] * b.grad[i][0] + a[c][1] * b.grad[i][1]) * dx
                            + (conv - load * jj) * (b.val[i] * dx);
                        out[12 + 2 * i + c] += (gu[c][0] * b.grad[i][0] + gu[c][1] * b.grad[i][1])
                            * (fp.alpha_u * dx);
                    }
                }
                // mass conservation via the Piola identity, plus the
                // mean-zero multiplier block
                let divv = (g[0][0] + g[1][1]) * jj;
                for i in 0..3 {
                    out[30 + i] += (divv + lam) * (l[i] * dx);
                }
                out[33] += p * dx;
            } else {
                // solid: sigma_R = 2 mu e(u) + lambda tr e I - 3 a K (th-th0) I
                let el = &sp.elastic;
                let exy = (gu[0][1] + gu[1][0]) * T::of(0.5);
                let tr = gu[0][0] + gu[1][1];
                let two_mu = el.mu + el.mu;
                let thermal =
                    (th - sp.theta0) * (T::of(3.0) * sp.alpha_theta * el.k_dr);
                let sig = [
                    [gu[0][0] * two_mu + tr * el.lambda - thermal, exy * two_mu],
                    [exy * two_mu, gu[1][1] * two_mu + tr * el.lambda - thermal],
                ];
                for i in 0..6 {
                    for c in 0..2 {
                        out[2 * i + c] +=
                            (sig[c][0] * b.grad[i][0] + sig[c][1] * b.grad[i][1]) * dx;
                        out[12 + 2 * i + c] -= v[c] * (b.val[i] * dx);
                    }
                }
            }

            // temperature: pulled-back diffusion, convection, and source
            let kappa = if fluid { fp.kappa_f } else { sp.kappa_s };
            let mut cinv = [[S::zero(); 2]; 2];
            for k in 0..2 {
                for m in 0..2 {
                    cinv[k][m] = finv[k][0] * finv[m][0] + finv[k][1] * finv[m][1];
                }
            }
            let q = [
                (cinv[0][0] * gth[0] + cinv[0][1] * gth[1]) * kappa * jj,
                (cinv[1][0] * gth[0] + cinv[1][1] * gth[1]) * kappa * jj,
            ];
            let wv = [
                finv[0][0] * v[0] + finv[0][1] * v[1],
                finv[1][0] * v[0] + finv[1][1] * v[1],
            ];
            let conv = (wv[0] * gth[0] + wv[1] * gth[1]) * jj * ramp;
            let src = jj * (ramp * (fp.f_theta)(x));
            for i in 0..6 {
                out[24 + i] += (q[0] * b.grad[i][0] + q[1] * b.grad[i][1]) * dx
                    + (conv - src) * (b.val[i] * dx);
            }
        }
    }
}

fn validate<T: Real>(fp: &FluidParams<T>, sp: &SolidParamsT<T>) -> Result<(), TfsiError> {
    for (name, v) in [
        ("rho", fp.rho),
        ("nu", fp.nu),
        ("kappa_f", fp.kappa_f),
        ("alpha_u", fp.alpha_u),
        ("kappa_s", sp.kappa_s),
    ] {
        if !(v > T::zero()) {
            return Err(TfsiError::InvalidParameter(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    if sp.alpha_b != T::zero() {
        return Err(TfsiError::InvalidParameter(
            "alpha_b must be zero (pressure is not carried in the solid)".into(),
        ));
    }
    Ok(())
}

/// True when det(I + grad u) > 0 at every cell quadrature point.
fn deformation_admissible<T: Real>(p2: &FESpace<T>, off_u: usize, state: &[T]) -> bool {
    let mesh = &p2.mesh;
    for cell in 0..mesh.n_triangles() {
        let geom = cell_geom(mesh, cell);
        let (pts, _) = p2.cell_points(cell);
        for (l, _) in tri_quad::<T>() {
            let b = eval_basis(2, l, &geom);
            let mut gu = [[T::zero(); 2]; 2];
            for i in 0..6 {
                for c in 0..2 {
                    for k in 0..2 {
                        gu[c][k] += state[off_u + 2 * pts[i] + c] * b.grad[i][k];
                    }
                }
            }
            let det = (T::one() + gu[0][0]) * (T::one() + gu[1][1]) - gu[0][1] * gu[1][0];
            if !(det > T::zero()) {
                return false;
            }
        }
    }
    true
}

pub fn solve_tfsi<T: Real>(
    mesh: Arc<TriMesh<T>>,
    fp: &FluidParams<T>,
    sp: &SolidParamsT<T>,
    bc: &TfsiBc<T>,
) -> Result<(TfsiState<T>, TfsiReport), TfsiError> {
    solve_tfsi_with_guess(mesh, fp, sp, bc, None)
}

/// [`solve_tfsi`] with an optional initial guess (used by the coupling loop
/// to warm-start consecutive iterations).
pub fn solve_tfsi_with_guess<T: Real>(
    mesh: Arc<TriMesh<T>>,
    fp: &FluidParams<T>,
    sp: &SolidParamsT<T>,
    bc: &TfsiBc<T>,
    guess: Option<&TfsiState<T>>,
) -> Result<(TfsiState<T>, TfsiReport), TfsiError> {
    validate(fp, sp)?;
    let p2 = FESpace::new(mesh.clone(), 2, 1);
    let p1 = FESpace::new(mesh.clone(), 1, 1);
    let np2 = p2.n_points();
    let nv = mesh.n_vertices();
    let n = 5 * np2 + nv + 1;
    let (off_u, off_th, off_p) = (2 * np2, 4 * np2, 5 * np2);

    let fluid_verts = p1.points_in(Subdomain::Fluid);
    let has_fluid = !fluid_verts.is_empty();
    let outer = p2.points_on(FacetLabel::Outer);

    let mut fixed: Vec<usize> = Vec::new();
    for &pt in &outer {
        fixed.extend([2 * pt, 2 * pt + 1, off_u + 2 * pt, off_u + 2 * pt + 1, off_th + pt]);
    }
    let mut in_fluid = vec![false; nv];
    for &v in &fluid_verts {
        in_fluid[v] = true;
    }
    fixed.extend((0..nv).filter(|&v| !in_fluid[v]).map(|v| off_p + v));
    if !has_fluid {
        fixed.push(n - 1);
    }

    let set_bc = |state: &mut [T]| {
        for &pt in &outer {
            let x = p2.point_coord(pt);
            let vd = (bc.v_outer)(x);
            state[2 * pt] = vd[0];
            state[2 * pt + 1] = vd[1];
            state[off_u + 2 * pt] = T::zero();
            state[off_u + 2 * pt + 1] = T::zero();
            state[off_th + pt] = (bc.theta_outer)(x);
        }
    };
    let initial = |state: &mut [T]| {
        if let Some(g) = guess {
            state[..2 * np2].copy_from_slice(&g.v.coeffs);
            state[off_u..off_u + 2 * np2].copy_from_slice(&g.u.coeffs);
            state[off_th..off_th + np2].copy_from_slice(&g.theta.coeffs);
            state[off_p..off_p + nv].copy_from_slice(&g.p.coeffs);
            state[n - 1] = T::zero();
        } else {
            for d in state[off_th..off_th + np2].iter_mut() {
                *d = sp.theta0;
            }
        }
        // pinned dofs keep their state value, so force the solid pressure
        for v in 0..nv {
            if !in_fluid[v] {
                state[off_p + v] = T::zero();
            }
        }
        set_bc(state);
    };

    let entangled = Cell::new(false);
    let run = |state: &mut Vec<T>, ramp: T| -> Result<usize, TfsiError> {
        let sys = TfsiSystem {
            mesh: &mesh,
            p2: &p2,
            fp,
            sp,
            np2,
            n,
            ramp,
        };
        let hist = newton_solve(
            state,
            |x| {
                let mut a = assemble::<T, 34>(&sys, x)?;
                a.constrain(fixed.iter().copied());
                Ok(a)
            },
            |x| {
                let ok = deformation_admissible(&p2, off_u, x);
                if !ok {
                    entangled.set(true);
                }
                ok
            },
            NewtonOptions::default(),
        )
        .map_err(|e| {
            if entangled.get() {
                TfsiError::MeshEntanglement
            } else {
                TfsiError::Fem(e)
            }
        })?;
        Ok(hist.residual_norms.len() - 1)
    };

    let mut state = vec![T::zero(); n];
    initial(&mut state);
    let mut report = TfsiReport::default();
    match run(&mut state, T::one()) {
        Ok(iters) => report.newton_iterations = iters,
        Err(TfsiError::Fem(FemError::NoConvergence { .. }))
        | Err(TfsiError::Fem(FemError::LineSearchFailure { .. })) => {
            // two-step homotopy on loads, convection, and buoyancy
            report.ramped = true;
            entangled.set(false);
            state.iter_mut().for_each(|d| *d = T::zero());
            initial(&mut state);
            for ramp in [T::of(0.5), T::one()] {
                report.newton_iterations += run(&mut state, ramp)?;
            }
        }
        Err(e) => return Err(e),
    }

    // gauge fix: remove the fluid mean from the free pressure dofs
    if has_fluid {
        let mut integral = T::zero();
        let mut area = T::zero();
        for t in 0..mesh.n_triangles() {
            if mesh.tri_label[t] != Subdomain::Fluid {
                continue;
            }
            let a = mesh.tri_area(t);
            let s: T = mesh.triangles[t].iter().map(|&v| state[off_p + v]).sum();
            integral += s * a / T::of(3.0);
            area += a;
        }
        let mean = integral / area;
        for &v in &fluid_verts {
            state[off_p + v] -= mean;
        }
    }

    report.multiplier = state[n - 1].as_f64();
    let field = |space: &FESpace<T>, coeffs: &[T]| Field {
        space: space.clone(),
        coeffs: coeffs.to_vec(),
    };
    let p2v = FESpace::new(mesh.clone(), 2, 2);
    Ok((
        TfsiState {
            v: field(&p2v, &state[..2 * np2]),
            u: field(&p2v, &state[off_u..off_u + 2 * np2]),
            theta: field(&p2, &state[off_th..off_th + np2]),
            p: field(&p1, &state[off_p..off_p + nv]),
        },
        report,
    ))
}

/// Interface traces of pressure and temperature as point-evaluable functions.
/// Both discrete fields are single-valued along interface facets, so plain
/// point evaluation on the facet is side-independent.
pub fn interface_traces<T: Real>(
    state: &TfsiState<T>,
    facets: &[usize],
) -> (
    Box<dyn Fn([T; 2]) -> T + Sync>,
    Box<dyn Fn([T; 2]) -> T + Sync>,
) {
    debug_assert!(facets
        .iter()
        .all(|&f| state.p.space.mesh.facets[f].label == FacetLabel::Interface));
    let p = state.p.clone();
    let theta = state.theta.clone();
    (
        Box::new(move |x| p.eval(x).0[0]),
        Box::new(move |x| theta.eval(x).0[0]),
    )
}
