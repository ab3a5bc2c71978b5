//! Crack opening displacements from (u, φ) via the line integral
//! COD(x) = ∫_ℓ u·∇φ ds, profile sampling along the centerline, and
//! Chebyshev least-squares smoothing with tip extraction.

use crate::fem::{edge_quad, Field};
use crate::scalar::Real;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodError {
    #[error("sampling line does not intersect the mesh")]
    LineOutsideMesh,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Sampled aperture profile along a crack centerline.
///
/// `stations` are arc-length coordinates along the centerline direction,
/// measured from `origin`; a station s sits at `origin + s·dir`.
#[derive(Clone, Debug)]
pub struct CodProfile<T> {
    pub origin: [T; 2],
    pub dir: [T; 2],
    pub stations: Vec<T>,
    pub widths: Vec<T>,
    pub smoothed_widths: Vec<T>,
    /// Chebyshev coefficients of the fit on the station interval.
    pub fit_coeffs: Vec<T>,
    pub fit_degree: usize,
    /// Extreme real roots of the fitted polynomial bracketing the opening.
    pub tips: [T; 2],
    /// Set when no bracketing roots exist and the tips fell back to the
    /// support endpoints of the positive raw widths.
    pub tips_fallback: bool,
    /// Residual norm of the least-squares fit.
    pub fit_residual: T,
}

impl<T: Real> CodProfile<T> {
    /// Smoothed width at an arbitrary station coordinate, clamped at zero.
    /// Evaluates the Chebyshev fit when present, otherwise interpolates the
    /// smoothed widths linearly.
    pub fn smoothed_at(&self, s: T) -> T {
        let n = self.stations.len();
        let (s0, s1) = (self.stations[0], self.stations[n - 1]);
        if !self.fit_coeffs.is_empty() {
            let x = T::of(2.0) * (s - s0) / (s1 - s0) - T::one();
            return cheb_eval(&self.fit_coeffs, x).max(T::zero());
        }
        if s <= s0 {
            return self.smoothed_widths[0].max(T::zero());
        }
        for i in 1..n {
            if s <= self.stations[i] {
                let t = (s - self.stations[i - 1]) / (self.stations[i] - self.stations[i - 1]);
                let w = self.smoothed_widths[i - 1] * (T::one() - t) + self.smoothed_widths[i] * t;
                return w.max(T::zero());
            }
        }
        self.smoothed_widths[n - 1].max(T::zero())
    }
}

fn normalize<T: Real>(d: [T; 2]) -> [T; 2] {
    let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
    [d[0] / n, d[1] / n]
}

/// COD at one station: composite Gauss quadrature of u·∇φ along the line
/// through `point` with direction `dir`, clipped to the mesh bounding box.
/// Segments are kept shorter than half the local mesh size.
pub fn cod_at<T: Real>(
    u: &Field<T>,
    phi: &Field<T>,
    point: [T; 2],
    dir: [T; 2],
) -> Result<T, CodError> {
    cod_at_offset(u, phi, point, dir, T::zero())
}

/// Same as [`cod_at`] with the first segment shortened by `offset` in (0,1)
/// fractions of a step, shifting the composite segmentation.
pub(crate) fn cod_at_offset<T: Real>(
    u: &Field<T>,
    phi: &Field<T>,
    point: [T; 2],
    dir: [T; 2],
    offset: T,
) -> Result<T, CodError> {
    let mesh = &phi.space.mesh;
    let d = normalize(dir);
    let bb = mesh.bounding_box();

    // clip the parameter range to the bounding box
    let mut t0 = T::neg_infinity();
    let mut t1 = T::infinity();
    for k in 0..2 {
        if d[k].abs() > T::of(1e-14) {
            let a = (bb.min[k] - point[k]) / d[k];
            let b = (bb.max[k] - point[k]) / d[k];
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        } else if point[k] < bb.min[k] || point[k] > bb.max[k] {
            return Err(CodError::LineOutsideMesh);
        }
    }
    if !(t0 < t1) {
        return Err(CodError::LineOutsideMesh);
    }

    let mut total = T::zero();
    let mut any_inside = false;
    let mut t = t0;
    let mut first = true;
    while t < t1 {
        let x = [point[0] + t * d[0], point[1] + t * d[1]];
        let h_loc = mesh.local_size(x);
        let mut step = (h_loc * T::of(0.5)).min(t1 - t);
        if first {
            first = false;
            let shrunk = step * (T::one() - offset);
            if shrunk > T::zero() {
                step = shrunk;
            }
        }
        for (q, w) in edge_quad::<T>() {
            let s = t + q * step;
            let xq = [point[0] + s * d[0], point[1] + s * d[1]];
            let (uv, inside_u) = u.eval(xq);
            let (gp, inside_p) = phi.eval_grad(xq);
            if inside_u && inside_p {
                any_inside = true;
                total += (uv[0] * gp[0][0] + uv[1] * gp[0][1]) * w * step;
            }
        }
        t += step;
    }
    if !any_inside {
        return Err(CodError::LineOutsideMesh);
    }
    Ok(total)
}

/// Samples the aperture at `n_stations` uniformly spaced stations along the
/// centerline segment `(a, b)`, over an interval 20% wider than the segment.
/// Sampling lines run perpendicular to the centerline.
pub fn cod_profile<T: Real>(
    u: &Field<T>,
    phi: &Field<T>,
    a: [T; 2],
    b: [T; 2],
    n_stations: usize,
) -> Result<CodProfile<T>, CodError> {
    if n_stations < 8 {
        return Err(CodError::InvalidInput(format!(
            "need at least 8 stations, got {n_stations}"
        )));
    }
    let dir = normalize([b[0] - a[0], b[1] - a[1]]);
    let normal = [-dir[1], dir[0]];
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    if !(len > T::zero()) {
        return Err(CodError::InvalidInput("degenerate centerline".into()));
    }
    let lo = -len * T::of(0.1);
    let hi = len * T::of(1.1);
    let mut stations = Vec::with_capacity(n_stations);
    let mut widths = Vec::with_capacity(n_stations);
    for i in 0..n_stations {
        let s = lo + (hi - lo) * T::of(i as f64) / T::of((n_stations - 1) as f64);
        let x = [a[0] + s * dir[0], a[1] + s * dir[1]];
        stations.push(s);
        widths.push(cod_at(u, phi, x, normal)?);
    }
    Ok(CodProfile {
        origin: a,
        dir,
        smoothed_widths: widths.clone(),
        stations,
        widths,
        fit_coeffs: Vec::new(),
        fit_degree: 0,
        tips: [lo, hi],
        tips_fallback: true,
        fit_residual: T::zero(),
    })
}

/// Suggested station count: ceil(2·length/h_cr), capped at 400.
pub fn station_count<T: Real>(length: T, h_cr: T) -> usize {
    let n = (T::of(2.0) * length / h_cr).ceil().as_f64() as usize;
    n.clamp(8, 400)
}

fn cheb_eval<T: Real>(coeffs: &[T], x: T) -> T {
    // Clenshaw recurrence
    let mut b1 = T::zero();
    let mut b2 = T::zero();
    for &c in coeffs.iter().rev() {
        let b0 = T::of(2.0) * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    b1 - x * b2
}

/// Least-squares Chebyshev fit of the raw widths on the station interval.
/// Smoothed widths are the fit clamped at zero; the tips are the extreme
/// real roots of the fitted polynomial around the opening.
pub fn smooth_cod<T: Real>(profile: &CodProfile<T>, degree: usize) -> Result<CodProfile<T>, CodError> {
    let n = profile.stations.len();
    if degree + 1 > n {
        return Err(CodError::InvalidInput(format!(
            "degree {degree} needs more than {n} stations"
        )));
    }
    let (s0, s1) = (profile.stations[0], profile.stations[n - 1]);
    let to_ref = |s: T| T::of(2.0) * (s - s0) / (s1 - s0) - T::one();
    let m = degree + 1;

    // normal equations in the Chebyshev basis; m is small (default 7)
    let mut basis = vec![vec![T::zero(); m]; n];
    for (i, &s) in profile.stations.iter().enumerate() {
        let x = to_ref(s);
        basis[i][0] = T::one();
        if m > 1 {
            basis[i][1] = x;
        }
        for j in 2..m {
            basis[i][j] = T::of(2.0) * x * basis[i][j - 1] - basis[i][j - 2];
        }
    }
    let mut ata = vec![vec![T::zero(); m]; m];
    let mut atb = vec![T::zero(); m];
    for i in 0..n {
        for j in 0..m {
            atb[j] += basis[i][j] * profile.widths[i];
            for k in 0..m {
                ata[j][k] += basis[i][j] * basis[i][k];
            }
        }
    }
    let coeffs = solve_dense(&mut ata, &mut atb)
        .ok_or_else(|| CodError::InvalidInput("singular least-squares system".into()))?;

    let fit: Vec<T> = profile
        .stations
        .iter()
        .map(|&s| cheb_eval(&coeffs, to_ref(s)))
        .collect();
    let fit_residual = profile
        .widths
        .iter()
        .zip(&fit)
        .map(|(w, f)| (*w - *f) * (*w - *f))
        .sum::<T>()
        .sqrt();
    let smoothed_widths: Vec<T> = fit.iter().map(|&v| v.max(T::zero())).collect();

    // tips: scan outward from the widest station for sign changes of the fit
    let (mut imax, mut wmax) = (0usize, T::neg_infinity());
    for (i, &f) in fit.iter().enumerate() {
        if f > wmax {
            wmax = f;
            imax = i;
        }
    }
    let eval_s = |s: T| cheb_eval(&coeffs, to_ref(s));
    let scan = 4000usize;
    let ds = (s1 - s0) / T::of(scan as f64);
    let s_max = profile.stations[imax];
    let mut tips = [s0, s1];
    let mut found = [false, false];
    if wmax > T::zero() {
        for side in 0..2 {
            let sign = if side == 0 { -T::one() } else { T::one() };
            let mut prev_s = s_max;
            let mut prev_v = wmax;
            for k in 1..=scan {
                let s = s_max + sign * ds * T::of(k as f64);
                let v = eval_s(s);
                if v <= T::zero() {
                    tips[side] = bisect_root(&eval_s, prev_s, prev_v, s);
                    found[side] = true;
                    break;
                }
                prev_s = s;
                prev_v = v;
            }
        }
    }
    let tips_fallback = !(found[0] && found[1]);
    if tips_fallback {
        // support endpoints of the positive raw widths
        let pos: Vec<usize> = (0..n).filter(|&i| profile.widths[i] > T::zero()).collect();
        if let (Some(&first), Some(&last)) = (pos.first(), pos.last()) {
            tips = [profile.stations[first], profile.stations[last]];
        } else {
            tips = [s0, s1];
        }
    }
    if tips[0] > tips[1] {
        tips.swap(0, 1);
    }

    Ok(CodProfile {
        origin: profile.origin,
        dir: profile.dir,
        stations: profile.stations.clone(),
        widths: profile.widths.clone(),
        smoothed_widths,
        fit_coeffs: coeffs,
        fit_degree: degree,
        tips,
        tips_fallback,
        fit_residual,
    })
}

fn bisect_root<T: Real>(f: &impl Fn(T) -> T, mut a: T, mut fa: T, mut b: T) -> T {
    // f(a) > 0 >= f(b)
    for _ in 0..80 {
        let mid = (a + b) * T::of(0.5);
        let fm = f(mid);
        if fm > T::zero() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let _ = fa;
    (a + b) * T::of(0.5)
}

fn solve_dense<T: Real>(a: &mut [Vec<T>], b: &mut [T]) -> Option<Vec<T>> {
    let n = b.len();
    for col in 0..n {
        let (mut piv, mut best) = (col, a[col][col].abs());
        for r in col + 1..n {
            if a[r][col].abs() > best {
                best = a[r][col].abs();
                piv = r;
            }
        }
        if !(best > T::zero()) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}

/// Integral of the smoothed profile over the station interval (trapezoid).
pub fn profile_volume<T: Real>(profile: &CodProfile<T>) -> T {
    let mut v = T::zero();
    for i in 1..profile.stations.len() {
        let ds = profile.stations[i] - profile.stations[i - 1];
        v += (profile.smoothed_widths[i] + profile.smoothed_widths[i - 1]) * ds * T::of(0.5);
    }
    v
}

#[cfg(test)]
mod tests;
