//! Double-gradient (dipole) kernels of the Green functions.
//!
//! The interaction energies need the mixed second derivatives
//!
//!   GG_ij(rA, rB) = d/drA_i d/drB_j G_H(rA, rB),
//!
//! the field a unit dipole at rB induces at rA through the surface. Every
//! geometry here admits an analytic tensor; the finite-difference Hessians in
//! [`crate::oracle`] exist to hold these expressions to account.
//!
//! Index convention: row i differentiates the first argument, column j the
//! second, so the adjoint symmetry reads GG_ij(rA, rB) = GG_ji(rB, rA).

use std::f64::consts::PI;

use crate::model::{Geometry, SeriesCtrl, Tensor3, Vec3, TENSOR_ZERO};
use crate::specfun::{bessel_k0, bessel_k1};
use crate::{greens, Error, Result};

/// Tensor analogue of [`greens::GreensEval`]: the 3x3 kernel plus series
/// bookkeeping. Closed-form geometries report `terms_used = 0`.
#[derive(Debug, Clone, Copy)]
pub struct TensorEval {
    pub t: Tensor3,
    pub terms_used: usize,
    pub converged: bool,
}

impl TensorEval {
    fn exact(t: Tensor3) -> TensorEval {
        TensorEval { t, terms_used: 0, converged: true }
    }
}

/// Free-space dipole kernel T_ij = d_i d'_j G0 = (delta_ij - 3 u_i u_j) /
/// (4 pi |u|^3) with u = r - r' (unit vector in the formula). The sign
/// follows from differentiating 1/|r - r'| once in each argument.
pub fn dipole_kernel_tensor(r: Vec3, rp: Vec3) -> Result<Tensor3> {
    let u = r - rp;
    let dist = u.norm();
    if dist == 0.0 {
        return Err(Error::Domain("dipole kernel is singular at coincident points".into()));
    }
    let uhat = u * (1.0 / dist);
    let pre = 1.0 / (4.0 * PI * dist.powi(3));
    let mut t = TENSOR_ZERO;
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            t[i][j] = pre * (delta - 3.0 * uhat.get(i) * uhat.get(j));
        }
    }
    Ok(t)
}

/// Plane-conductor kernel. With M = diag(1, 1, -1) and ubar = rA - M rB,
/// differentiating G_H = -1/(4 pi |rA - M rB|) gives
///
///   GG = [ -M + 3 uhat (M uhat)^T ] / (4 pi |ubar|^3),
///
/// the free kernel evaluated at the image point with its z-column mirrored.
pub fn gh_tensor_plane(r: Vec3, rp: Vec3) -> Result<TensorEval> {
    greens::gh_plane(r, rp)?; // domain checks only
    let ubar = r - rp.mirror_z();
    let dist = ubar.norm();
    let uhat = ubar * (1.0 / dist);
    let muhat = uhat.mirror_z();
    let pre = 1.0 / (4.0 * PI * dist.powi(3));
    let m_diag = [1.0, 1.0, -1.0];
    let mut t = TENSOR_ZERO;
    for i in 0..3 {
        for j in 0..3 {
            let m = if i == j { m_diag[i] } else { 0.0 };
            t[i][j] = pre * (-m + 3.0 * uhat.get(i) * muhat.get(j));
        }
    }
    Ok(TensorEval::exact(t))
}

/// Grounded-sphere kernel, the double gradient of -a/(4 pi sqrt(W)) with
/// W = rA^2 rB^2 - 2 a^2 rA.rB + a^4:
///
///   GG_ij = a (2 xA_i xB_j - a^2 delta_ij) / (4 pi W^(3/2))
///         - 3 a (xA_i rB^2 - a^2 xB_i)(rA^2 xB_j - a^2 xA_j) / (4 pi W^(5/2)).
pub fn gh_tensor_sphere_grounded(r: Vec3, rp: Vec3, a: f64) -> Result<TensorEval> {
    greens::gh_sphere_grounded(r, rp, a)?; // domain checks only
    let w = greens::sphere_w(r, rp, a);
    let a2 = a * a;
    let (ra2, rb2) = (r.norm_sq(), rp.norm_sq());
    let w32 = w.powf(1.5);
    let w52 = w32 * w;
    let mut t = TENSOR_ZERO;
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            let ga = r.get(i) * rb2 - a2 * rp.get(i);
            let gb = ra2 * rp.get(j) - a2 * r.get(j);
            t[i][j] = a * (2.0 * r.get(i) * rp.get(j) - a2 * delta) / (4.0 * PI * w32)
                - 3.0 * a * ga * gb / (4.0 * PI * w52);
        }
    }
    Ok(TensorEval::exact(t))
}

/// Isolated-sphere kernel: the grounded tensor plus the double gradient of
/// the monopole term a/(4 pi rA rB), which is a xA_i xB_j / (4 pi rA^3 rB^3).
pub fn gh_tensor_sphere_isolated(r: Vec3, rp: Vec3, a: f64) -> Result<TensorEval> {
    let grounded = gh_tensor_sphere_grounded(r, rp, a)?;
    let pre = a / (4.0 * PI * r.norm().powi(3) * rp.norm().powi(3));
    let mut t = grounded.t;
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] += pre * r.get(i) * rp.get(j);
        }
    }
    Ok(TensorEval::exact(t))
}

/// One eigenmode's contribution to the capacitor tensor, the term-wise
/// double gradient of (1/(pi d)) sin(k zeta) sin(k zeta') K0(k s) with
/// k = n pi / d. In-plane components ride on the unit vector p = (rhoA -
/// rhoB)/s; K0' = -K1 and K1' = -K0 - K1/u supply the radial derivatives.
fn capacitor_tensor_term(n: usize, r: Vec3, rp: Vec3, d: f64, s: f64, p: [f64; 2]) -> Tensor3 {
    let c = 1.0 / (PI * d);
    let k = n as f64 * PI / d;
    let (zeta, zetap) = (r.z + 0.5 * d, rp.z + 0.5 * d);
    let (sa, ca) = (k * zeta).sin_cos();
    let (sb, cb) = (k * zetap).sin_cos();
    let k0 = bessel_k0(k * s);
    let k1 = bessel_k1(k * s);
    let mut t = TENSOR_ZERO;
    for al in 0..2 {
        for be in 0..2 {
            let delta = if al == be { 1.0 } else { 0.0 };
            t[al][be] = c * sa * sb * (-k * k * k0 * p[al] * p[be] + k * k1 / s * (delta - 2.0 * p[al] * p[be]));
        }
        t[al][2] = -c * k * k * sa * cb * k1 * p[al];
        t[2][al] = c * k * k * ca * sb * k1 * p[al];
    }
    t[2][2] = c * k * k * ca * cb * k0;
    t
}

/// Shared adaptive loop for the capacitor tensor series. The scalar
/// truncation rule carries over per entry: stop once the largest entry
/// increment has stayed below rel_tol times the largest accumulated entry
/// for min_terms consecutive modes (<= so exactly vanishing entries, p_y = 0
/// on an x-axis path for instance, cannot stall the streak).
fn capacitor_tensor_series(r: Vec3, rp: Vec3, d: f64, s: f64, ctrl: &SeriesCtrl) -> TensorEval {
    let p = [(r.x - rp.x) / s, (r.y - rp.y) / s];
    let mut t = TENSOR_ZERO;
    let mut streak = 0usize;
    let mut n = 0usize;
    while n < ctrl.n_max {
        n += 1;
        let term = capacitor_tensor_term(n, r, rp, d, s, p);
        let mut inc: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                t[i][j] += term[i][j];
                inc = inc.max(term[i][j].abs());
            }
        }
        let scale = crate::model::tensor_max_abs(&t).max(f64::MIN_POSITIVE);
        if inc <= ctrl.rel_tol * scale {
            streak += 1;
            if streak >= ctrl.min_terms {
                return TensorEval { t, terms_used: n, converged: true };
            }
        } else {
            streak = 0;
        }
    }
    TensorEval { t, terms_used: n, converged: false }
}

/// Image-ladder tensor for the capacitor, mirroring the scalar ladder:
///
///   GG_H = sum_{n != 0} T(rA, rB + 2 n d zhat)
///        - sum_{n in Z} T(rA, P rB + (2n - 1) d zhat) P,
///
/// with P = diag(1, 1, -1); right-multiplying by P negates the z-column.
/// Shells decay like 1/m^3, so the same four-depth Richardson scheme in 1/N
/// used for the scalar ladder leaves an O(1/N^4) residual.
fn gh_tensor_capacitor_ladder(r: Vec3, rp: Vec3, d: f64) -> TensorEval {
    let prp = rp.mirror_z();
    let image_pos = |off: f64| dipole_kernel_tensor(r, rp + Vec3::new(0.0, 0.0, off)).expect("interior images are distinct");
    let image_neg = |off: f64| {
        let mut t = dipole_kernel_tensor(r, prp + Vec3::new(0.0, 0.0, off)).expect("interior images are distinct");
        for row in t.iter_mut() {
            row[2] = -row[2];
        }
        t
    };
    let shell = |m: f64| -> Tensor3 {
        let mut t = TENSOR_ZERO;
        let mut sub = |s: Tensor3, sign: f64| {
            for i in 0..3 {
                for j in 0..3 {
                    t[i][j] += sign * s[i][j];
                }
            }
        };
        if m == 0.0 {
            sub(image_neg(-d), -1.0);
            sub(image_neg(d), -1.0);
        } else {
            sub(image_pos(2.0 * m * d), 1.0);
            sub(image_pos(-2.0 * m * d), 1.0);
            sub(image_neg((2.0 * m + 1.0) * d), -1.0);
            sub(image_neg(-(2.0 * m + 1.0) * d), -1.0);
        }
        t
    };

    const N_TOP: usize = 8192;
    let mut acc = TENSOR_ZERO;
    let mut partials = [TENSOR_ZERO; 4];
    for m in 0..=N_TOP {
        let sh = shell(m as f64);
        for i in 0..3 {
            for j in 0..3 {
                acc[i][j] += sh[i][j];
            }
        }
        match m {
            1024 => partials[0] = acc,
            2048 => partials[1] = acc,
            4096 => partials[2] = acc,
            8192 => partials[3] = acc,
            _ => {}
        }
    }
    let mut t = TENSOR_ZERO;
    let mut residual: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let p: Vec<f64> = partials.iter().map(|m| m[i][j]).collect();
            let q = [2.0 * p[1] - p[0], 2.0 * p[2] - p[1], 2.0 * p[3] - p[2]];
            let w = [(4.0 * q[1] - q[0]) / 3.0, (4.0 * q[2] - q[1]) / 3.0];
            let v = (8.0 * w[1] - w[0]) / 7.0;
            t[i][j] = v;
            residual = residual.max((v - w[1]).abs());
        }
    }
    let scale = crate::model::tensor_max_abs(&t).max(f64::MIN_POSITIVE);
    TensorEval { t, terms_used: N_TOP, converged: residual <= 1e-9 * scale }
}

/// Tensor of the full capacitor Green function (series route; needs in-plane
/// separation s above the ladder crossover because the term-wise series
/// carries K0 and K1/s factors that blow up as s -> 0).
pub fn g_tensor_capacitor(r: Vec3, rp: Vec3, d: f64, ctrl: &SeriesCtrl) -> Result<TensorEval> {
    greens::g_capacitor(r, rp, d, ctrl)?; // domain checks only
    let s = ((r.x - rp.x).powi(2) + (r.y - rp.y).powi(2)).sqrt();
    if s < greens::CAPACITOR_LADDER_CROSSOVER * d {
        let gh = gh_tensor_capacitor_ladder(r, rp, d);
        let free = dipole_kernel_tensor(r, rp)?;
        Ok(TensorEval { t: crate::model::tensor_add(&gh.t, &free), ..gh })
    } else {
        Ok(capacitor_tensor_series(r, rp, d, s, ctrl))
    }
}

/// Homogeneous capacitor tensor GG_H = GG_full - T. The subtraction is exact
/// term bookkeeping, not an approximation: the eigenfunction series
/// represents the full G, the image ladder represents G_H directly, and the
/// two differ by the free kernel wherever both apply.
pub fn gh_tensor_capacitor(r: Vec3, rp: Vec3, d: f64, ctrl: &SeriesCtrl) -> Result<TensorEval> {
    greens::gh_capacitor(r, rp, d, ctrl)?; // domain checks only
    let s = ((r.x - rp.x).powi(2) + (r.y - rp.y).powi(2)).sqrt();
    if s < greens::CAPACITOR_LADDER_CROSSOVER * d {
        Ok(gh_tensor_capacitor_ladder(r, rp, d))
    } else {
        let full = capacitor_tensor_series(r, rp, d, s, ctrl);
        let free = dipole_kernel_tensor(r, rp)?;
        Ok(TensorEval { t: crate::model::tensor_sub(&full.t, &free), ..full })
    }
}

/// Tensor of the leading large-separation capacitor form
/// G ~ C cos(kappa z) cos(kappa z') phi(s), phi = exp(-kappa s)/sqrt(s),
/// C = sqrt(8/d)/(4 pi), kappa = pi/d. Used for the asymptotic comparison
/// channel; subtract the free kernel to get the homogeneous part.
pub fn g_tensor_capacitor_asymptotic(r: Vec3, rp: Vec3, d: f64) -> Result<Tensor3> {
    greens::g_capacitor_asymptotic(r, rp, d)?; // domain checks only
    let s = ((r.x - rp.x).powi(2) + (r.y - rp.y).powi(2)).sqrt();
    let p = [(r.x - rp.x) / s, (r.y - rp.y) / s];
    let kappa = PI / d;
    let cc = (8.0 / d).sqrt() / (4.0 * PI);
    let e = (-kappa * s).exp();
    let phi = e / s.sqrt();
    let phi1 = -kappa * phi - 0.5 * e / s.powf(1.5);
    let phi2 = kappa * kappa * phi + kappa * e / s.powf(1.5) + 0.75 * e / s.powf(2.5);
    let (sa, ca) = (kappa * r.z).sin_cos();
    let (sb, cb) = (kappa * rp.z).sin_cos();
    let mut t = TENSOR_ZERO;
    for al in 0..2 {
        for be in 0..2 {
            let delta = if al == be { 1.0 } else { 0.0 };
            t[al][be] = -cc * ca * cb * (phi2 * p[al] * p[be] + phi1 * (delta - p[al] * p[be]) / s);
        }
        t[al][2] = -cc * kappa * ca * sb * phi1 * p[al];
        t[2][al] = cc * kappa * sa * cb * phi1 * p[al];
    }
    t[2][2] = cc * kappa * kappa * sa * sb * phi;
    Ok(t)
}

/// Coincidence limit GG_H(r, r), the kernel entering single-atom surface
/// shifts. Plane and spheres have closed forms; the capacitor reuses the
/// image ladder, which never involved the excluded source term and is
/// therefore regular at coincidence. Free space gives zero.
///
/// Plane at height h: diag(-1, -1, -2) / (32 pi h^3).
/// Grounded sphere: -a (x_i x_j + a^2 delta_ij) / (4 pi (r^2 - a^2)^3).
/// Isolated sphere adds a x_i x_j / (4 pi r^6).
pub fn gh_coincident_diag(geometry: &Geometry, r: Vec3, ctrl: &SeriesCtrl) -> Result<Tensor3> {
    geometry.validate()?;
    geometry.check_point(r)?;
    ctrl.validate()?;
    match *geometry {
        Geometry::FreeSpace => Ok(TENSOR_ZERO),
        Geometry::Plane => {
            let h = r.z;
            let pre = 1.0 / (32.0 * PI * h.powi(3));
            Ok([[-pre, 0.0, 0.0], [0.0, -pre, 0.0], [0.0, 0.0, -2.0 * pre]])
        }
        Geometry::Capacitor { d } => {
            let ladder = gh_tensor_capacitor_ladder(r, r, d);
            if ladder.converged {
                Ok(ladder.t)
            } else {
                Err(Error::NonConvergence("capacitor coincident ladder failed to settle".into()))
            }
        }
        Geometry::SphereGrounded { a } => Ok(sphere_coincident(r, a, false)),
        Geometry::SphereIsolated { a } => Ok(sphere_coincident(r, a, true)),
    }
}

fn sphere_coincident(r: Vec3, a: f64, isolated: bool) -> Tensor3 {
    let gap = r.norm_sq() - a * a;
    let pre = -a / (4.0 * PI * gap.powi(3));
    let mono = if isolated { a / (4.0 * PI * r.norm_sq().powi(3)) } else { 0.0 };
    let mut t = TENSOR_ZERO;
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            t[i][j] = pre * (r.get(i) * r.get(j) + a * a * delta) + mono * r.get(i) * r.get(j);
        }
    }
    t
}

/// Geometry-dispatched homogeneous tensor, the single entry point the energy
/// and force layers use.
pub fn gh_tensor(geometry: &Geometry, r: Vec3, rp: Vec3, ctrl: &SeriesCtrl) -> Result<TensorEval> {
    geometry.validate()?;
    match *geometry {
        Geometry::FreeSpace => Ok(TensorEval::exact(TENSOR_ZERO)),
        Geometry::Plane => gh_tensor_plane(r, rp),
        Geometry::Capacitor { d } => gh_tensor_capacitor(r, rp, d, ctrl),
        Geometry::SphereGrounded { a } => gh_tensor_sphere_grounded(r, rp, a),
        Geometry::SphereIsolated { a } => gh_tensor_sphere_isolated(r, rp, a),
    }
}
