//! Scalar Dirichlet Green functions for the conductor geometries.
//!
//! Everything is expressed through the homogeneous part G_H = G - G0, where
//! G0(r, r') = 1/(4 pi |r - r'|) is the free-space kernel of -nabla^2. G_H is
//! what survives in the interaction energies: it is finite at coincidence and
//! encodes the surface entirely.
//!
//! Conventions: the plane conductor occupies z = 0 with atoms at z > 0; the
//! capacitor plates sit at z = -d/2 and z = +d/2; the sphere of radius `a` is
//! centred at the origin with atoms outside. Arguments violating these
//! domains produce [`Error::Domain`](crate::Error::Domain).

use std::f64::consts::PI;

use crate::model::{SeriesCtrl, Vec3};
use crate::specfun::bessel_k0;
use crate::{Error, Result};

/// In-plane separation below which the capacitor eigenfunction series is
/// abandoned for the image ladder, as a fraction of the gap. The series
/// needs ~ d/s terms to settle, so the crossover keeps the term count and
/// the ladder's extrapolation error both comfortably inside tolerance.
pub const CAPACITOR_LADDER_CROSSOVER: f64 = 0.05;

/// Value of a Green-function evaluation plus bookkeeping about how it was
/// obtained. Closed-form geometries report `terms_used = 0`; the capacitor
/// reports the eigenfunction terms or image shells consumed. `converged` is
/// false only when a truncated representation ran out of budget, and callers
/// are expected to treat such values as unusable.
#[derive(Debug, Clone, Copy)]
pub struct GreensEval {
    pub value: f64,
    pub terms_used: usize,
    pub converged: bool,
}

impl GreensEval {
    fn exact(value: f64) -> GreensEval {
        GreensEval { value, terms_used: 0, converged: true }
    }
}

fn require_above_plane(label: &str, r: Vec3) -> Result<()> {
    if r.z > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{label} must lie above the plane (z > 0), got z = {}", r.z)))
    }
}

fn require_inside_capacitor(label: &str, r: Vec3, d: f64) -> Result<()> {
    if d <= 0.0 || !d.is_finite() {
        return Err(Error::Domain(format!("capacitor gap must be positive and finite, got {d}")));
    }
    if r.z.abs() < 0.5 * d {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{label} must lie strictly between the plates (|z| < {}), got z = {}",
            0.5 * d,
            r.z
        )))
    }
}

fn require_outside_sphere(label: &str, r: Vec3, a: f64) -> Result<()> {
    if a <= 0.0 || !a.is_finite() {
        return Err(Error::Domain(format!("sphere radius must be positive and finite, got {a}")));
    }
    if r.norm() > a {
        Ok(())
    } else {
        Err(Error::Domain(format!("{label} must lie outside the sphere (|r| > {a}), got |r| = {}", r.norm())))
    }
}

/// Free-space kernel G0 = 1/(4 pi |r - r'|).
pub fn free_kernel(r: Vec3, rp: Vec3) -> Result<f64> {
    let dist = (r - rp).norm();
    if dist == 0.0 {
        return Err(Error::Domain("free kernel is singular at coincident points".into()));
    }
    Ok(1.0 / (4.0 * PI * dist))
}

/// Homogeneous Green function of the grounded plane at z = 0: a single
/// negative image across the plane, G_H = -1/(4 pi |r - M r'|) with
/// M = diag(1, 1, -1).
pub fn gh_plane(r: Vec3, rp: Vec3) -> Result<GreensEval> {
    require_above_plane("r", r)?;
    require_above_plane("r'", rp)?;
    let rbar = (r - rp.mirror_z()).norm();
    Ok(GreensEval::exact(-1.0 / (4.0 * PI * rbar)))
}

/// Eigenfunction series for the full capacitor Green function, valid for
/// in-plane separation s > 0:
///
/// G = (1/(pi d)) sum_{n>=1} sin(n pi zeta/d) sin(n pi zeta'/d) K0(n pi s/d),
///
/// with zeta = z + d/2 measured from the lower plate. Terms fall off like
/// exp(-n pi s/d); the sum is truncated once `min_terms` consecutive terms
/// are below `rel_tol` of the running sum.
fn capacitor_series(r: Vec3, rp: Vec3, d: f64, s: f64, ctrl: &SeriesCtrl) -> GreensEval {
    let zeta = r.z + 0.5 * d;
    let zetap = rp.z + 0.5 * d;
    let mut sum = 0.0;
    let mut streak = 0usize;
    let mut n = 0usize;
    while n < ctrl.n_max {
        n += 1;
        let k = n as f64 * PI / d;
        let term = (k * zeta).sin() * (k * zetap).sin() * bessel_k0(k * s);
        sum += term;
        if term.abs() <= ctrl.rel_tol * sum.abs().max(f64::MIN_POSITIVE) {
            streak += 1;
            if streak >= ctrl.min_terms {
                return GreensEval { value: sum / (PI * d), terms_used: n, converged: true };
            }
        } else {
            streak = 0;
        }
    }
    GreensEval { value: sum / (PI * d), terms_used: n, converged: false }
}

/// Image-ladder evaluation of the capacitor G_H (source term excluded).
/// Positive images of the source at z' + 2nd (n != 0) and negative images at
/// +/-(2n + 1)d - z'. Shells are summed in symmetric pairs, whose sums decay
/// like 1/m^2, and the partial sums at four doubling depths are Richardson
/// extrapolated in 1/N down to an O(1/N^4) residual.
fn gh_capacitor_ladder(r: Vec3, rp: Vec3, d: f64) -> GreensEval {
    let s2 = (r.x - rp.x).powi(2) + (r.y - rp.y).powi(2);
    let pos = |zimg: f64| 1.0 / (s2 + (r.z - zimg).powi(2)).sqrt();
    let shell = |m: f64| -> f64 {
        if m == 0.0 {
            -pos(-d - rp.z) - pos(d - rp.z)
        } else {
            pos(rp.z + 2.0 * m * d) + pos(rp.z - 2.0 * m * d)
                - pos((2.0 * m + 1.0) * d - rp.z)
                - pos(-(2.0 * m + 1.0) * d - rp.z)
        }
    };

    const N_TOP: usize = 8192;
    let mut acc = 0.0;
    let mut partials = [0.0f64; 4];
    for m in 0..=N_TOP {
        acc += shell(m as f64);
        match m {
            1024 => partials[0] = acc,
            2048 => partials[1] = acc,
            4096 => partials[2] = acc,
            8192 => partials[3] = acc,
            _ => {}
        }
    }
    // kill 1/N, then 1/N^2, then 1/N^3
    let q = [
        2.0 * partials[1] - partials[0],
        2.0 * partials[2] - partials[1],
        2.0 * partials[3] - partials[2],
    ];
    let w = [(4.0 * q[1] - q[0]) / 3.0, (4.0 * q[2] - q[1]) / 3.0];
    let v = (8.0 * w[1] - w[0]) / 7.0;
    let residual = (v - w[1]).abs();
    let scale = v.abs().max(shell(0.0).abs());
    GreensEval { value: v / (4.0 * PI), terms_used: N_TOP, converged: residual <= 1e-10 * scale }
}

/// Full capacitor Green function (plates at z = +/- d/2). Uses the
/// eigenfunction series for in-plane separation s >= 0.05 d and the image
/// ladder closer in, where the series would need too many terms.
pub fn g_capacitor(r: Vec3, rp: Vec3, d: f64, ctrl: &SeriesCtrl) -> Result<GreensEval> {
    require_inside_capacitor("r", r, d)?;
    require_inside_capacitor("r'", rp, d)?;
    ctrl.validate()?;
    let s = ((r.x - rp.x).powi(2) + (r.y - rp.y).powi(2)).sqrt();
    if s >= CAPACITOR_LADDER_CROSSOVER * d {
        Ok(capacitor_series(r, rp, d, s, ctrl))
    } else {
        let g0 = free_kernel(r, rp)?;
        let gh = gh_capacitor_ladder(r, rp, d);
        Ok(GreensEval { value: gh.value + g0, ..gh })
    }
}

/// Homogeneous part of the capacitor Green function, G_H = G - G0. Finite at
/// coincidence, where the series route degenerates and the image ladder takes
/// over automatically.
pub fn gh_capacitor(r: Vec3, rp: Vec3, d: f64, ctrl: &SeriesCtrl) -> Result<GreensEval> {
    require_inside_capacitor("r", r, d)?;
    require_inside_capacitor("r'", rp, d)?;
    ctrl.validate()?;
    let s = ((r.x - rp.x).powi(2) + (r.y - rp.y).powi(2)).sqrt();
    if s >= CAPACITOR_LADDER_CROSSOVER * d {
        let g = capacitor_series(r, rp, d, s, ctrl);
        let g0 = free_kernel(r, rp)?;
        Ok(GreensEval { value: g.value - g0, ..g })
    } else {
        Ok(gh_capacitor_ladder(r, rp, d))
    }
}

/// Leading large-separation form of the full capacitor Green function: the
/// n = 1 eigenmode with K0 replaced by its exponential asymptote,
///
/// G ~ (1/(4 pi)) sqrt(8/(s d)) cos(pi z/d) cos(pi z'/d) exp(-pi s/d).
///
/// Good to a few percent once s exceeds about 1.5 d.
pub fn g_capacitor_asymptotic(r: Vec3, rp: Vec3, d: f64) -> Result<f64> {
    require_inside_capacitor("r", r, d)?;
    require_inside_capacitor("r'", rp, d)?;
    let s = ((r.x - rp.x).powi(2) + (r.y - rp.y).powi(2)).sqrt();
    if s == 0.0 {
        return Err(Error::Domain("asymptotic capacitor form needs nonzero in-plane separation".into()));
    }
    let kappa = PI / d;
    Ok((8.0 / (s * d)).sqrt() / (4.0 * PI)
        * (kappa * r.z).cos()
        * (kappa * rp.z).cos()
        * (-kappa * s).exp())
}

/// Kirchhoff-image scalar for the grounded sphere:
/// G_H = -a / (4 pi sqrt(W)) with W = r^2 r'^2 - 2 a^2 r.r' + a^4.
/// W = (r r')^2 at the image singularity's "radius product" never vanishes
/// for both points strictly outside.
pub fn gh_sphere_grounded(r: Vec3, rp: Vec3, a: f64) -> Result<GreensEval> {
    require_outside_sphere("r", r, a)?;
    require_outside_sphere("r'", rp, a)?;
    let w = sphere_w(r, rp, a);
    Ok(GreensEval::exact(-a / (4.0 * PI * w.sqrt())))
}

/// Isolated (neutral, floating) sphere: the grounded kernel plus the
/// monopole restoring term +a/(4 pi r r'), which removes the net induced
/// charge while keeping the surface an equipotential.
pub fn gh_sphere_isolated(r: Vec3, rp: Vec3, a: f64) -> Result<GreensEval> {
    let grounded = gh_sphere_grounded(r, rp, a)?;
    let value = grounded.value + a / (4.0 * PI * r.norm() * rp.norm());
    Ok(GreensEval::exact(value))
}

pub(crate) fn sphere_w(r: Vec3, rp: Vec3, a: f64) -> f64 {
    let a2 = a * a;
    r.norm_sq() * rp.norm_sq() - 2.0 * a2 * r.dot(rp) + a2 * a2
}

/// Geometry-dispatched G_H for callers that hold a [`Geometry`] value
/// (energies, verification sweeps). Free space has no surface, hence
/// identically zero.
pub fn gh_scalar(geometry: &crate::model::Geometry, r: Vec3, rp: Vec3, ctrl: &SeriesCtrl) -> Result<GreensEval> {
    use crate::model::Geometry::*;
    match *geometry {
        FreeSpace => Ok(GreensEval::exact(0.0)),
        Plane => gh_plane(r, rp),
        Capacitor { d } => gh_capacitor(r, rp, d, ctrl),
        SphereGrounded { a } => gh_sphere_grounded(r, rp, a),
        SphereIsolated { a } => gh_sphere_isolated(r, rp, a),
    }
}
