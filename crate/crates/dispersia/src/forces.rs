//! Forces as numerical gradients of the energy channels.
//!
//! No analytic force formulas are duplicated here: each channel of
//! [`crate::energies`] is differentiated by central differences with
//! Richardson extrapolation, and the extrapolation residual doubles as a
//! convergence guard. Tests hold the London channel to its trivially known
//! gradient, which exercises the differentiation machinery end to end.

use crate::energies::{atom_surface_energy, breakdown, london_energy};
use crate::model::{AtomPolarization, FdCtrl, Geometry, PairCoupling, SeriesCtrl, Vec3};
use crate::{Error, Result};

/// Positions and polarizations of the atom pair. The polarizations enter
/// only the single-atom surface channel; the pair channels depend on the
/// scalar coupling alone.
#[derive(Debug, Clone, Copy)]
pub struct AtomPair {
    pub r_a: Vec3,
    pub r_b: Vec3,
    pub pol_a: AtomPolarization,
    pub pol_b: AtomPolarization,
}

/// Which atom the force acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomSelect {
    A,
    B,
}

/// Force channels on one atom: the gradient of the London pair energy, of
/// the non-additive pair energy E_NA1 + E_NA2, and of the atom's own
/// first-order surface shift. The pair channels sum to the total pair force;
/// the surface channel is a physically separate single-atom effect and is
/// reported alongside, not folded in.
#[derive(Debug, Clone, Copy)]
pub struct ForceBreakdown {
    pub f_london: Vec3,
    pub f_na: Vec3,
    pub f_surface_first_order: Vec3,
}

/// Central-difference gradient with `levels` step halvings and Richardson
/// extrapolation. The two deepest extrapolants must agree to one part in
/// 1e4 of the gradient's largest component; identically zero gradients pass.
fn fd_gradient<E>(energy: E, r: Vec3, base_step: f64, levels: usize) -> Result<Vec3>
where
    E: Fn(Vec3) -> Result<f64>,
{
    let n = levels + 1;
    let mut grad = [0.0f64; 3];
    let mut residual: f64 = 0.0;
    for (i, g) in grad.iter_mut().enumerate() {
        let mut col: Vec<f64> = Vec::with_capacity(n);
        for l in 0..n {
            let h = base_step * 0.5f64.powi(l as i32);
            let plus = energy(r.with(i, r.get(i) + h))?;
            let minus = energy(r.with(i, r.get(i) - h))?;
            col.push((plus - minus) / (2.0 * h));
        }
        let mut prev_best = col[0];
        for m in 1..n {
            let pow = 4f64.powi(m as i32);
            for l in 0..(n - m) {
                col[l] = (pow * col[l + 1] - col[l]) / (pow - 1.0);
            }
            if m + 1 == n {
                residual = residual.max((col[0] - prev_best).abs());
            }
            prev_best = col[0];
        }
        *g = col[0];
    }
    let force_scale = grad.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
    if force_scale > 0.0 && residual > 1e-4 * force_scale {
        return Err(Error::NonConvergence(format!(
            "force gradient did not settle: residual {residual:.3e} against scale {force_scale:.3e}"
        )));
    }
    Ok(Vec3::new(-grad[0], -grad[1], -grad[2]))
}

/// Step length for differentiating at `r`: the configured fraction of the
/// smaller of the boundary clearance and the pair separation, so every
/// stencil point stays strictly inside the domain and on the smooth side of
/// the pair singularity.
fn fd_step(geometry: &Geometry, r: Vec3, pair_distance: f64, fd: &FdCtrl) -> f64 {
    let scale = geometry.boundary_distance(r).min(pair_distance);
    fd.base_step.min(0.25) * scale
}

/// All force channels on one atom of the pair.
pub fn force_on_atom(
    which: AtomSelect,
    coupling: &PairCoupling,
    pair: &AtomPair,
    geometry: &Geometry,
    fd: &FdCtrl,
    ctrl: &SeriesCtrl,
) -> Result<ForceBreakdown> {
    fd.validate()?;
    geometry.validate()?;
    geometry.check_point(pair.r_a)?;
    geometry.check_point(pair.r_b)?;
    let (moving, fixed, pol) = match which {
        AtomSelect::A => (pair.r_a, pair.r_b, &pair.pol_a),
        AtomSelect::B => (pair.r_b, pair.r_a, &pair.pol_b),
    };
    let dist = (moving - fixed).norm();
    if dist == 0.0 {
        return Err(Error::Domain("pair force is singular at zero separation".into()));
    }
    let step = fd_step(geometry, moving, dist, fd);
    let levels = fd.richardson_levels as usize;

    let f_london = fd_gradient(|r| london_energy(coupling, r, fixed), moving, step, levels)?;
    let f_na = fd_gradient(
        |r| {
            let b = breakdown(coupling, geometry, r, fixed, ctrl)?;
            if !b.converged {
                return Err(Error::NonConvergence(format!(
                    "kernel series exhausted {} terms inside force stencil",
                    b.terms_used
                )));
            }
            Ok(b.e_na_total())
        },
        moving,
        step,
        levels,
    )?;
    let f_surface = fd_gradient(
        |r| atom_surface_energy(pol, coupling.unit_mode, geometry, r, ctrl),
        moving,
        step,
        levels,
    )?;
    Ok(ForceBreakdown { f_london, f_na, f_surface_first_order: f_surface })
}

/// The transverse-pair observable near a sphere: atom B at distance
/// `rb_dist` from the centre, atom A offset by `r_ab` perpendicular to B's
/// radius (right angle at B), and the reported number is
///
///   | F_NA . Rhat_AB | / | F_London . Rhat_AB |
///
/// for the force on atom A, with Rhat_AB the pair direction. Both
/// projections are frame-independent, so the configuration is built in the
/// frame where B sits on the z-axis and A is displaced along x.
pub fn sphere_transverse_force_ratio(
    rb_dist: f64,
    r_ab: f64,
    a: f64,
    grounded: bool,
    coupling: &PairCoupling,
    fd: &FdCtrl,
    ctrl: &SeriesCtrl,
) -> Result<f64> {
    if !(rb_dist > a) {
        return Err(Error::Domain(format!("atom B must sit outside the sphere: rb = {rb_dist}, a = {a}")));
    }
    if !(r_ab > 0.0) {
        return Err(Error::Domain(format!("pair separation must be positive, got {r_ab}")));
    }
    let geometry = if grounded { Geometry::SphereGrounded { a } } else { Geometry::SphereIsolated { a } };
    let pair = AtomPair {
        r_a: Vec3::new(r_ab, 0.0, rb_dist),
        r_b: Vec3::new(0.0, 0.0, rb_dist),
        pol_a: AtomPolarization::new([0.0; 3])?,
        pol_b: AtomPolarization::new([0.0; 3])?,
    };
    let f = force_on_atom(AtomSelect::A, coupling, &pair, &geometry, fd, ctrl)?;
    let rhat = (pair.r_a - pair.r_b) * (1.0 / r_ab);
    let lon = f.f_london.dot(rhat);
    if lon == 0.0 {
        return Err(Error::NonConvergence("London projection vanished; ratio undefined".into()));
    }
    Ok((f.f_na.dot(rhat) / lon).abs())
}
