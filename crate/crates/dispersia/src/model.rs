//! Core value types: positions, 3x3 interaction tensors, coupling constants,
//! geometry descriptors, and the numeric control knobs shared by the series
//! and finite-difference machinery.
//!
//! Everything here is an immutable value object. Lengths are either in an
//! arbitrary reduced unit L (with the vacuum permittivity set to 1) or in
//! meters with SI epsilon_0, selected by [`UnitMode`]. The physically
//! interesting outputs (ratios, scaling exponents) are unit-independent.

use std::ops::{Add, Mul, Neg, Sub};

use crate::{Error, Result};

/// Vacuum permittivity in F/m, used only in [`UnitMode::Si`].
pub const EPSILON_0_SI: f64 = 8.8541878128e-12;

/// A position or displacement in 3-space.
///
/// Components are finite reals in the active length unit. The type is `Copy`
/// and deliberately minimal; the handful of vector operations the physics
/// needs are implemented inline rather than pulled from a linear-algebra
/// crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Unit vector along `self`. Returns `None` for the zero vector.
    pub fn unit(self) -> Option<Vec3> {
        let n = self.norm();
        if n == 0.0 {
            None
        } else {
            Some(self * (1.0 / n))
        }
    }

    /// Component `i` (0 = x, 1 = y, 2 = z); used by loops over tensor indices.
    pub fn get(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("Vec3 index out of range: {i}"),
        }
    }

    /// Returns `self` with component `i` replaced by `v`.
    pub fn with(self, i: usize, v: f64) -> Vec3 {
        let mut out = self;
        match i {
            0 => out.x = v,
            1 => out.y = v,
            2 => out.z = v,
            _ => panic!("Vec3 index out of range: {i}"),
        }
        out
    }

    /// Mirror through the z = 0 plane.
    pub fn mirror_z(self) -> Vec3 {
        Vec3 { x: self.x, y: self.y, z: -self.z }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A 3x3 real tensor with entries in units of 1/length^3, stored row-major:
/// `t[i][j]` is the (i, j) component with i indexing the first (unprimed)
/// gradient and j the second (primed) one.
pub type Tensor3 = [[f64; 3]; 3];

/// Zero tensor, the free-space value of every image kernel.
pub const TENSOR_ZERO: Tensor3 = [[0.0; 3]; 3];

/// Sum of the diagonal.
pub fn tensor_trace(t: &Tensor3) -> f64 {
    t[0][0] + t[1][1] + t[2][2]
}

/// Frobenius inner sum of squares, `sum_ij t_ij^2`.
pub fn tensor_frob_sq(t: &Tensor3) -> f64 {
    let mut s = 0.0;
    for row in t {
        for &v in row {
            s += v * v;
        }
    }
    s
}

/// Quadratic form `u^T t u`.
pub fn tensor_quad(t: &Tensor3, u: Vec3) -> f64 {
    let mut s = 0.0;
    for (i, row) in t.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            s += u.get(i) * v * u.get(j);
        }
    }
    s
}

/// Entry-wise sum.
pub fn tensor_add(a: &Tensor3, b: &Tensor3) -> Tensor3 {
    let mut out = TENSOR_ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][j] + b[i][j];
        }
    }
    out
}

/// Entry-wise difference `a - b`.
pub fn tensor_sub(a: &Tensor3, b: &Tensor3) -> Tensor3 {
    let mut out = TENSOR_ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][j] - b[i][j];
        }
    }
    out
}

/// Largest absolute entry; the natural scale for entry-wise comparisons.
pub fn tensor_max_abs(t: &Tensor3) -> f64 {
    let mut m: f64 = 0.0;
    for row in t {
        for &v in row {
            m = m.max(v.abs());
        }
    }
    m
}

/// Unit conventions for energies and lengths.
///
/// In `Reduced` mode epsilon_0 is 1, lengths are in an arbitrary unit L, and
/// energies carry a factor Lambda_AB that defaults to 1, so the London energy
/// of a pair at separation R is -1/(24 pi^2 R^6) for the default coupling.
/// In `Si` mode Lambda_AB is in (C m)^4/J, lengths are meters, energies are
/// joules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitMode {
    Reduced,
    Si,
}

impl UnitMode {
    /// Vacuum permittivity in this unit system.
    pub fn epsilon0(self) -> f64 {
        match self {
            UnitMode::Reduced => 1.0,
            UnitMode::Si => EPSILON_0_SI,
        }
    }
}

/// The scalar pair coupling Lambda_AB summing squared transition dipoles over
/// level spacings. The dispersion energies are strictly proportional to it,
/// which is why every ratio the library reports is coupling-independent.
#[derive(Debug, Clone, Copy)]
pub struct PairCoupling {
    pub lambda_ab: f64,
    pub unit_mode: UnitMode,
}

impl PairCoupling {
    pub fn new(lambda_ab: f64, unit_mode: UnitMode) -> Result<Self> {
        if !(lambda_ab > 0.0) || !lambda_ab.is_finite() {
            return Err(Error::Domain(format!(
                "pair coupling must be finite and positive, got {lambda_ab}"
            )));
        }
        Ok(PairCoupling { lambda_ab, unit_mode })
    }

    /// Unit coupling in reduced units, the default for every scan.
    pub fn reduced() -> Self {
        PairCoupling { lambda_ab: 1.0, unit_mode: UnitMode::Reduced }
    }

    fn epsilon0(&self) -> f64 {
        self.unit_mode.epsilon0()
    }
}

/// The three positive prefactors of the energy formulas, with the coupling
/// and epsilon_0^2 folded in. Energies apply their overall minus signs.
#[derive(Debug, Clone, Copy)]
pub struct Prefactors {
    /// Lambda/(24 pi^2 eps0^2), multiplying 1/R^6 in the London energy.
    pub london_coeff: f64,
    /// Lambda/(18 pi eps0^2), multiplying the tensor contraction over R^3.
    pub na1_coeff: f64,
    /// Lambda/(9 eps0^2), multiplying the squared-tensor sum.
    pub na2_coeff: f64,
}

/// Scalar prefactors for the three energy terms in the active unit mode.
///
/// Reduced mode with the default coupling gives london_coeff = 1/(24 pi^2)
/// (about 4.2220e-3) and na2_coeff = 1/9.
pub fn reduced_prefactors(coupling: &PairCoupling) -> Prefactors {
    let e0 = coupling.epsilon0();
    let lam = coupling.lambda_ab / (e0 * e0);
    let pi = std::f64::consts::PI;
    Prefactors {
        london_coeff: lam / (24.0 * pi * pi),
        na1_coeff: lam / (18.0 * pi),
        na2_coeff: lam / 9.0,
    }
}

/// Ground-state mean squared dipole components <d_m^2> of a single atom,
/// entering only the first-order atom-surface energy. The second-order pair
/// formulas assume the isotropic average is already folded into Lambda_AB.
#[derive(Debug, Clone, Copy)]
pub struct AtomPolarization {
    pub d2: [f64; 3],
}

impl AtomPolarization {
    pub fn new(d2: [f64; 3]) -> Result<Self> {
        for (m, &v) in d2.iter().enumerate() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "mean squared dipole component {m} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(AtomPolarization { d2 })
    }

    /// Isotropic atom with total <d^2> split equally over the three axes.
    pub fn isotropic(d2_total: f64) -> Result<Self> {
        Self::new([d2_total / 3.0; 3])
    }
}

/// The conducting boundary. Atom positions must lie in the exterior region
/// stated for each variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    /// No conductor; every image kernel vanishes.
    FreeSpace,
    /// Grounded plane at z = 0, atoms in z > 0.
    Plane,
    /// Two grounded plates at z = +/- d/2, atoms strictly inside the gap.
    Capacitor { d: f64 },
    /// Grounded sphere of radius a centered at the origin, atoms outside.
    SphereGrounded { a: f64 },
    /// Isolated neutral sphere of radius a centered at the origin.
    SphereIsolated { a: f64 },
}

impl Geometry {
    /// Validates the geometry's own parameters (d > 0, a > 0).
    pub fn validate(&self) -> Result<()> {
        match *self {
            Geometry::Capacitor { d } if !(d > 0.0 && d.is_finite()) => Err(Error::Domain(
                format!("capacitor gap must be finite and positive, got {d}"),
            )),
            Geometry::SphereGrounded { a } | Geometry::SphereIsolated { a }
                if !(a > 0.0 && a.is_finite()) =>
            {
                Err(Error::Domain(format!(
                    "sphere radius must be finite and positive, got {a}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Checks that `r` lies strictly in the valid (exterior) region.
    pub fn check_point(&self, r: Vec3) -> Result<()> {
        if !r.is_finite() {
            return Err(Error::Domain(format!("non-finite position {r:?}")));
        }
        match *self {
            Geometry::FreeSpace => Ok(()),
            Geometry::Plane => {
                if r.z > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "plane geometry requires z > 0, got z = {}",
                        r.z
                    )))
                }
            }
            Geometry::Capacitor { d } => {
                if r.z.abs() < d / 2.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "capacitor geometry requires |z| < d/2 = {}, got z = {}",
                        d / 2.0,
                        r.z
                    )))
                }
            }
            Geometry::SphereGrounded { a } | Geometry::SphereIsolated { a } => {
                if r.norm() > a {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "sphere geometry requires |r| > a = {a}, got |r| = {}",
                        r.norm()
                    )))
                }
            }
        }
    }

    /// Distance from `r` to the nearest conducting surface, the length scale
    /// that bounds finite-difference steps. Free space returns infinity.
    pub fn boundary_distance(&self, r: Vec3) -> f64 {
        match *self {
            Geometry::FreeSpace => f64::INFINITY,
            Geometry::Plane => r.z,
            Geometry::Capacitor { d } => (d / 2.0 - r.z).min(r.z + d / 2.0),
            Geometry::SphereGrounded { a } | Geometry::SphereIsolated { a } => r.norm() - a,
        }
    }
}

/// Truncation control for the capacitor eigenfunction series and the image
/// ladders. A sum is accepted once `min_terms` consecutive increments each
/// stay below `rel_tol` times the running result, and rejected (converged =
/// false) if `n_max` terms fail to achieve that.
#[derive(Debug, Clone, Copy)]
pub struct SeriesCtrl {
    pub rel_tol: f64,
    pub n_max: usize,
    pub min_terms: usize,
}

impl Default for SeriesCtrl {
    fn default() -> Self {
        SeriesCtrl { rel_tol: 1e-12, n_max: 100_000, min_terms: 8 }
    }
}

impl SeriesCtrl {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Domain(format!(
                "series rel_tol must lie in (0, 1), got {}",
                self.rel_tol
            )));
        }
        if self.min_terms < 1 || self.n_max < self.min_terms {
            return Err(Error::Domain(format!(
                "series limits must satisfy n_max >= min_terms >= 1, got n_max = {}, min_terms = {}",
                self.n_max, self.min_terms
            )));
        }
        Ok(())
    }
}

/// Finite-difference control for forces and oracle Hessians.
///
/// `base_step` is a dimensionless fraction; the actual step is `base_step`
/// times a characteristic length (distance to the nearest boundary for
/// forces, the configuration scale for oracle Hessians), clamped so every
/// stencil point stays inside the valid region. `richardson_levels` is the
/// number of step halvings in the extrapolation table; 0 means a raw central
/// difference.
#[derive(Debug, Clone, Copy)]
pub struct FdCtrl {
    pub base_step: f64,
    pub richardson_levels: u32,
}

impl Default for FdCtrl {
    fn default() -> Self {
        FdCtrl { base_step: 1e-5, richardson_levels: 2 }
    }
}

impl FdCtrl {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_step > 0.0 && self.base_step.is_finite()) {
            return Err(Error::Domain(format!(
                "finite-difference base_step must be finite and positive, got {}",
                self.base_step
            )));
        }
        Ok(())
    }
}

/// Which coordinate of atom B a scan sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    X,
    Y,
    Z,
}

/// A resolved scan plan: fixed atom A, atom B swept along one axis, and the
/// destination for the rows. The CLI builds these from its config file.
#[derive(Debug, Clone)]
pub struct ScanSpec {
    pub geometry: Geometry,
    pub coupling: PairCoupling,
    pub atom_a: Vec3,
    /// Template for atom B; the swept component is replaced per sample.
    pub atom_b: Vec3,
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub out_path: Option<String>,
}

impl ScanSpec {
    /// The swept values, evenly spaced with both endpoints included.
    pub fn samples(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.count)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.count < 2 {
            return Err(Error::Domain(format!(
                "scan needs at least 2 samples, got {}",
                self.count
            )));
        }
        self.geometry.check_point(self.atom_a)?;
        let axis = match self.axis {
            SweepAxis::X => 0,
            SweepAxis::Y => 1,
            SweepAxis::Z => 2,
        };
        for v in self.samples() {
            self.geometry.check_point(self.atom_b.with(axis, v))?;
        }
        Ok(())
    }
}

/// `count` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let step = (stop - start) / (count as f64 - 1.0);
    (0..count)
        .map(|i| if i + 1 == count { stop } else { start + step * i as f64 })
        .collect()
}

/// `count` log-spaced values from `start` to `stop` inclusive; both must be
/// positive (direction may be descending).
pub fn logspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    assert!(start > 0.0 && stop > 0.0, "logspace endpoints must be positive");
    linspace(start.ln(), stop.ln(), count).into_iter().map(f64::exp).collect()
}
