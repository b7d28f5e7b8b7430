//! Independent brute-force references used by tests and the CLI verify mode,
//! never by the production pipeline.
//!
//! Three families live here:
//!
//! * an extended-precision (double-double, about 31 significant digits)
//!   evaluation of K0 and K1, with internal regime boundaries deliberately
//!   different from the production ones so each production regime is checked
//!   against a different algorithm on part of its domain;
//! * finite-difference mixed Hessians with Richardson extrapolation and a
//!   self-reported error estimate, the arbiter for every analytic tensor;
//! * the image-ladder representation of the capacitor Green function,
//!   an independent route to the same function as the eigenfunction series.
//!
//! A result from this module is only used as a reference where its own error
//! estimate is at least an order of magnitude tighter than the tolerance
//! under test.

use std::f64::consts::PI;

use crate::model::{Tensor3, Vec3, TENSOR_ZERO};

// ---------------------------------------------------------------------------
// Double-double arithmetic.
//
// A value is represented as an unevaluated sum hi + lo with |lo| <= ulp(hi)/2,
// giving roughly 106 bits of significand. Only the handful of operations the
// Bessel oracle needs are implemented. The error-free transformations are the
// textbook two_sum / two_prod, the latter leaning on fused multiply-add.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b| or a == 0
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    fn from_f64(a: f64) -> Dd {
        Dd { hi: a, lo: 0.0 }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let s2 = s2 + t1;
        let (s1, s2) = quick_two_sum(s1, s2);
        let s2 = s2 + t2;
        let (hi, lo) = quick_two_sum(s1, s2);
        Dd { hi, lo }
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    fn mul(self, o: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let p2 = p2 + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, b);
        let p2 = p2 + self.lo * b;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    fn div(self, o: Dd) -> Dd {
        // long division with two correction passes; relative error a few
        // units in the 107th bit, ample here
        let q1 = self.hi / o.hi;
        let r1 = self.sub(o.mul_f64(q1));
        let q2 = r1.hi / o.hi;
        let r2 = r1.sub(o.mul_f64(q2));
        let q3 = r2.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e }.add(Dd::from_f64(q3))
    }

    fn div_f64(self, b: f64) -> Dd {
        self.div(Dd::from_f64(b))
    }

    /// Exact scaling by a power of two (up to subnormal loss in `lo`).
    fn ldexp(self, e: i32) -> Dd {
        let s = 2f64.powi(e);
        Dd { hi: self.hi * s, lo: self.lo * s }
    }
}

// Decimal values: gamma = 0.57721566490153286060651209008240243...,
// ln 2 = 0.69314718055994530941723212145817657...
const DD_EULER_GAMMA: Dd = Dd { hi: 0.577_215_664_901_532_9, lo: -4.942_915_152_430_645e-18 };
const DD_LN2: Dd = Dd { hi: 0.693_147_180_559_945_3, lo: 2.319_046_813_846_299_6e-17 };

/// exp in double-double: reduce by ln 2, Taylor-sum the remainder.
fn dd_exp(a: Dd) -> Dd {
    if a.hi < -746.0 {
        return Dd::ZERO;
    }
    if a.hi > 709.0 {
        panic!("dd_exp overflow, argument {}", a.hi);
    }
    let m = (a.hi / DD_LN2.hi).round();
    let r = a.sub(DD_LN2.mul_f64(m));
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    for k in 1..40 {
        term = term.mul(r).div_f64(k as f64);
        sum = sum.add(term);
        if term.hi.abs() < 1e-35 * sum.hi.abs() {
            break;
        }
    }
    sum.ldexp(m as i32)
}

/// ln in double-double: f64 seed plus one Newton step, y += a e^-y - 1.
fn dd_ln(a: Dd) -> Dd {
    assert!(a.hi > 0.0, "dd_ln requires a positive argument");
    let y0 = Dd::from_f64(a.hi.ln());
    let r = a.mul(dd_exp(y0.neg())).sub(Dd::ONE);
    y0.add(r)
}

fn dd_sinh(t: Dd) -> Dd {
    let e = dd_exp(t);
    let en = dd_exp(t.neg());
    e.sub(en).mul_f64(0.5)
}

fn dd_cosh(t: Dd) -> Dd {
    let e = dd_exp(t);
    let en = dd_exp(t.neg());
    e.add(en).mul_f64(0.5)
}

/// Ascending-series K0/K1 in double-double, used for x <= 10. The log term
/// and the series cancel about e^(2x) ~ 5e8 at the top of the range, which
/// double-double absorbs with 20+ digits to spare.
fn dd_k_ascending(nu: u32, x: f64) -> Dd {
    let xd = Dd::from_f64(x);
    let t = xd.mul(xd).mul_f64(0.25);
    let lhx = dd_ln(xd.mul_f64(0.5));
    match nu {
        0 => {
            let mut a = Dd::ONE;
            let mut i0 = Dd::ONE;
            let mut corr = Dd::ZERO;
            let mut h = Dd::ZERO;
            for k in 1..200u64 {
                a = a.mul(t).div_f64((k * k) as f64);
                h = h.add(Dd::ONE.div_f64(k as f64));
                i0 = i0.add(a);
                corr = corr.add(h.mul(a));
                if a.hi * h.hi < 1e-34 * corr.hi.abs().max(1.0) {
                    break;
                }
            }
            corr.sub(lhx.add(DD_EULER_GAMMA).mul(i0))
        }
        1 => {
            let two_gamma = DD_EULER_GAMMA.mul_f64(2.0);
            let mut b = Dd::ONE;
            let mut i1_sum = Dd::ONE;
            let mut h_k = Dd::ZERO;
            let mut h_k1 = Dd::ONE;
            let mut corr = h_k.add(h_k1).sub(two_gamma);
            for k in 1..200u64 {
                b = b.mul(t).div_f64((k * (k + 1)) as f64);
                h_k = h_k.add(Dd::ONE.div_f64(k as f64));
                h_k1 = h_k1.add(Dd::ONE.div_f64((k + 1) as f64));
                i1_sum = i1_sum.add(b);
                corr = corr.add(h_k.add(h_k1).sub(two_gamma).mul(b));
                if b.hi * (h_k.hi + h_k1.hi) < 1e-34 * i1_sum.hi {
                    break;
                }
            }
            let i1 = xd.mul_f64(0.5).mul(i1_sum);
            Dd::ONE.div(xd).add(lhx.mul(i1)).sub(xd.mul_f64(0.25).mul(corr))
        }
        _ => panic!("dd_k_ascending supports nu in {{0, 1}}"),
    }
}

/// Trapezoid rule on K_nu(x) = e^-x Int exp(-2x sinh^2(t/2)) cosh(nu t) dt in
/// double-double, used for x > 10. Same representation as the production
/// bridge but with a finer step (pi^2/(x + 65)) and a deeper cutoff tuned for
/// ~1e-26 relative error.
fn dd_k_trapezoid(nu: u32, x: f64) -> Dd {
    let h = PI * PI / (x + 65.0);
    let mut sum = Dd { hi: 0.5, lo: 0.0 };
    let mut j = 1u64;
    loop {
        let (thi, tlo) = two_prod(h, j as f64);
        let t = Dd { hi: thi, lo: tlo };
        let sh = dd_sinh(t.mul_f64(0.5));
        let u = sh.mul(sh).mul_f64(2.0 * x);
        if u.hi > 85.0 {
            break;
        }
        let mut f = dd_exp(u.neg());
        if nu > 0 {
            f = f.mul(dd_cosh(t.mul_f64(nu as f64)));
        }
        sum = sum.add(f);
        j += 1;
    }
    dd_exp(Dd::from_f64(-x)).mul(sum).mul_f64(h)
}

fn dd_k(nu: u32, x: f64) -> Dd {
    if x <= 10.0 {
        dd_k_ascending(nu, x)
    } else {
        dd_k_trapezoid(nu, x)
    }
}

/// Extended-precision reference K0, rounded to f64. Relative error against
/// the true function is below 1e-20 over [1e-8, 700], so disagreement with
/// the production value at the 1e-13 level is always the production side.
pub fn ref_k0(x: f64) -> f64 {
    assert!(x > 0.0, "ref_k0 requires x > 0, got {x}");
    dd_k(0, x).to_f64()
}

/// Extended-precision reference K1, rounded to f64.
pub fn ref_k1(x: f64) -> f64 {
    assert!(x > 0.0, "ref_k1 requires x > 0, got {x}");
    dd_k(1, x).to_f64()
}

// ---------------------------------------------------------------------------
// Finite-difference mixed Hessians.
// ---------------------------------------------------------------------------

/// A finite-difference mixed Hessian together with its Richardson residual,
/// the absolute difference between the last two extrapolation levels (a
/// usable error estimate because the table converges geometrically).
#[derive(Debug, Clone, Copy)]
pub struct FdHessian {
    pub t: Tensor3,
    pub err_estimate: f64,
}

/// Central-difference approximation of the mixed Hessian d/drA_i d/drB_j of a
/// two-point scalar field, with `levels` halvings of the base steps and
/// Richardson extrapolation across them.
///
/// `step_a` and `step_b` are absolute step lengths for the rA and rB legs.
/// For a field varying on scale L, steps near 1e-2 L with two levels put the
/// combined truncation plus roundoff error near 1e-10 relative; much smaller
/// base steps make roundoff dominate. Every stencil point must be evaluable:
/// the field is called at all four sign combinations for each entry and
/// level.
pub fn fd_mixed_hessian<F>(field: F, r_a: Vec3, r_b: Vec3, step_a: f64, step_b: f64, levels: u32) -> FdHessian
where
    F: Fn(Vec3, Vec3) -> f64,
{
    assert!(step_a > 0.0 && step_b > 0.0, "finite-difference steps must be positive");
    let mut t = TENSOR_ZERO;
    let mut err: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let cross = |ha: f64, hb: f64| -> f64 {
                let app = field(r_a.with(i, r_a.get(i) + ha), r_b.with(j, r_b.get(j) + hb));
                let apm = field(r_a.with(i, r_a.get(i) + ha), r_b.with(j, r_b.get(j) - hb));
                let amp = field(r_a.with(i, r_a.get(i) - ha), r_b.with(j, r_b.get(j) + hb));
                let amm = field(r_a.with(i, r_a.get(i) - ha), r_b.with(j, r_b.get(j) - hb));
                ((app - apm) - (amp - amm)) / (4.0 * ha * hb)
            };
            // Neville table in h^2; column 0 holds raw stencils at h/2^l.
            let n = levels as usize + 1;
            let mut col: Vec<f64> = (0..n)
                .map(|l| {
                    let s = 0.5f64.powi(l as i32);
                    cross(step_a * s, step_b * s)
                })
                .collect();
            let mut prev_best = col[0];
            for m in 1..n {
                let pow = 4f64.powi(m as i32);
                for l in 0..(n - m) {
                    col[l] = (pow * col[l + 1] - col[l]) / (pow - 1.0);
                }
                if m + 1 == n {
                    err = err.max((col[0] - prev_best).abs());
                }
                prev_best = col[0];
            }
            if n == 1 {
                err = f64::INFINITY; // raw stencil carries no estimate
            }
            t[i][j] = col[0];
        }
    }
    FdHessian { t, err_estimate: err }
}

// ---------------------------------------------------------------------------
// Capacitor image ladder (scalar) and fixed-cutoff series reference.
// ---------------------------------------------------------------------------

/// Dirichlet Green function of the capacitor through the alternating image
/// ladder, truncated at `k_max` reflection shells and Richardson-accelerated
/// in 1/N. Plates at z = +/- d/2. The n = 0 positive image is the source
/// itself, so this is the full G including the free kernel.
///
/// Shell sums approach G with an error expanding in powers of 1/N; two
/// Richardson steps (using partial sums at N, N/2 and N/4) leave O(1/N^3).
pub fn capacitor_image_ladder(r: Vec3, rp: Vec3, d: f64, k_max: usize) -> f64 {
    assert!(k_max >= 4, "image ladder needs at least 4 shells for extrapolation");
    let s2 = (r.x - rp.x).powi(2) + (r.y - rp.y).powi(2);
    let pos = |zimg: f64| 1.0 / (s2 + (r.z - zimg).powi(2)).sqrt();

    let shell = |m: i64| -> f64 {
        if m == 0 {
            // source plus the innermost pair of negative images
            pos(rp.z) - pos(-d - rp.z) - pos(d - rp.z)
        } else {
            let mf = m as f64;
            pos(rp.z + 2.0 * mf * d) + pos(rp.z - 2.0 * mf * d)
                - pos((2.0 * mf + 1.0) * d - rp.z)
                - pos(-(2.0 * mf + 1.0) * d - rp.z)
        }
    };

    let n4 = (k_max / 4).max(1);
    let (n2, n1) = (2 * n4, 4 * n4);
    let mut acc = 0.0;
    let mut partials = [0.0f64; 3];
    for m in 0..=n1 as i64 {
        acc += shell(m);
        if m == n4 as i64 {
            partials[0] = acc;
        }
        if m == n2 as i64 {
            partials[1] = acc;
        }
    }
    partials[2] = acc;

    // Richardson in 1/N with N doubling: kill 1/N, then 1/N^2.
    let r1a = 2.0 * partials[1] - partials[0];
    let r1b = 2.0 * partials[2] - partials[1];
    let g = (4.0 * r1b - r1a) / 3.0;
    g / (4.0 * PI)
}

/// Eigenfunction series for the capacitor Green function summed to a fixed
/// cutoff, no adaptivity; the regression reference for the truncation rule.
/// Plates at z = +/- d/2; zeta = z + d/2 is the plate-anchored coordinate.
pub fn high_cutoff_reference(r: Vec3, rp: Vec3, d: f64, n_fixed: usize) -> f64 {
    let s = ((r.x - rp.x).powi(2) + (r.y - rp.y).powi(2)).sqrt();
    assert!(s > 0.0, "fixed-cutoff series needs nonzero in-plane separation");
    let (zeta, zetap) = (r.z + 0.5 * d, rp.z + 0.5 * d);
    let mut sum = 0.0;
    for n in 1..=n_fixed {
        let k = n as f64 * PI / d;
        sum += (k * zeta).sin() * (k * zetap).sin() * crate::specfun::bessel_k0(k * s);
    }
    sum / (PI * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dd_arithmetic_round_trips() {
        let third = Dd::ONE.div_f64(3.0);
        let one = third.mul_f64(3.0);
        assert!((one.hi - 1.0).abs() < 1e-30 && one.lo.abs() < 1e-30);

        let x = Dd::from_f64(2.5);
        let back = dd_exp(dd_ln(x));
        assert!((back.to_f64() - 2.5).abs() < 1e-29);

        // exp(ln 2) against the stored constant
        let two = dd_exp(DD_LN2);
        assert!((two.hi - 2.0).abs() < 1e-30);
    }

    #[test]
    fn dd_routes_agree_on_overlap() {
        // Ascending series and trapezoid rule are wholly different
        // algorithms; their agreement to ~1e-22 on [5, 10] validates both
        // far below anything f64 can express.
        for &x in &[5.0, 7.0, 10.0] {
            for nu in [0u32, 1] {
                let a = dd_k_ascending(nu, x);
                let t = dd_k_trapezoid(nu, x);
                let rel = (a.sub(t).to_f64() / a.to_f64()).abs();
                assert!(rel < 1e-22, "dd route mismatch {rel:.3e} at nu={nu}, x={x}");
            }
        }
    }

    #[test]
    fn reference_matches_published_digits() {
        // 20-digit values from an independent arbitrary-precision system.
        assert_relative_eq!(ref_k0(1.0), 0.421_024_438_240_708_333_34, max_relative = 5e-16);
        assert_relative_eq!(ref_k1(1.0), 0.601_907_230_197_234_574_74, max_relative = 5e-16);
        assert_relative_eq!(ref_k0(0.1), 2.427_069_024_702_016_612_5, max_relative = 5e-16);
        assert_relative_eq!(ref_k1(0.1), 9.853_844_780_870_606_134_8, max_relative = 5e-16);
        assert_relative_eq!(ref_k0(25.0), 3.464_161_562_213_114_355_4e-12, max_relative = 5e-16);
        assert_relative_eq!(ref_k1(25.0), 3.532_778_073_199_933_770_2e-12, max_relative = 5e-16);
        assert_relative_eq!(ref_k0(2.0), 0.113_893_872_749_533_435_65, max_relative = 5e-16);
        assert_relative_eq!(ref_k1(2.0), 0.139_865_881_816_522_427_28, max_relative = 5e-16);
    }

    #[test]
    fn hessian_exact_for_bilinear_field() {
        // c x y' has a single Hessian entry equal to c, exactly captured by
        // the central stencil at any step.
        let field = |a: Vec3, b: Vec3| 3.25 * a.x * b.y + 7.0 + 2.0 * a.z + 0.5 * b.x;
        let h = fd_mixed_hessian(field, Vec3::new(0.3, -0.2, 0.9), Vec3::new(1.0, 2.0, -0.4), 0.1, 0.1, 2);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if (i, j) == (0, 1) { 3.25 } else { 0.0 };
                assert!((h.t[i][j] - expect).abs() < 1e-12, "entry ({i},{j}) = {}", h.t[i][j]);
            }
        }
        let zero = fd_mixed_hessian(|_, _| 42.0, Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), 0.1, 0.1, 1);
        assert_eq!(crate::model::tensor_max_abs(&zero.t), 0.0);
    }

    #[test]
    fn hessian_error_estimate_is_honest() {
        // Smooth nonpolynomial field with a known mixed derivative:
        // f = sin(xA) cos(yB), d2f/dxA dyB = -cos(xA) sin(yB).
        let field = |a: Vec3, b: Vec3| a.x.sin() * b.y.cos();
        let ra = Vec3::new(0.7, 0.0, 0.0);
        let rb = Vec3::new(0.0, 1.1, 0.0);
        let h = fd_mixed_hessian(field, ra, rb, 1e-2, 1e-2, 2);
        let exact = -(0.7f64.cos()) * 1.1f64.sin();
        let err = (h.t[0][1] - exact).abs();
        assert!(err < 1e-10, "actual error {err:.3e}");
        assert!(h.err_estimate < 1e-8, "estimate {:.3e}", h.err_estimate);
        assert!(err < 10.0 * h.err_estimate + 1e-14, "estimate not honest: {err:.3e} vs {:.3e}", h.err_estimate);
    }

    #[test]
    fn image_ladder_satisfies_dirichlet_on_plates() {
        let d = 1.0;
        let rp = Vec3::new(0.0, 0.0, 0.17);
        for plate_z in [-0.5, 0.5] {
            let r = Vec3::new(0.4, 0.1, plate_z);
            let g = capacitor_image_ladder(r, rp, d, 4000);
            let free = 1.0 / (4.0 * PI * (r - rp).norm());
            assert!(g.abs() <= 1e-8 * free, "ladder Dirichlet residual {g:.3e}");
        }
    }

    #[test]
    fn image_ladder_reduces_to_single_plate_at_large_gap() {
        // Keep both atoms near the lower plate and push the upper plate away;
        // G_H must approach the single-plane image kernel of the near plate.
        let d = 1000.0;
        let (r, rp) = (Vec3::new(0.0, 0.0, -499.0), Vec3::new(0.8, 0.0, -499.2));
        let g = capacitor_image_ladder(r, rp, d, 4000);
        let free = 1.0 / (4.0 * PI * (r - rp).norm());
        let gh = g - free;
        // plane at z = -500: image of rp is (0.8, 0, -500.8)
        let image = Vec3::new(0.8, 0.0, -2.0 * 500.0 - rp.z);
        let gh_plane = -1.0 / (4.0 * PI * (r - image).norm());
        assert_relative_eq!(gh, gh_plane, max_relative = 1e-6);
    }

    #[test]
    fn fixed_cutoff_series_is_stable_under_doubling() {
        let d = 1.0;
        let r = Vec3::new(0.0, 0.0, 0.2);
        let rp = Vec3::new(0.6, 0.0, -0.1);
        let a = high_cutoff_reference(r, rp, d, 400);
        let b = high_cutoff_reference(r, rp, d, 800);
        assert_relative_eq!(a, b, max_relative = 1e-13);
    }

    #[test]
    fn ladder_and_series_are_the_same_function() {
        let d = 1.0;
        let r = Vec3::new(0.0, 0.0, 0.0);
        let rp = Vec3::new(0.5, 0.0, 0.0);
        let series = high_cutoff_reference(r, rp, d, 600);
        let ladder = capacitor_image_ladder(r, rp, d, 4000);
        assert_relative_eq!(series, ladder, max_relative = 1e-8);
    }
}
