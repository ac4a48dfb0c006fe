//! Transfer operators on grid fields and the pulsed compositions.
//!
//! * `pushforward_ideal`: `h ↦ (DT h)∘T⁻¹`, exact on the lattice;
//! * `apply_l_infty`: the rank-1 strong-shear limit;
//! * `apply_k_alpha`: vertical coupling `−∇g·(DT h)∘T⁻¹`;
//! * `apply_heat`: `e^{εΔ}` as a Fourier multiplier;
//! * `apply_p_eps`, `apply_p3d`, `apply_j_eps`, `solve_h3`: one pulsed period and
//!   the pieces of its block-triangular structure.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{DynamoError, Result};
use crate::fields::{Field3, FieldVector, ScalarField, VectorField2};
use crate::map::{
    apply_inverse, backward_region, grid_pullback_table, Alpha, BranchMatrix, PullbackTable,
    TorusPoint,
};
use crate::shear::ShearProfile;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const FOUR_PI2: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;

/// Everything needed to apply the operators at fixed `(α, N, g, ε)`.
#[derive(Debug, Clone)]
pub struct OperatorContext {
    alpha: Alpha,
    n: usize,
    table: PullbackTable,
    /// Branch matrices as floats, indexed by branch − 1.
    mats: [[[f64; 2]; 2]; 4],
    phase: ScalarField,
    grad_g: [Vec<f64>; 2],
    eps: f64,
}

impl OperatorContext {
    pub fn new(alpha: Alpha, n: usize, profile: &ShearProfile, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        let table = grid_pullback_table(n, alpha)?;
        let s = profile.sample_grid(n, [0.0, 0.0])?;
        let phase = ScalarField::from_vec(
            n,
            s.g.iter()
                .map(|&g| Complex64::from_polar(1.0, TWO_PI * g))
                .collect(),
        )?;
        let mats = BranchMatrix::all(alpha).map(|m| {
            let e = m.entries;
            [
                [e[0][0] as f64, e[0][1] as f64],
                [e[1][0] as f64, e[1][1] as f64],
            ]
        });
        Ok(OperatorContext {
            alpha,
            n,
            table,
            mats,
            phase,
            grad_g: [s.gx, s.gy],
            eps,
        })
    }

    /// Same context with a different diffusivity.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        let mut c = self.clone();
        c.eps = eps;
        Ok(c)
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn table(&self) -> &PullbackTable {
        &self.table
    }

    /// Grid samples of `e^{2πig}`.
    pub fn phase(&self) -> &ScalarField {
        &self.phase
    }

    pub fn grad_g(&self) -> &[Vec<f64>; 2] {
        &self.grad_g
    }

    /// Heat factor of the vertical mode, `e^{−4π²ε}`.
    pub fn z_mode_factor(&self) -> f64 {
        (-FOUR_PI2 * self.eps).exp()
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(DynamoError::SizeMismatch(n, self.n));
        }
        Ok(())
    }

    fn multiply_phase(&self, f: &mut ScalarField) {
        f.values_mut()
            .par_iter_mut()
            .zip(self.phase.values())
            .for_each(|(v, p)| *v *= p);
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(DynamoError::NegativeDiffusivity(eps));
    }
    Ok(())
}

/// `(DT h)∘T⁻¹` on the lattice: `out(p) = A_ℓ h(T⁻¹p)`.
pub fn pushforward_ideal(h: &VectorField2, ctx: &OperatorContext) -> Result<VectorField2> {
    ctx.check(h.n())?;
    let n = ctx.n;
    let src = ctx.table.sources();
    let br = ctx.table.branches();
    let (a, b) = (h.c[0].values(), h.c[1].values());
    let out: Vec<(Complex64, Complex64)> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let s = src[k] as usize;
            let m = &ctx.mats[br[k] as usize - 1];
            let (u, v) = (a[s], b[s]);
            (u * m[0][0] + v * m[0][1], u * m[1][0] + v * m[1][1])
        })
        .collect();
    let (c1, c2): (Vec<_>, Vec<_>) = out.into_iter().unzip();
    VectorField2::new(ScalarField::from_vec(n, c1)?, ScalarField::from_vec(n, c2)?)
}

/// The normalized transfer operator `α⁻²(DT h)∘T⁻¹`.
pub fn apply_l_alpha(h: &VectorField2, ctx: &OperatorContext) -> Result<VectorField2> {
    let mut out = pushforward_ideal(h, ctx)?;
    out.scale(Complex64::new(1.0 / ctx.alpha.squared(), 0.0));
    Ok(out)
}

/// Scalar composition `f∘T⁻¹` (a lattice permutation).
pub fn compose_inverse(f: &ScalarField, ctx: &OperatorContext) -> Result<ScalarField> {
    ctx.check(f.n())?;
    let src = ctx.table.sources();
    let v = f.values();
    let data = src.par_iter().map(|&s| v[s as usize]).collect();
    ScalarField::from_vec(ctx.n, data)
}

/// Pointwise `α⁻²A_ℓ h(T⁻¹p)` with `ℓ` the backward region of `p`.
pub fn l_alpha_at(
    p: TorusPoint,
    alpha: Alpha,
    h: impl Fn(TorusPoint) -> [Complex64; 2],
) -> [Complex64; 2] {
    let m = BranchMatrix::for_branch(backward_region(p, alpha).index, alpha).entries;
    let v = h(apply_inverse(p, alpha));
    let s = 1.0 / alpha.squared();
    [
        (v[0] * m[0][0] as f64 + v[1] * m[0][1] as f64) * s,
        (v[0] * m[1][0] as f64 + v[1] * m[1][1] as f64) * s,
    ]
}

/// Rank-1 limit operator: `((∫_{x≥½} h₁ − ∫_{x<½} h₁)·(1_{y≥½} − 1_{y<½}), 0)`.
pub fn apply_l_infty(h: &VectorField2) -> Result<VectorField2> {
    let n = h.n();
    let half = n / 2;
    let vals = h.c[0].values();
    let mut s = Complex64::new(0.0, 0.0);
    for (k, v) in vals.iter().enumerate() {
        if k / n >= half {
            s += v;
        } else {
            s -= v;
        }
    }
    s /= (n * n) as f64;
    let first = ScalarField::from_vec(
        n,
        (0..n * n)
            .map(|k| if k % n >= half { s } else { -s })
            .collect(),
    )?;
    VectorField2::new(first, ScalarField::zeros(n)?)
}

/// Vertical coupling `K h = −∇g · (DT h)∘T⁻¹`.
pub fn apply_k_alpha(h: &VectorField2, ctx: &OperatorContext) -> Result<ScalarField> {
    let push = pushforward_ideal(h, ctx)?;
    k_from_pushforward(&push, ctx)
}

fn k_from_pushforward(push: &VectorField2, ctx: &OperatorContext) -> Result<ScalarField> {
    let (gx, gy) = (&ctx.grad_g[0], &ctx.grad_g[1]);
    let (a, b) = (push.c[0].values(), push.c[1].values());
    let data = (0..ctx.n * ctx.n)
        .into_par_iter()
        .map(|k| -(a[k] * gx[k] + b[k] * gy[k]))
        .collect();
    ScalarField::from_vec(ctx.n, data)
}

/// Fields that the heat semigroup acts on componentwise.
pub trait Diffusible: Sized {
    fn heat(&self, eps: f64) -> Result<Self>;
}

fn heat_multiplier(eps: f64) -> impl Fn(i64, i64) -> Complex64 + Sync {
    move |k1, k2| Complex64::new((-FOUR_PI2 * eps * (k1 * k1 + k2 * k2) as f64).exp(), 0.0)
}

impl Diffusible for ScalarField {
    fn heat(&self, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        if eps == 0.0 {
            return Ok(self.clone());
        }
        Ok(self.fourier_multiply(heat_multiplier(eps)))
    }
}

impl Diffusible for VectorField2 {
    fn heat(&self, eps: f64) -> Result<Self> {
        VectorField2::new(self.c[0].heat(eps)?, self.c[1].heat(eps)?)
    }
}

impl Diffusible for Field3 {
    fn heat(&self, eps: f64) -> Result<Self> {
        Field3::new(self.h.heat(eps)?, self.h3.heat(eps)?)
    }
}

/// `e^{εΔ} f` via the multiplier `exp(−4π²ε|k|²)`.
pub fn apply_heat<F: Diffusible>(f: &F, eps: f64) -> Result<F> {
    f.heat(eps)
}

/// `P_ε h = e^{εΔ}(e^{2πig}·(DT h)∘T⁻¹)`.
pub fn apply_p_eps(h: &VectorField2, ctx: &OperatorContext) -> Result<VectorField2> {
    let mut push = pushforward_ideal(h, ctx)?;
    for c in push.c.iter_mut() {
        ctx.multiply_phase(c);
    }
    push.heat(ctx.eps)
}

/// `α⁻² P_ε`, the variant with O(1) amplitudes used by the spectral routines.
pub fn apply_p_eps_normalized(h: &VectorField2, ctx: &OperatorContext) -> Result<VectorField2> {
    let mut out = apply_p_eps(h, ctx)?;
    out.scale(Complex64::new(1.0 / ctx.alpha.squared(), 0.0));
    Ok(out)
}

/// One pulsed period acting on the ansatz `e^{2πiz}(h, H)`:
/// `e^{−4π²ε}(e^{εΔ}(e^{2πig}(DT h)∘T⁻¹); e^{εΔ}(e^{2πig}K h) + e^{εΔ}(e^{2πig}H∘T⁻¹))`.
pub fn apply_p3d(b: &Field3, ctx: &OperatorContext) -> Result<Field3> {
    ctx.check(b.n())?;
    let push = pushforward_ideal(&b.h, ctx)?;
    let mut vert = k_from_pushforward(&push, ctx)?;
    vert.axpy(Complex64::new(1.0, 0.0), &compose_inverse(&b.h3, ctx)?);
    ctx.multiply_phase(&mut vert);
    let mut planar = push;
    for c in planar.c.iter_mut() {
        ctx.multiply_phase(c);
    }
    let mut out = Field3::new(planar, vert)?.heat(ctx.eps)?;
    out.scale(Complex64::new(ctx.z_mode_factor(), 0.0));
    Ok(out)
}

/// `J_ε H = e^{−4π²ε} e^{εΔ}(e^{2πig}·H∘T⁻¹)`; requires `ε > 0`.
pub fn apply_j_eps(h3: &ScalarField, ctx: &OperatorContext) -> Result<ScalarField> {
    if ctx.eps == 0.0 {
        return Err(DynamoError::ZeroDiffusivity);
    }
    let mut c = compose_inverse(h3, ctx)?;
    ctx.multiply_phase(&mut c);
    let mut out = c.heat(ctx.eps)?;
    out.scale(Complex64::new(ctx.z_mode_factor(), 0.0));
    Ok(out)
}

/// Solve `λH − J H = R` by the iteration `H ← λ⁻¹(R + J H)`.
///
/// `contraction` bounds the operator norm of `J`; the iteration stops when
/// `‖λH − JH − R‖ ≤ tol·‖R‖`.
pub fn solve_resolvent<V: FieldVector>(
    lambda: Complex64,
    rhs: &V,
    contraction: f64,
    mut apply_j: impl FnMut(&V) -> Result<V>,
    tol: f64,
    max_iter: usize,
) -> Result<V> {
    if lambda.norm() <= contraction {
        return Err(DynamoError::EigenvalueTooSmall(lambda.norm(), contraction));
    }
    let rnorm = rhs.norm();
    let mut h = rhs.clone();
    h.scale(Complex64::new(0.0, 0.0));
    if rnorm == 0.0 {
        return Ok(h);
    }
    let inv = lambda.inv();
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let jh = apply_j(&h)?;
        // residual of the current iterate: λH − JH − R
        let mut res = h.clone();
        res.scale(lambda);
        res.axpy(Complex64::new(-1.0, 0.0), &jh);
        res.axpy(Complex64::new(-1.0, 0.0), rhs);
        residual = res.norm() / rnorm;
        if residual < tol {
            return Ok(h);
        }
        let mut next = rhs.clone();
        next.axpy(Complex64::new(1.0, 0.0), &jh);
        next.scale(inv);
        h = next;
    }
    Err(DynamoError::NotConverged {
        iters: max_iter,
        residual,
    })
}

/// Vertical component of an eigenmode of [`apply_p3d`].
///
/// `lambda` is the eigenvalue of the planar block `e^{−4π²ε}P_ε` with
/// eigenvector `h_eig`; returns `H = (λ − J_ε)⁻¹ e^{−4π²ε} e^{εΔ}(e^{2πig} K h)`.
pub fn solve_h3(
    h_eig: &VectorField2,
    lambda: Complex64,
    ctx: &OperatorContext,
) -> Result<ScalarField> {
    let factor = ctx.z_mode_factor();
    let mut rhs = apply_k_alpha(h_eig, ctx)?;
    ctx.multiply_phase(&mut rhs);
    let mut rhs = rhs.heat(ctx.eps)?;
    rhs.scale(Complex64::new(factor, 0.0));
    solve_resolvent(lambda, &rhs, factor, |h| apply_j_eps(h, ctx), 1e-10, 500)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::random_field;
    use crate::map::{apply_inverse, flow_map, GridPoint, Point3, TorusPoint};
    use crate::shear::build_shear;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn ctx(alpha: u32, n: usize, profile: &ShearProfile, eps: f64) -> OperatorContext {
        OperatorContext::new(Alpha::new(alpha).unwrap(), n, profile, eps).unwrap()
    }

    #[test]
    fn pushforward_example() {
        let cx = ctx(2, 8, &ShearProfile::zero(4), 0.0);
        let h = VectorField2::from_fn(8, |_, _| [c(1.0), c(0.0)]).unwrap();
        let out = pushforward_ideal(&h, &cx).unwrap();
        // p = (1/4, 3/4) is lattice node (2, 6).
        assert_eq!(out.c[0].get(2, 6), c(5.0));
        assert_eq!(out.c[1].get(2, 6), c(2.0));
    }

    #[test]
    fn pushforward_is_linear_and_composition_is_isometric() {
        let cx = ctx(4, 32, &ShearProfile::zero(4), 0.0);
        let h1 = random_field(1, 1.0, 6, 32).unwrap();
        let h2 = random_field(2, 1.0, 6, 32).unwrap();
        let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5));
        let mut comb = h1.clone();
        comb.scale(a);
        comb.axpy(b, &h2);
        let lhs = pushforward_ideal(&comb, &cx).unwrap();
        let mut rhs = pushforward_ideal(&h1, &cx).unwrap();
        rhs.scale(a);
        rhs.axpy(b, &pushforward_ideal(&h2, &cx).unwrap());
        assert!(lhs.sub(&rhs).unwrap().norm() < 1e-12 * lhs.norm());
        let f = &h1.c[0];
        let moved = compose_inverse(f, &cx).unwrap();
        let mut v: Vec<f64> = moved.values().iter().map(|z| z.norm_sqr()).collect();
        let mut w: Vec<f64> = f.values().iter().map(|z| z.norm_sqr()).collect();
        v.sort_by(f64::total_cmp);
        w.sort_by(f64::total_cmp);
        assert_eq!(v, w);
    }

    #[test]
    fn pushforward_twice_matches_composed_table() {
        let n = 64;
        let alpha = Alpha::new(4).unwrap();
        let cx = ctx(4, n, &ShearProfile::zero(4), 0.0);
        let h = random_field(9, 1.0, 8, n).unwrap();
        let twice = pushforward_ideal(&pushforward_ideal(&h, &cx).unwrap(), &cx).unwrap();
        // Independent construction from real-point inverses and products of branch matrices.
        let mats = BranchMatrix::all(alpha);
        for i in 0..n {
            for j in 0..n {
                let p = GridPoint::new(i, j, n).unwrap().to_torus();
                let q = apply_inverse(p, alpha);
                let r = apply_inverse(q, alpha);
                let l1 = crate::map::backward_region(p, alpha).index as usize - 1;
                let l2 = crate::map::backward_region(q, alpha).index as usize - 1;
                let ri = (r.x * n as f64).round() as usize % n;
                let rj = (r.y * n as f64).round() as usize % n;
                let v = [h.c[0].get(ri, rj), h.c[1].get(ri, rj)];
                let m = |m: &BranchMatrix, v: [Complex64; 2]| {
                    let e = m.entries;
                    [
                        v[0] * e[0][0] as f64 + v[1] * e[0][1] as f64,
                        v[0] * e[1][0] as f64 + v[1] * e[1][1] as f64,
                    ]
                };
                let w = m(&mats[l1], m(&mats[l2], v));
                assert!((w[0] - twice.c[0].get(i, j)).norm() < 1e-9 * (1.0 + w[0].norm()));
                assert!((w[1] - twice.c[1].get(i, j)).norm() < 1e-9 * (1.0 + w[1].norm()));
            }
        }
    }

    #[test]
    fn l_infty_examples() {
        let n = 16;
        let one = VectorField2::from_fn(n, |_, _| [c(1.0), c(0.0)]).unwrap();
        assert!(apply_l_infty(&one).unwrap().norm() < 1e-15);
        let sgn = |v: f64| if v >= 0.5 { 1.0 } else { -1.0 };
        let h = VectorField2::from_fn(n, |x, _| [c(sgn(x)), c(0.0)]).unwrap();
        let out = apply_l_infty(&h).unwrap();
        let expect = VectorField2::from_fn(n, |_, y| [c(sgn(y)), c(0.0)]).unwrap();
        assert!(out.sub(&expect).unwrap().norm() < 1e-14);
        for seed in 0..20 {
            let r = random_field(seed, 0.5, 6, n).unwrap();
            assert!(apply_l_infty(&apply_l_infty(&r).unwrap()).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn k_alpha_vanishes_for_trivial_inputs() {
        let cx = ctx(4, 32, &ShearProfile::zero(4), 0.0);
        let h = random_field(3, 1.0, 6, 32).unwrap();
        assert!(apply_k_alpha(&h, &cx).unwrap().norm() == 0.0);
        let cg = ctx(4, 32, &build_shear(0.05, 16).unwrap(), 0.0);
        assert!(
            apply_k_alpha(&VectorField2::zeros(32).unwrap(), &cg)
                .unwrap()
                .norm()
                == 0.0
        );
    }

    #[test]
    fn k_alpha_matches_flow_jacobian() {
        // Third row of the derivative of the time-1 flow, by central differences,
        // applied to h at the source point, compared with −∇g(p)·A_ℓ h(q).
        let alpha = Alpha::new(4).unwrap();
        let profile = build_shear(0.08, 24).unwrap();
        let n = 64;
        let cx = OperatorContext::new(alpha, n, &profile, 0.0).unwrap();
        let h = random_field(11, 1.0, 6, n).unwrap();
        let k = apply_k_alpha(&h, &cx).unwrap();
        let d = 1e-6;
        let mut checked = 0;
        for i in (0..n).step_by(5) {
            for j in (0..n).step_by(7) {
                let p = GridPoint::new(i, j, n).unwrap();
                let (q, _) = cx.table().lookup(p);
                let qt = q.to_torus();
                // skip points within 1e-3 of a region boundary
                let far = [[d, 0.0], [-d, 0.0], [0.0, d], [0.0, -d]].iter().all(|o| {
                    let a = crate::map::forward_region(
                        TorusPoint::new(qt.x + o[0] * 1e3, qt.y + o[1] * 1e3),
                        alpha,
                    );
                    a == crate::map::forward_region(qt, alpha)
                });
                if !far {
                    continue;
                }
                let z = |x: f64, y: f64| {
                    let r = flow_map(1.0, Point3::new(x, y, 0.75), alpha, &profile).unwrap();
                    r.z
                };
                let dzdx = (z(qt.x + d, qt.y) - z(qt.x - d, qt.y)) / (2.0 * d);
                let dzdy = (z(qt.x, qt.y + d) - z(qt.x, qt.y - d)) / (2.0 * d);
                let v = [h.c[0].get(q.i, q.j), h.c[1].get(q.i, q.j)];
                let fd = v[0] * dzdx + v[1] * dzdy;
                let got = k.get(i, j);
                assert!(
                    (fd - got).norm() < 1e-5 * (1.0 + got.norm()),
                    "{fd} vs {got}"
                );
                checked += 1;
            }
        }
        assert!(checked >= 60, "only {checked} points checked");
    }

    #[test]
    fn heat_examples() {
        let n = 16;
        let f = random_field(4, 1.0, 5, n).unwrap().c[0].clone();
        assert_eq!(apply_heat(&f, 0.0).unwrap(), f);
        let m = ScalarField::from_fn(n, |x, _| Complex64::from_polar(1.0, TWO_PI * x)).unwrap();
        let hm = apply_heat(&m, 0.1).unwrap();
        let factor = hm.inner(&m).re;
        assert!((factor - 0.019296).abs() < 1e-6);
        let ab = apply_heat(&apply_heat(&f, 0.01).unwrap(), 0.02).unwrap();
        let direct = apply_heat(&f, 0.03).unwrap();
        assert!(ab.sub(&direct).unwrap().norm() < 1e-12 * f.norm());
        assert!(apply_heat(&f, -1.0).is_err());
        assert!(direct.norm() <= f.norm());
    }

    #[test]
    fn p_eps_degenerate_and_bounded() {
        let n = 32;
        let h = random_field(5, 1.0, 6, n).unwrap();
        let cz = ctx(4, n, &ShearProfile::zero(4), 0.0);
        assert_eq!(
            apply_p_eps(&h, &cz).unwrap(),
            pushforward_ideal(&h, &cz).unwrap()
        );
        let cg = ctx(8, n, &build_shear(0.05, 16).unwrap(), 1e-3);
        let out = apply_p_eps_normalized(&h, &cg).unwrap();
        assert!(out.norm() <= 2.0 * h.norm() * (1.0 + 2.0 / 8.0));
    }

    #[test]
    fn p3d_pure_composition() {
        let n = 32;
        let cz = ctx(4, n, &ShearProfile::zero(4), 0.0);
        let h3 = random_field(6, 1.0, 6, n).unwrap().c[1].clone();
        let b = Field3::new(VectorField2::zeros(n).unwrap(), h3.clone()).unwrap();
        let out = apply_p3d(&b, &cz).unwrap();
        assert_eq!(out.h3, compose_inverse(&h3, &cz).unwrap());
        assert_eq!(out.h3.norm(), h3.norm());
    }

    #[test]
    fn j_eps_contracts() {
        let n = 32;
        let cg = ctx(4, n, &build_shear(0.05, 16).unwrap(), 1e-2);
        for seed in 0..100 {
            let h3 = random_field(seed, 0.5, 10, n).unwrap().c[0].clone();
            let out = apply_j_eps(&h3, &cg).unwrap();
            assert!(out.norm() <= cg.z_mode_factor() * h3.norm() * (1.0 + 1e-12));
        }
        let cz = ctx(4, n, &ShearProfile::zero(4), 1e-2);
        let one = ScalarField::from_fn(n, |_, _| c(1.0)).unwrap();
        let out = apply_j_eps(&one, &cz).unwrap();
        assert!(out
            .values()
            .iter()
            .all(|v| (v - c(cz.z_mode_factor())).norm() < 1e-12));
        assert!(apply_j_eps(&one, &cz.with_eps(0.0).unwrap()).is_err());
    }

    #[test]
    fn resolvent_surrogate() {
        let rhs = vec![c(1.0)];
        let h = solve_resolvent(
            c(2.0),
            &rhs,
            0.5,
            |v: &Vec<Complex64>| Ok(vec![v[0] * 0.5]),
            1e-14,
            200,
        )
        .unwrap();
        assert!((h[0] - c(2.0 / 3.0)).norm() < 1e-13);
        assert!(solve_resolvent(
            c(0.1),
            &rhs,
            0.5,
            |v: &Vec<Complex64>| Ok(v.clone()),
            1e-10,
            10
        )
        .is_err());
    }

    #[test]
    fn h3_vanishes_without_shear() {
        let n = 32;
        let cz = ctx(4, n, &ShearProfile::zero(4), 1e-2);
        let h = random_field(8, 1.0, 6, n).unwrap();
        assert_eq!(solve_h3(&h, c(3.0), &cz).unwrap().norm(), 0.0);
    }
}
