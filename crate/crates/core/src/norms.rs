//! Sampled anisotropic norms and empirical checks of the inequalities they satisfy.
//!
//! Every estimator is a maximum over a finite sample set of leaf pairings, so it
//! is a lower bound of the corresponding supremum. Inequality checks report
//! `margin = rhs − lhs`; a negative margin is a violation on the sampled data,
//! a positive margin is evidence, not proof.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{DynamoError, Result};
use crate::fields::VectorField2;
use crate::leaves::{
    cone_half_angle, d_sigma, sample_leaf, sample_profile, stream_seed, Leaf, LeafSamples, TestFn,
    TestNormalization,
};
use crate::map::{Alpha, TorusPoint};
use crate::operators::{apply_heat, apply_l_alpha, OperatorContext};

/// Exponents, sample counts and pair scales of the norm estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct NormParams {
    pub alpha: Alpha,
    pub sigma: f64,
    pub beta: f64,
    pub q: f64,
    pub n_leaves: usize,
    pub n_testfns: usize,
    pub delta_grid: Vec<f64>,
}

impl NormParams {
    /// `q = 0.5`, `σ = 0.4`, `β = 0.2`, 512 leaves × 16 test functions, `δ ∈ {2/α, 1/α, 1/(2α)}`.
    pub fn defaults(alpha: Alpha) -> Self {
        let a = alpha.as_f64();
        NormParams {
            alpha,
            sigma: 0.4,
            beta: 0.2,
            q: 0.5,
            n_leaves: 512,
            n_testfns: 16,
            delta_grid: vec![2.0 / a, 1.0 / a, 0.5 / a],
        }
    }

    pub fn with_samples(mut self, n_leaves: usize, n_testfns: usize) -> Self {
        self.n_leaves = n_leaves;
        self.n_testfns = n_testfns;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !(unit(self.sigma) && unit(self.beta) && unit(self.q)) {
            return Err(DynamoError::InvalidParameter(
                "sigma, beta, q must lie in (0, 1)".into(),
            ));
        }
        if self.sigma <= self.beta || 1.0 - self.q <= self.beta {
            return Err(DynamoError::InvalidParameter(format!(
                "need sigma > beta and 1 - q > beta (sigma={}, beta={}, q={})",
                self.sigma, self.beta, self.q
            )));
        }
        if self.n_leaves == 0 || self.n_testfns == 0 {
            return Err(DynamoError::InvalidParameter(
                "sample counts must be positive".into(),
            ));
        }
        let dmax = 2.0 / self.alpha.as_f64() * (1.0 + 1e-12);
        if self.delta_grid.is_empty() || self.delta_grid.iter().any(|&d| !(d > 0.0 && d <= dmax)) {
            return Err(DynamoError::InvalidParameter(format!(
                "pair scales must lie in (0, 2/alpha]: {:?}",
                self.delta_grid
            )));
        }
        Ok(())
    }

    fn strong(&self) -> TestNormalization {
        TestNormalization::Strong {
            sigma: self.sigma,
            q: self.q,
        }
    }
}

/// One sampled leaf with its raw test profiles and the key of its pair stream.
#[derive(Debug, Clone)]
pub struct SampleEntry {
    pub leaf: Leaf,
    pub profiles: Vec<TestFn>,
    pub key: u64,
}

/// A deterministic set of leaf samples.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub alpha: Alpha,
    pub entries: Vec<SampleEntry>,
}

impl SampleSet {
    /// Sample `k` depends only on `(seed, k)`, so larger sets contain smaller ones.
    pub fn new(seed: u64, params: &NormParams) -> Self {
        let entries = (0..params.n_leaves as u64)
            .map(|k| {
                let leaf = sample_leaf(stream_seed(seed, k, 0), params.alpha);
                let profiles = (0..params.n_testfns as u64)
                    .map(|j| sample_profile(stream_seed(seed, k, j + 1), leaf.len()))
                    .collect();
                SampleEntry {
                    leaf,
                    profiles,
                    key: stream_seed(seed, k, u64::MAX),
                }
            })
            .collect();
        SampleSet {
            alpha: params.alpha,
            entries,
        }
    }

    pub fn union(&self, other: &SampleSet) -> SampleSet {
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        SampleSet {
            alpha: self.alpha,
            entries,
        }
    }

    /// Each leaf shifted by `count` Gaussian offsets of variance `2ε` per coordinate,
    /// the translates in the expectation form of the heat semigroup.
    pub fn translated(&self, eps: f64, count: usize, seed: u64) -> SampleSet {
        let sd = (2.0 * eps).sqrt();
        let mut entries = Vec::with_capacity(self.entries.len() * count);
        for (k, e) in self.entries.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, k as u64, 7));
            for c in 0..count {
                let dx: f64 = StandardNormal.sample(&mut rng);
                let dy: f64 = StandardNormal.sample(&mut rng);
                let b = e.leaf.point(0.0);
                let leaf = Leaf::new(
                    [b[0] + sd * dx, b[1] + sd * dy],
                    e.leaf.dir(),
                    e.leaf.len(),
                    self.alpha,
                )
                .expect("translation preserves admissibility");
                entries.push(SampleEntry {
                    leaf,
                    profiles: e.profiles.clone(),
                    key: stream_seed(e.key, c as u64, 11),
                });
            }
        }
        SampleSet {
            alpha: self.alpha,
            entries,
        }
    }
}

/// A field that can be sampled along leaves.
pub trait LeafField: Sync {
    fn along(&self, w: &Leaf) -> LeafSamples;
}

impl LeafField for VectorField2 {
    fn along(&self, w: &Leaf) -> LeafSamples {
        LeafSamples::new(self, w)
    }
}

/// A field given pointwise, integrated with `nodes_per_unit` trapezoid intervals per unit arclength.
pub struct PointwiseField<F> {
    pub f: F,
    pub nodes_per_unit: usize,
}

impl<F: Fn(TorusPoint) -> [Complex64; 2] + Sync> LeafField for PointwiseField<F> {
    fn along(&self, w: &Leaf) -> LeafSamples {
        let m = ((self.nodes_per_unit as f64 * w.len()).ceil() as usize).max(64);
        LeafSamples::from_fn(&self.f, w, m)
    }
}

/// Where a sampled maximum was attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub leaf: Leaf,
    pub test_index: usize,
    pub partner: Option<Leaf>,
    pub delta: Option<f64>,
}

impl Witness {
    pub fn describe(&self) -> String {
        let l = &self.leaf;
        let mut s = format!(
            "base=({:.6},{:.6}) dir=({:.6},{:.6}) len={:.6} test={}",
            l.base().x,
            l.base().y,
            l.dir()[0],
            l.dir()[1],
            l.len(),
            self.test_index
        );
        if let Some(d) = self.delta {
            s.push_str(&format!(" delta={d:.6}"));
        }
        s
    }
}

/// A sampled lower bound of a supremum with its witness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub witness: Option<Witness>,
}

impl Estimate {
    fn zero() -> Self {
        Estimate {
            value: 0.0,
            witness: None,
        }
    }

    fn better(self, other: Estimate) -> Estimate {
        if other.value > self.value {
            other
        } else {
            self
        }
    }
}

fn modulus(v: [Complex64; 2]) -> f64 {
    v[0].norm().hypot(v[1].norm())
}

/// Deterministic max over per-entry results (ties keep the earlier entry).
fn max_over(results: Vec<Estimate>) -> Estimate {
    results.into_iter().fold(Estimate::zero(), Estimate::better)
}

fn sup_pairings<F: LeafField + ?Sized>(
    f: &F,
    set: &SampleSet,
    norm: impl Fn(&TestFn, f64) -> TestFn + Sync,
) -> Estimate {
    let per: Vec<Estimate> = set
        .entries
        .par_iter()
        .map(|e| {
            let s = f.along(&e.leaf);
            let mut best = Estimate::zero();
            for (j, p) in e.profiles.iter().enumerate() {
                let phi = norm(p, e.leaf.len());
                let v = modulus(s.integrate(&phi));
                best = best.better(Estimate {
                    value: v,
                    witness: Some(Witness {
                        leaf: e.leaf,
                        test_index: j,
                        partner: None,
                        delta: None,
                    }),
                });
            }
            best
        })
        .collect();
    max_over(per)
}

/// Weak norm on a given sample set: test functions with `‖φ‖_{C¹} = 1`.
pub fn weak_on<F: LeafField + ?Sized>(f: &F, set: &SampleSet) -> Estimate {
    sup_pairings(f, set, |p, len| p.normalized(TestNormalization::C1, len))
}

/// Strong-stable norm on a given sample set: `‖φ‖_{C^q} = |W|^{−σ}`.
pub fn strong_stable_on<F: LeafField + ?Sized>(
    f: &F,
    set: &SampleSet,
    params: &NormParams,
) -> Estimate {
    let norm = params.strong();
    sup_pairings(f, set, move |p, len| p.normalized(norm, len))
}

/// A nearby leaf with `d_Σ(w, partner) < δ`, or `None` if the draw leaves the admissible class.
fn partner_leaf(w: &Leaf, delta: f64, alpha: Alpha, rng: &mut ChaCha8Rng) -> Option<Leaf> {
    let raw: [f64; 3] = [
        rng.gen::<f64>() + 0.05,
        rng.gen::<f64>() + 0.05,
        rng.gen::<f64>() + 0.05,
    ];
    let sum: f64 = raw.iter().sum();
    let share = raw.map(|r| 0.95 * delta * r / sum);
    let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let b = w.point(0.0);
    let base = [b[0] + share[0] * ang.cos(), b[1] + share[0] * ang.sin()];
    let theta = w.dir()[0].atan2(w.dir()[1]);
    let dth = 2.0 * (share[1] / 2.0).min(1.0).asin() * if rng.gen::<bool>() { 1.0 } else { -1.0 };
    let lim = cone_half_angle(alpha);
    let th2 = (theta + dth).clamp(-lim, lim);
    let dir = [th2.sin(), th2.cos()];
    let vertical_unit = w.dir()[0] == 0.0 && w.len() == 1.0;
    let mut len = if rng.gen::<bool>() && !vertical_unit {
        w.len() + share[2]
    } else {
        w.len() - share[2]
    };
    if len > 1.0 {
        len = w.len() - share[2];
    }
    if len <= 0.0 {
        len = w.len() + share[2];
    }
    if dir[0] == 0.0 && len >= 1.0 {
        len = 1.0 - share[2];
    }
    let partner = Leaf::new(base, dir, len, alpha).ok()?;
    (d_sigma(w, &partner) < delta).then_some(partner)
}

/// Strong-unstable norm on a given sample set: `δ^{−β}|∫_{W¹} f φ₁ − ∫_{W²} f φ₂|`
/// over pairs with `d_Σ < δ`; even test indices share one profile, odd ones
/// perturb it by a constant of size below `δ`.
pub fn strong_unstable_on<F: LeafField + ?Sized>(
    f: &F,
    set: &SampleSet,
    params: &NormParams,
) -> Estimate {
    let per: Vec<Estimate> = set
        .entries
        .par_iter()
        .map(|e| {
            let s1 = f.along(&e.leaf);
            let mut best = Estimate::zero();
            for (d_idx, &delta) in params.delta_grid.iter().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(e.key, d_idx as u64, 3));
                let Some(partner) = partner_leaf(&e.leaf, delta, params.alpha, &mut rng) else {
                    continue;
                };
                let s2 = f.along(&partner);
                let scale = delta.powf(-params.beta);
                for (j, p) in e.profiles.iter().enumerate() {
                    let phi = p.normalized(TestNormalization::C1, e.leaf.len());
                    let (phi1, phi2) = if j % 2 == 0 {
                        (phi.clone(), phi.with_support(partner.len()))
                    } else {
                        let kappa = delta.min(0.5);
                        let rho = Complex64::from_polar(
                            0.99 * kappa,
                            rng.gen_range(0.0..std::f64::consts::TAU),
                        );
                        let p1 = phi.scaled(1.0 - kappa);
                        let p2 = p1.plus_constant(rho).with_support(partner.len());
                        (p1, p2)
                    };
                    let a = s1.integrate(&phi1);
                    let b = s2.integrate(&phi2);
                    let v = scale * modulus([a[0] - b[0], a[1] - b[1]]);
                    best = best.better(Estimate {
                        value: v,
                        witness: Some(Witness {
                            leaf: e.leaf,
                            test_index: j,
                            partner: Some(partner),
                            delta: Some(delta),
                        }),
                    });
                }
            }
            best
        })
        .collect();
    max_over(per)
}

/// Sampled weak norm.
pub fn weak_norm_est(f: &VectorField2, params: &NormParams, seed: u64) -> Estimate {
    weak_on(f, &SampleSet::new(seed, params))
}

/// Sampled strong-stable norm.
pub fn strong_stable_est(f: &VectorField2, params: &NormParams, seed: u64) -> Estimate {
    strong_stable_on(f, &SampleSet::new(seed, params), params)
}

/// Sampled strong-unstable norm.
pub fn strong_unstable_est(f: &VectorField2, params: &NormParams, seed: u64) -> Estimate {
    strong_unstable_on(f, &SampleSet::new(seed, params), params)
}

/// All three sampled norms on one sample set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub weak: Estimate,
    pub strong_stable: Estimate,
    pub strong_unstable: Estimate,
}

impl NormReport {
    /// Strong norm `‖·‖_s + ‖·‖_u`.
    pub fn strong(&self) -> f64 {
        self.strong_stable.value + self.strong_unstable.value
    }
}

pub fn norm_report_on<F: LeafField + ?Sized>(
    f: &F,
    set: &SampleSet,
    params: &NormParams,
) -> NormReport {
    NormReport {
        weak: weak_on(f, set),
        strong_stable: strong_stable_on(f, set, params),
        strong_unstable: strong_unstable_on(f, set, params),
    }
}

pub fn norm_report(f: &VectorField2, params: &NormParams, seed: u64) -> NormReport {
    norm_report_on(f, &SampleSet::new(seed, params), params)
}

/// One checked inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginRow {
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub witness: String,
}

impl MarginRow {
    fn new(check: &str, lhs: f64, rhs: f64, witness: Option<Witness>) -> Self {
        MarginRow {
            check: check.to_string(),
            lhs,
            rhs,
            margin: rhs - lhs,
            witness: witness.map(|w| w.describe()).unwrap_or_default(),
        }
    }
}

/// Margins of a set of sampled inequalities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MarginReport {
    pub rows: Vec<MarginRow>,
}

impl MarginReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.margin >= 0.0)
    }

    pub fn min_margin(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.margin)
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV with columns `check,lhs,rhs,margin,witness`.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(
            w,
            "# negative margin = violation on sampled data; positive margin = evidence only"
        )?;
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["check", "lhs", "rhs", "margin", "witness"])?;
        for r in &self.rows {
            wr.write_record([
                r.check.clone(),
                format!("{:.16e}", r.lhs),
                format!("{:.16e}", r.rhs),
                format!("{:.16e}", r.margin),
                r.witness.clone(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `e^{2πig}·α⁻²(DT h)∘T⁻¹`.
pub fn twisted_transfer(h: &VectorField2, ctx: &OperatorContext) -> Result<VectorField2> {
    let mut out = apply_l_alpha(h, ctx)?;
    for c in out.c.iter_mut() {
        *c = c.mul(ctx.phase())?;
    }
    Ok(out)
}

/// Seed offset of the independent left-hand-side sample set.
const LHS_STREAM: u64 = 0x5EED_0F_1A5;

/// Sampled check of the weak, strong-stable and strong-unstable contraction
/// inequalities for `e^{2πig}L_α` with calibration constant `c_cal`.
pub fn ly_check(
    h: &VectorField2,
    ctx: &OperatorContext,
    params: &NormParams,
    c_cal: f64,
    seed: u64,
) -> Result<MarginReport> {
    params.validate()?;
    if params.alpha != ctx.alpha() {
        return Err(DynamoError::InvalidParameter(
            "norm parameters and operator context disagree on alpha".into(),
        ));
    }
    let s = SampleSet::new(seed, params);
    let s2 = SampleSet::new(stream_seed(seed, LHS_STREAM, 0), params);
    let rhs_norms = norm_report_on(h, &s, params);
    let lh = twisted_transfer(h, ctx)?;
    let l1 = norm_report_on(&lh, &s, params);
    let l2 = norm_report_on(&lh, &s2, params);
    let weak = l1.weak.better(l2.weak);
    let stable = l1.strong_stable.better(l2.strong_stable);
    let unstable = l1.strong_unstable.better(l2.strong_unstable);

    let a = params.alpha.as_f64();
    let (sg, b, q) = (params.sigma, params.beta, params.q);
    let hw = rhs_norms.weak.value;
    let hs = rhs_norms.strong_stable.value;
    let hu = rhs_norms.strong_unstable.value;
    let rhs_weak = c_cal * hw;
    let rhs_stable = c_cal * (a.powf(-2.0 * q) + a.powf(2.0 * sg - 2.0)) * hs + c_cal * hw;
    let rhs_unstable = c_cal
        * ((a.powf(-2.0 + sg + b) + a.powf(-1.0 + b) + a.powf(-2.0 * q + b - sg)) * hs
            + a.powf(-2.0 * b) * hu
            + a.powf(b - sg) * hw);
    Ok(MarginReport {
        rows: vec![
            MarginRow::new("weak", weak.value, rhs_weak, weak.witness),
            MarginRow::new("strong_stable", stable.value, rhs_stable, stable.witness),
            MarginRow::new(
                "strong_unstable",
                unstable.value,
                rhs_unstable,
                unstable.witness,
            ),
        ],
    })
}

/// Number of Gaussian translates per leaf in the heat check.
pub const HEAT_TRANSLATES: usize = 16;
/// Relative slack for the Monte-Carlo expectation in the heat check (i).
pub const HEAT_MC_SLACK: f64 = 0.02;

/// Sampled heat-continuity checks:
/// (i) `|e^{εΔ}f|_w ≤ |f|_w` on `S ∪ translate(S)` (plus Monte-Carlo slack), and
/// (ii) `|e^{εΔ}f − f|_w ≤ 2ε^{β/4}‖f‖`.
pub fn heat_weak_check(
    f: &VectorField2,
    eps: f64,
    params: &NormParams,
    seed: u64,
) -> Result<MarginReport> {
    params.validate()?;
    if !(eps > 0.0) {
        return Err(DynamoError::ZeroDiffusivity);
    }
    let s = SampleSet::new(seed, params);
    let heated = apply_heat(f, eps)?;
    let lhs1 = weak_on(&heated, &s);
    let both = s.union(&s.translated(eps, HEAT_TRANSLATES, seed));
    let raw = weak_on(f, &both).value;
    let rhs1 = raw * (1.0 + HEAT_MC_SLACK);

    let diff = heated.sub(f)?;
    let lhs2 = weak_on(&diff, &s);
    let strong = strong_stable_on(f, &s, params).value + strong_unstable_on(f, &s, params).value;
    let rhs2 = 2.0 * eps.powf(params.beta / 4.0) * strong;
    Ok(MarginReport {
        rows: vec![
            MarginRow::new("heat_weak_contraction", lhs1.value, rhs1, lhs1.witness),
            MarginRow::new("heat_weak_continuity", lhs2.value, rhs2, lhs2.witness),
        ],
    })
}

/// The field `w·1_{y≥½}` on an `n × n` grid.
pub fn indicator_field(n: usize, w: [Complex64; 2]) -> Result<VectorField2> {
    VectorField2::from_fn(n, |_, y| {
        if y >= 0.5 {
            w
        } else {
            [Complex64::new(0.0, 0.0); 2]
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::random_field;

    fn params(alpha: u32, leaves: usize, tests: usize) -> NormParams {
        NormParams::defaults(Alpha::new(alpha).unwrap()).with_samples(leaves, tests)
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn parameter_validation() {
        let mut p = params(8, 4, 2);
        assert!(p.validate().is_ok());
        p.beta = 0.5;
        assert!(p.validate().is_err());
        let mut p = params(8, 4, 2);
        p.delta_grid = vec![0.5];
        assert!(p.validate().is_err());
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let p = params(8, 32, 4);
        let z = VectorField2::zeros(32).unwrap();
        let r = norm_report(&z, &p, 1);
        assert_eq!(
            (r.weak.value, r.strong_stable.value, r.strong_unstable.value),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn constant_field_weak_norm_approaches_one() {
        let p = params(8, 256, 8);
        let one = VectorField2::from_fn(32, |_, _| [c(1.0), c(0.0)]).unwrap();
        let w = weak_norm_est(&one, &p, 3);
        assert!(w.value <= 1.0 + 1e-12 && w.value > 0.99, "{}", w.value);
        let s = strong_stable_est(&one, &p, 3);
        assert!(s.value <= 1.0 + 1e-12 && s.value > 0.99);
        // identical shared pairs of a constant field differ only by length change
        let u = strong_unstable_est(&one, &p, 3);
        assert!(u.value.is_finite());
    }

    #[test]
    fn estimators_are_monotone_in_sample_count() {
        let f = random_field(2, 1.5, 6, 64).unwrap();
        let small = params(8, 32, 4);
        let big = params(8, 96, 4);
        let a = norm_report(&f, &small, 9);
        let b = norm_report(&f, &big, 9);
        assert!(b.weak.value >= a.weak.value);
        assert!(b.strong_stable.value >= a.strong_stable.value);
        assert!(b.strong_unstable.value >= a.strong_unstable.value);
    }

    #[test]
    fn cross_norm_ordering_and_determinism() {
        let f = random_field(4, 1.0, 8, 64).unwrap();
        let p = params(16, 64, 8);
        let a = norm_report(&f, &p, 5);
        let b = norm_report(&f, &p, 5);
        assert_eq!(a, b);
        assert!(a.weak.value <= 3.0 * a.strong_stable.value);
    }

    #[test]
    fn indicator_weak_norm_bounds() {
        let f = indicator_field(128, [c(1.0), c(0.0)]).unwrap();
        let p = params(8, 256, 8);
        let w = weak_norm_est(&f, &p, 1).value;
        assert!(w <= 1.0 + 1e-12 && w >= 0.45);
    }

    #[test]
    fn ly_zero_field() {
        let a = Alpha::new(8).unwrap();
        let ctx = OperatorContext::new(a, 32, &crate::shear::build_shear(0.05, 16).unwrap(), 0.0)
            .unwrap();
        let r = ly_check(
            &VectorField2::zeros(32).unwrap(),
            &ctx,
            &params(8, 8, 2),
            100.0,
            1,
        )
        .unwrap();
        assert!(r.rows.iter().all(|row| row.lhs == 0.0 && row.rhs == 0.0));
        assert!(r.passed());
    }

    #[test]
    fn heat_check_constant_field() {
        let one = VectorField2::from_fn(32, |_, _| [c(0.5), c(0.25)]).unwrap();
        let r = heat_weak_check(&one, 1e-3, &params(8, 32, 4), 2).unwrap();
        assert!(r.passed());
        assert!(r.rows[1].lhs < 1e-12);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .contains("heat_weak_continuity"));
    }
}
