//! Admissible stable leaves, test functions along them, strip subdivision,
//! preimages under the map and leaf quadrature of grid fields.
//!
//! A leaf is the segment `{base + t·dir : 0 ≤ t ≤ len}` on the torus with
//! `dir` a unit vector in the stable cone `|dir₁| ≤ (2/α)·dir₂`, `dir₂ > 0`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{DynamoError, Result};
use crate::fields::{ScalarField, VectorField2};
use crate::map::{backward_region, Alpha, BranchMatrix, RegionId, TorusPoint};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const CONE_SLACK: f64 = 1e-12;

/// Admissible stable leaf with canonical parameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leaf {
    base: TorusPoint,
    dir: [f64; 2],
    len: f64,
}

impl Leaf {
    /// Build a leaf, orienting `dir` upward and enforcing the cone and length bounds.
    pub fn new(base: [f64; 2], dir: [f64; 2], len: f64, alpha: Alpha) -> Result<Leaf> {
        let norm = dir[0].hypot(dir[1]);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(DynamoError::InvalidLeaf(
                "zero or non-finite direction".into(),
            ));
        }
        if !(len > 0.0 && len <= 1.0 + 1e-12) {
            return Err(DynamoError::InvalidLeaf(format!(
                "length {len} outside (0, 1]"
            )));
        }
        let len = len.min(1.0);
        let mut u = [dir[0] / norm, dir[1] / norm];
        let mut b = base;
        if u[1] < 0.0 {
            b = [b[0] + len * u[0], b[1] + len * u[1]];
            u = [-u[0], -u[1]];
        }
        if u[0].abs() > 2.0 / alpha.as_f64() * u[1] * (1.0 + CONE_SLACK) {
            return Err(DynamoError::NotInStableCone(u[0], u[1]));
        }
        if u[0] == 0.0 && len == 1.0 {
            b[1] = 0.0;
        }
        Ok(Leaf {
            base: TorusPoint::new(b[0], b[1]),
            dir: u,
            len,
        })
    }

    /// Leaf through two lifted endpoints.
    pub fn from_endpoints(a: [f64; 2], b: [f64; 2], alpha: Alpha) -> Result<Leaf> {
        let d = [b[0] - a[0], b[1] - a[1]];
        Leaf::new(a, d, d[0].hypot(d[1]), alpha)
    }

    pub fn base(&self) -> TorusPoint {
        self.base
    }

    pub fn dir(&self) -> [f64; 2] {
        self.dir
    }

    pub fn len(&self) -> f64 {
        self.len
    }

    /// Lifted point at parameter `t` (not reduced mod 1).
    pub fn point(&self, t: f64) -> [f64; 2] {
        [self.base.x + t * self.dir[0], self.base.y + t * self.dir[1]]
    }

    pub fn torus_point(&self, t: f64) -> TorusPoint {
        let p = self.point(t);
        TorusPoint::new(p[0], p[1])
    }

    /// Lifted endpoints `(start, end)`.
    pub fn endpoints(&self) -> ([f64; 2], [f64; 2]) {
        (self.point(0.0), self.point(self.len))
    }
}

/// `d(base₁, base₂) + |dir₁ − dir₂| + |S₁ − S₂|` with the toroidal base distance.
pub fn d_sigma(w1: &Leaf, w2: &Leaf) -> f64 {
    w1.base.distance(&w2.base)
        + (w1.dir[0] - w2.dir[0]).hypot(w1.dir[1] - w2.dir[1])
        + (w1.len - w2.len).abs()
}

/// Test function `φ(t) = Σ c_j e^{2πi ω_j t}` on a leaf parameter interval `[0, support]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFn {
    /// `(ω_j, c_j)` with `ω_j ≥ 0` in cycles per unit arclength.
    terms: Vec<(f64, Complex64)>,
    support: f64,
}

/// Normalization class for sampled test functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestNormalization {
    /// `‖φ‖_{C¹} = 1`.
    C1,
    /// `‖φ‖_{C^q} = |W|^{−σ}`.
    Strong { sigma: f64, q: f64 },
}

impl TestFn {
    pub fn new(terms: Vec<(f64, Complex64)>, support: f64) -> Self {
        TestFn { terms, support }
    }

    /// The constant `c`.
    pub fn constant(c: f64, support: f64) -> Self {
        TestFn::new(vec![(0.0, Complex64::new(c, 0.0))], support)
    }

    pub fn terms(&self) -> &[(f64, Complex64)] {
        &self.terms
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn with_support(&self, support: f64) -> Self {
        TestFn::new(self.terms.clone(), support)
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|&(w, c)| c * Complex64::from_polar(1.0, TWO_PI * w * t))
            .sum()
    }

    /// `Σ|c_j|`, a bound on the sup norm.
    pub fn sup_bound(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).sum()
    }

    /// `Σ 2π ω_j |c_j|`, a bound on the Lipschitz seminorm.
    pub fn lipschitz_bound(&self) -> f64 {
        self.terms.iter().map(|(w, c)| TWO_PI * w * c.norm()).sum()
    }

    /// Computed C¹ norm: sup bound plus Lipschitz bound.
    pub fn c1_norm(&self) -> f64 {
        self.sup_bound() + self.lipschitz_bound()
    }

    /// Bound on the Hölder-q seminorm over the support, from
    /// `|e^{iθa} − e^{iθb}| ≤ min(2, θ|a − b|)` term by term.
    pub fn holder_bound(&self, q: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(w, c)| {
                if w == 0.0 {
                    return 0.0;
                }
                let knee = 1.0 / (std::f64::consts::PI * w);
                let d = self.support.min(knee);
                c.norm() * (TWO_PI * w * d).min(2.0) / d.powf(q)
            })
            .sum()
    }

    /// Computed C^q norm.
    pub fn cq_norm(&self, q: f64) -> f64 {
        self.sup_bound() + self.holder_bound(q)
    }

    pub fn scaled(&self, a: f64) -> Self {
        TestFn::new(
            self.terms.iter().map(|&(w, c)| (w, c * a)).collect(),
            self.support,
        )
    }

    /// Add a constant to the profile.
    pub fn plus_constant(&self, c: Complex64) -> Self {
        let mut terms = self.terms.clone();
        match terms.iter_mut().find(|(w, _)| *w == 0.0) {
            Some(t) => t.1 += c,
            None => terms.push((0.0, c)),
        }
        TestFn::new(terms, self.support)
    }

    /// Rescale to the target class on a leaf of length `len`.
    pub fn normalized(&self, norm: TestNormalization, len: f64) -> Self {
        let (current, target) = match norm {
            TestNormalization::C1 => (self.c1_norm(), 1.0),
            TestNormalization::Strong { sigma, q } => (self.cq_norm(q), len.powf(-sigma)),
        };
        if current == 0.0 {
            return self.clone();
        }
        self.scaled(target / current)
    }
}

/// Deterministic stream seed for `(seed, a, b)`.
pub(crate) fn stream_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z =
        seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Half-width of the stable cone as an angle from the vertical.
pub fn cone_half_angle(alpha: Alpha) -> f64 {
    (2.0 / alpha.as_f64()).atan()
}

/// Seeded leaf: uniform base, direction uniform in the cone, mixed length law
/// (unit, dyadic `2⁻ᵏ`, near `2/α`, uniform).
pub fn sample_leaf(seed: u64, alpha: Alpha) -> Leaf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = alpha.as_f64();
    let r: f64 = rng.gen();
    let kmax = (2.0 * a.log2()).ceil() as i32 + 1;
    let len = if r < 0.15 {
        1.0
    } else if r < 0.45 {
        0.5f64.powi(rng.gen_range(1..=kmax))
    } else if r < 0.75 {
        ((2.0 / a) * rng.gen_range(0.5..1.5)).min(1.0)
    } else {
        1.0 - rng.gen::<f64>()
    };
    let theta = if rng.gen::<f64>() < 0.1 {
        0.0
    } else {
        rng.gen_range(-1.0..=1.0) * cone_half_angle(alpha)
    };
    let base = [rng.gen::<f64>(), rng.gen::<f64>()];
    Leaf::new(base, [theta.sin(), theta.cos()], len, alpha).expect("sampled leaf is admissible")
}

/// Unnormalized random trigonometric profile for a leaf of length `len`.
pub fn sample_profile(seed: u64, len: f64) -> TestFn {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if rng.gen::<f64>() < 0.25 {
        return TestFn::constant(1.0, len);
    }
    let n_terms = rng.gen_range(1..=3);
    let terms = (0..n_terms)
        .map(|_| {
            let m = rng.gen_range(0..=3) as f64;
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            (m / len, Complex64::new(re, im))
        })
        .collect();
    TestFn::new(terms, len)
}

/// Seeded test function on `w`, rescaled to the requested class.
pub fn sample_testfn(seed: u64, w: &Leaf, norm: TestNormalization) -> TestFn {
    sample_profile(seed, w.len).normalized(norm, w.len)
}

/// One piece of a strip subdivision: the parameter interval `[t0, t1)` of the parent leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripPiece {
    pub t0: f64,
    pub t1: f64,
    pub region: RegionId,
    pub leaf: Leaf,
}

fn half_crossings(u0: f64, du: f64, len: f64, out: &mut Vec<f64>) {
    if du == 0.0 {
        return;
    }
    let (lo, hi) = if du > 0.0 {
        (u0, u0 + du * len)
    } else {
        (u0 + du * len, u0)
    };
    let mut m = (2.0 * lo).floor() as i64;
    while (m as f64) * 0.5 <= hi {
        let t = (m as f64 * 0.5 - u0) / du;
        if t > 0.0 && t < len {
            out.push(t);
        }
        m += 1;
    }
}

/// Split `w` where it crosses the boundaries of the backward regions.
pub fn subdivide_by_strips_detailed(w: &Leaf, alpha: Alpha) -> Vec<StripPiece> {
    let a = alpha.as_f64();
    let (b, d) = (w.point(0.0), w.dir);
    let mut cuts = Vec::new();
    half_crossings(b[1], d[1], w.len, &mut cuts);
    half_crossings(b[0] - a * b[1], d[0] - a * d[1], w.len, &mut cuts);
    half_crossings(b[0] + a * b[1], d[0] + a * d[1], w.len, &mut cuts);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(0.0);
    bounds.extend(cuts);
    bounds.push(w.len);
    let mut pieces: Vec<(f64, f64, RegionId)> = Vec::new();
    for win in bounds.windows(2) {
        let (t0, t1) = (win[0], win[1]);
        if t1 - t0 <= 0.0 {
            continue;
        }
        let region = backward_region(w.torus_point(0.5 * (t0 + t1)), alpha);
        match pieces.last_mut() {
            Some(last) if last.2 == region => last.1 = t1,
            _ => pieces.push((t0, t1, region)),
        }
    }
    pieces
        .into_iter()
        .map(|(t0, t1, region)| StripPiece {
            t0,
            t1,
            region,
            leaf: Leaf {
                base: w.torus_point(t0),
                dir: w.dir,
                len: t1 - t0,
            },
        })
        .collect()
}

/// Upper bound `2 + 2Y + ⌊2(α + 2/α)|W|⌋` on the number of strip pieces of `w`,
/// where `Y = ⌊2|W|⌋ + 1` bounds the crossings of `y ∈ {0, ½}`.
pub fn strip_piece_bound(w: &Leaf, alpha: Alpha) -> usize {
    let a = alpha.as_f64();
    let y_cuts = (2.0 * w.len).floor() as usize + 1;
    2 + 2 * y_cuts + (2.0 * (a + 2.0 / a) * w.len).floor() as usize
}

/// Pieces of `w` each inside the closure of one backward region.
pub fn subdivide_by_strips(w: &Leaf, alpha: Alpha) -> Vec<(Leaf, RegionId)> {
    subdivide_by_strips_detailed(w, alpha)
        .into_iter()
        .map(|p| (p.leaf, p.region))
        .collect()
}

/// A preimage leaf together with the affine map back to the parent parameter:
/// `T(leaf(s)) = parent(start + rate·s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreimagePiece {
    pub leaf: Leaf,
    pub region: RegionId,
    pub start: f64,
    pub rate: f64,
}

/// Preimage of `w` split into admissible leaves, with parameter maps.
pub fn preimage_decompose_detailed(w: &Leaf, alpha: Alpha) -> Result<Vec<PreimagePiece>> {
    let mut out = Vec::new();
    for piece in subdivide_by_strips_detailed(w, alpha) {
        let m = BranchMatrix::for_branch(piece.region.index, alpha);
        let v = m.apply_inverse(w.dir);
        let speed = v[0].hypot(v[1]);
        let jac = 1.0 / speed;
        let q0 = m.apply_inverse(w.point(piece.t0));
        let q1 = m.apply_inverse(w.point(piece.t1));
        let total = (piece.t1 - piece.t0) * speed;
        // Orient upward; the parent parameter then runs forward or backward.
        let (origin, u, t_origin, rate) = if v[1] >= 0.0 {
            (q0, [v[0] / speed, v[1] / speed], piece.t0, jac)
        } else {
            (q1, [-v[0] / speed, -v[1] / speed], piece.t1, -jac)
        };
        let chunks = (total.ceil() as usize).max(1);
        for c in 0..chunks {
            let s0 = c as f64;
            let len = (total - s0).min(1.0);
            if len <= 0.0 {
                break;
            }
            let base = [origin[0] + s0 * u[0], origin[1] + s0 * u[1]];
            let leaf = Leaf::new(base, u, len, alpha)?;
            out.push(PreimagePiece {
                leaf,
                region: piece.region,
                start: t_origin + rate * s0,
                rate,
            });
        }
    }
    Ok(out)
}

/// Preimage of `w` under the map as a list of admissible leaves.
pub fn preimage_decompose(w: &Leaf, alpha: Alpha) -> Result<Vec<Leaf>> {
    Ok(preimage_decompose_detailed(w, alpha)?
        .into_iter()
        .map(|p| p.leaf)
        .collect())
}

/// Trapezoid nodes and weights along a leaf for a grid of size `n`.
pub fn quadrature_nodes(w: &Leaf, n: usize) -> (Vec<f64>, Vec<f64>) {
    let step = (1.0 / (8.0 * n as f64)).min(w.len / 64.0);
    let m = (w.len / step).ceil().max(1.0) as usize;
    let h = w.len / m as f64;
    let ts: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    let mut ws = vec![h; m + 1];
    ws[0] = 0.5 * h;
    ws[m] = 0.5 * h;
    (ts, ws)
}

/// Field samples along a leaf, reusable across test functions.
#[derive(Debug, Clone)]
pub struct LeafSamples {
    ts: Vec<f64>,
    ws: Vec<f64>,
    values: Vec<[Complex64; 2]>,
}

impl LeafSamples {
    pub fn new(f: &VectorField2, w: &Leaf) -> Self {
        let (ts, ws) = quadrature_nodes(w, f.n());
        let values = ts
            .iter()
            .map(|&t| {
                let p = w.point(t);
                f.bilinear(p[0], p[1])
            })
            .collect();
        LeafSamples { ts, ws, values }
    }

    /// Samples of a pointwise field at `m + 1` equispaced trapezoid nodes.
    pub fn from_fn(f: impl Fn(TorusPoint) -> [Complex64; 2], w: &Leaf, m: usize) -> Self {
        let m = m.max(1);
        let h = w.len / m as f64;
        let ts: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
        let ws = (0..=m)
            .map(|i| if i == 0 || i == m { 0.5 * h } else { h })
            .collect();
        let values = ts.iter().map(|&t| f(w.torus_point(t))).collect();
        LeafSamples { ts, ws, values }
    }

    /// `∫_W f φ` by the stored trapezoid rule.
    pub fn integrate(&self, phi: &TestFn) -> [Complex64; 2] {
        let mut acc = [Complex64::new(0.0, 0.0); 2];
        for ((&t, &w), v) in self.ts.iter().zip(&self.ws).zip(&self.values) {
            let p = phi.eval(t) * w;
            acc[0] += v[0] * p;
            acc[1] += v[1] * p;
        }
        acc
    }
}

/// `∫_W f φ` for a planar field (trapezoid rule, bilinear field values).
pub fn leaf_integrate(f: &VectorField2, w: &Leaf, phi: &TestFn) -> [Complex64; 2] {
    LeafSamples::new(f, w).integrate(phi)
}

/// `∫_W f φ` for a scalar field.
pub fn leaf_integrate_scalar(f: &ScalarField, w: &Leaf, phi: &TestFn) -> Complex64 {
    let (ts, ws) = quadrature_nodes(w, f.n());
    ts.iter()
        .zip(&ws)
        .map(|(&t, &wt)| {
            let p = w.point(t);
            f.bilinear(p[0], p[1]) * phi.eval(t) * wt
        })
        .sum()
}

/// `∫_W f(γ(t)) φ(t) dt` for a function given pointwise, with `m` trapezoid intervals.
pub fn leaf_integrate_fn(
    f: impl Fn(TorusPoint) -> Complex64,
    w: &Leaf,
    phi: impl Fn(f64) -> Complex64,
    m: usize,
) -> Complex64 {
    let h = w.len / m as f64;
    (0..=m)
        .map(|i| {
            let t = i as f64 * h;
            let wt = if i == 0 || i == m { 0.5 * h } else { h };
            f(w.torus_point(t)) * phi(t) * wt
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{apply_map, in_stable_cone, leaf_jacobian};

    fn al(a: u32) -> Alpha {
        Alpha::new(a).unwrap()
    }

    #[test]
    fn d_sigma_examples() {
        let a = al(8);
        let w = Leaf::new([0.0, 0.0], [0.0, 1.0], 0.5, a).unwrap();
        assert_eq!(d_sigma(&w, &w), 0.0);
        let w2 = Leaf::new([0.5, 0.0], [0.0, 1.0], 0.5, a).unwrap();
        assert!((d_sigma(&w, &w2) - 0.5).abs() < 1e-15);
        let w3 = Leaf::new([0.9, 0.0], [0.0, 1.0], 0.5, a).unwrap();
        assert!((d_sigma(&w, &w3) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn canonical_forms() {
        let a = al(8);
        let v = Leaf::new([0.3, 0.7], [0.0, 1.0], 1.0, a).unwrap();
        assert_eq!(v.base().y, 0.0);
        let down = Leaf::new([0.3, 0.7], [0.1, -1.0], 0.4, a).unwrap();
        assert!(down.dir()[1] > 0.0);
        assert!(Leaf::new([0.0, 0.0], [1.0, 1.0], 0.5, a).is_err());
        assert!(Leaf::new([0.0, 0.0], [0.0, 1.0], 1.5, a).is_err());
        for seed in 0..200 {
            let w = sample_leaf(seed, a);
            if w.dir()[0] == 0.0 && w.len() == 1.0 {
                continue;
            }
            let (p, q) = w.endpoints();
            let r = Leaf::from_endpoints(p, q, a).unwrap();
            assert!(r.base().distance(&w.base()) < 1e-12);
            assert!((r.dir()[0] - w.dir()[0]).abs() < 1e-12);
            assert!((r.len() - w.len()).abs() < 1e-12);
        }
    }

    #[test]
    fn subdivision_example() {
        let a = al(2);
        let w = Leaf::new([0.1, 0.0], [0.0, 1.0], 1.0, a).unwrap();
        let p = subdivide_by_strips_detailed(&w, a);
        let regions: Vec<u8> = p.iter().map(|x| x.region.index).collect();
        assert_eq!(regions, vec![4, 3, 4, 2, 1, 2]);
        let cuts: Vec<f64> = p.iter().skip(1).map(|x| x.t0).collect();
        for (c, e) in cuts.iter().zip([0.2, 0.45, 0.5, 0.55, 0.8]) {
            assert!((c - e).abs() < 1e-12);
        }
        let small = Leaf::new([0.6, 0.6], [0.0, 1.0], 1e-3, al(8)).unwrap();
        assert_eq!(subdivide_by_strips(&small, al(8)).len(), 1);
    }

    #[test]
    fn tilted_unit_leaf_exceeds_untilted_count() {
        let a = al(8);
        let w = Leaf::new(
            [0.4538848915911493, 0.8499564286718503],
            [0.12495366270807658, 0.9921625785000341],
            1.0,
            a,
        )
        .unwrap();
        let count = subdivide_by_strips(&w, a).len();
        assert!(count > 4 + 2 * (8.0 * w.len()).ceil() as usize);
        assert!(count <= strip_piece_bound(&w, a));
    }

    #[test]
    fn pieces_are_homogeneous_and_counted() {
        for alpha in [8, 16, 32] {
            let a = al(alpha);
            for seed in 0..10000 {
                let w = sample_leaf(seed, a);
                let p = subdivide_by_strips_detailed(&w, a);
                assert!(p.len() <= strip_piece_bound(&w, a), "{w:?} {}", p.len());
                assert_eq!(p[0].t0, 0.0);
                assert_eq!(p.last().unwrap().t1, w.len());
                for pair in p.windows(2) {
                    assert_eq!(pair[0].t1, pair[1].t0);
                }
                if seed % 50 == 0 {
                    for piece in &p {
                        for k in 1..=32 {
                            let t = piece.t0 + (piece.t1 - piece.t0) * k as f64 / 33.0;
                            assert_eq!(backward_region(w.torus_point(t), a), piece.region);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn preimage_expansion_and_cones() {
        for alpha in [4, 8, 16, 32] {
            let a = al(alpha);
            let a2 = a.squared();
            for seed in 0..1000 {
                let w = sample_leaf(seed, a);
                let pre = preimage_decompose(&w, a).unwrap();
                let total: f64 = pre.iter().map(|l| l.len()).sum();
                assert!(total >= a2 * w.len() / 2.0 && total <= 2.0 * a2 * w.len());
                for l in &pre {
                    let d = l.dir();
                    assert!(
                        in_stable_cone(d, a).unwrap()
                            || d[0].abs() <= 2.0 / a.as_f64() * d[1] * (1.0 + 1e-12)
                    );
                }
            }
        }
    }

    #[test]
    fn preimage_single_strip() {
        let a = al(4);
        let w = Leaf::new([0.6, 0.55], [0.0, 1.0], 1.0 / 16.0, a).unwrap();
        let pieces = preimage_decompose_detailed(&w, a).unwrap();
        assert_eq!(pieces.len(), 1);
        let j = leaf_jacobian(w.dir(), pieces[0].region, a).unwrap();
        assert!((pieces[0].leaf.len() - w.len() / j).abs() < 1e-12);
        let l = pieces[0].leaf.len();
        assert!(l >= 0.5 * 16.0 * w.len() && l <= 2.0 * 16.0 * w.len());
    }

    #[test]
    fn change_of_variables() {
        let f = |p: TorusPoint| {
            Complex64::from_polar(1.0, TWO_PI * (2.0 * p.x - p.y)) + (TWO_PI * p.y).cos()
        };
        let phi = TestFn::new(
            vec![
                (0.0, Complex64::new(0.4, 0.1)),
                (1.5, Complex64::new(-0.3, 0.2)),
            ],
            1.0,
        );
        for (alpha, seed) in [(4, 1), (8, 2), (8, 3), (16, 4)] {
            let a = al(alpha);
            let w = sample_leaf(seed, a);
            let lhs = leaf_integrate_fn(f, &w, |t| phi.eval(t), 20000);
            let mut rhs = Complex64::new(0.0, 0.0);
            for piece in preimage_decompose_detailed(&w, a).unwrap() {
                let jac = piece.rate.abs();
                rhs += leaf_integrate_fn(
                    |p| f(apply_map(p, a)),
                    &piece.leaf,
                    |s| phi.eval(piece.start + piece.rate * s) * jac,
                    4000,
                );
            }
            assert!((lhs - rhs).norm() < 1e-4, "alpha {alpha}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn test_function_pullback_contracts() {
        for seed in 0..100u64 {
            let a = al([4, 8, 16][seed as usize % 3]);
            let w = sample_leaf(seed, a);
            let phi = sample_testfn(seed + 1000, &w, TestNormalization::C1);
            let lip = |g: &dyn Fn(f64) -> Complex64, len: f64, m: usize| {
                (0..m)
                    .map(|i| {
                        let (t0, t1) = (len * i as f64 / m as f64, len * (i + 1) as f64 / m as f64);
                        (g(t1) - g(t0)).norm() / (t1 - t0)
                    })
                    .fold(0.0, f64::max)
            };
            let base = lip(&|t| phi.eval(t), w.len(), 8192);
            for piece in preimage_decompose_detailed(&w, a).unwrap() {
                let pulled = lip(
                    &|s| phi.eval(piece.start + piece.rate * s),
                    piece.leaf.len(),
                    256,
                );
                assert!(pulled <= 2.0 / a.squared() * base * (1.0 + 1e-6) + 1e-15);
            }
        }
    }

    #[test]
    fn quadrature_examples() {
        let a = al(8);
        let n = 64;
        let one = VectorField2::from_fn(n, |_, _| {
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
        })
        .unwrap();
        let w = Leaf::new([0.3, 0.1], [0.0, 1.0], 0.5, a).unwrap();
        let r = leaf_integrate(&one, &w, &TestFn::constant(1.0, 0.5));
        assert!((r[0] - Complex64::new(0.5, 0.0)).norm() < 1e-12 && r[1].norm() < 1e-15);

        let n = 256;
        let ind = VectorField2::from_fn(n, |_, y| {
            [
                Complex64::new(if y >= 0.5 { 1.0 } else { 0.0 }, 0.0),
                Complex64::new(0.0, 0.0),
            ]
        })
        .unwrap();
        let w = Leaf::new([0.3, 0.2], [0.0, 1.0], 0.6, a).unwrap();
        let r = leaf_integrate(&ind, &w, &TestFn::constant(1.0, 0.6));
        assert!((r[0].re - 0.3).abs() < 2.0 / n as f64);

        let f = crate::fields::random_field(3, 1.0, 6, 64).unwrap();
        let w = sample_leaf(5, a);
        let p1 = sample_testfn(1, &w, TestNormalization::C1);
        let p2 = sample_testfn(2, &w, TestNormalization::C1);
        let s = LeafSamples::new(&f, &w);
        let mut sum = p1.clone();
        sum.terms
            .extend(p2.terms.iter().map(|&(w, c)| (w, c * 2.0)));
        let lhs = s.integrate(&sum);
        let (i1, i2) = (s.integrate(&p1), s.integrate(&p2));
        for k in 0..2 {
            assert!((lhs[k] - (i1[k] + i2[k] * 2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_admissible() {
        let a = al(8);
        assert_eq!(sample_leaf(42, a), sample_leaf(42, a));
        for seed in 0..10_000 {
            let w = sample_leaf(seed, a);
            assert!(w.dir()[0].abs() <= 2.0 / 8.0 * w.dir()[1] * (1.0 + 1e-12));
            assert!(w.len() > 0.0 && w.len() <= 1.0);
        }
        let w = sample_leaf(3, a);
        let t = sample_testfn(9, &w, TestNormalization::C1);
        assert_eq!(t, sample_testfn(9, &w, TestNormalization::C1));
        for seed in 0..200 {
            let t = sample_testfn(seed, &w, TestNormalization::C1);
            assert!((t.c1_norm() - 1.0).abs() < 1e-12);
            let s = sample_testfn(seed, &w, TestNormalization::Strong { sigma: 0.4, q: 0.5 });
            assert!((s.cq_norm(0.5) - w.len().powf(-0.4)).abs() < 1e-12 * w.len().powf(-0.4));
        }
    }

    #[test]
    fn norm_bounds_dominate_samples() {
        let w = sample_leaf(7, al(8));
        for seed in 0..50 {
            let t = sample_profile(seed, w.len());
            let m = 400;
            let vals: Vec<Complex64> = (0..=m)
                .map(|i| t.eval(w.len() * i as f64 / m as f64))
                .collect();
            let sup = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(sup <= t.sup_bound() + 1e-12);
            for i in (0..m).step_by(37) {
                for j in (i + 1..=m).step_by(41) {
                    let d = w.len() * (j - i) as f64 / m as f64;
                    let hq = (vals[j] - vals[i]).norm() / d.powf(0.5);
                    assert!(hq <= t.holder_bound(0.5) + 1e-9);
                }
            }
        }
    }
}
