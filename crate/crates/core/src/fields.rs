//! Complex grid fields on the torus and their spectral calculus.
//!
//! A field of size `n` stores samples at `(i/n, j/n)` in row-major order
//! (index `i*n + j`, `i` along `x`). It denotes its trigonometric interpolant,
//! so derivatives, norms and the heat multiplier are exact for that
//! interpolant. Fourier coefficients use the convention
//! `f̂(k) = (1/n²) Σ f(p) e^{-2πik·p}`.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{DynamoError, Result};
use crate::map::check_grid;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Signed frequency of FFT bin `m` on a grid of size `n`; the Nyquist bin maps to `-n/2`.
pub fn freq(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Two-dimensional FFT built from cached one-dimensional plans.
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n);
        data.par_chunks_mut(n).for_each(|row| plan.process(row));
        let mut t = transpose(data, n);
        t.par_chunks_mut(n).for_each(|row| plan.process(row));
        let back = transpose(&t, n);
        data.copy_from_slice(&back);
    }

    /// Grid samples to Fourier coefficients (normalized by `1/n²`).
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.fwd);
        let s = 1.0 / (self.n * self.n) as f64;
        data.par_iter_mut().for_each(|v| *v *= s);
    }

    /// Fourier coefficients to grid samples.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inv);
    }
}

fn transpose(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = data[i * n + j];
        }
    });
    out
}

/// Shared FFT plan for grid size `n`.
pub fn fft_plan(n: usize) -> Arc<Fft2> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft2>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(Fft2::new(n)))
        .clone()
}

/// Basic Hilbert-space operations used by the iterative solvers.
pub trait FieldVector: Clone + Send + Sync {
    /// `⟨self, other⟩`, conjugate-linear in `other`.
    fn inner(&self, other: &Self) -> Complex64;
    fn scale(&mut self, a: Complex64);
    /// `self += a·x`.
    fn axpy(&mut self, a: Complex64, x: &Self);

    fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }
}

impl FieldVector for Vec<Complex64> {
    fn inner(&self, other: &Self) -> Complex64 {
        self.iter().zip(other).map(|(a, b)| a * b.conj()).sum()
    }
    fn scale(&mut self, a: Complex64) {
        self.iter_mut().for_each(|v| *v *= a);
    }
    fn axpy(&mut self, a: Complex64, x: &Self) {
        self.iter_mut().zip(x).for_each(|(v, w)| *v += a * w);
    }
}

/// Complex scalar field on an `n × n` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    n: usize,
    data: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(n: usize) -> Result<Self> {
        check_grid(n)?;
        Ok(ScalarField {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        })
    }

    pub fn from_vec(n: usize, data: Vec<Complex64>) -> Result<Self> {
        check_grid(n)?;
        if data.len() != n * n {
            return Err(DynamoError::SizeMismatch(data.len(), n * n));
        }
        Ok(ScalarField { n, data })
    }

    /// Sample `f(x, y)` on the grid.
    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> Complex64 + Sync) -> Result<Self> {
        check_grid(n)?;
        let h = 1.0 / n as f64;
        let data = (0..n * n)
            .into_par_iter()
            .map(|k| f((k / n) as f64 * h, (k % n) as f64 * h))
            .collect();
        Ok(ScalarField { n, data })
    }

    /// Synthesize from Fourier coefficients laid out in FFT order.
    pub fn from_coefficients(n: usize, mut coeffs: Vec<Complex64>) -> Result<Self> {
        check_grid(n)?;
        if coeffs.len() != n * n {
            return Err(DynamoError::SizeMismatch(coeffs.len(), n * n));
        }
        fft_plan(n).inverse(&mut coeffs);
        Ok(ScalarField { n, data: coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i % self.n) * self.n + (j % self.n)]
    }

    /// Fourier coefficients in FFT order.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let mut c = self.data.clone();
        fft_plan(self.n).forward(&mut c);
        c
    }

    /// Apply a multiplier `m(k1, k2)` in Fourier space.
    pub fn fourier_multiply(&self, m: impl Fn(i64, i64) -> Complex64 + Sync) -> ScalarField {
        let n = self.n;
        let mut c = self.coefficients();
        c.par_iter_mut().enumerate().for_each(|(idx, v)| {
            *v *= m(freq(idx / n, n), freq(idx % n, n));
        });
        fft_plan(n).inverse(&mut c);
        ScalarField { n, data: c }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ScalarField) -> Result<ScalarField> {
        same_n(self.n, other.n)?;
        let data = self
            .data
            .par_iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .collect();
        Ok(ScalarField { n: self.n, data })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        same_n(self.n, other.n)?;
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other);
        Ok(out)
    }

    /// Bilinear interpolation of the periodic grid at a real point.
    pub fn bilinear(&self, x: f64, y: f64) -> Complex64 {
        let n = self.n;
        let fx = x.rem_euclid(1.0) * n as f64;
        let fy = y.rem_euclid(1.0) * n as f64;
        let i0 = fx.floor();
        let j0 = fy.floor();
        let (tx, ty) = (fx - i0, fy - j0);
        let i0 = (i0 as usize) % n;
        let j0 = (j0 as usize) % n;
        let i1 = (i0 + 1) % n;
        let j1 = (j0 + 1) % n;
        let d = &self.data;
        d[i0 * n + j0] * ((1.0 - tx) * (1.0 - ty))
            + d[i1 * n + j0] * (tx * (1.0 - ty))
            + d[i0 * n + j1] * ((1.0 - tx) * ty)
            + d[i1 * n + j1] * (tx * ty)
    }

    /// Flat binary layout: `n` as little-endian u64, then row-major `(re, im)` f64 pairs.
    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        self.write_values(w)
    }

    fn write_values(&self, w: &mut impl Write) -> Result<()> {
        let mut buf = Vec::with_capacity(self.data.len() * 16);
        for v in &self.data {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<ScalarField> {
        let n = read_n(r)?;
        Self::read_values(r, n)
    }

    fn read_values(r: &mut impl Read, n: usize) -> Result<ScalarField> {
        let mut buf = vec![0u8; n * n * 16];
        r.read_exact(&mut buf)?;
        let data = buf
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        ScalarField::from_vec(n, data)
    }
}

fn read_n(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    let n = u64::from_le_bytes(b) as usize;
    check_grid(n)?;
    if n > 1 << 15 {
        return Err(DynamoError::Parse(format!(
            "grid size {n} implausibly large"
        )));
    }
    Ok(n)
}

fn same_n(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(DynamoError::SizeMismatch(a, b));
    }
    Ok(())
}

impl FieldVector for ScalarField {
    fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.n, other.n, "grid size mismatch");
        let s: Complex64 = self
            .data
            .par_iter()
            .zip(&other.data)
            .map(|(a, b)| a * b.conj())
            .sum();
        s / (self.n * self.n) as f64
    }
    fn scale(&mut self, a: Complex64) {
        self.data.par_iter_mut().for_each(|v| *v *= a);
    }
    fn axpy(&mut self, a: Complex64, x: &Self) {
        assert_eq!(self.n, x.n, "grid size mismatch");
        self.data
            .par_iter_mut()
            .zip(&x.data)
            .for_each(|(v, w)| *v += a * w);
    }
}

/// Planar vector field with two complex components.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2 {
    pub c: [ScalarField; 2],
}

impl VectorField2 {
    pub fn new(c1: ScalarField, c2: ScalarField) -> Result<Self> {
        same_n(c1.n, c2.n)?;
        Ok(VectorField2 { c: [c1, c2] })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Ok(VectorField2 {
            c: [ScalarField::zeros(n)?, ScalarField::zeros(n)?],
        })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> [Complex64; 2] + Sync) -> Result<Self> {
        let c1 = ScalarField::from_fn(n, |x, y| f(x, y)[0])?;
        let c2 = ScalarField::from_fn(n, |x, y| f(x, y)[1])?;
        Self::new(c1, c2)
    }

    pub fn n(&self) -> usize {
        self.c[0].n
    }

    pub fn sub(&self, other: &VectorField2) -> Result<VectorField2> {
        same_n(self.n(), other.n())?;
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other);
        Ok(out)
    }

    pub fn bilinear(&self, x: f64, y: f64) -> [Complex64; 2] {
        [self.c[0].bilinear(x, y), self.c[1].bilinear(x, y)]
    }

    /// `Σ (1 + 2π|k|)(|ĥ₁(k)| + |ĥ₂(k)|)`, an upper bound for the C¹ norm.
    pub fn c1_proxy(&self) -> f64 {
        let n = self.n();
        self.c
            .iter()
            .map(|f| {
                f.coefficients()
                    .iter()
                    .enumerate()
                    .map(|(idx, v)| {
                        let k1 = freq(idx / n, n) as f64;
                        let k2 = freq(idx % n, n) as f64;
                        (1.0 + TWO_PI * k1.hypot(k2)) * v.norm()
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        self.c[0].write_values(w)?;
        self.c[1].write_values(w)
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        let n = read_n(r)?;
        let c1 = ScalarField::read_values(r, n)?;
        let c2 = ScalarField::read_values(r, n)?;
        Self::new(c1, c2)
    }
}

impl FieldVector for VectorField2 {
    fn inner(&self, other: &Self) -> Complex64 {
        self.c[0].inner(&other.c[0]) + self.c[1].inner(&other.c[1])
    }
    fn scale(&mut self, a: Complex64) {
        self.c.iter_mut().for_each(|f| f.scale(a));
    }
    fn axpy(&mut self, a: Complex64, x: &Self) {
        self.c[0].axpy(a, &x.c[0]);
        self.c[1].axpy(a, &x.c[1]);
    }
}

/// Planar data of the ansatz `B(x, y, z) = e^{2πiz} (h(x, y), H(x, y))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field3 {
    pub h: VectorField2,
    pub h3: ScalarField,
}

impl Field3 {
    pub fn new(h: VectorField2, h3: ScalarField) -> Result<Self> {
        same_n(h.n(), h3.n)?;
        Ok(Field3 { h, h3 })
    }

    pub fn n(&self) -> usize {
        self.h3.n
    }

    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        self.h.write_binary(w)?;
        self.h3.write_values(w)
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        let h = VectorField2::read_binary(r)?;
        let h3 = ScalarField::read_values(r, h.n())?;
        Self::new(h, h3)
    }
}

impl FieldVector for Field3 {
    fn inner(&self, other: &Self) -> Complex64 {
        self.h.inner(&other.h) + self.h3.inner(&other.h3)
    }
    fn scale(&mut self, a: Complex64) {
        self.h.scale(a);
        self.h3.scale(a);
    }
    fn axpy(&mut self, a: Complex64, x: &Self) {
        self.h.axpy(a, &x.h);
        self.h3.axpy(a, &x.h3);
    }
}

/// Grid L² norm `sqrt((1/n²) Σ |f|²)`.
pub fn l2_norm<F: FieldVector>(f: &F) -> f64 {
    f.norm()
}

/// Grid inner product, conjugate-linear in the second slot.
pub fn inner<F: FieldVector>(f: &F, g: &F) -> Complex64 {
    f.inner(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Spectral derivative; the Nyquist mode is dropped.
pub fn spectral_derivative(f: &ScalarField, axis: Axis) -> ScalarField {
    let half = (f.n / 2) as i64;
    f.fourier_multiply(|k1, k2| {
        let k = match axis {
            Axis::X => k1,
            Axis::Y => k2,
        };
        if k.abs() == half {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, TWO_PI * k as f64)
        }
    })
}

/// Planar divergence `∂x h₁ + ∂y h₂`.
pub fn divergence2(h: &VectorField2) -> ScalarField {
    let mut d = spectral_derivative(&h.c[0], Axis::X);
    d.axpy(
        Complex64::new(1.0, 0.0),
        &spectral_derivative(&h.c[1], Axis::Y),
    );
    d
}

/// Divergence of the three-dimensional ansatz: `∂x h₁ + ∂y h₂ + 2πi H`.
pub fn divergence3(b: &Field3) -> ScalarField {
    let mut d = divergence2(&b.h);
    d.axpy(Complex64::new(0.0, TWO_PI), &b.h3);
    d
}

/// Divergence of `b` relative to the size of the terms that cancel in it.
pub fn relative_divergence(b: &Field3) -> f64 {
    let dx = spectral_derivative(&b.h.c[0], Axis::X).norm();
    let dy = spectral_derivative(&b.h.c[1], Axis::Y).norm();
    let scale = dx + dy + TWO_PI * b.h3.norm();
    if scale == 0.0 {
        return 0.0;
    }
    divergence3(b).norm() / scale
}

/// Complete `h` with the vertical component that makes the ansatz divergence-free.
pub fn make_div_free(h: &VectorField2) -> Field3 {
    let mut h3 = divergence2(h);
    h3.scale(Complex64::new(0.0, 1.0 / TWO_PI));
    Field3 { h: h.clone(), h3 }
}

/// Seeded random field with `|ĥ(k)| ∝ (1 + |k|)^{-decay}` on the band `|k|_∞ ≤ band`.
pub fn random_field(seed: u64, decay: f64, band: usize, n: usize) -> Result<VectorField2> {
    check_grid(n)?;
    if band >= n / 2 {
        return Err(DynamoError::InvalidParameter(format!(
            "band {band} must be below n/2 = {}",
            n / 2
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = band as i64;
    let mut comps = Vec::with_capacity(2);
    for _ in 0..2 {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n * n];
        for k1 in -b..=b {
            for k2 in -b..=b {
                let amp = (1.0 + (k1 as f64).hypot(k2 as f64)).powf(-decay);
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                let idx = k1.rem_euclid(n as i64) as usize * n + k2.rem_euclid(n as i64) as usize;
                coeffs[idx] = Complex64::new(re, im) * amp;
            }
        }
        comps.push(ScalarField::from_coefficients(n, coeffs)?);
    }
    let c2 = comps.pop().expect("two components");
    let c1 = comps.pop().expect("two components");
    VectorField2::new(c1, c2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mode(n: usize, k1: f64, k2: f64) -> ScalarField {
        ScalarField::from_fn(n, |x, y| {
            Complex64::from_polar(1.0, TWO_PI * (k1 * x + k2 * y))
        })
        .unwrap()
    }

    #[test]
    fn norm_examples() {
        let one = ScalarField::from_fn(16, |_, _| c(1.0, 0.0)).unwrap();
        assert!((l2_norm(&one) - 1.0).abs() < 1e-14);
        assert!((l2_norm(&mode(16, 1.0, 0.0)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn parseval_and_roundtrip() {
        for seed in 0..100 {
            let f = random_field(seed, 1.0, 6, 32).unwrap();
            let g = &f.c[0];
            let coef = g.coefficients();
            let cn: f64 = coef.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            assert!((cn - l2_norm(g)).abs() < 1e-12 * cn.max(1.0));
            let back = ScalarField::from_coefficients(32, coef).unwrap();
            let err = back.sub(g).unwrap().norm();
            assert!(err < 1e-12 * g.norm());
        }
    }

    #[test]
    fn derivative_examples() {
        let f = mode(16, 1.0, 0.0);
        let d = spectral_derivative(&f, Axis::X);
        let mut expect = f.clone();
        expect.scale(c(0.0, TWO_PI));
        assert!(d.sub(&expect).unwrap().norm() < 1e-12);
        let one = ScalarField::from_fn(16, |_, _| c(1.0, 0.0)).unwrap();
        assert!(spectral_derivative(&one, Axis::X).norm() < 1e-14);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let n = 64;
        let f = random_field(7, 2.0, 4, n).unwrap();
        let d = spectral_derivative(&f.c[0], Axis::Y);
        let coef = f.c[0].coefficients();
        let eval = |x: f64, y: f64| -> Complex64 {
            coef.iter()
                .enumerate()
                .map(|(idx, v)| {
                    let k1 = freq(idx / n, n) as f64;
                    let k2 = freq(idx % n, n) as f64;
                    v * Complex64::from_polar(1.0, TWO_PI * (k1 * x + k2 * y))
                })
                .sum()
        };
        let h = 1e-4;
        for (i, j) in [(3usize, 5usize), (17, 40), (60, 1)] {
            let (x, y) = (i as f64 / n as f64, j as f64 / n as f64);
            let fd = (eval(x, y + h) - eval(x, y - h)) / (2.0 * h);
            let scale = d.norm().max(1.0);
            assert!((fd - d.get(i, j)).norm() < 1e-5 * scale);
        }
    }

    #[test]
    fn divergence_examples() {
        let n = 16;
        let h = VectorField2::new(mode(n, 1.0, 0.0), ScalarField::zeros(n).unwrap()).unwrap();
        let mut h3 = mode(n, 1.0, 0.0);
        h3.scale(c(-1.0, 0.0));
        let b = Field3::new(h.clone(), h3.clone()).unwrap();
        assert!(divergence3(&b).norm() < 1e-12);
        let built = make_div_free(&h);
        assert!(built.h3.sub(&h3).unwrap().norm() < 1e-12);

        let one = ScalarField::from_fn(n, |_, _| c(1.0, 0.0)).unwrap();
        let b = Field3::new(VectorField2::zeros(n).unwrap(), one).unwrap();
        let d = divergence3(&b);
        assert!(d
            .values()
            .iter()
            .all(|v| (v - c(0.0, TWO_PI)).norm() < 1e-12));

        let constant = VectorField2::from_fn(n, |_, _| [c(2.0, 1.0), c(-1.0, 0.5)]).unwrap();
        assert!(make_div_free(&constant).h3.norm() < 1e-14);
    }

    #[test]
    fn make_div_free_on_random_fields() {
        for seed in 0..100 {
            let h = random_field(seed, 1.5, 8, 32).unwrap();
            let b = make_div_free(&h);
            assert!(divergence3(&b).norm() < 1e-10);
        }
    }

    #[test]
    fn random_field_determinism() {
        let a = random_field(5, 3.0, 16, 64).unwrap();
        let b = random_field(5, 3.0, 16, 64).unwrap();
        let other = random_field(6, 3.0, 16, 64).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, other);
        assert!(a.c1_proxy().is_finite());
    }

    #[test]
    fn binary_roundtrip() {
        let h = random_field(1, 1.0, 4, 16).unwrap();
        let b = make_div_free(&h);
        let mut buf = Vec::new();
        b.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 3 * 16 * 16 * 16);
        let back = Field3::read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back, b);
        let mut buf = Vec::new();
        h.c[0].write_binary(&mut buf).unwrap();
        assert_eq!(
            ScalarField::read_binary(&mut buf.as_slice()).unwrap(),
            h.c[0]
        );
    }
}
