//! The out-of-plane shear profile `g` and the rank-1 limit matrix.
//!
//! The unmollified profile is `f = ½·1_{Q2 ∪ Q4}` with quadrants
//! `Q1 = {x ≥ ½, y ≥ ½}`, `Q2 = {x < ½, y ≥ ½}`, `Q3 = {x < ½, y < ½}`,
//! `Q4 = {x ≥ ½, y < ½}`. Writing `a = 1_[½,1)`, `f = ½(a(x) + a(y) − 2a(x)a(y))`,
//! so its Fourier coefficients follow from the one-dimensional ones. The
//! mollified profile multiplies them by `exp(−ℓ²|k|²/2)`.

use std::io::{BufRead, Write};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{DynamoError, Result};
use crate::fields::fft_plan;
use crate::map::{check_grid, TorusPoint};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// How point values of the profile are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// Truncated mollified Fourier series.
    Mollified,
    /// `ℓ = 0`: point values use the exact quadrant indicator; the stored
    /// coefficients are its truncated series.
    Indicator,
    /// `g ≡ 0`.
    Zero,
}

impl ProfileKind {
    fn as_str(self) -> &'static str {
        match self {
            ProfileKind::Mollified => "mollified",
            ProfileKind::Indicator => "indicator",
            ProfileKind::Zero => "zero",
        }
    }
}

impl FromStr for ProfileKind {
    type Err = DynamoError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mollified" => Ok(ProfileKind::Mollified),
            "indicator" => Ok(ProfileKind::Indicator),
            "zero" => Ok(ProfileKind::Zero),
            other => Err(DynamoError::Parse(format!(
                "unknown profile kind '{other}'"
            ))),
        }
    }
}

/// Fourier representation of the shear profile `g`, `|k|_∞ ≤ band`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearProfile {
    kind: ProfileKind,
    moll_scale: f64,
    band: usize,
    /// `ĝ(k1, k2)` at index `(k1 + band)·(2·band + 1) + (k2 + band)`.
    coeffs: Vec<Complex64>,
}

/// Fourier coefficient of `1_[½,1)` at frequency `k`.
pub fn half_indicator_coefficient(k: i64) -> Complex64 {
    if k == 0 {
        Complex64::new(0.5, 0.0)
    } else if k % 2 != 0 {
        Complex64::new(0.0, 1.0 / (std::f64::consts::PI * k as f64))
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Samples of `g` and `∇g` on a grid.
#[derive(Debug, Clone)]
pub struct GridSamples {
    pub n: usize,
    pub g: Vec<f64>,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
}

impl ShearProfile {
    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn moll_scale(&self) -> f64 {
        self.moll_scale
    }

    pub fn band(&self) -> usize {
        self.band
    }

    /// The profile `g ≡ 0`.
    pub fn zero(band: usize) -> Self {
        let w = 2 * band + 1;
        ShearProfile {
            kind: ProfileKind::Zero,
            moll_scale: 0.0,
            band,
            coeffs: vec![Complex64::new(0.0, 0.0); w * w],
        }
    }

    /// Coefficient `ĝ(k1, k2)`; zero outside the band.
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        let b = self.band as i64;
        if k1.abs() > b || k2.abs() > b {
            return Complex64::new(0.0, 0.0);
        }
        let w = 2 * self.band + 1;
        self.coeffs[(k1 + b) as usize * w + (k2 + b) as usize]
    }

    fn for_each_coeff(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        let b = self.band as i64;
        let w = 2 * self.band + 1;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(idx, &c)| ((idx / w) as i64 - b, (idx % w) as i64 - b, c))
    }

    /// Complex value of the truncated series at `p` (imaginary part is rounding noise).
    pub fn eval_series(&self, p: TorusPoint) -> Complex64 {
        let b = self.band as i64;
        let ex: Vec<Complex64> = (-b..=b)
            .map(|k| Complex64::from_polar(1.0, TWO_PI * k as f64 * p.x))
            .collect();
        let ey: Vec<Complex64> = (-b..=b)
            .map(|k| Complex64::from_polar(1.0, TWO_PI * k as f64 * p.y))
            .collect();
        let w = 2 * self.band + 1;
        let mut total = Complex64::new(0.0, 0.0);
        for (r, exv) in ex.iter().enumerate() {
            let row = &self.coeffs[r * w..(r + 1) * w];
            let s: Complex64 = row.iter().zip(&ey).map(|(c, e)| c * e).sum();
            total += exv * s;
        }
        total
    }

    /// `g(p)`.
    pub fn eval(&self, p: TorusPoint) -> f64 {
        match self.kind {
            ProfileKind::Zero => 0.0,
            ProfileKind::Indicator => quadrant_indicator(p.x, p.y),
            ProfileKind::Mollified => self.eval_series(p).re,
        }
    }

    /// `∇g(p)`, the exact derivative of the truncated series (zero a.e. for the indicator).
    pub fn eval_grad(&self, p: TorusPoint) -> [f64; 2] {
        if self.kind != ProfileKind::Mollified {
            return [0.0, 0.0];
        }
        let mut gx = Complex64::new(0.0, 0.0);
        let mut gy = Complex64::new(0.0, 0.0);
        for (k1, k2, c) in self.for_each_coeff() {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let e = c * Complex64::from_polar(1.0, TWO_PI * (k1 as f64 * p.x + k2 as f64 * p.y));
            gx += e * Complex64::new(0.0, TWO_PI * k1 as f64);
            gy += e * Complex64::new(0.0, TWO_PI * k2 as f64);
        }
        [gx.re, gy.re]
    }

    /// `Σ 2π|k||ĝ(k)|`, a bound on `sup |∇g|`.
    pub fn c1_bound(&self) -> f64 {
        self.for_each_coeff()
            .map(|(k1, k2, c)| TWO_PI * (k1 as f64).hypot(k2 as f64) * c.norm())
            .sum()
    }

    /// Sample `g` and `∇g` at `((i + s₁)/n, (j + s₂)/n)`.
    pub fn sample_grid(&self, n: usize, shift: [f64; 2]) -> Result<GridSamples> {
        check_grid(n)?;
        let h = 1.0 / n as f64;
        if self.kind != ProfileKind::Mollified {
            let g = (0..n * n)
                .into_par_iter()
                .map(|k| {
                    if self.kind == ProfileKind::Zero {
                        0.0
                    } else {
                        let x = ((k / n) as f64 + shift[0]) * h;
                        let y = ((k % n) as f64 + shift[1]) * h;
                        quadrant_indicator(x, y)
                    }
                })
                .collect();
            return Ok(GridSamples {
                n,
                g,
                gx: vec![0.0; n * n],
                gy: vec![0.0; n * n],
            });
        }
        // Fold the band into the grid's frequency range; exact at the sample points.
        let nn = n as i64;
        let mut cg = vec![Complex64::new(0.0, 0.0); n * n];
        let mut cx = cg.clone();
        let mut cy = cg.clone();
        for (k1, k2, c) in self.for_each_coeff() {
            let phase = Complex64::from_polar(
                1.0,
                TWO_PI * (k1 as f64 * shift[0] + k2 as f64 * shift[1]) * h,
            );
            let v = c * phase;
            let idx = k1.rem_euclid(nn) as usize * n + k2.rem_euclid(nn) as usize;
            cg[idx] += v;
            cx[idx] += v * Complex64::new(0.0, TWO_PI * k1 as f64);
            cy[idx] += v * Complex64::new(0.0, TWO_PI * k2 as f64);
        }
        let plan = fft_plan(n);
        for c in [&mut cg, &mut cx, &mut cy] {
            plan.inverse(c);
        }
        Ok(GridSamples {
            n,
            g: cg.iter().map(|v| v.re).collect(),
            gx: cx.iter().map(|v| v.re).collect(),
            gy: cy.iter().map(|v| v.re).collect(),
        })
    }

    /// Key-value header followed by one `k1 k2 re im` line per coefficient.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "kind = {}", self.kind.as_str())?;
        writeln!(w, "moll_scale = {:.17e}", self.moll_scale)?;
        writeln!(w, "band = {}", self.band)?;
        writeln!(w, "coefficients")?;
        for (k1, k2, c) in self.for_each_coeff() {
            writeln!(w, "{k1} {k2} {:.17e} {:.17e}", c.re, c.im)?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl BufRead) -> Result<Self> {
        let mut kind = None;
        let mut moll_scale = None;
        let mut band: Option<usize> = None;
        let mut lines = r.lines();
        for line in lines.by_ref() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "coefficients" {
                break;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| DynamoError::Parse(format!("bad header line '{line}'")))?;
            let v = v.trim();
            match k.trim() {
                "kind" => kind = Some(v.parse::<ProfileKind>()?),
                "moll_scale" => moll_scale = Some(parse_num::<f64>(v)?),
                "band" => band = Some(parse_num::<usize>(v)?),
                other => return Err(DynamoError::Parse(format!("unknown key '{other}'"))),
            }
        }
        let band = band.ok_or_else(|| DynamoError::Parse("missing band".into()))?;
        let mut profile = ShearProfile::zero(band);
        profile.kind = kind.ok_or_else(|| DynamoError::Parse("missing kind".into()))?;
        profile.moll_scale = moll_scale.unwrap_or(0.0);
        let b = band as i64;
        let w = 2 * band + 1;
        let mut count = 0;
        for line in lines {
            let line = line?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.is_empty() {
                continue;
            }
            if parts.len() != 4 {
                return Err(DynamoError::Parse(format!("bad coefficient line '{line}'")));
            }
            let k1: i64 = parse_num(parts[0])?;
            let k2: i64 = parse_num(parts[1])?;
            if k1.abs() > b || k2.abs() > b {
                return Err(DynamoError::Parse(format!(
                    "frequency ({k1}, {k2}) outside band"
                )));
            }
            let c = Complex64::new(parse_num(parts[2])?, parse_num(parts[3])?);
            profile.coeffs[(k1 + b) as usize * w + (k2 + b) as usize] = c;
            count += 1;
        }
        if count != w * w {
            return Err(DynamoError::Parse(format!(
                "expected {} coefficients, found {count}",
                w * w
            )));
        }
        Ok(profile)
    }
}

fn parse_num<T: FromStr>(s: &str) -> Result<T> {
    s.parse::<T>()
        .map_err(|_| DynamoError::Parse(format!("cannot parse '{s}'")))
}

/// `½·1_{Q2 ∪ Q4}` with the half-open convention.
pub fn quadrant_indicator(x: f64, y: f64) -> f64 {
    let ax = crate::map::indicator_geq(crate::map::wrap_unit(x), 0.5);
    let ay = crate::map::indicator_geq(crate::map::wrap_unit(y), 0.5);
    if ax != ay {
        0.5
    } else {
        0.0
    }
}

/// Mollified quadrant profile with scale `ℓ ≥ 0` truncated to `|k|_∞ ≤ band`.
pub fn build_shear(moll_scale: f64, band: usize) -> Result<ShearProfile> {
    if band < 1 {
        return Err(DynamoError::InvalidParameter("band must be >= 1".into()));
    }
    if !(moll_scale >= 0.0) || !moll_scale.is_finite() {
        return Err(DynamoError::InvalidParameter(format!(
            "mollifier scale must be finite and >= 0, got {moll_scale}"
        )));
    }
    let b = band as i64;
    let w = 2 * band + 1;
    let a: Vec<Complex64> = (-b..=b).map(half_indicator_coefficient).collect();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); w * w];
    for k1 in -b..=b {
        for k2 in -b..=b {
            let a1 = a[(k1 + b) as usize];
            let a2 = a[(k2 + b) as usize];
            let d1 = if k1 == 0 { 1.0 } else { 0.0 };
            let d2 = if k2 == 0 { 1.0 } else { 0.0 };
            let raw = (a1 * d2 + a2 * d1 - a1 * a2 * 2.0) * 0.5;
            let k2norm = (k1 * k1 + k2 * k2) as f64;
            let damp = (-moll_scale * moll_scale * k2norm / 2.0).exp();
            coeffs[(k1 + b) as usize * w + (k2 + b) as usize] = raw * damp;
        }
    }
    let kind = if moll_scale == 0.0 {
        ProfileKind::Indicator
    } else {
        ProfileKind::Mollified
    };
    Ok(ShearProfile {
        kind,
        moll_scale,
        band,
        coeffs,
    })
}

/// Integrals of a function over the four quadrants, with a Richardson error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrantIntegrals {
    /// `(Q1, Q2, Q3, Q4)` from the finer grid.
    pub values: [Complex64; 4],
    /// `max |I(2m) − I(m)| / 3` over quadrants.
    pub richardson_error: f64,
}

fn quadrant_sums(
    profile: &ShearProfile,
    m: usize,
    integrand: impl Fn(f64) -> Complex64 + Sync,
) -> Result<[Complex64; 4]> {
    let s = profile.sample_grid(m, [0.5, 0.5])?;
    let half = m / 2;
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for (idx, &g) in s.g.iter().enumerate() {
        let (i, j) = (idx / m, idx % m);
        let q = match (i >= half, j >= half) {
            (true, true) => 0,
            (false, true) => 1,
            (false, false) => 2,
            (true, false) => 3,
        };
        out[q] += integrand(g);
    }
    let w = 1.0 / (m * m) as f64;
    Ok(out.map(|v| v * w))
}

fn quadrant_integrals_of(
    profile: &ShearProfile,
    m_q: usize,
    integrand: impl Fn(f64) -> Complex64 + Sync + Copy,
) -> Result<QuadrantIntegrals> {
    if m_q < 64 || m_q % 2 != 0 {
        return Err(DynamoError::InvalidParameter(format!(
            "quadrature grid must be even and >= 64, got {m_q}"
        )));
    }
    let coarse = quadrant_sums(profile, m_q, integrand)?;
    let fine = quadrant_sums(profile, 2 * m_q, integrand)?;
    let err = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (f - c).norm() / 3.0)
        .fold(0.0, f64::max);
    Ok(QuadrantIntegrals {
        values: fine,
        richardson_error: err,
    })
}

/// Midpoint quadrature of `e^{2πig}` over each quadrant (cells aligned with the quadrant edges).
pub fn quadrant_integrals(profile: &ShearProfile, m_q: usize) -> Result<QuadrantIntegrals> {
    quadrant_integrals_of(profile, m_q, |g| Complex64::from_polar(1.0, TWO_PI * g))
}

/// Midpoint quadrature of `g` itself over each quadrant.
pub fn quadrant_integrals_of_g(profile: &ShearProfile, m_q: usize) -> Result<QuadrantIntegrals> {
    quadrant_integrals_of(profile, m_q, |g| Complex64::new(g, 0.0))
}

/// The 2×2 limit matrix and its nonzero eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitMatrix {
    pub entries: [[Complex64; 2]; 2],
    pub mu: Complex64,
    pub quadrants: QuadrantIntegrals,
}

impl LimitMatrix {
    pub fn trace(&self) -> Complex64 {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.entries;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Both eigenvalues, larger modulus first.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let t = self.trace();
        let disc = (t * t - self.det() * 4.0).sqrt();
        let a = (t + disc) / 2.0;
        let b = (t - disc) / 2.0;
        if a.norm() >= b.norm() {
            [a, b]
        } else {
            [b, a]
        }
    }
}

/// Default quadrature grid used by [`limit_matrix`].
pub const DEFAULT_QUADRATURE: usize = 512;

/// Build `M = [[Q1−Q4, Q4−Q1], [Q2−Q3, Q3−Q2]]` and `μ = Q1 + Q3 − Q2 − Q4`.
pub fn limit_matrix(profile: &ShearProfile) -> Result<LimitMatrix> {
    limit_matrix_with(profile, DEFAULT_QUADRATURE)
}

pub fn limit_matrix_with(profile: &ShearProfile, m_q: usize) -> Result<LimitMatrix> {
    let quadrants = quadrant_integrals(profile, m_q)?;
    let [q1, q2, q3, q4] = quadrants.values;
    let entries = [[q1 - q4, q4 - q1], [q2 - q3, q3 - q2]];
    let mu = q1 + q3 - q2 - q4;
    let m = LimitMatrix {
        entries,
        mu,
        quadrants,
    };
    let tol = 1e-10 + quadrants.richardson_error;
    debug_assert!((m.trace() - mu).norm() <= tol);
    debug_assert!(m.det().norm() <= tol);
    Ok(m)
}
