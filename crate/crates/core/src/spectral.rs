//! Power iteration, pulsed growth traces, strong-chaos convergence and flux experiments.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{DynamoError, Result};
use crate::fields::{
    make_div_free, random_field, relative_divergence, Field3, FieldVector, ScalarField,
    VectorField2,
};
use crate::map::{Alpha, BranchMatrix};
use crate::operators::{
    apply_l_alpha, apply_l_infty, apply_p3d, apply_p_eps_normalized, pushforward_ideal, solve_h3,
    OperatorContext,
};
use crate::shear::{limit_matrix, ShearProfile};

/// Result of a power iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    /// Rayleigh quotient `⟨Av, v⟩/⟨v, v⟩` at return.
    pub lambda: Complex64,
    /// `‖Av − λv‖/‖v‖` at return.
    pub residual: f64,
    /// Number of operator applications.
    pub iters: usize,
    /// `false` if the iteration stopped at `max_iter` above tolerance.
    pub converged: bool,
    /// Rayleigh quotient after each application.
    pub history: Vec<Complex64>,
}

/// Power iteration `v ← Av/‖Av‖`; returns the report and the last (unit) iterate `v`.
pub fn power_iteration<V: FieldVector>(
    mut apply: impl FnMut(&V) -> Result<V>,
    v0: V,
    tol: f64,
    max_iter: usize,
) -> Result<(SpectralReport, V)> {
    let n0 = v0.norm();
    if !(n0 > 0.0) {
        return Err(DynamoError::ZeroVector);
    }
    let mut v = v0;
    v.scale(Complex64::new(1.0 / n0, 0.0));
    let mut history = Vec::new();
    let mut lambda = Complex64::new(0.0, 0.0);
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter.max(1) {
        let w = apply(&v)?;
        lambda = w.inner(&v);
        let mut r = w.clone();
        r.axpy(-lambda, &v);
        residual = r.norm();
        history.push(lambda);
        if residual < tol {
            return Ok((
                SpectralReport {
                    lambda,
                    residual,
                    iters: it,
                    converged: true,
                    history,
                },
                v,
            ));
        }
        let wn = w.norm();
        if !(wn > 0.0) {
            return Err(DynamoError::ZeroVector);
        }
        v = w;
        v.scale(Complex64::new(1.0 / wn, 0.0));
    }
    Ok((
        SpectralReport {
            lambda,
            residual,
            iters: max_iter.max(1),
            converged: false,
            history,
        },
        v,
    ))
}

/// White-noise complex start vector for the planar operators.
pub fn random_start(seed: u64, n: usize) -> Result<VectorField2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comp = || -> Result<ScalarField> {
        let data = (0..n * n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            })
            .collect();
        ScalarField::from_vec(n, data)
    };
    let c1 = comp()?;
    let c2 = comp()?;
    VectorField2::new(c1, c2)
}

/// Leading eigenpair of `α⁻²P_ε` from a seeded white-noise start.
pub fn leading_eigen(
    ctx: &OperatorContext,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<(SpectralReport, VectorField2)> {
    let v0 = random_start(seed, ctx.n())?;
    power_iteration(|h| apply_p_eps_normalized(h, ctx), v0, tol, max_iter)
}

/// Eigenmode `(h, H)` of one pulsed period: `h` the leading eigenvector of the
/// planar block, `H` from the vertical resolvent. Returns the mode, the
/// eigenvalue of the planar block `e^{−4π²ε}P_ε`, and the planar report.
pub fn assemble_eigenmode(
    ctx: &OperatorContext,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<(Field3, Complex64, SpectralReport)> {
    let (report, h) = leading_eigen(ctx, seed, tol, max_iter)?;
    let lambda = report.lambda * ctx.alpha().squared() * ctx.z_mode_factor();
    let h3 = solve_h3(&h, lambda, ctx)?;
    Ok((Field3::new(h, h3)?, lambda, report))
}

/// Per-period norms of a pulsed evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthTrace {
    pub alpha: Alpha,
    pub eps: f64,
    pub periods: usize,
    /// `log‖B_n‖` for `n = 0..=periods`.
    pub log_norms: Vec<f64>,
    /// `‖P B̃_{n−1}‖` of the renormalized iterate, `n = 1..=periods`.
    pub factors: Vec<f64>,
    /// Slope of `log‖B_n‖` over the last half of the trace, divided by 2.
    pub gamma: f64,
}

impl GrowthTrace {
    pub fn norms(&self) -> Vec<f64> {
        self.log_norms.iter().map(|l| l.exp()).collect()
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn tail_slope(values: &[f64], first_index: usize) -> f64 {
    let start = values.len() / 2;
    let xs: Vec<f64> = (start..values.len())
        .map(|i| (i + first_index) as f64)
        .collect();
    ls_slope(&xs, &values[start..])
}

/// Tolerance on the relative divergence of the initial field.
pub const DIV_TOLERANCE: f64 = 1e-8;

/// Apply `n_periods` pulsed periods with renormalization; returns the trace and the final unit field.
pub fn evolve_and_trace(
    b0: &Field3,
    ctx: &OperatorContext,
    n_periods: usize,
) -> Result<(GrowthTrace, Field3)> {
    let div = relative_divergence(b0);
    if div > DIV_TOLERANCE {
        return Err(DynamoError::NotDivergenceFree(div));
    }
    let n0 = b0.norm();
    if !(n0 > 0.0) {
        return Err(DynamoError::ZeroVector);
    }
    let mut b = b0.clone();
    b.scale(Complex64::new(1.0 / n0, 0.0));
    let mut log_norms = vec![n0.ln()];
    let mut factors = Vec::with_capacity(n_periods);
    let mut acc = n0.ln();
    for _ in 0..n_periods {
        b = apply_p3d(&b, ctx)?;
        let f = b.norm();
        if !(f > 0.0) {
            return Err(DynamoError::ZeroVector);
        }
        b.scale(Complex64::new(1.0 / f, 0.0));
        acc += f.ln();
        factors.push(f);
        log_norms.push(acc);
    }
    let gamma = if n_periods >= 2 {
        tail_slope(&log_norms, 0) / 2.0
    } else {
        f64::NAN
    };
    Ok((
        GrowthTrace {
            alpha: ctx.alpha(),
            eps: ctx.eps(),
            periods: n_periods,
            log_norms,
            factors,
            gamma,
        },
        b,
    ))
}

/// Seeded band-limited divergence-free start field.
pub fn random_div_free(seed: u64, band: usize, n: usize) -> Result<Field3> {
    Ok(make_div_free(&random_field(seed, 1.0, band, n)?))
}

/// Band-limited planar field stored by its Fourier coefficients on `|m|_∞ ≤ band`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLimited {
    band: usize,
    coeffs: [Vec<Complex64>; 2],
}

impl BandLimited {
    /// Independent standard complex Gaussian coefficients.
    pub fn random(seed: u64, band: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = (2 * band + 1).pow(2);
        let mut comp = || {
            (0..len)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im)
                })
                .collect::<Vec<_>>()
        };
        let c1 = comp();
        let c2 = comp();
        BandLimited {
            band,
            coeffs: [c1, c2],
        }
    }

    /// Field with only the mean of each component set.
    pub fn constant(v: [Complex64; 2]) -> Self {
        BandLimited {
            band: 0,
            coeffs: [vec![v[0]], vec![v[1]]],
        }
    }

    pub fn zero(band: usize) -> Self {
        let len = (2 * band + 1).pow(2);
        BandLimited {
            band,
            coeffs: [
                vec![Complex64::new(0.0, 0.0); len],
                vec![Complex64::new(0.0, 0.0); len],
            ],
        }
    }

    pub fn band(&self) -> usize {
        self.band
    }

    /// Coefficient of component `c` at frequency `(m1, m2)`.
    pub fn coeff(&self, c: usize, m1: i64, m2: i64) -> Complex64 {
        let b = self.band as i64;
        if m1.abs() > b || m2.abs() > b {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[c][((m1 + b) * (2 * b + 1) + (m2 + b)) as usize]
    }

    /// Samples on an `n × n` grid; needs `band < n/2`.
    pub fn sample(&self, n: usize) -> Result<VectorField2> {
        if 2 * self.band >= n {
            return Err(DynamoError::InvalidParameter(format!(
                "band {} not resolved on grid {n}",
                self.band
            )));
        }
        let b = self.band as i64;
        let mut comps = Vec::with_capacity(2);
        for c in 0..2 {
            let mut data = vec![Complex64::new(0.0, 0.0); n * n];
            for m1 in -b..=b {
                for m2 in -b..=b {
                    let idx =
                        m1.rem_euclid(n as i64) as usize * n + m2.rem_euclid(n as i64) as usize;
                    data[idx] = self.coeff(c, m1, m2);
                }
            }
            comps.push(ScalarField::from_coefficients(n, data)?);
        }
        let c2 = comps.pop().expect("two components");
        VectorField2::new(comps.pop().expect("two components"), c2)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.iter().all(|z| *z == Complex64::new(0.0, 0.0)))
    }
}

/// `∫_{lo}^{lo+½} e^{2πijx} dx` for integer `j` and `lo ∈ {0, ½}`.
fn half_interval(j: i64, lo_half: bool) -> Complex64 {
    if j == 0 {
        return Complex64::new(0.5, 0.0);
    }
    if j % 2 == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let v = 1.0 / (std::f64::consts::PI * j as f64);
    if lo_half {
        Complex64::new(0.0, -v)
    } else {
        Complex64::new(0.0, v)
    }
}

/// Forward regions as `(x offset is ½, sign of the α shear, y offset is ½)`.
const FORWARD_PARALLELOGRAMS: [(u8, bool, i64, bool); 4] = [
    (1, true, -1, true),
    (2, false, 1, true),
    (3, true, -1, false),
    (4, false, 1, false),
];

/// Grid samples of `u = conj(φ)·e^{2πig}` turned into Fourier coefficients on an `m × m` grid.
pub fn twisted_test_coefficients(
    phi: &BandLimited,
    profile: &ShearProfile,
    m: usize,
) -> Result<[ScalarField; 2]> {
    let phi_grid = phi.sample(m)?;
    let s = profile.sample_grid(m, [0.0, 0.0])?;
    let mut out = Vec::with_capacity(2);
    for c in 0..2 {
        let data: Vec<Complex64> = phi_grid.c[c]
            .values()
            .iter()
            .zip(&s.g)
            .map(|(p, &g)| p.conj() * Complex64::from_polar(1.0, std::f64::consts::TAU * g))
            .collect();
        let coeffs = ScalarField::from_vec(m, data)?.coefficients();
        out.push(ScalarField::from_vec(m, coeffs)?);
    }
    let c2 = out.pop().expect("two components");
    Ok([out.pop().expect("two components"), c2])
}

/// `⟨e^{2πig}L_α h, φ⟩` evaluated from Fourier data: exact change of variables on each
/// forward region with `u` truncated to `|k|_∞ ≤ k_max`.
pub fn exact_l_alpha_pairing(
    alpha: Alpha,
    h: &BandLimited,
    u_hat: &[ScalarField; 2],
    k_max: usize,
) -> Complex64 {
    let m = u_hat[0].n();
    let a = alpha.get() as i64;
    let inv_a2 = 1.0 / alpha.squared();
    let kb = k_max as i64;
    let hb = h.band() as i64;
    let u0 = u_hat[0].values();
    let u1 = u_hat[1].values();
    (-kb..=kb)
        .into_par_iter()
        .map(|k1| {
            let row = k1.rem_euclid(m as i64) as usize * m;
            let mut acc = Complex64::new(0.0, 0.0);
            for &(region, x_half, s, y_half) in &FORWARD_PARALLELOGRAMS {
                let e = BranchMatrix::for_branch(region, alpha).entries;
                let af = e.map(|r| r.map(|v| v as f64));
                for m1 in -hb..=hb {
                    for m2 in -hb..=hb {
                        let hv = [h.coeff(0, m1, m2), h.coeff(1, m1, m2)];
                        if hv[0].norm_sqr() + hv[1].norm_sqr() == 0.0 {
                            continue;
                        }
                        let w0 = (hv[0] * af[0][0] + hv[1] * af[0][1]) * inv_a2;
                        let w1 = (hv[0] * af[1][0] + hv[1] * af[1][1]) * inv_a2;
                        for k2 in -kb..=kb {
                            let n2 = e[0][1] * k1 + e[1][1] * k2 + m2;
                            let iy = half_interval(n2, false);
                            if iy.norm_sqr() == 0.0 {
                                continue;
                            }
                            let n1 = e[0][0] * k1 + e[1][0] * k2 + m1;
                            let ix = half_interval(n1 + s * a * n2, x_half);
                            if ix.norm_sqr() == 0.0 {
                                continue;
                            }
                            let phase = if y_half && n2.rem_euclid(2) == 1 {
                                -1.0
                            } else {
                                1.0
                            };
                            let col = k2.rem_euclid(m as i64) as usize;
                            let uw = u0[row + col] * w0 + u1[row + col] * w1;
                            acc += uw * iy * ix * phase;
                        }
                    }
                }
            }
            acc
        })
        .sum()
}

/// `⟨e^{2πig}L_∞ h, φ⟩` from Fourier data.
pub fn exact_l_infty_pairing(h: &BandLimited, u_hat: &[ScalarField; 2]) -> Complex64 {
    let hb = h.band() as i64;
    let s: Complex64 = (-hb..=hb)
        .map(|m1| h.coeff(0, m1, 0) * (half_interval(m1, true) - half_interval(m1, false)))
        .sum();
    let m = u_hat[0].n() as i64;
    let u0 = u_hat[0].values();
    let t: Complex64 = (-m / 2..m / 2)
        .map(|k2| {
            u0[k2.rem_euclid(m) as usize] * (half_interval(k2, true) - half_interval(k2, false))
        })
        .sum();
    s * t
}

/// One row of the strong-chaos convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub alpha: Alpha,
    /// `|⟨e^{2πig}(L_α − L_∞)h, φ⟩|` on the `n × n` grid.
    pub grid_error: f64,
    /// Same pairing from the exact Fourier-side formula.
    pub exact_error: f64,
    pub exact_l_alpha: Complex64,
    pub exact_l_infty: Complex64,
}

/// Resolution of the Fourier-side convergence route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactRoute {
    /// Grid size for the coefficients of `conj(φ)e^{2πig}`.
    pub m: usize,
    /// Truncation of those coefficients, `|k|_∞ ≤ k_max < m/2`.
    pub k_max: usize,
}

impl Default for ExactRoute {
    fn default() -> Self {
        ExactRoute { m: 512, k_max: 255 }
    }
}

/// Pairing error between `e^{2πig}L_α h` and its rank-1 limit for each `α`.
pub fn limit_convergence_experiment(
    alphas: &[Alpha],
    h: &BandLimited,
    phi: &BandLimited,
    profile: &ShearProfile,
    n: usize,
    route: ExactRoute,
) -> Result<Vec<ConvergenceRow>> {
    if route.k_max >= route.m / 2 {
        return Err(DynamoError::InvalidParameter(format!(
            "k_max {} must be below m/2 = {}",
            route.k_max,
            route.m / 2
        )));
    }
    let u_hat = twisted_test_coefficients(phi, profile, route.m)?;
    let l_inf_exact = exact_l_infty_pairing(h, &u_hat);
    let hg = h.sample(n)?;
    let pg = phi.sample(n)?;
    let l_inf_grid = apply_l_infty(&hg)?;
    alphas
        .par_iter()
        .map(|&alpha| {
            let ctx = OperatorContext::new(alpha, n, profile, 0.0)?;
            let mut diff = apply_l_alpha(&hg, &ctx)?;
            diff.axpy(Complex64::new(-1.0, 0.0), &l_inf_grid);
            for c in diff.c.iter_mut() {
                *c = c.mul(ctx.phase())?;
            }
            let grid_error = diff.inner(&pg).norm();
            let exact_l_alpha = exact_l_alpha_pairing(alpha, h, &u_hat, route.k_max);
            Ok(ConvergenceRow {
                alpha,
                grid_error,
                exact_error: (exact_l_alpha - l_inf_exact).norm(),
                exact_l_alpha,
                exact_l_infty: l_inf_exact,
            })
        })
        .collect()
}

/// Pairing threshold below which a flux witness is considered lost.
pub const FLUX_UNDERFLOW: f64 = 1e-30;

/// Ideal flux pairings `⟨(α²e^{2πig}L_α)^k B₀, ψ⟩`, `k = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxSeries {
    /// `log|⟨B_k, ψ⟩|`.
    pub log_pairings: Vec<f64>,
    /// `a_k = log|⟨B_k, ψ⟩| / k`.
    pub rates: Vec<f64>,
    /// Least-squares slope of `log|⟨B_k, ψ⟩|` over the last half of the steps.
    pub tail_slope: f64,
    /// Steps whose normalized pairing fell below [`FLUX_UNDERFLOW`].
    pub underflows: Vec<usize>,
}

impl FluxSeries {
    pub fn witness_ok(&self) -> bool {
        self.underflows.is_empty()
    }
}

/// Ideal (`ε = 0`) flux experiment with per-step renormalization.
pub fn flux_experiment(
    b0: &VectorField2,
    psi: &VectorField2,
    ctx: &OperatorContext,
    n: usize,
) -> Result<FluxSeries> {
    if ctx.eps() != 0.0 {
        return Err(DynamoError::InvalidParameter(
            "flux experiment requires eps = 0".into(),
        ));
    }
    let psi_norm = psi.norm();
    if !(psi_norm > 0.0) {
        return Err(DynamoError::Degenerate("test field psi is zero".into()));
    }
    let n0 = b0.norm();
    if !(n0 > 0.0) {
        return Err(DynamoError::ZeroVector);
    }
    let mut b = b0.clone();
    b.scale(Complex64::new(1.0 / n0, 0.0));
    let mut acc = n0.ln();
    let mut log_pairings = Vec::with_capacity(n);
    let mut rates = Vec::with_capacity(n);
    let mut underflows = Vec::new();
    for k in 1..=n {
        let mut next = pushforward_ideal(&b, ctx)?;
        for c in next.c.iter_mut() {
            *c = c.mul(ctx.phase())?;
        }
        let f = next.norm();
        if !(f > 0.0) {
            return Err(DynamoError::ZeroVector);
        }
        next.scale(Complex64::new(1.0 / f, 0.0));
        acc += f.ln();
        b = next;
        let p = b.inner(psi).norm();
        if p / psi_norm < FLUX_UNDERFLOW {
            underflows.push(k);
        }
        let lp = acc + p.ln();
        log_pairings.push(lp);
        rates.push(lp / k as f64);
    }
    let tail_slope = if n >= 2 {
        tail_slope(&log_pairings, 1)
    } else {
        f64::NAN
    };
    Ok(FluxSeries {
        log_pairings,
        rates,
        tail_slope,
        underflows,
    })
}

/// A-priori bound on the flux growth per step, `log(2α²(1 + 2/α))`.
pub fn flux_slope_bound(alpha: Alpha) -> f64 {
    let a = alpha.as_f64();
    (2.0 * a * a * (1.0 + 2.0 / a)).ln()
}

/// One row of the eigenvalue-versus-α table.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenRow {
    pub alpha: Alpha,
    pub eps: f64,
    /// Leading eigenvalue of `α⁻²P_ε`.
    pub lambda: Complex64,
    pub mu_abs: f64,
    /// `||λ| − |μ||`.
    pub gap: f64,
    pub residual: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Leading eigenvalue of `α⁻²P_ε` for each `α`, next to the limit eigenvalue `|μ|`.
pub fn eigen_vs_alpha(
    alphas: &[Alpha],
    eps: f64,
    profile: &ShearProfile,
    n: usize,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<EigenRow>> {
    let mu_abs = limit_matrix(profile)?.mu.norm();
    alphas
        .par_iter()
        .map(|&alpha| {
            let ctx = OperatorContext::new(alpha, n, profile, eps)?;
            let (r, _) = leading_eigen(&ctx, seed, tol, max_iter)?;
            Ok(EigenRow {
                alpha,
                eps,
                lambda: r.lambda,
                mu_abs,
                gap: (r.lambda.norm() - mu_abs).abs(),
                residual: r.residual,
                iters: r.iters,
                converged: r.converged,
            })
        })
        .collect()
}
