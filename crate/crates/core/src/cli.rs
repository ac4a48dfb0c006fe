//! Batch experiment driver behind the `dynamo` binary.
//!
//! Configuration is a flat `key = value` file (lists are comma separated,
//! `#` starts a comment); `--set key=value` flags override it. Every output
//! file starts with `# config_hash=<sha256>` followed by a CSV table whose
//! floats carry 17 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{DynamoError, Result};
use crate::fields::random_field;
use crate::leaves::{sample_leaf, strip_piece_bound, subdivide_by_strips};
use crate::map::{
    apply_map, check_grid, flow_map, forward_region, grid_pullback_table, in_stable_cone,
    in_unstable_cone, leaf_jacobian, wrap_unit, Alpha, BranchMatrix, Point3, RegionId, TorusPoint,
};
use crate::norms::{heat_weak_check, ly_check, NormParams};
use crate::operators::OperatorContext;
use crate::shear::{build_shear, limit_matrix, ProfileKind, ShearProfile};
use crate::spectral::{
    evolve_and_trace, flux_experiment, flux_slope_bound, leading_eigen,
    limit_convergence_experiment, random_div_free, BandLimited, ExactRoute,
};

/// Environment variable that overrides the output directory of the config file.
pub const OUT_DIR_ENV: &str = "DYNAMO_OUT_DIR";

/// Experiment parameters shared by all subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub alpha: Vec<u32>,
    pub eps: Vec<f64>,
    pub grid_n: usize,
    pub moll_scale: Vec<f64>,
    pub band: usize,
    pub zero_shear: bool,
    pub sigma: f64,
    pub beta: f64,
    pub q: f64,
    pub n_leaves: usize,
    pub n_testfns: usize,
    pub c_cal: f64,
    pub seeds: Vec<u64>,
    pub field_band: usize,
    pub periods: usize,
    pub flux_steps: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub exact_m: usize,
    pub exact_kmax: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            alpha: vec![16],
            eps: vec![1e-3],
            grid_n: 256,
            moll_scale: vec![0.02],
            band: 128,
            zero_shear: false,
            sigma: 0.4,
            beta: 0.2,
            q: 0.5,
            n_leaves: 512,
            n_testfns: 16,
            c_cal: 100.0,
            seeds: vec![1],
            field_band: 8,
            periods: 40,
            flux_steps: 30,
            tol: 1e-9,
            max_iter: 5000,
            exact_m: 512,
            exact_kmax: 255,
            out_dir: PathBuf::from("dynamo-out"),
        }
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| DynamoError::Parse(format!("{key}: cannot parse '{s}'")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse::<T>()
        .map_err(|_| DynamoError::Parse(format!("{key}: cannot parse '{}'", v.trim())))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    /// Keys accepted by [`ExperimentConfig::set`].
    pub const KEYS: [&'static str; 21] = [
        "alpha",
        "eps",
        "grid_n",
        "moll_scale",
        "band",
        "zero_shear",
        "sigma",
        "beta",
        "q",
        "n_leaves",
        "n_testfns",
        "c_cal",
        "seeds",
        "field_band",
        "periods",
        "flux_steps",
        "tol",
        "max_iter",
        "exact_m",
        "exact_kmax",
        "out_dir",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "alpha" => self.alpha = parse_list(key, value)?,
            "eps" => self.eps = parse_list(key, value)?,
            "grid_n" => self.grid_n = parse_one(key, value)?,
            "moll_scale" => self.moll_scale = parse_list(key, value)?,
            "band" => self.band = parse_one(key, value)?,
            "zero_shear" => self.zero_shear = parse_one(key, value)?,
            "sigma" => self.sigma = parse_one(key, value)?,
            "beta" => self.beta = parse_one(key, value)?,
            "q" => self.q = parse_one(key, value)?,
            "n_leaves" => self.n_leaves = parse_one(key, value)?,
            "n_testfns" => self.n_testfns = parse_one(key, value)?,
            "c_cal" => self.c_cal = parse_one(key, value)?,
            "seeds" => self.seeds = parse_list(key, value)?,
            "field_band" => self.field_band = parse_one(key, value)?,
            "periods" => self.periods = parse_one(key, value)?,
            "flux_steps" => self.flux_steps = parse_one(key, value)?,
            "tol" => self.tol = parse_one(key, value)?,
            "max_iter" => self.max_iter = parse_one(key, value)?,
            "exact_m" => self.exact_m = parse_one(key, value)?,
            "exact_kmax" => self.exact_kmax = parse_one(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value.trim()),
            _ => return Err(DynamoError::Parse(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Apply `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                DynamoError::Parse(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        c.apply_text(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Canonical `key=value` pairs in sorted key order, output directory excluded.
    pub fn canonical(&self) -> BTreeMap<&'static str, String> {
        let f = |v: &f64| format!("{v:e}");
        let fl = |v: &[f64]| v.iter().map(f).collect::<Vec<_>>().join(",");
        BTreeMap::from([
            ("alpha", join(&self.alpha)),
            ("eps", fl(&self.eps)),
            ("grid_n", self.grid_n.to_string()),
            ("moll_scale", fl(&self.moll_scale)),
            ("band", self.band.to_string()),
            ("zero_shear", self.zero_shear.to_string()),
            ("sigma", f(&self.sigma)),
            ("beta", f(&self.beta)),
            ("q", f(&self.q)),
            ("n_leaves", self.n_leaves.to_string()),
            ("n_testfns", self.n_testfns.to_string()),
            ("c_cal", f(&self.c_cal)),
            ("seeds", join(&self.seeds)),
            ("field_band", self.field_band.to_string()),
            ("periods", self.periods.to_string()),
            ("flux_steps", self.flux_steps.to_string()),
            ("tol", f(&self.tol)),
            ("max_iter", self.max_iter.to_string()),
            ("exact_m", self.exact_m.to_string()),
            ("exact_kmax", self.exact_kmax.to_string()),
        ])
    }

    /// SHA-256 of the canonical form.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.canonical() {
            h.update(format!("{k}={v}\n").as_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn alphas(&self) -> Result<Vec<Alpha>> {
        self.alpha.iter().map(|&a| Alpha::new(a)).collect()
    }

    pub fn norm_params(&self, alpha: Alpha) -> NormParams {
        NormParams {
            sigma: self.sigma,
            beta: self.beta,
            q: self.q,
            ..NormParams::defaults(alpha)
        }
        .with_samples(self.n_leaves, self.n_testfns)
    }

    /// Shear profile for mollifier scale `l`, or `g ≡ 0` when `zero_shear` is set.
    pub fn profile(&self, l: f64) -> Result<ShearProfile> {
        if self.zero_shear {
            Ok(ShearProfile::zero(self.band))
        } else {
            build_shear(l, self.band)
        }
    }

    /// Profile at the first mollifier scale.
    pub fn main_profile(&self) -> Result<ShearProfile> {
        self.profile(self.moll_scale[0])
    }

    pub fn validate(&self) -> Result<()> {
        let nonempty = |name: &str, len: usize| {
            if len == 0 {
                Err(DynamoError::InvalidParameter(format!(
                    "{name} list is empty"
                )))
            } else {
                Ok(())
            }
        };
        nonempty("alpha", self.alpha.len())?;
        nonempty("eps", self.eps.len())?;
        nonempty("moll_scale", self.moll_scale.len())?;
        nonempty("seeds", self.seeds.len())?;
        let alphas = self.alphas()?;
        check_grid(self.grid_n)?;
        if let Some(e) = self.eps.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
            return Err(DynamoError::NegativeDiffusivity(*e));
        }
        if let Some(l) = self
            .moll_scale
            .iter()
            .find(|l| !(**l >= 0.0 && l.is_finite()))
        {
            return Err(DynamoError::InvalidParameter(format!(
                "mollifier scale {l} must be >= 0"
            )));
        }
        if self.band < 1 {
            return Err(DynamoError::InvalidParameter("band must be >= 1".into()));
        }
        if 2 * self.field_band >= self.grid_n {
            return Err(DynamoError::InvalidParameter(format!(
                "field_band {} must be below grid_n/2",
                self.field_band
            )));
        }
        check_grid(self.exact_m)?;
        if 2 * self.exact_kmax >= self.exact_m || 2 * self.field_band >= self.exact_m {
            return Err(DynamoError::InvalidParameter(
                "exact_kmax and field_band must be below exact_m/2".into(),
            ));
        }
        if self.periods < 2 || self.flux_steps < 2 || self.max_iter < 1 {
            return Err(DynamoError::InvalidParameter(
                "periods and flux_steps must be >= 2, max_iter >= 1".into(),
            ));
        }
        if !(self.tol > 0.0) || !(self.c_cal > 0.0) {
            return Err(DynamoError::InvalidParameter(
                "tol and c_cal must be positive".into(),
            ));
        }
        for a in alphas {
            self.norm_params(a).validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dynamo",
    version,
    about = "Pulsed kinematic dynamo experiments"
)]
pub struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one configuration key (repeatable), e.g. --set alpha=8,16.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Output directory (overrides the config file and DYNAMO_OUT_DIR).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also render an SVG plot of the CSV.
    #[arg(long, global = true)]
    pub svg: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand, PartialEq, Eq)]
pub enum Command {
    /// Invariant suite of the map: determinants, grid bijection, shear vs matrix form,
    /// flow consistency, cones, leaf Jacobians, strip counts.
    ///
    /// map_check.csv: check,alpha,grid_n,cases,failures,worst,passed
    MapCheck,
    /// Quadrant integrals of e^{2πig}, the limit matrix and its eigenvalue per mollifier scale.
    ///
    /// limit.csv: profile,moll_scale,q1_re,q1_im,q2_re,q2_im,q3_re,q3_im,q4_re,q4_im,
    /// mu_re,mu_im,mu_abs,trace_minus_mu,det_abs,richardson_error
    Limit,
    /// Leading eigenvalue of the pulsed planar operator per (alpha, eps).
    ///
    /// eigen.csv: alpha,eps,lambda_re,lambda_im,abs_over_alpha2,mu_abs,residual,iters,status
    Eigen,
    /// Growth traces of the pulsed three-dimensional evolution per (alpha, eps).
    ///
    /// evolve.csv: alpha,eps,period,log_norm; evolve_rates.csv: alpha,eps,periods,gamma
    Evolve,
    /// Pairing error between the transfer operator and its rank-1 limit per alpha.
    ///
    /// converge.csv: alpha,exact_error,grid_error,exact_l_alpha_re,exact_l_alpha_im,
    /// exact_l_infty_re,exact_l_infty_im
    Converge,
    /// Sampled contraction and heat-continuity inequalities.
    ///
    /// norms.csv: alpha,seed,eps,check,lhs,rhs,margin,witness (negative margin = violation)
    Norms,
    /// Ideal flux pairings of the perfect-dynamo experiment per alpha.
    ///
    /// flux.csv: alpha,step,log_pairing,rate; flux_rates.csv: alpha,tail_slope,slope_bound,status
    Flux,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::MapCheck => "map_check",
            Command::Limit => "limit",
            Command::Eigen => "eigen",
            Command::Evolve => "evolve",
            Command::Converge => "converge",
            Command::Norms => "norms",
            Command::Flux => "flux",
        }
    }
}

/// Outcome of a subcommand: hard failures make the process exit with status 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommandOutcome {
    pub files: Vec<PathBuf>,
    pub hard_failures: usize,
}

/// Float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One output table.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn write(&self, path: &Path, hash: &str) -> Result<()> {
        let mut f = fs::File::create(path)?;
        writeln!(f, "# config_hash={hash}")?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Load the configuration: defaults, then file, then env output dir, then flags.
pub fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_text(&fs::read_to_string(path)?)?;
    }
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        if !dir.is_empty() {
            cfg.out_dir = PathBuf::from(dir);
        }
    }
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| DynamoError::Parse(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parse arguments, run the subcommand and return the process exit code
/// (0 success, 1 hard failure, 2 invalid configuration or usage).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return 2;
        }
    };
    match execute(cli.command, &cfg, cli.svg) {
        Ok(out) => {
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            if out.hard_failures > 0 {
                eprintln!("{} hard failure(s)", out.hard_failures);
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Run one subcommand with a validated configuration.
pub fn execute(cmd: Command, cfg: &ExperimentConfig, svg: bool) -> Result<CommandOutcome> {
    fs::create_dir_all(&cfg.out_dir)?;
    let hash = cfg.hash();
    let (tables, plot, hard_failures) = match cmd {
        Command::MapCheck => cmd_map_check(cfg)?,
        Command::Limit => cmd_limit(cfg)?,
        Command::Eigen => cmd_eigen(cfg)?,
        Command::Evolve => cmd_evolve(cfg)?,
        Command::Converge => cmd_converge(cfg)?,
        Command::Norms => cmd_norms(cfg)?,
        Command::Flux => cmd_flux(cfg)?,
    };
    let mut files = Vec::new();
    for (name, table) in tables {
        let path = cfg.out_dir.join(format!("{name}.csv"));
        table.write(&path, &hash)?;
        files.push(path);
    }
    if svg {
        if let Some(p) = plot {
            let path = cfg.out_dir.join(format!("{}.svg", cmd.name()));
            fs::write(&path, p.render(&hash))?;
            files.push(path);
        }
    }
    Ok(CommandOutcome {
        files,
        hard_failures,
    })
}

type Tables = (Vec<(String, Table)>, Option<Plot>, usize);

/// Smallest shear strength for which the cone and Jacobian bounds are asserted.
pub const CONE_ALPHA_MIN: u32 = 4;

fn cmd_map_check(cfg: &ExperimentConfig) -> Result<Tables> {
    let mut t = Table::new(&[
        "check", "alpha", "grid_n", "cases", "failures", "worst", "passed",
    ]);
    let mut failures = 0;
    let zero = ShearProfile::zero(4);
    let mut record =
        |t: &mut Table, name: &str, a: Alpha, n: usize, cases: usize, fails: usize, worst: f64| {
            failures += usize::from(fails > 0);
            t.push(vec![
                name.to_string(),
                a.to_string(),
                n.to_string(),
                cases.to_string(),
                fails.to_string(),
                fmt_f64(worst),
                (fails == 0).to_string(),
            ]);
        };
    for &alpha in &cfg.alphas()? {
        let a = alpha.as_f64();
        let dets = BranchMatrix::all(alpha)
            .iter()
            .filter(|m| m.det() != 1)
            .count();
        record(&mut t, "determinant", alpha, 0, 4, dets, 0.0);
        let table = grid_pullback_table(cfg.grid_n, alpha)?;
        record(
            &mut t,
            "grid_bijection",
            alpha,
            cfg.grid_n,
            1,
            usize::from(!table.is_bijection()),
            0.0,
        );

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seeds[0]);
        let cases = 10_000;
        let (mut ws, mut wf, mut fs_, mut ff) = (0.0f64, 0.0f64, 0, 0);
        let (mut cone_fail, mut jac_fail, mut wj) = (0, 0, 0.0f64);
        for _ in 0..cases {
            let p = TorusPoint::new(rng.gen(), rng.gen());
            let q = apply_map(p, alpha);
            let region = forward_region(p, alpha);
            let m = BranchMatrix::for_branch(region.index, alpha);
            let v = m.apply([p.x, p.y]);
            let ds = q.distance(&TorusPoint::new(wrap_unit(v[0]), wrap_unit(v[1])));
            ws = ws.max(ds);
            fs_ += usize::from(ds > 1e-12);
            let f = flow_map(1.0, Point3::new(p.x, p.y, 0.0), alpha, &zero)?;
            let df = q.distance(&f.planar());
            wf = wf.max(df);
            ff += usize::from(df > 1e-12);

            // cone invariance and expansion: DT maps the unstable cone into itself, DT⁻¹ the stable cone
            let sl: f64 = rng.gen_range(-1.0..=1.0);
            let uv = [1.0, sl * 2.0 / a];
            let u = m.apply(uv);
            let st = m.apply_inverse([uv[1], uv[0]]);
            let grow = u[0].hypot(u[1]) >= 0.5 * alpha.squared() * uv[0].hypot(uv[1]);
            if !in_unstable_cone(u, alpha)? || !in_stable_cone(st, alpha)? || !grow {
                cone_fail += 1;
            }
            let dir = [uv[1], uv[0]];
            let norm = dir[0].hypot(dir[1]);
            let j = leaf_jacobian(
                [dir[0] / norm, dir[1] / norm],
                RegionId::backward(region.index),
                alpha,
            )?;
            wj = wj.max(j * alpha.squared());
            jac_fail += usize::from(j > 2.0 / alpha.squared() * (1.0 + 1e-12));
        }
        record(&mut t, "shear_vs_matrix", alpha, 0, cases, fs_, ws);
        record(&mut t, "flow_time_one", alpha, 0, cases, ff, wf);
        if alpha.get() >= CONE_ALPHA_MIN {
            record(&mut t, "cone_invariance", alpha, 0, cases, cone_fail, 0.0);
            record(
                &mut t,
                "leaf_jacobian_times_alpha2",
                alpha,
                0,
                cases,
                jac_fail,
                wj,
            );
        } else {
            for name in ["cone_invariance", "leaf_jacobian_times_alpha2"] {
                t.push(vec![
                    name.into(),
                    alpha.to_string(),
                    "0".into(),
                    "0".into(),
                    "0".into(),
                    fmt_f64(0.0),
                    "skipped".into(),
                ]);
            }
        }

        let leaves = 1000;
        let piece_fail = (0..leaves as u64)
            .filter(|&s| {
                let w = sample_leaf(s, alpha);
                subdivide_by_strips(&w, alpha).len() > strip_piece_bound(&w, alpha)
            })
            .count();
        record(
            &mut t,
            "strip_piece_bound",
            alpha,
            0,
            leaves,
            piece_fail,
            0.0,
        );
    }
    Ok((vec![("map_check".into(), t)], None, failures))
}

fn cmd_limit(cfg: &ExperimentConfig) -> Result<Tables> {
    let mut t = Table::new(&[
        "profile",
        "moll_scale",
        "q1_re",
        "q1_im",
        "q2_re",
        "q2_im",
        "q3_re",
        "q3_im",
        "q4_re",
        "q4_im",
        "mu_re",
        "mu_im",
        "mu_abs",
        "trace_minus_mu",
        "det_abs",
        "richardson_error",
    ]);
    let mut profiles: Vec<(f64, ShearProfile)> = cfg
        .moll_scale
        .iter()
        .map(|&l| Ok((l, cfg.profile(l)?)))
        .collect::<Result<_>>()?;
    if !cfg.zero_shear {
        profiles.push((0.0, ShearProfile::zero(cfg.band)));
    }
    let rows: Vec<Result<Vec<String>>> = profiles
        .par_iter()
        .map(|(l, p)| {
            let m = limit_matrix(p)?;
            let kind = match p.kind() {
                ProfileKind::Mollified => "mollified",
                ProfileKind::Indicator => "indicator",
                ProfileKind::Zero => "zero",
            };
            let mut row = vec![kind.to_string(), fmt_f64(*l)];
            for v in m.quadrants.values {
                row.push(fmt_f64(v.re));
                row.push(fmt_f64(v.im));
            }
            row.extend([
                fmt_f64(m.mu.re),
                fmt_f64(m.mu.im),
                fmt_f64(m.mu.norm()),
                fmt_f64((m.trace() - m.mu).norm()),
                fmt_f64(m.det().norm()),
                fmt_f64(m.quadrants.richardson_error),
            ]);
            Ok(row)
        })
        .collect();
    let mut plot = Plot::new("limit eigenvalue", "moll_scale", "|mu|", false);
    let mut pts = Vec::new();
    for (r, (l, p)) in rows.into_iter().zip(&profiles) {
        let r = r?;
        if p.kind() != ProfileKind::Zero {
            pts.push((*l, r[12].parse::<f64>().unwrap_or(f64::NAN)));
        }
        t.push(r);
    }
    plot.series("|mu|", pts);
    Ok((vec![("limit".into(), t)], Some(plot), 0))
}

fn cells(cfg: &ExperimentConfig) -> Result<Vec<(Alpha, f64)>> {
    let alphas = cfg.alphas()?;
    Ok(alphas
        .iter()
        .flat_map(|&a| cfg.eps.iter().map(move |&e| (a, e)))
        .collect())
}

fn cmd_eigen(cfg: &ExperimentConfig) -> Result<Tables> {
    let profile = cfg.main_profile()?;
    let mu_abs = limit_matrix(&profile)?.mu.norm();
    let cells = cells(cfg)?;
    let results: Vec<Result<(Alpha, f64, Complex64, f64, usize, &'static str)>> = cells
        .par_iter()
        .map(|&(alpha, eps)| {
            let ctx = OperatorContext::new(alpha, cfg.grid_n, &profile, eps)?;
            match leading_eigen(&ctx, cfg.seeds[0], cfg.tol, cfg.max_iter) {
                Ok((r, _)) => Ok((
                    alpha,
                    eps,
                    r.lambda,
                    r.residual,
                    r.iters,
                    if r.converged { "converged" } else { "max_iter" },
                )),
                Err(_) => Ok((
                    alpha,
                    eps,
                    Complex64::new(f64::NAN, f64::NAN),
                    f64::NAN,
                    0,
                    "error",
                )),
            }
        })
        .collect();
    let mut t = Table::new(&[
        "alpha",
        "eps",
        "lambda_re",
        "lambda_im",
        "abs_over_alpha2",
        "mu_abs",
        "residual",
        "iters",
        "status",
    ]);
    let mut plot = Plot::new("leading eigenvalue", "alpha", "|lambda|/alpha^2", true);
    let mut by_eps: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in results {
        let (alpha, eps, lam, res, iters, status) = r?;
        let a2 = alpha.squared();
        t.push(vec![
            alpha.to_string(),
            fmt_f64(eps),
            fmt_f64(lam.re * a2),
            fmt_f64(lam.im * a2),
            fmt_f64(lam.norm()),
            fmt_f64(mu_abs),
            fmt_f64(res),
            iters.to_string(),
            status.to_string(),
        ]);
        by_eps
            .entry(format!("eps={eps:e}"))
            .or_default()
            .push((alpha.as_f64(), lam.norm()));
    }
    for (k, v) in by_eps {
        plot.series(&k, v);
    }
    Ok((vec![("eigen".into(), t)], Some(plot), 0))
}

fn cmd_evolve(cfg: &ExperimentConfig) -> Result<Tables> {
    let profile = cfg.main_profile()?;
    let b0 = random_div_free(cfg.seeds[0], cfg.field_band, cfg.grid_n)?;
    let cells = cells(cfg)?;
    let traces: Vec<Result<_>> = cells
        .par_iter()
        .map(|&(alpha, eps)| {
            let ctx = OperatorContext::new(alpha, cfg.grid_n, &profile, eps)?;
            Ok(evolve_and_trace(&b0, &ctx, cfg.periods)?.0)
        })
        .collect();
    let mut t = Table::new(&["alpha", "eps", "period", "log_norm"]);
    let mut s = Table::new(&["alpha", "eps", "periods", "gamma"]);
    let mut plot = Plot::new("pulsed growth", "period", "log norm", false);
    for tr in traces {
        let tr = tr?;
        for (k, l) in tr.log_norms.iter().enumerate() {
            t.push(vec![
                tr.alpha.to_string(),
                fmt_f64(tr.eps),
                k.to_string(),
                fmt_f64(*l),
            ]);
        }
        s.push(vec![
            tr.alpha.to_string(),
            fmt_f64(tr.eps),
            tr.periods.to_string(),
            fmt_f64(tr.gamma),
        ]);
        plot.series(
            &format!("alpha={} eps={:e}", tr.alpha, tr.eps),
            tr.log_norms
                .iter()
                .enumerate()
                .map(|(k, l)| (k as f64, *l))
                .collect(),
        );
    }
    Ok((
        vec![("evolve".into(), t), ("evolve_rates".into(), s)],
        Some(plot),
        0,
    ))
}

fn cmd_converge(cfg: &ExperimentConfig) -> Result<Tables> {
    let profile = cfg.main_profile()?;
    let alphas = cfg.alphas()?;
    let h = BandLimited::random(cfg.seeds[0], cfg.field_band);
    let phi = BandLimited::random(cfg.seeds[0].wrapping_add(1), cfg.field_band);
    let route = ExactRoute {
        m: cfg.exact_m,
        k_max: cfg.exact_kmax,
    };
    let rows = limit_convergence_experiment(&alphas, &h, &phi, &profile, cfg.grid_n, route)?;
    let mut t = Table::new(&[
        "alpha",
        "exact_error",
        "grid_error",
        "exact_l_alpha_re",
        "exact_l_alpha_im",
        "exact_l_infty_re",
        "exact_l_infty_im",
    ]);
    let mut plot = Plot::new(
        "distance to the rank-1 limit",
        "alpha",
        "pairing error",
        true,
    );
    plot.log_y = true;
    for r in &rows {
        t.push(vec![
            r.alpha.to_string(),
            fmt_f64(r.exact_error),
            fmt_f64(r.grid_error),
            fmt_f64(r.exact_l_alpha.re),
            fmt_f64(r.exact_l_alpha.im),
            fmt_f64(r.exact_l_infty.re),
            fmt_f64(r.exact_l_infty.im),
        ]);
    }
    plot.series(
        "exact",
        rows.iter()
            .map(|r| (r.alpha.as_f64(), r.exact_error))
            .collect(),
    );
    plot.series(
        "grid",
        rows.iter()
            .map(|r| (r.alpha.as_f64(), r.grid_error))
            .collect(),
    );
    Ok((vec![("converge".into(), t)], Some(plot), 0))
}

fn cmd_norms(cfg: &ExperimentConfig) -> Result<Tables> {
    let profile = cfg.main_profile()?;
    let mut t = Table::new(&[
        "alpha", "seed", "eps", "check", "lhs", "rhs", "margin", "witness",
    ]);
    let mut violations = 0;
    let mut jobs = Vec::new();
    for &alpha in &cfg.alphas()? {
        for &seed in &cfg.seeds {
            jobs.push((alpha, seed));
        }
    }
    let reports: Vec<Result<Vec<(Alpha, u64, f64, crate::norms::MarginReport)>>> = jobs
        .iter()
        .map(|&(alpha, seed)| {
            let params = cfg.norm_params(alpha);
            let h = random_field(seed, 1.0, cfg.field_band, cfg.grid_n)?;
            let ctx = OperatorContext::new(alpha, cfg.grid_n, &profile, 0.0)?;
            let mut out = vec![(
                alpha,
                seed,
                0.0,
                ly_check(&h, &ctx, &params, cfg.c_cal, seed)?,
            )];
            for &eps in cfg.eps.iter().filter(|e| **e > 0.0) {
                out.push((alpha, seed, eps, heat_weak_check(&h, eps, &params, seed)?));
            }
            Ok(out)
        })
        .collect();
    for r in reports {
        for (alpha, seed, eps, rep) in r? {
            violations += rep.rows.iter().filter(|row| row.margin < 0.0).count();
            for row in &rep.rows {
                t.push(vec![
                    alpha.to_string(),
                    seed.to_string(),
                    fmt_f64(eps),
                    row.check.clone(),
                    fmt_f64(row.lhs),
                    fmt_f64(row.rhs),
                    fmt_f64(row.margin),
                    row.witness.clone(),
                ]);
            }
        }
    }
    Ok((vec![("norms".into(), t)], None, violations))
}

fn cmd_flux(cfg: &ExperimentConfig) -> Result<Tables> {
    let profile = cfg.main_profile()?;
    let b0 = random_field(cfg.seeds[0], 1.0, cfg.field_band.min(4), cfg.grid_n)?;
    let alphas = cfg.alphas()?;
    let series: Vec<Result<(Alpha, Option<crate::spectral::FluxSeries>)>> = alphas
        .par_iter()
        .map(|&alpha| {
            let ctx = OperatorContext::new(alpha, cfg.grid_n, &profile, 0.0)?;
            for k in 1..=8u64 {
                let psi = random_field(
                    cfg.seeds[0].wrapping_add(k),
                    1.0,
                    cfg.field_band.min(4),
                    cfg.grid_n,
                )?;
                let s = flux_experiment(&b0, &psi, &ctx, cfg.flux_steps)?;
                if s.witness_ok() {
                    return Ok((alpha, Some(s)));
                }
            }
            Ok((alpha, None))
        })
        .collect();
    let mut t = Table::new(&["alpha", "step", "log_pairing", "rate"]);
    let mut s = Table::new(&["alpha", "tail_slope", "slope_bound", "status"]);
    let mut plot = Plot::new("ideal flux pairing", "step", "log |pairing|", false);
    let mut lost = 0;
    for r in series {
        let (alpha, fs_) = r?;
        match fs_ {
            Some(f) => {
                for (k, (lp, rate)) in f.log_pairings.iter().zip(&f.rates).enumerate() {
                    t.push(vec![
                        alpha.to_string(),
                        (k + 1).to_string(),
                        fmt_f64(*lp),
                        fmt_f64(*rate),
                    ]);
                }
                let bound = flux_slope_bound(alpha);
                let status = if f.tail_slope <= bound {
                    "ok"
                } else {
                    "above_bound"
                };
                s.push(vec![
                    alpha.to_string(),
                    fmt_f64(f.tail_slope),
                    fmt_f64(bound),
                    status.into(),
                ]);
                plot.series(
                    &format!("alpha={alpha}"),
                    f.log_pairings
                        .iter()
                        .enumerate()
                        .map(|(k, l)| ((k + 1) as f64, *l))
                        .collect(),
                );
            }
            None => {
                lost += 1;
                s.push(vec![
                    alpha.to_string(),
                    fmt_f64(f64::NAN),
                    fmt_f64(flux_slope_bound(alpha)),
                    "witness_lost".into(),
                ]);
            }
        }
    }
    Ok((
        vec![("flux".into(), t), ("flux_rates".into(), s)],
        Some(plot),
        lost,
    ))
}

/// Minimal line plot rendered as SVG.
#[derive(Debug, Clone)]
pub struct Plot {
    title: String,
    x_label: String,
    y_label: String,
    log_x: bool,
    log_y: bool,
    series: Vec<(String, Vec<(f64, f64)>)>,
}

const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str, log_x: bool) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x,
            log_y: false,
            series: Vec::new(),
        }
    }

    pub fn series(&mut self, name: &str, pts: Vec<(f64, f64)>) {
        self.series.push((name.into(), pts));
    }

    /// SVG document; the config hash is embedded as a comment.
    pub fn render(&self, hash: &str) -> String {
        let (w, h, m) = (640.0, 420.0, 60.0);
        let tx = |v: f64| if self.log_x { v.log10() } else { v };
        let ty = |v: f64| if self.log_y { v.log10() } else { v };
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|(_, p)| p.iter().map(|&(x, y)| (tx(x), ty(y))))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        let range = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            });
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-300 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = range(&mut pts.iter().map(|p| p.0));
        let (y0, y1) = range(&mut pts.iter().map(|p| p.1));
        let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
        let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(s, "<!-- config_hash={hash} -->");
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
            w / 2.0,
            self.title
        );
        let _ = writeln!(
            s,
            r#"<line x1="{m}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{m}" y1="{m}" x2="{m}" y2="{}" stroke="black"/>"#,
            h - m,
            w - m,
            h - m,
            h - m
        );
        let lx = if self.log_x {
            format!("log10 {}", self.x_label)
        } else {
            self.x_label.clone()
        };
        let ly = if self.log_y {
            format!("log10 {}", self.y_label)
        } else {
            self.y_label.clone()
        };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{lx}</text>"#,
            w / 2.0,
            h - 15.0
        );
        let _ = writeln!(
            s,
            r#"<text x="15" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 15 {})">{ly}</text>"#,
            h / 2.0,
            h / 2.0
        );
        for (v, x) in [(x0, sx(x0)), (x1, sx(x1))] {
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{}" text-anchor="middle" font-size="10">{v:.3}</text>"#,
                h - m + 14.0
            );
        }
        for (v, y) in [(y0, sy(y0)), (y1, sy(y1))] {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{y}" text-anchor="end" font-size="10">{v:.3}</text>"#,
                m - 4.0
            );
        }
        for (i, (name, p)) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let path: Vec<String> = p
                .iter()
                .map(|&(x, y)| (tx(x), ty(y)))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="11" fill="{color}">{name}</text>"#,
                w - m - 150.0,
                m + 14.0 * (i as f64 + 1.0)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_dir(tag: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("dynamo-cli-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&d);
        d
    }

    #[test]
    fn config_parsing_and_overrides() {
        let c =
            ExperimentConfig::from_text("alpha = 8, 16 # comment\neps=1e-3,1e-4\ngrid_n = 64\n")
                .unwrap();
        assert_eq!(c.alpha, vec![8, 16]);
        assert_eq!(c.eps, vec![1e-3, 1e-4]);
        assert_eq!(c.grid_n, 64);
        assert!(ExperimentConfig::from_text("grid_n = 63").is_err());
        assert!(ExperimentConfig::from_text("alpha = 3").is_err());
        assert!(ExperimentConfig::from_text("beta = 0.45").is_err());
        assert!(ExperimentConfig::from_text("bogus = 1").is_err());
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.out_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.set("alpha", "8").unwrap();
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn odd_grid_exits_with_two() {
        let dir = tmp_dir("odd");
        let code = run([
            "dynamo",
            "--out",
            dir.to_str().unwrap(),
            "--set",
            "grid_n=63",
            "map-check",
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn map_check_smoke_is_fast_and_reproducible() {
        let dir = tmp_dir("map");
        let args = [
            "dynamo",
            "--out",
            dir.to_str().unwrap(),
            "--set",
            "alpha=2",
            "--set",
            "grid_n=64",
            "map-check",
        ];
        let start = std::time::Instant::now();
        assert_eq!(run(args), 0);
        assert!(start.elapsed().as_secs_f64() < 1.0);
        let first = fs::read(dir.join("map_check.csv")).unwrap();
        assert_eq!(run(args), 0);
        assert_eq!(first, fs::read(dir.join("map_check.csv")).unwrap());
        let text = String::from_utf8(first).unwrap();
        assert!(text.starts_with("# config_hash="));
        assert!(!text.contains(",false"));
        let _ = fs::remove_dir_all(dir);
    }

    #[test]
    fn limit_rows_and_svg() {
        let dir = tmp_dir("limit");
        let args = [
            "dynamo",
            "--out",
            dir.to_str().unwrap(),
            "--svg",
            "--set",
            "moll_scale=0,0.02",
            "--set",
            "grid_n=64",
            "limit",
        ];
        assert_eq!(run(args), 0);
        let text = fs::read_to_string(dir.join("limit.csv")).unwrap();
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 3);
        let mu = |r: &csv::StringRecord| r[12].parse::<f64>().unwrap();
        assert!((mu(&rows[0]) - 1.0).abs() < 1e-4);
        assert!(mu(&rows[1]) >= 0.5);
        assert_eq!(&rows[2][0], "zero");
        assert!(mu(&rows[2]) < 1e-12);
        assert!(fs::read_to_string(dir.join("limit.svg"))
            .unwrap()
            .starts_with("<svg"));
        let _ = fs::remove_dir_all(dir);
    }

    #[test]
    fn small_sweeps_run() {
        let dir = tmp_dir("sweep");
        let base = [
            "--out",
            dir.to_str().unwrap(),
            "--set",
            "grid_n=32",
            "--set",
            "alpha=4",
            "--set",
            "band=16",
        ];
        for cmd in ["eigen", "evolve", "flux"] {
            let mut args = vec!["dynamo"];
            args.extend(base);
            args.extend([
                "--set",
                "field_band=4",
                "--set",
                "periods=4",
                "--set",
                "flux_steps=4",
                cmd,
            ]);
            assert_eq!(run(args), 0, "{cmd}");
        }
        let mut args = vec!["dynamo"];
        args.extend(base);
        args.extend([
            "--set",
            "exact_m=32",
            "--set",
            "exact_kmax=15",
            "--set",
            "field_band=2",
            "--set",
            "alpha=4,8",
            "converge",
        ]);
        assert_eq!(run(args), 0);
        let mut args = vec!["dynamo"];
        args.extend(base);
        args.extend([
            "--set",
            "n_leaves=8",
            "--set",
            "n_testfns=2",
            "--set",
            "field_band=4",
            "norms",
        ]);
        assert_eq!(run(args), 0);
        let _ = fs::remove_dir_all(dir);
    }
}
