//! Calibration run for the sampled contraction inequalities: with unit constant
//! the ratio LHS/RHS of each inequality is reported over a calibration seed set,
//! then the strong-stable ratio ‖e^{2πig}L_α h‖_s / ‖h‖_s is traced across α.
//!
//! cargo run --release --example contraction_calibration

use pulsed_dynamo::fields::{random_field, ScalarField};
use pulsed_dynamo::map::{Alpha, TorusPoint};
use pulsed_dynamo::norms::{ly_check, norm_report_on, NormParams, PointwiseField, SampleSet};
use pulsed_dynamo::operators::{l_alpha_at, OperatorContext};
use pulsed_dynamo::shear::build_shear;
use pulsed_dynamo::Complex64;

const CALIBRATION_SEEDS: [u64; 5] = [100, 101, 102, 103, 104];

fn main() -> pulsed_dynamo::Result<()> {
    let n = 256;
    let profile = build_shear(0.02, 128)?;
    let alpha = Alpha::new(16)?;
    let ctx = OperatorContext::new(alpha, n, &profile, 0.0)?;
    let params = NormParams::defaults(alpha);
    let mut worst = [0.0f64; 3];
    for seed in CALIBRATION_SEEDS {
        let h = random_field(seed, 1.0, 8, n)?;
        let rep = ly_check(&h, &ctx, &params, 1.0, seed)?;
        for (w, row) in worst.iter_mut().zip(&rep.rows) {
            *w = w.max(row.lhs / row.rhs);
        }
        println!(
            "seed {seed}: {}",
            rep.rows
                .iter()
                .map(|r| format!("{} {:.3}", r.check, r.lhs / r.rhs))
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    println!(
        "max LHS/RHS at unit constant: weak {:.3}, stable {:.3}, unstable {:.3}",
        worst[0], worst[1], worst[2]
    );

    println!("\nstrong-stable ratio across alpha (pointwise along leaves, h with vanishing rank-1 component):");
    let fine = 2048;
    let g = profile.sample_grid(fine, [0.0, 0.0])?;
    let phase = ScalarField::from_vec(
        fine,
        g.g.iter()
            .map(|v| Complex64::from_polar(1.0, std::f64::consts::TAU * v))
            .collect(),
    )?;
    // depends on y only, so the odd-in-x moment that feeds the limit vanishes
    let h = |p: TorusPoint| {
        let c = (std::f64::consts::TAU * p.y).cos();
        [Complex64::new(c, 0.0), Complex64::new(0.5 * c, 0.0)]
    };
    for a in [8, 16, 32] {
        let alpha = Alpha::new(a)?;
        let params = NormParams::defaults(alpha).with_samples(256, 8);
        let before = PointwiseField {
            f: h,
            nodes_per_unit: 512,
        };
        let after = PointwiseField {
            f: |p: TorusPoint| {
                let e = phase.bilinear(p.x, p.y);
                let v = l_alpha_at(p, alpha, h);
                [e * v[0], e * v[1]]
            },
            nodes_per_unit: 64 * (a as usize) * (a as usize),
        };
        let r0 = norm_report_on(&before, &SampleSet::new(5, &params), &params)
            .strong_stable
            .value;
        let r1 = norm_report_on(&after, &SampleSet::new(5, &params), &params)
            .strong_stable
            .value;
        println!("alpha {a:>2}: {:.4e}", r1 / r0);
    }
    Ok(())
}
