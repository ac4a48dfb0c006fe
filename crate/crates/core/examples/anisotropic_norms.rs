//! Sampled weak, strong-stable and strong-unstable norms, and the contraction and heat checks with margins.
//!
//! cargo run --release --example anisotropic_norms

use pulsed_dynamo::fields::random_field;
use pulsed_dynamo::map::Alpha;
use pulsed_dynamo::norms::{heat_weak_check, indicator_field, ly_check, norm_report, NormParams};
use pulsed_dynamo::operators::OperatorContext;
use pulsed_dynamo::shear::build_shear;
use pulsed_dynamo::Complex64;

fn main() -> pulsed_dynamo::Result<()> {
    let n = 256;
    let alpha = Alpha::new(16)?;
    let params = NormParams::defaults(alpha).with_samples(256, 8);
    let ind = indicator_field(n, [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)])?;
    let r = norm_report(&ind, &params, 7);
    println!(
        "indicator field: weak {:.4}, stable {:.4}, unstable {:.4}",
        r.weak.value, r.strong_stable.value, r.strong_unstable.value
    );
    if let Some(w) = &r.strong_unstable.witness {
        println!("  unstable witness: {}", w.describe());
    }
    let h = random_field(11, 1.0, 8, n)?;
    let ctx = OperatorContext::new(alpha, n, &build_shear(0.02, 128)?, 0.0)?;
    let ly = ly_check(&h, &ctx, &params, 100.0, 11)?;
    for row in &ly.rows {
        println!(
            "{}: lhs {:.4e} rhs {:.4e} margin {:.4e}",
            row.check, row.lhs, row.rhs, row.margin
        );
    }
    let heat = heat_weak_check(&h, 1e-3, &params, 11)?;
    println!(
        "heat check passed: {}, min margin {:.4e}",
        heat.passed(),
        heat.min_margin()
    );
    Ok(())
}
