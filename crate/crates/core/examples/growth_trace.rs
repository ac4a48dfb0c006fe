//! Pulsed evolution of a divergence-free field: per-period norms and the fitted growth rate, with and without shear.
//!
//! cargo run --release --example growth_trace

use pulsed_dynamo::map::Alpha;
use pulsed_dynamo::operators::OperatorContext;
use pulsed_dynamo::shear::{build_shear, ShearProfile};
use pulsed_dynamo::spectral::{evolve_and_trace, random_div_free};

fn main() -> pulsed_dynamo::Result<()> {
    let n = 256;
    let b0 = random_div_free(5, 8, n)?;
    for (name, profile) in [
        ("shear", build_shear(0.02, 128)?),
        ("no shear", ShearProfile::zero(4)),
    ] {
        let ctx = OperatorContext::new(Alpha::new(16)?, n, &profile, 1e-3)?;
        let (trace, _) = evolve_and_trace(&b0, &ctx, 20)?;
        let tail: Vec<String> = trace
            .log_norms
            .iter()
            .rev()
            .take(4)
            .rev()
            .map(|v| format!("{v:.3}"))
            .collect();
        println!(
            "{name}: gamma = {:.4}, last log-norms {}",
            trace.gamma,
            tail.join(" ")
        );
    }
    Ok(())
}
