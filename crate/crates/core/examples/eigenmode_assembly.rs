//! Full three-component eigenmode: the planar eigenvector plus the vertical component from the resolvent.
//!
//! cargo run --release --example eigenmode_assembly

use pulsed_dynamo::fields::{relative_divergence, FieldVector};
use pulsed_dynamo::map::Alpha;
use pulsed_dynamo::operators::OperatorContext;
use pulsed_dynamo::shear::build_shear;
use pulsed_dynamo::spectral::assemble_eigenmode;

fn main() -> pulsed_dynamo::Result<()> {
    let ctx = OperatorContext::new(Alpha::new(16)?, 256, &build_shear(0.02, 128)?, 1e-3)?;
    let (mode, lambda, report) = assemble_eigenmode(&ctx, 1, 1e-10, 5000)?;
    println!(
        "lambda = {lambda:.5} (|lambda| = {:.4}), {} iterations",
        lambda.norm(),
        report.iters
    );
    println!(
        "|h| = {:.4e}, |H| = {:.4e}, relative divergence {:.3e}",
        mode.h.norm(),
        mode.h3.norm(),
        relative_divergence(&mode)
    );
    Ok(())
}
