//! Leading eigenvalue of the one-period operator by power iteration, compared with the limit `|μ|`.
//!
//! cargo run --release --example leading_eigenvalue

use pulsed_dynamo::map::Alpha;
use pulsed_dynamo::shear::build_shear;
use pulsed_dynamo::spectral::eigen_vs_alpha;

fn main() -> pulsed_dynamo::Result<()> {
    let profile = build_shear(0.02, 128)?;
    let alphas = [Alpha::new(8)?, Alpha::new(16)?, Alpha::new(32)?];
    for row in eigen_vs_alpha(&alphas, 1e-3, &profile, 256, 1, 1e-9, 5000)? {
        println!(
            "alpha {:>2}: lambda/alpha^2 = {:.5}, |.| = {:.5}, |mu| = {:.5}, residual {:.1e}, {} iterations",
            row.alpha,
            row.lambda,
            row.lambda.norm(),
            row.mu_abs,
            row.residual,
            row.iters
        );
    }
    Ok(())
}
