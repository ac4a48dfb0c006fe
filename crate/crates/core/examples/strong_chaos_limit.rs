//! Convergence of twisted pairings `⟨e^{2πig}L_α h, φ⟩` to the rank-1 limit as `α` grows, by grid and exact Fourier routes.
//!
//! cargo run --release --example strong_chaos_limit

use pulsed_dynamo::map::Alpha;
use pulsed_dynamo::shear::build_shear;
use pulsed_dynamo::spectral::{limit_convergence_experiment, BandLimited, ExactRoute};

fn main() -> pulsed_dynamo::Result<()> {
    let alphas = [
        Alpha::new(8)?,
        Alpha::new(16)?,
        Alpha::new(32)?,
        Alpha::new(64)?,
    ];
    let rows = limit_convergence_experiment(
        &alphas,
        &BandLimited::random(1, 8),
        &BandLimited::random(2, 8),
        &build_shear(0.02, 128)?,
        256,
        ExactRoute::default(),
    )?;
    for r in rows {
        println!(
            "alpha {:>2}: exact error {:.4e}, grid error {:.4e}, limit pairing {:.4e}",
            r.alpha,
            r.exact_error,
            r.grid_error,
            r.exact_l_infty.norm()
        );
    }
    Ok(())
}
