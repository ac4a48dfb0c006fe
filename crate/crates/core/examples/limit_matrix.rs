//! Quadrant integrals of `e^{2πig}` and the rank-1 limit eigenvalue `μ` for several mollification scales.
//!
//! cargo run --release --example limit_matrix

use pulsed_dynamo::shear::{build_shear, limit_matrix};

fn main() -> pulsed_dynamo::Result<()> {
    for scale in [0.0, 0.01, 0.02, 0.05, 0.1] {
        let m = limit_matrix(&build_shear(scale, 128)?)?;
        let q = m.quadrants.values;
        println!(
            "l={scale:<5} quadrants [{:.4}, {:.4}, {:.4}, {:.4}] mu={:.5} |mu|={:.5}",
            q[0],
            q[1],
            q[2],
            q[3],
            m.mu,
            m.mu.norm()
        );
    }
    Ok(())
}
