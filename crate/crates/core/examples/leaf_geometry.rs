//! Stable leaves: sampling in the cone, strip subdivision, preimage decomposition and the leaf distance.
//!
//! cargo run --release --example leaf_geometry

use pulsed_dynamo::leaves::{
    d_sigma, preimage_decompose_detailed, sample_leaf, strip_piece_bound,
    subdivide_by_strips_detailed,
};
use pulsed_dynamo::map::Alpha;

fn main() -> pulsed_dynamo::Result<()> {
    let alpha = Alpha::new(8)?;
    let w = sample_leaf(1, alpha);
    println!(
        "leaf base ({:.4}, {:.4}) dir {:?} len {:.4}",
        w.base().x,
        w.base().y,
        w.dir(),
        w.len()
    );
    let pieces = subdivide_by_strips_detailed(&w, alpha);
    println!(
        "{} homogeneous pieces (bound {})",
        pieces.len(),
        strip_piece_bound(&w, alpha)
    );
    for p in pieces.iter().take(5) {
        println!(
            "  t in [{:.4}, {:.4}) region {}",
            p.t0, p.t1, p.region.index
        );
    }
    let pre = preimage_decompose_detailed(&w, alpha)?;
    let total: f64 = pre.iter().map(|p| p.leaf.len()).sum();
    println!(
        "{} preimage pieces, total length {:.4} (stretch factor {:.4})",
        pre.len(),
        total,
        total / w.len()
    );
    let v = sample_leaf(2, alpha);
    println!("d_sigma(w, w') = {:.4}", d_sigma(&w, &v));
    Ok(())
}
