//! Branch matrices, forward/backward regions and the exact lattice pullback of the pulsed map.
//!
//! cargo run --release --example map_geometry

use pulsed_dynamo::map::{
    apply_inverse, apply_map, forward_region, grid_pullback_table, in_unstable_cone, Alpha,
    BranchMatrix, TorusPoint,
};

fn main() -> pulsed_dynamo::Result<()> {
    let alpha = Alpha::new(4)?;
    for m in BranchMatrix::all(alpha) {
        println!("branch {}: {:?} det {}", m.region.index, m.entries, m.det());
    }
    let p = TorusPoint::new(0.3, 0.7);
    let q = apply_map(p, alpha);
    println!(
        "T({:.3}, {:.3}) = ({:.6}, {:.6}) via branch {}; inverse error {:.1e}",
        p.x,
        p.y,
        q.x,
        q.y,
        forward_region(p, alpha).index,
        apply_inverse(q, alpha).distance(&p)
    );
    println!(
        "(1, 0.1) in unstable cone: {}",
        in_unstable_cone([1.0, 0.1], alpha)?
    );
    for n in [8, 64, 512] {
        let t = grid_pullback_table(n, alpha)?;
        println!(
            "N={n}: lattice pullback is a permutation: {}",
            t.is_bijection()
        );
    }
    Ok(())
}
