//! The planar transfer operator, its rank-1 limit and the heat-smoothed one-period operator on a random field.
//!
//! cargo run --release --example transfer_operators

use pulsed_dynamo::fields::{random_field, FieldVector};
use pulsed_dynamo::map::Alpha;
use pulsed_dynamo::operators::{
    apply_l_alpha, apply_l_infty, apply_p_eps_normalized, OperatorContext,
};
use pulsed_dynamo::shear::build_shear;

fn main() -> pulsed_dynamo::Result<()> {
    let n = 128;
    let profile = build_shear(0.02, 64)?;
    let h = random_field(3, 1.0, 6, n)?;
    let linf = apply_l_infty(&h)?;
    println!(
        "|h| = {:.4e}, |L_inf h| = {:.4e}, |L_inf^2 h| = {:.1e}",
        h.norm(),
        linf.norm(),
        apply_l_infty(&linf)?.norm()
    );
    for a in [4, 8, 16] {
        let ctx = OperatorContext::new(Alpha::new(a)?, n, &profile, 1e-3)?;
        let l = apply_l_alpha(&h, &ctx)?;
        let p = apply_p_eps_normalized(&h, &ctx)?;
        println!(
            "alpha {a:>2}: |L_alpha h| = {:.4e}, |alpha^-2 P_eps h| = {:.4e}",
            l.norm(),
            p.norm()
        );
    }
    Ok(())
}
