//! Builds the weak cubic-phase state both ways and prints its photon
//! statistics and Wigner minimum.
//!
//! cargo run --example cubic_state -- 0.09

use cubiclab::characterize::{default_axis, moments, photon_probs, wigner};
use cubiclab::states::{cubic_state, resource_state, CubicMethod, CubicParams};
use cubiclab::Truncation;

fn main() -> cubiclab::Result<()> {
    let chi: f64 = std::env::args().nth(1).map_or(Ok(0.09), |s| s.parse()).expect("chi must be a number");
    let tr = Truncation::new(15)?;
    let analytic = cubic_state(chi, tr, CubicMethod::Analytic);
    let operator = cubic_state(chi, tr, CubicMethod::Operator);
    println!("overlap of the two routes: {:.15}", analytic.inner(&operator)?.norm_sqr());

    let rho = analytic.to_density();
    for (n, p) in photon_probs(&rho)?.iter().enumerate().take(5) {
        println!("p{n} = {p:.6}");
    }
    let m = moments(&rho)?;
    println!("<x> = {:.6}, <p> = {:.6}, var x = {:.6}", m.mean_x, m.mean_p, m.var_x);

    let axis = default_axis();
    let w = wigner(&rho, &axis, &axis)?;
    println!("min W = {:.4}, negative regions = {}", w.min(), w.negative_regions(1e-3));

    // same effective strength from weaker nonlinearity on squeezed vacuum
    let params = CubicParams::from_chi0(chi / 3f64.exp(), 1.0 / 3.0);
    let squeezed = resource_state(params, tr, true)?;
    let p = photon_probs(&squeezed.to_density())?;
    println!("squeezed resource (r = 1/3): p0 = {:.4}, p2 = {:.4}", p[0], p[2]);
    Ok(())
}
