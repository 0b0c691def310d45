//! How loss erodes the cubic resource: coherence, Wigner negativity and the
//! imprinted quadratic response.

use cubiclab::channels::{loss, LossParam};
use cubiclab::characterize::{default_axis, r_metric, wigner};
use cubiclab::imprint::{quad_fit, sweep};
use cubiclab::states::{cubic_state, one_and_three, CubicMethod};
use cubiclab::characterize::grid;
use cubiclab::Truncation;

fn main() -> cubiclab::Result<()> {
    let tr = Truncation::new(15)?;
    let ideal = cubic_state(0.3, tr, CubicMethod::Analytic).to_density();
    let phi = one_and_three(tr, false);
    let axis: Vec<f64> = default_axis().into_iter().step_by(2).collect();
    let alphas = grid(0.0, 1.0, 0.1);
    println!("{:>5} {:>8} {:>9} {:>8}", "eta", "R", "min W", "c2");
    for eta in [1.0, 0.95, 0.9, 0.8, 0.6, 0.4] {
        let rho = loss(&ideal, LossParam::new(eta)?)?;
        let w = wigner(&rho, &axis, &axis)?;
        let fit = quad_fit(&sweep(&alphas, &rho)?)?;
        println!("{eta:>5.2} {:>8.4} {:>9.5} {:>8.4}", r_metric(&rho, &phi)?, w.min(), fit.c2);
    }
    Ok(())
}
