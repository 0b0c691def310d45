//! Anti-diagonal of the position-space density matrix, before and after the
//! momentum shift that best exposes the cubic profile.

use cubiclab::channels::{loss, LossParam};
use cubiclab::characterize::{antidiag_im, fit_displacement, grid};
use cubiclab::states::{cubic_state, CubicMethod};
use cubiclab::Truncation;

fn main() -> cubiclab::Result<()> {
    let tr = Truncation::new(15)?;
    let chi = 0.09;
    let ideal = cubic_state(chi, tr, CubicMethod::Analytic).to_density();
    let lossy = loss(&ideal, LossParam::new(0.7)?)?;
    let xs = grid(-3.0, 3.0, 0.5);

    for (label, rho) in [("ideal", &ideal), ("eta=0.7", &lossy)] {
        let fit = fit_displacement(rho)?;
        println!("{label}: best dp = {:+.4}, amplitude = {:.4}", fit.delta_p, fit.amplitude);
        let raw = antidiag_im(rho, &xs)?;
        let shifted = antidiag_im(&fit.rho_shifted, &xs)?;
        for ((x, a), b) in xs.iter().zip(raw).zip(shifted) {
            let law = 2.0 * chi * x.powi(3) * (-x * x).exp() / std::f64::consts::PI.sqrt();
            println!("  x={x:+.1}  Im rho(x,-x) = {a:+.5}  shifted {b:+.5}  ideal law {law:+.5}");
        }
    }
    Ok(())
}
