//! Photon subtraction applied to the cubic state after loss, with the
//! coherence of the surviving superpositions.

use cubiclab::channels::{loss, subtract, LossParam};
use cubiclab::characterize::{photon_probs, r_metric};
use cubiclab::states::{cubic_state, fock, one_and_three, CubicMethod};
use cubiclab::Truncation;

fn main() -> cubiclab::Result<()> {
    let tr = Truncation::new(10)?;
    let ideal = cubic_state(0.09, tr, CubicMethod::Analytic).to_density();
    let two = fock(2, tr)?;
    let phi = one_and_three(tr, false);
    println!("{:>5} {:>8} {:>8} {:>8} {:>8} {:>8}", "eta", "R01&3", "p1'", "p2'", "R02'", "p1''");
    for eta in [1.0, 0.9, 0.8, 0.7, 0.6] {
        let rho = loss(&ideal, LossParam::new(eta)?)?;
        let (once, _) = subtract(&rho, 1)?;
        let (twice, _) = subtract(&rho, 2)?;
        let p = photon_probs(&once)?;
        println!(
            "{eta:>5.2} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            r_metric(&rho, &phi)?,
            p[1],
            p[2],
            r_metric(&once, &two)?,
            photon_probs(&twice)?[1]
        );
    }
    Ok(())
}
