//! Simulated homodyne data and maximum-likelihood reconstruction, at a few
//! sample sizes.

use cubiclab::characterize::{fidelity, photon_probs};
use cubiclab::states::{cubic_state, CubicMethod};
use cubiclab::tomo::{default_phases, reconstruct, sample, TomoConfig};
use cubiclab::Truncation;

fn main() -> cubiclab::Result<()> {
    let truth = cubic_state(0.09, Truncation::new(10)?, CubicMethod::Analytic).to_density();
    let phases = default_phases();
    for total in [12_000, 60_000, 200_000] {
        let rec = sample(&truth, &phases, total / phases.len(), 5)?;
        let r = reconstruct(&rec, &TomoConfig::default())?;
        let p = photon_probs(&r.rho)?;
        println!(
            "{total:>7} samples: F = {:.5}, {} iterations, p1 = {:.4}, p3 = {:.4}, logL = {:.1}",
            fidelity(&r.rho, &truth)?,
            r.iterations,
            p[1],
            p[3],
            r.log_likelihood.last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
