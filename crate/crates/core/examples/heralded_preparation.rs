//! Three-fold coincidence heralding from a two-mode squeezed vacuum, first
//! undisplaced and then with idler displacements optimized for the cubic
//! state.

use cubiclab::characterize::photon_probs;
use cubiclab::herald::{herald, optimize_betas, target_fidelity, HeraldConfig, OptimizeOptions};
use cubiclab::states::{cubic_state, fock, CubicMethod};
use cubiclab::Truncation;

fn main() -> cubiclab::Result<()> {
    let tr = Truncation::new(5)?;
    for lambda in [0.05, 0.1, 0.2] {
        let (rho, p) = herald(&HeraldConfig::new(lambda))?;
        let f = target_fidelity(&rho, &fock(3, tr)?)?;
        println!("lambda={lambda}: P(click^3) = {p:.3e}, F(|3>) = {f:.4}");
    }

    let target = cubic_state(0.09, tr, CubicMethod::Analytic);
    let best = optimize_betas(&target, &HeraldConfig::new(0.1), &OptimizeOptions::default())?;
    println!(
        "optimized: F = {:.5}, P = {:.3e} after {} evaluations",
        best.fidelity, best.p_success, best.evaluations
    );
    for (i, b) in best.config.betas().iter().enumerate() {
        println!("  beta{} = {:+.4} {:+.4}i", i + 1, b.re, b.im);
    }
    let (rho, _) = herald(&best.config)?;
    println!("  photon numbers: {:?}", photon_probs(&rho)?.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>());
    println!("{}", best.config.to_json()?);
    Ok(())
}
