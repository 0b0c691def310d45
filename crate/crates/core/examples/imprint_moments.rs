//! Imprints cubic and Gaussian ancillas onto coherent probes and fits the
//! output momentum as a quadratic in position.

use cubiclab::characterize::grid;
use cubiclab::imprint::{quad_fit, sweep};
use cubiclab::states::{cubic_state, fock, squeeze, CubicMethod};
use cubiclab::Truncation;

fn main() -> cubiclab::Result<()> {
    let tr = Truncation::new(20)?;
    let alphas = grid(0.0, 1.0, 0.1);
    let vac = fock(0, tr)?;
    let ancillas = [
        ("cubic chi=0.09", cubic_state(0.09, tr, CubicMethod::Analytic).to_density()),
        ("vacuum", vac.to_density()),
        ("squeezed r=0.3", vac.apply(&squeeze(0.3, tr)?)?.to_density()),
    ];
    for (label, anc) in ancillas {
        let curve = sweep(&alphas, &anc)?;
        let fit = quad_fit(&curve)?;
        println!("{label}: <p> = {:+.5} {:+.5} x {:+.5} x^2 (rms {:.1e})", fit.c0, fit.c1, fit.c2, fit.rms);
        for p in curve.points().iter().step_by(5) {
            println!("  alpha={:.1}  <x>={:.4}  <p>={:+.5}  weight={:.4}", p.alpha, p.mean_x, p.mean_p, p.weight);
        }
    }
    Ok(())
}
