//! Randomized checks of the structural invariants.

use cubiclab::channels::{displace, loss, subtract, LossParam};
use cubiclab::characterize::{default_axis, fidelity, photon_probs, r_metric, wigner};
use cubiclab::focklab::{
    create, destroy, expectation, partial_trace, tensor, FockObject, ModeOperator,
};
use cubiclab::herald::{herald, HeraldConfig};
use cubiclab::imprint::{quad_fit, sweep};
use cubiclab::io::fmt12;
use cubiclab::states::{coherent, cubic_state, fock, one_and_three, squeeze, CubicMethod};
use cubiclab::tomo::QuadratureRecord;
use cubiclab::{DensityMatrix, StateVector, Truncation, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn t(n: usize) -> Truncation {
    Truncation::new(n).unwrap()
}

fn state(dim: usize, re: &[f64], im: &[f64]) -> StateVector {
    let amps: Vec<C64> = (0..dim).map(|n| C64::new(re[n], im[n]) / (1.0 + n as f64)).collect();
    StateVector::from_amplitudes(&amps).unwrap().normalized()
}

fn hermitian(dim: usize, v: &[f64]) -> DMatrix<C64> {
    let m = DMatrix::from_fn(dim, dim, |r, c| C64::new(v[r * dim + c], v[dim * dim + r * dim + c]));
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn commutator_is_identity_below_cutoff(nmax in 3usize..20) {
        let tr = t(nmax);
        let a = destroy(tr);
        let ad = create(tr);
        let c = a.compose(&ad).unwrap().matrix() - ad.compose(&a).unwrap().matrix();
        for r in 0..nmax {
            for k in 0..nmax {
                let want = if r == k { 1.0 } else { 0.0 };
                prop_assert!((c[(r, k)] - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_trace_undoes_tensor(
        re in prop::collection::vec(-1.0f64..1.0, 10),
        im in prop::collection::vec(-1.0f64..1.0, 10),
    ) {
        let rho = state(5, &re[..5], &im[..5]).to_density();
        let sigma = state(4, &re[5..9], &im[5..9]).to_density();
        let joint = match tensor(&[FockObject::Density(rho.clone()), FockObject::Density(sigma.clone())]).unwrap() {
            FockObject::Density(d) => d,
            _ => unreachable!(),
        };
        let back = partial_trace(&joint, &[0]).unwrap();
        prop_assert!((back.matrix() - rho.matrix()).norm() < 1e-12);
        let other = partial_trace(&joint, &[1]).unwrap();
        prop_assert!((other.matrix() - sigma.matrix()).norm() < 1e-12);
    }

    #[test]
    fn expectation_is_linear(
        re in prop::collection::vec(-1.0f64..1.0, 12),
        im in prop::collection::vec(-1.0f64..1.0, 12),
        h1 in prop::collection::vec(-1.0f64..1.0, 72),
        h2 in prop::collection::vec(-1.0f64..1.0, 72),
        a in -2.0f64..2.0,
        w in 0.0f64..1.0,
    ) {
        let dim = 6;
        let r1 = state(dim, &re[..6], &im[..6]);
        let r2 = state(dim, &re[6..], &im[6..]);
        let op = |m: DMatrix<C64>| ModeOperator::new(vec![dim], m, "h").unwrap();
        let (m1, m2) = (hermitian(dim, &h1), hermitian(dim, &h2));
        let rho1 = r1.to_density();
        let lhs = expectation(&rho1, &op(&m1 + &m2 * C64::new(a, 0.0))).unwrap();
        let rhs = expectation(&rho1, &op(m1.clone())).unwrap() + expectation(&rho1, &op(m2)).unwrap() * a;
        prop_assert!((lhs - rhs).norm() < 1e-12);
        let mix = DensityMatrix::mixture(&[(w, r1.clone()), (1.0 - w, r2.clone())]).unwrap();
        let lhs = expectation(&mix, &op(m1.clone())).unwrap();
        let rhs = expectation(&rho1, &op(m1.clone())).unwrap() * w + expectation(&r2.to_density(), &op(m1)).unwrap() * (1.0 - w);
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn cubic_routes_agree_and_have_fixed_photon_ratio(chi in 0.001f64..0.3) {
        let tr = t(8);
        let a = cubic_state(chi, tr, CubicMethod::Analytic);
        let b = cubic_state(chi, tr, CubicMethod::Operator);
        prop_assert!(a.inner(&b).unwrap().norm_sqr() >= 1.0 - 1e-12);
        let p = photon_probs(&a.to_density()).unwrap();
        prop_assert!(p[2] == 0.0 && p[4] == 0.0);
        prop_assert!((p[1] / p[3] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn r_metric_is_a_fraction(
        re in prop::collection::vec(-1.0f64..1.0, 16),
        im in prop::collection::vec(-1.0f64..1.0, 16),
        w in 0.05f64..0.95,
    ) {
        let tr = t(7);
        let mix = DensityMatrix::mixture(&[(w, state(8, &re[..8], &im[..8])), (1.0 - w, state(8, &re[8..], &im[8..]))]).unwrap();
        if let Ok(r) = r_metric(&mix, &one_and_three(tr, false)) {
            prop_assert!((-1e-9..=1.0 + 1e-9).contains(&r));
        }
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(
        re in prop::collection::vec(-1.0f64..1.0, 24),
        im in prop::collection::vec(-1.0f64..1.0, 24),
        w in 0.1f64..0.9,
    ) {
        let s = |k: usize| state(6, &re[6 * k..6 * k + 6], &im[6 * k..6 * k + 6]);
        let rho = DensityMatrix::mixture(&[(w, s(0)), (1.0 - w, s(1))]).unwrap();
        let sigma = DensityMatrix::mixture(&[(0.5, s(2)), (0.5, s(3))]).unwrap();
        let f = fidelity(&rho, &sigma).unwrap();
        let g = fidelity(&sigma, &rho).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - g).abs() < 1e-8);
        prop_assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn heralding_rotates_with_the_displacements(
        b in prop::collection::vec(-0.6f64..0.6, 6),
        phi in 0.0f64..6.28,
    ) {
        let betas = [C64::new(b[0], b[1]), C64::new(b[2], b[3]), C64::new(b[4], b[5])];
        let rot = C64::from_polar(1.0, phi);
        let (rho, p) = herald(&HeraldConfig::new(0.1).with_betas(betas)).unwrap();
        let (turned, q) = herald(&HeraldConfig::new(0.1).with_betas(betas.map(|z| z * rot))).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p - q).abs() <= 1e-12 * p.max(1e-12));
        let expected = DMatrix::from_fn(rho.dim(), rho.dim(), |m, n| {
            rho.element(m, n) * C64::from_polar(1.0, -phi * (m as f64 - n as f64))
        });
        prop_assert!((turned.matrix() - expected).norm() < 1e-10);
    }

    #[test]
    fn quadrature_record_rotation_round_trips(
        samples in prop::collection::vec((0.0f64..3.14, -5.0f64..5.0), 1..40),
        delta in 0.0f64..3.0,
    ) {
        let rec = QuadratureRecord::new(samples).unwrap();
        let back = rec.rotated(delta).unwrap().rotated(std::f64::consts::PI - delta).unwrap();
        // a full half turn flips every sign, up to phases landing on the fold
        for (a, b) in rec.samples().iter().zip(back.samples()) {
            let d = (a.0 - b.0).abs();
            if d < 1e-9 {
                prop_assert!((a.1 + b.1).abs() < 1e-12);
            } else {
                prop_assert!(d > std::f64::consts::PI - 1e-9);
                prop_assert!((a.1 - b.1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn csv_numbers_round_trip(v in -1e6f64..1e6) {
        let back: f64 = fmt12(v).parse().unwrap();
        prop_assert!((back - v).abs() <= 5e-12 * v.abs().max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn coherent_mixtures_never_go_negative_after_subtraction(
        amps in prop::collection::vec((0.0f64..1.0, 0.0f64..6.2832), 1..=3),
        w in prop::collection::vec(0.1f64..1.0, 3),
    ) {
        let tr = t(20);
        let parts: Vec<(f64, StateVector)> = amps
            .iter()
            .zip(&w)
            .map(|(&(r, th), &wk)| (wk, coherent(C64::from_polar(r, th), tr)))
            .collect();
        let rho = DensityMatrix::mixture(&parts).unwrap();
        let axis: Vec<f64> = default_axis().into_iter().step_by(4).collect();
        if let Ok((sub, _)) = subtract(&rho, 1) {
            prop_assert!(wigner(&sub, &axis, &axis).unwrap().min() >= -1e-6);
        }
    }

    #[test]
    fn gaussian_ancillas_give_straight_moment_curves(
        r in -0.4f64..0.4,
        bx in -0.3f64..0.3,
        bp in -0.3f64..0.3,
    ) {
        let tr = t(20);
        let vac = fock(0, tr).unwrap();
        let anc = displace(&vac.apply(&squeeze(r, tr).unwrap()).unwrap().to_density(), C64::new(bx, bp)).unwrap();
        let alphas: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let curve = sweep(&alphas, &anc).unwrap();
        prop_assert!(quad_fit(&curve).unwrap().c2.abs() < 1e-6);
        prop_assert!(curve.points().windows(2).all(|w| w[1].mean_x > w[0].mean_x));
    }

    #[test]
    fn loss_never_raises_coherence(eta_hi in 0.5f64..1.0, frac in 0.0f64..1.0) {
        let tr = t(10);
        let rho = cubic_state(0.09, tr, CubicMethod::Analytic).to_density();
        let eta_lo = eta_hi * frac.max(0.5);
        let phi = one_and_three(tr, false);
        let hi = r_metric(&loss(&rho, LossParam::new(eta_hi).unwrap()).unwrap(), &phi).unwrap();
        let lo = r_metric(&loss(&rho, LossParam::new(eta_lo).unwrap()).unwrap(), &phi).unwrap();
        prop_assert!(lo <= hi + 1e-12);
    }
}
