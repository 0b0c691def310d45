//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`. The process exits nonzero when a
//! criterion fails, except for those listed in `UNATTAINABLE`, which are
//! still reported as FAIL.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cubiclab::channels::{beamsplitter, displace, loss, subtract, LossParam};
use cubiclab::characterize::{antidiag_im, default_axis, fidelity, grid, moments, photon_probs, r_metric, wigner};
use cubiclab::focklab::{tensor, FockObject};
use cubiclab::herald::{herald, optimize_betas, target_fidelity, HeraldConfig, OptimizeOptions};
use cubiclab::imprint::{cubic_gate, imprint, quad_fit, sweep};
use cubiclab::io::RunManifest;
use cubiclab::states::{coherent, cubic_state, fock, squeeze, CubicMethod};
use cubiclab::tomo::{default_phases, reconstruct, sample, TomoConfig};
use cubiclab::{DensityMatrix, StateVector, Truncation, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that cannot hold as stated. The literal anti-diagonal law has
/// no `pi^(-1/2)` from the vacuum wavefunction, so a normalized state misses
/// it by about `0.44 * 2 chi * max|x^3 exp(-x^2)|`, which is 3.6e-3 at
/// `chi = 0.01` against a tolerance of 5e-4.
const UNATTAINABLE: &[&str] = &["AC4"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn t(n: usize) -> Truncation {
    Truncation::new(n).unwrap()
}

fn ac1() -> Outcome {
    let mut worst: f64 = 1.0;
    for chi in [0.01, 0.090, 0.3] {
        let a = cubic_state(chi, t(8), CubicMethod::Analytic);
        let b = cubic_state(chi, t(8), CubicMethod::Operator);
        worst = worst.min(a.inner(&b).unwrap().norm_sqr());
    }
    outcome(worst >= 1.0 - 1e-12, format!("min overlap {worst:.15}"))
}

fn ac2() -> Outcome {
    let tr = t(8);
    let rho = cubic_state(0.09, tr, CubicMethod::Analytic).to_density();
    let (one, _) = subtract(&rho, 1).unwrap();
    let s2 = 2f64.sqrt();
    let want = StateVector::from_amplitudes(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(s2, 0.0)])
        .unwrap()
        .normalized()
        .resized(tr.dim())
        .unwrap();
    let f = fidelity(&one, &want.to_density()).unwrap();
    let p = photon_probs(&one).unwrap();
    let ratio = p[2] / p[0];
    let r02 = r_metric(&one, &fock(2, tr).unwrap()).unwrap();
    let (two, _) = subtract(&rho, 2).unwrap();
    let p1 = photon_probs(&two).unwrap()[1];
    let pass = f >= 1.0 - 1e-10 && (ratio - 2.0).abs() <= 1e-10 && (r02 - 1.0).abs() <= 1e-10 && (p1 - 1.0).abs() <= 1e-10;
    outcome(pass, format!("F={f:.12} p2/p0={ratio:.12} R02={r02:.12} p1''={p1:.12}"))
}

fn ac3() -> Outcome {
    let tr = t(20);
    let axis = default_axis();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let k = rng.random_range(1..=3);
        let parts: Vec<(f64, StateVector)> = (0..k)
            .map(|_| {
                let alpha = C64::from_polar(rng.random::<f64>(), 2.0 * PI * rng.random::<f64>());
                (rng.random_range(0.1..1.0), coherent(alpha, tr))
            })
            .collect();
        let rho = DensityMatrix::mixture(&parts).unwrap();
        let (sub, _) = subtract(&rho, 1).unwrap();
        worst = worst.min(wigner(&sub, &axis, &axis).unwrap().min());
    }
    outcome(worst >= -1e-6, format!("min W over 20 mixtures {worst:.3e}"))
}

fn ac4() -> Outcome {
    let chi = 0.01;
    let xs = grid(-3.0, 3.0, 0.01);
    let rho = cubic_state(chi, t(10), CubicMethod::Analytic).to_density();
    let im = antidiag_im(&rho, &xs).unwrap();
    let law = |x: f64| 2.0 * chi * x.powi(3) * (-x * x).exp();
    let literal = xs.iter().zip(&im).map(|(&x, v)| (v - law(x)).abs()).fold(0.0, f64::max);
    let scaled = xs
        .iter()
        .zip(&im)
        .map(|(&x, v)| (v - law(x) / PI.sqrt()).abs())
        .fold(0.0, f64::max);
    let vac = antidiag_im(&fock(0, t(10)).unwrap().to_density(), &xs).unwrap();
    let vac_max = vac.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tol = 5.0 * chi * chi;
    outcome(
        literal <= tol && vac_max <= 1e-12,
        format!(
            "max dev {literal:.3e} (tol {tol:.1e}); with pi^-1/2 normalization {scaled:.3e}; vacuum {vac_max:.1e}"
        ),
    )
}

fn ac5() -> Outcome {
    let chi = 0.02;
    let tr = t(25);
    let u = cubic_gate(chi, tr);
    let (mut worst_rel, mut worst_x) = (0.0f64, 0.0f64);
    for alpha in grid(0.0, 1.0, 0.1) {
        let rin = coherent(C64::new(alpha, 0.0), tr).to_density();
        let out = moments(&rin.conjugate_by(&u).unwrap()).unwrap();
        let x2 = 2.0 * alpha * alpha + 0.5;
        let want = 3.0 * chi * x2;
        worst_rel = worst_rel.max((out.mean_p - want).abs() / want);
        worst_x = worst_x.max((out.mean_x - 2f64.sqrt() * alpha).abs());
    }
    outcome(
        worst_rel <= 0.02 && worst_x <= 1e-6,
        format!("max rel err in <p> {worst_rel:.2e}, max <x> drift {worst_x:.1e}"),
    )
}

/// Moments of `psi_S(y/sqrt2) psi_A(y/sqrt2)` for a real coherent probe and
/// the closed-form cubic ancilla `exp(-u^2/2)(1 + i chi u^3)`.
fn product_oracle(alpha: f64, chi: f64) -> (f64, f64) {
    let s2 = 2f64.sqrt();
    let (mut norm, mut mx, mut mp) = (0.0, 0.0, 0.0);
    for y in grid(-14.0, 14.0, 0.005) {
        let u = y / s2;
        let env = (-(u - s2 * alpha).powi(2) / 2.0 - u * u / 2.0).exp();
        let denv = (-(u - s2 * alpha) - u) * env;
        let poly = C64::new(1.0, chi * u.powi(3));
        let dpoly = C64::new(0.0, 3.0 * chi * u * u);
        let phi = poly * env;
        let dphi = (dpoly * env + poly * denv) / s2;
        norm += phi.norm_sqr();
        mx += y * phi.norm_sqr();
        mp += (phi.conj() * dphi).im;
    }
    (mx / norm, mp / norm)
}

fn ac6() -> Outcome {
    let tr = t(24);
    let chi = 0.090;
    let alphas = grid(0.0, 1.0, 0.05);
    let curve = sweep(&alphas, &cubic_state(chi, tr, CubicMethod::Analytic).to_density()).unwrap();
    let fit = quad_fit(&curve).unwrap();
    let ps = curve.mean_p();
    let range = ps.iter().cloned().fold(f64::MIN, f64::max) - ps.iter().cloned().fold(f64::MAX, f64::min);
    let oracle = curve
        .points()
        .iter()
        .map(|p| {
            let (mx, mp) = product_oracle(p.alpha, chi);
            (p.mean_x - mx).abs().max((p.mean_p - mp).abs())
        })
        .fold(0.0, f64::max);

    let gt = t(20);
    let vac = fock(0, gt).unwrap();
    let gaussians = [
        vac.to_density(),
        vac.apply(&squeeze(0.3, gt).unwrap()).unwrap().to_density(),
        vac.apply(&squeeze(-0.3, gt).unwrap()).unwrap().to_density(),
        displace(&vac.apply(&squeeze(0.2, gt).unwrap()).unwrap().to_density(), C64::new(0.2, -0.15)).unwrap(),
    ];
    let gaussian_c2 = gaussians
        .iter()
        .map(|a| quad_fit(&sweep(&grid(0.0, 1.0, 0.1), a).unwrap()).unwrap().c2.abs())
        .fold(0.0, f64::max);
    let pass = fit.c2 > 0.0 && fit.rms < 0.01 * range && gaussian_c2 < 1e-6 && oracle <= 1e-6;
    outcome(
        pass,
        format!(
            "c2={:.4} rms/range={:.2e}; max Gaussian |c2| {gaussian_c2:.1e}; oracle dev {oracle:.1e}",
            fit.c2,
            fit.rms / range
        ),
    )
}

fn ac7() -> Outcome {
    let phases = default_phases();
    let per_phase = 200_000 / phases.len();
    let cfg = TomoConfig::default();
    let mut notes = Vec::new();
    let mut pass = true;
    for (label, truth, floor, seed) in [
        ("cubic", cubic_state(0.09, t(10), CubicMethod::Analytic).to_density(), 0.99, 11),
        ("vacuum", fock(0, t(10)).unwrap().to_density(), 0.995, 12),
    ] {
        let rec = sample(&truth, &phases, per_phase, seed).unwrap();
        let r = reconstruct(&rec, &cfg).unwrap();
        let f = fidelity(&r.rho, &truth).unwrap();
        let monotone = r.log_likelihood.windows(2).all(|w| w[1] >= w[0]);
        pass &= f >= floor && monotone;
        notes.push(format!("{label} F={f:.5} (>= {floor}) monotone={monotone} iters={}", r.iterations));
    }
    outcome(pass, notes.join("; "))
}

fn ac8() -> Outcome {
    let (rho, _) = herald(&HeraldConfig::new(0.05)).unwrap();
    let f3 = target_fidelity(&rho, &fock(3, t(5)).unwrap()).unwrap();

    let base = HeraldConfig::new(0.1);
    let target = cubic_state(0.090, t(5), CubicMethod::Analytic);
    let best = optimize_betas(&target, &base, &OptimizeOptions::default()).unwrap();

    // exhaustive search over every real component in {-0.3, ..., 0.3}
    let axis = grid(-0.3, 0.3, 0.1);
    let mut grid_best = 0.0f64;
    let mut idx = [0usize; 6];
    loop {
        let c: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
        let betas = [C64::new(c[0], c[1]), C64::new(c[2], c[3]), C64::new(c[4], c[5])];
        if let Ok((r, _)) = herald(&base.clone().with_betas(betas)) {
            grid_best = grid_best.max(target_fidelity(&r, &target).unwrap());
        }
        let mut k = 0;
        while k < 6 {
            idx[k] += 1;
            if idx[k] < axis.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == 6 {
            break;
        }
    }
    let pass = f3 >= 0.9 && best.fidelity >= 0.95 && best.fidelity >= grid_best - 0.01 && (best.fidelity - grid_best).abs() <= 0.01;
    outcome(
        pass,
        format!("F(|3>)={f3:.4}; optimizer F={:.5}; grid F={grid_best:.5}", best.fidelity),
    )
}

fn physical(rho: &DensityMatrix) -> bool {
    (rho.trace().re - 1.0).abs() < 1e-10 && rho.is_hermitian(1e-10) && rho.min_eigenvalue() > -1e-10
}

fn ac9() -> Outcome {
    let tr = t(12);
    let rho = DensityMatrix::mixture(&[
        (0.6, cubic_state(0.2, tr, CubicMethod::Analytic)),
        (0.4, coherent(C64::new(0.5, -0.3), tr)),
    ])
    .unwrap();
    let mut worst: f64 = 0.0;
    for (a, b) in [(0.9, 0.8), (0.5, 0.5), (0.99, 0.3), (1.0, 0.7)] {
        let two = loss(&loss(&rho, LossParam::new(a).unwrap()).unwrap(), LossParam::new(b).unwrap()).unwrap();
        let one = loss(&rho, LossParam::new(a * b).unwrap()).unwrap();
        worst = worst.max((two.matrix() - one.matrix()).camax());
    }
    let joint = match tensor(&[FockObject::Density(rho.clone()), FockObject::Density(fock(1, tr).unwrap().to_density())]).unwrap() {
        FockObject::Density(d) => d,
        _ => unreachable!(),
    };
    let bs = beamsplitter(0.4, (0, 1), joint.dims()).unwrap();
    let outputs = [
        loss(&rho, LossParam::new(0.7).unwrap()).unwrap(),
        subtract(&rho, 1).unwrap().0,
        displace(&rho, C64::new(0.1, 0.2)).unwrap(),
        imprint(&rho, &cubic_state(0.09, tr, CubicMethod::Analytic).to_density()).unwrap().0,
        joint.conjugate_by(&bs).unwrap(),
    ];
    let ok = outputs.iter().all(physical);
    outcome(worst <= 1e-10 && ok, format!("semigroup dev {worst:.1e}; all outputs physical: {ok}"))
}

fn run_cli(args: &[&str], out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_cubiclab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn read_manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn ac10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["tomo", "simulate", "cubic", "--chi", "0.09", "--seed", "99"];
    if !(run_cli(&args, &a) && run_cli(&args, &b)) {
        return outcome(false, "cli run failed");
    }
    let same_bytes = std::fs::read(a.join("samples.csv")).unwrap() == std::fs::read(b.join("samples.csv")).unwrap();
    let same_manifest = read_manifest(&a).same_run(&read_manifest(&b));
    outcome(
        same_bytes && same_manifest,
        format!("samples byte-identical: {same_bytes}; manifests equal apart from wall clock: {same_manifest}"),
    )
}

fn main() {
    let criteria: [(&str, &str, Duration, fn() -> Outcome); 10] = [
        ("AC1", "cubic state routes agree", Duration::from_secs(1), ac1),
        ("AC2", "photon subtraction oracles", Duration::from_secs(1), ac2),
        ("AC3", "coherent mixtures stay non-negative", Duration::from_secs(30), ac3),
        ("AC4", "anti-diagonal law", Duration::from_secs(5), ac4),
        ("AC5", "cubic gate moment law", Duration::from_secs(10), ac5),
        ("AC6", "imprint quadraticity", Duration::from_secs(30), ac6),
        ("AC7", "tomography closed loop", Duration::from_secs(300), ac7),
        ("AC8", "heralding", Duration::from_secs(600), ac8),
        ("AC9", "channel algebra", Duration::from_secs(5), ac9),
        ("AC10", "determinism", Duration::from_secs(60), ac10),
    ];
    let mut blocking = 0;
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed <= limit;
        println!(
            "[{}] {id} {name}: {} ({:.2}s, limit {}s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
        if !pass {
            failed += 1;
            if !UNATTAINABLE.contains(&id) {
                blocking += 1;
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if blocking > 0 {
        std::process::exit(1);
    }
}
