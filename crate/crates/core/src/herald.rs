//! Idealized three-fold coincidence heralding.
//!
//! A two-mode squeezed vacuum feeds a signal mode and an idler. The idler is
//! split three ways by two beam splitters, each arm is displaced, and every
//! arm ends on an ideal on/off detector (`1 - |0><0|`). Conditioning on all
//! three clicks leaves the signal in a superposition of low photon numbers
//! whose shape is set by the displacements.
//!
//! Mode layout: signal 0, idler arms 1..=3. The splitter network follows the
//! sign convention of [`crate::channels::beamsplitter`]: `BS(theta1)` on arms
//! (1, 2) then `BS(theta2)` on arms (2, 3), so the idler creation operator
//! maps to `c1 a1^dag - s1 c2 a2^dag + s1 s2 a3^dag`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::focklab::{DensityMatrix, StateVector, HERALD_NMAX, C64};
use crate::optim::{nelder_mead, NelderMeadOptions};

/// Heralding fails below this success probability.
pub const MIN_SUCCESS: f64 = 1e-15;

/// Complex displacement amplitude as stored in config files.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Amplitude {
    pub re: f64,
    pub im: f64,
}

impl From<Amplitude> for C64 {
    fn from(a: Amplitude) -> Self {
        C64::new(a.re, a.im)
    }
}

impl From<C64> for Amplitude {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Heralding setup. Serialized as
///
/// ```json
/// {
///   "lambda": 0.1,
///   "split": [0.9553166181245093, 0.7853981633974483],
///   "betas": [{"re": 0.0, "im": 0.0}, {"re": 0.0, "im": 0.0}, {"re": 0.0, "im": 0.0}],
///   "signal_nmax": 5,
///   "idler_nmax": 5
/// }
/// ```
///
/// Only `lambda` is required; the split defaults to equal thirds, the
/// displacements to zero and both cutoffs to 5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeraldConfig {
    /// Two-mode squeezing parameter, `[0, 0.5]`.
    pub lambda: f64,
    /// Beam-splitter angles `(theta1, theta2)` of the three-way idler split.
    #[serde(default = "balanced_split")]
    pub split: [f64; 2],
    #[serde(default)]
    pub betas: [Amplitude; 3],
    /// Signal cutoff; also bounds the number of idler photons.
    #[serde(default = "default_nmax")]
    pub signal_nmax: usize,
    /// Per-arm cutoff on the split idler.
    #[serde(default = "default_nmax")]
    pub idler_nmax: usize,
}

fn default_nmax() -> usize {
    HERALD_NMAX
}

/// Angles giving equal thirds: `cos^2 theta1 = 1/3`, `theta2 = pi/4`.
pub fn balanced_split() -> [f64; 2] {
    [(1.0 / 3f64.sqrt()).acos(), std::f64::consts::FRAC_PI_4]
}

impl HeraldConfig {
    /// Balanced split, no displacement, default cutoffs.
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            split: balanced_split(),
            betas: [Amplitude::default(); 3],
            signal_nmax: HERALD_NMAX,
            idler_nmax: HERALD_NMAX,
        }
    }

    pub fn with_betas(mut self, betas: [C64; 3]) -> Self {
        self.betas = betas.map(Amplitude::from);
        self
    }

    pub fn betas(&self) -> [C64; 3] {
        self.betas.map(C64::from)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.lambda) {
            return Err(Error::InvalidParameter(format!("lambda = {} outside [0, 0.5]", self.lambda)));
        }
        if self.signal_nmax < 3 {
            return Err(Error::InvalidParameter(format!("signal_nmax = {} below 3", self.signal_nmax)));
        }
        if self.idler_nmax < 2 {
            return Err(Error::InvalidParameter(format!("idler_nmax = {} below 2", self.idler_nmax)));
        }
        let finite = self.split.iter().all(|v| v.is_finite())
            && self.betas.iter().all(|b| b.re.is_finite() && b.im.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("non-finite split or displacement".into()));
        }
        Ok(())
    }

    /// Transfer amplitudes of the idler onto the three arms.
    pub fn arm_amplitudes(&self) -> [f64; 3] {
        let [t1, t2] = self.split;
        [t1.cos(), -t1.sin() * t2.cos(), t1.sin() * t2.sin()]
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&crate::io::read_text(path)?)
    }
}

/// Pure signal+idler-arms state before detection, dims
/// `[signal, idler, idler, idler]`.
fn pre_detection_state(cfg: &HeraldConfig) -> Vec<C64> {
    let ds = cfg.signal_nmax + 1;
    let di = cfg.idler_nmax + 1;
    let t = cfg.arm_amplitudes();
    let norm: f64 = (0..ds).map(|n| cfg.lambda.powi(2 * n as i32)).sum::<f64>().sqrt();
    let fact = |k: usize| (1..=k).fold(1.0, |acc, j| acc * j as f64);
    let mut psi = vec![C64::new(0.0, 0.0); ds * di * di * di];
    for n in 0..ds {
        let c = cfg.lambda.powi(n as i32) / norm;
        if c == 0.0 {
            continue;
        }
        for k1 in 0..=n.min(di - 1) {
            for k2 in 0..=(n - k1).min(di - 1) {
                let k3 = n - k1 - k2;
                if k3 >= di {
                    continue;
                }
                let multinom = (fact(n) / (fact(k1) * fact(k2) * fact(k3))).sqrt();
                let amp = c * multinom * t[0].powi(k1 as i32) * t[1].powi(k2 as i32) * t[2].powi(k3 as i32);
                psi[((n * di + k1) * di + k2) * di + k3] = C64::new(amp, 0.0);
            }
        }
    }
    psi
}

/// Truncated coherent bra coefficients: `<-beta|k> = e^{-|b|^2/2} (-b^*)^k / sqrt(k!)`.
fn displaced_vacuum_row(beta: C64, dim: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(dim);
    let mut c = C64::new((-beta.norm_sqr() / 2.0).exp(), 0.0);
    for k in 0..dim {
        if k > 0 {
            c = c * (-beta.conj()) / (k as f64).sqrt();
        }
        out.push(c);
    }
    out
}

/// Heralded signal state and success probability.
pub fn herald(cfg: &HeraldConfig) -> Result<(DensityMatrix, f64)> {
    cfg.validate()?;
    let ds = cfg.signal_nmax + 1;
    let di = cfg.idler_nmax + 1;
    let mut psi = pre_detection_state(cfg);

    // Click POVM on arm i is the projector 1 - |-b><-b|; on the truncated arm
    // it acts as P = 1 - v v^dag with v the truncated bra row. Apply sqrt(P)
    // so the conditional state is a sum of squares with no cancellation.
    let strides = [di * di, di, 1];
    for (arm, beta) in cfg.betas().iter().enumerate() {
        let v = displaced_vacuum_row(*beta, di);
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let shrink = 1.0 - (1.0 - vnorm2).max(0.0).sqrt();
        let vhat: Vec<C64> = v.iter().map(|z| z / vnorm2.sqrt()).collect();
        let stride = strides[arm];
        for base in 0..psi.len() {
            if (base / stride) % di != 0 {
                continue;
            }
            // <vhat|fiber>, where <-b|k> = v[k]
            let proj: C64 = (0..di).map(|k| vhat[k] * psi[base + k * stride]).sum();
            for k in 0..di {
                psi[base + k * stride] -= vhat[k].conj() * proj * shrink;
            }
        }
    }

    let idler_block = di * di * di;
    let mut rho = DMatrix::<C64>::zeros(ds, ds);
    for idl in 0..idler_block {
        let col = DVector::from_fn(ds, |n, _| psi[n * idler_block + idl]);
        rho += &col * col.adjoint();
    }
    let p_success = rho.trace().re;
    if !(p_success >= MIN_SUCCESS) {
        return Err(Error::NoCoincidence(p_success));
    }
    Ok((DensityMatrix::new(vec![ds], rho)?.normalized(), p_success))
}

/// `<target|rho|target>` with the target cropped or padded to the signal
/// dimension.
pub fn target_fidelity(rho: &DensityMatrix, target: &StateVector) -> Result<f64> {
    let t = target.resized(rho.dim())?.normalized();
    let v = t.amplitudes();
    Ok((v.adjoint() * rho.matrix() * v)[(0, 0)].re)
}

#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    pub seed: u64,
    /// Random starts in addition to the undisplaced configuration.
    pub random_starts: usize,
    /// Half-width of the box random starts are drawn from (per real component).
    pub start_box: f64,
    pub nelder_mead: NelderMeadOptions,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            seed: 7,
            random_starts: 11,
            start_box: 1.0,
            nelder_mead: NelderMeadOptions {
                max_evals: 3000,
                f_tol: 1e-13,
                x_tol: 1e-7,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizedHerald {
    pub config: HeraldConfig,
    pub fidelity: f64,
    pub p_success: f64,
    pub evaluations: usize,
}

fn betas_from(x: &[f64]) -> [C64; 3] {
    [C64::new(x[0], x[1]), C64::new(x[2], x[3]), C64::new(x[4], x[5])]
}

/// Multi-start Nelder-Mead over the three displacements maximizing the
/// fidelity of the heralded signal with `target`. Deterministic for a given
/// seed.
pub fn optimize_betas(target: &StateVector, base: &HeraldConfig, opts: &OptimizeOptions) -> Result<OptimizedHerald> {
    base.validate()?;
    if target.dims().len() != 1 {
        return Err(Error::DimensionMismatch("target must be single-mode".into()));
    }
    let t = target.normalized();
    let tail: f64 = t.amplitudes().iter().skip(4).map(|z| z.norm_sqr()).sum();
    if tail > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "target has weight {tail:e} above three photons"
        )));
    }
    if t.amplitude(0).norm_sqr() > 1.0 - 1e-12 {
        return Err(Error::DegenerateTarget(
            "vacuum is only approached as the displacements diverge".into(),
        ));
    }

    let objective = |x: &[f64]| -> f64 {
        let cfg = base.clone().with_betas(betas_from(x));
        match herald(&cfg).and_then(|(rho, _)| target_fidelity(&rho, &t)) {
            Ok(f) => 1.0 - f,
            Err(_) => 1.0,
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![vec![0.0; 6]];
    for _ in 0..opts.random_starts {
        starts.push((0..6).map(|_| rng.random_range(-opts.start_box..=opts.start_box)).collect());
    }
    let runs: Vec<_> = starts
        .par_iter()
        .map(|x0| nelder_mead(objective, x0, 0.2, &opts.nelder_mead))
        .collect();
    let evaluations = runs.iter().map(|r| r.evals).sum();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.f < a.f { b } else { a })
        .expect("at least one start");

    let config = base.clone().with_betas(betas_from(&best.x));
    let fidelity = 1.0 - best.f;
    if fidelity < 0.5 {
        return Err(Error::OptimizationFailed {
            best_fidelity: fidelity,
            best: Box::new(config),
        });
    }
    let (_, p_success) = herald(&config)?;
    Ok(OptimizedHerald {
        config,
        fidelity,
        p_success,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characterize::photon_probs;
    use crate::focklab::Truncation;
    use crate::states::{cubic_state, fock, CubicMethod};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Independent route: full four-mode TMSV, splitter unitaries, then
    /// `Tr_idlers[(1 x P1 x P2 x P3) |psi><psi|]` with dense click projectors.
    fn herald_full(cfg: &HeraldConfig) -> (DMatrix<C64>, f64) {
        use crate::channels::{beamsplitter, displacement_operator};
        use crate::focklab::{identity, ModeOperator};
        let d = cfg.signal_nmax + 1;
        let dims = vec![d; 4];
        let total = d.pow(4);
        let norm: f64 = (0..d).map(|n| cfg.lambda.powi(2 * n as i32)).sum::<f64>().sqrt();
        let mut amps = DVector::<C64>::zeros(total);
        for n in 0..d {
            amps[n * d * d * d + n * d * d] = C64::new(cfg.lambda.powi(n as i32) / norm, 0.0);
        }
        let mut psi = StateVector::new(dims.clone(), amps).unwrap();
        psi = psi.apply(&beamsplitter(cfg.split[0], (1, 2), &dims).unwrap()).unwrap();
        psi = psi.apply(&beamsplitter(cfg.split[1], (2, 3), &dims).unwrap()).unwrap();
        // Zero idler components above the arm cutoff, as the direct route does.
        let mut amps = psi.amplitudes().clone();
        for i in 0..total {
            let idx = crate::focklab::unflatten(i, &dims);
            if idx[1..].iter().any(|&k| k > cfg.idler_nmax) {
                amps[i] = C64::new(0.0, 0.0);
            }
        }
        let mut m = ModeOperator::new(dims.clone(), identity(total).matrix().clone(), "1").unwrap();
        for (arm, beta) in cfg.betas().iter().enumerate() {
            // <k|-b> from a large displacement operator, cropped
            let big = displacement_operator(-*beta, 60);
            let v = DVector::from_fn(cfg.idler_nmax + 1, |k, _| big.matrix()[(k, 0)]);
            let mut p = DMatrix::<C64>::identity(d, d);
            let block = DMatrix::<C64>::identity(cfg.idler_nmax + 1, cfg.idler_nmax + 1) - &v * v.adjoint();
            p.view_mut((0, 0), (cfg.idler_nmax + 1, cfg.idler_nmax + 1)).copy_from(&block);
            let op = ModeOperator::new(vec![d], p, "click").unwrap().on_mode(arm + 1, &dims).unwrap();
            m = m.compose(&op).unwrap();
        }
        let mpsi = m.matrix() * &amps;
        let blk = d * d * d;
        let rho = DMatrix::from_fn(d, d, |r, c| (0..blk).map(|i| mpsi[r * blk + i] * amps[c * blk + i].conj()).sum::<C64>());
        let p = rho.trace().re;
        (rho / C64::new(p, 0.0), p)
    }

    #[test]
    fn matches_full_four_mode_simulation() {
        let cases = [
            (0.1, [c(0.0, 0.0); 3], 3, 3),
            (0.2, [c(0.3, -0.1), c(-0.2, 0.25), c(0.1, 0.4)], 3, 3),
            (0.15, [c(0.5, 0.0), c(0.0, 0.0), c(-0.6, 0.3)], 4, 2),
        ];
        for (lambda, betas, signal_nmax, idler_nmax) in cases {
            let mut cfg = HeraldConfig::new(lambda).with_betas(betas);
            cfg.signal_nmax = signal_nmax;
            cfg.idler_nmax = idler_nmax;
            let (rho, p) = herald(&cfg).unwrap();
            let (want, p_want) = herald_full(&cfg);
            assert!((p - p_want).abs() < 1e-12 * p_want.max(1e-3), "{p} vs {p_want}");
            assert!((rho.matrix() - want).norm() < 1e-10);
        }
    }

    #[test]
    fn balanced_split_gives_equal_thirds() {
        let t = HeraldConfig::new(0.1).arm_amplitudes();
        for a in t {
            assert!((a * a - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn undisplaced_heralding_gives_three_photons() {
        let mut cfg = HeraldConfig::new(0.05);
        cfg.idler_nmax = 2;
        let (rho, p) = herald(&cfg).unwrap();
        let three = fock(3, Truncation::new(5).unwrap()).unwrap();
        assert!(target_fidelity(&rho, &three).unwrap() >= 0.9);
        assert!(p > 0.0 && p < 1e-6);
    }

    #[test]
    fn no_pairs_no_heralded_photons() {
        let cfg = HeraldConfig::new(0.0);
        assert!(matches!(herald(&cfg), Err(Error::NoCoincidence(p)) if p == 0.0));
        let cfg = cfg.with_betas([c(0.5, 0.0), c(0.0, 0.7), c(-0.4, 0.2)]);
        let (rho, p) = herald(&cfg).unwrap();
        let want: f64 = [0.25f64, 0.49, 0.2].iter().map(|b| 1.0 - (-b).exp()).product();
        assert!((p - want).abs() < 1e-14);
        assert!((rho.element(0, 0).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn higher_photon_numbers_are_suppressed() {
        for lambda in [0.05, 0.1] {
            for betas in [[c(0.0, 0.0); 3], [c(0.3, 0.0), c(-0.2, 0.1), c(0.0, 0.4)]] {
                let cfg = HeraldConfig::new(lambda).with_betas(betas);
                let (rho, _) = herald(&cfg).unwrap();
                let p = photon_probs(&rho).unwrap();
                let above: f64 = p[4..].iter().sum();
                assert!(above <= lambda * lambda * 10.0, "lambda {lambda}: {above}");
            }
        }
    }

    #[test]
    fn success_probability_grows_with_real_displacement() {
        let amps = [0.0, 0.1, 0.2, 0.4, 0.7, 1.0, 1.5];
        for arm in 0..3 {
            for other in [0.0, 0.3] {
                let mut last = 0.0;
                for &a in &amps {
                    let mut betas = [c(other, 0.0); 3];
                    betas[arm] = c(a, 0.0);
                    let cfg = HeraldConfig::new(0.1).with_betas(betas);
                    let p = herald(&cfg).map(|r| r.1).unwrap_or(0.0);
                    assert!(p >= last * (1.0 - 1e-12), "arm {arm} a {a}: {p} < {last}");
                    last = p;
                }
            }
        }
    }

    #[test]
    fn heralding_is_phase_covariant() {
        let betas = [c(0.3, -0.1), c(-0.2, 0.25), c(0.1, 0.4)];
        let phi: f64 = 0.73;
        let rot = C64::from_polar(1.0, phi);
        let (rho, p) = herald(&HeraldConfig::new(0.1).with_betas(betas)).unwrap();
        let (rho_r, p_r) = herald(&HeraldConfig::new(0.1).with_betas(betas.map(|b| b * rot))).unwrap();
        assert!((p - p_r).abs() < 1e-14);
        // rotated displacements give exp(-i phi n) rho exp(i phi n)
        for m in 0..rho.dim() {
            for n in 0..rho.dim() {
                let phase = C64::from_polar(1.0, -phi * (m as f64 - n as f64));
                assert!((rho_r.element(m, n) - rho.element(m, n) * phase).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = HeraldConfig::new(0.1).with_betas([c(0.1, 0.2), c(0.0, -0.3), c(0.5, 0.0)]);
        let text = cfg.to_json().unwrap();
        assert_eq!(HeraldConfig::from_json(&text).unwrap(), cfg);
        assert_eq!(HeraldConfig::from_json(r#"{"lambda": 0.1}"#).unwrap(), HeraldConfig::new(0.1));
        assert!(matches!(HeraldConfig::from_json(r#"{"lambda": "x"}"#), Err(Error::Json(_))));
        let bad = text.replace("0.1,", "0.9,");
        assert!(matches!(HeraldConfig::from_json(&bad), Err(Error::InvalidParameter(_))));
        let extra = text.replacen('{', r#"{"gain": 1.0,"#, 1);
        assert!(HeraldConfig::from_json(&extra).is_err());
    }

    #[test]
    fn optimizer_finds_undisplaced_optimum_for_three_photons() {
        let t = Truncation::new(5).unwrap();
        let res = optimize_betas(&fock(3, t).unwrap(), &HeraldConfig::new(0.1), &OptimizeOptions::default()).unwrap();
        for b in res.config.betas() {
            assert!(b.norm() < 0.05, "{b}");
        }
        assert!(res.fidelity > 0.95);
    }

    #[test]
    fn optimizer_rejects_degenerate_targets() {
        let t = Truncation::new(8).unwrap();
        let base = HeraldConfig::new(0.1);
        assert!(matches!(
            optimize_betas(&fock(0, t).unwrap(), &base, &OptimizeOptions::default()),
            Err(Error::DegenerateTarget(_))
        ));
        assert!(matches!(
            optimize_betas(&fock(5, t).unwrap(), &base, &OptimizeOptions::default()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn optimizer_is_deterministic() {
        let t = Truncation::new(8).unwrap();
        let target = cubic_state(0.3, t, CubicMethod::Analytic);
        let opts = OptimizeOptions {
            random_starts: 3,
            ..Default::default()
        };
        let a = optimize_betas(&target, &HeraldConfig::new(0.1), &opts).unwrap();
        let b = optimize_betas(&target, &HeraldConfig::new(0.1), &opts).unwrap();
        assert_eq!(a.config, b.config);
        assert_eq!(a.fidelity, b.fidelity);
    }
}
