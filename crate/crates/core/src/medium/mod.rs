//! Distributed gain/loss medium: `N` interleaved stages of elementary gain
//! `g` and elementary probe transmission `t`, followed by a detector of
//! efficiency `η` acting on both beams.

mod optimum;
mod surface;

pub use optimum::{find_optimum_gain, find_optimum_transmission, GainOptimum, GainSearch, TransmissionOptimum, TransmissionSearch};
pub use surface::{squeezing_surface, AxisSpec, SurfaceGrid, SurfaceSpec};

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use serde::Serialize;

use crate::error::{check_gain, Error, Result};
use crate::gaussian::{
    attenuator, compose, twin_statistics, two_mode_squeezer, BogoliubovTransform, GaussianState, ModeSet, PhotonStats,
};

pub const DEFAULT_STAGES: usize = 200;
pub const DEFAULT_SEED_PHOTONS: f64 = 1e8;
pub const DEFAULT_EFFICIENCY: f64 = 0.9;

/// Intrinsic medium parameters.
///
/// `gain` is the probe gain of the stack with all loss removed and
/// `transmission` the probe transmission with all gain removed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MediumParams {
    pub gain: f64,
    pub transmission: f64,
    pub stages: usize,
}

impl MediumParams {
    pub fn new(gain: f64, transmission: f64, stages: usize) -> Result<Self> {
        check_gain(gain)?;
        if !(transmission > 0.0 && transmission <= 1.0) {
            return Err(Error::InvalidTransmission(transmission));
        }
        if stages == 0 {
            return Err(Error::InvalidStages(stages));
        }
        Ok(Self {
            gain,
            transmission,
            stages,
        })
    }

    pub fn with_default_stages(gain: f64, transmission: f64) -> Result<Self> {
        Self::new(gain, transmission, DEFAULT_STAGES)
    }

    /// Rebuilds the intrinsic parameters from per-stage values.
    ///
    /// For large `N` the elementary gain sits within ~1e-5 of 1, so an `f64`
    /// `g` only pins `G` to roughly `ε/(g − 1)` relative accuracy. Use
    /// [`MediumParams::from_elementary_rapidity`] when exact round trips matter.
    pub fn from_elementary(gain: f64, transmission: f64, stages: usize) -> Result<Self> {
        check_gain(gain)?;
        Self::from_elementary_rapidity(gain.sqrt().acosh(), transmission, stages)
    }

    /// Same as [`MediumParams::from_elementary`] with the elementary gain given
    /// as its rapidity `arccosh(√g)`.
    pub fn from_elementary_rapidity(rapidity: f64, transmission: f64, stages: usize) -> Result<Self> {
        if stages == 0 {
            return Err(Error::InvalidStages(stages));
        }
        if !(rapidity.is_finite() && rapidity >= 0.0) {
            return Err(Error::InvalidParameter(format!("rapidity {rapidity}")));
        }
        let total = (rapidity * stages as f64).cosh().powi(2);
        Self::new(total, transmission.powi(stages as i32), stages)
    }

    /// `arccosh(√g)`, the per-stage share of the total rapidity `arccosh(√G)`.
    pub fn elementary_rapidity(&self) -> f64 {
        self.gain.sqrt().acosh() / self.stages as f64
    }

    /// Elementary gain `g = cosh²(arccosh(√G)/N)`.
    pub fn elementary_gain(&self) -> f64 {
        self.elementary_rapidity().cosh().powi(2)
    }

    /// Elementary transmission `t = T^(1/N)`.
    pub fn elementary_transmission(&self) -> f64 {
        self.transmission.powf(1.0 / self.stages as f64)
    }
}

/// Total detection efficiency, applied as the same loss to both beams.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetectionParams {
    pub efficiency: f64,
}

impl DetectionParams {
    pub fn new(efficiency: f64) -> Result<Self> {
        if efficiency > 0.0 && efficiency <= 1.0 {
            Ok(Self { efficiency })
        } else {
            Err(Error::InvalidEfficiency(efficiency))
        }
    }

    pub fn ideal() -> Self {
        Self { efficiency: 1.0 }
    }
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            efficiency: DEFAULT_EFFICIENCY,
        }
    }
}

/// Order of the two elementary operations inside one stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageOrder {
    #[default]
    GainFirst,
    LossFirst,
}

/// Measured-style observables of the twin beams.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwinBeamObservables {
    /// Probe output over probe input at the end of the medium (detection excluded).
    pub effective_gain: f64,
    /// Conjugate over probe output power.
    pub conjugate_ratio: f64,
    /// Detected probe photon number.
    pub mean_probe: f64,
    /// Detected conjugate photon number.
    pub mean_conjugate: f64,
    /// Detected `Var(N_a − N_b)`.
    pub var_diff: f64,
    /// `Var(N_a − N_b) / (N_a + N_b)`; 1 is the shot-noise level.
    pub squeezing: f64,
    pub squeezing_db: f64,
}

fn check_seed(seed_photons: f64) -> Result<()> {
    if seed_photons.is_finite() && seed_photons > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSeed(seed_photons))
    }
}

/// Explicit transform of the medium with one loss ancilla (`c1..cN`) per stage.
pub fn build_medium(p: &MediumParams) -> Result<BogoliubovTransform> {
    build_medium_with_order(p, StageOrder::GainFirst)
}

pub fn build_medium_with_order(p: &MediumParams, order: StageOrder) -> Result<BogoliubovTransform> {
    let g = p.elementary_gain();
    let t = p.elementary_transmission();
    let twin = ModeSet::twin_beam();
    let mut chain = BogoliubovTransform::identity(&twin);
    for k in 1..=p.stages {
        let squeeze = |modes: &ModeSet| two_mode_squeezer(g, modes, (twin.probe(), twin.conjugate()));
        let lose = |modes: &ModeSet| attenuator(t, modes, twin.probe(), &format!("c{k}"));
        match order {
            StageOrder::GainFirst => {
                chain = compose(&chain, &squeeze(chain.output())?)?;
                chain = compose(&chain, &lose(chain.output())?)?;
            }
            StageOrder::LossFirst => {
                chain = compose(&chain, &lose(chain.output())?)?;
                chain = compose(&chain, &squeeze(chain.output())?)?;
            }
        }
    }
    Ok(chain)
}

/// Probe/conjugate moments carried through the stack without ancillas.
#[derive(Clone, Copy, Debug)]
struct TwinMoments {
    mean: Vector4<f64>,
    cov: Matrix4<f64>,
}

impl TwinMoments {
    fn from_state(s: &GaussianState) -> Self {
        Self {
            mean: Vector4::from_iterator(s.displacement().iter().take(4).copied()),
            cov: s.covariance().fixed_view::<4, 4>(0, 0).into_owned(),
        }
    }

    fn into_state(self) -> GaussianState {
        GaussianState::new(
            ModeSet::twin_beam(),
            DVector::from_iterator(4, self.mean.iter().copied()),
            DMatrix::from_iterator(4, 4, self.cov.iter().copied()),
        )
        .expect("4x4 twin-beam moments")
    }

    fn symplectic(&mut self, s: &Matrix4<f64>) {
        self.mean = s * self.mean;
        self.cov = s * self.cov * s.transpose();
    }

    /// Loss with amplitude transmissions `k` per quadrature: `V → KVK + (I − K²)`.
    fn loss(&mut self, k: &Vector4<f64>) {
        let kk = Matrix4::from_diagonal(k);
        self.mean = kk * self.mean;
        self.cov = kk * self.cov * kk + Matrix4::from_diagonal(&k.map(|x| 1.0 - x * x));
    }
}

fn gain_symplectic(g: f64) -> Matrix4<f64> {
    let twin = ModeSet::twin_beam();
    let s = two_mode_squeezer(g, &twin, (twin.probe(), twin.conjugate()))
        .expect("elementary gain >= 1")
        .symplectic();
    Matrix4::from_iterator(s.iter().copied())
}

/// Propagates a probe/conjugate state through the medium with per-stage
/// closed-form updates. Agrees with `apply(build_medium(p), state)` restricted
/// to the twin modes.
pub fn propagate_medium(p: &MediumParams, order: StageOrder, input: &GaussianState) -> Result<GaussianState> {
    if input.modes() != &ModeSet::twin_beam() {
        return Err(Error::ModeMismatch(format!(
            "medium propagation expects {}, got {}",
            ModeSet::twin_beam(),
            input.modes()
        )));
    }
    let s = gain_symplectic(p.elementary_gain());
    let kt = p.elementary_transmission().sqrt();
    let probe_loss = Vector4::new(kt, kt, 1.0, 1.0);
    let mut m = TwinMoments::from_state(input);
    for _ in 0..p.stages {
        match order {
            StageOrder::GainFirst => {
                m.symplectic(&s);
                m.loss(&probe_loss);
            }
            StageOrder::LossFirst => {
                m.loss(&probe_loss);
                m.symplectic(&s);
            }
        }
        m.cov = (m.cov + m.cov.transpose()) * 0.5;
    }
    Ok(m.into_state())
}

/// Applies equal loss `η` to probe and conjugate.
pub fn detect(state: &GaussianState, d: &DetectionParams) -> Result<GaussianState> {
    if state.modes() != &ModeSet::twin_beam() {
        return Err(Error::ModeMismatch("detection acts on the twin-beam modes".into()));
    }
    let mut m = TwinMoments::from_state(state);
    m.loss(&Vector4::repeat(d.efficiency.sqrt()));
    Ok(m.into_state())
}

fn observables(pre: &PhotonStats, post: &PhotonStats, seed_photons: f64) -> TwinBeamObservables {
    let squeezing = post.noise_ratio();
    TwinBeamObservables {
        effective_gain: pre.mean_a / seed_photons,
        conjugate_ratio: pre.mean_b / pre.mean_a,
        mean_probe: post.mean_a,
        mean_conjugate: post.mean_b,
        var_diff: post.var_diff,
        squeezing,
        squeezing_db: 10.0 * squeezing.log10(),
    }
}

/// Seeds the probe with a coherent state of `seed_photons`, runs it through
/// the medium and the detector, and returns exact twin-beam observables.
pub fn simulate_twin_beams(p: &MediumParams, d: &DetectionParams, seed_photons: f64) -> Result<TwinBeamObservables> {
    simulate_with_order(p, d, seed_photons, StageOrder::GainFirst)
}

pub fn simulate_with_order(
    p: &MediumParams,
    d: &DetectionParams,
    seed_photons: f64,
    order: StageOrder,
) -> Result<TwinBeamObservables> {
    check_seed(seed_photons)?;
    let seed = GaussianState::coherent_seed(&ModeSet::twin_beam(), seed_photons)?;
    let out = propagate_medium(p, order, &seed)?;
    let pre = twin_statistics(&out);
    let post = twin_statistics(&detect(&out, d)?);
    Ok(observables(&pre, &post, seed_photons))
}

/// `(G_eff, r)` at the exit of the medium, detection excluded.
pub fn forward_map(p: &MediumParams, seed_photons: f64) -> Result<(f64, f64)> {
    check_seed(seed_photons)?;
    let seed = GaussianState::coherent_seed(&ModeSet::twin_beam(), seed_photons)?;
    let out = twin_statistics(&propagate_medium(p, StageOrder::GainFirst, &seed)?);
    Ok((out.mean_a / seed_photons, out.mean_b / out.mean_a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::apply;

    fn max_block_diff(x: &BogoliubovTransform, y: &BogoliubovTransform) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((x.a()[(i, j)] - y.a()[(i, j)]).norm());
                worst = worst.max((x.b()[(i, j)] - y.b()[(i, j)]).norm());
            }
        }
        worst
    }

    #[test]
    fn elementary_round_trip() {
        for &(g, t, n) in &[(9.0, 0.9, 200), (1.0, 0.5, 7), (15.0, 0.6, 400), (1.5, 1.0, 1), (20.0, 0.85, 200)] {
            let p = MediumParams::new(g, t, n).unwrap();
            let exact = MediumParams::from_elementary_rapidity(p.elementary_rapidity(), p.elementary_transmission(), n).unwrap();
            assert!((exact.gain - g).abs() < 1e-12 * g, "{g} {}", exact.gain);
            assert!((exact.transmission - t).abs() < 1e-12);
            // through an f64 elementary gain the round trip is limited by ε/(g − 1)
            let coarse = MediumParams::from_elementary(p.elementary_gain(), p.elementary_transmission(), n).unwrap();
            assert!((coarse.gain - g).abs() < 1e-10 * g, "{g} {}", coarse.gain);
            assert!(p.elementary_gain() >= 1.0 && p.elementary_transmission() <= 1.0);
        }
    }

    #[test]
    fn parameter_validation() {
        assert_eq!(MediumParams::new(0.9, 0.5, 10).unwrap_err(), Error::InvalidGain(0.9));
        assert_eq!(MediumParams::new(2.0, 0.0, 10).unwrap_err(), Error::InvalidTransmission(0.0));
        assert_eq!(MediumParams::new(2.0, 0.5, 0).unwrap_err(), Error::InvalidStages(0));
        assert_eq!(DetectionParams::new(0.0).unwrap_err(), Error::InvalidEfficiency(0.0));
        assert!(DetectionParams::new(1.1).is_err());
        let p = MediumParams::new(2.0, 0.5, 10).unwrap();
        assert_eq!(
            simulate_twin_beams(&p, &DetectionParams::ideal(), 0.0).unwrap_err(),
            Error::InvalidSeed(0.0)
        );
    }

    #[test]
    fn pure_gain_stack_is_one_squeezer() {
        let p = MediumParams::new(9.0, 1.0, 200).unwrap();
        let m = build_medium(&p).unwrap();
        let twin = ModeSet::twin_beam();
        let single = two_mode_squeezer(9.0, &twin, ("a", "b")).unwrap();
        assert!(max_block_diff(&m, &single) < 1e-9);
        assert!(m.bogoliubov_defect() < 1e-10);
    }

    #[test]
    fn pure_loss_stack_transmits_t() {
        let p = MediumParams::new(1.0, 0.8, 200).unwrap();
        let m = build_medium(&p).unwrap();
        assert!((m.a()[(0, 0)].re - 0.8f64.sqrt()).abs() < 1e-12);
        let s = apply(&m, &GaussianState::coherent_seed(&ModeSet::twin_beam(), 5.0).unwrap()).unwrap();
        let st = twin_statistics(&s);
        assert!((st.mean_a - 4.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_path_matches_explicit_ancillas() {
        let seed = GaussianState::coherent_seed(&ModeSet::twin_beam(), 3.0).unwrap();
        for order in [StageOrder::GainFirst, StageOrder::LossFirst] {
            for n in 1..=10 {
                let p = MediumParams::new(4.0, 0.7, n).unwrap();
                let explicit = apply(&build_medium_with_order(&p, order).unwrap(), &seed).unwrap();
                let fast = propagate_medium(&p, order, &seed).unwrap();
                let dv = (explicit.covariance().view((0, 0), (4, 4)) - fast.covariance()).amax();
                let dd = (explicit.displacement().rows(0, 4) - fast.displacement()).amax();
                assert!(dv < 1e-10 && dd < 1e-10, "N={n} {order:?}: {dv:e} {dd:e}");
            }
        }
    }

    #[test]
    fn ideal_amplifier_limit() {
        let p = MediumParams::new(9.0, 1.0, 200).unwrap();
        let o = simulate_twin_beams(&p, &DetectionParams::ideal(), 1e8).unwrap();
        assert!((o.squeezing * 17.0 - 1.0).abs() < 1e-6);
        assert!((o.squeezing_db + 12.30).abs() < 0.01);
    }

    #[test]
    fn no_interaction_is_shot_noise() {
        for seed in [1.0, 37.0, 1e8] {
            let p = MediumParams::new(1.0, 1.0, 200).unwrap();
            let o = simulate_twin_beams(&p, &DetectionParams::ideal(), seed).unwrap();
            assert!((o.squeezing - 1.0).abs() < 1e-9);
            assert!(o.squeezing_db.abs() < 1e-8);
        }
    }

    #[test]
    fn detected_ideal_amplifier() {
        let p = MediumParams::new(6.0, 1.0, 200).unwrap();
        let o = simulate_twin_beams(&p, &DetectionParams::new(0.9).unwrap(), 1e8).unwrap();
        assert!((o.squeezing - (0.9 / 11.0 + 0.1)).abs() < 1e-6);
        assert!((o.squeezing - 0.18182).abs() < 1e-5);
        assert!((o.squeezing_db + 7.40).abs() < 0.01);
    }

    #[test]
    fn forward_map_limits() {
        let (ge, r) = forward_map(&MediumParams::new(9.0, 1.0, 200).unwrap(), 1e8).unwrap();
        assert!((ge - 9.0).abs() < 1e-6);
        assert!((r - 8.0 / 9.0).abs() < 1e-6);
        let (ge, r) = forward_map(&MediumParams::new(1.0, 0.63, 200).unwrap(), 1e8).unwrap();
        assert!((ge - 0.63).abs() < 1e-12);
        assert_eq!(r, 0.0);
    }

    #[test]
    fn stage_count_converges() {
        let d = DetectionParams::new(0.9).unwrap();
        let s200 = simulate_twin_beams(&MediumParams::new(9.0, 0.9, 200).unwrap(), &d, 1e8).unwrap();
        let s400 = simulate_twin_beams(&MediumParams::new(9.0, 0.9, 400).unwrap(), &d, 1e8).unwrap();
        assert!((s200.squeezing_db - s400.squeezing_db).abs() < 0.01);
    }

    #[test]
    fn detector_mixing_law() {
        let p = MediumParams::new(7.0, 0.85, 200).unwrap();
        let s1 = simulate_twin_beams(&p, &DetectionParams::ideal(), 1e8).unwrap().squeezing;
        for eta in [0.3, 0.75, 0.9, 0.99] {
            let s = simulate_twin_beams(&p, &DetectionParams::new(eta).unwrap(), 1e8).unwrap().squeezing;
            let expect = eta * s1 + (1.0 - eta);
            assert!((s - expect).abs() < 1e-6 * expect);
        }
    }

    #[test]
    fn bright_seed_invariance() {
        let p = MediumParams::new(12.0, 0.88, 200).unwrap();
        let d = DetectionParams::new(0.9).unwrap();
        let reference = simulate_twin_beams(&p, &d, 1e8).unwrap().squeezing;
        for seed in [1e6, 1e10] {
            let s = simulate_twin_beams(&p, &d, seed).unwrap().squeezing;
            assert!((s - reference).abs() < 1e-6 * reference);
        }
        let dim = simulate_twin_beams(&p, &d, 1e4).unwrap().squeezing;
        assert!((10.0 * (dim / reference).log10()).abs() < 1e-3);
    }
}
