//! Closed-form models for photonic entanglement generation between adjacent
//! nodes.
//!
//! Four heralding schemes are covered: resonant elastic scattering through an
//! interferometer (with or without photon-number resolution at the detector),
//! weak-drive Raman scattering, and π-pulse excitation conditioned on one or
//! two detection events. Each maps emitter/cavity/detector rates and the
//! fiber link to an initial pair fidelity, a per-attempt success probability,
//! and the average wall-clock time per heralded pair.
//!
//! Rates are angular frequencies in s⁻¹, times in seconds, distances in km;
//! unit conversions happen at config ingestion, never here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Emitter, cavity and detector rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalParams {
    /// Emitter-cavity coupling rate g.
    pub coupling: f64,
    /// Cavity decay rate κ.
    pub cavity_decay: f64,
    /// Radiative decay rate γ.
    pub radiative_decay: f64,
    /// Homogeneous broadening Γ (white-noise fluctuation of the transition).
    pub broadening: f64,
    /// Drive Rabi frequency Ω.
    pub rabi: f64,
    /// Laser pulse duration t₀ in seconds.
    pub pulse_duration: f64,
    /// External collection/detection efficiency ζ for light leaving the cavity.
    pub collection: f64,
    /// Detector dark-count rate in Hz.
    pub dark_count_rate: f64,
    /// Electron spin dephasing rate γₑ in Hz.
    pub dephasing_rate: f64,
}

impl OpticalParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("coupling", self.coupling),
            ("cavity_decay", self.cavity_decay),
            ("radiative_decay", self.radiative_decay),
            ("broadening", self.broadening),
            ("rabi", self.rabi),
            ("pulse_duration", self.pulse_duration),
            ("dark_count_rate", self.dark_count_rate),
            ("dephasing_rate", self.dephasing_rate),
        ];
        for (name, v) in rates {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!("{name} = {v} must be a finite rate >= 0")));
            }
        }
        if !(0.0..=1.0).contains(&self.collection) {
            return Err(Error::Domain(format!(
                "collection = {} not in [0, 1]",
                self.collection
            )));
        }
        Ok(())
    }

    /// Non-fatal modeling caveats: the closed forms assume a weak drive,
    /// `Ω < 0.1 (γ + Γ)`.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let linewidth = self.radiative_decay + self.broadening;
        if self.rabi >= 0.1 * linewidth {
            out.push(format!(
                "weak-drive condition violated: rabi = {} >= 0.1 * (radiative_decay + broadening) = {}",
                self.rabi,
                0.1 * linewidth
            ));
        }
        out
    }

    /// Caveats specific to the π-pulse schemes, which adiabatically eliminate
    /// the cavity and need `κ ≫ g, γ, Γ`.
    pub fn adiabatic_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let fastest = self
            .coupling
            .max(self.radiative_decay)
            .max(self.broadening);
        if self.cavity_decay < 10.0 * fastest {
            out.push(format!(
                "adiabatic condition weak: cavity_decay = {} < 10 * max(g, gamma, broadening) = {}",
                self.cavity_decay,
                10.0 * fastest
            ));
        }
        out
    }

    /// Cooperativity-like ratio `4g²/κ(γ+Γ)` that controls Purcell
    /// enhancement of emission into the cavity.
    fn cavity_ratio(&self) -> Result<f64> {
        let denom = self.cavity_decay * (self.radiative_decay + self.broadening);
        if denom <= 0.0 {
            return Err(Error::SingularParameters(
                "cavity_decay and radiative_decay + broadening must be positive".into(),
            ));
        }
        Ok(4.0 * self.coupling * self.coupling / denom)
    }

    /// Purcell-enhanced decay rate `γ_eff = γ (1 + 4g²/κγ)`.
    pub fn purcell_rate(&self) -> Result<f64> {
        if self.cavity_decay <= 0.0 || self.radiative_decay <= 0.0 {
            return Err(Error::SingularParameters(
                "purcell_rate needs cavity_decay > 0 and radiative_decay > 0".into(),
            ));
        }
        Ok(self.radiative_decay
            * (1.0 + 4.0 * self.coupling * self.coupling / (self.cavity_decay * self.radiative_decay)))
    }
}

/// Fiber link between adjacent nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// Inter-node distance L₀ in km.
    pub length_km: f64,
    /// Fiber loss in dB/km.
    pub attenuation_db_per_km: f64,
    /// Classical / photonic propagation speed in km/s.
    pub signal_speed_km_s: f64,
    /// Optional explicit one-hop communication time; when set it overrides
    /// `length_km / signal_speed_km_s`.
    pub classical_delay_override_s: Option<f64>,
}

/// Default signal speed in optical fiber, km/s.
pub const FIBER_SIGNAL_SPEED_KM_S: f64 = 2.0e5;

impl LinkParams {
    pub fn new(length_km: f64, attenuation_db_per_km: f64) -> Result<Self> {
        let link = Self {
            length_km,
            attenuation_db_per_km,
            signal_speed_km_s: FIBER_SIGNAL_SPEED_KM_S,
            classical_delay_override_s: None,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_km > 0.0) {
            return Err(Error::Domain(format!("length_km = {} must be > 0", self.length_km)));
        }
        if !(self.attenuation_db_per_km >= 0.0) {
            return Err(Error::Domain(format!(
                "attenuation_db_per_km = {} must be >= 0",
                self.attenuation_db_per_km
            )));
        }
        if !(self.signal_speed_km_s > 0.0) {
            return Err(Error::Domain(format!(
                "signal_speed_km_s = {} must be > 0",
                self.signal_speed_km_s
            )));
        }
        if let Some(tc) = self.classical_delay_override_s {
            if !(tc > 0.0) {
                return Err(Error::Domain(format!(
                    "classical_delay_override_s = {tc} must be > 0"
                )));
            }
        }
        Ok(())
    }

    /// One-hop classical communication time t_c in seconds.
    pub fn classical_delay(&self) -> f64 {
        self.classical_delay_override_s
            .unwrap_or(self.length_km / self.signal_speed_km_s)
    }

    /// Power transmission of the fiber span, `10^(−attenuation·L₀/10)`.
    pub fn fiber_transmission(&self) -> f64 {
        10f64.powf(-self.attenuation_db_per_km * self.length_km / 10.0)
    }
}

/// Which heralding scheme generates the elementary pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SchemeKind {
    /// State-selective elastic scattering interfered on a beamsplitter.
    ResonantScattering { resolve_photon_number: bool },
    /// Weak-drive Raman scattering with perfect spectral filtering.
    Raman,
    /// π-pulse excitation heralded by a single detection inside a time window.
    PiPulseSingle { mixing_angle: f64, window: f64 },
    /// π-pulse excitation heralded by two successive detections.
    PiPulseDouble,
}

/// Steady-state moments of the cavity field and emitter coherence under weak
/// drive: `⟨α⟩`, `⟨|α|²⟩`, `⟨β⟩`. With broadening the second moment does not
/// factor, `⟨|α|²⟩ ≠ |⟨α⟩|²`, signalling incoherent scattering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityMoments {
    pub mean_alpha: num_complex::Complex64,
    pub mean_alpha_sq: f64,
    pub mean_beta: num_complex::Complex64,
}

pub fn cavity_moments(opt: &OpticalParams) -> Result<CavityMoments> {
    opt.validate()?;
    let linewidth = opt.radiative_decay + opt.broadening;
    if opt.cavity_decay <= 0.0 || linewidth <= 0.0 {
        return Err(Error::SingularParameters(
            "cavity_moments needs cavity_decay > 0 and radiative_decay + broadening > 0".into(),
        ));
    }
    let c = opt.cavity_ratio()?;
    let g = opt.coupling;
    let omega = opt.rabi;
    let kappa = opt.cavity_decay;

    let mean_alpha = num_complex::Complex64::new(
        -2.0 * g * omega / (kappa * linewidth * (1.0 + c)),
        0.0,
    );
    let mean_alpha_sq = (4.0 * g * g * omega * omega / (kappa * kappa * linewidth * linewidth))
        / ((1.0 + c)
            * (1.0 - opt.broadening * kappa / (linewidth * (opt.radiative_decay + kappa)) + c));
    let mean_beta = num_complex::Complex64::new(0.0, -omega / (linewidth * (1.0 + c)));
    Ok(CavityMoments {
        mean_alpha,
        mean_alpha_sq,
        mean_beta,
    })
}

/// Fidelity penalty from homogeneous broadening with a finite-linewidth
/// cavity filter:
/// `(3/2) · Γ/(γ+Γ) · κ/(γ+κ) · 1/(1 + 4g²/κ(γ+Γ))`.
pub fn broadening_infidelity(opt: &OpticalParams) -> f64 {
    if opt.broadening == 0.0 {
        return 0.0;
    }
    let linewidth = opt.radiative_decay + opt.broadening;
    let c = 4.0 * opt.coupling * opt.coupling / (opt.cavity_decay * linewidth);
    1.5 * (opt.broadening / linewidth)
        * (opt.cavity_decay / (opt.radiative_decay + opt.cavity_decay))
        * (1.0 / (1.0 + c))
}

/// Total photon emission probability per attempt,
/// `P_em = t₀Ω² / [(γ+Γ)(1 + 4g²/κ(γ+Γ))]`.
pub fn emission_probability(opt: &OpticalParams) -> Result<f64> {
    let linewidth = opt.radiative_decay + opt.broadening;
    if linewidth <= 0.0 {
        return Err(Error::SingularParameters(
            "emission_probability needs radiative_decay + broadening > 0".into(),
        ));
    }
    let c = opt.cavity_ratio()?;
    Ok(opt.pulse_duration * opt.rabi * opt.rabi / (linewidth * (1.0 + c)))
}

/// Local collection efficiency `ζ · P_cav` before fiber loss. The cavity
/// capture probability includes the broadened linewidth for the scattering
/// schemes (`broadened = true`) and the bare radiative linewidth for the
/// π-pulse schemes.
pub fn collection_efficiency(opt: &OpticalParams, broadened: bool) -> Result<f64> {
    if opt.coupling == 0.0 || opt.collection == 0.0 {
        return Ok(0.0);
    }
    let linewidth = if broadened {
        opt.radiative_decay + opt.broadening
    } else {
        opt.radiative_decay
    };
    let denom = opt.cavity_decay * linewidth;
    if denom <= 0.0 {
        return Err(Error::SingularParameters(
            "collection_efficiency needs cavity_decay and the linewidth positive".into(),
        ));
    }
    let c = 4.0 * opt.coupling * opt.coupling / denom;
    Ok(opt.collection * c / (1.0 + c))
}

/// One heralded elementary pair: initial fidelity, per-attempt success
/// probability, average generation time, and the ingredients behind them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationOutcome {
    /// Scalar initial fidelity F₀ of the heralded pair.
    pub fidelity: f64,
    /// Per-attempt heralding probability P.
    pub success_prob: f64,
    /// Average time per pair, `T₀ = (t₀ + t_c)/P`, seconds.
    pub pair_time: f64,
    /// Photon emission probability per attempt.
    pub emission_prob: f64,
    /// Total collection efficiency ε including cavity, fiber and detector.
    pub collection_eff: f64,
}

/// Inputs shared by all schemes once reduced to emission probability and
/// collection efficiency. `epsilon_local` is `ζ·P_cav` before fiber loss.
#[derive(Debug, Clone, Copy)]
pub struct ReducedGeneration {
    pub emission_prob: f64,
    pub epsilon_local: f64,
    pub pulse_duration: f64,
    pub dark_count_rate: f64,
    pub dephasing_rate: f64,
    /// Additive fidelity penalty from broadening (resonant scheme only).
    pub broadening_penalty: f64,
}

impl ReducedGeneration {
    pub fn from_optical(opt: &OpticalParams, broadened_collection: bool) -> Result<Self> {
        opt.validate()?;
        Ok(Self {
            emission_prob: emission_probability(opt)?,
            epsilon_local: collection_efficiency(opt, broadened_collection)?,
            pulse_duration: opt.pulse_duration,
            dark_count_rate: opt.dark_count_rate,
            dephasing_rate: opt.dephasing_rate,
            broadening_penalty: broadening_infidelity(opt),
        })
    }

    /// Direct construction for parameter presets that quote `P_em` and `ε`
    /// instead of raw rates.
    pub fn from_quoted(emission_prob: f64, epsilon_local: f64, pulse_duration: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&emission_prob) {
            return Err(Error::Domain(format!("p_em = {emission_prob} not in [0, 1]")));
        }
        if !(0.0..=1.0).contains(&epsilon_local) {
            return Err(Error::Domain(format!(
                "epsilon_local = {epsilon_local} not in [0, 1]"
            )));
        }
        if !(pulse_duration >= 0.0) {
            return Err(Error::Domain(format!(
                "pulse_duration = {pulse_duration} must be >= 0"
            )));
        }
        Ok(Self {
            emission_prob,
            epsilon_local,
            pulse_duration,
            dark_count_rate: 0.0,
            dephasing_rate: 0.0,
            broadening_penalty: 0.0,
        })
    }
}

/// Dephasing and dark-count penalties common to every scheme. Dark counts
/// admix the unheralded state at rate `γ_dc·t₀/P`; dephasing costs
/// `γₑ·(t₀ + t_c)`.
fn time_penalties(red: &ReducedGeneration, t_c: f64, success_prob: f64) -> f64 {
    red.dephasing_rate * (red.pulse_duration + t_c)
        + red.dark_count_rate * red.pulse_duration / success_prob
}

fn finish_outcome(
    fidelity: f64,
    success_prob: f64,
    red: &ReducedGeneration,
    link: &LinkParams,
    eps_total: f64,
) -> Result<GenerationOutcome> {
    if success_prob <= 0.0 {
        return Err(Error::NoEntanglement(
            "per-attempt success probability is zero; no pair is ever heralded".into(),
        ));
    }
    if fidelity < 0.0 {
        return Err(Error::InfeasibleParameters(format!(
            "fidelity {fidelity} fell below zero after penalties; clamping is not applied"
        )));
    }
    let t_c = link.classical_delay();
    Ok(GenerationOutcome {
        fidelity,
        success_prob,
        pair_time: (red.pulse_duration + t_c) / success_prob,
        emission_prob: red.emission_prob,
        collection_eff: eps_total,
    })
}

/// Resonant-scattering scheme. Success probability
/// `P = (1 − e^(−εP_em/2))/2`; the multi-photon fidelity exponent is
/// `P_em(1−ε)` with a photon-number-resolving detector and `P_em(1−ε/2)`
/// without; dephasing, dark-count and broadening penalties subtract from F₀.
pub fn resonant_outcome(
    red: &ReducedGeneration,
    link: &LinkParams,
    resolve_photon_number: bool,
) -> Result<GenerationOutcome> {
    link.validate()?;
    let eps = red.epsilon_local * link.fiber_transmission();
    // exp_m1 keeps P exact when eps·P_em underflows 1 + x
    let success = -f64::exp_m1(-eps * red.emission_prob / 2.0) / 2.0;
    if success <= 0.0 {
        return Err(Error::NoEntanglement(
            "resonant scheme: eps * P_em = 0 gives no heralding clicks".into(),
        ));
    }
    let exponent = if resolve_photon_number {
        red.emission_prob * (1.0 - eps)
    } else {
        red.emission_prob * (1.0 - eps / 2.0)
    };
    let fidelity = 0.5 * (1.0 + (-exponent).exp())
        - time_penalties(red, link.classical_delay(), success)
        - red.broadening_penalty;
    finish_outcome(fidelity, success, red, link, eps)
}

/// Raman scheme under perfect filtering: `F = 1 − P_em`, `P = P_em·ε`, plus
/// the same dephasing/dark-count penalties as the resonant scheme.
pub fn raman_outcome(red: &ReducedGeneration, link: &LinkParams) -> Result<GenerationOutcome> {
    link.validate()?;
    let eps = red.epsilon_local * link.fiber_transmission();
    let success = red.emission_prob * eps;
    if success <= 0.0 {
        return Err(Error::NoEntanglement(
            "raman scheme: eps * P_em = 0 gives no heralding clicks".into(),
        ));
    }
    let fidelity = 1.0 - red.emission_prob - time_penalties(red, link.classical_delay(), success);
    finish_outcome(fidelity, success, red, link, eps)
}

/// Click-weighted average fidelity of the single-detection π-pulse scheme for
/// an explicit mixing angle and detection window, together with the window's
/// success probability.
///
/// The click density is `2εγ_eff sin²φ e^(−γ_eff t)`, and the conditional
/// fidelity at click time t is `cos²φ (1 + e^(−Γt))/2`.
pub fn pi_single_outcome(
    opt: &OpticalParams,
    link: &LinkParams,
    mixing_angle: f64,
    window: f64,
) -> Result<GenerationOutcome> {
    opt.validate()?;
    link.validate()?;
    if !(window > 0.0) {
        return Err(Error::Domain(format!("detection window {window} must be > 0")));
    }
    if !(mixing_angle > 0.0 && mixing_angle < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "mixing angle {mixing_angle} must lie in (0, pi/2)"
        )));
    }
    let gamma_eff = opt.purcell_rate()?;
    let eps_local = collection_efficiency(opt, false)?;
    let eps = eps_local * link.fiber_transmission();
    let sin2 = mixing_angle.sin().powi(2);
    let captured = -f64::exp_m1(-gamma_eff * window);
    let success = 2.0 * eps * sin2 * captured;
    if success <= 0.0 {
        return Err(Error::NoEntanglement(
            "pi-pulse single detection: no clicks inside the window".into(),
        ));
    }

    // <e^(−Γt)> over the click density restricted to [0, window]
    let coherence = if opt.broadening == 0.0 {
        1.0
    } else {
        let both = -f64::exp_m1(-(gamma_eff + opt.broadening) * window);
        (gamma_eff / (gamma_eff + opt.broadening)) * both / captured
    };
    let red = ReducedGeneration {
        emission_prob: sin2,
        epsilon_local: eps_local,
        pulse_duration: opt.pulse_duration,
        dark_count_rate: opt.dark_count_rate,
        dephasing_rate: opt.dephasing_rate,
        broadening_penalty: 0.0,
    };
    let fidelity = mixing_angle.cos().powi(2) * 0.5 * (1.0 + coherence)
        - time_penalties(&red, link.classical_delay(), success);
    finish_outcome(fidelity, success, &red, link, eps)
}

/// Printed optimum of the single-detection scheme at fixed success
/// probability: `F = 1 − sqrt(Γ/8γ_eff)·sqrt(P/ε)`.
pub fn pi_single_optimum_bound(opt: &OpticalParams, success_prob: f64, eps: f64) -> Result<f64> {
    let gamma_eff = opt.purcell_rate()?;
    if !(eps > 0.0) {
        return Err(Error::Domain("eps must be > 0".into()));
    }
    Ok(1.0 - (opt.broadening / (8.0 * gamma_eff)).sqrt() * (success_prob / eps).sqrt())
}

/// Grid search over mixing angle and window maximizing the click-averaged
/// fidelity at a fixed target success probability. Returns the best
/// `(mixing_angle, window, fidelity)`.
pub fn pi_single_optimize(
    opt: &OpticalParams,
    link: &LinkParams,
    target_success: f64,
) -> Result<(f64, f64, f64)> {
    opt.validate()?;
    if !(target_success > 0.0) {
        return Err(Error::Domain("target success probability must be > 0".into()));
    }
    let gamma_eff = opt.purcell_rate()?;
    let eps = collection_efficiency(opt, false)? * link.fiber_transmission();
    if eps <= 0.0 {
        return Err(Error::NoEntanglement("zero collection efficiency".into()));
    }
    let mut best: Option<(f64, f64, f64)> = None;
    // log-spaced windows spanning well below to well above 1/gamma_eff
    let steps = 2000;
    for k in 0..=steps {
        let exponent = -4.0 + 5.5 * (k as f64) / (steps as f64);
        let window = 10f64.powf(exponent) / gamma_eff;
        let captured = -f64::exp_m1(-gamma_eff * window);
        let sin2 = target_success / (2.0 * eps * captured);
        if !(sin2 > 0.0 && sin2 < 1.0) {
            continue;
        }
        let phi = sin2.sqrt().asin();
        let out = pi_single_outcome(opt, link, phi, window)?;
        if best.map_or(true, |(_, _, f)| out.fidelity > f) {
            best = Some((phi, window, out.fidelity));
        }
    }
    best.ok_or_else(|| {
        Error::InfeasibleParameters(format!(
            "target success probability {target_success} unreachable at eps = {eps}"
        ))
    })
}

/// Double-detection π-pulse scheme. Without broadening the heralded pair is
/// perfect with `P = ε²/2`; with broadening the fidelity at the same operating
/// point follows `F = 1 − (Γ/γ_eff ε)·sqrt(2P)`.
pub fn pi_double_outcome(opt: &OpticalParams, link: &LinkParams) -> Result<GenerationOutcome> {
    opt.validate()?;
    link.validate()?;
    let eps_local = collection_efficiency(opt, false)?;
    let eps = eps_local * link.fiber_transmission();
    let success = eps * eps / 2.0;
    if success <= 0.0 {
        return Err(Error::NoEntanglement(
            "pi-pulse double detection: zero collection efficiency".into(),
        ));
    }
    let red = ReducedGeneration {
        emission_prob: 1.0,
        epsilon_local: eps_local,
        pulse_duration: opt.pulse_duration,
        dark_count_rate: opt.dark_count_rate,
        dephasing_rate: opt.dephasing_rate,
        broadening_penalty: 0.0,
    };
    let fidelity = pi_double_fidelity(opt, eps, success)?
        - time_penalties(&red, link.classical_delay(), success);
    finish_outcome(fidelity, success, &red, link, eps)
}

/// The double-detection fidelity/success relation with the success
/// probability as a free parameter: `F = 1 − (Γ/γ_eff ε)·sqrt(2P)`.
pub fn pi_double_fidelity(opt: &OpticalParams, eps: f64, success_prob: f64) -> Result<f64> {
    if opt.broadening == 0.0 {
        return Ok(1.0);
    }
    let gamma_eff = opt.purcell_rate()?;
    if !(eps > 0.0) {
        return Err(Error::Domain("eps must be > 0".into()));
    }
    Ok(1.0 - (opt.broadening / (gamma_eff * eps)) * (2.0 * success_prob).sqrt())
}

/// Where the shelving-state loss applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShelvingContext {
    Generation,
    Measurement,
}

/// Probability of shelving into the metastable dark state during one
/// entanglement-generation cycle or one measurement. A shelving event is
/// detected (no fluorescence) and costs a restart, so this is a success-rate
/// penalty, never a fidelity penalty.
///
/// Generation: `P_W ≈ 4 Γ_S γ / (δ² ε²) · (μ′/μ)²`; measurement drops the
/// factor 4.
pub fn shelving_loss(
    shelving_rate: f64,
    detuning: f64,
    oscillator_ratio: f64,
    epsilon: f64,
    opt: &OpticalParams,
    context: ShelvingContext,
) -> Result<f64> {
    if !(detuning > 0.0) {
        return Err(Error::Domain(format!("detuning = {detuning} must be > 0")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must be > 0")));
    }
    if !(shelving_rate >= 0.0) {
        return Err(Error::Domain(format!("shelving_rate = {shelving_rate} must be >= 0")));
    }
    let base = shelving_rate * opt.radiative_decay / (detuning * detuning * epsilon * epsilon)
        * oscillator_ratio
        * oscillator_ratio;
    Ok(match context {
        ShelvingContext::Generation => 4.0 * base,
        ShelvingContext::Measurement => base,
    })
}
