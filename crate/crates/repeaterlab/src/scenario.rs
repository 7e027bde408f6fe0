//! Declarative scenario files: schema, validation diagnostics, sweep
//! handling, and the bundled presets.
//!
//! A scenario is a TOML file (conventionally `*.scenario`) selecting a
//! generation scheme, emitter and link parameters, local error rates, the
//! nesting setup, an optional one-axis parameter sweep, and the list of
//! output tables to produce.

use serde::Deserialize;

use crate::bell::{shape_state, BellVector, ErrorModel};
use crate::error::{Error, Result};
use crate::nesting::Rounds;
use crate::photonics::{
    self, GenerationOutcome, LinkParams, OpticalParams, ReducedGeneration, FIBER_SIGNAL_SPEED_KM_S,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    pub outputs: Vec<OutputKind>,
    pub scheme: SchemeSection,
    #[serde(default)]
    pub emission: Option<EmissionSection>,
    #[serde(default)]
    pub optical: Option<OpticalSection>,
    pub link: LinkSection,
    pub error: ErrorSection,
    #[serde(default)]
    pub pair: PairSection,
    #[serde(default)]
    pub nesting: Option<NestingSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    GenerationSummary,
    FidelityVsDistance,
    TimeVsDistance,
    FixedPointCurve,
    AsymptoteStaircase,
}

impl OutputKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutputKind::GenerationSummary => "generation_summary",
            OutputKind::FidelityVsDistance => "fidelity_vs_distance",
            OutputKind::TimeVsDistance => "time_vs_distance",
            OutputKind::FixedPointCurve => "fixed_point_curve",
            OutputKind::AsymptoteStaircase => "asymptote_staircase",
        }
    }

    fn needs_nesting(&self) -> bool {
        matches!(self, OutputKind::FidelityVsDistance | OutputKind::TimeVsDistance)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    /// One of `resonant`, `raman`, `pi_single`, `pi_double`.
    pub kind: String,
    #[serde(default)]
    pub resolve_photon_number: Option<bool>,
    #[serde(default)]
    pub mixing_angle: Option<f64>,
    #[serde(default)]
    pub window_s: Option<f64>,
}

/// Reduced emitter description: quoted emission probability and local
/// collection efficiency instead of raw cavity rates.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmissionSection {
    pub p_em: f64,
    /// ζ·P_cav before fiber loss.
    pub epsilon_local: f64,
    #[serde(default)]
    pub t0_s: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticalSection {
    pub coupling: f64,
    pub cavity_decay: f64,
    pub radiative_decay: f64,
    #[serde(default)]
    pub broadening: f64,
    pub rabi: f64,
    pub pulse_duration_s: f64,
    pub collection: f64,
    #[serde(default)]
    pub dark_count_rate_hz: f64,
    #[serde(default)]
    pub dephasing_rate_hz: f64,
}

impl OpticalSection {
    pub fn to_params(&self) -> OpticalParams {
        OpticalParams {
            coupling: self.coupling,
            cavity_decay: self.cavity_decay,
            radiative_decay: self.radiative_decay,
            broadening: self.broadening,
            rabi: self.rabi,
            pulse_duration: self.pulse_duration_s,
            collection: self.collection,
            dark_count_rate: self.dark_count_rate_hz,
            dephasing_rate: self.dephasing_rate_hz,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub length_km: f64,
    pub attenuation_db_per_km: f64,
    #[serde(default)]
    pub signal_speed_km_s: Option<f64>,
    #[serde(default)]
    pub classical_delay_s: Option<f64>,
}

impl LinkSection {
    pub fn to_params(&self) -> LinkParams {
        LinkParams {
            length_km: self.length_km,
            attenuation_db_per_km: self.attenuation_db_per_km,
            signal_speed_km_s: self.signal_speed_km_s.unwrap_or(FIBER_SIGNAL_SPEED_KM_S),
            classical_delay_override_s: self.classical_delay_s,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorSection {
    pub p: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PairSection {
    /// Direct initial-fidelity override; the scheme still sets the timing.
    #[serde(default)]
    pub f0: Option<f64>,
    #[serde(default)]
    pub upsilon: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NestingSection {
    pub stations: usize,
    pub rounds: Rounds,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Dotted path of the swept field; see [`SWEEPABLE`].
    pub parameter: String,
    pub values: Vec<f64>,
}

/// Parameter paths a sweep may vary.
pub const SWEEPABLE: [&str; 5] = [
    "pair.f0",
    "pair.upsilon",
    "error.p",
    "error.eta",
    "emission.p_em",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub severity: Severity,
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}: {}", self.path, self.message)
    }
}

pub fn parse_str(source: &str) -> Result<ScenarioFile> {
    toml::from_str(source).map_err(|e| Error::Config {
        path: "(schema)".into(),
        message: e.to_string(),
    })
}

pub fn parse_file(path: &std::path::Path) -> Result<ScenarioFile> {
    let source = std::fs::read_to_string(path)?;
    parse_str(&source)
}

impl ScenarioFile {
    /// Structural and range checks, without running any physics. Feasibility
    /// of the resolved physics is checked per sweep point by [`Self::resolve`].
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut err = |path: &str, message: String| {
            out.push(Diagnostic {
                severity: Severity::Error,
                path: path.into(),
                message,
            })
        };

        if self.schema_version != SCHEMA_VERSION {
            err(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            );
        }
        if self.name.is_empty() {
            err("name", "scenario name must not be empty".into());
        }
        if self.outputs.is_empty() {
            err("outputs", "at least one output kind is required".into());
        }

        let kind = self.scheme.kind.as_str();
        if !["resonant", "raman", "pi_single", "pi_double"].contains(&kind) {
            err(
                "scheme.kind",
                format!("unknown scheme `{kind}`; expected resonant|raman|pi_single|pi_double"),
            );
        }
        if kind == "pi_single" {
            match self.scheme.mixing_angle {
                Some(phi) if phi > 0.0 && phi < std::f64::consts::FRAC_PI_2 => {}
                Some(phi) => err(
                    "scheme.mixing_angle",
                    format!("{phi} not in (0, pi/2)"),
                ),
                None => err("scheme.mixing_angle", "required for pi_single".into()),
            }
            match self.scheme.window_s {
                Some(w) if w > 0.0 => {}
                Some(w) => err("scheme.window_s", format!("{w} must be > 0")),
                None => err("scheme.window_s", "required for pi_single".into()),
            }
        }
        if kind.starts_with("pi_") && self.optical.is_none() {
            err(
                "optical",
                "pi-pulse schemes need the full [optical] rates (Purcell-enhanced decay)".into(),
            );
        }
        match (&self.emission, &self.optical) {
            (None, None) => err(
                "emission",
                "one of [emission] or [optical] must describe the emitter".into(),
            ),
            (Some(_), Some(_)) => err(
                "emission",
                "[emission] and [optical] are mutually exclusive".into(),
            ),
            _ => {}
        }

        if let Some(em) = &self.emission {
            if !(0.0..=1.0).contains(&em.p_em) {
                err("emission.p_em", format!("{} not in [0, 1]", em.p_em));
            }
            if !(0.0..=1.0).contains(&em.epsilon_local) {
                err(
                    "emission.epsilon_local",
                    format!("{} not in [0, 1]", em.epsilon_local),
                );
            }
            if em.t0_s < 0.0 {
                err("emission.t0_s", format!("{} must be >= 0", em.t0_s));
            }
        }
        if let Some(opt) = &self.optical {
            let params = opt.to_params();
            if let Err(e) = params.validate() {
                err("optical", e.to_string());
            } else {
                for w in params.warnings() {
                    out.push(Diagnostic {
                        severity: Severity::Warning,
                        path: "optical".into(),
                        message: w,
                    });
                }
                if kind.starts_with("pi_") {
                    for w in params.adiabatic_warnings() {
                        out.push(Diagnostic {
                            severity: Severity::Warning,
                            path: "optical".into(),
                            message: w,
                        });
                    }
                }
            }
        }

        if let Err(e) = self.link.to_params().validate() {
            err("link", e.to_string());
        }
        if let Err(e) = ErrorModel::new(self.error.p, self.error.eta) {
            err("error", e.to_string());
        }
        if let Some(f0) = self.pair.f0 {
            if !(f0 > 0.0 && f0 <= 1.0) {
                err("pair.f0", format!("{f0} not in (0, 1]"));
            }
        }
        if !(0.0..=1.0 / 3.0).contains(&self.pair.upsilon) {
            err("pair.upsilon", format!("{} not in [0, 1/3]", self.pair.upsilon));
        }

        if let Some(nest) = &self.nesting {
            if nest.stations < 2 {
                err("nesting.stations", format!("{} must be >= 2", nest.stations));
            }
        }
        for kind in &self.outputs {
            if kind.needs_nesting() && self.nesting.is_none() {
                err(
                    "nesting",
                    format!("output `{}` requires the [nesting] section", kind.as_str()),
                );
            }
        }

        if let Some(sweep) = &self.sweep {
            if !SWEEPABLE.contains(&sweep.parameter.as_str()) {
                err(
                    "sweep.parameter",
                    format!(
                        "`{}` is not sweepable; choose one of {}",
                        sweep.parameter,
                        SWEEPABLE.join(", ")
                    ),
                );
            }
            if sweep.parameter == "emission.p_em" && self.emission.is_none() {
                err("sweep.parameter", "emission.p_em sweep needs [emission]".into());
            }
            if sweep.values.is_empty() {
                err("sweep.values", "sweep needs at least one value".into());
            }
            if let Some(bad) = sweep.values.iter().find(|v| !v.is_finite()) {
                err("sweep.values", format!("non-finite sweep value {bad}"));
            }
        }

        out
    }

    /// The sweep values, or a single `None` when the scenario has no sweep.
    pub fn sweep_points(&self) -> Vec<Option<f64>> {
        match &self.sweep {
            Some(s) => s.values.iter().copied().map(Some).collect(),
            None => vec![None],
        }
    }

    fn with_sweep_value(&self, value: f64) -> Result<ScenarioFile> {
        let mut copy = self.clone();
        let param = self
            .sweep
            .as_ref()
            .map(|s| s.parameter.as_str())
            .unwrap_or_default();
        match param {
            "pair.f0" => copy.pair.f0 = Some(value),
            "pair.upsilon" => copy.pair.upsilon = value,
            "error.p" => copy.error.p = value,
            "error.eta" => copy.error.eta = value,
            "emission.p_em" => {
                let em = copy
                    .emission
                    .as_mut()
                    .ok_or_else(|| Error::config("emission", "p_em sweep needs [emission]"))?;
                em.p_em = value;
            }
            other => {
                return Err(Error::config(
                    "sweep.parameter",
                    format!("`{other}` is not sweepable"),
                ))
            }
        }
        Ok(copy)
    }

    /// Resolves one sweep point into concrete physics inputs, checking
    /// feasibility. `sweep_value` must be `Some` exactly when the scenario
    /// declares a sweep.
    pub fn resolve(&self, sweep_value: Option<f64>) -> Result<ResolvedScenario> {
        let effective = match sweep_value {
            Some(v) => self.with_sweep_value(v)?,
            None => self.clone(),
        };
        let link = effective.link.to_params();
        link.validate()
            .map_err(|e| Error::config("link", e.to_string()))?;
        let err_model = ErrorModel::new(effective.error.p, effective.error.eta)
            .map_err(|e| Error::config("error", e.to_string()))?;

        let generation = effective.generation_outcome(&link)?;
        let f0 = match effective.pair.f0 {
            Some(f0) => f0,
            None => generation.fidelity,
        };
        let elementary = shape_state(f0, effective.pair.upsilon)
            .map_err(|e| Error::config("pair", e.to_string()))?;

        let needs_protocol = effective
            .outputs
            .iter()
            .any(|k| *k != OutputKind::GenerationSummary);
        if needs_protocol && f0 < 0.5 {
            return Err(Error::InfeasibleParameters(format!(
                "initial fidelity {f0:.4} is below 1/2; purification cannot gain \
                 (sweep value {sweep_value:?})"
            )));
        }

        Ok(ResolvedScenario {
            name: effective.name.clone(),
            sweep_value,
            outputs: effective.outputs.clone(),
            generation,
            elementary,
            err: err_model,
            upsilon: effective.pair.upsilon,
            link,
            nesting: effective.nesting.clone(),
        })
    }

    fn generation_outcome(&self, link: &LinkParams) -> Result<GenerationOutcome> {
        match self.scheme.kind.as_str() {
            "resonant" => {
                let red = self.reduced(true)?;
                photonics::resonant_outcome(&red, link, self.scheme.resolve_photon_number.unwrap_or(true))
            }
            "raman" => {
                let red = self.reduced(true)?;
                photonics::raman_outcome(&red, link)
            }
            "pi_single" => {
                let opt = self.optical_params()?;
                let phi = self
                    .scheme
                    .mixing_angle
                    .ok_or_else(|| Error::config("scheme.mixing_angle", "required for pi_single"))?;
                let window = self
                    .scheme
                    .window_s
                    .ok_or_else(|| Error::config("scheme.window_s", "required for pi_single"))?;
                photonics::pi_single_outcome(&opt, link, phi, window)
            }
            "pi_double" => {
                let opt = self.optical_params()?;
                photonics::pi_double_outcome(&opt, link)
            }
            other => Err(Error::config("scheme.kind", format!("unknown scheme `{other}`"))),
        }
    }

    fn optical_params(&self) -> Result<OpticalParams> {
        self.optical
            .as_ref()
            .map(|o| o.to_params())
            .ok_or_else(|| Error::config("optical", "section required for this scheme"))
    }

    fn reduced(&self, broadened_collection: bool) -> Result<ReducedGeneration> {
        if let Some(em) = &self.emission {
            return ReducedGeneration::from_quoted(em.p_em, em.epsilon_local, em.t0_s)
                .map_err(|e| Error::config("emission", e.to_string()));
        }
        let opt = self.optical_params()?;
        ReducedGeneration::from_optical(&opt, broadened_collection)
            .map_err(|e| Error::config("optical", e.to_string()))
    }
}

/// One sweep point fully resolved to physics inputs.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub name: String,
    pub sweep_value: Option<f64>,
    pub outputs: Vec<OutputKind>,
    pub generation: GenerationOutcome,
    /// Elementary pair vector ℱ₀ (after any direct f0 override).
    pub elementary: BellVector,
    pub err: ErrorModel,
    pub upsilon: f64,
    pub link: LinkParams,
    pub nesting: Option<NestingSection>,
}

/// A bundled named preset: its scenario source plus a one-line description.
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub source: &'static str,
}

pub fn presets() -> Vec<Preset> {
    vec![
        Preset {
            name: "nv_center",
            description: "Color-center regime: P_em 5%, local collection 0.5, Purcell factor 10, \
                          20 km spacing with 70 us classical delay",
            source: include_str!("../scenarios/nv_center.scenario"),
        },
        Preset {
            name: "headline_1000km",
            description: "50 stations at 20 km / 0.2 dB/km, P_em 8%, p = eta = 0.995, one \
                          purification round per level",
            source: include_str!("../scenarios/headline1000km.scenario"),
        },
        Preset {
            name: "fig4",
            description: "Asymptote staircase at F0 = p = eta = 0.99, phase errors only",
            source: include_str!("../scenarios/fig4.scenario"),
        },
        Preset {
            name: "fig5",
            description: "Fidelity and time vs distance to 1024 stations, F0 swept \
                          1.00/0.99/0.98/0.97/0.96, p = eta = 0.995, three rounds",
            source: include_str!("../scenarios/fig5.scenario"),
        },
        Preset {
            name: "fig6",
            description: "Asymptotic fidelity vs error shape: upsilon swept 0..0.3 at F0 = 0.99",
            source: include_str!("../scenarios/fig6.scenario"),
        },
    ]
}

pub fn preset(name: &str) -> Option<Preset> {
    presets().into_iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        r#"
schema_version = 1
name = "demo"
outputs = ["generation_summary"]

[scheme]
kind = "resonant"

[emission]
p_em = 0.05
epsilon_local = 0.5

[link]
length_km = 20.0
attenuation_db_per_km = 0.2

[error]
p = 0.995
eta = 0.995
"#
        .to_string()
    }

    #[test]
    fn minimal_scenario_parses_and_validates() {
        let sc = parse_str(&minimal()).unwrap();
        let diags = sc.diagnostics();
        assert!(diags.iter().all(|d| d.severity != Severity::Error), "{diags:?}");
        let resolved = sc.resolve(None).unwrap();
        assert!(resolved.generation.fidelity > 0.9);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = minimal().replace("p_em = 0.05", "p_em = 0.05\nbogus = 1");
        assert!(parse_str(&bad).is_err());
    }

    #[test]
    fn negative_rate_gets_field_path() {
        let src = minimal()
            .replace("[emission]\np_em = 0.05\nepsilon_local = 0.5", "[optical]\ncoupling = 1.0\ncavity_decay = -1.0\nradiative_decay = 1.0\nrabi = 0.01\npulse_duration_s = 1.0\ncollection = 1.0");
        let sc = parse_str(&src).unwrap();
        let diags = sc.diagnostics();
        assert!(diags
            .iter()
            .any(|d| d.severity == Severity::Error && d.path == "optical"));
    }

    #[test]
    fn weak_drive_violation_is_warning_only() {
        let src = minimal().replace(
            "[emission]\np_em = 0.05\nepsilon_local = 0.5",
            "[optical]\ncoupling = 1.0\ncavity_decay = 1.0\nradiative_decay = 1.0\nrabi = 5.0\npulse_duration_s = 1e-3\ncollection = 1.0",
        );
        let sc = parse_str(&src).unwrap();
        let diags = sc.diagnostics();
        assert!(diags.iter().any(|d| d.severity == Severity::Warning));
        assert!(diags.iter().all(|d| d.severity != Severity::Error));
    }

    #[test]
    fn nesting_required_for_distance_outputs() {
        let src = minimal().replace(
            r#"outputs = ["generation_summary"]"#,
            r#"outputs = ["fidelity_vs_distance"]"#,
        );
        let sc = parse_str(&src).unwrap();
        assert!(sc
            .diagnostics()
            .iter()
            .any(|d| d.severity == Severity::Error && d.path == "nesting"));
    }

    #[test]
    fn sweep_validation() {
        let src = minimal()
            + "\n[sweep]\nparameter = \"optical.coupling\"\nvalues = [1.0]\n";
        let sc = parse_str(&src).unwrap();
        assert!(sc
            .diagnostics()
            .iter()
            .any(|d| d.path == "sweep.parameter"));

        let src = minimal() + "\n[sweep]\nparameter = \"pair.f0\"\nvalues = []\n";
        let sc = parse_str(&src).unwrap();
        assert!(sc.diagnostics().iter().any(|d| d.path == "sweep.values"));
    }

    #[test]
    fn sweep_points_and_override() {
        let src = minimal() + "\n[sweep]\nparameter = \"pair.f0\"\nvalues = [0.99, 0.97]\n";
        let sc = parse_str(&src).unwrap();
        assert_eq!(sc.sweep_points(), vec![Some(0.99), Some(0.97)]);
        let resolved = sc.resolve(Some(0.97)).unwrap();
        assert_eq!(resolved.elementary.fidelity(), 0.97);
    }

    #[test]
    fn infeasible_low_fidelity_rejected_for_protocol_outputs() {
        let src = minimal().replace(
            r#"outputs = ["generation_summary"]"#,
            r#"outputs = ["asymptote_staircase"]"#,
        ) + "\n[pair]\nf0 = 0.4\n";
        let sc = parse_str(&src).unwrap();
        assert!(matches!(
            sc.resolve(None),
            Err(Error::InfeasibleParameters(_))
        ));
    }

    #[test]
    fn bundled_presets_parse_clean() {
        for preset in presets() {
            let sc = parse_str(preset.source)
                .unwrap_or_else(|e| panic!("preset {} failed to parse: {e}", preset.name));
            let errors: Vec<_> = sc
                .diagnostics()
                .into_iter()
                .filter(|d| d.severity == Severity::Error)
                .collect();
            assert!(errors.is_empty(), "preset {}: {errors:?}", preset.name);
        }
    }
}
