//! Serializable experiment descriptions, built-in presets and JSON config
//! resolution (preset base plus overrides).

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::exact::{Barenblatt, BarenblattParams, InitialDatum};
use crate::grid::{DomainShape, GridError};
use crate::model::{Confinement, Entropy, GaussianTerm, Kernel, Mobility, Model, ModelError, Potentials};
use crate::scheme::{Midpoint, SchemeOptions};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid config at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("unknown preset `{0}` (see `aggdiff presets`)")]
    UnknownPreset(String),
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Interval { a: f64, b: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Cube { a: f64, b: f64, dim: usize },
    Ball { center: Vec<f64>, radius: f64 },
    /// `(x^2 - 3.9)^2 + y^2 < 16`
    Peanut,
}

impl DomainSpec {
    pub fn build(&self) -> Result<DomainShape, ConfigError> {
        Ok(match self {
            DomainSpec::Interval { a, b } => DomainShape::interval(*a, *b)?,
            DomainSpec::Box { lower, upper } => DomainShape::open_box(lower.clone(), upper.clone())?,
            DomainSpec::Cube { a, b, dim } => DomainShape::cube(*a, *b, *dim)?,
            DomainSpec::Ball { center, radius } => DomainShape::ball(center.clone(), *radius)?,
            DomainSpec::Peanut => DomainShape::peanut(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MobilitySpec {
    /// `m(s) = s`
    Linear,
    /// `m(s) = s (alpha - s)`
    Saturation { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EntropySpec {
    Zero,
    /// `U(s) = s^m / (m - 1)`
    Power { exponent: f64 },
    /// `U(s) = s ln s`
    Boltzmann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConfinementSpec {
    Zero,
    Quadratic { coefficient: f64 },
    Linear { coefficient: f64 },
    Bump { amplitude: f64, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub amplitude: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelSpec {
    Zero,
    /// `sum a exp(-|x - y|^2 / (2 w^2))`
    Gaussians { terms: Vec<GaussianSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub mobility: MobilitySpec,
    pub entropy: EntropySpec,
    #[serde(default = "zero_confinement")]
    pub confinement: ConfinementSpec,
    #[serde(default = "zero_kernel")]
    pub kernel: KernelSpec,
}

fn zero_confinement() -> ConfinementSpec {
    ConfinementSpec::Zero
}

fn zero_kernel() -> KernelSpec {
    KernelSpec::Zero
}

impl ModelSpec {
    pub fn build(&self) -> Result<Model, ConfigError> {
        let mobility = match self.mobility {
            MobilitySpec::Linear => Mobility::linear(),
            MobilitySpec::Saturation { alpha } => Mobility::saturation(alpha)?,
        };
        let entropy = match self.entropy {
            EntropySpec::Zero => Entropy::Zero,
            EntropySpec::Power { exponent } => Entropy::power(exponent)?,
            EntropySpec::Boltzmann => Entropy::Boltzmann,
        };
        let confinement = match self.confinement {
            ConfinementSpec::Zero => Confinement::Zero,
            ConfinementSpec::Quadratic { coefficient } => Confinement::Quadratic { coefficient },
            ConfinementSpec::Linear { coefficient } => Confinement::Linear { coefficient },
            ConfinementSpec::Bump { amplitude, radius } => {
                if !(radius > 0.0) {
                    return Err(ConfigError::Invalid(format!("bump radius must be positive, got {radius}")));
                }
                Confinement::Bump { amplitude, radius }
            }
        };
        let kernel = match &self.kernel {
            KernelSpec::Zero => Kernel::Zero,
            KernelSpec::Gaussians { terms } if terms.is_empty() => Kernel::Zero,
            KernelSpec::Gaussians { terms } => {
                if let Some(t) = terms.iter().find(|t| !(t.width > 0.0)) {
                    return Err(ConfigError::Invalid(format!("Gaussian width must be positive, got {}", t.width)));
                }
                Kernel::Gaussians(terms.iter().map(|t| GaussianTerm { amplitude: t.amplitude, width: t.width }).collect())
            }
        };
        Ok(Model { mobility, entropy, potentials: Potentials { confinement, kernel, hessian_bounds: None } })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialSpec {
    Constant { value: f64 },
    /// The Barenblatt profile of the `exact` section at time 0.
    Barenblatt,
    /// `base + amplitude exp(-|x - center|^2 / (2 width^2))`
    Gaussian { base: f64, amplitude: f64, width: f64, center: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    None,
    Eps1,
    Eps2,
}

/// Envelope constants, given only when the hypotheses of the extrema bound
/// hold (Lipschitz mobility, `grad V` and `grad_x K` vanishing on the boundary).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    pub lambda: f64,
    /// `||m'||_inf`; taken from the mobility when omitted.
    #[serde(default)]
    pub lipschitz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub domain: DomainSpec,
    pub model: ModelSpec,
    /// Spacings, coarsest first; a halving chain for `eps2`.
    pub h: Vec<f64>,
    /// `tau = tau_coefficient * h^p`
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_one")]
    pub tau_coefficient: f64,
    #[serde(rename = "T")]
    pub final_time: f64,
    #[serde(default)]
    pub options: SchemeOptions,
    pub initial: InitialSpec,
    #[serde(default)]
    pub exact: Option<BarenblattParams>,
    #[serde(default = "default_estimator")]
    pub estimator: Estimator,
    /// Stop once `sup |P^{n+1} - P^n| / tau` drops below this.
    #[serde(default)]
    pub stationary_tol: Option<f64>,
    #[serde(default)]
    pub envelope: Option<EnvelopeSpec>,
    /// Snapshot cadence in steps; `ceil(N / 50)` when omitted.
    #[serde(default)]
    pub snapshot_every: Option<usize>,
    /// Whole-run retries with `tau` halved after a solver failure.
    #[serde(default = "default_retries")]
    pub max_retries: usize,
    #[serde(default = "default_true")]
    pub track_lambda: bool,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub seed: u64,
}

fn default_p() -> f64 {
    2.0
}
fn default_one() -> f64 {
    1.0
}
fn default_estimator() -> Estimator {
    Estimator::None
}
fn default_retries() -> usize {
    2
}
fn default_true() -> bool {
    true
}

impl ExperimentSpec {
    pub fn dim(&self) -> Result<usize, ConfigError> {
        Ok(self.domain.build()?.dim())
    }

    pub fn tau_for(&self, h: f64) -> f64 {
        self.tau_coefficient * h.powf(self.p)
    }

    /// Structural checks that do not need a grid.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.h.is_empty() {
            return bad("`h` must list at least one spacing".into());
        }
        if let Some(h) = self.h.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
            return bad(format!("spacings must be positive, got {h}"));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return bad(format!("`T` must be positive, got {}", self.final_time));
        }
        if !(self.tau_coefficient > 0.0 && self.p.is_finite()) {
            return bad("`tau_coefficient` must be positive and `p` finite".into());
        }
        if let Some(tol) = self.stationary_tol {
            if !(tol > 0.0) {
                return bad(format!("`stationary_tol` must be positive, got {tol}"));
            }
        }
        if self.snapshot_every == Some(0) {
            return bad("`snapshot_every` must be at least 1".into());
        }
        self.options.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        match self.estimator {
            Estimator::Eps1 if self.exact.is_none() => {
                return bad("`eps1` needs an `exact` solution".into());
            }
            Estimator::Eps2 => {
                if self.h.len() < 2 {
                    return bad("`eps2` needs at least two levels in `h`".into());
                }
                if self.p.fract() != 0.0 || self.p < 1.0 {
                    return bad(format!("`eps2` needs a natural exponent p so time grids nest, got {}", self.p));
                }
                for w in self.h.windows(2) {
                    if ((w[0] / w[1]) - 2.0).abs() > 1e-12 {
                        return bad(format!("`eps2` needs a halving chain, got {} then {}", w[0], w[1]));
                    }
                }
            }
            _ => {}
        }
        if matches!(self.initial, InitialSpec::Barenblatt) && self.exact.is_none() {
            return bad("Barenblatt initial datum needs the `exact` section".into());
        }
        let dim = self.dim()?;
        if let Some(ex) = &self.exact {
            if ex.dim != dim {
                return bad(format!("exact solution has dimension {}, domain has {dim}", ex.dim));
            }
        }
        if let InitialSpec::Gaussian { center, width, .. } = &self.initial {
            if center.len() != dim || !(*width > 0.0) {
                return bad("Gaussian initial datum needs a center of the domain's dimension and a positive width".into());
            }
        }
        Ok(())
    }

    pub fn exact_solution(&self) -> Result<Option<Barenblatt>, ConfigError> {
        self.exact
            .map(|p| Barenblatt::new(p).map_err(|e| ConfigError::Invalid(e.to_string())))
            .transpose()
    }

    pub fn initial_datum(&self) -> Result<InitialDatum, ConfigError> {
        Ok(match &self.initial {
            InitialSpec::Constant { value } => InitialDatum::Constant(*value),
            InitialSpec::Barenblatt => InitialDatum::Barenblatt(
                self.exact_solution()?.ok_or_else(|| ConfigError::Invalid("missing `exact`".into()))?,
            ),
            InitialSpec::Gaussian { base, amplitude, width, center } => {
                let (b, a, w, c) = (*base, *amplitude, *width, center.clone());
                InitialDatum::Custom(Arc::new(move |x: &[f64]| {
                    let r2: f64 = x.iter().zip(&c).map(|(u, v)| (u - v) * (u - v)).sum();
                    b + a * (-r2 / (2.0 * w * w)).exp()
                }))
            }
        })
    }
}

fn saturation_model(confinement: ConfinementSpec, kernel: KernelSpec, entropy: EntropySpec) -> ModelSpec {
    ModelSpec { mobility: MobilitySpec::Saturation { alpha: 1.0 }, entropy, confinement, kernel }
}

fn pme_model() -> ModelSpec {
    ModelSpec {
        mobility: MobilitySpec::Linear,
        entropy: EntropySpec::Power { exponent: 2.0 },
        confinement: ConfinementSpec::Zero,
        kernel: KernelSpec::Zero,
    }
}

fn gaussians(terms: &[(f64, f64)]) -> KernelSpec {
    KernelSpec::Gaussians { terms: terms.iter().map(|&(amplitude, width)| GaussianSpec { amplitude, width }).collect() }
}

fn base(name: &str, description: &str, domain: DomainSpec, model: ModelSpec, h: Vec<f64>, t: f64, initial: InitialSpec) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        description: description.into(),
        domain,
        model,
        h,
        p: 2.0,
        tau_coefficient: 1.0,
        final_time: t,
        options: SchemeOptions::default(),
        initial,
        exact: None,
        estimator: Estimator::None,
        stationary_tol: None,
        envelope: None,
        snapshot_every: None,
        max_retries: 2,
        track_lambda: true,
        output_dir: None,
        seed: 0,
    }
}

const PRESET_NAMES: [&str; 13] = [
    "steady-square",
    "steady-peanut",
    "energy-decay-1d",
    "energy-decay-2d",
    "aggregation-psd-o1",
    "aggregation-nsd-o2",
    "aggregation-indefinite-o3",
    "aggregation-equality",
    "barenblatt-1d",
    "barenblatt-2d",
    "saturation-convergence-1d",
    "envelope-bump",
    "envelope-counterexample",
];

pub fn preset_names() -> &'static [&'static str] {
    &PRESET_NAMES
}

/// Built-in experiment by name.
pub fn preset(name: &str) -> Option<ExperimentSpec> {
    let quadratic = ConfinementSpec::Quadratic { coefficient: 0.5 };
    let u2 = EntropySpec::Power { exponent: 2.0 };
    let attractive = gaussians(&[(-1.0, 1.0)]);
    let square = DomainSpec::Cube { a: -4.0, b: 4.0, dim: 2 };
    let line4 = DomainSpec::Interval { a: -4.0, b: 4.0 };
    let bump = |c: f64| InitialSpec::Gaussian { base: 0.3, amplitude: 0.4, width: 1.0, center: vec![c] };
    let spec = match name {
        "steady-square" | "steady-peanut" => {
            let (domain, label) = if name == "steady-square" { (square, "the square (-4,4)^2") } else { (DomainSpec::Peanut, "the peanut (x^2-3.9)^2+y^2<16") };
            let mut s = base(
                name,
                &format!("drift-diffusion with saturation m = rho(1-rho), U = rho^2, V = |x|^2/2 on {label}, rho0 = 0.6, run to stationarity"),
                domain,
                saturation_model(quadratic, KernelSpec::Zero, u2),
                vec![0.25],
                400.0,
                InitialSpec::Constant { value: 0.6 },
            );
            s.stationary_tol = Some(1e-6);
            s.track_lambda = false;
            s
        }
        "energy-decay-1d" | "energy-decay-2d" => {
            let (domain, h, init) = if name == "energy-decay-1d" {
                (line4, 0.1, bump(0.0))
            } else {
                (square, 0.25, InitialSpec::Gaussian { base: 0.3, amplitude: 0.4, width: 1.0, center: vec![0.0, 0.0] })
            };
            let mut s = base(
                name,
                "aggregation with saturation: U = rho^2, V = |x|^2/2, K = -4 exp(-|x-y|^2/2), midpoint O3",
                domain,
                saturation_model(quadratic, gaussians(&[(-4.0, 1.0)]), u2),
                vec![h],
                2.0,
                init,
            );
            s.track_lambda = false;
            s
        }
        "aggregation-psd-o1" => {
            let mut s = base(
                name,
                "repulsive positive semi-definite kernel K = exp(-|x-y|^2/2), implicit interaction (O1)",
                line4,
                saturation_model(quadratic, gaussians(&[(1.0, 1.0)]), u2),
                vec![0.1],
                1.0,
                bump(0.5),
            );
            s.options.midpoint = Midpoint::O1;
            s.track_lambda = false;
            s
        }
        "aggregation-nsd-o2" => {
            let mut s = base(
                name,
                "attractive negative semi-definite kernel K = -exp(-|x-y|^2/2), explicit interaction (O2)",
                line4,
                saturation_model(quadratic, attractive, u2),
                vec![0.1],
                1.0,
                bump(0.5),
            );
            s.options.midpoint = Midpoint::O2;
            s.track_lambda = false;
            s
        }
        "aggregation-indefinite-o3" => {
            let mut s = base(
                name,
                "indefinite kernel K = 0.8 exp(-|x-y|^2/8) - exp(-|x-y|^2/2), midpoint interaction (O3)",
                line4,
                saturation_model(quadratic, gaussians(&[(0.8, 2.0), (-1.0, 1.0)]), u2),
                vec![0.1],
                1.0,
                bump(0.5),
            );
            s.track_lambda = false;
            s
        }
        "aggregation-equality" => {
            let mut s = base(
                name,
                "pure aggregation U = 0, V = 0, K = -exp(-|x-y|^2/2), midpoint O3: dissipation equals the energy drop",
                line4,
                saturation_model(ConfinementSpec::Zero, attractive, EntropySpec::Zero),
                vec![0.1],
                1.0,
                bump(0.5),
            );
            s.track_lambda = false;
            s
        }
        "barenblatt-1d" => {
            let mut s = base(
                name,
                "porous-medium equation m = rho, U = rho^2 from the Barenblatt profile (M = 2, t0 = 1), error eps1",
                DomainSpec::Interval { a: -6.0, b: 6.0 },
                pme_model(),
                vec![0.4, 0.2, 0.1],
                0.64,
                InitialSpec::Barenblatt,
            );
            s.exact = Some(BarenblattParams { exponent: 2.0, mass: 2.0, t0: 1.0, dim: 1 });
            s.estimator = Estimator::Eps1;
            s
        }
        "barenblatt-2d" => {
            let mut s = base(
                name,
                "porous-medium equation in the plane from the Barenblatt profile (M = 2, t0 = 1), error eps1",
                DomainSpec::Cube { a: -6.0, b: 6.0, dim: 2 },
                pme_model(),
                vec![0.8, 0.4],
                1.28,
                InitialSpec::Barenblatt,
            );
            s.exact = Some(BarenblattParams { exponent: 2.0, mass: 2.0, t0: 1.0, dim: 2 });
            s.estimator = Estimator::Eps1;
            s
        }
        "saturation-convergence-1d" => {
            let mut s = base(
                name,
                "drift-diffusion with saturation m = rho(1-rho), U = rho^2, V = 2x^2 on (-2,2) from rho0 = 0.5; half-grid estimator eps2",
                DomainSpec::Interval { a: -2.0, b: 2.0 },
                saturation_model(ConfinementSpec::Quadratic { coefficient: 2.0 }, KernelSpec::Zero, u2),
                vec![0.2, 0.1, 0.05],
                1.0,
                InitialSpec::Constant { value: 0.5 },
            );
            s.estimator = Estimator::Eps2;
            s
        }
        "envelope-bump" => {
            let mut s = base(
                name,
                "Lipschitz saturation mobility with a W^{2,inf} bump confinement vanishing with its gradient on the boundary; extrema envelopes asserted",
                DomainSpec::Interval { a: -1.0, b: 1.0 },
                saturation_model(ConfinementSpec::Bump { amplitude: 0.5, radius: 1.0 }, KernelSpec::Zero, u2),
                vec![0.05],
                0.5,
                InitialSpec::Constant { value: 0.5 },
            );
            // ||V''||_inf = 8 a / R^2
            s.envelope = Some(EnvelopeSpec { lambda: 4.0, lipschitz: Some(1.0) });
            s
        }
        "envelope-counterexample" => base(
            name,
            "V(x) = x on (0,1): the confinement gradient does not vanish on the boundary, so no envelope is asserted",
            DomainSpec::Interval { a: 0.0, b: 1.0 },
            saturation_model(ConfinementSpec::Linear { coefficient: 1.0 }, KernelSpec::Zero, u2),
            vec![0.05],
            0.5,
            InitialSpec::Constant { value: 0.5 },
        ),
        _ => return None,
    };
    Some(spec)
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    // option blocks merge key by key, everything else is replaced
                    Some(slot) if k == "options" && slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Resolve a JSON config: an optional `preset` base overlaid by the remaining
/// keys. `max_iters` inside `options` is accepted for `newton_max_iters`.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let mut user: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let Some(obj) = user.as_object_mut() else {
        return Err(ConfigError::Schema { path: ".".into(), message: "config must be a JSON object".into() });
    };
    if let Some(Value::Object(opts)) = obj.get_mut("options") {
        if let Some(v) = opts.remove("max_iters") {
            opts.insert("newton_max_iters".into(), v);
        }
    }
    let mut resolved = match obj.remove("preset") {
        Some(Value::String(name)) => {
            let spec = preset(&name).ok_or(ConfigError::UnknownPreset(name))?;
            serde_json::to_value(spec).expect("presets serialize")
        }
        Some(other) => {
            return Err(ConfigError::Schema { path: "preset".into(), message: format!("expected a preset name, got {other}") })
        }
        None => Value::Object(Default::default()),
    };
    merge(&mut resolved, user);
    let spec: ExperimentSpec = serde_path_to_error::deserialize(resolved).map_err(|e| ConfigError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid_and_round_trips() {
        for name in preset_names() {
            let spec = preset(name).unwrap();
            spec.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            spec.model.build().unwrap();
            let json = serde_json::to_string(&spec).unwrap();
            let back = parse_config(&json).unwrap();
            assert_eq!(back, spec, "{name}");
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn overrides_apply_on_top_of_preset() {
        let spec = parse_config(r#"{"preset": "barenblatt-1d", "h": [0.4, 0.2], "options": {"max_iters": 7}}"#).unwrap();
        assert_eq!(spec.h, vec![0.4, 0.2]);
        assert_eq!(spec.options.newton_max_iters, 7);
        assert_eq!(spec.options.newton_tol, SchemeOptions::default().newton_tol);
        assert_eq!(spec.final_time, 0.64);
    }

    #[test]
    fn errors_carry_locations() {
        match parse_config("{\n  \"preset\": \"barenblatt-1d\",\n  \"h\": [0.4,, 0.2]\n}") {
            Err(ConfigError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_config(r#"{"preset": "barenblatt-1d", "bogus": 1}"#) {
            Err(ConfigError::Schema { message, .. }) => assert!(message.contains("bogus")),
            other => panic!("{other:?}"),
        }
        match parse_config(r#"{"preset": "barenblatt-1d", "options": {"midpoint": "O4"}}"#) {
            Err(ConfigError::Schema { path, .. }) => assert_eq!(path, "options.midpoint"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config(r#"{"preset": "nope"}"#), Err(ConfigError::UnknownPreset(_))));
    }

    #[test]
    fn half_grid_estimator_requirements() {
        let one_level = r#"{"preset": "saturation-convergence-1d", "h": [0.1]}"#;
        assert!(matches!(parse_config(one_level), Err(ConfigError::Invalid(_))));
        let fractional = r#"{"preset": "saturation-convergence-1d", "p": 1.5}"#;
        assert!(matches!(parse_config(fractional), Err(ConfigError::Invalid(_))));
        let not_halving = r#"{"preset": "saturation-convergence-1d", "h": [0.2, 0.15]}"#;
        assert!(matches!(parse_config(not_halving), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn standalone_config_without_preset() {
        let text = r#"{
            "name": "pme",
            "domain": {"name": "interval", "params": {"a": -2, "b": 2}},
            "model": {"mobility": {"kind": "linear"}, "entropy": {"kind": "power", "exponent": 2}},
            "h": [0.1], "T": 0.1,
            "initial": {"kind": "constant", "value": 0.6}
        }"#;
        let spec = parse_config(text).unwrap();
        assert_eq!(spec.model.kernel, KernelSpec::Zero);
        assert_eq!(spec.domain.build().unwrap().dim(), 1);
        let peanut = r#"{"preset": "steady-square", "domain": {"name": "peanut"}}"#;
        assert_eq!(parse_config(peanut).unwrap().domain, DomainSpec::Peanut);
    }
}
