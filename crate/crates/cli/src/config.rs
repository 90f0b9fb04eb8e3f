//! Scenario files: JSON documents describing one run or a family of runs.
//!
//! A document is first checked field by field, then resolved against the
//! chosen model into a [`Scenario`]. Every error names the offending field as a
//! dotted path.

use std::f64::consts::PI;
use std::fmt;

use phonon_bjj::analysis::{GridSpec, Window};
use phonon_bjj::{
    BjjParams, BjjState, Complex64, FullSystemParams, IntegratorOptions, ReducedMode,
};
use serde::de::{self, DeserializeOwned, Deserializer};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Full,
    Reduced,
    Bjj,
    BjjDamped,
    BjjRescaled,
}

impl ModelKind {
    pub fn is_junction(self) -> bool {
        matches!(
            self,
            ModelKind::Bjj | ModelKind::BjjDamped | ModelKind::BjjRescaled
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Regime,
    Frequency,
    Potential,
    Contours,
    CriticalValues,
    LinearFrequencies,
    StationaryPoints,
    CriticalDelta,
    DampingTransition,
    Conservation,
    ReductionError,
    Validity,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::Regime => "regime",
            Analysis::Frequency => "frequency",
            Analysis::Potential => "potential",
            Analysis::Contours => "contours",
            Analysis::CriticalValues => "critical-values",
            Analysis::LinearFrequencies => "linear-frequencies",
            Analysis::StationaryPoints => "stationary-points",
            Analysis::CriticalDelta => "critical-delta",
            Analysis::DampingTransition => "damping-transition",
            Analysis::Conservation => "conservation",
            Analysis::ReductionError => "reduction-error",
            Analysis::Validity => "validity",
        }
    }

    fn needs_trajectory(self) -> bool {
        matches!(
            self,
            Analysis::Regime
                | Analysis::Frequency
                | Analysis::Conservation
                | Analysis::ReductionError
        )
    }

    fn allowed_for(self, model: ModelKind) -> bool {
        match self {
            Analysis::ReductionError | Analysis::Validity => !model.is_junction(),
            Analysis::Conservation => {
                !matches!(model, ModelKind::BjjDamped | ModelKind::BjjRescaled)
            }
            Analysis::DampingTransition => {
                matches!(model, ModelKind::BjjDamped | ModelKind::BjjRescaled)
            }
            _ => model.is_junction(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// An angle given as a number or as an expression such as `"pi/2"` or `"-3pi/4"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Angle(pub f64);

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = Angle;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or an expression like \"pi/2\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Angle, E> {
                Ok(Angle(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Angle, E> {
                Ok(Angle(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Angle, E> {
                Ok(Angle(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Angle, E> {
                parse_angle(v)
                    .map(Angle)
                    .ok_or_else(|| E::custom(format!("cannot read angle {v:?}")))
            }
        }
        d.deserialize_any(V)
    }
}

/// Reads `[sign][coef][*]pi[/den]` or a plain number.
pub fn parse_angle(s: &str) -> Option<f64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(at) = s.find("pi") else {
        return s.parse().ok().filter(|v: &f64| v.is_finite());
    };
    let (head, tail) = (&s[..at], &s[at + 2..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let coef = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().ok()?,
    };
    let den = match tail {
        "" => 1.0,
        t => t
            .strip_prefix('/')?
            .parse::<f64>()
            .ok()
            .filter(|d| *d != 0.0)?,
    };
    let v = coef * PI / den;
    v.is_finite().then_some(v)
}

/// Time span: an explicit interval, or a number of Josephson periods for the
/// phonon models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpanSpec {
    Interval(f64, f64),
    Periods(f64),
}

impl<'de> Deserialize<'de> for SpanSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Periods {
            periods: f64,
        }
        match Value::deserialize(d)? {
            Value::Array(a) => {
                let [a, b]: [f64; 2] = serde_json::from_value(Value::Array(a))
                    .map_err(|_| de::Error::custom("expected [start, end]"))?;
                Ok(SpanSpec::Interval(a, b))
            }
            v @ Value::Object(_) => serde_json::from_value::<Periods>(v)
                .map(|p| SpanSpec::Periods(p.periods))
                .map_err(de::Error::custom),
            _ => Err(de::Error::custom(
                "expected [start, end] or {\"periods\": k}",
            )),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_step: Option<f64>,
    pub max_steps: Option<usize>,
}

impl IntegratorConfig {
    fn apply(&self, mut base: IntegratorOptions) -> IntegratorOptions {
        if let Some(v) = self.rel_tol {
            base.rel_tol = v;
        }
        if let Some(v) = self.abs_tol {
            base.abs_tol = v;
        }
        if let Some(v) = self.max_step {
            base.max_step = v;
        }
        if let Some(v) = self.max_steps {
            base.max_steps = v;
        }
        base
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "minus_one")]
    pub z_min: f64,
    #[serde(default = "one")]
    pub z_max: f64,
    #[serde(default = "grid_points")]
    pub z_points: usize,
    #[serde(default = "minus_pi")]
    pub phi_min: Angle,
    #[serde(default = "plus_pi")]
    pub phi_max: Angle,
    #[serde(default = "grid_points")]
    pub phi_points: usize,
}

fn minus_one() -> f64 {
    -1.0
}
fn one() -> f64 {
    1.0
}
fn grid_points() -> usize {
    GridSpec::default().z_points
}
fn minus_pi() -> Angle {
    Angle(-PI)
}
fn plus_pi() -> Angle {
    Angle(PI)
}

impl From<&GridConfig> for GridSpec {
    fn from(g: &GridConfig) -> Self {
        GridSpec {
            z_min: g.z_min,
            z_max: g.z_max,
            z_points: g.z_points,
            phi_min: g.phi_min.0,
            phi_max: g.phi_max.0,
            phi_points: g.phi_points,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    /// Dotted path of the varied scalar, e.g. `initial.z`.
    pub axis: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    #[serde(default)]
    pub format: Format,
    pub stem: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub delta_hi: Option<f64>,
    pub tolerance: Option<f64>,
}

/// The document as written, with model-specific blocks kept as raw JSON.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    /// Free text, e.g. the figure a preset reproduces.
    pub description: Option<String>,
    pub model: ModelKind,
    pub params: Value,
    pub initial: Option<Value>,
    pub span: Option<SpanSpec>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    pub reduced_mode: Option<ReducedMode>,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub windows: Vec<[f64; 2]>,
    pub grid: Option<GridConfig>,
    /// Critical asymmetry used by the damping transition estimate.
    pub delta_crit: Option<f64>,
    #[serde(default)]
    pub search: SearchConfig,
    pub family: Option<FamilyConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct JunctionInit {
    z: f64,
    #[serde(default = "zero_angle")]
    phi: Angle,
}

fn zero_angle() -> Angle {
    Angle(0.0)
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhononInitConfig {
    n: [f64; 2],
    #[serde(default = "zero_angles")]
    theta: [Angle; 2],
    /// `[re, im]`; the steady state when absent.
    cavity: Option<[f64; 2]>,
}

fn zero_angles() -> [Angle; 2] {
    [Angle(0.0); 2]
}

/// Initial mechanical amplitudes `sqrt(n_i) exp(i theta_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhononInit {
    pub n: [f64; 2],
    pub theta: [f64; 2],
    pub cavity: Option<Complex64>,
}

impl PhononInit {
    pub fn amplitudes(&self) -> [Complex64; 2] {
        [0, 1].map(|k| Complex64::from_polar(self.n[k].sqrt(), self.theta[k]))
    }

    pub fn total(&self) -> f64 {
        self.n[0] + self.n[1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Setup {
    Junction {
        params: BjjParams,
        initial: Option<BjjState>,
    },
    Phonon {
        params: FullSystemParams,
        initial: PhononInit,
        reduced_mode: ReducedMode,
    },
}

/// A checked, single-member scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub model: ModelKind,
    pub setup: Setup,
    pub span: Option<SpanSpec>,
    pub integrator: IntegratorOptions,
    pub analyses: Vec<Analysis>,
    pub windows: Vec<Window>,
    pub grid: GridSpec,
    pub delta_crit: Option<f64>,
    pub delta_hi: f64,
    pub search_tolerance: f64,
    pub format: Format,
    pub out_dir: Option<String>,
    /// The member document, minus output placement, as echoed in provenance.
    pub echo: Value,
}

/// Deserializes `value`, reporting failures with the dotted path below `prefix`.
pub fn from_value_at<T: DeserializeOwned>(value: &Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix, inner.as_str()) {
            ("", p) => p.to_string(),
            (p, ".") => p.to_string(),
            (p, i) => format!("{p}.{i}"),
        };
        CliError::config(path, e.inner().to_string())
    })
}

/// Parses JSON text; a provenance file is accepted and its config echo used.
pub fn parse_document(text: &str) -> Result<Value> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| CliError::config(".", e.to_string()))?;
    Ok(match value {
        Value::Object(mut map) if map.contains_key("provenance") => {
            let mut prov = map.remove("provenance").unwrap_or_default();
            prov.get_mut("config").map(Value::take).ok_or_else(|| {
                CliError::config(
                    "provenance.config",
                    "provenance file carries no config echo",
                )
            })?
        }
        v => v,
    })
}

/// Sets the scalar at the dotted `axis` path to `value`.
pub fn set_axis(doc: &mut Value, axis: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = axis.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(axis, "empty path segment"));
    }
    let (leaf, parents) = parts.split_last().expect("split yields at least one part");
    let mut node = doc;
    for p in parents {
        node = step(node, p).ok_or_else(|| CliError::config(axis, format!("no field `{p}`")))?;
    }
    let slot = match node {
        Value::Object(map) => map.entry(leaf.to_string()).or_insert(Value::Null),
        Value::Array(items) => leaf
            .parse::<usize>()
            .ok()
            .and_then(|i| items.get_mut(i))
            .ok_or_else(|| CliError::config(axis, "index out of range"))?,
        _ => return Err(CliError::config(axis, "parent is not an object or array")),
    };
    match slot {
        Value::Null | Value::Number(_) | Value::String(_) => {
            *slot = value;
            Ok(())
        }
        _ => Err(CliError::config(axis, "axis does not address a scalar")),
    }
}

fn step<'a>(node: &'a mut Value, key: &str) -> Option<&'a mut Value> {
    match node {
        Value::Object(map) => map.get_mut(key),
        Value::Array(items) => key.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
        _ => None,
    }
}

/// A sweep value: a number when it parses as one, otherwise kept as text so
/// angle expressions reach the angle reader.
pub fn axis_value(text: &str) -> Value {
    let t = text.trim();
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => {
            serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
        }
        _ => Value::String(t.to_string()),
    }
}

/// Label used in member file names for an axis value.
pub fn value_label(v: &Value) -> String {
    let raw = match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    raw.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

impl ScenarioConfig {
    pub fn parse(doc: &Value) -> Result<Self> {
        from_value_at(doc, "")
    }

    /// Expands a family into member documents, or returns the document itself.
    pub fn members(doc: &Value) -> Result<Vec<(Option<Value>, Value)>> {
        let cfg = Self::parse(doc)?;
        let Some(family) = cfg.family else {
            return Ok(vec![(None, doc.clone())]);
        };
        if family.values.is_empty() {
            return Err(CliError::config("family.values", "must not be empty"));
        }
        expand(doc, &family.axis, &family.values)
    }

    /// Checks the document against its model and fills in defaults.
    pub fn resolve(&self, doc: &Value) -> Result<Scenario> {
        let name = self
            .output
            .stem
            .clone()
            .or_else(|| self.name.clone())
            .unwrap_or_else(|| "scenario".into());
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err(CliError::config("output.stem", "must be a plain file name"));
        }
        let setup = if self.model.is_junction() {
            let params: BjjParams = from_value_at(&self.params, "params")?;
            params
                .validate()
                .map_err(|e| CliError::config("params", e.to_string()))?;
            let initial = match &self.initial {
                None => None,
                Some(v) => {
                    let i: JunctionInit = from_value_at(v, "initial")?;
                    if !(i.z.abs() <= 1.0) {
                        return Err(CliError::config("initial.z", "must lie in [-1, 1]"));
                    }
                    Some(BjjState::new(i.z, i.phi.0))
                }
            };
            if matches!(self.model, ModelKind::BjjDamped | ModelKind::BjjRescaled)
                && !(params.gamma > 0.0)
            {
                return Err(CliError::config(
                    "params.gamma",
                    "damped models need gamma > 0",
                ));
            }
            if self.reduced_mode.is_some() {
                return Err(CliError::config(
                    "reduced_mode",
                    "only used by the phonon models",
                ));
            }
            Setup::Junction { params, initial }
        } else {
            let params: FullSystemParams = from_value_at(&self.params, "params")?;
            params
                .validate()
                .map_err(|e| CliError::config("params", e.to_string()))?;
            let v = self
                .initial
                .as_ref()
                .ok_or_else(|| CliError::config("initial", "required for the phonon models"))?;
            let i: PhononInitConfig = from_value_at(v, "initial")?;
            if !i.n.iter().all(|n| *n >= 0.0 && n.is_finite()) || !(i.n[0] + i.n[1] >= 1.0) {
                return Err(CliError::config(
                    "initial.n",
                    "populations must be non-negative with a total of at least 1",
                ));
            }
            Setup::Phonon {
                params,
                initial: PhononInit {
                    n: i.n,
                    theta: i.theta.map(|a| a.0),
                    cavity: i.cavity.map(|[re, im]| Complex64::new(re, im)),
                },
                reduced_mode: self
                    .reduced_mode
                    .unwrap_or(ReducedMode::ComplexCoefficients),
            }
        };

        let base = if self.model.is_junction() {
            IntegratorOptions::dimensionless()
        } else {
            IntegratorOptions::physical()
        };
        let integrator = self.integrator.apply(base);
        integrator
            .validate()
            .map_err(|e| CliError::config("integrator", e.to_string()))?;

        match self.span {
            Some(SpanSpec::Interval(a, b)) if !(a.is_finite() && b.is_finite() && a < b) => {
                return Err(CliError::config("span", "need start < end"));
            }
            Some(SpanSpec::Interval(a, _)) if a != 0.0 && !self.model.is_junction() => {
                return Err(CliError::config("span", "phonon runs start at t = 0"));
            }
            Some(SpanSpec::Periods(k))
                if self.model.is_junction() || !(k > 0.0 && k.is_finite()) =>
            {
                return Err(CliError::config(
                    "span.periods",
                    "only for the phonon models, and must be positive",
                ));
            }
            Some(SpanSpec::Interval(a, _)) if self.model == ModelKind::BjjRescaled && a != 0.0 => {
                return Err(CliError::config("span", "rescaled runs start at tau = 0"));
            }
            _ => {}
        }
        if self.span.is_none() && !self.model.is_junction() {
            return Err(CliError::config("span", "required for the phonon models"));
        }

        let mut analyses = self.analyses.clone();
        analyses.sort();
        analyses.dedup();
        for (i, a) in analyses.iter().enumerate() {
            if !a.allowed_for(self.model) {
                return Err(CliError::config(
                    format!("analyses[{i}]"),
                    format!("`{}` is not available for this model", a.name()),
                ));
            }
            if a.needs_trajectory() && self.span.is_none() {
                return Err(CliError::config(
                    format!("analyses[{i}]"),
                    format!("`{}` needs a span", a.name()),
                ));
            }
        }
        let needs_initial = analyses.iter().any(|a| {
            matches!(
                a,
                Analysis::Potential | Analysis::CriticalValues | Analysis::CriticalDelta
            )
        }) || self.span.is_some();
        if let Setup::Junction { initial: None, .. } = setup {
            if needs_initial {
                return Err(CliError::config(
                    "initial",
                    "required for trajectories and this analysis",
                ));
            }
        }
        if analyses.contains(&Analysis::DampingTransition) && self.delta_crit.is_none() {
            return Err(CliError::config(
                "delta_crit",
                "required by `damping-transition`",
            ));
        }

        let mut windows = Vec::with_capacity(self.windows.len());
        for (i, [a, b]) in self.windows.iter().copied().enumerate() {
            if !(a < b) {
                return Err(CliError::config(
                    format!("windows[{i}]"),
                    "need start < end",
                ));
            }
            windows.push(Window::new(a, b));
        }
        if windows.is_empty() {
            windows.push(default_window(self.span));
        }
        let grid = self.grid.as_ref().map(GridSpec::from).unwrap_or_default();

        Ok(Scenario {
            name,
            model: self.model,
            setup,
            span: self.span,
            integrator,
            analyses,
            windows,
            grid,
            delta_crit: self.delta_crit,
            delta_hi: self.search.delta_hi.unwrap_or(5.0),
            search_tolerance: self.search.tolerance.unwrap_or(1e-3),
            format: self.output.format,
            out_dir: self.output.dir.clone(),
            echo: echo_of(doc),
        })
    }
}

/// The document as echoed in provenance: output placement is dropped so a
/// re-run elsewhere reproduces the same bytes.
pub fn echo_of(doc: &Value) -> Value {
    let mut echo = doc.clone();
    if let Some(Value::Object(out)) = echo.get_mut("output") {
        out.remove("dir");
    }
    echo
}

/// `[20, 200]` when the span covers it, else the whole span.
fn default_window(span: Option<SpanSpec>) -> Window {
    let w = Window::default();
    match span {
        Some(SpanSpec::Interval(a, b)) if a <= w.start && b >= w.end => w,
        Some(SpanSpec::Interval(a, b)) => Window::new(a, b),
        _ => w,
    }
}

/// Member documents with the axis set to each value; `family` is removed and
/// the stem gets the axis value appended.
pub fn expand(doc: &Value, axis: &str, values: &[Value]) -> Result<Vec<(Option<Value>, Value)>> {
    let base = ScenarioConfig::parse(doc)?;
    let stem = base
        .output
        .stem
        .clone()
        .or(base.name.clone())
        .unwrap_or_else(|| "scenario".into());
    let axis_label = axis.replace('.', "-");
    let mut out = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        if !(v.is_number() || v.is_string()) {
            return Err(CliError::config(
                format!("family.values[{i}]"),
                "must be a scalar",
            ));
        }
        let mut member = doc.clone();
        let map = member
            .as_object_mut()
            .expect("scenario documents are objects");
        map.remove("family");
        // Family summaries report the regime of every junction member.
        if base.model.is_junction()
            && base.span.is_some()
            && !base.analyses.contains(&Analysis::Regime)
        {
            let list = map
                .entry("analyses")
                .or_insert_with(|| Value::Array(Vec::new()));
            if let Value::Array(items) = list {
                items.push(Value::String(Analysis::Regime.name().into()));
            }
        }
        set_axis(&mut member, axis, v.clone())?;
        let output = member
            .as_object_mut()
            .expect("scenario documents are objects")
            .entry("output")
            .or_insert_with(|| Value::Object(Default::default()));
        if let Value::Object(o) = output {
            o.insert(
                "stem".into(),
                Value::String(format!("{stem}.{axis_label}-{}", value_label(v))),
            );
        }
        out.push((Some(v.clone()), member));
    }
    Ok(out)
}
