//! Machine-readable run reports. Field order is fixed by the struct
//! definitions and every float is written with 17 significant digits, so a
//! report re-parses to an identical value.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

pub const VERSION: &str = concat!("ri ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub settings: Settings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceEcho>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entrant: Option<InstanceEcho>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entrant_solution: Option<SolutionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge: Option<BridgeReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<EntrySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub outer_tol: f64,
    pub inner_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEcho {
    /// SHA-256 of the instance file bytes.
    pub sha256: String,
    pub characteristics: Vec<String>,
    pub states: Vec<String>,
    pub alpha: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub total: f64,
    /// `αλ D_KL(ν‖φ)`
    pub vertical: f64,
    /// `λ I_P`
    pub mutual_information: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub nu_star: Vec<f64>,
    pub ccp: Vec<Vec<f64>>,
    pub coupling: Vec<Vec<f64>>,
    pub u_star: f64,
    pub f_star: f64,
    pub expected_utility: f64,
    pub kappa: Kappa,
    pub foc_residual: f64,
    pub consistency_residual: f64,
    pub outer_iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    pub nu: Vec<f64>,
    /// Characteristic potential, gauge `Σ ν a = 0`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub value_v: f64,
    pub marginal_residual: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub gibbs: f64,
    pub fso_decay: f64,
    pub fso_floor: f64,
    pub directional: f64,
    pub jensen: f64,
    pub mnl: f64,
    pub density_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Passes {
    pub gibbs: bool,
    pub fso: bool,
    pub directional: bool,
    pub jensen: bool,
    pub mnl: bool,
    pub density: bool,
    pub all: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSection {
    pub gibbs_deviation: f64,
    /// `[ε, |Δ|/ε]` pairs.
    pub fso_slopes: Vec<[f64; 2]>,
    pub directional_eps: f64,
    pub directional_derivative_error: f64,
    pub jensen_gap: f64,
    pub density_min: f64,
    pub density_max: f64,
    pub mnl_residual: f64,
    pub thresholds: Thresholds,
    pub passes: Passes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryPairRow {
    pub first: String,
    pub second: String,
    pub ratios: Vec<f64>,
    pub deviation: f64,
    pub constant: bool,
    /// Absent when the pair is uninformative or the ratio was not constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntrySection {
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_hat: Option<f64>,
    pub alpha_spread: f64,
    pub passed: bool,
    pub pairs: Vec<EntryPairRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSection {
    pub u_oracle: f64,
    pub u_solver: f64,
    /// `u_solver - u_oracle`
    pub difference: f64,
    pub oracle_marginal: Vec<f64>,
    pub marginal_gap: f64,
    pub start_values: Vec<f64>,
    pub gradient_check_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Status {
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks_passed: Option<bool>,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// Pretty JSON with floats in `{:.16e}` form.
struct ExactFloats(PrettyFormatter<'static>);

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(writer $(, $arg)*)
        })*
    };
}

impl Formatter for ExactFloats {
    forward! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }

    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, ExactFloats(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report types always serialize");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

pub fn from_json(text: &str) -> serde_json::Result<RunReport> {
    serde_json::from_str(text)
}
