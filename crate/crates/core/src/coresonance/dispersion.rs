//! Temperature-dependent refractive index, loaded from configuration.
//!
//! File schema (TOML, wavelengths in µm, temperatures in °C):
//!
//! ```toml
//! reference_temperature_c = 25.0
//! thermal_expansion_per_k = 6.7e-6          # crystal length and poling period
//! thermo_optic_per_k = [a0, a1, a2, a3]     # dn/dT = Σ aᵢ / λᵢ
//! wavelength_range_um = [0.7, 1.7]
//! temperature_range_c = [10.0, 100.0]
//!
//! [index]                                   # index law at the reference temperature
//! model = "sellmeier"                       # or "cauchy", "constant"
//! a = 4.59423
//! terms = [[0.06206, 0.04763], [110.80672, 86.12171]]
//! ```
//!
//! Index laws (all with λ in µm):
//!
//! - `constant`: `n`
//! - `cauchy`: `n = Σ cᵢ λ^(−2i)` from `coefficients = [c0, c1, …]`
//! - `sellmeier`: `n² = a + Σ b/(λ² − c)` from `a` and `terms = [[b, c], …]`
//!
//! Unknown keys anywhere in the file are rejected.

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::registry::Registry;

/// Refractive index at the reference temperature.
pub trait IndexLaw: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn index(&self, wavelength_um: f64) -> f64;
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constant {
    pub n: f64,
}

impl IndexLaw for Constant {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn index(&self, _wavelength_um: f64) -> f64 {
        self.n
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cauchy {
    pub coefficients: Vec<f64>,
}

impl IndexLaw for Cauchy {
    fn name(&self) -> &'static str {
        "cauchy"
    }

    fn index(&self, wavelength_um: f64) -> f64 {
        let inv2 = 1.0 / (wavelength_um * wavelength_um);
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * inv2 + c)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sellmeier {
    pub a: f64,
    #[serde(default)]
    pub terms: Vec<[f64; 2]>,
}

impl IndexLaw for Sellmeier {
    fn name(&self) -> &'static str {
        "sellmeier"
    }

    fn index(&self, wavelength_um: f64) -> f64 {
        let l2 = wavelength_um * wavelength_um;
        let n2 = self.a + self.terms.iter().map(|[b, c]| b / (l2 - c)).sum::<f64>();
        n2.sqrt()
    }
}

fn from_table<T: for<'de> Deserialize<'de>>(table: &toml::Table) -> Result<T> {
    table
        .clone()
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.message().to_owned()))
}

pub type IndexLawRegistry = Registry<dyn IndexLaw, toml::Table>;

/// `constant`, `cauchy` and `sellmeier`.
pub fn builtin_registry() -> IndexLawRegistry {
    let mut reg: IndexLawRegistry = Registry::new("index law");
    reg.register("constant", |t| Ok(Box::new(from_table::<Constant>(t)?)))
        .register("cauchy", |t| Ok(Box::new(from_table::<Cauchy>(t)?)))
        .register("sellmeier", |t| Ok(Box::new(from_table::<Sellmeier>(t)?)));
    reg
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DispersionFile {
    reference_temperature_c: f64,
    #[serde(default)]
    thermal_expansion_per_k: f64,
    #[serde(default)]
    thermo_optic_per_k: Vec<f64>,
    wavelength_range_um: [f64; 2],
    temperature_range_c: [f64; 2],
    index: toml::Table,
}

/// `n(λ, T) = n₀(λ) + (T − T₀)·Σ aᵢ/λⁱ` plus linear thermal expansion.
#[derive(Debug)]
pub struct DispersionModel {
    law: Box<dyn IndexLaw>,
    pub thermo_optic_per_k: Vec<f64>,
    pub reference_temperature_c: f64,
    pub thermal_expansion_per_k: f64,
    pub wavelength_range_um: (f64, f64),
    pub temperature_range_c: (f64, f64),
}

impl DispersionModel {
    pub fn new(law: Box<dyn IndexLaw>, reference_temperature_c: f64) -> Self {
        Self {
            law,
            thermo_optic_per_k: Vec::new(),
            reference_temperature_c,
            thermal_expansion_per_k: 0.0,
            wavelength_range_um: (0.0, f64::INFINITY),
            temperature_range_c: (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Same index at every wavelength and temperature; useful as an
    /// analytically tractable test medium.
    pub fn constant(n: f64) -> Self {
        Self::new(Box::new(Constant { n }), 20.0)
    }

    pub fn with_thermo_optic(mut self, coefficients: Vec<f64>) -> Self {
        self.thermo_optic_per_k = coefficients;
        self
    }

    pub fn with_expansion(mut self, per_k: f64) -> Self {
        self.thermal_expansion_per_k = per_k;
        self
    }

    pub fn with_ranges(mut self, wavelength_um: (f64, f64), temperature_c: (f64, f64)) -> Self {
        self.wavelength_range_um = wavelength_um;
        self.temperature_range_c = temperature_c;
        self
    }

    pub fn law_name(&self) -> &'static str {
        self.law.name()
    }

    pub fn from_toml_str(text: &str, registry: &IndexLawRegistry) -> Result<Self> {
        let file: DispersionFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("dispersion file: {}", e.message())))?;
        let mut index = file.index;
        let model = match index.remove("model") {
            Some(toml::Value::String(s)) => s,
            _ => return Err(Error::Config("[index] needs a string `model` key".into())),
        };
        let law = registry.create(&model, &index)?;
        let [wl_lo, wl_hi] = file.wavelength_range_um;
        let [t_lo, t_hi] = file.temperature_range_c;
        if !(wl_lo > 0.0 && wl_hi > wl_lo && t_hi > t_lo) {
            return Err(Error::Config("validity ranges must be non-empty".into()));
        }
        Ok(Self {
            law,
            thermo_optic_per_k: file.thermo_optic_per_k,
            reference_temperature_c: file.reference_temperature_c,
            thermal_expansion_per_k: file.thermal_expansion_per_k,
            wavelength_range_um: (wl_lo, wl_hi),
            temperature_range_c: (t_lo, t_hi),
        })
    }

    pub fn from_file(path: impl AsRef<Path>, registry: &IndexLawRegistry) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, registry)
    }

    fn check_range(&self, wavelength_um: f64, temperature_c: f64) -> Result<()> {
        let (a, b) = self.wavelength_range_um;
        if !(wavelength_um >= a && wavelength_um <= b) {
            return Err(Error::domain(format!(
                "wavelength {wavelength_um} µm outside dispersion validity [{a}, {b}] µm"
            )));
        }
        let (a, b) = self.temperature_range_c;
        if !(temperature_c >= a && temperature_c <= b) {
            return Err(Error::domain(format!(
                "temperature {temperature_c} °C outside dispersion validity [{a}, {b}] °C"
            )));
        }
        Ok(())
    }

    /// dn/dT at `wavelength_um`, per kelvin.
    pub fn thermo_optic(&self, wavelength_um: f64) -> f64 {
        let inv = 1.0 / wavelength_um;
        self.thermo_optic_per_k.iter().rev().fold(0.0, |acc, a| acc * inv + a)
    }

    /// Refractive index at vacuum wavelength `wavelength_m` and temperature.
    pub fn index(&self, wavelength_m: f64, temperature_c: f64) -> Result<f64> {
        let um = wavelength_m * 1e6;
        self.check_range(um, temperature_c)?;
        let n = self.law.index(um) + (temperature_c - self.reference_temperature_c) * self.thermo_optic(um);
        if !(n > 1.0 && n.is_finite()) {
            return Err(Error::domain(format!("index {n} at {um} µm is not above 1")));
        }
        Ok(n)
    }

    /// Relative length `L(T)/L(T₀)` from linear expansion.
    pub fn length_factor(&self, temperature_c: f64) -> f64 {
        1.0 + self.thermal_expansion_per_k * (temperature_c - self.reference_temperature_c)
    }
}
