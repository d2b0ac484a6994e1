use serde::{Deserialize, Serialize};

use crate::error::{NemoError, Result};

/// Static parameters of one brain area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaParams {
    pub name: String,
    /// Neuron count.
    pub n: u32,
    /// Cap size: how many neurons fire per step.
    pub k: u32,
    /// Plasticity rate applied to synapses *into* this area.
    pub beta: f64,
    /// Connection probability of synapses *into* this area.
    pub p: f64,
}

impl AreaParams {
    pub fn new(name: impl Into<String>, n: u32, k: u32, beta: f64, p: f64) -> Self {
        Self {
            name: name.into(),
            n,
            k,
            beta,
            p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let key = |field: &str| format!("areas.{}.{}", self.name, field);
        if self.n == 0 {
            return Err(NemoError::param(
                key("n"),
                "area must have at least one neuron",
            ));
        }
        if self.k == 0 || self.k > self.n {
            return Err(NemoError::param(
                key("k"),
                format!("cap size {} must lie in [1, n={}]", self.k, self.n),
            ));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(NemoError::param(
                key("p"),
                format!("{} is outside [0, 1]", self.p),
            ));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(NemoError::param(
                key("beta"),
                format!("{} must be finite and >= 0", self.beta),
            ));
        }
        Ok(())
    }
}

/// How a connectome's synapses are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Every synapse sampled up front.
    Explicit,
    /// Incoming synapses of a neuron are sampled the first time it fires.
    Lazy,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Explicit => "explicit",
            Backend::Lazy => "lazy",
        })
    }
}

impl std::str::FromStr for Backend {
    type Err = NemoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(Backend::Explicit),
            "lazy" => Ok(Backend::Lazy),
            other => Err(NemoError::param(
                "backend",
                format!("expected explicit|lazy, got `{other}`"),
            )),
        }
    }
}
