use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "OS-eff")]
    OsEff,
    #[serde(rename = "OS-IPW")]
    OsIpw,
    #[serde(rename = "OS-RA")]
    OsRa,
    #[serde(rename = "TS-eff")]
    TsEff,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::OsEff => "OS-eff",
            Method::OsIpw => "OS-IPW",
            Method::OsRa => "OS-RA",
            Method::TsEff => "TS-eff",
        }
    }

    pub fn is_one_sample(self) -> bool {
        self != Method::TsEff
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "os-eff" => Ok(Method::OsEff),
            "os-ipw" => Ok(Method::OsIpw),
            "os-ra" => Ok(Method::OsRa),
            "ts-eff" => Ok(Method::TsEff),
            _ => Err(format!(
                "unknown method {s:?} (expected OS-eff, OS-IPW, OS-RA or TS-eff)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sizes {
    OneSample {
        n: usize,
        n_labeled: usize,
        n_unlabeled: usize,
    },
    TwoSample {
        m: usize,
        l: usize,
    },
}

/// Per-fold nuisance fitting status.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldDiagnostics {
    pub fold: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: Method,
    pub tau_hat: f64,
    pub se: f64,
    pub ci: (f64, f64),
    pub level: f64,
    pub sizes: Sizes,
    pub folds: usize,
    pub diagnostics: Vec<FoldDiagnostics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EstimateReport {
    pub fn covers(&self, value: f64) -> bool {
        self.ci.0 <= value && value <= self.ci.1
    }

    pub fn all_converged(&self) -> bool {
        self.diagnostics.iter().all(|d| d.converged)
    }
}
