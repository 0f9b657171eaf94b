//! Serializable fit report, the JSON surface of this module.

use serde::{Deserialize, Serialize};

use super::{AdditiveMixtureFit, BrokenZipfFit, ZipfFit};

/// One fitted power-law component as reported to files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingleFitReport {
    pub model: String,
    pub method: String,
    pub exponent: f64,
    pub amplitude_log10: f64,
    pub fit_range: [u64; 2],
    pub rss: f64,
    pub r_squared: f64,
}

impl SingleFitReport {
    pub fn from_fit(fit: &ZipfFit) -> SingleFitReport {
        SingleFitReport {
            model: "single-zipf".into(),
            method: fit.method.as_str().into(),
            exponent: fit.exponent,
            amplitude_log10: fit.log_amplitude / std::f64::consts::LN_10,
            fit_range: [fit.fit_range.0, fit.fit_range.1],
            rss: fit.rss,
            r_squared: fit.r_squared,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BrokenFitReport {
    pub model: String,
    pub breakpoint_rank: u64,
    pub head: SingleFitReport,
    pub tail: SingleFitReport,
    pub total_rss: f64,
    pub delta_bic: f64,
}

impl BrokenFitReport {
    pub fn from_fit(fit: &BrokenZipfFit) -> BrokenFitReport {
        BrokenFitReport {
            model: "broken-zipf".into(),
            breakpoint_rank: fit.breakpoint_rank,
            head: SingleFitReport::from_fit(&fit.head),
            tail: SingleFitReport::from_fit(&fit.tail),
            total_rss: fit.total_rss,
            delta_bic: fit.delta_bic,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdditiveFitReport {
    pub model: String,
    pub amplitude1_log10: f64,
    pub exponent1: f64,
    pub amplitude2_log10: f64,
    pub exponent2: f64,
    pub rss: f64,
}

impl AdditiveFitReport {
    pub fn from_fit(fit: &AdditiveMixtureFit) -> AdditiveFitReport {
        AdditiveFitReport {
            model: "additive-mixture".into(),
            amplitude1_log10: fit.amplitude1.log10(),
            exponent1: fit.exponent1,
            amplitude2_log10: fit.amplitude2.log10(),
            exponent2: fit.exponent2,
            rss: fit.rss,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseTransitionReport {
    pub detected: bool,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakpoint_rank: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_bic: Option<f64>,
}

/// Full report written by the `fit` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    /// `"single"` or `"broken"`, whichever BIC prefers.
    pub model_preferred: String,
    pub single: SingleFitReport,
    pub broken: BrokenFitReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub single_mle: Option<SingleFitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub additive: Option<AdditiveFitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_transition: Option<PhaseTransitionReport>,
}
