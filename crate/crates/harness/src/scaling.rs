//! Reconnection-time scaling fits `t*(η) ≈ c₂ g(η)` for the candidate
//! regressors `g`.

use serde::{Deserialize, Serialize};

use reconlab_core::fit::fixed_slope_fit;
use reconlab_core::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingModel {
    /// `|ln η| / η^{1/2}`
    Accelerated,
    /// `|ln η|`
    Fast,
    /// `1 / η`
    Diffusive,
}

impl ScalingModel {
    pub const ALL: [ScalingModel; 3] = [
        ScalingModel::Accelerated,
        ScalingModel::Fast,
        ScalingModel::Diffusive,
    ];

    pub fn regressor(&self, eta: f64) -> f64 {
        match self {
            ScalingModel::Accelerated => eta.ln().abs() / eta.sqrt(),
            ScalingModel::Fast => eta.ln().abs(),
            ScalingModel::Diffusive => 1.0 / eta,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ScalingModel::Accelerated => "accelerated",
            ScalingModel::Fast => "fast",
            ScalingModel::Diffusive => "diffusive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub model: ScalingModel,
    pub c2: f64,
    /// Coefficient of determination of `ln t*` in log space.
    pub r2: f64,
}

/// Whether `t*(η)·η^a` decreases monotonically as `η` decreases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VanishingCheck {
    pub a: f64,
    pub decreasing: bool,
    /// Value at the smallest `η` over the value at the largest.
    pub end_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub fits: Vec<ModelFit>,
    pub best: ScalingModel,
    /// `a = 1` is the general reconnection-rate condition; `a = 1/2` and
    /// `a = 1/4` probe the fast condition.
    pub vanishing: Vec<VanishingCheck>,
    pub etas: Vec<f64>,
    pub t_star: Vec<f64>,
}

impl ScalingFit {
    pub fn model(&self, m: ScalingModel) -> &ModelFit {
        self.fits.iter().find(|f| f.model == m).expect("every model is fitted")
    }

    pub fn vanishing(&self, a: f64) -> Option<&VanishingCheck> {
        self.vanishing.iter().find(|v| v.a == a)
    }
}

/// Unweighted least squares of `ln t* = ln g(η) + ln c₂` for every model.
/// Needs at least four distinct positive `η`.
pub fn fit_reconnection_scaling(etas: &[f64], t_star: &[f64]) -> Result<ScalingFit, Error> {
    if etas.len() != t_star.len() {
        return Err(Error::Parameter("eta and t* lists differ in length".into()));
    }
    if etas.iter().chain(t_star).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Parameter("eta and t* must be positive".into()));
    }
    let mut pairs: Vec<(f64, f64)> = etas.iter().cloned().zip(t_star.iter().cloned()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Parameter("eta values must be distinct".into()));
    }
    if pairs.len() < 4 {
        return Err(Error::Parameter(format!(
            "a scaling fit needs at least four values of eta, got {}",
            pairs.len()
        )));
    }
    let ly: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mut fits = Vec::new();
    for model in ScalingModel::ALL {
        let lx: Vec<f64> = pairs.iter().map(|p| model.regressor(p.0).ln()).collect();
        let (c, r2) = fixed_slope_fit(&lx, &ly, 1.0)?;
        fits.push(ModelFit {
            model,
            c2: c.exp(),
            r2,
        });
    }
    let best = fits
        .iter()
        .max_by(|a, b| a.r2.total_cmp(&b.r2))
        .expect("three fits")
        .model;
    let vanishing = [1.0, 0.5, 0.25]
        .into_iter()
        .map(|a| {
            let v: Vec<f64> = pairs.iter().map(|(e, t)| t * e.powf(a)).collect();
            VanishingCheck {
                a,
                decreasing: v.windows(2).all(|w| w[1] < w[0]),
                end_ratio: v[v.len() - 1] / v[0],
            }
        })
        .collect();
    Ok(ScalingFit {
        fits,
        best,
        vanishing,
        etas: pairs.iter().map(|p| p.0).collect(),
        t_star: pairs.iter().map(|p| p.1).collect(),
    })
}
