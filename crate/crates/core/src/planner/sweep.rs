use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

use super::{plan, PlanOptions, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    LambdaHo,
    GammaSm,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::LambdaHo => "lambda_ho",
            SweepParam::GammaSm => "gamma_sm",
        }
    }

    fn apply(self, scenario: &mut Scenario, value: f64) {
        match self {
            SweepParam::LambdaHo => scenario.weights.lambda_ho = value,
            SweepParam::GammaSm => scenario.weights.gamma_sm = value,
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda_ho" => Ok(SweepParam::LambdaHo),
            "gamma_sm" => Ok(SweepParam::GammaSm),
            other => Err(Error::InvalidInput(format!(
                "unknown sweep parameter {other:?}; expected lambda_ho or gamma_sm"
            ))),
        }
    }
}

/// One grid point. Planning failures are kept in `error` and leave the
/// numeric fields empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub handover_count: Option<usize>,
    pub total_time_s: Option<f64>,
    pub path_length_m: Option<f64>,
    pub peak_acceleration_mps2: Option<f64>,
    pub cost: Option<f64>,
    pub gap: Option<f64>,
    pub error: Option<String>,
}

/// Re-plans once per value with the same seed. Points run concurrently;
/// rows come back in grid order.
pub fn sweep(scenario: &Scenario, param: SweepParam, values: &[f64], options: &PlanOptions) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::InvalidInput("sweep grid is empty".into()));
    }
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput(format!("sweep values must be finite and nonnegative, got {v}")));
    }
    Ok(values
        .par_iter()
        .map(|&value| {
            let mut s = scenario.clone();
            param.apply(&mut s, value);
            match plan(&s, options) {
                Ok(r) => SweepRow {
                    param,
                    value,
                    handover_count: Some(r.handover_count),
                    total_time_s: Some(r.total_time_s),
                    path_length_m: Some(r.path_length_m),
                    peak_acceleration_mps2: Some(r.peak_acceleration_mps2),
                    cost: Some(r.cost.total),
                    gap: Some(r.gap),
                    error: None,
                },
                Err(e) => {
                    log::warn!("sweep {param} = {value}: {e}");
                    SweepRow {
                        param,
                        value,
                        handover_count: None,
                        total_time_s: None,
                        path_length_m: None,
                        peak_acceleration_mps2: None,
                        cost: None,
                        gap: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect())
}
