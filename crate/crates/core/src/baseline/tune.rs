//! Grid search over policy thresholds, scored by the combined metric.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{predict, OverlapMeasure, PolicyParams};
use crate::corpus::Instance;
use crate::eval::{evaluate, EvalOptions, PredictionRecord};
use crate::ruleparse::{parse_rule_with, CueSet, RuleStructure};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub tau_irr: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_s: Vec<f64>,
    pub l_max: Vec<usize>,
    pub overlap: Vec<OverlapMeasure>,
}

impl Default for ParamGrid {
    fn default() -> Self {
        ParamGrid {
            tau_irr: vec![0.0, 0.1, 0.2, 0.3, 0.5],
            rho: vec![0.4, 0.6, 0.8, 1.0],
            rho_s: vec![0.6, 0.8, 1.01],
            l_max: vec![3, 5, 8],
            overlap: vec![OverlapMeasure::Containment],
        }
    }
}

impl ParamGrid {
    /// Every combination, in a fixed nesting order.
    pub fn points(&self) -> Vec<PolicyParams> {
        let mut out = Vec::new();
        for &overlap in &self.overlap {
            for &tau_irr in &self.tau_irr {
                for &rho in &self.rho {
                    for &rho_s in &self.rho_s {
                        for &l_max in &self.l_max {
                            out.push(PolicyParams {
                                tau_irr,
                                rho,
                                rho_s,
                                l_max,
                                overlap,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub params: PolicyParams,
    pub micro_accuracy: f64,
    pub macro_accuracy: f64,
    pub bleu4: Option<f64>,
    pub combined: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub best: PolicyParams,
    pub best_trial: Trial,
    pub trials: Vec<Trial>,
}

fn score(trial: &Trial) -> f64 {
    trial.combined.unwrap_or(trial.macro_accuracy / 100.0)
}

/// Evaluates every grid point on `dev` and keeps the highest combined
/// metric; ties go to the earlier grid point.
pub fn tune(dev: &[Instance], grid: &ParamGrid, cues: &CueSet) -> Result<TuneReport> {
    if dev.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::Config("parameter grid is empty".into()));
    }
    let structures: Vec<RuleStructure> = dev
        .par_iter()
        .map(|i| parse_rule_with(&i.rule_text, cues))
        .collect();
    let trials: Vec<Trial> = points
        .par_iter()
        .map(|params| {
            let records: Vec<PredictionRecord> = dev
                .iter()
                .zip(&structures)
                .map(|(i, s)| predict(i, s, params).record())
                .collect();
            let report = evaluate(dev, &records, EvalOptions::default())?;
            Ok(Trial {
                params: *params,
                micro_accuracy: report.micro_accuracy,
                macro_accuracy: report.macro_accuracy,
                bleu4: report.bleu4,
                combined: report.combined,
            })
        })
        .collect::<Result<_>>()?;
    let best_trial = trials
        .iter()
        .reduce(|best, t| if score(t) > score(best) { t } else { best })
        .expect("grid is non-empty")
        .clone();
    Ok(TuneReport {
        best: best_trial.params,
        best_trial,
        trials,
    })
}
