//! Success rate and closest-approach metrics over many scenes and trials.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::agent::AgentModel;
use super::rollout::{rollout_on_grid, RolloutConfig, Termination};
use super::SimError;
use crate::field::FieldParams;
use crate::scene::rng::{stream, Purpose};
use crate::scene::{sample_certified_pair, SceneConfig, SceneManifest};
use crate::voxel::OccupancyGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub trial: u32,
    pub success: bool,
    pub de: f64,
    pub time_used: f64,
    /// `None` when the trial aborted with an error.
    pub termination: Option<Termination>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEval {
    pub seed: u64,
    pub difficulty: f64,
    pub trials: u32,
    pub successes: u32,
    pub sr: f64,
    pub de_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    /// Percentage of successful trials.
    pub sr: f64,
    /// Mean closest approach over all trials, metres.
    pub de_mean: f64,
    /// Mean closest approach over successful trials; 0 if there are none.
    pub de_mean_success: f64,
    pub trials: usize,
    pub scenes: Vec<SceneEval>,
    pub outcomes: Vec<TrialOutcome>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Aggregate trial outcomes; scenes appear in first-seen order.
pub fn summarize(outcomes: Vec<TrialOutcome>, difficulties: &[(u64, f64)]) -> EvalSummary {
    let n = outcomes.len();
    let ok = outcomes.iter().filter(|o| o.success).count();
    let des: Vec<f64> = outcomes.iter().map(|o| o.de).collect();
    let des_ok: Vec<f64> = outcomes.iter().filter(|o| o.success).map(|o| o.de).collect();
    let scenes = difficulties
        .iter()
        .map(|&(seed, difficulty)| {
            let group: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.seed == seed).collect();
            let successes = group.iter().filter(|o| o.success).count() as u32;
            let trials = group.len() as u32;
            SceneEval {
                seed,
                difficulty,
                trials,
                successes,
                sr: if trials == 0 { 0.0 } else { 100.0 * successes as f64 / trials as f64 },
                de_mean: mean(&group.iter().map(|o| o.de).collect::<Vec<_>>()),
            }
        })
        .collect();
    EvalSummary {
        sr: if n == 0 { 0.0 } else { 100.0 * ok as f64 / n as f64 },
        de_mean: mean(&des),
        de_mean_success: mean(&des_ok),
        trials: n,
        scenes,
        outcomes,
    }
}

fn failed(seed: u64, trial: u32, de: f64, error: String) -> TrialOutcome {
    TrialOutcome { seed, trial, success: false, de, time_used: 0.0, termination: None, error: Some(error) }
}

fn run_trial(
    scene: &SceneManifest,
    grid: &OccupancyGrid,
    trial: u32,
    scene_cfg: &SceneConfig,
    model: &AgentModel,
    params: &FieldParams,
    cfg: &RolloutConfig,
) -> TrialOutcome {
    let (start, goal): (Vector3<f64>, Vector3<f64>) = if trial == 0 {
        (scene.start(), scene.goal())
    } else {
        match sample_certified_pair(grid, scene_cfg, &mut stream(scene.seed, Purpose::Trial, trial)) {
            Ok(pair) => pair,
            Err(e) => return failed(scene.seed, trial, f64::NAN, e.to_string()),
        }
    };
    match rollout_on_grid(grid, &start, &goal, model, params, cfg) {
        Ok(r) => TrialOutcome {
            seed: scene.seed,
            trial,
            success: r.success,
            de: r.de,
            time_used: r.time_used,
            termination: Some(r.termination),
            error: None,
        },
        Err(e) => failed(scene.seed, trial, (goal - start).xy().norm(), e.to_string()),
    }
}

/// Run `trials` rollouts per scene. Trial 0 uses the scene's own start and
/// goal; later trials draw fresh certified pairs from the scene's trial
/// streams. Aborted trials count as failures.
pub fn evaluate(
    scenes: &[SceneManifest],
    scene_cfg: &SceneConfig,
    model: &AgentModel,
    params: &FieldParams,
    cfg: &RolloutConfig,
    trials: u32,
) -> Result<EvalSummary, SimError> {
    if scenes.is_empty() || trials == 0 {
        return Err(SimError::Config("evaluation needs at least one scene and one trial".into()));
    }
    model.validate()?;
    cfg.validate()?;
    params.validate().map_err(crate::field::FieldError::from)?;
    let outcomes: Vec<TrialOutcome> = scenes
        .par_iter()
        .flat_map_iter(|scene| {
            let grid = scene.validate().and_then(|_| scene.build_grid(scene_cfg.voxel_budget));
            let per: Vec<TrialOutcome> = match grid {
                Ok(grid) => (0..trials)
                    .into_par_iter()
                    .map(|t| run_trial(scene, &grid, t, scene_cfg, model, params, cfg))
                    .collect(),
                Err(e) => (0..trials).map(|t| failed(scene.seed, t, f64::NAN, e.to_string())).collect(),
            };
            per
        })
        .collect();
    let keys: Vec<(u64, f64)> = scenes.iter().map(|s| (s.seed, s.difficulty)).collect();
    Ok(summarize(outcomes, &keys))
}

impl EvalSummary {
    /// Per-scene table as CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,difficulty,trials,successes,sr,de_mean\n");
        for s in &self.scenes {
            out.push_str(&format!("{},{},{},{},{},{}\n", s.seed, s.difficulty, s.trials, s.successes, s.sr, s.de_mean));
        }
        out
    }
}
