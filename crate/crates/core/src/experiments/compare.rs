use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::csv_err;
use super::{derive_seed, evaluate_config, label_stream, mean_stderr, EvalSpec, ExperimentError};
use crate::agents::RheaParams;
use crate::ntbea::{run_ntbea, TupleRow};
use crate::optim::{EvalLog, OptimizerSpec};
use crate::search_space::{SearchPoint, SearchSpace};

const VALIDATION_STREAM: u64 = 0x7661_6c69;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ComparisonSpec {
    pub optimizers: Vec<OptimizerSpec>,
    pub runs: usize,
    /// Game evaluations each optimizer may spend per run.
    pub budget: usize,
    pub validation_games: usize,
    pub eval: EvalSpec,
}

impl Default for ComparisonSpec {
    fn default() -> Self {
        ComparisonSpec {
            optimizers: vec![
                OptimizerSpec::Rmhc { resamples: 1 },
                OptimizerSpec::Rmhc { resamples: 5 },
                OptimizerSpec::Sga { pop_size: 20 },
                OptimizerSpec::Ntbea(crate::ntbea::NtbeaParams::with_tuples(&[1])),
                OptimizerSpec::Ntbea(crate::ntbea::NtbeaParams::with_tuples(&[1, 2])),
            ],
            runs: 30,
            budget: 288,
            validation_games: 100,
            eval: EvalSpec::default(),
        }
    }
}

impl ComparisonSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.optimizers.is_empty() {
            return Err(ExperimentError::Config("no optimizers given".into()));
        }
        if self.runs == 0 {
            return Err(ExperimentError::Config("runs must be >= 1".into()));
        }
        if self.budget == 0 {
            return Err(ExperimentError::Config("budget must be >= 1".into()));
        }
        if self.validation_games == 0 {
            return Err(ExperimentError::Config(
                "validationGames must be >= 1".into(),
            ));
        }
        self.eval.validate()
    }
}

/// One optimizer run and the validated quality of its recommendation.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub optimizer: String,
    pub run: usize,
    pub recommendation: SearchPoint,
    pub params: RheaParams,
    pub validated: f64,
    pub validated_stderr: f64,
    pub log: EvalLog,
    /// Tuple statistics of the final model, for NTBEA runs.
    pub tuple_report: Option<Vec<TupleRow>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub optimizer: String,
    pub runs: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug)]
pub struct ComparisonTable {
    pub budget: usize,
    pub validation_games: usize,
    /// One row per optimizer, in input order.
    pub rows: Vec<ComparisonRow>,
    /// Optimizer-major, then run order.
    pub outcomes: Vec<RunOutcome>,
}

/// Runs every optimizer `runs` times on the agent-tuning problem and scores
/// each recommendation by the mean of `validation_games` fresh games.
///
/// Validation games depend only on the run index and the recommendation, so
/// two optimizers recommending the same point in the same run get the same
/// validated value.
pub fn run_optimizer_comparison(
    spec: &ComparisonSpec,
    seed: u64,
) -> Result<ComparisonTable, ExperimentError> {
    spec.validate()?;
    let space = SearchSpace::agent();
    let jobs: Vec<(usize, usize)> = (0..spec.optimizers.len())
        .flat_map(|o| (0..spec.runs).map(move |r| (o, r)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(o, r)| one_run(&spec.optimizers[o], r, spec, &space, seed))
        .collect::<Result<Vec<_>, _>>()?;

    let rows = spec
        .optimizers
        .iter()
        .enumerate()
        .map(|(o, opt)| {
            let vals: Vec<f64> = outcomes[o * spec.runs..(o + 1) * spec.runs]
                .iter()
                .map(|x| x.validated)
                .collect();
            let (mean, stderr) = mean_stderr(&vals);
            ComparisonRow {
                optimizer: opt.label(),
                runs: spec.runs,
                mean,
                stderr,
            }
        })
        .collect();
    Ok(ComparisonTable {
        budget: spec.budget,
        validation_games: spec.validation_games,
        rows,
        outcomes,
    })
}

fn one_run(
    opt: &OptimizerSpec,
    run: usize,
    spec: &ComparisonSpec,
    space: &SearchSpace,
    seed: u64,
) -> Result<RunOutcome, ExperimentError> {
    let label = opt.label();
    let run_seed = derive_seed(seed, &[label_stream(&label), run as u64]);
    let game_seed = derive_seed(run_seed, &[1]);
    let mut calls = 0u64;
    let mut failure: Option<ExperimentError> = None;
    let mut eval = |p: &SearchPoint| {
        let i = calls;
        calls += 1;
        match evaluate_config(p, space, &spec.eval, i, game_seed) {
            Ok(f) => f,
            Err(e) => {
                failure.get_or_insert(e);
                -1.0
            }
        }
    };
    let (recommendation, log, tuple_report) = match opt {
        OptimizerSpec::Ntbea(params) => {
            let r = run_ntbea(
                &mut eval,
                space,
                params,
                spec.budget,
                derive_seed(run_seed, &[0]),
            )?;
            let report = r.model.report(space);
            (r.recommendation, r.log, Some(report))
        }
        other => {
            let r =
                other
                    .build()
                    .run(&mut eval, space, spec.budget, derive_seed(run_seed, &[0]))?;
            (r.recommendation, r.log, None)
        }
    };
    if let Some(e) = failure {
        return Err(e);
    }

    let validation_seed = derive_seed(seed, &[VALIDATION_STREAM, run as u64]);
    let games = (0..spec.validation_games as u64)
        .into_par_iter()
        .map(|i| evaluate_config(&recommendation, space, &spec.eval, i, validation_seed))
        .collect::<Result<Vec<f64>, _>>()?;
    let (validated, validated_stderr) = mean_stderr(&games);
    Ok(RunOutcome {
        optimizer: label,
        run,
        params: space.decode_agent(&recommendation)?,
        recommendation,
        validated,
        validated_stderr,
        log,
        tuple_report,
    })
}

impl ComparisonTable {
    pub fn row(&self, label: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.optimizer == label)
    }

    /// `optimizer,runs,budget,validationGames,mean,stderr`
    pub fn write_comparison_csv<W: Write>(&self, out: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "optimizer",
            "runs",
            "budget",
            "validationGames",
            "mean",
            "stderr",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.optimizer.clone(),
                r.runs.to_string(),
                self.budget.to_string(),
                self.validation_games.to_string(),
                r.mean.to_string(),
                r.stderr.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// `optimizer,run,point,config,validated,stderr`; `point` holds the
    /// value-table indices joined by spaces.
    pub fn write_runs_csv<W: Write>(&self, out: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["optimizer", "run", "point", "config", "validated", "stderr"])
            .map_err(csv_err)?;
        for o in &self.outcomes {
            let point = o
                .recommendation
                .0
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            w.write_record([
                o.optimizer.clone(),
                o.run.to_string(),
                point,
                o.params.to_string(),
                o.validated.to_string(),
                o.validated_stderr.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}
