use std::io::Write;

use rayon::prelude::*;

use super::{derive_seed, evaluate_config, mean_stderr, EvalSpec, ExperimentError};
use crate::agents::RheaParams;
use crate::ntbea::NTupleModel;
use crate::optim::EvalLog;
use crate::search_space::{SearchPoint, SearchSpace};

/// Aggregated evaluations of one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub rank: usize,
    pub point: SearchPoint,
    pub params: RheaParams,
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    /// One row per point, in rank order.
    pub rows: Vec<SweepRow>,
    /// Every single game, point-major then repetition order.
    pub log: EvalLog,
    pub reps: usize,
}

/// Seed stream of the point with the given rank.
pub fn sweep_point_seed(master: u64, rank: usize) -> u64 {
    derive_seed(master, &[rank as u64])
}

/// Evaluates every point of the agent space `reps` times. Repetition `r` of
/// the point with rank `k` is `evaluate_config(point, spec, r, sweep_point_seed(seed, k))`.
pub fn run_exhaustive_sweep(
    spec: &EvalSpec,
    reps: usize,
    seed: u64,
) -> Result<SweepResult, ExperimentError> {
    if reps == 0 {
        return Err(ExperimentError::Config("sweep needs reps >= 1".into()));
    }
    spec.validate()?;
    let space = SearchSpace::agent();
    let points: Vec<SearchPoint> = space.enumerate().collect();
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|k| (0..reps).map(move |r| (k, r)))
        .collect();
    let fitness = jobs
        .par_iter()
        .map(|&(k, r)| {
            evaluate_config(
                &points[k],
                &space,
                spec,
                r as u64,
                sweep_point_seed(seed, k),
            )
        })
        .collect::<Result<Vec<f64>, _>>()?;

    let mut log = EvalLog::default();
    let mut rows = Vec::with_capacity(points.len());
    for (k, point) in points.into_iter().enumerate() {
        let chunk = &fitness[k * reps..(k + 1) * reps];
        for &f in chunk {
            log.push(point.clone(), f);
        }
        let (mean, stderr) = mean_stderr(chunk);
        let params = space.decode_agent(&point)?;
        rows.push(SweepRow {
            rank: k,
            point,
            params,
            n: reps,
            mean,
            stderr,
        });
    }
    Ok(SweepResult { rows, log, reps })
}

impl SweepResult {
    /// Rows by descending mean (rank breaks ties).
    pub fn sorted(&self) -> Vec<&SweepRow> {
        let mut v: Vec<&SweepRow> = self.rows.iter().collect();
        v.sort_by(|a, b| b.mean.total_cmp(&a.mean).then(a.rank.cmp(&b.rank)));
        v
    }

    pub fn count_below_zero(&self) -> usize {
        self.rows.iter().filter(|r| r.mean < 0.0).count()
    }

    /// Mean of the top tenth of sorted means minus the mean of the bottom tenth.
    pub fn decile_spread(&self) -> f64 {
        let sorted = self.sorted();
        let k = (sorted.len() / 10).max(1);
        let top = sorted[..k].iter().map(|r| r.mean).sum::<f64>() / k as f64;
        let bottom = sorted[sorted.len() - k..]
            .iter()
            .map(|r| r.mean)
            .sum::<f64>()
            / k as f64;
        top - bottom
    }

    pub fn row_for(&self, params: &RheaParams) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.params == *params)
    }

    /// N-tuple model fed with every game of the sweep.
    pub fn tuple_model(&self, defs: Vec<Vec<usize>>) -> NTupleModel {
        let mut model = NTupleModel::new(&SearchSpace::agent(), defs);
        for (p, f) in &self.log.entries {
            model.add_sample(p, *f);
        }
        model
    }

    /// `rank,i0..i4,nbMutatedPoints,flipAtLeastOneBit,useShiftBuffer,nbResamples,sequenceLength,n,mean,stderr`
    pub fn write_sweep_csv<W: Write>(&self, out: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "rank",
            "i0",
            "i1",
            "i2",
            "i3",
            "i4",
            "nbMutatedPoints",
            "flipAtLeastOneBit",
            "useShiftBuffer",
            "nbResamples",
            "sequenceLength",
            "n",
            "mean",
            "stderr",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![r.rank.to_string()];
            rec.extend(r.point.0.iter().map(|i| i.to_string()));
            let p = &r.params;
            rec.extend([
                p.nb_mutated_points.to_string(),
                p.flip_at_least_one_bit.to_string(),
                p.use_shift_buffer.to_string(),
                p.nb_resamples.to_string(),
                p.sequence_length.to_string(),
                r.n.to_string(),
                r.mean.to_string(),
                r.stderr.to_string(),
            ]);
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// `position,rank,config,mean,stderr`, best first.
    pub fn write_sorted_curve_csv<W: Write>(&self, out: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["position", "rank", "config", "mean", "stderr"])
            .map_err(csv_err)?;
        for (i, r) in self.sorted().into_iter().enumerate() {
            w.write_record([
                i.to_string(),
                r.rank.to_string(),
                r.params.to_string(),
                r.mean.to_string(),
                r.stderr.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> ExperimentError {
    ExperimentError::Io(std::io::Error::other(e))
}
