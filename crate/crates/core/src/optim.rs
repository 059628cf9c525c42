//! Pieces shared by all optimizers: the evaluation log, strict budget
//! accounting and the common `Optimizer` interface.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{RandomSearch, Rmhc, Sga};
use crate::ntbea::{Ntbea, NtbeaParams};
use crate::search_space::{SearchPoint, SearchSpace, SpaceError};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid optimizer configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("writing log: {0}")]
    Io(String),
}

/// Every `(point, fitness)` observation of a run, in call order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalLog {
    pub entries: Vec<(SearchPoint, f64)>,
}

/// Pooled statistics of one genotype inside a log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointSummary {
    pub n: usize,
    pub mean: f64,
    pub first_seen: usize,
}

impl EvalLog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, p: SearchPoint, f: f64) {
        self.entries.push((p, f));
    }

    pub fn summaries(&self) -> HashMap<&SearchPoint, PointSummary> {
        let mut acc: HashMap<&SearchPoint, (usize, f64, usize)> = HashMap::new();
        for (i, (p, f)) in self.entries.iter().enumerate() {
            let e = acc.entry(p).or_insert((0, 0.0, i));
            e.0 += 1;
            e.1 += f;
        }
        acc.into_iter()
            .map(|(p, (n, sum, first))| {
                (
                    p,
                    PointSummary {
                        n,
                        mean: sum / n as f64,
                        first_seen: first,
                    },
                )
            })
            .collect()
    }

    /// Genotype with the highest mean over all its evaluations; ties go to
    /// more evaluations, then to the earliest seen.
    pub fn best_by_mean(&self) -> Option<SearchPoint> {
        self.summaries()
            .into_iter()
            .max_by(|(_, a), (_, b)| {
                a.mean
                    .total_cmp(&b.mean)
                    .then(a.n.cmp(&b.n))
                    .then(b.first_seen.cmp(&a.first_seen))
            })
            .map(|(p, _)| p.clone())
    }

    /// Single best observation (earliest on ties).
    pub fn best_single(&self) -> Option<SearchPoint> {
        let mut best: Option<&(SearchPoint, f64)> = None;
        for e in &self.entries {
            if best.is_none_or(|b| e.1 > b.1) {
                best = Some(e);
            }
        }
        best.map(|e| e.0.clone())
    }

    pub fn distinct_points(&self) -> usize {
        self.summaries().len()
    }

    /// CSV with header `iteration,i0,..,i{D-1},fitness`; the `i` columns hold
    /// value-table indices.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), OptimizerError> {
        let io = |e: csv::Error| OptimizerError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        let dims = self.entries.first().map_or(0, |e| e.0.dims());
        let mut header = vec!["iteration".to_string()];
        header.extend((0..dims).map(|d| format!("i{d}")));
        header.push("fitness".into());
        w.write_record(&header).map_err(io)?;
        for (i, (p, f)) in self.entries.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(p.0.iter().map(|x| x.to_string()));
            row.push(f.to_string());
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| OptimizerError::Io(e.to_string()))
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<EvalLog, OptimizerError> {
        let err = |e: String| OptimizerError::Io(e);
        let mut r = csv::Reader::from_reader(input);
        let mut log = EvalLog::default();
        for rec in r.records() {
            let rec = rec.map_err(|e| err(e.to_string()))?;
            if rec.len() < 2 {
                return Err(err("short row".into()));
            }
            let idx = (1..rec.len() - 1)
                .map(|i| rec[i].parse::<usize>().map_err(|e| err(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            let f = rec[rec.len() - 1]
                .parse::<f64>()
                .map_err(|e| err(e.to_string()))?;
            log.push(SearchPoint(idx), f);
        }
        Ok(log)
    }
}

/// Wraps an evaluation function with a hard call limit and records every
/// call in the log.
pub struct BudgetedEval<'a> {
    eval: &'a mut dyn FnMut(&SearchPoint) -> f64,
    limit: usize,
    log: EvalLog,
}

impl<'a> BudgetedEval<'a> {
    pub fn new(eval: &'a mut dyn FnMut(&SearchPoint) -> f64, limit: usize) -> Self {
        BudgetedEval {
            eval,
            limit,
            log: EvalLog {
                entries: Vec::with_capacity(limit),
            },
        }
    }

    pub fn remaining(&self) -> usize {
        self.limit - self.log.len()
    }

    pub fn used(&self) -> usize {
        self.log.len()
    }

    /// `None` once the budget is spent.
    pub fn eval(&mut self, p: &SearchPoint) -> Option<f64> {
        if self.log.len() >= self.limit {
            return None;
        }
        let f = (self.eval)(p);
        self.log.push(p.clone(), f);
        Some(f)
    }

    /// Mean of `n` fresh evaluations; `None` if fewer than `n` remain.
    pub fn eval_mean(&mut self, p: &SearchPoint, n: usize) -> Option<f64> {
        if self.remaining() < n || n == 0 {
            return None;
        }
        let mut sum = 0.0;
        for _ in 0..n {
            sum += self.eval(p)?;
        }
        Some(sum / n as f64)
    }

    pub fn into_log(self) -> EvalLog {
        self.log
    }
}

#[derive(Clone, Debug)]
pub struct OptimizerRun {
    pub recommendation: SearchPoint,
    pub log: EvalLog,
}

pub trait Optimizer: Send + Sync {
    fn name(&self) -> String;

    /// Searches `space` with at most `budget` calls of `eval`.
    fn run(
        &self,
        eval: &mut dyn FnMut(&SearchPoint) -> f64,
        space: &SearchSpace,
        budget: usize,
        seed: u64,
    ) -> Result<OptimizerRun, OptimizerError>;
}

/// Serializable optimizer choice, used by the harness and the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "kebab-case")]
pub enum OptimizerSpec {
    Rmhc {
        #[serde(default = "one")]
        resamples: usize,
    },
    Sga {
        #[serde(default = "twenty", rename = "popSize")]
        pop_size: usize,
    },
    Ntbea(NtbeaParams),
    Random,
}

fn one() -> usize {
    1
}

fn twenty() -> usize {
    20
}

impl OptimizerSpec {
    pub fn build(&self) -> Box<dyn Optimizer> {
        match self {
            OptimizerSpec::Rmhc { resamples } => Box::new(Rmhc {
                resamples: *resamples,
            }),
            OptimizerSpec::Sga { pop_size } => Box::new(Sga::new(*pop_size)),
            OptimizerSpec::Ntbea(p) => Box::new(Ntbea(p.clone())),
            OptimizerSpec::Random => Box::new(RandomSearch),
        }
    }

    pub fn label(&self) -> String {
        self.build().name()
    }
}
