//! N-Tuple Bandit Evolutionary Algorithm.
//!
//! The fitness model is a set of n-tuples: projections of the search space
//! onto subsets of its dimensions. Each tuple keeps bandit statistics per
//! observed value pattern, and a point is scored by averaging the UCB values
//! of the patterns it falls into. Every iteration evaluates the current point
//! once and moves to the most promising of a batch of random neighbours.

use std::collections::HashMap;
use std::io::Write;

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::optim::{BudgetedEval, EvalLog, Optimizer, OptimizerError, OptimizerRun};
use crate::search_space::{SearchPoint, SearchSpace};

/// Upper bound of the tie-breaking noise added to UCB values.
pub const JITTER: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TupleStats {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl TupleStats {
    pub fn add(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    /// Empirical mean; 0 for an unvisited pattern.
    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    /// Population variance `sum_sq/n - mean^2`.
    pub fn variance(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let m = self.mean();
        self.sum_sq / self.n as f64 - m * m
    }

    /// Standard error using the sample variance; 0 below two samples.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let sample_var = ((self.sum_sq - n * self.mean() * self.mean()) / (n - 1.0)).max(0.0);
        (sample_var / n).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct NtbeaParams {
    /// Exploration constant.
    pub k: f64,
    /// Added to visit counts in the exploration term.
    pub epsilon: f64,
    /// Candidates drawn around the current point per iteration.
    pub neighbours: usize,
    /// Tuple sizes; size `s` means every `s`-subset of the dimensions.
    pub tuples: Vec<usize>,
    /// Explicit dimension subsets, used instead of `tuples` when set.
    pub custom_tuples: Option<Vec<Vec<usize>>>,
}

impl Default for NtbeaParams {
    fn default() -> Self {
        NtbeaParams {
            k: 1.0,
            epsilon: 0.5,
            neighbours: 50,
            tuples: vec![1],
            custom_tuples: None,
        }
    }
}

impl NtbeaParams {
    pub fn with_tuples(tuples: &[usize]) -> Self {
        NtbeaParams {
            tuples: tuples.to_vec(),
            ..NtbeaParams::default()
        }
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |m: &str| Err(OptimizerError::Config(m.to_string()));
        if self.k.is_nan() || self.k < 0.0 {
            return bad("k must be >= 0");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("epsilon must be > 0");
        }
        if self.neighbours < 1 {
            return bad("neighbours must be >= 1");
        }
        if self.custom_tuples.is_none() && self.tuples.is_empty() {
            return bad("at least one tuple size is required");
        }
        Ok(())
    }

    /// Expands the configuration into dimension subsets for a space with
    /// `dims` dimensions.
    pub fn tuple_defs(&self, dims: usize) -> Result<Vec<Vec<usize>>, OptimizerError> {
        if let Some(custom) = &self.custom_tuples {
            if custom.is_empty()
                || custom
                    .iter()
                    .any(|t| t.is_empty() || t.iter().any(|&d| d >= dims))
            {
                return Err(OptimizerError::Config(
                    "custom tuples must be non-empty and in range".into(),
                ));
            }
            return Ok(custom.clone());
        }
        let mut defs = Vec::new();
        for &size in &self.tuples {
            if size == 0 || size > dims {
                return Err(OptimizerError::Config(format!(
                    "tuple size {size} invalid for {dims} dimensions"
                )));
            }
            defs.extend(combinations(dims, size));
        }
        Ok(defs)
    }

    pub fn label(&self) -> String {
        match &self.custom_tuples {
            Some(_) => "NTBEA(custom)".into(),
            None => format!(
                "NTBEA({})",
                self.tuples
                    .iter()
                    .map(|t| t.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        }
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

#[derive(Clone, Debug)]
pub struct NTupleModel {
    cards: Vec<usize>,
    defs: Vec<Vec<usize>>,
    stats: Vec<HashMap<u64, TupleStats>>,
    total: u64,
}

impl NTupleModel {
    pub fn new(space: &SearchSpace, defs: Vec<Vec<usize>>) -> Self {
        let stats = vec![HashMap::new(); defs.len()];
        NTupleModel {
            cards: space.cardinalities().to_vec(),
            defs,
            stats,
            total: 0,
        }
    }

    pub fn tuple_defs(&self) -> &[Vec<usize>] {
        &self.defs
    }

    pub fn total_evaluations(&self) -> u64 {
        self.total
    }

    #[inline]
    fn key(&self, def: usize, p: &SearchPoint) -> u64 {
        self.defs[def]
            .iter()
            .fold(0u64, |acc, &d| acc * self.cards[d] as u64 + p.0[d] as u64)
    }

    fn unkey(&self, def: usize, mut key: u64) -> Vec<usize> {
        let dims = &self.defs[def];
        let mut out = vec![0; dims.len()];
        for (slot, &d) in out.iter_mut().zip(dims).rev() {
            let c = self.cards[d] as u64;
            *slot = (key % c) as usize;
            key /= c;
        }
        out
    }

    pub fn add_sample(&mut self, p: &SearchPoint, fitness: f64) {
        for def in 0..self.defs.len() {
            let key = self.key(def, p);
            self.stats[def].entry(key).or_default().add(fitness);
        }
        self.total += 1;
    }

    /// Statistics of the pattern `p` falls into for tuple `def`.
    pub fn stats(&self, def: usize, p: &SearchPoint) -> TupleStats {
        self.stats[def]
            .get(&self.key(def, p))
            .copied()
            .unwrap_or_default()
    }

    /// Visited patterns of tuple `def` as `(pattern indices, stats)`,
    /// ordered by pattern.
    pub fn patterns(&self, def: usize) -> Vec<(Vec<usize>, TupleStats)> {
        let mut keys: Vec<_> = self.stats[def].iter().collect();
        keys.sort_by_key(|(k, _)| **k);
        keys.into_iter()
            .map(|(k, s)| (self.unkey(def, *k), *s))
            .collect()
    }

    /// Mean over tuples of `mean + k * sqrt(ln(N + 1) / (n + epsilon))`.
    pub fn ucb_exact(&self, p: &SearchPoint, k: f64, epsilon: f64) -> f64 {
        let log_total = ((self.total + 1) as f64).ln();
        let sum: f64 = (0..self.defs.len())
            .map(|def| {
                let s = self.stats(def, p);
                s.mean() + k * (log_total / (s.n as f64 + epsilon)).sqrt()
            })
            .sum();
        sum / self.defs.len() as f64
    }

    /// [`NTupleModel::ucb_exact`] plus uniform jitter in `[0, JITTER)`.
    pub fn ucb_value<R: Rng + ?Sized>(
        &self,
        p: &SearchPoint,
        k: f64,
        epsilon: f64,
        rng: &mut R,
    ) -> f64 {
        self.ucb_exact(p, k, epsilon) + rng.gen::<f64>() * JITTER
    }

    /// Model estimate of a point's fitness: the exploitation term alone.
    pub fn estimate(&self, p: &SearchPoint) -> f64 {
        let sum: f64 = (0..self.defs.len())
            .map(|def| self.stats(def, p).mean())
            .sum();
        sum / self.defs.len() as f64
    }

    pub fn report(&self, space: &SearchSpace) -> Vec<TupleRow> {
        let mut rows = Vec::new();
        for (def, dims) in self.defs.iter().enumerate() {
            let tuple = dims
                .iter()
                .map(|&d| space.dimension(d).name.as_str())
                .collect::<Vec<_>>()
                .join("+");
            for (pattern, s) in self.patterns(def) {
                let values = dims
                    .iter()
                    .zip(&pattern)
                    .map(|(&d, &i)| space.dimension(d).values[i].to_string())
                    .collect::<Vec<_>>()
                    .join("|");
                rows.push(TupleRow {
                    tuple: tuple.clone(),
                    dims: dims.clone(),
                    pattern: values,
                    indices: pattern,
                    n: s.n,
                    mean: s.mean(),
                    stderr: s.stderr(),
                });
            }
        }
        rows
    }
}

/// One line of the tuple report.
#[derive(Clone, Debug, PartialEq)]
pub struct TupleRow {
    /// Dimension names joined by `+`.
    pub tuple: String,
    pub dims: Vec<usize>,
    /// Decoded values joined by `|`.
    pub pattern: String,
    pub indices: Vec<usize>,
    pub n: u64,
    pub mean: f64,
    pub stderr: f64,
}

/// CSV with header `tuple,pattern,n,mean,stderr`.
pub fn write_tuple_report<W: Write>(rows: &[TupleRow], out: W) -> Result<(), OptimizerError> {
    let io = |e: csv::Error| OptimizerError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tuple", "pattern", "n", "mean", "stderr"])
        .map_err(io)?;
    for r in rows {
        w.write_record([
            r.tuple.clone(),
            r.pattern.clone(),
            r.n.to_string(),
            r.mean.to_string(),
            r.stderr.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| OptimizerError::Io(e.to_string()))
}

#[derive(Clone, Debug)]
pub struct NtbeaRun {
    pub recommendation: SearchPoint,
    pub log: EvalLog,
    pub model: NTupleModel,
}

pub fn run_ntbea(
    eval: &mut dyn FnMut(&SearchPoint) -> f64,
    space: &SearchSpace,
    params: &NtbeaParams,
    budget: usize,
    seed: u64,
) -> Result<NtbeaRun, OptimizerError> {
    params.validate()?;
    if budget < 1 {
        return Err(OptimizerError::Config(
            "NTBEA needs a budget of at least one evaluation".into(),
        ));
    }
    let mut rng = SmallRng::seed_from_u64(seed);
    let mut model = NTupleModel::new(space, params.tuple_defs(space.dims())?);
    let mut counted = BudgetedEval::new(eval, budget);
    // Distinct sampled points with their visit counts, in first-seen order.
    let mut visits: HashMap<SearchPoint, u64> = HashMap::new();
    let mut order: Vec<SearchPoint> = Vec::new();

    let mut current = space.random_point(&mut rng);
    while let Some(f) = counted.eval(&current) {
        model.add_sample(&current, f);
        let v = visits.entry(current.clone()).or_insert(0);
        if *v == 0 {
            order.push(current.clone());
        }
        *v += 1;
        if counted.remaining() == 0 {
            break;
        }
        let mut best: Option<(f64, SearchPoint)> = None;
        for _ in 0..params.neighbours {
            let cand = space.mutate_point(&current, &mut rng);
            let u = model.ucb_value(&cand, params.k, params.epsilon, &mut rng);
            if best.as_ref().is_none_or(|(b, _)| u > *b) {
                best = Some((u, cand));
            }
        }
        current = best.expect("neighbours >= 1").1;
    }

    let recommendation = recommend(&model, &order, &visits);
    Ok(NtbeaRun {
        recommendation,
        log: counted.into_log(),
        model,
    })
}

/// Sampled point with the highest model estimate; ties go to more visits,
/// then to the earliest sampled.
fn recommend(
    model: &NTupleModel,
    order: &[SearchPoint],
    visits: &HashMap<SearchPoint, u64>,
) -> SearchPoint {
    let mut best: Option<(f64, u64, &SearchPoint)> = None;
    for p in order {
        let est = model.estimate(p);
        let n = visits[p];
        let better = match best {
            None => true,
            Some((be, bn, _)) => est > be || (est == be && n > bn),
        };
        if better {
            best = Some((est, n, p));
        }
    }
    best.expect("at least one sample").2.clone()
}

/// Rebuilds a model from `log` and returns the point [`run_ntbea`] would
/// recommend after producing that log.
pub fn recommend_from_log(
    space: &SearchSpace,
    defs: Vec<Vec<usize>>,
    log: &EvalLog,
) -> Option<SearchPoint> {
    if log.is_empty() {
        return None;
    }
    let mut model = NTupleModel::new(space, defs);
    let mut visits: HashMap<SearchPoint, u64> = HashMap::new();
    let mut order = Vec::new();
    for (p, f) in &log.entries {
        model.add_sample(p, *f);
        let v = visits.entry(p.clone()).or_insert(0);
        if *v == 0 {
            order.push(p.clone());
        }
        *v += 1;
    }
    Some(recommend(&model, &order, &visits))
}

/// [`run_ntbea`] behind the common optimizer interface.
#[derive(Clone, Debug, Default)]
pub struct Ntbea(pub NtbeaParams);

impl Optimizer for Ntbea {
    fn name(&self) -> String {
        self.0.label()
    }

    fn run(
        &self,
        eval: &mut dyn FnMut(&SearchPoint) -> f64,
        space: &SearchSpace,
        budget: usize,
        seed: u64,
    ) -> Result<OptimizerRun, OptimizerError> {
        let r = run_ntbea(eval, space, &self.0, budget, seed)?;
        Ok(OptimizerRun {
            recommendation: r.recommendation,
            log: r.log,
        })
    }
}
