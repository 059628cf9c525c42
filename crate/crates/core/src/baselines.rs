//! Model-free baselines: random mutation hill climbing with resampling, a
//! generational GA, and uniform random search.

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

use crate::optim::{BudgetedEval, Optimizer, OptimizerError, OptimizerRun};
use crate::search_space::{SearchPoint, SearchSpace};

/// Random mutation hill climber. Each iteration re-evaluates the incumbent
/// and one neighbour `resamples` times and keeps the neighbour when its fresh
/// mean is at least the incumbent's.
#[derive(Clone, Copy, Debug)]
pub struct Rmhc {
    pub resamples: usize,
}

/// Per-iteration record of a hill-climbing run.
#[derive(Clone, Debug, PartialEq)]
pub struct RmhcStep {
    pub incumbent_mean: f64,
    pub mutant_mean: f64,
    pub accepted: bool,
}

impl Rmhc {
    pub fn run_traced(
        &self,
        eval: &mut dyn FnMut(&SearchPoint) -> f64,
        space: &SearchSpace,
        budget: usize,
        seed: u64,
    ) -> Result<(OptimizerRun, Vec<RmhcStep>), OptimizerError> {
        let n = self.resamples;
        if n == 0 {
            return Err(OptimizerError::Config(
                "RMHC needs at least one resample".into(),
            ));
        }
        if budget < 2 * n {
            return Err(OptimizerError::Config(format!(
                "RMHC({n}) needs a budget of at least {}",
                2 * n
            )));
        }
        let mut rng = SmallRng::seed_from_u64(seed);
        let mut counted = BudgetedEval::new(eval, budget);
        let mut incumbent = space.random_point(&mut rng);
        let mut steps = Vec::new();
        while counted.remaining() >= 2 * n {
            let mutant = space.mutate_point(&incumbent, &mut rng);
            let inc = counted.eval_mean(&incumbent, n).expect("budget checked");
            let mut_mean = counted.eval_mean(&mutant, n).expect("budget checked");
            let accepted = mut_mean >= inc;
            steps.push(RmhcStep {
                incumbent_mean: inc,
                mutant_mean: mut_mean,
                accepted,
            });
            if accepted {
                incumbent = mutant;
            }
        }
        Ok((
            OptimizerRun {
                recommendation: incumbent,
                log: counted.into_log(),
            },
            steps,
        ))
    }
}

impl Optimizer for Rmhc {
    fn name(&self) -> String {
        format!("RMHC({})", self.resamples)
    }

    fn run(
        &self,
        eval: &mut dyn FnMut(&SearchPoint) -> f64,
        space: &SearchSpace,
        budget: usize,
        seed: u64,
    ) -> Result<OptimizerRun, OptimizerError> {
        self.run_traced(eval, space, budget, seed).map(|(r, _)| r)
    }
}

/// Generational GA with elitism, binary tournaments, uniform crossover and
/// per-gene mutation at rate `1/D`.
#[derive(Clone, Copy, Debug)]
pub struct Sga {
    pub pop_size: usize,
    pub tournament: usize,
    pub elites: usize,
}

impl Sga {
    pub fn new(pop_size: usize) -> Self {
        Sga {
            pop_size,
            tournament: 2,
            elites: 1,
        }
    }

    /// Runs and also returns every generation's population.
    pub fn run_generations(
        &self,
        eval: &mut dyn FnMut(&SearchPoint) -> f64,
        space: &SearchSpace,
        budget: usize,
        seed: u64,
    ) -> Result<(OptimizerRun, Vec<Vec<SearchPoint>>), OptimizerError> {
        if self.pop_size < 2 {
            return Err(OptimizerError::Config(
                "SGA population must be at least 2".into(),
            ));
        }
        if budget < self.pop_size {
            return Err(OptimizerError::Config(format!(
                "SGA needs a budget of at least {}",
                self.pop_size
            )));
        }
        if self.tournament < 1 || self.elites >= self.pop_size {
            return Err(OptimizerError::Config(
                "bad tournament or elite count".into(),
            ));
        }
        let mut rng = SmallRng::seed_from_u64(seed);
        let mut counted = BudgetedEval::new(eval, budget);
        let mut pop: Vec<SearchPoint> = (0..self.pop_size)
            .map(|_| space.random_point(&mut rng))
            .collect();
        let mut history = Vec::new();
        let rate = 1.0 / space.dims() as f64;

        while counted.remaining() >= self.pop_size {
            let fitness: Vec<f64> = pop
                .iter()
                .map(|p| counted.eval(p).expect("budget checked"))
                .collect();
            history.push(pop.clone());
            if counted.remaining() < self.pop_size {
                break;
            }
            // Stable sort keeps the earliest individual first among equals.
            let mut order: Vec<usize> = (0..pop.len()).collect();
            order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]));
            let mut next: Vec<SearchPoint> = order[..self.elites]
                .iter()
                .map(|&i| pop[i].clone())
                .collect();
            while next.len() < self.pop_size {
                let a = self.select(&fitness, &mut rng);
                let b = self.select(&fitness, &mut rng);
                let mut child = crossover(&pop[a], &pop[b], &mut rng);
                for (x, &c) in child.0.iter_mut().zip(space.cardinalities()) {
                    if rng.gen::<f64>() < rate {
                        *x = rng.gen_range(0..c);
                    }
                }
                next.push(child);
            }
            pop = next;
        }
        let log = counted.into_log();
        let recommendation = log
            .best_by_mean()
            .expect("at least one generation evaluated");
        Ok((
            OptimizerRun {
                recommendation,
                log,
            },
            history,
        ))
    }

    fn select(&self, fitness: &[f64], rng: &mut SmallRng) -> usize {
        let mut best = rng.gen_range(0..fitness.len());
        for _ in 1..self.tournament {
            let c = rng.gen_range(0..fitness.len());
            if fitness[c] > fitness[best] {
                best = c;
            }
        }
        best
    }
}

fn crossover(a: &SearchPoint, b: &SearchPoint, rng: &mut SmallRng) -> SearchPoint {
    SearchPoint(
        a.0.iter()
            .zip(&b.0)
            .map(|(&x, &y)| if rng.gen::<bool>() { x } else { y })
            .collect(),
    )
}

impl Optimizer for Sga {
    fn name(&self) -> String {
        "SGA".into()
    }

    fn run(
        &self,
        eval: &mut dyn FnMut(&SearchPoint) -> f64,
        space: &SearchSpace,
        budget: usize,
        seed: u64,
    ) -> Result<OptimizerRun, OptimizerError> {
        self.run_generations(eval, space, budget, seed)
            .map(|(r, _)| r)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RandomSearch;

impl Optimizer for RandomSearch {
    fn name(&self) -> String {
        "Random".into()
    }

    fn run(
        &self,
        eval: &mut dyn FnMut(&SearchPoint) -> f64,
        space: &SearchSpace,
        budget: usize,
        seed: u64,
    ) -> Result<OptimizerRun, OptimizerError> {
        if budget < 1 {
            return Err(OptimizerError::Config(
                "random search needs a budget of at least 1".into(),
            ));
        }
        let mut rng = SmallRng::seed_from_u64(seed);
        let mut counted = BudgetedEval::new(eval, budget);
        while counted.remaining() > 0 {
            let p = space.random_point(&mut rng);
            counted.eval(&p);
        }
        let log = counted.into_log();
        let recommendation = log.best_single().expect("budget >= 1");
        Ok(OptimizerRun {
            recommendation,
            log,
        })
    }
}
