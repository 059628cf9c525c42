mod commands;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pwlab::experiments::{AblationSpec, ComparisonSpec, EvalSpec};
use pwlab::ntbea::NtbeaParams;
use pwlab::{GameParams, OptimizerSpec, RheaParams};

use crate::commands::CliError;
use crate::spec::{AblationRun, Command, ProfileSpec, RunSpec, ServeSpec, SweepSpec};

/// Planet wars agent tuning lab.
#[derive(Parser, Debug)]
#[command(name = "pwlab", version)]
struct Cli {
    /// Master seed; every derived game seed follows from it.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads for game evaluation (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Output directory for CSVs and run_spec.json.
    #[arg(
        long,
        global = true,
        env = "PWLAB_OUT_DIR",
        default_value = "pwlab-out"
    )]
    out: PathBuf,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Measure simulator ticks per second and state copies per second.
    Profile {
        #[arg(long, default_value_t = 10_000_000, value_parser = clap::value_parser!(u64).range(1..))]
        ticks: u64,
        #[arg(long, default_value_t = 10)]
        planets: usize,
    },
    /// Evaluate all 288 agent settings against the fixed opponent.
    Sweep {
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        reps: u64,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Run one optimizer repeatedly and validate its recommendations.
    Optimize {
        #[arg(long, value_parser = ["ntbea", "rmhc", "sga", "random"])]
        algo: String,
        /// NTBEA tuple sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        tuples: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, default_value_t = 50)]
        neighbours: usize,
        /// RMHC resamples per candidate.
        #[arg(long, default_value_t = 1)]
        resamples: usize,
        #[arg(long, default_value_t = 20)]
        pop_size: usize,
        #[command(flatten)]
        study: StudyArgs,
    },
    /// Compare several optimizers under the same budget.
    Compare {
        /// Comma-separated list from rmhc:N, sga, random, ntbea:S+S...
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "rmhc:1,rmhc:5,sga,ntbea:1,ntbea:1+2"
        )]
        optimizers: Vec<String>,
        #[command(flatten)]
        study: StudyArgs,
    },
    /// Medium against short horizon, with and without buffers in the score.
    Ablation {
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        games: u64,
        #[arg(long, default_value_t = 2000)]
        agent_budget: u64,
        #[arg(long, default_value_t = 200)]
        max_ticks: u32,
        #[arg(long, default_value_t = 10)]
        planets: usize,
        /// Random rollouts to record from a mid-game state.
        #[arg(long, default_value_t = 100)]
        rollouts: usize,
        #[arg(long, default_value_t = 20)]
        rollout_horizon: usize,
    },
    /// Serve human-vs-agent games over HTTP and WebSocket.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Preset name (best, fixed-opponent) or five comma-separated values.
        #[arg(long, default_value = "best")]
        agent: String,
        #[arg(long, default_value_t = 1000)]
        tick_millis: u64,
        #[arg(long, default_value_t = 2000)]
        agent_budget: u64,
        /// Directory of built UI assets.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
    /// Repeat a run from a saved run_spec.json.
    Run { spec: PathBuf },
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Forward-model calls per agent decision.
    #[arg(long, default_value_t = 2000)]
    agent_budget: u64,
    #[arg(long, default_value_t = 200)]
    max_ticks: u32,
    #[arg(long, default_value_t = 10)]
    planets: usize,
    /// Leave buffered ships out of the score.
    #[arg(long)]
    no_buffer_in_score: bool,
}

#[derive(Args, Debug)]
struct StudyArgs {
    /// Game evaluations per optimizer run.
    #[arg(long, default_value_t = 288)]
    budget: usize,
    #[arg(long, default_value_t = 30)]
    runs: usize,
    #[arg(long, default_value_t = 100)]
    validation_games: usize,
    #[command(flatten)]
    eval: EvalArgs,
}

impl EvalArgs {
    fn spec(&self) -> EvalSpec {
        EvalSpec {
            agent_budget: self.agent_budget,
            game_params: GameParams {
                num_planets: self.planets,
                max_ticks: self.max_ticks,
                include_buffer_in_score: !self.no_buffer_in_score,
                ..GameParams::default()
            },
            ..EvalSpec::default()
        }
    }
}

impl StudyArgs {
    fn spec(&self, optimizers: Vec<OptimizerSpec>) -> ComparisonSpec {
        ComparisonSpec {
            optimizers,
            runs: self.runs,
            budget: self.budget,
            validation_games: self.validation_games,
            eval: self.eval.spec(),
        }
    }
}

fn parse_optimizer(s: &str) -> Result<OptimizerSpec, CliError> {
    let bad = || {
        CliError::Usage(format!(
            "unknown optimizer {s:?}; expected rmhc:N, sga, random or ntbea:S+S"
        ))
    };
    let (name, arg) = s.split_once(':').map_or((s, None), |(a, b)| (a, Some(b)));
    match (name, arg) {
        ("rmhc", None) => Ok(OptimizerSpec::Rmhc { resamples: 1 }),
        ("rmhc", Some(n)) => Ok(OptimizerSpec::Rmhc {
            resamples: n.parse().map_err(|_| bad())?,
        }),
        ("sga", None) => Ok(OptimizerSpec::Sga { pop_size: 20 }),
        ("random", None) => Ok(OptimizerSpec::Random),
        ("ntbea", None) => Ok(OptimizerSpec::Ntbea(NtbeaParams::default())),
        ("ntbea", Some(t)) => {
            let tuples = t
                .split('+')
                .map(str::parse)
                .collect::<Result<Vec<usize>, _>>()
                .map_err(|_| bad())?;
            Ok(OptimizerSpec::Ntbea(NtbeaParams::with_tuples(&tuples)))
        }
        _ => Err(bad()),
    }
}

fn parse_agent(s: &str) -> Result<RheaParams, CliError> {
    if let Some(p) = RheaParams::preset(s) {
        return Ok(p);
    }
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || {
        CliError::Usage(format!(
            "agent must be a preset or five values like 3,true,true,1,15; got {s:?}"
        ))
    };
    if parts.len() != 5 {
        return Err(bad());
    }
    let p = RheaParams::new(
        parts[0].parse().map_err(|_| bad())?,
        parts[1].parse().map_err(|_| bad())?,
        parts[2].parse().map_err(|_| bad())?,
        parts[3].parse().map_err(|_| bad())?,
        parts[4].parse().map_err(|_| bad())?,
    );
    p.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(p)
}

fn resolve(cli: Cli) -> Result<RunSpec, CliError> {
    let command = match cli.command {
        Sub::Run { spec } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| CliError::Usage(format!("{}: {e}", spec.display())))?;
            return serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", spec.display())));
        }
        Sub::Profile { ticks, planets } => Command::Profile(ProfileSpec { ticks, planets }),
        Sub::Sweep { reps, eval } => Command::Sweep(SweepSpec {
            reps: reps as usize,
            eval: eval.spec(),
        }),
        Sub::Optimize {
            algo,
            tuples,
            k,
            epsilon,
            neighbours,
            resamples,
            pop_size,
            study,
        } => {
            let opt = match algo.as_str() {
                "ntbea" => OptimizerSpec::Ntbea(NtbeaParams {
                    k,
                    epsilon,
                    neighbours,
                    ..NtbeaParams::with_tuples(&tuples)
                }),
                "rmhc" => OptimizerSpec::Rmhc { resamples },
                "sga" => OptimizerSpec::Sga { pop_size },
                _ => OptimizerSpec::Random,
            };
            Command::Optimize(study.spec(vec![opt]))
        }
        Sub::Compare { optimizers, study } => {
            let opts = optimizers
                .iter()
                .map(|s| parse_optimizer(s))
                .collect::<Result<Vec<_>, _>>()?;
            Command::Compare(study.spec(opts))
        }
        Sub::Ablation {
            games,
            agent_budget,
            max_ticks,
            planets,
            rollouts,
            rollout_horizon,
        } => Command::Ablation(AblationRun {
            ablation: AblationSpec {
                games: games as usize,
                agent_budget,
                game_params: GameParams {
                    num_planets: planets,
                    max_ticks,
                    ..GameParams::default()
                },
                ..AblationSpec::default()
            },
            rollouts,
            rollout_horizon,
        }),
        Sub::Serve {
            host,
            port,
            agent,
            tick_millis,
            agent_budget,
            static_dir,
        } => Command::Serve(ServeSpec {
            host,
            port,
            agent: parse_agent(&agent)?,
            tick_millis,
            agent_budget,
            static_dir,
        }),
    };
    Ok(RunSpec {
        seed: cli.seed,
        jobs: cli.jobs,
        out: cli.out,
        command,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = resolve(cli).and_then(|spec| commands::execute(&spec));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pwlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
