use std::fs::{self, File};
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::Path;

use pwlab::experiments::{
    derive_seed, profile_throughput, rollout_deltas, run_buffer_ablation, run_exhaustive_sweep,
    run_optimizer_comparison, write_rollout_deltas_csv, ExperimentError,
};
use pwlab::ntbea::{write_tuple_report, NtbeaParams};
use pwlab::{Action, GameParams, GameState, OpponentModel, OptimizerError, Player, SearchSpace};
use pwlab_play::{PlayError, ServerConfig};
use rand::rngs::SmallRng;
use rand::SeedableRng;
use thiserror::Error;
use tracing::info;

use crate::spec::{AblationRun, Command, ProfileSpec, RunSpec, ServeSpec, SweepSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Play(#[from] PlayError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

/// Stream id for the state that rollout deltas are sampled from.
const ROLLOUT_STREAM: u64 = 0x0dd5;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
}

fn mkdir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Checks everything that can be checked without running, so a bad
/// configuration fails before any file is written.
fn validate(spec: &RunSpec) -> Result<(), CliError> {
    let usage = |e: String| CliError::Usage(e);
    match &spec.command {
        Command::Profile(p) => {
            if p.ticks == 0 {
                return Err(usage("ticks must be at least 1".into()));
            }
            GameParams {
                num_planets: p.planets,
                ..GameParams::default()
            }
            .validate()
            .map_err(|e| usage(e.to_string()))
        }
        Command::Sweep(s) => {
            if s.reps == 0 {
                return Err(usage("reps must be at least 1".into()));
            }
            s.eval.validate().map_err(|e| usage(e.to_string()))
        }
        Command::Optimize(c) | Command::Compare(c) => {
            if c.optimizers.is_empty() {
                return Err(usage("no optimizers given".into()));
            }
            for o in &c.optimizers {
                if let pwlab::OptimizerSpec::Ntbea(p) = o {
                    p.validate().map_err(|e| usage(e.to_string()))?;
                }
            }
            c.validate().map_err(|e| usage(e.to_string()))
        }
        Command::Ablation(a) => {
            if a.ablation.games == 0 {
                return Err(usage("games must be at least 1".into()));
            }
            a.ablation
                .medium
                .validate()
                .map_err(|e| usage(e.to_string()))?;
            a.ablation
                .short
                .validate()
                .map_err(|e| usage(e.to_string()))?;
            a.ablation
                .game_params
                .validate()
                .map_err(|e| usage(e.to_string()))
        }
        Command::Serve(s) => {
            s.agent.validate().map_err(|e| usage(e.to_string()))?;
            if s.tick_millis == 0 {
                return Err(usage("tick-millis must be positive".into()));
            }
            Ok(())
        }
    }
}

pub fn execute(spec: &RunSpec) -> Result<(), CliError> {
    validate(spec)?;
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(env_filter())
        .try_init()
        .ok();
    rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build_global()
        .map_err(|e| CliError::Pool(e.to_string()))?;

    if !matches!(spec.command, Command::Serve(_)) {
        mkdir(&spec.out)?;
        let path = spec.out.join("run_spec.json");
        let text = serde_json::to_string_pretty(spec).expect("run spec serializes");
        fs::write(&path, text + "\n").map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    info!(command = spec.command.name(), seed = spec.seed, out = %spec.out.display(), "starting");
    match &spec.command {
        Command::Profile(p) => profile(p, spec),
        Command::Sweep(s) => sweep(s, spec),
        Command::Optimize(c) | Command::Compare(c) => compare(c, spec),
        Command::Ablation(a) => ablation(a, spec),
        Command::Serve(s) => serve(s, spec),
    }
}

fn env_filter() -> tracing_subscriber::EnvFilter {
    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into())
}

fn profile(p: &ProfileSpec, spec: &RunSpec) -> Result<(), CliError> {
    let r = profile_throughput(p.ticks, p.planets, spec.seed)?;
    println!("ticks={}", r.ticks);
    println!("seconds={:.4}", r.seconds);
    println!("ticks_per_second={:.0}", r.ticks_per_second);
    println!("copies_per_second={:.0}", r.copies_per_second);
    let path = spec.out.join("profile.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let row = [
        r.ticks.to_string(),
        r.seconds.to_string(),
        r.ticks_per_second.to_string(),
        r.copies.to_string(),
        r.copy_seconds.to_string(),
        r.copies_per_second.to_string(),
    ];
    let io = |e: csv::Error| CliError::Io {
        path: path.display().to_string(),
        source: e.into(),
    };
    w.write_record([
        "ticks",
        "seconds",
        "ticksPerSecond",
        "copies",
        "copySeconds",
        "copiesPerSecond",
    ])
    .map_err(io)?;
    w.write_record(row).map_err(io)?;
    w.flush().map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn sweep(s: &SweepSpec, spec: &RunSpec) -> Result<(), CliError> {
    let result = run_exhaustive_sweep(&s.eval, s.reps, spec.seed)?;
    result.write_sweep_csv(create(&spec.out.join("sweep.csv"))?)?;
    result.write_sorted_curve_csv(create(&spec.out.join("sorted_curve.csv"))?)?;
    result
        .log
        .write_csv(create(&spec.out.join("eval_log.csv"))?)?;
    let space = SearchSpace::agent();
    let defs = NtbeaParams::with_tuples(&[1, 2]).tuple_defs(space.dims())?;
    write_tuple_report(
        &result.tuple_model(defs).report(&space),
        create(&spec.out.join("tuple_report.csv"))?,
    )?;
    let best = result.sorted()[0];
    println!(
        "configs={} reps={} belowZero={}",
        result.rows.len(),
        result.reps,
        result.count_below_zero()
    );
    println!(
        "best={} mean={:.4} stderr={:.4}",
        best.params, best.mean, best.stderr
    );
    Ok(())
}

/// `NTBEA(1,2)` becomes `ntbea_1_2`.
fn file_label(label: &str) -> String {
    let mut out = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_end_matches('_').to_string()
}

fn compare(c: &pwlab::experiments::ComparisonSpec, spec: &RunSpec) -> Result<(), CliError> {
    let table = run_optimizer_comparison(c, spec.seed)?;
    table.write_comparison_csv(create(&spec.out.join("comparison.csv"))?)?;
    table.write_runs_csv(create(&spec.out.join("runs.csv"))?)?;
    let logs = spec.out.join("logs");
    mkdir(&logs)?;
    for o in &table.outcomes {
        let stem = format!("{}_run{:02}", file_label(&o.optimizer), o.run);
        o.log
            .write_csv(create(&logs.join(format!("{stem}.csv")))?)?;
        if let Some(rows) = &o.tuple_report {
            write_tuple_report(rows, create(&logs.join(format!("{stem}_tuples.csv")))?)?;
        }
    }
    for r in &table.rows {
        println!(
            "{:<12} runs={} mean={:.4} stderr={:.4}",
            r.optimizer, r.runs, r.mean, r.stderr
        );
    }
    Ok(())
}

/// A mid-game state reached by uniformly random play from a seeded map.
fn mid_game_state(params: &GameParams, seed: u64) -> Result<GameState, CliError> {
    let mut state = GameState::generate_mirrored(params, derive_seed(seed, &[ROLLOUT_STREAM, 0]))
        .map_err(ExperimentError::from)?;
    let mut rng = SmallRng::seed_from_u64(derive_seed(seed, &[ROLLOUT_STREAM, 1]));
    while state.tick() < params.max_ticks / 2 {
        state
            .next_state(Action::random(&mut rng), Action::random(&mut rng))
            .map_err(ExperimentError::from)?;
    }
    Ok(state)
}

fn ablation(a: &AblationRun, spec: &RunSpec) -> Result<(), CliError> {
    let result = run_buffer_ablation(&a.ablation, spec.seed)?;
    let pad = a.ablation.game_params.max_ticks;
    let path = spec.out.join("ablation.csv");
    let io = |e: csv::Error| CliError::Io {
        path: path.display().to_string(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record([
        "variant",
        "games",
        "mediumWins",
        "shortWins",
        "ties",
        "mediumWinRate",
    ])
    .map_err(io)?;
    for v in &result.variants {
        let games = v.results.len();
        w.write_record([
            v.label().to_string(),
            games.to_string(),
            v.medium_wins.to_string(),
            v.short_wins.to_string(),
            v.ties.to_string(),
            (v.medium_wins as f64 / games as f64).to_string(),
        ])
        .map_err(io)?;
        v.write_traces_csv(
            create(&spec.out.join(format!("trace_{}.csv", v.label())))?,
            pad,
        )?;
        let dir = spec.out.join(v.label());
        mkdir(&dir)?;
        for (g, r) in v.results.iter().enumerate() {
            r.write_trace_csv(create(&dir.join(format!("trace_{g}.csv")))?, pad)
                .map_err(ExperimentError::from)?;
        }
        let params = GameParams {
            include_buffer_in_score: v.include_buffer,
            ..a.ablation.game_params.clone()
        };
        let state = mid_game_state(&params, spec.seed)?;
        let deltas = rollout_deltas(
            &state,
            Player::P1,
            a.rollouts,
            a.rollout_horizon,
            OpponentModel::UniformRandom,
            derive_seed(spec.seed, &[ROLLOUT_STREAM, 2]),
        );
        write_rollout_deltas_csv(
            &deltas,
            create(&spec.out.join(format!("rollout_deltas_{}.csv", v.label())))?,
        )?;
        println!(
            "{:<8} medium={} short={} ties={} ({} games)",
            v.label(),
            v.medium_wins,
            v.short_wins,
            v.ties,
            games
        );
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn serve(s: &ServeSpec, _spec: &RunSpec) -> Result<(), CliError> {
    let ip = s
        .host
        .parse()
        .map_err(|_| CliError::Usage(format!("bad host {:?}", s.host)))?;
    let addr = SocketAddr::new(ip, s.port);
    let config = ServerConfig {
        agent: s.agent,
        tick_millis: s.tick_millis,
        agent_budget: s.agent_budget,
        static_dir: s.static_dir.clone(),
        ..ServerConfig::default()
    };
    let rt = tokio::runtime::Runtime::new().map_err(|source| CliError::Io {
        path: "runtime".into(),
        source,
    })?;
    rt.block_on(async {
        let listener = pwlab_play::bind(addr).await?;
        let local = listener.local_addr().map_err(PlayError::from)?;
        println!("listening on http://{local}");
        info!(%local, agent = %s.agent, "serving");
        pwlab_play::serve(listener, config).await?;
        Ok(())
    })
}
