mod inspect;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use neuroswarm::hmm::ThoughtSchedule;
use neuroswarm::pipeline::{
    run_batch, run_training_session, server, FailureKind, FrameRecorder, LiveOptions, LiveSession, MissionPlan,
    PipelineError, SessionConfig, SessionMode,
};
use neuroswarm::signal_io::{synthesize, write_trace, SynthSpec};
use neuroswarm::swarm::{Formation, GainPreset};
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "neuroswarm", version, about = "Steer a simulated robot swarm from decoded EEG and EOG signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a thought model on a recorded training trace.
    Train(TrainArgs),
    /// Run a control session, as fast as possible or paced on the wall clock.
    Run(RunArgs),
    /// Generate a synthetic signal trace.
    Synth(SynthArgs),
    /// Print a table from a frame recording.
    Inspect(inspect::InspectArgs),
    /// Run a paced control session behind a WebSocket server.
    Serve(ServeArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Training trace with at least 60 s of metric samples.
    #[arg(long)]
    trace: PathBuf,
    /// Thought schedule (TOML `[[entries]]` with start_ms, end_ms, thought).
    /// Defaults to 15 s each of Disperse, Aggregate, Disperse, Aggregate.
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Where to write the trained model.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Lowest accepted state/thought agreement.
    #[arg(long)]
    agreement_floor: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    /// a=4, b=80 to aggregate and a=2, b=80 to disperse.
    Hardware,
    /// a=1, b=h*M/2.625.
    Formula,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormationArg {
    Grid,
    Spiral,
}

#[derive(Args)]
struct SessionArgs {
    /// Session config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Signal trace to replay.
    #[arg(long, conflicts_with = "synth_spec")]
    trace: Option<PathBuf>,
    /// Synthesis spec (TOML) generating the session's signals from --seed.
    #[arg(long)]
    synth_spec: Option<PathBuf>,
    /// Trained model file.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    robots: Option<usize>,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    #[arg(long, value_enum)]
    formation: Option<FormationArg>,
    /// Initial formation spacing, m.
    #[arg(long)]
    spacing: Option<f64>,
    /// Drive speed set by an eye command, m/s.
    #[arg(long)]
    drive_speed: Option<f64>,
    /// Session length in trace seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Control loop rate, Hz.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    session: SessionArgs,
    /// Frame recording to write.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Trace seconds per wall second; 0 runs as fast as possible.
    #[arg(long, default_value_t = 0.0)]
    speed: f64,
    /// Also broadcast frames over WebSocket on this port (needs --speed > 0).
    #[arg(long)]
    serve_port: Option<u16>,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    session: SessionArgs,
    #[arg(long, default_value_t = 8765)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    /// Trace seconds per wall second.
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthPreset {
    /// 60 s Disperse/Aggregate training recording.
    Training,
    /// Four-leg clockwise rectangle, aggregating on the third leg.
    RectangleMission,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["spec", "preset"])))]
struct SynthArgs {
    /// Synthesis spec (TOML).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Built-in spec.
    #[arg(long, value_enum)]
    preset: Option<SynthPreset>,
    /// Leg length of the rectangle mission, s.
    #[arg(long, default_value_t = 180.0)]
    leg_s: f64,
    /// Trace file to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the spec used.
    #[arg(long)]
    spec_out: Option<PathBuf>,
    /// Also write the training schedule (training preset only).
    #[arg(long)]
    schedule_out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Pipeline(PipelineError),
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        CliError::Pipeline(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Pipeline(e.into())
    }
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Pipeline(e) => match e.kind() {
                FailureKind::Validation => "validation",
                FailureKind::Numerical => "numerical",
                FailureKind::Io => "io",
            },
        }
    }

    fn exit_code(&self) -> u8 {
        match self.kind() {
            "numerical" => 3,
            "io" => 4,
            _ => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Pipeline(e) => e.to_string(),
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Usage(format!("{} does not exist", path.display()))
        } else {
            e.into()
        }
    })
}

fn file_sha256(path: &Path) -> Result<String, CliError> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

fn train(args: TrainArgs) -> Result<(), CliError> {
    if !args.trace.is_file() {
        return Err(CliError::Usage(format!("trace {} does not exist", args.trace.display())));
    }
    let schedule = match &args.schedule {
        Some(path) => toml::from_str::<ThoughtSchedule>(&read_text(path)?)
            .map_err(|e| CliError::Usage(format!("schedule {}: {e}", path.display())))?,
        None => MissionPlan::training_schedule(),
    };
    let mut config = SessionConfig {
        mode: SessionMode::Train,
        seed: args.seed,
        trace: Some(args.trace),
        model: Some(args.out.clone()),
        schedule: Some(schedule.clone()),
        ..SessionConfig::default()
    };
    if let Some(v) = args.max_iter {
        config.max_iter = v;
    }
    if let Some(v) = args.tol {
        config.tol = v;
    }
    if let Some(v) = args.agreement_floor {
        config.agreement_floor = v;
    }
    let outcome = run_training_session(&config, &schedule)?;
    for warning in &outcome.report.warnings {
        log::warn!("{warning}");
    }
    let thoughts: Vec<&str> = outcome.assignment.thoughts.iter().map(|t| t.as_str()).collect();
    println!(
        "model={} sha256={} iterations={} converged={} agreement={:.4} assignment={} log_likelihood={:.6}",
        args.out.display(),
        file_sha256(&args.out)?,
        outcome.report.iterations,
        outcome.report.converged,
        outcome.assignment.agreement,
        thoughts.join(","),
        outcome.report.log_likelihoods.last().copied().unwrap_or(f64::NAN),
    );
    Ok(())
}

fn session_config(args: &SessionArgs) -> Result<SessionConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            if !path.is_file() {
                return Err(CliError::Usage(format!("config {} does not exist", path.display())));
            }
            SessionConfig::load(path)?
        }
        None => SessionConfig::default(),
    };
    if let Some(trace) = &args.trace {
        config.trace = Some(trace.clone());
        config.synth = None;
    }
    if let Some(path) = &args.synth_spec {
        let spec = SynthSpec::from_toml(&read_text(path)?).map_err(PipelineError::from)?;
        config.synth = Some(spec);
        config.trace = None;
    }
    if let Some(model) = &args.model {
        config.model = Some(model.clone());
    }
    if let Some(v) = args.robots {
        config.robots = v;
    }
    if let Some(preset) = args.preset {
        config.gains = match preset {
            PresetArg::Hardware => GainPreset::hardware(),
            PresetArg::Formula => GainPreset::formula(),
        };
    }
    let (center, spacing) = match config.formation {
        Formation::Grid { center, spacing } | Formation::Spiral { center, spacing } => (center, spacing),
    };
    let spacing = args.spacing.unwrap_or(spacing);
    config.formation = match args.formation {
        Some(FormationArg::Spiral) => Formation::Spiral { center, spacing },
        Some(FormationArg::Grid) => Formation::Grid { center, spacing },
        None => match config.formation {
            Formation::Grid { .. } => Formation::Grid { center, spacing },
            Formation::Spiral { .. } => Formation::Spiral { center, spacing },
        },
    };
    if let Some(v) = args.drive_speed {
        config.drive_speed = v;
    }
    if let Some(v) = args.duration {
        config.duration_s = Some(v);
    }
    if let Some(v) = args.rate {
        config.loop_rate_hz = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if config.mode == SessionMode::Train {
        config.mode = SessionMode::Replay;
    }
    if config.model.is_none() {
        return Err(CliError::Usage("a control session needs --model".into()));
    }
    config.validate()?;
    Ok(config)
}

fn run_live(
    config: &SessionConfig,
    speed: f64,
    record: Option<&Path>,
    serve_at: Option<String>,
) -> Result<(), CliError> {
    let session = LiveSession::start(
        config,
        LiveOptions {
            replay_speed: speed,
            duration_s: None,
        },
    )?;
    let frames = session.subscribe();
    let server = match serve_at {
        Some(addr) => {
            let server = server::serve(addr.as_str(), &session)?;
            eprintln!("serving ws://{}", server.local_addr());
            Some(server)
        }
        None => None,
    };
    let mut recorder = record.map(|p| FrameRecorder::create(p, &config.hash())).transpose()?;
    for frame in frames {
        if let Some(r) = recorder.as_mut() {
            r.write(&frame)?;
        }
    }
    if let Some(server) = server {
        server.shutdown();
    }
    let summary = session.join()?;
    if let Some(r) = recorder {
        r.finish()?;
    }
    let last = summary.last_frame.as_ref();
    println!(
        "frames={} underruns={} wall_s={:.3} centroid={} nn_dist={}",
        summary.frames,
        summary.underruns,
        summary.wall_s,
        last.map_or("-".into(), |f| format!("{:.6},{:.6}", f.centroid[0], f.centroid[1])),
        last.map_or("-".into(), |f| format!("{:.6}", f.nn_dist)),
    );
    if let Some(path) = record {
        println!("recording={} sha256={}", path.display(), file_sha256(path)?);
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let config = session_config(&args.session)?;
    if args.serve_port.is_some() && args.speed <= 0.0 {
        return Err(CliError::Usage("--serve-port needs --speed > 0".into()));
    }
    if !(args.speed >= 0.0 && args.speed.is_finite()) {
        return Err(CliError::Usage(format!("--speed must be >= 0, got {}", args.speed)));
    }
    if args.speed > 0.0 {
        let serve_at = args.serve_port.map(|p| format!("127.0.0.1:{p}"));
        return run_live(&config, args.speed, args.record.as_deref(), serve_at);
    }
    let mut recorder = args
        .record
        .as_deref()
        .map(|p| FrameRecorder::create(p, &config.hash()))
        .transpose()?;
    let mut last = None;
    let frames = run_batch(&config, |frame| {
        if let Some(r) = recorder.as_mut() {
            r.write(frame)?;
        }
        last = Some((frame.centroid, frame.nn_dist));
        Ok(())
    })?;
    if let Some(r) = recorder {
        r.finish()?;
    }
    println!(
        "frames={frames} centroid={} nn_dist={}",
        last.map_or("-".into(), |(c, _)| format!("{:.6},{:.6}", c[0], c[1])),
        last.map_or("-".into(), |(_, d)| format!("{d:.6}")),
    );
    if let Some(path) = &args.record {
        println!("recording={} sha256={}", path.display(), file_sha256(path)?);
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let config = session_config(&args.session)?;
    if !(args.speed > 0.0 && args.speed.is_finite()) {
        return Err(CliError::Usage(format!("--speed must be > 0, got {}", args.speed)));
    }
    let addr = format!("{}:{}", args.bind, args.port);
    run_live(&config, args.speed, args.record.as_deref(), Some(addr))
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    let plan = MissionPlan::rectangle(args.leg_s);
    let spec = match (&args.spec, args.preset) {
        (Some(path), _) => SynthSpec::from_toml(&read_text(path)?).map_err(PipelineError::from)?,
        (None, Some(SynthPreset::Training)) => plan.training_spec(&MissionPlan::training_schedule()),
        (None, Some(SynthPreset::RectangleMission)) => {
            if !(args.leg_s > 0.0 && args.leg_s.is_finite()) {
                return Err(CliError::Usage(format!("--leg-s must be positive, got {}", args.leg_s)));
            }
            plan.synth_spec()
        }
        (None, None) => unreachable!("clap requires --spec or --preset"),
    };
    let trace = synthesize(&spec, args.seed).map_err(PipelineError::from)?;
    write_trace(&args.out, &trace).map_err(PipelineError::from)?;
    if let Some(path) = &args.spec_out {
        std::fs::write(path, spec.to_toml())?;
    }
    if let Some(path) = &args.schedule_out {
        if !matches!(args.preset, Some(SynthPreset::Training)) {
            return Err(CliError::Usage("--schedule-out needs --preset training".into()));
        }
        let text = toml::to_string(&MissionPlan::training_schedule()).expect("schedule serializes");
        std::fs::write(path, text)?;
    }
    println!(
        "trace={} records={} eog_frames={} metric_samples={} sha256={}",
        args.out.display(),
        trace.records.len(),
        trace.eog_frames().count(),
        trace.metric_samples().count(),
        file_sha256(&args.out)?,
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => train(args),
        Command::Run(args) => run(args),
        Command::Synth(args) => synth(args),
        Command::Inspect(args) => inspect::inspect(args),
        Command::Serve(args) => serve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.message().replace('\n', " ");
            eprintln!("error kind={} code={}: {message}", e.kind(), e.exit_code());
            ExitCode::from(e.exit_code())
        }
    }
}
