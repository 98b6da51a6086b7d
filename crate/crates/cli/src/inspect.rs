use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use neuroswarm::pipeline::{read_recording, FrameRecord, ParamSource};

use crate::CliError;

#[derive(Clone, Copy, ValueEnum)]
pub enum Table {
    /// t_ms, centroid x and y.
    Centroid,
    /// t_ms, mean nearest-neighbour distance and the active gains.
    NnDist,
    /// t_ms, decoded state, label, posterior and the parameter source.
    ThoughtTimeline,
}

#[derive(Args)]
pub struct InspectArgs {
    #[arg(long)]
    recording: PathBuf,
    #[arg(long, value_enum)]
    what: Table,
    /// Print every Nth frame.
    #[arg(long, default_value_t = 1)]
    every: usize,
}

fn header(table: Table) -> &'static str {
    match table {
        Table::Centroid => "# t_ms\tx\ty",
        Table::NnDist => "# t_ms\tnn_dist\ta\tb",
        Table::ThoughtTimeline => "# t_ms\tstate\tlabel\tposterior\tlow_confidence\tsource",
    }
}

fn row(table: Table, f: &FrameRecord) -> String {
    match table {
        Table::Centroid => format!("{}\t{:.6}\t{:.6}", f.t_ms, f.centroid[0], f.centroid[1]),
        Table::NnDist => format!("{}\t{:.6}\t{}\t{}", f.t_ms, f.nn_dist, f.theta.a, f.theta.b),
        Table::ThoughtTimeline => {
            let source = match f.theta.source {
                ParamSource::Decoded => "decoded",
                ParamSource::OperatorInjected => "operator-injected",
            };
            match &f.thought {
                Some(view) => format!(
                    "{}\t{}\t{}\t{:.4}\t{}\t{source}",
                    f.t_ms,
                    view.state,
                    view.label.map_or("-", |l| l.as_str()),
                    view.posterior.get(view.state).copied().unwrap_or(f64::NAN),
                    view.low_confidence,
                ),
                None => format!("{}\t-\t-\t-\t-\t{source}", f.t_ms),
            }
        }
    }
}

pub fn inspect(args: InspectArgs) -> Result<(), CliError> {
    if args.every == 0 {
        return Err(CliError::Usage("--every must be at least 1".into()));
    }
    if !args.recording.is_file() {
        return Err(CliError::Usage(format!("recording {} does not exist", args.recording.display())));
    }
    let recording = read_recording(&args.recording)?;
    if !recording.complete {
        log::warn!("recording {} is truncated", args.recording.display());
    }
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    writeln!(out, "{}", header(args.what))?;
    for frame in recording.frames.iter().step_by(args.every) {
        writeln!(out, "{}", row(args.what, frame))?;
    }
    out.flush()?;
    Ok(())
}
