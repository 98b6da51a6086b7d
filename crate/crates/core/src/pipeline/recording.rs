//! Frame recordings: line-delimited JSON with a header line, one frame per
//! line and a closing `end` line. A recording without the `end` line (or
//! with a `partial` line) was cut short.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::control::FrameRecord;
use super::PipelineError;

pub const RECORDING_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "recording")]
pub struct RecordingHeader {
    pub version: u32,
    pub config_hash: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Marker {
    End { frames: usize },
    Partial { frames_written: usize, error: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub header: RecordingHeader,
    pub frames: Vec<FrameRecord>,
    /// False when the writer failed or was interrupted.
    pub complete: bool,
}

/// Streaming recording writer.
pub struct FrameRecorder {
    out: BufWriter<File>,
    path: PathBuf,
    frames: usize,
}

impl FrameRecorder {
    pub fn create(path: impl AsRef<Path>, config_hash: &str) -> Result<Self, PipelineError> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path)?;
        let mut recorder = Self {
            out: BufWriter::new(file),
            path,
            frames: 0,
        };
        let header = RecordingHeader {
            version: RECORDING_VERSION,
            config_hash: config_hash.to_string(),
        };
        let line = serde_json::to_string(&header).expect("header serializes");
        recorder.write_line(&line)?;
        Ok(recorder)
    }

    fn write_line(&mut self, line: &str) -> Result<(), PipelineError> {
        let result = writeln!(self.out, "{line}");
        result.map_err(|e| self.fail(e))
    }

    fn fail(&mut self, e: std::io::Error) -> PipelineError {
        let marker = Marker::Partial {
            frames_written: self.frames,
            error: e.to_string(),
        };
        // Best effort; the disk may be the thing that failed.
        let _ = writeln!(self.out, "{}", serde_json::to_string(&marker).expect("marker serializes"));
        let _ = self.out.flush();
        PipelineError::Recording {
            path: self.path.display().to_string(),
            frames_written: self.frames,
            message: e.to_string(),
        }
    }

    pub fn write(&mut self, frame: &FrameRecord) -> Result<(), PipelineError> {
        let line = serde_json::to_string(frame).expect("frame serializes");
        self.write_line(&line)?;
        self.frames += 1;
        Ok(())
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn finish(mut self) -> Result<usize, PipelineError> {
        let line = serde_json::to_string(&Marker::End { frames: self.frames }).expect("marker serializes");
        self.write_line(&line)?;
        let flushed = self.out.flush();
        flushed.map_err(|e| self.fail(e))?;
        Ok(self.frames)
    }
}

pub fn record_frames<'a>(
    frames: impl IntoIterator<Item = &'a FrameRecord>,
    path: impl AsRef<Path>,
    config_hash: &str,
) -> Result<usize, PipelineError> {
    let mut recorder = FrameRecorder::create(path, config_hash)?;
    for frame in frames {
        recorder.write(frame)?;
    }
    recorder.finish()
}

pub fn read_recording(path: impl AsRef<Path>) -> Result<Recording, PipelineError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();
    let bad = |line: usize, msg: String| PipelineError::Validation(format!("recording line {}: {msg}", line + 1));
    let (n, first) = lines
        .next()
        .ok_or_else(|| PipelineError::Validation("empty recording".into()))?;
    let header: RecordingHeader = serde_json::from_str(&first?).map_err(|e| bad(n, e.to_string()))?;
    if header.version != RECORDING_VERSION {
        return Err(bad(n, format!("unsupported version {}", header.version)));
    }
    let mut frames = Vec::new();
    let mut complete = false;
    for (n, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if complete {
            return Err(bad(n, "content after end marker".into()));
        }
        if let Ok(marker) = serde_json::from_str::<Marker>(&line) {
            match marker {
                Marker::End { frames: count } if count == frames.len() => complete = true,
                Marker::End { frames: count } => {
                    return Err(bad(n, format!("end marker counts {count} frames, found {}", frames.len())))
                }
                Marker::Partial { .. } => break,
            }
            continue;
        }
        frames.push(serde_json::from_str(&line).map_err(|e| bad(n, e.to_string()))?);
    }
    Ok(Recording {
        header,
        frames,
        complete,
    })
}
