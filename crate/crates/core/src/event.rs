//! Multichannel waveform events: on-disk formats, validation, and
//! channel normalization.
//!
//! Two interchangeable formats share one schema:
//!
//! - text: a `# kzm-event v1` magic line, `# key = value` header lines,
//!   then one row per time step with one column per channel;
//! - binary: magic `KZME`, version `u16`, N `u32`, T `u64`, dt `f64`,
//!   N angles, then N*T samples row-major by time, all little-endian.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::Error;
use crate::Result;

const CSV_MAGIC: &str = "# kzm-event v1";
const BIN_MAGIC: &[u8; 4] = b"KZME";
const BIN_VERSION: u16 = 1;

/// Supported on-disk event encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Csv,
    Binary,
}

impl EventFormat {
    /// Guess the format from a file extension (`.bin` -> binary).
    pub fn from_path(path: &Path) -> EventFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("kzme") => EventFormat::Binary,
            _ => EventFormat::Csv,
        }
    }
}

/// One multichannel waveform event recorded on a sensor ring.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub event_id: String,
    /// Seconds between consecutive samples.
    pub sample_interval: f64,
    /// N channels, each with T samples.
    pub channels: Vec<Vec<f64>>,
    /// Angular position of each channel on the ring, radians in [0, 2pi),
    /// strictly increasing.
    pub node_angles: Vec<f64>,
    pub metadata: BTreeMap<String, String>,
}

impl EventRecord {
    /// Build and validate a record. Angles default to a uniform ring when
    /// `angles` is `None`.
    pub fn new(
        event_id: impl Into<String>,
        sample_interval: f64,
        channels: Vec<Vec<f64>>,
        angles: Option<Vec<f64>>,
    ) -> Result<EventRecord> {
        let n = channels.len();
        let angles = angles.unwrap_or_else(|| uniform_ring(n));
        let rec = EventRecord {
            event_id: event_id.into(),
            sample_interval,
            channels,
            node_angles: angles,
            metadata: BTreeMap::new(),
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn sample_count(&self) -> usize {
        self.channels.first().map_or(0, |c| c.len())
    }

    /// Check the structural invariants of the record.
    pub fn validate(&self) -> Result<()> {
        let n = self.channel_count();
        if n < 3 {
            return Err(Error::InvalidEvent(format!("N >= 3 violated (got {n})")));
        }
        let t = self.sample_count();
        if t < 2 {
            return Err(Error::InvalidEvent(format!(
                "need at least 2 samples per channel, got {t}"
            )));
        }
        for (i, ch) in self.channels.iter().enumerate() {
            if ch.len() != t {
                return Err(Error::NonRectangular {
                    row: i,
                    got: ch.len(),
                    expected: t,
                });
            }
            for (j, v) in ch.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        channel: i,
                        index: j,
                    });
                }
            }
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return Err(Error::InvalidEvent(format!(
                "sample_interval must be positive and finite, got {}",
                self.sample_interval
            )));
        }
        if self.node_angles.len() != n {
            return Err(Error::InvalidEvent(format!(
                "{} angles for {} channels",
                self.node_angles.len(),
                n
            )));
        }
        for (i, &a) in self.node_angles.iter().enumerate() {
            if !a.is_finite() || !(0.0..std::f64::consts::TAU).contains(&a) {
                return Err(Error::InvalidEvent(format!(
                    "angle {i} = {a} outside [0, 2pi)"
                )));
            }
            if i > 0 && a <= self.node_angles[i - 1] {
                return Err(Error::InvalidEvent(format!(
                    "angles not strictly increasing at index {i} ({} then {a})",
                    self.node_angles[i - 1]
                )));
            }
        }
        Ok(())
    }

    /// Z-score every channel over its full length (population sigma).
    ///
    /// Channels with no variance become all-zeros and are listed in the
    /// `constant_channels` metadata key rather than treated as errors.
    pub fn normalize_channels(&self) -> EventRecord {
        let mut out = self.clone();
        let mut constant: Vec<usize> = Vec::new();
        for (i, ch) in out.channels.iter_mut().enumerate() {
            let mu = crate::stats::mean(ch);
            let sigma = crate::stats::variance(ch).sqrt();
            // relative floor so roundoff around a large constant level
            // does not get amplified into noise
            if sigma <= 1e-12 * (1.0 + mu.abs()) {
                ch.iter_mut().for_each(|v| *v = 0.0);
                constant.push(i);
            } else {
                ch.iter_mut().for_each(|v| *v = (*v - mu) / sigma);
            }
        }
        if !constant.is_empty() {
            let list = constant
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",");
            out.metadata.insert("constant_channels".into(), list);
        }
        out
    }
}

/// Evenly spaced ring angles, the default sensor layout.
pub fn uniform_ring(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| std::f64::consts::TAU * i as f64 / n as f64)
        .collect()
}

/// Load an event file in the given format and validate it.
pub fn load_event(path: &Path, format: EventFormat) -> Result<EventRecord> {
    match format {
        EventFormat::Csv => load_csv(path),
        EventFormat::Binary => load_binary(path),
    }
}

/// Write an event file in the given format.
pub fn save_event(event: &EventRecord, path: &Path, format: EventFormat) -> Result<()> {
    match format {
        EventFormat::Csv => save_csv(event, path),
        EventFormat::Binary => save_binary(event, path),
    }
}

fn load_csv(path: &Path) -> Result<EventRecord> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut event_id: Option<String> = None;
    let mut sample_interval: Option<f64> = None;
    let mut angles: Option<Vec<f64>> = None;
    let mut metadata = BTreeMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut saw_magic = false;
    let mut width: Option<usize> = None;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim();
            if !saw_magic {
                if format!("# {rest}") == CSV_MAGIC {
                    saw_magic = true;
                    continue;
                }
                return Err(Error::MalformedHeader {
                    path: path.into(),
                    reason: format!("first line must be `{CSV_MAGIC}`"),
                });
            }
            let (key, value) = rest.split_once('=').ok_or_else(|| Error::MalformedHeader {
                path: path.into(),
                reason: format!("line {}: header line without `=`", lineno + 1),
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "event_id" => event_id = Some(value.to_string()),
                "sample_interval" => {
                    sample_interval =
                        Some(value.parse::<f64>().map_err(|_| Error::MalformedHeader {
                            path: path.into(),
                            reason: format!("line {}: bad sample_interval `{value}`", lineno + 1),
                        })?)
                }
                "angles" => {
                    let parsed: std::result::Result<Vec<f64>, _> =
                        value.split(',').map(|s| s.trim().parse::<f64>()).collect();
                    angles = Some(parsed.map_err(|_| Error::MalformedHeader {
                        path: path.into(),
                        reason: format!("line {}: bad angle list", lineno + 1),
                    })?);
                }
                k if k.starts_with("meta.") => {
                    metadata.insert(k["meta.".len()..].to_string(), value.to_string());
                }
                other => {
                    return Err(Error::MalformedHeader {
                        path: path.into(),
                        reason: format!("line {}: unknown header key `{other}`", lineno + 1),
                    })
                }
            }
            continue;
        }
        if !saw_magic {
            return Err(Error::MalformedHeader {
                path: path.into(),
                reason: format!("first line must be `{CSV_MAGIC}`"),
            });
        }
        let row: std::result::Result<Vec<f64>, _> = trimmed
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect();
        let row = row.map_err(|_| Error::MalformedHeader {
            path: path.into(),
            reason: format!("line {}: unparsable sample row", lineno + 1),
        })?;
        if let Some(w) = width {
            if row.len() != w {
                return Err(Error::NonRectangular {
                    row: rows.len(),
                    got: row.len(),
                    expected: w,
                });
            }
        } else {
            width = Some(row.len());
        }
        rows.push(row);
    }

    if !saw_magic {
        return Err(Error::MalformedHeader {
            path: path.into(),
            reason: format!("empty file; expected `{CSV_MAGIC}`"),
        });
    }
    let n = width.unwrap_or(0);
    let t = rows.len();
    // transpose time-major rows into per-channel series
    let mut channels = vec![Vec::with_capacity(t); n];
    for row in &rows {
        for (c, v) in row.iter().enumerate() {
            channels[c].push(*v);
        }
    }
    let id = event_id.unwrap_or_else(|| file_stem(path));
    let dt = sample_interval.ok_or_else(|| Error::MalformedHeader {
        path: path.into(),
        reason: "missing `# sample_interval = ...`".into(),
    })?;
    let mut rec = EventRecord::new(id, dt, channels, angles)?;
    rec.metadata = metadata;
    Ok(rec)
}

fn save_csv(event: &EventRecord, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = |s: String| -> Result<()> {
        w.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
    };
    emit(format!("{CSV_MAGIC}\n"))?;
    emit(format!("# event_id = {}\n", event.event_id))?;
    emit(format!("# sample_interval = {}\n", event.sample_interval))?;
    let angle_list = event
        .node_angles
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(",");
    emit(format!("# angles = {angle_list}\n"))?;
    for (k, v) in &event.metadata {
        emit(format!("# meta.{k} = {v}\n"))?;
    }
    let t = event.sample_count();
    let mut line = String::new();
    for ti in 0..t {
        line.clear();
        for (c, ch) in event.channels.iter().enumerate() {
            if c > 0 {
                line.push(',');
            }
            line.push_str(&ch[ti].to_string());
        }
        line.push('\n');
        emit(std::mem::take(&mut line))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn load_binary(path: &Path) -> Result<EventRecord> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != BIN_MAGIC {
        return Err(Error::MalformedHeader {
            path: path.into(),
            reason: "bad magic (expected KZME)".into(),
        });
    }
    let version = read_u16(&mut r, path)?;
    if version != BIN_VERSION {
        return Err(Error::MalformedHeader {
            path: path.into(),
            reason: format!("unsupported version {version}"),
        });
    }
    let n = read_u32(&mut r, path)? as usize;
    let t = read_u64(&mut r, path)? as usize;
    if n == 0 || t == 0 || n > 1 << 20 || t > 1 << 40 {
        return Err(Error::MalformedHeader {
            path: path.into(),
            reason: format!("implausible dimensions N={n}, T={t}"),
        });
    }
    let dt = read_f64(&mut r, path)?;
    let mut angles = Vec::with_capacity(n);
    for _ in 0..n {
        angles.push(read_f64(&mut r, path)?);
    }
    let mut channels = vec![Vec::with_capacity(t); n];
    for _ in 0..t {
        for ch in channels.iter_mut() {
            ch.push(read_f64(&mut r, path)?);
        }
    }
    EventRecord::new(file_stem(path), dt, channels, Some(angles))
}

fn save_binary(event: &EventRecord, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = |bytes: &[u8]| -> Result<()> {
        w.write_all(bytes).map_err(|e| Error::io(path, e))
    };
    emit(BIN_MAGIC)?;
    emit(&BIN_VERSION.to_le_bytes())?;
    emit(&(event.channel_count() as u32).to_le_bytes())?;
    emit(&(event.sample_count() as u64).to_le_bytes())?;
    emit(&event.sample_interval.to_le_bytes())?;
    for a in &event.node_angles {
        emit(&a.to_le_bytes())?;
    }
    for ti in 0..event.sample_count() {
        for ch in &event.channels {
            emit(&ch[ti].to_le_bytes())?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "event".into())
}

fn read_u16(r: &mut impl Read, path: &Path) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b).map_err(|e| Error::io(path, e))?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| Error::io(path, e))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read, path: &Path) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::io(path, e))?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read, path: &Path) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::io(path, e))?;
    Ok(f64::from_le_bytes(b))
}
