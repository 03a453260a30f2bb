//! Replayable frame sources: a directory of `.ppm` files or a raw stream.
//!
//! Raw stream layout: the 16-byte header `FIZIRAW1` + u32 width + u32 height
//! (little-endian), followed by frames of `width * height * 3` bytes each.

use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use fizi_core::imaging::pnm::{self, PnmError};
use fizi_core::FrameRgb;
use thiserror::Error;

pub const RAW_MAGIC: &[u8; 8] = b"FIZIRAW1";
pub const RAW_HEADER_LEN: usize = 16;
pub const DEFAULT_FPS: u32 = 30;

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("bad frame {path}: {source}")]
    Frame { path: PathBuf, source: PnmError },

    #[error("raw stream: {0}")]
    Raw(String),

    #[error("frame {index} is {found:?}, stream is {expected:?}")]
    DimensionChange {
        index: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid source spec {0:?}: expected dir:PATH or raw:PATH")]
    Spec(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceKind {
    Dir,
    RawStream,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceSpec {
    pub kind: SourceKind,
    /// For raw streams, `-` reads standard input.
    pub path: PathBuf,
    pub fps: u32,
}

impl FromStr for SourceSpec {
    type Err = SourceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, path) = if let Some(p) = s.strip_prefix("dir:") {
            (SourceKind::Dir, p)
        } else if let Some(p) = s.strip_prefix("raw:") {
            (SourceKind::RawStream, p)
        } else {
            return Err(SourceError::Spec(s.to_string()));
        };
        if path.is_empty() {
            return Err(SourceError::Spec(s.to_string()));
        }
        Ok(Self {
            kind,
            path: PathBuf::from(path),
            fps: DEFAULT_FPS,
        })
    }
}

impl SourceSpec {
    pub fn open(&self) -> Result<Box<dyn FrameSource>, SourceError> {
        Ok(match self.kind {
            SourceKind::Dir => Box::new(DirSource::open(&self.path)?),
            SourceKind::RawStream => Box::new(RawStreamSource::open(&self.path)?),
        })
    }

    /// Timestamp of frame `index` in milliseconds.
    pub fn timestamp_ms(&self, index: u64) -> u64 {
        index * 1000 / u64::from(self.fps.max(1))
    }
}

pub trait FrameSource: Send {
    /// `Ok(None)` marks a clean end of stream.
    fn next_frame(&mut self) -> Result<Option<FrameRgb>, SourceError>;
}

impl<S: FrameSource + ?Sized> FrameSource for Box<S> {
    fn next_frame(&mut self) -> Result<Option<FrameRgb>, SourceError> {
        (**self).next_frame()
    }
}

/// `.ppm` files of a directory in lexicographic filename order.
pub struct DirSource {
    files: std::vec::IntoIter<PathBuf>,
    dims: Option<(usize, usize)>,
    index: usize,
}

impl DirSource {
    pub fn open(dir: &Path) -> Result<Self, SourceError> {
        let io_err = |source| SourceError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut files = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(io_err)? {
            let path = entry.map_err(io_err)?.path();
            let is_ppm = path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("ppm"));
            if is_ppm && path.is_file() {
                files.push(path);
            }
        }
        files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
        Ok(Self {
            files: files.into_iter(),
            dims: None,
            index: 0,
        })
    }

    pub fn remaining(&self) -> usize {
        self.files.len()
    }
}

impl FrameSource for DirSource {
    fn next_frame(&mut self) -> Result<Option<FrameRgb>, SourceError> {
        let Some(path) = self.files.next() else {
            return Ok(None);
        };
        let bytes = std::fs::read(&path).map_err(|source| SourceError::Io {
            path: path.clone(),
            source,
        })?;
        let frame = pnm::decode_ppm(&bytes).map_err(|source| SourceError::Frame {
            path: path.clone(),
            source,
        })?;
        check_dims(&mut self.dims, &frame, self.index)?;
        self.index += 1;
        Ok(Some(frame))
    }
}

fn check_dims(
    dims: &mut Option<(usize, usize)>,
    frame: &FrameRgb,
    index: usize,
) -> Result<(), SourceError> {
    match *dims {
        None => *dims = Some(frame.dims()),
        Some(expected) if expected != frame.dims() => {
            return Err(SourceError::DimensionChange {
                index,
                expected,
                found: frame.dims(),
            })
        }
        Some(_) => {}
    }
    Ok(())
}

pub struct RawStreamSource {
    reader: Box<dyn Read + Send>,
    width: usize,
    height: usize,
}

impl RawStreamSource {
    pub fn open(path: &Path) -> Result<Self, SourceError> {
        let reader: Box<dyn Read + Send> = if path == Path::new("-") {
            Box::new(BufReader::new(io::stdin()))
        } else {
            let file = File::open(path).map_err(|source| SourceError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            Box::new(BufReader::new(file))
        };
        Self::from_reader(reader)
    }

    pub fn from_reader(mut reader: Box<dyn Read + Send>) -> Result<Self, SourceError> {
        let mut header = [0u8; RAW_HEADER_LEN];
        reader
            .read_exact(&mut header)
            .map_err(|e| SourceError::Raw(format!("cannot read header: {e}")))?;
        let (width, height) = parse_raw_header(&header)?;
        Ok(Self {
            reader,
            width,
            height,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

pub fn parse_raw_header(header: &[u8]) -> Result<(usize, usize), SourceError> {
    if header.len() < RAW_HEADER_LEN || &header[..8] != RAW_MAGIC {
        return Err(SourceError::Raw("bad magic, expected FIZIRAW1".into()));
    }
    let width = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    if width == 0 || height == 0 {
        return Err(SourceError::Raw(format!("zero dimensions {width}x{height}")));
    }
    Ok((width, height))
}

pub fn raw_header(width: usize, height: usize) -> [u8; RAW_HEADER_LEN] {
    let mut h = [0u8; RAW_HEADER_LEN];
    h[..8].copy_from_slice(RAW_MAGIC);
    h[8..12].copy_from_slice(&(width as u32).to_le_bytes());
    h[12..16].copy_from_slice(&(height as u32).to_le_bytes());
    h
}

/// Header plus one frame, as carried in a single message.
pub fn encode_raw_frame(frame: &FrameRgb) -> Vec<u8> {
    let mut out = Vec::with_capacity(RAW_HEADER_LEN + frame.data().len());
    out.extend_from_slice(&raw_header(frame.width(), frame.height()));
    out.extend_from_slice(frame.data());
    out
}

/// Writes a complete raw stream.
pub fn write_raw_stream<'a>(
    mut w: impl Write,
    frames: impl IntoIterator<Item = &'a FrameRgb>,
) -> io::Result<()> {
    let mut header_written = false;
    for f in frames {
        if !header_written {
            w.write_all(&raw_header(f.width(), f.height()))?;
            header_written = true;
        }
        w.write_all(f.data())?;
    }
    w.flush()
}

impl FrameSource for RawStreamSource {
    fn next_frame(&mut self) -> Result<Option<FrameRgb>, SourceError> {
        let len = self.width * self.height * 3;
        let mut buf = vec![0u8; len];
        let mut filled = 0;
        while filled < len {
            match self.reader.read(&mut buf[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(SourceError::Raw(format!("read failed: {e}"))),
            }
        }
        if filled == 0 {
            return Ok(None);
        }
        if filled < len {
            return Err(SourceError::Raw(format!(
                "truncated frame: expected {len} bytes, got {filled}"
            )));
        }
        Ok(Some(
            FrameRgb::new(self.width, self.height, buf).expect("length checked"),
        ))
    }
}

/// In-memory source, for embedding and tests.
pub struct VecSource {
    frames: std::vec::IntoIter<FrameRgb>,
}

impl VecSource {
    pub fn new(frames: Vec<FrameRgb>) -> Self {
        Self {
            frames: frames.into_iter(),
        }
    }
}

impl FrameSource for VecSource {
    fn next_frame(&mut self) -> Result<Option<FrameRgb>, SourceError> {
        Ok(self.frames.next())
    }
}

/// Limits delivery to at most `fps` frames per second. A late frame pushes
/// the schedule back instead of letting later frames catch up in a burst.
pub struct Pacer {
    period: Duration,
    next: Option<Instant>,
}

impl Pacer {
    pub fn new(fps: u32) -> Self {
        Self {
            period: Duration::from_secs_f64(1.0 / f64::from(fps.max(1))),
            next: None,
        }
    }

    pub fn wait(&mut self) {
        let now = Instant::now();
        if let Some(due) = self.next {
            if due > now {
                std::thread::sleep(due - now);
            }
        }
        let start = Instant::now();
        self.next = Some(start + self.period);
    }
}

pub struct Paced<S> {
    inner: S,
    pacer: Pacer,
}

impl<S: FrameSource> Paced<S> {
    pub fn new(inner: S, fps: u32) -> Self {
        Self {
            inner,
            pacer: Pacer::new(fps),
        }
    }
}

impl<S: FrameSource> FrameSource for Paced<S> {
    fn next_frame(&mut self) -> Result<Option<FrameRgb>, SourceError> {
        self.pacer.wait();
        self.inner.next_frame()
    }
}
