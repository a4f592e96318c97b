//! Frame buffers and readers for uncompressed planar YUV video.
//!
//! Two containers are supported: YUV4MPEG2 (`.y4m`) and headerless raw
//! planar files. Samples are always held as `u16`; 10-bit files store one
//! sample per little-endian 16-bit word, LSB aligned.

mod raw;
mod y4m;

use std::fmt;
use std::io::{self, Read};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use raw::{open_raw, RawReader};
pub use y4m::{open_y4m, parse_y4m_header, Y4mReader, Y4mWriter};

#[derive(Debug, thiserror::Error)]
pub enum VideoError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("format error: {0}")]
    Format(String),
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("truncated frame {frame}: expected {expected} bytes, {available} available")]
    Truncated {
        frame: u64,
        expected: usize,
        available: usize,
    },
    #[error("sample out of range in frame {frame}, plane {plane}, index {index}: {value} > {max}")]
    SampleRange {
        frame: u64,
        plane: PlaneId,
        index: usize,
        value: u16,
        max: u16,
    },
    #[error("invalid frame buffer: {0}")]
    InvalidFrame(String),
    #[error("missing data: {0}")]
    MissingData(String),
}

impl VideoError {
    /// True for errors caused by malformed file content, as opposed to I/O
    /// failures or caller-supplied geometry.
    pub fn is_format(&self) -> bool {
        matches!(
            self,
            VideoError::Format(_)
                | VideoError::Unsupported(_)
                | VideoError::InvalidHeader(_)
                | VideoError::Truncated { .. }
                | VideoError::SampleRange { .. }
        )
    }
}

pub type Result<T, E = VideoError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlaneId {
    Y,
    U,
    V,
}

impl PlaneId {
    pub const ALL: [PlaneId; 3] = [PlaneId::Y, PlaneId::U, PlaneId::V];

    pub fn index(self) -> usize {
        match self {
            PlaneId::Y => 0,
            PlaneId::U => 1,
            PlaneId::V => 2,
        }
    }
}

impl fmt::Display for PlaneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlaneId::Y => "Y",
            PlaneId::U => "U",
            PlaneId::V => "V",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chroma {
    C420,
    C444,
}

/// Frame rate as an exact fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rational {
    pub num: u64,
    pub den: u64,
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Option<Self> {
        (num > 0 && den > 0).then_some(Rational { num, den })
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.num, self.den)
    }
}

impl FromStr for Rational {
    type Err = String;

    /// Accepts `num:den`, `num/den` or a bare integer.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (num, den) = match s.split_once([':', '/']) {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let num: u64 = num
            .trim()
            .parse()
            .map_err(|_| format!("invalid frame rate `{s}`"))?;
        let den: u64 = den
            .trim()
            .parse()
            .map_err(|_| format!("invalid frame rate `{s}`"))?;
        Rational::new(num, den).ok_or_else(|| format!("frame rate `{s}` must be positive"))
    }
}

/// Geometry and sample format of a sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceInfo {
    pub width: u32,
    pub height: u32,
    pub fps: Rational,
    pub bit_depth: u8,
    pub chroma: Chroma,
    pub frame_count: Option<u64>,
}

impl SequenceInfo {
    pub fn new(
        width: u32,
        height: u32,
        fps: Rational,
        bit_depth: u8,
        chroma: Chroma,
        frame_count: Option<u64>,
    ) -> Result<Self> {
        let info = SequenceInfo {
            width,
            height,
            fps,
            bit_depth,
            chroma,
            frame_count,
        };
        info.validate()?;
        Ok(info)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(VideoError::InvalidHeader(format!(
                "dimensions must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        if self.fps.num == 0 || self.fps.den == 0 {
            return Err(VideoError::InvalidHeader(format!(
                "frame rate must be positive, got {}",
                self.fps
            )));
        }
        if self.bit_depth != 8 && self.bit_depth != 10 {
            return Err(VideoError::Unsupported(format!(
                "bit depth {} (only 8 and 10 are supported)",
                self.bit_depth
            )));
        }
        if self.chroma == Chroma::C420 && (self.width % 2 != 0 || self.height % 2 != 0) {
            return Err(VideoError::InvalidHeader(format!(
                "4:2:0 requires even dimensions, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn plane_dims(&self, plane: PlaneId) -> (usize, usize) {
        let (w, h) = (self.width as usize, self.height as usize);
        match (plane, self.chroma) {
            (PlaneId::Y, _) | (_, Chroma::C444) => (w, h),
            (_, Chroma::C420) => (w / 2, h / 2),
        }
    }

    pub fn plane_len(&self, plane: PlaneId) -> usize {
        let (w, h) = self.plane_dims(plane);
        w * h
    }

    pub fn bytes_per_sample(&self) -> usize {
        if self.bit_depth > 8 {
            2
        } else {
            1
        }
    }

    /// Size of one frame's sample payload in bytes, excluding any container
    /// framing.
    pub fn frame_bytes(&self) -> usize {
        PlaneId::ALL
            .iter()
            .map(|&p| self.plane_len(p))
            .sum::<usize>()
            * self.bytes_per_sample()
    }

    pub fn max_sample(&self) -> u16 {
        ((1u32 << self.bit_depth) - 1) as u16
    }

    /// Same picture format, ignoring frame count and frame rate.
    pub fn same_format(&self, other: &SequenceInfo) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.bit_depth == other.bit_depth
            && self.chroma == other.chroma
    }

    pub fn describe(&self) -> String {
        let chroma = match self.chroma {
            Chroma::C420 => "4:2:0",
            Chroma::C444 => "4:4:4",
        };
        format!(
            "{}x{} {} {}-bit",
            self.width, self.height, chroma, self.bit_depth
        )
    }
}

/// Content duration in seconds: `frame_count * fps_den / fps_num`.
pub fn sequence_duration(info: &SequenceInfo) -> Result<f64> {
    let frames = info
        .frame_count
        .ok_or_else(|| VideoError::MissingData("frame count is unknown".into()))?;
    Ok(frames as f64 * info.fps.den as f64 / info.fps.num as f64)
}

/// One decoded picture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameBuffer {
    info: SequenceInfo,
    planes: [Vec<u16>; 3],
    frame_index: u64,
}

impl FrameBuffer {
    pub fn new(info: SequenceInfo, planes: [Vec<u16>; 3], frame_index: u64) -> Result<Self> {
        info.validate()?;
        let max = info.max_sample();
        for plane in PlaneId::ALL {
            let data = &planes[plane.index()];
            if data.len() != info.plane_len(plane) {
                return Err(VideoError::InvalidFrame(format!(
                    "plane {plane} has {} samples, expected {}",
                    data.len(),
                    info.plane_len(plane)
                )));
            }
            if let Some((index, &value)) = data.iter().enumerate().find(|(_, &v)| v > max) {
                return Err(VideoError::SampleRange {
                    frame: frame_index,
                    plane,
                    index,
                    value,
                    max,
                });
            }
        }
        Ok(FrameBuffer {
            info,
            planes,
            frame_index,
        })
    }

    pub fn info(&self) -> &SequenceInfo {
        &self.info
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    pub fn plane(&self, plane: PlaneId) -> &[u16] {
        &self.planes[plane.index()]
    }

    pub fn plane_dims(&self, plane: PlaneId) -> (usize, usize) {
        self.info.plane_dims(plane)
    }

    pub fn into_planes(self) -> [Vec<u16>; 3] {
        self.planes
    }
}

/// A sequential producer of frames.
pub trait FrameSource {
    fn info(&self) -> &SequenceInfo;

    /// Returns `Ok(None)` at a clean end of stream.
    fn next_frame(&mut self) -> Result<Option<FrameBuffer>>;
}

impl<S: FrameSource + ?Sized> FrameSource for Box<S> {
    fn info(&self) -> &SequenceInfo {
        (**self).info()
    }

    fn next_frame(&mut self) -> Result<Option<FrameBuffer>> {
        (**self).next_frame()
    }
}

/// Frames already held in memory.
#[derive(Clone, Debug)]
pub struct MemorySource {
    info: SequenceInfo,
    frames: std::vec::IntoIter<FrameBuffer>,
}

impl MemorySource {
    pub fn new(info: SequenceInfo, frames: Vec<FrameBuffer>) -> Self {
        let info = SequenceInfo {
            frame_count: Some(frames.len() as u64),
            ..info
        };
        MemorySource {
            info,
            frames: frames.into_iter(),
        }
    }
}

impl FrameSource for MemorySource {
    fn info(&self) -> &SequenceInfo {
        &self.info
    }

    fn next_frame(&mut self) -> Result<Option<FrameBuffer>> {
        Ok(self.frames.next())
    }
}

/// Reads until `buf` is full or EOF, returning the number of bytes read.
fn read_full<R: Read + ?Sized>(reader: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Reads one frame payload. `Ok(None)` only when zero bytes were available
/// and `allow_eof` is set.
fn read_payload<R: Read + ?Sized>(
    reader: &mut R,
    info: &SequenceInfo,
    frame_index: u64,
    buf: &mut Vec<u8>,
    allow_eof: bool,
) -> Result<Option<FrameBuffer>> {
    let expected = info.frame_bytes();
    buf.resize(expected, 0);
    let available = read_full(reader, buf)?;
    if available == 0 && allow_eof {
        return Ok(None);
    }
    if available < expected {
        return Err(VideoError::Truncated {
            frame: frame_index,
            expected,
            available,
        });
    }
    let mut planes: [Vec<u16>; 3] = Default::default();
    let mut offset = 0;
    let max = info.max_sample();
    for plane in PlaneId::ALL {
        let len = info.plane_len(plane);
        let samples = &mut planes[plane.index()];
        if info.bytes_per_sample() == 1 {
            samples.extend(buf[offset..offset + len].iter().map(|&b| u16::from(b)));
            offset += len;
        } else {
            samples.reserve(len);
            for (index, pair) in buf[offset..offset + 2 * len].chunks_exact(2).enumerate() {
                let value = u16::from_le_bytes([pair[0], pair[1]]);
                if value > max {
                    return Err(VideoError::SampleRange {
                        frame: frame_index,
                        plane,
                        index,
                        value,
                        max,
                    });
                }
                samples.push(value);
            }
            offset += 2 * len;
        }
    }
    Ok(Some(FrameBuffer {
        info: *info,
        planes,
        frame_index,
    }))
}

fn encode_payload(frame: &FrameBuffer, out: &mut Vec<u8>) {
    let wide = frame.info.bytes_per_sample() == 2;
    for plane in PlaneId::ALL {
        let data = frame.plane(plane);
        if wide {
            out.extend(data.iter().flat_map(|v| v.to_le_bytes()));
        } else {
            out.extend(data.iter().map(|&v| v as u8));
        }
    }
}

/// Writes a frame as headerless planar samples.
pub fn write_raw_frame<W: io::Write>(writer: &mut W, frame: &FrameBuffer) -> io::Result<()> {
    let mut out = Vec::with_capacity(frame.info.frame_bytes());
    encode_payload(frame, &mut out);
    writer.write_all(&out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn info(w: u32, h: u32, depth: u8) -> SequenceInfo {
        SequenceInfo::new(w, h, Rational::new(50, 1).unwrap(), depth, Chroma::C420, None).unwrap()
    }

    #[test]
    fn duration_examples() {
        let mut i = info(16, 16, 8);
        i.frame_count = Some(500);
        assert_eq!(sequence_duration(&i).unwrap(), 10.0);

        i.fps = Rational::new(60, 1).unwrap();
        i.frame_count = Some(0);
        assert_eq!(sequence_duration(&i).unwrap(), 0.0);

        i.fps = Rational::new(30000, 1001).unwrap();
        i.frame_count = Some(300);
        assert!((sequence_duration(&i).unwrap() - 10.01).abs() < 1e-12);

        i.frame_count = None;
        assert!(matches!(
            sequence_duration(&i),
            Err(VideoError::MissingData(_))
        ));
    }

    #[test]
    fn frame_bytes_match_geometry() {
        assert_eq!(info(1920, 1080, 8).frame_bytes(), 3_110_400);
        assert_eq!(info(64, 64, 10).frame_bytes(), 12_288);
        let c444 =
            SequenceInfo::new(8, 8, Rational::new(1, 1).unwrap(), 8, Chroma::C444, None).unwrap();
        assert_eq!(c444.frame_bytes(), 192);
    }

    #[test]
    fn odd_420_dimensions_rejected() {
        let err = SequenceInfo::new(15, 16, Rational::new(1, 1).unwrap(), 8, Chroma::C420, None)
            .unwrap_err();
        assert!(matches!(err, VideoError::InvalidHeader(_)));
        assert!(
            SequenceInfo::new(15, 15, Rational::new(1, 1).unwrap(), 8, Chroma::C444, None).is_ok()
        );
    }

    #[test]
    fn frame_buffer_checks_range_and_lengths() {
        let i = info(2, 2, 10);
        let ok = FrameBuffer::new(i, [vec![1023; 4], vec![0], vec![0]], 0);
        assert!(ok.is_ok());
        let bad = FrameBuffer::new(i, [vec![1024; 4], vec![0], vec![0]], 0);
        assert!(matches!(bad, Err(VideoError::SampleRange { .. })));
        let short = FrameBuffer::new(i, [vec![0; 3], vec![0], vec![0]], 0);
        assert!(matches!(short, Err(VideoError::InvalidFrame(_))));
    }

    #[test]
    fn rational_parsing() {
        assert_eq!("50:1".parse::<Rational>().unwrap(), Rational { num: 50, den: 1 });
        assert_eq!(
            "30000/1001".parse::<Rational>().unwrap(),
            Rational {
                num: 30000,
                den: 1001
            }
        );
        assert_eq!("25".parse::<Rational>().unwrap(), Rational { num: 25, den: 1 });
        assert!("0:1".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
    }
}
