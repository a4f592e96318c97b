//! YUV4MPEG2 container.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{
    encode_payload, read_payload, Chroma, FrameBuffer, FrameSource, Rational, Result,
    SequenceInfo, VideoError,
};

const MAGIC: &str = "YUV4MPEG2";
const MAX_HEADER_LEN: u64 = 4096;

/// Reads a single `0x0A`-terminated line, bounded by `limit` bytes.
/// Returns the line without its terminator and whether a terminator was seen.
fn read_line<R: BufRead>(reader: &mut R, limit: u64) -> Result<(Vec<u8>, bool)> {
    let mut line = Vec::new();
    reader.by_ref().take(limit).read_until(b'\n', &mut line)?;
    let terminated = line.last() == Some(&b'\n');
    if terminated {
        line.pop();
    }
    Ok((line, terminated))
}

fn parse_chroma(tag: &str) -> Result<(Chroma, u8)> {
    Ok(match tag {
        "420" | "420jpeg" | "420mpeg2" | "420paldv" => (Chroma::C420, 8),
        "420p10" => (Chroma::C420, 10),
        "444" => (Chroma::C444, 8),
        "444p10" => (Chroma::C444, 10),
        other => {
            return Err(VideoError::Unsupported(format!(
                "colorspace tag C{other}"
            )))
        }
    })
}

fn parse_dimension(tag: char, value: &str) -> Result<u32> {
    match value.parse::<u32>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(VideoError::InvalidHeader(format!(
            "{tag} must be a positive integer, got `{value}`"
        ))),
    }
}

/// Parses the stream header, consuming exactly the header line.
///
/// `W`, `H`, `F`, `C` are interpreted; `A`, `X` and unknown tags are ignored.
/// Only progressive content (`Ip`, or no `I` tag) is accepted.
pub fn parse_y4m_header<R: BufRead>(reader: &mut R) -> Result<SequenceInfo> {
    let (line, terminated) = read_line(reader, MAX_HEADER_LEN)?;
    if !line.starts_with(MAGIC.as_bytes()) {
        return Err(VideoError::Format(format!("missing {MAGIC} signature")));
    }
    if !terminated {
        return Err(VideoError::Format(
            "header line is not terminated by a newline".into(),
        ));
    }
    let line = std::str::from_utf8(&line)
        .map_err(|_| VideoError::Format("header is not valid ASCII".into()))?;
    let mut tokens = line.split(' ').filter(|t| !t.is_empty());
    if tokens.next() != Some(MAGIC) {
        return Err(VideoError::Format(format!("missing {MAGIC} signature")));
    }

    let mut width = None;
    let mut height = None;
    let mut fps = None;
    let mut chroma = (Chroma::C420, 8);
    for token in tokens {
        let mut chars = token.chars();
        let tag = chars.next().unwrap_or(' ');
        let value = chars.as_str();
        match tag {
            'W' => width = Some(parse_dimension('W', value)?),
            'H' => height = Some(parse_dimension('H', value)?),
            'F' => {
                let rate = value.split_once(':').and_then(|(n, d)| {
                    Rational::new(n.parse().ok()?, d.parse().ok()?)
                });
                fps = Some(rate.ok_or_else(|| {
                    VideoError::InvalidHeader(format!("F must be num:den > 0, got `{value}`"))
                })?);
            }
            'C' => chroma = parse_chroma(value)?,
            'I' => {
                if value != "p" {
                    return Err(VideoError::Unsupported(format!(
                        "interlacing mode I{value} (only progressive is supported)"
                    )));
                }
            }
            _ => {}
        }
    }

    let width = width.ok_or_else(|| VideoError::InvalidHeader("missing W tag".into()))?;
    let height = height.ok_or_else(|| VideoError::InvalidHeader("missing H tag".into()))?;
    let fps = fps.ok_or_else(|| VideoError::InvalidHeader("missing F tag".into()))?;
    SequenceInfo::new(width, height, fps, chroma.1, chroma.0, None)
}

pub struct Y4mReader<R> {
    reader: R,
    info: SequenceInfo,
    next_index: u64,
    buf: Vec<u8>,
}

impl<R: BufRead> Y4mReader<R> {
    pub fn new(mut reader: R) -> Result<Self> {
        let info = parse_y4m_header(&mut reader)?;
        Ok(Y4mReader {
            reader,
            info,
            next_index: 0,
            buf: Vec::new(),
        })
    }

    pub fn read_frame(&mut self) -> Result<Option<FrameBuffer>> {
        let (line, terminated) = read_line(&mut self.reader, MAX_HEADER_LEN)?;
        if line.is_empty() && !terminated {
            return Ok(None);
        }
        let marker_ok = line.starts_with(b"FRAME") && (line.len() == 5 || line[5] == b' ');
        if !marker_ok {
            return Err(VideoError::Format(format!(
                "expected FRAME marker before frame {}",
                self.next_index
            )));
        }
        if !terminated {
            return Err(VideoError::Truncated {
                frame: self.next_index,
                expected: self.info.frame_bytes(),
                available: 0,
            });
        }
        let frame = read_payload(
            &mut self.reader,
            &self.info,
            self.next_index,
            &mut self.buf,
            false,
        )?;
        self.next_index += 1;
        Ok(frame)
    }
}

impl<R: BufRead> FrameSource for Y4mReader<R> {
    fn info(&self) -> &SequenceInfo {
        &self.info
    }

    fn next_frame(&mut self) -> Result<Option<FrameBuffer>> {
        self.read_frame()
    }
}

pub fn open_y4m(path: &Path) -> Result<Y4mReader<BufReader<File>>> {
    Y4mReader::new(BufReader::new(File::open(path)?))
}

pub struct Y4mWriter<W> {
    writer: W,
    info: SequenceInfo,
    buf: Vec<u8>,
}

impl<W: Write> Y4mWriter<W> {
    pub fn new(mut writer: W, info: SequenceInfo) -> Result<Self> {
        info.validate()?;
        let colorspace = match (info.chroma, info.bit_depth) {
            (Chroma::C420, 8) => "420jpeg",
            (Chroma::C420, _) => "420p10",
            (Chroma::C444, 8) => "444",
            (Chroma::C444, _) => "444p10",
        };
        writeln!(
            writer,
            "{MAGIC} W{} H{} F{} Ip A1:1 C{colorspace}",
            info.width, info.height, info.fps
        )?;
        Ok(Y4mWriter {
            writer,
            info,
            buf: Vec::new(),
        })
    }

    pub fn write_frame(&mut self, frame: &FrameBuffer) -> Result<()> {
        if !frame.info().same_format(&self.info) {
            return Err(VideoError::InvalidFrame(format!(
                "frame is {}, stream is {}",
                frame.info().describe(),
                self.info.describe()
            )));
        }
        self.buf.clear();
        self.buf.extend_from_slice(b"FRAME\n");
        encode_payload(frame, &mut self.buf);
        self.writer.write_all(&self.buf)?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.writer
    }
}
