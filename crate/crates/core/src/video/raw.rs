//! Headerless planar YUV files. Geometry must be supplied by the caller.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use super::{read_payload, FrameBuffer, FrameSource, Result, SequenceInfo};

pub struct RawReader<R> {
    reader: R,
    info: SequenceInfo,
    next_index: u64,
    buf: Vec<u8>,
}

impl<R: Read> RawReader<R> {
    pub fn new(reader: R, info: SequenceInfo) -> Result<Self> {
        info.validate()?;
        Ok(RawReader {
            reader,
            info,
            next_index: 0,
            buf: Vec::new(),
        })
    }

    pub fn read_frame(&mut self) -> Result<Option<FrameBuffer>> {
        let frame = read_payload(
            &mut self.reader,
            &self.info,
            self.next_index,
            &mut self.buf,
            true,
        )?;
        if frame.is_some() {
            self.next_index += 1;
        }
        Ok(frame)
    }
}

impl<R: Read> FrameSource for RawReader<R> {
    fn info(&self) -> &SequenceInfo {
        &self.info
    }

    fn next_frame(&mut self) -> Result<Option<FrameBuffer>> {
        self.read_frame()
    }
}

/// Opens a raw file. The frame count is derived from the file size when the
/// size is an exact multiple of the frame size.
pub fn open_raw(path: &Path, info: SequenceInfo) -> Result<RawReader<BufReader<File>>> {
    let file = File::open(path)?;
    let len = file.metadata()?.len();
    let frame_bytes = info.frame_bytes() as u64;
    let info = SequenceInfo {
        frame_count: (len % frame_bytes == 0).then_some(len / frame_bytes),
        ..info
    };
    RawReader::new(BufReader::new(file), info)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::video::{Chroma, PlaneId, Rational, VideoError};
    use std::io::Cursor;

    fn info10() -> SequenceInfo {
        SequenceInfo::new(64, 64, Rational::new(50, 1).unwrap(), 10, Chroma::C420, None).unwrap()
    }

    #[test]
    fn ten_bit_frame_size_oracle() {
        // 64*64 luma + 2 * 32*32 chroma, two bytes each.
        let expected = (64 * 64 + 2 * 32 * 32) * 2;
        assert_eq!(expected, 12_288);
        let data: Vec<u8> = (0..expected / 2)
            .flat_map(|i| ((i % 1024) as u16).to_le_bytes())
            .collect();
        let mut reader = RawReader::new(Cursor::new(data), info10()).unwrap();
        let frame = reader.read_frame().unwrap().unwrap();
        assert_eq!(frame.plane(PlaneId::Y)[1023], 1023);
        assert_eq!(frame.plane(PlaneId::Y)[1024], 0);
        assert_eq!(frame.plane(PlaneId::V).len(), 1024);
        assert!(reader.read_frame().unwrap().is_none());
    }

    #[test]
    fn partial_trailing_frame_is_truncation() {
        let data = vec![0u8; 12_288 + 100];
        let mut reader = RawReader::new(Cursor::new(data), info10()).unwrap();
        assert!(reader.read_frame().unwrap().is_some());
        assert!(matches!(
            reader.read_frame(),
            Err(VideoError::Truncated {
                frame: 1,
                expected: 12_288,
                available: 100
            })
        ));
    }
}
