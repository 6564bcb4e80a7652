//! Little-endian binary feature files:
//!
//! ```text
//! "FSFB" | version u32 | num_snippets u32 | frames_per_snippet u32 | dim u32 | f32 × (K·L·d)
//! ```
//!
//! The payload is stored in `[snippet][frame][dim]` order. Values are held
//! as `f64` in memory and narrowed to `f32` on write.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{FeatureError, Result, VideoFeatures};

pub const MAGIC: [u8; 4] = *b"FSFB";
pub const FORMAT_VERSION: u32 = 1;

const CHUNK_FLOATS: usize = 16 * 1024;

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => FeatureError::DimensionMismatch(format!("header ends before {what}")),
        _ => FeatureError::Io(e),
    })?;
    Ok(u32::from_le_bytes(buf))
}

/// Reads until `buf` is full or the stream ends; returns the bytes read.
fn fill<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..]) {
            Ok(0) => break,
            Ok(m) => n += m,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(n)
}

/// Decodes one feature tensor from a reader. The returned video id is empty.
pub fn read_features<R: Read>(mut r: R) -> Result<VideoFeatures> {
    let mut magic = [0u8; 4];
    let got = fill(&mut r, &mut magic)?;
    if got < 4 || magic != MAGIC {
        return Err(FeatureError::BadMagic { found: magic });
    }
    let version = read_u32(&mut r, "version")?;
    if version != FORMAT_VERSION {
        return Err(FeatureError::UnsupportedVersion(version));
    }
    let k = read_u32(&mut r, "num_snippets")? as usize;
    let l = read_u32(&mut r, "frames_per_snippet")? as usize;
    let d = read_u32(&mut r, "dim")? as usize;
    let expected = k
        .checked_mul(l)
        .and_then(|n| n.checked_mul(d))
        .filter(|n| n.checked_mul(4).is_some())
        .ok_or_else(|| FeatureError::DimensionMismatch(format!("header shape {k}x{l}x{d} overflows")))?;

    // Grow in bounded chunks so a lying header cannot force a huge allocation.
    let mut data = Vec::with_capacity(expected.min(CHUNK_FLOATS));
    let mut bytes = vec![0u8; 4 * CHUNK_FLOATS];
    while data.len() < expected {
        let want = (expected - data.len()).min(CHUNK_FLOATS);
        let got = fill(&mut r, &mut bytes[..4 * want])?;
        data.extend(bytes[..got - got % 4].chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64));
        if got < 4 * want {
            return Err(FeatureError::TruncatedPayload { expected, found: data.len() });
        }
    }
    let mut probe = [0u8; 1];
    if fill(&mut r, &mut probe)? != 0 {
        return Err(FeatureError::DimensionMismatch(format!("payload longer than the {expected} floats declared by the header")));
    }
    VideoFeatures::new("", k, l, d, data)
}

/// Encodes one feature tensor. Fails if a value does not fit in `f32`.
pub fn write_features<W: Write>(v: &VideoFeatures, mut w: W) -> Result<()> {
    let header = |x: usize| -> Result<[u8; 4]> {
        u32::try_from(x).map(u32::to_le_bytes).map_err(|_| FeatureError::InvalidArgument(format!("dimension {x} does not fit in u32")))
    };
    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&header(v.num_snippets())?)?;
    w.write_all(&header(v.frames_per_snippet())?)?;
    w.write_all(&header(v.dim())?)?;
    for &x in v.data() {
        let narrow = x as f32;
        if !narrow.is_finite() {
            return Err(FeatureError::NonFinite { video_id: v.video_id().to_string() });
        }
        w.write_all(&narrow.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a feature file; the video id is taken from the file stem.
pub fn read_feature_file(path: impl AsRef<Path>) -> Result<VideoFeatures> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => FeatureError::MissingFile(path.to_path_buf()),
        _ => FeatureError::Io(e),
    })?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(read_features(BufReader::new(file))?.with_video_id(id))
}

pub fn write_feature_file(v: &VideoFeatures, path: impl AsRef<Path>) -> Result<()> {
    write_features(v, BufWriter::new(File::create(path)?))
}
