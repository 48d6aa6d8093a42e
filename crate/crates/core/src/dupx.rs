//! DUPX binary matrix format (little-endian).
//!
//! ```text
//! "DUPX" | u16 version | u16 n_channels_total | u32 n_frames
//! u32 fps_num | u32 fps_den | u32 text_vocab_size | u32 codebook_size
//! (1+N) x f32 loss weights
//! n_frames x (1+N) x i32 token IDs, row-major
//! ceil(n_frames / 8) bytes user mask, LSB first
//! ```

use num_rational::Rational64;

use crate::aligner::ChannelMatrix;
use crate::error::{Error, Result};
use crate::time::TimeGrid;

pub const MAGIC: [u8; 4] = *b"DUPX";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 2 + 4 * 5;

pub fn serialize_matrix(m: &ChannelMatrix) -> Result<Vec<u8>> {
    let fps = m.grid().frames_per_second();
    let to_u32 = |v: i64, what: &str| {
        u32::try_from(v).map_err(|_| Error::MalformedMatrix(format!("{what} {v} does not fit u32")))
    };
    let n_columns = u16::try_from(m.n_columns())
        .map_err(|_| Error::MalformedMatrix("too many channels".into()))?;
    let n_frames = to_u32(m.n_frames() as i64, "frame count")?;
    let mut out = Vec::with_capacity(
        HEADER_LEN + 4 * m.n_columns() + 4 * m.cells().len() + m.n_frames().div_ceil(8),
    );
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&n_columns.to_le_bytes());
    out.extend_from_slice(&n_frames.to_le_bytes());
    out.extend_from_slice(&to_u32(*fps.numer(), "fps numerator")?.to_le_bytes());
    out.extend_from_slice(&to_u32(*fps.denom(), "fps denominator")?.to_le_bytes());
    out.extend_from_slice(&m.text_vocab_size().to_le_bytes());
    out.extend_from_slice(&m.codebook_size().to_le_bytes());
    for w in m.loss_weights() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    for v in m.cells() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut mask = vec![0u8; m.n_frames().div_ceil(8)];
    for (k, &on) in m.user_mask().iter().enumerate() {
        if on {
            mask[k / 8] |= 1 << (k % 8);
        }
    }
    out.extend_from_slice(&mask);
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Truncated(format!(
                    "{what}: need {n} bytes at offset {}, have {}",
                    self.pos,
                    self.bytes.len().saturating_sub(self.pos)
                ))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn deserialize_matrix(bytes: &[u8]) -> Result<ChannelMatrix> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let n_columns = r.u16("channel count")? as usize;
    let n_frames = r.u32("frame count")? as usize;
    let fps_num = r.u32("fps numerator")?;
    let fps_den = r.u32("fps denominator")?;
    let text_vocab_size = r.u32("text vocabulary size")?;
    let codebook_size = r.u32("codebook size")?;
    if fps_den == 0 {
        return Err(Error::MalformedMatrix("zero fps denominator".into()));
    }
    let grid = TimeGrid::new(Rational64::new(fps_num as i64, fps_den as i64))?;

    let weights = r
        .take(4 * n_columns, "loss weights")?
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let n_cells = n_frames
        .checked_mul(n_columns)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Truncated("frame count overflows".into()))?;
    let cells = r
        .take(n_cells, "token payload")?
        .chunks_exact(4)
        .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mask_bytes = r.take(n_frames.div_ceil(8), "user mask")?;
    let user_mask = (0..n_frames)
        .map(|k| mask_bytes[k / 8] >> (k % 8) & 1 == 1)
        .collect();
    if r.pos != bytes.len() {
        return Err(Error::MalformedMatrix(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    ChannelMatrix::from_parts(
        grid,
        text_vocab_size,
        codebook_size,
        n_columns,
        cells,
        weights,
        user_mask,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ChannelMatrix {
        let cells = vec![32002, 4034, 4034, 0, 1, 2, 32000, 4035, 4036];
        ChannelMatrix::from_parts(
            TimeGrid::default(),
            32000,
            4037,
            3,
            cells,
            vec![3.0, 1.0, 1.0],
            vec![true, false, true],
        )
        .unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = serialize_matrix(&sample()).unwrap();
        assert_eq!(&bytes[..4], b"DUPX");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), 3);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 25);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 2);
        assert_eq!(f32::from_le_bytes(bytes[28..32].try_into().unwrap()), 3.0);
        assert_eq!(bytes.len(), HEADER_LEN + 12 + 36 + 1);
        assert_eq!(*bytes.last().unwrap(), 0b101);
    }

    #[test]
    fn round_trip() {
        let m = sample();
        assert_eq!(
            deserialize_matrix(&serialize_matrix(&m).unwrap()).unwrap(),
            m
        );
    }

    #[test]
    fn bad_magic() {
        let mut bytes = serialize_matrix(&sample()).unwrap();
        bytes[0] = b'X';
        assert_eq!(deserialize_matrix(&bytes).unwrap_err(), Error::BadMagic);
        assert_eq!(
            deserialize_matrix(&bytes).unwrap_err().to_string(),
            "bad magic"
        );
    }

    #[test]
    fn version_mismatch() {
        let mut bytes = serialize_matrix(&sample()).unwrap();
        bytes[4] = 2;
        assert_eq!(
            deserialize_matrix(&bytes).unwrap_err(),
            Error::UnsupportedVersion(2)
        );
    }

    #[test]
    fn truncated_payload() {
        let mut bytes = serialize_matrix(&sample()).unwrap();
        // claim 1000 frames
        bytes[8..12].copy_from_slice(&1000u32.to_le_bytes());
        let err = deserialize_matrix(&bytes).unwrap_err();
        assert!(matches!(err, Error::Truncated(_)));
        assert!(err.to_string().starts_with("truncated"));
        let full = serialize_matrix(&sample()).unwrap();
        assert!(matches!(
            deserialize_matrix(&full[..full.len() - 1]).unwrap_err(),
            Error::Truncated(_)
        ));
        assert!(matches!(
            deserialize_matrix(&full[..3]).unwrap_err(),
            Error::Truncated(_)
        ));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = serialize_matrix(&sample()).unwrap();
        bytes.push(0);
        assert!(matches!(
            deserialize_matrix(&bytes).unwrap_err(),
            Error::MalformedMatrix(_)
        ));
    }
}
