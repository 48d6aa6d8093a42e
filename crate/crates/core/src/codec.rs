//! FSQ code arithmetic, codebook indexing and the extended vocabulary map.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-dimension FSQ quantization levels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct FsqLevels {
    levels: Vec<u32>,
    vocab_size: u32,
}

impl FsqLevels {
    pub fn new(levels: Vec<u32>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidLevels(
                "at least one dimension is required".into(),
            ));
        }
        if let Some(l) = levels.iter().find(|&&l| l < 2) {
            return Err(Error::InvalidLevels(format!("level {l} is below 2")));
        }
        let vocab_size = levels
            .iter()
            .try_fold(1u32, |acc, &l| acc.checked_mul(l))
            .ok_or_else(|| {
                Error::InvalidLevels(format!("product of {levels:?} overflows 32 bits"))
            })?;
        Ok(Self { levels, vocab_size })
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn dims(&self) -> usize {
        self.levels.len()
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }

    /// All valid code tuples in index order.
    pub fn codes(&self) -> impl Iterator<Item = CodeTuple> + '_ {
        (0..self.vocab_size).map(move |i| self.index_to_code(i).expect("index in range"))
    }

    fn check(&self, code: &CodeTuple) -> Result<()> {
        if code.0.len() != self.levels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.levels.len(),
                got: code.0.len(),
            });
        }
        for (i, (&c, &l)) in code.0.iter().zip(&self.levels).enumerate() {
            if c >= l {
                return Err(Error::CodeOutOfRange(format!(
                    "component {i} = {c} not in [0, {})",
                    l
                )));
            }
        }
        Ok(())
    }

    /// Mixed-radix index, least-significant dimension first.
    pub fn code_to_index(&self, code: &CodeTuple) -> Result<u32> {
        self.check(code)?;
        Ok(code
            .0
            .iter()
            .zip(&self.levels)
            .rev()
            .fold(0u32, |acc, (&c, &l)| acc * l + c))
    }

    pub fn index_to_code(&self, index: u32) -> Result<CodeTuple> {
        if index >= self.vocab_size {
            return Err(Error::IndexOutOfRange {
                index: index as u64,
                size: self.vocab_size as u64,
            });
        }
        let mut rest = index;
        let codes = self
            .levels
            .iter()
            .map(|&l| {
                let c = rest % l;
                rest /= l;
                c
            })
            .collect();
        Ok(CodeTuple(codes))
    }

    /// Nearest level per dimension after clamping to `[-1, 1]`; exact
    /// midpoints go to the higher level.
    pub fn quantize<F: Float>(&self, z: &[F]) -> Result<CodeTuple> {
        if z.len() != self.levels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.levels.len(),
                got: z.len(),
            });
        }
        let one = F::one();
        let half = F::from(0.5).expect("0.5 representable");
        z.iter()
            .zip(&self.levels)
            .map(|(&x, &l)| {
                if x.is_nan() {
                    return Err(Error::InvalidParameter("NaN in FSQ input".into()));
                }
                let clamped = x.max(-one).min(one);
                let steps = F::from(l - 1).expect("level fits float");
                // position on [0, L-1]
                let pos = (clamped + one) * steps / (one + one);
                let k = (pos + half).floor().to_u32().unwrap_or(0).min(l - 1);
                Ok(k)
            })
            .collect::<Result<Vec<_>>>()
            .map(CodeTuple)
    }

    /// Component `i` maps to `2 * codes[i] / (L_i - 1) - 1`.
    pub fn dequantize<F: Float>(&self, code: &CodeTuple) -> Result<Vec<F>> {
        self.check(code)?;
        Ok(code
            .0
            .iter()
            .zip(&self.levels)
            .map(|(&c, &l)| {
                let two = F::one() + F::one();
                two * F::from(c).unwrap() / F::from(l - 1).unwrap() - F::one()
            })
            .collect())
    }
}

impl TryFrom<Vec<u32>> for FsqLevels {
    type Error = Error;

    fn try_from(levels: Vec<u32>) -> Result<Self> {
        Self::new(levels)
    }
}

impl From<FsqLevels> for Vec<u32> {
    fn from(l: FsqLevels) -> Self {
        l.levels
    }
}

/// One FSQ code, `codes[i]` in `[0, L_i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CodeTuple(pub Vec<u32>);

impl CodeTuple {
    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for CodeTuple {
    fn from(v: Vec<u32>) -> Self {
        CodeTuple(v)
    }
}

pub fn fsq_quantize<F: Float>(z: &[F], levels: &FsqLevels) -> Result<CodeTuple> {
    levels.quantize(z)
}

pub fn fsq_dequantize<F: Float>(code: &CodeTuple, levels: &FsqLevels) -> Result<Vec<F>> {
    levels.dequantize(code)
}

pub fn code_to_index(code: &CodeTuple, levels: &FsqLevels) -> Result<u32> {
    levels.code_to_index(code)
}

pub fn index_to_code(index: u32, levels: &FsqLevels) -> Result<CodeTuple> {
    levels.index_to_code(index)
}

/// Number of per-channel special codes reserved at the top of the codebook.
pub const SPEECH_SPECIALS: u32 = 3;

/// Per-channel speech codebook layout.
///
/// Specials occupy the top of each channel's range: `SILENCE`, `BOS`, `EOS`
/// in that order. The FSQ payload, when configured, occupies `[0, vocab_size)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeechTokenSpace {
    n_channels: u32,
    codebook_size: u32,
    fsq: Option<FsqLevels>,
    silence_override: Option<Vec<u32>>,
}

impl Default for SpeechTokenSpace {
    fn default() -> Self {
        Self {
            n_channels: 4,
            codebook_size: 4037,
            fsq: None,
            silence_override: None,
        }
    }
}

impl SpeechTokenSpace {
    pub fn new(n_channels: u32, codebook_size: u32, fsq: Option<FsqLevels>) -> Result<Self> {
        if n_channels == 0 {
            return Err(Error::InvalidTokenSpace(
                "at least one speech channel is required".into(),
            ));
        }
        if codebook_size < SPEECH_SPECIALS {
            return Err(Error::InvalidTokenSpace(format!(
                "codebook size {codebook_size} cannot hold {SPEECH_SPECIALS} specials"
            )));
        }
        if let Some(levels) = &fsq {
            if levels.vocab_size() > codebook_size - SPEECH_SPECIALS {
                return Err(Error::InvalidTokenSpace(format!(
                    "FSQ vocabulary {} exceeds the {} payload codes",
                    levels.vocab_size(),
                    codebook_size - SPEECH_SPECIALS
                )));
            }
        }
        // i32 storage in the matrix format and u32 global IDs
        if (codebook_size as u64) * (n_channels as u64) > i32::MAX as u64 {
            return Err(Error::InvalidTokenSpace(
                "speech vocabulary too large".into(),
            ));
        }
        Ok(Self {
            n_channels,
            codebook_size,
            fsq,
            silence_override: None,
        })
    }

    /// Replaces the reserved SILENCE symbol by a measured per-channel code
    /// (for example the codec's encoding of silent audio).
    pub fn with_silence_codes(mut self, codes: Vec<u32>) -> Result<Self> {
        if codes.len() != self.n_channels as usize {
            return Err(Error::DimensionMismatch {
                expected: self.n_channels as usize,
                got: codes.len(),
            });
        }
        if let Some(&c) = codes.iter().find(|&&c| c >= self.codebook_size) {
            return Err(Error::CodeOutOfRange(format!(
                "silence code {c} not in [0, {})",
                self.codebook_size
            )));
        }
        if codes.iter().any(|&c| c == self.bos() || c == self.eos()) {
            return Err(Error::InvalidTokenSpace(
                "silence code collides with BOS/EOS".into(),
            ));
        }
        self.silence_override = Some(codes);
        Ok(self)
    }

    pub fn n_channels(&self) -> u32 {
        self.n_channels
    }

    pub fn codebook_size(&self) -> u32 {
        self.codebook_size
    }

    pub fn fsq(&self) -> Option<&FsqLevels> {
        self.fsq.as_ref()
    }

    pub fn silence(&self) -> u32 {
        self.codebook_size - 3
    }

    pub fn bos(&self) -> u32 {
        self.codebook_size - 2
    }

    pub fn eos(&self) -> u32 {
        self.codebook_size - 1
    }

    /// Code emitted on `channel` while the agent is silent.
    pub fn silence_code(&self, channel: usize) -> u32 {
        match &self.silence_override {
            Some(codes) => codes[channel],
            None => self.silence(),
        }
    }

    pub fn payload_size(&self) -> u32 {
        self.codebook_size - SPEECH_SPECIALS
    }
}

/// Domain of an extended-vocabulary ID.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GlobalToken {
    Text(u32),
    Speech { channel: u32, code: u32 },
}

/// Text vocabulary extended with one block of codes per speech channel.
///
/// Channel `c` occupies `[text + c * cb, text + (c + 1) * cb)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabMap {
    text_vocab_size: u32,
    speech: SpeechTokenSpace,
}

impl Default for VocabMap {
    fn default() -> Self {
        Self {
            text_vocab_size: 32000,
            speech: SpeechTokenSpace::default(),
        }
    }
}

/// Number of text-channel specials appended after the base text vocabulary.
pub const TEXT_SPECIALS: u32 = 3;

/// Text-channel BOS/EOS/PAD IDs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextSpecials {
    pub bos: u32,
    pub eos: u32,
    pub pad: u32,
}

impl VocabMap {
    pub fn new(text_vocab_size: u32, speech: SpeechTokenSpace) -> Result<Self> {
        if text_vocab_size == 0 {
            return Err(Error::InvalidTokenSpace(
                "text vocabulary cannot be empty".into(),
            ));
        }
        let total =
            text_vocab_size as u64 + speech.n_channels() as u64 * speech.codebook_size() as u64;
        if total > i32::MAX as u64 {
            return Err(Error::InvalidTokenSpace(format!(
                "extended vocabulary of {total} IDs does not fit in 31 bits"
            )));
        }
        Ok(Self {
            text_vocab_size,
            speech,
        })
    }

    pub fn text_vocab_size(&self) -> u32 {
        self.text_vocab_size
    }

    pub fn speech(&self) -> &SpeechTokenSpace {
        &self.speech
    }

    pub fn total_size(&self) -> u32 {
        self.text_vocab_size + self.speech.n_channels() * self.speech.codebook_size()
    }

    /// BOS, EOS and PAD follow the base text vocabulary.
    pub fn text_specials(&self) -> TextSpecials {
        TextSpecials {
            bos: self.text_vocab_size,
            eos: self.text_vocab_size + 1,
            pad: self.text_vocab_size + 2,
        }
    }

    /// Exclusive upper bound of text-channel IDs (base vocabulary plus specials).
    pub fn text_channel_bound(&self) -> u32 {
        self.text_vocab_size + TEXT_SPECIALS
    }

    pub fn to_global_id(&self, channel: u32, code: u32) -> Result<u32> {
        if channel >= self.speech.n_channels() {
            return Err(Error::CodeOutOfRange(format!(
                "channel {channel} not in [0, {})",
                self.speech.n_channels()
            )));
        }
        if code >= self.speech.codebook_size() {
            return Err(Error::CodeOutOfRange(format!(
                "code {code} not in [0, {})",
                self.speech.codebook_size()
            )));
        }
        Ok(self.text_vocab_size + channel * self.speech.codebook_size() + code)
    }

    /// Identity on base text IDs.
    pub fn text_to_global_id(&self, id: u32) -> Result<u32> {
        if id >= self.text_vocab_size {
            return Err(Error::IndexOutOfRange {
                index: id as u64,
                size: self.text_vocab_size as u64,
            });
        }
        Ok(id)
    }

    pub fn from_global_id(&self, id: u32) -> Result<GlobalToken> {
        if id >= self.total_size() {
            return Err(Error::IndexOutOfRange {
                index: id as u64,
                size: self.total_size() as u64,
            });
        }
        if id < self.text_vocab_size {
            return Ok(GlobalToken::Text(id));
        }
        let offset = id - self.text_vocab_size;
        let cb = self.speech.codebook_size();
        Ok(GlobalToken::Speech {
            channel: offset / cb,
            code: offset % cb,
        })
    }
}

pub fn to_global_id(channel: u32, code: u32, vmap: &VocabMap) -> Result<u32> {
    vmap.to_global_id(channel, code)
}

pub fn from_global_id(id: u32, vmap: &VocabMap) -> Result<GlobalToken> {
    vmap.from_global_id(id)
}

/// `T x N` matrix of per-channel codes for one utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcousticMatrix {
    n_channels: usize,
    codes: Vec<u32>,
}

impl AcousticMatrix {
    pub fn new(rows: Vec<Vec<u32>>, space: &SpeechTokenSpace) -> Result<Self> {
        let n = space.n_channels() as usize;
        let mut codes = Vec::with_capacity(rows.len() * n);
        for (t, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            if let Some(&c) = row.iter().find(|&&c| c >= space.codebook_size()) {
                return Err(Error::CodeOutOfRange(format!(
                    "frame {t}: code {c} not in [0, {})",
                    space.codebook_size()
                )));
            }
            codes.extend(row);
        }
        Ok(Self {
            n_channels: n,
            codes,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.codes.len().checked_div(self.n_channels).unwrap_or(0)
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn get(&self, frame: usize, channel: usize) -> u32 {
        self.codes[frame * self.n_channels + channel]
    }

    pub fn row(&self, frame: usize) -> &[u32] {
        &self.codes[frame * self.n_channels..(frame + 1) * self.n_channels]
    }
}
