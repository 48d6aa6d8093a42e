//! Places agent text and speech codes on the shared frame grid.
//!
//! For an agent turn starting at frame `f0` and spanning `F` frames:
//!
//! ```text
//! text    : f0 = BOS, f0+1..=f0+n = tokens, f0+n+1 = EOS, PAD elsewhere
//! speech c: f0+d = BOS, then the turn's codes, then EOS, SILENCE elsewhere
//! ```
//!
//! Speech codes may run up to frame `f0 + F` (the frame starting at the turn
//! end). Codes pushed beyond it by the delay `d` are dropped and reported.

use serde::{Deserialize, Serialize};

use crate::codec::{AcousticMatrix, VocabMap};
use crate::error::{Error, Result};
use crate::model::{Conversation, SpeakerRole};
use crate::scalar::TimeScalar;
use crate::time::TimeGrid;

/// Default channel loss weights: text, then one per speech channel.
pub const TEXT_LOSS_WEIGHT: f32 = 3.0;
pub const SPEECH_LOSS_WEIGHT: f32 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentTurnTokens {
    /// Index into `Conversation::turns`.
    pub turn_ref: usize,
    pub text_tokens: Vec<u32>,
    pub speech_codes: AcousticMatrix,
}

/// `n_frames x (1 + N)` token grid plus per-frame user activity.
///
/// Column 0 holds text-channel IDs; columns `1..=N` hold channel-local speech
/// codes.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    grid: TimeGrid,
    text_vocab_size: u32,
    codebook_size: u32,
    n_frames: usize,
    n_columns: usize,
    cells: Vec<i32>,
    loss_weights: Vec<f32>,
    user_mask: Vec<bool>,
}

impl ChannelMatrix {
    /// Builds a matrix from raw parts, checking every invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        grid: TimeGrid,
        text_vocab_size: u32,
        codebook_size: u32,
        n_columns: usize,
        cells: Vec<i32>,
        loss_weights: Vec<f32>,
        user_mask: Vec<bool>,
    ) -> Result<Self> {
        if n_columns < 2 {
            return Err(Error::MalformedMatrix(
                "need a text and at least one speech column".into(),
            ));
        }
        if !cells.len().is_multiple_of(n_columns) {
            return Err(Error::MalformedMatrix(format!(
                "{} cells do not form rows of {n_columns}",
                cells.len()
            )));
        }
        let n_frames = cells.len() / n_columns;
        if loss_weights.len() != n_columns {
            return Err(Error::MalformedMatrix(format!(
                "{} loss weights for {n_columns} channels",
                loss_weights.len()
            )));
        }
        if user_mask.len() != n_frames {
            return Err(Error::MalformedMatrix(format!(
                "user mask has {} entries for {n_frames} frames",
                user_mask.len()
            )));
        }
        let text_bound = text_vocab_size as i64 + crate::codec::TEXT_SPECIALS as i64;
        for (i, &v) in cells.iter().enumerate() {
            let (frame, col) = (i / n_columns, i % n_columns);
            let bound = if col == 0 {
                text_bound
            } else {
                codebook_size as i64
            };
            if v < 0 || v as i64 >= bound {
                return Err(Error::MalformedMatrix(format!(
                    "frame {frame} channel {col}: {v} not in [0, {bound})"
                )));
            }
        }
        Ok(Self {
            grid,
            text_vocab_size,
            codebook_size,
            n_frames,
            n_columns,
            cells,
            loss_weights,
            user_mask,
        })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn text_vocab_size(&self) -> u32 {
        self.text_vocab_size
    }

    pub fn codebook_size(&self) -> u32 {
        self.codebook_size
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    /// `1 + N`.
    pub fn n_columns(&self) -> usize {
        self.n_columns
    }

    pub fn get(&self, frame: usize, column: usize) -> i32 {
        self.cells[frame * self.n_columns + column]
    }

    pub fn row(&self, frame: usize) -> &[i32] {
        &self.cells[frame * self.n_columns..(frame + 1) * self.n_columns]
    }

    pub fn column(&self, column: usize) -> impl Iterator<Item = i32> + '_ {
        self.cells
            .iter()
            .skip(column)
            .step_by(self.n_columns)
            .copied()
    }

    pub fn cells(&self) -> &[i32] {
        &self.cells
    }

    pub fn loss_weights(&self) -> &[f32] {
        &self.loss_weights
    }

    pub fn user_mask(&self) -> &[bool] {
        &self.user_mask
    }

    pub fn with_loss_weights(mut self, weights: Vec<f32>) -> Result<Self> {
        if weights.len() != self.n_columns {
            return Err(Error::MalformedMatrix(format!(
                "{} loss weights for {} channels",
                weights.len(),
                self.n_columns
            )));
        }
        self.loss_weights = weights;
        Ok(self)
    }
}

/// Per-turn bookkeeping of where the speech block landed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnPlacement {
    pub turn_index: usize,
    pub start_frame: i64,
    pub frame_count: i64,
    pub text_bos_frame: i64,
    pub text_eos_frame: i64,
    pub speech_bos_frame: i64,
    /// `None` when the EOS fell past the end of the matrix.
    pub speech_eos_frame: Option<i64>,
    pub codes_placed: usize,
    /// Trailing codes dropped because the delay pushed them past the turn.
    pub codes_displaced_by_delay: usize,
    /// Codes dropped because they fell past the end of the matrix.
    pub codes_clipped_at_end: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub matrix: ChannelMatrix,
    pub placements: Vec<TurnPlacement>,
}

#[derive(Debug, Clone)]
pub struct AlignOptions {
    pub delay_frames: usize,
    pub loss_weights: Option<Vec<f32>>,
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self {
            delay_frames: 1,
            loss_weights: None,
        }
    }
}

/// Frame span `[f0, f0 + F)` of a turn: `f0 = floor(start * fps)`,
/// `f0 + F = ceil(end * fps)`.
pub fn turn_frame_span<T: TimeScalar>(start: T, end: T, grid: &TimeGrid) -> Result<(i64, i64)> {
    let f0 = grid.time_to_frame(start)?;
    let f1 = grid.frames_covering(end)?;
    Ok((f0, f1 - f0))
}

pub fn align_conversation<T: TimeScalar>(
    conv: &Conversation<T>,
    turn_tokens: &[AgentTurnTokens],
    vmap: &VocabMap,
    grid: &TimeGrid,
    delay_frames: usize,
) -> Result<Alignment> {
    align_with(
        conv,
        turn_tokens,
        vmap,
        grid,
        &AlignOptions {
            delay_frames,
            loss_weights: None,
        },
    )
}

pub fn align_with<T: TimeScalar>(
    conv: &Conversation<T>,
    turn_tokens: &[AgentTurnTokens],
    vmap: &VocabMap,
    grid: &TimeGrid,
    opts: &AlignOptions,
) -> Result<Alignment> {
    let space = vmap.speech();
    let n_speech = space.n_channels() as usize;
    let n_columns = 1 + n_speech;
    let specials = vmap.text_specials();
    let delay = opts.delay_frames as i64;

    let total = conv.end_time().ok_or(Error::EmptyConversation)?;
    let n_frames = grid.frames_covering(total)? as usize;

    let mut cells = vec![0i32; n_frames * n_columns];
    for row in cells.chunks_exact_mut(n_columns) {
        row[0] = specials.pad as i32;
        for (c, cell) in row[1..].iter_mut().enumerate() {
            *cell = space.silence_code(c) as i32;
        }
    }

    let mut placements = Vec::new();
    // (turn index, text EOS frame, speech EOS frame) of the previous agent turn
    let mut prev_turn: Option<(usize, i64, i64)> = None;
    for (turn_index, turn) in conv.turns_of(SpeakerRole::Agent) {
        let tokens = turn_tokens
            .iter()
            .find(|t| t.turn_ref == turn_index)
            .ok_or_else(|| Error::Alignment(format!("no tokens for agent turn {turn_index}")))?;
        let (f0, frame_count) = turn_frame_span(turn.start(), turn.end(), grid)?;
        let n_text = tokens.text_tokens.len();
        if n_text == 0 {
            return Err(Error::Alignment(format!(
                "agent turn {turn_index} has no text tokens"
            )));
        }
        if (n_text as i64) + 2 > frame_count {
            return Err(Error::Alignment(format!(
                "agent turn {turn_index}: {n_text} text tokens plus BOS/EOS exceed {frame_count} frames"
            )));
        }
        if let Some(&bad) = tokens
            .text_tokens
            .iter()
            .find(|&&t| t >= vmap.text_vocab_size())
        {
            return Err(Error::Alignment(format!(
                "agent turn {turn_index}: text token {bad} outside the base vocabulary"
            )));
        }
        let codes = &tokens.speech_codes;
        if codes.n_channels() != n_speech {
            return Err(Error::Alignment(format!(
                "agent turn {turn_index}: {} speech channels, expected {n_speech}",
                codes.n_channels()
            )));
        }
        if codes.n_frames() as i64 != frame_count {
            return Err(Error::Alignment(format!(
                "agent turn {turn_index}: {} speech frames for a {frame_count}-frame turn",
                codes.n_frames()
            )));
        }
        if let Some(&c) = (0..codes.n_frames())
            .flat_map(|t| codes.row(t))
            .find(|&&c| c >= space.codebook_size())
        {
            return Err(Error::Alignment(format!(
                "agent turn {turn_index}: speech code {c} out of range"
            )));
        }

        let speech_bos = f0 + delay;
        if let Some((prev_idx, prev_text_eos, prev_speech_eos)) = prev_turn {
            if f0 <= prev_text_eos || speech_bos <= prev_speech_eos {
                return Err(Error::Alignment(format!(
                    "agent turns {prev_idx} and {turn_index} overlap on the frame grid"
                )));
            }
        }

        let mut set = |frame: i64, col: usize, value: u32| -> bool {
            if frame >= 0 && (frame as usize) < n_frames {
                cells[frame as usize * n_columns + col] = value as i32;
                true
            } else {
                false
            }
        };

        set(f0, 0, specials.bos);
        for (i, &tok) in tokens.text_tokens.iter().enumerate() {
            set(f0 + 1 + i as i64, 0, tok);
        }
        let text_eos = f0 + 1 + n_text as i64;
        set(text_eos, 0, specials.eos);

        // codes may occupy frames up to and including f0 + F
        let last_code_frame = f0 + frame_count;
        let first_code_frame = speech_bos + 1;
        let fit = (last_code_frame - first_code_frame + 1).clamp(0, frame_count) as usize;
        let displaced = codes.n_frames() - fit;
        let mut placed = 0usize;
        let mut clipped = 0usize;
        for c in 0..n_speech {
            set(speech_bos, 1 + c, space.bos());
        }
        for t in 0..fit {
            let frame = first_code_frame + t as i64;
            let mut in_bounds = true;
            for c in 0..n_speech {
                in_bounds &= set(frame, 1 + c, codes.get(t, c));
            }
            if in_bounds {
                placed += 1;
            } else {
                clipped += 1;
            }
        }
        let eos_frame = first_code_frame + fit as i64;
        let mut eos_written = true;
        for c in 0..n_speech {
            eos_written &= set(eos_frame, 1 + c, space.eos());
        }

        placements.push(TurnPlacement {
            turn_index,
            start_frame: f0,
            frame_count,
            text_bos_frame: f0,
            text_eos_frame: text_eos,
            speech_bos_frame: speech_bos,
            speech_eos_frame: eos_written.then_some(eos_frame),
            codes_placed: placed,
            codes_displaced_by_delay: displaced,
            codes_clipped_at_end: clipped,
        });
        prev_turn = Some((turn_index, text_eos, eos_frame));
    }

    let user_mask = user_activity_mask(conv, grid, n_frames)?;
    let loss_weights = match &opts.loss_weights {
        Some(w) => w.clone(),
        None => default_loss_weights(n_speech),
    };
    let matrix = ChannelMatrix::from_parts(
        *grid,
        vmap.text_vocab_size(),
        space.codebook_size(),
        n_columns,
        cells,
        loss_weights,
        user_mask,
    )?;
    Ok(Alignment { matrix, placements })
}

pub fn default_loss_weights(n_speech: usize) -> Vec<f32> {
    std::iter::once(TEXT_LOSS_WEIGHT)
        .chain(std::iter::repeat_n(SPEECH_LOSS_WEIGHT, n_speech))
        .collect()
}

/// `mask[k]` is set when a user turn covers the start time of frame `k`.
pub fn user_activity_mask<T: TimeScalar>(
    conv: &Conversation<T>,
    grid: &TimeGrid,
    n_frames: usize,
) -> Result<Vec<bool>> {
    let mut mask = vec![false; n_frames];
    for (_, turn) in conv.turns_of(SpeakerRole::User) {
        // first frame whose start is >= turn start, last whose start is < end
        let first = turn.start().ceil_scaled(grid.frames_per_second()).max(0);
        let last = turn.end().ceil_scaled(grid.frames_per_second());
        for k in first..last {
            if let Some(m) = mask.get_mut(k as usize) {
                *m = true;
            }
        }
    }
    Ok(mask)
}

/// Maps the matrix to extended-vocabulary IDs; text IDs pass through.
pub fn matrix_to_global(m: &ChannelMatrix, vmap: &VocabMap) -> Result<Vec<Vec<u32>>> {
    if m.n_columns() != 1 + vmap.speech().n_channels() as usize {
        return Err(Error::DimensionMismatch {
            expected: 1 + vmap.speech().n_channels() as usize,
            got: m.n_columns(),
        });
    }
    (0..m.n_frames())
        .map(|k| {
            m.row(k)
                .iter()
                .enumerate()
                .map(|(col, &v)| {
                    if v < 0 {
                        return Err(Error::CodeOutOfRange(format!("negative entry {v}")));
                    }
                    if col == 0 {
                        if v as u32 >= vmap.text_channel_bound() {
                            return Err(Error::CodeOutOfRange(format!("text entry {v}")));
                        }
                        Ok(v as u32)
                    } else {
                        vmap.to_global_id(col as u32 - 1, v as u32)
                    }
                })
                .collect()
        })
        .collect()
}

/// Same mapping for a single cell.
pub fn cell_to_global(column: usize, value: i32, vmap: &VocabMap) -> Result<u32> {
    if value < 0 {
        return Err(Error::CodeOutOfRange(format!("negative entry {value}")));
    }
    if column == 0 {
        if value as u32 >= vmap.text_channel_bound() {
            return Err(Error::CodeOutOfRange(format!("text entry {value}")));
        }
        return Ok(value as u32);
    }
    vmap.to_global_id(column as u32 - 1, value as u32)
}
