#![allow(dead_code)]

use duplex_core::scalar::millis;
use duplex_core::{
    AcousticMatrix, AgentTurnTokens, Conversation, Seconds, SpeakerRole, Turn, VocabMap,
};
use proptest::prelude::*;

pub fn ms(v: i64) -> Seconds {
    millis(v)
}

pub fn turn(role: SpeakerRole, start_ms: i64, end_ms: i64) -> Turn<Seconds> {
    Turn::new(role, ms(start_ms), ms(end_ms), format!("{role}-{start_ms}")).unwrap()
}

/// Spans built from `(gap, duration)` steps; zero gaps produce touching spans.
pub fn spans(steps: &[(i64, i64)], origin: i64) -> Vec<(i64, i64)> {
    let mut t = origin;
    steps
        .iter()
        .map(|&(gap, dur)| {
            let s = t + gap;
            t = s + dur;
            (s, t)
        })
        .collect()
}

/// Independent user and agent tracks; cross-role overlap is allowed.
pub fn arb_overlapping_conversation() -> impl Strategy<Value = Conversation<Seconds>> {
    let steps = || prop::collection::vec((0i64..3000, 1i64..5000), 0..6);
    (steps(), steps(), 0i64..2000)
        .prop_filter("non-empty", |(u, a, _)| !u.is_empty() || !a.is_empty())
        .prop_map(|(u, a, agent_origin)| {
            let mut turns: Vec<_> = spans(&u, 0)
                .into_iter()
                .map(|(s, e)| turn(SpeakerRole::User, s, e))
                .collect();
            turns.extend(
                spans(&a, agent_origin)
                    .into_iter()
                    .map(|(s, e)| turn(SpeakerRole::Agent, s, e)),
            );
            Conversation::from_unsorted("c", turns).unwrap()
        })
}

/// Strictly alternating user/agent turns starting with a user turn.
/// Each step is `(user_ms, pre_agent_gap_ms, agent_ms, post_agent_gap_ms)`.
pub fn alternating(id: &str, steps: &[(i64, i64, i64, i64)]) -> Conversation<Seconds> {
    let mut t = 0;
    let mut turns = Vec::new();
    for &(u, g1, a, g2) in steps {
        turns.push(turn(SpeakerRole::User, t, t + u));
        t += u + g1;
        turns.push(turn(SpeakerRole::Agent, t, t + a));
        t += a + g2;
    }
    Conversation::new(id, turns).unwrap()
}

pub fn arb_alternating(max_pairs: usize) -> impl Strategy<Value = Conversation<Seconds>> {
    prop::collection::vec(
        (200i64..6000, 0i64..2000, 500i64..8000, 200i64..3000),
        1..=max_pairs,
    )
    .prop_map(|steps| alternating("alt", &steps))
}

/// Random tokens for every agent turn: text fills at most `F - 2` frames and
/// the speech block has exactly `F` rows.
pub fn tokens_for(
    conv: &Conversation<Seconds>,
    vmap: &VocabMap,
    seed: u64,
) -> Vec<AgentTurnTokens> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let grid = duplex_core::TimeGrid::default();
    let space = vmap.speech();
    conv.turns_of(SpeakerRole::Agent)
        .map(|(i, t)| {
            let (_, f) = duplex_core::aligner::turn_frame_span(t.start(), t.end(), &grid).unwrap();
            let n_text = rng.random_range(1..=(f - 2) as usize);
            let rows = (0..f)
                .map(|_| {
                    (0..space.n_channels())
                        .map(|_| rng.random_range(0..space.payload_size()))
                        .collect()
                })
                .collect();
            AgentTurnTokens {
                turn_ref: i,
                text_tokens: (0..n_text)
                    .map(|_| rng.random_range(0..vmap.text_vocab_size()))
                    .collect(),
                speech_codes: AcousticMatrix::new(rows, space).unwrap(),
            }
        })
        .collect()
}
