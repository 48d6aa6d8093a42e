mod common;

use common::*;
use duplex_core::manifest::{conversation_to_line, parse_conversation_line};
use duplex_core::{time_to_frame, tracks_from_conversation, Seconds, SpeakerRole, TimeGrid};
use num_rational::Rational64;
use proptest::prelude::*;

#[test]
fn grid_examples() {
    let grid = TimeGrid::default();
    assert_eq!(time_to_frame(ms(3840), &grid).unwrap(), 48);
    assert_eq!(time_to_frame(ms(0), &grid).unwrap(), 0);
    assert_eq!(time_to_frame(ms(79), &grid).unwrap(), 0);
    assert!(time_to_frame(ms(-1), &grid).is_err());
    // 0.64 s is exactly 8 frames
    assert_eq!(
        ms(640) * grid.frames_per_second(),
        Rational64::from_integer(8)
    );
}

#[test]
fn projection_examples() {
    let conv = alternating("a", &[(3200, 640, 6160, 100)]);
    let tl = tracks_from_conversation(&conv).unwrap();
    assert_eq!(tl.user().segments(), &[(ms(0), ms(3200))]);
    assert_eq!(tl.agent().segments(), &[(ms(3840), ms(10_000))]);
    assert_eq!(tl.total_duration(), ms(10_000));

    let touching = duplex_core::Conversation::new(
        "t",
        vec![
            turn(SpeakerRole::User, 0, 2000),
            turn(SpeakerRole::User, 2000, 4000),
        ],
    )
    .unwrap();
    let tl = tracks_from_conversation(&touching).unwrap();
    assert_eq!(tl.user().segments(), &[(ms(0), ms(4000))]);

    assert!(duplex_core::Conversation::new(
        "o",
        vec![
            turn(SpeakerRole::Agent, 0, 3000),
            turn(SpeakerRole::Agent, 2000, 4000)
        ],
    )
    .is_err());
    let empty = duplex_core::Conversation::<Seconds>::new("e", vec![]).unwrap();
    assert!(tracks_from_conversation(&empty).is_err());
}

proptest! {
    #[test]
    fn tracks_are_sorted_disjoint_and_cover_turns(conv in arb_overlapping_conversation()) {
        let tl = tracks_from_conversation(&conv).unwrap();
        for role in [SpeakerRole::User, SpeakerRole::Agent] {
            let segs = tl.track(role).segments();
            for &(s, e) in segs {
                prop_assert!(s < e);
                prop_assert!(e <= tl.total_duration());
            }
            for w in segs.windows(2) {
                // merged, so strictly separated
                prop_assert!(w[0].1 < w[1].0);
            }
            for (_, t) in conv.turns_of(role) {
                prop_assert!(segs.iter().any(|&(s, e)| s <= t.start() && t.end() <= e));
            }
            let covered: Seconds = segs.iter().map(|&(s, e)| e - s).sum();
            let spoken: Seconds = conv.turns_of(role).map(|(_, t)| t.duration()).sum();
            prop_assert_eq!(covered, spoken);
        }
        prop_assert_eq!(Some(tl.total_duration()), conv.end_time());
    }

    #[test]
    fn time_to_frame_is_monotone(a in 0i64..10_000_000, b in 0i64..10_000_000) {
        let grid = TimeGrid::default();
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(time_to_frame(ms(lo), &grid).unwrap() <= time_to_frame(ms(hi), &grid).unwrap());
    }

    #[test]
    fn millisecond_frames_match_integer_division(t in 0i64..1_000_000) {
        let grid = TimeGrid::default();
        let exact = time_to_frame(ms(t), &grid).unwrap();
        prop_assert_eq!(exact, t * 25 / 2000);
    }

    #[test]
    fn manifest_line_round_trip(conv in arb_overlapping_conversation()) {
        let line = conversation_to_line(&conv);
        let back = parse_conversation_line(&line).unwrap();
        prop_assert_eq!(&back, &conv);
        prop_assert_eq!(conversation_to_line(&back), line);
    }
}

#[test]
fn frame_start_round_trip() {
    let grid = TimeGrid::default();
    for k in 0..100_000i64 {
        let t: Seconds = grid.frame_start(k);
        assert_eq!(time_to_frame(t, &grid).unwrap(), k);
    }
}
