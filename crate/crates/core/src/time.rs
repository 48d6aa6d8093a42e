use num_rational::Rational64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{seconds_display, TimeScalar};

/// Frame grid shared by the text and speech channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeGrid {
    frames_per_second: Rational64,
}

impl Default for TimeGrid {
    /// 12.5 frames per second (80 ms frames).
    fn default() -> Self {
        Self {
            frames_per_second: Rational64::new(25, 2),
        }
    }
}

impl TimeGrid {
    pub fn new(frames_per_second: Rational64) -> Result<Self> {
        if frames_per_second <= Rational64::zero() {
            return Err(Error::InvalidFrameRate(format!(
                "frames per second must be positive, got {frames_per_second}"
            )));
        }
        Ok(Self { frames_per_second })
    }

    pub fn frames_per_second(&self) -> Rational64 {
        self.frames_per_second
    }

    pub fn frame_duration(&self) -> Rational64 {
        Rational64::one() / self.frames_per_second
    }

    /// Start time of frame `k`.
    pub fn frame_start<T: TimeScalar>(&self, k: i64) -> T {
        T::from_rational(Rational64::from_integer(k) / self.frames_per_second)
    }

    /// Index of the frame containing `t`: `floor(t * fps)`.
    pub fn time_to_frame<T: TimeScalar>(&self, t: T) -> Result<i64> {
        if t.is_negative() {
            return Err(Error::NegativeTime(seconds_display(t)));
        }
        Ok(t.floor_scaled(self.frames_per_second))
    }

    /// Number of frames needed to cover `[0, t)`: `ceil(t * fps)`.
    pub fn frames_covering<T: TimeScalar>(&self, t: T) -> Result<i64> {
        if t.is_negative() {
            return Err(Error::NegativeTime(seconds_display(t)));
        }
        Ok(t.ceil_scaled(self.frames_per_second))
    }
}

/// `floor(t * grid.fps)` as a free function.
pub fn time_to_frame<T: TimeScalar>(t: T, grid: &TimeGrid) -> Result<i64> {
    grid.time_to_frame(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{millis, parse_decimal};

    #[test]
    fn default_grid_is_80ms() {
        let g = TimeGrid::default();
        assert_eq!(g.frame_duration(), Rational64::new(2, 25));
        assert_eq!(g.frame_duration(), millis(80));
    }

    #[test]
    fn frame_examples() {
        let g = TimeGrid::default();
        assert_eq!(g.time_to_frame(parse_decimal("3.84").unwrap()).unwrap(), 48);
        assert_eq!(g.time_to_frame(Rational64::zero()).unwrap(), 0);
        assert_eq!(g.time_to_frame(millis(79)).unwrap(), 0);
        assert_eq!(g.time_to_frame(millis(640)).unwrap(), 8);
    }

    #[test]
    fn negative_time_rejected() {
        let g = TimeGrid::default();
        assert!(matches!(
            g.time_to_frame(millis(-1)),
            Err(Error::NegativeTime(_))
        ));
        assert!(g.time_to_frame(-0.5f64).is_err());
    }

    #[test]
    fn frame_starts_round_trip() {
        let g = TimeGrid::default();
        for k in 0..10_000 {
            let t: Rational64 = g.frame_start(k);
            assert_eq!(g.time_to_frame(t).unwrap(), k);
        }
    }

    #[test]
    fn rejects_non_positive_rate() {
        assert!(TimeGrid::new(Rational64::zero()).is_err());
        assert!(TimeGrid::new(Rational64::new(-1, 2)).is_err());
    }
}
