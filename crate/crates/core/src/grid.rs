//! Time grids aligned to the step `h`.

use crate::dsops::steps_for;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    ToInfinity,
    ToZero,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::ToInfinity => "to_infinity",
            Direction::ToZero => "to_zero",
        }
    }
}

/// `t = k h` for `k = start, start + stride, ...` up to `stop` steps.
pub fn linear(step: f64, start: u64, stop: u64, stride: u64) -> Result<Vec<f64>> {
    if start == 0 || stride == 0 || stop < start {
        return Err(Error::InvalidGrid(format!("linear grid {start}..={stop} by {stride}")));
    }
    Ok((start..=stop).step_by(stride as usize).map(|k| k as f64 * step).collect())
}

/// Roughly geometric step counts from `start` to `stop` (inclusive), with
/// `count` points, rounded to whole steps and deduplicated.
pub fn geometric(step: f64, start: u64, stop: u64, count: usize) -> Result<Vec<f64>> {
    if start == 0 || stop < start || count == 0 {
        return Err(Error::InvalidGrid(format!("geometric grid {start}..={stop} with {count} points")));
    }
    let mut ks: Vec<u64> = if count == 1 {
        vec![start]
    } else {
        let ratio = (stop as f64 / start as f64).powf(1.0 / (count - 1) as f64);
        (0..count).map(|i| (start as f64 * ratio.powi(i as i32)).round() as u64).collect()
    };
    if let Some(last) = ks.last_mut() {
        *last = stop;
    }
    ks.dedup();
    Ok(ks.into_iter().map(|k| k as f64 * step).collect())
}

/// Checks alignment, positivity and monotonicity in `direction`, returning
/// the step counts.
pub fn validate(times: &[f64], step: f64, direction: Direction) -> Result<Vec<u64>> {
    if times.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let ks = times.iter().map(|&t| steps_for(t, step)).collect::<Result<Vec<u64>>>()?;
    if ks.contains(&0) {
        return Err(Error::InvalidGrid("grid times must be positive".into()));
    }
    let ordered = match direction {
        Direction::ToInfinity => ks.windows(2).all(|w| w[0] < w[1]),
        Direction::ToZero => ks.windows(2).all(|w| w[0] > w[1]),
    };
    if !ordered {
        return Err(Error::InvalidGrid(format!("grid is not strictly monotone {}", direction.name())));
    }
    Ok(ks)
}
