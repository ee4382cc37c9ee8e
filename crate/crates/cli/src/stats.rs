use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub avg_us: f64,
    pub min_us: f64,
}

/// Average and minimum of the completion times after dropping the first
/// `warmup` of them.
pub fn summarize(times_us: &[f64], warmup: usize) -> Result<Summary> {
    let kept = times_us.get(warmup..).filter(|k| !k.is_empty()).ok_or_else(|| {
        CliError::Config(format!("{} repetitions leave nothing after {warmup} warmup runs", times_us.len()))
    })?;
    let avg_us = kept.iter().sum::<f64>() / kept.len() as f64;
    let min_us = kept.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Summary { avg_us, min_us })
}
