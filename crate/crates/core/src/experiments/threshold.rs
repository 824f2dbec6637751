use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::stats;

use super::{run_concentration, ConcentrationReport, ExperimentConfig};

/// Points in an automatic grid spanning the sampled margins.
const AUTO_GRID_POINTS: usize = 41;

/// Feasibility frequencies `P(M_q <= delta)` over a grid and the crossing window.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub grid: Vec<f64>,
    pub freq_raw: Vec<f64>,
    /// Pool-adjacent-violators fit of `freq_raw`.
    pub freq_isotonic: Vec<f64>,
    pub delta_05: Option<f64>,
    pub delta_95: Option<f64>,
    /// `delta_95 - delta_05` when both crossings lie inside the grid.
    pub window: Option<f64>,
    /// The grid starts at or above the 5% level.
    pub out_of_range_low: bool,
    /// The grid ends below the 95% level.
    pub out_of_range_high: bool,
}

fn auto_grid(margins: &[f64]) -> Result<Vec<f64>> {
    let lo = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::Degenerate("all sampled margins coincide; supply a grid".into()));
    }
    let step = (hi - lo) / (AUTO_GRID_POINTS - 1) as f64;
    Ok((0..AUTO_GRID_POINTS)
        .map(|k| if k + 1 == AUTO_GRID_POINTS { hi } else { lo + k as f64 * step })
        .collect())
}

/// Threshold curve from given margin samples; `grid = None` uses 41 points over `[min, max]`.
pub fn threshold_from_margins(margins: &[f64], grid: Option<&[f64]>) -> Result<ThresholdReport> {
    if margins.is_empty() {
        return invalid("no margin samples");
    }
    let grid = match grid {
        Some(g) => {
            if g.len() < 3 {
                return invalid("threshold grid needs at least three points");
            }
            if g.windows(2).any(|w| !(w[1] > w[0])) {
                return invalid("threshold grid must be strictly increasing");
            }
            g.to_vec()
        }
        None => auto_grid(margins)?,
    };
    let total = margins.len() as f64;
    let freq_raw: Vec<f64> = grid
        .iter()
        .map(|&d| margins.iter().filter(|&&m| m <= d).count() as f64 / total)
        .collect();
    let freq_isotonic = stats::isotonic(&freq_raw);
    let delta_05 = stats::crossing(&grid, &freq_isotonic, 0.05);
    let delta_95 = stats::crossing(&grid, &freq_isotonic, 0.95);
    let out_of_range_low = freq_isotonic[0] >= 0.05;
    let out_of_range_high = *freq_isotonic.last().expect("nonempty grid") < 0.95;
    let window = match (delta_05, delta_95) {
        (Some(lo), Some(hi)) if !out_of_range_low && !out_of_range_high => Some(hi - lo),
        _ => None,
    };
    Ok(ThresholdReport {
        grid,
        freq_raw,
        freq_isotonic,
        delta_05,
        delta_95,
        window,
        out_of_range_low,
        out_of_range_high,
    })
}

/// Runs the concentration experiment and derives the threshold curve from its margins.
pub fn run_threshold<T: Real>(
    config: &ExperimentConfig,
    grid: Option<&[f64]>,
) -> Result<(ConcentrationReport, ThresholdReport)> {
    let report = run_concentration::<T>(config)?;
    let threshold = threshold_from_margins(&report.margins, grid)?;
    Ok((report, threshold))
}
