//! Recovers wheel ratio thresholds from labeled wheel boxes.
//!
//! The three upper thresholds are searched on a regular grid over `(0, 1]`.
//! The winner misclassifies the fewest examples; among those, it keeps the
//! examples farthest from the thresholds (largest summed distance from each
//! example ratio to its nearest threshold). Remaining ties go to the first
//! triple in descending enumeration order.

use serde::{Deserialize, Serialize};

use crate::error::CalibrationError;
use crate::model::{BoundingBox, ClassifierConfig, WHEEL_FRACTIONS};

const LABEL_EPS: f64 = 1e-9;

/// Outcome of a threshold search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub thresholds: [f64; 3],
    pub misclassified: usize,
    pub margin: f64,
    pub config: ClassifierConfig,
}

/// Calibrates from wheel boxes labeled with the fraction they should map to.
pub fn calibrate_thresholds(
    labeled: &[(BoundingBox, f64)],
    grid_step: f64,
) -> Result<Calibration, CalibrationError> {
    let ratios: Vec<(f64, f64)> = labeled
        .iter()
        .map(|(b, f)| (b.aspect_ratio(), *f))
        .collect();
    calibrate_ratios(&ratios, grid_step)
}

/// Same as [`calibrate_thresholds`] on precomputed `(ratio, fraction)` pairs.
pub fn calibrate_ratios(
    labeled: &[(f64, f64)],
    grid_step: f64,
) -> Result<Calibration, CalibrationError> {
    if labeled.is_empty() {
        return Err(CalibrationError::Empty);
    }
    if !(grid_step > 0.0 && grid_step <= 0.25) {
        return Err(CalibrationError::GridStep(grid_step));
    }
    let mut examples = Vec::with_capacity(labeled.len());
    for &(ratio, fraction) in labeled {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(CalibrationError::RatioRange(ratio));
        }
        let class = WHEEL_FRACTIONS
            .iter()
            .position(|f| (f - fraction).abs() < LABEL_EPS)
            .ok_or(CalibrationError::UnknownFraction(fraction))?;
        examples.push((ratio, class));
    }
    let mut sorted = examples.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for pair in sorted.windows(2) {
        if pair[0].0 == pair[1].0 && pair[0].1 != pair[1].1 {
            return Err(CalibrationError::Conflict {
                ratio: pair[0].0,
                first: WHEEL_FRACTIONS[pair[0].1.min(pair[1].1)],
                second: WHEEL_FRACTIONS[pair[0].1.max(pair[1].1)],
            });
        }
    }

    let n = (1.0 / grid_step).round().max(4.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();

    // at_least[c][k]: examples of class c whose ratio is >= grid[k].
    let mut at_least = vec![vec![0usize; n + 2]; WHEEL_FRACTIONS.len()];
    for &(ratio, class) in &examples {
        let reach = grid.iter().rposition(|&t| t <= ratio).unwrap_or(0);
        for count in &mut at_least[class][..=reach] {
            *count += 1;
        }
    }
    let total: Vec<usize> = at_least.iter().map(|c| c[0]).collect();

    let mut best: Option<(usize, f64, [usize; 3])> = None;
    for k1 in (3..=n).rev() {
        for k2 in (2..k1).rev() {
            for k3 in (1..k2).rev() {
                let correct = at_least[0][k1]
                    + (at_least[1][k2] - at_least[1][k1])
                    + (at_least[2][k3] - at_least[2][k2])
                    + (total[3] - at_least[3][k3]);
                let wrong = examples.len() - correct;
                if best.is_some_and(|(w, _, _)| wrong > w) {
                    continue;
                }
                let t = [grid[k1], grid[k2], grid[k3]];
                let margin = margin_of(&examples, &t);
                let better = match best {
                    None => true,
                    Some((w, m, _)) => wrong < w || margin > m,
                };
                if better {
                    best = Some((wrong, margin, [k1, k2, k3]));
                }
            }
        }
    }

    let (misclassified, margin, ks) = best.expect("grid has at least one triple");
    let thresholds = [grid[ks[0]], grid[ks[1]], grid[ks[2]]];
    Ok(Calibration {
        thresholds,
        misclassified,
        margin,
        config: ClassifierConfig::default().with_thresholds(thresholds),
    })
}

/// Sum over examples of the distance to the closest threshold.
pub(crate) fn margin_of(examples: &[(f64, usize)], thresholds: &[f64; 3]) -> f64 {
    examples
        .iter()
        .map(|(r, _)| {
            thresholds
                .iter()
                .map(|t| (r - t).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}
