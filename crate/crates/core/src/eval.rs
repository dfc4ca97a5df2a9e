//! Aggregate statistics over report collections.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::ingest::pct;
use crate::model::{OcclusionBand, PartClass, VisibilityReport};

/// Pairwise (cascade) summation; error grows with `log n` instead of `n`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub visibility_min: f64,
    pub visibility_max: f64,
    pub visibility_mean: f64,
    pub occlusion_min: f64,
    pub occlusion_max: f64,
}

pub fn summarize(reports: &[VisibilityReport]) -> Result<Summary, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::Empty);
    }
    let vis: Vec<f64> = reports.iter().map(|r| r.visibility_pct).collect();
    let occ = reports.iter().map(|r| r.occlusion_pct);
    Ok(Summary {
        count: reports.len(),
        visibility_min: vis.iter().copied().fold(f64::INFINITY, f64::min),
        visibility_max: vis.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        visibility_mean: pairwise_sum(&vis) / vis.len() as f64,
        occlusion_min: occ.clone().fold(f64::INFINITY, f64::min),
        occlusion_max: occ.fold(f64::NEG_INFINITY, f64::max),
    })
}

impl Summary {
    /// One-line rendering used by the command-line tools.
    pub fn line(&self) -> String {
        format!(
            "count={} visibility min={:.1} max={:.1} mean={:.2} occlusion min={:.1} max={:.1}",
            self.count,
            self.visibility_min,
            self.visibility_max,
            self.visibility_mean,
            self.occlusion_min,
            self.occlusion_max
        )
    }
}

/// Report counts per band, indexed by [`OcclusionBand::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BandHistogram(pub [usize; 4]);

impl BandHistogram {
    pub fn count(&self, band: OcclusionBand) -> usize {
        self.0[band.index()]
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

pub fn band_histogram<'a, I>(bands: I) -> BandHistogram
where
    I: IntoIterator<Item = &'a OcclusionBand>,
{
    let mut h = BandHistogram::default();
    for b in bands {
        h.0[b.index()] += 1;
    }
    h
}

pub fn report_band_histogram(reports: &[VisibilityReport]) -> BandHistogram {
    band_histogram(reports.iter().map(|r| &r.band))
}

/// Rows are the exact (reference) band, columns the estimated band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BandConfusion(pub [[usize; 4]; 4]);

impl BandConfusion {
    pub fn total(&self) -> usize {
        self.0.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    /// Fraction of pairs on the diagonal; 1.0 for an empty matrix.
    pub fn agreement_rate(&self) -> f64 {
        match self.total() {
            0 => 1.0,
            t => self.trace() as f64 / t as f64,
        }
    }

    pub fn exact_marginal(&self) -> BandHistogram {
        BandHistogram(std::array::from_fn(|i| self.0[i].iter().sum()))
    }

    pub fn estimated_marginal(&self) -> BandHistogram {
        BandHistogram(std::array::from_fn(|j| (0..4).map(|i| self.0[i][j]).sum()))
    }

    pub fn render(&self) -> String {
        let mut out = String::from("exact \\ estimated");
        for b in OcclusionBand::ALL {
            let _ = write!(out, "\t{b}");
        }
        out.push('\n');
        for (i, b) in OcclusionBand::ALL.iter().enumerate() {
            let _ = write!(out, "{b}");
            for n in self.0[i] {
                let _ = write!(out, "\t{n}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn band_confusion(
    estimated: &[OcclusionBand],
    exact: &[OcclusionBand],
) -> Result<BandConfusion, EvalError> {
    if estimated.len() != exact.len() {
        return Err(EvalError::LengthMismatch {
            estimated: estimated.len(),
            exact: exact.len(),
        });
    }
    let mut m = BandConfusion::default();
    for (e, x) in estimated.iter().zip(exact) {
        m.0[x.index()][e.index()] += 1;
    }
    Ok(m)
}

const TABLE_HEADER: [&str; 6] = [
    "Scenario",
    "Wheel (%)",
    "Frame (%)",
    "Handlebar (%)",
    "Bicycle Visibility (%)",
    "Bicycle Occlusion (%)",
];

/// Frame and handlebar shares are whole numbers in the reference layout.
fn share(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        pct(v)
    }
}

fn table_rows(reports: &[VisibilityReport]) -> Vec<[String; 6]> {
    reports
        .iter()
        .map(|r| {
            let c = &r.part_contributions;
            let label = if reports.iter().filter(|o| o.image_id == r.image_id).count() > 1 {
                format!("{}#{}", r.image_id, r.bicycle_index)
            } else {
                r.image_id.clone()
            };
            [
                label,
                pct(c.total(PartClass::Wheel)),
                share(c.total(PartClass::Frame)),
                share(c.total(PartClass::Handlebar)),
                pct(r.visibility_pct),
                pct(r.occlusion_pct),
            ]
        })
        .collect()
}

/// Markdown table in the scenario summary layout.
pub fn render_markdown(reports: &[VisibilityReport]) -> String {
    let mut out = format!("| {} |\n", TABLE_HEADER.join(" | "));
    out.push_str("|---|---:|---:|---:|---:|---:|\n");
    for row in table_rows(reports) {
        let _ = writeln!(out, "| {} |", row.join(" | "));
    }
    out
}

/// CSV table in the scenario summary layout.
pub fn render_table_csv(reports: &[VisibilityReport]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_HEADER)?;
    for row in table_rows(reports) {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
