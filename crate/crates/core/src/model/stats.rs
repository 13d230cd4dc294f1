use crate::{Error, Result};

/// Summary of a table of phases: moments, support and a histogram.
///
/// `std` is the population standard deviation (divides by the element
/// count). The histogram has equal-width bins spanning `[min, max]`; values
/// equal to `max` land in the last bin.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetSummary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// `bins + 1` edges.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn offset_statistics<'a, I>(values: I, bins: usize) -> Result<OffsetSummary>
where
    I: IntoIterator<Item = &'a f64>,
{
    let values: Vec<f64> = values.into_iter().copied().collect();
    if values.is_empty() {
        return Err(Error::EmptyInput("offset table"));
    }
    if bins == 0 {
        return Err(Error::InvalidConfig("histogram needs at least one bin".into()));
    }
    let count = values.len();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mean, std) = if min == max {
        (min, 0.0)
    } else {
        let mean = values.iter().sum::<f64>() / count as f64;
        (mean, (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64).sqrt())
    };

    let width = (max - min) / bins as f64;
    let bin_edges = (0..=bins).map(|i| min + width * i as f64).collect();
    let mut counts = vec![0; bins];
    for v in &values {
        let idx = if width > 0.0 {
            (((v - min) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    Ok(OffsetSummary {
        count,
        mean,
        std,
        min,
        max,
        bin_edges,
        counts,
    })
}
