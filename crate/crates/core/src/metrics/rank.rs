use serde::{Deserialize, Serialize};

/// Ranks `values` ascending (1-based); exact ties share the mean of the
/// positions they occupy.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let shared = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = shared;
        }
        start = end;
    }
    ranks
}

/// Ranked items, keyed by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSeries {
    pub pairs: Vec<(String, f64)>,
}

impl RankSeries {
    /// Ranks raw scores with [`average_ranks`].
    pub fn from_scores<I, S>(scores: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let (ids, values): (Vec<String>, Vec<f64>) = scores.into_iter().map(|(id, v)| (id.into(), v)).unzip();
        let ranks = average_ranks(&values);
        RankSeries {
            pairs: ids.into_iter().zip(ranks).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }
}
