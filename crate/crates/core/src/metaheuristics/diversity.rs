/// Mean over dimensions of the mean absolute deviation from the
/// dimension-wise median. An empty population has zero diversity.
pub fn diversity(population: &[Vec<f64>]) -> f64 {
    let Some(first) = population.first() else {
        return 0.0;
    };
    let dim = first.len();
    if dim == 0 {
        return 0.0;
    }
    let n = population.len();
    let mut column = vec![0.0; n];
    let mut total = 0.0;
    for d in 0..dim {
        for (slot, row) in column.iter_mut().zip(population) {
            *slot = row[d];
        }
        column.sort_unstable_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            column[n / 2]
        } else {
            0.5 * (column[n / 2 - 1] + column[n / 2])
        };
        total += column.iter().map(|x| (x - median).abs()).sum::<f64>() / n as f64;
    }
    total / dim as f64
}

/// Running maximum of the diversity, for the exploration percentage.
#[derive(Debug, Clone, Default)]
pub struct DiversityTracker {
    max: f64,
}

impl DiversityTracker {
    /// `100 · div / max-so-far`, counting `div` itself; 0 while nothing
    /// has been diverse.
    pub fn exploration_pct(&mut self, div: f64) -> f64 {
        self.max = self.max.max(div);
        if self.max > 0.0 {
            100.0 * (div / self.max)
        } else {
            0.0
        }
    }

    pub fn max(&self) -> f64 {
        self.max
    }
}
