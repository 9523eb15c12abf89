//! Small numeric helpers shared by the oracles and estimators.

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Factors above which `1 - prod(1 - w)` switches to log space.
pub(crate) const LOG_SPACE_FACTORS: usize = 32;

/// Probability that at least one of independent events with probabilities
/// `probs` happens, i.e. `1 - prod(1 - p)`.
pub fn at_least_one(probs: &[f64]) -> f64 {
    if probs.len() > LOG_SPACE_FACTORS {
        let log_none: f64 = probs.iter().map(|&p| (-p).ln_1p()).sum();
        -log_none.exp_m1()
    } else {
        probs.iter().fold(0.0, |acc, &p| acc + p * (1.0 - acc))
    }
}

/// `ceil(log2(max(n, 2)))`, used wherever a logarithm of the node count
/// enters a sample budget.
pub fn log2_nodes(n: usize) -> u32 {
    let n = n.max(2) as u64;
    64 - (n - 1).leading_zeros()
}
