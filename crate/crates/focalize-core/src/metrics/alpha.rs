use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Units (rows) by annotators (columns) of nominal values; `None` is a
/// missing cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReliabilityMatrix<L> {
    n_annotators: usize,
    units: Vec<Vec<Option<L>>>,
}

impl<L: Ord + Clone> ReliabilityMatrix<L> {
    pub fn new(n_annotators: usize) -> Result<Self, MetricsError> {
        if n_annotators < 2 {
            return Err(MetricsError::TooFewAnnotators(n_annotators));
        }
        Ok(Self {
            n_annotators,
            units: Vec::new(),
        })
    }

    /// Build from rows. Every row must have one cell per annotator.
    pub fn from_rows(rows: Vec<Vec<Option<L>>>) -> Result<Self, MetricsError> {
        let n = rows.first().map_or(0, Vec::len);
        let mut m = Self::new(n)?;
        for row in rows {
            m.push_unit(row)?;
        }
        Ok(m)
    }

    pub fn push_unit(&mut self, row: Vec<Option<L>>) -> Result<(), MetricsError> {
        if row.len() != self.n_annotators {
            return Err(MetricsError::RaggedMatrix);
        }
        self.units.push(row);
        Ok(())
    }

    pub fn n_annotators(&self) -> usize {
        self.n_annotators
    }

    pub fn units(&self) -> &[Vec<Option<L>>] {
        &self.units
    }
}

/// Krippendorff's alpha with its bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaResult {
    pub alpha: f64,
    /// Every pairable value was identical, so expected disagreement is zero;
    /// `alpha` is reported as 1.
    pub degenerate: bool,
    pub units_retained: usize,
    /// Number of pairable values `n`.
    pub pairable_values: usize,
}

/// Nominal Krippendorff's alpha via the coincidence matrix.
///
/// Each unit with `m >= 2` values adds `1 / (m - 1)` to `o[c][k]` for every
/// ordered pair of its values taken from different annotators. Then
/// `D_o = sum_{c!=k} o[c][k] / n`, `D_e = sum_{c!=k} n_c n_k / (n (n - 1))` and
/// `alpha = 1 - D_o / D_e`. Units with fewer than two values are dropped.
pub fn krippendorff_alpha<L: Ord + Clone>(
    matrix: &ReliabilityMatrix<L>,
) -> Result<AlphaResult, MetricsError> {
    let mut index: BTreeMap<&L, usize> = BTreeMap::new();
    for v in matrix.units.iter().flatten().flatten() {
        let next = index.len();
        index.entry(v).or_insert(next);
    }
    let k = index.len();
    let mut o = vec![vec![0.0f64; k]; k];
    let mut units_retained = 0;
    let mut values: Vec<usize> = Vec::with_capacity(matrix.n_annotators);
    for unit in &matrix.units {
        values.clear();
        values.extend(unit.iter().flatten().map(|v| index[v]));
        let m = values.len();
        if m < 2 {
            continue;
        }
        units_retained += 1;
        // Tally value counts per unit: pairs (c,k), c != k, number n_uc * n_uk;
        // pairs (c,c) number n_uc * (n_uc - 1).
        let mut counts = vec![0usize; k];
        for &v in &values {
            counts[v] += 1;
        }
        let w = 1.0 / (m - 1) as f64;
        for (c, &nc) in counts.iter().enumerate().filter(|(_, n)| **n > 0) {
            for (d, &nd) in counts.iter().enumerate().filter(|(_, n)| **n > 0) {
                let pairs = if c == d { nc * (nc - 1) } else { nc * nd };
                o[c][d] += pairs as f64 * w;
            }
        }
    }
    if units_retained == 0 {
        return Err(MetricsError::NoPairableUnits);
    }
    let marginals: Vec<f64> = o.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = marginals.iter().sum();
    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for d in 0..k {
            if c != d {
                observed += o[c][d];
                expected += marginals[c] * marginals[d];
            }
        }
    }
    let pairable_values = libm::round(n) as usize;
    if expected == 0.0 {
        return Ok(AlphaResult {
            alpha: 1.0,
            degenerate: true,
            units_retained,
            pairable_values,
        });
    }
    let d_o = observed / n;
    let d_e = expected / (n * (n - 1.0));
    Ok(AlphaResult {
        alpha: 1.0 - d_o / d_e,
        degenerate: false,
        units_retained,
        pairable_values,
    })
}
