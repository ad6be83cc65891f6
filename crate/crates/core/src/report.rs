//! Comparison records shared by the oracles and the harness.

/// Relative errors are only defined where the predicted value exceeds this.
pub const REL_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub t: usize,
    pub x: usize,
    pub r: usize,
    pub simulated: f64,
    pub predicted: f64,
    pub abs_err: f64,
    pub rel_err: Option<f64>,
}

impl ReportRow {
    pub fn new(t: usize, x: usize, r: usize, simulated: f64, predicted: f64) -> Self {
        let abs_err = (simulated - predicted).abs();
        let rel_err = (predicted.abs() > REL_FLOOR).then(|| abs_err / predicted.abs());
        ReportRow { t, x, r, simulated, predicted, abs_err, rel_err }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Summary {
    pub max_abs_err: f64,
    pub mean_abs_err: f64,
    pub max_rel_err: Option<f64>,
    pub ks: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LimitReport {
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
}

impl LimitReport {
    pub fn from_rows(rows: Vec<ReportRow>) -> Self {
        let n = rows.len().max(1) as f64;
        let max_abs_err = rows.iter().map(|r| r.abs_err).fold(0.0, f64::max);
        let mean_abs_err = rows.iter().map(|r| r.abs_err).sum::<f64>() / n;
        let max_rel_err = rows.iter().filter_map(|r| r.rel_err).reduce(f64::max);
        LimitReport { rows, summary: Summary { max_abs_err, mean_abs_err, max_rel_err, ks: None } }
    }

    /// Largest relative error among rows whose prediction exceeds `floor`.
    pub fn max_rel_err_above(&self, floor: f64) -> Option<f64> {
        self.rows.iter().filter(|r| r.predicted > floor).filter_map(|r| r.rel_err).reduce(f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rel_err_floor() {
        let r = ReportRow::new(0, 0, 0, 1e-12, 0.0);
        assert_eq!(r.rel_err, None);
        let r = ReportRow::new(0, 0, 0, 1.1, 1.0);
        assert!((r.rel_err.unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn summary() {
        let rep = LimitReport::from_rows(vec![ReportRow::new(0, 0, 0, 1.0, 1.0), ReportRow::new(1, 0, 0, 0.5, 0.25)]);
        assert_eq!(rep.summary.max_abs_err, 0.25);
        assert_eq!(rep.summary.mean_abs_err, 0.125);
        assert_eq!(rep.summary.max_rel_err, Some(1.0));
        assert_eq!(rep.max_rel_err_above(0.3), Some(0.0));
    }
}
