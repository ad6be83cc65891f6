//! Experiment runners. Each returns a [`Table`] ready for CSV output.

use crate::config::{CompareMode, Experiment, WalkKind};
use crate::HarnessError;
use qwalk::coin::classify_regime;
use qwalk::genfun::{gen_amplitudes, GenFunContext};
use qwalk::reduced::{prob_at, ReducedWalk};
use qwalk::report::{LimitReport, ReportRow};
use qwalk::theory::{corollary_halfline_measure, limit_measure, localization_asymptotic, localization_terms, oscillation_sum_rule};
use qwalk::walker::{joined_probabilities, step_joined, tree_reduce_compare, WalkState, DEFAULT_MAX_DEPTH};

pub const COMPARE_TOLERANCE: f64 = 0.01;
pub const GENFUN_TOLERANCE: f64 = 1e-8;
pub const KS_TOLERANCE: f64 = 0.02;
pub const TREE_TOLERANCE: f64 = 1e-10;

/// Fit range for the decay rate in fig3.
const FIT_X: (usize, usize) = (2, 12);
/// Scaled positions beyond |a| + this count as leakage.
const TAIL_MARGIN: f64 = 0.02;

/// CSV body plus `# key=value` footer lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub footer: Vec<(String, String)>,
    pub failed: bool,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new(), footer: Vec::new(), failed: false }
    }

    fn note(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.footer.push((key.into(), value.into()));
    }

    /// Records tolerance, max error and the verdict.
    fn verdict(&mut self, tolerance: f64, max_error: f64, failed: bool) {
        self.failed |= failed;
        self.note("tolerance", num(tolerance));
        self.note("max_error", num(max_error));
        self.note("status", if self.failed { "FAIL" } else { "PASS" });
    }

    pub fn footer_value(&self, key: &str) -> Option<&str> {
        self.footer.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write<W: std::io::Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let mut out = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
        for (k, v) in &self.footer {
            writeln!(out, "# {k}={v}").map_err(|e| HarnessError::Io(e.to_string()))?;
        }
        Ok(())
    }
}

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn report_rows(table: &mut Table, rep: &LimitReport) {
    for r in &rep.rows {
        table.rows.push(vec![
            r.t.to_string(),
            r.x.to_string(),
            r.r.to_string(),
            num(r.simulated),
            num(r.predicted),
            num(r.abs_err),
            opt_num(r.rel_err),
        ]);
    }
}

const REPORT_HEADER: [&str; 7] = ["t", "x", "r", "simulated", "predicted", "abs_err", "rel_err"];

/// Relative peak-to-peak variation: (max − min)/mean.
pub fn relative_spread(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let hi = v.iter().cloned().fold(f64::MIN, f64::max);
    let lo = v.iter().cloned().fold(f64::MAX, f64::min);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    if mean == 0.0 {
        0.0
    } else {
        (hi - lo) / mean
    }
}

/// P(X_{t,r} = x) for x ≤ x_max at the final time, for every branch.
pub fn run_simulate(exp: &Experiment, t: usize) -> Result<Table, HarnessError> {
    let x_max = exp.config.options.x_max.unwrap_or(t).min(t);
    let k = exp.psi.kappa();
    let mut table = Table::new(&["t", "x", "r", "probability"]);
    let norm = match exp.config.options.walk {
        WalkKind::Reduced => {
            let s = ReducedWalk::new(&exp.coin, &exp.params).evolve(t);
            for r in 0..k {
                for x in 0..=x_max {
                    table.rows.push(vec![t.to_string(), x.to_string(), r.to_string(), num(prob_at(&s, &exp.psi, r, x))]);
                }
            }
            s.norm_sqr()
        }
        WalkKind::Joined => {
            let mut s = WalkState::initial(&exp.psi, t);
            for _ in 0..t {
                s = step_joined(&s, exp.coin.matrix())?;
            }
            let p = joined_probabilities(&s);
            for r in 0..k {
                for x in 0..=x_max {
                    table.rows.push(vec![t.to_string(), x.to_string(), r.to_string(), num(p.get(r, x))]);
                }
            }
            s.norm_sqr()
        }
    };
    table.note("walk", format!("{:?}", exp.config.options.walk).to_lowercase());
    table.note("norm_defect", num((norm - 1.0).abs()));
    Ok(table)
}

/// Localization terms at time t and the weak-limit masses per branch.
pub fn run_theory(exp: &Experiment, t: usize) -> Result<Table, HarnessError> {
    let x_max = exp.config.options.x_max.unwrap_or(20);
    let (p, psi) = (&exp.params, &exp.psi);
    let mut table = Table::new(&["t", "x", "r", "lm", "lp", "lc", "predicted"]);
    let mut sum_rule = 0.0f64;
    for x in 0..=x_max {
        sum_rule = sum_rule.max(oscillation_sum_rule(t, x, p, psi).abs());
        for r in 0..psi.kappa() {
            let l = localization_terms(t, x, r, p, psi);
            table.rows.push(vec![
                t.to_string(),
                x.to_string(),
                r.to_string(),
                num(l.lm),
                num(l.lp),
                num(l.lc),
                num(localization_asymptotic(t, x, r, p, psi)),
            ]);
        }
    }
    let reg = classify_regime(p);
    table.note("regime", format!("lm={} lp={} lc={}", reg.has_lm, reg.has_lp, reg.has_lc));
    let mut total = 0.0;
    for r in 0..psi.kappa() {
        let m = limit_measure(r, p, psi);
        let d = m.density_mass();
        total += m.atom + d;
        table.note(format!("atom_r{r}"), num(m.atom));
        table.note(format!("density_mass_r{r}"), num(d));
    }
    table.note("total_mass", num(total));
    table.note("max_sum_rule", num(sum_rule));
    Ok(table)
}

/// Simulated and predicted P(X_{t,r} = x) at one x over a window of t.
#[derive(Debug, Clone)]
pub struct Fig2Result {
    pub report: LimitReport,
    /// Relative spread of the simulated values over t with t + x even.
    pub simulated_spread: f64,
    pub predicted_spread: f64,
}

pub fn run_fig2(exp: &Experiment, x: usize, t_min: usize, t_max: usize) -> Fig2Result {
    let r = exp.config.options.r;
    let walk = ReducedWalk::new(&exp.coin, &exp.params);
    let mut rows = Vec::new();
    walk.evolve_with(t_max, |s| {
        if s.time >= t_min {
            let sim = if x <= s.time { prob_at(s, &exp.psi, r, x) } else { 0.0 };
            rows.push(ReportRow::new(s.time, x, r, sim, localization_asymptotic(s.time, x, r, &exp.params, &exp.psi)));
        }
    });
    let live: Vec<&ReportRow> = rows.iter().filter(|row| (row.t + x).is_multiple_of(2)).collect();
    let sims: Vec<f64> = live.iter().map(|row| row.simulated).collect();
    let preds: Vec<f64> = live.iter().map(|row| row.predicted).collect();
    Fig2Result { simulated_spread: relative_spread(&sims), predicted_spread: relative_spread(&preds), report: LimitReport::from_rows(rows) }
}

/// Simulated and predicted P(X_{t,r} = x) over x at one t, with a fitted decay rate.
#[derive(Debug, Clone)]
pub struct Fig3Result {
    pub report: LimitReport,
    /// −slope of ln P against x over the fit range.
    pub fitted_rate: Option<f64>,
    /// ln(K_+/|a|²) when L_p is present.
    pub rate_plus: Option<f64>,
    /// ln(K_−/|a|²) when L_m is present.
    pub rate_minus: Option<f64>,
}

pub fn run_fig3(exp: &Experiment, t: usize, x_max: usize) -> Fig3Result {
    let r = exp.config.options.r;
    let p = &exp.params;
    let s = ReducedWalk::new(&exp.coin, p).evolve(t);
    let rows: Vec<ReportRow> = (0..=x_max.min(t))
        .map(|x| ReportRow::new(t, x, r, prob_at(&s, &exp.psi, r, x), localization_asymptotic(t, x, r, p, &exp.psi)))
        .collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| (FIT_X.0..=FIT_X.1).contains(&row.x) && row.predicted > exp.config.options.pred_floor && row.simulated > 0.0)
        .map(|row| (row.x as f64, row.simulated.ln()))
        .collect();
    let fitted_rate = (pts.len() >= 2).then(|| -slope(&pts));
    let reg = classify_regime(p);
    let a2 = p.abs_a * p.abs_a;
    Fig3Result {
        report: LimitReport::from_rows(rows),
        fitted_rate,
        rate_plus: reg.has_lp.then(|| (p.k_plus / a2).ln()),
        rate_minus: reg.has_lm.then(|| (p.k_minus / a2).ln()),
    }
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone)]
pub struct Fig4Bin {
    pub lo: f64,
    pub hi: f64,
    pub empirical: f64,
    pub theoretical: f64,
}

/// Scaled distribution of X_{t,r}/t against the weak limit.
#[derive(Debug, Clone)]
pub struct Fig4Result {
    pub t: usize,
    pub bins: Vec<Fig4Bin>,
    /// KS distance on [window/t, |a|) after renormalising both sides.
    pub ks: f64,
    /// Simulated mass at x < window.
    pub near_zero_mass: f64,
    pub atom: f64,
    /// Simulated mass at x/t > |a| + 0.02.
    pub tail_mass: f64,
    /// For κ = 1, max |density − half-line corollary density| on a grid.
    pub corollary_diff: Option<f64>,
}

pub fn run_fig4(exp: &Experiment, t: usize) -> Fig4Result {
    let opts = &exp.config.options;
    let (r, w) = (opts.r, opts.near_zero_window);
    let p = &exp.params;
    let s = ReducedWalk::new(&exp.coin, p).evolve(t);
    let probs: Vec<f64> = (0..=t).map(|x| prob_at(&s, &exp.psi, r, x)).collect();
    let m = limit_measure(r, p, &exp.psi);
    let tf = t as f64;
    let a = p.abs_a;

    let near_zero_mass: f64 = probs.iter().take(w).sum();
    let tail_mass: f64 = probs.iter().enumerate().filter(|(x, _)| *x as f64 / tf > a + TAIL_MARGIN).map(|(_, v)| v).sum();

    // Empirical points on [w/t, |a|) and the theoretical CDF at each of them.
    let lo = w as f64 / tf;
    let pts: Vec<(f64, f64)> = probs.iter().enumerate().skip(w).map(|(x, v)| (x as f64 / tf, *v)).take_while(|(y, _)| *y < a).collect();
    let emp_total: f64 = pts.iter().map(|p| p.1).sum();
    let theo_total = m.mass(lo, a);
    let mut ks = 0.0f64;
    let (mut emp_cdf, mut theo_cdf, mut prev) = (0.0, 0.0, lo);
    for &(y, v) in &pts {
        theo_cdf += m.mass(prev, y) / theo_total;
        prev = y;
        ks = ks.max((emp_cdf - theo_cdf).abs());
        emp_cdf += v / emp_total;
        ks = ks.max((emp_cdf - theo_cdf).abs());
    }
    ks = ks.max((emp_cdf - 1.0).abs());

    let nb = opts.bins;
    let width = (a - lo) / nb as f64;
    let bins = (0..nb)
        .map(|i| {
            let (bl, bh) = (lo + i as f64 * width, lo + (i + 1) as f64 * width);
            let empirical = pts.iter().filter(|(y, _)| *y >= bl && (*y < bh || i + 1 == nb)).map(|p| p.1).sum();
            Fig4Bin { lo: bl, hi: bh, empirical, theoretical: m.mass(bl, bh) }
        })
        .collect();

    let corollary_diff = corollary_halfline_measure(p)
        .ok()
        .map(|c| (0..200).map(|i| a * i as f64 / 200.0).map(|y| (c.density(y) - m.density(y)).abs()).fold(0.0, f64::max));
    Fig4Result { t, bins, ks, near_zero_mass, atom: m.atom, tail_mass, corollary_diff }
}

/// `compare`: fig2 or fig3 as a table with a relative-error verdict.
pub fn compare(exp: &Experiment, t: usize, tolerance: Option<f64>) -> Result<Table, HarnessError> {
    let opts = &exp.config.options;
    let tol = tolerance.unwrap_or(COMPARE_TOLERANCE);
    let mut table = Table::new(&REPORT_HEADER);
    let report = match opts.mode {
        CompareMode::Fig2 => {
            let t_min = opts.t_min.unwrap_or(t.saturating_sub(100));
            if t_min > t {
                return Err(HarnessError::Validation(format!("options.t_min = {t_min} exceeds t = {t}")));
            }
            let res = run_fig2(exp, opts.x, t_min, t);
            table.note("mode", "fig2");
            table.note("simulated_spread", num(res.simulated_spread));
            table.note("predicted_spread", num(res.predicted_spread));
            res.report
        }
        CompareMode::Fig3 => {
            let res = run_fig3(exp, t, opts.x_max.unwrap_or(10));
            table.note("mode", "fig3");
            table.note("fitted_rate", opt_num(res.fitted_rate));
            table.note("rate_plus", opt_num(res.rate_plus));
            table.note("rate_minus", opt_num(res.rate_minus));
            res.report
        }
    };
    report_rows(&mut table, &report);
    let err = report.max_rel_err_above(opts.pred_floor).unwrap_or(0.0);
    table.note("pred_floor", num(opts.pred_floor));
    table.note("max_abs_err", num(report.summary.max_abs_err));
    table.verdict(tol, err, err > tol);
    Ok(table)
}

/// `genfun-check`: series coefficients against reduced-walk amplitudes.
pub fn genfun_check(exp: &Experiment, t_max: usize, tolerance: Option<f64>) -> Result<Table, HarnessError> {
    let tol = tolerance.unwrap_or(GENFUN_TOLERANCE);
    let x_max = exp.config.options.x_max.unwrap_or(20);
    let ctx = GenFunContext::new(&exp.coin, &exp.params);
    let mut walk = Vec::with_capacity(t_max + 1);
    ReducedWalk::new(&exp.coin, &exp.params).evolve_with(t_max, |s| {
        walk.push((0..=x_max).map(|x| if x <= s.time { s.components(x) } else { Default::default() }).collect::<Vec<_>>());
    });
    let mut table = Table::new(&["t", "x", "component", "series_re", "series_im", "walk_re", "walk_im", "abs_err"]);
    let mut max_err = 0.0f64;
    for x in 0..=x_max {
        let series = gen_amplitudes(&ctx, x, t_max + 1)?;
        for (t, w) in walk.iter().enumerate() {
            for (k, s) in series.iter().enumerate() {
                let (sv, wv) = (s.coeff(t), w[x][k]);
                let e = (sv - wv).norm();
                max_err = max_err.max(e);
                table.rows.push(vec![t.to_string(), x.to_string(), k.to_string(), num(sv.re), num(sv.im), num(wv.re), num(wv.im), num(e)]);
            }
        }
    }
    table.verdict(tol, max_err, !(max_err <= tol));
    Ok(table)
}

/// `scaled-dist`: histogram of X_{t,r}/t against the limit density.
pub fn scaled_dist(exp: &Experiment, t: usize, tolerance: Option<f64>) -> Result<Table, HarnessError> {
    if t <= exp.config.options.near_zero_window {
        return Err(HarnessError::Validation(format!("t = {t} must exceed options.near_zero_window")));
    }
    let tol = tolerance.unwrap_or(KS_TOLERANCE);
    let atol = exp.config.options.atom_tolerance;
    let res = run_fig4(exp, t);
    let mut table = Table::new(&["bin_lo", "bin_hi", "empirical", "theoretical"]);
    for b in &res.bins {
        table.rows.push(vec![num(b.lo), num(b.hi), num(b.empirical), num(b.theoretical)]);
    }
    let atom_err = (res.near_zero_mass - res.atom).abs();
    table.note("t", t.to_string());
    table.note("near_zero_mass", num(res.near_zero_mass));
    table.note("atom", num(res.atom));
    table.note("atom_error", num(atom_err));
    table.note("atom_tolerance", num(atol));
    table.note("tail_mass", num(res.tail_mass));
    if let Some(d) = res.corollary_diff {
        table.note("corollary_density_diff", num(d));
    }
    table.note("ks", num(res.ks));
    table.verdict(tol, res.ks, !(res.ks <= tol) || !(atom_err <= atol));
    Ok(table)
}

/// `tree-check`: tree shells against the reduced walk on 𝕁_{κ′}.
pub fn tree_check(exp: &Experiment, t_max: usize, tolerance: Option<f64>) -> Result<Table, HarnessError> {
    let tol = tolerance.unwrap_or(TREE_TOLERANCE);
    let kp = exp.config.kappa_prime.unwrap_or(exp.config.kappa);
    let depth = exp.config.options.max_depth.unwrap_or(DEFAULT_MAX_DEPTH);
    let rep = tree_reduce_compare(exp.config.kappa, kp, exp.omega, &exp.psi, t_max, depth)?;
    let mut table = Table::new(&REPORT_HEADER);
    report_rows(&mut table, &rep);
    table.verdict(tol, rep.summary.max_abs_err, !(rep.summary.max_abs_err <= tol));
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn exp(extra: &str, phase: f64, kappa: usize) -> Experiment {
        let psi = if kappa == 3 {
            r#"{"polar": [[0.5773502691896258, 10], [0.5773502691896258, 30], [0.5773502691896258, 340]]}"#.to_string()
        } else {
            "\"symmetric\"".to_string()
        };
        let text = format!(
            r#"{{"kappa": {kappa}, "coin": {{"type": "hadamard", "phase_deg": {phase}}}, "psi": {psi}, "t_max": 400, "options": {{{extra}}}}}"#
        );
        ExperimentConfig::from_json(&text).unwrap().validate(false).unwrap()
    }

    #[test]
    fn spread_and_slope() {
        assert_eq!(relative_spread(&[]), 0.0);
        assert!((relative_spread(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 3.0 - 0.5 * i as f64)).collect();
        assert!((slope(&pts) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.rows.push(vec!["1".into(), num(0.5)]);
        t.verdict(0.1, 0.2, true);
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "a,b\n1,5e-1\n# tolerance=1e-1\n# max_error=2e-1\n# status=FAIL\n");
        assert_eq!(t.footer_value("status"), Some("FAIL"));
    }

    #[test]
    fn fig3_parity_rows_are_zero() {
        let res = run_fig3(&exp("", 80.0, 3), 400, 10);
        for row in res.report.rows.iter().filter(|r| (r.t + r.x) % 2 == 1) {
            assert_eq!(row.predicted, 0.0);
            assert!(row.simulated < 1e-28);
        }
    }

    #[test]
    fn fig3_rate_for_phi0() {
        let res = run_fig3(&exp("", 0.0, 3), 4000, 12);
        assert!(res.rate_minus.is_none());
        assert!((res.fitted_rate.unwrap() - res.rate_plus.unwrap()).abs() < 0.05);
    }

    #[test]
    fn fig2_predicted_flat_only_without_cross_term() {
        let flat = run_fig2(&exp("", 0.0, 3), 1, 300, 400);
        assert_eq!(flat.predicted_spread, 0.0);
        let osc = run_fig2(&exp("", 80.0, 3), 1, 300, 400);
        assert!(osc.predicted_spread > 0.1);
        assert_eq!(osc.report.rows.len(), 101);
    }

    #[test]
    fn fig4_masses_are_consistent() {
        let e = exp("\"bins\": 20", 80.0, 3);
        let res = run_fig4(&e, 400);
        assert_eq!(res.bins.len(), 20);
        let theo: f64 = res.bins.iter().map(|b| b.theoretical).sum();
        let m = limit_measure(0, &e.params, &e.psi);
        assert!((theo - m.mass(10.0 / 400.0, e.params.abs_a)).abs() < 1e-9);
        assert!(res.tail_mass < 1e-3);
        assert!(res.corollary_diff.is_none());
    }

    #[test]
    fn half_line_reports_corollary_agreement() {
        let res = run_fig4(&exp("", 0.0, 1), 300);
        assert!(res.corollary_diff.unwrap() < 1e-12);
    }

    #[test]
    fn scaled_dist_rejects_short_time() {
        assert!(matches!(scaled_dist(&exp("", 0.0, 3), 5, None), Err(HarnessError::Validation(_))));
    }
}
