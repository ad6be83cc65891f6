//! Closed-form long-time results: localization (t fixed parity, x fixed) and
//! the weak limit of X_{t,r}/t.

use crate::coin::{classify_regime, DerivedParams, InitialState};
use num_complex::Complex64 as C64;
use quadrature::double_exponential;
use std::f64::consts::PI;
use thiserror::Error;

const QUAD_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Initial-state weights for branch r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaTriple {
    /// |ψ_r|².
    pub theta1: f64,
    /// ψ̄_r Σ_{j≠r} ψ_j.
    pub theta2: C64,
    /// |Σ_{j≠r} ψ_j|², i.e. Σ_{j≠r}|ψ_j|² plus the cross terms over unordered pairs.
    pub theta3: f64,
}

impl ThetaTriple {
    pub fn new(psi: &InitialState, r: usize) -> Self {
        let pr = psi.get(r);
        let s = psi.others(r);
        ThetaTriple { theta1: pr.norm_sqr(), theta2: pr.conj() * s, theta3: s.norm_sqr() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationTerms {
    pub lm: f64,
    pub lp: f64,
    pub lc: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma_times: C64,
}

fn parity(t: usize, x: usize) -> f64 {
    if (t + x).is_multiple_of(2) {
        1.0
    } else {
        0.0
    }
}

fn gated(on: bool, v: f64) -> f64 {
    if on {
        v
    } else {
        0.0
    }
}

fn coin_c(p: &DerivedParams) -> C64 {
    C64::from_polar(p.abs_c, p.phi)
}

/// Γ_+(x) for `sign = +1`, Γ_−(x) for `sign = −1`.
pub fn gamma_pm(p: &DerivedParams, x: usize, sign: f64) -> f64 {
    let k = if sign > 0.0 { p.k_plus } else { p.k_minus };
    let a2 = p.abs_a * p.abs_a;
    let base = p.b_kappa.powi(2) * p.abs_c.powi(2) * (p.cos_phi + sign * p.abs_c).powi(2) / (k * k);
    if x == 0 {
        base
    } else {
        base * (a2 / k).powi(x as i32 - 1) * (1.0 + a2 / k)
    }
}

/// Half angle of K_×/K̄_×, so that √(K_×/K̄_×) = e^{i·half}.
fn half_angle(p: &DerivedParams) -> f64 {
    (p.k_times / p.k_times.conj()).arg() / 2.0
}

/// Γ_×(x, t). The phase (√(K_×/K̄_×))^{t+1} is e^{i(t+1)·arg(K_×/K̄_×)/2}.
pub fn gamma_times(p: &DerivedParams, x: usize, t: usize) -> C64 {
    let h = half_angle(p);
    let a2 = p.abs_a * p.abs_a;
    let kx = p.k_times;
    let pref = C64::from_polar(1.0, (t + 1) as f64 * h) * p.abs_c.powi(2) * (p.cos_phi.powi(2) - p.abs_c.powi(2)) / (kx * kx);
    let tail =
        if x == 0 { -C64::from_polar(1.0, h) } else { (a2 / (p.k_plus * p.k_minus).sqrt()).powi(x as i32 - 1) * (1.0 - a2 / kx.conj()) };
    pref * tail
}

/// L_m, L_p^r, L_c^r and the Γ's at (x, t) for branch r.
///
/// L_c^r = −2b_κ² Re[Γ_×(x,t) (Σ_j ψ̄_j)(Σ_j (ψ_j − ψ_r))]. The minus sign is
/// what the residue expansion and long simulations give.
pub fn localization_terms(t: usize, x: usize, r: usize, p: &DerivedParams, psi: &InitialState) -> LocalizationTerms {
    let gp = gamma_pm(p, x, 1.0);
    let gm = gamma_pm(p, x, -1.0);
    let gx = gamma_times(p, x, t);
    let total = psi.total();
    let dev = psi.deviation(r);
    LocalizationTerms {
        lm: gm * total.norm_sqr(),
        lp: gp * dev.norm_sqr(),
        lc: -2.0 * p.b_kappa.powi(2) * (gx * total.conj() * dev).re,
        gamma_plus: gp,
        gamma_minus: gm,
        gamma_times: gx,
    }
}

/// Long-time prediction for P(X_{t,r} = x).
pub fn localization_asymptotic(t: usize, x: usize, r: usize, p: &DerivedParams, psi: &InitialState) -> f64 {
    let reg = classify_regime(p);
    let l = localization_terms(t, x, r, p, psi);
    parity(t, x) * (gated(reg.has_lm, l.lm) + gated(reg.has_lp, l.lp) + gated(reg.has_lc, l.lc))
}

/// Σ_r L_c^r(x, t), which vanishes identically.
pub fn oscillation_sum_rule(t: usize, x: usize, p: &DerivedParams, psi: &InitialState) -> f64 {
    (0..psi.kappa()).map(|r| localization_terms(t, x, r, p, psi).lc).sum()
}

/// Atom weights (C_m, C_p^r) before the regime indicators.
pub fn atom_weights(r: usize, p: &DerivedParams, psi: &InitialState) -> (f64, f64) {
    let b2 = p.b_kappa.powi(2);
    let cm = b2 * p.abs_c * (p.abs_c - p.cos_phi) / (2.0 * p.k_minus) * psi.total().norm_sqr();
    let cp = b2 * p.abs_c * (p.abs_c + p.cos_phi) / (2.0 * p.k_plus) * psi.deviation(r).norm_sqr();
    (cm, cp)
}

/// f_K(x) on [0, |a|), zero elsewhere.
pub fn f_k(abs_a: f64, x: f64) -> f64 {
    if !(0.0..abs_a).contains(&x) {
        return 0.0;
    }
    let a2 = abs_a * abs_a;
    (1.0 - a2).sqrt() / (PI * (1.0 - x * x) * (a2 - x * x).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum DensityForm {
    General { c: C64, cos_phi: f64, sin_phi: f64, abs_a: f64, abs_c: f64, a_k: f64, b_k: f64, theta: ThetaTriple },
    Phi0 { abs_a: f64, constant: f64, slope: f64 },
    HalfLine { abs_c: f64, cos_phi: f64, sin_phi: f64 },
}

/// The three coefficients of C_d^r(x), each with a term linear in x carried
/// by the velocity weight of the two chiral components.
pub fn weak_gammas(p: &DerivedParams, x: f64) -> (f64, C64, f64) {
    let c = coin_c(p);
    gammas(c, p.cos_phi, p.sin_phi, p.abs_a, p.abs_c, p.a_kappa, p.b_kappa, x)
}

/// K_± − (1 − x²)sin²φ, written as a sum of squares.
fn shifted_k(abs_c: f64, cos_phi: f64, sin_phi: f64, x: f64, sign: f64) -> f64 {
    (abs_c + sign * cos_phi).powi(2) + (x * sin_phi).powi(2)
}

/// Γ_1, Γ_2, Γ_3 with E = 1 + |c|² − 2|c|²cos²φ − (1 − x²)sin²φ expanded into
/// nonnegative terms. Γ_1 is split along a_κ = ±1, where it factors through
/// K_± − (1 − x²)sin²φ; the direct form loses digits when cos φ ≈ ∓|c|.
#[allow(clippy::too_many_arguments)]
fn gammas(c: C64, cos_phi: f64, sin_phi: f64, abs_a: f64, abs_c: f64, a_k: f64, b_k: f64, x: f64) -> (f64, C64, f64) {
    let e = (abs_c * sin_phi).powi(2) + (abs_a * cos_phi).powi(2) + (x * sin_phi).powi(2);
    let m = c * e - C64::new(0.0, 2.0) * c * (abs_a * abs_a - x * x) * cos_phi * sin_phi;
    let kp = shifted_k(abs_c, cos_phi, sin_phi, x, 1.0);
    let km = shifted_k(abs_c, cos_phi, sin_phi, x, -1.0);
    let g1 = (1.0 + a_k).powi(2) / 2.0 * (1.0 - abs_c * cos_phi) * kp + (1.0 - a_k).powi(2) / 2.0 * (1.0 + abs_c * cos_phi) * km
        - x * (1.0 - a_k * a_k) * e;
    let g2 = b_k * (a_k * (1.0 + x) * e + m);
    let g3 = b_k * b_k * (1.0 + x) * e;
    (g1, g2, g3)
}

impl DensityForm {
    /// The factor multiplying f_K(x).
    fn coefficient(&self, x: f64) -> f64 {
        match *self {
            DensityForm::General { c, cos_phi, sin_phi, abs_a, abs_c, a_k, b_k, theta } => {
                let (g1, g2, g3) = gammas(c, cos_phi, sin_phi, abs_a, abs_c, a_k, b_k, x);
                let num = g1 * theta.theta1 + 2.0 * (g2 * theta.theta2).re + g3 * theta.theta3;
                num * x * x / (shifted_k(abs_c, cos_phi, sin_phi, x, 1.0) * shifted_k(abs_c, cos_phi, sin_phi, x, -1.0))
            }
            DensityForm::Phi0 { abs_a, constant, slope } => (constant + slope * x) * x * x / (abs_a * abs_a),
            DensityForm::HalfLine { abs_c, cos_phi, sin_phi } => {
                2.0 * (1.0 - abs_c * cos_phi) * x * x / shifted_k(abs_c, cos_phi, sin_phi, x, -1.0)
            }
        }
    }
}

/// Limit law of X_{t,r}/t: an atom at 0 plus a density on [0, |a|).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitMeasure {
    pub atom: f64,
    pub abs_a: f64,
    form: DensityForm,
}

impl LimitMeasure {
    /// C_d^r(x)·f_K(x); zero outside [0, |a|).
    pub fn density(&self, x: f64) -> f64 {
        if !(0.0..self.abs_a).contains(&x) {
            return 0.0;
        }
        self.form.coefficient(x) * f_k(self.abs_a, x)
    }

    /// Density after x = |a| sin u, including the Jacobian; smooth on [0, π/2].
    pub fn density_in_u(&self, u: f64) -> f64 {
        let x = self.abs_a * u.sin();
        let a2 = self.abs_a * self.abs_a;
        self.form.coefficient(x) * (1.0 - a2).sqrt() / (PI * (1.0 - x * x))
    }

    /// ∫_lo^hi density, with the bounds clipped to [0, |a|].
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.clamp(0.0, self.abs_a);
        let hi = hi.clamp(0.0, self.abs_a);
        if hi <= lo {
            return 0.0;
        }
        let (ul, uh) = ((lo / self.abs_a).asin(), (hi / self.abs_a).asin());
        double_exponential::integrate(|u| self.density_in_u(u), ul, uh, QUAD_TOL).integral
    }

    pub fn density_mass(&self) -> f64 {
        self.mass(0.0, self.abs_a)
    }

    pub fn total_mass(&self) -> f64 {
        self.atom + self.density_mass()
    }
}

/// Weak limit for branch r.
pub fn limit_measure(r: usize, p: &DerivedParams, psi: &InitialState) -> LimitMeasure {
    let reg = classify_regime(p);
    let (cm, cp) = atom_weights(r, p, psi);
    let atom = gated(reg.has_lm, cm) + gated(reg.has_lp, cp);
    LimitMeasure {
        atom,
        abs_a: p.abs_a,
        form: DensityForm::General {
            c: coin_c(p),
            cos_phi: p.cos_phi,
            sin_phi: p.sin_phi,
            abs_a: p.abs_a,
            abs_c: p.abs_c,
            a_k: p.a_kappa,
            b_k: p.b_kappa,
            theta: ThetaTriple::new(psi, r),
        },
    }
}

/// Σ_x of the non-oscillating localized mass over x with t + x even, for x ≤ x_max.
pub fn localized_mass(t: usize, r: usize, p: &DerivedParams, psi: &InitialState, x_max: usize) -> f64 {
    let reg = classify_regime(p);
    (0..=x_max)
        .filter(|x| (t + x).is_multiple_of(2))
        .map(|x| {
            let l = localization_terms(t, x, r, p, psi);
            gated(reg.has_lm, l.lm) + gated(reg.has_lp, l.lp)
        })
        .sum()
}

fn require_phi0(p: &DerivedParams) -> Result<(), TheoryError> {
    if p.phi.abs() > 1e-12 {
        return Err(TheoryError::Precondition(format!("arg(c) = 0 required, got {}", p.phi)));
    }
    Ok(())
}

fn require_half_line(p: &DerivedParams, psi: Option<&InitialState>) -> Result<(), TheoryError> {
    if p.kappa != 1 || psi.is_some_and(|s| s.kappa() != 1) {
        return Err(TheoryError::Precondition(format!("kappa = 1 required, got {}", p.kappa)));
    }
    Ok(())
}

/// Localization at arg(c) = 0:
/// b_κ²|c|²/(1+|c|)² {δ_0(x) + (1 − δ_0(x))(2/(1+|c|))((1−|c|)/(1+|c|))^{x−1}} |Σ(ψ_j − ψ_r)|².
pub fn corollary_phi0_localization(t: usize, x: usize, r: usize, p: &DerivedParams, psi: &InitialState) -> Result<f64, TheoryError> {
    require_phi0(p)?;
    let c = p.abs_c;
    let shape = if x == 0 { 1.0 } else { 2.0 / (1.0 + c) * ((1.0 - c) / (1.0 + c)).powi(x as i32 - 1) };
    Ok(parity(t, x) * p.b_kappa.powi(2) * c * c / (1.0 + c).powi(2) * shape * psi.deviation(r).norm_sqr())
}

/// Weak limit at arg(c) = 0. The density coefficient is
/// (1/|a|²)[|(|c|−1)ψ_r + b_κΣψ|² + |a|²|ψ_r|² + x(|b_κΣψ − ψ_r|² − |ψ_r|²)]x².
pub fn corollary_phi0_measure(r: usize, p: &DerivedParams, psi: &InitialState) -> Result<LimitMeasure, TheoryError> {
    require_phi0(p)?;
    let c = p.abs_c;
    let a2 = p.abs_a * p.abs_a;
    let pr = psi.get(r);
    let bs = psi.total() * p.b_kappa;
    let constant = (pr * (c - 1.0) + bs).norm_sqr() + a2 * pr.norm_sqr();
    let slope = (bs - pr).norm_sqr() - pr.norm_sqr();
    let atom = p.b_kappa.powi(2) * c / (2.0 * (1.0 + c)) * psi.deviation(r).norm_sqr();
    Ok(LimitMeasure { atom, abs_a: p.abs_a, form: DensityForm::Phi0 { abs_a: p.abs_a, constant, slope } })
}

/// Localization on the half line (κ = 1).
pub fn corollary_halfline_localization(t: usize, x: usize, p: &DerivedParams) -> Result<f64, TheoryError> {
    require_half_line(p, None)?;
    if p.cos_phi >= p.abs_c {
        return Ok(0.0);
    }
    let a2 = p.abs_a * p.abs_a;
    let km = p.k_minus;
    let base = 4.0 * p.abs_c.powi(2) * (p.cos_phi - p.abs_c).powi(2) / (km * km);
    let shape = if x == 0 { 1.0 } else { (a2 / km).powi(x as i32 - 1) * (1.0 + a2 / km) };
    Ok(parity(t, x) * base * shape)
}

/// Weak limit on the half line (κ = 1).
pub fn corollary_halfline_measure(p: &DerivedParams) -> Result<LimitMeasure, TheoryError> {
    require_half_line(p, None)?;
    let atom = if p.cos_phi < p.abs_c { 2.0 * p.abs_c * (p.abs_c - p.cos_phi) / p.k_minus } else { 0.0 };
    Ok(LimitMeasure { atom, abs_a: p.abs_a, form: DensityForm::HalfLine { abs_c: p.abs_c, cos_phi: p.cos_phi, sin_phi: p.sin_phi } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::{derive_params, make_phased_hadamard, random_coin, CoinU2};
    use crate::reduced::{prob_xtr, ReducedWalk};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fig_psi() -> InitialState {
        let s = 1.0 / 3f64.sqrt();
        InitialState::new([10.0f64, 30.0, 340.0].iter().map(|d| C64::from_polar(s, d.to_radians())).collect()).unwrap()
    }

    fn hp(vp_deg: f64, k: usize) -> (CoinU2, DerivedParams) {
        let c = make_phased_hadamard(vp_deg.to_radians());
        (c, derive_params(&c, k).unwrap())
    }

    #[test]
    fn theta_triple() {
        let psi = fig_psi();
        let th = ThetaTriple::new(&psi, 0);
        assert_relative_eq!(th.theta1, 1.0 / 3.0, epsilon = 1e-15);
        let s = psi.get(1) + psi.get(2);
        let pair = (psi.get(1) * psi.get(2).conj() + psi.get(1).conj() * psi.get(2)).re;
        assert_relative_eq!(th.theta3, psi.get(1).norm_sqr() + psi.get(2).norm_sqr() + pair, epsilon = 1e-15);
        assert_relative_eq!(th.theta3, s.norm_sqr(), epsilon = 1e-15);
    }

    #[test]
    fn parity_zero() {
        let (_, p) = hp(80.0, 3);
        for x in 0..6 {
            assert_eq!(localization_asymptotic(101 + x, x, 0, &p, &fig_psi()), 0.0);
        }
    }

    #[test]
    fn symmetric_state_does_not_localize_for_phi0() {
        let (_, p) = hp(0.0, 4);
        let psi = InitialState::symmetric(4);
        for x in 0..8 {
            assert!(localization_asymptotic(100 + x, x, 1, &p, &psi).abs() < 1e-30);
        }
    }

    #[test]
    fn gamma_decay_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let p = derive_params(&random_coin(&mut rng), 3).unwrap();
            let a2 = p.abs_a.powi(2);
            for x in 1..10 {
                assert_relative_eq!(gamma_pm(&p, x + 1, 1.0) / gamma_pm(&p, x, 1.0), a2 / p.k_plus, max_relative = 1e-12);
                assert_relative_eq!(gamma_pm(&p, x + 1, -1.0) / gamma_pm(&p, x, -1.0), a2 / p.k_minus, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn oscillation_period() {
        let (_, p) = hp(80.0, 3);
        let psi = fig_psi();
        let vals: Vec<f64> = (0..40).map(|k| localization_asymptotic(1001 + 2 * k, 1, 0, &p, &psi)).collect();
        let spread = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 1e-3);
        // The phase advances by arg(K_×/K̄_×) every two steps.
        let h = half_angle(&p);
        let g0 = gamma_times(&p, 1, 1001);
        let g1 = gamma_times(&p, 1, 1003);
        assert!((g1 - g0 * C64::from_polar(1.0, 2.0 * h)).norm() < 1e-12);
    }

    #[test]
    fn sum_rule_examples() {
        let (_, p) = hp(80.0, 3);
        for x in 0..8 {
            assert!(oscillation_sum_rule(1000 + x, x, &p, &fig_psi()).abs() < 1e-12);
        }
        let (_, p1) = hp(70.0, 1);
        let e = InitialState::basis(1, 0);
        for x in 0..5 {
            assert_eq!(localization_terms(100, x, 0, &p1, &e).lc, 0.0);
        }
        let (_, p0) = hp(0.0, 3);
        assert!(!classify_regime(&p0).has_lc);
    }

    #[test]
    fn predictions_match_simulation_where_transients_are_small() {
        // x ≤ 2 at t = 6000, where the decaying part is well below the atom.
        let psi = fig_psi();
        for vp in [0.0, 50.0, 80.0] {
            let (c, p) = hp(vp, 3);
            for t in [6000usize, 6001] {
                let s = ReducedWalk::new(&c, &p).evolve(t);
                let sim = prob_xtr(&s, &psi, 0).unwrap();
                for x in 0..=2 {
                    let pred = localization_asymptotic(t, x, 0, &p, &psi);
                    if pred > 1e-6 {
                        assert!((sim[x] / pred - 1.0).abs() < 5e-3, "vp={vp} t={t} x={x} sim={} pred={pred}", sim[x]);
                    }
                }
            }
        }
    }

    #[test]
    fn atom_equals_parity_sum_of_localization() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let p = derive_params(&random_coin(&mut rng), 3).unwrap();
            let psi = InitialState::random(3, &mut rng);
            let reg = classify_regime(&p);
            let (cm, cp) = atom_weights(0, &p, &psi);
            let atom = gated(reg.has_lm, cm) + gated(reg.has_lp, cp);
            for t in [1000usize, 1001] {
                assert_relative_eq!(localized_mass(t, 0, &p, &psi, 4000), atom, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn half_line_phi0_density_from_corollary() {
        let (_, p) = hp(0.0, 1);
        let m = corollary_halfline_measure(&p).unwrap();
        assert_eq!(m.atom, 0.0);
        let x = 0.3;
        let expect = 2.0 * (1.0 - p.abs_c) * x * x / p.k_minus * f_k(p.abs_a, x);
        assert_relative_eq!(m.density(x), expect, max_relative = 1e-14);
        assert!(m.density(0.70) > m.density(0.6));
        assert_eq!(m.density(0.75), 0.0);
    }

    #[test]
    fn total_mass_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for k in [1usize, 2, 3, 5] {
            for _ in 0..3 {
                let p = derive_params(&random_coin(&mut rng), k).unwrap();
                let psi = InitialState::random(k, &mut rng);
                let tot: f64 = (0..k).map(|r| limit_measure(r, &p, &psi).total_mass()).sum();
                assert!((tot - 1.0).abs() < 1e-6, "k={k} tot={tot}");
            }
        }
    }

    #[test]
    fn density_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let p = derive_params(&random_coin(&mut rng), 3).unwrap();
            let psi = InitialState::random(3, &mut rng);
            let m = limit_measure(1, &p, &psi);
            for i in 0..200 {
                assert!(m.density(p.abs_a * i as f64 / 200.0) >= -1e-12);
            }
        }
    }

    #[test]
    fn corollaries_agree_with_general_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (_, p0) = hp(0.0, 3);
        for _ in 0..20 {
            let psi = InitialState::random(3, &mut rng);
            for r in 0..3 {
                for x in 0..6 {
                    let t = 500 + x;
                    assert_relative_eq!(
                        corollary_phi0_localization(t, x, r, &p0, &psi).unwrap(),
                        localization_asymptotic(t, x, r, &p0, &psi),
                        max_relative = 1e-12,
                        epsilon = 1e-300
                    );
                }
                let a = corollary_phi0_measure(r, &p0, &psi).unwrap();
                let b = limit_measure(r, &p0, &psi);
                assert_relative_eq!(a.atom, b.atom, max_relative = 1e-12);
                for i in 1..50 {
                    let x = p0.abs_a * i as f64 / 50.0;
                    assert_relative_eq!(a.density(x), b.density(x), max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn corollary_preconditions() {
        let (_, p) = hp(10.0, 3);
        assert!(corollary_phi0_localization(0, 0, 0, &p, &fig_psi()).is_err());
        assert!(corollary_halfline_measure(&p).is_err());
    }

    #[test]
    fn half_line_gamma_one_identity() {
        // With a_κ = 1, b_κ = 2: Γ_1 = 2(1 − |c|cos φ)(K_+ − (1−x²)sin²φ).
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let p = derive_params(&random_coin(&mut rng), 1).unwrap();
            for i in 0..20 {
                let x = p.abs_a * i as f64 / 20.0;
                let (g1, _, _) = weak_gammas(&p, x);
                let s = (1.0 - x * x) * p.sin_phi.powi(2);
                assert_relative_eq!(g1, 2.0 * (1.0 - p.abs_c * p.cos_phi) * (p.k_plus - s), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn gammas_match_direct_expressions() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for k in 1..6 {
            for _ in 0..20 {
                let p = derive_params(&random_coin(&mut rng), k).unwrap();
                let c = coin_c(&p);
                let (cp, sp, a2, c2) = (p.cos_phi, p.sin_phi, p.abs_a.powi(2), p.abs_c.powi(2));
                for i in 0..20 {
                    let x = p.abs_a * i as f64 / 20.0;
                    let s = (1.0 - x * x) * sp * sp;
                    let e = 1.0 + c2 - 2.0 * c2 * cp * cp - s;
                    let m = c * e - C64::new(0.0, 2.0) * c * (a2 - x * x) * cp * sp;
                    let ak = p.a_kappa;
                    let g1 = (1.0 - x) * e + 2.0 * ak * m.re + ak * ak * (1.0 + x) * e;
                    let (h1, h2, h3) = weak_gammas(&p, x);
                    assert!((h1 - g1).abs() < 1e-12);
                    assert!((h2 - p.b_kappa * (ak * (1.0 + x) * e + m)).norm() < 1e-12);
                    assert!((h3 - p.b_kappa.powi(2) * (1.0 + x) * e).abs() < 1e-12);
                    assert!((shifted_k(p.abs_c, cp, sp, x, 1.0) - (p.k_plus - s)).abs() < 1e-12);
                    assert!((shifted_k(p.abs_c, cp, sp, x, -1.0) - (p.k_minus - s)).abs() < 1e-12);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn sum_rule_random(seed in any::<u64>(), k in 1usize..7, t in 0usize..100_000, x in 0usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = derive_params(&random_coin(&mut rng), k).unwrap();
            let psi = InitialState::random(k, &mut rng);
            prop_assert!(oscillation_sum_rule(t, x, &p, &psi).abs() < 1e-12);
        }

        #[test]
        fn predictions_nonnegative(seed in any::<u64>(), k in 1usize..6, t in 0usize..100_000, x in 0usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = derive_params(&random_coin(&mut rng), k).unwrap();
            let psi = InitialState::random(k, &mut rng);
            for r in 0..k {
                prop_assert!(localization_asymptotic(t, x, r, &p, &psi) >= -1e-12);
            }
        }
    }
}
