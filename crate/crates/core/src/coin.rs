//! Coin operators and derived parameters.

use num_complex::Complex64 as C64;
use rand::Rng;
use std::f64::consts::FRAC_1_SQRT_2;
use std::f64::consts::FRAC_PI_2;
use std::f64::consts::PI;
use thiserror::Error;

/// Tolerance for structural identities such as unitarity and |Δ| = 1.
pub const UNITARY_TOL: f64 = 1e-12;

/// Tolerance on Σ|ψ_j|² = 1.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoinError {
    #[error("coin is not unitary: max |C^dag C - I| = {0:.3e}")]
    NotUnitary(f64),
    #[error("coin violates abcd != 0 (|abcd| = {0:.3e})")]
    ZeroEntry(f64),
    #[error("invalid dimension {0}: need d >= 1")]
    InvalidDimension(i64),
    #[error("initial state violates ||psi|| = 1 (||psi||^2 = {0})")]
    NotNormalized(f64),
    #[error("initial state has {got} components but kappa = {kappa}")]
    WrongLength { got: usize, kappa: usize },
    #[error("kappa must be at least 1")]
    InvalidKappa,
    #[error("omega violates |omega| = 1 (|omega| = {0})")]
    NotUnitModulus(f64),
}

/// A plain 2×2 complex matrix `[[a, b], [c, d]]`.
///
/// The walkers accept any unitary matrix here. Coins used by the closed-form
/// results go through [`CoinU2`], which also demands abcd ≠ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Mat2 {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn scale(&self, s: C64) -> Self {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    /// Largest entry of |C†C − I|.
    pub fn unitarity_defect(&self) -> f64 {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let m00 = a.norm_sqr() + c.norm_sqr() - 1.0;
        let m11 = b.norm_sqr() + d.norm_sqr() - 1.0;
        let m01 = a.conj() * b + c.conj() * d;
        m00.abs().max(m11.abs()).max(m01.norm())
    }

    /// Apply to the column vector (u, v).
    #[inline]
    pub fn apply(&self, u: C64, v: C64) -> (C64, C64) {
        (self.a * u + self.b * v, self.c * u + self.d * v)
    }
}

/// Coin `[[a, b], [c, d]] ∈ U(2)` with abcd ≠ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinU2 {
    m: Mat2,
}

impl CoinU2 {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Result<Self, CoinError> {
        Self::from_matrix(Mat2::new(a, b, c, d))
    }

    pub fn from_matrix(m: Mat2) -> Result<Self, CoinError> {
        let defect = m.unitarity_defect();
        if !(defect < UNITARY_TOL) {
            return Err(CoinError::NotUnitary(defect));
        }
        let prod = (m.a * m.b * m.c * m.d).norm();
        if !(prod > 1e-14) {
            return Err(CoinError::ZeroEntry(prod));
        }
        Ok(CoinU2 { m })
    }

    pub fn a(&self) -> C64 {
        self.m.a
    }
    pub fn b(&self) -> C64 {
        self.m.b
    }
    pub fn c(&self) -> C64 {
        self.m.c
    }
    pub fn d(&self) -> C64 {
        self.m.d
    }
    pub fn matrix(&self) -> &Mat2 {
        &self.m
    }

    /// Δ = ad − bc.
    pub fn delta(&self) -> C64 {
        self.m.det()
    }
}

/// Hadamard coin times a global phase e^{iφ}.
pub fn make_phased_hadamard(varphi: f64) -> CoinU2 {
    let h = Mat2::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2);
    CoinU2::from_matrix(h.scale(C64::from_polar(1.0, varphi))).expect("phased Hadamard is a valid coin")
}

/// Random element of U(2) with every entry nonzero.
///
/// Uses e^{iα}[[cos θ e^{iβ}, sin θ e^{iγ}], [−sin θ e^{−iγ}, cos θ e^{−iβ}]] with θ kept
/// at least `1e-3` away from 0 and π/2.
pub fn random_coin<R: Rng + ?Sized>(rng: &mut R) -> CoinU2 {
    let margin = 1e-3;
    let theta = rng.gen_range(margin..FRAC_PI_2 - margin);
    random_coin_with_theta(rng, theta)
}

/// Same parameterisation as [`random_coin`] with a prescribed θ, so |a| = cos θ.
pub fn random_coin_with_theta<R: Rng + ?Sized>(rng: &mut R, theta: f64) -> CoinU2 {
    let alpha = rng.gen_range(0.0..2.0 * PI);
    let beta = rng.gen_range(0.0..2.0 * PI);
    let gamma = rng.gen_range(0.0..2.0 * PI);
    let g = C64::from_polar(1.0, alpha);
    let (ct, st) = (theta.cos(), theta.sin());
    let m =
        Mat2::new(C64::from_polar(ct, beta), C64::from_polar(st, gamma), -C64::from_polar(st, -gamma), C64::from_polar(ct, -beta)).scale(g);
    CoinU2::from_matrix(m).expect("random U(2) element")
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<C64>,
}

impl SquareMatrix {
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        SquareMatrix { n, data: rows.into_iter().flatten().collect() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    pub fn scale(&self, s: C64) -> Self {
        SquareMatrix { n: self.n, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.n);
        (0..self.n).map(|i| self.data[i * self.n..(i + 1) * self.n].iter().zip(v).map(|(m, x)| m * x).sum()).collect()
    }

    pub fn unitarity_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let s: C64 = (0..n).map(|k| self.get(k, i).conj() * self.get(k, j)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }
}

/// Grover matrix G_d: diagonal 2/d − 1, off-diagonal 2/d. G_1 = [1].
pub fn make_grover(d: i64) -> Result<SquareMatrix, CoinError> {
    if d < 1 {
        return Err(CoinError::InvalidDimension(d));
    }
    let n = d as usize;
    if n == 1 {
        return Ok(SquareMatrix::from_rows(vec![vec![C64::new(1.0, 0.0)]]));
    }
    let off = 2.0 / d as f64;
    let rows = (0..n).map(|i| (0..n).map(|j| C64::new(if i == j { off - 1.0 } else { off }, 0.0)).collect()).collect();
    Ok(SquareMatrix::from_rows(rows))
}

/// (a_κ, b_κ) = (2/κ − 1, 2/κ), with a_1 = 1, b_1 = 2.
pub fn grover_weights(kappa: usize) -> (f64, f64) {
    if kappa == 1 {
        (1.0, 2.0)
    } else {
        let b = 2.0 / kappa as f64;
        (b - 1.0, b)
    }
}

/// Scalars derived from a coin and the number of half lines κ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub phi: f64,
    pub cos_phi: f64,
    pub sin_phi: f64,
    pub abs_a: f64,
    pub abs_c: f64,
    pub k_plus: f64,
    pub k_minus: f64,
    pub k_times: C64,
    pub delta: C64,
    pub kappa: usize,
    pub a_kappa: f64,
    pub b_kappa: f64,
}

impl DerivedParams {
    /// √(κ−1)·b_κ, the weight that feeds the Other component.
    pub fn s_kappa(&self) -> f64 {
        ((self.kappa - 1) as f64).sqrt() * self.b_kappa
    }
}

pub fn derive_params(coin: &CoinU2, kappa: usize) -> Result<DerivedParams, CoinError> {
    if kappa < 1 {
        return Err(CoinError::InvalidKappa);
    }
    // Re-validate in case the coin was built from a matrix that drifted.
    let coin = CoinU2::from_matrix(*coin.matrix())?;
    let c = coin.c();
    let abs_c = c.norm();
    let phi = c.arg();
    let one = C64::new(1.0, 0.0);
    let (a_kappa, b_kappa) = grover_weights(kappa);
    Ok(DerivedParams {
        phi,
        cos_phi: c.re / abs_c,
        sin_phi: c.im / abs_c,
        abs_a: coin.a().norm(),
        abs_c,
        k_plus: (one + c).norm_sqr(),
        k_minus: (one - c).norm_sqr(),
        k_times: (one - c) * (one + c.conj()),
        delta: coin.delta(),
        kappa,
        a_kappa,
        b_kappa,
    })
}

/// Which localization terms are present.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Regime {
    pub has_lm: bool,
    pub has_lp: bool,
    pub has_lc: bool,
}

/// Indicator intervals are half open: L_m needs cos φ ∈ [−1, |c|), L_p needs
/// cos φ ∈ (−|c|, 1], and L_c needs both.
pub fn classify_regime(p: &DerivedParams) -> Regime {
    let has_lm = p.cos_phi < p.abs_c;
    let has_lp = p.cos_phi > -p.abs_c;
    Regime { has_lm, has_lp, has_lc: has_lm && has_lp }
}

/// Initial coin state (ψ_0, …, ψ_{κ−1}) at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    psi: Vec<C64>,
}

impl InitialState {
    pub fn new(psi: Vec<C64>) -> Result<Self, CoinError> {
        if psi.is_empty() {
            return Err(CoinError::InvalidKappa);
        }
        let n: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
        if !((n - 1.0).abs() < NORM_TOL) {
            return Err(CoinError::NotNormalized(n));
        }
        Ok(InitialState { psi })
    }

    /// Same as [`InitialState::new`] but also checks the length against κ.
    pub fn for_kappa(psi: Vec<C64>, kappa: usize) -> Result<Self, CoinError> {
        if psi.len() != kappa {
            return Err(CoinError::WrongLength { got: psi.len(), kappa });
        }
        Self::new(psi)
    }

    pub fn symmetric(kappa: usize) -> Self {
        let v = C64::new(1.0 / (kappa as f64).sqrt(), 0.0);
        InitialState { psi: vec![v; kappa] }
    }

    /// Unit vector e_r.
    pub fn basis(kappa: usize, r: usize) -> Self {
        let mut psi = vec![C64::new(0.0, 0.0); kappa];
        psi[r] = C64::new(1.0, 0.0);
        InitialState { psi }
    }

    /// Gaussian direction, normalised.
    pub fn random<R: Rng + ?Sized>(kappa: usize, rng: &mut R) -> Self {
        loop {
            // Box-Muller keeps us off extra dependencies for one normal draw.
            let psi: Vec<C64> = (0..kappa)
                .map(|_| {
                    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                    let u2: f64 = rng.gen_range(0.0..2.0 * PI);
                    C64::from_polar((-2.0 * u1.ln()).sqrt(), u2)
                })
                .collect();
            let n: f64 = psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if n > 1e-6 {
                return InitialState { psi: psi.into_iter().map(|v| v / n).collect() };
            }
        }
    }

    pub fn kappa(&self) -> usize {
        self.psi.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.psi
    }

    pub fn get(&self, r: usize) -> C64 {
        self.psi[r]
    }

    /// Σ_j ψ_j.
    pub fn total(&self) -> C64 {
        self.psi.iter().sum()
    }

    /// Σ_{j≠r} ψ_j.
    pub fn others(&self, r: usize) -> C64 {
        self.total() - self.psi[r]
    }

    /// Σ_j (ψ_j − ψ_r).
    pub fn deviation(&self, r: usize) -> C64 {
        self.total() - self.psi[r] * self.psi.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grover_three() {
        let g = make_grover(3).unwrap();
        assert_relative_eq!(g.get(0, 0).re, -1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(g.get(0, 1).re, 2.0 / 3.0, epsilon = 1e-15);
        assert!(g.unitarity_defect() < 1e-15);
    }

    #[test]
    fn grover_small() {
        assert_eq!(make_grover(1).unwrap().get(0, 0), C64::new(1.0, 0.0));
        let g2 = make_grover(2).unwrap();
        assert_eq!(g2.get(0, 0).re, 0.0);
        assert_eq!(g2.get(0, 1).re, 1.0);
        assert_eq!(make_grover(0), Err(CoinError::InvalidDimension(0)));
        assert!(make_grover(-3).is_err());
    }

    #[test]
    fn grover_rows_sum_to_one() {
        for k in 1..12usize {
            let (a, b) = grover_weights(k);
            assert_relative_eq!(a + (k as f64 - 1.0) * b, 1.0, epsilon = 1e-15);
            if k >= 2 {
                assert_relative_eq!(a * a + (k as f64 - 1.0) * b * b, 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn hadamard_entries() {
        let h = make_phased_hadamard(0.0);
        let s = FRAC_1_SQRT_2;
        assert_relative_eq!(h.a().re, s);
        assert_relative_eq!(h.b().re, s);
        assert_relative_eq!(h.c().re, s);
        assert_relative_eq!(h.d().re, -s);
        let p = derive_params(&h, 3).unwrap();
        assert_eq!(p.phi, 0.0);
        assert_relative_eq!(p.abs_c, s, epsilon = 1e-15);
    }

    #[test]
    fn phased_hadamard_quarter_turn() {
        let p = derive_params(&make_phased_hadamard(FRAC_PI_2), 2).unwrap();
        assert_relative_eq!(p.phi, FRAC_PI_2, epsilon = 1e-15);
        assert!(p.cos_phi.abs() < 1e-15);
    }

    #[test]
    fn hadamard_kappa3_params() {
        let p = derive_params(&make_phased_hadamard(0.0), 3).unwrap();
        let km = (1.0 - FRAC_1_SQRT_2).powi(2);
        assert_relative_eq!(p.k_minus, km, epsilon = 1e-15);
        assert_relative_eq!(p.k_minus, 0.08578643762690485, epsilon = 1e-12);
        assert_relative_eq!(p.a_kappa, -1.0 / 3.0);
        assert_relative_eq!(p.b_kappa, 2.0 / 3.0);
        assert!(p.k_times.im.abs() < 1e-15);
        assert_relative_eq!(p.k_times.re, p.k_plus * p.k_minus / p.k_times.re, epsilon = 1e-12);
    }

    #[test]
    fn regimes() {
        let h = derive_params(&make_phased_hadamard(0.0), 3).unwrap();
        assert_eq!(classify_regime(&h), Regime { has_lm: false, has_lp: true, has_lc: false });
        let p80 = derive_params(&make_phased_hadamard(80f64.to_radians()), 3).unwrap();
        assert_relative_eq!(p80.cos_phi, 0.17364817766693041, epsilon = 1e-12);
        assert_eq!(classify_regime(&p80), Regime { has_lm: true, has_lp: true, has_lc: true });
        let pi = derive_params(&make_phased_hadamard(PI), 3).unwrap();
        assert_eq!(classify_regime(&pi), Regime { has_lm: true, has_lp: false, has_lc: false });
    }

    #[test]
    fn regime_boundaries_are_half_open() {
        let mut p = derive_params(&make_phased_hadamard(0.0), 3).unwrap();
        p.cos_phi = p.abs_c;
        assert_eq!(classify_regime(&p), Regime { has_lm: false, has_lp: true, has_lc: false });
        p.cos_phi = -p.abs_c;
        assert_eq!(classify_regime(&p), Regime { has_lm: true, has_lp: false, has_lc: false });
    }

    #[test]
    fn rejects_bad_coins() {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        assert!(matches!(CoinU2::new(o, z, z, o), Err(CoinError::ZeroEntry(_))));
        assert!(matches!(CoinU2::new(o, o, o, o), Err(CoinError::NotUnitary(_))));
    }

    #[test]
    fn initial_state_checks() {
        assert!(InitialState::new(vec![C64::new(0.9, 0.0)]).is_err());
        assert!(matches!(InitialState::for_kappa(vec![C64::new(1.0, 0.0)], 2), Err(CoinError::WrongLength { .. })));
        let s = InitialState::symmetric(4);
        assert!(s.deviation(2).norm() < 1e-15);
    }

    #[test]
    fn thousand_random_coins() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let coin = random_coin(&mut rng);
            assert!(coin.matrix().unitarity_defect() < UNITARY_TOL);
            let p = derive_params(&coin, 3).unwrap();
            assert!((p.delta.norm() - 1.0).abs() < UNITARY_TOL);
            assert!((p.k_plus * p.k_minus - p.k_times.norm_sqr()).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn derived_invariants(seed in any::<u64>(), kappa in 1usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let coin = random_coin(&mut rng);
            let p = derive_params(&coin, kappa).unwrap();
            prop_assert!((p.delta.norm() - 1.0).abs() < 1e-12);
            prop_assert!((p.k_plus * p.k_minus - p.k_times.norm_sqr()).abs() < 1e-12);
            prop_assert!((p.abs_a.powi(2) + p.abs_c.powi(2) - 1.0).abs() < 1e-12);
            prop_assert!((p.a_kappa + (kappa as f64 - 1.0) * p.b_kappa - 1.0).abs() < 1e-15);
            // Re K_× = |a|² keeps the branch of √(K_×/K̄_×) unambiguous.
            prop_assert!((p.k_times.re - p.abs_a.powi(2)).abs() < 1e-12);
        }

        #[test]
        fn phased_hadamard_unitary(vp in -10.0f64..10.0) {
            let h = make_phased_hadamard(vp);
            prop_assert!(h.matrix().unitarity_defect() < 1e-12);
        }
    }
}
