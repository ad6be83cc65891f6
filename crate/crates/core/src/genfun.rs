//! Generating functions of the reduced walk.
//!
//! Ψ̃*(x; z) = Σ_t Ψ*_t(x) zᵗ is built from the root λ(z) of
//! dλ² − (Δz + 1/z)λ + a = 0 with the smaller modulus. Everything here comes
//! in two flavours: truncated power series (coefficient n is the amplitude at
//! time n) and pointwise evaluation, which the residue extraction uses.
//!
//! Branch choices all flow from λ: √ν(z) is defined as 1 + Δz² − 2dzλ(z).

use crate::coin::{CoinU2, DerivedParams};
use crate::reduced::{OTHER_DOWN, OTHER_UP, OWN_DOWN, OWN_UP};
use crate::series::{Series, SeriesError};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use thiserror::Error;

const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Default truncation order for series work.
pub const DEFAULT_ORDER: usize = 256;

/// Trapezoid nodes on each residue contour.
pub const CONTOUR_NODES: usize = 512;
pub const CONTOUR_EPS: f64 = 1e-3;
pub const CONTOUR_EPS_MIN: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenFunError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("pole {pole} lies within {distance:.3e} of a branch point or another pole; contour radius would drop below {eps_min:e}")]
    BranchProximity { pole: C64, distance: f64, eps_min: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenFunContext {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
    pub delta: C64,
    pub abs_a: f64,
    pub kappa: usize,
    pub a_kappa: f64,
    /// √(κ−1)·b_κ.
    pub s_kappa: f64,
    pub w_plus_sq: C64,
    pub w_minus_sq: C64,
    /// Distance from 0 to the nearest singularity; the series converge inside.
    pub r1: f64,
}

impl GenFunContext {
    pub fn new(coin: &CoinU2, params: &DerivedParams) -> Self {
        let (a, b, c, d) = (coin.a(), coin.b(), coin.c(), coin.d());
        let delta = coin.delta();
        let abs_a = a.norm();
        let a2 = abs_a * abs_a;
        // w_±² = ∓c(1 ± c) / (Δ(|a|² − 1 ∓ c)).
        let w_plus_sq = -c * (ONE + c) / (delta * (a2 - 1.0 - c));
        let w_minus_sq = c * (ONE - c) / (delta * (a2 - 1.0 + c));
        let mut ctx = GenFunContext {
            a,
            b,
            c,
            d,
            delta,
            abs_a,
            kappa: params.kappa,
            a_kappa: params.a_kappa,
            s_kappa: params.s_kappa(),
            w_plus_sq,
            w_minus_sq,
            r1: 1.0,
        };
        let nearest = ctx
            .branch_points()
            .iter()
            .map(|z| z.norm())
            .chain([w_plus_sq.norm().sqrt(), w_minus_sq.norm().sqrt()])
            .fold(f64::INFINITY, f64::min);
        ctx.r1 = nearest;
        ctx
    }

    /// ν(z) = (1 + Δz²)² − 4Δ|a|²z².
    pub fn nu(&self, z: C64) -> C64 {
        let u = ONE + self.delta * z * z;
        u * u - 4.0 * self.delta * self.abs_a * self.abs_a * z * z
    }

    /// η_±(z) = 2c ± 1 ∓ Δz².
    pub fn eta_plus(&self, z: C64) -> C64 {
        2.0 * self.c + 1.0 - self.delta * z * z
    }

    pub fn eta_minus(&self, z: C64) -> C64 {
        2.0 * self.c - 1.0 + self.delta * z * z
    }

    /// Zeros of ν: z² = (2|a|² − 1 ± 2i|a||c|)/Δ. All four lie on |z| = 1.
    pub fn branch_points(&self) -> [C64; 4] {
        let a2 = self.abs_a * self.abs_a;
        let ac = self.abs_a * (1.0 - a2).max(0.0).sqrt();
        let y1 = C64::new(2.0 * a2 - 1.0, 2.0 * ac) / self.delta;
        let y2 = C64::new(2.0 * a2 - 1.0, -2.0 * ac) / self.delta;
        let (s1, s2) = (y1.sqrt(), y2.sqrt());
        [s1, -s1, s2, -s2]
    }

    /// Both roots of dλ² − (Δz + 1/z)λ + a = 0 as (smaller, larger) modulus.
    pub fn lambda_roots(&self, z: C64) -> (C64, C64) {
        let bq = self.delta * z + 1.0 / z;
        let disc = (bq * bq - 4.0 * self.a * self.d).sqrt();
        // Pick the sign that avoids cancellation, then use the product a/d.
        let q = if (bq + disc).norm() >= (bq - disc).norm() { (bq + disc) / 2.0 } else { (bq - disc) / 2.0 };
        let big = q / self.d;
        let small = self.a / q;
        if small.norm() <= big.norm() {
            (small, big)
        } else {
            (big, small)
        }
    }

    /// λ(z): the root with the smaller modulus.
    pub fn lambda_at(&self, z: C64) -> C64 {
        self.lambda_roots(z).0
    }

    pub fn sqrt_nu_at(&self, z: C64) -> C64 {
        ONE + self.delta * z * z - 2.0 * self.d * z * self.lambda_at(z)
    }

    /// μ(z) = (dλ(z) − Δz)z/c.
    pub fn mu_at(&self, z: C64) -> C64 {
        (self.d * self.lambda_at(z) - self.delta * z) * z / self.c
    }

    /// w_±²w_−²(η_+ + √ν)(η_− − √ν) / (4(1 − c²)(z² − w_+²)(z² − w_−²)).
    /// Identical to −1/(1 − μ²).
    pub fn phi1_at(&self, z: C64) -> C64 {
        let sn = self.sqrt_nu_at(z);
        let z2 = z * z;
        self.w_plus_sq * self.w_minus_sq * (self.eta_plus(z) + sn) * (self.eta_minus(z) - sn)
            / (4.0 * (ONE - self.c * self.c) * (z2 - self.w_plus_sq) * (z2 - self.w_minus_sq))
    }

    /// Φ(x; z) = (dλ/a)^{x−1} Φ_1(z) for x ≥ 1.
    pub fn phi_at(&self, x: usize, z: C64) -> C64 {
        assert!(x >= 1, "Φ(x; z) is only defined for x >= 1");
        (self.d * self.lambda_at(z) / self.a).powu(x as u32 - 1) * self.phi1_at(z)
    }

    /// The four generating functions at a point, in [`crate::reduced`] component order.
    pub fn gen_at(&self, x: usize, z: C64) -> [C64; 4] {
        let lam = self.lambda_at(z);
        let mu = (self.d * lam - self.delta * z) * z / self.c;
        let phi1 = self.phi1_at(z);
        let (ak, sk) = (self.a_kappa, self.s_kappa);
        let mut out = [ZERO; 4];
        if x == 0 {
            // The t = 0 term |Own, 0, ε⟩ is the leading 1.
            out[OWN_UP] = ONE - (mu + ak) * mu * phi1;
            out[OTHER_UP] = -sk * mu * phi1;
        } else {
            let phi = (self.d * lam / self.a).powu(x as u32 - 1) * phi1;
            let up = self.d / (self.a * self.c) * (lam - self.a * z);
            out[OWN_UP] = -up * (mu + ak) * phi;
            out[OTHER_UP] = -up * sk * phi;
            out[OWN_DOWN] = -z * (mu + ak) * phi;
            out[OTHER_DOWN] = -z * sk * phi;
        }
        out
    }
}

/// Series pieces shared by the generating functions, at order `n`.
struct Pieces {
    lambda: Series,
    sqrt_nu: Series,
    mu: Series,
    phi1: Series,
    z: Series,
}

/// ν(z) = (1 + Δz²)² − 4Δ|a|²z² as a series.
pub fn nu_series(ctx: &GenFunContext, n: usize) -> Series {
    let a2 = ctx.abs_a * ctx.abs_a;
    let d = ctx.delta;
    Series::from_coeffs(&[ONE, ZERO, 2.0 * d - 4.0 * d * a2, ZERO, d * d], n)
}

/// λ(z) = (Δz² + 1 − √ν(z)) / (2dz) as a series of order `n`.
pub fn lambda_series(ctx: &GenFunContext, n: usize) -> Result<Series, SeriesError> {
    let m = n + 1;
    let num = &Series::from_coeffs(&[ONE, ZERO, ctx.delta], m) - &nu_series(ctx, m).sqrt()?;
    Ok(num.div_z(1e-14)?.scale(1.0 / (2.0 * ctx.d)))
}

fn pieces(ctx: &GenFunContext, n: usize) -> Result<Pieces, SeriesError> {
    let lambda = lambda_series(ctx, n)?;
    let z = Series::z(n);
    let z2 = z.shift_up(1);
    let sqrt_nu = &Series::one(n) - &(&z.scale(2.0 * ctx.d) * &lambda);
    let sqrt_nu = &sqrt_nu + &z2.scale(ctx.delta);
    let mu = (&(&lambda.scale(ctx.d) - &z.scale(ctx.delta)) * &z).scale(1.0 / ctx.c);
    let eta_p = &Series::constant(2.0 * ctx.c + 1.0, n) - &z2.scale(ctx.delta);
    let eta_m = &Series::constant(2.0 * ctx.c - 1.0, n) + &z2.scale(ctx.delta);
    let num = (&(&eta_p + &sqrt_nu) * &(&eta_m - &sqrt_nu)).scale(ctx.w_plus_sq * ctx.w_minus_sq);
    let den = (&z2.add_const(-ctx.w_plus_sq) * &z2.add_const(-ctx.w_minus_sq)).scale(4.0 * (ONE - ctx.c * ctx.c));
    let phi1 = &num * &den.invert()?;
    Ok(Pieces { lambda, sqrt_nu, mu, phi1, z })
}

/// √ν(z) := 1 + Δz² − 2dzλ(z) as a series.
pub fn sqrt_nu_series(ctx: &GenFunContext, n: usize) -> Result<Series, SeriesError> {
    Ok(pieces(ctx, n)?.sqrt_nu)
}

/// μ(z) = (dλ(z) − Δz)z/c as a series.
pub fn mu_series(ctx: &GenFunContext, n: usize) -> Result<Series, SeriesError> {
    Ok(pieces(ctx, n)?.mu)
}

/// Φ_1(z) as a series (Φ(x; z) without the (dλ/a)^{x−1} factor).
pub fn phi1_series(ctx: &GenFunContext, n: usize) -> Result<Series, SeriesError> {
    Ok(pieces(ctx, n)?.phi1)
}

/// The four series α̃*(·, x, ·; z) to order `n`, in [`crate::reduced`] component
/// order. Coefficient t is the amplitude of Ψ*_t(x).
pub fn gen_amplitudes(ctx: &GenFunContext, x: usize, n: usize) -> Result<[Series; 4], SeriesError> {
    let p = pieces(ctx, n)?;
    let (ak, sk) = (ctx.a_kappa, ctx.s_kappa);
    let mu_ak = p.mu.add_const(ak.into());
    if x == 0 {
        let own_up = (&(&mu_ak * &p.mu) * &p.phi1).scale(-ONE).add_const(ONE);
        let oth_up = (&p.mu * &p.phi1).scale((-sk).into());
        return Ok([own_up, oth_up, Series::zero(n), Series::zero(n)]);
    }
    let ratio = p.lambda.scale(ctx.d / ctx.a);
    let phi = &ratio.powi(x - 1) * &p.phi1;
    let up = (&p.lambda - &p.z.scale(ctx.a)).scale(ctx.d / (ctx.a * ctx.c));
    let up_phi = &up * &phi;
    let z_phi = &p.z * &phi;
    Ok([
        (&up_phi * &mu_ak).scale((-1.0).into()),
        up_phi.scale((-sk).into()),
        (&z_phi * &mu_ak).scale((-1.0).into()),
        z_phi.scale((-sk).into()),
    ])
}

/// Path-sum building blocks from the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct AppendixB {
    /// Weight of paths 0 → x that arrive with label Down: (dλ/a)^x / d, zero at x = 0.
    pub bq: Series,
    /// Weight of paths 0 → x that arrive with label Up: (dλ/a)^x (λ − az)/(acz).
    pub br: Series,
    /// Odd number of returns to the origin: B/(1 − B²), B = (dλ − Δz)z/c.
    pub br_tilde: Series,
    /// Even, nonzero number of returns: B²/(1 − B²).
    pub br_tilde_i: Series,
    /// The single excursion block B.
    pub block: Series,
}

pub fn appendix_b_functions(ctx: &GenFunContext, x: usize, n: usize) -> Result<AppendixB, SeriesError> {
    let m = n + 1;
    let p = pieces(ctx, m)?;
    let pow = p.lambda.scale(ctx.d / ctx.a).powi(x);
    let bq = if x == 0 { Series::zero(m) } else { pow.scale(1.0 / ctx.d) };
    let la = (&p.lambda - &p.z.scale(ctx.a)).div_z(1e-14)?.scale(1.0 / (ctx.a * ctx.c));
    let br = &pow.truncate(n) * &la;
    let block = p.mu.clone();
    let inv = (&Series::one(m) - &(&block * &block)).invert()?;
    let br_tilde = &block * &inv;
    let br_tilde_i = &(&block * &block) * &inv;
    Ok(AppendixB { bq: bq.truncate(n), br, br_tilde: br_tilde.truncate(n), br_tilde_i: br_tilde_i.truncate(n), block: block.truncate(n) })
}

/// Contribution of one pole to the long-time amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleContribution {
    pub pole: C64,
    /// μ(pole), which is ±1 at a genuine pole.
    pub mu: C64,
    pub residue: [C64; 4],
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidueAsymptotic {
    pub amplitude: [C64; 4],
    pub poles: Vec<PoleContribution>,
}

/// Candidate poles ±w_±, with coincident points merged (they coincide when c is real).
pub fn candidate_poles(ctx: &GenFunContext) -> Vec<C64> {
    let (wp, wm) = (ctx.w_plus_sq.sqrt(), ctx.w_minus_sq.sqrt());
    let mut out: Vec<C64> = Vec::new();
    for w in [wp, -wp, wm, -wm] {
        if out.iter().all(|v| (v - w).norm() > 1e-9) {
            out.push(w);
        }
    }
    out
}

/// Whether z sits on the arc of the unit circle where both roots of the λ
/// equation have modulus one (the continuous spectrum).
pub fn on_spectrum_arc(ctx: &GenFunContext, z: C64) -> bool {
    let (s, l) = ctx.lambda_roots(z);
    (l.norm() - s.norm()).abs() < 1e-8
}

/// Residues of the four generating functions by the trapezoid rule on |z − w| = eps.
pub fn contour_residue(ctx: &GenFunContext, x: usize, w: C64, eps: f64, nodes: usize) -> [C64; 4] {
    let mut acc = [ZERO; 4];
    for k in 0..nodes {
        let e = C64::from_polar(eps, 2.0 * PI * k as f64 / nodes as f64);
        let g = ctx.gen_at(x, w + e);
        for (a, v) in acc.iter_mut().zip(g) {
            *a += v * e;
        }
    }
    acc.map(|v| v / nodes as f64)
}

/// Long-time amplitude Ψ*_t(x) ≈ −Σ_w Res(Ψ̃*(x; ·), w)·w^{−(t+1)} over the
/// candidate poles that are genuine poles of the smaller-root branch.
///
/// A candidate is skipped when it lies on the spectrum arc or when
/// |1 − μ(w)²| is not small, since the function is then regular there.
pub fn residue_asymptotics(ctx: &GenFunContext, x: usize, t: usize) -> Result<ResidueAsymptotic, GenFunError> {
    let cands = candidate_poles(ctx);
    let bps = ctx.branch_points();
    let mut amplitude = [ZERO; 4];
    let mut poles = Vec::new();
    for &w in &cands {
        if on_spectrum_arc(ctx, w) {
            continue;
        }
        let mu = ctx.mu_at(w);
        if (ONE - mu * mu).norm() > 1e-6 {
            continue;
        }
        let nearest =
            bps.iter().chain(cands.iter().filter(|v| (*v - w).norm() > 1e-9)).map(|v| (v - w).norm()).fold(f64::INFINITY, f64::min);
        let mut eps = CONTOUR_EPS;
        while nearest < 4.0 * eps {
            eps /= 2.0;
            if eps < CONTOUR_EPS_MIN {
                return Err(GenFunError::BranchProximity { pole: w, distance: nearest, eps_min: CONTOUR_EPS_MIN });
            }
        }
        let residue = contour_residue(ctx, x, w, eps, CONTOUR_NODES);
        let phase = C64::from_polar(1.0, -((t + 1) as f64) * w.arg());
        for (a, r) in amplitude.iter_mut().zip(residue) {
            *a -= r * phase;
        }
        poles.push(PoleContribution { pole: w, mu, residue, eps });
    }
    Ok(ResidueAsymptotic { amplitude, poles })
}
