//! The four-component half-line walk X* and its projection onto branches.
//!
//! Starting from |Own, 0, ε⟩ the enlarged walk stays in the span of
//! |Own, x, l⟩ and |Other, x, l⟩, so a single half line with four amplitudes
//! per site carries every initial state at once. A branch is recovered with
//! the row vector Λ_r(ψ).

use crate::coin::{CoinError, CoinU2, DerivedParams, InitialState, Mat2};
use crate::report::{LimitReport, ReportRow};
use crate::walker::{joined_probabilities, step_joined, WalkError, WalkState};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Component order used throughout: (Own, Up), (Other, Up), (Own, Down), (Other, Down).
pub const OWN_UP: usize = 0;
pub const OTHER_UP: usize = 1;
pub const OWN_DOWN: usize = 2;
pub const OTHER_DOWN: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    /// Amplitudes of |Own, 0, ε⟩ and |Other, 0, ε⟩.
    pub origin: [C64; 2],
    /// `body[x]` for x ≥ 1; `body[0]` is unused.
    pub body: Vec<[C64; 4]>,
    pub time: usize,
}

impl ReducedState {
    /// |Own, 0, ε⟩ with room for `t_max` steps.
    pub fn initial(t_max: usize) -> Self {
        ReducedState { origin: [C64::new(1.0, 0.0), ZERO], body: vec![[ZERO; 4]; t_max + 2], time: 0 }
    }

    pub fn norm_sqr(&self) -> f64 {
        let o = self.origin[0].norm_sqr() + self.origin[1].norm_sqr();
        o + self.body.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// The four amplitudes at x, with the origin pair placed in the Up slots.
    pub fn components(&self, x: usize) -> [C64; 4] {
        if x == 0 {
            [self.origin[0], self.origin[1], ZERO, ZERO]
        } else {
            self.body.get(x).copied().unwrap_or([ZERO; 4])
        }
    }
}

/// Evolution of X* for a fixed coin and κ; steps in place between two buffers.
#[derive(Debug, Clone, Copy)]
pub struct ReducedWalk {
    coin: Mat2,
    a_kappa: f64,
    s_kappa: f64,
}

impl ReducedWalk {
    pub fn new(coin: &CoinU2, params: &DerivedParams) -> Self {
        ReducedWalk { coin: *coin.matrix(), a_kappa: params.a_kappa, s_kappa: params.s_kappa() }
    }

    /// Writes one step of `src` into `dst`, reusing its storage.
    pub fn step_into(&self, src: &ReducedState, dst: &mut ReducedState) {
        let reach = src.time;
        let need = reach + 3;
        if dst.body.len() < need {
            dst.body.resize(need, [ZERO; 4]);
        }
        let m = &self.coin;
        let (ak, sk) = (self.a_kappa, self.s_kappa);
        let top = (reach.max(dst.time) + 3).min(dst.body.len());
        for cell in &mut dst.body[..top] {
            *cell = [ZERO; 4];
        }
        let (own0, oth0) = (src.origin[0], src.origin[1]);
        dst.body[1][OWN_DOWN] = own0 * ak + oth0 * sk;
        dst.body[1][OTHER_DOWN] = own0 * sk - oth0 * ak;
        dst.origin = [ZERO; 2];
        for x in 1..=reach {
            let v = match src.body.get(x) {
                Some(v) => *v,
                None => break,
            };
            let (own_u, own_d) = m.apply(v[OWN_UP], v[OWN_DOWN]);
            let (oth_u, oth_d) = m.apply(v[OTHER_UP], v[OTHER_DOWN]);
            if x == 1 {
                dst.origin = [own_u, oth_u];
            } else {
                dst.body[x - 1][OWN_UP] = own_u;
                dst.body[x - 1][OTHER_UP] = oth_u;
            }
            dst.body[x + 1][OWN_DOWN] = own_d;
            dst.body[x + 1][OTHER_DOWN] = oth_d;
        }
        dst.time = src.time + 1;
    }

    pub fn step(&self, src: &ReducedState) -> ReducedState {
        let mut dst = ReducedState { origin: [ZERO; 2], body: vec![[ZERO; 4]; src.body.len()], time: 0 };
        self.step_into(src, &mut dst);
        dst
    }

    /// Evolves |Own, 0, ε⟩ for `t` steps.
    pub fn evolve(&self, t: usize) -> ReducedState {
        self.evolve_with(t, |_| {})
    }

    /// Evolves for `t` steps, calling `visit` on every intermediate state (t = 0 included).
    pub fn evolve_with(&self, t: usize, mut visit: impl FnMut(&ReducedState)) -> ReducedState {
        let mut a = ReducedState::initial(t);
        let mut b = a.clone();
        visit(&a);
        for _ in 0..t {
            self.step_into(&a, &mut b);
            std::mem::swap(&mut a, &mut b);
            visit(&a);
        }
        a
    }
}

/// One step of X* following the transition list.
pub fn step_reduced(state: &ReducedState, coin: &CoinU2, params: &DerivedParams) -> ReducedState {
    ReducedWalk::new(coin, params).step(state)
}

/// Row vector Λ_r(ψ) = ψ_r⟨Own| + (1/√(κ−1)) Σ_{j≠r} ψ_j ⟨Other|.
///
/// |Other⟩ carries a 1/√(κ−1) normalisation, so the branch-r component of
/// Other picks up Σ_{j≠r}ψ_j/√(κ−1). With this factor the projection equals
/// the direct probabilities exactly; a plain √(κ−1) factor does not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaProjector {
    pub own: C64,
    pub other: C64,
}

impl LambdaProjector {
    pub fn branch(psi: &InitialState, r: usize) -> Self {
        let k = psi.kappa();
        let other = if k > 1 { psi.others(r) / ((k - 1) as f64).sqrt() } else { ZERO };
        LambdaProjector { own: psi.get(r), other }
    }

    /// Λ_r applied to the four components: (Up amplitude, Down amplitude).
    pub fn apply(&self, v: &[C64; 4]) -> (C64, C64) {
        (self.own * v[OWN_UP] + self.other * v[OTHER_UP], self.own * v[OWN_DOWN] + self.other * v[OTHER_DOWN])
    }

    pub fn prob(&self, v: &[C64; 4]) -> f64 {
        let (u, d) = self.apply(v);
        u.norm_sqr() + d.norm_sqr()
    }
}

fn check_psi(psi: &InitialState) -> Result<(), CoinError> {
    let n: f64 = psi.as_slice().iter().map(|v| v.norm_sqr()).sum();
    if (n - 1.0).abs() > 1e-12 {
        return Err(CoinError::NotNormalized(n));
    }
    Ok(())
}

/// P(X_{t,r} = x) for x = 0..=t.
pub fn prob_xtr(state: &ReducedState, psi: &InitialState, r: usize) -> Result<Vec<f64>, CoinError> {
    check_psi(psi)?;
    let l = LambdaProjector::branch(psi, r);
    Ok((0..=state.time).map(|x| l.prob(&state.components(x))).collect())
}

/// P(X_{t,r} = x) for a single x.
pub fn prob_at(state: &ReducedState, psi: &InitialState, r: usize, x: usize) -> f64 {
    LambdaProjector::branch(psi, r).prob(&state.components(x))
}

/// Rebuilds the state on 𝕁_κ: Ψ_t = Λ(ψ)Ψ′_t.
pub fn lift_to_joined(state: &ReducedState, psi: &InitialState) -> WalkState {
    let k = psi.kappa();
    let mut w = WalkState::initial(psi, state.time);
    w.time = state.time;
    for r in 0..k {
        let l = LambdaProjector::branch(psi, r);
        w.origin[r] = l.apply(&state.components(0)).0;
        for x in 1..=state.time {
            let (u, d) = l.apply(&state.components(x));
            w.up[r][x] = u;
            w.down[r][x] = d;
        }
    }
    w
}

/// Compares reduced-walk branch probabilities with the direct walk on 𝕁_κ for
/// every t ≤ t_max, r and x ≤ t.
pub fn reduction_oracle(coin: &CoinU2, params: &DerivedParams, psi: &InitialState, t_max: usize) -> Result<LimitReport, WalkError> {
    check_psi(psi)?;
    let k = params.kappa;
    if psi.kappa() != k {
        return Err(CoinError::WrongLength { got: psi.kappa(), kappa: k }.into());
    }
    let walk = ReducedWalk::new(coin, params);
    let mut red = ReducedState::initial(t_max);
    let mut spare = red.clone();
    let mut direct = WalkState::initial(psi, t_max);
    let mut rows = Vec::with_capacity(k * (t_max + 1) * (t_max + 2) / 2);
    for t in 0..=t_max {
        if t > 0 {
            walk.step_into(&red, &mut spare);
            std::mem::swap(&mut red, &mut spare);
            direct = step_joined(&direct, coin.matrix())?;
        }
        let pd = joined_probabilities(&direct);
        for r in 0..k {
            let l = LambdaProjector::branch(psi, r);
            for x in 0..=t {
                rows.push(ReportRow::new(t, x, r, pd.get(r, x), l.prob(&red.components(x))));
            }
        }
    }
    Ok(LimitReport::from_rows(rows))
}
