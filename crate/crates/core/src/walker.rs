//! Direct simulation on the joined half lines 𝕁_κ and on trees.

use crate::coin::{grover_weights, make_grover, CoinError, InitialState, Mat2, SquareMatrix};
use crate::report::{LimitReport, ReportRow};
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use thiserror::Error;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("state has {state} branches but the operator expects {op}")]
    Structure { state: usize, op: usize },
    #[error("tree word length {depth} exceeds the configured maximum depth {max}")]
    Capacity { depth: usize, max: usize },
    #[error(transparent)]
    Coin(#[from] CoinError),
}

/// A vertex of 𝕁_κ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JoinedVertex {
    Origin,
    HalfLine { r: usize, x: usize },
}

/// State on 𝕁_κ: κ amplitudes at the origin (labels ε_r) and dense (Up, Down)
/// arrays per branch indexed by x (index 0 unused).
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    pub origin: Vec<C64>,
    pub up: Vec<Vec<C64>>,
    pub down: Vec<Vec<C64>>,
    pub time: usize,
}

impl WalkState {
    /// Σ_j ψ_j |0, ε_j⟩, with room for `t_max` steps.
    pub fn initial(psi: &InitialState, t_max: usize) -> Self {
        let k = psi.kappa();
        let len = t_max + 2;
        WalkState { origin: psi.as_slice().to_vec(), up: vec![vec![ZERO; len]; k], down: vec![vec![ZERO; len]; k], time: 0 }
    }

    pub fn kappa(&self) -> usize {
        self.origin.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        let o: f64 = self.origin.iter().map(|v| v.norm_sqr()).sum();
        let b: f64 = self.up.iter().zip(&self.down).map(|(u, d)| u.iter().chain(d.iter()).map(|v| v.norm_sqr()).sum::<f64>()).sum();
        o + b
    }

    /// (α(x, Up), α(x, Down)) on branch r; x ≥ 1.
    pub fn amplitude(&self, r: usize, x: usize) -> (C64, C64) {
        (self.up[r].get(x).copied().unwrap_or(ZERO), self.down[r].get(x).copied().unwrap_or(ZERO))
    }

    fn ensure_len(&mut self, len: usize) {
        for v in self.up.iter_mut().chain(self.down.iter_mut()) {
            if v.len() < len {
                v.resize(len, ZERO);
            }
        }
    }
}

/// One step S_J F_J with bulk coin `bulk` and coin `origin` acting on the ε labels.
pub fn step_joined_with(state: &WalkState, bulk: &Mat2, origin: &SquareMatrix) -> Result<WalkState, WalkError> {
    let k = state.kappa();
    if origin.dim() != k || state.up.len() != k || state.down.len() != k {
        return Err(WalkError::Structure { state: k, op: origin.dim() });
    }
    let reach = state.time;
    let mut src = state.clone();
    src.ensure_len(reach + 3);
    let len = src.up[0].len();
    let mut next = WalkState { origin: vec![ZERO; k], up: vec![vec![ZERO; len]; k], down: vec![vec![ZERO; len]; k], time: state.time + 1 };
    let coined = origin.apply(&src.origin);
    for r in 0..k {
        next.down[r][1] = coined[r];
        let (up, down) = (&src.up[r], &src.down[r]);
        for x in 1..=reach {
            let (u, d) = bulk.apply(up[x], down[x]);
            if x == 1 {
                next.origin[r] = u;
            } else {
                next.up[r][x - 1] = u;
            }
            next.down[r][x + 1] = d;
        }
    }
    Ok(next)
}

/// One step of W_{t,κ}: Grover coin at the origin, `coin` elsewhere.
pub fn step_joined(state: &WalkState, coin: &Mat2) -> Result<WalkState, WalkError> {
    let g = make_grover(state.kappa() as i64)?;
    step_joined_with(state, coin, &g)
}

/// Probability table P(X_{t,r} = x): entry `[r][0]` is |α(0, ε_r)|², entry
/// `[r][x]` for x ≥ 1 is ‖Ψ_t(h_r(x))‖².
#[derive(Debug, Clone, PartialEq)]
pub struct BranchProbabilities {
    pub per_branch: Vec<Vec<f64>>,
}

impl BranchProbabilities {
    pub fn origin_total(&self) -> f64 {
        self.per_branch.iter().map(|b| b[0]).sum()
    }

    pub fn total(&self) -> f64 {
        self.per_branch.iter().flatten().sum()
    }

    pub fn get(&self, r: usize, x: usize) -> f64 {
        self.per_branch[r].get(x).copied().unwrap_or(0.0)
    }

    pub fn at(&self, v: JoinedVertex) -> f64 {
        match v {
            JoinedVertex::Origin => self.origin_total(),
            JoinedVertex::HalfLine { r, x } => self.get(r, x),
        }
    }
}

pub fn joined_probabilities(state: &WalkState) -> BranchProbabilities {
    let t = state.time;
    let per_branch = (0..state.kappa())
        .map(|r| {
            let mut p = Vec::with_capacity(t + 1);
            p.push(state.origin[r].norm_sqr());
            for x in 1..=t {
                let (u, d) = state.amplitude(r, x);
                p.push(u.norm_sqr() + d.norm_sqr());
            }
            p
        })
        .collect();
    BranchProbabilities { per_branch }
}

/// Reduced word of a tree vertex, stored first step first: the vertex
/// σ_{i_n}⋯σ_{i_1} is `[i_1, …, i_n]`.
pub type Word = Vec<u8>;

/// Walk on 𝕋_{κ′,κ}: degree κ′ at the root e with coin ω·G_{κ′}, degree κ
/// elsewhere with coin G_κ. κ′ = κ gives the homogeneous tree 𝕋_κ.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeWalk {
    pub kappa: usize,
    pub kappa_prime: usize,
    pub omega: C64,
    pub max_depth: usize,
}

pub const DEFAULT_MAX_DEPTH: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeWalkState {
    pub amplitudes: BTreeMap<(Word, u8), C64>,
    pub time: usize,
}

impl TreeWalkState {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|v| v.norm_sqr()).sum()
    }
}

impl TreeWalk {
    pub fn new(kappa: usize, kappa_prime: usize, omega: C64) -> Result<Self, WalkError> {
        if kappa < 2 || kappa_prime < 1 {
            return Err(CoinError::InvalidKappa.into());
        }
        if (omega.norm() - 1.0).abs() > 1e-12 {
            return Err(CoinError::NotUnitModulus(omega.norm()).into());
        }
        Ok(TreeWalk { kappa, kappa_prime, omega, max_depth: DEFAULT_MAX_DEPTH })
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    /// Σ_j ψ_j |e, σ_j⟩.
    pub fn initial(&self, psi: &InitialState) -> Result<TreeWalkState, WalkError> {
        if psi.kappa() != self.kappa_prime {
            return Err(WalkError::Structure { state: psi.kappa(), op: self.kappa_prime });
        }
        let amplitudes =
            psi.as_slice().iter().enumerate().filter(|(_, v)| v.norm_sqr() > 0.0).map(|(j, v)| ((Vec::new(), j as u8), *v)).collect();
        Ok(TreeWalkState { amplitudes, time: 0 })
    }

    /// Edge labels at a vertex: σ_0..σ_{κ′−1} at the root; elsewhere the label
    /// pointing back to the parent followed by κ−1 outward labels.
    fn labels(&self, word: &[u8]) -> Vec<u8> {
        match word.last() {
            None => (0..self.kappa_prime as u8).collect(),
            Some(&back) => {
                let mut l = vec![back];
                l.extend((0u8..).filter(|&j| j != back).take(self.kappa - 1));
                l
            }
        }
    }

    /// One step S_T F_T, with S_T|g, σ⟩ = |σg, σ⟩.
    pub fn step(&self, state: &TreeWalkState) -> Result<TreeWalkState, WalkError> {
        let mut next: BTreeMap<(Word, u8), C64> = BTreeMap::new();
        let mut iter = state.amplitudes.iter().peekable();
        while let Some(((word, _), _)) = iter.peek() {
            let word = word.clone();
            let labels = self.labels(&word);
            let mut v = vec![ZERO; labels.len()];
            while let Some(((w, l), amp)) = iter.peek() {
                if *w != word {
                    break;
                }
                let slot = labels.iter().position(|x| x == l).ok_or(WalkError::Structure { state: *l as usize, op: labels.len() })?;
                v[slot] = **amp;
                iter.next();
            }
            // G_d v = (2/d)Σv − v, which also covers d = 1.
            let dim = labels.len();
            let (_, b) = grover_weights(dim);
            let sum: C64 = v.iter().sum::<C64>() * if dim == 1 { 1.0 } else { b };
            let phase = if word.is_empty() { self.omega } else { C64::new(1.0, 0.0) };
            for (slot, &l) in labels.iter().enumerate() {
                let out = (sum - if dim == 1 { ZERO } else { v[slot] }) * phase;
                if out == ZERO {
                    continue;
                }
                let mut w = word.clone();
                if w.last() == Some(&l) {
                    w.pop();
                } else {
                    w.push(l);
                }
                if w.len() > self.max_depth {
                    return Err(WalkError::Capacity { depth: w.len(), max: self.max_depth });
                }
                *next.entry((w, l)).or_insert(ZERO) += out;
            }
        }
        Ok(TreeWalkState { amplitudes: next, time: state.time + 1 })
    }

    /// Shell probabilities in the same layout as [`BranchProbabilities`]:
    /// `[r][0]` is |⟨e, σ_r|Ψ⟩|², `[r][x]` sums ‖Ψ(g)‖² over |g| = x in the
    /// subtree entered through σ_r.
    pub fn shell_probabilities(&self, state: &TreeWalkState) -> BranchProbabilities {
        let t = state.time;
        let mut per_branch = vec![vec![0.0; t + 1]; self.kappa_prime];
        for ((w, l), amp) in &state.amplitudes {
            match w.first() {
                None => per_branch[*l as usize][0] += amp.norm_sqr(),
                Some(&r) => per_branch[r as usize][w.len()] += amp.norm_sqr(),
            }
        }
        BranchProbabilities { per_branch }
    }
}

/// Half-line coin equivalent to the bulk Grover coin G_κ on the tree.
///
/// With the shift rules on 𝕁_κ (Up keeps its label moving inward), the
/// symmetric sector of G_κ acts as [[√(κ−1)b_κ, a_κ], [−a_κ, √(κ−1)b_κ]].
/// The tree basis names the parent-pointing label Up, and that label reappears
/// as an outward label after the tree shift, which accounts for the column swap
/// relative to [[a_κ, √(κ−1)b_κ], [√(κ−1)b_κ, −a_κ]].
pub fn tree_reduced_coin(kappa: usize) -> Mat2 {
    let (a, b) = grover_weights(kappa);
    let s = ((kappa - 1) as f64).sqrt() * b;
    Mat2::real(s, a, -a, s)
}

/// Runs the tree walk and the equivalent walk on 𝕁_{κ′} side by side and
/// compares shell probabilities with branch probabilities for every t ≤ t_max.
pub fn tree_reduce_compare(
    kappa: usize,
    kappa_prime: usize,
    omega: C64,
    psi: &InitialState,
    t_max: usize,
    max_depth: usize,
) -> Result<LimitReport, WalkError> {
    tree_reduce_compare_with(kappa, kappa_prime, omega, psi, t_max, max_depth, &tree_reduced_coin(kappa))
}

/// As [`tree_reduce_compare`] with an explicit bulk coin on 𝕁_{κ′}.
pub fn tree_reduce_compare_with(
    kappa: usize,
    kappa_prime: usize,
    omega: C64,
    psi: &InitialState,
    t_max: usize,
    max_depth: usize,
    bulk: &Mat2,
) -> Result<LimitReport, WalkError> {
    let tree = TreeWalk::new(kappa, kappa_prime, omega)?.with_max_depth(max_depth);
    let origin = make_grover(kappa_prime as i64)?.scale(omega);
    let mut ts = tree.initial(psi)?;
    let mut js = WalkState::initial(psi, t_max);
    let mut rows = Vec::new();
    for t in 0..=t_max {
        if t > 0 {
            ts = tree.step(&ts)?;
            js = step_joined_with(&js, bulk, &origin)?;
        }
        let pt = tree.shell_probabilities(&ts);
        let pj = joined_probabilities(&js);
        for r in 0..kappa_prime {
            for x in 0..=t {
                rows.push(ReportRow::new(t, x, r, pt.get(r, x), pj.get(r, x)));
            }
        }
    }
    Ok(LimitReport::from_rows(rows))
}
