//! Graphical games: pairwise edge-games summed into per-agent payoff vectors.
//!
//! Agent `i` receives `p_i = Σ_{k≠i} A^{ik} x_k`. Pairs without a matrix are
//! treated as all-zero edge-games, so sparse interaction graphs need no
//! placeholder matrices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for the constant-sum identity on exact-input matrices.
pub const CONSTANT_SUM_TOL: f64 = 1e-12;

/// Tolerance on `Σ x_j = 1` for mixed strategies.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from rows. Ragged input is rejected.
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.cols.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// `out += self · x`
    #[inline]
    fn mul_add(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

/// Per-agent probability vectors `x_i ∈ Δ^{n_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixedProfile(Vec<Vec<f64>>);

impl MixedProfile {
    /// Validates that every block is a probability vector within [`SIMPLEX_TOL`].
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self> {
        for (agent, x) in blocks.iter().enumerate() {
            check_simplex(agent, x)?;
        }
        Ok(Self(blocks))
    }

    pub fn uniform(action_counts: &[usize]) -> Self {
        Self(
            action_counts
                .iter()
                .map(|&n| vec![1.0 / n as f64; n])
                .collect(),
        )
    }

    pub fn agents(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn agent(&self, i: usize) -> &[f64] {
        &self.0[i]
    }

    pub fn num_agents(&self) -> usize {
        self.0.len()
    }

    pub fn is_fully_mixed(&self) -> bool {
        self.0.iter().flatten().all(|&v| v > 0.0)
    }

    pub fn flat(&self) -> Vec<f64> {
        self.0.iter().flatten().copied().collect()
    }

    pub fn into_inner(self) -> Vec<Vec<f64>> {
        self.0
    }
}

pub(crate) fn check_simplex(agent: usize, x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::InvalidProfile {
            agent,
            reason: "empty strategy".into(),
        });
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidProfile {
            agent,
            reason: format!("entry {v} is negative or non-finite"),
        });
    }
    let s: f64 = x.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidProfile {
            agent,
            reason: format!("entries sum to {s}"),
        });
    }
    Ok(())
}

/// Per-agent payoff vectors `p_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PayoffProfile(Vec<Vec<f64>>);

impl PayoffProfile {
    pub fn agents(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn agent(&self, i: usize) -> &[f64] {
        &self.0[i]
    }

    pub fn into_inner(self) -> Vec<Vec<f64>> {
        self.0
    }
}

/// The constant `c^{ik}` of one unordered agent pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairConstant {
    pub i: usize,
    pub k: usize,
    pub c: f64,
}

/// Worst pair when the constant-sum identity fails. `spread` is the range of
/// `A^{ik}[j,l] + A^{ki}[l,j]` over all entries; `max_entry` and `min_entry`
/// locate the extreme sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantSumViolation {
    pub i: usize,
    pub k: usize,
    pub spread: f64,
    pub max_entry: (usize, usize),
    pub min_entry: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstantSum {
    Holds(Vec<PairConstant>),
    Violated(ConstantSumViolation),
}

impl ConstantSum {
    pub fn holds(&self) -> bool {
        matches!(self, ConstantSum::Holds(_))
    }

    /// `Σ_{i<k} c^{ik}`, the total payoff at every profile.
    pub fn total(&self) -> Option<f64> {
        match self {
            ConstantSum::Holds(cs) => Some(cs.iter().map(|c| c.c).sum()),
            ConstantSum::Violated(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashVerdict {
    pub is_nash: bool,
    pub is_fully_mixed: bool,
    /// `max_j p_i[j] − ⟨x_i, p_i⟩` per agent.
    pub best_response_gaps: Vec<f64>,
}

/// A graphical game over `m` agents.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    action_counts: Vec<usize>,
    offsets: Vec<usize>,
    /// `edges[i * m + k]` holds `A^{ik}`.
    edges: Vec<Option<Matrix>>,
    constant_sum_tol: f64,
}

impl GameSpec {
    /// Builds a game from `(from, to, A^{from,to})` triples; absent pairs are zero.
    pub fn new(
        action_counts: Vec<usize>,
        edges: impl IntoIterator<Item = (usize, usize, Matrix)>,
    ) -> Result<Self> {
        if action_counts.is_empty() {
            return Err(Error::InvalidSystem("game has no agents".into()));
        }
        if let Some(agent) = action_counts.iter().position(|&n| n == 0) {
            return Err(Error::InvalidProfile {
                agent,
                reason: "agent has no actions".into(),
            });
        }
        let m = action_counts.len();
        let mut slots = vec![None; m * m];
        for (from, to, a) in edges {
            if from >= m || to >= m || from == to {
                return Err(Error::InvalidEdge {
                    from,
                    to,
                    reason: format!("agents must be distinct and below {m}"),
                });
            }
            let (er, ec) = (action_counts[from], action_counts[to]);
            if a.rows != er || a.cols != ec {
                return Err(Error::EdgeShape {
                    from,
                    to,
                    expected_rows: er,
                    expected_cols: ec,
                    rows: a.rows,
                    cols: a.cols,
                });
            }
            if a.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "edge matrix",
                });
            }
            let slot: &mut Option<Matrix> = &mut slots[from * m + to];
            if slot.is_some() {
                return Err(Error::InvalidEdge {
                    from,
                    to,
                    reason: "duplicate edge".into(),
                });
            }
            *slot = Some(a);
        }
        let mut offsets = Vec::with_capacity(m + 1);
        let mut acc = 0;
        offsets.push(0);
        for &n in &action_counts {
            acc += n;
            offsets.push(acc);
        }
        Ok(Self {
            action_counts,
            offsets,
            edges: slots,
            constant_sum_tol: CONSTANT_SUM_TOL,
        })
    }

    /// Widens (or narrows) the tolerance used by the constant-sum check.
    pub fn with_constant_sum_tolerance(mut self, tol: f64) -> Self {
        self.constant_sum_tol = tol;
        self
    }

    pub fn constant_sum_tolerance(&self) -> f64 {
        self.constant_sum_tol
    }

    /// Two-agent Rock-Paper-Scissors with the 0/±1 skew-symmetric payoffs.
    pub fn rock_paper_scissors() -> Self {
        let a = Matrix::from_rows(&[
            vec![0.0, -1.0, 1.0],
            vec![1.0, 0.0, -1.0],
            vec![-1.0, 1.0, 0.0],
        ])
        .expect("square");
        let b = a.transpose().scaled(-1.0);
        Self::new(vec![3, 3], [(0, 1, a), (1, 0, b)]).expect("valid RPS")
    }

    /// Three-agent Cyclic Matching Pennies: `A^{12}=A^{23}=A^{31}=I`, reverse edges `−I`.
    pub fn cyclic_matching_pennies() -> Self {
        let id = Matrix::identity(2);
        let neg = id.scaled(-1.0);
        Self::new(
            vec![2, 2, 2],
            [
                (0, 1, id.clone()),
                (1, 2, id.clone()),
                (2, 0, id),
                (1, 0, neg.clone()),
                (2, 1, neg.clone()),
                (0, 2, neg),
            ],
        )
        .expect("valid CMP")
    }

    pub fn num_agents(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    /// Start offset of each agent's block in a concatenated vector; the last
    /// entry is the total action count.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn total_actions(&self) -> usize {
        self.offsets[self.num_agents()]
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&Matrix> {
        self.edges
            .get(from * self.num_agents() + to)
            .and_then(Option::as_ref)
    }

    /// Explicitly stored edges as `(from, to, matrix)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &Matrix)> {
        let m = self.num_agents();
        self.edges
            .iter()
            .enumerate()
            .filter_map(move |(idx, e)| e.as_ref().map(|a| (idx / m, idx % m, a)))
    }

    fn check_dims(&self, blocks: &[Vec<f64>]) -> Result<()> {
        if blocks.len() != self.num_agents() {
            return Err(Error::AgentCountMismatch {
                expected: self.num_agents(),
                found: blocks.len(),
            });
        }
        for (agent, (x, &n)) in blocks.iter().zip(&self.action_counts).enumerate() {
            if x.len() != n {
                return Err(Error::DimensionMismatch {
                    agent,
                    expected: n,
                    found: x.len(),
                });
            }
        }
        Ok(())
    }

    /// Payoff on concatenated vectors. `x` and `p` must have length
    /// [`total_actions`](Self::total_actions).
    pub fn payoff_flat(&self, x: &[f64], p: &mut [f64]) {
        let m = self.num_agents();
        p.fill(0.0);
        for i in 0..m {
            let (pi0, pi1) = (self.offsets[i], self.offsets[i + 1]);
            for k in 0..m {
                if let Some(a) = &self.edges[i * m + k] {
                    let xk = &x[self.offsets[k]..self.offsets[k + 1]];
                    a.mul_add(xk, &mut p[pi0..pi1]);
                }
            }
        }
    }

    /// `p_i = Σ_{k≠i} A^{ik} x_k` for every agent.
    pub fn payoff(&self, profile: &MixedProfile) -> Result<PayoffProfile> {
        self.check_dims(profile.agents())?;
        let x = profile.flat();
        let mut p = vec![0.0; x.len()];
        self.payoff_flat(&x, &mut p);
        Ok(PayoffProfile(self.split(&p)))
    }

    pub(crate) fn split(&self, flat: &[f64]) -> Vec<Vec<f64>> {
        self.offsets
            .windows(2)
            .map(|w| flat[w[0]..w[1]].to_vec())
            .collect()
    }

    /// Checks `A^{ik}[j,l] + A^{ki}[l,j] = c^{ik}` for every unordered pair
    /// within the game's constant-sum tolerance.
    pub fn validate_constant_sum(&self) -> ConstantSum {
        self.validate_constant_sum_with(self.constant_sum_tol)
    }

    pub fn validate_constant_sum_with(&self, tol: f64) -> ConstantSum {
        let m = self.num_agents();
        let mut constants = Vec::new();
        let mut worst: Option<ConstantSumViolation> = None;
        for i in 0..m {
            for k in i + 1..m {
                let (ni, nk) = (self.action_counts[i], self.action_counts[k]);
                let aik = self.edge(i, k);
                let aki = self.edge(k, i);
                let mut hi = (f64::NEG_INFINITY, (0, 0));
                let mut lo = (f64::INFINITY, (0, 0));
                for j in 0..ni {
                    for l in 0..nk {
                        let s = aik.map_or(0.0, |a| a.get(j, l)) + aki.map_or(0.0, |a| a.get(l, j));
                        if s > hi.0 {
                            hi = (s, (j, l));
                        }
                        if s < lo.0 {
                            lo = (s, (j, l));
                        }
                    }
                }
                let spread = hi.0 - lo.0;
                // a constant c with |s − c| ≤ tol everywhere exists iff the half-range fits
                if 0.5 * spread <= tol {
                    constants.push(PairConstant {
                        i,
                        k,
                        c: 0.5 * (hi.0 + lo.0),
                    });
                } else if worst.is_none_or(|w| spread > w.spread) {
                    worst = Some(ConstantSumViolation {
                        i,
                        k,
                        spread,
                        max_entry: hi.1,
                        min_entry: lo.1,
                    });
                }
            }
        }
        match worst {
            Some(v) => ConstantSum::Violated(v),
            None => ConstantSum::Holds(constants),
        }
    }

    /// Deviation-gap Nash check of a supplied candidate.
    pub fn verify_nash(&self, candidate: &MixedProfile, tol: f64) -> Result<NashVerdict> {
        let p = self.payoff(candidate)?;
        let gaps: Vec<f64> = candidate
            .agents()
            .iter()
            .zip(p.agents())
            .map(|(x, p)| {
                let best = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                best - dot(x, p)
            })
            .collect();
        Ok(NashVerdict {
            is_nash: gaps.iter().all(|&g| g <= tol),
            is_fully_mixed: candidate.is_fully_mixed(),
            best_response_gaps: gaps,
        })
    }

    /// Instantaneous supply `⟨x̂ − x̂*, −p̂(x̂)⟩` into the game operator shifted by `shift`.
    pub fn game_operator_supply(
        &self,
        profile: &MixedProfile,
        shift: &MixedProfile,
    ) -> Result<f64> {
        self.check_dims(shift.agents())?;
        if let ConstantSum::Violated(v) = self.validate_constant_sum() {
            return Err(Error::NotConstantSum {
                i: v.i,
                k: v.k,
                spread: v.spread,
            });
        }
        let p = self.payoff(profile)?.into_inner();
        Ok(profile
            .agents()
            .iter()
            .zip(shift.agents())
            .zip(&p)
            .map(|((x, xs), p)| {
                x.iter()
                    .zip(xs)
                    .zip(p)
                    .map(|((a, b), p)| -(a - b) * p)
                    .sum::<f64>()
            })
            .sum())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// On-disk game description; agents are 0-based and matrices row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub action_counts: Vec<usize>,
    #[serde(default)]
    pub edges: Vec<EdgeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub from: usize,
    pub to: usize,
    pub matrix: Vec<Vec<f64>>,
}

impl TryFrom<GameFile> for GameSpec {
    type Error = Error;

    fn try_from(file: GameFile) -> Result<Self> {
        let mut edges = Vec::with_capacity(file.edges.len());
        for e in file.edges {
            let m = Matrix::from_rows(&e.matrix).ok_or_else(|| Error::InvalidEdge {
                from: e.from,
                to: e.to,
                reason: "ragged matrix rows".into(),
            })?;
            edges.push((e.from, e.to, m));
        }
        GameSpec::new(file.action_counts, edges)
    }
}

impl From<&GameSpec> for GameFile {
    fn from(game: &GameSpec) -> Self {
        let mut ordered = BTreeMap::new();
        for (from, to, a) in game.edges() {
            ordered.insert((from, to), a.to_rows());
        }
        GameFile {
            action_counts: game.action_counts.clone(),
            edges: ordered
                .into_iter()
                .map(|((from, to), matrix)| EdgeEntry { from, to, matrix })
                .collect(),
        }
    }
}
