//! Agent-centric Markov chain over states `C_1 ..= C_N`, plus the exact
//! 2^N joint-configuration chain used as a brute-force oracle.
//!
//! The transition matrix is column-stochastic: entry (k, j) is the
//! probability the marked agent is in `C_k` tomorrow given `C_j` today, so
//! that `prob(t+1) = T * prob(t)` for column probability vectors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameConfig, StrategyProfile};

/// Above this count, binomial weights are accumulated in log space.
const LOG_SPACE_THRESHOLD: usize = 40;

/// Largest N for which the 2^N joint chain may be built.
pub const FULL_MATRIX_MAX_AGENTS: usize = 12;

/// Binomial(n, p) probability mass function as a vector of length n + 1.
fn binomial_pmf_vec(n: usize, p: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; n + 1];
    if p <= 0.0 {
        pmf[0] = 1.0;
        return pmf;
    }
    if p >= 1.0 {
        pmf[n] = 1.0;
        return pmf;
    }
    let q = 1.0 - p;
    if n <= LOG_SPACE_THRESHOLD {
        // multiplicative recurrence: pmf[k+1] = pmf[k] * (n-k)/(k+1) * p/q
        let mut v = q.powi(n as i32);
        for (k, slot) in pmf.iter_mut().enumerate() {
            *slot = v;
            if k < n {
                v *= (n - k) as f64 / (k + 1) as f64 * p / q;
            }
        }
    } else {
        let mut ln_fact = vec![0.0; n + 1];
        for k in 1..=n {
            ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
        }
        let (ln_p, ln_q) = (p.ln(), q.ln());
        for (k, slot) in pmf.iter_mut().enumerate() {
            let ln_c = ln_fact[n] - ln_fact[k] - ln_fact[n - k];
            *slot = (ln_c + k as f64 * ln_p + (n - k) as f64 * ln_q).exp();
        }
    }
    pmf
}

/// Distribution of the marked agent's occupancy tomorrow, given she is in a
/// restaurant with `j` people today, she jumps with probability `p_marked`,
/// each of her `j - 1` companions jumps with `p_comp`, and each of the
/// `n - j` agents opposite jumps with `p_opp`. Returned as `N` masses for
/// occupancies `1 ..= N`.
///
/// With A ~ Binomial(j-1, p_comp) companions leaving and
/// B ~ Binomial(n-j, p_opp) opponents arriving, staying yields occupancy
/// `1 + (j-1-A) + B` and jumping yields `1 + A + (n-j-B)`.
pub(crate) fn occupancy_distribution(
    n: usize,
    j: usize,
    p_marked: f64,
    p_comp: f64,
    p_opp: f64,
) -> Vec<f64> {
    let pmf_a = binomial_pmf_vec(j - 1, p_comp);
    let pmf_b = binomial_pmf_vec(n - j, p_opp);
    let mut out = vec![0.0; n];
    let q_marked = 1.0 - p_marked;
    for (a, &wa) in pmf_a.iter().enumerate() {
        if wa == 0.0 {
            continue;
        }
        for (b, &wb) in pmf_b.iter().enumerate() {
            let w = wa * wb;
            if w == 0.0 {
                continue;
            }
            let stay_occ = 1 + (j - 1 - a) + b;
            let jump_occ = 1 + a + (n - j - b);
            out[stay_occ - 1] += q_marked * w;
            out[jump_occ - 1] += p_marked * w;
        }
    }
    out
}

/// Column-stochastic N x N transition matrix over agent-centric states.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    matrix: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn n_states(&self) -> usize {
        self.matrix.nrows()
    }

    /// Entry (k, j), 1-based: probability of `C_k` tomorrow given `C_j` today.
    pub fn entry(&self, k: usize, j: usize) -> f64 {
        self.matrix[(k - 1, j - 1)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Columns as plain vectors, for JSON dumps.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.matrix.ncols())
            .map(|j| self.matrix.column(j).iter().copied().collect())
            .collect()
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n = columns.len();
        for col in columns {
            if col.len() != n {
                return Err(Error::ProfileLength {
                    got: col.len(),
                    expected: n,
                });
            }
        }
        let matrix = DMatrix::from_fn(n, n, |r, c| columns[c][r]);
        Ok(Self { matrix })
    }

    pub fn max_column_sum_error(&self) -> f64 {
        (0..self.matrix.ncols())
            .map(|j| (self.matrix.column(j).sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Builds the agent-centric transition matrix by binomial convolution.
pub fn build_transition_matrix(
    profile: &StrategyProfile,
    config: &GameConfig,
) -> Result<TransitionMatrix> {
    let n = config.n_agents;
    if profile.len() != n {
        return Err(Error::ProfileLength {
            got: profile.len(),
            expected: n,
        });
    }
    let mut matrix = DMatrix::zeros(n, n);
    for j in 1..=n {
        let p_j = profile.prob(j);
        let p_opp = if j < n { profile.prob(n - j) } else { 0.0 };
        let col = occupancy_distribution(n, j, p_j, p_j, p_opp);
        for k in 1..=n {
            matrix[(k - 1, j - 1)] = col[k - 1];
        }
    }
    Ok(TransitionMatrix { matrix })
}

/// Exact joint chain over all 2^N restaurant assignments. Configurations are
/// indexed by bitmask; bit i set means agent i sits in restaurant A.
#[derive(Debug, Clone)]
pub struct FullConfigMatrix {
    matrix: DMatrix<f64>,
    n_agents: usize,
}

impl FullConfigMatrix {
    pub fn n_configs(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    /// Entry (to, from) over configuration bitmasks.
    pub fn entry(&self, to: usize, from: usize) -> f64 {
        self.matrix[(to, from)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn max_column_sum_error(&self) -> f64 {
        (0..self.matrix.ncols())
            .map(|j| (self.matrix.column(j).sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Builds the 2^N joint-configuration chain in which each agent in a
/// restaurant of occupancy i jumps independently with probability `p_i`.
/// Rejects N > 12.
pub fn build_full_matrix(
    profile: &StrategyProfile,
    config: &GameConfig,
) -> Result<FullConfigMatrix> {
    let n = config.n_agents;
    if n > FULL_MATRIX_MAX_AGENTS {
        return Err(Error::FullMatrixTooLarge {
            got: n,
            max: FULL_MATRIX_MAX_AGENTS,
        });
    }
    if profile.len() != n {
        return Err(Error::ProfileLength {
            got: profile.len(),
            expected: n,
        });
    }
    let size = 1usize << n;
    let mut matrix = DMatrix::zeros(size, size);
    for from in 0..size {
        let occ_a = from.count_ones() as usize;
        // jump probability per agent, by current restaurant
        let mut p_jump = [0.0f64; FULL_MATRIX_MAX_AGENTS];
        for (agent, slot) in p_jump.iter_mut().enumerate().take(n) {
            let occupancy = if from & (1 << agent) != 0 {
                occ_a
            } else {
                n - occ_a
            };
            *slot = profile.prob(occupancy);
        }
        for to in 0..size {
            let moved = from ^ to;
            let mut prob = 1.0;
            for (agent, &p) in p_jump.iter().enumerate().take(n) {
                prob *= if moved & (1 << agent) != 0 { p } else { 1.0 - p };
                if prob == 0.0 {
                    break;
                }
            }
            matrix[(to, from)] = prob;
        }
    }
    Ok(FullConfigMatrix { matrix, n_agents: n })
}

/// Reduces the joint chain to the occupancy chain of one marked agent
/// (1-based index). Averages uniformly over all configurations consistent
/// with each current state; by exchangeability the conditional law is the
/// same for every such configuration.
pub fn marginalize_to_agent(full: &FullConfigMatrix, agent: usize) -> Result<TransitionMatrix> {
    let n = full.n_agents;
    if agent < 1 || agent > n {
        return Err(Error::AgentOutOfRange {
            index: agent,
            max: n,
        });
    }
    let bit = 1usize << (agent - 1);
    let size = 1usize << n;

    let occupancy_of = |config: usize| -> usize {
        let occ_a = config.count_ones() as usize;
        if config & bit != 0 {
            occ_a
        } else {
            n - occ_a
        }
    };

    let mut matrix = DMatrix::zeros(n, n);
    let mut source_counts = vec![0usize; n];
    for from in 0..size {
        let j = occupancy_of(from);
        source_counts[j - 1] += 1;
        for to in 0..size {
            let p = full.matrix[(to, from)];
            if p == 0.0 {
                continue;
            }
            let k = occupancy_of(to);
            matrix[(k - 1, j - 1)] += p;
        }
    }
    for j in 0..n {
        let count = source_counts[j] as f64;
        for k in 0..n {
            matrix[(k, j)] /= count;
        }
    }
    Ok(TransitionMatrix { matrix })
}

/// Result of the paired-state change of basis: one (M+1)-dimensional block
/// on the symmetric vectors plus the unpaired `|N>`, and one M-dimensional
/// block on the antisymmetric vectors.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub symmetric_block: DMatrix<f64>,
    pub antisymmetric_block: DMatrix<f64>,
    /// Change-of-basis matrix; its rows are the basis covectors, ordered
    /// `s_1 .. s_M`, `|N>`, `a_1 .. a_M`.
    pub basis: DMatrix<f64>,
    /// Largest magnitude found outside the two diagonal blocks.
    pub max_off_block: f64,
}

/// Changes basis from states `|i>`, `|N-i>` to the paired vectors
/// `s_i = |i> + |N-i>` and `a_i = (N-i)|i> - i|N-i>`. For any matrix built
/// from a valid profile the transformed matrix is block diagonal; the basis
/// vectors act as covectors (the transform is `V T V^-1` with the s/a
/// vectors as rows of V).
pub fn block_diagonalize(t: &TransitionMatrix, config: &GameConfig) -> Result<BlockDecomposition> {
    let n = config.n_agents;
    let m = config.m_half;
    let mut v = DMatrix::zeros(n, n);
    // rows 0..m: s_i = e_i + e_{N-i}
    for i in 1..=m {
        v[(i - 1, i - 1)] = 1.0;
        v[(i - 1, n - i - 1)] = 1.0;
    }
    // row m: the unpaired |N>
    v[(m, n - 1)] = 1.0;
    // rows m+1..: a_i = (N-i) e_i - i e_{N-i}
    for i in 1..=m {
        v[(m + i, i - 1)] = (n - i) as f64;
        v[(m + i, n - i - 1)] = -(i as f64);
    }
    let v_inv = v
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SolveFailed("pair basis is singular".into()))?;
    let b = &v * t.as_matrix() * v_inv;

    let split = m + 1;
    let mut max_off = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            let in_sym = r < split && c < split;
            let in_anti = r >= split && c >= split;
            if !in_sym && !in_anti {
                max_off = max_off.max(b[(r, c)].abs());
            }
        }
    }
    if max_off > config.tol {
        return Err(Error::BlockStructureViolated {
            max_off_block: max_off,
            tol: config.tol,
        });
    }
    Ok(BlockDecomposition {
        symmetric_block: b.view((0, 0), (split, split)).into(),
        antisymmetric_block: b.view((split, split), (m, m)).into(),
        basis: v,
        max_off_block: max_off,
    })
}

/// Stationary distribution plus reducibility diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// Stationary probabilities over `C_1 ..= C_N`. For reducible chains,
    /// the long-run distribution reached from the uniform configuration
    /// initial condition (independent fair coins).
    pub distribution: Vec<f64>,
    /// True when the chain has more than one communicating class.
    pub reducible: bool,
    /// Closed communicating classes carrying positive long-run mass,
    /// as sorted lists of 1-based states.
    pub closed_classes: Vec<Vec<usize>>,
}

impl SteadyState {
    /// Stationary probability of `C_state`, 1-based.
    pub fn prob(&self, state: usize) -> f64 {
        self.distribution[state - 1]
    }

    /// Steady-state probability of sitting in the minority, sum over
    /// occupancies `1 ..= M`.
    pub fn minority_mass(&self) -> f64 {
        let m = (self.distribution.len() - 1) / 2;
        self.distribution[..m].iter().sum()
    }
}

/// Strongly connected components of the support graph, by Tarjan.
fn communicating_classes(t: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = t.nrows();
    // edge j -> k iff T[k][j] > 0
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|j| (0..n).filter(|&k| t[(k, j)] > 0.0).collect())
        .collect();

    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0usize;
    let mut components = Vec::new();

    // iterative Tarjan
    enum Frame {
        Enter(usize),
        Resume(usize, usize),
    }
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work = vec![Frame::Enter(root)];
        while let Some(frame) = work.pop() {
            match frame {
                Frame::Enter(v) => {
                    index[v] = next_index;
                    low[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    work.push(Frame::Resume(v, 0));
                }
                Frame::Resume(v, mut ei) => {
                    let mut descended = false;
                    while ei < adj[v].len() {
                        let w = adj[v][ei];
                        ei += 1;
                        if index[w] == usize::MAX {
                            work.push(Frame::Resume(v, ei));
                            work.push(Frame::Enter(w));
                            descended = true;
                            break;
                        } else if on_stack[w] {
                            low[v] = low[v].min(index[w]);
                        }
                    }
                    if descended {
                        continue;
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        while let Some(w) = stack.pop() {
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        components.push(comp);
                    } else if let Some(Frame::Resume(parent, _)) = work.last() {
                        let parent = *parent;
                        low[parent] = low[parent].min(low[v]);
                    }
                }
            }
        }
    }
    components
}

fn is_closed(class: &[usize], t: &DMatrix<f64>) -> bool {
    let n = t.nrows();
    class.iter().all(|&j| {
        (0..n).all(|k| t[(k, j)] == 0.0 || class.binary_search(&k).is_ok())
    })
}

/// Stationary distribution by direct linear solve of `(T - I) pi = 0` with a
/// normalization row, falling back to Cesaro-averaged power iteration. For
/// reducible chains the result is flagged and the closed classes reached
/// from the uniform initial condition are listed.
pub fn steady_state(t: &TransitionMatrix, tol: f64) -> SteadyState {
    let classes = communicating_classes(t.as_matrix());
    let reducible = classes.len() > 1;

    let distribution = if reducible {
        limit_distribution(t.as_matrix())
    } else {
        match solve_stationary(t.as_matrix()) {
            Some(pi) if stationary_residual(t.as_matrix(), &pi) <= tol.max(1e-12) => pi,
            _ => limit_distribution(t.as_matrix()),
        }
    };

    let closed_classes = if reducible {
        classes
            .into_iter()
            .filter(|class| {
                is_closed(class, t.as_matrix())
                    && class.iter().map(|&j| distribution[j]).sum::<f64>() > tol
            })
            .map(|class| class.into_iter().map(|j| j + 1).collect())
            .collect()
    } else {
        Vec::new()
    };

    SteadyState {
        distribution,
        reducible,
        closed_classes,
    }
}

fn solve_stationary(t: &DMatrix<f64>) -> Option<Vec<f64>> {
    let n = t.nrows();
    let mut a = t - DMatrix::<f64>::identity(n, n);
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let lu = a.lu();
    let x = lu.solve(&rhs)?;
    if x.iter().any(|&v| v < -1e-9 || !v.is_finite()) {
        return None;
    }
    let sum: f64 = x.iter().sum();
    Some(x.iter().map(|&v| (v / sum).max(0.0)).collect())
}

fn stationary_residual(t: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let v = DVector::from_column_slice(pi);
    (t * &v - &v).abs().max()
}

/// State distribution induced by the uniform configuration start (every
/// agent an independent fair coin): `Prob(C_i) = (i/N) * 2 C(N, i) 2^{-N}`.
/// This start is exchangeable, so it preserves the occupancy-ratio identity
/// along the whole trajectory.
fn fair_coin_state_distribution(n: usize) -> Vec<f64> {
    let attendance = binomial_pmf_vec(n, 0.5);
    (1..=n)
        .map(|i| i as f64 * (attendance[i] + attendance[n - i]) / n as f64)
        .collect()
}

/// Long-run distribution from the uniform configuration start, via repeated
/// squaring of the lazy chain `(T + I)/2`. The lazy chain shares the
/// eigenvalue-1 projector of `T` but pulls every other eigenvalue strictly
/// inside the unit disk, so its powers converge geometrically regardless of
/// periodicity, and squaring reaches 2^60 steps in 60 products.
fn limit_distribution(t: &DMatrix<f64>) -> Vec<f64> {
    let n = t.nrows();
    let mut lazy = (t + DMatrix::<f64>::identity(n, n)) * 0.5;
    for _ in 0..60 {
        lazy = &lazy * &lazy;
        // renormalize columns against rounding drift
        for j in 0..n {
            let s = lazy.column(j).sum();
            for i in 0..n {
                lazy[(i, j)] /= s;
            }
        }
    }
    let x = &lazy * DVector::from_column_slice(&fair_coin_state_distribution(n));
    let sum: f64 = x.iter().sum();
    x.iter().map(|&v| v / sum).collect()
}

/// Closed-form eigenvalues of the N = 3 transition matrix with profile
/// `(0, p2, 1/2)`: `(1, (1 - 4 p2^2)/4, q2 (q2 - p2))` with `q2 = 1 - p2`.
pub fn eigen3_analytic(p2: f64) -> (f64, f64, f64) {
    let q2 = 1.0 - p2;
    (1.0, (1.0 - 4.0 * p2 * p2) / 4.0, q2 * (q2 - p2))
}
