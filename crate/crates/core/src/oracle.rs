//! Brute-force reference computations over compatible precise Markov chains.
//!
//! Homogeneous chains are built by picking one vertex per row. Expected time
//! averages of precise chains are computed forward from the starting state,
//! independently of the backward `T̄_f` recursion they are compared with.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ergodicity::{self, LimitConfig};
use crate::error::{Error, Result};
use crate::graph;
use crate::model::{CredalRow, Gamble, IntervalRow, Pmf, TransitionModel};
use crate::operator::UpperTransitionOperator;

/// Largest state count for which interval rows are converted to vertices.
pub const MAX_VERTEXIZE_STATES: usize = 6;

const DEDUP_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    /// Maximum number of candidates any enumeration may visit.
    pub cap: u128,
    /// Random interior chains sampled by [`ri_upper_average`].
    pub samples: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            cap: 1_000_000,
            samples: 200,
            seed: 0,
        }
    }
}

/// A single row-stochastic transition matrix drawn from the model.
#[derive(Clone, Debug, PartialEq)]
pub struct PreciseChain {
    rows: Vec<Vec<f64>>,
    /// Vertex index chosen per row; `None` for sampled interior rows.
    choice: Option<Vec<usize>>,
}

impl PreciseChain {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        for row in &rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            Pmf::new(row.clone())?;
        }
        Ok(Self { rows, choice: None })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn choice(&self) -> Option<&[usize]> {
        self.choice.as_deref()
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// `T h`.
    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(h).map(|(p, v)| p * v).sum())
            .collect()
    }

    /// Whether some `x` in `set` can move outside `set` in one step.
    pub fn leaves(&self, set: &crate::model::StateSet) -> bool {
        set.iter()
            .any(|&x| (0..self.n()).any(|y| !set.contains(&y) && self.rows[x][y] > 0.0))
    }

    fn describe(&self) -> String {
        match &self.choice {
            Some(c) => format!("vertices {c:?}"),
            None => "sampled interior chain".to_string(),
        }
    }
}

/// Extreme points of a probability-interval row. Each one is the greedy
/// allocation for some ordering of the states.
pub fn interval_vertices(row: &IntervalRow) -> Result<Vec<Pmf>> {
    let n = row.len();
    if n > MAX_VERTEXIZE_STATES {
        return Err(Error::CapExceeded {
            count: (1..=n as u128).product(),
            cap: (1..=MAX_VERTEXIZE_STATES as u128).product(),
        });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out: Vec<Vec<f64>> = Vec::new();
    loop {
        let mut p = row.lower().to_vec();
        let mut remaining = 1.0 - p.iter().sum::<f64>();
        for &y in &perm {
            let add = (row.upper()[y] - row.lower()[y]).min(remaining).max(0.0);
            p[y] += add;
            remaining -= add;
        }
        let duplicate = out
            .iter()
            .any(|q| q.iter().zip(&p).all(|(a, b)| (a - b).abs() <= DEDUP_EPS));
        if !duplicate {
            out.push(p);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    out.into_iter().map(Pmf::new).collect()
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Replaces every interval row by the list of its extreme points.
pub fn vertexize(model: &TransitionModel) -> Result<TransitionModel> {
    let rows = model
        .rows()
        .iter()
        .map(|row| match row {
            CredalRow::Vertices(_) => Ok(row.clone()),
            CredalRow::Intervals(iv) => CredalRow::vertices(interval_vertices(iv)?),
        })
        .collect::<Result<Vec<_>>>()?;
    TransitionModel::new(model.states().clone(), rows)
}

fn vertex_lists(model: &TransitionModel) -> Result<Vec<&[Pmf]>> {
    model
        .rows()
        .iter()
        .map(|row| match row {
            CredalRow::Vertices(pmfs) => Ok(pmfs.as_slice()),
            CredalRow::Intervals(_) => Err(Error::IntervalRowsPresent),
        })
        .collect()
}

fn product_count(lists: &[&[Pmf]]) -> u128 {
    lists
        .iter()
        .fold(1u128, |acc, l| acc.saturating_mul(l.len() as u128))
}

/// Mixed-radix decoding, state 0 most significant.
fn decode_choice(mut index: u128, lists: &[&[Pmf]]) -> Vec<usize> {
    let mut choice = vec![0; lists.len()];
    for (x, l) in lists.iter().enumerate().rev() {
        let radix = l.len() as u128;
        choice[x] = (index % radix) as usize;
        index /= radix;
    }
    choice
}

fn chain_from_choice(lists: &[&[Pmf]], choice: Vec<usize>) -> PreciseChain {
    let rows = choice
        .iter()
        .zip(lists)
        .map(|(&c, l)| l[c].probs().to_vec())
        .collect();
    PreciseChain {
        rows,
        choice: Some(choice),
    }
}

/// Number of homogeneous vertex chains of a vertex-only model.
pub fn homogeneous_count(model: &TransitionModel) -> Result<u128> {
    Ok(product_count(&vertex_lists(model)?))
}

/// All chains picking one vertex per row, in lexicographic order.
pub fn enumerate_homogeneous(model: &TransitionModel, cap: u128) -> Result<Vec<PreciseChain>> {
    let lists = vertex_lists(model)?;
    let count = product_count(&lists);
    if count > cap {
        return Err(Error::CapExceeded { count, cap });
    }
    Ok((0..count)
        .map(|i| chain_from_choice(&lists, decode_choice(i, &lists)))
        .collect())
}

/// `E_P(f_av(X_{1:k}) | X_1 = x)` for every start state `x`.
pub fn precise_time_averages(chain: &PreciseChain, f: &Gamble, k: usize) -> Result<Gamble> {
    f.check_dim(chain.n())?;
    if k == 0 {
        return Err(Error::Schema("time horizon k must be at least 1".into()));
    }
    let mut term = f.values().to_vec();
    let mut sum = term.clone();
    for _ in 1..k {
        term = chain.apply(&term);
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
    }
    Gamble::new(sum.into_iter().map(|s| s / k as f64).collect())
}

pub fn precise_time_average(chain: &PreciseChain, f: &Gamble, x: usize, k: usize) -> Result<f64> {
    Ok(precise_time_averages(chain, f, k)?[x])
}

/// Exact maximum over an enumerated family.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub argmax: String,
    pub count: u128,
}

/// Lower bound on the repetition-independent upper time average.
#[derive(Clone, Debug, PartialEq)]
pub struct RiEstimate {
    pub vertex: OracleResult,
    pub sampled: Option<OracleResult>,
    pub value: f64,
}

fn sample_chain(lists: &[&[Pmf]], rng: &mut ChaCha8Rng) -> PreciseChain {
    let rows = lists
        .iter()
        .map(|l| {
            let w: Vec<f64> = l.iter().map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let total: f64 = w.iter().sum();
            let n = l[0].len();
            (0..n)
                .map(|y| {
                    l.iter()
                        .zip(&w)
                        .map(|(p, wi)| wi * p.probs()[y])
                        .sum::<f64>()
                        / total
                })
                .collect()
        })
        .collect();
    PreciseChain { rows, choice: None }
}

/// Best expected time average over homogeneous chains from `x`: exhaustive
/// over vertex chains, plus `cfg.samples` random interior chains. A lower
/// bound on the supremum over all chains of the model.
pub fn ri_upper_average(
    model: &TransitionModel,
    f: &Gamble,
    x: usize,
    k: usize,
    cfg: &OracleConfig,
) -> Result<RiEstimate> {
    f.check_dim(model.n())?;
    if x >= model.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            got: x + 1,
        });
    }
    let lists = vertex_lists(model)?;
    let count = product_count(&lists);
    if count > cfg.cap {
        return Err(Error::CapExceeded {
            count,
            cap: cfg.cap,
        });
    }
    let (best_index, best_value) = (0..count)
        .into_par_iter()
        .map(|i| {
            let chain = chain_from_choice(&lists, decode_choice(i, &lists));
            let v = precise_time_average(&chain, f, x, k).expect("dimensions checked");
            (i, v)
        })
        .reduce(
            || (u128::MAX, f64::NEG_INFINITY),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    let vertex = OracleResult {
        value: best_value,
        argmax: chain_from_choice(&lists, decode_choice(best_index, &lists)).describe(),
        count,
    };

    let sampled = (cfg.samples > 0).then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut best = (f64::NEG_INFINITY, 0usize);
        for s in 0..cfg.samples {
            let chain = sample_chain(&lists, &mut rng);
            let v = precise_time_average(&chain, f, x, k).expect("dimensions checked");
            if v > best.0 {
                best = (v, s);
            }
        }
        OracleResult {
            value: best.0,
            argmax: format!("sample {}", best.1),
            count: cfg.samples as u128,
        }
    });
    let value = sampled
        .as_ref()
        .map_or(vertex.value, |s| s.value.max(vertex.value));
    Ok(RiEstimate {
        vertex,
        sampled,
        value,
    })
}

/// Maximum expected time average from `x` over every time-inhomogeneous
/// sequence `T_1, ..., T_{k-1}` of vertex chains. Distributions are pushed
/// forward along each sequence.
pub fn ci_upper_average_bruteforce(
    model: &TransitionModel,
    f: &Gamble,
    x: usize,
    k: usize,
    cap: u128,
) -> Result<OracleResult> {
    f.check_dim(model.n())?;
    if k == 0 {
        return Err(Error::Schema("time horizon k must be at least 1".into()));
    }
    if x >= model.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            got: x + 1,
        });
    }
    let lists = vertex_lists(model)?;
    let per_step = product_count(&lists);
    let count = (0..k - 1).try_fold(1u128, |acc, _| acc.checked_mul(per_step));
    let count = match count {
        Some(c) if c <= cap => c,
        other => {
            return Err(Error::CapExceeded {
                count: other.unwrap_or(u128::MAX),
                cap,
            })
        }
    };
    let chains: Vec<PreciseChain> = (0..per_step)
        .map(|i| chain_from_choice(&lists, decode_choice(i, &lists)))
        .collect();

    struct Search<'a> {
        chains: &'a [PreciseChain],
        f: &'a [f64],
        steps: usize,
        best: f64,
        best_path: Vec<usize>,
        path: Vec<usize>,
    }

    impl Search<'_> {
        fn visit(&mut self, dist: &[f64], total: f64) {
            if self.path.len() == self.steps {
                if total > self.best {
                    self.best = total;
                    self.best_path = self.path.clone();
                }
                return;
            }
            let n = dist.len();
            for (c, chain) in self.chains.iter().enumerate() {
                let mut next = vec![0.0; n];
                for (from, &mass) in dist.iter().enumerate() {
                    if mass != 0.0 {
                        for (to, &p) in chain.rows[from].iter().enumerate() {
                            next[to] += mass * p;
                        }
                    }
                }
                let gain: f64 = next.iter().zip(self.f).map(|(p, v)| p * v).sum();
                self.path.push(c);
                self.visit(&next, total + gain);
                self.path.pop();
            }
        }
    }

    let mut start = vec![0.0; model.n()];
    start[x] = 1.0;
    let mut search = Search {
        chains: &chains,
        f: f.values(),
        steps: k - 1,
        best: f64::NEG_INFINITY,
        best_path: Vec::new(),
        path: Vec::new(),
    };
    search.visit(&start, f[x]);
    let argmax = search
        .best_path
        .iter()
        .map(|&c| format!("{:?}", chains[c].choice().unwrap_or(&[])))
        .collect::<Vec<_>>()
        .join(" ");
    Ok(OracleResult {
        value: search.best / k as f64,
        argmax: if argmax.is_empty() {
            "(no transitions)".into()
        } else {
            argmax
        },
        count,
    })
}

/// Comparison of homogeneous-chain averages with the time-average limit.
#[derive(Clone, Debug, PartialEq)]
pub struct RiLimitReport {
    pub limit: f64,
    /// State at which the top-class eigenvector is minimal; from there the
    /// finite-horizon upper averages never exceed the limit.
    pub anchor: usize,
    /// `(k, lower bound at the anchor)` for each horizon.
    pub values: Vec<(usize, f64)>,
    pub monotone: bool,
    pub within_tolerance: bool,
}

pub const RI_HORIZONS: [usize; 2] = [100, 1000];
pub const RI_BELOW_TOL: f64 = 1e-2;
pub const RI_ABOVE_TOL: f64 = 1e-9;

/// Checks that vertex/sampled homogeneous chains approach the limit upper
/// expected time average at `k = 100, 1000`.
pub fn ri_limit_check(
    model: &TransitionModel,
    f: &Gamble,
    cfg: &OracleConfig,
    limit_cfg: &LimitConfig,
) -> Result<RiLimitReport> {
    let report = graph::classify(model);
    if !report.tca {
        return Err(Error::NotWeaklyErgodic);
    }
    let top = report
        .decomposition
        .top_states()
        .expect("absorbing top class exists")
        .clone();
    let op = UpperTransitionOperator::new(model);
    let tight = LimitConfig {
        tol: limit_cfg.tol.min(1e-12),
        ..*limit_cfg
    };
    let est = ergodicity::estimate_eigenvalue(&op, f, Some(&top), &tight)
        .or_else(|_| ergodicity::estimate_eigenvalue(&op, f, Some(&top), limit_cfg))?;
    let anchor_pos = est
        .eigvec
        .values()
        .iter()
        .position(|&v| v == est.eigvec.min())
        .unwrap_or(0);
    let anchor = *top
        .iter()
        .nth(anchor_pos)
        .expect("position within top class");
    let values = RI_HORIZONS
        .iter()
        .map(|&k| ri_upper_average(model, f, anchor, k, cfg).map(|r| (k, r.value)))
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = values.iter().map(|(_, v)| (est.mu - v).abs()).collect();
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0] + RI_ABOVE_TOL);
    let (_, last) = *values.last().expect("horizons are nonempty");
    let within_tolerance = last <= est.mu + RI_ABOVE_TOL && last >= est.mu - RI_BELOW_TOL;
    Ok(RiLimitReport {
        limit: est.mu,
        anchor,
        values,
        monotone,
        within_tolerance,
    })
}
