//! Limit inferences: limit upper expectations `lim T̄^k f` and limit upper
//! expected time averages `lim T̄_f^k(0)/k`.
//!
//! The time-average limits are additive eigenvalues of the topical map
//! `T̄_f`. On a strongly connected (sub)model that eigenvalue exists, is
//! unique, and equals the limit of `T̄_f^k(0)/k` from every state. We find it
//! with a Krasnoselskii iteration `h <- (h + T̄_f h)/2`, normalized so that
//! `min h = 0`. Averaging with the identity removes the oscillation that a
//! plain iteration shows on periodic classes while keeping the same
//! eigenvectors.

use crate::error::{Error, Result};
use crate::graph::{self, AccessibilityReport};
use crate::model::{Gamble, StateSet, TransitionModel};
use crate::operator::{AverageTrace, UpperTransitionOperator};

/// Tolerances and caps for the iterative limit computations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitConfig {
    /// Base tolerance, scaled by `max(1, ‖f‖_∞)`.
    pub tol: f64,
    pub iter_cap: usize,
    /// Horizon of the `m̄_{f,k}` probe reported in diagnostics.
    pub probe_k: usize,
}

impl Default for LimitConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            iter_cap: 100_000,
            probe_k: 1000,
        }
    }
}

impl LimitConfig {
    pub fn scaled_tol(&self, f: &Gamble) -> f64 {
        self.tol * f.sup_norm().max(1.0)
    }
}

/// Additive eigenpair estimate `T̄_f h ≈ h + mu`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenEstimate {
    pub mu: f64,
    /// Eigenvector over the (restricted) states, normalized to `min = 0`.
    pub eigvec: Gamble,
    /// `‖T̄_f h - h - mu‖_∞`.
    pub residual: f64,
    pub iterations: usize,
    /// `min` and `max` of `T̄_f h - h`; the eigenvalue lies between them.
    pub bounds: (f64, f64),
}

fn normalize(h: Gamble) -> Gamble {
    let m = h.min();
    h.shifted(-m)
}

/// Restricted model on `set` together with `f` restricted to it.
fn restricted(model: &TransitionModel, set: &StateSet) -> Result<TransitionModel> {
    if set.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let Some(&max) = set.iter().next_back() {
        if max >= model.n() {
            return Err(Error::DimensionMismatch {
                expected: model.n(),
                got: max + 1,
            });
        }
    }
    // a row without confining members cannot be restricted to `set`
    model.restrict(set).ok_or(Error::NotClosed)
}

fn eigen_iteration(
    op: &UpperTransitionOperator<'_>,
    f: &Gamble,
    h0: Gamble,
    cfg: &LimitConfig,
) -> Result<EigenEstimate> {
    let tol = cfg.scaled_tol(f);
    let mut h = normalize(h0);
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.iter_cap {
        let t = op.topical(f, &h);
        let d = t.minus(&h);
        let mu = d.mean();
        residual = d.values().iter().fold(0.0, |r, v| r.max((v - mu).abs()));
        if residual <= tol {
            return Ok(EigenEstimate {
                mu,
                eigvec: h,
                residual,
                iterations: it,
                bounds: (d.min(), d.max()),
            });
        }
        h = normalize(h.zip_with(&t, |a, b| 0.5 * (a + b)));
    }
    Err(Error::NoConvergence {
        iterations: cfg.iter_cap,
        residual,
    })
}

/// Additive eigenvalue of `T̄_f`, optionally on the sub-model confined to
/// `restriction`, starting from `h_0 = 0`.
pub fn estimate_eigenvalue(
    op: &UpperTransitionOperator<'_>,
    f: &Gamble,
    restriction: Option<&StateSet>,
    cfg: &LimitConfig,
) -> Result<EigenEstimate> {
    let size = restriction.map_or(op.n(), StateSet::len);
    estimate_eigenvalue_from(op, f, restriction, &Gamble::zeros(size), cfg)
}

/// As [`estimate_eigenvalue`], from a given start vector over the
/// (restricted) states.
pub fn estimate_eigenvalue_from(
    op: &UpperTransitionOperator<'_>,
    f: &Gamble,
    restriction: Option<&StateSet>,
    h0: &Gamble,
    cfg: &LimitConfig,
) -> Result<EigenEstimate> {
    f.check_dim(op.n())?;
    match restriction {
        None => {
            h0.check_dim(op.n())?;
            if !graph::build_graph(op.model()).is_strongly_connected() {
                return Err(Error::NotStronglyConnected);
            }
            eigen_iteration(op, f, h0.clone(), cfg)
        }
        Some(set) => {
            let sub = restricted(op.model(), set)?;
            h0.check_dim(sub.n())?;
            if !graph::build_graph(&sub).is_strongly_connected() {
                return Err(Error::NotStronglyConnected);
            }
            let sub_op = UpperTransitionOperator::new(&sub);
            eigen_iteration(&sub_op, &f.restrict(set), h0.clone(), cfg)
        }
    }
}

fn check_closed_class(report: &AccessibilityReport, set: &StateSet) -> Result<()> {
    let d = &report.decomposition;
    let c = d.class_index(set).ok_or(Error::NotCommunicating)?;
    if !d.closed[c] {
        return Err(Error::NotClosed);
    }
    Ok(())
}

/// Eigen estimate on a closed communication class.
pub fn per_class_estimate(
    op: &UpperTransitionOperator<'_>,
    f: &Gamble,
    class: &StateSet,
    cfg: &LimitConfig,
) -> Result<EigenEstimate> {
    let report = graph::classify(op.model());
    check_closed_class(&report, class)?;
    estimate_eigenvalue(op, f, Some(class), cfg)
}

/// `lim_k ū_{av,k}(f|x)`, the same for every `x` in the closed class.
pub fn per_class_limit(
    op: &UpperTransitionOperator<'_>,
    f: &Gamble,
    class: &StateSet,
    cfg: &LimitConfig,
) -> Result<f64> {
    per_class_estimate(op, f, class, cfg).map(|e| e.mu)
}

/// Iterates `T̄^k f` until it is constant and stationary. Returns the value
/// and the number of applications of `T̄`.
fn converge_upper_iterates(
    op: &UpperTransitionOperator<'_>,
    f: &Gamble,
    cfg: &LimitConfig,
) -> Result<(f64, usize)> {
    let tol = cfg.scaled_tol(f);
    let mut h = f.clone();
    let mut change = f64::INFINITY;
    for it in 1..=cfg.iter_cap {
        let next = op.upper(&h);
        change = next.distance(&h);
        if next.span() <= tol && change <= tol {
            return Ok((next.mean(), it));
        }
        h = next;
    }
    Err(Error::NoConvergence {
        iterations: cfg.iter_cap,
        residual: change.max(h.span()),
    })
}

/// Limit upper expectation `ū_∞(f)`; absent unless the model is ergodic.
pub fn limit_upper_expectation(
    op: &UpperTransitionOperator<'_>,
    f: &Gamble,
    cfg: &LimitConfig,
) -> Result<Option<f64>> {
    f.check_dim(op.n())?;
    if !graph::classify(op.model()).ergodic() {
        return Ok(None);
    }
    converge_upper_iterates(op, f, cfg).map(|(v, _)| Some(v))
}

/// Limit upper expected time average `ū_{av,∞}(f)`; absent unless the top
/// class is absorbing.
pub fn weak_ergodic_limit(
    op: &UpperTransitionOperator<'_>,
    f: &Gamble,
    cfg: &LimitConfig,
) -> Result<Option<f64>> {
    f.check_dim(op.n())?;
    let report = graph::classify(op.model());
    if !report.tca {
        return Ok(None);
    }
    let top = report
        .decomposition
        .top_states()
        .expect("absorbing top class exists");
    estimate_eigenvalue(op, f, Some(top), cfg).map(|e| Some(e.mu))
}

/// Upper and lower time-average limits on one closed class.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassLimit {
    pub class: usize,
    pub states: StateSet,
    pub upper: f64,
    pub lower: f64,
    pub upper_estimate: EigenEstimate,
    pub lower_estimate: EigenEstimate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    /// Applications of `T̄` needed for `ū_∞(f)` and `u̲_∞(f)`.
    pub limit_iterations: Option<(usize, usize)>,
    pub probe_k: usize,
    /// `m̄_{f,k}` and its lower counterpart at `k = probe_k`.
    pub probe_m_bar_upper: Gamble,
    pub probe_m_bar_lower: Gamble,
}

/// Full ergodicity report for one gamble.
#[derive(Clone, Debug, PartialEq)]
pub struct ErgodicityReport {
    pub accessibility: AccessibilityReport,
    pub ergodic: bool,
    pub weakly_ergodic: bool,
    pub limit_upper: Option<f64>,
    pub limit_lower: Option<f64>,
    pub limit_avg_upper: Option<f64>,
    pub limit_avg_lower: Option<f64>,
    /// One entry per closed class, in class order.
    pub per_class_limits: Vec<ClassLimit>,
    pub diagnostics: Diagnostics,
}

pub fn full_report(
    op: &UpperTransitionOperator<'_>,
    f: &Gamble,
    cfg: &LimitConfig,
) -> Result<ErgodicityReport> {
    f.check_dim(op.n())?;
    let accessibility = graph::classify(op.model());
    let ergodic = accessibility.ergodic();
    let weakly_ergodic = accessibility.weakly_ergodic();
    let neg = f.negated();

    let mut per_class_limits = Vec::new();
    for c in accessibility.decomposition.closed_classes() {
        let states = accessibility.decomposition.classes[c].clone();
        let upper_estimate = estimate_eigenvalue(op, f, Some(&states), cfg)?;
        let lower_estimate = estimate_eigenvalue(op, &neg, Some(&states), cfg)?;
        per_class_limits.push(ClassLimit {
            class: c,
            states,
            upper: upper_estimate.mu,
            lower: -lower_estimate.mu,
            upper_estimate,
            lower_estimate,
        });
    }

    let (limit_upper, limit_lower, limit_iterations) = if ergodic {
        let (up, it_up) = converge_upper_iterates(op, f, cfg)?;
        let (low, it_low) = converge_upper_iterates(op, &neg, cfg)?;
        (Some(up), Some(-low), Some((it_up, it_low)))
    } else {
        (None, None, None)
    };

    let (limit_avg_upper, limit_avg_lower) = if weakly_ergodic {
        let top = accessibility.decomposition.top_class;
        let entry = per_class_limits
            .iter()
            .find(|l| Some(l.class) == top)
            .expect("top class is closed");
        (Some(entry.upper), Some(entry.lower))
    } else {
        (None, None)
    };

    let probe_k = cfg.probe_k.max(1);
    let probe_m_bar_upper = AverageTrace::new(*op, f)?.advance_to(probe_k);
    let probe_m_bar_lower = AverageTrace::new(*op, &neg)?.advance_to(probe_k).negated();

    Ok(ErgodicityReport {
        accessibility,
        ergodic,
        weakly_ergodic,
        limit_upper,
        limit_lower,
        limit_avg_upper,
        limit_avg_lower,
        per_class_limits,
        diagnostics: Diagnostics {
            limit_iterations,
            probe_k,
            probe_m_bar_upper,
            probe_m_bar_lower,
        },
    })
}
