//! Models built from one credal transition row per state, plus the gambles
//! evaluated on them.
//!
//! A [`TransitionModel`] stores one [`CredalRow`] per state. Because every
//! row is an independent object, any choice of one member per row yields a
//! transition matrix of the model, so the upper transition operator can be
//! evaluated row by row.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mass tolerance used when validating probability mass functions.
pub const TOL_MASS: f64 = 1e-9;

/// Normalization changes smaller than this are not reported.
const NOTE_EPS: f64 = 1e-12;

/// A set of state indices.
pub type StateSet = BTreeSet<usize>;

/// Finite, ordered set of uniquely labelled states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSpace {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl StateSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::Schema(
                "state space must contain at least one state".into(),
            ));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::DuplicateState(label.clone()));
            }
        }
        Ok(Self { labels, index })
    }

    /// States labelled `s0, s1, ...`.
    pub fn numbered(n: usize) -> Self {
        Self::new((0..n).map(|i| format!("s{i}"))).expect("numbered labels are unique and n >= 1")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Resolves a label, failing with [`Error::UnknownState`].
    pub fn resolve(&self, label: &str) -> Result<usize> {
        self.index_of(label)
            .ok_or_else(|| Error::UnknownState(label.to_string()))
    }

    /// Labels of a set of states, in index order.
    pub fn labels_of(&self, set: &StateSet) -> Vec<String> {
        set.iter().map(|&i| self.labels[i].clone()).collect()
    }
}

/// A real-valued function on the state space.
#[derive(Clone, Debug, PartialEq)]
pub struct Gamble(Vec<f64>);

impl Gamble {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(values))
    }

    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    /// The indicator `1_B` of a set of states.
    pub fn indicator(n: usize, set: &StateSet) -> Self {
        Self(
            (0..n)
                .map(|i| if set.contains(&i) { 1.0 } else { 0.0 })
                .collect(),
        )
    }

    /// The indicator of a single state.
    pub fn unit(n: usize, state: usize) -> Self {
        Self((0..n).map(|i| if i == state { 1.0 } else { 0.0 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Hilbert seminorm `max h - min h`.
    pub fn span(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Gamble, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.len(), other.len(), "gamble dimension mismatch");
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn plus(&self, other: &Gamble) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn minus(&self, other: &Gamble) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        self.map(|v| lambda * v)
    }

    pub fn shifted(&self, mu: f64) -> Self {
        self.map(|v| v + mu)
    }

    pub fn negated(&self) -> Self {
        self.map(|v| -v)
    }

    /// `‖self - other‖_∞`.
    pub fn distance(&self, other: &Gamble) -> f64 {
        self.minus(other).sup_norm()
    }

    /// Restriction to the states of `set`, in index order.
    pub fn restrict(&self, set: &StateSet) -> Self {
        Self(set.iter().map(|&i| self.0[i]).collect())
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.len(),
            });
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for Gamble {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A probability mass function over the state space.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf(Vec<f64>);

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::validated("<pmf>", probs)
    }

    /// Point mass on `state`.
    pub fn degenerate(n: usize, state: usize) -> Self {
        Self((0..n).map(|i| if i == state { 1.0 } else { 0.0 }).collect())
    }

    fn validated(state: &str, probs: Vec<f64>) -> Result<Self> {
        for &p in &probs {
            if !p.is_finite() || !(-TOL_MASS..=1.0 + TOL_MASS).contains(&p) {
                return Err(Error::InvalidProbability {
                    state: state.to_string(),
                    value: p,
                });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > TOL_MASS {
            return Err(Error::PmfMass {
                state: state.to_string(),
                sum,
            });
        }
        let clamped: Vec<f64> = probs.iter().map(|p| p.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        Ok(Self(clamped.into_iter().map(|p| p / total).collect()))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn expectation(&self, h: &[f64]) -> f64 {
        self.0.iter().zip(h).map(|(p, v)| p * v).sum()
    }

    /// Whether all mass lies inside `set` (exact support test).
    pub fn supported_in(&self, set: &StateSet) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(y, &p)| p == 0.0 || set.contains(&y))
    }
}

/// `(state, "lower" or "upper", old, new)` for one tightened bound.
type BoundChange = (usize, &'static str, f64, f64);

/// Probability intervals `lower <= p <= upper` with reachable bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalRow {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl IntervalRow {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Self::normalized("<row>", lower, upper).map(|(row, _)| row)
    }

    /// Validates coherence and tightens the bounds to reachable values. The
    /// second component lists the `(state, kind, old, new)` changes.
    fn normalized(
        state: &str,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<(Self, Vec<BoundChange>)> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for &v in lower.iter().chain(&upper) {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidProbability {
                    state: state.to_string(),
                    value: v,
                });
            }
        }
        let sum_lower: f64 = lower.iter().sum();
        let sum_upper: f64 = upper.iter().sum();
        let crossed = lower.iter().zip(&upper).any(|(l, u)| l > u);
        if crossed || sum_lower > 1.0 + TOL_MASS || sum_upper < 1.0 - TOL_MASS {
            return Err(Error::IncoherentIntervals {
                state: state.to_string(),
                sum_lower,
                sum_upper,
            });
        }

        let mut changes = Vec::new();
        let mut new_lower = Vec::with_capacity(lower.len());
        let mut new_upper = Vec::with_capacity(upper.len());
        for y in 0..lower.len() {
            let others_upper = sum_upper - upper[y];
            let others_lower = sum_lower - lower[y];
            let u = upper[y].min(1.0 - others_lower).clamp(0.0, 1.0);
            let l = lower[y].max(1.0 - others_upper).clamp(0.0, u);
            if (l - lower[y]).abs() > NOTE_EPS {
                changes.push((y, "lower", lower[y], l));
            }
            if (u - upper[y]).abs() > NOTE_EPS {
                changes.push((y, "upper", upper[y], u));
            }
            // keep exact zeros: they carry the support structure
            new_lower.push(if lower[y] == 0.0 && l <= NOTE_EPS {
                0.0
            } else {
                l
            });
            new_upper.push(if u <= NOTE_EPS { 0.0 } else { u });
        }
        Ok((
            Self {
                lower: new_lower,
                upper: new_upper,
            },
            changes,
        ))
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// Greedy natural extension: start from the lower bounds and hand the
    /// remaining mass to states in order of decreasing `h` (ties by index).
    fn upper_expectation(&self, h: &[f64]) -> f64 {
        let mut order: Vec<usize> = (0..h.len()).collect();
        order.sort_by(|&i, &j| h[j].total_cmp(&h[i]).then(i.cmp(&j)));
        let mut remaining = 1.0 - self.lower.iter().sum::<f64>();
        let mut value: f64 = self.lower.iter().zip(h).map(|(l, v)| l * v).sum();
        for y in order {
            if remaining <= 0.0 {
                break;
            }
            let add = (self.upper[y] - self.lower[y]).min(remaining);
            value += add * h[y];
            remaining -= add;
        }
        value
    }

    fn can_confine(&self, set: &StateSet) -> bool {
        let leaks = (0..self.len()).any(|y| !set.contains(&y) && self.lower[y] > 0.0);
        let inside: f64 = set.iter().map(|&y| self.upper[y]).sum();
        !leaks && inside >= 1.0 - TOL_MASS
    }
}

/// The credal set of plausible next-state distributions for one state.
#[derive(Clone, Debug, PartialEq)]
pub enum CredalRow {
    /// Convex hull of the listed mass functions.
    Vertices(Vec<Pmf>),
    /// Probability intervals.
    Intervals(IntervalRow),
}

impl CredalRow {
    pub fn vertices(pmfs: Vec<Pmf>) -> Result<Self> {
        if pmfs.is_empty() {
            return Err(Error::Schema("vertex row needs at least one pmf".into()));
        }
        let n = pmfs[0].len();
        if let Some(bad) = pmfs.iter().find(|p| p.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        Ok(Self::Vertices(pmfs))
    }

    /// Row whose only member is the point mass on `state`.
    pub fn degenerate(n: usize, state: usize) -> Self {
        Self::Vertices(vec![Pmf::degenerate(n, state)])
    }

    /// The set of all mass functions on `n` states.
    pub fn vacuous(n: usize) -> Self {
        Self::Intervals(IntervalRow {
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        })
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Vertices(pmfs) => pmfs[0].len(),
            Self::Intervals(iv) => iv.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_vertex_list(&self) -> bool {
        matches!(self, Self::Vertices(_))
    }

    pub(crate) fn upper_expectation_unchecked(&self, h: &[f64]) -> f64 {
        match self {
            Self::Vertices(pmfs) => pmfs
                .iter()
                .map(|p| p.expectation(h))
                .fold(f64::NEG_INFINITY, f64::max),
            Self::Intervals(iv) => iv.upper_expectation(h),
        }
    }

    /// Whether some member puts positive mass on `y`.
    pub fn reaches(&self, y: usize) -> bool {
        match self {
            Self::Vertices(pmfs) => pmfs.iter().any(|p| p.probs()[y] > 0.0),
            Self::Intervals(iv) => iv.upper[y] > 0.0,
        }
    }

    pub(crate) fn can_confine_unchecked(&self, set: &StateSet) -> bool {
        match self {
            Self::Vertices(pmfs) => pmfs.iter().any(|p| p.supported_in(set)),
            Self::Intervals(iv) => iv.can_confine(set),
        }
    }

    /// The members whose mass stays inside `set`, re-indexed over `set`.
    /// `None` when no member confines.
    pub fn restrict(&self, set: &StateSet) -> Option<CredalRow> {
        match self {
            Self::Vertices(pmfs) => {
                let kept: Vec<Pmf> = pmfs
                    .iter()
                    .filter(|p| p.supported_in(set))
                    .map(|p| {
                        let probs: Vec<f64> = set.iter().map(|&y| p.probs()[y]).collect();
                        let total: f64 = probs.iter().sum();
                        Pmf(probs.into_iter().map(|q| q / total).collect())
                    })
                    .collect();
                (!kept.is_empty()).then_some(Self::Vertices(kept))
            }
            Self::Intervals(iv) => {
                if !iv.can_confine(set) {
                    return None;
                }
                let lower = set.iter().map(|&y| iv.lower[y]).collect();
                let upper = set.iter().map(|&y| iv.upper[y]).collect();
                IntervalRow::normalized("<restricted>", lower, upper)
                    .ok()
                    .map(|(row, _)| Self::Intervals(row))
            }
        }
    }
}

/// `sup` over the row's credal set of the expectation of `h`.
pub fn row_upper_expectation(row: &CredalRow, h: &Gamble) -> Result<f64> {
    h.check_dim(row.len())?;
    Ok(row.upper_expectation_unchecked(h.values()))
}

/// Conjugate lower expectation, `-row_upper_expectation(row, -h)`.
pub fn row_lower_expectation(row: &CredalRow, h: &Gamble) -> Result<f64> {
    Ok(-row_upper_expectation(row, &h.negated())?)
}

/// Whether the row admits a member with all mass inside `set`, i.e. whether
/// the upper probability of `set` equals one.
pub fn row_can_confine(row: &CredalRow, set: &StateSet) -> Result<bool> {
    if set.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let Some(&max) = set.iter().next_back() {
        if max >= row.len() {
            return Err(Error::DimensionMismatch {
                expected: row.len(),
                got: max + 1,
            });
        }
    }
    Ok(row.can_confine_unchecked(set))
}

/// A bound that was tightened during interval normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationNote {
    pub state: String,
    pub target: String,
    pub bound: &'static str,
    pub before: f64,
    pub after: f64,
}

impl fmt::Display for NormalizationNote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "row `{}`: {} bound for `{}` tightened from {} to {}",
            self.state, self.bound, self.target, self.before, self.after
        )
    }
}

/// A separately specified set of transition matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionModel {
    states: StateSpace,
    rows: Vec<CredalRow>,
    notes: Vec<NormalizationNote>,
}

impl TransitionModel {
    pub fn new(states: StateSpace, rows: Vec<CredalRow>) -> Result<Self> {
        let n = states.len();
        if rows.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rows.len(),
            });
        }
        if let Some(row) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: row.len(),
            });
        }
        Ok(Self {
            states,
            rows,
            notes: Vec::new(),
        })
    }

    /// Model on states `s0, s1, ...`.
    pub fn from_rows(rows: Vec<CredalRow>) -> Result<Self> {
        Self::new(StateSpace::numbered(rows.len()), rows)
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &StateSpace {
        &self.states
    }

    pub fn rows(&self) -> &[CredalRow] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &CredalRow {
        &self.rows[x]
    }

    /// Bounds tightened by interval normalization at load time.
    pub fn notes(&self) -> &[NormalizationNote] {
        &self.notes
    }

    pub fn is_vertex_only(&self) -> bool {
        self.rows.iter().all(CredalRow::is_vertex_list)
    }

    /// The confined sub-model on `set`: rows of `set`, keeping only the
    /// members whose mass stays in `set`. `None` when some row cannot stay.
    pub fn restrict(&self, set: &StateSet) -> Option<TransitionModel> {
        let rows = set
            .iter()
            .map(|&x| self.rows[x].restrict(set))
            .collect::<Option<Vec<_>>>()?;
        let states = StateSpace::new(self.states.labels_of(set)).ok()?;
        Some(TransitionModel {
            states,
            rows,
            notes: Vec::new(),
        })
    }

    /// Serializes to the JSON model schema.
    pub fn to_json(&self) -> String {
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(x, row)| {
                let doc = match row {
                    CredalRow::Vertices(pmfs) => RowDoc::Vertices {
                        pmfs: pmfs.iter().map(|p| p.probs().to_vec()).collect(),
                    },
                    CredalRow::Intervals(iv) => RowDoc::Intervals {
                        lower: iv.lower.clone(),
                        upper: iv.upper.clone(),
                    },
                };
                (self.states.label(x).to_string(), doc)
            })
            .collect();
        let doc = ModelDoc {
            states: self.states.labels().to_vec(),
            rows,
        };
        serde_json::to_string_pretty(&doc).expect("model document serializes")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    states: Vec<String>,
    rows: BTreeMap<String, RowDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum RowDoc {
    Vertices { pmfs: Vec<Vec<f64>> },
    Intervals { lower: Vec<f64>, upper: Vec<f64> },
}

/// Parses and validates a JSON model document.
pub fn load_model(document: &str) -> Result<TransitionModel> {
    let doc: ModelDoc = serde_json::from_str(document)?;
    let states = StateSpace::new(doc.states)?;
    let n = states.len();
    if let Some(label) = doc.rows.keys().find(|l| states.index_of(l).is_none()) {
        return Err(Error::UnknownState(label.clone()));
    }
    let mut rows = Vec::with_capacity(n);
    let mut notes = Vec::new();
    let mut docs = doc.rows;
    for x in 0..n {
        let label = states.label(x);
        let row_doc = docs
            .remove(label)
            .ok_or_else(|| Error::Schema(format!("missing row for state `{label}`")))?;
        let row = match row_doc {
            RowDoc::Vertices { pmfs } => {
                if pmfs.is_empty() {
                    return Err(Error::Schema(format!("row `{label}`: empty vertex list")));
                }
                let pmfs = pmfs
                    .into_iter()
                    .map(|p| {
                        if p.len() != n {
                            return Err(Error::Schema(format!(
                                "row `{label}`: pmf has {} entries, expected {n}",
                                p.len()
                            )));
                        }
                        Pmf::validated(label, p)
                    })
                    .collect::<Result<Vec<_>>>()?;
                CredalRow::Vertices(pmfs)
            }
            RowDoc::Intervals { lower, upper } => {
                if lower.len() != n || upper.len() != n {
                    return Err(Error::Schema(format!(
                        "row `{label}`: interval bounds must have {n} entries"
                    )));
                }
                let (row, changes) = IntervalRow::normalized(label, lower, upper)?;
                for (y, bound, before, after) in changes {
                    let note = NormalizationNote {
                        state: label.to_string(),
                        target: states.label(y).to_string(),
                        bound,
                        before,
                        after,
                    };
                    log::warn!("{note}");
                    notes.push(note);
                }
                CredalRow::Intervals(row)
            }
        };
        rows.push(row);
    }
    let mut model = TransitionModel::new(states, rows)?;
    model.notes = notes;
    Ok(model)
}

pub fn load_model_file(path: impl AsRef<Path>) -> Result<TransitionModel> {
    load_model(&std::fs::read_to_string(path)?)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GambleValues {
    Positional(Vec<f64>),
    Named(BTreeMap<String, f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GambleDoc {
    f: GambleValues,
}

fn named_gamble(states: &StateSpace, named: BTreeMap<String, f64>) -> Result<Gamble> {
    let mut values = vec![None; states.len()];
    for (label, v) in named {
        let i = states.resolve(&label)?;
        values[i] = Some(v);
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.ok_or_else(|| Error::Schema(format!("gamble has no value for `{}`", states.label(i))))
        })
        .collect::<Result<Vec<_>>>()?;
    Gamble::new(values)
}

/// Parses a gamble document, either `{"f":{"a":0,"b":1}}` or `{"f":[0,1]}`.
pub fn load_gamble(document: &str, states: &StateSpace) -> Result<Gamble> {
    let doc: GambleDoc = serde_json::from_str(document)?;
    match doc.f {
        GambleValues::Positional(values) => {
            let g = Gamble::new(values)?;
            g.check_dim(states.len())?;
            Ok(g)
        }
        GambleValues::Named(named) => named_gamble(states, named),
    }
}

pub fn load_gamble_file(path: impl AsRef<Path>, states: &StateSpace) -> Result<Gamble> {
    load_gamble(&std::fs::read_to_string(path)?, states)
}

/// Parses an inline gamble such as `a=0,b=1`.
pub fn parse_inline_gamble(text: &str, states: &StateSpace) -> Result<Gamble> {
    let mut named = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (label, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Schema(format!("expected `state=value`, got `{part}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Schema(format!("invalid number in `{part}`")))?;
        named.insert(label.trim().to_string(), value);
    }
    named_gamble(states, named)
}
