//! The upper transition operator and the time-average recursion.

use crate::error::{Error, Result};
use crate::model::{Gamble, TransitionModel};

/// Upper transition operator of a separately specified model: each row of
/// the result is the upper expectation over that state's credal row.
#[derive(Clone, Copy, Debug)]
pub struct UpperTransitionOperator<'a> {
    model: &'a TransitionModel,
}

impl<'a> UpperTransitionOperator<'a> {
    pub fn new(model: &'a TransitionModel) -> Self {
        Self { model }
    }

    pub fn model(&self) -> &'a TransitionModel {
        self.model
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }

    pub(crate) fn upper(&self, h: &Gamble) -> Gamble {
        Gamble::from_vec(
            self.model
                .rows()
                .iter()
                .map(|row| row.upper_expectation_unchecked(h.values()))
                .collect(),
        )
    }

    /// `f + T̄h`, assuming matching dimensions.
    pub(crate) fn topical(&self, f: &Gamble, h: &Gamble) -> Gamble {
        f.plus(&self.upper(h))
    }

    pub fn apply_upper(&self, h: &Gamble) -> Result<Gamble> {
        h.check_dim(self.n())?;
        Ok(self.upper(h))
    }

    pub fn apply_lower(&self, h: &Gamble) -> Result<Gamble> {
        Ok(self.apply_upper(&h.negated())?.negated())
    }

    /// `T̄^k f`; `k = 0` is the identity.
    pub fn iterate_upper(&self, f: &Gamble, k: usize) -> Result<Gamble> {
        f.check_dim(self.n())?;
        let mut h = f.clone();
        for _ in 0..k {
            h = self.upper(&h);
        }
        Ok(h)
    }

    pub fn iterate_lower(&self, f: &Gamble, k: usize) -> Result<Gamble> {
        Ok(self.iterate_upper(&f.negated(), k)?.negated())
    }

    /// The topical map `T̄_f h = f + T̄h`.
    pub fn apply_topical(&self, f: &Gamble, h: &Gamble) -> Result<Gamble> {
        f.check_dim(self.n())?;
        h.check_dim(self.n())?;
        Ok(self.topical(f, h))
    }

    /// `T̄_f^k h`.
    pub fn iterate_topical(&self, f: &Gamble, h: &Gamble, k: usize) -> Result<Gamble> {
        f.check_dim(self.n())?;
        h.check_dim(self.n())?;
        let mut h = h.clone();
        for _ in 0..k {
            h = self.topical(f, &h);
        }
        Ok(h)
    }

    /// Upper expected time average over `k` steps for every start state.
    pub fn average_recursion(&self, f: &Gamble, k: usize) -> Result<AverageRecursionState> {
        if k == 0 {
            return Err(Error::Schema("time horizon k must be at least 1".into()));
        }
        let mut trace = AverageTrace::new(*self, f)?;
        let mut state = trace.next_state();
        for _ in 1..k {
            state = trace.next_state();
        }
        Ok(state)
    }

    /// States for `k = 1..=k_max`, each step reusing the previous sum.
    pub fn average_trace(&self, f: &Gamble, k_max: usize) -> Result<Vec<AverageRecursionState>> {
        if k_max == 0 {
            return Err(Error::Schema("k_max must be at least 1".into()));
        }
        let mut trace = AverageTrace::new(*self, f)?;
        Ok((0..k_max).map(|_| trace.next_state()).collect())
    }
}

/// `m̃_{f,k} = T̄_f^k(0)` together with the average `m̃_{f,k}/k`.
#[derive(Clone, Debug, PartialEq)]
pub struct AverageRecursionState {
    pub f: Gamble,
    pub k: usize,
    pub m_tilde: Gamble,
    pub m_bar: Gamble,
}

/// Incremental evaluation of `m̃_{f,k} = f + T̄ m̃_{f,k-1}`.
#[derive(Clone, Debug)]
pub struct AverageTrace<'a> {
    op: UpperTransitionOperator<'a>,
    f: Gamble,
    k: usize,
    m_tilde: Gamble,
}

impl<'a> AverageTrace<'a> {
    pub fn new(op: UpperTransitionOperator<'a>, f: &Gamble) -> Result<Self> {
        f.check_dim(op.n())?;
        Ok(Self {
            op,
            f: f.clone(),
            k: 0,
            m_tilde: Gamble::zeros(f.len()),
        })
    }

    /// Advances one step and returns `m̃_{f,k}`.
    pub fn step(&mut self) -> &Gamble {
        self.m_tilde = self.op.topical(&self.f, &self.m_tilde);
        self.k += 1;
        &self.m_tilde
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m_tilde(&self) -> &Gamble {
        &self.m_tilde
    }

    pub fn m_bar(&self) -> Gamble {
        let k = self.k.max(1) as f64;
        self.m_tilde.map(|v| v / k)
    }

    pub fn next_state(&mut self) -> AverageRecursionState {
        self.step();
        AverageRecursionState {
            f: self.f.clone(),
            k: self.k,
            m_tilde: self.m_tilde.clone(),
            m_bar: self.m_bar(),
        }
    }

    /// Runs until `m̃_{f,k}` has been computed and returns `m̄_{f,k}`.
    pub fn advance_to(&mut self, k: usize) -> Gamble {
        while self.k < k {
            self.step();
        }
        self.m_bar()
    }
}
