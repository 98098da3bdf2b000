#![allow(dead_code)]

use std::time::{Duration, Instant};

use imcergo::generate::{self, ModelShape};
use imcergo::{CredalRow, Gamble, IntervalRow, TransitionModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn g(v: &[f64]) -> Gamble {
    Gamble::new(v.to_vec()).unwrap()
}

/// Random models with the default shape, one per seed offset.
pub fn battery(seed: u64, count: usize) -> Vec<TransitionModel> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| generate::random_model(&mut r, &ModelShape::default()))
        .collect()
}

/// Upper expectation over an interval row by walking every vertex of the
/// polytope `{p : l <= p <= u, sum p = 1}`: all coordinates but one sit at a
/// bound and the free one absorbs the remaining mass.
pub fn interval_upper_by_vertices(row: &IntervalRow, h: &[f64]) -> f64 {
    let n = row.len();
    let (l, u) = (row.lower(), row.upper());
    let mut best = f64::NEG_INFINITY;
    for free in 0..n {
        for mask in 0u32..(1 << (n - 1)) {
            let mut p = vec![0.0; n];
            for (bit, y) in (0..n).filter(|&y| y != free).enumerate() {
                p[y] = if mask >> bit & 1 == 1 { u[y] } else { l[y] };
            }
            let rest = 1.0 - p.iter().sum::<f64>();
            if rest < l[free] - 1e-12 || rest > u[free] + 1e-12 {
                continue;
            }
            p[free] = rest;
            best = best.max(p.iter().zip(h).map(|(a, b)| a * b).sum());
        }
    }
    best
}

/// Row upper expectation computed without the library's greedy routine.
pub fn row_upper_oracle(row: &CredalRow, h: &[f64]) -> f64 {
    match row {
        CredalRow::Vertices(pmfs) => pmfs
            .iter()
            .map(|p| p.probs().iter().zip(h).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max),
        CredalRow::Intervals(r) => interval_upper_by_vertices(r, h),
    }
}

/// Collects per-criterion results and prints one line each.
pub struct Criterion {
    id: u32,
    name: &'static str,
    start: Instant,
    limit: Duration,
    failures: Vec<String>,
    checks: usize,
}

impl Criterion {
    pub fn new(id: u32, name: &'static str, limit: Duration) -> Self {
        Self {
            id,
            name,
            start: Instant::now(),
            limit,
            failures: Vec::new(),
            checks: 0,
        }
    }

    pub fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    pub fn close(&mut self, want: f64, got: f64, tol: f64, what: impl FnOnce() -> String) {
        let ok = (want - got).abs() <= tol;
        self.check(ok, || {
            format!("{}: want {want}, got {got} (tol {tol:e})", what())
        });
    }

    /// Prints the result line and returns whether every check held.
    pub fn report(mut self) -> bool {
        let elapsed = self.start.elapsed();
        if elapsed > self.limit {
            self.failures
                .push(format!("runtime {elapsed:?} exceeds {:?}", self.limit));
        }
        let status = if self.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        println!(
            "[{status}] criterion {}: {} ({} checks, {:.2?})",
            self.id, self.name, self.checks, elapsed
        );
        for f in self.failures.iter().take(10) {
            println!("    {f}");
        }
        self.failures.is_empty()
    }

    pub fn finish(self) {
        let id = self.id;
        assert!(self.report(), "criterion {id} failed");
    }
}
