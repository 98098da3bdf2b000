//! Random models and gambles for property batteries and benchmarks.
//!
//! Positive masses are kept away from zero so that long-run quantities
//! settle within a few thousand steps.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph;
use crate::model::{CredalRow, Gamble, IntervalRow, Pmf, TransitionModel};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelShape {
    pub min_states: usize,
    pub max_states: usize,
    pub max_vertices: usize,
    /// Probability that a row is given by intervals rather than vertices.
    pub interval_share: f64,
    /// Probability that a state belongs to a random support.
    pub density: f64,
}

impl Default for ModelShape {
    fn default() -> Self {
        Self {
            min_states: 3,
            max_states: 5,
            max_vertices: 4,
            interval_share: 0.4,
            density: 0.4,
        }
    }
}

impl ModelShape {
    pub fn vertex_only(mut self) -> Self {
        self.interval_share = 0.0;
        self
    }

    pub fn states(mut self, min: usize, max: usize) -> Self {
        self.min_states = min;
        self.max_states = max;
        self
    }
}

/// Uniform values in `[-1, 1]`, rescaled to sup norm one.
pub fn random_gamble<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Gamble {
    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let norm = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if norm == 0.0 {
        return Gamble::constant(n, 1.0);
    }
    Gamble::new(v.into_iter().map(|x| x / norm).collect()).expect("finite values")
}

/// Nonempty random subset of `0..n`, in ascending order.
pub fn random_support<R: Rng + ?Sized>(rng: &mut R, n: usize, density: f64) -> Vec<usize> {
    let mut s: Vec<usize> = (0..n).filter(|_| rng.gen_bool(density)).collect();
    if s.is_empty() {
        s.push(rng.gen_range(0..n));
    }
    s
}

fn weights_on<R: Rng + ?Sized>(rng: &mut R, n: usize, support: &[usize]) -> Vec<f64> {
    let mut p = vec![0.0; n];
    for &y in support {
        p[y] = rng.gen_range(0.5..=1.0);
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

pub fn random_pmf<R: Rng + ?Sized>(rng: &mut R, n: usize, support: &[usize]) -> Pmf {
    Pmf::new(weights_on(rng, n, support)).expect("weights are normalized")
}

pub fn random_vertex_row<R: Rng + ?Sized>(rng: &mut R, n: usize, shape: &ModelShape) -> CredalRow {
    let count = rng.gen_range(1..=shape.max_vertices.max(1));
    let pmfs = (0..count)
        .map(|_| {
            let support = random_support(rng, n, shape.density);
            random_pmf(rng, n, &support)
        })
        .collect();
    CredalRow::vertices(pmfs).expect("nonempty list of equal-length pmfs")
}

/// Intervals around a random pmf: some lower bounds are zero, the rest are a
/// fraction of the centre; upper bounds widen the centre on its support.
pub fn random_interval_row<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    shape: &ModelShape,
) -> CredalRow {
    let support = random_support(rng, n, shape.density);
    let centre = weights_on(rng, n, &support);
    let lower = centre
        .iter()
        .map(|&p| {
            if p == 0.0 || rng.gen_bool(0.4) {
                0.0
            } else {
                p * rng.gen_range(0.5..=1.0)
            }
        })
        .collect();
    let upper = centre
        .iter()
        .map(|&p| {
            if p == 0.0 {
                0.0
            } else {
                (p + rng.gen_range(0.0..=0.4)).min(1.0)
            }
        })
        .collect();
    CredalRow::Intervals(IntervalRow::new(lower, upper).expect("bounds bracket a pmf"))
}

pub fn random_model<R: Rng + ?Sized>(rng: &mut R, shape: &ModelShape) -> TransitionModel {
    let n = rng.gen_range(shape.min_states..=shape.max_states);
    let rows = (0..n)
        .map(|_| {
            if rng.gen_bool(shape.interval_share) {
                random_interval_row(rng, n, shape)
            } else {
                random_vertex_row(rng, n, shape)
            }
        })
        .collect();
    TransitionModel::from_rows(rows).expect("rows match the state count")
}

/// Rejection-samples a model whose accessibility graph is strongly connected.
pub fn random_strongly_connected<R: Rng + ?Sized>(
    rng: &mut R,
    shape: &ModelShape,
) -> TransitionModel {
    let shape = ModelShape {
        density: shape.density.max(0.5),
        ..*shape
    };
    loop {
        let m = random_model(rng, &shape);
        if graph::build_graph(&m).is_strongly_connected() {
            return m;
        }
    }
}

/// Rejection-samples a model whose top class is absorbing.
pub fn random_tca_model<R: Rng + ?Sized>(rng: &mut R, shape: &ModelShape) -> TransitionModel {
    loop {
        let m = random_model(rng, shape);
        if graph::classify(&m).tca {
            return m;
        }
    }
}

/// Random subset of a model's states (possibly empty).
pub fn random_subset<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    let k = rng.gen_range(0..=n);
    let mut s = all[..k].to_vec();
    s.sort_unstable();
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_models_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = random_model(&mut rng, &ModelShape::default());
            assert!((3..=5).contains(&m.n()));
            let f = random_gamble(&mut rng, m.n());
            assert!((f.sup_norm() - 1.0).abs() < 1e-15);
        }
        let m = random_strongly_connected(&mut rng, &ModelShape::default());
        assert!(graph::build_graph(&m).is_strongly_connected());
        let m = random_tca_model(&mut rng, &ModelShape::default().vertex_only());
        assert!(m.is_vertex_only() && graph::classify(&m).tca);
    }
}
