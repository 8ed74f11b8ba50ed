//! Full-covariance Gaussian mixtures over RGB colours.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Color = [f64; 3];

/// Added to the diagonal of every fitted covariance.
pub const COVARIANCE_REGULARIZATION: f64 = 1e-3;
pub const EM_MAX_ITERS: usize = 100;
/// EM stops once the relative log-likelihood change drops below this.
pub const EM_REL_TOL: f64 = 1e-6;
pub const KMEANS_ITERS: usize = 10;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    weight: f64,
    mean: Vector3<f64>,
    cov: Matrix3<f64>,
    precision: Matrix3<f64>,
    log_norm: f64,
}

impl GaussianComponent {
    pub fn new(weight: f64, mean: Color, cov: [[f64; 3]; 3]) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidParams(format!(
                "component weight {weight} outside [0, 1]"
            )));
        }
        let cov = Matrix3::from_fn(|r, c| cov[r][c]);
        if (cov - cov.transpose()).amax() > 1e-9 * cov.amax().max(1.0) {
            return Err(Error::InvalidParams("covariance is not symmetric".into()));
        }
        Self::from_parts(weight, Vector3::from(mean), cov)
    }

    fn from_parts(weight: f64, mean: Vector3<f64>, cov: Matrix3<f64>) -> Result<Self> {
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::InvalidParams("covariance is not positive definite".into()))?;
        let log_det = 2.0
            * chol
                .l_dirty()
                .diagonal()
                .iter()
                .map(|d| d.ln())
                .sum::<f64>();
        Ok(Self {
            weight,
            mean,
            precision: chol.inverse(),
            cov,
            log_norm: -0.5 * (3.0 * LN_2PI + log_det),
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> Color {
        [self.mean.x, self.mean.y, self.mean.z]
    }

    pub fn covariance(&self) -> [[f64; 3]; 3] {
        std::array::from_fn(|r| std::array::from_fn(|c| self.cov[(r, c)]))
    }

    /// `log N(color; mean, cov)`, without the mixing weight.
    pub fn log_density(&self, color: &Color) -> f64 {
        let d = Vector3::from(*color) - self.mean;
        self.log_norm - 0.5 * d.dot(&(self.precision * d))
    }

    fn weighted_log_density(&self, color: &Color) -> f64 {
        self.weight.ln() + self.log_density(color)
    }
}

/// Weighted set of Gaussian colour models; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmParams {
    components: Vec<GaussianComponent>,
}

impl GmmParams {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParams(
                "a mixture needs at least one component".into(),
            ));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "component weights sum to {total}, not 1"
            )));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `-log Σ_k π_k N(color; μ_k, Σ_k)`.
    pub fn neg_log_density(&self, color: &Color) -> f64 {
        -log_sum_exp(
            self.components
                .iter()
                .map(|c| c.weighted_log_density(color)),
        )
    }

    /// Component with the largest weighted density; ties go to the lowest index.
    pub fn best_component(&self, color: &Color) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, c) in self.components.iter().enumerate() {
            let v = c.weighted_log_density(color);
            if v > best.1 {
                best = (k, v);
            }
        }
        best.0
    }

    pub fn log_likelihood(&self, samples: &[Color]) -> f64 {
        -samples.iter().map(|s| self.neg_log_density(s)).sum::<f64>()
    }

    /// Hard-assigns every sample to its best component, then re-estimates
    /// each component from its members. Components left without members are
    /// dropped.
    pub fn refit(&self, samples: &[Color]) -> Result<GmmParams> {
        if samples.is_empty() {
            return Err(Error::InsufficientSamples {
                samples: 0,
                components: 1,
            });
        }
        let assignment: Vec<usize> = samples.iter().map(|s| self.best_component(s)).collect();
        from_hard_assignment(samples, &assignment, self.components.len())
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Accumulates weighted first and second moments of a colour set.
#[derive(Clone)]
struct Moments {
    weight: f64,
    sum: Vector3<f64>,
    outer: Matrix3<f64>,
}

impl Moments {
    fn new() -> Self {
        Self {
            weight: 0.0,
            sum: Vector3::zeros(),
            outer: Matrix3::zeros(),
        }
    }

    fn add(&mut self, x: &Vector3<f64>, w: f64) {
        self.weight += w;
        self.sum += x * w;
    }

    fn mean(&self) -> Vector3<f64> {
        self.sum / self.weight
    }
}

/// Two passes: means first, then centred scatter, which avoids the
/// cancellation of the one-pass `E[xx^T] - μμ^T` form.
fn component_from_members(
    samples: &[Color],
    weights: impl Fn(usize) -> f64,
    total_weight: f64,
) -> Option<(f64, Vector3<f64>, Matrix3<f64>)> {
    let mut m = Moments::new();
    for (i, s) in samples.iter().enumerate() {
        let w = weights(i);
        if w > 0.0 {
            m.add(&Vector3::from(*s), w);
        }
    }
    if m.weight <= 0.0 {
        return None;
    }
    let mean = m.mean();
    for (i, s) in samples.iter().enumerate() {
        let w = weights(i);
        if w > 0.0 {
            let d = Vector3::from(*s) - mean;
            m.outer += d * d.transpose() * w;
        }
    }
    let cov = m.outer / m.weight + Matrix3::identity() * COVARIANCE_REGULARIZATION;
    let cov = (cov + cov.transpose()) * 0.5;
    Some((m.weight / total_weight, mean, cov))
}

fn assemble(parts: Vec<(f64, Vector3<f64>, Matrix3<f64>)>) -> Result<GmmParams> {
    let total: f64 = parts.iter().map(|p| p.0).sum();
    let components = parts
        .into_iter()
        .map(|(w, mean, cov)| GaussianComponent::from_parts(w / total, mean, cov))
        .collect::<Result<Vec<_>>>()?;
    GmmParams::new(components)
}

fn from_hard_assignment(samples: &[Color], assignment: &[usize], k: usize) -> Result<GmmParams> {
    let n = samples.len() as f64;
    let parts = (0..k)
        .filter_map(|c| component_from_members(samples, |i| (assignment[i] == c) as u8 as f64, n))
        .collect();
    assemble(parts)
}

fn sq_dist(a: &Color, b: &Color) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

fn nearest(centers: &[Color], x: &Color) -> usize {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.iter().enumerate() {
        let d = sq_dist(c, x);
        if d < best.1 {
            best = (k, d);
        }
    }
    best.0
}

/// k-means++ seeding. Fewer than `k` centres come back when the samples
/// hold fewer than `k` distinct colours.
fn kmeans_pp_seeds(samples: &[Color], k: usize, rng: &mut ChaCha8Rng) -> Vec<Color> {
    let mut centers = vec![samples[rng.gen_range(0..samples.len())]];
    let mut d2: Vec<f64> = samples.iter().map(|s| sq_dist(s, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).expect("positive total");
        for (i, &d) in d2.iter().enumerate() {
            acc += d;
            if acc > target && d > 0.0 {
                pick = i;
                break;
            }
        }
        let c = samples[pick];
        centers.push(c);
        for (d, s) in d2.iter_mut().zip(samples) {
            *d = d.min(sq_dist(s, &c));
        }
    }
    centers
}

fn kmeans(samples: &[Color], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut centers = kmeans_pp_seeds(samples, k, rng);
    let mut assignment: Vec<usize> = samples.iter().map(|s| nearest(&centers, s)).collect();
    for _ in 0..KMEANS_ITERS {
        let mut sums = vec![[0.0; 3]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (s, &a) in samples.iter().zip(&assignment) {
            for d in 0..3 {
                sums[a][d] += s[d];
            }
            counts[a] += 1;
        }
        for (c, (sum, &n)) in centers.iter_mut().zip(sums.iter().zip(&counts)) {
            if n > 0 {
                *c = sum.map(|v| v / n as f64);
            }
        }
        let next: Vec<usize> = samples.iter().map(|s| nearest(&centers, s)).collect();
        if next == assignment {
            break;
        }
        assignment = next;
    }
    assignment
}

/// A fitted mixture together with the log-likelihood after initialisation and
/// after every accepted EM step.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub params: GmmParams,
    pub log_likelihoods: Vec<f64>,
}

pub fn fit_gmm(samples: &[Color], k: usize, rng_seed: u64) -> Result<GmmParams> {
    fit_gmm_traced(samples, k, rng_seed).map(|f| f.params)
}

/// k-means++ seeded k-means followed by EM.
///
/// The regularised M-step is not an exact likelihood maximiser, so a step
/// that would lower the log-likelihood is rejected and fitting stops there;
/// the recorded trace is therefore non-decreasing.
pub fn fit_gmm_traced(samples: &[Color], k: usize, rng_seed: u64) -> Result<GmmFit> {
    if k == 0 {
        return Err(Error::InvalidParams(
            "GMM needs at least one component".into(),
        ));
    }
    if samples.len() < k {
        return Err(Error::InsufficientSamples {
            samples: samples.len(),
            components: k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let assignment = kmeans(samples, k, &mut rng);
    let mut params = from_hard_assignment(samples, &assignment, k)?;

    let n = samples.len();
    let mut resp = vec![0.0; n * params.len()];
    let mut ll = e_step(&params, samples, &mut resp);
    let mut trace = vec![ll];
    for _ in 0..EM_MAX_ITERS {
        let candidate = m_step(samples, &resp, params.len())?;
        let mut candidate_resp = vec![0.0; n * candidate.len()];
        let candidate_ll = e_step(&candidate, samples, &mut candidate_resp);
        if !(candidate_ll >= ll) {
            break;
        }
        let change = (candidate_ll - ll) / ll.abs().max(f64::MIN_POSITIVE);
        params = candidate;
        resp = candidate_resp;
        ll = candidate_ll;
        trace.push(ll);
        if change < EM_REL_TOL {
            break;
        }
    }
    Ok(GmmFit {
        params,
        log_likelihoods: trace,
    })
}

/// Fills `resp` (row-major n × K) and returns the log-likelihood.
fn e_step(params: &GmmParams, samples: &[Color], resp: &mut [f64]) -> f64 {
    let k = params.len();
    let mut ll = 0.0;
    let mut logs = vec![0.0; k];
    for (i, s) in samples.iter().enumerate() {
        for (l, c) in logs.iter_mut().zip(&params.components) {
            *l = c.weighted_log_density(s);
        }
        let lse = log_sum_exp(logs.iter().copied());
        ll += lse;
        for (r, l) in resp[i * k..(i + 1) * k].iter_mut().zip(&logs) {
            *r = (l - lse).exp();
        }
    }
    ll
}

fn m_step(samples: &[Color], resp: &[f64], k: usize) -> Result<GmmParams> {
    let n = samples.len() as f64;
    let parts = (0..k)
        .filter_map(|c| component_from_members(samples, |i| resp[i * k + c], n))
        // components whose responsibility mass has vanished
        .filter(|(w, _, _)| *w > 1e-12)
        .collect();
    assemble(parts)
}
