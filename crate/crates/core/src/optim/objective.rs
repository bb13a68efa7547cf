//! Synthetic smooth objectives with known smoothness and lower bound.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::OptimError;

/// Ridge weight of the synthetic logistic regression.
pub const LOGREG_LAMBDA: f64 = 1e-2;
/// Gradient-descent budget for estimating the logistic-regression minimum.
pub const F_STAR_STEPS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    Quadratic,
    SyntheticLogreg,
}

impl FromStr for ObjectiveKind {
    type Err = OptimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quadratic" => Ok(ObjectiveKind::Quadratic),
            "logreg" | "synthetic_logreg" => Ok(ObjectiveKind::SyntheticLogreg),
            other => Err(OptimError::UnknownKind(other.to_string())),
        }
    }
}

/// `(L/2) ||x - center||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub l: f64,
    pub center: Vec<f64>,
}

/// Mean logistic loss on `(features, labels)` plus `(lambda/2) ||x||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogReg {
    pub features: Vec<Vec<f64>>,
    /// Labels in {-1, +1}.
    pub labels: Vec<f64>,
    pub lambda: f64,
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Quadratic(Quadratic),
    LogReg(LogReg),
    /// Average of the components.
    Mean(Vec<Objective>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub shape: Shape,
    pub l: f64,
    pub f_star: f64,
    pub x0: Vec<f64>,
}

impl Objective {
    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Quadratic(q) => 0.5 * q.l * x.iter().zip(&q.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>(),
            Shape::LogReg(r) => {
                let loss: f64 = r.features.iter().zip(&r.labels).map(|(a, &y)| softplus(-y * dot(a, x))).sum();
                loss / r.labels.len() as f64 + 0.5 * r.lambda * dot(x, x)
            }
            Shape::Mean(parts) => parts.iter().map(|p| p.value(x)).sum::<f64>() / parts.len() as f64,
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.shape {
            Shape::Quadratic(q) => x.iter().zip(&q.center).map(|(a, c)| q.l * (a - c)).collect(),
            Shape::LogReg(r) => {
                let m = r.labels.len() as f64;
                let mut g: Vec<f64> = x.iter().map(|v| r.lambda * v).collect();
                for (a, &y) in r.features.iter().zip(&r.labels) {
                    // d/dz softplus(-y z) = -y * sigmoid(-y z)
                    let w = -y * sigmoid(-y * dot(a, x)) / m;
                    for (gj, aj) in g.iter_mut().zip(a) {
                        *gj += w * aj;
                    }
                }
                g
            }
            Shape::Mean(parts) => {
                let mut g = vec![0.0; x.len()];
                for p in parts {
                    for (gj, pj) in g.iter_mut().zip(p.gradient(x)) {
                        *gj += pj;
                    }
                }
                let k = parts.len() as f64;
                g.iter_mut().for_each(|v| *v /= k);
                g
            }
        }
    }

    pub fn gap(&self) -> f64 {
        self.value(&self.x0) - self.f_star
    }
}

/// Homogeneous objective plus per-worker components whose mean it is.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub objective: Objective,
    pub components: Vec<Objective>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn normal_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Builds a seeded objective of `kind` in dimension `d` split into
/// `n_components` components. Quadratics use `L = 1` and gap 8.
pub fn make_objective(kind: ObjectiveKind, d: usize, n_components: usize, seed: u64) -> Result<Problem, OptimError> {
    if d == 0 || n_components == 0 {
        return Err(OptimError::Invalid("dimension and component count must be positive".into()));
    }
    Ok(match kind {
        ObjectiveKind::Quadratic => make_quadratic(1.0, 8.0, d, n_components, seed),
        ObjectiveKind::SyntheticLogreg => make_logreg(d, n_components, seed),
    })
}

/// Equal-curvature quadratics with seeded centers; the start point has gap
/// exactly `delta` for the mean objective.
pub fn make_quadratic(l: f64, delta: f64, d: usize, n_components: usize, seed: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = if n_components == 1 {
        vec![vec![0.0; d]]
    } else {
        (0..n_components).map(|_| normal_vec(&mut rng, d)).collect()
    };
    let mean: Vec<f64> = (0..d).map(|j| centers.iter().map(|c| c[j]).sum::<f64>() / n_components as f64).collect();
    let mut u = normal_vec(&mut rng, d);
    let norm = dot(&u, &u).sqrt();
    let radius = (2.0 * delta / l).sqrt();
    u.iter_mut().for_each(|v| *v *= radius / norm);
    let x0: Vec<f64> = mean.iter().zip(&u).map(|(m, v)| m + v).collect();
    let quad = |center: Vec<f64>| Objective {
        shape: Shape::Quadratic(Quadratic { l, center }),
        l,
        f_star: 0.0,
        x0: x0.clone(),
    };
    let components: Vec<Objective> = centers.iter().cloned().map(quad).collect();
    let objective = if n_components == 1 {
        components[0].clone()
    } else {
        // mean of (L/2)||x - c_i||^2 is (L/2)||x - mean||^2 plus the spread
        let spread = centers.iter().map(|c| c.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).sum::<f64>()
            / n_components as f64;
        Objective { shape: Shape::Mean(components.clone()), l, f_star: 0.5 * l * spread, x0: x0.clone() }
    };
    Problem { objective, components }
}

/// Largest eigenvalue of `A^T A / m` by power iteration.
fn gram_spectral_norm(features: &[Vec<f64>]) -> f64 {
    let d = features[0].len();
    let m = features.len() as f64;
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let mut w = vec![0.0; d];
        for a in features {
            let s = dot(a, &v);
            for (wj, aj) in w.iter_mut().zip(a) {
                *wj += s * aj / m;
            }
        }
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = w.into_iter().map(|x| x / norm).collect();
    }
    lambda
}

/// Minimizes `f` from `x0` with step `1/L` until the gradient vanishes or
/// the step budget runs out.
fn estimate_minimum(f: &Objective) -> f64 {
    let mut x = f.x0.clone();
    let step = 1.0 / f.l;
    for _ in 0..F_STAR_STEPS {
        let g = f.gradient(&x);
        if dot(&g, &g) < 1e-24 {
            break;
        }
        x.iter_mut().zip(&g).for_each(|(xj, gj)| *xj -= step * gj);
    }
    f.value(&x)
}

/// Seeded Gaussian features around a per-component mean, labels from a
/// planted separator with 10% flips.
pub fn make_logreg(d: usize, n_components: usize, seed: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted = normal_vec(&mut rng, d);
    let per = (20 * d).div_ceil(n_components).max(10);
    let scale = 1.0 / (d as f64).sqrt();
    let x0 = vec![0.0; d];
    let mut components = Vec::with_capacity(n_components);
    for c in 0..n_components {
        let shift: Vec<f64> = if c == 0 { vec![0.0; d] } else { normal_vec(&mut rng, d) };
        let mut features = Vec::with_capacity(per);
        let mut labels = Vec::with_capacity(per);
        for _ in 0..per {
            let a: Vec<f64> = normal_vec(&mut rng, d).iter().zip(&shift).map(|(z, s)| (z + 0.5 * s) * scale).collect();
            let mut y = if dot(&a, &planted) >= 0.0 { 1.0 } else { -1.0 };
            if rng.random::<f64>() < 0.1 {
                y = -y;
            }
            features.push(a);
            labels.push(y);
        }
        // logistic curvature is at most 1/4; 1% slack over the power estimate
        let l = 1.01 * gram_spectral_norm(&features) / 4.0 + LOGREG_LAMBDA;
        let mut obj = Objective {
            shape: Shape::LogReg(LogReg { features, labels, lambda: LOGREG_LAMBDA, l }),
            l,
            f_star: 0.0,
            x0: x0.clone(),
        };
        obj.f_star = estimate_minimum(&obj);
        components.push(obj);
    }
    let objective = if n_components == 1 {
        components[0].clone()
    } else {
        let l = components.iter().map(|c| c.l).sum::<f64>() / n_components as f64;
        let mut obj = Objective { shape: Shape::Mean(components.clone()), l, f_star: 0.0, x0 };
        obj.f_star = estimate_minimum(&obj);
        obj
    };
    Problem { objective, components }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gap_is_exact() {
        let p = make_quadratic(2.0, 5.0, 7, 1, 3);
        assert!((p.objective.gap() - 5.0).abs() < 1e-12);
        let p = make_quadratic(1.0, 8.0, 4, 4, 9);
        assert!((p.objective.gap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn mean_quadratic_minimizer_is_mean_center() {
        let p = make_quadratic(1.0, 8.0, 3, 4, 1);
        let centers: Vec<&Vec<f64>> = p
            .components
            .iter()
            .map(|c| match &c.shape {
                Shape::Quadratic(q) => &q.center,
                _ => unreachable!(),
            })
            .collect();
        let mean: Vec<f64> = (0..3).map(|j| centers.iter().map(|c| c[j]).sum::<f64>() / 4.0).collect();
        let g = p.objective.gradient(&mean);
        assert!(g.iter().all(|v| v.abs() < 1e-12));
        assert!((p.objective.value(&mean) - p.objective.f_star).abs() < 1e-12);
    }

    #[test]
    fn logreg_gradient_matches_finite_differences() {
        let p = make_logreg(5, 1, 11);
        let f = &p.objective;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = normal_vec(&mut rng, 5);
            let g = f.gradient(&x);
            for j in 0..5 {
                let (mut a, mut b) = (x.clone(), x.clone());
                a[j] += 1e-6;
                b[j] -= 1e-6;
                let fd = (f.value(&a) - f.value(&b)) / 2e-6;
                assert!((fd - g[j]).abs() <= 1e-5, "{fd} vs {}", g[j]);
            }
        }
    }

    #[test]
    fn logreg_minimum_is_a_lower_bound() {
        let p = make_logreg(4, 3, 2);
        assert!(p.objective.gap() > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let x = normal_vec(&mut rng, 4);
            assert!(p.objective.value(&x) >= p.objective.f_star - 1e-12);
        }
    }

    #[test]
    fn unknown_kind_is_rejected() {
        assert!("mnist".parse::<ObjectiveKind>().is_err());
        assert_eq!("logreg".parse::<ObjectiveKind>().unwrap(), ObjectiveKind::SyntheticLogreg);
    }
}
