use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Quadrature rule over photon momenta `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid<R> {
    nodes: Vec<R>,
    weights: Vec<R>,
}

impl<R: Real> QuadratureGrid<R> {
    /// Builds a grid from explicit nodes and weights; nodes must be finite and
    /// strictly increasing, weights positive.
    pub fn from_nodes(nodes: Vec<R>, weights: Vec<R>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "quadrature grid needs matching nonempty node/weight lists (got {} and {})",
                nodes.len(),
                weights.len()
            )));
        }
        if nodes.iter().any(|x| !x.is_finite()) || nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("quadrature nodes must be finite and strictly increasing".into()));
        }
        if weights.iter().any(|w| !(*w > R::zero()) || !w.is_finite()) {
            return Err(Error::InvalidInput("quadrature weights must be positive".into()));
        }
        Ok(QuadratureGrid { nodes, weights })
    }

    pub fn nodes(&self) -> &[R] {
        &self.nodes
    }

    pub fn weights(&self) -> &[R] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (R, R)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(R) -> R) -> R {
        self.iter().map(|(k, w)| w * f(k)).sum()
    }
}

/// `n`-point Gauss-Legendre rule on `[kmin, kmax]`.
pub fn gauss_legendre<R: Real>(n: usize, kmin: R, kmax: R) -> Result<QuadratureGrid<R>> {
    if !(kmax > kmin) || !(kmin >= R::zero()) || !kmax.is_finite() {
        return Err(Error::BadRange {
            kmin: kmin.as_f64(),
            kmax: kmax.as_f64(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidInput("gauss_legendre: n must be at least 1".into()));
    }
    let (x, w) = legendre_rule(n);
    let half = (kmax.as_f64() - kmin.as_f64()) / 2.0;
    let mid = (kmax.as_f64() + kmin.as_f64()) / 2.0;
    let nodes = x.iter().map(|&xi| R::lit(mid + half * xi)).collect();
    let weights = w.iter().map(|&wi| R::lit(half * wi)).collect();
    QuadratureGrid::from_nodes(nodes, weights)
}

/// Nodes (ascending) and weights on `[-1, 1]`, by Newton iteration on `P_n`.
fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_and_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
