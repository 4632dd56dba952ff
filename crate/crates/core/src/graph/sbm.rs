//! Two-class stochastic block model with Gaussian features.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::Rng;
use crate::scalar::{real, Float};

use super::Graph;

/// Parameters of the synthetic two-class graph: `n` nodes split evenly into
/// two classes, 2-D features drawn from `N(±mu, sigma²)`, intra-class edge
/// probability `p_in`, inter-class `p_out`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SbmConfig {
    pub n: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        Self {
            n: 100,
            p_in: 0.9,
            p_out: 0.1,
            mu: 0.5,
            sigma: 2.0,
        }
    }
}

/// Generate the synthetic graph. Deterministic for a fixed seed: features are
/// drawn first (node-major, coordinate-major), then each unordered pair
/// `(i, j)`, `i < j`, in lexicographic order.
pub fn generate_sbm<T: Float>(seed: u64, config: &SbmConfig) -> Result<Graph<T>> {
    let SbmConfig { n, p_in, p_out, mu, sigma } = *config;
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "node count must be positive and even for equal-sized classes, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&p_out) || !(p_out..=1.0).contains(&p_in) {
        return Err(Error::InvalidArgument(format!(
            "probabilities must satisfy 0 <= p_out <= p_in <= 1, got p_in={p_in}, p_out={p_out}"
        )));
    }
    let mut rng = Rng::from_seed(seed);
    let half = n / 2;
    let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= half)).collect();

    let mut features = DenseMatrix::zeros(n, 2);
    for i in 0..n {
        let mean = if labels[i] == 0 { -mu } else { mu };
        for j in 0..2 {
            features.set(i, j, rng.normal(real::<T>(mean), real::<T>(sigma)));
        }
    }

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.bernoulli(p) {
                edges.push((i, j, T::one()));
            }
        }
    }
    Graph::build(n, &edges, features, Some(labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::homophily;

    #[test]
    fn degenerate_probabilities_give_two_complete_halves() {
        let config = SbmConfig { n: 4, p_in: 1.0, p_out: 0.0, ..SbmConfig::default() };
        let g: Graph<f64> = generate_sbm(1, &config).unwrap();
        assert_eq!(g.edges(), &[(0, 1, 1.0), (2, 3, 1.0)]);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let config = SbmConfig::default();
        let a: Graph<f64> = generate_sbm(7, &config).unwrap();
        let b: Graph<f64> = generate_sbm(7, &config).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert_eq!(a.features().data(), b.features().data());
        assert_eq!(a.labels(), b.labels());
    }

    #[test]
    fn default_graph_is_strongly_homophilous() {
        // Expected value p_in(n/2-1) / (p_in(n/2-1) + p_out n/2) ~ 0.898.
        let g: Graph<f64> = generate_sbm(7, &SbmConfig::default()).unwrap();
        assert!(homophily(&g).unwrap() >= 0.8);
    }

    #[test]
    fn odd_node_count_is_rejected() {
        let config = SbmConfig { n: 5, ..SbmConfig::default() };
        assert!(generate_sbm::<f64>(1, &config).is_err());
    }

    #[test]
    fn invalid_probabilities_are_rejected() {
        let config = SbmConfig { p_in: 0.2, p_out: 0.5, ..SbmConfig::default() };
        assert!(generate_sbm::<f64>(1, &config).is_err());
    }
}
