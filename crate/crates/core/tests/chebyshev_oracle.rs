//! Chebyshev-mode operators against the exact-mode oracle: convergence in
//! the degree, locality, hop reach, and the approximate energy split.

use fmp_core::chebyshev::{fit_chebyshev, FilterSource, PolynomialOperator};
use fmp_core::graph::{build_laplacian_bundle, dirichlet_energy, generate_sbm, Graph, SbmConfig};
use fmp_core::linalg::DenseMatrix;
use fmp_core::operators::{
    build_approx_operators, build_exact_operators, measured_reach, FrameletOperatorSet,
};
use fmp_core::rng::Rng;
use fmp_core::spectral::{eig_symmetric, haar_bank, nu_bank, FilterBank};

fn path_graph(n: usize) -> Graph<f64> {
    let edges: Vec<(usize, usize, f64)> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
    Graph::build(n, &edges, DenseMatrix::zeros(n, 1), None).unwrap()
}

fn complete_graph(n: usize) -> Graph<f64> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((i, j, 1.0));
        }
    }
    Graph::build(n, &edges, DenseMatrix::zeros(n, 1), None).unwrap()
}

struct Oracle {
    bundle: fmp_core::LaplacianBundle64,
    exact: FrameletOperatorSet<f64>,
}

fn oracle(graph: &Graph<f64>, bank: FilterBank<f64>, levels: usize) -> Oracle {
    let mut bundle = build_laplacian_bundle(graph).unwrap();
    let dec = eig_symmetric(&bundle.norm_laplacian().to_dense()).unwrap();
    bundle.set_lambda_max(dec.lambda_max());
    let exact = build_exact_operators(&dec, bank, levels).unwrap();
    Oracle { bundle, exact }
}

/// Floating-point granularity of a Frobenius comparison at this scale.
fn comparison_allowance(scale: f64) -> f64 {
    1024.0 * f64::EPSILON * scale.max(1.0)
}

#[test]
fn degree_sweep_converges_to_exact_operators() {
    let graphs = [
        ("path30", path_graph(30)),
        (
            "sbm24",
            generate_sbm(11, &SbmConfig { n: 24, ..SbmConfig::default() }).unwrap(),
        ),
        (
            "sbm64",
            generate_sbm(13, &SbmConfig { n: 64, ..SbmConfig::default() }).unwrap(),
        ),
    ];
    for (name, graph) in &graphs {
        for bank in [haar_bank::<f64>(), nu_bank::<f64>()] {
            let bank_name = bank.name();
            let levels = 2;
            let oracle = oracle(graph, bank.clone(), levels);
            for which in oracle.exact.indices() {
                let wexact = oracle.exact.to_dense(which).unwrap();
                let scale = wexact.frobenius_norm();
                let allowance = comparison_allowance(scale);
                let mut prev = f64::INFINITY;
                for m in [4usize, 8, 16, 32, 64] {
                    let approx =
                        build_approx_operators(&oracle.bundle, bank.clone(), levels, m).unwrap();
                    let err = approx
                        .to_dense(which)
                        .unwrap()
                        .sub(&wexact)
                        .frobenius_norm();
                    assert!(
                        err <= prev + allowance,
                        "{name}/{bank_name} {which:?}: err({m}) = {err:e} after {prev:e}"
                    );
                    if m == 32 && bank_name == "haar" {
                        assert!(
                            err <= 1e-6 * scale.max(1e-30),
                            "{name} {which:?}: m=32 relative error {}",
                            err / scale
                        );
                    }
                    if m == 64 && scale > 0.0 {
                        assert!(err / scale <= 1e-3, "{name}/{bank_name} {which:?}");
                    }
                    prev = err;
                }
            }
        }
    }
}

#[test]
fn influence_is_local() {
    // Every approximated operator touches at most degree * chain-length hops.
    let graph = generate_sbm::<f64>(
        19,
        &SbmConfig { n: 40, p_in: 0.25, p_out: 0.02, ..SbmConfig::default() },
    )
    .unwrap();
    let bundle = build_laplacian_bundle(&graph).unwrap();
    let m = 3;
    let approx = build_approx_operators(&bundle, haar_bank(), 2, m).unwrap();
    // BFS distances from each probe node over the adjacency.
    let n = graph.node_count();
    for source in [0usize, 7, 23] {
        let mut dist = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(i) = queue.pop_front() {
            for (j, _) in graph.adjacency().row_entries(i) {
                if dist[j] == usize::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        let mut e = DenseMatrix::zeros(n, 1);
        e.set(source, 0, 1.0);
        for which in approx.indices() {
            let y = approx.apply(which, &e).unwrap();
            let chain_len = match which {
                fmp_core::operators::OpIndex::LowPass => 10usize,
                fmp_core::operators::OpIndex::HighPass { .. } => 10,
            };
            let radius = m * chain_len;
            for i in 0..n {
                if dist[i] != usize::MAX && dist[i] > radius {
                    assert_eq!(y.get(i, 0), 0.0, "leak from {source} to {i}");
                }
            }
        }
    }
}

#[test]
fn hop_reach_matches_bfs_oracle() {
    // Single factor of degree m on a long path: reach m.
    let n = 40;
    let graph = path_graph(n);
    let bundle = build_laplacian_bundle(&graph).unwrap();
    let lambda = bundle.lambda_max_estimate();
    let bank = haar_bank::<f64>();
    for m in [4usize, 8] {
        let head = fit_chebyshev(
            |xi| bank.filter_high(1, xi),
            lambda,
            m,
            FilterSource::FilterHigh(1),
        )
        .unwrap();
        let op = PolynomialOperator { factors: vec![(head, 0)] };
        let mut e = DenseMatrix::zeros(n, 1);
        e.set(0, 0, 1.0);
        let y = op.apply(bundle.norm_laplacian(), lambda, &e).unwrap();
        assert_eq!(measured_reach(bundle.norm_laplacian(), 0, &y), m);
    }

    // Two chained factors of degree m: reach 2m.
    let m = 4;
    let head = fit_chebyshev(
        |xi| bank.filter_high(1, xi),
        lambda,
        m,
        FilterSource::FilterHigh(1),
    )
    .unwrap();
    let tail = fit_chebyshev(
        |xi| bank.filter_low(xi),
        lambda / 2.0,
        m,
        FilterSource::FilterLow,
    )
    .unwrap();
    let op = PolynomialOperator { factors: vec![(head, 0), (tail, -1)] };
    let mut e = DenseMatrix::zeros(n, 1);
    e.set(0, 0, 1.0);
    let y = op.apply(bundle.norm_laplacian(), lambda, &e).unwrap();
    assert_eq!(measured_reach(bundle.norm_laplacian(), 0, &y), 2 * m);

    // Complete graph: distance never exceeds the diameter 1.
    let complete = complete_graph(12);
    let cbundle = build_laplacian_bundle(&complete).unwrap();
    let clambda = cbundle.lambda_max_estimate();
    let head = fit_chebyshev(
        |xi| bank.filter_high(1, xi),
        clambda,
        6,
        FilterSource::FilterHigh(1),
    )
    .unwrap();
    let op = PolynomialOperator { factors: vec![(head, 0)] };
    let mut e = DenseMatrix::zeros(12, 1);
    e.set(3, 0, 1.0);
    let y = op.apply(cbundle.norm_laplacian(), clambda, &e).unwrap();
    assert_eq!(measured_reach(cbundle.norm_laplacian(), 3, &y), 1);
}

#[test]
fn opset_hop_reach_is_degree_times_chain() {
    // On a path far longer than the reach, the widest Haar chain at small
    // degree has visible influence out to degree * factors.
    let graph = path_graph(50);
    let bundle = build_laplacian_bundle(&graph).unwrap();
    let approx = build_approx_operators(&bundle, haar_bank(), 1, 2).unwrap();
    let reach = approx.hop_reach(0).unwrap();
    // Influence is capped by the theoretical radius and must reach at least
    // the first factor's degree.
    assert!(reach >= 2);
    assert!(reach <= 2 * 10);
}

#[test]
fn constant_vector_stays_in_low_pass() {
    let graph = generate_sbm::<f64>(23, &SbmConfig { n: 16, ..SbmConfig::default() }).unwrap();
    let bundle = build_laplacian_bundle(&graph).unwrap();
    let approx = build_approx_operators(&bundle, haar_bank(), 2, 16).unwrap();
    let kernel = DenseMatrix::column(&bundle.kernel_vector());
    let budget = approx.fit_error_budget().unwrap();
    for r in 1..=1 {
        for l in 1..=2 {
            let y = approx
                .apply(fmp_core::operators::OpIndex::HighPass { r, l }, &kernel)
                .unwrap();
            let norm = y.frobenius_norm() / kernel.frobenius_norm();
            assert!(norm <= budget + 1e-9, "high pass ({r},{l}) leaks {norm}");
        }
    }
}

#[test]
fn approximate_energy_split_stays_within_budget() {
    // |E(X) - sum E(W X)| <= (2 + delta) * delta * lambda_max * |X|^2 summed
    // over operators, plus the bank's own tightness deficit.
    for (bank, m) in [
        (nu_bank::<f64>(), 64usize),
        (haar_bank::<f64>(), 64),
        (haar_bank::<f64>(), 16),
    ] {
        let graph =
            generate_sbm::<f64>(29, &SbmConfig { n: 20, ..SbmConfig::default() }).unwrap();
        let o = oracle(&graph, bank.clone(), 2);
        let approx = build_approx_operators(&o.bundle, bank.clone(), 2, m).unwrap();
        let x = {
            let mut rng = Rng::from_seed(31);
            let mut x = DenseMatrix::zeros(20, 2);
            for v in x.data_mut() {
                *v = rng.normal(0.0, 1.0);
            }
            x
        };
        let total = dirichlet_energy(&o.bundle, &x).unwrap();
        let split: f64 = approx
            .indices()
            .into_iter()
            .map(|w| dirichlet_energy(&o.bundle, &approx.apply(w, &x).unwrap()).unwrap())
            .sum();
        let lambda_max = o.bundle.lambda_max_estimate();
        let norm_sq = x.dot(&x);
        let fit_budget = approx.fit_error_budget().unwrap();
        let exact_deficit = if bank.flat_radius() > 0.0 {
            0.0
        } else {
            fmp_core::operators::tightness_report(&o.exact)
                .unwrap()
                .deficit_bound
        };
        let budget =
            ((2.0 + fit_budget) * fit_budget + exact_deficit) * lambda_max * norm_sq + 1e-9;
        assert!(
            (total - split).abs() <= budget,
            "{}@{m}: residual {} budget {budget}",
            bank.name(),
            (total - split).abs()
        );
    }
}

#[test]
fn nu_approximation_is_exact_at_this_dilation() {
    // The scaled nu spectrum sits in the flat region: the low pass is the
    // identity chain and every high pass is the zero operator, in both modes.
    let graph = generate_sbm::<f64>(37, &SbmConfig { n: 30, ..SbmConfig::default() }).unwrap();
    let o = oracle(&graph, nu_bank(), 2);
    let approx = build_approx_operators(&o.bundle, nu_bank(), 2, 8).unwrap();
    for which in o.exact.indices() {
        let we = o.exact.to_dense(which).unwrap();
        let wa = approx.to_dense(which).unwrap();
        assert!(wa.sub(&we).frobenius_norm() <= 1e-10);
    }
}
