//! The continuous message passing field under the integrator: closed-form
//! eigen checks and the energy growth envelope.

use fmp_core::fmp::{fmp_ode_rhs, FmpParams};
use fmp_core::graph::{build_laplacian_bundle, dirichlet_energy, generate_sbm, SbmConfig};
use fmp_core::linalg::DenseMatrix;
use fmp_core::ode::{integrate, OdeConfig};
use fmp_core::operators::build_exact_operators;
use fmp_core::rng::Rng;
use fmp_core::spectral::{eig_symmetric, haar_bank};

fn setup(
    seed: u64,
    n: usize,
    levels: usize,
) -> (
    fmp_core::LaplacianBundle64,
    fmp_core::SpectralDecomposition64,
    fmp_core::FrameletOperatorSet64,
) {
    let graph = generate_sbm::<f64>(seed, &SbmConfig { n, ..SbmConfig::default() }).unwrap();
    let mut bundle = build_laplacian_bundle(&graph).unwrap();
    let dec = eig_symmetric(&bundle.norm_laplacian().to_dense()).unwrap();
    bundle.set_lambda_max(dec.lambda_max());
    let ops = build_exact_operators(&dec, haar_bank(), levels).unwrap();
    (bundle, dec, ops)
}

fn random_psd(seed: u64, k: usize, d: usize, trace_bound: f64) -> FmpParams<f64> {
    let mut rng = Rng::from_seed(seed);
    let mut params = FmpParams::zeros(k, d);
    for theta in params.iter_mut() {
        for v in theta.data_mut() {
            *v = rng.normal(0.0, 1.0);
        }
    }
    params.trace_bound = Some(trace_bound);
    params.psd_project = true;
    params.project_psd().unwrap();
    params
}

#[test]
fn zero_parameters_give_zero_field() {
    let (_, _, ops) = setup(2, 10, 2);
    let params = FmpParams::<f64>::zeros(1, 3);
    let x = {
        let mut rng = Rng::from_seed(3);
        let mut x = DenseMatrix::zeros(10, 3);
        for v in x.data_mut() {
            *v = rng.normal(0.0, 1.0);
        }
        x
    };
    assert_eq!(fmp_ode_rhs(&ops, &params, &x).unwrap().max_abs(), 0.0);
}

#[test]
fn scalar_field_diagonalizes_per_eigenvalue() {
    // d = 1 with scalar thetas: the field multiplies eigen-coordinate l by
    // g(lt) = theta0 alpha(lt/2) + theta1 sum_l beta(lt/2^l).
    let (_, dec, ops) = setup(3, 12, 2);
    let mut params = FmpParams::<f64>::zeros(1, 1);
    params.theta_low.set(0, 0, 0.8);
    params.theta_high[0].set(0, 0, -0.45);
    let bank = haar_bank::<f64>();
    let shrink = 2.0f64.powi(-ops.dilation());

    for l in 0..12 {
        let u = DenseMatrix::column(&dec.eigenvectors.col_to_vec(l));
        let lt = dec.eigenvalues[l] * shrink;
        let g = 0.8 * bank.scaling_low(lt / 2.0)
            - 0.45 * (bank.scaling_high(1, lt / 2.0) + bank.scaling_high(1, lt / 4.0));
        let rhs = fmp_ode_rhs(&ops, &params, &u).unwrap();
        assert!(rhs.sub(&u.scale(g)).max_abs() <= 1e-10, "eigenvalue {l}");
    }
}

#[test]
fn linear_field_final_state_matches_exponential() {
    // Each eigen-coordinate evolves as e^{g(lt) t}; DOPRI5 must track it to
    // within 100 rtol.
    let (_, dec, ops) = setup(5, 10, 1);
    let mut params = FmpParams::<f64>::zeros(1, 1);
    params.theta_low.set(0, 0, 0.6);
    params.theta_high[0].set(0, 0, 0.3);
    let bank = haar_bank::<f64>();
    let shrink = 2.0f64.powi(-ops.dilation());

    let x0 = {
        let mut rng = Rng::from_seed(7);
        let mut x = DenseMatrix::zeros(10, 1);
        for v in x.data_mut() {
            *v = rng.normal(0.0, 1.0);
        }
        x
    };
    let cfg = OdeConfig::dopri5(0.0, 1.0);
    let out = integrate(|x| fmp_ode_rhs(&ops, &params, x).unwrap(), &x0, &cfg).unwrap();

    for l in 0..10 {
        let u = dec.eigenvectors.col_to_vec(l);
        let lt = dec.eigenvalues[l] * shrink;
        let g = 0.6 * bank.scaling_low(lt / 2.0) + 0.3 * bank.scaling_high(1, lt / 2.0);
        let coord0: f64 = (0..10).map(|i| u[i] * x0.get(i, 0)).sum();
        let coord1: f64 = (0..10).map(|i| u[i] * out.final_state.get(i, 0)).sum();
        let expected = coord0 * g.exp();
        assert!(
            (coord1 - expected).abs() <= 100.0 * cfg.rtol * expected.abs().max(1.0),
            "eigenvalue {l}: {coord1} vs {expected}"
        );
    }
}

#[test]
fn ode_energy_grows_monotonically_under_psd_parameters() {
    // Non-decreasing Dirichlet energy within solver tolerance, bounded by
    // e^{2 M sqrt(KJ+1) t}, across random small instances.
    let rtol = 1e-7;
    for trial in 0..100u64 {
        let n = 8 + (trial as usize % 4) * 4;
        let levels = 1 + (trial as usize % 2);
        let (bundle, _, ops) = setup(trial + 11, n, levels);
        let trace_bound = 1.0;
        let params = random_psd(trial ^ 0xabc, 1, 2, trace_bound);
        let x0 = {
            let mut rng = Rng::from_seed(trial ^ 0x123);
            let mut x = DenseMatrix::zeros(n, 2);
            for v in x.data_mut() {
                *v = rng.normal(0.0, 1.0);
            }
            x
        };
        let mut cfg = OdeConfig::dopri5(0.0, 1.0);
        cfg.rtol = rtol;
        cfg.atol = 1e-9;
        cfg.store_states = true;
        let out = integrate(|x| fmp_ode_rhs(&ops, &params, x).unwrap(), &x0, &cfg).unwrap();
        let states = out.states.unwrap();
        let e0 = dirichlet_energy(&bundle, &x0).unwrap();
        let kj = ops.bank().high_pass_count() * ops.levels();
        let rate = 2.0 * trace_bound * ((kj + 1) as f64).sqrt();
        let mut prev = e0;
        for (time, state) in out.times.iter().zip(&states) {
            let e = dirichlet_energy(&bundle, state).unwrap();
            assert!(
                e >= prev - 10.0 * rtol * prev.max(1.0),
                "trial {trial}: energy decreased {prev} -> {e}"
            );
            let bound = e0 * (rate * time).exp();
            assert!(
                e <= bound * (1.0 + 10.0 * rtol) + 1e-12,
                "trial {trial}: energy {e} above envelope {bound}"
            );
            prev = e;
        }
    }
}
