use wcprox_core::bounds::{validate_pnp_pgd, BoundPolicy, DEFAULT_SAFETY};
use wcprox_core::degrade::{degrade, Degradation};
use wcprox_core::denoiser::{GradientStepDenoiser, Potential};
use wcprox_core::fidelity::{QuadraticFidelity, SmoothFunction};
use wcprox_core::kernel::{make_kernel, KernelSpec};
use wcprox_core::metrics::psnr_clipped;
use wcprox_core::problem::{CompositeProblem, ZeroRegularizer};
use wcprox_core::properties::{check_sequence_lemma, descent_sequences};
use wcprox_core::scenarios::*;
use wcprox_core::solver::*;
use wcprox_core::synthetic::SyntheticImage;
use wcprox_core::{Error, ImageTensor, Shape};

fn cfg(tau: f64, alpha: f64) -> SolverConfig {
    SolverConfig { tau, alpha, residual_tol: 0.0, ..Default::default() }
}

#[test]
fn pgd_descent_on_random_instances() {
    for i in 0..20 {
        let inst = random_pgd_instance(0, i, DEFAULT_SAFETY).unwrap();
        let out = run_pgd(&inst.problem, &cfg(inst.tau, 1.0), &inst.x0, RunOptions::default()).unwrap();
        let (a, b) = descent_sequences(&out.trace);
        let report = check_sequence_lemma(&a, &b);
        assert!(report.pass, "instance {i}: {}", report.worst_slack);
        assert!(out.trace.is_monotone(1e-10));
    }
}

#[test]
fn lyapunov_descent_on_random_instances() {
    for policy in [BoundPolicy::Strict, BoundPolicy::Refined] {
        for i in 0..20 {
            let inst = random_alpha_instance(1, i, DEFAULT_SAFETY, policy).unwrap();
            let c = SolverConfig { bound_policy: policy, ..cfg(inst.tau, inst.alpha) };
            let out = run_alpha_pgd(&inst.problem, &c, &inst.x0, RunOptions::default()).unwrap();
            let (a, b) = descent_sequences(&out.trace);
            let report = check_sequence_lemma(&a, &b);
            assert!(report.pass, "{policy} instance {i}: {}", report.worst_slack);
        }
    }
}

#[test]
fn closed_form_fixed_points() {
    let (y, c, lambda) = (1.0, 1.0, 1.0);
    let (x_star, _) = scalar_quadratic_optimum(y, c, lambda);
    let p = scalar_quadratic_problem(y, c, lambda).unwrap();
    let x0 = ImageTensor::scalar(0.0);
    let out =
        run_pgd(&p, &SolverConfig { max_iters: 100, ..cfg(0.5, 1.0) }, &x0, RunOptions::default()).unwrap();
    assert!((out.solution.data()[0] - x_star).abs() < 1e-10);
    let out = run_alpha_pgd(&p, &cfg(0.9, 0.9), &x0, RunOptions::default()).unwrap();
    assert!((out.solution.data()[0] - x_star).abs() < 1e-10);

    for (lg, lambda, y) in [(0.5, 1.0, 1.0), (0.3, 1.2, -2.0)] {
        let d = GradientStepDenoiser::new(Potential::quadratic(lg, 0.0).unwrap());
        let out =
            run_pnp_pgd(scalar_fidelity(y), d, lambda, &cfg(1.0, 1.0), &x0, RunOptions::default()).unwrap();
        assert!((out.solution.data()[0] - pnp_quadratic_fixed_point(y, lg, lambda)).abs() < 1e-10);
    }
}

#[test]
fn alpha_one_collapses_to_pgd() {
    let inst = random_pgd_instance(3, 0, DEFAULT_SAFETY).unwrap();
    // At α = 1 the αPGD step bound is tighter than the PGD one; the collapse
    // is algebraic, so both runs skip validation.
    let c = SolverConfig { max_iters: 100, bound_policy: BoundPolicy::Override, ..cfg(inst.tau, 1.0) };
    let a = run_pgd(&inst.problem, &c, &inst.x0, RunOptions::default()).unwrap();
    let b = run_alpha_pgd(&inst.problem, &c, &inst.x0, RunOptions::default()).unwrap();
    assert_eq!(a.trace.objectives(), b.trace.objectives());
    assert_eq!(a.solution, b.solution);

    let d = GradientStepDenoiser::new(Potential::cosine(0.6, 0.1).unwrap());
    let x0 = ImageTensor::from_vector(vec![3.0, -1.0, 0.2]).unwrap();
    let f = QuadraticFidelity::new(
        wcprox_core::operator::Identity { shape: x0.shape() },
        ImageTensor::from_vector(vec![1.0, 2.0, -0.5]).unwrap(),
    )
    .unwrap();
    let c = SolverConfig { max_iters: 100, bound_policy: BoundPolicy::Override, ..cfg(1.0, 1.0) };
    let a = run_pnp_pgd(&f, d, 0.9, &c, &x0, RunOptions::default()).unwrap();
    let b = run_pnp_alpha_pgd(&f, d, 0.9, 1.0, &c, &x0, RunOptions::default()).unwrap();
    assert!(a.solution.sub(&b.solution).max_abs() <= 1e-12);
}

#[test]
fn gamma_zero_collapses_to_gradient_descent() {
    let d = GradientStepDenoiser::relaxed(Potential::cosine(0.6, 0.1).unwrap(), 0.0).unwrap();
    let shape = Shape::image(8, 8);
    let k = make_kernel(KernelSpec::Gaussian { sigma: 1.0, size: 5 }).unwrap();
    let op = Degradation::blur(k, shape).unwrap();
    let clean = SyntheticImage::Cartoon.render(8, 8);
    let y = degrade(&clean, &op, 0.0, 0).unwrap().map(|v| v + 0.1);
    let f = QuadraticFidelity::new(op, y).unwrap();
    let lambda = 1.2;
    let c = SolverConfig { max_iters: 100, ..cfg(1.0, 1.0) };
    let pnp = run_pnp_pgd(&f, d, lambda, &c, &clean, RunOptions::default()).unwrap();
    let gd_problem = CompositeProblem::new(&f, ZeroRegularizer, lambda).unwrap();
    let gd = run_pgd(&gd_problem, &c, &clean, RunOptions::default()).unwrap();
    assert!(pnp.solution.sub(&gd.solution).max_abs() <= 1e-12);
}

#[test]
fn rate_bound_on_scalar_quadratics() {
    for (c, tau) in [(1.0, 0.5), (-0.4, 1.0), (0.0, 1.9)] {
        let lambda = 1.0;
        let p = scalar_quadratic_problem(2.0, c, lambda).unwrap();
        let (_, f_star) = scalar_quadratic_optimum(2.0, c, lambda);
        let out =
            run_pgd(&p, &cfg(tau * 0.99, 1.0), &ImageTensor::scalar(-3.0), RunOptions::default()).unwrap();
        let check = residual_rate_check(&out.trace, f_star).unwrap();
        assert!(check.ok, "c={c}: {check:?}");
        let out =
            run_alpha_pgd(&p, &cfg(0.5, 0.7), &ImageTensor::scalar(-3.0), RunOptions::default()).unwrap();
        assert!(residual_rate_check(&out.trace, f_star).unwrap().ok);
    }
}

#[test]
fn rate_check_rejects_invalid_denominator() {
    let p = scalar_quadratic_problem(1.0, 0.0, 1.0).unwrap();
    let c = SolverConfig { bound_policy: BoundPolicy::Override, max_iters: 10, ..cfg(2.5, 1.0) };
    let out = run_pgd(&p, &c, &ImageTensor::scalar(0.0), RunOptions::default()).unwrap();
    assert!(residual_rate_check(&out.trace, 0.0).is_err());
}

#[test]
fn regime_extension_scenario() {
    // λL_f = 1.8 with L_f = 1.
    let lambda = 1.8;
    assert!(!validate_pnp_pgd(lambda, 1.0, 0.99, DEFAULT_SAFETY).unwrap().is_ok());
    let d = GradientStepDenoiser::relaxed(Potential::cosine(0.6, 0.39).unwrap(), 0.5).unwrap();
    let m = d.weak_convexity_constant();
    assert!((m - 0.495 / 1.495).abs() < 1e-12);
    let (lo, hi) = wcprox_core::bounds::pnp_alpha_interval(lambda, m).unwrap();
    assert!((hi - 1.0 / 1.8).abs() < 1e-15 && lo == m);
    let alpha = 0.5 * (lo + hi);
    let x0 = ImageTensor::from_vector(vec![0.5, -1.0, 2.0, 0.0]).unwrap();
    let f = QuadraticFidelity::new(
        wcprox_core::operator::Identity { shape: x0.shape() },
        ImageTensor::from_vector(vec![1.0, 0.0, -1.0, 3.0]).unwrap(),
    )
    .unwrap();
    let out = run_pnp_alpha_pgd(&f, d, lambda, alpha, &cfg(1.0, alpha), &x0, RunOptions::default()).unwrap();
    assert_eq!(out.trace.iterations(), 400);
    assert!(out.trace.is_monotone(1e-9));
    let infeasible = run_pnp_alpha_pgd(&f, d, 4.0, 0.2, &cfg(1.0, 0.2), &x0, RunOptions::default());
    assert!(matches!(infeasible, Err(Error::Infeasible(_))));
}

#[test]
fn deblurring_improves_psnr() {
    let clean = SyntheticImage::Cartoon.render(32, 32);
    let k = make_kernel(KernelSpec::Gaussian { sigma: 1.6, size: 25 }).unwrap();
    let op = Degradation::blur(k, clean.shape()).unwrap();
    let y = degrade(&clean, &op, 0.01, 0).unwrap();
    let f = QuadraticFidelity::new(op, y.clone()).unwrap();
    let d = GradientStepDenoiser::relaxed(Potential::cosine(0.6, 0.1).unwrap(), 0.05).unwrap();
    let lambda = 0.97 * wcprox_core::bounds::pnp_pgd_lambda_limit(f.lipschitz(), d.effective_lipschitz());
    let out = run_pnp_pgd(
        &f,
        d,
        lambda,
        &SolverConfig { max_iters: 200, ..cfg(1.0, 1.0) },
        &y,
        RunOptions::with_reference(&clean),
    )
    .unwrap();
    let before = psnr_clipped(&y, &clean, 1.0).unwrap().db();
    let after = psnr_clipped(&out.solution, &clean, 1.0).unwrap().db();
    assert!(after > before, "{after} <= {before}");
    assert!(out.trace.is_monotone(1e-10));
}

#[test]
fn runs_are_deterministic() {
    let inst = random_alpha_instance(9, 1, DEFAULT_SAFETY, BoundPolicy::Strict).unwrap();
    let c = cfg(inst.tau, inst.alpha);
    let a = run_alpha_pgd(&inst.problem, &c, &inst.x0, RunOptions::default()).unwrap();
    let b = run_alpha_pgd(&inst.problem, &c, &inst.x0, RunOptions::default()).unwrap();
    assert_eq!(a.trace, b.trace);
}
