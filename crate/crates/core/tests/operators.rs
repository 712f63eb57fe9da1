use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use wcprox_core::degrade::{degrade, Degradation};
use wcprox_core::kernel::{make_kernel, ConvKernel, KernelSpec};
use wcprox_core::operator::{
    adjoint_mismatch, circ_conv, spectral_norm, Compose, Convolution, DenseOperator, Downsample, Identity,
    LinearOperator,
};
use wcprox_core::rng::{seeded, uniform_tensor};
use wcprox_core::{ImageTensor, Shape};

fn kernel_strategy() -> impl Strategy<Value = ConvKernel> {
    (0usize..3, 0usize..3)
        .prop_flat_map(|(a, b)| {
            let (h, w) = (2 * a + 1, 2 * b + 1);
            (Just(h), Just(w), prop::collection::vec(-1.0f64..1.0, h * w))
        })
        .prop_map(|(h, w, taps)| ConvKernel::new(h, w, taps).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convolution_adjoint_identity(k in kernel_strategy(), h in 5usize..12, w in 5usize..12, seed: u64) {
        let shape = Shape::new(2, h, w);
        let op = Convolution::new(k, shape).unwrap();
        let mut rng = seeded(seed);
        let x = uniform_tensor(&mut rng, shape, -1.0, 1.0);
        let y = uniform_tensor(&mut rng, shape, -1.0, 1.0);
        prop_assert!(adjoint_mismatch(&op, &x, &y).unwrap() <= 1e-10);
    }

    #[test]
    fn downsample_adjoint_identity(s in 1usize..4, cells in 1usize..6, seed: u64) {
        let shape = Shape::image(s * cells, s * (cells + 1));
        let op = Downsample::new(s, shape).unwrap();
        let mut rng = seeded(seed);
        let x = uniform_tensor(&mut rng, shape, -1.0, 1.0);
        let y = uniform_tensor(&mut rng, op.output_shape(), -1.0, 1.0);
        prop_assert!(adjoint_mismatch(&op, &x, &y).unwrap() <= 1e-12);
    }

    #[test]
    fn convolution_is_linear(k in kernel_strategy(), a in -3.0f64..3.0, b in -3.0f64..3.0, seed: u64) {
        let shape = Shape::image(7, 6);
        let mut rng = seeded(seed);
        let x = uniform_tensor(&mut rng, shape, -1.0, 1.0);
        let z = uniform_tensor(&mut rng, shape, -1.0, 1.0);
        let lhs = circ_conv(&x.lincomb(a, &z, b), &k).unwrap();
        let rhs = circ_conv(&x, &k).unwrap().lincomb(a, &circ_conv(&z, &k).unwrap(), b);
        prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-12);
    }
}

#[test]
fn twenty_random_pairs_for_the_gaussian_blur() {
    let k = make_kernel(KernelSpec::Gaussian { sigma: 1.6, size: 25 }).unwrap();
    let shape = Shape::image(32, 32);
    let op = Convolution::new(k, shape).unwrap();
    let mut rng = seeded(11);
    for _ in 0..20 {
        let x = uniform_tensor(&mut rng, shape, -1.0, 1.0);
        let y = uniform_tensor(&mut rng, shape, -1.0, 1.0);
        let lhs = op.apply(&x).unwrap().dot(&y);
        let rhs = x.dot(&op.apply_adjoint(&y).unwrap());
        assert!((lhs - rhs).abs() <= 1e-10 * x.norm() * y.norm());
    }
}

#[test]
fn identity_norm() {
    let op = Identity { shape: Shape::image(8, 8) };
    assert!((spectral_norm(&op, 500, 0).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn normalized_kernels_have_unit_norm() {
    for spec in [KernelSpec::Uniform { size: 9 }, KernelSpec::Gaussian { sigma: 1.6, size: 25 }] {
        let op = Convolution::new(make_kernel(spec).unwrap(), Shape::image(32, 32)).unwrap();
        let est = spectral_norm(&op, 500, 3).unwrap();
        assert!((est - 1.0).abs() < 1e-6, "{spec:?}: {est}");
    }
}

fn dense_top_eigenvalue(op: &impl LinearOperator) -> f64 {
    let d = DenseOperator::assemble(op).unwrap();
    let a = DMatrix::from_row_slice(d.rows(), d.cols(), d.entries());
    let gram = a.transpose() * &a;
    SymmetricEigen::new(gram).eigenvalues.max()
}

#[test]
fn blur_downsample_matches_dense_eigen_oracle() {
    let shape = Shape::image(16, 16);
    let k = make_kernel(KernelSpec::Gaussian { sigma: 1.6, size: 15 }).unwrap();
    let op = Compose::new(Downsample::new(2, shape).unwrap(), Convolution::new(k, shape).unwrap()).unwrap();
    let oracle = dense_top_eigenvalue(&op);
    let est = spectral_norm(&op, 500, 0).unwrap();
    assert!((est - oracle).abs() < 1e-6, "power {est} vs dense {oracle}");
}

#[test]
fn sr_pipeline_on_full_size_image() {
    let k = make_kernel(KernelSpec::Gaussian { sigma: 1.6, size: 25 }).unwrap();
    let op = Degradation::blur_downsample(k, 2, Shape::image(64, 64)).unwrap();
    assert_eq!(op.output_shape(), Shape::image(32, 32));
    let est = spectral_norm(&op, 500, 0).unwrap();
    assert!(est > 0.0 && est <= 1.0 + 1e-9);
    let x = ImageTensor::filled(Shape::image(64, 64), 0.5);
    let y = degrade(&x, &op, 0.0, 0).unwrap();
    assert!(y.data().iter().all(|v| (v - 0.5).abs() < 1e-12));
}

#[test]
fn power_iteration_is_monotone_and_seed_invariant() {
    let shape = Shape::image(16, 16);
    let k = make_kernel(KernelSpec::Gaussian { sigma: 0.7, size: 7 }).unwrap();
    let op = Compose::new(Downsample::new(2, shape).unwrap(), Convolution::new(k, shape).unwrap()).unwrap();
    let mut prev = 0.0;
    for iters in [1, 2, 5, 10, 50, 200, 500] {
        let est = spectral_norm(&op, iters, 4).unwrap();
        assert!(est >= prev - 1e-15, "{iters}: {est} < {prev}");
        prev = est;
    }
    let a = spectral_norm(&op, 500, 0).unwrap();
    for seed in 1..5 {
        assert!((spectral_norm(&op, 500, seed).unwrap() - a).abs() < 1e-6);
    }
}

#[test]
fn zero_operator_has_zero_norm() {
    let k = ConvKernel::new(1, 1, vec![0.0]).unwrap();
    let op = Convolution::new(k, Shape::image(4, 4)).unwrap();
    assert_eq!(spectral_norm(&op, 10, 0).unwrap(), 0.0);
}
