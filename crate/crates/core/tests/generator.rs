mod common;

use std::f64::consts::PI;

use common::{dirichlet, neumann, simpson, Stream};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use thermospec::{BcPair, CoupledGenerator, Coupling, StateVector};

fn random_state(rng: &mut Stream, n: usize) -> StateVector {
    StateVector {
        u: (0..n).map(|_| rng.complex()).collect(),
        v: (0..n).map(|_| rng.complex()).collect(),
        theta: (0..n).map(|_| rng.complex()).collect(),
    }
}

#[test]
fn energy_matches_physical_quadrature() {
    let l = 2.0;
    let n = 12;
    let mut rng = Stream::new(7);
    for bc in BcPair::ALL {
        let gen = CoupledGenerator::symmetric(bc, 1.0, n, l).unwrap();
        let s = random_state(&mut rng, n);
        let (bu, bt) = (gen.basis_u().clone(), gen.basis_theta().clone());
        let integrand = |x: f64| {
            let ux = bu.evaluate_derivative(&s.u, &[x]).unwrap()[0].norm_sqr();
            let v = bu.evaluate(&s.v, &[x]).unwrap()[0].norm_sqr();
            let th = bt.evaluate(&s.theta, &[x]).unwrap()[0].norm_sqr();
            ux + v + th
        };
        let q = simpson(&integrand, 0.0, l, 1e-12);
        let e = gen.energy_norm_sq(&s).unwrap();
        assert!((q - e).abs() <= 1e-8 * e, "{bc}: {q} vs {e}");
    }
}

#[test]
fn mixed_assembly_uses_quadrature_gram() {
    let gen = CoupledGenerator::symmetric(BcPair::DN, 1.0, 2, PI).unwrap();
    let a = gen.matrix();
    assert_eq!((a.nrows(), a.ncols()), (6, 6));
    for m in 0..2 {
        for k in 0..2 {
            let g = simpson(&|x| dirichlet(m + 1, PI, x) * neumann(k + 1, PI, x), 0.0, PI, 1e-13);
            // v row couples to theta through -G, theta row to v through G^T
            assert!((a[(2 + m, 4 + k)] + g).abs() < 1e-10);
            assert!((a[(4 + k, 2 + m)] - g).abs() < 1e-10);
        }
    }
}

#[test]
fn zero_coupling_decouples() {
    for bc in BcPair::ALL {
        let gen = CoupledGenerator::assemble(bc, Coupling::symmetric(0.0), 4, PI).unwrap();
        let a = gen.matrix();
        for i in 0..8 {
            for j in 8..12 {
                assert_eq!(a[(i, j)], 0.0);
                assert_eq!(a[(j, i)], 0.0);
            }
        }
    }
}

#[test]
fn coupling_cancels_in_energy_for_mixed_pairs() {
    // with theta = 0 and only the coupling active, Re<AU,U> vanishes
    let mut rng = Stream::new(11);
    for bc in [BcPair::DN, BcPair::ND] {
        let gen = CoupledGenerator::symmetric(bc, 1.3, 10, PI).unwrap();
        for _ in 0..10 {
            let s = random_state(&mut rng, 10);
            let re = gen.energy_inner(&gen.apply(&s).unwrap(), &s).unwrap().re;
            let dissipated = gen.thermal_dissipation(&s).unwrap();
            assert!((re + dissipated).abs() <= 1e-10 * gen.energy_norm_sq(&s).unwrap());
        }
    }
}

#[test]
fn modal_blocks_match_assembled_matrix() {
    for bc in [BcPair::DD, BcPair::NN] {
        let gen = CoupledGenerator::symmetric(bc, 0.7, 6, 1.5).unwrap();
        let a = gen.matrix();
        for m in 0..6 {
            let block = gen.modal_block(m).unwrap().matrix();
            for (i, row) in block.iter().enumerate() {
                for (j, &val) in row.iter().enumerate() {
                    assert_eq!(a[(i * 6 + m, j * 6 + m)], val);
                }
            }
        }
    }
}

#[test]
fn euclidean_form_preserves_norm_and_spectrum() {
    let mut rng = Stream::new(3);
    let gen = CoupledGenerator::symmetric(BcPair::ND, 1.0, 5, PI).unwrap();
    let s = random_state(&mut rng, 5);
    let w = gen.to_weighted(&s).unwrap();
    let e: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    assert!((e - gen.energy_norm_sq(&s).unwrap()).abs() < 1e-12 * e);
    let mut a = thermospec::linalg::eigenvalues(&gen.matrix()).unwrap();
    let mut b = thermospec::linalg::eigenvalues(&gen.to_euclidean()).unwrap();
    let key = |z: &C| (z.im, z.re);
    a.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    b.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).norm() < 1e-9 * x.norm().max(1.0), "{x} vs {y}");
    }
}

#[test]
fn shifted_solve_small_example() {
    let gen = CoupledGenerator::symmetric(BcPair::DD, 1.0, 1, PI).unwrap();
    let rhs = StateVector::from_real(&[0.0], &[1.0], &[0.0]).unwrap();
    let u = gen.solve_shifted(C::new(1.0, 0.0), &rhs).unwrap();
    assert!((u.u[0] - 0.4).norm() < 1e-14);
    assert!((u.v[0] - 0.4).norm() < 1e-14);
    assert!((u.theta[0] - 0.2).norm() < 1e-14);
}

fn bc_strategy() -> impl Strategy<Value = BcPair> {
    prop::sample::select(BcPair::ALL.to_vec())
}

fn state_strategy(n: usize) -> impl Strategy<Value = StateVector> {
    let c = (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C::new(a, b));
    (
        prop::collection::vec(c.clone(), n),
        prop::collection::vec(c.clone(), n),
        prop::collection::vec(c, n),
    )
        .prop_map(|(u, v, theta)| StateVector { u, v, theta })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dissipativity_identity(bc in bc_strategy(), gamma in -3.0f64..3.0, s in state_strategy(16)) {
        let gen = CoupledGenerator::symmetric(bc, gamma, 16, PI).unwrap();
        let norm = gen.energy_norm_sq(&s).unwrap();
        prop_assume!(norm > 1e-6);
        let lhs = gen.energy_inner(&gen.apply(&s).unwrap(), &s).unwrap().re + gen.thermal_dissipation(&s).unwrap();
        prop_assert!(lhs.abs() <= 1e-10 * norm);
    }

    #[test]
    fn generalized_coupling_bound(
        bc in bc_strategy(),
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
        s in state_strategy(12).prop_map(|s| StateVector {
            u: s.u.iter().map(|z| C::new(z.re, 0.0)).collect(),
            v: s.v.iter().map(|z| C::new(z.re, 0.0)).collect(),
            theta: s.theta.iter().map(|z| C::new(z.re, 0.0)).collect(),
        }),
    ) {
        let gen = CoupledGenerator::assemble(bc, Coupling::general(alpha, beta).unwrap(), 12, PI).unwrap();
        let norm = gen.energy_norm_sq(&s).unwrap();
        let lhs = gen.energy_inner(&gen.apply(&s).unwrap(), &s).unwrap().re;
        let c = (alpha + beta).powi(2).max(1.0);
        prop_assert!(lhs <= c / 2.0 * norm - gen.thermal_dissipation(&s).unwrap() + 1e-10 * norm.max(1.0));
    }

    #[test]
    fn shifted_solve_reconstructs_rhs(
        bc in bc_strategy(),
        gamma in 0.1f64..2.0,
        re in 0.05f64..3.0,
        im in -20.0f64..20.0,
        f in state_strategy(10),
    ) {
        let gen = CoupledGenerator::symmetric(bc, gamma, 10, PI).unwrap();
        let mu = C::new(re, im);
        let u = gen.solve_shifted(mu, &f).unwrap();
        let residual = u.scale(mu).sub(&gen.apply(&u).unwrap()).sub(&f);
        let fn2 = gen.energy_norm_sq(&f).unwrap();
        prop_assert!(gen.energy_norm_sq(&residual).unwrap().sqrt() <= 1e-10 * fn2.sqrt());
    }
}
