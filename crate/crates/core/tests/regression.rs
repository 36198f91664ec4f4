mod common;

use common::oracles::{agq_deviance, gauss_hermite, newton_logistic};
use mlcart::regression::{
    fit_logistic_irls, fit_random_intercept_logistic, ColumnMap, DesignColumn, DesignMatrix, Encoding, GlmmOptions,
    GroupIds, GroupLevel, IrlsOptions, MixedSpec,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn design(x: DMatrix<f64>, y: Vec<u8>) -> DesignMatrix {
    let columns = (0..x.ncols())
        .map(|j| DesignColumn {
            name: format!("c{j}"),
            source: None,
            encoding: if j == 0 { Encoding::Intercept } else { Encoding::Identity },
        })
        .collect();
    DesignMatrix {
        retained_rows: (0..x.nrows()).collect(),
        matrix: x,
        map: ColumnMap {
            columns,
            sources: vec![],
        },
        response: y,
        dropped: vec![],
    }
}

fn inv_logit(e: f64) -> f64 {
    1.0 / (1.0 + (-e).exp())
}

#[test]
fn gauss_hermite_integrates_polynomials() {
    let (x, w) = gauss_hermite(21);
    let pi_sqrt = std::f64::consts::PI.sqrt();
    let m0: f64 = w.iter().sum();
    let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
    let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
    assert!((m0 - pi_sqrt).abs() < 1e-12);
    assert!((m2 - pi_sqrt / 2.0).abs() < 1e-12);
    assert!((m4 - 3.0 * pi_sqrt / 4.0).abs() < 1e-12);
}

#[test]
fn irls_matches_newton_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = rng.random_range(60..=200);
        let p = rng.random_range(1..=5);
        let x = DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { rng.sample(StandardNormal) });
        let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<u8> = (0..n)
            .map(|i| {
                let e: f64 = (0..p).map(|j| x[(i, j)] * beta[j]).sum();
                u8::from(rng.random::<f64>() < inv_logit(e))
            })
            .collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..p).map(|j| x[(i, j)]).collect()).collect();
        let oracle = newton_logistic(&rows, &y);
        let fit = fit_logistic_irls(&design(x, y.clone()), &y, &IrlsOptions::default()).unwrap();
        assert!(fit.converged);
        for (a, b) in fit.coefficients.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}

#[test]
fn laplace_deviance_is_one_point_quadrature_and_bounds_agq() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (n, k) = (500, 10);
    let eff: Vec<f64> = (0..k).map(|_| 0.7 * rng.sample::<f64, _>(StandardNormal)).collect();
    let x = DMatrix::from_fn(n, 2, |_, j| if j == 0 { 1.0 } else { rng.sample(StandardNormal) });
    let y: Vec<u8> = (0..n)
        .map(|i| u8::from(rng.random::<f64>() < inv_logit(-0.2 + 0.6 * x[(i, 1)] + eff[i % k])))
        .collect();
    let g: Vec<usize> = (0..n).map(|i| i % k).collect();
    let groups = GroupIds {
        class: g.iter().map(|v| format!("c{v}")).collect(),
        school: g.iter().map(|v| format!("s{v}")).collect(),
    };
    let spec = MixedSpec {
        intercept_groups: vec![GroupLevel::Class],
        ..Default::default()
    };
    let d = design(x.clone(), y.clone());
    let fit = fit_random_intercept_logistic(&d, &y, &groups, &spec, &GlmmOptions::default()).unwrap();
    let eta: Vec<f64> = (0..n).map(|i| fit.fixed[0] + fit.fixed[1] * x[(i, 1)]).collect();
    // group index order in the fit is lexicographic on ids, same as g here
    let agq = agq_deviance(&eta, &y, &g, fit.sigma2_class, 21);
    let lap1 = agq_deviance(&eta, &y, &g, fit.sigma2_class, 1);
    println!(
        "sigma2 {:.5} laplace {:.6} agq1 {:.6} agq21 {:.6} diff {:.2e}",
        fit.sigma2_class,
        fit.laplace_deviance,
        lap1,
        agq,
        fit.laplace_deviance - agq
    );
    assert!((fit.laplace_deviance - lap1).abs() < 1e-6);
    assert!(fit.laplace_deviance >= agq - 1e-3);
}
