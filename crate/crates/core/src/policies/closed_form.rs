//! Closed-form quantities of the Gaussian noisy-feature model.

use crate::linalg::{LinalgError, SymMatrix};

/// Optimal linear hypothesis under Gaussian features and Gaussian noise:
/// `θ̄ = (Σ_f + Σ_n)⁻¹ Σ_f θ*`.
pub fn bar_theta(
    feature_cov: &SymMatrix,
    noise_cov: &SymMatrix,
    theta_star: &[f64],
) -> Result<Vec<f64>, LinalgError> {
    let mut sum = feature_cov.clone();
    sum.add_scaled(noise_cov, 1.0);
    sum.solve_spd(&feature_cov.matvec(theta_star))
}

/// Posterior mean of the hidden feature given its noisy observation,
/// `E[z | x] = (Σ_f⁻¹ + Σ_n⁻¹)⁻¹ Σ_n⁻¹ x`.
pub fn posterior_mean(
    x: &[f64],
    feature_cov: &SymMatrix,
    noise_cov: &SymMatrix,
) -> Result<Vec<f64>, LinalgError> {
    let mut precision = feature_cov.inverse_spd()?;
    precision.add_scaled(&noise_cov.inverse_spd()?, 1.0);
    precision.solve_spd(&noise_cov.solve_spd(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        let b = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let mut g = b.matmul(&b.transpose());
        g.add_scaled(&Matrix::identity(n), 0.5);
        SymMatrix::new(g).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(p, q)| (p - q).abs() <= tol)
    }

    #[test]
    fn equal_covariances_halve_theta() {
        let i = SymMatrix::identity(3);
        let t = bar_theta(&i, &i, &[0.2, -0.4, 0.6]).unwrap();
        assert!(close(&t, &[0.1, -0.2, 0.3], 1e-15));
    }

    #[test]
    fn diagonal_arithmetic() {
        let t = bar_theta(&SymMatrix::from_diagonal(&[2.0, 1.0]), &SymMatrix::identity(2), &[1.0, 1.0]).unwrap();
        assert!(close(&t, &[2.0 / 3.0, 0.5], 1e-15));
    }

    #[test]
    fn bar_theta_residual_and_alternate_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let sf = random_spd(&mut rng, 6);
            let sn = random_spd(&mut rng, 6);
            let ts: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let t = bar_theta(&sf, &sn, &ts).unwrap();

            let mut sum = sf.clone();
            sum.add_scaled(&sn, 1.0);
            let lhs = sum.matvec(&t);
            let rhs = sf.matvec(&ts);
            assert!(close(&lhs, &rhs, 1e-10));

            // Σ_n⁻¹ (Σ_f⁻¹ + Σ_n⁻¹)⁻¹ θ*
            let mut p = sf.inverse_spd().unwrap();
            p.add_scaled(&sn.inverse_spd().unwrap(), 1.0);
            let alt = sn.solve_spd(&p.solve_spd(&ts).unwrap()).unwrap();
            assert!(close(&t, &alt, 1e-8));
        }
    }

    #[test]
    fn posterior_mean_cases() {
        let i = SymMatrix::identity(2);
        assert!(close(&posterior_mean(&[2.0, -6.0], &i, &i).unwrap(), &[1.0, -3.0], 1e-15));

        let tiny = SymMatrix::from_diagonal(&[1e-8, 1e-8]);
        let x = [0.7, -1.3];
        assert!(close(&posterior_mean(&x, &i, &tiny).unwrap(), &x, 1e-6));

        // (1/2 + 1)⁻¹ · 1 · 3
        let m = posterior_mean(&[3.0], &SymMatrix::from_diagonal(&[2.0]), &SymMatrix::from_diagonal(&[1.0])).unwrap();
        assert!((m[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn posterior_mean_matches_shrinkage_form() {
        // E[z|x] = Σ_f (Σ_f + Σ_n)⁻¹ x
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let sf = random_spd(&mut rng, 5);
            let sn = random_spd(&mut rng, 5);
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut sum = sf.clone();
            sum.add_scaled(&sn, 1.0);
            let alt = sf.matvec(&sum.solve_spd(&x).unwrap());
            assert!(close(&posterior_mean(&x, &sf, &sn).unwrap(), &alt, 1e-10));
        }
    }
}
