//! Noise samplers. Laplace noise uses the inverse CDF of one uniform draw;
//! Gaussian noise uses the cosine branch of the Box-Muller transform on two
//! uniform draws.

use std::f64::consts::PI;

use rand::Rng;

/// One draw from Laplace(0, `scale`).
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    loop {
        let u: f64 = rng.gen::<f64>() - 0.5;
        let tail = 1.0 - 2.0 * u.abs();
        if tail > 0.0 {
            return -scale * u.signum() * tail.ln();
        }
    }
}

/// One draw from Normal(0, `sigma`²).
pub fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    let u1 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        (mean, var)
    }

    #[test]
    fn laplace_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..200_000).map(|_| sample_laplace(&mut rng, 2.0)).collect();
        let (mean, var) = moments(&xs);
        assert!(mean.abs() < 0.05, "{mean}");
        assert!((var - 8.0).abs() < 0.3, "{var}");
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = (0..200_000).map(|_| sample_gaussian(&mut rng, 3.0)).collect();
        let (mean, var) = moments(&xs);
        assert!(mean.abs() < 0.05, "{mean}");
        assert!((var - 9.0).abs() < 0.2, "{var}");
    }
}
