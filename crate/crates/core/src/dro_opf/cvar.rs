use super::DroError;

/// Empirical conditional value-at-risk at level `eta` (the mean of the worst
/// `eta` fraction): `min_t t + (1/(eta I)) sum_i [loss_i - t]^+`. The
/// minimum is attained at a sample point, so scanning them is exact.
pub fn empirical_cvar(losses: &[f64], eta: f64) -> Result<f64, DroError> {
    if losses.is_empty() {
        return Err(DroError::Instance("empirical CVaR of an empty sample".into()));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(DroError::Instance(format!("CVaR level must lie in (0, 1], got {eta}")));
    }
    let scale = 1.0 / (eta * losses.len() as f64);
    let best = losses
        .iter()
        .map(|&t| t + scale * losses.iter().map(|&l| (l - t).max(0.0)).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert!((empirical_cvar(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap() - 3.5).abs() < 1e-12);
        assert!((empirical_cvar(&[1.0, 2.0, 6.0], 1.0).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(empirical_cvar(&[2.5; 7], 0.05).unwrap(), 2.5);
        assert!(empirical_cvar(&[], 0.5).is_err());
        assert!(empirical_cvar(&[1.0], 0.0).is_err());
    }
}
