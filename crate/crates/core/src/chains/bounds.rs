//! Mixing-time upper bounds.

use crate::error::{arg, Error, Result};
use crate::measures::ln_binomial;

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return arg(format!("eps must lie in (0, 1], got {eps}"));
    }
    Ok(())
}

fn check_log_prob(log_pi: f64) -> Result<()> {
    if log_pi == f64::NEG_INFINITY {
        return Err(Error::Domain("initial state has probability zero".into()));
    }
    if !log_pi.is_finite() || log_pi > 1e-12 {
        return arg(format!("log π(S0) must be a finite log-probability, got {log_pi}"));
    }
    Ok(())
}

/// Bound on the projection chain's mixing time from `S0`:
///
/// `τ(ε) ≤ 2N² (ln C(N, |S0|) + ln π(S0)^{-1} + ln ε^{-1})`
///
/// with `π(S0)` the normalized probability of the initial set.
pub fn theorem_bound(n: usize, s0_cardinality: usize, log_pi_s0: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    check_log_prob(log_pi_s0)?;
    if s0_cardinality > n {
        return arg(format!("|S0| = {s0_cardinality} exceeds N = {n}"));
    }
    let nf = n as f64;
    Ok(2.0 * nf * nf * (ln_binomial(n, s0_cardinality) - log_pi_s0 - eps.ln()))
}

/// Bound on the exchange chain for a `k`-homogeneous measure on `M` elements:
///
/// `τ(ε) ≤ 2k(M-k) (ln π(R0)^{-1} + ln ε^{-1})`.
pub fn exchange_bound(k: usize, m: usize, log_pi_r0: f64, eps: f64) -> Result<f64> {
    if !(0 < k && k < m) {
        return arg(format!("exchange bound needs 0 < k < M, got k={k}, M={m}"));
    }
    check_eps(eps)?;
    check_log_prob(log_pi_r0)?;
    Ok(2.0 * k as f64 * (m - k) as f64 * (-log_pi_r0 - eps.ln()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem_bound_values() {
        let b = theorem_bound(2, 1, 0.25f64.ln(), 0.05).unwrap();
        let want = 8.0 * (2f64.ln() + 4f64.ln() + 20f64.ln());
        assert!((b - want).abs() < 1e-12);
        assert!((b - 40.60).abs() < 0.01);
        assert_eq!(theorem_bound(5, 0, 0.0, 1.0).unwrap(), 0.0);
        let big = theorem_bound(200, 0, -10.0, 0.01).unwrap();
        assert!((big - 80_000.0 * (10.0 + 100f64.ln())).abs() < 1e-6);
        assert!((big - 1.168e6).abs() / 1.168e6 < 1e-3);
    }

    #[test]
    fn exchange_bound_values() {
        let b = exchange_bound(1, 2, 0.7f64.ln(), 0.05).unwrap();
        assert!((b - 2.0 * ((1.0 / 0.7f64).ln() + 20f64.ln())).abs() < 1e-12);
        assert!((b - 6.705).abs() < 1e-3);
        assert!((exchange_bound(3, 7, 0.0, 0.1).unwrap() - 24.0 * 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn homogenized_prefactor_matches() {
        // M = 2N, k = N gives 2N², and ln π_sh(R0)^{-1} = ln C(N,|S0|) + ln π(S0)^{-1}
        for n in 1..9 {
            for k0 in 0..=n {
                let log_pi = -1.3;
                let direct = theorem_bound(n, k0, log_pi, 0.01).unwrap();
                let via = exchange_bound(n, 2 * n, log_pi - ln_binomial(n, k0), 0.01).unwrap();
                assert!((direct - via).abs() <= 1e-9 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(theorem_bound(3, 1, f64::NEG_INFINITY, 0.1), Err(Error::Domain(_))));
        assert!(theorem_bound(3, 1, -1.0, 0.0).is_err());
        assert!(theorem_bound(3, 1, -1.0, 1.5).is_err());
        assert!(theorem_bound(3, 4, -1.0, 0.5).is_err());
        assert!(exchange_bound(0, 2, -1.0, 0.5).is_err());
        assert!(exchange_bound(2, 2, -1.0, 0.5).is_err());
    }
}
