use serde::Serialize;

use crate::stats::normal_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BsQuote {
    pub price: f64,
    pub delta: f64,
}

/// Lognormal call price and delta. A zero maturity or volatility returns the
/// discounted intrinsic value.
pub fn bs_closed_form(sigma: f64, r: f64, s0: f64, strike: f64, maturity: f64) -> BsQuote {
    let discounted_strike = strike * (-r * maturity).exp();
    let sd = sigma * maturity.max(0.0).sqrt();
    if sd <= 0.0 {
        let itm = s0 > discounted_strike;
        return BsQuote {
            price: (s0 - discounted_strike).max(0.0),
            delta: if itm { 1.0 } else { 0.0 },
        };
    }
    let d1 = ((s0 / strike).ln() + r * maturity) / sd + 0.5 * sd;
    let d2 = d1 - sd;
    BsQuote {
        price: s0 * normal_cdf(d1) - discounted_strike * normal_cdf(d2),
        delta: normal_cdf(d1),
    }
}

/// Value at time 0 of `(S_1 - S_{t1})_+` with zero rate: `s0` times an at-the-money
/// call of maturity `1 - t1` on a unit spot.
pub fn forward_start_call(sigma: f64, s0: f64, t1: f64) -> f64 {
    s0 * bs_closed_form(sigma, 0.0, 1.0, 1.0, 1.0 - t1).price
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limits() {
        let q = bs_closed_form(0.2, 0.0, 1.3, 1.0, 0.0);
        assert_eq!(q.price, 0.30000000000000004);
        assert_eq!(q.delta, 1.0);
        let q = bs_closed_form(0.2, 0.0, 50.0, 1.0, 1.0);
        assert!(q.delta > 1.0 - 1e-12);
        assert!(bs_closed_form(0.2, 0.0, 1.0, 1.0, 1e-12).price < 1e-6);
    }

    #[test]
    fn put_call_parity_with_rate() {
        let (s, k, r, t, sig) = (1.1, 1.0, 0.05, 0.7, 0.3);
        let c = bs_closed_form(sig, r, s, k, t).price;
        let sd = sig * t.sqrt();
        let d1 = ((s / k).ln() + r * t) / sd + 0.5 * sd;
        let put = k * (-r * t).exp() * normal_cdf(-(d1 - sd)) - s * normal_cdf(-d1);
        assert!((c - put - (s - k * (-r * t).exp())).abs() < 1e-14);
    }
}
