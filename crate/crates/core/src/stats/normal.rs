/// Standard normal CDF, `0.5 * erfc(-z / sqrt(2))`.
///
/// Going through `erfc` keeps full relative accuracy in the lower tail, where
/// `1 - 0.5 * erfc(..)` style formulas would cancel. Underflows to 0 below
/// roughly `z = -38.5`.
pub fn normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}
