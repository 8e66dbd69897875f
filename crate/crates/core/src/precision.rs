//! Value-level emulation of reduced-precision rounding.
//!
//! Every binary16 / bfloat16 / binary32 value is exactly representable as an
//! `f64`, so a quantized value is carried in an `f64` and arithmetic on such
//! values is performed in `f64` and immediately re-rounded. For `+`, `-` and `*`
//! on two operands of precision `p`, a 53-bit intermediate satisfies
//! `53 >= 2p + 2` for all three formats, so the double rounding is innocuous
//! and the result is the correctly rounded one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Reduced-precision formats that can be emulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrecisionFormat {
    /// IEEE 754 binary16.
    #[serde(rename = "f16")]
    Float16,
    /// Brain floating point: binary32 exponent range, 7 explicit mantissa bits.
    #[serde(rename = "bf16")]
    BFloat16,
    /// IEEE 754 binary32, used as the reference precision.
    #[serde(rename = "f32")]
    Float32Ref,
}

/// How subnormal results of the target format are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubnormalMode {
    /// Gradual underflow, as IEEE 754 specifies.
    #[default]
    Preserve,
    /// Subnormal results are replaced by a zero of the same sign.
    FlushToZero,
}

impl PrecisionFormat {
    pub const ALL: [PrecisionFormat; 3] = [Self::Float16, Self::BFloat16, Self::Float32Ref];

    /// Explicitly stored fraction bits.
    pub const fn mantissa_bits(self) -> u32 {
        match self {
            Self::Float16 => 10,
            Self::BFloat16 => 7,
            Self::Float32Ref => 23,
        }
    }

    pub const fn exponent_bits(self) -> u32 {
        match self {
            Self::Float16 => 5,
            Self::BFloat16 | Self::Float32Ref => 8,
        }
    }

    /// Looks a format up by its `(mantissa_bits, exponent_bits)` layout.
    pub fn from_layout(mantissa_bits: u32, exponent_bits: u32) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.mantissa_bits() == mantissa_bits && f.exponent_bits() == exponent_bits)
    }

    /// Short name used on the command line and in reports.
    pub const fn short_name(self) -> &'static str {
        match self {
            Self::Float16 => "f16",
            Self::BFloat16 => "bf16",
            Self::Float32Ref => "f32",
        }
    }

    const fn bias(self) -> i32 {
        (1 << (self.exponent_bits() - 1)) - 1
    }

    /// Smallest unbiased exponent of a normal number.
    pub const fn min_exponent(self) -> i32 {
        1 - self.bias()
    }

    /// Largest unbiased exponent of a finite number.
    pub const fn max_exponent(self) -> i32 {
        self.bias()
    }

    /// Largest finite value.
    pub fn max_finite(self) -> f64 {
        let m = self.mantissa_bits() as i32;
        (2.0 - pow2(-m)) * pow2(self.max_exponent())
    }

    /// Smallest positive normal value.
    pub fn min_positive_normal(self) -> f64 {
        pow2(self.min_exponent())
    }

    /// Smallest positive subnormal value.
    pub fn min_positive_subnormal(self) -> f64 {
        pow2(self.min_exponent() - self.mantissa_bits() as i32)
    }

    /// Unit in the last place at the magnitude of `x` (at least the subnormal spacing).
    pub fn ulp(self, x: f64) -> f64 {
        let e = floor_log2(x.abs()).unwrap_or(i32::MIN).max(self.min_exponent());
        pow2(e - self.mantissa_bits() as i32)
    }
}

impl fmt::Display for PrecisionFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for PrecisionFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "f16" | "fp16" | "float16" | "half" => Ok(Self::Float16),
            "bf16" | "bfloat16" => Ok(Self::BFloat16),
            "f32" | "fp32" | "float32" => Ok(Self::Float32Ref),
            other => Err(format!("unknown precision `{other}` (expected f16, bf16 or f32)")),
        }
    }
}

/// `2^e` for any exponent an `f64` can hold, including the subnormal range.
fn pow2(e: i32) -> f64 {
    if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else {
        // Subnormal f64, only reachable for exponents far below every emulated format.
        f64::from_bits(1u64 << (e + 1074))
    }
}

/// `floor(log2(x))` for finite positive `x`, exact (read from the bit pattern).
fn floor_log2(x: f64) -> Option<i32> {
    if !(x > 0.0) || !x.is_finite() {
        return None;
    }
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    if biased == 0 {
        let frac = bits & ((1u64 << 52) - 1);
        Some(-1074 + 63 - frac.leading_zeros() as i32)
    } else {
        Some(biased - 1023)
    }
}

/// Rounds `x` to the nearest value representable in `fmt`, ties to even.
///
/// Values beyond the largest finite value round to infinity exactly when IEEE 754
/// round-to-nearest would overflow. NaN stays NaN and the sign of zero is kept.
#[inline]
pub fn quantize(x: f64, fmt: PrecisionFormat) -> f64 {
    match fmt {
        // The hardware f64 -> f32 conversion is round-to-nearest-even with gradual underflow.
        PrecisionFormat::Float32Ref => x as f32 as f64,
        _ => quantize_generic(x, fmt),
    }
}

/// [`quantize`] with an explicit subnormal policy.
pub fn quantize_with(x: f64, fmt: PrecisionFormat, mode: SubnormalMode) -> f64 {
    let q = quantize(x, fmt);
    match mode {
        SubnormalMode::Preserve => q,
        SubnormalMode::FlushToZero if q != 0.0 && q.abs() < fmt.min_positive_normal() => {
            0.0f64.copysign(q)
        }
        SubnormalMode::FlushToZero => q,
    }
}

#[inline]
fn quantize_generic(x: f64, fmt: PrecisionFormat) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let mag = x.abs();
    let exp = floor_log2(mag).expect("finite nonzero").max(fmt.min_exponent());
    let quantum = pow2(exp - fmt.mantissa_bits() as i32);
    // Scaling by a power of two is exact; the quotient stays a normal f64.
    let rounded = (mag / quantum).round_ties_even() * quantum;
    let out = if rounded > fmt.max_finite() {
        f64::INFINITY
    } else {
        rounded
    };
    out.copysign(x)
}

/// Elementwise [`quantize`].
pub fn quantize_vector(v: &[f64], fmt: PrecisionFormat) -> Vec<f64> {
    v.iter().map(|&x| quantize(x, fmt)).collect()
}

/// Returns `true` if `x` is exactly representable in `fmt`.
pub fn is_representable(x: f64, fmt: PrecisionFormat) -> bool {
    x.is_nan() || quantize(x, fmt).to_bits() == x.to_bits()
}
