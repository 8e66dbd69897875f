//! Matrix multiplication with an explicit, configurable reduction order.
//!
//! Each output element is one dot product whose partial sums are combined in
//! exactly the order a [`ReductionSchedule`] dictates. Two different schedules
//! stand in for two GPU kernels with different accumulation trees.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::{quantize, quantize_with, PrecisionFormat, SubnormalMode};

/// Order in which the partial products of a dot product are summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ReductionSchedule {
    /// Left-to-right running sum.
    Sequential,
    /// Balanced binary tree: the range is split at `len / 2` recursively.
    PairwiseTree,
    /// Sequential sums over consecutive blocks, then a sequential sum of the block totals.
    Blocked { block_size: usize },
    /// Left-to-right running sum over a seeded permutation of the summands.
    Permuted { seed: u64 },
}

impl ReductionSchedule {
    pub fn blocked(block_size: usize) -> Result<Self> {
        let s = Self::Blocked { block_size };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Blocked { block_size: 0 } => Err(Error::InvalidParameter {
                name: "block_size",
                reason: "must be at least 1".into(),
            }),
            _ => Ok(()),
        }
    }

    /// Order in which summand indices enter the reduction, left to right.
    pub fn summand_order(&self, len: usize) -> Vec<usize> {
        match *self {
            Self::Permuted { seed } => permutation(seed, len),
            _ => (0..len).collect(),
        }
    }
}

fn permutation(seed: u64, len: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    order
}

impl fmt::Display for ReductionSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Sequential => f.write_str("sequential"),
            Self::PairwiseTree => f.write_str("pairwise"),
            Self::Blocked { block_size } => write!(f, "blocked:{block_size}"),
            Self::Permuted { seed } => write!(f, "permuted:{seed}"),
        }
    }
}

impl FromStr for ReductionSchedule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let (kind, arg) = match lower.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (lower.as_str(), None),
        };
        let parsed = match (kind, arg) {
            ("sequential" | "seq", None) => Self::Sequential,
            ("pairwise" | "tree" | "pairwise_tree", None) => Self::PairwiseTree,
            ("blocked", Some(a)) => Self::Blocked {
                block_size: a.parse().map_err(|_| format!("bad block size `{a}`"))?,
            },
            ("permuted", Some(a)) => Self::Permuted {
                seed: a.parse().map_err(|_| format!("bad permutation seed `{a}`"))?,
            },
            _ => {
                return Err(format!(
                    "unknown schedule `{s}` (expected sequential, pairwise, blocked:<n> or permuted:<seed>)"
                ))
            }
        };
        parsed.validate().map_err(|e| e.to_string())?;
        Ok(parsed)
    }
}

impl From<ReductionSchedule> for String {
    fn from(s: ReductionSchedule) -> Self {
        s.to_string()
    }
}

impl TryFrom<String> for ReductionSchedule {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

/// Precision in which partial products and partial sums are held.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Accumulator {
    /// Products and every partial sum rounded to the operand format.
    #[serde(rename = "native")]
    Native,
    /// Products and partial sums rounded to binary32; only the result is rounded to the operand format.
    #[default]
    #[serde(rename = "f32")]
    Float32,
    /// Products and sums kept in `f64`; only the result is rounded to the operand format.
    #[serde(rename = "f64")]
    Wide,
}

impl fmt::Display for Accumulator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Native => "native",
            Self::Float32 => "f32",
            Self::Wide => "f64",
        })
    }
}

impl FromStr for Accumulator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "native" => Ok(Self::Native),
            "f32" | "fp32" | "float32" => Ok(Self::Float32),
            "f64" | "wide" | "widened" => Ok(Self::Wide),
            other => Err(format!("unknown accumulator `{other}` (expected native, f32 or f64)")),
        }
    }
}

/// Rounding rules for one scheduled dot product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arithmetic {
    pub precision: PrecisionFormat,
    pub accumulator: Accumulator,
    pub subnormals: SubnormalMode,
}

impl Arithmetic {
    pub fn new(precision: PrecisionFormat, accumulator: Accumulator) -> Self {
        Self {
            precision,
            accumulator,
            subnormals: SubnormalMode::Preserve,
        }
    }

    fn round_to(&self, x: f64, fmt: PrecisionFormat) -> f64 {
        match self.subnormals {
            SubnormalMode::Preserve => quantize(x, fmt),
            mode => quantize_with(x, fmt, mode),
        }
    }

    #[inline]
    fn round_acc(&self, x: f64) -> f64 {
        match self.accumulator {
            Accumulator::Native => self.round_to(x, self.precision),
            Accumulator::Float32 => self.round_to(x, PrecisionFormat::Float32Ref),
            Accumulator::Wide => x,
        }
    }

    #[inline]
    fn round_out(&self, x: f64) -> f64 {
        self.round_to(x, self.precision)
    }
}

/// A schedule bound to a reduction length, with any permutation precomputed.
#[derive(Debug, Clone)]
pub struct ReductionPlan {
    schedule: ReductionSchedule,
    len: usize,
    order: Option<Vec<usize>>,
}

impl ReductionPlan {
    pub fn new(schedule: ReductionSchedule, len: usize) -> Result<Self> {
        schedule.validate()?;
        if len == 0 {
            return Err(Error::Empty("reduction length"));
        }
        let order = match schedule {
            ReductionSchedule::Permuted { seed } => Some(permutation(seed, len)),
            _ => None,
        };
        Ok(Self { schedule, len, order })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Scheduled dot product of two equally long, already quantized vectors.
    pub fn dot(&self, a: &[f64], b: &[f64], arith: &Arithmetic) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        if a.len() != self.len {
            return Err(Error::DimensionMismatch {
                what: "reduction length",
                expected: self.len,
                actual: a.len(),
            });
        }
        Ok(self.dot_unchecked(a, b, arith))
    }

    fn dot_unchecked(&self, a: &[f64], b: &[f64], arith: &Arithmetic) -> f64 {
        let [sum] = self.reduce_lanes([a], [b], arith);
        sum
    }

    /// `L` independent scheduled dot products `a[l] . b[l]`, interleaved so the
    /// running sums of different lanes overlap in the pipeline. Each lane follows
    /// the schedule exactly; lanes never mix.
    fn reduce_lanes<const L: usize>(&self, a: [&[f64]; L], b: [&[f64]; L], arith: &Arithmetic) -> [f64; L] {
        let sums = match (arith.accumulator, arith.subnormals) {
            (Accumulator::Wide, _) => self.reduce_with(a, b, |x| x),
            (Accumulator::Native, SubnormalMode::Preserve) => {
                let p = arith.precision;
                self.reduce_with(a, b, move |x| quantize(x, p))
            }
            _ => self.reduce_with(a, b, |x| arith.round_acc(x)),
        };
        sums.map(|s| arith.round_out(s))
    }

    /// Binary32 lanes. Operands of every emulated format multiply exactly (or
    /// overflow identically) in binary32, and binary32 addition is the correctly
    /// rounded sum, so this matches the `f64`-then-round path bit for bit.
    fn reduce_lanes_f32<const L: usize>(&self, a: [&[f32]; L], b: [&[f32]; L], arith: &Arithmetic) -> [f64; L] {
        self.reduce_with(a, b, |x| x).map(|s| arith.round_out(s as f64))
    }

    #[inline(always)]
    fn reduce_with<T, const L: usize, R>(&self, a: [&[T]; L], b: [&[T]; L], round: R) -> [T; L]
    where
        T: Copy + std::ops::Add<Output = T> + std::ops::Mul<Output = T>,
        R: Fn(T) -> T + Copy,
    {
        let n = self.len;
        let a = a.map(|s| &s[..n]);
        let b = b.map(|s| &s[..n]);
        let prod = |i: usize| -> [T; L] { std::array::from_fn(|l| round(a[l][i] * b[l][i])) };
        let add = |acc: &mut [T; L], p: [T; L]| {
            for l in 0..L {
                acc[l] = round(acc[l] + p[l]);
            }
        };
        let fold = |acc: &mut [T; L], range: std::ops::Range<usize>| {
            for i in range {
                for l in 0..L {
                    acc[l] = round(acc[l] + round(a[l][i] * b[l][i]));
                }
            }
        };
        match self.schedule {
            ReductionSchedule::Sequential => {
                let mut acc = prod(0);
                fold(&mut acc, 1..n);
                acc
            }
            ReductionSchedule::Permuted { .. } => {
                let order = self.order.as_deref().expect("permutation precomputed");
                let mut acc = prod(order[0]);
                for &i in &order[1..] {
                    add(&mut acc, prod(i));
                }
                acc
            }
            ReductionSchedule::Blocked { block_size } => {
                let mut total: Option<[T; L]> = None;
                let mut start = 0;
                while start < n {
                    let end = (start + block_size).min(n);
                    let mut block = prod(start);
                    fold(&mut block, start + 1..end);
                    match total.as_mut() {
                        None => total = Some(block),
                        Some(t) => add(t, block),
                    }
                    start = end;
                }
                total.expect("non-empty reduction")
            }
            ReductionSchedule::PairwiseTree => pairwise(0, n, &prod, &add),
        }
    }
}

/// A plan plus weights laid out one logit per row, ready for repeated products.
struct Kernel<'a> {
    plan: &'a ReductionPlan,
    arith: Arithmetic,
    wt: Matrix,
    wt32: Option<Vec<f32>>,
}

impl<'a> Kernel<'a> {
    const LANES: usize = 8;

    fn new(plan: &'a ReductionPlan, w: &Matrix, arith: Arithmetic) -> Self {
        let wt = w.transpose();
        let wt32 = Self::binary32_path(&arith).then(|| wt.as_slice().iter().map(|&v| v as f32).collect());
        Self { plan, arith, wt, wt32 }
    }

    fn binary32_path(arith: &Arithmetic) -> bool {
        let acc32 = arith.accumulator == Accumulator::Float32
            || (arith.accumulator == Accumulator::Native && arith.precision == PrecisionFormat::Float32Ref);
        acc32 && arith.subnormals == SubnormalMode::Preserve
    }

    /// Appends `x . w_j` for every logit `j`, eight logits at a time.
    fn dot_rows(&self, x: &[f64], out: &mut Vec<f64>) {
        const L: usize = Kernel::LANES;
        let n = self.wt.rows();
        let k = self.wt.cols();
        let mut j = 0;
        if let Some(wt32) = &self.wt32 {
            let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
            let row = |j: usize| &wt32[j * k..(j + 1) * k];
            while j + L <= n {
                let cols: [&[f32]; L] = std::array::from_fn(|l| row(j + l));
                out.extend(self.plan.reduce_lanes_f32([x32.as_slice(); L], cols, &self.arith));
                j += L;
            }
            for j in j..n {
                let [v] = self.plan.reduce_lanes_f32([x32.as_slice()], [row(j)], &self.arith);
                out.push(v);
            }
        } else {
            while j + L <= n {
                let cols: [&[f64]; L] = std::array::from_fn(|l| self.wt.row(j + l));
                out.extend(self.plan.reduce_lanes([x; L], cols, &self.arith));
                j += L;
            }
            for j in j..n {
                out.push(self.plan.dot_unchecked(x, self.wt.row(j), &self.arith));
            }
        }
    }
}

fn pairwise<T: Copy, const L: usize>(
    lo: usize,
    hi: usize,
    prod: &impl Fn(usize) -> [T; L],
    add: &impl Fn(&mut [T; L], [T; L]),
) -> [T; L] {
    if hi - lo == 1 {
        return prod(lo);
    }
    let mid = lo + (hi - lo) / 2;
    let mut left = pairwise(lo, mid, prod, add);
    let right = pairwise(mid, hi, prod, add);
    add(&mut left, right);
    left
}

/// One-shot scheduled dot product. `a` and `b` must already be quantized to `arith.precision`.
pub fn dot_scheduled(a: &[f64], b: &[f64], schedule: ReductionSchedule, arith: &Arithmetic) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    ReductionPlan::new(schedule, a.len())?.dot(a, b, arith)
}

/// Dense row-major matrix of `f64` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "matrix data",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Matrix with standard-normal entries rounded to `fmt`.
    pub fn standard_normal(rows: usize, cols: usize, fmt: PrecisionFormat, rng: &mut impl rand::Rng) -> Self {
        Self {
            rows,
            cols,
            data: standard_normal_vec(rows * cols, fmt, rng),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }
}

/// `len` standard-normal draws rounded to `fmt`.
pub fn standard_normal_vec(len: usize, fmt: PrecisionFormat, rng: &mut impl rand::Rng) -> Vec<f64> {
    (0..len)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            quantize(z, fmt)
        })
        .collect()
}

/// Shape and arithmetic of one emulated matmul.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatmulSpec {
    /// Reduction length.
    pub d_in: usize,
    /// Number of output logits.
    pub d_out: usize,
    pub batch: usize,
    pub precision: PrecisionFormat,
    pub accumulator: Accumulator,
    pub subnormals: SubnormalMode,
}

impl MatmulSpec {
    pub fn new(d_in: usize, d_out: usize, batch: usize, precision: PrecisionFormat, accumulator: Accumulator) -> Result<Self> {
        let spec = Self {
            d_in,
            d_out,
            batch,
            precision,
            accumulator,
            subnormals: SubnormalMode::Preserve,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("d_in", self.d_in), ("d_out", self.d_out), ("batch", self.batch)] {
            if v == 0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be at least 1".into(),
                });
            }
        }
        Ok(())
    }

    pub fn arithmetic(&self) -> Arithmetic {
        Arithmetic {
            precision: self.precision,
            accumulator: self.accumulator,
            subnormals: self.subnormals,
        }
    }

    fn check_weights(&self, w: &Matrix) -> Result<()> {
        self.validate()?;
        if w.rows() != self.d_in {
            return Err(Error::DimensionMismatch {
                what: "weight rows (d_in)",
                expected: self.d_in,
                actual: w.rows(),
            });
        }
        if w.cols() != self.d_out {
            return Err(Error::DimensionMismatch {
                what: "weight columns (d_out)",
                expected: self.d_out,
                actual: w.cols(),
            });
        }
        Ok(())
    }
}

/// `x · W` for a single input row; output `j` is the scheduled dot of `x` with column `j`.
pub fn matmul_single(x: &[f64], w: &Matrix, spec: &MatmulSpec, schedule: ReductionSchedule) -> Result<Vec<f64>> {
    spec.check_weights(w)?;
    if x.len() != spec.d_in {
        return Err(Error::DimensionMismatch {
            what: "input length (d_in)",
            expected: spec.d_in,
            actual: x.len(),
        });
    }
    let plan = ReductionPlan::new(schedule, spec.d_in)?;
    let kernel = Kernel::new(&plan, w, spec.arithmetic());
    let mut out = Vec::with_capacity(spec.d_out);
    kernel.dot_rows(x, &mut out);
    Ok(out)
}

/// Full `X · W` for a `batch × d_in` input.
pub fn matmul_batched(xs: &Matrix, w: &Matrix, spec: &MatmulSpec, schedule: ReductionSchedule) -> Result<Matrix> {
    spec.check_weights(w)?;
    if xs.cols() != spec.d_in {
        return Err(Error::DimensionMismatch {
            what: "batch columns (d_in)",
            expected: spec.d_in,
            actual: xs.cols(),
        });
    }
    if xs.rows() != spec.batch {
        return Err(Error::DimensionMismatch {
            what: "batch rows",
            expected: spec.batch,
            actual: xs.rows(),
        });
    }
    let plan = ReductionPlan::new(schedule, spec.d_in)?;
    let kernel = Kernel::new(&plan, w, spec.arithmetic());
    let mut data = Vec::with_capacity(spec.batch * spec.d_out);
    for r in 0..spec.batch {
        kernel.dot_rows(xs.row(r), &mut data);
    }
    Matrix::from_row_major(spec.batch, spec.d_out, data)
}

/// Embeds `x` as row 0 of a batch padded with seeded standard-normal filler rows,
/// multiplies the whole batch, and returns row 0 of the product.
pub fn matmul_batched_row0(
    x: &[f64],
    w: &Matrix,
    spec: &MatmulSpec,
    schedule: ReductionSchedule,
    filler_seed: u64,
) -> Result<Vec<f64>> {
    if x.len() != spec.d_in {
        return Err(Error::DimensionMismatch {
            what: "input length (d_in)",
            expected: spec.d_in,
            actual: x.len(),
        });
    }
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(filler_seed);
    let mut data = Vec::with_capacity(spec.batch * spec.d_in);
    data.extend_from_slice(x);
    data.extend(standard_normal_vec((spec.batch - 1) * spec.d_in, spec.precision, &mut rng));
    let xs = Matrix::from_row_major(spec.batch, spec.d_in, data)?;
    let out = matmul_batched(&xs, w, spec, schedule)?;
    Ok(out.row(0).to_vec())
}
