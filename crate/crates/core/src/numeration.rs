//! Fibonacci sequences, the splitting matrix of the pentagrid and the
//! standard Fibonacci (Zeckendorf) representation of positive integers.
//!
//! Everything here is exact integer arithmetic. Overflow of the 128-bit
//! accumulators is reported as an error rather than wrapped.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumerationError {
    #[error("index {index} is below the first index {min} of the {conv:?} convention")]
    IndexBelowRange {
        index: i64,
        min: i64,
        conv: FibConvention,
    },
    #[error("integer overflow")]
    Overflow,
    #[error("row {row} out of range for a {dim}x{dim} matrix")]
    RowOutOfRange { row: usize, dim: usize },
    #[error("matrix is not square")]
    NotSquare,
    #[error("zero has no standard Fibonacci representation")]
    Zero,
    #[error("malformed Fibonacci word {0:?}: {1}")]
    MalformedWord(String, &'static str),
}

pub type Result<T> = std::result::Result<T, NumerationError>;

/// Indexing conventions for the Fibonacci numbers.
///
/// All three enumerate 1, 1, 2, 3, 5, 8, ... up to an index shift:
/// `F12` has f₁=1, f₂=2; `F01` has f₀=f₁=1; `Classical` has f₁=f₂=1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FibConvention {
    F12,
    F01,
    Classical,
}

impl FibConvention {
    pub fn min_index(self) -> i64 {
        match self {
            FibConvention::F12 | FibConvention::Classical => 1,
            FibConvention::F01 => 0,
        }
    }

    /// Offset to add to an index of this convention to get the classical index.
    pub fn classical_offset(self) -> i64 {
        match self {
            FibConvention::F12 | FibConvention::F01 => 1,
            FibConvention::Classical => 0,
        }
    }

    /// Re-expresses index `n` of `self` as the index of the same value in `to`.
    pub fn convert_index(self, n: i64, to: FibConvention) -> i64 {
        n + self.classical_offset() - to.classical_offset()
    }
}

fn classical_fib(n: u32) -> Result<u128> {
    // F_1 = F_2 = 1
    let (mut a, mut b) = (0u128, 1u128);
    for _ in 0..n {
        let next = a.checked_add(b).ok_or(NumerationError::Overflow)?;
        a = b;
        b = next;
    }
    Ok(a)
}

pub fn fib(n: i64, conv: FibConvention) -> Result<u128> {
    if n < conv.min_index() {
        return Err(NumerationError::IndexBelowRange {
            index: n,
            min: conv.min_index(),
            conv,
        });
    }
    let classical = n + conv.classical_offset();
    let classical = u32::try_from(classical).map_err(|_| NumerationError::Overflow)?;
    classical_fib(classical)
}

/// Square matrix of a splitting: entry (i, j) counts copies of region j
/// entering the splitting of region i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplittingMatrix {
    entries: Vec<Vec<u128>>,
    region_names: Vec<String>,
}

impl SplittingMatrix {
    pub fn new(entries: Vec<Vec<u128>>, region_names: Vec<String>) -> Result<Self> {
        let dim = entries.len();
        if entries.iter().any(|row| row.len() != dim) || region_names.len() != dim {
            return Err(NumerationError::NotSquare);
        }
        Ok(Self {
            entries,
            region_names,
        })
    }

    /// The pentagrid basis {quarter, strip}: the quarter splits into two
    /// quarters and a strip, the strip into one quarter and one strip.
    /// Row 1 is the quarter (3-node), row 2 the strip (2-node).
    pub fn pentagrid() -> Self {
        Self {
            entries: vec![vec![2, 1], vec![1, 1]],
            region_names: vec!["quarter".into(), "strip".into()],
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<u128>] {
        &self.entries
    }

    pub fn region_names(&self) -> &[String] {
        &self.region_names
    }

    fn identity(dim: usize) -> Vec<Vec<u128>> {
        (0..dim)
            .map(|i| (0..dim).map(|j| u128::from(i == j)).collect())
            .collect()
    }

    fn mul(a: &[Vec<u128>], b: &[Vec<u128>]) -> Result<Vec<Vec<u128>>> {
        let n = a.len();
        let mut out = vec![vec![0u128; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0u128;
                for (k, bk) in b.iter().enumerate() {
                    let term = a[i][k]
                        .checked_mul(bk[j])
                        .ok_or(NumerationError::Overflow)?;
                    acc = acc.checked_add(term).ok_or(NumerationError::Overflow)?;
                }
                out[i][j] = acc;
            }
        }
        Ok(out)
    }

    /// Exact `M^n`; `M^0` is the identity.
    pub fn power(&self, mut n: u32) -> Result<Vec<Vec<u128>>> {
        let mut result = Self::identity(self.dim());
        let mut base = self.entries.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = Self::mul(&result, &base)?;
            }
            n >>= 1;
            if n > 0 {
                base = Self::mul(&base, &base)?;
            }
        }
        Ok(result)
    }

    /// Row of `M^n`, with `row` counted from 1.
    pub fn power_row(&self, n: u32, row: usize) -> Result<Vec<u128>> {
        if row == 0 || row > self.dim() {
            return Err(NumerationError::RowOutOfRange {
                row,
                dim: self.dim(),
            });
        }
        Ok(self.power(n)?.swap_remove(row - 1))
    }
}

/// Sum of the coefficients of row `row` (1-based) of `M^n`.
pub fn matrix_power_row_sum(m: &SplittingMatrix, n: u32, row: usize) -> Result<u128> {
    m.power_row(n, row)?
        .into_iter()
        .try_fold(0u128, |acc, x| acc.checked_add(x))
        .ok_or(NumerationError::Overflow)
}

/// Number of nodes on level `n` of a Fibonacci tree whose root has the
/// given status (2 or 3).
pub fn level_count(n: u32, root_status: u8) -> Result<u128> {
    match root_status {
        3 => fib(2 * i64::from(n) + 1, FibConvention::F12),
        2 => matrix_power_row_sum(&SplittingMatrix::pentagrid(), n, 2),
        _ => panic!("root status must be 2 or 3, got {root_status}"),
    }
}

/// Integer polynomial, coefficients stored lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<i128>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<i128>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0);
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c as f64)
    }

    /// Largest real root, located by bisection above the Cauchy bound.
    /// Returns `None` if the polynomial has no real root.
    pub fn dominant_real_root(&self) -> Option<f64> {
        let lead = *self.coeffs.last()? as f64;
        if self.degree() == 0 || lead == 0.0 {
            return None;
        }
        let bound = 1.0
            + self
                .coeffs
                .iter()
                .rev()
                .skip(1)
                .map(|&c| (c as f64 / lead).abs())
                .fold(0.0, f64::max);
        // scan down from the bound for the first sign change
        let steps = 20_000;
        let h = 2.0 * bound / steps as f64;
        let mut hi = bound;
        let mut f_hi = self.eval(hi);
        for i in 1..=steps {
            let lo = bound - i as f64 * h;
            let f_lo = self.eval(lo);
            if f_lo == 0.0 {
                return Some(lo);
            }
            if f_lo.signum() != f_hi.signum() {
                let (mut a, mut b) = (lo, hi);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if self.eval(mid).signum() == self.eval(a).signum() {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                return Some(0.5 * (a + b));
            }
            hi = lo;
            f_hi = f_lo;
        }
        None
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (deg, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 && !(first && deg == 0) {
                continue;
            }
            let sign = if c < 0 { "-" } else { "+" };
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let a = c.unsigned_abs();
            match deg {
                0 => write!(f, "{a}")?,
                _ => {
                    if a != 1 {
                        write!(f, "{a}")?;
                    }
                    write!(f, "X")?;
                    if deg > 1 {
                        write!(f, "^{deg}")?;
                    }
                }
            }
            first = false;
        }
        Ok(())
    }
}

/// Characteristic polynomial det(X·I − M) by the Faddeev–LeVerrier
/// recursion in exact integers, with the largest power of X dividing it
/// removed.
pub fn char_polynomial(m: &SplittingMatrix) -> Result<Polynomial> {
    let n = m.dim();
    let a: Vec<Vec<i128>> = m
        .entries()
        .iter()
        .map(|row| {
            row.iter()
                .map(|&x| i128::try_from(x).map_err(|_| NumerationError::Overflow))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let matmul = |x: &[Vec<i128>], y: &[Vec<i128>]| -> Result<Vec<Vec<i128>>> {
        let mut out = vec![vec![0i128; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0i128;
                for k in 0..n {
                    let t = x[i][k]
                        .checked_mul(y[k][j])
                        .ok_or(NumerationError::Overflow)?;
                    acc = acc.checked_add(t).ok_or(NumerationError::Overflow)?;
                }
                out[i][j] = acc;
            }
        }
        Ok(out)
    };
    // c[n] = 1; M_k = A M_{k-1} + c_{n-k+1} I; c_{n-k} = -tr(A M_k)/k
    let mut coeffs = vec![0i128; n + 1];
    coeffs[n] = 1;
    let mut mk: Vec<Vec<i128>> = vec![vec![0; n]; n];
    for k in 1..=n {
        let mut next = matmul(&a, &mk)?;
        for (i, row) in next.iter_mut().enumerate() {
            row[i] = row[i]
                .checked_add(coeffs[n - k + 1])
                .ok_or(NumerationError::Overflow)?;
        }
        mk = next;
        let amk = matmul(&a, &mk)?;
        let trace: i128 = (0..n).map(|i| amk[i][i]).sum();
        debug_assert_eq!(trace % k as i128, 0);
        coeffs[n - k] = -trace / k as i128;
    }
    let leading_zeros = coeffs.iter().take_while(|&&c| c == 0).count();
    Ok(Polynomial::new(coeffs.split_off(leading_zeros.min(n))))
}

/// Binary word over the basis 1, 2, 3, 5, 8, ... (F12), most significant
/// digit first, with no leading zero and no factor `11`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ZeckendorfWord {
    bits: Vec<bool>,
}

impl ZeckendorfWord {
    pub fn from_bits(bits: Vec<bool>) -> Result<Self> {
        let text: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        if bits.first() != Some(&true) {
            return Err(NumerationError::MalformedWord(text, "must start with 1"));
        }
        if bits.windows(2).any(|w| w[0] && w[1]) {
            return Err(NumerationError::MalformedWord(
                text,
                "contains the factor 11",
            ));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

impl Ord for ZeckendorfWord {
    /// Length first, then lexicographic; agrees with numeric order.
    fn cmp(&self, other: &Self) -> Ordering {
        self.bits
            .len()
            .cmp(&other.bits.len())
            .then_with(|| self.bits.cmp(&other.bits))
    }
}

impl PartialOrd for ZeckendorfWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ZeckendorfWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for ZeckendorfWord {
    type Err = NumerationError;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(NumerationError::MalformedWord(
                    s.to_string(),
                    "digits must be 0 or 1",
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(bits)
    }
}

/// Greedy expansion of `n` over 1, 2, 3, 5, 8, ...
pub fn zeck_encode(n: u128) -> Result<ZeckendorfWord> {
    if n == 0 {
        return Err(NumerationError::Zero);
    }
    let mut basis = vec![1u128, 2];
    while let Some(&last) = basis.last() {
        if last > n {
            break;
        }
        let prev = basis[basis.len() - 2];
        match last.checked_add(prev) {
            Some(next) => basis.push(next),
            None => break,
        }
    }
    while basis.last().is_some_and(|&b| b > n) {
        basis.pop();
    }
    let mut rest = n;
    let bits = basis
        .iter()
        .rev()
        .map(|&b| {
            if b <= rest {
                rest -= b;
                true
            } else {
                false
            }
        })
        .collect();
    debug_assert_eq!(rest, 0);
    Ok(ZeckendorfWord { bits })
}

pub fn zeck_decode(w: &ZeckendorfWord) -> Result<u128> {
    let (mut lo, mut hi) = (1u128, 2u128);
    let mut total = 0u128;
    for &b in w.bits.iter().rev() {
        if b {
            total = total.checked_add(lo).ok_or(NumerationError::Overflow)?;
        }
        let next = lo.checked_add(hi);
        lo = hi;
        hi = next.unwrap_or(u128::MAX);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fib_examples() {
        assert_eq!(fib(1, FibConvention::F12).unwrap(), 1);
        assert_eq!(fib(7, FibConvention::F12).unwrap(), 21);
        assert_eq!(fib(3, FibConvention::F01).unwrap(), 3);
        assert_eq!(fib(7, FibConvention::Classical).unwrap(), 13);
        assert!(matches!(
            fib(0, FibConvention::F12),
            Err(NumerationError::IndexBelowRange { .. })
        ));
        assert_eq!(fib(400, FibConvention::F12), Err(NumerationError::Overflow));
    }

    #[test]
    fn conventions_are_index_shifts() {
        for n in 1..60 {
            for (from, to) in [
                (FibConvention::F12, FibConvention::Classical),
                (FibConvention::Classical, FibConvention::F01),
                (FibConvention::F01, FibConvention::F12),
            ] {
                let m = from.convert_index(n, to);
                if m >= to.min_index() {
                    assert_eq!(fib(n, from).unwrap(), fib(m, to).unwrap());
                }
            }
        }
    }

    #[test]
    fn level_count_examples() {
        assert_eq!(level_count(0, 3).unwrap(), 1);
        assert_eq!(level_count(3, 3).unwrap(), 21);
        assert_eq!(level_count(2, 2).unwrap(), 5);
        assert_eq!(level_count(0, 2).unwrap(), 1);
    }

    #[test]
    fn recurrence_from_polynomial() {
        for n in 0..=40 {
            let a = level_count(n, 3).unwrap() as i128;
            let b = level_count(n + 1, 3).unwrap() as i128;
            let c = level_count(n + 2, 3).unwrap() as i128;
            assert_eq!(c, 3 * b - a, "n = {n}");
        }
    }

    #[test]
    fn matrix_row_sums() {
        let m = SplittingMatrix::pentagrid();
        assert_eq!(matrix_power_row_sum(&m, 0, 1).unwrap(), 1);
        assert_eq!(matrix_power_row_sum(&m, 1, 1).unwrap(), 3);
        assert_eq!(matrix_power_row_sum(&m, 3, 1).unwrap(), 21);
        assert_eq!(
            matrix_power_row_sum(&m, 3, 3),
            Err(NumerationError::RowOutOfRange { row: 3, dim: 2 })
        );
        assert_eq!(
            matrix_power_row_sum(&m, 1, 0),
            Err(NumerationError::RowOutOfRange { row: 0, dim: 2 })
        );
    }

    #[test]
    fn characteristic_polynomials() {
        let p = char_polynomial(&SplittingMatrix::pentagrid()).unwrap();
        assert_eq!(p.coeffs(), &[1, -3, 1]);
        assert_eq!(p.to_string(), "X^2 - 3X + 1");
        let one = SplittingMatrix::new(vec![vec![1]], vec!["a".into()]).unwrap();
        assert_eq!(char_polynomial(&one).unwrap().coeffs(), &[-1, 1]);
        let id = SplittingMatrix::new(vec![vec![1, 0], vec![0, 1]], vec!["a".into(), "b".into()])
            .unwrap();
        assert_eq!(char_polynomial(&id).unwrap().coeffs(), &[1, -2, 1]);
        // nilpotent part stripped: [[1,0],[0,0]] -> X^2 - X -> X - 1
        let z = SplittingMatrix::new(vec![vec![1, 0], vec![0, 0]], vec!["a".into(), "b".into()])
            .unwrap();
        assert_eq!(char_polynomial(&z).unwrap().coeffs(), &[-1, 1]);
    }

    #[test]
    fn dominant_root_is_beta() {
        let p = char_polynomial(&SplittingMatrix::pentagrid()).unwrap();
        let beta = p.dominant_real_root().unwrap();
        assert!((beta - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!(beta < std::f64::consts::E);
    }

    #[test]
    fn zeckendorf_examples() {
        assert_eq!(zeck_encode(1).unwrap().to_string(), "1");
        assert_eq!(zeck_encode(5).unwrap().to_string(), "1000");
        assert_eq!(zeck_encode(7).unwrap().to_string(), "1010");
        assert_eq!(zeck_encode(0), Err(NumerationError::Zero));
        assert!("110".parse::<ZeckendorfWord>().is_err());
        assert!("010".parse::<ZeckendorfWord>().is_err());
        assert!("".parse::<ZeckendorfWord>().is_err());
        assert_eq!(zeck_decode(&"10101".parse().unwrap()).unwrap(), 12);
    }

    #[test]
    fn encode_is_monotone() {
        let mut prev = zeck_encode(1).unwrap();
        for n in 2..5000u128 {
            let w = zeck_encode(n).unwrap();
            assert!(prev < w);
            prev = w;
        }
    }

    proptest::proptest! {
        #[test]
        fn roundtrip(n in 1u128..u128::from(u64::MAX)) {
            let w = zeck_encode(n).unwrap();
            proptest::prop_assert!(!w.bits().windows(2).any(|p| p[0] && p[1]));
            proptest::prop_assert_eq!(zeck_decode(&w).unwrap(), n);
        }
    }
}
