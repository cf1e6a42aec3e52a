//! Arithmetic and dense linear algebra over GF(2^8).
//!
//! Elements use the reduction polynomial x^8 + x^4 + x^3 + x + 1 (0x11B)
//! with generator 0x03. Multiplication goes through log/antilog tables that
//! are computed at compile time.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Sub};

use crate::error::{Error, Result};

/// Field order.
pub const ORDER: u32 = 256;

const POLY: u16 = 0x11B;
const GENERATOR: u8 = 0x03;

static EXP: [u8; 512] = build_exp();
static LOG: [u8; 256] = build_log();

const fn mul_slow(a: u8, b: u8) -> u8 {
    let mut acc = 0u8;
    let mut x = a as u16;
    let mut y = b;
    while y != 0 {
        if y & 1 != 0 {
            acc ^= x as u8;
        }
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= POLY;
        }
        y >>= 1;
    }
    acc
}

const fn build_exp() -> [u8; 512] {
    let mut t = [0u8; 512];
    let mut v = 1u8;
    let mut i = 0;
    while i < 255 {
        t[i] = v;
        t[i + 255] = v;
        v = mul_slow(v, GENERATOR);
        i += 1;
    }
    t
}

const fn build_log() -> [u8; 256] {
    let mut t = [0u8; 256];
    let mut v = 1u8;
    let mut i = 0;
    while i < 255 {
        t[v as usize] = i as u8;
        v = mul_slow(v, GENERATOR);
        i += 1;
    }
    t
}

/// An element of GF(256).
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(transparent)]
pub struct FieldElement(pub u8);

impl FieldElement {
    pub const ZERO: Self = Self(0);
    pub const ONE: Self = Self(1);

    #[inline]
    pub const fn new(v: u8) -> Self {
        Self(v)
    }

    #[inline]
    pub const fn value(self) -> u8 {
        self.0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(self) -> Option<Self> {
        if self.0 == 0 {
            None
        } else {
            Some(Self(EXP[255 - LOG[self.0 as usize] as usize]))
        }
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:02X}", self.0)
    }
}

impl From<u8> for FieldElement {
    fn from(v: u8) -> Self {
        Self(v)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Add for FieldElement {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self(self.0 ^ rhs.0)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Sub for FieldElement {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 ^ rhs.0)
    }
}

impl AddAssign for FieldElement {
    // addition in characteristic two is XOR
    #[allow(clippy::suspicious_op_assign_impl)]
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.0 ^= rhs.0;
    }
}

impl Mul for FieldElement {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        field_mul(self, rhs)
    }
}

impl MulAssign for FieldElement {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = field_mul(*self, rhs);
    }
}

/// Product of two field elements.
#[inline]
pub fn field_mul(a: FieldElement, b: FieldElement) -> FieldElement {
    if a.0 == 0 || b.0 == 0 {
        return FieldElement::ZERO;
    }
    FieldElement(EXP[LOG[a.0 as usize] as usize + LOG[b.0 as usize] as usize])
}

/// `dst += coef * src`, bytewise.
pub fn mul_add_row(dst: &mut [u8], src: &[u8], coef: FieldElement) {
    debug_assert_eq!(dst.len(), src.len());
    match coef.0 {
        0 => {}
        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= *s),
        c => {
            let lc = LOG[c as usize] as usize;
            for (d, &s) in dst.iter_mut().zip(src) {
                if s != 0 {
                    *d ^= EXP[LOG[s as usize] as usize + lc];
                }
            }
        }
    }
}

/// `row *= coef`, bytewise.
pub fn scale_row(row: &mut [u8], coef: FieldElement) {
    match coef.0 {
        1 => {}
        0 => row.fill(0),
        c => {
            let lc = LOG[c as usize] as usize;
            for b in row.iter_mut() {
                if *b != 0 {
                    *b = EXP[LOG[*b as usize] as usize + lc];
                }
            }
        }
    }
}

/// Dense row-major matrix over GF(256).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl FieldMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, FieldElement::ONE);
        }
        m
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "matrix row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        FieldElement(self.data[r * self.cols + c])
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        self.data[r * self.cols + c] = v.0;
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Rank via elimination on a scratch copy.
    pub fn rank(&self) -> usize {
        let mut work = self.clone();
        work.eliminate(&mut [])
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let c = self.cols;
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(hi * c);
        head[lo * c..(lo + 1) * c].swap_with_slice(&mut tail[..c]);
    }

    /// Gauss-Jordan elimination to reduced row echelon form, applying the
    /// same row operations to `rhs` (which may be empty). Returns the rank;
    /// pivot rows end up in positions `0..rank`.
    fn eliminate(&mut self, rhs: &mut [Vec<u8>]) -> usize {
        let cols = self.cols;
        let mut rank = 0;
        for col in 0..cols {
            if rank == self.rows {
                break;
            }
            // first nonzero entry at or below the current pivot row
            let Some(p) = (rank..self.rows).find(|&r| self.data[r * cols + col] != 0) else {
                continue;
            };
            self.swap_rows(rank, p);
            if !rhs.is_empty() {
                rhs.swap(rank, p);
            }

            let inv = FieldElement(self.data[rank * cols + col])
                .inv()
                .expect("pivot is nonzero");
            scale_row(&mut self.data[rank * cols..(rank + 1) * cols], inv);
            if !rhs.is_empty() {
                scale_row(&mut rhs[rank], inv);
            }

            let pivot_row = self.data[rank * cols..(rank + 1) * cols].to_vec();
            for r in 0..self.rows {
                if r == rank {
                    continue;
                }
                let f = FieldElement(self.data[r * cols + col]);
                if f.is_zero() {
                    continue;
                }
                mul_add_row(&mut self.data[r * cols..(r + 1) * cols], &pivot_row, f);
                if !rhs.is_empty() {
                    let (src, dst) = if r < rank {
                        let (a, b) = rhs.split_at_mut(rank);
                        (&b[0], &mut a[r])
                    } else {
                        let (a, b) = rhs.split_at_mut(r);
                        (&a[rank], &mut b[0])
                    };
                    mul_add_row(dst, src, f);
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Result of [`rank_and_solve`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveOutcome {
    pub rank: usize,
    /// One payload row per unknown; present iff `rank == cols`.
    pub solution: Option<Vec<Vec<u8>>>,
}

/// Computes the rank of `m` and, when it has full column rank, the unique
/// solution `x` of `m · x = rhs` where each unknown is a payload row.
pub fn rank_and_solve(m: &FieldMatrix, rhs: &[Vec<u8>]) -> Result<SolveOutcome> {
    if rhs.len() != m.rows {
        return Err(Error::DimensionMismatch(format!(
            "{} right-hand rows for a {}-row matrix",
            rhs.len(),
            m.rows
        )));
    }
    if let Some(first) = rhs.first() {
        if let Some(bad) = rhs.iter().position(|r| r.len() != first.len()) {
            return Err(Error::DimensionMismatch(format!(
                "right-hand row {bad} has length {}, expected {}",
                rhs[bad].len(),
                first.len()
            )));
        }
    }

    let mut work = m.clone();
    let mut b: Vec<Vec<u8>> = rhs.to_vec();
    let rank = work.eliminate(&mut b);
    let solution = (rank == m.cols).then(|| {
        b.truncate(m.cols);
        b
    });
    Ok(SolveOutcome { rank, solution })
}
