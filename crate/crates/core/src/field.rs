//! Prime fields `F_p` and dense linear algebra over them.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

pub fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Inverse modulo a prime via Fermat. Returns `None` for zero.
pub fn inv_mod(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        None
    } else {
        Some(pow_mod(a, p - 2, p))
    }
}

/// Reduces a signed integer into `[0, p)`.
pub fn reduce(x: i64, p: u64) -> u64 {
    (x as i128).rem_euclid(p as i128) as u64
}

/// An element of `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FpElem {
    value: u64,
    p: u64,
}

impl FpElem {
    pub fn new(value: i64, p: u64) -> FpElem {
        FpElem {
            value: reduce(value, p),
            p,
        }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn inv(&self) -> Option<FpElem> {
        inv_mod(self.value, self.p).map(|value| FpElem { value, p: self.p })
    }

    fn check(&self, other: &FpElem) {
        assert_eq!(self.p, other.p, "F_p operands with different moduli");
    }
}

impl Add for FpElem {
    type Output = FpElem;
    fn add(self, rhs: FpElem) -> FpElem {
        self.check(&rhs);
        FpElem {
            value: (self.value + rhs.value) % self.p,
            p: self.p,
        }
    }
}

impl Sub for FpElem {
    type Output = FpElem;
    fn sub(self, rhs: FpElem) -> FpElem {
        self.check(&rhs);
        FpElem {
            value: (self.value + self.p - rhs.value) % self.p,
            p: self.p,
        }
    }
}

impl Mul for FpElem {
    type Output = FpElem;
    fn mul(self, rhs: FpElem) -> FpElem {
        self.check(&rhs);
        FpElem {
            value: mul_mod(self.value, rhs.value, self.p),
            p: self.p,
        }
    }
}

impl Neg for FpElem {
    type Output = FpElem;
    fn neg(self) -> FpElem {
        FpElem {
            value: (self.p - self.value) % self.p,
            p: self.p,
        }
    }
}

impl fmt::Display for FpElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Dense row-major matrix over `F_p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FpMatrix {
    p: u64,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl FpMatrix {
    pub fn zeros(p: u64, rows: usize, cols: usize) -> FpMatrix {
        FpMatrix {
            p,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(p: u64, n: usize) -> FpMatrix {
        let mut m = FpMatrix::zeros(p, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Builds a matrix from signed rows, reducing every entry mod `p`.
    /// Panics if the rows are ragged.
    pub fn from_rows(p: u64, rows: &[Vec<i64>]) -> FpMatrix {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = FpMatrix::zeros(p, rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged matrix rows");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, reduce(v, p));
            }
        }
        m
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v % self.p;
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul_vec(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(0u64, |acc, (&a, &b)| (acc + mul_mod(a, b, self.p)) % self.p)
            })
            .collect()
    }

    /// Horizontal concatenation `[self other]`.
    pub fn hcat(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.p, other.p);
        let mut m = FpMatrix::zeros(self.p, self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(i, j, self.get(i, j));
            }
            for j in 0..other.cols {
                m.set(i, self.cols + j, other.get(i, j));
            }
        }
        m
    }

    pub fn transpose(&self) -> FpMatrix {
        let mut m = FpMatrix::zeros(self.p, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(j, i, self.get(i, j));
            }
        }
        m
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let p = self.p;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(piv) = (r..self.rows).find(|&i| self.get(i, c) != 0) else {
                continue;
            };
            if piv != r {
                for j in 0..self.cols {
                    self.data.swap(piv * self.cols + j, r * self.cols + j);
                }
            }
            let inv = inv_mod(self.get(r, c), p).expect("pivot is nonzero");
            for j in 0..self.cols {
                let v = mul_mod(self.get(r, j), inv, p);
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                let f = self.get(i, c);
                if i == r || f == 0 {
                    continue;
                }
                for j in 0..self.cols {
                    let v = (self.get(i, j) + p - mul_mod(f, self.get(r, j), p)) % p;
                    self.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Determinant of a square matrix.
    pub fn det(&self) -> u64 {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let p = self.p;
        let mut m = self.clone();
        let n = self.rows;
        let mut det = 1u64;
        for c in 0..n {
            let Some(piv) = (c..n).find(|&i| m.get(i, c) != 0) else {
                return 0;
            };
            if piv != c {
                for j in 0..n {
                    m.data.swap(piv * n + j, c * n + j);
                }
                det = (p - det) % p;
            }
            let pv = m.get(c, c);
            det = mul_mod(det, pv, p);
            let inv = inv_mod(pv, p).expect("pivot is nonzero");
            for i in (c + 1)..n {
                let f = mul_mod(m.get(i, c), inv, p);
                if f == 0 {
                    continue;
                }
                for j in c..n {
                    let v = (m.get(i, j) + p - mul_mod(f, m.get(c, j), p)) % p;
                    m.set(i, j, v);
                }
            }
        }
        det
    }

    pub fn is_invertible(&self) -> bool {
        self.rows == self.cols && self.det() != 0
    }

    /// One solution `x` of `self · x = b`, or `None` if the system is
    /// inconsistent. Free variables are set to zero.
    pub fn solve(&self, b: &[u64]) -> Option<Vec<u64>> {
        assert_eq!(b.len(), self.rows, "right-hand side has the wrong length");
        let mut aug = FpMatrix::zeros(self.p, self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, self.cols, b[i]);
        }
        let pivots = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![0u64; self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = aug.get(r, self.cols);
        }
        Some(x)
    }

    /// Basis of the right null space, one vector per row of the result.
    pub fn null_space(&self) -> FpMatrix {
        let p = self.p;
        let mut m = self.clone();
        let pivots = m.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = FpMatrix::zeros(p, free.len(), self.cols);
        for (k, &f) in free.iter().enumerate() {
            basis.set(k, f, 1);
            for (r, &c) in pivots.iter().enumerate() {
                basis.set(k, c, (p - m.get(r, f)) % p);
            }
        }
        basis
    }
}
