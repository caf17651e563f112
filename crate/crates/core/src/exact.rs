//! Exact arithmetic: a scalar field abstraction, Laurent-free polynomials in
//! `q` with integer coefficients, and sparse linear algebra in reduced row
//! echelon form.
//!
//! All elimination is deterministic. Rows are inserted in input order, the
//! pivot of a row is its leftmost surviving column and the echelon form is
//! kept fully reduced, so the reduced row echelon form (which is unique) is
//! what every query reads from.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_traits::Num;
use thiserror::Error;

/// A field usable by the linear algebra in this module.
pub trait Field: Num + Clone + Neg<Output = Self> + fmt::Debug {}

impl<T: Num + Clone + Neg<Output = Self> + fmt::Debug> Field for T {}

/// Sparse vector: column index to nonzero value.
pub type SparseVec<T> = BTreeMap<usize, T>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinAlgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// `acc += c * v`, dropping entries that cancel.
pub fn axpy<T: Field>(acc: &mut SparseVec<T>, c: &T, v: &SparseVec<T>) {
    if c.is_zero() {
        return;
    }
    for (&k, x) in v {
        let add = c.clone() * x.clone();
        match acc.get_mut(&k) {
            Some(y) => {
                *y = y.clone() + add;
                if y.is_zero() {
                    acc.remove(&k);
                }
            }
            None => {
                acc.insert(k, add);
            }
        }
    }
}

/// Dot product of a sparse vector with a dense one.
pub fn dot_dense<T: Field>(v: &SparseVec<T>, w: &[T]) -> T {
    let mut s = T::zero();
    for (&k, x) in v {
        if !w[k].is_zero() {
            s = s + x.clone() * w[k].clone();
        }
    }
    s
}

/// Sparse matrix stored by rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<SparseVec<T>>,
}

impl<T: Field> SparseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols, data: vec![BTreeMap::new(); rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_dense(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged dense matrix");
            for (j, x) in r.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        m
    }

    /// Builds a matrix from sparse rows.
    pub fn from_rows(cols: usize, rows: Vec<SparseVec<T>>) -> Self {
        for r in &rows {
            if let Some((&k, _)) = r.iter().next_back() {
                assert!(k < cols, "column index out of range");
            }
        }
        let data: Vec<SparseVec<T>> = rows
            .into_iter()
            .map(|r| r.into_iter().filter(|(_, x)| !x.is_zero()).collect())
            .collect();
        SparseMatrix { rows: data.len(), cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &SparseVec<T> {
        &self.data[i]
    }

    pub fn rows(&self) -> &[SparseVec<T>] {
        &self.data
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        assert!(r < self.rows && c < self.cols, "index out of range");
        if v.is_zero() {
            self.data[r].remove(&c);
        } else {
            self.data[r].insert(c, v);
        }
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r].get(&c).cloned().unwrap_or_else(T::zero)
    }

    /// Adds `v` to entry `(r, c)`.
    pub fn add_to(&mut self, r: usize, c: usize, v: T) {
        let cur = self.get(r, c);
        self.set(r, c, cur + v);
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(|r| r.len()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|r| r.is_empty())
    }

    /// Nonzero entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        self.data
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |(&j, x)| (i, j, x)))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for (i, j, x) in self.entries() {
            t.data[j].insert(i, x.clone());
        }
        t
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>, LinAlgError> {
        if x.len() != self.cols {
            return Err(LinAlgError::DimensionMismatch { expected: self.cols, got: x.len() });
        }
        Ok(self.data.iter().map(|r| dot_dense(r, x)).collect())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, LinAlgError> {
        if self.cols != other.rows {
            return Err(LinAlgError::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for (i, r) in self.data.iter().enumerate() {
            let mut acc = BTreeMap::new();
            for (&k, x) in r {
                axpy(&mut acc, x, &other.data[k]);
            }
            out.data[i] = acc;
        }
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        let mut e = Echelon::new(self.cols);
        for r in &self.data {
            e.insert(r.clone());
        }
        e.rank()
    }

    /// Basis of the null space read off the reduced row echelon form: one
    /// vector per free column in increasing order.
    pub fn kernel_basis(&self) -> Vec<Vec<T>> {
        let mut e = Echelon::new(self.cols);
        for r in &self.data {
            e.insert(r.clone());
        }
        e.kernel_basis()
            .into_iter()
            .map(|v| densify(&v, self.cols))
            .collect()
    }

    /// One solution of `self * x = b`, with the free variables of the reduced
    /// echelon form set to zero, or `None` if the system is inconsistent.
    pub fn solve(&self, b: &[T]) -> Result<Option<Vec<T>>, LinAlgError> {
        if b.len() != self.rows {
            return Err(LinAlgError::DimensionMismatch { expected: self.rows, got: b.len() });
        }
        Ok(Solver::new(self).solve(b))
    }
}

pub fn densify<T: Field>(v: &SparseVec<T>, n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n];
    for (&k, x) in v {
        out[k] = x.clone();
    }
    out
}

pub fn sparsify<T: Field>(v: &[T]) -> SparseVec<T> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, x)| (i, x.clone()))
        .collect()
}

/// Incrementally built reduced row echelon form of a row space.
///
/// Optionally records, for every stored row, the combination of inserted
/// rows that produced it.
#[derive(Clone, Debug)]
pub struct Echelon<T> {
    cols: usize,
    /// pivot column -> reduced row (leading coefficient 1)
    rows: BTreeMap<usize, SparseVec<T>>,
    combos: Option<BTreeMap<usize, SparseVec<T>>>,
    inserted: usize,
}

impl<T: Field> Echelon<T> {
    pub fn new(cols: usize) -> Self {
        Echelon { cols, rows: BTreeMap::new(), combos: None, inserted: 0 }
    }

    /// Like [`Echelon::new`] but tracks row combinations, as needed by
    /// [`Solver`].
    pub fn tracking(cols: usize) -> Self {
        Echelon { cols, rows: BTreeMap::new(), combos: Some(BTreeMap::new()), inserted: 0 }
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.keys().copied()
    }

    pub fn reduced_rows(&self) -> impl Iterator<Item = (usize, &SparseVec<T>)> {
        self.rows.iter().map(|(&p, r)| (p, r))
    }

    /// Remainder of `v` after clearing all pivot columns.
    pub fn reduce(&self, v: &SparseVec<T>) -> SparseVec<T> {
        let mut r = v.clone();
        let hits: Vec<(usize, T)> = r
            .iter()
            .filter(|(k, _)| self.rows.contains_key(k))
            .map(|(&k, x)| (k, x.clone()))
            .collect();
        for (k, c) in hits {
            axpy(&mut r, &(-c), &self.rows[&k]);
        }
        r
    }

    pub fn contains(&self, v: &SparseVec<T>) -> bool {
        self.reduce(v).is_empty()
    }

    /// Inserts a row; returns whether it enlarged the row space.
    pub fn insert(&mut self, v: SparseVec<T>) -> bool {
        let idx = self.inserted;
        self.inserted += 1;
        let mut r = v;
        let mut combo: SparseVec<T> = BTreeMap::new();
        if self.combos.is_some() {
            combo.insert(idx, T::one());
        }
        let hits: Vec<(usize, T)> = r
            .iter()
            .filter(|(k, _)| self.rows.contains_key(k))
            .map(|(&k, x)| (k, x.clone()))
            .collect();
        for (k, c) in hits {
            let neg = -c;
            axpy(&mut r, &neg, &self.rows[&k]);
            if let Some(cs) = &self.combos {
                axpy(&mut combo, &neg, &cs[&k]);
            }
        }
        let Some((&lead, lc)) = r.iter().next() else {
            return false;
        };
        let inv = T::one() / lc.clone();
        for x in r.values_mut() {
            *x = x.clone() * inv.clone();
        }
        for x in combo.values_mut() {
            *x = x.clone() * inv.clone();
        }
        let keys: Vec<usize> = self.rows.iter().filter(|(_, row)| row.contains_key(&lead)).map(|(&k, _)| k).collect();
        for k in keys {
            let c = -self.rows[&k][&lead].clone();
            let row = self.rows.get_mut(&k).unwrap();
            axpy(row, &c, &r);
            if let Some(cs) = &mut self.combos {
                let cr = cs.get_mut(&k).unwrap();
                axpy(cr, &c, &combo);
            }
        }
        self.rows.insert(lead, r);
        if let Some(cs) = &mut self.combos {
            cs.insert(lead, combo);
        }
        true
    }

    /// Null space basis of the stored rows, one vector per free column.
    pub fn kernel_basis(&self) -> Vec<SparseVec<T>> {
        let mut out = Vec::new();
        for f in 0..self.cols {
            if self.rows.contains_key(&f) {
                continue;
            }
            let mut v = BTreeMap::new();
            v.insert(f, T::one());
            for (&p, row) in &self.rows {
                if let Some(x) = row.get(&f) {
                    v.insert(p, -x.clone());
                }
            }
            out.push(v);
        }
        out
    }
}

/// Reusable solver for `M x = b` with many right-hand sides.
#[derive(Clone, Debug)]
pub struct Solver<T> {
    matrix: SparseMatrix<T>,
    ech: Echelon<T>,
}

impl<T: Field> Solver<T> {
    pub fn new(m: &SparseMatrix<T>) -> Self {
        let mut ech = Echelon::tracking(m.cols);
        for r in &m.data {
            ech.insert(r.clone());
        }
        Solver { matrix: m.clone(), ech }
    }

    pub fn rank(&self) -> usize {
        self.ech.rank()
    }

    /// Sparse variant of [`SparseMatrix::solve`].
    pub fn solve_sparse(&self, b: &SparseVec<T>) -> Option<SparseVec<T>> {
        let combos = self.ech.combos.as_ref().expect("tracking echelon");
        let mut x = BTreeMap::new();
        for &p in self.ech.rows.keys() {
            let mut s = T::zero();
            for (&r, c) in &combos[&p] {
                if let Some(bv) = b.get(&r) {
                    s = s + c.clone() * bv.clone();
                }
            }
            if !s.is_zero() {
                x.insert(p, s);
            }
        }
        let mut check: SparseVec<T> = BTreeMap::new();
        for (i, row) in self.matrix.data.iter().enumerate() {
            let mut s = T::zero();
            for (&k, v) in row {
                if let Some(xv) = x.get(&k) {
                    s = s + v.clone() * xv.clone();
                }
            }
            if !s.is_zero() {
                check.insert(i, s);
            }
        }
        if &check == b {
            Some(x)
        } else {
            None
        }
    }

    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        self.solve_sparse(&sparsify(b)).map(|x| densify(&x, self.matrix.cols))
    }
}

/// Polynomial in `q` with integer coefficients and nonnegative exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QPoly {
    coeffs: BTreeMap<u32, i64>,
}

impl QPoly {
    pub fn zero() -> Self {
        QPoly::default()
    }

    pub fn one() -> Self {
        QPoly::monomial(0, 1)
    }

    pub fn monomial(exp: u32, c: i64) -> Self {
        let mut p = QPoly::zero();
        p.add_term(exp, c);
        p
    }

    /// `q^exp`.
    pub fn q(exp: u32) -> Self {
        QPoly::monomial(exp, 1)
    }

    pub fn add_term(&mut self, exp: u32, c: i64) {
        let e = self.coeffs.entry(exp).or_insert(0);
        *e += c;
        if *e == 0 {
            self.coeffs.remove(&exp);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, exp: u32) -> i64 {
        self.coeffs.get(&exp).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, i64)> + '_ {
        self.coeffs.iter().map(|(&e, &c)| (e, c))
    }

    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().next_back().copied()
    }

    /// Multiplication by `q^k`.
    pub fn shift(&self, k: u32) -> Self {
        QPoly { coeffs: self.coeffs.iter().map(|(&e, &c)| (e + k, c)).collect() }
    }

    pub fn eval(&self, q: i64) -> i64 {
        self.coeffs.iter().map(|(&e, &c)| c * q.pow(e)).sum()
    }

    /// Whether the polynomial is zero or a single term.
    pub fn is_monomial(&self) -> bool {
        self.coeffs.len() <= 1
    }
}

impl Add for &QPoly {
    type Output = QPoly;
    fn add(self, o: &QPoly) -> QPoly {
        let mut r = self.clone();
        for (e, c) in o.terms() {
            r.add_term(e, c);
        }
        r
    }
}

impl Sub for &QPoly {
    type Output = QPoly;
    fn sub(self, o: &QPoly) -> QPoly {
        let mut r = self.clone();
        for (e, c) in o.terms() {
            r.add_term(e, -c);
        }
        r
    }
}

impl Mul for &QPoly {
    type Output = QPoly;
    fn mul(self, o: &QPoly) -> QPoly {
        let mut r = QPoly::zero();
        for (e1, c1) in self.terms() {
            for (e2, c2) in o.terms() {
                r.add_term(e1 + e2, c1 * c2);
            }
        }
        r
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&e, &c) in self.coeffs.iter().rev() {
            let a = c.unsigned_abs();
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else if c < 0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            first = false;
            let var = match e {
                0 => String::new(),
                1 => "q".to_string(),
                _ => format!("q^{e}"),
            };
            if e == 0 {
                write!(f, "{a}")?;
            } else if a == 1 {
                write!(f, "{var}")?;
            } else {
                write!(f, "{a}{var}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed polynomial: {0}")]
pub struct QPolyParseError(String);

impl FromStr for QPoly {
    type Err = QPolyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || QPolyParseError(s.to_string());
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(err());
        }
        let mut p = QPoly::zero();
        let mut chunks = Vec::new();
        let mut cur = String::new();
        for (i, ch) in compact.chars().enumerate() {
            if (ch == '+' || ch == '-') && i > 0 {
                chunks.push(std::mem::take(&mut cur));
            }
            cur.push(ch);
        }
        chunks.push(cur);
        for chunk in chunks {
            let (sign, body) = match chunk.strip_prefix('-') {
                Some(b) => (-1, b),
                None => (1, chunk.strip_prefix('+').unwrap_or(&chunk)),
            };
            if body.is_empty() {
                return Err(err());
            }
            let (coef, exp) = match body.find('q') {
                None => (body.parse::<i64>().map_err(|_| err())?, 0),
                Some(pos) => {
                    let c = if pos == 0 { 1 } else { body[..pos].parse::<i64>().map_err(|_| err())? };
                    let rest = &body[pos + 1..];
                    let e = if rest.is_empty() {
                        1
                    } else {
                        rest.strip_prefix('^').ok_or_else(err)?.parse::<u32>().map_err(|_| err())?
                    };
                    (c, e)
                }
            };
            p.add_term(exp, sign * coef);
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use num_bigint::BigInt;

    fn q(n: i64) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    fn mat(rows: &[&[i64]]) -> SparseMatrix<Rational> {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect::<Vec<_>>())
    }

    #[test]
    fn rank_examples() {
        assert_eq!(SparseMatrix::<Rational>::identity(3).rank(), 3);
        assert_eq!(SparseMatrix::<Rational>::zeros(2, 5).rank(), 0);
        assert_eq!(mat(&[&[1, 2], &[2, 4]]).rank(), 1);
    }

    #[test]
    fn kernel_examples() {
        assert!(SparseMatrix::<Rational>::identity(2).kernel_basis().is_empty());
        let k = SparseMatrix::<Rational>::zeros(1, 3).kernel_basis();
        assert_eq!(k, vec![vec![q(1), q(0), q(0)], vec![q(0), q(1), q(0)], vec![q(0), q(0), q(1)]]);
        assert_eq!(mat(&[&[1, 1]]).kernel_basis(), vec![vec![q(-1), q(1)]]);
    }

    #[test]
    fn solve_examples() {
        let id = SparseMatrix::<Rational>::identity(3);
        let b = vec![q(4), q(-2), q(7)];
        assert_eq!(id.solve(&b).unwrap(), Some(b.clone()));
        assert_eq!(mat(&[&[1, 1]]).solve(&[q(2)]).unwrap(), Some(vec![q(2), q(0)]));
        assert_eq!(mat(&[&[0]]).solve(&[q(1)]).unwrap(), None);
        assert!(matches!(id.solve(&[q(1)]), Err(LinAlgError::DimensionMismatch { .. })));
    }

    #[test]
    fn kernel_orientation_matches_reduced_form() {
        // [[1,1]] has pivot 0 and free column 1, so the kernel vector is
        // e_1 - e_0 rather than its negative.
        let m = mat(&[&[2, 4, 0], &[1, 2, 1]]);
        let k = m.kernel_basis();
        assert_eq!(k, vec![vec![q(-2), q(1), q(0)]]);
    }

    #[test]
    fn qpoly_display_and_parse() {
        let p = &QPoly::q(4) + &QPoly::q(2);
        assert_eq!(p.to_string(), "q^4 + q^2");
        assert_eq!("q^4 + q^2".parse::<QPoly>().unwrap(), p);
        let r = &(&QPoly::monomial(3, -2) + &QPoly::q(1)) + &QPoly::monomial(0, 5);
        assert_eq!(r.to_string(), "-2q^3 + q + 5");
        assert_eq!(r.to_string().parse::<QPoly>().unwrap(), r);
        assert_eq!(QPoly::zero().to_string(), "0");
        assert_eq!("0".parse::<QPoly>().unwrap(), QPoly::zero());
        assert!("q^".parse::<QPoly>().is_err());
    }
}
