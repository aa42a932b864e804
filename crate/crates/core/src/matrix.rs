//! Dense square matrices of f64 in row-major order.

use crate::{Error, Result};

/// Square matrix of order `n`, stored row-major in a single contiguous
/// buffer of length `n * n`. The order is always at least 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Result<Matrix> {
        if n == 0 {
            return Err(Error::InvalidMatrix("order must be at least 1".into()));
        }
        Ok(Matrix {
            n,
            data: vec![0.0; n * n],
        })
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Matrix> {
        if n == 0 {
            return Err(Error::InvalidMatrix("order must be at least 1".into()));
        }
        if data.len() != n * n {
            return Err(Error::InvalidMatrix(format!(
                "order {} needs {} values, got {}",
                n,
                n * n,
                data.len()
            )));
        }
        Ok(Matrix { n, data })
    }

    pub fn identity(n: usize) -> Result<Matrix> {
        let mut m = Matrix::zeros(n)?;
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        Ok(m)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// Top-left sub-matrix of order `m` (`m <= order`).
    pub fn crop(&self, m: usize) -> Result<Matrix> {
        if m == 0 || m > self.n {
            return Err(Error::InvalidMatrix(format!(
                "cannot crop order {} to {}",
                self.n, m
            )));
        }
        let mut out = Matrix::zeros(m)?;
        for i in 0..m {
            out.data[i * m..(i + 1) * m].copy_from_slice(&self.data[i * self.n..i * self.n + m]);
        }
        Ok(out)
    }

    /// Parses the plain text format: first line is the order `n`, followed
    /// by `n` lines of exactly `n` space-separated decimal values. Ragged
    /// rows are rejected.
    pub fn from_text(text: &str) -> Result<Matrix> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidMatrix("empty input".into()))?;
        let n: usize = header
            .trim()
            .parse()
            .map_err(|_| Error::InvalidMatrix(format!("bad order line {header:?}")))?;
        if n == 0 {
            return Err(Error::InvalidMatrix("order must be at least 1".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for row in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::InvalidMatrix(format!("expected {n} rows, got {row}")))?;
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|_| Error::InvalidMatrix(format!("bad value {tok:?} in row {row}")))
                })
                .collect::<Result<_>>()?;
            if values.len() != n {
                return Err(Error::InvalidMatrix(format!(
                    "ragged row {row}: has {} values, expected {n}",
                    values.len()
                )));
            }
            data.extend_from_slice(&values);
        }
        Matrix::from_vec(n, data)
    }

    /// Inverse of [`Matrix::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.n.to_string());
        out.push('\n');
        for i in 0..self.n {
            for j in 0..self.n {
                if j > 0 {
                    out.push(' ');
                }
                out.push_str(&self.get(i, j).to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Zero-pads `m` into the smallest power-of-two order that fits it. The
/// original matrix occupies the top-left block; a matrix whose order is
/// already a power of two comes back unchanged.
pub fn pad_pow2(m: &Matrix) -> Matrix {
    let n = m.order();
    let p = n.next_power_of_two();
    if p == n {
        return m.clone();
    }
    let mut out = Matrix::zeros(p).expect("padded order is nonzero");
    for i in 0..n {
        out.data[i * p..i * p + n].copy_from_slice(&m.data[i * n..(i + 1) * n]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_order_and_bad_length() {
        assert!(Matrix::zeros(0).is_err());
        assert!(Matrix::from_vec(2, vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn pad_keeps_power_of_two_order_unchanged() {
        let m = Matrix::from_vec(4, (0..16).map(f64::from).collect()).unwrap();
        assert_eq!(pad_pow2(&m), m);
    }

    #[test]
    fn pad_order_3_to_4_zero_fills() {
        let m = Matrix::from_vec(3, vec![1.0; 9]).unwrap();
        let p = pad_pow2(&m);
        assert_eq!(p.order(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i < 3 && j < 3 { 1.0 } else { 0.0 };
                assert_eq!(p.get(i, j), expect);
            }
        }
    }

    #[test]
    fn pad_order_5_to_8() {
        let m = Matrix::from_vec(5, vec![2.0; 25]).unwrap();
        assert_eq!(pad_pow2(&m).order(), 8);
    }

    #[test]
    fn pad_then_crop_is_identity() {
        let m = Matrix::from_vec(5, (0..25).map(f64::from).collect()).unwrap();
        assert_eq!(pad_pow2(&m).crop(5).unwrap(), m);
    }

    #[test]
    fn text_round_trip() {
        let m = Matrix::from_vec(3, vec![1.0, 2.5, -3.0, 0.0, 4.0, 5.0, 6.0, 7.0, 8.125]).unwrap();
        let text = m.to_text();
        assert_eq!(Matrix::from_text(&text).unwrap(), m);
    }

    #[test]
    fn text_parses_known_layout() {
        let m = Matrix::from_text("2\n1 2\n3 4\n").unwrap();
        assert_eq!(m.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn text_rejects_ragged_rows() {
        let err = Matrix::from_text("2\n1 2\n3\n").unwrap_err();
        assert!(err.to_string().contains("ragged"));
        assert!(Matrix::from_text("2\n1 2 9\n3 4\n").is_err());
        assert!(Matrix::from_text("3\n1 2 3\n4 5 6\n").is_err());
    }
}
