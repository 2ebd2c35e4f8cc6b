//! Per-tensor ternary weight quantization, per-row int8 activation
//! quantization, and the brute-force integer reference GEMV/GEMM.
//!
//! The reference routines are the oracle every kernel in this crate is
//! checked against. They compute `y_j = sum_k W[j][k] * a[k]` directly in
//! 64-bit integers and narrow to `i32` at the end.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest activation magnitude. The clamp is symmetric so that 256
/// accumulated products stay inside `i16` (256 * 127 = 32512).
pub const ACTIVATION_MAX: i8 = 127;

/// Lower bound on the activation absmax.
pub const SCALE_FLOOR: f32 = 1e-8;

fn check_scale(scale: f32) -> Result<()> {
    if scale.is_finite() && scale > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidScale(scale))
    }
}

/// Rows x cols matrix over {-1, 0, +1} with a per-tensor real scale.
#[derive(Debug, Clone, PartialEq)]
pub struct TernaryMatrix {
    rows: usize,
    cols: usize,
    values: Vec<i8>,
    scale: f32,
}

impl TernaryMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<i8>, scale: f32) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape(format!(
                "ternary matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(-1..=1).contains(*v)) {
            return Err(Error::NotTernary { index, value });
        }
        check_scale(scale)?;
        Ok(Self {
            rows,
            cols,
            values,
            scale,
        })
    }

    /// All-zero matrix with unit scale.
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0; rows * cols], 1.0)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn scale(&self) -> f32 {
        self.scale
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn row(&self, r: usize) -> &[i8] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> i8 {
        self.values[r * self.cols + c]
    }

    /// Same values with scale 1, as recovered from a packed stream.
    pub fn with_unit_scale(mut self) -> Self {
        self.scale = 1.0;
        self
    }

    /// Copy into a larger zero-filled matrix, keeping the scale.
    pub fn zero_padded(&self, rows: usize, cols: usize) -> Result<Self> {
        if rows < self.rows || cols < self.cols {
            return Err(Error::InvalidShape(format!(
                "cannot pad {}x{} down to {rows}x{cols}",
                self.rows, self.cols
            )));
        }
        let mut values = vec![0i8; rows * cols];
        for r in 0..self.rows {
            values[r * cols..r * cols + self.cols].copy_from_slice(self.row(r));
        }
        Self::new(rows, cols, values, self.scale)
    }
}

/// One row of int8 activations with its real scale.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedActivations {
    values: Vec<i8>,
    scale: f32,
}

impl QuantizedActivations {
    pub fn new(values: Vec<i8>, scale: f32) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidShape("activation row must be non-empty".into()));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| **v < -ACTIVATION_MAX) {
            return Err(Error::ActivationRange { index, value });
        }
        check_scale(scale)?;
        Ok(Self { values, scale })
    }

    /// Integer activations with unit scale.
    pub fn from_ints(values: Vec<i8>) -> Result<Self> {
        Self::new(values, 1.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn scale(&self) -> f32 {
        self.scale
    }
}

/// Exact 32-bit integer outputs of a GEMV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccumulatorVector(pub Vec<i32>);

impl AccumulatorVector {
    pub fn values(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Row-major N x M accumulator matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccumulatorMatrix {
    rows: usize,
    cols: usize,
    values: Vec<i32>,
}

impl AccumulatorMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<AccumulatorVector>) -> Result<Self> {
        let cols = rows.first().map_or(0, AccumulatorVector::len);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (row, v) in rows.iter().enumerate() {
            if v.len() != cols {
                return Err(Error::RaggedRows {
                    row,
                    expected: cols,
                    found: v.len(),
                });
            }
            values.extend_from_slice(v.values());
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[i32] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [i32] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [i32] {
        &mut self.values
    }

    pub fn to_vector(&self, r: usize) -> AccumulatorVector {
        AccumulatorVector(self.row(r).to_vec())
    }
}

/// N rows of activations against an M x K weight matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GemvShape {
    pub n: usize,
    pub k: usize,
    pub m: usize,
}

impl GemvShape {
    pub fn new(n: usize, k: usize, m: usize) -> Result<Self> {
        if n == 0 || k == 0 || m == 0 {
            return Err(Error::InvalidShape(format!("{n}x{k}x{m} has a zero dimension")));
        }
        Ok(Self { n, k, m })
    }
}

impl std::fmt::Display for GemvShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.n, self.k, self.m)
    }
}

impl std::str::FromStr for GemvShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(['x', 'X']).collect();
        if parts.len() != 3 {
            return Err(Error::InvalidShape(format!("expected NxKxM, got {s:?}")));
        }
        let mut dims = [0usize; 3];
        for (d, p) in dims.iter_mut().zip(&parts) {
            *d = p
                .trim()
                .parse()
                .map_err(|_| Error::InvalidShape(format!("bad dimension {p:?} in {s:?}")))?;
        }
        Self::new(dims[0], dims[1], dims[2])
    }
}

/// Per-row absmax quantization to int8 with a symmetric clamp.
pub fn quantize_activations(x: &[f32]) -> Result<QuantizedActivations> {
    if x.is_empty() {
        return Err(Error::InvalidShape("activation vector must be non-empty".into()));
    }
    if let Some(index) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let absmax = x.iter().fold(0f32, |m, v| m.max(v.abs())).max(SCALE_FLOOR);
    // x * 127 is exact in f64 for any f32 x, so the only rounding happens
    // in the division and half-way cases are recognised exactly.
    let limit = f64::from(ACTIVATION_MAX);
    let values = x
        .iter()
        .map(|&v| (f64::from(v) * limit / f64::from(absmax)).round().clamp(-limit, limit) as i8)
        .collect();
    QuantizedActivations::new(values, absmax / 127.0)
}

/// Mean-absolute ternarization of a row-major `rows x cols` matrix.
pub fn quantize_weights(w: &[f32], rows: usize, cols: usize) -> Result<TernaryMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidShape(format!("weight matrix {rows}x{cols} is empty")));
    }
    if w.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            expected: rows * cols,
            found: w.len(),
        });
    }
    if let Some(index) = w.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mean = w.iter().map(|v| f64::from(v.abs())).sum::<f64>() / w.len() as f64;
    let scale = if mean > 0.0 { mean } else { 1.0 };
    let values = w
        .iter()
        .map(|&v| (f64::from(v) / scale).round().clamp(-1.0, 1.0) as i8)
        .collect();
    TernaryMatrix::new(rows, cols, values, scale as f32)
}

/// Brute-force `y = W a`.
pub fn reference_gemv(w: &TernaryMatrix, a: &QuantizedActivations) -> Result<AccumulatorVector> {
    if a.len() != w.cols() {
        return Err(Error::DimensionMismatch {
            expected: w.cols(),
            found: a.len(),
        });
    }
    (0..w.rows())
        .map(|r| {
            let sum: i64 = w
                .row(r)
                .iter()
                .zip(a.values())
                .map(|(&wv, &av)| i64::from(wv) * i64::from(av))
                .sum();
            i32::try_from(sum).map_err(|_| Error::AccumulatorOverflow)
        })
        .collect::<Result<Vec<_>>>()
        .map(AccumulatorVector)
}

/// Row-wise reference GEMM over `rows.len()` activation rows.
pub fn reference_gemm(w: &TernaryMatrix, rows: &[QuantizedActivations]) -> Result<AccumulatorMatrix> {
    if rows.is_empty() {
        return Err(Error::InvalidShape("GEMM needs at least one activation row".into()));
    }
    for (row, a) in rows.iter().enumerate() {
        if a.len() != w.cols() {
            return Err(Error::RaggedRows {
                row,
                expected: w.cols(),
                found: a.len(),
            });
        }
    }
    let out = rows.iter().map(|a| reference_gemv(w, a)).collect::<Result<Vec<_>>>()?;
    AccumulatorMatrix::from_rows(out)
}

/// `out_j = y_j * s_w * s_x`.
pub fn dequantize(y: &AccumulatorVector, weight_scale: f32, act_scale: f32) -> Result<Vec<f32>> {
    check_scale(weight_scale)?;
    check_scale(act_scale)?;
    Ok(y.values()
        .iter()
        .map(|&v| v as f32 * weight_scale * act_scale)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acts(v: &[i8]) -> QuantizedActivations {
        QuantizedActivations::from_ints(v.to_vec()).unwrap()
    }

    fn tern(rows: usize, cols: usize, v: &[i8]) -> TernaryMatrix {
        TernaryMatrix::new(rows, cols, v.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn zero_activations_use_scale_floor() {
        let q = quantize_activations(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(q.values(), &[0, 0, 0]);
        assert_eq!(q.scale(), 1e-8 / 127.0);
    }

    #[test]
    fn half_rounds_away_from_zero() {
        let q = quantize_activations(&[0.5, -1.0]).unwrap();
        assert_eq!(q.values(), &[64, -127]);
        assert!((q.scale() - 1.0 / 127.0).abs() < 1e-9);
    }

    #[test]
    fn exact_max_maps_to_127() {
        let q = quantize_activations(&[2.54]).unwrap();
        assert_eq!(q.values(), &[127]);
        assert!((q.scale() - 0.02).abs() < 1e-7);
    }

    #[test]
    fn non_finite_activation_names_index() {
        assert_eq!(
            quantize_activations(&[1.0, f32::NAN]),
            Err(Error::NonFinite { index: 1 })
        );
        assert!(quantize_activations(&[]).is_err());
    }

    #[test]
    fn weight_quantization_examples() {
        let z = quantize_weights(&[0.0; 4], 2, 2).unwrap();
        assert_eq!(z.values(), &[0, 0, 0, 0]);
        assert_eq!(z.scale(), 1.0);

        let w = quantize_weights(&[0.4, -0.05, -0.6, 0.0], 2, 2).unwrap();
        assert!((w.scale() - 0.2625).abs() < 1e-7);
        assert_eq!(w.values(), &[1, 0, -1, 0]);

        let t = quantize_weights(&[1.0, -1.0], 1, 2).unwrap();
        assert_eq!(t.scale(), 1.0);
        assert_eq!(t.values(), &[1, -1]);

        assert_eq!(
            quantize_weights(&[0.0, f32::INFINITY], 1, 2),
            Err(Error::NonFinite { index: 1 })
        );
    }

    #[test]
    fn matrix_rejects_bad_input() {
        assert!(TernaryMatrix::new(0, 2, vec![], 1.0).is_err());
        assert_eq!(
            TernaryMatrix::new(1, 2, vec![0, 2], 1.0),
            Err(Error::NotTernary { index: 1, value: 2 })
        );
        assert!(TernaryMatrix::new(1, 2, vec![0, 1], 0.0).is_err());
        assert!(QuantizedActivations::from_ints(vec![-128]).is_err());
    }

    #[test]
    fn reference_gemv_examples() {
        assert_eq!(
            reference_gemv(&tern(2, 2, &[1, 0, 0, 1]), &acts(&[7, 9])).unwrap().0,
            vec![7, 9]
        );
        assert_eq!(
            reference_gemv(&tern(2, 2, &[1, -1, 0, 1]), &acts(&[3, 5])).unwrap().0,
            vec![-2, 5]
        );
        assert_eq!(
            reference_gemv(&TernaryMatrix::zeros(3, 2).unwrap(), &acts(&[100, -100]))
                .unwrap()
                .0,
            vec![0, 0, 0]
        );
        assert!(matches!(
            reference_gemv(&tern(1, 2, &[1, 1]), &acts(&[1])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn reference_gemm_examples() {
        let w = tern(1, 2, &[1, -1]);
        let out = reference_gemm(&w, &[acts(&[3, 5]), acts(&[2, 2])]).unwrap();
        assert_eq!(out.row(0), &[-2]);
        assert_eq!(out.row(1), &[0]);
        assert_eq!(
            reference_gemm(&w, &[acts(&[3, 5])]).unwrap().to_vector(0),
            reference_gemv(&w, &acts(&[3, 5])).unwrap()
        );
        assert!(reference_gemm(&w, &[]).is_err());
        assert!(matches!(
            reference_gemm(&w, &[acts(&[1, 2]), acts(&[1])]),
            Err(Error::RaggedRows { row: 1, .. })
        ));
    }

    #[test]
    fn dequantize_examples() {
        let y = AccumulatorVector(vec![-2, 5]);
        assert_eq!(dequantize(&y, 0.25, 0.5).unwrap(), vec![-0.25, 0.625]);
        assert_eq!(dequantize(&AccumulatorVector(vec![0]), 3.0, 7.0).unwrap(), vec![0.0]);
        assert_eq!(dequantize(&y, 1.0, 1.0).unwrap(), vec![-2.0, 5.0]);
        assert!(dequantize(&y, 0.0, 1.0).is_err());
        assert!(dequantize(&y, 1.0, -1.0).is_err());
    }

    #[test]
    fn shape_parses() {
        let s: GemvShape = "128x2560x6912".parse().unwrap();
        assert_eq!(
            s,
            GemvShape {
                n: 128,
                k: 2560,
                m: 6912
            }
        );
        assert!("1x0x4".parse::<GemvShape>().is_err());
        assert!("1x2".parse::<GemvShape>().is_err());
    }
}
