//! Scalar fields sampled on equispaced `(x, t)` grids.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::trapezoid_weights;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid needs at least 2 points and increasing bounds, got n={n} on [{lo}, {hi}]")]
    BadGrid { lo: f64, hi: f64, n: usize },
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("non-finite value at x index {ix}, t index {it}")]
    NonFinite { ix: usize, it: usize },
    #[error("fields are on different grids")]
    GridMismatch,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed field file: {0}")]
    Malformed(String),
}

/// `n` equispaced points from `lo` to `hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1 {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid1 {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self, FieldError> {
        if n < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(FieldError::BadGrid { lo, hi, n });
        }
        Ok(Self { lo, hi, n })
    }

    /// Grid with spacing `h` (rounded to the nearest whole number of cells).
    pub fn with_spacing(lo: f64, hi: f64, h: f64) -> Result<Self, FieldError> {
        let cells = ((hi - lo) / h).round() as usize;
        Self::new(lo, hi, cells + 1)
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + self.spacing() * i as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Index of the grid point nearest to `v`.
    pub fn nearest(&self, v: f64) -> usize {
        (((v - self.lo) / self.spacing()).round().max(0.0) as usize).min(self.n - 1)
    }
}

/// Solver name and parameters that produced a field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub solver: String,
    pub params: BTreeMap<String, String>,
}

impl FieldMeta {
    pub fn new(solver: &str) -> Self {
        Self { solver: solver.into(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.into(), value.to_string());
        self
    }
}

/// Values `u(x_i, t_j)` stored t-major: `values[j * nx + i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SolutionField<T> {
    pub x: Grid1,
    pub t: Grid1,
    pub values: Vec<T>,
    pub meta: FieldMeta,
}

impl<T: Scalar> SolutionField<T> {
    pub fn new(x: Grid1, t: Grid1, values: Vec<T>, meta: FieldMeta) -> Result<Self, FieldError> {
        let f = Self { x, t, values, meta };
        f.validate()?;
        Ok(f)
    }

    /// Samples `f(x, t)` on the grid.
    pub fn from_fn(x: Grid1, t: Grid1, meta: FieldMeta, f: impl Fn(T, T) -> T) -> Result<Self, FieldError> {
        let mut values = Vec::with_capacity(x.n * t.n);
        for j in 0..t.n {
            let tj = T::lit(t.point(j));
            for i in 0..x.n {
                values.push(f(T::lit(x.point(i)), tj));
            }
        }
        Self::new(x, t, values, meta)
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        Grid1::new(self.x.lo, self.x.hi, self.x.n)?;
        Grid1::new(self.t.lo, self.t.hi, self.t.n)?;
        if self.values.len() != self.x.n * self.t.n {
            return Err(FieldError::Length { expected: self.x.n * self.t.n, got: self.values.len() });
        }
        if let Some(k) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite { ix: k % self.x.n, it: k / self.x.n });
        }
        Ok(())
    }

    #[inline]
    pub fn at(&self, ix: usize, it: usize) -> T {
        self.values[it * self.x.n + ix]
    }

    pub fn row(&self, it: usize) -> &[T] {
        &self.values[it * self.x.n..(it + 1) * self.x.n]
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.x == other.x && self.t == other.t
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Pointwise `f(self, other)` on a shared grid.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self, FieldError> {
        if !self.same_grid(other) {
            return Err(FieldError::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { x: self.x, t: self.t, values, meta: self.meta.clone() })
    }

    /// Writes `x,t,u` rows, t-major.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), FieldError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "t", "u"])?;
        for j in 0..self.t.n {
            for i in 0..self.x.n {
                wr.serialize((self.x.point(i), self.t.point(j), self.at(i, j).to_f64_lossy()))?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the CSV layout written by [`Self::write_csv`]. Metadata is not
    /// stored in CSV and comes back empty.
    pub fn read_csv<R: Read>(r: R) -> Result<Self, FieldError> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.clone();
        if header.iter().map(str::trim).collect::<Vec<_>>() != ["x", "t", "u"] {
            return Err(FieldError::Malformed(format!("header {header:?}, expected x,t,u")));
        }
        let mut rows = Vec::new();
        for rec in rd.deserialize() {
            let (x, t, u): (f64, f64, f64) = rec?;
            rows.push((x, t, u));
        }
        let nx = rows.iter().take_while(|r| r.1 == rows[0].1).count();
        if nx < 2 || rows.len() % nx != 0 {
            return Err(FieldError::Malformed("rows do not form a t-major grid".into()));
        }
        let nt = rows.len() / nx;
        let x = Grid1::new(rows[0].0, rows[nx - 1].0, nx)?;
        let t = Grid1::new(rows[0].1, rows[rows.len() - 1].1, nt)?;
        let values = rows.iter().map(|r| T::lit(r.2)).collect();
        Self::new(x, t, values, FieldMeta::default())
    }

    /// Compact little-endian binary layout:
    /// `b"PLSF"`, `u32` version (1), `u64` nx, `f64` x_lo, `f64` x_hi, `u64` nt,
    /// `f64` t_lo, `f64` t_hi, `u64` metadata length, metadata JSON bytes,
    /// then `nx·nt` `f64` values, t-major.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<(), FieldError> {
        w.write_all(b"PLSF")?;
        w.write_all(&1u32.to_le_bytes())?;
        for g in [self.x, self.t] {
            w.write_all(&(g.n as u64).to_le_bytes())?;
            w.write_all(&g.lo.to_le_bytes())?;
            w.write_all(&g.hi.to_le_bytes())?;
        }
        let meta = serde_json::to_vec(&self.meta).map_err(|e| FieldError::Malformed(e.to_string()))?;
        w.write_all(&(meta.len() as u64).to_le_bytes())?;
        w.write_all(&meta)?;
        for v in &self.values {
            w.write_all(&v.to_f64_lossy().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, FieldError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"PLSF" {
            return Err(FieldError::Malformed("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != 1 {
            return Err(FieldError::Malformed("unsupported version".into()));
        }
        let mut b8 = [0u8; 8];
        let mut u64_ = |r: &mut R| -> Result<u64, FieldError> {
            r.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let mut grids = Vec::new();
        for _ in 0..2 {
            let n = u64_(&mut r)? as usize;
            let lo = f64::from_bits(u64_(&mut r)?);
            let hi = f64::from_bits(u64_(&mut r)?);
            grids.push(Grid1::new(lo, hi, n)?);
        }
        let mlen = u64_(&mut r)? as usize;
        if mlen > 1 << 24 {
            return Err(FieldError::Malformed("metadata too long".into()));
        }
        let mut meta = vec![0u8; mlen];
        r.read_exact(&mut meta)?;
        let meta: FieldMeta = serde_json::from_slice(&meta).map_err(|e| FieldError::Malformed(e.to_string()))?;
        let count = grids[0].n * grids[1].n;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            values.push(T::lit(f64::from_bits(u64_(&mut r)?)));
        }
        Self::new(grids[0], grids[1], values, meta)
    }
}

/// Space-time `L²` distance by the composite trapezoid rule.
pub fn l2_field_error<T: Scalar>(a: &SolutionField<T>, b: &SolutionField<T>) -> Result<T, FieldError> {
    if !a.same_grid(b) {
        return Err(FieldError::GridMismatch);
    }
    let wx = trapezoid_weights(a.x.n, a.x.spacing());
    let wt = trapezoid_weights(a.t.n, a.t.spacing());
    let mut s = T::zero();
    for (j, &wj) in wt.iter().enumerate() {
        let mut row = T::zero();
        for (i, &wi) in wx.iter().enumerate() {
            let d = a.at(i, j) - b.at(i, j);
            row = row + T::lit(wi) * d * d;
        }
        s = s + T::lit(wj) * row;
    }
    Ok(s.sqrt())
}

/// `L²` norm in `x` of one time row by the trapezoid rule.
pub fn l2_row_norm<T: Scalar>(grid: &Grid1, row: &[T]) -> T {
    let w = trapezoid_weights(grid.n, grid.spacing());
    row.iter().zip(&w).map(|(&v, &wi)| T::lit(wi) * v * v).sum::<T>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_grids() -> (Grid1, Grid1) {
        (Grid1::new(-1.0, 1.0, 41).unwrap(), Grid1::new(0.0, 1.0, 21).unwrap())
    }

    #[test]
    fn constant_difference_has_volume_norm() {
        let (gx, gt) = unit_grids();
        let a = SolutionField::from_fn(gx, gt, FieldMeta::new("a"), |_, _| 1.0_f64).unwrap();
        let b = SolutionField::from_fn(gx, gt, FieldMeta::new("b"), |_, _| 0.0_f64).unwrap();
        assert_relative_eq!(l2_field_error(&a, &b).unwrap(), 2f64.sqrt(), epsilon = 1e-14);
        assert_eq!(l2_field_error(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let (gx, gt) = unit_grids();
        let a = SolutionField::from_fn(gx, gt, FieldMeta::default(), |x: f64, _| x).unwrap();
        let b = SolutionField::from_fn(Grid1::new(-1.0, 1.0, 11).unwrap(), gt, FieldMeta::default(), |x: f64, _| x).unwrap();
        assert!(matches!(l2_field_error(&a, &b), Err(FieldError::GridMismatch)));
    }

    #[test]
    fn invalid_fields_rejected() {
        assert!(Grid1::new(0.0, 1.0, 1).is_err());
        let (gx, gt) = unit_grids();
        assert!(SolutionField::<f64>::new(gx, gt, vec![0.0; 3], FieldMeta::default()).is_err());
        assert!(SolutionField::from_fn(gx, gt, FieldMeta::default(), |_, _| f64::NAN).is_err());
    }

    #[test]
    fn csv_and_binary_round_trip() {
        let (gx, gt) = unit_grids();
        let a = SolutionField::from_fn(gx, gt, FieldMeta::new("probe").with("k", 3), |x: f64, t: f64| (x * 3.0).sin() * t.exp())
            .unwrap();
        let mut buf = Vec::new();
        a.write_binary(&mut buf).unwrap();
        let b = SolutionField::<f64>::read_binary(buf.as_slice()).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"x,t,u\n"));
        let c = SolutionField::<f64>::read_csv(buf.as_slice()).unwrap();
        assert_eq!(a.values, c.values);
        assert_eq!(a.x, c.x);
        assert!(SolutionField::<f64>::read_binary(&b"nope"[..]).is_err());
    }

    proptest! {
        #[test]
        fn l2_error_is_a_metric(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let gx = Grid1::new(-1.0, 1.0, 9).unwrap();
            let gt = Grid1::new(0.0, 1.0, 5).unwrap();
            let mut make = || {
                let v = (0..45).map(|_| rng.gen_range(-2.0..2.0)).collect();
                SolutionField::<f64>::new(gx, gt, v, FieldMeta::default()).unwrap()
            };
            let (a, b, c) = (make(), make(), make());
            let ab = l2_field_error(&a, &b).unwrap();
            let ba = l2_field_error(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12);
            let ac = l2_field_error(&a, &c).unwrap();
            let cb = l2_field_error(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-12);
        }
    }
}
