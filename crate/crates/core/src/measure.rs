//! Atomic measure spaces and complex fields on them.
//!
//! A space is a finite list of cells, each an atom with positive weight.
//! "Almost everywhere" statements become statements about every cell.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpace {
    cells: Vec<i64>,
    weights: Vec<f64>,
    label: String,
    infinite_model: bool,
}

impl MeasureSpace {
    pub fn new(cells: Vec<i64>, weights: Vec<f64>, label: impl Into<String>) -> Result<Arc<Self>> {
        if cells.is_empty() {
            return Err(Error::InvalidSpace("no cells".into()));
        }
        if cells.len() != weights.len() {
            return Err(Error::InvalidSpace(format!(
                "{} cells but {} weights",
                cells.len(),
                weights.len()
            )));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::InvalidSpace(format!("weight {w} at cell index {i} is not positive and finite")));
        }
        let mut sorted = cells.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSpace("duplicate cell identifiers".into()));
        }
        Ok(Arc::new(Self { cells, weights, label: label.into(), infinite_model: false }))
    }

    /// Counting measure on the integer cells `start..end`.
    pub fn counting(start: i64, end: i64) -> Result<Arc<Self>> {
        Self::uniform(start, end, 1.0)
    }

    /// Cells `start..end`, each of weight `weight`.
    pub fn uniform(start: i64, end: i64, weight: f64) -> Result<Arc<Self>> {
        if end <= start {
            return Err(Error::InvalidSpace(format!("empty cell range {start}..{end}")));
        }
        let cells: Vec<i64> = (start..end).collect();
        let weights = vec![weight; cells.len()];
        Self::new(cells, weights, format!("uniform[{start},{end})"))
    }

    /// Marks the space as a truncation of an infinite-measure space.
    pub fn into_infinite_model(self: Arc<Self>) -> Arc<Self> {
        let mut inner = Arc::unwrap_or_clone(self);
        inner.infinite_model = true;
        Arc::new(inner)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[i64] {
        &self.cells
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_infinite_model(&self) -> bool {
        self.infinite_model
    }

    pub fn total_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn index_of(&self, cell: i64) -> Option<usize> {
        self.cells.iter().position(|&c| c == cell)
    }

    /// True if all weights are equal.
    pub fn is_uniform(&self) -> bool {
        self.weights.windows(2).all(|w| w[0] == w[1])
    }

    /// True if cell identifiers are consecutive ascending integers.
    pub fn is_lattice(&self) -> bool {
        self.cells.windows(2).all(|w| w[1] == w[0] + 1)
    }
}

pub(crate) fn same_space(a: &Arc<MeasureSpace>, b: &Arc<MeasureSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Validates an exponent: `p >= 1` or `p = +inf`.
pub fn check_exponent(p: f64) -> Result<f64> {
    if p >= 1.0 && !p.is_nan() {
        Ok(p)
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// A complex-valued function on a [`MeasureSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    space: Arc<MeasureSpace>,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(space: Arc<MeasureSpace>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::InvalidField(format!(
                "{} values for {} cells",
                values.len(),
                space.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidField("non-finite value".into()));
        }
        Ok(Self { space, values })
    }

    pub fn from_real(space: Arc<MeasureSpace>, values: &[f64]) -> Result<Self> {
        Self::new(space, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub(crate) fn from_parts(space: Arc<MeasureSpace>, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(space.len(), values.len());
        Self { space, values }
    }

    pub fn zeros(space: Arc<MeasureSpace>) -> Self {
        let n = space.len();
        Self { space, values: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn constant(space: Arc<MeasureSpace>, value: Complex64) -> Self {
        let n = space.len();
        Self { space, values: vec![value; n] }
    }

    /// Indicator of the cell at position `index`.
    pub fn delta(space: Arc<MeasureSpace>, index: usize) -> Result<Self> {
        if index >= space.len() {
            return Err(Error::InvalidField(format!("cell index {index} out of range")));
        }
        let mut f = Self::zeros(space);
        f.values[index] = Complex64::new(1.0, 0.0);
        Ok(f)
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        &self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// `|f|` as a field.
    pub fn modulus(&self) -> Field {
        let values = self.values.iter().map(|v| Complex64::new(v.norm(), 0.0)).collect();
        Field::from_parts(self.space.clone(), values)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm_of(&self.moduli(), self.space.weights(), p)
    }

    /// `mu{|f| > lambda}` with strict inequality.
    pub fn distribution(&self, lambda: f64) -> Result<f64> {
        if lambda.is_nan() || lambda <= 0.0 {
            return Err(Error::InvalidParameter(format!("threshold must be positive, got {lambda}")));
        }
        Ok(distribution_of(&self.moduli(), self.space.weights(), lambda))
    }

    /// Multiplication by the indicator of `mask`.
    pub fn restrict(&self, mask: &SubsetMask) -> Result<Field> {
        if !same_space(&self.space, &mask.space) {
            return Err(Error::SpaceMismatch);
        }
        let zero = Complex64::new(0.0, 0.0);
        let values = self
            .values
            .iter()
            .zip(&mask.included)
            .map(|(&v, &keep)| if keep { v } else { zero })
            .collect();
        Ok(Field::from_parts(self.space.clone(), values))
    }

    /// Pointwise `a f + b g`.
    pub fn combine(a: Complex64, f: &Field, b: Complex64, g: &Field) -> Result<Field> {
        if !same_space(&f.space, &g.space) {
            return Err(Error::SpaceMismatch);
        }
        let values = f.values.iter().zip(&g.values).map(|(&x, &y)| a * x + b * y).collect();
        Ok(Field::from_parts(f.space.clone(), values))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        let one = Complex64::new(1.0, 0.0);
        Field::combine(one, self, -one, other)
    }

    pub fn scale(&self, c: Complex64) -> Field {
        let values = self.values.iter().map(|&v| c * v).collect();
        Field::from_parts(self.space.clone(), values)
    }

    /// Weighted inner product `sum f conj(g) w`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        if !same_space(&self.space, &other.space) {
            return Err(Error::SpaceMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.space.weights())
            .map(|((&a, &b), &w)| a * b.conj() * w)
            .sum())
    }
}

pub(crate) fn lp_norm_of(moduli: &[f64], weights: &[f64], p: f64) -> Result<f64> {
    let p = check_exponent(p)?;
    if p.is_infinite() {
        return Ok(moduli.iter().copied().fold(0.0, f64::max));
    }
    if p == 1.0 {
        return Ok(moduli.iter().zip(weights).map(|(m, w)| m * w).sum());
    }
    let sum: f64 = moduli.iter().zip(weights).map(|(m, w)| m.powf(p) * w).sum();
    Ok(sum.powf(1.0 / p))
}

pub(crate) fn distribution_of(moduli: &[f64], weights: &[f64], lambda: f64) -> f64 {
    moduli.iter().zip(weights).filter(|(m, _)| **m > lambda).map(|(_, w)| w).sum()
}

/// A measurable subset, given as per-cell inclusion flags.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetMask {
    space: Arc<MeasureSpace>,
    included: Vec<bool>,
}

impl SubsetMask {
    pub fn new(space: Arc<MeasureSpace>, included: Vec<bool>) -> Result<Self> {
        if included.len() != space.len() {
            return Err(Error::InvalidField(format!(
                "mask of length {} for {} cells",
                included.len(),
                space.len()
            )));
        }
        Ok(Self { space, included })
    }

    pub fn full(space: Arc<MeasureSpace>) -> Self {
        let n = space.len();
        Self { space, included: vec![true; n] }
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        &self.space
    }

    pub fn included(&self) -> &[bool] {
        &self.included
    }

    pub fn contains(&self, index: usize) -> bool {
        self.included[index]
    }

    pub fn measure(&self) -> f64 {
        self.included
            .iter()
            .zip(self.space.weights())
            .filter(|(keep, _)| **keep)
            .map(|(_, w)| w)
            .sum()
    }

    pub fn complement_measure(&self) -> f64 {
        self.included
            .iter()
            .zip(self.space.weights())
            .filter(|(keep, _)| !**keep)
            .map(|(_, w)| w)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_cells() -> Arc<MeasureSpace> {
        MeasureSpace::new(vec![0, 1], vec![1.0, 3.0], "two").unwrap()
    }

    #[test]
    fn lp_norm_examples() {
        let f = Field::from_real(two_cells(), &[2.0, 0.0]).unwrap();
        assert_eq!(f.lp_norm(1.0).unwrap(), 2.0);
        assert_eq!(f.lp_norm(f64::INFINITY).unwrap(), 2.0);
        let g = Field::from_real(two_cells(), &[2.0, 1.0]).unwrap();
        // 4*1 + 1*3
        assert!((g.lp_norm(2.0).unwrap() - 7f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lp_norm_rejects_small_exponent() {
        let f = Field::zeros(two_cells());
        assert!(matches!(f.lp_norm(0.5), Err(Error::InvalidExponent(_))));
        assert!(f.lp_norm(f64::NAN).is_err());
    }

    #[test]
    fn distribution_examples() {
        let f = Field::from_real(two_cells(), &[2.0, 0.0]).unwrap();
        assert_eq!(f.distribution(1.0).unwrap(), 1.0);
        assert_eq!(Field::zeros(two_cells()).distribution(0.3).unwrap(), 0.0);
        let space = MeasureSpace::new(vec![0, 1, 2], vec![1.0, 2.0, 1.0], "three").unwrap();
        let g = Field::from_real(space, &[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(g.distribution(1.5).unwrap(), 2.0);
        // strict inequality
        assert_eq!(g.distribution(2.0).unwrap(), 1.0);
        assert!(g.distribution(0.0).is_err());
    }

    #[test]
    fn restrict_examples() {
        let space = two_cells();
        let f = Field::from_real(space.clone(), &[1.0, 2.0]).unwrap();
        let g = SubsetMask::new(space.clone(), vec![true, false]).unwrap();
        assert_eq!(f.restrict(&g).unwrap().values(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(f.restrict(&SubsetMask::full(space.clone())).unwrap(), f);
        let none = SubsetMask::new(space.clone(), vec![false, false]).unwrap();
        assert!(f.restrict(&none).unwrap().is_zero());
        let other = MeasureSpace::counting(0, 2).unwrap();
        assert!(matches!(f.restrict(&SubsetMask::full(other)), Err(Error::SpaceMismatch)));
    }

    #[test]
    fn combine_examples() {
        let space = two_cells();
        let f = Field::from_real(space.clone(), &[1.0, 1.0]).unwrap();
        let g = Field::from_real(space.clone(), &[0.0, 1.0]).unwrap();
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        assert_eq!(Field::combine(one, &f, zero, &g).unwrap(), f);
        assert!(Field::combine(one, &f, -one, &f).unwrap().is_zero());
        let h = Field::combine(c(2.0, 0.0), &f, c(0.0, 1.0), &g).unwrap();
        assert_eq!(h.values(), &[c(2.0, 0.0), c(2.0, 1.0)]);
    }

    #[test]
    fn space_validation() {
        assert!(MeasureSpace::new(vec![0, 1], vec![1.0, 0.0], "x").is_err());
        assert!(MeasureSpace::new(vec![0, 0], vec![1.0, 1.0], "x").is_err());
        assert!(MeasureSpace::new(vec![0], vec![f64::INFINITY], "x").is_err());
        assert!(MeasureSpace::new(vec![], vec![], "x").is_err());
        let s = MeasureSpace::counting(-3, 4).unwrap();
        assert!(s.is_lattice() && s.is_uniform());
        assert_eq!(s.index_of(0), Some(3));
        assert!(!s.is_infinite_model());
        assert!(s.into_infinite_model().is_infinite_model());
    }

    #[test]
    fn field_validation() {
        assert!(Field::new(two_cells(), vec![c(1.0, 0.0)]).is_err());
        assert!(Field::new(two_cells(), vec![c(f64::NAN, 0.0), c(0.0, 0.0)]).is_err());
        assert!(Field::delta(two_cells(), 2).is_err());
    }
}
