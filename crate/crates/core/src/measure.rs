//! Linear observation models.
//!
//! Two operators share the [`LinearMeasurement`] interface: an entrywise
//! sampling mask (`P_Ω`) and a projection onto a random subspace of matrix
//! space given by an orthonormal basis (`P_Q`). Both map an `m x n` matrix
//! to a coefficient vector and back through the adjoint.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::qr_thin;
use crate::matrix::{dot, DenseMatrix};

/// A linear map from `m x n` matrices to `R^p`.
pub trait LinearMeasurement {
    /// Shape of the matrices the operator acts on.
    fn ambient_shape(&self) -> (usize, usize);

    /// Number of measurements `p`.
    fn num_measurements(&self) -> usize;

    fn forward(&self, a: &DenseMatrix) -> Result<Vec<f64>>;

    fn adjoint(&self, y: &[f64]) -> Result<DenseMatrix>;

    /// `adjoint(forward(a))`, the projection of `a` onto the measured subspace
    /// when the operator has orthonormal rows.
    fn project(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        self.adjoint(&self.forward(a)?)
    }

    fn check_shape(&self, a: &DenseMatrix) -> Result<()> {
        let expect = self.ambient_shape();
        if a.shape() != expect {
            return Err(Error::Dimension(format!(
                "operator acts on {}x{} matrices, got {}x{}",
                expect.0,
                expect.1,
                a.rows(),
                a.cols()
            )));
        }
        Ok(())
    }

    fn check_len(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.num_measurements() {
            return Err(Error::Dimension(format!(
                "expected {} measurements, got {}",
                self.num_measurements(),
                y.len()
            )));
        }
        Ok(())
    }
}

/// The set Ω of observed entries.
///
/// Indices are kept sorted in row-major order alongside a dense marker for
/// constant-time membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    indices: Vec<(usize, usize)>,
    marker: Vec<bool>,
}

impl ObservationMask {
    /// Rejects out-of-range and duplicate indices. An empty set is allowed
    /// here; the solvers reject it.
    pub fn new(rows: usize, cols: usize, mut indices: Vec<(usize, usize)>) -> Result<Self> {
        let mut marker = vec![false; rows * cols];
        for &(i, j) in &indices {
            if i >= rows || j >= cols {
                return Err(Error::Dimension(format!(
                    "index ({i}, {j}) outside a {rows}x{cols} mask"
                )));
            }
            if std::mem::replace(&mut marker[i * cols + j], true) {
                return Err(Error::Argument(format!("duplicate mask index ({i}, {j})")));
            }
        }
        indices.sort_unstable();
        Ok(Self {
            rows,
            cols,
            indices,
            marker,
        })
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self::from_marker(rows, cols, vec![true; rows * cols])
    }

    /// Builds a mask from a row-major membership vector.
    pub fn from_marker(rows: usize, cols: usize, marker: Vec<bool>) -> Self {
        assert_eq!(marker.len(), rows * cols, "marker length");
        let indices = marker
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(k, _)| (k / cols, k % cols))
            .collect();
        Self {
            rows,
            cols,
            indices,
            marker,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.rows * self.cols
    }

    /// Observed indices in row-major order.
    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    /// Row-major membership flags.
    pub fn marker(&self) -> &[bool] {
        &self.marker
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.marker[i * self.cols + j]
    }

    /// Ω^C as a mask of its own.
    pub fn complement(&self) -> Self {
        Self::from_marker(self.rows, self.cols, self.marker.iter().map(|b| !b).collect())
    }

    fn check(&self, a: &DenseMatrix) -> Result<()> {
        if a.shape() != self.shape() {
            return Err(Error::Dimension(format!(
                "mask is {}x{}, matrix is {}x{}",
                self.rows,
                self.cols,
                a.rows(),
                a.cols()
            )));
        }
        Ok(())
    }
}

/// `P_Ω(a)`: keeps `a` on Ω and zeroes it elsewhere.
pub fn mask_project(a: &DenseMatrix, mask: &ObservationMask) -> Result<DenseMatrix> {
    mask.check(a)?;
    let mut out = a.clone();
    for (x, &keep) in out.as_mut_slice().iter_mut().zip(mask.marker()) {
        if !keep {
            *x = 0.0;
        }
    }
    Ok(out)
}

impl LinearMeasurement for ObservationMask {
    fn ambient_shape(&self) -> (usize, usize) {
        self.shape()
    }

    fn num_measurements(&self) -> usize {
        self.len()
    }

    fn forward(&self, a: &DenseMatrix) -> Result<Vec<f64>> {
        self.check(a)?;
        Ok(self.indices.iter().map(|&ij| a[ij]).collect())
    }

    fn adjoint(&self, y: &[f64]) -> Result<DenseMatrix> {
        self.check_len(y)?;
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for (&ij, &v) in self.indices.iter().zip(y) {
            out[ij] = v;
        }
        Ok(out)
    }

    fn project(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        mask_project(a, self)
    }
}

/// A `p`-dimensional subspace of `m x n` matrix space with an orthonormal basis.
#[derive(Debug, Clone)]
pub struct SubspaceOperator {
    ambient_rows: usize,
    ambient_cols: usize,
    /// `p x (m*n)`, row `k` is the row-major flattening of basis matrix `B_k`.
    basis: DenseMatrix,
    seed: Option<u64>,
}

/// Basis Gram matrices must match the identity to this tolerance.
const BASIS_ORTHONORMALITY_TOL: f64 = 1e-8;

impl SubspaceOperator {
    /// Wraps a `p x (m*n)` stack of flattened basis matrices, checking that
    /// the rows are orthonormal.
    pub fn from_basis(ambient_rows: usize, ambient_cols: usize, basis: DenseMatrix) -> Result<Self> {
        if basis.cols() != ambient_rows * ambient_cols {
            return Err(Error::Dimension(format!(
                "basis rows have length {}, ambient space has {} entries",
                basis.cols(),
                ambient_rows * ambient_cols
            )));
        }
        if basis.rows() == 0 || basis.rows() > basis.cols() {
            return Err(Error::Argument(format!(
                "subspace dimension {} outside [1, {}]",
                basis.rows(),
                basis.cols()
            )));
        }
        let op = Self {
            ambient_rows,
            ambient_cols,
            basis,
            seed: None,
        };
        let defect = op.gram_defect();
        if defect > BASIS_ORTHONORMALITY_TOL {
            return Err(Error::Argument(format!(
                "basis is not orthonormal (Gram defect {defect:e})"
            )));
        }
        Ok(op)
    }

    /// The indicator basis of Ω, which makes `P_Q` coincide with `P_Ω`.
    pub fn from_mask(mask: &ObservationMask) -> Result<Self> {
        let (m, n) = mask.shape();
        let mut basis = DenseMatrix::zeros(mask.len(), m * n);
        for (k, &(i, j)) in mask.indices().iter().enumerate() {
            basis[(k, i * n + j)] = 1.0;
        }
        Self::from_basis(m, n, basis)
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }

    /// Basis element `B_k` as an `m x n` matrix.
    pub fn basis_matrix(&self, k: usize) -> DenseMatrix {
        DenseMatrix::new(
            self.ambient_rows,
            self.ambient_cols,
            self.basis.row(k).to_vec(),
        )
        .expect("basis rows are finite")
    }

    /// `max |BBᵀ − I|`.
    pub fn gram_defect(&self) -> f64 {
        self.basis
            .matmul_tr(&self.basis)
            .sub(&DenseMatrix::identity(self.dim()))
            .max_abs()
    }
}

/// Draws a `p`-dimensional subspace by orthonormalizing i.i.d. standard
/// normal matrices. Deterministic in `seed`.
pub fn draw_random_subspace(m: usize, n: usize, p: usize, seed: u64) -> Result<SubspaceOperator> {
    let total = m * n;
    if p == 0 || p > total {
        return Err(Error::Argument(format!(
            "subspace dimension {p} outside [1, {total}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Column k of `g` is the k-th Gaussian draw.
    let draws: Vec<f64> = (0..total * p).map(|_| StandardNormal.sample(&mut rng)).collect();
    let g = DenseMatrix::from_fn(total, p, |i, k| draws[k * total + i]);
    let q = qr_thin(&g)?.q;
    let mut op = SubspaceOperator::from_basis(m, n, q.transpose())?;
    op.seed = Some(seed);
    Ok(op)
}

/// Coefficients `y_k = ⟨B_k, a⟩`.
pub fn subspace_forward(a: &DenseMatrix, q: &SubspaceOperator) -> Result<Vec<f64>> {
    q.check_shape(a)?;
    Ok((0..q.dim())
        .map(|k| dot(q.basis.row(k), a.as_slice()))
        .collect())
}

/// `Σ_k y_k B_k`.
pub fn subspace_adjoint(y: &[f64], q: &SubspaceOperator) -> Result<DenseMatrix> {
    q.check_len(y)?;
    let mut out = vec![0.0; q.ambient_rows * q.ambient_cols];
    for (k, &yk) in y.iter().enumerate() {
        if yk == 0.0 {
            continue;
        }
        for (o, &b) in out.iter_mut().zip(q.basis.row(k)) {
            *o += yk * b;
        }
    }
    DenseMatrix::new(q.ambient_rows, q.ambient_cols, out)
}

impl LinearMeasurement for SubspaceOperator {
    fn ambient_shape(&self) -> (usize, usize) {
        (self.ambient_rows, self.ambient_cols)
    }

    fn num_measurements(&self) -> usize {
        self.dim()
    }

    fn forward(&self, a: &DenseMatrix) -> Result<Vec<f64>> {
        subspace_forward(a, self)
    }

    fn adjoint(&self, y: &[f64]) -> Result<DenseMatrix> {
        subspace_adjoint(y, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{spectral_norm, PowerIteration};

    #[test]
    fn mask_projection_by_definition() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let mask = ObservationMask::new(2, 2, vec![(1, 1), (0, 0)]).unwrap();
        let p = mask_project(&a, &mask).unwrap();
        assert_eq!(p, DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 4.0]]));
        let pc = mask_project(&a, &mask.complement()).unwrap();
        assert_eq!(p.add(&pc), a);
        assert_eq!(mask_project(&a, &ObservationMask::full(2, 2)).unwrap(), a);
    }

    #[test]
    fn mask_rejects_bad_indices() {
        assert!(ObservationMask::new(2, 2, vec![(2, 0)]).is_err());
        assert!(ObservationMask::new(2, 2, vec![(0, 1), (0, 1)]).is_err());
        let mask = ObservationMask::full(2, 3);
        assert!(mask_project(&DenseMatrix::zeros(3, 2), &mask).is_err());
    }

    #[test]
    fn basis_element_maps_to_unit_vector() {
        let q = draw_random_subspace(3, 4, 5, 17).unwrap();
        for k in 0..5 {
            let y = subspace_forward(&q.basis_matrix(k), &q).unwrap();
            for (i, &yi) in y.iter().enumerate() {
                let expect = if i == k { 1.0 } else { 0.0 };
                assert!((yi - expect).abs() <= 1e-12);
            }
            let back = subspace_adjoint(&y, &q).unwrap();
            assert!(back.sub(&q.basis_matrix(k)).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn orthogonal_input_measures_zero() {
        let q = draw_random_subspace(3, 3, 4, 2).unwrap();
        let a = DenseMatrix::from_fn(3, 3, |i, j| (i as f64) - 0.5 * j as f64);
        // Remove the component inside Q.
        let resid = a.sub(&q.project(&a).unwrap());
        let y = subspace_forward(&resid, &q).unwrap();
        assert!(y.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn adjoint_of_zero_is_zero() {
        let q = draw_random_subspace(2, 3, 4, 9).unwrap();
        assert_eq!(subspace_adjoint(&[0.0; 4], &q).unwrap(), DenseMatrix::zeros(2, 3));
        assert!(subspace_adjoint(&[0.0; 3], &q).is_err());
    }

    #[test]
    fn full_dimension_subspace_is_bijection() {
        let q = draw_random_subspace(3, 3, 9, 4).unwrap();
        let y: Vec<f64> = (0..9).map(|k| k as f64 - 4.0).collect();
        let back = subspace_forward(&subspace_adjoint(&y, &q).unwrap(), &q).unwrap();
        for (a, b) in y.iter().zip(&back) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn rank_one_subspace_has_unit_norm() {
        let q = draw_random_subspace(4, 3, 1, 5).unwrap();
        let norm = spectral_norm((4, 3), |x| q.project(x).unwrap(), PowerIteration::default()).unwrap();
        assert!((norm - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn draw_rejects_bad_dimension() {
        assert!(draw_random_subspace(2, 2, 0, 1).is_err());
        assert!(draw_random_subspace(2, 2, 5, 1).is_err());
    }

    #[test]
    fn draw_is_deterministic_in_seed() {
        let a = draw_random_subspace(4, 4, 6, 77).unwrap();
        let b = draw_random_subspace(4, 4, 6, 77).unwrap();
        let c = draw_random_subspace(4, 4, 6, 78).unwrap();
        assert_eq!(a.basis(), b.basis());
        assert_ne!(a.basis(), c.basis());
        assert_eq!(a.seed(), Some(77));
    }

    #[test]
    fn from_basis_rejects_non_orthonormal() {
        let basis = DenseMatrix::from_rows(&[&[1.0, 1.0, 0.0, 0.0]]);
        assert!(SubspaceOperator::from_basis(2, 2, basis).is_err());
    }
}
