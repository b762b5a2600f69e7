//! Linear algebra on tangent spaces: mininorm, restricted norms and
//! determinants, orthonormal frames and the distance between subspaces.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tangent maps with `|det|` at or below this are treated as singular.
pub const DET_FLOOR: f64 = 1e-12;
/// Smallest admissible principal angle between `E` and `F`.
pub const ANGLE_FLOOR: f64 = 1e-8;
/// Orthonormality tolerance for subspace frames.
pub const FRAME_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("linear map has non-finite entries"));
        }
        Ok(Self { matrix })
    }

    /// Builds from row-major data. Panics if `data.len() != rows * cols`.
    pub fn from_rows(rows: usize, cols: usize, data: &[f64]) -> Self {
        Self {
            matrix: DMatrix::from_row_slice(rows, cols, data),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        Self {
            matrix: DMatrix::from_diagonal(&DVector::from_column_slice(entries)),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * v
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &LinearMap) -> LinearMap {
        LinearMap {
            matrix: &self.matrix * &inner.matrix,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    fn check_invertible(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                got: self.cols(),
            });
        }
        let det = self.determinant();
        if det.abs() <= DET_FLOOR {
            return Err(Error::SingularMap { det, floor: DET_FLOOR });
        }
        Ok(())
    }

    pub fn inverse(&self) -> Result<LinearMap> {
        self.check_invertible()?;
        let inv = self.matrix.clone().try_inverse().ok_or(Error::SingularMap {
            det: self.determinant(),
            floor: DET_FLOOR,
        })?;
        Ok(LinearMap { matrix: inv })
    }

    /// Solves `self · X = rhs`.
    pub fn solve(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_invertible()?;
        self.matrix.clone().lu().solve(rhs).ok_or(Error::SingularMap {
            det: self.determinant(),
            floor: DET_FLOOR,
        })
    }
}

fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    if m.ncols() == 1 {
        return DVector::from_element(1, m.column(0).norm());
    }
    m.clone().singular_values()
}

fn largest_singular(m: &DMatrix<f64>) -> f64 {
    singular_values(m).max()
}

fn smallest_singular(m: &DMatrix<f64>) -> f64 {
    singular_values(m).min()
}

pub fn operator_norm(a: &LinearMap) -> f64 {
    largest_singular(a.matrix())
}

/// `m(A) = inf ‖Av‖/‖v‖`, the smallest singular value of an invertible map.
pub fn mininorm(a: &LinearMap) -> Result<f64> {
    a.check_invertible()?;
    Ok(smallest_singular(a.matrix()))
}

/// A linear subspace stored as a matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    frame: DMatrix<f64>,
}

impl Subspace {
    /// Orthonormalizes the columns of `spanning` (thin QR). Fails if they are
    /// numerically dependent.
    pub fn from_spanning(spanning: DMatrix<f64>) -> Result<Self> {
        let (n, k) = spanning.shape();
        if k == 0 || k > n {
            return Err(Error::invalid(format!(
                "subspace of dimension {k} in ambient dimension {n}"
            )));
        }
        if spanning.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("subspace spanning set is not finite"));
        }
        let scale = spanning.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::invalid("subspace spanned by zero vectors"));
        }
        if k == 1 {
            let v = spanning.column(0) / scale;
            let norm = v.norm();
            return Ok(Self {
                frame: DMatrix::from_column_slice(n, 1, (v / norm).as_slice()),
            });
        }
        let qr = (spanning / scale).qr();
        let r = qr.r();
        let rmax = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        if (0..k).any(|i| r[(i, i)].abs() <= 1e-13 * rmax.max(1e-300)) {
            return Err(Error::invalid("subspace spanning set is rank deficient"));
        }
        Ok(Self { frame: qr.q() })
    }

    pub fn from_vector(v: &DVector<f64>) -> Result<Self> {
        Self::from_spanning(DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
    }

    pub fn from_vectors(vs: &[DVector<f64>]) -> Result<Self> {
        let n = vs.first().map(|v| v.len()).unwrap_or(0);
        if vs.iter().any(|v| v.len() != n) {
            return Err(Error::invalid("spanning vectors differ in length"));
        }
        Self::from_spanning(DMatrix::from_columns(vs))
    }

    /// Wraps a frame that is already orthonormal (checked to `FRAME_TOL`).
    pub fn from_orthonormal(frame: DMatrix<f64>) -> Result<Self> {
        let k = frame.ncols();
        let gram = frame.transpose() * &frame;
        let err = (gram - DMatrix::<f64>::identity(k, k)).amax();
        if err > FRAME_TOL {
            return Err(Error::invalid(format!("frame is not orthonormal (error {err:e})")));
        }
        Ok(Self { frame })
    }

    /// Span of the listed coordinate axes.
    pub fn coordinate(ambient: usize, axes: &[usize]) -> Self {
        let mut frame = DMatrix::zeros(ambient, axes.len());
        for (col, &axis) in axes.iter().enumerate() {
            frame[(axis, col)] = 1.0;
        }
        Self { frame }
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.frame.nrows()
    }

    /// First basis vector; for lines this is the unit direction.
    pub fn direction(&self) -> DVector<f64> {
        self.frame.column(0).into_owned()
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.frame * self.frame.transpose()
    }

    pub fn orthogonal_complement(&self) -> Result<Subspace> {
        let n = self.ambient();
        let k = self.dim();
        if k == n {
            return Err(Error::invalid("full space has no proper complement"));
        }
        let residual = DMatrix::<f64>::identity(n, n) - self.projector();
        // Pick the n-k residual columns of largest norm and orthonormalize.
        let mut cols: Vec<(usize, f64)> = (0..n).map(|j| (j, residual.column(j).norm())).collect();
        cols.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let picked: Vec<DVector<f64>> = cols
            .iter()
            .take(n - k)
            .map(|&(j, _)| residual.column(j).into_owned())
            .collect();
        Subspace::from_vectors(&picked)
    }

    /// Image `A·S`, re-orthonormalized.
    pub fn image(&self, a: &LinearMap) -> Result<Subspace> {
        if a.cols() != self.ambient() {
            return Err(Error::DimensionMismatch {
                expected: a.cols(),
                got: self.ambient(),
            });
        }
        Subspace::from_spanning(a.matrix() * &self.frame)
    }

    /// Preimage `A⁻¹·S`, re-orthonormalized.
    pub fn preimage(&self, a: &LinearMap) -> Result<Subspace> {
        Subspace::from_spanning(a.solve(&self.frame)?)
    }

    /// Distance of a vector to this subspace.
    pub fn distance_to(&self, v: &DVector<f64>) -> f64 {
        (v - self.projector() * v).norm()
    }
}

fn check_same_ambient(a: &Subspace, b: &Subspace) -> Result<()> {
    if a.ambient() != b.ambient() {
        return Err(Error::DimensionMismatch {
            expected: a.ambient(),
            got: b.ambient(),
        });
    }
    Ok(())
}

/// `max_{u ∈ A, ‖u‖=1} dist(u, B)`.
fn one_sided_gap(a: &Subspace, b: &Subspace) -> f64 {
    let n = a.ambient();
    let residual = (DMatrix::<f64>::identity(n, n) - b.projector()) * a.frame();
    largest_singular(&residual).min(1.0)
}

/// `dist(A,B) = max{max_{u∈A} dist(u,B), max_{v∈B} dist(v,A)}` over unit
/// vectors. For equal dimensions this is the sine of the largest principal
/// angle.
pub fn subspace_distance(a: &Subspace, b: &Subspace) -> Result<f64> {
    check_same_ambient(a, b)?;
    Ok(one_sided_gap(a, b).max(one_sided_gap(b, a)))
}

/// Sine of the smallest principal angle between two subspaces.
pub fn min_principal_angle_sine(a: &Subspace, b: &Subspace) -> Result<f64> {
    check_same_ambient(a, b)?;
    let cross = a.frame().transpose() * b.frame();
    let cos_max = largest_singular(&cross).min(1.0);
    Ok((1.0 - cos_max * cos_max).max(0.0).sqrt())
}

/// `‖A|S‖`: largest singular value of `A` composed with the frame of `S`.
pub fn restricted_norm(a: &LinearMap, s: &Subspace) -> Result<f64> {
    if a.cols() != s.ambient() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            got: s.ambient(),
        });
    }
    Ok(largest_singular(&(a.matrix() * s.frame())))
}

/// `m(A|S)`: smallest singular value of `A` composed with the frame of `S`.
pub fn restricted_mininorm(a: &LinearMap, s: &Subspace) -> Result<f64> {
    if a.cols() != s.ambient() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            got: s.ambient(),
        });
    }
    Ok(smallest_singular(&(a.matrix() * s.frame())))
}

/// Volume expansion `√det(MᵀM)` with `M = A·frame(S)`.
pub fn restricted_det(a: &LinearMap, s: &Subspace) -> Result<f64> {
    if a.cols() != s.ambient() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            got: s.ambient(),
        });
    }
    let value = singular_values(&(a.matrix() * s.frame())).product();
    if !(value > DET_FLOOR) {
        return Err(Error::DegenerateImage { value });
    }
    Ok(value)
}

/// Splits `v = v_E + v_F` along a (generally oblique) direct sum by solving
/// the joint-frame system.
pub fn oblique_decompose(v: &DVector<f64>, e: &Subspace, f: &Subspace) -> Result<(DVector<f64>, DVector<f64>)> {
    check_same_ambient(e, f)?;
    if v.len() != e.ambient() || e.dim() + f.dim() != e.ambient() {
        return Err(Error::DimensionMismatch {
            expected: e.ambient(),
            got: v.len(),
        });
    }
    let angle = min_principal_angle_sine(e, f)?;
    if angle < ANGLE_FLOOR {
        return Err(Error::DegenerateSplitting { angle });
    }
    let joint = DMatrix::from_columns(
        &e.frame()
            .column_iter()
            .chain(f.frame().column_iter())
            .map(|c| c.into_owned())
            .collect::<Vec<_>>(),
    );
    let coeffs = joint.lu().solve(v).ok_or(Error::DegenerateSplitting { angle })?;
    let k = e.dim();
    let v_e = e.frame() * coeffs.rows(0, k);
    let v_f = f.frame() * coeffs.rows(k, f.dim());
    Ok((v_e, v_f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cat() -> LinearMap {
        LinearMap::from_rows(2, 2, &[2.0, 1.0, 1.0, 1.0])
    }

    fn unstable_line() -> Subspace {
        // eigenvector of [[2,1],[1,1]] for (3+√5)/2
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        Subspace::from_vector(&DVector::from_vec(vec![golden, 1.0])).unwrap()
    }

    #[test]
    fn mininorm_examples() {
        assert_relative_eq!(mininorm(&LinearMap::identity(2)).unwrap(), 1.0);
        assert_relative_eq!(mininorm(&LinearMap::diagonal(&[3.0, 0.5])).unwrap(), 0.5);
        assert_relative_eq!(mininorm(&cat()).unwrap(), (3.0 - 5f64.sqrt()) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn mininorm_rejects_singular() {
        let m = LinearMap::from_rows(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(mininorm(&m), Err(Error::SingularMap { .. })));
    }

    #[test]
    fn subspace_distance_examples() {
        let e1 = Subspace::coordinate(2, &[0]);
        let e2 = Subspace::coordinate(2, &[1]);
        assert_eq!(subspace_distance(&e1, &e1).unwrap(), 0.0);
        assert_relative_eq!(subspace_distance(&e1, &e2).unwrap(), 1.0);
        let t: f64 = 0.3;
        let tilted = Subspace::from_vector(&DVector::from_vec(vec![t.cos(), t.sin()])).unwrap();
        assert_relative_eq!(
            subspace_distance(&e1, &tilted).unwrap(),
            0.29552020666133955,
            epsilon = 1e-14
        );
    }

    #[test]
    fn subspace_distance_rejects_ambient_mismatch() {
        let a = Subspace::coordinate(2, &[0]);
        let b = Subspace::coordinate(3, &[0]);
        assert!(matches!(
            subspace_distance(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unequal_dimensions_have_distance_one() {
        let line = Subspace::coordinate(3, &[0]);
        let plane = Subspace::coordinate(3, &[0, 1]);
        assert_relative_eq!(subspace_distance(&line, &plane).unwrap(), 1.0);
    }

    #[test]
    fn restricted_norm_examples() {
        let s = Subspace::coordinate(2, &[1]);
        assert_relative_eq!(restricted_norm(&LinearMap::identity(2), &s).unwrap(), 1.0);
        assert_relative_eq!(restricted_norm(&LinearMap::diagonal(&[3.0, 0.5]), &s).unwrap(), 0.5);
        assert_relative_eq!(
            restricted_norm(&cat(), &unstable_line()).unwrap(),
            (3.0 + 5f64.sqrt()) / 2.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn restricted_det_examples() {
        let full = Subspace::coordinate(2, &[0, 1]);
        assert_relative_eq!(restricted_det(&LinearMap::identity(2), &full).unwrap(), 1.0);
        assert_relative_eq!(
            restricted_det(&LinearMap::diagonal(&[2.0, 3.0]), &full).unwrap(),
            6.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            restricted_det(&cat(), &unstable_line()).unwrap(),
            2.618033988749895,
            epsilon = 1e-14
        );
        let degenerate = LinearMap::from_rows(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            restricted_det(&degenerate, &Subspace::coordinate(2, &[1])),
            Err(Error::DegenerateImage { .. })
        ));
    }

    #[test]
    fn oblique_decomposition_reconstructs() {
        let e = Subspace::from_vector(&DVector::from_vec(vec![1.0, 0.2])).unwrap();
        let f = Subspace::from_vector(&DVector::from_vec(vec![0.3, 1.0])).unwrap();
        let v = DVector::from_vec(vec![0.7, -1.3]);
        let (ve, vf) = oblique_decompose(&v, &e, &f).unwrap();
        assert_relative_eq!((ve.clone() + vf.clone() - &v).norm(), 0.0, epsilon = 1e-14);
        assert!(e.distance_to(&ve) < 1e-14);
        assert!(f.distance_to(&vf) < 1e-14);
    }

    #[test]
    fn complement_is_orthogonal() {
        let s = Subspace::from_vector(&DVector::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
        let c = s.orthogonal_complement().unwrap();
        assert_eq!(c.dim(), 2);
        assert!((s.frame().transpose() * c.frame()).amax() < 1e-14);
    }
}
