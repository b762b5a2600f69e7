use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dynamics::{Chart, LinearMap, MapSystem, Point, Splitting, SplittingKind, Subspace, SystemConstants};
use crate::error::{Error, Result};

/// A toral automorphism `x ↦ Ax mod 1` for a symmetric unimodular integer
/// matrix, with the eigenspace splitting. `F` is spanned by the `dim_f`
/// eigenvectors of largest modulus unless `swap` puts it on the smallest.
#[derive(Clone, Debug)]
pub struct LinearTorusMap {
    name: String,
    chart: Chart,
    matrix: LinearMap,
    inverse: LinearMap,
    splitting: Splitting,
    dim_f: usize,
    constants: SystemConstants,
}

impl LinearTorusMap {
    pub fn new(name: &str, rows: &[&[i64]], dim_f: usize, f_on_largest: bool) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) || dim_f == 0 || dim_f >= n {
            return Err(Error::ConstructionFailed(format!(
                "{name}: need a square matrix and 0 < dim F < {n}"
            )));
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j] as f64);
        if m != m.transpose() {
            return Err(Error::ConstructionFailed(format!("{name}: matrix must be symmetric")));
        }
        let matrix = LinearMap::new(m.clone())?;
        let det = matrix.determinant().round();
        if det.abs() != 1.0 {
            return Err(Error::ConstructionFailed(format!(
                "{name}: determinant {det} is not ±1"
            )));
        }
        let inverse = matrix.inverse()?;
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .abs()
                .partial_cmp(&eig.eigenvalues[b].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        if f_on_largest {
            order.reverse();
        }
        let column = |k: usize| eig.eigenvectors.column(k).into_owned();
        let f_cols: Vec<DVector<f64>> = order[..dim_f].iter().map(|&k| column(k)).collect();
        let e_cols: Vec<DVector<f64>> = order[dim_f..].iter().map(|&k| column(k)).collect();
        let splitting = Splitting::new(Subspace::from_vectors(&e_cols)?, Subspace::from_vectors(&f_cols)?)?;
        let f_moduli: Vec<f64> = order[..dim_f].iter().map(|&k| eig.eigenvalues[k].abs()).collect();
        let b = f_moduli.iter().copied().fold(f64::INFINITY, f64::min);
        let top = f_moduli.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            name: name.to_string(),
            chart: Chart::Torus { dim: n },
            matrix,
            inverse,
            splitting,
            dim_f,
            constants: SystemConstants {
                b,
                c0: b.ln().abs().max(top.ln().abs()),
                beta: 1.0,
                xi: 1.0,
            },
        })
    }

    /// `[[2, 1], [1, 1]]` with `F` the unstable eigenline.
    pub fn cat() -> Self {
        Self::new("cat", &[&[2, 1], &[1, 1]], 1, true).expect("cat matrix is valid")
    }

    /// The cat map with the roles of the eigenlines exchanged, so that `F`
    /// is contracted: `‖Df⁻¹|F‖ = λ_u > 1` and no time is hyperbolic.
    pub fn contracting_f_toy() -> Self {
        Self::new("contracting_f_toy", &[&[2, 1], &[1, 1]], 1, false).expect("cat matrix is valid")
    }

    /// A three-dimensional automorphism with a two-dimensional `F`
    /// (eigenvalues ≈ 0.198, 1.555, 3.247).
    pub fn three_dim() -> Self {
        Self::new("three_dim", &[&[1, 1, 0], &[1, 2, 1], &[0, 1, 2]], 2, true).expect("matrix is valid")
    }

    /// The identity of `T^dim` with the coordinate splitting `E = e_1, F = rest`.
    pub fn identity(dim: usize) -> Self {
        let axes_f: Vec<usize> = (1..dim).collect();
        Self {
            name: "identity".to_string(),
            chart: Chart::Torus { dim },
            matrix: LinearMap::identity(dim),
            inverse: LinearMap::identity(dim),
            splitting: Splitting::new(Subspace::coordinate(dim, &[0]), Subspace::coordinate(dim, &axes_f))
                .expect("coordinate splitting"),
            dim_f: dim - 1,
            constants: SystemConstants {
                b: 1.0,
                c0: 0.0,
                beta: 1.0,
                xi: 1.0,
            },
        }
    }

    pub fn matrix(&self) -> &LinearMap {
        &self.matrix
    }
}

impl MapSystem for LinearTorusMap {
    fn name(&self) -> &str {
        &self.name
    }

    fn chart(&self) -> &Chart {
        &self.chart
    }

    fn dim_f(&self) -> usize {
        self.dim_f
    }

    fn forward(&self, x: &Point) -> Point {
        self.chart.wrapped(self.matrix.apply(x.coords()))
    }

    fn inverse(&self, x: &Point) -> Point {
        self.chart.wrapped(self.inverse.apply(x.coords()))
    }

    fn tangent(&self, _x: &Point) -> LinearMap {
        self.matrix.clone()
    }

    fn forward_offset(&self, _x: &Point, delta: &DVector<f64>) -> DVector<f64> {
        self.matrix.apply(delta)
    }

    fn splitting(&self, _x: &Point) -> Result<Splitting> {
        Ok(self.splitting.clone())
    }

    fn splitting_kind(&self) -> SplittingKind {
        SplittingKind::Exact
    }

    fn constants(&self) -> &SystemConstants {
        &self.constants
    }
}

/// The cat map `[[2, 1], [1, 1]]` on `T²`.
#[derive(Clone, Debug)]
pub struct Cat {
    inner: LinearTorusMap,
}

impl Cat {
    pub fn new() -> Self {
        Self {
            inner: LinearTorusMap::cat(),
        }
    }

    pub fn lambda_u() -> f64 {
        (3.0 + 5f64.sqrt()) / 2.0
    }

    pub fn lambda_s() -> f64 {
        (3.0 - 5f64.sqrt()) / 2.0
    }

    pub fn as_linear(&self) -> &LinearTorusMap {
        &self.inner
    }
}

impl Default for Cat {
    fn default() -> Self {
        Self::new()
    }
}

impl MapSystem for Cat {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn chart(&self) -> &Chart {
        self.inner.chart()
    }

    fn dim_f(&self) -> usize {
        1
    }

    fn forward(&self, x: &Point) -> Point {
        self.inner.forward(x)
    }

    fn inverse(&self, x: &Point) -> Point {
        self.inner.inverse(x)
    }

    fn tangent(&self, x: &Point) -> LinearMap {
        self.inner.tangent(x)
    }

    fn forward_offset(&self, x: &Point, delta: &DVector<f64>) -> DVector<f64> {
        self.inner.forward_offset(x, delta)
    }

    fn splitting(&self, x: &Point) -> Result<Splitting> {
        self.inner.splitting(x)
    }

    fn splitting_kind(&self) -> SplittingKind {
        SplittingKind::Exact
    }

    fn constants(&self) -> &SystemConstants {
        self.inner.constants()
    }
}
