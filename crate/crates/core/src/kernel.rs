//! Scalar kernels `p: ℝ≥0 → ℝ`, Gram matrices and positive-semidefiniteness.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::isometry::{Isometry, IsometryGroup};
use crate::metric::{FiniteMetricSpace, PointCloud};

/// Distances in a table kernel must match an entry to within this.
pub const TABLE_MATCH_TOL: f64 = 1e-12;

/// Default relative PSD tolerance.
pub const DEFAULT_PSD_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("table kernel has no entry for distance {0}")]
    TableMiss(f64),
    #[error("invalid kernel table: {0}")]
    BadTable(String),
    #[error("point index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("element {0} does not belong to the group")]
    MismatchedGroup(Isometry),
    #[error("empty selection")]
    EmptySelection,
    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, KernelError>;

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Gaussian,
    /// Sorted by distance.
    Table(Vec<(f64, f64)>),
}

/// A real function of distance, with what is known about its admissibility.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFunction {
    name: String,
    shape: Shape,
}

/// Admissibility record: `p(0) = 1` and the certified gap `sup{p(x) : x ≥ ε}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Admissibility {
    pub p0_is_one: bool,
    /// Whether `strict_sup_gap` is exact for every ε or only over the tabulated grid.
    pub gap_closed_form: bool,
}

impl KernelFunction {
    /// `p(x) = exp(-x²)`.
    pub fn gaussian() -> Self {
        Self { name: "gaussian".into(), shape: Shape::Gaussian }
    }

    /// Kernel defined only on the listed distances.
    pub fn table(name: impl Into<String>, mut entries: Vec<(f64, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(KernelError::BadTable("no entries".into()));
        }
        for &(d, v) in &entries {
            if !d.is_finite() || d < 0.0 || !v.is_finite() {
                return Err(KernelError::BadTable(format!("bad entry [{d}, {v}]")));
            }
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = entries.windows(2).find(|w| w[1].0 - w[0].0 <= TABLE_MATCH_TOL) {
            return Err(KernelError::BadTable(format!(
                "distances {} and {} are indistinguishable",
                w[0].0, w[1].0
            )));
        }
        Ok(Self { name: name.into(), shape: Shape::Table(entries) })
    }

    /// Table kernel from a JSON array of `[distance, value]` pairs.
    pub fn parse_table(name: impl Into<String>, text: &str) -> Result<Self> {
        let pairs: Vec<(f64, f64)> =
            serde_json::from_str(text).map_err(|e| KernelError::BadTable(e.to_string()))?;
        Self::table(name, pairs)
    }

    pub fn load_table(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| KernelError::Io(format!("{}: {e}", path.display())))?;
        Self::parse_table(format!("table:{}", path.display()), &text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match &self.shape {
            Shape::Gaussian => Ok((-x * x).exp()),
            Shape::Table(entries) => {
                // Entries are sorted and separated by more than the match tolerance,
                // so at most one can match.
                let i = entries.partition_point(|&(d, _)| d < x - TABLE_MATCH_TOL);
                match entries.get(i) {
                    Some(&(d, v)) if (d - x).abs() <= TABLE_MATCH_TOL => Ok(v),
                    _ => Err(KernelError::TableMiss(x)),
                }
            }
        }
    }

    pub fn admissibility(&self) -> Admissibility {
        Admissibility {
            p0_is_one: self.eval(0.0) == Ok(1.0),
            gap_closed_form: matches!(self.shape, Shape::Gaussian),
        }
    }

    /// Certified value of `sup{p(x) : x ≥ ε}`, present only when it is `< 1`.
    ///
    /// For the Gaussian this is `exp(-ε²)` by monotonicity. For a table it is
    /// the maximum over tabulated distances `≥ ε`, which is the whole domain the
    /// table can be evaluated on.
    pub fn strict_sup_gap(&self, epsilon: f64) -> Option<f64> {
        if !(epsilon > 0.0) {
            return None;
        }
        let sup = match &self.shape {
            Shape::Gaussian => (-epsilon * epsilon).exp(),
            Shape::Table(entries) => entries
                .iter()
                .filter(|&&(d, _)| d >= epsilon)
                .map(|&(_, v)| v)
                .reduce(f64::max)?,
        };
        (sup < 1.0).then_some(sup)
    }

    /// `|p(x)| ≤ 1` on the given samples (table kernels check their own entries).
    pub fn bounded_on(&self, samples: &[f64]) -> bool {
        match &self.shape {
            Shape::Gaussian => samples.iter().all(|&x| self.eval(x).is_ok_and(|v| v.abs() <= 1.0)),
            Shape::Table(entries) => entries.iter().all(|&(_, v)| v.abs() <= 1.0),
        }
    }
}

/// A real function on group elements.
pub trait GroupKernel {
    fn value(&self, g: &Isometry) -> Result<f64>;
}

/// Group kernel given by explicit values on the elements of one group.
#[derive(Debug, Clone)]
pub struct TabulatedGroupKernel {
    values: std::collections::HashMap<Isometry, f64>,
}

impl TabulatedGroupKernel {
    /// `values[k]` is the value on `group.element(k)`.
    pub fn new(group: &IsometryGroup, values: &[f64]) -> Self {
        assert_eq!(values.len(), group.order(), "one value per group element");
        Self {
            values: group.elements().iter().cloned().zip(values.iter().copied()).collect(),
        }
    }
}

impl GroupKernel for TabulatedGroupKernel {
    fn value(&self, g: &Isometry) -> Result<f64> {
        self.values.get(g).copied().ok_or_else(|| KernelError::MismatchedGroup(g.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdCertificate {
    pub min_eigenvalue: f64,
    pub tolerance: f64,
}

/// Symmetric matrix of kernel values.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
    source: String,
    psd_certificate: Option<PsdCertificate>,
}

impl GramMatrix {
    pub fn from_rows(rows: &[Vec<f64>], source: impl Into<String>) -> Self {
        let n = rows.len();
        Self {
            entries: DMatrix::from_fn(n, n, |i, j| rows[i][j]),
            source: source.into(),
            psd_certificate: None,
        }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn psd_certificate(&self) -> Option<&PsdCertificate> {
        self.psd_certificate.as_ref()
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries == self.entries.transpose()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// Eigenvalue check; attaches the certificate to the matrix.
    pub fn check_psd(&mut self, tol: f64) -> Result<PsdCheck> {
        let check = check_psd(&self.entries, tol)?;
        self.psd_certificate = Some(PsdCertificate {
            min_eigenvalue: check.min_eigenvalue,
            tolerance: tol,
        });
        Ok(check)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdCheck {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

/// PSD iff the smallest eigenvalue is `≥ -tol · (1 + max|entry|)`.
pub fn check_psd(m: &DMatrix<f64>, tol: f64) -> Result<PsdCheck> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "square matrix");
    if n == 0 {
        return Err(KernelError::EmptySelection);
    }
    for i in 0..n {
        for j in i + 1..n {
            if m[(i, j)] != m[(j, i)] {
                return Err(KernelError::NotSymmetric(i, j));
            }
        }
    }
    let scale = 1.0 + m.amax();
    let min_eigenvalue = SymmetricEigen::new(m.clone()).eigenvalues.min();
    Ok(PsdCheck {
        is_psd: min_eigenvalue >= -tol * scale,
        min_eigenvalue,
    })
}

/// `(p(d(a_i, a_j)))` over the selected points.
pub fn gram_on_points(p: &KernelFunction, space: &FiniteMetricSpace, indices: &[usize]) -> Result<GramMatrix> {
    if indices.is_empty() {
        return Err(KernelError::EmptySelection);
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= space.len()) {
        return Err(KernelError::IndexOutOfRange(bad));
    }
    let k = indices.len();
    let mut entries = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let v = p.eval(space.dist(indices[a], indices[b]))?;
            entries[(a, b)] = v;
            entries[(b, a)] = v;
        }
    }
    Ok(GramMatrix {
        entries,
        source: format!("{} on points {indices:?}", p.name()),
        psd_certificate: None,
    })
}

/// Gram matrix of a kernel on Euclidean distances of a cloud.
pub fn gram_on_cloud(p: &KernelFunction, cloud: &PointCloud) -> Result<GramMatrix> {
    let n = cloud.len();
    if n == 0 {
        return Err(KernelError::EmptySelection);
    }
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = p.eval(cloud.distance(i, j))?;
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(GramMatrix {
        entries,
        source: format!("{} on {n} points in R^{}", p.name(), cloud.dim()),
        psd_certificate: None,
    })
}

/// Gaussian Gram matrix `(exp(-‖x_i - x_j‖²))` of a cloud.
pub fn gaussian_gram(cloud: &PointCloud) -> GramMatrix {
    gram_on_cloud(&KernelFunction::gaussian(), cloud).expect("gaussian kernel is total")
}

/// `(p(g_i⁻¹ g_j))` over the selected elements.
pub fn gram_on_group<K: GroupKernel + ?Sized>(
    p: &K,
    group: &IsometryGroup,
    elements: &[Isometry],
) -> Result<GramMatrix> {
    if elements.is_empty() {
        return Err(KernelError::EmptySelection);
    }
    if let Some(g) = elements.iter().find(|g| !group.contains(g)) {
        return Err(KernelError::MismatchedGroup(g.clone()));
    }
    let k = elements.len();
    let inverses: Vec<Isometry> = elements.iter().map(Isometry::inverse).collect();
    let mut entries = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let h = inverses[i].compose(&elements[j]).expect("same group");
            entries[(i, j)] = p.value(&h)?;
        }
    }
    Ok(GramMatrix {
        entries,
        source: format!("group kernel on {k} elements"),
        psd_certificate: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub min_eigenvalue: f64,
}

/// Outcome of a batch of PSD checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdReport {
    pub claim: String,
    pub trials: usize,
    pub failures: Vec<TrialFailure>,
    pub min_eigenvalue_overall: f64,
    pub tolerance: f64,
}

impl PsdReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Random Gaussian Gram matrices on clouds uniform in `[-1, 1]^k`.
pub fn verify_gaussian_psd(k: usize, n: usize, trials: usize, seed: u64, tol: f64) -> PsdReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut min_overall = f64::INFINITY;
    for trial in 0..trials {
        let points = (0..n)
            .map(|_| (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect();
        let cloud = PointCloud::new(points).expect("uniform dimension");
        let check = check_psd(gaussian_gram(&cloud).entries(), tol).expect("symmetric by construction");
        min_overall = min_overall.min(check.min_eigenvalue);
        if !check.is_psd {
            failures.push(TrialFailure { trial, min_eigenvalue: check.min_eigenvalue });
        }
    }
    PsdReport {
        claim: format!("gaussian gram matrices of {n} random points in R^{k} are positive semidefinite"),
        trials,
        failures,
        min_eigenvalue_overall: min_overall,
        tolerance: tol,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BochnerPoint {
    pub x: f64,
    pub real: f64,
    pub imag: f64,
    pub expected: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BochnerReport {
    pub claim: String,
    pub halfwidth: f64,
    pub step: f64,
    pub points: Vec<BochnerPoint>,
    pub max_deviation: f64,
    pub max_imag: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Trapezoid-rule transform `∫ exp(-2πixy) exp(-πy²) dy` on `[-h, h]`, as `(re, im)`.
///
/// The step is adjusted down so that it divides `2h` evenly.
pub fn gaussian_fourier_transform(x: f64, halfwidth: f64, step: f64) -> (f64, f64) {
    use std::f64::consts::PI;
    let intervals = ((2.0 * halfwidth) / step).ceil().max(1.0) as usize;
    let h = 2.0 * halfwidth / intervals as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for m in 0..=intervals {
        let y = -halfwidth + m as f64 * h;
        let w = if m == 0 || m == intervals { 0.5 } else { 1.0 };
        let density = (-PI * y * y).exp();
        let phase = 2.0 * PI * x * y;
        re += w * phase.cos() * density;
        im -= w * phase.sin() * density;
    }
    (re * h, im * h)
}

/// Compare the numerical transform of `exp(-πy²)` with `exp(-πx²)` on a grid.
pub fn bochner_self_duality_check(grid: &[f64], halfwidth: f64, step: f64, tol: f64) -> BochnerReport {
    assert!(step > 0.0 && halfwidth > 0.0, "positive quadrature parameters");
    let points: Vec<BochnerPoint> = grid
        .iter()
        .map(|&x| {
            let (real, imag) = gaussian_fourier_transform(x, halfwidth, step);
            let expected = (-std::f64::consts::PI * x * x).exp();
            BochnerPoint { x, real, imag, expected, deviation: (real - expected).abs() }
        })
        .collect();
    let max_deviation = points.iter().map(|p| p.deviation).fold(0.0, f64::max);
    let max_imag = points.iter().map(|p| p.imag.abs()).fold(0.0, f64::max);
    BochnerReport {
        claim: "exp(-pi x^2) is the Fourier transform of the density exp(-pi y^2)".into(),
        halfwidth,
        step,
        points,
        max_deviation,
        max_imag,
        tolerance: tol,
        pass: max_deviation <= tol && max_imag <= tol,
    }
}
