use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{QbkixConfig, QbkixOperator, Side};
use crate::geometry::PanelMesh;
use crate::kernels::{KernelSpec, Layer};
use crate::quadrature::{check_density, nystrom_apply, nystrom_matrix};
use crate::solver::gmres::schur_eigenvalues;

/// Largest `N cdim` accepted by [`materialize_operator`].
pub const DENSE_LIMIT: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    DoubleLayer,
    /// `D + i omega S`.
    CombinedField,
}

/// How the on-surface operator is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApplyMode {
    DirectNystrom,
    QbkixOneSided,
    /// One-sided from the exterior limit.
    QbkixOneSidedExterior,
    QbkixTwoSided,
}

impl ApplyMode {
    pub const ALL: [ApplyMode; 4] =
        [ApplyMode::DirectNystrom, ApplyMode::QbkixOneSided, ApplyMode::QbkixOneSidedExterior, ApplyMode::QbkixTwoSided];

    pub fn side(&self) -> Option<Side> {
        match self {
            ApplyMode::DirectNystrom => None,
            ApplyMode::QbkixOneSided => Some(Side::Interior),
            ApplyMode::QbkixOneSidedExterior => Some(Side::Exterior),
            ApplyMode::QbkixTwoSided => Some(Side::TwoSided),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ApplyMode::DirectNystrom => "direct",
            ApplyMode::QbkixOneSided => "one-sided",
            ApplyMode::QbkixOneSidedExterior => "one-sided-exterior",
            ApplyMode::QbkixTwoSided => "two-sided",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CornerHandling {
    #[default]
    None,
    /// Symmetric scaling by the square roots of the quadrature weights.
    SqrtWeight,
}

/// What is being solved and how the operator is applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Formulation {
    pub spec: KernelSpec,
    pub representation: Representation,
    pub mode: ApplyMode,
    #[serde(default)]
    pub corners: CornerHandling,
    #[serde(default)]
    pub qbkix: QbkixConfig,
}

impl Formulation {
    /// Double layer, or the combined field for Helmholtz.
    pub fn new(spec: KernelSpec, mode: ApplyMode) -> Self {
        let representation = match spec {
            KernelSpec::Helmholtz { .. } => Representation::CombinedField,
            _ => Representation::DoubleLayer,
        };
        Self { spec, representation, mode, corners: CornerHandling::None, qbkix: QbkixConfig::default() }
    }

    pub fn with_qbkix(mut self, cfg: QbkixConfig) -> Self {
        self.qbkix = cfg;
        self
    }

    pub fn layer(&self) -> Layer {
        match self.representation {
            Representation::DoubleLayer => Layer::Double,
            Representation::CombinedField => Layer::Combined,
        }
    }

    /// Expansion parameters with the side implied by the mode.
    pub fn qbkix_config(&self) -> QbkixConfig {
        let side = self.mode.side().unwrap_or(self.qbkix.side);
        self.qbkix.clone().with_side(side)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.representation == Representation::CombinedField && !matches!(self.spec, KernelSpec::Helmholtz { .. }) {
            return Err(Error::UnsupportedFamily { family: self.spec.name(), what: "combined-field representation" });
        }
        if self.mode == ApplyMode::DirectNystrom && !self.spec.supports_direct_nystrom() {
            return Err(Error::UnsupportedFamily { family: self.spec.name(), what: "direct Nystrom" });
        }
        if self.mode == ApplyMode::DirectNystrom && self.representation != Representation::DoubleLayer {
            return Err(Error::UnsupportedFamily { family: self.spec.name(), what: "direct Nystrom of a combined field" });
        }
        self.qbkix.validate()
    }
}

/// `-1/2 phi + K phi` on a fixed mesh, ready for repeated products.
///
/// Direct mode forms rows on the fly; QBKIX modes precompute a dense matrix.
pub struct BoundaryOperator<'a> {
    mesh: &'a PanelMesh,
    spec: KernelSpec,
    dense: Option<DMatrix<f64>>,
}

impl<'a> BoundaryOperator<'a> {
    pub fn new(form: &Formulation, mesh: &'a PanelMesh) -> Result<Self> {
        form.validate()?;
        let dense = match form.mode {
            ApplyMode::DirectNystrom => None,
            _ => Some(QbkixOperator::build(mesh, &form.spec, form.layer(), &form.qbkix_config())?.matrix),
        };
        Ok(Self { mesh, spec: form.spec, dense })
    }

    pub fn dim(&self) -> usize {
        self.mesh.num_nodes() * self.spec.cdim()
    }

    pub fn apply(&self, density: &[f64]) -> Result<Vec<f64>> {
        check_density(self.mesh.num_nodes(), &self.spec, density)?;
        match &self.dense {
            None => nystrom_apply(self.mesh, &self.spec, density),
            Some(m) => Ok((m * DVector::from_column_slice(density)).as_slice().to_vec()),
        }
    }

    /// Dense copy of the operator.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        match &self.dense {
            None => nystrom_matrix(self.mesh, &self.spec),
            Some(m) => Ok(m.clone()),
        }
    }
}

/// One-off product with the boundary operator.
pub fn apply_operator(form: &Formulation, mesh: &PanelMesh, density: &[f64]) -> Result<Vec<f64>> {
    BoundaryOperator::new(form, mesh)?.apply(density)
}

/// Dense matrix of the boundary operator; refuses more than [`DENSE_LIMIT`] unknowns.
pub fn materialize_operator(form: &Formulation, mesh: &PanelMesh) -> Result<DMatrix<f64>> {
    let size = mesh.num_nodes() * form.spec.cdim();
    if size > DENSE_LIMIT {
        return Err(Error::SizeGuard { size, limit: DENSE_LIMIT });
    }
    BoundaryOperator::new(form, mesh)?.to_matrix()
}

/// Eigenvalues `(re, im)` sorted by real then imaginary part.
pub fn eigenvalues(matrix: &DMatrix<f64>) -> Result<Vec<[f64; 2]>> {
    if !matrix.is_square() {
        return Err(Error::InvalidArgument("eigenvalues need a square matrix".into()));
    }
    if matrix.nrows() > DENSE_LIMIT {
        return Err(Error::SizeGuard { size: matrix.nrows(), limit: DENSE_LIMIT });
    }
    schur_eigenvalues(matrix.clone()).ok_or_else(|| Error::Numeric("eigenvalue iteration did not converge".into()))
}
