use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::cli::studies::SpectrumOptions;
use crate::error::{Error, Result};
use crate::expansion::QbkixConfig;
use crate::fieldeval::{GridSpec, SourceLayout};
use crate::geometry::CurveShape;
use crate::kernels::KernelSpec;
use crate::solver::{ApplyMode, CornerHandling, GmresOptions, MeshMode};

/// Everything a run needs. Every field has a default, so an empty file is
/// a valid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: String,
    pub output: PathBuf,
    pub curve: CurveShape,
    pub kernel: KernelSpec,
    pub mesh: MeshMode,
    pub qbkix: QbkixConfig,
    pub gmres: GmresOptions,
    pub grid: GridSpec,
    pub sources: SourceLayout,
    pub convergence: ConvergenceSection,
    pub spectrum: SpectrumOptions,
    pub singvals: SingvalsSection,
    pub field: FieldSection,
    pub corner: CornerSection,
    pub params: ParamsSection,
    pub check: CheckSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: "qbkix".into(),
            output: PathBuf::from("qbkix-out"),
            curve: CurveShape::Star { r0: 1.0, amp: 0.2, freq: 3 },
            kernel: KernelSpec::Laplace,
            mesh: MeshMode::default(),
            qbkix: QbkixConfig::default(),
            gmres: GmresOptions::default(),
            grid: GridSpec::default(),
            sources: SourceLayout::default(),
            convergence: ConvergenceSection::default(),
            spectrum: SpectrumOptions::default(),
            singvals: SingvalsSection::default(),
            field: FieldSection::default(),
            corner: CornerSection::default(),
            params: ParamsSection::default(),
            check: CheckSection::default(),
        }
    }
}

/// One kernel with its own list of panel counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceCase {
    pub kernel: KernelSpec,
    pub panels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSection {
    /// Panel counts for the top-level kernel; ignored when `cases` is set.
    pub panels: Vec<usize>,
    pub modes: Vec<ApplyMode>,
    pub cases: Vec<ConvergenceCase>,
    pub test_points: usize,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        Self {
            panels: vec![6, 8, 10, 12],
            modes: vec![ApplyMode::QbkixOneSided, ApplyMode::QbkixTwoSided],
            cases: Vec::new(),
            test_points: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingvalsSection {
    pub kernels: Vec<KernelSpec>,
    pub n_p: usize,
    pub n_c: usize,
    pub r_ratios: Vec<f64>,
}

impl Default for SingvalsSection {
    fn default() -> Self {
        Self { kernels: vec![KernelSpec::Laplace, KernelSpec::Stokes], n_p: 128, n_c: 256, r_ratios: vec![6.0, 8.0, 10.0] }
    }
}

/// Boundary data of a field run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldData {
    /// Fundamental solutions placed outside the domain (`[sources]`).
    Sources,
    /// The polynomial Stokes flow `u = (y^3, x^3)`, `p = 6xy`.
    CubicStokes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    pub mode: ApplyMode,
    pub data: FieldData,
    /// Use QBKIX for cells near the boundary; smooth quadrature otherwise.
    pub near_qbkix: bool,
}

impl Default for FieldSection {
    fn default() -> Self {
        Self { mode: ApplyMode::QbkixTwoSided, data: FieldData::Sources, near_qbkix: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CornerSection {
    pub eps_r: f64,
    pub eps_a: f64,
    pub q: usize,
    pub max_iter: usize,
    pub handling: CornerHandling,
    /// Also solve with the other corner handling and report its Ritz values.
    pub compare: bool,
    /// Grid cells closer than this to a corner are left out of the error.
    pub exclusion: f64,
    pub mode: ApplyMode,
}

impl Default for CornerSection {
    fn default() -> Self {
        Self {
            eps_r: 1e-6,
            eps_a: 1e-11,
            q: 16,
            max_iter: 200,
            handling: CornerHandling::SqrtWeight,
            compare: true,
            exclusion: 0.05,
            mode: ApplyMode::QbkixTwoSided,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub eps: f64,
    pub q: usize,
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self { eps: 1e-10, q: 16 }
    }
}

/// Thresholds used by `--check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    /// Largest acceptable error (absolute, not log10).
    pub max_error: f64,
    /// Allowed decades between singular values and their model.
    pub singvals_decades: f64,
    /// Allowed extra iterations of two-sided over direct in the spectrum run.
    pub iteration_slack: usize,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self { max_error: 1e-6, singvals_decades: 1.5, iteration_slack: 2 }
    }
}

/// Parses a `section.key=value` override. The value is read as a TOML
/// value and taken as a bare string when that fails.
pub fn parse_override(spec: &str) -> Result<(Vec<String>, Value)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not of the form key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override `{spec}` has an empty key segment")));
    }
    let raw = raw.trim();
    let value = match toml::from_str::<Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    };
    Ok((path, value))
}

/// Keys that select an enum variant. Changing one discards the sibling keys,
/// which belong to the old variant.
const TAG_KEYS: [&str; 3] = ["shape", "family", "mode"];

fn switches_variant(table: &Table, key: &str, value: &Value) -> bool {
    TAG_KEYS.contains(&key) && table.get(key).is_some_and(|old| old != value)
}

/// Recursively lays `top` over `base`.
fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => {
                let replace = TAG_KEYS.iter().any(|tag| t.get(*tag).is_some_and(|v| switches_variant(b, tag, v)));
                if replace {
                    *b = t;
                } else {
                    merge(b, t);
                }
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn apply_override(table: &mut Table, path: &[String], value: Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut t = table;
    for p in parents {
        let entry = t.entry(p.clone()).or_insert_with(|| Value::Table(Table::new()));
        t = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override path `{}` passes through a non-table value", path.join("."))))?;
    }
    if switches_variant(t, last, &value) {
        t.clear();
    }
    t.insert(last.clone(), value);
    Ok(())
}

impl RunConfig {
    /// Parses config text over the defaults and applies `section.key=value`
    /// overrides in order.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let user: Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut table = Table::try_from(RunConfig::default()).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut table, user);
        for o in overrides {
            let (path, value) = parse_override(o)?;
            apply_override(&mut table, &path, value)?;
        }
        let cfg: RunConfig = Table::try_into(table).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.qbkix.validate()?;
        self.gmres.validate()?;
        if self.sources.count == 0 || !(self.sources.radius_factor > 1.0) {
            return Err(Error::Config("sources need count >= 1 and radius_factor > 1".into()));
        }
        if !(self.corner.exclusion >= 0.0) {
            return Err(Error::Config("corner.exclusion must be non-negative".into()));
        }
        Ok(())
    }

    /// The resolved configuration as TOML.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}
