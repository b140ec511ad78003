//! Run configuration shared by the command-line tool and the test suites.
//!
//! A [`RunConfig`] is read from TOML or JSON, validated field by field, and
//! embedded verbatim (after seed resolution) in every artifact it produces.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::kernels::{KernelConfig, RieszMethod};
use crate::measure::MeasureConfig;
use crate::operators::MAX_SITES;
use crate::reflection::RootSystemSpec;
use crate::spaces::{OscillationMode, SymbolPreset};
use crate::verify::{
    default_lower_floor, CommutatorParams, FamilyParams, HeatParams, HormanderParams, LowerBoundParams, PairFamily,
    SizeParams, SmoothnessParams, Variable,
};

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io(String),
    Parse(String),
    Invalid(Vec<FieldError>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(m) => write!(f, "cannot read config: {m}"),
            ConfigError::Parse(m) => write!(f, "cannot parse config: {m}"),
            ConfigError::Invalid(errs) => {
                write!(f, "invalid config:")?;
                for e in errs {
                    write!(f, "\n  {e}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// The root system, by preset or explicit roots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GroupConfig {
    /// No roots; Lebesgue measure on ℝ^dim.
    Trivial { dim: usize },
    /// Sign flips of each coordinate, one multiplicity per axis.
    Z2n { kappa: Vec<f64> },
    /// I₂(m); `kappa` holds the multiplicities of the two root classes
    /// (equal for odd m).
    Dihedral { m: usize, kappa: [f64; 2] },
    /// Roots are completed with their negatives and rescaled to length √2.
    Explicit {
        dim: usize,
        roots: Vec<Vec<f64>>,
        kappa: Vec<f64>,
    },
}

impl Default for GroupConfig {
    fn default() -> Self {
        GroupConfig::Trivial { dim: 1 }
    }
}

impl GroupConfig {
    pub fn dim(&self) -> usize {
        match self {
            GroupConfig::Trivial { dim } | GroupConfig::Explicit { dim, .. } => *dim,
            GroupConfig::Z2n { kappa } => kappa.len(),
            GroupConfig::Dihedral { .. } => 2,
        }
    }

    fn kappas(&self) -> &[f64] {
        match self {
            GroupConfig::Trivial { .. } => &[],
            GroupConfig::Z2n { kappa } | GroupConfig::Explicit { kappa, .. } => kappa,
            GroupConfig::Dihedral { kappa, .. } => kappa,
        }
    }

    /// Builds the root system; call after [`RunConfig::validate`].
    pub fn spec(&self) -> Result<RootSystemSpec, ConfigError> {
        let built = match self {
            GroupConfig::Trivial { dim } => RootSystemSpec::trivial(*dim),
            GroupConfig::Z2n { kappa } => RootSystemSpec::z2n(kappa),
            GroupConfig::Dihedral { m, kappa } => RootSystemSpec::dihedral(*m, kappa[0], kappa[1]),
            GroupConfig::Explicit { dim, roots, kappa } => RootSystemSpec::new(*dim, roots.clone(), kappa.clone()),
        };
        built.map_err(|e| {
            ConfigError::Invalid(vec![FieldError {
                field: "group".into(),
                message: e.to_string(),
            }])
        })
    }

    fn check(&self, v: &mut Validator) {
        let dim = self.dim();
        v.require(
            (1..=3).contains(&dim),
            "group.dim",
            format!("dimension must be 1, 2 or 3, got {dim}"),
        );
        for (i, &k) in self.kappas().iter().enumerate() {
            v.require(
                k.is_finite() && k >= 0.0,
                format!("group.kappa[{i}]"),
                format!("multiplicity must be a finite non-negative number, got {k}"),
            );
        }
        match self {
            GroupConfig::Dihedral { m, kappa } => {
                v.require(
                    *m >= 2,
                    "group.m",
                    format!("dihedral order must be at least 2, got {m}"),
                );
                v.require(
                    m % 2 == 0 || kappa[0] == kappa[1],
                    "group.kappa",
                    "odd dihedral orders have one root class; both multiplicities must agree",
                );
            }
            GroupConfig::Explicit { dim, roots, kappa } => {
                v.require(
                    roots.len() == kappa.len(),
                    "group.kappa",
                    format!(
                        "expected one multiplicity per root ({}), got {}",
                        roots.len(),
                        kappa.len()
                    ),
                );
                for (i, r) in roots.iter().enumerate() {
                    v.require(
                        r.len() == *dim && r.iter().all(|c| c.is_finite()) && r.iter().any(|&c| c != 0.0),
                        format!("group.roots[{i}]"),
                        format!("root must be a finite nonzero vector of length {dim}"),
                    );
                }
            }
            _ => {}
        }
    }
}

/// Numerical settings shared by all subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub kernel: KernelConfig,
    pub measure: MeasureConfig,
}

/// `group` subcommand: the elements of G and the orbits of some points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct GroupSection {
    /// Points whose orbits are listed.
    pub points: Vec<Vec<f64>>,
}

/// `measure` subcommand: ω(B) and ω(O(B)) over centers × radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureSection {
    /// Explicit centers.
    pub centers: Vec<Vec<f64>>,
    /// Additional centers drawn uniformly from [−box_half, box_half]^N.
    pub random_centers: usize,
    pub box_half: f64,
    pub seed: u64,
    pub radii: Vec<f64>,
    /// Also report the orbit-ball measure.
    pub orbit: bool,
    pub tol: f64,
}

impl Default for MeasureSection {
    fn default() -> Self {
        Self {
            centers: Vec::new(),
            random_centers: 8,
            box_half: 3.0,
            seed: 3,
            radii: vec![0.25, 1.0, 4.0],
            orbit: true,
            tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Heat,
    Riesz,
}

/// `kernel` subcommand: h_t or R_j on a list of pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub kind: KernelKind,
    /// CSV with columns x0..x{N-1}, y0..y{N-1} and, for the heat kernel,
    /// an optional t column. Relative paths are taken from the config
    /// file's directory. Without it, pairs are sampled from `pairs`.
    pub points: Option<String>,
    pub pairs: PairFamily,
    /// Times used when the point list has no t column.
    pub times: Vec<f64>,
    pub j: usize,
    pub methods: Vec<RieszMethod>,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            kind: KernelKind::Riesz,
            points: None,
            pairs: PairFamily {
                samples: 50,
                ..PairFamily::default()
            },
            times: vec![0.1, 1.0, 10.0],
            j: 0,
            methods: vec![
                RieszMethod::Translated,
                RieszMethod::Subordination,
                RieszMethod::Explicit,
            ],
        }
    }
}

/// Tensor grid [−half_width, half_width]^N with `cells` cells per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub cells: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_width: 4.0,
            cells: 4000,
        }
    }
}

impl GridConfig {
    fn check(&self, v: &mut Validator, path: &str, dim: usize) {
        v.positive(&format!("{path}.half_width"), self.half_width);
        v.require(
            self.cells >= 2,
            format!("{path}.cells"),
            format!("need at least 2 cells per axis, got {}", self.cells),
        );
        let sites = (self.cells as f64).powi(dim as i32);
        v.require(
            sites <= 1e6,
            format!("{path}.cells"),
            format!(
                "{} cells per axis give {sites} sites in dimension {dim}; the limit is 1e6",
                self.cells
            ),
        );
    }
}

/// Symbol sampled on the grid: a named preset or a CSV of grid values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolSource {
    /// CSV with columns x0..x{N-1}, b holding one row per grid site.
    Samples {
        samples: String,
    },
    Preset(SymbolPreset),
}

/// `bmo` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BmoSection {
    pub symbol: SymbolSource,
    pub grid: GridConfig,
    pub family: FamilyParams,
    pub modes: Vec<OscillationMode>,
    /// Bucket edges for the distance of a ball from the origin,
    /// max(‖c‖ − r, 0).
    pub distance_edges: Vec<f64>,
}

impl Default for BmoSection {
    fn default() -> Self {
        Self {
            symbol: SymbolSource::Preset(SymbolPreset::LogAbs { center: vec![1.0] }),
            grid: GridConfig::default(),
            family: FamilyParams {
                r_min: 0.025,
                r_max: 2.0,
                spacing: 0.0625,
                center_half: 3.0,
            },
            modes: vec![OscillationMode::Euclidean, OscillationMode::Orbit],
            distance_edges: vec![0.0, 0.5, 1.0, 2.0, 4.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    Size,
    SmoothnessX,
    SmoothnessY,
    LowerBound,
    Hormander,
    Heat,
    Commutator,
}

impl CheckName {
    pub const ALL: [CheckName; 7] = [
        CheckName::Size,
        CheckName::SmoothnessX,
        CheckName::SmoothnessY,
        CheckName::LowerBound,
        CheckName::Hormander,
        CheckName::Heat,
        CheckName::Commutator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckName::Size => "size",
            CheckName::SmoothnessX => "smoothness-x",
            CheckName::SmoothnessY => "smoothness-y",
            CheckName::LowerBound => "lower-bound",
            CheckName::Hormander => "hormander",
            CheckName::Heat => "heat",
            CheckName::Commutator => "commutator",
        }
    }
}

/// `verify-all` battery. The commutator check reads `[commutator]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub checks: Vec<CheckName>,
    pub size: SizeParams,
    pub smoothness_x: SmoothnessParams,
    pub smoothness_y: SmoothnessParams,
    /// An omitted floor takes the calibrated default for the dimension.
    pub lower_bound: LowerBoundParams,
    pub hormander: HormanderParams,
    pub heat: HeatParams,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            checks: CheckName::ALL.to_vec(),
            size: SizeParams::default(),
            smoothness_x: SmoothnessParams {
                variable: Variable::X,
                ..SmoothnessParams::default()
            },
            smoothness_y: SmoothnessParams::default(),
            lower_bound: LowerBoundParams::default(),
            hormander: HormanderParams::default(),
            heat: HeatParams::default(),
        }
    }
}

/// Parts of a [`RunConfig`] read by individual subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Orbits,
    Measure,
    Kernel,
    Bmo,
    Commutator,
    Verify,
}

impl Section {
    pub const ALL: [Section; 6] = [
        Section::Orbits,
        Section::Measure,
        Section::Kernel,
        Section::Bmo,
        Section::Commutator,
        Section::Verify,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub group: GroupConfig,
    /// Master seed. When set, every sampler seed below is derived from it.
    pub seed: Option<u64>,
    /// Output directory.
    pub out: String,
    pub quadrature: QuadratureConfig,
    pub orbits: GroupSection,
    pub measure: MeasureSection,
    pub kernel: KernelSection,
    pub bmo: BmoSection,
    pub commutator: CommutatorParams,
    pub verify: VerifySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            group: GroupConfig::default(),
            seed: None,
            out: "out".into(),
            quadrature: QuadratureConfig::default(),
            orbits: GroupSection::default(),
            measure: MeasureSection::default(),
            kernel: KernelSection::default(),
            bmo: BmoSection::default(),
            commutator: CommutatorParams::default(),
            verify: VerifySection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes to JSON")
    }

    /// Applies the master seed and the dimension-dependent defaults. The
    /// result is what a run actually uses and what artifacts record.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        if let Some(master) = c.seed {
            let mut stream = 0u64;
            let mut next = || {
                stream += 1;
                split_seed(master, stream)
            };
            c.quadrature.measure.seed = next();
            c.measure.seed = next();
            c.kernel.pairs.seed = next();
            c.commutator.norm.seed = next();
            c.verify.size.pairs.seed = next();
            c.verify.smoothness_x.pairs.seed = next();
            c.verify.smoothness_y.pairs.seed = next();
            c.verify.lower_bound.seed = next();
            c.verify.hormander.seed = next();
            c.verify.heat.seed = next();
        }
        if c.verify.lower_bound.floor.is_none() {
            c.verify.lower_bound.floor = default_lower_floor(c.group.dim());
        }
        c
    }

    /// Checks every field; errors name the offending field by path.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_for(&Section::ALL)
    }

    /// Checks the group, the quadrature settings and the given sections.
    /// Sections a run does not read may hold values for another dimension.
    pub fn validate_for(&self, sections: &[Section]) -> Result<(), ConfigError> {
        let on = |s: Section| sections.contains(&s);
        let mut v = Validator::default();
        self.group.check(&mut v);
        let dim = self.group.dim();
        if !v.errors.is_empty() {
            return Err(ConfigError::Invalid(v.errors));
        }
        if let Err(ConfigError::Invalid(mut errs)) = self.group.spec() {
            v.errors.append(&mut errs);
        }
        v.require(!self.out.is_empty(), "out", "output directory must not be empty");

        let k = &self.quadrature.kernel;
        v.positive("quadrature.kernel.eps_sing", k.eps_sing);
        v.require(k.mu_nodes >= 2, "quadrature.kernel.mu_nodes", "need at least 2 nodes");
        v.require(
            k.mu_full_nodes >= 2,
            "quadrature.kernel.mu_full_nodes",
            "need at least 2 nodes",
        );
        v.positive("quadrature.kernel.t_rel_tol", k.t_rel_tol);
        v.require(
            k.t_max_intervals >= 1,
            "quadrature.kernel.t_max_intervals",
            "need at least 1 interval",
        );
        v.positive("quadrature.kernel.hyperplane_threshold", k.hyperplane_threshold);
        let m = &self.quadrature.measure;
        v.require(
            m.mc_max_samples >= 1000,
            "quadrature.measure.mc_max_samples",
            "need at least 1000 samples",
        );
        v.require(
            (1..=16).contains(&m.max_level),
            "quadrature.measure.max_level",
            "must be between 1 and 16",
        );

        if on(Section::Orbits) {
            for (i, p) in self.orbits.points.iter().enumerate() {
                v.point(&format!("orbits.points[{i}]"), p, dim);
            }
        }

        if on(Section::Measure) {
            let ms = &self.measure;
            for (i, p) in ms.centers.iter().enumerate() {
                v.point(&format!("measure.centers[{i}]"), p, dim);
            }
            v.positive("measure.box_half", ms.box_half);
            v.require(!ms.radii.is_empty(), "measure.radii", "need at least one radius");
            for (i, &r) in ms.radii.iter().enumerate() {
                v.positive(&format!("measure.radii[{i}]"), r);
            }
            v.positive("measure.tol", ms.tol);
            v.require(
                !ms.centers.is_empty() || ms.random_centers > 0,
                "measure.random_centers",
                "no centers: give explicit centers or a positive count",
            );
        }
        if on(Section::Kernel) {
            let ks = &self.kernel;
            v.pairs("kernel.pairs", &ks.pairs);
            v.require(ks.j < dim, "kernel.j", format!("coordinate index must be below {dim}"));
            for (i, &t) in ks.times.iter().enumerate() {
                v.positive(&format!("kernel.times[{i}]"), t);
            }
            if ks.kind == KernelKind::Heat && ks.points.is_none() {
                v.require(
                    !ks.times.is_empty(),
                    "kernel.times",
                    "the heat kernel needs at least one time",
                );
            }
            if ks.kind == KernelKind::Riesz {
                v.require(!ks.methods.is_empty(), "kernel.methods", "need at least one method");
            }
        }
        if on(Section::Bmo) {
            let b = &self.bmo;
            if let SymbolSource::Preset(p) = &b.symbol {
                v.symbol("bmo.symbol", p, dim);
            }
            b.grid.check(&mut v, "bmo.grid", dim);
            v.family("bmo.family", &b.family);
            v.require(!b.modes.is_empty(), "bmo.modes", "need at least one mode");
            v.require(
                b.distance_edges.windows(2).all(|w| w[0] < w[1]) && b.distance_edges.iter().all(|e| *e >= 0.0),
                "bmo.distance_edges",
                "edges must be non-negative and strictly increasing",
            );
        }
        if on(Section::Commutator) {
            let c = &self.commutator;
            v.require(
                c.j < dim,
                "commutator.j",
                format!("coordinate index must be below {dim}"),
            );
            v.require(!c.presets.is_empty(), "commutator.presets", "need at least one symbol");
            for (i, p) in c.presets.iter().enumerate() {
                v.symbol(&format!("commutator.presets[{i}]"), p, dim);
            }
            v.require(
                c.p > 1.0 && c.p.is_finite(),
                "commutator.p",
                format!("exponent must lie in (1, ∞), got {}", c.p),
            );
            v.positive("commutator.half_width", c.half_width);
            v.require(
                !c.resolutions.is_empty(),
                "commutator.resolutions",
                "need at least one resolution",
            );
            for (i, &n) in c.resolutions.iter().enumerate() {
                let sites = (n as f64).powi(dim as i32);
                v.require(
                    n >= 2 && sites <= MAX_SITES as f64,
                    format!("commutator.resolutions[{i}]"),
                    format!("{n} cells per axis give {sites} sites; dense operators allow 2..={MAX_SITES}"),
                );
            }
            v.positive("commutator.eps_trunc", c.eps_trunc);
            v.family("commutator.family", &c.family);
            v.require(
                c.norm.max_iter >= 1,
                "commutator.norm.max_iter",
                "need at least one iteration",
            );
            v.positive("commutator.norm.rel_tol", c.norm.rel_tol);
            v.positive("commutator.stability", c.stability);
            v.nonneg("commutator.zero_tol", c.zero_tol);
        }
        if on(Section::Verify) {
            let vs = &self.verify;
            let s = &vs.size;
            v.require(
                s.j < dim,
                "verify.size.j",
                format!("coordinate index must be below {dim}"),
            );
            v.pairs("verify.size.pairs", &s.pairs);
            v.positive("verify.size.measure_tol", s.measure_tol);
            v.ceiling("verify.size.ceiling", s.ceiling);
            for (name, sm, want) in [
                ("smoothness_x", &vs.smoothness_x, Variable::X),
                ("smoothness_y", &vs.smoothness_y, Variable::Y),
            ] {
                let path = format!("verify.{name}");
                v.require(
                    sm.variable == want,
                    format!("{path}.variable"),
                    format!("must be {want:?}").to_lowercase(),
                );
                v.require(
                    sm.j < dim,
                    format!("{path}.j"),
                    format!("coordinate index must be below {dim}"),
                );
                v.pairs(&format!("{path}.pairs"), &sm.pairs);
                v.require(
                    (0.0..=1.0).contains(&sm.root_aligned),
                    format!("{path}.root_aligned"),
                    "fraction must lie in [0, 1]",
                );
                v.require(
                    sm.min_step > 0.0 && sm.min_step <= 1.0,
                    format!("{path}.min_step"),
                    "must lie in (0, 1]",
                );
                v.positive(&format!("{path}.measure_tol"), sm.measure_tol);
                v.ceiling(&format!("{path}.ceiling"), sm.ceiling);
            }
            let lb = &vs.lower_bound;
            v.require(
                lb.j < dim,
                "verify.lower_bound.j",
                format!("coordinate index must be below {dim}"),
            );
            v.require(
                !lb.radii.is_empty(),
                "verify.lower_bound.radii",
                "need at least one radius",
            );
            for (i, &r) in lb.radii.iter().enumerate() {
                v.positive(&format!("verify.lower_bound.radii[{i}]"), r);
            }
            v.require(
                lb.centers >= 1,
                "verify.lower_bound.centers",
                "need at least one center",
            );
            v.positive("verify.lower_bound.center_box", lb.center_box);
            v.positive("verify.lower_bound.measure_tol", lb.measure_tol);
            v.ceiling("verify.lower_bound.floor", lb.floor);
            let h = &vs.hormander;
            v.require(
                h.j < dim,
                "verify.hormander.j",
                format!("coordinate index must be below {dim}"),
            );
            v.require(h.pairs >= 1, "verify.hormander.pairs", "need at least one pair");
            v.positive("verify.hormander.box_half", h.box_half);
            v.require(
                h.separation[0] > 0.0 && h.separation[0] <= h.separation[1],
                "verify.hormander.separation",
                "need 0 < min ≤ max",
            );
            v.require(
                h.outer_radius > 4.0 * h.separation[1],
                "verify.hormander.outer_radius",
                "must exceed four times the largest separation",
            );
            v.positive("verify.hormander.smooth_constant", h.smooth_constant);
            v.positive("verify.hormander.rel_tol", h.rel_tol);
            v.positive("verify.hormander.measure_tol", h.measure_tol);
            v.ceiling("verify.hormander.ceiling", h.ceiling);
            let ht = &vs.heat;
            v.require(ht.samples >= 1, "verify.heat.samples", "need at least one sample");
            v.positive("verify.heat.box_half", ht.box_half);
            v.require(
                ht.t_range[0] > 0.0 && ht.t_range[0] <= ht.t_range[1] && ht.t_range[1].is_finite(),
                "verify.heat.t_range",
                "need 0 < min ≤ max < ∞",
            );
            v.require(
                (0.0..=1.0).contains(&ht.same_orbit),
                "verify.heat.same_orbit",
                "fraction must lie in [0, 1]",
            );
            v.positive("verify.heat.measure_tol", ht.measure_tol);
            let hc = &ht.constants;
            for (name, x) in [
                ("upper_c", hc.upper_c),
                ("upper_const", hc.upper_const),
                ("lower_c", hc.lower_c),
                ("lower_const", hc.lower_const),
                ("diff_c", hc.diff_c),
                ("diff_const", hc.diff_const),
            ] {
                v.positive(&format!("verify.heat.constants.{name}"), x);
            }
        }

        if v.errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(v.errors))
        }
    }
}

/// splitmix64 of master + stream.
fn split_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Default)]
struct Validator {
    errors: Vec<FieldError>,
}

impl Validator {
    fn require(&mut self, ok: bool, field: impl Into<String>, message: impl Into<String>) {
        if !ok {
            self.errors.push(FieldError {
                field: field.into(),
                message: message.into(),
            });
        }
    }

    fn positive(&mut self, field: &str, x: f64) {
        self.require(
            x > 0.0 && x.is_finite(),
            field,
            format!("must be a finite positive number, got {x}"),
        );
    }

    fn nonneg(&mut self, field: &str, x: f64) {
        self.require(
            x >= 0.0 && x.is_finite(),
            field,
            format!("must be a finite non-negative number, got {x}"),
        );
    }

    fn ceiling(&mut self, field: &str, x: Option<f64>) {
        if let Some(x) = x {
            self.positive(field, x);
        }
    }

    fn point(&mut self, field: &str, p: &[f64], dim: usize) {
        self.require(
            p.len() == dim && p.iter().all(|c| c.is_finite()),
            field,
            format!("expected {dim} finite coordinates, got {p:?}"),
        );
    }

    fn pairs(&mut self, path: &str, p: &PairFamily) {
        self.require(p.samples >= 1, format!("{path}.samples"), "need at least one sample");
        self.positive(&format!("{path}.box_half"), p.box_half);
        self.require(
            (0.0..1.0).contains(&p.min_orbit_ratio),
            format!("{path}.min_orbit_ratio"),
            format!("must lie in [0, 1), got {}", p.min_orbit_ratio),
        );
        self.nonneg(&format!("{path}.min_distance"), p.min_distance);
        self.require(
            p.min_distance < p.box_half,
            format!("{path}.min_distance"),
            "must be smaller than box_half",
        );
        self.positive(&format!("{path}.scale"), p.scale);
    }

    fn family(&mut self, path: &str, f: &FamilyParams) {
        self.positive(&format!("{path}.r_min"), f.r_min);
        self.positive(&format!("{path}.r_max"), f.r_max);
        self.require(f.r_min <= f.r_max, format!("{path}.r_min"), "must not exceed r_max");
        self.positive(&format!("{path}.spacing"), f.spacing);
        self.nonneg(&format!("{path}.center_half"), f.center_half);
    }

    fn symbol(&mut self, path: &str, p: &SymbolPreset, dim: usize) {
        if let Err(e) = p.validate(dim) {
            self.errors.push(FieldError {
                field: path.into(),
                message: e.to_string(),
            });
        }
    }
}
