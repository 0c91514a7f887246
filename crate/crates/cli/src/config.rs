//! TOML run description: parsing with every violation reported by key path,
//! and the resolved form that is echoed into output headers.

use std::path::{Path, PathBuf};

use toml::{Table, Value};

use hystdiff::energy::{CoefficientField, EnergyModel};
use hystdiff::grid::{Field, Grid1D};
use hystdiff::hysteresis::HysteresisModel;
use hystdiff::load::{Load, Profile, TimeFactor};
use hystdiff::stepper::{NodeHysteresis, Problem, StepConfig};

use crate::error::CliError;

/// One problem found in a configuration document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n_cells: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnergySpec {
    PPower { p: f64, alpha1: f64 },
    RegularizedPPower { p: f64, alpha1: f64, delta: f64 },
    /// Piecewise-constant conductivity given as `(start, value)` pairs.
    Quadratic { k_field: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Zero,
    Play {
        radius: f64,
        initial_output: f64,
    },
    Stop {
        radius: f64,
    },
    Preisach {
        beta_range: (f64, f64),
        alpha_range: (f64, f64),
        beta_count: usize,
        alpha_count: usize,
        weight: f64,
        initially_up: bool,
    },
    Sum {
        terms: Vec<(f64, ModelSpec)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisSpec {
    pub model: ModelSpec,
    /// `(from, model)`: nodes with `x >= from` use `model`; the last match wins.
    pub regions: Vec<(f64, ModelSpec)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSpec {
    Constant(f64),
    Nodal(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Profile(Profile),
    /// Column of a CSV file, one value per node.
    Csv { file: PathBuf, column: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSpec {
    pub final_time: f64,
    pub ell: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub retry_halving: bool,
    pub max_halvings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub stride: usize,
}

/// A fully validated run description with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub grid: GridSpec,
    pub energy: EnergySpec,
    pub hysteresis: HysteresisSpec,
    pub coefficient: CoefficientSpec,
    pub load: Vec<(Profile, TimeFactor)>,
    pub initial: InitialSpec,
    pub time: TimeSpec,
    pub solver: SolverSpec,
    pub output: OutputSpec,
    /// Right-hand side of the stationary problem; defaults to the load at the final time.
    pub stationary: Option<Profile>,
    /// Nodal initial values, resolved at parse time.
    initial_values: Vec<f64>,
}

pub fn parse_config(path: &Path) -> Result<SimulationSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_str(&text, base).map_err(CliError::Config)
}

/// Parses a document; relative CSV paths are taken from `base`.
pub fn parse_str(text: &str, base: &Path) -> Result<SimulationSpec, Vec<Violation>> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        vec![Violation {
            path: String::new(),
            message: format!("not a valid TOML document: {}", e.message()),
        }]
    })?;
    let mut ck = Checker::default();
    let mut top = Section::new("", &root);

    let grid = top.child(&mut ck, "grid", true).and_then(|mut s| {
        let n_cells = ck.int(&mut s, "n_cells", true);
        let length = ck.float(&mut s, "length", false).unwrap_or(1.0);
        ck.finish(s.clone());
        let n_cells = n_cells?;
        if n_cells < 2 {
            ck.push(s.key("n_cells"), format!("must be >= 2, got {n_cells}"));
        }
        if !(length.is_finite() && length > 0.0) {
            ck.push(s.key("length"), format!("must be finite and > 0, got {length}"));
        }
        Some(GridSpec { n_cells, length })
    });

    let energy = top.child(&mut ck, "energy", true).and_then(|s| read_energy(&mut ck, s));

    let hysteresis = match top.child(&mut ck, "hysteresis", false) {
        None => Some(HysteresisSpec {
            model: ModelSpec::Zero,
            regions: Vec::new(),
        }),
        Some(mut s) => {
            let regions = ck.tables(&mut s, "regions").map(|list| {
                list.into_iter()
                    .filter_map(|mut r| {
                        let from = ck.float(&mut r, "from", true);
                        let model = read_model(&mut ck, r);
                        Some((from?, model?))
                    })
                    .collect::<Vec<_>>()
            });
            let model = read_model(&mut ck, s);
            model.map(|model| HysteresisSpec {
                model,
                regions: regions.unwrap_or_default(),
            })
        }
    };

    let coefficient = match top.child(&mut ck, "coefficient", false) {
        None => Some(CoefficientSpec::Constant(1.0)),
        Some(mut s) => {
            let value = ck.float(&mut s, "value", false);
            let nodal = ck.floats(&mut s, "nodal");
            let spec = match (value, nodal) {
                (Some(_), Some(_)) => {
                    ck.push(s.path.clone(), "give either `value` or `nodal`, not both");
                    None
                }
                (Some(v), None) => Some(CoefficientSpec::Constant(v)),
                (None, Some(v)) => Some(CoefficientSpec::Nodal(v)),
                (None, None) => Some(CoefficientSpec::Constant(1.0)),
            };
            ck.finish(s);
            spec
        }
    };

    let load = match top.child(&mut ck, "load", false) {
        None => Some(Vec::new()),
        Some(mut s) => {
            let terms = ck.tables(&mut s, "terms").map(|list| {
                list.into_iter()
                    .filter_map(|mut t| {
                        let profile = read_profile(&mut ck, &mut t);
                        let factor = read_time_factor(&mut ck, &mut t);
                        ck.finish(t);
                        Some((profile?, factor?))
                    })
                    .collect::<Vec<_>>()
            });
            ck.finish(s);
            terms.or(Some(Vec::new()))
        }
    };

    let initial = match top.child(&mut ck, "initial", false) {
        None => Some(InitialSpec::Profile(Profile::Zero)),
        Some(mut s) => {
            let spec = if s.table.get("profile").and_then(Value::as_str) == Some("csv") {
                s.known.push("profile");
                let file = ck.string(&mut s, "file", true);
                let column = ck.string(&mut s, "column", false).unwrap_or_else(|| "u".into());
                file.map(|f| {
                    let p = Path::new(&f);
                    let full = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
                    InitialSpec::Csv {
                        file: full.canonicalize().unwrap_or(full),
                        column,
                    }
                })
            } else {
                read_profile(&mut ck, &mut s).map(InitialSpec::Profile)
            };
            ck.finish(s);
            spec
        }
    };

    let time = top.child(&mut ck, "time", true).and_then(|mut s| {
        let final_time = ck.float(&mut s, "T", true);
        let ell = ck.int(&mut s, "ell", true);
        ck.finish(s.clone());
        let (final_time, ell) = (final_time?, ell?);
        if !(final_time.is_finite() && final_time > 0.0) {
            ck.push(s.key("T"), format!("must be finite and > 0, got {final_time}"));
        }
        if ell == 0 {
            ck.push(s.key("ell"), "must be >= 1");
        }
        Some(TimeSpec { final_time, ell })
    });

    let solver = {
        let table = Table::new();
        let mut s = top
            .child(&mut ck, "solver", false)
            .unwrap_or_else(|| Section::new("solver", &table));
        let newton_tol = ck.float(&mut s, "newton_tol", false).unwrap_or(1e-10);
        let newton_max_iter = ck.int(&mut s, "newton_max_iter", false).unwrap_or(50);
        let retry_halving = ck.boolean(&mut s, "retry_halving", false).unwrap_or(false);
        let max_halvings = ck.int(&mut s, "max_halvings", false).unwrap_or(4);
        if !(newton_tol.is_finite() && newton_tol > 0.0) {
            ck.push(s.key("newton_tol"), format!("must be finite and > 0, got {newton_tol}"));
        }
        if newton_max_iter == 0 {
            ck.push(s.key("newton_max_iter"), "must be >= 1");
        }
        ck.finish(s);
        SolverSpec {
            newton_tol,
            newton_max_iter,
            retry_halving,
            max_halvings,
        }
    };

    let output = {
        let table = Table::new();
        let mut s = top
            .child(&mut ck, "output", false)
            .unwrap_or_else(|| Section::new("output", &table));
        let stride = ck.int(&mut s, "stride", false).unwrap_or(1);
        if stride == 0 {
            ck.push(s.key("stride"), "must be >= 1");
        }
        ck.finish(s);
        OutputSpec { stride }
    };

    let stationary = top.child(&mut ck, "stationary", false).and_then(|mut s| {
        let p = read_profile(&mut ck, &mut s);
        ck.finish(s);
        p
    });

    ck.finish(top);

    // checks that need several sections at once
    let initial_values = match (&grid, &initial) {
        (Some(g), Some(init)) if g.n_cells >= 2 && g.length > 0.0 => resolve_initial(&mut ck, g, init),
        _ => None,
    };
    if let (Some(g), Some(CoefficientSpec::Nodal(c))) = (&grid, &coefficient) {
        if c.len() != g.n_cells + 1 {
            ck.push(
                "coefficient.nodal",
                format!("has {} entries, the grid has {} nodes", c.len(), g.n_cells + 1),
            );
        }
    }
    match &coefficient {
        Some(CoefficientSpec::Constant(v)) => check_capacity(&mut ck, "coefficient.value", &[*v]),
        Some(CoefficientSpec::Nodal(v)) => check_capacity(&mut ck, "coefficient.nodal", v),
        None => {}
    }

    if !ck.violations.is_empty() {
        return Err(ck.violations);
    }
    let (Some(grid), Some(energy), Some(hysteresis), Some(coefficient), Some(load), Some(initial), Some(time), Some(initial_values)) =
        (grid, energy, hysteresis, coefficient, load, initial, time, initial_values)
    else {
        return Err(vec![Violation {
            path: String::new(),
            message: "incomplete configuration".into(),
        }]);
    };
    Ok(SimulationSpec {
        grid,
        energy,
        hysteresis,
        coefficient,
        load,
        initial,
        time,
        solver,
        output,
        stationary,
        initial_values,
    })
}

fn check_capacity(ck: &mut Checker, path: &str, values: &[f64]) {
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        let at = if values.len() > 1 { format!(" at node {i}") } else { String::new() };
        ck.push(
            path,
            format!("capacity must be bounded below by a positive constant (c >= alpha > 0), got {v}{at}"),
        );
    }
}

fn read_energy(ck: &mut Checker, mut s: Section) -> Option<EnergySpec> {
    let kind = ck.string(&mut s, "kind", true)?;
    let spec = match kind.as_str() {
        "ppower" | "regularized_ppower" => {
            let p = ck.float(&mut s, "p", true);
            let alpha1 = ck.float(&mut s, "alpha1", false);
            let delta = if kind == "regularized_ppower" {
                ck.float(&mut s, "delta", true)
            } else {
                Some(0.0)
            };
            let (p, delta) = (p?, delta?);
            let alpha1 = alpha1.unwrap_or(1.0 / p);
            let built = if kind == "ppower" {
                EnergyModel::ppower(p, alpha1).map(|_| EnergySpec::PPower { p, alpha1 })
            } else {
                EnergyModel::regularized_ppower(p, alpha1, delta)
                    .map(|_| EnergySpec::RegularizedPPower { p, alpha1, delta })
            };
            ck.core(&s.path, built)
        }
        "quadratic" => {
            let k = ck.float(&mut s, "k", false);
            let table = ck.points(&mut s, "k_field");
            let k_field = match (k, table) {
                (Some(_), Some(_)) => {
                    ck.push(s.path.clone(), "give either `k` or `k_field`, not both");
                    None
                }
                (Some(k), None) => Some(vec![(0.0, k)]),
                (None, Some(t)) => Some(t),
                (None, None) => Some(vec![(0.0, 1.0)]),
            }?;
            let built = CoefficientField::piecewise(k_field.clone()).map(|_| EnergySpec::Quadratic { k_field });
            ck.core(&s.key("k_field"), built)
        }
        other => {
            ck.push(
                s.key("kind"),
                format!("unknown energy `{other}`; expected ppower, regularized_ppower or quadratic"),
            );
            None
        }
    };
    ck.finish(s);
    spec
}

fn read_model(ck: &mut Checker, mut s: Section) -> Option<ModelSpec> {
    let kind = ck.string(&mut s, "kind", false).unwrap_or_else(|| "zero".into());
    let spec = match kind.as_str() {
        "zero" => Some(ModelSpec::Zero),
        "play" => {
            let radius = ck.float(&mut s, "radius", true);
            let initial_output = ck.float(&mut s, "initial_output", false).unwrap_or(0.0);
            radius.and_then(|radius| {
                let built = HysteresisModel::play_with_initial(radius, initial_output);
                ck.core(&s.path, built.map(|_| ModelSpec::Play { radius, initial_output }))
            })
        }
        "stop" => ck.float(&mut s, "radius", true).and_then(|radius| {
            ck.core(&s.path, HysteresisModel::stop(radius).map(|_| ModelSpec::Stop { radius }))
        }),
        "preisach" => {
            let beta_range = ck.pair(&mut s, "beta_range");
            let alpha_range = ck.pair(&mut s, "alpha_range");
            let beta_count = ck.int(&mut s, "beta_count", true);
            let alpha_count = ck.int(&mut s, "alpha_count", true);
            let weight = ck.float(&mut s, "weight", false);
            let initially_up = ck.boolean(&mut s, "initially_up", false).unwrap_or(false);
            let (beta_range, alpha_range, beta_count, alpha_count) = (beta_range?, alpha_range?, beta_count?, alpha_count?);
            let weight = weight.unwrap_or(1.0 / (beta_count.max(1) * alpha_count.max(1)) as f64);
            let built = HysteresisModel::preisach_grid(beta_range, alpha_range, beta_count, alpha_count, weight, initially_up);
            ck.core(
                &s.path,
                built.map(|_| ModelSpec::Preisach {
                    beta_range,
                    alpha_range,
                    beta_count,
                    alpha_count,
                    weight,
                    initially_up,
                }),
            )
        }
        "sum" => ck.tables(&mut s, "terms").and_then(|list| {
            if list.is_empty() {
                ck.push(s.key("terms"), "a sum needs at least one term");
                return None;
            }
            let mut terms = Vec::new();
            let mut ok = true;
            for mut t in list {
                let weight = ck.float(&mut t, "weight", true);
                let model = read_model(ck, t);
                match (weight, model) {
                    (Some(w), Some(m)) => terms.push((w, m)),
                    _ => ok = false,
                }
            }
            if !ok {
                return None;
            }
            let spec = ModelSpec::Sum { terms };
            let built = build_model(&spec);
            ck.core(&s.path, built.map(|_| spec))
        }),
        other => {
            ck.push(
                s.key("kind"),
                format!("unknown hysteresis `{other}`; expected zero, play, stop, preisach or sum"),
            );
            None
        }
    };
    ck.finish(s);
    spec
}

fn read_profile(ck: &mut Checker, s: &mut Section) -> Option<Profile> {
    let kind = ck.string(s, "profile", false).unwrap_or_else(|| "zero".into());
    let profile = match kind.as_str() {
        "zero" => Profile::Zero,
        "constant" => Profile::Constant(ck.float(s, "value", true)?),
        "sine" => {
            let amplitude = ck.float(s, "amplitude", false).unwrap_or(1.0);
            let mode = ck.int(s, "mode", false).unwrap_or(1);
            Profile::Sine {
                amplitude,
                mode: u32::try_from(mode).unwrap_or(u32::MAX),
            }
        }
        "bump" => {
            let center = ck.float(s, "center", true);
            let half_width = ck.float(s, "half_width", true);
            let height = ck.float(s, "height", false).unwrap_or(1.0);
            Profile::Bump {
                center: center?,
                half_width: half_width?,
                height,
            }
        }
        "table" => Profile::Table(ck.points(s, "points").or_else(|| {
            ck.push(s.key("points"), "missing required key");
            None
        })?),
        other => {
            ck.push(
                s.key("profile"),
                format!("unknown profile `{other}`; expected zero, constant, sine, bump or table"),
            );
            return None;
        }
    };
    ck.core(&s.path, profile.validate().map(|_| profile.clone()))
}

fn read_time_factor(ck: &mut Checker, s: &mut Section) -> Option<TimeFactor> {
    let kind = ck.string(s, "time", false).unwrap_or_else(|| "constant".into());
    let factor = match kind.as_str() {
        "constant" => TimeFactor::Constant,
        "exp" => TimeFactor::Exp {
            rate: ck.float(s, "rate", true)?,
        },
        "sin" => {
            let omega = ck.float(s, "omega", true)?;
            let phase = ck.float(s, "phase", false).unwrap_or(0.0);
            TimeFactor::Sin { omega, phase }
        }
        "window" => {
            let start = ck.float(s, "start", true);
            let end = ck.float(s, "end", true);
            TimeFactor::Window {
                start: start?,
                end: end?,
            }
        }
        "table" => TimeFactor::Table(ck.points(s, "time_points").or_else(|| {
            ck.push(s.key("time_points"), "missing required key");
            None
        })?),
        other => {
            ck.push(
                s.key("time"),
                format!("unknown time factor `{other}`; expected constant, exp, sin, window or table"),
            );
            return None;
        }
    };
    ck.core(&s.path, factor.validate().map(|_| factor.clone()))
}

fn resolve_initial(ck: &mut Checker, grid: &GridSpec, init: &InitialSpec) -> Option<Vec<f64>> {
    let g = Grid1D::new(grid.n_cells, grid.length).ok()?;
    let values = match init {
        InitialSpec::Profile(p) => p.sample(&g),
        InitialSpec::Csv { file, column } => match read_csv_column(file, column) {
            Ok(v) if v.len() == g.n_nodes() => v,
            Ok(v) => {
                ck.push(
                    "initial.file",
                    format!("column `{column}` has {} values, the grid has {} nodes", v.len(), g.n_nodes()),
                );
                return None;
            }
            Err(msg) => {
                ck.push("initial.file", msg);
                return None;
            }
        },
    };
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        ck.push("initial", format!("non-finite initial value at node {i}"));
        return None;
    }
    let scale = 1.0 + values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let n = values.len();
    for (i, v) in [(0, values[0]), (n - 1, values[n - 1])] {
        if v.abs() > 1e-12 * scale {
            ck.push(
                "initial",
                format!("initial data must vanish on the boundary, got {v} at node {i}"),
            );
            return None;
        }
    }
    let mut values = values;
    values[0] = 0.0;
    values[n - 1] = 0.0;
    Some(values)
}

fn read_csv_column(file: &Path, column: &str) -> Result<Vec<f64>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(file)
        .map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| format!("{} has no column `{column}`", file.display()))?;
    let mut out = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let cell = rec.get(idx).unwrap_or("");
        out.push(
            cell.parse::<f64>()
                .map_err(|_| format!("row {} of column `{column}` is not a number: `{cell}`", row + 1))?,
        );
    }
    Ok(out)
}

fn build_model(spec: &ModelSpec) -> hystdiff::Result<HysteresisModel> {
    match spec {
        ModelSpec::Zero => Ok(HysteresisModel::zero()),
        ModelSpec::Play { radius, initial_output } => HysteresisModel::play_with_initial(*radius, *initial_output),
        ModelSpec::Stop { radius } => HysteresisModel::stop(*radius),
        ModelSpec::Preisach {
            beta_range,
            alpha_range,
            beta_count,
            alpha_count,
            weight,
            initially_up,
        } => HysteresisModel::preisach_grid(*beta_range, *alpha_range, *beta_count, *alpha_count, *weight, *initially_up),
        ModelSpec::Sum { terms } => HysteresisModel::weighted_sum(
            terms
                .iter()
                .map(|(w, m)| build_model(m).map(|m| (*w, m)))
                .collect::<hystdiff::Result<Vec<_>>>()?,
        ),
    }
}

impl SimulationSpec {
    pub fn grid(&self) -> Grid1D {
        Grid1D::new(self.grid.n_cells, self.grid.length).expect("validated grid")
    }

    pub fn energy_model(&self) -> EnergyModel {
        match &self.energy {
            EnergySpec::PPower { p, alpha1 } => EnergyModel::ppower(*p, *alpha1),
            EnergySpec::RegularizedPPower { p, alpha1, delta } => EnergyModel::regularized_ppower(*p, *alpha1, *delta),
            EnergySpec::Quadratic { k_field } => CoefficientField::piecewise(k_field.clone()).map(EnergyModel::quadratic),
        }
        .expect("validated energy")
    }

    pub fn capacity(&self) -> Vec<f64> {
        match &self.coefficient {
            CoefficientSpec::Constant(c) => vec![*c; self.grid.n_cells + 1],
            CoefficientSpec::Nodal(v) => v.clone(),
        }
    }

    pub fn node_hysteresis(&self) -> Result<NodeHysteresis, CliError> {
        let grid = self.grid();
        let mut models = vec![build_model(&self.hysteresis.model)?];
        for (_, m) in &self.hysteresis.regions {
            models.push(build_model(m)?);
        }
        let index = grid
            .nodes()
            .iter()
            .map(|&x| {
                self.hysteresis
                    .regions
                    .iter()
                    .rposition(|(from, _)| x >= *from)
                    .map_or(0, |k| k + 1)
            })
            .collect();
        Ok(NodeHysteresis::regions(models, index)?)
    }

    pub fn load_model(&self) -> Load {
        self.load.iter().fold(Load::zero(), |acc, (p, t)| {
            acc.plus(p.clone(), t.clone()).expect("validated load")
        })
    }

    pub fn initial_field(&self) -> Field {
        Field::dirichlet(self.initial_values.clone()).expect("validated initial data")
    }

    pub fn step_config(&self) -> Result<StepConfig, CliError> {
        let mut cfg = StepConfig::new(self.time.ell, self.time.final_time)?;
        cfg.newton_tol = self.solver.newton_tol;
        cfg.newton_max_iter = self.solver.newton_max_iter;
        cfg.retry_halving = if self.solver.retry_halving { self.solver.max_halvings } else { 0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        Ok(Problem::new(
            self.grid(),
            self.energy_model(),
            self.capacity(),
            self.node_hysteresis()?,
            self.load_model(),
            self.initial_field(),
            self.step_config()?,
        )?)
    }

    /// Nodal right-hand side of the stationary problem.
    pub fn stationary_load(&self) -> Vec<f64> {
        let grid = self.grid();
        match &self.stationary {
            Some(p) => p.sample(&grid),
            None => self.load_model().at(&grid, self.time.final_time),
        }
    }

    /// The resolved document; parsing it again yields an equal spec.
    pub fn to_toml(&self) -> String {
        let mut root = Table::new();
        let mut grid = Table::new();
        grid.insert("n_cells".into(), int(self.grid.n_cells));
        grid.insert("length".into(), Value::Float(self.grid.length));
        root.insert("grid".into(), Value::Table(grid));

        let mut energy = Table::new();
        match &self.energy {
            EnergySpec::PPower { p, alpha1 } => {
                energy.insert("kind".into(), "ppower".into());
                energy.insert("p".into(), Value::Float(*p));
                energy.insert("alpha1".into(), Value::Float(*alpha1));
            }
            EnergySpec::RegularizedPPower { p, alpha1, delta } => {
                energy.insert("kind".into(), "regularized_ppower".into());
                energy.insert("p".into(), Value::Float(*p));
                energy.insert("alpha1".into(), Value::Float(*alpha1));
                energy.insert("delta".into(), Value::Float(*delta));
            }
            EnergySpec::Quadratic { k_field } => {
                energy.insert("kind".into(), "quadratic".into());
                energy.insert("k_field".into(), points(k_field));
            }
        }
        root.insert("energy".into(), Value::Table(energy));

        let mut hyst = model_table(&self.hysteresis.model);
        if !self.hysteresis.regions.is_empty() {
            let regions = self
                .hysteresis
                .regions
                .iter()
                .map(|(from, m)| {
                    let mut t = model_table(m);
                    t.insert("from".into(), Value::Float(*from));
                    Value::Table(t)
                })
                .collect();
            hyst.insert("regions".into(), Value::Array(regions));
        }
        root.insert("hysteresis".into(), Value::Table(hyst));

        let mut coef = Table::new();
        match &self.coefficient {
            CoefficientSpec::Constant(c) => coef.insert("value".into(), Value::Float(*c)),
            CoefficientSpec::Nodal(v) => coef.insert("nodal".into(), floats(v)),
        };
        root.insert("coefficient".into(), Value::Table(coef));

        let terms = self
            .load
            .iter()
            .map(|(p, t)| {
                let mut tab = profile_table(p);
                time_factor_into(t, &mut tab);
                Value::Table(tab)
            })
            .collect();
        let mut load = Table::new();
        load.insert("terms".into(), Value::Array(terms));
        root.insert("load".into(), Value::Table(load));

        let initial = match &self.initial {
            InitialSpec::Profile(p) => profile_table(p),
            InitialSpec::Csv { file, column } => {
                let mut t = Table::new();
                t.insert("profile".into(), "csv".into());
                t.insert("file".into(), file.display().to_string().into());
                t.insert("column".into(), column.clone().into());
                t
            }
        };
        root.insert("initial".into(), Value::Table(initial));

        let mut time = Table::new();
        time.insert("T".into(), Value::Float(self.time.final_time));
        time.insert("ell".into(), int(self.time.ell));
        root.insert("time".into(), Value::Table(time));

        let mut solver = Table::new();
        solver.insert("newton_tol".into(), Value::Float(self.solver.newton_tol));
        solver.insert("newton_max_iter".into(), int(self.solver.newton_max_iter));
        solver.insert("retry_halving".into(), Value::Boolean(self.solver.retry_halving));
        solver.insert("max_halvings".into(), int(self.solver.max_halvings));
        root.insert("solver".into(), Value::Table(solver));

        let mut output = Table::new();
        output.insert("stride".into(), int(self.output.stride));
        root.insert("output".into(), Value::Table(output));

        if let Some(p) = &self.stationary {
            root.insert("stationary".into(), Value::Table(profile_table(p)));
        }
        root.to_string()
    }
}

fn int(v: usize) -> Value {
    Value::Integer(v as i64)
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| Value::Float(*x)).collect())
}

fn points(v: &[(f64, f64)]) -> Value {
    Value::Array(v.iter().map(|(a, b)| floats(&[*a, *b])).collect())
}

fn model_table(m: &ModelSpec) -> Table {
    let mut t = Table::new();
    match m {
        ModelSpec::Zero => {
            t.insert("kind".into(), "zero".into());
        }
        ModelSpec::Play { radius, initial_output } => {
            t.insert("kind".into(), "play".into());
            t.insert("radius".into(), Value::Float(*radius));
            t.insert("initial_output".into(), Value::Float(*initial_output));
        }
        ModelSpec::Stop { radius } => {
            t.insert("kind".into(), "stop".into());
            t.insert("radius".into(), Value::Float(*radius));
        }
        ModelSpec::Preisach {
            beta_range,
            alpha_range,
            beta_count,
            alpha_count,
            weight,
            initially_up,
        } => {
            t.insert("kind".into(), "preisach".into());
            t.insert("beta_range".into(), floats(&[beta_range.0, beta_range.1]));
            t.insert("alpha_range".into(), floats(&[alpha_range.0, alpha_range.1]));
            t.insert("beta_count".into(), int(*beta_count));
            t.insert("alpha_count".into(), int(*alpha_count));
            t.insert("weight".into(), Value::Float(*weight));
            t.insert("initially_up".into(), Value::Boolean(*initially_up));
        }
        ModelSpec::Sum { terms } => {
            t.insert("kind".into(), "sum".into());
            let list = terms
                .iter()
                .map(|(w, m)| {
                    let mut tab = model_table(m);
                    tab.insert("weight".into(), Value::Float(*w));
                    Value::Table(tab)
                })
                .collect();
            t.insert("terms".into(), Value::Array(list));
        }
    }
    t
}

fn profile_table(p: &Profile) -> Table {
    let mut t = Table::new();
    match p {
        Profile::Zero => {
            t.insert("profile".into(), "zero".into());
        }
        Profile::Constant(v) => {
            t.insert("profile".into(), "constant".into());
            t.insert("value".into(), Value::Float(*v));
        }
        Profile::Sine { amplitude, mode } => {
            t.insert("profile".into(), "sine".into());
            t.insert("amplitude".into(), Value::Float(*amplitude));
            t.insert("mode".into(), Value::Integer(i64::from(*mode)));
        }
        Profile::Bump {
            center,
            half_width,
            height,
        } => {
            t.insert("profile".into(), "bump".into());
            t.insert("center".into(), Value::Float(*center));
            t.insert("half_width".into(), Value::Float(*half_width));
            t.insert("height".into(), Value::Float(*height));
        }
        Profile::Table(pts) => {
            t.insert("profile".into(), "table".into());
            t.insert("points".into(), points(pts));
        }
    }
    t
}

fn time_factor_into(f: &TimeFactor, t: &mut Table) {
    match f {
        TimeFactor::Constant => {
            t.insert("time".into(), "constant".into());
        }
        TimeFactor::Exp { rate } => {
            t.insert("time".into(), "exp".into());
            t.insert("rate".into(), Value::Float(*rate));
        }
        TimeFactor::Sin { omega, phase } => {
            t.insert("time".into(), "sin".into());
            t.insert("omega".into(), Value::Float(*omega));
            t.insert("phase".into(), Value::Float(*phase));
        }
        TimeFactor::Window { start, end } => {
            t.insert("time".into(), "window".into());
            t.insert("start".into(), Value::Float(*start));
            t.insert("end".into(), Value::Float(*end));
        }
        TimeFactor::Table(pts) => {
            t.insert("time".into(), "table".into());
            t.insert("time_points".into(), points(pts));
        }
    }
}

/// A table under validation, remembering which keys were consumed.
#[derive(Clone)]
struct Section<'a> {
    path: String,
    table: &'a Table,
    known: Vec<&'static str>,
}

impl<'a> Section<'a> {
    fn new(path: &str, table: &'a Table) -> Self {
        Section {
            path: path.to_string(),
            table,
            known: Vec::new(),
        }
    }

    fn key(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn child(&mut self, ck: &mut Checker, key: &'static str, required: bool) -> Option<Section<'a>> {
        self.known.push(key);
        match self.table.get(key) {
            Some(Value::Table(t)) => Some(Section::new(&self.key(key), t)),
            Some(_) => {
                ck.push(self.key(key), "expected a table");
                None
            }
            None => {
                if required {
                    ck.push(self.key(key), "missing required section");
                }
                None
            }
        }
    }
}

#[derive(Default)]
struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    fn core<T>(&mut self, path: &str, r: hystdiff::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(path, e.to_string());
                None
            }
        }
    }

    fn get<'a, T>(
        &mut self,
        s: &mut Section<'a>,
        key: &'static str,
        required: bool,
        expected: &str,
        extract: impl Fn(&'a Value) -> Option<T>,
    ) -> Option<T> {
        s.known.push(key);
        match s.table.get(key) {
            None => {
                if required {
                    self.push(s.key(key), "missing required key");
                }
                None
            }
            Some(v) => {
                let out = extract(v);
                if out.is_none() {
                    self.push(s.key(key), format!("expected {expected}, got {}", v.type_str()));
                }
                out
            }
        }
    }

    fn float(&mut self, s: &mut Section, key: &'static str, required: bool) -> Option<f64> {
        self.get(s, key, required, "a number", as_float)
    }

    fn int(&mut self, s: &mut Section, key: &'static str, required: bool) -> Option<usize> {
        self.get(s, key, required, "a non-negative integer", |v| {
            v.as_integer().and_then(|i| usize::try_from(i).ok())
        })
    }

    fn boolean(&mut self, s: &mut Section, key: &'static str, required: bool) -> Option<bool> {
        self.get(s, key, required, "a boolean", Value::as_bool)
    }

    fn string(&mut self, s: &mut Section, key: &'static str, required: bool) -> Option<String> {
        self.get(s, key, required, "a string", |v| v.as_str().map(str::to_string))
    }

    fn floats(&mut self, s: &mut Section, key: &'static str) -> Option<Vec<f64>> {
        self.get(s, key, false, "an array of numbers", |v| {
            v.as_array()?.iter().map(as_float).collect()
        })
    }

    fn pair(&mut self, s: &mut Section, key: &'static str) -> Option<(f64, f64)> {
        self.get(s, key, true, "a pair [lo, hi]", |v| {
            let a = v.as_array()?;
            match a.as_slice() {
                [x, y] => Some((as_float(x)?, as_float(y)?)),
                _ => None,
            }
        })
    }

    fn points(&mut self, s: &mut Section, key: &'static str) -> Option<Vec<(f64, f64)>> {
        self.get(s, key, false, "an array of [x, value] pairs", |v| {
            v.as_array()?
                .iter()
                .map(|p| match p.as_array()?.as_slice() {
                    [x, y] => Some((as_float(x)?, as_float(y)?)),
                    _ => None,
                })
                .collect()
        })
    }

    fn tables<'a>(&mut self, s: &mut Section<'a>, key: &'static str) -> Option<Vec<Section<'a>>> {
        let path = s.key(key);
        let list = self.get(s, key, false, "an array of tables", |v| {
            v.as_array()?.iter().map(Value::as_table).collect::<Option<Vec<_>>>()
        })?;
        Some(
            list.into_iter()
                .enumerate()
                .map(|(i, t)| Section::new(&format!("{path}[{i}]"), t))
                .collect(),
        )
    }

    /// Reports keys nobody asked for.
    fn finish(&mut self, s: Section) {
        for k in s.table.keys() {
            if !s.known.contains(&k.as_str()) {
                self.push(s.key(k), "unknown key");
            }
        }
    }
}

fn as_float(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}
