//! TOML configuration layer. Every key is optional with documented
//! defaults, unknown keys are rejected, and errors carry the line of the
//! offending key whenever it can be located in the source text.
//!
//! Sections: `[mesh]`, `[conductivity]`, `[heat]`, `[boundary]`, `[time]`,
//! `[solver]`, `[continuation]`. Shape-valued keys take inline tables with
//! a `shape` discriminant, e.g.
//!
//! ```toml
//! [conductivity]
//! kind = "regularized_plap"
//! p = 3.0
//! sigma0 = { shape = "affine_clamped", intercept = 1.0, slope = 0.1, lo = 0.5, hi = 2.0 }
//! ```

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use toml::value::Table;
use toml::Value;

use crate::constitutive::{AlphaShape, ConductivityModel, HeatModel, SpaceShape, TempShape};
use crate::coupling::{Ramp, SimulationConfig, SOLVER_P_MAX, SOLVER_P_MIN};
use crate::mesh::{build_mesh, Field, Rect, Side};

#[derive(Debug)]
pub enum ConfigError {
    /// TOML syntax or schema violation.
    Parse { line: Option<usize>, message: String },
    /// Well-formed TOML describing an inadmissible problem.
    Invalid { line: Option<usize>, message: String },
    Io { path: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line: Some(l), message } => {
                write!(f, "config parse error at line {l}: {message}")
            }
            ConfigError::Parse { line: None, message } => {
                write!(f, "config parse error: {message}")
            }
            ConfigError::Invalid { line: Some(l), message } => {
                write!(f, "invalid config at line {l}: {message}")
            }
            ConfigError::Invalid { line: None, message } => {
                write!(f, "invalid config: {message}")
            }
            ConfigError::Io { path, message } => {
                write!(f, "cannot read config {path}: {message}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        line,
        message: message.into(),
    }
}

/// Line (1-based) of the unique `key = ...` assignment, if exactly one
/// line in the text matches.
fn find_key_line(raw: &str, key: &str) -> Option<usize> {
    let mut hit = None;
    for (i, line) in raw.lines().enumerate() {
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                if hit.is_some() {
                    return None;
                }
                hit = Some(i + 1);
            }
        }
    }
    hit
}

fn byte_to_line(raw: &str, byte: usize) -> usize {
    raw[..byte.min(raw.len())].matches('\n').count() + 1
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    mesh: MeshSection,
    #[serde(default)]
    conductivity: CondSection,
    #[serde(default)]
    heat: HeatSection,
    #[serde(default)]
    boundary: BoundarySection,
    #[serde(default)]
    time: TimeSection,
    #[serde(default)]
    solver: SolverSection,
    #[serde(default)]
    continuation: ContinuationSection,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct MeshSection {
    nx: Option<usize>,
    ny: Option<usize>,
    x0: Option<f64>,
    x1: Option<f64>,
    y0: Option<f64>,
    y1: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CondSection {
    kind: Option<String>,
    p: Option<f64>,
    delta: Option<f64>,
    sigma0: Option<Value>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct HeatSection {
    kappa: Option<Value>,
    g: Option<f64>,
    h: Option<f64>,
    alpha: Option<Value>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct BoundarySection {
    dirichlet_sides: Option<Vec<String>>,
    phi_left: Option<f64>,
    phi_right: Option<f64>,
    phi_bottom: Option<f64>,
    phi_top: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct TimeSection {
    t_final: Option<f64>,
    dt: Option<f64>,
    u_initial: Option<Value>,
    ramp: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    potential_tol: Option<f64>,
    potential_max_iter: Option<usize>,
    picard_tol: Option<f64>,
    picard_max_iter: Option<usize>,
    outer_iterations: Option<usize>,
    outer_tol: Option<f64>,
    lambda: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ContinuationSection {
    eps_schedule: Option<Vec<f64>>,
    eps_in_operator: Option<bool>,
    eps_in_source: Option<bool>,
}

fn shape_table<'v>(value: &'v Value, key: &str, raw: &str) -> Result<&'v Table, ConfigError> {
    value.as_table().ok_or_else(|| {
        ConfigError::Parse {
            line: find_key_line(raw, key),
            message: format!("`{key}` must be a table with a `shape` field"),
        }
    })
}

fn table_f64(table: &Table, field: &str, key: &str, raw: &str) -> Result<f64, ConfigError> {
    match table.get(field) {
        Some(Value::Float(f)) => Ok(*f),
        Some(Value::Integer(i)) => Ok(*i as f64),
        Some(_) => Err(ConfigError::Parse {
            line: find_key_line(raw, key),
            message: format!("`{key}.{field}` must be a number"),
        }),
        None => Err(ConfigError::Parse {
            line: find_key_line(raw, key),
            message: format!("`{key}` shape is missing field `{field}`"),
        }),
    }
}

fn check_fields(table: &Table, allowed: &[&str], key: &str, raw: &str) -> Result<(), ConfigError> {
    for name in table.keys() {
        if name != "shape" && !allowed.contains(&name.as_str()) {
            return Err(ConfigError::Parse {
                line: find_key_line(raw, key),
                message: format!("`{key}` shape has unknown field `{name}`"),
            });
        }
    }
    Ok(())
}

fn shape_kind<'t>(table: &'t Table, key: &str, raw: &str) -> Result<&'t str, ConfigError> {
    table
        .get("shape")
        .and_then(|v| v.as_str())
        .ok_or_else(|| ConfigError::Parse {
            line: find_key_line(raw, key),
            message: format!("`{key}` must declare a string `shape` field"),
        })
}

fn parse_temp_shape(value: &Value, key: &str, raw: &str) -> Result<TempShape, ConfigError> {
    let table = shape_table(value, key, raw)?;
    match shape_kind(table, key, raw)? {
        "constant" => {
            check_fields(table, &["value"], key, raw)?;
            Ok(TempShape::Constant {
                value: table_f64(table, "value", key, raw)?,
            })
        }
        "affine_clamped" => {
            check_fields(table, &["intercept", "slope", "lo", "hi"], key, raw)?;
            Ok(TempShape::AffineClamped {
                intercept: table_f64(table, "intercept", key, raw)?,
                slope: table_f64(table, "slope", key, raw)?,
                lo: table_f64(table, "lo", key, raw)?,
                hi: table_f64(table, "hi", key, raw)?,
            })
        }
        "gaussian_bump" => {
            check_fields(table, &["base", "amplitude", "center", "width"], key, raw)?;
            Ok(TempShape::GaussianBump {
                base: table_f64(table, "base", key, raw)?,
                amplitude: table_f64(table, "amplitude", key, raw)?,
                center: table_f64(table, "center", key, raw)?,
                width: table_f64(table, "width", key, raw)?,
            })
        }
        other => Err(ConfigError::Parse {
            line: find_key_line(raw, key),
            message: format!(
                "`{key}` shape `{other}` is not one of constant, affine_clamped, gaussian_bump"
            ),
        }),
    }
}

fn parse_alpha_shape(value: &Value, key: &str, raw: &str) -> Result<AlphaShape, ConfigError> {
    let table = shape_table(value, key, raw)?;
    match shape_kind(table, key, raw)? {
        "constant" => {
            check_fields(table, &["value"], key, raw)?;
            Ok(AlphaShape::Constant {
                value: table_f64(table, "value", key, raw)?,
            })
        }
        "checkerboard" => {
            check_fields(table, &["value_on", "value_off", "cell"], key, raw)?;
            Ok(AlphaShape::Checkerboard {
                value_on: table_f64(table, "value_on", key, raw)?,
                value_off: table_f64(table, "value_off", key, raw)?,
                cell: table_f64(table, "cell", key, raw)?,
            })
        }
        other => Err(ConfigError::Parse {
            line: find_key_line(raw, key),
            message: format!("`{key}` shape `{other}` is not one of constant, checkerboard"),
        }),
    }
}

fn parse_space_shape(value: &Value, key: &str, raw: &str) -> Result<SpaceShape, ConfigError> {
    let table = shape_table(value, key, raw)?;
    match shape_kind(table, key, raw)? {
        "constant" => {
            check_fields(table, &["value"], key, raw)?;
            Ok(SpaceShape::Constant {
                value: table_f64(table, "value", key, raw)?,
            })
        }
        "gaussian_bump" => {
            check_fields(table, &["base", "amplitude", "cx", "cy", "width"], key, raw)?;
            Ok(SpaceShape::GaussianBump {
                base: table_f64(table, "base", key, raw)?,
                amplitude: table_f64(table, "amplitude", key, raw)?,
                cx: table_f64(table, "cx", key, raw)?,
                cy: table_f64(table, "cy", key, raw)?,
                width: table_f64(table, "width", key, raw)?,
            })
        }
        other => Err(ConfigError::Parse {
            line: find_key_line(raw, key),
            message: format!("`{key}` shape `{other}` is not one of constant, gaussian_bump"),
        }),
    }
}

fn parse_side(name: &str, raw: &str) -> Result<Side, ConfigError> {
    match name {
        "left" => Ok(Side::Left),
        "right" => Ok(Side::Right),
        "bottom" => Ok(Side::Bottom),
        "top" => Ok(Side::Top),
        other => Err(ConfigError::Parse {
            line: find_key_line(raw, "dirichlet_sides"),
            message: format!("unknown side `{other}`; use left, right, bottom, top"),
        }),
    }
}

/// Parse a TOML document into a validated runtime configuration.
pub fn parse_config(raw: &str) -> Result<SimulationConfig, ConfigError> {
    let file: FileConfig = toml::from_str(raw).map_err(|e| ConfigError::Parse {
        line: e.span().map(|s| byte_to_line(raw, s.start)),
        message: e.message().to_string(),
    })?;

    let nx = file.mesh.nx.unwrap_or(16);
    let ny = file.mesh.ny.unwrap_or(16);
    let rect = Rect {
        x0: file.mesh.x0.unwrap_or(0.0),
        x1: file.mesh.x1.unwrap_or(1.0),
        y0: file.mesh.y0.unwrap_or(0.0),
        y1: file.mesh.y1.unwrap_or(1.0),
    };

    let sides_defaulted = file.boundary.dirichlet_sides.is_none();
    let side_names = file
        .boundary
        .dirichlet_sides
        .clone()
        .unwrap_or_else(|| vec!["left".to_string(), "right".to_string()]);
    let mut dirichlet_sides = Vec::new();
    for name in &side_names {
        let side = parse_side(name, raw)?;
        if dirichlet_sides.contains(&side) {
            return Err(invalid(
                find_key_line(raw, "dirichlet_sides"),
                format!("side `{name}` listed twice in dirichlet_sides"),
            ));
        }
        dirichlet_sides.push(side);
    }

    let mesh = build_mesh(nx, ny, rect, &dirichlet_sides)
        .map_err(|e| invalid(None, format!("mesh construction failed: {e}")))?;

    let sigma0 = match &file.conductivity.sigma0 {
        Some(v) => parse_temp_shape(v, "sigma0", raw)?,
        None => TempShape::Constant { value: 1.0 },
    };
    let p = file.conductivity.p.unwrap_or(2.0);
    let kind = file
        .conductivity
        .kind
        .unwrap_or_else(|| "regularized_plap".to_string());
    let conductivity = match kind.as_str() {
        "regularized_plap" => {
            let delta = file.conductivity.delta.unwrap_or(1.0);
            ConductivityModel::regularized(sigma0, delta, p)
        }
        "pure_plap" => {
            if file.conductivity.delta.is_some() {
                return Err(invalid(
                    find_key_line(raw, "delta"),
                    "`delta` does not apply to kind = \"pure_plap\"",
                ));
            }
            ConductivityModel::pure(sigma0, p)
        }
        other => {
            return Err(ConfigError::Parse {
                line: find_key_line(raw, "kind"),
                message: format!(
                    "conductivity kind `{other}` is not one of regularized_plap, pure_plap"
                ),
            })
        }
    }
    .map_err(|e| invalid(find_key_line(raw, "p"), e.to_string()))?;

    if !(SOLVER_P_MIN..=SOLVER_P_MAX).contains(&p) {
        return Err(invalid(
            find_key_line(raw, "p"),
            format!("solver supports p in [{SOLVER_P_MIN}, {SOLVER_P_MAX}], got {p}"),
        ));
    }

    let kappa = match &file.heat.kappa {
        Some(v) => parse_temp_shape(v, "kappa", raw)?,
        None => TempShape::Constant { value: 1.0 },
    };
    let alpha = match &file.heat.alpha {
        Some(v) => parse_alpha_shape(v, "alpha", raw)?,
        None => AlphaShape::Constant { value: 1.0 },
    };
    let heat = HeatModel::new(
        kappa,
        file.heat.g.unwrap_or(1.0),
        file.heat.h.unwrap_or(0.0),
        alpha,
    )
    .map_err(|e| invalid(find_key_line(raw, "g"), e.to_string()))?;

    let phi_of_side = |side: Side| -> Option<f64> {
        match side {
            Side::Left => file.boundary.phi_left,
            Side::Right => file.boundary.phi_right,
            Side::Bottom => file.boundary.phi_bottom,
            Side::Top => file.boundary.phi_top,
        }
    };
    let default_phi = |side: Side| -> f64 {
        match side {
            Side::Left => 0.0,
            Side::Right => 1.0,
            Side::Bottom | Side::Top => 0.0,
        }
    };
    for side in Side::ALL {
        let key = format!("phi_{}", side.name());
        if phi_of_side(side).is_some() && !dirichlet_sides.contains(&side) {
            return Err(invalid(
                find_key_line(raw, &key),
                format!("`{key}` set, but `{}` is not a Dirichlet side", side.name()),
            ));
        }
    }
    let mut side_values = Vec::new();
    for &side in &dirichlet_sides {
        let key = format!("phi_{}", side.name());
        let value = match phi_of_side(side) {
            Some(v) => v,
            None if sides_defaulted => default_phi(side),
            None => {
                return Err(invalid(
                    find_key_line(raw, "dirichlet_sides"),
                    format!("Dirichlet side `{}` needs `{key}`", side.name()),
                ))
            }
        };
        if !value.is_finite() {
            return Err(invalid(
                find_key_line(raw, &key),
                format!("`{key}` must be finite"),
            ));
        }
        side_values.push((side, value));
    }
    for (i, &(a, va)) in side_values.iter().enumerate() {
        for &(b, vb) in side_values.iter().skip(i + 1) {
            let adjacent = a.is_vertical() != b.is_vertical();
            if adjacent && va != vb {
                return Err(invalid(
                    find_key_line(raw, "dirichlet_sides"),
                    format!(
                        "sides {} and {} share a corner but carry different potentials \
                         ({va} vs {vb})",
                        a.name(),
                        b.name()
                    ),
                ));
            }
        }
    }
    let mut phi_dirichlet = Field::constant(&mesh, 0.0);
    for edge in mesh.boundary_edges() {
        if let Some(&(_, value)) = side_values.iter().find(|(s, _)| *s == edge.side) {
            phi_dirichlet.values[edge.vertices.0] = value;
            phi_dirichlet.values[edge.vertices.1] = value;
        }
    }
    // Corners shared by two Dirichlet sides were just written twice with
    // equal values; corners owned by the segment ordering stay consistent.
    for (side, verts) in mesh.dirichlet_segments() {
        let value = side_values
            .iter()
            .find(|(s, _)| *s == side)
            .map(|&(_, v)| v)
            .expect("segment side is Dirichlet");
        for v in verts {
            phi_dirichlet.values[v] = value;
        }
    }

    let u_shape = match &file.time.u_initial {
        Some(v) => parse_space_shape(v, "u_initial", raw)?,
        None => SpaceShape::Constant { value: 0.0 },
    };
    u_shape
        .validate()
        .map_err(|e| invalid(find_key_line(raw, "u_initial"), e.to_string()))?;
    let u_initial = Field::from_fn(&mesh, |x, y| u_shape.eval(x, y));

    let ramp = match file.time.ramp.as_deref() {
        None | Some("constant") => Ramp::Constant,
        Some("linear_start") => Ramp::LinearStart,
        Some(other) => {
            return Err(ConfigError::Parse {
                line: find_key_line(raw, "ramp"),
                message: format!("ramp `{other}` is not one of constant, linear_start"),
            })
        }
    };

    let t_final = file.time.t_final.unwrap_or(1.0);
    let dt = file.time.dt.unwrap_or(0.1);
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(invalid(
            find_key_line(raw, "t_final"),
            format!("t_final must be positive, got {t_final}"),
        ));
    }
    if !(dt > 0.0) || dt > t_final {
        return Err(invalid(
            find_key_line(raw, "dt"),
            format!("dt must lie in (0, t_final], got {dt}"),
        ));
    }
    let ratio = t_final / dt;
    if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
        return Err(invalid(
            find_key_line(raw, "dt"),
            format!("t_final / dt = {ratio} is not an integer; choose a commensurate dt"),
        ));
    }

    let eps_schedule = file.continuation.eps_schedule.unwrap_or_else(|| vec![0.0]);
    for w in eps_schedule.windows(2) {
        if w[1] > w[0] {
            return Err(invalid(
                find_key_line(raw, "eps_schedule"),
                format!("eps_schedule must be nonincreasing, got {} before {}", w[0], w[1]),
            ));
        }
    }
    if eps_schedule.is_empty() || eps_schedule.iter().any(|&e| !(e >= 0.0) || !e.is_finite()) {
        return Err(invalid(
            find_key_line(raw, "eps_schedule"),
            "eps_schedule must be a nonempty list of finite, nonnegative values",
        ));
    }

    let lambda = file.solver.lambda.unwrap_or(0.5);
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid(
            find_key_line(raw, "lambda"),
            format!("lambda must lie in (0, 1), got {lambda}"),
        ));
    }

    let config = SimulationConfig {
        mesh,
        conductivity,
        heat,
        phi_dirichlet,
        u_initial,
        t_final,
        dt,
        eps_schedule,
        eps_in_operator: file.continuation.eps_in_operator.unwrap_or(true),
        eps_in_source: file.continuation.eps_in_source.unwrap_or(true),
        ramp,
        outer_iterations: file.solver.outer_iterations.unwrap_or(2),
        outer_tol: file.solver.outer_tol.unwrap_or(1e-8),
        potential_tol: file.solver.potential_tol.unwrap_or(1e-10),
        potential_max_iter: file.solver.potential_max_iter.unwrap_or(60),
        picard_tol: file.solver.picard_tol.unwrap_or(1e-10),
        picard_max_iter: file.solver.picard_max_iter.unwrap_or(40),
        lambda,
    };
    config
        .validate()
        .map_err(|e| invalid(None, e.to_string()))?;
    Ok(config)
}

/// Read and parse a configuration file.
pub fn parse_config_file(path: &Path) -> Result<SimulationConfig, ConfigError> {
    let raw = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::ConductivityKind;

    #[test]
    fn empty_document_yields_full_defaults() {
        let config = parse_config("").unwrap();
        assert_eq!(config.mesh.nx(), 16);
        assert_eq!(config.mesh.ny(), 16);
        assert_eq!(config.conductivity.p(), 2.0);
        assert_eq!(config.conductivity.kind(), ConductivityKind::RegularizedPLap);
        assert_eq!(config.heat.g, 1.0);
        assert_eq!(config.heat.h, 0.0);
        assert_eq!(config.t_final, 1.0);
        assert_eq!(config.dt, 0.1);
        assert_eq!(config.eps_schedule, vec![0.0]);
        assert_eq!(config.ramp, Ramp::Constant);
        assert_eq!(config.lambda, 0.5);
        assert_eq!(
            config.mesh.dirichlet_sides(),
            &[Side::Left, Side::Right]
        );
        // Default electrodes: 0 on the left, 1 on the right.
        for (side, verts) in config.mesh.dirichlet_segments() {
            let expect = if side == Side::Left { 0.0 } else { 1.0 };
            for v in verts {
                assert_eq!(config.phi_dirichlet.values[v], expect);
            }
        }
    }

    #[test]
    fn full_document_round_trips() {
        let text = r#"
[mesh]
nx = 8
ny = 4
x0 = 0.0
x1 = 2.0
y0 = -1.0
y1 = 1.0

[conductivity]
kind = "pure_plap"
p = 3.0
sigma0 = { shape = "affine_clamped", intercept = 1.0, slope = 0.1, lo = 0.5, hi = 2.0 }

[heat]
kappa = { shape = "gaussian_bump", base = 1.0, amplitude = 0.5, center = 2.0, width = 1.5 }
g = 2.0
h = 0.25
alpha = { shape = "checkerboard", value_on = 1.0, value_off = 0.0, cell = 0.5 }

[boundary]
dirichlet_sides = ["left", "right"]
phi_left = -1.0
phi_right = 1.0

[time]
t_final = 2.0
dt = 0.5
u_initial = { shape = "gaussian_bump", base = 0.25, amplitude = 1.0, cx = 1.0, cy = 0.0, width = 0.4 }
ramp = "linear_start"

[solver]
potential_tol = 1e-9
potential_max_iter = 50
picard_tol = 1e-9
picard_max_iter = 30
outer_iterations = 3
outer_tol = 1e-7
lambda = 0.25

[continuation]
eps_schedule = [1.0, 0.1, 0.0]
eps_in_operator = true
eps_in_source = false
"#;
        let config = parse_config(text).unwrap();
        assert_eq!(config.mesh.nx(), 8);
        assert_eq!(config.mesh.ny(), 4);
        assert_eq!(config.conductivity.kind(), ConductivityKind::PurePLap);
        assert_eq!(config.conductivity.p(), 3.0);
        assert_eq!(config.heat.g, 2.0);
        assert_eq!(config.heat.h, 0.25);
        assert_eq!(config.t_final, 2.0);
        assert_eq!(config.n_steps(), 4);
        assert_eq!(config.eps_schedule, vec![1.0, 0.1, 0.0]);
        assert!(config.eps_in_operator);
        assert!(!config.eps_in_source);
        assert_eq!(config.ramp, Ramp::LinearStart);
        assert_eq!(config.outer_iterations, 3);
        assert_eq!(config.lambda, 0.25);
        // alpha checkerboard alternates across cells.
        assert_eq!(config.heat.alpha_at(0.1, 0.1, 0.0, 0.0), 1.0);
        assert_eq!(config.heat.alpha_at(0.6, 0.1, 0.0, 0.0), 0.0);
        // u_initial peaks at the bump center.
        let peak = config
            .u_initial
            .values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((peak - 1.25).abs() <= 1e-12);
    }

    #[test]
    fn pure_plap_with_small_exponent_is_rejected_with_line() {
        let text = "[conductivity]\nkind = \"pure_plap\"\np = 1.5\n";
        match parse_config(text) {
            Err(ConfigError::Invalid { line, message }) => {
                assert_eq!(line, Some(3));
                assert!(message.contains("p >= 2"), "{message}");
            }
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_exponent_is_rejected() {
        let text = "[conductivity]\np = 8.0\n";
        match parse_config(text) {
            Err(ConfigError::Invalid { line, message }) => {
                assert_eq!(line, Some(2));
                assert!(message.contains("[1.2, 6]"), "{message}");
            }
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let text = "[mesh]\nnx = 4\nmisspelled = 1\n";
        match parse_config(text) {
            Err(ConfigError::Parse { line, message }) => {
                assert_eq!(line, Some(3));
                assert!(message.contains("misspelled"), "{message}");
            }
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn increasing_eps_schedule_is_rejected_with_line() {
        let text = "[continuation]\neps_schedule = [0.1, 1.0]\n";
        match parse_config(text) {
            Err(ConfigError::Invalid { line, message }) => {
                assert_eq!(line, Some(2));
                assert!(message.contains("nonincreasing"), "{message}");
            }
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn repeated_zero_schedule_is_accepted() {
        let text = "[continuation]\neps_schedule = [1.0, 0.1, 0.0, 0.0]\n";
        let config = parse_config(text).unwrap();
        assert_eq!(config.eps_schedule, vec![1.0, 0.1, 0.0, 0.0]);
    }

    #[test]
    fn non_commensurate_horizon_is_rejected_with_line() {
        let text = "[time]\nt_final = 1.0\ndt = 0.3\n";
        match parse_config(text) {
            Err(ConfigError::Invalid { line, message }) => {
                assert_eq!(line, Some(3));
                assert!(message.contains("not an integer"), "{message}");
            }
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn missing_side_potential_is_rejected() {
        let text = "[boundary]\ndirichlet_sides = [\"left\", \"right\"]\nphi_left = 0.0\n";
        match parse_config(text) {
            Err(ConfigError::Invalid { message, .. }) => {
                assert!(message.contains("phi_right"), "{message}");
            }
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn potential_on_non_dirichlet_side_is_rejected() {
        let text = "[boundary]\ndirichlet_sides = [\"left\", \"right\"]\nphi_left = 0.0\nphi_right = 1.0\nphi_top = 2.0\n";
        match parse_config(text) {
            Err(ConfigError::Invalid { line, message }) => {
                assert_eq!(line, Some(5));
                assert!(message.contains("phi_top"), "{message}");
            }
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn corner_conflict_is_rejected() {
        let text = "[boundary]\ndirichlet_sides = [\"left\", \"bottom\"]\nphi_left = 0.0\nphi_bottom = 1.0\n";
        match parse_config(text) {
            Err(ConfigError::Invalid { message, .. }) => {
                assert!(message.contains("corner"), "{message}");
            }
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn agreeing_corner_sides_are_accepted() {
        let text = "[boundary]\ndirichlet_sides = [\"left\", \"bottom\"]\nphi_left = 0.5\nphi_bottom = 0.5\n";
        let config = parse_config(text).unwrap();
        assert_eq!(
            config.mesh.dirichlet_sides(),
            &[Side::Left, Side::Bottom]
        );
    }

    #[test]
    fn bad_shape_discriminant_is_rejected_with_line() {
        let text = "[heat]\nkappa = { shape = \"cubic\", value = 1.0 }\n";
        match parse_config(text) {
            Err(ConfigError::Parse { line, message }) => {
                assert_eq!(line, Some(2));
                assert!(message.contains("cubic"), "{message}");
            }
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn unknown_shape_field_is_rejected() {
        let text = "[conductivity]\nsigma0 = { shape = \"constant\", value = 1.0, extra = 2.0 }\n";
        match parse_config(text) {
            Err(ConfigError::Parse { line, message }) => {
                assert_eq!(line, Some(2));
                assert!(message.contains("extra"), "{message}");
            }
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn delta_with_pure_plap_is_rejected() {
        let text = "[conductivity]\nkind = \"pure_plap\"\np = 3.0\ndelta = 0.5\n";
        match parse_config(text) {
            Err(ConfigError::Invalid { line, message }) => {
                assert_eq!(line, Some(4));
                assert!(message.contains("pure_plap"), "{message}");
            }
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn integer_literals_are_accepted_as_numbers() {
        let text = "[conductivity]\nsigma0 = { shape = \"constant\", value = 2 }\n";
        let config = parse_config(text).unwrap();
        assert_eq!(config.conductivity.sigma0_at(0.0), 2.0);
    }
}
