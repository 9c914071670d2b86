//! Solver-agnostic MILP representation, deterministic MPS serialization, and
//! pluggable solve adapters (in-process HiGHS or an external command that maps
//! an MPS file to a solution file).

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjSense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub sense: RowSense,
    pub rhs: f64,
    /// Sparse (variable handle, coefficient) pairs.
    pub coeffs: Vec<(usize, f64)>,
}

/// A mixed-integer linear program with insertion-ordered variables and rows.
#[derive(Debug, Clone)]
pub struct MilpModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub rows: Vec<Row>,
    pub objective: Vec<(usize, f64)>,
    pub sense: ObjSense,
    var_index: HashMap<String, usize>,
    row_index: HashMap<String, usize>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 255
        && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            variables: Vec::new(),
            rows: Vec::new(),
            objective: Vec::new(),
            sense: ObjSense::Minimize,
            var_index: HashMap::new(),
            row_index: HashMap::new(),
        }
    }

    /// Adds a variable; the returned handle is its stable index.
    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
    ) -> Result<usize, Error> {
        let name = name.into();
        if !valid_name(&name) {
            return Err(Error::model(format!("invalid variable name {name:?}")));
        }
        if self.var_index.contains_key(&name) {
            return Err(Error::model(format!("duplicate variable name {name:?}")));
        }
        if lower > upper {
            return Err(Error::model(format!("variable {name}: lower {lower} > upper {upper}")));
        }
        if kind == VarKind::Binary && !(lower >= 0.0 && upper <= 1.0) {
            return Err(Error::model(format!("binary {name} bounds [{lower}, {upper}] ⊄ [0, 1]")));
        }
        let handle = self.variables.len();
        self.var_index.insert(name.clone(), handle);
        self.variables.push(Variable { name, kind, lower, upper });
        Ok(handle)
    }

    /// Adds a row; coefficients reference variable handles.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        sense: RowSense,
        rhs: f64,
        coeffs: &[(usize, f64)],
    ) -> Result<usize, Error> {
        let name = name.into();
        if !valid_name(&name) {
            return Err(Error::model(format!("invalid row name {name:?}")));
        }
        if self.row_index.contains_key(&name) {
            return Err(Error::model(format!("duplicate row name {name:?}")));
        }
        for &(h, _) in coeffs {
            if h >= self.variables.len() {
                return Err(Error::model(format!("row {name}: unknown variable handle {h}")));
            }
        }
        if coeffs.is_empty() {
            // A constant row: 0 <sense> rhs must already hold.
            let ok = match sense {
                RowSense::Le => 0.0 <= rhs,
                RowSense::Ge => 0.0 >= rhs,
                RowSense::Eq => rhs == 0.0,
            };
            if !ok {
                return Err(Error::model(format!("constant row {name} is trivially infeasible")));
            }
        }
        let handle = self.rows.len();
        self.row_index.insert(name.clone(), handle);
        self.rows.push(Row { name, sense, rhs, coeffs: coeffs.to_vec() });
        Ok(handle)
    }

    pub fn set_objective(&mut self, coeffs: &[(usize, f64)], sense: ObjSense) -> Result<(), Error> {
        for &(h, _) in coeffs {
            if h >= self.variables.len() {
                return Err(Error::model(format!("objective: unknown variable handle {h}")));
            }
        }
        self.objective = coeffs.to_vec();
        self.sense = sense;
        Ok(())
    }

    pub fn variable_handle(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    /// (variable count, row count).
    pub fn dimensions(&self) -> (usize, usize) {
        (self.variables.len(), self.rows.len())
    }

    pub fn validate(&self) -> Result<(), Error> {
        for v in &self.variables {
            if v.lower > v.upper {
                return Err(Error::model(format!("variable {}: inverted bounds", v.name)));
            }
            if v.kind == VarKind::Binary && !(v.lower >= 0.0 && v.upper <= 1.0) {
                return Err(Error::model(format!("binary {} bounds outside [0, 1]", v.name)));
            }
        }
        Ok(())
    }

    /// Objective value of an assignment given as per-variable values.
    pub fn objective_of(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(h, c)| c * values[h]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionStatus {
    Optimal,
    FeasibleGap,
    Infeasible,
    Unbounded,
    TimeLimit,
    SolverError,
}

impl SolutionStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolutionStatus::Optimal => "optimal",
            SolutionStatus::FeasibleGap => "feasible_gap",
            SolutionStatus::Infeasible => "infeasible",
            SolutionStatus::Unbounded => "unbounded",
            SolutionStatus::TimeLimit => "time_limit",
            SolutionStatus::SolverError => "solver_error",
        }
    }

    pub fn from_str(s: &str) -> Option<Self> {
        Some(match s {
            "optimal" => SolutionStatus::Optimal,
            "feasible_gap" => SolutionStatus::FeasibleGap,
            "infeasible" => SolutionStatus::Infeasible,
            "unbounded" => SolutionStatus::Unbounded,
            "time_limit" => SolutionStatus::TimeLimit,
            "solver_error" => SolutionStatus::SolverError,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolutionStatus,
    pub objective_value: Option<f64>,
    /// Present iff the solver produced an incumbent.
    pub values: Option<BTreeMap<String, f64>>,
    pub mip_gap: Option<f64>,
}

impl Solution {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.as_ref().and_then(|m| m.get(name).copied())
    }

    pub fn has_values(&self) -> bool {
        self.values.is_some()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// "highs" for the linked solver, or "external:<command>" for an adapter
    /// executable invoked as `<command> <mps-path> <solution-path>`.
    pub backend: String,
    pub time_limit_s: f64,
    pub mip_gap_target: f64,
    /// 0 = solver default.
    pub threads: usize,
    pub binary_integrality_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            backend: "highs".to_string(),
            time_limit_s: 3600.0,
            mip_gap_target: 0.005,
            threads: 0,
            binary_integrality_tolerance: 1e-5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.time_limit_s > 0.0) {
            return Err(Error::config("solver.time_limit_s must be positive"));
        }
        if !(self.mip_gap_target >= 0.0 && self.mip_gap_target < 1.0) {
            return Err(Error::config("solver.mip_gap_target must lie in [0, 1)"));
        }
        if !(self.binary_integrality_tolerance > 0.0 && self.binary_integrality_tolerance < 0.5) {
            return Err(Error::config("solver.binary_integrality_tolerance must lie in (0, 0.5)"));
        }
        Ok(())
    }
}

/// Tightest admissible big-M for a constraint family whose participating terms
/// have absolute bounds summing to `bound_magnitude`.
pub fn big_m_for(bound_magnitude: f64) -> Result<f64, Error> {
    if !(bound_magnitude > 0.0) {
        return Err(Error::model(format!(
            "big-M family has no active terms (magnitude {bound_magnitude})"
        )));
    }
    Ok(bound_magnitude * 1.05)
}

// ---------------------------------------------------------------------------
// MPS serialization
// ---------------------------------------------------------------------------

/// Formats a coefficient losslessly; plain decimal
/// notation for |x| in [1e-4, 1e12), exponent notation outside.
fn fmt_mps_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    // Both forms print the shortest digit string that parses back to the
    // exact same f64, so coefficients survive a write/read cycle losslessly.
    let a = x.abs();
    if (1e-4..1e12).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Serializes a validated model to free-format MPS. Ordering is insertion
/// order throughout, so the output is byte-deterministic.
pub fn write_mps(model: &MilpModel) -> Result<String, Error> {
    model.validate()?;
    let mut out = String::new();
    let name = if model.name.is_empty() { "MODEL" } else { &model.name };
    writeln!(out, "NAME {name}").unwrap();
    writeln!(out, "OBJSENSE").unwrap();
    writeln!(
        out,
        "    {}",
        match model.sense {
            ObjSense::Maximize => "MAX",
            ObjSense::Minimize => "MIN",
        }
    )
    .unwrap();
    writeln!(out, "ROWS").unwrap();
    writeln!(out, " N OBJ").unwrap();
    for row in &model.rows {
        let tag = match row.sense {
            RowSense::Le => 'L',
            RowSense::Ge => 'G',
            RowSense::Eq => 'E',
        };
        writeln!(out, " {tag} {}", row.name).unwrap();
    }

    // Column-major view: per variable, objective coefficient first, then row
    // coefficients in row insertion order.
    let mut col_entries: Vec<Vec<(&str, f64)>> = vec![Vec::new(); model.variables.len()];
    for &(h, c) in &model.objective {
        col_entries[h].push(("OBJ", c));
    }
    for row in &model.rows {
        for &(h, c) in &row.coeffs {
            col_entries[h].push((row.name.as_str(), c));
        }
    }

    writeln!(out, "COLUMNS").unwrap();
    let mut in_int = false;
    let mut marker = 0usize;
    for (v, entries) in model.variables.iter().zip(&col_entries) {
        let is_int = v.kind == VarKind::Binary;
        if is_int != in_int {
            let kw = if is_int { "INTORG" } else { "INTEND" };
            writeln!(out, "    M{marker} 'MARKER' '{kw}'").unwrap();
            marker += 1;
            in_int = is_int;
        }
        for (row_name, c) in entries {
            writeln!(out, "    {} {} {}", v.name, row_name, fmt_mps_number(*c)).unwrap();
        }
        if entries.is_empty() {
            // Keep the column visible so the reader recovers every variable.
            writeln!(out, "    {} OBJ 0", v.name).unwrap();
        }
    }
    if in_int {
        writeln!(out, "    M{marker} 'MARKER' 'INTEND'").unwrap();
    }

    writeln!(out, "RHS").unwrap();
    for row in &model.rows {
        if row.rhs != 0.0 {
            writeln!(out, "    RHS {} {}", row.name, fmt_mps_number(row.rhs)).unwrap();
        }
    }

    writeln!(out, "BOUNDS").unwrap();
    for v in &model.variables {
        if v.lower == v.upper {
            writeln!(out, " FX BND {} {}", v.name, fmt_mps_number(v.lower)).unwrap();
            continue;
        }
        if v.lower == f64::NEG_INFINITY {
            writeln!(out, " MI BND {}", v.name).unwrap();
        } else if v.lower != 0.0 {
            writeln!(out, " LO BND {} {}", v.name, fmt_mps_number(v.lower)).unwrap();
        }
        if v.upper != f64::INFINITY {
            writeln!(out, " UP BND {} {}", v.name, fmt_mps_number(v.upper)).unwrap();
        } else if v.kind == VarKind::Binary {
            unreachable!("binary upper bound is finite by validation");
        }
    }
    writeln!(out, "ENDATA").unwrap();
    Ok(out)
}

/// Parses free-format MPS as produced by [`write_mps`] (also accepts the
/// common NAME/ROWS/COLUMNS/RHS/BOUNDS subset from other writers). Integer
/// columns must end up with bounds inside [0, 1]; general integers are not
/// supported.
pub fn read_mps(text: &str) -> Result<MilpModel, Error> {
    #[derive(PartialEq)]
    enum Section {
        None,
        ObjSense,
        Rows,
        Columns,
        Rhs,
        Ranges,
        Bounds,
        Done,
    }
    let mut model_name = String::from("MODEL");
    let mut sense = ObjSense::Minimize;
    let mut section = Section::None;
    let mut obj_row: Option<String> = None;
    // name → (sense); insertion order kept separately.
    let mut row_senses: Vec<(String, RowSense)> = Vec::new();
    let mut row_pos: HashMap<String, usize> = HashMap::new();
    let mut rhs: HashMap<String, f64> = HashMap::new();
    struct ColAcc {
        name: String,
        integer: bool,
        lower: Option<f64>,
        upper: Option<f64>,
        entries: Vec<(String, f64)>,
    }
    let mut cols: Vec<ColAcc> = Vec::new();
    let mut col_pos: HashMap<String, usize> = HashMap::new();
    let mut in_int = false;

    let parse_num = |tok: &str, line_no: usize| -> Result<f64, Error> {
        tok.parse::<f64>()
            .map_err(|_| Error::parse(format!("mps line {line_no}: bad number {tok:?}")))
    };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if raw.starts_with('*') || raw.trim().is_empty() {
            continue;
        }
        let is_header = !raw.starts_with(' ') && !raw.starts_with('\t');
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if is_header {
            match toks[0] {
                "NAME" => {
                    if let Some(n) = toks.get(1) {
                        model_name = n.to_string();
                    }
                    continue;
                }
                "OBJSENSE" => {
                    if let Some(s) = toks.get(1) {
                        sense = parse_objsense(s, line_no)?;
                        section = Section::None;
                    } else {
                        section = Section::ObjSense;
                    }
                    continue;
                }
                "ROWS" => {
                    section = Section::Rows;
                    continue;
                }
                "COLUMNS" => {
                    section = Section::Columns;
                    continue;
                }
                "RHS" => {
                    section = Section::Rhs;
                    continue;
                }
                "RANGES" => {
                    section = Section::Ranges;
                    continue;
                }
                "BOUNDS" => {
                    section = Section::Bounds;
                    continue;
                }
                "ENDATA" => {
                    section = Section::Done;
                    break;
                }
                other => {
                    return Err(Error::parse(format!("mps line {line_no}: unknown section {other:?}")))
                }
            }
        }
        match section {
            Section::ObjSense => {
                sense = parse_objsense(toks[0], line_no)?;
                section = Section::None;
            }
            Section::Rows => {
                if toks.len() != 2 {
                    return Err(Error::parse(format!("mps line {line_no}: malformed row entry")));
                }
                let name = toks[1].to_string();
                match toks[0] {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(name);
                        }
                    }
                    "L" | "G" | "E" => {
                        let s = match toks[0] {
                            "L" => RowSense::Le,
                            "G" => RowSense::Ge,
                            _ => RowSense::Eq,
                        };
                        row_pos.insert(name.clone(), row_senses.len());
                        row_senses.push((name, s));
                    }
                    other => {
                        return Err(Error::parse(format!(
                            "mps line {line_no}: unknown row sense {other:?}"
                        )))
                    }
                }
            }
            Section::Columns => {
                if raw.contains("'MARKER'") {
                    if raw.contains("'INTORG'") {
                        in_int = true;
                    } else if raw.contains("'INTEND'") {
                        in_int = false;
                    } else {
                        return Err(Error::parse(format!("mps line {line_no}: bad marker")));
                    }
                    continue;
                }
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    return Err(Error::parse(format!("mps line {line_no}: malformed column entry")));
                }
                let cname = toks[0];
                let ci = *col_pos.entry(cname.to_string()).or_insert_with(|| {
                    cols.push(ColAcc {
                        name: cname.to_string(),
                        integer: in_int,
                        lower: None,
                        upper: None,
                        entries: Vec::new(),
                    });
                    cols.len() - 1
                });
                for pair in toks[1..].chunks(2) {
                    let val = parse_num(pair[1], line_no)?;
                    cols[ci].entries.push((pair[0].to_string(), val));
                }
            }
            Section::Rhs => {
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    return Err(Error::parse(format!("mps line {line_no}: malformed rhs entry")));
                }
                for pair in toks[1..].chunks(2) {
                    rhs.insert(pair[0].to_string(), parse_num(pair[1], line_no)?);
                }
            }
            Section::Ranges => {
                return Err(Error::parse(format!("mps line {line_no}: RANGES not supported")));
            }
            Section::Bounds => {
                if toks.len() < 3 {
                    return Err(Error::parse(format!("mps line {line_no}: malformed bound entry")));
                }
                let cname = toks[2];
                let ci = *col_pos.get(cname).ok_or_else(|| {
                    Error::parse(format!("mps line {line_no}: bound on unknown column {cname:?}"))
                })?;
                let col = &mut cols[ci];
                match toks[0] {
                    "UP" => col.upper = Some(parse_num(toks[3], line_no)?),
                    "LO" => col.lower = Some(parse_num(toks[3], line_no)?),
                    "FX" => {
                        let v = parse_num(toks[3], line_no)?;
                        col.lower = Some(v);
                        col.upper = Some(v);
                    }
                    "MI" => col.lower = Some(f64::NEG_INFINITY),
                    "PL" => col.upper = Some(f64::INFINITY),
                    "BV" => {
                        col.integer = true;
                        col.lower = Some(0.0);
                        col.upper = Some(1.0);
                    }
                    "FR" => {
                        col.lower = Some(f64::NEG_INFINITY);
                        col.upper = Some(f64::INFINITY);
                    }
                    other => {
                        return Err(Error::parse(format!(
                            "mps line {line_no}: unsupported bound type {other:?}"
                        )))
                    }
                }
            }
            Section::None | Section::Done => {
                return Err(Error::parse(format!("mps line {line_no}: data outside any section")));
            }
        }
    }
    if section != Section::Done {
        return Err(Error::parse("mps file missing ENDATA"));
    }
    let obj_row = obj_row.ok_or_else(|| Error::parse("mps file has no objective (N) row"))?;

    let mut model = MilpModel::new(model_name);
    let mut objective: Vec<(usize, f64)> = Vec::new();
    for col in &cols {
        let lower = col.lower.unwrap_or(0.0);
        let upper = col.upper.unwrap_or(if col.integer { 1.0 } else { f64::INFINITY });
        let kind = if col.integer {
            if !(lower >= 0.0 && upper <= 1.0) {
                return Err(Error::parse(format!(
                    "integer column {} has non-binary bounds [{lower}, {upper}]",
                    col.name
                )));
            }
            VarKind::Binary
        } else {
            VarKind::Continuous
        };
        model.add_variable(col.name.clone(), kind, lower, upper)?;
    }
    // Rows, then scatter column entries into them.
    let mut row_coeffs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); row_senses.len()];
    for (ci, col) in cols.iter().enumerate() {
        for (rname, val) in &col.entries {
            if *rname == obj_row {
                if *val != 0.0 {
                    objective.push((ci, *val));
                }
            } else {
                let ri = *row_pos.get(rname).ok_or_else(|| {
                    Error::parse(format!("column {} references unknown row {rname:?}", col.name))
                })?;
                row_coeffs[ri].push((ci, *val));
            }
        }
    }
    for (ri, (rname, rsense)) in row_senses.iter().enumerate() {
        let r = rhs.get(rname).copied().unwrap_or(0.0);
        model.add_row(rname.clone(), *rsense, r, &row_coeffs[ri])?;
    }
    model.set_objective(&objective, sense)?;
    Ok(model)
}

fn parse_objsense(tok: &str, line_no: usize) -> Result<ObjSense, Error> {
    match tok {
        "MAX" | "MAXIMIZE" => Ok(ObjSense::Maximize),
        "MIN" | "MINIMIZE" => Ok(ObjSense::Minimize),
        other => Err(Error::parse(format!("mps line {line_no}: bad objective sense {other:?}"))),
    }
}

// ---------------------------------------------------------------------------
// Solution-file format (the external-adapter contract)
// ---------------------------------------------------------------------------

/// Renders a solution as `status <s>` / `objective <v>` / `gap <v>` header
/// lines followed by `name=value` lines.
pub fn write_solution_file(solution: &Solution) -> String {
    let mut out = String::new();
    writeln!(out, "status {}", solution.status.as_str()).unwrap();
    if let Some(obj) = solution.objective_value {
        writeln!(out, "objective {obj:.12e}").unwrap();
    }
    if let Some(gap) = solution.mip_gap {
        writeln!(out, "gap {gap:.12e}").unwrap();
    }
    if let Some(values) = &solution.values {
        for (name, v) in values {
            writeln!(out, "{name}={v:.12e}").unwrap();
        }
    }
    out
}

pub fn parse_solution_file(text: &str) -> Result<Solution, Error> {
    let mut status = None;
    let mut objective_value = None;
    let mut mip_gap = None;
    let mut values: BTreeMap<String, f64> = BTreeMap::new();
    let mut saw_values = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("status ") {
            status = Some(SolutionStatus::from_str(rest.trim()).ok_or_else(|| {
                Error::parse(format!("solution line {}: unknown status {rest:?}", i + 1))
            })?);
        } else if let Some(rest) = line.strip_prefix("objective ") {
            objective_value = Some(rest.trim().parse::<f64>().map_err(|_| {
                Error::parse(format!("solution line {}: bad objective {rest:?}", i + 1))
            })?);
        } else if let Some(rest) = line.strip_prefix("gap ") {
            mip_gap = Some(rest.trim().parse::<f64>().map_err(|_| {
                Error::parse(format!("solution line {}: bad gap {rest:?}", i + 1))
            })?);
        } else if let Some((name, val)) = line.split_once('=') {
            saw_values = true;
            let v = val.trim().parse::<f64>().map_err(|_| {
                Error::parse(format!("solution line {}: bad value {val:?}", i + 1))
            })?;
            values.insert(name.trim().to_string(), v);
        } else {
            return Err(Error::parse(format!("solution line {}: unrecognized {line:?}", i + 1)));
        }
    }
    let status = status.ok_or_else(|| Error::parse("solution file missing status line"))?;
    Ok(Solution {
        status,
        objective_value,
        values: if saw_values { Some(values) } else { None },
        mip_gap,
    })
}

// ---------------------------------------------------------------------------
// Solve adapters
// ---------------------------------------------------------------------------

/// Solves the model with the configured backend. Binaries in the incumbent
/// are rounded to {0, 1} when within the integrality tolerance; a larger
/// deviation is reported as a solver error.
pub fn solve(model: &MilpModel, config: &SolverConfig) -> Result<Solution, Error> {
    model.validate()?;
    config.validate()?;
    let mut solution = if config.backend == "highs" {
        solve_highs(model, config)?
    } else if let Some(cmd) = config.backend.strip_prefix("external:") {
        solve_external(model, config, cmd)?
    } else {
        return Err(Error::solver(format!(
            "unknown solver backend {:?}; expected \"highs\" or \"external:<command>\"",
            config.backend
        )));
    };
    if let Some(values) = &mut solution.values {
        for v in &model.variables {
            if v.kind != VarKind::Binary {
                continue;
            }
            if let Some(x) = values.get_mut(&v.name) {
                let r = x.round().clamp(0.0, 1.0);
                if (*x - r).abs() > config.binary_integrality_tolerance {
                    return Err(Error::solver(format!(
                        "binary {} = {x} violates integrality tolerance {}",
                        v.name, config.binary_integrality_tolerance
                    )));
                }
                *x = r;
            }
        }
        // Recompute the objective from the rounded assignment so that both
        // backends report identically.
        let vec: Vec<f64> =
            model.variables.iter().map(|v| values.get(&v.name).copied().unwrap_or(0.0)).collect();
        solution.objective_value = Some(model.objective_of(&vec));
    }
    Ok(solution)
}

fn solve_highs(model: &MilpModel, config: &SolverConfig) -> Result<Solution, Error> {
    use highs::{HighsModelStatus, RowProblem, Sense};

    let mut obj = vec![0.0; model.variables.len()];
    for &(h, c) in &model.objective {
        obj[h] += c;
    }
    let mut pb = RowProblem::default();
    let mut cols = Vec::with_capacity(model.variables.len());
    for (i, v) in model.variables.iter().enumerate() {
        let col = match v.kind {
            VarKind::Continuous => pb.add_column(obj[i], v.lower..=v.upper),
            VarKind::Binary => pb.add_integer_column(obj[i], v.lower..=v.upper),
        };
        cols.push(col);
    }
    for row in &model.rows {
        let factors: Vec<_> = row.coeffs.iter().map(|&(h, c)| (cols[h], c)).collect();
        match row.sense {
            RowSense::Le => pb.add_row(..=row.rhs, &factors),
            RowSense::Ge => pb.add_row(row.rhs.., &factors),
            RowSense::Eq => pb.add_row(row.rhs..=row.rhs, &factors),
        };
    }
    let sense = match model.sense {
        ObjSense::Maximize => Sense::Maximise,
        ObjSense::Minimize => Sense::Minimise,
    };
    let mut m = pb.optimise(sense);
    m.make_quiet();
    m.set_option("time_limit", config.time_limit_s);
    m.set_option("mip_rel_gap", config.mip_gap_target);
    // Tight feasibility tolerances: big-M rows amplify solver slack by the
    // magnitude of M, and downstream consumers compare control variables at
    // 1e-6 absolute.
    m.set_option("primal_feasibility_tolerance", 1e-9);
    m.set_option("dual_feasibility_tolerance", 1e-9);
    m.set_option("mip_feasibility_tolerance", 1e-9);
    if config.threads > 0 {
        m.set_option("threads", config.threads as i32);
    }
    let solved = m.solve();
    let status = solved.status();
    let has_mip = model.variables.iter().any(|v| v.kind == VarKind::Binary);
    let (status, take_values) = match status {
        HighsModelStatus::Optimal => (SolutionStatus::Optimal, true),
        HighsModelStatus::Infeasible => (SolutionStatus::Infeasible, false),
        HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => {
            (SolutionStatus::Unbounded, false)
        }
        HighsModelStatus::ReachedTimeLimit => (SolutionStatus::TimeLimit, true),
        other => {
            return Err(Error::solver(format!("highs returned unexpected status {other:?}")));
        }
    };
    if !take_values {
        return Ok(Solution { status, objective_value: None, values: None, mip_gap: None });
    }
    let sol = solved.get_solution();
    let columns = sol.columns();
    let values: BTreeMap<String, f64> = model
        .variables
        .iter()
        .zip(columns)
        .map(|(v, x)| (v.name.clone(), *x))
        .collect();
    let objective_value = Some(model.objective_of(columns));
    let gap = if has_mip {
        let g = solved.mip_gap();
        if g.is_finite() {
            Some(g)
        } else {
            None
        }
    } else {
        Some(0.0)
    };
    // Distinguish a gap-limited incumbent from a proven optimum.
    let status = if status == SolutionStatus::Optimal && gap.map_or(false, |g| g > 1e-9) {
        SolutionStatus::FeasibleGap
    } else {
        status
    };
    Ok(Solution { status, objective_value, values: Some(values), mip_gap: gap })
}

fn solve_external(model: &MilpModel, config: &SolverConfig, cmd: &str) -> Result<Solution, Error> {
    let dir = tempfile::tempdir()?;
    let mps_path = dir.path().join("model.mps");
    let sol_path = dir.path().join("model.sol");
    std::fs::write(&mps_path, write_mps(model)?)?;
    let parts: Vec<&str> = cmd.split_whitespace().collect();
    let (exe, args) = parts.split_first().ok_or_else(|| Error::solver("empty external solver command"))?;
    let out = std::process::Command::new(exe)
        .args(args)
        .arg(&mps_path)
        .arg(&sol_path)
        .arg(format!("--time-limit={}", config.time_limit_s))
        .arg(format!("--mip-gap={}", config.mip_gap_target))
        .output()
        .map_err(|e| {
            Error::solver(format!(
                "external solver {exe:?} could not be launched ({e}); install it or point \
                 backend at a command that maps an MPS file to a solution file"
            ))
        })?;
    if !out.status.success() {
        return Err(Error::solver(format!(
            "external solver {exe:?} exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        )));
    }
    let text = std::fs::read_to_string(&sol_path).map_err(|e| {
        Error::solver(format!("external solver {exe:?} wrote no solution file: {e}"))
    })?;
    parse_solution_file(&text)
}

/// Convenience used by the CLI `solve-mps` subcommand: solve an MPS file with
/// the in-process backend and return the solution.
pub fn solve_mps_file(path: &Path, config: &SolverConfig) -> Result<Solution, Error> {
    let text = std::fs::read_to_string(path)?;
    let model = read_mps(&text)?;
    let cfg = SolverConfig { backend: "highs".to_string(), ..config.clone() };
    solve(&model, &cfg)
}
