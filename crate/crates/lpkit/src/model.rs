//! Sparse linear model container shared by the LP and MIP solvers.
//!
//! A [`ModelSystem`] owns variables (with finite bounds, objective
//! coefficients, and an integrality kind) and rows (sparse linear
//! constraints).  Rows and variables are addressed by dense indices that stay
//! stable under appends, which lets callers keep side tables keyed by index
//! and lets a previously computed basis be reused after new rows arrive.

use std::fmt;
use std::io::{self, Write};

/// Integrality marker for a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    /// Integer restricted to {lower, ..., upper}; in this codebase always 0/1.
    Binary,
}

/// Row comparison sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sense::Le => write!(f, "<="),
            Sense::Ge => write!(f, ">="),
            Sense::Eq => write!(f, "="),
        }
    }
}

/// A decision variable.
#[derive(Debug, Clone)]
pub struct VarDef {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub obj: f64,
    pub kind: VarKind,
}

/// A sparse linear row `sum(coeffs) sense rhs`.
#[derive(Debug, Clone)]
pub struct RowDef {
    pub name: String,
    /// Sorted by variable index; no duplicates; no explicit zeros.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Errors raised while assembling a model.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// A row referenced a variable index that does not exist.
    BadIndex { row: String, var: usize },
    /// A variable was declared with lower > upper or a non-finite bound.
    BadBounds { var: String, lower: f64, upper: f64 },
    /// A coefficient or right-hand side was NaN or infinite.
    NonFinite { context: String },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::BadIndex { row, var } => {
                write!(f, "row {:?} references unknown variable index {}", row, var)
            }
            ModelError::BadBounds { var, lower, upper } => {
                write!(f, "variable {:?} has invalid bounds [{}, {}]", var, lower, upper)
            }
            ModelError::NonFinite { context } => {
                write!(f, "non-finite value in {}", context)
            }
        }
    }
}

impl std::error::Error for ModelError {}

/// A sparse linear program / 0-1 program in "minimize" orientation.
#[derive(Debug, Clone, Default)]
pub struct ModelSystem {
    pub name: String,
    vars: Vec<VarDef>,
    rows: Vec<RowDef>,
}

impl ModelSystem {
    pub fn new(name: impl Into<String>) -> Self {
        ModelSystem { name: name.into(), vars: Vec::new(), rows: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var(&self, j: usize) -> &VarDef {
        &self.vars[j]
    }

    pub fn row(&self, i: usize) -> &RowDef {
        &self.rows[i]
    }

    pub fn vars(&self) -> &[VarDef] {
        &self.vars
    }

    pub fn rows(&self) -> &[RowDef] {
        &self.rows
    }

    /// Total number of structural nonzeros.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.coeffs.len()).sum()
    }

    /// Adds a variable and returns its index.  Bounds must be finite with
    /// `lower <= upper`; binaries are expected to use a sub-range of [0, 1].
    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        obj: f64,
        kind: VarKind,
    ) -> Result<usize, ModelError> {
        let name = name.into();
        if !lower.is_finite() || !upper.is_finite() || lower > upper {
            return Err(ModelError::BadBounds { var: name, lower, upper });
        }
        if !obj.is_finite() {
            return Err(ModelError::NonFinite { context: format!("objective of {:?}", name) });
        }
        self.vars.push(VarDef { name, lower, upper, obj, kind });
        Ok(self.vars.len() - 1)
    }

    /// Adds one row and returns its index.  Coefficients are merged by
    /// variable, zeros dropped, and the result sorted by variable index.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: impl IntoIterator<Item = (usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<usize, ModelError> {
        let name = name.into();
        if !rhs.is_finite() {
            return Err(ModelError::NonFinite { context: format!("rhs of row {:?}", name) });
        }
        let mut merged: Vec<(usize, f64)> = coeffs.into_iter().collect();
        for &(j, v) in &merged {
            if j >= self.vars.len() {
                return Err(ModelError::BadIndex { row: name, var: j });
            }
            if !v.is_finite() {
                return Err(ModelError::NonFinite { context: format!("coefficient in row {:?}", name) });
            }
        }
        merged.sort_by_key(|&(j, _)| j);
        let mut compact: Vec<(usize, f64)> = Vec::with_capacity(merged.len());
        for (j, v) in merged {
            match compact.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => compact.push((j, v)),
            }
        }
        compact.retain(|&(_, v)| v != 0.0);
        self.rows.push(RowDef { name, coeffs: compact, sense, rhs });
        Ok(self.rows.len() - 1)
    }

    /// Appends a batch of rows; existing row and variable indices are
    /// untouched, so bases computed before the append remain meaningful.
    pub fn add_rows(&mut self, rows: Vec<RowDef>) -> Result<Vec<usize>, ModelError> {
        let mut ids = Vec::with_capacity(rows.len());
        for r in rows {
            ids.push(self.add_row(r.name, r.coeffs, r.sense, r.rhs)?);
        }
        Ok(ids)
    }

    /// Replaces the bounds of a variable (used for fixings during search).
    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        assert!(
            lower.is_finite() && upper.is_finite() && lower <= upper,
            "invalid bounds [{}, {}] for variable {}",
            lower,
            upper,
            j
        );
        self.vars[j].lower = lower;
        self.vars[j].upper = upper;
    }

    pub fn set_obj(&mut self, j: usize, obj: f64) {
        self.vars[j].obj = obj;
    }

    /// Objective value of an arbitrary point (no feasibility check).
    pub fn obj_value(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, xi)| v.obj * xi).sum()
    }

    /// Left-hand-side activity of row `i` at point `x`.
    pub fn row_activity(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Maximum constraint violation of a point over all rows and bounds.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, v) in self.vars.iter().enumerate() {
            worst = worst.max(v.lower - x[j]).max(x[j] - v.upper);
        }
        for i in 0..self.rows.len() {
            let act = self.row_activity(i, x);
            let r = &self.rows[i];
            let viol = match r.sense {
                Sense::Le => act - r.rhs,
                Sense::Ge => r.rhs - act,
                Sense::Eq => (act - r.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Writes the model in the classic LP text interchange format, which
    /// external solvers and diff tools understand.  Intended for debugging.
    pub fn write_lp(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "\\ {}", self.name)?;
        writeln!(out, "Minimize")?;
        write!(out, " obj:")?;
        let mut first = true;
        for (j, v) in self.vars.iter().enumerate() {
            if v.obj != 0.0 {
                write_term(out, v.obj, &self.vars[j].name, first)?;
                first = false;
            }
        }
        if first {
            write!(out, " 0 {}", self.vars.first().map(|v| v.name.as_str()).unwrap_or("x0"))?;
        }
        writeln!(out)?;
        writeln!(out, "Subject To")?;
        for r in &self.rows {
            write!(out, " {}:", sanitize(&r.name))?;
            let mut first = true;
            for &(j, a) in &r.coeffs {
                write_term(out, a, &self.vars[j].name, first)?;
                first = false;
            }
            if first {
                write!(out, " 0 {}", self.vars.first().map(|v| v.name.as_str()).unwrap_or("x0"))?;
            }
            writeln!(out, " {} {}", r.sense, fmt_num(r.rhs))?;
        }
        writeln!(out, "Bounds")?;
        for v in &self.vars {
            writeln!(out, " {} <= {} <= {}", fmt_num(v.lower), sanitize(&v.name), fmt_num(v.upper))?;
        }
        let binaries: Vec<&VarDef> = self.vars.iter().filter(|v| v.kind == VarKind::Binary).collect();
        if !binaries.is_empty() {
            writeln!(out, "Binaries")?;
            for v in binaries {
                writeln!(out, " {}", sanitize(&v.name))?;
            }
        }
        writeln!(out, "End")
    }
}

fn write_term(out: &mut dyn Write, coef: f64, name: &str, first: bool) -> io::Result<()> {
    if coef < 0.0 {
        write!(out, " - ")?;
    } else if first {
        write!(out, " ")?;
    } else {
        write!(out, " + ")?;
    }
    let a = coef.abs();
    if a == 1.0 {
        write!(out, "{}", sanitize(name))
    } else {
        write!(out, "{} {}", fmt_num(a), sanitize(name))
    }
}

fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{}", v)
    }
}

/// LP format forbids some characters that appear in our bracketed names.
fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| match c {
            '[' | ']' | ',' | '=' | ' ' => '_',
            c => c,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_row_merges_and_sorts_coefficients() {
        let mut sys = ModelSystem::new("t");
        let a = sys.add_var("a", 0.0, 1.0, 1.0, VarKind::Continuous).unwrap();
        let b = sys.add_var("b", 0.0, 1.0, 0.0, VarKind::Continuous).unwrap();
        let r = sys
            .add_row("r", vec![(b, 2.0), (a, 1.0), (b, -2.0), (a, 0.5)], Sense::Le, 3.0)
            .unwrap();
        assert_eq!(sys.row(r).coeffs, vec![(a, 1.5)]);
    }

    #[test]
    fn add_row_rejects_unknown_variable() {
        let mut sys = ModelSystem::new("t");
        sys.add_var("a", 0.0, 1.0, 1.0, VarKind::Continuous).unwrap();
        let err = sys.add_row("r", vec![(7, 1.0)], Sense::Le, 0.0).unwrap_err();
        assert_eq!(err, ModelError::BadIndex { row: "r".into(), var: 7 });
    }

    #[test]
    fn add_var_rejects_inverted_or_infinite_bounds() {
        let mut sys = ModelSystem::new("t");
        assert!(sys.add_var("a", 1.0, 0.0, 0.0, VarKind::Continuous).is_err());
        assert!(sys.add_var("b", 0.0, f64::INFINITY, 0.0, VarKind::Continuous).is_err());
    }

    #[test]
    fn appended_rows_keep_existing_indices_stable() {
        let mut sys = ModelSystem::new("t");
        let a = sys.add_var("a", 0.0, 1.0, 1.0, VarKind::Continuous).unwrap();
        sys.add_row("r0", vec![(a, 1.0)], Sense::Le, 1.0).unwrap();
        let ids = sys
            .add_rows(vec![RowDef {
                name: "r1".into(),
                coeffs: vec![(a, 2.0)],
                sense: Sense::Ge,
                rhs: 0.5,
            }])
            .unwrap();
        assert_eq!(ids, vec![1]);
        assert_eq!(sys.row(0).name, "r0");
        assert_eq!(sys.row(1).name, "r1");
    }

    #[test]
    fn lp_writer_emits_all_sections() {
        let mut sys = ModelSystem::new("demo");
        let x = sys.add_var("x[0]", 0.0, 1.0, 2.0, VarKind::Binary).unwrap();
        let y = sys.add_var("y", 0.0, 4.0, -1.0, VarKind::Continuous).unwrap();
        sys.add_row("cap", vec![(x, 1.0), (y, 3.0)], Sense::Le, 4.0).unwrap();
        let mut buf = Vec::new();
        sys.write_lp(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("Minimize"));
        assert!(text.contains("Subject To"));
        assert!(text.contains("cap:"));
        assert!(text.contains("Binaries"));
        assert!(text.contains("x_0_"));
    }
}
