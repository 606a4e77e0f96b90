//! Named pass/fail checks collected by the pipelines and printed by the CLI.

use std::fmt;

use crate::expr::Expr;

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Informational checks are printed but do not gate [`Report::ok`].
    pub informational: bool,
    /// A computed value rather than a verdict.
    pub value: bool,
}

impl Check {
    /// Passes iff `residual` is zero as a rational expression.
    pub fn zero(name: &str, residual: &Expr) -> Self {
        let passed = residual.is_zero_rational();
        let detail = if passed { "residual 0".to_string() } else { format!("residual {residual}") };
        Check { name: name.to_string(), passed, detail, informational: false, value: false }
    }

    pub fn equal(name: &str, got: &Expr, want: &Expr) -> Self {
        let d = got - want;
        let passed = d.is_zero_rational();
        let detail = if passed { "equal".to_string() } else { format!("got {got}\n  want {want}\n  diff {d}") };
        Check { name: name.to_string(), passed, detail, informational: false, value: false }
    }

    pub fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.to_string(), passed, detail: detail.into(), informational: false, value: false }
    }

    /// A printed result; always passes.
    pub fn value(name: &str, e: &Expr) -> Self {
        Check { name: name.to_string(), passed: true, detail: e.to_string(), informational: true, value: true }
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub title: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(title: &str) -> Self {
        Report { title: title.to_string(), checks: Vec::new() }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.informational)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {}", self.title)?;
        for c in &self.checks {
            let tag = match (c.passed, c.informational) {
                _ if c.value => "=   ",
                (true, _) => "ok  ",
                (false, true) => "note",
                (false, false) => "FAIL",
            };
            writeln!(f, "{tag} {}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}
