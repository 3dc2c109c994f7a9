use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct Equation {
    pub name: String,
    pub text: String,
    pub latex: String,
}

/// A number compared against the tolerance it has to meet.
#[derive(Clone, Debug, Serialize)]
pub struct Deviation {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// A yes/no property.
#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
}

/// Informational number with no pass/fail meaning.
#[derive(Clone, Debug, Serialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftRow {
    pub quantity: String,
    pub initial: f64,
    pub max_abs_drift: f64,
    /// `None` when the quantity is only logged, not expected to be conserved.
    pub tolerance: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub kind: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub equations: Vec<Equation>,
    pub deviations: Vec<Deviation>,
    pub checks: Vec<CheckRow>,
    pub measurements: Vec<Measurement>,
    pub drift: Vec<DriftRow>,
    pub notes: Vec<String>,
    pub files: Vec<String>,
}

impl RunReport {
    pub fn new(command: &str, kind: &str) -> RunReport {
        RunReport {
            command: command.to_string(),
            kind: kind.to_string(),
            status: Status::Ok,
            error: None,
            equations: Vec::new(),
            deviations: Vec::new(),
            checks: Vec::new(),
            measurements: Vec::new(),
            drift: Vec::new(),
            notes: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn equation(&mut self, name: impl Into<String>, text: impl Into<String>, latex: impl Into<String>) {
        self.equations.push(Equation {
            name: name.into(),
            text: text.into(),
            latex: latex.into(),
        });
    }

    /// Records `value <= tolerance` (NaN fails).
    pub fn deviation(&mut self, name: impl Into<String>, value: f64, tolerance: f64) -> bool {
        let passed = value <= tolerance;
        self.deviations.push(Deviation {
            name: name.into(),
            value,
            tolerance,
            passed,
        });
        passed
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool) -> bool {
        self.checks.push(CheckRow { name: name.into(), passed });
        passed
    }

    pub fn measure(&mut self, name: impl Into<String>, value: f64) {
        self.measurements.push(Measurement { name: name.into(), value });
    }

    pub fn fail(&mut self, error: impl Into<String>) {
        self.status = Status::Failed;
        self.error = Some(error.into());
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Ok && self.deviations.iter().all(|d| d.passed)
            && self.checks.iter().all(|c| c.passed)
            && self.drift.iter().all(|d| d.passed)
    }

    /// Marks the report failed if any check did not pass.
    pub fn settle(&mut self) {
        if self.status == Status::Ok && !self.passed() {
            let failed: Vec<&str> = self
                .deviations
                .iter()
                .filter(|d| !d.passed)
                .map(|d| d.name.as_str())
                .chain(self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()))
                .chain(self.drift.iter().filter(|d| !d.passed).map(|d| d.quantity.as_str()))
                .collect();
            self.fail(format!("tolerance exceeded: {}", failed.join(", ")));
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Equations as a LaTeX `align*` block.
    pub fn latex(&self) -> String {
        let mut out = String::from("\\begin{align*}\n");
        let rows: Vec<String> = self
            .equations
            .iter()
            .map(|e| format!("  &\\text{{{}}}: & {}", e.name.replace('_', "\\_"), e.latex))
            .collect();
        out.push_str(&rows.join(" \\\\\n"));
        out.push_str("\n\\end{align*}\n");
        out
    }

    pub fn text(&self) -> String {
        self.equations.iter().map(|e| format!("{}: {}\n", e.name, e.text)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settle_marks_failures() {
        let mut r = RunReport::new("derive", "higher");
        assert!(r.deviation("a", 1e-12, 1e-9));
        assert!(!r.deviation("b", f64::NAN, 1e-9));
        r.settle();
        assert_eq!(r.status, Status::Failed);
        assert_eq!(r.error.as_deref(), Some("tolerance exceeded: b"));
    }

    #[test]
    fn latex_block() {
        let mut r = RunReport::new("derive", "higher");
        r.equation("el_1", "0 = x", "0 = x");
        r.equation("el_2", "0 = y", "0 = y");
        let tex = r.latex();
        assert!(tex.starts_with("\\begin{align*}"));
        assert!(tex.contains("el\\_1"));
        assert_eq!(tex.matches("\\\\\n").count(), 1);
    }
}
