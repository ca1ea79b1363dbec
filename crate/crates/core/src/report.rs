use std::fmt;

/// One invariant violation found by a validator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finding {
    Cycle(String),
    Disconnected(String),
    NameCollision(String),
    Domain(String),
    DanglingSlot(String),
    Bijection(String),
    Empty(String),
    /// Skeleton link between the wrong classes.
    Orientation(String),
    /// An (object, slot) pair with more than one target.
    OutDegree(String),
    /// An (object, slot) pair with no target.
    Totality(String),
    DanglingObject(String),
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            Finding::Cycle(m) => ("cycle", m),
            Finding::Disconnected(m) => ("disconnected", m),
            Finding::NameCollision(m) => ("name-collision", m),
            Finding::Domain(m) => ("domain", m),
            Finding::DanglingSlot(m) => ("dangling-slot", m),
            Finding::Bijection(m) => ("bijection", m),
            Finding::Empty(m) => ("empty", m),
            Finding::Orientation(m) => ("orientation", m),
            Finding::OutDegree(m) => ("out-degree", m),
            Finding::Totality(m) => ("totality", m),
            Finding::DanglingObject(m) => ("dangling-object", m),
        };
        write!(f, "{kind}: {msg}")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn push(&mut self, finding: Finding) {
        self.findings.push(finding);
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.findings.is_empty() {
            return write!(f, "valid");
        }
        for (i, finding) in self.findings.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{finding}")?;
        }
        Ok(())
    }
}
