use alloc::vec::Vec;

/// Why an iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalReason {
    Converged,
    MaxIter,
    Diverged,
    SingularSystem,
    Stagnated,
}

impl TerminalReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminalReason::Converged => "converged",
            TerminalReason::MaxIter => "max_iter",
            TerminalReason::Diverged => "diverged",
            TerminalReason::SingularSystem => "singular_system",
            TerminalReason::Stagnated => "stagnated",
        }
    }
}

/// One iterate: index, functional value, gradient norm, `‖x‖_B`, eigenvalue estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub f_value: f64,
    pub grad_norm: f64,
    pub x_norm_b: f64,
    pub lambda_est: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<TraceRecord>,
    pub terminal_reason: TerminalReason,
    /// Number of iterations performed (records may be strided).
    pub iterations: usize,
}

impl IterationTrace {
    pub(crate) fn new() -> Self {
        IterationTrace {
            records: Vec::new(),
            terminal_reason: TerminalReason::MaxIter,
            iterations: 0,
        }
    }

    pub fn converged(&self) -> bool {
        self.terminal_reason == TerminalReason::Converged
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// True when the recorded functional values never increase by more
    /// than `slack` (absolute) between consecutive records.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].f_value <= w[0].f_value + slack)
    }
}
