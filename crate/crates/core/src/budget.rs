/// Resource limits for exhaustive searches. Every exhaustive routine checks
/// its limit up front and fails with [`crate::Error::Budget`] instead of
/// sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Widest integer window an enumeration may scan.
    pub max_window: u32,
    /// Largest support whose full power set a verifier may walk.
    pub max_support: u32,
    /// Cap on candidate evaluations in searches.
    pub max_evals: u64,
    /// Cap on the number of sets an enumeration may return.
    pub max_sets: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_window: 64, max_support: 20, max_evals: 200_000, max_sets: 1 << 20 }
    }
}

impl Budget {
    pub fn with_evals(self, max_evals: u64) -> Self {
        Budget { max_evals, ..self }
    }
}
