use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualEntry {
    pub name: String,
    pub value: f64,
}

/// Named maximum residuals of a verification run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResidualReport {
    pub entries: Vec<ResidualEntry>,
}

impl ResidualReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `value` under `name`, keeping the maximum if the name repeats.
    pub fn record(&mut self, name: &str, value: f64) {
        match self.entries.iter_mut().find(|e| e.name == name) {
            Some(e) => {
                if value > e.value || value.is_nan() {
                    e.value = value;
                }
            }
            None => self.entries.push(ResidualEntry { name: name.to_string(), value }),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.value)
    }

    /// Largest residual; NaN propagates.
    pub fn max(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |acc, e| if e.value.is_nan() { f64::NAN } else { acc.max(e.value) })
    }

    pub fn all_below(&self, tol: f64) -> bool {
        self.entries.iter().all(|e| e.value <= tol)
    }

    /// Entries above `tol`.
    pub fn failures(&self, tol: f64) -> Vec<&ResidualEntry> {
        self.entries.iter().filter(|e| !(e.value <= tol)).collect()
    }
}
