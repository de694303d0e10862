//! Verification reports: named quantities, thresholds, refinement traces and
//! a pass flag, serialised as key-value text or flat CSV.

use std::fmt::Display;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerificationReport {
    pub kind: String,
    pub inputs: Vec<(String, String)>,
    pub quantities: Vec<(String, f64)>,
    pub thresholds: Vec<(String, f64)>,
    pub traces: Vec<(String, Vec<f64>)>,
    pub notes: Vec<String>,
    pub pass: bool,
}

/// 17 significant digits, so values survive a text round trip.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

impl VerificationReport {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            ..Self::default()
        }
    }

    pub fn input(&mut self, key: &str, value: impl Display) {
        self.inputs.push((key.to_string(), value.to_string()));
    }

    pub fn quantity(&mut self, key: &str, value: f64) {
        self.quantities.push((key.to_string(), value));
    }

    pub fn threshold(&mut self, key: &str, value: f64) {
        self.thresholds.push((key.to_string(), value));
    }

    pub fn trace(&mut self, key: &str, values: Vec<f64>) {
        self.traces.push((key.to_string(), values));
    }

    pub fn note(&mut self, text: &str) {
        self.notes.push(text.to_string());
    }

    pub fn set_pass(&mut self, pass: bool) {
        self.pass = pass;
    }

    pub fn passed(&self) -> bool {
        self.pass
    }

    /// Last recorded quantity with this name.
    pub fn get(&self, key: &str) -> Option<f64> {
        self.quantities.iter().rev().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn get_threshold(&self, key: &str) -> Option<f64> {
        self.thresholds.iter().rev().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn get_trace(&self, key: &str) -> Option<&[f64]> {
        self.traces.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_slice())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("[{}]\npass = {}\n", self.kind, self.pass);
        if !self.inputs.is_empty() {
            s.push_str("[inputs]\n");
            for (k, v) in &self.inputs {
                s.push_str(&format!("{k} = {v}\n"));
            }
        }
        if !self.quantities.is_empty() {
            s.push_str("[quantities]\n");
            for (k, v) in &self.quantities {
                s.push_str(&format!("{k} = {}\n", fmt_f64(*v)));
            }
        }
        if !self.thresholds.is_empty() {
            s.push_str("[thresholds]\n");
            for (k, v) in &self.thresholds {
                s.push_str(&format!("{k} = {}\n", fmt_f64(*v)));
            }
        }
        if !self.traces.is_empty() {
            s.push_str("[traces]\n");
            for (k, vs) in &self.traces {
                let joined: Vec<String> = vs.iter().map(|v| fmt_f64(*v)).collect();
                s.push_str(&format!("{k} = {}\n", joined.join(" ")));
            }
        }
        if !self.notes.is_empty() {
            s.push_str("[notes]\n");
            for n in &self.notes {
                s.push_str(&format!("- {n}\n"));
            }
        }
        s
    }

    /// `check,quantity,value` rows without a header.
    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.quantities {
            s.push_str(&format!("{},{},{}\n", self.kind, k, fmt_f64(*v)));
        }
        for (k, v) in &self.thresholds {
            s.push_str(&format!("{},threshold.{},{}\n", self.kind, k, fmt_f64(*v)));
        }
        s.push_str(&format!("{},pass,{}\n", self.kind, u8::from(self.pass)));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_csv() {
        let mut r = VerificationReport::new("demo");
        r.input("h", 0.02);
        r.quantity("ratio", 0.25);
        r.quantity("ratio", 0.5);
        r.threshold("max", 1.0);
        r.trace("levels", vec![1.0, 2.0]);
        r.note("sampled");
        r.set_pass(true);
        assert_eq!(r.get("ratio"), Some(0.5));
        assert_eq!(r.get("missing"), None);
        let text = r.to_text();
        assert!(text.starts_with("[demo]\npass = true\n"));
        assert!(text.contains("ratio = 2.5000000000000000e-1"));
        let csv = r.csv_rows();
        assert!(csv.contains("demo,threshold.max,1.0000000000000000e0"));
        assert!(csv.ends_with("demo,pass,1\n"));
    }

    #[test]
    fn round_trip_digits() {
        let v = 0.1 + 0.2;
        assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }
}
