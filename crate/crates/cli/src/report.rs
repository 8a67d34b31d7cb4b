use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::config::Config;

/// One `(experiment, parameter tuple, metric)` observation.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub experiment: String,
    pub module: &'static str,
    pub operation: &'static str,
    pub params: BTreeMap<String, Value>,
    pub metric: String,
    pub value: Value,
    /// `None` for values that are reported but not asserted.
    pub pass: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    AssertionFailure,
    BudgetExhausted,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::AssertionFailure => 2,
            Status::BudgetExhausted => 3,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub experiment: String,
    pub config_hash: String,
    pub config: Config,
    pub status: Status,
    pub rows: Vec<Row>,
}

/// Collects rows for one experiment.
pub struct Recorder {
    experiment: String,
    module: &'static str,
    operation: &'static str,
    rows: Vec<Row>,
    budget_exhausted: bool,
}

pub type Params = Vec<(&'static str, Value)>;

impl Recorder {
    pub fn new(cfg: &Config) -> Self {
        Recorder {
            experiment: cfg.experiment.name().to_string(),
            module: "",
            operation: "",
            rows: Vec::new(),
            budget_exhausted: false,
        }
    }

    pub fn source(&mut self, module: &'static str, operation: &'static str) {
        self.module = module;
        self.operation = operation;
    }

    pub fn push(&mut self, params: &Params, metric: &str, value: impl Into<Value>, pass: Option<bool>) {
        self.rows.push(Row {
            experiment: self.experiment.clone(),
            module: self.module,
            operation: self.operation,
            params: params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            metric: metric.to_string(),
            value: value.into(),
            pass,
        });
    }

    pub fn budget(&mut self, params: &Params, detail: String) {
        self.budget_exhausted = true;
        self.push(params, "budget_exhausted", detail, Some(false));
    }

    pub fn finish(self, cfg: Config) -> Report {
        let status = if self.budget_exhausted {
            Status::BudgetExhausted
        } else if self.rows.iter().any(|r| r.pass == Some(false)) {
            Status::AssertionFailure
        } else {
            Status::Pass
        };
        Report {
            experiment: self.experiment,
            config_hash: cfg.hash(),
            config: cfg,
            status,
            rows: self.rows,
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One line per row; `params` is `key=value` pairs joined by `;`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["experiment", "module", "operation", "params", "metric", "value", "pass", "config_hash"])
            .expect("in-memory write");
        for r in &self.rows {
            let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={}", cell(v))).collect();
            let pass = match r.pass {
                Some(true) => "true",
                Some(false) => "false",
                None => "",
            };
            w.write_record([
                r.experiment.as_str(),
                r.module,
                r.operation,
                &params.join(";"),
                &r.metric,
                &cell(&r.value),
                pass,
                &self.config_hash,
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}
