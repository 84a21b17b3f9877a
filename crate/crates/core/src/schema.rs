//! Named column schemas for flow-record files.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column layout of a flow-record CSV: feature columns, the label column,
/// and which features are categorical by default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub name: String,
    /// Feature columns, in file order. The label column is not listed here.
    pub columns: Vec<String>,
    pub label_column: String,
    /// Features treated as categorical unless overridden.
    pub categorical: Vec<String>,
    /// Features dropped by the default preprocessing options.
    pub default_drop: Vec<String>,
    /// Extra columns tolerated in the file and ignored (e.g. auxiliary labels).
    pub ignored: Vec<String>,
}

/// The 43 feature columns of the Bot-IoT flow format.
pub const BOT_IOT_FEATURES: [&str; 43] = [
    "pkSeqID",
    "stime",
    "flgs",
    "flgs_number",
    "proto",
    "proto_number",
    "saddr",
    "sport",
    "daddr",
    "dport",
    "pkts",
    "bytes",
    "state",
    "state_number",
    "ltime",
    "seq",
    "dur",
    "mean",
    "stddev",
    "sum",
    "min",
    "max",
    "spkts",
    "dpkts",
    "sbytes",
    "dbytes",
    "rate",
    "srate",
    "drate",
    "TnBPSrcIP",
    "TnBPDstIP",
    "TnP_PSrcIP",
    "TnP_PDstIP",
    "TnP_PerProto",
    "TnP_Per_Dport",
    "AR_P_Proto_P_SrcIP",
    "AR_P_Proto_P_DstIP",
    "N_IN_Conn_P_SrcIP",
    "N_IN_Conn_P_DstIP",
    "AR_P_Proto_P_Sport",
    "AR_P_Proto_P_Dport",
    "Pkts_P_State_P_Protocol_P_DestIP",
    "Pkts_P_State_P_Protocol_P_SrcIP",
];

impl Schema {
    /// Built-in schema for Bot-IoT flow extracts: 43 features, binary
    /// `attack` label, textual columns categorical, row ids and the
    /// aggregate-duration statistics dropped before modelling.
    pub fn bot_iot() -> Schema {
        Schema {
            name: "bot-iot".to_string(),
            columns: BOT_IOT_FEATURES.iter().map(|s| s.to_string()).collect(),
            label_column: "attack".to_string(),
            categorical: ["flgs", "proto", "saddr", "sport", "daddr", "dport", "state"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            default_drop: ["pkSeqID", "seq", "dur", "mean", "stddev", "sum", "min", "max"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            ignored: vec!["category".to_string(), "subcategory".to_string()],
        }
    }

    /// Schema for generated numeric datasets: `f0..f{n-1}` plus a `label`
    /// column, nothing categorical.
    pub fn generic(n_features: usize) -> Schema {
        Schema {
            name: "generic".to_string(),
            columns: (0..n_features).map(|i| format!("f{i}")).collect(),
            label_column: "label".to_string(),
            categorical: Vec::new(),
            default_drop: Vec::new(),
            ignored: Vec::new(),
        }
    }

    /// Ad-hoc schema over explicit column names.
    pub fn custom(
        name: &str,
        columns: Vec<String>,
        label_column: &str,
        categorical: Vec<String>,
    ) -> Schema {
        Schema {
            name: name.to_string(),
            columns,
            label_column: label_column.to_string(),
            categorical,
            default_drop: Vec::new(),
            ignored: Vec::new(),
        }
    }

    /// Look up a built-in schema by name.
    pub fn by_name(name: &str) -> Result<Schema> {
        match name {
            "bot-iot" | "bot_iot" | "botiot" => Ok(Schema::bot_iot()),
            other => Err(Error::Schema(format!("unknown schema '{other}'"))),
        }
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}
