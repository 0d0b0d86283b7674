use serde::{Deserialize, Serialize};

use super::{MabInstance, StockInstance};

/// Top-level JSON document: `{"kind": "stock", ...}` or `{"kind": "mab", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Instance {
    Stock(StockInstance),
    Mab(MabInstance),
}

impl Instance {
    pub fn validate(&self) -> Vec<String> {
        match self {
            Instance::Stock(s) => super::validate_stock(s),
            Instance::Mab(m) => super::validate_mab(m),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_kinds() {
        let stock = r#"{"kind":"stock","budget":1,"items":[[{"size":1,"prob":1.0,"reward":5.0}]]}"#;
        let parsed: Instance = serde_json::from_str(stock).unwrap();
        assert!(parsed.validate().is_empty());
        assert_eq!(serde_json::to_string(&parsed).unwrap(), stock);

        let mab = r#"{"kind":"mab","budget":2,"arms":[{"states":["r","c"],"root":"r",
            "edges":[{"from":"r","to":"c","p":1.0}],"rewards":{"c":2.0},"shape":"tree"}]}"#;
        let parsed: Instance = serde_json::from_str(mab).unwrap();
        assert!(parsed.validate().is_empty());
        match parsed {
            Instance::Mab(m) => assert_eq!(m.arms[0].reward(&"c".into()), 2.0),
            Instance::Stock(_) => panic!("wrong kind"),
        }
    }
}
