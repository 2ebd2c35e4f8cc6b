use serde::Serialize;

use crate::perf::traffic::{Category, Counter, CountingMode, TrafficReport};
use crate::quant::GemvShape;

pub const CSV_HEADER: &str = "category,bytes,requests";

/// One row per category, then a `total` row.
pub fn report_csv(r: &TrafficReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (c, x) in r.iter() {
        out.push_str(&format!("{c},{},{}\n", x.bytes, x.requests));
    }
    out.push_str(&format!("total,{},{}\n", r.total_bytes(), r.total_requests()));
    out
}

#[derive(Serialize)]
struct JsonRow {
    category: Category,
    bytes: u64,
    requests: u64,
}

#[derive(Serialize)]
struct JsonReport {
    mode: CountingMode,
    shape: GemvShape,
    categories: Vec<JsonRow>,
    total: Counter,
}

pub fn report_json(r: &TrafficReport, shape: GemvShape) -> String {
    let doc = JsonReport {
        mode: r.mode,
        shape,
        categories: r
            .iter()
            .map(|(category, x)| JsonRow {
                category,
                bytes: x.bytes,
                requests: x.requests,
            })
            .collect(),
        total: Counter {
            bytes: r.total_bytes(),
            requests: r.total_requests(),
        },
    };
    serde_json::to_string_pretty(&doc).expect("plain data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut r = TrafficReport::new(CountingMode::Payload);
        r.add(Category::WeightRead, 64, 2);
        let csv = report_csv(&r);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[2], "weight_read,64,2");
        assert_eq!(lines.last(), Some(&"total,64,2"));
    }

    #[test]
    fn json_has_metadata() {
        let r = TrafficReport::new(CountingMode::Line64);
        let v: serde_json::Value = serde_json::from_str(&report_json(&r, GemvShape::new(1, 8, 16).unwrap())).unwrap();
        assert_eq!(v["mode"], "line64");
        assert_eq!(v["shape"]["k"], 8);
        assert_eq!(v["categories"][0]["category"], "activation_read");
    }
}
