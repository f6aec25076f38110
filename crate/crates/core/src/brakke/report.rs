//! Serialized functional records: CSV with a fixed header and versioned JSON.

use serde::Serialize;

use super::grid::GridSpec;

/// One `(slice, φ, t)` record.
#[derive(Clone, Debug, Serialize)]
pub struct FunctionalReport {
    pub t: f64,
    pub mass: f64,
    pub variation: f64,
    pub error_estimate: f64,
    pub grid: GridSpec,
    pub support_covered: bool,
}

pub const CSV_HEADER: &str = "t,mass,variation,error_estimate,grid_r,grid_angular,grid_s,grid_rmax";

pub fn to_csv(records: &[FunctionalReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.t,
            r.mass,
            r.variation,
            r.error_estimate,
            r.grid.r_nodes,
            r.grid.angular_nodes,
            r.grid.s_nodes,
            r.grid.r_max
        ));
    }
    out
}

pub fn to_json(records: &[FunctionalReport]) -> String {
    let doc = serde_json::json!({
        "schema_version": 1,
        "records": records,
    });
    serde_json::to_string_pretty(&doc).expect("reports serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_fixed_header_and_one_row_per_record() {
        let r = FunctionalReport {
            t: -0.5,
            mass: 1.25,
            variation: -0.75,
            error_estimate: 1e-7,
            grid: GridSpec { r_nodes: 8, angular_nodes: 4, s_nodes: 4, r_max: 2.0 },
            support_covered: true,
        };
        let csv = to_csv(&[r.clone(), r]);
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("-0.5,1.25,-0.75,"));
        assert_eq!(lines[1], lines[2]);
    }

    #[test]
    fn json_is_versioned() {
        let txt = to_json(&[]);
        let v: serde_json::Value = serde_json::from_str(&txt).unwrap();
        assert_eq!(v["schema_version"], 1);
    }
}
