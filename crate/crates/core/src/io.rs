//! JSON and CSV encodings of states, ensembles and omega estimates.
//!
//! States: `{"space": tag, "idx": [[k...]...], "val": [...]}` where each value
//! is a bare real, `[re, im]`, or a list of `[re, im]` pairs for vector
//! amplitudes. Non-finite numbers are written as `null`.

use std::fmt::Write as _;

use num_complex::Complex;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::evolution::PullbackEnsemble;
use crate::metric::MetricKind;
use crate::omega::{OmegaApprox, ProfilePoint};
use crate::scalar::Scalar;
use crate::state::CoeffState;

pub const SCHEMA_VERSION: u32 = 1;

fn num<F: Scalar>(x: F) -> Value {
    Value::from(x.as_f64())
}

pub fn state_to_json<F: Scalar>(x: &CoeffState<F>) -> Value {
    let dim = x.dim();
    let idx: Vec<Value> = x.indices().iter().map(|k| json!(k[..dim])).collect();
    let val: Vec<Value> = x
        .iter()
        .map(|(_, a)| {
            if a.len() == 1 {
                if a[0].im == F::zero() {
                    num(a[0].re)
                } else {
                    json!([num(a[0].re), num(a[0].im)])
                }
            } else {
                Value::Array(a.iter().map(|z| json!([num(z.re), num(z.im)])).collect())
            }
        })
        .collect();
    json!({ "space": x.space(), "idx": idx, "val": val })
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn parse_f<F: Scalar>(v: &Value) -> Result<F> {
    v.as_f64()
        .map(F::lit)
        .ok_or_else(|| bad(format!("expected a number, got {v}")))
}

fn parse_complex<F: Scalar>(v: &Value) -> Result<Complex<F>> {
    match v {
        Value::Number(_) => Ok(Complex::new(parse_f(v)?, F::zero())),
        Value::Array(p) if p.len() == 2 && p.iter().all(Value::is_number) => {
            Ok(Complex::new(parse_f(&p[0])?, parse_f(&p[1])?))
        }
        _ => Err(bad(format!("expected re or [re, im], got {v}"))),
    }
}

pub fn state_from_json<F: Scalar>(v: &Value) -> Result<CoeffState<F>> {
    let space = v
        .get("space")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("state needs a string \"space\""))?;
    let idx = v
        .get("idx")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("state needs an \"idx\" array"))?;
    let val = v
        .get("val")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("state needs a \"val\" array"))?;
    if idx.len() != val.len() {
        return Err(bad("\"idx\" and \"val\" differ in length"));
    }

    let mut dim = None;
    let mut indices = Vec::with_capacity(idx.len());
    for k in idx {
        let comps = k
            .as_array()
            .ok_or_else(|| bad("each index must be an array"))?;
        if comps.is_empty() || comps.len() > 3 || dim.is_some_and(|d| d != comps.len()) {
            return Err(bad("indices must share a dimension between 1 and 3"));
        }
        dim = Some(comps.len());
        let mut m = [0i32; 3];
        for (slot, c) in m.iter_mut().zip(comps) {
            *slot = c
                .as_i64()
                .and_then(|c| i32::try_from(c).ok())
                .ok_or_else(|| bad("index components must be 32-bit integers"))?;
        }
        indices.push(m);
    }

    let vector = |v: &Value| matches!(v, Value::Array(items) if items.iter().any(Value::is_array));
    let width = match val.first() {
        Some(first) if vector(first) => first.as_array().map_or(0, Vec::len),
        _ => 1,
    };
    let mut values = Vec::with_capacity(val.len() * width);
    for v in val {
        if width > 1 || vector(v) {
            let items = v
                .as_array()
                .filter(|a| a.len() == width)
                .ok_or_else(|| bad("inconsistent amplitude widths"))?;
            for z in items {
                values.push(parse_complex(z)?);
            }
        } else {
            values.push(parse_complex(v)?);
        }
    }
    CoeffState::from_parts(space, dim.unwrap_or(1), width.max(1), indices, values)
}

/// One JSON object per line: `t`, `s`, `branch`, `seed`, `state`.
pub fn ensemble_to_json_lines<F: Scalar>(ens: &PullbackEnsemble<F>) -> String {
    let mut out = String::new();
    for e in &ens.entries {
        let line = json!({
            "t": num(ens.t),
            "s": num(e.s),
            "branch": e.branch,
            "seed": e.seed,
            "state": state_to_json(&e.state),
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

fn profile_json<F: Scalar>(profile: &[ProfilePoint<F>]) -> Value {
    Value::Array(
        profile
            .iter()
            .map(|p| json!({ "s": num(p.s), "semidist": num(p.semidist) }))
            .collect(),
    )
}

pub fn omega_to_json<F: Scalar>(om: &OmegaApprox<F>) -> Value {
    let mut m = Map::new();
    m.insert("schema".into(), json!(SCHEMA_VERSION));
    m.insert("system".into(), json!(om.system));
    m.insert("kind".into(), json!(om.kind.to_string()));
    m.insert("t".into(), num(om.t));
    m.insert("metric".into(), json!(om.metric.to_string()));
    m.insert("eps_net".into(), num(om.eps_net));
    m.insert("tol".into(), num(om.tol));
    m.insert("converged".into(), json!(om.converged));
    m.insert("depth".into(), num(om.depth));
    m.insert("note".into(), json!(om.note));
    m.insert(
        "points".into(),
        Value::Array(om.points.iter().map(state_to_json).collect()),
    );
    m.insert("profile".into(), profile_json(&om.profile));
    Value::Object(m)
}

pub const PROFILE_CSV_HEADER: &str = "s,semidist,metric,system,t";

fn csv_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Profile rows `s,semidist,metric,system,t` with a header line.
pub fn profile_csv<F: Scalar>(
    profile: &[ProfilePoint<F>],
    metric: MetricKind,
    system: &str,
    t: F,
) -> String {
    let mut out = String::from(PROFILE_CSV_HEADER);
    out.push('\n');
    for p in profile {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            csv_num(p.s.as_f64()),
            csv_num(p.semidist.as_f64()),
            metric,
            system,
            csv_num(t.as_f64())
        );
    }
    out
}

pub fn omega_profile_csv<F: Scalar>(om: &OmegaApprox<F>) -> String {
    profile_csv(&om.profile, om.metric, &om.system, om.t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{pullback_image, testing::*, BranchSelect};
    use crate::omega::{omega_pullback, OmegaOptions, PullbackSchedule};

    #[test]
    fn real_state_round_trip() {
        let x = CoeffState::<f64>::from_real("l2", [(3, 0.25), (-1, -1.5)]).unwrap();
        let v = state_to_json(&x);
        assert_eq!(
            v.to_string(),
            r#"{"idx":[[-1],[3]],"space":"l2","val":[-1.5,0.25]}"#
        );
        assert_eq!(state_from_json::<f64>(&v).unwrap(), x);
    }

    #[test]
    fn vector_state_round_trip() {
        let c = |a: f64, b: f64| Complex::new(a, b);
        let x = CoeffState::<f64>::from_parts(
            "nse",
            3,
            3,
            vec![[1, 0, 0], [-1, 0, 0]],
            vec![
                c(0.0, 0.0),
                c(0.5, -0.5),
                c(0.0, 1.0),
                c(0.0, 0.0),
                c(0.5, 0.5),
                c(0.0, -1.0),
            ],
        )
        .unwrap();
        let back = state_from_json::<f64>(&state_to_json(&x)).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn complex_scalar_and_errors() {
        let v: Value =
            serde_json::from_str(r#"{"space":"h","idx":[[0],[2]],"val":[1.0,[0.5,-0.5]]}"#)
                .unwrap();
        let x = state_from_json::<f64>(&v).unwrap();
        assert_eq!(x.coeff(2), Complex::new(0.5, -0.5));
        for bad_doc in [
            r#"{"idx":[[0]],"val":[1.0]}"#,
            r#"{"space":"h","idx":[[0],[1]],"val":[1.0]}"#,
            r#"{"space":"h","idx":[[0],[0,1]],"val":[1.0,2.0]}"#,
            r#"{"space":"h","idx":[[0],[0]],"val":[1.0,2.0]}"#,
            r#"{"space":"h","idx":[[0]],"val":["x"]}"#,
        ] {
            let v: Value = serde_json::from_str(bad_doc).unwrap();
            assert!(state_from_json::<f64>(&v).is_err(), "{bad_doc}");
        }
    }

    #[test]
    fn ensemble_lines_and_omega_documents() {
        let fam = Decay::new(vec![1.0, 2.0]);
        let ens = pullback_image(&fam, &[e(0)], 0.0, -1.0, BranchSelect::All).unwrap();
        let text = ensemble_to_json_lines(&ens);
        let lines: Vec<Value> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1]["branch"], 1);
        assert_eq!(lines[0]["s"], -1.0);

        let sched = PullbackSchedule::default_at(0.0);
        let opts = OmegaOptions::new(MetricKind::Strong, 1e-3, 1e-3).unwrap();
        let om = omega_pullback(&fam, &vec![e(0)], &sched, &opts).unwrap();
        let doc = omega_to_json(&om);
        assert_eq!(doc["schema"], 1);
        assert_eq!(doc["metric"], "strong");
        assert_eq!(doc["profile"].as_array().unwrap().len(), 16);
        let csv = omega_profile_csv(&om);
        assert!(csv.starts_with("s,semidist,metric,system,t\n-1,"));
        assert_eq!(csv.lines().count(), 17);
    }
}
