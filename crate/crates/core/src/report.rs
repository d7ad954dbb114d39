//! CSV report rendering.  Every report begins with a comment header carrying
//! the artifact version, the config hash and the seed, so byte-identical
//! bodies certify reproducible runs.  Floats are printed with Rust's
//! shortest-round-trip formatting, which is deterministic across platforms.

use std::fmt::Write as _;

use crate::boundary::{ContinuationRegions, StageInterval};
use crate::checks::CheckReport;
use crate::engine::{Characteristics, Provenance, TraceRow};
use crate::oracle::OracleCertificate;
use crate::recursion::RecursionOutput;

/// The standard first line of every report.
pub fn header(config_hash: &str, seed: u64) -> String {
    format!("# lmpseq {} config={config_hash} seed={seed}\n", crate::VERSION)
}

fn fmt(x: f64) -> String {
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

/// `stage,A,B` rows; `EMPTY,EMPTY` for stages that always stop.
pub fn boundaries_csv(regions: &ContinuationRegions, head: &str) -> String {
    let mut out = String::from(head);
    out.push_str("stage,A,B\n");
    for sb in &regions.per_stage {
        match sb.interval {
            StageInterval::Empty => {
                let _ = writeln!(out, "{},EMPTY,EMPTY", sb.stage);
            }
            StageInterval::Interval { a, b } => {
                let _ = writeln!(out, "{},{},{}", sb.stage, fmt(a), fmt(b));
            }
        }
    }
    out
}

/// `stage,z,v,r` rows over every stored grid node.
pub fn value_functions_csv(rec: &RecursionOutput, head: &str) -> String {
    let mut out = String::from(head);
    out.push_str("stage,z,v,r\n");
    for (n, v) in rec.v.iter().enumerate() {
        let r = rec.r.get(n);
        for i in 0..v.len() {
            let r_txt = r.map_or_else(|| "".into(), |r| fmt(r.values()[i]));
            let _ = writeln!(out, "{n},{},{},{r_txt}", fmt(v.node(i)), fmt(v.values()[i]));
        }
    }
    out
}

/// Summary row plus one row per evaluated theta.
pub fn characteristics_csv(ch: &Characteristics, head: &str) -> String {
    let mut out = String::from(head);
    let provenance = match ch.provenance {
        Provenance::Exact => "exact".to_string(),
        Provenance::MonteCarlo { reps, seed } => format!("monte_carlo(reps={reps};seed={seed})"),
    };
    out.push_str("kind,theta,value,se\n");
    let se = |v: Option<f64>| v.map_or_else(String::new, fmt);
    let e = ch.errors.as_ref();
    let _ = writeln!(out, "provenance,,{provenance},");
    let _ = writeln!(out, "alpha,,{},{}", fmt(ch.alpha), se(e.map(|e| e.alpha_se)));
    let _ = writeln!(out, "asn,,{},{}", fmt(ch.asn), se(e.map(|e| e.asn_se)));
    let _ = writeln!(
        out,
        "beta_dot,,{},{}",
        fmt(ch.power_derivative),
        se(e.map(|e| e.power_derivative_se))
    );
    for &(theta, p) in &ch.power {
        let p_se = e
            .and_then(|e| e.power_se.iter().find(|(t, _)| *t == theta))
            .map(|&(_, s)| s);
        let _ = writeln!(out, "power,{},{},{}", fmt(theta), fmt(p), se(p_se));
    }
    for &(theta, info) in &ch.kl_to_stop {
        let _ = writeln!(out, "kl_to_stop,{},{},", fmt(theta), fmt(info));
    }
    out
}

/// One row per simulated trajectory of the null pass.
pub fn trace_csv(rows: &[TraceRow], head: &str) -> String {
    let mut out = String::from(head);
    out.push_str("rep,stopped_at,z_at_stop,rejected\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.rep,
            r.stopped_at,
            fmt(r.z_at_stop),
            u8::from(r.rejected)
        );
    }
    out
}

/// One row per check.
pub fn checks_csv(reports: &[CheckReport], head: &str) -> String {
    let mut out = String::from(head);
    out.push_str("name,instance,lhs,relation,rhs,slack,verdict,provenance\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},\"{}\",{},{},{},{},{},{}",
            r.name,
            r.instance.replace('"', "'"),
            fmt(r.lhs),
            r.relation.symbol(),
            fmt(r.rhs),
            fmt(r.slack),
            if r.pass { "pass" } else { "fail" },
            r.provenance
        );
    }
    out
}

/// The oracle certificate as key-value rows.
pub fn certificate_csv(cert: &OracleCertificate, model_hash: &str, head: &str) -> String {
    let mut out = String::from(head);
    out.push_str("key,value\n");
    let _ = writeln!(out, "horizon,{}", cert.horizon);
    let _ = writeln!(out, "b,{}", fmt(cert.b));
    let _ = writeln!(out, "c,{}", fmt(cert.c));
    let _ = writeln!(out, "model_hash,{model_hash}");
    let _ = writeln!(out, "dp_min,{}", fmt(cert.dp_min));
    let _ = writeln!(
        out,
        "enum_min,{}",
        cert.enum_min.map_or_else(|| "skipped".into(), fmt)
    );
    let _ = writeln!(out, "recursion_value,{}", fmt(cert.recursion_value));
    let _ = writeln!(out, "max_delta,{}", fmt(cert.max_delta));
    let _ = writeln!(
        out,
        "rules_enumerated,{}",
        cert.rules_enumerated
            .map_or_else(|| "skipped".into(), |n| n.to_string())
    );
    let _ = writeln!(
        out,
        "argmin_sandwich,{}",
        if cert.argmin_sandwich_ok { "ok" } else { "violated" }
    );
    out
}
