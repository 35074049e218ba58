//! The `.pev` certificate format.
//!
//! One JSON object per file, keys sorted, no insignificant whitespace, a single
//! trailing `"\n"`. Every `Natural` (and the entropy seed) is a canonical
//! decimal string so that consumers with 53-bit numbers lose nothing.
//!
//! ```text
//! {"created_at":null,"entropy":{"bits_consumed":8,"kind":"seeded","seed":"42"},
//!  "error_bound_exponent":3,"format_version":1,"k":3,"kind":"evidence",
//!  "method":"miller_rabin","n":"7","outcomes":["indeterminate",...],
//!  "verdict":"prime","witnesses":["3",...]}
//! ```

use std::collections::BTreeSet;

use chrono::DateTime;
use prime_evidence_core::evidence::{ProofDetail, ProofTranscript};
use prime_evidence_core::{
    Certificate, EntropyDescriptor, EvidenceRecord, LLTrace, Method, Natural, Provenance, Verdict,
    VerdictTag, WitnessOutcome, FORMAT_VERSION,
};
use serde_json::{json, Map, Value};

pub const FILE_EXTENSION: &str = "pev";

#[derive(Debug, thiserror::Error)]
pub enum CodecError {
    #[error("not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {0}")]
    Version(String),
    #[error("field `{field}`: {reason}")]
    Field { field: String, reason: String },
    #[error("{0}")]
    Schema(String),
}

fn field_err(field: &str, reason: impl Into<String>) -> CodecError {
    CodecError::Field {
        field: field.to_owned(),
        reason: reason.into(),
    }
}

/// Canonical bytes for `certificate`.
pub fn serialize(certificate: &Certificate) -> Vec<u8> {
    let mut out = canonical_json(&to_value(certificate));
    out.push('\n');
    out.into_bytes()
}

/// Compact JSON with object keys in lexicographic (byte) order at every
/// depth, independent of how the map type orders its entries.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<_> = map.iter().collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            out.push('{');
            for (i, (key, v)) in entries.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(key.clone()).to_string());
                out.push(':');
                write_canonical(v, out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(v, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

/// The certificate as a JSON value.
pub fn to_value(certificate: &Certificate) -> Value {
    match certificate {
        Certificate::Evidence(r) => json!({
            "created_at": r.created_at,
            "entropy": entropy_value(&r.entropy),
            "error_bound_exponent": r.verdict.error_bound_exponent(),
            "format_version": r.format_version,
            "k": r.k,
            "kind": "evidence",
            "method": Method::MillerRabin.as_str(),
            "n": r.n.to_decimal(),
            "outcomes": outcome_values(&r.outcomes),
            "verdict": r.verdict.tag().as_str(),
            "witnesses": decimal_values(&r.witnesses),
        }),
        Certificate::Proof(t) => {
            let mut obj = json!({
                "created_at": t.created_at,
                "error_bound_exponent": Value::Null,
                "format_version": t.format_version,
                "kind": "proof",
                "method": t.method().as_str(),
                "n": t.n.to_decimal(),
                "verdict": t.verdict.tag().as_str(),
            });
            let map = obj.as_object_mut().expect("object literal");
            match &t.detail {
                ProofDetail::Exhaustive {
                    witnesses,
                    outcomes,
                } => {
                    map.insert("witnesses".into(), decimal_values(witnesses));
                    map.insert("outcomes".into(), outcome_values(outcomes));
                }
                ProofDetail::LucasLehmer(trace) => {
                    map.insert("witnesses".into(), json!([]));
                    map.insert("outcomes".into(), json!([]));
                    map.insert("ll_trace".into(), decimal_values(&trace.residues));
                }
            }
            obj
        }
    }
}

fn entropy_value(e: &EntropyDescriptor) -> Value {
    let mut obj = json!({
        "bits_consumed": e.bits_consumed,
        "kind": e.provenance.kind(),
    });
    let map = obj.as_object_mut().expect("object literal");
    match &e.provenance {
        Provenance::Seeded { seed } => {
            map.insert("seed".into(), Value::String(seed.to_string()));
        }
        Provenance::OsEntropy => {}
        Provenance::RemoteQrng { endpoint } => {
            map.insert("endpoint".into(), Value::String(endpoint.clone()));
        }
    }
    obj
}

fn decimal_values(values: &[Natural]) -> Value {
    Value::Array(values.iter().map(|v| Value::String(v.to_decimal())).collect())
}

fn outcome_values(outcomes: &[WitnessOutcome]) -> Value {
    Value::Array(outcomes.iter().map(|o| Value::from(o.as_str())).collect())
}

/// Parses a certificate, rejecting anything outside the schema: unknown or
/// missing keys, non-canonical numerals, unknown versions.
pub fn deserialize(bytes: &[u8]) -> Result<Certificate, CodecError> {
    let value: Value = serde_json::from_slice(bytes)?;
    let obj = value
        .as_object()
        .ok_or_else(|| CodecError::Schema("top level must be a JSON object".into()))?;

    match obj.get("format_version") {
        Some(Value::Number(v)) if v.as_u64() == Some(u64::from(FORMAT_VERSION)) => {}
        Some(other) => return Err(CodecError::Version(other.to_string())),
        None => return Err(field_err("format_version", "missing")),
    }

    let kind = get_str(obj, "kind")?;
    let method = get_str(obj, "method")?;
    match (kind, method) {
        ("evidence", "miller_rabin") => {
            expect_keys(
                obj,
                &[
                    "created_at",
                    "entropy",
                    "error_bound_exponent",
                    "format_version",
                    "k",
                    "kind",
                    "method",
                    "n",
                    "outcomes",
                    "verdict",
                    "witnesses",
                ],
            )?;
            let k = get_u32(obj, "k")?;
            let bound = get_opt_u32(obj, "error_bound_exponent")?;
            let verdict = Verdict::new(get_verdict(obj)?, Method::MillerRabin, bound)
                .map_err(|e| field_err("error_bound_exponent", e.to_string()))?;
            Ok(Certificate::Evidence(EvidenceRecord {
                n: get_natural(obj, "n")?,
                k,
                witnesses: get_naturals(obj, "witnesses")?,
                outcomes: get_outcomes(obj)?,
                verdict,
                entropy: get_entropy(obj)?,
                created_at: get_timestamp(obj)?,
                format_version: FORMAT_VERSION,
            }))
        }
        ("proof", "exhaustive") | ("proof", "lucas_lehmer") => {
            let lucas = method == "lucas_lehmer";
            let mut keys = vec![
                "created_at",
                "error_bound_exponent",
                "format_version",
                "kind",
                "method",
                "n",
                "outcomes",
                "verdict",
                "witnesses",
            ];
            if lucas {
                keys.push("ll_trace");
            }
            expect_keys(obj, &keys)?;
            if get_opt_u32(obj, "error_bound_exponent")?.is_some() {
                return Err(field_err("error_bound_exponent", "must be null for a proof"));
            }
            let n = get_natural(obj, "n")?;
            let witnesses = get_naturals(obj, "witnesses")?;
            let outcomes = get_outcomes(obj)?;
            let (method, detail) = if lucas {
                if !witnesses.is_empty() || !outcomes.is_empty() {
                    return Err(CodecError::Schema(
                        "a Lucas-Lehmer proof has empty witnesses and outcomes".into(),
                    ));
                }
                let trace = LLTrace {
                    p: n.bit_length(),
                    residues: get_naturals(obj, "ll_trace")?,
                };
                (Method::LucasLehmer, ProofDetail::LucasLehmer(trace))
            } else {
                (
                    Method::Exhaustive,
                    ProofDetail::Exhaustive {
                        witnesses,
                        outcomes,
                    },
                )
            };
            let verdict = match get_verdict(obj)? {
                VerdictTag::Prime => Verdict::prime(method),
                VerdictTag::Composite => Verdict::composite(method),
            };
            Ok(Certificate::Proof(ProofTranscript {
                n,
                detail,
                verdict,
                created_at: get_timestamp(obj)?,
                format_version: FORMAT_VERSION,
            }))
        }
        _ => Err(CodecError::Schema(format!(
            "unknown kind/method combination {kind}/{method}"
        ))),
    }
}

fn expect_keys(obj: &Map<String, Value>, keys: &[&str]) -> Result<(), CodecError> {
    let want: BTreeSet<&str> = keys.iter().copied().collect();
    let have: BTreeSet<&str> = obj.keys().map(String::as_str).collect();
    if let Some(missing) = want.difference(&have).next() {
        return Err(field_err(missing, "missing"));
    }
    if let Some(extra) = have.difference(&want).next() {
        return Err(field_err(extra, "unexpected field"));
    }
    Ok(())
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, CodecError> {
    obj.get(key).ok_or_else(|| field_err(key, "missing"))
}

fn get_str<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a str, CodecError> {
    get(obj, key)?
        .as_str()
        .ok_or_else(|| field_err(key, "expected a string"))
}

fn get_u32(obj: &Map<String, Value>, key: &str) -> Result<u32, CodecError> {
    as_u32(get(obj, key)?).ok_or_else(|| field_err(key, "expected a nonnegative 32-bit integer"))
}

fn get_opt_u32(obj: &Map<String, Value>, key: &str) -> Result<Option<u32>, CodecError> {
    match get(obj, key)? {
        Value::Null => Ok(None),
        v => as_u32(v)
            .map(Some)
            .ok_or_else(|| field_err(key, "expected null or a nonnegative 32-bit integer")),
    }
}

fn as_u32(v: &Value) -> Option<u32> {
    v.as_u64().and_then(|x| u32::try_from(x).ok())
}

fn parse_natural(field: &str, v: &Value) -> Result<Natural, CodecError> {
    let s = v
        .as_str()
        .ok_or_else(|| field_err(field, "expected a decimal string"))?;
    Natural::parse_canonical(s).map_err(|e| field_err(field, format!("{s:?}: {e}")))
}

fn get_natural(obj: &Map<String, Value>, key: &str) -> Result<Natural, CodecError> {
    parse_natural(key, get(obj, key)?)
}

fn get_naturals(obj: &Map<String, Value>, key: &str) -> Result<Vec<Natural>, CodecError> {
    get(obj, key)?
        .as_array()
        .ok_or_else(|| field_err(key, "expected an array"))?
        .iter()
        .map(|v| parse_natural(key, v))
        .collect()
}

fn get_outcomes(obj: &Map<String, Value>) -> Result<Vec<WitnessOutcome>, CodecError> {
    get(obj, "outcomes")?
        .as_array()
        .ok_or_else(|| field_err("outcomes", "expected an array"))?
        .iter()
        .map(|v| match v.as_str() {
            Some("composite") => Ok(WitnessOutcome::Composite),
            Some("indeterminate") => Ok(WitnessOutcome::Indeterminate),
            _ => Err(field_err("outcomes", format!("unknown outcome {v}"))),
        })
        .collect()
}

fn get_verdict(obj: &Map<String, Value>) -> Result<VerdictTag, CodecError> {
    match get_str(obj, "verdict")? {
        "prime" => Ok(VerdictTag::Prime),
        "composite" => Ok(VerdictTag::Composite),
        other => Err(field_err("verdict", format!("unknown verdict {other:?}"))),
    }
}

fn get_timestamp(obj: &Map<String, Value>) -> Result<Option<String>, CodecError> {
    match get(obj, "created_at")? {
        Value::Null => Ok(None),
        Value::String(s) => {
            DateTime::parse_from_rfc3339(s)
                .ok()
                .filter(|dt| dt.offset().local_minus_utc() == 0)
                .ok_or_else(|| field_err("created_at", "expected an RFC 3339 UTC timestamp"))?;
            Ok(Some(s.clone()))
        }
        _ => Err(field_err("created_at", "expected null or a string")),
    }
}

fn get_entropy(obj: &Map<String, Value>) -> Result<EntropyDescriptor, CodecError> {
    let e = get(obj, "entropy")?
        .as_object()
        .ok_or_else(|| field_err("entropy", "expected an object"))?;
    let kind = get_str(e, "kind").map_err(|_| field_err("entropy.kind", "expected a string"))?;
    let provenance = match kind {
        "seeded" => {
            expect_keys(e, &["bits_consumed", "kind", "seed"])?;
            let seed = parse_natural("entropy.seed", get(e, "seed")?)?
                .to_u64()
                .ok_or_else(|| field_err("entropy.seed", "exceeds 64 bits"))?;
            Provenance::Seeded { seed }
        }
        "os" => {
            expect_keys(e, &["bits_consumed", "kind"])?;
            Provenance::OsEntropy
        }
        "qrng" => {
            expect_keys(e, &["bits_consumed", "endpoint", "kind"])?;
            Provenance::RemoteQrng {
                endpoint: get_str(e, "endpoint")?.to_owned(),
            }
        }
        other => return Err(field_err("entropy.kind", format!("unknown kind {other:?}"))),
    };
    let bits_consumed = get(e, "bits_consumed")?
        .as_u64()
        .ok_or_else(|| field_err("entropy.bits_consumed", "expected a nonnegative integer"))?;
    Ok(EntropyDescriptor {
        provenance,
        bits_consumed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use prime_evidence_core::{build_record, lucas_lehmer, miller_rabin_test, EntropySource};

    fn seven_record() -> Certificate {
        let mut src = EntropySource::seeded(42);
        let run = miller_rabin_test(&Natural::from(7u32), 3, &mut src).unwrap();
        build_record(&run, src.descriptor(), None).unwrap().into()
    }

    #[test]
    fn evidence_layout_is_canonical() {
        let bytes = serialize(&seven_record());
        let text = std::str::from_utf8(&bytes).unwrap();
        assert!(text.ends_with("}\n"));
        assert!(!text.trim_end().contains(char::is_whitespace));
        assert!(text.starts_with(
            r#"{"created_at":null,"entropy":{"bits_consumed":"#
        ));
        assert!(text.contains(r#""kind":"seeded","seed":"42"}"#));
        assert!(text.contains(r#""error_bound_exponent":3,"format_version":1,"k":3,"kind":"evidence","method":"miller_rabin","n":"7","#));
    }

    #[test]
    fn lucas_lehmer_layout() {
        let run = lucas_lehmer(5).unwrap();
        let cert: Certificate = ProofTranscript::from_lucas_lehmer(&run, None).into();
        let text = String::from_utf8(serialize(&cert)).unwrap();
        assert_eq!(
            text,
            "{\"created_at\":null,\"error_bound_exponent\":null,\"format_version\":1,\"kind\":\"proof\",\
             \"ll_trace\":[\"4\",\"14\",\"8\",\"0\"],\"method\":\"lucas_lehmer\",\"n\":\"31\",\
             \"outcomes\":[],\"verdict\":\"prime\",\"witnesses\":[]}\n"
        );
        assert_eq!(deserialize(text.as_bytes()).unwrap(), cert);
    }

    #[test]
    fn round_trip() {
        let cert = seven_record();
        assert_eq!(deserialize(&serialize(&cert)).unwrap(), cert);
    }

    #[test]
    fn rejects_unknown_version() {
        let text = String::from_utf8(serialize(&seven_record())).unwrap();
        let bad = text.replace("\"format_version\":1", "\"format_version\":999");
        assert!(matches!(deserialize(bad.as_bytes()), Err(CodecError::Version(_))));
    }

    #[test]
    fn rejects_leading_zero_numerals() {
        let text = String::from_utf8(serialize(&seven_record())).unwrap();
        let bad = text.replace("\"n\":\"7\"", "\"n\":\"007\"");
        assert!(matches!(
            deserialize(bad.as_bytes()),
            Err(CodecError::Field { ref field, .. }) if field == "n"
        ));
        let bad = text.replace("\"n\":\"7\"", "\"n\":7");
        assert!(deserialize(bad.as_bytes()).is_err());
    }

    #[test]
    fn rejects_missing_and_extra_fields() {
        let text = String::from_utf8(serialize(&seven_record())).unwrap();
        let missing = text.replace("\"k\":3,", "");
        assert!(matches!(deserialize(missing.as_bytes()), Err(CodecError::Field { .. })));
        let extra = text.replace("\"k\":3,", "\"k\":3,\"note\":\"x\",");
        assert!(matches!(deserialize(extra.as_bytes()), Err(CodecError::Field { .. })));
        assert!(deserialize(b"[1,2]").is_err());
        assert!(deserialize(b"{\"format_version\":1").is_err());
        assert!(deserialize(&[0xff, 0xfe]).is_err());
    }

    #[test]
    fn timestamps_must_be_utc() {
        let text = String::from_utf8(serialize(&seven_record())).unwrap();
        let ok = text.replace("\"created_at\":null", "\"created_at\":\"2026-01-02T03:04:05Z\"");
        assert!(deserialize(ok.as_bytes()).is_ok());
        let offset = text.replace("\"created_at\":null", "\"created_at\":\"2026-01-02T03:04:05+02:00\"");
        assert!(deserialize(offset.as_bytes()).is_err());
        let junk = text.replace("\"created_at\":null", "\"created_at\":\"yesterday\"");
        assert!(deserialize(junk.as_bytes()).is_err());
    }
}
