use std::io::Write as _;

use mimo_mmse::alphabet::{make_scalar, Constellation};
use mimo_mmse::bounds::mmse_bounds;
use mimo_mmse::channel::{received_constellation, ChannelMatrix};
use mimo_mmse::cli::run;
use mimo_mmse::numerics::{QuadratureRule, Snr};
use num_complex::Complex64;
use serde_json::Value;

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("mimo-mmse").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Header and data rows of CSV output, skipping `#` lines.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn sweep_bpsk_lower_bound_tracks_mmse() {
    let (code, out, err) = cli(&["sweep", "--constellation", "bpsk", "--channel-scalar", "1", "--snr-db", "0:2:20", "--seed", "7"]);
    assert_eq!(code, 0, "{err}");
    let (header, rows) = table(&out);
    assert_eq!(
        header,
        ["snr_db", "mmse", "mmse_se", "lower", "upper", "mi", "mi_se", "mi_lb", "mi_ub"]
    );
    assert_eq!(rows.len(), 11);
    let mmse = column(&header, &rows, "mmse");
    let lower = column(&header, &rows, "lower");
    for (m, l) in mmse.iter().zip(&lower) {
        assert!((m - l).abs() <= 1e-6, "mmse {m} lower {l}");
    }
}

#[test]
fn verify_qpsk_two_by_two_passes() {
    let (code, out, err) = cli(&["verify", "--constellation", "qpsk", "--nt", "2", "--channel", "rayleigh", "--n", "2", "--seed", "3"]);
    assert_eq!(code, 0, "{out}{err}");
    let (header, rows) = table(&out);
    assert_eq!(header, ["check", "snr_db", "value", "low", "high", "pass"]);
    assert_eq!(rows.len(), 21);
    assert!(rows.iter().all(|r| r[5] == "true"));
}

#[test]
fn mi_vanishes_at_minus_sixty_db() {
    let (code, out, _) = cli(&[
        "mi", "--constellation", "bpsk", "--channel-scalar", "1", "--snr-db", "-60", "--samples", "100000", "--seed", "1",
    ]);
    assert_eq!(code, 0);
    let (header, rows) = table(&out);
    let mi = column(&header, &rows, "mi")[0];
    let se = column(&header, &rows, "mi_se")[0];
    assert!(mi.abs() < 3.0 * se + 1e-3, "mi {mi} se {se}");
}

#[test]
fn bits_are_nats_over_ln2() {
    let base = ["bounds", "--constellation", "qpsk", "--snr-db", "0:5:10"];
    let (_, nats, _) = cli(&base);
    let (_, bits, _) = cli(&[&base[..], &["--units", "bits"]].concat());
    let (hn, rn) = table(&nats);
    let (hb, rb) = table(&bits);
    for (n, b) in column(&hn, &rn, "mi_ub").iter().zip(column(&hb, &rb, "mi_ub")) {
        assert!((n / std::f64::consts::LN_2 - b).abs() < 1e-12);
    }
    // mmse columns are not information quantities
    assert_eq!(column(&hn, &rn, "lower"), column(&hb, &rb, "lower"));
}

#[test]
fn snr_db_converts_exactly() {
    assert_eq!(Snr::from_db(0.0).unwrap().linear(), 1.0);
    assert_eq!(Snr::from_db(10.0).unwrap().linear(), 10.0);
    let a = make_scalar(Constellation::Qpsk).unwrap();
    let h = ChannelMatrix::scalar(Complex64::new(1.0, 0.0)).unwrap();
    let rc = received_constellation(&h, &a).unwrap();
    let expect = mmse_bounds(&rc, &a, Snr::new(10.0).unwrap(), &QuadratureRule::default()).unwrap();
    let (_, out, _) = cli(&["bounds", "--constellation", "qpsk", "--snr-db", "10"]);
    let (header, rows) = table(&out);
    assert_eq!(column(&header, &rows, "lower")[0], expect.lower);
    assert_eq!(column(&header, &rows, "upper")[0], expect.upper);
}

#[test]
fn flag_errors_exit_two() {
    for args in [
        &["mmse", "--bogus"][..],
        &["mi", "--constellation", "bpsk", "--snr-db", "0"],
        &["mmse", "--constellation", "qam5", "--snr-db", "0"],
        &["mmse", "--constellation", "bpsk", "--snr-db", "10:1:0"],
        &["mmse", "--constellation", "bpsk", "--snr-db", "0:0:10"],
        &["bounds", "--constellation", "bpsk"],
        &["sweep", "--constellation", "bpsk", "--snr-db", "0", "--seed", "1", "--threads", "0"],
    ] {
        let (code, _, err) = cli(args);
        assert_eq!(code, 2, "{args:?}");
        assert!(!err.is_empty());
    }
    let (code, out, _) = cli(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("verify"));
}

#[test]
fn missing_seed_is_named() {
    let (code, _, err) = cli(&["mi", "--constellation", "bpsk", "--snr-db", "0"]);
    assert_eq!(code, 2);
    assert!(err.contains("--seed"), "{err}");
}

#[test]
fn malformed_channel_json_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"rows":1,"cols":1,"re":[[1.0]]}"#, "im"),
        (r#"{"rows":1,"cols":1,"re":[[1.0]],"im":[[0.0, 1.0]]}"#, "im"),
        (r#"{"cols":1,"re":[[1.0]],"im":[[0.0]]}"#, "rows"),
        (r#"{"rows":1,"cols":"one","re":[[1.0]],"im":[[0.0]]}"#, "cols"),
    ];
    for (k, (text, field)) in cases.iter().enumerate() {
        let path = dir.path().join(format!("h{k}.json"));
        std::fs::File::create(&path).unwrap().write_all(text.as_bytes()).unwrap();
        let (code, _, err) = cli(&["mmse", "--constellation", "bpsk", "--channel", path.to_str().unwrap(), "--snr-db", "0"]);
        assert_eq!(code, 2, "{text}");
        assert!(err.contains(field), "{text}: {err}");
    }
}

#[test]
fn alphabet_file_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("qpsk.json");
    std::fs::write(&path, make_scalar(Constellation::Qpsk).unwrap().to_json()).unwrap();
    let (c1, file, _) = cli(&["bounds", "--alphabet-file", path.to_str().unwrap(), "--snr-db", "0:5:10"]);
    let (c2, builtin, _) = cli(&["bounds", "--constellation", "qpsk", "--snr-db", "0:5:10"]);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(table(&file), table(&builtin));
}

#[test]
fn output_independent_of_thread_count() {
    let args = [
        "sweep", "--constellation", "bpsk", "--nt", "2", "--channel", "rayleigh", "--n", "2", "--snr-db", "0:5:15",
        "--seed", "11", "--samples", "40000", "--chunk", "1000",
    ];
    let (_, one, _) = cli(&[&args[..], &["--threads", "1"]].concat());
    let (_, four, _) = cli(&[&args[..], &["--threads", "4"]].concat());
    let (_, again, _) = cli(&[&args[..], &["--threads", "4"]].concat());
    assert_eq!(one, four);
    assert_eq!(four, again);
}

/// Validates `value` against the subset of JSON Schema the output schema uses.
fn validate(value: &Value, schema: &Value, path: &str) -> Result<(), String> {
    if let Some(types) = schema.get("type") {
        let allowed: Vec<&str> = match types {
            Value::String(s) => vec![s.as_str()],
            Value::Array(v) => v.iter().map(|t| t.as_str().unwrap()).collect(),
            _ => unreachable!(),
        };
        let actual = match value {
            Value::Null => "null",
            Value::Bool(_) => "boolean",
            Value::Number(_) => "number",
            Value::String(_) => "string",
            Value::Array(_) => "array",
            Value::Object(_) => "object",
        };
        if !allowed.contains(&actual) {
            return Err(format!("{path}: {actual} not in {allowed:?}"));
        }
    }
    if let Some(Value::Array(options)) = schema.get("enum") {
        if !options.contains(value) {
            return Err(format!("{path}: {value} not in enum"));
        }
    }
    match value {
        Value::Object(map) => {
            for key in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
                if !map.contains_key(key.as_str().unwrap()) {
                    return Err(format!("{path}: missing {key}"));
                }
            }
            let props = schema.get("properties").and_then(Value::as_object);
            for (k, v) in map {
                match (props.and_then(|p| p.get(k)), schema.get("additionalProperties")) {
                    (Some(sub), _) => validate(v, sub, &format!("{path}.{k}"))?,
                    (None, Some(Value::Bool(false))) => return Err(format!("{path}: unexpected {k}")),
                    (None, Some(sub @ Value::Object(_))) => validate(v, sub, &format!("{path}.{k}"))?,
                    _ => {}
                }
            }
        }
        Value::Array(items) => {
            if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
                if (items.len() as u64) < min {
                    return Err(format!("{path}: fewer than {min} items"));
                }
            }
            if let Some(sub) = schema.get("items") {
                for (k, v) in items.iter().enumerate() {
                    validate(v, sub, &format!("{path}[{k}]"))?;
                }
            }
        }
        _ => {}
    }
    Ok(())
}

#[test]
fn json_output_matches_published_schema() {
    let schema: Value =
        serde_json::from_str(include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/schema/output.schema.json"))).unwrap();
    let runs: [&[&str]; 5] = [
        &["bounds", "--constellation", "bpsk", "--snr-db", "0:10:10"],
        &["mmse", "--constellation", "qpsk", "--snr-db", "-5:5:5"],
        &["mi", "--constellation", "bpsk", "--snr-db", "0", "--seed", "2", "--samples", "5000", "--chunk", "1000"],
        &["verify", "--constellation", "bpsk", "--snr-db", "0:10:10", "--seed", "1", "--samples", "20000", "--chunk", "1000"],
        &["fading", "--constellation", "bpsk", "--trials", "20", "--samples", "1000", "--chunk", "1000", "--seed", "1", "--snr-db", "12:4:24"],
    ];
    for args in runs {
        let (code, out, err) = cli(&[args, &["--format", "json"]].concat());
        assert_eq!(code, 0, "{args:?}: {err}");
        let value: Value = serde_json::from_str(&out).unwrap();
        validate(&value, &schema, "$").unwrap_or_else(|e| panic!("{args:?}: {e}"));
        let width = value["columns"].as_array().unwrap().len();
        assert!(value["rows"].as_array().unwrap().iter().all(|r| r.as_array().unwrap().len() == width));
    }
    // the validator rejects what it should
    let bad = serde_json::json!({"command": "plot", "meta": {"version": "x"}, "columns": ["a"], "rows": []});
    assert!(validate(&bad, &schema, "$").is_err());
}

#[test]
fn binary_exits_with_run_code() {
    let exe = env!("CARGO_BIN_EXE_mimo-mmse");
    let status = std::process::Command::new(exe).args(["mmse", "--nope"]).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
    let ok = std::process::Command::new(exe).args(["bounds", "--constellation", "bpsk", "--snr-db", "0"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("# command=bounds"));
}
