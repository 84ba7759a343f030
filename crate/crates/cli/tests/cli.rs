use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cocycle-lab"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cocycle-lab-it-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], out: &PathBuf) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn without_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.contains("generated"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn identities_pass() {
    let out = scratch("id");
    let o = run(&["identities"], &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = std::fs::read_to_string(out.join("identities.csv")).unwrap();
    assert_eq!(
        csv.lines().nth(1),
        Some("identity,samples,max_error,tolerance,pass")
    );
}

#[test]
fn reruns_are_identical_apart_from_the_timestamp() {
    let a = scratch("det");
    let files = ["arith.json", "reduce.csv", "reduce.json"];
    let mut first = Vec::new();
    for pass in 0..2 {
        assert_eq!(
            run(&["arith", "--K", "60", "--depth", "4"], &a)
                .status
                .code(),
            Some(0)
        );
        assert_eq!(run(&["reduce", "--seed", "9"], &a).status.code(), Some(0));
        for (i, f) in files.iter().enumerate() {
            let text = without_timestamp(&std::fs::read_to_string(a.join(f)).unwrap());
            if pass == 0 {
                first.push(text);
            } else {
                assert_eq!(first[i], text, "{f}");
            }
        }
    }
    let csv = std::fs::read_to_string(a.join("reduce.csv")).unwrap();
    assert!(csv.starts_with("# generated"));
    assert!(csv.contains("seed 9"));
    assert_eq!(
        csv.lines().nth(1),
        Some("step_index,truncation_N,input_size,output_size,min_denominator,conjugation_size")
    );
}

#[test]
fn corollary_and_pipeline_write_artifacts() {
    let out = scratch("pipe");
    assert_eq!(run(&["corollary"], &out).status.code(), Some(0));
    let o = run(&["pipeline", "--z", "0.01,0"], &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let json = std::fs::read_to_string(out.join("pipeline.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let d = v["result"]["trace"]["distance_to_constant"]
        .as_f64()
        .unwrap();
    assert!(d < 1e-3);
    let csv = std::fs::read_to_string(out.join("pipeline_distances.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("m,distance_to_constant"));
}

#[test]
fn near_resonant_frequency_is_a_numerical_failure() {
    let out = scratch("liouville");
    let o = run(&["reduce", "--alpha", "0.16666666666667"], &out);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("reduce"));
}

#[test]
fn precondition_and_io_exit_codes() {
    let out = scratch("codes");
    assert_eq!(
        run(&["pipeline", "--alpha", "0.5000001"], &out)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["arith", "--grid", "100"], &out).status.code(),
        Some(2)
    );
    let cfg = out.join("bad.toml");
    std::fs::write(&cfg, "gama = 3.0\n").unwrap();
    let o = bin()
        .args(["arith", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .args(["arith", "--config"])
        .arg(out.join("missing.toml"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
    let blocked = out.join("file");
    std::fs::write(&blocked, "").unwrap();
    assert_eq!(run(&["arith"], &blocked.join("sub")).status.code(), Some(4));
}

#[test]
fn config_file_supplies_the_command() {
    let out = scratch("cfgcmd");
    let cfg = out.join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "command = \"arith\"\nalpha = \"silver\"\nK = 30\nout = {:?}\n",
            out.display().to_string()
        ),
    )
    .unwrap();
    let o = bin().arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("arith.json")).unwrap()).unwrap();
    assert_eq!(v["result"]["dc"]["depth_K"], 30);
}
