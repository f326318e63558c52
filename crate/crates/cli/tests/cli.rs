use std::path::Path;
use std::process::{Command, Output};

use chdr_rt::chdr::{encode_data_packet, CaptureWriter, SampleBlock};

fn chdr_rt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chdr-rt")).args(args).env_remove("CHDR_RT_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn passthrough_run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = chdr_rt(&["run", "--mode", "passthrough", "--spp", "512", "--fs", "100e6", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("packetization      5.120 us"));
    let csv = read(&out, "report.csv");
    assert!(csv.contains("packetization,5.120,us\n"));
    assert!(csv.contains("seed,7,\n"));
    assert!(read(&out, "histogram.csv").starts_with("bin_start_us,count\n"));
    assert_eq!(read(&out, "report.txt"), stdout(&o));
}

#[test]
fn same_args_same_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = chdr_rt(&[
            "run", "--spp", "256", "--latency", "100", "--jitter", "20", "--lead", "80", "--seed", "5",
            "--set", "proc_base=20", "--set", "proc_jitter=40", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        ["report.txt", "report.csv", "histogram.csv"].map(|f| read(&out, f))
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn lti_delta_channel_verifies() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("delta.cir"), "cir v1 1 1 1\n1 0\n").unwrap();
    std::fs::write(dir.path().join("lti.conf"), "mode = lti\nspp = 256\ncir = delta.cir\n").unwrap();
    let conf = dir.path().join("lti.conf");
    let o = chdr_rt(&["run", "--config", conf.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = chdr_rt(&["verify", "--config", conf.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    let db: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!(db < -80.0, "{line}");
    // an impossible bar fails the run
    let o = chdr_rt(&["verify", "--config", conf.to_str().unwrap(), "--threshold-db", "-200"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn flags_override_file_and_env_is_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("c.conf");
    std::fs::write(&conf, "spp = 256\n").unwrap();
    let out = dir.path().join("o");
    let base = ["run", "--config", conf.to_str().unwrap(), "--out", out.to_str().unwrap()];

    let o = chdr_rt(&[&base[..], &["--spp", "512"]].concat());
    assert!(o.status.success());
    assert!(read(&out, "report.csv").contains("spp,512,samples\n"));

    let o = Command::new(env!("CARGO_BIN_EXE_chdr-rt")).args(base).env("CHDR_RT_SEED", "99").output().unwrap();
    assert!(o.status.success());
    assert!(read(&out, "report.csv").contains("seed,99,\n"));

    std::fs::write(&conf, "spp = 256\nseed = 4\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_chdr-rt")).args(base).env("CHDR_RT_SEED", "99").output().unwrap();
    assert!(o.status.success());
    assert!(read(&out, "report.csv").contains("seed,4,\n"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "spp = 256\nwarp = 9\n").unwrap();
    let o = chdr_rt(&["run", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key \"warp\""));

    assert_eq!(chdr_rt(&["run", "--mode", "lti"]).status.code(), Some(2));
    assert_eq!(chdr_rt(&["run", "--spp", "many"]).status.code(), Some(2));
    assert_eq!(chdr_rt(&["run", "--set", "nope=1"]).status.code(), Some(2));
    assert_eq!(chdr_rt(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(chdr_rt(&["run", "--config", "/nonexistent/x.conf"]).status.code(), Some(2));
}

#[test]
fn decode_dumps_headers_and_rejects_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let mut w = CaptureWriter::new();
    for k in 0..3u16 {
        w.record(&encode_data_packet(&SampleBlock::zeros(8, 8 * k as u64), k, 2, true).unwrap());
    }
    let path = dir.path().join("capture.bin");
    std::fs::write(&path, w.as_bytes()).unwrap();
    let o = chdr_rt(&["decode", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.contains("DataWithTs")).count(), 3);
    assert!(text.contains("seq=2"));
    assert!(text.contains("ts=16"));
    assert!(text.ends_with("3 packets, 144 bytes\n"));

    let bytes = w.into_bytes();
    std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
    let o = chdr_rt(&["decode", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn bench_reports_transform_counts() {
    let o = chdr_rt(&["bench", "--spp", "64", "--cir-len", "128", "--ports", "2", "--blocks", "20"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("per_block=4.00"));
    assert_eq!(chdr_rt(&["bench", "--precision", "half"]).status.code(), Some(2));
}
