use std::fs;
use std::path::Path;

use aiin_cli::run_with;
use aiin_core::imgproc::{aiin_normalize, decode_pgm, encode_pgm, ContrastThreshold, Image, WindowGrid};

fn aiin(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("aiin").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn value<'a>(out: &'a str, key: &str) -> &'a str {
    out.lines().find_map(|l| l.strip_prefix(&format!("{key}="))).unwrap_or_else(|| panic!("{key} missing in {out}"))
}

fn toy(dir: &Path, name: &str, n: &str, seed: &str, label: Option<&str>) -> String {
    let d = dir.join(name);
    let mut args = vec!["toygen", "--out-dir", p(&d), "--n", n, "--seed", seed];
    if let Some(l) = label {
        args.extend(["--label", l]);
    }
    let (code, _, err) = aiin(&args);
    assert_eq!(code, 0, "{err}");
    d.join("manifest.csv").to_str().unwrap().to_string()
}

#[test]
fn msssim_of_a_manifest_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let a = toy(dir.path(), "a", "12", "1", None);
    let (code, out, _) = aiin(&["msssim", &a, &a, "--pairs", "10", "--seed", "1"]);
    assert_eq!(code, 0);
    assert_eq!(value(&out, "real_msssim"), value(&out, "synthetic_msssim"));
    assert_eq!(value(&out, "delta"), "0");
    assert_eq!(value(&out, "collapsed"), "false");
}

#[test]
fn fid_of_features_against_themselves() {
    let dir = tempfile::tempdir().unwrap();
    let a = toy(dir.path(), "a", "10", "2", None);
    let csv = dir.path().join("f.csv");
    assert_eq!(aiin(&["features", &a, "--out", p(&csv)]).0, 0);
    let (code, out, err) = aiin(&["fid", p(&csv), p(&csv)]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(value(&out, "fid").parse::<f64>().unwrap(), 0.0);
    // a manifest is accepted in place of a feature CSV
    let (code, out, _) = aiin(&["fid", &a, p(&csv)]);
    assert_eq!((code, value(&out, "fid")), (0, "0"));
}

#[test]
fn normalize_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let img = Image::from_fn(40, 32, |x, y| (60 + (x * 3 + y) % 40) as u8).unwrap();
    let input = dir.path().join("in.pgm");
    let output = dir.path().join("out.pgm");
    fs::write(&input, encode_pgm(&img, true)).unwrap();
    let (code, _, err) = aiin(&["normalize", "aiin", p(&input), p(&output), "--grid", "8x8", "--threshold", "50"]);
    assert_eq!(code, 0, "{err}");
    let expected = aiin_normalize(&img, WindowGrid::square(8).unwrap(), ContrastThreshold(50)).unwrap();
    assert_eq!(decode_pgm(&fs::read(&output).unwrap()).unwrap(), expected);
    for method in ["gaussian", "median"] {
        assert_eq!(aiin(&["normalize", method, p(&input), p(&output), "--ksize", "5"]).0, 0);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(aiin(&["frobnicate"]).0, 1);
    assert_eq!(aiin(&["normalize", "aiin", "a.pgm", "b.pgm", "--grid", "8"]).0, 1);
    assert_eq!(aiin(&["--help"]).0, 0);
    let missing = dir.path().join("nope.csv");
    let (code, _, err) = aiin(&["msssim", p(&missing), p(&missing)]);
    assert_eq!(code, 2);
    assert!(err.contains("nope.csv"), "{err}");

    // covariance entries overflow to infinity
    let huge = dir.path().join("huge.csv");
    fs::write(&huge, "1e300,0\n-1e300,1\n1e300,2\n").unwrap();
    let (code, _, err) = aiin(&["fid", p(&huge), p(&huge)]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn gan_train_generate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy(dir.path(), "real", "24", "3", None);
    let ckpt = dir.path().join("g.bin");
    let hist = dir.path().join("h.csv");
    let args = ["train-gan", &m, "--out", p(&ckpt), "--history", p(&hist), "--epochs", "3", "--batch-size", "8"];
    let (code, out, err) = aiin(&args);
    assert_eq!(code, 0, "{err}");
    assert_eq!(value(&out, "epochs"), "3");
    let first = fs::read(&ckpt).unwrap();
    assert_eq!(&first[..6], b"DGMLP1");
    assert_eq!(fs::read_to_string(&hist).unwrap().lines().count(), 4);
    assert_eq!(aiin(&args).0, 0);
    assert_eq!(fs::read(&ckpt).unwrap(), first);

    let gen_dir = dir.path().join("fake");
    let (code, _, err) = aiin(&["generate", p(&ckpt), "--n", "6", "--seed", "2", "--out-dir", p(&gen_dir)]);
    assert_eq!(code, 0, "{err}");
    let img = decode_pgm(&fs::read(gen_dir.join("img_0005.pgm")).unwrap()).unwrap();
    assert_eq!((img.width(), img.height()), (16, 16));
}

#[test]
fn classify_reports_confusion_counts() {
    let dir = tempfile::tempdir().unwrap();
    let merge = |name: &str, parts: [String; 2]| {
        let path = dir.path().join(name);
        let mut text = String::new();
        for part in parts {
            let base = Path::new(&part).parent().unwrap();
            for line in fs::read_to_string(&part).unwrap().lines() {
                text.push_str(&format!("{}\n", base.join(line).display()));
            }
        }
        fs::write(&path, text).unwrap();
        path
    };
    let train = merge(
        "train.csv",
        [toy(dir.path(), "n0", "20", "1", Some("0")), {
            let d = dir.path().join("p0");
            aiin(&["toygen", "--out-dir", p(&d), "--n", "20", "--seed", "2", "--blob-sigma", "4", "--label", "1"]);
            d.join("manifest.csv").to_str().unwrap().to_string()
        }],
    );
    let test = merge("test.csv", [toy(dir.path(), "n1", "5", "3", Some("0")), toy(dir.path(), "p1", "5", "4", Some("1"))]);
    let (code, out, err) = aiin(&["classify", "--train", p(&train), "--test", p(&test), "--epochs", "5"]);
    assert_eq!(code, 0, "{err}");
    let total: u64 = ["tp", "fp", "tn", "fn"].iter().map(|k| value(&out, k).parse::<u64>().unwrap()).sum();
    assert_eq!(total, 10);
}

#[test]
fn experiment_is_reproducible_and_reports_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(
        &cfg,
        "# small sweep\nn=24\nepochs=2\nbatch_sizes=8\nvariants=none,aiin:4x4:10,median:3\nclassifier_epochs=2\nseed=5\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let (code, _, err) = aiin(&["experiment", "--config", p(&cfg), "--out", p(out)]);
        assert_eq!(code, 0, "{err}");
    }
    let rows = fs::read(&a).unwrap();
    assert_eq!(rows, fs::read(&b).unwrap());
    assert_eq!(String::from_utf8_lossy(&rows).lines().count(), 4);

    // flags override the file
    let (code, out, _) = aiin(&["experiment", "--config", p(&cfg), "--variants", "none"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 2);

    let (svg, again) = (dir.path().join("r.svg"), dir.path().join("again.csv"));
    let (code, table, err) = aiin(&["report", p(&a), "--svg", p(&svg), "--metric", "fid", "--csv-out", p(&again)]);
    assert_eq!(code, 0, "{err}");
    assert!(table.contains("median"));
    assert_eq!(fs::read(&again).unwrap(), rows);
    let svg_text = fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&svg_text).unwrap();
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("rect")).count(), 3);

    assert_eq!(aiin(&["report", p(&a), "--metric", "augmentation"]).0, 1);
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "epoch=3\n").unwrap();
    assert_eq!(aiin(&["experiment", "--config", p(&bad)]).0, 2);
}
