use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use transtech::annotate::annotate_corpus;
use transtech::corpus::to_json_line;
use transtech::demo::{demo_resources, generate_records};
use transtech::encode::{FeatureConfig, Featurizer};
use transtech::model::{save_checkpoint, train_model, Architecture, ArchitectureSpec, Datasets, ModelKind, TrainConfig};
use transtech::synthesize::{build_pe_dataset, SynthesisConfig};
use transtech_ffi::*;

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = tt_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    tt_string_free(p);
    s
}

#[test]
fn scalar_functions() {
    let mut out = 0.0;
    unsafe {
        assert_eq!(tt_f1(2, 1, 1, &mut out), TtStatus::Ok);
        assert_eq!(out, 2.0 / 3.0);
        assert_eq!(tt_f1(0, 0, 0, &mut out), TtStatus::Ok);
        assert_eq!(out, 0.0);
        let (u, v) = ([1.0, 0.0], [1.0, 1.0]);
        assert_eq!(tt_cosine(u.as_ptr(), v.as_ptr(), 2, &mut out), TtStatus::Ok);
        assert!((out - 0.5f64.sqrt()).abs() < 1e-12);
        let z = [0.0, 0.0];
        assert_eq!(tt_cosine(u.as_ptr(), z.as_ptr(), 2, &mut out), TtStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        assert_eq!(tt_multitask_loss(1.0, 2.0, 0.8, 0.2, &mut out), TtStatus::Ok);
        assert!((out - 1.2).abs() < 1e-15);
        assert_eq!(tt_multitask_loss(1.0, 2.0, 0.9, 0.2, &mut out), TtStatus::InvalidArgument);
        assert_eq!(tt_f1(1, 1, 1, ptr::null_mut()), TtStatus::NullPointer);
        assert!(tt_last_error().is_null() || !last_error().is_empty());
        assert_eq!(tt_f1(1, 1, 1, &mut out), TtStatus::Ok);
        assert!(tt_last_error().is_null(), "success clears the error");
    }
    let v = unsafe { CStr::from_ptr(tt_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn rule_classification() {
    let dir = c(data().join("demo/resources").to_str().unwrap());
    let mut res = ptr::null_mut();
    unsafe {
        assert_eq!(tt_resources_load(dir.as_ptr(), &mut res), TtStatus::Ok);
        for r in generate_records(40, 1) {
            let json = c(&to_json_line(&r));
            let mut label = ptr::null_mut();
            assert_eq!(tt_classify(res, json.as_ptr(), &mut label), TtStatus::Ok, "{}", last_error());
            assert_eq!(take(label), r.technique.unwrap().to_string());
        }
        let mut label = ptr::null_mut();
        assert_eq!(tt_classify(res, c("{not json").as_ptr(), &mut label), TtStatus::Parse);
        assert_eq!(tt_classify(ptr::null(), c("{}").as_ptr(), &mut label), TtStatus::NullPointer);
        tt_resources_free(res);
        tt_resources_free(ptr::null_mut());

        let mut res = ptr::null_mut();
        assert_eq!(tt_resources_load(c("/nonexistent").as_ptr(), &mut res), TtStatus::Io);
        assert!(last_error().contains("nonexistent"));
    }
}

#[test]
fn model_round_trip() {
    let res = demo_resources();
    let (labeled, _) = annotate_corpus(&generate_records(300, 2), &res);
    let (dataset, _) = build_pe_dataset(&labeled, &res, None, &SynthesisConfig::default()).unwrap();
    let featurizer = Featurizer::new(&res, FeatureConfig { hash_dim: 256, ..Default::default() });
    let cfg = TrainConfig { max_epochs: 5, hidden: 8, seed: 4, ..Default::default() };
    let datasets = Datasets { train: &dataset, dev: &[] };
    let model = train_model(&ArchitectureSpec::new(Architecture::A4), ModelKind::A4, &datasets, &featurizer, &cfg).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let ckpt = tmp.path().join("A4.ckpt");
    save_checkpoint(&model, &ckpt).unwrap();

    let expected = transtech::model::predict(&model, &dataset[0], &featurizer).unwrap();
    let (ckpt, dir) = (c(ckpt.to_str().unwrap()), c(data().join("demo/resources").to_str().unwrap()));
    let mut handle = ptr::null_mut();
    unsafe {
        assert_eq!(tt_model_load(ckpt.as_ptr(), dir.as_ptr(), ptr::null(), &mut handle), TtStatus::Ok, "{}", last_error());
        let json = c(&to_json_line(&dataset[0]));
        let (mut label, mut p) = (ptr::null_mut(), 0.0);
        assert_eq!(tt_model_predict(handle, json.as_ptr(), &mut label, &mut p), TtStatus::Ok, "{}", last_error());
        assert_eq!(take(label), expected.label);
        assert_eq!(p, expected.probabilities[expected.index]);
        tt_model_free(handle);

        let bogus = tmp.path().join("bogus.ckpt");
        std::fs::write(&bogus, b"not a checkpoint").unwrap();
        let bogus = c(bogus.to_str().unwrap());
        assert_eq!(tt_model_load(bogus.as_ptr(), dir.as_ptr(), ptr::null(), &mut handle), TtStatus::Checkpoint);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/transtech.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["tt_last_error", "tt_string_free", "tt_classify", "tt_model_predict", "tt_f1", "tt_cosine", "tt_multitask_loss"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(&src, "#include \"transtech.h\"\nint main(void) { double x; return tt_f1(1, 0, 0, &x) == TT_STATUS_OK ? 0 : 1; }\n").unwrap();
    let Ok(out) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
