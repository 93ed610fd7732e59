use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use topicvar_ffi::*;

fn cstr(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = tv_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn two_block_corpus() -> *mut TvCorpus {
    let docs: Vec<Vec<u32>> = (0..6)
        .map(|d| {
            if d % 2 == 0 {
                vec![0, 1, 0, 1, 1, 0]
            } else {
                vec![2, 3, 3, 2, 2, 3]
            }
        })
        .collect();
    let lengths: Vec<usize> = docs.iter().map(Vec::len).collect();
    let ids = docs.concat();
    let mut c = ptr::null_mut();
    let s = unsafe { tv_corpus_from_ids(4, lengths.as_ptr(), lengths.len(), ids.as_ptr(), &mut c) };
    assert_eq!(s, TvStatus::Ok);
    c
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(tv_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn corpus_round_trip_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = cstr(&dir.path().join("c.bin"));
    let c = two_block_corpus();
    unsafe {
        assert_eq!(tv_corpus_num_docs(c), 6);
        assert_eq!(tv_corpus_vocab_size(c), 4);
        assert_eq!(tv_corpus_num_tokens(c), 36);
        assert_eq!(tv_corpus_save(c, path.as_ptr()), TvStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(tv_corpus_load(path.as_ptr(), &mut back), TvStatus::Ok);
        assert_eq!(tv_corpus_num_tokens(back), 36);
        tv_corpus_free(back);
        tv_corpus_free(c);
    }
}

#[test]
fn preprocess_and_term_lookup() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("docs.txt");
    std::fs::write(&p, "river bank water\nriver water flow\nbank river money\n").unwrap();
    let path = cstr(&p);
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(tv_corpus_preprocess(path.as_ptr(), 2, &mut c), TvStatus::Ok);
        // bank, river, water reach two occurrences; sorted vocabulary
        assert_eq!(tv_corpus_vocab_size(c), 3);
        let mut buf = [0 as std::ffi::c_char; 8];
        assert_eq!(tv_corpus_term(c, 1, buf.as_mut_ptr(), buf.len()), 5);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "river");
        let mut tiny = [0 as std::ffi::c_char; 3];
        assert_eq!(tv_corpus_term(c, 1, tiny.as_mut_ptr(), tiny.len()), 5);
        assert_eq!(CStr::from_ptr(tiny.as_ptr()).to_str().unwrap(), "ri");
        assert_eq!(tv_corpus_term(c, 9, buf.as_mut_ptr(), buf.len()), -1);
        tv_corpus_free(c);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut c = ptr::null_mut();
    let missing = CString::new("/nonexistent/corpus.bin").unwrap();
    unsafe {
        assert_eq!(tv_corpus_load(missing.as_ptr(), &mut c), TvStatus::Io);
        assert!(last_error().contains("/nonexistent/corpus.bin"));
        assert!(c.is_null());
        assert_eq!(tv_corpus_load(ptr::null(), &mut c), TvStatus::NullPointer);

        let lengths = [2usize];
        let ids = [0u32, 7];
        assert_eq!(
            tv_corpus_from_ids(3, lengths.as_ptr(), 1, ids.as_ptr(), &mut c),
            TvStatus::InvalidInput
        );

        let x = [1.0, 1.0, 1.0];
        let y = [1.0, 2.0, 3.0];
        let mut r = 0.0;
        assert_eq!(tv_pearson_r(x.as_ptr(), y.as_ptr(), 3, &mut r), TvStatus::Undefined);
        assert_eq!(tv_pearson_r(y.as_ptr(), y.as_ptr(), 3, &mut r), TvStatus::Ok);
        assert!(tv_last_error_message().is_null());
        assert!((r - 1.0).abs() < 1e-12);
    }
}

#[test]
fn chain_scores_and_top_words() {
    let dir = tempfile::tempdir().unwrap();
    let phi = cstr(&dir.path().join("phi.bin"));
    let c = two_block_corpus();
    let mut cfg = tv_lda_config_default();
    assert!(cfg.alpha_auto);
    assert_eq!(
        (cfg.num_topics, cfg.total_iterations, cfg.burn_in, cfg.thin),
        (100, 2000, 1000, 10)
    );
    cfg.num_topics = 2;
    cfg.total_iterations = 200;
    cfg.burn_in = 100;
    cfg.top_n = 2;
    cfg.seed = 11;
    unsafe {
        let mut run = ptr::null_mut();
        assert_eq!(tv_run_chain(c, &cfg, phi.as_ptr(), &mut run), TvStatus::Ok);
        assert_eq!(tv_run_num_topics(run), 2);
        assert_eq!(tv_run_num_docs(run), 6);
        assert_eq!(tv_run_num_samples(run), 10);
        assert_eq!(tv_run_top_n(run), 2);

        let mut top = [0u32; 4];
        assert_eq!(tv_run_top_words(run, top.as_mut_ptr(), 4), TvStatus::Ok);
        let mut pairs = [[top[0], top[1]], [top[2], top[3]]];
        for p in &mut pairs {
            p.sort();
        }
        pairs.sort();
        assert_eq!(pairs, [[0, 1], [2, 3]]);

        let mut theta = [0.0; 12];
        assert_eq!(tv_run_theta_mean(run, theta.as_mut_ptr(), 12), TvStatus::Ok);
        for row in theta.chunks(2) {
            assert!((row[0] + row[1] - 1.0).abs() < 1e-12);
        }

        let mut scores = [0.0; 2];
        for f in [
            tv_run_variability,
            tv_run_mu_variability,
            tv_run_sigma_variability,
            tv_run_stability,
        ] {
            assert_eq!(f(run, scores.as_mut_ptr(), 2), TvStatus::Ok);
            assert!(scores.iter().all(|s| s.is_finite()));
        }
        assert_eq!(tv_run_variability(run, scores.as_mut_ptr(), 1), TvStatus::BufferLength);

        let mut bad = cfg;
        bad.burn_in = 500;
        let mut none = ptr::null_mut();
        assert_eq!(tv_run_chain(c, &bad, phi.as_ptr(), &mut none), TvStatus::InvalidConfig);

        tv_run_free(run);
        tv_corpus_free(c);
    }
}

#[test]
fn cooccurrence_scores() {
    let c = two_block_corpus();
    unsafe {
        let mut docs = ptr::null_mut();
        assert_eq!(tv_counts_new(c, 0, &mut docs), TvStatus::Ok);
        assert_eq!(tv_counts_num_units(docs), 6);
        let same = [0u32, 1];
        let across = [0u32, 2];
        let mut v = 0.0;
        assert_eq!(tv_npmi(docs, same.as_ptr(), 2, &mut v), TvStatus::Ok);
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(tv_npmi(docs, across.as_ptr(), 2, &mut v), TvStatus::Ok);
        assert_eq!(v, -1.0);
        assert_eq!(tv_pmi(docs, same.as_ptr(), 2, &mut v), TvStatus::Ok);
        assert!((v - 2f64.ln()).abs() < 1e-9);
        // ln((3 + 1) / 3)
        assert_eq!(tv_coherence(docs, same.as_ptr(), 2, &mut v), TvStatus::Ok);
        assert!((v - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        let dup = [1u32, 1];
        assert_eq!(tv_pmi(docs, dup.as_ptr(), 2, &mut v), TvStatus::InvalidInput);

        let mut win = ptr::null_mut();
        assert_eq!(tv_counts_new(c, 3, &mut win), TvStatus::Ok);
        assert_eq!(tv_coherence(win, same.as_ptr(), 2, &mut v), TvStatus::InvalidInput);
        let mut none = ptr::null_mut();
        assert_eq!(tv_counts_new(c, 1, &mut none), TvStatus::InvalidConfig);
        tv_counts_free(win);
        tv_counts_free(docs);
        tv_corpus_free(c);
    }
}

#[test]
fn svr_train_predict_save_load() {
    let n = 30;
    let rows: Vec<f64> = (0..n).flat_map(|i| [i as f64 / 10.0, ((i * 7) % 5) as f64]).collect();
    let labels: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut params = tv_svr_params_default();
    assert_eq!(params.kernel, TvKernel::Rbf);
    params.kernel = TvKernel::Linear;
    params.c = 100.0;
    params.epsilon = 0.01;
    let names = [CString::new("signal").unwrap(), CString::new("noise").unwrap()];
    let name_ptrs: Vec<_> = names.iter().map(|s| s.as_ptr()).collect();
    let dir = tempfile::tempdir().unwrap();
    let path = cstr(&dir.path().join("model.json"));
    unsafe {
        let mut m = ptr::null_mut();
        let s = tv_svr_train(
            rows.as_ptr(),
            n,
            2,
            name_ptrs.as_ptr(),
            labels.as_ptr(),
            &params,
            &mut m,
        );
        assert_eq!(s, TvStatus::Ok);
        let mut pred = vec![0.0; n];
        assert_eq!(
            tv_svr_predict(m, rows.as_ptr(), n, 2, name_ptrs.as_ptr(), pred.as_mut_ptr(), n),
            TvStatus::Ok
        );
        for (p, y) in pred.iter().zip(&labels) {
            assert!((p - y).abs() < 0.02, "{p} vs {y}");
        }
        // default names do not match the training names
        assert_eq!(
            tv_svr_predict(m, rows.as_ptr(), n, 2, ptr::null(), pred.as_mut_ptr(), n),
            TvStatus::FeatureMismatch
        );

        assert_eq!(tv_svr_save(m, path.as_ptr()), TvStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(tv_svr_load(path.as_ptr(), &mut loaded), TvStatus::Ok);
        let mut again = vec![0.0; n];
        tv_svr_predict(loaded, rows.as_ptr(), n, 2, name_ptrs.as_ptr(), again.as_mut_ptr(), n);
        assert_eq!(pred, again);
        tv_svr_free(loaded);
        tv_svr_free(m);

        std::fs::write(dir.path().join("model.json"), "{}").unwrap();
        let mut bad = ptr::null_mut();
        assert_eq!(tv_svr_load(path.as_ptr(), &mut bad), TvStatus::Format);
    }
}

#[test]
fn krippendorff_with_missing_ratings() {
    let nan = f64::NAN;
    // three raters, one missing cell, one unrated item
    let m = [
        1.0, 1.0, 2.0, //
        4.0, 4.0, 3.0, //
        2.0, nan, 2.0, //
        nan, nan, nan, //
        3.0, 3.0, 3.0,
    ];
    let mut a = 0.0;
    unsafe {
        assert_eq!(tv_krippendorff_alpha(m.as_ptr(), 5, 3, &mut a), TvStatus::Ok);
    }
    // same data without the unrated row, computed with the pairable-value formula
    let items: [&[f64]; 4] = [&[1.0, 1.0, 2.0], &[4.0, 4.0, 3.0], &[2.0, 2.0], &[3.0, 3.0, 3.0]];
    let n: f64 = items.iter().map(|v| v.len() as f64).sum();
    let mut d_o = 0.0;
    let mut all = Vec::new();
    for v in items {
        let mut s = 0.0;
        for i in 0..v.len() {
            for j in 0..v.len() {
                s += (v[i] - v[j]).powi(2);
            }
        }
        d_o += s / (v.len() as f64 - 1.0);
        all.extend_from_slice(v);
    }
    d_o /= n;
    let mut d_e = 0.0;
    for i in 0..all.len() {
        for j in 0..all.len() {
            d_e += (all[i] - all[j]).powi(2);
        }
    }
    d_e /= n * (n - 1.0);
    assert!((a - (1.0 - d_o / d_e)).abs() < 1e-12);

    let out_of_range = [1.0, 5.0];
    unsafe {
        assert_eq!(
            tv_krippendorff_alpha(out_of_range.as_ptr(), 1, 2, &mut a),
            TvStatus::InvalidInput
        );
    }
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn have_cc() -> bool {
    Command::new("cc")
        .arg("--version")
        .output()
        .is_ok_and(|o| o.status.success())
}

#[test]
fn header_compiles_as_c_and_cpp() {
    if !have_cc() {
        eprintln!("cc not found, skipping");
        return;
    }
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    for lang in ["c", "c++"] {
        let out = Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-I"])
            .arg(&include)
            .arg(include.join("topicvar.h"))
            .output()
            .unwrap();
        assert!(out.status.success(), "{lang}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn c_program_links_against_static_library() {
    if !have_cc() {
        eprintln!("cc not found, skipping");
        return;
    }
    let lib = target_dir().join("libtopicvar_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, skipping", lib.display());
        return;
    }
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).arg(dir.path().join("phi.bin")).output().unwrap();
    assert!(
        run.status.success(),
        "exit {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
