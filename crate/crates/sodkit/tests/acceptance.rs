//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line even when all of them pass; the
//! process exits nonzero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use sodkit::image::{decode_netpbm, encode_netpbm, read_image, write_image};
use sodkit::tensor_file::{decode, encode, read_tensor, write_tensor};
use sodkit_core::model::{ModalityInputs, Model, ModelConfig};
use sodkit_core::selftest::{self, Options};
use sodkit_core::tensor::Prng;
use sodkit_core::Tensor;

const SODKIT: &str = env!("CARGO_BIN_EXE_sodkit");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn core_criterion(id: u8) -> Outcome {
    let r = selftest::run_one(id, Options::default());
    outcome(r.pass, r.detail)
}

fn in_open_unit(t: &Tensor) -> bool {
    t.data().iter().all(|&v| v > 0.0 && v < 1.0)
}

fn pipeline_shape_contract() -> Outcome {
    let config = ModelConfig::default();
    let model = match Model::new(config) {
        Ok(m) => m,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut prng = Prng::new(10);
    let rgb = Tensor::from_fn(&[1, 3, 384, 384], |_| prng.next_f64() as f32);
    let start = Instant::now();
    let out = match model.forward(&ModalityInputs::rgb_only(rgb)) {
        Ok(o) => o,
        Err(e) => return outcome(false, e.to_string()),
    };
    let elapsed = start.elapsed();
    let sides = |ts: [&Tensor; 3]| ts.map(|t| t.dims().to_vec());
    let s = sides(out.saliency.as_array());
    let m = sides(out.masks.as_array());
    let shapes_ok = s == [[1, 1, 24, 24], [1, 1, 48, 48], [1, 1, 96, 96]].map(|d| d.to_vec())
        && m == [[1, 1, 96, 96], [1, 1, 192, 192], [1, 1, 384, 384]].map(|d| d.to_vec());
    let range_ok = out
        .saliency
        .as_array()
        .into_iter()
        .chain(out.masks.as_array())
        .all(in_open_unit);
    outcome(
        shapes_ok && range_ok && elapsed < Duration::from_secs(60),
        format!(
            "S {:?}/{:?}/{:?}, M {:?}/{:?}/{:?}, values in (0,1): {range_ok}, forward {:.1}s",
            s[0][2],
            s[1][2],
            s[2][2],
            m[0][2],
            m[1][2],
            m[2][2],
            elapsed.as_secs_f64()
        ),
    )
}

fn run_forward(dir: &Path, tag: &str, input: &Path, config: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let out = dir.join(format!("{tag}.pgm"));
    let dump = dir.join(format!("{tag}_dump"));
    let run = Command::new(SODKIT)
        .args(["forward", "--seed", "17", "--input"])
        .arg(input)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(&out)
        .arg("--dump")
        .arg(&dump)
        .output()
        .map_err(|e| e.to_string())?;
    if !run.status.success() {
        return Err(format!(
            "sodkit forward exited with {}: {}",
            run.status,
            String::from_utf8_lossy(&run.stderr)
        ));
    }
    let mut files = vec![("mask".to_string(), fs::read(&out).map_err(|e| e.to_string())?)];
    let mut names: Vec<_> = fs::read_dir(&dump)
        .map_err(|e| e.to_string())?
        .flatten()
        .map(|e| e.path())
        .collect();
    names.sort();
    for p in names {
        files.push((
            p.file_name().unwrap().to_string_lossy().into_owned(),
            fs::read(&p).map_err(|e| e.to_string())?,
        ));
    }
    Ok(files)
}

fn determinism() -> Result<Outcome, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut prng = Prng::new(11);
    let input = dir.path().join("input.ppm");
    write_image(&input, &Tensor::from_fn(&[1, 3, 96, 80], |_| prng.next_f64() as f32)).map_err(|e| e.to_string())?;
    let config = dir.path().join("run.toml");
    fs::write(&config, "input_size = [128, 128]\nd = 32\n").map_err(|e| e.to_string())?;
    let a = run_forward(dir.path(), "a", &input, &config)?;
    let b = run_forward(dir.path(), "b", &input, &config)?;
    let identical = a == b && a.len() == 7;

    // tensor files, including values whose bit patterns are easy to lose
    let mut tensor_ok = true;
    for i in 0..50 {
        let dims: Vec<usize> = (0..1 + i % 4).map(|_| 1 + prng.below(6)).collect();
        let mut t = Tensor::from_fn(&dims, |_| f32::from_bits(prng.next_u64() as u32));
        t.data_mut()[0] = [-0.0, f32::MIN_POSITIVE / 8.0, f32::INFINITY, 1.0][i % 4];
        let bytes = encode(&t);
        tensor_ok &= decode(&bytes).is_ok_and(|u| {
            u.dims() == t.dims() && u.data().iter().zip(t.data()).all(|(a, b)| a.to_bits() == b.to_bits())
        }) && decode(&bytes).map(|u| encode(&u) == bytes).unwrap_or(false);
    }
    let path = dir.path().join("t.dupt");
    let t = Tensor::from_fn(&[2, 3, 4], |i| i as f32 * 0.1 - 1.0);
    write_tensor(&path, &t).map_err(|e| e.to_string())?;
    tensor_ok &= read_tensor(&path).map(|u| u == t).unwrap_or(false);

    // images: decode/encode reproduces canonical files byte for byte, and
    // read-write-read reproduces the first read
    let mut image_ok = true;
    for i in 0..50 {
        let (c, h, w) = (if i % 2 == 0 { 1 } else { 3 }, 1 + prng.below(20), 1 + prng.below(20));
        let mut bytes = format!("P{}\n{w} {h}\n255\n", if c == 1 { 5 } else { 6 }).into_bytes();
        bytes.extend((0..c * h * w).map(|_| prng.below(256) as u8));
        let t = decode_netpbm(&bytes).map_err(|e| e.to_string())?;
        image_ok &= encode_netpbm(&t).map_err(|e| e.to_string())? == bytes;
        let p = dir.path().join(format!("img{i}.pnm"));
        write_image(&p, &t).map_err(|e| e.to_string())?;
        let again = read_image(&p).map_err(|e| e.to_string())?;
        image_ok &= again
            .data()
            .iter()
            .zip(t.data())
            .all(|(a, b)| a.to_bits() == b.to_bits());
    }
    Ok(outcome(
        identical && tensor_ok && image_ok,
        format!("two forward runs byte-identical over {} files: {identical}; tensor round trip: {tensor_ok}; image round trip: {image_ok}", a.len()),
    ))
}

fn selftest_command() -> Outcome {
    let start = Instant::now();
    let out = match Command::new(SODKIT).arg("selftest").output() {
        Ok(o) => o,
        Err(e) => return outcome(false, e.to_string()),
    };
    let elapsed = start.elapsed();
    let stdout = String::from_utf8_lossy(&out.stdout);
    let rows = stdout
        .lines()
        .filter(|l| l.contains(" PASS ") || l.contains(" FAIL "))
        .count();
    let code = out.status.code();
    outcome(
        code == Some(0) && rows == 9 && elapsed < Duration::from_secs(60),
        format!("exit {code:?}, {rows} criteria reported, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn main() {
    let names = [
        "graph oracle",
        "normalization identity",
        "residual identity",
        "gate bound",
        "attention stochasticity",
        "modality gating",
        "loss values",
        "gradient checks",
        "metric oracles",
        "pipeline shape contract",
        "determinism",
        "selftest command",
    ];
    let mut failed = 0;
    for (i, name) in names.iter().enumerate() {
        let id = i as u8 + 1;
        let start = Instant::now();
        let o = match id {
            1..=9 => core_criterion(id),
            10 => pipeline_shape_contract(),
            11 => determinism().unwrap_or_else(|e| outcome(false, e)),
            _ => selftest_command(),
        };
        failed += !o.pass as usize;
        println!(
            "criterion {id:>2} {:<24} {} ({:.2}s)  {}",
            name,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {}/{} criteria passed", names.len() - failed, names.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
