//! Resumable leave-one-out kNN grid over a manifest.

use std::collections::BTreeSet;
use std::path::Path;

use lpdim_core::dataset::{load_csv, preprocess};
use lpdim_core::knn::loo_evaluate;
use lpdim_core::{DatasetManifest, KnnConfig, LpExponent, PreprocessMode, QualityRecord};

use crate::error::{io_error, CliError};
use crate::output::{json_bytes, write_atomic};
use crate::Failures;

pub fn read_records(path: &Path) -> Result<Vec<QualityRecord>, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Key of one grid cell. `p` is keyed by its bit pattern.
fn cell(r: &QualityRecord) -> (String, PreprocessMode, u64) {
    (r.dataset.clone(), r.preprocessing, r.p.value().to_bits())
}

/// Evaluates every missing (dataset, mode, p) cell and rewrites `out` after
/// each dataset. Records for datasets in the manifest come first, in
/// manifest, mode and exponent order; any other records already in `out`
/// are kept after them in their previous order.
pub fn run(
    manifest: &Path,
    out: &Path,
    k: usize,
    ps: &[LpExponent],
    modes: &[PreprocessMode],
) -> Result<Failures, CliError> {
    let manifests = DatasetManifest::load_all(manifest)?;
    let names: BTreeSet<&str> = manifests.iter().map(|m| m.name.as_str()).collect();
    if names.len() != manifests.len() {
        return Err(CliError::Usage(
            "manifest has duplicate dataset names".into(),
        ));
    }
    let existing = if out.exists() {
        read_records(out)?
    } else {
        Vec::new()
    };
    let mut done: Vec<QualityRecord> = Vec::new();
    let mut failed = 0;

    for m in &manifests {
        let mut mine: Vec<QualityRecord> = existing
            .iter()
            .filter(|r| r.dataset == m.name)
            .cloned()
            .collect();
        let have: BTreeSet<_> = mine.iter().map(cell).collect();
        let missing = modes.iter().any(|&mode| {
            ps.iter()
                .any(|p| !have.contains(&(m.name.clone(), mode, p.value().to_bits())))
        });
        if missing {
            match evaluate_missing(m, k, ps, modes, &have) {
                Ok(new) => mine.extend(new),
                Err(e) => {
                    eprintln!("lpdim knn-eval: {}: {e}", m.name);
                    failed += 1;
                }
            }
        }
        mine.sort_by_key(|r| {
            let mi = modes
                .iter()
                .position(|&x| x == r.preprocessing)
                .unwrap_or(usize::MAX);
            let pi = ps.iter().position(|&x| x == r.p).unwrap_or(usize::MAX);
            (mi, pi)
        });
        done.extend(mine);
        let mut all = done.clone();
        all.extend(
            existing
                .iter()
                .filter(|r| !names.contains(r.dataset.as_str()))
                .cloned(),
        );
        write_atomic(out, &json_bytes(&all)?)?;
    }
    Ok(failed)
}

fn evaluate_missing(
    m: &DatasetManifest,
    k: usize,
    ps: &[LpExponent],
    modes: &[PreprocessMode],
    have: &BTreeSet<(String, PreprocessMode, u64)>,
) -> Result<Vec<QualityRecord>, lpdim_core::Error> {
    let ds = load_csv(m)?;
    let mut out = Vec::new();
    for &mode in modes {
        let prepared = preprocess(&ds, mode);
        for &p in ps {
            if have.contains(&(m.name.clone(), mode, p.value().to_bits())) {
                continue;
            }
            let mut r = loo_evaluate(&prepared, &KnnConfig::new(k, p))?;
            r.preprocessing = mode;
            out.push(r);
        }
    }
    Ok(out)
}
