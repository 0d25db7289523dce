//! JSON and CSV serialization.
//!
//! The matrix schema is used library-wide: `{"rows": r, "cols": c,
//! "data": [[re, im], ...]}` in row-major order. Floating-point fields
//! round-trip bit-exactly through JSON (shortest-representation
//! printing); CSV output is fixed at 12 significant digits, which is
//! beyond every test tolerance while keeping diffs stable.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freeops::{KrausFlags, KrausSet, KrausSpace};
use crate::matops::{zeros, CMat};
use crate::measures::MeasureReport;
use crate::naimark::NaimarkExt;
use crate::quantum::{validate_povm, DensityMatrix, Povm};
use crate::search::{ScatterRow, SweepTable};

/// Row-major dense complex matrix, one `[re, im]` pair per entry.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

pub fn matrix_to_json(m: &CMat) -> MatrixJson {
    let mut data = Vec::with_capacity(m.nrows() * m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            data.push([m[(r, c)].re, m[(r, c)].im]);
        }
    }
    MatrixJson {
        rows: m.nrows(),
        cols: m.ncols(),
        data,
    }
}

pub fn matrix_from_json(js: &MatrixJson) -> Result<CMat> {
    if js.data.len() != js.rows * js.cols {
        return Err(Error::Parse(format!(
            "matrix data has {} entries for shape {}x{}",
            js.data.len(),
            js.rows,
            js.cols
        )));
    }
    let mut m = zeros(js.rows, js.cols);
    for r in 0..js.rows {
        for c in 0..js.cols {
            let [re, im] = js.data[r * js.cols + c];
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::Parse(format!(
                    "non-finite matrix entry at ({}, {})",
                    r, c
                )));
            }
            m[(r, c)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}

/// `{"dim": d, "rho": matrixJSON}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateJson {
    pub dim: usize,
    pub rho: MatrixJson,
}

pub fn state_to_json(rho: &DensityMatrix) -> StateJson {
    StateJson {
        dim: rho.dim(),
        rho: matrix_to_json(rho.mat()),
    }
}

pub fn state_from_json(js: &StateJson) -> Result<DensityMatrix> {
    let m = matrix_from_json(&js.rho)?;
    if m.nrows() != js.dim {
        return Err(Error::Parse(format!(
            "state dim field {} does not match matrix shape {}",
            js.dim,
            m.nrows()
        )));
    }
    DensityMatrix::new(m)
}

/// `{"dim": d, "effects": [matrixJSON, ...], "labels": optional}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmJson {
    pub dim: usize,
    pub effects: Vec<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

pub fn povm_to_json(povm: &Povm) -> PovmJson {
    PovmJson {
        dim: povm.dim(),
        effects: povm.effects().iter().map(matrix_to_json).collect(),
        labels: None,
    }
}

pub fn povm_from_json(js: &PovmJson) -> Result<Povm> {
    if let Some(labels) = &js.labels {
        if labels.len() != js.effects.len() {
            return Err(Error::Parse(format!(
                "{} labels for {} effects",
                labels.len(),
                js.effects.len()
            )));
        }
    }
    let effects = js
        .effects
        .iter()
        .map(matrix_from_json)
        .collect::<Result<Vec<_>>>()?;
    if let Some(first) = effects.first() {
        if first.nrows() != js.dim {
            return Err(Error::Parse(format!(
                "POVM dim field {} does not match effect shape {}",
                js.dim,
                first.nrows()
            )));
        }
    }
    validate_povm(effects)
}

/// `{"d": …, "n": …, "d_prime": …, "W": matrixJSON, "projectors": […]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtensionJson {
    pub d: usize,
    pub n: usize,
    pub d_prime: usize,
    #[serde(rename = "W")]
    pub w: MatrixJson,
    pub projectors: Vec<MatrixJson>,
}

pub fn extension_to_json(ext: &NaimarkExt) -> ExtensionJson {
    ExtensionJson {
        d: ext.d(),
        n: ext.n(),
        d_prime: ext.d_prime(),
        w: matrix_to_json(ext.w()),
        projectors: ext.projectors().iter().map(matrix_to_json).collect(),
    }
}

pub fn extension_from_json(js: &ExtensionJson) -> Result<NaimarkExt> {
    if js.projectors.len() != js.n {
        return Err(Error::Parse(format!(
            "extension n field {} does not match {} projectors",
            js.n,
            js.projectors.len()
        )));
    }
    let w = matrix_from_json(&js.w)?;
    if w.nrows() != js.d_prime || w.ncols() != js.d {
        return Err(Error::Parse(format!(
            "extension W is {}x{}, fields say {}x{}",
            w.nrows(),
            w.ncols(),
            js.d_prime,
            js.d
        )));
    }
    let projectors = js
        .projectors
        .iter()
        .map(matrix_from_json)
        .collect::<Result<Vec<_>>>()?;
    NaimarkExt::from_parts(js.d, w, projectors)
}

/// `{"space": "original|dilated", "ops": [matrixJSON…], "flags": {…}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrausSetJson {
    pub space: String,
    pub ops: Vec<MatrixJson>,
    pub flags: KrausFlagsJson,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KrausFlagsJson {
    pub complete: bool,
    pub block_incoherent: bool,
    pub subspace_preserving: bool,
    pub strictly: bool,
}

impl From<KrausFlags> for KrausFlagsJson {
    fn from(f: KrausFlags) -> Self {
        KrausFlagsJson {
            complete: f.complete,
            block_incoherent: f.block_incoherent,
            subspace_preserving: f.subspace_preserving,
            strictly: f.strictly,
        }
    }
}

pub fn kraus_set_to_json(ks: &KrausSet) -> KrausSetJson {
    KrausSetJson {
        space: match ks.space {
            KrausSpace::Original(_) => "original".into(),
            KrausSpace::Dilated(_) => "dilated".into(),
        },
        ops: ks.ops.iter().map(matrix_to_json).collect(),
        flags: ks.flags.into(),
    }
}

/// Reconstructs a Kraus set on a caller-supplied space. The parsed flags
/// are treated as claims and returned separately: flags on the live set
/// stay cleared until the corresponding checkers have re-run, matching
/// the validation discipline of [`crate::freeops`].
pub fn kraus_set_from_json(
    js: &KrausSetJson,
    space: KrausSpace,
) -> Result<(KrausSet, KrausFlagsJson)> {
    let expected = match space {
        KrausSpace::Original(_) => "original",
        KrausSpace::Dilated(_) => "dilated",
    };
    if js.space != expected {
        return Err(Error::Parse(format!(
            "Kraus space tag '{}' does not match supplied '{}' space",
            js.space, expected
        )));
    }
    let ops = js
        .ops
        .iter()
        .map(matrix_from_json)
        .collect::<Result<Vec<_>>>()?;
    Ok((KrausSet::new(ops, space)?, js.flags))
}

/// `{"name": …, "value": …, "extension": …, "certificate_gap": …}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureReportJson {
    pub name: String,
    pub value: f64,
    pub extension: Option<String>,
    pub certificate_gap: Option<f64>,
}

pub fn measure_report_to_json(report: &MeasureReport) -> MeasureReportJson {
    MeasureReportJson {
        name: report.name.clone(),
        value: report.value,
        extension: report.extension_used.clone(),
        certificate_gap: report.certificate_gap,
    }
}

/// `{"rate": …, "c_rel": …, "difference": …}` for the randomness command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomnessJson {
    pub rate: f64,
    pub c_rel: f64,
    pub difference: f64,
}

/// Formats with a fixed number of significant digits (CSV contract: 12).
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (sig as i32 - 1 - exp).clamp(0, 17) as usize;
    format!("{:.*}", decimals, x)
}

const CSV_SIG_DIGITS: usize = 12;

/// CSV for δ-sweeps: `delta,<states…>,min,max`; extreme cells stay empty
/// when the sweep was run without them.
pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = String::from("delta");
    for name in &table.states {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",min,max\n");
    for row in &table.rows {
        out.push_str(&fmt_sig(row.delta, CSV_SIG_DIGITS));
        for v in &row.values {
            out.push(',');
            out.push_str(&fmt_sig(*v, CSV_SIG_DIGITS));
        }
        out.push(',');
        if let Some(lo) = row.min {
            out.push_str(&fmt_sig(lo, CSV_SIG_DIGITS));
        }
        out.push(',');
        if let Some(hi) = row.max {
            out.push_str(&fmt_sig(hi, CSV_SIG_DIGITS));
        }
        out.push('\n');
    }
    out
}

/// CSV for scatter samples: `kind,c_rob,c_rel,c_l1`.
pub fn scatter_csv(rows: &[ScatterRow]) -> String {
    let mut out = String::from("kind,c_rob,c_rel,c_l1\n");
    for row in rows {
        out.push_str(&row.kind);
        out.push(',');
        out.push_str(&fmt_sig(row.c_rob, CSV_SIG_DIGITS));
        out.push(',');
        out.push_str(&fmt_sig(row.c_rel, CSV_SIG_DIGITS));
        out.push(',');
        out.push_str(&fmt_sig(row.c_l1, CSV_SIG_DIGITS));
        out.push('\n');
    }
    out
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))
}

pub fn from_json_str<'a, T: Deserialize<'a>>(s: &'a str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
}

fn read_file(path: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {}", path, e)))
}

/// Resolves a POVM from a built-in name (`z-basis`, `trine`,
/// `edelta:<float>`) or a JSON file path.
pub fn resolve_povm(spec: &str) -> Result<Povm> {
    match Povm::by_name(spec) {
        Ok(povm) => Ok(povm),
        Err(Error::UnknownName(_)) if Path::new(spec).exists() => {
            let js: PovmJson = from_json_str(&read_file(spec)?)?;
            povm_from_json(&js)
        }
        Err(Error::UnknownName(name)) => Err(Error::UnknownName(format!(
            "{} (and no such file exists)",
            name
        ))),
        Err(e) => Err(e),
    }
}

/// Resolves a state from a built-in name (`psi_x`, `psi_y`, `psi_z`,
/// `mixed`) or a JSON file path.
pub fn resolve_state(spec: &str) -> Result<DensityMatrix> {
    match DensityMatrix::by_name(spec) {
        Ok(rho) => Ok(rho),
        Err(Error::UnknownName(_)) if Path::new(spec).exists() => {
            let js: StateJson = from_json_str(&read_file(spec)?)?;
            state_from_json(&js)
        }
        Err(Error::UnknownName(name)) => Err(Error::UnknownName(format!(
            "{} (and no such file exists)",
            name
        ))),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::frob_dist;
    use crate::naimark::canonical_extension;
    use crate::quantum::{edelta, ginibre, hs_mixed};
    use crate::search::{delta_sweep, SweepRow};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn bits_equal(a: &CMat, b: &CMat) -> bool {
        a.nrows() == b.nrows()
            && a.ncols() == b.ncols()
            && a.iter().zip(b.iter()).all(|(x, y)| {
                x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
            })
    }

    #[test]
    fn matrix_json_round_trip_is_bit_exact() {
        let mut rng = ChaCha12Rng::seed_from_u64(91);
        let mut m = ginibre(&mut rng, 5, 3);
        // Awkward values: repeating fractions, subnormals, negative zero.
        m[(0, 0)] = Complex64::new(0.1, 1.0 / 3.0);
        m[(1, 2)] = Complex64::new(5e-324, -0.0);
        m[(2, 1)] = Complex64::new(1.0 + f64::EPSILON, -1e300);
        let text = to_json_string(&matrix_to_json(&m)).unwrap();
        let back = matrix_from_json(&from_json_str(&text).unwrap()).unwrap();
        assert!(bits_equal(&m, &back));
    }

    #[test]
    fn matrix_json_rejects_malformed_input() {
        let short = MatrixJson {
            rows: 2,
            cols: 2,
            data: vec![[1.0, 0.0]; 3],
        };
        assert!(matches!(matrix_from_json(&short), Err(Error::Parse(_))));
        assert!(matches!(
            from_json_str::<MatrixJson>("{\"rows\": 1,"),
            Err(Error::Parse(_))
        ));
        // JSON null (how non-finite floats appear) is not a valid entry.
        assert!(matches!(
            from_json_str::<MatrixJson>("{\"rows\":1,\"cols\":1,\"data\":[[null,0.0]]}"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn state_and_povm_json_round_trip() {
        let mut rng = ChaCha12Rng::seed_from_u64(92);
        let rho = hs_mixed(&mut rng, 3);
        let text = to_json_string(&state_to_json(&rho)).unwrap();
        let back = state_from_json(&from_json_str(&text).unwrap()).unwrap();
        assert!(bits_equal(rho.mat(), back.mat()));

        let povm = edelta(0.7).unwrap();
        let text = to_json_string(&povm_to_json(&povm)).unwrap();
        let back = povm_from_json(&from_json_str(&text).unwrap()).unwrap();
        assert_eq!(back.n_outcomes(), povm.n_outcomes());
        for (a, b) in povm.effects().iter().zip(back.effects()) {
            assert!(bits_equal(a, b));
        }
    }

    #[test]
    fn invalid_payloads_fail_validation() {
        // A POVM whose effects do not sum to the identity.
        let half = matrix_to_json(&(crate::matops::eye(2).unscale(2.0)));
        let js = PovmJson {
            dim: 2,
            effects: vec![half.clone(), half.clone(), half],
            labels: None,
        };
        assert!(povm_from_json(&js).is_err());
        // A state with negative eigenvalues.
        let mut bad = crate::matops::eye(2);
        bad[(0, 0)] = Complex64::new(1.5, 0.0);
        bad[(1, 1)] = Complex64::new(-0.5, 0.0);
        let js = StateJson {
            dim: 2,
            rho: matrix_to_json(&bad),
        };
        assert!(matches!(state_from_json(&js), Err(Error::NotPsd(_))));
        // Mismatched dim field.
        let js = StateJson {
            dim: 3,
            rho: matrix_to_json(DensityMatrix::maximally_mixed(2).mat()),
        };
        assert!(matches!(state_from_json(&js), Err(Error::Parse(_))));
    }

    #[test]
    fn extension_json_round_trip_and_consistency_checks() {
        let ext = canonical_extension(&edelta(1.0).unwrap());
        let text = to_json_string(&extension_to_json(&ext)).unwrap();
        let js: ExtensionJson = from_json_str(&text).unwrap();
        let back = extension_from_json(&js).unwrap();
        assert!(bits_equal(ext.w(), back.w()));
        for (a, b) in ext.projectors().iter().zip(back.projectors()) {
            assert!(bits_equal(a, b));
        }
        // The serialized key for the isometry is a capital W.
        assert!(text.contains("\"W\""));

        let mut tampered = extension_to_json(&ext);
        tampered.d_prime += 1;
        assert!(matches!(
            extension_from_json(&tampered),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn kraus_set_json_round_trip_keeps_claims_separate() {
        let ext = canonical_extension(&edelta(1.0).unwrap());
        let mut ks = KrausSet::new(
            vec![crate::matops::eye(ext.d_prime())],
            KrausSpace::Dilated(ext.clone()),
        )
        .unwrap();
        ks.mark_complete().unwrap();
        let js = kraus_set_to_json(&ks);
        assert_eq!(js.space, "dilated");
        let (back, claims) = kraus_set_from_json(&js, KrausSpace::Dilated(ext)).unwrap();
        assert!(claims.complete);
        // Parsed sets start unvalidated regardless of the claims.
        assert!(!back.flags.complete);
        assert!(bits_equal(&ks.ops[0], &back.ops[0]));
        assert!(matches!(
            kraus_set_from_json(&js, KrausSpace::Original(6)),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn report_json_has_the_contract_keys() {
        let povm = edelta(1.0).unwrap();
        let report = crate::measures::c_rob_povm(
            &DensityMatrix::psi_z(),
            &povm,
            crate::measures::RobForm::Both,
        )
        .unwrap();
        let text = to_json_string(&measure_report_to_json(&report)).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let mut keys: Vec<&str> =
            value.as_object().unwrap().keys().map(|s| s.as_str()).collect();
        keys.sort_unstable();
        assert_eq!(keys, vec!["certificate_gap", "extension", "name", "value"]);

        let rj = RandomnessJson {
            rate: 0.5,
            c_rel: 0.5,
            difference: 0.0,
        };
        let value: serde_json::Value =
            serde_json::from_str(&to_json_string(&rj).unwrap()).unwrap();
        let mut keys: Vec<&str> =
            value.as_object().unwrap().keys().map(|s| s.as_str()).collect();
        keys.sort_unstable();
        assert_eq!(keys, vec!["c_rel", "difference", "rate"]);
    }

    #[test]
    fn csv_formatting_matches_the_contract() {
        assert_eq!(fmt_sig(0.5849625007211562, 12), "0.584962500721");
        assert_eq!(fmt_sig(1.584962500721156, 12), "1.58496250072");
        assert_eq!(fmt_sig(0.0, 12), "0");
        assert_eq!(fmt_sig(-0.25, 12), "-0.250000000000");

        let table = SweepTable {
            states: vec![
                "psi_x".into(),
                "psi_y".into(),
                "psi_z".into(),
                "mixed".into(),
            ],
            rows: vec![SweepRow {
                delta: 0.5,
                values: vec![1.0, 0.25, 0.75, 0.5],
                min: None,
                max: None,
            }],
        };
        let csv = sweep_csv(&table);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "delta,psi_x,psi_y,psi_z,mixed,min,max");
        let row = lines.next().unwrap();
        assert!(row.starts_with("0.500000000000,1.00000000000,"));
        assert!(row.ends_with(",,"), "row {}", row);

        let rows = vec![ScatterRow {
            kind: "pure".into(),
            c_rob: 1.0,
            c_rel: 0.5,
            c_l1: 1.0,
        }];
        let csv = scatter_csv(&rows);
        assert!(csv.starts_with("kind,c_rob,c_rel,c_l1\n"));
        assert!(csv.contains("pure,1.00000000000,0.500000000000,1.00000000000"));
    }

    #[test]
    fn sweep_csv_satisfies_the_contract_on_real_data() {
        let table = delta_sweep(&[0.0, 1.0], &["psi_x", "psi_y", "psi_z", "mixed"], false, 4, 93)
            .unwrap();
        let csv = sweep_csv(&table);
        assert!(csv.starts_with("delta,psi_x,psi_y,psi_z,mixed,min,max\n"));
        // δ=0 row: the values reduce to Y-basis coherence.
        let row0: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row0[0], "0");
        assert!((row0[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-8);
        assert!(row0[2].parse::<f64>().unwrap() < 1e-8);
    }

    #[test]
    fn resolve_accepts_names_and_paths() {
        assert_eq!(resolve_povm("trine").unwrap().n_outcomes(), 3);
        assert_eq!(resolve_state("psi_y").unwrap().dim(), 2);

        let dir = std::env::temp_dir();
        let povm_path = dir.join("povm_io_test.json");
        let state_path = dir.join("state_io_test.json");
        std::fs::write(
            &povm_path,
            to_json_string(&povm_to_json(&edelta(0.3).unwrap())).unwrap(),
        )
        .unwrap();
        std::fs::write(
            &state_path,
            to_json_string(&state_to_json(&DensityMatrix::psi_x())).unwrap(),
        )
        .unwrap();
        let povm = resolve_povm(povm_path.to_str().unwrap()).unwrap();
        assert_eq!(povm.n_outcomes(), 3);
        let rho = resolve_state(state_path.to_str().unwrap()).unwrap();
        assert!(frob_dist(rho.mat(), DensityMatrix::psi_x().mat()) < 1e-15);
        std::fs::remove_file(&povm_path).ok();
        std::fs::remove_file(&state_path).ok();

        assert!(matches!(
            resolve_povm("no-such-thing"),
            Err(Error::UnknownName(_))
        ));
    }
}
