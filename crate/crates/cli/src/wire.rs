//! JSON files for the typed objects. Every file carries a `kind` tag.

use std::fs;
use std::path::Path;

use nlab_core::dilation::{CouplingModel, NaimarkDilation};
use nlab_core::instruments::InstrumentOutput;
use nlab_core::matkernel::{c, ComplexMatrix, C64};
use nlab_core::qobjects::{DensityMatrix, KrausCorrectionFamily, Povm, Pvm};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PovmJson {
    pub effects: Vec<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchJson {
    pub label: String,
    pub probability: f64,
    /// Normalized post-measurement state; absent for zero-probability branches.
    pub state: Option<ComplexMatrix>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WireObject {
    Density {
        matrix: ComplexMatrix,
    },
    Povm(PovmJson),
    Pvm {
        projectors: Vec<ComplexMatrix>,
    },
    Dilation {
        dim_s: usize,
        ancilla: ComplexMatrix,
        projectors: Vec<ComplexMatrix>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
        /// `I − Σ Q_i` when the projectors are incomplete. Not an outcome;
        /// recomputed on load.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        completion: Option<ComplexMatrix>,
    },
    Kraus {
        povm: PovmJson,
        /// `corrections[i][l - 1] = N_{l|i}`.
        corrections: Vec<Vec<ComplexMatrix>>,
    },
    Coupling {
        dim_s: usize,
        unitary: ComplexMatrix,
        ancilla_ket: Vec<[f64; 2]>,
        pointer: Vec<ComplexMatrix>,
    },
    Instrument {
        rule: String,
        branches: Vec<BranchJson>,
        average: ComplexMatrix,
    },
}

/// A wire object after invariant checks.
#[derive(Clone, Debug)]
pub enum Loaded {
    Density(DensityMatrix),
    Povm(Povm),
    Pvm(Pvm),
    Dilation(NaimarkDilation),
    Kraus(KrausCorrectionFamily),
    Coupling(CouplingModel),
    Instrument(Vec<BranchJson>),
}

impl Loaded {
    pub fn kind(&self) -> &'static str {
        match self {
            Loaded::Density(_) => "density",
            Loaded::Povm(_) => "povm",
            Loaded::Pvm(_) => "pvm",
            Loaded::Dilation(_) => "dilation",
            Loaded::Kraus(_) => "kraus",
            Loaded::Coupling(_) => "coupling",
            Loaded::Instrument(_) => "instrument",
        }
    }
}

fn povm_from(p: PovmJson) -> nlab_core::error::Result<Povm> {
    match p.labels {
        Some(labels) => Povm::with_labels(p.effects, labels),
        None => nlab_core::qobjects::validate_povm(p.effects),
    }
}

fn povm_json(p: &Povm) -> PovmJson {
    PovmJson {
        effects: p.effects().to_vec(),
        labels: Some(p.labels().to_vec()),
    }
}

fn ket_from(raw: &[[f64; 2]]) -> Vec<C64> {
    raw.iter().map(|&[re, im]| c(re, im)).collect()
}

impl WireObject {
    pub fn density(rho: &DensityMatrix) -> Self {
        WireObject::Density {
            matrix: rho.matrix().clone(),
        }
    }

    pub fn povm(p: &Povm) -> Self {
        WireObject::Povm(povm_json(p))
    }

    pub fn pvm(p: &Pvm) -> Self {
        WireObject::Pvm {
            projectors: p.projectors().to_vec(),
        }
    }

    pub fn dilation(d: &NaimarkDilation) -> Self {
        WireObject::Dilation {
            dim_s: d.dim_s(),
            ancilla: d.ancilla().matrix().clone(),
            projectors: d.pvm().projectors().to_vec(),
            labels: Some(d.labels().to_vec()),
            completion: d.completion(),
        }
    }

    pub fn kraus(k: &KrausCorrectionFamily) -> Self {
        WireObject::Kraus {
            povm: povm_json(k.povm()),
            corrections: k.all_corrections().to_vec(),
        }
    }

    pub fn coupling(cpl: &CouplingModel) -> Self {
        WireObject::Coupling {
            dim_s: cpl.dim_s(),
            unitary: cpl.unitary().clone(),
            ancilla_ket: cpl.ancilla_ket().iter().map(|z| [z.re, z.im]).collect(),
            pointer: cpl.pointer().to_vec(),
        }
    }

    pub fn instrument(rule: &str, out: &InstrumentOutput) -> Self {
        WireObject::Instrument {
            rule: rule.to_string(),
            branches: out
                .branches
                .iter()
                .map(|b| BranchJson {
                    label: b.label.clone(),
                    probability: b.probability,
                    state: b.normalized().map(DensityMatrix::into_matrix),
                })
                .collect(),
            average: out.average.matrix().clone(),
        }
    }

    /// Runs the invariant checks of the tagged type.
    pub fn load(self) -> Result<Loaded, CliError> {
        let r = match self {
            WireObject::Density { matrix } => DensityMatrix::new(matrix).map(Loaded::Density),
            WireObject::Povm(p) => povm_from(p).map(Loaded::Povm),
            WireObject::Pvm { projectors } => Pvm::new(projectors).map(Loaded::Pvm),
            WireObject::Dilation {
                dim_s,
                ancilla,
                projectors,
                labels,
                completion: _,
            } => DensityMatrix::new(ancilla).and_then(|a| {
                let labels = labels.unwrap_or_else(|| (0..projectors.len()).map(|i| i.to_string()).collect());
                NaimarkDilation::with_labels(dim_s, a, projectors, labels).map(Loaded::Dilation)
            }),
            WireObject::Kraus { povm, corrections } => {
                povm_from(povm).and_then(|p| KrausCorrectionFamily::new(p, corrections).map(Loaded::Kraus))
            }
            WireObject::Coupling {
                dim_s,
                unitary,
                ancilla_ket,
                pointer,
            } => CouplingModel::new(dim_s, unitary, ket_from(&ancilla_ket), pointer).map(Loaded::Coupling),
            WireObject::Instrument { branches, average, .. } => {
                return check_instrument(branches, average).map(Loaded::Instrument)
            }
        };
        r.map_err(CliError::from)
    }
}

fn check_instrument(branches: Vec<BranchJson>, average: ComplexMatrix) -> Result<Vec<BranchJson>, CliError> {
    let invalid = |msg: String| CliError::Validation(msg);
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    if (total - 1.0).abs() > 1e-9 || branches.iter().any(|b| b.probability < 0.0) {
        return Err(invalid(format!("branch probabilities sum to {total}")));
    }
    DensityMatrix::new(average)?;
    for b in &branches {
        match &b.state {
            Some(s) => {
                DensityMatrix::new(s.clone())?;
            }
            None if b.probability > 1e-12 => {
                return Err(invalid(format!("branch {} has probability {} but no state", b.label, b.probability)))
            }
            None => {}
        }
    }
    Ok(branches)
}

pub fn parse_object(text: &str) -> Result<WireObject, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

pub fn read_object(path: &Path) -> Result<WireObject, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    parse_object(&text).map_err(|e| match e {
        CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    read_object(path)?.load()
}

fn wrong_kind(path: &Path, want: &str, got: &Loaded) -> CliError {
    CliError::Validation(format!("{}: expected a {want} object, found {}", path.display(), got.kind()))
}

pub fn load_density(path: &Path) -> Result<DensityMatrix, CliError> {
    match load(path)? {
        Loaded::Density(d) => Ok(d),
        other => Err(wrong_kind(path, "density", &other)),
    }
}

/// A POVM from a `povm` file, or the POVM embedded in a `kraus` file.
pub fn load_povm(path: &Path) -> Result<Povm, CliError> {
    match load(path)? {
        Loaded::Povm(p) => Ok(p),
        Loaded::Kraus(k) => Ok(k.povm().clone()),
        Loaded::Pvm(p) => Ok(p.to_povm()?),
        other => Err(wrong_kind(path, "povm", &other)),
    }
}

pub fn load_kraus(path: &Path) -> Result<KrausCorrectionFamily, CliError> {
    match load(path)? {
        Loaded::Kraus(k) => Ok(k),
        other => Err(wrong_kind(path, "kraus", &other)),
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use nlab_core::qobjects::{random_density, random_povm};
    use proptest::prelude::*;

    #[test]
    fn kind_tags() {
        let text = to_json(&WireObject::density(&random_density(2, 1, 0)));
        assert!(text.contains("\"kind\": \"density\""));
        let text = to_json(&WireObject::povm(&random_povm(2, 2, 0)));
        assert!(text.contains("\"kind\": \"povm\""));
        assert!(matches!(parse_object("{\"kind\": \"matrix\"}"), Err(CliError::Parse(_))));
    }

    #[test]
    fn invariant_failures_are_validation_errors() {
        let heavy = WireObject::Density {
            matrix: ComplexMatrix::from_real_diagonal(&[0.6, 0.6]),
        };
        let err = heavy.load().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("residual 2.000e-1"), "{err}");
    }

    #[test]
    fn instrument_checks_probabilities() {
        let b = |p: f64| BranchJson {
            label: "0".into(),
            probability: p,
            state: Some(ComplexMatrix::from_real_diagonal(&[1.0, 0.0])),
        };
        let avg = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert!(check_instrument(vec![b(1.0)], avg.clone()).is_ok());
        assert!(check_instrument(vec![b(0.7)], avg).is_err());
    }

    proptest! {
        #[test]
        fn matrix_round_trip_bits(entries in proptest::collection::vec(any::<(f64, f64)>(), 6)) {
            let data: Vec<C64> = entries
                .iter()
                .map(|&(re, im)| c(if re.is_finite() { re } else { 0.0 }, if im.is_finite() { im } else { 0.0 }))
                .collect();
            let m = ComplexMatrix::new(2, 3, data).unwrap();
            let text = serde_json::to_string(&m).unwrap();
            let back: ComplexMatrix = serde_json::from_str(&text).unwrap();
            for (a, b) in m.row_major().iter().zip(back.row_major()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
            prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
        }
    }
}
