//! Versioned JSON model files.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{check_cells, read_instances_with_schema, AttributeSpec, CsvOptions, Dataset, Instance};
use crate::error::{Error, Result};
use crate::pipeline::{Model, Pipeline};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u64,
    pub pipeline: Pipeline,
    pub schema: Vec<AttributeSpec>,
    pub class_index: usize,
    pub model: Model,
}

impl ModelFile {
    pub fn new(pipeline: Pipeline, training: &Dataset, model: Model) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            pipeline,
            schema: training.schema().to_vec(),
            class_index: training.class_index(),
            model,
        }
    }

    pub fn class_labels(&self) -> &[String] {
        &self.schema[self.class_index].nominal_values
    }

    /// Posterior for an instance laid out like the training schema.
    pub fn predict(&self, inst: &Instance) -> Result<Vec<f64>> {
        check_cells(&self.schema, &inst.cells)?;
        self.model.posterior(inst)
    }

    /// Reads prediction rows from CSV, matching columns by header name.
    pub fn read_input<R: Read>(&self, reader: R, options: &CsvOptions) -> Result<Vec<Instance>> {
        read_instances_with_schema(reader, &self.schema, self.class_index, options)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files serialise")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| parse_error(text, &e))?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(FORMAT_VERSION) => {}
            Some(found) => {
                return Err(Error::UnsupportedVersion {
                    found,
                    supported: FORMAT_VERSION,
                })
            }
            None => {
                return Err(Error::ModelParse {
                    offset: 0,
                    message: "missing integer field 'format_version'".into(),
                })
            }
        }
        // Second pass for typed errors with positions.
        let file: ModelFile = serde_json::from_str(text).map_err(|e| parse_error(text, &e))?;
        if file.class_index >= file.schema.len() {
            return Err(Error::ModelParse {
                offset: 0,
                message: "class index outside the stored schema".into(),
            });
        }
        Ok(file)
    }
}

/// Converts serde's 1-based line / column into a byte offset.
fn parse_error(text: &str, e: &serde_json::Error) -> Error {
    let line = e.line().max(1);
    let offset = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum::<usize>()
        + e.column().saturating_sub(1);
    Error::ModelParse {
        offset: offset.min(text.len()),
        message: e.to_string(),
    }
}

pub fn save_model(file: &ModelFile, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, file.to_json())?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    ModelFile::from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Cell;
    use crate::pipeline::BaseLearner;
    use crate::synth::synthesize_soil_dataset;

    fn trained() -> ModelFile {
        let d = synthesize_soil_dataset(120, 3, 2.0).unwrap();
        let p = Pipeline::base(BaseLearner::j48());
        let m = p.train(&d).unwrap();
        ModelFile::new(p, &d, m)
    }

    #[test]
    fn roundtrip_is_exact() {
        let f = trained();
        assert_eq!(ModelFile::from_json(&f.to_json()).unwrap(), f);
    }

    #[test]
    fn empty_and_truncated_inputs() {
        assert!(matches!(ModelFile::from_json(""), Err(Error::ModelParse { offset: 0, .. })));
        let text = trained().to_json();
        let cut = &text[..text.len() / 2];
        match ModelFile::from_json(cut) {
            Err(Error::ModelParse { offset, .. }) => assert!(offset > 0 && offset <= cut.len()),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn version_checked() {
        let text = trained().to_json().replacen("\"format_version\": 1", "\"format_version\": 7", 1);
        assert!(matches!(
            ModelFile::from_json(&text),
            Err(Error::UnsupportedVersion { found: 7, supported: 1 })
        ));
    }

    #[test]
    fn predict_rejects_wrong_width() {
        let f = trained();
        assert!(matches!(f.predict(&Instance::new(vec![Cell::Missing])), Err(Error::Schema(_))));
    }
}
