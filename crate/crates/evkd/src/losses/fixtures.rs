//! CSV fixtures for cross-implementation loss checks.
//!
//! A fixture records one named loss evaluation: each input tensor
//! (flattened row-major with its shape), the scalar value, and the
//! gradient tensor. Floats are serialized with 17 significant digits so
//! they round-trip exactly.
//!
//! Line format, four comma-separated columns `kind,name,index,value`:
//!
//! ```text
//! loss,sim_kd,0,0
//! shape,student,8x8,0
//! data,student,0,4.99999999999999989e-1
//! value,,0,3.46573590279972643e-1
//! shape,grad,8x8,0
//! data,grad,0,-1.38629436111989057e0
//! ```

use std::fmt::Write as _;

/// A named tensor: shape plus row-major data.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl FixtureTensor {
    pub fn new(name: &str, shape: &[usize], data: Vec<f64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len());
        FixtureTensor {
            name: name.to_string(),
            shape: shape.to_vec(),
            data,
        }
    }
}

/// One loss evaluation: inputs, value, gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LossFixture {
    pub loss: String,
    pub inputs: Vec<FixtureTensor>,
    pub value: f64,
    pub grad: FixtureTensor,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FixtureError {
    #[error("malformed fixture line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("fixture is missing its `{0}` record")]
    Missing(&'static str),
}

fn shape_string(shape: &[usize]) -> String {
    shape
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

fn write_tensor(out: &mut String, tensor: &FixtureTensor) {
    writeln!(out, "shape,{},{},0", tensor.name, shape_string(&tensor.shape)).unwrap();
    for (i, v) in tensor.data.iter().enumerate() {
        writeln!(out, "data,{},{},{:.17e}", tensor.name, i, v).unwrap();
    }
}

pub fn to_csv(fixture: &LossFixture) -> String {
    let mut out = String::new();
    writeln!(out, "loss,{},0,0", fixture.loss).unwrap();
    for tensor in &fixture.inputs {
        write_tensor(&mut out, tensor);
    }
    writeln!(out, "value,,0,{:.17e}", fixture.value).unwrap();
    write_tensor(&mut out, &fixture.grad);
    out
}

pub fn from_csv(text: &str) -> Result<LossFixture, FixtureError> {
    let mut loss: Option<String> = None;
    let mut tensors: Vec<FixtureTensor> = Vec::new();
    let mut value: Option<f64> = None;

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let malformed = |reason: &str| FixtureError::Malformed {
            line: lineno + 1,
            reason: reason.to_string(),
        };
        let mut fields = line.splitn(4, ',');
        let kind = fields.next().ok_or_else(|| malformed("empty line"))?;
        let name = fields.next().ok_or_else(|| malformed("missing name"))?;
        let index = fields.next().ok_or_else(|| malformed("missing index"))?;
        let val = fields.next().ok_or_else(|| malformed("missing value"))?;
        match kind {
            "loss" => loss = Some(name.to_string()),
            "shape" => {
                let shape: Result<Vec<usize>, _> =
                    index.split('x').map(|d| d.parse::<usize>()).collect();
                let shape = shape.map_err(|_| malformed("bad shape"))?;
                tensors.push(FixtureTensor {
                    name: name.to_string(),
                    shape,
                    data: Vec::new(),
                });
            }
            "data" => {
                let tensor = tensors
                    .iter_mut()
                    .rev()
                    .find(|t| t.name == name)
                    .ok_or_else(|| malformed("data before shape"))?;
                let idx: usize = index.parse().map_err(|_| malformed("bad index"))?;
                if idx != tensor.data.len() {
                    return Err(malformed("data rows out of order"));
                }
                tensor
                    .data
                    .push(val.parse().map_err(|_| malformed("bad float"))?);
            }
            "value" => value = Some(val.parse().map_err(|_| malformed("bad float"))?),
            other => return Err(malformed(&format!("unknown record kind `{other}`"))),
        }
    }

    let grad_pos = tensors
        .iter()
        .position(|t| t.name == "grad")
        .ok_or(FixtureError::Missing("grad"))?;
    let grad = tensors.remove(grad_pos);
    for tensor in tensors.iter().chain(std::iter::once(&grad)) {
        if tensor.shape.iter().product::<usize>() != tensor.data.len() {
            return Err(FixtureError::Malformed {
                line: 0,
                reason: format!(
                    "tensor `{}` has {} values for shape {}",
                    tensor.name,
                    tensor.data.len(),
                    shape_string(&tensor.shape)
                ),
            });
        }
    }
    Ok(LossFixture {
        loss: loss.ok_or(FixtureError::Missing("loss"))?,
        inputs: tensors,
        value: value.ok_or(FixtureError::Missing("value"))?,
        grad,
    })
}

/// Deterministic reference evaluations of every loss kernel, suitable for
/// checking a second implementation against this one.
pub fn reference_fixtures() -> Vec<LossFixture> {
    use ndarray::{array, Array2, Array3};

    let mut out = Vec::new();

    let student = super::SimMatrix::new(array![[0.25, -0.5], [1.0, 0.0]]).unwrap();
    let teacher = super::SimMatrix::new(Array2::from_shape_fn((4, 4), |(i, j)| {
        0.1 * i as f64 - 0.2 * j as f64
    }))
    .unwrap();
    let report = super::sim_kd_loss(&student, &teacher).unwrap();
    out.push(LossFixture {
        loss: "sim_kd".into(),
        inputs: vec![
            FixtureTensor::new("student", &[2, 2], student.values().iter().copied().collect()),
            FixtureTensor::new("teacher", &[4, 4], teacher.values().iter().copied().collect()),
        ],
        value: report.value,
        grad: FixtureTensor::new("grad", &[2, 2], report.grad.iter().copied().collect()),
    });

    let student = super::FeatureBlock::new(
        Array3::from_shape_fn((1, 2, 3), |(_, i, c)| 0.3 * i as f64 + 0.1 * c as f64),
    )
    .unwrap();
    let teacher = super::FeatureBlock::new(
        Array3::from_shape_fn((1, 4, 3), |(_, i, c)| 0.2 * i as f64 - 0.05 * c as f64),
    )
    .unwrap();
    let report = super::feat_kd_loss(&student, &teacher).unwrap();
    out.push(LossFixture {
        loss: "feat_kd".into(),
        inputs: vec![
            FixtureTensor::new("student", &[1, 2, 3], student.values().iter().copied().collect()),
            FixtureTensor::new("teacher", &[1, 4, 3], teacher.values().iter().copied().collect()),
        ],
        value: report.value,
        grad: FixtureTensor::new("grad", &[1, 2, 3], report.grad.iter().copied().collect()),
    });

    let target = super::gaussian_heatmap((1.0, 1.0), 0.8, (2, 2)).unwrap();
    let pred = super::Heatmap::new(array![[0.5, 0.25], [0.125, 0.75]]).unwrap();
    let report = super::gwf_loss(&pred, &target).unwrap();
    out.push(LossFixture {
        loss: "gwf".into(),
        inputs: vec![
            FixtureTensor::new("pred", &[2, 2], pred.values().iter().copied().collect()),
            FixtureTensor::new("target", &[2, 2], target.values().iter().copied().collect()),
        ],
        value: report.value,
        grad: FixtureTensor::new("grad", &[2, 2], report.grad.iter().copied().collect()),
    });

    let report = super::response_kd_loss(&pred, &target, super::RESPONSE_KD_TAU).unwrap();
    out.push(LossFixture {
        loss: "response_kd".into(),
        inputs: vec![
            FixtureTensor::new("student", &[2, 2], pred.values().iter().copied().collect()),
            FixtureTensor::new("teacher", &[2, 2], target.values().iter().copied().collect()),
        ],
        value: report.value,
        grad: FixtureTensor::new("grad", &[2, 2], report.grad.iter().copied().collect()),
    });

    let s_map = crate::fourier::ScoreMap::new(array![[0.0, 1.0], [2.0, -1.0]]).unwrap();
    let t_map = crate::fourier::ScoreMap::new(array![[1.0, 0.5], [-0.5, 0.0]]).unwrap();
    let report = crate::fourier::tft_kd_loss(
        std::slice::from_ref(&s_map),
        std::slice::from_ref(&t_map),
    )
    .unwrap();
    out.push(LossFixture {
        loss: "tft_kd".into(),
        inputs: vec![
            FixtureTensor::new("student", &[2, 2], s_map.values().iter().copied().collect()),
            FixtureTensor::new("teacher", &[2, 2], t_map.values().iter().copied().collect()),
        ],
        value: report.value,
        grad: FixtureTensor::new("grad", &[2, 2], report.grad[0].iter().copied().collect()),
    });

    out
}
