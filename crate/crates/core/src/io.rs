//! JSON input formats. Complex numbers are `[re, im]` (a bare number is read
//! as a real value); matrices are row-major nested arrays.

use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::algebra::{enumerate_ideals, generate_algebra, FdCStarAlgebra};
use crate::corner::HereditaryContext;
use crate::error::{Error, Result};
use crate::linalg::{matrix_from_rows, ComplexMatrix, ComplexVector, ToleranceConfig, C64};
use crate::states::{make_state, state_from_ray, ProjectivePoint, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cx(pub C64);

impl Serialize for Cx {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cx {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Pair([f64; 2]),
            Real(f64),
        }
        Ok(match Repr::deserialize(d)? {
            Repr::Pair([re, im]) => Cx(C64::new(re, im)),
            Repr::Real(re) => Cx(C64::new(re, 0.0)),
        })
    }
}

pub type MatrixJson = Vec<Vec<Cx>>;

pub fn matrix_from_json(rows: &MatrixJson) -> Result<ComplexMatrix> {
    let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(|c| c.0).collect()).collect();
    matrix_from_rows(&rows)
}

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    m.row_iter().map(|r| r.iter().map(|&c| Cx(c)).collect()).collect()
}

pub fn vector_from_json(v: &[Cx]) -> ComplexVector {
    ComplexVector::from_iterator(v.len(), v.iter().map(|c| c.0))
}

pub fn vector_to_json(v: &ComplexVector) -> Vec<Cx> {
    v.iter().map(|&c| Cx(c)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    pub ambient_dim: usize,
    pub generators: Vec<MatrixJson>,
}

impl AlgebraSpec {
    pub fn build(&self, tol: &ToleranceConfig) -> Result<Arc<FdCStarAlgebra>> {
        let gens = self
            .generators
            .iter()
            .map(|g| {
                let m = matrix_from_json(g)?;
                if m.nrows() != self.ambient_dim || m.ncols() != self.ambient_dim {
                    return Err(Error::shape(
                        format!("{0}x{0}", self.ambient_dim),
                        format!("{}x{}", m.nrows(), m.ncols()),
                    ));
                }
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        generate_algebra(self.ambient_dim, &gens, tol)
    }

    /// Spec whose generators are the algebra's basis.
    pub fn from_algebra(a: &FdCStarAlgebra) -> Self {
        Self { ambient_dim: a.ambient_dim(), generators: a.basis().iter().map(matrix_to_json).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub n: usize,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub blocks: Vec<BlockSummary>,
    pub dim: usize,
    pub ideal_count: usize,
}

impl BlockReport {
    pub fn from_algebra(a: &Arc<FdCStarAlgebra>) -> Result<Self> {
        Ok(Self {
            blocks: a.blocks().iter().map(|b| BlockSummary { n: b.n, m: b.multiplicity }).collect(),
            dim: a.dim(),
            ideal_count: enumerate_ideals(a)?.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaySpec {
    pub fiber: usize,
    pub vector: Vec<Cx>,
}

/// A state given by its values on the algebra's basis, or as a vector state
/// on one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Values { values: Vec<Cx> },
    Ray { ray: RaySpec },
}

impl StateSpec {
    pub fn build(&self, a: &Arc<FdCStarAlgebra>) -> Result<State> {
        match self {
            StateSpec::Values { values } => {
                if values.len() != a.dim() {
                    return Err(Error::shape(format!("{} values", a.dim()), values.len()));
                }
                make_state(a, &vector_from_json(values))
            }
            StateSpec::Ray { ray } => {
                let v = vector_from_json(&ray.vector);
                let n = a.block(ray.fiber).map_err(|_| Error::UnknownBaseIndex(ray.fiber))?.n;
                if v.len() != n {
                    return Err(Error::shape(format!("C^{n}"), format!("C^{}", v.len())));
                }
                state_from_ray(a, &ProjectivePoint::new(ray.fiber, &v, a.tolerances().tol_eq)?)
            }
        }
    }

    pub fn from_state(s: &State) -> Self {
        StateSpec::Values { values: vector_to_json(s.values()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub state: StateSpec,
    pub value: Cx,
}

pub fn samples_from_json(a: &Arc<FdCStarAlgebra>, specs: &[SampleSpec]) -> Result<Vec<(State, C64)>> {
    specs.iter().map(|s| Ok((s.state.build(a)?, s.value.0))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSpec {
    pub algebra: AlgebraSpec,
    pub projection: MatrixJson,
}

impl ContextSpec {
    pub fn build(&self, tol: &ToleranceConfig) -> Result<HereditaryContext> {
        let a = self.algebra.build(tol)?;
        HereditaryContext::new(&a, &matrix_from_json(&self.projection)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn complex_numbers_round_trip() {
        let c: Cx = serde_json::from_str("[1.5, -2]").unwrap();
        assert_eq!(c.0, C64::new(1.5, -2.0));
        let r: Cx = serde_json::from_str("0.25").unwrap();
        assert_eq!(r.0, C64::new(0.25, 0.0));
        let x = 0.1 + 0.2;
        let text = serde_json::to_string(&Cx(C64::new(x, 1.0 / 3.0))).unwrap();
        let back: Cx = serde_json::from_str(&text).unwrap();
        assert_eq!(back.0, C64::new(x, 1.0 / 3.0));
    }

    #[test]
    fn algebra_spec_builds_and_reports() {
        let tol = ToleranceConfig::default();
        let spec: AlgebraSpec = serde_json::from_str(
            r#"{"ambient_dim": 2, "generators": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]}"#,
        )
        .unwrap();
        let a = spec.build(&tol).unwrap();
        let report = BlockReport::from_algebra(&a).unwrap();
        assert_eq!(report.dim, 2);
        assert_eq!(report.blocks, vec![BlockSummary { n: 1, m: 1 }, BlockSummary { n: 1, m: 1 }]);
        assert_eq!(report.ideal_count, 4);
    }

    #[test]
    fn ragged_and_oversized_inputs_are_rejected() {
        let tol = ToleranceConfig::default();
        let ragged: AlgebraSpec =
            serde_json::from_str(r#"{"ambient_dim": 2, "generators": [[[1, 0], [0]]]}"#).unwrap();
        assert!(matches!(ragged.build(&tol), Err(Error::DimensionMismatch { .. })));
        let wrong: AlgebraSpec = serde_json::from_str(r#"{"ambient_dim": 3, "generators": [[[1]]]}"#).unwrap();
        assert!(matches!(wrong.build(&tol), Err(Error::DimensionMismatch { .. })));
        let huge = AlgebraSpec { ambient_dim: 100, generators: vec![] };
        assert!(matches!(huge.build(&tol), Err(Error::AmbientTooLarge { .. })));
    }

    #[test]
    fn state_specs() {
        let tol = ToleranceConfig::default();
        let a = catalog::m2_plus_m3(&tol).unwrap();
        let ray: StateSpec = serde_json::from_str(r#"{"ray": {"fiber": 1, "vector": [0, [0, 1], 0]}}"#).unwrap();
        let s = ray.build(&a).unwrap();
        assert_eq!(s.fiber().unwrap(), 1);
        let again = StateSpec::from_state(&s).build(&a).unwrap();
        assert!((again.values() - s.values()).norm() < 1e-12);
        let bad: StateSpec = serde_json::from_str(r#"{"ray": {"fiber": 4, "vector": [1]}}"#).unwrap();
        assert!(matches!(bad.build(&a), Err(Error::UnknownBaseIndex(4))));
    }
}
