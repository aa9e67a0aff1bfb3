//! Serde adapters writing matrices as lists of rows and vectors as plain lists.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Mat, Vector};

pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub mod mat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        super::super::mat_from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

pub mod vector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(serde::de::Error::custom("vector entries must be finite"));
        }
        Ok(Vector::from_vec(v))
    }
}

pub mod vectors {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Vector], s: S) -> Result<S::Ok, S::Error> {
        let lists: Vec<&[f64]> = v.iter().map(|x| x.as_slice()).collect();
        lists.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vector>, D::Error> {
        let v = Vec::<Vec<f64>>::deserialize(d)?;
        if v.iter().flatten().any(|x| !x.is_finite()) {
            return Err(serde::de::Error::custom("vector entries must be finite"));
        }
        Ok(v.into_iter().map(Vector::from_vec).collect())
    }
}
