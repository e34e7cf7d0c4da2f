//! JSON feeder files.
//!
//! Layout: `buses[]`, `branches[]`, `des[]`, `profiles`, `base`, `sub_rating`.
//! Values are per-unit except `price` ($/MWh), `dt` (hours) and the bases.
//! Profile series are maps from bus id to one value per period; buses that
//! are absent get zeros. The writer always emits every field in a fixed key
//! order, so saving the same feeder twice yields identical bytes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    invalid, Base, Branch, Bus, DesUnit, Feeder, FeederData, FeederError, Profiles, SetPoint,
    DEFAULT_V_MAX, DEFAULT_V_MIN, DEFAULT_V_NOM,
};
use crate::scalar::Scalar;

/// Bus ids may be written as strings or as non-negative integers.
#[derive(Deserialize)]
#[serde(untagged)]
enum IdRepr {
    Str(String),
    Num(u64),
}

impl From<IdRepr> for String {
    fn from(id: IdRepr) -> String {
        match id {
            IdRepr::Str(s) => s,
            IdRepr::Num(n) => n.to_string(),
        }
    }
}

fn de_id<'de, D: serde::Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    IdRepr::deserialize(d).map(Into::into)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct BusFile<T> {
    #[serde(deserialize_with = "de_id")]
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v_min: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v_max: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v_nom: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v_set: Option<SetPoint<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k_tx: Option<T>,
    #[serde(default)]
    substation: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct BranchFile<T> {
    #[serde(deserialize_with = "de_id")]
    from: String,
    #[serde(deserialize_with = "de_id")]
    to: String,
    r: T,
    x: T,
    s_max: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    l_max: Option<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct DesFile<T> {
    #[serde(deserialize_with = "de_id")]
    bus: String,
    s_max: T,
    r_batt: T,
    r_cvt: T,
    e_min: T,
    e_max: T,
    e_surplus: T,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct ProfilesFile<T> {
    #[serde(default = "default_horizon")]
    horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dt: Option<T>,
    #[serde(default = "BTreeMap::new")]
    load_p: BTreeMap<String, Vec<T>>,
    #[serde(default = "BTreeMap::new")]
    load_q: BTreeMap<String, Vec<T>>,
    #[serde(default = "BTreeMap::new")]
    pv: BTreeMap<String, Vec<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    price: Option<Vec<T>>,
}

fn default_horizon() -> usize {
    24
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct BaseFile<T> {
    mva: T,
    kv: T,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct FeederFile<T> {
    buses: Vec<BusFile<T>>,
    branches: Vec<BranchFile<T>>,
    #[serde(default = "Vec::new")]
    des: Vec<DesFile<T>>,
    profiles: ProfilesFile<T>,
    base: BaseFile<T>,
    sub_rating: T,
}

fn dense_series<T: Scalar>(
    name: &str,
    map: BTreeMap<String, Vec<T>>,
    buses: &[Bus<T>],
    horizon: usize,
) -> Result<Vec<Vec<T>>, FeederError> {
    let mut out = vec![vec![T::zero(); horizon]; buses.len()];
    for (id, series) in map {
        let Some(i) = buses.iter().position(|b| b.id == id) else {
            return Err(invalid(format!("profiles.{name}"), format!("unknown bus {id}")));
        };
        if series.len() != horizon {
            return Err(invalid(
                format!("profiles.{name} bus {id}"),
                format!("{} values for horizon {horizon}", series.len()),
            ));
        }
        out[i] = series;
    }
    Ok(out)
}

fn sparse_series<T: Scalar>(series: &[Vec<T>], buses: &[Bus<T>]) -> BTreeMap<String, Vec<T>> {
    series
        .iter()
        .zip(buses)
        .filter(|(s, _)| s.iter().any(|&x| x != T::zero()))
        .map(|(s, b)| (b.id.clone(), s.clone()))
        .collect()
}

impl<T: Scalar> FeederFile<T> {
    fn into_data(self) -> Result<FeederData<T>, FeederError> {
        let buses: Vec<Bus<T>> = self
            .buses
            .into_iter()
            .map(|b| {
                let v_nom = b.v_nom.unwrap_or(T::lit(DEFAULT_V_NOM));
                Bus {
                    id: b.id,
                    v_min: b.v_min.unwrap_or(T::lit(DEFAULT_V_MIN)),
                    v_max: b.v_max.unwrap_or(T::lit(DEFAULT_V_MAX)),
                    v_nom,
                    v_set: b.v_set.unwrap_or(SetPoint::Constant(v_nom)),
                    k_tx: b.k_tx.unwrap_or(T::zero()),
                    is_substation: b.substation,
                }
            })
            .collect();
        let branches = self
            .branches
            .into_iter()
            .map(|b| {
                let l_max = match b.l_max {
                    Some(l) => l,
                    None => {
                        let v_nom = buses
                            .iter()
                            .find(|bus| bus.id == b.from)
                            .map(|bus| bus.v_nom)
                            .ok_or_else(|| {
                                invalid(
                                    format!("branch {}→{}", b.from, b.to),
                                    format!("unknown bus {}", b.from),
                                )
                            })?;
                        b.s_max * b.s_max / v_nom
                    }
                };
                Ok(Branch {
                    from: b.from,
                    to: b.to,
                    r: b.r,
                    x: b.x,
                    s_max: b.s_max,
                    l_max,
                })
            })
            .collect::<Result<Vec<_>, FeederError>>()?;
        let des_units = self
            .des
            .into_iter()
            .map(|d| DesUnit {
                bus: d.bus,
                s_max: d.s_max,
                r_batt: d.r_batt,
                r_cvt: d.r_cvt,
                e_min: d.e_min,
                e_max: d.e_max,
                e_surplus: d.e_surplus,
            })
            .collect();
        let p = self.profiles;
        let h = p.horizon;
        let profiles = Profiles {
            horizon: h,
            dt: p.dt.unwrap_or(T::one()),
            load_p: dense_series("load_p", p.load_p, &buses, h)?,
            load_q: dense_series("load_q", p.load_q, &buses, h)?,
            pv: dense_series("pv", p.pv, &buses, h)?,
            price: p.price,
        };
        Ok(FeederData {
            buses,
            branches,
            des_units,
            profiles,
            sub_rating: self.sub_rating,
            base: Base {
                mva: self.base.mva,
                kv: self.base.kv,
            },
        })
    }

    fn from_data(d: &FeederData<T>) -> Self {
        let buses = d
            .buses
            .iter()
            .map(|b| BusFile {
                id: b.id.clone(),
                v_min: Some(b.v_min),
                v_max: Some(b.v_max),
                v_nom: Some(b.v_nom),
                v_set: Some(b.v_set.clone()),
                k_tx: Some(b.k_tx),
                substation: b.is_substation,
            })
            .collect();
        let branches = d
            .branches
            .iter()
            .map(|b| BranchFile {
                from: b.from.clone(),
                to: b.to.clone(),
                r: b.r,
                x: b.x,
                s_max: b.s_max,
                l_max: Some(b.l_max),
            })
            .collect();
        let des = d
            .des_units
            .iter()
            .map(|u| DesFile {
                bus: u.bus.clone(),
                s_max: u.s_max,
                r_batt: u.r_batt,
                r_cvt: u.r_cvt,
                e_min: u.e_min,
                e_max: u.e_max,
                e_surplus: u.e_surplus,
            })
            .collect();
        let p = &d.profiles;
        Self {
            buses,
            branches,
            des,
            profiles: ProfilesFile {
                horizon: p.horizon,
                dt: Some(p.dt),
                load_p: sparse_series(&p.load_p, &d.buses),
                load_q: sparse_series(&p.load_q, &d.buses),
                pv: sparse_series(&p.pv, &d.buses),
                price: p.price.clone(),
            },
            base: BaseFile {
                mva: d.base.mva,
                kv: d.base.kv,
            },
            sub_rating: d.sub_rating,
        }
    }
}

/// Parses and validates a feeder from JSON text.
pub fn parse_feeder<T: Scalar>(text: &str) -> Result<Feeder<T>, FeederError> {
    let file: FeederFile<T> = serde_json::from_str(text)?;
    Feeder::new(file.into_data()?)
}

pub fn load_feeder<T: Scalar>(path: impl AsRef<Path>) -> Result<Feeder<T>, FeederError> {
    let text = std::fs::read_to_string(path)?;
    parse_feeder(&text)
}

/// Canonical JSON text of a feeder.
pub fn to_json<T: Scalar>(feeder: &Feeder<T>) -> String {
    let mut s = serde_json::to_string_pretty(&FeederFile::from_data(feeder.data()))
        .expect("feeder serializes");
    s.push('\n');
    s
}

pub fn save_feeder<T: Scalar>(feeder: &Feeder<T>, path: impl AsRef<Path>) -> Result<(), FeederError> {
    std::fs::write(path, to_json(feeder))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = r#"{
        "buses": [{"id": 1, "substation": true}, {"id": 2, "v_nom": 1.0}],
        "branches": [{"from": 1, "to": 2, "r": 0.01, "x": 0.01, "s_max": 1.0}],
        "profiles": {"horizon": 1, "load_p": {"2": [0.1]}, "price": [50.0]},
        "base": {"mva": 1.0, "kv": 12.47},
        "sub_rating": 2.0
    }"#;

    #[test]
    fn derives_current_limit() {
        let f: Feeder<f64> = parse_feeder(TWO_BUS).unwrap();
        assert_eq!(f.branches[0].l_max, 1.0);
        assert_eq!(f.buses[1].v_min, DEFAULT_V_MIN);
        assert_eq!(f.profiles.load_p[1], vec![0.1]);
        assert_eq!(f.profiles.load_q[1], vec![0.0]);
    }

    #[test]
    fn cycle_file_rejected() {
        let text = r#"{
            "buses": [{"id": "a", "substation": true}, {"id": "b"}, {"id": "c"}],
            "branches": [
                {"from": "a", "to": "b", "r": 0.01, "x": 0.01, "s_max": 1.0},
                {"from": "b", "to": "c", "r": 0.01, "x": 0.01, "s_max": 1.0},
                {"from": "c", "to": "a", "r": 0.01, "x": 0.01, "s_max": 1.0}
            ],
            "profiles": {"horizon": 1},
            "base": {"mva": 1.0, "kv": 12.47},
            "sub_rating": 2.0
        }"#;
        let err = parse_feeder::<f64>(text).unwrap_err();
        assert!(err.to_string().contains("not radial"), "{err}");
    }

    #[test]
    fn malformed_file_is_parse_error() {
        let err = parse_feeder::<f64>("{ \"buses\": [").unwrap_err();
        assert!(matches!(err, FeederError::Parse(_)));
    }

    #[test]
    fn unknown_profile_bus_rejected() {
        let text = TWO_BUS.replace("\"2\": [0.1]", "\"9\": [0.1]");
        let err = parse_feeder::<f64>(&text).unwrap_err();
        assert!(err.to_string().contains("unknown bus 9"), "{err}");
    }

    #[test]
    fn writer_is_byte_stable() {
        let f: Feeder<f64> = parse_feeder(TWO_BUS).unwrap();
        let a = to_json(&f);
        let g: Feeder<f64> = parse_feeder(&a).unwrap();
        assert_eq!(f, g);
        assert_eq!(a, to_json(&g));
    }

    #[test]
    fn single_precision_roundtrip() {
        let f: Feeder<f32> = parse_feeder(TWO_BUS).unwrap();
        let g: Feeder<f32> = parse_feeder(&to_json(&f)).unwrap();
        assert_eq!(f, g);
    }
}
