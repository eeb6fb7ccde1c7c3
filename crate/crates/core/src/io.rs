//! JSON file forms for set systems and ground families.
//!
//! A member is written as the hex digits of `Σ 2^i` over its elements `i`
//! (most significant digit first, no prefix), so `{0, 3}` over a ground set of
//! any size is `"9"` and the empty set is `"0"`.

use fixedbitset::FixedBitSet;
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::setsys::{GroundFamily, ProductUniverse, SetSystem};

pub fn bits_to_hex(bits: &FixedBitSet) -> String {
    let mut n = BigUint::default();
    for i in bits.ones() {
        n.set_bit(i as u64, true);
    }
    n.to_str_radix(16)
}

/// Parses a hex member; `len` bounds the admissible bit positions.
pub fn hex_to_bits(hex: &str, len: usize) -> Result<FixedBitSet> {
    let digits = hex.strip_prefix("0x").unwrap_or(hex);
    let n = BigUint::parse_bytes(digits.as_bytes(), 16).ok_or_else(|| Error::input(format!("`{hex}` is not hex")))?;
    if n.bits() > len as u64 {
        return Err(Error::input(format!("member `{hex}` has bits beyond position {len}")));
    }
    let mut b = FixedBitSet::with_capacity(len);
    for i in 0..n.bits() {
        b.set(i as usize, n.bit(i));
    }
    Ok(b)
}

/// `{"part_sizes":[…], "members":[hex…]}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetSystemFile {
    pub part_sizes: Vec<usize>,
    pub members: Vec<String>,
}

impl SetSystemFile {
    pub fn to_system(&self) -> Result<SetSystem> {
        let universe = ProductUniverse::new(self.part_sizes.clone())?;
        let total = universe.total();
        let members = self.members.iter().map(|h| hex_to_bits(h, total)).collect::<Result<Vec<_>>>()?;
        SetSystem::new(universe, members)
    }
}

impl From<&SetSystem> for SetSystemFile {
    fn from(s: &SetSystem) -> Self {
        SetSystemFile {
            part_sizes: s.universe().part_sizes().to_vec(),
            members: s.members().iter().map(bits_to_hex).collect(),
        }
    }
}

/// `{"ground_size":k, "members":[hex…]}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundFamilyFile {
    pub ground_size: usize,
    pub members: Vec<String>,
}

impl GroundFamilyFile {
    pub fn to_family(&self) -> Result<GroundFamily> {
        let members = self.members.iter().map(|h| hex_to_bits(h, self.ground_size)).collect::<Result<Vec<_>>>()?;
        GroundFamily::new(self.ground_size, members)
    }
}

impl From<&GroundFamily> for GroundFamilyFile {
    fn from(f: &GroundFamily) -> Self {
        GroundFamilyFile { ground_size: f.ground_size(), members: f.members().iter().map(bits_to_hex).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_members() {
        let mut b = FixedBitSet::with_capacity(70);
        assert_eq!(bits_to_hex(&b), "0");
        b.insert(0);
        b.insert(3);
        assert_eq!(bits_to_hex(&b), "9");
        b.insert(68);
        let h = bits_to_hex(&b);
        assert_eq!(h, "100000000000000009");
        assert_eq!(hex_to_bits(&h, 70).unwrap(), b);
        assert_eq!(hex_to_bits("0x9", 4).unwrap().ones().collect::<Vec<_>>(), vec![0, 3]);
        assert!(hex_to_bits("10", 4).is_err());
        assert!(hex_to_bits("zz", 4).is_err());
    }

    #[test]
    fn system_round_trip() {
        let s = SetSystem::power_set(ProductUniverse::uniform(2, 2).unwrap()).unwrap();
        let f = SetSystemFile::from(&s);
        assert_eq!(f.members.len(), 16);
        assert_eq!(f.to_system().unwrap(), s);
        let g = GroundFamily::from_sets(3, &[vec![], vec![0, 2]]).unwrap();
        let json = serde_json::to_string(&GroundFamilyFile::from(&g)).unwrap();
        assert_eq!(json, r#"{"ground_size":3,"members":["0","5"]}"#);
    }
}
