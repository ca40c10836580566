//! The twelve measured prototype configurations, with the workspace category
//! each was reported as.
//!
//! Distances are as printed, to the millimetre. Configuration `b` lists
//! `d25 = 3647`, an order of magnitude off its neighbours; it is kept
//! verbatim and `check` reports the inconsistency.

use crate::formats::DistanceFile;
use crate::surface::Category;

pub struct Bundled {
    pub name: &'static str,
    pub text: &'static str,
    pub reported: Category,
}

macro_rules! bundled {
    ($($name:literal => $cat:ident),* $(,)?) => {
        &[$(Bundled {
            name: $name,
            text: include_str!(concat!("../data/", $name, ".dist")),
            reported: Category::$cat,
        }),*]
    };
}

pub const BUNDLED: &[Bundled] = bundled![
    "fig5_a" => GeneralArticulated,
    "fig5_b" => GeneralArticulated,
    "fig5_c" => GeneralArticulated,
    "fig5_d" => PumaLike,
    "fig5_e" => PumaLike,
    "fig5_f" => PumaLike,
    "fig5_g" => Scara,
    "fig5_h" => Scara,
    "fig5_i" => Scara,
    "fig5_j" => Spherical,
    "fig5_k" => Spherical,
    "fig5_l" => Spherical,
];

impl Bundled {
    pub fn load(&self) -> DistanceFile {
        DistanceFile::parse(self.text, self.name).expect("bundled data parses")
    }
}

pub fn find(name: &str) -> Option<&'static Bundled> {
    BUNDLED.iter().find(|b| b.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_files_are_canonical() {
        for b in BUNDLED {
            let f = b.load();
            assert_eq!(f.name.as_deref(), Some(b.name));
            assert_eq!(f.to_canonical_string(), b.text, "{}", b.name);
            assert_eq!(f.distances.d12(), 58.0);
            assert_eq!(f.distances.d34(), 49.0);
            assert_eq!(f.distances.d35(), 455.0);
            assert_eq!(f.distances.d45(), 460.0);
        }
        assert_eq!(BUNDLED.len(), 12);
        assert!(find("fig5_q").is_none());
        assert_eq!(find("fig5_a").unwrap().load().d25, Some(981.0));
    }
}
