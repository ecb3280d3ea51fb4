//! The bundled scenarios, parsed from the files under `fixtures/`.

use crate::format::parse_text;
use crate::fsm::Component;

macro_rules! fixture {
    ($file:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/", $file))
    };
}

pub const SOURCES: &[(&str, &str)] = &[
    ("coffee_spec_M.fsm", fixture!("coffee_spec_M.fsm")),
    ("coffee_iut_M.fsm", fixture!("coffee_iut_M.fsm")),
    ("coffee_spec_M_retry.fsm", fixture!("coffee_spec_M_retry.fsm")),
    ("coffee_spec_D.fsm", fixture!("coffee_spec_D.fsm")),
    ("coffee_iut_D.fsm", fixture!("coffee_iut_D.fsm")),
    ("unspecified_spec1.fsm", fixture!("unspecified_spec1.fsm")),
    ("unspecified_iut1.fsm", fixture!("unspecified_iut1.fsm")),
    ("unspecified_spec2.fsm", fixture!("unspecified_spec2.fsm")),
    ("unspecified_iut2.fsm", fixture!("unspecified_iut2.fsm")),
];

pub fn load(file: &str) -> Component {
    let (_, src) = SOURCES
        .iter()
        .find(|(name, _)| *name == file)
        .unwrap_or_else(|| panic!("no fixture {file}"));
    parse_text(src).unwrap_or_else(|e| panic!("{file}: {e}"))
}

#[derive(Debug, Clone)]
pub struct Coffee {
    pub spec_m: Component,
    pub iut_m: Component,
    pub spec_m_retry: Component,
    pub spec_d: Component,
    pub iut_d: Component,
}

pub fn coffee() -> Coffee {
    Coffee {
        spec_m: load("coffee_spec_M.fsm"),
        iut_m: load("coffee_iut_M.fsm"),
        spec_m_retry: load("coffee_spec_M_retry.fsm"),
        spec_d: load("coffee_spec_D.fsm"),
        iut_d: load("coffee_iut_D.fsm"),
    }
}

#[derive(Debug, Clone)]
pub struct Unspecified {
    pub spec1: Component,
    pub iut1: Component,
    pub spec2: Component,
    pub iut2: Component,
}

pub fn unspecified() -> Unspecified {
    Unspecified {
        spec1: load("unspecified_spec1.fsm"),
        iut1: load("unspecified_iut1.fsm"),
        spec2: load("unspecified_spec2.fsm"),
        iut2: load("unspecified_iut2.fsm"),
    }
}
