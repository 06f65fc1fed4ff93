//! Closed vocabularies of the landmark knowledge schema: scene categories,
//! world-knowledge fields and remote-sensing variables.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The sixteen landmark scene classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Airport,
    AmusementPark,
    Beach,
    Bridge,
    Casino,
    Church,
    GovernmentBuilding,
    HistoricSite,
    Mansion,
    Museum,
    Park,
    Stadium,
    Theater,
    Tower,
    University,
    Forest,
}

impl Category {
    pub const ALL: [Category; 16] = [
        Category::Airport,
        Category::AmusementPark,
        Category::Beach,
        Category::Bridge,
        Category::Casino,
        Category::Church,
        Category::GovernmentBuilding,
        Category::HistoricSite,
        Category::Mansion,
        Category::Museum,
        Category::Park,
        Category::Stadium,
        Category::Theater,
        Category::Tower,
        Category::University,
        Category::Forest,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Category::Airport => "Airport",
            Category::AmusementPark => "Amusement Park",
            Category::Beach => "Beach",
            Category::Bridge => "Bridge",
            Category::Casino => "Casino",
            Category::Church => "Church",
            Category::GovernmentBuilding => "Government Building",
            Category::HistoricSite => "Historic Site",
            Category::Mansion => "Mansion",
            Category::Museum => "Museum",
            Category::Park => "Park",
            Category::Stadium => "Stadium",
            Category::Theater => "Theater",
            Category::Tower => "Tower",
            Category::University => "University",
            Category::Forest => "Forest",
        }
    }

    /// Case-insensitive, whitespace-tolerant lookup by label.
    pub fn from_label(label: &str) -> Option<Category> {
        let wanted = crate::metrics::tokenize(label).join(" ");
        Category::ALL
            .into_iter()
            .find(|c| c.label().to_lowercase() == wanted)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::from_label(s).ok_or_else(|| format!("unknown category {s:?}"))
    }
}

/// World-knowledge fields in canonical order: `(json key, display title)`.
pub const WORLD_FIELDS: [(&str, &str); 14] = [
    ("name", "Name"),
    ("category", "Category"),
    ("area", "Area"),
    ("location", "Location"),
    ("address", "Address"),
    ("physical_area", "Physical Area"),
    ("construction_period", "Construction Period"),
    ("historical_background", "Historical Background"),
    ("major_events", "Major Events"),
    ("architectural_characteristics", "Architectural Characteristics"),
    ("cultural_significance", "Cultural Significance"),
    ("primary_function", "Primary Function"),
    ("notable_visitors", "Notable Visitors"),
    ("details", "Details"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TemporalResolution {
    Annual,
    Monthly,
}

impl fmt::Display for TemporalResolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemporalResolution::Annual => f.write_str("Annual"),
            TemporalResolution::Monthly => f.write_str("Monthly"),
        }
    }
}

/// Static description of one remote-sensing variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RsFieldSpec {
    pub name: &'static str,
    /// Empty for dimensionless quantities.
    pub unit: &'static str,
    pub monthly: bool,
    pub categorical: bool,
    pub source: &'static str,
}

impl RsFieldSpec {
    pub fn allows(&self, resolution: TemporalResolution) -> bool {
        match resolution {
            TemporalResolution::Annual => true,
            TemporalResolution::Monthly => self.monthly,
        }
    }
}

const fn rs(
    name: &'static str,
    unit: &'static str,
    monthly: bool,
    source: &'static str,
) -> RsFieldSpec {
    RsFieldSpec {
        name,
        unit,
        monthly,
        categorical: false,
        source,
    }
}

const fn land_cover(name: &'static str) -> RsFieldSpec {
    RsFieldSpec {
        name,
        unit: "",
        monthly: false,
        categorical: true,
        source: "MODIS (MCD12Q1.061)",
    }
}

const RAD: &str = "MERRA-2 (M2T1NXRAD)";
const LND: &str = "MERRA-2 (M2T1NXLND)";
const SLV: &str = "MERRA-2 (M2T1NXSLV)";
const FLX: &str = "MERRA-2 (M2T1NXFLX)";
const HLS: &str = "HLSL30 (HLS-2)";
const L9: &str = "Landsat 9";
const ERA5: &str = "ERA5 (Daily Aggregates)";

/// Remote-sensing variables in canonical order.
pub const RS_FIELDS: [RsFieldSpec; 39] = [
    rs("Albedo", "", true, RAD),
    rs("Albnirdf", "", true, RAD),
    rs("Albnirdr", "", true, RAD),
    rs("Albvisdf", "", true, RAD),
    rs("Albvisdr", "", true, RAD),
    rs("Emis", "", true, RAD),
    rs("Evland", "mm", true, LND),
    rs("Gwetprof", "", true, LND),
    land_cover("LC_type1"),
    land_cover("LC_type2"),
    land_cover("LC_type3"),
    land_cover("LC_type4"),
    land_cover("LC_type5"),
    rs("LST_Day_1km", "°C", true, "MODIS (MOD11A1.061)"),
    rs("LST_Night_1km", "°C", true, "MODIS (MOD11A1.061)"),
    rs("Prectotland", "mm", true, LND),
    rs("Saa", "°", false, HLS),
    rs("Slp", "Pa", true, SLV),
    rs("Smland", "mm", true, LND),
    rs("Speed", "m/s", true, FLX),
    rs("Sr_b1", "", true, L9),
    rs("Sr_b2", "", true, L9),
    rs("Sr_b3", "", true, L9),
    rs("Sr_b4", "", true, L9),
    rs("Sr_b5", "", true, L9),
    rs("Sr_b6", "", true, L9),
    rs("Sr_b7", "", true, L9),
    rs("Ts", "°C", true, SLV),
    rs("Ulml", "m/s", true, FLX),
    rs("Vaa", "°", false, HLS),
    rs("Vlml", "m/s", true, FLX),
    rs("Vza", "°", false, HLS),
    rs("Mean_2m_air_temperature", "°C", true, ERA5),
    rs("Mean_sea_level_pressure", "Pa", true, "ERA5 Daily Aggregates"),
    rs("Surface_pressure", "Pa", true, ERA5),
    rs("Total_precipitation", "mm", true, ERA5),
    rs("NDVI", "", true, L9),
    rs("NDWI", "", true, L9),
    rs("NDBI", "", true, L9),
];

pub fn rs_field(name: &str) -> Option<&'static RsFieldSpec> {
    RS_FIELDS.iter().find(|f| f.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn vocabularies_have_expected_sizes() {
        assert_eq!(Category::ALL.len(), 16);
        assert_eq!(WORLD_FIELDS.len(), 14);
        let names: HashSet<_> = RS_FIELDS.iter().map(|f| f.name).collect();
        assert_eq!(names.len(), 39);
    }

    #[test]
    fn category_labels_round_trip() {
        for c in Category::ALL {
            assert_eq!(Category::from_label(c.label()), Some(c));
        }
        assert_eq!(
            Category::from_label("  amusement   PARK "),
            Some(Category::AmusementPark)
        );
        assert_eq!(Category::from_label("Volcano"), None);
    }

    #[test]
    fn annual_only_fields() {
        for name in ["LC_type1", "LC_type5", "Saa", "Vaa", "Vza"] {
            let spec = rs_field(name).unwrap();
            assert!(!spec.allows(TemporalResolution::Monthly), "{name}");
        }
        assert!(rs_field("NDVI").unwrap().allows(TemporalResolution::Monthly));
    }
}
